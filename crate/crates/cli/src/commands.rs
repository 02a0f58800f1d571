use std::io::Write;
use std::path::{Path, PathBuf};

use metahmm::eval::{DIV_COLUMN, ENTROPY_COLUMN};
use metahmm::io::{read_sequences, write_sequences};
use metahmm::pipeline::{entropy_curve, mc_traces, oracle_traces, trace_records, SequenceTrace, Unigram};
use metahmm::{
    environment_size, evaluate, generate_dataset, make_split, summarize, DatasetManifest, DatasetPlan, EnvironmentBank,
    EnvironmentConfig, Error, LengthMode, PredictionFormat, PredictionReader, PredictionWriter, Result, Split, TaskSet,
};

use crate::args::*;
use crate::plot;

pub fn dispatch(global: &GlobalArgs, command: &Command) -> Result<()> {
    match command {
        Command::Env(EnvCommand::Size) => {
            println!("{}", environment_size(&load_config(global)?)?);
            Ok(())
        }
        Command::Env(EnvCommand::Dump { out }) => {
            if let Some(out) = out {
                require_parent(out)?;
            }
            let bank = load_bank(global)?;
            match out {
                Some(path) => bank.write_json(path),
                None => write_stdout(&bank.to_json()),
            }
        }
        Command::Split(args) => split(global, args),
        Command::Gen(args) => gen(global, args),
        Command::Oracle(args) => oracle(global, args),
        Command::Mc(args) => mc(global, args),
        Command::Baseline(args) => baseline(global, args),
        Command::Eval(args) => eval(args),
        Command::Plot(args) => plot::run(args),
    }
}

fn load_config(global: &GlobalArgs) -> Result<EnvironmentConfig> {
    let mut config = match &global.config {
        Some(path) => EnvironmentConfig::load(path)?,
        None => EnvironmentConfig::standard(0),
    };
    if let Some(seed) = global.seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn load_bank(global: &GlobalArgs) -> Result<EnvironmentBank> {
    EnvironmentBank::generate(&load_config(global)?)
}

fn not_found(path: &Path, what: &str) -> Error {
    Error::Io { path: path.to_path_buf(), source: std::io::Error::new(std::io::ErrorKind::NotFound, what.to_string()) }
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(not_found(path, "no such file"))
    }
}

fn require_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => {
            Err(not_found(dir, "output directory does not exist"))
        }
        _ => Ok(()),
    }
}

fn write_stdout(text: &str) -> Result<()> {
    std::io::stdout()
        .lock()
        .write_all(text.as_bytes())
        .map_err(|source| Error::Io { path: PathBuf::from("<stdout>"), source })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn read_split(path: Option<&PathBuf>) -> Result<Option<Split>> {
    path.map(|p| Split::read_json(p)).transpose()
}

fn split(global: &GlobalArgs, args: &SplitArgs) -> Result<()> {
    require_parent(&args.out)?;
    let size = environment_size(&load_config(global)?)?;
    let split = make_split(size, args.holdout, args.sample_seed)?;
    write_text(&args.out, &split.to_json())
}

fn gen(global: &GlobalArgs, args: &GenArgs) -> Result<()> {
    if let Some(path) = &args.tasks.split {
        require_file(path)?;
    }
    require_parent(&args.out)?;
    let bank = load_bank(global)?;
    let split = read_split(args.tasks.split.as_ref())?;
    let tasks = args.tasks.subset.resolve(bank.size(), split.as_ref())?;
    let plan = match (args.per_task, args.total) {
        (Some(n), _) => DatasetPlan::PerTask(n),
        (None, Some(n)) => DatasetPlan::Total(n),
        (None, None) => unreachable!("clap requires one of --per-task and --total"),
    };
    let lengths = match args.lengths {
        Lengths::Fixed => LengthMode::Fixed(args.length),
        Lengths::Uniform => LengthMode::Uniform(args.length),
    };
    let sequences = generate_dataset(&bank, &tasks, plan, lengths, args.sample_seed)?;
    write_sequences(&args.out, &sequences)?;
    let manifest = DatasetManifest::new(
        &bank,
        split.as_ref(),
        &args.tasks.subset,
        &tasks,
        plan,
        lengths,
        args.sample_seed,
        sequences.len() as u64,
    );
    write_text(&manifest_path(&args.out), &manifest.to_json())
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Inputs shared by the oracle and Monte Carlo commands.
struct PredictionRun {
    bank: EnvironmentBank,
    tasks: Vec<u64>,
    sequences: Vec<metahmm::SequenceRecord>,
}

fn prepare(
    global: &GlobalArgs,
    sequences: &Path,
    tasks: &TaskArgs,
    output: &PredictOutput,
    extra: Option<&PathBuf>,
) -> Result<PredictionRun> {
    require_file(sequences)?;
    if let Some(path) = &tasks.split {
        require_file(path)?;
    }
    require_parent(&output.out)?;
    if let Some(path) = extra {
        require_parent(path)?;
    }
    let bank = load_bank(global)?;
    let split = read_split(tasks.split.as_ref())?;
    let indices = tasks.subset.resolve(bank.size(), split.as_ref())?;
    let sequences = read_sequences(sequences)?;
    Ok(PredictionRun { bank, tasks: indices, sequences })
}

fn write_traces(
    traces: &[SequenceTrace],
    output: &PredictOutput,
    symbols: usize,
    entropy: Option<&PathBuf>,
) -> Result<()> {
    let mut writer = PredictionWriter::create(&output.out, output.format.into(), symbols)?;
    for record in trace_records(traces) {
        writer.write(&record)?;
    }
    writer.finish()?;
    if let Some(path) = entropy {
        entropy_curve(traces).write_csv(path, ENTROPY_COLUMN)?;
    }
    Ok(())
}

fn oracle(global: &GlobalArgs, args: &OracleArgs) -> Result<()> {
    let run = prepare(global, &args.sequences, &args.tasks, &args.output, args.entropy.as_ref())?;
    let tasks = TaskSet::new(&run.bank, &run.tasks)?;
    let traces = oracle_traces(&tasks, None, &run.sequences)?;
    write_traces(&traces, &args.output, tasks.symbols(), args.entropy.as_ref())
}

fn mc(global: &GlobalArgs, args: &McArgs) -> Result<()> {
    let run = prepare(global, &args.sequences, &args.tasks, &args.output, args.entropy.as_ref())?;
    let tasks = TaskSet::new(&run.bank, &run.tasks)?;
    let traces = mc_traces(&tasks, None, &run.sequences, args.samples, args.sample_seed)?;
    write_traces(&traces, &args.output, tasks.symbols(), args.entropy.as_ref())
}

fn baseline(global: &GlobalArgs, args: &BaselineArgs) -> Result<()> {
    require_file(&args.train)?;
    require_file(&args.sequences)?;
    require_parent(&args.output.out)?;
    let symbols = load_config(global)?.symbols;
    let model = Unigram::fit(&read_sequences(&args.train)?, symbols)?;
    let sequences = read_sequences(&args.sequences)?;
    let mut writer = PredictionWriter::create(&args.output.out, PredictionFormat::from(args.output.format), symbols)?;
    for record in model.records(&sequences) {
        writer.write(&record)?;
    }
    writer.finish()
}

fn eval(args: &EvalArgs) -> Result<()> {
    require_file(&args.predictions)?;
    require_file(&args.reference)?;
    require_parent(&args.out)?;
    if let Some(path) = &args.summary {
        require_parent(path)?;
    }
    let predictions = PredictionReader::open(&args.predictions)?;
    let reference = PredictionReader::open(&args.reference)?;
    if predictions.symbols() != reference.symbols() {
        return Err(Error::Validation(format!(
            "{} has {} symbols but {} has {}",
            args.predictions.display(),
            predictions.symbols(),
            args.reference.display(),
            reference.symbols()
        )));
    }
    let curve = evaluate(predictions, reference)?;
    curve.write_csv(&args.out, DIV_COLUMN)?;
    let mut summary = summarize(&curve, args.window.clone())?;
    summary.subset = args.subset.clone();
    match &args.summary {
        Some(path) => write_text(path, &summary.to_json()),
        None => write_stdout(&summary.to_json()),
    }
}
