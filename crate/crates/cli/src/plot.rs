use std::error::Error as StdError;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use metahmm::{Curve, Error, Result};
use plotters::coord::Shift;
use plotters::prelude::*;
use plotters::style::{register_font, FontStyle};

use crate::args::PlotArgs;

const SIZE: (u32, u32) = (960, 600);
const COLORS: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
];

struct Series {
    label: String,
    curve: Curve,
}

pub fn run(args: &PlotArgs) -> Result<()> {
    let mut series = Vec::new();
    let mut columns = Vec::new();
    for input in &args.input {
        let (label, path) = match input.split_once('=') {
            Some((label, path)) => (label.to_string(), PathBuf::from(path)),
            None => {
                let path = PathBuf::from(input);
                let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                (stem, path)
            }
        };
        let (column, curve) = Curve::read_csv(&path)?;
        if curve.points.is_empty() {
            return Err(Error::Validation(format!("{}: no data rows", path.display())));
        }
        columns.push(column);
        series.push(Series { label, curve });
    }
    columns.dedup();
    let y_label = if columns.len() == 1 { columns.remove(0) } else { "value".to_string() };
    let title = args.title.clone().unwrap_or_default();

    let failed =
        |e: Box<dyn StdError>| Error::Io { path: args.out.clone(), source: std::io::Error::other(e.to_string()) };
    let svg = match args.out.extension().and_then(|e| e.to_str()) {
        Some("svg") => true,
        Some("png") => false,
        _ => return Err(Error::Argument(format!("{}: output must end in .svg or .png", args.out.display()))),
    };
    load_font(&args.font)?;
    if svg {
        draw(SVGBackend::new(&args.out, SIZE).into_drawing_area(), &series, &title, &y_label).map_err(failed)
    } else {
        draw(BitMapBackend::new(&args.out, SIZE).into_drawing_area(), &series, &title, &y_label).map_err(failed)
    }
}

/// Registers the font once per process; text layout needs glyph metrics.
fn load_font(path: &Path) -> Result<()> {
    static LOADED: OnceLock<()> = OnceLock::new();
    if LOADED.get().is_some() {
        return Ok(());
    }
    let bytes = std::fs::read(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let bytes: &'static [u8] = Box::leak(bytes.into_boxed_slice());
    register_font("sans-serif", FontStyle::Normal, bytes)
        .map_err(|_| Error::Validation(format!("{}: not a usable TrueType font", path.display())))?;
    let _ = LOADED.set(());
    Ok(())
}

fn draw<DB: DrawingBackend>(
    root: DrawingArea<DB, Shift>,
    series: &[Series],
    title: &str,
    y_label: &str,
) -> std::result::Result<(), Box<dyn StdError>>
where
    DB::ErrorType: 'static,
{
    root.fill(&WHITE)?;
    let points = || series.iter().flat_map(|s| s.curve.points.iter());
    let x_max = points().map(|p| p.t).max().unwrap_or(0).max(1);
    let y_max = points().map(|p| p.mean + p.stderr).fold(0.0, f64::max);
    let y_max = if y_max > 0.0 { y_max * 1.05 } else { 1.0 };

    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 24))
        .margin(16)
        .x_label_area_size(40)
        .y_label_area_size(64)
        .build_cartesian_2d(0u32..x_max, 0.0..y_max)?;
    chart.configure_mesh().x_desc("t (context length)").y_desc(y_label).draw()?;

    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let band: Vec<(u32, f64)> = s
            .curve
            .points
            .iter()
            .map(|p| (p.t, p.mean + p.stderr))
            .chain(s.curve.points.iter().rev().map(|p| (p.t, (p.mean - p.stderr).max(0.0))))
            .collect();
        chart.draw_series(std::iter::once(Polygon::new(band, color.mix(0.2).filled())))?;
        chart
            .draw_series(LineSeries::new(s.curve.points.iter().map(|p| (p.t, p.mean)), color.stroke_width(2)))?
            .label(s.label.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .position(SeriesLabelPosition::UpperRight)
        .draw()?;
    root.present()?;
    Ok(())
}
