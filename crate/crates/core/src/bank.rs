//! Shared building blocks of an environment and HMM construction from a
//! latent code.
//!
//! Layout of the blocks:
//!
//! * Base cycles: uniformly random cyclic orders over all states. Step-size
//!   `k` follows the cycle `k` positions ahead; the reversed direction walks
//!   it backwards.
//! * Cycle families: states are dealt round-robin to families (`s mod n_f`).
//!   Each group of a family shuffles the family's states and chops them into
//!   vertex-disjoint cycles (length from [`family_cycle_length`]); leftover
//!   states get no family edge.
//! * Emission groups: states are split into `g_e` contiguous groups whose
//!   sizes differ by at most one. Group `j` owns the symbol block
//!   `[j B, (j + 1) B)` with `B = V / g_e`, and each of its mappings sends its
//!   states injectively into that block. The shift rotates every group's
//!   mapping inside its block.
//!
//! Outgoing edges from all selected cycles are merged, duplicates collapse,
//! and each state moves uniformly to its distinct targets.

use std::collections::HashSet;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::code::{Choices, CodeSpace, LatentCode};
use crate::config::EnvironmentConfig;
use crate::error::{Error, Result};
use crate::hmm::{Hmm, Matrix};
use crate::rng::KeyedRng;

/// Environments at most this large are enumerated after generation and
/// regenerated (with the next attempt counter) if two codes build the same HMM.
pub const COLLISION_CHECK_LIMIT: u64 = 200;
const MAX_ATTEMPTS: u64 = 32;
const MAX_REDRAWS: u64 = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentBank {
    pub config: EnvironmentConfig,
    /// Generation attempt that produced this bank (0 unless a small
    /// environment had to be redrawn to remove collisions).
    pub attempt: u64,
    /// Each entry is a cyclic order over all states.
    pub base_cycles: Vec<Vec<usize>>,
    /// `family_groups[f][g]` is a list of vertex-disjoint cycles.
    pub family_groups: Vec<Vec<Vec<Vec<usize>>>>,
    /// `emission_mappings[j][m][l]` is the symbol of the `l`-th state of
    /// emission group `j` under mapping `m`, before shifting.
    pub emission_mappings: Vec<Vec<Vec<usize>>>,
}

/// Contiguous near-equal partition of `0..n` into `groups` ranges.
pub fn emission_group_ranges(n: usize, groups: usize) -> Vec<Range<usize>> {
    let base = n / groups;
    let extra = n % groups;
    let mut start = 0;
    (0..groups)
        .map(|j| {
            let len = base + usize::from(j < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

/// Length of every family cycle: `max(2, N / (2 n_f))`, raised where the
/// families have room so that every (step-size, direction) traversal is a
/// distinct permutation (`L > 2 s_f` with two directions, `L > s_f` with one).
pub fn family_cycle_length(config: &EnvironmentConfig) -> usize {
    let nominal = (config.hidden_states / (2 * config.families)).max(2);
    let distinct =
        if config.family_directions == 2 { 2 * config.family_step_sizes + 1 } else { config.family_step_sizes + 1 };
    let room = (0..config.families).map(|f| family_states(config, f).len()).min().unwrap_or(0);
    nominal.max(distinct.min(room))
}

/// States dealt to family `f`.
pub fn family_states(config: &EnvironmentConfig, f: usize) -> Vec<usize> {
    (0..config.hidden_states).filter(|s| s % config.families == f).collect()
}

/// Successor of the state at position `pos` on a cycle of length `len`.
fn step_position(pos: usize, len: usize, step: usize, reversed: bool) -> usize {
    let k = step % len;
    if reversed {
        (pos + len - k) % len
    } else {
        (pos + k) % len
    }
}

/// Directed edges of a cycle traversed with the given step and direction.
fn cycle_edges(cycle: &[usize], step: usize, reversed: bool) -> impl Iterator<Item = (usize, usize)> + '_ {
    let len = cycle.len();
    (0..len).map(move |p| (cycle[p], cycle[step_position(p, len, step, reversed)]))
}

fn sorted_edges<'a>(
    cycles: impl IntoIterator<Item = &'a Vec<usize>>,
    step: usize,
    reversed: bool,
) -> Vec<(usize, usize)> {
    let mut edges: Vec<_> = cycles.into_iter().flat_map(|c| cycle_edges(c, step, reversed)).collect();
    edges.sort_unstable();
    edges
}

fn rotate_in_block(symbol: usize, block: &Range<usize>, shift: usize) -> usize {
    let len = block.len();
    block.start + (symbol - block.start + shift) % len
}

impl EnvironmentBank {
    /// Builds the bank for `config`. Pure in `(config, config.seed)`.
    pub fn generate(config: &EnvironmentConfig) -> Result<Self> {
        config.validate()?;
        let size = crate::config::environment_size(config)?;
        let mut bank = Self::generate_attempt(config, 0)?;
        if size <= COLLISION_CHECK_LIMIT {
            let mut attempt = 0;
            while bank.count_distinct_hmms() < size && attempt + 1 < MAX_ATTEMPTS {
                attempt += 1;
                bank = Self::generate_attempt(config, attempt)?;
            }
        }
        Ok(bank)
    }

    fn generate_attempt(config: &EnvironmentConfig, attempt: u64) -> Result<Self> {
        let seed = config.seed;
        let n = config.hidden_states;

        // Base cycles, redrawn while any (step, direction) variant repeats an
        // earlier cycle's variant.
        let variants = |cycle: &Vec<usize>| -> Vec<Vec<(usize, usize)>> {
            let mut out = Vec::new();
            for step in 1..=config.base_step_sizes {
                for dir in 0..config.base_directions {
                    out.push(sorted_edges([cycle], step, dir == 1));
                }
            }
            out
        };
        let mut base_cycles: Vec<Vec<usize>> = Vec::with_capacity(config.base_cycles);
        let mut seen: HashSet<Vec<(usize, usize)>> = HashSet::new();
        for i in 0..config.base_cycles {
            let mut chosen = None;
            for redraw in 0..MAX_REDRAWS {
                let mut rng = KeyedRng::new(seed, "base", &[attempt, i as u64, redraw]);
                let mut order: Vec<usize> = (0..n).collect();
                rng.shuffle(&mut order);
                let fresh = variants(&order).iter().all(|v| !seen.contains(v));
                let last = redraw + 1 == MAX_REDRAWS;
                if fresh || last {
                    chosen = Some(order);
                    break;
                }
            }
            let order = chosen.expect("at least one draw");
            seen.extend(variants(&order));
            base_cycles.push(order);
        }

        let cycle_len = family_cycle_length(config);
        let mut family_groups = Vec::with_capacity(config.families);
        for f in 0..config.families {
            let states = family_states(config, f);
            if states.len() < cycle_len {
                return Err(Error::Generation(format!(
                    "family {f} owns {} states, fewer than its cycle length {cycle_len}",
                    states.len()
                )));
            }
            let mut groups: Vec<Vec<Vec<usize>>> = Vec::with_capacity(config.groups_per_family);
            let mut seen: HashSet<Vec<(usize, usize)>> = HashSet::new();
            for g in 0..config.groups_per_family {
                let mut chosen = None;
                for redraw in 0..MAX_REDRAWS {
                    let mut rng = KeyedRng::new(seed, "family", &[attempt, f as u64, g as u64, redraw]);
                    let mut order = states.clone();
                    rng.shuffle(&mut order);
                    let cycles: Vec<Vec<usize>> = order.chunks_exact(cycle_len).map(<[usize]>::to_vec).collect();
                    let key = sorted_edges(&cycles, 1, false);
                    if !seen.contains(&key) || redraw + 1 == MAX_REDRAWS {
                        seen.insert(key);
                        chosen = Some(cycles);
                        break;
                    }
                }
                groups.push(chosen.expect("at least one draw"));
            }
            family_groups.push(groups);
        }

        let ranges = emission_group_ranges(n, config.emission_groups);
        let block_len = config.symbol_block_size();
        let shifts = config.shifts;
        let mut emission_mappings = Vec::with_capacity(config.emission_groups);
        for (j, range) in ranges.iter().enumerate() {
            let block = j * block_len..(j + 1) * block_len;
            let mut mappings: Vec<Vec<usize>> = Vec::with_capacity(config.emissions_per_group);
            for m in 0..config.emissions_per_group {
                let mut chosen = None;
                for redraw in 0..MAX_REDRAWS {
                    let mut rng = KeyedRng::new(seed, "emission", &[attempt, j as u64, m as u64, redraw]);
                    let mut symbols: Vec<usize> = block.clone().collect();
                    rng.shuffle(&mut symbols);
                    symbols.truncate(range.len());
                    let clash = (1..shifts).any(|d| {
                        let rotated: Vec<usize> = symbols.iter().map(|&s| rotate_in_block(s, &block, d)).collect();
                        rotated == symbols
                    }) || mappings.iter().any(|other| {
                        (0..shifts).any(|d| {
                            let a: Vec<usize> = other.iter().map(|&s| rotate_in_block(s, &block, d)).collect();
                            let b: Vec<usize> = symbols.iter().map(|&s| rotate_in_block(s, &block, d)).collect();
                            a == symbols || b == *other
                        })
                    });
                    if !clash || redraw + 1 == MAX_REDRAWS {
                        chosen = Some(symbols);
                        break;
                    }
                }
                mappings.push(chosen.expect("at least one draw"));
            }
            emission_mappings.push(mappings);
        }

        Ok(Self { config: config.clone(), attempt, base_cycles, family_groups, emission_mappings })
    }

    /// Assembles a bank from explicit blocks, checking every structural
    /// invariant.
    pub fn from_parts(
        config: EnvironmentConfig,
        base_cycles: Vec<Vec<usize>>,
        family_groups: Vec<Vec<Vec<Vec<usize>>>>,
        emission_mappings: Vec<Vec<Vec<usize>>>,
    ) -> Result<Self> {
        let bank = Self { config, attempt: 0, base_cycles, family_groups, emission_mappings };
        bank.check()?;
        Ok(bank)
    }

    /// Loads a bank dump written by [`EnvironmentBank::write_json`].
    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let bank: Self = serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        bank.check()?;
        Ok(bank)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("bank serializes");
        text.push('\n');
        text
    }

    pub fn check(&self) -> Result<()> {
        let config = &self.config;
        config.validate()?;
        let n = config.hidden_states;
        let bad = |msg: String| Err(Error::Validation(msg));

        if self.base_cycles.len() != config.base_cycles {
            return bad(format!("expected {} base cycles, found {}", config.base_cycles, self.base_cycles.len()));
        }
        for (i, cycle) in self.base_cycles.iter().enumerate() {
            let mut sorted = cycle.clone();
            sorted.sort_unstable();
            if sorted != (0..n).collect::<Vec<_>>() {
                return bad(format!("base cycle {i} does not visit every state exactly once"));
            }
        }

        if self.family_groups.len() != config.families {
            return bad(format!("expected {} families, found {}", config.families, self.family_groups.len()));
        }
        for (f, groups) in self.family_groups.iter().enumerate() {
            if groups.len() != config.groups_per_family {
                return bad(format!("family {f} has {} groups, expected {}", groups.len(), config.groups_per_family));
            }
            for (g, cycles) in groups.iter().enumerate() {
                let mut used = vec![false; n];
                for cycle in cycles {
                    if cycle.is_empty() {
                        return bad(format!("family {f} group {g} contains an empty cycle"));
                    }
                    for &s in cycle {
                        if s >= n || used[s] {
                            return bad(format!("family {f} group {g} cycles are not vertex-disjoint"));
                        }
                        used[s] = true;
                    }
                }
            }
        }

        let ranges = emission_group_ranges(n, config.emission_groups);
        let block_len = config.symbol_block_size();
        if self.emission_mappings.len() != config.emission_groups {
            return bad("emission mapping count does not match emission_groups".into());
        }
        for (j, (maps, range)) in self.emission_mappings.iter().zip(&ranges).enumerate() {
            if maps.len() != config.emissions_per_group {
                return bad(format!("emission group {j} has {} mappings", maps.len()));
            }
            let block = j * block_len..(j + 1) * block_len;
            for (m, map) in maps.iter().enumerate() {
                let distinct: HashSet<_> = map.iter().collect();
                if map.len() != range.len() || distinct.len() != map.len() || map.iter().any(|s| !block.contains(s)) {
                    return bad(format!("emission group {j} mapping {m} is not an injective map into its block"));
                }
            }
        }
        Ok(())
    }

    pub fn code_space(&self) -> CodeSpace {
        CodeSpace::new(self.config.radices()).expect("validated config")
    }

    pub fn size(&self) -> u64 {
        self.code_space().size()
    }

    pub fn hmm_at(&self, index: u64) -> Result<Hmm> {
        let code = self.code_space().index_to_code(index)?;
        self.build_hmm(&code)
    }

    /// Materializes the HMM selected by `code`.
    pub fn build_hmm(&self, code: &LatentCode) -> Result<Hmm> {
        self.code_space().check(code)?;
        let config = &self.config;
        let choices = Choices::from_code(config, code);
        let n = config.hidden_states;
        let v = config.symbols;

        let mut targets: Vec<Vec<usize>> = vec![Vec::with_capacity(1 + config.families); n];
        let mut add = |(src, dst): (usize, usize)| {
            if !targets[src].contains(&dst) {
                targets[src].push(dst);
            }
        };
        cycle_edges(&self.base_cycles[choices.base_cycle], choices.base_step, choices.base_reversed).for_each(&mut add);
        for (f, &g) in choices.family_groups.iter().enumerate() {
            for cycle in &self.family_groups[f][g] {
                cycle_edges(cycle, choices.family_step, choices.family_reversed).for_each(&mut add);
            }
        }
        let mut transition = Matrix::zeros(n, n);
        for (i, row) in targets.iter().enumerate() {
            let p = 1.0 / row.len() as f64;
            for &j in row {
                transition.set(i, j, p);
            }
        }

        let eps = config.emission_smoothing;
        let block_len = config.symbol_block_size();
        let mut emission = Matrix::zeros(n, v);
        for (j, range) in emission_group_ranges(n, config.emission_groups).into_iter().enumerate() {
            let block = j * block_len..(j + 1) * block_len;
            let map = &self.emission_mappings[j][choices.mappings[j]];
            for (l, state) in range.enumerate() {
                let symbol = rotate_in_block(map[l], &block, choices.shift);
                let row = emission.row_mut(state);
                if eps > 0.0 {
                    let noise = eps / block_len as f64;
                    row[block.clone()].iter_mut().for_each(|p| *p = noise);
                    row[symbol] += 1.0 - eps;
                } else {
                    row[symbol] = 1.0;
                }
            }
        }

        Ok(Hmm { transition, emission, initial: vec![1.0 / n as f64; n] })
    }

    /// Number of pairwise-distinct (transition, emission) pairs over every
    /// code of the environment.
    pub fn count_distinct_hmms(&self) -> u64 {
        let space = self.code_space();
        let mut seen = HashSet::new();
        for code in space.iter() {
            let hmm = self.build_hmm(&code).expect("enumerated code is valid");
            let key: Vec<u64> =
                hmm.transition.as_slice().iter().chain(hmm.emission.as_slice()).map(|x| x.to_bits()).collect();
            seen.insert(key);
        }
        seen.len() as u64
    }
}

/// Builds the bank for `config`.
pub fn generate_bank(config: &EnvironmentConfig) -> Result<EnvironmentBank> {
    EnvironmentBank::generate(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn config48() -> EnvironmentConfig {
        EnvironmentConfig {
            hidden_states: 4,
            symbols: 6,
            base_cycles: 2,
            base_step_sizes: 1,
            base_directions: 2,
            families: 1,
            groups_per_family: 2,
            family_directions: 1,
            family_step_sizes: 1,
            emission_groups: 1,
            emissions_per_group: 3,
            shifts: 2,
            emission_smoothing: 0.0,
            seed: 0,
        }
    }

    #[test]
    fn near_equal_ranges() {
        let r = emission_group_ranges(20, 3);
        assert_eq!(r, vec![0..7, 7..14, 14..20]);
        assert_eq!(emission_group_ranges(6, 2), vec![0..3, 3..6]);
    }

    #[test]
    fn deterministic() {
        let config = EnvironmentConfig::standard(0);
        let a = generate_bank(&config).unwrap();
        let b = generate_bank(&config).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let c = generate_bank(&EnvironmentConfig::standard(1)).unwrap();
        assert_ne!(a.base_cycles, c.base_cycles);
    }

    #[test]
    fn standard_base_cycles_visit_all_states() {
        let bank = generate_bank(&EnvironmentConfig::standard(0)).unwrap();
        assert_eq!(bank.base_cycles.len(), 4);
        for cycle in &bank.base_cycles {
            // walk the cycle through its successor map
            let mut next = [usize::MAX; 20];
            for p in 0..20 {
                next[cycle[p]] = cycle[(p + 1) % 20];
            }
            let mut visited = [false; 20];
            let mut s = cycle[0];
            for _ in 0..20 {
                assert!(!visited[s]);
                visited[s] = true;
                s = next[s];
            }
            assert_eq!(s, cycle[0]);
            assert!(visited.iter().all(|&v| v));
        }
    }

    #[test]
    fn family_groups_are_disjoint_small_cycles() {
        let config = EnvironmentConfig::standard(3);
        let bank = generate_bank(&config).unwrap();
        let len = family_cycle_length(&config);
        assert_eq!(len, 5);
        for (f, groups) in bank.family_groups.iter().enumerate() {
            let owned = family_states(&config, f);
            for cycles in groups {
                assert_eq!(cycles.len(), owned.len() / len);
                let mut all: Vec<usize> = cycles.iter().flatten().copied().collect();
                assert!(cycles.iter().all(|c| c.len() == len));
                all.sort_unstable();
                all.dedup();
                assert_eq!(all.len(), cycles.len() * len);
                assert!(all.iter().all(|s| owned.contains(s)));
            }
        }
    }

    #[test]
    fn family_cycle_length_rule() {
        // nominal length 3 would make forward step 2 equal reverse step 1
        assert_eq!(family_cycle_length(&EnvironmentConfig::standard(0)), 5);
        let one_way = EnvironmentConfig { family_directions: 1, ..EnvironmentConfig::standard(0) };
        assert_eq!(family_cycle_length(&one_way), 3);
        // capped by the smallest family
        let cramped = EnvironmentConfig { family_step_sizes: 3, ..EnvironmentConfig::standard(0) };
        assert_eq!(family_cycle_length(&cramped), 6);
        assert_eq!(family_cycle_length(&config48()), 2);
    }

    #[test]
    fn standard_environment_has_no_collisions() {
        let bank = generate_bank(&EnvironmentConfig::standard(0)).unwrap();
        assert_eq!(bank.count_distinct_hmms(), 12_288);
    }

    #[test]
    fn emission_blocks_are_disjoint() {
        let config = EnvironmentConfig::standard(0);
        let bank = generate_bank(&config).unwrap();
        let block = config.symbol_block_size();
        for (j, maps) in bank.emission_mappings.iter().enumerate() {
            for map in maps {
                assert!(map.iter().all(|&s| s / block == j));
            }
        }
    }

    #[test]
    fn infeasible_family_geometry() {
        let config = EnvironmentConfig { families: 3, groups_per_family: 1, ..config48() };
        assert!(matches!(generate_bank(&config), Err(Error::Generation(_))));
    }

    #[test]
    fn transition_rows_have_bounded_equal_support() {
        let config = EnvironmentConfig::standard(0);
        let bank = generate_bank(&config).unwrap();
        let space = bank.code_space();
        for index in (0..space.size()).step_by(97) {
            let hmm = bank.hmm_at(index).unwrap();
            hmm.validate(1e-12).unwrap();
            for i in 0..20 {
                let nz: Vec<f64> = hmm.transition.row(i).iter().copied().filter(|&p| p > 0.0).collect();
                assert!(nz.len() <= 1 + config.families);
                assert!(nz.iter().all(|&p| p == nz[0]));
            }
        }
    }

    #[test]
    fn exhaustive_small_environment() {
        let bank = generate_bank(&config48()).unwrap();
        assert_eq!(bank.size(), 48);
        for code in bank.code_space().iter() {
            let hmm = bank.build_hmm(&code).unwrap();
            hmm.validate(1e-12).unwrap();
            for i in 0..4 {
                let nz = hmm.transition.row(i).iter().filter(|&&p| p > 0.0).count();
                assert!((1..=2).contains(&nz));
            }
        }
        assert_eq!(bank.count_distinct_hmms(), 48);
    }

    #[test]
    fn coinciding_family_cycle_gives_permutation() {
        // Two states: the only family cycle is the base cycle itself.
        let config = EnvironmentConfig {
            hidden_states: 2,
            symbols: 2,
            base_cycles: 1,
            base_step_sizes: 1,
            base_directions: 1,
            families: 1,
            groups_per_family: 1,
            family_directions: 1,
            family_step_sizes: 1,
            emission_groups: 1,
            emissions_per_group: 1,
            shifts: 1,
            emission_smoothing: 0.0,
            seed: 9,
        };
        let bank = generate_bank(&config).unwrap();
        let hmm = bank.hmm_at(0).unwrap();
        assert_eq!(hmm.transition.as_slice(), &[0.0, 1.0, 1.0, 0.0]);

        // Four states with a hand-built family group equal to the base cycle.
        let config = EnvironmentConfig { hidden_states: 4, symbols: 4, seed: 0, ..config };
        let cycle = vec![2, 0, 3, 1];
        let bank = EnvironmentBank::from_parts(
            config,
            vec![cycle.clone()],
            vec![vec![vec![cycle.clone()]]],
            vec![vec![vec![0, 1, 2, 3]]],
        )
        .unwrap();
        let hmm = bank.hmm_at(0).unwrap();
        let mut expected = Matrix::zeros(4, 4);
        for p in 0..4 {
            expected.set(cycle[p], cycle[(p + 1) % 4], 1.0);
        }
        assert_eq!(hmm.transition, expected);
    }

    #[test]
    fn step_and_direction_are_permutation_powers() {
        let cycle = vec![0, 1, 2, 3, 4];
        let edges = |step, rev| sorted_edges([&cycle], step, rev);
        assert_eq!(edges(2, false), vec![(0, 2), (1, 3), (2, 4), (3, 0), (4, 1)]);
        assert_eq!(edges(1, true), vec![(0, 4), (1, 0), (2, 1), (3, 2), (4, 3)]);
        // step equal to the length is the identity
        assert!(edges(5, false).iter().all(|(a, b)| a == b));
    }

    #[test]
    fn shift_rotates_within_blocks() {
        let config = EnvironmentConfig::standard(4);
        let bank = generate_bank(&config).unwrap();
        let space = bank.code_space();
        let block = config.symbol_block_size();
        let mut code = space.index_to_code(1234).unwrap();
        let last = code.0.len() - 1;
        code.0[last] = 0;
        let base = bank.build_hmm(&code).unwrap();
        for shift in 1..config.shifts as u64 {
            code.0[last] = shift;
            let shifted = bank.build_hmm(&code).unwrap();
            assert_eq!(shifted.transition, base.transition);
            for state in 0..config.hidden_states {
                for sym in 0..config.symbols {
                    let j = sym / block;
                    if j >= config.emission_groups {
                        assert_eq!(shifted.emission.get(state, sym), 0.0);
                        continue;
                    }
                    let src = j * block + (sym - j * block + block - shift as usize) % block;
                    assert_eq!(shifted.emission.get(state, sym), base.emission.get(state, src));
                }
            }
        }
    }

    #[test]
    fn smoothing_spreads_over_block() {
        let config = EnvironmentConfig { emission_smoothing: 0.3, ..config48() };
        let bank = generate_bank(&config).unwrap();
        let hmm = bank.hmm_at(5).unwrap();
        hmm.validate(1e-12).unwrap();
        for i in 0..4 {
            let row = hmm.emission.row(i);
            let peak = row.iter().cloned().fold(0.0, f64::max);
            assert!((peak - (0.7 + 0.05)).abs() < 1e-12);
            assert!(row.iter().all(|&p| p >= 0.05 - 1e-15));
        }
    }

    #[test]
    fn from_parts_rejects_broken_blocks() {
        let config = config48();
        let good = generate_bank(&config).unwrap();
        let mut cycles = good.base_cycles.clone();
        cycles[0] = vec![0, 1, 1, 3];
        assert!(EnvironmentBank::from_parts(
            config.clone(),
            cycles,
            good.family_groups.clone(),
            good.emission_mappings.clone()
        )
        .is_err());
        let mut groups = good.family_groups.clone();
        groups[0][0] = vec![vec![0, 1], vec![1, 2]];
        assert!(EnvironmentBank::from_parts(
            config.clone(),
            good.base_cycles.clone(),
            groups,
            good.emission_mappings.clone()
        )
        .is_err());
        let mut maps = good.emission_mappings.clone();
        maps[0][0] = vec![0, 0, 1, 2];
        assert!(
            EnvironmentBank::from_parts(config, good.base_cycles.clone(), good.family_groups.clone(), maps).is_err()
        );
    }

    #[test]
    fn dump_roundtrip() {
        let bank = generate_bank(&config48()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bank.json");
        bank.write_json(&path).unwrap();
        assert_eq!(EnvironmentBank::read_json(&path).unwrap(), bank);
    }
}
