//! Monte Carlo engines: the killed walk itself, and exact sampling of the
//! box-truncated conditioned walk through the Doob transform of a solved
//! survival field.
//!
//! Conditioned paths step from `x ≠ y` to `x+u` with probability
//! `e^{-V(x)} e(x+u) / (2d e(x))`. The field vanishes outside the box, so
//! sampled paths never leave it; all statistics refer to the box-truncated
//! measure.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{cube_of, is_lattice_animal, CubeClass, CubePartition, Environment, Site};
use crate::rng;
use crate::solver::{Grid, SurvivalField};
use crate::stats::MeanStd;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KilledWalkEstimate {
    pub e_hat: f64,
    pub stderr: f64,
    pub n_paths: usize,
    pub successes: usize,
    /// Paths stopped by the step cap, counted as failures.
    pub censored: usize,
}

/// Default step cap `50·|y|₁²` (at least 1).
pub fn default_step_cap(y: &Site) -> usize {
    (50 * y.l1() * y.l1()).max(1) as usize
}

enum WalkEnd {
    Hit,
    Killed,
    Exited,
    Censored,
}

/// Direct simulation of `P̆_0(H(y) < ∞)` for the walk absorbed on leaving the box.
pub fn killed_walk_estimate(
    env: &Environment,
    y: &Site,
    n_paths: usize,
    step_cap: usize,
    seed: u64,
) -> Result<KilledWalkEstimate> {
    if n_paths < 100 || step_cap < 1 {
        return Err(Error::Config(format!(
            "killed walk needs n_paths >= 100 and step_cap >= 1, got {n_paths}, {step_cap}"
        )));
    }
    let grid = Grid::new(env.box_spec);
    let target = grid.padded_index(y).ok_or_else(|| Error::OutsideBox(y.to_string()))?;
    let start = grid.padded_index(&Site::origin(env.box_spec.d)).expect("origin in box");
    // survival probability per slot; negative marks the ghost layer
    let mut survive = vec![-1.0; grid.padded_len()];
    for (i, v) in env.values.iter().enumerate() {
        let p = grid.padded_index(&env.box_spec.site_at(i)).expect("box site");
        survive[p] = (-v).exp();
    }
    let offsets = grid.neighbor_offsets();
    let ends: Vec<WalkEnd> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, i as u64);
            let mut p = start;
            let mut steps = 0usize;
            loop {
                if p == target {
                    return WalkEnd::Hit;
                }
                if steps >= step_cap {
                    return WalkEnd::Censored;
                }
                if rng.gen::<f64>() >= survive[p] {
                    return WalkEnd::Killed;
                }
                p = (p as isize + offsets[rng.gen_range(0..offsets.len())]) as usize;
                steps += 1;
                if survive[p] < 0.0 {
                    return WalkEnd::Exited;
                }
            }
        })
        .collect();
    let successes = ends.iter().filter(|e| matches!(e, WalkEnd::Hit)).count();
    let censored = ends.iter().filter(|e| matches!(e, WalkEnd::Censored)).count();
    let n = n_paths as f64;
    let e_hat = successes as f64 / n;
    Ok(KilledWalkEstimate {
        e_hat,
        stderr: (e_hat * (1.0 - e_hat) / n).sqrt(),
        n_paths,
        successes,
        censored,
    })
}

/// One conditioned path `S_0 = 0, ..., S_H = y` as padded slots.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub slots: Vec<usize>,
    pub hitting_time: usize,
}

impl PathRecord {
    pub fn sites(&self, grid: &Grid) -> Vec<Site> {
        self.slots.iter().map(|&p| grid.coords(p).expect("paths stay in the box")).collect()
    }
}

/// Draws one path of the conditioned walk from the origin.
pub fn doob_sample_path(field: &SurvivalField, seed: u64) -> Result<PathRecord> {
    sample_path(field, &mut rng::stream(seed, 0))
}

fn sample_path<R: Rng>(field: &SurvivalField, rng: &mut R) -> Result<PathRecord> {
    let grid = &field.grid;
    let e = field.padded_values();
    let kill = field.kill_factors();
    let target = field.target_slot();
    let offsets = grid.neighbor_offsets();
    let mut p = grid.padded_index(&Site::origin(grid.box_spec.d)).expect("origin in box");
    if !(e[p] > 0.0) {
        return Err(Error::Domain("e(0) = 0: the target is unreachable".into()));
    }
    let norm_tol = 10.0 * field.tol;
    let mut slots = vec![p];
    let mut weights = vec![0.0; offsets.len()];
    while p != target {
        let mut sum = 0.0;
        for (w, &o) in weights.iter_mut().zip(offsets) {
            *w = kill[p] * e[(p as isize + o) as usize] / e[p];
            sum += *w;
        }
        if (sum - 1.0).abs() > norm_tol {
            return Err(Error::CorruptField {
                site: grid.coords(p).map(|s| s.to_string()).unwrap_or_default(),
                sum,
            });
        }
        let mut u = rng.gen::<f64>() * sum;
        let mut k = offsets.len() - 1;
        for (j, &w) in weights.iter().enumerate() {
            if u < w {
                k = j;
                break;
            }
            u -= w;
        }
        // never step onto a zero-weight neighbour through rounding
        while weights[k] == 0.0 {
            k = (k + offsets.len() - 1) % offsets.len();
        }
        p = (p as isize + offsets[k]) as usize;
        slots.push(p);
    }
    let hitting_time = slots.len() - 1;
    Ok(PathRecord { slots, hitting_time })
}

/// Per-path statistics of one conditioned path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSummary {
    pub h: usize,
    /// Time spent in occupied cubes before `H(y)`.
    pub h1: usize,
    /// Time spent in empty cubes before `H(y)`.
    pub h2: usize,
    /// Distinct sites visited before `H(y)`.
    pub a2: usize,
    /// Distinct cubes entered before `H(y)`.
    pub a1: usize,
    /// Steps before `H(y)` spent on sites with `V < t0`.
    pub low: usize,
    pub max_local_time: usize,
    pub a1_is_animal: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionedPathStats {
    pub paths: usize,
    pub h: MeanStd,
    pub a2: MeanStd,
    pub a1: MeanStd,
    pub h1: MeanStd,
    pub h2: MeanStd,
    pub low_potential: MeanStd,
    pub max_local_time: MeanStd,
    pub all_a1_animals: bool,
    pub records: Vec<PathSummary>,
}

impl ConditionedPathStats {
    /// `(name, summary)` pairs in a fixed order.
    pub fn rows(&self) -> Vec<(&'static str, MeanStd)> {
        vec![
            ("H", self.h),
            ("H1", self.h1),
            ("H2", self.h2),
            ("A2", self.a2),
            ("A1", self.a1),
            ("low_potential", self.low_potential),
            ("max_local_time", self.max_local_time),
        ]
    }
}

/// Samples `n_paths` conditioned paths and aggregates the path statistics.
pub fn conditioned_stats(
    field: &SurvivalField,
    n_paths: usize,
    seed: u64,
    t0: f64,
    cube_l: i64,
    delta: f64,
) -> Result<ConditionedPathStats> {
    let env = &field.env;
    let grid = &field.grid;
    let partition = CubePartition::classify(env, cube_l, delta, &field.target)?;
    let n = grid.padded_len();
    let mut occupied = vec![false; n];
    let mut low = vec![false; n];
    let mut cube_id = vec![u32::MAX; n];
    let mut cube_keys: BTreeMap<Vec<i64>, u32> = BTreeMap::new();
    for (i, x) in env.box_spec.sites().enumerate() {
        let p = grid.padded_index(&x).expect("box site");
        occupied[p] = partition.class_of(&x) == CubeClass::Occupied;
        low[p] = env.values[i] < t0;
        let q = cube_of(&x, cube_l);
        let next = cube_keys.len() as u32;
        cube_id[p] = *cube_keys.entry(q).or_insert(next);
    }
    let keys_by_id: Vec<Vec<i64>> = {
        let mut v = vec![Vec::new(); cube_keys.len()];
        for (k, &id) in &cube_keys {
            v[id as usize] = k.clone();
        }
        v
    };
    let records: Vec<Result<PathSummary>> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let path = sample_path(field, &mut rng::stream(seed, i as u64))?;
            let before = &path.slots[..path.hitting_time];
            let mut visits: HashMap<usize, usize> = HashMap::new();
            let mut cubes: HashSet<u32> = HashSet::new();
            let (mut h1, mut h2, mut lo) = (0, 0, 0);
            for &p in before {
                *visits.entry(p).or_default() += 1;
                cubes.insert(cube_id[p]);
                if occupied[p] {
                    h1 += 1;
                } else {
                    h2 += 1;
                }
                if low[p] {
                    lo += 1;
                }
            }
            let animal: BTreeSet<Vec<i64>> = cubes.iter().map(|&c| keys_by_id[c as usize].clone()).collect();
            let a1_is_animal = animal.is_empty()
                || (is_lattice_animal(&animal) && animal.contains(&vec![0; grid.box_spec.d]));
            Ok(PathSummary {
                h: path.hitting_time,
                h1,
                h2,
                a2: visits.len(),
                a1: cubes.len(),
                low: lo,
                max_local_time: visits.values().copied().max().unwrap_or(0),
                a1_is_animal,
            })
        })
        .collect();
    let records = records.into_iter().collect::<Result<Vec<_>>>()?;
    let col = |f: fn(&PathSummary) -> usize| -> MeanStd {
        MeanStd::of(&records.iter().map(|r| f(r) as f64).collect::<Vec<_>>())
    };
    Ok(ConditionedPathStats {
        paths: n_paths,
        h: col(|r| r.h),
        a2: col(|r| r.a2),
        a1: col(|r| r.a1),
        h1: col(|r| r.h1),
        h2: col(|r| r.h2),
        low_potential: col(|r| r.low),
        max_local_time: col(|r| r.max_local_time),
        all_a1_animals: records.iter().all(|r| r.a1_is_animal),
        records,
    })
}
