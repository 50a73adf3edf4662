use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{Cell, Mode, Stat, SweepConfig};
use crate::enumeration::enumerate_stable;
use crate::error::Result;
use crate::instance::{generate_dense, LazyInstance};
use crate::matching::{propose, propose_lazy, MatchOutcome, Side};
use crate::rng::StreamSpec;
use crate::stats::{MCEstimate, Moments};

/// Aggregated statistics of one grid cell. Statistics not requested are
/// `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub n: usize,
    pub p: f64,
    pub c: f64,
    pub trials: u64,
    pub frac_complete: f64,
    pub unmatched: Option<MCEstimate>,
    pub q_minus: Option<MCEstimate>,
    pub q_plus: Option<MCEstimate>,
    pub r_minus: Option<MCEstimate>,
    pub r_plus: Option<MCEstimate>,
    pub proposals: Option<MCEstimate>,
    pub s_complete: Option<MCEstimate>,
    /// Trials where the two proposal orientations matched different numbers
    /// of pairs; `None` when only men propose.
    pub size_mismatches: Option<u64>,
    /// Summed trial time in seconds, or 0 without timing.
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, Copy)]
struct Trial {
    men: Summary,
    women: Option<Summary>,
    s_complete: Option<u64>,
    seconds: f64,
}

#[derive(Debug, Clone, Copy)]
struct Summary {
    size: usize,
    proposals: u64,
    q: u64,
    r: u64,
}

impl From<MatchOutcome> for Summary {
    fn from(o: MatchOutcome) -> Self {
        Summary {
            size: o.size,
            proposals: o.proposals,
            q: o.q,
            r: o.r,
        }
    }
}

/// The stream for trial `t` of cell `index`.
pub fn trial_spec(config: &SweepConfig, index: usize, trial: u64) -> StreamSpec {
    StreamSpec::new(config.master_seed, index as u64 * config.trials + trial)
}

fn run_trial(config: &SweepConfig, cell: Cell, spec: StreamSpec) -> Result<Trial> {
    let start = config.timing.then(Instant::now);
    let women_needed = config.statistics.iter().any(|s| s.needs_women());
    let (men, women, s_complete) = match config.mode {
        Mode::Dense => {
            let inst = generate_dense(cell.n, cell.p, spec)?;
            let men = propose(&inst, Side::Men);
            let women = women_needed.then(|| propose(&inst, Side::Women));
            let s = if config.wants(Stat::SComplete) {
                Some(enumerate_stable(&inst)?.s_complete)
            } else {
                None
            };
            (men, women, s)
        }
        Mode::Lazy => {
            // lazy instances are consumed by one run, so the orientations
            // see independent instances
            let mut inst = LazyInstance::new(cell.n, cell.p, spec.child(0))?;
            let men = propose_lazy(&mut inst, Side::Men)?;
            let women = if women_needed {
                let mut inst = LazyInstance::new(cell.n, cell.p, spec.child(1))?;
                Some(propose_lazy(&mut inst, Side::Women)?)
            } else {
                None
            };
            (men, women, None)
        }
    };
    Ok(Trial {
        men: men.into(),
        women: women.map(Into::into),
        s_complete: s_complete.map(|s| s as u64),
        seconds: start.map_or(0.0, |t| t.elapsed().as_secs_f64()),
    })
}

fn aggregate(config: &SweepConfig, cell: Cell, trials: &[Trial]) -> ResultRow {
    let collect = |stat: Stat, f: &dyn Fn(&Trial) -> Option<f64>| -> Option<MCEstimate> {
        if !config.wants(stat) {
            return None;
        }
        let m: Moments = trials.iter().filter_map(f).collect();
        Some(m.estimate())
    };
    let n = cell.n;
    let complete = trials.iter().filter(|t| t.men.size == n).count();
    ResultRow {
        n,
        p: cell.p,
        c: cell.c,
        trials: config.trials,
        frac_complete: complete as f64 / trials.len() as f64,
        unmatched: collect(Stat::Unmatched, &|t| Some((n - t.men.size) as f64)),
        q_minus: collect(Stat::QMinus, &|t| Some(t.men.q as f64)),
        r_plus: collect(Stat::RPlus, &|t| Some(t.men.r as f64)),
        proposals: collect(Stat::Proposals, &|t| Some(t.men.proposals as f64)),
        q_plus: collect(Stat::QPlus, &|t| t.women.map(|w| w.q as f64)),
        r_minus: collect(Stat::RMinus, &|t| t.women.map(|w| w.r as f64)),
        s_complete: collect(Stat::SComplete, &|t| t.s_complete.map(|s| s as f64)),
        size_mismatches: trials[0].women.map(|_| {
            trials
                .iter()
                .filter(|t| t.women.is_some_and(|w| w.size != t.men.size))
                .count() as u64
        }),
        elapsed_s: trials.iter().map(|t| t.seconds).sum(),
    }
}

/// Runs one cell on its own; identical to the corresponding row of
/// [`run_sweep`].
pub fn run_cell(config: &SweepConfig, index: usize) -> Result<ResultRow> {
    config.validate()?;
    let cell = config.cells()[index];
    let trials = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(config, cell, trial_spec(config, index, t)))
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(config, cell, &trials))
}

/// One row per `(n, p)` cell. Trials of all cells run in parallel; results
/// are aggregated in trial order, so output does not depend on the number of
/// threads.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let cells = config.cells();
    let per_cell = config.trials as usize;
    let trials = (0..cells.len() * per_cell)
        .into_par_iter()
        .map(|i| {
            let (index, t) = (i / per_cell, (i % per_cell) as u64);
            run_trial(config, cells[index], trial_spec(config, index, t))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(cells
        .iter()
        .zip(trials.chunks(per_cell))
        .map(|(&cell, chunk)| aggregate(config, cell, chunk))
        .collect())
}
