//! Separated sensing and communication waveforms sharing a power budget.
//!
//! For a split `P_s + P_c = P_T` the sensing waveform spreads `P_s` uniformly,
//! the communication waveform water-fills `P_c`, and the recovery distortion
//! follows from reverse water-filling at the resulting capacity. The split is
//! found by a refine-on-grid search over `[0, P_T]`.

use crate::error::{CasError, Result};
use crate::model::{self, DistortionReport, PowerAllocation, SystemConfig};
use crate::waterfilling::{reverse_waterfill, uniform_allocation, waterfill_capacity};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparatedOptions {
    /// Number of sub-intervals per refinement round (`grid_l + 1` grid points).
    pub grid_l: usize,
    /// Stop once the search interval is no wider than this.
    pub tol: f64,
}

impl SeparatedOptions {
    pub fn for_config(cfg: &SystemConfig) -> Self {
        Self { grid_l: 21, tol: 1e-4 * cfg.p_total }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparatedSolution {
    pub p_s: f64,
    pub p_c: f64,
    pub report: DistortionReport,
    pub sensing_alloc: PowerAllocation,
    pub comm_alloc: PowerAllocation,
    /// Objective evaluations over all rounds.
    pub grid_evals: usize,
    pub rounds: usize,
    /// Best objective after each round.
    pub round_best: Vec<f64>,
    /// Interval width at the start of each round.
    pub round_widths: Vec<f64>,
    /// The communication side had no usable subchannel.
    pub degenerate: bool,
}

/// Outcome of [`refine_grid_search`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridSearch {
    pub argmin: f64,
    pub min: f64,
    pub evals: usize,
    pub round_best: Vec<f64>,
    pub round_widths: Vec<f64>,
}

/// Minimizes a scalar function over `[lo, hi]` by repeated grid refinement.
///
/// Each round evaluates `grid_l + 1` evenly spaced points, then shrinks the
/// interval to the neighbours of the best point (one side only at an
/// endpoint). Ties go to the smaller argument. Stops when the interval is no
/// wider than `tol`.
pub fn refine_grid_search<F>(lo: f64, hi: f64, grid_l: usize, tol: f64, mut objective: F) -> Result<GridSearch>
where
    F: FnMut(f64) -> Result<f64>,
{
    if grid_l < 3 {
        return Err(CasError::Domain(format!("grid_l must be at least 3, got {grid_l}")));
    }
    if !(tol > 0.0) {
        return Err(CasError::Domain(format!("tol must be positive, got {tol}")));
    }
    if !(hi >= lo) {
        return Err(CasError::Domain(format!("empty search interval [{lo}, {hi}]")));
    }

    let (mut a, mut b) = (lo, hi);
    let mut best = (f64::NAN, f64::INFINITY);
    let mut evals = 0;
    let mut round_best = Vec::new();
    let mut round_widths = Vec::new();
    loop {
        round_widths.push(b - a);
        let step = (b - a) / grid_l as f64;
        let mut round = (0usize, f64::INFINITY);
        for k in 0..=grid_l {
            let x = if k == grid_l { b } else { a + step * k as f64 };
            let v = objective(x)?;
            evals += 1;
            if v < round.1 {
                round = (k, v);
            }
        }
        let (k, v) = round;
        let x = if k == grid_l { b } else { a + step * k as f64 };
        if v < best.1 || (v == best.1 && x < best.0) {
            best = (x, v);
        }
        round_best.push(best.1);

        if b - a <= tol {
            break;
        }
        let left = if k == 0 { a } else { a + step * (k - 1) as f64 };
        let right = if k == grid_l { b } else { a + step * (k + 1) as f64 };
        a = left.max(lo);
        b = right.min(hi);
    }
    Ok(GridSearch { argmin: best.0, min: best.1, evals, round_best, round_widths })
}

struct SplitEval {
    report: DistortionReport,
    sensing: PowerAllocation,
    comm: PowerAllocation,
    degenerate: bool,
}

fn split(p_s: f64, cfg: &SystemConfig, alphas: &[f64]) -> Result<SplitEval> {
    let budget_slack = cfg.p_total * model::BUDGET_RTOL;
    if !(p_s >= 0.0 && p_s <= cfg.p_total + budget_slack) {
        return Err(CasError::Domain(format!("sensing power {p_s} outside [0, {}]", cfg.p_total)));
    }
    crate::error::check_len("channel gains", cfg.n_tx, alphas.len())?;
    let p_s = p_s.min(cfg.p_total);
    let sensing = uniform_allocation(p_s, cfg.n_tx)?;
    let d_s = model::sensing_distortion(&sensing, cfg)?;
    let source = model::source_eigenvalues(&sensing, cfg)?;
    let wf = waterfill_capacity(cfg.p_total - p_s, alphas)?;
    let rd = reverse_waterfill(&source, cfg.m_s, wf.capacity)?;
    Ok(SplitEval {
        report: model::assemble_report(d_s, rd.d_c, wf.capacity, rd.xi, source)?,
        sensing,
        comm: wf.alloc,
        degenerate: wf.degenerate || rd.saturated,
    })
}

/// End-to-end distortion of the separated scheme at sensing power `p_s`.
pub fn evaluate_split(p_s: f64, cfg: &SystemConfig, alphas: &[f64]) -> Result<DistortionReport> {
    split(p_s, cfg, alphas).map(|s| s.report)
}

/// Best power split for the separated scheme.
pub fn optimize_separated(cfg: &SystemConfig, alphas: &[f64], opts: SeparatedOptions) -> Result<SeparatedSolution> {
    cfg.validate()?;
    crate::error::check_len("channel gains", cfg.n_tx, alphas.len())?;
    let search =
        refine_grid_search(0.0, cfg.p_total, opts.grid_l, opts.tol, |p| Ok(split(p, cfg, alphas)?.report.d_sc))?;
    let best = split(search.argmin, cfg, alphas)?;
    Ok(SeparatedSolution {
        p_s: search.argmin,
        p_c: cfg.p_total - search.argmin,
        report: best.report,
        sensing_alloc: best.sensing,
        comm_alloc: best.comm,
        grid_evals: search.evals,
        rounds: search.round_best.len(),
        round_best: search.round_best,
        round_widths: search.round_widths,
        degenerate: best.degenerate,
    })
}
