//! Dual-functional waveform: one allocation drives both sensing and the link.
//!
//! The search starts from the sensing-optimal (uniform) or the
//! communication-optimal (water-filled) allocation and repeatedly moves along
//! the capacity gradient, rescaling back onto `Σλ = P_T` after each step. The
//! step size is backtracked until the end-to-end distortion decreases.

use crate::error::{check_len, CasError, Result};
use crate::model::{self, DistortionReport, PowerAllocation, SystemConfig};
use crate::waterfilling::{reverse_waterfill, uniform_allocation, waterfill_capacity};

/// Smallest trial step before the line search gives up.
pub const BETA_MIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InitKind {
    SensingOptimal,
    CommunicationOptimal,
}

impl InitKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InitKind::SensingOptimal => "sensing_optimal",
            InitKind::CommunicationOptimal => "communication_optimal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualOptions {
    /// Stop when successive objectives differ by at most this much.
    pub eps: f64,
    /// First trial step of every line search; `None` uses `P_T / ‖∇C‖₁`.
    pub beta0: Option<f64>,
    pub max_iters: usize,
}

impl DualOptions {
    pub fn for_config(cfg: &SystemConfig) -> Self {
        Self { eps: 1e-8 * cfg.prior_distortion(), beta0: None, max_iters: 200 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alloc: PowerAllocation,
    pub report: DistortionReport,
    pub iterations: usize,
    /// `D_sc` of the initial point followed by every accepted iterate.
    pub objective_trace: Vec<f64>,
    pub init_kind: InitKind,
    /// False when `max_iters` ran out before the stopping rule fired.
    pub converged: bool,
    /// The reverse water-filling level hit its floor at the returned point.
    pub saturated: bool,
}

fn evaluate(alloc: &PowerAllocation, cfg: &SystemConfig, alphas: &[f64]) -> Result<(DistortionReport, bool)> {
    check_len("dual allocation", cfg.n_tx, alloc.len())?;
    check_len("channel gains", cfg.n_tx, alphas.len())?;
    let d_s = model::sensing_distortion(alloc, cfg)?;
    let source = model::source_eigenvalues(alloc, cfg)?;
    let capacity = model::capacity_eigform(alloc, alphas)?;
    let rd = reverse_waterfill(&source, cfg.m_s, capacity)?;
    Ok((model::assemble_report(d_s, rd.d_c, capacity, rd.xi, source)?, rd.saturated))
}

/// End-to-end distortion when `alloc` serves both sides.
pub fn evaluate_dual(alloc: &PowerAllocation, cfg: &SystemConfig, alphas: &[f64]) -> Result<DistortionReport> {
    alloc.check_budget(cfg.p_total)?;
    evaluate(alloc, cfg, alphas).map(|(r, _)| r)
}

/// `∂C/∂λ_i = α_i / (α_i λ_i + 1)`.
pub fn capacity_gradient(alloc: &PowerAllocation, alphas: &[f64]) -> Result<Vec<f64>> {
    check_len("channel gains", alloc.len(), alphas.len())?;
    Ok(alloc.as_slice().iter().zip(alphas).map(|(&l, &a)| if a > 0.0 { a / (a * l + 1.0) } else { 0.0 }).collect())
}

/// `λ + β ∇C`, rescaled to total power `p_total`.
pub fn step_along(alloc: &PowerAllocation, beta: f64, gradient: &[f64], p_total: f64) -> Result<PowerAllocation> {
    check_len("gradient", alloc.len(), gradient.len())?;
    if !(beta >= 0.0) {
        return Err(CasError::Domain(format!("step size must be nonnegative, got {beta}")));
    }
    let moved: Vec<f64> = alloc.as_slice().iter().zip(gradient).map(|(&l, &g)| l + beta * g).collect();
    let norm: f64 = moved.iter().sum();
    if !(norm > 0.0) {
        return Err(CasError::Degenerate("gradient step produced an all-zero allocation".into()));
    }
    PowerAllocation::new(moved.into_iter().map(|v| v / norm * p_total).collect())
}

/// One projected gradient step on the capacity: `λ + β∇C(λ)`, rescaled to `p_total`.
pub fn gradient_step(alloc: &PowerAllocation, beta: f64, alphas: &[f64], p_total: f64) -> Result<PowerAllocation> {
    let grad = capacity_gradient(alloc, alphas)?;
    step_along(alloc, beta, &grad, p_total)
}

/// Starting allocation for a given initialization.
pub fn initial_allocation(cfg: &SystemConfig, alphas: &[f64], init: InitKind) -> Result<PowerAllocation> {
    match init {
        InitKind::SensingOptimal => uniform_allocation(cfg.p_total, cfg.n_tx),
        InitKind::CommunicationOptimal => {
            let wf = waterfill_capacity(cfg.p_total, alphas)?;
            if wf.degenerate {
                // No usable subchannel: every allocation is capacity-optimal.
                uniform_allocation(cfg.p_total, cfg.n_tx)
            } else {
                Ok(wf.alloc)
            }
        }
    }
}

/// Runs the gradient search from a single initialization.
pub fn optimize_dual(cfg: &SystemConfig, alphas: &[f64], init: InitKind, opts: DualOptions) -> Result<DualSolution> {
    cfg.validate()?;
    check_len("channel gains", cfg.n_tx, alphas.len())?;
    if !(opts.eps > 0.0) {
        return Err(CasError::Domain(format!("eps must be positive, got {}", opts.eps)));
    }
    if opts.max_iters == 0 {
        return Err(CasError::Domain("max_iters must be at least 1".into()));
    }
    if let Some(b) = opts.beta0 {
        if !(b > 0.0) {
            return Err(CasError::Domain(format!("beta0 must be positive, got {b}")));
        }
    }

    let mut current = initial_allocation(cfg, alphas, init)?;
    let (mut report, mut saturated) = evaluate(&current, cfg, alphas)?;
    let mut trace = vec![report.d_sc];
    let mut iterations = 0;
    let mut converged = false;
    let fixed_tol = 1e-15 * cfg.p_total;

    while iterations < opts.max_iters {
        iterations += 1;
        let grad = capacity_gradient(&current, alphas)?;
        let grad_norm: f64 = grad.iter().sum();
        if grad_norm == 0.0 {
            converged = true;
            break;
        }
        let mut beta = opts.beta0.unwrap_or(cfg.p_total / grad_norm);
        let mut accepted = None;
        while beta >= BETA_MIN {
            let candidate = step_along(&current, beta, &grad, cfg.p_total)?;
            let moved =
                candidate.as_slice().iter().zip(current.as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if moved <= fixed_tol {
                break;
            }
            let (r, sat) = evaluate(&candidate, cfg, alphas)?;
            if r.d_sc < report.d_sc {
                accepted = Some((candidate, r, sat));
                break;
            }
            beta *= 0.5;
        }
        let Some((candidate, r, sat)) = accepted else {
            converged = true;
            break;
        };
        let delta = (report.d_sc - r.d_sc).abs();
        current = candidate;
        report = r;
        saturated = sat;
        trace.push(report.d_sc);
        if delta <= opts.eps {
            converged = true;
            break;
        }
    }

    Ok(DualSolution {
        alloc: current,
        report,
        iterations,
        objective_trace: trace,
        init_kind: init,
        converged,
        saturated,
    })
}

/// Runs both initializations and keeps the lower final distortion
/// (sensing-optimal on ties).
pub fn optimize_dual_best(cfg: &SystemConfig, alphas: &[f64], opts: DualOptions) -> Result<DualSolution> {
    let s = optimize_dual(cfg, alphas, InitKind::SensingOptimal, opts)?;
    let c = optimize_dual(cfg, alphas, InitKind::CommunicationOptimal, opts)?;
    Ok(if c.report.d_sc < s.report.d_sc { c } else { s })
}
