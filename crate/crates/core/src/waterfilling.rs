//! Forward and reverse water-filling by bisection on the water level.
//!
//! Forward: `λ_i = (ξ_c − 1/α_i)^+` with `Σλ_i = P_c` maximizes `Σ ln(α_i λ_i + 1)`.
//! Reverse: `D_i = min(ξ, λ_η,i)` with `m Σ max(0, ln(λ_η,i / ξ)) = R` attains the
//! Gaussian rate-distortion function at rate `R`.
//!
//! Both directions use plain bisection so that zero gains and zero source
//! eigenvalues need no special-casing beyond the `(·)^+` clamp.

use crate::error::{CasError, Result};
use crate::model::PowerAllocation;

/// Iteration cap for both bisections.
pub const MAX_BISECTION_ITERS: usize = 200;
/// Lower guard for the reverse water-filling level.
pub const XI_FLOOR: f64 = 1e-300;
const WIDTH_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct WaterfillResult {
    pub alloc: PowerAllocation,
    /// Water level `ξ_c`.
    pub level: f64,
    /// `Σ ln(α_i λ_i + 1)` at the solution.
    pub capacity: f64,
    /// Max of the relative stationarity, slackness and budget residuals.
    pub kkt_residual: f64,
    /// Set when no subchannel has positive gain but power was offered.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReverseWaterfillResult {
    /// Reverse water-filling level `ξ`.
    pub xi: f64,
    /// `D_i = min(ξ, λ_η,i)` per distinct eigenvalue.
    pub per_component_d: Vec<f64>,
    /// `multiplicity · Σ D_i`.
    pub d_c: f64,
    /// Rate actually spent, `multiplicity · Σ max(0, ln(λ_η,i/ξ))`.
    pub rate: f64,
    /// Every source eigenvalue is zero.
    pub degenerate: bool,
    /// The target rate was beyond what `XI_FLOOR` can represent; `ξ` was clamped.
    pub saturated: bool,
}

/// Uniform split of `p_s` over `n` subchannels, the sensing-optimal allocation.
pub fn uniform_allocation(p_s: f64, n: usize) -> Result<PowerAllocation> {
    if !(p_s >= 0.0 && p_s.is_finite()) {
        return Err(CasError::Domain(format!("sensing power must be nonnegative, got {p_s}")));
    }
    if n == 0 {
        return Err(CasError::Domain("uniform allocation needs at least one subchannel".into()));
    }
    PowerAllocation::new(vec![p_s / n as f64; n])
}

fn fill_at(level: f64, alphas: &[f64]) -> Vec<f64> {
    alphas.iter().map(|&a| if a > 0.0 { (level - 1.0 / a).max(0.0) } else { 0.0 }).collect()
}

/// Capacity-maximizing allocation of `p_c` over subchannels with gains `alphas`.
pub fn waterfill_capacity(p_c: f64, alphas: &[f64]) -> Result<WaterfillResult> {
    if !(p_c >= 0.0 && p_c.is_finite()) {
        return Err(CasError::Domain(format!("communication power must be nonnegative, got {p_c}")));
    }
    if let Some(a) = alphas.iter().find(|a| !(**a >= 0.0 && a.is_finite())) {
        return Err(CasError::Domain(format!("channel gains must be finite and nonnegative, got {a}")));
    }
    let n = alphas.len();
    let inv: Vec<f64> = alphas.iter().filter(|&&a| a > 0.0).map(|&a| 1.0 / a).collect();
    if inv.is_empty() || p_c == 0.0 {
        let level = inv.iter().copied().fold(f64::INFINITY, f64::min);
        return Ok(WaterfillResult {
            alloc: PowerAllocation::zeros(n),
            level: if level.is_finite() { level } else { 0.0 },
            capacity: 0.0,
            kkt_residual: 0.0,
            degenerate: inv.is_empty() && p_c > 0.0,
        });
    }

    let mut lo = inv.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = inv.iter().copied().fold(0.0, f64::max) + p_c;
    let scale = hi;
    for _ in 0..MAX_BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        let used: f64 = fill_at(mid, alphas).iter().sum();
        if used > p_c {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= WIDTH_RTOL * scale * 1e-4 {
            break;
        }
    }
    let mut level = 0.5 * (lo + hi);
    let mut lambdas = fill_at(level, alphas);
    // Remove the last bisection residue from the budget on the active set.
    let used: f64 = lambdas.iter().sum();
    if used > 0.0 {
        let active = lambdas.iter().filter(|&&l| l > 0.0).count() as f64;
        let shift = (p_c - used) / active;
        level += shift;
        for l in lambdas.iter_mut().filter(|l| **l > 0.0) {
            *l = (*l + shift).max(0.0);
        }
    }
    let alloc = PowerAllocation::new(lambdas)?;
    let capacity = crate::model::capacity_eigform(&alloc, alphas)?;
    let kkt_residual = kkt_residual(&alloc, alphas, p_c, level);
    Ok(WaterfillResult { alloc, level, capacity, kkt_residual, degenerate: false })
}

/// Relative KKT residual of a capacity allocation at water level `level`.
///
/// With multiplier `μ = 1/level`, optimality requires `α_i/(1+α_iλ_i) = μ` on
/// active subchannels, `α_i ≤ μ` on inactive ones, and `Σλ = p_c`.
pub fn kkt_residual(alloc: &PowerAllocation, alphas: &[f64], p_c: f64, level: f64) -> f64 {
    let mu = 1.0 / level;
    let mut worst: f64 = 0.0;
    for (&l, &a) in alloc.as_slice().iter().zip(alphas) {
        let marginal = a / (1.0 + a * l);
        let r = if l > 0.0 { (marginal - mu).abs() / mu } else { (marginal - mu).max(0.0) / mu };
        worst = worst.max(r);
    }
    if p_c > 0.0 {
        worst = worst.max((alloc.total() - p_c).abs() / p_c);
    }
    worst
}

/// Rate spent by reverse water-filling at level `xi`: `m Σ max(0, ln(λ_i/ξ))`.
pub fn rate_at_level(source_eigs: &[f64], multiplicity: usize, xi: f64) -> f64 {
    let sum: f64 = source_eigs.iter().filter(|&&l| l > xi).map(|&l| (l / xi).ln()).sum();
    multiplicity as f64 * sum
}

/// Smallest total distortion of a Gaussian source with eigenvalues `source_eigs`
/// (each repeated `multiplicity` times) deliverable at `target_rate` nats.
pub fn reverse_waterfill(source_eigs: &[f64], multiplicity: usize, target_rate: f64) -> Result<ReverseWaterfillResult> {
    if !(target_rate >= 0.0) {
        return Err(CasError::Domain(format!("target rate must be nonnegative, got {target_rate}")));
    }
    if multiplicity == 0 {
        return Err(CasError::Domain("multiplicity must be at least 1".into()));
    }
    if let Some(e) = source_eigs.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
        return Err(CasError::Domain(format!("source eigenvalues must be finite and nonnegative, got {e}")));
    }
    let top = source_eigs.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return Ok(ReverseWaterfillResult {
            xi: 0.0,
            per_component_d: vec![0.0; source_eigs.len()],
            d_c: 0.0,
            rate: 0.0,
            degenerate: true,
            saturated: false,
        });
    }

    let mut saturated = false;
    let xi = if target_rate == 0.0 {
        top
    } else if rate_at_level(source_eigs, multiplicity, XI_FLOOR) <= target_rate {
        saturated = true;
        XI_FLOOR
    } else {
        // Bisection on ln ξ: the rate is linear in ln ξ on each active set.
        let mut lo = XI_FLOOR.ln();
        let mut hi = top.ln();
        let scale = lo.abs().max(hi.abs());
        for _ in 0..MAX_BISECTION_ITERS {
            let mid = 0.5 * (lo + hi);
            if rate_at_level(source_eigs, multiplicity, mid.exp()) > target_rate {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= WIDTH_RTOL * scale * 1e-3 {
                break;
            }
        }
        (0.5 * (lo + hi)).exp()
    };

    let per_component_d: Vec<f64> = source_eigs.iter().map(|&l| xi.min(l)).collect();
    let d_c = multiplicity as f64 * per_component_d.iter().sum::<f64>();
    Ok(ReverseWaterfillResult {
        xi,
        rate: rate_at_level(source_eigs, multiplicity, xi),
        per_component_d,
        d_c,
        degenerate: false,
        saturated,
    })
}
