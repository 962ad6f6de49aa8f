//! Closed-form CAS math on the eigenvalues of the transmit covariance.
//!
//! With a sample covariance `R = U diag(λ) U^H`, the sensing MMSE, the
//! covariance of the estimate and the aligned MIMO capacity all decouple
//! per eigenvalue:
//!
//! ```text
//! f_s(λ) = σ_s² σ_η² / (σ_s² + T σ_η² λ)      D_s = M_s Σ f_s(λ_i)
//! g(λ)   = σ_η² − f_s(λ)                       source eigenvalue, multiplicity M_s
//! C      = Σ ln(α_i λ_i + 1),  α_i = T λ_h,i / σ_c²
//! ```

use crate::error::{check_len, CasError, Result};

/// Relative slack allowed on the power budget.
pub const BUDGET_RTOL: f64 = 1e-9;

/// Scalar parameters of a CAS link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    /// Transmit antennas `N`.
    pub n_tx: usize,
    /// Sensing receive antennas `M_s`.
    pub m_s: usize,
    /// User receive antennas `M_c`.
    pub m_c: usize,
    /// Block length `T`.
    pub n_symbols: usize,
    /// Prior variance of each TRM entry.
    pub var_eta: f64,
    /// Sensing noise variance per entry.
    pub var_s: f64,
    /// Communication noise variance per entry.
    pub var_c: f64,
    /// Total transmit power budget in watts.
    pub p_total: f64,
}

impl Default for SystemConfig {
    /// N = 10, M_s = M_c = 5, T = 100, σ_η² = 0.1, P_T = 1 W, SNR_s = 20 dB, SNR_c = 10 dB.
    fn default() -> Self {
        let mut cfg =
            Self { n_tx: 10, m_s: 5, m_c: 5, n_symbols: 100, var_eta: 0.1, var_s: 1.0, var_c: 1.0, p_total: 1.0 };
        cfg.var_s = noise_var_from_snr(20.0, &cfg);
        cfg.var_c = noise_var_from_snr(10.0, &cfg);
        cfg
    }
}

impl SystemConfig {
    /// Returns a copy with both noise variances derived from SNRs in dB.
    pub fn with_snrs(mut self, snr_s_db: f64, snr_c_db: f64) -> Self {
        self.var_s = noise_var_from_snr(snr_s_db, &self);
        self.var_c = noise_var_from_snr(snr_c_db, &self);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [("n_tx", self.n_tx), ("m_s", self.m_s), ("m_c", self.m_c), ("n_symbols", self.n_symbols)];
        for (name, v) in counts {
            if v == 0 {
                return Err(CasError::Config(format!("{name} must be at least 1")));
            }
        }
        if self.n_symbols < self.n_tx {
            return Err(CasError::Config(format!("n_symbols ({}) must be >= n_tx ({})", self.n_symbols, self.n_tx)));
        }
        let positives =
            [("var_eta", self.var_eta), ("var_s", self.var_s), ("var_c", self.var_c), ("p_total", self.p_total)];
        for (name, v) in positives {
            if !(v.is_finite() && v > 0.0) {
                return Err(CasError::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// `M_s · N · σ_η²`: the distortion of an estimate that carries no information.
    pub fn prior_distortion(&self) -> f64 {
        (self.m_s * self.n_tx) as f64 * self.var_eta
    }
}

/// Eigenvalues of a transmit sample covariance, in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation(Vec<f64>);

impl PowerAllocation {
    /// Wraps `lambdas`, rejecting negative or non-finite entries.
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if let Some(bad) = lambdas.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(CasError::Domain(format!(
                "power allocation entries must be finite and nonnegative, got {bad}"
            )));
        }
        Ok(Self(lambdas))
    }

    /// Like [`PowerAllocation::new`], additionally enforcing `Σλ ≤ p_total`.
    pub fn within_budget(lambdas: Vec<f64>, p_total: f64) -> Result<Self> {
        let alloc = Self::new(lambdas)?;
        alloc.check_budget(p_total)?;
        Ok(alloc)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn check_budget(&self, p_total: f64) -> Result<()> {
        let total = self.total();
        if total > p_total * (1.0 + BUDGET_RTOL) {
            return Err(CasError::Domain(format!("allocation uses {total} W, budget is {p_total} W")));
        }
        Ok(())
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for PowerAllocation {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// End-to-end distortion breakdown for one allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionReport {
    /// Sensing MMSE at the base station.
    pub d_s: f64,
    /// Recovery distortion added by the communication link.
    pub d_c: f64,
    /// `d_s + d_c`.
    pub d_sc: f64,
    /// Link capacity in nats per block (may be `f64::INFINITY` for a perfect link).
    pub capacity: f64,
    /// Reverse water-filling level.
    pub xi_inverse: f64,
    /// Source eigenvalues `λ_η,i`, each with multiplicity `M_s`.
    pub source_eigs: Vec<f64>,
}

/// Noise variance for a given SNR: `σ² = T·P_T / 10^(snr/10)`.
pub fn noise_var_from_snr(snr_db: f64, cfg: &SystemConfig) -> f64 {
    cfg.n_symbols as f64 * cfg.p_total / 10f64.powf(snr_db / 10.0)
}

fn check_power(lambda: f64) -> Result<()> {
    if lambda >= 0.0 && !lambda.is_nan() {
        Ok(())
    } else {
        Err(CasError::Domain(format!("subchannel power must be nonnegative, got {lambda}")))
    }
}

/// Per-subchannel sensing MMSE `f_s(λ)`.
pub fn sensing_subchannel_distortion(lambda_s: f64, cfg: &SystemConfig) -> Result<f64> {
    check_power(lambda_s)?;
    Ok(fs(lambda_s, cfg))
}

#[inline]
pub(crate) fn fs(lambda: f64, cfg: &SystemConfig) -> f64 {
    let t = cfg.n_symbols as f64;
    cfg.var_s * cfg.var_eta / (cfg.var_s + t * cfg.var_eta * lambda)
}

/// Per-subchannel variance of the estimate, `g(λ) = σ_η² − f_s(λ)`.
pub fn source_eigenvalue(lambda_s: f64, cfg: &SystemConfig) -> Result<f64> {
    check_power(lambda_s)?;
    Ok(g(lambda_s, cfg))
}

// Computed as T σ_η⁴ λ / (σ_s² + T σ_η² λ) rather than the subtraction, which
// loses all precision for small λ. The two agree to rounding.
#[inline]
pub(crate) fn g(lambda: f64, cfg: &SystemConfig) -> f64 {
    let t = cfg.n_symbols as f64;
    let num = t * cfg.var_eta * cfg.var_eta * lambda;
    if lambda.is_infinite() {
        return cfg.var_eta;
    }
    num / (cfg.var_s + t * cfg.var_eta * lambda)
}

/// Total sensing distortion `M_s Σ f_s(λ_i)`.
pub fn sensing_distortion(alloc: &PowerAllocation, cfg: &SystemConfig) -> Result<f64> {
    check_len("sensing allocation", cfg.n_tx, alloc.len())?;
    let sum: f64 = alloc.as_slice().iter().map(|&l| fs(l, cfg)).sum();
    Ok(cfg.m_s as f64 * sum)
}

/// Source eigenvalues `g(λ_i)` of the estimate for every subchannel.
pub fn source_eigenvalues(alloc: &PowerAllocation, cfg: &SystemConfig) -> Result<Vec<f64>> {
    check_len("sensing allocation", cfg.n_tx, alloc.len())?;
    Ok(alloc.as_slice().iter().map(|&l| g(l, cfg)).collect())
}

/// Capacity of the eigen-aligned link, `Σ ln(α_i λ_i + 1)` nats per block.
pub fn capacity_eigform(alloc: &PowerAllocation, alphas: &[f64]) -> Result<f64> {
    check_len("channel gains", alloc.len(), alphas.len())?;
    if let Some(a) = alphas.iter().find(|a| !(**a >= 0.0)) {
        return Err(CasError::Domain(format!("channel gains must be nonnegative, got {a}")));
    }
    Ok(alloc.as_slice().iter().zip(alphas).map(|(&l, &a)| (a * l).ln_1p()).sum())
}

/// Builds a [`DistortionReport`] with `d_sc = d_s + d_c`.
pub fn assemble_report(d_s: f64, d_c: f64, capacity: f64, xi: f64, source_eigs: Vec<f64>) -> Result<DistortionReport> {
    let scalars = [("d_s", d_s), ("d_c", d_c), ("capacity", capacity), ("xi", xi)];
    for (name, v) in scalars {
        if !(v >= 0.0) {
            return Err(CasError::Domain(format!("{name} must be nonnegative, got {v}")));
        }
    }
    if let Some(e) = source_eigs.iter().find(|e| !(**e >= 0.0)) {
        return Err(CasError::Domain(format!("source eigenvalues must be nonnegative, got {e}")));
    }
    Ok(DistortionReport { d_s, d_c, d_sc: d_s + d_c, capacity, xi_inverse: xi, source_eigs })
}
