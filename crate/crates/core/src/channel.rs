//! Seeded channels, waveform construction, and matrix-level oracles.
//!
//! Randomness comes from ChaCha20 keyed by the caller's seed. Each purpose
//! draws from its own stream so that, for the same seed, channel draws,
//! waveform samples and Monte Carlo trials never overlap:
//!
//! | purpose             | stream id              |
//! |---------------------|------------------------|
//! | channel `H_c`       | [`CHANNEL_STREAM`]     |
//! | waveform sampling   | [`WAVEFORM_STREAM`]    |
//! | Monte Carlo trial k | [`MONTE_CARLO_STREAM`] + k |
//!
//! Complex Gaussian entries with variance `v` have real and imaginary parts
//! drawn independently from `N(0, v/2)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_len, CasError, Result};
use crate::model::{PowerAllocation, SystemConfig};

pub const CHANNEL_STREAM: u64 = 1;
pub const WAVEFORM_STREAM: u64 = 2;
pub const MONTE_CARLO_STREAM: u64 = 1 << 32;

const UNITARY_TOL: f64 = 1e-8;

/// Generator for one purpose of one seed.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One draw from `CN(0, variance)`.
pub fn complex_gaussian<R: rand::Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues descending.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let eig = m.clone().symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `max |U^H U − I|` entrywise.
pub fn unitarity_residual(u: &DMatrix<Complex64>) -> f64 {
    let g = u.adjoint() * u;
    let n = g.nrows();
    let mut worst: f64 = 0.0;
    for r in 0..n {
        for c in 0..n {
            let target = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((g[(r, c)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// A communication channel realization with the eigenbasis of its Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CommChannel {
    /// `H_c`, `M_c × N`.
    pub h: DMatrix<Complex64>,
    /// Eigenvalues of `H_c^H H_c`, descending and clamped at zero.
    pub gram_eigs: Vec<f64>,
    /// `V_c`, columns matching `gram_eigs`.
    pub eigvecs: DMatrix<Complex64>,
    pub seed: u64,
}

impl CommChannel {
    pub fn from_matrix(h: DMatrix<Complex64>, seed: u64) -> Self {
        let gram = h.adjoint() * &h;
        let (values, eigvecs) = hermitian_eigen(&gram);
        // Eigenvalues at rounding level of the largest one are structural zeros.
        let top = values.first().copied().unwrap_or(0.0).max(0.0);
        let floor = top * values.len() as f64 * f64::EPSILON * 8.0;
        Self { h, gram_eigs: values.into_iter().map(|v| if v <= floor { 0.0 } else { v }).collect(), eigvecs, seed }
    }

    pub fn n_tx(&self) -> usize {
        self.h.ncols()
    }

    /// `V_c diag(λ_h) V_c^H`.
    pub fn reconstructed_gram(&self) -> DMatrix<Complex64> {
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            self.gram_eigs.len(),
            self.gram_eigs.iter().map(|&v| Complex64::new(v, 0.0)),
        ));
        &self.eigvecs * d * self.eigvecs.adjoint()
    }
}

/// i.i.d. `CN(0, 1)` channel of shape `m_c × n_tx`, deterministic per seed.
pub fn generate_rayleigh(seed: u64, m_c: usize, n_tx: usize) -> CommChannel {
    let mut rng = rng_for(seed, CHANNEL_STREAM);
    // Row-major fill so the draw order does not depend on nalgebra's layout.
    let mut entries = Vec::with_capacity(m_c * n_tx);
    for _ in 0..m_c * n_tx {
        entries.push(complex_gaussian(&mut rng, 1.0));
    }
    let h = DMatrix::from_row_slice(m_c, n_tx, &entries);
    CommChannel::from_matrix(h, seed)
}

/// Per-watt subchannel gains `α_i = T λ_h,i / σ_c²`.
pub fn alphas_from_channel(ch: &CommChannel, cfg: &SystemConfig) -> Vec<f64> {
    let t = cfg.n_symbols as f64;
    ch.gram_eigs.iter().map(|&l| t * l / cfg.var_c).collect()
}

/// A transmit covariance `U diag(λ) U^H`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformCovariance {
    pub matrix: DMatrix<Complex64>,
    pub trace_power: f64,
}

fn check_basis(alloc: &PowerAllocation, basis: &DMatrix<Complex64>) -> Result<()> {
    check_len("basis rows", alloc.len(), basis.nrows())?;
    check_len("basis columns", alloc.len(), basis.ncols())?;
    let residual = unitarity_residual(basis);
    if residual > UNITARY_TOL {
        return Err(CasError::Domain(format!("basis is not unitary (residual {residual:e})")));
    }
    Ok(())
}

fn diag_complex(values: impl ExactSizeIterator<Item = f64>) -> DMatrix<Complex64> {
    let n = values.len();
    DMatrix::from_diagonal(&DVector::from_iterator(n, values.map(|v| Complex64::new(v, 0.0))))
}

pub fn covariance_from_alloc(alloc: &PowerAllocation, basis: &DMatrix<Complex64>) -> Result<WaveformCovariance> {
    check_basis(alloc, basis)?;
    let d = diag_complex(alloc.as_slice().iter().copied());
    let mut matrix = basis * d * basis.adjoint();
    // Symmetrize away rounding so the result is Hermitian to machine precision.
    let herm = (&matrix + matrix.adjoint()) * Complex64::new(0.5, 0.0);
    matrix = herm;
    Ok(WaveformCovariance { matrix, trace_power: alloc.total() })
}

/// A `N × t` waveform whose sample covariance `X X^H / t` is exactly
/// `U diag(λ) U^H`: scaled DFT rows rotated by the basis.
pub fn realize_waveform(alloc: &PowerAllocation, basis: &DMatrix<Complex64>, t: usize) -> Result<DMatrix<Complex64>> {
    check_basis(alloc, basis)?;
    let n = alloc.len();
    if t < n {
        return Err(CasError::Domain(format!("need at least {n} symbols, got {t}")));
    }
    let tf = t as f64;
    let rows = DMatrix::from_fn(n, t, |i, j| {
        let phase = 2.0 * std::f64::consts::PI * ((i * j) % t) as f64 / tf;
        Complex64::from_polar((alloc.as_slice()[i]).sqrt(), phase)
    });
    Ok(basis * rows)
}

/// Hermitian PSD square root via eigen-decomposition.
fn hermitian_sqrt(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (values, vectors) = hermitian_eigen(m);
    let d = diag_complex(values.iter().map(|v| v.max(0.0).sqrt()));
    &vectors * d * vectors.adjoint()
}

/// `t` i.i.d. columns drawn from `CN(0, cov)`.
pub fn sample_waveform(cov: &WaveformCovariance, t: usize, seed: u64) -> DMatrix<Complex64> {
    let n = cov.matrix.nrows();
    let root = hermitian_sqrt(&cov.matrix);
    let mut rng = rng_for(seed, WAVEFORM_STREAM);
    let mut white = DMatrix::zeros(n, t);
    for j in 0..t {
        for i in 0..n {
            white[(i, j)] = complex_gaussian(&mut rng, 1.0);
        }
    }
    root * white
}

/// Sensing MMSE evaluated directly from the waveform:
/// `M_s · Tr[(σ_η^{-2} I_N + σ_s^{-2} X* X^T)^{-1}]`.
pub fn mmse_matrix_oracle(x_s: &DMatrix<Complex64>, cfg: &SystemConfig) -> Result<f64> {
    check_len("waveform rows", cfg.n_tx, x_s.nrows())?;
    check_len("waveform columns", cfg.n_symbols, x_s.ncols())?;
    let n = cfg.n_tx;
    let conj = x_s.map(|z| z.conj());
    let info = &conj * x_s.transpose() * Complex64::new(1.0 / cfg.var_s, 0.0)
        + DMatrix::<Complex64>::identity(n, n) * Complex64::new(1.0 / cfg.var_eta, 0.0);
    let chol =
        info.cholesky().ok_or_else(|| CasError::Degenerate("information matrix not positive definite".into()))?;
    let inv = chol.inverse();
    let trace: f64 = (0..n).map(|i| inv[(i, i)].re).sum();
    Ok(cfg.m_s as f64 * trace)
}

/// Block capacity `ln det(I + T H R H^H / σ_c²)` of a covariance `R`.
pub fn capacity_logdet(h: &DMatrix<Complex64>, cov: &WaveformCovariance, cfg: &SystemConfig) -> Result<f64> {
    check_len("covariance size", h.ncols(), cov.matrix.nrows())?;
    let m = h.nrows();
    let scale = Complex64::new(cfg.n_symbols as f64 / cfg.var_c, 0.0);
    let a = DMatrix::<Complex64>::identity(m, m) + h * &cov.matrix * h.adjoint() * scale;
    let chol = a.cholesky().ok_or_else(|| CasError::Degenerate("I + HRH^H not positive definite".into()))?;
    Ok(2.0 * (0..m).map(|i| chol.l_dirty()[(i, i)].re.ln()).sum::<f64>())
}

/// Empirical sensing distortion with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// Simulates the sensing model `y = (I ⊗ X^T) h + z` and the MMSE estimator
/// `ĥ = σ_η² X̃^H R_y^{-1} y`, returning the mean squared error over trials.
///
/// The waveform is the exact realization of `alloc` from [`realize_waveform`]
/// in the identity basis. `R_y` is block diagonal with one `T × T` block per
/// receive antenna, so the estimator gain is factored once and reused.
pub fn mmse_monte_carlo(
    alloc: &PowerAllocation,
    cfg: &SystemConfig,
    trials: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    cfg.validate()?;
    check_len("sensing allocation", cfg.n_tx, alloc.len())?;
    if trials == 0 {
        return Err(CasError::Domain("need at least one trial".into()));
    }
    let (n, t) = (cfg.n_tx, cfg.n_symbols);
    let x = realize_waveform(alloc, &DMatrix::identity(n, n), t)?;
    let xt = x.transpose();
    let block = &xt * xt.adjoint() * Complex64::new(cfg.var_eta, 0.0)
        + DMatrix::<Complex64>::identity(t, t) * Complex64::new(cfg.var_s, 0.0);
    let chol =
        block.cholesky().ok_or_else(|| CasError::Degenerate("observation covariance not positive definite".into()))?;
    // W = σ_η² X* R^{-1}  ⇔  W^H = R^{-1} (σ_η² X^T).
    let gain = chol.solve(&(&xt * Complex64::new(cfg.var_eta, 0.0))).adjoint();

    let mut errors = Vec::with_capacity(trials);
    let mut h = DVector::<Complex64>::zeros(n);
    let mut y = DVector::<Complex64>::zeros(t);
    for trial in 0..trials {
        let mut rng = rng_for(seed, MONTE_CARLO_STREAM + trial as u64);
        let mut err = 0.0;
        for _ in 0..cfg.m_s {
            for v in h.iter_mut() {
                *v = complex_gaussian(&mut rng, cfg.var_eta);
            }
            y.gemv(Complex64::new(1.0, 0.0), &xt, &h, Complex64::new(0.0, 0.0));
            for v in y.iter_mut() {
                *v += complex_gaussian(&mut rng, cfg.var_s);
            }
            let est = &gain * &y;
            err += (est - &h).norm_squared();
        }
        errors.push(err);
    }
    let k = trials as f64;
    let mean = errors.iter().sum::<f64>() / k;
    let var = if trials > 1 { errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (k - 1.0) } else { 0.0 };
    Ok(MonteCarloEstimate { mean, std_error: (var / k).sqrt(), trials })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sensing_distortion;

    fn cfg() -> SystemConfig {
        SystemConfig::default()
    }

    #[test]
    fn rayleigh_is_deterministic() {
        let a = generate_rayleigh(7, 5, 10);
        let b = generate_rayleigh(7, 5, 10);
        assert_eq!(a.h, b.h);
        assert_eq!(a.gram_eigs, b.gram_eigs);
        assert_ne!(a.h, generate_rayleigh(8, 5, 10).h);
    }

    #[test]
    fn rank_bound() {
        let ch = generate_rayleigh(0, 5, 10);
        assert_eq!(ch.gram_eigs.len(), 10);
        assert!(ch.gram_eigs.iter().all(|&v| v >= 0.0));
        assert!(ch.gram_eigs.windows(2).all(|w| w[0] >= w[1]));
        let nonzero = ch.gram_eigs.iter().filter(|&&v| v > 0.0).count();
        assert_eq!(nonzero, 5);
    }

    #[test]
    fn entry_variance_is_one() {
        let mut rng = rng_for(11, CHANNEL_STREAM);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| complex_gaussian(&mut rng, 1.0).norm_sqr()).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn eigen_round_trip() {
        let ch = generate_rayleigh(3, 5, 10);
        assert!(unitarity_residual(&ch.eigvecs) < 1e-10);
        let gram = ch.h.adjoint() * &ch.h;
        let diff = (ch.reconstructed_gram() - gram).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-10, "{diff}");
    }

    #[test]
    fn alpha_scaling() {
        let c = SystemConfig { n_tx: 1, var_c: 10.0, ..cfg() };
        let ch = CommChannel::from_matrix(DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)), 0);
        assert_eq!(alphas_from_channel(&ch, &c), vec![10.0]);

        let zero = CommChannel::from_matrix(DMatrix::zeros(5, 10), 0);
        assert!(alphas_from_channel(&zero, &cfg()).iter().all(|&a| a == 0.0));

        let c = SystemConfig { n_tx: 2, ..cfg() }.with_snrs(20.0, 10.0);
        assert!((c.var_c - 10.0).abs() < 1e-12);
        let h = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(2f64.sqrt(), 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
            ],
        );
        let a = alphas_from_channel(&CommChannel::from_matrix(h, 0), &c);
        assert!((a[0] - 20.0).abs() < 1e-10 && (a[1] - 10.0).abs() < 1e-10);
    }

    #[test]
    fn covariance_construction() {
        let id = DMatrix::<Complex64>::identity(2, 2);
        let alloc = PowerAllocation::new(vec![1.0, 2.0]).unwrap();
        let cov = covariance_from_alloc(&alloc, &id).unwrap();
        assert_eq!(cov.matrix[(0, 0)].re, 1.0);
        assert_eq!(cov.matrix[(1, 1)].re, 2.0);
        assert_eq!(cov.matrix[(0, 1)].norm(), 0.0);
        assert_eq!(cov.trace_power, 3.0);

        let u = generate_rayleigh(5, 6, 6).eigvecs;
        let iso = covariance_from_alloc(&PowerAllocation::new(vec![0.3; 6]).unwrap(), &u).unwrap();
        let off = (iso.matrix - DMatrix::<Complex64>::identity(6, 6) * Complex64::new(0.3, 0.0))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(off < 1e-12);

        let bad = DMatrix::from_element(2, 2, Complex64::new(1.0, 0.0));
        assert!(matches!(covariance_from_alloc(&alloc, &bad), Err(CasError::Domain(_))));
    }

    #[test]
    fn covariance_eigenvalues_match_allocation() {
        let u = generate_rayleigh(9, 5, 5).eigvecs;
        let lam = vec![0.5, 0.05, 0.3, 0.0, 0.15];
        let cov = covariance_from_alloc(&PowerAllocation::new(lam.clone()).unwrap(), &u).unwrap();
        let (mut got, _) = hermitian_eigen(&cov.matrix);
        let mut want = lam;
        want.sort_by(|a, b| b.total_cmp(a));
        got.sort_by(|a, b| b.total_cmp(a));
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-10);
        }
    }

    #[test]
    fn sampled_waveform_statistics() {
        let n = 4;
        let zero = WaveformCovariance { matrix: DMatrix::zeros(n, n), trace_power: 0.0 };
        assert!(sample_waveform(&zero, 16, 1).iter().all(|z| z.norm() == 0.0));

        let id = WaveformCovariance { matrix: DMatrix::identity(n, n), trace_power: n as f64 };
        let t = 10_000;
        let x = sample_waveform(&id, t, 2);
        let sample = &x * x.adjoint() / Complex64::new(t as f64, 0.0);
        let dist = (sample - DMatrix::<Complex64>::identity(n, n)).norm();
        assert!(dist < 0.1 * (n as f64).sqrt(), "{dist}");
        assert_eq!(x, sample_waveform(&id, t, 2));
    }

    #[test]
    fn realized_waveform_has_exact_sample_covariance() {
        let u = generate_rayleigh(4, 3, 3).eigvecs;
        let alloc = PowerAllocation::new(vec![0.2, 0.5, 0.3]).unwrap();
        let x = realize_waveform(&alloc, &u, 20).unwrap();
        let sample = &x * x.adjoint() / Complex64::new(20.0, 0.0);
        let cov = covariance_from_alloc(&alloc, &u).unwrap();
        let diff = (sample - cov.matrix).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-13);
        assert!(realize_waveform(&alloc, &u, 2).is_err());
    }

    #[test]
    fn matrix_oracle_cases() {
        let c = cfg();
        let zero = DMatrix::<Complex64>::zeros(10, 100);
        assert!((mmse_matrix_oracle(&zero, &c).unwrap() - 5.0).abs() < 1e-12);

        let uniform = PowerAllocation::new(vec![0.1; 10]).unwrap();
        let x = realize_waveform(&uniform, &DMatrix::identity(10, 10), 100).unwrap();
        assert!((mmse_matrix_oracle(&x, &c).unwrap() - 2.5).abs() < 1e-9);

        // Orthogonal rows with distinct norms: λ_i = ‖row_i‖² / T.
        let norms = [0.0, 1.0, 2.0, 3.5, 0.5, 4.0, 1.5, 2.5, 3.0, 0.25];
        let x =
            DMatrix::from_fn(
                10,
                100,
                |i, j| if i == j { Complex64::new(norms[i], 0.0) } else { Complex64::new(0.0, 0.0) },
            );
        let lam: Vec<f64> = norms.iter().map(|r| r * r / 100.0).collect();
        let want = sensing_distortion(&PowerAllocation::new(lam).unwrap(), &c).unwrap();
        assert!((mmse_matrix_oracle(&x, &c).unwrap() - want).abs() <= 1e-12 * want);

        assert!(mmse_matrix_oracle(&DMatrix::zeros(3, 100), &c).is_err());
    }

    #[test]
    fn logdet_matches_eigform() {
        let c = cfg();
        let ch = generate_rayleigh(12, 5, 10);
        let alphas = alphas_from_channel(&ch, &c);
        let wf = crate::waterfilling::waterfill_capacity(c.p_total, &alphas).unwrap();
        let cov = covariance_from_alloc(&wf.alloc, &ch.eigvecs).unwrap();
        let logdet = capacity_logdet(&ch.h, &cov, &c).unwrap();
        assert!((logdet - wf.capacity).abs() <= 1e-9 * wf.capacity, "{logdet} vs {}", wf.capacity);
    }

    #[test]
    fn monte_carlo_zero_waveform() {
        let c = cfg();
        let est = mmse_monte_carlo(&PowerAllocation::zeros(10), &c, 400, 1).unwrap();
        assert!((est.mean - 5.0).abs() <= 3.0 * est.std_error, "{est:?}");
        let one = mmse_monte_carlo(&PowerAllocation::zeros(10), &c, 1, 9).unwrap();
        assert_eq!(one, mmse_monte_carlo(&PowerAllocation::zeros(10), &c, 1, 9).unwrap());
        assert!(mmse_monte_carlo(&PowerAllocation::zeros(10), &c, 0, 9).is_err());
    }
}
