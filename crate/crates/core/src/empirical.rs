//! Empirical distribution functions, the long-run covariance `Γ(s, s')` of
//! indicator processes, and Kiefer process simulation on grids.
//!
//! Events `{X ≤ s}` use the coordinatewise order on `R^d`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::chains::FiniteProcess;
use crate::error::{Error, Result};

/// Tail bound certified by [`gamma_grid`] when no truncation is given.
pub const GAMMA_TAIL_TARGET: f64 = 1e-10;
/// Most negative eigenvalue clipped to zero before taking a matrix root.
pub const EIGEN_TOLERANCE: f64 = 1e-8;
/// Series terms at or below this size are treated as round-off.
const TERM_FLOOR: f64 = 1e-15;
const MAX_TRUNCATION: usize = 1 << 16;

/// `u ≤ v` coordinatewise.
pub fn leq(u: &[f64], v: &[f64]) -> bool {
    u.iter().zip(v).all(|(a, b)| a <= b)
}

/// `(1/n) Σ (1{X_i ≤ t} - F(t))`.
pub fn centered_edf(x_samples: &[Vec<f64>], t: &[f64], cdf_t: f64) -> f64 {
    if x_samples.is_empty() {
        return 0.0;
    }
    let count = x_samples.iter().filter(|x| leq(x, t)).count();
    count as f64 / x_samples.len() as f64 - cdf_t
}

/// `R(s, t) = Σ_{i ≤ ⌊t⌋} (1{X_i ≤ s} - F(s))`.
pub fn empirical_process(x_samples: &[Vec<f64>], s: &[f64], t: f64, cdf_s: f64) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "time {t} must be nonnegative"
        )));
    }
    let m = t.floor() as usize;
    if m > x_samples.len() {
        return Err(Error::InvalidArgument(format!(
            "floor(t) = {m} exceeds the {} available samples",
            x_samples.len()
        )));
    }
    let count = x_samples[..m].iter().filter(|x| leq(x, s)).count();
    Ok(count as f64 - m as f64 * cdf_s)
}

/// `R(s, t)` on a grid, rows indexed by `s`, columns by `t`.
pub fn empirical_process_grid(
    x_samples: &[Vec<f64>],
    s_grid: &[Vec<f64>],
    t_grid: &[f64],
    cdf: &[f64],
) -> Result<DMatrix<f64>> {
    if cdf.len() != s_grid.len() {
        return Err(Error::GridMismatch(format!(
            "{} cdf values for {} grid points",
            cdf.len(),
            s_grid.len()
        )));
    }
    let mut out = DMatrix::zeros(s_grid.len(), t_grid.len());
    for (i, s) in s_grid.iter().enumerate() {
        for (j, &t) in t_grid.iter().enumerate() {
            out[(i, j)] = empirical_process(x_samples, s, t, cdf[i])?;
        }
    }
    Ok(out)
}

/// `√n sup_s |F_n(s) - F(s)|` for scalar samples and a continuous `F`.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let d = samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            f64::max((i + 1) as f64 / n - f, f - i as f64 / n)
        })
        .fold(0.0, f64::max);
    d * n.sqrt()
}

/// `sup_x |F_a(x) - F_b(x)|` between two empirical distributions.
pub fn two_sample_ks(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Limiting law of `√n D_n`: `1 - 2 Σ (-1)^{k-1} exp(-2 k² x²)`.
pub fn kolmogorov_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < 1.0 {
        // Jacobi theta form converges fast for small x
        let c = std::f64::consts::PI.powi(2) / (8.0 * x * x);
        let s: f64 = (1..=50)
            .map(|k| {
                let m = (2 * k - 1) as f64;
                (-m * m * c).exp()
            })
            .sum();
        ((2.0 * std::f64::consts::PI).sqrt() / x * s).min(1.0)
    } else {
        let s: f64 = (1..=100)
            .map(|k| {
                let k = k as f64;
                let sign = if k as u64 % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * k * k * x * x).exp()
            })
            .sum();
        1.0 - 2.0 * s
    }
}

/// Inverse of [`kolmogorov_cdf`] by bisection.
pub fn kolmogorov_quantile(p: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 10.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Cartesian product of per-coordinate grids, last coordinate fastest.
pub fn product_grid(per_coord: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for axis in per_coord {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

/// `P(X_1 ≤ s)` under the stationary law.
pub fn joint_cdf(proc: &FiniteProcess, s: &[f64]) -> f64 {
    proc.stationary()
        .iter()
        .enumerate()
        .filter(|(st, _)| leq(proc.observe(*st), s))
        .map(|(_, q)| q)
        .sum()
}

fn indicator(proc: &FiniteProcess, s: &[f64]) -> Result<Vec<f64>> {
    if s.len() != proc.dim() {
        return Err(Error::DimensionMismatch {
            expected: proc.dim(),
            found: s.len(),
        });
    }
    Ok((0..proc.n_states())
        .map(|st| if leq(proc.observe(st), s) { 1.0 } else { 0.0 })
        .collect())
}

/// `Γ(s, s')` truncated after `n_trunc` terms, with a tail bound.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaValue {
    pub value: f64,
    pub tail_bound: f64,
    pub n_trunc: usize,
    /// `terms[0]` is the lag-zero covariance, `terms[n-1]` for `n ≥ 2` is
    /// `E g_1(s) g_n(s') + E g_1(s') g_n(s)`.
    pub terms: Vec<f64>,
}

/// Tail bound from a geometric fit to the envelope of `|terms[n]|`, `n ≥ 2`.
///
/// With `e_n = max_{m ≥ n} |t_m|` and `ρ = (e_N / e_h)^{1/(N-h)}` for
/// `h = ⌈N/2⌉`, the terms satisfy `|t_n| ≤ C ρ^n` with `C = e_N ρ^{-N}`
/// past `h`, and the tail is `C ρ^{N+1} / (1 - ρ) = e_N ρ / (1 - ρ)`.
fn geometric_tail(abs_terms: &[f64]) -> Result<f64> {
    let tail = &abs_terms[1.min(abs_terms.len())..];
    let n = tail.len();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "at least two terms are needed".into(),
        ));
    }
    let mut envelope = tail.to_vec();
    for i in (0..n - 1).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }
    let h = n / 2;
    let (eh, en) = (envelope[h], envelope[n - 1]);
    if eh <= TERM_FLOOR {
        return Ok(0.0);
    }
    let rho = if en <= 0.0 {
        0.0
    } else {
        (en / eh).powf(1.0 / (n - 1 - h).max(1) as f64)
    };
    if rho >= 1.0 {
        return Err(Error::NoDecay(rho));
    }
    Ok(en * rho / (1.0 - rho))
}

pub fn gamma_exact(
    proc: &FiniteProcess,
    s: &[f64],
    s2: &[f64],
    n_trunc: usize,
) -> Result<GammaValue> {
    let grid = gamma_grid(proc, &[s.to_vec(), s2.to_vec()], Some(n_trunc))?;
    let terms = grid.entry_terms(0, 1);
    Ok(GammaValue {
        value: grid.matrix[(0, 1)],
        tail_bound: grid.tail_bound,
        n_trunc,
        terms,
    })
}

/// `Γ` on a grid of points.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCovariance {
    pub s_grid: Vec<Vec<f64>>,
    pub matrix: DMatrix<f64>,
    pub n_trunc: usize,
    pub tail_bound: f64,
    /// Series terms per lag, each a full matrix.
    term_mats: Vec<DMatrix<f64>>,
}

impl GridCovariance {
    /// Builds a covariance directly from a matrix (no series terms).
    pub fn from_matrix(s_grid: Vec<Vec<f64>>, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != s_grid.len() || matrix.ncols() != s_grid.len() {
            return Err(Error::GridMismatch(format!(
                "{}x{} matrix for {} grid points",
                matrix.nrows(),
                matrix.ncols(),
                s_grid.len()
            )));
        }
        Ok(Self {
            s_grid,
            matrix,
            n_trunc: 0,
            tail_bound: 0.0,
            term_mats: Vec::new(),
        })
    }

    fn entry_terms(&self, i: usize, j: usize) -> Vec<f64> {
        self.term_mats.iter().map(|m| m[(i, j)]).collect()
    }

    pub fn max_asymmetry(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).abs().max()
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        SymmetricEigen::new(self.matrix.clone()).eigenvalues
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().min()
    }

    /// `R` with `R Rᵀ = Γ`, from the symmetric eigendecomposition with
    /// eigenvalues in `[-1e-8, 0)` clipped to zero.
    pub fn root(&self) -> Result<DMatrix<f64>> {
        let sym = (&self.matrix + self.matrix.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let mut scaled = eig.eigenvectors.clone();
        for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda < -EIGEN_TOLERANCE {
                return Err(Error::Indefinite(lambda));
            }
            let r = lambda.max(0.0).sqrt();
            scaled.column_mut(j).scale_mut(r);
        }
        Ok(scaled)
    }
}

/// `Γ(s_i, s_j)` for all grid points. With `n_trunc = None` the truncation
/// doubles from 32 until the tail bound is at most [`GAMMA_TAIL_TARGET`].
pub fn gamma_grid(
    proc: &FiniteProcess,
    s_grid: &[Vec<f64>],
    n_trunc: Option<usize>,
) -> Result<GridCovariance> {
    let indicators = s_grid
        .iter()
        .map(|s| indicator(proc, s))
        .collect::<Result<Vec<_>>>()?;
    let q = proc.stationary();
    let g = s_grid.len();
    let cdf: Vec<f64> = indicators
        .iter()
        .map(|e| e.iter().zip(q).map(|(a, b)| a * b).sum())
        .collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    let lag0 = DMatrix::from_fn(g, g, |i, j| {
        let joint: f64 = (0..q.len())
            .map(|st| q[st] * indicators[i][st] * indicators[j][st])
            .sum();
        joint - cdf[i] * cdf[j]
    });
    let mut term_mats = vec![lag0];
    let mut carried: Vec<Vec<f64>> = indicators
        .iter()
        .map(|e| e.iter().zip(q).map(|(a, b)| a * b).collect())
        .collect();

    let fixed = n_trunc.is_some();
    let mut target = match n_trunc {
        Some(n) if n < 2 => {
            return Err(Error::InvalidArgument(
                "truncation must be at least 2".into(),
            ))
        }
        Some(n) => n,
        None => 32,
    };
    loop {
        while term_mats.len() < target {
            for v in carried.iter_mut() {
                *v = proc.step(v);
            }
            let cross = DMatrix::from_fn(g, g, |i, j| {
                dot(&carried[i], &indicators[j]) - cdf[i] * cdf[j]
            });
            term_mats.push(&cross + cross.transpose());
        }
        let abs_terms: Vec<f64> = term_mats.iter().map(|m| m.abs().max()).collect();
        let tail_bound = geometric_tail(&abs_terms)?;
        if fixed || tail_bound <= GAMMA_TAIL_TARGET || target >= MAX_TRUNCATION {
            if !fixed && tail_bound > GAMMA_TAIL_TARGET {
                return Err(Error::NoDecay(tail_bound));
            }
            let matrix = term_mats
                .iter()
                .fold(DMatrix::zeros(g, g), |acc, m| acc + m);
            return Ok(GridCovariance {
                s_grid: s_grid.to_vec(),
                matrix,
                n_trunc: target,
                tail_bound,
                term_mats,
            });
        }
        target *= 2;
    }
}

/// Kiefer process values on an `s × t` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KieferSample {
    pub s_grid: Vec<Vec<f64>>,
    pub t_grid: Vec<f64>,
    /// Rows indexed by `s`, columns by `t`.
    pub values: DMatrix<f64>,
}

fn check_t_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.iter().any(|t| *t < 0.0 || !t.is_finite()) || t_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::GridMismatch(
            "time grid must be nondecreasing and nonnegative".into(),
        ));
    }
    Ok(())
}

/// Gaussian increments `√(t_j - t_{j-1}) R ξ_j` accumulated from `K(·, 0) = 0`.
pub fn kiefer_from_root<R: Rng + ?Sized>(
    root: &DMatrix<f64>,
    t_grid: &[f64],
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    check_t_grid(t_grid)?;
    let g = root.nrows();
    let mut values = DMatrix::zeros(g, t_grid.len());
    let mut current = DVector::zeros(g);
    let mut prev_t = 0.0;
    for (j, &t) in t_grid.iter().enumerate() {
        let dt = t - prev_t;
        if dt > 0.0 {
            let xi = DVector::from_fn(root.ncols(), |_, _| rng.sample::<f64, _>(StandardNormal));
            current += root * xi * dt.sqrt();
        }
        values.set_column(j, &current);
        prev_t = t;
    }
    Ok(values)
}

pub fn kiefer_sample<R: Rng + ?Sized>(
    gamma: &GridCovariance,
    t_grid: &[f64],
    rng: &mut R,
) -> Result<KieferSample> {
    let root = gamma.root()?;
    let values = kiefer_from_root(&root, t_grid, rng)?;
    Ok(KieferSample {
        s_grid: gamma.s_grid.clone(),
        t_grid: t_grid.to_vec(),
        values,
    })
}

/// Largest absolute entrywise difference.
pub fn sup_distance(r_grid: &DMatrix<f64>, k_grid: &DMatrix<f64>) -> Result<f64> {
    if r_grid.shape() != k_grid.shape() {
        return Err(Error::GridMismatch(format!(
            "{:?} vs {:?}",
            r_grid.shape(),
            k_grid.shape()
        )));
    }
    Ok((r_grid - k_grid).abs().max())
}
