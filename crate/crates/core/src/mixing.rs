//! Dependence coefficients between a past block and an `n`-separated future
//! block.
//!
//! Every coefficient is computed from a [`JointTable`]: the joint
//! probabilities of past cells and future cells together with their
//! marginals. Cells are observed-value blocks for the ground truth
//! ([`block_table`]), products of refined atom intervals for the lifted law
//! ([`lifted_table`]), or partition cells of sampled windows
//! ([`WindowCounts`]).
//!
//! With `M = joint - past ⊗ future`:
//! - `beta = 1/2 Σ |M|`,
//! - `phi = max over past cells a with positive mass of 1/2 Σ_b |joint_ab / past_a - future_b|`,
//! - `alpha = max over cell sets A, B of |Σ_{A×B} M|`.
//!
//! Since `M` has zero row sums, the optimal `B` for a fixed `A` is the set of
//! columns with positive `Σ_{a∈A} M_ab`, and the negative extreme is the
//! complement; so `alpha = max_A Σ_b (Σ_{a∈A} M_ab)^+`. Rows that are
//! positive multiples of each other always enter an optimal `A` together, so
//! they are merged before the scan; the scan is exhaustive when the smaller
//! side has at most [`EXHAUSTIVE_MAX`] cells.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::chains::FiniteProcess;
use crate::error::{Error, Result};
use crate::lift::{cylinder_measure_with, AtomLookup, IntervalCylinder, IntervalUnion};
use crate::marginals::MixedMarginal;

/// Largest number of cells per block.
pub const MAX_BLOCK_CELLS: usize = 4096;
/// Largest reduced side scanned exhaustively for alpha.
pub const EXHAUSTIVE_MAX: usize = 20;
/// Fewest windows accepted by the Monte Carlo estimator.
pub const MIN_WINDOWS: u64 = 100_000;
const BOOTSTRAP_REPLICATES: usize = 200;
const ZERO_ROW: f64 = 1e-15;
const PROPORTIONAL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Coefficient {
    Alpha,
    Beta,
    Phi,
}

/// Joint law of past and future cells.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    pub past: Vec<f64>,
    pub future: Vec<f64>,
    /// Row-major, `past.len() × future.len()`.
    pub joint: Vec<f64>,
}

impl JointTable {
    pub fn new(past: Vec<f64>, future: Vec<f64>, joint: Vec<f64>) -> Result<Self> {
        if joint.len() != past.len() * future.len() {
            return Err(Error::DimensionMismatch {
                expected: past.len() * future.len(),
                found: joint.len(),
            });
        }
        Ok(Self {
            past,
            future,
            joint,
        })
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.joint[a * self.future.len() + b]
    }

    fn deviation(&self) -> Vec<Vec<f64>> {
        let nf = self.future.len();
        self.past
            .iter()
            .enumerate()
            .map(|(a, &pa)| {
                (0..nf)
                    .map(|b| self.joint[a * nf + b] - pa * self.future[b])
                    .collect()
            })
            .collect()
    }

    pub fn coefficient(&self, kind: Coefficient) -> f64 {
        match kind {
            Coefficient::Alpha => self.alpha(),
            Coefficient::Beta => self.beta(),
            Coefficient::Phi => self.phi(),
        }
    }

    pub fn coefficients(&self) -> Coefficients {
        Coefficients {
            alpha: self.alpha(),
            beta: self.beta(),
            phi: self.phi(),
        }
    }

    pub fn beta(&self) -> f64 {
        0.5 * self
            .deviation()
            .iter()
            .flatten()
            .map(|v| v.abs())
            .sum::<f64>()
    }

    pub fn phi(&self) -> f64 {
        let nf = self.future.len();
        let mut best = 0.0f64;
        for (a, &pa) in self.past.iter().enumerate() {
            if pa <= 0.0 {
                continue;
            }
            let tv = 0.5
                * (0..nf)
                    .map(|b| (self.joint[a * nf + b] / pa - self.future[b]).abs())
                    .sum::<f64>();
            best = best.max(tv);
        }
        best
    }

    pub fn alpha(&self) -> f64 {
        let mut m = merge_proportional(self.deviation());
        m = transpose(&merge_proportional(transpose(&m)));
        if m.is_empty() || m[0].is_empty() {
            return 0.0;
        }
        if m.len() > m[0].len() {
            m = transpose(&m);
        }
        if m.len() <= EXHAUSTIVE_MAX {
            alpha_exhaustive(&m)
        } else {
            alpha_alternating(&m)
        }
    }
}

/// The three coefficients of one table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub alpha: f64,
    pub beta: f64,
    pub phi: f64,
}

impl Coefficients {
    pub fn get(&self, kind: Coefficient) -> f64 {
        match kind {
            Coefficient::Alpha => self.alpha,
            Coefficient::Beta => self.beta,
            Coefficient::Phi => self.phi,
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.alpha - other.alpha)
            .abs()
            .max((self.beta - other.beta).abs())
            .max((self.phi - other.phi).abs())
    }
}

fn transpose(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    if m.is_empty() {
        return Vec::new();
    }
    (0..m[0].len())
        .map(|j| m.iter().map(|row| row[j]).collect())
        .collect()
}

/// Drops zero rows and sums rows that are positive multiples of each other.
fn merge_proportional(rows: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut merged: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for row in rows {
        let scale = row.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if scale <= ZERO_ROW {
            continue;
        }
        let dir: Vec<f64> = row.iter().map(|v| v / scale).collect();
        let slot = merged.iter_mut().find(|(d, _)| {
            d.iter()
                .zip(&dir)
                .all(|(x, y)| (x - y).abs() <= PROPORTIONAL_TOLERANCE)
        });
        match slot {
            Some((_, sum)) => sum.iter_mut().zip(&row).for_each(|(s, v)| *s += v),
            None => merged.push((dir, row)),
        }
    }
    merged.into_iter().map(|(_, sum)| sum).collect()
}

fn positive_part_sum(v: &[f64]) -> f64 {
    v.iter().filter(|&&x| x > 0.0).sum()
}

fn alpha_exhaustive(m: &[Vec<f64>]) -> f64 {
    let rows = m.len();
    let cols = m[0].len();
    let mut acc = vec![0.0; cols];
    let mut in_set = vec![false; rows];
    let mut best = 0.0f64;
    // Gray code walk over all subsets of rows
    for i in 1u64..(1u64 << rows) {
        let flip = i.trailing_zeros() as usize;
        let sign = if in_set[flip] { -1.0 } else { 1.0 };
        in_set[flip] = !in_set[flip];
        acc.iter_mut()
            .zip(&m[flip])
            .for_each(|(a, v)| *a += sign * v);
        if i.is_power_of_two() || i % 1024 == 0 {
            // resync to bound drift from repeated add/subtract
            acc.iter_mut().for_each(|a| *a = 0.0);
            for (r, row) in m.iter().enumerate() {
                if in_set[r] {
                    acc.iter_mut().zip(row).for_each(|(a, v)| *a += v);
                }
            }
        }
        best = best.max(positive_part_sum(&acc));
    }
    best
}

/// Fixed-point iteration `A -> B(A) -> A(B)` from every singleton seed.
/// Returns the best value found; used only when exhaustive scanning is
/// infeasible.
fn alpha_alternating(m: &[Vec<f64>]) -> f64 {
    let rows = m.len();
    let cols = m[0].len();
    let mut best = 0.0f64;
    for seed in 0..rows {
        let mut a_set = vec![false; rows];
        a_set[seed] = true;
        for _ in 0..100 {
            let col_sums: Vec<f64> = (0..cols)
                .map(|b| (0..rows).filter(|&r| a_set[r]).map(|r| m[r][b]).sum())
                .collect();
            best = best.max(positive_part_sum(&col_sums));
            let b_set: Vec<bool> = col_sums.iter().map(|&v| v > 0.0).collect();
            let next: Vec<bool> = m
                .iter()
                .map(|row| {
                    row.iter()
                        .zip(&b_set)
                        .filter(|(_, &b)| b)
                        .map(|(v, _)| v)
                        .sum::<f64>()
                        > 0.0
                })
                .collect();
            if next == a_set || !next.iter().any(|&x| x) {
                break;
            }
            a_set = next;
        }
    }
    best
}

fn check_lag(n: usize, block_len: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("lag n must be at least 1".into()));
    }
    if block_len == 0 {
        return Err(Error::InvalidArgument(
            "block length L must be at least 1".into(),
        ));
    }
    Ok(())
}

fn block_count(cells: usize, block_len: usize, what: &'static str) -> Result<usize> {
    let mut total = 1usize;
    for _ in 0..block_len {
        total = total.saturating_mul(cells);
        if total > MAX_BLOCK_CELLS {
            return Err(Error::SizeCap {
                what,
                size: total,
                cap: MAX_BLOCK_CELLS,
            });
        }
    }
    Ok(total)
}

/// Digits of `index` in base `radix`, most significant first.
fn digits(mut index: usize, radix: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = index % radix;
        index /= radix;
    }
    out
}

/// Exact joint law of observed-value blocks at coordinates `-L+1..=0` and
/// `n..n+L-1`.
pub fn block_table(proc: &FiniteProcess, n: usize, block_len: usize) -> Result<JointTable> {
    check_lag(n, block_len)?;
    let symbols = proc.symbols();
    let k = symbols.len();
    let blocks = block_count(k, block_len, "observed blocks")?;
    let s = proc.n_states();
    let masks: Vec<Vec<f64>> = (0..k)
        .map(|sym| {
            (0..s)
                .map(|st| {
                    if symbols.of_state[st] == sym {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();

    let mut past = Vec::with_capacity(blocks);
    let mut carried = Vec::with_capacity(blocks);
    for a in 0..blocks {
        let word = digits(a, k, block_len);
        let mut v: Vec<f64> = proc.stationary().to_vec();
        for (t, &sym) in word.iter().enumerate() {
            if t > 0 {
                v = proc.step(&v);
            }
            v.iter_mut().zip(&masks[sym]).for_each(|(x, m)| *x *= m);
        }
        past.push(v.iter().sum());
        for _ in 0..n {
            v = proc.step(&v);
        }
        carried.push(v);
    }

    let mut future = Vec::with_capacity(blocks);
    let mut backward = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let word = digits(b, k, block_len);
        let mut h = masks[word[block_len - 1]].clone();
        for t in (0..block_len - 1).rev() {
            h = proc.step_back(&h);
            h.iter_mut().zip(&masks[word[t]]).for_each(|(x, m)| *x *= m);
        }
        future.push(proc.stationary().iter().zip(&h).map(|(q, x)| q * x).sum());
        backward.push(h);
    }

    let mut joint = Vec::with_capacity(blocks * blocks);
    for v in &carried {
        for h in &backward {
            joint.push(v.iter().zip(h).map(|(x, y)| x * y).sum());
        }
    }
    JointTable::new(past, future, joint)
}

pub fn alpha_block_exact(proc: &FiniteProcess, n: usize, block_len: usize) -> Result<f64> {
    Ok(block_table(proc, n, block_len)?.alpha())
}

pub fn beta_block_exact(proc: &FiniteProcess, n: usize, block_len: usize) -> Result<f64> {
    Ok(block_table(proc, n, block_len)?.beta())
}

pub fn phi_block_exact(proc: &FiniteProcess, n: usize, block_len: usize) -> Result<f64> {
    Ok(block_table(proc, n, block_len)?.phi())
}

/// Per-coordinate refinement of the atom intervals into `r` equal pieces.
fn refined_pieces(marginal: &MixedMarginal, r: usize) -> Result<Vec<IntervalUnion>> {
    let mut out = Vec::new();
    for iv in marginal.atom_intervals() {
        let hi = iv.hi.min(1.0);
        for j in 0..r {
            let a = iv.lo + (hi - iv.lo) * (j as f64 / r as f64);
            let b = if j + 1 == r {
                hi
            } else {
                iv.lo + (hi - iv.lo) * ((j + 1) as f64 / r as f64)
            };
            out.push(IntervalUnion::interval(a, b)?);
        }
    }
    Ok(out)
}

/// Exact lifted joint law over blocks of refined cells: every atom interval
/// of every coordinate is split into `r` equal subintervals, and each block
/// probability is a lifted cylinder measure.
pub fn lifted_table(
    marginals: &[MixedMarginal],
    proc: &FiniteProcess,
    n: usize,
    block_len: usize,
    r: usize,
) -> Result<JointTable> {
    check_lag(n, block_len)?;
    if r == 0 {
        return Err(Error::InvalidArgument(
            "refinement r must be at least 1".into(),
        ));
    }
    let lookup = AtomLookup::new(marginals, proc)?;
    let per_coord = marginals
        .iter()
        .map(|m| refined_pieces(m, r))
        .collect::<Result<Vec<_>>>()?;
    let cell_radix: Vec<usize> = per_coord.iter().map(Vec::len).collect();
    let cells: usize = cell_radix.iter().product();
    let blocks = block_count(cells, block_len, "lifted cells per block")?;

    let cell_factor = |c: usize| -> Vec<IntervalUnion> {
        let mut idx = c;
        let mut f = vec![IntervalUnion::empty(); cell_radix.len()];
        for k in (0..cell_radix.len()).rev() {
            f[k] = per_coord[k][idx % cell_radix[k]].clone();
            idx /= cell_radix[k];
        }
        f
    };
    let block_factors = |blk: usize| -> Vec<Vec<IntervalUnion>> {
        digits(blk, cells, block_len)
            .into_iter()
            .map(cell_factor)
            .collect()
    };
    let d = marginals.len();
    let d_i64 = block_len as i64;

    let mut past = Vec::with_capacity(blocks);
    let mut future = Vec::with_capacity(blocks);
    let all: Vec<Vec<Vec<IntervalUnion>>> = (0..blocks).map(block_factors).collect();
    for f in &all {
        let cyl = IntervalCylinder::new(1 - d_i64, f.clone());
        past.push(cylinder_measure_with(&lookup, proc, &cyl)?);
        let cyl = IntervalCylinder::new(n as i64, f.clone());
        future.push(cylinder_measure_with(&lookup, proc, &cyl)?);
    }
    let gap = vec![vec![IntervalUnion::full(); d]; n - 1];
    let mut joint = Vec::with_capacity(blocks * blocks);
    for fa in &all {
        for fb in &all {
            let mut factors = fa.clone();
            factors.extend(gap.iter().cloned());
            factors.extend(fb.iter().cloned());
            let cyl = IntervalCylinder::new(1 - d_i64, factors);
            joint.push(cylinder_measure_with(&lookup, proc, &cyl)?);
        }
    }
    JointTable::new(past, future, joint)
}

pub fn alpha_lifted(
    marginals: &[MixedMarginal],
    proc: &FiniteProcess,
    n: usize,
    block_len: usize,
    r: usize,
) -> Result<f64> {
    Ok(lifted_table(marginals, proc, n, block_len, r)?.alpha())
}

pub fn beta_lifted(
    marginals: &[MixedMarginal],
    proc: &FiniteProcess,
    n: usize,
    block_len: usize,
    r: usize,
) -> Result<f64> {
    Ok(lifted_table(marginals, proc, n, block_len, r)?.beta())
}

pub fn phi_lifted(
    marginals: &[MixedMarginal],
    proc: &FiniteProcess,
    n: usize,
    block_len: usize,
    r: usize,
) -> Result<f64> {
    Ok(lifted_table(marginals, proc, n, block_len, r)?.phi())
}

/// Product partition of `(0,1)^d` from per-coordinate interior cut points.
#[derive(Debug, Clone, PartialEq)]
pub struct CellPartition {
    cuts: Vec<Vec<f64>>,
}

impl CellPartition {
    pub fn new(cuts: Vec<Vec<f64>>) -> Result<Self> {
        if cuts.is_empty() {
            return Err(Error::InvalidArgument(
                "partition needs at least one coordinate".into(),
            ));
        }
        for c in &cuts {
            if c.iter().any(|&x| !(x > 0.0 && x < 1.0)) || c.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidArgument(
                    "cut points must be increasing and inside (0, 1)".into(),
                ));
            }
        }
        Ok(Self { cuts })
    }

    /// `m` equal-width cells in each of `d` coordinates.
    pub fn equal(d: usize, m: usize) -> Result<Self> {
        Self::new(vec![(1..m).map(|i| i as f64 / m as f64).collect(); d])
    }

    pub fn dim(&self) -> usize {
        self.cuts.len()
    }

    pub fn cells(&self) -> usize {
        self.cuts.iter().map(|c| c.len() + 1).product()
    }

    pub fn cell_of(&self, u: &[f64]) -> usize {
        self.cuts.iter().zip(u).fold(0, |acc, (c, &x)| {
            acc * (c.len() + 1) + c.partition_point(|&cut| cut <= x)
        })
    }
}

/// Counts of (past block cell, future block cell) pairs over sampled
/// windows of length `2L + n - 1`.
#[derive(Debug, Clone)]
pub struct WindowCounts {
    partition: CellPartition,
    n: usize,
    block_len: usize,
    blocks: usize,
    counts: Vec<u64>,
    windows: u64,
}

/// Monte Carlo coefficient estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub windows: u64,
}

impl WindowCounts {
    pub fn new(partition: CellPartition, n: usize, block_len: usize) -> Result<Self> {
        check_lag(n, block_len)?;
        let blocks = block_count(partition.cells(), block_len, "partition cells per block")?;
        Ok(Self {
            partition,
            n,
            block_len,
            blocks,
            counts: vec![0; blocks * blocks],
            windows: 0,
        })
    }

    pub fn window_len(&self) -> usize {
        2 * self.block_len + self.n - 1
    }

    pub fn windows(&self) -> u64 {
        self.windows
    }

    fn block_index(&self, points: &[Vec<f64>]) -> usize {
        points.iter().fold(0, |acc, u| {
            acc * self.partition.cells() + self.partition.cell_of(u)
        })
    }

    /// Counts one window starting at `path[0]`.
    pub fn add_window(&mut self, path: &[Vec<f64>]) -> Result<()> {
        let len = self.window_len();
        if path.len() < len {
            return Err(Error::InvalidArgument(format!(
                "window needs {len} points, got {}",
                path.len()
            )));
        }
        if let Some(u) = path[..len].iter().find(|u| u.len() != self.partition.dim()) {
            return Err(Error::DimensionMismatch {
                expected: self.partition.dim(),
                found: u.len(),
            });
        }
        let a = self.block_index(&path[..self.block_len]);
        let start = self.block_len + self.n - 1;
        let b = self.block_index(&path[start..start + self.block_len]);
        self.counts[a * self.blocks + b] += 1;
        self.windows += 1;
        Ok(())
    }

    /// Counts every non-overlapping window of the path.
    pub fn add_path(&mut self, path: &[Vec<f64>]) -> Result<()> {
        let len = self.window_len();
        for chunk in path.chunks_exact(len) {
            self.add_window(chunk)?;
        }
        Ok(())
    }

    fn table_from(&self, counts: &[f64]) -> JointTable {
        let total: f64 = counts.iter().sum();
        let nb = self.blocks;
        let joint: Vec<f64> = counts.iter().map(|c| c / total).collect();
        let past = (0..nb)
            .map(|a| joint[a * nb..(a + 1) * nb].iter().sum())
            .collect();
        let future = (0..nb)
            .map(|b| (0..nb).map(|a| joint[a * nb + b]).sum())
            .collect();
        JointTable {
            past,
            future,
            joint,
        }
    }

    /// Plug-in table of empirical frequencies.
    pub fn table(&self) -> JointTable {
        let counts: Vec<f64> = self.counts.iter().map(|&c| c as f64).collect();
        self.table_from(&counts)
    }

    /// Plug-in estimate with a Poisson-bootstrap standard error.
    pub fn estimate<R: Rng + ?Sized>(&self, kind: Coefficient, rng: &mut R) -> Result<McEstimate> {
        if self.windows < MIN_WINDOWS {
            return Err(Error::InsufficientSamples {
                found: self.windows as usize,
                required: MIN_WINDOWS as usize,
            });
        }
        let value = self.table().coefficient(kind);
        let mut reps = Vec::with_capacity(BOOTSTRAP_REPLICATES);
        for _ in 0..BOOTSTRAP_REPLICATES {
            let counts: Vec<f64> = self
                .counts
                .iter()
                .map(|&c| {
                    if c == 0 {
                        0.0
                    } else {
                        Poisson::new(c as f64).expect("positive rate").sample(rng)
                    }
                })
                .collect();
            reps.push(self.table_from(&counts).coefficient(kind));
        }
        let mean = reps.iter().sum::<f64>() / reps.len() as f64;
        let var = reps.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps.len() - 1) as f64;
        Ok(McEstimate {
            value,
            stderr: var.sqrt(),
            windows: self.windows,
        })
    }
}

/// Plug-in estimate of a coefficient from lifted paths over a partition,
/// counting non-overlapping windows of every path.
pub fn estimate_coefficient_mc<R: Rng + ?Sized>(
    kind: Coefficient,
    u_paths: &[Vec<Vec<f64>>],
    n: usize,
    block_len: usize,
    partition: &CellPartition,
    rng: &mut R,
) -> Result<McEstimate> {
    let mut counts = WindowCounts::new(partition.clone(), n, block_len)?;
    for p in u_paths {
        counts.add_path(p)?;
    }
    counts.estimate(kind, rng)
}

/// Lagged covariances `c_k = mu(F ∩ S^k G) - mu(F) mu(G)` of two cylinder
/// events under the lifted law.
#[derive(Debug, Clone, PartialEq)]
pub struct CesaroReport {
    /// `c[k-1]` is `c_k`.
    pub c: Vec<f64>,
}

impl CesaroReport {
    /// `(1/N) Σ_{k≤N} c_k` for every `N`.
    pub fn cesaro_means(&self) -> Vec<f64> {
        running_means(self.c.iter().copied())
    }

    /// `(1/N) Σ_{k≤N} |c_k|` for every `N`.
    pub fn cesaro_abs_means(&self) -> Vec<f64> {
        running_means(self.c.iter().map(|v| v.abs()))
    }

    /// Smallest `C` with `|c_k| ≤ C rate^k` for `k ≤ fit_len`.
    pub fn fit_geometric_constant(&self, rate: f64, fit_len: usize) -> f64 {
        self.c
            .iter()
            .take(fit_len)
            .enumerate()
            .map(|(i, v)| v.abs() / rate.powi(i as i32 + 1))
            .fold(0.0, f64::max)
    }
}

fn running_means(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    values
        .enumerate()
        .map(|(i, v)| {
            acc += v;
            acc / (i + 1) as f64
        })
        .collect()
}

pub fn cesaro_correlation(
    marginals: &[MixedMarginal],
    proc: &FiniteProcess,
    f_cyl: &IntervalCylinder,
    g_cyl: &IntervalCylinder,
    max_lag: usize,
) -> Result<CesaroReport> {
    let span = f_cyl.len() + g_cyl.len() + max_lag;
    if span > 100_000 {
        return Err(Error::SizeCap {
            what: "cylinder span",
            size: span,
            cap: 100_000,
        });
    }
    let lookup = AtomLookup::new(marginals, proc)?;
    let mf = cylinder_measure_with(&lookup, proc, f_cyl)?;
    let mg = cylinder_measure_with(&lookup, proc, g_cyl)?;
    let c = (1..=max_lag)
        .map(|k| {
            let both = f_cyl.intersect(&g_cyl.shifted(k as i64))?;
            Ok(cylinder_measure_with(&lookup, proc, &both)? - mf * mg)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CesaroReport { c })
}

/// How a report row was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Exact,
    LiftedExact,
    MonteCarlo,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::LiftedExact => "lifted-exact",
            Method::MonteCarlo => "monte-carlo",
        }
    }
}

/// One row of a [`MixingReport`]. `refinement` is 0 for ground-truth rows,
/// the atom-interval split for lifted rows and the cells per coordinate for
/// Monte Carlo rows.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingRow {
    pub n: usize,
    pub block_len: usize,
    pub refinement: usize,
    pub method: Method,
    pub values: Coefficients,
    pub stderr: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MixingReport {
    pub rows: Vec<MixingRow>,
}

pub const MIXING_CSV_HEADER: [&str; 10] = [
    "n",
    "L",
    "r",
    "method",
    "alpha",
    "beta",
    "phi",
    "stderr_alpha",
    "stderr_beta",
    "stderr_phi",
];

impl MixingReport {
    pub fn sort(&mut self) {
        self.rows
            .sort_by_key(|r| (r.n, r.block_len, r.refinement, r.method));
    }

    /// Violations of range and ordering (`alpha ≤ beta ≤ phi`) constraints.
    pub fn violations(&self) -> Vec<String> {
        const TOL: f64 = 1e-12;
        let mut out = Vec::new();
        for r in &self.rows {
            let v = r.values;
            for (name, x) in [("alpha", v.alpha), ("beta", v.beta), ("phi", v.phi)] {
                if !(-TOL..=1.0 + TOL).contains(&x) {
                    out.push(format!(
                        "n={} L={} {name}={x} outside [0,1]",
                        r.n, r.block_len
                    ));
                }
            }
            if r.method != Method::MonteCarlo && (v.alpha > v.beta + TOL || v.beta > v.phi + TOL) {
                out.push(format!(
                    "n={} L={} r={}: ordering alpha<=beta<=phi violated ({}, {}, {})",
                    r.n, r.block_len, r.refinement, v.alpha, v.beta, v.phi
                ));
            }
        }
        out
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(MIXING_CSV_HEADER)?;
        for r in &self.rows {
            let se = |i: usize| r.stderr.map_or(String::new(), |s| crate::io::fmt_f64(s[i]));
            wtr.write_record([
                r.n.to_string(),
                r.block_len.to_string(),
                r.refinement.to_string(),
                r.method.as_str().to_string(),
                crate::io::fmt_f64(r.values.alpha),
                crate::io::fmt_f64(r.values.beta),
                crate::io::fmt_f64(r.values.phi),
                se(0),
                se(1),
                se(2),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::{collapsing_chain, default_chain};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Max over all subset pairs, straight from the definition.
    fn alpha_brute(t: &JointTable) -> f64 {
        let np = t.past.len();
        let nf = t.future.len();
        let mut best = 0.0f64;
        for a in 0u32..(1 << np) {
            for b in 0u32..(1 << nf) {
                let pa: f64 = (0..np).filter(|i| a >> i & 1 == 1).map(|i| t.past[i]).sum();
                let pb: f64 = (0..nf)
                    .filter(|j| b >> j & 1 == 1)
                    .map(|j| t.future[j])
                    .sum();
                let pab: f64 = (0..np)
                    .filter(|i| a >> i & 1 == 1)
                    .flat_map(|i| {
                        (0..nf)
                            .filter(move |j| b >> j & 1 == 1)
                            .map(move |j| (i, j))
                    })
                    .map(|(i, j)| t.get(i, j))
                    .sum();
                best = best.max((pab - pa * pb).abs());
            }
        }
        best
    }

    #[test]
    fn iid_coefficients_vanish() {
        let proc =
            FiniteProcess::iid(vec![0.2, 0.5, 0.3], vec![vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        for n in 1..4 {
            for l in 1..3 {
                let c = block_table(&proc, n, l).unwrap().coefficients();
                assert!(c.alpha.abs() < 1e-12 && c.beta.abs() < 1e-12 && c.phi.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_state_values_at_lag_one() {
        let proc = default_chain();
        let t = block_table(&proc, 1, 1).unwrap();
        let q0 = 2.0 / 3.0;
        assert!((t.alpha() - q0 * (0.9 - q0)).abs() < 1e-14);
        assert!((t.alpha() - alpha_brute(&t)).abs() < 1e-15);
        // (1/2) Σ |q_a P_ab - q_a q_b|
        let q: [f64; 2] = [2.0 / 3.0, 1.0 / 3.0];
        let p: [[f64; 2]; 2] = [[0.9, 0.1], [0.2, 0.8]];
        let beta: f64 = 0.5
            * (0..2)
                .flat_map(|a| (0..2).map(move |b| (a, b)))
                .map(|(a, b)| (q[a] * p[a][b] - q[a] * q[b]).abs())
                .sum::<f64>();
        assert!((t.beta() - beta).abs() < 1e-14);
        let phi = (0..2)
            .map(|a| 0.5 * (0..2).map(|b| (p[a][b] - q[b]).abs()).sum::<f64>())
            .fold(0.0, f64::max);
        assert!((t.phi() - phi).abs() < 1e-14);
        assert!((t.phi() - 0.4666666666666667).abs() < 1e-14);
    }

    #[test]
    fn decay_follows_second_eigenvalue() {
        let proc = default_chain();
        let a1 = alpha_block_exact(&proc, 1, 1).unwrap();
        for n in 2..10 {
            let an = alpha_block_exact(&proc, n, 1).unwrap();
            assert!((an / a1 - 0.7f64.powi(n as i32 - 1)).abs() < 1e-12);
        }
    }

    #[test]
    fn exhaustive_scan_matches_brute_force_on_random_tables() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let np = rng.random_range(1..6);
            let nf = rng.random_range(1..6);
            let w: Vec<f64> = (0..np * nf).map(|_| rng.random::<f64>()).collect();
            let total: f64 = w.iter().sum();
            let joint: Vec<f64> = w.iter().map(|x| x / total).collect();
            let past = (0..np)
                .map(|a| joint[a * nf..(a + 1) * nf].iter().sum())
                .collect();
            let future = (0..nf)
                .map(|b| (0..np).map(|a| joint[a * nf + b]).sum())
                .collect();
            let t = JointTable::new(past, future, joint).unwrap();
            assert!((t.alpha() - alpha_brute(&t)).abs() < 1e-14);
            let c = t.coefficients();
            assert!(c.alpha <= c.beta + 1e-15 && c.beta <= c.phi + 1e-15);
        }
    }

    #[test]
    fn lifted_equals_exact_for_small_chains() {
        for proc in [default_chain(), collapsing_chain()] {
            let m = proc.observed_marginals().unwrap();
            for r in 1..=3 {
                let exact = block_table(&proc, 1, 1).unwrap().coefficients();
                let lifted = lifted_table(&m, &proc, 1, 1, r).unwrap().coefficients();
                assert!(exact.max_abs_diff(&lifted) < 1e-10);
            }
        }
    }

    #[test]
    fn lifted_iid_is_zero() {
        let proc = FiniteProcess::iid(vec![0.3, 0.7], vec![vec![0.0], vec![1.0]]).unwrap();
        let m = proc.observed_marginals().unwrap();
        for r in 1..=3 {
            let c = lifted_table(&m, &proc, 2, 1, r).unwrap().coefficients();
            assert!(c.alpha < 1e-12 && c.beta < 1e-12 && c.phi < 1e-12);
        }
    }

    #[test]
    fn size_caps_and_bad_arguments() {
        let big =
            FiniteProcess::iid(vec![0.125; 8], (0..8).map(|i| vec![i as f64]).collect()).unwrap();
        assert!(matches!(
            block_table(&big, 1, 5),
            Err(Error::SizeCap { .. })
        ));
        assert!(block_table(&big, 0, 1).is_err());
        assert!(block_table(&big, 1, 0).is_err());
        let m = default_chain().observed_marginals().unwrap();
        assert!(lifted_table(&m, &default_chain(), 1, 1, 0).is_err());
    }

    #[test]
    fn monte_carlo_tracks_lifted_value() {
        let proc = default_chain();
        let m = proc.observed_marginals().unwrap();
        let partition = CellPartition::new(vec![vec![1.0 / 3.0, 2.0 / 3.0, 5.0 / 6.0]]).unwrap();
        let mut counts = WindowCounts::new(partition, 1, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut states = Vec::new();
        for _ in 0..200_000 {
            proc.sample_states_into(&mut rng, 2, &mut states);
            let x: Vec<Vec<f64>> = states.iter().map(|&s| proc.observe(s).to_vec()).collect();
            let pair = crate::lift::lift_path(&m, &x, &mut rng).unwrap();
            counts.add_window(&pair.u_path).unwrap();
        }
        let est = counts.estimate(Coefficient::Alpha, &mut rng).unwrap();
        let exact = alpha_lifted(&m, &proc, 1, 1, 2).unwrap();
        assert!(
            (est.value - exact).abs() <= 4.0 * est.stderr,
            "{est:?} vs {exact}"
        );
    }

    #[test]
    fn monte_carlo_needs_enough_windows() {
        let partition = CellPartition::equal(1, 2).unwrap();
        let counts = WindowCounts::new(partition, 1, 1).unwrap();
        assert!(matches!(
            counts.estimate(Coefficient::Beta, &mut ChaCha8Rng::seed_from_u64(0)),
            Err(Error::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn cesaro_trivial_cases() {
        let proc = FiniteProcess::iid(vec![0.5, 0.5], vec![vec![0.0], vec![1.0]]).unwrap();
        let m = proc.observed_marginals().unwrap();
        let f = IntervalCylinder::new(0, vec![vec![IntervalUnion::interval(0.1, 0.3).unwrap()]]);
        let rep = cesaro_correlation(&m, &proc, &f, &f, 10).unwrap();
        assert!(rep.c.iter().all(|c| c.abs() < 1e-12));

        let proc = default_chain();
        let m = proc.observed_marginals().unwrap();
        let full = IntervalCylinder::full(0, 1, 1);
        let rep = cesaro_correlation(&m, &proc, &full, &full, 10).unwrap();
        assert!(rep.c.iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn report_csv_layout() {
        let mut rep = MixingReport::default();
        let v = Coefficients {
            alpha: 0.1,
            beta: 0.2,
            phi: 0.3,
        };
        rep.rows.push(MixingRow {
            n: 2,
            block_len: 1,
            refinement: 0,
            method: Method::Exact,
            values: v,
            stderr: None,
        });
        rep.rows.push(MixingRow {
            n: 1,
            block_len: 1,
            refinement: 3,
            method: Method::MonteCarlo,
            values: v,
            stderr: Some([0.01, 0.02, 0.03]),
        });
        rep.sort();
        assert_eq!(rep.rows[0].n, 1);
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "n,L,r,method,alpha,beta,phi,stderr_alpha,stderr_beta,stderr_phi"
        );
        assert!(lines.nth(1).unwrap().ends_with(
            "exact,1.0000000000000001e-1,2.0000000000000001e-1,2.9999999999999999e-1,,,"
        ));
        assert!(rep.violations().is_empty());
    }
}
