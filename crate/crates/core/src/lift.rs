//! Lifting observed paths to paths with uniform marginals, and exact measures
//! of interval cylinders under the lifted law.
//!
//! Given the observed value `x` of coordinate `k`, the lifted level is
//! `F_k(x)` at continuity points and a fresh uniform draw on the atom
//! interval `(F_k(x-), F_k(x))` at atoms. Every draw is independent of every
//! other draw and of the path, which realizes the product measure over the
//! path's coordinates. Applying the coordinatewise quantile map recovers `x`.

use rand::Rng;

use crate::chains::{FiniteProcess, StateCylinder};
use crate::error::{Error, Result};
use crate::marginals::{AtomInterval, MixedMarginal};

/// Tolerance for interval endpoints matching atom-interval boundaries.
const BOUNDARY_TOLERANCE: f64 = 1e-12;

/// One random level drawn for an atom coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrawRecord {
    pub step: usize,
    pub coord: usize,
    pub u: f64,
}

/// An observed path, its lift, and the draws used for atom coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPair {
    pub x_path: Vec<Vec<f64>>,
    pub u_path: Vec<Vec<f64>>,
    pub draw_log: Vec<DrawRecord>,
}

/// Uniform draw strictly inside `(lo, hi)`.
fn open_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    for _ in 0..64 {
        let u = lo + (hi - lo) * rng.random::<f64>();
        if lo < u && u < hi {
            return u;
        }
    }
    // only for intervals a few ulps wide
    0.5 * (lo + hi)
}

fn lift_coordinate<R: Rng + ?Sized>(
    marginal: &MixedMarginal,
    x: f64,
    step: usize,
    coord: usize,
    rng: &mut R,
    log: &mut Vec<DrawRecord>,
) -> Result<f64> {
    if let Some(i) = marginal.atom_index(x) {
        let iv = marginal.atom_interval(i).expect("atom index in range");
        let u = open_uniform(rng, iv.lo, iv.hi);
        log.push(DrawRecord { step, coord, u });
        return Ok(u);
    }
    if marginal.is_support_point(x) {
        Ok(marginal.cdf(x))
    } else {
        Err(Error::NotSupported {
            step,
            coord,
            value: x,
        })
    }
}

fn check_dim(marginals: &[MixedMarginal], found: usize) -> Result<()> {
    if marginals.len() != found {
        return Err(Error::DimensionMismatch {
            expected: marginals.len(),
            found,
        });
    }
    Ok(())
}

/// Lifts one observed point.
pub fn lift_point<R: Rng + ?Sized>(
    marginals: &[MixedMarginal],
    x: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_dim(marginals, x.len())?;
    let mut log = Vec::new();
    marginals
        .iter()
        .zip(x)
        .enumerate()
        .map(|(k, (m, &xk))| lift_coordinate(m, xk, 0, k, rng, &mut log))
        .collect()
}

/// Lifts a path with fresh independent draws for every atom coordinate.
pub fn lift_path<R: Rng + ?Sized>(
    marginals: &[MixedMarginal],
    x_path: &[Vec<f64>],
    rng: &mut R,
) -> Result<PathPair> {
    let mut draw_log = Vec::new();
    let mut u_path = Vec::with_capacity(x_path.len());
    for (n, x) in x_path.iter().enumerate() {
        check_dim(marginals, x.len())?;
        let u = marginals
            .iter()
            .zip(x)
            .enumerate()
            .map(|(k, (m, &xk))| lift_coordinate(m, xk, n, k, rng, &mut draw_log))
            .collect::<Result<Vec<f64>>>()?;
        u_path.push(u);
    }
    Ok(PathPair {
        x_path: x_path.to_vec(),
        u_path,
        draw_log,
    })
}

/// Coordinatewise quantile map of one point.
pub fn project_point(marginals: &[MixedMarginal], u: &[f64]) -> Result<Vec<f64>> {
    check_dim(marginals, u.len())?;
    marginals
        .iter()
        .zip(u)
        .map(|(m, &s)| m.quantile(s))
        .collect()
}

/// Coordinatewise quantile map of a path.
pub fn project(marginals: &[MixedMarginal], u_path: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    u_path.iter().map(|u| project_point(marginals, u)).collect()
}

/// Finite union of half-open subintervals `[lo, hi)` of `[0, 1]`, sorted and
/// pairwise disjoint.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntervalUnion {
    pieces: Vec<(f64, f64)>,
}

impl IntervalUnion {
    pub fn full() -> Self {
        Self {
            pieces: vec![(0.0, 1.0)],
        }
    }

    pub fn empty() -> Self {
        Self { pieces: Vec::new() }
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::from_pieces(vec![(lo, hi)])
    }

    /// Validates and sorts the pieces. Empty pieces (`lo == hi`) are dropped.
    pub fn from_pieces(mut pieces: Vec<(f64, f64)>) -> Result<Self> {
        pieces.retain(|&(lo, hi)| lo != hi);
        pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (i, &(lo, hi)) in pieces.iter().enumerate() {
            if !(0.0 <= lo && lo < hi && hi <= 1.0) {
                return Err(Error::InvalidCylinder(format!(
                    "interval [{lo}, {hi}) is not a subinterval of [0, 1]"
                )));
            }
            if i > 0 && pieces[i - 1].1 > lo {
                return Err(Error::InvalidCylinder(
                    "overlapping intervals in a union".into(),
                ));
            }
        }
        Ok(Self { pieces })
    }

    pub fn pieces(&self) -> &[(f64, f64)] {
        &self.pieces
    }

    pub fn is_full(&self) -> bool {
        self.pieces == [(0.0, 1.0)]
    }

    /// Lebesgue measure.
    pub fn measure(&self) -> f64 {
        self.pieces.iter().map(|(lo, hi)| hi - lo).sum()
    }

    /// Lebesgue measure of the intersection with `(lo, hi)`.
    pub fn overlap(&self, lo: f64, hi: f64) -> f64 {
        self.pieces
            .iter()
            .map(|&(a, b)| (b.min(hi) - a.max(lo)).max(0.0))
            .sum()
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        for &(a, b) in &self.pieces {
            for &(c, e) in &other.pieces {
                let lo = a.max(c);
                let hi = b.min(e);
                if lo < hi {
                    out.push((lo, hi));
                }
            }
        }
        out.sort_by(|x, y| x.0.total_cmp(&y.0));
        Self { pieces: out }
    }

    pub fn contains(&self, u: f64) -> bool {
        self.pieces.iter().any(|&(lo, hi)| lo <= u && u < hi)
    }
}

/// Event `{ u : u_{offset+j}^{(k)} in factors[j][k] }` on lifted paths.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalCylinder {
    pub offset: i64,
    pub factors: Vec<Vec<IntervalUnion>>,
}

impl IntervalCylinder {
    pub fn new(offset: i64, factors: Vec<Vec<IntervalUnion>>) -> Self {
        Self { offset, factors }
    }

    /// Whole space over `len` coordinates of dimension `d`.
    pub fn full(offset: i64, len: usize, d: usize) -> Self {
        Self {
            offset,
            factors: vec![vec![IntervalUnion::full(); d]; len],
        }
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn shifted(&self, by: i64) -> Self {
        Self {
            offset: self.offset + by,
            factors: self.factors.clone(),
        }
    }

    /// Intersection of two cylinders; coordinates covered by only one of
    /// them keep that factor, gaps between them are unconstrained.
    pub fn intersect(&self, other: &Self) -> Result<Self> {
        let d = self
            .factors
            .first()
            .or_else(|| other.factors.first())
            .map_or(0, Vec::len);
        if self.is_empty() {
            return Ok(other.clone());
        }
        if other.is_empty() {
            return Ok(self.clone());
        }
        let start = self.offset.min(other.offset);
        let end = (self.offset + self.len() as i64).max(other.offset + other.len() as i64);
        let mut factors = Vec::with_capacity((end - start) as usize);
        for t in start..end {
            let f = match (self.factor_at(t), other.factor_at(t)) {
                (Some(a), Some(b)) => {
                    if a.len() != b.len() {
                        return Err(Error::DimensionMismatch {
                            expected: a.len(),
                            found: b.len(),
                        });
                    }
                    a.iter().zip(b).map(|(x, y)| x.intersect(y)).collect()
                }
                (Some(a), None) | (None, Some(a)) => a.clone(),
                (None, None) => vec![IntervalUnion::full(); d],
            };
            factors.push(f);
        }
        Ok(Self {
            offset: start,
            factors,
        })
    }

    fn factor_at(&self, t: i64) -> Option<&Vec<IntervalUnion>> {
        let j = t - self.offset;
        (j >= 0 && (j as usize) < self.len()).then(|| &self.factors[j as usize])
    }

    pub fn contains_path(&self, u_path: &[Vec<f64>], start: usize) -> bool {
        self.factors.iter().enumerate().all(|(j, f)| {
            u_path
                .get(start + j)
                .is_some_and(|u| f.iter().zip(u).all(|(iv, &x)| iv.contains(x)))
        })
    }
}

/// Per-coordinate atom lookup for a finite-state process and its marginals.
#[derive(Debug, Clone)]
pub(crate) struct AtomLookup {
    /// `intervals[k]` are the atom intervals of marginal `k`.
    pub intervals: Vec<Vec<AtomInterval>>,
    /// `atom_of[state][k]` is the atom index of `observe(state)[k]`.
    pub atom_of: Vec<Vec<usize>>,
}

impl AtomLookup {
    pub fn new(marginals: &[MixedMarginal], proc: &FiniteProcess) -> Result<Self> {
        check_dim(marginals, proc.dim())?;
        let mut intervals = Vec::with_capacity(marginals.len());
        for (k, m) in marginals.iter().enumerate() {
            if !m.is_discrete() {
                return Err(Error::InvalidArgument(format!(
                    "marginal {k} has a continuous part; exact cylinder measures need finite-state marginals"
                )));
            }
            intervals.push(m.atom_intervals());
        }
        let s = proc.n_states();
        let mut atom_of = vec![vec![0; marginals.len()]; s];
        let mut masses: Vec<Vec<f64>> = marginals
            .iter()
            .map(|m| vec![0.0; m.atoms().len()])
            .collect();
        for st in 0..s {
            for (k, m) in marginals.iter().enumerate() {
                let x = proc.observe(st)[k];
                let i = m.atom_index(x).ok_or(Error::NotSupported {
                    step: st,
                    coord: k,
                    value: x,
                })?;
                atom_of[st][k] = i;
                masses[k][i] += proc.stationary()[st];
            }
        }
        for (k, m) in marginals.iter().enumerate() {
            for (i, a) in m.atoms().iter().enumerate() {
                if (a.mass - masses[k][i]).abs() > 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "marginal {k} atom {} has mass {} but the process gives {}",
                        a.location, a.mass, masses[k][i]
                    )));
                }
            }
        }
        Ok(Self { intervals, atom_of })
    }

    /// `lambda(D ∩ A_i) / lambda(A_i)` for every atom of coordinate `k`.
    fn fractions(&self, k: usize, factor: &IntervalUnion) -> Result<Vec<f64>> {
        let ivs = &self.intervals[k];
        for &(lo, hi) in factor.pieces() {
            for iv in ivs {
                let overlap = hi.min(iv.hi) - lo.max(iv.lo);
                if overlap <= 0.0 {
                    continue;
                }
                let inside = lo >= iv.lo - BOUNDARY_TOLERANCE && hi <= iv.hi + BOUNDARY_TOLERANCE;
                let covers = lo <= iv.lo + BOUNDARY_TOLERANCE && hi >= iv.hi - BOUNDARY_TOLERANCE;
                if !inside && !covers {
                    return Err(Error::InvalidCylinder(format!(
                        "interval [{lo}, {hi}) straddles the boundary of atom interval ({}, {}) in coordinate {k}",
                        iv.lo, iv.hi
                    )));
                }
            }
        }
        Ok(ivs
            .iter()
            .map(|iv| (factor.overlap(iv.lo, iv.hi) / iv.width()).min(1.0))
            .collect())
    }

    pub fn state_weights(&self, factor: &[IntervalUnion]) -> Result<Vec<f64>> {
        if factor.len() != self.intervals.len() {
            return Err(Error::DimensionMismatch {
                expected: self.intervals.len(),
                found: factor.len(),
            });
        }
        let fracs = factor
            .iter()
            .enumerate()
            .map(|(k, f)| self.fractions(k, f))
            .collect::<Result<Vec<_>>>()?;
        Ok(self
            .atom_of
            .iter()
            .map(|atoms| {
                atoms
                    .iter()
                    .enumerate()
                    .map(|(k, &i)| fracs[k][i])
                    .product()
            })
            .collect())
    }
}

/// Exact lifted measure of an interval cylinder for a finite-state process:
/// the sum over observed blocks of their probability times, for every
/// coordinate, the fraction of the atom interval covered by the factor.
pub fn cylinder_measure(
    marginals: &[MixedMarginal],
    proc: &FiniteProcess,
    cyl: &IntervalCylinder,
) -> Result<f64> {
    let lookup = AtomLookup::new(marginals, proc)?;
    cylinder_measure_with(&lookup, proc, cyl)
}

pub(crate) fn cylinder_measure_with(
    lookup: &AtomLookup,
    proc: &FiniteProcess,
    cyl: &IntervalCylinder,
) -> Result<f64> {
    let mut v: Vec<f64> = proc.stationary().to_vec();
    for (j, factor) in cyl.factors.iter().enumerate() {
        if j > 0 {
            v = proc.step(&v);
        }
        let w = lookup.state_weights(factor)?;
        v.iter_mut().zip(&w).for_each(|(a, b)| *a *= b);
    }
    Ok(v.iter().sum())
}

/// Disjoint interval cylinders whose union is the lifted preimage of a state
/// cylinder. Every factor must be a union of observation classes.
pub fn preimage_cylinders(
    marginals: &[MixedMarginal],
    proc: &FiniteProcess,
    cyl: &StateCylinder,
) -> Result<Vec<IntervalCylinder>> {
    let lookup = AtomLookup::new(marginals, proc)?;
    let symbols = proc.symbols();
    let mut per_time: Vec<Vec<Vec<IntervalUnion>>> = Vec::with_capacity(cyl.factors.len());
    for factor in &cyl.factors {
        let mut syms: Vec<usize> = factor.iter().map(|&s| symbols.of_state[s]).collect();
        syms.sort_unstable();
        syms.dedup();
        for &sym in &syms {
            if symbols.states_of(sym).any(|s| !factor.contains(&s)) {
                return Err(Error::InvalidCylinder(
                    "state set is not a union of observation classes".into(),
                ));
            }
        }
        let boxes = syms
            .iter()
            .map(|&sym| {
                let st = symbols.states_of(sym).next().expect("symbol has a state");
                lookup.atom_of[st]
                    .iter()
                    .enumerate()
                    .map(|(k, &i)| {
                        let iv = lookup.intervals[k][i];
                        IntervalUnion::interval(iv.lo, iv.hi.min(1.0))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        per_time.push(boxes);
    }
    let mut out = vec![Vec::new()];
    for boxes in per_time {
        let mut next = Vec::with_capacity(out.len() * boxes.len());
        for prefix in &out {
            for b in &boxes {
                let mut f: Vec<Vec<IntervalUnion>> = prefix.clone();
                f.push(b.clone());
                next.push(f);
            }
        }
        out = next;
    }
    Ok(out
        .into_iter()
        .map(|factors| IntervalCylinder::new(cyl.offset, factors))
        .collect())
}
