//! One-dimensional distribution functions with atoms and a piecewise-linear
//! continuous part.
//!
//! A [`MixedMarginal`] is stored as a table of breakpoints (the union of atom
//! locations and continuous knots). At every breakpoint we keep the left limit
//! `F(x-)` and the value `F(x)`; between breakpoints the distribution function
//! is linear. [`MixedMarginal::cdf`], [`MixedMarginal::cdf_left`],
//! [`MixedMarginal::quantile`] and [`MixedMarginal::atom_intervals`] all read
//! from the same table, so atom intervals and the quantile function agree
//! bit-for-bit on interval interiors.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on total mass.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// A point mass of a marginal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    #[serde(rename = "a")]
    pub location: f64,
    #[serde(rename = "p")]
    pub mass: f64,
}

/// Interval of quantile levels mapped onto one atom.
///
/// `lo = F(a-)`, `hi = F(a)`. Every level strictly between the two maps to
/// the atom under the quantile function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomInterval {
    pub atom_index: usize,
    pub lo: f64,
    pub hi: f64,
}

impl AtomInterval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains_open(&self, s: f64) -> bool {
        self.lo < s && s < self.hi
    }
}

/// Result of [`MixedMarginal::classify`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelClass {
    AtomIndex(usize),
    ContinuityPoint,
}

/// Serialized form: `{"atoms":[{"a":1.0,"p":0.5}],"continuous":[[0.0,0.0],[1.0,0.5]]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginalSpec {
    #[serde(default)]
    pub atoms: Vec<Atom>,
    #[serde(default)]
    pub continuous: Vec<[f64; 2]>,
}

/// Distribution function on the real line with finitely many atoms and a
/// piecewise-linear continuous part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MarginalSpec", into = "MarginalSpec")]
pub struct MixedMarginal {
    atoms: Vec<Atom>,
    knots: Vec<(f64, f64)>,
    // breakpoint table
    xs: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
    atom_at: Vec<Option<usize>>,
}

impl MixedMarginal {
    /// Builds a marginal from atoms `(location, mass)` and continuous knots
    /// `(t, cumulative sub-mass)`.
    pub fn new(atoms: Vec<Atom>, knots: Vec<(f64, f64)>) -> Result<Self> {
        validate(&atoms, &knots)?;
        let (xs, left, right, atom_at) = breakpoint_table(&atoms, &knots);
        Ok(Self {
            atoms,
            knots,
            xs,
            left,
            right,
            atom_at,
        })
    }

    /// Purely discrete marginal.
    pub fn discrete(atoms: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            atoms
                .iter()
                .map(|&(location, mass)| Atom { location, mass })
                .collect(),
            Vec::new(),
        )
    }

    /// Unit mass at `location`.
    pub fn point_mass(location: f64) -> Self {
        Self::discrete(&[(location, 1.0)]).expect("unit mass is valid")
    }

    /// Uniform distribution on `(lo, hi)`.
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::new(Vec::new(), vec![(lo, 0.0), (hi, 1.0)])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn continuous_mass(&self) -> f64 {
        self.knots.last().map_or(0.0, |k| k.1)
    }

    pub fn is_discrete(&self) -> bool {
        self.knots.is_empty()
    }

    /// Index of the atom located exactly at `x`.
    pub fn atom_index(&self, x: f64) -> Option<usize> {
        self.atoms
            .binary_search_by(|a| a.location.total_cmp(&x))
            .ok()
    }

    /// `F(t)`, right-continuous.
    pub fn cdf(&self, t: f64) -> f64 {
        let j = self.xs.partition_point(|&x| x <= t);
        if j == 0 {
            return 0.0;
        }
        let prev = j - 1;
        if self.xs[prev] == t || j == self.xs.len() {
            return self.right[prev];
        }
        let (x0, x1) = (self.xs[prev], self.xs[j]);
        let rise = self.left[j] - self.right[prev];
        let value = self.right[prev] + rise * ((t - x0) / (x1 - x0));
        value.min(self.left[j])
    }

    /// Left limit `F(t-)`.
    pub fn cdf_left(&self, t: f64) -> f64 {
        let j = self.xs.partition_point(|&x| x < t);
        if j < self.xs.len() && self.xs[j] == t {
            self.left[j]
        } else {
            self.cdf(t)
        }
    }

    /// Generalized inverse `inf { t : F(t) >= s }` for `s` in `(0, 1)`.
    pub fn quantile(&self, s: f64) -> Result<f64> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::LevelOutOfRange(s));
        }
        Ok(self.quantile_unchecked(s))
    }

    fn quantile_unchecked(&self, s: f64) -> f64 {
        let j = self.right.partition_point(|&r| r < s);
        if j == self.xs.len() {
            // only reachable when the total mass rounds below s
            return self.xs[j - 1];
        }
        if self.left[j] < s || j == 0 {
            return self.xs[j];
        }
        let prev = j - 1;
        let (x0, x1) = (self.xs[prev], self.xs[j]);
        let frac = (s - self.right[prev]) / (self.left[j] - self.right[prev]);
        (x0 + frac * (x1 - x0)).clamp(x0, x1)
    }

    /// Atom intervals `(F(a_i-), F(a_i))`, one per atom in location order.
    pub fn atom_intervals(&self) -> Vec<AtomInterval> {
        self.atom_at
            .iter()
            .enumerate()
            .filter_map(|(j, slot)| {
                slot.map(|atom_index| AtomInterval {
                    atom_index,
                    lo: self.left[j],
                    hi: self.right[j],
                })
            })
            .collect()
    }

    /// Atom interval of atom `i`.
    pub fn atom_interval(&self, i: usize) -> Option<AtomInterval> {
        let loc = self.atoms.get(i)?.location;
        let j = self.xs.partition_point(|&x| x < loc);
        Some(AtomInterval {
            atom_index: i,
            lo: self.left[j],
            hi: self.right[j],
        })
    }

    /// Whether the quantile level `s` maps onto an atom.
    pub fn classify(&self, s: f64) -> Result<LevelClass> {
        let x = self.quantile(s)?;
        Ok(match self.atom_index(x) {
            Some(i) => LevelClass::AtomIndex(i),
            None => LevelClass::ContinuityPoint,
        })
    }

    /// True when `x` is an atom, or a point of the continuous part with
    /// `0 < F(x) < 1` and `F^{-1}(F(x)) = x`.
    pub fn is_support_point(&self, x: f64) -> bool {
        if !x.is_finite() {
            return false;
        }
        if self.atom_index(x).is_some() {
            return true;
        }
        let u = self.cdf(x);
        u > 0.0 && u < 1.0 && (self.quantile_unchecked(u) - x).abs() <= 1e-12 * x.abs().max(1.0)
    }
}

impl TryFrom<MarginalSpec> for MixedMarginal {
    type Error = Error;

    fn try_from(spec: MarginalSpec) -> Result<Self> {
        Self::new(
            spec.atoms,
            spec.continuous.into_iter().map(|[t, c]| (t, c)).collect(),
        )
    }
}

impl From<MixedMarginal> for MarginalSpec {
    fn from(m: MixedMarginal) -> Self {
        MarginalSpec {
            atoms: m.atoms,
            continuous: m.knots.into_iter().map(|(t, c)| [t, c]).collect(),
        }
    }
}

fn validate(atoms: &[Atom], knots: &[(f64, f64)]) -> Result<()> {
    let bad = |msg: String| Err(Error::InvalidMarginal(msg));
    for (i, a) in atoms.iter().enumerate() {
        if !a.location.is_finite() || !a.mass.is_finite() {
            return bad(format!("atom {i} is not finite"));
        }
        if !(a.mass > 0.0 && a.mass <= 1.0) {
            return bad(format!("atom {i} has mass {} outside (0, 1]", a.mass));
        }
        if i > 0 && atoms[i - 1].location >= a.location {
            return bad("atom locations must be strictly increasing".into());
        }
    }
    if knots.len() == 1 {
        return bad("continuous part needs at least two knots".into());
    }
    for (i, &(t, c)) in knots.iter().enumerate() {
        if !t.is_finite() || !c.is_finite() {
            return bad(format!("knot {i} is not finite"));
        }
        if i == 0 && c != 0.0 {
            return bad("first knot must have cumulative mass 0".into());
        }
        if i > 0 {
            let (pt, pc) = knots[i - 1];
            if pt >= t {
                return bad("knot locations must be strictly increasing".into());
            }
            if pc > c {
                return bad("knot masses must be nondecreasing".into());
            }
        }
    }
    let continuous = knots.last().map_or(0.0, |k| k.1);
    if !knots.is_empty() && continuous <= 0.0 {
        return bad("continuous part has zero mass".into());
    }
    let total: f64 = atoms.iter().map(|a| a.mass).sum::<f64>() + continuous;
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return bad(format!("total mass {total} differs from 1"));
    }
    Ok(())
}

type Table = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<Option<usize>>);

fn breakpoint_table(atoms: &[Atom], knots: &[(f64, f64)]) -> Table {
    let mut xs: Vec<f64> = atoms
        .iter()
        .map(|a| a.location)
        .chain(knots.iter().map(|k| k.0))
        .collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();

    let mut left = Vec::with_capacity(xs.len());
    let mut right = Vec::with_capacity(xs.len());
    let mut atom_at = Vec::with_capacity(xs.len());
    let mut atoms_below = 0.0;
    let mut next_atom = 0;
    for &x in &xs {
        let mut lo = atoms_below + continuous_at(knots, x);
        if let Some(&prev) = right.last() {
            lo = f64::max(lo, prev);
        }
        let slot = (next_atom < atoms.len() && atoms[next_atom].location == x).then_some(next_atom);
        let hi = match slot {
            Some(i) => {
                atoms_below += atoms[i].mass;
                next_atom += 1;
                lo + atoms[i].mass
            }
            None => lo,
        };
        left.push(lo);
        right.push(hi);
        atom_at.push(slot);
    }
    (xs, left, right, atom_at)
}

fn continuous_at(knots: &[(f64, f64)], x: f64) -> f64 {
    let Some(last) = knots.last() else {
        return 0.0;
    };
    let j = knots.partition_point(|k| k.0 <= x);
    if j == 0 {
        return 0.0;
    }
    if j == knots.len() || knots[j - 1].0 == x {
        return if j == knots.len() {
            last.1
        } else {
            knots[j - 1].1
        };
    }
    let (t0, c0) = knots[j - 1];
    let (t1, c1) = knots[j];
    c0 + (c1 - c0) * ((x - t0) / (t1 - t0))
}

/// What kind of marginal [`random_marginal`] produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginalKind {
    Discrete,
    Continuous,
    Mixed,
}

/// Bounds for [`random_marginal`].
#[derive(Debug, Clone, Copy)]
pub struct MarginalProfile {
    pub kind: MarginalKind,
    pub max_atoms: usize,
    pub max_knots: usize,
    /// Allow flat stretches inside the continuous part.
    pub allow_gaps: bool,
}

impl MarginalProfile {
    pub fn discrete(max_atoms: usize) -> Self {
        Self {
            kind: MarginalKind::Discrete,
            max_atoms,
            max_knots: 0,
            allow_gaps: false,
        }
    }

    pub fn continuous(max_knots: usize) -> Self {
        Self {
            kind: MarginalKind::Continuous,
            max_atoms: 0,
            max_knots,
            allow_gaps: false,
        }
    }

    pub fn mixed(max_atoms: usize, max_knots: usize) -> Self {
        Self {
            kind: MarginalKind::Mixed,
            max_atoms,
            max_knots,
            allow_gaps: true,
        }
    }
}

/// Draws a random valid marginal. Locations lie on a grid of step 1/8 in
/// `[-8, 8]` so atoms and knots collide now and then.
pub fn random_marginal<R: Rng + ?Sized>(rng: &mut R, profile: MarginalProfile) -> MixedMarginal {
    let n_atoms = match profile.kind {
        MarginalKind::Continuous => 0,
        _ => rng.random_range(1..=profile.max_atoms.max(1)),
    };
    let n_knots = match profile.kind {
        MarginalKind::Discrete => 0,
        _ => rng.random_range(2..=profile.max_knots.max(2)),
    };
    let continuous_mass = match profile.kind {
        MarginalKind::Discrete => 0.0,
        MarginalKind::Continuous => 1.0,
        MarginalKind::Mixed => rng.random_range(0.1..0.9),
    };

    let atom_locs = grid_points(rng, n_atoms);
    let weights: Vec<f64> = (0..n_atoms).map(|_| rng.random_range(0.05..1.0)).collect();
    let wsum: f64 = weights.iter().sum();
    let atom_mass = 1.0 - continuous_mass;
    let atoms = atom_locs
        .into_iter()
        .zip(&weights)
        .map(|(location, w)| Atom {
            location,
            mass: atom_mass * w / wsum,
        })
        .collect();

    let knot_locs = grid_points(rng, n_knots);
    let mut increments: Vec<f64> = (1..n_knots)
        .map(|i| {
            let interior = i > 1 && i + 1 < n_knots;
            if profile.allow_gaps && interior && rng.random_bool(0.25) {
                0.0
            } else {
                rng.random_range(0.05..1.0)
            }
        })
        .collect();
    let isum: f64 = increments.iter().sum();
    increments.iter_mut().for_each(|v| *v /= isum);
    let mut knots = Vec::with_capacity(n_knots);
    let mut acc = 0.0;
    for (i, t) in knot_locs.into_iter().enumerate() {
        if i > 0 {
            acc += increments[i - 1];
        }
        let c = if i + 1 == n_knots {
            continuous_mass
        } else {
            (acc * continuous_mass).min(continuous_mass)
        };
        knots.push((t, c));
    }
    MixedMarginal::new(atoms, knots).expect("generator produces valid marginals")
}

fn grid_points<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut pts: Vec<i32> = Vec::with_capacity(n);
    while pts.len() < n {
        let v = rng.random_range(-64..=64);
        if !pts.contains(&v) {
            pts.push(v);
        }
    }
    pts.sort_unstable();
    pts.into_iter().map(|v| f64::from(v) / 8.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mixed_half() -> MixedMarginal {
        MixedMarginal::new(
            vec![Atom {
                location: 1.0,
                mass: 0.5,
            }],
            vec![(0.0, 0.0), (1.0, 0.5)],
        )
        .unwrap()
    }

    fn bernoulli() -> MixedMarginal {
        MixedMarginal::discrete(&[(0.0, 0.7), (1.0, 0.3)]).unwrap()
    }

    #[test]
    fn cdf_examples() {
        let pm = MixedMarginal::point_mass(7.0);
        assert_eq!(pm.cdf(6.9), 0.0);
        assert_eq!(pm.cdf(7.0), 1.0);
        assert_eq!(mixed_half().cdf(0.5), 0.25);
        let b = bernoulli();
        assert_eq!(b.cdf(0.0), 0.7);
        assert_eq!(b.cdf(1.0), 1.0);
        assert_eq!(b.cdf(-1.0), 0.0);
        assert_eq!(b.cdf(0.5), 0.7);
    }

    #[test]
    fn cdf_left_examples() {
        assert_eq!(MixedMarginal::point_mass(7.0).cdf_left(7.0), 0.0);
        assert_eq!(bernoulli().cdf_left(1.0), 0.7);
        let u = MixedMarginal::uniform(0.0, 1.0).unwrap();
        assert_eq!(u.cdf_left(0.4), 0.4);
        assert_eq!(u.cdf(0.4), 0.4);
        // the atom sits on the last knot
        let m = mixed_half();
        assert_eq!(m.cdf_left(1.0), 0.5);
        assert_eq!(m.cdf(1.0), 1.0);
    }

    #[test]
    fn quantile_examples() {
        let pm = MixedMarginal::point_mass(7.0);
        for s in [1e-9, 0.3, 0.5, 0.999_999] {
            assert_eq!(pm.quantile(s).unwrap(), 7.0);
        }
        let m = mixed_half();
        assert_eq!(m.quantile(0.25).unwrap(), 0.5);
        assert_eq!(m.quantile(0.75).unwrap(), 1.0);
        let b = bernoulli();
        assert_eq!(b.quantile(0.7).unwrap(), 0.0);
        assert_eq!(b.quantile(0.70001).unwrap(), 1.0);
    }

    #[test]
    fn quantile_rejects_levels_outside_unit_interval() {
        let b = bernoulli();
        for s in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(b.quantile(s), Err(Error::LevelOutOfRange(_))));
        }
    }

    #[test]
    fn atom_interval_examples() {
        let iv = bernoulli().atom_intervals();
        assert_eq!(iv.len(), 2);
        assert_eq!((iv[0].lo, iv[0].hi), (0.0, 0.7));
        assert_eq!(iv[1].lo, 0.7);
        assert!((iv[1].hi - 1.0).abs() < 1e-15);
        assert!(MixedMarginal::uniform(0.0, 1.0)
            .unwrap()
            .atom_intervals()
            .is_empty());
        let pm = MixedMarginal::point_mass(7.0).atom_intervals();
        assert_eq!((pm[0].lo, pm[0].hi), (0.0, 1.0));
    }

    #[test]
    fn classify_examples() {
        assert_eq!(bernoulli().classify(0.5).unwrap(), LevelClass::AtomIndex(0));
        assert_eq!(
            MixedMarginal::uniform(0.0, 1.0)
                .unwrap()
                .classify(0.5)
                .unwrap(),
            LevelClass::ContinuityPoint
        );
        assert_eq!(
            mixed_half().classify(0.9).unwrap(),
            LevelClass::AtomIndex(0)
        );
        assert_eq!(
            mixed_half().classify(0.2).unwrap(),
            LevelClass::ContinuityPoint
        );
    }

    #[test]
    fn invalid_marginals_are_rejected() {
        assert!(MixedMarginal::discrete(&[(0.0, 0.5), (1.0, 0.4)]).is_err());
        assert!(MixedMarginal::discrete(&[(1.0, 0.5), (0.0, 0.5)]).is_err());
        assert!(MixedMarginal::discrete(&[(0.0, 0.0), (1.0, 1.0)]).is_err());
        assert!(MixedMarginal::new(vec![], vec![(0.0, 0.1), (1.0, 1.0)]).is_err());
        assert!(MixedMarginal::new(vec![], vec![(0.0, 0.0), (1.0, 0.6), (2.0, 0.5)]).is_err());
        assert!(MixedMarginal::new(vec![], vec![(0.0, 1.0)]).is_err());
    }

    #[test]
    fn gaps_are_not_support() {
        // uniform mass on (0,1) and (2,3), nothing in between
        let m = MixedMarginal::new(vec![], vec![(0.0, 0.0), (1.0, 0.5), (2.0, 0.5), (3.0, 1.0)])
            .unwrap();
        assert!(m.is_support_point(0.5));
        assert!(m.is_support_point(2.5));
        assert!(!m.is_support_point(1.5));
        assert!(!m.is_support_point(4.0));
        assert_eq!(m.quantile(0.5).unwrap(), 1.0);
        assert!(bernoulli().is_support_point(1.0));
        assert!(!bernoulli().is_support_point(0.5));
    }

    #[test]
    fn json_roundtrip_uses_documented_layout() {
        let text = r#"{"atoms":[{"a":1.0,"p":0.5}],"continuous":[[0.0,0.0],[1.0,0.5]]}"#;
        let m: MixedMarginal = serde_json::from_str(text).unwrap();
        assert_eq!(m, mixed_half());
        assert_eq!(serde_json::to_string(&m).unwrap(), text);
        let bad = r#"{"atoms":[{"a":1.0,"p":0.4}]}"#;
        assert!(serde_json::from_str::<MixedMarginal>(bad).is_err());
    }

    #[test]
    fn random_marginals_satisfy_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for profile in [
            MarginalProfile::discrete(2),
            MarginalProfile::continuous(5),
            MarginalProfile::mixed(4, 6),
        ] {
            for _ in 0..200 {
                let m = random_marginal(&mut rng, profile);
                let total: f64 =
                    m.atoms().iter().map(|a| a.mass).sum::<f64>() + m.continuous_mass();
                assert!((total - 1.0).abs() <= MASS_TOLERANCE);
                match profile.kind {
                    MarginalKind::Continuous => assert!(m.atoms().is_empty()),
                    MarginalKind::Discrete => {
                        assert!(m.is_discrete());
                        assert!(m.atoms().len() <= 2);
                    }
                    MarginalKind::Mixed => {}
                }
            }
        }
    }
}
