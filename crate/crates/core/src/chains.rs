//! Finite-state stationary ground-truth processes.
//!
//! A [`FiniteProcess`] is either an i.i.d. sequence or a stationary Markov
//! chain on `S` states, observed through a map `state -> R^d`. The observed
//! process `X_n = observe(state_n)` is the process whose law is lifted; when
//! the observation map is not injective `X` is in general not Markov.
//!
//! Internally an i.i.d. process is a Markov chain whose rows all equal the
//! weight vector, so every exact computation goes through one code path.

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marginals::{Atom, MixedMarginal};

const STOCHASTIC_TOLERANCE: f64 = 1e-12;
const DIRECT_SOLVE_MAX_STATES: usize = 64;

/// Serialized process description.
///
/// Markov: `{"states":2,"P":[[0.9,0.1],[0.2,0.8]],"observe":[[0.0],[1.0]]}`.
/// I.i.d.: `{"states":2,"weights":[0.7,0.3],"observe":[[0.0],[1.0]]}`.
/// When `observe` is omitted, state `i` is observed as the scalar `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSpec {
    pub states: usize,
    #[serde(rename = "P", default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observe: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProcessKind {
    Iid,
    Markov,
}

/// Finite-state strictly stationary process with an observation map.
#[derive(Debug, Clone)]
pub struct FiniteProcess {
    kind: ProcessKind,
    transition: DMatrix<f64>,
    stationary: Vec<f64>,
    observe: Vec<Vec<f64>>,
    initial: WeightedIndex<f64>,
    rows: Vec<WeightedIndex<f64>>,
}

/// Distinct observed points of a process and the state-to-point map.
#[derive(Debug, Clone, PartialEq)]
pub struct Symbols {
    /// Distinct observed points, lexicographically sorted.
    pub points: Vec<Vec<f64>>,
    pub of_state: Vec<usize>,
}

impl Symbols {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// States observed as symbol `sym`.
    pub fn states_of(&self, sym: usize) -> impl Iterator<Item = usize> + '_ {
        self.of_state
            .iter()
            .enumerate()
            .filter(move |(_, &s)| s == sym)
            .map(|(i, _)| i)
    }
}

/// Event constraining consecutive states: `state_{offset+j} in factors[j]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateCylinder {
    pub offset: i64,
    pub factors: Vec<Vec<usize>>,
}

impl StateCylinder {
    pub fn new(offset: i64, factors: Vec<Vec<usize>>) -> Self {
        Self { offset, factors }
    }

    pub fn shifted(&self, by: i64) -> Self {
        Self {
            offset: self.offset + by,
            factors: self.factors.clone(),
        }
    }
}

/// States and observed values of a sampled path.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    pub states: Vec<usize>,
    pub values: Vec<Vec<f64>>,
}

impl FiniteProcess {
    /// Stationary Markov chain. Fails on non-stochastic rows or a reducible
    /// transition matrix.
    pub fn markov(transition: Vec<Vec<f64>>, observe: Vec<Vec<f64>>) -> Result<Self> {
        let p = to_matrix(&transition)?;
        let stationary = stationary_distribution(&p)?;
        Self::build(ProcessKind::Markov, p, stationary, observe)
    }

    /// I.i.d. sequence of states with the given weights.
    pub fn iid(weights: Vec<f64>, observe: Vec<Vec<f64>>) -> Result<Self> {
        check_probability_vector(&weights, "weights")?;
        let s = weights.len();
        let p = DMatrix::from_fn(s, s, |_, j| weights[j]);
        Self::build(ProcessKind::Iid, p, weights, observe)
    }

    pub fn from_spec(spec: &ProcessSpec) -> Result<Self> {
        let observe = match &spec.observe {
            Some(o) => o.clone(),
            None => (0..spec.states).map(|i| vec![i as f64]).collect(),
        };
        if observe.len() != spec.states {
            return Err(Error::InvalidProcess(format!(
                "observe has {} rows for {} states",
                observe.len(),
                spec.states
            )));
        }
        match (&spec.transition, &spec.weights) {
            (Some(p), None) => {
                if p.len() != spec.states {
                    return Err(Error::InvalidProcess(format!(
                        "P has {} rows for {} states",
                        p.len(),
                        spec.states
                    )));
                }
                Self::markov(p.clone(), observe)
            }
            (None, Some(w)) => {
                if w.len() != spec.states {
                    return Err(Error::InvalidProcess(format!(
                        "weights has {} entries for {} states",
                        w.len(),
                        spec.states
                    )));
                }
                Self::iid(w.clone(), observe)
            }
            _ => Err(Error::InvalidProcess(
                "exactly one of \"P\" and \"weights\" must be given".into(),
            )),
        }
    }

    pub fn to_spec(&self) -> ProcessSpec {
        let s = self.n_states();
        let (transition, weights) = match self.kind {
            ProcessKind::Markov => (
                Some(
                    (0..s)
                        .map(|i| (0..s).map(|j| self.transition[(i, j)]).collect())
                        .collect(),
                ),
                None,
            ),
            ProcessKind::Iid => (None, Some(self.stationary.clone())),
        };
        ProcessSpec {
            states: s,
            transition,
            weights,
            observe: Some(self.observe.clone()),
        }
    }

    fn build(
        kind: ProcessKind,
        transition: DMatrix<f64>,
        stationary: Vec<f64>,
        observe: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let s = transition.nrows();
        if observe.len() != s {
            return Err(Error::InvalidProcess(format!(
                "observe has {} rows for {s} states",
                observe.len()
            )));
        }
        let d = observe.first().map_or(0, Vec::len);
        if d == 0 {
            return Err(Error::InvalidProcess(
                "observations must have dimension >= 1".into(),
            ));
        }
        if observe.iter().any(|o| o.len() != d) {
            return Err(Error::InvalidProcess(
                "observations have mixed dimensions".into(),
            ));
        }
        if observe.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidProcess("observations must be finite".into()));
        }
        let initial = WeightedIndex::new(&stationary)
            .map_err(|e| Error::InvalidProcess(format!("stationary distribution: {e}")))?;
        let rows = (0..s)
            .map(|i| {
                WeightedIndex::new(transition.row(i).iter().copied())
                    .map_err(|e| Error::InvalidProcess(format!("row {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kind,
            transition,
            stationary,
            observe,
            initial,
            rows,
        })
    }

    pub fn kind(&self) -> &ProcessKind {
        &self.kind
    }

    pub fn n_states(&self) -> usize {
        self.stationary.len()
    }

    pub fn dim(&self) -> usize {
        self.observe[0].len()
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn observe(&self, state: usize) -> &[f64] {
        &self.observe[state]
    }

    pub fn observations(&self) -> &[Vec<f64>] {
        &self.observe
    }

    /// Errors unless the chain is irreducible and aperiodic. I.i.d.
    /// processes always pass.
    pub fn require_mixing(&self) -> Result<()> {
        if self.kind == ProcessKind::Iid {
            return Ok(());
        }
        if !is_irreducible(&self.transition) {
            return Err(Error::Reducible);
        }
        match period(&self.transition) {
            1 => Ok(()),
            p => Err(Error::Periodic(p)),
        }
    }

    /// Row vector times transition matrix.
    pub fn step(&self, v: &[f64]) -> Vec<f64> {
        let s = self.n_states();
        let mut out = vec![0.0; s];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                *o += vi * self.transition[(i, j)];
            }
        }
        out
    }

    /// Transition matrix times column vector.
    pub fn step_back(&self, v: &[f64]) -> Vec<f64> {
        let s = self.n_states();
        (0..s)
            .map(|i| (0..s).map(|j| self.transition[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Exact probability of a state cylinder.
    pub fn fdd_probability(&self, cyl: &StateCylinder) -> f64 {
        let s = self.n_states();
        let mut v: Vec<f64> = self.stationary.clone();
        for (j, factor) in cyl.factors.iter().enumerate() {
            if j > 0 {
                v = self.step(&v);
            }
            let mut keep = vec![false; s];
            for &st in factor {
                if st < s {
                    keep[st] = true;
                }
            }
            for (vi, k) in v.iter_mut().zip(&keep) {
                if !k {
                    *vi = 0.0;
                }
            }
        }
        v.iter().sum()
    }

    /// Samples a stationary path of the given length.
    pub fn sample_path<R: Rng + ?Sized>(&self, rng: &mut R, length: usize) -> SampledPath {
        let mut states = Vec::with_capacity(length);
        self.sample_states_into(rng, length, &mut states);
        let values = states.iter().map(|&s| self.observe[s].clone()).collect();
        SampledPath { states, values }
    }

    /// Samples `length` states into `out` (cleared first).
    pub fn sample_states_into<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        length: usize,
        out: &mut Vec<usize>,
    ) {
        out.clear();
        if length == 0 {
            return;
        }
        let mut state = self.initial.sample(rng);
        out.push(state);
        for _ in 1..length {
            state = self.rows[state].sample(rng);
            out.push(state);
        }
    }

    /// Distinct observed points.
    pub fn symbols(&self) -> Symbols {
        let mut points: Vec<Vec<f64>> = self.observe.clone();
        points.sort_by(|a, b| lex_cmp(a, b));
        points.dedup();
        let of_state = self
            .observe
            .iter()
            .map(|o| {
                points
                    .binary_search_by(|p| lex_cmp(p, o))
                    .expect("every observation is a symbol")
            })
            .collect();
        Symbols { points, of_state }
    }

    /// Distribution of coordinate `k` of `X_1`: atoms at the distinct
    /// observed values with stationary masses.
    pub fn observed_marginal(&self, k: usize) -> Result<MixedMarginal> {
        if k >= self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: k + 1,
            });
        }
        let mut pairs: Vec<(f64, f64)> = self
            .observe
            .iter()
            .zip(&self.stationary)
            .map(|(o, &q)| (o[k], q))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut atoms: Vec<Atom> = Vec::new();
        for (location, mass) in pairs {
            match atoms.last_mut() {
                Some(last) if last.location == location => last.mass += mass,
                _ => atoms.push(Atom { location, mass }),
            }
        }
        atoms.retain(|a| a.mass > 0.0);
        MixedMarginal::new(atoms, Vec::new())
    }

    pub fn observed_marginals(&self) -> Result<Vec<MixedMarginal>> {
        (0..self.dim()).map(|k| self.observed_marginal(k)).collect()
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

fn check_probability_vector(v: &[f64], what: &str) -> Result<()> {
    if v.is_empty() {
        return Err(Error::InvalidProcess(format!("{what} is empty")));
    }
    if v.iter().any(|&x| !x.is_finite() || x < 0.0) {
        return Err(Error::InvalidProcess(format!(
            "{what} has negative or non-finite entries"
        )));
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOLERANCE {
        return Err(Error::InvalidProcess(format!("{what} sums to {sum}")));
    }
    Ok(())
}

fn to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let s = rows.len();
    if s == 0 {
        return Err(Error::InvalidProcess("no states".into()));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != s {
            return Err(Error::InvalidProcess(format!(
                "row {i} has {} entries, expected {s}",
                r.len()
            )));
        }
        check_probability_vector(r, &format!("row {i} of P"))?;
    }
    Ok(DMatrix::from_fn(s, s, |i, j| rows[i][j]))
}

fn reachable(p: &DMatrix<f64>, start: usize, forward: bool) -> Vec<bool> {
    let s = p.nrows();
    let mut seen = vec![false; s];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(u) = stack.pop() {
        for v in 0..s {
            let w = if forward { p[(u, v)] } else { p[(v, u)] };
            if w > 0.0 && !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

/// Irreducibility by forward and backward reachability from state 0.
pub fn is_irreducible(p: &DMatrix<f64>) -> bool {
    reachable(p, 0, true).iter().all(|&b| b) && reachable(p, 0, false).iter().all(|&b| b)
}

/// Period of an irreducible chain: gcd of `level(u) + 1 - level(v)` over
/// edges, with BFS levels from state 0.
pub fn period(p: &DMatrix<f64>) -> usize {
    let s = p.nrows();
    let mut level = vec![usize::MAX; s];
    level[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for v in 0..s {
            if p[(u, v)] > 0.0 && level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut g = 0usize;
    for u in 0..s {
        for v in 0..s {
            if p[(u, v)] > 0.0 && level[u] != usize::MAX && level[v] != usize::MAX {
                let diff = (level[u] as i64 + 1 - level[v] as i64).unsigned_abs() as usize;
                g = gcd(g, diff);
            }
        }
    }
    g.max(1)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Stationary distribution `q P = q` of an irreducible row-stochastic matrix.
///
/// Direct linear solve for up to 64 states, power iteration beyond.
pub fn stationary_distribution(p: &DMatrix<f64>) -> Result<Vec<f64>> {
    let s = p.nrows();
    if s == 0 || p.ncols() != s {
        return Err(Error::InvalidProcess(
            "transition matrix must be square".into(),
        ));
    }
    if !is_irreducible(p) {
        return Err(Error::Reducible);
    }
    let mut q = if s <= DIRECT_SOLVE_MAX_STATES {
        let mut a = p.transpose() - DMatrix::identity(s, s);
        for j in 0..s {
            a[(s - 1, j)] = 1.0;
        }
        let mut b = DVector::zeros(s);
        b[s - 1] = 1.0;
        let x = a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::InvalidProcess("singular stationary system".into()))?;
        x.iter().copied().collect::<Vec<f64>>()
    } else {
        power_iteration(p)
    };
    for v in &mut q {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let sum: f64 = q.iter().sum();
    q.iter_mut().for_each(|v| *v /= sum);
    let residual = stationary_residual(p, &q);
    if residual >= STOCHASTIC_TOLERANCE {
        return Err(Error::InvalidProcess(format!(
            "stationary residual {residual:e} too large"
        )));
    }
    Ok(q)
}

fn power_iteration(p: &DMatrix<f64>) -> Vec<f64> {
    let s = p.nrows();
    // lazy chain (P + I)/2 shares q and is aperiodic
    let mut q = vec![1.0 / s as f64; s];
    for _ in 0..1_000_000 {
        let mut next = vec![0.0; s];
        for i in 0..s {
            for j in 0..s {
                next[j] += 0.5 * q[i] * p[(i, j)];
            }
            next[i] += 0.5 * q[i];
        }
        let diff = next
            .iter()
            .zip(&q)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        q = next;
        if diff < 1e-14 {
            break;
        }
    }
    q
}

/// `max_j |(qP)_j - q_j|`.
pub fn stationary_residual(p: &DMatrix<f64>, q: &[f64]) -> f64 {
    let s = p.nrows();
    (0..s)
        .map(|j| ((0..s).map(|i| q[i] * p[(i, j)]).sum::<f64>() - q[j]).abs())
        .fold(0.0, f64::max)
}

/// `[[0.9, 0.1], [0.2, 0.8]]` observed as 0 and 1.
pub fn default_chain() -> FiniteProcess {
    FiniteProcess::markov(
        vec![vec![0.9, 0.1], vec![0.2, 0.8]],
        vec![vec![0.0], vec![1.0]],
    )
    .expect("default chain is valid")
}

/// Three-state chain whose first two states are observed as the same value.
pub fn collapsing_chain() -> FiniteProcess {
    FiniteProcess::markov(
        vec![
            vec![0.5, 0.3, 0.2],
            vec![0.1, 0.6, 0.3],
            vec![0.4, 0.2, 0.4],
        ],
        vec![vec![0.0], vec![0.0], vec![1.0]],
    )
    .expect("collapsing chain is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn stationary_examples() {
        let one = DMatrix::from_element(1, 1, 1.0);
        assert_eq!(stationary_distribution(&one).unwrap(), vec![1.0]);

        let q = default_chain().stationary().to_vec();
        assert!((q[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((q[1] - 1.0 / 3.0).abs() < 1e-15);

        let ds = DMatrix::from_row_slice(3, 3, &[0.2, 0.5, 0.3, 0.5, 0.1, 0.4, 0.3, 0.4, 0.3]);
        for v in stationary_distribution(&ds).unwrap() {
            assert!((v - 1.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn reducible_chain_is_rejected() {
        let p = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(matches!(
            FiniteProcess::markov(p, vec![vec![0.0], vec![1.0]]),
            Err(Error::Reducible)
        ));
    }

    #[test]
    fn non_stochastic_rows_are_rejected() {
        let p = vec![vec![0.9, 0.2], vec![0.2, 0.8]];
        assert!(FiniteProcess::markov(p, vec![vec![0.0], vec![1.0]]).is_err());
    }

    #[test]
    fn periodic_chain_fails_mixing_check() {
        let flip = FiniteProcess::markov(
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![vec![0.0], vec![1.0]],
        )
        .unwrap();
        assert!(matches!(flip.require_mixing(), Err(Error::Periodic(2))));
        default_chain().require_mixing().unwrap();
        collapsing_chain().require_mixing().unwrap();
    }

    #[test]
    fn large_chain_uses_power_iteration() {
        let s = 70;
        let rows: Vec<Vec<f64>> = (0..s)
            .map(|i| {
                let mut r = vec![0.0; s];
                r[i] = 0.5;
                r[(i + 1) % s] = 0.3;
                r[(i + s - 1) % s] = 0.2;
                r
            })
            .collect();
        let p = to_matrix(&rows).unwrap();
        let q = stationary_distribution(&p).unwrap();
        // doubly stochastic
        for v in q {
            assert!((v - 1.0 / s as f64).abs() < 1e-13);
        }
    }

    #[test]
    fn fdd_examples() {
        let iid = FiniteProcess::iid(vec![0.5, 0.5], vec![vec![0.0], vec![1.0]]).unwrap();
        let c = StateCylinder::new(0, vec![vec![0], vec![1]]);
        assert!((iid.fdd_probability(&c) - 0.25).abs() < 1e-15);

        let m = default_chain();
        let c = StateCylinder::new(0, vec![vec![0], vec![0]]);
        assert!((m.fdd_probability(&c) - 0.6).abs() < 1e-15);

        let c = StateCylinder::new(3, vec![vec![0, 1], vec![]]);
        assert_eq!(m.fdd_probability(&c), 0.0);
    }

    #[test]
    fn fdd_marginalizes_over_last_factor() {
        let proc = collapsing_chain();
        let base = StateCylinder::new(0, vec![vec![0, 2], vec![1]]);
        let mut ext = base.clone();
        ext.factors.push(vec![0, 1, 2]);
        let a = proc.fdd_probability(&base);
        let b = proc.fdd_probability(&ext);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let proc = default_chain();
        let a = proc.sample_path(&mut ChaCha8Rng::seed_from_u64(5), 100);
        let b = proc.sample_path(&mut ChaCha8Rng::seed_from_u64(5), 100);
        assert_eq!(a, b);
        let one = FiniteProcess::markov(vec![vec![1.0]], vec![vec![3.0]]).unwrap();
        let p = one.sample_path(&mut ChaCha8Rng::seed_from_u64(1), 50);
        assert!(p.values.iter().all(|v| v[0] == 3.0));
    }

    #[test]
    fn empirical_transitions_match() {
        let proc = default_chain();
        let n = 1_000_000;
        let path = proc.sample_path(&mut ChaCha8Rng::seed_from_u64(2024), n + 1);
        let mut counts = [[0usize; 2]; 2];
        for w in path.states.windows(2) {
            counts[w[0]][w[1]] += 1;
        }
        let tol = 3.0 / (n as f64).sqrt();
        for i in 0..2 {
            let row: usize = counts[i].iter().sum();
            for j in 0..2 {
                let freq = counts[i][j] as f64 / row as f64;
                assert!((freq - proc.transition()[(i, j)]).abs() < tol);
            }
        }
    }

    #[test]
    fn observed_marginal_examples() {
        let proc = FiniteProcess::iid(vec![0.7, 0.3], vec![vec![0.0], vec![1.0]]).unwrap();
        let m = proc.observed_marginal(0).unwrap();
        assert_eq!(
            m,
            MixedMarginal::discrete(&[(0.0, 0.7), (1.0, 0.3)]).unwrap()
        );

        let both = FiniteProcess::iid(vec![0.4, 0.6], vec![vec![5.0], vec![5.0]]).unwrap();
        let m = both.observed_marginal(0).unwrap();
        assert_eq!(m.atoms().len(), 1);
        assert!((m.atoms()[0].mass - 1.0).abs() < 1e-15);

        let proc = collapsing_chain();
        let m = proc.observed_marginal(0).unwrap();
        let q = proc.stationary();
        assert!((m.atoms()[0].mass - (q[0] + q[1])).abs() < 1e-15);
        assert!(proc.observed_marginal(1).is_err());
    }

    #[test]
    fn spec_roundtrip() {
        let text = r#"{"states":2,"P":[[0.9,0.1],[0.2,0.8]],"observe":[[0.0],[1.0]]}"#;
        let spec: ProcessSpec = serde_json::from_str(text).unwrap();
        let proc = FiniteProcess::from_spec(&spec).unwrap();
        assert_eq!(serde_json::to_string(&proc.to_spec()).unwrap(), text);
        let bad = r#"{"states":2,"P":[[0.9,0.1],[0.2,0.8]],"extra":1}"#;
        assert!(serde_json::from_str::<ProcessSpec>(bad).is_err());
        let both = r#"{"states":1,"P":[[1.0]],"weights":[1.0]}"#;
        let spec: ProcessSpec = serde_json::from_str(both).unwrap();
        assert!(FiniteProcess::from_spec(&spec).is_err());
    }
}
