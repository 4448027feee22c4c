use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use unilift::chains::{FiniteProcess, StateCylinder};
use unilift::lift::{
    cylinder_measure, lift_point, preimage_cylinders, project_point, IntervalCylinder,
    IntervalUnion,
};
use unilift::marginals::{random_marginal, MarginalProfile, MixedMarginal};
use unilift::mixing::{block_table, lifted_table};

fn marginal_strategy() -> impl Strategy<Value = MixedMarginal> {
    (any::<u64>(), 0..3u8).prop_map(|(seed, kind)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let profile = match kind {
            0 => MarginalProfile::discrete(5),
            1 => MarginalProfile::continuous(5),
            _ => MarginalProfile::mixed(3, 5),
        };
        random_marginal(&mut rng, profile)
    })
}

/// Row-stochastic matrix with strictly positive entries.
fn chain_strategy(max_states: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2..=max_states).prop_flat_map(|s| {
        prop::collection::vec(prop::collection::vec(0.05f64..1.0, s), s).prop_map(|rows| {
            rows.into_iter()
                .map(|r| {
                    let t: f64 = r.iter().sum();
                    r.into_iter().map(|v| v / t).collect()
                })
                .collect()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn quantile_is_a_galois_inverse(m in marginal_strategy(), s in 1e-9f64..1.0 - 1e-9, t in -10.0f64..10.0) {
        // F^{-1}(s) <= t  iff  s <= F(t)
        let q = m.quantile(s).unwrap();
        prop_assert_eq!(q <= t, s <= m.cdf(t));
    }

    #[test]
    fn cdf_and_left_limit_are_ordered(m in marginal_strategy(), a in -10.0f64..10.0, b in -10.0f64..10.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(m.cdf(lo) <= m.cdf(hi));
        prop_assert!(m.cdf_left(hi) <= m.cdf(hi));
        prop_assert!(m.cdf_left(hi) >= m.cdf(lo) || lo == hi);
    }

    #[test]
    fn lifted_level_projects_back(m in marginal_strategy(), s in 1e-9f64..1.0 - 1e-9, seed in any::<u64>()) {
        let x = m.quantile(s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = lift_point(std::slice::from_ref(&m), &[x], &mut rng).unwrap();
        prop_assert!(u[0] > 0.0 && u[0] < 1.0 || m.atom_index(x).is_none());
        prop_assert!(m.cdf_left(x) <= u[0] && u[0] <= m.cdf(x));
        let back = project_point(std::slice::from_ref(&m), &u).unwrap();
        if m.atom_index(x).is_some() {
            prop_assert_eq!(back[0], x);
        } else {
            prop_assert!((back[0] - x).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn preimage_measure_matches_the_process(p in chain_strategy(4), f0 in 1u32..16, f1 in 1u32..16) {
        let s = p.len();
        let observe = (0..s).map(|i| vec![i as f64 * 0.5]).collect();
        let proc = FiniteProcess::markov(p, observe).unwrap();
        let m = proc.observed_marginals().unwrap();
        let set = |mask: u32| (0..s).filter(|i| mask >> i & 1 == 1).collect::<Vec<_>>();
        let cyl = StateCylinder::new(0, vec![set(f0), set(f1)]);
        let lifted: f64 = preimage_cylinders(&m, &proc, &cyl)
            .unwrap()
            .iter()
            .map(|c| cylinder_measure(&m, &proc, c).unwrap())
            .sum();
        prop_assert!((lifted - proc.fdd_probability(&cyl)).abs() <= 1e-12);
    }

    #[test]
    fn lifted_measure_is_shift_invariant(p in chain_strategy(3), lo in 0.0f64..0.5, w in 0.01f64..0.5, shift in -5i64..5) {
        let s = p.len();
        let proc = FiniteProcess::markov(p, (0..s).map(|i| vec![i as f64]).collect()).unwrap();
        let m = proc.observed_marginals().unwrap();
        // any interval inside the first atom interval is admissible
        let a = m[0].atom_interval(0).unwrap();
        let iv = IntervalUnion::interval(a.lo + lo * a.width(), a.lo + (lo + w) * a.width()).unwrap();
        let cyl = IntervalCylinder::new(0, vec![vec![iv.clone()], vec![IntervalUnion::full()], vec![iv]]);
        let base = cylinder_measure(&m, &proc, &cyl).unwrap();
        let moved = cylinder_measure(&m, &proc, &cyl.shifted(shift)).unwrap();
        prop_assert!((base - moved).abs() <= 1e-15);
    }

    #[test]
    fn lifting_preserves_coefficients(p in chain_strategy(3), n in 1usize..4, r in 1usize..3) {
        let s = p.len();
        let proc = FiniteProcess::markov(p, (0..s).map(|i| vec![i as f64]).collect()).unwrap();
        let m = proc.observed_marginals().unwrap();
        let exact = block_table(&proc, n, 1).unwrap().coefficients();
        let lifted = lifted_table(&m, &proc, n, 1, r).unwrap().coefficients();
        prop_assert!(lifted.max_abs_diff(&exact) <= 1e-10);
        prop_assert!(exact.alpha <= exact.beta + 1e-12 && exact.beta <= exact.phi + 1e-12);
    }
}

#[test]
fn longer_blocks_never_lower_coefficients() {
    let proc = unilift::chains::collapsing_chain();
    let m = proc.observed_marginals().unwrap();
    // a longer block sees more of the past and of the future
    for n in 1..=5 {
        let short = lifted_table(&m, &proc, n, 1, 1).unwrap().coefficients();
        let long = lifted_table(&m, &proc, n, 2, 1).unwrap().coefficients();
        assert!(long.alpha >= short.alpha - 1e-12);
        assert!(long.beta >= short.beta - 1e-12);
        assert!(long.phi >= short.phi - 1e-12);
    }
}
