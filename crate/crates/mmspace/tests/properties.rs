//! Cross-module invariants: metric axioms of the measure distance,
//! permutation and blow-up invariance, serialization round trips, and the
//! zero-distance ⇒ equal-signature direction on constructed pairs.

use proptest::prelude::*;

use mmspace::core::{blow_up, d_ext, DiscreteDistribution, FiniteMMSpace, QMMSpace, Space};
use mmspace::distances::{box1_aligned, AlignBudget, AlignMode, GridKernel};
use mmspace::formats::{parse, to_json, FileRepr};
use mmspace::invariants::{
    lipschitz_check, obs_diam, partial_diameter, pushforward, separation, LipschitzWitness,
    ObsDiamBudget, SearchMode, TargetSpace,
};
use mmspace::rng::derive_seed;
use mmspace::sampling::{
    moment_exact, moment_of_matrix, moment_signature, sample_matrix, GSystem, MomentOptions,
    TestFunction,
};

fn arb_distribution() -> impl Strategy<Value = DiscreteDistribution> {
    prop::collection::vec((0.0f64..=1.0, 0.05f64..1.0), 1..6)
        .prop_map(|atoms| DiscreteDistribution::new(atoms).expect("valid atoms"))
}

/// Distances drawn from [0.35, 0.7] always satisfy the triangle
/// inequality, so every draw is a valid space.
fn arb_space() -> impl Strategy<Value = FiniteMMSpace> {
    (2usize..6)
        .prop_flat_map(|n| {
            let weights = prop::collection::vec(0.5f64..1.5, n);
            let upper = prop::collection::vec(0.35f64..0.7, n * (n - 1) / 2);
            (Just(n), weights, upper)
        })
        .prop_map(|(n, mut weights, upper)| {
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            let mut rows = vec![vec![0.0; n]; n];
            let mut it = upper.into_iter();
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = it.next().unwrap();
                    rows[i][j] = v;
                    rows[j][i] = v;
                }
            }
            FiniteMMSpace::new(weights, rows).expect("metric by construction")
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn measure_distance_is_a_metric(
        a in arb_distribution(),
        b in arb_distribution(),
        c in arb_distribution(),
    ) {
        let ab = d_ext(&a, &b);
        let ba = d_ext(&b, &a);
        prop_assert_eq!(ab, ba);
        prop_assert!(d_ext(&a, &a) == 0.0);
        let ac = d_ext(&a, &c);
        let cb = d_ext(&c, &b);
        prop_assert!(ab <= ac + cb + 1e-9);
        if ab == 0.0 {
            // Canonical forms coincide at distance zero.
            prop_assert!(a.approx_eq(&b, 1e-9));
        }
    }

    #[test]
    fn constructor_round_trip(space in arb_space()) {
        // Anything the validating constructor accepted re-validates, and
        // the JSON form parses back bit-identically.
        let again = FiniteMMSpace::new(space.weights().to_vec(), space.dist_matrix());
        prop_assert!(again.is_ok());
        let s = Space::Mm(space);
        let text = to_json(&FileRepr::from(&s));
        let back = parse(&text).unwrap().into_space().unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn deterministic_invariants_are_permutation_invariant(
        space in arb_space(),
        seed in 0u64..1000,
    ) {
        let n = space.n();
        // Seeded Fisher–Yates shuffle of the labels.
        let mut perm: Vec<usize> = (0..n).collect();
        let mut rng = mmspace::rng::rng_from(seed);
        for i in (1..n).rev() {
            let j = rand::Rng::random_range(&mut rng, 0..=i);
            perm.swap(i, j);
        }
        let permuted = space.permuted(&perm);

        let g = GSystem::from_powers(2, &[2]).unwrap();
        let ta = moment_exact(&g, &space).unwrap();
        let tb = moment_exact(&g, &permuted).unwrap();
        prop_assert!((ta - tb).abs() <= 1e-12);

        let kappas = [0.2, 0.25];
        let sa = separation(&space, &kappas, SearchMode::Exact);
        let sb = separation(&permuted, &kappas, SearchMode::Exact);
        match (sa, sb) {
            (Ok(x), Ok(y)) => prop_assert_eq!(x.delta, y.delta),
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "feasibility changed under relabeling"),
        }
    }

    #[test]
    fn blow_up_preserves_mass_and_moments(space in arb_space(), raw_mults in prop::collection::vec(1usize..3, 6)) {
        let mults: Vec<usize> = raw_mults.into_iter().take(space.n()).collect();
        prop_assume!(mults.len() == space.n());
        let blown = blow_up(&space, &mults).unwrap();
        let total: f64 = blown.weights().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        let g = GSystem::from_powers(2, &[1]).unwrap();
        let a = moment_exact(&g, &space).unwrap();
        let b = moment_exact(&g, &blown).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn qmm_support_brackets_are_ordered(space in arb_space(), spread in 0.0f64..0.2) {
        // Widen each pairwise law around the base distance.
        let n = space.n();
        let d0 = DiscreteDistribution::zero();
        let mut dstar = vec![vec![d0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = space.dist(i, j);
                let hi = (d + spread).min(1.0);
                let cell = if hi > d {
                    DiscreteDistribution::new(vec![(d, 0.5), (hi, 0.5)]).unwrap()
                } else {
                    DiscreteDistribution::point_mass(d)
                };
                dstar[i][j] = cell.clone();
                dstar[j][i] = cell;
            }
        }
        let q = QMMSpace::new(space.weights().to_vec(), dstar).unwrap();
        let lower = q.lower_matrix();
        let upper = q.upper_matrix();
        for i in 0..q.n() {
            for j in 0..q.n() {
                prop_assert!(lower[i][j] <= upper[i][j]);
                prop_assert!(lower[i][j] >= 0.0 && upper[i][j] <= 1.0);
            }
        }
        // The embedding reproduces the base matrix on both brackets.
        let e = QMMSpace::from_mm(&space);
        prop_assert_eq!(e.lower_matrix(), space.dist_matrix());
        prop_assert_eq!(e.upper_matrix(), space.dist_matrix());
    }

    #[test]
    fn sampled_matrices_inherit_the_triangle_inequality(space in arb_space(), seed in 0u64..500) {
        let m = sample_matrix(&space, 5, seed);
        prop_assert!(m.satisfies_triangle(1e-12));
    }
}

#[test]
fn seeded_sampling_is_distribution_invariant_under_relabeling() {
    // Per-seed samples differ after relabeling, but the law of the sampled
    // moment does not: compare sorted statistics across many seeds.
    let space = FiniteMMSpace::new(
        vec![0.1, 0.2, 0.3, 0.4],
        vec![
            vec![0.0, 0.45, 0.62, 0.57],
            vec![0.45, 0.0, 0.55, 0.68],
            vec![0.62, 0.55, 0.0, 0.49],
            vec![0.57, 0.68, 0.49, 0.0],
        ],
    )
    .unwrap();
    let permuted = space.permuted(&[2, 0, 3, 1]);
    let g = GSystem::uniform(2, TestFunction::identity()).unwrap();
    let runs = 600;
    let stats = |s: &FiniteMMSpace, stream: u64| -> Vec<f64> {
        let mut values: Vec<f64> = (0..runs)
            .map(|i| {
                let m = sample_matrix(s, 12, derive_seed(stream, i));
                moment_of_matrix(&g, &m).unwrap()
            })
            .collect();
        values.sort_by(f64::total_cmp);
        values
    };
    let a = stats(&space, 1);
    let b = stats(&permuted, 2);
    // Two-sample Kolmogorov–Smirnov distance over the sorted statistics.
    let mut ks = 0.0f64;
    for (i, (x, y)) in a.iter().zip(&b).enumerate() {
        let fa = i as f64 / runs as f64;
        let fb_x = b.partition_point(|v| v <= x) as f64 / runs as f64;
        let fa_y = a.partition_point(|v| v <= y) as f64 / runs as f64;
        ks = ks.max((fa - fb_x).abs()).max((fa - fa_y).abs());
        let _ = y;
    }
    let threshold = 2.0 * (2.0 / runs as f64).sqrt() * 1.36;
    assert!(ks < threshold, "KS distance {ks} above {threshold}");
}

#[test]
fn zero_aligned_distance_implies_equal_signatures() {
    // Constructed zero-distance pairs: blow-ups and relabelings. The exact
    // alignment search certifies distance zero and the exact moment
    // signatures coincide.
    let space = FiniteMMSpace::new(
        vec![0.25, 0.3, 0.45],
        vec![
            vec![0.0, 0.5, 0.65],
            vec![0.5, 0.0, 0.55],
            vec![0.65, 0.55, 0.0],
        ],
    )
    .unwrap();
    let opts = MomentOptions {
        r_max: 3,
        k_max: 2,
        samples: 0,
        seed: 0,
        exact_cap: u64::MAX,
    };
    let base_sig = moment_signature(&space, &opts).unwrap();
    let pairs: Vec<FiniteMMSpace> = vec![
        blow_up(&space, &[2, 1, 1]).unwrap(),
        blow_up(&space, &[1, 2, 2]).unwrap(),
        space.permuted(&[2, 1, 0]),
    ];
    for other in pairs {
        let r = box1_aligned(
            &GridKernel::from(&space),
            &GridKernel::from(&other),
            AlignMode::Exact,
            &AlignBudget::default(),
            0,
        )
        .unwrap();
        assert_eq!(r.eps.eps(), 0.0);
        let sig = moment_signature(&other, &opts).unwrap();
        assert!(base_sig.max_gap(&sig).unwrap() <= 1e-12);
    }
}

#[test]
fn pushforward_partial_diameter_is_blow_up_invariant() {
    let space = FiniteMMSpace::new(
        vec![0.2, 0.3, 0.5],
        vec![
            vec![0.0, 0.4, 0.6],
            vec![0.4, 0.0, 0.5],
            vec![0.6, 0.5, 0.0],
        ],
    )
    .unwrap();
    let mults = [2usize, 3, 1];
    let blown = blow_up(&space, &mults).unwrap();
    // Lift an interval witness along the blow-up (copies share the value).
    let values = vec![0.1, 0.45, 0.3];
    let lifted: Vec<f64> = mults
        .iter()
        .enumerate()
        .flat_map(|(i, &m)| std::iter::repeat_n(values[i], m))
        .collect();
    let w_base = LipschitzWitness::interval(values);
    let w_blown = LipschitzWitness::interval(lifted);
    assert!(lipschitz_check(&space, &w_base).unwrap().0);
    assert!(lipschitz_check(&blown, &w_blown).unwrap().0);
    let m_base = pushforward(&space, &w_base, true).unwrap();
    let m_blown = pushforward(&blown, &w_blown, true).unwrap();
    for kappa in [0.1, 0.3, 0.6] {
        let a = partial_diameter(&m_base, kappa).unwrap().value;
        let b = partial_diameter(&m_blown, kappa).unwrap().value;
        assert!((a - b).abs() <= 1e-12, "kappa {kappa}: {a} vs {b}");
    }
}

#[test]
fn observable_diameter_witnesses_revalidate() {
    let space = mmspace::core::sphere_empirical(3, 40, 9).unwrap();
    let budget = ObsDiamBudget {
        restarts: 2,
        iterations: 200,
    };
    let result = obs_diam(&space, &TargetSpace::Interval, 0.2, &budget, 3).unwrap();
    let (ok, slack) = lipschitz_check(&space, &result.witness).unwrap();
    assert!(ok);
    assert!((slack - result.witness.slack).abs() <= 1e-12);
    // The reported value is reproducible from the witness.
    let measure = pushforward(&space, &result.witness, true).unwrap();
    let value = partial_diameter(&measure, 0.2).unwrap().value;
    assert_eq!(value, result.value);
}

#[test]
fn witnesses_round_trip_through_json() {
    let lips = LipschitzWitness {
        target: TargetSpace::Finite {
            metric: mmspace::core::FiniteMetric::pair(0.5),
        },
        values: mmspace::invariants::WitnessValues::Labels(vec![0, 1, 0]),
        slack: 0.125,
    };
    let text = serde_json::to_string(&lips).unwrap();
    let back: LipschitzWitness = serde_json::from_str(&text).unwrap();
    assert_eq!(back, lips);

    let sep = mmspace::invariants::SeparationWitness {
        assignment: vec![Some(0), None, Some(1)],
        delta: 0.5,
        masses: vec![0.4, 0.35],
    };
    let text = serde_json::to_string(&sep).unwrap();
    let back: mmspace::invariants::SeparationWitness = serde_json::from_str(&text).unwrap();
    assert_eq!(back, sep);

    let interval = LipschitzWitness::interval(vec![0.0, 0.25]);
    let text = serde_json::to_string(&interval).unwrap();
    // NaN slack survives as null and the values stay exact.
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["values"]["interval"][1], 0.25);
}
