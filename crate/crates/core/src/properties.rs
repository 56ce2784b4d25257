//! Property tests for the invariants every module promises.

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::construction::{
    build_biorthogonal, build_core_approximants, check_coefficient_bound, random_combination, random_window,
    verify_near_isometry, verify_transfer_bounds, Source,
};
use crate::linalg;
use crate::operators::{restricted_min_modulus, restricted_norm, EventuallyPeriodic, Operator};
use crate::quantities::{estimate, grassmann_search, svd_oracle, Dims, Method, Objective, Quantity, SearchParams};
use crate::runner::{parse_config, Experiment, ExperimentConfig, Parameters};
use crate::seqspace::{
    gram, inner_product, linear_combine, norm, norming_functional, pairing, project_into_kernels, LinearFunctional,
    SpaceConfig, Subspace, TailVector,
};

const L2: SpaceConfig = SpaceConfig::L2;
const SPACES: [SpaceConfig; 3] = [SpaceConfig::L1, SpaceConfig::L2, SpaceConfig::LINF];

fn coords(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, len)
}

fn ratio() -> impl Strategy<Value = f64> {
    -0.9..0.9f64
}

fn tail_vector_with(r: f64) -> impl Strategy<Value = TailVector> {
    (coords(0..6), coords(1..4)).prop_map(move |(p, c)| TailVector::new(p, c, r).unwrap())
}

fn tail_vector() -> impl Strategy<Value = TailVector> {
    ratio().prop_flat_map(tail_vector_with)
}

/// Two vectors with a common tail ratio, so they can be combined.
fn pair() -> impl Strategy<Value = (TailVector, TailVector)> {
    ratio().prop_flat_map(|r| (tail_vector_with(r), tail_vector_with(r)))
}

fn finite_vector() -> impl Strategy<Value = TailVector> {
    coords(1..8).prop_map(TailVector::finite)
}

fn ep() -> impl Strategy<Value = EventuallyPeriodic> {
    (coords(0..4), coords(1..4)).prop_map(|(p, q)| EventuallyPeriodic::new(p, q).unwrap())
}

fn square(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    coords(n * n..n * n + 1).prop_map(move |v| DMatrix::from_row_slice(n, n, &v))
}

fn operator() -> impl Strategy<Value = Operator> {
    prop_oneof![
        ep().prop_map(Operator::Diagonal),
        ep().prop_map(Operator::WeightedShift),
        (square(3), ep()).prop_map(|(block, diagonal)| Operator::finite_rank_plus(block, diagonal).unwrap()),
        (2usize..6).prop_flat_map(square).prop_map(|m| Operator::dense(m).unwrap()),
    ]
}

/// 1–3 basis vectors sharing a tail ratio, kept only when independent.
fn subspace() -> impl Strategy<Value = Subspace> {
    ratio()
        .prop_flat_map(|r| prop::collection::vec(tail_vector_with(r), 1..4))
        .prop_filter_map("dependent basis", |b| Subspace::new(b, L2).ok())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_form_norms_match_partial_sums(v in tail_vector()) {
        const J: usize = 1_000_000;
        let x = v.coords(J);
        for space in SPACES {
            let partial = match space {
                SpaceConfig::L1 => x.iter().map(|a| a.abs()).sum::<f64>(),
                SpaceConfig::L2 => x.iter().map(|a| a * a).sum::<f64>().sqrt(),
                _ => x.iter().fold(0.0f64, |m, a| m.max(a.abs())),
            };
            let remainder = v.tail_norm_from(J, space);
            let exact = norm(&v, space);
            prop_assert!((exact - partial).abs() <= remainder + 1e-9 * (1.0 + exact), "{space:?}: {exact} vs {partial}");
        }
    }

    #[test]
    fn cauchy_schwarz(u in tail_vector(), v in tail_vector()) {
        prop_assert!(inner_product(&u, &v).abs() <= norm(&u, L2) * norm(&v, L2) + 1e-9);
    }

    #[test]
    fn norming_functionals_norm(v in tail_vector(), w in finite_vector()) {
        let cases = [(v, L2), (w.clone(), SpaceConfig::L1), (w, SpaceConfig::LINF)];
        for (x, space) in cases {
            if x.is_zero() {
                continue;
            }
            let f = norming_functional(&x, space).unwrap();
            let n = norm(&x, space);
            prop_assert!(close(pairing(&f, &x), n, 1e-9), "{space:?}");
            prop_assert!((f.dual_norm() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn kernel_projection_is_idempotent(v in tail_vector(), reps in prop::collection::vec(tail_vector(), 1..4)) {
        let fs: Vec<LinearFunctional> = reps.into_iter().map(|r| LinearFunctional::new(r, L2)).collect();
        let Ok(once) = project_into_kernels(&v, &fs, L2) else {
            return Ok(());
        };
        let twice = project_into_kernels(&once, &fs, L2).unwrap();
        prop_assert!(norm(&twice.sub(&once).unwrap(), L2) <= 1e-9 * (1.0 + norm(&v, L2)));
    }

    #[test]
    fn canonical_form_is_a_normal_form(p in coords(0..6), c in coords(1..5), r in ratio(), zeros in 0usize..3) {
        let mut p = p;
        p.extend(std::iter::repeat_n(0.0, zeros));
        let v = TailVector::new(p, c.repeat(2), r).unwrap();
        let again = TailVector::new(v.prefix().to_vec(), v.tail_coeffs().to_vec(), v.tail_ratio()).unwrap();
        prop_assert_eq!(&again, &v);
    }

    #[test]
    fn operators_are_linear(op in operator(), (u, v) in pair(), a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let lhs = op.apply(&linear_combine(&[a, b], &[u.clone(), v.clone()]).unwrap()).unwrap();
        let rhs = linear_combine(&[a, b], &[op.apply(&u).unwrap(), op.apply(&v).unwrap()]).unwrap();
        let scale = 1.0 + lhs.coords(40).iter().chain(&rhs.coords(40)).fold(0.0f64, |m, x| m.max(x.abs()));
        for (x, y) in lhs.coords(40).iter().zip(rhs.coords(40)) {
            prop_assert!((x - y).abs() <= 1e-12 * scale, "{x} vs {y}");
        }
    }

    #[test]
    fn images_respect_the_operator_norm(op in operator(), v in tail_vector()) {
        prop_assume!(!v.is_zero());
        let unit = v.scaled(1.0 / norm(&v, L2));
        let image = norm(&op.apply(&unit).unwrap(), L2);
        prop_assert!(image <= op.norm(L2) + 1e-9, "{image} > {}", op.norm(L2));
    }

    #[test]
    fn restriction_sandwich(op in operator(), m in subspace()) {
        let lo = restricted_min_modulus(&op, &m).unwrap();
        let hi = restricted_norm(&op, &m).unwrap();
        prop_assert!(lo <= hi + 1e-9 * (1.0 + hi));
        prop_assert!(hi <= op.norm(L2) + 1e-9);
    }

    #[test]
    fn coordinate_restrictions_match_the_compression(
        op in operator(),
        picks in prop::collection::btree_set(1usize..8, 1..4),
    ) {
        let n = 9;
        let idx: Vec<usize> = picks.into_iter().collect();
        let m = Subspace::coordinate(&idx, L2).unwrap();
        let t = op.truncate(n);
        let cols = DMatrix::from_fn(n, idx.len(), |i, j| t[(i, idx[j] - 1)]);
        let expected = svd_oracle(&cols)[0];
        prop_assert!(close(restricted_norm(&op, &m).unwrap(), expected, 1e-9));
    }

    #[test]
    fn oracle_values_are_homogeneous(a in square(5), alpha in -4.0..4.0f64, k in 1usize..=3, extra in 0usize..=2) {
        let big_k = k + extra;
        let op = Operator::dense(a.clone()).unwrap();
        let scaled = Operator::dense(a * alpha).unwrap();
        for q in [Quantity::Gamma, Quantity::Tau, Quantity::Delta, Quantity::Nabla] {
            let dims = Dims::new(5, k, big_k);
            let f = estimate(q, &op, L2, dims, Method::SvdOracle, SearchParams::default()).unwrap().value;
            let g = estimate(q, &scaled, L2, dims, Method::SvdOracle, SearchParams::default()).unwrap().value;
            prop_assert!((g - alpha.abs() * f).abs() <= 1e-9 * (1.0 + g.abs()), "{q}: {g} vs {}", alpha.abs() * f);
        }
    }

    #[test]
    fn gamma_grows_and_tau_shrinks_with_k(a in square(6)) {
        let op = Operator::dense(a).unwrap();
        let at = |q, k| estimate(q, &op, L2, Dims::new(6, k, k), Method::SvdOracle, SearchParams::default()).unwrap().value;
        for k in 1..6 {
            prop_assert!(at(Quantity::Gamma, k + 1) >= at(Quantity::Gamma, k) - 1e-9);
            prop_assert!(at(Quantity::Tau, k + 1) <= at(Quantity::Tau, k) + 1e-9);
        }
    }

    #[test]
    fn subset_and_svd_oracles_agree_on_diagonals(d in coords(1..9)) {
        let n = d.len();
        let op = Operator::diagonal(d, vec![0.0]).unwrap();
        for q in [Quantity::Gamma, Quantity::Tau] {
            for k in 1..=n {
                let dims = Dims::new(n, k, k);
                let exact = estimate(q, &op, L2, dims, Method::SubsetOracle, SearchParams::default()).unwrap();
                let svd = estimate(q, &op, L2, dims, Method::SvdOracle, SearchParams::default()).unwrap();
                prop_assert_eq!(exact.value, svd.value);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn search_bases_are_orthonormal_and_attain_their_value(a in square(5), k in 1usize..=3, seed in any::<u64>(), high in any::<bool>()) {
        let op = Operator::dense(a).unwrap();
        let objective = if high { Objective::MaxMinModulus } else { Objective::MinRestrictedNorm };
        let out = grassmann_search(objective, &op, L2, 5, k, 4, seed).unwrap();
        let g = out.basis.gram();
        prop_assert!((g - DMatrix::identity(k, k)).abs().max() <= 1e-10);
        let attained = match objective {
            Objective::MaxMinModulus => restricted_min_modulus(&op, &out.basis).unwrap(),
            Objective::MinRestrictedNorm => restricted_norm(&op, &out.basis).unwrap(),
        };
        prop_assert!((attained - out.value).abs() <= 1e-9);
    }

    #[test]
    fn biorthogonal_systems_are_valid_and_bound_coefficients(seed in any::<u64>(), dim in 2usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let window = random_window(&mut rng, dim);
        let sys = build_biorthogonal(&Source::Window(window), dim, L2, seed).unwrap();
        prop_assert!(sys.is_valid());
        for _ in 0..50 {
            let a = random_combination(&mut rng, dim);
            prop_assert!(check_coefficient_bound(&sys, &a).unwrap().holds);
        }
    }

    #[test]
    fn approximants_meet_budgets_and_transfer_bounds(
        seed in any::<u64>(),
        dim in 2usize..=6,
        op in operator(),
        eps in prop::sample::select(vec![0.5, 0.1, 0.01]),
        c in prop::sample::select(vec![0.5, 1.0, 2.0]),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let window = random_window(&mut rng, dim);
        let sys = build_biorthogonal(&Source::Window(window), dim, L2, seed).unwrap();
        let ca = build_core_approximants(&sys, &op, eps, c).unwrap();
        prop_assert!(ca.budgets.iter().zip(&ca.allowances).all(|(b, a)| b <= a));
        prop_assert!(ca.kernel_defect() <= 1e-10);
        prop_assert!(ca.z.iter().all(TailVector::is_finitely_supported));
        for _ in 0..30 {
            let a = random_combination(&mut rng, dim);
            let iso = verify_near_isometry(&ca, &a).unwrap();
            prop_assert!(iso.distortion_holds && iso.sandwich_holds, "{iso:?}");
            let tr = verify_transfer_bounds(&ca, &op, &a).unwrap();
            prop_assert!(tr.lower_holds && tr.upper_holds, "{tr:?}");
        }
    }

    #[test]
    fn transfer_is_sound_on_subspaces(seed in any::<u64>(), op in operator(), c in 0.2..3.0f64) {
        let eps = 0.1;
        let dim = 5;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let window = random_window(&mut rng, dim);
        let sys = build_biorthogonal(&Source::Window(window), dim, L2, seed).unwrap();
        let ca = build_core_approximants(&sys, &op, eps, c).unwrap();
        for _ in 0..10 {
            let sub = rand::Rng::random_range(&mut rng, 1..=3);
            let (zs, azs): (Vec<_>, Vec<_>) =
                (0..sub).map(|_| ca.combine(&random_combination(&mut rng, dim)).unwrap()).unzip();
            let (Ok(v), Ok(av)) = (Subspace::new(zs, L2), Subspace::new(azs, L2)) else {
                continue;
            };
            if restricted_norm(&op, &av).unwrap() < c {
                prop_assert!(restricted_norm(&op, &v).unwrap() < (1.0 + eps) / (1.0 - eps) * c + 1e-9);
            }
            if restricted_min_modulus(&op, &av).unwrap() > c {
                prop_assert!(restricted_min_modulus(&op, &v).unwrap() > (1.0 - eps) / (1.0 + eps) * c - 1e-9);
            }
        }
    }

    #[test]
    fn configs_round_trip(
        op in operator(),
        eps in 0.01..0.9f64,
        seed in any::<u64>(),
        experiment in prop::sample::select(vec![
            Experiment::Quantities, Experiment::ConstructionSuite, Experiment::InvarianceCase, Experiment::LemmaCheck,
        ]),
    ) {
        let config = ExperimentConfig {
            space: L2,
            operator: Some(op),
            experiment,
            parameters: Parameters {
                schedule: Some(vec![[8, 2, 4]]),
                epsilon: Some(eps),
                seed: Some(seed),
                ..Parameters::default()
            },
            output_path: None,
        };
        let text = serde_json::to_string(&config).unwrap();
        prop_assert_eq!(parse_config(&text).unwrap(), config);
    }
}

#[test]
fn gram_of_search_basis_helper_is_consistent() {
    // the orthonormality property above relies on Subspace::gram agreeing with the free function
    let b = vec![TailVector::unit(1), TailVector::new(vec![0.0, 1.0], vec![1.0], 0.5).unwrap()];
    let s = Subspace::new(b.clone(), L2).unwrap();
    assert_eq!(s.gram(), gram(&b));
    assert!(linalg::is_positive_definite(&s.gram(), 1e-10));
}
