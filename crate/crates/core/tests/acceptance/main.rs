//! Acceptance suite. Each criterion prints one PASS/FAIL line with its
//! runtime; the process exits nonzero if any criterion fails.
//!
//! `cargo test --test acceptance -- 3 5` runs only the listed criteria.

mod cli;

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use opquant::construction::{
    build_biorthogonal, check_coefficient_bound, check_dense_intersection, construction_suite, random_combination,
    random_window, run_invariance_case, Part, Source, SuiteConfig, BIORTHOGONAL_TOL,
};
use opquant::linalg;
use opquant::operators::Operator;
use opquant::quantities::{
    estimate, limit_estimate, subset_delta, subset_gamma, subset_nabla, subset_tau, svd_oracle, Dims, Method, Quantity,
    SearchParams,
};
use opquant::runner::default_witness;
use opquant::seqspace::{gram, LinearFunctional, SpaceConfig, TailVector, GRAM_RANK_TOL};

pub fn ensure(cond: bool, msg: String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg)
    }
}

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

const L2: SpaceConfig = SpaceConfig::L2;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn biorthogonality() -> Outcome {
    let mut combos = 0;
    for s in 0..50u64 {
        let mut r = rng(1, s);
        let dim = r.random_range(2..=8);
        let window = random_window(&mut r, dim);
        let sys = build_biorthogonal(&Source::Window(window), dim, L2, s).map_err(|e| format!("window {s}: {e}"))?;
        let (off, unit) = sys.defects();
        ensure(
            off <= BIORTHOGONAL_TOL && unit <= BIORTHOGONAL_TOL,
            format!("window {s}: pairing defect {off:e}, unit defect {unit:e}"),
        )?;
        ensure(
            linalg::is_positive_definite(&gram(&sys.vectors), GRAM_RANK_TOL),
            format!("window {s}: vectors dependent"),
        )?;
        for _ in 0..1000 {
            let a = random_combination(&mut r, dim);
            let bound = check_coefficient_bound(&sys, &a).map_err(|e| e.to_string())?;
            ensure(bound.holds, format!("window {s}: coefficient bound fails for {a:?}: {:?}", bound.margins))?;
            combos += 1;
        }
    }
    Ok(format!("50 windows, {combos} coefficient vectors"))
}

fn construction() -> Outcome {
    let report = construction_suite(&SuiteConfig::default(), None).map_err(|e| e.to_string())?;
    ensure(
        report.passed && report.violations.is_empty(),
        format!("{} violations, first: {:?}", report.violations.len(), report.violations.first()),
    )?;
    Ok(format!(
        "{} systems × 9 (ε, c), {} checks, worst budget use {:.3}",
        report.config.systems, report.checks, report.worst_budget_use
    ))
}

fn oracle_equivalence() -> Outcome {
    let params = SearchParams { restarts: 64, seed: 0 };
    let mut worst = 0.0f64;
    for s in 0..100u64 {
        let mut r = rng(3, s);
        let a = DMatrix::from_fn(6, 6, |_, _| r.sample::<f64, _>(StandardNormal));
        let sigma = svd_oracle(&a);
        let op = Operator::dense(a).map_err(|e| e.to_string())?;
        for k in 1..=3 {
            let g = estimate(Quantity::Gamma, &op, L2, Dims::new(6, k, k), Method::GrassmannSearch, params)
                .map_err(|e| e.to_string())?;
            let t = estimate(Quantity::Tau, &op, L2, Dims::new(6, k, k), Method::GrassmannSearch, params)
                .map_err(|e| e.to_string())?;
            let (dg, dt) = (g.value - sigma[6 - k], sigma[k - 1] - t.value);
            worst = worst.max(dg.abs()).max(dt.abs());
            ensure(
                (-1e-9..=1e-6).contains(&dg),
                format!("matrix {s}, k = {k}: Γ search {} vs σ {}", g.value, sigma[6 - k]),
            )?;
            ensure(
                (-1e-9..=1e-6).contains(&dt),
                format!("matrix {s}, k = {k}: τ search {} vs σ {}", t.value, sigma[k - 1]),
            )?;
        }
    }
    for s in 0..100u64 {
        let mut r = rng(33, s);
        let n = r.random_range(2..=10);
        let d: Vec<f64> = (0..n).map(|_| r.random_range(-3.0..3.0)).collect();
        let op = Operator::diagonal(d, vec![0.0]).map_err(|e| e.to_string())?;
        for q in [Quantity::Gamma, Quantity::Tau] {
            for k in 1..=n {
                let dims = Dims::new(n, k, k);
                let exact = estimate(q, &op, L2, dims, Method::SubsetOracle, params).map_err(|e| e.to_string())?;
                let svd = estimate(q, &op, L2, dims, Method::SvdOracle, params).map_err(|e| e.to_string())?;
                ensure(
                    exact.value == svd.value,
                    format!("diagonal {s}: {q} k = {k}: subset {} vs svd {}", exact.value, svd.value),
                )?;
            }
        }
    }
    Ok(format!("worst search gap {worst:.1e}; 100 diagonals exact"))
}

fn structured_limits() -> Outcome {
    let params = SearchParams::default();
    let alternating = Operator::diagonal(vec![], vec![2.0, 1.0]).map_err(|e| e.to_string())?;
    // quantity, limit, schedule point for k
    type Case = (Quantity, f64, fn(usize) -> Dims);
    let cases: [Case; 4] = [
        (Quantity::Gamma, 1.0, |k| Dims::new(16, k, k)),
        (Quantity::Tau, 2.0, |k| Dims::new(16, k, k)),
        (Quantity::Delta, 2.0, |k| Dims::new(16, k, 2 * k)),
        (Quantity::Nabla, 1.0, |k| Dims::new(16, k, 2 * k)),
    ];
    for (q, expected, dims) in cases {
        let schedule: Vec<Dims> = (1..=6).map(dims).collect();
        let exact = limit_estimate(&alternating, L2, q, &schedule, Method::SubsetOracle, params).map_err(|e| e.to_string())?;
        let svd = limit_estimate(&alternating, L2, q, &schedule, Method::SvdOracle, params).map_err(|e| e.to_string())?;
        for (e, s) in exact.estimates.iter().zip(&svd.estimates) {
            ensure(e.value == expected, format!("{q} at k = {}: subset {} ≠ {expected}", e.k, e.value))?;
            ensure((s.value - expected).abs() <= 1e-9, format!("{q} at k = {}: svd {} ≠ {expected}", s.k, s.value))?;
        }
        ensure(exact.converged && exact.extrapolated == expected, format!("{q}: limit {exact:?}"))?;
    }

    let harmonic: Vec<f64> = (1..=64).map(|j| 1.0 / j as f64).collect();
    let compact = Operator::diagonal(harmonic, vec![0.0]).map_err(|e| e.to_string())?;
    let schedule: Vec<Dims> = (2..=12).map(|k| Dims::new(2 * k, k, k)).collect();
    let gamma = limit_estimate(&compact, L2, Quantity::Gamma, &schedule, Method::SvdOracle, params).map_err(|e| e.to_string())?;
    let exact = limit_estimate(&compact, L2, Quantity::Gamma, &schedule, Method::SubsetOracle, params).map_err(|e| e.to_string())?;
    for (g, e) in gamma.estimates.iter().zip(&exact.estimates) {
        let expected = 1.0 / (g.k + 1) as f64;
        ensure(e.value == expected, format!("compact Γ at k = {}: subset {} ≠ {expected}", e.k, e.value))?;
        ensure((g.value - expected).abs() <= 1e-9, format!("compact Γ at k = {}: svd {}", g.k, g.value))?;
    }
    ensure(
        gamma.estimates.windows(2).all(|w| w[1].value < w[0].value),
        "compact Γ estimates not decreasing".into(),
    )?;
    let at10 = gamma.estimates.iter().find(|e| e.k == 10).map(|e| e.value).unwrap_or(f64::NAN);
    ensure(at10 < 0.1, format!("compact Γ at k = 10 is {at10}"))?;
    ensure(!gamma.converged, "compact Γ flagged converged".into())?;
    Ok(format!("alternating Γ→1, τ→2, Δ→2, ∇→1 exact; compact Γ_10 = {at10:.4}"))
}

/// All four finite quantities of a diagonal by exhaustive subset search.
fn subset_values(d: &[f64], k: usize, big_k: usize) -> Result<[f64; 4], String> {
    let e = |r: Result<opquant::quantities::SubsetOptimum, _>| r.map(|o| o.value).map_err(|e: opquant::quantities::QuantityError| e.to_string());
    Ok([
        e(subset_gamma(d, k))?,
        e(subset_tau(d, k))?,
        e(subset_delta(d, k, big_k))?,
        e(subset_nabla(d, k, big_k))?,
    ])
}

fn ordering_chain() -> Outcome {
    let mut checked = 0usize;
    let mut violations = Vec::new();
    let mut narrow_violations = 0usize;
    for s in 0..200u64 {
        let mut r = rng(5, s);
        let n = r.random_range(2..=8);
        let d: Vec<f64> = (0..n).map(|_| r.random_range(0.0..3.0)).collect();
        for big_k in 1..=n {
            for k in 1..=big_k {
                let [gamma, tau, delta, nabla] = subset_values(&d, k, big_k)?;
                let failed: Vec<&str> = [
                    (nabla <= tau, "∇ ≤ τ"),
                    (tau <= delta, "τ ≤ Δ"),
                    (nabla <= gamma, "∇ ≤ Γ"),
                    (gamma <= delta, "Γ ≤ Δ"),
                ]
                .into_iter()
                .filter(|(ok, _)| !ok)
                .map(|(_, name)| name)
                .collect();
                checked += 1;
                if !failed.is_empty() {
                    if big_k < 2 * k {
                        narrow_violations += 1;
                    }
                    violations.push(format!(
                        "diagonal {s} (N = {n}), k = {k}, K = {big_k}: {} (Γ {gamma:.3}, τ {tau:.3}, Δ {delta:.3}, ∇ {nabla:.3})",
                        failed.join(", ")
                    ));
                }
            }
        }
    }
    println!("    note: {narrow_violations} violations with K ≤ 2k − 1");
    ensure(
        violations.is_empty(),
        format!("{} of {checked} (k, K) windows violate the chain; first: {}", violations.len(), violations[0]),
    )?;
    Ok(format!("{checked} (k, K) windows"))
}

fn invariance() -> Outcome {
    let ep_shift = Operator::weighted_shift(vec![0.5], vec![1.0, 2.0, 0.5]).map_err(|e| e.to_string())?;
    let alternating = Operator::diagonal(vec![], vec![2.0, 1.0]).map_err(|e| e.to_string())?;
    let witness = default_witness();
    ensure(witness.has_tail(), "witness lies in E".into())?;
    let mut worst = f64::INFINITY;
    let mut cases = 0;
    for (label, op) in [("alternating diagonal", &alternating), ("weighted shift", &ep_shift)] {
        for eps in [0.1, 0.05] {
            for part in Part::ALL {
                let report = run_invariance_case(op, part, &witness, eps, 0.05, 17).map_err(|e| e.to_string())?;
                ensure(
                    report.passed && report.min_slack >= 0.0,
                    format!("{label}, ε = {eps}, part {part:?}: slack {} ({:?})", report.min_slack, report.measured),
                )?;
                worst = worst.min(report.min_slack);
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} cases, smallest slack {worst:.3e}"))
}

fn lemma() -> Outcome {
    let mut worst = 0.0f64;
    for count in 1..=4 {
        let mut r = rng(7, count as u64);
        let ratio = r.random_range(0.3..0.8) * if r.random_bool(0.5) { 1.0 } else { -1.0 };
        let functionals: Vec<LinearFunctional> = (0..count)
            .map(|_| {
                let prefix: Vec<f64> = (0..r.random_range(1..=5)).map(|_| r.sample(StandardNormal)).collect();
                let tail: Vec<f64> = (0..r.random_range(1..=3)).map(|_| r.sample(StandardNormal)).collect();
                LinearFunctional::new(TailVector::new(prefix, tail, ratio).expect("finite"), L2)
            })
            .collect();
        ensure(
            linalg::is_positive_definite(&gram(&functionals.iter().map(|f| f.representer().clone()).collect::<Vec<_>>()), GRAM_RANK_TOL),
            format!("{count} functionals are dependent"),
        )?;
        let report = check_dense_intersection(&functionals, 100, 1e-8, count as u64).map_err(|e| e.to_string())?;
        ensure(report.passed, format!("{count} functionals: {report:?}"))?;
        worst = worst.max(report.max_distance);
    }
    Ok(format!("1–4 functionals × 100 samples, worst distance {worst:.1e}"))
}

fn cli_contract() -> Outcome {
    let parts = [
        cli::passing_fixtures(),
        cli::violation_fixture(),
        cli::config_errors(),
        cli::output_and_seed_overrides(),
        cli::subcommands(),
    ];
    let mut done = Vec::new();
    for p in parts {
        done.push(p?);
    }
    Ok(done.join("; "))
}

fn main() {
    let criteria = [
        Criterion {
            id: 1,
            name: "biorthogonality suite",
            limit: Some(Duration::from_secs(10)),
            run: biorthogonality,
        },
        Criterion {
            id: 2,
            name: "construction suite",
            limit: Some(Duration::from_secs(60)),
            run: construction,
        },
        Criterion {
            id: 3,
            name: "oracle equivalence",
            limit: Some(Duration::from_secs(120)),
            run: oracle_equivalence,
        },
        Criterion {
            id: 4,
            name: "structured limits",
            limit: Some(Duration::from_secs(30)),
            run: structured_limits,
        },
        Criterion {
            id: 5,
            name: "ordering chain",
            limit: None,
            run: ordering_chain,
        },
        Criterion {
            id: 6,
            name: "density-invariance cases",
            limit: Some(Duration::from_secs(60)),
            run: invariance,
        },
        Criterion {
            id: 7,
            name: "lemma check",
            limit: None,
            run: lemma,
        },
        Criterion {
            id: 8,
            name: "CLI contract",
            limit: None,
            run: cli_contract,
        },
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failures = 0;
    for c in criteria.iter().filter(|c| selected.is_empty() || selected.contains(&c.id)) {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let outcome = match (outcome, c.limit) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!("took {elapsed:.1?}, limit {limit:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("criterion {} [PASS] {}: {detail} ({elapsed:.2?})", c.id, c.name),
            Err(detail) => {
                failures += 1;
                println!("criterion {} [FAIL] {}: {detail} ({elapsed:.2?})", c.id, c.name);
            }
        }
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
