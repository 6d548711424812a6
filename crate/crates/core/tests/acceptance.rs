//! Acceptance suite: one line per criterion, non-zero exit on any failure.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use bearloc::fixtures::{self, RandomNetwork};
use bearloc::geometry::angle_between;
use bearloc::linalg::{self, RankTolerance};
use bearloc::localizability::{check_augmented_ibr, classify_with, LocalizabilityError};
use bearloc::rigidity::quadratic_cost;
use bearloc::sensitivity::{error_bound, perturbed_solve, projector_distance, stability_check, ErrorBound};
use bearloc::solver::{anchor_error_propagation, default_initial_estimate};
use bearloc::{
    bearing_laplacian, rigidity_matrix, simulate_flow, solve_direct, validate, ErrorSpec, FlowConfig, Network,
    NetworkSpec, PerturbationScenario, StackedPosition, Tolerances, Verdict,
};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_spec(rng: &mut ChaCha8Rng, dims: &[usize], nodes: (usize, usize), anchors: Option<usize>) -> NetworkSpec {
    let dimension = dims[rng.random_range(0..dims.len())];
    let n_nodes = rng.random_range(nodes.0..=nodes.1);
    let n_anchors = anchors.unwrap_or_else(|| rng.random_range(1..n_nodes));
    let edge_probability = rng.random_range(0.1..0.7);
    fixtures::random_network(
        rng,
        RandomNetwork {
            dimension,
            n_nodes,
            n_anchors,
            edge_probability,
            scale: 10.0,
        },
    )
}

fn random_networks(seed: u64, count: usize, anchors: Option<usize>) -> Vec<Network> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| validate(&random_spec(&mut rng, &[2, 3, 4], (4, 20), anchors)).unwrap())
        .collect()
}

/// Random localizable networks for the solver and sensitivity criteria.
fn localizable_networks(seed: u64, count: usize) -> Vec<Network> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let n = rng.random_range(4..=12);
        let na = rng.random_range(2..=3.min(n - 1));
        let net = validate(&random_spec(&mut rng, &[2, 3], (n, n), Some(na))).unwrap();
        let b = bearing_laplacian(&net).unwrap();
        if let Ok(r) = classify_with(&net, &b, Tolerances::default()) {
            if r.verdict == Verdict::Localizable {
                out.push(net);
            }
        }
    }
    out
}

fn fixture_networks(localizable_only: bool) -> Vec<(String, Network)> {
    let mut v: Vec<_> = fixtures::localizable();
    if !localizable_only {
        v.extend(fixtures::non_localizable());
    }
    v.into_iter()
        .map(|f| (f.name.to_string(), validate(&f.spec).unwrap()))
        .collect()
}

fn c1_condition_equivalence() -> Outcome {
    let start = Instant::now();
    let nets = random_networks(1, 500, None);
    let (mut agree, mut near, mut loc, mut disagree) = (0, 0, 0, 0);
    for net in &nets {
        let b = bearing_laplacian(net).unwrap();
        match classify_with(net, &b, Tolerances::default()) {
            Ok(r) if r.verdict == Verdict::NearSingular => near += 1,
            Ok(r) => {
                if r.algebraic_localizable == r.rigidity_localizable {
                    agree += 1;
                } else {
                    disagree += 1;
                }
                loc += usize::from(r.verdict == Verdict::Localizable);
            }
            Err(LocalizabilityError::InternalInconsistency { .. }) => disagree += 1,
            Err(e) => panic!("{e}"),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        disagree == 0 && secs < 30.0,
        format!(
            "{} networks, {agree} agree ({loc} localizable), {near} near-singular, {disagree} disagree, {secs:.1}s",
            nets.len()
        ),
    )
}

fn c2_two_anchor_equivalence() -> Outcome {
    let nets = random_networks(2, 200, Some(2));
    let (mut matches, mut near, mut loc) = (0, 0, 0);
    let mut mismatches = 0;
    for net in &nets {
        let b = bearing_laplacian(net).unwrap();
        let r = classify_with(net, &b, Tolerances::default());
        let aug = check_augmented_ibr(net, RankTolerance::Auto).unwrap();
        match r {
            Ok(r) if r.verdict == Verdict::NearSingular => near += 1,
            Ok(r) if (r.verdict == Verdict::Localizable) == aug.ibr_augmented => {
                matches += 1;
                loc += usize::from(aug.ibr_augmented);
            }
            _ => mismatches += 1,
        }
    }
    outcome(
        mismatches == 0,
        format!(
            "{} networks, {matches} match ({loc} localizable), {near} near-singular, {mismatches} mismatch",
            nets.len()
        ),
    )
}

fn c3_anchor_necessity() -> Outcome {
    let singles = random_networks(3, 200, Some(1));
    let mut not_loc = 0;
    for net in &singles {
        let b = bearing_laplacian(net).unwrap();
        let r = classify_with(net, &b, Tolerances::default()).unwrap();
        not_loc += usize::from(r.verdict == Verdict::NotLocalizable);
    }
    let mut checked = 0;
    let mut violations = 0;
    for net in random_networks(1, 500, None) {
        let b = bearing_laplacian(&net).unwrap();
        let Ok(r) = classify_with(&net, &b, Tolerances::default()) else {
            continue;
        };
        if r.verdict == Verdict::Localizable {
            checked += 1;
            let nullity = net.n_nodes() * net.dimension() - common::rank(b.matrix(), 1e-9);
            if (r.n_anchors as f64) < nullity as f64 / net.dimension() as f64 {
                violations += 1;
            }
        }
    }
    outcome(
        not_loc == singles.len() && violations == 0,
        format!(
            "{not_loc}/{} single-anchor not localizable; {checked} localizable checked, {violations} below bound",
            singles.len()
        ),
    )
}

fn c4_null_space_facts() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut nets = random_networks(1, 500, None);
    nets.extend(fixture_networks(false).into_iter().map(|(_, n)| n));
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for (k, net) in nets.iter().enumerate() {
        let (d, n) = (net.dimension(), net.n_nodes());
        let b = bearing_laplacian(net).unwrap();
        let norm_b = linalg::spectral_norm(b.matrix());
        for _ in 0..10 {
            let v = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
            let ones = DVector::from_fn(d * n, |i, _| v[i % d]);
            let r = (b.matrix() * &ones).norm() / (norm_b * ones.norm());
            worst = worst.max(r);
            if r > 1e-10 {
                failures.push(format!("#{k} translation"));
            }
        }
        let p = net.stacked_positions().into_vector();
        let r = (b.matrix() * &p).norm() / (norm_b * p.norm());
        worst = worst.max(r);
        if r > 1e-10 {
            failures.push(format!("#{k} scaling"));
        }
        let rank_b = linalg::numeric_rank(b.matrix(), RankTolerance::Auto).0;
        let rank_r = linalg::numeric_rank(&rigidity_matrix(net).unwrap().matrix, RankTolerance::Auto).0;
        if rank_b > d * n - d - 1 {
            failures.push(format!("#{k} rank {rank_b} above dn-d-1"));
        }
        if rank_b != rank_r {
            failures.push(format!("#{k} rank(B) {rank_b} != rank(R_B) {rank_r}"));
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{} networks, worst relative null residual {worst:.1e}, {} failures {:?}",
            nets.len(),
            failures.len(),
            failures.iter().take(5).collect::<Vec<_>>()
        ),
    )
}

fn c5_direct_solve() -> Outcome {
    let mut nets = fixture_networks(true);
    nets.extend(
        localizable_networks(5, 200)
            .into_iter()
            .enumerate()
            .map(|(k, n)| (format!("random#{k}"), n)),
    );
    let mut worst: f64 = 0.0;
    let mut failed = Vec::new();
    for (name, net) in &nets {
        let b = bearing_laplacian(net).unwrap();
        let p = net.stacked_positions();
        match solve_direct(&b, &p.anchors()) {
            Ok(sol) => {
                let rel = (&sol.followers - p.followers()).norm() / p.followers().norm().max(f64::MIN_POSITIVE);
                worst = worst.max(rel);
                if rel > 1e-8 {
                    failed.push(name.clone());
                }
            }
            Err(_) => failed.push(name.clone()),
        }
    }
    outcome(
        failed.is_empty(),
        format!(
            "{} networks, worst relative error {worst:.1e}, failed {failed:?}",
            nets.len()
        ),
    )
}

fn c6_protocol_convergence() -> Outcome {
    let cfg = FlowConfig {
        convergence_tol: 1e-12,
        ..Default::default()
    };
    let mut worst_final: f64 = 0.0;
    let mut increases = 0;
    let mut unconverged = 0;
    let fixtures = fixture_networks(true);
    for (_, net) in &fixtures {
        let b = bearing_laplacian(net).unwrap();
        let p = net.stacked_positions();
        let (pa, pf) = (p.anchors(), p.followers());
        for seed in 0..100 {
            let x0 = default_initial_estimate(net.dimension(), &pa, net.n_followers(), seed);
            let traj = simulate_flow(&b, &pa, &x0, &cfg, Some(&pf)).unwrap();
            unconverged += usize::from(!traj.converged());
            worst_final = worst_final.max(traj.final_record().error_norm.unwrap());
            increases += traj
                .records
                .windows(2)
                .filter(|w| w[1].error_norm.unwrap() > w[0].error_norm.unwrap())
                .count();
        }
    }

    let square = validate(&fixtures::square()).unwrap();
    let bs = bearing_laplacian(&square).unwrap();
    let pa = square.stacked_positions().anchors();
    let limit = |seed| {
        let x0 = default_initial_estimate(2, &pa, 2, seed);
        simulate_flow(&bs, &pa, &x0, &cfg, None)
            .unwrap()
            .final_estimate()
            .clone()
    };
    let spread = (limit(1) - limit(2)).norm();

    let cube = validate(&fixtures::unit_cube()).unwrap();
    let bc = bearing_laplacian(&cube).unwrap();
    let pc = cube.stacked_positions();
    let x0 = default_initial_estimate(3, &pc.anchors(), cube.n_followers(), 0);
    let cube_err = simulate_flow(&bc, &pc.anchors(), &x0, &cfg, Some(&pc.followers()))
        .unwrap()
        .final_record()
        .error_norm
        .unwrap();
    let conservative = (0..50).find_map(|seed| {
        let s = PerturbationScenario::new(&bc, &ErrorSpec::Uniform { angle: 0.05, seed }).unwrap();
        let st = stability_check(&s, &bc);
        (!st.sufficient_condition_met && st.actually_stable).then_some((s.epsilon(), st.lambda_min))
    });

    let pass = worst_final <= 1e-6
        && increases == 0
        && unconverged == 0
        && spread > 1e-3
        && cube_err <= 1e-6
        && conservative.is_some();
    outcome(
        pass,
        format!(
            "{} fixtures x 100 inits: worst final error {worst_final:.1e}, {increases} increases, {unconverged} unconverged; \
             square limits differ by {spread:.3}; cube error {cube_err:.1e}; stable with eps > lambda_min: {}",
            fixtures.len(),
            conservative.map_or("none found".to_string(), |(e, l)| format!("eps {e:.3} vs lambda_min {l:.3}"))
        ),
    )
}

fn c7_projector_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for d in [2, 3, 5, 10] {
        for _ in 0..10_000 {
            let x = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
            let y = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
            let theta = angle_between(&(&x / x.norm()), &(&y / y.norm())).unwrap();
            worst = worst.max((projector_distance(&x, &y).unwrap() - theta.sin()).abs());
        }
    }
    outcome(worst <= 1e-12, format!("40000 pairs, max deviation {worst:.1e}"))
}

struct ScenarioStats {
    count: usize,
    norm_violations: usize,
    sufficient: usize,
    unstable_sufficient: usize,
    applicable: usize,
    bound_violations: usize,
    worst_ratio: f64,
}

fn scenario_stats() -> ScenarioStats {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut s = ScenarioStats {
        count: 0,
        norm_violations: 0,
        sufficient: 0,
        unstable_sufficient: 0,
        applicable: 0,
        bound_violations: 0,
        worst_ratio: 0.0,
    };
    for (k, net) in localizable_networks(8, 500).into_iter().enumerate() {
        let b = bearing_laplacian(&net).unwrap();
        let p = net.stacked_positions();
        let max_angle = 10f64.powf(rng.random_range(-4.0..-0.5));
        let sc = PerturbationScenario::new(
            &b,
            &ErrorSpec::Random {
                max_angle,
                seed: k as u64,
            },
        )
        .unwrap();
        s.count += 1;
        let norms = sc.delta_norms();
        s.norm_violations += usize::from(!(norms.ff_within_bound && norms.fa_within_bound));
        let st = stability_check(&sc, &b);
        if st.sufficient_condition_met {
            s.sufficient += 1;
            s.unstable_sufficient += usize::from(!st.actually_stable);
        }
        if let ErrorBound::Value(bound) = error_bound(&sc, &b, &p.anchors(), &p.followers()) {
            s.applicable += 1;
            let x = perturbed_solve(&sc, &p.anchors()).unwrap();
            let err = (x - p.followers()).norm();
            if bound > 0.0 {
                s.worst_ratio = s.worst_ratio.max(err / bound);
            }
            s.bound_violations += usize::from(err > bound);
        }
    }
    s
}

fn c8_perturbation_norms(s: &ScenarioStats) -> Outcome {
    outcome(
        s.count >= 500 && s.norm_violations == 0,
        format!("{} scenarios, {} violations", s.count, s.norm_violations),
    )
}

fn c9_stability_sufficiency(s: &ScenarioStats) -> Outcome {
    outcome(
        s.sufficient > 0 && s.unstable_sufficient == 0,
        format!(
            "{} scenarios with eps < lambda_min, {} not positive stable",
            s.sufficient, s.unstable_sufficient
        ),
    )
}

fn c10_error_bound(s: &ScenarioStats) -> Outcome {
    // The shrinkage check targets the small-error regime: a sweep counts
    // when the bound already applies at the coarsest scale, which implies
    // it at the finer ones (eps grows with the scale for a fixed seed).
    let (mut runs, mut skipped, mut non_monotone, mut skipped_non_monotone) = (0, 0, 0, 0);
    for (k, net) in localizable_networks(10, 2000).into_iter().enumerate() {
        let b = bearing_laplacian(&net).unwrap();
        let p = net.stacked_positions();
        let mut errors = Vec::new();
        let mut applicable = true;
        for max_angle in [1e-1, 1e-2, 1e-3] {
            let sc = PerturbationScenario::new(
                &b,
                &ErrorSpec::Random {
                    max_angle,
                    seed: k as u64,
                },
            )
            .unwrap();
            applicable &= error_bound(&sc, &b, &p.anchors(), &p.followers()) != ErrorBound::Inapplicable;
            let x = perturbed_solve(&sc, &p.anchors()).unwrap();
            errors.push((x - p.followers()).norm());
        }
        let shrinks = errors[0] > errors[1] && errors[1] > errors[2];
        if applicable {
            runs += 1;
            non_monotone += usize::from(!shrinks);
        } else {
            skipped += 1;
            skipped_non_monotone += usize::from(!shrinks);
        }
    }
    outcome(
        s.applicable > 0 && s.bound_violations == 0 && runs >= 20 && non_monotone == 0,
        format!(
            "{} applicable scenarios, {} violations, worst error/bound {:.3}; \
             {runs} angle sweeps with the bound applicable ({skipped} outside it skipped, {skipped_non_monotone} of those non-monotone), {non_monotone} non-monotone",
            s.applicable, s.bound_violations, s.worst_ratio
        ),
    )
}

fn c11_anchor_error_propagation() -> Outcome {
    let mut nets = fixture_networks(true);
    nets.extend(
        localizable_networks(11, 100)
            .into_iter()
            .enumerate()
            .map(|(k, n)| (format!("random#{k}"), n)),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for (_, net) in &nets {
        let d = net.dimension();
        let b = bearing_laplacian(net).unwrap();
        let p = net.stacked_positions();
        let t = DVector::from_fn(d, |_, _| rng.random_range(-5.0..5.0));
        let dpa = DVector::from_fn(d * net.n_anchors(), |i, _| t[i % d]);
        let expected = DVector::from_fn(d * net.n_followers(), |i, _| t[i % d]);
        let got = anchor_error_propagation(&b, &dpa).unwrap();
        worst = worst.max((got - &expected).norm() / expected.norm());
        let s = rng.random_range(-2.0..2.0);
        let got = anchor_error_propagation(&b, &(p.anchors() * s)).unwrap();
        let expected = p.followers() * s;
        worst = worst.max((got - &expected).norm() / expected.norm());
    }
    outcome(
        worst <= 1e-10,
        format!("{} networks, worst relative deviation {worst:.1e}", nets.len()),
    )
}

fn c12_quadratic_form() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let nets = fixture_networks(false);
    let mut worst: f64 = 0.0;
    for (_, net) in &nets {
        let b = bearing_laplacian(net).unwrap();
        let n = net.n_nodes() * net.dimension();
        for _ in 0..100 {
            let x = DVector::from_fn(n, |_, _| rng.random_range(-10.0..10.0));
            let j = quadratic_cost(net, &StackedPosition::new(net.dimension(), net.n_anchors(), x.clone()));
            worst = worst.max((j - b.quadratic_form(&x)).abs() / j.abs());
        }
    }
    outcome(
        worst <= 1e-10,
        format!(
            "{} fixtures x 100 estimates, worst relative gap {worst:.1e}",
            nets.len()
        ),
    )
}

fn main() -> ExitCode {
    let stats = scenario_stats();
    let results: Vec<(&str, Outcome)> = vec![
        ("1 condition equivalence", c1_condition_equivalence()),
        ("2 two-anchor equivalence", c2_two_anchor_equivalence()),
        ("3 anchor necessity", c3_anchor_necessity()),
        ("4 null-space facts", c4_null_space_facts()),
        ("5 direct-solve exactness", c5_direct_solve()),
        ("6 protocol convergence", c6_protocol_convergence()),
        ("7 projector-distance identity", c7_projector_identity()),
        ("8 perturbation-norm bounds", c8_perturbation_norms(&stats)),
        ("9 stability sufficiency", c9_stability_sufficiency(&stats)),
        ("10 error-bound soundness", c10_error_bound(&stats)),
        ("11 anchor-error propagation", c11_anchor_error_propagation()),
        ("12 quadratic-form identity", c12_quadratic_form()),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!(
            "{} criterion {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
