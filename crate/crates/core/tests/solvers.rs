use proptest::prelude::*;
use zomax_core::exec::Streams;
use zomax_core::geometry::{JointPoint, MetricMatrix};
use zomax_core::oracles::*;
use zomax_core::problems::*;
use zomax_core::solvers::*;

fn pt(x: f64, y: f64) -> JointPoint {
    JointPoint::from_slices(&[x], &[y])
}

fn f1_cfg(variant: Variant, n: usize, seed: u64) -> SolverConfig {
    SolverConfig::new(variant, 2e-3, 1e-3, n, OracleConfig::new(MetricMatrix::identity(1, 1), 1e-6)).with_seed(seed)
}

/// Traces without the wall-clock column, which is the only nondeterministic field.
fn strip(mut t: RunTrace) -> RunTrace {
    for r in &mut t.records {
        r.wall_time_s = 0.0;
    }
    t
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn reduction_chain_is_bitwise(seed in any::<u64>(), x in -8.0..8.0f64, y in -8.0..8.0f64) {
        let p = toy_f1();
        let z0 = pt(x, y);
        let zo = strip(run_zoeg(&p, &z0, &f1_cfg(Variant::Zoeg, 100, seed)).unwrap());
        let vr = strip(run_vr_zoeg(&p, &z0, &f1_cfg(Variant::VrZoeg, 100, seed)).unwrap());
        let mvr = strip(run_modified_vr_zoeg(&p, &z0, &f1_cfg(Variant::ModifiedVrZoeg, 100, seed)).unwrap());
        prop_assert_eq!(&zo, &vr);
        prop_assert_eq!(&vr, &mvr);
    }

    #[test]
    fn iterates_stay_feasible(seed in any::<u64>(), x in -9.0..9.0f64, y in -9.0..9.0f64) {
        let p = toy_f2();
        let cfg = SolverConfig::new(Variant::Zoeg, 1e-3, 1e-3, 200, OracleConfig::new(MetricMatrix::identity(1, 1), 1e-6))
            .with_seed(seed)
            .with_project_start(true);
        let t = run_zoeg(&p, &pt(x, y), &cfg).unwrap();
        for r in &t.records {
            prop_assert!(p.contains(&r.z, FEASIBILITY_TOL));
            if let Some(zh) = &r.z_hat {
                prop_assert!(p.contains(zh, FEASIBILITY_TOL));
            }
        }
    }

    #[test]
    fn accounting_matches_the_scheme_formula(
        scheme in prop_oneof![Just(SmoothingScheme::Forward), Just(SmoothingScheme::Backward), Just(SmoothingScheme::Central)],
        noisy in any::<bool>(),
        t in 1usize..6,
        n in 0usize..30,
        every in 1usize..7,
    ) {
        let mut oracle = OracleConfig::new(MetricMatrix::identity(1, 1), 1e-3)
            .with_scheme(scheme)
            .with_samples(SampleSchedule::Constant(t));
        if noisy {
            oracle = oracle.with_noise(NoiseModel::AdditiveGaussian { variance: 1e-4 });
        }
        let per_iter = 2 * oracle.evals_per_call(t);
        let cfg = SolverConfig::new(Variant::VrZoeg, 2e-3, 1e-3, n, oracle).with_record_every(every);
        let tr = run_vr_zoeg(&toy_f1(), &pt(1.0, 2.0), &cfg).unwrap();
        prop_assert_eq!(tr.total_evals, per_iter * n as u64);
        prop_assert_eq!(tr.records.len(), n / every + 1);
        prop_assert!(tr.records.windows(2).all(|w| w[0].cum_evals <= w[1].cum_evals));
        for r in &tr.records {
            prop_assert_eq!(r.cum_evals, per_iter * r.k as u64);
        }
    }
}

#[test]
fn analytic_directions_reproduce_first_order_eg() {
    let p = toy_f1();
    let cfg = f1_cfg(Variant::FirstOrderEg, 300, 0);
    let eg = strip(run_first_order_eg(&p, &pt(5.0, -7.0), &cfg).unwrap());
    let skeleton = strip(run_extragradient(&p, &pt(5.0, -7.0), &cfg, &Analytic { problem: &p }, false).unwrap());
    assert_eq!(eg, skeleton);
    assert_eq!(eg.total_evals, 600);
}

#[test]
fn linear_sample_schedule() {
    let oracle = OracleConfig::new(MetricMatrix::identity(1, 1), 1e-4).with_samples(SampleSchedule::Linear);
    let cfg = SolverConfig::new(Variant::VrZoeg, 2e-3, 1e-3, 10, oracle);
    let t = run_vr_zoeg(&toy_f1(), &pt(1.0, 1.0), &cfg).unwrap();
    // Call k averages k + 1 cached directions: 2 (k + 2) evaluations per iteration.
    let expected: u64 = (0..10u64).map(|k| 2 * (k + 2)).sum();
    assert_eq!(t.total_evals, expected);
}

#[test]
fn preconditioned_step_is_a_quarter_under_4i() {
    let p = toy_f1();
    let oracle = OracleConfig::new(MetricMatrix::scaled_identity(1, 1, 4.0).unwrap(), 1e-6);
    let z0 = pt(2.0, -1.0);
    let cfg = SolverConfig::new(Variant::VrZoeg, 2e-3, 1e-3, 1, oracle).with_seed(8);
    let plain = run_vr_zoeg(&p, &z0, &cfg).unwrap();
    let pre = run_modified_vr_zoeg(&p, &z0, &cfg.with_variant(Variant::ModifiedVrZoeg)).unwrap();
    let d_plain = plain.records[0].z_hat.as_ref().unwrap() - &z0;
    let d_pre = pre.records[0].z_hat.as_ref().unwrap() - &z0;
    assert!((&d_plain.scale(0.25) - &d_pre).norm() <= 1e-12 * d_plain.norm());
}

#[test]
fn modified_vr_matches_vr_on_abs_diff() {
    let p = abs_diff_problem();
    let oracle = OracleConfig::new(MetricMatrix::identity(1, 1), 1e-3).with_samples(SampleSchedule::Constant(4));
    let cfg = SolverConfig::new(Variant::VrZoeg, 1e-2, 5e-3, 500, oracle).with_seed(4);
    let a = strip(run_vr_zoeg(&p, &pt(1.5, -0.5), &cfg).unwrap());
    let b = strip(run_modified_vr_zoeg(&p, &pt(1.5, -0.5), &cfg.with_variant(Variant::ModifiedVrZoeg)).unwrap());
    assert_eq!(a, b);
    assert!(a.final_point.norm() < 0.1);
}

#[test]
fn step_window_warnings() {
    let p = bilinear_problem(1, false);
    let oracle = OracleConfig::new(MetricMatrix::identity(1, 1), 1e-6);
    let ok = SolverConfig::new(Variant::Zoeg, 0.5, 0.25, 1, oracle.clone());
    assert!(run_zoeg(&p, &pt(1.0, 1.0), &ok).unwrap().warnings.is_empty());
    let bad = SolverConfig::new(Variant::Zoeg, 2.0, 1.5, 1, oracle.clone());
    assert_eq!(run_zoeg(&p, &pt(1.0, 1.0), &bad).unwrap().warnings.len(), 2);
    let q = bilinear_problem(1, true);
    let unequal = SolverConfig::new(Variant::Zoeg, 0.4, 0.2, 1, oracle);
    let w = run_zoeg(&q, &pt(1.0, 1.0), &unequal).unwrap().warnings;
    assert!(w.iter().any(|s| s.contains("h1 = h2")));
}

#[test]
fn vr_variance_ratio_on_rls_desk_instance() {
    let p = RlsInstance::random(30, 50, 5.0, 1).problem().unwrap();
    let z = p.project(&JointPoint::from_flat(&vec![0.3; 80], 50), &MetricMatrix::identity(50, 30)).unwrap();
    let base = OracleConfig::new(MetricMatrix::identity(50, 30), 1e-5);
    let one = estimate_oracle_variance(&p, &z, &base, 1000, 0, &Streams::new(1)).unwrap();
    let many = estimate_oracle_variance(&p, &z, &base.with_samples(SampleSchedule::Constant(100)), 1000, 0, &Streams::new(2)).unwrap();
    let ratio = one.variance / many.variance;
    assert!((50.0..=200.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn custom_step_schedule() {
    let p = toy_f1();
    let mut cfg = f1_cfg(Variant::FirstOrderEg, 20, 0);
    cfg.h1 = StepSchedule::Custom(std::sync::Arc::new(|k| 2e-3 / (k as f64 + 1.0)));
    cfg.h2 = StepSchedule::Custom(std::sync::Arc::new(|k| 1e-3 / (k as f64 + 1.0)));
    let t = run_first_order_eg(&p, &pt(1.0, 1.0), &cfg).unwrap();
    assert!(t.warnings.is_empty());
    assert_eq!(t.iterations, 20);
}
