use proptest::prelude::*;
use zomax_core::exec::{Execution, Moments, Streams};
use zomax_core::geometry::{DualVector, JointPoint, MetricMatrix};
use zomax_core::oracles::*;
use zomax_core::problems::abs_diff_operator_mu;

type Closed = fn(&JointPoint, f64) -> DualVector;

fn pt(x: f64, y: f64) -> JointPoint {
    JointPoint::from_slices(&[x], &[y])
}

/// Objectives with a closed-form smoothed operator under `B = I`.
fn objectives() -> Vec<(&'static str, fn(&JointPoint) -> f64, Closed)> {
    vec![
        ("linear", |z| 2.0 * z.x[0] - 3.0 * z.y[0], |_, _| DualVector::from_slices(&[2.0], &[3.0])),
        (
            "quadratic",
            |z| z.x[0] * z.x[0] + z.x[0] * z.y[0] - 2.0 * z.y[0] * z.y[0],
            |z, _| DualVector::from_slices(&[2.0 * z.x[0] + z.y[0]], &[-(z.x[0] - 4.0 * z.y[0])]),
        ),
        (
            "cubic",
            |z| z.x[0].powi(3) - z.y[0].powi(3),
            |z, mu| DualVector::from_slices(&[3.0 * z.x[0].powi(2) + 3.0 * mu * mu], &[3.0 * z.y[0].powi(2) + 3.0 * mu * mu]),
        ),
        (
            "trigonometric",
            |z| z.x[0].sin() + z.y[0].cos(),
            |z, mu| {
                let damp = (-mu * mu / 2.0).exp();
                DualVector::from_slices(&[z.x[0].cos() * damp], &[z.y[0].sin() * damp])
            },
        ),
        ("abs_diff", |z| z.x[0].abs() - z.y[0].abs(), |z, mu| abs_diff_operator_mu(z, mu, 1.0)),
    ]
}

fn oracle_moments(f: fn(&JointPoint) -> f64, z: &JointPoint, mu: f64, scheme: SmoothingScheme, count: usize) -> Moments {
    let metric = MetricMatrix::identity(1, 1);
    let cfg = OracleConfig::new(metric.clone(), mu).with_scheme(scheme);
    let streams = Streams::new(2024);
    let chunks = Execution::Parallel.map_chunks(count, 50_000, |start, end| {
        let mut acc = Moments::new(2);
        for i in start..end {
            let mut rng = streams.rng(i as u64);
            let u = metric.sample(&mut rng);
            let g = match scheme {
                SmoothingScheme::Forward => forward_oracle(&f, z, &u, mu, &cfg, &mut rng),
                SmoothingScheme::Backward => backward_oracle(&f, z, &u, mu, &cfg, &mut rng),
                SmoothingScheme::Central => central_oracle(&f, z, &u, mu, &cfg, &mut rng),
            };
            acc.push(g.unwrap().value.to_vec());
        }
        acc
    });
    let mut total = Moments::new(2);
    for c in &chunks {
        total.merge(c);
    }
    total
}

#[test]
fn every_scheme_is_unbiased_for_the_smoothed_operator() {
    let z = pt(0.7, -0.4);
    let mu = 0.3;
    for (name, f, closed) in objectives() {
        let target = closed(&z, mu).to_vec();
        for scheme in [SmoothingScheme::Forward, SmoothingScheme::Backward, SmoothingScheme::Central] {
            let m = oracle_moments(f, &z, mu, scheme, 1_000_000);
            let se = m.std_error();
            for i in 0..2 {
                assert!(
                    (m.mean[i] - target[i]).abs() <= 4.0 * se[i] + 1e-12,
                    "{name} {scheme:?} coord {i}: {} vs {}, se {}",
                    m.mean[i],
                    target[i],
                    se[i]
                );
            }
        }
    }
}

#[test]
fn high_precision_estimator_agrees_with_closed_forms() {
    let z = pt(-0.2, 1.1);
    let metric = MetricMatrix::identity(1, 1);
    for (name, f, closed) in objectives() {
        let est = estimate_operator_mu(&f, &z, 0.2, 1_000_000, &metric, &Streams::new(5), Execution::Parallel).unwrap();
        let target = closed(&z, 0.2);
        for i in 0..2 {
            assert!((est.mean.get(i) - target.get(i)).abs() <= 4.0 * est.std_error.get(i) + 1e-12, "{name}");
        }
    }
}

#[test]
fn y_block_carries_the_negated_difference() {
    let f = |z: &JointPoint| 0.5 * z.x[0] + 4.0 * z.y[0];
    let cfg = OracleConfig::new(MetricMatrix::identity(1, 1), 0.1);
    let mut rng = Streams::new(0).rng(0);
    let u = pt(0.6, 0.8);
    let g = forward_oracle(&f, &pt(0.0, 0.0), &u, 0.1, &cfg, &mut rng).unwrap();
    let q = 0.5 * 0.6 + 4.0 * 0.8;
    assert!((g.value.x[0] - q * 0.6).abs() < 1e-12);
    assert!((g.value.y[0] + q * 0.8).abs() < 1e-12);
}

#[test]
fn zoeg_iteration_costs_four_evaluations() {
    let cfg = OracleConfig::new(MetricMatrix::identity(1, 1), 1e-3);
    assert_eq!(2 * cfg.evals_per_call(1), 4);
    let noisy = cfg.clone().with_noise(NoiseModel::AdditiveGaussian { variance: 0.1 });
    assert_eq!(2 * noisy.evals_per_call(1), 4);
    assert_eq!(cfg.with_scheme(SmoothingScheme::Central).evals_per_call(1), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn identical_seed_gives_identical_stream(seed in any::<u64>(), k in 0usize..1000, t in 1usize..40) {
        let f = |z: &JointPoint| (z.x[0] * z.y[1]).sin() + z.y[0].powi(2) - z.x[1].abs();
        let z = JointPoint::from_slices(&[0.3, -1.0], &[0.2, 0.9]);
        let base = OracleConfig::new(MetricMatrix::diagonal(&[1.0, 2.0], &[0.5, 4.0]).unwrap(), 0.01)
            .with_samples(SampleSchedule::Constant(t))
            .with_noise(NoiseModel::AdditiveGaussian { variance: 1e-2 });
        let s = Streams::new(seed).fork(k as u64);
        let a = averaged_oracle(&f, &z, &base.clone().with_execution(Execution::Sequential), k, &s).unwrap();
        let b = averaged_oracle(&f, &z, &base.clone().with_execution(Execution::Parallel), k, &s).unwrap();
        let c = averaged_oracle(&f, &z, &base.with_execution(Execution::Sequential), k, &s).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(&a, &c);
        prop_assert_eq!(a.function_evals, 2 * t as u64);
    }
}
