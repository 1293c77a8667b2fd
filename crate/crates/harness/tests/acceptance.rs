//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line to
//! stderr (uncaptured) and to `$CARGO_TARGET_TMPDIR/acceptance/report.txt`.
//!
//! Run with `cargo test -p zomax --test acceptance -- --nocapture`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;
use zomax::output::write_trace;
use zomax::{compare_study, mvi_study};
use zomax_core::diagnostics::*;
use zomax_core::exec::{Execution, Streams};
use zomax_core::geometry::{JointPoint, MetricMatrix};
use zomax_core::oracles::*;
use zomax_core::problems::*;
use zomax_core::solvers::*;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Verdict {
    Pass,
    Fail,
    /// Fails as the counterexample predicts; `true` when the observation
    /// matches the prediction.
    KnownFail(bool),
    /// Reported only.
    Soft(bool),
}

struct Outcome {
    id: &'static str,
    verdict: Verdict,
    detail: String,
}

impl Outcome {
    fn check(id: &'static str, ok: bool, detail: String) -> Self {
        let verdict = if ok { Verdict::Pass } else { Verdict::Fail };
        Self { id, verdict, detail }
    }

    fn line(&self) -> String {
        let tag = match self.verdict {
            Verdict::Pass | Verdict::Soft(true) => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::KnownFail(_) => "FAIL (known counterexample)",
            Verdict::Soft(false) => "FAIL (soft, not asserted)",
        };
        format!("{tag} criterion {}: {}", self.id, self.detail)
    }

    fn blocks_suite(&self) -> bool {
        matches!(self.verdict, Verdict::Fail | Verdict::KnownFail(false))
    }
}

fn pt(x: f64, y: f64) -> JointPoint {
    JointPoint::from_slices(&[x], &[y])
}

fn out_dir() -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(f64::MIN_POSITIVE)
}

// 1. Forward-oracle mean on |x| - |y| against the closed-form F_mu.
fn abs_diff_smoothing() -> Outcome {
    let p = abs_diff_problem();
    let metric = MetricMatrix::identity(1, 1);
    let mut rng = Streams::new(11).rng(0);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for i in 0..20u64 {
        let z = pt(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
        for (j, mu) in [0.05, 0.2].into_iter().enumerate() {
            let est = estimate_operator_mu(
                &p,
                &z,
                mu,
                1_000_000,
                &metric,
                &Streams::new(100 + 2 * i + j as u64),
                Execution::Parallel,
            )
            .unwrap();
            let exact = abs_diff_operator_mu(&z, mu, 1.0);
            for c in 0..2 {
                let score = (est.mean.get(c) - exact.get(c)).abs() / est.std_error.get(c);
                worst = worst.max(score);
                checked += 1;
            }
        }
    }
    Outcome::check(
        "1",
        worst <= 4.0,
        format!("{checked} coordinates (20 points, mu in {{0.05, 0.2}}, M = 1e6), worst deviation {worst:.2} SE (limit 4)"),
    )
}

/// `0.5 z'Qz + b'z` with `Q = H diag(e) H`, `H` a Householder reflection, so
/// the eigenvalues (and `L1 = max e`) are known exactly.
struct Quadratic {
    q: Vec<Vec<f64>>,
    b: Vec<f64>,
    l1: f64,
}

impl Quadratic {
    fn random(d: usize, seed: u64) -> Self {
        let mut rng = Streams::new(seed).rng(0);
        let e: Vec<f64> = (0..d).map(|_| rng.random_range(0.2..3.0)).collect();
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let vv: f64 = v.iter().map(|a| a * a).sum();
        let h = |i: usize, j: usize| f64::from(u8::from(i == j)) - 2.0 * v[i] * v[j] / vv;
        let q = (0..d)
            .map(|i| (0..d).map(|j| (0..d).map(|k| h(i, k) * e[k] * h(k, j)).sum()).collect())
            .collect();
        let b = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let l1 = e.iter().copied().fold(0.0, f64::max);
        Self { q, b, l1 }
    }

    fn grad(&self, z: &[f64]) -> Vec<f64> {
        self.q
            .iter()
            .zip(&self.b)
            .map(|(row, bi)| row.iter().zip(z).map(|(a, x)| a * x).sum::<f64>() + bi)
            .collect()
    }

    fn value(&self, z: &[f64]) -> f64 {
        let g = self.grad(z);
        // 0.5 z'Qz + b'z = 0.5 z'(Qz + b) + 0.5 b'z
        0.5 * z.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>()
            + 0.5 * z.iter().zip(&self.b).map(|(a, b)| a * b).sum::<f64>()
    }
}

// 2. Smoothing error bounds on a convex quadratic with d = 6.
fn smoothing_bounds() -> Outcome {
    let (n, m) = (3, 3);
    let d = n + m;
    let quad = Arc::new(Quadratic::random(d, 5));
    let qf = quad.clone();
    let f = move |z: &JointPoint| qf.value(&z.to_vec());
    let metric = MetricMatrix::identity(n, m);
    let mut rng = Streams::new(12).rng(0);
    let mut worst_f: f64 = 0.0;
    let mut worst_g: f64 = 0.0;
    for i in 0..20u64 {
        let flat: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let z = JointPoint::from_flat(&flat, n);
        let g = quad.grad(&flat);
        let op = JointPoint::from_slices(&g[..n], &g[n..].iter().map(|v| -v).collect::<Vec<_>>());
        for (j, mu) in [0.01, 0.1].into_iter().enumerate() {
            let s = Streams::new(1000 + 2 * i + j as u64);
            let fe = estimate_f_mu(&f, &z, mu, 100_000, &metric, &s.fork(0), Execution::Parallel).unwrap();
            let ge = estimate_operator_mu(&f, &z, mu, 100_000, &metric, &s.fork(1), Execution::Parallel).unwrap();
            let f_bound = mu * mu / 2.0 * quad.l1 * d as f64 + 3.0 * fe.std_error;
            let g_bound = mu / 2.0 * quad.l1 * (d as f64 + 3.0).powf(1.5) + 3.0 * ge.error_norm();
            worst_f = worst_f.max((fe.mean - quad.value(&flat)).abs() / f_bound);
            worst_g = worst_g.max((&ge.mean - &op).norm() / g_bound);
        }
    }
    Outcome::check(
        "2",
        worst_f <= 1.0 && worst_g <= 1.0,
        format!(
            "40 probes, worst |f_mu - f| at {:.3} of its bound, worst |F_mu - F| at {:.3} of its bound",
            worst_f, worst_g
        ),
    )
}

// 3. Averaging 100 directions cuts oracle variance by about 100.
fn variance_reduction() -> Outcome {
    let p = RlsInstance::random(30, 50, 5.0, 1).problem().unwrap();
    let metric = MetricMatrix::identity(50, 30);
    let z = p.project(&JointPoint::from_flat(&[0.3; 80], 50), &metric).unwrap();
    let base = OracleConfig::new(metric, 1e-5);
    let one = estimate_oracle_variance(&p, &z, &base, 1000, 0, &Streams::new(1)).unwrap();
    let many = base.with_samples(SampleSchedule::Constant(100));
    let many = estimate_oracle_variance(&p, &z, &many, 1000, 0, &Streams::new(2)).unwrap();
    let ratio = many.variance / one.variance;
    Outcome::check(
        "3",
        (0.005..=0.02).contains(&ratio),
        format!(
            "variance t=1 {:.4e}, t=100 {:.4e}, ratio {ratio:.5} (want [0.005, 0.02])",
            one.variance, many.variance
        ),
    )
}

// 4. ZO-EG drives each toy diagnostic below 10% of its start value.
fn toys() -> Outcome {
    const BUDGET: usize = 20_000;
    let id = MetricMatrix::identity(1, 1);
    let oracle = OracleConfig::new(id, 1e-6);
    let cases: Vec<(&str, MinMaxProblem, f64, Vec<JointPoint>, DiagnosticMode, bool)> = vec![
        ("f1", toy_f1(), 2e-3, vec![pt(5.0, -7.0), pt(-7.0, 5.0)], DiagnosticMode::OperatorNorm, false),
        ("f2", toy_f2(), 1e-3, vec![pt(5.0, -7.0), pt(-7.0, 5.0)], DiagnosticMode::MappingNorm, true),
        (
            "f3",
            toy_f3(),
            2e-3,
            vec![pt(7.0, -1.0), pt(1.0, 7.0)],
            DiagnosticMode::DistanceTo(pt(1.0, -1.0)),
            false,
        ),
    ];
    let mut ok = true;
    let mut detail = String::new();
    for (name, p, h1, starts, mode, project) in cases {
        let mut worst: f64 = 0.0;
        for z0 in &starts {
            for seed in 0..3 {
                let cfg = SolverConfig::new(Variant::Zoeg, h1, 1e-3, BUDGET, oracle.clone())
                    .with_seed(seed)
                    .with_record_every(100)
                    .with_diagnostic(mode.clone())
                    .with_project_start(project);
                let t = run_zoeg(&p, z0, &cfg).unwrap();
                let r = t.last().unwrap().diag_norm / t.records[0].diag_norm;
                worst = worst.max(r);
            }
        }
        ok &= worst < 0.1;
        let _ = write!(detail, "{name} worst final/initial {worst:.4}; ");
    }
    detail.push_str(&format!("6 runs each, {BUDGET} iterations"));
    Outcome::check("4", ok, detail)
}

// 5. Full-scale RLS reaches 0.005^2 f(z0) within the budgets.
fn rls() -> Outcome {
    const ZO_EVAL_BUDGET: u64 = 80_000;
    const GDA_ITERATIONS: usize = 20_000;
    let inst = RlsInstance::random(150, 250, 5.0, 0);
    let p = inst.problem().unwrap();
    let (n, m) = p.dims();
    let z0 = JointPoint::zeros(n, m);
    let threshold = 0.005f64.powi(2) * p.value(&z0);
    let oracle = OracleConfig::new(MetricMatrix::identity(n, m), 1e-9);
    let dir = out_dir();
    let mut hits = Vec::new();
    for (name, variant, iterations) in [
        ("zoeg", Variant::Zoeg, (ZO_EVAL_BUDGET / 4) as usize),
        ("gda", Variant::Gda, GDA_ITERATIONS),
        ("eg", Variant::FirstOrderEg, GDA_ITERATIONS),
    ] {
        let cfg = SolverConfig::new(variant, 1e-5, 1e-5, iterations, oracle.clone())
            .with_record_every(100)
            .with_diagnostic(DiagnosticMode::Off);
        let t = run(&p, &z0, &cfg).unwrap();
        write_trace(&dir.join(format!("rls_{name}.csv")), &t, false).unwrap();
        hits.push(t.records.iter().find(|r| r.f_value <= threshold).map(|r| (r.k, r.cum_evals)));
    }
    let zo_ok = matches!(hits[0], Some((_, e)) if e <= ZO_EVAL_BUDGET);
    let gda_ok = hits[1].is_some();
    let fmt = |h: Option<(usize, u64)>| match h {
        Some((k, e)) => format!("k={k} evals={e}"),
        None => "not reached".to_string(),
    };
    Outcome::check(
        "5",
        zo_ok && gda_ok,
        format!(
            "threshold {threshold:.5e}; ZO-EG {} (budget {ZO_EVAL_BUDGET} evals), GDA {} (budget {GDA_ITERATIONS} iterations), EG {}; traces in {}",
            fmt(hits[0]),
            fmt(hits[1]),
            fmt(hits[2]),
            dir.display()
        ),
    )
}

// 6. The poisoning attack lowers held-out accuracy.
fn poisoning() -> Outcome {
    let mut attacked = Vec::new();
    let mut clean = Vec::new();
    for seed in 0..5u64 {
        let (p, data) = poisoning_problem(seed);
        let unattacked = data.problem_with_bound(0.0).unwrap();
        let (n, m) = p.dims();
        let z0 = JointPoint::zeros(n, m);
        let cfg = SolverConfig::new(Variant::Zoeg, 1e-3, 1e-3, 12_000, OracleConfig::new(MetricMatrix::identity(n, m), 1e-5))
            .with_seed(seed)
            .with_record_every(12_000)
            .with_diagnostic(DiagnosticMode::Off);
        attacked.push(data.accuracy(&run_zoeg(&p, &z0, &cfg).unwrap().final_point.y));
        clean.push(data.accuracy(&run_zoeg(&unattacked, &z0, &cfg).unwrap().final_point.y));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let drop = mean(&clean) - mean(&attacked);
    Outcome::check(
        "6",
        drop >= 0.05,
        format!(
            "mean accuracy clean {:.4}, attacked {:.4}, drop {:.1} pp (need 5)",
            mean(&clean),
            mean(&attacked),
            100.0 * drop
        ),
    )
}

fn strip(mut t: RunTrace) -> RunTrace {
    for r in &mut t.records {
        r.wall_time_s = 0.0;
    }
    t
}

// 7. Variant reductions hold bit for bit.
fn reductions() -> Outcome {
    let p = toy_f1();
    let mut ok = true;
    for seed in 0..5u64 {
        let z0 = pt(5.0 - seed as f64, -7.0 + seed as f64);
        let cfg = |v| {
            SolverConfig::new(v, 2e-3, 1e-3, 100, OracleConfig::new(MetricMatrix::identity(1, 1), 1e-6)).with_seed(seed)
        };
        let zo = strip(run_zoeg(&p, &z0, &cfg(Variant::Zoeg)).unwrap());
        let vr = strip(run_vr_zoeg(&p, &z0, &cfg(Variant::VrZoeg)).unwrap());
        let mvr = strip(run_modified_vr_zoeg(&p, &z0, &cfg(Variant::ModifiedVrZoeg)).unwrap());
        ok &= zo == vr && vr == mvr;
    }
    Outcome::check(
        "7",
        ok,
        "5 seeds x 100 iterations on f1: modified VR (B = I) == VR, VR (t = 1) == ZO-EG".to_string(),
    )
}

// 8a. Proximal MVI at the orthant stationary point of xy. With
// F(u) = (u_y, -u_x) the sampled value is min(u_x/h, y)x - xy, negative
// whenever x, y > 0 and u_x < h y, so about 1/8 of the samples violate.
fn orthant_mvi() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let out = mvi_study(&configs().join("orthant_mvi.toml"), root.path()).unwrap();
    let frac = out.report.violating_fraction;
    let n = out.report.samples as f64;
    let predicted = 0.125;
    let se = (predicted * (1.0 - predicted) / n).sqrt();
    let consistent = (frac - predicted).abs() <= 5.0 * se && out.report.min_value < 0.0;
    Outcome {
        id: "8a",
        verdict: if frac == 0.0 { Verdict::Pass } else { Verdict::KnownFail(consistent) },
        detail: format!(
            "{} samples, violating fraction {frac:.4} (want 0; counterexample predicts {predicted} +- {:.4}), min {:.3e}",
            out.report.samples,
            5.0 * se,
            out.report.min_value
        ),
    }
}

// 8b. Proximal MVI around a lane-merging iterate.
fn lane_mvi() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let out = mvi_study(&configs().join("lane_mvi.toml"), root.path()).unwrap();
    let frac = out.report.violating_fraction;
    Outcome {
        id: "8b",
        verdict: Verdict::Soft(frac <= 0.01),
        detail: format!(
            "{} samples, violating fraction {frac:.4} (target <= 0.01), min {:.3e}",
            out.report.samples, out.report.min_value
        ),
    }
}

// 9. Central differences beat forward differences under output noise.
fn noise_study() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let out = compare_study(&configs().join("noise_study.toml"), root.path()).unwrap();
    let final_mean = |label: &str| {
        let c = out.curves.iter().find(|c| c.label == label).unwrap();
        let (_, mean, std) = *c.points.values().last().unwrap();
        (mean, std)
    };
    let (fw, fw_sd) = final_mean("forward");
    let (ce, ce_sd) = final_mean("central");
    Outcome::check(
        "9",
        ce < fw,
        format!("final objective over 3 seeds: forward {fw:.2} +- {fw_sd:.2}, central {ce:.2} +- {ce_sd:.2}"),
    )
}

fn eps_grid() -> Vec<f64> {
    (0..10).map(|i| 0.01 * 1.6f64.powi(i)).collect()
}

fn monotone(plans: &[HyperparamPlan]) -> bool {
    plans
        .windows(2)
        .all(|w| w[1].n_min <= w[0].n_min && w[1].mu_max >= w[0].mu_max)
}

// 10. Plan hand values and monotonicity in epsilon.
fn plans() -> Outcome {
    let mut failures = Vec::new();
    let mut expect = |label: &str, ok: bool| {
        if !ok {
            failures.push(label.to_string());
        }
    };
    let un = UnconstrainedInput {
        l1: 1.0,
        rho: 0.0,
        lambda: 1.0,
        r0: 1.0,
        epsilon: 0.1,
        h2: 0.5,
        d: 2,
        sigma: None,
    };
    // N + 1 = 8 / (L1 h2^2) / eps^2, mu = eps / (sqrt 2 (d + 3)^1.5)
    let p = plan_unconstrained(&un).unwrap();
    expect("unconstrained n_min", p.n_min == 3199);
    expect("unconstrained mu", rel_close(p.mu_max, 0.1 / 250f64.sqrt(), 1e-12));
    let p = plan_unconstrained(&UnconstrainedInput { sigma: Some(1.0), ..un }).unwrap();
    expect("vr n_min", p.n_min == 4799);
    expect("vr t_min", p.t_min == Some(7200));
    expect("vr mu", rel_close(p.mu_max, 0.1 / 375f64.sqrt(), 1e-12));

    let con = ConstrainedInput {
        l1: 1.0,
        rho: 0.0,
        lambda: 1.0,
        r0: 1.0,
        epsilon: 0.1,
        h: 0.25,
        d_z: 1.0,
        d: 2,
        sigma: None,
    };
    let p = plan_constrained(&con).unwrap();
    let b = 4.0 * 5f64.powf(1.5) * 16.0;
    expect("constrained mu", rel_close(p.mu_max, 0.01 / (4.0 * b), 1e-12));
    expect("constrained n_min", p.n_min == 25_599);

    let ns = NonsmoothInput {
        l0: 1.0,
        rho: 0.0,
        d: 2,
        delta: 0.5,
        epsilon: 0.1,
        r0: 1.0,
        sigma: None,
    };
    let p = plan_nonsmooth(&ns).unwrap();
    let mu = 0.013_526_574_714_741_99;
    let l1mu = 2f64.sqrt() / mu;
    expect("goldstein mu", rel_close(p.mu_max, mu, 1e-12));
    expect("nonsmooth L1", rel_close(p.smoothed_l1.unwrap(), 104.550_752_292_951_81, 1e-12));
    // h2 = 1/(2 L1mu) makes N + 1 = 32 L1mu^2 / eps^2.
    expect("nonsmooth n_min", p.n_min == (3200.0 * l1mu * l1mu - 1.0).ceil() as u64);

    let har = HarmonicInput {
        l1: 1.0,
        rho: 0.0,
        r0: 1.0,
        epsilon: 0.1,
        h2: 0.5,
        d: 2,
        scale: 0.1,
    };
    let p = plan_harmonic(&har).unwrap();
    let smoothing = 2.0 / 0.25 * 0.01 * PI * PI / 6.0;
    expect("harmonic n_min", p.n_min == ((8.0 + smoothing) / 0.01 - 1.0).ceil() as u64);
    expect("harmonic n_min 813", p.n_min == 813);

    for rho in [0.0, 0.01] {
        for sigma in [None, Some(0.5)] {
            let g: Vec<_> = eps_grid()
                .iter()
                .map(|&epsilon| plan_unconstrained(&UnconstrainedInput { rho, sigma, epsilon, ..un }).unwrap())
                .collect();
            expect("unconstrained grid", monotone(&g));
            let g: Vec<_> = eps_grid()
                .iter()
                .map(|&epsilon| {
                    plan_constrained(&ConstrainedInput { rho: rho / 10.0, sigma, epsilon, ..con }).unwrap()
                })
                .collect();
            expect("constrained grid", monotone(&g));
            let g: Vec<_> = eps_grid()
                .iter()
                .map(|&epsilon| plan_nonsmooth(&NonsmoothInput { sigma, epsilon, ..ns }).unwrap())
                .collect();
            expect("nonsmooth grid", monotone(&g));
        }
        let g: Vec<_> = eps_grid()
            .iter()
            .map(|&epsilon| plan_harmonic(&HarmonicInput { rho, epsilon, ..har }).unwrap())
            .collect();
        expect("harmonic grid", monotone(&g));
    }
    Outcome::check(
        "10",
        failures.is_empty(),
        if failures.is_empty() {
            "hand values for all four plans match to 1e-12, epsilon grids monotone".to_string()
        } else {
            format!("mismatched: {}", failures.join(", "))
        },
    )
}

// 11. Closed-form optimum of the metric-tuning bound.
fn nu_closed_form() -> Outcome {
    let mut rng = Streams::new(13).rng(0);
    let mut bad = 0;
    for _ in 0..100 {
        let p = NuParams {
            l_bar: rng.random_range(0.1..10.0),
            rho: 0.0,
            r0_sq: rng.random_range(0.1..10.0),
            iterations: rng.random_range(1..100_000),
            mu: rng.random_range(1e-6..1e-1),
            d: rng.random_range(1..100),
            sigma: rng.random_range(0.01..5.0),
            t: rng.random_range(1..500),
            d_z: rng.random_range(0.1..10.0),
        };
        let (l, d, t) = (p.l_bar, p.d as f64, p.t as f64);
        let a = l * 2.0 * p.r0_sq / (p.iterations as f64 + 1.0);
        let cases = [
            (NuSetting::Unconstrained, l * 2.0 * p.mu * p.mu * d, 3.0 * p.sigma * p.sigma / (t * l), 0.0),
            (
                NuSetting::Constrained,
                l * p.mu * p.d_z * (d + 3.0).powf(1.5),
                4.0 * p.sigma * p.sigma / (t * l),
                2.0 * p.d_z * p.sigma / t.sqrt(),
            ),
        ];
        for (setting, b, e, noise) in cases {
            let opt = nu_optimize(setting, &p).unwrap();
            let lam = (b / e).sqrt();
            let value = 4.0 * l * (noise + a + 2.0 * (b * e).sqrt());
            let ok = matches!(opt.lambda_star, LambdaStar::Value(v) if rel_close(v, lam, 1e-12))
                && opt.kappa_star == 1.0
                && rel_close(opt.value, value, 1e-12)
                && rel_close(opt.h_star, 1.0 / (2.0 * l), 1e-12);
            if !ok {
                bad += 1;
            }
        }
    }
    Outcome::check(
        "11",
        bad == 0,
        format!("100 random draws x 2 settings, {bad} mismatches at 1e-12 (lambda*, kappa* = 1, value)"),
    )
}

fn emit(report: &mut String, o: &Outcome) {
    let line = o.line();
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{line}");
    report.push_str(&line);
    report.push('\n');
}

#[test]
fn acceptance_suite() {
    let criteria: [fn() -> Outcome; 12] = [
        abs_diff_smoothing,
        smoothing_bounds,
        variance_reduction,
        toys,
        rls,
        poisoning,
        reductions,
        orthant_mvi,
        lane_mvi,
        noise_study,
        plans,
        nu_closed_form,
    ];
    let mut report = String::new();
    let mut blocking = Vec::new();
    for c in criteria {
        let o = c();
        emit(&mut report, &o);
        if o.blocks_suite() {
            blocking.push(o.id);
        }
    }
    std::fs::write(out_dir().join("report.txt"), &report).unwrap();
    assert!(blocking.is_empty(), "failing criteria: {blocking:?}\n{report}");
}
