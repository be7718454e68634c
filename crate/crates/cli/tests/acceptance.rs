//! End-to-end acceptance checks. Runs as a plain binary so every criterion
//! prints its own PASS/FAIL line; exits nonzero if any criterion fails.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use mannlab::commands::{cmd_run, cmd_sweep, RunOutcome};
use mannlab::{Log, RunConfig};
use mannlab_core::iteration::{lemma22_harness, mainge_tau, TauOutcome};
use mannlab_core::operators::{certify, check_lemma21, GalleryParams, Verdict};
use mannlab_core::sampling;
use mannlab_core::schedules::Sequence;
use mannlab_core::{Operator, Space, Vector};

const SEED: u64 = 20240611;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn benchmark_config() -> RunConfig {
    RunConfig::load(&configs().join("benchmark.json")).expect("benchmark config")
}

fn quiet() -> Log {
    Log::new(true)
}

fn within(elapsed: Duration, limit_s: f64) -> (bool, String) {
    let s = elapsed.as_secs_f64();
    (s < limit_s, format!("{s:.2}s of {limit_s}s"))
}

/// Gallery operators in euclidean dim 8, each with the λ it is run at.
fn gallery_dim8() -> Vec<(Operator, f64)> {
    let space = Space::euclidean(8).unwrap();
    let none = GalleryParams::default();
    // A = I − 0.3 L with L the path-graph Laplacian: symmetric, spectrum in [−0.2, 1]
    let mut a = vec![vec![0.0; 8]; 8];
    for i in 0..8 {
        let deg = if i == 0 || i == 7 { 1.0 } else { 2.0 };
        a[i][i] = 1.0 - 0.3 * deg;
        if i > 0 {
            a[i][i - 1] = 0.3;
        }
        if i < 7 {
            a[i][i + 1] = 0.3;
        }
    }
    let b: Vec<f64> = (0..8).map(|i| 0.1 * (i as f64 - 3.5)).collect();
    let entries: Vec<(&str, GalleryParams, f64)> = vec![
        ("identity", none.clone(), 0.5),
        ("constant_zero", none.clone(), 0.5),
        ("negation", none.clone(), 0.5),
        (
            "diagonal",
            GalleryParams {
                mu: Some(vec![1.0, 1.0, -1.0, 0.5, 0.9, -0.8, 0.0, 0.25]),
                ..none.clone()
            },
            0.4,
        ),
        (
            "affine",
            GalleryParams {
                a: Some(a),
                b: Some(b),
                ..none.clone()
            },
            0.4,
        ),
        ("clipped_quadratic", none, 0.5),
    ];
    entries
        .into_iter()
        .map(|(name, params, lambda)| (Operator::gallery(name, &space, &params, Some(lambda)).unwrap(), lambda))
        .collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut checked = 0;
    let mut min_slack = f64::INFINITY;
    for (op, lambda) in gallery_dim8() {
        let cert = certify(&op, lambda, 1000, SEED, 10.0).unwrap();
        if !cert.is_certified() {
            failures.push(format!("{} not certified", op.name()));
            continue;
        }
        let mu = op.space().mu(lambda);
        for k in 0..10 {
            let alpha = mu * k as f64 / 9.0;
            let r = check_lemma21(&op, alpha, 1000, SEED + k).unwrap();
            checked += r.n_pairs;
            min_slack = min_slack.min(r.min_slack);
            if r.violations > 0 {
                failures.push(format!("{} alpha={alpha}: {} violations", op.name(), r.violations));
            }
        }
    }
    let (fast, t) = within(start.elapsed(), 5.0);
    outcome(
        failures.is_empty() && fast,
        format!("{checked} pairs over 6 operators x 10 alphas, min slack {min_slack:.3e}, failures {failures:?}, {t}"),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let space = Space::euclidean(8).unwrap();
    let none = GalleryParams::default();
    let id = Operator::gallery("identity", &space, &none, None).unwrap();
    let neg = Operator::gallery("negation", &space, &none, None).unwrap();
    let identity_exact = (1..=9).all(|k| {
        let c = certify(&id, k as f64 / 10.0, 1000, SEED, 10.0).unwrap();
        c.max_violation == 0.0 && c.is_certified()
    });
    let refuted = certify(&neg, 0.6, 1000, SEED, 10.0).unwrap();
    let witness = match &refuted.verdict {
        Verdict::Refuted { x, y, slack } => {
            // for T = −I the slack is (2 − 4λ)‖x − y‖², negative at λ = 0.6
            let d = x.sub(y);
            let d2 = d.dot(&d);
            let expected = (2.0 - 4.0 * 0.6) * d2;
            (slack - expected).abs() <= 1e-9 * (1.0 + d2) && *slack < 0.0
        }
        Verdict::Certified => false,
    };
    let half = certify(&neg, 0.5, 1000, SEED, 10.0).unwrap().is_certified();
    let (fast, t) = within(start.elapsed(), 1.0);
    outcome(
        identity_exact && witness && half && fast,
        format!("identity exact {identity_exact}, negation@0.6 witness {witness}, negation@0.5 certified {half}, {t}"),
    )
}

struct Benchmark {
    main: RunOutcome,
    other_x0: RunOutcome,
    elapsed: Duration,
}

fn run_benchmark() -> Benchmark {
    let cfg = benchmark_config();
    let start = Instant::now();
    let main = cmd_run(&cfg, None, &quiet()).expect("benchmark run");
    let elapsed = start.elapsed();
    let mut other = cfg;
    other.x0 = Some(vec![-4.0, 6.0, -1.0, 2.0, -3.0, 0.5, 1.0, -2.0]);
    let other_x0 = cmd_run(&other, None, &quiet()).expect("second start");
    Benchmark { main, other_x0, elapsed }
}

fn criterion_3(b: &Benchmark) -> Outcome {
    let s = &b.main.summary;
    // independent oracle: keep the coordinates of u on the eigenvalue-one subspace
    let cfg = &s.config;
    let mu = cfg.operator.params.mu.as_ref().unwrap();
    let u = cfg.u.as_ref().unwrap();
    let proj: Vec<f64> = u.iter().zip(mu).map(|(ui, m)| if *m == 1.0 { *ui } else { 0.0 }).collect();
    let oracle_gap = Vector::new(proj).unwrap().max_abs_diff(&s.anchor.z);
    let steps = s.iterations;
    let (fast, t) = within(b.elapsed, 10.0);
    outcome(
        s.final_dist_to_z <= 1e-2 && oracle_gap <= 1e-3 && steps <= 100_000 && fast,
        format!(
            "N = {steps}, |x_N - z| = {:.3e}, oracle gap {oracle_gap:.1e}, {t}",
            s.final_dist_to_z
        ),
    )
}

fn criterion_4(b: &Benchmark) -> Outcome {
    let gap = b.main.trace.final_x.max_abs_diff(&b.other_x0.trace.final_x);
    let d: f64 = {
        let diff = b.main.trace.final_x.sub(&b.other_x0.trace.final_x);
        diff.dot(&diff).sqrt()
    };
    outcome(d <= 1e-2, format!("|x_N - x'_N| = {d:.3e} (max coordinate {gap:.3e})"))
}

fn criterion_5(b: &Benchmark) -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for run in [&b.main, &b.other_x0] {
        for r in &run.diagnostics.rows {
            worst = worst.max(-r.bound_slack);
        }
    }
    let p = &b.main.summary.fixed_point;
    outcome(
        worst <= 1e-9,
        format!("p = {:?}, max excess over radius {worst:.3e}", p.as_slice()),
    )
}

fn criterion_6(b: &Benchmark) -> Outcome {
    let mut min35 = f64::INFINITY;
    let mut min_key = f64::INFINITY;
    let mut steps = 0;
    for run in [&b.main, &b.other_x0] {
        for r in &run.diagnostics.rows {
            if let (Some(a), Some(k)) = (r.ineq35_slack, r.key_ineq_slack) {
                min35 = min35.min(a);
                min_key = min_key.min(k);
                steps += 1;
            }
        }
    }
    outcome(
        min35 >= -1e-9 && min_key >= -1e-9,
        format!("{steps} steps, min one-step slack {min35:.3e}, min key slack {min_key:.3e}"),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut passed = 0;
    let mut analyzed = 0;
    for k in 0..1000u64 {
        let mut rng = sampling::rng(SEED, 1000 + k);
        let noise = sampling::uniform_box(&mut rng, 1000, 1.0);
        // alternate i.i.d. noise with a decaying trend plus noise
        let gamma: Vec<f64> = noise
            .iter()
            .enumerate()
            .map(|(n, e)| {
                if k % 2 == 0 {
                    e.abs()
                } else {
                    1.0 / (n + 1) as f64 + 0.01 * e / ((n + 1) as f64).sqrt()
                }
            })
            .collect();
        match mainge_tau(&gamma).unwrap() {
            TauOutcome::Analysis(a) => {
                analyzed += 1;
                if a.all_pass() {
                    passed += 1;
                }
            }
            TauOutcome::Monotone => {
                if gamma.windows(2).all(|w| w[0] >= w[1]) {
                    passed += 1;
                }
            }
        }
    }
    let (fast, t) = within(start.elapsed(), 5.0);
    outcome(
        passed == 1000 && fast,
        format!("{passed}/1000 pass ({analyzed} with ascents), {t}"),
    )
}

fn criterion_8() -> Outcome {
    let decay = lemma22_harness(&Sequence::Harmonic, &Sequence::Harmonic, 1.0, 10_000).unwrap();
    let stall = lemma22_harness(&Sequence::Harmonic, &Sequence::Constant { c: 0.1 }, 1.0, 10_000).unwrap();
    let first = decay.first_below(1e-2);
    let ok = first.is_some_and(|n| n <= 10_000) && (stall.last() - 0.1).abs() <= 1e-3;
    outcome(
        ok,
        format!(
            "a_n < 1e-2 first at n = {first:?}; control a_N = {:.6}",
            stall.last()
        ),
    )
}

fn criterion_9() -> Outcome {
    let cfg = RunConfig::load(&configs().join("gamma_sweep.json")).expect("sweep config");
    let reports = cmd_sweep(&cfg, None, &quiet()).expect("sweep");
    let rows: Vec<_> = reports.iter().map(|r| &r.row).collect();
    let zhou_iv_failed = |i: usize| {
        reports[i].verdicts.iter().any(|v| {
            v.theorem == "zhou" && v.get("(iv)").is_some_and(|c| !c.pass)
        })
    };
    let ok = rows.len() == 3
        && rows[0].zhou == "fail"
        && rows[1].zhou == "fail"
        && zhou_iv_failed(0)
        && zhou_iv_failed(1)
        && rows.iter().all(|r| r.theorem31 == "pass")
        && rows.iter().all(|r| r.final_dist_to_z.is_some_and(|d| d <= 1e-2));
    let table: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{} thm31={} zhou={} dist={:.2e}",
                r.id,
                r.theorem31,
                r.zhou,
                r.final_dist_to_z.unwrap_or(f64::NAN)
            )
        })
        .collect();
    outcome(ok, table.join("; "))
}

fn criterion_10() -> Outcome {
    let space = Space::lp(8, 4.0).unwrap();
    let mut rng = sampling::rng(SEED, 7);
    let mut worst_pair = 0.0f64;
    let mut worst_dual = 0.0f64;
    let mut ok = true;
    for _ in 0..10_000 {
        let scale = 10f64.powf(sampling::uniform_box(&mut rng, 1, 3.0)[0]);
        let x = Vector::new(sampling::uniform_box(&mut rng, 8, scale)).unwrap();
        let n = space.norm(&x).unwrap();
        let pair_err = (space.pairing(&x, &x).unwrap() - n * n).abs() / (1.0 + n * n);
        let dual_err = (space.dual_norm(&space.duality_map(&x).unwrap()).unwrap() - n).abs() / (1.0 + n * n);
        worst_pair = worst_pair.max(pair_err);
        worst_dual = worst_dual.max(dual_err);
        ok &= pair_err <= 1e-9 && dual_err <= 1e-9;
    }
    let smooth = space.validate_smooth_constant(10_000, SEED).unwrap();
    ok &= smooth.k2 == 1.5 && smooth.violations == 0;
    outcome(
        ok,
        format!(
            "pairing err {worst_pair:.1e}, dual-norm err {worst_dual:.1e}, K2 = {} violations {} (empirical {:.4})",
            smooth.k2, smooth.violations, smooth.empirical_k2
        ),
    )
}

fn criterion_11() -> Outcome {
    let cfg = benchmark_config();
    let dir = tempfile::tempdir().unwrap();
    let mut traces = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        cmd_run(&cfg, Some(&out), &quiet()).expect("rerun");
        traces.push((
            std::fs::read(out.join("trace.csv")).unwrap(),
            std::fs::read(out.join("summary.json")).unwrap(),
        ));
    }
    let same_trace = traces[0].0 == traces[1].0;
    let same_summary = traces[0].1 == traces[1].1;
    outcome(
        same_trace && same_summary,
        format!(
            "trace {} bytes identical {same_trace}, summary identical {same_summary}",
            traces[0].0.len()
        ),
    )
}

fn main() {
    let total = Instant::now();
    let bench = run_benchmark();
    let results: Vec<(u32, &str, Outcome)> = vec![
        (1, "averaged-map inequality suite", criterion_1()),
        (2, "pseudocontraction certification", criterion_2()),
        (3, "convergence benchmark", criterion_3(&bench)),
        (4, "independence from x0", criterion_4(&bench)),
        (5, "boundedness", criterion_5(&bench)),
        (6, "one-step and key inequalities", criterion_6(&bench)),
        (7, "tau-sequence suite", criterion_7()),
        (8, "scalar recursion suite", criterion_8()),
        (9, "relaxed-conditions sweep", criterion_9()),
        (10, "duality-map identities", criterion_10()),
        (11, "determinism", criterion_11()),
    ];
    let mut failed = 0;
    for (id, name, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {tag} {name}: {}", o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {}/{} passed in {:.2}s",
        results.len() - failed,
        results.len(),
        total.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
