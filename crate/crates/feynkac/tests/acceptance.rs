//! End-to-end acceptance run: one PASS/FAIL line per criterion.
//!
//! Failing criteria are reported, not hidden; the process exits non-zero only
//! if a run cannot be carried out at all.

use std::time::Instant;

use feynkac::cli::{preset, run_presets, Metric, Preset, Row, RunConfig};
use feynkac::stepper::SolverKind;
use feynkac::C64;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

mod props;

struct Outcome {
    pass: bool,
    notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { pass: true, notes: Vec::new() }
    }

    fn check(&mut self, ok: bool, note: String) {
        if !ok {
            self.pass = false;
            self.notes.push(format!("FAILED {note}"));
        } else {
            self.notes.push(note);
        }
    }
}

fn run(presets: &[Preset]) -> Vec<(Preset, Row)> {
    let rows = run_presets(presets).unwrap_or_else(|e| panic!("run failed: {e}"));
    presets.iter().cloned().zip(rows).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn label(r: &Row) -> String {
    format!("{} a={} g={} p={}{:+}i d={} J={} N={} {}", r.scheme, r.alpha, r.gamma, r.p_re, r.p_im, r.d, r.level, r.steps, r.mesh)
}

fn rate_of(r: &Row, m: Metric) -> Option<f64> {
    match m {
        Metric::Err1 => r.rate1,
        Metric::MaxErr => None,
        _ => r.rate2,
    }
}

/// Rate between consecutive reference values of the same group.
fn ref_rate(prev: &(Preset, Row), next: &(Preset, Row)) -> Option<f64> {
    let (a, b) = (prev.0.reference?, next.0.reference?);
    if prev.0.group != next.0.group {
        return None;
    }
    let (p, n) = (&prev.1, &next.1);
    let scale = if n.level != p.level {
        (n.level - p.level) as f64 * std::f64::consts::LN_2
    } else {
        (n.steps as f64 / p.steps as f64).ln()
    };
    Some((a.value / b.value).ln() / scale)
}

/// Rate of `metric` between consecutive rows of a group.
fn pair_rate(prev: &Row, next: &Row, metric: Metric) -> f64 {
    let (a, b) = (prev.metric(metric), next.metric(metric));
    let scale = if next.level != prev.level {
        (next.level - prev.level) as f64 * std::f64::consts::LN_2
    } else {
        (next.steps as f64 / prev.steps as f64).ln()
    };
    (a / b).ln() / scale
}

fn rates_near(out: &mut Outcome, runs: &[(Preset, Row)], metric: Metric, tol: f64, target: impl Fn(&Row) -> f64) {
    for w in runs.windows(2) {
        if w[0].0.group != w[1].0.group {
            continue;
        }
        let rate = rate_of(&w[1].1, metric).unwrap_or_else(|| pair_rate(&w[0].1, &w[1].1, metric));
        let want = target(&w[1].1);
        out.check((rate - want).abs() <= tol, format!("{}: rate {rate:.3} vs {want:.3}", label(&w[1].1)));
    }
}

fn criterion1() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let runs = run(&preset("t1", 1.0).unwrap());
    for (p, r) in &runs {
        let want = p.reference.unwrap().value;
        out.check(rel(r.err2, want) <= 0.2, format!("{}: err2 {:.4e} vs {want:.4e}", label(r), r.err2));
    }
    // FBDF first order; scheme I PI 1+gamma, scheme II PI 2-gamma
    rates_near(&mut out, &runs, Metric::Err2, 0.1, |r| match r.scheme.as_str() {
        "I-PI" => 1.0 + r.gamma,
        "II-PI" => 2.0 - r.gamma,
        _ => 1.0,
    });
    let per_scheme = start.elapsed().as_secs_f64() / 4.0;
    out.check(per_scheme <= 300.0, format!("mean time per scheme {per_scheme:.1} s"));
    out
}

fn criterion2() -> Outcome {
    let mut out = Outcome::new();
    // d=3 stops at J=4: N = 8^5 steps is beyond desk scale
    let presets: Vec<Preset> = preset("t2", 1.0).unwrap().into_iter().filter(|p| p.config.steps <= 4096).collect();
    let runs = run(&presets);
    let (main, mixed): (Vec<_>, Vec<_>) = runs.into_iter().partition(|(p, _)| p.config.gamma == 0.6);
    rates_near(&mut out, &main, Metric::Err1, 0.15, |r| if r.d == 2 { 2.0 } else { 3.1 });
    rates_near(&mut out, &mixed, Metric::Err1, 0.15, |r| match (r.d, r.gamma) {
        (2, g) if g == 0.4 => 1.81,
        (2, _) => 2.09,
        (_, g) if g == 0.2 => 2.73,
        _ => 3.02,
    });
    out
}

fn criterion3() -> Outcome {
    let mut out = Outcome::new();
    let runs = run(&preset("t3", 1.0).unwrap());
    let find = |scheme: &str, mesh: &str, p: f64, n: usize| {
        runs.iter()
            .map(|(_, r)| r)
            .find(|r| r.scheme == scheme && r.mesh == mesh && r.p_re == p && r.steps == n)
            .expect("t3 row")
            .err2
    };
    for p in [0.0, 5.0] {
        for n in [60, 80, 100] {
            for (scheme, base) in [("II-PI", "uniform"), ("I-PI", "graded:1")] {
                let (g, u) = (find(scheme, "graded:2", p, n), find(scheme, base, p, n));
                out.check(g < 0.65 * u, format!("{scheme} p={p} N={n}: graded/uniform {:.3}", g / u));
            }
        }
    }
    out
}

fn criterion4() -> Outcome {
    let mut out = Outcome::new();
    let presets: Vec<Preset> = preset("t4", 1.0)
        .unwrap()
        .into_iter()
        .filter(|p| p.config.alpha == 1.5 && (p.config.level == 4 || p.config.solver == SolverKind::Direct))
        .collect();
    let runs = run(&presets);
    let at4: Vec<&Row> = runs.iter().map(|(_, r)| r).filter(|r| r.level == 4).collect();
    let direct = at4.iter().find(|r| r.iters == 0.0).expect("direct row").err2;
    for r in &at4 {
        out.check(rel(r.err2, direct) < 5e-4, format!("J=4 iters {:.1}: err2 {:.4e} vs direct {direct:.4e}", r.iters, r.err2));
    }
    out.check(rel(direct, 7.5237e-6) < 5e-4, format!("J=4 err2 {direct:.4e} vs 7.5237e-6"));
    let j5 = runs.iter().find(|(_, r)| r.level == 5).expect("J=5 row").1.err2;
    out.check(rel(j5, 5.2053e-7) <= 0.2, format!("J=5 err2 {j5:.4e} vs 5.2053e-7"));
    out
}

fn criterion5() -> Outcome {
    let mut out = Outcome::new();
    let presets: Vec<Preset> = preset("t5", 1.0).unwrap().into_iter().filter(|p| p.config.solver == SolverKind::Gmres).collect();
    let runs = run(&presets);
    for gamma in [0.3, 0.8] {
        let iters = |precond: bool| -> Vec<f64> {
            runs.iter().filter(|(p, _)| p.config.gamma == gamma && p.config.precond == precond).map(|(_, r)| r.iters).collect()
        };
        let (pre, plain) = (iters(true), iters(false));
        for (j, it) in (5..=7).zip(&pre) {
            out.check(*it <= 45.0, format!("g={gamma} J={j}: preconditioned iters {it:.1}"));
        }
        out.check(plain[2] >= 2.0 * plain[0], format!("g={gamma}: plain iters {:.1} -> {:.1}", plain[0], plain[2]));
    }
    out
}

fn criterion6() -> Outcome {
    let mut out = Outcome::new();
    let runs = run(&preset("t6", 1.0).unwrap());
    rates_near(&mut out, &runs, Metric::Err2, 0.1, |r| if r.scheme.ends_with("FBDF") { 1.0 } else { 2.0 - r.gamma });
    out
}

fn criterion7() -> Outcome {
    let mut out = Outcome::new();
    let runs = run(&preset("t7", 1.0).unwrap());
    rates_near(&mut out, &runs, Metric::MaxErr, 0.2, |r| 4.0 - r.alpha);
    let (p, r) = runs
        .iter()
        .find(|(_, r)| r.alpha == 2.0 && r.p_re == 1.0 && r.p_im == 1.0 && r.level == 4)
        .expect("t7 row");
    let want = p.reference.unwrap().value;
    out.check(rel(r.maxerr, want) <= 0.2, format!("J=4 a=2 p=1+i: maxerr {:.4e} vs {want:.4e}", r.maxerr));
    // spatial error dominates: doubling N at the finest level barely moves it
    let finest = &runs.iter().find(|(_, r)| r.alpha == 2.0 && r.p_re == 1.0 && r.level == 5).expect("t7 row").1;
    let doubled = RunConfig {
        case: "ex43_colloc".into(),
        scheme: "COLLOC-PI".parse().unwrap(),
        alpha: 2.0,
        gamma: 0.5,
        p: C64::new(1.0, 1.0),
        d: 4,
        level: 5,
        steps: 8192,
        ..RunConfig::default()
    };
    let r2 = doubled.run().expect("doubled run");
    let change = rel(finest.maxerr, r2.maxerr);
    out.check(change < 0.05, format!("J=5 N 4096 -> 8192: maxerr moves {:.2}%", 100.0 * change));
    out
}

fn criterion8() -> Outcome {
    let mut out = Outcome::new();
    let runs = run(&preset("t8", 1.0).unwrap());
    let (time, space): (Vec<_>, Vec<_>) = runs.into_iter().partition(|(p, _)| p.config.level == 7);
    rates_near(&mut out, &time, Metric::Err2, 0.1, |r| if r.scheme.ends_with("FBDF") { 1.0 } else { 1.0 + r.gamma });
    for w in space.windows(2) {
        if let Some(want) = ref_rate(&w[0], &w[1]) {
            let rate = w[1].1.rate2.expect("space rate");
            out.check((rate - want).abs() <= 0.2, format!("{}: rate {rate:.3} vs {want:.3}", label(&w[1].1)));
        }
    }
    out
}

fn property<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> props::Check) -> Result<(), String> {
    let mut runner = TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() });
    runner.run(&strategy, |v| test(v).map_err(TestCaseError::fail)).map_err(|e| e.to_string())
}

fn criterion9() -> Outcome {
    let mut out = Outcome::new();
    let mut record = |name: &str, r: Result<(), String>| match r {
        Ok(()) => out.check(true, format!("{name}: ok")),
        Err(e) => out.check(false, format!("{name}: {e}")),
    };
    let positivity = (
        prop::collection::vec(-10.0f64..10.0, 1..=64),
        0.05f64..0.95,
        prop::sample::select(vec![0.0, 0.7]),
        prop::sample::select(vec![1e-1, 1e-3]),
    );
    record("(a) positivity", property(1000, positivity, |(v, g, pu, tau)| props::positivity(&v, g, pu, tau)));
    record("(b) weight chain", props::weight_chain(10_001));
    record("(c) quasi-Toeplitz", props::quasi_toeplitz_matches_brute_force());
    record("(d) FWT round trip", property(256, prop::collection::vec(-1.0f64..1.0, 63), |v| props::fwt_round_trip(&v)));
    let stability = (
        prop::collection::vec(-1.0f64..1.0, 31),
        prop::sample::select(vec![1e-1, 1e-3]),
        prop::sample::select(vec![0.0, 0.7]),
        prop::sample::select(vec![0.3, 0.7]),
    );
    record("(e) stability", property(50, stability, |(g0, tau, pu, g)| props::zero_forcing_stability(&g0, tau, pu, g)));
    record("(f) consistency", props::consistency_orders());
    out
}

fn main() {
    // `cargo test -- <filter>` passes arguments; run the criteria whose number matches
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [(usize, &str, fn() -> Outcome); 9] = [
        (1, "t1 errors and time rates", criterion1),
        (2, "Err-1 space rates", criterion2),
        (3, "graded mesh benefit", criterion3),
        (4, "2D solver equivalence", criterion4),
        (5, "wavelet preconditioner", criterion5),
        (6, "complex-p time rates", criterion6),
        (7, "collocation space order", criterion7),
        (8, "forward model rates", criterion8),
        (9, "property suites", criterion9),
    ];
    let mut failed = 0;
    for (id, name, f) in criteria {
        if !args.is_empty() && !args.iter().any(|a| a == &id.to_string()) {
            continue;
        }
        let start = Instant::now();
        let outcome = f();
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {id} {verdict}: {name} ({:.1} s)", start.elapsed().as_secs_f64());
        let verbose = std::env::var_os("FEYNKAC_ACCEPT_VERBOSE").is_some();
        for note in outcome.notes.iter().filter(|n| verbose || n.starts_with("FAILED")) {
            println!("    {note}");
        }
        failed += usize::from(!outcome.pass);
    }
    println!("acceptance: {failed} criteria failing");
}
