//! Acceptance run: one line per criterion, nonzero exit if any fails.

use mop::suites::{self, endpoints_match, Suite, FIG1, FIG1_GAMMA, FIG2};
use mop::{Orientation, RunConfig};
use mop_core::geometry::{gamma_k, GammaOptions};
use mop_core::measures::{mu_density, weak_convergence_report, DensityOptions};
use mop_core::recurrence::RecurrenceSpec;
use mop_core::symbol::Symbol;
use mop_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::process::ExitCode;
use std::time::{Duration, Instant};

const SEED: u64 = 20240611;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    ok: bool,
    detail: String,
}

impl Verdict {
    fn new(ok: bool, detail: impl Into<String>) -> Self {
        Verdict { ok, detail: detail.into() }
    }
}

fn fig(p: usize, b: &[f64]) -> RunConfig {
    let mut cfg = RunConfig::periodic(p, b);
    cfg.seed = SEED;
    cfg
}

fn suite(name: Suite, cfg: &RunConfig) -> Verdict {
    match suites::run(name, cfg) {
        Ok(rep) => {
            let mut detail = format!("{}/{} cases", rep.passes, rep.cases);
            if !rep.vacuous.is_empty() {
                detail += &format!(", {} vacuous", rep.vacuous.len());
            }
            if let Some(f) = rep.failures.first() {
                detail += &format!("; first failure {}: {}", f.id, f.detail);
            }
            Verdict::new(rep.ok(), detail)
        }
        Err(e) => Verdict::new(false, e.to_string()),
    }
}

fn within(v: Verdict, start: Instant, limit: Duration) -> Verdict {
    let took = start.elapsed();
    let ok = v.ok && took < limit;
    Verdict::new(ok, format!("{} in {:.1} s (limit {} s)", v.detail, took.as_secs_f64(), limit.as_secs()))
}

fn fig1_gamma() -> Verdict {
    let start = Instant::now();
    let sym = match Symbol::two_diagonal(2, &FIG1) {
        Ok(s) => s,
        Err(e) => return Verdict::new(false, e.to_string()),
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, want) in FIG1_GAMMA.iter().enumerate() {
        match gamma_k(&sym, k, &GammaOptions::default()) {
            Ok(g) => {
                let got = g.x_intervals();
                ok &= endpoints_match(&got, want, 0.01);
                let shown: Vec<String> = got.iter().map(|(a, b)| format!("[{a:.4}, {b:.4}]")).collect();
                parts.push(format!("k={k}: {}", shown.join(" ")));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("k={k}: {e}"));
            }
        }
    }
    within(Verdict::new(ok, parts.join("; ")), start, Duration::from_secs(30))
}

fn counts() -> Verdict {
    suite(Suite::Gamma, &fig(2, &FIG1))
}

fn mass() -> Verdict {
    let start = Instant::now();
    let mut cfg = fig(2, &FIG1);
    cfg.cases = Some(3);
    within(suite(Suite::Mass, &cfg), start, Duration::from_secs(60))
}

fn widom() -> Verdict {
    let mut cfg = fig(2, &FIG2);
    cfg.cases = Some(5);
    cfg.samples = Some(10);
    suite(Suite::Widom, &cfg)
}

fn patterns() -> Verdict {
    suite(Suite::Patterns, &fig(2, &FIG2))
}

fn interlace() -> Verdict {
    let mut cfg = fig(2, &FIG2);
    cfg.cases = Some(200);
    suite(Suite::Interlace, &cfg)
}

fn ratio() -> Verdict {
    suite(Suite::Ratio, &fig(2, &FIG2))
}

fn symmetry() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst_rot: f64 = 0.0;
    let mut worst_prod: f64 = 0.0;
    for _ in 0..100 {
        let p = rng.gen_range(1..=4);
        let r = rng.gen_range(1..=8);
        let b: Vec<f64> = (0..r).map(|_| rng.gen_range(0.2..5.0)).collect();
        let sym = match RecurrenceSpec::periodic(p, &b).and_then(|s| Symbol::from_spec(&s)) {
            Ok(s) => s,
            Err(e) => return Verdict::new(false, e.to_string()),
        };
        let x = Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let z = Complex64::from_polar(rng.gen_range(0.2..3.0), rng.gen_range(-3.2..3.2));
        let rr = sym.r() as u32;
        let w = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / (p + 1) as f64);
        let lhs = sym.det(z, w * x);
        let rhs = w.powu(rr) * sym.det(w.powu(rr) * z, x);
        worst_rot = worst_rot.max((lhs - rhs).norm() / lhs.norm().max(rhs.norm()));
        let prod: Complex64 = match sym.roots(x) {
            Ok(bundle) => bundle.roots.iter().product(),
            Err(e) => return Verdict::new(false, e.to_string()),
        };
        let sign = if (sym.r() + p) % 2 == 0 { 1.0 } else { -1.0 };
        let want = sign / sym.lead();
        worst_prod = worst_prod.max((prod - want).norm() / want.abs());
    }
    let ok = worst_rot <= 1e-12 && worst_prod <= 1e-12;
    Verdict::new(ok, format!("100 points, rotation {worst_rot:.1e}, product {worst_prod:.1e}"))
}

fn weak() -> Verdict {
    let spec = match RecurrenceSpec::periodic(2, &FIG1) {
        Ok(s) => s,
        Err(e) => return Verdict::new(false, e.to_string()),
    };
    let run = || -> Result<Verdict, mop_core::Error> {
        let sym = Symbol::from_spec(&spec)?;
        let g = gamma_k(&sym, 0, &GammaOptions::default())?;
        let d = mu_density(&sym, &g, &DensityOptions::default())?;
        let rep = weak_convergence_report(&spec, &d, &g, &[40, 80, 160], 0.02)?;
        let last = rep.rows.last().map_or(f64::INFINITY, |r| r.discrepancy);
        let shown: Vec<String> = rep.rows.iter().map(|r| format!("n={} {:.4}", r.n, r.discrepancy)).collect();
        Ok(Verdict::new(rep.decreasing && last <= 0.05, shown.join(", ")))
    };
    run().unwrap_or_else(|e| Verdict::new(false, e.to_string()))
}

fn nikishin() -> Verdict {
    let mut cfg = fig(2, &FIG2);
    cfg.orientation = Orientation::Reflected;
    cfg.n = vec![60];
    suite(Suite::Nikishin, &cfg)
}

fn main() -> ExitCode {
    if let Err(e) = mop::init_threads() {
        eprintln!("acceptance: {e}");
        return ExitCode::from(2);
    }
    let criteria: [Criterion; 10] = [
        ("fig1-gamma", fig1_gamma),
        ("interval-counts", counts),
        ("mass", mass),
        ("widom", widom),
        ("pattern-oracles", patterns),
        ("interlacing", interlace),
        ("ratio", ratio),
        ("symbol-identities", symmetry),
        ("weak-convergence", weak),
        ("nikishin", nikishin),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        failed += usize::from(!v.ok);
        println!("criterion {:>2} {:<18} {}  {}", i + 1, name, if v.ok { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
