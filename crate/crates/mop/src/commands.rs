use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{sci, Sink, Table};
use crate::suites::{self, Suite, SuiteReport, RATIO_POINTS, SLOPE_TOL, TANGENCY};
use mop_core::asymptotics::{degree_asymptotics_check, nikishin_sign_test, ratio_limit, SlopeQuantity};
use mop_core::geneig::{zeros_p, IndexTuple};
use mop_core::geometry::{gamma_k, GammaOptions, StarSet};
use mop_core::measures::{mu_density, weak_convergence_report, DensityOptions};
use mop_core::recurrence::zeros_q;
use mop_core::symbol::Symbol;
use mop_core::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Distance from `Γ~_k` beyond which counting mass is reported as outside.
pub const OUTSIDE_MARGIN: f64 = 0.02;

fn flagged(flags: Vec<String>) -> Result<(), CliError> {
    if flags.is_empty() {
        Ok(())
    } else {
        Err(CliError::Flagged(flags.join("; ")))
    }
}

fn gamma_options(cfg: &RunConfig) -> GammaOptions {
    GammaOptions { grid: cfg.grid, t_max: cfg.t_max, ..GammaOptions::default() }
}

fn levels(cfg: &RunConfig) -> Vec<usize> {
    cfg.levels().into_iter().filter(|k| *k < cfg.p).collect()
}

fn star_sets(cfg: &RunConfig, sym: &Symbol) -> Result<Vec<StarSet>, CliError> {
    let opts = gamma_options(cfg);
    let sets: Vec<_> = levels(cfg).into_par_iter().map(|k| gamma_k(sym, k, &opts)).collect();
    Ok(sets.into_iter().collect::<Result<Vec<_>, _>>()?)
}

fn mismatch_flags(sets: &[StarSet]) -> Vec<String> {
    sets.iter()
        .filter(|s| !s.count_matches() && !s.near_tangent(TANGENCY))
        .map(|s| format!("k={}: {} intervals detected, {} expected", s.k, s.count(), s.expected))
        .collect()
}

/// All `x` with `x^{p+1} = y`.
fn star_points(y: f64, p: usize) -> Vec<Complex64> {
    let q = (p + 1) as f64;
    let base = if y < 0.0 { PI } else { 0.0 };
    (0..=p).map(|j| Complex64::from_polar(y.abs().powf(1.0 / q), (base + 2.0 * PI * j as f64) / q)).collect()
}

fn point_row(series: &str, x: Complex64) -> Vec<String> {
    vec![series.to_string(), sci(x.re), sci(x.im)]
}

/// Zero scatter of `Q_n` and `P_{1,n}` plus the `Γ_k` overlay segments.
pub fn figure(cfg: &RunConfig, sink: &mut Sink) -> Result<(), CliError> {
    let spec = cfg.spec()?;
    let p = cfg.p;
    let mut flags = Vec::new();
    let scatter: Vec<_> = cfg
        .n
        .par_iter()
        .map(|&n| {
            let q = zeros_q(&spec, n)?;
            let gen = if n >= 1 { Some(zeros_p(&spec, &IndexTuple::pk(p, 1, n)?)?) } else { None };
            Ok::<_, mop_core::Error>((n, q, gen))
        })
        .collect();
    let mut zeros = Table::new(&["series", "re", "im"]);
    for item in scatter {
        let (n, q, gen) = item?;
        if q.ill_conditioned {
            flags.push(format!("zeros of Q_{n} came back visibly complex"));
        }
        let name = format!("Q{n}");
        for z in &q.zeros {
            zeros.push(point_row(&name, *z));
        }
        if let Some(g) = gen {
            let name = format!("P1_{n}");
            for _ in 0..g.m {
                zeros.push(point_row(&name, Complex64::new(0.0, 0.0)));
            }
            for y in &g.y {
                for x in star_points(*y, p) {
                    zeros.push(point_row(&name, x));
                }
            }
        }
    }
    sink.csv("zeros.csv", &zeros)?;

    let sym = Symbol::from_spec(&spec)?;
    let sets = star_sets(cfg, &sym)?;
    let mut overlay = Table::new(&["series", "re", "im"]);
    for s in &sets {
        for (i, iv) in s.intervals.iter().enumerate() {
            let (lo, hi) = (iv.lo.t, iv.hi.t);
            let ends = [star_points(lo, p), star_points(hi, p)];
            for ray in 0..=p {
                let name = format!("gamma{}/seg{i}/ray{ray}", s.k);
                overlay.push(point_row(&name, ends[0][ray]));
                overlay.push(point_row(&name, ends[1][ray]));
            }
        }
    }
    sink.csv("gamma.csv", &overlay)?;
    flags.extend(mismatch_flags(&sets));
    flagged(flags)
}

#[derive(Serialize)]
struct GammaSummary {
    k: usize,
    count: usize,
    expected: usize,
    contains_zero: bool,
    unbounded: bool,
    min_gap: f64,
    min_dip: f64,
    t_max: f64,
    /// Intervals mapped back to `x`.
    intervals_x: Vec<(f64, f64)>,
}

pub fn gamma(cfg: &RunConfig, sink: &mut Sink) -> Result<(), CliError> {
    let sym = Symbol::from_spec(&cfg.spec()?)?;
    let sets = star_sets(cfg, &sym)?;
    let mut table = Table::new(&["k", "interval", "lo_t", "hi_t", "lo_x", "hi_x", "lo_residual", "hi_residual"]);
    let mut summary = Vec::new();
    for s in &sets {
        let xs = s.x_intervals();
        for (i, (iv, x)) in s.intervals.iter().zip(&xs).enumerate() {
            table.push(vec![
                s.k.to_string(),
                i.to_string(),
                sci(iv.lo.t),
                sci(iv.hi.t),
                sci(x.0),
                sci(x.1),
                sci(iv.lo.residual),
                sci(iv.hi.residual),
            ]);
        }
        summary.push(GammaSummary {
            k: s.k,
            count: s.count(),
            expected: s.expected,
            contains_zero: s.contains_zero,
            unbounded: s.unbounded,
            min_gap: s.min_gap,
            min_dip: s.min_dip,
            t_max: s.t_max,
            intervals_x: xs,
        });
    }
    sink.csv("gamma.csv", &table)?;
    sink.json("gamma.json", &summary)?;
    flagged(mismatch_flags(&sets))
}

#[derive(Serialize)]
struct MassSummary {
    k: usize,
    mass: f64,
    expected: f64,
    min_density: f64,
}

/// Equilibrium densities on `Γ~_k`, their masses, and the weak-convergence
/// table of the zero counting measures for the configured `n`.
pub fn measure(cfg: &RunConfig, sink: &mut Sink) -> Result<(), CliError> {
    let spec = cfg.spec()?;
    let sym = Symbol::from_spec(&spec)?;
    let sets = star_sets(cfg, &sym)?;
    let tol = cfg.tolerance.unwrap_or(1e-6);
    let samples: Vec<_> = sets.par_iter().map(|g| mu_density(&sym, g, &DensityOptions::default())).collect();
    let samples = samples.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut density = Table::new(&["k", "t", "density", "weight"]);
    let mut masses = Vec::new();
    let mut flags = mismatch_flags(&sets);
    for d in &samples {
        for ((t, f), w) in d.nodes.iter().zip(&d.density).zip(&d.weights) {
            density.push(vec![d.k.to_string(), sci(*t), sci(*f), sci(*w)]);
        }
        let expected = (cfg.p - d.k) as f64 / cfg.p as f64;
        if (d.mass() - expected).abs() > tol {
            flags.push(format!("k={}: mass {} differs from {expected}", d.k, d.mass()));
        }
        masses.push(MassSummary { k: d.k, mass: d.mass(), expected, min_density: d.min_density() });
    }
    sink.csv("density.csv", &density)?;
    sink.json("masses.json", &masses)?;
    let mut weak = Table::new(&["k", "n", "discrepancy", "outside_mass"]);
    if !cfg.n.is_empty() {
        let reports: Vec<_> =
            samples.par_iter().zip(&sets).map(|(d, g)| weak_convergence_report(&spec, d, g, &cfg.n, OUTSIDE_MARGIN)).collect();
        for rep in reports {
            let rep = rep?;
            for row in &rep.rows {
                weak.push(vec![rep.k.to_string(), row.n.to_string(), sci(row.discrepancy), sci(row.outside_mass)]);
            }
        }
    }
    sink.csv("weak.csv", &weak)?;
    flagged(flags)
}

pub fn ratio(cfg: &RunConfig, sink: &mut Sink) -> Result<(), CliError> {
    let spec = cfg.spec()?;
    let sym = Symbol::from_spec(&spec)?;
    let ns = if cfg.n.is_empty() { vec![50, 100, 200] } else { cfg.n.clone() };
    let points = if cfg.points.is_empty() { RATIO_POINTS.iter().map(|[a, b]| Complex64::new(*a, *b)).collect() } else { cfg.points() };
    let ks: Vec<usize> = if cfg.k.is_empty() { (0..=cfg.p).collect() } else { cfg.k.clone() };
    let jobs: Vec<(usize, usize, Complex64)> = ks.iter().flat_map(|k| points.iter().enumerate().map(move |(i, x)| (*k, i, *x))).collect();
    let results: Vec<_> = jobs.par_iter().map(|(k, _, x)| ratio_limit(&spec, &sym, *k, *x, &ns)).collect();
    let mut table = Table::new(&["k", "point", "x_re", "x_im", "n", "ratio_re", "ratio_im", "target_re", "target_im", "error"]);
    for ((k, i, x), rows) in jobs.iter().zip(results) {
        for row in rows? {
            table.push(vec![
                k.to_string(),
                i.to_string(),
                sci(x.re),
                sci(x.im),
                row.n.to_string(),
                sci(row.ratio.re),
                sci(row.ratio.im),
                sci(row.target.re),
                sci(row.target.im),
                sci(row.error),
            ]);
        }
    }
    sink.csv("ratio.csv", &table)
}

#[derive(Serialize)]
struct PairSummary {
    k: usize,
    l: usize,
    n: usize,
    one_signed: bool,
    coupling_ok: bool,
    sign: f64,
    alpha_minus_one: f64,
    multiple_root: bool,
}

#[derive(Serialize)]
struct SlopeSummary {
    quantity: String,
    slope: f64,
    expected: f64,
    upper_bound: bool,
    ok: bool,
}

#[derive(Serialize)]
struct NikishinSummary {
    orientation: crate::config::Orientation,
    pairs: Vec<PairSummary>,
    slopes: Vec<SlopeSummary>,
    lead_ratio: Option<[f64; 2]>,
    lead_ok: Option<bool>,
    /// Why the slope table is missing.
    #[serde(skip_serializing_if = "Option::is_none")]
    slope_error: Option<String>,
}

fn quantity_name(q: SlopeQuantity) -> String {
    match q {
        SlopeQuantity::Minor { j, k } => format!("minor f_{j}(z_{k})"),
        SlopeQuantity::Stacked { k, l } => format!("stacked k={k} l={l}"),
        SlopeQuantity::Hierarchy { k, l } => format!("hierarchy f_{l},{k}"),
    }
}

/// Residues of `P_{k,l,n} / P_{k,n}` for every `k < l`, and the degree
/// slopes of the symbol minors.
pub fn nikishin(cfg: &RunConfig, sink: &mut Sink) -> Result<(), CliError> {
    let spec = cfg.spec()?;
    let oriented = cfg.oriented_spec()?;
    let n = cfg.n.first().copied().unwrap_or(60);
    let p = cfg.p;
    let pairs: Vec<(usize, usize)> = (0..p).flat_map(|k| (k + 1..=p).map(move |l| (k, l))).collect();
    let reports: Vec<_> = pairs.par_iter().map(|(k, l)| nikishin_sign_test(&oriented, *k, *l, n)).collect();
    let mut table = Table::new(&["k", "l", "n", "index", "pole", "residue"]);
    let mut summary = NikishinSummary {
        orientation: cfg.orientation,
        pairs: Vec::new(),
        slopes: Vec::new(),
        lead_ratio: None,
        lead_ok: None,
        slope_error: None,
    };
    let mut flags = Vec::new();
    for rep in reports {
        let rep = rep?;
        for (i, (pole, res)) in rep.poles.iter().zip(&rep.residues).enumerate() {
            table.push(vec![rep.k.to_string(), rep.l.to_string(), n.to_string(), i.to_string(), sci(*pole), sci(*res)]);
        }
        if !(rep.one_signed && rep.coupling_ok) {
            flags.push(format!("k={} l={}: residues are not one-signed", rep.k, rep.l));
        }
        summary.pairs.push(PairSummary {
            k: rep.k,
            l: rep.l,
            n,
            one_signed: rep.one_signed,
            coupling_ok: rep.coupling_ok,
            sign: rep.sign,
            alpha_minus_one: rep.alpha_minus_one,
            multiple_root: rep.multiple_root,
        });
    }
    let sym = Symbol::from_spec(&spec)?;
    match degree_asymptotics_check(&sym, 1e3, 1e5, cfg.tolerance.unwrap_or(SLOPE_TOL)) {
        Ok(t) => {
            for row in &t.rows {
                if !row.ok {
                    flags.push(format!("{}: slope {:.4}, expected {}", quantity_name(row.quantity), row.slope, row.expected));
                }
                summary.slopes.push(SlopeSummary {
                    quantity: quantity_name(row.quantity),
                    slope: row.slope,
                    expected: row.expected,
                    upper_bound: row.upper_bound,
                    ok: row.ok,
                });
            }
            summary.lead_ratio = Some([t.lead_ratio.re, t.lead_ratio.im]);
            summary.lead_ok = Some(t.lead_ok);
        }
        Err(e) => summary.slope_error = Some(e.to_string()),
    }
    sink.csv("residues.csv", &table)?;
    sink.json("nikishin.json", &summary)?;
    flagged(flags)
}

/// Runs a suite; the report is also written to the sink.
pub fn verify(cfg: &RunConfig, suite: Suite, sink: Option<&mut Sink>) -> Result<SuiteReport, CliError> {
    let report = suites::run(suite, cfg)?;
    if let Some(sink) = sink {
        sink.json(&format!("verify_{}.json", suite.name()), &report)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_points_solve_the_power() {
        for (y, p) in [(8.0, 2usize), (-16.0, 3), (2.5, 1)] {
            let pts = star_points(y, p);
            assert_eq!(pts.len(), p + 1);
            for x in pts {
                assert!((x.powu(p as u32 + 1) - y).norm() < 1e-12 * y.abs());
            }
        }
    }
}
