//! The sets `Γ_k = {x : |z_k(x)| = |z_{k+1}(x)|}` traced on the collapsed
//! axis `t = x^{p+1}`, where they become finite unions of intervals on one
//! half-line.

use crate::prelude::*;
use crate::symbol::Symbol;
use crate::{Error, Result};
use core::f64::consts::PI;
use num_complex::Complex64;

/// Number of intervals `n_k = ⌈(k+1)r/(p+1)⌉ - ⌊kr/p⌋`.
pub fn expected_count(p: usize, r: usize, k: usize) -> usize {
    ((k + 1) * r).div_ceil(p + 1) - (k * r) / p
}

/// Endpoint memberships forced by the arithmetic of `p`, `r`, `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Membership {
    /// `(k+1)r/(p+1)` is not an integer, so `0` lies in the set.
    pub zero_forced: bool,
    /// `kr/p` is not a non-negative integer, so `(-1)^k ∞` lies in the set.
    pub infinity_forced: bool,
}

pub fn membership_0_inf(p: usize, r: usize, k: usize) -> Membership {
    Membership { zero_forced: !((k + 1) * r).is_multiple_of(p + 1), infinity_forced: !(k * r).is_multiple_of(p) }
}

/// `10 (max b)^{(p+1)r/p}`, past which the branch moduli separate.
pub fn default_t_max(sym: &Symbol) -> f64 {
    let (p, r) = (sym.p() as f64, sym.r() as f64);
    let m = sym.diagonals().iter().flatten().fold(1.0f64, |a, b| a.max(b.abs()));
    10.0 * m.powf((p + 1.0) * r / p)
}

#[derive(Clone, Debug)]
pub struct GammaOptions {
    /// Largest `|t|` sampled; `None` picks [`default_t_max`].
    pub t_max: Option<f64>,
    /// Smallest `|t|` sampled; anything below counts as the origin.
    pub t_min: f64,
    /// Log-spaced samples per half-line.
    pub grid: usize,
    /// Which of the `p + 1` rays of the star carries the sample points.
    pub ray: usize,
    /// Absolute endpoint tolerance in `t`.
    pub tol: f64,
}

impl Default for GammaOptions {
    fn default() -> Self {
        GammaOptions { t_max: None, t_min: 1e-10, grid: 6000, ray: 0, tol: 1e-13 }
    }
}

/// An interval endpoint with its refinement diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Endpoint {
    pub t: f64,
    /// Width of the final bisection bracket (zero at `0` and `±∞`).
    pub bracket: f64,
    /// Modulus gap `g` at the endpoint.
    pub residual: f64,
}

impl Endpoint {
    fn exact(t: f64) -> Self {
        Endpoint { t, bracket: 0.0, residual: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: Endpoint,
    pub hi: Endpoint,
}

impl Interval {
    pub fn contains(&self, t: f64) -> bool {
        self.lo.t <= t && t <= self.hi.t
    }

    pub fn length(&self) -> f64 {
        self.hi.t - self.lo.t
    }
}

/// `Γ~_k` as a sorted list of intervals on `(-1)^k R_+`.
#[derive(Clone, Debug)]
pub struct StarSet {
    pub k: usize,
    /// `+1` for even `k`, `-1` for odd.
    pub parity: i8,
    pub intervals: Vec<Interval>,
    pub contains_zero: bool,
    pub unbounded: bool,
    pub expected: usize,
    /// Smallest gap between consecutive intervals, relative to `1 + |t|`.
    pub min_gap: f64,
    /// Smallest modulus gap at a sampled local minimum outside the set.
    pub min_dip: f64,
    pub t_max: f64,
    pub p: usize,
}

impl StarSet {
    pub fn count(&self) -> usize {
        self.intervals.len()
    }

    pub fn count_matches(&self) -> bool {
        self.count() == self.expected
    }

    /// Detected and expected counts when they differ.
    pub fn mismatch(&self) -> Option<(usize, usize)> {
        (!self.count_matches()).then_some((self.count(), self.expected))
    }

    pub fn contains(&self, t: f64) -> bool {
        self.intervals.iter().any(|i| i.contains(t))
    }

    /// The intervals mapped back by `t -> sign(t) |t|^{1/(p+1)}`. For even
    /// `p` this is `Γ_k ∩ R`; for odd `p` and odd `k` it is the trace on the
    /// ray `e^{iπ/(p+1)} R_+`, measured by signed modulus.
    pub fn x_intervals(&self) -> Vec<(f64, f64)> {
        let e = 1.0 / (self.p + 1) as f64;
        let back = |t: f64| t.signum() * t.abs().powf(e);
        self.intervals.iter().map(|i| (back(i.lo.t), back(i.hi.t))).collect()
    }

    /// Whether a count mismatch is explained by two intervals (or an
    /// interval and a dip) coming within `tol` of touching.
    pub fn near_tangent(&self, tol: f64) -> bool {
        self.min_gap < tol || self.min_dip < tol
    }
}

/// Samples `t -> x` on one ray of the star over a half-line of `t`.
#[derive(Clone, Copy, Debug)]
struct Ray {
    dir: Complex64,
    inv: f64,
}

impl Ray {
    fn new(p: usize, negative: bool, ray: usize) -> Self {
        let base = if negative { PI / (p + 1) as f64 } else { 0.0 };
        let turn = 2.0 * PI * (ray % (p + 1)) as f64 / (p + 1) as f64;
        Ray { dir: Complex64::from_polar(1.0, base + turn), inv: 1.0 / (p + 1) as f64 }
    }

    fn x(&self, s: f64) -> Complex64 {
        self.dir * s.powf(self.inv)
    }
}

/// `log|z_{k+1}| - log|z_k|` for every `k` at one point, and the plateau
/// thresholds `1e-8 + 1e-6 |log|z_k||`.
fn gaps(sym: &Symbol, x: Complex64) -> Result<(Vec<f64>, Vec<f64>)> {
    let b = sym.roots(x)?;
    let logs: Vec<f64> = b.roots.iter().map(|z| z.norm().ln()).collect();
    let g = logs.windows(2).map(|w| w[1] - w[0]).collect();
    let eps = logs[..logs.len() - 1].iter().map(|l| 1e-8 + 1e-6 * l.abs()).collect();
    Ok((g, eps))
}

/// Modulus gap `g_k(t)` and its threshold at a point of the collapsed axis.
pub fn modulus_gap(sym: &Symbol, k: usize, t: f64, ray: usize) -> Result<(f64, f64)> {
    if k >= sym.p() {
        return Err(Error::InvalidIndices(format!("level k = {k} needs k < p = {}", sym.p())));
    }
    let ray = Ray::new(sym.p(), t < 0.0, ray);
    let (g, eps) = gaps(sym, ray.x(t.abs()))?;
    Ok((g[k], eps[k]))
}

const FINE_EPS: f64 = 1e-8;

struct Sweep<'a> {
    sym: &'a Symbol,
    ray: Ray,
    k: usize,
    tol: f64,
}

impl Sweep<'_> {
    fn eval(&self, s: f64) -> Result<(f64, f64)> {
        let (g, e) = gaps(self.sym, self.ray.x(s))?;
        Ok((g[self.k], e[self.k]))
    }

    fn inside(&self, s: f64) -> Result<bool> {
        let (g, e) = self.eval(s)?;
        Ok(g < e)
    }

    /// Bisection on the indicator between an inside and an outside point.
    fn edge(&self, mut inside: f64, mut outside: f64) -> Result<Endpoint> {
        loop {
            let width = (outside - inside).abs();
            let tol = self.tol.max(2.0 * f64::EPSILON * inside.abs().max(outside.abs()));
            if width <= tol {
                break;
            }
            let mid = 0.5 * (inside + outside);
            if mid == inside || mid == outside {
                break;
            }
            if self.inside(mid)? {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        let (inside, outside) = self.sharpen(inside, outside)?;
        let t = 0.5 * (inside + outside);
        Ok(Endpoint { t, bracket: (outside - inside).abs(), residual: self.eval(t)?.0 })
    }

    /// Second pass on the absolute threshold alone. The plateau test admits
    /// a sliver of width `(ε/c)^2` past a square-root branch point; near the
    /// point the noise inside and the growth outside balance at `FINE_EPS`.
    fn sharpen(&self, inside: f64, outside: f64) -> Result<(f64, f64)> {
        let fine = |s: f64| -> Result<bool> { Ok(self.eval(s)?.0 < FINE_EPS) };
        let dir = (inside - outside).signum();
        let reach = 1e-6 * (1.0 + inside.abs());
        let mut step = (inside - outside).abs().max(f64::EPSILON * inside.abs());
        let mut a = inside;
        while !fine(a)? {
            if step > reach {
                return Ok((inside, outside));
            }
            a = inside + dir * step;
            step *= 4.0;
        }
        let mut b = outside;
        loop {
            let mid = 0.5 * (a + b);
            if mid == a || mid == b || (b - a).abs() <= 2.0 * f64::EPSILON * a.abs().max(b.abs()) {
                break;
            }
            if fine(mid)? {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok((a, b))
    }

    /// Golden-section minimum of `g` over `[a, b]` in `log s`.
    fn dip(&self, a: f64, b: f64) -> Result<(f64, f64, f64)> {
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let (mut lo, mut hi) = (a.ln(), b.ln());
        let mut c = hi - phi * (hi - lo);
        let mut d = lo + phi * (hi - lo);
        let mut gc = self.eval(c.exp())?;
        let mut gd = self.eval(d.exp())?;
        for _ in 0..60 {
            if gc.0 - gc.1 < 0.0 || gd.0 - gd.1 < 0.0 || hi - lo < 1e-13 {
                break;
            }
            if gc.0 < gd.0 {
                hi = d;
                d = c;
                gd = gc;
                c = hi - phi * (hi - lo);
                gc = self.eval(c.exp())?;
            } else {
                lo = c;
                c = d;
                gc = gd;
                d = lo + phi * (hi - lo);
                gd = self.eval(d.exp())?;
            }
        }
        let (s, g) = if gc.0 - gc.1 < gd.0 - gd.1 { (c.exp(), gc) } else { (d.exp(), gd) };
        Ok((s, g.0, g.1))
    }
}

fn grid_points(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

/// Detect `Γ~_k` on the half-line `(-1)^k R_+`.
pub fn gamma_k(sym: &Symbol, k: usize, opts: &GammaOptions) -> Result<StarSet> {
    Ok(gamma_levels(sym, &[k], opts)?.remove(0))
}

/// `Γ~_0, ..., Γ~_{p-1}`.
pub fn gamma_all(sym: &Symbol, opts: &GammaOptions) -> Result<Vec<StarSet>> {
    let levels: Vec<usize> = (0..sym.p()).collect();
    gamma_levels(sym, &levels, opts)
}

/// Several levels at once, sharing the grid evaluation per half-line.
pub fn gamma_levels(sym: &Symbol, levels: &[usize], opts: &GammaOptions) -> Result<Vec<StarSet>> {
    let p = sym.p();
    if let Some(k) = levels.iter().find(|k| **k >= p) {
        return Err(Error::InvalidIndices(format!("level k = {k} needs k < p = {p}")));
    }
    if opts.grid < 3 || !(opts.t_min > 0.0) {
        return Err(Error::InvalidSpec("grid needs at least three points and t_min > 0".to_string()));
    }
    let t_max = opts.t_max.unwrap_or_else(|| default_t_max(sym));
    if !(t_max > opts.t_min) {
        return Err(Error::InvalidSpec("t_max must exceed t_min".to_string()));
    }
    let s = grid_points(opts.t_min, t_max, opts.grid);
    let mut out: Vec<Option<StarSet>> = vec![None; levels.len()];
    for negative in [false, true] {
        if !levels.iter().any(|k| (k % 2 == 1) == negative) {
            continue;
        }
        let ray = Ray::new(p, negative, opts.ray);
        let mut samples = Vec::with_capacity(s.len());
        for si in &s {
            samples.push(gaps(sym, ray.x(*si))?);
        }
        for (slot, &k) in levels.iter().enumerate() {
            if (k % 2 == 1) != negative {
                continue;
            }
            let sweep = Sweep { sym, ray, k, tol: opts.tol };
            let g: Vec<(f64, f64)> = samples.iter().map(|(g, e)| (g[k], e[k])).collect();
            out[slot] = Some(detect(&sweep, &s, &g, t_max)?);
        }
    }
    Ok(out.into_iter().map(|o| o.expect("every level visited")).collect())
}

fn detect(sweep: &Sweep<'_>, s: &[f64], g: &[(f64, f64)], t_max: f64) -> Result<StarSet> {
    let (sym, k) = (sweep.sym, sweep.k);
    let negative = k % 2 == 1;
    let inside: Vec<bool> = g.iter().map(|(v, e)| v < e).collect();

    // intervals in |t|, as (lo, hi) endpoints
    let mut found: Vec<(Endpoint, Endpoint)> = Vec::new();
    let mut i = 0;
    while i < s.len() {
        if !inside[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < s.len() && inside[i + 1] {
            i += 1;
        }
        let lo = if start == 0 { Endpoint::exact(0.0) } else { sweep.edge(s[start], s[start - 1])? };
        let hi = if i + 1 == s.len() { Endpoint::exact(f64::INFINITY) } else { sweep.edge(s[i], s[i + 1])? };
        found.push((lo, hi));
        i += 1;
    }

    // short intervals hiding between samples
    let mut min_dip = f64::INFINITY;
    for i in 1..s.len() - 1 {
        if inside[i - 1] || inside[i] || inside[i + 1] {
            continue;
        }
        if !(g[i].0 <= g[i - 1].0 && g[i].0 <= g[i + 1].0) {
            continue;
        }
        let (sm, gm, em) = sweep.dip(s[i - 1], s[i + 1])?;
        if gm < em {
            let lo = sweep.edge(sm, s[i - 1])?;
            let hi = sweep.edge(sm, s[i + 1])?;
            found.push((lo, hi));
        } else {
            min_dip = min_dip.min(gm);
        }
    }
    found.sort_by(|a, b| a.0.t.total_cmp(&b.0.t));

    let mut min_gap = f64::INFINITY;
    for w in found.windows(2) {
        min_gap = min_gap.min((w[1].0.t - w[0].1.t) / (1.0 + w[0].1.t));
    }
    let contains_zero = found.first().is_some_and(|f| f.0.t == 0.0);
    let unbounded = found.last().is_some_and(|f| f.1.t.is_infinite());
    let mut intervals: Vec<Interval> = found
        .into_iter()
        .map(|(lo, hi)| {
            if negative {
                let flip = |e: Endpoint| Endpoint { t: -e.t, ..e };
                Interval { lo: flip(hi), hi: flip(lo) }
            } else {
                Interval { lo, hi }
            }
        })
        .collect();
    intervals.sort_by(|a, b| a.lo.t.total_cmp(&b.lo.t));
    Ok(StarSet {
        k,
        parity: if negative { -1 } else { 1 },
        intervals,
        contains_zero,
        unbounded,
        expected: expected_count(sym.p(), sym.r(), k),
        min_gap,
        min_dip,
        t_max,
        p: sym.p(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_counts() {
        assert_eq!((expected_count(2, 6, 0), expected_count(2, 6, 1)), (2, 1));
        assert_eq!((expected_count(2, 8, 0), expected_count(2, 8, 1)), (3, 2));
        for p in 2..6 {
            for k in 0..p {
                assert_eq!(expected_count(p, 1, k), 1);
            }
        }
    }

    #[test]
    fn forced_memberships() {
        assert!(membership_0_inf(2, 8, 0).zero_forced);
        assert!(!membership_0_inf(2, 8, 0).infinity_forced);
        assert_eq!(membership_0_inf(2, 6, 1), Membership { zero_forced: false, infinity_forced: false });
        assert!(membership_0_inf(2, 1, 1).infinity_forced);
    }

    #[test]
    fn period_one_sets() {
        let sym = Symbol::two_diagonal(2, &[1.0]).unwrap();
        let opts = GammaOptions { grid: 800, ..Default::default() };
        let g0 = gamma_k(&sym, 0, &opts).unwrap();
        assert_eq!(g0.count(), 1);
        assert!(g0.contains_zero && !g0.unbounded);
        // x^3 = 27/4 is the branch point of z^3 - x z + 1
        assert!((g0.intervals[0].hi.t - 6.75).abs() < 1e-7, "{:?}", g0.intervals);
        let g1 = gamma_k(&sym, 1, &opts).unwrap();
        assert_eq!(g1.count(), 1);
        assert!(g1.contains_zero && g1.unbounded);
        assert!(g1.intervals[0].hi.t == 0.0 && g1.intervals[0].lo.t == f64::NEG_INFINITY);
    }

    #[test]
    fn rays_agree() {
        let sym = Symbol::two_diagonal(2, &[3.0, 1.0, 5.0, 2.0, 2.0, 9.0]).unwrap();
        let a = gamma_k(&sym, 0, &GammaOptions { grid: 1500, ..Default::default() }).unwrap();
        let b = gamma_k(&sym, 0, &GammaOptions { grid: 1500, ray: 2, ..Default::default() }).unwrap();
        assert_eq!(a.count(), b.count());
        for (u, v) in a.intervals.iter().zip(&b.intervals) {
            assert!((u.lo.t - v.lo.t).abs() < 1e-7 && (u.hi.t - v.hi.t).abs() < 1e-7);
        }
    }
}
