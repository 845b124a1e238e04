//! Equilibrium densities on the collapsed axis, their masses, logarithmic
//! potentials and energies, and comparison with normalized zero counting
//! measures of the generalized eigenvalue determinants.

use crate::geneig::{zeros_p, IndexTuple};
use crate::geometry::StarSet;
use crate::prelude::*;
use crate::recurrence::BandedOperator;
use crate::symbol::{Symbol, TIE_TOL};
use crate::{Error, Result};
use core::f64::consts::PI;
use num_complex::Complex64;

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

#[derive(Clone, Debug)]
pub struct DensityOptions {
    /// Gauss nodes on each half of every interval.
    pub nodes_per_half: usize,
    /// Boundary offset as a fraction of the distance to the nearest endpoint.
    pub delta: f64,
    /// Unbounded pieces are integrated up to `cutoff * (1 + |t_lo|)`; the
    /// rest comes from the argument increment.
    pub cutoff: f64,
}

impl Default for DensityOptions {
    fn default() -> Self {
        DensityOptions { nodes_per_half: 48, delta: 1e-4, cutoff: 64.0 }
    }
}

/// How the quadrature was graded toward one end of a piece.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EndKind {
    /// The origin, graded as `s^{p+1}`.
    Origin,
    /// A branch point, graded as `s^2`.
    Branch,
    /// A finite cutoff followed by an argument-increment tail.
    Cutoff,
}

/// One interval of the support with its end treatment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub lo_kind: EndKind,
    pub hi_kind: EndKind,
    /// Mass beyond the cutoff of an unbounded piece.
    pub tail: f64,
}

/// Density samples of `σ_k = dμ_k` pushed forward to `t = x^{p+1}`.
#[derive(Clone, Debug)]
pub struct DensitySample {
    pub k: usize,
    pub p: usize,
    /// Sample points in ascending `t`.
    pub nodes: Vec<f64>,
    /// `dσ_k/dt` at the nodes.
    pub density: Vec<f64>,
    /// Quadrature weights in `t`, so that `Σ weights·density` is the mass.
    pub weights: Vec<f64>,
    /// The part of the line each node stands for; cells tile each piece.
    pub cells: Vec<(f64, f64)>,
    pub pieces: Vec<Piece>,
}

impl DensitySample {
    /// Build a sample for an explicit density on the given intervals.
    pub fn from_fn(p: usize, k: usize, intervals: &[(f64, f64)], nodes_per_half: usize, mut rho: impl FnMut(f64) -> f64) -> Self {
        let mut out = DensitySample::empty(p, k);
        for &(lo, hi) in intervals {
            let piece = Piece { lo, hi, lo_kind: EndKind::Branch, hi_kind: EndKind::Branch, tail: 0.0 };
            for (t, w, cell) in piece_rule(&piece, p, nodes_per_half) {
                out.push(t, rho(t), w, cell);
            }
            out.pieces.push(piece);
        }
        out
    }

    fn empty(p: usize, k: usize) -> Self {
        DensitySample { k, p, nodes: Vec::new(), density: Vec::new(), weights: Vec::new(), cells: Vec::new(), pieces: Vec::new() }
    }

    fn push(&mut self, t: f64, rho: f64, w: f64, cell: (f64, f64)) {
        self.nodes.push(t);
        self.density.push(rho);
        self.weights.push(w);
        self.cells.push(cell);
    }

    /// Mass carried by each node.
    pub fn masses(&self) -> Vec<f64> {
        self.density.iter().zip(&self.weights).map(|(d, w)| d * w).collect()
    }

    /// Quadrature mass plus argument-increment tails.
    pub fn mass(&self) -> f64 {
        self.masses().iter().sum::<f64>() + self.pieces.iter().map(|p| p.tail).sum::<f64>()
    }

    pub fn min_density(&self) -> f64 {
        self.density.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Same nodes with the masses replaced (density rescaled per node).
    pub fn with_masses(&self, masses: &[f64]) -> Result<Self> {
        if masses.len() != self.nodes.len() {
            return Err(Error::SizeMismatch("one mass per node".to_string()));
        }
        let mut out = self.clone();
        for (i, m) in masses.iter().enumerate() {
            out.density[i] = m / out.weights[i];
        }
        Ok(out)
    }

    /// `σ_k({|t| <= s})`, by cell-wise linear interpolation of the masses.
    pub fn cdf(&self, s: f64) -> f64 {
        let mut acc = 0.0;
        for (cell, m) in self.cells.iter().zip(self.masses()) {
            let (a, b) = (cell.0.abs().min(cell.1.abs()), cell.0.abs().max(cell.1.abs()));
            if s >= b {
                acc += m;
            } else if s > a {
                acc += m * (s - a) / (b - a);
            }
        }
        for piece in &self.pieces {
            if piece.tail > 0.0 && s.is_infinite() {
                acc += piece.tail;
            }
        }
        acc
    }
}

/// Widest ratio `|hi| / |lo|` covered by a single graded rule.
const DECADE_SPLIT: f64 = 16.0;

/// `(t, weight, cell)` triples for one piece, graded toward both ends. Pieces
/// spanning many scales are cut at geometric points first.
fn piece_rule(piece: &Piece, p: usize, n: usize) -> Vec<(f64, f64, (f64, f64))> {
    let grade = |kind: EndKind| match kind {
        EndKind::Origin => (p + 1) as i32,
        EndKind::Branch => 2,
        EndKind::Cutoff => 1,
    };
    let (lo, hi) = (piece.lo, piece.hi);
    let (beta_lo, beta_hi) = (grade(piece.lo_kind), grade(piece.hi_kind));
    let one_signed = lo != 0.0 && hi != 0.0 && lo.signum() == hi.signum();
    if !one_signed {
        return graded_rule(lo, hi, beta_lo, beta_hi, n);
    }
    let (near, far) = if lo.abs() < hi.abs() { (lo, hi) } else { (hi, lo) };
    let mut cuts = vec![near];
    while (far / cuts[cuts.len() - 1]) > DECADE_SPLIT {
        cuts.push(cuts[cuts.len() - 1] * DECADE_SPLIT);
    }
    cuts.push(far);
    if lo.abs() > hi.abs() {
        cuts.reverse();
    }
    let last = cuts.len() - 2;
    let mut out = Vec::with_capacity(2 * n * (last + 1));
    for (i, w) in cuts.windows(2).enumerate() {
        let a = if i == 0 { beta_lo } else { 1 };
        let b = if i == last { beta_hi } else { 1 };
        out.extend(graded_rule(w[0], w[1], a, b, n));
    }
    out
}

/// Gauss rule on `[lo, hi]` with `t = end + (mid - end) s^beta` on each half.
fn graded_rule(lo: f64, hi: f64, beta_lo: i32, beta_hi: i32, n: usize) -> Vec<(f64, f64, (f64, f64))> {
    let (gx, gw) = gauss_legendre(n);
    let mid = 0.5 * (lo + hi);
    let mut out = Vec::with_capacity(2 * n);
    for (end, beta, flip) in [(lo, beta_lo, false), (hi, beta_hi, true)] {
        let span = mid - end;
        let map = |s: f64| end + span * s.powi(beta);
        let mut edge = 0.0;
        let mut half: Vec<(f64, f64, (f64, f64))> = gx
            .iter()
            .zip(&gw)
            .map(|(s, w)| {
                let t = map(*s);
                let jac = (span * beta as f64 * s.powi(beta - 1)).abs();
                let cell = (map(edge), map((edge + w).min(1.0)));
                edge += w;
                (t, w * jac, if cell.0 <= cell.1 { cell } else { (cell.1, cell.0) })
            })
            .collect();
        if flip {
            half.reverse();
        }
        out.extend(half);
    }
    out
}

/// Principal `(p+1)`-th root.
fn collapse_root(w: Complex64, p: usize) -> Complex64 {
    if w.norm() == 0.0 {
        return w;
    }
    w.powf(1.0 / (p + 1) as f64)
}

/// `d/dw log(y_0 ... y_k)(w)` with `y_j(w) = z_j(w^{1/(p+1)})`, plus the
/// modulus gap between branches `k` and `k+1`.
fn log_slope(sym: &Symbol, k: usize, w: Complex64) -> Result<(Complex64, f64)> {
    let p = sym.p();
    let x = collapse_root(w, p);
    let b = sym.roots(x)?;
    let dx = x / (w * (p + 1) as f64);
    let mut s = Complex64::new(0.0, 0.0);
    for j in 0..=k {
        s += b.derivatives[j] / b.roots[j];
    }
    let gap = (b.roots[k + 1].norm() - b.roots[k].norm()) / b.roots[k + 1].norm();
    Ok((s * dx, gap))
}

/// `dσ_k/dt` at a real `t`, from boundary values at `t ± iδ` with two
/// Richardson levels. `delta` is the starting offset.
pub fn density_at(sym: &Symbol, k: usize, t: f64, delta: f64) -> Result<f64> {
    density_oriented(sym, k, t, delta, false)
}

/// As [`density_at`], with the orientation of the line reversed.
pub fn density_oriented(sym: &Symbol, k: usize, t: f64, delta: f64, reversed: bool) -> Result<f64> {
    if k >= sym.p() {
        return Err(Error::InvalidIndices(format!("level k = {k} needs k < p = {}", sym.p())));
    }
    let c = (sym.p() + 1) as f64 / sym.r() as f64 / (2.0 * PI);
    let side = if reversed { -1.0 } else { 1.0 };
    let jump = |d: f64| -> Result<f64> {
        let (plus, g1) = log_slope(sym, k, Complex64::new(t, side * d))?;
        let (minus, g2) = log_slope(sym, k, Complex64::new(t, -side * d))?;
        if g1.min(g2) <= TIE_TOL {
            return Err(Error::Degenerate(format!("boundary values at t = {t} left the branch ordering")));
        }
        // (1/2πi) (S_+ - S_-) dt, with dt = side·|dt|
        Ok(side * c * ((plus - minus) / Complex64::new(0.0, 1.0)).re)
    };
    let (d0, d1, d2) = (jump(delta)?, jump(0.5 * delta)?, jump(0.25 * delta)?);
    let r0 = 2.0 * d1 - d0;
    let r1 = 2.0 * d2 - d1;
    Ok((4.0 * r1 - r0) / 3.0)
}

/// Upper boundary values `y_{j,+}(t)` and `y_{j,+}'(t)` at a real `t`,
/// computed on the axis: branches whose moduli agree to `1e-9` are ordered
/// by how their modulus responds to moving `t` into the upper half-plane.
pub fn upper_boundary(sym: &Symbol, t: f64) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let p = sym.p();
    let w = Complex64::new(t, 0.0);
    let x = collapse_root(w, p);
    let b = sym.roots(x)?;
    let dx = x / (w * (p + 1) as f64);
    let mut branches: Vec<(Complex64, Complex64, f64)> = b
        .roots
        .iter()
        .zip(&b.derivatives)
        .map(|(z, dz)| {
            let dy = dz * dx;
            // d|y|/dη for t -> t + iη
            let rate = (z.conj() * Complex64::new(0.0, 1.0) * dy).re / z.norm();
            (*z, dy, rate)
        })
        .collect();
    branches.sort_by(|a, c| {
        let (ma, mc) = (a.0.norm(), c.0.norm());
        if (ma - mc).abs() <= 1e-9 * ma.max(mc) {
            a.2.total_cmp(&c.2)
        } else {
            ma.total_cmp(&mc)
        }
    });
    Ok((branches.iter().map(|b| b.0).collect(), branches.iter().map(|b| b.1).collect()))
}

/// `dσ_k/dt` from the on-axis boundary values of [`upper_boundary`].
pub fn density_on_axis(sym: &Symbol, k: usize, t: f64) -> Result<f64> {
    let (y, dy) = upper_boundary(sym, t)?;
    let s: Complex64 = (0..=k).map(|j| dy[j] / y[j]).sum();
    Ok((sym.p() + 1) as f64 / (PI * sym.r() as f64) * s.im)
}

/// `arg(y_0 ... y_k)(t + i0)`, unwrapped continuously from `a` to `b`.
fn argument_increment(sym: &Symbol, k: usize, a: f64, b: f64) -> Result<f64> {
    let side = if a + b < 0.0 { -1.0 } else { 1.0 };
    let raw = |t: f64| -> Result<f64> {
        let (y, _) = upper_boundary(sym, t)?;
        Ok(y[..=k].iter().product::<Complex64>().arg())
    };
    let phase = |t: f64| -> Result<f64> {
        if t != 0.0 {
            return raw(t);
        }
        // the phase is analytic in x = t^{1/(p+1)}; doubling x is t * 2^{p+1}
        let tau = side * 1e-21;
        let (near, far) = (raw(tau)?, raw(tau * 2f64.powi(sym.p() as i32 + 1))?);
        let mut d = far - near;
        d -= 2.0 * PI * (d / (2.0 * PI)).round();
        Ok(near - d)
    };
    let mut total = 0.0;
    let mut t = a;
    let mut ph = phase(a)?;
    let mut step = (b - a) / 64.0;
    let mut guard = 0usize;
    while (b - t) * step.signum() > 0.0 {
        guard += 1;
        if guard > 1_000_000 {
            return Err(Error::NoConvergence("argument tracking".to_string()));
        }
        let next = if ((t + step) - b) * step.signum() > 0.0 { b } else { t + step };
        let pn = phase(next)?;
        let mut d = pn - ph;
        d -= 2.0 * PI * (d / (2.0 * PI)).round();
        if d.abs() > 0.2 && (next - t).abs() > 1e-14 * (1.0 + t.abs()) {
            step *= 0.5;
            continue;
        }
        total += d;
        t = next;
        ph = pn;
        if d.abs() < 0.05 {
            step *= 1.5;
        }
    }
    Ok(total)
}

/// `σ_k([a, b])` from the argument increment of `y_0 ... y_k` along the
/// upper side; an independent route to the quadrature mass.
pub fn mass_by_argument(sym: &Symbol, k: usize, a: f64, b: f64) -> Result<f64> {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let c = (sym.p() + 1) as f64 / (PI * sym.r() as f64);
    Ok(c * argument_increment(sym, k, lo, hi)?)
}

/// Limit of a sequence of partial sums by Wynn's epsilon algorithm; the
/// estimate comes from the highest even column.
fn wynn_limit(sums: &[f64]) -> f64 {
    let mut prev = vec![0.0; sums.len() + 1];
    let mut cur = sums.to_vec();
    let mut best = sums[sums.len() - 1];
    for col in 1..sums.len() {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let d = cur[i + 1] - cur[i];
            if d == 0.0 {
                return cur[i + 1];
            }
            next.push(prev[i + 1] + 1.0 / d);
        }
        if col % 2 == 0 {
            best = next[next.len() - 1];
        }
        prev = cur;
        cur = next;
    }
    best
}

/// Mass of `σ_k` beyond `|t| = s` on an unbounded piece. Increments over
/// `[16^i s, 16^{i+1} s]` decay like a sum of geometric sequences (a power
/// law in `t` with power corrections), so the partial sums are extrapolated
/// with Wynn's epsilon algorithm until two successive estimates agree.
fn tail_mass(sym: &Symbol, k: usize, s: f64, sign: f64) -> Result<f64> {
    let mut sums = Vec::new();
    let mut acc = 0.0;
    let mut lo = s;
    let mut last: Option<f64> = None;
    for _ in 0..14 {
        let hi = lo * 16.0;
        let (a, b) = if sign > 0.0 { (lo, hi) } else { (-hi, -lo) };
        let piece = mass_by_argument(sym, k, a, b)?;
        acc += piece;
        if piece.abs() < 1e-14 {
            return Ok(acc);
        }
        sums.push(acc);
        if sums.len() >= 5 {
            let est = wynn_limit(&sums);
            if let Some(old) = last {
                if (est - old).abs() < 1e-10 {
                    return Ok(est);
                }
            }
            last = Some(est);
        }
        lo = hi;
    }
    Err(Error::NoConvergence("unbounded tail of the density".to_string()))
}

/// Density of `σ_k` on the intervals of `Γ~_k`.
pub fn mu_density(sym: &Symbol, gamma: &StarSet, opts: &DensityOptions) -> Result<DensitySample> {
    let (p, k) = (sym.p(), gamma.k);
    let sign = gamma.parity as f64;
    let mut out = DensitySample::empty(p, k);
    for iv in &gamma.intervals {
        // work with |t|: near is the end closest to the origin
        let (near, far) = (iv.lo.t.abs().min(iv.hi.t.abs()), iv.lo.t.abs().max(iv.hi.t.abs()));
        let near_kind = if near == 0.0 { EndKind::Origin } else { EndKind::Branch };
        let (far, far_kind, tail) = if far.is_infinite() {
            let cut = opts.cutoff * (1.0 + near);
            (cut, EndKind::Cutoff, tail_mass(sym, k, cut, sign)?)
        } else {
            (far, EndKind::Branch, 0.0)
        };
        let abs_piece = Piece { lo: near, hi: far, lo_kind: near_kind, hi_kind: far_kind, tail };
        let mut rows = Vec::new();
        for (u, w, cell) in piece_rule(&abs_piece, p, opts.nodes_per_half) {
            let d = (u - near).min(if far_kind == EndKind::Cutoff { f64::INFINITY } else { far - u });
            let delta = opts.delta * d.min(far - near).max(1e-300);
            let t = sign * u;
            // offsets too small to separate the branches: use the on-axis boundary values
            let rho = match density_at(sym, k, t, delta) {
                Err(Error::Degenerate(_)) => density_on_axis(sym, k, t)?,
                other => other?,
            };
            rows.push((t, rho, w, (sign * cell.0, sign * cell.1)));
        }
        if sign < 0.0 {
            rows.reverse();
        }
        for (t, rho, w, (a, b)) in rows {
            out.push(t, rho, w, (a.min(b), a.max(b)));
        }
        let piece = if sign > 0.0 { abs_piece } else { Piece { lo: -far, hi: -near, lo_kind: far_kind, hi_kind: near_kind, tail } };
        out.pieces.push(piece);
    }
    Ok(out)
}

/// A finite positive combination of point masses on the collapsed axis.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    pub atoms: Vec<(Complex64, f64)>,
}

impl DiscreteMeasure {
    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }
}

/// Logarithmic potential `-∫ log|w - s| dν(s)`.
pub trait LogPotential {
    fn log_potential(&self, w: Complex64) -> f64;

    /// Potential of the rotation-invariant lift to the star, at `x`:
    /// `-(1/(p+1)) ∫ log|x^{p+1} - t| dν(t)`.
    fn star_potential(&self, x: Complex64, p: usize) -> f64 {
        self.log_potential(x.powu(p as u32 + 1)) / (p + 1) as f64
    }
}

impl LogPotential for DiscreteMeasure {
    fn log_potential(&self, w: Complex64) -> f64 {
        let mut acc = 0.0;
        for (s, m) in &self.atoms {
            let d = (w - s).norm();
            if d == 0.0 {
                return f64::INFINITY;
            }
            acc -= m * d.ln();
        }
        acc
    }
}

impl LogPotential for DensitySample {
    fn log_potential(&self, w: Complex64) -> f64 {
        let mut acc = 0.0;
        for (cell, m) in self.cells.iter().zip(self.masses()) {
            acc -= m * cell_log_mean(w, cell.0, cell.1);
        }
        acc
    }
}

/// Mean of `log|w - t|` over `t` uniform in `[a, b]`.
fn cell_log_mean(w: Complex64, a: f64, b: f64) -> f64 {
    let h = b - a;
    if h <= 0.0 {
        return (w - a).norm().ln();
    }
    // ∫ log|w - t| dt = Re[(t - w) log(t - w) - (t - w)]
    let anti = |t: f64| {
        let u = Complex64::new(t, 0.0) - w;
        if u.norm() == 0.0 {
            0.0
        } else {
            (u * u.ln() - u).re
        }
    };
    (anti(b) - anti(a)) / h
}

/// `G(u) = u^2/2 log|u| - 3u^2/4`, so `G'' = log|u|`.
fn second_antiderivative(u: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        0.5 * u * u * u.abs().ln() - 0.75 * u * u
    }
}

/// `∫∫ log|x - y|` over `x ∈ [a, b]`, `y ∈ [c, d]`.
fn cell_pair_log(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let g = second_antiderivative;
    g(b - c) - g(a - c) - g(b - d) + g(a - d)
}

/// `I(μ, ν) = ∫∫ log(1/|s - t|) dμ(s) dν(t)` on the collapsed axis, with
/// each node's mass spread uniformly over its cell.
pub fn mutual_energy(a: &DensitySample, b: &DensitySample) -> f64 {
    let (ma, mb) = (a.masses(), b.masses());
    let mut acc = 0.0;
    for (ca, wa) in a.cells.iter().zip(&ma) {
        for (cb, wb) in b.cells.iter().zip(&mb) {
            let (la, lb) = (ca.1 - ca.0, cb.1 - cb.0);
            let mean = if la > 0.0 && lb > 0.0 {
                cell_pair_log(ca.0, ca.1, cb.0, cb.1) / (la * lb)
            } else {
                cell_log_mean(Complex64::new(0.5 * (ca.0 + ca.1), 0.0), cb.0, cb.1)
            };
            acc -= wa * wb * mean;
        }
    }
    acc
}

/// `J = Σ I(ν_k) - Σ I(ν_k, ν_{k+1})` for the rotation-invariant lifts to
/// the star, i.e. the collapsed-axis energies divided by `p + 1`. The
/// masses must be `(p-k)/p`.
pub fn energy(samples: &[DensitySample]) -> Result<f64> {
    let p = samples.first().map(|s| s.p).ok_or_else(|| Error::Admissibility("empty vector".to_string()))?;
    if samples.len() != p {
        return Err(Error::Admissibility(format!("need {p} measures, got {}", samples.len())));
    }
    for (k, s) in samples.iter().enumerate() {
        let want = (p - k) as f64 / p as f64;
        if (s.mass() - want).abs() > 1e-6 {
            return Err(Error::Admissibility(format!("level {k} has mass {} instead of {want}", s.mass())));
        }
        if s.min_density() < -1e-9 {
            return Err(Error::Admissibility(format!("level {k} has negative density")));
        }
    }
    let mut j = 0.0;
    for s in samples {
        j += mutual_energy(s, s);
    }
    for w in samples.windows(2) {
        j -= mutual_energy(&w[0], &w[1]);
    }
    Ok(j / (p + 1) as f64)
}

/// Normalized zero counting measure `(1/n) Σ δ` of `P_{k,n}`, pushed to the
/// collapsed axis: each nonzero `y` stands for `p + 1` zeros in `x`.
#[derive(Clone, Debug)]
pub struct CountingMeasure {
    pub k: usize,
    pub n: usize,
    pub p: usize,
    pub measure: DiscreteMeasure,
}

impl CountingMeasure {
    pub fn new(h: &dyn BandedOperator, k: usize, n: usize) -> Result<Self> {
        let p = h.depth();
        let zeros = zeros_p(h, &IndexTuple::pk(p, k, n)?)?;
        let unit = 1.0 / n as f64;
        let mut atoms: Vec<(Complex64, f64)> = zeros.y.iter().map(|y| (Complex64::new(*y, 0.0), (p + 1) as f64 * unit)).collect();
        if zeros.m > 0 {
            atoms.push((Complex64::new(0.0, 0.0), zeros.m as f64 * unit));
        }
        atoms.sort_by(|a, b| a.0.re.abs().total_cmp(&b.0.re.abs()));
        Ok(CountingMeasure { k, n, p, measure: DiscreteMeasure { atoms } })
    }

    pub fn mass(&self) -> f64 {
        self.measure.mass()
    }

    /// The degree bound `mass <= (p-k)/p + 1/n`.
    pub fn within_degree_bound(&self) -> bool {
        self.mass() <= (self.p - self.k) as f64 / self.p as f64 + 1.0 / self.n as f64 + 1e-12
    }
}

impl LogPotential for CountingMeasure {
    fn log_potential(&self, w: Complex64) -> f64 {
        self.measure.log_potential(w)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeakConvergenceRow {
    pub n: usize,
    /// `sup_s |F_n(s) - F(s)|` for the distribution functions in `|t|`.
    pub discrepancy: f64,
    /// Counting mass farther than `margin` from `Γ~_k`.
    pub outside_mass: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeakConvergenceReport {
    pub k: usize,
    pub rows: Vec<WeakConvergenceRow>,
    /// Discrepancies strictly decrease along `rows`.
    pub decreasing: bool,
}

/// Sup-distance between the distribution functions of `μ_{k,n}` and `μ_k`
/// along `|t|`, for each `n`.
pub fn weak_convergence_report(
    h: &dyn BandedOperator,
    sample: &DensitySample,
    gamma: &StarSet,
    ns: &[usize],
    margin: f64,
) -> Result<WeakConvergenceReport> {
    let k = sample.k;
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let cm = CountingMeasure::new(h, k, n)?;
        let mut cum = 0.0;
        let mut sup: f64 = 0.0;
        let mut outside = 0.0;
        for (s, m) in &cm.measure.atoms {
            let t = s.re;
            let f = sample.cdf(t.abs());
            sup = sup.max((cum - f).abs());
            cum += m;
            sup = sup.max((cum - f).abs());
            let near = gamma.intervals.iter().any(|iv| t >= iv.lo.t - margin && t <= iv.hi.t + margin);
            if !near {
                outside += m;
            }
        }
        sup = sup.max((cum - sample.cdf(f64::INFINITY)).abs());
        rows.push(WeakConvergenceRow { n, discrepancy: sup, outside_mass: outside });
    }
    let decreasing = rows.windows(2).all(|w| w[1].discrepancy < w[0].discrepancy);
    Ok(WeakConvergenceReport { k, rows, decreasing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{gamma_k, GammaOptions};

    #[test]
    fn gauss_integrates_polynomials() {
        let (x, w) = gauss_legendre(7);
        for d in 0..14 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(d)).sum();
            assert!((q - 1.0 / (d + 1) as f64).abs() < 1e-14, "degree {d}");
        }
    }

    #[test]
    fn uniform_energy() {
        let s = DensitySample::from_fn(2, 0, &[(0.0, 1.0)], 40, |_| 1.0);
        assert!((s.mass() - 1.0).abs() < 1e-13);
        let e = mutual_energy(&s, &s);
        assert!((e - 1.5).abs() < 1e-3, "{e}");
    }

    #[test]
    fn point_mass_potential() {
        let m = DiscreteMeasure { atoms: vec![(Complex64::new(0.0, 0.0), 1.0)] };
        assert!((m.log_potential(Complex64::new(core::f64::consts::E, 0.0)) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn period_one_masses() {
        let sym = Symbol::two_diagonal(2, &[0.5]).unwrap();
        let opts = GammaOptions { grid: 1000, ..Default::default() };
        for k in 0..2 {
            let g = gamma_k(&sym, k, &opts).unwrap();
            let d = mu_density(&sym, &g, &DensityOptions::default()).unwrap();
            let want = (2 - k) as f64 / 2.0;
            assert!((d.mass() - want).abs() < 1e-6, "k={k} mass {}", d.mass());
            assert!(d.min_density() > -1e-9);
        }
    }

    #[test]
    fn wynn_removes_two_geometric_components() {
        let sums: Vec<f64> = (1..=10)
            .scan(0.0, |s, i| {
                *s += 0.4f64.powi(i) + 0.5f64.powi(i);
                Some(*s)
            })
            .collect();
        let want = 0.4 / 0.6 + 1.0;
        assert!((wynn_limit(&sums) - want).abs() < 1e-12);
        assert!((sums[9] - want).abs() > 1e-4);
    }

    #[test]
    fn cubic_masses_with_wide_pieces() {
        for b in [&[2.2894][..], &[2.9498, 2.3169]] {
            let sym = Symbol::two_diagonal(3, b).unwrap();
            for k in 0..3 {
                let g = gamma_k(&sym, k, &GammaOptions::default()).unwrap();
                let d = mu_density(&sym, &g, &DensityOptions::default()).unwrap();
                let want = (3 - k) as f64 / 3.0;
                assert!((d.mass() - want).abs() < 1e-9, "b={b:?} k={k} mass {}", d.mass());
            }
        }
    }

    #[test]
    fn geometric_cuts_tile_the_piece() {
        let piece = Piece { lo: -64.0, hi: -1e-3, lo_kind: EndKind::Cutoff, hi_kind: EndKind::Branch, tail: 0.0 };
        let rule = piece_rule(&piece, 3, 8);
        assert_eq!(rule.len(), 2 * 8 * 4);
        let total: f64 = rule.iter().map(|r| r.1).sum();
        assert!((total - (64.0 - 1e-3)).abs() < 1e-12);
        assert!(rule.windows(2).all(|w| w[0].0 < w[1].0 && (w[0].2 .1 - w[1].2 .0).abs() < 1e-12));
    }

    #[test]
    fn orientation_and_argument_route() {
        let sym = Symbol::two_diagonal(2, &[3.0, 1.0, 5.0, 2.0, 2.0, 9.0]).unwrap();
        let g = gamma_k(&sym, 0, &GammaOptions { grid: 2000, ..Default::default() }).unwrap();
        let iv = g.intervals[1];
        let mid = 0.5 * (iv.lo.t + iv.hi.t);
        let a = density_oriented(&sym, 0, mid, 1e-5, false).unwrap();
        let b = density_oriented(&sym, 0, mid, 1e-5, true).unwrap();
        assert!(a > 0.0 && (a - b).abs() < 1e-9 * a);
        let d = mu_density(&sym, &g, &DensityOptions::default()).unwrap();
        let by_arg: f64 = g.intervals.iter().map(|iv| mass_by_argument(&sym, 0, iv.lo.t, iv.hi.t).unwrap()).sum();
        assert!((d.mass() - by_arg).abs() < 1e-6, "{} vs {by_arg}", d.mass());
    }
}
