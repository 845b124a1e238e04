//! Closed-form evaluation of `Q_n` through the branches of the symbol, the
//! ratio and strong limits of the banded determinants, subspace (Poincaré)
//! iteration of the period map, and the hierarchy of boundary-minor ratios
//! together with its finite-`n` surrogates and residue signs.

use crate::geneig::{deflated_p, det_p, parity_root, zeros_p, IndexTuple};
use crate::linalg::CMat;
use crate::prelude::*;
use crate::recurrence::{eval_q, eval_q_shifted, BandedOperator, RecurrenceSpec};
use crate::scalar::ScaledScalar;
use crate::symbol::{RootBundle, Symbol, TIE_TOL};
use crate::{Error, Result};
use core::f64::consts::PI;
use num_complex::Complex64;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

/// Denominator determinants below this fraction of their Hadamard bound are
/// flagged as candidate removable poles.
pub const SMALL_DENOMINATOR: f64 = 1e-10;
const STAGNATION: f64 = 1e-4;

fn sign(e: usize) -> f64 {
    if e.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn distinct_roots(sym: &Symbol, x: Complex64) -> Result<RootBundle> {
    let b = sym.roots(x)?;
    let z = &b.roots;
    let span = z.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for i in 0..z.len() {
        for k in i + 1..z.len() {
            if (z[i] - z[k]).norm() <= TIE_TOL * span {
                return Err(Error::Degenerate(format!("branches {i} and {k} collide at x = {x}")));
            }
        }
    }
    Ok(b)
}

/// `Q_{rn+j}(x)` from the sum over the `p + 1` branches:
///
/// `(-1)^{r+j} / f_p * sum_k det F^{r-1,j}(z_k) / prod_{i != k} (z_k - z_i) * z_k^{-n-1}`.
///
/// Fails with [`Error::Degenerate`] when two branches coincide at `x`.
pub fn widom_eval(sym: &Symbol, n: usize, j: usize, x: Complex64) -> Result<ScaledScalar> {
    let r = sym.r();
    if j >= r {
        return Err(Error::InvalidIndices(format!("residue j = {j} must be below the period {r}")));
    }
    let b = distinct_roots(sym, x)?;
    let z = &b.roots;
    let mut acc = ScaledScalar::ZERO;
    for (k, zk) in z.iter().enumerate() {
        let den: Complex64 = z.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, zi)| zk - zi).product();
        let term = ScaledScalar::new(sym.minor(r - 1, j, *zk, x) / den) * ScaledScalar::new(*zk).powi(-(n as i64) - 1);
        acc = acc + term;
    }
    Ok(acc.mul_complex(Complex64::new(sign(r + j) / sym.lead(), 0.0)))
}

/// Limit of `Q_{rn+j}(x) z_0(x)^{n+1}`.
pub fn strong_limit(sym: &Symbol, j: usize, x: Complex64) -> Result<Complex64> {
    let r = sym.r();
    if j >= r {
        return Err(Error::InvalidIndices(format!("residue j = {j} must be below the period {r}")));
    }
    let b = distinct_roots(sym, x)?;
    let z0 = b.roots[0];
    let den: Complex64 = b.roots[1..].iter().map(|zi| z0 - zi).product();
    Ok(sym.minor(r - 1, j, z0, x) / den * (sign(r + j) / sym.lead()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct StrongRow {
    pub n: usize,
    /// `|Q_{rn+j} z_0^{n+1} - L| / |L|`.
    pub error: f64,
}

pub fn strong_table(h: &dyn BandedOperator, sym: &Symbol, j: usize, x: Complex64, ns: &[usize]) -> Result<Vec<StrongRow>> {
    let limit = strong_limit(sym, j, x)?;
    let z0 = sym.roots(x)?.roots[0];
    let r = sym.r();
    Ok(ns
        .iter()
        .map(|&n| {
            let scaled = eval_q(h, r * n + j, x) * ScaledScalar::new(z0).powi(n as i64 + 1);
            StrongRow { n, error: (scaled.to_complex() - limit).norm() / limit.norm() }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct RatioRow {
    pub n: usize,
    pub ratio: Complex64,
    /// `(-1)^{r(k+1)} z_0 ... z_k`.
    pub target: Complex64,
    pub error: f64,
}

/// `P_{k,n}(x) / P_{k,n+r}(x)` against the product of the `k + 1` smallest
/// branches, with the sign `(-1)^{r(k+1)}` that relates the two normalizations.
pub fn ratio_limit(h: &dyn BandedOperator, sym: &Symbol, k: usize, x: Complex64, ns: &[usize]) -> Result<Vec<RatioRow>> {
    let p = h.depth();
    let r = sym.r();
    let target = sym.roots(x)?.head_product(k) * sign(r * (k + 1));
    ns.iter()
        .map(|&n| {
            let num = det_p(h, &IndexTuple::pk(p, k, n)?, x);
            let den = det_p(h, &IndexTuple::pk(p, k, n + r)?, x);
            if den.is_zero() {
                return Err(Error::Singular);
            }
            let ratio = (num / den).to_complex();
            Ok(RatioRow { n, ratio, target, error: (ratio - target).norm() })
        })
        .collect()
}

/// One branch of the multi-column Poincaré iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct PoincareColumn {
    /// Ritz value of the period map, close to `1 / z_j`.
    pub ritz: Complex64,
    /// Branch whose `1 / z` is nearest to the Ritz value.
    pub branch: usize,
    /// `|A v - z_j^{-1} v| / |v|` for the limiting period map `A`.
    pub residual: f64,
    /// `1 - |<v, v_j>| / (|v| |v_j|)` against the eigenvector built from the symbol.
    pub misalignment: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoincareReport {
    pub x: Complex64,
    pub periods: usize,
    pub columns: Vec<PoincareColumn>,
    /// Column `j` paired with branch `j` for every `j`.
    pub identity_permutation: bool,
}

impl PoincareReport {
    pub fn max_residual(&self) -> f64 {
        self.columns.iter().map(|c| c.residual).fold(0.0, f64::max)
    }
}

fn recurrence_step(state: &mut CMat, x: Complex64, m: usize, coeff: &dyn Fn(usize, usize) -> f64) {
    // rows hold Q_{m-p}, ..., Q_m; shift up and append Q_{m+1}
    let p = state.rows() - 1;
    for c in 0..state.cols() {
        let mut next = (x - coeff(0, m)) * state[(p, c)];
        for q in 1..=p {
            if m >= q {
                next -= state[(p - q, c)] * coeff(q, m - q);
            }
        }
        for i in 0..p {
            state[(i, c)] = state[(i + 1, c)];
        }
        state[(p, c)] = next;
    }
}

fn orthonormalize(w: &mut CMat) {
    for j in 0..w.cols() {
        // second sweep restores orthogonality lost to the column growth
        for i in (0..j).chain(0..j) {
            let dot: Complex64 = (0..w.rows()).map(|s| w[(s, i)].conj() * w[(s, j)]).sum();
            for s in 0..w.rows() {
                let v = w[(s, i)];
                w[(s, j)] -= dot * v;
            }
        }
        let norm = (0..w.rows()).map(|s| w[(s, j)].norm_sqr()).sum::<f64>().sqrt();
        for s in 0..w.rows() {
            w[(s, j)] /= norm;
        }
    }
}

fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Period map of the limiting symbol on the state `(Q_{m-p}, ..., Q_m)` at
/// `m ≡ r - 1 (mod r)`.
pub fn period_map(sym: &Symbol, x: Complex64) -> CMat {
    let p = sym.p();
    let r = sym.r();
    let diags = sym.diagonals();
    let coeff = |q: usize, j: usize| diags[q][j % r];
    let mut a = CMat::identity(p + 1);
    // start deep enough that m - q never underflows
    let m0 = r * (p + 1) + r - 1;
    for s in 0..r {
        recurrence_step(&mut a, x, m0 + s, &coeff);
    }
    a
}

/// Subspace iteration of the `p + 1` polynomial solutions `Q_{n,l}` over
/// `periods` periods, normalized by an upper-triangular factor each period.
/// Ritz vectors come from back-substitution in the projected map.
pub fn poincare_iterate(h: &dyn BandedOperator, sym: &Symbol, x: Complex64, periods: usize) -> Result<PoincareReport> {
    let p = h.depth();
    let r = sym.r();
    let b = distinct_roots(sym, x)?;
    let coeff = |q: usize, j: usize| h.entry(q, j);
    // Q_{i,l} for i = 0..p, one column per start l
    let mut w = CMat::zeros(p + 1, p + 1);
    for l in 0..=p {
        let mut q = vec![C0; p + 1];
        q[l] = C1;
        for i in l..p {
            let mut next = (x - coeff(0, i)) * q[i];
            for s in 1..=p {
                if i >= s + l {
                    next -= q[i - s] * coeff(s, i - s);
                }
            }
            q[i + 1] = next;
        }
        for i in 0..=p {
            w[(i, l)] = q[i];
        }
    }
    let mut m = p;
    while m % r != r - 1 {
        recurrence_step(&mut w, x, m, &coeff);
        m += 1;
    }
    orthonormalize(&mut w);
    let limit = period_map(sym, x);
    let mut columns = Vec::new();
    let mut halfway = f64::INFINITY;
    for it in 1..=periods {
        for _ in 0..r {
            recurrence_step(&mut w, x, m, &coeff);
            m += 1;
        }
        orthonormalize(&mut w);
        if it == periods / 2 || it == periods {
            columns = ritz_columns(&w, &limit, sym, &b, x);
            if it == periods / 2 {
                halfway = columns.iter().map(|c| c.residual).fold(0.0, f64::max);
            }
        }
    }
    let worst = columns.iter().map(|c| c.residual).fold(0.0, f64::max);
    if worst > STAGNATION && worst > 0.5 * halfway {
        return Err(Error::NoConvergence(format!("Poincaré residual stalls at {worst:e} (x = {x})")));
    }
    let identity_permutation = columns.iter().enumerate().all(|(j, c)| c.branch == j);
    Ok(PoincareReport { x, periods, columns, identity_permutation })
}

fn ritz_columns(w: &CMat, a: &CMat, sym: &Symbol, b: &RootBundle, x: Complex64) -> Vec<PoincareColumn> {
    let n = w.cols();
    let t = w.adjoint().mul(&a.mul(w));
    (0..n)
        .map(|j| {
            let theta = t[(j, j)];
            let mut y = vec![C0; n];
            y[j] = C1;
            for i in (0..j).rev() {
                let s: Complex64 = (i + 1..=j).map(|c| t[(i, c)] * y[c]).sum();
                let d = t[(i, i)] - theta;
                y[i] = if d.norm() > 0.0 { -s / d } else { C0 };
            }
            let v = w.mul_vec(&y);
            let branch = (0..b.roots.len())
                .min_by(|&u, &s| {
                    let du = (b.roots[u].inv() - theta).norm();
                    let ds = (b.roots[s].inv() - theta).norm();
                    du.partial_cmp(&ds).unwrap()
                })
                .unwrap_or(0);
            let zinv = b.roots[j].inv();
            let av = a.mul_vec(&v);
            let res: Vec<Complex64> = av.iter().zip(&v).map(|(a, v)| a - zinv * v).collect();
            let residual = vec_norm(&res) / vec_norm(&v);
            let reference = state_eigenvector(sym, b.roots[j], x);
            let dot: Complex64 = reference.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            let misalignment = 1.0 - dot.norm() / (vec_norm(&reference) * vec_norm(&v));
            PoincareColumn { ritz: theta, branch, residual, misalignment }
        })
        .collect()
}

/// Floquet solution `q_{rn+i} = z^{-n} v_i` restricted to the state at the
/// end of a period, `(q_{r-1-p}, ..., q_{r-1})`.
pub fn state_eigenvector(sym: &Symbol, z: Complex64, x: Complex64) -> Vec<Complex64> {
    let p = sym.p() as i64;
    let r = sym.r() as i64;
    let v = sym.eigenvector(z, x);
    (r - 1 - p..=r - 1)
        .map(|m| {
            let block = m.div_euclid(r);
            v[m.rem_euclid(r) as usize] * z.powi(-block as i32)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CauchyNu {
    pub n: usize,
    /// `Q_{N,l}(x) / Q_N(x)`.
    pub ratio: Complex64,
    /// `f_l(z_0) / f_0(z_0)`.
    pub limit: Complex64,
    pub difference: f64,
}

/// Finite-`N` Cauchy-transform surrogate `Q_{N,l} / Q_N` and its limit.
/// `N` must be a multiple of `r (p + 1)`.
pub fn cauchy_nu(h: &dyn BandedOperator, sym: &Symbol, l: usize, x: Complex64, n: usize) -> Result<CauchyNu> {
    let p = sym.p();
    let r = sym.r();
    if !n.is_multiple_of(r * (p + 1)) {
        return Err(Error::InvalidIndices(format!("N = {n} is not a multiple of r (p + 1) = {}", r * (p + 1))));
    }
    if l > p.min(r) {
        return Err(Error::InvalidIndices(format!("l = {l} exceeds min(p, r) = {}", p.min(r))));
    }
    let ratio = (eval_q_shifted(h, n, l, x) / eval_q(h, n, x)).to_complex();
    let z0 = sym.roots(x)?.roots[0];
    let f = sym.minors_f(z0, x);
    let limit = f[l] / f[0];
    Ok(CauchyNu { n, ratio, limit, difference: (ratio - limit).norm() })
}

/// Which boundary minors fill the hierarchy determinants.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MinorFamily {
    /// `f_l = (-1)^l det F^{l-1,0}`.
    Boundary,
    /// `f~_l = (-1)^l det F^{r-1,r-l}`.
    Tilde,
}

fn minors(sym: &Symbol, family: MinorFamily, z: Complex64, x: Complex64) -> Vec<Complex64> {
    match family {
        MinorFamily::Boundary => sym.minors_f(z, x),
        MinorFamily::Tilde => sym.minors_f_tilde(z, x),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HierarchyValue {
    pub k: usize,
    pub l: usize,
    pub x: Complex64,
    pub value: Complex64,
    pub numerator: Complex64,
    pub denominator: Complex64,
    /// Hadamard bound of the denominator matrix.
    pub denominator_scale: f64,
    /// Denominator below [`SMALL_DENOMINATOR`] times its scale.
    pub small_denominator: bool,
    /// Value replaced by the average of its neighbours in a sweep.
    pub filled: bool,
}

fn check_levels(sym: &Symbol, k: usize, l: usize) -> Result<()> {
    let top = sym.p().min(sym.r());
    if k >= l || l > top {
        return Err(Error::InvalidIndices(format!("hierarchy needs k < l <= min(p, r) = {top}, got k = {k}, l = {l}")));
    }
    Ok(())
}

/// Stacked determinant with rows `f_{rows[0]}, ..., f_{rows[m]}` and columns
/// at the branch values `zs`.
pub fn stacked_det(table: &[Vec<Complex64>], rows: &[usize]) -> (Complex64, f64) {
    let n = rows.len();
    let m = CMat::from_fn(n, n, |i, j| table[j][rows[i]]);
    let scale: f64 = (0..n).map(|i| vec_norm(&(0..n).map(|j| m[(i, j)]).collect::<Vec<_>>())).product();
    (m.det(), scale)
}

/// `f_{l,k}` at explicit branch values `zs = (z_0, ..., z_k)`.
pub fn hierarchy_at(sym: &Symbol, family: MinorFamily, k: usize, l: usize, zs: &[Complex64], x: Complex64) -> Result<HierarchyValue> {
    check_levels(sym, k, l)?;
    if zs.len() != k + 1 {
        return Err(Error::InvalidIndices(format!("level {k} needs {} branch values, got {}", k + 1, zs.len())));
    }
    let table: Vec<Vec<Complex64>> = zs.iter().map(|z| minors(sym, family, *z, x)).collect();
    let mut rows: Vec<usize> = (0..k).collect();
    rows.push(l);
    let (numerator, _) = stacked_det(&table, &rows);
    rows[k] = k;
    let (denominator, denominator_scale) = stacked_det(&table, &rows);
    let small_denominator = denominator.norm() < SMALL_DENOMINATOR * denominator_scale;
    Ok(HierarchyValue {
        k,
        l,
        x,
        value: numerator / denominator,
        numerator,
        denominator,
        denominator_scale,
        small_denominator,
        filled: false,
    })
}

/// `f_{l,k}(z_0(x), ..., z_k(x), x)` by the determinant ratio.
pub fn hierarchy(sym: &Symbol, k: usize, l: usize, x: Complex64) -> Result<HierarchyValue> {
    let b = sym.roots(x)?;
    hierarchy_at(sym, MinorFamily::Boundary, k, l, &b.roots[..=k], x)
}

/// The same quantity from the layer-by-layer divided differences
/// `f_{l,k}(.., w_k) = (f_{l,k-1}(.., w_k) - f_{l,k-1}(.., w_{k-1})) / (f_{k,k-1}(.., w_k) - f_{k,k-1}(.., w_{k-1}))`.
pub fn hierarchy_recursive(sym: &Symbol, family: MinorFamily, k: usize, l: usize, zs: &[Complex64], x: Complex64) -> Result<Complex64> {
    check_levels(sym, k, l)?;
    let table: Vec<Vec<Complex64>> = zs.iter().map(|z| minors(sym, family, *z, x)).collect();
    Ok(layer(&table, k, l, &(0..=k).collect::<Vec<_>>()))
}

fn layer(table: &[Vec<Complex64>], k: usize, l: usize, cols: &[usize]) -> Complex64 {
    if k == 0 {
        let f = &table[cols[0]];
        return f[l] / f[0];
    }
    let mut a: Vec<usize> = cols[..k - 1].to_vec();
    a.push(cols[k]);
    let mut b: Vec<usize> = cols[..k - 1].to_vec();
    b.push(cols[k - 1]);
    (layer(table, k - 1, l, &a) - layer(table, k - 1, l, &b)) / (layer(table, k - 1, k, &a) - layer(table, k - 1, k, &b))
}

/// Hierarchy values along a path of points. Flagged (small-denominator)
/// values are replaced by the midpoint of their unflagged neighbours.
pub fn hierarchy_sweep(sym: &Symbol, k: usize, l: usize, xs: &[Complex64]) -> Result<Vec<HierarchyValue>> {
    let mut out: Vec<HierarchyValue> = xs.iter().map(|x| hierarchy(sym, k, l, *x)).collect::<Result<_>>()?;
    for i in 0..out.len() {
        if !out[i].small_denominator {
            continue;
        }
        let left = (0..i).rev().find(|j| !out[*j].small_denominator);
        let right = (i + 1..out.len()).find(|j| !out[*j].small_denominator);
        let fill = match (left, right) {
            (Some(a), Some(b)) => 0.5 * (out[a].value + out[b].value),
            (Some(a), None) => out[a].value,
            (None, Some(b)) => out[b].value,
            (None, None) => continue,
        };
        out[i].value = fill;
        out[i].filled = true;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Surrogate {
    pub n: usize,
    /// `P_{k,l,n}(x) / P_{k,n}(x)`.
    pub ratio: Complex64,
    /// `(-1)^{l-k}` times the tilde-minor hierarchy value of the operator's own symbol.
    pub limit: Complex64,
    pub difference: f64,
}

/// Finite-`n` surrogate of the hierarchy at `n = r m`. Passing the reflected
/// spec turns the limit into `(-1)^{l-k} f_{l,k}` of the original symbol.
pub fn hierarchy_surrogate(spec: &RecurrenceSpec, k: usize, l: usize, n: usize, x: Complex64) -> Result<Surrogate> {
    let p = spec.p();
    let sym = Symbol::from_spec(spec)?;
    let b = sym.roots(x)?;
    let hv = hierarchy_at(&sym, MinorFamily::Tilde, k, l, &b.roots[..=k], x)?;
    let limit = hv.value * sign(l - k);
    let num = det_p(spec, &IndexTuple::pkl(p, k, l, n)?, x);
    let den = det_p(spec, &IndexTuple::pk(p, k, n)?, x);
    let ratio = (num / den).to_complex();
    Ok(Surrogate { n, ratio, limit, difference: (ratio - limit).norm() / limit.norm().max(f64::MIN_POSITIVE) })
}

#[derive(Clone, Debug, PartialEq)]
pub struct JumpCheck {
    pub t: f64,
    /// `f_{l,k,+} - f_{l,k,-}` from offset boundary values.
    pub jump: Complex64,
    /// The same jump from the closed determinant form with `+`-side labels.
    pub jump_closed: Complex64,
    /// Ratio of the jumps of `f_{l,k}` and `f_{k+1,k}`.
    pub ratio: Complex64,
    /// `f_{l,k+1}` with `+`-side labels.
    pub next_level: Complex64,
    pub error: f64,
}

fn side_values(sym: &Symbol, k: usize, l: usize, x: Complex64) -> Result<(Complex64, Complex64, Vec<Complex64>)> {
    let b = sym.roots(x)?;
    let zs = &b.roots;
    let fl = hierarchy_at(sym, MinorFamily::Boundary, k, l, &zs[..=k], x)?.value;
    let fk = hierarchy_at(sym, MinorFamily::Boundary, k, k + 1, &zs[..=k], x)?.value;
    Ok((fl, fk, zs[..=k + 1].to_vec()))
}

/// Jump identity across `Γ_k` at the collapsed coordinate `t`: the ratio of
/// the jumps of `f_{l,k}` and `f_{k+1,k}` equals `f_{l,k+1}`. Boundary values
/// come from offsets `± iδ` normal to the ray, extrapolated in `δ`.
pub fn jump_identity(sym: &Symbol, k: usize, l: usize, t: f64, delta: f64) -> Result<JumpCheck> {
    check_levels(sym, k + 1, l)?;
    let p = sym.p();
    let x0 = parity_root(Complex64::new(t, 0.0), p);
    let dir = x0 / x0.norm();
    let at = |d: f64| -> Result<(Complex64, Complex64, Complex64, Complex64)> {
        let up = x0 + Complex64::new(0.0, d) * dir * x0.norm();
        let down = x0 - Complex64::new(0.0, d) * dir * x0.norm();
        let (lu, ku, zs) = side_values(sym, k, l, up)?;
        let (ld, kd, _) = side_values(sym, k, l, down)?;
        let next = hierarchy_at(sym, MinorFamily::Boundary, k + 1, l, &zs, up)?.value;
        let closed = closed_jump(sym, k, l, &zs, up);
        Ok((lu - ld, ku - kd, next, closed))
    };
    let (j1, d1, n1, c1) = at(delta)?;
    let (j2, d2, n2, c2) = at(0.5 * delta)?;
    let jump = 2.0 * j2 - j1;
    let jump_k = 2.0 * d2 - d1;
    let next_level = 2.0 * n2 - n1;
    let jump_closed = 2.0 * c2 - c1;
    let ratio = jump / jump_k;
    let error = (ratio - next_level).norm() / next_level.norm();
    Ok(JumpCheck { t, jump, jump_closed, ratio, next_level, error })
}

/// `-D_{k-1}(z_0..z_{k-1}) D^{(l)}_{k+1}(z_0..z_{k+1}) / (D_k(z_0..z_k) D_k(z_0..z_{k-1}, z_{k+1}))`.
fn closed_jump(sym: &Symbol, k: usize, l: usize, zs: &[Complex64], x: Complex64) -> Complex64 {
    let table: Vec<Vec<Complex64>> = zs.iter().map(|z| minors(sym, MinorFamily::Boundary, *z, x)).collect();
    let sub = |cols: &[usize], rows: &[usize]| -> Complex64 {
        let t: Vec<Vec<Complex64>> = cols.iter().map(|c| table[*c].clone()).collect();
        stacked_det(&t, rows).0
    };
    let head: Vec<usize> = (0..k).collect();
    let d_prev = if k == 0 { C1 } else { sub(&head, &head) };
    let mut rows_l: Vec<usize> = (0..=k).collect();
    rows_l.push(l);
    let all: Vec<usize> = (0..=k + 1).collect();
    let d_next = sub(&all, &rows_l);
    let rows_k: Vec<usize> = (0..=k).collect();
    let plus: Vec<usize> = (0..=k).collect();
    let mut minus: Vec<usize> = (0..k).collect();
    minus.push(k + 1);
    -d_prev * d_next / (sub(&plus, &rows_k) * sub(&minus, &rows_k))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidueReport {
    pub k: usize,
    pub l: usize,
    pub n: usize,
    /// Poles `x_0 = 0, x_1, ..., x_d` of `Pt_{k,l,n}(y) / (y Pt_{k,n}(y))`.
    pub poles: Vec<f64>,
    /// Residues `α_0, ..., α_d`; zero where the factor cancels.
    pub residues: Vec<f64>,
    /// Constant term `α_{-1}` at infinity.
    pub alpha_minus_one: f64,
    pub one_signed: bool,
    /// Common sign of the nonzero residues.
    pub sign: f64,
    /// `α_{-1}` is zero, or opposite to the residues for even `k` and
    /// alongside them for odd `k` (poles on the negative half-line).
    pub coupling_ok: bool,
    /// A near-double pole forced the limit-quotient fallback.
    pub multiple_root: bool,
}

/// Partial-fraction residues of `Pt_{k,l,n}(y) / (y Pt_{k,n}(y))`, where
/// `P_{k,l,n} / P_{k,n} = x^{k-l} Pt_{k,l,n}(x^{p+1}) / Pt_{k,n}(x^{p+1})`.
/// Pass the reflected spec for the orientation used by the hierarchy.
pub fn nikishin_sign_test(spec: &RecurrenceSpec, k: usize, l: usize, n: usize) -> Result<ResidueReport> {
    let p = spec.p();
    if k >= l || l > p {
        return Err(Error::InvalidIndices(format!("need k < l <= p, got k = {k}, l = {l}")));
    }
    let tk = IndexTuple::pk(p, k, n)?;
    let tkl = IndexTuple::pkl(p, k, l, n)?;
    let dk = deflated_p(spec, &tk)?;
    let dkl = deflated_p(spec, &tkl)?;
    let base = k as i64 - l as i64 + dk.m as i64;
    let shift = dkl.m as i64 - base;
    let p1 = p as i64 + 1;
    if shift < 0 || shift % p1 != 0 {
        return Err(Error::Consistency(format!("exponent {} of P_(k,l,n) is off the lattice x^{base} x^((p+1)N)", dkl.m)));
    }
    let shift = (shift / p1) as usize;
    let d = dk.degree();
    let lead_d = dk.coeffs[d];
    let deg_n = dkl.degree() + shift;
    let lead_n = dkl.coeffs[dkl.degree()];
    let numer = |y: f64| -> ScaledScalar {
        let x = parity_root(Complex64::new(y, 0.0), p);
        det_p(spec, &tkl, x) / ScaledScalar::new(x).powi(base)
    };
    let denom = |y: f64| -> ScaledScalar {
        let x = parity_root(Complex64::new(y, 0.0), p);
        det_p(spec, &tk, x) / ScaledScalar::new(x).powi(dk.m as i64)
    };
    let zeros = zeros_p(spec, &tk)?.y;
    let mut poles = vec![0.0];
    poles.extend(&zeros);
    let mut residues = Vec::with_capacity(d + 1);
    residues.push(if shift > 0 { 0.0 } else { dkl.coeffs[0] / dk.coeffs[0] });
    let mut multiple_root = false;
    for (i, xi) in zeros.iter().enumerate() {
        let gap = poles.iter().enumerate().filter(|(j, _)| *j != i + 1).map(|(_, v)| (v - xi).abs()).fold(f64::INFINITY, f64::min);
        let alpha = if gap < 1e-8 * xi.abs() {
            multiple_root = true;
            let h = 1e-6 * xi.abs();
            let y = xi + h;
            (numer(y) / denom(y)).to_complex().re * h / y
        } else {
            let mut den = ScaledScalar::from_real(lead_d * xi);
            for (j, xj) in zeros.iter().enumerate() {
                if j != i {
                    den = den * ScaledScalar::from_real(xi - xj);
                }
            }
            (numer(*xi) / den).to_complex().re
        };
        residues.push(alpha);
    }
    let top = residues.iter().map(|a| a.abs()).fold(0.0, f64::max);
    let mut alpha_minus_one = if deg_n == d + 1 { lead_n / lead_d } else { 0.0 };
    // a cancelled leading coefficient survives the float expansion as noise
    if alpha_minus_one.abs() < 1e-9 * top {
        alpha_minus_one = 0.0;
    }
    let signs: Vec<f64> = residues.iter().filter(|a| a.abs() > 1e-12 * top).map(|a| a.signum()).collect();
    let sign = signs.first().copied().unwrap_or(0.0);
    let one_signed = !signs.is_empty() && signs.iter().all(|s| *s == sign);
    let half_line = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let coupling_ok = alpha_minus_one == 0.0 || alpha_minus_one * sign * half_line <= 0.0;
    Ok(ResidueReport { k, l, n, poles, residues, alpha_minus_one, one_signed, sign, coupling_ok, multiple_root })
}

/// Whether the products `prod_n b_{pn+i}` over one period strictly decrease in `i`.
pub fn is_product_ordered(p: usize, b: &[f64]) -> bool {
    let r = b.len();
    if !r.is_multiple_of(p) {
        return false;
    }
    let prods: Vec<f64> = (0..p).map(|i| (0..r / p).map(|n| b[p * n + i]).product()).collect();
    prods.windows(2).all(|w| w[0] > w[1])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlopeQuantity {
    /// `|f_j(z_k(x), x)|`.
    Minor { j: usize, k: usize },
    /// Determinant with rows `f_0, ..., f_{k-1}, f_l` over `z_0, ..., z_k`.
    Stacked { k: usize, l: usize },
    /// `|f_{l,k}|`.
    Hierarchy { k: usize, l: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlopeRow {
    pub quantity: SlopeQuantity,
    pub slope: f64,
    pub expected: f64,
    /// `expected` is only an upper bound.
    pub upper_bound: bool,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlopeTable {
    pub rows: Vec<SlopeRow>,
    /// `f_0(z_0(x), x) / x^r` at `x = 10^4`.
    pub lead_ratio: Complex64,
    pub lead_ok: bool,
}

impl SlopeTable {
    pub fn all_ok(&self) -> bool {
        self.lead_ok && self.rows.iter().all(|r| r.ok)
    }
}

/// Least-squares slope of `log |g|` against `log |x|`.
fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Log-log slopes of branch minors, stacked determinants and hierarchy
/// values on `|x| ∈ [lo, hi]` along a direction between the rays of the two
/// stars. Needs `r` a multiple of `p` and product-ordered coefficients.
pub fn degree_asymptotics_check(sym: &Symbol, lo: f64, hi: f64, tol: f64) -> Result<SlopeTable> {
    let p = sym.p();
    let r = sym.r();
    if !sym.is_two_diagonal() || !r.is_multiple_of(p) {
        return Err(Error::InvalidSpec(format!("degree asymptotics need a two-diagonal symbol with r a multiple of p (r = {r}, p = {p})")));
    }
    let b = sym.diagonals()[p].clone();
    if !is_product_ordered(p, &b) {
        return Err(Error::InvalidSpec("coefficients are not product-ordered".to_string()));
    }
    let dir = Complex64::from_polar(1.0, PI / (2.0 * (p + 1) as f64));
    let samples = 9;
    let grid: Vec<f64> = (0..samples).map(|i| lo * (hi / lo).powf(i as f64 / (samples - 1) as f64)).collect();
    let mut series: Vec<(SlopeQuantity, f64, bool, Vec<(f64, f64)>)> = Vec::new();
    for j in 0..=p {
        for k in 0..=p {
            let (expected, bound) =
                if k <= j || (j == 0 && k == 0) { (r as f64 - j as f64, false) } else { (r as f64 - j as f64 - p as f64 - 1.0, true) };
            series.push((SlopeQuantity::Minor { j, k }, expected, bound, Vec::new()));
        }
    }
    for k in 0..=p {
        for l in k..=p {
            let expected = (0..k).map(|i| (r - i) as f64).sum::<f64>() + (r - l) as f64;
            series.push((SlopeQuantity::Stacked { k, l }, expected, false, Vec::new()));
        }
    }
    for k in 0..p {
        for l in k + 1..=p {
            series.push((SlopeQuantity::Hierarchy { k, l }, k as f64 - l as f64, false, Vec::new()));
        }
    }
    for s in &grid {
        let x = dir * *s;
        let roots = sym.roots(x)?.roots;
        let table: Vec<Vec<Complex64>> = roots.iter().map(|z| sym.minors_f_refined(*z, x)).collect();
        let lx = s.ln();
        for (q, _, _, pts) in series.iter_mut() {
            let v = match *q {
                SlopeQuantity::Minor { j, k } => table[k][j].norm(),
                SlopeQuantity::Stacked { k, l } => {
                    let mut rows: Vec<usize> = (0..k).collect();
                    rows.push(l);
                    stacked_det(&table[..=k], &rows).0.norm()
                }
                SlopeQuantity::Hierarchy { k, l } => {
                    let mut rows: Vec<usize> = (0..k).collect();
                    rows.push(l);
                    let num = stacked_det(&table[..=k], &rows).0;
                    rows[k] = k;
                    (num / stacked_det(&table[..=k], &rows).0).norm()
                }
            };
            pts.push((lx, v.ln()));
        }
    }
    let rows = series
        .into_iter()
        .map(|(quantity, expected, upper_bound, pts)| {
            let slope = fit_slope(&pts);
            let ok = if upper_bound { slope <= expected + tol } else { (slope - expected).abs() <= tol };
            SlopeRow { quantity, slope, expected, upper_bound, ok }
        })
        .collect();
    let x = Complex64::new(1e4, 0.0);
    let z0 = sym.roots(x)?.roots[0];
    let lead_ratio = sym.minors_f_refined(z0, x)[0] / x.powi(r as i32);
    let lead_ok = (lead_ratio - sign(r)).norm() <= 0.01;
    Ok(SlopeTable { rows, lead_ratio, lead_ok })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recurrence::Coefficients;
    use crate::symbol::Symbol;

    fn fig1() -> RecurrenceSpec {
        RecurrenceSpec::periodic(2, &[3.0, 1.0, 5.0, 2.0, 2.0, 9.0, 6.0, 1.0]).unwrap()
    }

    fn fig2() -> RecurrenceSpec {
        RecurrenceSpec::periodic(2, &[3.0, 2.0, 3.0, 5.0, 4.0, 1.0]).unwrap()
    }

    fn sym(spec: &RecurrenceSpec) -> Symbol {
        Symbol::from_spec(spec).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn widom_matches_recursion() {
        let specs = [
            fig1(),
            fig2(),
            RecurrenceSpec::periodic(2, &[2.0]).unwrap(),
            RecurrenceSpec::periodic(3, &[1.0, 2.0]).unwrap(),
            RecurrenceSpec::periodic(1, &[1.0, 3.0, 2.0]).unwrap(),
        ];
        for spec in &specs {
            let s = sym(spec);
            let r = s.r();
            for x in [c(1.3, 0.7), c(-2.0, 1.5), c(0.4, -3.1)] {
                for n in [0usize, 1, 5, 12] {
                    for j in 0..r {
                        let m = r * n + j;
                        let w = widom_eval(&s, n, j, x).unwrap();
                        let q = eval_q(spec, m, x);
                        let err = w.rel_diff(&q);
                        assert!(err < 1e-8, "p={} r={r} n={n} j={j} x={x}: {err:e}", spec.p());
                    }
                }
            }
        }
    }

    #[test]
    fn strong_error_decreases() {
        let spec = fig1();
        let s = sym(&spec);
        let rows = strong_table(&spec, &s, 1, c(0.5, 0.3), &[5, 10, 20]).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].error < w[0].error, "{rows:?}");
        }
        assert!(rows[2].error < 1e-8, "{rows:?}");
    }

    #[test]
    fn poincare_converges_to_branches() {
        for spec in [fig1(), fig2(), RecurrenceSpec::periodic(3, &[1.0, 2.0, 0.5, 3.0]).unwrap()] {
            let s = sym(&spec);
            for x in [c(2.0, 3.0), c(-4.0, 1.0), c(0.3, -2.0)] {
                let rep = poincare_iterate(&spec, &s, x, 400).unwrap();
                assert!(rep.identity_permutation, "{rep:?}");
                assert!(rep.max_residual() <= 1e-6, "{rep:?}");
            }
        }
    }

    #[test]
    fn poincare_tolerates_decaying_perturbation() {
        let spec = RecurrenceSpec::new(2, Coefficients::Perturbed { base: vec![3.0, 2.0, 3.0, 5.0, 4.0, 1.0], amplitude: 0.5 }).unwrap();
        let s = sym(&spec);
        let x = c(2.0, 3.0);
        let short = poincare_iterate(&spec, &s, x, 50).unwrap();
        let long = poincare_iterate(&spec, &s, x, 400).unwrap();
        assert!(long.identity_permutation);
        assert!(long.max_residual() < short.max_residual(), "{short:?} {long:?}");
        assert!(long.columns.iter().all(|c| c.misalignment < 1e-9), "{long:?}");
    }

    #[test]
    fn ratio_limit_fig2() {
        let spec = fig2();
        let s = sym(&spec);
        for x in [c(3.0, 2.0), c(-2.5, 1.0), c(0.5, 4.0), c(5.0, -1.0), c(-1.0, -3.0)] {
            for k in 0..=2 {
                let rows = ratio_limit(&spec, &s, k, x, &[48, 198]).unwrap();
                assert!(rows[1].error < rows[0].error || rows[1].error < 1e-12, "k={k} x={x} {rows:?}");
                assert!(rows[1].error < 1e-4, "k={k} x={x} {rows:?}");
            }
        }
    }

    #[test]
    fn ratio_top_level_is_constant() {
        let spec = fig1();
        let s = sym(&spec);
        let b: f64 = [3.0, 1.0, 5.0, 2.0, 2.0, 9.0, 6.0, 1.0].iter().product();
        let rows = ratio_limit(&spec, &s, 2, c(1.0, 1.0), &[16]).unwrap();
        assert!((rows[0].ratio - 1.0 / b).norm() < 1e-10 / b, "{rows:?}");
        assert!((rows[0].target - 1.0 / b).norm() < 1e-8 / b, "{rows:?}");
    }

    #[test]
    fn cauchy_surrogate_decays() {
        let spec = fig1();
        let s = sym(&spec);
        let x = c(0.5, 0.3);
        for l in 1..=2 {
            let d: Vec<f64> = [24, 48, 72].iter().map(|n| cauchy_nu(&spec, &s, l, x, *n).unwrap().difference).collect();
            assert!(d[1] < d[0] && d[2] < d[1], "l={l} {d:?}");
            let q1 = d[1] / d[0];
            let q2 = d[2] / d[1];
            assert!((q1.ln() - q2.ln()).abs() < 0.2 * q1.ln().abs(), "l={l} {d:?}");
            // far from the support the limit is reached at the first admissible N
            let far = cauchy_nu(&spec, &s, l, c(5.0, 5.0), 24).unwrap();
            assert!(far.difference < 1e-12 * far.limit.norm(), "{far:?}");
        }
        assert_eq!(cauchy_nu(&spec, &s, 0, x, 24).unwrap().ratio, C1);
        assert!(cauchy_nu(&spec, &s, 1, x, 20).is_err());
    }

    #[test]
    fn cauchy_limit_decays_like_power() {
        let spec = fig2();
        let s = sym(&spec);
        let dir = Complex64::from_polar(1.0, 0.3);
        for l in 1..=2 {
            let pts: Vec<(f64, f64)> =
                [1e2, 1e3, 1e4].iter().map(|t| (t.ln(), cauchy_nu(&spec, &s, l, dir * *t, 36).unwrap().limit.norm().ln())).collect();
            let slope = fit_slope(&pts);
            assert!((slope + l as f64).abs() < 0.05, "l={l} slope {slope}");
        }
    }

    #[test]
    fn hierarchy_level_zero_is_minor_ratio() {
        let s = sym(&fig1());
        let x = c(1.7, 0.9);
        let z0 = s.roots(x).unwrap().roots[0];
        let f = s.minors_f(z0, x);
        for l in 1..=2 {
            let h = hierarchy(&s, 0, l, x).unwrap();
            assert!((h.value - f[l] / f[0]).norm() < 1e-12 * h.value.norm());
        }
    }

    #[test]
    fn hierarchy_symmetric_and_recursive() {
        let s = sym(&RecurrenceSpec::periodic(3, &[1.0, 2.0, 4.0]).unwrap());
        let x = c(0.8, 1.1);
        let z = s.roots(x).unwrap().roots;
        for (k, l) in [(1, 2), (1, 3), (2, 3)] {
            let zs: Vec<Complex64> = z[..=k].to_vec();
            let mut swapped = zs.clone();
            swapped.reverse();
            let a = hierarchy_at(&s, MinorFamily::Boundary, k, l, &zs, x).unwrap().value;
            let b = hierarchy_at(&s, MinorFamily::Boundary, k, l, &swapped, x).unwrap().value;
            assert!((a - b).norm() <= 1e-12 * a.norm(), "k={k} l={l}");
            let rec = hierarchy_recursive(&s, MinorFamily::Boundary, k, l, &zs, x).unwrap();
            assert!((a - rec).norm() <= 1e-10 * a.norm(), "k={k} l={l} {a} {rec}");
        }
    }

    #[test]
    fn surrogate_approaches_hierarchy() {
        let spec = fig2();
        let refl = spec.reflected().unwrap();
        let s = sym(&spec);
        let x = c(1.0, 0.6);
        for (k, l) in [(0, 1), (0, 2), (1, 2)] {
            let target = hierarchy(&s, k, l, x).unwrap().value * sign(l - k);
            let a = hierarchy_surrogate(&refl, k, l, 24, x).unwrap();
            let b = hierarchy_surrogate(&refl, k, l, 48, x).unwrap();
            assert!((a.limit - target).norm() < 1e-9 * target.norm(), "k={k} l={l} {a:?} {target}");
            assert!(b.difference < a.difference, "k={k} l={l} {a:?} {b:?}");
            assert!(b.difference < 1e-3, "k={k} l={l} {b:?}");
        }
    }

    #[test]
    fn residues_one_signed() {
        let spec = RecurrenceSpec::periodic(2, &[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert!(is_product_ordered(2, &[4.0, 1.0, 3.0, 2.0]));
        let refl = spec.reflected().unwrap();
        for (k, l) in [(0, 1), (0, 2), (1, 2)] {
            let rep = nikishin_sign_test(&refl, k, l, 60).unwrap();
            assert!(rep.one_signed, "{rep:?}");
            assert!(rep.coupling_ok, "{rep:?}");
        }
    }

    #[test]
    fn degree_slopes() {
        let s = sym(&fig2());
        let table = degree_asymptotics_check(&s, 1e3, 1e5, 0.05).unwrap();
        for row in &table.rows {
            assert!(row.ok, "{row:?}");
        }
        assert!(table.lead_ok, "{:?}", table.lead_ratio);
        assert!(degree_asymptotics_check(&sym(&RecurrenceSpec::periodic(2, &[1.0, 3.0, 2.0, 5.0]).unwrap()), 1e3, 1e5, 0.05).is_err());
        assert!(degree_asymptotics_check(&sym(&RecurrenceSpec::periodic(2, &[1.0, 3.0, 2.0]).unwrap()), 1e3, 1e5, 0.05).is_err());
    }

    #[test]
    fn jump_identity_on_first_contour() {
        let s = sym(&fig2());
        let set = crate::geometry::gamma_k(&s, 0, &crate::geometry::GammaOptions::default()).unwrap();
        let (lo, hi) = (set.intervals[0].lo.t, set.intervals[0].hi.t);
        for t in [lo + 0.3 * (hi - lo), lo + 0.6 * (hi - lo)] {
            let j = jump_identity(&s, 0, 2, t, 1e-6).unwrap();
            assert!(j.error < 1e-6, "{j:?}");
            let closed = (j.jump - j.jump_closed).norm().min((j.jump + j.jump_closed).norm());
            assert!(closed < 1e-5 * j.jump.norm(), "{j:?}");
        }
    }

    #[test]
    fn sweep_fills_flagged_points() {
        let s = sym(&fig2());
        let xs: Vec<Complex64> = (1..20).map(|i| c(0.3 * i as f64, 0.7)).collect();
        let out = hierarchy_sweep(&s, 1, 2, &xs).unwrap();
        assert!(out.iter().filter(|v| v.small_denominator).count() < xs.len() / 2);
        assert!(out.iter().all(|v| v.value.re.is_finite()));
    }
}
