//! Generalized eigenvalue polynomials: determinants of `H_n - x I` with
//! leading rows and selected columns removed, their lacunary structure,
//! zeros, the cyclic block-product route and interlacing checks.

use crate::linalg::{band_pivots, band_pivots_natural, eigenvalues, solve, BandRow, CMat};
use crate::poly::{chebyshev_nodes, newton_interpolate, real_poly_roots, Poly};
use crate::prelude::*;
use crate::recurrence::{BandedOperator, RecurrenceSpec};
use crate::scalar::{Field, Ring, ScaledScalar};
use crate::{Error, Result};
use alloc::collections::BTreeMap;
use num_complex::Complex64;
use num_rational::BigRational;

/// Strictly increasing indices `n_0 < ... < n_k` with `n_k - n_0 <= p`.
/// The first `k` entries name the removed columns of `H_{n_k} - x I`; the
/// first `k` rows are removed as well.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IndexTuple(Vec<usize>);

impl IndexTuple {
    pub fn new(p: usize, indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidIndices("empty tuple".to_string()));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidIndices(format!("{indices:?} is not strictly increasing")));
        }
        if indices.len() > p + 1 {
            return Err(Error::InvalidIndices(format!("tuple {indices:?} longer than p + 1 = {}", p + 1)));
        }
        if indices[indices.len() - 1] - indices[0] > p {
            return Err(Error::InvalidIndices(format!("{indices:?} spans more than p = {p}")));
        }
        Ok(IndexTuple(indices))
    }

    /// `(n - k, ..., n)`, the tuple of `P_{k,n}`.
    pub fn pk(p: usize, k: usize, n: usize) -> Result<Self> {
        if k > p || n < k {
            return Err(Error::InvalidIndices(format!("P_(k={k}, n={n}) needs k <= p and n >= k")));
        }
        Self::new(p, (n - k..=n).collect())
    }

    /// `(n - l, n - k + 1, ..., n)`, the tuple of `P_{k,l,n}` for `k < l <= p`.
    /// For `k = 0` this is the single index `n - l`.
    pub fn pkl(p: usize, k: usize, l: usize, n: usize) -> Result<Self> {
        if k >= l || l > p || n < l {
            return Err(Error::InvalidIndices(format!("P_(k={k}, l={l}, n={n}) needs k < l <= p, n >= l")));
        }
        let mut v = vec![n - l];
        v.extend(n + 1 - k..=n);
        Self::new(p, v)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    /// Number of removed rows.
    pub fn k(&self) -> usize {
        self.0.len() - 1
    }

    /// Matrix order before removal.
    pub fn n(&self) -> usize {
        self.0[self.0.len() - 1]
    }

    /// Order of the reduced square matrix.
    pub fn size(&self) -> usize {
        self.n() - self.k()
    }

    /// `sum_{i<k} (n + i - k - n_i)`, the exponent shift of the tuple.
    pub fn shift(&self) -> usize {
        let n = self.n();
        let k = self.k();
        self.0[..k].iter().enumerate().map(|(i, ni)| n + i - k - ni).sum()
    }
}

fn reduced_rows<S: Field>(h: &dyn BandedOperator, t: &IndexTuple, x: &S) -> Vec<BandRow<S>> {
    let p = h.depth();
    let n = t.n();
    let k = t.k();
    let skip = &t.indices()[..k];
    let col = |j: usize| j - skip.iter().filter(|s| **s < j).count();
    (k..n)
        .map(|i| {
            let lo = i.saturating_sub(p);
            let hi = (i + 1).min(n - 1);
            let mut start = None;
            let mut vals = Vec::with_capacity(p + 2);
            for j in lo..=hi {
                if skip.contains(&j) {
                    continue;
                }
                let v = if j == i + 1 {
                    S::one()
                } else if j == i {
                    S::from_real(h.entry(0, i)) - x.clone()
                } else {
                    S::from_real(h.entry(i - j, j))
                };
                if start.is_none() {
                    start = Some(col(j));
                }
                vals.push(v);
            }
            BandRow { start: start.unwrap_or(0), vals }
        })
        .collect()
}

/// `P^{(n_0..n_k)}(x)` by pivoted banded elimination.
pub fn det_p(h: &dyn BandedOperator, t: &IndexTuple, x: Complex64) -> ScaledScalar {
    if t.size() == 0 {
        return ScaledScalar::ONE;
    }
    let (piv, odd) = band_pivots_natural(reduced_rows(h, t, &x));
    let mut acc = ScaledScalar::ONE;
    for v in piv {
        acc = acc * ScaledScalar::new(v);
    }
    if odd {
        -acc
    } else {
        acc
    }
}

/// Same determinant over any field, e.g. exact rationals.
pub fn det_p_field<S: Field>(h: &dyn BandedOperator, t: &IndexTuple, x: &S) -> S {
    if t.size() == 0 {
        return S::one();
    }
    let (piv, odd) = band_pivots(reduced_rows(h, t, x));
    let mut acc = S::one();
    for v in piv {
        acc = acc * v;
    }
    if odd {
        -acc
    } else {
        acc
    }
}

/// Exact value at a rational point.
pub fn det_p_exact(h: &dyn BandedOperator, t: &IndexTuple, x: &BigRational) -> BigRational {
    det_p_field(h, t, x)
}

fn cofactor<R: Ring>(h: &dyn BandedOperator, t: &[usize], minus_x: &R, memo: &mut BTreeMap<Vec<usize>, R>) -> R {
    let k = t.len() - 1;
    let nk = t[k];
    if nk == k {
        return R::one();
    }
    if let Some(v) = memo.get(t) {
        return v.clone();
    }
    let p = h.depth();
    let two_diag = h.two_diagonal();
    let row = nk - 1 - k;
    let head = &t[..k];
    let mut acc = R::zero();
    for j in 1..=(p + 1).min(nk) {
        let c = nk - j;
        if head.contains(&c) {
            continue;
        }
        let a = h.entry(j - 1, c);
        let entry = if j == 1 {
            if two_diag && p > 0 {
                minus_x.clone()
            } else {
                R::from_real(a) + minus_x.clone()
            }
        } else {
            if a == 0.0 {
                continue;
            }
            R::from_real(a)
        };
        let before = head.iter().filter(|s| **s < c).count();
        let colpos = c - before;
        let mut nt = Vec::with_capacity(k + 1);
        nt.extend_from_slice(&head[..before]);
        nt.push(c);
        nt.extend_from_slice(&head[before..]);
        let term = entry * cofactor(h, &nt, minus_x, memo);
        acc = if (row + colpos) % 2 == 1 { acc - term } else { acc + term };
    }
    memo.insert(t.to_vec(), acc.clone());
    acc
}

/// `P^{(n_0..n_k)}` by the memoized last-row cofactor recursion, seeded by
/// `P^{(0,1,..,k)} = 1`. `minus_x` is the ring element standing for `-x`:
/// a number gives a value, `Poly::linear(-1)` gives coefficients.
pub fn det_p_recursive<R: Ring>(h: &dyn BandedOperator, t: &IndexTuple, minus_x: &R) -> R {
    let mut memo = BTreeMap::new();
    cofactor(h, t.indices(), minus_x, &mut memo)
}

/// Floating coefficients of `P^{(n_0..n_k)}` (ascending in `x`).
pub fn coeffs_p(h: &dyn BandedOperator, t: &IndexTuple) -> Poly<f64> {
    det_p_recursive(h, t, &Poly::linear(-1.0))
}

/// Exact coefficients.
pub fn coeffs_p_exact(h: &dyn BandedOperator, t: &IndexTuple) -> Poly<BigRational> {
    let minus_one = -<BigRational as Ring>::one();
    det_p_recursive(h, t, &Poly::linear(minus_one))
}

/// Order of the zero at the origin of `P_{k,n}`.
pub fn monomial_order(p: usize, k: usize, n: usize) -> usize {
    let j = n % (p + 1);
    if j >= k {
        (j - k) * (k + 1)
    } else {
        (k - j) * (p - k)
    }
}

/// `P(x) = x^m * Ptilde(x^{p+1})` with `Ptilde` given by ascending coefficients in `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct DeflatedPoly {
    pub m: usize,
    pub p: usize,
    pub coeffs: Vec<f64>,
}

impl DeflatedPoly {
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval_y(&self, y: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * y + c)
    }

    pub fn eval_x(&self, x: Complex64) -> Complex64 {
        x.powu(self.m as u32) * self.eval_y(x.powu(self.p as u32 + 1))
    }

    /// Re-expanded coefficients in `x`.
    pub fn expand(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.m + (self.p + 1) * self.degree() + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[self.m + (self.p + 1) * i] = *c;
        }
        out
    }
}

/// Split exact-structure coefficients into the lacunary form. Fails if a
/// coefficient lies off the lattice `m + (p+1) N`.
pub fn deflate_coeffs(p: usize, coeffs: &[f64]) -> Result<DeflatedPoly> {
    let m = coeffs.iter().position(|c| *c != 0.0).ok_or_else(|| Error::Consistency("zero polynomial".to_string()))?;
    let top = coeffs.iter().rposition(|c| *c != 0.0).unwrap();
    let mut out = Vec::new();
    for (i, c) in coeffs.iter().enumerate().take(top + 1).skip(m) {
        if (i - m) % (p + 1) == 0 {
            out.push(*c);
        } else if *c != 0.0 {
            return Err(Error::Consistency(format!("coefficient of x^{i} is off the lacunary lattice")));
        }
    }
    Ok(DeflatedPoly { m, p, coeffs: out })
}

/// Lacunary form of `P^{(n_0..n_k)}` from the cofactor coefficients.
pub fn deflated_p(h: &dyn BandedOperator, t: &IndexTuple) -> Result<DeflatedPoly> {
    deflate_coeffs(h.depth(), coeffs_p(h, t).coeffs())
}

/// Point on the ray carrying the zeros: a `(p+1)`-th root of `y` (principal branch).
pub fn parity_root(y: Complex64, p: usize) -> Complex64 {
    if y.norm() == 0.0 {
        return y;
    }
    y.powf(1.0 / (p as f64 + 1.0))
}

/// Recover `Ptilde` from samples of `P` on the half-line `sign * [0, radius]`
/// (Chebyshev nodes in `y`) by Newton interpolation.
pub fn deflate_sampled(eval: impl Fn(Complex64) -> Complex64, p: usize, m: usize, degree: usize, sign: f64, radius: f64) -> DeflatedPoly {
    let nodes: Vec<f64> = chebyshev_nodes(degree + 1, 0.0, radius).into_iter().map(|y| sign * y).collect();
    let vals: Vec<f64> = nodes
        .iter()
        .map(|y| {
            let x = parity_root(Complex64::new(*y, 0.0), p);
            (eval(x) / x.powu(m as u32)).re
        })
        .collect();
    DeflatedPoly { m, p, coeffs: newton_interpolate(&nodes, &vals) }
}

/// Zeros of `Ptilde` in the variable `y = x^{p+1}`, sorted by modulus.
#[derive(Clone, Debug, PartialEq)]
pub struct GenZeros {
    /// Order of the zero of `P` at the origin.
    pub m: usize,
    pub y: Vec<f64>,
    /// Largest `|Im y| / |y|` seen before projecting to the real line.
    pub max_imag: f64,
}

/// Zeros of `P^{(n_0..n_k)}` in `y`. Initial values come from the balanced
/// companion matrix of the cofactor coefficients; they are then refined by
/// Weierstrass iteration on the banded determinant, which stays accurate
/// where the monomial coefficients are ill-conditioned.
pub fn zeros_p(h: &dyn BandedOperator, t: &IndexTuple) -> Result<GenZeros> {
    let p = h.depth();
    let d = deflated_p(h, t)?;
    let deg = d.degree();
    if deg == 0 {
        return Ok(GenZeros { m: d.m, y: Vec::new(), max_imag: 0.0 });
    }
    let mut w = real_poly_roots(&d.coeffs)?;
    let lead = ScaledScalar::from_real(d.coeffs[deg]);
    let eval = |y: Complex64| -> ScaledScalar {
        let x = parity_root(y, p);
        det_p(h, t, x) / ScaledScalar::new(x).powi(d.m as i64)
    };
    for _ in 0..80 {
        let mut worst = 0.0f64;
        let mut next = w.clone();
        for i in 0..deg {
            let mut den = lead;
            for j in 0..deg {
                if j != i {
                    den = den * ScaledScalar::new(w[i] - w[j]);
                }
            }
            if den.is_zero() {
                continue;
            }
            let corr = (eval(w[i]) / den).to_complex();
            if !(corr.re.is_finite() && corr.im.is_finite()) {
                continue;
            }
            next[i] = w[i] - corr;
            worst = worst.max(corr.norm() / w[i].norm().max(f64::MIN_POSITIVE));
        }
        w = next;
        if worst < 1e-15 {
            break;
        }
    }
    let max_imag = w.iter().map(|z| z.im.abs() / z.norm().max(f64::MIN_POSITIVE)).fold(0.0, f64::max);
    let mut y: Vec<f64> = w.iter().map(|z| z.re).collect();
    y.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap());
    let sign = if d.coeffs[deg - 1] / d.coeffs[deg] > 0.0 { -1.0 } else { 1.0 };
    let one_sided = y.iter().all(|v| v * sign >= 0.0);
    if max_imag < 1e-9 && one_sided {
        return Ok(GenZeros { m: d.m, y, max_imag });
    }
    let bound = fujiwara_bound(&d.coeffs);
    let real = |v: f64| eval(Complex64::new(v, 0.0));
    match scan_real_zeros(&real, deg, sign, bound) {
        Some(y) => Ok(GenZeros { m: d.m, y, max_imag: 0.0 }),
        None => Ok(GenZeros { m: d.m, y, max_imag }),
    }
}

fn fujiwara_bound(c: &[f64]) -> f64 {
    let n = c.len() - 1;
    let lead = c[n].abs();
    let mut b = 0.0f64;
    for i in 1..=n {
        let mut v = (c[n - i].abs() / lead).powf(1.0 / i as f64);
        if i == n {
            v *= 0.5f64.powf(1.0 / n as f64);
        }
        b = b.max(v);
    }
    2.0 * b
}

/// All `deg` zeros of a real-valued function on the half-line `sign * (0, bound]`,
/// bracketed by sign changes on a mixed grid and refined near sign-preserving
/// dips of `|f|`. `None` if fewer than `deg` are found.
fn scan_real_zeros(f: &dyn Fn(f64) -> ScaledScalar, deg: usize, sign: f64, bound: f64) -> Option<Vec<f64>> {
    let sgn = |s: &ScaledScalar| s.mantissa().re.signum();
    let mut bound = bound;
    for _ in 0..4 {
        let n = 64 * deg + 512;
        let mut grid: Vec<f64> = (1..=n).map(|i| bound * i as f64 / n as f64).collect();
        grid.extend((0..n).map(|i| bound * (-40.0 * (i + 1) as f64 / n as f64).exp()));
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        grid.dedup();
        let mut pts: Vec<(f64, ScaledScalar)> = grid.iter().map(|u| (*u, f(sign * u))).collect();
        for _ in 0..10 {
            let change: Vec<bool> = pts.windows(2).map(|w| sgn(&w[0].1) * sgn(&w[1].1) <= 0.0).collect();
            if change.iter().filter(|c| **c).count() >= deg {
                break;
            }
            let mut mark = vec![false; change.len()];
            for i in 0..change.len() {
                if change[i] {
                    mark[i.saturating_sub(1)..(i + 2).min(change.len())].iter_mut().for_each(|m| *m = true);
                }
            }
            for i in 1..pts.len() - 1 {
                let (a, b, c) = (&pts[i - 1], &pts[i], &pts[i + 1]);
                if b.1.ln_abs() < a.1.ln_abs() && b.1.ln_abs() < c.1.ln_abs() {
                    mark[i - 1] = true;
                    mark[i] = true;
                }
            }
            let mut extra = Vec::new();
            for (i, m) in mark.iter().enumerate() {
                if *m {
                    let (a, c) = (pts[i].0, pts[i + 1].0);
                    for j in 1..8 {
                        let u = a + (c - a) * j as f64 / 8.0;
                        extra.push((u, f(sign * u)));
                    }
                }
            }
            pts.extend(extra);
            pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            pts.dedup_by(|a, b| a.0 == b.0);
        }
        let mut out = Vec::new();
        for w in pts.windows(2) {
            let (sa, sb) = (sgn(&w[0].1), sgn(&w[1].1));
            if sb == 0.0 {
                out.push(sign * w[1].0);
                continue;
            }
            if sa * sb >= 0.0 {
                continue;
            }
            let (mut lo, mut hi) = (w[0].0, w[1].0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if sgn(&f(sign * mid)) == sa {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(sign * 0.5 * (lo + hi));
        }
        if out.len() == deg {
            return Some(out);
        }
        if out.len() > deg {
            return None;
        }
        bound *= 4.0;
    }
    None
}

/// Zeros in `y` together with `zeros_at_origin` copies of `0` prepended,
/// where the origin count is measured against the exponent `base`
/// (`P = x^base Ptilde(x^{p+1})`).
pub fn zeros_with_base(h: &dyn BandedOperator, t: &IndexTuple, base: i64) -> Result<Vec<f64>> {
    let z = zeros_p(h, t)?;
    let p1 = h.depth() as i64 + 1;
    let diff = z.m as i64 - base;
    if diff < 0 || diff % p1 != 0 {
        return Err(Error::Consistency(format!("exponent {} incompatible with base {base}", z.m)));
    }
    let mut out = vec![0.0; (diff / p1) as usize];
    out.extend(z.y);
    Ok(out)
}

/// Block data of the cyclic product route.
#[derive(Clone, Debug)]
pub struct CyclicForm {
    /// Trimmed (and, if needed, augmented) bidiagonal factors in product order.
    pub factors: Vec<CMat>,
    /// The product of the factors.
    pub product: CMat,
    /// Power of `x` split off as the constant `x^{k(p-k)}`.
    pub exponent: usize,
    /// Zeros `y` of `det(product - y J_k)` with `J_k` the `k`-shifted identity.
    pub zeros: Vec<f64>,
}

/// Cyclic block-product route to the zeros of `P_{k,n}`: permuting indices by
/// residue mod `p+1` gives a block cyclic matrix whose trimmed factors
/// `Y'_0 ... Y'_p` multiply to a totally nonnegative matrix `M`, and
/// `P_{k,n}(x) = c x^{k(p-k)} det(M - x^{p+1} J_k)`.
pub fn cyclic_product_form(spec: &RecurrenceSpec, k: usize, n: usize) -> Result<CyclicForm> {
    let p = spec.p();
    if k > p {
        return Err(Error::InvalidIndices(format!("k = {k} exceeds p = {p}")));
    }
    let p1 = p + 1;
    if n < p1 * (k + 2) {
        return Err(Error::InvalidIndices(format!("n = {n} too small for the block route")));
    }
    let q = n % p1;
    let nj = |j: usize| (n + p - j) / p1;
    let rho = |j: usize| (j + p1 - q) % p1;
    // (top rows, top cols, bottom rows, bottom cols) skipped in X_j and Y_j
    let x_trim = |j: usize| -> (usize, usize, usize, usize) {
        let (tr, tc) = if j == 0 { (k, 0) } else { (k.saturating_sub(j), k.saturating_sub(j)) };
        let r = rho(j);
        let (br, bc) = if r == 0 {
            (0, k)
        } else {
            let b = (r + k).saturating_sub(p);
            (b, b)
        };
        (tr, tc, br, bc)
    };
    let y_trim = |j: usize| -> (usize, usize, usize, usize) {
        let (tr, tc) = if j < p { (k.saturating_sub(j), k.saturating_sub(j + 1)) } else { (0, 0) };
        let r = rho(j);
        let (br, bc) = if r < p { ((r + k).saturating_sub(p), (r + k + 1).saturating_sub(p)) } else { (k, k) };
        (tr, tc, br, bc)
    };
    let a = |i: usize| Complex64::new(spec.a(i), 0.0);
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let full_y = |j: usize| -> CMat {
        let rows = nj(j);
        let cols = nj((j + 1) % p1);
        CMat::from_fn(rows, cols, |r, c| {
            if j < p {
                if r == c {
                    one
                } else if r == c + 1 {
                    a(p1 * c + j + 1)
                } else {
                    zero
                }
            } else if r == c {
                a(p1 * r)
            } else if c == r + 1 {
                one
            } else {
                zero
            }
        })
    };
    let mut ys = Vec::with_capacity(p1);
    let mut xs = Vec::with_capacity(p1);
    for j in 0..p1 {
        let (tr, tc, br, bc) = y_trim(j);
        let full = full_y(j);
        if tr + br > full.rows() || tc + bc > full.cols() {
            return Err(Error::SizeMismatch(format!("Y_{j} trimmed below zero size")));
        }
        let mut yj = full.block(tr, full.rows() - br, tc, full.cols() - bc);
        let (xtr, xtc, xbr, xbc) = x_trim(j);
        let m = nj(j);
        if xtr + xbr > m || xtc + xbc > m {
            return Err(Error::SizeMismatch(format!("X_{j} trimmed below zero size")));
        }
        let (mut xr, mut xc) = (m - xtr - xbr, m - xtc - xbc);
        if q > 0 && j < q {
            let mut aug = CMat::zeros(yj.rows() + k, yj.cols() + k);
            for i in 0..k {
                aug[(i, i)] = one;
            }
            for r in 0..yj.rows() {
                for c in 0..yj.cols() {
                    aug[(r + k, c + k)] = yj[(r, c)];
                }
            }
            yj = aug;
            xr += k;
            if j > 0 {
                xc += k;
            }
        }
        if q > 0 && j == q {
            xc += k;
        }
        ys.push(yj);
        xs.push((xr, xc));
    }
    for j in 0..p1 {
        let (xr, xc) = xs[j];
        if xr != xc {
            return Err(Error::SizeMismatch(format!("diagonal block {j} is {xr}x{xc}")));
        }
        if ys[j].rows() != xr || ys[j].cols() != xs[(j + 1) % p1].1 {
            return Err(Error::SizeMismatch(format!("Y_{j} is {}x{}, expected {}x{}", ys[j].rows(), ys[j].cols(), xr, xs[(j + 1) % p1].1)));
        }
    }
    let order: Vec<usize> = (0..p1).map(|i| (i + q) % p1).collect();
    let factors: Vec<CMat> = order.iter().map(|j| ys[*j].clone()).collect();
    let mut product = factors[0].clone();
    for f in &factors[1..] {
        product = product.mul(f);
    }
    let size = product.rows();
    let shift = CMat::from_fn(size, size, |r, c| if c == r + k { one } else { zero });
    let pencil = solve(&product, &shift)?;
    let mu = eigenvalues(&pencil)?;
    let top = mu.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut zeros: Vec<f64> = mu
        .iter()
        .filter(|v| v.norm() > 1e-14 * top)
        .map(|v| Complex64::new(1.0, 0.0) / v)
        .filter(|y| newton_confirms(&product, &shift, *y))
        .map(|y| y.re)
        .collect();
    zeros.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap());
    Ok(CyclicForm { factors, product, exponent: k * (p - k), zeros })
}

// Infinite eigenvalues of the pencil surface as huge spurious `y`; a genuine
// zero of `det(M - yJ)` gives a negligible Newton step `-1 / tr((M - yJ)^{-1} J)`.
fn newton_confirms(m: &CMat, j: &CMat, y: Complex64) -> bool {
    let a = m.sub(&j.scale(y));
    let x = match solve(&a, j) {
        Ok(x) => x,
        Err(_) => return true,
    };
    let tr: Complex64 = (0..x.rows()).map(|i| x[(i, i)]).sum();
    if tr.norm() == 0.0 {
        return false;
    }
    (Complex64::new(1.0, 0.0) / tr).norm() <= 1e-7 * y.norm().max(1e-300)
}

/// Smallest contiguous minor of order up to `max_order` (as a fraction of
/// the largest entry raised to that order), and `det` of the full matrix.
pub fn contiguous_minor_floor(m: &CMat, max_order: usize) -> f64 {
    let n = m.rows().min(m.cols());
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    let mut worst = f64::INFINITY;
    for s in 1..=max_order.min(n) {
        for i in 0..=m.rows() - s {
            for j in 0..=m.cols() - s {
                let d = m.block(i, i + s, j, j + s).det().re / scale.powi(s as i32);
                worst = worst.min(d);
            }
        }
    }
    worst
}

/// Outcome of a weak interlacing chain check.
#[derive(Clone, Debug, PartialEq)]
pub struct InterlaceReport {
    pub holds: bool,
    /// Most negative slack `|c_{i+1}| - |c_i|` along the chain, after the tie allowance.
    pub worst_slack: f64,
    pub lead_len: usize,
    pub follow_len: usize,
    pub detail: String,
}

/// Tie allowance for zeros compared by modulus.
pub fn tie_slack(v: f64) -> f64 {
    1e-9 * (1.0 + v.abs())
}

/// Check `|lead_1| <= |follow_1| <= |lead_2| <= |follow_2| <= ...` with the
/// tie allowance, and that `lead` has the same length as `follow` or one more.
pub fn interlace_chain(lead: &[f64], follow: &[f64]) -> InterlaceReport {
    let mut chain = Vec::with_capacity(lead.len() + follow.len());
    for i in 0..lead.len().max(follow.len()) {
        if i < lead.len() {
            chain.push(lead[i].abs());
        }
        if i < follow.len() {
            chain.push(follow[i].abs());
        }
    }
    let mut worst = f64::INFINITY;
    let mut detail = String::new();
    let len_ok = lead.len() == follow.len() || lead.len() == follow.len() + 1;
    let mut holds = len_ok;
    if !len_ok {
        detail = format!("lengths {} and {} cannot alternate", lead.len(), follow.len());
    }
    for (i, w) in chain.windows(2).enumerate() {
        let s = w[1] - w[0] + tie_slack(w[1]);
        worst = worst.min(w[1] - w[0]);
        if s < 0.0 && holds {
            holds = false;
            detail = format!("chain breaks at position {i}: {} > {}", w[0], w[1]);
        }
    }
    InterlaceReport { holds, worst_slack: worst, lead_len: lead.len(), follow_len: follow.len(), detail }
}

/// The interlacing statements that are checked.
#[derive(Clone, Debug, PartialEq)]
pub enum Interlacing {
    /// `P_{k,n}` against `P_{k,n+1}`; which one leads depends on `n mod (p+1)`.
    Consecutive { k: usize, n: usize },
    /// `P_{k,n+p+1}` leads `P_{k,n}`.
    Step { k: usize, n: usize },
    /// `P_{k,l,n}` (zero at the origin included) leads `P_{k,n}`.
    Kl { k: usize, l: usize, n: usize },
    /// `P^{(n_0..n_kappa, n-k+kappa+1..n)}` leads `P^{(n_0..n_{kappa-1}, n-k+kappa..n)}`.
    General { k: usize, n: usize, head: Vec<usize> },
}

/// Run one interlacing check; also verifies the sign of every zero.
pub fn check_interlacing(h: &dyn BandedOperator, which: &Interlacing) -> Result<InterlaceReport> {
    let p = h.depth();
    let (lead, follow, k) = match which {
        Interlacing::Consecutive { k, n } => {
            let x = zeros_p(h, &IndexTuple::pk(p, *k, *n)?)?.y;
            let y = zeros_p(h, &IndexTuple::pk(p, *k, n + 1)?)?.y;
            let j = n % (p + 1);
            if j >= *k && j < p {
                (x, y, *k)
            } else {
                (y, x, *k)
            }
        }
        Interlacing::Step { k, n } => {
            let x = zeros_p(h, &IndexTuple::pk(p, *k, *n)?)?.y;
            let w = zeros_p(h, &IndexTuple::pk(p, *k, n + p + 1)?)?.y;
            (w, x, *k)
        }
        Interlacing::Kl { k, l, n } => {
            let x = zeros_p(h, &IndexTuple::pk(p, *k, *n)?)?.y;
            let base = *k as i64 - *l as i64 + monomial_order(p, *k, *n) as i64;
            let y = zeros_with_base(h, &IndexTuple::pkl(p, *k, *l, *n)?, base)?;
            (y, x, *k)
        }
        Interlacing::General { k, n, head } => {
            let kappa = head.len() - 1;
            if kappa >= *k || *n < k - kappa || head[kappa] >= n - k + kappa {
                return Err(Error::InvalidIndices(format!("head {head:?} incompatible with k={k}, n={n}")));
            }
            let mut t1 = head.clone();
            t1.extend(n - k + kappa + 1..=*n);
            let mut t2 = head[..kappa].to_vec();
            t2.extend(n - k + kappa..=*n);
            let t1 = IndexTuple::new(p, t1)?;
            let t2 = IndexTuple::new(p, t2)?;
            let m2 = deflated_p(h, &t2)?.m as i64;
            let base = m2 - t1.shift() as i64 + t2.shift() as i64;
            let y = zeros_with_base(h, &t1, base)?;
            let x = zeros_p(h, &t2)?.y;
            (y, x, *k)
        }
    };
    let mut report = interlace_chain(&lead, &follow);
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    if let Some(bad) = lead.iter().chain(&follow).find(|v| sign * **v < -tie_slack(**v)) {
        if report.holds {
            report.detail = format!("zero {bad} lies on the wrong half-line");
        }
        report.holds = false;
    }
    Ok(report)
}

/// Sign-definiteness of minors of the two-diagonal cyclic matrix with
/// `-b_i` on the diagonal, `a_i` on the subdiagonal and `a_{n-1}` in the
/// top-right corner. Returns `det A^{k,l}` and whether
/// `(-1)^{n+k+l+1} det A^{k,l} > 0`.
pub fn antidiag_sign_minor(a: &[f64], b: &[f64], k: usize, l: usize) -> Result<(f64, bool)> {
    let n = a.len();
    if n == 0 || b.len() != n || k >= n || l >= n {
        return Err(Error::InvalidIndices(format!("minor ({k},{l}) of a {n}x{n} cyclic matrix")));
    }
    let mut m = CMat::zeros(n, n);
    for i in 0..n {
        m[(i, i)] += Complex64::new(-b[i], 0.0);
        if i + 1 < n {
            m[(i + 1, i)] += Complex64::new(a[i], 0.0);
        }
    }
    m[(0, n - 1)] += Complex64::new(a[n - 1], 0.0);
    let d = m.minor(k, l).det().re;
    let sign = if (n + k + l + 1).is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok((d, sign * d > 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn fig2() -> RecurrenceSpec {
        RecurrenceSpec::periodic(2, &[3.0, 2.0, 3.0, 5.0, 4.0, 1.0]).unwrap()
    }

    #[test]
    fn tuple_validation() {
        assert!(IndexTuple::new(2, vec![3, 2]).is_err());
        assert!(IndexTuple::new(2, vec![1, 4]).is_err());
        assert_eq!(IndexTuple::pk(3, 2, 7).unwrap().indices(), &[5, 6, 7]);
        assert_eq!(IndexTuple::pkl(3, 1, 3, 9).unwrap().indices(), &[6, 9]);
        assert_eq!(IndexTuple::pkl(3, 2, 3, 9).unwrap().indices(), &[6, 8, 9]);
    }

    #[test]
    fn q_is_signed_p0() {
        let s = fig2();
        let x = Complex64::new(0.8, 0.3);
        for n in 0..30 {
            let q = crate::recurrence::eval_q(&s, n, x);
            let p0 = det_p(&s, &IndexTuple::pk(2, 0, n).unwrap(), x);
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!(p0.rel_diff(&q.mul_complex(Complex64::new(sign, 0.0))) < 1e-11, "n={n}");
        }
    }

    #[test]
    fn pp_is_coefficient_product() {
        let s = fig2();
        for n in 3..20 {
            let v = det_p(&s, &IndexTuple::pk(2, 2, n).unwrap(), Complex64::new(1.7, -0.4));
            let prod: f64 = (0..n - 2).map(|i| s.a(i)).product();
            assert!(v.rel_diff(&ScaledScalar::from_real(prod)) < 1e-12, "n={n}");
        }
    }

    #[test]
    fn recursion_matches_elimination() {
        let s = RecurrenceSpec::periodic(3, &[1.5, 0.5, 2.0, 3.0, 1.0]).unwrap();
        let x = Complex64::new(0.6, 0.9);
        for t in [vec![7, 8, 9, 10], vec![8, 10, 11], vec![9, 12], vec![10, 11, 12, 13], vec![5, 7, 8]] {
            let t = IndexTuple::new(3, t).unwrap();
            let a = det_p(&s, &t, x);
            let b = det_p_recursive(&s, &t, &(-x));
            assert!(a.rel_diff(&ScaledScalar::new(b)) < 1e-11, "{t:?}");
        }
    }

    #[test]
    fn exact_tiers_agree() {
        let s = fig2();
        let x = <BigRational as Ring>::from_real(0.375);
        for t in [vec![10, 11, 12], vec![9, 11], vec![11, 12]] {
            let t = IndexTuple::new(2, t).unwrap();
            let a = det_p_exact(&s, &t, &x);
            let b = det_p_recursive(&s, &t, &(-x.clone()));
            let c = coeffs_p_exact(&s, &t).eval(&x);
            assert_eq!(a, b);
            assert_eq!(a, c);
            let f = coeffs_p(&s, &t).eval(&0.375);
            assert!((f - a.to_f64().unwrap()).abs() <= 1e-12 * f.abs().max(1.0));
        }
    }

    #[test]
    fn monomial_orders_match_coefficients() {
        let s = RecurrenceSpec::periodic(3, &[2.0, 1.0, 3.0, 1.5]).unwrap();
        for k in 0..=3 {
            for n in 8..30 {
                let d = deflated_p(&s, &IndexTuple::pk(3, k, n).unwrap()).unwrap();
                assert_eq!(d.m, monomial_order(3, k, n), "k={k} n={n}");
            }
        }
    }

    #[test]
    fn sampled_deflation_reproduces_coefficients() {
        let s = fig2();
        let t = IndexTuple::pk(2, 1, 16).unwrap();
        let exact = deflated_p(&s, &t).unwrap();
        let sampled = deflate_sampled(|x| det_p(&s, &t, x).to_complex(), 2, exact.m, exact.degree(), -1.0, 8.0);
        let scale = exact.coeffs.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        for (a, b) in sampled.coeffs.iter().zip(&exact.coeffs) {
            assert!((a - b).abs() <= 1e-10 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn zeros_are_on_parity_halfline() {
        let s = fig2();
        for k in 0..=1 {
            let z = zeros_p(&s, &IndexTuple::pk(2, k, 24).unwrap()).unwrap();
            let sign = if k == 0 { 1.0 } else { -1.0 };
            assert!(z.y.iter().all(|y| sign * y > 0.0), "k={k}: {:?}", z.y);
            assert!(z.max_imag < 1e-8);
        }
    }

    #[test]
    fn figure_pairs_interlace() {
        let s = fig2();
        for (k, n) in [(0, 23), (1, 23)] {
            assert!(check_interlacing(&s, &Interlacing::Consecutive { k, n }).unwrap().holds);
        }
        for (k, n) in [(0, 24), (1, 24)] {
            assert!(check_interlacing(&s, &Interlacing::Step { k, n }).unwrap().holds);
        }
    }

    #[test]
    fn cyclic_route_matches_determinant_route() {
        let s = fig2();
        for (k, n) in [(0, 24), (1, 24), (2, 24), (1, 25), (1, 26), (0, 25), (2, 26)] {
            let direct = zeros_p(&s, &IndexTuple::pk(2, k, n).unwrap()).unwrap().y;
            let cyc = cyclic_product_form(&s, k, n).unwrap();
            assert_eq!(direct.len(), cyc.zeros.len(), "k={k} n={n}");
            for (a, b) in direct.iter().zip(&cyc.zeros) {
                assert!((a - b).abs() < 1e-6 * (1.0 + a.abs()), "k={k} n={n}: {a} vs {b}");
            }
            assert!(cyc.product.det().re > 0.0);
            assert!(contiguous_minor_floor(&cyc.product, 3) > -1e-12);
        }
    }

    #[test]
    fn antidiag_minor_signs() {
        let a = [1.0, 2.0, 0.5, 3.0, 1.5];
        let b = [0.7, 1.1, 2.0, 0.3, 1.0];
        for k in 0..5 {
            for l in 0..5 {
                assert!(antidiag_sign_minor(&a, &b, k, l).unwrap().1, "({k},{l})");
            }
        }
        assert_eq!(antidiag_sign_minor(&[2.0], &[1.0], 0, 0).unwrap(), (1.0, true));
    }
}
