//! Dense complex matrices, pivoted LU, a shifted QR eigenvalue solver and
//! banded elimination over an arbitrary field.

use crate::prelude::*;
use crate::scalar::{Field, ScaledScalar};
use crate::{Error, Result};
use core::ops::{Index, IndexMut};
use num_complex::Complex64;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat { rows, cols, data: vec![C0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C1;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn mul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows, "matrix product shape");
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a == C0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(l, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows).map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum()).collect()
    }

    pub fn transpose(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, c: Complex64) -> CMat {
        CMat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * c).collect() }
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMat { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    /// Copy with row `r` and column `c` removed.
    pub fn minor(&self, r: usize, c: usize) -> CMat {
        CMat::from_fn(self.rows - 1, self.cols - 1, |i, j| self[(if i < r { i } else { i + 1 }, if j < c { j } else { j + 1 })])
    }

    /// Rows `r0..r1`, columns `c0..c1`.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> CMat {
        CMat::from_fn(r1 - r0, c1 - c0, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn det(&self) -> Complex64 {
        lu_det_scaled(self).to_complex()
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

struct Lu {
    a: CMat,
    perm: Vec<usize>,
    odd: bool,
    singular: bool,
}

fn lu(mut a: CMat) -> Lu {
    assert!(a.is_square(), "LU of a non-square matrix");
    let n = a.rows;
    let mut perm: Vec<usize> = (0..n).collect();
    let mut odd = false;
    let mut singular = false;
    for j in 0..n {
        let mut piv = j;
        let mut best = a[(j, j)].norm();
        for i in j + 1..n {
            let v = a[(i, j)].norm();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best == 0.0 {
            singular = true;
            continue;
        }
        if piv != j {
            for c in 0..n {
                a.data.swap(j * n + c, piv * n + c);
            }
            perm.swap(j, piv);
            odd = !odd;
        }
        let d = a[(j, j)];
        for i in j + 1..n {
            let f = a[(i, j)] / d;
            if f == C0 {
                continue;
            }
            a[(i, j)] = f;
            for c in j + 1..n {
                let u = a[(j, c)];
                a[(i, c)] -= f * u;
            }
        }
    }
    Lu { a, perm, odd, singular }
}

/// Determinant as a scaled scalar (no overflow for large products).
pub fn lu_det_scaled(a: &CMat) -> ScaledScalar {
    let n = a.rows;
    if n == 0 {
        return ScaledScalar::ONE;
    }
    let f = lu(a.clone());
    if f.singular {
        return ScaledScalar::ZERO;
    }
    let mut acc = ScaledScalar::ONE;
    for i in 0..n {
        acc = acc * ScaledScalar::new(f.a[(i, i)]);
    }
    if f.odd {
        -acc
    } else {
        acc
    }
}

/// Solve `A X = B`.
pub fn solve(a: &CMat, b: &CMat) -> Result<CMat> {
    assert_eq!(a.rows, b.rows);
    let n = a.rows;
    let f = lu(a.clone());
    if f.singular {
        return Err(Error::Singular);
    }
    let mut x = CMat::zeros(n, b.cols);
    for col in 0..b.cols {
        let mut y: Vec<Complex64> = (0..n).map(|i| b[(f.perm[i], col)]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = f.a[(i, j)];
                y[i] = y[i] - l * y[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = f.a[(i, j)];
                y[i] = y[i] - u * y[j];
            }
            y[i] /= f.a[(i, i)];
        }
        for i in 0..n {
            x[(i, col)] = y[i];
        }
    }
    Ok(x)
}

pub fn inverse(a: &CMat) -> Result<CMat> {
    solve(a, &CMat::identity(a.rows))
}

/// Parlett–Reinsch diagonal balancing with powers of two, in place.
fn balance(a: &mut CMat) {
    let n = a.rows;
    let radix = 2.0f64;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].norm();
                    r += a[(i, j)].norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut g = r / radix;
            let mut f = 1.0;
            let mut cc = c;
            while cc < g {
                f *= radix;
                cc *= radix * radix;
            }
            g = r * radix;
            while cc > g {
                f /= radix;
                cc /= radix * radix;
            }
            if (cc + r / f) / f < 0.95 * s {
                done = false;
                let fi = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= fi;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// Householder reduction to upper Hessenberg form, in place.
fn hessenberg(a: &mut CMat) {
    let n = a.rows;
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let alpha: f64 = (k + 1..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if alpha == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let phase = if x0.norm() == 0.0 { C1 } else { x0 / x0.norm() };
        let mut v: Vec<Complex64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        v[0] += phase * alpha;
        let vn: f64 = v.iter().map(|c| c.norm_sqr()).sum::<f64>();
        if vn == 0.0 {
            continue;
        }
        // A <- (I - 2vv*/v*v) A (I - 2vv*/v*v)
        for j in 0..n {
            let mut s = C0;
            for (t, vi) in v.iter().enumerate() {
                s += vi.conj() * a[(k + 1 + t, j)];
            }
            let s = s * (2.0 / vn);
            for (t, vi) in v.iter().enumerate() {
                a[(k + 1 + t, j)] -= vi * s;
            }
        }
        for i in 0..n {
            let mut s = C0;
            for (t, vi) in v.iter().enumerate() {
                s += a[(i, k + 1 + t)] * vi;
            }
            let s = s * (2.0 / vn);
            for (t, vi) in v.iter().enumerate() {
                a[(i, k + 1 + t)] -= s * vi.conj();
            }
        }
        for i in k + 2..n {
            a[(i, k)] = C0;
        }
    }
}

fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, C0);
    }
    if ax == 0.0 {
        return (0.0, C1);
    }
    let rho = ax.hypot(ay);
    (ax / rho, (x / ax) * y.conj() / rho)
}

/// Eigenvalues of an upper Hessenberg matrix by single-shift implicit QR.
fn hessenberg_qr(h: &mut CMat) -> Result<Vec<Complex64>> {
    let n = h.rows;
    let mut eig = vec![C0; n];
    if n == 0 {
        return Ok(eig);
    }
    let eps = f64::EPSILON;
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    loop {
        if hi == 0 {
            eig[0] = h[(0, 0)];
            break;
        }
        let mut l = hi;
        while l > 0 {
            let s = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            let s = if s == 0.0 { 1.0 } else { s };
            if h[(l, l - 1)].norm() <= eps * s {
                h[(l, l - 1)] = C0;
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > 100 * n {
            return Err(Error::NoConvergence("QR eigenvalue iteration".to_string()));
        }
        let a = h[(hi - 1, hi - 1)];
        let b = h[(hi - 1, hi)];
        let c = h[(hi, hi - 1)];
        let d = h[(hi, hi)];
        let mu = if iter % 11 == 10 {
            d + Complex64::new(h[(hi, hi - 1)].norm(), 0.0) + if hi >= 2 { Complex64::new(h[(hi - 1, hi - 2)].norm(), 0.0) } else { C0 }
        } else {
            let tr = (a + d) * 0.5;
            let disc = ((a - d) * 0.5 * ((a - d) * 0.5) + b * c).sqrt();
            let e1 = tr + disc;
            let e2 = tr - disc;
            if (e1 - d).norm() < (e2 - d).norm() {
                e1
            } else {
                e2
            }
        };
        let mut x = h[(l, l)] - mu;
        let mut y = h[(l + 1, l)];
        for k in l..hi {
            let (cs, sn) = givens(x, y);
            let c_lo = if k > l { k - 1 } else { l };
            for j in c_lo..=hi {
                let u = h[(k, j)];
                let v = h[(k + 1, j)];
                h[(k, j)] = u * cs + sn * v;
                h[(k + 1, j)] = -sn.conj() * u + v * cs;
            }
            let r_hi = (k + 2).min(hi);
            for i in l..=r_hi {
                let u = h[(i, k)];
                let v = h[(i, k + 1)];
                h[(i, k)] = u * cs + v * sn.conj();
                h[(i, k + 1)] = -u * sn + v * cs;
            }
            if k > l {
                h[(k + 1, k - 1)] = C0;
            }
            if k + 1 < hi {
                x = h[(k + 1, k)];
                y = h[(k + 2, k)];
            }
        }
    }
    Ok(eig)
}

/// All eigenvalues of a square complex matrix (balanced, Hessenberg, QR).
pub fn eigenvalues(a: &CMat) -> Result<Vec<Complex64>> {
    assert!(a.is_square());
    let mut h = a.clone();
    if h.data.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::InvalidSpec("non-finite matrix entry".to_string()));
    }
    balance(&mut h);
    hessenberg(&mut h);
    hessenberg_qr(&mut h)
}

/// Eigenvalues of an already upper Hessenberg matrix (balanced first).
pub fn hessenberg_eigenvalues(a: &CMat) -> Result<Vec<Complex64>> {
    let mut h = a.clone();
    balance(&mut h);
    hessenberg_qr(&mut h)
}

/// Row `i` of a sparse banded matrix: entries for columns `start..start+vals.len()`.
#[derive(Clone, Debug)]
pub struct BandRow<S> {
    pub start: usize,
    pub vals: Vec<S>,
}

impl<S: Field> BandRow<S> {
    fn get(&self, c: usize) -> S {
        if c >= self.start && c < self.start + self.vals.len() {
            self.vals[c - self.start].clone()
        } else {
            S::zero()
        }
    }

    fn end(&self) -> usize {
        self.start + self.vals.len()
    }
}

/// Gaussian elimination with partial pivoting on a square matrix given by
/// contiguous row segments. Returns the pivots and whether the row
/// permutation is odd. A zero pivot means the matrix is singular.
pub fn band_pivots<S: Field>(rows: Vec<BandRow<S>>) -> (Vec<S>, bool) {
    band_elimination(rows, true)
}

/// Elimination in natural order, swapping rows only at an exact zero on the
/// diagonal. On lower Hessenberg bands this is the forward recurrence and
/// keeps the sign of the determinant where partial pivoting loses it.
pub fn band_pivots_natural<S: Field>(rows: Vec<BandRow<S>>) -> (Vec<S>, bool) {
    band_elimination(rows, false)
}

fn band_elimination<S: Field>(mut rows: Vec<BandRow<S>>, partial: bool) -> (Vec<S>, bool) {
    let n = rows.len();
    let kl = rows.iter().enumerate().map(|(i, r)| i.saturating_sub(r.start)).max().unwrap_or(0);
    let mut pivots = Vec::with_capacity(n);
    let mut odd = false;
    for j in 0..n {
        let hi = (j + kl).min(n - 1);
        let mut piv = j;
        let mut best = -1.0;
        let natural = !partial && !rows[j].get(j).is_zero();
        for (i, row) in rows.iter().enumerate().take(if natural { j + 1 } else { hi + 1 }).skip(j) {
            let v = row.get(j).magnitude();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if piv != j {
            rows.swap(j, piv);
            odd = !odd;
        }
        let p = rows[j].get(j);
        if p.is_zero() {
            pivots.push(p);
            for row in rows.iter_mut().take(hi + 1).skip(j + 1) {
                if row.start <= j && row.end() > j {
                    row.vals.drain(..=j - row.start);
                    row.start = j + 1;
                }
            }
            continue;
        }
        let (head, tail) = rows.split_at_mut(j + 1);
        let prow = &head[j];
        for row in tail.iter_mut().take(hi - j) {
            let v = row.get(j);
            if row.start > j || v.is_zero() {
                if row.start <= j {
                    let cut = (j + 1 - row.start).min(row.vals.len());
                    row.vals.drain(..cut);
                    row.start = j + 1;
                }
                continue;
            }
            let f = v / p.clone();
            let end = row.end().max(prow.end());
            let mut vals = Vec::with_capacity(end - j - 1);
            for c in j + 1..end {
                vals.push(row.get(c) - f.clone() * prow.get(c));
            }
            row.start = j + 1;
            row.vals = vals;
        }
        pivots.push(p);
    }
    (pivots, odd)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn det_of_small_matrix() {
        let a = CMat::from_fn(3, 3, |i, j| c((i * 3 + j) as f64 + if i == j { 1.0 } else { 0.0 }, 0.0));
        // [[1,1,2],[3,5,5],[6,7,9]] -> 1*(45-35) - 1*(27-30) + 2*(21-30) = 10 + 3 - 18
        assert!((a.det() - c(-5.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn eigenvalues_of_companion() {
        // (z-1)(z-2)(z-3i)
        let roots = [c(1.0, 0.0), c(2.0, 0.0), c(0.0, 3.0)];
        let mut coef = vec![c(1.0, 0.0)];
        for r in roots {
            let mut next = vec![C0; coef.len() + 1];
            for (i, a) in coef.iter().enumerate() {
                next[i + 1] += a;
                next[i] -= a * r;
            }
            coef = next;
        }
        let n = 3;
        let comp = CMat::from_fn(n, n, |i, j| {
            if i == 0 {
                -coef[n - 1 - j] / coef[n]
            } else if i == j + 1 {
                C1
            } else {
                C0
            }
        });
        let mut ev = eigenvalues(&comp).unwrap();
        ev.sort_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap());
        for (e, r) in ev.iter().zip(roots) {
            assert!((e - r).norm() < 1e-12, "{e} vs {r}");
        }
    }

    #[test]
    fn eigenvalues_of_dense_matrix_match_trace_and_det() {
        let a = CMat::from_fn(6, 6, |i, j| c(((i * 7 + j * 3) % 5) as f64 - 1.5, ((i + 2 * j) % 3) as f64));
        let ev = eigenvalues(&a).unwrap();
        let tr: Complex64 = (0..6).map(|i| a[(i, i)]).sum();
        let sum: Complex64 = ev.iter().sum();
        let prod: Complex64 = ev.iter().product();
        assert!((tr - sum).norm() < 1e-10);
        assert!((a.det() - prod).norm() < 1e-9 * a.det().norm().max(1.0));
    }

    #[test]
    fn solve_recovers_rhs() {
        let a = CMat::from_fn(4, 4, |i, j| c(1.0 / (1.0 + i as f64 + j as f64), (i == j) as u8 as f64));
        let b = CMat::from_fn(4, 2, |i, j| c(i as f64 - j as f64, 1.0));
        let x = solve(&a, &b).unwrap();
        let r = a.mul(&x).sub(&b);
        assert!(r.max_abs() < 1e-12);
    }

    #[test]
    fn band_elimination_matches_dense() {
        let n = 9;
        let dense = CMat::from_fn(n, n, |i, j| {
            let d = j as i64 - i as i64;
            if (-2..=1).contains(&d) {
                c(1.0 + ((i * 5 + j * 3) % 7) as f64, 0.0)
            } else {
                C0
            }
        });
        let rows: Vec<BandRow<Complex64>> = (0..n)
            .map(|i| {
                let s = i.saturating_sub(2);
                let e = (i + 2).min(n);
                BandRow { start: s, vals: (s..e).map(|j| dense[(i, j)]).collect() }
            })
            .collect();
        let (piv, odd) = band_pivots(rows);
        let mut d: Complex64 = piv.iter().product();
        if odd {
            d = -d;
        }
        assert!((d - dense.det()).norm() < 1e-9 * d.norm());
    }
}
