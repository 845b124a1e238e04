//! The block-Toeplitz symbol of a periodic banded Hessenberg operator, its
//! algebraic curve `f(z, x) = det F(z, x) = 0`, the modulus-ordered branches
//! `z_0(x), ..., z_p(x)`, the boundary minors `f_l`, and the transfer matrix
//! that advances one period of the recurrence.

use crate::linalg::{eigenvalues, CMat};
use crate::poly;
use crate::prelude::*;
use crate::recurrence::{BandedHessenberg, BandedOperator, RecurrenceSpec};
use crate::{Error, Result};
use core::f64::consts::PI;
use num_complex::{Complex, Complex64};
use twofloat::TwoFloat;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

/// Relative modulus gap under which adjacent branches count as tied.
pub const TIE_TOL: f64 = 1e-10;
const JACOBIAN_TOL: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-10;
const CONSISTENCY_TOL: f64 = 1e-9;
const SNAP_TOL: f64 = 1e-11;

fn sign(e: usize) -> f64 {
    if e.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Complex double-double.
pub type Cdd = Complex<TwoFloat>;

fn dd(c: Complex64) -> Cdd {
    Cdd::new(TwoFloat::from(c.re), TwoFloat::from(c.im))
}

fn round(c: Cdd) -> Complex64 {
    Complex64::new(c.re.hi() + c.re.lo(), c.im.hi() + c.im.lo())
}

fn minor_dd(m: &[Vec<Cdd>], row: usize, col: usize) -> Vec<Vec<Cdd>> {
    m.iter()
        .enumerate()
        .filter(|(i, _)| *i != row)
        .map(|(_, r)| r.iter().enumerate().filter(|(j, _)| *j != col).map(|(_, v)| *v).collect())
        .collect()
}

/// Determinant by Gaussian elimination with partial pivoting.
fn det_dd(mut a: Vec<Vec<Cdd>>) -> Cdd {
    let n = a.len();
    let mut det = dd(C1);
    for j in 0..n {
        let piv = (j..n).max_by(|u, v| round(a[*u][j]).norm().total_cmp(&round(a[*v][j]).norm())).expect("non-empty column");
        if round(a[piv][j]).norm() == 0.0 {
            return dd(C0);
        }
        if piv != j {
            a.swap(piv, j);
            det = -det;
        }
        let d = a[j][j];
        det *= d;
        for i in j + 1..n {
            let m = a[i][j] / d;
            for c in j + 1..n {
                let t = a[j][c];
                a[i][c] -= m * t;
            }
        }
    }
    det
}

fn unit(k: usize, n: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64)
}

/// Symbol of a lower Hessenberg operator with period `r`, depth `p`, ones on
/// the superdiagonal and `diags[q][i]` on subdiagonal `q`:
///
/// `F(z, x) = Z^{-1} + sum_q Z^q diag(b^{(q)}) - x I`
///
/// with `Z` the `r x r` cyclic shift carrying `z` in its top-right corner.
#[derive(Clone, Debug)]
pub struct Symbol {
    p: usize,
    r: usize,
    diags: Vec<Vec<f64>>,
    two_diagonal: bool,
    /// `curve[j + 1][m]` is the coefficient of `z^j x^m` in `f`.
    curve: Vec<Vec<f64>>,
    lead: f64,
}

impl Symbol {
    /// `diags[q]` holds one period of subdiagonal `q`, diagonal first.
    pub fn new(diags: Vec<Vec<f64>>) -> Result<Self> {
        let h = BandedHessenberg::new(diags)?;
        Self::from_operator(&h)
    }

    pub fn from_operator(h: &BandedHessenberg) -> Result<Self> {
        let diags = h.diagonals().to_vec();
        let p = diags.len() - 1;
        let r = diags[0].len();
        if diags[p].contains(&0.0) {
            return Err(Error::InvalidSpec("deepest subdiagonal must be nonzero".to_string()));
        }
        let two_diagonal = h.two_diagonal();
        let lead = sign(p * r.abs_diff(p)) * diags[p].iter().product::<f64>();
        let mut sym = Symbol { p, r, diags, two_diagonal, curve: Vec::new(), lead };
        sym.curve = sym.sample_curve();
        Ok(sym)
    }

    /// Symbol of `x Q_n = Q_{n+1} + a_{n-p} Q_{n-p}` with `a` of period `b.len()`.
    pub fn two_diagonal(p: usize, b: &[f64]) -> Result<Self> {
        let spec = RecurrenceSpec::periodic(p, b)?;
        Self::from_spec(&spec)
    }

    /// Symbol of the limiting periodic operator of a recurrence.
    pub fn from_spec(spec: &RecurrenceSpec) -> Result<Self> {
        let b = spec.limit_period().ok_or_else(|| Error::InvalidSpec("symbol needs periodic limits".to_string()))?;
        let mut d = vec![vec![0.0; b.len()]; spec.p() + 1];
        d[spec.p()] = b;
        Self::new(d)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn diagonals(&self) -> &[Vec<f64>] {
        &self.diags
    }

    pub fn is_two_diagonal(&self) -> bool {
        self.two_diagonal
    }

    pub fn operator(&self) -> BandedHessenberg {
        BandedHessenberg::new(self.diags.clone()).expect("validated on construction")
    }

    /// Same operator viewed with period `m r`.
    pub fn enlarged(&self, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidSpec("enlargement factor must be positive".to_string()));
        }
        let diags = self.diags.iter().map(|d| d.iter().cycle().take(m * self.r).copied().collect()).collect();
        Self::new(diags)
    }

    /// Symbol of the operator with the two-diagonal coefficient order
    /// `b_{r-p-1}, ..., b_0, b_{r-1}, ..., b_{r-p}`.
    pub fn reflected(&self) -> Result<Self> {
        if !self.two_diagonal {
            return Err(Error::InvalidSpec("reflection is defined for the two-diagonal case".to_string()));
        }
        let spec = RecurrenceSpec::periodic(self.p, &self.diags[self.p])?.reflected()?;
        Self::from_spec(&spec)
    }

    /// Leading coefficient `f_p = (-1)^{p(r-p)} prod b`.
    pub fn lead(&self) -> f64 {
        self.lead
    }

    /// `F(z, x)`.
    pub fn matrix(&self, z: Complex64, x: Complex64) -> CMat {
        let r = self.r;
        let mut f = CMat::zeros(r, r);
        for i in 0..r - 1 {
            f[(i, i + 1)] += C1;
        }
        f[(r - 1, 0)] += z.inv();
        for (q, d) in self.diags.iter().enumerate() {
            for (i, b) in d.iter().enumerate() {
                if *b != 0.0 {
                    f[((i + q) % r, i)] += z.powi(((i + q) / r) as i32) * b;
                }
            }
        }
        for i in 0..r {
            f[(i, i)] -= x;
        }
        f
    }

    /// `F^(z, x) = P F(z, x)^T P` with `P` the antidiagonal permutation.
    pub fn reflected_matrix(&self, z: Complex64, x: Complex64) -> CMat {
        let f = self.matrix(z, x);
        let r = self.r;
        CMat::from_fn(r, r, |i, j| f[(r - 1 - j, r - 1 - i)])
    }

    /// `f(z, x)` from the matrix determinant.
    pub fn det(&self, z: Complex64, x: Complex64) -> Complex64 {
        self.matrix(z, x).det()
    }

    fn sample_curve(&self) -> Vec<Vec<f64>> {
        let (p, r) = (self.p, self.r);
        let nz = p + 2;
        let nx = r + 1;
        let samples: Vec<Vec<Complex64>> = (0..nz)
            .map(|a| {
                let z = unit(a, nz);
                (0..nx).map(|b| z * self.det(z, unit(b, nx))).collect()
            })
            .collect();
        let mut curve = vec![vec![0.0; nx]; nz];
        for (j, row) in curve.iter_mut().enumerate() {
            for (m, c) in row.iter_mut().enumerate() {
                let mut acc = C0;
                for (a, s) in samples.iter().enumerate() {
                    for (b, v) in s.iter().enumerate() {
                        acc += v * unit(a * j, nz).conj() * unit(b * m, nx).conj();
                    }
                }
                *c = acc.re / (nz * nx) as f64;
            }
        }
        if self.two_diagonal {
            // f(z, w x) = w^r f(w^r z, x): only z^j x^m with m = r(j+1) mod (p+1) survive
            for (j, row) in curve.iter_mut().enumerate() {
                for (m, c) in row.iter_mut().enumerate() {
                    if m % (p + 1) != (r * j) % (p + 1) {
                        *c = 0.0;
                    }
                }
            }
            // sampling noise on vanishing lattice terms blows up as x^m
            let top = curve.iter().flatten().fold(0.0f64, |a, c| a.max(c.abs()));
            for c in curve.iter_mut().flatten() {
                if c.abs() < SNAP_TOL * top {
                    *c = 0.0;
                }
            }
        }
        curve[0].fill(0.0);
        curve[p + 1].fill(0.0);
        curve[0][0] = sign(r - 1);
        curve[p + 1][0] = self.lead;
        curve
    }

    /// The Laurent coefficients `f_{-1}, f_0(x), ..., f_p(x)` and their
    /// x-derivatives.
    fn coeffs_with_slope(&self, x: Complex64) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut vals = Vec::with_capacity(self.p + 2);
        let mut slopes = Vec::with_capacity(self.p + 2);
        for row in &self.curve {
            let mut v = C0;
            let mut d = C0;
            for c in row.iter().rev() {
                d = d * x + v;
                v = v * x + c;
            }
            vals.push(v);
            slopes.push(d);
        }
        (vals, slopes)
    }

    /// `f_{-1} = (-1)^{r-1}, f_0(x), ..., f_p(x)`, cross-checked against a
    /// discrete Fourier inversion of `z f(z, x)` on `p + 2` roots of unity.
    pub fn laurent_coeffs(&self, x: Complex64) -> Result<Vec<Complex64>> {
        if !(x.re.is_finite() && x.im.is_finite()) {
            return Err(Error::InvalidSpec("x must be finite".to_string()));
        }
        let n = self.p + 2;
        let samples: Vec<Complex64> = (0..n).map(|a| unit(a, n) * self.det(unit(a, n), x)).collect();
        let scale = samples.iter().map(|v| v.norm()).fold(1.0, f64::max);
        let (vals, _) = self.coeffs_with_slope(x);
        for (j, v) in vals.iter().enumerate() {
            let dft: Complex64 = samples.iter().enumerate().map(|(a, s)| s * unit(a * j, n).conj()).sum::<Complex64>() / n as f64;
            if (dft - v).norm() > CONSISTENCY_TOL * scale {
                return Err(Error::Consistency(format!("Laurent coefficient {} off by {:e}", j as i64 - 1, (dft - v).norm())));
            }
        }
        Ok(vals)
    }

    /// `f(z, x)` from the Laurent coefficients.
    pub fn eval(&self, z: Complex64, x: Complex64) -> Complex64 {
        let (vals, _) = self.coeffs_with_slope(x);
        vals.iter().rev().fold(C0, |acc, c| acc * z + c) / z
    }

    /// Branches of the curve over `x`, sorted by modulus.
    pub fn roots(&self, x: Complex64) -> Result<RootBundle> {
        if !(x.re.is_finite() && x.im.is_finite()) {
            return Err(Error::InvalidSpec("x must be finite".to_string()));
        }
        let (vals, slopes) = self.coeffs_with_slope(x);
        let mut z = poly::roots(&vals)?;
        if z.len() != self.p + 1 {
            return Err(Error::Consistency(format!("expected {} branches, got {}", self.p + 1, z.len())));
        }
        z.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
        Ok(RootBundle::assemble(x, z, &vals, &slopes))
    }

    /// Branches over `x`, with labels inside each tie group matched to the
    /// nearest branches of `reference`.
    pub fn roots_continued(&self, x: Complex64, reference: &RootBundle) -> Result<RootBundle> {
        let mut b = self.roots(x)?;
        if reference.roots.len() != b.roots.len() {
            return Err(Error::SizeMismatch("reference bundle has a different branch count".to_string()));
        }
        for g in b.ties.clone() {
            let mut free: Vec<usize> = g.clone();
            let mut order = Vec::with_capacity(g.len());
            for &slot in &g {
                let target = reference.roots[slot];
                let (pos, _) = free
                    .iter()
                    .enumerate()
                    .min_by(|a, c| (b.roots[*a.1] - target).norm().total_cmp(&(b.roots[*c.1] - target).norm()))
                    .expect("tie group is non-empty");
                order.push(free.remove(pos));
            }
            let roots: Vec<Complex64> = order.iter().map(|&i| b.roots[i]).collect();
            let derivs: Vec<Complex64> = order.iter().map(|&i| b.derivatives[i]).collect();
            let flags: Vec<bool> = order.iter().map(|&i| b.near_singular[i]).collect();
            for (k, &slot) in g.iter().enumerate() {
                b.roots[slot] = roots[k];
                b.derivatives[slot] = derivs[k];
                b.near_singular[slot] = flags[k];
            }
        }
        Ok(b)
    }

    /// `det F^{i,j}(z, x)`: row `i` and column `j` removed.
    pub fn minor(&self, i: usize, j: usize, z: Complex64, x: Complex64) -> Complex64 {
        self.matrix(z, x).minor(i, j).det()
    }

    /// `f_0 = (-1)^r z^{-1} det F^{r-1,0}` and `f_l = (-1)^l det F^{l-1,0}`
    /// for `1 <= l <= min(p, r)`.
    pub fn minors_f(&self, z: Complex64, x: Complex64) -> Vec<Complex64> {
        let f = self.matrix(z, x);
        let top = self.p.min(self.r);
        let mut out = Vec::with_capacity(top + 1);
        out.push(f.minor(self.r - 1, 0).det() * sign(self.r) / z);
        for l in 1..=top {
            out.push(f.minor(l - 1, 0).det() * sign(l));
        }
        out
    }

    /// `f~_0 = f_0` and `f~_l = (-1)^l det F^{r-1,r-l}` for `1 <= l <= min(p, r)`.
    pub fn minors_f_tilde(&self, z: Complex64, x: Complex64) -> Vec<Complex64> {
        let f = self.matrix(z, x);
        let r = self.r;
        let top = self.p.min(r);
        let mut out = Vec::with_capacity(top + 1);
        out.push(f.minor(r - 1, 0).det() * sign(r) / z);
        for l in 1..=top {
            out.push(f.minor(r - 1, r - l).det() * sign(l));
        }
        out
    }

    /// `F(z, x)` in double-double arithmetic, as rows.
    fn matrix_dd(&self, z: Cdd, x: Complex64) -> Vec<Vec<Cdd>> {
        let r = self.r;
        let zero = Cdd::new(TwoFloat::from(0.0), TwoFloat::from(0.0));
        let mut f = vec![vec![zero; r]; r];
        for i in 0..r - 1 {
            f[i][i + 1] += dd(C1);
        }
        f[r - 1][0] += dd(C1) / z;
        for (q, d) in self.diags.iter().enumerate() {
            for (i, b) in d.iter().enumerate() {
                if *b != 0.0 {
                    let mut w = dd(Complex64::new(*b, 0.0));
                    for _ in 0..(i + q) / r {
                        w *= z;
                    }
                    f[(i + q) % r][i] += w;
                }
            }
        }
        for (i, row) in f.iter_mut().enumerate() {
            row[i] -= dd(x);
        }
        f
    }

    /// Branch `z` polished by Newton steps on `det F(z, x)` evaluated in
    /// double-double arithmetic.
    pub fn refine_root(&self, z: Complex64, x: Complex64) -> Cdd {
        let (vals, _) = self.coeffs_with_slope(x);
        let mut w = dd(z);
        for _ in 0..4 {
            // f = g / z with g(z) = sum_j vals[j] z^j, so f' = g' / z at a root
            let u = round(w);
            let gz: Complex64 = vals.iter().enumerate().skip(1).map(|(j, v)| v * u.powi(j as i32 - 1) * j as f64).sum();
            let f = det_dd(self.matrix_dd(w, x));
            w -= f / dd(gz / u);
        }
        w
    }

    /// [`Symbol::minors_f`] at a branch refined by [`Symbol::refine_root`],
    /// with the minors evaluated in double-double arithmetic. Needed where
    /// the minors cancel to a small fraction of the matrix scale.
    pub fn minors_f_refined(&self, z: Complex64, x: Complex64) -> Vec<Complex64> {
        let w = self.refine_root(z, x);
        let f = self.matrix_dd(w, x);
        let top = self.p.min(self.r);
        let mut out = Vec::with_capacity(top + 1);
        out.push(round(det_dd(minor_dd(&f, self.r - 1, 0)) / w) * sign(self.r));
        for l in 1..=top {
            out.push(round(det_dd(minor_dd(&f, l - 1, 0))) * sign(l));
        }
        out
    }

    /// `v_j = (-1)^j det F^{r-1,j}(z, x)`.
    pub fn eigenvector(&self, z: Complex64, x: Complex64) -> Vec<Complex64> {
        let f = self.matrix(z, x);
        (0..self.r).map(|j| f.minor(self.r - 1, j).det() * sign(j)).collect()
    }

    fn blocks(&self, x: Complex64) -> (CMat, CMat) {
        let r = self.r;
        let mut b = CMat::zeros(r, r);
        let mut c = CMat::identity(r);
        for i in 0..r {
            for (q, d) in self.diags.iter().enumerate() {
                let mut v = Complex64::new(d[(i + 2 * r - 1 - q) % r], 0.0);
                if q == 0 {
                    v -= x;
                }
                let col = r + i - 1 - q;
                if col >= r {
                    c[(i, col - r)] += v;
                } else {
                    b[(i, col)] += v;
                }
            }
        }
        (b, c)
    }

    /// `A(x) = -C(x)^{-1} B(x)`, advancing `(Q_{rn-r}, ..., Q_{rn-1})` to
    /// `(Q_{rn}, ..., Q_{rn+r-1})`. Needs `r >= p + 1`.
    pub fn transfer_matrix(&self, x: Complex64) -> Result<CMat> {
        let r = self.r;
        if r < self.p + 1 {
            return Err(Error::InvalidSpec(format!("transfer blocks need r >= p + 1, got r = {r}")));
        }
        let (b, c) = self.blocks(x);
        // C is unit lower triangular
        let mut a = CMat::zeros(r, r);
        for col in 0..r {
            for i in 0..r {
                let mut s = -b[(i, col)];
                for t in 0..i {
                    s -= c[(i, t)] * a[(t, col)];
                }
                a[(i, col)] = s;
            }
        }
        Ok(a)
    }

    /// Transfer matrix with its nonzero eigenpairs `(1/z_k, v_k)`. For
    /// `r <= p` the period is enlarged to `m r >= p + 1` and the eigenvectors
    /// are stacked copies `(v, z^{-1} v, ..., z^{1-m} v)`.
    pub fn transfer(&self, x: Complex64) -> Result<Transfer> {
        let bundle = self.roots(x)?;
        let z = &bundle.roots;
        let span = z.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for i in 0..z.len() {
            for k in i + 1..z.len() {
                if (z[i] - z[k]).norm() <= TIE_TOL * span {
                    return Err(Error::Degenerate(format!("branches {i} and {k} collide")));
                }
            }
        }
        let m = if self.r > self.p { 1 } else { (self.p + 1).div_ceil(self.r) };
        let big = if m == 1 { self.clone() } else { self.enlarged(m)? };
        let matrix = big.transfer_matrix(x)?;
        let pairs = z
            .iter()
            .map(|zk| {
                let v = self.eigenvector(*zk, x);
                let mut stacked = Vec::with_capacity(m * self.r);
                for s in 0..m {
                    let w = zk.powi(-(s as i32));
                    stacked.extend(v.iter().map(|c| c * w));
                }
                (zk.powi(-(m as i32)), stacked)
            })
            .collect();
        Ok(Transfer { matrix, pairs, enlargement: m })
    }

    /// Spectrum of the transfer matrix, for cross-checks.
    pub fn transfer_spectrum(&self, x: Complex64) -> Result<Vec<Complex64>> {
        let m = if self.r > self.p { 1 } else { (self.p + 1).div_ceil(self.r) };
        let big = if m == 1 { self.clone() } else { self.enlarged(m)? };
        eigenvalues(&big.transfer_matrix(x)?)
    }
}

/// The `p + 1` branches at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct RootBundle {
    pub x: Complex64,
    /// `|z_0| <= ... <= |z_p|`.
    pub roots: Vec<Complex64>,
    /// Groups of consecutive labels whose moduli agree to [`TIE_TOL`].
    pub ties: Vec<Vec<usize>>,
    /// `z_k'(x) = -f_x / f_z`.
    pub derivatives: Vec<Complex64>,
    /// `|f_z|` fell below the branch-point threshold.
    pub near_singular: Vec<bool>,
    /// Largest `|f(z_k, x)|` relative to the term scale.
    pub residual: f64,
}

impl RootBundle {
    fn assemble(x: Complex64, roots: Vec<Complex64>, vals: &[Complex64], slopes: &[Complex64]) -> Self {
        let mut ties: Vec<Vec<usize>> = Vec::new();
        let mut group = vec![0];
        for k in 1..roots.len() {
            let (lo, hi) = (roots[k - 1].norm(), roots[k].norm());
            if hi - lo <= TIE_TOL * hi {
                group.push(k);
            } else {
                if group.len() > 1 {
                    ties.push(group.clone());
                }
                group = vec![k];
            }
        }
        if group.len() > 1 {
            ties.push(group);
        }
        let mut derivatives = Vec::with_capacity(roots.len());
        let mut near_singular = Vec::with_capacity(roots.len());
        let mut residual: f64 = 0.0;
        for z in &roots {
            // g(z) = z f(z, x) = sum_j vals[j] z^j
            let mut g = C0;
            let mut gz = C0;
            let mut gx = C0;
            let mut scale = 0.0;
            let mut pw = C1;
            for (j, (v, s)) in vals.iter().zip(slopes).enumerate() {
                if j > 0 {
                    gz += v * pw * j as f64;
                    pw *= z;
                }
                g += v * pw;
                gx += s * pw;
                scale += (v * pw).norm();
            }
            residual = residual.max(g.norm() / scale);
            near_singular.push((gz * z).norm() < JACOBIAN_TOL * scale);
            derivatives.push(-gx / gz);
        }
        RootBundle { x, roots, ties, derivatives, near_singular, residual }
    }

    pub fn is_tied(&self, k: usize) -> bool {
        self.ties.iter().any(|g| g.contains(&k))
    }

    pub fn any_near_singular(&self) -> bool {
        self.near_singular.iter().any(|f| *f)
    }

    /// Whether every branch satisfies the curve to the residual tolerance.
    pub fn residual_ok(&self) -> bool {
        self.residual <= RESIDUAL_TOL
    }

    /// `z_0 ... z_k`.
    pub fn head_product(&self, k: usize) -> Complex64 {
        self.roots[..=k].iter().product()
    }
}

/// Transfer matrix and its nonzero eigenpairs.
#[derive(Clone, Debug)]
pub struct Transfer {
    pub matrix: CMat,
    /// `(1/z_k^m, v_k)` in branch order.
    pub pairs: Vec<(Complex64, Vec<Complex64>)>,
    /// Period multiplier `m` used to reach `m r >= p + 1`.
    pub enlargement: usize,
}

impl Transfer {
    /// Largest `|A v - lambda v| / |v|` over the pairs.
    pub fn residual(&self) -> f64 {
        self.pairs
            .iter()
            .map(|(lam, v)| {
                let av = self.matrix.mul_vec(v);
                let num: f64 = av.iter().zip(v).map(|(a, b)| (a - lam * b).norm_sqr()).sum::<f64>().sqrt();
                let den: f64 = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                num / den
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recurrence::eval_q_sequence;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn one_by_one_curve() {
        let s = Symbol::two_diagonal(2, &[1.0]).unwrap();
        let f = s.laurent_coeffs(c(0.7, 0.2)).unwrap();
        let want = [c(1.0, 0.0), c(-0.7, -0.2), C0, C1];
        for (a, b) in f.iter().zip(want) {
            assert!((a - b).norm() < 1e-13, "{a} vs {b}");
        }
        assert_eq!(s.minors_f(c(0.5, 0.0), c(1.0, 0.0))[0], c(-2.0, 0.0));
    }

    #[test]
    fn leading_coefficient() {
        let s = Symbol::two_diagonal(2, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.lead(), 6.0);
        let f = s.laurent_coeffs(c(0.3, -1.1)).unwrap();
        assert!((f[3] - 6.0).norm() < 1e-12);
        assert_eq!(f[0], C1);
    }

    #[test]
    fn smallest_branch_of_cubic() {
        let s = Symbol::two_diagonal(2, &[1.0]).unwrap();
        let b = s.roots(c(10.0, 0.0)).unwrap();
        // z^3 - 10 z + 1 = 0
        let z0 = b.roots[0];
        assert!((z0 * z0 * z0 - 10.0 * z0 + 1.0).norm() < 1e-13);
        assert!((z0.re - 0.100_100_3).abs() < 1e-6 && z0.im.abs() < 1e-14);
        assert!(b.residual_ok());
    }

    #[test]
    fn curve_table_matches_determinant() {
        let s = Symbol::two_diagonal(3, &[1.5, 0.4, 2.0, 0.9, 1.1]).unwrap();
        for (z, x) in [(c(0.4, 0.3), c(1.2, -0.7)), (c(-2.0, 0.1), c(3.0, 2.0))] {
            let a = s.det(z, x);
            let b = s.eval(z, x);
            assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0), "{a} vs {b}");
        }
        let g = Symbol::new(vec![vec![0.3, -0.2], vec![0.5, 1.0], vec![2.0, 0.7]]).unwrap();
        let (z, x) = (c(0.6, -0.2), c(0.8, 0.5));
        assert!((g.det(z, x) - g.eval(z, x)).norm() < 1e-12);
    }

    #[test]
    fn product_and_rotation() {
        let s = Symbol::two_diagonal(2, &[3.0, 1.0, 5.0, 2.0]).unwrap();
        let x = c(0.8, 0.3);
        let b = s.roots(x).unwrap();
        let prod: Complex64 = b.roots.iter().product();
        let want = sign(s.r() + s.p()) / s.lead();
        assert!((prod - want).norm() <= 1e-12 * want.abs());
        let w = unit(1, 3);
        let rb = s.roots(w * x).unwrap();
        for z in &b.roots {
            let target = z * w.powi(-(s.r() as i32));
            assert!(rb.roots.iter().any(|y| (y - target).norm() < 1e-12 * target.norm()));
        }
    }

    #[test]
    fn implicit_derivative() {
        let s = Symbol::two_diagonal(3, &[1.0, 2.0, 0.5]).unwrap();
        let x = c(1.3, 0.4);
        let h = 1e-6;
        let b0 = s.roots(x).unwrap();
        let b1 = s.roots(x + h).unwrap();
        for k in 0..4 {
            let fd = (b1.roots[k] - b0.roots[k]) / h;
            assert!((fd - b0.derivatives[k]).norm() < 1e-4 * fd.norm().max(1.0));
        }
    }

    #[test]
    fn reflected_forms() {
        let s = Symbol::two_diagonal(2, &[3.0, 1.0, 5.0, 2.0, 2.0, 9.0]).unwrap();
        let (z, x) = (c(0.7, 0.2), c(1.1, -0.4));
        let hat = s.reflected_matrix(z, x);
        let r = s.r();
        let f = s.minors_f(z, x);
        for (l, fl) in f.iter().enumerate().skip(1) {
            let alt = hat.minor(r - 1, r - l).det() * sign(l);
            assert!((alt - fl).norm() < 1e-12 * fl.norm().max(1.0));
        }
        let refl = s.reflected().unwrap();
        assert!((refl.det(z, x) - s.det(z, x)).norm() < 1e-10 * s.det(z, x).norm());
        assert_eq!(refl.reflected().unwrap().diagonals(), s.diagonals());
    }

    #[test]
    fn transfer_advances_recurrence() {
        let s = Symbol::two_diagonal(2, &[3.0, 1.0, 5.0, 2.0]).unwrap();
        let x = c(0.9, 0.4);
        let a = s.transfer_matrix(x).unwrap();
        let q: Vec<Complex64> = eval_q_sequence(&s.operator(), 20, x).iter().map(|v| v.to_complex()).collect();
        let next = a.mul_vec(&q[8..12]);
        for (u, v) in next.iter().zip(&q[12..16]) {
            assert!((u - v).norm() < 1e-9 * v.norm().max(1.0));
        }
    }

    #[test]
    fn transfer_eigenpairs() {
        for b in [&[3.0, 1.0, 5.0, 2.0][..], &[2.0][..], &[1.0, 2.0][..], &[0.5, 1.5, 2.5][..]] {
            for p in [2, 3] {
                let s = Symbol::two_diagonal(p, b).unwrap();
                let t = s.transfer(c(0.7, 0.45)).unwrap();
                assert!(t.residual() < 1e-8, "p={p} b={b:?} residual {}", t.residual());
                let spec = s.transfer_spectrum(c(0.7, 0.45)).unwrap();
                let zeros = spec.iter().filter(|v| v.norm() < 1e-8).count();
                assert_eq!(zeros, t.enlargement * s.r() - p - 1);
            }
        }
    }

    #[test]
    fn general_band_transfer() {
        let s = Symbol::new(vec![vec![0.3, -0.2, 0.1], vec![0.5, 1.0, 0.2], vec![2.0, 0.7, 1.3]]).unwrap();
        let t = s.transfer(c(0.4, 0.9)).unwrap();
        assert!(t.residual() < 1e-8);
    }
}
