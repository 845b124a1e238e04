//! Dense univariate polynomials, companion-matrix root finding and Newton
//! interpolation.

use crate::linalg::{hessenberg_eigenvalues, CMat};
use crate::prelude::*;
use crate::scalar::{exponent_of, ldexp, Ring};
use crate::Result;
use core::ops::{Add, Mul, Neg, Sub};
use num_complex::Complex64;

/// Polynomial with ascending coefficients over a ring.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<S> {
    coeffs: Vec<S>,
}

impl<S: Ring> Poly<S> {
    pub fn new(coeffs: Vec<S>) -> Self {
        let mut p = Poly { coeffs };
        p.trim();
        p
    }

    pub fn constant(c: S) -> Self {
        Self::new(vec![c])
    }

    /// `c * x`.
    pub fn linear(c: S) -> Self {
        Self::new(vec![S::zero(), c])
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<S> {
        self.coeffs
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    /// Index of the lowest nonzero coefficient.
    pub fn low_order(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn eval(&self, x: &S) -> S {
        let mut acc = S::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x.clone() + c.clone();
        }
        acc
    }
}

impl<S: Ring> Add for Poly<S> {
    type Output = Poly<S>;
    fn add(self, rhs: Self) -> Self {
        let (mut long, short) = if self.coeffs.len() >= rhs.coeffs.len() { (self.coeffs, rhs.coeffs) } else { (rhs.coeffs, self.coeffs) };
        for (a, b) in long.iter_mut().zip(short) {
            *a = a.clone() + b;
        }
        Poly::new(long)
    }
}

impl<S: Ring> Neg for Poly<S> {
    type Output = Poly<S>;
    fn neg(self) -> Self {
        Poly { coeffs: self.coeffs.into_iter().map(|c| -c).collect() }
    }
}

impl<S: Ring> Sub for Poly<S> {
    type Output = Poly<S>;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<S: Ring> Mul for Poly<S> {
    type Output = Poly<S>;
    fn mul(self, rhs: Self) -> Self {
        if self.coeffs.is_empty() || rhs.coeffs.is_empty() {
            return Poly { coeffs: Vec::new() };
        }
        let mut out = vec![S::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    out[i + j] = out[i + j].clone() + a.clone() * b.clone();
                }
            }
        }
        Poly::new(out)
    }
}

impl<S: Ring> Ring for Poly<S> {
    fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }
    fn one() -> Self {
        Poly::constant(S::one())
    }
    fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
    fn from_real(v: f64) -> Self {
        Poly::constant(S::from_real(v))
    }
}

/// Real coefficients with a shared binary scale: the polynomial is
/// `2^scale * sum coeffs[i] x^i`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyCoeffs {
    pub coeffs: Vec<f64>,
    pub scale: i64,
}

impl PolyCoeffs {
    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        let mut p = PolyCoeffs { coeffs, scale: 0 };
        p.normalize();
        p
    }

    /// Pull the largest coefficient into `[1, 2)`.
    pub fn normalize(&mut self) {
        let m = self.coeffs.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        if m == 0.0 || !m.is_finite() {
            return;
        }
        let e = exponent_of(m);
        for c in &mut self.coeffs {
            *c = ldexp(*c, -e);
        }
        self.scale += e;
    }

    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|c| *c != 0.0).unwrap_or(0)
    }

    /// Unscaled coefficients (may overflow for extreme scales).
    pub fn values(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| ldexp(*c, self.scale)).collect()
    }
}

fn horner(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Newton steps on the given coefficients, accepted only while they reduce `|p|`.
pub fn newton_polish(coeffs: &[Complex64], mut z: Complex64, steps: usize) -> Complex64 {
    let (mut pz, mut dz) = horner(coeffs, z);
    for _ in 0..steps {
        if dz.norm() == 0.0 || pz.norm() == 0.0 {
            break;
        }
        let cand = z - pz / dz;
        let (pc, dc) = horner(coeffs, cand);
        if pc.norm() < pz.norm() {
            z = cand;
            pz = pc;
            dz = dc;
        } else {
            break;
        }
    }
    z
}

/// Roots of `sum coeffs[i] z^i` via the balanced companion matrix followed by
/// Newton polishing. Leading zero coefficients lower the degree; trailing
/// zero coefficients contribute exact zero roots.
pub fn roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let zero = Complex64::new(0.0, 0.0);
    let hi = match coeffs.iter().rposition(|c| *c != zero) {
        Some(h) => h,
        None => return Ok(Vec::new()),
    };
    let lo = coeffs.iter().position(|c| *c != zero).unwrap_or(0);
    let mut out = vec![zero; lo];
    let c = &coeffs[lo..=hi];
    let d = c.len() - 1;
    if d == 0 {
        return Ok(out);
    }
    if d == 1 {
        out.push(-c[0] / c[1]);
        return Ok(out);
    }
    let lead = c[d];
    let comp = CMat::from_fn(d, d, |i, j| {
        if i == 0 {
            -c[d - 1 - j] / lead
        } else if i == j + 1 {
            Complex64::new(1.0, 0.0)
        } else {
            zero
        }
    });
    let ev = hessenberg_eigenvalues(&comp)?;
    for z in ev {
        out.push(newton_polish(c, z, 4));
    }
    Ok(out)
}

/// Roots of a real polynomial.
pub fn real_poly_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let c: Vec<Complex64> = coeffs.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    roots(&c)
}

/// Chebyshev points of the first kind mapped to `[a, b]`.
pub fn chebyshev_nodes(count: usize, a: f64, b: f64) -> Vec<f64> {
    (0..count)
        .map(|i| {
            let t = ((2 * i + 1) as f64 * core::f64::consts::PI / (2 * count) as f64).cos();
            0.5 * (a + b) + 0.5 * (b - a) * t
        })
        .collect()
}

/// Monomial coefficients of the interpolant through `(nodes[i], values[i])`,
/// via divided differences and expansion of the Newton form.
pub fn newton_interpolate(nodes: &[f64], values: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    assert_eq!(n, values.len());
    let mut dd = values.to_vec();
    for level in 1..n {
        for i in (level..n).rev() {
            dd[i] = (dd[i] - dd[i - 1]) / (nodes[i] - nodes[i - level]);
        }
    }
    let mut coeffs = vec![0.0; n];
    for k in (0..n).rev() {
        // coeffs <- coeffs * (x - nodes[k]) + dd[k]
        for i in (1..n).rev() {
            coeffs[i] = coeffs[i - 1] - nodes[k] * coeffs[i];
        }
        coeffs[0] = -nodes[k] * coeffs[0] + dd[k];
    }
    coeffs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_of_cubic() {
        // 2(z+1)(z-0.5)(z-4) = 2z^3 - 7z^2 - 5z + 4
        let r = real_poly_roots(&[4.0, -5.0, -7.0, 2.0]).unwrap();
        let mut re: Vec<f64> = r.iter().map(|z| z.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in re.iter().zip([-1.0, 0.5, 4.0]) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn trailing_zeros_give_zero_roots() {
        let r = real_poly_roots(&[0.0, 0.0, -2.0, 1.0]).unwrap();
        assert_eq!(r.iter().filter(|z| z.norm() == 0.0).count(), 2);
        assert!(r.iter().any(|z| (z.re - 2.0).abs() < 1e-14));
    }

    #[test]
    fn wide_dynamic_range() {
        // (z - 1e-30)(z - 1)(z - 1e20), expanded
        let a = 1e-30;
        let b = 1.0;
        let c = 1e20;
        let coeffs = [-a * b * c, a * b + a * c + b * c, -(a + b + c), 1.0];
        let mut r: Vec<f64> = real_poly_roots(&coeffs).unwrap().iter().map(|z| z.norm()).collect();
        r.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert!((r[0] / a - 1.0).abs() < 1e-10);
        assert!((r[1] - 1.0).abs() < 1e-10);
        assert!((r[2] / c - 1.0).abs() < 1e-10);
    }

    #[test]
    fn interpolation_recovers_polynomial() {
        let p = [1.5, -2.0, 0.25, 3.0, -0.5];
        let nodes = chebyshev_nodes(5, -1.0, 2.0);
        let vals: Vec<f64> = nodes.iter().map(|x| p.iter().rev().fold(0.0, |a, c| a * x + c)).collect();
        let got = newton_interpolate(&nodes, &vals);
        for (a, b) in got.iter().zip(p) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn poly_ring_product() {
        let a = Poly::new(vec![1.0, 1.0]);
        let b = Poly::new(vec![-1.0, 1.0]);
        assert_eq!((a * b).coeffs(), &[-1.0, 0.0, 1.0]);
    }
}
