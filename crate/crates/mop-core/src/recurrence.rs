//! Recurrence specifications and evaluation of the polynomials they generate.
//!
//! A spec fixes the depth `p` and a positive coefficient sequence `a_n`; the
//! polynomials satisfy `x Q_n = Q_{n+1} + a_{n-p} Q_{n-p}` with `Q_0 = 1` and
//! `Q_{-1} = ... = Q_{-p} = 0`.

use crate::geneig::{zeros_p, IndexTuple};
use crate::poly::PolyCoeffs;
use crate::prelude::*;
use crate::scalar::{exponent_of, ldexp, Ring, ScaledScalar};
use crate::{Error, Result};
use num_complex::Complex64;
use num_rational::BigRational;

/// Where the coefficients after an explicit prefix come from.
#[derive(Clone, Debug, PartialEq)]
pub enum Tail {
    /// `a_n = values[n mod values.len()]`.
    Periodic(Vec<f64>),
    Constant(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Coefficients {
    /// `a_n = values[n mod r]`.
    Periodic(Vec<f64>),
    Constant(f64),
    /// `a_n = prefix[n]` while available, then the tail.
    Explicit {
        prefix: Vec<f64>,
        tail: Tail,
    },
    /// `a_n = base[n mod r] + amplitude / (n + 1)^2`.
    Perturbed {
        base: Vec<f64>,
        amplitude: f64,
    },
}

/// Depth plus coefficient source.
#[derive(Clone, Debug, PartialEq)]
pub struct RecurrenceSpec {
    p: usize,
    coefficients: Coefficients,
}

fn check_positive(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidSpec(format!("{what}: empty coefficient list")));
    }
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::InvalidSpec(format!("{what}: coefficient {v} is not positive")));
    }
    Ok(())
}

impl RecurrenceSpec {
    pub fn new(p: usize, coefficients: Coefficients) -> Result<Self> {
        if p < 1 {
            return Err(Error::InvalidSpec("depth p must be at least 1".to_string()));
        }
        match &coefficients {
            Coefficients::Periodic(b) => check_positive(b, "periodic")?,
            Coefficients::Constant(a) => check_positive(&[*a], "constant")?,
            Coefficients::Explicit { prefix, tail } => {
                if !prefix.is_empty() {
                    check_positive(prefix, "prefix")?;
                }
                match tail {
                    Tail::Periodic(b) => check_positive(b, "tail")?,
                    Tail::Constant(a) => check_positive(&[*a], "tail")?,
                }
            }
            Coefficients::Perturbed { base, amplitude } => {
                check_positive(base, "perturbed")?;
                let lo = base.iter().cloned().fold(f64::INFINITY, f64::min);
                if !amplitude.is_finite() || lo + amplitude.min(0.0) <= 0.0 {
                    return Err(Error::InvalidSpec("perturbation makes a coefficient nonpositive".to_string()));
                }
            }
        }
        Ok(RecurrenceSpec { p, coefficients })
    }

    pub fn periodic(p: usize, b: &[f64]) -> Result<Self> {
        Self::new(p, Coefficients::Periodic(b.to_vec()))
    }

    pub fn constant(p: usize, a: f64) -> Result<Self> {
        Self::new(p, Coefficients::Constant(a))
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.coefficients
    }

    /// The coefficient `a_n`.
    pub fn a(&self, n: usize) -> f64 {
        match &self.coefficients {
            Coefficients::Periodic(b) => b[n % b.len()],
            Coefficients::Constant(a) => *a,
            Coefficients::Explicit { prefix, tail } => {
                if n < prefix.len() {
                    prefix[n]
                } else {
                    match tail {
                        Tail::Periodic(b) => b[n % b.len()],
                        Tail::Constant(a) => *a,
                    }
                }
            }
            Coefficients::Perturbed { base, amplitude } => {
                let m = (n + 1) as f64;
                base[n % base.len()] + amplitude / (m * m)
            }
        }
    }

    /// The limiting period and its coefficient block, if the sequence is
    /// periodic or asymptotically periodic.
    pub fn limit_period(&self) -> Option<Vec<f64>> {
        match &self.coefficients {
            Coefficients::Periodic(b) => Some(b.clone()),
            Coefficients::Constant(a) => Some(vec![*a]),
            Coefficients::Explicit { tail: Tail::Periodic(b), .. } => Some(b.clone()),
            Coefficients::Explicit { tail: Tail::Constant(a), .. } => Some(vec![*a]),
            Coefficients::Perturbed { base, .. } => Some(base.clone()),
        }
    }

    /// Exactly periodic coefficients, if any.
    pub fn exact_period(&self) -> Option<Vec<f64>> {
        match &self.coefficients {
            Coefficients::Periodic(b) => Some(b.clone()),
            Coefficients::Constant(a) => Some(vec![*a]),
            _ => None,
        }
    }

    /// Reversed ordering `a_{r-p-1}, ..., a_0, a_{r-1}, ..., a_{r-p}` of a
    /// periodic spec with `r >= p`. Its symbol is the reflection of the
    /// original one.
    pub fn reflected(&self) -> Result<Self> {
        let b = self.exact_period().ok_or_else(|| Error::InvalidSpec("reflection needs periodic coefficients".to_string()))?;
        let r = b.len();
        if r < self.p {
            return Err(Error::InvalidSpec(format!("reflection needs r >= p (r={r}, p={})", self.p)));
        }
        let mut out = Vec::with_capacity(r);
        for j in 0..r {
            let idx = if j + self.p < r { r - self.p - 1 - j } else { 2 * r - 1 - self.p - j };
            out.push(b[idx]);
        }
        Self::periodic(self.p, &out)
    }
}

/// Read access to the band of a lower Hessenberg operator: `entry(q, j)` is
/// the coefficient on the `q`-th subdiagonal in column `j` (the diagonal is
/// `q = 0`). The superdiagonal is identically one.
pub trait BandedOperator {
    fn depth(&self) -> usize;
    fn entry(&self, q: usize, j: usize) -> f64;
    /// Whether only the deepest subdiagonal is nonzero.
    fn two_diagonal(&self) -> bool;
}

impl BandedOperator for RecurrenceSpec {
    fn depth(&self) -> usize {
        self.p
    }
    fn entry(&self, q: usize, j: usize) -> f64 {
        if q == self.p {
            self.a(j)
        } else {
            0.0
        }
    }
    fn two_diagonal(&self) -> bool {
        true
    }
}

/// Lower Hessenberg operator with `p + 1` periodic subdiagonals (diagonal
/// included) and ones on the superdiagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct BandedHessenberg {
    /// `diagonals[q][j mod r]` is the entry on subdiagonal `q`.
    diagonals: Vec<Vec<f64>>,
}

impl BandedHessenberg {
    pub fn new(diagonals: Vec<Vec<f64>>) -> Result<Self> {
        if diagonals.len() < 2 {
            return Err(Error::InvalidSpec("need at least the diagonal and one subdiagonal".to_string()));
        }
        let r = diagonals[0].len();
        if r == 0 || diagonals.iter().any(|d| d.len() != r) {
            return Err(Error::InvalidSpec("subdiagonal tables must share one nonzero period".to_string()));
        }
        if diagonals.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("non-finite entry".to_string()));
        }
        Ok(BandedHessenberg { diagonals })
    }

    pub fn from_spec(spec: &RecurrenceSpec) -> Result<Self> {
        let b = spec.exact_period().ok_or_else(|| Error::InvalidSpec("banded form needs periodic coefficients".to_string()))?;
        let mut d = vec![vec![0.0; b.len()]; spec.p() + 1];
        d[spec.p()] = b;
        Self::new(d)
    }

    pub fn period(&self) -> usize {
        self.diagonals[0].len()
    }

    pub fn diagonals(&self) -> &[Vec<f64>] {
        &self.diagonals
    }
}

impl BandedOperator for BandedHessenberg {
    fn depth(&self) -> usize {
        self.diagonals.len() - 1
    }
    fn entry(&self, q: usize, j: usize) -> f64 {
        let d = &self.diagonals[q];
        d[j % d.len()]
    }
    fn two_diagonal(&self) -> bool {
        self.diagonals[..self.diagonals.len() - 1].iter().flatten().all(|v| *v == 0.0)
    }
}

const RESCALE_HI: i64 = 512;
const RESCALE_LO: i64 = -512;

/// Sliding-window forward recursion on the characteristic polynomials of the
/// operator, started at index `l` (`Q_{l,l} = 1`). Values are kept as
/// doubles that share one binary exponent; the window is rescaled whenever
/// its largest entry leaves `[2^-512, 2^512]`.
fn run_recursion(h: &dyn BandedOperator, l: usize, n: usize, x: Complex64, mut visit: impl FnMut(usize, ScaledScalar)) {
    let p = h.depth();
    // window[i] holds Q_{m - p + i} for the current m.
    let mut window = vec![Complex64::new(0.0, 0.0); p + 1];
    window[p] = Complex64::new(1.0, 0.0);
    let mut exp: i64 = 0;
    visit(l, ScaledScalar::ONE);
    for m in l..n {
        // Q_{m+1} = x Q_m - sum_q a^{(q)}_{m-q} Q_{m-q}
        let mut next = x * window[p];
        for q in 0..=p {
            if m < l + q {
                break;
            }
            let a = h.entry(q, m - q);
            if a != 0.0 {
                next -= window[p - q] * a;
            }
        }
        window.rotate_left(1);
        window[p] = next;
        let big = window.iter().fold(0.0f64, |acc, v| acc.max(v.re.abs()).max(v.im.abs()));
        if big > 0.0 && big.is_finite() {
            let e = exponent_of(big);
            if !(RESCALE_LO..=RESCALE_HI).contains(&e) {
                for v in window.iter_mut() {
                    *v = Complex64::new(ldexp(v.re, -e), ldexp(v.im, -e));
                }
                exp += e;
            }
        }
        visit(m + 1, ScaledScalar::from_parts(window[p], exp));
    }
}

/// `Q_n(x)` as a scaled scalar.
pub fn eval_q(h: &dyn BandedOperator, n: usize, x: Complex64) -> ScaledScalar {
    eval_q_shifted(h, n, 0, x)
}

/// `Q_{n,l}(x)`: same recurrence started from `Q_{l,l} = 1`. Zero for `n < l`.
pub fn eval_q_shifted(h: &dyn BandedOperator, n: usize, l: usize, x: Complex64) -> ScaledScalar {
    if n < l {
        return ScaledScalar::ZERO;
    }
    let mut out = ScaledScalar::ONE;
    run_recursion(h, l, n, x, |m, v| {
        if m == n {
            out = v;
        }
    });
    out
}

/// `Q_0(x), ..., Q_n(x)`.
pub fn eval_q_sequence(h: &dyn BandedOperator, n: usize, x: Complex64) -> Vec<ScaledScalar> {
    let mut out = Vec::with_capacity(n + 1);
    run_recursion(h, 0, n, x, |_, v| out.push(v));
    out
}

fn coeffs_generic<S: Ring>(h: &dyn BandedOperator, n: usize, l: usize) -> Vec<S> {
    let p = h.depth();
    if n < l {
        return Vec::new();
    }
    let mut hist: Vec<Vec<S>> = vec![vec![S::one()]];
    for m in l..n {
        let cur = &hist[hist.len() - 1];
        let mut next = vec![S::zero(); cur.len() + 1];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] = c.clone();
        }
        for q in 0..=p {
            if m < l + q {
                break;
            }
            let a = h.entry(q, m - q);
            if a == 0.0 {
                continue;
            }
            let a = S::from_real(a);
            let prev = &hist[hist.len() - 1 - q];
            for (i, c) in prev.iter().enumerate() {
                next[i] = next[i].clone() - a.clone() * c.clone();
            }
        }
        hist.push(next);
        if hist.len() > p + 2 {
            hist.remove(0);
        }
    }
    hist.pop().unwrap()
}

/// Floating coefficients of `Q_{n,l}` (ascending).
pub fn coeffs_q(h: &dyn BandedOperator, n: usize, l: usize) -> PolyCoeffs {
    PolyCoeffs::from_coeffs(coeffs_generic::<f64>(h, n, l))
}

/// Maximum degree accepted by the exact rational tier.
pub const EXACT_TIER_LIMIT: usize = 64;

/// Exact coefficients of `Q_{n,l}`; every double is a dyadic rational, so
/// the recursion is carried out without rounding.
pub fn coeffs_q_exact(h: &dyn BandedOperator, n: usize, l: usize) -> Result<Vec<BigRational>> {
    if n > EXACT_TIER_LIMIT {
        return Err(Error::SizeLimit { what: "exact coefficient tier", limit: EXACT_TIER_LIMIT });
    }
    Ok(coeffs_generic::<BigRational>(h, n, l))
}

/// Zeros of `Q_n` with multiplicity.
#[derive(Clone, Debug, PartialEq)]
pub struct QZeros {
    pub zeros: Vec<Complex64>,
    /// Set when a zero of `Q_n` in `y = x^{p+1}` came back visibly complex.
    pub ill_conditioned: bool,
}

/// Zeros of `Q_n`: the lacunary form `Q_n = x^m Qtilde(x^{p+1})` is solved in
/// `y` and each positive `y` is spread over the `p+1` rays of the star.
pub fn zeros_q(h: &dyn BandedOperator, n: usize) -> Result<QZeros> {
    let p = h.depth();
    if n == 0 {
        return Ok(QZeros { zeros: Vec::new(), ill_conditioned: false });
    }
    let t = IndexTuple::pk(p, 0, n)?;
    let z = zeros_p(h, &t)?;
    let mut zeros = vec![Complex64::new(0.0, 0.0); z.m];
    let p1 = p as f64 + 1.0;
    for y in &z.y {
        let r = y.abs().powf(1.0 / p1);
        let base = if *y >= 0.0 { 0.0 } else { core::f64::consts::PI / p1 };
        for j in 0..=p {
            zeros.push(Complex64::from_polar(r, base + 2.0 * core::f64::consts::PI * j as f64 / p1));
        }
    }
    Ok(QZeros { zeros, ill_conditioned: z.max_imag > 1e-8 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn cube_roots_of_three() {
        let s = RecurrenceSpec::periodic(2, &[3.0]).unwrap();
        let z = zeros_q(&s, 3).unwrap();
        assert_eq!(z.zeros.len(), 3);
        for w in &z.zeros {
            assert!((w.powu(3) - c(3.0, 0.0)).norm() < 1e-13);
        }
        assert_eq!(zeros_q(&s, 2).unwrap().zeros, vec![c(0.0, 0.0); 2]);
    }

    #[test]
    fn initial_monomials() {
        let s = RecurrenceSpec::periodic(3, &[2.0, 1.0, 0.5]).unwrap();
        let x = c(0.7, -0.2);
        for n in 0..=3 {
            let q = eval_q(&s, n, x).to_complex();
            assert!((q - x.powu(n as u32)).norm() < 1e-14);
        }
    }

    #[test]
    fn cubic_example() {
        // p = 2, constant 3: Q_3 = x^3 - 3
        let s = RecurrenceSpec::constant(2, 3.0).unwrap();
        let q = coeffs_q(&s, 3, 0);
        assert_eq!(q.values(), vec![-3.0, 0.0, 0.0, 1.0]);
        let v = eval_q(&s, 3, c(2.0, 0.0)).to_complex();
        assert!((v.re - 5.0).abs() < 1e-14);
    }

    #[test]
    fn shifted_polynomials() {
        let s = RecurrenceSpec::periodic(2, &[3.0, 2.0, 5.0]).unwrap();
        assert!(eval_q_shifted(&s, 3, 4, c(1.0, 0.0)).is_zero());
        let x = c(1.3, 0.4);
        // Q_{l..l+p, l} are monomials in x
        for k in 0..=2 {
            let v = eval_q_shifted(&s, 4 + k, 4, x).to_complex();
            assert!((v - x.powu(k as u32)).norm() < 1e-13);
        }
    }

    #[test]
    fn rescaling_is_transparent() {
        let s = RecurrenceSpec::periodic(2, &[3.0, 1.0, 5.0, 2.0, 2.0, 9.0, 6.0, 1.0]).unwrap();
        let x = c(40.0, 3.0);
        let seq = eval_q_sequence(&s, 400, x);
        // magnitudes grow like |x|^n: far outside the double range
        assert!(seq[400].ln_abs() > 1000.0);
        let direct = eval_q(&s, 400, x);
        assert_eq!(direct, seq[400]);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(RecurrenceSpec::periodic(0, &[1.0]).is_err());
        assert!(RecurrenceSpec::periodic(2, &[1.0, -1.0]).is_err());
        assert!(RecurrenceSpec::periodic(2, &[]).is_err());
        assert!(RecurrenceSpec::new(2, Coefficients::Perturbed { base: vec![1.0], amplitude: -2.0 }).is_err());
    }

    #[test]
    fn reflected_ordering() {
        let s = RecurrenceSpec::periodic(2, &[0.0, 1.0, 2.0, 3.0].map(|v| v + 1.0)).unwrap();
        // a_{r-p-1}, ..., a_0, a_{r-1}, ..., a_{r-p} with r = 4, p = 2: a1 a0 a3 a2
        assert_eq!(s.reflected().unwrap().exact_period().unwrap(), vec![2.0, 1.0, 4.0, 3.0]);
    }

    #[test]
    fn explicit_tail_and_perturbation() {
        let s = RecurrenceSpec::new(1, Coefficients::Explicit { prefix: vec![7.0, 8.0], tail: Tail::Periodic(vec![1.0, 2.0]) }).unwrap();
        assert_eq!((s.a(0), s.a(1), s.a(2), s.a(3)), (7.0, 8.0, 1.0, 2.0));
        let t = RecurrenceSpec::new(1, Coefficients::Perturbed { base: vec![1.0], amplitude: 4.0 }).unwrap();
        assert_eq!(t.a(1), 2.0);
    }
}
