//! Patterns: the 0/1 sequences indexing the nonzero terms in the permutation
//! expansion of `P^{(n_0..n_k)}` for a two-diagonal matrix. A pattern marks
//! with `s_j = 1` the columns `j` where the coefficient `a_j` is picked.

use crate::geneig::IndexTuple;
use crate::prelude::*;
use crate::recurrence::RecurrenceSpec;
use crate::scalar::Ring;
use crate::{Error, Result};

/// Largest `n` accepted by the exponential enumeration.
pub const PATTERN_GUARD: usize = 24;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    pub bits: Vec<bool>,
    /// `|s|`, the number of ones among `s_0..s_{n-p-1}`.
    pub weight: usize,
}

/// Fixed values of the boundary conditions; `None` where the bit is free.
fn boundary(p: usize, t: &IndexTuple) -> Vec<Option<bool>> {
    let n = t.n();
    let k = t.k();
    let head = &t.indices()[..k];
    (0..n)
        .map(|j| {
            if j + p >= n {
                Some(head.contains(&j))
            } else if j < k {
                Some(true)
            } else {
                None
            }
        })
        .collect()
}

fn check_tuple(p: usize, t: &IndexTuple) -> Result<()> {
    if t.n() > PATTERN_GUARD {
        return Err(Error::SizeLimit { what: "pattern enumeration", limit: PATTERN_GUARD });
    }
    if t.n() < p + t.k() || t.indices().iter().any(|v| v + p < t.n()) {
        return Err(Error::InvalidIndices(format!("patterns need n - p <= n_0 and n >= p + k, got {:?}", t.indices())));
    }
    Ok(())
}

/// Check all pattern-rule windows that end at or before `upto` (exclusive).
fn rule_ok(p: usize, k: usize, n: usize, bits: &[bool], upto: usize) -> bool {
    for j in 0..n.saturating_sub(p) {
        if j + p >= upto {
            break;
        }
        if bits[j] && bits[j + 1..=j + p].iter().filter(|b| **b).count() != k {
            return false;
        }
    }
    true
}

/// Boundary conditions and the pattern rule.
pub fn validate(p: usize, t: &IndexTuple, bits: &[bool]) -> Result<()> {
    let n = t.n();
    let k = t.k();
    if bits.len() != n {
        return Err(Error::InvalidIndices(format!("pattern has length {}, expected {n}", bits.len())));
    }
    for (j, fixed) in boundary(p, t).iter().enumerate() {
        if let Some(v) = fixed {
            if bits[j] != *v {
                return Err(Error::InvalidIndices(format!("boundary bit s_{j} must be {}", *v as u8)));
            }
        }
    }
    if !rule_ok(p, k, n, bits, n) {
        return Err(Error::InvalidIndices("pattern rule violated".to_string()));
    }
    Ok(())
}

fn weight(p: usize, bits: &[bool]) -> usize {
    let n = bits.len();
    bits[..n.saturating_sub(p)].iter().filter(|b| **b).count()
}

struct Search<'a> {
    p: usize,
    k: usize,
    n: usize,
    fixed: Vec<Option<bool>>,
    bits: Vec<bool>,
    visit: &'a mut dyn FnMut(&[bool]) -> bool,
}

impl Search<'_> {
    // Placing bit `i` completes the window of `j = i - p`; windows of earlier
    // ones must not overflow and must still be fillable.
    fn feasible(&self, i: usize) -> bool {
        let lo = i.saturating_sub(self.p);
        for j in lo..i {
            if j + self.p >= self.n || !self.bits[j] {
                continue;
            }
            let ones = self.bits[j + 1..=i].iter().filter(|b| **b).count();
            let left = j + self.p - i;
            if ones > self.k || ones + left < self.k {
                return false;
            }
        }
        true
    }

    fn run(&mut self, i: usize) -> bool {
        if i == self.n {
            return (self.visit)(&self.bits);
        }
        let choices: &[bool] = match self.fixed[i] {
            Some(true) => &[true],
            Some(false) => &[false],
            None => &[false, true],
        };
        for &b in choices {
            self.bits[i] = b;
            if self.feasible(i) && !self.run(i + 1) {
                return false;
            }
        }
        self.bits[i] = false;
        true
    }
}

fn search(p: usize, t: &IndexTuple, fixed: Vec<Option<bool>>, visit: &mut dyn FnMut(&[bool]) -> bool) {
    let n = t.n();
    let mut s = Search { p, k: t.k(), n, fixed, bits: vec![false; n], visit };
    s.run(0);
}

/// All patterns for the tuple, depth first with `0` tried before `1`.
pub fn enumerate(p: usize, t: &IndexTuple) -> Result<Vec<Pattern>> {
    check_tuple(p, t)?;
    let mut out = Vec::new();
    search(p, t, boundary(p, t), &mut |bits| {
        out.push(Pattern { bits: bits.to_vec(), weight: weight(p, bits) });
        true
    });
    Ok(out)
}

/// Exponent of `-x` contributed by a pattern of weight `w`.
pub fn term_exponent(p: usize, t: &IndexTuple, w: usize) -> Result<usize> {
    let k = t.k();
    let total = (k + 1) * (t.n() - k);
    total.checked_sub((p + 1) * w + t.shift()).ok_or_else(|| Error::Consistency(format!("negative exponent for weight {w}")))
}

/// `sum_s (-1)^{(p-k)|s|} (prod a_j^{s_j}) (-x)^{(k+1)(n-k) - (p+1)|s| - q}`
/// over a ring; `minus_x` stands for `-x`.
pub fn pattern_expansion<R: Ring>(spec: &RecurrenceSpec, t: &IndexTuple, minus_x: &R) -> Result<R> {
    let p = spec.p();
    let k = t.k();
    let mut acc = R::zero();
    for s in enumerate(p, t)? {
        let mut term = R::one();
        for (j, b) in s.bits.iter().enumerate().take(t.n().saturating_sub(p)) {
            if *b {
                term = term * R::from_real(spec.a(j));
            }
        }
        for _ in 0..term_exponent(p, t, s.weight)? {
            term = term * minus_x.clone();
        }
        acc = if (p - k) * s.weight % 2 == 1 { acc - term } else { acc + term };
    }
    Ok(acc)
}

/// Signs of the terms `(-1)^{(k+1)|s|} y^{-|s|}` after factoring out
/// `(-x)^{(k+1)(n-k)-q}`, at real `y = x^{p+1}`: `(positive, negative)` counts.
pub fn term_signs(p: usize, t: &IndexTuple, y: f64) -> Result<(usize, usize)> {
    let k = t.k();
    let mut pos = 0;
    let mut neg = 0;
    for s in enumerate(p, t)? {
        let flip = ((k + 1) * s.weight) % 2 == 1;
        let yneg = y < 0.0 && s.weight % 2 == 1;
        if flip != yneg {
            neg += 1;
        } else {
            pos += 1;
        }
    }
    Ok((pos, neg))
}

/// Complete `prefix = (s_0..s_{n-K})` to a pattern for the tuple, where
/// `K = n + 1 - prefix.len()` must be at least `(p+1)(k+1) + pk`. Uses the
/// staircase construction: walk the ones of the last prefix window to the
/// front, fill a run of `k` ones, then walk them out to the boundary
/// positions `n_0..n_{k-1}`.
pub fn complete_pattern(p: usize, t: &IndexTuple, prefix: &[bool]) -> Result<Pattern> {
    let n = t.n();
    let k = t.k();
    let need = (p + 1) * (k + 1) + p * k;
    if prefix.is_empty() || prefix.len() > n + 1 || n + 1 - prefix.len() < need {
        return Err(Error::InvalidIndices(format!("prefix of length {} leaves fewer than {need} free bits", prefix.len())));
    }
    if prefix.len() < k || prefix[..k].iter().any(|b| !b) {
        return Err(Error::InfeasiblePrefix);
    }
    let plen = prefix.len();
    // pattern rule on j in [0, n-K-p], i.e. windows lying inside the prefix
    for j in 0..plen.saturating_sub(p) {
        if prefix[j] && prefix[j + 1..=j + p].iter().filter(|b| **b).count() != k {
            return Err(Error::InfeasiblePrefix);
        }
    }
    let staircase = if n + 1 - plen == need { staircase(p, t, prefix) } else { None };
    let bits = match staircase {
        Some(b) => b,
        None => {
            let mut fixed = boundary(p, t);
            for (j, b) in prefix.iter().enumerate() {
                match fixed[j] {
                    Some(v) if v != *b => return Err(Error::InfeasiblePrefix),
                    _ => fixed[j] = Some(*b),
                }
            }
            let mut found = None;
            search(p, t, fixed, &mut |b| {
                found = Some(b.to_vec());
                false
            });
            found.ok_or(Error::InfeasiblePrefix)?
        }
    };
    Ok(Pattern { weight: weight(p, &bits), bits })
}

fn staircase(p: usize, t: &IndexTuple, prefix: &[bool]) -> Option<Vec<bool>> {
    let n = t.n();
    let k = t.k();
    let head = &t.indices()[..k];
    let plen = prefix.len();
    if plen < p {
        return None;
    }
    let mut bits = vec![false; n];
    bits[..plen].copy_from_slice(prefix);
    let m = plen - 1;
    let window = &bits[m + 1 - p..=m];
    let mut pos: Vec<usize> = (1..=p).filter(|i| window[i - 1]).collect();
    if pos.len() == k + 1 {
        pos.remove(0);
    }
    if pos.len() != k {
        return None;
    }
    for g in 0..=k {
        let base = m + g * p;
        for (j, pj) in pos.iter().enumerate() {
            bits[base + if j < g { j + 1 } else { *pj }] = true;
        }
    }
    for i in 0..k {
        bits[m + (k + 1) * p + 1 + i] = true;
    }
    let mt = m + (k + 1) * (p + 1);
    for g in 1..=k {
        let start = mt + (g - 1) * p;
        for nj in &head[..g] {
            bits[start + p + nj - n] = true;
        }
        for off in 0..k - g {
            bits[start + p - 1 - off] = true;
        }
    }
    validate(p, t, &bits).ok().map(|_| bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geneig::{det_p_exact, IndexTuple};
    use num_rational::BigRational;

    fn bits(v: &[u8]) -> Vec<bool> {
        v.iter().map(|b| *b == 1).collect()
    }

    #[test]
    fn two_patterns_for_cubic() {
        let t = IndexTuple::pk(2, 0, 3).unwrap();
        let all = enumerate(2, &t).unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].bits, bits(&[0, 0, 0]));
        assert_eq!(all[1].bits, bits(&[1, 0, 0]));
    }

    #[test]
    fn worked_example_is_a_pattern() {
        let t = IndexTuple::new(4, vec![14, 15, 16]).unwrap();
        let s = bits(&[1, 1, 0, 1, 0, 1, 1, 0, 0, 1, 1, 1, 0, 0, 1, 1]);
        validate(4, &t, &s).unwrap();
        assert_eq!(weight(4, &s), 8);
        assert!(enumerate(4, &t).unwrap().iter().any(|p| p.bits == s));
    }

    #[test]
    fn full_level_has_one_pattern() {
        let t = IndexTuple::pk(3, 3, 11).unwrap();
        let all = enumerate(3, &t).unwrap();
        assert_eq!(all.len(), 1);
        assert!(all[0].bits[..8].iter().all(|b| *b));
    }

    #[test]
    fn expansion_matches_cubic() {
        let s = RecurrenceSpec::periodic(2, &[3.0]).unwrap();
        let t = IndexTuple::pk(2, 0, 3).unwrap();
        let x = 2.0;
        assert_eq!(pattern_expansion(&s, &t, &-x).unwrap(), -5.0);
        let xq = <BigRational as Ring>::from_real(0.625);
        assert_eq!(pattern_expansion(&s, &t, &-xq.clone()).unwrap(), det_p_exact(&s, &t, &xq));
    }

    #[test]
    fn guard_rejects_large_n() {
        let t = IndexTuple::pk(2, 1, 30).unwrap();
        assert!(matches!(enumerate(2, &t), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn zero_prefix_completes_to_zeros() {
        let t = IndexTuple::pk(2, 0, 10).unwrap();
        let c = complete_pattern(2, &t, &[false; 8]).unwrap();
        assert!(c.bits.iter().all(|b| !b));
    }

    #[test]
    fn staircase_reaches_boundary() {
        let p = 3;
        let k = 2;
        let n = 24;
        let t = IndexTuple::new(p, vec![21, 23, 24]).unwrap();
        let need = (p + 1) * (k + 1) + p * k;
        let prefix = bits(&[1, 1, 0, 1, 1, 0, 1]);
        assert_eq!(n + 1 - prefix.len(), need);
        let c = staircase(p, &t, &prefix).expect("staircase applies");
        validate(p, &t, &c).unwrap();
        assert_eq!(complete_pattern(p, &t, &prefix).unwrap().bits, c);
        assert_eq!(&c[..prefix.len()], &prefix[..]);
    }

    #[test]
    fn bad_prefix_is_rejected() {
        let t = IndexTuple::pk(2, 1, 20).unwrap();
        assert_eq!(complete_pattern(2, &t, &bits(&[1, 1, 1, 0])), Err(Error::InfeasiblePrefix));
    }
}
