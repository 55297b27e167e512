//! The factor base of small primes and the trial-division smoothness test.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};

use crate::arith::primes_below;
use crate::error::{Error, Result};

pub const MIN_DEFAULT_BOUND: u64 = 10;
pub const MAX_DEFAULT_BOUND: u64 = 1_000_000;

/// Exponents of a factorization over a [`FactorBase`].
///
/// When the base includes the unit `-1`, index 0 holds its exponent and the
/// prime exponents follow.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ExponentVector(Vec<i64>);

impl ExponentVector {
    pub fn new(entries: Vec<i64>) -> Self {
        ExponentVector(entries)
    }

    pub fn entries(&self) -> &[i64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn one_norm(&self) -> u64 {
        self.0.iter().map(|e| e.unsigned_abs()).sum()
    }

    pub fn into_inner(self) -> Vec<i64> {
        self.0
    }
}

/// The primes strictly below `bound`, optionally preceded by the unit `-1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorBase {
    bound: u64,
    primes: Vec<u64>,
    include_unit: bool,
}

impl FactorBase {
    pub fn new(bound: u64, include_unit: bool) -> Result<Self> {
        if bound < 3 {
            return Err(Error::domain(format!(
                "factor-base bound must be at least 3, got {bound}"
            )));
        }
        Ok(FactorBase {
            bound,
            primes: primes_below(bound),
            include_unit,
        })
    }

    /// A base with the default subexponential bound for `n`.
    pub fn for_modulus(n: &BigUint, include_unit: bool) -> Self {
        Self::new(default_bound(n), include_unit).expect("default bound is at least 10")
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// Number of primes `b`.
    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    pub fn include_unit(&self) -> bool {
        self.include_unit
    }

    /// Length of every exponent vector over this base.
    pub fn width(&self) -> usize {
        self.primes.len() + usize::from(self.include_unit)
    }

    fn offset(&self) -> usize {
        usize::from(self.include_unit)
    }

    /// Factors a positive integer over the base by trial division, or `None`
    /// if it has a prime factor at or above the bound.
    pub fn factor(&self, m: &BigUint) -> Option<ExponentVector> {
        if m.is_zero() {
            return None;
        }
        let mut exps = vec![0i64; self.width()];
        let off = self.offset();
        if let Some(small) = m.to_u64() {
            let mut rest = small;
            for (i, &p) in self.primes.iter().enumerate() {
                if rest == 1 {
                    break;
                }
                while rest % p == 0 {
                    rest /= p;
                    exps[off + i] += 1;
                }
            }
            return (rest == 1).then_some(ExponentVector(exps));
        }
        let mut rest = m.clone();
        for (i, &p) in self.primes.iter().enumerate() {
            if rest.is_one() {
                break;
            }
            if let Some(small) = rest.to_u64() {
                // Finish on machine words once the cofactor fits.
                let mut r = small;
                for (k, &q) in self.primes.iter().enumerate().skip(i) {
                    while r % q == 0 {
                        r /= q;
                        exps[off + k] += 1;
                    }
                }
                return (r == 1).then_some(ExponentVector(exps));
            }
            loop {
                let (q, r) = num_integer::Integer::div_rem(&rest, &BigUint::from(p));
                if !r.is_zero() {
                    break;
                }
                rest = q;
                exps[off + i] += 1;
            }
        }
        rest.is_one().then_some(ExponentVector(exps))
    }

    /// Factors the residue `r` of some power modulo `n`. With the unit in the
    /// base, residues above `n/2` are factored as `-(n - r)`.
    pub fn factor_residue(&self, r: &BigUint, n: &BigUint) -> Option<ExponentVector> {
        if self.include_unit && (r << 1u32) > *n {
            let mut v = self.factor(&(n - r))?;
            v.0[0] = 1;
            return Some(v);
        }
        self.factor(r)
    }

    /// The signed integer `prod p_i^{e_i}`; negative exponents are rejected.
    pub fn evaluate(&self, v: &ExponentVector) -> Result<BigInt> {
        if v.len() != self.width() {
            return Err(Error::domain(format!(
                "exponent vector has length {}, base width is {}",
                v.len(),
                self.width()
            )));
        }
        let mut acc = BigInt::one();
        let off = self.offset();
        if self.include_unit && v.0[0].rem_euclid(2) == 1 {
            acc = -acc;
        }
        for (&p, &e) in self.primes.iter().zip(&v.0[off..]) {
            let e = u32::try_from(e).map_err(|_| {
                Error::domain(format!(
                    "exponent {e} of prime {p} is not a small nonnegative integer"
                ))
            })?;
            acc *= BigInt::from(p).pow(e);
        }
        Ok(acc)
    }
}

/// `ceil(exp(0.5 * sqrt(ln n * ln ln n)))`, clamped to `[10, 10^6]`.
pub fn default_bound(n: &BigUint) -> u64 {
    scaled_bound(n, 0.5)
}

/// `ceil(exp(beta * sqrt(ln n * ln ln n)))`, clamped to `[10, 10^6]`.
pub fn scaled_bound(n: &BigUint, beta: f64) -> u64 {
    let ln_n = ln(n);
    let lnln = if ln_n > 1.0 { ln_n.ln() } else { 0.0 };
    let b = (beta * (ln_n * lnln).sqrt()).exp().ceil();
    if !b.is_finite() {
        return MAX_DEFAULT_BOUND;
    }
    (b as u64).clamp(MIN_DEFAULT_BOUND, MAX_DEFAULT_BOUND)
}

/// Natural log that stays finite for integers beyond `f64` range.
pub(crate) fn ln(n: &BigUint) -> f64 {
    match n.to_f64() {
        Some(f) if f.is_finite() => f.ln(),
        _ => {
            let shift = n.bits().saturating_sub(64);
            let top = (n >> shift).to_f64().unwrap_or(f64::MAX);
            top.ln() + shift as f64 * std::f64::consts::LN_2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ubig(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn worked_example_base() {
        let fb = FactorBase::new(50, false).unwrap();
        assert_eq!(
            fb.primes(),
            &[2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47]
        );
        assert_eq!(fb.len(), 15);
        assert_eq!(FactorBase::new(3, false).unwrap().primes(), &[2]);
        assert_eq!(FactorBase::new(100, false).unwrap().len(), 25);
        assert!(FactorBase::new(2, false).is_err());
        let with_unit = FactorBase::new(50, true).unwrap();
        assert_eq!(with_unit.width(), 16);
    }

    #[test]
    fn factor_over_base_examples() {
        let fb = FactorBase::new(50, false).unwrap();
        let v = fb.factor(&ubig(43848)).unwrap();
        let mut expected = [0i64; 15];
        expected[0] = 3; // 2
        expected[1] = 3; // 3
        expected[3] = 1; // 7
        expected[9] = 1; // 29
        assert_eq!(v.entries(), &expected[..]);
        assert_eq!(v.one_norm(), 8);
        assert_eq!(fb.factor(&ubig(1)).unwrap().entries(), &[0i64; 15][..]);
        assert!(fb.factor(&ubig(106)).is_none());
        assert!(fb.factor(&ubig(0)).is_none());
    }

    #[test]
    fn large_inputs_use_the_big_path() {
        let fb = FactorBase::new(50, false).unwrap();
        let m = BigUint::from(2u32).pow(70) * ubig(3u64.pow(5)) * ubig(47);
        let v = fb.factor(&m).unwrap();
        assert_eq!(v.entries()[0], 70);
        assert_eq!(v.entries()[1], 5);
        assert_eq!(v.entries()[14], 1);
        assert!(fb
            .factor(&(BigUint::from(2u32).pow(70) * ubig(53)))
            .is_none());
    }

    #[test]
    fn unit_sign_on_residues() {
        let fb = FactorBase::new(50, true).unwrap();
        let n = ubig(62389);
        // 62389 - 2 = -2 mod n.
        let v = fb.factor_residue(&ubig(62387), &n).unwrap();
        assert_eq!(v.entries()[0], 1);
        assert_eq!(v.entries()[1], 1);
        assert_eq!(fb.evaluate(&v).unwrap(), BigInt::from(-2));
        let w = fb.factor_residue(&ubig(12), &n).unwrap();
        assert_eq!(w.entries()[0], 0);
    }

    #[test]
    fn default_bound_values() {
        // ln 62389 = 11.04, ln ln = 2.40, 0.5 * sqrt(26.5) = 2.57, e^2.57 = 13.1.
        assert_eq!(default_bound(&ubig(62389)), 14);
        assert_eq!(default_bound(&ubig(15)), 10);
        let huge = BigUint::from(2u32).pow(4000);
        assert_eq!(default_bound(&huge), MAX_DEFAULT_BOUND);
    }

    // Independent oracle: full factorization of m by trial division over all
    // integers up to sqrt(m).
    fn largest_prime_factor(mut m: u64) -> u64 {
        let mut largest = 1;
        let mut d = 2;
        while d * d <= m {
            while m.is_multiple_of(d) {
                largest = d;
                m /= d;
            }
            d += 1;
        }
        if m > 1 {
            largest = largest.max(m);
        }
        largest
    }

    #[test]
    fn completeness_below_bound_squared() {
        for bound in [3u64, 10, 50] {
            let fb = FactorBase::new(bound, false).unwrap();
            for m in 1..bound * bound {
                let smooth = largest_prime_factor(m) < bound;
                assert_eq!(
                    fb.factor(&ubig(m)).is_some(),
                    smooth,
                    "bound {bound}, m {m}"
                );
            }
        }
    }

    proptest! {
        #[test]
        fn round_trip(m in 1u64..2_000_000, bound in 3u64..200) {
            let fb = FactorBase::new(bound, false).unwrap();
            if let Some(v) = fb.factor(&ubig(m)) {
                prop_assert!(v.entries().iter().all(|&e| e >= 0));
                prop_assert_eq!(fb.evaluate(&v).unwrap(), BigInt::from(m));
            }
        }

        #[test]
        fn bases_are_prefixes(b1 in 3u64..500, extra in 0u64..500) {
            let small = FactorBase::new(b1, false).unwrap();
            let large = FactorBase::new(b1 + extra, false).unwrap();
            prop_assert!(large.primes().starts_with(small.primes()));
        }
    }
}
