//! Exact integer utilities: modular powers, gcds, primality and perfect powers.

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A residue class modulo `modulus`, stored as its least nonnegative representative.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Residue {
    value: BigUint,
    modulus: BigUint,
}

impl Residue {
    pub fn new(value: BigUint, modulus: BigUint) -> Result<Self> {
        check_modulus(&modulus)?;
        if value >= modulus {
            return Err(Error::domain(format!(
                "residue value {value} not below modulus {modulus}"
            )));
        }
        Ok(Residue { value, modulus })
    }

    /// Reduces an arbitrary (possibly negative) integer.
    pub fn reduce(value: &BigInt, modulus: &BigUint) -> Result<Self> {
        check_modulus(modulus)?;
        let m = BigInt::from(modulus.clone());
        let value = value
            .mod_floor(&m)
            .to_biguint()
            .expect("mod_floor is nonnegative");
        Ok(Residue {
            value,
            modulus: modulus.clone(),
        })
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    pub fn into_value(self) -> BigUint {
        self.value
    }

    pub fn is_one(&self) -> bool {
        self.value.is_one()
    }

    pub fn pow(&self, exponent: &BigUint) -> Residue {
        Residue {
            value: self.value.modpow(exponent, &self.modulus),
            modulus: self.modulus.clone(),
        }
    }
}

fn check_modulus(modulus: &BigUint) -> Result<()> {
    if *modulus < BigUint::from(2u32) {
        return Err(Error::domain(format!(
            "modulus must be at least 2, got {modulus}"
        )));
    }
    Ok(())
}

/// `base^exponent mod modulus`, for any integer base.
pub fn mod_pow(base: &BigInt, exponent: &BigUint, modulus: &BigUint) -> Result<Residue> {
    Ok(Residue::reduce(base, modulus)?.pow(exponent))
}

/// Nonnegative gcd of a non-empty list; the gcd of an all-zero list is 0.
pub fn gcd_all(values: &[BigInt]) -> Result<BigUint> {
    if values.is_empty() {
        return Err(Error::domain("gcd of an empty list"));
    }
    let mut acc = BigUint::zero();
    for v in values {
        acc = acc.gcd(v.magnitude());
        if acc.is_one() {
            break;
        }
    }
    Ok(acc)
}

/// All primes strictly below `limit`, ascending.
pub fn primes_below(limit: u64) -> Vec<u64> {
    if limit < 3 {
        return Vec::new();
    }
    let limit = limit as usize;
    let mut composite = vec![false; limit];
    let mut primes = Vec::new();
    for i in 2..limit {
        if composite[i] {
            continue;
        }
        primes.push(i as u64);
        let mut j = i * i;
        while j < limit {
            composite[j] = true;
            j += i;
        }
    }
    primes
}

const SMALL_PRIMES: [u64; 25] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
];

// Deterministic for every n < 3.3 * 10^24, so in particular below 2^64.
const FIXED_WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

// 4^-40 = 2^-80.
const RANDOM_ROUNDS: usize = 40;

/// Strong probable-prime test. Exact below 2^64; above that the error
/// probability is below 2^-80. Witnesses are derived from `m` itself so the
/// answer is a pure function of the input.
pub fn is_probable_prime(m: &BigUint) -> bool {
    if let Some(small) = m.to_u64() {
        return is_prime_u64(small);
    }
    for &p in &SMALL_PRIMES {
        if (m % p).is_zero() {
            return false;
        }
    }
    let one = BigUint::one();
    let m_minus_1 = m - &one;
    let s = m_minus_1.trailing_zeros().expect("m > 1");
    let d = &m_minus_1 >> s;
    let strong = |a: &BigUint| -> bool {
        let mut x = a.modpow(&d, m);
        if x.is_one() || x == m_minus_1 {
            return true;
        }
        for _ in 1..s {
            x = &x * &x % m;
            if x == m_minus_1 {
                return true;
            }
        }
        false
    };
    if !FIXED_WITNESSES.iter().all(|&a| strong(&BigUint::from(a))) {
        return false;
    }
    let mut seed = [0u8; 32];
    for (dst, src) in seed.iter_mut().zip(m.to_bytes_le()) {
        *dst = src;
    }
    let mut rng = ChaCha8Rng::from_seed(seed);
    let two = BigUint::from(2u32);
    (0..RANDOM_ROUNDS).all(|_| strong(&rng.gen_biguint_range(&two, &m_minus_1)))
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod_u64(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &SMALL_PRIMES {
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }
    if n < 97 * 97 {
        return true;
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &FIXED_WITNESSES {
        let mut x = pow_mod_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// `Some((r, k))` with `r^k = m` and `k >= 2` maximal, or `None` when `m` is
/// not a perfect power.
pub fn perfect_power_root(m: &BigUint) -> Option<(BigUint, u32)> {
    if *m < BigUint::from(4u32) {
        return None;
    }
    let max_k = u32::try_from(m.bits()).unwrap_or(u32::MAX);
    (2..=max_k).rev().find_map(|k| {
        let r = m.nth_root(k);
        (r > BigUint::one() && r.pow(k) == *m).then_some((r, k))
    })
}
