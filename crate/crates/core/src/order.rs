//! From kernel vectors to a multiple of the multiplicative order.
//!
//! A kernel vector `b` of the exponent matrix combines relations into
//! `prod (g^{x_j})^{b_j} = 1`, so `alpha = sum_j b_j x_j` is a multiple of
//! `ord(g)`. The gcd of all nonzero alphas is returned.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::gcd_all;
use crate::error::{Error, Result};
use crate::factoring;
use crate::kernel::{right_kernel, IntMatrix, KernelBasis};
use crate::relations::{ExtendedRelation, RelationOracle};
use crate::wire::{dec, dec_opt, dec_vec};

/// Outcome of one order computation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderReport {
    #[serde(with = "dec")]
    pub n: BigUint,
    #[serde(with = "dec")]
    pub g: BigUint,
    /// Gcd of the nonzero alphas; a multiple of `ord(g)`.
    #[serde(with = "dec")]
    pub order_multiple: BigUint,
    #[serde(with = "dec_vec")]
    pub alphas: Vec<BigInt>,
    pub zero_alpha_count: usize,
    pub kernel_dim: usize,
    /// `g^order_multiple ≡ 1 (mod n)` was checked.
    pub verified: bool,
    pub relations_used: usize,
    /// Smoothness tests spent on the relations.
    pub attempts: u64,
    pub top_ups: usize,
    /// The exact order, when refinement was requested.
    #[serde(with = "dec_opt", default, skip_serializing_if = "Option::is_none")]
    pub refined_order: Option<BigUint>,
}

impl OrderReport {
    /// The refined order if present, otherwise the multiple.
    pub fn best_order(&self) -> &BigUint {
        self.refined_order.as_ref().unwrap_or(&self.order_multiple)
    }

    pub fn nonzero_alphas(&self) -> usize {
        self.alphas.len() - self.zero_alpha_count
    }
}

/// `alpha_t = sum_j (b_t)_j x_j` for every kernel vector.
pub fn compute_alphas(kernel: &KernelBasis, x_row: &[BigInt]) -> Result<Vec<BigInt>> {
    kernel
        .vectors()
        .iter()
        .map(|v| {
            if v.len() != x_row.len() {
                return Err(Error::domain(format!(
                    "kernel vector of length {} against {} exponents",
                    v.len(),
                    x_row.len()
                )));
            }
            Ok(v.iter().zip(x_row).map(|(b, x)| b * x).sum())
        })
        .collect()
}

/// Gcd of the nonzero alphas, verified against `g^G ≡ 1 (mod n)`.
pub fn order_multiple(alphas: &[BigInt], n: &BigUint, g: &BigUint) -> Result<OrderReport> {
    if alphas.is_empty() {
        return Err(Error::domain("no alphas to combine"));
    }
    let zero_alpha_count = alphas.iter().filter(|a| a.is_zero()).count();
    let big_g = gcd_all(alphas)?;
    if big_g.is_zero() {
        return Err(Error::AllAlphasZero);
    }
    if !g.modpow(&big_g, n).is_one() {
        return Err(Error::Verification(big_g));
    }
    Ok(OrderReport {
        n: n.clone(),
        g: g.clone(),
        order_multiple: big_g,
        alphas: alphas.to_vec(),
        zero_alpha_count,
        kernel_dim: alphas.len(),
        verified: true,
        relations_used: 0,
        attempts: 0,
        top_ups: 0,
        refined_order: None,
    })
}

/// Order of the base element at `coordinate`, from relations over an
/// arbitrary base.
///
/// Deletes the target row from the exponent matrix (one column per
/// relation), takes the primitive kernel of what remains, and combines the
/// target coordinate with each kernel vector. `a_i` is the residue at that
/// coordinate.
pub fn order_of_coordinate(
    relations: &[ExtendedRelation],
    coordinate: usize,
    n: &BigUint,
    a_i: &BigUint,
) -> Result<OrderReport> {
    if relations.len() < 2 {
        return Err(Error::domain("need at least two relations"));
    }
    let width = relations[0].exponents().len();
    if relations.iter().any(|r| r.exponents().len() != width) {
        return Err(Error::domain("relations have different lengths"));
    }
    if coordinate >= width {
        return Err(Error::domain(format!(
            "coordinate {coordinate} out of range for base of size {width}"
        )));
    }
    let data = (0..width)
        .filter(|&i| i != coordinate)
        .map(|i| relations.iter().map(|r| r.exponents()[i].clone()).collect())
        .collect();
    let reduced = IntMatrix::new(data, relations.len())?;
    let target: Vec<BigInt> = relations
        .iter()
        .map(|r| r.exponents()[coordinate].clone())
        .collect();
    let kernel = right_kernel(&reduced);
    if kernel.is_empty() {
        return Err(Error::AllAlphasZero);
    }
    let alphas = compute_alphas(&kernel, &target)?;
    let mut report = order_multiple(&alphas, n, a_i)?;
    report.relations_used = relations.len();
    Ok(report)
}

/// Draws `count` relations from an oracle and isolates `coordinate`.
pub fn order_from_oracle<O: RelationOracle + ?Sized>(
    oracle: &mut O,
    coordinate: usize,
    count: usize,
) -> Result<OrderReport> {
    let relations = (0..count)
        .map(|_| oracle.next_relation())
        .collect::<Result<Vec<_>>>()?;
    let a_i = oracle
        .base()
        .get(coordinate)
        .cloned()
        .ok_or_else(|| Error::domain(format!("coordinate {coordinate} out of range")))?;
    order_of_coordinate(&relations, coordinate, oracle.modulus(), &a_i)
}

/// Exact order from a verified multiple: divides out one prime at a time
/// while `g` stays a root of unity.
pub fn refine_order(multiple: &BigUint, n: &BigUint, g: &BigUint) -> Result<BigUint> {
    if multiple.is_zero() || !g.modpow(multiple, n).is_one() {
        return Err(Error::domain(format!("g^{multiple} is not 1 modulo {n}")));
    }
    let mut order = multiple.clone();
    for (p, e) in factoring::prime_factorization(multiple)? {
        for _ in 0..e {
            let candidate = &order / &p;
            if g.modpow(&candidate, n).is_one() {
                order = candidate;
            } else {
                break;
            }
        }
    }
    Ok(order)
}
