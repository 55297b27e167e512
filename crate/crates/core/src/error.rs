use num_bigint::BigUint;
use thiserror::Error;

use crate::factoring::Factorization;
use crate::relations::RelationSet;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// Not a failure: `gcd(g, n)` is already a nontrivial divisor of `n`.
    #[error("gcd(g, n) = {0} is a nontrivial factor of n")]
    ImmediateFactor(BigUint),

    #[error("every exponent in [1, n] has already been drawn")]
    Exhausted,

    /// The factor-base bound is probably too small for this `n`.
    #[error("attempt budget of {budget} smoothness tests spent with {found} of {wanted} relations found")]
    BudgetExhausted {
        budget: u64,
        found: usize,
        wanted: usize,
        partial: Box<RelationSet>,
    },

    #[error("every alpha is zero; more relations are needed")]
    AllAlphasZero,

    #[error("internal consistency failure: g^{0} != 1 mod n")]
    Verification(BigUint),

    #[error("factorization of {n} incomplete: {reason}")]
    Incomplete {
        n: BigUint,
        reason: String,
        partial: Box<Factorization>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
