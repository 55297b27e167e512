//! Multiplicative orders modulo a composite `n` from index-calculus style
//! relations, and integer factorization driven by the recovered orders.
//!
//! The pipeline:
//!
//! 1. [`factor_base`]: primes below a bound `B`, trial-division smoothness test.
//! 2. [`relations`]: random exponents `x` with `g^x mod n` smooth over the base.
//! 3. [`kernel`]: exact right kernel of the relation matrix over the rationals,
//!    primitivized to integer vectors.
//! 4. [`order`]: `alpha_t = sum_j (b_t)_j x_j`; their gcd is a multiple of `ord(g)`.
//! 5. [`factoring`]: split `n` from an even order, recurse to a full factorization.
//!
//! [`experiments`] holds the success-rate and benchmarking harnesses and
//! [`cli`] the command-line front end.

pub mod arith;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod factor_base;
pub mod factoring;
pub mod kernel;
pub mod order;
pub mod relations;
pub mod wire;

pub use error::{Error, Result};
pub use factor_base::{ExponentVector, FactorBase};
pub use factoring::{
    factor, order_via_index_calculus, split_from_order, DriverConfig, Factorization,
};
pub use kernel::{right_kernel, IntMatrix, KernelBasis, RelationMatrix};
pub use order::{compute_alphas, order_multiple, order_of_coordinate, refine_order, OrderReport};
pub use relations::{collect_relations, ExtendedRelation, Relation, RelationOracle, RelationSet};
