//! The bundled worked example (`n = 62389`, `g = 43`, `B = 50`) and the
//! checks that re-derive every quantity in it.

use std::fmt;
use std::path::Path;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{gcd_all, primes_below};
use crate::error::{Error, Result};
use crate::kernel::{right_kernel, IntMatrix};
use crate::wire::{dec, dec_matrix, dec_opt, dec_vec};

/// The shipped fixture document.
pub const BUNDLED_FIXTURE: &str = include_str!("../../fixtures/n62389_g43.json");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureRelation {
    #[serde(with = "dec")]
    pub x: BigUint,
    #[serde(with = "dec_vec")]
    pub f: Vec<BigInt>,
}

/// Relations, kernel rows and alphas of one order computation, plus the
/// values they should lead to.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fixture {
    #[serde(with = "dec")]
    pub n: BigUint,
    #[serde(with = "dec")]
    pub g: BigUint,
    #[serde(with = "dec")]
    pub bound: u64,
    pub relations: Vec<FixtureRelation>,
    #[serde(with = "dec_matrix")]
    pub kernel: Vec<Vec<BigInt>>,
    #[serde(with = "dec_vec")]
    pub alphas: Vec<BigInt>,
    #[serde(with = "dec")]
    pub expected_gcd: BigUint,
    /// `g^{G/2} mod n`, checked when present.
    #[serde(with = "dec_opt", default, skip_serializing_if = "Option::is_none")]
    pub expected_half_power: Option<BigUint>,
    #[serde(with = "dec")]
    pub expected_factor: BigUint,
}

impl Fixture {
    pub fn bundled() -> Fixture {
        Fixture::from_json(BUNDLED_FIXTURE).expect("bundled fixture parses")
    }

    pub fn from_json(text: &str) -> Result<Fixture> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Fixture> {
        Fixture::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fixture serializes")
    }

    /// Exponent matrix with one row per prime and one column per relation.
    fn matrix(&self) -> Result<IntMatrix> {
        let b = self.primes().len();
        if let Some((j, r)) = self
            .relations
            .iter()
            .enumerate()
            .find(|(_, r)| r.f.len() != b)
        {
            return Err(Error::domain(format!(
                "relation {} has {} exponents, the base has {b} primes",
                j + 1,
                r.f.len()
            )));
        }
        let data = (0..b)
            .map(|i| self.relations.iter().map(|r| r.f[i].clone()).collect())
            .collect();
        IntMatrix::new(data, self.relations.len())
    }

    fn primes(&self) -> Vec<u64> {
        primes_below(self.bound)
    }

    fn x_row(&self) -> Vec<BigInt> {
        self.relations
            .iter()
            .map(|r| BigInt::from(r.x.clone()))
            .collect()
    }
}

/// Outcome of one numbered check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FixtureReport {
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl FixtureReport {
    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for FixtureReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let verdict = if c.passed { "ok" } else { "FAILED" };
            writeln!(f, "[{}] {:<24} {verdict}: {}", c.id, c.name, c.detail)?;
        }
        let passed = self.checks.iter().filter(|c| c.passed).count();
        write!(f, "{passed}/{} checks passed", self.checks.len())
    }
}

/// Runs the six checks in order. Every check runs even if an earlier one
/// failed. Errors are reserved for documents whose shape is unusable.
pub fn verify_fixture(fx: &Fixture) -> Result<FixtureReport> {
    if fx.n < BigUint::from(3u32) {
        return Err(Error::domain(format!("modulus {} is too small", fx.n)));
    }
    let matrix = fx.matrix()?;
    let x_row = fx.x_row();
    let checks = vec![
        check_congruences(fx),
        check_annihilation(fx, &matrix),
        check_alphas(fx, &x_row),
        check_gcd(fx),
        check_split(fx),
        check_own_kernel(fx, &matrix, &x_row),
    ];
    Ok(FixtureReport {
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

fn check(id: u8, name: &'static str, failures: Vec<String>, ok: String) -> Check {
    Check {
        id,
        name,
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            ok
        } else {
            failures.join("; ")
        },
    }
}

fn smooth_value(primes: &[u64], f: &[BigInt], n: &BigUint) -> Option<BigUint> {
    let mut acc = BigUint::one();
    for (&p, e) in primes.iter().zip(f) {
        if e.is_negative() {
            return None;
        }
        acc = acc * BigUint::from(p).modpow(&e.magnitude().clone(), n) % n;
    }
    Some(acc)
}

fn check_congruences(fx: &Fixture) -> Check {
    let primes = fx.primes();
    let failures = fx
        .relations
        .iter()
        .enumerate()
        .filter_map(|(j, r)| {
            let lhs = fx.g.modpow(&r.x, &fx.n);
            match smooth_value(&primes, &r.f, &fx.n) {
                Some(rhs) if rhs == lhs => None,
                Some(rhs) => Some(format!(
                    "relation {} (x = {}): g^x = {lhs} but the product is {rhs}",
                    j + 1,
                    r.x
                )),
                None => Some(format!(
                    "relation {} (x = {}): negative exponent",
                    j + 1,
                    r.x
                )),
            }
        })
        .collect();
    check(
        1,
        "relation congruences",
        failures,
        format!("{} relations hold modulo {}", fx.relations.len(), fx.n),
    )
}

fn check_annihilation(fx: &Fixture, matrix: &IntMatrix) -> Check {
    let failures = fx
        .kernel
        .iter()
        .enumerate()
        .filter(|(_, v)| v.len() != matrix.cols() || !matrix.annihilates(v))
        .map(|(t, _)| format!("kernel row {} is not in the kernel", t + 1))
        .collect();
    check(
        2,
        "kernel annihilation",
        failures,
        format!("{} kernel rows annihilate the matrix", fx.kernel.len()),
    )
}

fn check_alphas(fx: &Fixture, x_row: &[BigInt]) -> Check {
    let mut failures = Vec::new();
    if fx.kernel.len() != fx.alphas.len() {
        failures.push(format!(
            "{} kernel rows but {} alphas",
            fx.kernel.len(),
            fx.alphas.len()
        ));
    }
    for (t, (v, expected)) in fx.kernel.iter().zip(&fx.alphas).enumerate() {
        let content = gcd_all(v).unwrap_or_default();
        if !content.is_one() {
            failures.push(format!("kernel row {} has content {content}", t + 1));
        }
        let alpha: BigInt = v.iter().zip(x_row).map(|(b, x)| b * x).sum();
        if &alpha != expected {
            failures.push(format!(
                "alpha {}: fixture {expected}, recomputed {alpha}",
                t + 1
            ));
        }
    }
    let first = fx.alphas.first().map(|a| a.to_string()).unwrap_or_default();
    check(
        3,
        "alpha recomputation",
        failures,
        format!("{} alphas match, first {first}", fx.alphas.len()),
    )
}

fn check_gcd(fx: &Fixture) -> Check {
    let gcd = gcd_all(&fx.alphas).unwrap_or_default();
    let failures = if gcd == fx.expected_gcd {
        vec![]
    } else {
        vec![format!("gcd is {gcd}, expected {}", fx.expected_gcd)]
    };
    check(4, "alpha gcd", failures, format!("gcd = {gcd}"))
}

fn check_split(fx: &Fixture) -> Check {
    let (n, g, big_g) = (&fx.n, &fx.g, &fx.expected_gcd);
    let mut failures = Vec::new();
    let full = g.modpow(big_g, n);
    if !full.is_one() {
        failures.push(format!("{g}^{big_g} = {full}, not 1"));
    }
    if big_g.is_odd() {
        failures.push(format!("{big_g} is odd"));
        return check(5, "order split", failures, String::new());
    }
    let half = big_g >> 1u32;
    let y = g.modpow(&half, n);
    if let Some(expected) = &fx.expected_half_power {
        if &y != expected {
            failures.push(format!("{g}^{half} = {y}, expected {expected}"));
        }
    }
    let y_minus_one = (&y + n - 1u32) % n;
    let d = y_minus_one.gcd(n);
    if d != fx.expected_factor {
        failures.push(format!(
            "gcd({y_minus_one}, {n}) = {d}, expected {}",
            fx.expected_factor
        ));
    }
    let (cofactor, rem) = n.div_rem(&fx.expected_factor);
    if !rem.is_zero() || fx.expected_factor.is_one() || cofactor.is_one() {
        failures.push(format!(
            "{} is not a proper divisor of {n}",
            fx.expected_factor
        ));
    }
    check(
        5,
        "order split",
        failures,
        format!(
            "{g}^{big_g} = 1, {g}^{half} = {y}, gcd({y_minus_one}, {n}) = {d}, {d} * {cofactor} = {n}"
        ),
    )
}

fn check_own_kernel(fx: &Fixture, matrix: &IntMatrix, x_row: &[BigInt]) -> Check {
    let kernel = right_kernel(matrix);
    let alphas: Vec<BigInt> = kernel
        .vectors()
        .iter()
        .map(|v| v.iter().zip(x_row).map(|(b, x)| b * x).sum())
        .collect();
    let gcd = gcd_all(&alphas).unwrap_or_default();
    let mut failures = Vec::new();
    if kernel.dim() != fx.kernel.len() {
        failures.push(format!(
            "kernel dimension {}, fixture has {} rows",
            kernel.dim(),
            fx.kernel.len()
        ));
    }
    if gcd != fx.expected_gcd {
        failures.push(format!("alpha gcd {gcd}, expected {}", fx.expected_gcd));
    }
    if !kernel.is_primitive() {
        failures.push("computed basis is not primitive".into());
    }
    let rank = matrix.rank();
    let same = if kernel.vectors() == fx.kernel.as_slice() {
        "same basis as the fixture"
    } else {
        "different basis"
    };
    check(
        6,
        "independent kernel",
        failures,
        format!(
            "dimension {} (rank {rank} of {} x {}), alpha gcd {gcd}, {same}",
            kernel.dim(),
            matrix.rows(),
            matrix.cols()
        ),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_passes() {
        let fx = Fixture::bundled();
        assert_eq!(fx.relations.len(), 25);
        assert_eq!(fx.kernel.len(), 11);
        let report = verify_fixture(&fx).unwrap();
        assert!(report.passed, "{report}");
        assert_eq!(report.checks.len(), 6);
        assert!(report.checks[4].detail.contains("43^7700 = 51174"));
        assert!(report.checks[4].detail.contains("701 * 89 = 62389"));
    }

    #[test]
    fn own_kernel_is_the_bundled_basis() {
        let fx = Fixture::bundled();
        let k = right_kernel(&fx.matrix().unwrap());
        assert_eq!(k.vectors(), fx.kernel.as_slice());
    }

    #[test]
    fn json_round_trip() {
        let fx = Fixture::bundled();
        assert_eq!(Fixture::from_json(&fx.to_json()).unwrap(), fx);
    }

    #[test]
    fn wrong_half_power() {
        let mut fx = Fixture::bundled();
        fx.expected_half_power = Some(BigUint::from(51173u32));
        let report = verify_fixture(&fx).unwrap();
        let failed: Vec<u8> = report.failed().map(|c| c.id).collect();
        assert_eq!(failed, [5]);
    }

    #[test]
    fn ragged_relation_is_an_error() {
        let mut fx = Fixture::bundled();
        fx.relations[3].f.pop();
        assert!(verify_fixture(&fx).is_err());
    }
}
