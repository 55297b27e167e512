//! Orders to factors: the end-to-end order pipeline, order splitting, and
//! the recursive factorization driver.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::{is_probable_prime, perfect_power_root, primes_below};
use crate::error::{Error, Result};
use crate::factor_base::{default_bound, scaled_bound, FactorBase};
use crate::kernel::{columns_of, right_kernel};
use crate::order::{compute_alphas, order_multiple, refine_order, OrderReport};
use crate::relations::{
    collect_relations_concurrent, RelationCollector, RelationSet, ATTEMPTS_PER_RELATION,
};
use crate::wire::dec;

/// Parameters of the order pipeline and the factoring driver.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DriverConfig {
    /// Factor-base bound `B`; `None` picks [`default_bound`] per modulus.
    pub bound_override: Option<u64>,
    /// Relations collected beyond the factor-base size (`c`).
    pub extra_relations: usize,
    /// Random bases tried per composite before giving up on it.
    pub max_g_attempts: usize,
    pub seed: u64,
    pub workers: usize,
    /// Reduce the gcd to the exact order.
    pub refine: bool,
    /// Adjoin `-1` to the factor base.
    pub include_unit: bool,
    /// Smoothness-test cap; `None` means `1000` per wanted relation.
    pub attempt_budget: Option<u64>,
    /// Relation top-ups of `c` relations when fewer than two alphas are nonzero.
    pub max_top_ups: usize,
    /// Try the kernel every `k` relations and stop once it has dimension
    /// `c + 1`. `Some(0)` uses `k = max(1, b / 4)`.
    pub kernel_check_interval: Option<usize>,
    /// Trial-divide below this before running the index calculus; `None`
    /// uses the factor-base bound.
    pub trial_division_limit: Option<u64>,
}

impl Default for DriverConfig {
    fn default() -> Self {
        DriverConfig {
            bound_override: None,
            extra_relations: 10,
            max_g_attempts: 32,
            seed: 0,
            workers: 1,
            refine: false,
            include_unit: false,
            attempt_budget: None,
            max_top_ups: 3,
            kernel_check_interval: None,
            trial_division_limit: None,
        }
    }
}

impl DriverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.extra_relations == 0 {
            return Err(Error::domain("extra relations c must be at least 1"));
        }
        if self.max_g_attempts == 0 {
            return Err(Error::domain("max_g_attempts must be at least 1"));
        }
        if self.workers == 0 {
            return Err(Error::domain("workers must be at least 1"));
        }
        Ok(())
    }

    pub fn factor_base_for(&self, n: &BigUint) -> Result<FactorBase> {
        FactorBase::new(
            self.bound_override.unwrap_or_else(|| default_bound(n)),
            self.include_unit,
        )
    }
}

/// A nontrivial divisor of `n` from a multiple `r` of `ord(g)`.
///
/// Halves `r` while `g^{r/2} = 1`, then returns `gcd(g^{r/2} - 1, n)` when
/// `g^{r/2} ≠ ±1`. `None` means this `g` is unlucky: the order is odd or
/// `g^{ord/2} = -1`.
pub fn split_from_order(n: &BigUint, g: &BigUint, r: &BigUint) -> Result<Option<BigUint>> {
    if r.is_zero() || !g.modpow(r, n).is_one() {
        return Err(Error::domain(format!("g^{r} is not 1 modulo {n}")));
    }
    let minus_one = n - 1u32;
    let mut r = r.clone();
    while r.is_even() {
        let half = &r >> 1u32;
        let y = g.modpow(&half, n);
        if y.is_one() {
            r = half;
            continue;
        }
        if y == minus_one {
            return Ok(None);
        }
        let d = (y - 1u32).gcd(n);
        debug_assert!(!d.is_one() && d != *n);
        return Ok(Some(d));
    }
    Ok(None)
}

fn check_order_inputs(n: &BigUint, g: &BigUint) -> Result<()> {
    if *n < BigUint::from(3u32) || n.is_even() {
        return Err(Error::domain(format!(
            "n must be odd and at least 3, got {n}"
        )));
    }
    if *g <= BigUint::one() || g >= n {
        return Err(Error::domain(format!("g must satisfy 1 < g < n, got {g}")));
    }
    let d = g.gcd(n);
    if !d.is_one() {
        return Err(Error::ImmediateFactor(d));
    }
    Ok(())
}

/// Outcome of one kernel pass over the current relations.
struct KernelPass {
    alphas: Vec<BigInt>,
    nonzero: usize,
}

fn kernel_pass(set: &RelationSet) -> Result<KernelPass> {
    let (matrix, x_row) = columns_of(set);
    let kernel = right_kernel(&matrix);
    let alphas = compute_alphas(&kernel, &x_row)?;
    let nonzero = alphas.iter().filter(|a| !a.is_zero()).count();
    Ok(KernelPass { alphas, nonzero })
}

/// The multiplicative order of `g` modulo `n` (or a multiple of it) from
/// random smooth relations: collect `b + c` relations, take the primitive
/// right kernel of the exponent matrix, and return the gcd of the alphas.
pub fn order_via_index_calculus(
    n: &BigUint,
    g: &BigUint,
    config: &DriverConfig,
) -> Result<OrderReport> {
    config.validate()?;
    check_order_inputs(n, g)?;
    let fb = config.factor_base_for(n)?;
    let c = config.extra_relations;
    let count = fb.width() + c;
    let mut budget = config
        .attempt_budget
        .unwrap_or(ATTEMPTS_PER_RELATION * count as u64);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut collector = match config.kernel_check_interval {
        Some(interval) => {
            let interval = if interval == 0 {
                (fb.len() / 4).max(1)
            } else {
                interval
            };
            let mut collector =
                RelationCollector::new(n.clone(), g.clone(), fb, rng)?.with_budget(budget);
            loop {
                let next = collector.relations().len() + interval;
                collector.collect_until(next)?;
                let (matrix, _) = columns_of(collector.relations());
                if matrix.cols() - matrix.rank() > c {
                    break;
                }
            }
            collector
        }
        None if config.workers > 1 => {
            let set = collect_relations_concurrent(
                n,
                g,
                &fb,
                count,
                config.seed,
                config.workers,
                Some(budget),
            )?;
            rng.set_stream(u64::MAX);
            RelationCollector::resume(set, rng).with_budget(budget)
        }
        None => {
            let mut collector =
                RelationCollector::new(n.clone(), g.clone(), fb, rng)?.with_budget(budget);
            collector.collect_until(count)?;
            collector
        }
    };

    let mut top_ups = 0;
    let pass = loop {
        let pass = kernel_pass(collector.relations())?;
        let enough = pass.nonzero >= 2 || (top_ups == config.max_top_ups && pass.nonzero >= 1);
        if enough {
            break pass;
        }
        if top_ups == config.max_top_ups {
            return Err(Error::AllAlphasZero);
        }
        top_ups += 1;
        budget += ATTEMPTS_PER_RELATION * c as u64;
        collector.set_budget(budget);
        let next = collector.relations().len() + c;
        collector.collect_until(next)?;
    };

    let set = collector.relations();
    let mut report = order_multiple(&pass.alphas, n, g)?;
    report.relations_used = set.len();
    report.attempts = set.attempts();
    report.top_ups = top_ups;
    if config.refine {
        report.refined_order = Some(refine_order(&report.order_multiple, n, g)?);
    }
    Ok(report)
}

/// The order pipeline on a fixed, already collected relation set.
pub fn order_from_relations(set: &RelationSet, refine: bool) -> Result<OrderReport> {
    set.verify()?;
    let pass = kernel_pass(set)?;
    let (n, g) = (set.modulus(), set.base_element());
    let mut report = order_multiple(&pass.alphas, n, g)?;
    report.relations_used = set.len();
    report.attempts = set.attempts();
    if refine {
        report.refined_order = Some(refine_order(&report.order_multiple, n, g)?);
    }
    Ok(report)
}

/// A prime factorization, with the order computations that produced it.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Factorization {
    pub n: BigUint,
    pub factors: BTreeMap<BigUint, u32>,
    pub trace: Vec<OrderReport>,
    /// Composite cofactors the driver gave up on; empty on success.
    pub unfactored: Vec<BigUint>,
}

impl Factorization {
    /// Whether the factors multiply back to `n` and are all probable primes.
    pub fn is_complete(&self) -> bool {
        self.unfactored.is_empty()
            && self.factors.keys().all(is_probable_prime)
            && self.product() == self.n
    }

    pub fn product(&self) -> BigUint {
        self.factors
            .iter()
            .map(|(p, &e)| p.pow(e))
            .chain(self.unfactored.iter().cloned())
            .product()
    }

    fn add(&mut self, p: BigUint, e: u32) {
        *self.factors.entry(p).or_insert(0) += e;
    }
}

#[derive(Serialize, Deserialize)]
struct PrimePower {
    #[serde(with = "dec")]
    p: BigUint,
    e: u32,
}

#[derive(Serialize, Deserialize)]
struct FactorizationDoc {
    #[serde(with = "dec")]
    n: BigUint,
    factors: Vec<PrimePower>,
    trace: Vec<OrderReport>,
    #[serde(
        with = "crate::wire::dec_vec",
        default,
        skip_serializing_if = "Vec::is_empty"
    )]
    unfactored: Vec<BigUint>,
}

impl Serialize for Factorization {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FactorizationDoc {
            n: self.n.clone(),
            factors: self
                .factors
                .iter()
                .map(|(p, &e)| PrimePower { p: p.clone(), e })
                .collect(),
            trace: self.trace.clone(),
            unfactored: self.unfactored.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Factorization {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = FactorizationDoc::deserialize(d)?;
        let mut f = Factorization {
            n: doc.n,
            trace: doc.trace,
            unfactored: doc.unfactored,
            ..Default::default()
        };
        for pp in doc.factors {
            f.add(pp.p, pp.e);
        }
        Ok(f)
    }
}

/// Full prime factorization of `n >= 2`.
///
/// Powers of two and primes below the trial-division limit are removed
/// first, primes and perfect powers are recognized directly, and every
/// remaining composite is split with the order of a random base.
pub fn factor(n: &BigUint, config: &DriverConfig) -> Result<Factorization> {
    config.validate()?;
    if *n < BigUint::from(2u32) {
        return Err(Error::domain(format!("cannot factor {n}")));
    }
    let mut out = Factorization {
        n: n.clone(),
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    // (cofactor, multiplicity)
    let mut work = vec![(n.clone(), 1u32)];
    let mut failure = None;

    while let Some((mut m, mult)) = work.pop() {
        let twos = m.trailing_zeros().unwrap_or(0);
        if twos > 0 {
            out.add(BigUint::from(2u32), mult * twos as u32);
            m >>= twos;
        }
        let limit = config
            .trial_division_limit
            .or(config.bound_override)
            .unwrap_or_else(|| default_bound(&m));
        for p in primes_below(limit).into_iter().skip(1) {
            if m.is_one() {
                break;
            }
            let p = BigUint::from(p);
            let mut e = 0;
            while (&m % &p).is_zero() {
                m /= &p;
                e += 1;
            }
            if e > 0 {
                out.add(p, mult * e);
            }
        }
        if m.is_one() {
            continue;
        }
        if is_probable_prime(&m) {
            out.add(m, mult);
            continue;
        }
        if let Some((root, k)) = perfect_power_root(&m) {
            work.push((root, mult * k));
            continue;
        }
        match split_composite(&m, config, &mut rng, &mut out.trace) {
            Some(d) => {
                let rest = &m / &d;
                work.push((d, mult));
                work.push((rest, mult));
            }
            None => {
                failure.get_or_insert_with(|| m.clone());
                for _ in 0..mult {
                    out.unfactored.push(m.clone());
                }
            }
        }
    }

    if let Some(m) = failure {
        return Err(Error::Incomplete {
            n: n.clone(),
            reason: format!(
                "no split of {m} after {} random bases",
                config.max_g_attempts
            ),
            partial: Box::new(out),
        });
    }
    Ok(out)
}

/// Tries random bases until one yields a nontrivial divisor of `m`.
fn split_composite(
    m: &BigUint,
    config: &DriverConfig,
    rng: &mut ChaCha8Rng,
    trace: &mut Vec<OrderReport>,
) -> Option<BigUint> {
    let two = BigUint::from(2u32);
    let upper = m - 1u32;
    for _ in 0..config.max_g_attempts {
        let g = rng.gen_biguint_range(&two, &upper);
        let d = g.gcd(m);
        if !d.is_one() {
            return Some(d);
        }
        let node_config = DriverConfig {
            seed: rng.next_u64(),
            refine: false,
            ..config.clone()
        };
        match order_via_index_calculus(m, &g, &node_config) {
            Ok(report) => {
                let split = split_from_order(m, &g, &report.order_multiple);
                trace.push(report);
                if let Ok(Some(d)) = split {
                    return Some(d);
                }
            }
            Err(Error::ImmediateFactor(d)) => return Some(d),
            Err(_) => {}
        }
    }
    None
}

const REFINE_TRIAL_LIMIT: u64 = 1 << 16;

/// Prime factorization of a positive integer by trial division, falling back
/// to [`factor`] for any cofactor without small prime factors.
pub fn prime_factorization(m: &BigUint) -> Result<Vec<(BigUint, u32)>> {
    if m.is_zero() {
        return Err(Error::domain("cannot factor 0"));
    }
    let mut rest = m.clone();
    let mut out = Vec::new();
    for p in primes_below(REFINE_TRIAL_LIMIT) {
        if rest.is_one() {
            break;
        }
        if rest.to_u64().is_some_and(|r| r < p * p) {
            break;
        }
        let big_p = BigUint::from(p);
        let mut e = 0;
        while (&rest % &big_p).is_zero() {
            rest /= &big_p;
            e += 1;
        }
        if e > 0 {
            out.push((big_p, e));
        }
    }
    if rest.is_one() {
        return Ok(out);
    }
    if is_probable_prime(&rest) {
        out.push((rest, 1));
        return Ok(out);
    }
    // The default bound is too small to find relations quickly above ~10^10.
    let config = DriverConfig {
        bound_override: Some(scaled_bound(&rest, FRAC_1_SQRT_2)),
        ..DriverConfig::default()
    };
    let big = factor(&rest, &config)?;
    out.extend(big.factors);
    out.sort();
    Ok(out)
}
