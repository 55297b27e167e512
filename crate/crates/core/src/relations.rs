//! Relation collection: random exponents `x` whose power `g^x mod n` is smooth
//! over the factor base, and the relation-oracle abstraction that the order
//! computation consumes.

use std::collections::HashSet;
use std::sync::Mutex;

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor_base::{self, ExponentVector, FactorBase};
use crate::wire::{dec, dec_vec};

/// Default cap on smoothness tests per wanted relation.
pub const ATTEMPTS_PER_RELATION: u64 = 1000;

/// `g^x ≡ prod p_i^{f_i} (mod n)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    x: BigUint,
    f: ExponentVector,
}

impl Relation {
    /// Checks the congruence before accepting the pair.
    pub fn new(
        x: BigUint,
        f: ExponentVector,
        n: &BigUint,
        g: &BigUint,
        fb: &FactorBase,
    ) -> Result<Self> {
        let lhs = g.modpow(&x, n);
        let rhs = fb.evaluate(&f)?.mod_floor(&BigInt::from(n.clone()));
        if BigInt::from(lhs) != rhs {
            return Err(Error::domain(format!(
                "relation with x = {x} does not hold modulo {n}"
            )));
        }
        Ok(Relation { x, f })
    }

    pub fn x(&self) -> &BigUint {
        &self.x
    }

    pub fn f(&self) -> &ExponentVector {
        &self.f
    }
}

/// Relations sharing one modulus, base element and factor base.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RelationSetDoc", into = "RelationSetDoc")]
pub struct RelationSet {
    n: BigUint,
    g: BigUint,
    factor_base: FactorBase,
    relations: Vec<Relation>,
    attempts: u64,
}

impl RelationSet {
    pub fn empty(n: BigUint, g: BigUint, factor_base: FactorBase) -> Self {
        RelationSet {
            n,
            g,
            factor_base,
            relations: Vec::new(),
            attempts: 0,
        }
    }

    /// Builds a set from raw `(x, f)` pairs, verifying every congruence and
    /// the distinctness of the `x` values.
    pub fn from_pairs(
        n: BigUint,
        g: BigUint,
        factor_base: FactorBase,
        pairs: impl IntoIterator<Item = (BigUint, ExponentVector)>,
        attempts: u64,
    ) -> Result<Self> {
        let mut set = RelationSet::empty(n, g, factor_base);
        set.attempts = attempts;
        for (x, f) in pairs {
            let rel = Relation::new(x, f, &set.n, &set.g, &set.factor_base)?;
            set.push(rel)?;
        }
        Ok(set)
    }

    fn push(&mut self, rel: Relation) -> Result<()> {
        if self.relations.iter().any(|r| r.x == rel.x) {
            return Err(Error::domain(format!("duplicate exponent x = {}", rel.x)));
        }
        self.relations.push(rel);
        Ok(())
    }

    pub fn modulus(&self) -> &BigUint {
        &self.n
    }

    pub fn base_element(&self) -> &BigUint {
        &self.g
    }

    pub fn factor_base(&self) -> &FactorBase {
        &self.factor_base
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    /// Number of smoothness tests spent collecting these relations.
    pub fn attempts(&self) -> u64 {
        self.attempts
    }

    /// Re-checks every stored congruence.
    pub fn verify(&self) -> Result<()> {
        for r in &self.relations {
            Relation::new(
                r.x.clone(),
                r.f.clone(),
                &self.n,
                &self.g,
                &self.factor_base,
            )?;
        }
        Ok(())
    }

    /// Recasts each `g^x = prod p_i^{f_i}` as `g^x * prod p_i^{-f_i} = 1`, a
    /// relation over the extended base `{g} ∪ B` with `g` at coordinate 0.
    pub fn to_extended(&self) -> Vec<ExtendedRelation> {
        self.relations.iter().map(extend).collect()
    }

    /// The extended base `(g, [-1,] p_1, ..., p_b)` as residues modulo `n`.
    pub fn extended_base(&self) -> Vec<BigUint> {
        extended_base(&self.n, &self.g, &self.factor_base)
    }
}

fn extend(r: &Relation) -> ExtendedRelation {
    let mut e = Vec::with_capacity(r.f.len() + 1);
    e.push(BigInt::from(r.x.clone()));
    e.extend(r.f.entries().iter().map(|&v| BigInt::from(-v)));
    ExtendedRelation(e)
}

fn extended_base(n: &BigUint, g: &BigUint, fb: &FactorBase) -> Vec<BigUint> {
    let mut base = vec![g % n];
    if fb.include_unit() {
        base.push(n - 1u32);
    }
    base.extend(fb.primes().iter().map(|&p| BigUint::from(p) % n));
    base
}

#[derive(Serialize, Deserialize)]
struct RelationDoc {
    #[serde(with = "dec")]
    x: BigUint,
    #[serde(with = "dec_vec")]
    f: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
struct RelationSetDoc {
    #[serde(with = "dec")]
    n: BigUint,
    #[serde(with = "dec")]
    g: BigUint,
    #[serde(with = "dec")]
    bound: u64,
    #[serde(default)]
    include_unit: bool,
    #[serde(with = "dec")]
    attempts: u64,
    relations: Vec<RelationDoc>,
}

impl From<RelationSet> for RelationSetDoc {
    fn from(set: RelationSet) -> Self {
        RelationSetDoc {
            bound: set.factor_base.bound(),
            include_unit: set.factor_base.include_unit(),
            attempts: set.attempts,
            relations: set
                .relations
                .into_iter()
                .map(|r| RelationDoc {
                    x: r.x,
                    f: r.f.into_inner(),
                })
                .collect(),
            n: set.n,
            g: set.g,
        }
    }
}

impl TryFrom<RelationSetDoc> for RelationSet {
    type Error = Error;

    fn try_from(doc: RelationSetDoc) -> Result<Self> {
        let fb = FactorBase::new(doc.bound, doc.include_unit)?;
        RelationSet::from_pairs(
            doc.n,
            doc.g,
            fb,
            doc.relations
                .into_iter()
                .map(|r| (r.x, ExponentVector::new(r.f))),
            doc.attempts,
        )
    }
}

/// Checks the shared preconditions of relation sampling.
fn check_inputs(n: &BigUint, g: &BigUint) -> Result<()> {
    if *n < BigUint::from(3u32) || n.is_even() {
        return Err(Error::domain(format!(
            "modulus must be odd and at least 3, got {n}"
        )));
    }
    let d = g.gcd(n);
    if d == *n {
        return Err(Error::domain(format!("g = {g} is zero modulo n = {n}")));
    }
    if !d.is_one() {
        return Err(Error::ImmediateFactor(d));
    }
    Ok(())
}

/// The relation at a specific exponent, if `g^x mod n` is smooth.
pub fn relation_at(
    n: &BigUint,
    g: &BigUint,
    fb: &FactorBase,
    x: &BigUint,
) -> Result<Option<Relation>> {
    check_inputs(n, g)?;
    let r = g.modpow(x, n);
    Ok(fb
        .factor_residue(&r, n)
        .map(|f| Relation { x: x.clone(), f }))
}

fn draw_unused<R: Rng + ?Sized>(
    n: &BigUint,
    rng: &mut R,
    used: &mut HashSet<BigUint>,
) -> Result<BigUint> {
    if n.to_usize().is_some_and(|n| used.len() >= n) {
        return Err(Error::Exhausted);
    }
    let one = BigUint::one();
    let upper = n + 1u32;
    loop {
        let x = rng.gen_biguint_range(&one, &upper);
        if used.insert(x.clone()) {
            return Ok(x);
        }
    }
}

/// One draw of the relation phase: a fresh exponent `x` in `[1, n]`, the
/// smallest positive residue of `g^x`, and a smoothness test. The exponent is
/// recorded in `used_x` whether or not the residue is smooth.
pub fn sample_relation<R: Rng + ?Sized>(
    n: &BigUint,
    g: &BigUint,
    fb: &FactorBase,
    rng: &mut R,
    used_x: &mut HashSet<BigUint>,
) -> Result<Option<Relation>> {
    check_inputs(n, g)?;
    let x = draw_unused(n, rng, used_x)?;
    let r = g.modpow(&x, n);
    Ok(fb.factor_residue(&r, n).map(|f| Relation { x, f }))
}

/// Incremental relation collection with a smoothness-test budget.
#[derive(Debug)]
pub struct RelationCollector<R> {
    set: RelationSet,
    used: HashSet<BigUint>,
    rng: R,
    budget: u64,
}

impl<R: Rng> RelationCollector<R> {
    pub fn new(n: BigUint, g: BigUint, fb: FactorBase, rng: R) -> Result<Self> {
        check_inputs(&n, &g)?;
        Ok(RelationCollector {
            set: RelationSet::empty(n, g, fb),
            used: HashSet::new(),
            rng,
            budget: u64::MAX,
        })
    }

    /// Continues collecting into an existing set; its exponents count as used.
    pub fn resume(set: RelationSet, rng: R) -> Self {
        let used = set.relations.iter().map(|r| r.x.clone()).collect();
        RelationCollector {
            set,
            used,
            rng,
            budget: u64::MAX,
        }
    }

    /// Total number of smoothness tests allowed over the collector's life.
    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn set_budget(&mut self, budget: u64) {
        self.budget = budget;
    }

    /// One smoothness test. Returns whether a relation was added.
    pub fn step(&mut self) -> Result<bool> {
        let x = draw_unused(&self.set.n, &mut self.rng, &mut self.used)?;
        self.set.attempts += 1;
        let r = self.set.g.modpow(&x, &self.set.n);
        match self.set.factor_base.factor_residue(&r, &self.set.n) {
            Some(f) => {
                self.set.relations.push(Relation { x, f });
                Ok(true)
            }
            None => Ok(false),
        }
    }

    /// Draws until the set holds `count` relations.
    pub fn collect_until(&mut self, count: usize) -> Result<()> {
        while self.set.len() < count {
            if self.set.attempts >= self.budget {
                return Err(Error::BudgetExhausted {
                    budget: self.budget,
                    found: self.set.len(),
                    wanted: count,
                    partial: Box::new(self.set.clone()),
                });
            }
            self.step()?;
        }
        Ok(())
    }

    pub fn relations(&self) -> &RelationSet {
        &self.set
    }

    pub fn into_relations(self) -> RelationSet {
        self.set
    }
}

/// Collects exactly `count` relations with distinct exponents.
///
/// `budget` caps the number of smoothness tests and defaults to
/// `1000 * count`.
pub fn collect_relations<R: Rng>(
    n: &BigUint,
    g: &BigUint,
    fb: &FactorBase,
    count: usize,
    rng: R,
    budget: Option<u64>,
) -> Result<RelationSet> {
    if count == 0 {
        return Err(Error::domain("relation count must be positive"));
    }
    let mut collector = RelationCollector::new(n.clone(), g.clone(), fb.clone(), rng)?
        .with_budget(budget.unwrap_or(ATTEMPTS_PER_RELATION * count as u64));
    collector.collect_until(count)?;
    Ok(collector.into_relations())
}

struct SharedState {
    used: HashSet<BigUint>,
    set: RelationSet,
    failure: Option<Error>,
}

/// Like [`collect_relations`] with `workers` threads drawing exponents.
///
/// Worker `k` draws from stream `k` of a ChaCha generator seeded with
/// `seed`. Relations are stored in acceptance order, which depends on
/// scheduling unless `workers == 1`.
pub fn collect_relations_concurrent(
    n: &BigUint,
    g: &BigUint,
    fb: &FactorBase,
    count: usize,
    seed: u64,
    workers: usize,
    budget: Option<u64>,
) -> Result<RelationSet> {
    if workers <= 1 {
        return collect_relations(n, g, fb, count, ChaCha8Rng::seed_from_u64(seed), budget);
    }
    if count == 0 {
        return Err(Error::domain("relation count must be positive"));
    }
    check_inputs(n, g)?;
    let budget = budget.unwrap_or(ATTEMPTS_PER_RELATION * count as u64);
    let state = Mutex::new(SharedState {
        used: HashSet::new(),
        set: RelationSet::empty(n.clone(), g.clone(), fb.clone()),
        failure: None,
    });

    std::thread::scope(|scope| {
        for worker in 0..workers {
            let state = &state;
            scope.spawn(move || {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(worker as u64);
                loop {
                    let x = {
                        let mut st = state.lock().expect("relation state poisoned");
                        if st.failure.is_some()
                            || st.set.len() >= count
                            || st.set.attempts >= budget
                        {
                            return;
                        }
                        let SharedState { used, set, failure } = &mut *st;
                        match draw_unused(n, &mut rng, used) {
                            Ok(x) => {
                                set.attempts += 1;
                                x
                            }
                            Err(e) => {
                                *failure = Some(e);
                                return;
                            }
                        }
                    };
                    let r = g.modpow(&x, n);
                    if let Some(f) = fb.factor_residue(&r, n) {
                        let mut st = state.lock().expect("relation state poisoned");
                        if st.set.len() < count {
                            st.set.relations.push(Relation { x, f });
                        }
                    }
                }
            });
        }
    });

    let st = state.into_inner().expect("relation state poisoned");
    if st.set.len() >= count {
        return Ok(st.set);
    }
    if let Some(e) = st.failure {
        return Err(e);
    }
    Err(Error::BudgetExhausted {
        budget,
        found: st.set.len(),
        wanted: count,
        partial: Box::new(st.set),
    })
}

/// An exponent vector `e` over a base `(a_0, ..., a_k)` with
/// `prod a_i^{e_i} ≡ 1 (mod n)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExtendedRelation(pub Vec<BigInt>);

impl ExtendedRelation {
    pub fn exponents(&self) -> &[BigInt] {
        &self.0
    }

    pub fn one_norm(&self) -> BigUint {
        self.0.iter().map(|e| e.magnitude().clone()).sum()
    }

    /// `prod a_i^{e_i} ≡ 1 (mod n)`, checked without inverting anything by
    /// comparing the positive and negative halves.
    pub fn holds(&self, base: &[BigUint], n: &BigUint) -> bool {
        if base.len() != self.0.len() {
            return false;
        }
        let mut num = BigUint::one() % n;
        let mut den = BigUint::one() % n;
        for (a, e) in base.iter().zip(&self.0) {
            let side = if e.sign() == num_bigint::Sign::Minus {
                &mut den
            } else {
                &mut num
            };
            *side = &*side * a.modpow(e.magnitude(), n) % n;
        }
        num == den
    }
}

/// A source of multiplicative relations among a fixed base of residues.
pub trait RelationOracle {
    fn modulus(&self) -> &BigUint;

    /// The residues `a_0, ..., a_k`.
    fn base(&self) -> &[BigUint];

    fn next_relation(&mut self) -> Result<ExtendedRelation>;
}

/// Relations over `{g} ∪ B` produced by the random-exponent sampler.
#[derive(Debug)]
pub struct SamplerOracle<R> {
    collector: RelationCollector<R>,
    base: Vec<BigUint>,
    size_bound: f64,
    emitted: usize,
}

/// Default multiple of `ln n` bounding `ln |e|_1` for emitted relations.
pub const DEFAULT_SIZE_BOUND: f64 = 2.0;

impl<R: Rng> SamplerOracle<R> {
    pub fn with_size_bound(mut self, size_bound: f64) -> Self {
        self.size_bound = size_bound;
        self
    }

    /// The underlying relations in their `g^x = prod p^f` form.
    pub fn relations(&self) -> &RelationSet {
        self.collector.relations()
    }
}

/// Wraps the sampler as an oracle: every emitted vector is
/// `(x, -f_1, ..., -f_b)` over `(g, p_1, ..., p_b)`.
pub fn oracle_from_sampler<R: Rng>(
    n: &BigUint,
    g: &BigUint,
    fb: &FactorBase,
    rng: R,
) -> Result<SamplerOracle<R>> {
    let collector = RelationCollector::new(n.clone(), g.clone(), fb.clone(), rng)?;
    Ok(SamplerOracle {
        base: extended_base(n, g, fb),
        collector,
        size_bound: DEFAULT_SIZE_BOUND,
        emitted: 0,
    })
}

impl<R: Rng> RelationOracle for SamplerOracle<R> {
    fn modulus(&self) -> &BigUint {
        self.collector.relations().modulus()
    }

    fn base(&self) -> &[BigUint] {
        &self.base
    }

    fn next_relation(&mut self) -> Result<ExtendedRelation> {
        let target = self.emitted + 1;
        let budget = self.collector.relations().attempts() + ATTEMPTS_PER_RELATION;
        self.collector.set_budget(budget);
        self.collector.collect_until(target)?;
        self.emitted = target;
        let rel = extend(&self.collector.relations().relations()[target - 1]);
        let n = self.modulus();
        let size = factor_base::ln(&rel.one_norm());
        if size > self.size_bound * factor_base::ln(n) {
            return Err(Error::domain(format!(
                "relation size {size:.2} exceeds {} * ln n",
                self.size_bound
            )));
        }
        debug_assert!(rel.holds(&self.base, n));
        Ok(rel)
    }
}
