//! Success-rate experiments and phase benchmarks.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::One;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::factoring::{order_via_index_calculus, DriverConfig};
use crate::kernel::{right_kernel, RelationMatrix};
use crate::order::{compute_alphas, order_multiple};
use crate::relations::collect_relations;

/// Terms summed explicitly before the tail correction.
const ZETA_TERMS: u32 = 10_000;

/// `zeta(k)` for integer `k >= 2`.
///
/// Sums `N` terms and adds the Euler-Maclaurin tail
/// `N^{1-k}/(k-1) + N^{-k}/2 + k N^{-k-1}/12`, whose error is `O(N^{-k-3})`.
pub fn zeta(k: u32) -> Result<f64> {
    if k < 2 {
        return Err(Error::domain(format!("zeta diverges at k = {k}")));
    }
    let s = f64::from(k);
    let n = f64::from(ZETA_TERMS);
    // Smallest terms first.
    let head: f64 = (1..ZETA_TERMS).rev().map(|m| f64::from(m).powf(-s)).sum();
    let tail = n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s) + s * n.powf(-s - 1.0) / 12.0;
    Ok(head + tail)
}

/// Probability `1/zeta(k)` that `k` random integers have no common factor.
pub fn zeta_coprimality_probability(k: u32) -> Result<f64> {
    Ok(1.0 / zeta(k)?)
}

/// Upper limit on `n` for the brute-force order oracle.
pub const BRUTE_FORCE_LIMIT: u64 = 1_000_000;

/// Least `r >= 1` with `g^r ≡ 1 (mod n)`, by stepping through powers.
/// `None` when `g` is not a unit modulo `n`.
pub fn brute_force_order(n: u64, g: u64) -> Option<u64> {
    if n < 2 || g.gcd(&n) != 1 {
        return None;
    }
    let g = g % n;
    let mut x = g;
    for r in 1..=n {
        if x == 1 % n {
            return Some(r);
        }
        x = ((x as u128 * g as u128) % n as u128) as u64;
    }
    None
}

/// [`brute_force_order`] behind a shared cache.
#[derive(Debug, Default)]
pub struct OrderOracle {
    cache: Mutex<HashMap<(u64, u64), Option<u64>>>,
}

impl OrderOracle {
    pub fn order(&self, n: u64, g: u64) -> Option<u64> {
        if let Some(&hit) = self
            .cache
            .lock()
            .expect("order cache poisoned")
            .get(&(n, g))
        {
            return hit;
        }
        let r = brute_force_order(n, g);
        self.cache
            .lock()
            .expect("order cache poisoned")
            .insert((n, g), r);
        r
    }
}

/// How `G` compared with the true order in one trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrialOutcome {
    Exact,
    ProperMultiple,
    ZeroOrFail,
}

/// Aggregated outcome of repeated order computations at one setting.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisTrialResult {
    pub n: u64,
    pub g: u64,
    pub c: usize,
    pub trials: usize,
    pub exact_order_hits: usize,
    pub proper_multiple_hits: usize,
    pub zero_or_fail: usize,
    /// `1/zeta(c+1)`.
    pub predicted: f64,
    /// `1 - 1/zeta(c+1)`, reported alongside for comparison.
    pub complement: f64,
}

impl HypothesisTrialResult {
    pub fn hit_rate(&self) -> f64 {
        self.exact_order_hits as f64 / self.trials as f64
    }

    pub const CSV_HEADER: &'static str = "n,g,c,trials,exact,multiple,fail,predicted";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{:.6}",
            self.n,
            self.g,
            self.c,
            self.trials,
            self.exact_order_hits,
            self.proper_multiple_hits,
            self.zero_or_fail,
            self.predicted
        )
    }

    fn record(&mut self, outcome: TrialOutcome) {
        match outcome {
            TrialOutcome::Exact => self.exact_order_hits += 1,
            TrialOutcome::ProperMultiple => self.proper_multiple_hits += 1,
            TrialOutcome::ZeroOrFail => self.zero_or_fail += 1,
        }
    }
}

/// Runs one unrefined order computation and classifies `G` against `order`.
pub fn classify_trial(n: u64, g: u64, order: u64, config: &DriverConfig) -> TrialOutcome {
    let cfg = DriverConfig {
        refine: false,
        ..config.clone()
    };
    match order_via_index_calculus(&BigUint::from(n), &BigUint::from(g), &cfg) {
        Ok(report) if report.order_multiple == BigUint::from(order) => TrialOutcome::Exact,
        Ok(report) if (&report.order_multiple % order).bits() == 0 => TrialOutcome::ProperMultiple,
        _ => TrialOutcome::ZeroOrFail,
    }
}

/// Monte Carlo estimate of how often `G` equals `ord(g)` exactly.
///
/// Every trial collects relations one at a time until the exponent matrix
/// has a kernel of dimension `c + 1`, so each gcd is taken over `c + 1`
/// alphas. `template` supplies the remaining driver settings (bound, unit);
/// its seed is replaced by per-trial seeds drawn from `seed`. Trials run on
/// all available cores; the result does not depend on scheduling.
pub fn estimate_success_rate(
    n: u64,
    g: u64,
    c: usize,
    trials: usize,
    seed: u64,
    template: &DriverConfig,
) -> Result<HypothesisTrialResult> {
    if trials == 0 {
        return Err(Error::domain("trials must be positive"));
    }
    if c == 0 {
        return Err(Error::domain("c must be positive"));
    }
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::domain(format!(
            "n = {n} exceeds the brute-force order limit {BRUTE_FORCE_LIMIT}"
        )));
    }
    let order = brute_force_order(n, g)
        .ok_or_else(|| Error::domain(format!("{g} is not a unit modulo {n}")))?;
    let predicted = zeta_coprimality_probability(c as u32 + 1)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = (0..trials).map(|_| rng.next_u64()).collect();
    let config = DriverConfig {
        extra_relations: c,
        kernel_check_interval: Some(1),
        workers: 1,
        ..template.clone()
    };

    let run_trial = |s: u64| {
        let cfg = DriverConfig {
            seed: s,
            ..config.clone()
        };
        classify_trial(n, g, order, &cfg)
    };
    let threads = std::thread::available_parallelism().map_or(1, |p| p.get());
    let chunk = trials.div_ceil(threads);
    let outcomes: Vec<TrialOutcome> = if threads == 1 {
        seeds.iter().map(|&s| run_trial(s)).collect()
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = seeds
                .chunks(chunk)
                .map(|part| {
                    let run_trial = &run_trial;
                    scope.spawn(move || part.iter().map(|&s| run_trial(s)).collect::<Vec<_>>())
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("trial worker panicked"))
                .collect()
        })
    };

    let mut result = HypothesisTrialResult {
        n,
        g,
        c,
        trials,
        exact_order_hits: 0,
        proper_multiple_hits: 0,
        zero_or_fail: 0,
        predicted,
        complement: 1.0 - predicted,
    };
    for o in outcomes {
        result.record(o);
    }
    Ok(result)
}

/// Timings of the three phases for one `(n, B)` setting.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: String,
    pub bound: u64,
    pub b: usize,
    pub relation_time: Duration,
    pub attempts: u64,
    pub kernel_time: Duration,
    pub gcd_time: Duration,
    pub error: Option<String>,
}

impl BenchRow {
    pub const CSV_HEADER: &'static str =
        "n,B,b,relation_time_s,attempts,kernel_time_s,gcd_time_s,error";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:.6},{},{:.6},{:.6},{}",
            self.n,
            self.bound,
            self.b,
            self.relation_time.as_secs_f64(),
            self.attempts,
            self.kernel_time.as_secs_f64(),
            self.gcd_time.as_secs_f64(),
            self.error.as_deref().unwrap_or("")
        )
    }
}

/// Renders rows as CSV with a header line.
pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(BenchRow::CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

/// A unit in `[2, n-2]` drawn from `rng`.
pub fn random_unit<R: Rng>(n: &BigUint, rng: &mut R) -> BigUint {
    use num_bigint::RandBigInt;
    let two = BigUint::from(2u32);
    let upper = n - 1u32;
    loop {
        let g = rng.gen_biguint_range(&two, &upper);
        if g.gcd(n).is_one() {
            return g;
        }
    }
}

/// Times relation collection, the kernel and the gcd phase for every `n`
/// and every bound in `bounds`. The kernel is recomputed `kernel_repeats`
/// times and the fastest run is reported. Failures become rows with an
/// error tag.
pub fn benchmark_phases(
    n_list: &[BigUint],
    bounds: &[u64],
    config: &DriverConfig,
    kernel_repeats: usize,
) -> Vec<BenchRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut rows = Vec::new();
    for n in n_list {
        let g = random_unit(n, &mut rng);
        for &bound in bounds {
            let seed = rng.next_u64();
            rows.push(bench_one(n, &g, bound, seed, config, kernel_repeats.max(1)));
        }
    }
    rows
}

fn bench_one(
    n: &BigUint,
    g: &BigUint,
    bound: u64,
    seed: u64,
    config: &DriverConfig,
    kernel_repeats: usize,
) -> BenchRow {
    let mut row = BenchRow {
        n: n.to_string(),
        bound,
        b: 0,
        relation_time: Duration::ZERO,
        attempts: 0,
        kernel_time: Duration::ZERO,
        gcd_time: Duration::ZERO,
        error: None,
    };
    let run = |row: &mut BenchRow| -> Result<()> {
        let fb = crate::factor_base::FactorBase::new(bound, config.include_unit)?;
        row.b = fb.len();
        let count = fb.width() + config.extra_relations;
        let t = Instant::now();
        let set = collect_relations(
            n,
            g,
            &fb,
            count,
            ChaCha8Rng::seed_from_u64(seed),
            config.attempt_budget,
        )?;
        row.relation_time = t.elapsed();
        row.attempts = set.attempts();
        let matrix = RelationMatrix::from_relations(&set)?;
        let mut kernel = None;
        row.kernel_time = Duration::MAX;
        for _ in 0..kernel_repeats {
            let t = Instant::now();
            let k = right_kernel(matrix.entries());
            row.kernel_time = row.kernel_time.min(t.elapsed());
            kernel = Some(k);
        }
        let kernel = kernel.expect("at least one kernel run");
        let t = Instant::now();
        let alphas = compute_alphas(&kernel, matrix.x_row())?;
        order_multiple(&alphas, n, g)?;
        row.gcd_time = t.elapsed();
        Ok(())
    };
    if let Err(e) = run(&mut row) {
        row.error = Some(error_tag(&e));
    }
    row
}

fn error_tag(e: &Error) -> String {
    match e {
        Error::ImmediateFactor(_) => "immediate-factor",
        Error::Exhausted => "exhausted",
        Error::BudgetExhausted { .. } => "budget",
        Error::AllAlphasZero => "all-alphas-zero",
        Error::Verification(_) => "verification",
        _ => "error",
    }
    .to_string()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
