//! Acceptance suite. Each test prints one `PASS`/`FAIL` line to stderr
//! (uncaptured) and then asserts.

use std::io::Write;
use std::process::Command;
use std::time::{Duration, Instant};

use index_factor::cli::{self, verify_fixture, Fixture};
use index_factor::experiments::{benchmark_phases, estimate_success_rate, log_log_slope};
use index_factor::factor_base::FactorBase;
use index_factor::{
    collect_relations, order_via_index_calculus, right_kernel, DriverConfig, Error, IntMatrix,
};
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn report(id: u8, name: &str, pass: bool, detail: &str, elapsed: Duration) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(
        std::io::stderr(),
        "criterion {id} [{verdict}] {name}: {detail} ({:.2}s)",
        elapsed.as_secs_f64()
    );
}

fn cli_json(args: &[&str]) -> (i32, Value) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = cli::run(
        std::iter::once("index-factor").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    let v = serde_json::from_slice(&out).unwrap_or(Value::Null);
    (code, v)
}

#[test]
fn criterion_1_worked_example_fixture() {
    let t = Instant::now();
    let fx = Fixture::bundled();
    let rep = verify_fixture(&fx).expect("fixture is well formed");
    let first_alpha_ok = fx.alphas[0] == BigInt::from(1_201_200);
    let n = BigUint::from(62389u32);
    let g = BigUint::from(43u32);
    let powers_ok = g.modpow(&BigUint::from(15400u32), &n).is_one()
        && g.modpow(&BigUint::from(7700u32), &n) == BigUint::from(51174u32)
        && BigUint::from(51173u32).gcd(&n) == BigUint::from(701u32)
        && BigUint::from(701u32 * 89) == n;
    let (code, json) = cli_json(&["verify-fixture", "--json"]);
    let pass = rep.passed
        && rep.checks.len() == 6
        && first_alpha_ok
        && powers_ok
        && code == 0
        && json["passed"] == true;
    let failed: Vec<String> = rep.failed().map(|c| c.id.to_string()).collect();
    report(
        1,
        "worked-example fixture",
        pass,
        &format!(
            "{}/6 checks, failed [{}], CLI exit {code}",
            6 - failed.len(),
            failed.join(",")
        ),
        t.elapsed(),
    );
    assert!(pass, "{rep}");
}

#[test]
fn criterion_2_end_to_end_factoring() {
    let t = Instant::now();
    let mut ok = 0;
    for seed in 0..100 {
        let seed = seed.to_string();
        let (code, v) = cli_json(&[
            "factor", "--n", "62389", "--bound", "50", "--extra", "10", "--seed", &seed, "--json",
        ]);
        let primes: Vec<&str> = v["factors"]
            .as_array()
            .map(|fs| fs.iter().filter_map(|f| f["p"].as_str()).collect())
            .unwrap_or_default();
        if code == 0 && primes == ["89", "701"] {
            ok += 1;
        }
    }
    let elapsed = t.elapsed();
    let pass = ok >= 95;
    report(
        2,
        "factor 62389 at B = 50, c = 10",
        pass,
        &format!("{ok}/100 seeds gave {{89, 701}}"),
        elapsed,
    );
    assert!(pass);
}

// Independent order oracle: step through powers of g.
fn naive_order(n: u64, g: u64) -> u64 {
    let mut x = g % n;
    let mut k = 1;
    while x != 1 {
        x = x * g % n;
        k += 1;
    }
    k
}

fn is_prime(n: u64) -> bool {
    n >= 2
        && (2..)
            .take_while(|d| d * d <= n)
            .all(|d| !n.is_multiple_of(d))
}

#[test]
fn criterion_3_order_equivalence() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut exact, mut multiple_ok, mut positive, mut runs) = (0, 0, 0, 0);
    let mut misses = Vec::new();
    while runs < 200 {
        let n = rng.gen_range(4u64..100_000) | 1;
        if is_prime(n) {
            continue;
        }
        let g = loop {
            let g = rng.gen_range(2..n - 1);
            if g.gcd(&n) == 1 {
                break g;
            }
        };
        runs += 1;
        let truth = naive_order(n, g);
        let cfg = DriverConfig {
            refine: true,
            seed: rng.gen(),
            ..DriverConfig::default()
        };
        match order_via_index_calculus(&BigUint::from(n), &BigUint::from(g), &cfg) {
            Ok(r) => {
                positive += 1;
                let m = r.order_multiple.to_u64().unwrap();
                if m % truth == 0 {
                    multiple_ok += 1;
                }
                if r.refined_order == Some(BigUint::from(truth)) {
                    exact += 1;
                } else {
                    misses.push(format!("({n}, {g})"));
                }
            }
            Err(e) => misses.push(format!("({n}, {g}): {e}")),
        }
    }
    let pass = exact * 100 >= 95 * runs && multiple_ok == positive;
    report(
        3,
        "index-calculus order vs brute force",
        pass,
        &format!(
            "exact {exact}/{runs}, multiples {multiple_ok}/{positive} with G > 0, misses {misses:?}"
        ),
        t.elapsed(),
    );
    assert!(pass);
}

// Criterion 4 support.

fn random_matrix(rng: &mut ChaCha8Rng) -> Vec<Vec<i64>> {
    let b = rng.gen_range(1..=8usize);
    let m = rng.gen_range(1..=12usize);
    let mut a: Vec<Vec<i64>> = (0..b)
        .map(|_| (0..m).map(|_| rng.gen_range(-9..=9)).collect())
        .collect();
    // Dense random matrices rarely have short kernel vectors; plant some by
    // repeating, negating, doubling or zeroing columns, or copying rows.
    if rng.gen_bool(0.5) {
        for _ in 0..rng.gen_range(1..=4) {
            let (i, j) = (rng.gen_range(0..m), rng.gen_range(0..m));
            let k: i64 = [0, 1, -1, 2, -2][rng.gen_range(0..5)];
            if a.iter().all(|r| (k * r[i]).abs() <= 9) {
                for r in a.iter_mut() {
                    r[j] = k * r[i];
                }
            }
        }
        if b > 1 && rng.gen_bool(0.3) {
            let src = a[0].clone();
            a[b - 1] = src;
        }
    }
    a
}

fn to_i64_basis(k: &[Vec<BigInt>]) -> Vec<Vec<i64>> {
    k.iter()
        .map(|v| {
            v.iter()
                .map(|x| x.to_i64().expect("small basis entry"))
                .collect()
        })
        .collect()
}

/// Whether `w` is an integer combination of an echelon basis, solving for
/// coefficients at the leading columns and checking the whole identity.
fn in_integer_span(basis: &[Vec<i64>], w: &[i64]) -> bool {
    let mut rest: Vec<i128> = w.iter().map(|&x| x as i128).collect();
    for v in basis {
        let p = v
            .iter()
            .position(|&x| x != 0)
            .expect("nonzero basis vector");
        let lead = v[p] as i128;
        if rest[p] % lead != 0 {
            return false;
        }
        let a = rest[p] / lead;
        for (r, &x) in rest.iter_mut().zip(v) {
            *r -= a * x as i128;
        }
    }
    rest.iter().all(|&x| x == 0)
}

fn is_echelon(basis: &[Vec<i64>]) -> bool {
    let leads: Vec<usize> = basis
        .iter()
        .map(|v| v.iter().position(|&x| x != 0).unwrap_or(usize::MAX))
        .collect();
    leads.windows(2).all(|w| w[0] < w[1]) && leads.last().is_none_or(|&l| l != usize::MAX)
}

/// Calls `visit` on every nonzero `v` in `[-r, r]^m` with support at most
/// `max_support` and `A v = 0`.
fn enumerate_kernel_box(
    a: &[Vec<i64>],
    m: usize,
    r: i64,
    max_support: usize,
    visit: &mut dyn FnMut(&[i64]),
) {
    fn rec(
        a: &[Vec<i64>],
        m: usize,
        r: i64,
        col: usize,
        left: usize,
        v: &mut Vec<i64>,
        acc: &mut Vec<i64>,
        visit: &mut dyn FnMut(&[i64]),
    ) {
        if col == m {
            if v.iter().any(|&x| x != 0) && acc.iter().all(|&s| s == 0) {
                visit(v);
            }
            return;
        }
        rec(a, m, r, col + 1, left, v, acc, visit);
        if left == 0 {
            return;
        }
        for x in (-r..=r).filter(|&x| x != 0) {
            v[col] = x;
            for (s, row) in acc.iter_mut().zip(a) {
                *s += x * row[col];
            }
            rec(a, m, r, col + 1, left - 1, v, acc, visit);
            for (s, row) in acc.iter_mut().zip(a) {
                *s -= x * row[col];
            }
        }
        v[col] = 0;
    }
    let mut v = vec![0; m];
    let mut acc = vec![0; a.len()];
    rec(a, m, r, 0, max_support, &mut v, &mut acc, visit);
}

/// Full box when it has at most `11^6` points, otherwise support <= 3.
const FULL_BOX_MAX_COLS: usize = 6;
const SPARSE_SUPPORT: usize = 3;

#[test]
fn criterion_4_kernel_exactness() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut bad, mut checked_vectors, mut nontrivial) = (Vec::new(), 0u64, 0);
    for case in 0..1000 {
        let a = random_matrix(&mut rng);
        let m = a[0].len();
        let matrix = IntMatrix::from_i64(&a).unwrap();
        let k = right_kernel(&matrix);
        if !k.is_empty() {
            nontrivial += 1;
        }
        for v in k.vectors() {
            let content = v.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
            if !matrix.annihilates(v) || !content.is_one() || v.iter().all(|x| !x.is_positive()) {
                bad.push(format!("case {case}: vector {v:?}"));
            }
        }
        let basis = to_i64_basis(k.vectors());
        if !is_echelon(&basis) {
            bad.push(format!("case {case}: basis not in echelon form"));
            continue;
        }
        let support = if m <= FULL_BOX_MAX_COLS {
            m
        } else {
            SPARSE_SUPPORT
        };
        let mut missed = 0;
        enumerate_kernel_box(&a, m, 5, support, &mut |w| {
            checked_vectors += 1;
            if !in_integer_span(&basis, w) {
                missed += 1;
            }
        });
        if missed > 0 {
            bad.push(format!(
                "case {case}: {missed} box vectors outside the span"
            ));
        }
    }
    let pass = bad.is_empty();
    report(
        4,
        "kernel exactness on 1000 matrices",
        pass,
        &format!(
            "{nontrivial} nontrivial kernels, {checked_vectors} box vectors checked, failures {bad:?}"
        ),
        t.elapsed(),
    );
    assert!(pass);
}

#[test]
fn criterion_5_success_rate_statistics() {
    let t = Instant::now();
    let template = DriverConfig {
        bound_override: Some(50),
        ..DriverConfig::default()
    };
    let mut lines = Vec::new();
    let mut pass = true;
    for c in 1..=3 {
        let mut r = estimate_success_rate(62389, 43, c, 1000, 5, &template).unwrap();
        if (r.hit_rate() - r.predicted).abs() > 0.10 {
            r = estimate_success_rate(62389, 43, c, 5000, 55, &template).unwrap();
        }
        let ok = (r.hit_rate() - r.predicted).abs() <= 0.10;
        pass &= ok;
        lines.push(format!(
            "c={c}: {:.3} vs {:.3} over {}",
            r.hit_rate(),
            r.predicted,
            r.trials
        ));
    }
    report(
        5,
        "exact-order hit rate vs 1/zeta(c+1)",
        pass,
        &lines.join(", "),
        t.elapsed(),
    );
    assert!(pass);
}

#[test]
fn criterion_6_smoothness_and_kernel_growth() {
    let t = Instant::now();
    let n = BigUint::from(62389u32);
    let g = BigUint::from(43u32);
    let fb = FactorBase::new(50, false).unwrap();
    let total: u64 = (0..50)
        .map(|seed| {
            collect_relations(&n, &g, &fb, 25, ChaCha8Rng::seed_from_u64(seed), None)
                .unwrap()
                .attempts()
        })
        .sum();
    let mean = total as f64 / 50.0;
    let attempts_ok = (60.0..=600.0).contains(&mean);

    // Median over seeds of the fastest of several kernel runs.
    let bounds = [50u64, 100, 200, 400];
    let mut points = Vec::new();
    for &bound in &bounds {
        let mut times: Vec<(usize, Duration)> = (0..9)
            .map(|seed| {
                let cfg = DriverConfig {
                    seed,
                    ..DriverConfig::default()
                };
                let row = benchmark_phases(std::slice::from_ref(&n), &[bound], &cfg, 15).remove(0);
                assert!(row.error.is_none(), "{row:?}");
                (row.b, row.kernel_time)
            })
            .collect();
        times.sort_by_key(|&(_, d)| d);
        let (b, d) = times[times.len() / 2];
        points.push((b as f64, d.as_secs_f64()));
    }
    let slope = log_log_slope(&points);
    let growth_ok = slope > 1.0;
    let pass = attempts_ok && growth_ok;
    let series: Vec<String> = points
        .iter()
        .map(|(b, s)| format!("b={b}: {:.0}us", s * 1e6))
        .collect();
    report(
        6,
        "smoothness tests and kernel growth",
        pass,
        &format!(
            "mean {mean:.1} tests per 25 relations; kernel {}; log-log slope {slope:.2}",
            series.join(", ")
        ),
        t.elapsed(),
    );
    assert!(pass);
}

#[test]
fn criterion_7_deterministic_cli() {
    let t = Instant::now();
    let bin = env!("CARGO_BIN_EXE_index-factor");
    let invocations: [&[&str]; 6] = [
        &[
            "order", "--n", "62389", "--g", "43", "--bound", "50", "--seed", "11", "--json",
        ],
        &[
            "order", "--n", "1000003", "--g", "5", "--seed", "2", "--refine", "--json",
        ],
        &[
            "factor", "--n", "62389", "--bound", "50", "--seed", "7", "--json",
        ],
        &[
            "factor",
            "--n",
            "999962000357",
            "--bound",
            "900",
            "--seed",
            "3",
            "--json",
        ],
        &[
            "order",
            "--n",
            "62389",
            "--g",
            "43",
            "--bound",
            "50",
            "--max-attempts",
            "5",
            "--json",
        ],
        &["verify-fixture", "--json"],
    ];
    let mut differing = Vec::new();
    for args in invocations {
        let mut args = args.to_vec();
        if args[0] != "verify-fixture" {
            args.extend(["--workers", "1"]);
        }
        let run = || Command::new(bin).args(&args).output().expect("binary runs");
        let (a, b) = (run(), run());
        let same = a.stdout == b.stdout && a.status == b.status && !a.stdout.is_empty();
        if !same || serde_json::from_slice::<Value>(&a.stdout).is_err() {
            differing.push(args.join(" "));
        }
    }
    let pass = differing.is_empty();
    report(
        7,
        "byte-identical JSON across runs",
        pass,
        &format!("{} invocations, differing {differing:?}", invocations.len()),
        t.elapsed(),
    );
    assert!(pass);
}

// The fifth invocation above fails on purpose; its failure must be stable too.
#[test]
fn budget_failure_is_reported() {
    let r = order_via_index_calculus(
        &BigUint::from(62389u32),
        &BigUint::from(43u32),
        &DriverConfig {
            bound_override: Some(50),
            attempt_budget: Some(5),
            ..DriverConfig::default()
        },
    );
    assert!(matches!(r, Err(Error::BudgetExhausted { .. })));
}
