//! WebAssembly bindings for the browser demo. Every function takes plain
//! values and returns a JSON string: the result document on success,
//! `{"error": {...}}` otherwise.

use index_factor::cli::error_document;
use index_factor::experiments::estimate_success_rate;
use index_factor::{factor, order_via_index_calculus, DriverConfig, Error};
use num_bigint::BigUint;
use serde_json::json;
use wasm_bindgen::prelude::*;

fn parse(name: &str, s: &str) -> Result<BigUint, Error> {
    s.trim()
        .parse()
        .map_err(|_| Error::Domain(format!("{name} = {s:?} is not a decimal integer")))
}

fn config(bound: u32, extra: u32, seed: u32) -> DriverConfig {
    DriverConfig {
        bound_override: (bound > 0).then_some(bound as u64),
        extra_relations: extra.max(1) as usize,
        seed: seed as u64,
        ..DriverConfig::default()
    }
}

fn render<T: serde::Serialize>(r: Result<T, Error>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).expect("result serializes"),
        Err(e) => error_document(&e).to_string(),
    }
}

/// Prime factorization of `n`. `bound = 0` picks the default factor base.
#[wasm_bindgen]
pub fn factor_json(n: &str, bound: u32, extra: u32, seed: u32) -> String {
    render(parse("n", n).and_then(|n| {
        if n < BigUint::from(2u32) {
            return Err(Error::Domain("n must be at least 2".into()));
        }
        factor(&n, &config(bound, extra, seed))
    }))
}

/// Order of `g` modulo `n`, refined to the exact order when `refine` is set.
#[wasm_bindgen]
pub fn order_json(n: &str, g: &str, bound: u32, extra: u32, seed: u32, refine: bool) -> String {
    render(parse("n", n).and_then(|n| {
        let g = parse("g", g)?;
        let cfg = DriverConfig {
            refine,
            ..config(bound, extra, seed)
        };
        order_via_index_calculus(&n, &g, &cfg)
    }))
}

/// Exact-order hit rate for `c = 1..=max_c`, next to `1/zeta(c+1)`.
#[wasm_bindgen]
pub fn hit_rate_curve_json(
    n: u32,
    g: u32,
    bound: u32,
    max_c: u32,
    trials: u32,
    seed: u32,
) -> String {
    let template = config(bound, 1, 0);
    render(
        (1..=max_c.max(1) as usize)
            .map(|c| {
                let r = estimate_success_rate(
                    n as u64,
                    g as u64,
                    c,
                    trials as usize,
                    seed as u64,
                    &template,
                )?;
                Ok(json!({
                    "c": c,
                    "trials": r.trials,
                    "hit_rate": r.hit_rate(),
                    "predicted": r.predicted,
                    "multiple": r.proper_multiple_hits,
                    "fail": r.zero_or_fail,
                }))
            })
            .collect::<Result<Vec<_>, Error>>(),
    )
}
