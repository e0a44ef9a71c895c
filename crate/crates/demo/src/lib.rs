//! Browser demo: three operations over `cur-core`, each returning JSON for
//! the static page in `www/`.

use cur_core::experiments::{
    rank_truncation_counterexample, run_experiment, summarize, ExperimentConfig, Generator,
    NoiseConfig, NoiseKind, Sampler, SummaryRow,
};
use cur_core::linalg::Schatten;
use cur_core::sampling::RngSeed;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest matrix the page may request; keeps a run to a few seconds.
pub const MAX_N: usize = 120;

/// Residual spectra and norms of the 3x3 rank-truncation counterexample.
pub fn counterexample(epsilon: f64) -> Result<String, String> {
    let r = rank_truncation_counterexample(epsilon).map_err(|e| e.to_string())?;
    Ok(serde_json::to_string(&r).expect("plain data serializes"))
}

#[derive(Serialize)]
struct Curves {
    counts: Vec<usize>,
    rows: Vec<SummaryRow>,
}

fn check_size(n: usize, rank: usize) -> Result<(), String> {
    if n > MAX_N {
        return Err(format!("n is capped at {MAX_N} in the demo"));
    }
    if rank == 0 || rank >= n {
        return Err(format!("rank must lie in 1..{n}"));
    }
    Ok(())
}

/// Mean nuclear-norm error curves for a noisy SPSD matrix of rank `rank`,
/// sampled symmetrically at counts `rank, rank + step, ...` up to `n / 2`.
pub fn spsd_curves(
    n: usize,
    rank: usize,
    noise: &str,
    sigma: f64,
    trials: usize,
    seed: u64,
) -> Result<String, String> {
    check_size(n, rank)?;
    let kind = match noise {
        "spsd" => NoiseKind::Spsd,
        "symmetric" => NoiseKind::Symmetric,
        other => return Err(format!("unknown noise '{other}'")),
    };
    let step = (n / 2 - rank).div_ceil(6).max(1);
    let counts: Vec<usize> = (rank..=n / 2).step_by(step).collect();
    let config = ExperimentConfig {
        generator: Generator::SpsdLowRank { n },
        noise: NoiseConfig { kind, sigma },
        rank,
        column_counts: counts.clone(),
        trials,
        sampler: Sampler::Uniform,
        norm: Schatten::NUCLEAR,
        seed: RngSeed(seed),
        variants: ["post_truncated", "rank_u", "projection_rank", "projection"]
            .map(String::from)
            .to_vec(),
        tau: None,
        symmetric: Some(true),
        bounds: false,
    };
    let results = run_experiment(&config).map_err(|e| e.to_string())?;
    let curves = Curves {
        counts,
        rows: summarize(&results),
    };
    Ok(serde_json::to_string(&curves).expect("plain data serializes"))
}

#[derive(Serialize)]
struct SamplerComparison {
    maxvol: Vec<SummaryRow>,
    uniform: Vec<SummaryRow>,
}

/// Mean spectral error on the `n x n` Hilbert matrix for maximal-volume
/// versus uniform row and column selection.
pub fn sampler_comparison(
    n: usize,
    rank: usize,
    count: usize,
    trials: usize,
    seed: u64,
) -> Result<String, String> {
    check_size(n, rank)?;
    if count < rank || count > n {
        return Err(format!("count must lie in {rank}..={n}"));
    }
    let run = |sampler| {
        let config = ExperimentConfig {
            generator: Generator::Hilbert { n },
            noise: NoiseConfig {
                kind: NoiseKind::None,
                sigma: 0.0,
            },
            rank,
            column_counts: vec![count],
            trials,
            sampler,
            norm: Schatten::SPECTRAL,
            seed: RngSeed(seed),
            variants: ["post_truncated", "rank_u", "projection_rank"]
                .map(String::from)
                .to_vec(),
            tau: None,
            symmetric: Some(false),
            bounds: false,
        };
        run_experiment(&config)
            .map(|r| summarize(&r))
            .map_err(|e| e.to_string())
    };
    let cmp = SamplerComparison {
        maxvol: run(Sampler::Maxvol)?,
        uniform: run(Sampler::Uniform)?,
    };
    Ok(serde_json::to_string(&cmp).expect("plain data serializes"))
}

#[wasm_bindgen(js_name = counterexample)]
pub fn counterexample_js(epsilon: f64) -> Result<String, JsError> {
    counterexample(epsilon).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = spsdCurves)]
pub fn spsd_curves_js(
    n: usize,
    rank: usize,
    noise: &str,
    sigma: f64,
    trials: usize,
    seed: u32,
) -> Result<String, JsError> {
    spsd_curves(n, rank, noise, sigma, trials, seed.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = samplerComparison)]
pub fn sampler_comparison_js(
    n: usize,
    rank: usize,
    count: usize,
    trials: usize,
    seed: u32,
) -> Result<String, JsError> {
    sampler_comparison(n, rank, count, trials, seed.into()).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn parse(s: Result<String, String>) -> Value {
        serde_json::from_str(&s.unwrap()).unwrap()
    }

    #[test]
    fn counterexample_spectra() {
        let v = parse(counterexample(0.5));
        assert_eq!(v["pass"], true);
        let s = v["post_truncated_spectrum"][0].as_f64().unwrap();
        assert!((s - 200.0).abs() < 1e-10);
        assert!(counterexample(2.0).is_err());
    }

    #[test]
    fn spsd_curves_cover_every_count() {
        let v = parse(spsd_curves(30, 3, "spsd", 1e-3, 2, 1));
        let counts = v["counts"].as_array().unwrap();
        assert_eq!(counts.first().unwrap(), 3);
        assert!(counts.last().unwrap().as_u64().unwrap() <= 15);
        // four variants plus the baseline at each count
        assert_eq!(v["rows"].as_array().unwrap().len(), 5 * counts.len());
        assert!(spsd_curves(30, 3, "pink", 1e-3, 2, 1).is_err());
        assert!(spsd_curves(MAX_N + 1, 3, "spsd", 1e-3, 2, 1).is_err());
    }

    #[test]
    fn maxvol_beats_uniform_on_hilbert() {
        let v = parse(sampler_comparison(60, 6, 9, 4, 3));
        let mean = |side: &str| {
            v[side]
                .as_array()
                .unwrap()
                .iter()
                .find(|r| r["variant"] == "rank_u")
                .unwrap()["mean"]
                .as_f64()
                .unwrap()
        };
        assert!(mean("maxvol") < mean("uniform"), "{v}");
        assert!(sampler_comparison(60, 6, 3, 4, 3).is_err());
    }
}
