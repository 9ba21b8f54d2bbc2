use crate::config::CollapseConfig;
use crate::output::OutputDir;
use anyhow::Result;
use decolab_core::collapse::{
    collapse_ensemble, mean_jump_count, path_to_csv, simulate_collapse, WeightState,
};
use decolab_core::RngStream;
use serde_json::json;

pub fn run(cfg: &CollapseConfig, seed_override: Option<u64>, out: &OutputDir) -> Result<bool> {
    let seed = seed_override.unwrap_or(cfg.seed);
    let s0 = WeightState::pair(cfg.w1, cfg.separation, cfg.lambda)?;
    let dt_max = cfg.dt_max.unwrap_or(f64::INFINITY);

    // a few individual paths for plotting
    for i in 0..cfg.record_paths {
        let mut rng = RngStream::new(seed, i as u64);
        let outcome = simulate_collapse(&s0, dt_max, &mut rng)?;
        out.write(&format!("weights_{i:03}.csv"), &path_to_csv(&outcome.path))?;
    }

    let ens = collapse_ensemble(&s0, dt_max, cfg.n_runs, seed)?;
    let w2 = 1.0 - cfg.w1;
    let sigma = (w2 * (1.0 - w2) / cfg.n_runs as f64).sqrt();
    let formula = mean_jump_count(cfg.w1);
    let report = json!({
        "seed": seed,
        "n_runs": cfg.n_runs,
        "initial_weights": [cfg.w1, w2],
        "winner2_frequency": ens.winner2_frequency,
        "expected_frequency": w2,
        "binomial_sigma": sigma,
        "within_3_sigma": (ens.winner2_frequency - w2).abs() <= 3.0 * sigma.max(1e-12),
        "mean_jumps": ens.mean_jumps,
        "mean_jumps_formula": formula,
        "mean_resolution_time": ens.mean_t_final,
    });
    out.write_json("born.json", &report)?;
    println!(
        "collapse: {} runs, winner-2 frequency {:.4} (expected {:.4}), mean jumps {:.4} (formula {:.4})",
        cfg.n_runs, ens.winner2_frequency, w2, ens.mean_jumps, formula
    );
    Ok((ens.winner2_frequency - w2).abs() <= 3.0 * sigma.max(1e-12))
}
