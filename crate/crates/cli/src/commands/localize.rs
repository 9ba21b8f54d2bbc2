use crate::config::LocalizeConfig;
use crate::output::{csv_float, OutputDir};
use anyhow::{bail, Result};
use decolab_core::analysis::{langevin_fit, localization_fit};
use decolab_core::localization::{
    evolve_trajectory, LocalizationParams, TrajectoryRecord, WaveFunction,
};
use decolab_core::numerics::rng::StreamId;
use decolab_core::{Grid1D, RngStream};
use rayon::prelude::*;
use serde_json::json;

pub fn run(cfg: &LocalizeConfig, seed_override: Option<u64>, out: &OutputDir) -> Result<bool> {
    let seed = seed_override.unwrap_or(cfg.seed);
    let grid = match cfg.grid.x0 {
        Some(x0) => Grid1D::new(cfg.grid.n, cfg.grid.dx, x0)?,
        None => Grid1D::centered(cfg.grid.n, cfg.grid.dx)?,
    };
    let params = match cfg.dt {
        Some(dt) => LocalizationParams::new(cfg.mass, cfg.lambda, dt, cfg.potential.clone())?,
        None => LocalizationParams::with_default_dt(cfg.mass, cfg.lambda, cfg.potential.clone())?,
    };
    let t_final = match (cfg.t_final, cfg.t_final_t_loc) {
        (Some(t), None) => t,
        (None, Some(mult)) => {
            if cfg.lambda <= 0.0 {
                bail!("t_final_t_loc needs a positive coupling");
            }
            mult * params.t_loc()
        }
        _ => bail!("exactly one of t_final / t_final_t_loc must be set"),
    };
    let psi0 = WaveFunction::gaussian(
        grid,
        cfg.initial.center,
        cfg.initial.sigma,
        cfg.initial.momentum,
    )?;

    // snapshots force a segmented run for trajectory 0 so the wave function
    // can be captured mid-flight; the RNG stream is continued across
    // segments, so the trajectory is identical to an unsegmented run
    let mut snapshot_times: Vec<f64> = cfg
        .snapshot_times
        .iter()
        .copied()
        .filter(|t| *t > 0.0 && *t < t_final)
        .collect();
    snapshot_times.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let runs: Vec<(WaveFunction, TrajectoryRecord)> = (0..cfg.n_trajectories)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(seed, i as u64);
            evolve_trajectory(&psi0, &params, t_final, &mut rng).map_err(anyhow::Error::from)
        })
        .collect::<Result<_>>()?;

    for (i, (_, record)) in runs.iter().take(cfg.record_paths).enumerate() {
        out.write(&format!("trajectory_{i:03}.csv"), &record.to_csv())?;
    }

    if !snapshot_times.is_empty() {
        let mut rng = RngStream::new(seed, 0);
        let mut psi = psi0.clone();
        let mut elapsed = 0.0;
        let mut snaps = vec![(0.0, psi.clone())];
        for &t_snap in &snapshot_times {
            let (next, _) = evolve_trajectory(&psi, &params, t_snap - elapsed, &mut rng)?;
            elapsed = t_snap;
            psi = next;
            snaps.push((t_snap, psi.clone()));
        }
        let mut csv = String::from("t,x,density,re,im\n");
        for (t, wf) in &snaps {
            for (i, amp) in wf.amplitudes().iter().enumerate() {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    csv_float(*t),
                    csv_float(wf.grid().x(i)),
                    csv_float(amp.norm_sqr()),
                    csv_float(amp.re),
                    csv_float(amp.im),
                ));
            }
        }
        out.write("snapshots.csv", &csv)?;
    }

    let first_record = &runs[0].1;
    let fit = localization_fit(first_record, &params).ok();
    let langevin = if runs.len() >= 500 {
        let records: Vec<TrajectoryRecord> = runs.iter().map(|(_, r)| r.clone()).collect();
        langevin_fit(&records).ok()
    } else {
        None
    };

    let jump_counts: Vec<usize> = runs.iter().map(|(_, r)| r.jump_times.len()).collect();
    let summary = json!({
        "seed": StreamId { seed, stream: 0 },
        "n_trajectories": cfg.n_trajectories,
        "t_final": t_final,
        "dt": params.dt,
        "t_loc": if cfg.lambda > 0.0 { Some(params.t_loc()) } else { None },
        "jump_counts": jump_counts,
        "mean_jumps": jump_counts.iter().sum::<usize>() as f64 / jump_counts.len() as f64,
        "fitted_t_loc": fit.map(|f| json!({
            "t_loc_measured": f.t_loc_measured,
            "r_squared": f.r_squared,
        })),
        "momentum_diffusion": langevin.map(|f| json!({
            "sigma_p": f.sigma_p,
            "r_squared": f.r_squared,
        })),
    });
    out.write_json("summary.json", &summary)?;
    println!(
        "localize: {} trajectories to t = {}, mean jumps {:.2}",
        cfg.n_trajectories,
        t_final,
        jump_counts.iter().sum::<usize>() as f64 / jump_counts.len() as f64
    );
    Ok(true)
}
