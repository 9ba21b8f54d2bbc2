use crate::config::FramesConfig;
use crate::output::OutputDir;
use anyhow::{bail, Result};
use decolab_core::frames::{build_branch_tree, decoherence_check};
use decolab_core::scenarios;
use serde_json::json;

pub fn run(cfg: &FramesConfig, _seed_override: Option<u64>, out: &OutputDir) -> Result<bool> {
    match (&cfg.scenario, &cfg.script) {
        (Some(name), None) => run_scenario(name, cfg, out),
        (None, Some(script)) => run_script(script, out),
        _ => bail!("frames config needs exactly one of `scenario` or `script`"),
    }
}

fn run_scenario(name: &str, cfg: &FramesConfig, out: &OutputDir) -> Result<bool> {
    match name {
        "epr" => {
            let report = scenarios::run_entangled_pair()?;
            out.write_json("report.json", &report)?;
            print!("{}", report.summary());
            Ok(report.passed)
        }
        "wigner" => {
            let phi = cfg.phi.unwrap_or(std::f64::consts::FRAC_PI_4);
            let report = scenarios::run_friend_superobserver(phi)?;
            out.write_json("report.json", &report)?;
            print!("{}", report.summary());
            Ok(report.passed)
        }
        "chsh" => {
            let theta = cfg.theta.unwrap_or(std::f64::consts::FRAC_PI_8);
            let report = scenarios::run_chsh(theta)?;
            out.write_json("report.json", &report)?;
            println!(
                "chsh: value {:.9} at theta = {:.6} (violated: {}), tree surrogate {:.6}",
                report.value, report.theta, report.violated, report.classical_surrogate
            );
            Ok(report.passed)
        }
        "fr" => {
            let report = scenarios::run_double_superobserver()?;
            out.write_json("report.json", &report)?;
            print!("{}", report.summary());
            Ok(report.passed)
        }
        other => bail!("unknown scenario `{other}` (expected epr|wigner|chsh|fr)"),
    }
}

fn run_script(script_doc: &decolab_core::frames::ScriptDoc, out: &OutputDir) -> Result<bool> {
    let (initial, script) = script_doc.build()?;
    let mut frames_report = Vec::new();
    let mut all_ok = true;
    for (name, subsystems) in &script_doc.frames {
        let frame = initial.layout().resolve(subsystems)?;
        let tree = build_branch_tree(&initial, &script, &frame)?;
        let deco = decoherence_check(&tree);
        let total: f64 = tree.leaf_probabilities().iter().map(|(_, p)| p).sum();
        all_ok &= (total - 1.0).abs() < 1e-9;
        out.write_json(&format!("tree_{name}.json"), &tree.to_doc())?;
        frames_report.push(json!({
            "frame": name,
            "subsystems": subsystems,
            "decoherent": deco.is_decoherent,
            "max_violation": deco.max_violation,
            "total_leaf_probability": total,
            "leaves": tree
                .leaf_probabilities()
                .iter()
                .map(|(label, p)| json!({ "label": label, "prob": p }))
                .collect::<Vec<_>>(),
        }));
        println!(
            "frame {name}: {} leaves, decoherent = {}",
            tree.leaves().len(),
            deco.is_decoherent
        );
    }
    out.write_json("report.json", &json!({ "frames": frames_report }))?;
    Ok(all_ok)
}
