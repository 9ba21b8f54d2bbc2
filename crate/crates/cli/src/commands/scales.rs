use crate::config::ScalesConfig;
use crate::output::OutputDir;
use anyhow::Result;
use decolab_core::analysis::{chaos_margin, pointer_scales, ScaleInput};
use serde_json::json;

pub fn run(cfg: &ScalesConfig, out: &OutputDir) -> Result<bool> {
    let mut rows = Vec::new();
    println!(
        "{:<22} {:>10} {:>10} {:>10} {:>10} {:>12} {:>10}",
        "row", "inertia", "lambda", "dx", "dp", "t_loc", "lyap*t_loc"
    );
    for row in &cfg.rows {
        let s = ScaleInput::new(row.inertia, row.lambda)?;
        let ps = pointer_scales(&s)?;
        let margin = row
            .lyapunov
            .map(|lyap| chaos_margin(&s, lyap))
            .transpose()?;
        println!(
            "{:<22} {:>10.2e} {:>10.2e} {:>10.2e} {:>10.2e} {:>12.2e} {}",
            row.label,
            row.inertia,
            row.lambda,
            ps.dx,
            ps.dp,
            ps.t_loc,
            margin
                .map(|(r, loc)| format!("{r:>7.3} ({})", if loc { "localizes" } else { "spreads" }))
                .unwrap_or_else(|| "-".to_string()),
        );
        rows.push(json!({
            "label": row.label,
            "inertia": row.inertia,
            "lambda": row.lambda,
            "dx": ps.dx,
            "dp": ps.dp,
            "t_loc": ps.t_loc,
            "chaos_margin": margin.map(|(r, loc)| json!({ "ratio": r, "localizes": loc })),
        }));
    }
    out.write_json("scales.json", &json!({ "rows": rows }))?;
    Ok(true)
}
