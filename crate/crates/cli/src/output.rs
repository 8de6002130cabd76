use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::commands::{Output, Plot};
use crate::error::CliError;

/// Bumped whenever a CSV layout changes.
pub const SCHEMA_VERSION: u32 = 1;

pub fn csv_bytes(out: &Output) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&out.header)?;
    for row in &out.rows {
        w.write_record(row)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.into_error()))
}

pub fn gnuplot(name: &str, plot: &Plot) -> String {
    let x = if plot.x == 0 { "0".to_string() } else { plot.x.to_string() };
    let series: Vec<String> = plot
        .ys
        .iter()
        .map(|y| format!("'{name}.csv' using {x}:{y} with {}", plot.style))
        .collect();
    format!(
        "set datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo size 900,600\n\
         set output '{name}.png'\nplot {}\n",
        series.join(", \\\n     ")
    )
}

pub struct Written {
    pub csv: PathBuf,
    pub manifest: PathBuf,
    pub plot: PathBuf,
}

pub fn write_all(outdir: &Path, name: &str, out: &Output, manifest: &Value) -> Result<Written, CliError> {
    std::fs::create_dir_all(outdir)?;
    let csv = outdir.join(format!("{name}.csv"));
    std::fs::write(&csv, csv_bytes(out)?)?;
    let plot = outdir.join(format!("{name}.gp"));
    std::fs::write(&plot, gnuplot(name, &out.plot))?;
    let path = outdir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(manifest).expect("json values serialize");
    text.push('\n');
    std::fs::write(&path, text)?;
    Ok(Written { csv, manifest: path, plot })
}

pub fn manifest(name: &str, config: &Value, seed: u64, threads: usize, wall: f64, out: &Output) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "subcommand": name,
        "version": env!("EFLUX_VERSION"),
        "crate_version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "threads": threads,
        "wall_time_seconds": wall,
        "outputs": [format!("{name}.csv"), format!("{name}.gp")],
        "summary": Value::Object(out.summary.clone()),
        "config": config,
    })
}
