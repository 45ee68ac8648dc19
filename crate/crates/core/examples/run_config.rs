//! Evaluate a TOML run configuration, as `wodzicki compute` does.
//!
//! `cargo run --example run_config -- configs/nc4_laplacian.toml`

use wodzicki::config::RunConfig;

fn main() -> wodzicki::error::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/nc2_metric.toml").into());
    let text = std::fs::read_to_string(&path).map_err(|e| wodzicki::error::Error::Config(format!("{path}: {e}")))?;
    let cfg = RunConfig::from_toml(&text)?;
    let report = cfg.execute()?;
    println!("{}: {} = {:.12}", path, report.meta.functional, report.value);
    println!("density has {} Fourier modes", report.density.v_coeff.len());
    Ok(())
}
