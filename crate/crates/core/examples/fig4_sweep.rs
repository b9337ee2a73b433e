//! Pb against Eb/N0. Takes a TOML spec (default `examples/fig4.toml`) and
//! optional `key=value` overrides, e.g. `trials_per_point=50`.
//!
//! `cargo run --release --example fig4_sweep -- examples/fig4.toml trials_per_point=50`

use std::path::PathBuf;

use gcibc::harness::{emit_csv, emit_figure_files, run_sweep_with, ExperimentSpec};

fn main() -> gcibc::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/fig4.toml")), PathBuf::from);
    let overrides: Vec<String> = args.collect();
    let spec = ExperimentSpec::load(&path)?.with_overrides(&overrides)?;
    let rows = run_sweep_with(&spec, |r| {
        println!(
            "{:<6} L={:<4} {:>5.1} dB  Pb {:.4} ± {:.4}  BER {:.4}",
            r.family.name(),
            r.preamble_len,
            r.ebn0_db,
            r.pb,
            r.pb_ci95,
            r.ber
        )
    })?;
    let out = PathBuf::from("fig4-out");
    std::fs::create_dir_all(&out).map_err(|e| gcibc::Error::io(&out, e))?;
    emit_csv(&rows, &out.join("results.csv"))?;
    emit_figure_files(&rows, &out)?;
    println!("wrote {}", out.display());
    Ok(())
}
