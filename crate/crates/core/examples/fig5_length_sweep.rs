//! Pb against preamble length at a fixed Eb/N0, printed as a table.
//!
//! `cargo run --release --example fig5_length_sweep -- [trials]`

use std::collections::BTreeMap;

use gcibc::harness::{run_sweep, ExperimentSpec};

fn main() -> gcibc::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/fig5.toml");
    let mut spec = ExperimentSpec::load(std::path::Path::new(path))?;
    spec.trials_per_point = std::env::args().nth(1).map_or(40, |s| s.parse().expect("trials"));
    let rows = run_sweep(&spec)?;
    let mut table: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for r in &rows {
        table.entry(r.preamble_len).or_default().push(format!("{:.3}±{:.3}", r.pb, r.pb_ci95));
    }
    let names: Vec<&str> = spec.families.iter().map(|f| f.name()).collect();
    println!("Eb/N0 {} dB, {} trials/point", spec.ebn0_points[0], spec.trials_per_point);
    println!("{:>5}  {}", "L", names.iter().map(|n| format!("{n:>13}")).collect::<String>());
    for (len, cells) in table {
        println!("{len:>5}  {}", cells.iter().map(|c| format!("{c:>13}")).collect::<String>());
    }
    Ok(())
}
