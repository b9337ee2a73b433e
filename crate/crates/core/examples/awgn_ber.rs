//! BER with synchronisation handed to the receiver, against Q(sqrt(2 Eb/N0)).

use gcibc::harness::{run_sweep, ExperimentSpec, SyncMode};
use gcibc::preamble::PreambleFamily;

fn q(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

fn main() -> gcibc::Result<()> {
    let trials: usize = std::env::args().nth(1).map_or(20, |s| s.parse().expect("trials"));
    let spec = ExperimentSpec {
        families: vec![PreambleFamily::Golay],
        preamble_lengths: vec![64],
        ebn0_points: vec![0.0, 2.0, 4.0, 6.0, 8.0],
        trials_per_point: trials,
        random_fractional_delay: false,
        sync: SyncMode::Genie,
        ..Default::default()
    };
    println!("Eb/N0   measured BER   [95% interval]          theory");
    for row in run_sweep(&spec)? {
        let ebn0 = 10f64.powf(row.ebn0_db / 10.0);
        println!(
            "{:>4} dB  {:.4e}    [{:.3e}, {:.3e}]   {:.4e}",
            row.ebn0_db,
            row.ber,
            row.ber_lo,
            row.ber_hi,
            q((2.0 * ebn0).sqrt())
        );
    }
    Ok(())
}
