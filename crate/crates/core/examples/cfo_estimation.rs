//! Coarse grid search plus parabolic refinement of the carrier offset.
//!
//! `cargo run --release --example cfo_estimation -- [ebn0_db] [trials]`

use gcibc::harness::{trial_seed, ExperimentSpec, TrialContext};
use gcibc::preamble::PreambleFamily;

fn main() -> gcibc::Result<()> {
    let mut args = std::env::args().skip(1);
    let ebn0: f64 = args.next().map_or(8.0, |s| s.parse().expect("ebn0_db"));
    let trials: usize = args.next().map_or(100, |s| s.parse().expect("trials"));
    let spec = ExperimentSpec {
        payload_symbols: 100,
        ..Default::default()
    };
    let step = spec.rx_config().cfo_grid.step();
    println!("true offset {} Hz, grid step {step} Hz, Eb/N0 {ebn0} dB", spec.cfo_hz);
    for family in PreambleFamily::ALL {
        let ctx = TrialContext::new(&spec, family, 64)?;
        let (mut hits, mut sq, mut coarse_sq) = (0, 0.0, 0.0);
        for t in 0..trials {
            let (o, est) = ctx.run_trial(&spec, ebn0, trial_seed(spec.master_seed, family, 64, 0, t))?;
            let est = est.expect("estimated sync");
            hits += usize::from(o.cfo_error_hz.abs() <= step);
            sq += o.cfo_error_hz.powi(2);
            coarse_sq += (est.f_coarse_hz - spec.cfo_hz).powi(2);
        }
        let n = trials as f64;
        println!(
            "{family:<6} within one step {hits}/{trials}  rmse coarse {:.3} Hz  fine {:.3} Hz",
            (coarse_sq / n).sqrt(),
            (sq / n).sqrt()
        );
    }
    Ok(())
}
