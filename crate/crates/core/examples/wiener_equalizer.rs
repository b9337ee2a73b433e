//! Wiener taps trained on the preamble, for a few fractional delays.

use gcibc::channel::{apply_channel, ChannelImpairments};
use gcibc::harness::{compute_pb, ExperimentSpec, TrialContext};
use gcibc::preamble::PreambleFamily;
use gcibc::txchain::{build_burst, transmit};

fn main() -> gcibc::Result<()> {
    let spec = ExperimentSpec {
        payload_symbols: 2000,
        ..Default::default()
    };
    let ctx = TrialContext::new(&spec, PreambleFamily::Golay, 64)?;
    let frame = build_burst(&ctx.tx, &ctx.preamble, 3)?;
    let s = transmit(&frame, &ctx.tx)?;
    for eps in [0.0, 0.25, -0.4] {
        for ebn0_db in [f64::INFINITY, 8.0] {
            let imp = ChannelImpairments {
                delay_samples: 50,
                fractional_delay: eps,
                ebn0_db,
                noise_seed: 1,
                ..ChannelImpairments::ideal()
            };
            let r = apply_channel(&s, &imp, &ctx.tx)?;
            let est = ctx.receiver.receive(&r, ctx.tx.payload_symbols)?;
            let taps: Vec<String> = est.wiener_w.iter().map(|w| format!("{:.3}", w.norm())).collect();
            println!(
                "eps {eps:+.2} Eb/N0 {ebn0_db:>4}  eps_hat {:+.3}  Pb {:.4}  |w| [{}]",
                est.epsilon_hat,
                compute_pb(frame.payload_symbols(), &est.recovered_symbols)?,
                taps.join(" ")
            );
        }
    }
    Ok(())
}
