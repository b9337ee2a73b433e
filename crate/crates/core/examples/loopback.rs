//! Full transmit / receive chain without impairments: every bit comes back.

use gcibc::channel::{apply_channel, ChannelImpairments};
use gcibc::harness::{compute_pb, ExperimentSpec, TrialContext};
use gcibc::preamble::PreambleFamily;
use gcibc::txchain::{build_burst, transmit};

fn main() -> gcibc::Result<()> {
    let spec = ExperimentSpec::default();
    for family in PreambleFamily::ALL {
        let ctx = TrialContext::new(&spec, family, 64)?;
        let frame = build_burst(&ctx.tx, &ctx.preamble, 1)?;
        let s = transmit(&frame, &ctx.tx)?;
        let r = apply_channel(&s, &ChannelImpairments::ideal(), &ctx.tx)?;
        let est = ctx.receiver.receive(&r, ctx.tx.payload_symbols)?;
        let errors = frame.payload_bits.iter().zip(&est.decided_bits).filter(|(a, b)| a != b).count();
        println!(
            "{family:<6} {} bits  {errors} errors  Pb {:.2e}  mu_hat {}  f_hat {:+.3} Hz",
            frame.payload_bits.len(),
            compute_pb(frame.payload_symbols(), &est.recovered_symbols)?,
            est.mu_hat,
            est.f_hat_hz
        );
    }
    Ok(())
}
