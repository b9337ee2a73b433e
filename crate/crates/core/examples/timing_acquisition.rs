//! Burst start detection against the true integer delay.

use gcibc::channel::apply_channel;
use gcibc::harness::{trial_seed, ExperimentSpec, TrialContext};
use gcibc::preamble::PreambleFamily;
use gcibc::txchain::{build_burst, transmit};

fn main() -> gcibc::Result<()> {
    let trials: usize = std::env::args().nth(1).map_or(100, |s| s.parse().expect("trials"));
    let spec = ExperimentSpec {
        payload_symbols: 100,
        random_fractional_delay: false,
        ..Default::default()
    };
    for family in PreambleFamily::ALL {
        let ctx = TrialContext::new(&spec, family, 64)?;
        let mut hits = 0;
        let mut peak = 0.0;
        for t in 0..trials {
            let seed = trial_seed(spec.master_seed, family, 64, 0, t);
            let imp = ctx.draw_impairments(&spec, 8.0, seed);
            let frame = build_burst(&ctx.tx, &ctx.preamble, seed)?;
            let r = apply_channel(&transmit(&frame, &ctx.tx)?, &imp, &ctx.tx)?;
            let est = ctx.receiver.receive(&r, ctx.tx.payload_symbols)?;
            hits += usize::from(est.mu_hat == imp.delay_samples);
            peak += est.corr_peak;
        }
        println!("{family:<6} exact mu_hat {hits}/{trials}  mean normalised peak {:.3}", peak / trials as f64);
    }

    // one correlation trace, coarse text plot around the peak
    let ctx = TrialContext::new(&spec, PreambleFamily::Golay, 64)?;
    let (o, est) = ctx.run_trial(&spec, 8.0, 99)?;
    let est = est.expect("estimated sync");
    let max = est.correlation_trace.iter().cloned().fold(0.0, f64::max);
    let mu = o.impairments.delay_samples;
    for n in mu.saturating_sub(6)..(mu + 7).min(est.correlation_trace.len()) {
        let bar = "#".repeat((40.0 * est.correlation_trace[n] / max) as usize);
        println!("{n:>4} {bar}");
    }
    Ok(())
}
