//! Writes the passband burst, the received passband and the matched-filter
//! output as f32 I/Q files with text headers, then reads one back.

use std::path::PathBuf;

use gcibc::harness::{ExperimentSpec, TrialContext};
use gcibc::preamble::PreambleFamily;
use gcibc::signal::{dump_iq, read_iq};
use gcibc::channel::apply_channel;
use gcibc::txchain::{build_burst, transmit};

fn main() -> gcibc::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "dump-out".into()));
    std::fs::create_dir_all(&out).map_err(|e| gcibc::Error::io(&out, e))?;
    let spec = ExperimentSpec {
        payload_symbols: 500,
        ..Default::default()
    };
    let ctx = TrialContext::new(&spec, PreambleFamily::ZadoffChu, 64)?;
    let frame = build_burst(&ctx.tx, &ctx.preamble, 8)?;
    let s = transmit(&frame, &ctx.tx)?;
    let imp = ctx.draw_impairments(&spec, 10.0, 8);
    let r = apply_channel(&s, &imp, &ctx.tx)?;
    let y = ctx.receiver.matched_filter(&r)?;

    dump_iq(&s, &out.join("tx_passband.iq"))?;
    dump_iq(&r, &out.join("rx_passband.iq"))?;
    dump_iq(&y, &out.join("rx_baseband.iq"))?;
    let back = read_iq(&out.join("rx_baseband.iq"))?;
    println!(
        "tx {} samples @ {} Hz, rx {} samples, baseband {} samples @ {} Hz (read back {})",
        s.len(),
        s.rate_hz,
        r.len(),
        y.len(),
        y.rate_hz,
        back.len()
    );
    println!("impairments: {imp:?}");
    Ok(())
}
