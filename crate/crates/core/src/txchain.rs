//! Transmitter: burst assembly, BPSK mapping, SRRC pulse shaping and
//! quadrature up-conversion.
//!
//! Payload bits come from a ChaCha8 generator seeded with the burst seed
//! (`rand_chacha::ChaCha8Rng::seed_from_u64`), one `bool` draw per bit, so a
//! given `(config, seed)` always produces the same burst.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dsp::phasors;
use crate::error::{Error, Result};
use crate::preamble::PreambleSequence;
use crate::signal::{BasebandSignal, Domain, PassbandSignal, SampledSignal};

/// Transmitter parameters. Defaults are the reference link settings:
/// 10 kHz carrier, 48 kHz sampling, 16 samples/symbol, SRRC roll-off 0.2
/// spanning ±8 symbols, 10 000 BPSK payload symbols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TxConfig {
    pub carrier_hz: f64,
    pub sample_rate_hz: f64,
    pub samples_per_symbol: usize,
    pub srrc_rolloff: f64,
    /// One-sided SRRC span in symbols.
    pub srrc_delay: usize,
    pub payload_symbols: usize,
    pub preamble_symbols: usize,
    pub modulation_order: usize,
}

impl Default for TxConfig {
    fn default() -> Self {
        Self {
            carrier_hz: 10_000.0,
            sample_rate_hz: 48_000.0,
            samples_per_symbol: 16,
            srrc_rolloff: 0.2,
            srrc_delay: 8,
            payload_symbols: 10_000,
            preamble_symbols: 64,
            modulation_order: 2,
        }
    }
}

impl TxConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz > 0.0) {
            return Err(Error::invalid("sample_rate_hz must be positive"));
        }
        if !(self.carrier_hz > 0.0) {
            return Err(Error::invalid("carrier_hz must be positive"));
        }
        if self.carrier_hz >= self.sample_rate_hz / 2.0 {
            return Err(Error::AboveNyquist {
                carrier_hz: self.carrier_hz,
                nyquist_hz: self.sample_rate_hz / 2.0,
            });
        }
        if self.samples_per_symbol < 2 || self.samples_per_symbol % 2 != 0 {
            return Err(Error::invalid(format!(
                "samples_per_symbol must be an even number >= 2, got {}",
                self.samples_per_symbol
            )));
        }
        if !(self.srrc_rolloff > 0.0 && self.srrc_rolloff < 1.0) {
            return Err(Error::invalid(format!(
                "srrc_rolloff must lie in (0, 1), got {}",
                self.srrc_rolloff
            )));
        }
        if self.srrc_delay < 1 {
            return Err(Error::invalid("srrc_delay must be >= 1"));
        }
        if self.modulation_order != 2 {
            return Err(Error::invalid(format!(
                "only BPSK (modulation_order = 2) is supported, got {}",
                self.modulation_order
            )));
        }
        Ok(())
    }

    pub fn symbol_rate(&self) -> f64 {
        self.sample_rate_hz / self.samples_per_symbol as f64
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.modulation_order.trailing_zeros() as usize
    }

    /// Delay of one SRRC filter in samples.
    pub fn filter_delay_samples(&self) -> usize {
        self.srrc_delay * self.samples_per_symbol
    }

    pub fn srrc_taps(&self) -> Vec<f64> {
        srrc_taps(self.srrc_rolloff, self.srrc_delay, self.samples_per_symbol)
    }
}

/// One burst: preamble symbols followed by BPSK payload symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct BurstFrame {
    pub preamble: Vec<Complex64>,
    pub payload_bits: Vec<u8>,
    pub mapped_symbols: Vec<Complex64>,
}

impl BurstFrame {
    pub fn len(&self) -> usize {
        self.mapped_symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapped_symbols.is_empty()
    }

    pub fn payload_symbols(&self) -> &[Complex64] {
        &self.mapped_symbols[self.preamble.len()..]
    }
}

/// 0 → +1, 1 → −1. Any nonzero input byte counts as a one.
pub fn bpsk_map(bits: &[u8]) -> Vec<Complex64> {
    bits.iter()
        .map(|&b| Complex64::new(if b == 0 { 1.0 } else { -1.0 }, 0.0))
        .collect()
}

pub fn random_bits(count: usize, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.random::<bool>() as u8).collect()
}

pub fn build_burst(cfg: &TxConfig, preamble: &PreambleSequence, seed: u64) -> Result<BurstFrame> {
    if preamble.len() != cfg.preamble_symbols {
        return Err(Error::LengthMismatch {
            expected: cfg.preamble_symbols,
            actual: preamble.len(),
        });
    }
    let bits = random_bits(cfg.payload_symbols * cfg.bits_per_symbol(), seed);
    let mut mapped = preamble.elements().to_vec();
    mapped.extend(bpsk_map(&bits));
    Ok(BurstFrame {
        preamble: preamble.elements().to_vec(),
        payload_bits: bits,
        mapped_symbols: mapped,
    })
}

/// Square-root raised-cosine taps, `2·delay·sps + 1` long, unit energy.
pub fn srrc_taps(rolloff: f64, delay: usize, samples_per_symbol: usize) -> Vec<f64> {
    let r = rolloff;
    let sps = samples_per_symbol as f64;
    let half = (delay * samples_per_symbol) as isize;
    let mut taps: Vec<f64> = (-half..=half)
        .map(|i| {
            let t = i as f64 / sps;
            if i == 0 {
                1.0 - r + 4.0 * r / PI
            } else if ((4.0 * r * t).abs() - 1.0).abs() < 1e-9 {
                r / 2f64.sqrt()
                    * ((1.0 + 2.0 / PI) * (PI / (4.0 * r)).sin()
                        + (1.0 - 2.0 / PI) * (PI / (4.0 * r)).cos())
            } else {
                ((PI * t * (1.0 - r)).sin() + 4.0 * r * t * (PI * t * (1.0 + r)).cos())
                    / (PI * t * (1.0 - (4.0 * r * t).powi(2)))
            }
        })
        .collect();
    let energy: f64 = taps.iter().map(|t| t * t).sum();
    let scale = energy.sqrt().recip();
    taps.iter_mut().for_each(|t| *t *= scale);
    // Force exact symmetry.
    let n = taps.len();
    for i in 0..n / 2 {
        let avg = 0.5 * (taps[i] + taps[n - 1 - i]);
        taps[i] = avg;
        taps[n - 1 - i] = avg;
    }
    taps
}

/// Zero-insertion upsampling followed by SRRC filtering, full tails kept.
///
/// Output length is `symbols·sps + taps - 1`; symbol `k` peaks at sample
/// `k·sps + delay·sps`.
pub fn upsample_and_shape(symbols: &[Complex64], cfg: &TxConfig) -> BasebandSignal {
    let taps = cfg.srrc_taps();
    let sps = cfg.samples_per_symbol;
    let len = if symbols.is_empty() {
        0
    } else {
        symbols.len() * sps + taps.len() - 1
    };
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for (k, &s) in symbols.iter().enumerate() {
        if s.re == 0.0 && s.im == 0.0 {
            continue;
        }
        let base = k * sps;
        for (o, &t) in out[base..base + taps.len()].iter_mut().zip(&taps) {
            *o += s * t;
        }
    }
    SampledSignal::new(out, cfg.sample_rate_hz, sps, Domain::Baseband)
}

pub fn shape_frame(frame: &BurstFrame, cfg: &TxConfig) -> BasebandSignal {
    upsample_and_shape(&frame.mapped_symbols, cfg)
}

/// `s[n] = Re{x[n]}·cos(2π f_c n T) − Im{x[n]}·sin(2π f_c n T)`.
pub fn upconvert(x: &BasebandSignal, cfg: &TxConfig) -> Result<PassbandSignal> {
    if cfg.carrier_hz >= x.rate_hz / 2.0 {
        return Err(Error::AboveNyquist {
            carrier_hz: cfg.carrier_hz,
            nyquist_hz: x.rate_hz / 2.0,
        });
    }
    let samples = x
        .samples
        .iter()
        .zip(phasors(cfg.carrier_hz, 0, x.len(), x.rate_hz, 0.0, 1.0))
        .map(|(v, p)| v.re * p.re - v.im * p.im)
        .collect();
    Ok(SampledSignal::new(
        samples,
        x.rate_hz,
        x.samples_per_symbol,
        Domain::Passband,
    ))
}

/// Burst frame through shaping and up-conversion in one go.
pub fn transmit(frame: &BurstFrame, cfg: &TxConfig) -> Result<PassbandSignal> {
    cfg.validate()?;
    upconvert(&shape_frame(frame, cfg), cfg)
}
