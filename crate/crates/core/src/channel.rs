//! Impairment channel: timing offset, carrier mismatch, AWGN.
//!
//! Impairments are applied in a fixed order: delay, then carrier frequency and
//! phase offset, then noise. Delays are expressed in receiver-rate samples
//! (two per symbol) and converted to the passband rate internally.

use std::ops::{Add, Mul};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dsp::{fractional_delay_taps, hilbert, phasors};
use crate::error::{Error, Result};
use crate::signal::{Domain, PassbandSignal, SampledSignal};
use crate::txchain::TxConfig;

/// Receiver sampling: two samples per symbol.
pub const RX_SAMPLES_PER_SYMBOL: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelImpairments {
    /// Carrier frequency offset `f_c - f'_c` in Hz.
    pub cfo_hz: f64,
    /// Carrier phase offset in radians, `[-π, π)`.
    pub phase_rad: f64,
    /// Integer burst delay in receiver-rate samples.
    pub delay_samples: usize,
    /// Fractional delay in receiver-rate samples, `|ε| < 0.5`.
    pub fractional_delay: f64,
    /// `+inf` disables the noise.
    pub ebn0_db: f64,
    pub noise_seed: u64,
}

impl Default for ChannelImpairments {
    fn default() -> Self {
        Self {
            cfo_hz: 0.0,
            phase_rad: 0.0,
            delay_samples: 0,
            fractional_delay: 0.0,
            ebn0_db: f64::INFINITY,
            noise_seed: 0,
        }
    }
}

impl ChannelImpairments {
    /// No impairment and no noise.
    pub fn ideal() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fractional_delay.abs() < 0.5) {
            return Err(Error::invalid(format!(
                "fractional delay must satisfy |ε| < 0.5, got {}",
                self.fractional_delay
            )));
        }
        if self.delay_samples as f64 + self.fractional_delay < 0.0 {
            return Err(Error::invalid("total delay μ + ε must be non-negative"));
        }
        if self.ebn0_db.is_nan() || self.ebn0_db == f64::NEG_INFINITY {
            return Err(Error::invalid("ebn0_db must be finite or +inf"));
        }
        if !self.cfo_hz.is_finite() || !self.phase_rad.is_finite() {
            return Err(Error::invalid("cfo_hz and phase_rad must be finite"));
        }
        Ok(())
    }

    /// Total delay `(μ + ε)` in receiver samples, split at the passband rate
    /// into an integer number of samples and a remainder in `[-0.5, 0.5]`.
    pub fn passband_delay(&self, link: &TxConfig) -> (usize, f64) {
        let decim = (link.samples_per_symbol / RX_SAMPLES_PER_SYMBOL) as f64;
        let total = (self.delay_samples as f64 + self.fractional_delay) * decim;
        let whole = total.round().max(0.0);
        (whole as usize, total - whole)
    }
}

/// Delays `s` by `integer + frac` samples of its own rate.
///
/// The first `integer` output samples are zero; the output is `integer`
/// samples longer than the input. Non-zero `frac` is realised with a
/// 64-tap Kaiser-windowed sinc interpolator.
pub fn apply_delay<T>(s: &SampledSignal<T>, integer: usize, frac: f64) -> Result<SampledSignal<T>>
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
{
    if !(frac.abs() <= 0.5) {
        return Err(Error::invalid(format!("fractional delay {frac} outside [-0.5, 0.5]")));
    }
    let n_in = s.len();
    let mut out = vec![T::default(); n_in + integer];
    if frac == 0.0 {
        out[integer..].copy_from_slice(&s.samples);
    } else {
        let (offset, taps) = fractional_delay_taps(frac);
        let rev: Vec<f64> = taps.iter().rev().copied().collect();
        let last = taps.len() as isize - 1;
        for (n, o) in out.iter_mut().enumerate().skip(integer) {
            // y[n] = Σ_i taps[i] · x[n - integer - offset - i]
            let base = n as isize - integer as isize - offset;
            let lo = (base - last).max(0);
            let hi = base.min(n_in as isize - 1);
            if lo > hi {
                continue;
            }
            let (lo, hi) = (lo as usize, hi as usize);
            // taps index i = base - idx, walked in reverse order of idx
            let r0 = (last - (base - lo as isize)) as usize;
            let mut acc = T::default();
            for (x, &t) in s.samples[lo..=hi].iter().zip(&rev[r0..]) {
                acc = acc + *x * t;
            }
            *o = acc;
        }
    }
    Ok(s.with_samples(out))
}

/// Shifts the carrier of a passband signal by `cfo_hz` and rotates it by
/// `phase_rad`, so that a receiver tuned to the nominal carrier sees the
/// envelope multiplied by `exp(j(2π Δf n T + θ))`.
pub fn apply_cfo_phase(
    s: &PassbandSignal,
    cfo_hz: f64,
    phase_rad: f64,
    link: &TxConfig,
) -> Result<PassbandSignal> {
    if s.domain != Domain::Passband {
        return Err(Error::invalid("carrier offset needs a passband signal"));
    }
    let half_bw = 0.5 * (1.0 + link.srrc_rolloff) * link.symbol_rate();
    let lo = link.carrier_hz + cfo_hz - half_bw;
    let hi = link.carrier_hz + cfo_hz + half_bw;
    if lo <= 0.0 || hi >= s.rate_hz / 2.0 {
        return Err(Error::invalid(format!(
            "carrier offset {cfo_hz} Hz moves the band [{lo:.1}, {hi:.1}] Hz outside (0, {}) Hz",
            s.rate_hz / 2.0
        )));
    }
    if cfo_hz == 0.0 && phase_rad == 0.0 {
        return Ok(s.clone());
    }
    // Re{(x + jH{x})·e^{jφ}} = x·cos φ - H{x}·sin φ
    let h = hilbert(&s.samples);
    let rot = phasors(cfo_hz, 0, s.len(), s.rate_hz, phase_rad, 1.0);
    let samples = s
        .samples
        .iter()
        .zip(&h)
        .zip(&rot)
        .map(|((x, h), p)| x * p.re - h * p.im)
        .collect();
    Ok(s.with_samples(samples))
}

/// Energy per bit of a transmitted waveform carrying `symbols` symbols.
pub fn energy_per_bit(s: &[f64], symbols: usize, bits_per_symbol: usize) -> f64 {
    let energy: f64 = s.iter().map(|v| v * v).sum();
    energy / (symbols * bits_per_symbol).max(1) as f64
}

/// Per-sample noise standard deviation for a given `Eb` and `Eb/N0`:
/// `σ² = N0 / 2`.
pub fn noise_sigma(eb: f64, ebn0_db: f64) -> f64 {
    let n0 = eb / 10f64.powf(ebn0_db / 10.0);
    (n0 / 2.0).sqrt()
}

/// Adds white Gaussian noise with standard deviation `sigma`.
pub fn add_noise_sigma(s: &PassbandSignal, sigma: f64, seed: u64) -> PassbandSignal {
    if sigma == 0.0 {
        return s.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = s
        .samples
        .iter()
        .map(|v| {
            let g: f64 = StandardNormal.sample(&mut rng);
            v + sigma * g
        })
        .collect();
    s.with_samples(samples)
}

/// Adds AWGN at `ebn0_db`, with `Eb` measured from `s` itself over the
/// `preamble_symbols + payload_symbols` slots of `link`.
pub fn add_awgn(s: &PassbandSignal, ebn0_db: f64, link: &TxConfig, seed: u64) -> Result<PassbandSignal> {
    if ebn0_db.is_nan() || ebn0_db == f64::NEG_INFINITY {
        return Err(Error::invalid("ebn0_db must be finite or +inf"));
    }
    if ebn0_db == f64::INFINITY {
        return Ok(s.clone());
    }
    let eb = energy_per_bit(
        &s.samples,
        link.preamble_symbols + link.payload_symbols,
        link.bits_per_symbol(),
    );
    Ok(add_noise_sigma(s, noise_sigma(eb, ebn0_db), seed))
}

/// Runs the full impairment chain: delay, carrier offset, noise.
pub fn apply_channel(
    s: &PassbandSignal,
    imp: &ChannelImpairments,
    link: &TxConfig,
) -> Result<PassbandSignal> {
    imp.validate()?;
    let (whole, frac) = imp.passband_delay(link);
    let delayed = apply_delay(s, whole, frac)?;
    let rotated = apply_cfo_phase(&delayed, imp.cfo_hz, imp.phase_rad, link)?;
    if imp.ebn0_db == f64::INFINITY {
        return Ok(rotated);
    }
    // Eb comes from the transmitted waveform, before any impairment.
    let eb = energy_per_bit(
        &s.samples,
        link.preamble_symbols + link.payload_symbols,
        link.bits_per_symbol(),
    );
    Ok(add_noise_sigma(&rotated, noise_sigma(eb, imp.ebn0_db), imp.noise_seed))
}
