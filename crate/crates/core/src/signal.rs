//! Sample buffers tagged with their rate, and a raw I/Q dump format.
//!
//! Dump format: a `.iq` file of little-endian `f32` pairs `(I, Q)`, one pair
//! per sample (`Q = 0` for real signals), plus a sidecar `.iq.txt` with
//! `key = value` lines:
//!
//! ```text
//! rate_hz = 48000
//! samples_per_symbol = 16
//! domain = passband
//! samples = 161280
//! format = f32le-iq
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Baseband,
    Passband,
}

impl Domain {
    pub fn name(self) -> &'static str {
        match self {
            Domain::Baseband => "baseband",
            Domain::Passband => "passband",
        }
    }
}

/// Sample vector plus its sampling bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal<T> {
    pub samples: Vec<T>,
    pub rate_hz: f64,
    pub samples_per_symbol: usize,
    pub domain: Domain,
}

/// Real passband samples.
pub type PassbandSignal = SampledSignal<f64>;
/// Complex envelope samples.
pub type BasebandSignal = SampledSignal<Complex64>;

impl<T> SampledSignal<T> {
    pub fn new(samples: Vec<T>, rate_hz: f64, samples_per_symbol: usize, domain: Domain) -> Self {
        debug_assert!(rate_hz > 0.0);
        Self {
            samples,
            rate_hz,
            samples_per_symbol,
            domain,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / self.rate_hz
    }

    pub fn symbol_rate(&self) -> f64 {
        self.rate_hz / self.samples_per_symbol as f64
    }

    /// Same bookkeeping, new samples.
    pub fn with_samples<U>(&self, samples: Vec<U>) -> SampledSignal<U> {
        SampledSignal {
            samples,
            rate_hz: self.rate_hz,
            samples_per_symbol: self.samples_per_symbol,
            domain: self.domain,
        }
    }
}

/// Anything that can be written as an I/Q pair.
pub trait IqSample: Copy {
    fn iq(self) -> (f64, f64);
}

impl IqSample for f64 {
    fn iq(self) -> (f64, f64) {
        (self, 0.0)
    }
}

impl IqSample for Complex64 {
    fn iq(self) -> (f64, f64) {
        (self.re, self.im)
    }
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".txt");
    PathBuf::from(s)
}

/// Writes `signal` to `path` and its header to `path` + `.txt`.
pub fn dump_iq<T: IqSample>(signal: &SampledSignal<T>, path: &Path) -> Result<()> {
    let mut bytes = Vec::with_capacity(signal.len() * 8);
    for s in &signal.samples {
        let (i, q) = s.iq();
        bytes.extend_from_slice(&(i as f32).to_le_bytes());
        bytes.extend_from_slice(&(q as f32).to_le_bytes());
    }
    fs::write(path, &bytes).map_err(|e| Error::io(path, e))?;

    let header = sidecar_path(path);
    let mut f = fs::File::create(&header).map_err(|e| Error::io(&header, e))?;
    writeln!(
        f,
        "rate_hz = {}\nsamples_per_symbol = {}\ndomain = {}\nsamples = {}\nformat = f32le-iq",
        signal.rate_hz,
        signal.samples_per_symbol,
        signal.domain.name(),
        signal.len()
    )
    .map_err(|e| Error::io(&header, e))?;
    Ok(())
}

/// Reads a dump written by [`dump_iq`] back as complex samples.
pub fn read_iq(path: &Path) -> Result<BasebandSignal> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Degenerate(format!(
            "{}: size {} is not a whole number of I/Q pairs",
            path.display(),
            bytes.len()
        )));
    }
    let samples = bytes
        .chunks_exact(8)
        .map(|c| {
            let i = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let q = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Complex64::new(i as f64, q as f64)
        })
        .collect();

    let header = sidecar_path(path);
    let text = fs::read_to_string(&header).map_err(|e| Error::io(&header, e))?;
    let mut rate = None;
    let mut sps = None;
    let mut domain = Domain::Baseband;
    for (idx, line) in text.lines().enumerate() {
        let Some((k, v)) = line.split_once('=') else {
            continue;
        };
        let bad = |message: String| Error::Config {
            line: idx + 1,
            message,
        };
        match k.trim() {
            "rate_hz" => rate = Some(v.trim().parse::<f64>().map_err(|e| bad(e.to_string()))?),
            "samples_per_symbol" => {
                sps = Some(v.trim().parse::<usize>().map_err(|e| bad(e.to_string()))?)
            }
            "domain" => {
                domain = match v.trim() {
                    "passband" => Domain::Passband,
                    "baseband" => Domain::Baseband,
                    other => return Err(bad(format!("unknown domain '{other}'"))),
                }
            }
            _ => {}
        }
    }
    let missing = |k: &str| Error::Config {
        line: 0,
        message: format!("{}: missing {k}", header.display()),
    };
    Ok(SampledSignal::new(
        samples,
        rate.ok_or_else(|| missing("rate_hz"))?,
        sps.ok_or_else(|| missing("samples_per_symbol"))?,
        domain,
    ))
}
