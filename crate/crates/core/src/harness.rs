//! Monte-Carlo experiments over preamble family, preamble length and Eb/N0.
//!
//! Every trial draws its own payload, channel realisation and noise from
//! seeds derived from `(master_seed, family, length, Eb/N0 index, trial)`, so
//! results do not depend on scheduling. Rows come back ordered by
//! `(family, length, Eb/N0)` exactly as listed in the spec.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{apply_channel, ChannelImpairments};
use crate::error::{Error, Result};
use crate::preamble::{PreambleFamily, PreambleSequence};
use crate::rxsync::{bpsk_decide, CfoGrid, Receiver, RxConfig, SyncEstimate};
use crate::txchain::{build_burst, transmit, TxConfig};

/// How the receiver obtains its synchronisation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SyncMode {
    /// Full three-step estimation.
    Estimated,
    /// Channel truth handed to the receiver (AWGN reference runs).
    Genie,
}

/// A sweep over families, preamble lengths and Eb/N0 points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub families: Vec<PreambleFamily>,
    pub preamble_lengths: Vec<usize>,
    pub ebn0_points: Vec<f64>,
    pub trials_per_point: usize,
    pub payload_symbols: usize,
    /// Carrier offset injected in every trial, Hz.
    pub cfo_hz: f64,
    /// Largest offset the receiver grid must cover; the grid spans twice this.
    pub max_cfo_hz: f64,
    /// Draw the carrier phase uniformly from `[-π, π)`; otherwise `phase_rad`.
    pub random_phase: bool,
    pub phase_rad: f64,
    /// Integer delay drawn uniformly from `delay_min..=delay_max` receiver samples.
    pub delay_min: usize,
    pub delay_max: usize,
    /// Draw the fractional delay uniformly from `(-0.5, 0.5)`; otherwise zero.
    pub random_fractional_delay: bool,
    pub cazac_k: i64,
    pub zc_root: i64,
    pub wiener_length: usize,
    pub sync: SyncMode,
    pub master_seed: u64,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            families: PreambleFamily::ALL.to_vec(),
            preamble_lengths: vec![64, 256],
            ebn0_points: vec![2.0, 5.0, 8.0, 11.0, 14.0],
            trials_per_point: 500,
            payload_symbols: 10_000,
            cfo_hz: 30.0,
            max_cfo_hz: 30.0,
            random_phase: true,
            phase_rad: 0.0,
            delay_min: 1,
            delay_max: 200,
            random_fractional_delay: true,
            cazac_k: 1,
            zc_root: 1,
            wiener_length: 11,
            sync: SyncMode::Estimated,
            master_seed: 1,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.families.is_empty() || self.preamble_lengths.is_empty() || self.ebn0_points.is_empty() {
            return Err(Error::invalid("families, preamble_lengths and ebn0_points must be non-empty"));
        }
        if self.trials_per_point == 0 {
            return Err(Error::invalid("trials_per_point must be >= 1"));
        }
        if self.delay_min > self.delay_max {
            return Err(Error::invalid("delay_min must not exceed delay_max"));
        }
        if self.delay_min == 0 && self.random_fractional_delay {
            return Err(Error::invalid(
                "delay_min must be >= 1 when the fractional delay is randomised",
            ));
        }
        if self.ebn0_points.iter().any(|e| e.is_nan()) {
            return Err(Error::invalid("ebn0_points must be numbers"));
        }
        if self.cfo_hz.abs() > self.max_cfo_hz {
            return Err(Error::invalid(format!(
                "cfo_hz {} exceeds max_cfo_hz {}",
                self.cfo_hz, self.max_cfo_hz
            )));
        }
        for &len in &self.preamble_lengths {
            self.tx_config(len).validate()?;
            self.rx_config().validate(&self.tx_config(len))?;
        }
        Ok(())
    }

    /// Transmitter settings for one preamble length.
    pub fn tx_config(&self, preamble_len: usize) -> TxConfig {
        TxConfig {
            preamble_symbols: preamble_len,
            payload_symbols: self.payload_symbols,
            ..TxConfig::default()
        }
    }

    pub fn rx_config(&self) -> RxConfig {
        RxConfig {
            wiener_length: self.wiener_length,
            cfo_grid: CfoGrid::for_max_offset(self.max_cfo_hz),
            search_window: self.delay_max + 64,
            ..RxConfig::default()
        }
    }

    pub fn root_for(&self, family: PreambleFamily) -> i64 {
        match family {
            PreambleFamily::Cazac => self.cazac_k,
            PreambleFamily::Golay => 1,
            PreambleFamily::ZadoffChu => self.zc_root,
        }
    }

    /// Number of sweep points.
    pub fn point_count(&self) -> usize {
        self.families.len() * self.preamble_lengths.len() * self.ebn0_points.len()
    }
}

impl ExperimentSpec {
    /// Parses a TOML experiment file. Missing keys take their defaults;
    /// unknown keys are rejected.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| config_error(text, &e))?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Renders the spec as TOML (every key present).
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("spec is always representable as TOML")
    }

    /// Applies `key=value` overrides. Values use TOML syntax; anything that
    /// does not parse is taken as a bare string.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let mut table = toml::Table::try_from(self).expect("spec serialises to a table");
        for item in overrides {
            let item = item.as_ref();
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("override `{item}` is not key=value")))?;
            let key = key.trim();
            if !table.contains_key(key) {
                return Err(Error::invalid(format!("unknown override key `{key}`")));
            }
            let value = value.trim();
            let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
                .ok()
                .and_then(|mut t| t.remove("v"))
                .unwrap_or_else(|| toml::Value::String(value.to_string()));
            table.insert(key.to_string(), parsed);
        }
        table
            .try_into()
            .map_err(|e: toml::de::Error| Error::invalid(format!("override: {}", e.message())))
    }
}

fn config_error(text: &str, e: &toml::de::Error) -> Error {
    let line = e
        .span()
        .map(|span| text[..span.start.min(text.len())].matches('\n').count() + 1)
        .unwrap_or(0);
    Error::Config {
        line,
        message: e.message().to_string(),
    }
}

/// SplitMix64 finaliser, used to derive independent per-trial seeds.
pub fn mix_seed(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial` at sweep coordinates `(family, len, ebn0_index)`.
pub fn trial_seed(master: u64, family: PreambleFamily, len: usize, ebn0_index: usize, trial: usize) -> u64 {
    let family_id = match family {
        PreambleFamily::Cazac => 1u64,
        PreambleFamily::Golay => 2,
        PreambleFamily::ZadoffChu => 3,
    };
    [family_id, len as u64, ebn0_index as u64, trial as u64]
        .iter()
        .fold(mix_seed(master), |acc, v| mix_seed(acc ^ v))
}

/// Probability-of-error metric on power-normalised sequences:
/// `Pb = mean_n (c[n]/√P_tx − Re ĉ[n]/√P_rx)²`.
pub fn compute_pb(c_tx: &[Complex64], c_hat: &[Complex64]) -> Result<f64> {
    if c_tx.len() != c_hat.len() {
        return Err(Error::LengthMismatch {
            expected: c_tx.len(),
            actual: c_hat.len(),
        });
    }
    if c_tx.is_empty() {
        return Err(Error::Degenerate("Pb of an empty sequence".into()));
    }
    let n = c_tx.len() as f64;
    let p_tx = c_tx.iter().map(|c| c.re * c.re).sum::<f64>() / n;
    let p_rx = c_hat.iter().map(|c| c.re * c.re).sum::<f64>() / n;
    if p_tx == 0.0 || p_rx == 0.0 {
        return Err(Error::Degenerate("zero-power sequence in Pb".into()));
    }
    let (s_tx, s_rx) = (p_tx.sqrt(), p_rx.sqrt());
    Ok(c_tx
        .iter()
        .zip(c_hat)
        .map(|(a, b)| (a.re / s_tx - b.re / s_rx).powi(2))
        .sum::<f64>()
        / n)
}

pub fn bit_errors(tx_bits: &[u8], decided: &[u8]) -> Result<usize> {
    if tx_bits.len() != decided.len() {
        return Err(Error::LengthMismatch {
            expected: tx_bits.len(),
            actual: decided.len(),
        });
    }
    Ok(tx_bits
        .iter()
        .zip(decided)
        .filter(|(a, b)| (**a != 0) != (**b != 0))
        .count())
}

/// Hamming distance over length.
pub fn compute_ber(tx_bits: &[u8], decided: &[u8]) -> Result<f64> {
    let errors = bit_errors(tx_bits, decided)?;
    if tx_bits.is_empty() {
        return Err(Error::Degenerate("BER of an empty bit vector".into()));
    }
    Ok(errors as f64 / tx_bits.len() as f64)
}

/// Result of a single burst.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub pb: f64,
    pub bit_errors: usize,
    pub bits: usize,
    pub cfo_error_hz: f64,
    pub timing_hit: bool,
    pub corr_peak: f64,
    pub impairments: ChannelImpairments,
}

/// Everything needed to run trials at one `(family, length)`.
#[derive(Debug, Clone)]
pub struct TrialContext {
    pub family: PreambleFamily,
    pub preamble: PreambleSequence,
    pub tx: TxConfig,
    pub receiver: Receiver,
}

impl TrialContext {
    pub fn new(spec: &ExperimentSpec, family: PreambleFamily, len: usize) -> Result<Self> {
        let preamble = family.generate(len, spec.root_for(family))?;
        let tx = spec.tx_config(len);
        let receiver = Receiver::new(&tx, &spec.rx_config(), &preamble)?;
        Ok(Self {
            family,
            preamble,
            tx,
            receiver,
        })
    }

    /// Draws the channel realisation for a trial seed.
    pub fn draw_impairments(&self, spec: &ExperimentSpec, ebn0_db: f64, seed: u64) -> ChannelImpairments {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed ^ 0xC4A2));
        let phase_rad = if spec.random_phase {
            rng.random_range(-PI..PI)
        } else {
            spec.phase_rad
        };
        let delay_samples = rng.random_range(spec.delay_min..=spec.delay_max);
        let fractional_delay = if spec.random_fractional_delay {
            // open interval (-0.5, 0.5)
            loop {
                let e: f64 = rng.random_range(-0.5..0.5);
                if e != -0.5 {
                    break e;
                }
            }
        } else {
            0.0
        };
        ChannelImpairments {
            cfo_hz: spec.cfo_hz,
            phase_rad,
            delay_samples,
            fractional_delay,
            ebn0_db,
            noise_seed: mix_seed(seed ^ 0x0153),
        }
    }

    /// Runs one burst end to end.
    pub fn run_trial(&self, spec: &ExperimentSpec, ebn0_db: f64, seed: u64) -> Result<(TrialOutcome, Option<SyncEstimate>)> {
        let frame = build_burst(&self.tx, &self.preamble, mix_seed(seed ^ 0x7A11))?;
        let imp = self.draw_impairments(spec, ebn0_db, seed);
        let s = transmit(&frame, &self.tx)?;
        let s_rx = apply_channel(&s, &imp, &self.tx)?;
        let payload = frame.payload_symbols();

        let (c_hat, est) = match spec.sync {
            SyncMode::Estimated => {
                let est = self.receiver.receive(&s_rx, self.tx.payload_symbols)?;
                (est.recovered_symbols.clone(), Some(est))
            }
            SyncMode::Genie => (
                self.receiver.receive_genie(&s_rx, &imp, self.tx.payload_symbols)?,
                None,
            ),
        };
        let decided = bpsk_decide(&c_hat);
        let errors = bit_errors(&frame.payload_bits, &decided)?;
        let pb = if payload.is_empty() { 0.0 } else { compute_pb(payload, &c_hat)? };
        let outcome = TrialOutcome {
            pb,
            bit_errors: errors,
            bits: frame.payload_bits.len(),
            cfo_error_hz: est.as_ref().map_or(0.0, |e| e.f_hat_hz - imp.cfo_hz),
            timing_hit: est.as_ref().is_none_or(|e| e.mu_hat == imp.delay_samples),
            corr_peak: est.as_ref().map_or(1.0, |e| e.corr_peak),
            impairments: imp,
        };
        Ok((outcome, est))
    }
}

/// Aggregated statistics of one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub family: PreambleFamily,
    pub preamble_len: usize,
    pub ebn0_db: f64,
    /// Mean of the per-burst Pb.
    pub pb: f64,
    /// Half-width of the 95% normal confidence interval on `pb`.
    pub pb_ci95: f64,
    pub pb_median: f64,
    pub ber: f64,
    /// 95% Wilson interval on `ber`.
    pub ber_lo: f64,
    pub ber_hi: f64,
    pub bit_errors: u64,
    pub bits: u64,
    pub cfo_rmse_hz: f64,
    pub timing_hit_rate: f64,
    pub corr_peak: f64,
    pub trials: usize,
    pub failed_trials: usize,
    pub seed: u64,
}

pub const CSV_HEADER: [&str; 17] = [
    "family",
    "preamble_len",
    "ebn0_db",
    "pb",
    "pb_ci95",
    "pb_median",
    "ber",
    "ber_lo",
    "ber_hi",
    "bit_errors",
    "bits",
    "cfo_rmse_hz",
    "timing_hit_rate",
    "corr_peak",
    "trials",
    "failed_trials",
    "seed",
];

/// 95% Wilson score interval for `k` successes out of `n`.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let denom = 1.0 + z * z / n_f;
    let center = (p + z * z / (2.0 * n_f)) / denom;
    let half = z * ((p * (1.0 - p) / n_f + z * z / (4.0 * n_f * n_f)).sqrt()) / denom;
    let lo = if k == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Folds per-trial outcomes into a result row. Failed trials count towards
/// `failed_trials` only.
pub fn aggregate(
    family: PreambleFamily,
    preamble_len: usize,
    ebn0_db: f64,
    seed: u64,
    outcomes: &[Result<TrialOutcome>],
) -> ResultRow {
    let ok: Vec<&TrialOutcome> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    let failed = outcomes.len() - ok.len();
    let n = ok.len() as f64;
    let mut pbs: Vec<f64> = ok.iter().map(|o| o.pb).collect();
    let pb_mean = pbs.iter().sum::<f64>() / n;
    let pb_var = if ok.len() > 1 {
        pbs.iter().map(|p| (p - pb_mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let bit_errors: u64 = ok.iter().map(|o| o.bit_errors as u64).sum();
    let bits: u64 = ok.iter().map(|o| o.bits as u64).sum();
    let (ber_lo, ber_hi) = wilson_interval(bit_errors, bits);
    ResultRow {
        family,
        preamble_len,
        ebn0_db,
        pb: pb_mean,
        pb_ci95: 1.96 * (pb_var / n).sqrt(),
        pb_median: median(&mut pbs),
        ber: if bits > 0 { bit_errors as f64 / bits as f64 } else { f64::NAN },
        ber_lo,
        ber_hi,
        bit_errors,
        bits,
        cfo_rmse_hz: (ok.iter().map(|o| o.cfo_error_hz.powi(2)).sum::<f64>() / n).sqrt(),
        timing_hit_rate: ok.iter().filter(|o| o.timing_hit).count() as f64 / n,
        corr_peak: ok.iter().map(|o| o.corr_peak).sum::<f64>() / n,
        trials: outcomes.len(),
        failed_trials: failed,
        seed,
    }
}

/// Runs every `(family, length, Eb/N0)` point of `spec`.
///
/// Trial failures never abort the sweep; they are counted in
/// [`ResultRow::failed_trials`].
pub fn run_sweep(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    run_sweep_with(spec, |_| {})
}

/// [`run_sweep`] with a callback invoked after each finished point.
pub fn run_sweep_with(spec: &ExperimentSpec, mut progress: impl FnMut(&ResultRow)) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let mut rows = Vec::with_capacity(spec.point_count());
    for &family in &spec.families {
        for &len in &spec.preamble_lengths {
            let ctx = TrialContext::new(spec, family, len)?;
            for (ei, &ebn0) in spec.ebn0_points.iter().enumerate() {
                let outcomes: Vec<Result<TrialOutcome>> = (0..spec.trials_per_point)
                    .into_par_iter()
                    .map(|t| {
                        let seed = trial_seed(spec.master_seed, family, len, ei, t);
                        ctx.run_trial(spec, ebn0, seed).map(|(o, _)| o)
                    })
                    .collect();
                for (t, o) in outcomes.iter().enumerate() {
                    if let Err(e) = o {
                        log::warn!("{family} L={len} Eb/N0={ebn0} trial {t} failed: {e}");
                    }
                }
                let row = aggregate(family, len, ebn0, spec.master_seed, &outcomes);
                progress(&row);
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes one row per sweep point under the documented header.
pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Degenerate("no result rows to write".into()));
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for row in rows {
        w.serialize(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<ResultRow>, _>>()
        .map_err(csv_err(path))
}

/// Long-format files for re-plotting: Pb against Eb/N0 (one series per family
/// and length) and Pb against preamble length (one series per family and
/// Eb/N0). Returns the written paths.
pub fn emit_figure_files(rows: &[ResultRow], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    let vs_ebn0 = dir.join("pb_vs_ebn0.csv");
    let mut w = csv::Writer::from_path(&vs_ebn0).map_err(csv_err(&vs_ebn0))?;
    w.write_record(["series", "family", "preamble_len", "ebn0_db", "pb", "pb_ci95"])
        .map_err(csv_err(&vs_ebn0))?;
    let mut sorted: Vec<&ResultRow> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        (a.family, a.preamble_len)
            .cmp(&(b.family, b.preamble_len))
            .then(a.ebn0_db.total_cmp(&b.ebn0_db))
    });
    for r in &sorted {
        w.write_record([
            format!("{}-L{}", r.family, r.preamble_len),
            r.family.to_string(),
            r.preamble_len.to_string(),
            r.ebn0_db.to_string(),
            r.pb.to_string(),
            r.pb_ci95.to_string(),
        ])
        .map_err(csv_err(&vs_ebn0))?;
    }
    w.flush().map_err(|e| Error::io(&vs_ebn0, e))?;
    written.push(vs_ebn0);

    let vs_len = dir.join("pb_vs_length.csv");
    let mut w = csv::Writer::from_path(&vs_len).map_err(csv_err(&vs_len))?;
    w.write_record(["series", "family", "ebn0_db", "preamble_len", "pb", "pb_ci95"])
        .map_err(csv_err(&vs_len))?;
    let mut groups: BTreeMap<(PreambleFamily, u64), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.family, r.ebn0_db.to_bits())).or_default().push(r);
    }
    let mut keys: Vec<_> = groups.keys().copied().collect();
    keys.sort_by(|a, b| a.0.cmp(&b.0).then(f64::from_bits(a.1).total_cmp(&f64::from_bits(b.1))));
    for key in keys {
        let mut series = groups[&key].clone();
        series.sort_by_key(|r| r.preamble_len);
        for r in series {
            w.write_record([
                format!("{}-{}dB", r.family, r.ebn0_db),
                r.family.to_string(),
                r.ebn0_db.to_string(),
                r.preamble_len.to_string(),
                r.pb.to_string(),
                r.pb_ci95.to_string(),
            ])
            .map_err(csv_err(&vs_len))?;
        }
    }
    w.flush().map_err(|e| Error::io(&vs_len, e))?;
    written.push(vs_len);
    Ok(written)
}
