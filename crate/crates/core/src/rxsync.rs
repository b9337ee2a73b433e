//! Burst receiver: down-conversion, matched filtering, and three-step
//! synchronisation.
//!
//! 1. **Coarse CFO.** The likelihood `λ(f) = Σ_n e^{-j2πfnT} r[n] s*[n]` is
//!    evaluated on a uniform frequency grid against the shaped reference
//!    preamble; `f̂ = argmax |λ|` and `θ̂ = arg λ(f̂)`.
//! 2. **Fine CFO.** A parabola through the three grid energies around the
//!    peak gives the refined offset.
//! 3. **Timing and equalisation.** The counter-rotated signal is correlated
//!    with the reference to find the burst start `μ̂`, and a Wiener filter
//!    trained on the received preamble equalises the whole burst.
//!
//! Acquisition runs in two passes. The first pass scans every lag of the
//! search window against a thinned frequency grid (FFT correlation per trial
//! frequency) to find roughly where the preamble sits. The second pass
//! evaluates the likelihood at that lag for reference copies shifted by
//! whole passband samples, i.e. `s(t - εT)` on the fine grid, and keeps the
//! best `(ε, f)` pair. Steps 2 and 3 then follow as above.
//!
//! All receiver-rate indices are reported relative to the burst start: the
//! combined TX and RX filter delay is removed.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::channel::RX_SAMPLES_PER_SYMBOL;
use crate::dsp::{convolve, convolve_decimate, fast_fft_len, oscillator_phase, phasors};
use crate::error::{Error, Result};
use crate::preamble::PreambleSequence;
use crate::signal::{BasebandSignal, Domain, PassbandSignal, SampledSignal};
use crate::txchain::{upsample_and_shape, TxConfig};

/// Uniform grid of trial frequency offsets, in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CfoGrid {
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    pub n_points: usize,
}

impl CfoGrid {
    /// 65 points spanning twice the largest expected offset on each side.
    pub fn for_max_offset(max_cfo_hz: f64) -> Self {
        let span = 2.0 * max_cfo_hz.abs().max(1e-3);
        Self {
            f_min_hz: -span,
            f_max_hz: span,
            n_points: 65,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points < 3 {
            return Err(Error::invalid(format!(
                "CFO grid needs at least 3 points, got {}",
                self.n_points
            )));
        }
        if !(self.f_max_hz > self.f_min_hz) || !self.f_min_hz.is_finite() || !self.f_max_hz.is_finite() {
            return Err(Error::invalid("CFO grid must satisfy f_min < f_max"));
        }
        Ok(())
    }

    /// Grid spacing `f_res`.
    pub fn step(&self) -> f64 {
        (self.f_max_hz - self.f_min_hz) / (self.n_points - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.f_min_hz + i as f64 * self.step()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.point(i)).collect()
    }

    /// Index of the grid point closest to `f`.
    pub fn nearest(&self, f: f64) -> usize {
        let i = ((f - self.f_min_hz) / self.step()).round();
        i.clamp(0.0, (self.n_points - 1) as f64) as usize
    }
}

impl Default for CfoGrid {
    fn default() -> Self {
        Self::for_max_offset(30.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RxConfig {
    /// Receiver local oscillator `f'_c`.
    pub carrier_hz: f64,
    pub samples_per_symbol: usize,
    /// Wiener filter length `N_f`.
    pub wiener_length: usize,
    pub cfo_grid: CfoGrid,
    /// Burst start candidates `0..search_window` in receiver samples.
    pub search_window: usize,
    /// Diagonal loading of the Wiener autocorrelation, relative to `trace / N_f`.
    pub diagonal_loading: f64,
}

impl Default for RxConfig {
    fn default() -> Self {
        Self {
            carrier_hz: 10_000.0,
            samples_per_symbol: RX_SAMPLES_PER_SYMBOL,
            wiener_length: 11,
            cfo_grid: CfoGrid::default(),
            search_window: 320,
            diagonal_loading: 1e-6,
        }
    }
}

impl RxConfig {
    pub fn validate(&self, tx: &TxConfig) -> Result<()> {
        self.cfo_grid.validate()?;
        if self.samples_per_symbol != RX_SAMPLES_PER_SYMBOL {
            return Err(Error::invalid(format!(
                "receiver runs at {RX_SAMPLES_PER_SYMBOL} samples/symbol, got {}",
                self.samples_per_symbol
            )));
        }
        if tx.samples_per_symbol % self.samples_per_symbol != 0 {
            return Err(Error::invalid("TX oversampling must be a multiple of the RX rate"));
        }
        if self.wiener_length == 0 {
            return Err(Error::invalid("wiener_length must be >= 1"));
        }
        if self.search_window == 0 {
            return Err(Error::EmptySearchWindow);
        }
        if !(self.diagonal_loading >= 0.0) {
            return Err(Error::invalid("diagonal_loading must be >= 0"));
        }
        Ok(())
    }
}

/// `d = 2·s·e^{-j2πf'_c nT}`, SRRC matched filter, decimation to the
/// receiver rate. The factor 2 restores unit symbol amplitude.
pub fn downconvert_and_filter(s_rx: &PassbandSignal, rx: &RxConfig, taps: &[f64]) -> Result<BasebandSignal> {
    if s_rx.domain != Domain::Passband {
        return Err(Error::invalid("down-conversion needs a passband signal"));
    }
    if s_rx.samples_per_symbol % rx.samples_per_symbol != 0 {
        return Err(Error::invalid("TX oversampling must be a multiple of the RX rate"));
    }
    let decim = s_rx.samples_per_symbol / rx.samples_per_symbol;
    let lo = phasors(rx.carrier_hz, 0, s_rx.len(), s_rx.rate_hz, 0.0, -1.0);
    let d: Vec<Complex64> = s_rx.samples.iter().zip(&lo).map(|(&v, p)| p * (2.0 * v)).collect();
    let r = convolve_decimate(&d, taps, decim);
    Ok(SampledSignal::new(
        r,
        s_rx.rate_hz / decim as f64,
        rx.samples_per_symbol,
        Domain::Baseband,
    ))
}

/// Known preamble as the receiver expects to see it: TX shaping and RX
/// matched filtering applied, kept at the full sample rate so it can be
/// resampled at any whole-sample offset.
#[derive(Debug, Clone)]
pub struct ReferencePreamble {
    full_rate: Vec<Complex64>,
    decim: usize,
    /// Combined TX+RX filter delay at the full rate.
    group_delay: usize,
    /// Reference length at the receiver rate.
    len: usize,
}

impl ReferencePreamble {
    pub fn new(preamble: &[Complex64], tx: &TxConfig, rx_samples_per_symbol: usize) -> Self {
        let taps = tx.srrc_taps();
        let shaped = upsample_and_shape(preamble, tx);
        let full_rate = convolve(&shaped.samples, &taps);
        Self {
            full_rate,
            decim: tx.samples_per_symbol / rx_samples_per_symbol,
            group_delay: 2 * tx.filter_delay_samples(),
            len: preamble.len() * rx_samples_per_symbol,
        }
    }

    /// Reference length at the receiver rate.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Filter delay expressed in receiver samples.
    pub fn group_delay_rx(&self) -> usize {
        self.group_delay / self.decim
    }

    pub fn decimation(&self) -> usize {
        self.decim
    }

    /// Receiver-rate reference delayed by `shift` full-rate samples:
    /// element `k` is the ideal filtered preamble at `k·T_rx - shift·T`.
    pub fn shifted(&self, shift: isize) -> Vec<Complex64> {
        self.shifted_span(shift, 0, self.len)
    }

    /// Like [`shifted`](Self::shifted) but starting `lead` receiver samples
    /// early and `count` samples long.
    pub fn shifted_span(&self, shift: isize, lead: usize, count: usize) -> Vec<Complex64> {
        (0..count)
            .map(|k| {
                let idx = self.group_delay as isize + (k as isize - lead as isize) * self.decim as isize - shift;
                if idx >= 0 && (idx as usize) < self.full_rate.len() {
                    self.full_rate[idx as usize]
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect()
    }

    /// Receiver-rate reference aligned to the symbol grid.
    pub fn at_rx_rate(&self) -> Vec<Complex64> {
        self.shifted(0)
    }
}

/// Output of the coarse (grid) CFO step.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseCfo {
    pub f_hat_hz: f64,
    pub index: usize,
    pub theta_hat: f64,
    /// `|λ(f)|²` for every grid point.
    pub energies: Vec<f64>,
    pub lambda: Vec<Complex64>,
}

/// Grid-search maximum-likelihood CFO estimate.
///
/// `window` holds received samples whose first element has absolute index
/// `origin` at `rate_hz`; `reference` is aligned with it element by element.
pub fn coarse_cfo(
    window: &[Complex64],
    origin: usize,
    reference: &[Complex64],
    grid: &CfoGrid,
    rate_hz: f64,
) -> Result<CoarseCfo> {
    grid.validate()?;
    if window.len() != reference.len() {
        return Err(Error::LengthMismatch {
            expected: reference.len(),
            actual: window.len(),
        });
    }
    if window.is_empty() {
        return Err(Error::Degenerate("empty CFO estimation window".into()));
    }
    let table = PhasorTable::new(grid, origin, window.len(), rate_hz);
    Ok(table.likelihood(window, reference, 0, grid))
}

/// `e^{-j2π f (origin + k) T}` for every grid frequency and window offset.
struct PhasorTable {
    rows: Vec<Vec<Complex64>>,
}

impl PhasorTable {
    fn new(grid: &CfoGrid, origin: usize, len: usize, rate_hz: f64) -> Self {
        let rows = grid
            .points()
            .iter()
            .map(|&f| {
                phasors(f, origin, len, rate_hz, 0.0, -1.0)
            })
            .collect();
        Self { rows }
    }

    /// `window` and `reference` start `offset` samples into the table.
    fn likelihood(&self, window: &[Complex64], reference: &[Complex64], offset: usize, grid: &CfoGrid) -> CoarseCfo {
        let z: Vec<Complex64> = window.iter().zip(reference).map(|(r, p)| r * p.conj()).collect();
        let lambda: Vec<Complex64> = self
            .rows
            .iter()
            .map(|row| z.iter().zip(&row[offset..]).map(|(v, e)| v * e).sum())
            .collect();
        let energies: Vec<f64> = lambda.iter().map(|l| l.norm_sqr()).collect();
        let index = argmax(&energies);
        CoarseCfo {
            f_hat_hz: grid.point(index),
            index,
            theta_hat: lambda[index].arg(),
            energies,
            lambda,
        }
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FineCfo {
    pub f_hat_hz: f64,
    /// False when the peak sat on the grid edge and no interpolation was done.
    pub refined: bool,
}

/// Vertex of the parabola through the grid peak and its two neighbours:
/// `(m, offset, height)` with the vertex at `m + offset` grid steps. `None`
/// when the peak sits on the grid edge or the three points are collinear.
pub fn parabolic_peak(energies: &[f64]) -> Option<(usize, f64, f64)> {
    let m = argmax(energies);
    if m == 0 || m + 1 >= energies.len() {
        return None;
    }
    let (hm1, h0, hp1) = (energies[m - 1], energies[m], energies[m + 1]);
    let denom = 2.0 * hm1 - 4.0 * h0 + 2.0 * hp1;
    if denom == 0.0 || !denom.is_finite() {
        return None;
    }
    let offset = (hm1 - hp1) / denom;
    let height = h0 - (hm1 - hp1) * (hm1 - hp1) / (4.0 * denom);
    Some((m, offset, height))
}

/// Interpolated maximum of `|λ|²`, falling back to the grid maximum.
fn peak_height(energies: &[f64]) -> f64 {
    parabolic_peak(energies).map_or_else(|| energies[argmax(energies)], |(_, _, h)| h)
}

/// Parabolic refinement around the grid peak:
/// `f̂ = f_m + (h_{m-1} - h_{m+1}) / (2h_{m-1} - 4h_m + 2h_{m+1}) · f_res`.
pub fn fine_cfo(energies: &[f64], grid: &CfoGrid) -> Result<FineCfo> {
    grid.validate()?;
    if energies.len() != grid.n_points {
        return Err(Error::LengthMismatch {
            expected: grid.n_points,
            actual: energies.len(),
        });
    }
    Ok(match parabolic_peak(energies) {
        Some((m, offset, _)) => FineCfo {
            f_hat_hz: grid.point(m) + offset * grid.step(),
            refined: true,
        },
        None => FineCfo {
            f_hat_hz: grid.point(argmax(energies)),
            refined: false,
        },
    })
}

/// `y[n] = r[n] · e^{-j2π f̂ n T}`.
pub fn counter_rotate(r: &BasebandSignal, f_hat_hz: f64) -> BasebandSignal {
    if f_hat_hz == 0.0 {
        return r.clone();
    }
    let samples = r
        .samples
        .iter()
        .zip(phasors(f_hat_hz, 0, r.len(), r.rate_hz, 0.0, -1.0))
        .map(|(v, p)| v * p)
        .collect();
    r.with_samples(samples)
}

/// Sliding correlation `c[n] = Σ_k x[start + n + k] · conj(p[k])` for
/// `n in 0..count`, computed with one FFT pair.
#[derive(Clone)]
struct FftCorrelator {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    ref_spectrum_conj: Vec<Complex64>,
    ref_len: usize,
    count: usize,
}

impl FftCorrelator {
    fn new(reference: &[Complex64], count: usize) -> Self {
        let n = fast_fft_len(count + reference.len() - 1);
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        buf[..reference.len()].copy_from_slice(reference);
        fwd.process(&mut buf);
        let scale = 1.0 / n as f64;
        let ref_spectrum_conj = buf.iter().map(|v| v.conj() * scale).collect();
        Self {
            fwd,
            inv,
            ref_spectrum_conj,
            ref_len: reference.len(),
            count,
        }
    }

    /// `x` must already hold the segment starting at `start`; it is read up to
    /// `count + ref_len - 1` samples (zero beyond its end).
    fn correlate(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.ref_spectrum_conj.len();
        let take = (self.count + self.ref_len - 1).min(x.len());
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        buf[..take].copy_from_slice(&x[..take]);
        self.fwd.process(&mut buf);
        for (b, p) in buf.iter_mut().zip(&self.ref_spectrum_conj) {
            *b *= p;
        }
        self.inv.process(&mut buf);
        buf.truncate(self.count);
        buf
    }
}

impl std::fmt::Debug for FftCorrelator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftCorrelator")
            .field("fft_len", &self.ref_spectrum_conj.len())
            .field("count", &self.count)
            .finish()
    }
}

/// Output of the burst detector.
#[derive(Debug, Clone, PartialEq)]
pub struct BurstDetection {
    /// Estimated burst start, receiver samples after removing filter delay.
    pub mu_hat: usize,
    /// `|c[n]|` for every candidate start in the window.
    pub trace: Vec<f64>,
    /// Peak correlation divided by the reference energy.
    pub normalized_peak: f64,
}

/// `μ̂ = argmax_n |Σ_k y[n + k] p*[k]|` over `n in 0..window`.
///
/// `y` is at the receiver rate, `reference` is the aligned receiver-rate
/// preamble and `group_delay` the filter delay (in receiver samples) to strip
/// from the reported index.
pub fn detect_burst(
    y: &[Complex64],
    reference: &[Complex64],
    group_delay: usize,
    window: usize,
) -> Result<BurstDetection> {
    if reference.is_empty() {
        return Err(Error::Degenerate("empty reference preamble".into()));
    }
    let avail = y.len().saturating_sub(group_delay + reference.len() - 1);
    let count = window.min(avail);
    if count == 0 {
        return Err(Error::EmptySearchWindow);
    }
    let corr = FftCorrelator::new(reference, count).correlate(&y[group_delay..]);
    finish_detection(&corr, reference)
}

fn finish_detection(corr: &[Complex64], reference: &[Complex64]) -> Result<BurstDetection> {
    let trace: Vec<f64> = corr.iter().map(|c| c.norm()).collect();
    let mu_hat = argmax(&trace);
    let ref_energy: f64 = reference.iter().map(|p| p.norm_sqr()).sum();
    Ok(BurstDetection {
        mu_hat,
        normalized_peak: trace[mu_hat] / ref_energy.max(f64::MIN_POSITIVE),
        trace,
    })
}

/// Solved Wiener-Hopf system.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerSolution {
    pub taps: Vec<Complex64>,
    /// Autocorrelation matrix as solved (loading included).
    pub matrix: DMatrix<Complex64>,
    pub cross: DVector<Complex64>,
    /// Loading added to the diagonal.
    pub loading: f64,
    /// The unloaded matrix was not positive definite.
    pub singular: bool,
    /// Output decision delay in receiver samples (the centre tap).
    pub center: usize,
}

impl WienerSolution {
    /// `‖A w − a‖ / ‖a‖` for the system as solved.
    pub fn relative_residual(&self) -> f64 {
        let w = DVector::from_vec(self.taps.clone());
        let r = &self.matrix * w - &self.cross;
        r.norm() / self.cross.norm().max(f64::MIN_POSITIVE)
    }

    /// Centroid of `|w|` relative to the centre tap, in receiver samples.
    pub fn epsilon_hat(&self) -> f64 {
        let total: f64 = self.taps.iter().map(|w| w.norm()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let centroid: f64 = self
            .taps
            .iter()
            .enumerate()
            .map(|(l, w)| l as f64 * w.norm())
            .sum::<f64>()
            / total;
        centroid - self.center as f64
    }
}

fn sample_or_zero(y: &[Complex64], idx: isize) -> Complex64 {
    if idx >= 0 && (idx as usize) < y.len() {
        y[idx as usize]
    } else {
        Complex64::new(0.0, 0.0)
    }
}

/// Eigenvalue ratio below which the autocorrelation matrix counts as singular.
const SINGULAR_RCOND: f64 = 1e-12;

/// Wiener-Hopf solve `w = A⁻¹ a` on the received preamble.
///
/// The filter output `ĉ[n] = Σ_l w[l] · y[start + n + c − l]`, with
/// `c = (N_f − 1) / 2`, is trained to match `desired[n]`. Both statistics
/// come from the received preamble `y_p = y[start .. start + desired.len()]`
/// alone (zero outside): `A` is its biased Toeplitz autocorrelation and
/// `a[k] = mean_n desired[n] · conj(y_p[n + c − k])`.
pub fn wiener_solve(
    y: &[Complex64],
    start: usize,
    desired: &[Complex64],
    n_taps: usize,
    loading_rel: f64,
) -> Result<WienerSolution> {
    let m = desired.len();
    if n_taps == 0 {
        return Err(Error::invalid("Wiener filter needs at least one tap"));
    }
    if n_taps > m {
        return Err(Error::invalid(format!(
            "Wiener length {n_taps} exceeds preamble length {m} samples"
        )));
    }
    if start + m > y.len() {
        return Err(Error::LengthMismatch {
            expected: start + m,
            actual: y.len(),
        });
    }
    let seg = &y[start..start + m];
    let c = (n_taps - 1) / 2;
    // r(k) = (1/M) Σ_j seg[j + k] conj(seg[j])
    let acf: Vec<Complex64> = (0..n_taps)
        .map(|k| {
            seg[k..]
                .iter()
                .zip(seg)
                .map(|(a, b)| a * b.conj())
                .sum::<Complex64>()
                / m as f64
        })
        .collect();
    let mut matrix = DMatrix::from_fn(n_taps, n_taps, |k, l| {
        if k >= l {
            acf[k - l]
        } else {
            acf[l - k].conj()
        }
    });
    let cross = DVector::from_fn(n_taps, |k, _| {
        let base = c as isize - k as isize;
        desired
            .iter()
            .enumerate()
            .map(|(n, d)| d * sample_or_zero(seg, base + n as isize).conj())
            .sum::<Complex64>()
            / m as f64
    });
    let singular = matrix.clone().cholesky().is_none() || {
        let eig = matrix.clone().symmetric_eigenvalues();
        let max = eig.max();
        eig.min() <= SINGULAR_RCOND * max
    };
    let trace: f64 = (0..n_taps).map(|i| matrix[(i, i)].re).sum();
    let loading = (loading_rel * trace / n_taps as f64).max(f64::MIN_POSITIVE);
    for i in 0..n_taps {
        matrix[(i, i)] += Complex64::new(loading, 0.0);
    }
    let taps = match matrix.clone().cholesky() {
        Some(ch) => ch.solve(&cross),
        None => matrix
            .clone()
            .lu()
            .solve(&cross)
            .ok_or_else(|| Error::Degenerate("Wiener system is singular".into()))?,
    };
    if taps.iter().any(|w| !w.re.is_finite() || !w.im.is_finite()) {
        return Err(Error::Degenerate("Wiener solution is not finite".into()));
    }
    Ok(WienerSolution {
        taps: taps.iter().copied().collect(),
        matrix,
        cross,
        loading,
        singular,
        center: c,
    })
}

/// `ĉ[n] = Σ_l w[l] · y[start + n + c − l]` for `n in 0..count`.
pub fn wiener_apply(y: &[Complex64], start: usize, sol: &WienerSolution, count: usize) -> Vec<Complex64> {
    let c = sol.center as isize;
    (0..count)
        .map(|n| {
            let base = start as isize + n as isize + c;
            sol.taps
                .iter()
                .enumerate()
                .map(|(l, w)| w * sample_or_zero(y, base - l as isize))
                .sum()
        })
        .collect()
}

/// Equalised symbol-rate estimates: solve on the preamble then filter
/// `count_symbols` symbols starting at the burst start, keeping every
/// `rx_sps`-th output.
pub fn wiener_equalize(
    y: &[Complex64],
    reference: &[Complex64],
    start: usize,
    n_taps: usize,
    loading_rel: f64,
    rx_sps: usize,
    count_symbols: usize,
) -> Result<(WienerSolution, Vec<Complex64>)> {
    let sol = wiener_solve(y, start, reference, n_taps, loading_rel)?;
    let c_hat = wiener_apply(y, start, &sol, count_symbols * rx_sps);
    let symbols = c_hat.into_iter().step_by(rx_sps).collect();
    Ok((sol, symbols))
}

/// Re ≥ 0 → 0, otherwise 1. Ties go to 0.
pub fn bpsk_decide(c_hat: &[Complex64]) -> Vec<u8> {
    c_hat.iter().map(|c| u8::from(c.re < 0.0)).collect()
}

/// Everything the receiver estimated for one burst.
#[derive(Debug, Clone)]
pub struct SyncEstimate {
    pub f_hat_hz: f64,
    pub f_coarse_hz: f64,
    pub fine_refined: bool,
    pub theta_hat: f64,
    pub mu_hat: usize,
    /// Full-rate reference shift picked by the likelihood search.
    pub ml_shift: isize,
    pub epsilon_hat: f64,
    pub wiener_w: Vec<Complex64>,
    pub wiener_singular: bool,
    /// Symbol-rate estimates for the whole burst (preamble + payload).
    pub burst_symbols: Vec<Complex64>,
    /// Payload part of `burst_symbols`.
    pub recovered_symbols: Vec<Complex64>,
    pub decided_bits: Vec<u8>,
    pub cfo_grid: Vec<f64>,
    pub cfo_energies: Vec<f64>,
    pub correlation_trace: Vec<f64>,
    pub corr_peak: f64,
}

/// Burst receiver bound to one known preamble.
#[derive(Debug, Clone)]
pub struct Receiver {
    tx: TxConfig,
    rx: RxConfig,
    taps: Vec<f64>,
    reference: ReferencePreamble,
    aligned: Vec<Complex64>,
    /// Number of leading reference samples used by the likelihood (skips the
    /// zero-padded tail of short-prime sequences).
    active_len: usize,
    preamble_symbols: usize,
}

/// The second acquisition pass searches burst starts within at least this
/// many receiver samples of the first-pass estimate.
const ML_MARGIN: usize = 8;
/// Receiver samples before a hypothesised burst start that must be silent.
const ML_GUARD: usize = 4;
/// Full-rate step of the coarse shift scan in the second pass.
const ML_SHIFT_STEP: isize = 4;
/// Every n-th grid frequency is tried in the first acquisition pass.
const ACQUISITION_STRIDE: usize = 2;

impl Receiver {
    pub fn new(tx: &TxConfig, rx: &RxConfig, preamble: &PreambleSequence) -> Result<Self> {
        tx.validate()?;
        rx.validate(tx)?;
        if preamble.is_empty() {
            return Err(Error::Degenerate("empty preamble".into()));
        }
        if rx.wiener_length > preamble.len() * rx.samples_per_symbol {
            return Err(Error::invalid(format!(
                "Wiener length {} exceeds preamble length {} samples",
                rx.wiener_length,
                preamble.len() * rx.samples_per_symbol
            )));
        }
        let reference = ReferencePreamble::new(preamble.elements(), tx, rx.samples_per_symbol);
        let aligned = reference.at_rx_rate();
        Ok(Self {
            tx: tx.clone(),
            rx: rx.clone(),
            taps: tx.srrc_taps(),
            aligned,
            active_len: preamble.active_len() * rx.samples_per_symbol,
            reference,
            preamble_symbols: preamble.len(),
        })
    }

    pub fn reference(&self) -> &ReferencePreamble {
        &self.reference
    }

    pub fn rx_config(&self) -> &RxConfig {
        &self.rx
    }

    pub fn matched_filter(&self, s_rx: &PassbandSignal) -> Result<BasebandSignal> {
        downconvert_and_filter(s_rx, &self.rx, &self.taps)
    }

    /// Wiener training length in receiver samples: the preamble minus the
    /// tail reached by payload pulses through the TX and RX filters
    /// (`2·D` symbols), but never fewer than `4·N_f` samples.
    pub fn training_len(&self) -> usize {
        let full = self.aligned.len();
        let guard = 2 * self.tx.srrc_delay * self.rx.samples_per_symbol;
        full.saturating_sub(guard).max(4 * self.rx.wiener_length).min(full)
    }

    /// Number of burst-start candidates that fit in `r`.
    fn window_len(&self, r_len: usize) -> usize {
        let gd = self.reference.group_delay_rx();
        self.rx
            .search_window
            .min(r_len.saturating_sub(gd + self.aligned.len() - 1))
    }

    /// First acquisition pass: best burst start over the window, maximised
    /// over a thinned frequency grid.
    fn acquire(&self, r: &BasebandSignal) -> Result<usize> {
        let gd = self.reference.group_delay_rx();
        let count = self.window_len(r.len());
        if count == 0 {
            return Err(Error::EmptySearchWindow);
        }
        let reference = &self.aligned[..self.active_len];
        let corr = FftCorrelator::new(reference, count);
        let seg_len = (count + reference.len() - 1).min(r.len() - gd);
        let seg = &r.samples[gd..gd + seg_len];
        let mut best = (0usize, f64::MIN);
        for i in (0..self.rx.cfo_grid.n_points).step_by(ACQUISITION_STRIDE) {
            let f = self.rx.cfo_grid.point(i);
            let rotated: Vec<Complex64> = seg
                .iter()
                .zip(phasors(f, 0, seg.len(), r.rate_hz, 0.0, -1.0))
                .map(|(v, p)| v * p)
                .collect();
            for (n, c) in corr.correlate(&rotated).iter().enumerate() {
                let e = c.norm_sqr();
                if e > best.1 {
                    best = (n, e);
                }
            }
        }
        Ok(best.0)
    }

    /// Search margin around the first-pass start, in receiver samples. Chirp
    /// preambles trade a delay of `τ` symbols against `τ/L` cycles/symbol of
    /// frequency, so the margin covers every such alias inside the grid.
    fn ml_margin(&self) -> usize {
        let grid = &self.rx.cfo_grid;
        let f_max = grid.f_min_hz.abs().max(grid.f_max_hz.abs());
        let symbols = f_max * (self.active_len / self.rx.samples_per_symbol) as f64 / self.tx.symbol_rate();
        ML_MARGIN.max((symbols.ceil() as usize + 1) * self.rx.samples_per_symbol)
    }

    /// Steps 1 and 2 near a rough burst start: joint search over full-rate
    /// shifts and the CFO grid.
    ///
    /// Each hypothesis is scored as `max_f |λ|² / E_ref − ‖r_G‖²`, where `G`
    /// is the `ML_GUARD` samples just before its start, which should hold only
    /// noise, and `|λ|²` is interpolated between grid points. A plain
    /// `max |λ|²` cannot tell a chirp from its delay-Doppler alias one symbol
    /// late, whose window swaps the first preamble symbol for the first
    /// payload symbol. Returns the coarse result and the winning
    /// shift relative to `start`.
    fn estimate_cfo(&self, r: &BasebandSignal, start: usize) -> Result<(CoarseCfo, isize)> {
        let gd = self.reference.group_delay_rx();
        let decim = self.reference.decimation() as isize;
        let margin = self.ml_margin();
        let lead = (margin + ML_GUARD).min(gd + start);
        let origin = gd + start - lead;
        let len = (lead + self.active_len + margin).min(r.len().saturating_sub(origin));
        if len < lead + self.active_len {
            return Err(Error::EmptySearchWindow);
        }
        let window = &r.samples[origin..origin + len];
        let table = PhasorTable::new(&self.rx.cfo_grid, origin, len, r.rate_hz);
        let span = ((len - lead - self.active_len) as isize) * decim;
        let lo = -(((lead - ML_GUARD.min(lead)) as isize) * decim);
        let fit_len = ML_GUARD.min(lead) + self.active_len;

        let mut cache: Vec<(isize, CoarseCfo, f64)> = Vec::new();
        let eval = |shift: isize, cache: &mut Vec<(isize, CoarseCfo, f64)>| {
            if cache.iter().any(|(s, _, _)| *s == shift) {
                return;
            }
            let a = (lead as isize + shift.div_euclid(decim)) as usize - ML_GUARD.min(lead);
            let reference = self.reference.shifted_span(shift, lead, len);
            let (w, p) = (&window[a..a + fit_len], &reference[a..a + fit_len]);
            let est = table.likelihood(w, p, a, &self.rx.cfo_grid);
            let e_ref: f64 = p.iter().map(|v| v.norm_sqr()).sum();
            let e_guard: f64 = w[..ML_GUARD.min(lead)].iter().map(|v| v.norm_sqr()).sum();
            let score = peak_height(&est.energies) / e_ref.max(f64::MIN_POSITIVE) - e_guard;
            cache.push((shift, est, score));
        };
        let best_of = |cache: &Vec<(isize, CoarseCfo, f64)>| {
            cache
                .iter()
                .max_by(|a, b| a.2.total_cmp(&b.2).then(b.0.abs().cmp(&a.0.abs())))
                .map(|c| c.0)
                .expect("at least one shift evaluated")
        };
        let mut shift = lo;
        while shift <= span {
            eval(shift, &mut cache);
            shift += ML_SHIFT_STEP;
        }
        let centre = best_of(&cache);
        for s in centre - ML_SHIFT_STEP + 1..centre + ML_SHIFT_STEP {
            if (lo..=span).contains(&s) {
                eval(s, &mut cache);
            }
        }
        let winner = best_of(&cache);
        let (shift, est, _) = cache.into_iter().find(|c| c.0 == winner).expect("winner is cached");
        Ok((est, shift))
    }

    /// Full synchronisation and detection for one received burst carrying
    /// `payload_symbols` data symbols.
    pub fn receive(&self, s_rx: &PassbandSignal, payload_symbols: usize) -> Result<SyncEstimate> {
        let r = self.matched_filter(s_rx)?;
        self.receive_baseband(&r, payload_symbols)
    }

    pub fn receive_baseband(&self, r: &BasebandSignal, payload_symbols: usize) -> Result<SyncEstimate> {
        let rough = self.acquire(r)?;
        let (coarse, ml_shift) = self.estimate_cfo(r, rough)?;
        let fine = fine_cfo(&coarse.energies, &self.rx.cfo_grid)?;
        let y = counter_rotate(r, fine.f_hat_hz);

        let gd = self.reference.group_delay_rx();
        let count = self.window_len(y.len());
        let detection = detect_burst(&y.samples, &self.aligned[..self.active_len], gd, count)?;
        let start = gd + detection.mu_hat;

        let total_symbols = self.preamble_symbols + payload_symbols;
        let (sol, burst_symbols) = wiener_equalize(
            &y.samples,
            &self.aligned[..self.training_len()],
            start,
            self.rx.wiener_length,
            self.rx.diagonal_loading,
            self.rx.samples_per_symbol,
            total_symbols,
        )?;
        let recovered: Vec<Complex64> = burst_symbols[self.preamble_symbols..].to_vec();
        let decided_bits = bpsk_decide(&recovered);
        Ok(SyncEstimate {
            f_hat_hz: fine.f_hat_hz,
            f_coarse_hz: coarse.f_hat_hz,
            fine_refined: fine.refined,
            theta_hat: coarse.theta_hat,
            mu_hat: detection.mu_hat,
            ml_shift: ml_shift + self.reference.decimation() as isize * (rough as isize - detection.mu_hat as isize),
            epsilon_hat: sol.epsilon_hat(),
            wiener_singular: sol.singular,
            wiener_w: sol.taps,
            burst_symbols,
            recovered_symbols: recovered,
            decided_bits,
            cfo_grid: self.rx.cfo_grid.points(),
            cfo_energies: coarse.energies,
            correlation_trace: detection.trace,
            corr_peak: detection.normalized_peak,
        })
    }

    /// Symbol-rate samples with synchronisation taken from the channel truth
    /// instead of estimated: counter-rotation by the true offset and phase,
    /// sampling on the true symbol instants. The fractional delay must be zero.
    pub fn receive_genie(
        &self,
        s_rx: &PassbandSignal,
        truth: &crate::channel::ChannelImpairments,
        payload_symbols: usize,
    ) -> Result<Vec<Complex64>> {
        if truth.fractional_delay != 0.0 {
            return Err(Error::invalid("genie receiver needs an integer delay"));
        }
        let r = self.matched_filter(s_rx)?;
        let decim = self.reference.decimation();
        let tau = (truth.delay_samples * decim) as f64 / s_rx.rate_hz;
        let carrier_phase = -2.0 * PI * self.tx.carrier_hz * tau;
        // the receive filter delays the envelope, so the offset seen at r[n]
        // is the one applied D·sps passband samples earlier
        let filter_s = self.tx.filter_delay_samples() as f64 / self.tx.sample_rate_hz;
        let phase = truth.phase_rad + carrier_phase - 2.0 * PI * truth.cfo_hz * filter_s;
        let start = self.reference.group_delay_rx() + truth.delay_samples;
        let sps = self.rx.samples_per_symbol;
        let total = self.preamble_symbols + payload_symbols;
        if start + (total - 1) * sps >= r.len() {
            return Err(Error::LengthMismatch {
                expected: start + total * sps,
                actual: r.len(),
            });
        }
        Ok((self.preamble_symbols..total)
            .map(|k| {
                let n = start + k * sps;
                let rot = oscillator_phase(truth.cfo_hz, n, r.rate_hz) + phase;
                r.samples[n] * Complex64::from_polar(1.0, -rot)
            })
            .collect())
    }
}
