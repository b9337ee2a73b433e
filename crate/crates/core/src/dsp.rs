//! Small DSP building blocks shared by the transmitter, channel and receiver.

use std::f64::consts::PI;

use num_complex::Complex64;
use realfft::RealFftPlanner;

/// `2π·f·n/fs` reduced to `[0, 2π)` before the multiply, so long bursts keep
/// full phase precision.
pub fn oscillator_phase(freq_hz: f64, n: usize, rate_hz: f64) -> f64 {
    let cycles = (freq_hz / rate_hz) * n as f64;
    2.0 * PI * (cycles - cycles.floor())
}

/// `e^{j(sign·2π·f·(start + k)/fs + offset)}` for `k = 0..count`.
///
/// Uses a phasor recurrence, resynchronised to the exact phase every
/// [`RESYNC`] samples.
pub fn phasors(freq_hz: f64, start: usize, count: usize, rate_hz: f64, offset: f64, sign: f64) -> Vec<Complex64> {
    let step = Complex64::from_polar(1.0, sign * 2.0 * PI * freq_hz / rate_hz);
    let mut out = Vec::with_capacity(count);
    let mut p = Complex64::new(1.0, 0.0);
    for k in 0..count {
        if k % RESYNC == 0 {
            p = Complex64::from_polar(1.0, sign * oscillator_phase(freq_hz, start + k, rate_hz) + offset);
        }
        out.push(p);
        p *= step;
    }
    out
}

const RESYNC: usize = 128;

/// Inner product with four independent accumulators (lets the compiler
/// vectorise).
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for i in 0..4 {
            acc[i] += x[i] * y[i];
        }
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Full convolution `x * h` evaluated only at output indices
/// `0, factor, 2·factor, ...`.
pub fn convolve_decimate(x: &[Complex64], h: &[f64], factor: usize) -> Vec<Complex64> {
    assert!(factor >= 1);
    if x.is_empty() || h.is_empty() {
        return Vec::new();
    }
    // Split planes and reversed taps so the inner loop is two plain dot products.
    let re: Vec<f64> = x.iter().map(|v| v.re).collect();
    let im: Vec<f64> = x.iter().map(|v| v.im).collect();
    let hr: Vec<f64> = h.iter().rev().copied().collect();
    let full_len = x.len() + h.len() - 1;
    let out_len = full_len.div_ceil(factor);
    (0..out_len)
        .map(|m| {
            let n = m * factor;
            // y[n] = Σ_k h[k] x[n - k], k in [k_lo, k_hi]
            let k_lo = n.saturating_sub(x.len() - 1);
            let k_hi = n.min(h.len() - 1);
            let taps = &hr[h.len() - 1 - k_hi..h.len() - k_lo];
            let xs = n - k_hi;
            Complex64::new(dot(&re[xs..xs + taps.len()], taps), dot(&im[xs..xs + taps.len()], taps))
        })
        .collect()
}

/// Full convolution of a complex sequence with real taps.
pub fn convolve(x: &[Complex64], h: &[f64]) -> Vec<Complex64> {
    convolve_decimate(x, h, 1)
}

/// Smallest `n' >= n` whose only prime factors are 2, 3 and 5.
pub fn fast_fft_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Minimum zero padding used by [`hilbert`].
const HILBERT_GUARD: usize = 4096;

/// Discrete Hilbert transform of a real sequence, via a real FFT.
///
/// The sequence is zero padded before the transform; for signals that start
/// and end near zero this matches the ideal linear (non-circular) result.
pub fn hilbert(x: &[f64]) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    let n = 2 * fast_fft_len((x.len() + HILBERT_GUARD.max(x.len() / 8)).div_ceil(2));
    let mut planner = RealFftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut buf = fwd.make_input_vec();
    buf[..x.len()].copy_from_slice(x);
    let mut spec = fwd.make_output_vec();
    fwd.process(&mut buf, &mut spec).expect("buffer sizes come from the planner");
    // -j·sgn(k); DC and Nyquist vanish
    let last = spec.len() - 1;
    let scale = 1.0 / n as f64;
    for (k, b) in spec.iter_mut().enumerate() {
        *b = if k == 0 || k == last {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(b.im, -b.re) * scale
        };
    }
    let mut out = inv.make_output_vec();
    inv.process(&mut spec, &mut out).expect("buffer sizes come from the planner");
    out.truncate(x.len());
    out
}

/// Analytic signal `x + j·H{x}` of a real sequence.
pub fn analytic_signal(x: &[f64]) -> Vec<Complex64> {
    x.iter().zip(hilbert(x)).map(|(&r, i)| Complex64::new(r, i)).collect()
}

fn kaiser(x: f64, beta: f64) -> f64 {
    // x in [-1, 1]
    bessel_i0(beta * (1.0 - x * x).max(0.0).sqrt()) / bessel_i0(beta)
}

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..64 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Number of interpolator taps on each side of the fractional delay.
pub const FRACTIONAL_DELAY_HALF_TAPS: usize = 32;

/// Kaiser-windowed sinc interpolator for a delay of `frac` samples.
///
/// Returns `(offset, taps)`: `y[n] = Σ_i taps[i] · x[n - offset - i]`.
pub fn fractional_delay_taps(frac: f64) -> (isize, Vec<f64>) {
    let half = FRACTIONAL_DELAY_HALF_TAPS as isize;
    let beta = 8.0;
    let span = half as f64 + 0.5;
    // j runs over -half+1 ..= half; tap is sinc(j - frac)·window
    let taps = (-half + 1..=half)
        .map(|j| {
            let t = j as f64 - frac;
            let sinc = if t.abs() < 1e-15 {
                1.0
            } else {
                (PI * t).sin() / (PI * t)
            };
            sinc * kaiser(t / span, beta)
        })
        .collect();
    (-half + 1, taps)
}
