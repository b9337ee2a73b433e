//! Preamble sequence families and their correlation figures of merit.
//!
//! Three families are supported:
//!
//! * CAZAC chirps `p[l] = exp(j 2π k l² / L)`. For even `L` this form is
//!   periodic with a second correlation peak at `m = L/2`, so even lengths use
//!   the half-angle chirp `exp(j π k l² / L)` instead. Both forms have zero
//!   cyclic autocorrelation off the peak when `gcd(k, L) = 1`.
//! * Golay complementary pairs built by recursive doubling.
//! * Zadoff-Chu sequences `Z_u[l] = exp(-j π u l (l + 1) / L)`.
//!
//! Phases are evaluated from exact integer residues, so unit amplitude and the
//! zero-autocorrelation properties hold to the last few ulps.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Longest Golay pair we are willing to build.
pub const MAX_GOLAY_LEN: usize = 1 << 16;

/// Concrete sequence kind carried as metadata on every [`PreambleSequence`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SequenceKind {
    Cazac,
    GolayA,
    GolayB,
    ZadoffChu,
}

/// Preamble family as selected by an experiment. A Golay experiment transmits
/// sequence A of the pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreambleFamily {
    Cazac,
    Golay,
    #[serde(rename = "zc", alias = "zadoffchu", alias = "zadoff-chu")]
    ZadoffChu,
}

impl PreambleFamily {
    pub const ALL: [PreambleFamily; 3] = [
        PreambleFamily::Cazac,
        PreambleFamily::Golay,
        PreambleFamily::ZadoffChu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PreambleFamily::Cazac => "cazac",
            PreambleFamily::Golay => "golay",
            PreambleFamily::ZadoffChu => "zc",
        }
    }

    /// Builds the preamble this family transmits for a requested length.
    ///
    /// `root` is `k` for CAZAC and `u` for Zadoff-Chu and is ignored for Golay.
    /// Zadoff-Chu lengths are shrunk to the largest prime not above `len` and
    /// zero padded back to `len`.
    pub fn generate(self, len: usize, root: i64) -> Result<PreambleSequence> {
        match self {
            PreambleFamily::Cazac => generate_cazac(len, root),
            PreambleFamily::Golay => Ok(generate_golay_pair(len)?.0),
            PreambleFamily::ZadoffChu => generate_zadoff_chu_padded(len, root),
        }
    }
}

impl fmt::Display for PreambleFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PreambleFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cazac" => Ok(PreambleFamily::Cazac),
            "golay" => Ok(PreambleFamily::Golay),
            "zc" | "zchu" | "z-chu" | "zadoffchu" | "zadoff-chu" => Ok(PreambleFamily::ZadoffChu),
            other => Err(Error::invalid(format!("unknown preamble family '{other}'"))),
        }
    }
}

/// A unit-amplitude preamble plus the parameters it was generated from.
#[derive(Debug, Clone, PartialEq)]
pub struct PreambleSequence {
    kind: SequenceKind,
    root: Option<i64>,
    elements: Vec<Complex64>,
    /// Number of leading elements that belong to the sequence proper; the rest
    /// is zero padding.
    active_len: usize,
}

impl PreambleSequence {
    pub fn kind(&self) -> SequenceKind {
        self.kind
    }

    pub fn root(&self) -> Option<i64> {
        self.root
    }

    pub fn elements(&self) -> &[Complex64] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Length of the generated sequence before any zero padding.
    pub fn active_len(&self) -> usize {
        self.active_len
    }

    pub fn is_padded(&self) -> bool {
        self.active_len < self.elements.len()
    }

    /// Elements without the zero-padded tail.
    pub fn active(&self) -> &[Complex64] {
        &self.elements[..self.active_len]
    }

    pub fn is_real(&self) -> bool {
        self.elements.iter().all(|c| c.im == 0.0)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// `exp(j π num / den)` with `num` already reduced modulo `2 den`.
fn unit_phasor(num: u128, den: u128) -> Complex64 {
    let angle = std::f64::consts::PI * (num as f64) / (den as f64);
    Complex64::from_polar(1.0, angle)
}

fn check_root(root: i64, len: usize) -> Result<u64> {
    if root < 1 {
        return Err(Error::invalid(format!("root must be >= 1, got {root}")));
    }
    let g = gcd(root as u64, len as u64);
    if g != 1 {
        return Err(Error::NotCoprime { root, len, gcd: g });
    }
    Ok(root as u64)
}

/// CAZAC chirp of length `len` with constant `k`.
pub fn generate_cazac(len: usize, k: i64) -> Result<PreambleSequence> {
    if len < 2 {
        return Err(Error::invalid(format!("CAZAC length must be >= 2, got {len}")));
    }
    let k = check_root(k, len)?;
    let l_big = len as u128;
    let modulus = 2 * l_big;
    // Phase is π·q·l²/L with q = 2k for odd L and q = k for even L.
    let q = if len % 2 == 1 { 2 * k as u128 } else { k as u128 };
    let elements = (0..len as u128)
        .map(|l| unit_phasor((q * l * l) % modulus, l_big))
        .collect();
    Ok(PreambleSequence {
        kind: SequenceKind::Cazac,
        root: Some(k as i64),
        elements,
        active_len: len,
    })
}

/// Golay complementary pair `(a, b)` of length `len`.
///
/// Built by doubling `a' = a ‖ b`, `b' = a ‖ -b` from `a = b = [+1]`.
pub fn generate_golay_pair(len: usize) -> Result<(PreambleSequence, PreambleSequence)> {
    if len < 2 || !len.is_power_of_two() || len > MAX_GOLAY_LEN {
        return Err(Error::NotPowerOfTwo(len));
    }
    let mut a = vec![1i8];
    let mut b = vec![1i8];
    while a.len() < len {
        let mut na = a.clone();
        na.extend_from_slice(&b);
        let mut nb = a.clone();
        nb.extend(b.iter().map(|v| -v));
        a = na;
        b = nb;
    }
    let wrap = |v: Vec<i8>, kind| PreambleSequence {
        kind,
        root: None,
        elements: v.into_iter().map(|x| Complex64::new(x as f64, 0.0)).collect(),
        active_len: len,
    };
    Ok((wrap(a, SequenceKind::GolayA), wrap(b, SequenceKind::GolayB)))
}

/// Zadoff-Chu sequence of length `len` with root `u`, `0 < u < len`.
pub fn generate_zadoff_chu(len: usize, u: i64) -> Result<PreambleSequence> {
    if len < 2 {
        return Err(Error::invalid(format!("Zadoff-Chu length must be >= 2, got {len}")));
    }
    if u < 1 || u as u64 >= len as u64 {
        return Err(Error::invalid(format!(
            "Zadoff-Chu root must satisfy 0 < u < {len}, got {u}"
        )));
    }
    let u = check_root(u, len)?;
    let l_big = len as u128;
    let modulus = 2 * l_big;
    let elements = (0..len as u128)
        .map(|l| {
            let r = (u as u128 * l * (l + 1)) % modulus;
            // exp(-jπ r / L) == exp(jπ (2L - r) / L)
            unit_phasor((modulus - r) % modulus, l_big)
        })
        .collect();
    Ok(PreambleSequence {
        kind: SequenceKind::ZadoffChu,
        root: Some(u as i64),
        elements,
        active_len: len,
    })
}

pub fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Largest prime `<= n`, if any.
pub fn largest_prime_at_most(n: usize) -> Option<usize> {
    (2..=n).rev().find(|&p| is_prime(p))
}

/// Zadoff-Chu preamble occupying `len` symbol slots.
///
/// The sequence itself has the largest prime length `L' <= len`; the remaining
/// `len - L'` slots are zeros and [`PreambleSequence::is_padded`] reports it.
pub fn generate_zadoff_chu_padded(len: usize, u: i64) -> Result<PreambleSequence> {
    let prime = largest_prime_at_most(len)
        .ok_or_else(|| Error::invalid(format!("no prime length fits in {len}")))?;
    let mut seq = generate_zadoff_chu(prime, u)?;
    seq.elements.resize(len, Complex64::new(0.0, 0.0));
    Ok(seq)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationMode {
    /// Indices wrap modulo the sequence length.
    Cyclic,
    /// Out-of-range samples count as zero.
    Aperiodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    Raw,
    PeakNormalized,
}

/// Correlation values indexed by shift.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationProfile {
    pub shifts: Vec<i64>,
    pub values: Vec<Complex64>,
    pub normalization: Normalization,
}

impl CorrelationProfile {
    pub fn value_at(&self, shift: i64) -> Option<Complex64> {
        self.shifts
            .iter()
            .position(|&s| s == shift)
            .map(|i| self.values[i])
    }

    /// Largest magnitude over all nonzero shifts.
    pub fn max_off_peak(&self) -> f64 {
        self.shifts
            .iter()
            .zip(&self.values)
            .filter(|(s, _)| **s != 0)
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max)
    }

    /// Scales every value so that the largest magnitude is one.
    pub fn peak_normalized(&self) -> CorrelationProfile {
        let peak = self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let scale = if peak > 0.0 { 1.0 / peak } else { 1.0 };
        CorrelationProfile {
            shifts: self.shifts.clone(),
            values: self.values.iter().map(|v| v * scale).collect(),
            normalization: Normalization::PeakNormalized,
        }
    }
}

/// `R[m] = Σ_l a[l] · conj(b[l - m])`.
pub fn cross_correlation(
    a: &[Complex64],
    b: &[Complex64],
    mode: CorrelationMode,
) -> Result<CorrelationProfile> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Degenerate("correlation of an empty sequence".into()));
    }
    let (shifts, values) = match mode {
        CorrelationMode::Cyclic => {
            if a.len() != b.len() {
                return Err(Error::LengthMismatch {
                    expected: a.len(),
                    actual: b.len(),
                });
            }
            let n = a.len();
            let values = (0..n)
                .map(|m| {
                    (0..n)
                        .map(|l| a[l] * b[(l + n - m) % n].conj())
                        .sum::<Complex64>()
                })
                .collect();
            ((0..n as i64).collect(), values)
        }
        CorrelationMode::Aperiodic => {
            let lo = -(b.len() as i64 - 1);
            let hi = a.len() as i64 - 1;
            let shifts: Vec<i64> = (lo..=hi).collect();
            let values = shifts
                .iter()
                .map(|&m| {
                    (0..a.len() as i64)
                        .filter_map(|l| {
                            let j = l - m;
                            (j >= 0 && (j as usize) < b.len())
                                .then(|| a[l as usize] * b[j as usize].conj())
                        })
                        .sum::<Complex64>()
                })
                .collect();
            (shifts, values)
        }
    };
    Ok(CorrelationProfile {
        shifts,
        values,
        normalization: Normalization::Raw,
    })
}

pub fn autocorrelation(seq: &PreambleSequence, mode: CorrelationMode) -> Result<CorrelationProfile> {
    cross_correlation(seq.elements(), seq.elements(), mode)
}

/// Peak-to-average power ratio (linear).
pub fn papr(seq: &PreambleSequence) -> Result<f64> {
    papr_of(seq.elements())
}

pub fn papr_of(samples: &[Complex64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Degenerate("PAPR of an empty sequence".into()));
    }
    let powers = samples.iter().map(|c| c.norm_sqr());
    let peak = powers.clone().fold(0.0, f64::max);
    let mean = powers.sum::<f64>() / samples.len() as f64;
    if mean == 0.0 {
        return Err(Error::Degenerate("PAPR of an all-zero sequence".into()));
    }
    Ok(peak / mean)
}

/// `R_a[m] + R_b[m]` for every aperiodic shift, in exact integer arithmetic.
///
/// Both inputs must be real ±1 sequences of equal length.
pub fn golay_complementary_sum(a: &PreambleSequence, b: &PreambleSequence) -> Result<Vec<i64>> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let to_int = |s: &PreambleSequence| -> Result<Vec<i64>> {
        s.elements()
            .iter()
            .map(|c| match (c.re, c.im) {
                (re, im) if im == 0.0 && (re == 1.0 || re == -1.0) => Ok(re as i64),
                _ => Err(Error::invalid("Golay elements must be real ±1")),
            })
            .collect()
    };
    let (a, b) = (to_int(a)?, to_int(b)?);
    let n = a.len() as i64;
    Ok((-(n - 1)..n)
        .map(|m| {
            (0..n)
                .filter(|l| (0..n).contains(&(l - m)))
                .map(|l| {
                    let (i, j) = (l as usize, (l - m) as usize);
                    a[i] * a[j] + b[i] * b[j]
                })
                .sum()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cazac_starts_at_one() {
        let s = generate_cazac(4, 1).unwrap();
        assert_eq!(s.elements()[0], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn cazac_odd_length_matches_textbook_form() {
        let s = generate_cazac(7, 2).unwrap();
        for (l, c) in s.elements().iter().enumerate() {
            let want = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * 2.0 * (l * l) as f64 / 7.0);
            assert!((c - want).norm() < 1e-12);
        }
    }

    #[test]
    fn cazac_rejects_short_and_non_coprime() {
        assert!(generate_cazac(1, 1).is_err());
        assert!(matches!(generate_cazac(64, 2), Err(Error::NotCoprime { .. })));
    }

    #[test]
    fn golay_len_two() {
        let (a, b) = generate_golay_pair(2).unwrap();
        let re = |s: &PreambleSequence| s.elements().iter().map(|c| c.re).collect::<Vec<_>>();
        assert_eq!(re(&a), vec![1.0, 1.0]);
        assert_eq!(re(&b), vec![1.0, -1.0]);
        assert_eq!(golay_complementary_sum(&a, &b).unwrap(), vec![0, 4, 0]);
    }

    #[test]
    fn golay_rejects_non_power_of_two() {
        assert!(matches!(generate_golay_pair(3), Err(Error::NotPowerOfTwo(3))));
        assert!(generate_golay_pair(1 << 17).is_err());
    }

    #[test]
    fn golay_a_alone_is_not_perfect() {
        let (a, _) = generate_golay_pair(8).unwrap();
        let prof = autocorrelation(&a, CorrelationMode::Aperiodic).unwrap();
        assert!(prof.max_off_peak() > 0.5);
    }

    #[test]
    fn zc_rejects_non_coprime_root() {
        assert!(matches!(
            generate_zadoff_chu(64, 32),
            Err(Error::NotCoprime { gcd: 32, .. })
        ));
        assert!(generate_zadoff_chu(63, 63).is_err());
        assert!(generate_zadoff_chu(63, 0).is_err());
    }

    #[test]
    fn zc_first_element_is_one() {
        let s = generate_zadoff_chu(63, 25).unwrap();
        assert!((s.elements()[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn zc_padding_uses_largest_prime() {
        let s = generate_zadoff_chu_padded(64, 1).unwrap();
        assert_eq!(s.len(), 64);
        assert_eq!(s.active_len(), 61);
        assert!(s.is_padded());
        assert!(s.elements()[61..].iter().all(|c| c.norm() == 0.0));
        let s = generate_zadoff_chu_padded(61, 1).unwrap();
        assert!(!s.is_padded());
    }

    #[test]
    fn primes() {
        assert_eq!(largest_prime_at_most(16), Some(13));
        assert_eq!(largest_prime_at_most(256), Some(251));
        assert_eq!(largest_prime_at_most(1), None);
    }

    #[test]
    fn cyclic_peak_equals_length() {
        let s = generate_cazac(16, 1).unwrap();
        let prof = autocorrelation(&s, CorrelationMode::Cyclic).unwrap();
        assert!((prof.value_at(0).unwrap() - Complex64::new(16.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn papr_is_one_for_every_family() {
        assert!((papr(&generate_cazac(64, 1).unwrap()).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(papr(&generate_golay_pair(64).unwrap().0).unwrap(), 1.0);
        assert!((papr(&generate_zadoff_chu(61, 7).unwrap()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_inputs_error() {
        assert!(cross_correlation(&[], &[], CorrelationMode::Cyclic).is_err());
        assert!(papr_of(&[]).is_err());
    }

    #[test]
    fn family_parse_roundtrip() {
        for f in PreambleFamily::ALL {
            assert_eq!(f.name().parse::<PreambleFamily>().unwrap(), f);
        }
        assert!("barker".parse::<PreambleFamily>().is_err());
    }
}
