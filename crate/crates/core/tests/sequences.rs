use std::f64::consts::PI;

use gcibc::preamble::*;
use gcibc::Error;
use num_complex::Complex64;
use proptest::prelude::*;

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// Direct O(L²) cyclic autocorrelation, independent of the library.
fn naive_cyclic(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|m| (0..n).map(|l| x[l] * x[(l + n - m) % n].conj()).sum())
        .collect()
}

fn naive_aperiodic_real(x: &[i64], m: usize) -> i64 {
    (0..x.len() - m).map(|l| x[l] * x[l + m]).sum()
}

/// Rudin-Shapiro: sign flips once per adjacent `11` bit pair in the index.
fn rudin_shapiro(n: usize) -> i64 {
    if (n & (n >> 1)).count_ones() % 2 == 0 { 1 } else { -1 }
}

#[test]
fn cazac_matches_closed_form() {
    for len in [2usize, 3, 7, 16, 63, 64, 255, 256, 511] {
        let seq = generate_cazac(len, 1).unwrap();
        for (l, v) in seq.elements().iter().enumerate() {
            let l = l as f64;
            let want = if len % 2 == 1 {
                Complex64::from_polar(1.0, 2.0 * PI * l * l / len as f64)
            } else {
                Complex64::from_polar(1.0, PI * l * l / len as f64)
            };
            assert!((v - want).norm() < 1e-9, "L={len} l={l}");
        }
    }
}

#[test]
fn zadoff_chu_matches_closed_form() {
    for (len, u) in [(13usize, 1i64), (61, 5), (127, 3), (251, 1), (64, 3)] {
        let seq = generate_zadoff_chu(len, u).unwrap();
        for (l, v) in seq.elements().iter().enumerate() {
            let l = l as f64;
            let want = Complex64::from_polar(1.0, -PI * u as f64 * l * (l + 1.0) / len as f64);
            assert!((v - want).norm() < 1e-9);
        }
    }
}

#[test]
fn golay_a_is_rudin_shapiro() {
    let mut len = 2;
    while len <= 1024 {
        let (a, _) = generate_golay_pair(len).unwrap();
        for (n, v) in a.elements().iter().enumerate() {
            assert_eq!(v.re as i64, rudin_shapiro(n), "L={len} n={n}");
            assert_eq!(v.im, 0.0);
        }
        len *= 2;
    }
}

#[test]
fn golay_sum_matches_brute_force() {
    for len in [2usize, 8, 32, 128, 256] {
        let (a, b) = generate_golay_pair(len).unwrap();
        let ai: Vec<i64> = a.elements().iter().map(|c| c.re as i64).collect();
        let bi: Vec<i64> = b.elements().iter().map(|c| c.re as i64).collect();
        let sum = golay_complementary_sum(&a, &b).unwrap();
        assert_eq!(sum.len(), 2 * len - 1);
        for m in 0..len {
            let brute = naive_aperiodic_real(&ai, m) + naive_aperiodic_real(&bi, m);
            assert_eq!(sum[len - 1 + m], brute);
            assert_eq!(sum[len - 1 - m], brute);
        }
        assert_eq!(sum[len - 1], 2 * len as i64);
    }
}

#[test]
fn library_autocorrelation_matches_naive() {
    let seq = generate_cazac(37, 4).unwrap();
    let lib = autocorrelation(&seq, CorrelationMode::Cyclic).unwrap();
    for (m, v) in naive_cyclic(seq.elements()).iter().enumerate() {
        assert!((lib.value_at(m as i64).unwrap() - v).norm() < 1e-9);
    }
}

#[test]
fn padded_zadoff_chu_layout() {
    let seq = generate_zadoff_chu_padded(64, 1).unwrap();
    assert_eq!(seq.len(), 64);
    assert_eq!(seq.active_len(), 61);
    assert!(seq.is_padded());
    assert!(seq.elements()[61..].iter().all(|v| v.norm() == 0.0));
    assert_eq!(seq.active(), generate_zadoff_chu(61, 1).unwrap().elements());
    assert_eq!(PreambleFamily::ZadoffChu.generate(64, 1).unwrap(), seq);
}

#[test]
fn parameter_errors() {
    assert!(matches!(generate_golay_pair(48), Err(Error::NotPowerOfTwo(48))));
    assert!(matches!(generate_zadoff_chu(64, 32), Err(Error::NotCoprime { .. })));
    assert!(matches!(generate_cazac(64, 2), Err(Error::NotCoprime { .. })));
    assert!(generate_zadoff_chu(13, 13).is_err());
    assert!(generate_cazac(1, 1).is_err());
}

#[test]
fn zadoff_chu_even_length_is_not_ideal() {
    let seq = generate_zadoff_chu(64, 1).unwrap();
    let off = autocorrelation(&seq, CorrelationMode::Cyclic).unwrap().max_off_peak();
    assert!(off > 1.0);
}

#[test]
fn primes() {
    let brute = |n: usize| n >= 2 && (2..n).all(|d| n % d != 0);
    for n in 0..500 {
        assert_eq!(is_prime(n), brute(n), "n={n}");
    }
    assert_eq!(largest_prime_at_most(64), Some(61));
    assert_eq!(largest_prime_at_most(256), Some(251));
    assert_eq!(largest_prime_at_most(1), None);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cazac_is_cazac(len in 2usize..200, k in 1i64..50) {
        prop_assume!(gcd(len, k as usize) == 1);
        let seq = generate_cazac(len, k).unwrap();
        let r = naive_cyclic(seq.elements());
        prop_assert!((r[0].re - len as f64).abs() < 1e-9);
        for v in &r[1..] {
            prop_assert!(v.norm() < 1e-9 * len as f64);
        }
        prop_assert!((papr(&seq).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn zadoff_chu_is_cazac(half in 1usize..100, u in 1i64..200) {
        let len = 2 * half + 1;
        prop_assume!((u as usize) < len && gcd(len, u as usize) == 1);
        let seq = generate_zadoff_chu(len, u).unwrap();
        let r = naive_cyclic(seq.elements());
        for v in &r[1..] {
            prop_assert!(v.norm() < 1e-9 * len as f64);
        }
        prop_assert!((papr(&seq).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn zadoff_chu_roots_cross_correlate_flat(p_idx in 0usize..6, u in 1i64..12, v in 1i64..12) {
        let p = [13usize, 17, 31, 61, 127, 251][p_idx];
        prop_assume!(u != v);
        let a = generate_zadoff_chu(p, u).unwrap();
        let b = generate_zadoff_chu(p, v).unwrap();
        let x = cross_correlation(a.elements(), b.elements(), CorrelationMode::Cyclic).unwrap();
        for c in &x.values {
            prop_assert!((c.norm() - (p as f64).sqrt()).abs() < 1e-9 * p as f64);
        }
    }

    #[test]
    fn aperiodic_profile_is_hermitian(len in 2usize..64, k in 1i64..9) {
        prop_assume!(gcd(len, k as usize) == 1);
        let seq = generate_cazac(len, k).unwrap();
        let r = autocorrelation(&seq, CorrelationMode::Aperiodic).unwrap();
        prop_assert_eq!(r.values.len(), 2 * len - 1);
        for m in 1..len as i64 {
            let d = r.value_at(m).unwrap() - r.value_at(-m).unwrap().conj();
            prop_assert!(d.norm() < 1e-9);
        }
    }

    #[test]
    fn peak_normalized_has_unit_peak(len in 2usize..64) {
        let seq = generate_cazac(len, 1).unwrap();
        let r = autocorrelation(&seq, CorrelationMode::Aperiodic).unwrap().peak_normalized();
        prop_assert!((r.value_at(0).unwrap().norm() - 1.0).abs() < 1e-12);
        prop_assert_eq!(r.normalization, Normalization::PeakNormalized);
    }
}
