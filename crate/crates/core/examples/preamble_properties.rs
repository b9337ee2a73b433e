//! Generates each preamble family and prints its correlation figures.

use gcibc::preamble::*;

fn main() -> gcibc::Result<()> {
    for len in [16, 64, 256] {
        let (a, b) = generate_golay_pair(len)?;
        let sum = golay_complementary_sum(&a, &b)?;
        let side = sum.iter().enumerate().filter(|(i, _)| *i != len - 1).map(|(_, v)| v.abs()).max().unwrap();
        let aper = autocorrelation(&a, CorrelationMode::Aperiodic)?.max_off_peak();
        println!("golay  L={len:<4} PAPR {:.3}  aperiodic sidelobe {aper:>5.1}  complementary sidelobe {side}", papr(&a)?);

        let c = generate_cazac(len, 1)?;
        let cyc = autocorrelation(&c, CorrelationMode::Cyclic)?.max_off_peak();
        println!("cazac  L={len:<4} PAPR {:.3}  cyclic sidelobe {cyc:.2e}", papr(&c)?);

        let z = generate_zadoff_chu_padded(len, 1)?;
        let zc = generate_zadoff_chu(z.active_len(), 1)?;
        let cyc = autocorrelation(&zc, CorrelationMode::Cyclic)?.max_off_peak();
        println!(
            "zc     L={len:<4} active {:<4} PAPR {:.3}  cyclic sidelobe {cyc:.2e}",
            z.active_len(),
            papr_of(z.active())?
        );
    }
    Ok(())
}
