use gcibc::harness::*;
use gcibc::preamble::PreambleFamily;

fn small_spec() -> ExperimentSpec {
    ExperimentSpec {
        families: vec![PreambleFamily::Golay, PreambleFamily::ZadoffChu],
        preamble_lengths: vec![32, 64],
        ebn0_points: vec![4.0, 10.0],
        trials_per_point: 4,
        payload_symbols: 300,
        master_seed: 17,
        ..Default::default()
    }
}

#[test]
fn reruns_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    emit_csv(&run_sweep(&spec).unwrap(), &a).unwrap();
    emit_csv(&run_sweep(&spec).unwrap(), &b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let other = ExperimentSpec { master_seed: 18, ..spec };
    let c = dir.path().join("c.csv");
    emit_csv(&run_sweep(&other).unwrap(), &c).unwrap();
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn csv_header_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let rows = run_sweep(&small_spec()).unwrap();
    assert_eq!(rows.len(), 8);
    let path = dir.path().join("r.csv");
    emit_csv(&rows, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "family,preamble_len,ebn0_db,pb,pb_ci95,pb_median,ber,ber_lo,ber_hi,bit_errors,bits,\
         cfo_rmse_hz,timing_hit_rate,corr_peak,trials,failed_trials,seed"
    );
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    assert_eq!(read_csv(&path).unwrap(), rows);
    for r in &rows {
        assert_eq!(r.trials, 4);
        assert_eq!(r.failed_trials, 0);
        assert_eq!(r.bits, 4 * 300);
        assert!(r.ber_lo <= r.ber && r.ber <= r.ber_hi);
    }
}

#[test]
fn figure_files() {
    let dir = tempfile::tempdir().unwrap();
    let rows = run_sweep(&small_spec()).unwrap();
    let files = emit_figure_files(&rows, dir.path()).unwrap();
    assert_eq!(files.len(), 2);
    for f in files {
        let text = std::fs::read_to_string(&f).unwrap();
        assert_eq!(text.lines().count(), rows.len() + 1, "{}", f.display());
    }
}

#[test]
fn spec_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec();
    let path = dir.path().join("spec.toml");
    std::fs::write(&path, spec.to_toml_string()).unwrap();
    assert_eq!(ExperimentSpec::load(&path).unwrap(), spec);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("master_seed = 17"));
}

#[test]
fn bundled_example_config_parses() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/fig4.toml");
    let spec = ExperimentSpec::load(std::path::Path::new(path)).unwrap();
    spec.validate().unwrap();
    assert_eq!(spec.trials_per_point, 500);
}

#[test]
fn trial_is_reproducible_from_its_seed() {
    let spec = small_spec();
    let ctx = TrialContext::new(&spec, PreambleFamily::Golay, 64).unwrap();
    let seed = trial_seed(spec.master_seed, PreambleFamily::Golay, 64, 1, 3);
    let (a, _) = ctx.run_trial(&spec, 10.0, seed).unwrap();
    let (b, _) = ctx.run_trial(&spec, 10.0, seed).unwrap();
    assert_eq!(a, b);
    assert!(a.impairments.delay_samples >= spec.delay_min && a.impairments.delay_samples <= spec.delay_max);
    assert!(a.impairments.fractional_delay.abs() < 0.5);
}
