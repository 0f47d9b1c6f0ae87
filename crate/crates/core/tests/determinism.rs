//! Output is a pure function of the sweep definition and the seed.

use pilotphase::harness::{run_sweep_with_threads, write_csv, Metric, SweepSpec, SweepValue, SweepVariable};
use pilotphase::SystemConfig;

fn spec(seed: u64) -> SweepSpec {
    let base = SystemConfig { l_f: 600, trials: 24, master_seed: seed, ..SystemConfig::default() };
    let mut s = SweepSpec::new(
        base,
        SweepVariable::SnrDb,
        vec![SweepValue::Num(5.0), SweepValue::Num(15.0)],
        vec![Metric::PhaseMseWiener, Metric::ChannelMse, Metric::BerProposed, Metric::CrlbOneshot],
    );
    s.record_timing = false;
    s
}

fn csv_bytes(seed: u64, threads: usize) -> Vec<u8> {
    let recs = run_sweep_with_threads(&spec(seed), threads, |_| {}).unwrap();
    let mut buf = Vec::new();
    write_csv(&mut buf, &recs).unwrap();
    buf
}

#[test]
fn thread_count_does_not_change_output() {
    let one = csv_bytes(7, 1);
    assert_eq!(one, csv_bytes(7, 3));
    assert_eq!(one, csv_bytes(7, 8));
}

#[test]
fn seed_changes_output() {
    assert_ne!(csv_bytes(7, 2), csv_bytes(8, 2));
}

#[test]
fn spec_file_round_trip_reproduces_run() {
    let s = spec(9);
    let back: SweepSpec = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
    let a = run_sweep_with_threads(&s, 2, |_| {}).unwrap();
    let b = run_sweep_with_threads(&back, 2, |_| {}).unwrap();
    assert_eq!(a, b);
}
