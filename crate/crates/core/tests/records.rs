use proptest::prelude::*;

use nematic_core::algebra::ManifoldLabel;
use nematic_core::experiments::io::{read_records, write_records, RunMetadata};
use nematic_core::experiments::{Method, RunConfig, SweepRecord};

fn label(k: u8) -> ManifoldLabel {
    [ManifoldLabel::Bright, ManifoldLabel::Dark, ManifoldLabel::A, ManifoldLabel::B][k as usize % 4]
}

fn method(k: u8) -> Method {
    [Method::ExactSymmetric, Method::ExactFull, Method::Dtwa][k as usize % 3]
}

prop_compose! {
    fn record()(
        n in 1usize..5000,
        jr in -3.0f64..3.0,
        alpha in prop::sample::select(vec![0u32, 3]),
        kinds in (any::<u8>(), any::<u8>()),
        reals in prop::array::uniform6(-1e6f64..1e6),
        optionals in prop::array::uniform3(prop::option::of(1e-12f64..1e3)),
        seed in prop::option::of(any::<u64>()),
        flags in prop::array::uniform3(any::<bool>()),
    ) -> SweepRecord {
        SweepRecord {
            n,
            jr,
            alpha,
            method: method(kinds.0),
            manifold: label(kinds.1),
            omega_opt: reals[0],
            t_opt: reals[1],
            xi2_min: reals[2],
            xi2_a_min: optionals[0],
            fq_max: reals[3],
            t_fq: reals[4] * 1e-9,
            xi2_stderr: optionals[1],
            fq_stderr: optionals[2],
            seed,
            xi2_at_boundary: flags[0],
            fq_at_boundary: flags[1],
            omega_at_boundary: flags[2],
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn records_round_trip_losslessly(records in prop::collection::vec(record(), 0..12)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        write_records(&path, &records).unwrap();
        prop_assert_eq!(read_records(&path).unwrap(), records);
    }
}

#[test]
fn header_order_is_fixed() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let r = SweepRecord {
        n: 16,
        jr: 1.0,
        alpha: 0,
        method: Method::ExactSymmetric,
        manifold: ManifoldLabel::Bright,
        omega_opt: 0.0,
        t_opt: 0.1,
        xi2_min: 0.3,
        xi2_a_min: None,
        fq_max: 100.0,
        t_fq: 0.2,
        xi2_stderr: None,
        fq_stderr: None,
        seed: None,
        xi2_at_boundary: false,
        fq_at_boundary: false,
        omega_at_boundary: false,
    };
    write_records(&path, &[r]).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(
        text,
        "n,jr,alpha,method,manifold,omega_opt,t_opt,xi2_min,xi2_a_min,fq_max,t_fq,xi2_stderr,fq_stderr,seed,xi2_at_boundary,fq_at_boundary,omega_at_boundary\n\
         16,1.0,0,exact_symmetric,bright,0.0,0.1,0.3,,100.0,0.2,,,,false,false,false\n"
    );
}

#[test]
fn metadata_round_trips_and_reproduces_the_config() {
    let mut config = RunConfig::all_to_all(Method::Dtwa, 12, 0.5);
    config.dtwa.seed = 42;
    let meta = RunMetadata::new("simulate", &config);
    assert_eq!(meta.seed, Some(42));
    let text = serde_json::to_string(&meta).unwrap();
    let back: RunMetadata = serde_json::from_str(&text).unwrap();
    assert_eq!(back, meta);
    let echoed = serde_json::to_string(&back.config).unwrap();
    assert_eq!(RunConfig::from_json(&echoed, &[]).unwrap(), config);
}
