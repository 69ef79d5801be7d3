use std::path::Path;

use sideinfo::harness::config::{Scheme, WzFiniteParams};
use sideinfo::harness::output::csv_bytes;
use sideinfo::harness::{read_csv, run_experiment, schema, write_run, ExperimentConfig, Params};

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::parse(text, Path::new(".")).unwrap()
}

#[test]
fn dirty_paper_error_rate_falls_with_horizon() {
    // P = noise = 1 gives C = 0.5
    let c = config(
        "scheme = dirty-paper\ntrials = 10000\nseed = 11\n[params]\nrate = 0.4\npower = 1\nnoise_var = 1\n[sweep]\naxis = n\nvalues = 5,10,15\n",
    );
    let rows = run_experiment(&c).unwrap();
    let err: Vec<f64> = rows
        .iter()
        .map(|r| r.get(Scheme::DirtyPaper, "error_rate").unwrap())
        .collect();
    assert_eq!(rows[0].get(Scheme::DirtyPaper, "capacity"), Some(0.5));
    assert!(err[0] > err[1] && err[1] > err[2], "{err:?}");
}

#[test]
fn csv_round_trip_and_schema_for_every_scheme() {
    let dir = tempfile::tempdir().unwrap();
    for scheme in Scheme::ALL {
        let trials = if matches!(scheme, Scheme::GpFinite | Scheme::WzFinite) {
            5
        } else {
            50
        };
        let c = ExperimentConfig::new(Params::defaults(scheme), trials, 3);
        let rows = run_experiment(&c).unwrap();
        let path = write_run(&dir.path().join(scheme.name()), "run", &c, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
        assert_eq!(&header[..3], ["axis", "value", "trials"]);
        assert_eq!(&header[3..], schema(scheme));
        let back = read_csv(scheme, &path).unwrap();
        assert_eq!(back.len(), rows.len());
        for (a, b) in rows.iter().zip(&back) {
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&a.fields), bits(&b.fields), "{scheme}");
            assert_eq!(a.trials, b.trials);
        }
        let meta = std::fs::read_to_string(path.with_file_name("meta.txt")).unwrap();
        assert!(meta.contains("seed = 3"));
        assert!(meta.contains(&format!("scheme = {scheme}")));
        assert!(meta.contains(env!("CARGO_PKG_VERSION")));
    }
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let c = config("scheme = wz-finite\ntrials = 40\nseed = 5\n[sweep]\naxis = base_len\nvalues = 6, 10\n");
    let d = config("scheme = dirty-paper\ntrials = 3000\nseed = 5\n");
    let run = |threads: usize, c: &ExperimentConfig| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| csv_bytes(c.scheme(), &run_experiment(c).unwrap()).unwrap())
    };
    for c in [&c, &d] {
        let one = run(1, c);
        assert_eq!(one, run(4, c));
        assert_eq!(one, run(7, c));
    }
}

#[test]
fn identical_configs_give_identical_bytes() {
    let c = config("scheme = gp-finite\ntrials = 20\nseed = 8\n");
    let a = csv_bytes(c.scheme(), &run_experiment(&c).unwrap()).unwrap();
    let b = csv_bytes(c.scheme(), &run_experiment(&c).unwrap()).unwrap();
    assert_eq!(a, b);
    let other = ExperimentConfig { seed: 9, ..c.clone() };
    assert_ne!(a, csv_bytes(c.scheme(), &run_experiment(&other).unwrap()).unwrap());
}

#[test]
fn wz_encoder_completes() {
    let c = ExperimentConfig::new(Params::WzFinite(WzFiniteParams::default()), 200, 21);
    let row = &run_experiment(&c).unwrap()[0];
    let encoded = row.get(Scheme::WzFinite, "encode_rate").unwrap();
    assert!(encoded >= 0.9, "encoder finished {encoded}");
}

#[test]
fn wz_shaping_bias_shrinks_with_base_length() {
    let c = config("scheme = wz-finite\ntrials = 2000\nseed = 7\n[sweep]\naxis = base_len\nvalues = 6, 14\n");
    let rows = run_experiment(&c).unwrap();
    let bias: Vec<f64> = rows
        .iter()
        .map(|r| r.get(Scheme::WzFinite, "distortion").unwrap() - r.get(Scheme::WzFinite, "exact_distortion").unwrap())
        .collect();
    assert!(bias[1] < bias[0], "bias at L=6 {} and L=14 {}", bias[0], bias[1]);
}

#[test]
fn gp_rates_are_consistent() {
    let c = config("scheme = gp-finite\ntrials = 30\nseed = 2\n[sweep]\naxis = iterations\nvalues = 1, 2\n");
    for r in run_experiment(&c).unwrap() {
        let get = |k| r.get(Scheme::GpFinite, k).unwrap();
        assert_eq!(get("rate"), 12.0 / get("channel_uses"));
        assert_eq!(get("reliable_rate"), get("rate") * get("success"));
        assert!((0.0..=1.0).contains(&get("success")));
        assert!(get("inversion_failure") + get("termination_error") <= 1.0 - get("success") + 1e-12);
    }
}
