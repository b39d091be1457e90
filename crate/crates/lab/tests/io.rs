use std::fs;
use std::path::PathBuf;

use doifbp::config::{normalize, parse_config, RunConfig};
use doifbp::output::{read_diagnostics, write_diagnostics, write_sweep, SWEEP_HEADER};
use doifbp::snapshot::{load_snapshot, snapshot};
use doifbp::LabError;
use doifbp_core::limit::{SweepResult, SweepRow};
use doifbp_core::{DiagnosticsRecord, PhysCoeffs};
use proptest::prelude::*;

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn record(t: f64) -> DiagnosticsRecord {
    DiagnosticsRecord {
        t,
        e_total: 1.0 / 3.0,
        e_kinetic: 0.1,
        e_pressure: std::f64::consts::PI,
        e_eta: 1e-300,
        e_entropy: -2.5e-7,
        diss_fisher_tau: 0.0,
        diss_fisher_x: 5e-324,
        diss_grad_u: 123_456.789,
        diss_div_u: 1.0e10,
        diss_grad_eta: f64::EPSILON,
        mass: 0.9,
        rod_mass: 0.7 + 1e-16,
    }
}

#[test]
fn empty_diagnostics_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("d.csv");
    write_diagnostics(&[], &p).unwrap();
    let text = fs::read_to_string(&p).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("t,e_total,"));
    assert!(read_diagnostics(&p).unwrap().is_empty());
}

#[test]
fn single_record_parses_back_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("d.csv");
    let r = record(0.1 + 0.2);
    write_diagnostics(&[r], &p).unwrap();
    assert_eq!(fs::read_to_string(&p).unwrap().lines().count(), 2);
    assert_eq!(read_diagnostics(&p).unwrap(), vec![r]);
}

#[test]
fn sweep_table_has_one_row_per_gamma_in_order() {
    let gammas = [5.0, 10.0, 20.0, 40.0, 80.0];
    let rows: Vec<SweepRow> = gammas
        .iter()
        .map(|&g| SweepRow {
            gamma: g,
            excess: [1.0 / g, 2.0 / g, 3.0 / g, 4.0 / g],
            excess_sup_l2: 2.5 / g,
            pressure_time_integral: 1.0,
            complementarity: 0.5 / g,
            div_defect: 0.0,
            congested_volume: 0.25,
            steps: 100 + g as usize,
        })
        .collect();
    let sweep = SweepResult::from_rows(rows, 0.05).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.csv");
    write_sweep(&sweep, &p).unwrap();

    let mut r = csv::Reader::from_path(&p).unwrap();
    assert!(r.headers().unwrap().iter().eq(SWEEP_HEADER));
    let recs: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(recs.len(), 5);
    for (rec, &g) in recs.iter().zip(&gammas) {
        assert_eq!(rec[0].parse::<f64>().unwrap(), g);
        assert_eq!(rec[2].parse::<f64>().unwrap(), 2.0 / g);
        assert_eq!(rec[10].parse::<usize>().unwrap(), 100 + g as usize);
        let slope: f64 = rec[12].parse().unwrap();
        assert!((slope + 1.0).abs() < 1e-12, "{slope}");
    }

    let single = SweepResult::from_rows(sweep.rows[..1].to_vec(), 0.05).unwrap();
    write_sweep(&single, &p).unwrap();
    let mut r = csv::Reader::from_path(&p).unwrap();
    let rec = r.records().next().unwrap().unwrap();
    assert_eq!(&rec[12], "");
}

#[test]
fn shipped_configs_round_trip() {
    let mut seen = 0;
    for entry in fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|e| e != "conf") {
            continue;
        }
        let text = fs::read_to_string(&path).unwrap();
        let cfg = parse_config(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let canon = normalize(&text).unwrap();
        assert_eq!(cfg.serialize(), canon);
        assert_eq!(parse_config(&canon).unwrap(), cfg, "{}", path.display());
        assert_eq!(normalize(&canon).unwrap(), canon);
        seen += 1;
    }
    assert!(seen >= 3);
}

#[test]
fn comments_order_and_spacing_do_not_matter() {
    let a = "gamma = 12.5\nmu=0.3 # viscosity\n\n  cells =  64\n";
    let b = "# header\ncells = 64\nmu = 0.3\ngamma=12.5";
    assert_eq!(normalize(a).unwrap(), normalize(b).unwrap());
}

#[test]
fn missing_snapshot_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let e = load_snapshot(&dir.path().join("absent.bin")).unwrap_err();
    assert!(matches!(e, LabError::Io { .. }));
    assert_eq!(e.exit_code(), 4);
}

#[test]
fn snapshot_file_round_trip() {
    let cfg = parse_config("cells = 16\ndegree = 3\nperturbation = 0.2\nseed = 3").unwrap();
    let s = cfg.initial_state(7.0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.bin");
    snapshot(&s, &p).unwrap();
    let back = load_snapshot(&p).unwrap();
    assert_eq!(back, s);
    fs::write(&p, &fs::read(&p).unwrap()[..100]).unwrap();
    match load_snapshot(&p).unwrap_err() {
        LabError::Format { message, .. } => assert!(message.contains("header"), "{message}"),
        other => panic!("{other}"),
    }
}

fn config_strategy() -> impl Strategy<Value = RunConfig> {
    (
        prop_oneof![Just(1usize), Just(2usize)],
        (4usize..200, 4usize..200),
        (0.01f64..100.0, 0.01f64..100.0),
        2usize..9,
        1.6f64..200.0,
        prop::collection::vec(0.01f64..50.0, 1..6),
        (
            0.001f64..10.0,
            0.001f64..10.0,
            0.001f64..10.0,
            0.001f64..10.0,
        ),
        (0.01f64..0.99, -2.0f64..2.0, 0.0f64..3.0, 0.0f64..0.99),
        (
            any::<u64>(),
            0.0f64..10.0,
            0.01f64..1.0,
            1usize..1000,
            0usize..1000,
        ),
        0.001f64..0.999,
        "[a-z][a-z0-9_/]{0,12}",
    )
        .prop_map(
            |(dim, cells, lengths, degree, gamma, steps, c, init, run, eps, out)| {
                let mut g = 1.5;
                let gammas = steps
                    .iter()
                    .map(|s| {
                        g += s;
                        g
                    })
                    .collect();
                RunConfig {
                    cells: [cells.0, cells.1][..dim].to_vec(),
                    lengths: [lengths.0, lengths.1][..dim].to_vec(),
                    degree,
                    gamma,
                    gammas,
                    coeffs: PhysCoeffs {
                        mu: c.0,
                        lambda: c.1,
                        diffusion: c.2,
                        rot_diffusion: c.3,
                    },
                    rho0: init.0,
                    amplitude: init.1,
                    eta0: init.2,
                    perturbation: init.3,
                    seed: run.0,
                    t_final: run.1,
                    safety: run.2,
                    record_every: run.3,
                    snapshot_every: run.4,
                    eps,
                    output: out.into(),
                    ..RunConfig::default()
                }
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn serialize_then_parse_is_lossless(cfg in config_strategy()) {
        let text = cfg.serialize();
        let back = parse_config(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(normalize(&text).unwrap(), text);
    }
}
