use prolate_enkf::harness::{parse_pgm, run_on_data, ExperimentConfig, RunMode, RENDER_SIZE};
use prolate_enkf::scattering::{full_far_field, DirectionSet, GridSpec};
use prolate_enkf::harness::{make_phantom, PhantomSpec};
use std::fs;
use std::process::Command;

const TINY: &str = "\
k = 3
N = 16
M = 20
N_e = 3
grid_invert = 30
grid_synth = 40
phantom = disk
disk_radius = 0.4
amplitude = 0.5 0.1
";

fn tiny() -> ExperimentConfig {
    ExperimentConfig::from_text(TINY).unwrap()
}

#[test]
fn config_text_round_trip() {
    let cfg = tiny();
    assert_eq!(ExperimentConfig::from_text(&cfg.to_text()).unwrap(), cfg);
    let mut three = ExperimentConfig::default();
    three.set("phantom", "three_rects").unwrap();
    assert_eq!(ExperimentConfig::from_text(&three.to_text()).unwrap(), three);
}

#[test]
fn cli_full_run_writes_images() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("tiny.cfg");
    fs::write(&config, TINY).unwrap();
    let out = dir.path().join("run");
    let status = Command::new(env!("CARGO_BIN_EXE_prolate-enkf"))
        .args(["full", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .args(["--seed", "4", "--M", "12"])
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let manifest = ExperimentConfig::load(out.join("manifest.txt")).unwrap();
    assert_eq!(manifest.enkf.seed, 4);
    assert_eq!(manifest.enkf.ensemble_size, 12);
    assert!(fs::read_to_string(out.join("manifest.txt")).unwrap().contains("status = complete"));
    for name in ["solution_re.pgm", "solution_im.pgm", "inverse_born_re.pgm", "truth_im.pgm", "iter_01_re.pgm"] {
        let (w, h, px) = parse_pgm(&fs::read(out.join(name)).unwrap()).unwrap();
        assert_eq!((w, h, px.len()), (RENDER_SIZE, RENDER_SIZE, RENDER_SIZE * RENDER_SIZE), "{name}");
    }
    let csv = fs::read_to_string(out.join("residuals.csv")).unwrap();
    assert!(csv.starts_with("iter,residual,gamma,lambda_max,stop_reason"));
}

#[test]
fn cli_refuses_inverse_crime() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_prolate-enkf"))
        .args(["synth", "--grid_synth", "30", "--grid_invert", "30", "--k", "2", "--N", "8"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn failed_run_leaves_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny();
    // An odd direction count cannot be split into opposite pairs.
    let grid = GridSpec::unit(40).unwrap();
    let q = make_phantom(&cfg.phantom, &grid).unwrap();
    let f = full_far_field(&q, cfg.k, &DirectionSet::new(15).unwrap()).unwrap();
    assert!(run_on_data(&cfg, &f, None, RunMode::InverseBorn, dir.path()).is_err());
    let text = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(text.contains("status = failed"));
    assert_eq!(ExperimentConfig::from_text(&text).unwrap(), cfg);
    assert!(dir.path().join("basis_summary.txt").exists());
}

#[test]
fn inverse_born_mode_skips_the_filter() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny();
    let q = make_phantom(&PhantomSpec::disk(0.4, prolate_enkf::Complex::new(0.5, 0.1)), &GridSpec::unit(40).unwrap()).unwrap();
    let f = full_far_field(&q, cfg.k, &DirectionSet::new(cfg.directions).unwrap()).unwrap();
    let b = run_on_data(&cfg, &f, Some(&q), RunMode::InverseBorn, dir.path()).unwrap();
    assert!(b.history.is_none() && b.solution.is_none());
    assert!(b.inverse_born_error.unwrap() < 1.0);
    assert!(!dir.path().join("residuals.csv").exists());
}
