use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use surfacelink::link::{exhaustive_discrete, element_terms, DiscreteSettings};
use surfacelink::scattering::{DiffractionParams, RcsModelKind};
use surfacelink_cli::config::RunConfig;

const BIN: &str = env!("CARGO_BIN_EXE_surfacelink");

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

const SURFACE: &str = "[surface]\nn_v = 4\nn_h = 4\n";

#[test]
fn rcs_boresight_and_zero_mu_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!("{SURFACE}[diffraction]\nmu = 0.0\n[rcs]\nquads = [[0.0, 0.0, 0.0, 0.0], [40.0, 180.0, 20.0, 30.0]]\n"),
    );
    let o = run(&["rcs"], &cfg, dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("rcs.csv")).unwrap();
    let rows = data_lines(&csv);
    assert_eq!(rows[0], "theta_i,phi_i,theta_s,phi_s,sigma_metal_m2,sigma_ris_m2,sigma_tang,diffraction_factor");
    let lambda = RunConfig::load(&cfg).unwrap().lambda().unwrap();
    let boresight: Vec<f64> = rows[1].split(',').map(|v| v.parse().unwrap()).collect();
    let expected = std::f64::consts::PI * lambda * lambda / 4.0;
    assert!((boresight[4] - expected).abs() <= 1e-11 * expected, "{} vs {expected}", boresight[4]);
    for row in &rows[1..] {
        let v: Vec<&str> = row.split(',').collect();
        assert_eq!(v[4], v[5], "mu = 0 must leave the RIS column equal to the metal column");
    }
}

#[test]
fn rcs_five_degree_grid_has_1296_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SURFACE}[rcs]\ngrid = {{ theta_i = 30.0, phi_i = 180.0, step = 5.0 }}\n"));
    let o = run(&["rcs"], &cfg, dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("rcs.csv")).unwrap();
    assert_eq!(data_lines(&csv).len(), 1 + 18 * 72);
}

const SWEEP: &str = r#"
[sweep]
kind = "distance"
zenith = 30.0
d_min_meters = 0.5
d_max_meters = 2.0
n_steps = 7

[[sweep.models]]
label = "ris"
model = "ris"
policy = "ris_continuous"

[[sweep.models]]
label = "metal"
model = "metal"
policy = "metal_rotated"

[[sweep.models]]
label = "tang"
model = "tang"
policy = "ris_continuous"
"#;

#[test]
fn sweep_layout_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SURFACE}{SWEEP}"));
    let o = run(&["sweep"], &cfg, dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows = data_lines(&csv);
    assert_eq!(rows[0], "x,p_ris_watts,p_ris_dbm,p_metal_watts,p_metal_dbm,p_tang_watts,p_tang_dbm");
    assert_eq!(rows.len(), 1 + 7);
    for r in &rows[1..] {
        let v: Vec<f64> = r.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(v.len(), 7);
        assert!(v.iter().all(|x| x.is_finite()));
    }

    // the sidecar is itself a loadable config with every default resolved
    let meta = RunConfig::load(&dir.path().join("sweep.meta.toml")).unwrap();
    let original = RunConfig::load(&cfg).unwrap();
    assert_eq!(meta, original.resolved().unwrap());
    assert_eq!(meta.sweep_plan().unwrap(), original.sweep_plan().unwrap());
}

#[test]
fn sweep_reruns_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("[surface]\nn_v = 24\nn_h = 24\n{SWEEP}"));
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "3", "3"].iter().enumerate() {
        let out = dir.path().join(format!("run{i}"));
        let o = run(&["sweep", "--threads", threads], &cfg, &out);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push((
            std::fs::read(out.join("sweep.csv")).unwrap(),
            std::fs::read(out.join("sweep.meta.toml")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
}

const OPTIMIZE_2X2: &str = r#"
[surface]
n_v = 2
n_h = 2

[diffraction]
mu = 0.2

[scene]
tx_meters = [-0.3, 0.05, 0.4]
rx_meters = [0.2, -0.1, 0.5]

[optimize]
levels = 2
"#;

fn report(out: &Path) -> Vec<(String, f64)> {
    let text = std::fs::read_to_string(out.join("optimize_report.csv")).unwrap();
    data_lines(&text)[1..]
        .iter()
        .map(|l| {
            let v: Vec<&str> = l.split(',').collect();
            (v[0].to_string(), v[1].parse().unwrap())
        })
        .collect()
}

#[test]
fn optimize_matches_exhaustive_and_reloads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path(), OPTIMIZE_2X2);
    let first = dir.path().join("first");
    let o = run(&["optimize"], &cfg_path, &first);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stages = report(&first);
    let get = |name: &str| stages.iter().find(|s| s.0 == name).unwrap().1;
    assert!(get("continuous") >= get("greedy") && get("greedy") >= get("uniform"));

    // 16-case enumeration
    let cfg = RunConfig::load(&cfg_path).unwrap();
    let params = cfg.params().unwrap();
    let terms = element_terms(&cfg.scene().unwrap(), &params, &RcsModelKind::Ris(DiffractionParams::new(0.2).unwrap())).unwrap();
    let (_, best) = exhaustive_discrete(&terms, &DiscreteSettings::new(2, 10), 16).unwrap();
    let p_best = params.p_t() * params.lambda().powi(2) / (4.0 * std::f64::consts::PI) * best * best;
    assert!((get("greedy") - p_best).abs() <= 1e-9 * p_best, "{} vs {p_best}", get("greedy"));

    // reload the written configuration as a fixed one
    std::fs::copy(first.join("configuration.csv"), dir.path().join("saved.csv")).unwrap();
    let reload = write_config(dir.path(), &format!("{OPTIMIZE_2X2}fixed_configuration = \"saved.csv\"\n"));
    let second = dir.path().join("second");
    let o = run(&["optimize"], &reload, &second);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stages = report(&second);
    let fixed = stages.iter().find(|s| s.0 == "fixed").unwrap().1;
    assert_eq!(fixed, get("greedy"));
}

#[test]
fn exit_code_for_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SURFACE}bogus_key = 1\n[rcs]\nquads = [[0.0, 0.0, 0.0, 0.0]]\n"));
    let o = run(&["rcs"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus_key"));

    let cfg = write_config(dir.path(), &format!("{SURFACE}[diffraction]\nmu = 2.0\n[rcs]\nquads = [[0.0, 0.0, 0.0, 0.0]]\n"));
    let o = run(&["rcs"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mu"));

    // subcommand without its section
    let cfg = write_config(dir.path(), SURFACE);
    assert_eq!(run(&["sweep"], &cfg, dir.path()).status.code(), Some(2));
}

#[test]
fn exit_code_for_scene_violation() {
    let dir = tempfile::tempdir().unwrap();
    let body = OPTIMIZE_2X2.replace("rx_meters = [0.2, -0.1, 0.5]", "rx_meters = [0.2, -0.1, -0.5]");
    let cfg = write_config(dir.path(), &body);
    let o = run(&["optimize"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rx"));
}

#[test]
fn oracle_check_pass_and_underresolution() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!("{SURFACE}[oracle]\ntheta_step = 17.0\nphi_step = 30.0\ncell_sizes_wavelengths = [0.5]\n"),
    );
    let o = run(&["oracle-check"], &cfg, dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS"));

    let cfg = write_config(
        dir.path(),
        &format!("{SURFACE}[oracle]\nn_points_x = 4\nn_points_y = 4\ntheta_step = 17.0\nphi_step = 30.0\ncell_sizes_wavelengths = [1.0]\n"),
    );
    assert_eq!(run(&["oracle-check"], &cfg, dir.path()).status.code(), Some(4));
}

#[test]
fn oracle_check_reports_failure_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    // resolved but too coarse for a tight threshold
    let cfg = write_config(
        dir.path(),
        &format!(
            "{SURFACE}[oracle]\nn_points_x = 8\nn_points_y = 8\nrule = \"midpoint_riemann\"\ntheta_step = 17.0\nphi_step = 30.0\ncell_sizes_wavelengths = [0.5]\nthreshold = 1e-9\n"
        ),
    );
    let o = run(&["oracle-check"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
    assert!(dir.path().join("oracle_report.csv").exists());
}
