use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

const SMALL: &str = "\
kgrid_size = 64
k_points = 11
cells = 120
width = 5
duration = 3
density_stride = 10
amp_count = 2
omega_count = 2
amp_max = 3
omega_min = 4.5
omega_max = 6
";

fn floquet(dir: &Path, config: &str, args: &[&str]) -> (i32, String) {
    let conf = dir.join("run.conf");
    fs::write(&conf, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_floquet"))
        .arg("--config")
        .arg(&conf)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join("out").join(name)).unwrap()
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&read(dir, name)).unwrap()
}

#[test]
fn trajectory_schema_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = floquet(dir.path(), SMALL, &["--command", "trajectory"]);
    assert_eq!(code, 0, "{err}");
    let csv = read(dir.path(), "trajectory.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,x_exact,v_exact,norm,x_first_order,x_lowfreq");
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols.len(), 6);
    }
    let terms = json(dir.path(), "comterms.json");
    assert_eq!(terms["frequencies"][1].as_f64().unwrap(), -0.5);
    assert_eq!(terms["lowfreq_index"], 1);
    let m = json(dir.path(), "manifest.json");
    let files: Vec<&str> = m["files"].as_array().unwrap().iter().map(|f| f["path"].as_str().unwrap()).collect();
    assert_eq!(files, ["trajectory.csv", "comterms.json"]);
}

#[test]
fn phase_diagram_rows_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = floquet(dir.path(), "command = phase-diagram\n", &["--config-check-unused"]);
    // unknown flags are a usage error
    assert_eq!(code, 2, "{err}");

    let (code, err) = floquet(dir.path(), &format!("command = phase-diagram\n{SMALL}"), &[]);
    assert_eq!(code, 0, "{err}");
    let csv = read(dir.path(), "phase_diagram.csv");
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.starts_with("A,omega,nu0,nupi,gap0,gappi,status\n"));
    let m = json(dir.path(), "manifest.json");
    assert_eq!(m["command"], "phase-diagram");
    assert_eq!(m["config"]["kgrid_size"], "64");
    assert_eq!(m["numerics"]["tolerances"]["struct_tol"].as_f64().unwrap(), 1e-6);
    // every accepted key is recorded, derived ones resolved
    assert_eq!(m["config"].as_object().unwrap().len(), floquet_cli::config::KEYS.len());
    assert_eq!(m["config"]["center"], "60.0");
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let mut seen: Vec<Vec<String>> = Vec::new();
    for workers in ["1", "3"] {
        let dir = tempfile::tempdir().unwrap();
        let mut texts = Vec::new();
        for (command, file) in [
            ("phase-diagram", "phase_diagram.csv"),
            ("trajectory", "trajectory.csv"),
            ("density", "density.csv"),
            ("spectrum", "spectrum.csv"),
        ] {
            let (code, err) = floquet(dir.path(), SMALL, &["--command", command, "--workers", workers]);
            assert_eq!(code, 0, "{err}");
            texts.push(read(dir.path(), file));
        }
        seen.push(texts);
    }
    assert_eq!(seen[0], seen[1]);
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = floquet(dir.path(), "command = spectrum\nbogus = 1\n", &[]);
    assert_eq!(code, 2);
    assert!(err.contains("unknown key 'bogus'"), "{err}");
    let e = json(dir.path(), "error.json");
    assert_eq!(e["kind"], "config");
    assert_eq!(e["exit_code"], 2);

    let (code, _) = floquet(dir.path(), SMALL, &["--command", "spectrum", "--workers", "0"]);
    assert_eq!(code, 2);
    let (code, _) = floquet(dir.path(), SMALL, &[]);
    assert_eq!(code, 2, "missing command");
}

#[test]
fn numerical_failure_names_module_and_parameters() {
    let dir = tempfile::tempdir().unwrap();
    // the π gap closes exactly at k = 0 when ω equals the static band width 5
    let (code, err) = floquet(dir.path(), "command = invariants\namp = 3\nomega = 5\nkgrid_size = 64\n", &[]);
    assert_eq!(code, 3, "{err}");
    let e = json(dir.path(), "error.json");
    assert_eq!(e["kind"], "numeric");
    assert_eq!(e["code"], "gap-closed");
    assert_eq!(e["module"], "topology");
    assert_eq!(e["parameters"]["amp"].as_f64().unwrap(), 3.0);
    assert_eq!(e["parameters"]["omega"].as_f64().unwrap(), 5.0);
}

#[test]
fn invariants_json_mirrors_report() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = floquet(dir.path(), "command = invariants\nomega = 20\nkgrid_size = 128\n", &[]);
    assert_eq!(code, 0, "{err}");
    let r = json(dir.path(), "invariants.json");
    assert_eq!((r["nu0"].as_i64(), r["nupi"].as_i64()), (Some(1), Some(0)));
    assert_eq!(r["kgrid"], 128);
    assert!(r["residuals"]["integer_deficit"].as_f64().unwrap() < 1e-6);
}

#[test]
fn validate_reports_every_check() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = floquet(dir.path(), SMALL, &["--command", "validate"]);
    assert_eq!(code, 0, "{err}");
    let v = json(dir.path(), "validate.json");
    assert_eq!(v["passed"], true);
    let names: Vec<&str> = v["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(
        names,
        [
            "quasienergy-agreement",
            "integrator-order",
            "dual-path-position",
            "norm-conservation",
            "winding-route-equivalence",
            "heisenberg-identity"
        ]
    );
}

#[test]
fn figure_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = floquet(dir.path(), SMALL, &["--command", "reproduce-figures"]);
    assert_eq!(code, 0, "{err}");
    let m = json(dir.path(), "manifest.json");
    let files = m["files"].as_array().unwrap();
    for f in files {
        assert!(dir.path().join("out").join(f["path"].as_str().unwrap()).exists());
    }
    let kinds = |k: &str| files.iter().filter(|f| f["kind"] == k).count();
    assert_eq!((kinds("phase-diagram"), kinds("density"), kinds("spectrum")), (1, 2, 1));
    assert_eq!(kinds("trajectory"), 6);

    // both exact and first-order columns populated at the first-figure parameters
    let csv = read(dir.path(), "fig2a_trajectory.csv");
    let last = csv.lines().last().unwrap();
    assert!(last.split(',').all(|c| !c.is_empty()), "{last}");

    let k0 = files
        .iter()
        .find(|f| f["path"] == "fig3c_amp6.5_trajectory.csv")
        .map(|f| f["k0"].as_f64().unwrap())
        .unwrap();
    assert!((k0 - (1.0f64 / 1.5).acos()).abs() < 1e-15);
    assert!((k0 - 0.8411).abs() < 1e-4);
    // the moving packet has no closed-form comparison
    assert!(read(dir.path(), "fig3c_amp6.5_trajectory.csv").lines().nth(1).unwrap().ends_with(",,"));
}

#[test]
fn library_entry_point_prints_defaults() {
    let cli = floquet_cli::Cli {
        config: None,
        out: std::env::temp_dir(),
        workers: None,
        command: None,
        print_defaults: true,
    };
    assert_eq!(floquet_cli::run(&cli), 0);
}
