use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn exboot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exboot")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn data_rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn simulate_is_deterministic_and_sized() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (path, threads) in [(&a, "1"), (&b, "8")] {
        let o = exboot(&["simulate", "--n", "5", "--seed", "9", "--threads", threads, "--out", path.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let rows = data_rows(&text);
    assert_eq!(rows[0], "y,delta,z1");
    assert_eq!(rows.len(), 6);
    assert!(text.starts_with("# tool_version = "));
    assert!(text.contains("# config = {"));
}

#[test]
fn invalid_censoring_rate_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "[simulation]\nn = 50\ntheta0 = [0.5]\nbaseline = \"constant(rate=1)\"\ncovariates = \"uniform\"\ncensoring = \"exponential(rate=-1)\"\ntau = 1.5\n");
    let out = dir.path().join("x.csv");
    let o = exboot(&["--config", &config, "simulate", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("censoring"), "{}", stderr(&o));
    assert!(stderr(&o).contains("rate"), "{}", stderr(&o));
}

#[test]
fn invalid_sizes_and_unknown_keys_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = exboot(&["simulate", "--n", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("simulation.n"), "{}", stderr(&o));

    let config = write_config(dir.path(), "[bootstrap]\nB = 10\nreplicatez = 3\n");
    let o = exboot(&["--config", &config, "simulate", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("replicatez"), "{}", stderr(&o));
}

#[test]
fn missing_input_is_an_io_error() {
    let o = exboot(&["fit", "--data", "/nonexistent/data.csv"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn fixed_theta_fit_reports_nelson_aalen() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("fixture.csv");
    fs::write(&data, "y,delta,z1\n1,1,0.4\n2,1,1.1\n3,0,-0.2\n").unwrap();
    let report = dir.path().join("fit.json");
    let o = exboot(&["fit", "--data", data.to_str().unwrap(), "--fix-theta", "0", "--out", report.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let hazard = json["cumulative_hazard"].as_array().unwrap();
    let at_two = hazard.iter().find(|row| row["time"] == 2.0).unwrap();
    assert!((at_two["cumulative"].as_f64().unwrap() - 5.0 / 6.0).abs() < 1e-15);
    assert_eq!(json["theta_fixed"], true);
    assert!(json["tool_version"].is_string());
}

#[test]
fn ones_bootstrap_is_degenerate_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    assert!(exboot(&["simulate", "--n", "100", "--out", data.to_str().unwrap()]).status.success());
    let out = dir.path().join("boot");
    let o = exboot(&["bootstrap", "--data", data.to_str().unwrap(), "--scheme", "ones", "--B", "20", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("bootstrap.json")).unwrap()).unwrap();
    assert_eq!(json["degenerate"], true);
    assert_eq!(json["bootstrap_variance"][0][0].as_f64(), Some(0.0));
    let theta = json["theta_hat"][0].as_f64().unwrap();
    for set in json["confidence_sets"].as_array().unwrap() {
        assert_eq!(set["degenerate"], true);
        assert_eq!(set["lower"][0].as_f64(), Some(theta));
        assert_eq!(set["upper"][0].as_f64(), Some(theta));
    }
    assert!(String::from_utf8_lossy(&o.stdout).contains("degenerate"));
}

#[test]
fn bootstrap_outputs_do_not_depend_on_threads() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    assert!(exboot(&["simulate", "--n", "200", "--seed", "3", "--out", data.to_str().unwrap()]).status.success());
    let mut outputs = Vec::new();
    for threads in ["1", "8"] {
        let out = dir.path().join(format!("boot{threads}"));
        let o = exboot(&[
            "bootstrap", "--data", data.to_str().unwrap(), "--scheme", "polya(alpha=1)", "--B", "300", "--threads", threads,
            "--sigma", "profile", "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push(
            ["replicates.csv", "bootstrap.json", "confidence_sets.csv"].map(|f| fs::read(out.join(f)).unwrap()),
        );
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn verify_weights_efron_reports_fifth_moment_below_bound() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w");
    let o = exboot(&["verify", "weights", "--scheme", "efron", "--out", out.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&o.stdout).into_owned();
    assert!(o.status.success(), "{stdout}\n{}", stderr(&o));
    let line = stdout.lines().find(|l| l.contains("fifth_moment_below_52")).unwrap();
    assert!(line.starts_with("PASS"), "{line}");
    assert!(out.join("weights.json").exists());
    assert!(out.join("weights_conditions_efron.csv").exists());
}

#[test]
fn failing_checks_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "[simulation]\nn = 100\ntheta0 = [0.5]\nbaseline = \"constant(rate=1)\"\ncovariates = \"uniform\"\ncensoring = \"exponential(rate=0.35)\"\ntau = 1.5\n\
         [bootstrap]\nB = 50\n[experiment]\nn_grid = [100]\nmc_reps = 5\n[experiment.tolerances]\ncoverage_t = 0.0\ncoverage_other = 0.0\n",
    );
    let out = dir.path().join("cov");
    let o = exboot(&["--config", &config, "verify", "coverage", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL coverage_t_type"));
    let table = fs::read_to_string(out.join("coverage_coverage_t_type.csv")).unwrap();
    assert!(table.contains("# config = "));
    assert!(table.contains("n,coordinate,value,standard_error,target"));
}

#[test]
fn config_command_round_trips() {
    let o = exboot(&["config", "--seed", "17"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("seed = 17"));
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &text);
    let again = exboot(&["--config", &config, "config"]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
}
