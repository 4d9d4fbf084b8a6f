//! End-to-end checks of the batch binary: exit codes, output layout,
//! byte-identical reruns, and the location diagnostics on bad input.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tinsim"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

const TINY_SIM: &str = r#"
[[modes]]
frequency_hz = 410.0
quality_factor = 50.0
mass_kg = 1e-9
coupling_hz_per_m = 1.27e13
temperature_k = 298.0
damping = "viscous"

[cavity]
linewidth_hz = 1e6
detuning_nu = 0.0
wavelength_m = 786e-9
detection_efficiency = 0.4

[drive]
photon_number = 1e8

[grid]
sample_rate_hz = 16384.0
segment_len = 4096

[oracle]
duration_s = 3.0
settle_s = 1.0
seed = 3
imprecision_m2_per_hz = 1e-26
"#;

#[test]
fn budget_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    for sub in ["a", "b"] {
        let status = bin()
            .args(["budget", "--scenario"])
            .arg(scenario("desk_tin.toml"))
            .arg("--out")
            .arg(tmp.path().join(sub))
            .status()
            .unwrap();
        assert!(status.success());
    }
    for file in [
        "budget/intensity.csv",
        "budget/displacement.csv",
        "budget/intensity/tin.csv",
        "budget/dominance.txt",
        "budget/manifest.json",
        "budget/scenario.toml",
    ] {
        let a = std::fs::read(tmp.path().join("a").join(file)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical reruns");
    }
}

#[test]
fn simulate_layout_seed_and_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario_path = tmp.path().join("tiny.toml");
    std::fs::write(&scenario_path, TINY_SIM).unwrap();

    let run = |out: &Path, seed: Option<&str>| {
        let mut cmd = bin();
        cmd.args(["simulate", "--scenario"])
            .arg(&scenario_path)
            .arg("--out")
            .arg(out);
        if let Some(s) = seed {
            cmd.args(["--seed", s]);
        }
        assert!(cmd.status().unwrap().success());
    };
    run(&tmp.path().join("a"), None);
    run(&tmp.path().join("b"), None);
    run(&tmp.path().join("c"), Some("99"));

    let dir = tmp.path().join("a/simulate");
    for file in [
        "record.bin",
        "record.csv",
        "psd_y.csv",
        "psd_intensity.csv",
        "coherence_intensity_y.csv",
        "subband_rin.csv",
        "summary.txt",
        "scenario.toml",
        "manifest.json",
    ] {
        assert!(dir.join(file).exists(), "missing {file}");
    }

    let manifest = std::fs::read_to_string(dir.join("manifest.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(parsed["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(parsed["command"], "simulate");

    // The echoed scenario is itself a valid scenario.
    let echo = std::fs::read_to_string(dir.join("scenario.toml")).unwrap();
    assert!(echo.contains("frequency_hz = 410.0"));

    let a = std::fs::read(dir.join("record.bin")).unwrap();
    let b = std::fs::read(tmp.path().join("b/simulate/record.bin")).unwrap();
    let c = std::fs::read(tmp.path().join("c/simulate/record.bin")).unwrap();
    assert_eq!(a, b, "same seed must reproduce the record bit for bit");
    assert_ne!(a, c, "--seed must change the noise realization");
}

#[test]
fn unknown_key_is_an_input_error_with_location() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("typo.toml");
    std::fs::write(&path, TINY_SIM.replace("quality_factor", "qualit_factor")).unwrap();
    let output = bin()
        .args(["budget", "--scenario"])
        .arg(&path)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let err = stderr(&output);
    assert!(err.contains("qualit_factor"), "diagnostic should name the bad key: {err}");
    assert!(err.contains("typo.toml"), "diagnostic should name the file: {err}");
}

#[test]
fn over_determined_drive_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("drive.toml");
    std::fs::write(
        &path,
        TINY_SIM.replace("photon_number = 1e8", "photon_number = 1e8\ninput_power_w = 1e-3"),
    )
    .unwrap();
    let output = bin()
        .args(["tin", "--scenario"])
        .arg(&path)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("mutually exclusive"));
}

#[test]
fn simulate_without_oracle_section_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("no_oracle.toml");
    let text: String = TINY_SIM
        .lines()
        .take_while(|line| !line.starts_with("[oracle]"))
        .map(|line| format!("{line}\n"))
        .collect();
    std::fs::write(&path, text).unwrap();
    let output = bin()
        .args(["simulate", "--scenario"])
        .arg(&path)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("[oracle]"));
}

#[test]
fn runaway_feedback_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("runaway.toml");
    std::fs::write(
        &path,
        format!(
            "{TINY_SIM}\n[feedback]\ncenter_hz = 410.0\nq = 3.0\ngain_n_s_per_m = -1e-5\n"
        ),
    )
    .unwrap();
    let output = bin()
        .args(["simulate", "--scenario"])
        .arg(&path)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1), "{}", stderr(&output));
}

#[test]
fn bad_thread_count_env_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let output = bin()
        .env("TINSIM_THREADS", "three")
        .args(["budget", "--scenario"])
        .arg(scenario("desk_tin.toml"))
        .arg("--out")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("TINSIM_THREADS"));
}

#[test]
fn usage_error_exits_two() {
    let output = bin().arg("frobnicate").output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

/// The full acceptance suite through the binary: one block per criterion,
/// and a nonzero exit while the documented red criterion stands.
#[test]
fn verify_prints_all_criteria_and_exits_nonzero_on_red() {
    let tmp = tempfile::tempdir().unwrap();
    let output = bin()
        .args(["verify", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&output.stdout);
    for id in 1..=8 {
        assert!(
            stdout.contains(&format!("criterion {id}:")),
            "criterion {id} missing from report:\n{stdout}"
        );
    }
    assert!(stdout.contains("7 of 8 criteria passed"), "{stdout}");
    assert_eq!(output.status.code(), Some(1));
    let report = std::fs::read_to_string(tmp.path().join("verify/report.txt")).unwrap();
    assert_eq!(report, stdout);
}
