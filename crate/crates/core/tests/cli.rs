use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL_RUN: &str = r#"
seed = 11

[sequence]
venc = 1.5
matrix = [28, 12, 24]
cardiac_phases = 4
time_spacing = 234.0

[windkessel]
cycles = 2
"#;

fn hemoflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hemoflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn run_into(config: &Path, out: &Path) {
    let o = hemoflow(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "run",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn repeated_runs_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_RUN);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_into(&config, &a);
    run_into(&config, &b);

    let manifest_a = std::fs::read(a.join("manifest.json")).unwrap();
    let manifest_b = std::fs::read(b.join("manifest.json")).unwrap();
    assert_eq!(manifest_a, manifest_b);
    for model in ["power_law", "newtonian_fit", "newtonian_0.004"] {
        let rel = format!("stats/{model}.csv");
        assert_eq!(
            std::fs::read(a.join(&rel)).unwrap(),
            std::fs::read(b.join(&rel)).unwrap()
        );
    }

    // report layout: three parameter tables of four segments plus the
    // cross-segment row
    let report = std::fs::read_to_string(a.join("report/report.md")).unwrap();
    for param in ["wss", "osi", "el_rate"] {
        assert!(report.contains(&format!("## {param} (")), "{param}");
        assert!(a.join(format!("report/{param}.svg")).is_file());
    }
    for segment in ["AAo", "AArch", "pDAo", "dDAo", "all"] {
        let prefix = format!("| {segment} |");
        // 3 value tables and one difference table per compared model
        assert_eq!(
            report.lines().filter(|l| l.starts_with(&prefix)).count(),
            3 + 5,
            "{segment}"
        );
    }

    let other_seed = dir.path().join("c");
    let o = hemoflow(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        other_seed.to_str().unwrap(),
        "--seed",
        "12",
        "run",
    ]);
    assert!(o.status.success());
    assert_ne!(
        std::fs::read(a.join("stats/power_law.csv")).unwrap(),
        std::fs::read(other_seed.join("stats/power_law.csv")).unwrap()
    );
}

#[test]
fn stages_chain_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_RUN);
    let out = dir.path().join("out");
    let base = ["--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    for stage in [
        "synth-mri",
        "reconstruct",
        "estimate",
        "compare",
        "report",
        "windkessel",
    ] {
        let o = hemoflow(&[&base[..], &[stage]].concat());
        assert!(o.status.success(), "{stage}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read_dir(out.join("kspace")).unwrap().count(), 8);
    assert!(out.join("compare/newtonian_fit.csv").is_file());
    let pressure = std::fs::read_to_string(out.join("windkessel/pressure.csv")).unwrap();
    assert!(pressure.starts_with("t,p_wk,p_d\n"));
}

#[test]
fn compare_identical_inputs_gives_zero_differences() {
    let dir = tempfile::tempdir().unwrap();
    let stats = dir.path().join("s.csv");
    std::fs::write(
        &stats,
        "segment,frame,param,mean,std\nAAo,0,wss,1.5,0.1\nAArch,0,wss,2.0,0.2\npDAo,0,wss,,\ndDAo,0,wss,0.5,0.0\nall,0,wss,1.25,0.6\n",
    )
    .unwrap();
    let cmp = dir.path().join("cmp.csv");
    let o = hemoflow(&[
        "compare",
        "--reference",
        stats.to_str().unwrap(),
        "--other",
        stats.to_str().unwrap(),
        "--output",
        cmp.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut reader = csv::Reader::from_path(&cmp).unwrap();
    let headers = reader.headers().unwrap().clone();
    let abs = headers.iter().position(|h| h == "abs_diff").unwrap();
    let rel = headers.iter().position(|h| h == "rel_diff_percent").unwrap();
    let mut rows = 0;
    for record in reader.records() {
        let record = record.unwrap();
        for col in [abs, rel] {
            if !record[col].is_empty() {
                assert_eq!(record[col].parse::<f64>().unwrap(), 0.0);
            }
        }
        rows += 1;
    }
    assert_eq!(rows, 5);
}

#[test]
fn unknown_config_key_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "[sequence]\nvenk = 1.5\n");
    let o = hemoflow(&["--config", config.to_str().unwrap(), "run"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("venk"));
}

#[test]
fn infeasible_sequence_exits_with_numerical_code() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "[sequence]\nmax_gradient = 5.0\n");
    let out = dir.path().join("out");
    let o = hemoflow(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "synth-mri",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("synth-mri"));
}

#[test]
fn fit_rheology_prints_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = hemoflow(&["--out", out.to_str().unwrap(), "fit-rheology", "--hct", "40"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    for key in ["m = ", "n = ", "newtonian fit 1", "newtonian fit 2"] {
        assert!(text.contains(key), "{text}");
    }
    assert!(out.join("rheology/params.csv").is_file());

    let o = hemoflow(&["--out", out.to_str().unwrap(), "fit-rheology", "--hct", "90"]);
    assert_eq!(o.status.code(), Some(2));
}
