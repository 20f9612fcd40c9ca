//! Binary-level tests: flag handling, exit codes, artifact contents.

use std::path::Path;
use std::process::Command;

fn privtab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_privtab"))
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn fixture(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf, std::path::PathBuf) {
    let domain = dir.join("domain.json");
    write(
        &domain,
        r#"{"attrs":[
            {"name":"g","kind":"categorical","values":["m","f"]},
            {"name":"age","kind":"numeric","bin_edges":[0,30,60,90]},
            {"name":"q","kind":"categorical","values":["x","y","z"]}
        ]}"#,
    );
    let data = dir.join("data.csv");
    let mut csv = String::from("g,age,q\n");
    for i in 0..200usize {
        csv.push_str(&format!(
            "{},{},{}\n",
            if i % 3 == 0 { "m" } else { "f" },
            (i * 7) % 90,
            ["x", "y", "z"][(i * 5) % 3]
        ));
    }
    write(&data, &csv);
    let config = dir.join("marginals.json");
    write(&config, r#"{"marginals": [["g","age"],["age","q"]]}"#);
    (domain, data, config)
}

#[test]
fn synth_writes_artifacts_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let (domain, data, config) = fixture(dir.path());
    let out = dir.path().join("out");
    let status = privtab()
        .args(["synth", "--epsilon", "5", "--delta", "1e-8", "--seed", "3"])
        .arg("--data")
        .arg(&data)
        .arg("--domain")
        .arg(&domain)
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    for name in ["synthetic.csv", "marginals.json", "manifest.json"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    // the synthetic CSV has the same record count and header
    let synth = std::fs::read_to_string(out.join("synthetic.csv")).unwrap();
    assert_eq!(synth.lines().count(), 201);
    assert_eq!(synth.lines().next(), Some("g,age,q"));

    // eval on identical files scores both generic metrics at 10^6
    let output = privtab()
        .args(["eval", "--trials", "50", "--seed", "1"])
        .arg("--data")
        .arg(&data)
        .arg("--synth")
        .arg(&data)
        .arg("--domain")
        .arg(&domain)
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(report["density"], 1e6);
    assert_eq!(report["range"], 1e6);
    assert!(report.get("gini_gap").is_none());

    // inspect prints one line per archived marginal
    let output = privtab()
        .arg("inspect")
        .arg("--archive")
        .arg(out.join("marginals.json"))
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    assert!(text.contains("marginal g*age"), "{text}");
}

#[test]
fn missing_input_file_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let (domain, _, config) = fixture(dir.path());
    let status = privtab()
        .args(["synth"])
        .arg("--data")
        .arg(dir.path().join("nope.csv"))
        .arg("--domain")
        .arg(&domain)
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    let status = privtab()
        .args(["eval", "--data", "nope.csv", "--synth", "nope.csv"])
        .arg("--domain")
        .arg(&domain)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn validation_error_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let (domain, data, config) = fixture(dir.path());
    // epsilon must be positive
    let status = privtab()
        .args(["synth", "--epsilon=-1"])
        .arg("--data")
        .arg(&data)
        .arg("--domain")
        .arg(&domain)
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn noise_plan_single_row_chooses_laplace_basic() {
    let output = privtab()
        .args(["noise-plan", "--epsilon", "1", "--delta", "1e-8", "--k-max", "1"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("k,std_lap_basic,std_lap_adv,std_lap_zcdp,std_gauss_adv,std_gauss_zcdp,chosen")
    );
    let row = lines.next().unwrap();
    assert!(row.starts_with("1,"));
    assert!(row.ends_with(",lap_basic"));
    assert_eq!(lines.next(), None);
}

#[test]
fn indif_output_is_deterministic_and_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let (domain, data, _) = fixture(dir.path());
    let run = || {
        let output = privtab()
            .arg("indif")
            .arg("--data")
            .arg(&data)
            .arg("--domain")
            .arg(&domain)
            .output()
            .unwrap();
        assert!(output.status.success());
        String::from_utf8(output.stdout).unwrap()
    };
    let a = run();
    assert_eq!(a, run());
    assert_eq!(a.lines().count(), 4); // header + C(3,2) pairs
    let values: Vec<f64> = a
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(values.windows(2).all(|w| w[0] >= w[1]), "not descending: {a}");
}

#[test]
fn run_config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let (domain, data, config) = fixture(dir.path());
    let run_config = dir.path().join("run.json");
    // file sets a bogus seed; the flag must win
    std::fs::write(
        &run_config,
        format!(
            r#"{{"data": {:?}, "domain": {:?}, "config": {:?}, "out": {:?},
                "epsilon": 5.0, "delta": 1e-8, "seed": 1, "iterations": 10}}"#,
            data.display(),
            domain.display(),
            config.display(),
            dir.path().join("out_a").display()
        ),
    )
    .unwrap();
    let status = privtab()
        .args(["synth", "--seed", "99"])
        .arg("--run-config")
        .arg(&run_config)
        .status()
        .unwrap();
    assert!(status.success());
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out_a").join("manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["seed"], 99);
    assert_eq!(manifest["epsilon"], 5.0);
}
