use std::fs;
use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_stsqm"));
    c.env_remove("STSQM_OUT_DIR");
    c
}

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

#[test]
fn list_kinds_names_every_kind() {
    let out = bin().arg("list-kinds").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for kind in stsqm::scenario::ScenarioKind::ALL {
        assert!(text.contains(kind.name()), "{kind} missing from\n{text}");
    }
}

#[test]
fn validate_echoes_defaults() {
    let out = bin().args(["validate"]).arg(config("toa-1d.toml")).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("hbar = 1.0") && text.contains("tail_tolerance"), "{text}");
    let echoed = stsqm::scenario::parse_config(&text).unwrap();
    assert_eq!(echoed.planes, vec![2.0, 5.0, 10.0]);
}

#[test]
fn validate_rejects_unknown_keys_with_exit_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    fs::write(&p, "kind = \"operator-algebra\"\nhbarr = 1.0\n").unwrap();
    let out = bin().arg("validate").arg(&p).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hbarr"));
}

#[test]
fn run_honours_out_then_env_then_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("algebra.toml");
    let from_config = dir.path().join("from-config");
    fs::write(&cfg, format!("kind = \"operator-algebra\"\n[algebra]\nsamples = 50\n[output]\ndir = {:?}\n", from_config.to_str().unwrap())).unwrap();

    assert!(bin().arg("run").arg(&cfg).status().unwrap().success());
    assert!(from_config.join("algebra.csv").exists());

    let from_env = dir.path().join("from-env");
    assert!(bin().arg("run").arg(&cfg).env("STSQM_OUT_DIR", &from_env).status().unwrap().success());
    assert!(from_env.join("manifest.toml").exists());

    let from_cli = dir.path().join("from-cli");
    let st = bin().arg("run").arg(&cfg).arg("--out").arg(&from_cli).env("STSQM_OUT_DIR", &from_env).status().unwrap();
    assert!(st.success());
    assert!(from_cli.join("algebra.csv").exists());
}

#[test]
fn seed_flag_overrides_config_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str, out: &str| {
        let o = dir.path().join(out);
        assert!(bin().arg("run").arg(config("operator-algebra.toml")).args(["--seed", seed, "--out"]).arg(&o).status().unwrap().success());
        (fs::read_to_string(o.join("manifest.toml")).unwrap(), fs::read(o.join("algebra.csv")).unwrap())
    };
    let (m1, a1) = run("1", "a");
    let (_, a1b) = run("1", "b");
    let (_, a2) = run("2", "c");
    assert!(m1.contains("seed = 1"));
    assert_eq!(a1, a1b);
    assert_ne!(a1, a2);
}

#[test]
fn run_failure_reports_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("step.toml");
    fs::write(
        &cfg,
        "kind = \"stationary-ode\"\n[grids.x]\nn = 201\nlo = -10.0\nhi = 10.0\n[stationary]\nenergy = 2.0\npotential = { kind = \"smooth-step\", height = 1.0, width = 0.5 }\n",
    )
    .unwrap();
    let out = bin().arg("run").arg(&cfg).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage `integrate`"));
}
