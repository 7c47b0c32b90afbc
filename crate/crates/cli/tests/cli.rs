use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gmsfem_core::experiment::RunConfig;
use gmsfem_core::fields::CellField;
use gmsfem_core::grid::FineGrid;

fn gmsfem(out: &Path, args: &[&str]) -> Output {
    // defaults first so that later `--set` flags win
    Command::new(env!("CARGO_BIN_EXE_gmsfem"))
        .arg(args[0])
        .args(["--set", "n=16", "--set", "coarse=4"])
        .args(&args[1..])
        .arg("--output")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn print_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = gmsfem(dir.path(), &["print-config", "--set", "theta=0.3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let cfg = RunConfig::parse_str(&text).unwrap();
    assert_eq!((cfg.n, cfg.coarse, cfg.theta), (16, 4, 0.3));

    let file = dir.path().join("run.cfg");
    fs::write(&file, &text).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_gmsfem"))
        .args(["print-config", "--config"])
        .arg(&file)
        .output()
        .unwrap();
    assert_eq!(String::from_utf8(o.stdout).unwrap(), text);
}

#[test]
fn offline_online_writes_deterministic_history() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = gmsfem(d.path(), &["offline-online"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let ha = fs::read(a.path().join("offline-online_history.csv")).unwrap();
    let hb = fs::read(b.path().join("offline-online_history.csv")).unwrap();
    assert_eq!(ha, hb);
    let text = String::from_utf8(ha).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iteration,phase,dof,e1,e2,sum_eta2,wall_ms"));
    let phases: Vec<&str> = lines.map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(phases.iter().filter(|p| **p == "online").count(), 4);
    assert!(a.path().join("eigenvalues.csv").exists());
}

#[test]
fn strategy_subcommands_write_histories() {
    let d = tempfile::tempdir().unwrap();
    for (cmd, file) in [
        ("offline-adaptive", "offline-adaptive_history.csv"),
        ("uniform", "uniform_history.csv"),
        ("online", "online_history.csv"),
    ] {
        let o = gmsfem(d.path(), &[cmd, "--dump"]);
        assert!(o.status.success(), "{cmd}: {}", stderr(&o));
        assert!(d.path().join(file).exists());
    }
    assert!(d.path().join("uniform_basis.txt").exists());
}

#[test]
fn solve_fine_writes_fields() {
    let d = tempfile::tempdir().unwrap();
    let o = gmsfem(d.path(), &["solve-fine", "--dump"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let grid = FineGrid::new(16).unwrap();
    let kappa = CellField::read_raster(d.path().join("kappa.txt"), &grid).unwrap();
    assert_eq!((kappa.min(), kappa.max()), (1.0, 10.0));
    let sol = fs::read_to_string(d.path().join("fine_solution.txt")).unwrap();
    assert_eq!(sol.lines().count(), grid.num_edges());
    let header = fs::read_to_string(d.path().join("matrix.txt")).unwrap();
    assert!(header.starts_with(&format!("{0} {0} ", grid.num_interior_edges())));
}

#[test]
fn kappa_raster_is_read_back() {
    let d = tempfile::tempdir().unwrap();
    assert!(gmsfem(d.path(), &["solve-fine"]).status.success());
    let raster = d.path().join("kappa.txt");
    let a = gmsfem(d.path(), &["snapshot-error"]);
    let b = gmsfem(
        d.path(),
        &["snapshot-error", "--set", &format!("kappa_raster={}", raster.display())],
    );
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn studies_write_tables() {
    let d = tempfile::tempdir().unwrap();
    let o = gmsfem(
        d.path(),
        &["convergence-study", "--set", "coarse_list=2,4", "--set", "power_list=2,4"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(d.path().join("convergence.csv")).unwrap();
    assert_eq!(table.lines().next(), Some("H,1e2,1e4"));
    assert_eq!(table.lines().count(), 3);

    let o = gmsfem(d.path(), &["adaptive-vs-uniform"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cmp = fs::read_to_string(d.path().join("comparison.csv")).unwrap();
    assert!(cmp.starts_with("dof,adaptive_e1,uniform_e1\n"));
}

#[test]
fn errors_map_to_exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let cases: [(&[&str], i32, &str); 4] = [
        (&["print-config", "--set", "bogus=1"], 2, "error[config]"),
        (&["solve-fine", "--set", "coarse=3"], 3, "error[mesh]"),
        (&["offline-online", "--set", "theta=2"], 2, "error[config]"),
        (&["solve-fine", "--set", "kappa_raster=/nonexistent/k.txt"], 5, "error[io]"),
    ];
    for (args, code, class) in cases {
        let o = gmsfem(d.path(), args);
        assert_eq!(o.status.code(), Some(code), "{args:?}: {}", stderr(&o));
        assert!(stderr(&o).starts_with(class), "{}", stderr(&o));
    }
    let o = gmsfem(d.path(), &["solve-fine", "--set", "pattern=zigzag"]);
    assert!(!o.status.success());
}
