use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn oseen(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oseen"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn selftest_passes_and_catches_bad_penalty() {
    let d = tempfile::tempdir().unwrap();
    let ok = oseen(&["selftest"], d.path());
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stdout));
    let bad = oseen(&["selftest", "--c11", "-1"], d.path());
    assert_eq!(code(&bad), 2);
    let text = String::from_utf8_lossy(&bad.stdout);
    assert!(text.lines().any(|l| l.starts_with("flux-penalties") && l.contains("FAIL")));
}

#[test]
fn converge_writes_table_and_is_reproducible() {
    let d = tempfile::tempdir().unwrap();
    let a = oseen(&["converge", "--scheme", "mixed", "--k", "0", "--levels", "4"], d.path());
    assert_eq!(code(&a), 0);
    let csv = fs::read_to_string(d.path().join("convergence_mixed_k0.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "h,dofs,err_u,rate_u,err_w,rate_w,err_p,rate_p,div_linf");
    assert_eq!(lines.count(), 4);
    let b = oseen(&["converge", "--scheme", "mixed", "--k", "0", "--levels", "4"], d.path());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn dg_table_has_energy_columns() {
    let d = tempfile::tempdir().unwrap();
    let o = oseen(&["converge", "--scheme", "dg", "--k", "0", "--levels", "3"], d.path());
    let csv = fs::read_to_string(d.path().join("convergence_dg_k0.csv")).unwrap();
    assert!(csv.starts_with("h,dofs,err_u,rate_u,err_w,rate_w,err_p,rate_p,div_linf,err_a,rate_a\n"));
    // Three coarse levels do not reach the asymptotic rate.
    assert_eq!(code(&o), 2);
}

#[test]
fn usage_errors_exit_one() {
    let d = tempfile::tempdir().unwrap();
    for args in [
        &["converge", "--levels", "1"][..],
        &["converge", "--k", "3"],
        &["converge", "--scheme", "cg"],
        &["transient", "--scenario", "nowhere"],
        &["solve", "--bogus"],
    ] {
        let o = oseen(args, d.path());
        assert_eq!(code(&o), 1, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn missed_rates_exit_two() {
    let d = tempfile::tempdir().unwrap();
    let o = oseen(&["converge", "--scheme", "mixed", "--k", "1", "--levels", "2"], d.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn zero_steps_give_header_only() {
    let d = tempfile::tempdir().unwrap();
    let o = oseen(&["transient", "--scenario", "open-cavity", "--steps", "0", "--dt", "0.1", "--nu", "0.001"], d.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(d.path().join("diagnostics.csv")).unwrap(), "t,E,P,E_phys,P_phys\n");
}

#[test]
fn open_cavity_four_snapshots() {
    let d = tempfile::tempdir().unwrap();
    let o = oseen(&["transient", "--scenario", "open-cavity", "--steps", "4", "--dt", "0.1", "--nu", "0.001"], d.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let snaps = fs::read_dir(d.path()).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "vtk")).count();
    assert_eq!(snaps, 4);
    let diag = fs::read_to_string(d.path().join("diagnostics.csv")).unwrap();
    assert_eq!(diag.lines().count(), 6);
    let vtk = fs::read_to_string(d.path().join("step_0004.vtk")).unwrap();
    assert!(vtk.starts_with("# vtk DataFile Version"));
    assert!(vtk.contains("VECTORS velocity"));
}

#[test]
fn solve_on_imported_mesh_with_config() {
    let d = tempfile::tempdir().unwrap();
    let mesh = oseen::mesh::generate_structured(4, 4, oseen::mesh::Rect::unit()).unwrap();
    let mesh_path = d.path().join("square.mesh");
    oseen::mesh::write_text(&mesh, fs::File::create(&mesh_path).unwrap()).unwrap();
    let cfg = d.path().join("run.cfg");
    fs::write(&cfg, format!("scheme = dg\nk = 1\nmesh = {}\n", mesh_path.display())).unwrap();
    let o = oseen(&["solve", "--config", cfg.to_str().unwrap()], d.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("dofs 577"), "{text}");
    assert!(d.path().join("solution.vtk").exists());
    assert!(d.path().join("profile_vertical.csv").exists());
}

#[test]
fn bad_config_key_is_usage_error() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.cfg");
    fs::write(&cfg, "colour = blue\n").unwrap();
    let o = oseen(&["solve", "--config", cfg.to_str().unwrap()], d.path());
    assert_eq!(code(&o), 1);
}
