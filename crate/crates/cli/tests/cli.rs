use std::path::Path;
use std::process::{Command, Output};

fn kge(args: &[&str], cache: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kge")).args(args).env("KGE_CACHE_DIR", cache).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value_after(text: &str, key: &str) -> f64 {
    let line = text.lines().find(|l| l.starts_with(key)).unwrap_or_else(|| panic!("no '{key}' in:\n{text}"));
    line[key.len()..].split_whitespace().next().unwrap().parse().unwrap()
}

#[test]
fn linear_solve_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let o = kge(&["solve", "--eps", "0", "--tau", "0.01", "--modes", "64", "--t0", "1", "--check"], dir.path());
    assert!(o.status.success(), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(value_after(&text, "closed-form error") <= 1e-10);
    assert_eq!(value_after(&text, "steps"), 100.0);
}

#[test]
fn stability_probe_reports_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let o = kge(&["stability-probe", "--h", "3.1416", "--eps", "1", "--sigma", "0"], dir.path());
    assert!(o.status.success());
    let bound = value_after(&stdout(&o), "step bound");
    assert!((bound - 2f64.sqrt()).abs() < 1e-3, "{bound}");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = kge(&["solve", "--no-such-flag"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# linear run\ntau = 0.02\nmodes = 32\n").unwrap();
    let o = kge(&["solve", "--eps", "0", "--tau", "0.01", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(value_after(&text, "steps"), 50.0);
    assert!(text.contains("modes, h         32,"));
}

#[test]
fn output_is_not_overwritten_without_force() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("u.csv");
    let path = out.to_str().unwrap();
    let args = ["solve", "--eps", "0.5", "--tau", "0.05", "--modes", "16", "--out", path];
    assert!(kge(&args, dir.path()).status.success());
    let first = std::fs::read_to_string(&out).unwrap();
    assert!(first.starts_with("time,x,u\n"));
    assert_eq!(first.lines().count(), 1 + 2 * 16);
    let again = kge(&args, dir.path());
    assert_eq!(again.status.code(), Some(1));
    let mut forced = args.to_vec();
    forced.push("--force");
    assert!(kge(&forced, dir.path()).status.success());
}

#[test]
fn study_reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = kge(
            &[
                "converge-time",
                "--eps",
                "1,0.5",
                "--tau",
                "0.2,0.1,0.05",
                "--h",
                "pi/16",
                "--ref-tau",
                "0.005",
                "--no-timing",
                "--no-cache",
                "--out",
                out.to_str().unwrap(),
            ],
            dir.path(),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(out).unwrap()
    };
    let a = run("a.csv");
    let b = run("b.csv");
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 1 + 6);
    assert!(text.starts_with("problem,eps,beta,h,tau_or_k,T0,lambda,error_H0,error_H1,order,stable_flag,wall_seconds,steps,reference_hash"));
}

#[test]
fn failed_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = kge(&["converge-time", "--preset", "table2", "--eps", "1", "--tau", "0.2,0.1", "--check"], dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("outside tolerance"));
}
