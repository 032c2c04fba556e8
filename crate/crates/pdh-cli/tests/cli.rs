use std::path::PathBuf;
use std::process::{Command, Output};

fn pdh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdh"))
        .args(args)
        .env_remove("PDH_CACHE")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf8 output")
}

fn tmp_dir(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("pdh-test-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn ids_prints_exact_rational() {
    let o = pdh(&["ids", "--zero", "01"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "3/8\n");
    let o = pdh(&["ids", "--zero", ""]);
    assert_eq!(stdout(&o), "1/2\n");
}

#[test]
fn bands_level_one_closed_form() {
    let o = pdh(&["bands", "--lambda", "2", "--level", "1", "--format", "csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("-2.82842712474"), "left edge missing:\n{text}");
    assert!(text.contains(",2.82842712474"), "right edge missing");
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 3); // header + 2 bands
}

#[test]
fn exit_codes() {
    // bad input: nonsense lambda
    let o = pdh(&["bands", "--lambda", "zebra", "--level", "1"]);
    assert_eq!(o.status.code(), Some(3));
    // bad input: negative lambda
    let o = pdh(&["bands", "--lambda", "-1", "--level", "1"]);
    assert_eq!(o.status.code(), Some(3));
    // bad input: level above the cap
    let o = pdh(&["bands", "--level", "40"]);
    assert_eq!(o.status.code(), Some(3));
    // bad input: unknown flag
    let o = pdh(&["bands", "--frobnicate"]);
    assert_eq!(o.status.code(), Some(3));
    // help exits 0
    let o = pdh(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn verify_small_passes() {
    let o = pdh(&["verify", "--lambda", "2", "--level", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
    assert!(text.contains("band-structure"));
    assert!(text.contains("contraction"));
}

#[test]
fn cache_round_trip_and_key_mismatch() {
    let dir = tmp_dir("cache");
    let cache = dir.to_str().unwrap();
    let args = ["bands", "--lambda", "0.5", "--level", "4", "--cache", cache];
    let first = pdh(&args);
    assert!(first.status.success());
    let files: Vec<_> = std::fs::read_dir(&dir).unwrap().collect();
    assert_eq!(files.len(), 1, "one cache file per key");
    // cached rerun is byte-identical
    let second = pdh(&args);
    assert_eq!(stdout(&first), stdout(&second));
    // different lambda and different precision get their own keys
    pdh(&["bands", "--lambda", "1", "--level", "4", "--cache", cache]);
    pdh(&["bands", "--lambda", "0.5", "--level", "4", "--bits", "256", "--cache", cache]);
    assert_eq!(std::fs::read_dir(&dir).unwrap().count(), 3);
    // corrupt cache recomputes with a warning instead of failing
    for f in std::fs::read_dir(&dir).unwrap() {
        std::fs::write(f.unwrap().path(), "{not json").unwrap();
    }
    let third = pdh(&args);
    assert!(third.status.success());
    assert_eq!(stdout(&first), stdout(&third));
    assert!(String::from_utf8_lossy(&third.stderr).contains("corrupt cache"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn deterministic_across_thread_counts() {
    for (cmd, extra) in [
        ("gaps", vec!["--lambda", "2", "--level", "5"]),
        ("covering", vec!["--lambda", "0.5", "--level", "4"]),
        ("dimension", vec!["--lambda", "2", "--level", "3"]),
    ] {
        let run = |threads: &str| {
            let mut c = Command::new(env!("CARGO_BIN_EXE_pdh"));
            c.arg(cmd).args(&extra).env("RAYON_NUM_THREADS", threads);
            c.output().expect("binary runs")
        };
        let a = run("1");
        let b = run("4");
        assert!(a.status.success(), "{cmd} failed");
        assert_eq!(a.stdout, b.stdout, "thread count changed {cmd} output");
    }
}

#[test]
fn orbit_reports_zero_tail_and_divergence() {
    let o = pdh(&["orbit", "--lambda", "2", "--energy", "2", "--horizon", "12"]);
    assert!(stdout(&o).contains("zero-tail(m=0)"));
    let o = pdh(&["orbit", "--lambda", "2", "--energy", "5", "--horizon", "12"]);
    assert!(stdout(&o).contains("certified-unbounded(n0=0)"));
}
