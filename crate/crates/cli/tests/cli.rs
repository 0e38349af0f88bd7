use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fjspth")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn generate_is_deterministic_and_checks_fleet() {
    let dir = TempDir::new().unwrap();
    let base = fixture("la01_edata.fjs");
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    for out in [&a, &b] {
        let o = run(&["generate", "--base", p(&base), "--seed", "7", "--out", p(out)]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let c = dir.path().join("c.txt");
    let o = run(&["generate", "--base", p(&base), "--seed", "8", "--out", p(&c)]);
    assert_eq!(o.status.code(), Some(0));
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());

    let o = run(&["generate", "--base", p(&base), "--zones", "4", "--transbots", "2", "--out", p(&c)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn solve_tiny1_both_models() {
    let dir = TempDir::new().unwrap();
    for model in ["arc", "embedded"] {
        let out = dir.path().join(format!("{model}.sched"));
        let o = run(&["solve", p(&fixture("tiny1.txt")), "--model", model, "--time-limit", "30", "--out", p(&out)]);
        assert_eq!(o.status.code(), Some(0));
        let text = stdout(&o);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("instance,model,CMAX,bound,status,seconds,nodes"));
        let row = lines.next().unwrap();
        assert!(row.starts_with(&format!("tiny1,{model},20,20,Optimal,")), "{row}");
        let sched = std::fs::read_to_string(&out).unwrap();
        assert_eq!(sched.lines().filter(|l| l.starts_with("OP ")).count(), 2);
        assert_eq!(sched.lines().filter(|l| l.starts_with("LEG ")).count(), 3);
    }
}

#[test]
fn solve_exit_codes() {
    assert_eq!(run(&["solve", "/nonexistent/instance.txt"]).status.code(), Some(2));
    assert_eq!(run(&["solve", p(&fixture("tiny1.txt")), "--workers", "0"]).status.code(), Some(1));
    assert_eq!(run(&["solve", p(&fixture("tiny1.txt")), "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));

    // no bot in the second zone: M2 is unreachable
    let dir = TempDir::new().unwrap();
    let text = std::fs::read_to_string(fixture("tiny1.txt"))
        .unwrap()
        .replace("2 machines 2 transbots 2", "2 machines 2 transbots")
        .replace("TRANSBOTS 2\n1 zone 1 at 0\n2 zone 2 at 0", "TRANSBOTS 1\n1 zone 1 at 0");
    let path = dir.path().join("unserved.txt");
    std::fs::write(&path, text).unwrap();
    let o = run(&["solve", p(&path), "--time-limit", "10"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains(",Infeasible,"));
}

fn solved_tiny1(dir: &TempDir) -> (PathBuf, PathBuf) {
    let inst = fixture("tiny1.txt");
    let sched = dir.path().join("tiny1.sched");
    let o = run(&["solve", p(&inst), "--model", "arc", "--time-limit", "30", "--out", p(&sched)]);
    assert_eq!(o.status.code(), Some(0));
    (inst, sched)
}

#[test]
fn validate_reports_violations_by_kind() {
    let dir = TempDir::new().unwrap();
    let (inst, sched) = solved_tiny1(&dir);
    let o = run(&["validate", p(&inst), p(&sched)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).is_empty());

    // hand every leg to bot 1, which only serves zone 1
    let text = std::fs::read_to_string(&sched).unwrap();
    let moved: Vec<String> = text
        .lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split_whitespace().collect();
            if f.first() == Some(&"LEG") {
                f[3] = "1";
            }
            f.join(" ")
        })
        .collect();
    let bad = dir.path().join("bad.sched");
    std::fs::write(&bad, moved.join("\n")).unwrap();
    let o = run(&["validate", p(&inst), p(&bad)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).lines().any(|l| l.starts_with("ZoneMismatch,")), "{}", stdout(&o));

    let junk = dir.path().join("junk.sched");
    std::fs::write(&junk, "MAKESPAN 5\nOP 1 9 1 0 5\n").unwrap();
    assert_eq!(run(&["validate", p(&inst), p(&junk)]).status.code(), Some(2));
}

#[test]
fn gantt_draws_bands_ops_and_legs() {
    let dir = TempDir::new().unwrap();
    let (inst, sched) = solved_tiny1(&dir);
    let svg_path = dir.path().join("g.svg");
    let o = run(&["gantt", p(&inst), p(&sched), "--out", p(&svg_path)]);
    assert_eq!(o.status.code(), Some(0));
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches(r#"class="band""#).count(), 4);
    assert_eq!(svg.matches(r#"class="op""#).count(), 2);
    assert_eq!(svg.matches(r#"class="leg""#).count(), 3);

    let text = std::fs::read_to_string(&sched).unwrap();
    let shifted: String = text
        .lines()
        .map(|l| if l.starts_with("OP 1 1 ") { "OP 1 1 2 0 6".to_string() } else { l.to_string() })
        .collect::<Vec<_>>()
        .join("\n");
    let bad = dir.path().join("bad.sched");
    std::fs::write(&bad, shifted).unwrap();
    assert_ne!(run(&["gantt", p(&inst), p(&bad)]).status.code(), Some(0));
}

/// Mean of integers to two decimals, rounding half away from zero.
fn mean2(xs: &[i64]) -> String {
    let n = xs.len() as i64;
    let hundredths = (xs.iter().sum::<i64>() * 100 * 2 + n) / (2 * n);
    format!("{}.{:02}", hundredths / 100, hundredths % 100)
}

#[test]
fn bench_rows_and_exact_averages() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("two.fjs"), "2 2\n2 2 1 3 2 4 1 2 2\n1 1 1 5\n").unwrap();
    std::fs::copy(fixture("tiny1.txt"), dir.path().join("tiny1.txt")).unwrap();
    let spec = r#"
formulations = ["arc", "embedded"]
layout_seeds = [1, 2, 3]
time_limit = 20.0
jobs = 2

[[instances]]
path = "two.fjs"
format = "fjs"

[[instances]]
path = "tiny1.txt"
"#;
    let spec_path = dir.path().join("bench.toml");
    std::fs::write(&spec_path, spec).unwrap();
    let csv_path = dir.path().join("out.csv");
    let o = run(&["bench", p(&spec_path), "--out", p(&csv_path)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0], ["instance", "model", "config", "seed", "CMAX", "bound", "status", "seconds", "nodes"]);
    let runs: Vec<&Vec<&str>> = rows[1..].iter().filter(|r| r[0] != "AVG").collect();
    // 3 generated points + 1 file, per model
    assert_eq!(runs.len(), 8);
    assert!(runs.iter().all(|r| r[6] == "Optimal"), "{text}");
    for model in ["arc", "embedded"] {
        for config in ["z2-v2-l1", "z2-v2-l2", "z2-v2-l3", "file"] {
            let cmax: Vec<i64> = runs
                .iter()
                .filter(|r| r[1] == model && r[2] == config)
                .map(|r| r[4].parse().unwrap())
                .collect();
            let avg = rows
                .iter()
                .find(|r| r[0] == "AVG" && r[1] == model && r[2] == config)
                .unwrap_or_else(|| panic!("no AVG row for {model} {config}"));
            assert_eq!(avg[4], mean2(&cmax));
            assert_eq!(avg[6], format!("solved={0}/{0} optimal={0}", cmax.len()));
        }
    }
    // models agree at the optimum
    for r in runs.iter().filter(|r| r[1] == "arc") {
        let twin = runs.iter().find(|s| s[1] == "embedded" && s[0] == r[0] && s[2] == r[2]).unwrap();
        assert_eq!(r[4], twin[4]);
    }

    std::fs::write(&spec_path, "formulations = [\"arc\"]\ninstances = []\ncolour = 3\n").unwrap();
    assert_eq!(run(&["bench", p(&spec_path)]).status.code(), Some(1));
}
