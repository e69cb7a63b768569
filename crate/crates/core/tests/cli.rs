use std::path::PathBuf;
use std::process::Command;

use l2betti::cli::{execute, exit_code};
use l2betti::Error;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_l2betti"))
}

fn desc(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("descriptions").join(name).display().to_string()
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

#[test]
fn tree_prints_exact_value() {
    let (code, out, _) = run(&["tree", &desc("f3.txt")]);
    assert_eq!(code, 0);
    assert_eq!(out, "beta1 2 2\n");
}

#[test]
fn beta1_graph_csv_and_summary() {
    let (code, out, _) = run(&["beta1-graph", &desc("z.txt"), "--radii", "4,8"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "degree,level_k,level_l,epsilon,value,kind");
    let summary: Vec<&str> = lines.last().unwrap().split(' ').collect();
    assert_eq!(summary[0], "beta1");
    let (lo, hi): (f64, f64) = (summary[1].parse().unwrap(), summary[2].parse().unwrap());
    assert!(lo <= hi && hi < 0.07, "{lo} {hi}");
    assert!(lines[1..lines.len() - 1].iter().all(|l| l.split(',').count() == 6));
}

#[test]
fn table_shows_the_same_numbers() {
    let file = desc("z2_plane.txt");
    let csv = execute(["l2betti", "betti-complex", file.as_str(), "--degree", "1", "--levels", "2,4"]);
    let table = execute(["l2betti", "--format", "table", "betti-complex", file.as_str(), "--degree", "1", "--levels", "2,4"]);
    assert_eq!(csv.code, 0);
    let csv_cells: Vec<String> = csv.stdout.lines().flat_map(|l| l.split([',', ' ']).map(str::to_string).collect::<Vec<_>>()).collect();
    let table_cells: Vec<String> = table.stdout.split_whitespace().map(str::to_string).collect();
    assert_eq!(csv_cells, table_cells);
}

#[test]
fn threads_do_not_change_output() {
    let file = desc("f2.txt");
    let one = execute(["l2betti", "--threads", "1", "beta1-graph", file.as_str(), "--radii", "2,3"]);
    let two = execute(["l2betti", "--threads", "2", "beta1-graph", file.as_str(), "--radii", "2,3"]);
    assert_eq!(one.code, 0);
    assert_eq!(one.stdout, two.stdout);
}

#[test]
fn parse_errors_exit_with_validation_code() {
    let dir = std::env::temp_dir().join(format!("l2betti-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.txt");
    std::fs::write(&bad, "family free 2\norbit 0 arity two stab 1\n").unwrap();
    let (code, _, err) = run(&["beta0", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("line 2"), "{err}");
    let (code, _, _) = run(&["beta0", "/nonexistent/description.txt"]);
    assert_eq!(code, 1);
    let (code, _, _) = run(&["building", "--rank", "2", "--q", "1"]);
    assert_eq!(code, 1);
    let (code, _, err) = run(&["beta1-graph", &desc("f2.txt"), "--radii", "3,2"]);
    assert_eq!(code, 1);
    assert!(err.contains("invalid-schedule"), "{err}");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn computation_errors_map_to_code_two() {
    assert_eq!(exit_code(&Error::DomainTooSmall { degree: 2, orbit: 0, level: 0 }), 2);
    assert_eq!(exit_code(&Error::ProductTooLarge { cells: 10, cap: 5 }), 2);
    assert_eq!(exit_code(&Error::InvalidThreshold(0.0)), 1);
}

#[test]
fn selftest_is_deterministic_and_can_be_forced_to_fail() {
    let (code, a, _) = run(&["--seed", "11", "selftest", "--instances", "30"]);
    assert_eq!(code, 0, "{a}");
    let (_, b, _) = run(&["--seed", "11", "selftest", "--instances", "30"]);
    assert_eq!(a, b);
    assert!(a.ends_with("selftest pass\n"));
    let (code, out, _) = run(&["selftest", "--instances", "5", "--force-fail"]);
    assert_eq!(code, 3);
    assert!(out.contains("forced-failure fail"));
}

#[test]
fn kunneth_accepts_sequences_and_files() {
    let (code, out, _) = run(&["kunneth", "(0,1,0)", "(0,1,0)"]);
    assert_eq!((code, out.as_str()), (0, "kunneth (0,0,1,0,0)\n"));
    let (code, out, _) = run(&["kunneth", &desc("f2_wedge.txt"), "1/2,1"]);
    assert_eq!((code, out.as_str()), (0, "kunneth (0,1/2,1)\n"));
    let (code, _, _) = run(&["kunneth", "(0,-1)", "(1)"]);
    assert_eq!(code, 1);
}

#[test]
fn euler_and_building_and_lueck() {
    for f in ["f2_wedge.txt", "z2_plane.txt", "triangle.txt", "sphere.txt"] {
        let (code, out, _) = run(&["euler", &desc(f)]);
        assert_eq!(code, 0, "{f}");
        assert!(out.ends_with("euler pass\n"), "{f}: {out}");
    }
    let (_, out, _) = run(&["building", "--rank", "2", "--q", "9"]);
    assert_eq!(out, "bound 7/10 0.7\n");
    let (_, out, _) = run(&["lueck", "--family", "cycle", "--indices", "2,3,7"]);
    let tail: Vec<&str> = out.lines().filter(|l| l.starts_with("lueck")).collect();
    assert_eq!(tail, ["lueck 2 1/2", "lueck 3 1/3", "lueck 7 1/7"]);
}

#[test]
fn sample_descriptions_build() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("descriptions");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let d = l2betti::cli::read_description(&path).unwrap();
        let again = l2betti::cli::parse_description(&d.serialize()).unwrap();
        assert_eq!(again.build().unwrap(), d.build().unwrap(), "{}", path.display());
    }
}
