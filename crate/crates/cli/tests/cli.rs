use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn borel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_borel"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn file(name: &str, contents: &str) -> String {
    let dir: PathBuf = std::env::temp_dir().join(format!("borel-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    fs::write(&path, contents).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn eval_reports_fuel_exhaustion() {
    let c = file("omega.bc", "(inter-omega (leaf {[0]}) (leaf full))");
    let o = borel(&["eval", "--code", &c, "--point", "0;1", "--fuel", "10"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "UNKNOWN fuel-exhausted\n");
    let o = borel(&["eval", "--code", &c, "--point", "1;0", "--fuel", "10"]);
    assert_eq!(stdout(&o), "OUT\n");
}

#[test]
fn eval_witness_lines() {
    let c = file("pair.bc", "(union (leaf {[0]}) (leaf {[1]}))");
    let o = borel(&["eval", "--code", &c, "--point", "1;0", "--witness"]);
    assert_eq!(stdout(&o), "IN\n<> 1\n<0> 0\n<1> 1\n");
}

#[test]
fn strategy_for_cyclic_composite() {
    let c = file("comp.bc", "(def u (union (leaf empty) (ref u))) (inter (leaf empty) (ref u))");
    let o = borel(&["strategy", "--code", &c, "--point", "0;1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("OUT\n<> 0\n"));
    let loop_only = file("loop.bc", "(def u (union (leaf empty) (ref u))) (ref u)");
    let o = borel(&["eval", "--code", &loop_only, "--point", "0;1"]);
    assert_eq!(stdout(&o), "UNKNOWN undetermined-cycle\n");
}

#[test]
fn rank_check_exit_codes() {
    let bad = file("bad.bc", "(union :rank 1 (leaf :rank 0 full) (inter :rank 3 (leaf :rank 0 empty)))");
    let o = borel(&["rank-check", "--code", &bad, "--bound", "w"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o), "VIOLATION <1>\n");
    let good = file("good.bc", "(union :rank 1 (leaf :rank 0 full))");
    let o = borel(&["rank-check", "--code", &good, "--bound", "w"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "RANKED\n");
}

#[test]
fn parse_errors_exit_two() {
    let c = file("broken.bc", "(union (leaf {[0]})");
    assert_eq!(borel(&["eval", "--code", &c, "--point", "0;1"]).status.code(), Some(2));
    let ok = file("ok.bc", "(leaf full)");
    assert_eq!(borel(&["eval", "--code", &ok, "--point", "2;1"]).status.code(), Some(2));
    let unbound = file("unbound.bc", "(ref nowhere)");
    assert_eq!(borel(&["negate", "--code", &unbound]).status.code(), Some(2));
}

#[test]
fn negate_and_decorate_print_code() {
    let c = file("neg.bc", "(union :rank 1 (leaf :rank 0 {[0]}))");
    let o = borel(&["negate", "--code", &c]);
    assert_eq!(stdout(&o), "(inter :rank 1 (leaf :rank 0 {[1]}))\n");
    let fam = file("fam.txt", "(bound 2) (pos (inter :rank 1 (leaf :rank 0 {[11]})))");
    let t = file("t.bc", "(union :rank 2 (leaf :rank 0 {[0]}))");
    let o = borel(&["decorate", "--code", &t, "--family", &fam]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "(union :rank 2 (leaf :rank 0 {[0]}) (inter :rank 1 (leaf :rank 0 {[11]})))\n"
    );
}

#[test]
fn edge1_gadget_report() {
    let colors = vec!["0-1"; 13].join(",");
    let o = borel(&["simulate", "gadget", "--kind", "edge1", "--k", "3", "--colors", &colors]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("N=13\ncategory 0 1\nchosen 0 1 2\n"));
    assert!(out.ends_with("NOT-EXTENDABLE\n"));
    let short = borel(&["simulate", "gadget", "--kind", "edge1", "--k", "3", "--colors", "0-1"]);
    assert_eq!(short.status.code(), Some(1));
}

#[test]
fn wo_gadget_report() {
    let o = borel(&["simulate", "gadget", "--kind", "wo", "--colors", "0,1"]);
    assert_eq!(stdout(&o), "path-length 2\nv a\nv b\nv w0\ne a w0\ne b w0\nNOT-EXTENDABLE\n");
}

#[test]
fn hats_report() {
    let o = borel(&["simulate", "hats", "--prefix", "010", "--period", "1", "--n", "20"]);
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 21);
    assert!(out.ends_with("errors 1\n") || out.ends_with("errors 0\n"));
    for line in out.lines().skip(1).take(19) {
        assert!(!line.ends_with("wrong"), "{line}");
    }
}

#[test]
fn graphs_subcommands() {
    let g = file("c4.txt", "v a\nv b\nv c\nv d\ne a b\ne b c\ne c d\ne d a\n");
    assert_eq!(stdout(&borel(&["graphs", "match", &g])), "PERFECT\na d\nb c\n");
    assert_eq!(stdout(&borel(&["graphs", "twocolor", &g])), "a 0\nb 1\nc 0\nd 1\n");
    assert!(stdout(&borel(&["graphs", "konig", &g])).ends_with("colors 2\n"));
    let viz = stdout(&borel(&["graphs", "vizing", &g]));
    let k: usize = viz.lines().last().unwrap().strip_prefix("colors ").unwrap().parse().unwrap();
    assert!(k <= 3, "{viz}");
    assert_eq!(viz.lines().count(), 5);
    let tri = file("tri.txt", "v a\nv b\nv c\ne a b\ne b c\ne c a\n");
    let o = borel(&["graphs", "twocolor", &tri]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("ODD-CYCLE"));
    assert_eq!(borel(&["graphs", "konig", &tri]).status.code(), Some(1));
}

#[test]
fn lalpha_subcommands() {
    let o = borel(&["lalpha", "build", "--levels", "4"]);
    let sizes: Vec<String> = stdout(&o)
        .lines()
        .map(|l| l.split(':').next().unwrap().to_string())
        .collect();
    assert_eq!(sizes, ["L0 size 0", "L1 size 1", "L2 size 2", "L3 size 4", "L4 size 16"]);
    assert_eq!(borel(&["lalpha", "build", "--levels", "5"]).status.code(), Some(1));
    let phi = file("phi.txt", "exists y. in(y,x)\n");
    let o = borel(&["lalpha", "code", "--phi", &phi, "--levels", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("(union :rank 3"));
    let bad = file("badphi.txt", "exists y in(y,x)");
    assert_eq!(borel(&["lalpha", "code", "--phi", &bad]).status.code(), Some(2));
}

#[test]
fn ramsey_adversary_report() {
    let o = borel(&["ramsey", "adversary", "--stages", "3"]);
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(0));
    assert!(out.ends_with("monochromatic 0\ndistinct yes\n"));
    assert_eq!(out.lines().filter(|l| l.starts_with('p')).count(), 10);
}

#[test]
fn reports_are_deterministic() {
    let c = file("det.bc", "(inter (union (leaf {[0]}) (leaf {[10]})) (leaf full))");
    for args in [
        vec!["eval", "--code", c.as_str(), "--point", "10;0", "--witness"],
        vec!["ramsey", "adversary"],
        vec!["simulate", "hats", "--prefix", "1101", "--period", "01"],
    ] {
        assert_eq!(borel(&args).stdout, borel(&args).stdout);
    }
}
