use std::path::Path;
use std::process::{Command, Output};

fn glpns(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glpns")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn prove_exit_codes() {
    let lob = glpns(&["prove", "--logic", "glp", "[0](([0]p -> p)) -> [0]p"]);
    assert_eq!(code(&lob), 0);
    assert!(stdout(&lob).starts_with("PROVED\n"));

    let atom = glpns(&["prove", "--logic", "glp", "p"]);
    assert_eq!(code(&atom), 1);
    assert_eq!(stdout(&atom), "NOT-PROVABLE\n");

    assert_eq!(code(&glpns(&["prove", "p &"])), 2);
    assert_eq!(code(&glpns(&["prove", "(0: p"])), 2);
}

#[test]
fn prove_exhausted_is_distinct() {
    let o = glpns(&["prove", "--max-nodes", "3", "[1]([1]p -> p) -> [1]p"]);
    assert_eq!(code(&o), 3);
    assert_eq!(stdout(&o), "EXHAUSTED\n");
}

#[test]
fn prove_reduction_in_j() {
    let o = glpns(&["prove", "--logic", "j", "--as-reduction", "<0>p -> [1]<0>p"]);
    assert_eq!(code(&o), 0);
    // monotonicity is what J lacks
    let mono = glpns(&["prove", "--logic", "j", "[0]p -> [1]p"]);
    assert_eq!(code(&mono), 1);
    let red = glpns(&["prove", "--logic", "j", "--as-reduction", "[0]p -> [1]p"]);
    assert_eq!(code(&red), 0);
}

#[test]
fn prove_accepts_sequents() {
    let o = glpns(&["prove", "<0>p, (1: ~p)"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn output_is_deterministic() {
    for fmt in ["text", "json", "latex"] {
        let a = glpns(&["prove", "--format", fmt, "[0](p -> q) -> ([0]p -> [0]q)"]);
        let b = glpns(&["prove", "--format", fmt, "[0](p -> q) -> ([0]p -> [0]q)"]);
        assert_eq!(code(&a), 0);
        assert_eq!(a.stdout, b.stdout, "{fmt}");
    }
    let latex = stdout(&glpns(&["prove", "--format", "latex", "p | ~p"]));
    assert!(latex.contains("\\AxiomC") && latex.contains("\\DisplayProof"), "{latex}");
}

#[test]
fn check_round_trip_and_mutation() {
    let dir = tempfile::tempdir().unwrap();
    let proof = dir.path().join("p.json");
    let o = glpns(&["prove", "--format", "json", "--output", path(&proof), "<0>p -> [1]<0>p"]);
    assert_eq!(code(&o), 0);
    assert_eq!(code(&glpns(&["check", path(&proof)])), 0);

    // J has no eucl rule, so the GLP proof fails there
    let j = glpns(&["check", "--logic", "j", path(&proof)]);
    assert_eq!(code(&j), 1);
    assert!(stdout(&j).starts_with("violation"));

    let text = std::fs::read_to_string(&proof).unwrap();
    let bad = text.replacen("(1: ", "(2: ", 1);
    assert_ne!(bad, text);
    let broken = dir.path().join("bad.json");
    std::fs::write(&broken, bad).unwrap();
    let o = glpns(&["check", path(&broken)]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).starts_with("violation at"));

    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{ not json").unwrap();
    assert_eq!(code(&glpns(&["check", path(&garbage)])), 2);
    assert_eq!(code(&glpns(&["check", "/nonexistent/proof.json"])), 2);
}

#[test]
fn elim_on_embedded_axiom() {
    let dir = tempfile::tempdir().unwrap();
    let with_cut = dir.path().join("cut.json");
    let free = dir.path().join("free.json");
    // instance 1 is schema (ii) under the first substitution
    let o = glpns(&["embed", "1", "--format", "json", "--output", path(&with_cut)]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("ii\t"));
    assert_eq!(code(&glpns(&["check", path(&with_cut)])), 1);
    assert_eq!(code(&glpns(&["check", "--cuts", path(&with_cut)])), 0);

    let o = glpns(&["elim", "--trace", "--format", "json", "--output", path(&free), path(&with_cut)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cut-free"));
    assert_eq!(code(&glpns(&["check", path(&free)])), 0);
}

#[test]
fn reduce_reports_m_plus_and_verdict() {
    let o = glpns(&["reduce", "p"]);
    assert_eq!(code(&o), 1);
    let s = stdout(&o);
    assert!(s.contains("M+(A): T\n"), "{s}");
    assert!(s.contains("J: NOT-PROVABLE"), "{s}");

    let o = glpns(&["reduce", "--proof", "--format", "json", "[0]p -> [1]p"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    assert!(s.contains("J: PROVED") && s.contains("\"rule\""), "{s}");
}

#[test]
fn corpus_matches_golden() {
    let o = glpns(&["corpus"]);
    assert_eq!(code(&o), 0);
    let golden = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/corpus.tsv")).unwrap();
    assert_eq!(stdout(&o), golden);

    let with_mp = stdout(&glpns(&["corpus", "--mp", "5"]));
    assert_eq!(with_mp.lines().count(), 65);
    assert!(with_mp.starts_with(&golden));
}

#[test]
fn embed_rejects_bad_index() {
    assert_eq!(code(&glpns(&["embed", "60"])), 2);
}
