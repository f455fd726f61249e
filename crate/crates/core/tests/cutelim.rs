use glp_core::cutelim::*;
use glp_core::search::{prove_saturating, SearchBudget, SearchOutcome};
use glp_core::*;

/// Saturating search, so the premises carry their full modal structure.
fn proof_of(g: &NestedSequent) -> Derivation {
    match prove_saturating(g, &SystemSpec::glp(), SearchBudget::default()).unwrap() {
        SearchOutcome::Proved(d) => d,
        o => panic!("{g}: {}", o.verdict()),
    }
}

/// A proof of `g` ending in a cut on `a` at the root.
fn cut_proof(g: &NestedSequent, a: &Formula) -> Derivation {
    let mut g1 = g.clone();
    g1.formulas.push(a.clone().into());
    let mut g2 = g.clone();
    g2.formulas.push(a.negate().into());
    Derivation::new(g.clone(), Rule::Cut { node: vec![], formula: a.clone() }, vec![proof_of(&g1), proof_of(&g2)])
}

fn run(goal: &str, cut: &str) -> CutElimStats {
    let g = parse_sequent(goal).unwrap();
    let a = parse(cut).unwrap();
    let pi = cut_proof(&g, &a);
    check(&pi, &SystemSpec::glp_cut()).unwrap();
    let (out, stats) = eliminate_cuts(&pi).unwrap_or_else(|e| panic!("{goal} / {cut}: {e}"));
    check(&out, &SystemSpec::glp()).unwrap_or_else(|v| panic!("{goal} / {cut}: {v}"));
    assert!(out.is_cut_free() && out.is_annotation_free());
    assert!(out.conclusion.canon_eq(&g));
    stats
}

#[test]
fn propositional_cuts() {
    for (g, a) in [("p, ~p", "p"), ("p, ~p", "q"), ("p | ~p", "p & q"), ("T", "F"), ("q, ~q", "p | ~r")] {
        run(g, a);
    }
}

#[test]
fn modal_cuts() {
    for (g, a) in [
        ("[0]p -> [1]p", "[0]p"),
        ("[0]p -> [1]p", "<1>~p"),
        ("<0>p | [0]~p", "[0]q"),
        ("<1>p -> [2]<1>p", "<1>p"),
        ("[0]([0]p -> p) -> [0]p", "[0]p"),
    ] {
        let s = run(g, a);
        assert!(s.rounds >= 1);
    }
}

#[test]
fn cut_grid() {
    let goals = ["[0]([0]p -> p) -> [0]p", "[1]([1]p -> p) -> [1]p", "[0]p -> [1]p", "<0>p -> [1]<0>p", "[1](p->q) -> ([1]p -> [1]q)", "[0]p -> [0][0]p"];
    let cuts = ["[0]p", "[0]([0]p -> p)", "<0>~p", "[0][0]p", "[1]p", "[1]([1]p->p)", "<0>p", "[1]<0>p", "[0]p & [1]q", "[1]q"];
    let mut reps = 0;
    for g in goals {
        for a in cuts {
            let s = run(g, a);
            assert!(s.repetitions.iter().all(|&(t, l)| t as u64 <= l));
            reps += s.repetitions.len();
        }
    }
    // the Lob goals force boxplus-cuts to repeat at least once somewhere
    assert!(reps > 0);
}

#[test]
fn chain_bound_by_hand() {
    let fs: Vec<Formula> = ["[0]p", "[0]q", "[1]r", "p"].iter().map(|s| parse(s).unwrap()).collect();
    let st = ChainOrderState::from_formulas(fs.iter());
    // (2 + 1) * (1 + 1)
    assert_eq!(st.chain_bound(), 6);
    assert_eq!(st.longest_chain_exhaustive(), Some(6));

    // index 0 has no box formula but still counts as an empty group
    let fs = [parse("[1]p").unwrap()];
    let st = ChainOrderState::from_formulas(fs.iter());
    assert_eq!(st.chain_bound(), 2);
    assert_eq!(st.longest_chain_exhaustive(), Some(2));
}

#[test]
fn order_on_subsets() {
    let set = |xs: &[&str]| xs.iter().map(|s| parse(s).unwrap()).collect::<std::collections::BTreeSet<_>>();
    // lower index decides first
    assert!(ChainOrderState::precedes(&set(&["[1]q"]), &set(&["[0]p"])));
    assert!(!ChainOrderState::precedes(&set(&["[0]p"]), &set(&["[1]q"])));
    assert!(ChainOrderState::precedes(&set(&["[0]p", "[1]q"]), &set(&["[0]p", "[0]r"])));
    assert!(!ChainOrderState::precedes(&set(&["[0]p"]), &set(&["[0]p"])));
    // incomparable: neither grows the other at the first differing index
    assert!(!ChainOrderState::precedes(&set(&["[0]p"]), &set(&["[0]q"])));
}

#[test]
fn cut_free_input_is_untouched() {
    let g = parse_sequent("p, ~p").unwrap();
    let d = Derivation::leaf(g, Rule::InitAtom { node: vec![], atom: "p".into() });
    let (out, stats) = eliminate_cuts(&d).unwrap();
    assert_eq!(out, d);
    assert_eq!(stats.rounds, 0);
}
