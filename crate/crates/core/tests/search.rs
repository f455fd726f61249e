use glp_core::search::{prove, prove_formula, prove_saturating, SearchBudget, SearchOutcome};
use glp_core::*;

const GOALS: &[&str] = &[
    "[0]([0]p -> p) -> [0]p",
    "<0>p -> [1]<0>p",
    "[0]p -> [1]p",
    "[1]p -> [0]p",
    "<0>p -> <1>p",
    "([0]p & <1>q) -> ([0]p & <1>q)",
    "[2]([0]p | <1>q) | <2>([1]~q & <0>~p)",
    "p",
    "<0>T",
];

fn size(o: &SearchOutcome) -> Option<usize> {
    match o {
        SearchOutcome::Proved(d) => Some(d.size()),
        _ => None,
    }
}

#[test]
fn shortcut_keeps_verdicts_and_validity() {
    let glp = SystemSpec::glp();
    for s in GOALS {
        let g = NestedSequent::singleton(parse(s).unwrap());
        let fast = prove(&g, &glp, SearchBudget::default()).unwrap();
        let full = prove_saturating(&g, &glp, SearchBudget::default()).unwrap();
        assert_eq!(fast.verdict(), full.verdict(), "{s}");
        for o in [&fast, &full] {
            if let SearchOutcome::Proved(d) = o {
                check(d, &glp).unwrap();
                assert!(d.is_cut_free());
                assert_eq!(d.conclusion, g);
            }
        }
        if let (Some(a), Some(b)) = (size(&fast), size(&full)) {
            assert!(a <= b, "{s}: {a} > {b}");
        }
    }
}

#[test]
fn complementary_pair_closes_early() {
    let a = parse("[0]([1]p | <2>q)").unwrap();
    let g = NestedSequent::from_formulas([a.clone(), a.negate(), parse("r").unwrap()]);
    let glp = SystemSpec::glp();
    let fast = size(&prove(&g, &glp, SearchBudget::default()).unwrap()).unwrap();
    let full = size(&prove_saturating(&g, &glp, SearchBudget::default()).unwrap()).unwrap();
    assert!(fast < full, "{fast} vs {full}");
}

#[test]
fn budgets_report_exhaustion() {
    let a = parse("[1]([1]p -> p) -> [1]p").unwrap();
    let tiny = SearchBudget { max_nodes: 2, ..SearchBudget::default() };
    assert_eq!(prove_formula(&a, &SystemSpec::glp(), tiny).unwrap(), SearchOutcome::Exhausted);
    let shallow = SearchBudget { max_height: 0, ..SearchBudget::default() };
    assert_eq!(prove_formula(&a, &SystemSpec::glp(), shallow).unwrap(), SearchOutcome::Exhausted);
}

#[test]
fn search_refuses_cut_and_structural_systems() {
    let a = parse("p | ~p").unwrap();
    assert!(prove_formula(&a, &SystemSpec::glp_cut(), SearchBudget::default()).is_err());
    assert!(prove_formula(&a, &SystemSpec::j_weak_cont(), SearchBudget::default()).is_err());
}

#[test]
fn j_lacks_monotonicity_but_keeps_introspection() {
    let j = SystemSpec::j();
    let b = SearchBudget::default();
    assert_eq!(prove_formula(&parse("[0]p -> [1]p").unwrap(), &j, b).unwrap(), SearchOutcome::NotProvable);
    assert!(prove_formula(&parse("<0>p -> [1]<0>p").unwrap(), &j, b).unwrap().is_proved());
    assert!(prove_formula(&parse("[0]p -> [1][0]p").unwrap(), &j, b).unwrap().is_proved());
    assert!(prove_formula(&parse("[0]p -> [0][1]p").unwrap(), &j, b).unwrap().is_proved());
}
