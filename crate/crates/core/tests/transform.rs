use glp_core::search::{prove, SearchBudget, SearchOutcome};
use glp_core::transform::*;
use glp_core::*;

const THEOREMS: &[&str] = &[
    "[1](p->q) -> ([1]p -> [1]q)",
    "[2]([2]([0]p & q) -> ([0]p & q)) -> [2]([0]p & q)",
    "<0>(p | [1]q) -> [2]<0>(p | [1]q)",
    "<1>p -> [2]<1>p",
    "[0]p -> [1]p",
    "[0]([0]p -> p) -> [0]p",
    "<0>p | [0]~p",
    "[1](p & q) -> [1]p & [1]q",
];

fn proofs() -> Vec<Derivation> {
    THEOREMS
        .iter()
        .map(|t| {
            let g = NestedSequent::from_formulas([parse(t).unwrap()]);
            match prove(&g, &SystemSpec::glp(), SearchBudget::default()).unwrap() {
                SearchOutcome::Proved(d) => d,
                o => panic!("{t}: {}", o.verdict()),
            }
        })
        .collect()
}

fn valid(d: &Derivation) {
    if let Err(v) = check(d, &SystemSpec::glp()) {
        panic!("invalid: {v:?}\n{}", d.conclusion);
    }
}

/// A mid-proof subderivation with some nesting, for richer test inputs.
fn deepest_with_children(d: &Derivation) -> Vec<&Derivation> {
    d.nodes().into_iter().filter(|n| !n.conclusion.children.is_empty() && !n.rule.is_initial()).collect()
}

#[test]
fn weakening_preserves_validity() {
    for d in proofs() {
        for sub in deepest_with_children(&d).into_iter().take(6) {
            for path in sub.conclusion.paths() {
                let extra = parse_sequent("r, [3]s, (1: q)").unwrap();
                let w = weak(sub, &path, &extra).unwrap();
                valid(&w);
                let mut want = sub.conclusion.clone();
                want.node_mut(&path).unwrap().absorb(extra.clone());
                assert_eq!(w.conclusion, want);
                assert_eq!(w.height(), sub.height());
            }
        }
    }
}

#[test]
fn necessitation_and_mon() {
    for d in proofs() {
        let n = necessitation_box(&d, 2).unwrap();
        valid(&n);
        assert_eq!(n.conclusion, NestedSequent::empty().with_child(2, d.conclusion.clone()));
        let m = mon(&n, &[0], 5).unwrap();
        valid(&m);
        assert_eq!(m.conclusion.edge_label(&[0]), Some(5));
        for sub in deepest_with_children(&d).into_iter().take(6) {
            for path in sub.conclusion.paths().into_iter().skip(1) {
                let j = sub.conclusion.edge_label(&path).unwrap() + 1;
                valid(&mon(sub, &path, j).unwrap());
            }
        }
    }
}

#[test]
fn merge_siblings() {
    for d in proofs() {
        let two = NestedSequent::empty()
            .with_child(1, d.conclusion.clone())
            .with_child(1, NestedSequent::from_formulas([parse("x").unwrap()]));
        let pi = weak(&necessitation_box(&d, 1).unwrap(), &[], &NestedSequent::empty().with_child(1, NestedSequent::from_formulas([parse("x").unwrap()]))).unwrap();
        assert_eq!(pi.conclusion, two);
        for (a, b) in [(0, 1), (1, 0)] {
            let m = merge(&pi, &[], a, b).unwrap();
            valid(&m);
            assert_eq!(m.conclusion.children.len(), 1);
        }
    }
}

#[test]
fn inversions() {
    for d in proofs() {
        for sub in d.nodes() {
            if sub.rule.is_initial() {
                continue;
            }
            let expect = glp_core::calculus::premises_of(&sub.rule, &sub.conclusion).unwrap();
            let inv = invert(sub, &sub.rule).unwrap();
            assert_eq!(inv.len(), expect.len());
            for (p, e) in inv.iter().zip(&expect) {
                valid(p);
                assert!(p.conclusion.aligned_eq(e), "{} vs {}", p.conclusion, e);
                assert!(p.height() <= sub.height());
            }
        }
    }
}

#[test]
fn contraction_of_literals() {
    let pi = proofs().remove(6);
    let np = AnnotatedFormula::Plain(parse("~p").unwrap());
    let once = formula_weak(&pi, &[], np.clone()).unwrap();
    let twice = formula_weak(&once, &[], np).unwrap();
    let c = contract_atom(&twice, &[], &parse("~p").unwrap()).unwrap();
    valid(&c);
    assert_eq!(c.conclusion, once.conclusion);
}

#[test]
fn stretch_moves_brackets() {
    // (2: <1>p, (1: ~p)) with the inner bracket moved to a sibling and back
    let g = parse_sequent("(2: (0: q, ~q)), (3: r)").unwrap();
    let pi = prove(&g, &SystemSpec::glp(), SearchBudget::default()).unwrap();
    let SearchOutcome::Proved(pi) = pi else { panic!() };
    let s = str_move(&pi, &[0], 0, &[1]).unwrap();
    valid(&s.proof);
    assert_eq!(s.proof.conclusion.to_string(), "(2: ), (3: r, (0: q, ~q))");
    let back = str_move(&s.proof, &[1], 0, &[0]).unwrap();
    valid(&back.proof);
    assert!(upstr_move(&s.proof, &[1], 0, &[0]).is_err());
}

#[test]
fn stretch_with_diamond_traffic() {
    let mut moved = 0;
    for d in proofs() {
        for sub in d.nodes() {
            let g = &sub.conclusion;
            for from in g.paths() {
                let n = g.node(&from).unwrap();
                for k in 0..n.children.len() {
                    for to in g.paths() {
                        let inner = { let mut m = from.clone(); m.push(k); m };
                        if to.starts_with(&inner) || to == from {
                            continue;
                        }
                        if let Ok(s) = str_move(sub, &from, k, &to) {
                            valid(&s.proof);
                            moved += 1;
                        }
                    }
                }
            }
        }
    }
    assert!(moved > 20, "only {moved} stretches applied");
}

#[test]
fn annotation_of_box_bracket() {
    for d in proofs() {
        for sub in d.nodes() {
            if let Rule::BoxIntro { node, formula: Formula::Box(i, a) } = &sub.rule {
                let inv = invert_box(sub, node, &Formula::Box(*i, a.clone())).unwrap();
                let child = { let mut c = node.clone(); c.push(sub.conclusion.node(node).unwrap().children.len()); c };
                let ann = annotate_diamond(&inv, &child, &Formula::dia(*i, a.negate())).unwrap();
                if let Err(v) = check(&ann, &SystemSpec::glp().with_annotations()) {
                    panic!("{v:?}");
                }
                assert!(ann.conclusion.has_annotations());
            }
        }
    }
}

/// Moving a bracket that holds a boxplus-cut hole down into a sibling
/// labelled 2 makes every such cut strictly deeper.
#[test]
fn upstr_deepens_boxplus_cuts() {
    use glp_core::calculus::{Base, CutScope};
    use glp_core::cutelim::Eliminator;
    use glp_core::search::generalized_axiom_at;
    let annotated = SystemSpec::glp()
        .with_cut(CutScope::Unrestricted)
        .with_box_plus_cut(CutScope::Unrestricted, None);
    let depths = |d: &Derivation| -> Vec<usize> {
        d.nodes()
            .into_iter()
            .filter_map(|n| match &n.rule {
                Rule::BoxPlusCut { holes, .. } => Some(holes[0].len()),
                _ => None,
            })
            .collect()
    };
    for (ctx, b) in [("(0: q)", "p"), ("(0: q)", "p & q"), ("(1: q, (0: r))", "<0>p"), ("(0: <0>q)", "[0]p | q"), ("(2: q)", "p")] {
        let a = Formula::boxed(0, parse(b).unwrap());
        let mut g = parse_sequent(ctx).unwrap();
        g.node_mut(&[0]).unwrap().formulas.extend([a.clone().into(), a.negate().into()]);
        let mut g1 = g.clone();
        g1.node_mut(&[0]).unwrap().formulas.push(a.clone().into());
        let mut g2 = g.clone();
        g2.node_mut(&[0]).unwrap().formulas.push(a.negate().into());
        let p1 = generalized_axiom_at(Base::Glp, g1, &[0], &a);
        let p2 = generalized_axiom_at(Base::Glp, g2, &[0], &a);
        let pi = Eliminator::new().reduce_cut(&p1, &p2, &g, &[0], &a).unwrap();
        let before = depths(&pi);
        assert!(!before.is_empty(), "{ctx} {b}");

        let target = NestedSequent::empty().with_child(2, NestedSequent::empty());
        let pi = weak(&pi, &[], &target).unwrap();
        let moved = upstr_move(&pi, &[], 0, &[1]).unwrap();
        check(&moved.proof, &annotated).unwrap_or_else(|v| panic!("{ctx} {b}: {v:?}"));
        assert_eq!(moved.moved_to, vec![0, 0]);
        assert!(!moved.depths.is_empty());
        assert!(moved.depths.iter().all(|(old, new)| new > old), "{:?}", moved.depths);
        let after = depths(&moved.proof);
        assert!(after.iter().min() > before.iter().min(), "{before:?} -> {after:?}");
    }
}
