//! Reduction of GLP to J, and a small Hilbert-style corpus embedded into
//! GLP_NS with cut.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::calculus::{premises_of, Base, Derivation, Rule, SystemSpec};
use crate::formula::{Formula, Modality};
use crate::search::{generalized_axiom_at, prove, prove_saturating, SearchBudget, SearchOutcome};
use crate::sequent::{AnnotatedFormula, NestedSequent, NodePath};
use crate::transform::{self, TransformError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReductionError {
    #[error("proof contains {0}, which the translation does not handle")]
    UnsupportedRule(&'static str),
    #[error("sequent carries annotations")]
    Annotated,
    #[error("translation step failed: {0}")]
    Step(String),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error("no proof found for {0}")]
    NotFound(String),
    #[error("malformed justification: {0}")]
    Malformed(String),
}

type Result<T> = std::result::Result<T, ReductionError>;

/// Box subformulas of `a` and of its negation, deduplicated and ordered by
/// their printed form.
fn box_subformulas(a: &Formula) -> Vec<Formula> {
    let mut seen = BTreeSet::new();
    for f in a.subformulas().into_iter().chain(a.negate().subformulas()) {
        if let Formula::Box(..) = f {
            seen.insert((f.to_string(), f));
        }
    }
    seen.into_iter().map(|(_, f)| f).collect()
}

fn pairs(a: &Formula) -> Vec<(Formula, Formula)> {
    let m = a.max_modality();
    let mut out = vec![];
    for f in box_subformulas(a) {
        let Formula::Box(i, b) = &f else { unreachable!() };
        for j in (*i as i64 + 1)..=m {
            out.push((f.clone(), Formula::boxed(j as Modality, (**b).clone())));
        }
    }
    out
}

/// `M(A)`: the conjunction of `[i]B -> [j]B` over box subformulas `[i]B` of
/// `A` and `~A` and `i < j <= m(A)`.
pub fn m_formula(a: &Formula) -> Formula {
    Formula::conj(pairs(a).into_iter().map(|(lo, hi)| Formula::implies(lo, hi)))
}

/// `M+(A) = M(A) & [0]M(A) & ... & [m]M(A)`.
pub fn m_plus(a: &Formula) -> Formula {
    let m = m_formula(a);
    let top = a.max_modality();
    if top < 0 {
        return m;
    }
    let boxes = (0..=top as Modality).map(|i| Formula::boxed(i, m.clone()));
    Formula::and(m.clone(), Formula::conj(boxes))
}

/// `W(Γ)` for the interpretation `a` of a sequent.
pub fn w_set(a: &Formula) -> Vec<Formula> {
    pairs(a).into_iter().map(|(lo, hi)| Formula::and(lo, hi.negate())).collect()
}

/// `W+(Γ)`: `W(Γ)` together with `<i>B` for each member `B` and `i <= m(Γ)`.
pub fn w_plus(g: &NestedSequent) -> Result<Vec<Formula>> {
    let a = g.interpret().map_err(|_| ReductionError::Annotated)?;
    let w = w_set(&a);
    let m = a.max_modality();
    let mut out = w.clone();
    for i in 0..=m {
        out.extend(w.iter().map(|b| Formula::dia(i as Modality, b.clone())));
    }
    Ok(out)
}

fn extend_all(g: &NestedSequent, w: &[Formula]) -> NestedSequent {
    let mut g = g.clone();
    for p in g.paths() {
        g.node_mut(&p).unwrap().formulas.extend(w.iter().cloned().map(AnnotatedFormula::Plain));
    }
    g
}

/// `Γ*`: every node extended by `W+(Γ)`.
pub fn star(g: &NestedSequent) -> Result<NestedSequent> {
    Ok(extend_all(g, &w_plus(g)?))
}

fn infer(g: NestedSequent, rule: Rule, subs: Vec<Derivation>) -> Result<Derivation> {
    let want = premises_of(&rule, &g).map_err(|e| ReductionError::Step(format!("{rule}: {e}")))?;
    for (w, s) in want.iter().zip(&subs) {
        if !w.aligned_eq(&s.conclusion) {
            return Err(ReductionError::Step(format!("{rule}: {} does not match {}", s.conclusion, w)));
        }
    }
    Ok(Derivation::new(g, rule, subs))
}

fn join(p: &[usize], k: usize) -> NodePath {
    let mut q = p.to_vec();
    q.push(k);
    q
}

/// Translates a cut-free GLP_NS proof of `Γ` into a proof of `Γ*` in J_NS
/// with weakening and contraction. One `W+(Γ)`, that of the endsequent, is
/// used throughout: a cut-free proof has the subformula property, so the
/// witnesses needed at every step already belong to it.
pub fn glp_to_j(pi: &Derivation) -> Result<Derivation> {
    let w = w_plus(&pi.conclusion)?;
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(1 << 28)
            .spawn_scoped(s, || translate(pi, &w))
            .expect("spawn translation thread")
            .join()
            .expect("translation thread panicked")
    })
}

fn translate(pi: &Derivation, w: &[Formula]) -> Result<Derivation> {
    let g = extend_all(&pi.conclusion, w);
    let subs = |k: usize| translate(&pi.premises[k], w);
    match &pi.rule {
        r @ (Rule::InitAtom { .. } | Rule::InitTop { .. }) => infer(g, r.clone(), vec![]),
        r @ Rule::AndIntro { .. } => infer(g, r.clone(), vec![subs(0)?, subs(1)?]),
        r @ Rule::OrIntro { .. } => infer(g, r.clone(), vec![subs(0)?]),
        Rule::Tran { node, child, formula } => {
            infer(g, Rule::JTran { node: node.clone(), child: *child, formula: formula.clone() }, vec![subs(0)?])
        }
        Rule::Eucl { node, child, formula } => {
            infer(g, Rule::JEucl { node: node.clone(), child: *child, formula: formula.clone() }, vec![subs(0)?])
        }
        Rule::BoxIntro { node, formula } => {
            let Formula::Box(i, _) = formula else { return Err(ReductionError::Step("box shape".into())) };
            let bx = Rule::JBoxIntro { node: node.clone(), formula: formula.clone() };
            let mut cur = premises_of(&bx, &g).map_err(|e| ReductionError::Step(e.to_string()))?.remove(0);
            let k = cur.node(node).unwrap().children.len() - 1;
            // fill the fresh bracket with W+ from its parent, one member at a time
            let mut steps = vec![(g.clone(), bx)];
            for f in w {
                let rule = match f {
                    Formula::Dia(l, body) if *l <= *i => {
                        Rule::JTran { node: node.clone(), child: k, formula: Formula::dia(*l, (**body).clone()) }
                    }
                    Formula::Dia(l, body) => Rule::JTranPrime {
                        node: node.clone(),
                        child: k,
                        formula: Formula::dia(*i, (**body).clone()),
                        j: *l,
                    },
                    _ => Rule::JDiaPrime { node: node.clone(), child: k, formula: Formula::dia(*i, f.clone()) },
                };
                let next = premises_of(&rule, &cur).map_err(|e| ReductionError::Step(format!("{rule}: {e}")))?.remove(0);
                steps.push((std::mem::replace(&mut cur, next), rule));
            }
            let mut d = subs(0)?;
            if !d.conclusion.aligned_eq(&cur) {
                return Err(ReductionError::Step(format!("box case: {} vs {}", d.conclusion, cur)));
            }
            while let Some((c, r)) = steps.pop() {
                d = Derivation::new(c, r, vec![d]);
            }
            Ok(d)
        }
        Rule::DiaProp { node, child, formula } => {
            let Formula::Dia(i, a) = formula else { return Err(ReductionError::Step("diamond shape".into())) };
            let j = g.edge_label(&join(node, *child)).unwrap();
            if *i == j {
                return infer(g, Rule::JDiaPrime { node: node.clone(), child: *child, formula: formula.clone() }, vec![subs(0)?]);
            }
            let witness = Formula::and(Formula::boxed(*i, a.negate()), Formula::dia(j, (**a).clone()));
            if !w.contains(&witness) {
                return Err(ReductionError::Step(format!("{witness} is not in W")));
            }
            let cont = Rule::Cont { node: node.clone(), formula: witness.clone() };
            let g1 = premises_of(&cont, &g).map_err(|e| ReductionError::Step(e.to_string()))?.remove(0);
            let and = Rule::AndIntro { node: node.clone(), formula: witness };
            let mut prems = premises_of(&and, &g1).map_err(|e| ReductionError::Step(e.to_string()))?;
            let right_g = prems.pop().unwrap();
            let left_g = prems.pop().unwrap();
            let left = generalized_axiom_at(Base::J, left_g, node, &Formula::boxed(*i, a.negate()));
            let dj = Formula::dia(j, (**a).clone());
            let dp = Rule::JDiaPrime { node: node.clone(), child: *child, formula: dj.clone() };
            let g2 = premises_of(&dp, &right_g).map_err(|e| ReductionError::Step(e.to_string()))?.remove(0);
            let weak = Rule::Weak { node: node.clone(), formula: dj };
            let right = infer(right_g, dp, vec![infer(g2, weak, vec![subs(0)?])?])?;
            infer(g, cont, vec![infer(g1, and, vec![left, right])?])
        }
        r => Err(ReductionError::UnsupportedRule(r.tag())),
    }
}

/// Hilbert axiom schemata of GLP, plus the two J axioms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Schema {
    /// Boolean tautology, from [`TAUTOLOGIES`].
    Taut(usize),
    K,
    Lob,
    DiaUp,
    Mono,
    /// `[i]A -> [j][i]A`, `i <= j` (J only).
    JOuter,
    /// `[i]A -> [i][j]A`, `i <= j` (J only).
    JInner,
}

impl Schema {
    pub fn tag(&self) -> String {
        match self {
            Schema::Taut(k) => format!("i.{k}"),
            Schema::K => "ii".into(),
            Schema::Lob => "iii".into(),
            Schema::DiaUp => "iv".into(),
            Schema::Mono => "v".into(),
            Schema::JOuter => "vi".into(),
            Schema::JInner => "vii".into(),
        }
    }
}

/// Tautology templates over `A` and `B`.
pub const TAUTOLOGIES: &[&str] = &[
    "A | ~A",
    "A -> (B -> A)",
    "(A & B) -> A",
    "A -> (A | B)",
    "(A -> B) -> (~B -> ~A)",
    "(A & (A -> B)) -> B",
    "A -> (B -> (A & B))",
];

const CONJ_INTRO: usize = 6;

/// Substitution for the schema variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Substitution {
    pub a: Formula,
    pub b: Formula,
    pub i: Modality,
    pub j: Modality,
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "A={}; B={}; i={}; j={}", self.a, self.b, self.i, self.j)
    }
}

/// How a formula is derived in the Hilbert system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Justification {
    Axiom { schema: Schema, subst: Substitution },
    /// From `A` and `A -> B`.
    ModusPonens(Box<(Formula, Justification)>, Box<(Formula, Justification)>),
    Necessitation(Modality, Box<(Formula, Justification)>),
}

impl Justification {
    pub fn tag(&self) -> String {
        match self {
            Justification::Axiom { schema, .. } => schema.tag(),
            Justification::ModusPonens(..) => "mp".into(),
            Justification::Necessitation(i, _) => format!("nec{i}"),
        }
    }
}

fn template(text: &str, s: &Substitution) -> Formula {
    use crate::formula::parse;
    let parsed = parse(&text.replace('A', "a_").replace('B', "b_")).expect("template parses");
    substitute(&parsed, s)
}

fn substitute(f: &Formula, s: &Substitution) -> Formula {
    match f {
        Formula::Atom(p) if &**p == "a_" => s.a.clone(),
        Formula::Atom(p) if &**p == "b_" => s.b.clone(),
        Formula::NegAtom(p) if &**p == "a_" => s.a.negate(),
        Formula::NegAtom(p) if &**p == "b_" => s.b.negate(),
        Formula::And(x, y) => Formula::and(substitute(x, s), substitute(y, s)),
        Formula::Or(x, y) => Formula::or(substitute(x, s), substitute(y, s)),
        Formula::Box(i, x) => Formula::boxed(*i, substitute(x, s)),
        Formula::Dia(i, x) => Formula::dia(*i, substitute(x, s)),
        other => other.clone(),
    }
}

/// The instance of `schema` under `s`.
pub fn instantiate(schema: Schema, s: &Substitution) -> Formula {
    let (a, i, j) = (s.a.clone(), s.i, s.j);
    match schema {
        Schema::Taut(k) => template(TAUTOLOGIES[k % TAUTOLOGIES.len()], s),
        Schema::K => Formula::implies(
            Formula::boxed(i, Formula::implies(a.clone(), s.b.clone())),
            Formula::implies(Formula::boxed(i, a), Formula::boxed(i, s.b.clone())),
        ),
        Schema::Lob => Formula::implies(
            Formula::boxed(i, Formula::implies(Formula::boxed(i, a.clone()), a.clone())),
            Formula::boxed(i, a),
        ),
        Schema::DiaUp => Formula::implies(Formula::dia(i, a.clone()), Formula::boxed(j, Formula::dia(i, a))),
        Schema::Mono => Formula::implies(Formula::boxed(i, a.clone()), Formula::boxed(j, a)),
        Schema::JOuter => Formula::implies(Formula::boxed(i, a.clone()), Formula::boxed(j, Formula::boxed(i, a))),
        Schema::JInner => Formula::implies(Formula::boxed(i, a.clone()), Formula::boxed(i, Formula::boxed(j, a))),
    }
}

/// The twelve substitutions of the corpus. Every one has `i < j <= 2`.
pub fn substitution_pool() -> Vec<Substitution> {
    use crate::formula::parse;
    let rows: [(&str, &str, Modality, Modality); 12] = [
        ("p", "q", 0, 1),
        ("p", "q", 1, 2),
        ("q", "p", 0, 2),
        ("~p", "q", 0, 1),
        ("p & q", "r", 0, 1),
        ("p | q", "~r", 1, 2),
        ("[0]p", "q", 0, 1),
        ("<0>p", "q", 1, 2),
        ("[1]q", "p & r", 0, 2),
        ("p -> q", "q", 0, 1),
        ("<1>~p", "[0]q", 1, 2),
        ("[0](p | q)", "r", 0, 2),
    ];
    rows.iter()
        .map(|(a, b, i, j)| Substitution { a: parse(a).unwrap(), b: parse(b).unwrap(), i: *i, j: *j })
        .collect()
}

/// A corpus entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub formula: Formula,
    pub justification: Justification,
}

impl Instance {
    /// One line of the corpus file: tag, substitution, formula.
    pub fn record(&self) -> String {
        let subst = match &self.justification {
            Justification::Axiom { subst, .. } => subst.to_string(),
            Justification::ModusPonens(a, ab) => format!("{} ; {}", a.0, ab.0),
            Justification::Necessitation(_, a) => a.0.to_string(),
        };
        format!("{}\t{}\t{}", self.justification.tag(), subst, self.formula)
    }
}

/// Axiom instances (i)-(v), one per substitution and schema. The tautology
/// template cycles with the substitution.
pub fn hilbert_corpus() -> Vec<Instance> {
    let mut out = vec![];
    for (k, s) in substitution_pool().into_iter().enumerate() {
        for schema in [Schema::Taut(k), Schema::K, Schema::Lob, Schema::DiaUp, Schema::Mono] {
            out.push(Instance {
                formula: instantiate(schema, &s),
                justification: Justification::Axiom { schema, subst: s.clone() },
            });
        }
    }
    out
}

/// `count` modus ponens consequences of depth one: from axiom instances `X`
/// and `X -> (Y -> X & Y)` conclude `Y -> X & Y`.
pub fn modus_ponens_instances(count: usize) -> Vec<Instance> {
    let base = hilbert_corpus();
    let n = base.len();
    let mut out = vec![];
    let mut step = 0;
    while out.len() < count && step < n * n {
        let x = &base[step % n];
        let y = &base[(step * 7 + 3) % n];
        step += 1;
        let s = Substitution { a: x.formula.clone(), b: y.formula.clone(), i: 0, j: 1 };
        let conj_intro = instantiate(Schema::Taut(CONJ_INTRO), &s);
        let taut = Instance {
            formula: conj_intro.clone(),
            justification: Justification::Axiom { schema: Schema::Taut(CONJ_INTRO), subst: s },
        };
        let Formula::Or(_, concl) = &conj_intro else { unreachable!() };
        out.push(Instance {
            formula: (**concl).clone(),
            justification: Justification::ModusPonens(
                Box::new((x.formula.clone(), x.justification.clone())),
                Box::new((taut.formula, taut.justification)),
            ),
        });
    }
    out
}

fn singleton(a: &Formula) -> NestedSequent {
    NestedSequent::from_formulas([a.clone()])
}

fn search_proof(g: &NestedSequent, saturate: bool) -> Result<Derivation> {
    let search = if saturate { prove_saturating } else { prove };
    match search(g, &SystemSpec::glp(), SearchBudget::default()) {
        Ok(SearchOutcome::Proved(d)) => Ok(d),
        _ => Err(ReductionError::NotFound(g.to_string())),
    }
}

/// A GLP_NS + cut proof of `{A}` following the Hilbert derivation. An axiom
/// instance `A` is cut on its antecedent `C`: both `{A, C}` and `{A, ~C}`
/// have cut-free proofs. Modus ponens is a cut on the minor premise and
/// necessitation goes through the admissible rule.
///
/// Premises of modal axioms are found by saturating search, so their modal
/// structure is spelled out rather than hidden in generalized axioms.
pub fn hilbert_embed(a: &Formula, j: &Justification) -> Result<Derivation> {
    match j {
        Justification::Axiom { schema, .. } => {
            let saturate = !matches!(schema, Schema::Taut(_));
            let search_proof = |g: &NestedSequent| search_proof(g, saturate);
            let g = singleton(a);
            let Formula::Or(ante, _) = a else { return search_proof(&g) };
            let cut = ante.negate();
            let mut g1 = g.clone();
            g1.formulas.push(cut.clone().into());
            let mut g2 = g.clone();
            g2.formulas.push(cut.negate().into());
            Ok(Derivation::new(g, Rule::Cut { node: vec![], formula: cut }, vec![search_proof(&g1)?, search_proof(&g2)?]))
        }
        Justification::ModusPonens(x, xy) => {
            let (x_f, x_j) = &**x;
            let (xy_f, xy_j) = &**xy;
            match xy_f {
                Formula::Or(l, r) if **l == x_f.negate() && **r == *a => {}
                _ => return Err(ReductionError::Malformed(format!("{xy_f} is not {x_f} -> {a}"))),
            }
            let px = hilbert_embed(x_f, x_j)?;
            let pxy = hilbert_embed(xy_f, xy_j)?;
            let left = transform::formula_weak(&px, &[], a.clone().into())?;
            let right = transform::invert_or(&pxy, &[], xy_f)?;
            // right proves {~X, B}; the cut premise wants {B, ~X}
            let g = singleton(a);
            Ok(Derivation::new(g, Rule::Cut { node: vec![], formula: x_f.clone() }, vec![left, right]))
        }
        Justification::Necessitation(i, x) => {
            let (x_f, x_j) = &**x;
            match a {
                Formula::Box(k, body) if k == i && **body == *x_f => {}
                _ => return Err(ReductionError::Malformed(format!("{a} is not [{i}]{x_f}"))),
            }
            let px = hilbert_embed(x_f, x_j)?;
            let nb = transform::necessitation_box(&px, *i)?;
            let nb = transform::formula_weak(&nb, &[0], Formula::dia(*i, x_f.negate()).into())?;
            Ok(Derivation::new(singleton(a), Rule::BoxIntro { node: vec![], formula: a.clone() }, vec![nb]))
        }
    }
}
