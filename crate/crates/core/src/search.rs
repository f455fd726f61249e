//! Backward proof search for GLP_NS and J_NS, plus the direct construction
//! of generalized axioms `Γ{A, ~A}`.
//!
//! Every rule of both calculi is invertible, so the search never backtracks
//! over rule choices; it only branches on conjunctions. Copy rules fire when
//! they would add a formula the target node has never held, and each boxed
//! formula is unfolded at most once per node. A branch on which nothing more
//! fires and no initial sequent appears is a refutation.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::calculus::{Base, Derivation, Rule, SystemSpec};
use crate::formula::{Formula, Modality};
use crate::sequent::{AnnotatedFormula, Context, NestedSequent, NodePath};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchBudget {
    /// Maximum number of inferences in the search tree.
    pub max_nodes: usize,
    /// Maximum nesting depth of the sequents explored.
    pub max_height: usize,
    pub time_limit: Option<Duration>,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { max_nodes: 200_000, max_height: 40, time_limit: Some(Duration::from_secs(60)) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchOutcome {
    Proved(Derivation),
    NotProvable,
    Exhausted,
}

impl SearchOutcome {
    pub fn is_proved(&self) -> bool {
        matches!(self, SearchOutcome::Proved(_))
    }

    pub fn verdict(&self) -> &'static str {
        match self {
            SearchOutcome::Proved(_) => "PROVED",
            SearchOutcome::NotProvable => "NOT-PROVABLE",
            SearchOutcome::Exhausted => "EXHAUSTED",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("search goals must not contain annotated formulas")]
    AnnotatedGoal,
    #[error("search is cut-free; the system must not contain cut rules")]
    CutSystem,
    #[error("search only covers the base calculi, not weakening or contraction")]
    StructuralSystem,
}

/// Per-node memory of what the branch has already done.
#[derive(Clone, Debug, Default)]
struct History {
    seen: HashSet<Formula>,
    unfolded: HashSet<Formula>,
    children: Vec<History>,
}

impl History {
    fn of(s: &NestedSequent) -> History {
        History {
            seen: s.formulas.iter().filter_map(|f| f.plain().cloned()).collect(),
            unfolded: HashSet::new(),
            children: s.children.iter().map(|c| History::of(&c.body)).collect(),
        }
    }

    fn at(&mut self, path: &[usize]) -> &mut History {
        let mut h = self;
        for &k in path {
            h = &mut h.children[k];
        }
        h
    }
}

enum Step {
    Unary(Rule),
    Branch(Rule),
}

struct Searcher {
    base: Base,
    /// Largest modality of the goal; bounds the J tran' index.
    top: Modality,
    budget: SearchBudget,
    start: Instant,
    steps: usize,
    refuted: HashSet<String>,
    /// Close nodes holding a compound formula and its negation directly.
    shortcut: bool,
}

enum Fail {
    Refuted,
    Exhausted,
}

pub fn prove(goal: &NestedSequent, sys: &SystemSpec, budget: SearchBudget) -> Result<SearchOutcome, SearchError> {
    run(goal, sys, budget, true)
}

/// As [`prove`], but branches close on initial sequents only: complementary
/// compound pairs are decomposed like everything else.
pub fn prove_saturating(goal: &NestedSequent, sys: &SystemSpec, budget: SearchBudget) -> Result<SearchOutcome, SearchError> {
    run(goal, sys, budget, false)
}

fn run(goal: &NestedSequent, sys: &SystemSpec, budget: SearchBudget, shortcut: bool) -> Result<SearchOutcome, SearchError> {
    if goal.has_annotations() {
        return Err(SearchError::AnnotatedGoal);
    }
    if sys.has_cuts() {
        return Err(SearchError::CutSystem);
    }
    if sys.annotated || sys.weak || sys.cont {
        return Err(SearchError::StructuralSystem);
    }
    let mut s = Searcher {
        base: sys.base,
        top: goal.max_modality().max(0) as Modality,
        budget,
        start: Instant::now(),
        steps: 0,
        refuted: HashSet::new(),
        shortcut,
    };
    Ok(match s.solve(goal.clone(), History::of(goal)) {
        Ok(d) => SearchOutcome::Proved(d),
        Err(Fail::Refuted) => SearchOutcome::NotProvable,
        Err(Fail::Exhausted) => SearchOutcome::Exhausted,
    })
}

/// Convenience wrapper for a single formula goal.
pub fn prove_formula(a: &Formula, sys: &SystemSpec, budget: SearchBudget) -> Result<SearchOutcome, SearchError> {
    prove(&NestedSequent::singleton(a.clone()), sys, budget)
}

impl Searcher {
    fn over_budget(&self, g: &NestedSequent) -> bool {
        self.steps > self.budget.max_nodes
            || g.height() > self.budget.max_height
            || self.budget.time_limit.is_some_and(|t| self.steps.is_multiple_of(64) && self.start.elapsed() > t)
    }

    fn solve(&mut self, goal: NestedSequent, hist: History) -> Result<Derivation, Fail> {
        let key = goal.canonical();
        if self.refuted.contains(&key) {
            return Err(Fail::Refuted);
        }
        let mut g = goal;
        let mut h = hist;
        let mut chain: Vec<(NestedSequent, Rule)> = vec![];
        let top = loop {
            self.steps += 1;
            if self.over_budget(&g) {
                return Err(Fail::Exhausted);
            }
            if let Some(r) = find_initial(&g, &mut vec![]) {
                break Derivation::leaf(g, r);
            }
            // a complementary pair closes the branch directly
            if let Some((node, f)) = self.shortcut.then(|| find_complement(&g)).flatten() {
                break generalized_axiom_at(self.base, g, &node, &f);
            }
            match self.next_step(&g, &mut h) {
                None => {
                    self.refuted.insert(key);
                    return Err(Fail::Refuted);
                }
                Some(Step::Unary(r)) => {
                    let prem = crate::calculus::premises_of(&r, &g)
                        .expect("search only emits applicable rules")
                        .pop()
                        .expect("unary rule");
                    record(&mut h, &r, &prem);
                    chain.push((std::mem::replace(&mut g, prem), r));
                }
                Some(Step::Branch(r)) => {
                    let prems = crate::calculus::premises_of(&r, &g).expect("search only emits applicable rules");
                    let mut subs = vec![];
                    for p in prems {
                        let mut hp = h.clone();
                        record(&mut hp, &r, &p);
                        match self.solve(p, hp) {
                            Ok(d) => subs.push(d),
                            Err(Fail::Refuted) => {
                                self.refuted.insert(key);
                                return Err(Fail::Refuted);
                            }
                            Err(e) => return Err(e),
                        }
                    }
                    break Derivation::new(g, r, subs);
                }
            }
        };
        let mut d = top;
        while let Some((concl, r)) = chain.pop() {
            d = Derivation::new(concl, r, vec![d]);
        }
        Ok(d)
    }

    fn next_step(&self, g: &NestedSequent, h: &mut History) -> Option<Step> {
        let paths = g.paths();
        // disjunctions
        for p in &paths {
            for f in &g.node(p).unwrap().formulas {
                if let AnnotatedFormula::Plain(f @ Formula::Or(..)) = f {
                    return Some(Step::Unary(Rule::OrIntro { node: p.clone(), formula: f.clone() }));
                }
            }
        }
        // copying diamonds
        for p in &paths {
            if let Some(r) = self.copy_step(g, h, p) {
                return Some(Step::Unary(r));
            }
        }
        // conjunctions
        for p in &paths {
            for f in &g.node(p).unwrap().formulas {
                if let AnnotatedFormula::Plain(f @ Formula::And(..)) = f {
                    return Some(Step::Branch(Rule::AndIntro { node: p.clone(), formula: f.clone() }));
                }
            }
        }
        // unfolding boxes
        for p in &paths {
            let hn = h.at(p);
            for f in &g.node(p).unwrap().formulas {
                if let AnnotatedFormula::Plain(f @ Formula::Box(..)) = f {
                    if !hn.unfolded.contains(f) {
                        let formula = f.clone();
                        return Some(Step::Unary(match self.base {
                            Base::Glp => Rule::BoxIntro { node: p.clone(), formula },
                            Base::J => Rule::JBoxIntro { node: p.clone(), formula },
                        }));
                    }
                }
            }
        }
        None
    }

    fn copy_step(&self, g: &NestedSequent, h: &mut History, p: &NodePath) -> Option<Rule> {
        let n = g.node(p).unwrap();
        let hn = h.at(p);
        for (k, c) in n.children.iter().enumerate() {
            let j = c.index;
            let hc = &hn.children[k];
            for f in &n.formulas {
                let AnnotatedFormula::Plain(f @ Formula::Dia(i, a)) = f else { continue };
                let i = *i;
                let node = p.clone();
                let formula = f.clone();
                match self.base {
                    Base::Glp => {
                        if i <= j && !hc.seen.contains(a.as_ref()) {
                            return Some(Rule::DiaProp { node, child: k, formula });
                        }
                        if i <= j && !hc.seen.contains(f) {
                            return Some(Rule::Tran { node, child: k, formula });
                        }
                    }
                    Base::J => {
                        if i == j && !hc.seen.contains(a.as_ref()) {
                            return Some(Rule::JDiaPrime { node, child: k, formula });
                        }
                        if i <= j && !hc.seen.contains(f) {
                            return Some(Rule::JTran { node, child: k, formula });
                        }
                        if i == j {
                            for jj in i..=self.top.max(i) {
                                if !hc.seen.contains(&Formula::dia(jj, (**a).clone())) {
                                    return Some(Rule::JTranPrime { node, child: k, formula, j: jj });
                                }
                            }
                        }
                    }
                }
            }
            for f in &c.body.formulas {
                let AnnotatedFormula::Plain(f @ Formula::Dia(i, _)) = f else { continue };
                if *i < j && !hn.seen.contains(f) {
                    let (node, formula) = (p.clone(), f.clone());
                    return Some(match self.base {
                        Base::Glp => Rule::Eucl { node, child: k, formula },
                        Base::J => Rule::JEucl { node, child: k, formula },
                    });
                }
            }
        }
        None
    }
}

/// Updates the branch history after `rule` produced `premise`.
fn record(h: &mut History, rule: &Rule, premise: &NestedSequent) {
    match rule {
        Rule::BoxIntro { node, formula } | Rule::JBoxIntro { node, formula } => {
            let hn = h.at(node);
            hn.unfolded.insert(formula.clone());
            let child = premise.node(node).unwrap().children.last().unwrap();
            hn.children.push(History::of(&child.body));
        }
        _ => {
            for p in premise.paths() {
                if let Some(hn) = h_at_opt(h, &p) {
                    for f in &premise.node(&p).unwrap().formulas {
                        if let Some(f) = f.plain() {
                            if !hn.seen.contains(f) {
                                hn.seen.insert(f.clone());
                            }
                        }
                    }
                }
            }
        }
    }
}

fn h_at_opt<'a>(h: &'a mut History, path: &[usize]) -> Option<&'a mut History> {
    let mut cur = h;
    for &k in path {
        cur = cur.children.get_mut(k)?;
    }
    Some(cur)
}

fn find_initial(g: &NestedSequent, path: &mut NodePath) -> Option<Rule> {
    for f in &g.formulas {
        match f {
            AnnotatedFormula::Plain(Formula::Top) => return Some(Rule::InitTop { node: path.clone() }),
            AnnotatedFormula::Plain(Formula::Atom(p)) => {
                if g.contains_plain(&Formula::NegAtom(p.clone())) {
                    return Some(Rule::InitAtom { node: path.clone(), atom: p.clone() });
                }
            }
            _ => {}
        }
    }
    for (k, c) in g.children.iter().enumerate() {
        path.push(k);
        let r = find_initial(&c.body, path);
        path.pop();
        if r.is_some() {
            return r;
        }
    }
    None
}

fn find_complement(g: &NestedSequent) -> Option<(NodePath, Formula)> {
    for p in g.paths() {
        let n = g.node(&p).unwrap();
        for f in &n.formulas {
            let Some(f) = f.plain() else { continue };
            if matches!(f, Formula::And(..) | Formula::Box(..)) && n.contains_plain(&f.negate()) {
                return Some((p, f.clone()));
            }
        }
    }
    None
}

/// Direct proof of `fill(ctx, {A, ~A})` by induction on `A`, in GLP_NS.
pub fn prove_generalized_axiom(ctx: &Context, a: &Formula) -> Derivation {
    prove_generalized_axiom_in(Base::Glp, ctx, a)
}

/// As [`prove_generalized_axiom`], for either base calculus.
pub fn prove_generalized_axiom_in(base: Base, ctx: &Context, a: &Formula) -> Derivation {
    let hole = &ctx.holes[0];
    let mut g = ctx.skeleton.clone();
    let n = g.node_mut(hole).expect("hole resolves in the skeleton");
    n.formulas.push(a.clone().into());
    n.formulas.push(a.negate().into());
    generalized_axiom_at(base, g, hole, a)
}

/// Proof of `g`, which must hold both `a` and its negation at `node`.
pub fn generalized_axiom_at(base: Base, g: NestedSequent, node: &[usize], a: &Formula) -> Derivation {
    let positive = match a {
        Formula::NegAtom(_) | Formula::Bot | Formula::Or(..) | Formula::Dia(..) => a.negate(),
        _ => a.clone(),
    };
    let node = node.to_vec();
    match &positive {
        Formula::Atom(p) => Derivation::leaf(g, Rule::InitAtom { node, atom: p.clone() }),
        Formula::Top => Derivation::leaf(g, Rule::InitTop { node }),
        Formula::And(b, c) => {
            let or = Rule::OrIntro { node: node.clone(), formula: positive.negate() };
            let g1 = crate::calculus::premises_of(&or, &g).unwrap().pop().unwrap();
            let and = Rule::AndIntro { node: node.clone(), formula: positive.clone() };
            let mut prems = crate::calculus::premises_of(&and, &g1).unwrap();
            let right = generalized_axiom_at(base, prems.pop().unwrap(), &node, c);
            let left = generalized_axiom_at(base, prems.pop().unwrap(), &node, b);
            let d1 = Derivation::new(g1, and, vec![left, right]);
            Derivation::new(g, or, vec![d1])
        }
        Formula::Box(i, b) => {
            let bx = match base {
                Base::Glp => Rule::BoxIntro { node: node.clone(), formula: positive.clone() },
                Base::J => Rule::JBoxIntro { node: node.clone(), formula: positive.clone() },
            };
            let g1 = crate::calculus::premises_of(&bx, &g).unwrap().pop().unwrap();
            let k = g1.node(&node).unwrap().children.len() - 1;
            let dia = Formula::dia(*i, b.negate());
            let dp = match base {
                Base::Glp => Rule::DiaProp { node: node.clone(), child: k, formula: dia },
                Base::J => Rule::JDiaPrime { node: node.clone(), child: k, formula: dia },
            };
            let g2 = crate::calculus::premises_of(&dp, &g1).unwrap().pop().unwrap();
            let mut inner = node.clone();
            inner.push(k);
            let rest = generalized_axiom_at(base, g2, &inner, b);
            Derivation::new(g, bx, vec![Derivation::new(g1, dp, vec![rest])])
        }
        _ => unreachable!("positive formulas are atoms, T, conjunctions or boxes"),
    }
}
