//! Admissible rules as proof transformations.
//!
//! Every transformer walks an input proof from the endsequent upwards while
//! building a proof of a modified endsequent. A [`PathMap`] relates the node
//! paths of the old sequent at the current inference to those of the new
//! one; it is extended whenever an old `Box` inference creates a node. Most
//! inferences are simply re-addressed through the map; each transformer
//! overrides the few that touch the part of the sequent it changes.
//!
//! Inputs must be aligned (see [`align`]): every premise's children appear in
//! the positions [`premises_of`] gives them. All outputs are aligned.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use thiserror::Error;

use crate::calculus::{premises_of, Derivation, Rule, RuleError};
use crate::formula::{Formula, Modality};
use crate::sequent::{path_to_string, AnnotatedFormula, Child, NestedSequent, NodePath};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("path {0} does not resolve")]
    BadPath(String),
    #[error("{0}")]
    Precondition(String),
    #[error("rebuilt inference {rule} failed: {source}")]
    Rule { rule: String, source: RuleError },
    #[error("annotated diamond would have to move upwards")]
    AnnotatedUpMove,
    #[error("no {kind}path from {from} to {to} for index {index}")]
    NoPath { kind: &'static str, from: String, to: String, index: Modality },
}

fn precondition(msg: impl Into<String>) -> TransformError {
    TransformError::Precondition(msg.into())
}

fn bad_path(p: &[usize]) -> TransformError {
    TransformError::BadPath(path_to_string(p))
}

fn join(p: &[usize], k: usize) -> NodePath {
    let mut q = p.to_vec();
    q.push(k);
    q
}

/// Node correspondence between an old and a new sequent.
#[derive(Clone, Debug, Default)]
pub struct PathMap {
    map: HashMap<NodePath, NodePath>,
}

impl PathMap {
    pub fn identity(g: &NestedSequent) -> PathMap {
        PathMap { map: g.paths().into_iter().map(|p| (p.clone(), p)).collect() }
    }

    pub fn from_fn(g: &NestedSequent, f: impl Fn(&[usize]) -> NodePath) -> PathMap {
        PathMap { map: g.paths().into_iter().map(|p| (f(&p), p)).map(|(n, p)| (p, n)).collect() }
    }

    pub fn get(&self, p: &[usize]) -> NodePath {
        match self.map.get(p) {
            Some(q) => q.clone(),
            None => panic!("path {} is not mapped", path_to_string(p)),
        }
    }

    pub fn try_get(&self, p: &[usize]) -> Option<&NodePath> {
        self.map.get(p)
    }

    pub fn insert(&mut self, old: NodePath, new: NodePath) {
        self.map.insert(old, new);
    }

    fn remap(&self, r: &Rule) -> Rule {
        r.remap(&|p| self.get(p))
    }
}

/// What to do with one inference of the old proof.
pub(crate) enum Action {
    /// Re-address the rule through the path map.
    Keep,
    /// Apply `prefix` (bottom-up, each unary) and then `rule`, all in new
    /// coordinates; the premises of `rule` correspond to the old premises.
    Emit { prefix: Vec<Rule>, rule: Rule },
    /// Drop the inference and continue with old premise `k`, whose sequent
    /// the current new sequent already simulates.
    Skip(usize),
}

pub(crate) trait Translate: Clone {
    fn paths(&self) -> &PathMap;
    fn paths_mut(&mut self) -> &mut PathMap;

    fn translate(&mut self, _old: &Derivation, _new: &NestedSequent) -> Result<Action, TransformError> {
        Ok(Action::Keep)
    }

    /// State update for old premise `k` after the inference was emitted.
    /// `before` is the new sequent the main rule was applied to.
    fn after(&mut self, old: &Derivation, _k: usize, before: &NestedSequent, _premise: &NestedSequent) {
        extend_for_box(self.paths_mut(), old, before);
    }

    /// State update after [`Action::Skip`].
    fn after_skip(&mut self, _old: &Derivation, _k: usize, _new: &NestedSequent) -> Result<(), TransformError> {
        Ok(())
    }
}

/// If `old` is a box inference at node N, maps the node it creates to the
/// node the rebuilt inference creates at the image of N.
fn extend_for_box(map: &mut PathMap, old: &Derivation, before: &NestedSequent) {
    if let Rule::BoxIntro { node, .. } | Rule::JBoxIntro { node, .. } = &old.rule {
        let c_old = old.conclusion.node(node).map(|n| n.children.len()).unwrap_or(0);
        let image = map.get(node);
        let c_new = before.node(&image).map(|n| n.children.len()).unwrap_or(0);
        map.insert(join(node, c_old), join(&image, c_new));
    }
}

fn rebuild(rule: &Rule, g: &NestedSequent) -> Result<Vec<NestedSequent>, TransformError> {
    premises_of(rule, g).map_err(|source| TransformError::Rule { rule: rule.to_string(), source })
}

pub(crate) fn run<T: Translate>(old: &Derivation, new: NestedSequent, st: T) -> Result<Derivation, TransformError> {
    let mut st = st;
    match st.translate(old, &new)? {
        Action::Skip(k) => {
            st.after_skip(old, k, &new)?;
            run(&old.premises[k], new, st)
        }
        action => {
            let (prefix, rule) = match action {
                Action::Keep => (vec![], st.paths().remap(&old.rule)),
                Action::Emit { prefix, rule } => (prefix, rule),
                Action::Skip(_) => unreachable!(),
            };
            let mut chain = vec![];
            let mut cur = new;
            for r in prefix {
                let p = rebuild(&r, &cur)?.pop().expect("prefix rules are unary");
                chain.push((std::mem::replace(&mut cur, p), r));
            }
            let prems = rebuild(&rule, &cur)?;
            if prems.len() != old.premises.len() {
                return Err(precondition(format!("{} changed its arity", rule.tag())));
            }
            let mut subs = Vec::with_capacity(prems.len());
            for (k, p) in prems.into_iter().enumerate() {
                let mut sk = st.clone();
                sk.after(old, k, &cur, &p);
                subs.push(run(&old.premises[k], p, sk)?);
            }
            let mut d = Derivation::new(cur, rule, subs);
            while let Some((c, r)) = chain.pop() {
                d = Derivation::new(c, r, vec![d]);
            }
            Ok(d)
        }
    }
}

#[derive(Clone)]
struct Plain {
    map: PathMap,
}

impl Translate for Plain {
    fn paths(&self) -> &PathMap {
        &self.map
    }
    fn paths_mut(&mut self) -> &mut PathMap {
        &mut self.map
    }
}

/// Re-addresses `pi` onto `new`, which must contain the image of every node
/// and formula of `pi`'s endsequent under `map`.
pub fn relocate(pi: &Derivation, new: NestedSequent, map: PathMap) -> Result<Derivation, TransformError> {
    run(pi, new, Plain { map })
}

/// Weakening: a proof of the endsequent with `delta` merged into `node`.
pub fn weak(pi: &Derivation, node: &[usize], delta: &NestedSequent) -> Result<Derivation, TransformError> {
    if delta.is_empty() {
        return Ok(pi.clone());
    }
    let mut g = pi.conclusion.clone();
    g.try_node_mut(node).map_err(|_| bad_path(node))?.absorb(delta.clone());
    relocate(pi, g, PathMap::identity(&pi.conclusion))
}

/// Weakening by a single formula.
pub fn formula_weak(pi: &Derivation, node: &[usize], a: AnnotatedFormula) -> Result<Derivation, TransformError> {
    weak(pi, node, &NestedSequent { formulas: vec![a], children: vec![] })
}

/// Monotonicity: relabels the edge into `child` to `j`, which must not be
/// smaller than the current label.
pub fn mon(pi: &Derivation, child: &[usize], j: Modality) -> Result<Derivation, TransformError> {
    let (last, parent) = child.split_last().ok_or_else(|| precondition("mon needs a non-root node"))?;
    let mut g = pi.conclusion.clone();
    let c = g
        .try_node_mut(parent)
        .ok()
        .and_then(|n| n.children.get_mut(*last))
        .ok_or_else(|| bad_path(child))?;
    if c.index > j {
        return Err(precondition(format!("mon requires i <= j, got {} > {j}", c.index)));
    }
    c.index = j;
    relocate(pi, g, PathMap::identity(&pi.conclusion))
}

/// Merge: children `k1` and `k2` of `parent` (equal labels) become one node
/// at the position of `k1` (shifted if `k2 < k1`).
pub fn merge(pi: &Derivation, parent: &[usize], k1: usize, k2: usize) -> Result<Derivation, TransformError> {
    let g = &pi.conclusion;
    let p = g.try_node(parent).map_err(|_| bad_path(parent))?;
    if k1 == k2 || k1 >= p.children.len() || k2 >= p.children.len() {
        return Err(precondition("merge needs two distinct children"));
    }
    if p.children[k1].index != p.children[k2].index {
        return Err(precondition("merge needs equal labels"));
    }
    let k1n = if k2 < k1 { k1 - 1 } else { k1 };
    let offset = p.children[k1].body.children.len();
    let depth = parent.len();
    let map = PathMap::from_fn(g, |q| {
        if q.len() <= depth || q[..depth] != *parent {
            return q.to_vec();
        }
        let mut out = parent.to_vec();
        let x = q[depth];
        let rest = &q[depth + 1..];
        if x == k2 {
            out.push(k1n);
            if let Some((first, tail)) = rest.split_first() {
                out.push(first + offset);
                out.extend_from_slice(tail);
            }
        } else {
            out.push(if x > k2 { x - 1 } else { x });
            out.extend_from_slice(rest);
        }
        out
    });
    let mut new = g.clone();
    let pn = new.node_mut(parent).unwrap();
    let moved = pn.children.remove(k2).body;
    pn.children[k1n].body.absorb(moved);
    relocate(pi, new, map)
}

/// Necessitation: a proof of `(i: Γ)` from a proof of `Γ`.
pub fn necessitation_box(pi: &Derivation, i: Modality) -> Result<Derivation, TransformError> {
    let new = NestedSequent::empty().with_child(i, pi.conclusion.clone());
    let map = PathMap::from_fn(&pi.conclusion, |q| {
        let mut out = vec![0];
        out.extend_from_slice(q);
        out
    });
    relocate(pi, new, map)
}

/// Removes one copy of `f` at `node`. Sound for formulas that no rule
/// consumes (literals, constants, diamonds, annotated diamonds) whenever
/// another copy remains.
pub fn contract(pi: &Derivation, node: &[usize], f: &AnnotatedFormula) -> Result<Derivation, TransformError> {
    let consumable = matches!(
        f,
        AnnotatedFormula::Plain(Formula::And(..) | Formula::Or(..) | Formula::Box(..))
    );
    if consumable {
        return Err(precondition(format!("cannot contract {f}")));
    }
    let n = pi.conclusion.try_node(node).map_err(|_| bad_path(node))?;
    if n.count(f) < 2 {
        return Err(precondition(format!("contraction needs two copies of {f}")));
    }
    let mut g = pi.conclusion.clone();
    g.node_mut(node).unwrap().remove_one(f);
    relocate(pi, g, PathMap::identity(&pi.conclusion))
}

/// Atom contraction: `Γ{p, p}` to `Γ{p}`. Literal `p` may be negative.
pub fn contract_atom(pi: &Derivation, node: &[usize], p: &Formula) -> Result<Derivation, TransformError> {
    if !p.is_atomic() {
        return Err(precondition(format!("{p} is not a literal")));
    }
    contract(pi, node, &AnnotatedFormula::Plain(p.clone()))
}

#[derive(Clone)]
struct Invert {
    map: PathMap,
    /// Node and formula of the tracked principal; cleared once consumed.
    target: Option<(NodePath, Formula)>,
    kind: InvertKind,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum InvertKind {
    Or,
    And(usize),
    Box { child: usize },
}

impl Translate for Invert {
    fn paths(&self) -> &PathMap {
        &self.map
    }
    fn paths_mut(&mut self) -> &mut PathMap {
        &mut self.map
    }

    fn translate(&mut self, old: &Derivation, _new: &NestedSequent) -> Result<Action, TransformError> {
        let Some((node, f)) = &self.target else { return Ok(Action::Keep) };
        let hit = match (&old.rule, self.kind) {
            (Rule::OrIntro { node: n, formula }, InvertKind::Or) => n == node && formula == f,
            (Rule::AndIntro { node: n, formula }, InvertKind::And(_)) => n == node && formula == f,
            (Rule::BoxIntro { node: n, formula }, InvertKind::Box { .. }) => n == node && formula == f,
            _ => false,
        };
        Ok(match (hit, self.kind) {
            (false, _) => Action::Keep,
            (true, InvertKind::And(k)) => Action::Skip(k),
            (true, _) => Action::Skip(0),
        })
    }

    fn after_skip(&mut self, old: &Derivation, _k: usize, _new: &NestedSequent) -> Result<(), TransformError> {
        if let (InvertKind::Box { child }, Some((node, _))) = (self.kind, &self.target) {
            let c_old = old.conclusion.node(node).unwrap().children.len();
            let image = self.map.get(node);
            self.map.insert(join(node, c_old), join(&image, child));
        }
        self.target = None;
        Ok(())
    }
}

fn invert_with(pi: &Derivation, node: &[usize], f: &Formula, kind: InvertKind) -> Result<Derivation, TransformError> {
    let rule = match kind {
        InvertKind::Or => Rule::OrIntro { node: node.to_vec(), formula: f.clone() },
        InvertKind::And(_) => Rule::AndIntro { node: node.to_vec(), formula: f.clone() },
        InvertKind::Box { .. } => Rule::BoxIntro { node: node.to_vec(), formula: f.clone() },
    };
    let mut prems = rebuild(&rule, &pi.conclusion)?;
    let g = match kind {
        InvertKind::And(k) => prems.swap_remove(k),
        _ => prems.swap_remove(0),
    };
    let kind = match kind {
        InvertKind::Box { .. } => InvertKind::Box { child: pi.conclusion.node(node).unwrap().children.len() },
        k => k,
    };
    let st = Invert { map: PathMap::identity(&pi.conclusion), target: Some((node.to_vec(), f.clone())), kind };
    run(pi, g, st)
}

/// `Γ{A | B}` to `Γ{A, B}`.
pub fn invert_or(pi: &Derivation, node: &[usize], f: &Formula) -> Result<Derivation, TransformError> {
    invert_with(pi, node, f, InvertKind::Or)
}

/// `Γ{A & B}` to `Γ{A}` (`side` 0) or `Γ{B}` (`side` 1).
pub fn invert_and(pi: &Derivation, node: &[usize], f: &Formula, side: usize) -> Result<Derivation, TransformError> {
    invert_with(pi, node, f, InvertKind::And(side))
}

/// `Γ{[i]A}` to `Γ{(i: A, <i>~A)}` with the new bracket appended last.
pub fn invert_box(pi: &Derivation, node: &[usize], f: &Formula) -> Result<Derivation, TransformError> {
    invert_with(pi, node, f, InvertKind::Box { child: 0 })
}

/// `Γ{F}` to `Γ{}`.
pub fn invert_bot(pi: &Derivation, node: &[usize]) -> Result<Derivation, TransformError> {
    let bot = AnnotatedFormula::Plain(Formula::Bot);
    let mut g = pi.conclusion.clone();
    if !g.try_node_mut(node).map_err(|_| bad_path(node))?.remove_one(&bot) {
        return Err(precondition("no F to remove"));
    }
    relocate(pi, g, PathMap::identity(&pi.conclusion))
}

/// Proofs of the premises of `rule`, given a proof of its conclusion.
pub fn invert(pi: &Derivation, rule: &Rule) -> Result<Vec<Derivation>, TransformError> {
    let prems = rebuild(rule, &pi.conclusion)?;
    match rule {
        Rule::OrIntro { node, formula } => Ok(vec![invert_or(pi, node, formula)?]),
        Rule::AndIntro { node, formula } => {
            Ok(vec![invert_and(pi, node, formula, 0)?, invert_and(pi, node, formula, 1)?])
        }
        Rule::BoxIntro { node, formula } => Ok(vec![invert_box(pi, node, formula)?]),
        r if r.is_initial() => Ok(vec![]),
        Rule::JBoxIntro { .. } | Rule::Weak { .. } => Err(precondition(format!("{} is not inverted here", rule.tag()))),
        _ => {
            // every other rule only adds formulas: its inverse is weakening
            let mut out = vec![];
            for p in prems {
                let mut g = pi.conclusion.clone();
                let map = PathMap::identity(&g);
                for path in g.paths() {
                    let extra = diff(p.node(&path).unwrap(), pi.conclusion.node(&path).unwrap());
                    g.node_mut(&path).unwrap().formulas.extend(extra);
                }
                out.push(relocate(pi, g, map)?);
            }
            Ok(out)
        }
    }
}

/// Formulas of `a` not matched by formulas of `b` (as multisets).
fn diff(a: &NestedSequent, b: &NestedSequent) -> Vec<AnnotatedFormula> {
    let mut rest = b.formulas.clone();
    let mut out = vec![];
    for f in &a.formulas {
        if let Some(k) = rest.iter().position(|g| g == f) {
            rest.swap_remove(k);
        } else {
            out.push(f.clone());
        }
    }
    out
}

fn dia_formula(r: &Rule) -> Option<AnnotatedFormula> {
    match r {
        Rule::DiaProp { formula, .. } | Rule::Tran { formula, .. } | Rule::Eucl { formula, .. } => {
            Some(AnnotatedFormula::Plain(formula.clone()))
        }
        Rule::DiaAnn { index, body, .. } | Rule::TranAnn { index, body, .. } => {
            Some(AnnotatedFormula::Ann(*index, body.clone()))
        }
        _ => None,
    }
}

type DepthLog = Rc<RefCell<Vec<(usize, usize)>>>;

/// One-step move of a bracket into its sibling: `Γ{(i: Δ), (j: Σ)}` to
/// `Γ{(j: (i: Δ), Σ)}` for `i <= j`.
#[derive(Clone)]
struct MoveDown {
    map: PathMap,
    parent: NodePath,
    moved: usize,
    into: usize,
    log: DepthLog,
}

impl Translate for MoveDown {
    fn paths(&self) -> &PathMap {
        &self.map
    }
    fn paths_mut(&mut self) -> &mut PathMap {
        &mut self.map
    }

    fn translate(&mut self, old: &Derivation, _new: &NestedSequent) -> Result<Action, TransformError> {
        if let Rule::BoxPlusCut { holes, .. } = &old.rule {
            self.log.borrow_mut().push((holes[0].len(), self.map.get(&holes[0]).len()));
        }
        let r = &old.rule;
        if r.node() != &self.parent || r.child() != Some(self.moved) || r.principal().is_none() {
            return Ok(Action::Keep);
        }
        let p = self.map.get(&self.parent);
        let sigma = self.map.get(&join(&self.parent, self.into));
        let sigma_k = *sigma.last().unwrap();
        let delta_k = *self.map.get(&join(&self.parent, self.moved)).last().unwrap();
        let f = dia_formula(r).ok_or_else(|| precondition(format!("{} cannot cross a bracket", r.tag())))?;
        Ok(match (r, f) {
            (Rule::DiaProp { .. } | Rule::Tran { .. }, AnnotatedFormula::Plain(formula)) => Action::Emit {
                prefix: vec![Rule::Tran { node: p, child: sigma_k, formula: formula.clone() }],
                rule: if matches!(r, Rule::DiaProp { .. }) {
                    Rule::DiaProp { node: sigma, child: delta_k, formula }
                } else {
                    Rule::Tran { node: sigma, child: delta_k, formula }
                },
            },
            (Rule::DiaAnn { .. } | Rule::TranAnn { .. }, AnnotatedFormula::Ann(index, body)) => Action::Emit {
                prefix: vec![Rule::TranAnn { node: p, child: sigma_k, index, body: body.clone() }],
                rule: if matches!(r, Rule::DiaAnn { .. }) {
                    Rule::DiaAnn { node: sigma, child: delta_k, index, body }
                } else {
                    Rule::TranAnn { node: sigma, child: delta_k, index, body }
                },
            },
            (Rule::Eucl { .. }, AnnotatedFormula::Plain(formula)) => Action::Emit {
                prefix: vec![Rule::Eucl { node: sigma.clone(), child: delta_k, formula: formula.clone() }],
                rule: Rule::Eucl { node: p, child: sigma_k, formula },
            },
            _ => return Err(precondition(format!("{} cannot cross a bracket", r.tag()))),
        })
    }
}

/// One-step move of a bracket out of its parent: `Γ{(j: (i: Δ), Σ)}` to
/// `Γ{(i: Δ), (j: Σ)}` for `i < j`.
#[derive(Clone)]
struct MoveUp {
    map: PathMap,
    sigma: NodePath,
    moved: usize,
}

impl Translate for MoveUp {
    fn paths(&self) -> &PathMap {
        &self.map
    }
    fn paths_mut(&mut self) -> &mut PathMap {
        &mut self.map
    }

    fn translate(&mut self, old: &Derivation, _new: &NestedSequent) -> Result<Action, TransformError> {
        let r = &old.rule;
        if r.node() != &self.sigma || r.child() != Some(self.moved) || r.principal().is_none() {
            return Ok(Action::Keep);
        }
        let (sigma_k, parent) = self.sigma.split_last().unwrap();
        let p = self.map.get(parent);
        let delta_k = *self.map.get(&join(&self.sigma, self.moved)).last().unwrap();
        Ok(match r {
            Rule::DiaProp { formula, .. } | Rule::Tran { formula, .. } => Action::Emit {
                prefix: vec![Rule::Eucl { node: p.clone(), child: *sigma_k, formula: formula.clone() }],
                rule: if matches!(r, Rule::DiaProp { .. }) {
                    Rule::DiaProp { node: p, child: delta_k, formula: formula.clone() }
                } else {
                    Rule::Tran { node: p, child: delta_k, formula: formula.clone() }
                },
            },
            Rule::Eucl { formula, .. } => Action::Emit {
                prefix: vec![Rule::Eucl { node: p.clone(), child: delta_k, formula: formula.clone() }],
                rule: Rule::Tran { node: p, child: *sigma_k, formula: formula.clone() },
            },
            Rule::DiaAnn { .. } | Rule::TranAnn { .. } => return Err(TransformError::AnnotatedUpMove),
            _ => return Err(precondition(format!("{} cannot cross a bracket", r.tag()))),
        })
    }
}

fn move_down(pi: &Derivation, parent: &[usize], moved: usize, into: usize, log: &DepthLog) -> Result<Derivation, TransformError> {
    let g = &pi.conclusion;
    let p = g.try_node(parent).map_err(|_| bad_path(parent))?;
    let (Some(d), Some(s)) = (p.children.get(moved), p.children.get(into)) else {
        return Err(bad_path(parent));
    };
    if moved == into || d.index > s.index {
        return Err(precondition(format!("moving down needs i <= j, got {} > {}", d.index, s.index)));
    }
    let into_new = if into > moved { into - 1 } else { into };
    let slot = s.body.children.len();
    let depth = parent.len();
    let map = PathMap::from_fn(g, |q| {
        if q.len() <= depth || q[..depth] != *parent {
            return q.to_vec();
        }
        let mut out = parent.to_vec();
        let x = q[depth];
        if x == moved {
            out.push(into_new);
            out.push(slot);
        } else {
            out.push(if x > moved { x - 1 } else { x });
        }
        out.extend_from_slice(&q[depth + 1..]);
        out
    });
    let mut new = g.clone();
    let pn = new.node_mut(parent).unwrap();
    let child = pn.children.remove(moved);
    pn.children[into_new].body.children.push(child);
    run(pi, new, MoveDown { map, parent: parent.to_vec(), moved, into, log: log.clone() })
}

fn move_up(pi: &Derivation, sigma: &[usize], moved: usize) -> Result<Derivation, TransformError> {
    let g = &pi.conclusion;
    let (_, parent) = sigma.split_last().ok_or_else(|| precondition("the root has no parent"))?;
    let s_label = g.edge_label(sigma).ok_or_else(|| bad_path(sigma))?;
    let s = g.try_node(sigma).map_err(|_| bad_path(sigma))?;
    let d = s.children.get(moved).ok_or_else(|| bad_path(&join(sigma, moved)))?;
    if d.index >= s_label {
        return Err(precondition(format!("moving up needs i < j, got {} >= {s_label}", d.index)));
    }
    let slot = g.node(parent).unwrap().children.len();
    let depth = sigma.len();
    let map = PathMap::from_fn(g, |q| {
        if q.len() <= depth || q[..depth] != *sigma {
            return q.to_vec();
        }
        let x = q[depth];
        let mut out;
        if x == moved {
            out = parent.to_vec();
            out.push(slot);
        } else {
            out = sigma.to_vec();
            out.push(if x > moved { x - 1 } else { x });
        }
        out.extend_from_slice(&q[depth + 1..]);
        out
    });
    let mut new = g.clone();
    let child = new.node_mut(sigma).unwrap().children.remove(moved);
    new.node_mut(parent).unwrap().children.push(child);
    run(pi, new, MoveUp { map, sigma: sigma.to_vec(), moved })
}

/// Result of a stretch: the proof and the (old, new) depth of the first hole
/// of every boxplus-cut met by a downward step.
pub struct Stretched {
    pub proof: Derivation,
    pub depths: Vec<(usize, usize)>,
    /// Path of the moved bracket in the new endsequent.
    pub moved_to: NodePath,
}

/// Moves child `k` of node `from` to node `to` (a path in the endsequent,
/// not inside the moved bracket). The tree path between the two nodes, in
/// the sequent without the bracket, must be an i-path for the bracket's
/// label i; with `strict` it must only descend.
pub fn stretch(
    pi: &Derivation,
    from: &[usize],
    k: usize,
    to: &[usize],
    strict: bool,
) -> Result<Stretched, TransformError> {
    let g = &pi.conclusion;
    let label = g
        .try_node(from)
        .ok()
        .and_then(|n| n.children.get(k))
        .map(|c| c.index)
        .ok_or_else(|| bad_path(&join(from, k)))?;
    let moved_path = join(from, k);
    if to.len() >= moved_path.len() && to[..moved_path.len()] == moved_path[..] {
        return Err(precondition("cannot move a bracket into itself"));
    }
    g.try_node(to).map_err(|_| bad_path(to))?;
    // coordinates in the sequent without the bracket
    let strip = |q: &[usize]| -> NodePath {
        let mut out = q.to_vec();
        if q.len() > from.len() && q[..from.len()] == *from && q[from.len()] > k {
            out[from.len()] -= 1;
        }
        out
    };
    let target = strip(to);
    let mut cur = from.to_vec();
    let mut index = k;
    let mut proof = pi.clone();
    let log: DepthLog = Rc::new(RefCell::new(vec![]));
    let no_path = |kind| TransformError::NoPath {
        kind,
        from: path_to_string(from),
        to: path_to_string(to),
        index: label,
    };
    // climb to the common ancestor
    while !(target.len() >= cur.len() && target[..cur.len()] == cur[..]) {
        if strict {
            return Err(no_path("strict "));
        }
        let up = proof.conclusion.edge_label(&cur).unwrap();
        if up <= label {
            return Err(no_path(""));
        }
        proof = move_up(&proof, &cur, index)?;
        cur.pop();
        index = proof.conclusion.node(&cur).unwrap().children.len() - 1;
    }
    // descend to the target
    while cur.len() < target.len() {
        let next = target[cur.len()];
        let actual = if next >= index { next + 1 } else { next };
        let down = proof.conclusion.node(&cur).unwrap().children[actual].index;
        if down < label {
            return Err(no_path(if strict { "strict " } else { "" }));
        }
        proof = move_down(&proof, &cur, index, actual, &log)?;
        cur.push(next);
        index = proof.conclusion.node(&cur).unwrap().children.len() - 1;
    }
    let depths = log.borrow().clone();
    Ok(Stretched { proof, depths, moved_to: join(&cur, index) })
}

/// The stretch rule.
pub fn str_move(pi: &Derivation, from: &[usize], k: usize, to: &[usize]) -> Result<Stretched, TransformError> {
    stretch(pi, from, k, to, false)
}

/// The strict (downward-only) stretch rule.
pub fn upstr_move(pi: &Derivation, from: &[usize], k: usize, to: &[usize]) -> Result<Stretched, TransformError> {
    stretch(pi, from, k, to, true)
}

#[derive(Clone)]
struct Annotate {
    map: PathMap,
    index: Modality,
    body: Formula,
    dia: Formula,
    /// Per old node: tracked copies in the old proof and in the new one.
    tracked: HashMap<NodePath, (usize, usize)>,
}

impl Annotate {
    fn tracked_at(&self, p: &[usize]) -> (usize, usize) {
        self.tracked.get(p).copied().unwrap_or((0, 0))
    }
}

impl Translate for Annotate {
    fn paths(&self) -> &PathMap {
        &self.map
    }
    fn paths_mut(&mut self) -> &mut PathMap {
        &mut self.map
    }

    fn translate(&mut self, old: &Derivation, _new: &NestedSequent) -> Result<Action, TransformError> {
        let r = &old.rule;
        let (at, f) = match (r, r.principal()) {
            (Rule::DiaProp { .. } | Rule::Tran { .. } | Rule::Eucl { .. }, Some((at, AnnotatedFormula::Plain(f)))) => (at, f),
            _ => return Ok(Action::Keep),
        };
        if f != self.dia {
            return Ok(Action::Keep);
        }
        let copies = old.conclusion.node(&at).unwrap().count(&AnnotatedFormula::Plain(f));
        let (t_old, _) = self.tracked_at(&at);
        if copies > t_old {
            return Ok(Action::Keep);
        }
        let node = self.map.get(r.node());
        let child = *self.map.get(&join(r.node(), r.child().unwrap())).last().unwrap();
        let (index, body) = (self.index, self.body.clone());
        Ok(match r {
            Rule::DiaProp { .. } => Action::Emit { prefix: vec![], rule: Rule::DiaAnn { node, child, index, body } },
            Rule::Tran { .. } => Action::Emit { prefix: vec![], rule: Rule::TranAnn { node, child, index, body } },
            _ => Action::Skip(0),
        })
    }

    fn after(&mut self, old: &Derivation, _k: usize, before: &NestedSequent, premise: &NestedSequent) {
        extend_for_box(&mut self.map, old, before);
        if let Rule::Tran { node, child, formula } = &old.rule {
            let copies = old.conclusion.node(node).unwrap().count(&AnnotatedFormula::Plain(formula.clone()));
            if *formula == self.dia && copies <= self.tracked_at(node).0 {
                let c = join(node, *child);
                let e = self.tracked.entry(c).or_insert((0, 0));
                e.0 += 1;
                e.1 += 1;
            }
        }
        let _ = premise;
    }

    fn after_skip(&mut self, old: &Derivation, _k: usize, _new: &NestedSequent) -> Result<(), TransformError> {
        let parent = old.rule.node().clone();
        let e = self.tracked.entry(parent).or_insert((0, 0));
        if e.1 == 0 {
            return Err(precondition("redundant eucl without a tracked copy below"));
        }
        e.0 += 1;
        Ok(())
    }
}

/// Annotates one copy of `<i>A` at `node`, whose incoming edge is labelled
/// `i`: a proof of the endsequent with that copy replaced by `{i}A`. Eucl
/// steps on the traced occurrence are dropped; they only duplicate a copy
/// the parent already holds.
pub fn annotate_diamond(pi: &Derivation, node: &[usize], a: &Formula) -> Result<Derivation, TransformError> {
    let Formula::Dia(i, body) = a else {
        return Err(precondition(format!("{a} is not a diamond")));
    };
    if pi.conclusion.edge_label(node) != Some(*i) {
        return Err(precondition("the annotated diamond must sit in a bracket of its own index"));
    }
    let plain = AnnotatedFormula::Plain(a.clone());
    let mut g = pi.conclusion.clone();
    if !g.node_mut(node).unwrap().remove_one(&plain) {
        return Err(precondition(format!("{a} is not at {}", path_to_string(node))));
    }
    g.node_mut(node).unwrap().formulas.push(AnnotatedFormula::Ann(*i, (**body).clone()));
    let mut tracked = HashMap::new();
    tracked.insert(node.to_vec(), (1, 1));
    let st = Annotate { map: PathMap::identity(&pi.conclusion), index: *i, body: (**body).clone(), dia: a.clone(), tracked };
    run(pi, g, st)
}

/// Maps the children of `actual` onto those of `expected` (equal up to
/// reordering), returning for each path of `actual` its path in `expected`.
fn match_children(actual: &NestedSequent, expected: &NestedSequent, at_a: &NodePath, at_e: &NodePath, out: &mut HashMap<NodePath, NodePath>) -> bool {
    out.insert(at_a.clone(), at_e.clone());
    let keys_e: Vec<String> = expected.children.iter().map(|c| format!("{}:{}", c.index, c.body.canonical())).collect();
    let mut used = vec![false; expected.children.len()];
    for (ka, c) in actual.children.iter().enumerate() {
        let key = format!("{}:{}", c.index, c.body.canonical());
        let Some(ke) = (0..keys_e.len()).find(|&k| !used[k] && keys_e[k] == key) else { return false };
        used[ke] = true;
        if !match_children(&c.body, &expected.children[ke].body, &join(at_a, ka), &join(at_e, ke), out) {
            return false;
        }
    }
    true
}

/// Normalizes a checker-valid proof so that every premise lists its
/// children in the positions the rules produce.
pub fn align(pi: &Derivation) -> Result<Derivation, TransformError> {
    let want = rebuild(&pi.rule, &pi.conclusion)?;
    let mut subs = vec![];
    for (w, p) in want.into_iter().zip(&pi.premises) {
        let inner = align(p)?;
        if inner.conclusion.aligned_eq(&w) {
            subs.push(inner);
            continue;
        }
        let mut map = HashMap::new();
        if !match_children(&inner.conclusion, &w, &vec![], &vec![], &mut map) {
            return Err(precondition("premise does not match its rule"));
        }
        subs.push(relocate(&inner, w, PathMap { map })?);
    }
    Ok(Derivation::new(pi.conclusion.clone(), pi.rule.clone(), subs))
}

/// Builds a new child with the given formulas, for callers assembling sequents.
pub fn bracket(index: Modality, formulas: Vec<Formula>) -> Child {
    Child { index, body: NestedSequent::from_formulas(formulas) }
}
