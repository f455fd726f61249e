//! Rules, derivations and the proof checker.
//!
//! Every [`Rule`] addresses its conclusion: `node` is the path of the node
//! that holds the principal formula, and `child` (where present) is the
//! position of a boxed child of that node. Premises are computed from the
//! conclusion by [`premises_of`], which is the single source of truth for
//! the shape of every rule. The `Box` rules append the new bracket after the
//! existing children, so all other paths survive into the premise.

use std::fmt;

use thiserror::Error;

use crate::formula::{AdequateSet, Atom, Formula, Modality};
pub use crate::sequent::AnnotatedFormula;
use crate::sequent::{is_i_path, path_to_string, Child, NestedSequent, NodePath};

#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub enum Rule {
    InitAtom { node: NodePath, atom: Atom },
    InitTop { node: NodePath },
    AndIntro { node: NodePath, formula: Formula },
    OrIntro { node: NodePath, formula: Formula },
    BoxIntro { node: NodePath, formula: Formula },
    /// `<i>A` at `node`, `A` added to the child.
    DiaProp { node: NodePath, child: usize, formula: Formula },
    /// `<i>A` at `node`, copied into the child.
    Tran { node: NodePath, child: usize, formula: Formula },
    /// `<i>A` in the child, copied up into `node`.
    Eucl { node: NodePath, child: usize, formula: Formula },
    Cut { node: NodePath, formula: Formula },
    /// Premises: `<i>~A` at every hole; `[i]A` at the first hole.
    BoxCut { index: Modality, formula: Formula, holes: Vec<NodePath> },
    /// Premises: `{i}~A` at every hole; `[i]A` at the first hole.
    BoxPlusCut { index: Modality, formula: Formula, holes: Vec<NodePath> },
    /// `{i}B` at `node`, `B` added to the child.
    DiaAnn { node: NodePath, child: usize, index: Modality, body: Formula },
    /// `{i}B` at `node`, copied into the child.
    TranAnn { node: NodePath, child: usize, index: Modality, body: Formula },
    JBoxIntro { node: NodePath, formula: Formula },
    JDiaPrime { node: NodePath, child: usize, formula: Formula },
    JTran { node: NodePath, child: usize, formula: Formula },
    /// `<i>A` at `node`, `<j>A` added to the child (labelled `i`).
    JTranPrime { node: NodePath, child: usize, formula: Formula, j: Modality },
    JEucl { node: NodePath, child: usize, formula: Formula },
    /// The premise lacks one copy of `formula` at `node`.
    Weak { node: NodePath, formula: Formula },
    /// The premise has one extra copy of `formula` at `node`.
    Cont { node: NodePath, formula: Formula },
}

pub const RULE_TAGS: [&str; 20] = [
    "InitAtom", "InitTop", "AndIntro", "OrIntro", "BoxIntro", "DiaProp", "Tran", "Eucl", "Cut",
    "BoxCut", "BoxPlusCut", "DiaAnn", "TranAnn", "JBoxIntro", "JDiaPrime", "JTran", "JTranPrime",
    "JEucl", "Weak", "Cont",
];

impl Rule {
    pub fn tag(&self) -> &'static str {
        match self {
            Rule::InitAtom { .. } => "InitAtom",
            Rule::InitTop { .. } => "InitTop",
            Rule::AndIntro { .. } => "AndIntro",
            Rule::OrIntro { .. } => "OrIntro",
            Rule::BoxIntro { .. } => "BoxIntro",
            Rule::DiaProp { .. } => "DiaProp",
            Rule::Tran { .. } => "Tran",
            Rule::Eucl { .. } => "Eucl",
            Rule::Cut { .. } => "Cut",
            Rule::BoxCut { .. } => "BoxCut",
            Rule::BoxPlusCut { .. } => "BoxPlusCut",
            Rule::DiaAnn { .. } => "DiaAnn",
            Rule::TranAnn { .. } => "TranAnn",
            Rule::JBoxIntro { .. } => "JBoxIntro",
            Rule::JDiaPrime { .. } => "JDiaPrime",
            Rule::JTran { .. } => "JTran",
            Rule::JTranPrime { .. } => "JTranPrime",
            Rule::JEucl { .. } => "JEucl",
            Rule::Weak { .. } => "Weak",
            Rule::Cont { .. } => "Cont",
        }
    }

    pub fn is_initial(&self) -> bool {
        matches!(self, Rule::InitAtom { .. } | Rule::InitTop { .. })
    }

    pub fn is_cut(&self) -> bool {
        matches!(self, Rule::Cut { .. } | Rule::BoxCut { .. } | Rule::BoxPlusCut { .. })
    }

    pub fn is_annotated(&self) -> bool {
        matches!(self, Rule::DiaAnn { .. } | Rule::TranAnn { .. } | Rule::BoxPlusCut { .. })
    }

    /// Node of the principal formula (the first hole for the multi-hole cuts).
    pub fn node(&self) -> &NodePath {
        match self {
            Rule::InitAtom { node, .. }
            | Rule::InitTop { node }
            | Rule::AndIntro { node, .. }
            | Rule::OrIntro { node, .. }
            | Rule::BoxIntro { node, .. }
            | Rule::DiaProp { node, .. }
            | Rule::Tran { node, .. }
            | Rule::Eucl { node, .. }
            | Rule::Cut { node, .. }
            | Rule::DiaAnn { node, .. }
            | Rule::TranAnn { node, .. }
            | Rule::JBoxIntro { node, .. }
            | Rule::JDiaPrime { node, .. }
            | Rule::JTran { node, .. }
            | Rule::JTranPrime { node, .. }
            | Rule::JEucl { node, .. }
            | Rule::Weak { node, .. }
            | Rule::Cont { node, .. } => node,
            Rule::BoxCut { holes, .. } | Rule::BoxPlusCut { holes, .. } => &holes[0],
        }
    }

    pub fn child(&self) -> Option<usize> {
        match self {
            Rule::DiaProp { child, .. }
            | Rule::Tran { child, .. }
            | Rule::Eucl { child, .. }
            | Rule::DiaAnn { child, .. }
            | Rule::TranAnn { child, .. }
            | Rule::JDiaPrime { child, .. }
            | Rule::JTran { child, .. }
            | Rule::JTranPrime { child, .. }
            | Rule::JEucl { child, .. } => Some(*child),
            _ => None,
        }
    }

    /// The principal formula occurrence of the conclusion, as (node, formula).
    /// Cuts and initial sequents have none.
    pub fn principal(&self) -> Option<(NodePath, AnnotatedFormula)> {
        let plain = |n: &NodePath, f: &Formula| Some((n.clone(), AnnotatedFormula::Plain(f.clone())));
        match self {
            Rule::AndIntro { node, formula }
            | Rule::OrIntro { node, formula }
            | Rule::BoxIntro { node, formula }
            | Rule::JBoxIntro { node, formula }
            | Rule::Weak { node, formula }
            | Rule::Cont { node, formula } => plain(node, formula),
            Rule::DiaProp { node, formula, .. }
            | Rule::Tran { node, formula, .. }
            | Rule::JDiaPrime { node, formula, .. }
            | Rule::JTran { node, formula, .. }
            | Rule::JTranPrime { node, formula, .. } => plain(node, formula),
            Rule::Eucl { node, child, formula } | Rule::JEucl { node, child, formula } => {
                let mut p = node.clone();
                p.push(*child);
                plain(&p, formula)
            }
            Rule::DiaAnn { node, index, body, .. } | Rule::TranAnn { node, index, body, .. } => {
                Some((node.clone(), AnnotatedFormula::Ann(*index, body.clone())))
            }
            _ => None,
        }
    }

    /// Rewrites every node path of the rule. `child` positions are remapped
    /// through the full child path, whose parent must map to the new `node`.
    pub fn remap(&self, f: &dyn Fn(&[usize]) -> NodePath) -> Rule {
        let child_of = |node: &NodePath, child: usize| {
            let mut p = node.clone();
            p.push(child);
            let q = f(&p);
            let (last, parent) = q.split_last().expect("child path is nonempty");
            debug_assert_eq!(parent, f(node).as_slice());
            *last
        };
        let mut r = self.clone();
        match &mut r {
            Rule::DiaProp { node, child, .. }
            | Rule::Tran { node, child, .. }
            | Rule::Eucl { node, child, .. }
            | Rule::DiaAnn { node, child, .. }
            | Rule::TranAnn { node, child, .. }
            | Rule::JDiaPrime { node, child, .. }
            | Rule::JTran { node, child, .. }
            | Rule::JTranPrime { node, child, .. }
            | Rule::JEucl { node, child, .. } => {
                *child = child_of(node, *child);
                *node = f(node);
            }
            Rule::InitAtom { node, .. }
            | Rule::InitTop { node }
            | Rule::AndIntro { node, .. }
            | Rule::OrIntro { node, .. }
            | Rule::BoxIntro { node, .. }
            | Rule::Cut { node, .. }
            | Rule::JBoxIntro { node, .. }
            | Rule::Weak { node, .. }
            | Rule::Cont { node, .. } => *node = f(node),
            Rule::BoxCut { holes, .. } | Rule::BoxPlusCut { holes, .. } => {
                for h in holes.iter_mut() {
                    *h = f(h);
                }
            }
        }
        r
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = path_to_string(self.node());
        match self {
            Rule::InitAtom { atom, .. } => write!(f, "InitAtom {atom} @{at}"),
            Rule::InitTop { .. } => write!(f, "InitTop @{at}"),
            Rule::BoxCut { index, formula, holes } | Rule::BoxPlusCut { index, formula, holes } => {
                let hs: Vec<String> = holes.iter().map(|h| format!("@{}", path_to_string(h))).collect();
                write!(f, "{} [{index}]{formula} {}", self.tag(), hs.join(" "))
            }
            Rule::DiaAnn { child, index, body, .. } | Rule::TranAnn { child, index, body, .. } => {
                write!(f, "{} {{{index}}}{body} @{at}/{child}", self.tag())
            }
            Rule::JTranPrime { child, formula, j, .. } => {
                write!(f, "JTranPrime {formula} j={j} @{at}/{child}")
            }
            _ => {
                let (_, p) = self.principal().or_else(|| match self {
                    Rule::Cut { formula, .. } => Some((vec![], formula.clone().into())),
                    _ => None,
                }).expect("rule with a formula");
                match self.child() {
                    Some(c) => write!(f, "{} {p} @{at}/{c}", self.tag()),
                    None => write!(f, "{} {p} @{at}", self.tag()),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("path {0} does not resolve in the conclusion")]
    BadPath(String),
    #[error("{formula} is not present at {path}")]
    Missing { formula: String, path: String },
    #[error("principal formula {0} has the wrong shape for this rule")]
    Shape(String),
    #[error("{0}")]
    SideCondition(String),
    #[error("initial sequents have no premises")]
    NoPremises,
    #[error("expected {expected} premises, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("premise {0} does not match the rule")]
    PremiseMismatch(usize),
}

fn node_of<'a>(g: &'a NestedSequent, p: &[usize]) -> Result<&'a NestedSequent, RuleError> {
    g.node(p).ok_or_else(|| RuleError::BadPath(path_to_string(p)))
}

fn node_mut<'a>(g: &'a mut NestedSequent, p: &[usize]) -> Result<&'a mut NestedSequent, RuleError> {
    g.node_mut(p).ok_or_else(|| RuleError::BadPath(path_to_string(p)))
}

fn require(g: &NestedSequent, p: &[usize], f: &AnnotatedFormula) -> Result<(), RuleError> {
    if node_of(g, p)?.contains(f) {
        Ok(())
    } else {
        Err(RuleError::Missing { formula: f.to_string(), path: path_to_string(p) })
    }
}

fn child_label(g: &NestedSequent, p: &[usize], child: usize) -> Result<Modality, RuleError> {
    node_of(g, p)?
        .children
        .get(child)
        .map(|c| c.index)
        .ok_or_else(|| RuleError::BadPath(format!("{}/{child}", path_to_string(p))))
}

fn join(p: &[usize], child: usize) -> NodePath {
    let mut q = p.to_vec();
    q.push(child);
    q
}

fn side(ok: bool, msg: impl FnOnce() -> String) -> Result<(), RuleError> {
    if ok {
        Ok(())
    } else {
        Err(RuleError::SideCondition(msg()))
    }
}

fn dia_parts(f: &Formula) -> Result<(Modality, &Formula), RuleError> {
    match f {
        Formula::Dia(i, a) => Ok((*i, a)),
        _ => Err(RuleError::Shape(f.to_string())),
    }
}

fn add(g: &NestedSequent, p: &[usize], f: AnnotatedFormula) -> Result<NestedSequent, RuleError> {
    let mut out = g.clone();
    node_mut(&mut out, p)?.formulas.push(f);
    Ok(out)
}

fn replace(
    g: &NestedSequent,
    p: &[usize],
    old: &AnnotatedFormula,
    new: Vec<AnnotatedFormula>,
) -> Result<NestedSequent, RuleError> {
    let mut out = g.clone();
    let n = node_mut(&mut out, p)?;
    if !n.remove_one(old) {
        return Err(RuleError::Missing { formula: old.to_string(), path: path_to_string(p) });
    }
    n.formulas.extend(new);
    Ok(out)
}

/// Backward application: the premises of `rule` given its conclusion.
/// Checks every side condition that depends only on the rule and the
/// conclusion; membership in a system is checked by [`SystemSpec::admits`].
pub fn premises_of(rule: &Rule, g: &NestedSequent) -> Result<Vec<NestedSequent>, RuleError> {
    use AnnotatedFormula::{Ann, Plain};
    match rule {
        Rule::InitAtom { node, atom } => {
            require(g, node, &Plain(Formula::Atom(atom.clone())))?;
            require(g, node, &Plain(Formula::NegAtom(atom.clone())))?;
            Ok(vec![])
        }
        Rule::InitTop { node } => {
            require(g, node, &Plain(Formula::Top))?;
            Ok(vec![])
        }
        Rule::AndIntro { node, formula } => match formula {
            Formula::And(a, b) => {
                let old = Plain(formula.clone());
                Ok(vec![
                    replace(g, node, &old, vec![Plain((**a).clone())])?,
                    replace(g, node, &old, vec![Plain((**b).clone())])?,
                ])
            }
            _ => Err(RuleError::Shape(formula.to_string())),
        },
        Rule::OrIntro { node, formula } => match formula {
            Formula::Or(a, b) => Ok(vec![replace(
                g,
                node,
                &Plain(formula.clone()),
                vec![Plain((**a).clone()), Plain((**b).clone())],
            )?]),
            _ => Err(RuleError::Shape(formula.to_string())),
        },
        Rule::BoxIntro { node, formula } | Rule::JBoxIntro { node, formula } => match formula {
            Formula::Box(i, a) => {
                let mut out = replace(g, node, &Plain(formula.clone()), vec![])?;
                let body = NestedSequent::from_formulas([(**a).clone(), Formula::dia(*i, a.negate())]);
                node_mut(&mut out, node)?.children.push(Child { index: *i, body });
                Ok(vec![out])
            }
            _ => Err(RuleError::Shape(formula.to_string())),
        },
        Rule::DiaProp { node, child, formula } | Rule::Tran { node, child, formula } => {
            let (i, a) = dia_parts(formula)?;
            require(g, node, &Plain(formula.clone()))?;
            let j = child_label(g, node, *child)?;
            side(i <= j, || format!("{} requires i <= j, got i = {i}, j = {j}", rule.tag()))?;
            let added = if matches!(rule, Rule::DiaProp { .. }) { a.clone() } else { formula.clone() };
            Ok(vec![add(g, &join(node, *child), Plain(added))?])
        }
        Rule::Eucl { node, child, formula } | Rule::JEucl { node, child, formula } => {
            let (i, _) = dia_parts(formula)?;
            let j = child_label(g, node, *child)?;
            require(g, &join(node, *child), &Plain(formula.clone()))?;
            side(i < j, || format!("eucl requires i < j, got i = {i}, j = {j}"))?;
            Ok(vec![add(g, node, Plain(formula.clone()))?])
        }
        Rule::Cut { node, formula } => Ok(vec![
            add(g, node, Plain(formula.clone()))?,
            add(g, node, Plain(formula.negate()))?,
        ]),
        Rule::BoxCut { index, formula, holes } | Rule::BoxPlusCut { index, formula, holes } => {
            let strict = matches!(rule, Rule::BoxPlusCut { .. });
            let first = holes.first().ok_or_else(|| RuleError::SideCondition("cut without holes".into()))?;
            node_of(g, first)?;
            for h in &holes[1..] {
                let ok = is_i_path(g, first, h, *index, strict)
                    .map_err(|_| RuleError::BadPath(path_to_string(h)))?;
                side(ok, || {
                    format!(
                        "no {}{index}-path from {} to {}",
                        if strict { "strict " } else { "" },
                        path_to_string(first),
                        path_to_string(h)
                    )
                })?;
            }
            let neg = formula.negate();
            let marker = if strict { Ann(*index, neg) } else { Plain(Formula::dia(*index, neg)) };
            let mut left = g.clone();
            for h in holes {
                node_mut(&mut left, h)?.formulas.push(marker.clone());
            }
            let right = add(g, first, Plain(Formula::boxed(*index, formula.clone())))?;
            Ok(vec![left, right])
        }
        Rule::DiaAnn { node, child, index, body } | Rule::TranAnn { node, child, index, body } => {
            let ann = Ann(*index, body.clone());
            require(g, node, &ann)?;
            let j = child_label(g, node, *child)?;
            side(*index <= j, || format!("{} requires i <= j, got i = {index}, j = {j}", rule.tag()))?;
            let added = if matches!(rule, Rule::DiaAnn { .. }) { Plain(body.clone()) } else { ann };
            Ok(vec![add(g, &join(node, *child), added)?])
        }
        Rule::JDiaPrime { node, child, formula } => {
            let (i, a) = dia_parts(formula)?;
            require(g, node, &Plain(formula.clone()))?;
            let j = child_label(g, node, *child)?;
            side(i == j, || format!("JDiaPrime requires the bracket index {j} to equal {i}"))?;
            Ok(vec![add(g, &join(node, *child), Plain(a.clone()))?])
        }
        Rule::JTran { node, child, formula } => {
            let (i, _) = dia_parts(formula)?;
            require(g, node, &Plain(formula.clone()))?;
            let j = child_label(g, node, *child)?;
            side(i <= j, || format!("JTran requires i <= j, got i = {i}, j = {j}"))?;
            Ok(vec![add(g, &join(node, *child), Plain(formula.clone()))?])
        }
        Rule::JTranPrime { node, child, formula, j } => {
            let (i, a) = dia_parts(formula)?;
            require(g, node, &Plain(formula.clone()))?;
            let label = child_label(g, node, *child)?;
            side(label == i, || format!("JTranPrime requires the bracket index {label} to equal {i}"))?;
            side(i <= *j, || format!("JTranPrime requires i <= j, got i = {i}, j = {j}"))?;
            Ok(vec![add(g, &join(node, *child), Plain(Formula::dia(*j, a.clone())))?])
        }
        Rule::Weak { node, formula } => Ok(vec![replace(g, node, &Plain(formula.clone()), vec![])?]),
        Rule::Cont { node, formula } => {
            require(g, node, &Plain(formula.clone()))?;
            Ok(vec![add(g, node, Plain(formula.clone()))?])
        }
    }
}

/// Forward application: the conclusion obtained from the given premises.
pub fn apply(rule: &Rule, premises: &[NestedSequent]) -> Result<NestedSequent, RuleError> {
    use AnnotatedFormula::{Ann, Plain};
    let expected = match rule {
        Rule::InitAtom { .. } | Rule::InitTop { .. } => return Err(RuleError::NoPremises),
        Rule::AndIntro { .. } | Rule::Cut { .. } | Rule::BoxCut { .. } | Rule::BoxPlusCut { .. } => 2,
        _ => 1,
    };
    if premises.len() != expected {
        return Err(RuleError::Arity { expected, got: premises.len() });
    }
    let p0 = &premises[0];
    let remove = |g: &mut NestedSequent, p: &[usize], f: AnnotatedFormula| -> Result<(), RuleError> {
        if node_mut(g, p)?.remove_one(&f) {
            Ok(())
        } else {
            Err(RuleError::Missing { formula: f.to_string(), path: path_to_string(p) })
        }
    };
    let mut g = p0.clone();
    match rule {
        Rule::InitAtom { .. } | Rule::InitTop { .. } => unreachable!(),
        Rule::AndIntro { node, formula } => match formula {
            Formula::And(a, _) => {
                remove(&mut g, node, Plain((**a).clone()))?;
                node_mut(&mut g, node)?.formulas.push(Plain(formula.clone()));
            }
            _ => return Err(RuleError::Shape(formula.to_string())),
        },
        Rule::OrIntro { node, formula } => match formula {
            Formula::Or(a, b) => {
                remove(&mut g, node, Plain((**a).clone()))?;
                remove(&mut g, node, Plain((**b).clone()))?;
                node_mut(&mut g, node)?.formulas.push(Plain(formula.clone()));
            }
            _ => return Err(RuleError::Shape(formula.to_string())),
        },
        Rule::BoxIntro { node, formula } | Rule::JBoxIntro { node, formula } => match formula {
            Formula::Box(i, a) => {
                let want = NestedSequent::from_formulas([(**a).clone(), Formula::dia(*i, a.negate())]);
                let n = node_mut(&mut g, node)?;
                let k = n
                    .children
                    .iter()
                    .rposition(|c| c.index == *i && c.body.canon_eq(&want))
                    .ok_or_else(|| RuleError::PremiseMismatch(0))?;
                n.children.remove(k);
                n.formulas.push(Plain(formula.clone()));
            }
            _ => return Err(RuleError::Shape(formula.to_string())),
        },
        Rule::DiaProp { node, child, formula } | Rule::JDiaPrime { node, child, formula } => {
            let (_, a) = dia_parts(formula)?;
            remove(&mut g, &join(node, *child), Plain(a.clone()))?;
        }
        Rule::Tran { node, child, formula } | Rule::JTran { node, child, formula } => {
            remove(&mut g, &join(node, *child), Plain(formula.clone()))?;
        }
        Rule::Eucl { node, formula, .. } | Rule::JEucl { node, formula, .. } => {
            remove(&mut g, node, Plain(formula.clone()))?;
        }
        Rule::Cut { node, formula } => remove(&mut g, node, Plain(formula.clone()))?,
        Rule::BoxCut { index, formula, holes } => {
            for h in holes {
                remove(&mut g, h, Plain(Formula::dia(*index, formula.negate())))?;
            }
        }
        Rule::BoxPlusCut { index, formula, holes } => {
            for h in holes {
                remove(&mut g, h, Ann(*index, formula.negate()))?;
            }
        }
        Rule::DiaAnn { node, child, body, .. } => remove(&mut g, &join(node, *child), Plain(body.clone()))?,
        Rule::TranAnn { node, child, index, body } => {
            remove(&mut g, &join(node, *child), Ann(*index, body.clone()))?
        }
        Rule::JTranPrime { node, child, formula, j } => {
            let (_, a) = dia_parts(formula)?;
            remove(&mut g, &join(node, *child), Plain(Formula::dia(*j, a.clone())))?;
        }
        Rule::Weak { node, formula } => node_mut(&mut g, node)?.formulas.push(Plain(formula.clone())),
        Rule::Cont { node, formula } => remove(&mut g, node, Plain(formula.clone()))?,
    }
    let back = premises_of(rule, &g)?;
    for (k, (want, got)) in back.iter().zip(premises).enumerate() {
        if !want.canon_eq(got) {
            return Err(RuleError::PremiseMismatch(k));
        }
    }
    Ok(g)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Base {
    Glp,
    J,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum CutScope {
    Unrestricted,
    Within(AdequateSet),
}

impl CutScope {
    pub fn allows(&self, a: &Formula) -> bool {
        match self {
            CutScope::Unrestricted => true,
            CutScope::Within(c) => c.contains(a),
        }
    }

    fn covers(&self, other: &CutScope) -> bool {
        match (self, other) {
            (CutScope::Unrestricted, _) => true,
            (CutScope::Within(_), CutScope::Unrestricted) => false,
            (CutScope::Within(a), CutScope::Within(b)) => b.is_subset(a),
        }
    }
}

/// A proof system: a base calculus plus optional extra rules.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SystemSpec {
    pub base: Base,
    pub cut: Option<CutScope>,
    pub box_cut: Option<CutScope>,
    /// Scope and minimum depth of the first hole.
    pub box_plus_cut: Option<(CutScope, Option<usize>)>,
    pub annotated: bool,
    pub weak: bool,
    pub cont: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SystemError {
    #[error("the boxplus cut needs annotated formulas")]
    BoxPlusWithoutAnnotations,
    #[error("the J calculus has no annotated rules")]
    AnnotatedJ,
}

impl SystemSpec {
    pub fn glp() -> SystemSpec {
        SystemSpec {
            base: Base::Glp,
            cut: None,
            box_cut: None,
            box_plus_cut: None,
            annotated: false,
            weak: false,
            cont: false,
        }
    }

    pub fn j() -> SystemSpec {
        SystemSpec { base: Base::J, ..SystemSpec::glp() }
    }

    /// J with the weakening and contraction rules, the target of the reduction.
    pub fn j_weak_cont() -> SystemSpec {
        SystemSpec { weak: true, cont: true, ..SystemSpec::j() }
    }

    pub fn glp_cut() -> SystemSpec {
        SystemSpec { cut: Some(CutScope::Unrestricted), ..SystemSpec::glp() }
    }

    pub fn with_cut(mut self, scope: CutScope) -> SystemSpec {
        self.cut = Some(scope);
        self
    }

    pub fn with_box_cut(mut self, scope: CutScope) -> SystemSpec {
        self.box_cut = Some(scope);
        self
    }

    pub fn with_box_plus_cut(mut self, scope: CutScope, min_depth: Option<usize>) -> SystemSpec {
        self.annotated = true;
        self.box_plus_cut = Some((scope, min_depth));
        self
    }

    pub fn with_annotations(mut self) -> SystemSpec {
        self.annotated = true;
        self
    }

    pub fn validate(&self) -> Result<(), SystemError> {
        if self.box_plus_cut.is_some() && !self.annotated {
            return Err(SystemError::BoxPlusWithoutAnnotations);
        }
        if self.base == Base::J && (self.annotated || self.box_plus_cut.is_some()) {
            return Err(SystemError::AnnotatedJ);
        }
        Ok(())
    }

    pub fn has_cuts(&self) -> bool {
        self.cut.is_some() || self.box_cut.is_some() || self.box_plus_cut.is_some()
    }

    /// Whether every rule of `other` is a rule of `self`.
    pub fn extends(&self, other: &SystemSpec) -> bool {
        fn cover(a: &Option<CutScope>, b: &Option<CutScope>) -> bool {
            match (a, b) {
                (_, None) => true,
                (None, Some(_)) => false,
                (Some(x), Some(y)) => x.covers(y),
            }
        }
        let plus = match (&self.box_plus_cut, &other.box_plus_cut) {
            (_, None) => true,
            (None, Some(_)) => false,
            (Some((x, dx)), Some((y, dy))) => x.covers(y) && dx.unwrap_or(0) <= dy.unwrap_or(0),
        };
        self.base == other.base
            && cover(&self.cut, &other.cut)
            && cover(&self.box_cut, &other.box_cut)
            && plus
            && (self.annotated || !other.annotated)
            && (self.weak || !other.weak)
            && (self.cont || !other.cont)
    }

    /// System-dependent conditions on one inference.
    pub fn admits(&self, rule: &Rule, conclusion: &NestedSequent) -> Result<(), String> {
        let glp = self.base == Base::Glp;
        let ok = match rule {
            Rule::InitAtom { .. } | Rule::InitTop { .. } | Rule::AndIntro { .. } | Rule::OrIntro { .. } => true,
            Rule::BoxIntro { .. } | Rule::DiaProp { .. } | Rule::Tran { .. } | Rule::Eucl { .. } => glp,
            Rule::JBoxIntro { .. }
            | Rule::JDiaPrime { .. }
            | Rule::JTran { .. }
            | Rule::JTranPrime { .. }
            | Rule::JEucl { .. } => !glp,
            Rule::DiaAnn { .. } | Rule::TranAnn { .. } => glp && self.annotated,
            Rule::Weak { .. } => self.weak,
            Rule::Cont { .. } => self.cont,
            Rule::Cut { formula, .. } => {
                return match &self.cut {
                    None => Err("cut is not a rule of this system".into()),
                    Some(s) if !s.allows(formula) => Err(format!("cut formula {formula} is outside the cut set")),
                    Some(_) => Ok(()),
                }
            }
            Rule::BoxCut { formula, .. } => {
                return match &self.box_cut {
                    None => Err("box-cut is not a rule of this system".into()),
                    Some(s) if !s.allows(formula) => Err(format!("box-cut formula {formula} is outside the cut set")),
                    Some(_) => Ok(()),
                }
            }
            Rule::BoxPlusCut { formula, holes, .. } => {
                return match &self.box_plus_cut {
                    None => Err("boxplus-cut is not a rule of this system".into()),
                    Some((s, _)) if !s.allows(formula) => {
                        Err(format!("boxplus-cut formula {formula} is outside the cut set"))
                    }
                    Some((_, Some(d))) if holes[0].len() < *d => Err(format!(
                        "boxplus-cut hole at depth {} is shallower than {d}",
                        holes[0].len()
                    )),
                    Some(_) => Ok(()),
                }
            }
        };
        if !ok {
            return Err(format!("{} is not a rule of this system", rule.tag()));
        }
        if !self.annotated && conclusion.has_annotations() {
            return Err("annotated formula in an unannotated system".into());
        }
        Ok(())
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Derivation {
    pub conclusion: NestedSequent,
    pub rule: Rule,
    pub premises: Vec<Derivation>,
}

impl Derivation {
    pub fn new(conclusion: NestedSequent, rule: Rule, premises: Vec<Derivation>) -> Derivation {
        Derivation { conclusion, rule, premises }
    }

    pub fn leaf(conclusion: NestedSequent, rule: Rule) -> Derivation {
        Derivation { conclusion, rule, premises: vec![] }
    }

    /// Builds the inference below `premises`, computing the conclusion.
    pub fn infer(rule: Rule, premises: Vec<Derivation>) -> Result<Derivation, RuleError> {
        let concl: Vec<NestedSequent> = premises.iter().map(|d| d.conclusion.clone()).collect();
        let conclusion = apply(&rule, &concl)?;
        Ok(Derivation { conclusion, rule, premises })
    }

    pub fn height(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(self, 0usize)];
        while let Some((d, h)) = stack.pop() {
            best = best.max(h);
            stack.extend(d.premises.iter().map(|p| (p, h + 1)));
        }
        best
    }

    pub fn size(&self) -> usize {
        self.nodes().len()
    }

    /// All inference nodes in pre-order.
    pub fn nodes(&self) -> Vec<&Derivation> {
        let mut out = vec![];
        let mut stack = vec![self];
        while let Some(d) = stack.pop() {
            out.push(d);
            stack.extend(d.premises.iter().rev());
        }
        out
    }

    pub fn count_rules(&self, pred: impl Fn(&Rule) -> bool) -> usize {
        self.nodes().iter().filter(|d| pred(&d.rule)).count()
    }

    pub fn is_cut_free(&self) -> bool {
        self.count_rules(Rule::is_cut) == 0
    }

    pub fn is_annotation_free(&self) -> bool {
        self.nodes().iter().all(|d| !d.rule.is_annotated() && !d.conclusion.has_annotations())
    }
}

/// A failed inference, addressed by premise positions from the root.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("at proof node [{}] ({rule}): {reason}", path_to_string(.at))]
pub struct Violation {
    pub at: Vec<usize>,
    pub rule: String,
    pub reason: String,
}

pub fn check(pi: &Derivation, sys: &SystemSpec) -> Result<(), Violation> {
    let mut stack: Vec<(&Derivation, Vec<usize>)> = vec![(pi, vec![])];
    while let Some((d, at)) = stack.pop() {
        let fail = |reason: String| Violation { at: at.clone(), rule: d.rule.to_string(), reason };
        sys.admits(&d.rule, &d.conclusion).map_err(fail)?;
        let want = premises_of(&d.rule, &d.conclusion).map_err(|e| fail(e.to_string()))?;
        if want.len() != d.premises.len() {
            return Err(fail(format!("expected {} premises, found {}", want.len(), d.premises.len())));
        }
        for (k, (w, p)) in want.iter().zip(&d.premises).enumerate() {
            if !w.canon_eq(&p.conclusion) {
                return Err(fail(format!("premise {k} is {:?}, expected {:?}", p.conclusion.to_string(), w.to_string())));
            }
            let mut next = at.clone();
            next.push(k);
            stack.push((p, next));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("boxplus-cut still present; eliminate it before stripping annotations")]
pub struct ResidualBoxPlus;

/// Forgets annotations: `{i}B` becomes `<i>B` and the annotated rules become
/// their ordinary versions.
pub fn strip_annotations(pi: &Derivation) -> Result<Derivation, ResidualBoxPlus> {
    let rule = match &pi.rule {
        Rule::BoxPlusCut { .. } => return Err(ResidualBoxPlus),
        Rule::DiaAnn { node, child, index, body } => Rule::DiaProp {
            node: node.clone(),
            child: *child,
            formula: Formula::dia(*index, body.clone()),
        },
        Rule::TranAnn { node, child, index, body } => Rule::Tran {
            node: node.clone(),
            child: *child,
            formula: Formula::dia(*index, body.clone()),
        },
        r => r.clone(),
    };
    let premises = pi.premises.iter().map(strip_annotations).collect::<Result<_, _>>()?;
    Ok(Derivation { conclusion: pi.conclusion.erase_annotations(), rule, premises })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use crate::sequent::parse_sequent;

    fn s(t: &str) -> NestedSequent {
        parse_sequent(t).unwrap()
    }
    fn f(t: &str) -> Formula {
        parse(t).unwrap()
    }

    #[test]
    fn leaf_with_context_is_valid() {
        let pi = Derivation::leaf(s("p, ~p, (0: q)"), Rule::InitAtom { node: vec![], atom: "p".into() });
        assert!(check(&pi, &SystemSpec::glp()).is_ok());
        assert_eq!(pi.height(), 0);
        let bad = Derivation::leaf(s("p, (0: ~p)"), Rule::InitAtom { node: vec![], atom: "p".into() });
        assert!(check(&bad, &SystemSpec::glp()).is_err());
    }

    #[test]
    fn one_box_step() {
        let r = Rule::BoxIntro { node: vec![], formula: f("[1]p") };
        assert_eq!(apply(&r, &[s("(1: p, <1>~p)")]).unwrap(), s("[1]p"));
        // the premise is not initial, so the one-step tree is rejected as a proof
        let open = Derivation::leaf(s("(1: p, <1>~p)"), Rule::InitAtom { node: vec![0], atom: "p".into() });
        let pi = Derivation::infer(r, vec![open]).unwrap();
        assert!(check(&pi, &SystemSpec::glp()).is_err());

        let leaf = Derivation::leaf(s("(1: ~p, p, <1>(p & ~p))"), Rule::InitAtom { node: vec![0], atom: "p".into() });
        let or = Derivation::infer(Rule::OrIntro { node: vec![0], formula: f("~p | p") }, vec![leaf]).unwrap();
        let pi = Derivation::infer(Rule::BoxIntro { node: vec![], formula: f("[1](~p | p)") }, vec![or]).unwrap();
        assert_eq!(pi.conclusion, s("[1](~p | p)"));
        assert!(check(&pi, &SystemSpec::glp()).is_ok());
        assert_eq!(pi.height(), 2);
        assert!(check(&pi, &SystemSpec::j()).is_err());
    }

    #[test]
    fn eucl_needs_strict_inequality() {
        let r = Rule::Eucl { node: vec![], child: 0, formula: f("<1>p") };
        let err = premises_of(&r, &s("(1: <1>p)")).unwrap_err();
        assert!(err.to_string().contains("eucl requires i < j"));
        assert!(premises_of(&r, &s("(2: <1>p)")).is_ok());
    }

    #[test]
    fn apply_examples() {
        let r = Rule::OrIntro { node: vec![], formula: f("p | q") };
        assert!(apply(&r, &[s("p, q")]).unwrap().canon_eq(&s("p | q")));
        let r = Rule::Tran { node: vec![], child: 0, formula: f("<0>p") };
        assert_eq!(apply(&r, &[s("<0>p, (2: <0>p, q)")]).unwrap(), s("<0>p, (2: q)"));
        assert!(apply(&r, &[s("<0>p, (2: q)")]).is_err());
        // strictness fails: the second hole sits beside the first, not below it
        let r = Rule::BoxPlusCut { index: 0, formula: f("p"), holes: vec![vec![0], vec![1]] };
        assert!(apply(&r, &[s("(1: {0}~p), (1: {0}~p)"), s("(1: [0]p), (1: )")]).is_err());
        let r = Rule::BoxCut { index: 0, formula: f("p"), holes: vec![vec![0], vec![1]] };
        assert!(apply(&r, &[s("(1: <0>~p), (1: <0>~p)"), s("(1: [0]p), (1: )")]).is_ok());
    }

    #[test]
    fn j_rules() {
        let r = Rule::JTranPrime { node: vec![], child: 0, formula: f("<0>p"), j: 2 };
        assert_eq!(premises_of(&r, &s("<0>p, (0: )")).unwrap()[0], s("<0>p, (0: <2>p)"));
        assert!(premises_of(&r, &s("<0>p, (1: )")).is_err());
        let r = Rule::JDiaPrime { node: vec![], child: 0, formula: f("<1>p") };
        assert!(premises_of(&r, &s("<1>p, (2: )")).is_err());
    }

    #[test]
    fn annotated_rules_and_strip() {
        let leaf = Derivation::leaf(s("{0}~p, (1: ~p, p)"), Rule::InitAtom { node: vec![0], atom: "p".into() });
        let pi = Derivation::infer(
            Rule::DiaAnn { node: vec![], child: 0, index: 0, body: f("~p") },
            vec![leaf],
        )
        .unwrap();
        assert!(check(&pi, &SystemSpec::glp()).is_err());
        assert!(check(&pi, &SystemSpec::glp().with_annotations()).is_ok());
        let plain = strip_annotations(&pi).unwrap();
        assert!(check(&plain, &SystemSpec::glp()).is_ok());
        assert!(matches!(plain.rule, Rule::DiaProp { .. }));
    }

    #[test]
    fn depth_bound_is_monotone() {
        let r = Rule::BoxPlusCut { index: 0, formula: f("p"), holes: vec![vec![0]] };
        let g = s("(0: )");
        let at = |d| SystemSpec::glp().with_box_plus_cut(CutScope::Unrestricted, Some(d)).admits(&r, &g);
        assert!(at(0).is_ok());
        assert!(at(1).is_ok());
        assert!(at(2).is_err());
    }
}
