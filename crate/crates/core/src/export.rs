//! Proof serialization: JSON documents, bussproofs LaTeX and an indented
//! plain-text tree.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calculus::{Derivation, Rule};
use crate::formula::{parse, Formula, ParseError};
use crate::sequent::{
    parse_sequent, path_from_string, path_to_string, AnnotatedFormula, NestedSequent, SequentError,
};

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown rule tag {0:?}")]
    UnknownTag(String),
    #[error("rule {tag} is missing field {field}")]
    MissingField { tag: String, field: &'static str },
    #[error("rule {0} expects an atom")]
    NotAnAtom(String),
    #[error(transparent)]
    Sequent(#[from] SequentError),
    #[error(transparent)]
    Formula(#[from] ParseError),
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Eq)]
struct Node {
    conclusion: String,
    rule: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    principal: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    child: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    aux: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    i: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    j: Option<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    holes: Vec<String>,
    #[serde(default)]
    premises: Vec<Node>,
}

fn encode(d: &Derivation) -> Node {
    let mut n = Node {
        conclusion: d.conclusion.to_string(),
        rule: d.rule.tag().to_string(),
        principal: None,
        child: None,
        aux: None,
        i: None,
        j: None,
        holes: vec![],
        premises: d.premises.iter().map(encode).collect(),
    };
    match &d.rule {
        Rule::BoxCut { index, formula, holes } | Rule::BoxPlusCut { index, formula, holes } => {
            n.i = Some(*index);
            n.aux = Some(formula.to_string());
            n.holes = holes.iter().map(|h| path_to_string(h)).collect();
            return n;
        }
        Rule::InitAtom { atom, .. } => n.aux = Some(atom.to_string()),
        Rule::InitTop { .. } => {}
        Rule::DiaAnn { index, body, .. } | Rule::TranAnn { index, body, .. } => {
            n.i = Some(*index);
            n.aux = Some(body.to_string());
        }
        Rule::JTranPrime { formula, j, .. } => {
            n.aux = Some(formula.to_string());
            n.j = Some(*j);
        }
        Rule::AndIntro { formula, .. }
        | Rule::OrIntro { formula, .. }
        | Rule::BoxIntro { formula, .. }
        | Rule::DiaProp { formula, .. }
        | Rule::Tran { formula, .. }
        | Rule::Eucl { formula, .. }
        | Rule::Cut { formula, .. }
        | Rule::JBoxIntro { formula, .. }
        | Rule::JDiaPrime { formula, .. }
        | Rule::JTran { formula, .. }
        | Rule::JEucl { formula, .. }
        | Rule::Weak { formula, .. }
        | Rule::Cont { formula, .. } => n.aux = Some(formula.to_string()),
    }
    n.principal = Some(path_to_string(d.rule.node()));
    n.child = d.rule.child();
    n
}

fn decode(n: &Node) -> Result<Derivation, ExportError> {
    let missing = |field| ExportError::MissingField { tag: n.rule.clone(), field };
    let node = || -> Result<Vec<usize>, ExportError> {
        Ok(path_from_string(n.principal.as_deref().ok_or_else(|| missing("principal"))?)?)
    };
    let child = || n.child.ok_or_else(|| missing("child"));
    let aux = || -> Result<Formula, ExportError> { Ok(parse(n.aux.as_deref().ok_or_else(|| missing("aux"))?)?) };
    let i = || n.i.ok_or_else(|| missing("i"));
    let rule = match n.rule.as_str() {
        "InitAtom" => match aux()? {
            Formula::Atom(atom) => Rule::InitAtom { node: node()?, atom },
            _ => return Err(ExportError::NotAnAtom(n.rule.clone())),
        },
        "InitTop" => Rule::InitTop { node: node()? },
        "AndIntro" => Rule::AndIntro { node: node()?, formula: aux()? },
        "OrIntro" => Rule::OrIntro { node: node()?, formula: aux()? },
        "BoxIntro" => Rule::BoxIntro { node: node()?, formula: aux()? },
        "DiaProp" => Rule::DiaProp { node: node()?, child: child()?, formula: aux()? },
        "Tran" => Rule::Tran { node: node()?, child: child()?, formula: aux()? },
        "Eucl" => Rule::Eucl { node: node()?, child: child()?, formula: aux()? },
        "Cut" => Rule::Cut { node: node()?, formula: aux()? },
        "BoxCut" | "BoxPlusCut" => {
            let holes = n.holes.iter().map(|h| path_from_string(h)).collect::<Result<Vec<_>, _>>()?;
            if holes.is_empty() {
                return Err(missing("holes"));
            }
            if n.rule == "BoxCut" {
                Rule::BoxCut { index: i()?, formula: aux()?, holes }
            } else {
                Rule::BoxPlusCut { index: i()?, formula: aux()?, holes }
            }
        }
        "DiaAnn" => Rule::DiaAnn { node: node()?, child: child()?, index: i()?, body: aux()? },
        "TranAnn" => Rule::TranAnn { node: node()?, child: child()?, index: i()?, body: aux()? },
        "JBoxIntro" => Rule::JBoxIntro { node: node()?, formula: aux()? },
        "JDiaPrime" => Rule::JDiaPrime { node: node()?, child: child()?, formula: aux()? },
        "JTran" => Rule::JTran { node: node()?, child: child()?, formula: aux()? },
        "JTranPrime" => Rule::JTranPrime {
            node: node()?,
            child: child()?,
            formula: aux()?,
            j: n.j.ok_or_else(|| missing("j"))?,
        },
        "JEucl" => Rule::JEucl { node: node()?, child: child()?, formula: aux()? },
        "Weak" => Rule::Weak { node: node()?, formula: aux()? },
        "Cont" => Rule::Cont { node: node()?, formula: aux()? },
        other => return Err(ExportError::UnknownTag(other.to_string())),
    };
    Ok(Derivation {
        conclusion: parse_sequent(&n.conclusion)?,
        rule,
        premises: n.premises.iter().map(decode).collect::<Result<_, _>>()?,
    })
}

pub fn to_json(d: &Derivation) -> String {
    serde_json::to_string_pretty(&encode(d)).expect("proof documents always serialize")
}

pub fn from_json(text: &str) -> Result<Derivation, ExportError> {
    let mut de = serde_json::Deserializer::from_str(text);
    de.disable_recursion_limit();
    let node = Node::deserialize(&mut de)?;
    de.end()?;
    decode(&node)
}

pub fn formula_latex(f: &Formula) -> String {
    match f {
        Formula::Atom(p) => p.to_string(),
        Formula::NegAtom(p) => format!("\\overline{{{p}}}"),
        Formula::Top => "\\top".into(),
        Formula::Bot => "\\bot".into(),
        Formula::And(a, b) => format!("({} \\wedge {})", formula_latex(a), formula_latex(b)),
        Formula::Or(a, b) => format!("({} \\vee {})", formula_latex(a), formula_latex(b)),
        Formula::Box(i, a) => format!("\\Box_{{{i}}} {}", formula_latex(a)),
        Formula::Dia(i, a) => format!("\\Diamond_{{{i}}} {}", formula_latex(a)),
    }
}

fn sequent_items_latex(s: &NestedSequent) -> Vec<String> {
    let mut items: Vec<String> = s
        .formulas
        .iter()
        .map(|f| match f {
            AnnotatedFormula::Plain(a) => formula_latex(a),
            AnnotatedFormula::Ann(i, b) => format!("\\boxtimes_{{{i}}} {}", formula_latex(b)),
        })
        .collect();
    for c in &s.children {
        let inner = sequent_items_latex(&c.body);
        let inner = if inner.is_empty() { "\\emptyset".to_string() } else { inner.join(", ") };
        items.push(format!("[{inner}]_{{{}}}", c.index));
    }
    items
}

pub fn sequent_latex(s: &NestedSequent) -> String {
    let items = sequent_items_latex(s);
    if items.is_empty() {
        "\\emptyset".into()
    } else {
        items.join(", ")
    }
}

fn rule_label(r: &Rule) -> &'static str {
    match r {
        Rule::InitAtom { .. } | Rule::InitTop { .. } => "\\textsf{ax}",
        Rule::AndIntro { .. } => "$\\wedge$",
        Rule::OrIntro { .. } => "$\\vee$",
        Rule::BoxIntro { .. } | Rule::JBoxIntro { .. } => "$\\Box$",
        Rule::DiaProp { .. } => "$\\Diamond$",
        Rule::Tran { .. } | Rule::JTran { .. } => "\\textsf{tran}",
        Rule::Eucl { .. } | Rule::JEucl { .. } => "\\textsf{eucl}",
        Rule::Cut { .. } => "\\textsf{cut}",
        Rule::BoxCut { .. } => "$\\Box$-\\textsf{cut}",
        Rule::BoxPlusCut { .. } => "$\\boxplus$-\\textsf{cut}",
        Rule::DiaAnn { .. } => "$\\boxtimes$",
        Rule::TranAnn { .. } | Rule::JTranPrime { .. } => "\\textsf{tran}$'$",
        Rule::JDiaPrime { .. } => "$\\Diamond'$",
        Rule::Weak { .. } => "\\textsf{weak}",
        Rule::Cont { .. } => "\\textsf{cont}",
    }
}

/// One `bussproofs` proof tree ending in `\DisplayProof`.
pub fn to_latex(d: &Derivation) -> String {
    fn go(d: &Derivation, out: &mut String) {
        let concl = sequent_latex(&d.conclusion);
        if d.premises.is_empty() {
            out.push_str(&format!("\\AxiomC{{$ {concl} $}}\n"));
            return;
        }
        for p in &d.premises {
            go(p, out);
        }
        let inf = if d.premises.len() == 1 { "UnaryInfC" } else { "BinaryInfC" };
        out.push_str(&format!("\\RightLabel{{\\scriptsize {}}}\n", rule_label(&d.rule)));
        out.push_str(&format!("\\{inf}{{$ {concl} $}}\n"));
    }
    let mut out = String::new();
    go(d, &mut out);
    out.push_str("\\DisplayProof\n");
    out
}

/// Indented tree, conclusion first, one inference per line.
pub fn to_text(d: &Derivation) -> String {
    let mut out = String::new();
    let mut stack = vec![(d, 0usize)];
    while let Some((d, depth)) = stack.pop() {
        let concl = if d.conclusion.is_empty() { "(empty)".to_string() } else { d.conclusion.to_string() };
        out.push_str(&format!("{}{concl}    [{}]\n", "  ".repeat(depth), d.rule));
        stack.extend(d.premises.iter().rev().map(|p| (p, depth + 1)));
    }
    out
}
