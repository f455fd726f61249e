//! Nested sequents: trees whose nodes carry formula multisets and whose
//! edges carry modality indices.
//!
//! Nodes are addressed by [`NodePath`], a list of positional child indices
//! from the root. Formulas and children are kept in insertion order so that
//! paths computed against one sequent stay meaningful after formulas are
//! added or children are appended. Multiset equality is available through
//! [`NestedSequent::canonical`].

use std::fmt;

use thiserror::Error;

use crate::formula::{Formula, Modality, ParseError, Parser, Tok};

/// A formula of an annotated sequent. `Ann(i, B)` stands for the traced
/// diamond written `{i}B` in text form.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum AnnotatedFormula {
    Plain(Formula),
    Ann(Modality, Formula),
}

impl AnnotatedFormula {
    pub fn plain(&self) -> Option<&Formula> {
        match self {
            AnnotatedFormula::Plain(f) => Some(f),
            AnnotatedFormula::Ann(..) => None,
        }
    }

    pub fn is_annotated(&self) -> bool {
        matches!(self, AnnotatedFormula::Ann(..))
    }

    /// The ordinary formula obtained by forgetting the annotation.
    pub fn erase(&self) -> Formula {
        match self {
            AnnotatedFormula::Plain(f) => f.clone(),
            AnnotatedFormula::Ann(i, b) => Formula::dia(*i, b.clone()),
        }
    }

    pub fn max_modality(&self) -> i64 {
        self.erase().max_modality()
    }
}

impl From<Formula> for AnnotatedFormula {
    fn from(f: Formula) -> Self {
        AnnotatedFormula::Plain(f)
    }
}

impl fmt::Display for AnnotatedFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnnotatedFormula::Plain(a) => write!(f, "{a}"),
            AnnotatedFormula::Ann(i, b) => write!(f, "{{{i}}}{b}"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Child {
    pub index: Modality,
    pub body: NestedSequent,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct NestedSequent {
    pub formulas: Vec<AnnotatedFormula>,
    pub children: Vec<Child>,
}

/// Positional address of a node: child positions from the root.
pub type NodePath = Vec<usize>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SequentError {
    #[error("path {0} does not resolve")]
    BadPath(String),
    #[error("expected {expected} hole contents, got {got}")]
    HoleCount { expected: usize, got: usize },
    #[error("annotated formula {0} has no ordinary interpretation")]
    Annotated(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

pub fn path_to_string(path: &[usize]) -> String {
    path.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(".")
}

pub fn path_from_string(text: &str) -> Result<NodePath, SequentError> {
    if text.is_empty() {
        return Ok(vec![]);
    }
    text.split('.')
        .map(|s| s.parse::<usize>().map_err(|_| SequentError::BadPath(text.to_string())))
        .collect()
}

impl NestedSequent {
    pub fn empty() -> NestedSequent {
        NestedSequent::default()
    }

    pub fn singleton(f: Formula) -> NestedSequent {
        NestedSequent { formulas: vec![f.into()], children: vec![] }
    }

    pub fn from_formulas(fs: impl IntoIterator<Item = Formula>) -> NestedSequent {
        NestedSequent { formulas: fs.into_iter().map(Into::into).collect(), children: vec![] }
    }

    pub fn with_child(mut self, index: Modality, body: NestedSequent) -> NestedSequent {
        self.children.push(Child { index, body });
        self
    }

    pub fn is_empty(&self) -> bool {
        self.formulas.is_empty() && self.children.is_empty()
    }

    pub fn node(&self, path: &[usize]) -> Option<&NestedSequent> {
        let mut cur = self;
        for &k in path {
            cur = &cur.children.get(k)?.body;
        }
        Some(cur)
    }

    pub fn node_mut(&mut self, path: &[usize]) -> Option<&mut NestedSequent> {
        let mut cur = self;
        for &k in path {
            cur = &mut cur.children.get_mut(k)?.body;
        }
        Some(cur)
    }

    pub fn try_node(&self, path: &[usize]) -> Result<&NestedSequent, SequentError> {
        self.node(path).ok_or_else(|| SequentError::BadPath(path_to_string(path)))
    }

    pub fn try_node_mut(&mut self, path: &[usize]) -> Result<&mut NestedSequent, SequentError> {
        self.node_mut(path).ok_or_else(|| SequentError::BadPath(path_to_string(path)))
    }

    /// Label of the edge entering the node at `path` (None for the root).
    pub fn edge_label(&self, path: &[usize]) -> Option<Modality> {
        let (last, parent) = path.split_last()?;
        Some(self.node(parent)?.children.get(*last)?.index)
    }

    /// Labels of all edges from the root down to `path`.
    pub fn labels_along(&self, path: &[usize]) -> Option<Vec<Modality>> {
        let mut cur = self;
        let mut out = Vec::with_capacity(path.len());
        for &k in path {
            let c = cur.children.get(k)?;
            out.push(c.index);
            cur = &c.body;
        }
        Some(out)
    }

    pub fn count(&self, f: &AnnotatedFormula) -> usize {
        self.formulas.iter().filter(|g| *g == f).count()
    }

    pub fn contains(&self, f: &AnnotatedFormula) -> bool {
        self.formulas.contains(f)
    }

    pub fn contains_plain(&self, f: &Formula) -> bool {
        self.formulas.iter().any(|g| g.plain() == Some(f))
    }

    /// Removes one occurrence; returns whether one was present.
    pub fn remove_one(&mut self, f: &AnnotatedFormula) -> bool {
        if let Some(k) = self.formulas.iter().position(|g| g == f) {
            self.formulas.remove(k);
            true
        } else {
            false
        }
    }

    /// Merges the formulas and children of `other` into this node.
    pub fn absorb(&mut self, other: NestedSequent) {
        self.formulas.extend(other.formulas);
        self.children.extend(other.children);
    }

    /// Every node path in pre-order.
    pub fn paths(&self) -> Vec<NodePath> {
        let mut out = vec![];
        fn go(s: &NestedSequent, cur: &mut NodePath, out: &mut Vec<NodePath>) {
            out.push(cur.clone());
            for (k, c) in s.children.iter().enumerate() {
                cur.push(k);
                go(&c.body, cur, out);
                cur.pop();
            }
        }
        go(self, &mut vec![], &mut out);
        out
    }

    /// Length of the longest branch.
    pub fn height(&self) -> usize {
        self.children.iter().map(|c| c.body.height() + 1).max().unwrap_or(0)
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(|c| c.body.node_count()).sum::<usize>()
    }

    pub fn has_annotations(&self) -> bool {
        self.formulas.iter().any(AnnotatedFormula::is_annotated)
            || self.children.iter().any(|c| c.body.has_annotations())
    }

    /// Replaces every annotated formula by its ordinary diamond.
    pub fn erase_annotations(&self) -> NestedSequent {
        NestedSequent {
            formulas: self.formulas.iter().map(|f| f.erase().into()).collect(),
            children: self
                .children
                .iter()
                .map(|c| Child { index: c.index, body: c.body.erase_annotations() })
                .collect(),
        }
    }

    /// m(Γ): the largest modality in the interpretation, bracket labels included.
    pub fn max_modality(&self) -> i64 {
        let f = self.formulas.iter().map(AnnotatedFormula::max_modality).max().unwrap_or(-1);
        let c = self
            .children
            .iter()
            .map(|c| (c.index as i64).max(c.body.max_modality()))
            .max()
            .unwrap_or(-1);
        f.max(c)
    }

    /// All formulas occurring anywhere in the tree, with repetitions.
    pub fn all_formulas(&self) -> Vec<&AnnotatedFormula> {
        let mut out: Vec<&AnnotatedFormula> = self.formulas.iter().collect();
        for c in &self.children {
            out.extend(c.body.all_formulas());
        }
        out
    }

    /// Multiset-invariant key: equal iff the sequents agree up to reordering
    /// of formulas and children at every node.
    pub fn canonical(&self) -> String {
        let mut items: Vec<String> = self.formulas.iter().map(|f| f.to_string()).collect();
        items.extend(self.children.iter().map(|c| format!("({}: {})", c.index, c.body.canonical())));
        items.sort();
        items.join(", ")
    }

    pub fn canon_eq(&self, other: &NestedSequent) -> bool {
        self.canonical() == other.canonical()
    }

    /// Equality with children compared position by position and formulas as
    /// multisets. This is the notion under which node paths agree.
    pub fn aligned_eq(&self, other: &NestedSequent) -> bool {
        if self.children.len() != other.children.len() || self.formulas.len() != other.formulas.len() {
            return false;
        }
        let mut a = self.formulas.clone();
        let mut b = other.formulas.clone();
        a.sort();
        b.sort();
        a == b
            && self
                .children
                .iter()
                .zip(&other.children)
                .all(|(x, y)| x.index == y.index && x.body.aligned_eq(&y.body))
    }

    /// The formula Γ^♯: formulas first, then boxed children, each group in
    /// canonical order, with the disjunction associated to the left.
    pub fn interpret(&self) -> Result<Formula, SequentError> {
        let mut items: Vec<(String, Formula)> = vec![];
        let mut boxes: Vec<(String, Formula)> = vec![];
        for f in &self.formulas {
            match f {
                AnnotatedFormula::Plain(a) => items.push((a.to_string(), a.clone())),
                AnnotatedFormula::Ann(..) => return Err(SequentError::Annotated(f.to_string())),
            }
        }
        for c in &self.children {
            let key = format!("({}: {})", c.index, c.body.canonical());
            boxes.push((key, Formula::boxed(c.index, c.body.interpret()?)));
        }
        items.sort_by(|a, b| a.0.cmp(&b.0));
        boxes.sort_by(|a, b| a.0.cmp(&b.0));
        items.extend(boxes);
        Ok(Formula::disj(items.into_iter().map(|(_, f)| f)))
    }
}

impl fmt::Display for NestedSequent {
    /// Prints formulas then children in stored order; `parse_sequent` reads
    /// the output back to an identical value.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for a in &self.formulas {
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            write!(f, "{a}")?;
        }
        for c in &self.children {
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            write!(f, "({}: {})", c.index, c.body)?;
        }
        Ok(())
    }
}

pub fn parse_sequent(text: &str) -> Result<NestedSequent, SequentError> {
    let mut p = Parser::new(text);
    let s = sequent_body(&mut p)?;
    p.expect_end()?;
    Ok(s)
}

fn sequent_body(p: &mut Parser<'_>) -> Result<NestedSequent, ParseError> {
    let mut s = NestedSequent::empty();
    if matches!(p.peek()?, Tok::End | Tok::RParen) {
        return Ok(s);
    }
    loop {
        match p.peek2()? {
            (Tok::LParen, Tok::Nat(_)) => {
                p.bump()?;
                let index = p.index()?;
                p.expect(Tok::Colon, "':'")?;
                let body = sequent_body(p)?;
                p.expect(Tok::RParen, "')'")?;
                s.children.push(Child { index, body });
            }
            (Tok::LBrace, _) => {
                p.bump()?;
                let i = p.index()?;
                p.expect(Tok::RBrace, "'}'")?;
                let body = p.unary()?;
                s.formulas.push(AnnotatedFormula::Ann(i, body));
            }
            _ => s.formulas.push(AnnotatedFormula::Plain(p.formula()?)),
        }
        if p.peek()? == Tok::Comma {
            p.bump()?;
        } else {
            return Ok(s);
        }
    }
}

/// Whether the tree path from `from` to `to` is an i-path: every edge
/// climbed on the way up to the common ancestor has label > i and every edge
/// descended afterwards has label >= i. A strict i-path does not climb.
pub fn is_i_path(
    tree: &NestedSequent,
    from: &[usize],
    to: &[usize],
    i: Modality,
    strict: bool,
) -> Result<bool, SequentError> {
    let up = tree.labels_along(from).ok_or_else(|| SequentError::BadPath(path_to_string(from)))?;
    let down = tree.labels_along(to).ok_or_else(|| SequentError::BadPath(path_to_string(to)))?;
    let lca = from.iter().zip(to).take_while(|(a, b)| a == b).count();
    if strict && lca < from.len() {
        return Ok(false);
    }
    Ok(up[lca..].iter().all(|&j| j > i) && down[lca..].iter().all(|&j| j >= i))
}

/// A sequent with formula-position holes. Filling a hole merges the content
/// into the node that carries it.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Context {
    pub skeleton: NestedSequent,
    pub holes: Vec<NodePath>,
}

impl Context {
    pub fn new(skeleton: NestedSequent, holes: Vec<NodePath>) -> Context {
        Context { skeleton, holes }
    }

    pub fn fill(&self, contents: Vec<NestedSequent>) -> Result<NestedSequent, SequentError> {
        if contents.len() != self.holes.len() {
            return Err(SequentError::HoleCount { expected: self.holes.len(), got: contents.len() });
        }
        for h in &self.holes {
            self.skeleton.try_node(h)?;
        }
        let mut out = self.skeleton.clone();
        for (h, c) in self.holes.iter().zip(contents) {
            out.node_mut(h).expect("checked above").absorb(c);
        }
        Ok(out)
    }
}
