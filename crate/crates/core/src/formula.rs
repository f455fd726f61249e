//! Modal formulas in negation normal form.
//!
//! Negation exists only on atoms. General negation and implication are
//! accepted by the parser and eliminated on the spot, so everything
//! downstream works with the eight constructors of [`Formula`].

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Atom names. Cloning is a reference-count bump.
pub type Atom = Arc<str>;

/// Index of a modality `[i]` / `<i>`.
pub type Modality = u32;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Formula {
    Atom(Atom),
    NegAtom(Atom),
    Top,
    Bot,
    And(Arc<Formula>, Arc<Formula>),
    Or(Arc<Formula>, Arc<Formula>),
    Box(Modality, Arc<Formula>),
    Dia(Modality, Arc<Formula>),
}

impl Formula {
    pub fn atom(name: &str) -> Formula {
        Formula::Atom(Arc::from(name))
    }

    pub fn neg_atom(name: &str) -> Formula {
        Formula::NegAtom(Arc::from(name))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Arc::new(a), Arc::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Arc::new(a), Arc::new(b))
    }

    pub fn boxed(i: Modality, a: Formula) -> Formula {
        Formula::Box(i, Arc::new(a))
    }

    pub fn dia(i: Modality, a: Formula) -> Formula {
        Formula::Dia(i, Arc::new(a))
    }

    /// `a -> b`, i.e. `~a | b`.
    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::or(a.negate(), b)
    }

    /// `(a -> b) & (b -> a)`.
    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::and(
            Formula::implies(a.clone(), b.clone()),
            Formula::implies(b, a),
        )
    }

    /// Left-associated conjunction; `T` for an empty list.
    pub fn conj(items: impl IntoIterator<Item = Formula>) -> Formula {
        let mut it = items.into_iter();
        match it.next() {
            None => Formula::Top,
            Some(first) => it.fold(first, Formula::and),
        }
    }

    /// Left-associated disjunction; `F` for an empty list.
    pub fn disj(items: impl IntoIterator<Item = Formula>) -> Formula {
        let mut it = items.into_iter();
        match it.next() {
            None => Formula::Bot,
            Some(first) => it.fold(first, Formula::or),
        }
    }

    /// De Morgan dual. An involution.
    pub fn negate(&self) -> Formula {
        match self {
            Formula::Atom(p) => Formula::NegAtom(p.clone()),
            Formula::NegAtom(p) => Formula::Atom(p.clone()),
            Formula::Top => Formula::Bot,
            Formula::Bot => Formula::Top,
            Formula::And(a, b) => Formula::or(a.negate(), b.negate()),
            Formula::Or(a, b) => Formula::and(a.negate(), b.negate()),
            Formula::Box(i, a) => Formula::dia(*i, a.negate()),
            Formula::Dia(i, a) => Formula::boxed(*i, a.negate()),
        }
    }

    pub fn complexity(&self) -> usize {
        match self {
            Formula::Atom(_) | Formula::NegAtom(_) | Formula::Top | Formula::Bot => 1,
            Formula::Box(_, a) | Formula::Dia(_, a) => a.complexity() + 1,
            Formula::And(a, b) | Formula::Or(a, b) => a.complexity().max(b.complexity()) + 1,
        }
    }

    /// Largest modality index occurring in the formula, `-1` if there is none.
    pub fn max_modality(&self) -> i64 {
        match self {
            Formula::Atom(_) | Formula::NegAtom(_) | Formula::Top | Formula::Bot => -1,
            Formula::Box(i, a) | Formula::Dia(i, a) => (*i as i64).max(a.max_modality()),
            Formula::And(a, b) | Formula::Or(a, b) => a.max_modality().max(b.max_modality()),
        }
    }

    pub fn immediate_subformulas(&self) -> Vec<&Formula> {
        match self {
            Formula::Atom(_) | Formula::NegAtom(_) | Formula::Top | Formula::Bot => vec![],
            Formula::Box(_, a) | Formula::Dia(_, a) => vec![a.as_ref()],
            Formula::And(a, b) | Formula::Or(a, b) => vec![a.as_ref(), b.as_ref()],
        }
    }

    /// All subformulas including the formula itself.
    pub fn subformulas(&self) -> BTreeSet<Formula> {
        let mut out = BTreeSet::new();
        let mut stack = vec![self];
        while let Some(f) = stack.pop() {
            if out.insert(f.clone()) {
                stack.extend(f.immediate_subformulas());
            }
        }
        out
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Formula::Atom(_) | Formula::NegAtom(_))
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(p) => write!(f, "{p}"),
            Formula::NegAtom(p) => write!(f, "~{p}"),
            Formula::Top => write!(f, "T"),
            Formula::Bot => write!(f, "F"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::Box(i, a) => write!(f, "[{i}]{a}"),
            Formula::Dia(i, a) => write!(f, "<{i}>{a}"),
        }
    }
}

/// A finite set of formulas closed under immediate subformulas and negation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AdequateSet {
    formulas: BTreeSet<Formula>,
}

impl AdequateSet {
    pub fn empty() -> AdequateSet {
        AdequateSet::default()
    }

    /// Smallest adequate set containing every seed formula.
    pub fn closure<'a>(seed: impl IntoIterator<Item = &'a Formula>) -> AdequateSet {
        let mut formulas = BTreeSet::new();
        let mut stack: Vec<Formula> = seed.into_iter().cloned().collect();
        while let Some(f) = stack.pop() {
            if formulas.contains(&f) {
                continue;
            }
            stack.push(f.negate());
            stack.extend(f.immediate_subformulas().into_iter().cloned());
            formulas.insert(f);
        }
        AdequateSet { formulas }
    }

    /// The cut-formula set for `a`: closure of the proper subformulas of `a`.
    /// Every member is strictly less complex than `a`.
    pub fn for_cut_formula(a: &Formula) -> AdequateSet {
        AdequateSet::closure(a.immediate_subformulas())
    }

    pub fn contains(&self, a: &Formula) -> bool {
        self.formulas.contains(a)
    }

    pub fn len(&self) -> usize {
        self.formulas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.formulas.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Formula> {
        self.formulas.iter()
    }

    pub fn is_subset(&self, other: &AdequateSet) -> bool {
        self.formulas.is_subset(&other.formulas)
    }

    pub fn union(&self, other: &AdequateSet) -> AdequateSet {
        AdequateSet {
            formulas: self.formulas.union(&other.formulas).cloned().collect(),
        }
    }

    pub fn max_modality(&self) -> i64 {
        self.formulas.iter().map(Formula::max_modality).max().unwrap_or(-1)
    }
}

impl<'a> IntoIterator for &'a AdequateSet {
    type Item = &'a Formula;
    type IntoIter = std::collections::btree_set::Iter<'a, Formula>;
    fn into_iter(self) -> Self::IntoIter {
        self.formulas.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("modality index at byte {pos} does not fit in 32 bits")]
    IndexOverflow { pos: usize },
}

pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser::new(text);
    let f = p.formula()?;
    p.expect_end()?;
    Ok(f)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Nat(u64),
    Not,
    And,
    Or,
    Imp,
    Iff,
    LParen,
    RParen,
    LBrack,
    RBrack,
    LAngle,
    RAngle,
    LBrace,
    RBrace,
    Comma,
    Colon,
    End,
}

/// Recursive-descent parser shared with the sequent reader.
pub(crate) struct Parser<'s> {
    src: &'s [u8],
    pos: usize,
}

impl<'s> Parser<'s> {
    pub(crate) fn new(text: &'s str) -> Parser<'s> {
        Parser { src: text.as_bytes(), pos: 0 }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    pub(crate) fn offset(&mut self) -> usize {
        self.skip_ws();
        self.pos
    }

    pub(crate) fn err<T>(&self, pos: usize, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax { pos, msg: msg.into() })
    }

    /// Returns the next token and its length without consuming it.
    fn lex(&mut self) -> Result<(Tok, usize), ParseError> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let Some(&c) = rest.first() else {
            return Ok((Tok::End, 0));
        };
        let tok = match c {
            b'~' => (Tok::Not, 1),
            b'&' => (Tok::And, 1),
            b'|' => (Tok::Or, 1),
            b'(' => (Tok::LParen, 1),
            b')' => (Tok::RParen, 1),
            b'[' => (Tok::LBrack, 1),
            b']' => (Tok::RBrack, 1),
            b'>' => (Tok::RAngle, 1),
            b'{' => (Tok::LBrace, 1),
            b'}' => (Tok::RBrace, 1),
            b',' => (Tok::Comma, 1),
            b':' => (Tok::Colon, 1),
            b'<' if rest.starts_with(b"<->") => (Tok::Iff, 3),
            b'<' => (Tok::LAngle, 1),
            b'-' if rest.starts_with(b"->") => (Tok::Imp, 2),
            b'0'..=b'9' => {
                let len = rest.iter().take_while(|b| b.is_ascii_digit()).count();
                let digits = std::str::from_utf8(&rest[..len]).expect("ascii digits");
                match digits.parse::<u64>() {
                    Ok(n) => (Tok::Nat(n), len),
                    Err(_) => return Err(ParseError::IndexOverflow { pos: self.pos }),
                }
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let len = rest
                    .iter()
                    .take_while(|b| b.is_ascii_alphanumeric() || **b == b'_')
                    .count();
                let word = std::str::from_utf8(&rest[..len]).expect("ascii ident");
                (Tok::Ident(word.to_string()), len)
            }
            _ => return self.err(self.pos, format!("unexpected character {:?}", c as char)),
        };
        Ok(tok)
    }

    pub(crate) fn peek(&mut self) -> Result<Tok, ParseError> {
        Ok(self.lex()?.0)
    }

    /// Looks two tokens ahead.
    pub(crate) fn peek2(&mut self) -> Result<(Tok, Tok), ParseError> {
        let save = self.pos;
        let (a, len) = self.lex()?;
        self.pos += len;
        let b = self.lex().map(|t| t.0);
        self.pos = save;
        Ok((a, b?))
    }

    pub(crate) fn bump(&mut self) -> Result<Tok, ParseError> {
        let (t, len) = self.lex()?;
        self.pos += len;
        Ok(t)
    }

    pub(crate) fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        let pos = self.offset();
        let got = self.bump()?;
        if got == want {
            Ok(())
        } else {
            self.err(pos, format!("expected {what}, found {got:?}"))
        }
    }

    pub(crate) fn expect_end(&mut self) -> Result<(), ParseError> {
        let pos = self.offset();
        match self.peek()? {
            Tok::End => Ok(()),
            t => self.err(pos, format!("trailing input starting with {t:?}")),
        }
    }

    pub(crate) fn index(&mut self) -> Result<Modality, ParseError> {
        let pos = self.offset();
        match self.bump()? {
            Tok::Nat(n) => Modality::try_from(n).map_err(|_| ParseError::IndexOverflow { pos }),
            t => self.err(pos, format!("expected modality index, found {t:?}")),
        }
    }

    pub(crate) fn formula(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.implication()?;
        while self.peek()? == Tok::Iff {
            self.bump()?;
            let rhs = self.implication()?;
            lhs = Formula::iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn implication(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        if self.peek()? == Tok::Imp {
            self.bump()?;
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.conjunction()?;
        while self.peek()? == Tok::Or {
            self.bump()?;
            lhs = Formula::or(lhs, self.conjunction()?);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.unary()?;
        while self.peek()? == Tok::And {
            self.bump()?;
            lhs = Formula::and(lhs, self.unary()?);
        }
        Ok(lhs)
    }

    pub(crate) fn unary(&mut self) -> Result<Formula, ParseError> {
        let pos = self.offset();
        match self.bump()? {
            Tok::Not => Ok(self.unary()?.negate()),
            Tok::LBrack => {
                let i = self.index()?;
                self.expect(Tok::RBrack, "']'")?;
                Ok(Formula::boxed(i, self.unary()?))
            }
            Tok::LAngle => {
                let i = self.index()?;
                self.expect(Tok::RAngle, "'>'")?;
                Ok(Formula::dia(i, self.unary()?))
            }
            Tok::LParen => {
                let f = self.formula()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(f)
            }
            Tok::Ident(w) if w == "T" => Ok(Formula::Top),
            Tok::Ident(w) if w == "F" => Ok(Formula::Bot),
            Tok::Ident(w) => Ok(Formula::Atom(Arc::from(w.as_str()))),
            t => self.err(pos, format!("expected a formula, found {t:?}")),
        }
    }
}
