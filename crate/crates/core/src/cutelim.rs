//! Cut elimination for GLP_NS.
//!
//! A cut on `A` is first reduced to cuts on members of `C_A` plus boxplus
//! cuts; boxplus cuts are then pushed deeper into the sequent tree until the
//! path from the root to their first hole repeats a box formula, at which
//! point the subproof above the repeated box step is replaced by a cut-free
//! one. The remaining cuts are smaller and handled recursively.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::calculus::{check, premises_of, strip_annotations, CutScope, Derivation, Rule, SystemSpec, Base};
use crate::formula::{AdequateSet, Formula, Modality};
use crate::search::generalized_axiom_at;
use crate::sequent::{path_to_string, AnnotatedFormula, NestedSequent, NodePath};
use crate::transform::{self, TransformError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CutElimError {
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error("input proof is not valid: {0}")]
    InvalidInput(String),
    #[error("{0} is not expected in the input")]
    Unsupported(&'static str),
    #[error("internal invariant broken: {0}")]
    Invariant(String),
}

type Result<T> = std::result::Result<T, CutElimError>;

fn broken(msg: impl Into<String>) -> CutElimError {
    CutElimError::Invariant(msg.into())
}

/// The box formulas `B(Γ, C)` grouped by index, with the order on their
/// subsets used to bound how long a path can avoid repeating a box formula.
#[derive(Debug, Clone)]
pub struct ChainOrderState {
    pub boxed_pool: BTreeMap<Modality, BTreeSet<Formula>>,
    /// The sets `S_1, S_2, ...` of the most recent path examined.
    pub chain_sets: Vec<BTreeSet<Formula>>,
}

impl ChainOrderState {
    pub fn new(gamma: &NestedSequent, c: &AdequateSet) -> ChainOrderState {
        let plain: Vec<Formula> = gamma.all_formulas().into_iter().map(|f| f.erase()).collect();
        let pool = AdequateSet::closure(plain.iter()).union(c);
        ChainOrderState::from_formulas(pool.iter())
    }

    pub fn from_formulas<'a>(fs: impl IntoIterator<Item = &'a Formula>) -> ChainOrderState {
        let mut boxed_pool: BTreeMap<Modality, BTreeSet<Formula>> = BTreeMap::new();
        let mut top = None;
        for f in fs {
            let m = f.max_modality();
            if m >= 0 {
                top = top.max(Some(m as Modality));
            }
            if let Formula::Box(i, _) = f {
                boxed_pool.entry(*i).or_default().insert(f.clone());
            }
        }
        if let Some(m) = top {
            for i in 0..=m {
                boxed_pool.entry(i).or_default();
            }
        }
        ChainOrderState { boxed_pool, chain_sets: vec![] }
    }

    pub fn pool(&self) -> Vec<Formula> {
        self.boxed_pool.values().flatten().cloned().collect()
    }

    /// `l(Γ, C)` as a product over the indices.
    pub fn chain_bound(&self) -> u64 {
        self.boxed_pool.values().map(|b| b.len() as u64 + 1).product()
    }

    /// The strict order on subsets of the pool.
    pub fn precedes(s1: &BTreeSet<Formula>, s2: &BTreeSet<Formula>) -> bool {
        let index = |f: &Formula| match f {
            Formula::Box(i, _) => *i,
            _ => Modality::MAX,
        };
        let differ: Vec<Modality> = s1.symmetric_difference(s2).map(index).collect();
        let Some(&j) = differ.iter().min() else { return false };
        s1.iter().filter(|f| index(f) == j).all(|f| s2.contains(f))
            && s2.iter().any(|f| index(f) == j && !s1.contains(f))
    }

    /// Size of the longest chain, by enumerating all subsets. `None` when
    /// the pool has more than eight formulas.
    pub fn longest_chain_exhaustive(&self) -> Option<u64> {
        let pool = self.pool();
        if pool.len() > 8 {
            return None;
        }
        let n = 1usize << pool.len();
        let sets: Vec<BTreeSet<Formula>> = (0..n)
            .map(|mask| (0..pool.len()).filter(|b| mask >> b & 1 == 1).map(|b| pool[b].clone()).collect())
            .collect();
        // longest chain ending at each subset; process by a topological order
        // obtained from repeated relaxation (the order is acyclic)
        let mut memo: Vec<Option<u64>> = vec![None; n];
        fn longest(k: usize, sets: &[BTreeSet<Formula>], memo: &mut Vec<Option<u64>>) -> u64 {
            if let Some(v) = memo[k] {
                return v;
            }
            let mut best = 1;
            for p in 0..sets.len() {
                if ChainOrderState::precedes(&sets[p], &sets[k]) {
                    best = best.max(1 + longest(p, sets, memo));
                }
            }
            memo[k] = Some(best);
            best
        }
        Some((0..n).map(|k| longest(k, &sets, &mut memo)).max().unwrap_or(1))
    }
}

/// Counters and checks gathered while eliminating cuts.
#[derive(Debug, Clone, Default)]
pub struct CutElimStats {
    /// Cuts reduced (one reduce_cut call each).
    pub rounds: usize,
    /// Every residual cut formula checked against `C_A` and `|A|`.
    pub residual_cuts_checked: usize,
    /// (old, new) first-hole depths of boxplus cuts moved by upstr.
    pub upstr_depths: Vec<(usize, usize)>,
    /// Downward-only stretches performed.
    pub upstr_moves: usize,
    pub lifts: usize,
    pub boxplus_eliminated: usize,
    /// (t, l) for every repetition found.
    pub repetitions: Vec<(usize, u64)>,
    /// Number of chain bounds confirmed by exhaustive enumeration.
    pub chain_bounds_enumerated: usize,
    /// Pass-level trace lines.
    pub trace: Vec<String>,
}

/// Whether the markers of a modal cut are plain diamonds (box-cut) or
/// annotated ones (boxplus-cut).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Flavor {
    Box,
    BoxPlus,
}

fn join(p: &[usize], k: usize) -> NodePath {
    let mut q = p.to_vec();
    q.push(k);
    q
}

fn with_formula(g: &NestedSequent, node: &[usize], f: AnnotatedFormula) -> NestedSequent {
    let mut g = g.clone();
    g.node_mut(node).expect("node resolves").formulas.push(f);
    g
}

/// Builds an inference after checking that each given subproof proves the
/// corresponding premise (up to formula order).
fn infer(g: NestedSequent, rule: Rule, subs: Vec<Derivation>) -> Result<Derivation> {
    let want = premises_of(&rule, &g).map_err(|e| broken(format!("{rule}: {e}")))?;
    if want.len() != subs.len() {
        return Err(broken(format!("{rule}: wrong number of premises")));
    }
    for (w, s) in want.iter().zip(&subs) {
        if !w.aligned_eq(&s.conclusion) {
            return Err(broken(format!("{rule}: premise {} does not match {}", s.conclusion, w)));
        }
    }
    Ok(Derivation::new(g, rule, subs))
}

fn boxplus_depths(d: &Derivation) -> Vec<usize> {
    d.nodes()
        .into_iter()
        .filter_map(|n| match &n.rule {
            Rule::BoxPlusCut { holes, .. } => Some(holes[0].len()),
            _ => None,
        })
        .collect()
}

pub struct Eliminator {
    pub stats: CutElimStats,
    /// Check intermediate proofs at every pass boundary.
    pub validate: bool,
    /// Record pass-level trace lines.
    pub tracing: bool,
}

impl Default for Eliminator {
    fn default() -> Self {
        Eliminator { stats: CutElimStats::default(), validate: cfg!(debug_assertions), tracing: false }
    }
}

impl Eliminator {
    pub fn new() -> Eliminator {
        Eliminator::default()
    }

    fn trace(&mut self, pass: &str, d: &Derivation) {
        if !self.tracing {
            return;
        }
        let cuts = d.count_rules(|r| r.is_cut());
        let depth = boxplus_depths(d).into_iter().max();
        self.stats.trace.push(format!(
            "{pass}: height {} nodes {} cuts {} max-boxplus-depth {}",
            d.height(),
            d.size(),
            cuts,
            depth.map_or("-".to_string(), |x| x.to_string())
        ));
    }

    fn validate(&self, d: &Derivation, c: &AdequateSet, what: &str) -> Result<()> {
        if !self.validate {
            return Ok(());
        }
        let sys = SystemSpec::glp()
            .with_cut(CutScope::Within(c.clone()))
            .with_box_plus_cut(CutScope::Within(c.clone()), None);
        check(d, &sys).map_err(|v| broken(format!("{what} produced an invalid proof: {v}")))
    }

    /// Eliminates a box-cut or boxplus-cut, by induction on `p1`.
    ///
    /// `p1` proves `g` plus a marker for `A` at every hole, `p2` proves `g`
    /// plus `[i]A` at the first hole. Returns a proof of `g`.
    #[allow(clippy::too_many_arguments)]
    fn modal_cut(
        &mut self,
        flavor: Flavor,
        p1: &Derivation,
        p2: &Derivation,
        g: &NestedSequent,
        holes: &[NodePath],
        i: Modality,
        a: &Formula,
    ) -> Result<Derivation> {
        let abar = a.negate();
        let marker = match flavor {
            Flavor::Box => AnnotatedFormula::Plain(Formula::dia(i, abar.clone())),
            Flavor::BoxPlus => AnnotatedFormula::Ann(i, abar.clone()),
        };
        let r = &p1.rule;
        if r.is_initial() {
            // markers are never part of an initial pair
            return infer(g.clone(), r.clone(), vec![]);
        }
        let at_hole = match r.principal() {
            Some((at, f)) => f == marker && holes.contains(&at),
            None => false,
        };
        if !at_hole {
            let prems = premises_of(r, g).map_err(|e| broken(format!("{r} on {g}: {e}")))?;
            let inv = transform::invert(p2, r)?;
            let mut subs = vec![];
            for ((sub1, sub2), pg) in p1.premises.iter().zip(&inv).zip(&prems) {
                subs.push(self.modal_cut(flavor, sub1, sub2, pg, holes, i, a)?);
            }
            return infer(g.clone(), r.clone(), subs);
        }
        match r {
            Rule::Tran { node, child, .. } | Rule::TranAnn { node, child, .. } => {
                let mut more = holes.to_vec();
                more.push(join(node, *child));
                self.modal_cut(flavor, &p1.premises[0], p2, g, &more, i, a)
            }
            Rule::Eucl { node, .. } => {
                if flavor == Flavor::BoxPlus {
                    return Err(broken("eucl on an annotated formula"));
                }
                let mut more = holes.to_vec();
                more.push(node.clone());
                self.modal_cut(flavor, &p1.premises[0], p2, g, &more, i, a)
            }
            Rule::DiaProp { node, child, .. } | Rule::DiaAnn { node, child, .. } => {
                self.modal_step(flavor, p1, p2, g, holes, i, a, node, *child)
            }
            _ => Err(broken(format!("{r} has a diamond principal"))),
        }
    }

    /// The case where the marker at hole `h` is propagated into child `k`.
    #[allow(clippy::too_many_arguments)]
    fn modal_step(
        &mut self,
        flavor: Flavor,
        p1: &Derivation,
        p2: &Derivation,
        g: &NestedSequent,
        holes: &[NodePath],
        i: Modality,
        a: &Formula,
        h: &[usize],
        k: usize,
    ) -> Result<Derivation> {
        let abar = a.negate();
        let c = join(h, k);
        let h0 = &holes[0];
        let boxed = Formula::boxed(i, a.clone());

        // the premise, with the cut on A still pending at c
        let g_neg = with_formula(g, &c, AnnotatedFormula::Plain(abar.clone()));
        let p2_neg = transform::formula_weak(p2, &c, AnnotatedFormula::Plain(abar.clone()))?;
        let rec = self.modal_cut(flavor, &p1.premises[0], &p2_neg, &g_neg, holes, i, a)?;

        // move the bracket [A, <i>~A] produced by inverting the box from h0 to h
        let delta = transform::invert_box(p2, h0, &boxed)?;
        let q = g.node(h0).unwrap().children.len();
        let (moved, at) = if h0.as_slice() == h {
            (delta, join(h, q))
        } else {
            let s = transform::stretch(&delta, h0, q, h, flavor == Flavor::BoxPlus)?;
            self.stats.upstr_moves += usize::from(flavor == Flavor::BoxPlus);
            self.stats.upstr_depths.extend(s.depths.iter().copied());
            check_depths(&s.depths)?;
            (s.proof, s.moved_to)
        };
        let slot = *at.last().unwrap();

        // left: annotate, relabel to the child's index, merge into c
        let j = g.edge_label(&c).ok_or_else(|| broken("diamond step without a child"))?;
        let ann = transform::annotate_diamond(&moved, &at, &Formula::dia(i, abar.clone()))?;
        let ann = if j > i { transform::mon(&ann, &at, j)? } else { ann };
        let left = transform::merge(&ann, h, k, slot)?;

        // right: push the bracket into c, reintroduce the box, weaken by A
        let up = transform::upstr_move(&moved, h, slot, &c)?;
        self.stats.upstr_moves += 1;
        self.stats.upstr_depths.extend(up.depths.iter().copied());
        check_depths(&up.depths)?;
        let g_box = with_formula(g, &c, AnnotatedFormula::Plain(boxed.clone()));
        let boxed_up = infer(g_box, Rule::BoxIntro { node: c.clone(), formula: boxed }, vec![up.proof])?;
        let right = transform::formula_weak(&boxed_up, &c, AnnotatedFormula::Plain(a.clone()))?;

        let g_pos = with_formula(g, &c, AnnotatedFormula::Plain(a.clone()));
        let plus = infer(
            g_pos,
            Rule::BoxPlusCut { index: i, formula: a.clone(), holes: vec![c.clone()] },
            vec![left, right],
        )?;
        infer(g.clone(), Rule::Cut { node: c, formula: a.clone() }, vec![plus, rec])
    }

    /// Eliminates a box-cut: `p1` proves the conclusion with `<i>~A` at every
    /// hole, `p2` with `[i]A` at the first hole.
    pub fn box_cut_elim(
        &mut self,
        p1: &Derivation,
        p2: &Derivation,
        g: &NestedSequent,
        holes: &[NodePath],
        i: Modality,
        a: &Formula,
    ) -> Result<Derivation> {
        premises_of(&Rule::BoxCut { index: i, formula: a.clone(), holes: holes.to_vec() }, g)
            .map_err(|e| broken(format!("box-cut side condition: {e}")))?;
        self.modal_cut(Flavor::Box, p1, p2, g, holes, i, a)
    }

    /// Replaces one boxplus-cut by boxplus-cuts whose first holes lie
    /// strictly deeper. `x` must be the boxplus-cut inference.
    pub fn boxplus_depth_lift(&mut self, x: &Derivation) -> Result<Derivation> {
        let Rule::BoxPlusCut { index, formula, holes } = &x.rule else {
            return Err(broken("lifting needs a boxplus-cut"));
        };
        self.stats.lifts += 1;
        let d = holes[0].len();
        let out = self.modal_cut(Flavor::BoxPlus, &x.premises[0], &x.premises[1], &x.conclusion, holes, *index, formula)?;
        if let Some(shallow) = boxplus_depths(&out).into_iter().find(|&e| e <= d) {
            return Err(broken(format!("lifting a depth {d} boxplus-cut left one at depth {shallow}")));
        }
        Ok(out)
    }

    /// A proof of `g` from proofs of `g` plus `A`
    /// and `g` plus `~A` at `node`, using cuts on `C_A` only.
    pub fn reduce_cut(
        &mut self,
        p1: &Derivation,
        p2: &Derivation,
        g: &NestedSequent,
        node: &[usize],
        a: &Formula,
    ) -> Result<Derivation> {
        match a {
            Formula::Atom(_) | Formula::NegAtom(_) => self.literal_cut(p1, p2, g, node, a),
            Formula::Top => Ok(transform::invert_bot(p2, node)?),
            Formula::Bot => Ok(transform::invert_bot(p1, node)?),
            Formula::Or(..) | Formula::Dia(..) => self.reduce_cut(p2, p1, g, node, &a.negate()),
            Formula::And(b, c) => {
                let (b, c) = ((**b).clone(), (**c).clone());
                let mu1 = transform::invert_and(p1, node, a, 0)?;
                let mu2 = transform::invert_and(p1, node, a, 1)?;
                let mu2 = transform::formula_weak(&mu2, node, AnnotatedFormula::Plain(b.negate()))?;
                let mu3 = transform::invert_or(p2, node, &a.negate())?;
                let g_nb = with_formula(g, node, AnnotatedFormula::Plain(b.negate()));
                let inner = infer(g_nb, Rule::Cut { node: node.to_vec(), formula: c }, vec![mu2, mu3])?;
                infer(g.clone(), Rule::Cut { node: node.to_vec(), formula: b }, vec![mu1, inner])
            }
            Formula::Box(i, b) => self.box_cut_elim(p2, p1, g, &[node.to_vec()], *i, b),
        }
    }

    fn literal_cut(&mut self, p1: &Derivation, p2: &Derivation, g: &NestedSequent, node: &[usize], a: &Formula) -> Result<Derivation> {
        let r = &p1.rule;
        if r.is_initial() {
            if premises_of(r, g).is_ok() {
                return Ok(Derivation::leaf(g.clone(), r.clone()));
            }
            // the initial pair is the cut literal and its dual, already in g
            return Ok(transform::contract_atom(p2, node, &a.negate())?);
        }
        let prems = premises_of(r, g).map_err(|e| broken(format!("{r} on {g}: {e}")))?;
        let inv = transform::invert(p2, r)?;
        let mut subs = vec![];
        for ((s1, s2), pg) in p1.premises.iter().zip(&inv).zip(&prems) {
            subs.push(self.literal_cut(s1, s2, pg, node, a)?);
        }
        infer(g.clone(), r.clone(), subs)
    }

    /// Removes all boxplus-cuts from `pi`, whose other cuts lie in `c`.
    pub fn boxplus_eliminate(&mut self, pi: Derivation, c: &AdequateSet) -> Result<Derivation> {
        let mut pi = pi;
        let gamma = pi.conclusion.clone();
        let h = gamma.height();
        let mut chain = ChainOrderState::new(&gamma, c);
        let l = chain.chain_bound();
        if let Some(exh) = chain.longest_chain_exhaustive() {
            if exh != l {
                return Err(broken(format!("chain bound {l} differs from enumerated {exh}")));
            }
            self.stats.chain_bounds_enumerated += 1;
        }
        loop {
            let sites = boxplus_sites(&pi);
            if sites.is_empty() {
                break;
            }
            let mut replaced = false;
            for pos in &sites {
                if let Some((at, sub)) = self.repetition(&pi, pos, h, l, &mut chain)? {
                    *at_mut(&mut pi, &at) = sub;
                    self.stats.boxplus_eliminated += 1;
                    replaced = true;
                    break;
                }
            }
            if replaced {
                continue;
            }
            // no path repeats yet: lift a boxplus-cut with no other above it,
            // so the lift only copies cut-free material
            let pos = sites
                .iter()
                .rev()
                .find(|p| !sites.iter().any(|q| q.len() > p.len() && q.starts_with(p)))
                .unwrap()
                .clone();
            let d = match &at_ref(&pi, &pos).rule {
                Rule::BoxPlusCut { holes, .. } => holes[0].len(),
                _ => unreachable!(),
            };
            if d as u64 >= h as u64 + l {
                return Err(broken(format!("boxplus-cut at depth {d} >= h + l = {} without a repetition", h as u64 + l)));
            }
            let lifted = self.boxplus_depth_lift(at_ref(&pi, &pos))?;
            *at_mut(&mut pi, &pos) = lifted;
            self.validate(&pi, c, "boxplus_depth_lift")?;
            self.trace("lift", &pi);
        }
        let out = strip_annotations(&pi).map_err(|_| broken("boxplus-cut survived"))?;
        self.validate(&out, c, "boxplus_eliminate")?;
        self.trace("boxplus-eliminate", &out);
        Ok(out)
    }

    /// Looks for a repeated box formula on the path from the root to the
    /// first hole of the boxplus-cut at proof position `pos`. On success
    /// returns the proof position of the box step to replace and its
    /// cut-free replacement.
    fn repetition(
        &mut self,
        pi: &Derivation,
        pos: &[usize],
        h: usize,
        l: u64,
        chain: &mut ChainOrderState,
    ) -> Result<Option<(Vec<usize>, Derivation)>> {
        let branch: Vec<&Derivation> = (0..=pos.len()).map(|k| at_ref(pi, &pos[..k])).collect();
        let x = branch[pos.len()];
        let Rule::BoxPlusCut { holes, .. } = &x.rule else { unreachable!() };
        let b = &holes[0];
        // deep nodes, each with the box step that created it
        let mut nodes: Vec<(NodePath, usize, Formula, Modality)> = vec![];
        for depth in h + 1..=b.len() {
            let a = b[..depth].to_vec();
            let (last, parent) = a.split_last().unwrap();
            let creator = (0..pos.len()).rev().find(|&s| match &branch[s].rule {
                Rule::BoxIntro { node, .. } => {
                    node.as_slice() == parent && branch[s].conclusion.node(parent).unwrap().children.len() == *last
                }
                _ => false,
            });
            let Some(s) = creator else {
                return Err(broken(format!("node {} below the endsequent's height has no box step", path_to_string(&a))));
            };
            let Rule::BoxIntro { formula, .. } = &branch[s].rule else { unreachable!() };
            let j = x.conclusion.edge_label(&a).unwrap();
            nodes.push((a, s, formula.clone(), j));
        }
        chain.chain_sets.clear();
        let mut found = None;
        for t in 0..nodes.len() {
            if t > 0 {
                let prev = &chain.chain_sets[t - 1];
                if prev.contains(&nodes[t].2) {
                    // u: an earlier node with the same formula and a j_u-path to t-1
                    let u = (0..t)
                        .find(|&u| nodes[u].2 == nodes[t].2 && nodes[u + 1..t].iter().all(|n| n.3 >= nodes[u].3))
                        .ok_or_else(|| broken("chain set without witness"))?;
                    found = Some((u, t));
                    break;
                }
            }
            let s: BTreeSet<Formula> = (0..=t)
                .filter(|&k| nodes[k + 1..=t].iter().all(|n| n.3 >= nodes[k].3))
                .map(|k| nodes[k].2.clone())
                .collect();
            if t > 0 && !ChainOrderState::precedes(&chain.chain_sets[t - 1], &s) {
                return Err(broken("chain sets fail to increase"));
            }
            chain.chain_sets.push(s);
        }
        let Some((u, t)) = found else { return Ok(None) };
        // positions counted from 1 as in S_1, S_2, ...
        let t1 = t + 1;
        if t1 as u64 > l {
            return Err(broken(format!("repetition index {t1} exceeds l = {l}")));
        }
        self.stats.repetitions.push((t1, l));
        let (_, s, formula, j) = nodes[t].clone();
        let Formula::Box(_, body) = &formula else { unreachable!() };
        let dia = Formula::dia(j, body.negate());
        let sigma = branch[s].conclusion.clone();
        // tran from node u down to node t-1, then a generalized axiom there
        let mut steps = vec![];
        let mut cur = sigma.clone();
        for v in u..t - 1 {
            let next = &nodes[v + 1].0;
            let rule = Rule::Tran { node: nodes[v].0.clone(), child: *next.last().unwrap(), formula: dia.clone() };
            let p = premises_of(&rule, &cur).map_err(|e| broken(format!("tran chain: {e}")))?.pop().unwrap();
            steps.push((std::mem::replace(&mut cur, p), rule));
        }
        let target = &nodes[t - 1].0;
        if !cur.node(target).unwrap().contains_plain(&dia) || !cur.node(target).unwrap().contains_plain(&formula) {
            return Err(broken("repetition target lacks its pair"));
        }
        let mut d = generalized_axiom_at(Base::Glp, cur, target, &formula);
        while let Some((c, r)) = steps.pop() {
            d = Derivation::new(c, r, vec![d]);
        }
        Ok(Some((pos[..s].to_vec(), d)))
    }

    /// One round: eliminate the cut at the bottom of `d`, whose premises
    /// are cut-free. The result may contain cuts on members of `C_A`.
    fn round(&mut self, d: &Derivation, premises: &[Derivation]) -> Result<Derivation> {
        let (reduced, a, c) = match &d.rule {
            Rule::Cut { node, formula } => {
                let c = AdequateSet::for_cut_formula(formula);
                (self.reduce_cut(&premises[0], &premises[1], &d.conclusion, node, formula)?, formula.clone(), c)
            }
            Rule::BoxCut { index, formula, holes } => {
                let c = AdequateSet::closure([formula]);
                let boxed = Formula::boxed(*index, formula.clone());
                (self.box_cut_elim(&premises[0], &premises[1], &d.conclusion, holes, *index, formula)?, boxed, c)
            }
            _ => unreachable!(),
        };
        self.stats.rounds += 1;
        self.validate(&reduced, &c, "reduce_cut")?;
        self.trace("reduce", &reduced);
        let out = self.boxplus_eliminate(reduced, &c)?;
        for n in out.nodes() {
            if let Rule::Cut { formula, .. } = &n.rule {
                if !c.contains(formula) || formula.complexity() >= a.complexity() {
                    return Err(broken(format!("residual cut on {formula} after cutting {a}")));
                }
                self.stats.residual_cuts_checked += 1;
            }
        }
        Ok(out)
    }

    fn eliminate(&mut self, d: &Derivation) -> Result<Derivation> {
        if d.is_cut_free() {
            return Ok(d.clone());
        }
        let subs = d.premises.iter().map(|p| self.eliminate(p)).collect::<Result<Vec<_>>>()?;
        match &d.rule {
            Rule::Cut { .. } | Rule::BoxCut { .. } => {
                let r = self.round(d, &subs)?;
                self.eliminate(&r)
            }
            Rule::BoxPlusCut { .. } => Err(CutElimError::Unsupported("boxplus-cut")),
            _ => Ok(Derivation::new(d.conclusion.clone(), d.rule.clone(), subs)),
        }
    }

    /// Cut-free proof of the endsequent of `pi`, a proof in GLP_NS plus
    /// cut (and possibly box-cut).
    pub fn eliminate_cuts(&mut self, pi: &Derivation) -> Result<Derivation> {
        if !pi.is_annotation_free() {
            return Err(CutElimError::Unsupported("annotated rule"));
        }
        let sys = SystemSpec::glp()
            .with_cut(CutScope::Unrestricted)
            .with_box_cut(CutScope::Unrestricted);
        check(pi, &sys).map_err(|v| CutElimError::InvalidInput(v.to_string()))?;
        let pi = transform::align(pi)?;
        self.trace("input", &pi);
        let out = self.eliminate(&pi)?;
        self.trace("output", &out);
        Ok(out)
    }
}

fn check_depths(pairs: &[(usize, usize)]) -> Result<()> {
    match pairs.iter().find(|(a, b)| b < a) {
        Some((a, b)) => Err(broken(format!("upstr made a boxplus-cut shallower: {a} -> {b}"))),
        None => Ok(()),
    }
}

/// Proof positions (premise indices from the root) of all boxplus-cuts, in
/// pre-order.
fn boxplus_sites(pi: &Derivation) -> Vec<Vec<usize>> {
    let mut out = vec![];
    let mut stack = vec![(pi, vec![])];
    while let Some((d, pos)) = stack.pop() {
        if matches!(d.rule, Rule::BoxPlusCut { .. }) {
            out.push(pos.clone());
        }
        for (k, p) in d.premises.iter().enumerate().rev() {
            let mut q = pos.clone();
            q.push(k);
            stack.push((p, q));
        }
    }
    out
}

fn at_ref<'a>(pi: &'a Derivation, pos: &[usize]) -> &'a Derivation {
    pos.iter().fold(pi, |d, &k| &d.premises[k])
}

fn at_mut<'a>(pi: &'a mut Derivation, pos: &[usize]) -> &'a mut Derivation {
    pos.iter().fold(pi, |d, &k| &mut d.premises[k])
}

/// Cut-free proof of the endsequent of `pi`, with statistics. Runs on a
/// thread with a large stack since the passes recurse along proof height.
pub fn eliminate_cuts(pi: &Derivation) -> Result<(Derivation, CutElimStats)> {
    eliminate_cuts_with(pi, false)
}

pub fn eliminate_cuts_with(pi: &Derivation, tracing: bool) -> Result<(Derivation, CutElimStats)> {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(1 << 30)
            .spawn_scoped(s, || {
                let mut e = Eliminator { tracing, ..Eliminator::default() };
                let out = e.eliminate_cuts(pi)?;
                Ok((out, e.stats))
            })
            .expect("spawn elimination thread")
            .join()
            .expect("elimination thread panicked")
    })
}
