//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use glp_core::calculus::{Base, CutScope};
use glp_core::cutelim::{eliminate_cuts, CutElimStats, Eliminator};
use glp_core::export::{from_json, to_json, to_latex};
use glp_core::reduction::*;
use glp_core::search::{generalized_axiom_at, prove, prove_generalized_axiom, prove_saturating, SearchBudget, SearchOutcome};
use glp_core::transform;
use glp_core::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CORPUS_TOTAL_SECS: f64 = 120.0;
const CUTELIM_INSTANCE_SECS: f64 = 60.0;
const MAX_EXHAUSTED_RATE: f64 = 0.10;
const SEED: u64 = 0x61c8_8647;

fn random_formula(rng: &mut ChaCha8Rng, depth: usize) -> Formula {
    if depth <= 1 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..6) {
            0 => Formula::atom("p"),
            1 => Formula::atom("q"),
            2 => Formula::neg_atom("p"),
            3 => Formula::neg_atom("q"),
            4 => Formula::atom("r"),
            _ => {
                if rng.gen_bool(0.5) {
                    Formula::Top
                } else {
                    Formula::Bot
                }
            }
        };
    }
    let i: Modality = rng.gen_range(0..3);
    match rng.gen_range(0..4) {
        0 => Formula::and(random_formula(rng, depth - 1), random_formula(rng, depth - 1)),
        1 => Formula::or(random_formula(rng, depth - 1), random_formula(rng, depth - 1)),
        2 => Formula::boxed(i, random_formula(rng, depth - 1)),
        _ => Formula::dia(i, random_formula(rng, depth - 1)),
    }
}

/// A context of height at most 2 with a single hole.
fn random_context(rng: &mut ChaCha8Rng) -> Context {
    let side = |rng: &mut ChaCha8Rng| {
        let n = rng.gen_range(0..3);
        (0..n).map(|_| random_formula(rng, 2)).collect::<Vec<_>>()
    };
    let height = rng.gen_range(0..3);
    let mut body = NestedSequent::from_formulas(side(rng));
    let mut hole = vec![];
    for _ in 0..height {
        let i: Modality = rng.gen_range(0..3);
        body = NestedSequent::from_formulas(side(rng)).with_child(i, body);
        hole.push(0);
    }
    if rng.gen_bool(0.3) {
        let j: Modality = rng.gen_range(0..3);
        body = body.with_child(j, NestedSequent::from_formulas(side(rng)));
    }
    Context::new(body, vec![hole])
}

fn with_pair(ctx: &Context, a: &Formula) -> NestedSequent {
    let mut g = ctx.skeleton.clone();
    let n = g.node_mut(&ctx.holes[0]).unwrap();
    n.formulas.push(a.clone().into());
    n.formulas.push(a.negate().into());
    g
}

struct Report {
    lines: Vec<(bool, String)>,
}

impl Report {
    fn record(&mut self, n: usize, name: &str, ok: bool, detail: String) {
        let line = format!("[{}] {n}. {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        println!("{line}");
        self.lines.push((ok, line));
    }
}

fn negative_suite() -> Vec<Formula> {
    ["p", "<0>T", "[1]p -> [0]p", "<0>p -> <1>p", "[0]p"].iter().map(|s| parse(s).unwrap()).collect()
}

struct PipelineRun {
    record: String,
    secs: f64,
    result: Result<(Derivation, CutElimStats), String>,
}

fn run_pipeline(inst: &Instance) -> PipelineRun {
    let t = Instant::now();
    let result = (|| {
        let pi = hilbert_embed(&inst.formula, &inst.justification).map_err(|e| e.to_string())?;
        check(&pi, &SystemSpec::glp().with_cut(CutScope::Unrestricted)).map_err(|v| format!("embedding: {v:?}"))?;
        let (out, stats) = eliminate_cuts(&pi).map_err(|e| e.to_string())?;
        check(&out, &SystemSpec::glp()).map_err(|v| format!("output: {v:?}"))?;
        if !out.is_cut_free() || !out.is_annotation_free() {
            return Err("cut or annotation left".to_string());
        }
        if !out.conclusion.canon_eq(&pi.conclusion) {
            return Err("endsequent changed".to_string());
        }
        Ok((out, stats))
    })();
    PipelineRun { record: inst.record(), secs: t.elapsed().as_secs_f64(), result }
}

/// Proofs still holding boxplus-cuts, with the bracket around the cut hole
/// moved down into a sibling labelled 2. Returns the logged depth pairs.
fn upstr_fixtures(rng: &mut ChaCha8Rng) -> (Vec<(usize, usize)>, Vec<String>) {
    let annotated = SystemSpec::glp().with_cut(CutScope::Unrestricted).with_box_plus_cut(CutScope::Unrestricted, None);
    let (mut pairs, mut bad) = (vec![], vec![]);
    for _ in 0..30 {
        let label: Modality = rng.gen_range(0..3);
        let i: Modality = rng.gen_range(0..3);
        let depth = rng.gen_range(1..=3);
        let a = Formula::boxed(i, random_formula(rng, depth));
        let side = random_formula(rng, 2);
        let mut g = NestedSequent::empty().with_child(label, NestedSequent::from_formulas([side, a.clone(), a.negate()]));
        if rng.gen_bool(0.5) {
            g.formulas.push(random_formula(rng, 2).into());
        }
        let mut g1 = g.clone();
        g1.node_mut(&[0]).unwrap().formulas.push(a.clone().into());
        let mut g2 = g.clone();
        g2.node_mut(&[0]).unwrap().formulas.push(a.negate().into());
        let p1 = generalized_axiom_at(Base::Glp, g1, &[0], &a);
        let p2 = generalized_axiom_at(Base::Glp, g2, &[0], &a);
        let pi = match Eliminator::new().reduce_cut(&p1, &p2, &g, &[0], &a) {
            Ok(pi) => pi,
            Err(e) => {
                bad.push(format!("{g}: {e}"));
                continue;
            }
        };
        let target = NestedSequent::empty().with_child(2, NestedSequent::empty());
        let moved = transform::weak(&pi, &[], &target).and_then(|w| transform::upstr_move(&w, &[], 0, &[1]));
        match moved {
            Ok(m) if check(&m.proof, &annotated).is_ok() => pairs.extend(m.depths),
            Ok(_) => bad.push(format!("{g}: moved proof invalid")),
            Err(e) => bad.push(format!("{g}: {e}")),
        }
    }
    (pairs, bad)
}

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/latex")
}

#[test]
fn acceptance() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut report = Report { lines: vec![] };
    let glp = SystemSpec::glp();
    let budget = SearchBudget::default();

    // 1. every axiom instance of the corpus is provable by cut-free search
    let corpus = hilbert_corpus();
    let t = Instant::now();
    let mut search_proofs = vec![];
    let mut missed = vec![];
    for inst in &corpus {
        match prove(&NestedSequent::singleton(inst.formula.clone()), &glp, budget).unwrap() {
            SearchOutcome::Proved(d) if check(&d, &glp).is_ok() => search_proofs.push(d),
            other => missed.push(format!("{} -> {}", inst.record(), other.verdict())),
        }
    }
    let secs = t.elapsed().as_secs_f64();
    report.record(
        1,
        "axiom corpus provability",
        missed.is_empty() && secs <= CORPUS_TOTAL_SECS,
        format!("{}/{} proved in {secs:.2}s (limit {CORPUS_TOTAL_SECS}s) {missed:?}", search_proofs.len(), corpus.len()),
    );

    // 2. generalized axioms in random contexts; independent search on 50
    let contexts: Vec<Context> = (0..20).map(|_| random_context(&mut rng)).collect();
    let mut valid = 0;
    let mut formulas = vec![];
    for k in 0..200 {
        let d = rng.gen_range(1..=8);
        let a = random_formula(&mut rng, d);
        assert!(a.complexity() <= 8);
        let ctx = &contexts[k % contexts.len()];
        let d = prove_generalized_axiom(ctx, &a);
        if check(&d, &glp).is_ok() && d.conclusion == with_pair(ctx, &a) && d.is_cut_free() {
            valid += 1;
        }
        formulas.push(a);
    }
    let mut searched = 0;
    for a in formulas.iter().take(50) {
        let g = NestedSequent::from_formulas([a.clone(), a.negate()]);
        if let SearchOutcome::Proved(d) = prove_saturating(&g, &glp, budget).unwrap() {
            if check(&d, &glp).is_ok() {
                searched += 1;
            }
        }
    }
    let heights = contexts.iter().map(|c| c.skeleton.height()).max().unwrap();
    report.record(
        2,
        "generalized axioms",
        valid == 200 && searched == 50 && heights <= 2,
        format!("{valid}/200 valid across 20 contexts (max height {heights}); search proved {searched}/50"),
    );

    // 3. negative suite is refuted, not exhausted
    let verdicts: Vec<String> = negative_suite()
        .iter()
        .map(|a| prove(&NestedSequent::singleton(a.clone()), &glp, budget).unwrap().verdict().to_string())
        .collect();
    report.record(
        3,
        "non-theorem refutation",
        verdicts.iter().all(|v| v == "NOT-PROVABLE"),
        format!("{verdicts:?}"),
    );

    // 4. cut elimination over the embedded corpus and modus-ponens instances
    let mut all = corpus.clone();
    all.extend(modus_ponens_instances(50));
    let runs: Vec<PipelineRun> = all.iter().map(run_pipeline).collect();
    let failures: Vec<String> = runs
        .iter()
        .filter_map(|r| match &r.result {
            Err(e) => Some(format!("{}: {e}", r.record)),
            Ok(_) if r.secs > CUTELIM_INSTANCE_SECS => Some(format!("{}: {:.1}s", r.record, r.secs)),
            Ok(_) => None,
        })
        .collect();
    let slowest = runs.iter().map(|r| r.secs).fold(0.0, f64::max);
    report.record(
        4,
        "cut elimination",
        failures.is_empty(),
        format!(
            "{}/{} instances cut-free and valid, slowest {slowest:.2}s (limit {CUTELIM_INSTANCE_SECS}s) {failures:?}",
            runs.len() - failures.len(),
            runs.len()
        ),
    );

    // 5. pass-level invariants, enforced inside the passes and counted here
    let stats: Vec<&CutElimStats> = runs.iter().filter_map(|r| r.result.as_ref().ok()).map(|(_, s)| s).collect();
    let residual: usize = stats.iter().map(|s| s.residual_cuts_checked).sum();
    let upstr: usize = stats.iter().map(|s| s.upstr_moves).sum();
    let upstr_pairs: Vec<(usize, usize)> = stats.iter().flat_map(|s| s.upstr_depths.iter().copied()).collect();
    let (fixture_pairs, fixture_bad) = upstr_fixtures(&mut rng);
    let upstr_pairs: Vec<(usize, usize)> = upstr_pairs.into_iter().chain(fixture_pairs).collect();
    let monotone = upstr_pairs.iter().all(|(old, new)| new >= old) && fixture_bad.is_empty();
    let reps: Vec<(usize, u64)> = stats.iter().flat_map(|s| s.repetitions.iter().copied()).collect();
    let bounded = reps.iter().all(|(t, l)| (*t as u64) <= *l);
    let enumerated: usize = stats.iter().map(|s| s.chain_bounds_enumerated).sum();
    let rounds: usize = stats.iter().map(|s| s.rounds).sum();
    report.record(
        5,
        "pass-level invariants",
        failures.is_empty() && monotone && !upstr_pairs.is_empty() && bounded && !reps.is_empty() && enumerated > 0,
        format!(
            "{rounds} rounds, {residual} residual cuts in C_A; {upstr} upstr moves in the pipeline plus random fixtures, {} boxplus depth pairs, monotone {monotone} {fixture_bad:?}; {} repetitions with t <= l ({bounded}); {enumerated} chain bounds matched enumeration",
            upstr_pairs.len(),
            reps.len()
        ),
    );

    // 6. GLP verdict on A agrees with J verdict on M+(A) -> A
    let mut suite: Vec<Formula> = corpus.iter().take(55).map(|i| i.formula.clone()).collect();
    suite.extend(negative_suite());
    suite.extend((0..40).map(|_| {
        let d = rng.gen_range(1..=5);
        random_formula(&mut rng, d)
    }));
    let small = SearchBudget { time_limit: Some(Duration::from_secs(20)), ..budget };
    let (mut agree, mut disagree, mut exhausted) = (0, vec![], 0);
    for a in &suite {
        let g = prove(&NestedSequent::singleton(a.clone()), &glp, small).unwrap();
        let j_goal = NestedSequent::singleton(Formula::implies(m_plus(a), a.clone()));
        let j = prove(&j_goal, &SystemSpec::j(), small).unwrap();
        if g == SearchOutcome::Exhausted || j == SearchOutcome::Exhausted {
            exhausted += 1;
        } else if g.is_proved() == j.is_proved() {
            agree += 1;
        } else {
            disagree.push(format!("{a}: GLP {} / J {}", g.verdict(), j.verdict()));
        }
    }
    let rate = exhausted as f64 / suite.len() as f64;
    report.record(
        6,
        "GLP/J equivalence",
        disagree.is_empty() && rate <= MAX_EXHAUSTED_RATE,
        format!(
            "{agree}/{} agree, {exhausted} exhausted ({:.1}%, limit {:.0}%) {disagree:?}",
            suite.len(),
            rate * 100.0,
            MAX_EXHAUSTED_RATE * 100.0
        ),
    );

    // 7. translation of every cut-free corpus proof into J_NS + weak + cont
    let cut_free: Vec<&Derivation> = runs
        .iter()
        .filter_map(|r| r.result.as_ref().ok())
        .map(|(d, _)| d)
        .chain(search_proofs.iter())
        .collect();
    let mut translated = vec![];
    let mut bad = vec![];
    for d in &cut_free {
        match glp_to_j(d) {
            Ok(j) => {
                let ok = check(&j, &SystemSpec::j_weak_cont()).is_ok() && j.conclusion == star(&d.conclusion).unwrap();
                if ok {
                    translated.push(j);
                } else {
                    bad.push(d.conclusion.to_string());
                }
            }
            Err(e) => bad.push(format!("{}: {e}", d.conclusion)),
        }
    }
    let mut sample: Vec<&Derivation> = translated.iter().collect();
    sample.shuffle(&mut rng);
    sample.truncate(20);
    let mut interp_ok = 0;
    for j in &sample {
        let f = j.conclusion.interpret().unwrap();
        match prove(&NestedSequent::singleton(f.clone()), &SystemSpec::j(), budget).unwrap() {
            SearchOutcome::Proved(_) => interp_ok += 1,
            other => bad.push(format!("interpretation {f}: {}", other.verdict())),
        }
    }
    report.record(
        7,
        "translation validity",
        bad.is_empty() && interp_ok == sample.len() && sample.len() == 20,
        format!(
            "{}/{} translations valid with endsequent star; {interp_ok}/{} sampled interpretations J-proved {bad:?}",
            translated.len(),
            cut_free.len(),
            sample.len()
        ),
    );

    // 8. JSON round trip of random proofs; LaTeX against golden files
    let mut exact = 0;
    for k in 0..500 {
        let ctx = random_context(&mut rng);
        let depth = rng.gen_range(1..=6);
        let a = random_formula(&mut rng, depth);
        let mut d = generalized_axiom_at(if k % 4 == 3 { Base::J } else { Base::Glp }, with_pair(&ctx, &a), &ctx.holes[0], &a);
        if k % 5 == 1 {
            d = transform::necessitation_box(&d, rng.gen_range(0..3)).unwrap();
        }
        let text = to_json(&d);
        if let Ok(back) = from_json(&text) {
            if back == d && to_json(&back) == text {
                exact += 1;
            }
        }
    }
    let samples = [
        "p | ~p",
        "[0](p -> q) -> ([0]p -> [0]q)",
        "[0]([0]p -> p) -> [0]p",
        "<0>p -> [1]<0>p",
        "[0]p -> [1]p",
        "[1]([1]p -> p) -> [1]p",
        "(p & q) -> (q & p)",
        "<1>~p, (1: p)",
        "[0]p -> [0][0]p",
        "T, (2: F)",
    ];
    let bless = std::env::var_os("GLP_BLESS").is_some();
    let mut latex_ok = 0;
    let mut latex_bad = vec![];
    for (k, s) in samples.iter().enumerate() {
        let goal = parse_sequent(s).unwrap();
        let SearchOutcome::Proved(d) = prove(&goal, &glp, budget).unwrap() else {
            latex_bad.push(format!("{s}: not proved"));
            continue;
        };
        let tex = to_latex(&d);
        let path = golden_dir().join(format!("{k:02}.tex"));
        if bless {
            std::fs::create_dir_all(golden_dir()).unwrap();
            std::fs::write(&path, &tex).unwrap();
        }
        match std::fs::read_to_string(&path) {
            Ok(g) if g == tex => latex_ok += 1,
            Ok(_) => latex_bad.push(format!("{s}: differs from {}", path.display())),
            Err(e) => latex_bad.push(format!("{s}: {e}")),
        }
    }
    report.record(
        8,
        "round-trip serialization",
        exact == 500 && latex_ok == samples.len(),
        format!("{exact}/500 JSON exact; {latex_ok}/{} LaTeX match golden {latex_bad:?}", samples.len()),
    );

    let failed: Vec<&String> = report.lines.iter().filter(|(ok, _)| !ok).map(|(_, l)| l).collect();
    assert!(failed.is_empty(), "failing criteria:\n{}", failed.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("\n"));
}
