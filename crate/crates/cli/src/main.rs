use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use glp_core::calculus::CutScope;
use glp_core::cutelim::eliminate_cuts_with;
use glp_core::export::{from_json, to_json, to_latex, to_text};
use glp_core::reduction::{glp_to_j, hilbert_corpus, hilbert_embed, m_plus, modus_ponens_instances, Instance};
use glp_core::search::{prove, SearchBudget, SearchOutcome};
use glp_core::{check, parse, parse_sequent, Derivation, Formula, NestedSequent, SystemSpec};

const PROVED: u8 = 0;
const NOT_PROVABLE: u8 = 1;
const BAD_INPUT: u8 = 2;
const EXHAUSTED: u8 = 3;
const FAILURE: u8 = 4;

#[derive(Parser)]
#[command(name = "glpns", version, about = "Nested-sequent prover and proof toolkit for GLP")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Search for a cut-free proof of a formula or sequent.
    Prove {
        input: String,
        #[arg(long, value_enum, default_value_t = Logic::Glp)]
        logic: Logic,
        /// Prove M+(A) -> A instead of A (use with --logic j).
        #[arg(long)]
        as_reduction: bool,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Check a JSON proof against a proof system.
    Check {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Logic::Glp)]
        logic: Logic,
        /// Allow cut, box-cut and boxplus-cut with any cut formula.
        #[arg(long)]
        cuts: bool,
        /// Allow annotated formulas and their rules.
        #[arg(long)]
        annotated: bool,
        /// Allow weakening and contraction.
        #[arg(long)]
        weak_cont: bool,
    },
    /// Eliminate all cuts from a JSON proof.
    Elim {
        file: PathBuf,
        /// Print the pass trace on stderr.
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Reduce a GLP formula to J and decide it there.
    Reduce {
        formula: String,
        /// Also translate a cut-free GLP proof into J_NS + weak + cont.
        #[arg(long)]
        proof: bool,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Embed corpus instance INDEX into GLP_NS + cut (as a proof with cuts).
    Embed {
        index: usize,
        /// Number of modus-ponens instances following the axiom corpus.
        #[arg(long, default_value_t = 0)]
        mp: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Write the Hilbert axiom corpus, one tab-separated record per line.
    Corpus {
        /// Number of derived modus-ponens instances to append.
        #[arg(long, default_value_t = 0)]
        mp: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Logic {
    Glp,
    J,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Latex,
}

#[derive(Args)]
struct BudgetArgs {
    #[arg(long, default_value_t = 200_000)]
    max_nodes: usize,
    #[arg(long, default_value_t = 40)]
    max_height: usize,
    /// Seconds; 0 disables the limit.
    #[arg(long, default_value_t = 60)]
    time_limit: u64,
    /// Print search statistics on stderr.
    #[arg(long)]
    trace: bool,
}

impl BudgetArgs {
    fn budget(&self) -> SearchBudget {
        SearchBudget {
            max_nodes: self.max_nodes,
            max_height: self.max_height,
            time_limit: (self.time_limit > 0).then(|| Duration::from_secs(self.time_limit)),
        }
    }
}

#[derive(Args)]
struct OutArgs {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the proof here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

struct Fail(u8, String);

type Outcome = Result<u8, Fail>;

fn bad_input(msg: impl ToString) -> Fail {
    Fail(BAD_INPUT, msg.to_string())
}

fn failure(msg: impl ToString) -> Fail {
    Fail(FAILURE, msg.to_string())
}

fn system(logic: Logic) -> SystemSpec {
    match logic {
        Logic::Glp => SystemSpec::glp(),
        Logic::J => SystemSpec::j(),
    }
}

fn parse_goal(text: &str) -> Result<NestedSequent, Fail> {
    parse_sequent(text).map_err(|e| bad_input(format!("parse error: {e}")))
}

fn render(d: &Derivation, format: Format) -> String {
    match format {
        Format::Text => to_text(d),
        Format::Json => to_json(d),
        Format::Latex => to_latex(d),
    }
}

fn emit(d: &Derivation, out: &OutArgs) -> Result<(), Fail> {
    let mut s = render(d, out.format);
    if !s.ends_with('\n') {
        s.push('\n');
    }
    match &out.output {
        Some(p) => std::fs::write(p, s).map_err(|e| failure(format!("{}: {e}", p.display()))),
        None => {
            print!("{s}");
            Ok(())
        }
    }
}

fn read_proof(path: &Path) -> Result<Derivation, Fail> {
    let text = std::fs::read_to_string(path).map_err(|e| bad_input(format!("{}: {e}", path.display())))?;
    from_json(&text).map_err(|e| bad_input(format!("{}: {e}", path.display())))
}

fn search(goal: &NestedSequent, sys: &SystemSpec, b: &BudgetArgs) -> Result<SearchOutcome, Fail> {
    let t = Instant::now();
    let out = prove(goal, sys, b.budget()).map_err(failure)?;
    if b.trace {
        let size = match &out {
            SearchOutcome::Proved(d) => d.size().to_string(),
            _ => "-".into(),
        };
        eprintln!("search: {} in {:?}, proof size {size}", out.verdict(), t.elapsed());
    }
    Ok(out)
}

fn verdict_code(out: &SearchOutcome) -> u8 {
    match out {
        SearchOutcome::Proved(_) => PROVED,
        SearchOutcome::NotProvable => NOT_PROVABLE,
        SearchOutcome::Exhausted => EXHAUSTED,
    }
}

fn cmd_prove(input: &str, logic: Logic, as_reduction: bool, budget: &BudgetArgs, out: &OutArgs) -> Outcome {
    let mut goal = parse_goal(input)?;
    if as_reduction {
        let a = goal.interpret().map_err(bad_input)?;
        goal = NestedSequent::singleton(Formula::implies(m_plus(&a), a));
    }
    let res = search(&goal, &system(logic), budget)?;
    println!("{}", res.verdict());
    if let SearchOutcome::Proved(d) = &res {
        emit(d, out)?;
    }
    Ok(verdict_code(&res))
}

fn cmd_check(file: &Path, logic: Logic, cuts: bool, annotated: bool, weak_cont: bool) -> Outcome {
    let d = read_proof(file)?;
    let mut sys = system(logic);
    if cuts {
        sys = sys.with_cut(CutScope::Unrestricted).with_box_cut(CutScope::Unrestricted);
        if logic == Logic::Glp {
            sys = sys.with_box_plus_cut(CutScope::Unrestricted, None);
        }
    }
    if annotated {
        sys = sys.with_annotations();
    }
    sys.weak = weak_cont;
    sys.cont = weak_cont;
    sys.validate().map_err(bad_input)?;
    match check(&d, &sys) {
        Ok(()) => {
            println!("ok: {} inferences, height {}", d.size(), d.height());
            Ok(0)
        }
        Err(v) => {
            println!("violation at {:?} ({}): {}", v.at, v.rule, v.reason);
            Ok(1)
        }
    }
}

fn cmd_elim(file: &Path, trace: bool, out: &OutArgs) -> Outcome {
    let d = read_proof(file)?;
    let t = Instant::now();
    let (res, stats) = eliminate_cuts_with(&d, trace).map_err(failure)?;
    if trace {
        for line in &stats.trace {
            eprintln!("{line}");
        }
    }
    eprintln!(
        "cut-free in {:?}: size {} -> {}, rounds {}, lifts {}, boxplus-cuts eliminated {}",
        t.elapsed(),
        d.size(),
        res.size(),
        stats.rounds,
        stats.lifts,
        stats.boxplus_eliminated
    );
    emit(&res, out)?;
    Ok(0)
}

fn cmd_reduce(text: &str, proof: bool, budget: &BudgetArgs, out: &OutArgs) -> Outcome {
    let a = parse(text).map_err(|e| bad_input(format!("parse error: {e}")))?;
    let target = Formula::implies(m_plus(&a), a.clone());
    println!("M+(A): {}", m_plus(&a));
    println!("goal: {target}");
    let res = search(&NestedSequent::singleton(target), &SystemSpec::j(), budget)?;
    println!("J: {}", res.verdict());
    if proof && res.is_proved() {
        match search(&NestedSequent::singleton(a), &SystemSpec::glp(), budget)? {
            SearchOutcome::Proved(d) => emit(&glp_to_j(&d).map_err(failure)?, out)?,
            other => eprintln!("GLP search: {}, no translation", other.verdict()),
        }
    }
    Ok(verdict_code(&res))
}

fn corpus(mp: usize) -> Vec<Instance> {
    let mut all = hilbert_corpus();
    all.extend(modus_ponens_instances(mp));
    all
}

fn cmd_embed(index: usize, mp: usize, out: &OutArgs) -> Outcome {
    let all = corpus(mp);
    let inst = all.get(index).ok_or_else(|| bad_input(format!("no instance {index}; the corpus has {}", all.len())))?;
    eprintln!("{}", inst.record());
    emit(&hilbert_embed(&inst.formula, &inst.justification).map_err(failure)?, out)?;
    Ok(0)
}

fn cmd_corpus(mp: usize, output: Option<&Path>) -> Outcome {
    let all = corpus(mp);
    let mut s = String::new();
    for inst in &all {
        s.push_str(&inst.record());
        s.push('\n');
    }
    match output {
        Some(p) => std::fs::write(p, s).map_err(|e| failure(format!("{}: {e}", p.display())))?,
        None => print!("{s}"),
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Prove { input, logic, as_reduction, budget, out } => cmd_prove(input, *logic, *as_reduction, budget, out),
        Cmd::Check { file, logic, cuts, annotated, weak_cont } => cmd_check(file, *logic, *cuts, *annotated, *weak_cont),
        Cmd::Elim { file, trace, out } => cmd_elim(file, *trace, out),
        Cmd::Reduce { formula, proof, budget, out } => cmd_reduce(formula, *proof, budget, out),
        Cmd::Embed { index, mp, out } => cmd_embed(*index, *mp, out),
        Cmd::Corpus { mp, output } => cmd_corpus(*mp, output.as_deref()),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, msg)) => {
            eprintln!("glpns: {msg}");
            ExitCode::from(code)
        }
    }
}
