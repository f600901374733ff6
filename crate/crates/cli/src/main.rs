use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use symchain::bridge::triviality_test;
use symchain::diffalg::{wu_chain, WuOptions};
use symchain::doc;
use symchain::harness::{check_membership, run_corpus, NamedSystem, Pipeline};
use symchain::symgen::determining;
use symchain::text::parse_problem;
use symchain::{Error, GeneratorKind, Problem};

#[derive(Parser)]
#[command(name = "symchain", version, about = "Determining systems, Wu chains and the classical/nonclassical bridge")]
struct Cli {
    /// Print the JSON document on stdout instead of the text rendering.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Classical,
    Nonclassical,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Membership {
    Zero,
    Nonzero,
}

#[derive(Clone, Copy, ValueEnum)]
enum Triviality {
    Nontrivial,
    ClassicalEquivalent,
    Inconclusive,
}

#[derive(Subcommand)]
enum Cmd {
    /// Determining system of the problem's equations.
    Determining {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Wu chain and IS product of a system block.
    Chain {
        /// Problem file holding the declarations and the system block.
        #[arg(long)]
        system: PathBuf,
        /// Block name; defaults to the first block.
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// D'', C, the identities for D and the IS values.
    Connect {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Substitutes a candidate into a system.
    Check {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        candidate: String,
        /// D, Dprime, C, Cprime, Dpp, a block name, or `chain FILE`.
        #[arg(long, num_args = 1..=2, default_value = "D")]
        against: Vec<String>,
        #[arg(long, value_enum)]
        expect: Option<Membership>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Nontriviality test of a candidate.
    Trivial {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        candidate: String,
        #[arg(long, value_enum)]
        expect: Option<Triviality>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs the shipped corpus.
    Corpus {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Document plus whether the asserted verdict held.
type Outcome = (Value, bool);

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Problem, Error> {
    parse_problem(&read(path)?)
}

fn load_with_equations(path: &Path) -> Result<Problem, Error> {
    let p = load(path)?;
    if p.equations.is_empty() {
        return Err(Error::Usage(format!("{} declares no equation", path.display())));
    }
    Ok(p)
}

fn candidate(problem: &Problem, name: &str) -> Result<symchain::text::ResolvedCandidate, Error> {
    let c = problem
        .candidate(name)
        .ok_or_else(|| Error::Name(format!("candidate {name}")))?;
    problem.resolve(c)
}

fn run(cmd: &Cmd) -> Result<Outcome, Error> {
    match cmd {
        Cmd::Determining { kind, problem, .. } => {
            let p = load_with_equations(problem)?;
            let kind = match kind {
                Kind::Classical => GeneratorKind::Classical,
                Kind::Nonclassical => GeneratorKind::Nonclassical,
            };
            let d = determining(&p.pde(), &p.rank(), kind)?;
            Ok((doc::determining_doc(&p.det_space(), &d), true))
        }
        Cmd::Chain { system, name, .. } => {
            let p = load(system)?;
            let block = match name {
                Some(n) => p.system(n).ok_or_else(|| Error::Name(format!("system {n}")))?,
                None => p
                    .systems
                    .first()
                    .ok_or_else(|| Error::Usage(format!("{} has no system block", system.display())))?,
            };
            let sp = p.det_space();
            let c = wu_chain(&sp, &block.polys(), &p.rank(), &WuOptions::default())?;
            let mut d = doc::chain_doc(&sp, &c, "c");
            d["system"] = json!(block.name);
            Ok((d, true))
        }
        Cmd::Connect { problem, .. } => {
            let p = load_with_equations(problem)?;
            let pl = Pipeline::run(p)?;
            Ok((doc::bridge_doc(&pl.bridge), true))
        }
        Cmd::Check {
            problem,
            candidate: cname,
            against,
            expect,
            ..
        } => {
            let src = read(problem)?;
            let (p, sys) = match against.as_slice() {
                [c, file] if c == "chain" => {
                    // the chain file holds system blocks over the problem's declarations
                    let p = parse_problem(&format!("{src}\n{}", read(Path::new(file))?))?;
                    let b = p.systems.last().ok_or_else(|| Error::Usage(format!("{file} has no system block")))?;
                    let sys = NamedSystem::from_block(b);
                    (p, sys)
                }
                [name] => {
                    let p = parse_problem(&src)?;
                    let sys = match name.as_str() {
                        "D" | "Dprime" | "C" | "Cprime" | "Dpp" => {
                            if p.equations.is_empty() {
                                return Err(Error::Usage(format!("{} declares no equation", problem.display())));
                            }
                            Pipeline::run(p.clone())?.system(name)
                        }
                        _ => p.system(name).map(NamedSystem::from_block),
                    }
                    .ok_or_else(|| Error::Name(format!("system {name}")))?;
                    (p, sys)
                }
                _ => return Err(Error::Usage("--against takes a system name or `chain FILE`".into())),
            };
            let rc = candidate(&p, cname)?;
            let r = check_membership(&p, &rc, cname, &sys)?;
            let got = if r.member { Membership::Zero } else { Membership::Nonzero };
            let held = expect.is_none_or(|e| e == got);
            Ok((doc::membership_doc(&r), held))
        }
        Cmd::Trivial {
            problem,
            candidate: cname,
            expect,
            ..
        } => {
            let p = load_with_equations(problem)?;
            let rc = candidate(&p, cname)?;
            let pl = Pipeline::run(p)?;
            let v = triviality_test(&pl.problem, &pl.bridge, &rc, None)?;
            let held = expect.is_none_or(|e| {
                let want = match e {
                    Triviality::Nontrivial => "nontrivial",
                    Triviality::ClassicalEquivalent => "classical_equivalent",
                    Triviality::Inconclusive => "inconclusive",
                };
                v.verdict.name() == want
            });
            Ok((doc::verdict_doc(cname, &v), held))
        }
        Cmd::Corpus { .. } => {
            let r = run_corpus();
            let ok = r.ok();
            Ok((doc::corpus_doc(&r), ok))
        }
    }
}

fn out_path(cmd: &Cmd) -> Option<&PathBuf> {
    match cmd {
        Cmd::Determining { out, .. }
        | Cmd::Chain { out, .. }
        | Cmd::Connect { out, .. }
        | Cmd::Check { out, .. }
        | Cmd::Trivial { out, .. }
        | Cmd::Corpus { out } => out.as_ref(),
    }
}

fn emit(cli: &Cli, v: &Value) -> Result<(), Error> {
    if let Some(path) = out_path(&cli.cmd) {
        std::fs::write(path, doc::to_json(v)).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    }
    if cli.json {
        print!("{}", doc::to_json(v));
    } else {
        print!("{}", doc::render_text(v));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = run(&cli.cmd).and_then(|(v, held)| emit(&cli, &v).map(|_| held));
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprint!("{}", doc::to_json(&doc::error_doc(&e)));
            ExitCode::from(2)
        }
    }
}
