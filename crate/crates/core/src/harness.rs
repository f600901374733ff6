//! Corpus fixtures, candidate membership and the corpus runner.

use crate::bridge::{bridge_from, inclusion_audit, triviality_test, AuditEntry, BridgeResult};
use crate::diffalg::{content_free, prem, wu_chain, Chain, Rank, WuOptions};
use crate::error::Error;
use crate::expr::{Arg, Atom, Frac, Poly, Space};
use crate::symgen::{determining, DeterminingSystem, GeneratorKind};
use crate::text::{parse_problem, print_poly, Problem, ResolvedCandidate, SystemBlock};
use serde::Serialize;
use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

/// Fixture files shipped with the crate.
pub const CORPUS: &[(&str, &str)] = &[
    ("burgers_huxley", include_str!("../corpus/burgers_huxley.sym")),
    ("generalized_burgers", include_str!("../corpus/generalized_burgers.sym")),
    ("kdv_system", include_str!("../corpus/kdv_system.sym")),
];

pub fn corpus_source(name: &str) -> Option<&'static str> {
    CORPUS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn corpus_problem(name: &str) -> Result<Problem, Error> {
    let src = corpus_source(name).ok_or_else(|| Error::Name(name.to_string()))?;
    parse_problem(src)
}

/// Marker used in `note` lines of fixtures that reproduce a printed form
/// known to be wrong.
pub const DISCREPANCY: &str = "expected-discrepancy";

pub fn is_discrepancy(notes: &[String]) -> bool {
    notes.iter().any(|n| n.starts_with(DISCREPANCY))
}

/// Labelled polynomials with the generator form they are written in.
#[derive(Clone, Debug)]
pub struct NamedSystem {
    pub name: String,
    pub kind: GeneratorKind,
    pub members: Vec<(String, Poly)>,
}

impl NamedSystem {
    pub fn new(name: &str, kind: GeneratorKind, polys: &[Poly]) -> NamedSystem {
        NamedSystem {
            name: name.to_string(),
            kind,
            members: polys
                .iter()
                .enumerate()
                .map(|(i, p)| (format!("#{}", i + 1), p.clone()))
                .collect(),
        }
    }

    pub fn from_block(b: &SystemBlock) -> NamedSystem {
        NamedSystem {
            name: b.name.clone(),
            kind: b.kind,
            members: b.labels().into_iter().zip(b.polys()).collect(),
        }
    }

    pub fn from_determining(name: &str, d: &DeterminingSystem) -> NamedSystem {
        NamedSystem::new(name, d.kind, &d.polys)
    }

    pub fn polys(&self) -> Vec<Poly> {
        self.members.iter().map(|(_, p)| p.clone()).collect()
    }
}

/// Substitutes a candidate into polynomials of the determining space.
///
/// Unknown jets become derivatives of the bound values, `set` parameters and
/// declared functions are replaced, everything else is kept. The first
/// infinitesimal is never substituted when the target is nonclassical, so
/// images of the map keep it symbolic.
pub struct Evaluator<'a> {
    rc: &'a ResolvedCandidate,
    values: BTreeMap<usize, Frac>,
    cache: RefCell<HashMap<Atom, Option<Frac>>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(rc: &'a ResolvedCandidate, nunknowns: usize, target: GeneratorKind) -> Result<Evaluator<'a>, Error> {
        let sp = &rc.space;
        let get = |k: usize| {
            rc.unknowns
                .get(&k)
                .cloned()
                .ok_or_else(|| Error::Binding(sp.funcs[k].name.clone()))
        };
        let mut values: BTreeMap<usize, Frac> = rc.functions.clone();
        match (rc.kind, target) {
            (GeneratorKind::Classical, GeneratorKind::Classical) => {
                for k in 0..nunknowns {
                    values.insert(k, get(k)?);
                }
            }
            (GeneratorKind::Nonclassical, GeneratorKind::Classical) => {
                values.insert(0, Frac::from(Poly::one()));
                for k in 1..nunknowns {
                    values.insert(k, get(k)?);
                }
            }
            (GeneratorKind::Nonclassical, GeneratorKind::Nonclassical) => {
                for k in 1..nunknowns {
                    values.insert(k, get(k)?);
                }
            }
            (GeneratorKind::Classical, GeneratorKind::Nonclassical) => {
                let t = get(0)?;
                if t.is_zero() {
                    return Err(Error::Binding(format!(
                        "{} = 0, the candidate has no normalized form",
                        sp.funcs[0].name
                    )));
                }
                for k in 1..nunknowns {
                    values.insert(k, Frac::div(sp, &get(k)?, &t)?);
                }
            }
        }
        Ok(Evaluator {
            rc,
            values,
            cache: RefCell::new(HashMap::new()),
        })
    }

    pub fn space(&self) -> &Space {
        &self.rc.space
    }

    fn value(&self, a: &Atom) -> Option<Frac> {
        if let Some(v) = self.cache.borrow().get(a) {
            return v.clone();
        }
        let sp = &self.rc.space;
        let v = match a {
            Atom::Param(i) => self.rc.params.get(&(*i as usize)).cloned(),
            Atom::Jet(f, alpha) => self.values.get(&(*f as usize)).map(|v| {
                let coords: Vec<usize> = sp.funcs[*f as usize]
                    .args
                    .iter()
                    .map(|x| match x {
                        Arg::Var(i) => *i as usize,
                        Arg::Func(_) => unreachable!("determining space arguments are coordinates"),
                    })
                    .collect();
                v.total_derivative_multi(sp, &coords, alpha)
            }),
            _ => None,
        };
        self.cache.borrow_mut().insert(a.clone(), v.clone());
        v
    }

    pub fn eval(&self, p: &Poly) -> Frac {
        self.rc.space.eval_frac(p, &|a| self.value(a))
    }

    /// Numerator of the substituted polynomial; it vanishes iff the value
    /// does.
    pub fn residual(&self, p: &Poly) -> Poly {
        self.eval(p).num
    }
}

/// Ranking used for the side equations of a candidate: the problem's
/// coordinate order with the local functions in declaration order.
pub fn side_rank(rank: &Rank, rc: &ResolvedCandidate) -> Rank {
    Rank::new(rank.indep.clone(), rc.side_funcs.iter().map(|&f| f as u16).collect())
}

/// Chain of the side system of a candidate, if it declares one.
pub fn side_chain(rank: &Rank, rc: &ResolvedCandidate) -> Result<Option<Chain>, Error> {
    if rc.side.is_empty() {
        return Ok(None);
    }
    let sp = &rc.space;
    let polys: Vec<Poly> = rc.side.iter().map(|(t, v)| Poly::atom(t.clone()) - v.clone()).collect();
    let r = side_rank(rank, rc);
    let c = wu_chain(sp, &polys, &r, &WuOptions::default())?;
    if c.is_product(sp).is_zero() {
        return Err(Error::IsVanishes);
    }
    Ok(Some(c))
}

/// Residual reduced modulo the side chain.
pub fn reduce_side(sp: &Space, side: Option<&Chain>, p: Poly) -> Poly {
    match side {
        Some(c) if !p.is_zero() => prem(sp, &p, c).remainder,
        _ => p,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Residual {
    pub label: String,
    pub residual: String,
    pub zero: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MembershipReport {
    pub candidate: String,
    pub system: String,
    pub residuals: Vec<Residual>,
    /// IS product of the side chain, when a side system is declared.
    pub side_is: Option<String>,
    pub member: bool,
}

impl MembershipReport {
    pub fn nonzero_labels(&self) -> Vec<&str> {
        self.residuals
            .iter()
            .filter(|r| !r.zero)
            .map(|r| r.label.as_str())
            .collect()
    }
}

/// Substitutes the candidate into every member of `sys`.
pub fn check_membership(
    problem: &Problem,
    rc: &ResolvedCandidate,
    candidate: &str,
    sys: &NamedSystem,
) -> Result<MembershipReport, Error> {
    let nunk = problem.unknown_names().len();
    let ev = Evaluator::new(rc, nunk, sys.kind)?;
    let side = side_chain(&problem.rank(), rc)?;
    let sp = &rc.space;
    let mut residuals = Vec::new();
    for (label, p) in &sys.members {
        let r = reduce_side(sp, side.as_ref(), ev.residual(p));
        residuals.push(Residual {
            label: label.clone(),
            residual: print_poly(sp, &r),
            zero: r.is_zero(),
        });
    }
    Ok(MembershipReport {
        candidate: candidate.to_string(),
        system: sys.name.clone(),
        member: residuals.iter().all(|r| r.zero),
        residuals,
        side_is: side.map(|c| print_poly(sp, &c.is_product(sp))),
    })
}

/// Result of comparing two polynomial lists up to per-member constant
/// factors and order.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Comparison {
    pub equal: bool,
    /// Members of the left list with no proportional partner.
    pub only_left: Vec<String>,
    pub only_right: Vec<String>,
}

pub fn compare_systems(sp: &Space, left: &[Poly], right: &[Poly]) -> Comparison {
    let unmatched = |a: &[Poly], b: &[Poly]| -> Vec<String> {
        a.iter()
            .filter(|p| !b.iter().any(|q| p.proportional(q).is_some()))
            .map(|p| print_poly(sp, p))
            .collect()
    };
    let only_left = unmatched(left, right);
    let only_right = unmatched(right, left);
    Comparison {
        equal: only_left.is_empty() && only_right.is_empty() && left.len() == right.len(),
        only_left,
        only_right,
    }
}

/// Mutual reduction: every member of each chain pseudo-reduces to zero
/// modulo the other.
pub fn mutually_reduce(sp: &Space, a: &Chain, b: &Chain) -> bool {
    a.members.iter().all(|p| prem(sp, p, b).remainder.is_zero())
        && b.members.iter().all(|p| prem(sp, p, a).remainder.is_zero())
}

/// Both lists form chains under `rank` and reduce each other to zero.
pub fn chains_agree(sp: &Space, rank: &Rank, a: &[Poly], b: &[Poly]) -> bool {
    match (Chain::new(sp, rank, a.to_vec()), Chain::new(sp, rank, b.to_vec())) {
        (Ok(a), Ok(b)) => mutually_reduce(sp, &a, &b),
        _ => false,
    }
}

/// Normalized members of a printed system, for comparisons.
pub fn normalized(sp: &Space, rank: &Rank, polys: &[Poly]) -> Vec<Poly> {
    polys.iter().map(|p| content_free(sp, rank, p)).collect()
}

/// Computed objects of one fixture problem.
pub struct Pipeline {
    pub problem: Problem,
    pub dprime: DeterminingSystem,
    pub d: DeterminingSystem,
    pub bridge: BridgeResult,
}

impl Pipeline {
    pub fn run(problem: Problem) -> Result<Pipeline, Error> {
        let pde = problem.pde();
        let rank = problem.rank();
        let dprime = determining(&pde, &rank, GeneratorKind::Classical)?;
        let d = determining(&pde, &rank, GeneratorKind::Nonclassical)?;
        let bridge = bridge_from(&pde, &rank, &dprime, &d)?;
        Ok(Pipeline {
            problem,
            dprime,
            d,
            bridge,
        })
    }

    pub fn space(&self) -> &Space {
        &self.bridge.space
    }

    /// The computed system a printed block of the given name stands for.
    pub fn computed_for(&self, block: &str) -> Option<Vec<Poly>> {
        let base = block.strip_suffix("-fixed").unwrap_or(block);
        match base {
            "Dprime" => Some(self.dprime.polys.clone()),
            "D" => Some(self.d.polys.clone()),
            "Dpp" => Some(self.bridge.dpp.members.clone()),
            "C" => Some(self.bridge.c.members.clone()),
            "AS" => self.extension("Q").ok().map(|c| c.members),
            _ => None,
        }
    }

    /// `wu_chain(D ∪ Q)` for a printed subset `Q` of `C`.
    pub fn extension(&self, subset: &str) -> Result<Chain, Error> {
        let q = self
            .problem
            .system(subset)
            .ok_or_else(|| Error::Name(subset.to_string()))?;
        let mut all = self.d.polys.clone();
        all.extend(q.polys());
        let opts = WuOptions {
            strip_monomials: true,
            integrability: true,
            ..WuOptions::default()
        };
        wu_chain(self.space(), &all, &self.bridge.rank, &opts)
    }

    /// Named system for `D`, `Dprime`, `C`, `Dpp` or a printed block.
    pub fn system(&self, name: &str) -> Option<NamedSystem> {
        let comp = |n: &str, kind, polys: &[Poly]| Some(NamedSystem::new(n, kind, polys));
        match name {
            "D" => comp("D", GeneratorKind::Nonclassical, &self.d.polys),
            "Dprime" => comp("Dprime", GeneratorKind::Classical, &self.dprime.polys),
            "C" => comp("C", GeneratorKind::Nonclassical, &self.bridge.c.members),
            "Cprime" => comp("Cprime", GeneratorKind::Classical, &self.bridge.cprime.members),
            "Dpp" => comp("Dpp", GeneratorKind::Classical, &self.bridge.dpp.members),
            _ => self.problem.system(name).map(NamedSystem::from_block),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FixtureReport {
    pub name: String,
    /// `pass`, `fail` or `expected-discrepancy`.
    pub verdict: String,
    pub residuals: Vec<String>,
    pub runtime_ms: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorpusReport {
    pub fixtures: Vec<FixtureReport>,
    pub passed: usize,
    pub failed: usize,
    pub discrepancies: usize,
}

impl CorpusReport {
    pub fn ok(&self) -> bool {
        self.failed == 0
    }
}

fn fixture(name: String, t0: Instant, outcome: Result<(bool, bool, Vec<String>), Error>) -> FixtureReport {
    let (verdict, residuals) = match outcome {
        Ok((true, false, r)) => ("pass", r),
        Ok((true, true, r)) => (DISCREPANCY, r),
        Ok((false, _, r)) => ("fail", r),
        Err(e) => ("fail", vec![format!("{}: {e}", e.kind())]),
    };
    FixtureReport {
        name,
        verdict: verdict.to_string(),
        residuals,
        runtime_ms: t0.elapsed().as_secs_f64() * 1e3,
    }
}

/// Which systems a candidate of the corpus must satisfy.
fn home_systems(p: &Pipeline, rc: &ResolvedCandidate) -> Vec<&'static str> {
    match rc.kind {
        GeneratorKind::Classical => vec!["Dprime"],
        GeneratorKind::Nonclassical => {
            let mut v = vec!["D"];
            if p.problem.system("AS-fixed").is_some() {
                v.push("Q");
                v.push("AS-fixed");
            }
            v
        }
    }
}

/// Runs every fixture of one problem: printed systems against computed
/// ones, candidate membership, triviality verdicts and the inclusion audit.
pub fn run_problem(name: &str, problem: Problem) -> Vec<FixtureReport> {
    let mut out = Vec::new();
    let t0 = Instant::now();
    let p = match Pipeline::run(problem) {
        Ok(p) => p,
        Err(e) => {
            out.push(fixture(format!("{name}/pipeline"), t0, Err(e)));
            return out;
        }
    };
    out.push(fixture(format!("{name}/pipeline"), t0, Ok((true, false, vec![]))));
    let sp = p.space().clone();
    let rank = p.bridge.rank.clone();

    for b in &p.problem.systems {
        let t0 = Instant::now();
        let disc = is_discrepancy(&b.notes);
        let outcome = match p.computed_for(&b.name) {
            None => continue,
            Some(comp) => {
                let printed = normalized(&sp, &rank, &b.polys());
                let comp = normalized(&sp, &rank, &comp);
                let mut c = compare_systems(&sp, &printed, &comp);
                if !c.equal && b.name.starts_with("AS") {
                    // chains of the same system need not agree member by member
                    if chains_agree(&sp, &rank, &printed, &comp) {
                        c = Comparison {
                            equal: true,
                            ..Comparison::default()
                        };
                    }
                }
                let mut res: Vec<String> = c.only_left.iter().map(|s| format!("printed only: {s}")).collect();
                res.extend(c.only_right.iter().map(|s| format!("computed only: {s}")));
                Ok((c.equal != disc, disc, res))
            }
        };
        out.push(fixture(format!("{name}/system/{}", b.name), t0, outcome));
    }

    let mut audit_input = Vec::new();
    for c in &p.problem.candidates {
        let disc = is_discrepancy(&c.notes);
        let t0 = Instant::now();
        let rc = match p.problem.resolve(c) {
            Ok(rc) => rc,
            Err(e) => {
                out.push(fixture(format!("{name}/candidate/{}", c.name), t0, Err(e)));
                continue;
            }
        };
        let mut all_zero = true;
        let mut res = Vec::new();
        let mut err = None;
        for s in home_systems(&p, &rc) {
            let sys = p.system(s).expect("home system");
            match check_membership(&p.problem, &rc, &c.name, &sys) {
                Ok(r) => {
                    all_zero &= r.member;
                    for x in r.residuals.iter().filter(|x| !x.zero) {
                        res.push(format!("{s} {}: {}", x.label, x.residual));
                    }
                }
                Err(e) => err = Some(e),
            }
        }
        let outcome = match err {
            Some(e) => Err(e),
            None => Ok((all_zero != disc, disc, res)),
        };
        out.push(fixture(format!("{name}/candidate/{}", c.name), t0, outcome));
        if !disc {
            audit_input.push((c.name.clone(), rc));
        }
    }

    let t0 = Instant::now();
    let outcome = inclusion_audit(&p.problem, &p.bridge, &audit_input).map(|entries: Vec<AuditEntry>| {
        let lines = entries.iter().map(|e| e.summary()).collect();
        (true, false, lines)
    });
    out.push(fixture(format!("{name}/inclusion-audit"), t0, outcome));

    for (cname, rc) in &audit_input {
        if rc.kind != GeneratorKind::Nonclassical {
            continue;
        }
        let t0 = Instant::now();
        let v = triviality_test(&p.problem, &p.bridge, rc, None);
        // verdicts are reported, only errors fail
        let outcome = v.map(|v| {
            let line = format!("{}: {}", v.verdict.name(), v.witness.clone().unwrap_or_default());
            (true, false, vec![line])
        });
        out.push(fixture(format!("{name}/trivial/{cname}"), t0, outcome));
    }
    out
}

/// Cases per randomized suite in [`run_corpus`].
pub const PROPERTY_CASES: usize = 1000;

/// Runs the whole shipped corpus and the randomized suites.
pub fn run_corpus() -> CorpusReport {
    let mut fixtures = Vec::new();
    for (name, src) in CORPUS {
        let t0 = Instant::now();
        match parse_problem(src) {
            Ok(pr) => fixtures.extend(run_problem(name, pr)),
            Err(e) => fixtures.push(fixture(format!("{name}/parse"), t0, Err(e))),
        }
    }
    let t0 = Instant::now();
    for r in crate::properties::run_suites(crate::properties::seed_from_env(), PROPERTY_CASES) {
        let line = format!("{} of {} cases exercised", r.exercised, r.cases);
        let outcome = match r.failure {
            None => Ok((true, false, vec![line])),
            Some(f) => Ok((false, false, vec![f])),
        };
        fixtures.push(fixture(format!("properties/{}", r.name), t0, outcome));
    }
    fixtures.sort_by(|a, b| a.name.cmp(&b.name));
    let count = |v: &str| fixtures.iter().filter(|f| f.verdict == v).count();
    CorpusReport {
        passed: count("pass"),
        failed: count("fail"),
        discrepancies: count(DISCREPANCY),
        fixtures,
    }
}
