//! Inputs shared by the benchmarks.

use symchain::diffalg::{prem, Chain};
use symchain::harness::{corpus_problem, Pipeline, CORPUS};
use symchain::{Poly, Problem, ReductionCertificate, Space};

/// Names of the shipped corpus problems.
pub fn problem_names() -> Vec<&'static str> {
    CORPUS.iter().map(|(n, _)| *n).collect()
}

pub fn problem(name: &str) -> Problem {
    corpus_problem(name).expect("corpus problem parses")
}

pub fn pipeline(name: &str) -> Pipeline {
    Pipeline::run(problem(name)).expect("corpus pipeline runs")
}

/// The members of D with the chain C they reduce against.
pub fn reduction_input(p: &Pipeline) -> (Space, Vec<Poly>, Chain) {
    (p.space().clone(), p.d.polys.clone(), p.bridge.c.clone())
}

pub fn reduce_all(sp: &Space, polys: &[Poly], chain: &Chain) -> Vec<ReductionCertificate> {
    polys.iter().map(|f| prem(sp, f, chain)).collect()
}
