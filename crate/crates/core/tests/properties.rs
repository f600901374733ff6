//! Randomized invariants of the kernel and the reduction engine.
//!
//! Every suite runs 1000 cases from a fixed seed; set `SYMCHAIN_SEED` to
//! explore other streams.

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use symchain::diffalg::{basic_set, prem, wu_chain, Chain, Rank, WuOptions};
use symchain::expr::{q, qf, Arg, Atom, Closed, FuncRole, Mono, Poly, Relation, Space};
use symchain::Error;
use std::sync::atomic::{AtomicUsize, Ordering};

const CASES: u32 = 1000;

fn runner() -> TestRunner {
    let seed: u64 = std::env::var("SYMCHAIN_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(20_240_611);
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    let config = Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &bytes))
}

/// t, x, u; parameters sigma and r2 (r2^2 = 2); unknowns xi, eta of (t, x, u).
fn space() -> (Space, Rank) {
    let mut s = Space::default();
    for v in ["t", "x", "u"] {
        s.add_var(v);
    }
    s.add_param("sigma", None);
    s.add_param("r2", Relation::from_coeffs(&[q(-2), q(0), q(1)]));
    let args = vec![Arg::Var(0), Arg::Var(1), Arg::Var(2)];
    s.add_func("xi", args.clone(), FuncRole::Unknown);
    s.add_func("eta", args, FuncRole::Unknown);
    (s, Rank::new(vec![0, 1, 2], vec![0, 1]))
}

fn jets() -> Vec<Atom> {
    let mut v = Vec::new();
    for f in 0..2 {
        v.push(Atom::jet(f, &[0, 0, 0]));
        for k in 0..3 {
            let mut a = [0u8; 3];
            a[k] = 1;
            v.push(Atom::jet(f, &a));
        }
        v.push(Atom::jet(f, &[0, 2, 0]));
        v.push(Atom::jet(f, &[0, 1, 1]));
        v.push(Atom::jet(f, &[0, 0, 2]));
    }
    v
}

fn base_atoms(sp: &Space) -> Vec<Atom> {
    let x = Poly::atom(Atom::Var(1));
    vec![
        Atom::Var(0),
        Atom::Var(1),
        Atom::Var(2),
        Atom::Param(0),
        Atom::Param(1),
        match sp.fun(Closed::Tanh, x).terms().next() {
            Some((m, _)) => m.factors()[0].0.clone(),
            None => unreachable!(),
        },
    ]
}

/// Term: numerator, denominator, factors as (pool index, exponent).
type TermSpec = (i64, i64, Vec<(usize, u32)>);

fn term_spec(max_factors: usize, max_exp: u32) -> impl Strategy<Value = TermSpec> {
    (
        -5i64..=5,
        1i64..=3,
        prop::collection::vec((0usize..64, 1u32..=max_exp), 0..=max_factors),
    )
}

fn poly_spec() -> impl Strategy<Value = Vec<TermSpec>> {
    prop::collection::vec(term_spec(3, 2), 1..=4)
}

/// Raw (unnormalized) polynomial over the pool.
fn build_raw(pool: &[Atom], spec: &[TermSpec]) -> Poly {
    let mut p = Poly::zero();
    for (n, d, fs) in spec {
        let mut m = Mono::one();
        for (i, e) in fs {
            m = m.mul(&Mono::atom(pool[i % pool.len()].clone(), *e));
        }
        p = p + Poly::term(qf(*n, *d), m);
    }
    p
}

fn build(sp: &Space, pool: &[Atom], spec: &[TermSpec]) -> Poly {
    sp.normalize(&build_raw(pool, spec))
}

fn full_pool(sp: &Space) -> Vec<Atom> {
    let mut p = base_atoms(sp);
    p.extend(jets());
    p
}

/// Term of a linear polynomial: a `TermSpec` over the coordinates times a jet.
type LinearSpec = (i64, i64, Vec<(usize, u32)>, usize);

/// Linear in the jets, coefficients in the coordinates.
fn build_linear(sp: &Space, spec: &[LinearSpec]) -> Poly {
    let base = [Atom::Var(0), Atom::Var(1), Atom::Var(2)];
    let js = jets();
    let mut p = Poly::zero();
    for (n, d, fs, j) in spec {
        let mut m = Mono::atom(js[j % js.len()].clone(), 1);
        for (i, e) in fs {
            m = m.mul(&Mono::atom(base[i % base.len()].clone(), *e));
        }
        p = p + Poly::term(qf(*n, *d), m);
    }
    sp.normalize(&p)
}

fn chain_of(sp: &Space, rank: &Rank, polys: &[Poly]) -> Chain {
    Chain::from_sorted(rank, basic_set(sp, rank, polys))
}

fn system_spec() -> impl Strategy<Value = (Vec<TermSpec>, Vec<Vec<TermSpec>>)> {
    (poly_spec(), prop::collection::vec(prop::collection::vec(term_spec(2, 1), 1..=3), 1..=3))
}

#[test]
fn certificate_identity() {
    let (sp, rank) = space();
    let pool = full_pool(&sp);
    let reduced = AtomicUsize::new(0);
    runner()
        .run(&system_spec(), |(f, cs)| {
            let f = build(&sp, &pool, &f);
            let cs: Vec<Poly> = cs.iter().map(|c| build(&sp, &pool, c)).collect();
            let chain = chain_of(&sp, &rank, &cs);
            let cert = prem(&sp, &f, &chain);
            if !cert.terms.is_empty() {
                reduced.fetch_add(1, Ordering::Relaxed);
            }
            prop_assert!(cert.defect(&sp, &chain).is_zero());
            Ok(())
        })
        .unwrap();
    // the generator must actually exercise reduction
    assert!(reduced.into_inner() > CASES as usize / 5);
}

#[test]
fn remainder_is_reduced() {
    let (sp, rank) = space();
    let pool = full_pool(&sp);
    runner()
        .run(&system_spec(), |(f, cs)| {
            let f = build(&sp, &pool, &f);
            let cs: Vec<Poly> = cs.iter().map(|c| build(&sp, &pool, c)).collect();
            let chain = chain_of(&sp, &rank, &cs);
            let r = prem(&sp, &f, &chain).remainder;
            for g in &chain.members {
                prop_assert!(rank.is_reduced(&sp, &r, g).unwrap());
            }
            Ok(())
        })
        .unwrap();
}

#[test]
fn prem_is_idempotent() {
    let (sp, rank) = space();
    let pool = full_pool(&sp);
    runner()
        .run(&system_spec(), |(f, cs)| {
            let f = build(&sp, &pool, &f);
            let cs: Vec<Poly> = cs.iter().map(|c| build(&sp, &pool, c)).collect();
            let chain = chain_of(&sp, &rank, &cs);
            let r = prem(&sp, &f, &chain).remainder;
            let again = prem(&sp, &r, &chain);
            prop_assert_eq!(&again.remainder, &r);
            prop_assert_eq!(again.is, Poly::one());
            Ok(())
        })
        .unwrap();
}

#[test]
fn total_derivatives_commute() {
    let (sp, _) = space();
    let pool = full_pool(&sp);
    runner()
        .run(&(poly_spec(), 0usize..3, 0usize..3), |(p, a, b)| {
            let p = build(&sp, &pool, &p);
            let ab = sp.total_derivative(&sp.total_derivative(&p, a), b);
            let ba = sp.total_derivative(&sp.total_derivative(&p, b), a);
            prop_assert_eq!(ab, ba);
            Ok(())
        })
        .unwrap();
}

#[test]
fn leibniz_rule() {
    let (sp, _) = space();
    let pool = full_pool(&sp);
    runner()
        .run(&(poly_spec(), poly_spec(), 0usize..3), |(p, g, c)| {
            let p = build(&sp, &pool, &p);
            let g = build(&sp, &pool, &g);
            let lhs = sp.total_derivative(&sp.mul(&p, &g), c);
            let rhs = sp.mul(&sp.total_derivative(&p, c), &g) + sp.mul(&p, &sp.total_derivative(&g, c));
            prop_assert_eq!(lhs, rhs);
            Ok(())
        })
        .unwrap();
}

#[test]
fn normalize_is_idempotent() {
    let (sp, _) = space();
    let pool = full_pool(&sp);
    let exp_x = sp.fun(Closed::Exp, Poly::atom(Atom::Var(1)));
    let exp_u = sp.fun(Closed::Exp, Poly::atom(Atom::Var(2)));
    let sech = sp.fun(Closed::Sech, Poly::atom(Atom::Var(0)));
    let mut extra = pool.clone();
    for e in [exp_x, exp_u, sech] {
        extra.push(e.terms().next().unwrap().0.factors()[0].0.clone());
    }
    let strat = prop::collection::vec(term_spec(4, 4), 1..=4);
    runner()
        .run(&strat, |spec| {
            let raw = build_raw(&extra, &spec);
            let once = sp.normalize(&raw);
            prop_assert_eq!(sp.normalize(&once), once);
            Ok(())
        })
        .unwrap();
}

#[test]
fn wu_chain_reduces_its_input() {
    let (sp, rank) = space();
    let term = (-4i64..=4, 1i64..=2, prop::collection::vec((0usize..12, 1u32..=1), 0..=1), 0usize..14);
    let strat = prop::collection::vec(prop::collection::vec(term, 1..=3), 1..=3);
    let long = AtomicUsize::new(0);
    runner()
        .run(&strat, |sys| {
            let polys: Vec<Poly> = sys.iter().map(|s| build_linear(&sp, s)).collect();
            match wu_chain(&sp, &polys, &rank, &WuOptions::default()) {
                Ok(chain) => {
                    if chain.len() > 1 {
                        long.fetch_add(1, Ordering::Relaxed);
                    }
                    for p in &polys {
                        prop_assert!(prem(&sp, p, &chain).remainder.is_zero());
                    }
                }
                // an input with a nonzero base-field consequence has no chain
                Err(Error::InconsistentSystem(_)) => {}
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
            Ok(())
        })
        .unwrap();
    assert!(long.into_inner() > CASES as usize / 5);
}
