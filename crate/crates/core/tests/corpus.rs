use symchain::bridge::bridge_from;
use symchain::expr::{q, Mono};
use symchain::harness::{corpus_problem, run_corpus, CORPUS, DISCREPANCY};
use symchain::text::{parse_problem, print_problem};
use symchain::{Error, Poly};

#[test]
fn corpus_runs_clean() {
    let r = run_corpus();
    for f in r.fixtures.iter().filter(|f| f.verdict == "fail") {
        println!("{}: {:?}", f.name, f.residuals);
    }
    assert!(r.ok(), "{} fixtures failed", r.failed);
    assert!(r.passed > 40);
    assert!(r.discrepancies > 0);
    assert!(r.fixtures.iter().any(|f| f.name == "properties/wu-postcondition" && f.verdict == "pass"));
    // every discrepancy fixture comes from a note in the files
    let notes: usize = CORPUS.iter().map(|(_, s)| s.matches(DISCREPANCY).count()).sum();
    assert_eq!(r.discrepancies, notes);
}

#[test]
fn sign_flip_in_d_breaks_the_identities() {
    let p = corpus_problem("burgers_huxley").unwrap();
    let pde = p.pde();
    let rank = p.rank();
    let dprime = symchain::symgen::determining(&pde, &rank, symchain::GeneratorKind::Classical).unwrap();
    let mut d = symchain::symgen::determining(&pde, &rank, symchain::GeneratorKind::Nonclassical).unwrap();
    assert!(bridge_from(&pde, &rank, &dprime, &d).is_ok());

    // negate one quadratic term, such as 2*xi*xi_u
    let (i, m, c): (usize, Mono, symchain::Q) = d
        .polys
        .iter()
        .enumerate()
        .find_map(|(i, p)| {
            p.terms()
                .find(|(m, _)| m.factors().len() == 2 && m.factors().iter().all(|(a, _)| a.order() <= 1))
                .map(|(m, c)| (i, m.clone(), c.clone()))
        })
        .expect("a quadratic term");
    d.polys[i] = &d.polys[i] - &Poly::term(c * q(2), m);
    match bridge_from(&pde, &rank, &dprime, &d) {
        Err(Error::NonzeroRemainder { index, .. }) => assert_eq!(index, i),
        other => panic!("expected a nonzero remainder, got {:?}", other.map(|_| ())),
    }
}

#[test]
fn problems_survive_print_and_parse() {
    for (name, src) in CORPUS {
        let a = parse_problem(src).unwrap();
        let printed = print_problem(&a);
        let b = parse_problem(&printed).unwrap_or_else(|e| panic!("{name}: {e}\n{printed}"));
        assert_eq!(print_problem(&b), printed, "{name}");
        assert_eq!(a.systems.len(), b.systems.len());
        for (x, y) in a.systems.iter().zip(&b.systems) {
            assert_eq!(x.polys(), y.polys(), "{name}/{}", x.name);
        }
        assert_eq!(a.candidates.len(), b.candidates.len());
    }
}
