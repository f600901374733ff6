//! One check per acceptance criterion. Each test prints a single
//! `criterion N: PASS` or `criterion N: FAIL` line followed by details.
//!
//! Printed fixtures that carry a known typo are compared through their
//! `-fixed` block; the printed form must then be shown to differ, and the
//! substitution is listed under the verdict line.

use std::collections::BTreeMap;
use std::io::Write;
use symchain::bridge::{inclusion_audit, triviality_test};
use symchain::expr::Idx;
use symchain::harness::{
    chains_agree, check_membership, compare_systems, corpus_problem, normalized, Pipeline, CORPUS,
};
use symchain::properties::{run_suites, seed_from_env};
use symchain::text::print_poly;
use symchain::{Poly, Problem, Verdict};

#[derive(Default)]
struct Report {
    ok: bool,
    lines: Vec<String>,
}

impl Report {
    fn new() -> Report {
        Report {
            ok: true,
            lines: Vec::new(),
        }
    }

    fn check(&mut self, cond: bool, what: impl Into<String>) -> bool {
        let what = what.into();
        if cond {
            self.lines.push(format!("  ok: {what}"));
        } else {
            self.ok = false;
            self.lines.push(format!("  failed: {what}"));
        }
        cond
    }

    fn note(&mut self, what: impl Into<String>) {
        self.lines.push(format!("  note: {}", what.into()));
    }

    /// Written past the test harness capture so the report shows without
    /// `--nocapture`; one write keeps parallel tests from interleaving.
    fn finish(self, n: u32) -> bool {
        let mut out = format!("\ncriterion {n}: {}\n", if self.ok { "PASS" } else { "FAIL" });
        for l in &self.lines {
            out.push_str(l);
            out.push('\n');
        }
        match std::fs::OpenOptions::new().write(true).open("/dev/stderr") {
            Ok(mut f) => {
                let _ = f.write_all(out.as_bytes());
            }
            Err(_) => eprint!("{out}"),
        }
        self.ok
    }
}

fn pipeline(name: &str) -> Pipeline {
    Pipeline::run(corpus_problem(name).expect("corpus parses")).expect("pipeline runs")
}

fn block(p: &Problem, name: &str) -> Vec<Poly> {
    p.system(name).unwrap_or_else(|| panic!("block {name}")).polys()
}

fn same(pl: &Pipeline, a: &[Poly], b: &[Poly]) -> bool {
    let (sp, rank) = (pl.space(), &pl.bridge.rank);
    compare_systems(sp, &normalized(sp, rank, a), &normalized(sp, rank, b)).equal
}

/// Computed system against a printed block, through its `-fixed` variant
/// when the printed one carries a typo.
fn against_printed(r: &mut Report, pl: &Pipeline, name: &str, computed: &[Poly]) {
    let printed = block(&pl.problem, name);
    if same(pl, &printed, computed) {
        r.check(true, format!("{name} matches the printed block ({} members)", computed.len()));
        return;
    }
    let fixed = format!("{name}-fixed");
    match pl.problem.system(&fixed) {
        Some(b) => {
            r.check(
                same(pl, &b.polys(), computed),
                format!("{name} matches {fixed} ({} members)", computed.len()),
            );
            r.note(format!("printed {name} differs from the computed one; typo substitution {name} -> {fixed}"));
        }
        None => {
            r.check(false, format!("{name} matches the printed block"));
        }
    }
}

fn member(pl: &Pipeline, cand: &str, sys: &str) -> Option<(bool, Vec<String>)> {
    let c = pl.problem.candidate(cand)?;
    let rc = pl.problem.resolve(c).ok()?;
    let s = pl.system(sys)?;
    let rep = check_membership(&pl.problem, &rc, cand, &s).ok()?;
    let nz = rep
        .residuals
        .iter()
        .filter(|x| !x.zero)
        .map(|x| format!("{}: {}", x.label, x.residual))
        .collect();
    Some((rep.member, nz))
}

fn check_member(r: &mut Report, pl: &Pipeline, cand: &str, sys: &str, want: bool) -> bool {
    match member(pl, cand, sys) {
        Some((m, nz)) => {
            let ok = r.check(m == want, format!("{cand} {} Z({sys})", if want { "in" } else { "not in" }));
            if !m && (!ok || !want) {
                for l in nz.iter().take(2) {
                    r.note(format!("{cand} residual {}", l.chars().take(160).collect::<String>()));
                }
            }
            ok
        }
        None => r.check(false, format!("{cand} against {sys} evaluates")),
    }
}

fn verdict(pl: &Pipeline, cand: &str) -> Option<(Verdict, Option<String>)> {
    let rc = pl.problem.resolve(pl.problem.candidate(cand)?).ok()?;
    let v = triviality_test(&pl.problem, &pl.bridge, &rc, None).ok()?;
    Some((v.verdict, v.witness))
}

fn is_nonzero_constant(p: &Poly) -> bool {
    p.as_constant().is_some_and(|c| c != symchain::expr::q(0))
}

fn certificates_close(r: &mut Report, pl: &Pipeline) {
    let sp = pl.space();
    let all = pl.bridge.certificates.iter().all(|c| c.remainder.is_zero() && c.verify(sp, &pl.bridge.c));
    r.check(
        all && pl.bridge.certificates.len() == pl.d.polys.len(),
        format!("prem(p_i, C) = 0 with a valid certificate for all {} members of D", pl.d.polys.len()),
    );
    let doc = symchain::doc::bridge_doc(&pl.bridge);
    for id in doc["identities"].as_array().into_iter().flatten() {
        r.note(format!("computed order: {}", id["identity"].as_str().unwrap_or_default()));
    }
}

fn index_of(polys: &[Poly], p: &Poly) -> Option<(usize, symchain::Q)> {
    polys.iter().enumerate().find_map(|(i, q)| q.proportional(p).map(|c| (i, c)))
}

#[test]
fn criterion_1_determining_systems() {
    let pl = pipeline("burgers_huxley");
    let mut r = Report::new();
    r.check(pl.d.polys.len() == 4, format!("nonclassical system has {} members", pl.d.polys.len()));
    r.check(pl.dprime.polys.len() == 7, format!("classical system has {} members", pl.dprime.polys.len()));
    against_printed(&mut r, &pl, "D", &pl.d.polys);
    against_printed(&mut r, &pl, "Dprime", &pl.dprime.polys);
    assert!(r.finish(1));
}

#[test]
fn criterion_2_bridge() {
    let pl = pipeline("burgers_huxley");
    let sp = pl.space();
    let b = &pl.bridge;
    let mut r = Report::new();
    r.check(same(&pl, &b.cprime.members, &pl.dprime.polys), "wu_chain(Dprime) is Dprime itself");
    against_printed(&mut r, &pl, "Dpp", &b.dpp.members);
    r.check(is_nonzero_constant(&b.is_cprime), format!("IS(Cprime) = {}", print_poly(sp, &b.is_cprime)));
    against_printed(&mut r, &pl, "C", &b.c.members);
    r.check(is_nonzero_constant(&b.is_c), format!("IS(C) = {}", print_poly(sp, &b.is_c)));
    assert!(r.finish(2));
}

#[test]
fn criterion_3_identities() {
    let pl = pipeline("burgers_huxley");
    let sp = pl.space();
    let mut r = Report::new();
    certificates_close(&mut r, &pl);

    let d = block(&pl.problem, "D-fixed");
    let c = block(&pl.problem, "C-fixed");
    let found = (
        index_of(&pl.d.polys, &d[1]),
        index_of(&pl.bridge.c.members, &c[0]),
        index_of(&pl.bridge.c.members, &c[1]),
    );
    let (Some((i, lam)), Some((j1, mu1)), Some((j2, mu2))) = found else {
        r.check(false, "p2, q1 and q2 located among the computed systems");
        assert!(r.finish(3));
        return;
    };
    let cert = &pl.bridge.certificates[i];
    let is = cert.is.as_constant();
    r.check(is.is_some(), format!("IS of the p2 certificate is constant ({})", print_poly(sp, &cert.is)));
    // IS*lam*p2 = sum ops_j (mu_j q_j), so p2 = sum ops_j mu_j / (IS*lam) q_j
    let scale = |j: usize, mu: &symchain::Q| -> BTreeMap<Idx, Poly> {
        let k = mu / (is.clone().unwrap_or_else(|| symchain::expr::q(1)) * &lam);
        cert.operator(j).iter().map(|(b, p)| (b.clone(), p.scale(&k))).filter(|(_, p)| !p.is_zero()).collect()
    };
    let xi = sp.jet("xi", &[]).expect("xi");
    let id: Idx = Idx::from_slice(&[0, 0, 0]);
    let dx: Idx = Idx::from_slice(&[0, 1, 0]);
    let want1: BTreeMap<Idx, Poly> = [(id.clone(), xi.scale(&symchain::expr::q(2))), (dx, Poly::constant(symchain::expr::q(-2)))].into();
    let want2: BTreeMap<Idx, Poly> = [(id, Poly::one())].into();
    r.check(scale(j1, &mu1) == want1, "operator on q1 is 2*(xi - D_x)");
    r.check(scale(j2, &mu2) == want2, "operator on q2 is 1");
    r.check(cert.terms.len() == 2, format!("p2 uses exactly q1 and q2 ({} members)", cert.terms.len()));
    r.note("printed p3 identity carries -3F; the certificate has +3F (same sign flip as printed p3, see D-fixed)");
    assert!(r.finish(3));
}

#[test]
fn criterion_4_candidates() {
    let pl = pipeline("burgers_huxley");
    let mut r = Report::new();

    // (i) the generator as printed does not solve the stated equation's system
    let i_ok = check_member(&mut r, &pl, "example1-nonclassical", "D", true);
    check_member(&mut r, &pl, "example1-nonclassical", "C", false);
    match verdict(&pl, "example1-nonclassical") {
        Some((v, _)) => {
            r.check(v == Verdict::Nontrivial, format!("example1-nonclassical triviality verdict {}", v.name()));
        }
        None => {
            r.check(false, "example1-nonclassical triviality verdict");
        }
    }
    r.note("(i) the printed generator solves the system of u_t = u_xx - u*(u-1)*(u-sigma); no sign correction makes a real generator of this form solve the stated one");
    r.note("the complex generator example1-complex is checked instead:");
    let mut alt = Report::new();
    check_member(&mut alt, &pl, "example1-complex", "D", true);
    check_member(&mut alt, &pl, "example1-complex", "C", false);
    for l in alt.lines {
        r.lines.push(format!("  {l}"));
    }

    // (ii) and (iii)
    let mut rest = Report::new();
    check_member(&mut rest, &pl, "example1-tan", "C", true);
    check_member(&mut rest, &pl, "example1-tan", "D", true);
    let v = verdict(&pl, "example1-tan");
    rest.check(
        matches!(v, Some((Verdict::Nontrivial, _))),
        format!("example1-tan is not a classical image ({:?})", v.map(|x| x.0.name())),
    );
    for c in ["time-translation", "space-translation"] {
        check_member(&mut rest, &pl, c, "Dprime", true);
    }
    let problem = &pl.problem;
    let cands: Vec<_> = ["time-translation", "space-translation", "example1-tan"]
        .iter()
        .map(|n| (n.to_string(), problem.resolve(problem.candidate(n).unwrap()).unwrap()))
        .collect();
    match inclusion_audit(problem, &pl.bridge, &cands) {
        Ok(entries) => {
            let tt = &entries[0];
            rest.check(
                tt.cprime_image == Some(true) && tt.in_c == Some(true) && tt.in_d == Some(true),
                "time translation is in Z(C) and Z(D) through the map",
            );
            rest.check(true, "inclusion audit passes");
            for e in &entries {
                rest.note(e.summary());
            }
        }
        Err(e) => {
            rest.check(false, format!("inclusion audit: {e}"));
        }
    }
    let rest_ok = rest.ok;
    r.ok &= rest_ok;
    r.lines.extend(rest.lines);
    r.finish(4);
    // the failure is the known one in (i); anything else is a regression
    assert!(rest_ok, "criterion 4 (ii)/(iii) regressed");
    assert!(!i_ok, "criterion 4 (i) now passes; update the ledger");
}

#[test]
fn criterion_5_generalized_burgers() {
    let pl = pipeline("generalized_burgers");
    let sp = pl.space();
    let mut r = Report::new();
    against_printed(&mut r, &pl, "Dprime", &pl.dprime.polys);
    against_printed(&mut r, &pl, "D", &pl.d.polys);
    against_printed(&mut r, &pl, "Dpp", &pl.bridge.dpp.members);
    against_printed(&mut r, &pl, "C", &pl.bridge.c.members);
    r.check(pl.d.polys.len() == 4, format!("{} identities", pl.d.polys.len()));
    certificates_close(&mut r, &pl);
    r.check(is_nonzero_constant(&pl.bridge.is_c), format!("IS(C) = {}", print_poly(sp, &pl.bridge.is_c)));
    r.note("IS(C) is printed as -2: the printed q1 has the opposite sign");
    for c in [
        "family22",
        "family23",
        "family24",
        "family30-tan",
        "family30-tanh",
        "family30-rational",
        "family34",
        "family35",
        "family36",
    ] {
        check_member(&mut r, &pl, c, "D", true);
    }
    for (printed, fixed) in [
        ("family22-printed", "family22"),
        ("family24-printed", "family24"),
        ("family30-tanh-printed", "family30-tan, family30-tanh"),
    ] {
        check_member(&mut r, &pl, printed, "D", false);
        r.note(format!("typo substitution {printed} -> {fixed}"));
    }
    match verdict(&pl, "family22") {
        Some((v, w)) => {
            r.check(
                v == Verdict::Nontrivial && w.as_deref() == Some("a*tau"),
                format!("family22 is {} with witness {}", v.name(), w.unwrap_or_default()),
            );
        }
        None => {
            r.check(false, "family22 triviality verdict");
        }
    }
    assert!(r.finish(5));
}

#[test]
fn criterion_6_kdv_system() {
    let pl = pipeline("kdv_system");
    let sp = pl.space();
    let rank = &pl.bridge.rank;
    let mut r = Report::new();
    against_printed(&mut r, &pl, "Dprime", &pl.dprime.polys);
    r.note(format!("the printed classical system has {} members", block(&pl.problem, "Dprime").len()));
    r.check(pl.d.polys.len() == 11, format!("nonclassical system has {} members", pl.d.polys.len()));
    against_printed(&mut r, &pl, "C", &pl.bridge.c.members);
    match pl.extension("Q") {
        Ok(chain) => {
            r.check(chain.len() == 12, format!("wu_chain(D + Q) has {} members", chain.len()));
            let fixed = block(&pl.problem, "AS-fixed");
            let printed = block(&pl.problem, "AS");
            r.check(
                chains_agree(sp, rank, &fixed, &chain.members),
                "wu_chain(D + Q) and AS-fixed reduce each other to zero",
            );
            r.check(
                !chains_agree(sp, rank, &printed, &chain.members),
                "the printed AS does not",
            );
            r.note("typo substitution AS -> AS-fixed (member 10 gains the factor eta)");
        }
        Err(e) => {
            r.check(false, format!("wu_chain(D + Q): {e}"));
        }
    }
    for c in ["family-tanh", "family-coth", "family-exp"] {
        for s in ["D", "Q", "AS-fixed"] {
            check_member(&mut r, &pl, c, s, true);
        }
        check_member(&mut r, &pl, c, "Dprime", false);
    }
    assert!(r.finish(6));
}

#[test]
fn criterion_7_property_suites() {
    let seed = seed_from_env();
    let mut r = Report::new();
    for s in run_suites(seed, 1000) {
        r.check(
            s.failure.is_none() && s.cases >= 1000,
            format!("{}: {} cases, {} exercised{}", s.name, s.cases, s.exercised, s.failure.map(|f| format!(", {f}")).unwrap_or_default()),
        );
    }
    r.note(format!("seed {seed}"));
    assert!(r.finish(7));
}

#[test]
fn criterion_8_inclusion_audit() {
    let mut r = Report::new();
    for (name, _) in CORPUS {
        let pl = pipeline(name);
        let problem = &pl.problem;
        let cands: Vec<_> = problem
            .candidates
            .iter()
            .filter_map(|c| problem.resolve(c).ok().map(|rc| (c.name.clone(), rc)))
            .collect();
        r.check(cands.len() == problem.candidates.len(), format!("{name}: all candidates resolve"));
        match inclusion_audit(problem, &pl.bridge, &cands) {
            Ok(entries) => {
                r.check(true, format!("{name}: no violation over {} candidates", entries.len()));
                for e in entries {
                    r.note(e.summary());
                }
            }
            Err(e) => {
                r.check(false, format!("{name}: {e}"));
            }
        }
    }
    assert!(r.finish(8));
}
