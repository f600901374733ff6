//! Connection between the classical and the nonclassical determining
//! systems through `xi_i' = tau' xi_i, eta' = tau' eta`, where `tau'` is the
//! first infinitesimal.

use crate::diffalg::{content_free, prem, wu_chain, Chain, Rank, ReductionCertificate, WuOptions};
use crate::error::Error;
use crate::expr::{Atom, Closed, Frac, FuncRole, Idx, Mono, Poly, Space};
use crate::harness::{reduce_side, side_chain, Evaluator};
use crate::symgen::{determining, DeterminingSystem, GeneratorKind, PdeSystem};
use crate::text::{print_poly, Problem, ResolvedCandidate};
use serde::{Deserialize, Serialize};

/// Images of chain members under the map. The induced rank is the source
/// rank: the unknowns keep their names and `tau` stays highest.
#[derive(Clone, Debug)]
pub struct Cln1Image {
    pub source: Chain,
    pub image: Vec<Poly>,
    pub rank: Rank,
}

#[derive(Clone, Debug)]
pub struct BridgeResult {
    pub space: Space,
    pub rank: Rank,
    /// Function index of the first infinitesimal.
    pub tau: usize,
    pub dprime: DeterminingSystem,
    pub d: DeterminingSystem,
    pub cprime: Chain,
    pub dpp: Chain,
    pub rest: Chain,
    pub c: Chain,
    /// For each member of `c`: the index in `rest` it comes from and the
    /// power of `tau` divided out.
    pub sources: Vec<(usize, u32)>,
    /// `IS * p_i = sum D(q_v)` for each member of `d`.
    pub certificates: Vec<ReductionCertificate>,
    pub is_cprime: Poly,
    pub is_c: Poly,
}

fn coords(sp: &Space, f: usize) -> Vec<usize> {
    sp.funcs[f]
        .args
        .iter()
        .map(|a| match a {
            crate::expr::Arg::Var(v) => *v as usize,
            crate::expr::Arg::Func(_) => usize::MAX,
        })
        .collect()
}

fn is_tau_jet(a: &Atom, tau: usize) -> bool {
    matches!(a, Atom::Jet(f, _) if *f as usize == tau)
}

/// Splits `C'` into the members led by derivatives of `tau` and the rest.
pub fn split_dpp(sp: &Space, cprime: &Chain, tau: usize) -> Result<(Chain, Chain), Error> {
    if cprime.rank.unknowns.last().map(|&u| u as usize) != Some(tau) {
        return Err(Error::Rank(format!(
            "`{}` must be the highest unknown of the rank",
            sp.funcs[tau].name
        )));
    }
    let (mut dpp, mut rest) = (Vec::new(), Vec::new());
    for (g, l) in cprime.members.iter().zip(cprime.leaders(sp)) {
        if is_tau_jet(&l, tau) {
            dpp.push(g.clone());
        } else {
            rest.push(g.clone());
        }
    }
    Ok((
        Chain::from_sorted(&cprime.rank, dpp),
        Chain::from_sorted(&cprime.rank, rest),
    ))
}

/// Image of one polynomial: every jet of an unknown other than `tau` is
/// replaced by the matching derivative of `tau` times that unknown.
pub fn cln1_poly(sp: &Space, p: &Poly, tau: usize) -> Poly {
    sp.map_atoms(p, &|a| match a {
        Atom::Jet(f, alpha) if *f as usize != tau && sp.funcs[*f as usize].role == FuncRole::Unknown => {
            let f = *f as usize;
            let base = Poly::atom(Atom::Jet(f as u16, Idx::from_elem(0, alpha.len())));
            let t = Poly::atom(Atom::Jet(tau as u16, Idx::from_elem(0, sp.funcs[tau].args.len())));
            Some(sp.total_derivative_multi(&sp.mul(&t, &base), &coords(sp, f), alpha))
        }
        _ => None,
    })
}

pub fn apply_cln1(sp: &Space, cprime: &Chain, tau: usize) -> Cln1Image {
    Cln1Image {
        source: cprime.clone(),
        image: cprime.members.iter().map(|g| cln1_poly(sp, g, tau)).collect(),
        rank: cprime.rank.clone(),
    }
}

/// Largest power of the order-zero `tau` dividing every monomial.
fn tau_power(p: &Poly, tau: usize, nargs: usize) -> u32 {
    let t = Atom::Jet(tau as u16, Idx::from_elem(0, nargs));
    p.mono_content().exponent(&t)
}

/// Steps 1 to 4 from scratch.
pub fn build_bridge(pde: &PdeSystem, rank: &Rank) -> Result<BridgeResult, Error> {
    let dprime = determining(pde, rank, GeneratorKind::Classical)?;
    let d = determining(pde, rank, GeneratorKind::Nonclassical)?;
    bridge_from(pde, rank, &dprime, &d)
}

/// Steps 2 to 4 for already computed determining systems.
pub fn bridge_from(
    pde: &PdeSystem,
    rank: &Rank,
    dprime: &DeterminingSystem,
    d: &DeterminingSystem,
) -> Result<BridgeResult, Error> {
    let sp = &pde.det;
    let tau = 0usize;
    let nargs = sp.funcs[tau].args.len();
    let cprime = wu_chain(sp, &dprime.polys, rank, &WuOptions::default())?;
    let is_cprime = cprime.is_product(sp);
    if is_cprime.is_zero() {
        return Err(Error::IsVanishes);
    }
    let (dpp, rest) = split_dpp(sp, &cprime, tau)?;
    // the images of D'' pick up lower tau jets; autoreduce them
    let dpp_image = wu_chain(sp, &apply_cln1(sp, &dpp, tau).image, rank, &WuOptions::default())?;
    let image = apply_cln1(sp, &rest, tau);

    let mut members = Vec::new();
    let mut sources = Vec::new();
    for (i, g) in image.image.iter().enumerate() {
        let r = prem(sp, g, &dpp_image).remainder;
        if r.is_zero() {
            continue;
        }
        let k = tau_power(&r, tau, nargs);
        let t = Mono::atom(Atom::Jet(tau as u16, Idx::from_elem(0, nargs)), k);
        let r = r.div_mono(&t).expect("tau power divides");
        members.push(content_free(sp, rank, &r));
        sources.push((i, k));
    }
    // keep sources aligned with the sorted chain
    let mut paired: Vec<(Poly, (usize, u32))> = members.into_iter().zip(sources).collect();
    paired.sort_by_key(|a| rank.poly_key(sp, &a.0));
    let (members, sources): (Vec<Poly>, Vec<(usize, u32)>) = paired.into_iter().unzip();
    let c = Chain::new(sp, rank, members)?;
    let is_c = c.is_product(sp);
    if is_c.is_zero() {
        return Err(Error::IsVanishes);
    }

    let mut certificates = Vec::new();
    for (i, p) in d.polys.iter().enumerate() {
        let cert = prem(sp, p, &c);
        if !cert.remainder.is_zero() {
            return Err(Error::NonzeroRemainder {
                index: i,
                remainder: print_poly(sp, &cert.remainder),
            });
        }
        certificates.push(cert);
    }
    Ok(BridgeResult {
        space: sp.clone(),
        rank: rank.clone(),
        tau,
        dprime: dprime.clone(),
        d: d.clone(),
        cprime,
        dpp,
        rest,
        c,
        sources,
        certificates,
        is_cprime,
        is_c,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Nontrivial,
    ClassicalEquivalent,
    Inconclusive,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Nontrivial => "nontrivial",
            Verdict::ClassicalEquivalent => "classical_equivalent",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TrivialityVerdict {
    pub verdict: Verdict,
    /// Chain member `c * tau` forcing `tau = 0`, or the `tau` found.
    pub witness: Option<String>,
    /// The `tau`-free factor `c` of a nontrivial witness.
    pub obstruction: Option<String>,
    /// Which part of `C'` produced the verdict.
    pub stage: String,
}

/// Ansatz catalog for a nonzero `tau` solving the substituted `C'`.
fn tau_catalog(sp: &Space) -> Vec<Poly> {
    let mut v = vec![Poly::one()];
    for i in 0..sp.vars.len() {
        let z = Poly::atom(Atom::Var(i as u16));
        v.push(z.clone());
        v.push(sp.mul(&z, &z));
        v.push(sp.fun(Closed::Exp, z.clone()));
        v.push(sp.fun(Closed::Exp, -z));
    }
    v
}

/// Decides whether a normalized candidate is the image of a classical
/// symmetry. Sound for `nontrivial`, incomplete otherwise.
pub fn triviality_test(
    problem: &Problem,
    bridge: &BridgeResult,
    rc: &ResolvedCandidate,
    subset: Option<&[usize]>,
) -> Result<TrivialityVerdict, Error> {
    let sp = &rc.space;
    let tau = bridge.tau;
    if rc.kind == GeneratorKind::Classical {
        let t = rc
            .unknowns
            .get(&tau)
            .ok_or_else(|| Error::Binding(sp.funcs[tau].name.clone()))?;
        let verdict = if t.is_zero() { Verdict::Inconclusive } else { Verdict::ClassicalEquivalent };
        return Ok(TrivialityVerdict {
            verdict,
            witness: Some(crate::text::print_frac(sp, t)),
            obstruction: None,
            stage: "classical candidate".into(),
        });
    }
    let ev = Evaluator::new(rc, problem.unknown_names().len(), GeneratorKind::Nonclassical)?;
    let side = side_chain(&bridge.rank, rc)?;
    let image = apply_cln1(sp, &bridge.cprime, tau);
    let subst: Vec<Poly> = image
        .image
        .iter()
        .map(|g| reduce_side(sp, side.as_ref(), ev.residual(g)))
        .collect();
    let trank = Rank::new(bridge.rank.indep.clone(), vec![tau as u16]);
    let nargs = sp.funcs[tau].args.len();
    let tau0 = Atom::Jet(tau as u16, Idx::from_elem(0, nargs));

    let dpp_idx: Vec<usize> = {
        let ls = bridge.cprime.leaders(&bridge.space);
        (0..ls.len()).filter(|&i| is_tau_jet(&ls[i], tau)).collect()
    };
    let all_idx: Vec<usize> = (0..subst.len()).collect();
    let stages: Vec<(&str, Vec<usize>)> = match subset {
        Some(s) => vec![("subset", s.to_vec())],
        None => vec![("Dpp", dpp_idx), ("Cprime", all_idx.clone())],
    };
    // `c * tau` with `c` nonzero modulo the side system forces `tau = 0`
    let forcing = |g: &Poly| -> Option<Poly> {
        if g.degree_in(&tau0) != 1 || g.atoms().iter().any(|a| trank.is_ranked(a) && *a != tau0) {
            return None;
        }
        let c = g.coeff_of(&tau0, 1);
        if !(g.clone() - sp.mul(&c, &Poly::atom(tau0.clone()))).is_zero() {
            return None;
        }
        let c = reduce_side(sp, side.as_ref(), c);
        (!c.is_zero()).then_some(c)
    };
    let nontrivial = |g: &Poly, c: &Poly, stage: &str| TrivialityVerdict {
        verdict: Verdict::Nontrivial,
        witness: Some(print_poly(sp, g)),
        obstruction: Some(print_poly(sp, c)),
        stage: stage.into(),
    };
    for (stage, idx) in stages {
        let polys: Vec<Poly> = idx.iter().map(|&i| subst[i].clone()).filter(|p| !p.is_zero()).collect();
        if polys.is_empty() {
            continue;
        }
        let direct = polys
            .iter()
            .filter_map(|g| forcing(g).map(|c| (g, c)))
            .min_by_key(|(_, c)| c.len());
        if let Some((g, c)) = direct {
            return Ok(nontrivial(g, &c, stage));
        }
        let opts = WuOptions {
            integrability: true,
            ..WuOptions::default()
        };
        match wu_chain(sp, &polys, &trank, &opts) {
            Err(Error::InconsistentSystem(w)) => {
                return Ok(TrivialityVerdict {
                    verdict: Verdict::Nontrivial,
                    witness: Some(w.clone()),
                    obstruction: Some(w),
                    stage: stage.into(),
                });
            }
            Err(e) => return Err(e),
            Ok(chain) => {
                if let Some((g, c)) = chain.members.iter().find_map(|g| forcing(g).map(|c| (g, c))) {
                    return Ok(nontrivial(g, &c, stage));
                }
            }
        }
    }

    for t in tau_catalog(sp) {
        let tf = Frac::from(t.clone());
        let coords = coords(sp, tau);
        let ok = subst.iter().all(|g| {
            let v = sp.eval_frac(g, &|a| match a {
                Atom::Jet(f, alpha) if *f as usize == tau => Some(tf.total_derivative_multi(sp, &coords, alpha)),
                _ => None,
            });
            reduce_side(sp, side.as_ref(), v.num).is_zero()
        });
        if ok {
            return Ok(TrivialityVerdict {
                verdict: Verdict::ClassicalEquivalent,
                witness: Some(print_poly(sp, &t)),
                obstruction: None,
                stage: "catalog".into(),
            });
        }
    }
    Ok(TrivialityVerdict {
        verdict: Verdict::Inconclusive,
        witness: None,
        obstruction: None,
        stage: "catalog".into(),
    })
}

/// Membership of one candidate in the three zero sets.
#[derive(Clone, Debug, Serialize)]
pub struct AuditEntry {
    pub candidate: String,
    /// `None` when undecided or when the map does not apply.
    pub cprime_image: Option<bool>,
    pub in_c: Option<bool>,
    pub in_d: Option<bool>,
    pub note: String,
}

impl AuditEntry {
    pub fn summary(&self) -> String {
        let f = |b: Option<bool>| match b {
            Some(true) => "yes",
            Some(false) => "no",
            None => "-",
        };
        format!(
            "{}: C'-image {}, C {}, D {}{}",
            self.candidate,
            f(self.cprime_image),
            f(self.in_c),
            f(self.in_d),
            if self.note.is_empty() { String::new() } else { format!(" ({})", self.note) }
        )
    }
}

fn member_of(
    problem: &Problem,
    rc: &ResolvedCandidate,
    polys: &[Poly],
    kind: GeneratorKind,
    rank: &Rank,
) -> Result<bool, Error> {
    let ev = Evaluator::new(rc, problem.unknown_names().len(), kind)?;
    let side = side_chain(rank, rc)?;
    Ok(polys
        .iter()
        .all(|p| reduce_side(&rc.space, side.as_ref(), ev.residual(p)).is_zero()))
}

/// Checks that membership never violates `Z(C'-image) ⊆ Z(C) ⊆ Z(D)`.
pub fn inclusion_audit(
    problem: &Problem,
    bridge: &BridgeResult,
    candidates: &[(String, ResolvedCandidate)],
) -> Result<Vec<AuditEntry>, Error> {
    let mut out = Vec::new();
    for (name, rc) in candidates {
        let mut note = String::new();
        let cprime_image = match rc.kind {
            GeneratorKind::Classical => {
                let t = rc.unknowns.get(&bridge.tau);
                if t.map(|t| t.is_zero()).unwrap_or(true) {
                    note = "first infinitesimal vanishes, map not applicable".into();
                    out.push(AuditEntry {
                        candidate: name.clone(),
                        cprime_image: None,
                        in_c: None,
                        in_d: None,
                        note,
                    });
                    continue;
                }
                Some(member_of(problem, rc, &bridge.cprime.members, GeneratorKind::Classical, &bridge.rank)?)
            }
            GeneratorKind::Nonclassical => {
                let v = triviality_test(problem, bridge, rc, None)?;
                note = v.verdict.name().to_string();
                match v.verdict {
                    Verdict::ClassicalEquivalent => Some(true),
                    Verdict::Nontrivial => Some(false),
                    Verdict::Inconclusive => None,
                }
            }
        };
        let in_c = member_of(problem, rc, &bridge.c.members, GeneratorKind::Nonclassical, &bridge.rank)?;
        let in_d = member_of(problem, rc, &bridge.d.polys, GeneratorKind::Nonclassical, &bridge.rank)?;
        if (cprime_image == Some(true) && !in_c) || (in_c && !in_d) {
            return Err(Error::InclusionViolation(format!(
                "{name}: C'-image {cprime_image:?}, C {in_c}, D {in_d}"
            )));
        }
        out.push(AuditEntry {
            candidate: name.clone(),
            cprime_image,
            in_c: Some(in_c),
            in_d: Some(in_d),
            note,
        });
    }
    Ok(out)
}
