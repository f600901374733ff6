//! Classical and nonclassical determining systems by prolongation.

use crate::diffalg::{content_free, prem, wu_chain, Rank, WuOptions};
use crate::error::Error;
use crate::expr::{Atom, Binding, FuncRole, Idx, Mono, Poly, Space};
use crate::text::{print_atom, Equation};
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    Classical,
    Nonclassical,
}

impl GeneratorKind {
    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::Classical => "classical",
            GeneratorKind::Nonclassical => "nonclassical",
        }
    }
}

/// PDE system in solved form with its jet and determining spaces.
#[derive(Clone, Debug)]
pub struct PdeSystem {
    pub jet: Space,
    pub det: Space,
    pub equations: Vec<Equation>,
    pub nindep: usize,
    pub ndep: usize,
    /// Rank on dependent jets (used to triangularise the equations).
    pub jet_rank: Rank,
}

/// Infinitesimals as polynomials on the jet space.
#[derive(Clone, Debug)]
pub struct Generator {
    pub kind: GeneratorKind,
    pub xi: Vec<Poly>,
    pub eta: Vec<Poly>,
}

/// Where a determining polynomial came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Provenance {
    /// Equation index (0-based).
    pub equation: usize,
    /// Parametric monomial whose coefficient this is, in the grammar.
    pub monomial: String,
    /// True if the polynomial was produced by autoreduction rather than
    /// read off directly.
    pub reduced: bool,
}

#[derive(Clone, Debug)]
pub struct DeterminingSystem {
    pub kind: GeneratorKind,
    pub polys: Vec<Poly>,
    pub provenance: Vec<Provenance>,
}

impl PdeSystem {
    pub fn unknown_func(&self, k: usize) -> usize {
        self.ndep + k
    }

    pub fn generator(&self, kind: GeneratorKind) -> Generator {
        let jet = |f: usize| {
            Poly::atom(Atom::Jet(f as u16, Idx::from_elem(0, self.jet.funcs[f].args.len())))
        };
        let mut xi: Vec<Poly> = (0..self.nindep).map(|i| jet(self.unknown_func(i))).collect();
        if kind == GeneratorKind::Nonclassical {
            xi[0] = Poly::one();
        }
        let eta = (0..self.ndep)
            .map(|d| jet(self.unknown_func(self.nindep + d)))
            .collect();
        Generator { kind, xi, eta }
    }

    fn dep_jet(&self, d: usize, alpha: Idx) -> Atom {
        Atom::Jet(d as u16, alpha)
    }

    /// Highest derivative order occurring in the equations.
    pub fn order(&self) -> u32 {
        let mut k = 0;
        for e in &self.equations {
            k = k.max(e.target.order());
            for a in all_atoms(&e.rhs) {
                if matches!(a, Atom::Jet(f, _) if (f as usize) < self.ndep) {
                    k = k.max(a.order());
                }
            }
        }
        k
    }

    /// Translates a jet-space polynomial free of dependent derivatives to
    /// the determining space.
    pub fn to_det(&self, p: &Poly) -> Result<Poly, Error> {
        let bad: RefCell<Option<Atom>> = RefCell::new(None);
        let out = self.translate(p, &bad);
        match bad.into_inner() {
            Some(a) => Err(Error::Rank(format!(
                "jet `{}` is not a coordinate of the determining space",
                print_atom(&self.jet, &a)
            ))),
            None => Ok(out),
        }
    }

    fn translate(&self, p: &Poly, bad: &RefCell<Option<Atom>>) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in p.terms() {
            let mut acc = Poly::constant(c.clone());
            for (a, e) in m.factors() {
                let v = match a {
                    Atom::Var(_) | Atom::Param(_) => Poly::atom(a.clone()),
                    Atom::Jet(f, alpha) => {
                        let f = *f as usize;
                        if f < self.ndep {
                            if alpha.iter().any(|&k| k > 0) {
                                *bad.borrow_mut() = Some(a.clone());
                            }
                            Poly::atom(Atom::Var((self.nindep + f) as u16))
                        } else {
                            Poly::atom(Atom::Jet((f - self.ndep) as u16, alpha.clone()))
                        }
                    }
                    Atom::Fun(k, arg) => self.det.fun(*k, self.translate(arg, bad)),
                };
                acc = self.det.mul(&acc, &self.det.pow(&v, *e));
            }
            out = out + acc;
        }
        out
    }

    fn is_parametric(&self, a: &Atom) -> bool {
        matches!(a, Atom::Jet(f, alpha) if (*f as usize) < self.ndep && alpha.iter().any(|&k| k > 0))
    }
}

/// Atoms of `p` including those inside closed-function arguments.
pub fn all_atoms(p: &Poly) -> BTreeSet<Atom> {
    let mut out = BTreeSet::new();
    for a in p.atoms() {
        if let Atom::Fun(_, arg) = &a {
            out.extend(all_atoms(arg));
        }
        out.insert(a);
    }
    out
}

/// Recursive prolongation with memo.
pub struct Prolongation<'a> {
    pde: &'a PdeSystem,
    gen: &'a Generator,
    memo: RefCell<HashMap<Atom, Poly>>,
}

impl<'a> Prolongation<'a> {
    pub fn new(pde: &'a PdeSystem, gen: &'a Generator) -> Self {
        Prolongation {
            pde,
            gen,
            memo: RefCell::new(HashMap::new()),
        }
    }

    /// Coefficient `eta^J` of `d/du_J` for the dependent jet `a`.
    pub fn coeff(&self, a: &Atom) -> Poly {
        let Atom::Jet(d, alpha) = a else {
            panic!("prolongation of a non-jet")
        };
        if let Some(p) = self.memo.borrow().get(a) {
            return p.clone();
        }
        let sp = &self.pde.jet;
        let out = match alpha.iter().position(|&k| k > 0) {
            None => self.gen.eta[*d as usize].clone(),
            Some(c) => {
                // eta^{J,c} = D_c eta^J - sum_i u_{J,i} D_c xi_i
                let mut j = alpha.clone();
                j[c] -= 1;
                let lower = self.coeff(&Atom::Jet(*d, j.clone()));
                let mut out = sp.total_derivative(&lower, c);
                for (i, xi) in self.gen.xi.iter().enumerate() {
                    let dxi = sp.total_derivative(xi, c);
                    if dxi.is_zero() {
                        continue;
                    }
                    let mut ji = j.clone();
                    ji[i] += 1;
                    out = out - sp.mul(&Poly::atom(Atom::Jet(*d, ji)), &dxi);
                }
                out
            }
        };
        self.memo.borrow_mut().insert(a.clone(), out.clone());
        out
    }
}

/// Prolongation coefficients for every dependent jet up to `order`.
pub fn prolong(pde: &PdeSystem, gen: &Generator, order: u32) -> BTreeMap<Atom, Poly> {
    let pr = Prolongation::new(pde, gen);
    let mut out = BTreeMap::new();
    for d in 0..pde.ndep {
        for alpha in multi_indices(pde.nindep, order) {
            let a = pde.dep_jet(d, alpha);
            out.insert(a.clone(), pr.coeff(&a));
        }
    }
    out
}

/// All multi-indices of length `n` with total order at most `k`.
pub fn multi_indices(n: usize, k: u32) -> Vec<Idx> {
    let mut out = vec![Idx::from_elem(0, n)];
    let mut frontier = out.clone();
    for _ in 0..k {
        let mut next = Vec::new();
        for a in &frontier {
            for i in 0..n {
                let mut b = a.clone();
                b[i] += 1;
                if !next.contains(&b) {
                    next.push(b);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// `Pr X (target - rhs)`.
pub fn criterion(pde: &PdeSystem, pr: &Prolongation, eq: &Equation) -> Poly {
    let sp = &pde.jet;
    let f = Poly::atom(eq.target.clone()) - eq.rhs.clone();
    let mut out = Poly::zero();
    for (i, xi) in pr.gen.xi.iter().enumerate() {
        let d = sp.partial_coord(&f, &Atom::Var(i as u16));
        if !d.is_zero() {
            out = out + sp.mul(xi, &d);
        }
    }
    let mut coords = all_atoms(&f);
    // u itself may only enter through opaque functions of u
    for k in 0..pde.ndep {
        coords.insert(Atom::Jet(k as u16, vec![0; pde.nindep].into()));
    }
    for a in coords {
        if !matches!(&a, Atom::Jet(g, _) if (*g as usize) < pde.ndep) {
            continue;
        }
        let d = sp.partial_coord(&f, &a);
        if !d.is_zero() {
            out = out + sp.mul(&pr.coeff(&a), &d);
        }
    }
    out
}

/// Coefficients of `e` with respect to monomials in the atoms selected by
/// `parametric`, in monomial order.
pub fn collect_coefficients(e: &Poly, parametric: &dyn Fn(&Atom) -> bool) -> Vec<(Mono, Poly)> {
    let mut m: BTreeMap<Mono, Poly> = BTreeMap::new();
    for (mono, c) in e.terms() {
        let (par, rest) = mono.split(parametric);
        m.entry(par).or_default().add_term(rest, c.clone());
    }
    m.into_iter().filter(|(_, p)| !p.is_zero()).collect()
}

fn print_mono(sp: &Space, m: &Mono) -> String {
    if m.is_one() {
        return "1".into();
    }
    m.factors()
        .iter()
        .map(|(a, e)| {
            if *e == 1 {
                print_atom(sp, a)
            } else {
                format!("{}^{e}", print_atom(sp, a))
            }
        })
        .collect::<Vec<_>>()
        .join("*")
}

/// Collects, translates and normalises, keeping first occurrences.
fn gather(
    pde: &PdeSystem,
    rank: &Rank,
    eq_index: usize,
    e: &Poly,
    polys: &mut Vec<Poly>,
    prov: &mut Vec<Provenance>,
) -> Result<(), Error> {
    for (mono, c) in collect_coefficients(e, &|a| pde.is_parametric(a)) {
        let p = content_free(&pde.det, rank, &pde.to_det(&c)?);
        if p.is_zero() {
            continue;
        }
        if rank.leader(&pde.det, &p).is_none() {
            return Err(Error::InconsistentSystem(crate::text::print_poly(&pde.det, &p)));
        }
        if !polys.contains(&p) {
            polys.push(p);
            prov.push(Provenance {
                equation: eq_index,
                monomial: print_mono(&pde.jet, &mono),
                reduced: false,
            });
        }
    }
    Ok(())
}

fn equation_bindings(pde: &PdeSystem) -> Vec<Binding> {
    pde.equations
        .iter()
        .map(|e| Binding::new(e.target.clone(), e.rhs.clone()))
        .collect()
}

/// Coefficient collection only, before autoreduction.
pub fn classical_raw(pde: &PdeSystem, rank: &Rank) -> Result<DeterminingSystem, Error> {
    let gen = pde.generator(GeneratorKind::Classical);
    let pr = Prolongation::new(pde, &gen);
    let binds = equation_bindings(pde);
    let mut polys = Vec::new();
    let mut prov = Vec::new();
    for (k, eq) in pde.equations.iter().enumerate() {
        let c = criterion(pde, &pr, eq);
        let e = pde.jet.substitute(&c, &binds, true)?;
        gather(pde, rank, k, &e, &mut polys, &mut prov)?;
    }
    Ok(DeterminingSystem {
        kind: GeneratorKind::Classical,
        polys,
        provenance: prov,
    })
}

/// Classical determining system: invariance on the solution manifold,
/// coefficient collection, then autoreduction to chain form.
pub fn classical_determining(pde: &PdeSystem, rank: &Rank) -> Result<DeterminingSystem, Error> {
    let raw = classical_raw(pde, rank)?;
    let chain = wu_chain(&pde.det, &raw.polys, rank, &WuOptions::default())?;
    let mut polys = Vec::new();
    let mut prov = Vec::new();
    for p in chain.members {
        match raw.polys.iter().position(|q| *q == p) {
            Some(i) => prov.push(raw.provenance[i].clone()),
            None => {
                let src = raw.provenance.first().map(|p| p.equation).unwrap_or(0);
                prov.push(Provenance {
                    equation: src,
                    monomial: String::new(),
                    reduced: true,
                });
            }
        }
        polys.push(p);
    }
    Ok(DeterminingSystem {
        kind: GeneratorKind::Classical,
        polys,
        provenance: prov,
    })
}

/// Bindings `u_{x1} -> eta - sum_{i>=2} xi_i u_{x_i}` for every dependent.
pub fn invariant_surface(pde: &PdeSystem, gen: &Generator) -> Vec<Binding> {
    let sp = &pde.jet;
    (0..pde.ndep)
        .map(|d| {
            let mut rhs = gen.eta[d].clone();
            for (i, xi) in gen.xi.iter().enumerate().skip(1) {
                let mut a = Idx::from_elem(0, pde.nindep);
                a[i] = 1;
                rhs = rhs - sp.mul(xi, &Poly::atom(Atom::Jet(d as u16, a)));
            }
            let mut t = Idx::from_elem(0, pde.nindep);
            t[0] = 1;
            Binding::new(Atom::Jet(d as u16, t), rhs)
        })
        .collect()
}

/// Nonclassical determining system with the first infinitesimal set to 1.
pub fn nonclassical_determining(pde: &PdeSystem, rank: &Rank) -> Result<DeterminingSystem, Error> {
    let gen = pde.generator(GeneratorKind::Nonclassical);
    let pr = Prolongation::new(pde, &gen);
    let surface = invariant_surface(pde, &gen);
    let sp = &pde.jet;
    let mut transformed = Vec::new();
    for eq in &pde.equations {
        let f = Poly::atom(eq.target.clone()) - eq.rhs.clone();
        transformed.push(sp.substitute(&f, &surface, true)?);
    }
    let chain = wu_chain(sp, &transformed, &pde.jet_rank, &WuOptions::default())?;
    let mut polys = Vec::new();
    let mut prov = Vec::new();
    for (k, eq) in pde.equations.iter().enumerate() {
        let c = criterion(pde, &pr, eq);
        let e = sp.substitute(&c, &surface, true)?;
        let r = prem(sp, &e, &chain).remainder;
        gather(pde, rank, k, &r, &mut polys, &mut prov)?;
    }
    Ok(DeterminingSystem {
        kind: GeneratorKind::Nonclassical,
        polys,
        provenance: prov,
    })
}

/// Branch with the `slot`-th infinitesimal normalised to one. Only the
/// regular branch (`slot == 0`) is implemented.
pub fn nonclassical_branch(pde: &PdeSystem, rank: &Rank, slot: usize) -> Result<DeterminingSystem, Error> {
    if slot == 0 {
        nonclassical_determining(pde, rank)
    } else {
        Err(Error::Unimplemented(format!(
            "nonclassical branch with infinitesimal {slot} normalised (first infinitesimal zero)"
        )))
    }
}

pub fn determining(pde: &PdeSystem, rank: &Rank, kind: GeneratorKind) -> Result<DeterminingSystem, Error> {
    match kind {
        GeneratorKind::Classical => classical_determining(pde, rank),
        GeneratorKind::Nonclassical => nonclassical_determining(pde, rank),
    }
}

#[allow(dead_code)]
fn is_unknown(sp: &Space, a: &Atom) -> bool {
    matches!(a, Atom::Jet(f, _) if sp.funcs[*f as usize].role == FuncRole::Unknown)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::parse_problem;

    fn pde(src: &str) -> (PdeSystem, Rank) {
        let p = parse_problem(src).unwrap();
        (p.pde(), p.rank())
    }

    const TRANSPORT: &str = "independent t, x\ndependent u\ngenerator tau, xi ; eta\nequation u_t = -u_x\nrank t < x < u ; xi < eta < tau\n";

    #[test]
    fn first_prolongation_matches_hand_expansion() {
        let (p, _) = pde(TRANSPORT);
        let g = p.generator(GeneratorKind::Classical);
        let pr = Prolongation::new(&p, &g);
        let sp = &p.jet;
        let got = pr.coeff(&Atom::jet(0, &[0, 1]));
        let j = |n: &str, by: &[&str]| sp.jet(n, by).unwrap();
        let ux = j("u", &["x"]);
        let ut = j("u", &["t"]);
        let want = j("eta", &["x"]) + sp.mul(&ux, &(j("eta", &["u"]) - j("xi", &["x"])))
            - sp.mul(&sp.mul(&ux, &ux), &j("xi", &["u"]))
            - sp.mul(&ut, &j("tau", &["x"]))
            - sp.mul(&sp.mul(&ut, &ux), &j("tau", &["u"]));
        assert_eq!(got, want);
    }

    #[test]
    fn characteristic_form_agrees() {
        // eta^J = D_J(eta - sum xi_i u_i) + sum xi_i u_{J,i}
        let (p, _) = pde(TRANSPORT);
        let g = p.generator(GeneratorKind::Classical);
        let pr = Prolongation::new(&p, &g);
        let sp = &p.jet;
        let q = g.eta[0].clone()
            - sp.mul(&g.xi[0], &sp.jet("u", &["t"]).unwrap())
            - sp.mul(&g.xi[1], &sp.jet("u", &["x"]).unwrap());
        for alpha in multi_indices(2, 2) {
            let mut e = sp.total_derivative_multi(&q, &[0, 1], &alpha);
            for i in 0..2 {
                let mut b = alpha.clone();
                b[i] += 1;
                e = e + sp.mul(&g.xi[i], &Poly::atom(Atom::Jet(0, b)));
            }
            assert_eq!(pr.coeff(&Atom::Jet(0, alpha.clone())), e, "{alpha:?}");
        }
    }

    #[test]
    fn constant_generator_has_zero_prolongation() {
        let (p, _) = pde(TRANSPORT);
        let g = Generator {
            kind: GeneratorKind::Classical,
            xi: vec![Poly::one(), Poly::one()],
            eta: vec![Poly::one()],
        };
        for (a, c) in prolong(&p, &g, 3) {
            if a.order() > 0 {
                assert!(c.is_zero());
            }
        }
    }

    #[test]
    fn collect_splits_by_parametric_monomial() {
        let (p, _) = pde(TRANSPORT);
        let sp = &p.jet;
        let ux = sp.jet("u", &["x"]).unwrap();
        let a = sp.jet("xi", &[]).unwrap();
        let e = sp.mul(&(a.clone() - Poly::one()), &ux) + sp.mul(&a, &sp.mul(&ux, &ux));
        let c: Vec<Poly> = collect_coefficients(&e, &|x| p.is_parametric(x))
            .into_iter()
            .map(|x| x.1)
            .collect();
        assert_eq!(c, vec![a.clone() - Poly::one(), a]);
        assert!(collect_coefficients(&Poly::zero(), &|_| true).is_empty());
    }

    #[test]
    fn transport_classical_system_is_annihilated_by_translations() {
        let (p, r) = pde(TRANSPORT);
        let d = classical_determining(&p, &r).unwrap();
        assert!(!d.polys.is_empty());
        // tau = xi = const, eta = 0: every polynomial has only derivative terms
        for q in &d.polys {
            for a in q.atoms() {
                if let Atom::Jet(_, al) = &a {
                    let _ = al;
                }
            }
            let sub = p.det.map_atoms(q, &|a| match a {
                Atom::Jet(_, al) if al.iter().any(|&k| k > 0) => Some(Poly::zero()),
                Atom::Jet(f, _) if *f == 2 => Some(Poly::zero()),
                Atom::Jet(_, _) => Some(Poly::one()),
                _ => None,
            });
            assert!(sub.is_zero());
        }
    }

    #[test]
    fn non_regular_branch_is_a_stub() {
        let (p, r) = pde(TRANSPORT);
        assert!(matches!(nonclassical_branch(&p, &r, 1), Err(Error::Unimplemented(_))));
    }
}
