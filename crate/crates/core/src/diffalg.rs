//! Ranks, certified Ritt-Wu pseudo-reduction and ascending chains.

use crate::error::Error;
use crate::expr::{Arg, Atom, Idx, Mono, Poly, Space, Q};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// Graded ranking: order first, then unknown precedence, then the
/// multi-index compared lexicographically with the first independent most
/// significant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rank {
    /// Coordinates, lowest precedence first.
    pub indep: Vec<u16>,
    /// Ranked function symbols, lowest first.
    pub unknowns: Vec<u16>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RankKey {
    order: u32,
    fpos: usize,
    alpha: SmallVec<[u8; 4]>,
}

impl Rank {
    pub fn new(indep: Vec<u16>, unknowns: Vec<u16>) -> Rank {
        Rank { indep, unknowns }
    }

    pub fn is_ranked(&self, a: &Atom) -> bool {
        matches!(a, Atom::Jet(f, _) if self.unknowns.contains(f))
    }

    pub fn key(&self, sp: &Space, a: &Atom) -> Option<RankKey> {
        let Atom::Jet(f, alpha) = a else { return None };
        let fpos = self.unknowns.iter().position(|u| u == f)?;
        let args = &sp.funcs[*f as usize].args;
        let mut v = SmallVec::from_elem(0u8, self.indep.len());
        for (k, arg) in args.iter().enumerate() {
            if let Arg::Var(x) = arg {
                if let Some(p) = self.indep.iter().position(|y| y == x) {
                    v[p] = alpha[k];
                }
            }
        }
        Some(RankKey {
            order: a.order(),
            fpos,
            alpha: v,
        })
    }

    pub fn compare(&self, sp: &Space, a: &Atom, b: &Atom) -> Ordering {
        self.key(sp, a).cmp(&self.key(sp, b))
    }

    /// Ranked atoms of `p`, highest first.
    pub fn ranked_atoms(&self, sp: &Space, p: &Poly) -> Vec<Atom> {
        let mut v: Vec<(RankKey, Atom)> = p
            .atoms()
            .into_iter()
            .filter_map(|a| self.key(sp, &a).map(|k| (k, a)))
            .collect();
        v.sort_by(|x, y| y.0.cmp(&x.0));
        v.into_iter().map(|(_, a)| a).collect()
    }

    pub fn leader(&self, sp: &Space, p: &Poly) -> Option<Atom> {
        p.atoms()
            .into_iter()
            .filter_map(|a| self.key(sp, &a).map(|k| (k, a)))
            .max_by(|x, y| x.0.cmp(&y.0))
            .map(|(_, a)| a)
    }

    pub fn initial(&self, sp: &Space, p: &Poly) -> Result<Poly, Error> {
        let l = self.leader(sp, p).ok_or(Error::Degenerate)?;
        Ok(p.coeff_of(&l, p.degree_in(&l)))
    }

    pub fn separant(&self, sp: &Space, p: &Poly) -> Result<Poly, Error> {
        let l = self.leader(sp, p).ok_or(Error::Degenerate)?;
        Ok(p.diff_atom(&l))
    }

    /// Rank of a polynomial: leader key, then degree in the leader.
    /// Degenerate polynomials rank lowest.
    pub fn poly_key(&self, sp: &Space, p: &Poly) -> Option<(RankKey, u32)> {
        let l = self.leader(sp, p)?;
        let d = p.degree_in(&l);
        Some((self.key(sp, &l).unwrap(), d))
    }

    /// `Some(beta)` when `d` is a derivative of `l` (`beta` may be zero).
    pub fn derivative_of(d: &Atom, l: &Atom) -> Option<Idx> {
        match (d, l) {
            (Atom::Jet(f, a), Atom::Jet(g, b)) if f == g => {
                if a.iter().zip(b.iter()).all(|(x, y)| x >= y) {
                    Some(a.iter().zip(b.iter()).map(|(x, y)| x - y).collect())
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    pub fn is_reduced(&self, sp: &Space, f: &Poly, g: &Poly) -> Result<bool, Error> {
        let l = self.leader(sp, g).ok_or(Error::Degenerate)?;
        let m = g.degree_in(&l);
        for a in f.atoms() {
            if let Some(beta) = Rank::derivative_of(&a, &l) {
                if beta.iter().any(|&b| b > 0) {
                    return Ok(false);
                }
            }
        }
        let _ = sp;
        Ok(f.degree_in(&l) < m)
    }

    /// Coordinate indices along which derivatives of `f` are taken.
    fn coords_of(sp: &Space, f: usize) -> Vec<usize> {
        sp.funcs[f]
            .args
            .iter()
            .map(|a| match a {
                Arg::Var(v) => *v as usize,
                Arg::Func(_) => usize::MAX,
            })
            .collect()
    }
}

/// Differential ascending chain: strictly increasing leaders, each member
/// reduced with respect to the earlier ones.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chain {
    pub rank: Rank,
    pub members: Vec<Poly>,
}

impl Chain {
    /// Builds a chain, sorting members by rank; fails if the conditions of
    /// an ascending chain do not hold.
    pub fn new(sp: &Space, rank: &Rank, members: Vec<Poly>) -> Result<Chain, Error> {
        let mut m = members;
        for p in &m {
            if rank.leader(sp, p).is_none() {
                return Err(Error::Degenerate);
            }
        }
        m.sort_by_key(|a| rank.poly_key(sp, a));
        let c = Chain {
            rank: rank.clone(),
            members: m,
        };
        if !is_chain(sp, rank, &c.members) {
            return Err(Error::Rank("members do not form an ascending chain".into()));
        }
        Ok(c)
    }

    /// Wraps members without validation (caller guarantees the chain property).
    pub fn from_sorted(rank: &Rank, members: Vec<Poly>) -> Chain {
        Chain {
            rank: rank.clone(),
            members,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn leaders(&self, sp: &Space) -> Vec<Atom> {
        self.members
            .iter()
            .map(|p| self.rank.leader(sp, p).expect("chain member without leader"))
            .collect()
    }

    pub fn initials(&self, sp: &Space) -> Vec<Poly> {
        self.members
            .iter()
            .map(|p| self.rank.initial(sp, p).expect("chain member without leader"))
            .collect()
    }

    /// Product of the initials, times the separants of members whose leader
    /// occurs with degree above one (for linear members the separant is the
    /// initial and is counted once).
    pub fn is_product(&self, sp: &Space) -> Poly {
        let mut out = Poly::one();
        for p in &self.members {
            let l = self.rank.leader(sp, p).unwrap();
            out = sp.mul(&out, &p.coeff_of(&l, p.degree_in(&l)));
            if p.degree_in(&l) > 1 {
                out = sp.mul(&out, &p.diff_atom(&l));
            }
        }
        out
    }
}

pub fn is_chain(sp: &Space, rank: &Rank, polys: &[Poly]) -> bool {
    let mut prev: Option<RankKey> = None;
    for (j, p) in polys.iter().enumerate() {
        let Some(l) = rank.leader(sp, p) else {
            return false;
        };
        let k = rank.key(sp, &l).unwrap();
        if let Some(pk) = &prev {
            if k <= *pk {
                return false;
            }
        }
        prev = Some(k);
        for g in &polys[..j] {
            if !rank.is_reduced(sp, p, g).unwrap_or(false) {
                return false;
            }
        }
    }
    true
}

/// Record of `IS * f = sum_i sum_beta Q_i^beta D^beta g_i + r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionCertificate {
    pub input: Poly,
    pub is: Poly,
    /// Per chain member: `(beta, Q)` with `beta` over the arguments of the
    /// member's leading function.
    pub terms: BTreeMap<usize, Vec<(Idx, Poly)>>,
    pub remainder: Poly,
}

impl ReductionCertificate {
    /// `IS*f - sum Q D^beta g - r`, which must normalise to zero.
    pub fn defect(&self, sp: &Space, chain: &Chain) -> Poly {
        let mut e = sp.mul(&self.is, &self.input) - self.remainder.clone();
        for (i, ops) in &self.terms {
            let g = &chain.members[*i];
            let f = chain.rank.leader(sp, g).and_then(|a| a.func()).unwrap();
            let coords = Rank::coords_of(sp, f);
            for (beta, qq) in ops {
                let dg = sp.total_derivative_multi(g, &coords, beta);
                e = e - sp.mul(qq, &dg);
            }
        }
        e
    }

    pub fn verify(&self, sp: &Space, chain: &Chain) -> bool {
        self.defect(sp, chain).is_zero()
    }

    /// Operator applied to member `i` as a list of `(beta, Q)`.
    pub fn operator(&self, i: usize) -> &[(Idx, Poly)] {
        self.terms.get(&i).map(|v| v.as_slice()).unwrap_or(&[])
    }
}

struct Offence {
    atom: Atom,
    member: usize,
    beta: Idx,
}

fn find_offence(sp: &Space, chain: &Chain, leaders: &[(Atom, u32)], r: &Poly) -> Option<Offence> {
    let rank = &chain.rank;
    for a in rank.ranked_atoms(sp, r) {
        let mut exact: Option<usize> = None;
        let mut proper: Option<(usize, Idx)> = None;
        for (i, (l, m)) in leaders.iter().enumerate() {
            let Some(beta) = Rank::derivative_of(&a, l) else {
                continue;
            };
            if beta.iter().all(|&b| b == 0) {
                if r.degree_in(&a) >= *m {
                    exact = Some(i);
                }
            } else {
                let better = match &proper {
                    None => true,
                    Some((j, _)) => rank.compare(sp, l, &leaders[*j].0) == Ordering::Greater,
                };
                if better {
                    proper = Some((i, beta));
                }
            }
        }
        if let Some(i) = exact {
            let beta = match &a {
                Atom::Jet(_, al) => Idx::from_elem(0, al.len()),
                _ => Idx::new(),
            };
            return Some(Offence { atom: a, member: i, beta });
        }
        if let Some((member, beta)) = proper {
            return Some(Offence { atom: a, member, beta });
        }
    }
    None
}

/// Pseudo-remainder of `f` with respect to `chain`, with certificate.
///
/// The highest offending derivative is eliminated first. Proper derivatives
/// of a leader use the differentiated member and the separant as multiplier;
/// leaders of too high degree use the member and its initial. Multipliers
/// that are nonzero rational constants are divided out instead.
pub fn prem(sp: &Space, f: &Poly, chain: &Chain) -> ReductionCertificate {
    let leaders: Vec<(Atom, u32)> = chain
        .members
        .iter()
        .map(|g| {
            let l = chain.rank.leader(sp, g).expect("degenerate chain member");
            let d = g.degree_in(&l);
            (l, d)
        })
        .collect();
    let mut r = f.clone();
    let mut is = Poly::one();
    let mut terms: BTreeMap<(usize, Idx), Poly> = BTreeMap::new();
    let mut dcache: HashMap<(usize, Idx), Poly> = HashMap::new();
    while let Some(off) = find_offence(sp, chain, &leaders, &r) {
        let i = off.member;
        let a = off.atom;
        let proper = off.beta.iter().any(|&b| b > 0);
        let h = if proper {
            dcache
                .entry((i, off.beta.clone()))
                .or_insert_with(|| {
                    let fidx = leaders[i].0.func().unwrap();
                    let coords = Rank::coords_of(sp, fidx);
                    sp.total_derivative_multi(&chain.members[i], &coords, &off.beta)
                })
                .clone()
        } else {
            chain.members[i].clone()
        };
        let m = h.degree_in(&a);
        let mult = h.coeff_of(&a, m);
        let k = r.degree_in(&a);
        let c = r.coeff_of(&a, k);
        let shift = Poly::term(Q::one(), Mono::atom(a.clone(), k - m));
        let qq = sp.mul(&c, &shift);
        match mult.as_constant() {
            Some(mc) if !mc.is_zero() => {
                let qq = qq.scale(&(Q::one() / mc));
                r = r - sp.mul(&qq, &h);
                let e = terms.entry((i, off.beta)).or_default();
                *e = &*e + &qq;
            }
            _ => {
                r = sp.mul(&mult, &r) - sp.mul(&qq, &h);
                is = sp.mul(&mult, &is);
                for v in terms.values_mut() {
                    *v = sp.mul(&mult, v);
                }
                let e = terms.entry((i, off.beta)).or_default();
                *e = &*e + &qq;
            }
        }
    }
    let mut grouped: BTreeMap<usize, Vec<(Idx, Poly)>> = BTreeMap::new();
    for ((i, beta), qq) in terms {
        if !qq.is_zero() {
            grouped.entry(i).or_default().push((beta, qq));
        }
    }
    ReductionCertificate {
        input: f.clone(),
        is,
        terms: grouped,
        remainder: r,
    }
}

/// Primitive form without content in the coordinates alone, with the
/// leading term of the initial positive. Returns zero for zero.
///
/// Factors involving parameters or opaque functions are kept: a candidate
/// may specialise them to values where the factor vanishes.
pub fn content_free(sp: &Space, rank: &Rank, p: &Poly) -> Poly {
    if p.is_zero() {
        return Poly::zero();
    }
    let g = crate::expr::gcd::base_content(p, &|a| matches!(a, Atom::Var(_)));
    let p = if g.as_constant().is_some() {
        p.clone()
    } else {
        sp.normalize(&crate::expr::gcd::div_exact(p, &g).expect("content divides"))
    };
    let (_, mut prim) = sp.primitive(&p);
    if let Ok(init) = rank.initial(sp, &prim) {
        if init.lead_coeff() < Q::zero() {
            prim = -prim;
        }
    }
    prim
}

#[derive(Clone, Debug)]
pub struct WuOptions {
    /// Adjoin cross-derivative (integrability) conditions of pairs of chain
    /// members with leaders derived from the same unknown.
    pub integrability: bool,
    /// Also divide remainders by monomial factors in undifferentiated
    /// unknowns. This drops the components where such a factor vanishes.
    pub strip_monomials: bool,
    pub max_rounds: usize,
}

impl Default for WuOptions {
    fn default() -> Self {
        WuOptions {
            integrability: false,
            strip_monomials: false,
            max_rounds: 200,
        }
    }
}

fn sort_key(sp: &Space, rank: &Rank, p: &Poly) -> (Option<(RankKey, u32)>, usize, u32, Poly) {
    let pk = rank.poly_key(sp, p);
    let ld = pk.as_ref().map(|k| k.1).unwrap_or(0);
    (pk, p.len(), ld, p.clone())
}

/// Basic set: greedy minimal ascending chain of `set`.
pub fn basic_set(sp: &Space, rank: &Rank, set: &[Poly]) -> Vec<Poly> {
    let mut sorted: Vec<&Poly> = set.iter().collect();
    sorted.sort_by_cached_key(|p| sort_key(sp, rank, p));
    let mut b: Vec<Poly> = Vec::new();
    for p in sorted {
        let Some((k, _)) = rank.poly_key(sp, p) else {
            continue;
        };
        if let Some(last) = b.last() {
            let (lk, _) = rank.poly_key(sp, last).unwrap();
            if k <= lk {
                continue;
            }
        }
        if b.iter().all(|g| rank.is_reduced(sp, p, g).unwrap_or(false)) {
            b.push(p.clone());
        }
    }
    b
}

fn delta_polys(sp: &Space, chain: &Chain) -> Vec<Poly> {
    let mut out = Vec::new();
    let ls = chain.leaders(sp);
    for i in 0..ls.len() {
        for j in (i + 1)..ls.len() {
            let (Atom::Jet(f, a), Atom::Jet(g, b)) = (&ls[i], &ls[j]) else {
                continue;
            };
            if f != g {
                continue;
            }
            let gamma: Idx = a.iter().zip(b.iter()).map(|(x, y)| *x.max(y)).collect();
            let bi: Idx = gamma.iter().zip(a.iter()).map(|(x, y)| x - y).collect();
            let bj: Idx = gamma.iter().zip(b.iter()).map(|(x, y)| x - y).collect();
            let coords = Rank::coords_of(sp, *f as usize);
            let hi = sp.total_derivative_multi(&chain.members[i], &coords, &bi);
            let hj = sp.total_derivative_multi(&chain.members[j], &coords, &bj);
            let top = Atom::Jet(*f, gamma);
            let si = hi.coeff_of(&top, 1);
            let sj = hj.coeff_of(&top, 1);
            out.push(sp.mul(&sj, &hi) - sp.mul(&si, &hj));
        }
    }
    out
}

fn clean(sp: &Space, rank: &Rank, p: &Poly, opts: &WuOptions) -> Poly {
    let c = content_free(sp, rank, p);
    if !opts.strip_monomials || c.is_zero() {
        return c;
    }
    let (m, _) = c.mono_content().split(|a| a.order() == 0);
    if m.is_one() {
        return c;
    }
    let r = content_free(sp, rank, &c.div_mono(&m).unwrap());
    if rank.leader(sp, &r).is_none() {
        return c;
    }
    r
}

/// Wu's characteristic-set loop: select a basic set, reduce the rest by it,
/// adjoin nonzero remainders, repeat until all remainders vanish.
pub fn wu_chain(sp: &Space, system: &[Poly], rank: &Rank, opts: &WuOptions) -> Result<Chain, Error> {
    let mut input: Vec<Poly> = Vec::new();
    for p in system {
        let c = clean(sp, rank, &sp.normalize(p), opts);
        if c.is_zero() {
            continue;
        }
        if rank.leader(sp, &c).is_none() {
            return Err(Error::InconsistentSystem(crate::text::print_poly(sp, &c)));
        }
        if !input.contains(&c) {
            input.push(c);
        }
    }
    if input.is_empty() {
        return Ok(Chain::from_sorted(rank, Vec::new()));
    }
    let mut extra: Vec<Poly> = Vec::new();
    for _ in 0..opts.max_rounds {
        let all: Vec<Poly> = input.iter().chain(extra.iter()).cloned().collect();
        let b = basic_set(sp, rank, &all);
        let chain = Chain::from_sorted(rank, b.clone());
        let mut found: BTreeSet<Poly> = BTreeSet::new();
        let mut pending: Vec<Poly> = all.iter().filter(|p| !b.contains(p)).cloned().collect();
        if opts.integrability {
            pending.extend(delta_polys(sp, &chain));
        }
        for p in &pending {
            let r = clean(sp, rank, &prem(sp, p, &chain).remainder, opts);
            if r.is_zero() {
                continue;
            }
            if rank.leader(sp, &r).is_none() {
                return Err(Error::InconsistentSystem(crate::text::print_poly(sp, &r)));
            }
            found.insert(r);
        }
        if found.is_empty() {
            return Ok(chain);
        }
        extra = b
            .into_iter()
            .filter(|p| !input.contains(p))
            .chain(found)
            .collect();
    }
    Err(Error::Rank("wu_chain did not stabilise".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::FuncRole;

    fn det_space() -> (Space, Rank) {
        let mut s = Space::default();
        for v in ["t", "x", "u"] {
            s.add_var(v);
        }
        let args = vec![Arg::Var(0), Arg::Var(1), Arg::Var(2)];
        for f in ["xi", "eta", "tau"] {
            s.add_func(f, args.clone(), FuncRole::Unknown);
        }
        (s, Rank::new(vec![0, 1, 2], vec![0, 1, 2]))
    }

    fn j(s: &Space, f: &str, by: &[&str]) -> Poly {
        s.jet(f, by).unwrap()
    }

    #[test]
    fn leader_prefers_first_independent() {
        let (s, r) = det_space();
        let p = j(&s, "tau", &["t"]) - j(&s, "xi", &["x"]).scale(&crate::expr::q(2));
        assert_eq!(r.leader(&s, &p), Some(Atom::jet(2, &[1, 0, 0])));
        assert_eq!(r.initial(&s, &p).unwrap(), Poly::one());
        let tx = j(&s, "tau", &["x"]);
        let tt = j(&s, "tau", &["t"]);
        assert_eq!(r.leader(&s, &(tx + tt)), Some(Atom::jet(2, &[1, 0, 0])));
    }

    #[test]
    fn separant_of_square() {
        let (s, r) = det_space();
        let u = s.var("u").unwrap();
        let xx = j(&s, "xi", &["x"]);
        let p = s.mul(&u, &s.mul(&xx, &xx)) + Poly::one();
        assert_eq!(r.initial(&s, &p).unwrap(), u);
        assert_eq!(r.separant(&s, &p).unwrap(), s.mul(&u.scale(&crate::expr::q(2)), &xx));
    }

    #[test]
    fn reducedness() {
        let (s, r) = det_space();
        let euu = j(&s, "eta", &["u", "u"]);
        let euuu = j(&s, "eta", &["u", "u", "u"]);
        assert!(r.is_reduced(&s, &j(&s, "xi", &["u"]), &euu).unwrap());
        assert!(!r.is_reduced(&s, &euuu, &euu).unwrap());
        assert!(!r.is_reduced(&s, &s.mul(&euu, &euu), &euu).unwrap());
        assert!(!is_chain(&s, &r, &[euu.clone(), euuu]));
        assert!(is_chain(&s, &r, &[euu]));
    }

    #[test]
    fn prem_with_polynomial_initial() {
        // f = u xi_u^2 + eta_x, chain {xi_u - eta}: r = u eta^2 + eta_x
        let (s, _) = det_space();
        let r = Rank::new(vec![0, 1, 2], vec![1, 0]);
        let u = s.var("u").unwrap();
        let xu = j(&s, "xi", &["u"]);
        let eta = j(&s, "eta", &[]);
        let ex = j(&s, "eta", &["x"]);
        let f = s.mul(&u, &s.mul(&xu, &xu)) + ex.clone();
        let g = &xu - &eta;
        let chain = Chain::new(&s, &r, vec![g]).unwrap();
        let cert = prem(&s, &f, &chain);
        assert_eq!(cert.remainder, s.mul(&u, &s.mul(&eta, &eta)) + ex);
        assert_eq!(cert.is, Poly::one());
        assert!(cert.verify(&s, &chain));
        let q0 = &cert.operator(0)[0].1;
        assert_eq!(*q0, s.mul(&u, &xu) + s.mul(&u, &eta));
    }

    #[test]
    fn wu_one_step() {
        let (s, r) = det_space();
        let xu = j(&s, "xi", &["u"]);
        let eu = j(&s, "eta", &["u"]);
        let c = wu_chain(&s, &[xu.clone(), &xu + &eu], &r, &WuOptions::default()).unwrap();
        assert_eq!(c.members, vec![xu, eu]);
    }

    #[test]
    fn integrability_detects_empty_zero_set() {
        // {tau_t - 2 a' tau, tau_x} forces a'' tau = 0
        let (mut s, _) = det_space();
        s.add_func("a", vec![Arg::Var(1)], FuncRole::Opaque);
        let r = Rank::new(vec![0, 1, 2], vec![2]);
        let ap = j(&s, "a", &["x"]);
        let tau = j(&s, "tau", &[]);
        let sys = vec![
            j(&s, "tau", &["t"]) - s.mul(&ap, &tau).scale(&crate::expr::q(2)),
            j(&s, "tau", &["x"]),
        ];
        let plain = wu_chain(&s, &sys, &r, &WuOptions::default()).unwrap();
        assert_eq!(plain.len(), 2);
        let opts = WuOptions {
            integrability: true,
            ..Default::default()
        };
        let full = wu_chain(&s, &sys, &r, &opts).unwrap();
        assert_eq!(r.leader(&s, &full.members[0]), Some(Atom::jet(2, &[0, 0, 0])));
    }
}
