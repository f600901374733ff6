use super::{Atom, Q};
use num_traits::{One, Signed, Zero};
use smallvec::SmallVec;
use std::collections::{BTreeMap, BTreeSet};
use std::ops::{Add, Neg, Sub};

/// Power product of atoms, sorted by atom, exponents positive.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mono(pub(crate) SmallVec<[(Atom, u32); 4]>);

impl Mono {
    pub fn one() -> Mono {
        Mono(SmallVec::new())
    }

    pub fn atom(a: Atom, e: u32) -> Mono {
        let mut v = SmallVec::new();
        if e > 0 {
            v.push((a, e));
        }
        Mono(v)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[(Atom, u32)] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| *e).sum()
    }

    pub fn exponent(&self, a: &Atom) -> u32 {
        self.0
            .binary_search_by(|(b, _)| b.cmp(a))
            .map(|i| self.0[i].1)
            .unwrap_or(0)
    }

    pub fn mul(&self, other: &Mono) -> Mono {
        let (a, b) = (&self.0, &other.0);
        let mut out = SmallVec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a[i].0.clone(), a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend(a[i..].iter().cloned());
        out.extend(b[j..].iter().cloned());
        Mono(out)
    }

    /// Sets the exponent of `a` (removing it when `e == 0`).
    pub fn with_exponent(&self, a: &Atom, e: u32) -> Mono {
        let mut v = self.0.clone();
        match v.binary_search_by(|(b, _)| b.cmp(a)) {
            Ok(i) => {
                if e == 0 {
                    v.remove(i);
                } else {
                    v[i].1 = e;
                }
            }
            Err(i) => {
                if e > 0 {
                    v.insert(i, (a.clone(), e));
                }
            }
        }
        Mono(v)
    }

    /// Exact division, `None` if `d` does not divide `self`.
    pub fn div(&self, d: &Mono) -> Option<Mono> {
        let mut out = self.clone();
        for (a, e) in d.0.iter() {
            let have = out.exponent(a);
            if have < *e {
                return None;
            }
            out = out.with_exponent(a, have - e);
        }
        Some(out)
    }

    /// Componentwise minimum of exponents.
    pub fn gcd(&self, other: &Mono) -> Mono {
        let v = self
            .0
            .iter()
            .filter_map(|(a, e)| {
                let f = other.exponent(a);
                (f > 0).then(|| (a.clone(), (*e).min(f)))
            })
            .collect();
        Mono(v)
    }

    /// Splits into the factors selected by `pred` and the rest.
    pub fn split(&self, pred: impl Fn(&Atom) -> bool) -> (Mono, Mono) {
        let (mut yes, mut no) = (SmallVec::new(), SmallVec::new());
        for f in self.0.iter() {
            if pred(&f.0) {
                yes.push(f.clone());
            } else {
                no.push(f.clone());
            }
        }
        (Mono(yes), Mono(no))
    }
}

/// Sparse polynomial with rational coefficients. The zero polynomial has no terms.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Poly {
    pub(crate) terms: BTreeMap<Mono, Q>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn one() -> Poly {
        Poly::constant(Q::one())
    }

    pub fn constant(c: Q) -> Poly {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(Mono::one(), c);
        }
        p
    }

    pub fn atom(a: Atom) -> Poly {
        Poly::term(Q::one(), Mono::atom(a, 1))
    }

    pub fn term(c: Q, m: Mono) -> Poly {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &Q)> {
        self.terms.iter()
    }

    /// The rational value if the polynomial is constant.
    pub fn as_constant(&self) -> Option<Q> {
        match self.terms.len() {
            0 => Some(Q::zero()),
            1 => self.terms.get(&Mono::one()).cloned(),
            _ => None,
        }
    }

    pub fn add_term(&mut self, m: Mono, c: Q) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add_assign_scaled(&mut self, other: &Poly, c: &Q) {
        if c.is_zero() {
            return;
        }
        for (m, k) in other.terms.iter() {
            self.add_term(m.clone(), k * c);
        }
    }

    pub fn scale(&self, c: &Q) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    pub fn mul_mono(&self, m: &Mono, c: &Q) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(n, k)| (n.mul(m), k * c))
                .collect(),
        }
    }

    /// Product without any normalisation of the resulting monomials.
    pub fn mul_raw(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m, a) in self.terms.iter() {
            for (n, b) in other.terms.iter() {
                out.add_term(m.mul(n), a * b);
            }
        }
        out
    }

    pub fn degree_in(&self, a: &Atom) -> u32 {
        self.terms.keys().map(|m| m.exponent(a)).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    /// Coefficient of `a^k`, viewing the polynomial as univariate in `a`.
    pub fn coeff_of(&self, a: &Atom, k: u32) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in self.terms.iter() {
            if m.exponent(a) == k {
                out.terms.insert(m.with_exponent(a, 0), c.clone());
            }
        }
        out
    }

    /// Syntactic partial derivative with respect to one atom.
    pub fn diff_atom(&self, a: &Atom) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in self.terms.iter() {
            let e = m.exponent(a);
            if e > 0 {
                out.add_term(m.with_exponent(a, e - 1), c * Q::from_integer(e.into()));
            }
        }
        out
    }

    /// All atoms occurring at top level.
    pub fn atoms(&self) -> BTreeSet<Atom> {
        let mut s = BTreeSet::new();
        for m in self.terms.keys() {
            for (a, _) in m.0.iter() {
                s.insert(a.clone());
            }
        }
        s
    }

    pub fn contains_atom(&self, pred: &dyn Fn(&Atom) -> bool) -> bool {
        self.terms.keys().any(|m| {
            m.0.iter().any(|(a, _)| {
                pred(a)
                    || match a {
                        Atom::Fun(_, arg) => arg.contains_atom(pred),
                        _ => false,
                    }
            })
        })
    }

    /// Largest monomial dividing every term.
    pub fn mono_content(&self) -> Mono {
        let mut it = self.terms.keys();
        let Some(first) = it.next() else {
            return Mono::one();
        };
        let mut g = first.clone();
        for m in it {
            if g.is_one() {
                break;
            }
            g = g.gcd(m);
        }
        g
    }

    pub fn div_mono(&self, d: &Mono) -> Option<Poly> {
        let mut out = Poly::zero();
        for (m, c) in self.terms.iter() {
            out.terms.insert(m.div(d)?, c.clone());
        }
        Some(out)
    }

    /// Terms in print order: higher total degree first, then descending monomial order.
    pub fn sorted_terms(&self) -> Vec<(&Mono, &Q)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|(a, _), (b, _)| b.degree().cmp(&a.degree()).then_with(|| b.cmp(a)));
        v
    }

    /// Leading coefficient in print order (zero for the zero polynomial).
    pub fn lead_coeff(&self) -> Q {
        self.sorted_terms()
            .first()
            .map(|(_, c)| (*c).clone())
            .unwrap_or_else(Q::zero)
    }

    /// Rational content: positive gcd of numerators over lcm of denominators.
    pub fn rational_content(&self) -> Q {
        use num_integer::Integer;
        let mut num = num_bigint::BigInt::zero();
        let mut den = num_bigint::BigInt::one();
        for c in self.terms.values() {
            num = num.gcd(c.numer());
            den = den.lcm(c.denom());
        }
        if num.is_zero() {
            return Q::one();
        }
        Q::new(num.abs(), den)
    }

    /// True when the two polynomials differ by a nonzero rational factor.
    pub fn proportional(&self, other: &Poly) -> Option<Q> {
        if self.len() != other.len() || self.is_zero() {
            return None;
        }
        let mut ratio: Option<Q> = None;
        for ((m, a), (n, b)) in self.terms.iter().zip(other.terms.iter()) {
            if m != n {
                return None;
            }
            let r = a / b;
            match &ratio {
                None => ratio = Some(r),
                Some(x) if *x != r => return None,
                _ => {}
            }
        }
        ratio
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        out.add_assign_scaled(rhs, &Q::one());
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        out.add_assign_scaled(rhs, &-Q::one());
        out
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(&-Q::one())
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(mut self, rhs: Poly) -> Poly {
        for (m, c) in rhs.terms {
            self.add_term(m, c);
        }
        self
    }
}

impl Sub for Poly {
    type Output = Poly;
    fn sub(mut self, rhs: Poly) -> Poly {
        for (m, c) in rhs.terms {
            self.add_term(m, -c);
        }
        self
    }
}

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(&-Q::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::q;

    fn x() -> Atom {
        Atom::Var(0)
    }

    #[test]
    fn mono_mul_merges() {
        let a = Mono::atom(x(), 2).mul(&Mono::atom(Atom::Var(1), 1));
        let b = Mono::atom(x(), 1);
        assert_eq!(a.mul(&b).exponent(&x()), 3);
        assert_eq!(a.mul(&b).degree(), 4);
    }

    #[test]
    fn cancellation_gives_empty_sum() {
        let p = Poly::atom(x());
        assert!((&p - &p).is_zero());
    }

    #[test]
    fn coeff_extraction() {
        let p = Poly::term(q(3), Mono::atom(x(), 2)) + Poly::constant(q(1));
        assert_eq!(p.coeff_of(&x(), 2), Poly::constant(q(3)));
        assert_eq!(p.degree_in(&x()), 2);
        assert_eq!(p.diff_atom(&x()), Poly::term(q(6), Mono::atom(x(), 1)));
    }
}
