//! Exact division and gcd in the free polynomial ring over the atoms.
//!
//! Atoms are treated as independent indeterminates; no side relations are
//! applied. A factor found here is a factor in every quotient ring too.

use super::{Atom, Mono, Poly, Q};
use num_traits::One;

fn main_atom(p: &Poly) -> Option<Atom> {
    p.atoms().into_iter().next_back()
}

fn pow_atom(a: &Atom, e: u32) -> Poly {
    Poly::term(Q::one(), Mono::atom(a.clone(), e))
}

/// `a / b` if `b` divides `a` exactly.
pub fn div_exact(a: &Poly, b: &Poly) -> Option<Poly> {
    if b.is_zero() {
        return None;
    }
    if let Some(c) = b.as_constant() {
        return Some(a.scale(&(Q::one() / c)));
    }
    let x = main_atom(b)?;
    let db = b.degree_in(&x);
    let lb = b.coeff_of(&x, db);
    let mut q = Poly::zero();
    let mut r = a.clone();
    while !r.is_zero() {
        let dr = r.degree_in(&x);
        if dr < db {
            return None;
        }
        let t = div_exact(&r.coeff_of(&x, dr), &lb)?.mul_raw(&pow_atom(&x, dr - db));
        r = &r - &t.mul_raw(b);
        q = q + t;
    }
    Some(q)
}

/// Gcd of the coefficients of `p` viewed as univariate in `x`.
fn content_in(p: &Poly, x: &Atom) -> Poly {
    let mut g = Poly::zero();
    for k in (0..=p.degree_in(x)).rev() {
        let c = p.coeff_of(x, k);
        if c.is_zero() {
            continue;
        }
        g = gcd(&g, &c);
        if g.as_constant().is_some() {
            return Poly::one();
        }
    }
    g
}

/// Pseudo-remainder of `a` by `b` as univariate polynomials in `x`.
fn prem_in(a: &Poly, b: &Poly, x: &Atom) -> Poly {
    let db = b.degree_in(x);
    let lb = b.coeff_of(x, db);
    let rest = b - &lb.mul_raw(&pow_atom(x, db));
    let mut r = a.clone();
    loop {
        let dr = r.degree_in(x);
        if r.is_zero() || dr < db {
            return r;
        }
        let lr = r.coeff_of(x, dr);
        let top = lr.mul_raw(&pow_atom(x, dr));
        // lb * r - lr * x^(dr-db) * b, with the x^dr terms cancelling
        r = &lb.mul_raw(&(&r - &top)) - &lr.mul_raw(&pow_atom(x, dr - db)).mul_raw(&rest);
    }
}

/// Leading rational coefficient made 1.
fn monic(p: &Poly) -> Poly {
    match p.sorted_terms().first() {
        Some((_, c)) => p.scale(&(Q::one() / *c)),
        None => Poly::zero(),
    }
}

/// Rational content divided out, so remainder sequences keep small numbers.
fn unit_content(p: &Poly) -> Poly {
    p.scale(&(Q::one() / p.rational_content()))
}

/// Greatest common divisor, normalized so its leading coefficient is 1.
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return monic(b);
    }
    if b.is_zero() {
        return monic(a);
    }
    if a.as_constant().is_some() || b.as_constant().is_some() {
        return Poly::one();
    }
    let mono = a.mono_content().gcd(&b.mono_content());
    let a = a.div_mono(&a.mono_content()).expect("content divides");
    let b = b.div_mono(&b.mono_content()).expect("content divides");
    let g = gcd_primitive(&a, &b);
    monic(&g.mul_mono(&mono, &Q::one()))
}

fn gcd_primitive(a: &Poly, b: &Poly) -> Poly {
    if a.as_constant().is_some() || b.as_constant().is_some() {
        return Poly::one();
    }
    let x = std::cmp::max(main_atom(a), main_atom(b)).expect("nonconstant");
    let (da, dbg) = (a.degree_in(&x), b.degree_in(&x));
    if da == 0 {
        return gcd(a, &content_in(b, &x));
    }
    if dbg == 0 {
        return gcd(&content_in(a, &x), b);
    }
    let ca = content_in(a, &x);
    let cb = content_in(b, &x);
    let gc = gcd(&ca, &cb);
    let mut p = unit_content(&div_exact(a, &ca).expect("content divides"));
    let mut q = unit_content(&div_exact(b, &cb).expect("content divides"));
    if p.degree_in(&x) < q.degree_in(&x) {
        std::mem::swap(&mut p, &mut q);
    }
    while q.degree_in(&x) > 0 {
        let r = prem_in(&p, &q, &x);
        if r.is_zero() {
            break;
        }
        p = q;
        let cr = content_in(&r, &x);
        q = unit_content(&div_exact(&r, &cr).expect("content divides"));
    }
    if q.degree_in(&x) == 0 {
        return gc;
    }
    gc.mul_raw(&q)
}

const GCD_TERM_LIMIT: usize = 40;

/// Gcd of the coefficients of `p` after grouping by the part of each
/// monomial outside `base`: the largest factor of `p` whose atoms all
/// satisfy `base`. Large coefficients only get their monomial content.
pub fn base_content(p: &Poly, base: &dyn Fn(&Atom) -> bool) -> Poly {
    let mut groups: std::collections::BTreeMap<Mono, Poly> = Default::default();
    for (m, c) in p.terms() {
        let (inner, outer) = m.split(base);
        groups.entry(outer).or_default().add_term(inner, c.clone());
    }
    let mut coeffs: Vec<Poly> = groups.into_values().collect();
    coeffs.sort_by_key(|c| c.len());
    // a monomial coefficient leaves only monomial content; past a size
    // bound the gcd costs more than the content saves, so stop there too
    if coeffs.first().is_some_and(|c| c.len() == 1 || c.len() > GCD_TERM_LIMIT) {
        let m = coeffs
            .iter()
            .map(|c| c.mono_content())
            .reduce(|a, b| a.gcd(&b))
            .unwrap_or_else(Mono::one);
        return Poly::term(Q::one(), m);
    }
    let mut g = Poly::zero();
    for c in &coeffs {
        g = gcd(&g, c);
        if g.as_constant().is_some() {
            return Poly::one();
        }
    }
    if g.is_zero() {
        Poly::one()
    } else {
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::q;

    fn v(i: u16) -> Poly {
        Poly::atom(Atom::Var(i))
    }

    #[test]
    fn gcd_of_products() {
        let (t, x, u) = (v(0), v(1), v(2));
        let a = (&x - &Poly::one()).mul_raw(&(&t + &u)).mul_raw(&u);
        let b = (&x - &Poly::one()).mul_raw(&(&t - &u)).mul_raw(&u).mul_raw(&u);
        let g = gcd(&a, &b);
        assert_eq!(g, (&x - &Poly::one()).mul_raw(&u));
        assert_eq!(div_exact(&a, &g).unwrap(), &t + &u);
        assert!(div_exact(&a, &(&t - &u)).is_none());
    }

    #[test]
    fn coprime_and_constants() {
        let (t, x) = (v(0), v(1));
        assert_eq!(gcd(&(&t + &x), &(&t - &x)), Poly::one());
        assert_eq!(gcd(&Poly::constant(q(6)), &t), Poly::one());
        assert_eq!(gcd(&t.scale(&q(3)), &Poly::zero()), t);
    }

    #[test]
    fn content_by_grouping() {
        let (t, x) = (v(0), v(1));
        let j = Poly::atom(Atom::jet(0, &[1, 0]));
        let s = &t.mul_raw(&t) - &x.mul_raw(&x);
        let p = s.mul_raw(&j) + (&t + &x).mul_raw(&t);
        let c = base_content(&p, &|a| matches!(a, Atom::Var(_)));
        assert_eq!(c, &t + &x);
    }
}
