use super::{Poly, Q, Space};
use crate::error::Error;
use num_traits::One;
use std::collections::BTreeMap;

/// Quotient `num / prod(den_i ^ e_i)` with the denominator kept factored.
///
/// No cancellation is attempted: a fraction is zero iff its numerator is.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Frac {
    pub num: Poly,
    pub den: BTreeMap<Poly, u32>,
}

impl From<Poly> for Frac {
    fn from(p: Poly) -> Frac {
        Frac {
            num: p,
            den: BTreeMap::new(),
        }
    }
}

impl Frac {
    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_poly(&self) -> bool {
        self.den.is_empty()
    }

    pub fn into_poly(self) -> Result<Poly, Error> {
        if self.den.is_empty() {
            Ok(self.num)
        } else {
            Err(Error::NotPolynomial)
        }
    }

    fn den_poly(sp: &Space, den: &BTreeMap<Poly, u32>) -> Poly {
        let mut out = Poly::one();
        for (f, e) in den {
            out = sp.mul(&out, &sp.pow(f, *e));
        }
        out
    }

    /// Brings both operands over the common denominator (max exponents).
    fn align(sp: &Space, a: &Frac, b: &Frac) -> (Poly, Poly, BTreeMap<Poly, u32>) {
        let mut den = a.den.clone();
        for (f, e) in &b.den {
            let x = den.entry(f.clone()).or_insert(0);
            *x = (*x).max(*e);
        }
        let lift = |fr: &Frac| {
            let mut extra = BTreeMap::new();
            for (f, e) in &den {
                let have = fr.den.get(f).copied().unwrap_or(0);
                if *e > have {
                    extra.insert(f.clone(), e - have);
                }
            }
            sp.mul(&fr.num, &Frac::den_poly(sp, &extra))
        };
        (lift(a), lift(b), den)
    }

    pub fn add(sp: &Space, a: &Frac, b: &Frac) -> Frac {
        if a.den == b.den {
            return Frac {
                num: &a.num + &b.num,
                den: a.den.clone(),
            };
        }
        let (x, y, den) = Frac::align(sp, a, b);
        Frac { num: x + y, den }
    }

    pub fn neg(&self) -> Frac {
        Frac {
            num: -&self.num,
            den: self.den.clone(),
        }
    }

    pub fn sub(sp: &Space, a: &Frac, b: &Frac) -> Frac {
        Frac::add(sp, a, &b.neg())
    }

    pub fn mul(sp: &Space, a: &Frac, b: &Frac) -> Frac {
        let mut den = a.den.clone();
        for (f, e) in &b.den {
            *den.entry(f.clone()).or_insert(0) += e;
        }
        Frac {
            num: sp.mul(&a.num, &b.num),
            den,
        }
    }

    pub fn pow(sp: &Space, a: &Frac, e: u32) -> Frac {
        Frac {
            num: sp.pow(&a.num, e),
            den: a.den.iter().map(|(f, k)| (f.clone(), k * e)).collect(),
        }
    }

    /// Division; invertible denominators (constants, parameters with side
    /// relations) are folded into the numerator.
    pub fn div(sp: &Space, a: &Frac, b: &Frac) -> Result<Frac, Error> {
        if b.num.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let mut out = Frac {
            num: sp.mul(&a.num, &Frac::den_poly(sp, &b.den)),
            den: a.den.clone(),
        };
        match sp.try_inverse(&b.num) {
            Some(inv) => out.num = sp.mul(&out.num, &inv),
            None => {
                let (c, prim) = sp.primitive(&b.num);
                out.num = out.num.scale(&(Q::one() / c));
                *out.den.entry(prim).or_insert(0) += 1;
            }
        }
        Ok(out)
    }

    /// Total derivative by coordinate `c`.
    pub fn total_derivative(&self, sp: &Space, c: usize) -> Frac {
        // d(N / prod f^e) = (N' prod f - N sum e f' prod_{g != f} g) / prod f^{e+1}
        if self.den.is_empty() {
            return Frac::from(sp.total_derivative(&self.num, c));
        }
        let facs: Vec<(&Poly, u32)> = self.den.iter().map(|(f, e)| (f, *e)).collect();
        let all = facs.iter().fold(Poly::one(), |acc, (f, _)| sp.mul(&acc, f));
        let mut num = sp.mul(&sp.total_derivative(&self.num, c), &all);
        for (i, (f, e)) in facs.iter().enumerate() {
            let df = sp.total_derivative(f, c);
            if df.is_zero() {
                continue;
            }
            let others = facs
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .fold(Poly::one(), |acc, (_, (g, _))| sp.mul(&acc, g));
            let term = sp.mul(&sp.mul(&self.num, &df), &others);
            num = num - term.scale(&Q::from_integer((*e).into()));
        }
        let den = self.den.iter().map(|(f, e)| (f.clone(), e + 1)).collect();
        Frac { num, den }
    }

    /// `D^beta` over coordinates `coords`.
    pub fn total_derivative_multi(&self, sp: &Space, coords: &[usize], beta: &[u8]) -> Frac {
        let mut out = self.clone();
        for (k, &n) in beta.iter().enumerate() {
            for _ in 0..n {
                out = out.total_derivative(sp, coords[k]);
            }
        }
        out
    }
}

impl Space {
    /// Evaluates `p` with some atoms replaced by fractions.
    pub fn eval_frac(&self, p: &Poly, f: &dyn Fn(&super::Atom) -> Option<Frac>) -> Frac {
        let mut out = Frac::default();
        for (m, c) in p.terms() {
            let mut acc = Frac::from(Poly::constant(c.clone()));
            let mut keep = super::Mono::one();
            for (a, e) in m.factors() {
                match f(a) {
                    Some(v) => acc = Frac::mul(self, &acc, &Frac::pow(self, &v, *e)),
                    None => keep = keep.mul(&super::Mono::atom(a.clone(), *e)),
                }
            }
            acc.num = self.mul(&acc.num, &Poly::term(Q::one(), keep));
            out = Frac::add(self, &out, &acc);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::q;

    #[test]
    fn quotient_rule() {
        let mut s = Space::default();
        s.add_var("x");
        let x = s.var("x").unwrap();
        // d/dx (1/x) = -1/x^2
        let f = Frac::div(&s, &Frac::from(Poly::one()), &Frac::from(x.clone())).unwrap();
        let d = f.total_derivative(&s, 0);
        let back = Frac::mul(&s, &d, &Frac::from(s.mul(&x, &x)));
        let mut den = Poly::one();
        for (g, e) in &back.den {
            den = s.mul(&den, &s.pow(g, *e));
        }
        assert_eq!(back.num, -den);
        let _ = q(1);
    }
}
