use super::{q, Atom, Closed, Idx, Mono, Poly, Q};
use crate::error::Error;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Univariate side relation `s^degree = sum lower[k] s^k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub degree: u32,
    pub lower: Vec<Q>,
}

impl Relation {
    /// Builds the relation from the coefficients of `sum c[k] s^k = 0`.
    pub fn from_coeffs(c: &[Q]) -> Option<Relation> {
        let n = c.iter().rposition(|x| !x.is_zero())?;
        if n == 0 {
            return None;
        }
        let lead = &c[n];
        let lower = c[..n].iter().map(|x| -x / lead).collect();
        Some(Relation {
            degree: n as u32,
            lower,
        })
    }

    /// Coefficients of `1/s` as a polynomial in `s`, if `s` is invertible.
    fn inverse(&self) -> Option<Vec<Q>> {
        // s^n - sum lower[k] s^k = 0  =>  s * (s^{n-1} - sum_{k>=1} lower[k] s^{k-1}) = lower[0]
        let c0 = self.lower.first()?.clone();
        if c0.is_zero() {
            return None;
        }
        let n = self.degree as usize;
        let mut v = vec![Q::zero(); n];
        v[n - 1] = Q::one();
        for k in 1..n {
            v[k - 1] -= &self.lower[k];
        }
        Some(v.into_iter().map(|x| x / &c0).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamDecl {
    pub name: String,
    pub relation: Option<Relation>,
}

/// Argument of a function symbol: a coordinate, or the value of another
/// function (a dependent variable, at jet level).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Arg {
    Var(u16),
    Func(u16),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FuncRole {
    /// Dependent variable of a PDE (jet level only).
    Dependent,
    /// Infinitesimal of a symmetry generator.
    Unknown,
    /// Arbitrary function with no assumed relations.
    Opaque,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuncDecl {
    pub name: String,
    pub args: Vec<Arg>,
    pub role: FuncRole,
}

/// Declarations shared by every expression of one ring.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Space {
    pub vars: Vec<String>,
    pub params: Vec<ParamDecl>,
    pub funcs: Vec<FuncDecl>,
}

impl Space {
    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    pub fn func_index(&self, name: &str) -> Option<usize> {
        self.funcs.iter().position(|f| f.name == name)
    }

    pub fn var(&self, name: &str) -> Result<Poly, Error> {
        self.var_index(name)
            .map(|i| Poly::atom(Atom::Var(i as u16)))
            .ok_or_else(|| Error::Name(name.to_string()))
    }

    pub fn param(&self, name: &str) -> Result<Poly, Error> {
        self.param_index(name)
            .map(|i| Poly::atom(Atom::Param(i as u16)))
            .ok_or_else(|| Error::Name(name.to_string()))
    }

    /// Jet `name` differentiated once by each listed argument name.
    pub fn jet(&self, name: &str, by: &[&str]) -> Result<Poly, Error> {
        let f = self
            .func_index(name)
            .ok_or_else(|| Error::Name(name.to_string()))?;
        let mut alpha = Idx::from_elem(0, self.funcs[f].args.len());
        for b in by {
            let k = self
                .arg_names(f)
                .iter()
                .position(|a| a == b)
                .ok_or_else(|| Error::Name(format!("{name}_{b}")))?;
            alpha[k] += 1;
        }
        Ok(Poly::atom(Atom::Jet(f as u16, alpha)))
    }

    pub fn arg_name(&self, a: Arg) -> &str {
        match a {
            Arg::Var(v) => &self.vars[v as usize],
            Arg::Func(g) => &self.funcs[g as usize].name,
        }
    }

    pub fn arg_names(&self, f: usize) -> Vec<String> {
        self.funcs[f]
            .args
            .iter()
            .map(|a| self.arg_name(*a).to_string())
            .collect()
    }

    pub fn add_var(&mut self, name: &str) -> usize {
        self.vars.push(name.to_string());
        self.vars.len() - 1
    }

    pub fn add_param(&mut self, name: &str, relation: Option<Relation>) -> usize {
        self.params.push(ParamDecl {
            name: name.to_string(),
            relation,
        });
        self.params.len() - 1
    }

    pub fn add_func(&mut self, name: &str, args: Vec<Arg>, role: FuncRole) -> usize {
        self.funcs.push(FuncDecl {
            name: name.to_string(),
            args,
            role,
        });
        self.funcs.len() - 1
    }

    pub fn is_name_taken(&self, name: &str) -> bool {
        self.var_index(name).is_some()
            || self.param_index(name).is_some()
            || self.func_index(name).is_some()
    }

    /// Canonical form of `c * m`.
    pub fn normalize_mono(&self, c: Q, m: &Mono) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        let mut rest = Mono::one();
        let mut pending: Vec<Poly> = Vec::new();
        let mut exp_arg = Poly::zero();
        let mut has_exp = false;
        for (a, e) in m.0.iter() {
            let e = *e;
            match a {
                Atom::Param(i) => match &self.params[*i as usize].relation {
                    Some(rel) if e >= rel.degree => {
                        let n = rel.degree;
                        rest = rest.mul(&Mono::atom(a.clone(), e % n));
                        let mut lower = Poly::zero();
                        for (k, ck) in rel.lower.iter().enumerate() {
                            lower.add_term(Mono::atom(a.clone(), k as u32), ck.clone());
                        }
                        for _ in 0..e / n {
                            pending.push(lower.clone());
                        }
                    }
                    _ => rest = rest.mul(&Mono::atom(a.clone(), e)),
                },
                Atom::Fun(Closed::Exp, arg) => {
                    has_exp = true;
                    exp_arg.add_assign_scaled(arg, &Q::from_integer(e.into()));
                }
                Atom::Fun(Closed::Sech, arg) if e >= 2 => {
                    rest = rest.mul(&Mono::atom(a.clone(), e % 2));
                    let th = Poly::atom(Atom::Fun(Closed::Tanh, arg.clone()));
                    let rel = Poly::one() - th.mul_raw(&th);
                    for _ in 0..e / 2 {
                        pending.push(rel.clone());
                    }
                }
                Atom::Fun(Closed::Csch, arg) if e >= 2 => {
                    rest = rest.mul(&Mono::atom(a.clone(), e % 2));
                    let ct = Poly::atom(Atom::Fun(Closed::Coth, arg.clone()));
                    let rel = ct.mul_raw(&ct) - Poly::one();
                    for _ in 0..e / 2 {
                        pending.push(rel.clone());
                    }
                }
                _ => rest = rest.mul(&Mono::atom(a.clone(), e)),
            }
        }
        if has_exp && !exp_arg.is_zero() {
            rest = rest.mul(&Mono::atom(Atom::Fun(Closed::Exp, Arc::new(exp_arg)), 1));
        }
        let mut out = Poly::term(c, rest);
        for p in pending {
            out = self.mul(&out, &p);
        }
        out
    }

    pub fn normalize(&self, p: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in p.terms.iter() {
            out = out + self.normalize_mono(c.clone(), m);
        }
        out
    }

    fn needs_normalizing(&self, m: &Mono) -> bool {
        let mut exps = 0;
        for (a, e) in m.0.iter() {
            match a {
                Atom::Param(i) => {
                    if let Some(rel) = &self.params[*i as usize].relation {
                        if *e >= rel.degree {
                            return true;
                        }
                    }
                }
                Atom::Fun(Closed::Exp, _) => {
                    exps += 1;
                    if *e > 1 || exps > 1 {
                        return true;
                    }
                }
                Atom::Fun(Closed::Sech | Closed::Csch, _) if *e >= 2 => return true,
                _ => {}
            }
        }
        false
    }

    pub fn mul(&self, a: &Poly, b: &Poly) -> Poly {
        let mut out = Poly::zero();
        let mut fix = Vec::new();
        for (m, x) in a.terms.iter() {
            for (n, y) in b.terms.iter() {
                let mn = m.mul(n);
                if self.needs_normalizing(&mn) {
                    fix.push((mn, x * y));
                } else {
                    out.add_term(mn, x * y);
                }
            }
        }
        for (mn, c) in fix {
            out = out + self.normalize_mono(c, &mn);
        }
        out
    }

    pub fn pow(&self, a: &Poly, e: u32) -> Poly {
        let mut out = Poly::one();
        let mut base = a.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                out = self.mul(&out, &base);
            }
            e >>= 1;
            if e > 0 {
                base = self.mul(&base, &base);
            }
        }
        out
    }

    /// Closed function applied to a normalised argument.
    pub fn fun(&self, kind: Closed, arg: Poly) -> Poly {
        if arg.is_zero() {
            return match kind {
                Closed::Exp | Closed::Sech => Poly::one(),
                Closed::Tan | Closed::Tanh => Poly::zero(),
                Closed::Coth | Closed::Csch => Poly::atom(Atom::Fun(kind, Arc::new(arg))),
            };
        }
        Poly::atom(Atom::Fun(kind, Arc::new(arg)))
    }

    /// `1/p` when `p` is a nonzero constant times a product of invertible parameters.
    pub fn try_inverse(&self, p: &Poly) -> Option<Poly> {
        if p.len() != 1 {
            return None;
        }
        let (m, c) = p.terms.iter().next()?;
        let mut out = Poly::constant(Q::one() / c);
        for (a, e) in m.0.iter() {
            let Atom::Param(i) = a else { return None };
            let inv = self.params[*i as usize].relation.as_ref()?.inverse()?;
            let mut ip = Poly::zero();
            for (k, ck) in inv.iter().enumerate() {
                ip.add_term(Mono::atom(a.clone(), k as u32), ck.clone());
            }
            out = self.mul(&out, &self.pow(&ip, *e));
        }
        Some(out)
    }

    /// Primitive integer form with positive leading coefficient, and the
    /// factor removed (`p = factor * result`).
    pub fn primitive(&self, p: &Poly) -> (Q, Poly) {
        if p.is_zero() {
            return (Q::one(), Poly::zero());
        }
        let mut c = p.rational_content();
        if p.lead_coeff() < Q::zero() {
            c = -c;
        }
        (c.clone(), p.scale(&(Q::one() / c)))
    }

    pub fn constant(&self, n: i64) -> Poly {
        Poly::constant(q(n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::qf;

    fn sp() -> Space {
        let mut s = Space::default();
        s.add_var("T");
        s.add_param("r2", Relation::from_coeffs(&[q(-2), q(0), q(1)]));
        s
    }

    #[test]
    fn side_relation_reduces_powers() {
        let s = sp();
        let r2 = s.param("r2").unwrap();
        assert_eq!(s.mul(&r2, &r2), Poly::constant(q(2)));
        assert_eq!(s.pow(&r2, 3), r2.scale(&q(2)));
    }

    #[test]
    fn inverse_of_root_two() {
        let s = sp();
        let r2 = s.param("r2").unwrap();
        let inv = s.try_inverse(&r2).unwrap();
        assert_eq!(inv, r2.scale(&qf(1, 2)));
        assert_eq!(s.mul(&inv, &r2), Poly::one());
    }

    #[test]
    fn sech_squared_closure() {
        let s = sp();
        let t = s.var("T").unwrap();
        let sech = s.fun(Closed::Sech, t.clone());
        let tanh = s.fun(Closed::Tanh, t);
        let e = s.mul(&sech, &sech) + s.mul(&tanh, &tanh) - Poly::one();
        assert!(e.is_zero());
    }

    #[test]
    fn exp_products_combine() {
        let s = sp();
        let t = s.var("T").unwrap();
        let a = s.fun(Closed::Exp, t.clone());
        let b = s.fun(Closed::Exp, t.scale(&q(-1)));
        assert_eq!(s.mul(&a, &b), Poly::one());
        assert_eq!(s.mul(&a, &a), s.fun(Closed::Exp, t.scale(&q(2))));
    }
}
