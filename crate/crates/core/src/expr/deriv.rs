use super::{Arg, Atom, Closed, FuncRole, Idx, Mono, Poly, Q, Space};
use num_traits::One;

impl Space {
    /// Total derivative of one atom with respect to coordinate `c`.
    pub fn d_atom(&self, a: &Atom, c: usize) -> Poly {
        match a {
            Atom::Var(v) => {
                if *v as usize == c {
                    Poly::one()
                } else {
                    Poly::zero()
                }
            }
            Atom::Param(_) => Poly::zero(),
            Atom::Jet(f, alpha) => {
                let mut out = Poly::zero();
                for (k, arg) in self.funcs[*f as usize].args.iter().enumerate() {
                    let darg = match arg {
                        Arg::Var(v) => {
                            if *v as usize == c {
                                Poly::one()
                            } else {
                                continue;
                            }
                        }
                        Arg::Func(g) => {
                            let zero = Idx::from_elem(0, self.funcs[*g as usize].args.len());
                            self.d_atom(&Atom::Jet(*g, zero), c)
                        }
                    };
                    if darg.is_zero() {
                        continue;
                    }
                    let mut beta = alpha.clone();
                    beta[k] += 1;
                    out = out + self.mul(&darg, &Poly::atom(Atom::Jet(*f, beta)));
                }
                out
            }
            Atom::Fun(kind, arg) => {
                let da = self.total_derivative(arg, c);
                if da.is_zero() {
                    return Poly::zero();
                }
                self.mul(&da, &self.closed_derivative(*kind, arg))
            }
        }
    }

    /// Derivative of a closed function with respect to its argument.
    pub fn closed_derivative(&self, kind: Closed, arg: &std::sync::Arc<Poly>) -> Poly {
        let me = Poly::atom(Atom::Fun(kind, arg.clone()));
        let sq = |p: &Poly| self.mul(p, p);
        match kind {
            Closed::Exp => me,
            Closed::Tan => Poly::one() + sq(&me),
            Closed::Tanh | Closed::Coth => Poly::one() - sq(&me),
            Closed::Sech => {
                let th = Poly::atom(Atom::Fun(Closed::Tanh, arg.clone()));
                -self.mul(&me, &th)
            }
            Closed::Csch => {
                let ct = Poly::atom(Atom::Fun(Closed::Coth, arg.clone()));
                -self.mul(&me, &ct)
            }
        }
    }

    /// Total derivative `D_c`; dependents and function symbols are treated as
    /// functions of their declared arguments.
    pub fn total_derivative(&self, p: &Poly, c: usize) -> Poly {
        self.derive_with(p, &|a| self.d_atom(a, c))
    }

    /// Applies `D^beta` where `beta[k]` counts derivatives by coordinate `coords[k]`.
    pub fn total_derivative_multi(&self, p: &Poly, coords: &[usize], beta: &[u8]) -> Poly {
        let mut out = p.clone();
        for (k, &n) in beta.iter().enumerate() {
            for _ in 0..n {
                out = self.total_derivative(&out, coords[k]);
            }
        }
        out
    }

    /// Product-rule derivation driven by a per-atom derivative.
    fn derive_with(&self, p: &Poly, d: &dyn Fn(&Atom) -> Poly) -> Poly {
        let mut out = Poly::zero();
        let mut cache: Vec<(Atom, Poly)> = Vec::new();
        for (m, c) in p.terms() {
            for (a, e) in m.factors() {
                let da = match cache.iter().find(|(b, _)| b == a) {
                    Some((_, v)) => v.clone(),
                    None => {
                        let v = d(a);
                        cache.push((a.clone(), v.clone()));
                        v
                    }
                };
                if da.is_zero() {
                    continue;
                }
                let rest = m.with_exponent(a, e - 1);
                let k = c * Q::from_integer((*e).into());
                out = out + self.mul(&da, &Poly::term(k, rest));
            }
        }
        out
    }

    /// Partial derivative with respect to a jet coordinate (a coordinate
    /// `Var`, or a jet of a dependent), following function arguments that
    /// refer to it.
    pub fn partial_coord(&self, p: &Poly, coord: &Atom) -> Poly {
        self.derive_with(p, &|a| self.partial_atom(a, coord))
    }

    fn partial_atom(&self, a: &Atom, coord: &Atom) -> Poly {
        if a == coord {
            return Poly::one();
        }
        match a {
            Atom::Jet(f, alpha) => {
                // jets of dependents are coordinates in their own right
                if self.funcs[*f as usize].role == FuncRole::Dependent {
                    return Poly::zero();
                }
                let mut out = Poly::zero();
                for (k, arg) in self.funcs[*f as usize].args.iter().enumerate() {
                    let hit = match (arg, coord) {
                        (Arg::Var(v), Atom::Var(w)) => v == w,
                        (Arg::Func(g), Atom::Jet(h, beta)) => {
                            g == h && beta.iter().all(|&b| b == 0)
                        }
                        _ => false,
                    };
                    if hit {
                        let mut beta = alpha.clone();
                        beta[k] += 1;
                        out = out + Poly::atom(Atom::Jet(*f, beta));
                    }
                }
                out
            }
            Atom::Fun(kind, arg) => {
                let da = self.partial_coord(arg, coord);
                if da.is_zero() {
                    return Poly::zero();
                }
                self.mul(&da, &self.closed_derivative(*kind, arg))
            }
            _ => Poly::zero(),
        }
    }

    /// Replaces each atom for which `f` returns a value, recursing into
    /// closed-function arguments. The result is normalised.
    pub fn map_atoms(&self, p: &Poly, f: &dyn Fn(&Atom) -> Option<Poly>) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in p.terms() {
            let mut acc = Poly::constant(c.clone());
            let mut keep = Mono::one();
            for (a, e) in m.factors() {
                let rep = match f(a) {
                    Some(v) => Some(v),
                    None => match a {
                        Atom::Fun(kind, arg) => {
                            let na = self.map_atoms(arg, f);
                            if na == **arg {
                                None
                            } else {
                                Some(self.fun(*kind, na))
                            }
                        }
                        _ => None,
                    },
                };
                match rep {
                    Some(v) => acc = self.mul(&acc, &self.pow(&v, *e)),
                    None => keep = keep.mul(&Mono::atom(a.clone(), *e)),
                }
                if acc.is_zero() {
                    break;
                }
            }
            if !acc.is_zero() {
                out = out + self.mul(&acc, &Poly::term(Q::one(), keep));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::q;

    fn jet_space() -> Space {
        let mut s = Space::default();
        let t = s.add_var("t") as u16;
        let x = s.add_var("x") as u16;
        let u = s.add_func("u", vec![Arg::Var(t), Arg::Var(x)], FuncRole::Dependent) as u16;
        s.add_func("f", vec![Arg::Func(u)], FuncRole::Opaque);
        s.add_param("c1", None);
        s
    }

    #[test]
    fn product_rule() {
        let s = jet_space();
        let u = s.jet("u", &[]).unwrap();
        let ux = s.jet("u", &["x"]).unwrap();
        let uxx = s.jet("u", &["x", "x"]).unwrap();
        let d = s.total_derivative(&s.mul(&u, &ux), 1);
        assert_eq!(d, s.mul(&ux, &ux) + s.mul(&u, &uxx));
    }

    #[test]
    fn chain_rule_for_opaque() {
        let s = jet_space();
        let f = s.jet("f", &[]).unwrap();
        let fu = s.jet("f", &["u"]).unwrap();
        let ux = s.jet("u", &["x"]).unwrap();
        assert_eq!(s.total_derivative(&f, 1), s.mul(&fu, &ux));
    }

    #[test]
    fn tanh_closure() {
        let s = jet_space();
        let arg = s.mul(&s.param("c1").unwrap(), &s.var("t").unwrap());
        let th = s.fun(Closed::Tanh, arg);
        let d = s.total_derivative(&th, 0);
        let c1 = s.param("c1").unwrap();
        assert_eq!(d, c1.clone() - s.mul(&c1, &s.mul(&th, &th)));
    }

    #[test]
    fn mixed_partials_commute() {
        let s = jet_space();
        let e = s.mul(&s.jet("f", &[]).unwrap(), &s.jet("u", &["x"]).unwrap());
        let a = s.total_derivative(&s.total_derivative(&e, 0), 1);
        let b = s.total_derivative(&s.total_derivative(&e, 1), 0);
        assert_eq!(a, b);
        assert!(!a.is_zero());
        let _ = q(0);
    }
}
