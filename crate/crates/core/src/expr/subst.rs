use super::{Arg, Atom, Poly, Space};
use crate::error::Error;
use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};

/// A substitution rule `target -> value`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Binding {
    pub target: Atom,
    pub value: Poly,
}

impl Binding {
    pub fn new(target: Atom, value: Poly) -> Binding {
        Binding { target, value }
    }
}

fn is_derivative_of(a: &Atom, target: &Atom) -> bool {
    match (a, target) {
        (Atom::Jet(f, g), Atom::Jet(h, b)) => f == h && g.iter().zip(b.iter()).all(|(x, y)| x >= y),
        _ => a == target,
    }
}

struct Subst<'a> {
    sp: &'a Space,
    bindings: &'a [Binding],
    memo: RefCell<HashMap<Atom, Poly>>,
    active: RefCell<BTreeSet<Atom>>,
    error: RefCell<Option<Error>>,
}

impl<'a> Subst<'a> {
    fn reduce_atom(&self, a: &Atom) -> Option<Poly> {
        if self.error.borrow().is_some() {
            return None;
        }
        let b = self.bindings.iter().find(|b| is_derivative_of(a, &b.target))?;
        if let Some(v) = self.memo.borrow().get(a) {
            return Some(v.clone());
        }
        if !self.active.borrow_mut().insert(a.clone()) {
            *self.error.borrow_mut() = Some(Error::SubstitutionCycle(format!("{a:?}")));
            return None;
        }
        let value = if *a == b.target {
            self.full(&b.value)
        } else {
            let (Atom::Jet(f, gamma), Atom::Jet(_, beta)) = (a, &b.target) else {
                unreachable!()
            };
            let args = &self.sp.funcs[*f as usize].args;
            let k = (0..gamma.len())
                .find(|&k| gamma[k] > beta[k] && matches!(args[k], Arg::Var(_)));
            let Some(k) = k else {
                *self.error.borrow_mut() = Some(Error::SubstitutionCycle(format!(
                    "cannot differentiate binding along a non-coordinate argument for {a:?}"
                )));
                self.active.borrow_mut().remove(a);
                return None;
            };
            let Arg::Var(c) = args[k] else { unreachable!() };
            let mut prev = gamma.clone();
            prev[k] -= 1;
            let lower = self
                .reduce_atom(&Atom::Jet(*f, prev))
                .unwrap_or_else(Poly::zero);
            self.full(&self.sp.total_derivative(&lower, c as usize))
        };
        self.active.borrow_mut().remove(a);
        self.memo.borrow_mut().insert(a.clone(), value.clone());
        Some(value)
    }

    fn full(&self, p: &Poly) -> Poly {
        self.sp.map_atoms(p, &|a| self.reduce_atom(a))
    }
}

impl Space {
    /// Substitutes bindings into `e`. With consequences, a binding of
    /// `u_beta` also replaces every `u_gamma` with `gamma >= beta` by the
    /// corresponding derivative of the value, repeatedly until no bound
    /// derivative remains.
    pub fn substitute(
        &self,
        e: &Poly,
        bindings: &[Binding],
        with_consequences: bool,
    ) -> Result<Poly, Error> {
        for b in bindings {
            let t = b.target.clone();
            if b.value.contains_atom(&|a| is_derivative_of(a, &t)) {
                return Err(Error::SubstitutionCycle(format!("{t:?}")));
            }
        }
        if !with_consequences {
            return Ok(self.map_atoms(e, &|a| {
                bindings.iter().find(|b| b.target == *a).map(|b| b.value.clone())
            }));
        }
        let s = Subst {
            sp: self,
            bindings,
            memo: RefCell::new(HashMap::new()),
            active: RefCell::new(BTreeSet::new()),
            error: RefCell::new(None),
        };
        let out = s.full(e);
        match s.error.into_inner() {
            Some(err) => Err(err),
            None => Ok(out),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{FuncRole, Idx};

    fn sp() -> Space {
        let mut s = Space::default();
        let t = s.add_var("t") as u16;
        let x = s.add_var("x") as u16;
        let u = s.add_func("u", vec![Arg::Var(t), Arg::Var(x)], FuncRole::Dependent) as u16;
        let args = vec![Arg::Var(t), Arg::Var(x), Arg::Func(u)];
        s.add_func("xi", args.clone(), FuncRole::Unknown);
        s.add_func("eta", args, FuncRole::Unknown);
        s
    }

    fn target(s: &Space, name: &str, by: &[&str]) -> Atom {
        s.jet(name, by).unwrap().atoms().into_iter().next().unwrap()
    }

    #[test]
    fn invariant_surface_twice() {
        // u_tt under u_t -> eta - xi u_x equals D_t(eta - xi u_x) with the
        // inner u_t replaced again.
        let s = sp();
        let r = s.jet("eta", &[]).unwrap()
            - s.mul(&s.jet("xi", &[]).unwrap(), &s.jet("u", &["x"]).unwrap());
        let b = Binding::new(target(&s, "u", &["t"]), r.clone());
        let got = s
            .substitute(&s.jet("u", &["t", "t"]).unwrap(), std::slice::from_ref(&b), true)
            .unwrap();
        let once = s.total_derivative(&r, 0);
        let want = s.substitute(&once, std::slice::from_ref(&b), true).unwrap();
        assert_eq!(got, want);
        let ut = s.jet("u", &["t"]).unwrap().atoms().into_iter().next().unwrap();
        assert!(!got.atoms().contains(&ut));
        let utx = Atom::Jet(0, Idx::from_slice(&[1, 1]));
        assert!(!got.atoms().contains(&utx));
    }

    #[test]
    fn cycle_detected() {
        let s = sp();
        let ut = target(&s, "u", &["t"]);
        let b = Binding::new(ut, s.jet("u", &["t", "x"]).unwrap());
        assert!(matches!(
            s.substitute(&s.jet("u", &["t"]).unwrap(), &[b], true),
            Err(Error::SubstitutionCycle(_))
        ));
    }
}
