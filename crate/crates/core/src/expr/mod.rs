//! Exact expression kernel.
//!
//! Expressions are sparse polynomials with rational coefficients over atoms:
//! coordinates, parameters, jets of function symbols and closed-function
//! applications. All canonicalisation that depends on declarations (parameter
//! side relations) goes through a [`Space`].

mod deriv;
mod frac;
pub mod gcd;
mod poly;
mod space;
mod subst;

pub use frac::Frac;
pub use poly::{Mono, Poly};
pub use space::{Arg, FuncDecl, FuncRole, ParamDecl, Relation, Space};
pub use subst::Binding;

use num_bigint::BigInt;
use num_rational::BigRational;
use smallvec::SmallVec;
use std::sync::Arc;

/// Exact rational coefficient.
pub type Q = BigRational;

/// Multi-index over the declared arguments of a function symbol.
pub type Idx = SmallVec<[u8; 4]>;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qf(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Closed transcendental functions with derivative closure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Closed {
    Exp,
    Tan,
    Tanh,
    Coth,
    Sech,
    Csch,
}

impl Closed {
    pub const ALL: [Closed; 6] = [
        Closed::Exp,
        Closed::Tan,
        Closed::Tanh,
        Closed::Coth,
        Closed::Sech,
        Closed::Csch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Closed::Exp => "exp",
            Closed::Tan => "tan",
            Closed::Tanh => "tanh",
            Closed::Coth => "coth",
            Closed::Sech => "sech",
            Closed::Csch => "csch",
        }
    }

    pub fn from_name(s: &str) -> Option<Closed> {
        Closed::ALL.iter().copied().find(|c| c.name() == s)
    }
}

/// An indeterminate of the polynomial ring.
///
/// The derived order is the canonical atom order: coordinates, then
/// parameters, then jets, then closed functions.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Var(u16),
    Param(u16),
    Jet(u16, Idx),
    Fun(Closed, Arc<Poly>),
}

impl Atom {
    pub fn jet(f: usize, alpha: &[u8]) -> Atom {
        Atom::Jet(f as u16, Idx::from_slice(alpha))
    }

    pub fn order(&self) -> u32 {
        match self {
            Atom::Jet(_, a) => a.iter().map(|&k| k as u32).sum(),
            _ => 0,
        }
    }

    pub fn func(&self) -> Option<usize> {
        match self {
            Atom::Jet(f, _) => Some(*f as usize),
            _ => None,
        }
    }
}
