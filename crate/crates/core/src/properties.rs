//! Randomized checks of the reduction invariants, run by the corpus.
//!
//! Random polynomials live in a fixed space: coordinates `t, x, u`,
//! parameters `sigma` and `r2` (`r2^2 = 2`), closed atom `tanh(x)` and
//! unknowns `xi, eta` of `(t, x, u)`.

use crate::diffalg::{basic_set, prem, wu_chain, Chain, Rank, WuOptions};
use crate::error::Error;
use crate::expr::{q, qf, Arg, Atom, Closed, FuncRole, Mono, Poly, Relation, Space};
use crate::text::print_poly;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_SEED: u64 = 20_240_611;

/// `SYMCHAIN_SEED` if set and numeric, else the default.
pub fn seed_from_env() -> u64 {
    std::env::var("SYMCHAIN_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_SEED)
}

/// Outcome of one randomized suite.
#[derive(Clone, Debug)]
pub struct SuiteResult {
    pub name: &'static str,
    pub cases: usize,
    /// Cases where the check did nontrivial work (a reduction step, a chain
    /// with more than one member).
    pub exercised: usize,
    pub failure: Option<String>,
}

fn lone_atom(p: &Poly) -> Atom {
    p.terms().next().expect("atom").0.factors()[0].0.clone()
}

pub struct Gen {
    sp: Space,
    rank: Rank,
    base: Vec<Atom>,
    jets: Vec<Atom>,
    rng: ChaCha8Rng,
}

impl Gen {
    pub fn new(seed: u64) -> Gen {
        let mut sp = Space::default();
        for v in ["t", "x", "u"] {
            sp.add_var(v);
        }
        sp.add_param("sigma", None);
        sp.add_param("r2", Relation::from_coeffs(&[q(-2), q(0), q(1)]));
        let args = vec![Arg::Var(0), Arg::Var(1), Arg::Var(2)];
        sp.add_func("xi", args.clone(), FuncRole::Unknown);
        sp.add_func("eta", args, FuncRole::Unknown);
        let tanh = lone_atom(&sp.fun(Closed::Tanh, Poly::atom(Atom::Var(1))));
        let base = vec![Atom::Var(0), Atom::Var(1), Atom::Var(2), Atom::Param(0), Atom::Param(1), tanh];
        let mut jets = Vec::new();
        for f in 0..2 {
            for a in [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [0, 2, 0], [0, 1, 1], [0, 0, 2]] {
                jets.push(Atom::jet(f, &a));
            }
        }
        Gen {
            sp,
            rank: Rank::new(vec![0, 1, 2], vec![0, 1]),
            base,
            jets,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn coeff(&mut self) -> crate::expr::Q {
        let mut n = 0;
        while n == 0 {
            n = self.rng.gen_range(-5i64..=5);
        }
        qf(n, self.rng.gen_range(1i64..=3))
    }

    fn atom(&mut self, jets: bool) -> Atom {
        let nb = self.base.len();
        let k = self.rng.gen_range(0..nb + if jets { self.jets.len() } else { 0 });
        if k < nb {
            self.base[k].clone()
        } else {
            self.jets[k - nb].clone()
        }
    }

    fn poly(&mut self, terms: usize, factors: usize, max_exp: u32) -> Poly {
        let mut p = Poly::zero();
        for _ in 0..self.rng.gen_range(1..=terms) {
            let mut m = Mono::one();
            for _ in 0..self.rng.gen_range(0..=factors) {
                let a = self.atom(true);
                m = m.mul(&Mono::atom(a, self.rng.gen_range(1..=max_exp)));
            }
            let c = self.coeff();
            p = p + Poly::term(c, m);
        }
        self.sp.normalize(&p)
    }

    /// Linear in the jets with constant or coordinate coefficients. Larger
    /// coefficients make the elimination swell without testing more.
    fn linear(&mut self) -> Poly {
        let mut p = Poly::zero();
        for _ in 0..self.rng.gen_range(1..=3) {
            let j = self.jets[self.rng.gen_range(0..self.jets.len())].clone();
            let mut m = Mono::atom(j, 1);
            if self.rng.gen_bool(0.5) {
                m = m.mul(&Mono::atom(Atom::Var(self.rng.gen_range(0..3)), 1));
            }
            let c = self.coeff();
            p = p + Poly::term(c, m);
        }
        self.sp.normalize(&p)
    }

    fn chain(&mut self) -> Chain {
        let n = self.rng.gen_range(1..=3);
        let polys: Vec<Poly> = (0..n).map(|_| self.poly(3, 2, 1)).collect();
        Chain::from_sorted(&self.rank, basic_set(&self.sp, &self.rank, &polys))
    }
}

pub type Check = fn(&mut Gen) -> Result<bool, String>;

fn certificate_identity(g: &mut Gen) -> Result<bool, String> {
    let f = g.poly(4, 3, 2);
    let chain = g.chain();
    let cert = prem(&g.sp, &f, &chain);
    let d = cert.defect(&g.sp, &chain);
    if !d.is_zero() {
        return Err(format!("defect {} for {}", print_poly(&g.sp, &d), print_poly(&g.sp, &f)));
    }
    Ok(!cert.terms.is_empty())
}

fn remainder_reduced(g: &mut Gen) -> Result<bool, String> {
    let f = g.poly(4, 3, 2);
    let chain = g.chain();
    let cert = prem(&g.sp, &f, &chain);
    for m in &chain.members {
        if !g.rank.is_reduced(&g.sp, &cert.remainder, m).map_err(|e| e.to_string())? {
            return Err(format!(
                "{} not reduced by {}",
                print_poly(&g.sp, &cert.remainder),
                print_poly(&g.sp, m)
            ));
        }
    }
    Ok(!cert.terms.is_empty())
}

fn prem_idempotent(g: &mut Gen) -> Result<bool, String> {
    let f = g.poly(4, 3, 2);
    let chain = g.chain();
    let r = prem(&g.sp, &f, &chain).remainder;
    let again = prem(&g.sp, &r, &chain);
    if again.remainder != r || !again.is.as_constant().is_some_and(|c| c == q(1)) {
        return Err(format!("prem of remainder {} changed it", print_poly(&g.sp, &r)));
    }
    Ok(r != f)
}

fn derivatives_commute(g: &mut Gen) -> Result<bool, String> {
    let p = g.poly(4, 3, 2);
    let a = g.rng.gen_range(0..3);
    let b = g.rng.gen_range(0..3);
    let ab = g.sp.total_derivative(&g.sp.total_derivative(&p, a), b);
    let ba = g.sp.total_derivative(&g.sp.total_derivative(&p, b), a);
    if ab != ba {
        return Err(format!("D{a}D{b} != D{b}D{a} on {}", print_poly(&g.sp, &p)));
    }
    Ok(!ab.is_zero())
}

fn leibniz(g: &mut Gen) -> Result<bool, String> {
    let p = g.poly(3, 3, 2);
    let r = g.poly(3, 3, 2);
    let c = g.rng.gen_range(0..3);
    let sp = &g.sp;
    let lhs = sp.total_derivative(&sp.mul(&p, &r), c);
    let rhs = sp.mul(&sp.total_derivative(&p, c), &r) + sp.mul(&p, &sp.total_derivative(&r, c));
    if lhs != rhs {
        return Err(format!("Leibniz fails for {} and {}", print_poly(sp, &p), print_poly(sp, &r)));
    }
    Ok(!lhs.is_zero())
}

fn normalize_idempotent(g: &mut Gen) -> Result<bool, String> {
    // raw products, so powers of r2 and exponentials need rewriting
    let mut raw = Poly::one();
    for _ in 0..g.rng.gen_range(1..=3) {
        let mut f = Poly::zero();
        for _ in 0..g.rng.gen_range(1..=3) {
            let a = match g.rng.gen_range(0..4) {
                0 => Atom::Param(1),
                1 => {
                    let z = Poly::atom(Atom::Var(g.rng.gen_range(0..3)));
                    lone_atom(&g.sp.fun(Closed::Exp, z))
                }
                _ => g.atom(true),
            };
            let c = g.coeff();
            f = f + Poly::term(c, Mono::atom(a, g.rng.gen_range(1..=3)));
        }
        raw = raw.mul_raw(&f);
    }
    let once = g.sp.normalize(&raw);
    if g.sp.normalize(&once) != once {
        return Err(format!("normalize not idempotent on {}", print_poly(&g.sp, &once)));
    }
    Ok(once != raw)
}

fn wu_postcondition(g: &mut Gen) -> Result<bool, String> {
    let n = g.rng.gen_range(1..=3);
    let polys: Vec<Poly> = (0..n).map(|_| g.linear()).collect();
    match wu_chain(&g.sp, &polys, &g.rank, &WuOptions::default()) {
        Ok(chain) => {
            for p in &polys {
                let r = prem(&g.sp, p, &chain).remainder;
                if !r.is_zero() {
                    return Err(format!("{} leaves {}", print_poly(&g.sp, p), print_poly(&g.sp, &r)));
                }
            }
            Ok(chain.len() > 1)
        }
        Err(Error::InconsistentSystem(_)) => Ok(false),
        Err(e) => Err(e.to_string()),
    }
}

pub const SUITES: [(&str, Check); 7] = [
    ("certificate-identity", certificate_identity),
    ("remainder-reduced", remainder_reduced),
    ("prem-idempotent", prem_idempotent),
    ("derivatives-commute", derivatives_commute),
    ("leibniz", leibniz),
    ("normalize-idempotent", normalize_idempotent),
    ("wu-postcondition", wu_postcondition),
];

/// Runs suite `i` of [`SUITES`].
pub fn run_one(i: usize, seed: u64, cases: usize) -> SuiteResult {
    let (name, check) = SUITES[i];
    let mut g = Gen::new(seed.wrapping_add(i as u64));
    let mut exercised = 0;
    let mut failure = None;
    for k in 0..cases {
        match check(&mut g) {
            Ok(true) => exercised += 1,
            Ok(false) => {}
            Err(e) => {
                failure = Some(format!("case {k}: {e}"));
                break;
            }
        }
    }
    SuiteResult {
        name,
        cases,
        exercised,
        failure,
    }
}

/// Runs every suite for `cases` cases; each suite gets its own stream
/// derived from `seed`.
pub fn run_suites(seed: u64, cases: usize) -> Vec<SuiteResult> {
    (0..SUITES.len()).map(|i| run_one(i, seed, cases)).collect()
}
