//! Text front-end: expression grammar and the problem file format.
//!
//! A problem file is line based. `#` starts a comment and a trailing `\`
//! joins the next line.
//!
//! ```text
//! independent t, x
//! dependent u
//! parameter sigma
//! parameter r2 : r2^2 = 2
//! function f(u)
//! generator tau, xi ; eta
//! equation u_t = u_xx + u*(u-1)*(u-sigma)
//! rank t < x < u ; xi < eta < tau
//! system D nonclassical {
//!   p1: xi_uu
//! }
//! candidate translation classical {
//!   tau = 1
//!   xi = 0
//!   eta = 0
//! }
//! ```
//!
//! Candidate blocks accept `parameter`, `function`, `define NAME = e`,
//! `set NAME = e` (parameter or declared function), `UNKNOWN = e`,
//! `side u_beta = e` and `note ...` lines.

mod expr;

pub use expr::{lex, parse_frac, parse_poly, print_atom, print_frac, print_poly, resolve_jet, Parser, Tok};

use crate::error::Error;
use crate::expr::{Arg, Atom, Frac, FuncRole, ParamDecl, Poly, Relation, Space, Q};
use crate::symgen::{GeneratorKind, PdeSystem};
use crate::diffalg::Rank;
use num_traits::Zero;
use std::collections::BTreeMap;

/// Equation `target = rhs` in the jet space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equation {
    pub target: Atom,
    pub rhs: Poly,
}

/// A named list of determining polynomials (printed systems, chains).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemBlock {
    pub name: String,
    pub kind: GeneratorKind,
    pub members: Vec<(Option<String>, Poly)>,
    pub notes: Vec<String>,
}

impl SystemBlock {
    pub fn polys(&self) -> Vec<Poly> {
        self.members.iter().map(|(_, p)| p.clone()).collect()
    }

    pub fn labels(&self) -> Vec<String> {
        self.members
            .iter()
            .enumerate()
            .map(|(i, (l, _))| l.clone().unwrap_or_else(|| format!("#{}", i + 1)))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CandItem {
    Define(String, String),
    Set(String, String),
    Assign(String, String),
    Side(String, String),
}

/// Infinitesimals proposed for a generator, with local declarations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub name: String,
    pub kind: GeneratorKind,
    pub params: Vec<ParamDecl>,
    pub functions: Vec<(String, Vec<String>)>,
    pub items: Vec<CandItem>,
    pub notes: Vec<String>,
}

/// A candidate evaluated in the determining space extended by its locals.
#[derive(Clone, Debug)]
pub struct ResolvedCandidate {
    pub space: Space,
    pub kind: GeneratorKind,
    /// Unknown function index -> value.
    pub unknowns: BTreeMap<usize, Frac>,
    pub params: BTreeMap<usize, Frac>,
    pub functions: BTreeMap<usize, Frac>,
    /// Side equations in solved form.
    pub side: Vec<(Atom, Poly)>,
    /// Local functions constrained by the side equations.
    pub side_funcs: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Problem {
    pub independents: Vec<String>,
    pub dependents: Vec<String>,
    pub params: Vec<ParamDecl>,
    pub functions: Vec<(String, Vec<String>)>,
    /// Infinitesimal names for independents, then for dependents.
    pub generator: (Vec<String>, Vec<String>),
    pub equations: Vec<Equation>,
    /// Coordinate order and unknown order of the determining rank.
    pub rank: Option<(Vec<String>, Vec<String>)>,
    pub systems: Vec<SystemBlock>,
    pub candidates: Vec<Candidate>,
}

struct Line {
    no: usize,
    text: String,
}

fn perr(line: usize, col: usize, msg: impl Into<String>, expected: &[&str]) -> Error {
    Error::Parse {
        line,
        col,
        msg: msg.into(),
        expected: expected.iter().map(|s| s.to_string()).collect(),
    }
}

fn logical_lines(src: &str) -> Vec<Line> {
    let mut out: Vec<Line> = Vec::new();
    let mut pending: Option<Line> = None;
    for (i, raw) in src.lines().enumerate() {
        let body = match raw.find('#') {
            Some(k) => &raw[..k],
            None => raw,
        };
        let trimmed = body.trim_end();
        let (part, cont) = match trimmed.strip_suffix('\\') {
            Some(p) => (p, true),
            None => (trimmed, false),
        };
        match pending.as_mut() {
            Some(l) => {
                l.text.push(' ');
                l.text.push_str(part.trim());
            }
            None => {
                pending = Some(Line {
                    no: i + 1,
                    text: part.to_string(),
                })
            }
        }
        if !cont {
            let l = pending.take().unwrap();
            if !l.text.trim().is_empty() {
                out.push(l);
            }
        }
    }
    if let Some(l) = pending {
        if !l.text.trim().is_empty() {
            out.push(l);
        }
    }
    out
}

fn split_names(s: &str) -> Vec<String> {
    s.split(',')
        .map(|x| x.trim().to_string())
        .filter(|x| !x.is_empty())
        .collect()
}

fn valid_name(s: &str) -> bool {
    let mut c = s.chars();
    matches!(c.next(), Some(ch) if ch.is_ascii_alphabetic())
        && s.chars().all(|ch| ch.is_ascii_alphanumeric())
}

fn valid_label(s: &str) -> bool {
    !s.is_empty()
        && s
            .chars()
            .all(|ch| ch.is_ascii_alphanumeric() || "-_.".contains(ch))
}

/// `name(a, b)` pieces of a `function` declaration.
fn parse_func_decls(line: usize, s: &str) -> Result<Vec<(String, Vec<String>)>, Error> {
    let mut out = Vec::new();
    let mut rest = s.trim();
    while !rest.is_empty() {
        let open = rest
            .find('(')
            .ok_or_else(|| perr(line, 1, "function needs an argument list", &["("]))?;
        let close = rest
            .find(')')
            .ok_or_else(|| perr(line, 1, "unclosed argument list", &[")"]))?;
        let name = rest[..open].trim().trim_start_matches(',').trim().to_string();
        if !valid_name(&name) {
            return Err(perr(line, 1, format!("bad function name `{name}`"), &["identifier"]));
        }
        out.push((name, split_names(&rest[open + 1..close])));
        rest = rest[close + 1..].trim().trim_start_matches(',').trim();
    }
    Ok(out)
}

fn parse_param_decl(line: usize, s: &str) -> Result<Vec<ParamDecl>, Error> {
    if let Some((name, rel)) = s.split_once(':') {
        let name = name.trim();
        if !valid_name(name) {
            return Err(perr(line, 1, format!("bad parameter name `{name}`"), &["identifier"]));
        }
        let mut sp = Space::default();
        sp.add_param(name, None);
        let (l, r) = rel
            .split_once('=')
            .ok_or_else(|| perr(line, 1, "side relation needs `=`", &["="]))?;
        let p = parse_poly(&sp, l).map_err(|e| at_line(e, line))?
            - parse_poly(&sp, r).map_err(|e| at_line(e, line))?;
        let a = Atom::Param(0);
        let n = p.degree_in(&a);
        let mut coeffs = Vec::new();
        for k in 0..=n {
            let c = p.coeff_of(&a, k);
            match c.as_constant() {
                Some(v) => coeffs.push(v),
                None if c.is_zero() => coeffs.push(Q::zero()),
                None => {
                    return Err(perr(line, 1, "side relation must be univariate", &[]));
                }
            }
        }
        let rel = Relation::from_coeffs(&coeffs)
            .ok_or_else(|| perr(line, 1, "side relation has no positive degree", &[]))?;
        return Ok(vec![ParamDecl {
            name: name.to_string(),
            relation: Some(rel),
        }]);
    }
    let names = split_names(s);
    for n in &names {
        if !valid_name(n) {
            return Err(perr(line, 1, format!("bad parameter name `{n}`"), &["identifier"]));
        }
    }
    Ok(names
        .into_iter()
        .map(|name| ParamDecl {
            name,
            relation: None,
        })
        .collect())
}

/// Re-anchors a single-line parse error at `line`.
fn at_line(e: Error, line: usize) -> Error {
    match e {
        Error::Parse {
            col, msg, expected, ..
        } => Error::Parse {
            line,
            col,
            msg,
            expected,
        },
        other => other,
    }
}

fn parse_kind(line: usize, s: &str) -> Result<GeneratorKind, Error> {
    match s {
        "classical" => Ok(GeneratorKind::Classical),
        "nonclassical" => Ok(GeneratorKind::Nonclassical),
        _ => Err(perr(line, 1, format!("unknown kind `{s}`"), &["classical", "nonclassical"])),
    }
}

fn parse_with(sp: &Space, macros: &BTreeMap<String, Frac>, src: &str, line: usize) -> Result<Frac, Error> {
    let toks = lex(src, line)?;
    let mut p = Parser::new(sp, toks, line);
    p.macros = macros.clone();
    let e = p.expr()?;
    if !p.at_end() {
        return Err(p.err("trailing input", &["operator", "end of line"]));
    }
    Ok(e)
}

fn print_relation(name: &str, rel: &Relation) -> String {
    let mut sp = Space::default();
    sp.add_param(name, None);
    let mut rhs = Poly::zero();
    for (k, c) in rel.lower.iter().enumerate() {
        rhs.add_term(crate::expr::Mono::atom(Atom::Param(0), k as u32), c.clone());
    }
    format!("{name}^{} = {}", rel.degree, print_poly(&sp, &rhs))
}

fn print_param(p: &ParamDecl) -> String {
    match &p.relation {
        Some(r) => format!("parameter {} : {}", p.name, print_relation(&p.name, r)),
        None => format!("parameter {}", p.name),
    }
}

impl Problem {
    pub fn unknown_names(&self) -> Vec<String> {
        self.generator
            .0
            .iter()
            .chain(self.generator.1.iter())
            .cloned()
            .collect()
    }

    fn all_names(&self) -> Vec<String> {
        let mut v: Vec<String> = self.independents.clone();
        v.extend(self.dependents.iter().cloned());
        v.extend(self.params.iter().map(|p| p.name.clone()));
        v.extend(self.functions.iter().map(|f| f.0.clone()));
        v.extend(self.unknown_names());
        v
    }

    /// Jet space: coordinates are the independents; functions are the
    /// dependents, then the unknowns, then the declared functions.
    pub fn jet_space(&self) -> Space {
        let mut sp = Space::default();
        for v in &self.independents {
            sp.add_var(v);
        }
        for p in &self.params {
            sp.params.push(p.clone());
        }
        let vars: Vec<Arg> = (0..self.independents.len()).map(|i| Arg::Var(i as u16)).collect();
        for d in &self.dependents {
            sp.add_func(d, vars.clone(), FuncRole::Dependent);
        }
        let mut uargs = vars.clone();
        uargs.extend((0..self.dependents.len()).map(|i| Arg::Func(i as u16)));
        for u in self.unknown_names() {
            sp.add_func(&u, uargs.clone(), FuncRole::Unknown);
        }
        for (f, args) in &self.functions {
            let a = args
                .iter()
                .map(|n| match self.independents.iter().position(|x| x == n) {
                    Some(i) => Arg::Var(i as u16),
                    None => Arg::Func(self.dependents.iter().position(|x| x == n).unwrap() as u16),
                })
                .collect();
            sp.add_func(f, a, FuncRole::Opaque);
        }
        sp
    }

    /// Determining space: coordinates are independents then dependents;
    /// functions are the unknowns, then the declared functions.
    pub fn det_space(&self) -> Space {
        let mut sp = Space::default();
        for v in self.independents.iter().chain(self.dependents.iter()) {
            sp.add_var(v);
        }
        for p in &self.params {
            sp.params.push(p.clone());
        }
        let all: Vec<Arg> = (0..sp.vars.len()).map(|i| Arg::Var(i as u16)).collect();
        for u in self.unknown_names() {
            sp.add_func(&u, all.clone(), FuncRole::Unknown);
        }
        for (f, args) in &self.functions {
            let a = args
                .iter()
                .map(|n| Arg::Var(sp.var_index(n).unwrap() as u16))
                .collect();
            sp.add_func(f, a, FuncRole::Opaque);
        }
        sp
    }

    /// Rank of the determining space.
    pub fn rank(&self) -> Rank {
        let sp = self.det_space();
        let nunk = self.unknown_names().len() as u16;
        match &self.rank {
            Some((vars, unks)) => Rank::new(
                vars.iter().map(|v| sp.var_index(v).unwrap() as u16).collect(),
                unks.iter().map(|u| sp.func_index(u).unwrap() as u16).collect(),
            ),
            None => {
                // xi_2.., etas, then the first infinitesimal highest
                let mut u: Vec<u16> = (1..nunk).collect();
                u.push(0);
                Rank::new((0..sp.vars.len() as u16).collect(), u)
            }
        }
    }

    /// Rank on dependent jets used to triangularise the PDE itself.
    pub fn jet_rank(&self) -> Rank {
        let order: Vec<u16> = match &self.rank {
            Some((vars, _)) => vars
                .iter()
                .filter_map(|v| self.independents.iter().position(|x| x == v))
                .map(|i| i as u16)
                .collect(),
            None => (0..self.independents.len() as u16).collect(),
        };
        Rank::new(order, (0..self.dependents.len() as u16).collect())
    }

    pub fn pde(&self) -> PdeSystem {
        PdeSystem {
            jet: self.jet_space(),
            det: self.det_space(),
            equations: self.equations.clone(),
            nindep: self.independents.len(),
            ndep: self.dependents.len(),
            jet_rank: self.jet_rank(),
        }
    }

    pub fn system(&self, name: &str) -> Option<&SystemBlock> {
        self.systems.iter().find(|s| s.name == name)
    }

    pub fn candidate(&self, name: &str) -> Option<&Candidate> {
        self.candidates.iter().find(|c| c.name == name)
    }

    /// Evaluates a candidate block.
    pub fn resolve(&self, cand: &Candidate) -> Result<ResolvedCandidate, Error> {
        let mut sp = self.det_space();
        for p in &cand.params {
            if sp.is_name_taken(&p.name) {
                return Err(Error::Name(format!("`{}` declared twice", p.name)));
            }
            sp.params.push(p.clone());
        }
        let mut side_funcs = Vec::new();
        for (f, args) in &cand.functions {
            if sp.is_name_taken(f) {
                return Err(Error::Name(format!("`{f}` declared twice")));
            }
            let mut a = Vec::new();
            for n in args {
                let v = sp.var_index(n).ok_or_else(|| Error::Name(n.clone()))?;
                a.push(Arg::Var(v as u16));
            }
            side_funcs.push(sp.add_func(f, a, FuncRole::Opaque));
        }
        let mut macros: BTreeMap<String, Frac> = BTreeMap::new();
        let mut out = ResolvedCandidate {
            space: sp.clone(),
            kind: cand.kind,
            unknowns: BTreeMap::new(),
            params: BTreeMap::new(),
            functions: BTreeMap::new(),
            side: Vec::new(),
            side_funcs: Vec::new(),
        };
        let unknown_count = self.unknown_names().len();
        for item in &cand.items {
            match item {
                CandItem::Define(n, e) => {
                    let v = parse_with(&sp, &macros, e, 0)?;
                    macros.insert(n.clone(), v);
                }
                CandItem::Set(n, e) => {
                    let v = parse_with(&sp, &macros, e, 0)?;
                    if let Some(i) = sp.param_index(n) {
                        out.params.insert(i, v.clone());
                        macros.insert(n.clone(), v);
                    } else if let Some(f) = sp.func_index(n).filter(|&f| f >= unknown_count) {
                        out.functions.insert(f, v);
                    } else {
                        return Err(Error::Name(n.clone()));
                    }
                }
                CandItem::Assign(n, e) => {
                    let v = parse_with(&sp, &macros, e, 0)?;
                    let f = sp
                        .func_index(n)
                        .filter(|&f| f < unknown_count)
                        .ok_or_else(|| Error::Name(n.clone()))?;
                    out.unknowns.insert(f, v);
                }
                CandItem::Side(target, e) => {
                    let t = resolve_jet(&sp, target)
                        .filter(|a| a.func().map(|f| side_funcs.contains(&f)).unwrap_or(false))
                        .ok_or_else(|| Error::Name(target.clone()))?;
                    let v = parse_with(&sp, &macros, e, 0)?
                        .into_poly()
                        .map_err(|_| Error::SolvedForm(format!("side equation for {target} has a denominator")))?;
                    out.side.push((t, v));
                }
            }
        }
        out.side_funcs = side_funcs;
        Ok(out)
    }
}

fn header<'a>(text: &'a str, kw: &str) -> Option<&'a str> {
    let t = text.trim_start();
    let rest = t.strip_prefix(kw)?;
    if rest.is_empty() || rest.starts_with(char::is_whitespace) {
        Some(rest.trim())
    } else {
        None
    }
}

/// Parses a problem file.
pub fn parse_problem(src: &str) -> Result<Problem, Error> {
    let lines = logical_lines(src);
    let mut pr = Problem::default();
    let mut have_gen = false;
    // pass 1: declarations; collect everything else for pass 2
    let mut eqs: Vec<&Line> = Vec::new();
    let mut blocks: Vec<(&Line, Vec<&Line>)> = Vec::new();
    let mut open: Option<(&Line, Vec<&Line>)> = None;
    for l in &lines {
        let t = l.text.trim();
        if let Some((_, body)) = open.as_mut() {
            if t == "}" {
                blocks.push(open.take().unwrap());
            } else {
                body.push(l);
            }
            continue;
        }
        if let Some(r) = header(t, "independent") {
            pr.independents.extend(split_names(r));
        } else if let Some(r) = header(t, "dependent") {
            pr.dependents.extend(split_names(r));
        } else if let Some(r) = header(t, "parameter") {
            pr.params.extend(parse_param_decl(l.no, r)?);
        } else if let Some(r) = header(t, "function") {
            pr.functions.extend(parse_func_decls(l.no, r)?);
        } else if let Some(r) = header(t, "generator") {
            let (a, b) = r.split_once(';').unwrap_or((r, ""));
            pr.generator = (split_names(a), split_names(b));
            have_gen = true;
        } else if let Some(r) = header(t, "rank") {
            let (a, b) = r
                .split_once(';')
                .ok_or_else(|| perr(l.no, 1, "rank needs two lists", &[";"]))?;
            let sp = |s: &str| -> Vec<String> {
                s.split('<').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect()
            };
            pr.rank = Some((sp(a), sp(b)));
        } else if header(t, "equation").is_some() {
            eqs.push(l);
        } else if (header(t, "system").is_some() || header(t, "candidate").is_some()) && t.ends_with('{') {
            open = Some((l, Vec::new()));
        } else {
            let word = t.split_whitespace().next().unwrap_or("");
            return Err(perr(
                l.no,
                1,
                format!("unknown statement `{word}`"),
                &["independent", "dependent", "parameter", "function", "generator", "equation", "rank", "system", "candidate"],
            ));
        }
    }
    if let Some((l, _)) = open {
        return Err(perr(l.no, 1, "block is not closed", &["}"]));
    }
    if !have_gen {
        return Err(perr(lines.last().map(|l| l.no).unwrap_or(1), 1, "missing generator declaration", &["generator"]));
    }
    validate_decls(&pr)?;
    let jet = pr.jet_space();
    for l in eqs {
        let body = header(l.text.trim(), "equation").unwrap();
        pr.equations.push(parse_equation(&pr, &jet, body, l.no)?);
    }
    check_autoreduced(&pr, &jet)?;
    let det = pr.det_space();
    for (h, body) in blocks {
        let t = h.text.trim().trim_end_matches('{').trim();
        let mut words = t.split_whitespace();
        let kw = words.next().unwrap();
        let name = words
            .next()
            .filter(|n| valid_label(n))
            .ok_or_else(|| perr(h.no, 1, "block needs a name", &["name"]))?
            .to_string();
        let kind = parse_kind(h.no, words.next().unwrap_or(""))?;
        if kw == "system" {
            let mut sb = SystemBlock {
                name,
                kind,
                members: Vec::new(),
                notes: Vec::new(),
            };
            for l in body {
                let t = l.text.trim();
                if let Some(n) = header(t, "note") {
                    sb.notes.push(n.to_string());
                    continue;
                }
                let (label, e) = match t.split_once(':') {
                    Some((a, b)) if valid_label(a.trim()) => (Some(a.trim().to_string()), b),
                    _ => (None, t),
                };
                let p = parse_with(&det, &BTreeMap::new(), e, l.no)?
                    .into_poly()
                    .map_err(|_| perr(l.no, 1, "system member must be polynomial", &[]))?;
                sb.members.push((label, p));
            }
            pr.systems.push(sb);
        } else {
            let c = parse_candidate(&pr, name, kind, &body)?;
            pr.candidates.push(c);
        }
    }
    Ok(pr)
}

fn validate_decls(pr: &Problem) -> Result<(), Error> {
    let names = pr.all_names();
    for (i, n) in names.iter().enumerate() {
        if !valid_name(n) {
            return Err(Error::Name(format!("invalid name `{n}`")));
        }
        if names[..i].contains(n) {
            return Err(Error::Name(format!("`{n}` declared twice")));
        }
    }
    for (f, args) in &pr.functions {
        for a in args {
            if !pr.independents.contains(a) && !pr.dependents.contains(a) {
                return Err(Error::Name(format!("argument `{a}` of `{f}`")));
            }
        }
    }
    if pr.generator.0.len() != pr.independents.len() || pr.generator.1.len() != pr.dependents.len() {
        return Err(Error::Usage(
            "generator needs one name per independent and one per dependent".into(),
        ));
    }
    if let Some((vars, unks)) = &pr.rank {
        let mut all: Vec<String> = pr.independents.clone();
        all.extend(pr.dependents.iter().cloned());
        let mut a = vars.clone();
        a.sort();
        all.sort();
        let mut b = unks.clone();
        b.sort();
        let mut u = pr.unknown_names();
        u.sort();
        if a != all || b != u {
            return Err(Error::Rank(
                "rank must list every coordinate and every unknown exactly once".into(),
            ));
        }
    }
    Ok(())
}

fn parse_equation(pr: &Problem, jet: &Space, body: &str, line: usize) -> Result<Equation, Error> {
    let (l, r) = body
        .split_once('=')
        .ok_or_else(|| Error::SolvedForm(body.trim().to_string()))?;
    let lhs = parse_with(jet, &BTreeMap::new(), l, line)?;
    let rhs = parse_with(jet, &BTreeMap::new(), r, line)?
        .into_poly()
        .map_err(|_| Error::SolvedForm(format!("{}: right-hand side has a denominator", body.trim())))?;
    let lhs = lhs.into_poly().map_err(|_| Error::SolvedForm(body.trim().into()))?;
    let atoms: Vec<Atom> = lhs.atoms().into_iter().collect();
    let solved = lhs.len() == 1
        && atoms.len() == 1
        && lhs == Poly::atom(atoms[0].clone())
        && matches!(&atoms[0], Atom::Jet(f, _) if (*f as usize) < pr.dependents.len())
        && atoms[0].order() > 0;
    if !solved {
        return Err(Error::SolvedForm(format!(
            "{}: left-hand side must be a single derivative of a dependent",
            body.trim()
        )));
    }
    let target = atoms[0].clone();
    let t2 = target.clone();
    if rhs.contains_atom(&|a| crate::diffalg::Rank::derivative_of(a, &t2).is_some()) {
        return Err(Error::SolvedForm(format!(
            "{}: right-hand side contains the solved derivative",
            body.trim()
        )));
    }
    Ok(Equation { target, rhs })
}

fn check_autoreduced(pr: &Problem, jet: &Space) -> Result<(), Error> {
    for (i, e) in pr.equations.iter().enumerate() {
        for (j, g) in pr.equations.iter().enumerate() {
            if i == j {
                continue;
            }
            if Rank::derivative_of(&e.target, &g.target).is_some() {
                return Err(Error::SolvedForm(format!(
                    "{} is a derivative of another solved derivative",
                    print_atom(jet, &e.target)
                )));
            }
            let t = g.target.clone();
            if e.rhs.contains_atom(&|a| Rank::derivative_of(a, &t).is_some()) {
                return Err(Error::SolvedForm(format!(
                    "right-hand side for {} contains {} or a derivative of it",
                    print_atom(jet, &e.target),
                    print_atom(jet, &g.target)
                )));
            }
        }
    }
    Ok(())
}

fn parse_candidate(
    pr: &Problem,
    name: String,
    kind: GeneratorKind,
    body: &[&Line],
) -> Result<Candidate, Error> {
    let mut c = Candidate {
        name,
        kind,
        params: Vec::new(),
        functions: Vec::new(),
        items: Vec::new(),
        notes: Vec::new(),
    };
    for l in body {
        let t = l.text.trim();
        if let Some(r) = header(t, "note") {
            c.notes.push(r.to_string());
            continue;
        }
        if let Some(r) = header(t, "parameter") {
            c.params.extend(parse_param_decl(l.no, r)?);
            continue;
        }
        if let Some(r) = header(t, "function") {
            c.functions.extend(parse_func_decls(l.no, r)?);
            continue;
        }
        let (kw, rest) = if let Some(r) = header(t, "define") {
            ("define", r)
        } else if let Some(r) = header(t, "set") {
            ("set", r)
        } else if let Some(r) = header(t, "side") {
            ("side", r)
        } else {
            ("", t)
        };
        let (lhs, rhs) = rest
            .split_once('=')
            .ok_or_else(|| perr(l.no, 1, "expected an assignment", &["="]))?;
        let lhs = lhs.trim().to_string();
        let rhs = rhs.trim().to_string();
        let item = match kw {
            "define" => CandItem::Define(lhs, rhs),
            "set" => CandItem::Set(lhs, rhs),
            "side" => CandItem::Side(lhs, rhs),
            _ => CandItem::Assign(lhs, rhs),
        };
        c.items.push(item);
        // evaluate the prefix so errors point at this line
        let probe = Candidate {
            items: c.items.clone(),
            ..c.clone()
        };
        pr.resolve(&probe).map_err(|e| match e {
            Error::Parse { col, msg, expected, .. } => Error::Parse {
                line: l.no,
                col,
                msg,
                expected,
            },
            Error::Name(n) => perr(l.no, 1, format!("undeclared or misused name `{n}`"), &["declared name"]),
            other => other,
        })?;
    }
    Ok(c)
}

fn kind_name(k: GeneratorKind) -> &'static str {
    match k {
        GeneratorKind::Classical => "classical",
        GeneratorKind::Nonclassical => "nonclassical",
    }
}

/// Prints a problem; parsing the output gives back an equal problem.
pub fn print_problem(pr: &Problem) -> String {
    let mut out = String::new();
    let push = |out: &mut String, s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    push(&mut out, format!("independent {}", pr.independents.join(", ")));
    if !pr.dependents.is_empty() {
        push(&mut out, format!("dependent {}", pr.dependents.join(", ")));
    }
    for p in &pr.params {
        push(&mut out, print_param(p));
    }
    for (f, args) in &pr.functions {
        push(&mut out, format!("function {}({})", f, args.join(", ")));
    }
    push(
        &mut out,
        format!("generator {} ; {}", pr.generator.0.join(", "), pr.generator.1.join(", ")),
    );
    let jet = pr.jet_space();
    for e in &pr.equations {
        push(
            &mut out,
            format!("equation {} = {}", print_atom(&jet, &e.target), print_poly(&jet, &e.rhs)),
        );
    }
    if let Some((a, b)) = &pr.rank {
        push(&mut out, format!("rank {} ; {}", a.join(" < "), b.join(" < ")));
    }
    let det = pr.det_space();
    for s in &pr.systems {
        out.push('\n');
        push(&mut out, format!("system {} {} {{", s.name, kind_name(s.kind)));
        for n in &s.notes {
            push(&mut out, format!("  note {n}"));
        }
        for (l, p) in &s.members {
            match l {
                Some(l) => push(&mut out, format!("  {l}: {}", print_poly(&det, p))),
                None => push(&mut out, format!("  {}", print_poly(&det, p))),
            }
        }
        push(&mut out, "}".into());
    }
    for c in &pr.candidates {
        out.push('\n');
        push(&mut out, format!("candidate {} {} {{", c.name, kind_name(c.kind)));
        for n in &c.notes {
            push(&mut out, format!("  note {n}"));
        }
        for p in &c.params {
            push(&mut out, format!("  {}", print_param(p)));
        }
        for (f, args) in &c.functions {
            push(&mut out, format!("  function {}({})", f, args.join(", ")));
        }
        for it in &c.items {
            let s = match it {
                CandItem::Define(a, b) => format!("  define {a} = {b}"),
                CandItem::Set(a, b) => format!("  set {a} = {b}"),
                CandItem::Assign(a, b) => format!("  {a} = {b}"),
                CandItem::Side(a, b) => format!("  side {a} = {b}"),
            };
            push(&mut out, s);
        }
        push(&mut out, "}".into());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const BH: &str = "\
independent t, x
dependent u
parameter sigma
parameter r2 : r2^2 = 2
generator tau, xi ; eta
equation u_t = u_xx + u*(u-1)*(u-sigma)
rank t < x < u ; xi < eta < tau
system D nonclassical {
  p1: xi_uu
}
candidate nc nonclassical {
  xi = (3*u - sigma - 1)/r2
  eta = -3/2*u*(u-1)*(u-sigma)
}
";

    #[test]
    fn problem_round_trip() {
        let p = parse_problem(BH).unwrap();
        assert_eq!(p.equations.len(), 1);
        let again = parse_problem(&print_problem(&p)).unwrap();
        assert_eq!(p, again);
    }

    #[test]
    fn unsolved_equation_rejected() {
        let src = BH.replace("equation u_t = u_xx + u*(u-1)*(u-sigma)", "equation u_t + u_x = 0");
        assert!(matches!(parse_problem(&src), Err(Error::SolvedForm(_))));
    }

    #[test]
    fn undeclared_symbol_has_line() {
        let src = BH.replace("p1: xi_uu", "p1: xi_uu + w");
        match parse_problem(&src) {
            Err(Error::Parse { line, col, .. }) => {
                assert_eq!(line, 9);
                assert!(col > 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn candidate_resolves() {
        let p = parse_problem(BH).unwrap();
        let c = p.resolve(p.candidate("nc").unwrap()).unwrap();
        assert_eq!(c.unknowns.len(), 2);
        assert!(c.unknowns.values().all(|v| v.is_poly()));
    }
}
