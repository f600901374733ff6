use crate::error::Error;
use crate::expr::{Arg, Atom, Closed, Frac, Idx, Poly, Space, Q};
use num_bigint::BigInt;
use num_traits::{One, Signed};
use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(BigInt),
    Sym(char),
    End,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub col: usize,
}

pub fn lex(line: &str, lineno: usize) -> Result<Vec<Token>, Error> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let col = i + 1;
        if c.is_ascii_alphabetic() {
            let s = i;
            while i < chars.len()
                && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'')
            {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(chars[s..i].iter().collect()),
                col,
            });
        } else if c.is_ascii_digit() {
            let s = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let txt: String = chars[s..i].iter().collect();
            out.push(Token {
                tok: Tok::Int(txt.parse().unwrap()),
                col,
            });
        } else if "+-*/^(),=<;:{}".contains(c) {
            out.push(Token {
                tok: Tok::Sym(c),
                col,
            });
            i += 1;
        } else {
            return Err(Error::Parse {
                line: lineno,
                col,
                msg: format!("unexpected character `{c}`"),
                expected: vec!["ASCII expression".into()],
            });
        }
    }
    out.push(Token {
        tok: Tok::End,
        col: chars.len() + 1,
    });
    Ok(out)
}

/// Recursive-descent parser over one line of tokens.
pub struct Parser<'a> {
    pub toks: Vec<Token>,
    pub pos: usize,
    pub line: usize,
    pub sp: &'a Space,
    /// Names expanded to fixed values (`define`, `set`).
    pub macros: BTreeMap<String, Frac>,
}

impl<'a> Parser<'a> {
    pub fn new(sp: &'a Space, toks: Vec<Token>, line: usize) -> Parser<'a> {
        Parser {
            toks,
            pos: 0,
            line,
            sp,
            macros: BTreeMap::new(),
        }
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn col(&self) -> usize {
        self.toks[self.pos].col
    }

    pub fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn err(&self, msg: &str, expected: &[&str]) -> Error {
        Error::Parse {
            line: self.line,
            col: self.col(),
            msg: msg.to_string(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, c: char) -> Result<(), Error> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err("unexpected token", &[&c.to_string()]))
        }
    }

    pub fn ident(&mut self) -> Result<String, Error> {
        match self.bump() {
            Tok::Ident(s) => Ok(s),
            _ => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.err("expected a name", &["identifier"]))
            }
        }
    }

    pub fn at_end(&self) -> bool {
        *self.peek() == Tok::End
    }

    pub fn expr(&mut self) -> Result<Frac, Error> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                let r = self.term()?;
                acc = Frac::add(self.sp, &acc, &r);
            } else if self.eat('-') {
                let r = self.term()?;
                acc = Frac::sub(self.sp, &acc, &r);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Frac, Error> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                let r = self.unary()?;
                acc = Frac::mul(self.sp, &acc, &r);
            } else if self.eat('/') {
                let col = self.col();
                let r = self.unary()?;
                acc = Frac::div(self.sp, &acc, &r).map_err(|e| Error::Parse {
                    line: self.line,
                    col,
                    msg: e.to_string(),
                    expected: vec!["nonzero divisor".into()],
                })?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Frac, Error> {
        if self.eat('-') {
            return Ok(self.unary()?.neg());
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Frac, Error> {
        let base = self.primary()?;
        if self.eat('^') {
            let neg = self.eat('-');
            let col = self.col();
            let Tok::Int(n) = self.bump() else {
                return Err(Error::Parse {
                    line: self.line,
                    col,
                    msg: "exponent must be an integer literal".into(),
                    expected: vec!["integer".into()],
                });
            };
            let e: u32 = n.try_into().map_err(|_| Error::Parse {
                line: self.line,
                col,
                msg: "exponent too large".into(),
                expected: vec!["small integer".into()],
            })?;
            let p = Frac::pow(self.sp, &base, e);
            if neg {
                return Frac::div(self.sp, &Frac::from(Poly::one()), &p).map_err(|e| {
                    Error::Parse {
                        line: self.line,
                        col,
                        msg: e.to_string(),
                        expected: vec![],
                    }
                });
            }
            return Ok(p);
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Frac, Error> {
        let col = self.col();
        match self.bump() {
            Tok::Int(n) => Ok(Frac::from(Poly::constant(Q::from_integer(n)))),
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => self.name(&name, col),
            _ => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.err(
                    "unexpected token",
                    &["number", "name", "(", "-"],
                ))
            }
        }
    }

    fn name(&mut self, name: &str, col: usize) -> Result<Frac, Error> {
        let sp = self.sp;
        if let Some(v) = self.macros.get(name) {
            return Ok(v.clone());
        }
        if let Some(kind) = Closed::from_name(name) {
            if *self.peek() == Tok::Sym('(') {
                self.bump();
                let arg = self.expr()?;
                self.expect(')')?;
                let arg = arg.into_poly().map_err(|_| Error::Parse {
                    line: self.line,
                    col,
                    msg: format!("argument of {name} must be polynomial"),
                    expected: vec![],
                })?;
                return Ok(Frac::from(sp.fun(kind, arg)));
            }
        }
        if let Some(i) = sp.var_index(name) {
            return Ok(Frac::from(Poly::atom(Atom::Var(i as u16))));
        }
        if let Some(i) = sp.param_index(name) {
            return Ok(Frac::from(Poly::atom(Atom::Param(i as u16))));
        }
        let atom = resolve_jet(sp, name).ok_or_else(|| Error::Parse {
            line: self.line,
            col,
            msg: format!("undeclared symbol `{name}`"),
            expected: vec!["declared name".into()],
        })?;
        if *self.peek() == Tok::Sym('(') {
            // optional explicit argument list, must match the declaration
            let f = atom.func().unwrap();
            self.bump();
            let mut got = Vec::new();
            if !self.eat(')') {
                loop {
                    got.push(self.ident()?);
                    if self.eat(')') {
                        break;
                    }
                    self.expect(',')?;
                }
            }
            if got != sp.arg_names(f) {
                return Err(Error::Parse {
                    line: self.line,
                    col,
                    msg: format!("`{}` is declared with arguments ({})", sp.funcs[f].name, sp.arg_names(f).join(",")),
                    expected: vec![format!("({})", sp.arg_names(f).join(","))],
                });
            }
        }
        Ok(Frac::from(Poly::atom(atom)))
    }
}

/// Splits `s` into a sequence of argument names (longest match first).
fn split_suffix(s: &str, names: &[String]) -> Option<Vec<usize>> {
    if s.is_empty() {
        return Some(Vec::new());
    }
    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(names[i].len()));
    for i in order {
        if let Some(rest) = s.strip_prefix(names[i].as_str()) {
            if let Some(mut tail) = split_suffix(rest, names) {
                tail.insert(0, i);
                return Some(tail);
            }
        }
    }
    None
}

/// Resolves `f` or `f_xy` to a jet atom.
pub fn resolve_jet(sp: &Space, name: &str) -> Option<Atom> {
    if let Some(f) = sp.func_index(name) {
        return Some(Atom::Jet(f as u16, Idx::from_elem(0, sp.funcs[f].args.len())));
    }
    let (base, suffix) = name.split_once('_')?;
    let f = sp.func_index(base)?;
    let names = sp.arg_names(f);
    let parts = split_suffix(suffix, &names)?;
    let mut alpha = Idx::from_elem(0, names.len());
    for k in parts {
        alpha[k] += 1;
    }
    Some(Atom::Jet(f as u16, alpha))
}

pub fn parse_frac(sp: &Space, src: &str) -> Result<Frac, Error> {
    let toks = lex(src, 1)?;
    let mut p = Parser::new(sp, toks, 1);
    let e = p.expr()?;
    if !p.at_end() {
        return Err(p.err("trailing input", &["+", "-", "*", "/", "^", "end of line"]));
    }
    Ok(e)
}

/// Parses a polynomial expression in the grammar.
pub fn parse_poly(sp: &Space, src: &str) -> Result<Poly, Error> {
    let f = parse_frac(sp, src)?;
    f.into_poly().map_err(|_| Error::Parse {
        line: 1,
        col: 1,
        msg: "expression has a non-invertible denominator".into(),
        expected: vec!["polynomial".into()],
    })
}

pub fn print_atom(sp: &Space, a: &Atom) -> String {
    match a {
        Atom::Var(i) => sp.vars[*i as usize].clone(),
        Atom::Param(i) => sp.params[*i as usize].name.clone(),
        Atom::Jet(f, alpha) => {
            let decl = &sp.funcs[*f as usize];
            let mut s = decl.name.clone();
            if alpha.iter().any(|&k| k > 0) {
                s.push('_');
                for (k, arg) in decl.args.iter().enumerate() {
                    let n = match arg {
                        Arg::Var(v) => &sp.vars[*v as usize],
                        Arg::Func(g) => &sp.funcs[*g as usize].name,
                    };
                    for _ in 0..alpha[k] {
                        s.push_str(n);
                    }
                }
            }
            s
        }
        Atom::Fun(kind, arg) => format!("{}({})", kind.name(), print_poly(sp, arg)),
    }
}

fn print_q(c: &Q) -> String {
    if c.denom().is_one() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

/// Prints a polynomial in the grammar, terms in canonical print order.
pub fn print_poly(sp: &Space, p: &Poly) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let mut out = String::new();
    for (i, (m, c)) in p.sorted_terms().into_iter().enumerate() {
        let neg = c.is_negative();
        let a = c.abs();
        if i == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let mut factors: Vec<String> = Vec::new();
        if !a.is_one() || m.is_one() {
            factors.push(print_q(&a));
        }
        for (atom, e) in m.factors() {
            let s = print_atom(sp, atom);
            if *e == 1 {
                factors.push(s);
            } else {
                factors.push(format!("{s}^{e}"));
            }
        }
        out.push_str(&factors.join("*"));
    }
    out
}

pub fn print_frac(sp: &Space, f: &Frac) -> String {
    if f.den.is_empty() {
        return print_poly(sp, &f.num);
    }
    let den: Vec<String> = f
        .den
        .iter()
        .map(|(d, e)| {
            if *e == 1 {
                format!("({})", print_poly(sp, d))
            } else {
                format!("({})^{e}", print_poly(sp, d))
            }
        })
        .collect();
    format!("({})/({})", print_poly(sp, &f.num), den.join("*"))
}
