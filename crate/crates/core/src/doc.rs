//! Machine documents (JSON trees with expressions in the grammar) and a
//! plain text rendering of them.

use crate::bridge::{AuditEntry, BridgeResult, TrivialityVerdict};
use crate::diffalg::{Chain, Rank, ReductionCertificate};
use crate::error::Error;
use crate::expr::{Atom, Idx, Poly, Space};
use crate::harness::{CorpusReport, MembershipReport};
use crate::symgen::DeterminingSystem;
use crate::text::{print_atom, print_poly};
use serde_json::{json, Map, Value};

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

pub fn determining_doc(sp: &Space, sys: &DeterminingSystem) -> Value {
    let members: Vec<Value> = sys
        .polys
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut m = json!({ "label": format!("p{}", i + 1), "poly": print_poly(sp, p) });
            if let Some(pv) = sys.provenance.get(i) {
                m["equation"] = json!(pv.equation);
                m["monomial"] = json!(pv.monomial);
                m["reduced"] = json!(pv.reduced);
            }
            m
        })
        .collect();
    json!({
        "kind": sys.kind.name(),
        "count": sys.polys.len(),
        "polynomials": members,
    })
}

pub fn chain_doc(sp: &Space, chain: &Chain, prefix: &str) -> Value {
    let rank = &chain.rank;
    let members: Vec<Value> = chain
        .members
        .iter()
        .zip(labels(prefix, chain.len()))
        .map(|(p, l)| {
            json!({
                "label": l,
                "poly": print_poly(sp, p),
                "leader": rank.leader(sp, p).map(|a| print_atom(sp, &a)),
                "initial": rank.initial(sp, p).ok().map(|i| print_poly(sp, &i)),
            })
        })
        .collect();
    json!({
        "length": chain.len(),
        "members": members,
        "is_product": print_poly(sp, &chain.is_product(sp)),
    })
}

/// `Q_0 + Q_1*D_x + ...` for one chain member of a certificate.
pub fn format_operator(sp: &Space, f: usize, ops: &[(Idx, Poly)]) -> String {
    let names = sp.arg_names(f);
    let mut terms = Vec::new();
    for (beta, q) in ops {
        let d: Vec<String> = beta
            .iter()
            .zip(&names)
            .filter(|(k, _)| **k > 0)
            .map(|(k, n)| if *k == 1 { format!("D_{n}") } else { format!("D_{n}^{k}") })
            .collect();
        let coeff = print_poly(sp, q);
        let t = match (d.is_empty(), coeff.as_str()) {
            (true, _) => coeff,
            (false, "1") => d.join("*"),
            (false, "-1") => format!("-{}", d.join("*")),
            (false, _) if q.len() == 1 => format!("{coeff}*{}", d.join("*")),
            (false, _) => format!("({coeff})*{}", d.join("*")),
        };
        terms.push(t);
    }
    let mut s = String::new();
    for t in terms {
        if s.is_empty() {
            s = t;
        } else if let Some(r) = t.strip_prefix('-') {
            s = format!("{s} - {r}");
        } else {
            s = format!("{s} + {t}");
        }
    }
    if s.is_empty() {
        "0".into()
    } else {
        s
    }
}

fn leader_func(sp: &Space, rank: &Rank, p: &Poly) -> usize {
    match rank.leader(sp, p) {
        Some(Atom::Jet(f, _)) => f as usize,
        _ => 0,
    }
}

/// One identity `IS * lhs = sum op_j(q_j) + r` in the grammar.
pub fn certificate_doc(sp: &Space, chain: &Chain, cert: &ReductionCertificate, lhs: &str, prefix: &str) -> Value {
    let mut ops = Vec::new();
    let mut rhs = Vec::new();
    for (j, terms) in &cert.terms {
        let op = format_operator(sp, leader_func(sp, &chain.rank, &chain.members[*j]), terms);
        let label = format!("{prefix}{}", j + 1);
        rhs.push(if op == "1" {
            label.clone()
        } else {
            format!("({op})[{label}]")
        });
        ops.push(json!({ "member": label, "operator": op }));
    }
    let is = print_poly(sp, &cert.is);
    let mut identity = if is == "1" { lhs.to_string() } else { format!("({is})*{lhs}") };
    identity.push_str(" = ");
    identity.push_str(&if rhs.is_empty() { "0".to_string() } else { rhs.join(" + ") });
    if !cert.remainder.is_zero() {
        identity.push_str(&format!(" + ({})", print_poly(sp, &cert.remainder)));
    }
    json!({
        "input": lhs,
        "is": is,
        "operators": ops,
        "remainder": print_poly(sp, &cert.remainder),
        "identity": identity,
    })
}

pub fn bridge_doc(b: &BridgeResult) -> Value {
    let sp = &b.space;
    let idents: Vec<Value> = b
        .certificates
        .iter()
        .enumerate()
        .map(|(i, c)| certificate_doc(sp, &b.c, c, &format!("p{}", i + 1), "q"))
        .collect();
    let sources: Vec<Value> = b
        .sources
        .iter()
        .zip(labels("q", b.c.len()))
        .map(|((i, k), l)| json!({ "member": l, "rest_index": i, "tau_power": k }))
        .collect();
    json!({
        "tau": sp.funcs[b.tau].name,
        "D": determining_doc(sp, &b.d),
        "Dprime": determining_doc(sp, &b.dprime),
        "Cprime": chain_doc(sp, &b.cprime, "c"),
        "Dpp": chain_doc(sp, &b.dpp, "d"),
        "C": chain_doc(sp, &b.c, "q"),
        "C_sources": sources,
        "IS_Cprime": print_poly(sp, &b.is_cprime),
        "IS_C": print_poly(sp, &b.is_c),
        "identities": idents,
    })
}

pub fn membership_doc(r: &MembershipReport) -> Value {
    serde_json::to_value(r).expect("serializable")
}

pub fn verdict_doc(candidate: &str, v: &TrivialityVerdict) -> Value {
    let mut d = serde_json::to_value(v).expect("serializable");
    d["candidate"] = json!(candidate);
    d
}

pub fn audit_doc(entries: &[AuditEntry]) -> Value {
    serde_json::to_value(entries).expect("serializable")
}

pub fn corpus_doc(r: &CorpusReport) -> Value {
    let mut d = serde_json::to_value(r).expect("serializable");
    d["ok"] = json!(r.ok());
    d
}

pub fn error_doc(e: &Error) -> Value {
    let mut m = Map::new();
    m.insert("kind".into(), json!(e.kind()));
    m.insert("message".into(), json!(e.to_string()));
    if let Error::Parse { line, col, expected, .. } = e {
        m.insert("line".into(), json!(line));
        m.insert("column".into(), json!(col));
        m.insert("expected".into(), json!(expected));
    }
    json!({ "error": m })
}

/// Indented `key: value` rendering of a document.
pub fn render_text(v: &Value) -> String {
    let mut out = String::new();
    render(v, 0, &mut out);
    out
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

fn render(v: &Value, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                match scalar(x) {
                    Some(s) => out.push_str(&format!("{pad}{k}: {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        render(x, depth + 1, out);
                    }
                }
            }
        }
        Value::Array(a) => {
            for x in a {
                match scalar(x) {
                    Some(s) => out.push_str(&format!("{pad}- {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}-\n"));
                        render(x, depth + 1, out);
                    }
                }
            }
        }
        x => out.push_str(&format!("{pad}{}\n", scalar(x).unwrap_or_default())),
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}
