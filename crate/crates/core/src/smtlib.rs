//! SMT-LIB 2 output for reduced formulas, plus a small reader that checks
//! the emitted subset and evaluates its assertions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::qf::{LinTerm, Qf};

/// An ordered SMT-LIB 2 script, one command per line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmtScript {
    pub lines: Vec<String>,
}

impl fmt::Display for SmtScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.lines {
            writeln!(f, "{l}")?;
        }
        Ok(())
    }
}

/// A declared integer variable with optional bounds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmtVar {
    pub name: String,
    pub lb: Option<i64>,
    pub ub: Option<i64>,
}

const RESERVED: &[&str] = &[
    "!", "_", "as", "let", "exists", "forall", "match", "par", "BINARY", "DECIMAL", "HEXADECIMAL", "NUMERAL", "STRING",
];

fn is_simple_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c)
}

/// `name` as an SMT-LIB symbol, quoted with bars unless it is simple.
pub fn symbol(name: &str) -> String {
    let simple = !name.is_empty()
        && !name.starts_with(|c: char| c.is_ascii_digit())
        && name.chars().all(is_simple_char)
        && !RESERVED.contains(&name);
    if simple {
        name.to_string()
    } else {
        format!("|{name}|")
    }
}

fn int(k: i64) -> String {
    if k < 0 {
        format!("(- {})", k.unsigned_abs())
    } else {
        k.to_string()
    }
}

fn term(t: &LinTerm) -> String {
    let mut parts: Vec<String> = t
        .coeffs
        .iter()
        .map(|(v, &a)| match a {
            1 => symbol(v),
            a => format!("(* {} {})", int(a), symbol(v)),
        })
        .collect();
    if t.constant != 0 || parts.is_empty() {
        parts.push(int(t.constant));
    }
    if parts.len() == 1 {
        parts.pop().expect("one part")
    } else {
        format!("(+ {})", parts.join(" "))
    }
}

fn formula(f: &Qf) -> String {
    let nary = |op: &str, fs: &[Qf], empty: &str| match fs {
        [] => empty.to_string(),
        [one] => formula(one),
        _ => format!("({op} {})", fs.iter().map(formula).collect::<Vec<_>>().join(" ")),
    };
    match f {
        Qf::Bool(b) => b.to_string(),
        Qf::Le(a, b) => format!("(<= {} {})", term(a), term(b)),
        Qf::Eq(a, b) => format!("(= {} {})", term(a), term(b)),
        Qf::Not(g) => format!("(not {})", formula(g)),
        Qf::And(fs) => nary("and", fs, "true"),
        Qf::Or(fs) => nary("or", fs, "false"),
    }
}

/// Emit `f` over `vars`. Variables of `f` missing from `vars` are declared
/// without bounds.
pub fn emit_smtlib(f: &Qf, vars: &[SmtVar], get_model: bool) -> SmtScript {
    let mut lines = vec!["(set-logic QF_LIA)".to_string()];
    let mut declared: BTreeSet<&str> = BTreeSet::new();
    let mut bounds = Vec::new();
    for v in vars {
        if !declared.insert(&v.name) {
            continue;
        }
        lines.push(format!("(declare-const {} Int)", symbol(&v.name)));
        let s = symbol(&v.name);
        match (v.lb, v.ub) {
            (Some(l), Some(u)) => bounds.push(format!("(assert (and (<= {} {s}) (<= {s} {})))", int(l), int(u))),
            (Some(l), None) => bounds.push(format!("(assert (<= {} {s}))", int(l))),
            (None, Some(u)) => bounds.push(format!("(assert (<= {s} {}))", int(u))),
            (None, None) => {}
        }
    }
    let free = f.vars();
    for v in &free {
        if !declared.contains(v.as_str()) {
            lines.push(format!("(declare-const {} Int)", symbol(v)));
        }
    }
    lines.extend(bounds);
    if *f != Qf::Bool(true) && *f != Qf::And(Vec::new()) {
        lines.push(format!("(assert {})", formula(f)));
    }
    lines.push("(check-sat)".to_string());
    if get_model {
        lines.push("(get-model)".to_string());
    }
    SmtScript { lines }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SmtError {
    #[error("syntax error at byte {0}: {1}")]
    Syntax(usize, String),
    #[error("unsupported command or term: {0}")]
    Unsupported(String),
    #[error("undeclared symbol `{0}`")]
    Undeclared(String),
    #[error("symbol `{0}` declared twice")]
    Redeclared(String),
    #[error("sort error: {0}")]
    Sort(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Sx {
    Atom(String),
    List(Vec<Sx>),
}

fn tokenize(text: &str) -> Result<Vec<Sx>, SmtError> {
    let bytes: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut stack: Vec<Vec<Sx>> = vec![Vec::new()];
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            _ if c.is_whitespace() => i += 1,
            ';' => {
                while i < bytes.len() && bytes[i] != '\n' {
                    i += 1;
                }
            }
            '(' => {
                stack.push(Vec::new());
                i += 1;
            }
            ')' => {
                let done = stack.pop().expect("stack");
                let parent = stack.last_mut().ok_or_else(|| SmtError::Syntax(i, "unbalanced `)`".into()))?;
                parent.push(Sx::List(done));
                i += 1;
            }
            '|' => {
                let start = i + 1;
                let end = bytes[start..]
                    .iter()
                    .position(|&c| c == '|')
                    .ok_or_else(|| SmtError::Syntax(i, "unterminated quoted symbol".into()))?;
                let name: String = bytes[start..start + end].iter().collect();
                if name.contains('\\') {
                    return Err(SmtError::Syntax(i, "backslash in quoted symbol".into()));
                }
                stack.last_mut().expect("stack").push(Sx::Atom(name));
                i = start + end + 1;
            }
            _ => {
                let start = i;
                while i < bytes.len() && !bytes[i].is_whitespace() && !"();|".contains(bytes[i]) {
                    if !is_simple_char(bytes[i]) {
                        return Err(SmtError::Syntax(i, format!("invalid character `{}`", bytes[i])));
                    }
                    i += 1;
                }
                stack.last_mut().expect("stack").push(Sx::Atom(bytes[start..i].iter().collect()));
            }
        }
    }
    if stack.len() != 1 {
        return Err(SmtError::Syntax(bytes.len(), "unbalanced `(`".into()));
    }
    Ok(stack.pop().expect("top level"))
}

/// A script read back: declarations and assertions in the emitted subset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedScript {
    pub logic: String,
    pub declarations: Vec<String>,
    assertions: Vec<Sx>,
    pub check_sat: bool,
    pub get_model: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Sort {
    Int,
    Bool,
}

fn sort_of(e: &Sx, decls: &BTreeSet<String>) -> Result<Sort, SmtError> {
    match e {
        Sx::Atom(a) if a == "true" || a == "false" => Ok(Sort::Bool),
        Sx::Atom(a) if a.chars().all(|c| c.is_ascii_digit()) => Ok(Sort::Int),
        Sx::Atom(a) => {
            if decls.contains(a) {
                Ok(Sort::Int)
            } else {
                Err(SmtError::Undeclared(a.clone()))
            }
        }
        Sx::List(items) => {
            let Some(Sx::Atom(op)) = items.first() else {
                return Err(SmtError::Unsupported(format!("{e:?}")));
            };
            let args = &items[1..];
            let sorts = args.iter().map(|a| sort_of(a, decls)).collect::<Result<Vec<_>, _>>()?;
            let all = |s: Sort| sorts.iter().all(|&x| x == s);
            let (want, res, arity) = match op.as_str() {
                "+" => (Sort::Int, Sort::Int, 2..usize::MAX),
                "-" => (Sort::Int, Sort::Int, 1..usize::MAX),
                "*" => (Sort::Int, Sort::Int, 2..3),
                "<=" | "<" | ">=" | ">" | "=" => (Sort::Int, Sort::Bool, 2..3),
                "and" | "or" => (Sort::Bool, Sort::Bool, 1..usize::MAX),
                "not" => (Sort::Bool, Sort::Bool, 1..2),
                other => return Err(SmtError::Unsupported(other.to_string())),
            };
            if !arity.contains(&args.len()) || !all(want) {
                return Err(SmtError::Sort(format!("bad arguments to `{op}`")));
            }
            if op == "*" && !args.iter().any(|a| eval_const(a).is_some()) {
                return Err(SmtError::Sort("nonlinear multiplication".into()));
            }
            Ok(res)
        }
    }
}

fn eval_const(e: &Sx) -> Option<i128> {
    match e {
        Sx::Atom(a) => a.parse().ok(),
        Sx::List(items) => match &items[..] {
            [Sx::Atom(op), x] if op == "-" => eval_const(x).map(|v| -v),
            _ => None,
        },
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Val {
    Int(i128),
    Bool(bool),
}

fn eval(e: &Sx, model: &BTreeMap<String, i64>) -> Option<Val> {
    let int = |e: &Sx| match eval(e, model)? {
        Val::Int(v) => Some(v),
        Val::Bool(_) => None,
    };
    let boolean = |e: &Sx| match eval(e, model)? {
        Val::Bool(b) => Some(b),
        Val::Int(_) => None,
    };
    match e {
        Sx::Atom(a) if a == "true" => Some(Val::Bool(true)),
        Sx::Atom(a) if a == "false" => Some(Val::Bool(false)),
        Sx::Atom(a) => a.parse().ok().or_else(|| model.get(a).map(|&v| v as i128)).map(Val::Int),
        Sx::List(items) => {
            let Sx::Atom(op) = &items[0] else { return None };
            let args = &items[1..];
            Some(match op.as_str() {
                "+" => Val::Int(args.iter().map(int).sum::<Option<i128>>()?),
                "-" if args.len() == 1 => Val::Int(-int(&args[0])?),
                "-" => Val::Int(int(&args[0])? - args[1..].iter().map(int).sum::<Option<i128>>()?),
                "*" => Val::Int(args.iter().map(int).product::<Option<i128>>()?),
                "<=" => Val::Bool(int(&args[0])? <= int(&args[1])?),
                "<" => Val::Bool(int(&args[0])? < int(&args[1])?),
                ">=" => Val::Bool(int(&args[0])? >= int(&args[1])?),
                ">" => Val::Bool(int(&args[0])? > int(&args[1])?),
                "=" => Val::Bool(int(&args[0])? == int(&args[1])?),
                "not" => Val::Bool(!boolean(&args[0])?),
                "and" => Val::Bool(args.iter().map(boolean).collect::<Option<Vec<_>>>()?.into_iter().all(|b| b)),
                "or" => Val::Bool(args.iter().map(boolean).collect::<Option<Vec<_>>>()?.into_iter().any(|b| b)),
                _ => return None,
            })
        }
    }
}

/// Read a script in the emitted subset, checking that every symbol is
/// declared before use and every assertion is a well-sorted formula.
pub fn read_smtlib(text: &str) -> Result<ParsedScript, SmtError> {
    let mut out = ParsedScript {
        logic: String::new(),
        declarations: Vec::new(),
        assertions: Vec::new(),
        check_sat: false,
        get_model: false,
    };
    let mut decls: BTreeSet<String> = BTreeSet::new();
    for cmd in tokenize(text)? {
        let Sx::List(items) = &cmd else {
            return Err(SmtError::Unsupported(format!("{cmd:?}")));
        };
        match &items[..] {
            [Sx::Atom(c), Sx::Atom(logic)] if c == "set-logic" && out.logic.is_empty() => out.logic = logic.clone(),
            [Sx::Atom(c), Sx::Atom(name), Sx::Atom(sort)] if c == "declare-const" && sort == "Int" => {
                if !decls.insert(name.clone()) {
                    return Err(SmtError::Redeclared(name.clone()));
                }
                out.declarations.push(name.clone());
            }
            [Sx::Atom(c), body] if c == "assert" => {
                if sort_of(body, &decls)? != Sort::Bool {
                    return Err(SmtError::Sort("assertion is not a formula".into()));
                }
                out.assertions.push(body.clone());
            }
            [Sx::Atom(c)] if c == "check-sat" => out.check_sat = true,
            [Sx::Atom(c)] if c == "get-model" && out.check_sat => out.get_model = true,
            _ => return Err(SmtError::Unsupported(format!("{cmd:?}"))),
        }
    }
    if out.logic.is_empty() {
        return Err(SmtError::Unsupported("missing set-logic".into()));
    }
    Ok(out)
}

impl ParsedScript {
    pub fn num_assertions(&self) -> usize {
        self.assertions.len()
    }

    /// Whether every assertion holds under `model`; `None` when some
    /// declared symbol is unassigned.
    pub fn holds(&self, model: &BTreeMap<String, i64>) -> Option<bool> {
        let mut all = true;
        for a in &self.assertions {
            match eval(a, model)? {
                Val::Bool(b) => all &= b,
                Val::Int(_) => return None,
            }
        }
        Some(all)
    }
}
