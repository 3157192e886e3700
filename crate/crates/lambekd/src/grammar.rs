//! Grammar expressions and environments.
//!
//! A grammar denotes a function from words to sets of parse trees. The
//! connectives are the linear ones: literals, the empty word, tensor
//! (concatenation with an explicit split), finite tagged sums and products,
//! references to named fixpoints, and `Reify` of a word predicate. Sums and
//! products carry an explicit ordered tag list; the binary cases are the
//! two-tag instances and the empty cases give the empty grammar and the grammar
//! `top` that parses everything.
//!
//! Kleene star is deliberately not a primitive: it is the named fixpoint with
//! `nil` and `cons` branches, which keeps one induction principle for all
//! recursive grammars.

use crate::alphabet::{Alphabet, Token};
use indexmap::IndexMap;
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GrammarExpr {
    /// A single terminal token.
    Lit(Token),
    /// The empty word.
    Eps,
    /// Concatenation; a parse records where the word splits.
    Tensor(Box<GrammarExpr>, Box<GrammarExpr>),
    /// Finite tagged sum. `SumN([])` is the empty grammar.
    SumN(Vec<(String, GrammarExpr)>),
    /// Finite tagged product. `AndN([])` parses every word.
    AndN(Vec<(String, GrammarExpr)>),
    /// Reference to a nonterminal defined in the environment.
    NtRef(String),
    /// All words satisfying the named predicate, one parse per word.
    Reify(String),
}

impl GrammarExpr {
    pub fn lit(tok: impl Into<Token>) -> Self {
        GrammarExpr::Lit(tok.into())
    }

    pub fn tensor(l: GrammarExpr, r: GrammarExpr) -> Self {
        GrammarExpr::Tensor(Box::new(l), Box::new(r))
    }

    /// Right-nested tensor of several factors; `seq([])` is `Eps`.
    pub fn seq(parts: Vec<GrammarExpr>) -> Self {
        let mut it = parts.into_iter().rev();
        match it.next() {
            None => GrammarExpr::Eps,
            Some(last) => it.fold(last, |acc, e| GrammarExpr::tensor(e, acc)),
        }
    }

    /// Binary sum with the conventional `inl`/`inr` tags.
    pub fn union2(l: GrammarExpr, r: GrammarExpr) -> Self {
        GrammarExpr::SumN(vec![("inl".into(), l), ("inr".into(), r)])
    }

    pub fn sum(branches: Vec<(&str, GrammarExpr)>) -> Self {
        GrammarExpr::SumN(branches.into_iter().map(|(t, e)| (t.into(), e)).collect())
    }

    pub fn and(branches: Vec<(&str, GrammarExpr)>) -> Self {
        GrammarExpr::AndN(branches.into_iter().map(|(t, e)| (t.into(), e)).collect())
    }

    /// The grammar with no parses at all.
    pub fn empty() -> Self {
        GrammarExpr::SumN(Vec::new())
    }

    /// The grammar with exactly one parse of every word.
    pub fn top() -> Self {
        GrammarExpr::AndN(Vec::new())
    }

    pub fn nt(name: impl Into<String>) -> Self {
        GrammarExpr::NtRef(name.into())
    }
}

impl fmt::Display for GrammarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Mirrors the text format read by the parser in `textfmt`.
        match self {
            GrammarExpr::Lit(t) => write!(f, "'{t}'"),
            GrammarExpr::Eps => write!(f, "eps"),
            GrammarExpr::SumN(bs) if bs.is_empty() => write!(f, "empty"),
            GrammarExpr::AndN(bs) if bs.is_empty() => write!(f, "top"),
            GrammarExpr::Tensor(l, r) => {
                // Parenthesize left tensors (juxtaposition re-reads as
                // right-nested) and any non-empty sum on either side.
                let wrap_l = matches!(**l, GrammarExpr::SumN(ref b) if !b.is_empty())
                    || matches!(**l, GrammarExpr::Tensor(..));
                let wrap_r = matches!(**r, GrammarExpr::SumN(ref b) if !b.is_empty());
                if wrap_l {
                    write!(f, "({l})")?;
                } else {
                    write!(f, "{l}")?;
                }
                write!(f, " ")?;
                if wrap_r {
                    write!(f, "({r})")
                } else {
                    write!(f, "{r}")
                }
            }
            GrammarExpr::SumN(bs) => {
                for (tag, e) in bs {
                    write!(f, "|{tag}: ")?;
                    match e {
                        GrammarExpr::SumN(inner) if !inner.is_empty() => write!(f, "({e})")?,
                        _ => write!(f, "{e}")?,
                    }
                    write!(f, " ")?;
                }
                Ok(())
            }
            GrammarExpr::AndN(bs) => {
                write!(f, "&{{")?;
                for (i, (tag, e)) in bs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{tag}: {e}")?;
                }
                write!(f, "}}")
            }
            GrammarExpr::NtRef(n) => write!(f, "{n}"),
            GrammarExpr::Reify(p) => write!(f, "reify({p})"),
        }
    }
}

pub type Predicate = Arc<dyn Fn(&[Token]) -> bool + Send + Sync>;

/// A set of named grammar definitions over one alphabet, plus the word
/// predicates that `Reify` may mention. Definition order is kept: it is the
/// order used by reports and by the text format printer.
#[derive(Clone)]
pub struct GrammarEnv {
    pub alphabet: Alphabet,
    defs: IndexMap<String, GrammarExpr>,
    predicates: HashMap<String, Predicate>,
}

impl fmt::Debug for GrammarEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GrammarEnv")
            .field("alphabet", &self.alphabet)
            .field("defs", &self.defs)
            .field("predicates", &self.predicates.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl GrammarEnv {
    pub fn new(alphabet: Alphabet) -> Self {
        GrammarEnv {
            alphabet,
            defs: IndexMap::new(),
            predicates: HashMap::new(),
        }
    }

    /// Adds or replaces a definition, keeping first-insertion order.
    pub fn define(&mut self, name: impl Into<String>, body: GrammarExpr) {
        self.defs.insert(name.into(), body);
    }

    pub fn define_predicate(
        &mut self,
        name: impl Into<String>,
        pred: impl Fn(&[Token]) -> bool + Send + Sync + 'static,
    ) {
        self.predicates.insert(name.into(), Arc::new(pred));
    }

    pub fn lookup(&self, name: &str) -> Option<&GrammarExpr> {
        self.defs.get(name)
    }

    pub fn predicate(&self, name: &str) -> Option<&Predicate> {
        self.predicates.get(name)
    }

    pub fn defs(&self) -> impl Iterator<Item = (&String, &GrammarExpr)> {
        self.defs.iter()
    }

    pub fn first_def(&self) -> Option<&String> {
        self.defs.keys().next()
    }

    /// Copies every definition and predicate of `other` into `self`.
    /// Names must not collide with existing ones.
    pub fn merge(&mut self, other: &GrammarEnv) -> Result<(), String> {
        for (name, body) in other.defs() {
            if self.defs.contains_key(name) {
                return Err(format!("nonterminal {name:?} defined on both sides"));
            }
            self.defs.insert(name.clone(), body.clone());
        }
        for (name, pred) in &other.predicates {
            if self.predicates.contains_key(name) {
                return Err(format!("predicate {name:?} defined on both sides"));
            }
            self.predicates.insert(name.clone(), pred.clone());
        }
        Ok(())
    }
}

/// One structural problem found by `validate_env`, located by nonterminal and
/// a path of steps inside its body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub nonterminal: String,
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.nonterminal, self.path, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that every literal is in the alphabet, every nonterminal reference
/// and predicate resolves, and tags within each sum or product are distinct.
pub fn validate_env(env: &GrammarEnv) -> ValidationReport {
    let mut report = ValidationReport::default();
    for (name, body) in env.defs() {
        walk(env, name, body, "/", &mut report);
    }
    report
}

fn walk(env: &GrammarEnv, nt: &str, e: &GrammarExpr, path: &str, report: &mut ValidationReport) {
    let mut push = |path: &str, message: String| {
        report.violations.push(Violation {
            nonterminal: nt.to_string(),
            path: path.to_string(),
            message,
        });
    };
    match e {
        GrammarExpr::Lit(tok) => {
            if !env.alphabet.contains(tok) {
                push(path, format!("literal {tok:?} is not in the alphabet"));
            }
        }
        GrammarExpr::Eps => {}
        GrammarExpr::Tensor(l, r) => {
            walk(env, nt, l, &format!("{path}l/"), report);
            walk(env, nt, r, &format!("{path}r/"), report);
        }
        GrammarExpr::SumN(bs) | GrammarExpr::AndN(bs) => {
            let mut seen = std::collections::HashSet::new();
            for (tag, _) in bs {
                if !seen.insert(tag) {
                    push(path, format!("duplicate tag {tag:?}"));
                }
            }
            for (tag, b) in bs {
                walk(env, nt, b, &format!("{path}{tag}/"), report);
            }
        }
        GrammarExpr::NtRef(name) => {
            if env.lookup(name).is_none() {
                push(path, format!("undefined nonterminal {name:?}"));
            }
        }
        GrammarExpr::Reify(p) => {
            if env.predicate(p).is_none() {
                push(path, format!("undefined predicate {p:?}"));
            }
        }
    }
}
