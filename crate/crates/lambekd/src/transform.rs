//! Parse transformers: named functions from parses of one grammar to parses
//! of another, one word at a time. The contract every transformer must keep
//! is that the yield never changes; the oracle checks re-verify it on every
//! enumerated input, so a transformer that edits the word cannot slip
//! through equivalence checking unnoticed.

use crate::grammar::GrammarExpr;
use crate::tree::ParseTree;
use std::fmt;
use std::sync::Arc;

#[derive(Clone)]
pub struct Transformer {
    pub name: String,
    pub source: GrammarExpr,
    pub target: GrammarExpr,
    func: Arc<dyn Fn(&ParseTree) -> ParseTree + Send + Sync>,
}

impl Transformer {
    pub fn new(
        name: impl Into<String>,
        source: GrammarExpr,
        target: GrammarExpr,
        func: impl Fn(&ParseTree) -> ParseTree + Send + Sync + 'static,
    ) -> Self {
        Transformer {
            name: name.into(),
            source,
            target,
            func: Arc::new(func),
        }
    }

    pub fn identity(name: impl Into<String>, grammar: GrammarExpr) -> Self {
        Transformer::new(name, grammar.clone(), grammar, |t| t.clone())
    }

    pub fn apply(&self, t: &ParseTree) -> ParseTree {
        (self.func)(t)
    }

    /// `other` after `self`. Sources and targets must line up.
    pub fn then(&self, other: &Transformer) -> Transformer {
        assert_eq!(
            self.target, other.source,
            "composition {} ; {} does not type-check",
            self.name, other.name
        );
        let f = self.func.clone();
        let g = other.func.clone();
        Transformer {
            name: format!("{}; {}", self.name, other.name),
            source: self.source.clone(),
            target: other.target.clone(),
            func: Arc::new(move |t| g(&f(t))),
        }
    }
}

impl fmt::Debug for Transformer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Transformer({} : {} -> {})", self.name, self.source, self.target)
    }
}
