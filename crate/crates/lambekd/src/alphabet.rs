//! Token alphabets.
//!
//! An alphabet is an ordered list of distinct tokens. Tokens are short opaque
//! strings rather than single characters, so a symbol like `NUM` counts as one
//! terminal. The declaration order doubles as the rank order used whenever
//! words have to be enumerated or compared deterministically.

use std::collections::HashMap;
use std::fmt;

pub type Token = String;

#[derive(Debug, Clone)]
pub struct Alphabet {
    symbols: Vec<Token>,
    rank: HashMap<Token, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlphabetError {
    #[error("duplicate token {0:?} in alphabet")]
    DuplicateToken(Token),
    #[error("empty token in alphabet")]
    EmptyToken,
}

impl Alphabet {
    pub fn new<I, S>(symbols: I) -> Result<Self, AlphabetError>
    where
        I: IntoIterator<Item = S>,
        S: Into<Token>,
    {
        let mut list = Vec::new();
        let mut rank = HashMap::new();
        for s in symbols {
            let tok: Token = s.into();
            if tok.is_empty() {
                return Err(AlphabetError::EmptyToken);
            }
            if rank.insert(tok.clone(), list.len()).is_some() {
                return Err(AlphabetError::DuplicateToken(tok));
            }
            list.push(tok);
        }
        Ok(Alphabet { symbols: list, rank })
    }

    pub fn symbols(&self) -> &[Token] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn contains(&self, tok: &str) -> bool {
        self.rank.contains_key(tok)
    }

    /// Position of a token in declaration order.
    pub fn rank(&self, tok: &str) -> Option<usize> {
        self.rank.get(tok).copied()
    }

    /// All words of length at most `max_len`, shortest first and in rank
    /// order within each length. This is the canonical word order used by
    /// every exhaustive check; "first counterexample" always means first in
    /// this order.
    pub fn words_up_to(&self, max_len: usize) -> Vec<Vec<Token>> {
        let mut out = vec![Vec::new()];
        let mut layer: Vec<Vec<Token>> = vec![Vec::new()];
        for _ in 0..max_len {
            let mut next = Vec::with_capacity(layer.len() * self.symbols.len());
            for w in &layer {
                for tok in &self.symbols {
                    let mut v = w.clone();
                    v.push(tok.clone());
                    next.push(v);
                }
            }
            out.extend(next.iter().cloned());
            layer = next;
        }
        out
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.symbols.join(", "))
    }
}

/// Renders a word the way diagnostics and reports print it: tokens joined
/// without separators when all are single characters, space separated
/// otherwise.
pub fn display_word(w: &[Token]) -> String {
    if w.iter().all(|t| t.chars().count() == 1) {
        w.concat()
    } else {
        w.join(" ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates() {
        assert_eq!(
            Alphabet::new(["a", "b", "a"]).unwrap_err(),
            AlphabetError::DuplicateToken("a".into())
        );
    }

    #[test]
    fn words_are_in_shortlex_order() {
        let ab = Alphabet::new(["a", "b"]).unwrap();
        let words = ab.words_up_to(2);
        let rendered: Vec<String> = words.iter().map(|w| display_word(w)).collect();
        assert_eq!(rendered, ["", "a", "b", "aa", "ab", "ba", "bb"]);
    }

    #[test]
    fn word_count_is_geometric() {
        let abc = Alphabet::new(["a", "b", "c"]).unwrap();
        assert_eq!(abc.words_up_to(5).len(), 1 + 3 + 9 + 27 + 81 + 243);
    }
}
