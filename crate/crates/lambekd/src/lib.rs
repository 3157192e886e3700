//! A toolkit for formal grammars viewed semantically: a grammar maps each
//! word to the set of its parse trees, a language is the set of words with
//! at least one parse, and a parser is a total function that returns a
//! parse on acceptance and positive evidence of rejection otherwise.
//!
//! The pieces:
//!
//! - [`alphabet`], [`grammar`], [`tree`]: token alphabets, grammar
//!   expressions (literals, the empty word, concatenation, tagged sums and
//!   products, named fixpoints, reified predicates), environments of named
//!   definitions, parse trees, and the generic fold over them.
//! - [`oracle`]: a brute-force enumerator of all parses of a word, and on
//!   top of it decision procedures — at a word-length bound — for
//!   ambiguity, disjointness, language equality, strong equivalence of
//!   transformer pairs, and parser audits.
//! - [`regex`], [`nfa`], [`dfa`]: regular expressions, their translation
//!   to grammars, the standard two-terminal automaton construction,
//!   determinization through closed subsets, and yield-preserving
//!   translations between regex parses, machine traces, and deterministic
//!   traces — the full pipeline from a regex to a verified parser.
//! - [`dyck`], [`expr`]: two context-free case studies — balanced
//!   parentheses with a counter machine, and right-associative arithmetic
//!   expressions with a one-token-lookahead machine.
//! - [`textfmt`]: a line-oriented text format for grammar environments.
//!
//! Everything discrete is deterministically ordered (words shortlex,
//! splits ascending, branches in declaration order), so enumeration
//! results and serialized output are stable across runs.

pub mod alphabet;
pub mod dfa;
pub mod dyck;
pub mod expr;
pub mod grammar;
pub mod nfa;
pub mod oracle;
pub mod regex;
pub mod textfmt;
pub mod transform;
pub mod tree;

pub use alphabet::{Alphabet, Token};
pub use grammar::{GrammarEnv, GrammarExpr};
pub use oracle::{count_parses, enumerate_parses, EquivReport, EquivStatus, OracleError};
pub use transform::Transformer;
pub use tree::ParseTree;
