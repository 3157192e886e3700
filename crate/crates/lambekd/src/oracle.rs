//! The semantic oracle: exact parse-set enumeration and the brute-force
//! checks built on it.
//!
//! `enumerate_parses` computes the full set of parse trees of a grammar at
//! one word, straight off the defining equations: a literal parses exactly
//! its own token, tensor sums over split points, sums tag, products pair up
//! parses of the same word, nonterminals unroll their definition. Everything
//! else in the crate is ultimately judged against this function, so it is
//! deliberately the dumbest exact algorithm that terminates: memoized
//! recursion on (grammar node, token span).
//!
//! Termination is the one interesting point. A recursive grammar can reach
//! the same (node, span) pair again without consuming input; when that
//! happens the parse set at that word is not finite (each lap around the
//! cycle wraps another layer of constructors) or the grammar is vacuously
//! self-referential, and either way the honest answer is an
//! `InfiniteParseSet` error rather than a silently pruned result. Tensor
//! factors are evaluated left to right and a split is abandoned as soon as
//! one factor has no parses, so a cycle that is blocked by an unsatisfiable
//! sibling is never entered: ordinary recursive grammars whose cycles all
//! consume input enumerate cleanly.

use crate::alphabet::{display_word, Token};
use crate::grammar::{GrammarEnv, GrammarExpr};
use crate::transform::Transformer;
use crate::tree::{well_formed, ParseTree};
use serde_json::{json, Value};
use std::collections::{HashMap, HashSet};
use std::rc::Rc;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("token {token:?} is not in the alphabet")]
    TokenOutOfAlphabet { token: Token },
    #[error("infinite parse set: {at} revisited at token span {lo}..{hi} without consuming input")]
    InfiniteParseSet { at: String, lo: usize, hi: usize },
    #[error("transformer {transformer:?} changed the yield on input {word:?}: {detail}")]
    YieldViolation {
        transformer: String,
        word: String,
        detail: String,
    },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("undefined {kind} {name:?}")]
    UndefinedName { kind: &'static str, name: String },
    #[error("contract violation: {0}")]
    ContractViolation(String),
}

/// All parses of `g` at `w`, deduplicated, in a deterministic order:
/// tensor splits shortest-left first, sum branches in declaration order,
/// product entries advanced odometer-style with the first branch slowest.
pub fn enumerate_parses(
    env: &GrammarEnv,
    g: &GrammarExpr,
    w: &[Token],
) -> Result<Vec<ParseTree>, OracleError> {
    for tok in w {
        if !env.alphabet.contains(tok) {
            return Err(OracleError::TokenOutOfAlphabet { token: tok.clone() });
        }
    }
    let mut en = Enumerator {
        env,
        word: w,
        memo: HashMap::new(),
        in_progress: HashSet::new(),
    };
    let parses = en.enumerate(g, 0, w.len())?;
    Ok(parses.as_ref().clone())
}

pub fn count_parses(env: &GrammarEnv, g: &GrammarExpr, w: &[Token]) -> Result<usize, OracleError> {
    Ok(enumerate_parses(env, g, w)?.len())
}

/// Memo key: grammar node identity plus token span. Node identity is the
/// node's address, which is stable for the duration of one call because both
/// the environment and the root expression are borrowed.
type Key = (usize, usize, usize);

struct Enumerator<'a> {
    env: &'a GrammarEnv,
    word: &'a [Token],
    memo: HashMap<Key, Rc<Vec<ParseTree>>>,
    in_progress: HashSet<Key>,
}

impl<'a> Enumerator<'a> {
    fn enumerate(
        &mut self,
        g: &'a GrammarExpr,
        lo: usize,
        hi: usize,
    ) -> Result<Rc<Vec<ParseTree>>, OracleError> {
        let key = (g as *const GrammarExpr as usize, lo, hi);
        if let Some(hit) = self.memo.get(&key) {
            return Ok(hit.clone());
        }
        if !self.in_progress.insert(key) {
            let mut at = g.to_string();
            if at.len() > 40 {
                at.truncate(40);
                at.push_str("...");
            }
            return Err(OracleError::InfiniteParseSet { at, lo, hi });
        }
        let computed = self.compute(g, lo, hi);
        self.in_progress.remove(&key);
        let mut parses = computed?;
        dedup_in_place(&mut parses);
        let parses = Rc::new(parses);
        self.memo.insert(key, parses.clone());
        Ok(parses)
    }

    fn compute(
        &mut self,
        g: &'a GrammarExpr,
        lo: usize,
        hi: usize,
    ) -> Result<Vec<ParseTree>, OracleError> {
        Ok(match g {
            GrammarExpr::Lit(c) => {
                if hi - lo == 1 && &self.word[lo] == c {
                    vec![ParseTree::LitLeaf(c.clone())]
                } else {
                    Vec::new()
                }
            }
            GrammarExpr::Eps => {
                if lo == hi {
                    vec![ParseTree::EpsLeaf]
                } else {
                    Vec::new()
                }
            }
            GrammarExpr::Tensor(l, r) => {
                let mut out = Vec::new();
                for k in 0..=(hi - lo) {
                    let ls = self.enumerate(l, lo, lo + k)?;
                    if ls.is_empty() {
                        continue;
                    }
                    let rs = self.enumerate(r, lo + k, hi)?;
                    for lt in ls.iter() {
                        for rt in rs.iter() {
                            out.push(ParseTree::pair(k, lt.clone(), rt.clone()));
                        }
                    }
                }
                out
            }
            GrammarExpr::SumN(branches) => {
                let mut out = Vec::new();
                for (tag, b) in branches {
                    for t in self.enumerate(b, lo, hi)?.iter() {
                        out.push(ParseTree::inj(tag.clone(), t.clone()));
                    }
                }
                out
            }
            GrammarExpr::AndN(branches) => {
                let mut parts: Vec<Rc<Vec<ParseTree>>> = Vec::with_capacity(branches.len());
                let mut some_empty = false;
                for (_, b) in branches {
                    let p = self.enumerate(b, lo, hi)?;
                    if p.is_empty() {
                        some_empty = true;
                        break;
                    }
                    parts.push(p);
                }
                if some_empty {
                    Vec::new()
                } else {
                    cartesian(branches, &parts)
                }
            }
            GrammarExpr::NtRef(name) => {
                let def = self.env.lookup(name).ok_or(OracleError::UndefinedName {
                    kind: "nonterminal",
                    name: name.clone(),
                })?;
                self.enumerate(def, lo, hi)?
                    .iter()
                    .map(|t| ParseTree::roll(name.clone(), t.clone()))
                    .collect()
            }
            GrammarExpr::Reify(p) => {
                let pred = self.env.predicate(p).ok_or(OracleError::UndefinedName {
                    kind: "predicate",
                    name: p.clone(),
                })?;
                let span = &self.word[lo..hi];
                if pred(span) {
                    vec![ParseTree::ReifyLeaf {
                        predicate_id: p.clone(),
                        witness: span.to_vec(),
                    }]
                } else {
                    Vec::new()
                }
            }
        })
    }
}

fn cartesian(branches: &[(String, GrammarExpr)], parts: &[Rc<Vec<ParseTree>>]) -> Vec<ParseTree> {
    let mut out = Vec::new();
    let mut idx = vec![0usize; parts.len()];
    'next: loop {
        out.push(ParseTree::Tuple(
            branches
                .iter()
                .enumerate()
                .map(|(j, (tag, _))| (tag.clone(), parts[j][idx[j]].clone()))
                .collect(),
        ));
        // Advance odometer-style, last branch fastest.
        let mut j = parts.len();
        while j > 0 {
            j -= 1;
            idx[j] += 1;
            if idx[j] < parts[j].len() {
                continue 'next;
            }
            idx[j] = 0;
        }
        return out;
    }
}

fn dedup_in_place(v: &mut Vec<ParseTree>) {
    let mut seen = HashSet::with_capacity(v.len());
    v.retain(|t| seen.insert(t.clone()));
}

/// Outcome of one brute-force check up to a word length bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivReport {
    pub max_len: usize,
    pub checked_word_count: usize,
    pub status: EquivStatus,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EquivStatus {
    Pass,
    Fail {
        counterexample: Vec<Token>,
        detail: String,
    },
}

impl EquivReport {
    pub fn passed(&self) -> bool {
        matches!(self.status, EquivStatus::Pass)
    }

    fn pass(max_len: usize, checked: usize) -> Self {
        EquivReport {
            max_len,
            checked_word_count: checked,
            status: EquivStatus::Pass,
        }
    }

    fn fail(max_len: usize, checked: usize, w: &[Token], detail: String) -> Self {
        EquivReport {
            max_len,
            checked_word_count: checked,
            status: EquivStatus::Fail {
                counterexample: w.to_vec(),
                detail,
            },
        }
    }

    pub fn to_json(&self) -> Value {
        match &self.status {
            EquivStatus::Pass => json!({
                "status": "pass",
                "maxLen": self.max_len,
                "checked": self.checked_word_count,
            }),
            EquivStatus::Fail { counterexample, detail } => json!({
                "status": "fail",
                "maxLen": self.max_len,
                "checked": self.checked_word_count,
                "counterexample": counterexample,
                "detail": detail,
            }),
        }
    }
}

/// At most one parse per word, for all words up to `max_len`.
pub fn check_unambiguous(
    env: &GrammarEnv,
    g: &GrammarExpr,
    max_len: usize,
) -> Result<EquivReport, OracleError> {
    let mut checked = 0;
    for w in env.alphabet.words_up_to(max_len) {
        checked += 1;
        let n = count_parses(env, g, &w)?;
        if n > 1 {
            return Ok(EquivReport::fail(max_len, checked, &w, format!("{n} distinct parses")));
        }
    }
    Ok(EquivReport::pass(max_len, checked))
}

/// No word parsed by both grammars, up to `max_len`.
pub fn check_disjoint(
    env: &GrammarEnv,
    a: &GrammarExpr,
    b: &GrammarExpr,
    max_len: usize,
) -> Result<EquivReport, OracleError> {
    let mut checked = 0;
    for w in env.alphabet.words_up_to(max_len) {
        checked += 1;
        if count_parses(env, a, &w)? > 0 && count_parses(env, b, &w)? > 0 {
            return Ok(EquivReport::fail(max_len, checked, &w, "both grammars parse this word".into()));
        }
    }
    Ok(EquivReport::pass(max_len, checked))
}

/// Same set of parsed words (ignoring how many parses each has), up to `max_len`.
pub fn check_language_equal(
    env: &GrammarEnv,
    a: &GrammarExpr,
    b: &GrammarExpr,
    max_len: usize,
) -> Result<EquivReport, OracleError> {
    let mut checked = 0;
    for w in env.alphabet.words_up_to(max_len) {
        checked += 1;
        let na = count_parses(env, a, &w)?;
        let nb = count_parses(env, b, &w)?;
        if (na > 0) != (nb > 0) {
            return Ok(EquivReport::fail(
                max_len,
                checked,
                &w,
                format!("left has {na} parses, right has {nb}"),
            ));
        }
    }
    Ok(EquivReport::pass(max_len, checked))
}

/// Both round trips are the identity on every enumerated parse up to
/// `max_len`. The yield of every transformer output is re-verified along the
/// way; a changed yield is an error (not a mere failure), naming the
/// transformer.
pub fn check_strong_equiv(
    env: &GrammarEnv,
    f: &Transformer,
    g: &Transformer,
    max_len: usize,
) -> Result<EquivReport, OracleError> {
    if f.source != g.target || f.target != g.source {
        return Err(OracleError::ContractViolation(format!(
            "transformers {} and {} do not form a round trip",
            f.name, g.name
        )));
    }
    let mut checked = 0;
    for w in env.alphabet.words_up_to(max_len) {
        checked += 1;
        for t in enumerate_parses(env, &f.source, &w)? {
            let ft = apply_checked(f, &t, &w)?;
            if !well_formed(env, &f.target, &ft) {
                return Ok(EquivReport::fail(
                    max_len,
                    checked,
                    &w,
                    format!("{} produced a tree that is not a parse of its target", f.name),
                ));
            }
            let back = apply_checked(g, &ft, &w)?;
            if back != t {
                return Ok(EquivReport::fail(
                    max_len,
                    checked,
                    &w,
                    format!("{} then {} is not the identity", f.name, g.name),
                ));
            }
        }
        for u in enumerate_parses(env, &g.source, &w)? {
            let gu = apply_checked(g, &u, &w)?;
            if !well_formed(env, &g.target, &gu) {
                return Ok(EquivReport::fail(
                    max_len,
                    checked,
                    &w,
                    format!("{} produced a tree that is not a parse of its target", g.name),
                ));
            }
            let back = apply_checked(f, &gu, &w)?;
            if back != u {
                return Ok(EquivReport::fail(
                    max_len,
                    checked,
                    &w,
                    format!("{} then {} is not the identity", g.name, f.name),
                ));
            }
        }
    }
    Ok(EquivReport::pass(max_len, checked))
}

/// Applies a transformer and insists the yield is unchanged.
pub fn apply_checked(
    f: &Transformer,
    t: &ParseTree,
    w: &[Token],
) -> Result<ParseTree, OracleError> {
    let out = f.apply(t);
    match out.yield_of() {
        Ok(y) if y == w => Ok(out),
        Ok(y) => Err(OracleError::YieldViolation {
            transformer: f.name.clone(),
            word: display_word(w),
            detail: format!("output yields {:?}", display_word(&y)),
        }),
        Err(e) => Err(OracleError::YieldViolation {
            transformer: f.name.clone(),
            word: display_word(w),
            detail: format!("output yield is undefined: {e}"),
        }),
    }
}

/// Splits a parse of a product-of-sums into the choice of branch tags it
/// makes and the tuple of chosen bodies. Inverse of `undistribute`.
pub fn distribute(t: &ParseTree) -> Result<(Vec<(String, String)>, ParseTree), OracleError> {
    let ParseTree::Tuple(entries) = t else {
        return Err(OracleError::ShapeMismatch("distribute needs a tuple".into()));
    };
    let mut choice = Vec::with_capacity(entries.len());
    let mut bodies = Vec::with_capacity(entries.len());
    for (outer, sub) in entries {
        let ParseTree::Inj { tag, body } = sub else {
            return Err(OracleError::ShapeMismatch(format!(
                "tuple entry {outer:?} is not an injection"
            )));
        };
        choice.push((outer.clone(), tag.clone()));
        bodies.push((outer.clone(), (**body).clone()));
    }
    Ok((choice, ParseTree::Tuple(bodies)))
}

/// Wraps each tuple entry back in the injection the choice map dictates.
pub fn undistribute(choice: &[(String, String)], t: &ParseTree) -> Result<ParseTree, OracleError> {
    let ParseTree::Tuple(entries) = t else {
        return Err(OracleError::ShapeMismatch("undistribute needs a tuple".into()));
    };
    if choice.len() != entries.len() {
        return Err(OracleError::ShapeMismatch(format!(
            "choice map has {} entries, tuple has {}",
            choice.len(),
            entries.len()
        )));
    }
    let mut out = Vec::with_capacity(entries.len());
    for ((outer_c, inner), (outer_t, body)) in choice.iter().zip(entries) {
        if outer_c != outer_t {
            return Err(OracleError::ShapeMismatch(format!(
                "choice map tag {outer_c:?} does not match tuple tag {outer_t:?}"
            )));
        }
        out.push((outer_t.clone(), ParseTree::inj(inner.clone(), body.clone())));
    }
    Ok(ParseTree::Tuple(out))
}

/// A total parser: every input word gets either a parse of the accept
/// grammar or a parse of the reject grammar, with the input as its yield.
#[derive(Clone)]
pub struct Parser {
    pub name: String,
    pub accept_grammar: GrammarExpr,
    pub reject_grammar: GrammarExpr,
    run: Arc<dyn Fn(&[Token]) -> Verdict + Send + Sync>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Accept(ParseTree),
    Reject(ParseTree),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParserResult {
    pub verdict: Verdict,
    pub accept_grammar: GrammarExpr,
    pub reject_grammar: GrammarExpr,
}

impl Parser {
    pub fn new(
        name: impl Into<String>,
        accept_grammar: GrammarExpr,
        reject_grammar: GrammarExpr,
        run: impl Fn(&[Token]) -> Verdict + Send + Sync + 'static,
    ) -> Self {
        Parser {
            name: name.into(),
            accept_grammar,
            reject_grammar,
            run: Arc::new(run),
        }
    }

    pub fn run(&self, w: &[Token]) -> ParserResult {
        ParserResult {
            verdict: (self.run)(w),
            accept_grammar: self.accept_grammar.clone(),
            reject_grammar: self.reject_grammar.clone(),
        }
    }
}

impl std::fmt::Debug for Parser {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Parser({})", self.name)
    }
}

/// Carries a parser for `A` across an equivalence `A ~ B`: accepted parses
/// are pushed through `f : A -> B`, rejections are kept as they are. `g` is
/// the witness that the equivalence really goes both ways; it is required so
/// a one-sided map cannot masquerade as an equivalence.
pub fn extend_parser(f: &Transformer, g: &Transformer, p: &Parser) -> Result<Parser, OracleError> {
    if f.source != p.accept_grammar {
        return Err(OracleError::ContractViolation(format!(
            "transformer {} does not start at the parser's accept grammar",
            f.name
        )));
    }
    if f.source != g.target || f.target != g.source {
        return Err(OracleError::ContractViolation(format!(
            "transformers {} and {} are not a matched pair",
            f.name, g.name
        )));
    }
    let f = f.clone();
    let p_inner = p.clone();
    Ok(Parser {
        name: format!("{} through {}", p.name, f.name),
        accept_grammar: f.target.clone(),
        reject_grammar: p.reject_grammar.clone(),
        run: Arc::new(move |w| match p_inner.run(w).verdict {
            Verdict::Accept(t) => Verdict::Accept(f.apply(&t)),
            Verdict::Reject(e) => Verdict::Reject(e),
        }),
    })
}

/// Exhaustively audits a parser up to `max_len`: every verdict's tree must
/// be a well-formed parse of the right grammar with the input as its yield,
/// and the accept and reject grammars must be disjoint.
pub fn check_parser(env: &GrammarEnv, p: &Parser, max_len: usize) -> Result<EquivReport, OracleError> {
    let disjoint = check_disjoint(env, &p.accept_grammar, &p.reject_grammar, max_len)?;
    if !disjoint.passed() {
        return Ok(disjoint);
    }
    let mut checked = 0;
    for w in env.alphabet.words_up_to(max_len) {
        checked += 1;
        let (tree, grammar, side) = match p.run(&w).verdict {
            Verdict::Accept(t) => (t, p.accept_grammar.clone(), "accept"),
            Verdict::Reject(t) => (t, p.reject_grammar.clone(), "reject"),
        };
        if tree.yield_of().ok().as_deref() != Some(&w[..]) {
            return Ok(EquivReport::fail(
                max_len,
                checked,
                &w,
                format!("parser {} returned a {side} tree whose yield is not the input", p.name),
            ));
        }
        if !well_formed(env, &grammar, &tree) {
            return Ok(EquivReport::fail(
                max_len,
                checked,
                &w,
                format!("parser {} returned a malformed {side} tree", p.name),
            ));
        }
    }
    Ok(EquivReport::pass(max_len, checked))
}

/// The word `w` as a grammar parsing exactly `w`: a right-nested tensor of
/// its tokens ending in the empty-word grammar.
pub fn internalize(w: &[Token]) -> GrammarExpr {
    let mut g = GrammarExpr::Eps;
    for tok in w.iter().rev() {
        g = GrammarExpr::tensor(GrammarExpr::Lit(tok.clone()), g);
    }
    g
}

/// Definitions for `Char` (any one token) and `String` (any word), the
/// grammars that read raw input. `String` has exactly one parse per word.
pub fn string_grammar(env: &mut GrammarEnv) {
    let char_branches = env
        .alphabet
        .symbols()
        .iter()
        .map(|tok| (tok.clone(), GrammarExpr::Lit(tok.clone())))
        .collect();
    env.define("Char", GrammarExpr::SumN(char_branches));
    env.define(
        "String",
        GrammarExpr::sum(vec![
            ("nil", GrammarExpr::Eps),
            ("cons", GrammarExpr::tensor(GrammarExpr::nt("Char"), GrammarExpr::nt("String"))),
        ]),
    );
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;

    fn abc_env() -> GrammarEnv {
        GrammarEnv::new(Alphabet::new(["a", "b", "c"]).unwrap())
    }

    fn toks(s: &str) -> Vec<Token> {
        s.chars().map(|c| c.to_string()).collect()
    }

    #[test]
    fn literal_pair_under_a_sum() {
        let env = abc_env();
        let g = GrammarExpr::union2(
            GrammarExpr::tensor(GrammarExpr::lit("a"), GrammarExpr::lit("b")),
            GrammarExpr::lit("c"),
        );
        let parses = enumerate_parses(&env, &g, &toks("ab")).unwrap();
        assert_eq!(
            parses,
            vec![ParseTree::inj(
                "inl",
                ParseTree::pair(1, ParseTree::lit("a"), ParseTree::lit("b"))
            )]
        );
        assert_eq!(count_parses(&env, &g, &toks("c")).unwrap(), 1);
        assert_eq!(count_parses(&env, &g, &toks("ba")).unwrap(), 0);
    }

    #[test]
    fn top_tensor_top_counts_splits() {
        let env = abc_env();
        let g = GrammarExpr::tensor(GrammarExpr::top(), GrammarExpr::top());
        assert_eq!(count_parses(&env, &g, &toks("ab")).unwrap(), 3);
    }

    #[test]
    fn empty_grammar_has_no_parses() {
        let env = abc_env();
        assert_eq!(count_parses(&env, &GrammarExpr::empty(), &toks("")).unwrap(), 0);
        assert_eq!(count_parses(&env, &GrammarExpr::empty(), &toks("a")).unwrap(), 0);
    }

    #[test]
    fn out_of_alphabet_token_is_an_error() {
        let env = abc_env();
        let err = enumerate_parses(&env, &GrammarExpr::top(), &toks("az")).unwrap_err();
        assert_eq!(err, OracleError::TokenOutOfAlphabet { token: "z".into() });
    }

    #[test]
    fn unproductive_self_reference_is_infinite() {
        let mut env = abc_env();
        env.define("Loop", GrammarExpr::nt("Loop"));
        let err = enumerate_parses(&env, &GrammarExpr::nt("Loop"), &toks("a")).unwrap_err();
        assert!(matches!(err, OracleError::InfiniteParseSet { .. }));
    }

    #[test]
    fn nullable_star_is_infinite() {
        let mut env = abc_env();
        // Star over a nullable body: unboundedly many parses of the empty word.
        env.define(
            "S",
            GrammarExpr::sum(vec![
                ("nil", GrammarExpr::Eps),
                ("cons", GrammarExpr::tensor(GrammarExpr::Eps, GrammarExpr::nt("S"))),
            ]),
        );
        let err = enumerate_parses(&env, &GrammarExpr::nt("S"), &toks("")).unwrap_err();
        assert!(matches!(err, OracleError::InfiniteParseSet { .. }));
    }

    #[test]
    fn consuming_star_enumerates_cleanly() {
        let mut env = abc_env();
        env.define(
            "S",
            GrammarExpr::sum(vec![
                ("nil", GrammarExpr::Eps),
                ("cons", GrammarExpr::tensor(GrammarExpr::lit("a"), GrammarExpr::nt("S"))),
            ]),
        );
        assert_eq!(count_parses(&env, &GrammarExpr::nt("S"), &toks("")).unwrap(), 1);
        assert_eq!(count_parses(&env, &GrammarExpr::nt("S"), &toks("aaa")).unwrap(), 1);
        assert_eq!(count_parses(&env, &GrammarExpr::nt("S"), &toks("ab")).unwrap(), 0);
    }

    #[test]
    fn unambiguity_of_primitives() {
        let env = abc_env();
        assert!(check_unambiguous(&env, &GrammarExpr::Eps, 4).unwrap().passed());
        assert!(check_unambiguous(&env, &GrammarExpr::lit("a"), 4).unwrap().passed());
        assert!(check_unambiguous(&env, &GrammarExpr::top(), 4).unwrap().passed());
    }

    #[test]
    fn ambiguous_union_is_caught_at_the_first_word() {
        let env = abc_env();
        let g = GrammarExpr::union2(GrammarExpr::lit("a"), GrammarExpr::lit("a"));
        let report = check_unambiguous(&env, &g, 3).unwrap();
        match report.status {
            EquivStatus::Fail { ref counterexample, .. } => {
                assert_eq!(counterexample, &toks("a"))
            }
            _ => panic!("expected a failure"),
        }
        // Words "" and "a" were examined before the verdict.
        assert_eq!(report.checked_word_count, 2);
    }

    #[test]
    fn empty_vs_eps_differ_at_the_empty_word() {
        let env = abc_env();
        let report = check_language_equal(&env, &GrammarExpr::empty(), &GrammarExpr::Eps, 3).unwrap();
        match report.status {
            EquivStatus::Fail { ref counterexample, .. } => assert!(counterexample.is_empty()),
            _ => panic!("expected a failure"),
        }
    }

    #[test]
    fn internalize_builds_the_word_grammar() {
        assert_eq!(internalize(&[]), GrammarExpr::Eps);
        let ab = internalize(&toks("ab"));
        assert_eq!(
            ab,
            GrammarExpr::tensor(
                GrammarExpr::lit("a"),
                GrammarExpr::tensor(GrammarExpr::lit("b"), GrammarExpr::Eps)
            )
        );
    }

    #[test]
    fn internalized_word_parses_only_itself() {
        let env = abc_env();
        let g = internalize(&toks("ab"));
        assert_eq!(count_parses(&env, &g, &toks("ab")).unwrap(), 1);
        assert_eq!(count_parses(&env, &g, &toks("ba")).unwrap(), 0);
        assert_eq!(count_parses(&env, &g, &toks("a")).unwrap(), 0);
    }

    #[test]
    fn string_grammar_is_unambiguous_and_total() {
        let mut env = abc_env();
        string_grammar(&mut env);
        let s = GrammarExpr::nt("String");
        assert!(check_unambiguous(&env, &s, 5).unwrap().passed());
        assert!(check_language_equal(&env, &s, &GrammarExpr::top(), 5).unwrap().passed());
    }

    #[test]
    fn reify_matches_its_predicate() {
        let mut env = abc_env();
        env.define_predicate("even-length", |w: &[Token]| w.len() % 2 == 0);
        let g = GrammarExpr::Reify("even-length".into());
        assert_eq!(count_parses(&env, &g, &toks("ab")).unwrap(), 1);
        assert_eq!(count_parses(&env, &g, &toks("abc")).unwrap(), 0);
        // Language equal to the sum over matching words, by brute force.
        let mut branches = Vec::new();
        for w in env.alphabet.words_up_to(3) {
            if w.len() % 2 == 0 {
                branches.push((format!("w{}", branches.len()), internalize(&w)));
            }
        }
        let explicit = GrammarExpr::SumN(branches);
        assert!(check_language_equal(&env, &g, &explicit, 3).unwrap().passed());
    }

    #[test]
    fn distribute_round_trips() {
        let t = ParseTree::Tuple(vec![
            ("x".into(), ParseTree::inj("l", ParseTree::lit("a"))),
            ("y".into(), ParseTree::inj("r", ParseTree::lit("a"))),
        ]);
        let (choice, tuple) = distribute(&t).unwrap();
        assert_eq!(choice, vec![("x".into(), "l".into()), ("y".into(), "r".into())]);
        assert_eq!(undistribute(&choice, &tuple).unwrap(), t);
    }

    #[test]
    fn distribute_rejects_bad_shapes() {
        let not_tuple = ParseTree::lit("a");
        assert!(matches!(distribute(&not_tuple), Err(OracleError::ShapeMismatch(_))));
        let not_inj = ParseTree::Tuple(vec![("x".into(), ParseTree::lit("a"))]);
        assert!(matches!(distribute(&not_inj), Err(OracleError::ShapeMismatch(_))));
    }

    #[test]
    fn strong_equiv_passes_for_a_real_equivalence() {
        // 'a' vs the one-branch sum over 'a': wrap and unwrap.
        let env = abc_env();
        let a = GrammarExpr::lit("a");
        let sum = GrammarExpr::sum(vec![("only", GrammarExpr::lit("a"))]);
        let wrap = Transformer::new("wrap", a.clone(), sum.clone(), |t| ParseTree::inj("only", t.clone()));
        let unwrap = Transformer::new("unwrap", sum, a, |t| match t {
            ParseTree::Inj { body, .. } => (**body).clone(),
            other => other.clone(),
        });
        assert!(check_strong_equiv(&env, &wrap, &unwrap, 3).unwrap().passed());
    }

    #[test]
    fn yield_violation_names_the_transformer() {
        let env = abc_env();
        let a = GrammarExpr::lit("a");
        let b = GrammarExpr::lit("b");
        let bad = Transformer::new("swap-token", a.clone(), b.clone(), |_| ParseTree::lit("b"));
        let back = Transformer::new("swap-back", b, a, |_| ParseTree::lit("a"));
        let err = check_strong_equiv(&env, &bad, &back, 2).unwrap_err();
        match err {
            OracleError::YieldViolation { transformer, .. } => assert_eq!(transformer, "swap-token"),
            other => panic!("expected a yield violation, got {other:?}"),
        }
    }

    #[test]
    fn extend_parser_carries_acceptance_across_an_equivalence() {
        let env = abc_env();
        let a = GrammarExpr::lit("a");
        let sum = GrammarExpr::sum(vec![("only", GrammarExpr::lit("a"))]);
        // Toy parser for 'a': accept exactly the word "a", reject anything
        // else with a top-parse as evidence.
        let base = Parser::new("just-a", a.clone(), GrammarExpr::top(), |w: &[Token]| {
            if w == ["a".to_string()] {
                Verdict::Accept(ParseTree::lit("a"))
            } else {
                Verdict::Reject(ParseTree::Tuple(Vec::new()))
            }
        });
        let wrap = Transformer::new("wrap", a.clone(), sum.clone(), |t| ParseTree::inj("only", t.clone()));
        let unwrap = Transformer::new("unwrap", sum.clone(), a.clone(), |t| match t {
            ParseTree::Inj { body, .. } => (**body).clone(),
            other => other.clone(),
        });
        let extended = extend_parser(&wrap, &unwrap, &base).unwrap();
        assert_eq!(extended.accept_grammar, sum);
        match extended.run(&toks("a")).verdict {
            Verdict::Accept(t) => assert_eq!(t, ParseTree::inj("only", ParseTree::lit("a"))),
            _ => panic!("should accept"),
        }
        match extended.run(&toks("b")).verdict {
            Verdict::Reject(_) => {}
            _ => panic!("should reject"),
        }
    }

    #[test]
    fn extend_parser_rejects_mismatched_transformers() {
        let a = GrammarExpr::lit("a");
        let b = GrammarExpr::lit("b");
        let p = Parser::new("p", a.clone(), GrammarExpr::top(), |_| {
            Verdict::Reject(ParseTree::Tuple(Vec::new()))
        });
        let f = Transformer::identity("id-b", b);
        let g = Transformer::identity("id-a", a);
        assert!(matches!(
            extend_parser(&f, &g, &p),
            Err(OracleError::ContractViolation(_))
        ));
    }
}
