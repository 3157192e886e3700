//! Deterministic automata, determinization, and the translations that carry
//! traces between a machine and its determinization.
//!
//! A DFA trace differs from an NFA trace in one crucial way: for every state
//! and word there is exactly one trace, accepting or not, so the trace family
//! is indexed by the acceptance bit instead of being partial. `parse_d` reads
//! any word into its unique trace and `print_d` reads the word back; the two
//! are mutually inverse, which is the whole reason a DFA gives a parser.
//!
//! Determinization follows the subset construction restricted to
//! epsilon-closed subsets: the closure of the initial state starts the
//! machine, each step closes up the successor set, and a subset accepts when
//! it contains an accepting state. Only reachable subsets are numbered by
//! default; `full_powerset` keeps every closed subset instead, which is
//! wasteful but matches the textbook state space on small machines.

use crate::alphabet::{Alphabet, Token};
use crate::grammar::{GrammarEnv, GrammarExpr};
use crate::nfa::{Nfa, NfaTrace};
use crate::oracle::{Parser, Verdict};
use crate::tree::ParseTree;
use serde_json::{json, Value};
use std::collections::{BTreeSet, HashMap, VecDeque};

#[derive(Debug, Clone)]
pub struct Dfa {
    pub alphabet: Alphabet,
    pub n_states: usize,
    pub init: usize,
    pub accepting: Vec<bool>,
    /// Total: `delta[state][token rank]` is the successor state.
    pub delta: Vec<Vec<usize>>,
    /// For determinized machines, which NFA states each DFA state stands
    /// for. Sorted ascending.
    pub subset_of: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DfaError {
    #[error("token {token:?} is not in the alphabet")]
    TokenOutOfAlphabet { token: Token },
    #[error("machine state {state} is not a member of subset state {dfa_state}")]
    MembershipViolation { state: usize, dfa_state: usize },
    #[error("malformed trace: {0}")]
    MalformedTrace(String),
    #[error("this operation needs the subset bookkeeping a determinized machine carries")]
    MissingSubsets,
    #[error("full powerset construction is limited to 4 machine states, got {states}")]
    PowersetTooLarge { states: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum DfaTrace {
    Nil {
        state: usize,
    },
    Cons {
        label: Token,
        state: usize,
        rest: Box<DfaTrace>,
    },
}

impl Dfa {
    pub fn step(&self, s: usize, tok: &str) -> Result<usize, DfaError> {
        let rank = self
            .alphabet
            .rank(tok)
            .ok_or_else(|| DfaError::TokenOutOfAlphabet { token: tok.to_string() })?;
        Ok(self.delta[s][rank])
    }

    pub fn to_json(&self) -> Value {
        let mut transitions = Vec::new();
        let mut id = 0;
        for s in 0..self.n_states {
            for (rank, tok) in self.alphabet.symbols().iter().enumerate() {
                transitions.push(json!({"id": id, "src": s, "label": tok, "dst": self.delta[s][rank]}));
                id += 1;
            }
        }
        let mut obj = json!({
            "states": self.n_states,
            "init": self.init,
            "accept": (0..self.n_states).filter(|&s| self.accepting[s]).collect::<Vec<_>>(),
            "transitions": transitions,
            "eps": [],
        });
        if let Some(subsets) = &self.subset_of {
            obj["subsets"] = json!(subsets);
        }
        obj
    }
}

impl DfaTrace {
    pub fn head_state(&self) -> usize {
        match self {
            DfaTrace::Nil { state } => *state,
            DfaTrace::Cons { state, .. } => *state,
        }
    }

    /// The acceptance bit the trace is indexed by: the bit of its final state.
    pub fn accept_in(&self, d: &Dfa) -> bool {
        match self {
            DfaTrace::Nil { state } => d.accepting[*state],
            DfaTrace::Cons { rest, .. } => rest.accept_in(d),
        }
    }

    pub fn yield_of(&self) -> Vec<Token> {
        let mut out = Vec::new();
        let mut cur = self;
        while let DfaTrace::Cons { label, rest, .. } = cur {
            out.push(label.clone());
            cur = rest;
        }
        out
    }

    pub fn len(&self) -> usize {
        match self {
            DfaTrace::Nil { .. } => 0,
            DfaTrace::Cons { rest, .. } => 1 + rest.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, DfaTrace::Nil { .. })
    }

    /// Each step must follow the transition function.
    pub fn validate(&self, d: &Dfa) -> Result<(), DfaError> {
        let mut cur = self;
        while let DfaTrace::Cons { label, state, rest } = cur {
            let next = d.step(*state, label)?;
            if rest.head_state() != next {
                return Err(DfaError::MalformedTrace(format!(
                    "step on {label:?} from {state} should reach {next}, trace says {}",
                    rest.head_state()
                )));
            }
            cur = rest;
        }
        Ok(())
    }

    pub fn to_json(&self, d: &Dfa) -> Value {
        match self {
            DfaTrace::Nil { state } => json!({"kind": "nil", "state": state}),
            DfaTrace::Cons { label, state, rest } => json!({
                "kind": "cons",
                "label": label,
                "state": state,
                "rest": rest.to_json(d),
                "accept": self.accept_in(d),
            }),
        }
    }
}

/// Reads a word into its unique trace from `s`: the empty word sits down
/// where it is, and a token steps the machine and recurses.
pub fn parse_d(d: &Dfa, s: usize, w: &[Token]) -> Result<DfaTrace, DfaError> {
    match w.split_first() {
        None => Ok(DfaTrace::Nil { state: s }),
        Some((c, rest)) => {
            let next = d.step(s, c)?;
            Ok(DfaTrace::Cons {
                label: c.clone(),
                state: s,
                rest: Box::new(parse_d(d, next, rest)?),
            })
        }
    }
}

/// Reads the word back off a trace. Inverse to `parse_d` in both orders.
pub fn print_d(t: &DfaTrace) -> Vec<Token> {
    t.yield_of()
}

/// Every trace from every state, up to a yield-length bound. Used by tests
/// that need the whole family rather than the one trace a word determines.
pub fn enumerate_dfa_traces(d: &Dfa, s: usize, max_len: usize) -> Vec<DfaTrace> {
    let mut out = vec![DfaTrace::Nil { state: s }];
    if max_len > 0 {
        for (rank, tok) in d.alphabet.symbols().iter().enumerate() {
            for rest in enumerate_dfa_traces(d, d.delta[s][rank], max_len - 1) {
                out.push(DfaTrace::Cons {
                    label: tok.clone(),
                    state: s,
                    rest: Box::new(rest),
                });
            }
        }
    }
    out
}

/// Least epsilon-closed superset: every epsilon edge leaving the set is
/// followed until nothing new appears. Idempotent and monotone.
pub fn eps_closure(n: &Nfa, xs: &BTreeSet<usize>) -> BTreeSet<usize> {
    let mut out = xs.clone();
    let mut work: Vec<usize> = out.iter().copied().collect();
    while let Some(u) = work.pop() {
        for e in &n.eps {
            if e.src == u && out.insert(e.dst) {
                work.push(e.dst);
            }
        }
    }
    out
}

fn move_on(n: &Nfa, xs: &BTreeSet<usize>, tok: &str) -> BTreeSet<usize> {
    n.transitions
        .iter()
        .filter(|t| t.label == tok && xs.contains(&t.src))
        .map(|t| t.dst)
        .collect()
}

/// Subset construction over epsilon-closed subsets. The initial state is
/// the closure of the machine's initial state, a subset accepts when it
/// contains an accepting state, and each letter maps a subset to the
/// closure of its successors. The empty subset is an ordinary (rejecting)
/// sink. With `full_powerset` the state space is every closed subset in
/// bitmask order instead of just the reachable ones.
pub fn determinize(n: &Nfa, full_powerset: bool) -> Result<Dfa, DfaError> {
    if full_powerset {
        return determinize_full(n);
    }
    let init_set = eps_closure(n, &BTreeSet::from([n.init]));
    let mut ids: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut subsets: Vec<Vec<usize>> = Vec::new();
    let mut delta: Vec<Vec<usize>> = Vec::new();
    let mut queue = VecDeque::new();

    let init_key: Vec<usize> = init_set.iter().copied().collect();
    ids.insert(init_key.clone(), 0);
    subsets.push(init_key);
    queue.push_back(init_set);

    while let Some(xs) = queue.pop_front() {
        let mut row = Vec::with_capacity(n.alphabet.len());
        for tok in n.alphabet.symbols() {
            let ys = eps_closure(n, &move_on(n, &xs, tok));
            let key: Vec<usize> = ys.iter().copied().collect();
            let id = match ids.get(&key) {
                Some(&id) => id,
                None => {
                    let id = subsets.len();
                    ids.insert(key.clone(), id);
                    subsets.push(key);
                    queue.push_back(ys);
                    id
                }
            };
            row.push(id);
        }
        delta.push(row);
    }

    let accepting = subsets
        .iter()
        .map(|xs| xs.iter().any(|&s| n.accepting[s]))
        .collect();
    Ok(Dfa {
        alphabet: n.alphabet.clone(),
        n_states: subsets.len(),
        init: 0,
        accepting,
        delta,
        subset_of: Some(subsets),
    })
}

fn determinize_full(n: &Nfa) -> Result<Dfa, DfaError> {
    if n.n_states > 4 {
        return Err(DfaError::PowersetTooLarge { states: n.n_states });
    }
    let mut subsets: Vec<Vec<usize>> = Vec::new();
    let mut ids: HashMap<Vec<usize>, usize> = HashMap::new();
    for mask in 0u32..(1 << n.n_states) {
        let xs: BTreeSet<usize> = (0..n.n_states).filter(|s| mask & (1 << s) != 0).collect();
        if eps_closure(n, &xs) == xs {
            let key: Vec<usize> = xs.iter().copied().collect();
            ids.insert(key.clone(), subsets.len());
            subsets.push(key);
        }
    }
    let init_key: Vec<usize> = eps_closure(n, &BTreeSet::from([n.init])).into_iter().collect();
    let init = ids[&init_key];
    let mut delta = Vec::with_capacity(subsets.len());
    for key in &subsets {
        let xs: BTreeSet<usize> = key.iter().copied().collect();
        let row = n
            .alphabet
            .symbols()
            .iter()
            .map(|tok| {
                let ys: Vec<usize> = eps_closure(n, &move_on(n, &xs, tok)).into_iter().collect();
                ids[&ys]
            })
            .collect();
        delta.push(row);
    }
    let accepting = subsets
        .iter()
        .map(|xs| xs.iter().any(|&s| n.accepting[s]))
        .collect();
    Ok(Dfa {
        alphabet: n.alphabet.clone(),
        n_states: subsets.len(),
        init,
        accepting,
        delta,
        subset_of: Some(subsets),
    })
}

/// Pushes a machine trace down onto the determinized machine: epsilon steps
/// vanish and labeled steps move whole subsets. `x` must be a DFA state
/// whose subset contains the trace's start state.
pub fn n_to_d(n: &Nfa, d: &Dfa, tr: &NfaTrace, x: usize) -> Result<DfaTrace, DfaError> {
    let subsets = d.subset_of.as_ref().ok_or(DfaError::MissingSubsets)?;
    let start = tr.start_state(n);
    if !subsets[x].contains(&start) {
        return Err(DfaError::MembershipViolation { state: start, dfa_state: x });
    }
    match tr {
        NfaTrace::Nil { .. } => Ok(DfaTrace::Nil { state: x }),
        NfaTrace::Cons { transition, rest } => {
            let t = &n.transitions[*transition];
            let next = d.step(x, &t.label)?;
            Ok(DfaTrace::Cons {
                label: t.label.clone(),
                state: x,
                rest: Box::new(n_to_d(n, d, rest, next)?),
            })
        }
        NfaTrace::EpsCons { rest, .. } => n_to_d(n, d, rest, x),
    }
}

/// Pulls an accepting trace of the determinized machine back to a trace of
/// the original machine, together with the state it starts from. Among all
/// witnesses the choice is deterministic: working backwards from the
/// smallest accepting state in the final subset, each step takes the
/// shortest epsilon path, breaking ties by transition id. Rejecting traces
/// have no machine-side counterpart and are refused.
pub fn d_to_n(n: &Nfa, d: &Dfa, tr: &DfaTrace) -> Result<(usize, NfaTrace), DfaError> {
    let subsets = d.subset_of.as_ref().ok_or(DfaError::MissingSubsets)?;
    tr.validate(d)?;
    if !tr.accept_in(d) {
        return Err(DfaError::MalformedTrace(
            "only accepting subset traces embed back into the machine".into(),
        ));
    }
    let mut steps = Vec::new();
    let mut cur = tr;
    let last = loop {
        match cur {
            DfaTrace::Nil { state } => break *state,
            DfaTrace::Cons { label, state, rest } => {
                steps.push((label.clone(), *state));
                cur = rest;
            }
        }
    };
    let paths = eps_shortest_paths(n);
    // Subsets are sorted, so the first accepting member is the smallest.
    let mut cur_state = *subsets[last]
        .iter()
        .find(|&&s| n.accepting[s])
        .ok_or_else(|| {
            DfaError::MalformedTrace("accepting subset has no accepting member".into())
        })?;
    let mut trace = NfaTrace::Nil { state: cur_state };
    for (label, src_dfa) in steps.iter().rev() {
        let mut best: Option<(usize, usize)> = None; // (eps path length, transition id)
        for (id, t) in n.transitions.iter().enumerate() {
            if t.label != *label || !subsets[*src_dfa].contains(&t.src) {
                continue;
            }
            if let Some(path) = &paths[t.dst][cur_state] {
                let cand = (path.len(), id);
                if best.map_or(true, |b| cand < b) {
                    best = Some(cand);
                }
            }
        }
        let (_, id) = best.ok_or_else(|| {
            DfaError::MalformedTrace(format!("no machine witness for the step on {label:?}"))
        })?;
        let t = &n.transitions[id];
        let path = paths[t.dst][cur_state].as_ref().expect("chosen above");
        for eid in path.iter().rev() {
            trace = NfaTrace::EpsCons {
                eps_transition: *eid,
                rest: Box::new(trace),
            };
        }
        trace = NfaTrace::Cons {
            transition: id,
            rest: Box::new(trace),
        };
        cur_state = t.src;
    }
    Ok((cur_state, trace))
}

/// Shortest epsilon path between every pair of states, as transition id
/// sequences; breadth-first from each source with edges tried in id order,
/// so the recorded path is the canonical one.
fn eps_shortest_paths(n: &Nfa) -> Vec<Vec<Option<Vec<usize>>>> {
    let mut all = Vec::with_capacity(n.n_states);
    for s in 0..n.n_states {
        let mut best: Vec<Option<Vec<usize>>> = vec![None; n.n_states];
        best[s] = Some(Vec::new());
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for (id, e) in n.eps.iter().enumerate() {
                if e.src == u && best[e.dst].is_none() {
                    let mut p = best[u].clone().expect("visited before queueing");
                    p.push(id);
                    best[e.dst] = Some(p);
                    queue.push_back(e.dst);
                }
            }
        }
        all.push(best);
    }
    all
}

pub fn dfa_state_nt(prefix: &str, s: usize, b: bool) -> String {
    format!("{prefix}{s}{}", if b { "t" } else { "f" })
}

/// The boolean-indexed trace family as a grammar: one nonterminal per
/// (state, bit), with a `nil` branch exactly when the state's acceptance
/// matches the bit and one consuming branch per letter. A bare
/// `{prefix}{s}` nonterminal sums the two bits, giving the grammar of all
/// traces from `s`.
pub fn dfa_trace_env(d: &Dfa, prefix: &str) -> GrammarEnv {
    let mut env = GrammarEnv::new(d.alphabet.clone());
    for s in 0..d.n_states {
        for b in [true, false] {
            let mut branches: Vec<(String, GrammarExpr)> = Vec::new();
            if d.accepting[s] == b {
                branches.push(("nil".into(), GrammarExpr::Eps));
            }
            for (rank, tok) in d.alphabet.symbols().iter().enumerate() {
                branches.push((
                    format!("cons_{tok}"),
                    GrammarExpr::tensor(
                        GrammarExpr::Lit(tok.clone()),
                        GrammarExpr::nt(dfa_state_nt(prefix, d.delta[s][rank], b)),
                    ),
                ));
            }
            env.define(dfa_state_nt(prefix, s, b), GrammarExpr::SumN(branches));
        }
        env.define(
            format!("{prefix}{s}"),
            GrammarExpr::sum(vec![
                ("acc", GrammarExpr::nt(dfa_state_nt(prefix, s, true))),
                ("rej", GrammarExpr::nt(dfa_state_nt(prefix, s, false))),
            ]),
        );
    }
    env
}

pub fn dfa_trace_to_parse_tree(d: &Dfa, prefix: &str, tr: &DfaTrace) -> ParseTree {
    let b = tr.accept_in(d);
    fn rec(prefix: &str, tr: &DfaTrace, b: bool) -> ParseTree {
        match tr {
            DfaTrace::Nil { state } => ParseTree::roll(
                dfa_state_nt(prefix, *state, b),
                ParseTree::inj("nil", ParseTree::EpsLeaf),
            ),
            DfaTrace::Cons { label, state, rest } => ParseTree::roll(
                dfa_state_nt(prefix, *state, b),
                ParseTree::inj(
                    format!("cons_{label}"),
                    ParseTree::pair(1, ParseTree::LitLeaf(label.clone()), rec(prefix, rest, b)),
                ),
            ),
        }
    }
    rec(prefix, tr, b)
}

pub fn parse_tree_to_dfa_trace(prefix: &str, t: &ParseTree) -> Result<DfaTrace, DfaError> {
    let ParseTree::Roll { nonterminal, body } = t else {
        return Err(DfaError::MalformedTrace("expected a trace-grammar parse".into()));
    };
    let stripped = nonterminal
        .strip_prefix(prefix)
        .ok_or_else(|| DfaError::MalformedTrace(format!("foreign nonterminal {nonterminal:?}")))?;
    let state_txt = stripped
        .strip_suffix(['t', 'f'])
        .ok_or_else(|| DfaError::MalformedTrace(format!("no acceptance bit in {nonterminal:?}")))?;
    let state = state_txt
        .parse::<usize>()
        .map_err(|_| DfaError::MalformedTrace(format!("bad state in {nonterminal:?}")))?;
    let ParseTree::Inj { tag, body } = &**body else {
        return Err(DfaError::MalformedTrace("expected a trace constructor".into()));
    };
    if tag == "nil" {
        Ok(DfaTrace::Nil { state })
    } else if let Some(label) = tag.strip_prefix("cons_") {
        let ParseTree::Pair { right, .. } = &**body else {
            return Err(DfaError::MalformedTrace("cons branch should be a pair".into()));
        };
        Ok(DfaTrace::Cons {
            label: label.to_string(),
            state,
            rest: Box::new(parse_tree_to_dfa_trace(prefix, right)?),
        })
    } else {
        Err(DfaError::MalformedTrace(format!("unexpected tag {tag:?}")))
    }
}

/// The parser a DFA carries by construction: run `parse_d` from the initial
/// state and report the unique trace on whichever side of the acceptance
/// bit it lands. Accept and reject grammars are the two trace families at
/// the initial state, which are disjoint because the trace per word is
/// unique and carries a single bit.
pub fn dfa_parser(d: &Dfa, prefix: &str) -> (GrammarEnv, Parser) {
    let env = dfa_trace_env(d, prefix);
    let accept = GrammarExpr::nt(dfa_state_nt(prefix, d.init, true));
    let reject = GrammarExpr::nt(dfa_state_nt(prefix, d.init, false));
    let machine = d.clone();
    let pfx = prefix.to_string();
    let parser = Parser::new("dfa-parser", accept, reject, move |w| {
        let tr = parse_d(&machine, machine.init, w).expect("tokens are checked by callers");
        let tree = dfa_trace_to_parse_tree(&machine, &pfx, &tr);
        if tr.accept_in(&machine) {
            Verdict::Accept(tree)
        } else {
            Verdict::Reject(tree)
        }
    });
    (env, parser)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nfa::{enumerate_traces, fixture_nfa};
    use crate::oracle::{check_language_equal, check_unambiguous};

    fn toks(s: &str) -> Vec<Token> {
        s.chars().map(|c| c.to_string()).collect()
    }

    #[test]
    fn closure_of_the_fixture_init() {
        let n = fixture_nfa();
        let c = eps_closure(&n, &BTreeSet::from([0]));
        assert_eq!(c, BTreeSet::from([0, 1]));
        // Idempotent and monotone on a couple of probes.
        assert_eq!(eps_closure(&n, &c), c);
        let bigger = eps_closure(&n, &BTreeSet::from([0, 2]));
        assert!(c.iter().all(|s| bigger.contains(s)));
    }

    #[test]
    fn determinized_fixture_agrees_on_membership() {
        let n = fixture_nfa();
        let d = determinize(&n, false).unwrap();
        assert_eq!(d.subset_of.as_ref().unwrap()[d.init], vec![0, 1]);
        for w in n.alphabet.words_up_to(5) {
            let traces = enumerate_traces(&n, n.init, &w).unwrap();
            let trace = parse_d(&d, d.init, &w).unwrap();
            assert_eq!(
                !traces.is_empty(),
                trace.accept_in(&d),
                "membership mismatch at {w:?}"
            );
        }
    }

    #[test]
    fn full_powerset_keeps_every_closed_subset() {
        let n = fixture_nfa();
        let d = determinize(&n, true).unwrap();
        // Closed subsets of the fixture: {}, {1}, {0,1}, {2}, {1,2}, {0,1,2}.
        assert_eq!(d.n_states, 6);
        let subsets = d.subset_of.as_ref().unwrap();
        assert_eq!(subsets[d.init], vec![0, 1]);
        for w in n.alphabet.words_up_to(4) {
            let traces = enumerate_traces(&n, n.init, &w).unwrap();
            let trace = parse_d(&d, d.init, &w).unwrap();
            assert_eq!(!traces.is_empty(), trace.accept_in(&d));
        }
    }

    #[test]
    fn powerset_refuses_large_machines() {
        let n = crate::nfa::thompson(
            &crate::regex::parse_regex_text("'a' 'b' 'c'").unwrap(),
            &Alphabet::new(["a", "b", "c"]).unwrap(),
        );
        assert!(matches!(
            determinize(&n, true),
            Err(DfaError::PowersetTooLarge { .. })
        ));
    }

    #[test]
    fn parse_and_print_are_mutually_inverse() {
        let n = fixture_nfa();
        let d = determinize(&n, false).unwrap();
        for w in n.alphabet.words_up_to(5) {
            let tr = parse_d(&d, d.init, &w).unwrap();
            assert_eq!(print_d(&tr), w);
        }
        for s in 0..d.n_states {
            for tr in enumerate_dfa_traces(&d, s, 4) {
                let back = parse_d(&d, s, &print_d(&tr)).unwrap();
                assert_eq!(back, tr);
            }
        }
    }

    #[test]
    fn exactly_one_trace_per_state_and_word() {
        let n = fixture_nfa();
        let d = determinize(&n, false).unwrap();
        let mut seen: HashMap<(usize, Vec<Token>), usize> = HashMap::new();
        for s in 0..d.n_states {
            for tr in enumerate_dfa_traces(&d, s, 3) {
                *seen.entry((s, tr.yield_of())).or_default() += 1;
            }
        }
        for s in 0..d.n_states {
            for w in d.alphabet.words_up_to(3) {
                assert_eq!(seen.get(&(s, w.clone())).copied(), Some(1), "state {s}, word {w:?}");
            }
        }
    }

    #[test]
    fn trace_translations_round_trip() {
        let n = fixture_nfa();
        let d = determinize(&n, false).unwrap();
        for w in n.alphabet.words_up_to(5) {
            for tr in enumerate_traces(&n, n.init, &w).unwrap() {
                let down = n_to_d(&n, &d, &tr, d.init).unwrap();
                assert_eq!(down.yield_of(), w, "yield changed at {w:?}");
                assert!(down.accept_in(&d));
            }
            let dtr = parse_d(&d, d.init, &w).unwrap();
            if dtr.accept_in(&d) {
                let (s, up) = d_to_n(&n, &d, &dtr).unwrap();
                assert_eq!(up.yield_in(&n), w);
                assert_eq!(up.start_state(&n), s);
                up.validate(&n).unwrap();
                let back = n_to_d(&n, &d, &up, d.init).unwrap();
                assert_eq!(back, dtr, "round trip changed the trace of {w:?}");
            } else {
                assert!(d_to_n(&n, &d, &dtr).is_err());
            }
        }
    }

    #[test]
    fn empty_trace_embeds_at_the_smallest_accepting_state() {
        let n = fixture_nfa();
        let d = determinize(&n, false).unwrap();
        let two = parse_d(&d, d.init, &toks("c")).unwrap();
        let accepting_state = match &two {
            DfaTrace::Cons { rest, .. } => rest.head_state(),
            _ => unreachable!(),
        };
        let (s, up) = d_to_n(&n, &d, &DfaTrace::Nil { state: accepting_state }).unwrap();
        assert_eq!(s, 2);
        assert_eq!(up, NfaTrace::Nil { state: 2 });
    }

    #[test]
    fn membership_violation_is_reported() {
        let n = fixture_nfa();
        let d = determinize(&n, false).unwrap();
        // State 2's trace does not start inside the init subset {0,1}.
        let tr = NfaTrace::Nil { state: 2 };
        assert!(matches!(
            n_to_d(&n, &d, &tr, d.init),
            Err(DfaError::MembershipViolation { state: 2, .. })
        ));
    }

    #[test]
    fn trace_grammar_is_unambiguous_and_total() {
        let n = fixture_nfa();
        let d = determinize(&n, false).unwrap();
        let env = dfa_trace_env(&d, "d");
        let both = GrammarExpr::nt(format!("d{}", d.init));
        assert!(check_unambiguous(&env, &both, 4).unwrap().passed());
        assert!(check_language_equal(&env, &both, &GrammarExpr::top(), 4)
            .unwrap()
            .passed());
    }

    #[test]
    fn trace_tree_encoding_round_trips() {
        let n = fixture_nfa();
        let d = determinize(&n, false).unwrap();
        for w in d.alphabet.words_up_to(4) {
            let tr = parse_d(&d, d.init, &w).unwrap();
            let tree = dfa_trace_to_parse_tree(&d, "d", &tr);
            assert_eq!(tree.yield_of().unwrap(), w);
            assert_eq!(parse_tree_to_dfa_trace("d", &tree).unwrap(), tr);
        }
    }

    #[test]
    fn dfa_parser_is_audited_clean() {
        let n = fixture_nfa();
        let d = determinize(&n, false).unwrap();
        let (env, parser) = dfa_parser(&d, "d");
        let report = crate::oracle::check_parser(&env, &parser, 4).unwrap();
        assert!(report.passed(), "{:?}", report.status);
    }
}
