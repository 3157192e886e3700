//! Nondeterministic finite automata and their trace families.
//!
//! A trace is a parse tree for a machine: a path from some state to an
//! accepting state, spelled out step by step. `Nil` sits at an accepting
//! state, `Cons` takes a labeled transition and consumes its label, `EpsCons`
//! takes an epsilon transition and consumes nothing. Transition ids index
//! into the machine's ordered transition lists, and those orders are load
//! bearing: they disambiguate whenever a canonical choice among several
//! witnesses has to be made.
//!
//! The Thompson construction lives here too, together with the pair of
//! translations between parses of a regular expression's grammar and traces
//! of its Thompson machine. The construction is recorded as a layout tree so
//! the translations can walk machine and regex in lockstep instead of
//! rediscovering the structure from raw states.

use crate::alphabet::{Alphabet, Token};
use crate::grammar::{GrammarEnv, GrammarExpr};
use crate::regex::{regex_to_grammar, Regex};
use crate::transform::Transformer;
use crate::tree::ParseTree;
use serde_json::{json, Value};
use std::collections::{HashMap, HashSet};
use std::rc::Rc;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub src: usize,
    pub label: Token,
    pub dst: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpsTransition {
    pub src: usize,
    pub dst: usize,
}

#[derive(Debug, Clone)]
pub struct Nfa {
    pub alphabet: Alphabet,
    pub n_states: usize,
    pub init: usize,
    pub accepting: Vec<bool>,
    /// Ordered; a transition's id is its index here.
    pub transitions: Vec<Transition>,
    /// Ordered; an epsilon transition's id is its index here.
    pub eps: Vec<EpsTransition>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NfaError {
    #[error("infinite trace set: state {state} revisited at input position {pos} on an epsilon cycle")]
    InfiniteTraceSet { state: usize, pos: usize },
    #[error("malformed trace: {0}")]
    MalformedTrace(String),
    #[error("malformed tree: {0}")]
    MalformedTree(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum NfaTrace {
    Nil { state: usize },
    Cons { transition: usize, rest: Box<NfaTrace> },
    EpsCons { eps_transition: usize, rest: Box<NfaTrace> },
}

impl NfaTrace {
    pub fn start_state(&self, n: &Nfa) -> usize {
        match self {
            NfaTrace::Nil { state } => *state,
            NfaTrace::Cons { transition, .. } => n.transitions[*transition].src,
            NfaTrace::EpsCons { eps_transition, .. } => n.eps[*eps_transition].src,
        }
    }

    pub fn yield_in(&self, n: &Nfa) -> Vec<Token> {
        let mut out = Vec::new();
        let mut cur = self;
        loop {
            match cur {
                NfaTrace::Nil { .. } => return out,
                NfaTrace::Cons { transition, rest } => {
                    out.push(n.transitions[*transition].label.clone());
                    cur = rest;
                }
                NfaTrace::EpsCons { rest, .. } => cur = rest,
            }
        }
    }

    /// Steps must chain and the trace must finish at an accepting state.
    pub fn validate(&self, n: &Nfa) -> Result<(), NfaError> {
        let mut cur = self;
        loop {
            match cur {
                NfaTrace::Nil { state } => {
                    if !n.accepting[*state] {
                        return Err(NfaError::MalformedTrace(format!(
                            "trace ends at non-accepting state {state}"
                        )));
                    }
                    return Ok(());
                }
                NfaTrace::Cons { transition, rest } => {
                    let t = n.transitions.get(*transition).ok_or_else(|| {
                        NfaError::MalformedTrace(format!("unknown transition id {transition}"))
                    })?;
                    if rest.start_state(n) != t.dst {
                        return Err(NfaError::MalformedTrace(format!(
                            "transition {transition} arrives at {} but the rest starts at {}",
                            t.dst,
                            rest.start_state(n)
                        )));
                    }
                    cur = rest;
                }
                NfaTrace::EpsCons { eps_transition, rest } => {
                    let e = n.eps.get(*eps_transition).ok_or_else(|| {
                        NfaError::MalformedTrace(format!(
                            "unknown epsilon transition id {eps_transition}"
                        ))
                    })?;
                    if rest.start_state(n) != e.dst {
                        return Err(NfaError::MalformedTrace(format!(
                            "epsilon transition {eps_transition} arrives at {} but the rest starts at {}",
                            e.dst,
                            rest.start_state(n)
                        )));
                    }
                    cur = rest;
                }
            }
        }
    }
}

impl Nfa {
    pub fn to_json(&self) -> Value {
        json!({
            "states": self.n_states,
            "init": self.init,
            "accept": (0..self.n_states).filter(|&s| self.accepting[s]).collect::<Vec<_>>(),
            "transitions": self
                .transitions
                .iter()
                .enumerate()
                .map(|(id, t)| json!({"id": id, "src": t.src, "label": t.label, "dst": t.dst}))
                .collect::<Vec<_>>(),
            "eps": self
                .eps
                .iter()
                .enumerate()
                .map(|(id, e)| json!({"id": id, "src": e.src, "dst": e.dst}))
                .collect::<Vec<_>>(),
        })
    }
}

/// Shortest epsilon path from one state to another, as a sequence of
/// epsilon-transition ids. Breadth-first with edges tried in id order, so
/// the answer is canonical: fewest steps, earliest ids.
pub fn shortest_eps_path(n: &Nfa, from: usize, to: usize) -> Option<Vec<usize>> {
    let mut best: Vec<Option<Vec<usize>>> = vec![None; n.n_states];
    best[from] = Some(Vec::new());
    let mut queue = std::collections::VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        if u == to {
            break;
        }
        for (id, e) in n.eps.iter().enumerate() {
            if e.src == u && best[e.dst].is_none() {
                let mut p = best[u].clone().expect("visited before queueing");
                p.push(id);
                best[e.dst] = Some(p);
                queue.push_back(e.dst);
            }
        }
    }
    best[to].take()
}

/// All traces from `s` with yield `w`, in a deterministic order: `Nil`
/// first, then labeled steps by transition id, then epsilon steps by id,
/// repeated recursively. Walking back into a (state, position) pair that is
/// still being expanded means an epsilon cycle is reachable, and every lap
/// of such a cycle is one more distinct trace, so the set is infinite.
pub fn enumerate_traces(n: &Nfa, s: usize, w: &[Token]) -> Result<Vec<NfaTrace>, NfaError> {
    let mut en = TraceEnum {
        n,
        w,
        memo: HashMap::new(),
        gray: HashSet::new(),
    };
    en.run(s, 0).map(|rc| rc.as_ref().clone())
}

struct TraceEnum<'a> {
    n: &'a Nfa,
    w: &'a [Token],
    memo: HashMap<(usize, usize), Rc<Vec<NfaTrace>>>,
    gray: HashSet<(usize, usize)>,
}

impl<'a> TraceEnum<'a> {
    fn run(&mut self, s: usize, pos: usize) -> Result<Rc<Vec<NfaTrace>>, NfaError> {
        let key = (s, pos);
        if let Some(hit) = self.memo.get(&key) {
            return Ok(hit.clone());
        }
        if !self.gray.insert(key) {
            return Err(NfaError::InfiniteTraceSet { state: s, pos });
        }
        let mut out = Vec::new();
        if pos == self.w.len() && self.n.accepting[s] {
            out.push(NfaTrace::Nil { state: s });
        }
        for (id, t) in self.n.transitions.iter().enumerate() {
            if t.src == s && pos < self.w.len() && t.label == self.w[pos] {
                for rest in self.run(t.dst, pos + 1)?.iter() {
                    out.push(NfaTrace::Cons {
                        transition: id,
                        rest: Box::new(rest.clone()),
                    });
                }
            }
        }
        for (id, e) in self.n.eps.iter().enumerate() {
            if e.src == s {
                for rest in self.run(e.dst, pos)?.iter() {
                    out.push(NfaTrace::EpsCons {
                        eps_transition: id,
                        rest: Box::new(rest.clone()),
                    });
                }
            }
        }
        self.gray.remove(&key);
        let rc = Rc::new(out);
        self.memo.insert(key, rc.clone());
        Ok(rc)
    }
}

/// How one piece of a Thompson machine was built. Fragment structure mirrors
/// the regex, and the stored ids say which transitions are the structural
/// glue, so the parse/trace translations can follow the construction rather
/// than search the machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FragInfo {
    Lit { trans: usize },
    Eps { eps: usize },
    Empty,
    Union {
        enter_l: usize,
        enter_r: usize,
        exit_l: usize,
        exit_r: usize,
        left: Box<FragInfo>,
        right: Box<FragInfo>,
    },
    Concat {
        bridge: usize,
        left: Box<FragInfo>,
        right: Box<FragInfo>,
    },
    Star {
        /// Fixpoint name used by the grammar translation of the same regex.
        name: String,
        enter: usize,
        skip: usize,
        loop_back: usize,
        exit: usize,
        body: Box<FragInfo>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub start: usize,
    pub end: usize,
    pub info: FragInfo,
}

struct Builder {
    n_states: usize,
    transitions: Vec<Transition>,
    eps: Vec<EpsTransition>,
    stars: usize,
}

impl Builder {
    fn state(&mut self) -> usize {
        self.n_states += 1;
        self.n_states - 1
    }

    fn tr(&mut self, src: usize, label: &Token, dst: usize) -> usize {
        self.transitions.push(Transition {
            src,
            label: label.clone(),
            dst,
        });
        self.transitions.len() - 1
    }

    fn ep(&mut self, src: usize, dst: usize) -> usize {
        self.eps.push(EpsTransition { src, dst });
        self.eps.len() - 1
    }

    // The classic two-terminal construction. Every fragment has one entry
    // and one exit state; nothing inside a fragment can leave it except
    // through the exit, which is what makes the trace decomposition in
    // `trace_to_regex_parse` unambiguous.
    fn frag(&mut self, r: &Regex) -> (usize, usize, FragInfo) {
        match r {
            // Base machine: two states joined by the one labeled transition.
            Regex::Lit(t) => {
                let s = self.state();
                let e = self.state();
                let trans = self.tr(s, t, e);
                (s, e, FragInfo::Lit { trans })
            }
            // Base machine: two states joined by one epsilon transition.
            Regex::Eps => {
                let s = self.state();
                let e = self.state();
                let eps = self.ep(s, e);
                (s, e, FragInfo::Eps { eps })
            }
            // Base machine: two states, no transitions, so no traces.
            Regex::Empty => {
                let s = self.state();
                let e = self.state();
                (s, e, FragInfo::Empty)
            }
            // Union: a fresh entry state with an epsilon edge into each arm
            // and a fresh exit state with an epsilon edge out of each arm.
            Regex::Union(l, r) => {
                let s = self.state();
                let (ls, le, li) = self.frag(l);
                let (rs, re, ri) = self.frag(r);
                let e = self.state();
                let enter_l = self.ep(s, ls);
                let enter_r = self.ep(s, rs);
                let exit_l = self.ep(le, e);
                let exit_r = self.ep(re, e);
                (
                    s,
                    e,
                    FragInfo::Union {
                        enter_l,
                        enter_r,
                        exit_l,
                        exit_r,
                        left: Box::new(li),
                        right: Box::new(ri),
                    },
                )
            }
            // Concatenation: an epsilon bridge from the left exit to the
            // right entry; that bridge is the unique border between the arms.
            Regex::Concat(l, r) => {
                let (ls, le, li) = self.frag(l);
                let (rs, re, ri) = self.frag(r);
                let bridge = self.ep(le, rs);
                (
                    ls,
                    re,
                    FragInfo::Concat {
                        bridge,
                        left: Box::new(li),
                        right: Box::new(ri),
                    },
                )
            }
            // Star: fresh entry and exit; enter the body or skip it, and
            // from the body's exit either loop back to its entry or leave.
            Regex::Star(b) => {
                let name = format!("star{}", self.stars);
                self.stars += 1;
                let s = self.state();
                let (bs, be, bi) = self.frag(b);
                let e = self.state();
                let enter = self.ep(s, bs);
                let skip = self.ep(s, e);
                let loop_back = self.ep(be, bs);
                let exit = self.ep(be, e);
                (
                    s,
                    e,
                    FragInfo::Star {
                        name,
                        enter,
                        skip,
                        loop_back,
                        exit,
                        body: Box::new(bi),
                    },
                )
            }
        }
    }
}

pub fn thompson_with_layout(r: &Regex, alphabet: &Alphabet) -> (Nfa, Layout) {
    for lit in r.literals() {
        assert!(
            alphabet.contains(&lit),
            "regex literal {lit:?} is not in the alphabet {alphabet}"
        );
    }
    let mut b = Builder {
        n_states: 0,
        transitions: Vec::new(),
        eps: Vec::new(),
        stars: 0,
    };
    let (start, end, info) = b.frag(r);
    let mut accepting = vec![false; b.n_states];
    accepting[end] = true;
    (
        Nfa {
            alphabet: alphabet.clone(),
            n_states: b.n_states,
            init: start,
            accepting,
            transitions: b.transitions,
            eps: b.eps,
        },
        Layout { start, end, info },
    )
}

pub fn thompson(r: &Regex, alphabet: &Alphabet) -> Nfa {
    thompson_with_layout(r, alphabet).0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    T(usize),
    E(usize),
}

/// Turns a parse of the regex's grammar into the Thompson trace that reads
/// the same word, by structural recursion over the layout.
pub fn regex_parse_to_trace(n: &Nfa, layout: &Layout, t: &ParseTree) -> Result<NfaTrace, NfaError> {
    let mut steps = Vec::new();
    write_steps(&layout.info, t, &mut steps)?;
    let mut trace = NfaTrace::Nil { state: layout.end };
    for step in steps.into_iter().rev() {
        trace = match step {
            Step::T(id) => NfaTrace::Cons {
                transition: id,
                rest: Box::new(trace),
            },
            Step::E(id) => NfaTrace::EpsCons {
                eps_transition: id,
                rest: Box::new(trace),
            },
        };
    }
    trace.validate(n)?;
    Ok(trace)
}

fn write_steps(info: &FragInfo, t: &ParseTree, steps: &mut Vec<Step>) -> Result<(), NfaError> {
    match (info, t) {
        (FragInfo::Lit { trans }, ParseTree::LitLeaf(_)) => {
            steps.push(Step::T(*trans));
            Ok(())
        }
        (FragInfo::Eps { eps }, ParseTree::EpsLeaf) => {
            steps.push(Step::E(*eps));
            Ok(())
        }
        (
            FragInfo::Union {
                enter_l,
                enter_r,
                exit_l,
                exit_r,
                left,
                right,
            },
            ParseTree::Inj { tag, body },
        ) => match tag.as_str() {
            "inl" => {
                steps.push(Step::E(*enter_l));
                write_steps(left, body, steps)?;
                steps.push(Step::E(*exit_l));
                Ok(())
            }
            "inr" => {
                steps.push(Step::E(*enter_r));
                write_steps(right, body, steps)?;
                steps.push(Step::E(*exit_r));
                Ok(())
            }
            other => Err(NfaError::MalformedTree(format!(
                "union parse with unexpected tag {other:?}"
            ))),
        },
        (FragInfo::Concat { bridge, left, right }, ParseTree::Pair { left: lt, right: rt, .. }) => {
            write_steps(left, lt, steps)?;
            steps.push(Step::E(*bridge));
            write_steps(right, rt, steps)
        }
        (
            FragInfo::Star {
                name,
                enter,
                skip,
                loop_back,
                exit,
                body,
            },
            tree,
        ) => {
            let items = star_items(name, tree)?;
            if items.is_empty() {
                steps.push(Step::E(*skip));
            } else {
                steps.push(Step::E(*enter));
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        steps.push(Step::E(*loop_back));
                    }
                    write_steps(body, item, steps)?;
                }
                steps.push(Step::E(*exit));
            }
            Ok(())
        }
        (info, tree) => Err(NfaError::MalformedTree(format!(
            "tree shape {tree:?} does not match machine fragment {info:?}"
        ))),
    }
}

fn star_items<'t>(name: &str, mut t: &'t ParseTree) -> Result<Vec<&'t ParseTree>, NfaError> {
    let mut items = Vec::new();
    loop {
        let ParseTree::Roll { nonterminal, body } = t else {
            return Err(NfaError::MalformedTree(format!(
                "expected a {name} fixpoint parse"
            )));
        };
        if nonterminal != name {
            return Err(NfaError::MalformedTree(format!(
                "expected fixpoint {name}, found {nonterminal}"
            )));
        }
        match &**body {
            ParseTree::Inj { tag, body: b } if tag == "nil" => {
                if !matches!(&**b, ParseTree::EpsLeaf) {
                    return Err(NfaError::MalformedTree("nil branch should be empty".into()));
                }
                return Ok(items);
            }
            ParseTree::Inj { tag, body: b } if tag == "cons" => {
                let ParseTree::Pair { left, right, .. } = &**b else {
                    return Err(NfaError::MalformedTree("cons branch should be a pair".into()));
                };
                items.push(&**left);
                t = right;
            }
            _ => {
                return Err(NfaError::MalformedTree(format!(
                    "unexpected branch in fixpoint {name}"
                )))
            }
        }
    }
}

/// Inverse of `regex_parse_to_trace`: reads the trace's steps back through
/// the layout. Each fragment has a single exit, so the decomposition never
/// needs lookahead beyond the next structural epsilon.
pub fn trace_to_regex_parse(n: &Nfa, layout: &Layout, tr: &NfaTrace) -> Result<ParseTree, NfaError> {
    tr.validate(n)?;
    let mut steps = Vec::new();
    let mut cur = tr;
    let final_state = loop {
        match cur {
            NfaTrace::Nil { state } => break *state,
            NfaTrace::Cons { transition, rest } => {
                steps.push(Step::T(*transition));
                cur = rest;
            }
            NfaTrace::EpsCons { eps_transition, rest } => {
                steps.push(Step::E(*eps_transition));
                cur = rest;
            }
        }
    };
    if final_state != layout.end {
        return Err(NfaError::MalformedTrace(format!(
            "trace finishes at {final_state}, not the machine exit {}",
            layout.end
        )));
    }
    let mut pos = 0;
    let tree = read_steps(n, &layout.info, &steps, &mut pos)?;
    if pos != steps.len() {
        return Err(NfaError::MalformedTrace("trailing steps after the parse".into()));
    }
    Ok(tree)
}

fn next_step(steps: &[Step], pos: &mut usize) -> Result<Step, NfaError> {
    let s = steps
        .get(*pos)
        .copied()
        .ok_or_else(|| NfaError::MalformedTrace("trace ended inside a fragment".into()))?;
    *pos += 1;
    Ok(s)
}

fn expect_eps(steps: &[Step], pos: &mut usize, id: usize, what: &str) -> Result<(), NfaError> {
    match next_step(steps, pos)? {
        Step::E(found) if found == id => Ok(()),
        other => Err(NfaError::MalformedTrace(format!(
            "expected {what} (epsilon {id}), found {other:?}"
        ))),
    }
}

fn read_steps(
    n: &Nfa,
    info: &FragInfo,
    steps: &[Step],
    pos: &mut usize,
) -> Result<ParseTree, NfaError> {
    match info {
        FragInfo::Lit { trans } => match next_step(steps, pos)? {
            Step::T(id) if id == *trans => Ok(ParseTree::LitLeaf(n.transitions[id].label.clone())),
            other => Err(NfaError::MalformedTrace(format!(
                "expected transition {trans}, found {other:?}"
            ))),
        },
        FragInfo::Eps { eps } => {
            expect_eps(steps, pos, *eps, "the empty-word step")?;
            Ok(ParseTree::EpsLeaf)
        }
        FragInfo::Empty => Err(NfaError::MalformedTrace(
            "no trace passes through the empty machine".into(),
        )),
        FragInfo::Union {
            enter_l,
            enter_r,
            exit_l,
            exit_r,
            left,
            right,
        } => match next_step(steps, pos)? {
            Step::E(id) if id == *enter_l => {
                let t = read_steps(n, left, steps, pos)?;
                expect_eps(steps, pos, *exit_l, "the left union exit")?;
                Ok(ParseTree::inj("inl", t))
            }
            Step::E(id) if id == *enter_r => {
                let t = read_steps(n, right, steps, pos)?;
                expect_eps(steps, pos, *exit_r, "the right union exit")?;
                Ok(ParseTree::inj("inr", t))
            }
            other => Err(NfaError::MalformedTrace(format!(
                "expected a union entry, found {other:?}"
            ))),
        },
        FragInfo::Concat { bridge, left, right } => {
            let lt = read_steps(n, left, steps, pos)?;
            expect_eps(steps, pos, *bridge, "the concatenation bridge")?;
            let rt = read_steps(n, right, steps, pos)?;
            let split = lt
                .yield_of()
                .map_err(|e| NfaError::MalformedTrace(e.to_string()))?
                .len();
            Ok(ParseTree::pair(split, lt, rt))
        }
        FragInfo::Star {
            name,
            enter,
            skip,
            loop_back,
            exit,
            body,
        } => {
            let mut items = Vec::new();
            match next_step(steps, pos)? {
                Step::E(id) if id == *skip => {}
                Step::E(id) if id == *enter => loop {
                    items.push(read_steps(n, body, steps, pos)?);
                    match next_step(steps, pos)? {
                        Step::E(id) if id == *loop_back => continue,
                        Step::E(id) if id == *exit => break,
                        other => {
                            return Err(NfaError::MalformedTrace(format!(
                                "expected the star loop or exit, found {other:?}"
                            )))
                        }
                    }
                },
                other => {
                    return Err(NfaError::MalformedTrace(format!(
                        "expected the star entry or skip, found {other:?}"
                    )))
                }
            }
            let mut t = ParseTree::roll(name.clone(), ParseTree::inj("nil", ParseTree::EpsLeaf));
            for item in items.into_iter().rev() {
                let split = item
                    .yield_of()
                    .map_err(|e| NfaError::MalformedTrace(e.to_string()))?
                    .len();
                t = ParseTree::roll(name.clone(), ParseTree::inj("cons", ParseTree::pair(split, item, t)));
            }
            Ok(t)
        }
    }
}

/// The 3-state machine used as a worked example throughout: an epsilon edge
/// into a loop state that reads `a`s and exits on `b`, and a direct `c`
/// edge to the accepting state.
pub fn fixture_nfa() -> Nfa {
    Nfa {
        alphabet: Alphabet::new(["a", "b", "c"]).unwrap(),
        n_states: 3,
        init: 0,
        accepting: vec![false, false, true],
        transitions: vec![
            Transition { src: 1, label: "a".into(), dst: 1 },
            Transition { src: 1, label: "b".into(), dst: 2 },
            Transition { src: 0, label: "c".into(), dst: 2 },
        ],
        eps: vec![EpsTransition { src: 0, dst: 1 }],
    }
}

pub fn state_nt(prefix: &str, s: usize) -> String {
    format!("{prefix}{s}")
}

/// The trace family of a machine as a grammar environment: one nonterminal
/// per state, a `nil` branch at accepting states, a consuming branch per
/// labeled transition and a silent branch per epsilon transition.
pub fn nfa_trace_env(n: &Nfa, prefix: &str) -> GrammarEnv {
    let mut env = GrammarEnv::new(n.alphabet.clone());
    for s in 0..n.n_states {
        let mut branches: Vec<(String, GrammarExpr)> = Vec::new();
        if n.accepting[s] {
            branches.push(("nil".into(), GrammarExpr::Eps));
        }
        for (id, t) in n.transitions.iter().enumerate() {
            if t.src == s {
                branches.push((
                    format!("cons{id}"),
                    GrammarExpr::tensor(
                        GrammarExpr::Lit(t.label.clone()),
                        GrammarExpr::nt(state_nt(prefix, t.dst)),
                    ),
                ));
            }
        }
        for (id, e) in n.eps.iter().enumerate() {
            if e.src == s {
                branches.push((format!("eps{id}"), GrammarExpr::nt(state_nt(prefix, e.dst))));
            }
        }
        env.define(state_nt(prefix, s), GrammarExpr::SumN(branches));
    }
    env
}

/// A trace as a parse of the trace grammar produced by `nfa_trace_env`.
pub fn nfa_trace_to_parse_tree(n: &Nfa, prefix: &str, tr: &NfaTrace) -> ParseTree {
    match tr {
        NfaTrace::Nil { state } => {
            ParseTree::roll(state_nt(prefix, *state), ParseTree::inj("nil", ParseTree::EpsLeaf))
        }
        NfaTrace::Cons { transition, rest } => {
            let t = &n.transitions[*transition];
            ParseTree::roll(
                state_nt(prefix, t.src),
                ParseTree::inj(
                    format!("cons{transition}"),
                    ParseTree::pair(
                        1,
                        ParseTree::LitLeaf(t.label.clone()),
                        nfa_trace_to_parse_tree(n, prefix, rest),
                    ),
                ),
            )
        }
        NfaTrace::EpsCons { eps_transition, rest } => {
            let e = &n.eps[*eps_transition];
            ParseTree::roll(
                state_nt(prefix, e.src),
                ParseTree::inj(
                    format!("eps{eps_transition}"),
                    nfa_trace_to_parse_tree(n, prefix, rest),
                ),
            )
        }
    }
}

pub fn parse_tree_to_nfa_trace(prefix: &str, t: &ParseTree) -> Result<NfaTrace, NfaError> {
    let ParseTree::Roll { nonterminal, body } = t else {
        return Err(NfaError::MalformedTree("expected a trace-grammar parse".into()));
    };
    let ParseTree::Inj { tag, body } = &**body else {
        return Err(NfaError::MalformedTree("expected a trace constructor".into()));
    };
    if tag == "nil" {
        let state = nonterminal
            .strip_prefix(prefix)
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| {
                NfaError::MalformedTree(format!("cannot read a state out of {nonterminal:?}"))
            })?;
        if !matches!(&**body, ParseTree::EpsLeaf) {
            return Err(NfaError::MalformedTree("nil branch should be empty".into()));
        }
        Ok(NfaTrace::Nil { state })
    } else if let Some(id) = tag.strip_prefix("cons") {
        let transition = id
            .parse::<usize>()
            .map_err(|_| NfaError::MalformedTree(format!("bad transition tag {tag:?}")))?;
        let ParseTree::Pair { right, .. } = &**body else {
            return Err(NfaError::MalformedTree("cons branch should be a pair".into()));
        };
        Ok(NfaTrace::Cons {
            transition,
            rest: Box::new(parse_tree_to_nfa_trace(prefix, right)?),
        })
    } else if let Some(id) = tag.strip_prefix("eps") {
        let eps_transition = id
            .parse::<usize>()
            .map_err(|_| NfaError::MalformedTree(format!("bad epsilon tag {tag:?}")))?;
        Ok(NfaTrace::EpsCons {
            eps_transition,
            rest: Box::new(parse_tree_to_nfa_trace(prefix, body)?),
        })
    } else {
        Err(NfaError::MalformedTree(format!("unexpected tag {tag:?}")))
    }
}

/// The grammar-level transformer pair between a regex's grammar and the
/// trace grammar of its Thompson machine: parses are pushed through the
/// machine translation and re-encoded as trace-grammar parses, and back.
/// The returned environment holds both grammars.
pub struct RegexTraceEquiv {
    pub nfa: Nfa,
    pub layout: Layout,
    pub env: GrammarEnv,
    pub regex_root: GrammarExpr,
    pub trace_root: GrammarExpr,
    pub to_trace: Transformer,
    pub from_trace: Transformer,
}

pub fn regex_trace_equiv(r: &Regex, alphabet: &Alphabet, prefix: &str) -> RegexTraceEquiv {
    let (nfa, layout) = thompson_with_layout(r, alphabet);
    let rg = regex_to_grammar(r);
    let mut env = nfa_trace_env(&nfa, prefix);
    for (name, def) in &rg.defs {
        env.define(name.clone(), def.clone());
    }
    let regex_root = rg.root;
    let trace_root = GrammarExpr::nt(state_nt(prefix, nfa.init));
    let to_trace = {
        let n = nfa.clone();
        let lay = layout.clone();
        let pfx = prefix.to_string();
        Transformer::new(
            format!("parse-to-trace({r})"),
            regex_root.clone(),
            trace_root.clone(),
            move |t| {
                let tr = regex_parse_to_trace(&n, &lay, t)
                    .expect("well-formed regex parses translate to traces");
                nfa_trace_to_parse_tree(&n, &pfx, &tr)
            },
        )
    };
    let from_trace = {
        let n = nfa.clone();
        let lay = layout.clone();
        let pfx = prefix.to_string();
        Transformer::new(
            format!("trace-to-parse({r})"),
            trace_root.clone(),
            regex_root.clone(),
            move |t| {
                let tr = parse_tree_to_nfa_trace(&pfx, t)
                    .expect("well-formed trace parses decode to traces");
                trace_to_regex_parse(&n, &lay, &tr)
                    .expect("accepting traces translate to regex parses")
            },
        )
    };
    RegexTraceEquiv {
        nfa,
        layout,
        env,
        regex_root,
        trace_root,
        to_trace,
        from_trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{check_language_equal, enumerate_parses};
    use crate::regex::parse_regex_text;

    fn toks(s: &str) -> Vec<Token> {
        s.chars().map(|c| c.to_string()).collect()
    }

    fn abc() -> Alphabet {
        Alphabet::new(["a", "b", "c"]).unwrap()
    }

    #[test]
    fn fixture_has_one_trace_for_ab() {
        let n = fixture_nfa();
        let traces = enumerate_traces(&n, 0, &toks("ab")).unwrap();
        let expected = NfaTrace::EpsCons {
            eps_transition: 0,
            rest: Box::new(NfaTrace::Cons {
                transition: 0,
                rest: Box::new(NfaTrace::Cons {
                    transition: 1,
                    rest: Box::new(NfaTrace::Nil { state: 2 }),
                }),
            }),
        };
        assert_eq!(traces, vec![expected]);
    }

    #[test]
    fn fixture_trace_counts() {
        let n = fixture_nfa();
        assert_eq!(enumerate_traces(&n, 0, &toks("c")).unwrap().len(), 1);
        assert_eq!(enumerate_traces(&n, 0, &toks("aab")).unwrap().len(), 1);
        assert_eq!(enumerate_traces(&n, 0, &toks("")).unwrap().len(), 0);
        assert_eq!(enumerate_traces(&n, 0, &toks("ba")).unwrap().len(), 0);
    }

    #[test]
    fn literal_machine_is_minimal() {
        let n = thompson(&Regex::lit("a"), &abc());
        assert_eq!(n.n_states, 2);
        assert_eq!(n.transitions.len(), 1);
        assert!(n.eps.is_empty());
        assert_eq!(enumerate_traces(&n, n.init, &toks("a")).unwrap().len(), 1);
    }

    #[test]
    fn star_of_eps_has_an_epsilon_cycle() {
        let n = thompson(&Regex::star(Regex::Eps), &abc());
        let err = enumerate_traces(&n, n.init, &toks("")).unwrap_err();
        assert!(matches!(err, NfaError::InfiniteTraceSet { .. }));
    }

    #[test]
    fn nested_star_has_an_epsilon_cycle() {
        let r = parse_regex_text("'a'**").unwrap();
        let n = thompson(&r, &abc());
        let err = enumerate_traces(&n, n.init, &toks("a")).unwrap_err();
        assert!(matches!(err, NfaError::InfiniteTraceSet { .. }));
    }

    #[test]
    fn parse_and_trace_counts_agree_on_the_running_example() {
        let r = parse_regex_text("('a'* 'b') | 'c'").unwrap();
        let alphabet = abc();
        let (n, layout) = thompson_with_layout(&r, &alphabet);
        let rg = regex_to_grammar(&r);
        let mut env = GrammarEnv::new(alphabet.clone());
        for (name, def) in &rg.defs {
            env.define(name.clone(), def.clone());
        }
        for w in alphabet.words_up_to(4) {
            let parses = enumerate_parses(&env, &rg.root, &w).unwrap();
            let traces = enumerate_traces(&n, n.init, &w).unwrap();
            assert_eq!(parses.len(), traces.len(), "counts differ at {w:?}");
            for (p, tr) in parses.iter().zip(&traces) {
                let through = regex_parse_to_trace(&n, &layout, p).unwrap();
                assert_eq!(through.yield_in(&n), w);
                let back = trace_to_regex_parse(&n, &layout, &through).unwrap();
                assert_eq!(&back, p, "round trip changed a parse of {w:?}");
                let fro = trace_to_regex_parse(&n, &layout, tr).unwrap();
                let and_back = regex_parse_to_trace(&n, &layout, &fro).unwrap();
                assert_eq!(&and_back, tr, "round trip changed a trace of {w:?}");
            }
        }
    }

    #[test]
    fn trace_grammar_matches_the_machine() {
        let n = fixture_nfa();
        let env = nfa_trace_env(&n, "q");
        for w in n.alphabet.words_up_to(4) {
            let direct = enumerate_traces(&n, 0, &w).unwrap();
            let via_grammar = enumerate_parses(&env, &GrammarExpr::nt("q0"), &w).unwrap();
            assert_eq!(direct.len(), via_grammar.len(), "at {w:?}");
            for (tr, pt) in direct.iter().zip(&via_grammar) {
                assert_eq!(&nfa_trace_to_parse_tree(&n, "q", tr), pt);
            }
        }
    }

    #[test]
    fn lifted_transformer_pair_is_a_strong_equivalence() {
        let r = parse_regex_text("'a' | 'a'").unwrap();
        let eq = regex_trace_equiv(&r, &abc(), "q");
        let report =
            crate::oracle::check_strong_equiv(&eq.env, &eq.to_trace, &eq.from_trace, 3).unwrap();
        assert!(report.passed(), "{:?}", report.status);
    }

    #[test]
    fn trace_grammar_language_equals_regex_grammar() {
        let r = parse_regex_text("('a'* 'b') | 'c'").unwrap();
        let alphabet = abc();
        let n = thompson(&r, &alphabet);
        let rg = regex_to_grammar(&r);
        let mut env = nfa_trace_env(&n, "q");
        for (name, def) in &rg.defs {
            env.define(name.clone(), def.clone());
        }
        let report = check_language_equal(
            &env,
            &rg.root,
            &GrammarExpr::nt(state_nt("q", n.init)),
            3,
        )
        .unwrap();
        assert!(report.passed());
    }
}
