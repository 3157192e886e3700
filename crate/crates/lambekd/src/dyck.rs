//! Balanced parentheses: the grammar, its counter machine, and the
//! translations between machine traces and grammar parses.
//!
//! The grammar has two constructors — the empty word is balanced, and
//! wrapping a balanced word in parentheses and following it with another
//! balanced word is balanced. The machine is the obvious counter: `(`
//! pushes, `)` pops, popping at zero falls into a failure sink, and a run
//! accepts exactly when the input is exhausted at count zero with the sink
//! never entered. The two descriptions agree word for word, and on
//! accepting runs the agreement is witnessed by a pair of mutually inverse
//! translations, so the machine's verdict can be handed back as a grammar
//! parse.

use crate::alphabet::{Alphabet, Token};
use crate::grammar::{GrammarEnv, GrammarExpr};
use crate::oracle::{Parser, Verdict};
use crate::tree::ParseTree;
use serde_json::{json, Value};

pub const OPEN: &str = "(";
pub const CLOSE: &str = ")";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DyckError {
    #[error("token {token:?} is not a parenthesis")]
    TokenOutOfAlphabet { token: Token },
    #[error("malformed trace: {0}")]
    MalformedTrace(String),
}

/// A parse of the balanced-parenthesis grammar: empty, or one bracketed
/// segment followed by the rest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DyckTree {
    DNil,
    DBal(Box<DyckTree>, Box<DyckTree>),
}

/// One step of the counter machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CounterStep {
    /// `(` at count n, moving to n+1.
    Open,
    /// `)` at count n ≥ 1, moving to n-1.
    Close,
    /// `)` at count 0: the edge into the failure sink.
    ToFail,
    /// Any token while in the sink.
    FailLoop(Token),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CounterState {
    Counter(usize),
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terminal {
    /// Input exhausted at count 0 outside the sink: the accepting end.
    Stop,
    /// Input exhausted anywhere else.
    Exhausted,
}

/// A complete run of the counter machine. Acceptance is carried by the
/// terminal: only `Stop` accepts, and `validate` checks it appears only at
/// count zero with the sink never entered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterTrace {
    pub start: CounterState,
    pub steps: Vec<CounterStep>,
    pub terminal: Terminal,
}

impl CounterStep {
    pub fn token(&self) -> Token {
        match self {
            CounterStep::Open => OPEN.to_string(),
            CounterStep::Close | CounterStep::ToFail => CLOSE.to_string(),
            CounterStep::FailLoop(t) => t.clone(),
        }
    }
}

impl CounterTrace {
    pub fn accept(&self) -> bool {
        self.terminal == Terminal::Stop
    }

    pub fn yield_of(&self) -> Vec<Token> {
        self.steps.iter().map(|s| s.token()).collect()
    }

    /// Replays the run, checking every step against the machine: counts
    /// must chain, the sink must be entered exactly by `ToFail`, and the
    /// terminal must match the final configuration.
    pub fn validate(&self) -> Result<(), DyckError> {
        let mut state = self.start;
        for (i, step) in self.steps.iter().enumerate() {
            state = match (state, step) {
                (CounterState::Counter(n), CounterStep::Open) => CounterState::Counter(n + 1),
                (CounterState::Counter(n), CounterStep::Close) if n >= 1 => {
                    CounterState::Counter(n - 1)
                }
                (CounterState::Counter(0), CounterStep::ToFail) => CounterState::Fail,
                (CounterState::Fail, CounterStep::FailLoop(t))
                    if t == OPEN || t == CLOSE =>
                {
                    CounterState::Fail
                }
                _ => {
                    return Err(DyckError::MalformedTrace(format!(
                        "step {i} ({step:?}) does not fire from {state:?}"
                    )))
                }
            };
        }
        match (self.terminal, state) {
            (Terminal::Stop, CounterState::Counter(0)) => Ok(()),
            (Terminal::Stop, _) => Err(DyckError::MalformedTrace(
                "accepting terminal away from count zero".into(),
            )),
            (Terminal::Exhausted, CounterState::Counter(0)) => Err(DyckError::MalformedTrace(
                "rejecting terminal at the accepting configuration".into(),
            )),
            (Terminal::Exhausted, _) => Ok(()),
        }
    }

    /// Index of the input position that decides rejection: the `)` that
    /// enters the sink, or the end of input for a positive leftover count.
    pub fn rejected_at(&self) -> Option<usize> {
        if self.accept() {
            return None;
        }
        Some(
            self.steps
                .iter()
                .position(|s| matches!(s, CounterStep::ToFail))
                .unwrap_or(self.steps.len()),
        )
    }

    pub fn to_json(&self) -> Value {
        let start = match self.start {
            CounterState::Counter(n) => json!(n),
            CounterState::Fail => json!("fail"),
        };
        let steps: Vec<Value> = self
            .steps
            .iter()
            .map(|s| match s {
                CounterStep::Open => json!({"step": "open"}),
                CounterStep::Close => json!({"step": "close"}),
                CounterStep::ToFail => json!({"step": "toFail"}),
                CounterStep::FailLoop(t) => json!({"step": "failLoop", "token": t}),
            })
            .collect();
        let terminal = match self.terminal {
            Terminal::Stop => "stop",
            Terminal::Exhausted => "exhausted",
        };
        let mut obj = json!({
            "start": start,
            "steps": steps,
            "terminal": terminal,
            "accept": self.accept(),
        });
        if let Some(i) = self.rejected_at() {
            obj["rejectedAt"] = json!(i);
        }
        obj
    }
}

pub fn dyck_alphabet() -> Alphabet {
    Alphabet::new([OPEN, CLOSE]).expect("two distinct tokens")
}

/// The balanced-parenthesis grammar:
/// `Dyck ::= |nil: eps |bal: '(' Dyck ')' Dyck`.
pub fn dyck_env() -> GrammarEnv {
    let mut env = GrammarEnv::new(dyck_alphabet());
    env.define(
        "Dyck",
        GrammarExpr::sum(vec![
            ("nil", GrammarExpr::Eps),
            (
                "bal",
                GrammarExpr::seq(vec![
                    GrammarExpr::lit(OPEN),
                    GrammarExpr::nt("Dyck"),
                    GrammarExpr::lit(CLOSE),
                    GrammarExpr::nt("Dyck"),
                ]),
            ),
        ]),
    );
    env
}

impl DyckTree {
    pub fn yield_of(&self) -> Vec<Token> {
        let mut out = Vec::new();
        self.push_yield(&mut out);
        out
    }

    fn push_yield(&self, out: &mut Vec<Token>) {
        if let DyckTree::DBal(inner, rest) = self {
            out.push(OPEN.to_string());
            inner.push_yield(out);
            out.push(CLOSE.to_string());
            rest.push_yield(out);
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            DyckTree::DNil => json!({"node": "nil"}),
            DyckTree::DBal(inner, rest) => {
                json!({"node": "bal", "inner": inner.to_json(), "rest": rest.to_json()})
            }
        }
    }
}

/// Encodes a tree as a parse of the grammar in `dyck_env`.
pub fn dyck_tree_to_parse_tree(t: &DyckTree) -> ParseTree {
    fn enc(t: &DyckTree) -> (ParseTree, usize) {
        match t {
            DyckTree::DNil => (
                ParseTree::roll("Dyck", ParseTree::inj("nil", ParseTree::EpsLeaf)),
                0,
            ),
            DyckTree::DBal(inner, rest) => {
                let (it, ilen) = enc(inner);
                let (rt, rlen) = enc(rest);
                let body = ParseTree::pair(
                    1,
                    ParseTree::lit(OPEN),
                    ParseTree::pair(
                        ilen,
                        it,
                        ParseTree::pair(1, ParseTree::lit(CLOSE), rt),
                    ),
                );
                (
                    ParseTree::roll("Dyck", ParseTree::inj("bal", body)),
                    ilen + rlen + 2,
                )
            }
        }
    }
    enc(t).0
}

/// Reads a parse of the grammar in `dyck_env` back into a tree.
pub fn parse_tree_to_dyck_tree(t: &ParseTree) -> Result<DyckTree, DyckError> {
    let bad = |msg: &str| DyckError::MalformedTrace(msg.to_string());
    let ParseTree::Roll { nonterminal, body } = t else {
        return Err(bad("expected a Dyck parse"));
    };
    if nonterminal != "Dyck" {
        return Err(bad("foreign nonterminal"));
    }
    let ParseTree::Inj { tag, body } = &**body else {
        return Err(bad("expected a constructor"));
    };
    match tag.as_str() {
        "nil" => Ok(DyckTree::DNil),
        "bal" => {
            let ParseTree::Pair { right, .. } = &**body else {
                return Err(bad("bal should start with '('"));
            };
            let ParseTree::Pair { left: inner, right, .. } = &**right else {
                return Err(bad("bal should carry an inner parse"));
            };
            let ParseTree::Pair { right: rest, .. } = &**right else {
                return Err(bad("bal should close and continue"));
            };
            Ok(DyckTree::DBal(
                Box::new(parse_tree_to_dyck_tree(inner)?),
                Box::new(parse_tree_to_dyck_tree(rest)?),
            ))
        }
        _ => Err(bad("unexpected constructor")),
    }
}

/// Runs the counter machine over any parenthesis word. Total: every input
/// gets a complete trace, accepting or not.
pub fn run_counter(w: &[Token]) -> Result<CounterTrace, DyckError> {
    let mut state = CounterState::Counter(0);
    let mut steps = Vec::with_capacity(w.len());
    for tok in w {
        if tok != OPEN && tok != CLOSE {
            return Err(DyckError::TokenOutOfAlphabet { token: tok.clone() });
        }
        let step = match (state, tok.as_str()) {
            (CounterState::Counter(n), OPEN) => {
                state = CounterState::Counter(n + 1);
                CounterStep::Open
            }
            (CounterState::Counter(0), CLOSE) => {
                state = CounterState::Fail;
                CounterStep::ToFail
            }
            (CounterState::Counter(n), CLOSE) => {
                state = CounterState::Counter(n - 1);
                CounterStep::Close
            }
            (CounterState::Fail, _) => CounterStep::FailLoop(tok.clone()),
            _ => unreachable!("tokens are checked above"),
        };
        steps.push(step);
    }
    let terminal = if state == CounterState::Counter(0) {
        Terminal::Stop
    } else {
        Terminal::Exhausted
    };
    Ok(CounterTrace {
        start: CounterState::Counter(0),
        steps,
        terminal,
    })
}

/// Flattens a tree into the accepting run that reads its yield. The steps
/// are pushed left to right into one growing buffer — each subtree
/// contributes a fragment, offset by however deep in parentheses it sits —
/// and the buffer is sealed with the accepting terminal at the end.
pub fn dyck_to_trace(t: &DyckTree) -> CounterTrace {
    fn emit(t: &DyckTree, steps: &mut Vec<CounterStep>) {
        if let DyckTree::DBal(inner, rest) = t {
            steps.push(CounterStep::Open);
            emit(inner, steps);
            steps.push(CounterStep::Close);
            emit(rest, steps);
        }
    }
    let mut steps = Vec::new();
    emit(t, &mut steps);
    CounterTrace {
        start: CounterState::Counter(0),
        steps,
        terminal: Terminal::Stop,
    }
}

/// Rebuilds the tree from an accepting run; inverse to `dyck_to_trace`.
pub fn trace_to_dyck(tr: &CounterTrace) -> Result<DyckTree, DyckError> {
    tr.validate()?;
    if !tr.accept() {
        return Err(DyckError::MalformedTrace(
            "only accepting runs correspond to parses".into(),
        ));
    }
    fn parse(steps: &[CounterStep], i: &mut usize) -> Result<DyckTree, DyckError> {
        if *i < steps.len() && steps[*i] == CounterStep::Open {
            *i += 1;
            let inner = parse(steps, i)?;
            if steps.get(*i) != Some(&CounterStep::Close) {
                return Err(DyckError::MalformedTrace("unclosed segment".into()));
            }
            *i += 1;
            let rest = parse(steps, i)?;
            Ok(DyckTree::DBal(Box::new(inner), Box::new(rest)))
        } else {
            Ok(DyckTree::DNil)
        }
    }
    let mut i = 0;
    let t = parse(&tr.steps, &mut i)?;
    if i != tr.steps.len() {
        return Err(DyckError::MalformedTrace("trailing steps".into()));
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DyckVerdict {
    Accept(DyckTree),
    Reject(CounterTrace),
}

/// Total parser for the balanced-parenthesis language: run the machine,
/// and on acceptance hand the run back as a grammar parse.
pub fn parse_dyck(w: &[Token]) -> Result<DyckVerdict, DyckError> {
    let tr = run_counter(w)?;
    if tr.accept() {
        Ok(DyckVerdict::Accept(trace_to_dyck(&tr)?))
    } else {
        Ok(DyckVerdict::Reject(tr))
    }
}

/// Reference membership decision, used to audit everything else.
pub fn balanced(w: &[Token]) -> bool {
    let mut depth: isize = 0;
    for tok in w {
        match tok.as_str() {
            OPEN => depth += 1,
            CLOSE => depth -= 1,
            _ => return false,
        }
        if depth < 0 {
            return false;
        }
    }
    depth == 0
}

/// The machine as a grammar-level parser: accepted words carry their
/// grammar parse, rejected words carry unbalancedness as reified evidence.
pub fn dyck_parser() -> (GrammarEnv, Parser) {
    let mut env = dyck_env();
    env.define_predicate("unbalanced", |w| !balanced(w));
    let parser = Parser::new(
        "dyck-counter",
        GrammarExpr::nt("Dyck"),
        GrammarExpr::Reify("unbalanced".into()),
        |w| match parse_dyck(w).expect("tokens are checked by callers") {
            DyckVerdict::Accept(t) => Verdict::Accept(dyck_tree_to_parse_tree(&t)),
            DyckVerdict::Reject(_) => Verdict::Reject(ParseTree::ReifyLeaf {
                predicate_id: "unbalanced".into(),
                witness: w.to_vec(),
            }),
        },
    );
    (env, parser)
}
