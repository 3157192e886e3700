//! Right-associative arithmetic expressions over `( ) + NUM`, and the
//! one-token-lookahead machine that parses them.
//!
//! The grammar splits into two mutually recursive nonterminals: an
//! expression is an atom, or an atom, a plus, and a smaller expression (so
//! `+` nests to the right); an atom is a number or a parenthesized
//! expression.
//!
//! The machine has four state families, each carrying a parenthesis count
//! and a success bit. `O` (opening) eats `(`s and one number; `D` (done
//! opening) peeks one token without consuming it and dispatches — a `)`
//! peek goes to the closing family `C`, anything else to the adding family
//! `A`; `C` consumes the `)`; `A` either consumes `+` and returns to `O`,
//! or ends the input, succeeding exactly at count zero. Every family also
//! has failure steps that swallow the rest of the input as evidence, which
//! is what makes the run total on every word.
//!
//! One corner is genuinely partial rather than failing-in-place: at count
//! zero, a consumed `)` can only end the whole input (`CloseBad` parses
//! exactly that one token). When more input follows, the closing family
//! has no step at all, and the failure surfaces at the innermost enclosing
//! `O` state, which re-reads its entire remaining input as an unexpected
//! suffix. That suffix necessarily starts with the number that entered the
//! doomed descent, which is precisely why the `O`-level evidence admits
//! number-initial strings.

use crate::alphabet::{Alphabet, Token};
use crate::grammar::{GrammarEnv, GrammarExpr};
use crate::oracle::{Parser, Verdict};
use crate::tree::ParseTree;
use serde_json::{json, Value};

pub const LPAREN: &str = "(";
pub const RPAREN: &str = ")";
pub const PLUS: &str = "+";
pub const NUM: &str = "NUM";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExpError {
    #[error("token {token:?} is not in the expression alphabet")]
    TokenOutOfAlphabet { token: Token },
    #[error("malformed trace: {0}")]
    MalformedTrace(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExpTree {
    EDone(AtomTree),
    EAdd(AtomTree, Box<ExpTree>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AtomTree {
    ANum,
    AParens(Box<ExpTree>),
}

/// What a lookahead saw: the next token, unconsumed, or the end of input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Peek {
    Token(Token),
    End,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OTrace {
    /// `(` consumed; the count goes up by one.
    Left(Box<OTrace>),
    /// A number consumed; opening is done.
    Num(Box<DTrace>),
    /// The whole remaining input, which must not start with `(`: empty,
    /// or headed by `)`, `+`, or a number whose descent got stuck.
    Unexpected(Vec<Token>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DTrace {
    /// Peeked `)`; the continuation consumes it.
    LookAheadRP(Box<CTrace>),
    /// Peeked anything else (or the end); recorded for replay.
    LookAheadNot(Peek, Box<ATrace>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CTrace {
    /// `)` consumed at positive count; the count goes down by one.
    CloseGood(Box<DTrace>),
    /// `)` consumed at count zero — legal only as the very last token.
    CloseBad,
    /// Input not starting with `)`. The deterministic run never builds
    /// this (it only enters `C` after peeking `)`), but the machine has
    /// the step and replay accepts it.
    Unexpected(Vec<Token>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ATrace {
    /// End of input at count zero: the accepting terminal.
    DoneGood,
    /// End of input at positive count.
    DoneBad,
    /// `+` consumed; back to opening.
    Add(Box<OTrace>),
    /// A non-`+` token consumed, with the rest swallowed whole.
    Unexpected(Token, Vec<Token>),
}

pub fn exp_alphabet() -> Alphabet {
    Alphabet::new([LPAREN, RPAREN, PLUS, NUM]).expect("four distinct tokens")
}

fn check_tokens(w: &[Token]) -> Result<(), ExpError> {
    for tok in w {
        if tok != LPAREN && tok != RPAREN && tok != PLUS && tok != NUM {
            return Err(ExpError::TokenOutOfAlphabet { token: tok.clone() });
        }
    }
    Ok(())
}

/// `Exp ::= |done: Atom |add: Atom '+' Exp` and
/// `Atom ::= |num: 'NUM' |parens: '(' Exp ')'`.
pub fn exp_env() -> GrammarEnv {
    let mut env = GrammarEnv::new(exp_alphabet());
    env.define(
        "Exp",
        GrammarExpr::sum(vec![
            ("done", GrammarExpr::nt("Atom")),
            (
                "add",
                GrammarExpr::seq(vec![
                    GrammarExpr::nt("Atom"),
                    GrammarExpr::lit(PLUS),
                    GrammarExpr::nt("Exp"),
                ]),
            ),
        ]),
    );
    env.define(
        "Atom",
        GrammarExpr::sum(vec![
            ("num", GrammarExpr::lit(NUM)),
            (
                "parens",
                GrammarExpr::seq(vec![
                    GrammarExpr::lit(LPAREN),
                    GrammarExpr::nt("Exp"),
                    GrammarExpr::lit(RPAREN),
                ]),
            ),
        ]),
    );
    env
}

impl ExpTree {
    pub fn yield_of(&self) -> Vec<Token> {
        let mut out = Vec::new();
        self.push_yield(&mut out);
        out
    }

    fn push_yield(&self, out: &mut Vec<Token>) {
        match self {
            ExpTree::EDone(a) => a.push_yield(out),
            ExpTree::EAdd(a, rest) => {
                a.push_yield(out);
                out.push(PLUS.to_string());
                rest.push_yield(out);
            }
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            ExpTree::EDone(a) => json!({"node": "done", "atom": a.to_json()}),
            ExpTree::EAdd(a, rest) => {
                json!({"node": "add", "left": a.to_json(), "op": "+", "right": rest.to_json()})
            }
        }
    }
}

impl AtomTree {
    fn push_yield(&self, out: &mut Vec<Token>) {
        match self {
            AtomTree::ANum => out.push(NUM.to_string()),
            AtomTree::AParens(e) => {
                out.push(LPAREN.to_string());
                e.push_yield(out);
                out.push(RPAREN.to_string());
            }
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            AtomTree::ANum => json!({"node": "num"}),
            AtomTree::AParens(e) => json!({"node": "parens", "inner": e.to_json()}),
        }
    }
}

pub fn exp_tree_to_parse_tree(t: &ExpTree) -> ParseTree {
    fn enc_exp(t: &ExpTree) -> (ParseTree, usize) {
        match t {
            ExpTree::EDone(a) => {
                let (at, al) = enc_atom(a);
                (ParseTree::roll("Exp", ParseTree::inj("done", at)), al)
            }
            ExpTree::EAdd(a, rest) => {
                let (at, al) = enc_atom(a);
                let (rt, rl) = enc_exp(rest);
                let body = ParseTree::pair(al, at, ParseTree::pair(1, ParseTree::lit(PLUS), rt));
                (ParseTree::roll("Exp", ParseTree::inj("add", body)), al + 1 + rl)
            }
        }
    }
    fn enc_atom(a: &AtomTree) -> (ParseTree, usize) {
        match a {
            AtomTree::ANum => (
                ParseTree::roll("Atom", ParseTree::inj("num", ParseTree::lit(NUM))),
                1,
            ),
            AtomTree::AParens(e) => {
                let (et, el) = enc_exp(e);
                let body = ParseTree::pair(
                    1,
                    ParseTree::lit(LPAREN),
                    ParseTree::pair(el, et, ParseTree::lit(RPAREN)),
                );
                (ParseTree::roll("Atom", ParseTree::inj("parens", body)), el + 2)
            }
        }
    }
    enc_exp(t).0
}

pub fn parse_tree_to_exp_tree(t: &ParseTree) -> Result<ExpTree, ExpError> {
    let bad = |msg: &str| ExpError::MalformedTrace(msg.to_string());
    let ParseTree::Roll { nonterminal, body } = t else {
        return Err(bad("expected an expression parse"));
    };
    if nonterminal != "Exp" {
        return Err(bad("foreign nonterminal"));
    }
    let ParseTree::Inj { tag, body } = &**body else {
        return Err(bad("expected a constructor"));
    };
    match tag.as_str() {
        "done" => Ok(ExpTree::EDone(parse_tree_to_atom_tree(body)?)),
        "add" => {
            let ParseTree::Pair { left, right, .. } = &**body else {
                return Err(bad("add should pair atom and rest"));
            };
            let ParseTree::Pair { right: rest, .. } = &**right else {
                return Err(bad("add should carry a plus"));
            };
            Ok(ExpTree::EAdd(
                parse_tree_to_atom_tree(left)?,
                Box::new(parse_tree_to_exp_tree(rest)?),
            ))
        }
        _ => Err(bad("unexpected constructor")),
    }
}

fn parse_tree_to_atom_tree(t: &ParseTree) -> Result<AtomTree, ExpError> {
    let bad = |msg: &str| ExpError::MalformedTrace(msg.to_string());
    let ParseTree::Roll { nonterminal, body } = t else {
        return Err(bad("expected an atom parse"));
    };
    if nonterminal != "Atom" {
        return Err(bad("foreign nonterminal"));
    }
    let ParseTree::Inj { tag, body } = &**body else {
        return Err(bad("expected a constructor"));
    };
    match tag.as_str() {
        "num" => Ok(AtomTree::ANum),
        "parens" => {
            let ParseTree::Pair { right, .. } = &**body else {
                return Err(bad("parens should open"));
            };
            let ParseTree::Pair { left: inner, .. } = &**right else {
                return Err(bad("parens should carry an inner expression"));
            };
            Ok(AtomTree::AParens(Box::new(parse_tree_to_exp_tree(inner)?)))
        }
        _ => Err(bad("unexpected constructor")),
    }
}

// ---------------------------------------------------------------------
// The deterministic run. `O` and `A` always produce a trace; `D` and `C`
// can come up empty (the count-zero close with trailing input), and that
// emptiness propagates up through close chains to the nearest `O`.
// ---------------------------------------------------------------------

fn parse_o(w: &[Token], n: usize) -> OTrace {
    match w.split_first() {
        Some((t, rest)) if t == LPAREN => OTrace::Left(Box::new(parse_o(rest, n + 1))),
        Some((t, rest)) if t == NUM => match parse_dd(rest, n) {
            Some(d) => OTrace::Num(Box::new(d)),
            None => OTrace::Unexpected(w.to_vec()),
        },
        _ => OTrace::Unexpected(w.to_vec()),
    }
}

fn parse_dd(w: &[Token], n: usize) -> Option<DTrace> {
    match w.first() {
        Some(t) if t == RPAREN => Some(DTrace::LookAheadRP(Box::new(parse_c(w, n)?))),
        first => {
            let peek = match first {
                Some(t) => Peek::Token(t.clone()),
                None => Peek::End,
            };
            Some(DTrace::LookAheadNot(peek, Box::new(parse_a(w, n))))
        }
    }
}

fn parse_c(w: &[Token], n: usize) -> Option<CTrace> {
    match w.split_first() {
        Some((t, rest)) if t == RPAREN => {
            if n >= 1 {
                Some(CTrace::CloseGood(Box::new(parse_dd(rest, n - 1)?)))
            } else if rest.is_empty() {
                Some(CTrace::CloseBad)
            } else {
                None
            }
        }
        _ => Some(CTrace::Unexpected(w.to_vec())),
    }
}

fn parse_a(w: &[Token], n: usize) -> ATrace {
    match w.split_first() {
        None => {
            if n == 0 {
                ATrace::DoneGood
            } else {
                ATrace::DoneBad
            }
        }
        Some((t, rest)) if t == PLUS => ATrace::Add(Box::new(parse_o(rest, n))),
        Some((t, rest)) => ATrace::Unexpected(t.clone(), rest.to_vec()),
    }
}

impl OTrace {
    pub fn accept(&self) -> bool {
        match self {
            OTrace::Left(o) => o.accept(),
            OTrace::Num(d) => d.accept(),
            OTrace::Unexpected(_) => false,
        }
    }

    pub fn yield_of(&self) -> Vec<Token> {
        let mut out = Vec::new();
        self.push_yield(&mut out);
        out
    }

    fn push_yield(&self, out: &mut Vec<Token>) {
        match self {
            OTrace::Left(o) => {
                out.push(LPAREN.to_string());
                o.push_yield(out);
            }
            OTrace::Num(d) => {
                out.push(NUM.to_string());
                d.push_yield(out);
            }
            OTrace::Unexpected(rest) => out.extend(rest.iter().cloned()),
        }
    }

    /// Position of the step that decides rejection, if any.
    pub fn rejected_at(&self) -> Option<usize> {
        self.rejected_from(0)
    }

    fn rejected_from(&self, i: usize) -> Option<usize> {
        match self {
            OTrace::Left(o) => o.rejected_from(i + 1),
            OTrace::Num(d) => d.rejected_from(i + 1),
            OTrace::Unexpected(_) => Some(i),
        }
    }

    /// Replays the run from count `n`, checking every consumed token, the
    /// count bookkeeping, and the recorded lookahead evidence.
    pub fn validate(&self, n: usize) -> Result<(), ExpError> {
        match self {
            OTrace::Left(o) => o.validate(n + 1),
            OTrace::Num(d) => d.validate(n),
            OTrace::Unexpected(rest) => {
                check_tokens(rest)?;
                match rest.first() {
                    Some(t) if t == LPAREN => Err(ExpError::MalformedTrace(
                        "unexpected-opening evidence must not start with '('".into(),
                    )),
                    _ => Ok(()),
                }
            }
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            OTrace::Left(o) => json!({"state": "O", "step": "left", "next": o.to_json()}),
            OTrace::Num(d) => json!({"state": "O", "step": "num", "next": d.to_json()}),
            OTrace::Unexpected(rest) => {
                json!({"state": "O", "step": "unexpected", "rest": rest})
            }
        }
    }
}

impl DTrace {
    pub fn accept(&self) -> bool {
        match self {
            DTrace::LookAheadRP(c) => c.accept(),
            DTrace::LookAheadNot(_, a) => a.accept(),
        }
    }

    fn push_yield(&self, out: &mut Vec<Token>) {
        match self {
            DTrace::LookAheadRP(c) => c.push_yield(out),
            DTrace::LookAheadNot(_, a) => a.push_yield(out),
        }
    }

    fn rejected_from(&self, i: usize) -> Option<usize> {
        match self {
            DTrace::LookAheadRP(c) => c.rejected_from(i),
            DTrace::LookAheadNot(_, a) => a.rejected_from(i),
        }
    }

    fn validate(&self, n: usize) -> Result<(), ExpError> {
        match self {
            DTrace::LookAheadRP(c) => {
                let mut cont = Vec::new();
                c.push_yield(&mut cont);
                match cont.first() {
                    Some(t) if t == RPAREN => c.validate(n),
                    _ => Err(ExpError::MalformedTrace(
                        "a ')' lookahead needs a continuation starting with ')'".into(),
                    )),
                }
            }
            DTrace::LookAheadNot(peek, a) => {
                let mut cont = Vec::new();
                a.push_yield(&mut cont);
                let expected = match cont.first() {
                    Some(t) => Peek::Token(t.clone()),
                    None => Peek::End,
                };
                if expected == Peek::Token(RPAREN.to_string()) {
                    return Err(ExpError::MalformedTrace(
                        "a non-')' lookahead cannot face a ')'".into(),
                    ));
                }
                if *peek != expected {
                    return Err(ExpError::MalformedTrace(
                        "recorded lookahead disagrees with the continuation".into(),
                    ));
                }
                a.validate(n)
            }
        }
    }

    fn to_json(&self) -> Value {
        match self {
            DTrace::LookAheadRP(c) => {
                json!({"state": "D", "step": "lookAheadRP", "next": c.to_json()})
            }
            DTrace::LookAheadNot(peek, a) => {
                let peek = match peek {
                    Peek::Token(t) => json!(t),
                    Peek::End => Value::Null,
                };
                json!({"state": "D", "step": "lookAheadNot", "peek": peek, "next": a.to_json()})
            }
        }
    }
}

impl CTrace {
    pub fn accept(&self) -> bool {
        match self {
            CTrace::CloseGood(d) => d.accept(),
            CTrace::CloseBad | CTrace::Unexpected(_) => false,
        }
    }

    fn push_yield(&self, out: &mut Vec<Token>) {
        match self {
            CTrace::CloseGood(d) => {
                out.push(RPAREN.to_string());
                d.push_yield(out);
            }
            CTrace::CloseBad => out.push(RPAREN.to_string()),
            CTrace::Unexpected(rest) => out.extend(rest.iter().cloned()),
        }
    }

    fn rejected_from(&self, i: usize) -> Option<usize> {
        match self {
            CTrace::CloseGood(d) => d.rejected_from(i + 1),
            CTrace::CloseBad => Some(i),
            CTrace::Unexpected(_) => Some(i),
        }
    }

    fn validate(&self, n: usize) -> Result<(), ExpError> {
        match self {
            CTrace::CloseGood(d) => {
                if n == 0 {
                    return Err(ExpError::MalformedTrace("cannot close at count zero".into()));
                }
                d.validate(n - 1)
            }
            CTrace::CloseBad => {
                if n != 0 {
                    return Err(ExpError::MalformedTrace(
                        "the bad close only fires at count zero".into(),
                    ));
                }
                Ok(())
            }
            CTrace::Unexpected(rest) => {
                check_tokens(rest)?;
                match rest.first() {
                    Some(t) if t == RPAREN => Err(ExpError::MalformedTrace(
                        "unexpected-closing evidence must not start with ')'".into(),
                    )),
                    _ => Ok(()),
                }
            }
        }
    }

    fn to_json(&self) -> Value {
        match self {
            CTrace::CloseGood(d) => json!({"state": "C", "step": "closeGood", "next": d.to_json()}),
            CTrace::CloseBad => json!({"state": "C", "step": "closeBad"}),
            CTrace::Unexpected(rest) => {
                json!({"state": "C", "step": "unexpected", "rest": rest})
            }
        }
    }
}

impl ATrace {
    pub fn accept(&self) -> bool {
        match self {
            ATrace::DoneGood => true,
            ATrace::Add(o) => o.accept(),
            ATrace::DoneBad | ATrace::Unexpected(..) => false,
        }
    }

    fn push_yield(&self, out: &mut Vec<Token>) {
        match self {
            ATrace::DoneGood | ATrace::DoneBad => {}
            ATrace::Add(o) => {
                out.push(PLUS.to_string());
                o.push_yield(out);
            }
            ATrace::Unexpected(t, rest) => {
                out.push(t.clone());
                out.extend(rest.iter().cloned());
            }
        }
    }

    fn rejected_from(&self, i: usize) -> Option<usize> {
        match self {
            ATrace::DoneGood => None,
            ATrace::DoneBad => Some(i),
            ATrace::Add(o) => o.rejected_from(i + 1),
            ATrace::Unexpected(..) => Some(i),
        }
    }

    fn validate(&self, n: usize) -> Result<(), ExpError> {
        match self {
            ATrace::DoneGood => {
                if n != 0 {
                    return Err(ExpError::MalformedTrace(
                        "success requires count zero".into(),
                    ));
                }
                Ok(())
            }
            ATrace::DoneBad => {
                if n == 0 {
                    return Err(ExpError::MalformedTrace(
                        "ending at count zero is a success, not a failure".into(),
                    ));
                }
                Ok(())
            }
            ATrace::Add(o) => o.validate(n),
            ATrace::Unexpected(t, rest) => {
                if t == PLUS {
                    return Err(ExpError::MalformedTrace(
                        "a '+' in the adding state is expected, not unexpected".into(),
                    ));
                }
                check_tokens(std::slice::from_ref(t))?;
                check_tokens(rest)
            }
        }
    }

    fn to_json(&self) -> Value {
        match self {
            ATrace::DoneGood => json!({"state": "A", "step": "doneGood"}),
            ATrace::DoneBad => json!({"state": "A", "step": "doneBad"}),
            ATrace::Add(o) => json!({"state": "A", "step": "add", "next": o.to_json()}),
            ATrace::Unexpected(t, rest) => {
                json!({"state": "A", "step": "unexpected", "token": t, "rest": rest})
            }
        }
    }
}

/// Full replay: evidence and count bookkeeping check out, and the trace
/// reads exactly `w`. Returns the success bit.
pub fn replay(tr: &OTrace, w: &[Token]) -> Result<bool, ExpError> {
    tr.validate(0)?;
    if tr.yield_of() != w {
        return Err(ExpError::MalformedTrace("the trace reads a different word".into()));
    }
    Ok(tr.accept())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExpVerdict {
    Accept(ExpTree),
    Reject(OTrace),
}

/// Total parser: run the machine from the opening state at count zero; an
/// accepting run is handed back as the expression it spells, a rejecting
/// run is returned whole.
pub fn parse_exp(w: &[Token]) -> Result<ExpVerdict, ExpError> {
    check_tokens(w)?;
    let tr = parse_o(w, 0);
    if tr.accept() {
        Ok(ExpVerdict::Accept(machine_to_exp(&tr)?))
    } else {
        Ok(ExpVerdict::Reject(tr))
    }
}

enum Frame {
    /// An atom waiting for the right operand of its `+`.
    Add(AtomTree),
    /// An open parenthesis waiting for its close.
    Paren,
}

/// Reads the expression out of an accepting run. The run is a flat walk,
/// so this is a little shift-reduce loop: `(` pushes, a number becomes the
/// current atom, a good close folds pending adds back to the matching open
/// and wraps, a `+` parks the current atom, and the accepting end folds
/// whatever remains.
pub fn machine_to_exp(tr: &OTrace) -> Result<ExpTree, ExpError> {
    if !tr.accept() {
        return Err(ExpError::MalformedTrace(
            "only accepting runs spell an expression".into(),
        ));
    }
    enum Pos<'a> {
        O(&'a OTrace),
        D(&'a DTrace),
        C(&'a CTrace),
        A(&'a ATrace),
    }
    let bad = |msg: &str| ExpError::MalformedTrace(msg.to_string());
    let mut frames: Vec<Frame> = Vec::new();
    let mut atom: Option<AtomTree> = None;
    let mut pos = Pos::O(tr);
    loop {
        match pos {
            Pos::O(OTrace::Left(inner)) => {
                frames.push(Frame::Paren);
                pos = Pos::O(inner);
            }
            Pos::O(OTrace::Num(d)) => {
                atom = Some(AtomTree::ANum);
                pos = Pos::D(d);
            }
            Pos::O(OTrace::Unexpected(_)) => {
                return Err(bad("rejecting step inside an accepting run"))
            }
            Pos::D(DTrace::LookAheadRP(c)) => pos = Pos::C(c),
            Pos::D(DTrace::LookAheadNot(_, a)) => pos = Pos::A(a),
            Pos::C(CTrace::CloseGood(d)) => {
                let a = atom.take().ok_or_else(|| bad("close without an atom"))?;
                let mut exp = ExpTree::EDone(a);
                loop {
                    match frames.pop() {
                        Some(Frame::Add(x)) => exp = ExpTree::EAdd(x, Box::new(exp)),
                        Some(Frame::Paren) => break,
                        None => return Err(bad("close without a matching open")),
                    }
                }
                atom = Some(AtomTree::AParens(Box::new(exp)));
                pos = Pos::D(d);
            }
            Pos::C(_) => return Err(bad("rejecting step inside an accepting run")),
            Pos::A(ATrace::Add(o)) => {
                let a = atom.take().ok_or_else(|| bad("plus without an atom"))?;
                frames.push(Frame::Add(a));
                pos = Pos::O(o);
            }
            Pos::A(ATrace::DoneGood) => {
                let a = atom.take().ok_or_else(|| bad("empty accepting run"))?;
                let mut exp = ExpTree::EDone(a);
                while let Some(f) = frames.pop() {
                    match f {
                        Frame::Add(x) => exp = ExpTree::EAdd(x, Box::new(exp)),
                        Frame::Paren => return Err(bad("accepting run left a paren open")),
                    }
                }
                return Ok(exp);
            }
            Pos::A(_) => return Err(bad("rejecting step inside an accepting run")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Step {
    OLeft,
    ONum,
    DLookRP,
    DLookNot(Peek),
    CCloseGood,
    AAdd,
    ADoneGood,
}

/// Builds the accepting run that reads a tree's yield. Steps are emitted
/// left to right into one growing buffer — the lookahead step after each
/// atom is decided by the pending work, closing as many parentheses as
/// are due before the next `+` or the end — and the buffer is sealed into
/// the nested trace at the end.
pub fn exp_to_machine(t: &ExpTree) -> OTrace {
    enum Work<'a> {
        Exp(&'a ExpTree),
        Atom(&'a AtomTree),
        Plus(&'a ExpTree),
        Close,
    }

    fn after_atom<'a>(work: &mut Vec<Work<'a>>, steps: &mut Vec<Step>) {
        loop {
            match work.last() {
                Some(Work::Plus(_)) => {
                    let Some(Work::Plus(rest)) = work.pop() else { unreachable!() };
                    steps.push(Step::DLookNot(Peek::Token(PLUS.to_string())));
                    steps.push(Step::AAdd);
                    work.push(Work::Exp(rest));
                    return;
                }
                Some(Work::Close) => {
                    work.pop();
                    steps.push(Step::DLookRP);
                    steps.push(Step::CCloseGood);
                    // Back in a lookahead position; keep consulting.
                }
                None => {
                    steps.push(Step::DLookNot(Peek::End));
                    steps.push(Step::ADoneGood);
                    return;
                }
                Some(Work::Exp(_)) | Some(Work::Atom(_)) => {
                    unreachable!("an atom never completes under unprocessed structure")
                }
            }
        }
    }

    let mut steps = Vec::new();
    let mut work = vec![Work::Exp(t)];
    while let Some(item) = work.pop() {
        match item {
            Work::Exp(ExpTree::EDone(a)) => work.push(Work::Atom(a)),
            Work::Exp(ExpTree::EAdd(a, rest)) => {
                work.push(Work::Plus(rest));
                work.push(Work::Atom(a));
            }
            Work::Atom(AtomTree::ANum) => {
                steps.push(Step::ONum);
                after_atom(&mut work, &mut steps);
            }
            Work::Atom(AtomTree::AParens(e)) => {
                steps.push(Step::OLeft);
                work.push(Work::Close);
                work.push(Work::Exp(e));
            }
            Work::Plus(_) | Work::Close => unreachable!("consumed at atom completion"),
        }
    }
    seal(steps)
}

fn seal(steps: Vec<Step>) -> OTrace {
    enum Acc {
        O(OTrace),
        D(DTrace),
        C(CTrace),
        A(ATrace),
    }
    let mut acc: Option<Acc> = None;
    for step in steps.into_iter().rev() {
        acc = Some(match (step, acc) {
            (Step::ADoneGood, None) => Acc::A(ATrace::DoneGood),
            (Step::AAdd, Some(Acc::O(o))) => Acc::A(ATrace::Add(Box::new(o))),
            (Step::DLookNot(p), Some(Acc::A(a))) => Acc::D(DTrace::LookAheadNot(p, Box::new(a))),
            (Step::DLookRP, Some(Acc::C(c))) => Acc::D(DTrace::LookAheadRP(Box::new(c))),
            (Step::CCloseGood, Some(Acc::D(d))) => Acc::C(CTrace::CloseGood(Box::new(d))),
            (Step::ONum, Some(Acc::D(d))) => Acc::O(OTrace::Num(Box::new(d))),
            (Step::OLeft, Some(Acc::O(o))) => Acc::O(OTrace::Left(Box::new(o))),
            _ => unreachable!("emission produces well-chained steps"),
        });
    }
    match acc {
        Some(Acc::O(o)) => o,
        _ => unreachable!("emission starts in the opening state"),
    }
}

/// Reference membership decision (`E → T ('+' E)?; T → NUM | '(' E ')'`),
/// used to audit the machine and the grammar against each other.
pub fn exp_reference(w: &[Token]) -> bool {
    fn parse_e(w: &[Token], i: usize) -> Option<usize> {
        let i = parse_t(w, i)?;
        match w.get(i) {
            Some(t) if t == PLUS => parse_e(w, i + 1),
            _ => Some(i),
        }
    }
    fn parse_t(w: &[Token], i: usize) -> Option<usize> {
        match w.get(i)?.as_str() {
            NUM => Some(i + 1),
            LPAREN => {
                let j = parse_e(w, i + 1)?;
                match w.get(j) {
                    Some(t) if t == RPAREN => Some(j + 1),
                    _ => None,
                }
            }
            _ => None,
        }
    }
    parse_e(w, 0) == Some(w.len())
}

/// The machine as a grammar-level parser: accepted words carry their
/// grammar parse, rejected words carry non-membership as reified evidence.
pub fn exp_parser() -> (GrammarEnv, Parser) {
    let mut env = exp_env();
    env.define_predicate("notExp", |w| !exp_reference(w));
    let parser = Parser::new(
        "exp-lookahead",
        GrammarExpr::nt("Exp"),
        GrammarExpr::Reify("notExp".into()),
        |w| match parse_exp(w).expect("tokens are checked by callers") {
            ExpVerdict::Accept(t) => Verdict::Accept(exp_tree_to_parse_tree(&t)),
            ExpVerdict::Reject(_) => Verdict::Reject(ParseTree::ReifyLeaf {
                predicate_id: "notExp".into(),
                witness: w.to_vec(),
            }),
        },
    );
    (env, parser)
}

/// Wraps a run for output: verdict, the rejection point if any, then the
/// nested steps.
pub fn trace_json(tr: &OTrace) -> Value {
    let mut obj = json!({
        "accept": tr.accept(),
        "run": tr.to_json(),
    });
    if let Some(i) = tr.rejected_at() {
        obj["rejectedAt"] = json!(i);
    }
    obj
}
