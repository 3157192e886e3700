//! Regular expressions: the surface syntax, the abstract syntax, and the
//! translation onto grammar expressions.
//!
//! Surface syntax: `'tok'` for a literal, `eps`, `empty`, juxtaposition for
//! concatenation, `|` for union, postfix `*` for iteration and parentheses
//! for grouping. `*` binds tightest, then juxtaposition, then `|`. Literals
//! may be several characters long (`'NUM'`), so the quotes are not optional.
//!
//! Star is not a grammar primitive; `regex_to_grammar` expands each star
//! into a named fixpoint with `nil` and `cons` branches, numbered in the
//! order the stars are encountered.

use crate::alphabet::Token;
use crate::grammar::GrammarExpr;
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Regex {
    Lit(Token),
    Eps,
    Empty,
    Union(Box<Regex>, Box<Regex>),
    Concat(Box<Regex>, Box<Regex>),
    Star(Box<Regex>),
}

impl Regex {
    pub fn lit(tok: impl Into<Token>) -> Self {
        Regex::Lit(tok.into())
    }

    pub fn union(l: Regex, r: Regex) -> Self {
        Regex::Union(Box::new(l), Box::new(r))
    }

    pub fn concat(l: Regex, r: Regex) -> Self {
        Regex::Concat(Box::new(l), Box::new(r))
    }

    pub fn star(b: Regex) -> Self {
        Regex::Star(Box::new(b))
    }

    /// Every token mentioned in the expression, in sorted order.
    pub fn literals(&self) -> BTreeSet<Token> {
        let mut out = BTreeSet::new();
        fn walk(r: &Regex, out: &mut BTreeSet<Token>) {
            match r {
                Regex::Lit(t) => {
                    out.insert(t.clone());
                }
                Regex::Eps | Regex::Empty => {}
                Regex::Union(l, r) | Regex::Concat(l, r) => {
                    walk(l, out);
                    walk(r, out);
                }
                Regex::Star(b) => walk(b, out),
            }
        }
        walk(self, &mut out);
        out
    }
}

// Printing parenthesizes just enough that parsing the result gives back the
// same tree, associativity included: union and concatenation are read
// right-associated, so a left-nested child needs the parentheses.
impl Regex {
    fn prec(&self) -> u8 {
        match self {
            Regex::Union(..) => 0,
            Regex::Concat(..) => 1,
            Regex::Star(..) => 2,
            Regex::Lit(_) | Regex::Eps | Regex::Empty => 3,
        }
    }
}

impl fmt::Display for Regex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn show(r: &Regex, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            let parens = r.prec() < min;
            if parens {
                write!(f, "(")?;
            }
            match r {
                Regex::Lit(t) => write!(f, "'{t}'")?,
                Regex::Eps => write!(f, "eps")?,
                Regex::Empty => write!(f, "empty")?,
                Regex::Union(l, rr) => {
                    show(l, 1, f)?;
                    write!(f, " | ")?;
                    show(rr, 0, f)?;
                }
                Regex::Concat(l, rr) => {
                    show(l, 2, f)?;
                    write!(f, " ")?;
                    show(rr, 1, f)?;
                }
                Regex::Star(b) => {
                    show(b, 2, f)?;
                    write!(f, "*")?;
                }
            }
            if parens {
                write!(f, ")")?;
            }
            Ok(())
        }
        show(self, 0, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at byte {position}: {message}")]
pub struct SyntaxError {
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Lit(Token),
    Eps,
    Empty,
    Pipe,
    Star,
    LParen,
    RParen,
}

fn lex(input: &str) -> Result<Vec<(usize, Tok)>, SyntaxError> {
    let mut out = Vec::new();
    let bytes: Vec<(usize, char)> = input.char_indices().collect();
    let mut i = 0;
    while i < bytes.len() {
        let (pos, c) = bytes[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '|' => {
                out.push((pos, Tok::Pipe));
                i += 1;
            }
            '*' => {
                out.push((pos, Tok::Star));
                i += 1;
            }
            '(' => {
                out.push((pos, Tok::LParen));
                i += 1;
            }
            ')' => {
                out.push((pos, Tok::RParen));
                i += 1;
            }
            '\'' => {
                let start = i + 1;
                let mut j = start;
                while j < bytes.len() && bytes[j].1 != '\'' {
                    j += 1;
                }
                if j >= bytes.len() {
                    return Err(SyntaxError {
                        position: pos,
                        message: "unterminated literal".into(),
                    });
                }
                if j == start {
                    return Err(SyntaxError {
                        position: pos,
                        message: "empty literal".into(),
                    });
                }
                let tok: String = bytes[start..j].iter().map(|&(_, c)| c).collect();
                out.push((pos, Tok::Lit(tok)));
                i = j + 1;
            }
            c if c.is_ascii_alphabetic() => {
                let mut j = i;
                while j < bytes.len() && bytes[j].1.is_ascii_alphanumeric() {
                    j += 1;
                }
                let word: String = bytes[i..j].iter().map(|&(_, c)| c).collect();
                match word.as_str() {
                    "eps" => out.push((pos, Tok::Eps)),
                    "empty" => out.push((pos, Tok::Empty)),
                    other => {
                        return Err(SyntaxError {
                            position: pos,
                            message: format!("unknown word {other:?}; literals are quoted"),
                        })
                    }
                }
                i = j;
            }
            other => {
                return Err(SyntaxError {
                    position: pos,
                    message: format!("unexpected character {other:?}"),
                })
            }
        }
    }
    Ok(out)
}

struct RegexParser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl RegexParser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|&(p, _)| p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|(_, t)| t.clone());
        if t.is_some() {
            self.at += 1;
        }
        t
    }

    fn union(&mut self) -> Result<Regex, SyntaxError> {
        let left = self.concat()?;
        if matches!(self.peek(), Some(Tok::Pipe)) {
            self.bump();
            let right = self.union()?;
            Ok(Regex::union(left, right))
        } else {
            Ok(left)
        }
    }

    fn concat(&mut self) -> Result<Regex, SyntaxError> {
        let mut parts = vec![self.postfix()?];
        while matches!(
            self.peek(),
            Some(Tok::Lit(_)) | Some(Tok::Eps) | Some(Tok::Empty) | Some(Tok::LParen)
        ) {
            parts.push(self.postfix()?);
        }
        let mut it = parts.into_iter().rev();
        let last = it.next().expect("at least one factor");
        Ok(it.fold(last, |acc, e| Regex::concat(e, acc)))
    }

    fn postfix(&mut self) -> Result<Regex, SyntaxError> {
        let mut e = self.atom()?;
        while matches!(self.peek(), Some(Tok::Star)) {
            self.bump();
            e = Regex::star(e);
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<Regex, SyntaxError> {
        let pos = self.pos();
        match self.bump() {
            Some(Tok::Lit(t)) => Ok(Regex::Lit(t)),
            Some(Tok::Eps) => Ok(Regex::Eps),
            Some(Tok::Empty) => Ok(Regex::Empty),
            Some(Tok::LParen) => {
                let inner = self.union()?;
                let close_pos = self.pos();
                match self.bump() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => Err(SyntaxError {
                        position: close_pos,
                        message: "expected ')'".into(),
                    }),
                }
            }
            Some(other) => Err(SyntaxError {
                position: pos,
                message: format!("expected a literal, eps, empty or '(', found {other:?}"),
            }),
            None => Err(SyntaxError {
                position: pos,
                message: "expected a regular expression".into(),
            }),
        }
    }
}

pub fn parse_regex_text(input: &str) -> Result<Regex, SyntaxError> {
    let toks = lex(input)?;
    if toks.is_empty() {
        return Err(SyntaxError {
            position: 0,
            message: "empty input".into(),
        });
    }
    let mut p = RegexParser {
        toks,
        at: 0,
        end: input.len(),
    };
    let r = p.union()?;
    if p.at != p.toks.len() {
        return Err(SyntaxError {
            position: p.pos(),
            message: "trailing input after the expression".into(),
        });
    }
    Ok(r)
}

/// A regex expanded to grammar form: the star fixpoint definitions it needs
/// plus the root expression referring to them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegexGrammar {
    pub defs: Vec<(String, GrammarExpr)>,
    pub root: GrammarExpr,
}

/// Union becomes the two-tag sum, concatenation the tensor, and each star a
/// fresh fixpoint `starN ::= |nil: eps |cons: body starN`, numbered in the
/// order the stars are met walking the expression top-down, left to right.
pub fn regex_to_grammar(r: &Regex) -> RegexGrammar {
    let mut defs = Vec::new();
    let root = go(r, &mut defs);
    return RegexGrammar { defs, root };

    fn go(r: &Regex, defs: &mut Vec<(String, GrammarExpr)>) -> GrammarExpr {
        match r {
            Regex::Lit(t) => GrammarExpr::Lit(t.clone()),
            Regex::Eps => GrammarExpr::Eps,
            Regex::Empty => GrammarExpr::empty(),
            Regex::Union(l, rr) => GrammarExpr::union2(go(l, defs), go(rr, defs)),
            Regex::Concat(l, rr) => GrammarExpr::tensor(go(l, defs), go(rr, defs)),
            Regex::Star(b) => {
                let name = format!("star{}", defs.len());
                // Reserve the slot before walking the body so outer stars
                // get smaller numbers than the stars inside them.
                defs.push((name.clone(), GrammarExpr::Eps));
                let body = go(b, defs);
                let def = GrammarExpr::sum(vec![
                    ("nil", GrammarExpr::Eps),
                    ("cons", GrammarExpr::tensor(body, GrammarExpr::nt(name.clone()))),
                ]);
                let slot = defs.iter_mut().find(|(n, _)| *n == name).expect("reserved");
                slot.1 = def;
                GrammarExpr::nt(name)
            }
        }
    }
}
