//! Line-oriented text format for grammar environments.
//!
//! One declaration per line: an `alphabet a b c` line first, then
//! `Name ::= expr` definitions. Expression syntax: `'a'` for a literal,
//! `eps` for the empty word, `empty` and `top` for the empty sum and
//! product, juxtaposition for concatenation, `|tag: part` alternatives for
//! sums, `&{tag: expr, ...}` for products, a bare identifier for a
//! nonterminal reference, and `reify(p)` for a named predicate. `#` starts
//! a comment (outside quotes), and whitespace within a line is free.
//!
//! `print_grammar_text` writes the same format back; reading what it wrote
//! reproduces the environment's alphabet and definitions. Predicates have
//! no textual body — a file may refer to one with `reify(p)`, but the
//! closure itself must be registered on the environment by the caller.

use crate::alphabet::Alphabet;
use crate::grammar::{GrammarEnv, GrammarExpr};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct TextError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> TextError {
    TextError {
        line,
        message: message.into(),
    }
}

/// Everything before the first `#` that is not inside a quoted literal.
fn strip_comment(line: &str) -> &str {
    let mut in_quote = false;
    for (i, c) in line.char_indices() {
        match c {
            '\'' => in_quote = !in_quote,
            '#' if !in_quote => return &line[..i],
            _ => {}
        }
    }
    line
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Quote(String),
    Ident(String),
    Bar,
    Colon,
    Comma,
    Amp,
    LBrace,
    RBrace,
    LParen,
    RParen,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Quote(s) => format!("literal '{s}'"),
            Tok::Ident(s) => format!("identifier {s:?}"),
            Tok::Bar => "'|'".into(),
            Tok::Colon => "':'".into(),
            Tok::Comma => "','".into(),
            Tok::Amp => "'&'".into(),
            Tok::LBrace => "'{'".into(),
            Tok::RBrace => "'}'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
        }
    }
}

fn lex(line: usize, src: &str) -> Result<Vec<Tok>, TextError> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '\'' => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('\'') => break,
                        Some(ch) => s.push(ch),
                        None => return Err(err(line, "unterminated literal")),
                    }
                }
                out.push(Tok::Quote(s));
            }
            '|' => {
                chars.next();
                out.push(Tok::Bar);
            }
            ':' => {
                chars.next();
                out.push(Tok::Colon);
            }
            ',' => {
                chars.next();
                out.push(Tok::Comma);
            }
            '&' => {
                chars.next();
                out.push(Tok::Amp);
            }
            '{' => {
                chars.next();
                out.push(Tok::LBrace);
            }
            '}' => {
                chars.next();
                out.push(Tok::RBrace);
            }
            '(' => {
                chars.next();
                out.push(Tok::LParen);
            }
            ')' => {
                chars.next();
                out.push(Tok::RParen);
            }
            c if c.is_alphanumeric() || c == '_' => {
                let mut s = String::new();
                while let Some(&ch) = chars.peek() {
                    if ch.is_alphanumeric() || ch == '_' {
                        s.push(ch);
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push(Tok::Ident(s));
            }
            other => return Err(err(line, format!("unexpected character {other:?}"))),
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    toks: &'a [Tok],
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self, what: &str) -> Result<&'a Tok, TextError> {
        let t = self
            .toks
            .get(self.pos)
            .ok_or_else(|| err(self.line, format!("expected {what}, found end of line")))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, want: Tok) -> Result<(), TextError> {
        let got = self.next(&want.describe())?;
        if *got == want {
            Ok(())
        } else {
            Err(err(
                self.line,
                format!("expected {}, found {}", want.describe(), got.describe()),
            ))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, TextError> {
        match self.next(what)? {
            Tok::Ident(s) => Ok(s.clone()),
            other => Err(err(
                self.line,
                format!("expected {what}, found {}", other.describe()),
            )),
        }
    }
}

fn starts_atom(t: &Tok) -> bool {
    matches!(t, Tok::Quote(_) | Tok::Ident(_) | Tok::Amp | Tok::LParen)
}

fn parse_expr(p: &mut Cursor) -> Result<GrammarExpr, TextError> {
    if matches!(p.peek(), Some(Tok::Bar)) {
        let mut branches = Vec::new();
        while matches!(p.peek(), Some(Tok::Bar)) {
            p.next("'|'")?;
            let tag = p.ident("alternative tag")?;
            p.expect(Tok::Colon)?;
            branches.push((tag, parse_tensor(p)?));
        }
        Ok(GrammarExpr::SumN(branches))
    } else {
        parse_tensor(p)
    }
}

fn parse_tensor(p: &mut Cursor) -> Result<GrammarExpr, TextError> {
    let mut parts = vec![parse_atom(p)?];
    while p.peek().is_some_and(starts_atom) {
        parts.push(parse_atom(p)?);
    }
    Ok(GrammarExpr::seq(parts))
}

fn parse_atom(p: &mut Cursor) -> Result<GrammarExpr, TextError> {
    let line = p.line;
    match p.next("an expression")? {
        Tok::Quote(s) => Ok(GrammarExpr::Lit(s.clone())),
        Tok::Ident(name) => match name.as_str() {
            "eps" => Ok(GrammarExpr::Eps),
            "empty" => Ok(GrammarExpr::empty()),
            "top" => Ok(GrammarExpr::top()),
            "reify" => {
                p.expect(Tok::LParen)?;
                let pred = p.ident("predicate name")?;
                p.expect(Tok::RParen)?;
                Ok(GrammarExpr::Reify(pred))
            }
            _ => Ok(GrammarExpr::nt(name.clone())),
        },
        Tok::Amp => {
            p.expect(Tok::LBrace)?;
            let mut branches = Vec::new();
            if !matches!(p.peek(), Some(Tok::RBrace)) {
                loop {
                    let tag = p.ident("product tag")?;
                    p.expect(Tok::Colon)?;
                    branches.push((tag, parse_expr(p)?));
                    if matches!(p.peek(), Some(Tok::Comma)) {
                        p.next("','")?;
                    } else {
                        break;
                    }
                }
            }
            p.expect(Tok::RBrace)?;
            Ok(GrammarExpr::AndN(branches))
        }
        Tok::LParen => {
            let e = parse_expr(p)?;
            p.expect(Tok::RParen)?;
            Ok(e)
        }
        other => Err(err(
            line,
            format!("expected an expression, found {}", other.describe()),
        )),
    }
}

/// Parses one expression on its own (no declarations), for callers that
/// take a grammar on the command line rather than from a file.
pub fn parse_expr_text(src: &str) -> Result<GrammarExpr, TextError> {
    let toks = lex(1, strip_comment(src))?;
    let mut p = Cursor { toks: &toks, pos: 0, line: 1 };
    let e = parse_expr(&mut p)?;
    if let Some(t) = p.peek() {
        return Err(err(1, format!("trailing input starting at {}", t.describe())));
    }
    Ok(e)
}

/// Parses a whole grammar file. The alphabet line must come before any
/// definition, and each nonterminal may be defined once.
pub fn parse_grammar_text(src: &str) -> Result<GrammarEnv, TextError> {
    let mut env: Option<GrammarEnv> = None;
    for (idx, raw) in src.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some((name_part, body_part)) = line.split_once("::=") {
            let name = name_part.trim();
            if !is_ident(name) {
                return Err(err(line_no, format!("bad nonterminal name {name:?}")));
            }
            let env = env
                .as_mut()
                .ok_or_else(|| err(line_no, "the alphabet line must come first"))?;
            if env.lookup(name).is_some() {
                return Err(err(line_no, format!("nonterminal {name:?} defined twice")));
            }
            let toks = lex(line_no, body_part)?;
            let mut p = Cursor { toks: &toks, pos: 0, line: line_no };
            let body = parse_expr(&mut p)?;
            if let Some(t) = p.peek() {
                return Err(err(
                    line_no,
                    format!("trailing input starting at {}", t.describe()),
                ));
            }
            env.define(name, body);
        } else {
            let mut words = line.split_whitespace();
            match words.next() {
                Some("alphabet") => {
                    if env.is_some() {
                        return Err(err(line_no, "a second alphabet line"));
                    }
                    let symbols: Vec<&str> = words.collect();
                    if symbols.is_empty() {
                        return Err(err(line_no, "the alphabet line needs at least one token"));
                    }
                    let alphabet = Alphabet::new(symbols)
                        .map_err(|e| err(line_no, e.to_string()))?;
                    env = Some(GrammarEnv::new(alphabet));
                }
                _ => {
                    return Err(err(
                        line_no,
                        "expected 'alphabet ...' or 'Name ::= expression'",
                    ))
                }
            }
        }
    }
    env.ok_or_else(|| err(1, "no alphabet line found"))
}

/// Writes the environment in the same format `parse_grammar_text` reads.
pub fn print_grammar_text(env: &GrammarEnv) -> String {
    let mut out = String::from("alphabet");
    for t in env.alphabet.symbols() {
        out.push(' ');
        out.push_str(t);
    }
    out.push('\n');
    for (name, body) in env.defs() {
        out.push_str(&format!("{name} ::= {body}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyck::dyck_env;
    use crate::expr::exp_env;

    fn assert_same_defs(a: &GrammarEnv, b: &GrammarEnv) {
        assert_eq!(
            a.alphabet.symbols(),
            b.alphabet.symbols(),
            "alphabets differ"
        );
        let da: Vec<_> = a.defs().collect();
        let db: Vec<_> = b.defs().collect();
        assert_eq!(da, db, "definitions differ");
    }

    #[test]
    fn reads_a_small_file_with_comments() {
        let src = "\
# a star over 'a', written out as a fixpoint
alphabet a b

A ::= |nil: eps |cons: 'a' A   # the star itself
B ::= A 'b'
";
        let env = parse_grammar_text(src).unwrap();
        assert!(crate::grammar::validate_env(&env).is_valid());
        assert_eq!(env.first_def().unwrap(), "A");
        assert_eq!(
            env.lookup("B").unwrap(),
            &GrammarExpr::tensor(GrammarExpr::nt("A"), GrammarExpr::lit("b"))
        );
    }

    #[test]
    fn round_trips_the_builtin_environments() {
        for env in [dyck_env(), exp_env()] {
            let text = print_grammar_text(&env);
            let back = parse_grammar_text(&text).unwrap();
            assert_same_defs(&env, &back);
        }
    }

    #[test]
    fn round_trips_products_parens_and_reify() {
        let src = "\
alphabet a b
X ::= &{left: 'a' top, right: top 'a'}
Y ::= ('a' 'b') ('a' 'b')
Z ::= |go: reify(oddLength) |stop: empty
";
        let env = parse_grammar_text(src).unwrap();
        assert_eq!(
            env.lookup("Y").unwrap(),
            &GrammarExpr::tensor(
                GrammarExpr::tensor(GrammarExpr::lit("a"), GrammarExpr::lit("b")),
                GrammarExpr::tensor(GrammarExpr::lit("a"), GrammarExpr::lit("b")),
            )
        );
        let text = print_grammar_text(&env);
        let back = parse_grammar_text(&text).unwrap();
        assert_same_defs(&env, &back);
    }

    #[test]
    fn rejects_malformed_input_with_line_numbers() {
        let cases = [
            ("X ::= 'a'", "alphabet line must come first"),
            ("alphabet a\nalphabet b", "second alphabet"),
            ("alphabet a\nX ::= 'a\n", "unterminated"),
            ("alphabet a\nX ::= 'a'\nX ::= eps", "defined twice"),
            ("alphabet a\nX ::= 'a' )", "trailing input"),
            ("alphabet a\nX ::= |x 'a'", "expected ':'"),
            ("alphabet a\nwhat is this", "expected 'alphabet"),
            ("", "no alphabet line"),
            ("alphabet a\nX ::= 'a' @", "unexpected character"),
        ];
        for (src, needle) in cases {
            let e = parse_grammar_text(src).unwrap_err();
            assert!(
                e.to_string().contains(needle),
                "error {e:?} should mention {needle:?} for {src:?}"
            );
        }
        let e = parse_grammar_text("alphabet a\nX ::= 'a'\nY ::= eps")
            .map(|env| parse_grammar_text(&print_grammar_text(&env)))
            .unwrap()
            .unwrap();
        assert_eq!(e.defs().count(), 2);
    }

    #[test]
    fn expression_parser_handles_bare_expressions() {
        assert_eq!(
            parse_expr_text("|inl: 'a' 'b' |inr: eps").unwrap(),
            GrammarExpr::union2(
                GrammarExpr::tensor(GrammarExpr::lit("a"), GrammarExpr::lit("b")),
                GrammarExpr::Eps
            )
        );
        assert_eq!(parse_expr_text("top").unwrap(), GrammarExpr::top());
        assert!(parse_expr_text("'a' |x: eps").is_err());
    }
}
