//! Command-line surface for the grammar toolkit: compile regular expressions
//! to machines, run words through the verified pipeline, parse with the
//! built-in automata, enumerate parse forests, and run the brute-force
//! equivalence checkers.
//!
//! Everything is written as a library function over injected output streams so
//! the binary stays a one-liner and tests can run commands in process. The
//! exit-code contract is: 0 accept/pass, 1 reject/fail, 2 usage or
//! configuration error. All diagnostics go to the error stream; stdout carries
//! exactly the JSON documents.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser as ClapParser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use lambekd::alphabet::{display_word, Alphabet};
use lambekd::dfa::{determinize, d_to_n, parse_d};
use lambekd::dyck::{parse_dyck, DyckVerdict};
use lambekd::expr::{exp_alphabet, parse_exp, trace_json, ExpVerdict};
use lambekd::grammar::{validate_env, GrammarEnv, GrammarExpr};
use lambekd::nfa::{
    regex_trace_equiv, shortest_eps_path, thompson_with_layout, trace_to_regex_parse, NfaTrace,
};
use lambekd::oracle::{
    check_disjoint, check_language_equal, check_strong_equiv, check_unambiguous, enumerate_parses,
};
use lambekd::regex::{parse_regex_text, regex_to_grammar, Regex};
use lambekd::textfmt::parse_grammar_text;
use lambekd::Token;

#[derive(ClapParser)]
#[command(
    name = "lambekd",
    version,
    about = "Grammar toolkit: regex pipeline, built-in automata, parse enumeration, equivalence checks",
    long_about = None,
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one word through regex -> NFA -> DFA -> trace -> regex parse tree
    ///
    /// Prints {"verdict":"accept","tree":...} and exits 0, or
    /// {"verdict":"reject","trace":...} with the rejecting machine run and
    /// exits 1. The machine alphabet is the regex's literals plus every token
    /// of the input word, so foreign tokens reject instead of erroring.
    ParseRegex {
        /// Regex text, e.g. "('a'* 'b')|'c'"
        regex: String,
        /// Input word; raw characters unless --tokens
        input: String,
        /// Split the input on whitespace instead of into characters
        #[arg(long)]
        tokens: bool,
        /// Indent the JSON output
        #[arg(long)]
        pretty: bool,
        /// Determinize over every closed subset instead of reachable ones
        #[arg(long)]
        full_powerset: bool,
    },
    /// Compile a regex to a machine and print its JSON
    Compile {
        /// Regex text
        regex: String,
        /// Which machine to emit
        #[arg(long, value_enum, default_value_t = Stage::Dfa)]
        stage: Stage,
        /// Indent the JSON output
        #[arg(long)]
        pretty: bool,
        /// Determinize over every closed subset instead of reachable ones
        #[arg(long)]
        full_powerset: bool,
    },
    /// Run a brute-force checker and print its report
    ///
    /// Grammars come from FILE arguments in the grammar text format, or from
    /// --regex. With one file, unambig checks --start (default: the first
    /// definition) and two-sided checks compare --left and --right (default:
    /// the first two definitions). With two files, the sides are the files'
    /// --left/--right (default: first) definitions; the files must declare
    /// the same alphabet. strong-equiv takes --regex only and checks that the
    /// regex's parses and its machine traces convert back and forth without
    /// loss. Exits 0 on pass, 1 on fail (with a counterexample in the
    /// report), 2 on usage errors.
    Check {
        /// Which property to check
        #[arg(value_enum)]
        kind: CheckKind,
        /// Grammar file
        file: Option<PathBuf>,
        /// Second grammar file (two-sided checks)
        file2: Option<PathBuf>,
        /// Check every word up to this length
        #[arg(long, default_value_t = 6)]
        max_len: usize,
        /// Nonterminal to check (unambig; default: first definition)
        #[arg(long)]
        start: Option<String>,
        /// Left-hand nonterminal (two-sided checks)
        #[arg(long)]
        left: Option<String>,
        /// Right-hand nonterminal (two-sided checks)
        #[arg(long)]
        right: Option<String>,
        /// Regex text as the grammar source instead of a file
        #[arg(long)]
        regex: Option<String>,
        /// Indent the JSON output
        #[arg(long)]
        pretty: bool,
    },
    /// Parse with a built-in automaton and print the tree or rejecting run
    Parse {
        /// Which built-in language
        #[arg(value_enum)]
        builtin: Builtin,
        /// Input word; dyck reads raw characters, expr lexes greedily
        input: String,
        /// Split the input on whitespace instead
        #[arg(long)]
        tokens: bool,
        /// Indent the JSON output
        #[arg(long)]
        pretty: bool,
    },
    /// Enumerate parsed words and their parse forests, one JSON line each
    ///
    /// Walks every word over the grammar's alphabet up to --max-len in
    /// shortlex order and prints {"word","count","trees"} for each word with
    /// at least one parse. Words the grammar rejects are skipped, so an empty
    /// language prints nothing.
    Enumerate {
        /// Grammar file
        file: Option<PathBuf>,
        /// Nonterminal to enumerate (default: the first definition)
        nonterminal: Option<String>,
        /// Enumerate every word up to this length
        #[arg(long, default_value_t = 6)]
        max_len: usize,
        /// Regex text as the grammar source instead of a file
        #[arg(long)]
        regex: Option<String>,
        /// Indent the JSON output
        #[arg(long)]
        pretty: bool,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Stage {
    Nfa,
    Dfa,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CheckKind {
    Unambig,
    Disjoint,
    LangEqual,
    StrongEquiv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Builtin {
    Dyck,
    Expr,
}

/// Runs one invocation. `args` includes the program name, as in
/// `std::env::args`. Returns the process exit code; diagnostics are written
/// to `err`, JSON results to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            let code = e.exit_code();
            if code == 0 {
                let _ = write!(out, "{rendered}");
            } else {
                let _ = write!(err, "{rendered}");
            }
            return code;
        }
    };
    match cli.cmd {
        Cmd::ParseRegex {
            regex,
            input,
            tokens,
            pretty,
            full_powerset,
        } => cmd_parse_regex(&regex, &input, tokens, pretty, full_powerset, out, err),
        Cmd::Compile {
            regex,
            stage,
            pretty,
            full_powerset,
        } => cmd_compile(&regex, stage, pretty, full_powerset, out, err),
        Cmd::Check {
            kind,
            file,
            file2,
            max_len,
            start,
            left,
            right,
            regex,
            pretty,
        } => {
            let args = CheckArgs {
                kind,
                file,
                file2,
                max_len,
                start,
                left,
                right,
                regex,
                pretty,
            };
            cmd_check(&args, out, err)
        }
        Cmd::Parse {
            builtin,
            input,
            tokens,
            pretty,
        } => cmd_parse(builtin, &input, tokens, pretty, out, err),
        Cmd::Enumerate {
            file,
            nonterminal,
            max_len,
            regex,
            pretty,
        } => cmd_enumerate(
            file.as_deref(),
            nonterminal.as_deref(),
            max_len,
            regex.as_deref(),
            pretty,
            out,
            err,
        ),
    }
}

fn emit(out: &mut dyn Write, v: &Value, pretty: bool) {
    let text = if pretty {
        serde_json::to_string_pretty(v).expect("json values serialize")
    } else {
        serde_json::to_string(v).expect("json values serialize")
    };
    let _ = writeln!(out, "{text}");
}

fn fail(err: &mut dyn Write, msg: impl std::fmt::Display) -> i32 {
    let _ = writeln!(err, "error: {msg}");
    2
}

/// One token per non-whitespace character.
fn split_raw(input: &str) -> Vec<Token> {
    input
        .chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| c.to_string())
        .collect()
}

fn split_ws(input: &str) -> Vec<Token> {
    input.split_whitespace().map(|s| s.to_string()).collect()
}

/// Greedy longest-match lexing against a fixed alphabet, skipping whitespace.
fn lex_greedy(alphabet: &Alphabet, input: &str) -> Result<Vec<Token>, String> {
    let mut toks = Vec::new();
    let mut rest = input.trim_start();
    while !rest.is_empty() {
        let best = alphabet
            .symbols()
            .iter()
            .filter(|sym| rest.starts_with(sym.as_str()))
            .max_by_key(|sym| sym.len());
        match best {
            Some(sym) => {
                toks.push(sym.clone());
                rest = rest[sym.len()..].trim_start();
            }
            None => {
                return Err(format!(
                    "cannot lex {rest:?}: no alphabet token matches (alphabet: {})",
                    alphabet
                        .symbols()
                        .iter()
                        .map(|s| format!("{s:?}"))
                        .collect::<Vec<_>>()
                        .join(" ")
                ))
            }
        }
    }
    Ok(toks)
}

fn cmd_parse_regex(
    regex: &str,
    input: &str,
    tokens: bool,
    pretty: bool,
    full_powerset: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let re = match parse_regex_text(regex) {
        Ok(re) => re,
        Err(e) => return fail(err, e),
    };
    let word = if tokens {
        split_ws(input)
    } else {
        split_raw(input)
    };
    // Widen the alphabet with the word's own tokens so a word outside the
    // regex's alphabet is rejected by the machine rather than reported as a
    // configuration error.
    let mut symbols: BTreeSet<Token> = re.literals();
    symbols.extend(word.iter().cloned());
    let alphabet = Alphabet::new(symbols).expect("set-built alphabet has no duplicates");
    let (nfa, layout) = thompson_with_layout(&re, &alphabet);
    let dfa = match determinize(&nfa, full_powerset) {
        Ok(dfa) => dfa,
        Err(e) => return fail(err, e),
    };
    let dtrace = match parse_d(&dfa, dfa.init, &word) {
        Ok(t) => t,
        Err(e) => return fail(err, e),
    };
    if !dtrace.accept_in(&dfa) {
        emit(
            out,
            &json!({"verdict": "reject", "trace": dtrace.to_json(&dfa)}),
            pretty,
        );
        return 1;
    }
    let (start, mut up) = match d_to_n(&nfa, &dfa, &dtrace) {
        Ok(pair) => pair,
        Err(e) => return fail(err, e),
    };
    if start != nfa.init {
        let Some(path) = shortest_eps_path(&nfa, nfa.init, start) else {
            return fail(err, "internal: chosen machine run starts at an unreachable state");
        };
        for &eps in path.iter().rev() {
            up = NfaTrace::EpsCons {
                eps_transition: eps,
                rest: Box::new(up),
            };
        }
    }
    let tree = match trace_to_regex_parse(&nfa, &layout, &up) {
        Ok(tree) => tree,
        Err(e) => return fail(err, e),
    };
    emit(
        out,
        &json!({"verdict": "accept", "tree": tree.to_json()}),
        pretty,
    );
    0
}

fn cmd_compile(
    regex: &str,
    stage: Stage,
    pretty: bool,
    full_powerset: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let re = match parse_regex_text(regex) {
        Ok(re) => re,
        Err(e) => return fail(err, e),
    };
    let alphabet =
        Alphabet::new(re.literals()).expect("set-built alphabet has no duplicates");
    let (nfa, _) = thompson_with_layout(&re, &alphabet);
    match stage {
        Stage::Nfa => emit(out, &nfa.to_json(), pretty),
        Stage::Dfa => {
            let dfa = match determinize(&nfa, full_powerset) {
                Ok(dfa) => dfa,
                Err(e) => return fail(err, e),
            };
            emit(out, &dfa.to_json(), pretty);
        }
    }
    0
}

struct CheckArgs {
    kind: CheckKind,
    file: Option<PathBuf>,
    file2: Option<PathBuf>,
    max_len: usize,
    start: Option<String>,
    left: Option<String>,
    right: Option<String>,
    regex: Option<String>,
    pretty: bool,
}

fn load_env(path: &Path, err: &mut dyn Write) -> Result<GrammarEnv, i32> {
    let src = match std::fs::read_to_string(path) {
        Ok(src) => src,
        Err(e) => return Err(fail(err, format!("cannot read {}: {e}", path.display()))),
    };
    let env = match parse_grammar_text(&src) {
        Ok(env) => env,
        Err(e) => return Err(fail(err, format!("{}: {e}", path.display()))),
    };
    let report = validate_env(&env);
    if !report.is_valid() {
        for v in &report.violations {
            let _ = writeln!(err, "error: {}: {v}", path.display());
        }
        return Err(2);
    }
    Ok(env)
}

/// Builds an environment from a regex: its literals as the alphabet, its
/// star fixpoints as definitions, and the translated expression under the
/// definition name "Regex".
fn env_from_regex(re: &Regex) -> (GrammarEnv, String) {
    let alphabet =
        Alphabet::new(re.literals()).expect("set-built alphabet has no duplicates");
    let rg = regex_to_grammar(re);
    let mut env = GrammarEnv::new(alphabet);
    for (name, body) in rg.defs {
        env.define(name, body);
    }
    env.define("Regex", rg.root);
    (env, "Regex".to_string())
}

fn resolve_nt(
    env: &GrammarEnv,
    name: &str,
    err: &mut dyn Write,
) -> Result<GrammarExpr, i32> {
    if env.lookup(name).is_none() {
        return Err(fail(err, format!("nonterminal {name:?} is not defined")));
    }
    Ok(GrammarExpr::NtRef(name.to_string()))
}

fn nth_def(env: &GrammarEnv, k: usize, err: &mut dyn Write) -> Result<String, i32> {
    match env.defs().nth(k).map(|(name, _)| name.clone()) {
        Some(name) => Ok(name),
        None => Err(fail(
            err,
            format!("grammar needs at least {} definition(s)", k + 1),
        )),
    }
}

fn cmd_check(args: &CheckArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if args.regex.is_some() && args.file.is_some() {
        return fail(err, "give a grammar FILE or --regex, not both");
    }
    let report = match args.kind {
        CheckKind::StrongEquiv => {
            let Some(text) = args.regex.as_deref() else {
                return fail(err, "check strong-equiv needs --regex");
            };
            let re = match parse_regex_text(text) {
                Ok(re) => re,
                Err(e) => return fail(err, e),
            };
            let alphabet =
                Alphabet::new(re.literals()).expect("set-built alphabet has no duplicates");
            let eq = regex_trace_equiv(&re, &alphabet, "m");
            match check_strong_equiv(&eq.env, &eq.to_trace, &eq.from_trace, args.max_len) {
                Ok(report) => report,
                Err(e) => return fail(err, e),
            }
        }
        CheckKind::Unambig => {
            let (env, target) = match (&args.regex, &args.file) {
                (Some(text), None) => {
                    let re = match parse_regex_text(text) {
                        Ok(re) => re,
                        Err(e) => return fail(err, e),
                    };
                    env_from_regex(&re)
                }
                (None, Some(path)) => {
                    let env = match load_env(path, err) {
                        Ok(env) => env,
                        Err(code) => return code,
                    };
                    let name = match &args.start {
                        Some(name) => name.clone(),
                        None => match nth_def(&env, 0, err) {
                            Ok(name) => name,
                            Err(code) => return code,
                        },
                    };
                    (env, name)
                }
                _ => return fail(err, "check unambig needs a grammar FILE or --regex"),
            };
            let target = match resolve_nt(&env, &target, err) {
                Ok(g) => g,
                Err(code) => return code,
            };
            match check_unambiguous(&env, &target, args.max_len) {
                Ok(report) => report,
                Err(e) => return fail(err, e),
            }
        }
        CheckKind::Disjoint | CheckKind::LangEqual => {
            let (env, left_name, right_name) = match (&args.file, &args.file2, &args.regex) {
                (Some(f1), Some(f2), None) => {
                    let mut env = match load_env(f1, err) {
                        Ok(env) => env,
                        Err(code) => return code,
                    };
                    let env2 = match load_env(f2, err) {
                        Ok(env) => env,
                        Err(code) => return code,
                    };
                    if env.alphabet.symbols() != env2.alphabet.symbols() {
                        return fail(err, "the two grammar files must declare the same alphabet");
                    }
                    let left = match &args.left {
                        Some(name) => name.clone(),
                        None => match nth_def(&env, 0, err) {
                            Ok(name) => name,
                            Err(code) => return code,
                        },
                    };
                    let right = match &args.right {
                        Some(name) => name.clone(),
                        None => match nth_def(&env2, 0, err) {
                            Ok(name) => name,
                            Err(code) => return code,
                        },
                    };
                    if let Err(e) = env.merge(&env2) {
                        return fail(err, e);
                    }
                    (env, left, right)
                }
                (Some(f1), None, None) => {
                    let env = match load_env(f1, err) {
                        Ok(env) => env,
                        Err(code) => return code,
                    };
                    let left = match &args.left {
                        Some(name) => name.clone(),
                        None => match nth_def(&env, 0, err) {
                            Ok(name) => name,
                            Err(code) => return code,
                        },
                    };
                    let right = match &args.right {
                        Some(name) => name.clone(),
                        None => match nth_def(&env, 1, err) {
                            Ok(name) => name,
                            Err(code) => return code,
                        },
                    };
                    (env, left, right)
                }
                _ => {
                    return fail(
                        err,
                        "two-sided checks compare two nonterminals from FILE (or FILE FILE2)",
                    )
                }
            };
            let left = match resolve_nt(&env, &left_name, err) {
                Ok(g) => g,
                Err(code) => return code,
            };
            let right = match resolve_nt(&env, &right_name, err) {
                Ok(g) => g,
                Err(code) => return code,
            };
            let run = match args.kind {
                CheckKind::Disjoint => check_disjoint(&env, &left, &right, args.max_len),
                _ => check_language_equal(&env, &left, &right, args.max_len),
            };
            match run {
                Ok(report) => report,
                Err(e) => return fail(err, e),
            }
        }
    };
    emit(out, &report.to_json(), args.pretty);
    if report.passed() {
        0
    } else {
        1
    }
}

fn cmd_parse(
    builtin: Builtin,
    input: &str,
    tokens: bool,
    pretty: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    match builtin {
        Builtin::Dyck => {
            let word = if tokens {
                split_ws(input)
            } else {
                split_raw(input)
            };
            match parse_dyck(&word) {
                Ok(DyckVerdict::Accept(tree)) => {
                    emit(
                        out,
                        &json!({"verdict": "accept", "tree": tree.to_json()}),
                        pretty,
                    );
                    0
                }
                Ok(DyckVerdict::Reject(trace)) => {
                    emit(
                        out,
                        &json!({"verdict": "reject", "trace": trace.to_json()}),
                        pretty,
                    );
                    1
                }
                Err(e) => fail(err, e),
            }
        }
        Builtin::Expr => {
            let word = if tokens {
                split_ws(input)
            } else {
                match lex_greedy(&exp_alphabet(), input) {
                    Ok(word) => word,
                    Err(e) => return fail(err, e),
                }
            };
            match parse_exp(&word) {
                Ok(ExpVerdict::Accept(tree)) => {
                    emit(
                        out,
                        &json!({"verdict": "accept", "tree": tree.to_json()}),
                        pretty,
                    );
                    0
                }
                Ok(ExpVerdict::Reject(trace)) => {
                    emit(
                        out,
                        &json!({"verdict": "reject", "trace": trace_json(&trace)}),
                        pretty,
                    );
                    1
                }
                Err(e) => fail(err, e),
            }
        }
    }
}

fn cmd_enumerate(
    file: Option<&Path>,
    nonterminal: Option<&str>,
    max_len: usize,
    regex: Option<&str>,
    pretty: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let (env, target_name) = match (regex, file) {
        (Some(_), Some(_)) => return fail(err, "give a grammar FILE or --regex, not both"),
        (Some(text), None) => {
            let re = match parse_regex_text(text) {
                Ok(re) => re,
                Err(e) => return fail(err, e),
            };
            env_from_regex(&re)
        }
        (None, Some(path)) => {
            let env = match load_env(path, err) {
                Ok(env) => env,
                Err(code) => return code,
            };
            let name = match nonterminal {
                Some(name) => name.to_string(),
                None => match nth_def(&env, 0, err) {
                    Ok(name) => name,
                    Err(code) => return code,
                },
            };
            (env, name)
        }
        (None, None) => return fail(err, "enumerate needs a grammar FILE or --regex"),
    };
    let target_name = nonterminal.map(str::to_string).unwrap_or(target_name);
    let target = match resolve_nt(&env, &target_name, err) {
        Ok(g) => g,
        Err(code) => return code,
    };
    for w in env.alphabet.words_up_to(max_len) {
        let trees = match enumerate_parses(&env, &target, &w) {
            Ok(trees) => trees,
            Err(e) => return fail(err, e),
        };
        if trees.is_empty() {
            continue;
        }
        let doc = json!({
            "word": display_word(&w),
            "count": trees.len(),
            "trees": trees.iter().map(|t| t.to_json()).collect::<Vec<_>>(),
        });
        emit(out, &doc, pretty);
    }
    0
}
