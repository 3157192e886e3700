//! The acceptance suite: nine exact, desk-scale checks that gate a release.
//! Each test prints one `criterion N: PASS/FAIL` line (visible with
//! `--nocapture`) and fails loudly on the first discrepancy. Everything here
//! is a discrete equality — no tolerances anywhere.

use std::collections::BTreeSet;

use lambekd::alphabet::{display_word, Alphabet, Token};
use lambekd::dfa::{
    determinize, d_to_n, dfa_parser, dfa_trace_env, enumerate_dfa_traces, n_to_d, parse_d,
    print_d, Dfa,
};
use lambekd::dyck::{
    balanced, dyck_env, dyck_to_trace, parse_tree_to_dyck_tree, run_counter, trace_to_dyck,
};
use lambekd::expr::{
    exp_env, exp_reference, exp_to_machine, machine_to_exp, parse_exp, parse_tree_to_exp_tree,
    replay, AtomTree, ExpTree, ExpVerdict,
};
use lambekd::grammar::{GrammarEnv, GrammarExpr};
use lambekd::nfa::{enumerate_traces, fixture_nfa, regex_trace_equiv, thompson_with_layout, NfaTrace};
use lambekd::oracle::{
    check_disjoint, check_language_equal, check_parser, check_strong_equiv, check_unambiguous,
    count_parses, distribute, enumerate_parses, internalize, string_grammar, undistribute,
};
use lambekd::regex::{parse_regex_text, regex_to_grammar, Regex};
use lambekd::tree::ParseTree;

/// The shared regular-expression suite every machine-level criterion runs on.
const SUITE: [&str; 6] = [
    "('a'* 'b')|'c'",
    "'a'|'a'",
    "('a' 'a')*",
    "'a'* 'a'*",
    "eps",
    "empty",
];

fn abc() -> Alphabet {
    Alphabet::new(["a", "b", "c"]).unwrap()
}

fn suite_regexes() -> Vec<Regex> {
    SUITE.iter().map(|s| parse_regex_text(s).unwrap()).collect()
}

/// An environment holding a regex's translation (its star fixpoints plus the
/// root) over the full three-letter alphabet.
fn suite_env(re: &Regex) -> (GrammarEnv, GrammarExpr) {
    let rg = regex_to_grammar(re);
    let mut env = GrammarEnv::new(abc());
    for (name, body) in rg.defs {
        env.define(name, body);
    }
    (env, rg.root)
}

fn conclude(n: usize, what: &str, result: Result<(), String>) {
    match result {
        Ok(()) => println!("criterion {n}: PASS - {what}"),
        Err(msg) => {
            println!("criterion {n}: FAIL - {what}: {msg}");
            panic!("criterion {n} failed: {msg}");
        }
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

#[test]
fn criterion_1_worked_examples() {
    conclude(1, "the two fixed worked examples and the fixture machine run", (|| {
        let env = GrammarEnv::new(abc());
        let word: Vec<Token> = vec!["a".into(), "b".into()];

        // "ab" against ('a' 'b')|'c': exactly one parse, the left injection
        // of the literal pair.
        let finite = GrammarExpr::union2(
            GrammarExpr::tensor(GrammarExpr::lit("a"), GrammarExpr::lit("b")),
            GrammarExpr::lit("c"),
        );
        let parses = enumerate_parses(&env, &finite, &word).map_err(|e| e.to_string())?;
        let expected = ParseTree::inj(
            "inl",
            ParseTree::pair(1, ParseTree::lit("a"), ParseTree::lit("b")),
        );
        ensure(parses == vec![expected], || {
            format!("finite grammar parses of \"ab\" were {parses:?}")
        })?;

        // "ab" against ('a'* 'b')|'c': exactly one parse, a one-element star
        // list paired with the literal b.
        let (env2, root) = suite_env(&parse_regex_text(SUITE[0]).unwrap());
        let parses = enumerate_parses(&env2, &root, &word).map_err(|e| e.to_string())?;
        let star_one = ParseTree::roll(
            "star0",
            ParseTree::inj(
                "cons",
                ParseTree::pair(
                    1,
                    ParseTree::lit("a"),
                    ParseTree::roll("star0", ParseTree::inj("nil", ParseTree::EpsLeaf)),
                ),
            ),
        );
        let expected = ParseTree::inj("inl", ParseTree::pair(1, star_one, ParseTree::lit("b")));
        ensure(parses == vec![expected], || {
            format!("star grammar parses of \"ab\" were {parses:?}")
        })?;

        // "ab" from state 0 of the fixture machine: exactly one trace — the
        // silent hop into the loop state, an a-loop, the b-exit, stop.
        let n = fixture_nfa();
        let traces = enumerate_traces(&n, 0, &word).map_err(|e| e.to_string())?;
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
        ensure(traces == vec![expected], || {
            format!("fixture traces for \"ab\" were {traces:?}")
        })
    })());
}

#[test]
fn criterion_2_regex_machine_strong_equivalence() {
    conclude(2, "parse counts equal trace counts and both translations round-trip, suite at 5", (|| {
        let alphabet = abc();
        for (text, re) in SUITE.iter().zip(suite_regexes()) {
            let eq = regex_trace_equiv(&re, &alphabet, "t");
            for w in alphabet.words_up_to(5) {
                let parses = count_parses(&eq.env, &eq.regex_root, &w).map_err(|e| e.to_string())?;
                let traces = count_parses(&eq.env, &eq.trace_root, &w).map_err(|e| e.to_string())?;
                ensure(parses == traces, || {
                    format!(
                        "{text}: word {:?} has {parses} parses but {traces} traces",
                        display_word(&w)
                    )
                })?;
            }
            let report = check_strong_equiv(&eq.env, &eq.to_trace, &eq.from_trace, 5)
                .map_err(|e| e.to_string())?;
            ensure(report.passed(), || {
                format!("{text}: round trips are not the identity: {:?}", report.status)
            })?;
        }
        Ok(())
    })());
}

/// Counts machine runs for `w` from `s` by brute force over the transition
/// table, independently of `parse_d`.
fn search_traces(d: &Dfa, s: usize, w: &[Token]) -> usize {
    match w.split_first() {
        None => 1,
        Some((tok, rest)) => {
            let mut total = 0;
            for (rank, sym) in d.alphabet.symbols().iter().enumerate() {
                if sym == tok {
                    total += search_traces(d, d.delta[s][rank], rest);
                }
            }
            total
        }
    }
}

#[test]
fn criterion_3_determinization_preserves_the_language() {
    conclude(3, "machine language agreement at 6, run uniqueness, and lossless run translation", (|| {
        let alphabet = abc();
        for (text, re) in SUITE.iter().zip(suite_regexes()) {
            let (nfa, _) = thompson_with_layout(&re, &alphabet);
            let d = determinize(&nfa, false).map_err(|e| e.to_string())?;
            for w in alphabet.words_up_to(6) {
                let nfa_accepts =
                    !enumerate_traces(&nfa, nfa.init, &w).map_err(|e| e.to_string())?.is_empty();
                let dtr = parse_d(&d, d.init, &w).map_err(|e| e.to_string())?;
                let dfa_accepts = dtr.accept_in(&d);
                ensure(nfa_accepts == dfa_accepts, || {
                    format!(
                        "{text}: word {:?}: one machine accepts, the other rejects",
                        display_word(&w)
                    )
                })?;
                if dfa_accepts {
                    let (start, up) = d_to_n(&nfa, &d, &dtr).map_err(|e| e.to_string())?;
                    ensure(up.yield_in(&nfa) == w, || {
                        format!("{text}: lifted run changed the word {:?}", display_word(&w))
                    })?;
                    ensure(up.start_state(&nfa) == start, || {
                        format!("{text}: lifted run does not start where claimed")
                    })?;
                    let back = n_to_d(&nfa, &d, &up, d.init).map_err(|e| e.to_string())?;
                    ensure(back == dtr, || {
                        format!(
                            "{text}: projecting the lifted run back changed it on {:?}",
                            display_word(&w)
                        )
                    })?;
                }
            }
            if d.n_states <= 6 {
                for s in 0..d.n_states {
                    for w in d.alphabet.words_up_to(6) {
                        let found = search_traces(&d, s, &w);
                        ensure(found == 1, || {
                            format!(
                                "{text}: state {s}, word {:?}: {found} runs instead of one",
                                display_word(&w)
                            )
                        })?;
                    }
                }
            }
        }
        Ok(())
    })());
}

#[test]
fn criterion_4_machine_runs_and_words_are_interchangeable() {
    conclude(4, "run/word round trips at 8 and an unambiguous run grammar", (|| {
        for (text, re) in SUITE.iter().zip(suite_regexes()) {
            let (nfa, _) = thompson_with_layout(&re, &abc());
            let d = determinize(&nfa, false).map_err(|e| e.to_string())?;
            for s in 0..d.n_states {
                for tr in enumerate_dfa_traces(&d, s, 8) {
                    let again = parse_d(&d, s, &print_d(&tr)).map_err(|e| e.to_string())?;
                    ensure(again == tr, || {
                        format!("{text}: reading a printed run back changed it")
                    })?;
                }
                for w in d.alphabet.words_up_to(8) {
                    let tr = parse_d(&d, s, &w).map_err(|e| e.to_string())?;
                    ensure(print_d(&tr) == w, || {
                        format!("{text}: printing a parsed run changed {:?}", display_word(&w))
                    })?;
                }
            }
            // The per-state run family, summed over accept/reject, is an
            // unambiguous grammar whose two halves never overlap: that is
            // exactly the parser contract, which check_parser re-audits.
            let trace_env = dfa_trace_env(&d, "q");
            let wrapper = GrammarExpr::nt(format!("q{}", d.init));
            let report =
                check_unambiguous(&trace_env, &wrapper, 6).map_err(|e| e.to_string())?;
            ensure(report.passed(), || {
                format!("{text}: run grammar is ambiguous: {:?}", report.status)
            })?;
            let accept = GrammarExpr::nt(format!("q{}t", d.init));
            let reject = GrammarExpr::nt(format!("q{}f", d.init));
            let report =
                check_disjoint(&trace_env, &accept, &reject, 6).map_err(|e| e.to_string())?;
            ensure(report.passed(), || {
                format!("{text}: accepting and rejecting runs overlap: {:?}", report.status)
            })?;
            let (parser_env, parser) = dfa_parser(&d, "q");
            let report = check_parser(&parser_env, &parser, 4).map_err(|e| e.to_string())?;
            ensure(report.passed(), || {
                format!("{text}: machine parser fails its audit: {:?}", report.status)
            })?;
        }
        Ok(())
    })());
}

#[test]
fn criterion_5_dyck_matches_the_counter_machine() {
    conclude(5, "balanced-parenthesis membership at 12, inverse translations at 10, unambiguity at 10", (|| {
        let env = dyck_env();
        let root = GrammarExpr::nt("Dyck");
        for w in env.alphabet.words_up_to(12) {
            let parses = count_parses(&env, &root, &w).map_err(|e| e.to_string())?;
            ensure((parses > 0) == balanced(&w), || {
                format!(
                    "word {:?}: grammar says {parses} parses, oracle says {}",
                    display_word(&w),
                    balanced(&w)
                )
            })?;
        }
        for w in env.alphabet.words_up_to(10) {
            for p in enumerate_parses(&env, &root, &w).map_err(|e| e.to_string())? {
                let t = parse_tree_to_dyck_tree(&p).map_err(|e| e.to_string())?;
                let tr = dyck_to_trace(&t);
                ensure(tr.yield_of() == w, || {
                    format!("dyck_to_trace changed the word {:?}", display_word(&w))
                })?;
                let back = trace_to_dyck(&tr).map_err(|e| e.to_string())?;
                ensure(back == t, || {
                    format!("tree -> run -> tree is not the identity on {:?}", display_word(&w))
                })?;
            }
            let tr = run_counter(&w).map_err(|e| e.to_string())?;
            if tr.accept() {
                let t = trace_to_dyck(&tr).map_err(|e| e.to_string())?;
                let back = dyck_to_trace(&t);
                ensure(back == tr, || {
                    format!("run -> tree -> run is not the identity on {:?}", display_word(&w))
                })?;
            }
        }
        let report = check_unambiguous(&env, &root, 10).map_err(|e| e.to_string())?;
        ensure(report.passed(), || format!("Dyck is ambiguous: {:?}", report.status))
    })());
}

#[test]
fn criterion_6_expressions_match_recursive_descent() {
    conclude(6, "expression membership at 7, inverse translations at 7, right-nested addition, unambiguity at 7", (|| {
        let env = exp_env();
        let root = GrammarExpr::nt("Exp");
        for w in env.alphabet.words_up_to(7) {
            let parses = count_parses(&env, &root, &w).map_err(|e| e.to_string())?;
            ensure((parses > 0) == exp_reference(&w), || {
                format!(
                    "word {:?}: grammar says {parses} parses, reference says {}",
                    display_word(&w),
                    exp_reference(&w)
                )
            })?;
            for p in enumerate_parses(&env, &root, &w).map_err(|e| e.to_string())? {
                let t = parse_tree_to_exp_tree(&p).map_err(|e| e.to_string())?;
                let run = exp_to_machine(&t);
                ensure(replay(&run, &w) == Ok(true), || {
                    format!("exp_to_machine broke the run for {:?}", display_word(&w))
                })?;
                let back = machine_to_exp(&run).map_err(|e| e.to_string())?;
                ensure(back == t, || {
                    format!("tree -> run -> tree is not the identity on {:?}", display_word(&w))
                })?;
            }
        }
        let word: Vec<Token> = vec!["NUM".into(), "+".into(), "NUM".into(), "+".into(), "NUM".into()];
        let verdict = parse_exp(&word).map_err(|e| e.to_string())?;
        let expected = ExpTree::EAdd(
            AtomTree::ANum,
            Box::new(ExpTree::EAdd(AtomTree::ANum, Box::new(ExpTree::EDone(AtomTree::ANum)))),
        );
        ensure(verdict == ExpVerdict::Accept(expected), || {
            format!("NUM+NUM+NUM parsed as {verdict:?}")
        })?;
        let report = check_unambiguous(&env, &root, 7).map_err(|e| e.to_string())?;
        ensure(report.passed(), || format!("Exp is ambiguous: {:?}", report.status))
    })());
}

#[test]
fn criterion_7_transformers_preserve_yields() {
    conclude(7, "every shipped tree transformer keeps the word intact on all enumerated inputs", (|| {
        let alphabet = abc();
        for (text, re) in SUITE.iter().zip(suite_regexes()) {
            let eq = regex_trace_equiv(&re, &alphabet, "t");
            for w in alphabet.words_up_to(5) {
                for t in enumerate_parses(&eq.env, &eq.regex_root, &w).map_err(|e| e.to_string())? {
                    let out = eq.to_trace.apply(&t);
                    ensure(out.yield_of() == Ok(w.clone()), || {
                        format!(
                            "{}: transformer {} changed the word {:?}",
                            text,
                            eq.to_trace.name,
                            display_word(&w)
                        )
                    })?;
                }
                for t in enumerate_parses(&eq.env, &eq.trace_root, &w).map_err(|e| e.to_string())? {
                    let out = eq.from_trace.apply(&t);
                    ensure(out.yield_of() == Ok(w.clone()), || {
                        format!(
                            "{}: transformer {} changed the word {:?}",
                            text,
                            eq.from_trace.name,
                            display_word(&w)
                        )
                    })?;
                }
            }
        }
        // The typed translators of the two built-in languages, at their
        // stated bounds.
        let env = dyck_env();
        let root = GrammarExpr::nt("Dyck");
        for w in env.alphabet.words_up_to(10) {
            for p in enumerate_parses(&env, &root, &w).map_err(|e| e.to_string())? {
                let t = parse_tree_to_dyck_tree(&p).map_err(|e| e.to_string())?;
                ensure(dyck_to_trace(&t).yield_of() == w, || {
                    format!("transformer dyck_to_trace changed the word {:?}", display_word(&w))
                })?;
            }
        }
        let env = exp_env();
        let root = GrammarExpr::nt("Exp");
        for w in env.alphabet.words_up_to(7) {
            for p in enumerate_parses(&env, &root, &w).map_err(|e| e.to_string())? {
                let t = parse_tree_to_exp_tree(&p).map_err(|e| e.to_string())?;
                ensure(replay(&exp_to_machine(&t), &w) == Ok(true), || {
                    format!("transformer exp_to_machine changed the word {:?}", display_word(&w))
                })?;
            }
        }
        Ok(())
    })());
}

#[test]
fn criterion_8_structural_laws() {
    conclude(8, "choice extraction round-trips, injections stay disjoint, String reads every word once, words are singleton grammars", (|| {
        let env = GrammarEnv::new(Alphabet::new(["a", "b"]).unwrap());

        // A two-entry product of two-branch sums: pulling the branch choices
        // out and pushing them back is the identity, and the parse sets on
        // both sides of the exchange have the same size.
        let entry = |base: GrammarExpr| {
            GrammarExpr::sum(vec![
                ("l", base.clone()),
                ("r", GrammarExpr::tensor(base, GrammarExpr::Eps)),
            ])
        };
        let x = entry(GrammarExpr::lit("a"));
        let y = entry(GrammarExpr::AndN(Vec::new()));
        let both = GrammarExpr::AndN(vec![("x".into(), x.clone()), ("y".into(), y.clone())]);
        for w in env.alphabet.words_up_to(4) {
            let parses = enumerate_parses(&env, &both, &w).map_err(|e| e.to_string())?;
            let mut seen = BTreeSet::new();
            for t in &parses {
                let (choice, stripped) = distribute(t).map_err(|e| e.to_string())?;
                let back = undistribute(&choice, &stripped).map_err(|e| e.to_string())?;
                ensure(&back == t, || {
                    format!("distribute then undistribute changed a parse of {:?}", display_word(&w))
                })?;
                seen.insert(format!("{choice:?}|{}", stripped.to_json()));
            }
            // The exchange is injective: distinct parses map to distinct
            // (choice, tuple) pairs.
            ensure(seen.len() == parses.len(), || {
                format!("distribute collapsed parses of {:?}", display_word(&w))
            })?;
            // Count agreement with the distributed form, summed over all
            // four choice functions.
            let mut distributed = 0;
            for cx in ["l", "r"] {
                for cy in ["l", "r"] {
                    let pick = |g: &GrammarExpr, c: &str| match g {
                        GrammarExpr::SumN(bs) => {
                            bs.iter().find(|(t2, _)| t2 == c).unwrap().1.clone()
                        }
                        _ => unreachable!(),
                    };
                    let g = GrammarExpr::AndN(vec![
                        ("x".into(), pick(&x, cx)),
                        ("y".into(), pick(&y, cy)),
                    ]);
                    distributed += count_parses(&env, &g, &w).map_err(|e| e.to_string())?;
                }
            }
            ensure(distributed == parses.len(), || {
                format!(
                    "distributed form has {distributed} parses, product-of-sums has {} on {:?}",
                    parses.len(),
                    display_word(&w)
                )
            })?;
        }

        // Injection tags partition a sum's parse set: the branch counts add
        // up, and trees from different branches are never equal.
        let ambiguous = GrammarExpr::union2(GrammarExpr::lit("a"), GrammarExpr::lit("a"));
        for w in env.alphabet.words_up_to(3) {
            let whole = enumerate_parses(&env, &ambiguous, &w).map_err(|e| e.to_string())?;
            let left = count_parses(&env, &GrammarExpr::lit("a"), &w).map_err(|e| e.to_string())?;
            ensure(whole.len() == 2 * left, || {
                format!("branch counts do not add up on {:?}", display_word(&w))
            })?;
            let distinct: BTreeSet<String> = whole.iter().map(|t| t.to_json().to_string()).collect();
            ensure(distinct.len() == whole.len(), || {
                format!("two injections collided on {:?}", display_word(&w))
            })?;
        }
        ensure(
            ParseTree::inj("inl", ParseTree::lit("a")) != ParseTree::inj("inr", ParseTree::lit("a")),
            || "differently tagged injections compared equal".into(),
        )?;

        // String over a three-letter alphabet: exactly one parse per word,
        // and the same language as the anything-goes grammar.
        let mut senv = GrammarEnv::new(abc());
        string_grammar(&mut senv);
        let string = GrammarExpr::nt("String");
        let report = check_unambiguous(&senv, &string, 8).map_err(|e| e.to_string())?;
        ensure(report.passed(), || format!("String is ambiguous: {:?}", report.status))?;
        let report = check_language_equal(&senv, &string, &GrammarExpr::AndN(Vec::new()), 8)
            .map_err(|e| e.to_string())?;
        ensure(report.passed(), || {
            format!("String and the top grammar disagree: {:?}", report.status)
        })?;

        // Every word, read as a grammar, parses itself exactly once and
        // everything else not at all.
        let wenv = GrammarEnv::new(abc());
        let words = wenv.alphabet.words_up_to(5);
        for w in &words {
            let g = internalize(w);
            for v in &words {
                let n = count_parses(&wenv, &g, v).map_err(|e| e.to_string())?;
                ensure(n == usize::from(v == w), || {
                    format!(
                        "word grammar {:?} has {n} parses of {:?}",
                        display_word(w),
                        display_word(v)
                    )
                })?;
            }
        }
        Ok(())
    })());
}

#[test]
fn criterion_9_cli_accepts_exactly_the_members() {
    conclude(9, "the end-to-end pipeline's exit codes match semantic membership, suite at 6", (|| {
        let alphabet = abc();
        for (text, re) in SUITE.iter().zip(suite_regexes()) {
            let (env, root) = suite_env(&re);
            let _ = text;
            for w in alphabet.words_up_to(6) {
                let member = count_parses(&env, &root, &w).map_err(|e| e.to_string())? > 0;
                let input = w.concat();
                let mut out = Vec::new();
                let mut err = Vec::new();
                let code = lambekd_cli::run(
                    ["lambekd", "parse-regex", text, &input],
                    &mut out,
                    &mut err,
                );
                let expected = if member { 0 } else { 1 };
                ensure(code == expected, || {
                    format!(
                        "{text}: word {:?}: exit {code}, membership {member} (stderr: {})",
                        display_word(&w),
                        String::from_utf8_lossy(&err)
                    )
                })?;
            }
        }
        Ok(())
    })());
}
