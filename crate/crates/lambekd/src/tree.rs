//! Parse trees and the operations every other module leans on.
//!
//! A parse tree is evidence that a particular word belongs to a grammar. The
//! word is recoverable: `yield_of` reads it back off the leaves. Everything
//! downstream that claims to transform parses is checked against that yield,
//! so the tree shapes here carry enough bookkeeping to make the read-back
//! total on well-formed trees: a `Pair` stores how many tokens its left child
//! consumed, and a `Tuple` is only well formed when all entries agree on
//! their yield.

use crate::alphabet::Token;
use crate::grammar::{GrammarEnv, GrammarExpr};
use serde_json::{json, Value};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ParseTree {
    /// Parse of a literal; yields exactly that token.
    LitLeaf(Token),
    /// Parse of the empty word.
    EpsLeaf,
    /// Parse of a tensor. `split_len` is the yield length of `left`.
    Pair {
        split_len: usize,
        left: Box<ParseTree>,
        right: Box<ParseTree>,
    },
    /// Parse of one branch of a sum.
    Inj { tag: String, body: Box<ParseTree> },
    /// Parse of a product: one entry per branch, same yield each.
    Tuple(Vec<(String, ParseTree)>),
    /// Parse of a nonterminal, wrapping a parse of its definition.
    Roll {
        nonterminal: String,
        body: Box<ParseTree>,
    },
    /// Parse of `reify(p)`: the witness word itself.
    ReifyLeaf {
        predicate_id: String,
        witness: Vec<Token>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TreeError {
    #[error("malformed tree: {0}")]
    MalformedTree(String),
}

impl ParseTree {
    pub fn pair(split_len: usize, left: ParseTree, right: ParseTree) -> Self {
        ParseTree::Pair {
            split_len,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn inj(tag: impl Into<String>, body: ParseTree) -> Self {
        ParseTree::Inj {
            tag: tag.into(),
            body: Box::new(body),
        }
    }

    pub fn roll(nonterminal: impl Into<String>, body: ParseTree) -> Self {
        ParseTree::Roll {
            nonterminal: nonterminal.into(),
            body: Box::new(body),
        }
    }

    pub fn lit(tok: impl Into<Token>) -> Self {
        ParseTree::LitLeaf(tok.into())
    }

    /// Reads the parsed word back off the tree.
    ///
    /// Fails with `MalformedTree` when a `Pair`'s split length does not match
    /// the left child's actual yield or a `Tuple`'s entries disagree.
    pub fn yield_of(&self) -> Result<Vec<Token>, TreeError> {
        match self {
            ParseTree::LitLeaf(tok) => Ok(vec![tok.clone()]),
            ParseTree::EpsLeaf => Ok(Vec::new()),
            ParseTree::Pair { split_len, left, right } => {
                let mut l = left.yield_of()?;
                if l.len() != *split_len {
                    return Err(TreeError::MalformedTree(format!(
                        "pair records split {} but left child yields {} tokens",
                        split_len,
                        l.len()
                    )));
                }
                l.extend(right.yield_of()?);
                Ok(l)
            }
            ParseTree::Inj { body, .. } => body.yield_of(),
            ParseTree::Tuple(entries) => {
                let mut yields = entries.iter().map(|(_, t)| t.yield_of());
                match yields.next() {
                    // An empty tuple parses any word, so its yield is not
                    // determined by the tree alone; by convention it reads
                    // back as the empty word only when it stands alone.
                    None => Ok(Vec::new()),
                    Some(first) => {
                        let first = first?;
                        for y in yields {
                            if y? != first {
                                return Err(TreeError::MalformedTree(
                                    "tuple entries disagree on their yield".into(),
                                ));
                            }
                        }
                        Ok(first)
                    }
                }
            }
            ParseTree::Roll { body, .. } => body.yield_of(),
            ParseTree::ReifyLeaf { witness, .. } => Ok(witness.clone()),
        }
    }

    /// Reads a tree back from the JSON produced by `to_json`.
    pub fn from_json(v: &Value) -> Result<ParseTree, TreeError> {
        let mal = |msg: String| TreeError::MalformedTree(msg);
        let node = v
            .get("node")
            .and_then(Value::as_str)
            .ok_or_else(|| mal("tree JSON needs a \"node\" field".into()))?;
        let field = |name: &str| {
            v.get(name)
                .ok_or_else(|| mal(format!("{node:?} node needs a {name:?} field")))
        };
        let str_field = |name: &str| {
            field(name)?
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| mal(format!("{node:?} node field {name:?} must be a string")))
        };
        match node {
            "lit" => Ok(ParseTree::LitLeaf(str_field("token")?)),
            "eps" => Ok(ParseTree::EpsLeaf),
            "pair" => {
                let split = field("split")?
                    .as_u64()
                    .ok_or_else(|| mal("pair split must be a nonnegative integer".into()))?;
                Ok(ParseTree::pair(
                    split as usize,
                    ParseTree::from_json(field("left")?)?,
                    ParseTree::from_json(field("right")?)?,
                ))
            }
            "inj" => Ok(ParseTree::inj(
                str_field("tag")?,
                ParseTree::from_json(field("body")?)?,
            )),
            "tuple" => {
                let entries = field("entries")?
                    .as_array()
                    .ok_or_else(|| mal("tuple entries must be an array".into()))?;
                let mut out = Vec::with_capacity(entries.len());
                for e in entries {
                    let tag = e
                        .get("tag")
                        .and_then(Value::as_str)
                        .ok_or_else(|| mal("tuple entry needs a string \"tag\"".into()))?;
                    let tree = e
                        .get("tree")
                        .ok_or_else(|| mal("tuple entry needs a \"tree\"".into()))?;
                    out.push((tag.to_string(), ParseTree::from_json(tree)?));
                }
                Ok(ParseTree::Tuple(out))
            }
            "roll" => Ok(ParseTree::roll(
                str_field("nonterminal")?,
                ParseTree::from_json(field("body")?)?,
            )),
            "reify" => {
                let witness = field("witness")?
                    .as_array()
                    .ok_or_else(|| mal("reify witness must be an array".into()))?
                    .iter()
                    .map(|t| {
                        t.as_str()
                            .map(str::to_string)
                            .ok_or_else(|| mal("reify witness tokens must be strings".into()))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(ParseTree::ReifyLeaf {
                    predicate_id: str_field("predicate")?,
                    witness,
                })
            }
            other => Err(mal(format!("unknown tree node kind {other:?}"))),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            ParseTree::LitLeaf(tok) => json!({"node": "lit", "token": tok}),
            ParseTree::EpsLeaf => json!({"node": "eps"}),
            ParseTree::Pair { split_len, left, right } => json!({
                "node": "pair",
                "split": split_len,
                "left": left.to_json(),
                "right": right.to_json(),
            }),
            ParseTree::Inj { tag, body } => {
                json!({"node": "inj", "tag": tag, "body": body.to_json()})
            }
            ParseTree::Tuple(entries) => json!({
                "node": "tuple",
                "entries": entries
                    .iter()
                    .map(|(tag, t)| json!({"tag": tag, "tree": t.to_json()}))
                    .collect::<Vec<_>>(),
            }),
            ParseTree::Roll { nonterminal, body } => json!({
                "node": "roll",
                "nonterminal": nonterminal,
                "body": body.to_json(),
            }),
            ParseTree::ReifyLeaf { predicate_id, witness } => json!({
                "node": "reify",
                "predicate": predicate_id,
                "witness": witness,
            }),
        }
    }
}

/// Is `t` a parse of `g` (at its own yield)? Purely structural: shapes match
/// grammar connectives, literals and tags and nonterminal names agree, pair
/// splits are honest, tuple entries cover exactly the declared branches, and
/// reify witnesses satisfy their predicate.
pub fn well_formed(env: &GrammarEnv, g: &GrammarExpr, t: &ParseTree) -> bool {
    match (g, t) {
        (GrammarExpr::Lit(c), ParseTree::LitLeaf(tok)) => c == tok,
        (GrammarExpr::Eps, ParseTree::EpsLeaf) => true,
        (GrammarExpr::Tensor(l, r), ParseTree::Pair { split_len, left, right }) => {
            well_formed(env, l, left)
                && well_formed(env, r, right)
                && left.yield_of().map(|y| y.len() == *split_len).unwrap_or(false)
        }
        (GrammarExpr::SumN(branches), ParseTree::Inj { tag, body }) => branches
            .iter()
            .find(|(t2, _)| t2 == tag)
            .is_some_and(|(_, b)| well_formed(env, b, body)),
        (GrammarExpr::AndN(branches), ParseTree::Tuple(entries)) => {
            branches.len() == entries.len()
                && branches.iter().zip(entries).all(|((tag_g, b), (tag_t, sub))| {
                    tag_g == tag_t && well_formed(env, b, sub)
                })
                && t.yield_of().is_ok()
        }
        (GrammarExpr::NtRef(name), ParseTree::Roll { nonterminal, body }) => {
            name == nonterminal
                && env
                    .lookup(name)
                    .is_some_and(|def| well_formed(env, def, body))
        }
        (GrammarExpr::Reify(p), ParseTree::ReifyLeaf { predicate_id, witness }) => {
            p == predicate_id
                && env
                    .predicate(p)
                    .is_some_and(|pred| pred(witness))
        }
        _ => false,
    }
}

/// One layer of a parse tree in which every nonterminal child has already
/// been replaced by the result of folding it. This is the shape an algebra
/// consumes: the functorial action descends through pairs, injections and
/// tuples and stops at the recursive positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeLayer<R> {
    LitLeaf(Token),
    EpsLeaf,
    Pair {
        split_len: usize,
        left: Box<TreeLayer<R>>,
        right: Box<TreeLayer<R>>,
    },
    Inj {
        tag: String,
        body: Box<TreeLayer<R>>,
    },
    Tuple(Vec<(String, TreeLayer<R>)>),
    /// A recursive child, carrying the folded result.
    Sub { nonterminal: String, result: R },
    ReifyLeaf {
        predicate_id: String,
        witness: Vec<Token>,
    },
}

/// Folds a nonterminal parse bottom-up.
///
/// For `Roll(x, body)` the result is `algebra(x, layer)` where `layer` is
/// `body` with each nested `Roll` child replaced by its own fold. That
/// recurrence is exactly the computation rule for folds over inductive
/// grammars, so tests can replay it literally against this function.
pub fn fold_tree<R>(
    env: &GrammarEnv,
    algebra: &dyn Fn(&str, TreeLayer<R>) -> R,
    t: &ParseTree,
) -> Result<R, TreeError> {
    let ParseTree::Roll { nonterminal, .. } = t else {
        return Err(TreeError::MalformedTree(
            "fold_tree needs a nonterminal parse at the root".into(),
        ));
    };
    if !well_formed(env, &GrammarExpr::nt(nonterminal.clone()), t) {
        return Err(TreeError::MalformedTree(format!(
            "not a well-formed parse of {nonterminal:?}"
        )));
    }
    Ok(fold_rec(algebra, t))
}

fn fold_rec<R>(algebra: &dyn Fn(&str, TreeLayer<R>) -> R, t: &ParseTree) -> R {
    let ParseTree::Roll { nonterminal, body } = t else {
        unreachable!("fold_rec is only called on rolls");
    };
    let layer = layer_of(algebra, body);
    algebra(nonterminal, layer)
}

fn layer_of<R>(algebra: &dyn Fn(&str, TreeLayer<R>) -> R, t: &ParseTree) -> TreeLayer<R> {
    match t {
        ParseTree::LitLeaf(tok) => TreeLayer::LitLeaf(tok.clone()),
        ParseTree::EpsLeaf => TreeLayer::EpsLeaf,
        ParseTree::Pair { split_len, left, right } => TreeLayer::Pair {
            split_len: *split_len,
            left: Box::new(layer_of(algebra, left)),
            right: Box::new(layer_of(algebra, right)),
        },
        ParseTree::Inj { tag, body } => TreeLayer::Inj {
            tag: tag.clone(),
            body: Box::new(layer_of(algebra, body)),
        },
        ParseTree::Tuple(entries) => TreeLayer::Tuple(
            entries
                .iter()
                .map(|(tag, sub)| (tag.clone(), layer_of(algebra, sub)))
                .collect(),
        ),
        ParseTree::Roll { nonterminal, .. } => TreeLayer::Sub {
            nonterminal: nonterminal.clone(),
            result: fold_rec(algebra, t),
        },
        ParseTree::ReifyLeaf { predicate_id, witness } => TreeLayer::ReifyLeaf {
            predicate_id: predicate_id.clone(),
            witness: witness.clone(),
        },
    }
}
