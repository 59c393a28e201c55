//! Unified keyword query language: parsing, normalization to DNF,
//! per-platform rewriting and quota cost estimation.

mod ast;
mod dnf;
mod matcher;
mod parser;
mod rewrite;

pub use ast::QueryAst;
pub use dnf::{to_dnf, Atom, Conjunct, Dnf, DnfError, MAX_DISJUNCTS};
pub use matcher::{evaluate_match, word_tokens, MatchText};
pub use parser::{parse_query, ParseError};
pub use rewrite::{
    estimate_cost, rewrite_for_platform, GatherScope, NativeRequest, Operator,
    PlatformCapabilities, PostFilter, RequestKind, RewriteError, RewritePlan,
};
