use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use super::ast::QueryAst;
use super::matcher::{word_tokens, MatchText};

/// Queries whose DNF grows past this many disjuncts are rejected.
pub const MAX_DISJUNCTS: usize = 64;

/// Bound on intermediate products while distributing AND over OR.
const MAX_INTERMEDIATE: usize = MAX_DISJUNCTS * MAX_DISJUNCTS;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DnfError {
    #[error("unsupported query: every alternative needs at least one positive keyword")]
    PureNegative,
    #[error("query expands to more than {MAX_DISJUNCTS} alternatives")]
    TooManyDisjuncts,
}

/// A keyword literal with its text normalized to lowercase single-spaced
/// words, so `Fire` and `fire` compare equal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(tag = "kind", content = "text", rename_all = "lowercase")]
pub enum Atom {
    Term(String),
    Phrase(String),
}

impl Atom {
    fn from_leaf(ast: &QueryAst) -> Self {
        match ast {
            QueryAst::Term(t) => Atom::Term(t.to_lowercase()),
            QueryAst::Phrase(p) => Atom::Phrase(word_tokens(p).join(" ")),
            _ => unreachable!("not a leaf"),
        }
    }

    pub fn text(&self) -> &str {
        match self {
            Atom::Term(t) | Atom::Phrase(t) => t,
        }
    }

    pub fn is_phrase(&self) -> bool {
        matches!(self, Atom::Phrase(_))
    }

    pub fn words(&self) -> Vec<String> {
        word_tokens(self.text())
    }

    pub fn to_ast(&self) -> QueryAst {
        match self {
            Atom::Term(t) => QueryAst::Term(t.clone()),
            Atom::Phrase(p) => QueryAst::Phrase(p.clone()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Conjunct {
    pub positive: BTreeSet<Atom>,
    pub negative: BTreeSet<Atom>,
}

impl Conjunct {
    fn literal(atom: Atom, negated: bool) -> Self {
        let mut c = Conjunct::default();
        if negated {
            c.negative.insert(atom);
        } else {
            c.positive.insert(atom);
        }
        c
    }

    fn merge(&self, other: &Conjunct) -> Conjunct {
        Conjunct {
            positive: self.positive.union(&other.positive).cloned().collect(),
            negative: self.negative.union(&other.negative).cloned().collect(),
        }
    }

    fn is_contradictory(&self) -> bool {
        self.positive.intersection(&self.negative).next().is_some()
    }

    pub fn matches(&self, text: &MatchText) -> bool {
        self.positive.iter().all(|a| text.contains_seq(&a.words()))
            && !self.negative.iter().any(|a| text.contains_seq(&a.words()))
    }

    pub fn to_ast(&self) -> QueryAst {
        let lits = self
            .positive
            .iter()
            .map(Atom::to_ast)
            .chain(self.negative.iter().map(|a| QueryAst::negate(a.to_ast())));
        QueryAst::and(lits)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Dnf {
    pub disjuncts: Vec<Conjunct>,
}

impl Dnf {
    pub fn is_empty(&self) -> bool {
        self.disjuncts.is_empty()
    }

    pub fn len(&self) -> usize {
        self.disjuncts.len()
    }

    pub fn matches(&self, text: &MatchText) -> bool {
        self.disjuncts.iter().any(|c| c.matches(text))
    }

    /// `None` for the empty (unsatisfiable) DNF.
    pub fn to_ast(&self) -> Option<QueryAst> {
        if self.disjuncts.is_empty() {
            None
        } else {
            Some(QueryAst::or(self.disjuncts.iter().map(Conjunct::to_ast)))
        }
    }

    pub fn has_negatives(&self) -> bool {
        self.disjuncts.iter().any(|c| !c.negative.is_empty())
    }

    pub fn has_phrases(&self) -> bool {
        self.disjuncts
            .iter()
            .any(|c| c.positive.iter().chain(&c.negative).any(Atom::is_phrase))
    }
}

/// Removes exact duplicates and unsatisfiable conjuncts, keeping first
/// occurrences in order.
fn tidy(list: Vec<Conjunct>) -> Vec<Conjunct> {
    let mut seen = BTreeSet::new();
    list.into_iter()
        .filter(|c| !c.is_contradictory())
        .filter(|c| seen.insert(c.clone()))
        .collect()
}

fn expand(ast: &QueryAst, negated: bool) -> Result<Vec<Conjunct>, DnfError> {
    match ast {
        QueryAst::Term(_) | QueryAst::Phrase(_) => {
            Ok(vec![Conjunct::literal(Atom::from_leaf(ast), negated)])
        }
        QueryAst::Not(inner) => expand(inner, !negated),
        QueryAst::And(cs) | QueryAst::Or(cs) => {
            let conjunctive = matches!(ast, QueryAst::And(_)) != negated;
            if conjunctive {
                let mut acc = vec![Conjunct::default()];
                for c in cs {
                    let rhs = expand(c, negated)?;
                    let product: Vec<Conjunct> = acc
                        .iter()
                        .flat_map(|l| rhs.iter().map(move |r| l.merge(r)))
                        .collect();
                    acc = tidy(product);
                    if acc.len() > MAX_INTERMEDIATE {
                        return Err(DnfError::TooManyDisjuncts);
                    }
                }
                Ok(acc)
            } else {
                let mut acc = Vec::new();
                for c in cs {
                    acc.extend(expand(c, negated)?);
                    if acc.len() > MAX_INTERMEDIATE {
                        return Err(DnfError::TooManyDisjuncts);
                    }
                }
                Ok(tidy(acc))
            }
        }
    }
}

/// Disjunctive normal form: the OR-of-ANDs fan-out representation. An empty
/// result means the query is unsatisfiable (e.g. `a AND NOT a`).
pub fn to_dnf(ast: &QueryAst) -> Result<Dnf, DnfError> {
    let disjuncts = expand(ast, false)?;
    if disjuncts.iter().any(|c| c.positive.is_empty()) {
        return Err(DnfError::PureNegative);
    }
    if disjuncts.len() > MAX_DISJUNCTS {
        return Err(DnfError::TooManyDisjuncts);
    }
    Ok(Dnf { disjuncts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::parse_query;

    fn conj(pos: &[&str], neg: &[&str]) -> Conjunct {
        Conjunct {
            positive: pos.iter().map(|t| Atom::Term(t.to_string())).collect(),
            negative: neg.iter().map(|t| Atom::Term(t.to_string())).collect(),
        }
    }

    fn dnf(q: &str) -> Result<Dnf, DnfError> {
        to_dnf(&parse_query(q).unwrap())
    }

    #[test]
    fn or_is_already_disjunctive() {
        assert_eq!(
            dnf("a OR b").unwrap().disjuncts,
            vec![conj(&["a"], &[]), conj(&["b"], &[])]
        );
    }

    #[test]
    fn and_distributes_over_or() {
        assert_eq!(
            dnf("(a OR b) AND c").unwrap().disjuncts,
            vec![conj(&["a", "c"], &[]), conj(&["b", "c"], &[])]
        );
    }

    #[test]
    fn de_morgan() {
        assert_eq!(
            dnf("x NOT (a OR b)").unwrap().disjuncts,
            vec![conj(&["x"], &["a", "b"])]
        );
        assert_eq!(
            dnf("x NOT (a AND b)").unwrap().disjuncts,
            vec![conj(&["x"], &["a"]), conj(&["x"], &["b"])]
        );
    }

    #[test]
    fn pure_negative_is_rejected() {
        assert_eq!(dnf("NOT a"), Err(DnfError::PureNegative));
        assert_eq!(dnf("a OR NOT b"), Err(DnfError::PureNegative));
    }

    #[test]
    fn duplicates_and_contradictions_vanish() {
        assert_eq!(dnf("a OR a OR A").unwrap().len(), 1);
        assert!(dnf("a AND NOT a").unwrap().is_empty());
        assert_eq!(
            dnf("(a NOT a) OR b").unwrap().disjuncts,
            vec![conj(&["b"], &[])]
        );
    }

    #[test]
    fn explosion_guard() {
        // 2^6 = 64 disjuncts is fine, 2^7 is not.
        let six = "(a OR b) (c OR d) (e OR f) (g OR h) (i OR j) (k OR l)";
        assert_eq!(dnf(six).unwrap().len(), 64);
        assert_eq!(
            dnf(&format!("{six} (m OR n)")),
            Err(DnfError::TooManyDisjuncts)
        );
    }
}
