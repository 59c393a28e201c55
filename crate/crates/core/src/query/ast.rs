use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Parsed unified query.
///
/// A normalized tree has no `And` directly under `And`, no `Or` directly
/// under `Or`, no `Not(Not(_))`, and every `And`/`Or` has at least two
/// children. The parser only produces normalized trees.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum QueryAst {
    Term(String),
    Phrase(String),
    And(Vec<QueryAst>),
    Or(Vec<QueryAst>),
    Not(Box<QueryAst>),
}

impl QueryAst {
    pub fn term(t: impl Into<String>) -> Self {
        QueryAst::Term(t.into())
    }

    pub fn phrase(t: impl Into<String>) -> Self {
        QueryAst::Phrase(t.into())
    }

    pub fn negate(child: QueryAst) -> Self {
        match child {
            QueryAst::Not(inner) => *inner,
            other => QueryAst::Not(Box::new(other)),
        }
    }

    /// Conjunction with flattening; a single child is returned unchanged.
    pub fn and(children: impl IntoIterator<Item = QueryAst>) -> Self {
        Self::nary(children, true)
    }

    /// Disjunction with flattening; a single child is returned unchanged.
    pub fn or(children: impl IntoIterator<Item = QueryAst>) -> Self {
        Self::nary(children, false)
    }

    fn nary(children: impl IntoIterator<Item = QueryAst>, conj: bool) -> Self {
        let mut flat = Vec::new();
        for c in children {
            match (c, conj) {
                (QueryAst::And(inner), true) | (QueryAst::Or(inner), false) => flat.extend(inner),
                (other, _) => flat.push(other),
            }
        }
        assert!(!flat.is_empty(), "boolean node needs at least one child");
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else if conj {
            QueryAst::And(flat)
        } else {
            QueryAst::Or(flat)
        }
    }

    /// Rebuilds the tree through the flattening constructors.
    pub fn normalize(self) -> Self {
        match self {
            QueryAst::And(cs) => QueryAst::and(cs.into_iter().map(Self::normalize)),
            QueryAst::Or(cs) => QueryAst::or(cs.into_iter().map(Self::normalize)),
            QueryAst::Not(c) => QueryAst::negate(c.normalize()),
            leaf => leaf,
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            QueryAst::Or(_) => 1,
            QueryAst::And(_) => 2,
            QueryAst::Not(_) => 3,
            QueryAst::Term(_) | QueryAst::Phrase(_) => 4,
        }
    }

    /// Distinct leaf literals in order of first appearance.
    pub fn literals(&self) -> Vec<&QueryAst> {
        fn walk<'a>(n: &'a QueryAst, out: &mut Vec<&'a QueryAst>) {
            match n {
                QueryAst::Term(_) | QueryAst::Phrase(_) => {
                    if !out.contains(&n) {
                        out.push(n)
                    }
                }
                QueryAst::And(cs) | QueryAst::Or(cs) => cs.iter().for_each(|c| walk(c, out)),
                QueryAst::Not(c) => walk(c, out),
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &QueryAst, min_prec: u8) -> fmt::Result {
    if child.precedence() <= min_prec {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for QueryAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryAst::Term(t) => f.write_str(t),
            QueryAst::Phrase(p) => write!(f, "\"{p}\""),
            QueryAst::Not(c) => {
                f.write_str("NOT ")?;
                write_child(f, c, 2)
            }
            QueryAst::And(cs) | QueryAst::Or(cs) => {
                let (sep, prec) = match self {
                    QueryAst::And(_) => (" AND ", 2),
                    _ => (" OR ", 1),
                };
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    write_child(f, c, prec)?;
                }
                Ok(())
            }
        }
    }
}

/// Queries serialize as their canonical text form.
impl Serialize for QueryAst {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for QueryAst {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        super::parse_query(&raw).map_err(serde::de::Error::custom)
    }
}
