//! Per-platform execution plans.
//!
//! A plan is a list of native requests the platform can execute plus a
//! residual post-filter covering whatever the platform cannot express.
//! Native requests always over-approximate the query, so applying the
//! residual to the union of their results yields exactly the query's
//! matches.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ast::QueryAst;
use super::dnf::{Atom, Conjunct, Dnf};
use super::matcher::MatchText;
use crate::activity::GeoPoint;
use crate::geo::{GeoCircle, TimeWindow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Operator {
    And,
    Or,
    Not,
    Phrase,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PlatformCapabilities {
    pub operators: BTreeSet<Operator>,
    pub native_geo_filter: bool,
    pub native_time_filter: bool,
    /// `false` means the platform only searches for a single tag.
    pub keyword_search: bool,
    pub max_results_per_request: usize,
}

impl PlatformCapabilities {
    pub fn supports(&self, op: Operator) -> bool {
        self.operators.contains(&op)
    }

    pub fn check(&self) -> Result<(), RewriteError> {
        if !self.keyword_search && !self.operators.is_empty() {
            return Err(RewriteError::InvalidInput(
                "tag-only platforms cannot declare query operators".into(),
            ));
        }
        if self.max_results_per_request == 0 {
            return Err(RewriteError::InvalidInput(
                "maxResultsPerRequest must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RewriteError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("capability error: {0}")]
    Capability(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RequestKind {
    Keyword,
    Tag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NativeRequest {
    pub kind: RequestKind,
    pub keyword_string: String,
    /// Index of the first disjunct this request serves.
    pub conjunct_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geo: Option<GeoCircle>,
    #[serde(default, skip_serializing_if = "TimeWindow::is_unbounded")]
    pub time: TimeWindow,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PostFilter {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub must_match: Option<QueryAst>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geo: Option<GeoCircle>,
    #[serde(default, skip_serializing_if = "TimeWindow::is_unbounded")]
    pub time_window: TimeWindow,
}

impl PostFilter {
    pub fn is_empty(&self) -> bool {
        self.must_match.is_none() && self.geo.is_none() && self.time_window.is_unbounded()
    }

    /// Applies the residual to one gathered item.
    pub fn accepts(
        &self,
        text: &str,
        start_time: &chrono::DateTime<chrono::FixedOffset>,
        location: Option<&GeoPoint>,
    ) -> bool {
        if !self.time_window.contains(start_time) {
            return false;
        }
        if let Some(circle) = &self.geo {
            match location {
                Some(p) if circle.contains(p.latitude, p.longitude) => {}
                _ => return false,
            }
        }
        match &self.must_match {
            Some(ast) => MatchText::new(text).matches(ast),
            None => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RewritePlan {
    pub native_requests: Vec<NativeRequest>,
    pub post_filter: PostFilter,
    pub estimated_request_units: usize,
}

/// Geo and time restrictions of a gathering request.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GatherScope {
    pub geo: Option<GeoCircle>,
    pub time: TimeWindow,
}

/// Atom as a native AST, splitting phrases into AND-ed words when the
/// platform has no phrase search.
fn native_atom(atom: &Atom, caps: &PlatformCapabilities) -> QueryAst {
    if atom.is_phrase() && !caps.supports(Operator::Phrase) {
        QueryAst::and(atom.words().into_iter().map(QueryAst::Term))
    } else {
        atom.to_ast()
    }
}

fn native_conjunct(c: &Conjunct, caps: &PlatformCapabilities, with_negatives: bool) -> QueryAst {
    let pos = c.positive.iter().map(|a| native_atom(a, caps));
    if with_negatives {
        let neg = c
            .negative
            .iter()
            .filter(|a| !a.is_phrase() || caps.supports(Operator::Phrase))
            .map(|a| QueryAst::negate(a.to_ast()));
        QueryAst::and(pos.chain(neg))
    } else {
        QueryAst::and(pos)
    }
}

pub fn rewrite_for_platform(
    dnf: &Dnf,
    caps: &PlatformCapabilities,
    scope: &GatherScope,
) -> Result<RewritePlan, RewriteError> {
    caps.check()?;
    let full = dnf
        .to_ast()
        .ok_or_else(|| RewriteError::InvalidInput("empty query plan".into()))?;

    let native_geo = scope.geo.filter(|_| caps.native_geo_filter);
    let native_time = if caps.native_time_filter {
        scope.time
    } else {
        TimeWindow::default()
    };
    let request = |kind, keyword_string: String, conjunct_index| NativeRequest {
        kind,
        keyword_string,
        conjunct_index,
        geo: native_geo,
        time: native_time,
    };

    let mut requests: Vec<NativeRequest> = Vec::new();
    let residual;

    if !caps.keyword_search {
        // One tag per disjunct is enough to over-approximate it; the full
        // query is re-checked locally.
        for (i, c) in dnf.disjuncts.iter().enumerate() {
            let atom = c
                .positive
                .iter()
                .next()
                .expect("dnf conjuncts are positive");
            let tag = atom.words().into_iter().next().ok_or_else(|| {
                RewriteError::Capability(format!("{:?} cannot be searched as a tag", atom.text()))
            })?;
            if !requests.iter().any(|r| r.keyword_string == tag) {
                requests.push(request(RequestKind::Tag, tag, i));
            }
        }
        residual = Some(full);
    } else if caps.supports(Operator::And) && caps.supports(Operator::Or) {
        let keep_negatives = caps.supports(Operator::Not);
        let exact = (keep_negatives || !dnf.has_negatives())
            && (caps.supports(Operator::Phrase) || !dnf.has_phrases());
        let expr = QueryAst::or(
            dnf.disjuncts
                .iter()
                .map(|c| native_conjunct(c, caps, keep_negatives)),
        );
        requests.push(request(RequestKind::Keyword, expr.to_string(), 0));
        residual = if exact { None } else { Some(full) };
    } else {
        let has_and = caps.supports(Operator::And);
        let mut exact = !dnf.has_negatives();
        for (i, c) in dnf.disjuncts.iter().enumerate() {
            let expr = if has_and {
                native_conjunct(c, caps, false)
            } else {
                let first = c
                    .positive
                    .iter()
                    .next()
                    .expect("dnf conjuncts are positive");
                let words = first.words();
                if c.positive.len() > 1 || words.len() > 1 {
                    exact = false;
                }
                QueryAst::Term(words[0].clone())
            };
            if c.positive.iter().any(Atom::is_phrase) && !caps.supports(Operator::Phrase) {
                exact = false;
            }
            let text = expr.to_string();
            if !requests.iter().any(|r| r.keyword_string == text) {
                requests.push(request(RequestKind::Keyword, text, i));
            }
        }
        residual = if exact && requests.len() == dnf.len() {
            None
        } else {
            Some(full)
        };
    }

    let post_filter = PostFilter {
        must_match: residual,
        geo: if native_geo.is_some() {
            None
        } else {
            scope.geo
        },
        time_window: if caps.native_time_filter {
            TimeWindow::default()
        } else {
            scope.time
        },
    };
    let estimated_request_units = requests.len();
    Ok(RewritePlan {
        native_requests: requests,
        post_filter,
        estimated_request_units,
    })
}

/// Request units needed to fetch `pages_per_request` pages of every native
/// request in the plan.
pub fn estimate_cost(plan: &RewritePlan, pages_per_request: usize) -> usize {
    assert!(pages_per_request >= 1, "pagesPerRequest must be >= 1");
    plan.native_requests.len() * pages_per_request
}
