//! Tailorable quality assessment.
//!
//! Fifteen assessment methods in four categories each map an enriched
//! activity to `[0, 1]`, normalized against the result set it belongs to.
//! A user-supplied weight profile combines them into one score:
//! `Σ wᵢ·sᵢ / Σ wᵢ` over methods with `wᵢ > 0`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activity::Activity;
use crate::enrichment::compute_content_metrics;
use crate::query::{Dnf, MatchText};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QualityError {
    #[error("no methods selected")]
    NoMethodsSelected,
    #[error("unknown assessment method {0:?}")]
    UnknownMethod(String),
    #[error("weight for {0:?} must be a finite number >= 0")]
    InvalidWeight(String),
    #[error("cannot build a corpus context from an empty result set")]
    EmptyCorpus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Metadata,
    Content,
    Classification,
    Scientific,
}

pub type Scorer = fn(&Activity, &CorpusContext, &QueryContext) -> f64;

pub struct AssessmentMethod {
    pub id: &'static str,
    pub category: Category,
    pub scorer: Scorer,
}

impl AssessmentMethod {
    pub fn score(&self, a: &Activity, ctx: &CorpusContext, q: &QueryContext) -> f64 {
        let s = (self.scorer)(a, ctx, q);
        if s.is_nan() {
            0.0
        } else {
            s.clamp(0.0, 1.0)
        }
    }
}

/// Scores are rounded to this grid before ranking, so results do not depend
/// on floating-point noise from how the weights were scaled.
const SCORE_GRID: f64 = 1e12;

/// Query side of the assessment: positive keywords and an optional
/// preferred language.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueryContext {
    pub terms: Vec<Vec<String>>,
    pub language: Option<String>,
}

impl QueryContext {
    pub fn new(terms: impl IntoIterator<Item = impl AsRef<str>>) -> Self {
        let mut out: Vec<Vec<String>> = Vec::new();
        for t in terms {
            let words = crate::query::word_tokens(t.as_ref());
            if !words.is_empty() && !out.contains(&words) {
                out.push(words);
            }
        }
        Self {
            terms: out,
            language: None,
        }
    }

    /// Positive literals of every disjunct.
    pub fn from_dnf(dnf: &Dnf) -> Self {
        let mut seen = HashSet::new();
        let terms: Vec<String> = dnf
            .disjuncts
            .iter()
            .flat_map(|c| c.positive.iter())
            .filter(|a| seen.insert((*a).clone()))
            .map(|a| a.text().to_string())
            .collect();
        Self::new(terms)
    }

    pub fn with_language(mut self, language: impl Into<String>) -> Self {
        self.language = Some(language.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Range {
    min: f64,
    max: f64,
}

impl Range {
    fn of(values: impl Iterator<Item = f64>) -> Self {
        values.fold(
            Range {
                min: f64::INFINITY,
                max: f64::NEG_INFINITY,
            },
            |r, v| Range {
                min: r.min.min(v),
                max: r.max.max(v),
            },
        )
    }

    /// Min-max normalization; a degenerate range maps to 0.
    fn normalize(&self, v: f64) -> f64 {
        let span = self.max - self.min;
        if span > 0.0 && span.is_finite() {
            ((v - self.min) / span).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Field {
    Followers,
    Likes,
    Reposts,
    Words,
    Syllables,
    Happiness,
    Fear,
    Entropy,
    Recency,
    QueryTerms,
}

/// Normalization context built once per result set.
#[derive(Debug, Clone)]
pub struct CorpusContext {
    size: usize,
    document_frequency: HashMap<String, usize>,
    ranges: BTreeMap<Field, Range>,
    max_tf_idf: f64,
}

fn enriched_u64(a: &Activity, f: impl Fn(&crate::activity::EnrichedData) -> Option<u64>) -> f64 {
    a.enriched().and_then(f).unwrap_or(0) as f64
}

fn words_of(a: &Activity) -> u64 {
    a.enriched()
        .and_then(|e| e.num_of_words)
        .unwrap_or_else(|| compute_content_metrics(&a.object.content).num_of_words)
}

fn field_value(a: &Activity, field: Field, q: &QueryContext) -> f64 {
    match field {
        Field::Followers => enriched_u64(a, |e| e.num_followers),
        Field::Likes => enriched_u64(a, |e| e.num_likes),
        Field::Reposts => enriched_u64(a, |e| e.num_retweets),
        Field::Words => words_of(a) as f64,
        Field::Syllables => a
            .enriched()
            .and_then(|e| e.syllables_per_word)
            .unwrap_or(0.0),
        Field::Happiness => enriched_u64(a, |e| e.abs_happiness_factor),
        Field::Fear => enriched_u64(a, |e| e.abs_fear_factor),
        Field::Entropy => a.enriched().and_then(|e| e.entropy).unwrap_or(0.0),
        Field::Recency => a.object.start_time.timestamp_millis() as f64,
        Field::QueryTerms => {
            let text = MatchText::new(&a.object.content);
            q.terms.iter().map(|t| text.count_seq(t)).sum::<usize>() as f64
        }
    }
}

const FIELDS: [Field; 10] = [
    Field::Followers,
    Field::Likes,
    Field::Reposts,
    Field::Words,
    Field::Syllables,
    Field::Happiness,
    Field::Fear,
    Field::Entropy,
    Field::Recency,
    Field::QueryTerms,
];

impl CorpusContext {
    pub fn build(activities: &[Activity], q: &QueryContext) -> Result<Self, QualityError> {
        if activities.is_empty() {
            return Err(QualityError::EmptyCorpus);
        }
        let texts: Vec<MatchText> = activities
            .iter()
            .map(|a| MatchText::new(&a.object.content))
            .collect();
        let mut document_frequency = HashMap::new();
        for term in &q.terms {
            let df = texts.iter().filter(|t| t.contains_seq(term)).count();
            document_frequency.insert(term.join(" "), df);
        }
        let ranges = FIELDS
            .iter()
            .map(|&f| {
                (
                    f,
                    Range::of(activities.iter().map(|a| field_value(a, f, q))),
                )
            })
            .collect();
        let mut ctx = CorpusContext {
            size: activities.len(),
            document_frequency,
            ranges,
            max_tf_idf: 0.0,
        };
        ctx.max_tf_idf = activities
            .iter()
            .map(|a| query_tf_idf(a, &ctx, q))
            .fold(0.0, f64::max);
        Ok(ctx)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn document_frequency(&self, term: &str) -> usize {
        let key = crate::query::word_tokens(term).join(" ");
        self.document_frequency.get(&key).copied().unwrap_or(0)
    }

    fn norm(&self, a: &Activity, field: Field, q: &QueryContext) -> f64 {
        self.ranges[&field].normalize(field_value(a, field, q))
    }
}

/// `tf · idf` with `tf = count / numOfWords` and
/// `idf = ln((1 + N) / (1 + df)) + 1`.
pub fn tf_idf(term: &str, a: &Activity, ctx: &CorpusContext) -> f64 {
    let words = crate::query::word_tokens(term);
    let total = words_of(a);
    if words.is_empty() || total == 0 {
        return 0.0;
    }
    let count = MatchText::new(&a.object.content).count_seq(&words);
    if count == 0 {
        return 0.0;
    }
    let tf = count as f64 / total as f64;
    let n = ctx.size as f64;
    let df = ctx.document_frequency(term) as f64;
    let idf = ((1.0 + n) / (1.0 + df)).ln() + 1.0;
    tf * idf
}

fn query_tf_idf(a: &Activity, ctx: &CorpusContext, q: &QueryContext) -> f64 {
    q.terms.iter().map(|t| tf_idf(&t.join(" "), a, ctx)).sum()
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

static METHODS: [AssessmentMethod; 15] = [
    AssessmentMethod {
        id: "followerCount",
        category: Category::Metadata,
        scorer: |a, c, q| c.norm(a, Field::Followers, q),
    },
    AssessmentMethod {
        id: "likeCount",
        category: Category::Metadata,
        scorer: |a, c, q| c.norm(a, Field::Likes, q),
    },
    AssessmentMethod {
        id: "retweetCount",
        category: Category::Metadata,
        scorer: |a, c, q| c.norm(a, Field::Reposts, q),
    },
    AssessmentMethod {
        id: "hasMediaFile",
        category: Category::Metadata,
        scorer: |a, _, _| flag(a.enriched().is_some_and(|e| e.media.is_some())),
    },
    AssessmentMethod {
        id: "hasLocation",
        category: Category::Metadata,
        scorer: |a, _, _| flag(a.object.location.is_some()),
    },
    AssessmentMethod {
        id: "queryTermFrequency",
        category: Category::Content,
        scorer: |a, c, q| {
            let max = c.ranges[&Field::QueryTerms].max;
            if max > 0.0 {
                field_value(a, Field::QueryTerms, q) / max
            } else {
                0.0
            }
        },
    },
    AssessmentMethod {
        id: "lengthScore",
        category: Category::Content,
        scorer: |a, c, q| c.norm(a, Field::Words, q),
    },
    AssessmentMethod {
        id: "readability",
        category: Category::Content,
        scorer: |a, c, q| {
            let r = c.ranges[&Field::Syllables];
            if r.max > r.min {
                1.0 - r.normalize(field_value(a, Field::Syllables, q))
            } else {
                0.0
            }
        },
    },
    AssessmentMethod {
        id: "urlPresence",
        category: Category::Content,
        scorer: |a, _, _| {
            flag(
                a.enriched()
                    .and_then(|e| e.embedded_urls.as_ref())
                    .is_some_and(|u| !u.is_empty()),
            )
        },
    },
    AssessmentMethod {
        id: "happinessScore",
        category: Category::Classification,
        scorer: |a, c, q| c.norm(a, Field::Happiness, q),
    },
    AssessmentMethod {
        id: "fearScore",
        category: Category::Classification,
        scorer: |a, c, q| {
            let r = c.ranges[&Field::Fear];
            if r.max > r.min {
                1.0 - r.normalize(field_value(a, Field::Fear, q))
            } else {
                0.0
            }
        },
    },
    AssessmentMethod {
        id: "languageMatch",
        category: Category::Classification,
        scorer: |a, _, q| {
            let lang = a.enriched().and_then(|e| e.language.as_deref());
            match (&q.language, lang) {
                (Some(want), Some(have)) => flag(want == have),
                (None, Some(have)) => flag(have != "und"),
                (_, None) => 0.0,
            }
        },
    },
    AssessmentMethod {
        id: "tfIdfScore",
        category: Category::Scientific,
        scorer: |a, c, q| {
            if c.max_tf_idf > 0.0 {
                query_tf_idf(a, c, q) / c.max_tf_idf
            } else {
                0.0
            }
        },
    },
    AssessmentMethod {
        id: "entropyScore",
        category: Category::Scientific,
        scorer: |a, c, q| c.norm(a, Field::Entropy, q),
    },
    AssessmentMethod {
        id: "recencyScore",
        category: Category::Scientific,
        scorer: |a, c, q| c.norm(a, Field::Recency, q),
    },
];

pub fn methods() -> &'static [AssessmentMethod] {
    &METHODS
}

pub fn method(id: &str) -> Option<&'static AssessmentMethod> {
    METHODS.iter().find(|m| m.id == id)
}

/// Method id → non-negative weight. Methods not listed weigh 0.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightProfile {
    pub weights: BTreeMap<String, f64>,
}

impl WeightProfile {
    pub fn new(weights: impl IntoIterator<Item = (impl Into<String>, f64)>) -> Self {
        Self {
            weights: weights.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }

    pub fn uniform() -> Self {
        Self::new(METHODS.iter().map(|m| (m.id, 1.0)))
    }

    pub fn validate(&self) -> Result<(), QualityError> {
        for (id, w) in &self.weights {
            if method(id).is_none() {
                return Err(QualityError::UnknownMethod(id.clone()));
            }
            if !w.is_finite() || *w < 0.0 {
                return Err(QualityError::InvalidWeight(id.clone()));
            }
        }
        if !self.weights.values().any(|w| *w > 0.0) {
            return Err(QualityError::NoMethodsSelected);
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            weights: self
                .weights
                .iter()
                .map(|(k, w)| (k.clone(), w * factor))
                .collect(),
        }
    }

    /// Weighted mean of per-method scores, rounded to the ranking grid.
    /// `score_of` is only called for methods with positive weight.
    pub fn combine(&self, mut score_of: impl FnMut(&str) -> f64) -> Result<f64, QualityError> {
        self.validate()?;
        let (mut num, mut den) = (0.0, 0.0);
        for (id, &w) in &self.weights {
            if w > 0.0 {
                num += w * score_of(id);
                den += w;
            }
        }
        Ok(((num / den) * SCORE_GRID).round() / SCORE_GRID)
    }
}

pub fn assess_activity(
    a: &Activity,
    profile: &WeightProfile,
    ctx: &CorpusContext,
    q: &QueryContext,
) -> Result<f64, QualityError> {
    profile.combine(|id| method(id).map_or(0.0, |m| m.score(a, ctx, q)))
}

/// Descending score; ties go to the newer activity, then the smaller id.
pub fn rank_order(a: (&Activity, f64), b: (&Activity, f64)) -> Ordering {
    b.1.partial_cmp(&a.1)
        .unwrap_or(Ordering::Equal)
        .then_with(|| b.0.object.start_time.cmp(&a.0.object.start_time))
        .then_with(|| a.0.object.id.cmp(&b.0.object.id))
}

pub fn rank_activities(
    list: &[Activity],
    profile: &WeightProfile,
    ctx: &CorpusContext,
    q: &QueryContext,
) -> Result<Vec<(Activity, f64)>, QualityError> {
    let mut scored = list
        .iter()
        .map(|a| Ok((a.clone(), assess_activity(a, profile, ctx, q)?)))
        .collect::<Result<Vec<_>, QualityError>>()?;
    scored.sort_by(|x, y| rank_order((&x.0, x.1), (&y.0, y.1)));
    Ok(scored)
}
