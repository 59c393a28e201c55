//! Reference evaluator. Also executes residual post-filters.

use super::ast::QueryAst;

/// Lowercased maximal runs of alphanumeric characters.
pub fn word_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| w.to_lowercase())
        .collect()
}

/// A document body tokenized once for repeated evaluation.
#[derive(Debug, Clone)]
pub struct MatchText {
    words: Vec<String>,
}

impl MatchText {
    pub fn new(text: &str) -> Self {
        Self {
            words: word_tokens(text),
        }
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// True iff `needle` occurs as a contiguous word sequence.
    pub fn contains_seq(&self, needle: &[String]) -> bool {
        !needle.is_empty() && self.words.windows(needle.len()).any(|w| w == needle)
    }

    pub fn count_seq(&self, needle: &[String]) -> usize {
        if needle.is_empty() {
            return 0;
        }
        self.words
            .windows(needle.len())
            .filter(|w| *w == needle)
            .count()
    }

    pub fn matches(&self, ast: &QueryAst) -> bool {
        match ast {
            QueryAst::Term(t) | QueryAst::Phrase(t) => self.contains_seq(&word_tokens(t)),
            QueryAst::And(cs) => cs.iter().all(|c| self.matches(c)),
            QueryAst::Or(cs) => cs.iter().any(|c| self.matches(c)),
            QueryAst::Not(c) => !self.matches(c),
        }
    }
}

/// Terms match case-insensitively on word boundaries; phrases match their
/// exact word sequence.
pub fn evaluate_match(ast: &QueryAst, text: &str) -> bool {
    MatchText::new(text).matches(ast)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::parse_query;

    #[test]
    fn term_is_case_insensitive_on_word_boundaries() {
        assert!(evaluate_match(
            &QueryAst::term("fire"),
            "House fire in Berlin"
        ));
        assert!(evaluate_match(&QueryAst::term("FIRE"), "fire!"));
        assert!(!evaluate_match(&QueryAst::term("fire"), "firefighters"));
        assert!(evaluate_match(&QueryAst::term("#berlin"), "hello #Berlin"));
    }

    #[test]
    fn phrase_order_matters() {
        assert!(!evaluate_match(
            &QueryAst::phrase("house fire"),
            "fire house nearby"
        ));
        assert!(evaluate_match(
            &QueryAst::phrase("house fire"),
            "a HOUSE, fire"
        ));
    }

    #[test]
    fn boolean_operators() {
        let q = parse_query("fire NOT drill").unwrap();
        assert!(!evaluate_match(&q, "fire drill today"));
        assert!(evaluate_match(&q, "fire today"));
        let q = parse_query("fire AND (berlin OR hamburg)").unwrap();
        assert!(evaluate_match(&q, "fire in hamburg"));
        assert!(!evaluate_match(&q, "fire in munich"));
    }

    #[test]
    fn umlauts_are_word_characters() {
        assert_eq!(word_tokens("#Debüt mit 1:0"), ["debüt", "mit", "1", "0"]);
    }
}
