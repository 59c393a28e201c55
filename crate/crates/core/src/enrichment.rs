//! Computed metadata for gathered activities: classification attributes
//! (sentiment factors, emoticon and slang conversion), content attributes
//! (length, readability and entropy metrics) and metadata attributes
//! (hyperlinks, mentions, tags, language).
//!
//! Tokenization rules used throughout:
//! - words are whitespace-separated tokens of the raw body;
//! - sentences are segments between runs of `.`, `!` or `?` (at least one
//!   for non-empty text);
//! - syllables are vowel groups, at least one per word containing a letter;
//! - entropy is the Shannon entropy in bits of the character distribution.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::activity::{Activity, EnrichedData};
use crate::adapters::schema::{native_counts, NATIVE_RECORD_KEY};
use crate::query::word_tokens;

#[derive(Debug, Error)]
pub enum ResourceError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// Lexicons, conversion dictionaries and stopword lists. Read-only once
/// loaded and shared across enrichment workers.
#[derive(Debug, Clone)]
pub struct EnrichmentResources {
    pub fear: HashSet<String>,
    pub happiness: HashSet<String>,
    pub emoticons: HashMap<String, String>,
    pub slang: HashMap<String, String>,
    pub stopwords: BTreeMap<String, HashSet<String>>,
}

fn word_list(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

impl EnrichmentResources {
    /// Resources compiled into the binary (same content as `config/resources`).
    pub fn builtin() -> Self {
        let map = |s: &str| serde_json::from_str(s).expect("builtin map is valid JSON");
        let stopwords = [
            (
                "de",
                include_str!("../../../config/resources/stopwords/de.txt"),
            ),
            (
                "en",
                include_str!("../../../config/resources/stopwords/en.txt"),
            ),
            (
                "es",
                include_str!("../../../config/resources/stopwords/es.txt"),
            ),
            (
                "fr",
                include_str!("../../../config/resources/stopwords/fr.txt"),
            ),
        ]
        .into_iter()
        .map(|(code, text)| (code.to_string(), word_list(text)))
        .collect();
        Self {
            fear: word_list(include_str!("../../../config/resources/fear.txt")),
            happiness: word_list(include_str!("../../../config/resources/happiness.txt")),
            emoticons: map(include_str!("../../../config/resources/emoticons.json")),
            slang: map(include_str!("../../../config/resources/slang.json")),
            stopwords,
        }
    }

    /// Loads `fear.txt`, `happiness.txt`, `emoticons.json`, `slang.json`
    /// and every `stopwords/<code>.txt` below `dir`.
    pub fn load(dir: &Path) -> Result<Self, ResourceError> {
        let read = |p: &Path| {
            fs::read_to_string(p).map_err(|source| ResourceError::Io {
                path: p.display().to_string(),
                source,
            })
        };
        let read_map = |name: &str| -> Result<HashMap<String, String>, ResourceError> {
            let p = dir.join(name);
            serde_json::from_str(&read(&p)?).map_err(|source| ResourceError::Json {
                path: p.display().to_string(),
                source,
            })
        };
        let sw_dir = dir.join("stopwords");
        let entries = fs::read_dir(&sw_dir).map_err(|source| ResourceError::Io {
            path: sw_dir.display().to_string(),
            source,
        })?;
        let mut stopwords = BTreeMap::new();
        for entry in entries.flatten() {
            let path = entry.path();
            if path.extension().and_then(|e| e.to_str()) == Some("txt") {
                if let Some(code) = path.file_stem().and_then(|s| s.to_str()) {
                    stopwords.insert(code.to_string(), word_list(&read(&path)?));
                }
            }
        }
        Ok(Self {
            fear: word_list(&read(&dir.join("fear.txt"))?),
            happiness: word_list(&read(&dir.join("happiness.txt"))?),
            emoticons: read_map("emoticons.json")?,
            slang: read_map("slang.json")?,
            stopwords,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Entities {
    pub embedded_urls: Vec<String>,
    pub mentions: Vec<String>,
    pub tags: Vec<String>,
}

fn is_handle_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn push_unique(list: &mut Vec<String>, s: &str) {
    if !list.iter().any(|x| x == s) {
        list.push(s.to_string());
    }
}

/// Scans `text` for `@handle` / `#tag` markers that start a word.
fn scan_markers(text: &str, out: &mut Entities) {
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let starts_word = i == 0 || !is_handle_char(chars[i - 1]);
        if (c == '@' || c == '#') && starts_word {
            let end = chars[i + 1..]
                .iter()
                .position(|&c| !is_handle_char(c))
                .map_or(chars.len(), |p| p + i + 1);
            if end > i + 1 {
                let name: String = chars[i + 1..end].iter().collect();
                let list = if c == '@' {
                    &mut out.mentions
                } else {
                    &mut out.tags
                };
                push_unique(list, &name);
            }
            i = end.max(i + 1);
        } else {
            i += 1;
        }
    }
}

fn url_start(token: &str) -> Option<usize> {
    match (token.find("http://"), token.find("https://")) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}

/// Sentence punctuation that ends a URL rather than belonging to it.
const URL_TRAILING: &[char] = &['.', ',', ';', ':', '!', '?', ')', ']', '"', '\''];

pub fn extract_entities(text: &str) -> Entities {
    let mut out = Entities::default();
    for token in text.split_whitespace() {
        match url_start(token) {
            Some(at) => {
                scan_markers(&token[..at], &mut out);
                let url = token[at..].trim_end_matches(URL_TRAILING);
                if url != "http://" && url != "https://" {
                    push_unique(&mut out.embedded_urls, url);
                }
            }
            None => scan_markers(token, &mut out),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ContentMetrics {
    pub num_of_characters: u64,
    pub num_of_words: u64,
    pub avg_word_length: f64,
    pub words_to_sentences_ratio: f64,
    pub num_punctuation: u64,
    pub syllables_per_word: f64,
    pub entropy: f64,
}

const PUNCTUATION: &[char] = &['.', ',', ';', ':', '!', '?', '"', '\'', '(', ')', '-'];
const VOWELS: &str = "aeiouyäöüáàâéèêëíìîïóòôúùûæøå";

pub fn sentence_count(text: &str) -> u64 {
    if text.trim().is_empty() {
        return 0;
    }
    let n = text
        .split(['.', '!', '?'])
        .filter(|s| !s.trim().is_empty())
        .count() as u64;
    n.max(1)
}

pub fn syllables(word: &str) -> u64 {
    let mut groups = 0;
    let mut in_vowel = false;
    for c in word.chars().flat_map(char::to_lowercase) {
        let v = VOWELS.contains(c);
        if v && !in_vowel {
            groups += 1;
        }
        in_vowel = v;
    }
    if groups == 0 && word.chars().any(char::is_alphabetic) {
        1
    } else {
        groups
    }
}

/// Shannon entropy in bits of the character frequency distribution.
/// Summed in character order so the result is reproducible to the bit.
pub fn shannon_entropy(text: &str) -> f64 {
    let mut counts: BTreeMap<char, u64> = BTreeMap::new();
    let mut n = 0u64;
    for c in text.chars() {
        *counts.entry(c).or_default() += 1;
        n += 1;
    }
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    counts
        .values()
        .map(|&c| {
            let c = c as f64;
            (c / n) * (n / c).log2()
        })
        .sum()
}

pub fn compute_content_metrics(text: &str) -> ContentMetrics {
    let words: Vec<&str> = text.split_whitespace().collect();
    if words.is_empty() {
        return ContentMetrics {
            num_of_characters: text.chars().count() as u64,
            ..ContentMetrics::default()
        };
    }
    let n = words.len() as f64;
    let total_len: usize = words.iter().map(|w| w.chars().count()).sum();
    let total_syll: u64 = words.iter().map(|w| syllables(w)).sum();
    ContentMetrics {
        num_of_characters: text.chars().count() as u64,
        num_of_words: words.len() as u64,
        avg_word_length: total_len as f64 / n,
        words_to_sentences_ratio: n / sentence_count(text) as f64,
        num_punctuation: text.chars().filter(|c| PUNCTUATION.contains(c)).count() as u64,
        syllables_per_word: total_syll as f64 / n,
        entropy: shannon_entropy(text),
    }
}

/// Replaces whole whitespace-delimited tokens found in `map`, keeping the
/// original whitespace between tokens.
fn replace_tokens(text: &str, lookup: impl Fn(&str) -> Option<String>) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while !rest.is_empty() {
        let ws_end = rest
            .find(|c: char| !c.is_whitespace())
            .unwrap_or(rest.len());
        out.push_str(&rest[..ws_end]);
        rest = &rest[ws_end..];
        let tok_end = rest.find(char::is_whitespace).unwrap_or(rest.len());
        let token = &rest[..tok_end];
        match lookup(token) {
            Some(replacement) => out.push_str(&replacement),
            None => out.push_str(token),
        }
        rest = &rest[tok_end..];
    }
    out
}

pub fn convert_emoticons(text: &str, map: &HashMap<String, String>) -> String {
    replace_tokens(text, |t| map.get(t).cloned())
}

/// Slang keys match case-insensitively.
pub fn convert_slang(text: &str, map: &HashMap<String, String>) -> String {
    replace_tokens(text, |t| map.get(&t.to_lowercase()).cloned())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Sentiment {
    pub abs_fear_factor: u64,
    pub abs_happiness_factor: u64,
}

/// Counts lexicon hits per word token after emoticon and slang
/// conversion. Each original token counts towards at most one class: the
/// class of the first lexicon word in its converted form.
pub fn compute_sentiment(text: &str, res: &EnrichmentResources) -> Sentiment {
    let mut s = Sentiment::default();
    for token in text.split_whitespace() {
        let converted = res
            .emoticons
            .get(token)
            .or_else(|| res.slang.get(&token.to_lowercase()))
            .map(String::as_str)
            .unwrap_or(token);
        for word in word_tokens(converted) {
            if res.fear.contains(&word) {
                s.abs_fear_factor += 1;
                break;
            }
            if res.happiness.contains(&word) {
                s.abs_happiness_factor += 1;
                break;
            }
        }
    }
    s
}

/// Stopword-overlap language guess. URLs, mentions and hashtags are not
/// language evidence. Returns `"und"` when nothing matches or the best
/// score is tied.
pub fn detect_language(text: &str, stopwords: &BTreeMap<String, HashSet<String>>) -> String {
    let words: Vec<String> = text
        .split_whitespace()
        .filter(|t| url_start(t).is_none() && !t.starts_with('@') && !t.starts_with('#'))
        .flat_map(word_tokens)
        .collect();
    let mut best: Option<(&str, usize)> = None;
    let mut tied = false;
    for (code, list) in stopwords {
        let hits = words.iter().filter(|w| list.contains(*w)).count();
        if hits == 0 {
            continue;
        }
        match best {
            Some((_, b)) if hits < b => {}
            Some((_, b)) if hits == b => tied = true,
            _ => {
                best = Some((code, hits));
                tied = false;
            }
        }
    }
    match best {
        Some((code, _)) if !tied => code.to_string(),
        _ => "und".to_string(),
    }
}

pub struct Enricher {
    resources: EnrichmentResources,
}

impl Enricher {
    pub fn new(resources: EnrichmentResources) -> Self {
        Self { resources }
    }

    pub fn resources(&self) -> &EnrichmentResources {
        &self.resources
    }

    /// Populates `object.enrichedData`. The body is never modified; counters
    /// come from the retained native record when present, otherwise existing
    /// values are kept. Enriching twice yields the same document.
    pub fn enrich_activity(&self, a: &Activity) -> Activity {
        let text = &a.object.content;
        let res = &self.resources;
        let entities = extract_entities(text);
        let metrics = compute_content_metrics(text);
        let sentiment = compute_sentiment(text, res);
        let previous = a.object.enriched_data.clone().unwrap_or_default();

        let (mut reposts, mut likes, mut followers) = (
            previous.num_retweets,
            previous.num_likes,
            previous.num_followers,
        );
        if let (Some(native), Some(platform)) =
            (a.object.extensions.get(NATIVE_RECORD_KEY), a.platform())
        {
            let (r, l, f) = native_counts(platform, native);
            reposts = r.or(reposts);
            likes = l.or(likes);
            followers = f.or(followers);
        }

        let enriched = EnrichedData {
            abs_fear_factor: Some(sentiment.abs_fear_factor),
            abs_happiness_factor: Some(sentiment.abs_happiness_factor),
            converted_emoticons: Some(convert_emoticons(text, &res.emoticons)),
            converted_slang: Some(convert_slang(text, &res.slang)),
            embedded_urls: Some(entities.embedded_urls),
            language: Some(detect_language(text, &res.stopwords)),
            tags: Some(entities.tags),
            mentions: Some(entities.mentions),
            media: previous.media,
            num_of_characters: Some(metrics.num_of_characters),
            num_of_words: Some(metrics.num_of_words),
            avg_word_length: Some(metrics.avg_word_length),
            words_to_sentences_ratio: Some(metrics.words_to_sentences_ratio),
            num_punctuation: Some(metrics.num_punctuation),
            syllables_per_word: Some(metrics.syllables_per_word),
            entropy: Some(metrics.entropy),
            num_retweets: reposts,
            num_likes: likes,
            num_followers: followers,
            extensions: previous.extensions,
        };
        let mut out = a.clone();
        out.object.enriched_data = Some(enriched);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activity::parse_activity;

    const REFERENCE_TEXT: &str =
        "RT @bzberlin: #Debüt mit 1:0 gegen @SERCWildWings https://t.co/UNlq698PIJ";

    fn res() -> EnrichmentResources {
        EnrichmentResources::builtin()
    }

    #[test]
    fn entities_from_reference_tweet() {
        let e = extract_entities(REFERENCE_TEXT);
        assert_eq!(e.embedded_urls, ["https://t.co/UNlq698PIJ"]);
        assert_eq!(e.mentions, ["bzberlin", "SERCWildWings"]);
        assert_eq!(e.tags, ["Debüt"]);
    }

    #[test]
    fn entities_edge_cases() {
        assert_eq!(extract_entities(""), Entities::default());
        let e = extract_entities("@a @a #b");
        assert_eq!(e.mentions, ["a"]);
        assert_eq!(e.tags, ["b"]);
        let e = extract_entities("mail me at x@example.org or see:https://a.b/c#frag #real");
        assert!(e.mentions.is_empty());
        assert_eq!(e.embedded_urls, ["https://a.b/c#frag"]);
        assert_eq!(e.tags, ["real"]);
        let e = extract_entities("see https://t.co/x1. (or https://a.b/c), then https://");
        assert_eq!(e.embedded_urls, ["https://t.co/x1", "https://a.b/c"]);
    }

    #[test]
    fn entropy_is_bit_stable() {
        let s = "happy very volunteer on in this the berlin outage here https://t.co/x76e450f6";
        let first = shannon_entropy(s).to_bits();
        assert!((0..50).all(|_| shannon_entropy(s).to_bits() == first));
    }

    #[test]
    fn entropy_values() {
        assert_eq!(shannon_entropy("aaaa"), 0.0);
        assert!((shannon_entropy("ab") - 1.0).abs() < 1e-12);
        assert!((shannon_entropy("abcd") - 2.0).abs() < 1e-12);
        assert_eq!(shannon_entropy(""), 0.0);
    }

    #[test]
    fn hand_counted_metrics() {
        let m = compute_content_metrics("Fire near me. Stay away!");
        assert_eq!(m.num_of_words, 5);
        assert_eq!(sentence_count("Fire near me. Stay away!"), 2);
        assert_eq!(m.words_to_sentences_ratio, 2.5);
        assert_eq!(m.num_punctuation, 2);
        assert_eq!(m.num_of_characters, 24);
        // Fire(2) near(1) me.(1) Stay(1: ay) away!(2: a, ay)
        assert_eq!(m.syllables_per_word, 7.0 / 5.0);
        assert_eq!(m.avg_word_length, 20.0 / 5.0);
    }

    #[test]
    fn empty_text_metrics_are_zero() {
        assert_eq!(compute_content_metrics(""), ContentMetrics::default());
        assert_eq!(syllables("1:0"), 0);
        assert_eq!(syllables("hmm"), 1);
    }

    #[test]
    fn sentiment_counts() {
        let mut r = res();
        r.happiness = ["happy".to_string()].into();
        r.fear = ["fire".to_string()].into();
        let s = compute_sentiment("happy happy fire", &r);
        assert_eq!((s.abs_happiness_factor, s.abs_fear_factor), (2, 1));
        assert_eq!(compute_sentiment("", &r), Sentiment::default());
        // Emoticons and slang are converted before lookup.
        assert_eq!(compute_sentiment(":)", &r).abs_happiness_factor, 1);
        let s = compute_sentiment(REFERENCE_TEXT, &res());
        assert_eq!(s, Sentiment::default());
    }

    #[test]
    fn conversions() {
        let m: HashMap<_, _> = [(":)".to_string(), "happy".to_string())].into();
        assert_eq!(convert_emoticons(":)", &m), "happy");
        assert_eq!(convert_emoticons("so :) !", &m), "so happy !");
        let s: HashMap<_, _> = [("lol".to_string(), "laughing out loud".to_string())].into();
        assert_eq!(convert_slang("lol ok", &s), "laughing out loud ok");
        assert_eq!(convert_slang("LOL  ok", &s), "laughing out loud  ok");
        assert_eq!(convert_slang("lolz ok", &s), "lolz ok");
    }

    #[test]
    fn language_guesses() {
        let sw = &res().stopwords;
        assert_eq!(detect_language(REFERENCE_TEXT, sw), "de");
        assert_eq!(detect_language("the fire is near the house", sw), "en");
        assert_eq!(detect_language("12345", sw), "und");
        assert_eq!(detect_language("", sw), "und");
    }

    #[test]
    fn reference_activity_reenriched() {
        let doc = include_str!("../../../fixtures/golden/reference_activity.json");
        let a = parse_activity(doc).unwrap();
        let e = Enricher::new(res()).enrich_activity(&a);
        let (old, new) = (a.enriched().unwrap(), e.enriched().unwrap());
        assert_eq!(new.embedded_urls, old.embedded_urls);
        assert_eq!(new.mentions, old.mentions);
        assert_eq!(new.tags, old.tags);
        assert_eq!(new.language, old.language);
        assert_eq!(new.media, old.media);
        assert_eq!(new.num_retweets, Some(3));
        assert_eq!(new.abs_fear_factor, Some(0));
        assert_eq!(e.object.content, a.object.content);
    }

    #[test]
    fn empty_content_enrichment() {
        let doc = include_str!("../../../fixtures/golden/reference_activity.json");
        let mut a = parse_activity(doc).unwrap();
        a.object.content = String::new();
        let e = Enricher::new(res()).enrich_activity(&a);
        let d = e.enriched().unwrap();
        assert_eq!(d.num_of_words, Some(0));
        assert_eq!(d.entropy, Some(0.0));
        assert_eq!(d.language.as_deref(), Some("und"));
    }

    #[test]
    fn loads_from_directory() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config/resources");
        let loaded = EnrichmentResources::load(&dir).unwrap();
        let builtin = res();
        assert_eq!(loaded.fear, builtin.fear);
        assert_eq!(loaded.stopwords, builtin.stopwords);
        assert!(EnrichmentResources::load(Path::new("/nonexistent")).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn entropy_is_bounded(s in "\\PC{0,60}") {
                let h = shannon_entropy(&s);
                let distinct = s.chars().collect::<HashSet<_>>().len();
                prop_assert!(h >= 0.0);
                if distinct > 0 {
                    prop_assert!(h <= (distinct as f64).log2() + 1e-9);
                }
            }

            #[test]
            fn entity_lists_are_unique(s in "[@# a-c:/htps.]{0,40}") {
                let e = extract_entities(&s);
                for list in [&e.embedded_urls, &e.mentions, &e.tags] {
                    let set: HashSet<_> = list.iter().collect();
                    prop_assert_eq!(set.len(), list.len());
                }
                prop_assert!(e.tags.iter().all(|t| !t.starts_with('#')));
            }

            #[test]
            fn single_token_maps_keep_token_count(words in prop::collection::vec("(lol|thx|u|x|y|:\\)|<3)", 0..12)) {
                let text = words.join(" ");
                let r = res();
                let single: HashMap<String, String> = [("thx", "thanks"), ("u", "you"), ("x", "ex")]
                    .into_iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
                let before = text.split_whitespace().count();
                prop_assert_eq!(convert_slang(&text, &single).split_whitespace().count(), before);
                prop_assert_eq!(convert_emoticons(&text, &r.emoticons).split_whitespace().count(), before);
            }

            #[test]
            fn sentiment_union_bound(words in prop::collection::vec("(fire|happy|lol|omg|:\\)|the|storm|love)", 0..20)) {
                let text = words.join(" ");
                let r = res();
                let s = compute_sentiment(&text, &r);
                let m = compute_content_metrics(&text);
                prop_assert!(s.abs_fear_factor + s.abs_happiness_factor <= m.num_of_words);
            }
        }
    }
}
