//! Normalized activity documents.
//!
//! Every gathered item is mapped into an ActivityStreams 2.0 shaped document:
//! an `actor`, an `object` and an optional verb. Attributes that AS2 core has
//! no member for live under `object.enrichedData`. Unknown members are kept in
//! per-level extension maps so a parse/serialize cycle never drops data.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, FixedOffset, SecondsFormat};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};
use thiserror::Error;

/// Verb assumed when a document does not carry one.
pub const DEFAULT_VERB: &str = "post";

#[derive(Debug, Error)]
pub enum ActivityError {
    #[error("malformed JSON: {0}")]
    Malformed(#[source] serde_json::Error),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invalid activity: {}", format_violations(.0))]
    Invalid(Vec<Violation>),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Platform {
    Facebook,
    #[serde(rename = "googleplus")]
    GooglePlus,
    Instagram,
    Twitter,
    Youtube,
}

impl Platform {
    pub const ALL: [Platform; 5] = [
        Platform::Facebook,
        Platform::GooglePlus,
        Platform::Instagram,
        Platform::Twitter,
        Platform::Youtube,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Platform::Facebook => "facebook",
            Platform::GooglePlus => "googleplus",
            Platform::Instagram => "instagram",
            Platform::Twitter => "twitter",
            Platform::Youtube => "youtube",
        }
    }
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown platform {0:?}")]
pub struct UnknownPlatform(pub String);

impl FromStr for Platform {
    type Err = UnknownPlatform;

    /// Accepts the canonical lowercase names plus the display spellings
    /// used in request payloads ("Google+", "YouTube").
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "facebook" => Ok(Platform::Facebook),
            "googleplus" | "google+" | "google_plus" => Ok(Platform::GooglePlus),
            "instagram" => Ok(Platform::Instagram),
            "twitter" => Ok(Platform::Twitter),
            "youtube" => Ok(Platform::Youtube),
            _ => Err(UnknownPlatform(s.to_string())),
        }
    }
}

/// `<platform>:<native_id>`; the first `:` separates the two parts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlatformId {
    pub platform: Platform,
    pub native_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlatformIdError {
    #[error("id missing platform prefix")]
    MissingPrefix,
    #[error("id has unknown platform prefix {0:?}")]
    UnknownPlatform(String),
    #[error("id has empty native id")]
    EmptyNativeId,
}

impl PlatformId {
    pub fn new(platform: Platform, native_id: impl Into<String>) -> Self {
        Self {
            platform,
            native_id: native_id.into(),
        }
    }
}

impl fmt::Display for PlatformId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.platform, self.native_id)
    }
}

impl FromStr for PlatformId {
    type Err = PlatformIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (prefix, native) = s.split_once(':').ok_or(PlatformIdError::MissingPrefix)?;
        let platform = match prefix {
            "facebook" => Platform::Facebook,
            "googleplus" => Platform::GooglePlus,
            "instagram" => Platform::Instagram,
            "twitter" => Platform::Twitter,
            "youtube" => Platform::Youtube,
            other => return Err(PlatformIdError::UnknownPlatform(other.to_string())),
        };
        if native.is_empty() {
            return Err(PlatformIdError::EmptyNativeId);
        }
        Ok(PlatformId::new(platform, native))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Actor {
    pub id: String,
    #[serde(rename = "displayName")]
    pub display_name: String,
    #[serde(rename = "type")]
    pub kind: String,
    pub url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content: Option<String>,
    #[serde(flatten)]
    pub extensions: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub latitude: f64,
    pub longitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub altitude: Option<f64>,
    #[serde(
        rename = "displayName",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub display_name: Option<String>,
    #[serde(rename = "type", default = "place_kind")]
    pub kind: String,
    #[serde(flatten)]
    pub extensions: Map<String, Value>,
}

fn place_kind() -> String {
    "place".to_string()
}

impl GeoPoint {
    pub fn new(latitude: f64, longitude: f64) -> Self {
        Self {
            latitude,
            longitude,
            altitude: None,
            display_name: None,
            kind: place_kind(),
            extensions: Map::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediaKind {
    Photo,
    Video,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediaAttachment {
    #[serde(rename = "mediaType")]
    pub media_type: String,
    #[serde(rename = "type")]
    pub kind: MediaKind,
    pub url: String,
}

/// Computed metadata attached to an activity object. Every member is
/// optional so partially enriched documents parse and re-serialize as-is.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EnrichedData {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_fear_factor: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_happiness_factor: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converted_emoticons: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converted_slang: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedded_urls: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tags: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mentions: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub media: Option<MediaAttachment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_of_characters: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_of_words: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avg_word_length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub words_to_sentences_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_punctuation: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub syllables_per_word: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_retweets: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_likes: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_followers: Option<u64>,
    #[serde(flatten)]
    pub extensions: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityObject {
    pub id: String,
    #[serde(rename = "type")]
    pub kind: String,
    pub content: String,
    pub url: String,
    #[serde(rename = "startTime", with = "iso_millis")]
    pub start_time: DateTime<FixedOffset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<GeoPoint>,
    #[serde(
        rename = "enrichedData",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub enriched_data: Option<EnrichedData>,
    #[serde(flatten)]
    pub extensions: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Activity {
    pub actor: Actor,
    pub object: ActivityObject,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verb: Option<String>,
    #[serde(flatten)]
    pub extensions: Map<String, Value>,
}

impl Activity {
    pub fn verb(&self) -> &str {
        self.verb.as_deref().unwrap_or(DEFAULT_VERB)
    }

    /// Compound key `(platform, native_id)`, if the object id is well formed.
    pub fn key(&self) -> Option<PlatformId> {
        self.object.id.parse().ok()
    }

    pub fn platform(&self) -> Option<Platform> {
        self.key().map(|k| k.platform)
    }

    pub fn enriched(&self) -> Option<&EnrichedData> {
        self.object.enriched_data.as_ref()
    }
}

/// ISO-8601 with millisecond precision and explicit offset,
/// e.g. `2017-02-01T10:30:47.000+01:00`.
pub fn format_timestamp(t: &DateTime<FixedOffset>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, false)
}

mod iso_millis {
    use super::*;

    pub fn serialize<S: Serializer>(t: &DateTime<FixedOffset>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_timestamp(t))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<FixedOffset>, D::Error> {
        let raw = String::deserialize(d)?;
        DateTime::parse_from_rfc3339(&raw).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn is_language_code(code: &str) -> bool {
    code == "und" || (code.len() == 2 && code.bytes().all(|b| b.is_ascii_lowercase()))
}

/// Checks every structural invariant of the document model. Violations are
/// returned as data; an empty list means the activity is valid.
pub fn validate_activity(a: &Activity) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();

    let object_id = match a.object.id.parse::<PlatformId>() {
        Ok(id) => Some(id),
        Err(e) => {
            out.push(Violation::new("object.id", e.to_string()));
            None
        }
    };
    match a.actor.id.parse::<PlatformId>() {
        Ok(actor_id) => {
            if let Some(object_id) = &object_id {
                if actor_id.platform != object_id.platform {
                    out.push(Violation::new(
                        "actor.id",
                        "actor platform differs from object platform",
                    ));
                }
            }
        }
        Err(e) => out.push(Violation::new("actor.id", e.to_string())),
    }

    if let Some(loc) = &a.object.location {
        if !(-90.0..=90.0).contains(&loc.latitude) {
            out.push(Violation::new(
                "object.location.latitude",
                "latitude out of range",
            ));
        }
        if !(-180.0..=180.0).contains(&loc.longitude) {
            out.push(Violation::new(
                "object.location.longitude",
                "longitude out of range",
            ));
        }
    }

    if let Some(e) = &a.object.enriched_data {
        if let Some(media) = &e.media {
            if media.url.is_empty() {
                out.push(Violation::new(
                    "object.enrichedData.media.url",
                    "media url is empty",
                ));
            }
        }
        if let Some(tags) = &e.tags {
            if tags.iter().any(|t| t.starts_with('#')) {
                out.push(Violation::new(
                    "object.enrichedData.tags",
                    "tag carries '#' prefix",
                ));
            }
        }
        if let Some(mentions) = &e.mentions {
            if mentions.iter().any(|m| m.starts_with('@')) {
                out.push(Violation::new(
                    "object.enrichedData.mentions",
                    "mention carries '@' prefix",
                ));
            }
        }
        if let Some(lang) = &e.language {
            if !is_language_code(lang) {
                out.push(Violation::new(
                    "object.enrichedData.language",
                    "unknown language code",
                ));
            }
        }
        let reals = [
            ("avgWordLength", e.avg_word_length),
            ("wordsToSentencesRatio", e.words_to_sentences_ratio),
            ("syllablesPerWord", e.syllables_per_word),
            ("entropy", e.entropy),
        ];
        for (name, value) in reals {
            if let Some(v) = value {
                if !v.is_finite() || v < 0.0 {
                    out.push(Violation::new(
                        format!("object.enrichedData.{name}"),
                        "must be a finite non-negative number",
                    ));
                }
            }
        }
    }

    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

pub fn serialize_activity(a: &Activity) -> Result<String, ActivityError> {
    validate_activity(a).map_err(ActivityError::Invalid)?;
    Ok(serde_json::to_string(a).expect("activity serialization is infallible"))
}

pub fn activity_to_value(a: &Activity) -> Value {
    serde_json::to_value(a).expect("activity serialization is infallible")
}

pub fn parse_activity(doc: &str) -> Result<Activity, ActivityError> {
    let value: Value = serde_json::from_str(doc).map_err(ActivityError::Malformed)?;
    activity_from_value(value)
}

pub fn activity_from_value(value: Value) -> Result<Activity, ActivityError> {
    let obj = value
        .as_object()
        .ok_or_else(|| ActivityError::Schema("document is not a JSON object".into()))?;
    for member in ["actor", "object"] {
        match obj.get(member) {
            Some(Value::Object(_)) => {}
            Some(_) => return Err(ActivityError::Schema(format!("{member} is not an object"))),
            None => return Err(ActivityError::Schema(format!("missing {member}"))),
        }
    }
    serde_json::from_value(value).map_err(|e| ActivityError::Schema(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ActivityCollection {
    items: Vec<Activity>,
}

impl ActivityCollection {
    pub fn new(items: Vec<Activity>) -> Self {
        Self { items }
    }

    pub fn items(&self) -> &[Activity] {
        &self.items
    }

    pub fn into_items(self) -> Vec<Activity> {
        self.items
    }

    pub fn total_items(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

#[derive(Serialize)]
struct CollectionOut<'a> {
    #[serde(rename = "type")]
    kind: &'static str,
    #[serde(rename = "totalItems")]
    total_items: usize,
    items: &'a [Activity],
}

#[derive(Deserialize)]
struct CollectionIn {
    #[serde(rename = "totalItems")]
    total_items: usize,
    items: Vec<Activity>,
}

impl Serialize for ActivityCollection {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        CollectionOut {
            kind: "Collection",
            total_items: self.items.len(),
            items: &self.items,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ActivityCollection {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = CollectionIn::deserialize(d)?;
        if raw.total_items != raw.items.len() {
            return Err(serde::de::Error::custom(format!(
                "totalItems {} does not match {} items",
                raw.total_items,
                raw.items.len()
            )));
        }
        Ok(ActivityCollection::new(raw.items))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const REFERENCE_DOC: &str =
        include_str!("../../../fixtures/golden/reference_activity.json");

    fn minimal() -> Activity {
        Activity {
            actor: Actor {
                id: "twitter:1".into(),
                display_name: "someone".into(),
                kind: "person".into(),
                url: "https://example.org/u/1".into(),
                content: None,
                extensions: Map::new(),
            },
            object: ActivityObject {
                id: "twitter:2".into(),
                kind: "post".into(),
                content: "hello".into(),
                url: "https://example.org/p/2".into(),
                start_time: DateTime::parse_from_rfc3339("2017-02-01T10:30:47.000+01:00").unwrap(),
                location: None,
                enriched_data: None,
                extensions: Map::new(),
            },
            verb: None,
            extensions: Map::new(),
        }
    }

    #[test]
    fn reference_doc_validates_and_exposes_fields() {
        let a = parse_activity(REFERENCE_DOC).unwrap();
        assert!(validate_activity(&a).is_ok());
        assert_eq!(a.object.location.as_ref().unwrap().latitude, 50.78506988);
        assert_eq!(a.verb(), "post");
        let e = a.enriched().unwrap();
        assert_eq!(
            e.mentions.as_deref().unwrap(),
            ["bzberlin".to_string(), "SERCWildWings".to_string()]
        );
        assert_eq!(e.num_retweets, Some(3));
        assert_eq!(
            a.key().unwrap(),
            PlatformId::new(Platform::Twitter, "823724465664883940")
        );
    }

    #[test]
    fn reference_doc_round_trips_exactly() {
        let original: Value = serde_json::from_str(REFERENCE_DOC).unwrap();
        let a = parse_activity(REFERENCE_DOC).unwrap();
        let back: Value = serde_json::from_str(&serialize_activity(&a).unwrap()).unwrap();
        assert_eq!(original, back);
    }

    #[test]
    fn unknown_keys_survive() {
        let mut v: Value = serde_json::from_str(REFERENCE_DOC).unwrap();
        v["foo"] = Value::from(1);
        v["object"]["enrichedData"]["customScore"] = Value::from(0.25);
        let a = parse_activity(&v.to_string()).unwrap();
        let back: Value = serde_json::from_str(&serialize_activity(&a).unwrap()).unwrap();
        assert_eq!(back["foo"], Value::from(1));
        assert_eq!(back, v);
    }

    #[test]
    fn minimal_omits_optional_members() {
        let text = serialize_activity(&minimal()).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        assert!(v["object"].get("location").is_none());
        assert!(v["object"].get("enrichedData").is_none());
        assert!(v.get("verb").is_none());
        assert_eq!(v["object"]["startTime"], "2017-02-01T10:30:47.000+01:00");
    }

    #[test]
    fn latitude_out_of_range_is_reported() {
        let mut a = minimal();
        a.object.location = Some(GeoPoint::new(95.0, 8.0));
        let v = validate_activity(&a).unwrap_err();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].message, "latitude out of range");
        assert!(matches!(
            serialize_activity(&a),
            Err(ActivityError::Invalid(_))
        ));
    }

    #[test]
    fn missing_prefix_is_reported() {
        let mut a = minimal();
        a.object.id = "823724465664883940".into();
        a.actor.id = "823724465664883940".into();
        let v = validate_activity(&a).unwrap_err();
        assert!(v
            .iter()
            .any(|v| v.field == "object.id" && v.message == "id missing platform prefix"));
    }

    #[test]
    fn actor_platform_must_match() {
        let mut a = minimal();
        a.actor.id = "youtube:1".into();
        assert_eq!(validate_activity(&a).unwrap_err()[0].field, "actor.id");
    }

    #[test]
    fn empty_document_is_schema_error() {
        assert!(matches!(
            parse_activity("{}"),
            Err(ActivityError::Schema(_))
        ));
        assert!(matches!(
            parse_activity("{"),
            Err(ActivityError::Malformed(_))
        ));
        assert!(matches!(
            parse_activity(r#"{"actor":{},"object":3}"#),
            Err(ActivityError::Schema(_))
        ));
    }

    #[test]
    fn platform_id_splits_on_first_colon() {
        let id: PlatformId = "youtube:abc:def".parse().unwrap();
        assert_eq!(id.native_id, "abc:def");
        assert_eq!(id.to_string(), "youtube:abc:def");
        assert_eq!(
            "twitter:".parse::<PlatformId>(),
            Err(PlatformIdError::EmptyNativeId)
        );
        assert!(matches!(
            "myspace:1".parse::<PlatformId>(),
            Err(PlatformIdError::UnknownPlatform(_))
        ));
    }

    #[test]
    fn timestamp_keeps_offset() {
        let a = minimal();
        let back = parse_activity(&serialize_activity(&a).unwrap()).unwrap();
        assert_eq!(back.object.start_time, a.object.start_time);
        assert_eq!(
            back.object.start_time.offset(),
            a.object.start_time.offset()
        );
    }

    #[test]
    fn collection_counts_items() {
        let c = ActivityCollection::new(vec![minimal(), minimal()]);
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["totalItems"], 2);
        let back: ActivityCollection = serde_json::from_value(v.clone()).unwrap();
        assert_eq!(back, c);
        let mut bad = v;
        bad["totalItems"] = Value::from(5);
        assert!(serde_json::from_value::<ActivityCollection>(bad).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn platform_id_text_round_trips(idx in 0usize..5, native in "[A-Za-z0-9_:-]{1,20}") {
                let id = PlatformId::new(Platform::ALL[idx], native);
                prop_assert_eq!(id.to_string().parse::<PlatformId>().unwrap(), id);
            }

            #[test]
            fn timestamps_round_trip(secs in 0i64..4_000_000_000, millis in 0u32..1000, off_min in -720i32..=840) {
                let off = FixedOffset::east_opt(off_min * 60).unwrap();
                let t = DateTime::from_timestamp(secs, millis * 1_000_000).unwrap().with_timezone(&off);
                let mut a = minimal();
                a.object.start_time = t;
                let back = parse_activity(&serialize_activity(&a).unwrap()).unwrap();
                prop_assert_eq!(back.object.start_time, t);
                prop_assert_eq!(back.object.start_time.offset().local_minus_utc(), off.local_minus_utc());
            }
        }
    }
}
