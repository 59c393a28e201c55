//! Deterministic synthetic corpora in each platform's native layout.
//!
//! Texts mix query vocabulary with filler words that never occur in the
//! vocabulary, so tests can build queries whose brute-force answer is known
//! to be non-trivial. Instagram captions write every vocabulary word as a
//! hashtag and list it under `tags`, which makes tag search complete for
//! vocabulary queries.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Duration, Utc};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::activity::{Activity, Platform};
use crate::adapters::{
    default_capabilities, map_native, AdapterError, FixtureAdapter, NativeItem, PlatformAdapter,
};
use crate::query::PlatformCapabilities;

/// Words queries are built from.
pub const VOCABULARY: &[&str] = &[
    "berlin",
    "fire",
    "flood",
    "storm",
    "rescue",
    "police",
    "traffic",
    "water",
    "power",
    "school",
    "train",
    "bridge",
    "smoke",
    "help",
    "shelter",
    "alarm",
    "road",
    "river",
    "snow",
    "quake",
    "siegen",
    "volunteer",
    "hospital",
    "outage",
];

const FILLER_EN: &[&str] = &[
    "the", "in", "near", "today", "we", "are", "now", "this", "at", "on", "is", "still", "people",
    "area", "update", "news", "city", "street", "live", "photo", "very", "here", "great", "happy",
    "afraid", "lol",
];

const FILLER_DE: &[&str] = &[
    "und", "die", "der", "ist", "nicht", "wir", "sind", "heute", "hier", "mit", "auf", "schon",
    "noch", "gefahr", "freude", "danke", "stadt", "leute",
];

const EMOTICONS: &[&str] = &[":)", ":(", ":D", ";)"];

/// City centers used for geotagged items.
pub const PLACES: &[(&str, f64, f64)] = &[
    ("Berlin, Deutschland", 52.5200, 13.4050),
    ("Siegen, Deutschland", 50.8748, 8.0243),
    ("Darmstadt, Deutschland", 49.8728, 8.6512),
    ("Hamburg, Deutschland", 53.5511, 9.9937),
    ("München, Deutschland", 48.1351, 11.5820),
];

/// Start of the default corpus time span (2017-02-01T00:00:00Z).
pub const CORPUS_START: i64 = 1_485_907_200;
pub const CORPUS_SPAN_SECS: i64 = 30 * 24 * 3600;

pub const DEFAULT_SEED: u64 = 2017;
pub const DEFAULT_SIZE: usize = 600;

/// The tweet behind the reference activity document.
pub fn reference_tweet() -> NativeItem {
    NativeItem(json!({
        "id_str": "823724465664883940",
        "text": "RT @bzberlin: #Debüt mit 1:0 gegen @SERCWildWings https://t.co/UNlq698PIJ",
        "created_at": "Wed Feb 01 09:30:47 +0000 2017",
        "coordinates": {"type": "Point", "coordinates": [8.00512706, 50.78506988]},
        "place": {"full_name": "Neunkirchen, Deutschland"},
        "retweet_count": 3,
        "user": {
            "id_str": "84430424271",
            "name": "anonymised",
            "screen_name": "anon",
            "url": "https://goo.gl/QqV2q6",
            "description": "56, Ironie, eigene Meinung",
            "utc_offset": 3600
        }
    }))
}

fn platform_salt(p: Platform) -> u64 {
    Platform::ALL.iter().position(|q| *q == p).unwrap_or(0) as u64 + 1
}

/// Builder for one platform's corpus.
pub struct CorpusGenerator {
    platform: Platform,
    rng: ChaCha8Rng,
    start: DateTime<Utc>,
    span_secs: i64,
    next_id: u64,
    vocabulary: Vec<String>,
    required: Vec<String>,
    geo_share: f64,
}

struct Draft {
    text: String,
    /// Secondary text (youtube description).
    extra: String,
    tags: Vec<String>,
    created: DateTime<Utc>,
    place: Option<(&'static str, f64, f64)>,
    serial: u64,
    reposts: u64,
    likes: u64,
    followers: u64,
    author: u64,
    media: bool,
}

impl CorpusGenerator {
    pub fn new(platform: Platform, seed: u64) -> Self {
        Self {
            platform,
            rng: ChaCha8Rng::seed_from_u64(
                seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ platform_salt(platform),
            ),
            start: DateTime::from_timestamp(CORPUS_START, 0).expect("valid start"),
            span_secs: CORPUS_SPAN_SECS,
            next_id: 1,
            vocabulary: VOCABULARY.iter().map(|s| s.to_string()).collect(),
            required: Vec::new(),
            geo_share: 0.6,
        }
    }

    /// Creation times are drawn uniformly from `[start, start + span)`.
    pub fn time_span(mut self, start: DateTime<Utc>, span_secs: i64) -> Self {
        self.start = start;
        self.span_secs = span_secs.max(1);
        self
    }

    /// Serial numbers (and so native ids) continue from `n`.
    pub fn ids_from(mut self, n: u64) -> Self {
        self.next_id = n;
        self
    }

    /// Words randomly mixed into texts; empty means filler only.
    pub fn vocabulary<S: AsRef<str>>(mut self, words: &[S]) -> Self {
        self.vocabulary = words.iter().map(|w| w.as_ref().to_lowercase()).collect();
        self
    }

    /// Words every generated text contains.
    pub fn requiring<S: AsRef<str>>(mut self, words: &[S]) -> Self {
        self.required = words.iter().map(|w| w.as_ref().to_lowercase()).collect();
        self
    }

    pub fn geo_share(mut self, share: f64) -> Self {
        self.geo_share = share.clamp(0.0, 1.0);
        self
    }

    fn words(&mut self) -> (Vec<String>, Vec<String>) {
        let german = self.rng.random_bool(0.3);
        let filler = if german { FILLER_DE } else { FILLER_EN };
        let n = self.rng.random_range(5..=14);
        let mut words = Vec::with_capacity(n + self.required.len());
        let mut vocab_used = Vec::new();
        for _ in 0..n {
            if !self.vocabulary.is_empty() && self.rng.random_bool(0.3) {
                let w = self
                    .vocabulary
                    .choose(&mut self.rng)
                    .expect("non-empty")
                    .clone();
                vocab_used.push(w.clone());
                words.push(w);
            } else {
                words.push(filler.choose(&mut self.rng).expect("non-empty").to_string());
            }
        }
        for w in self.required.clone() {
            let at = self.rng.random_range(0..=words.len());
            words.insert(at, w.clone());
            vocab_used.push(w);
        }
        vocab_used.sort();
        vocab_used.dedup();
        (words, vocab_used)
    }

    fn compose(&mut self, words: Vec<String>, vocab_used: &[String]) -> String {
        let hashtag_all = self.platform == Platform::Instagram;
        let mut out: Vec<String> = words
            .into_iter()
            .map(|w| {
                if vocab_used.contains(&w) && (hashtag_all || self.rng.random_bool(0.1)) {
                    format!("#{w}")
                } else {
                    w
                }
            })
            .collect();
        if self.rng.random_bool(0.2) {
            out.insert(0, format!("@user{}", self.rng.random_range(1..400)));
        }
        if self.rng.random_bool(0.15) {
            out.push(
                EMOTICONS
                    .choose(&mut self.rng)
                    .expect("non-empty")
                    .to_string(),
            );
        }
        if self.rng.random_bool(0.2) {
            let slug: u32 = self.rng.random();
            out.push(format!("https://t.co/x{slug:08x}"));
        }
        let mut text = out.join(" ");
        if self.rng.random_bool(0.5) {
            text.push(if self.rng.random_bool(0.7) { '.' } else { '!' });
        }
        text
    }

    fn draft(&mut self) -> Draft {
        let (words, mut tags) = self.words();
        let text = self.compose(words, &tags);
        let extra = if self.platform == Platform::Youtube {
            let saved = std::mem::take(&mut self.required);
            let (w, t) = self.words();
            self.required = saved;
            let extra = self.compose(w, &t);
            tags.extend(t);
            tags.sort();
            tags.dedup();
            extra
        } else {
            String::new()
        };
        let serial = self.next_id;
        self.next_id += 1;
        let created = self.start + Duration::seconds(self.rng.random_range(0..self.span_secs));
        let place = if self.rng.random_bool(self.geo_share) {
            let (name, lat, lon) = *PLACES.choose(&mut self.rng).expect("non-empty");
            let jitter = |rng: &mut ChaCha8Rng| rng.random_range(-0.3..0.3);
            let (dlat, dlon) = (jitter(&mut self.rng), jitter(&mut self.rng));
            Some((name, round6(lat + dlat), round6(lon + dlon)))
        } else {
            None
        };
        Draft {
            text,
            extra,
            tags,
            created,
            place,
            serial,
            reposts: self.rng.random_range(0..50),
            likes: self.rng.random_range(0..500),
            followers: self.rng.random_range(0..20_000),
            author: self.rng.random_range(1..300),
            media: self.rng.random_bool(0.3),
        }
    }

    pub fn generate(&mut self, n: usize) -> Vec<NativeItem> {
        (0..n)
            .map(|_| {
                let d = self.draft();
                NativeItem(render(self.platform, &d))
            })
            .collect()
    }
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn render(platform: Platform, d: &Draft) -> Value {
    let ts = d.created;
    match platform {
        Platform::Twitter => {
            let mut v = json!({
                "id_str": format!("{}", 900_000_000_000_000_000u64 + d.serial),
                "text": d.text,
                "created_at": ts.format("%a %b %d %H:%M:%S +0000 %Y").to_string(),
                "retweet_count": d.reposts,
                "favorite_count": d.likes,
                "user": {
                    "id_str": format!("{}", 70_000 + d.author),
                    "name": format!("User {}", d.author),
                    "screen_name": format!("user{}", d.author),
                    "followers_count": d.followers,
                    "utc_offset": (d.author % 3) * 3600
                }
            });
            if let Some((name, lat, lon)) = d.place {
                v["coordinates"] = json!({"type": "Point", "coordinates": [lon, lat]});
                v["place"] = json!({"full_name": name});
            }
            if d.media {
                v["entities"] = json!({"media": [{
                    "type": "photo",
                    "media_url_https": format!("https://pbs.twimg.com/media/m{}.jpg", d.serial)
                }]});
            }
            v
        }
        Platform::Facebook => {
            let page = 1000 + d.author;
            let id = format!("{page}_{}", d.serial);
            let mut v = json!({
                "id": id,
                "message": d.text,
                "created_time": ts.format("%Y-%m-%dT%H:%M:%S+0000").to_string(),
                "from": {"id": page.to_string(), "name": format!("Page {page}")},
                "likes": {"summary": {"total_count": d.likes}},
                "permalink_url": format!("https://www.facebook.com/{page}/posts/{}", d.serial)
            });
            if let Some((name, lat, lon)) = d.place {
                v["place"] = json!({"name": name, "location": {"latitude": lat, "longitude": lon}});
            }
            if d.media {
                v["full_picture"] =
                    json!(format!("https://scontent.xx.fbcdn.net/p{}.jpg", d.serial));
            }
            v
        }
        Platform::Instagram => {
            let mut v = json!({
                "id": format!("{}_{}", d.serial, d.author),
                "caption": {"text": d.text},
                "created_time": ts.timestamp().to_string(),
                "tags": d.tags,
                "type": "image",
                "images": {"standard_resolution": {"url": format!("https://scontent.cdninstagram.com/i{}.jpg", d.serial)}},
                "likes": {"count": d.likes},
                "link": format!("https://www.instagram.com/p/i{}/", d.serial),
                "user": {
                    "id": format!("{}", 50_000 + d.author),
                    "username": format!("insta{}", d.author),
                    "counts": {"followed_by": d.followers}
                }
            });
            if let Some((name, lat, lon)) = d.place {
                v["location"] = json!({"name": name, "latitude": lat, "longitude": lon});
            }
            v
        }
        Platform::Youtube => {
            let mut v = json!({
                "id": {"kind": "youtube#video", "videoId": format!("v{:010}", d.serial)},
                "snippet": {
                    "title": d.text,
                    "description": d.extra,
                    "publishedAt": ts.format("%Y-%m-%dT%H:%M:%S.000Z").to_string(),
                    "channelId": format!("UC{:08}", d.author),
                    "channelTitle": format!("Channel {}", d.author)
                },
                "statistics": {"likeCount": d.likes.to_string()},
                "channelStatistics": {"subscriberCount": d.followers.to_string()}
            });
            if let Some((name, lat, lon)) = d.place {
                v["recordingDetails"] = json!({
                    "location": {"latitude": lat, "longitude": lon},
                    "locationDescription": name
                });
            }
            v
        }
        Platform::GooglePlus => {
            let id = format!("z{:012}", d.serial);
            let mut v = json!({
                "id": id,
                "url": format!("https://plus.google.com/{}/posts/{id}", 10_000 + d.author),
                "published": ts.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                "actor": {
                    "id": format!("{}", 10_000 + d.author),
                    "displayName": format!("Person {}", d.author),
                    "url": format!("https://plus.google.com/{}", 10_000 + d.author)
                },
                "object": {
                    "content": d.text,
                    "resharers": {"totalItems": d.reposts},
                    "plusoners": {"totalItems": d.likes}
                }
            });
            if let Some((name, lat, lon)) = d.place {
                v["location"] = json!({"displayName": name, "latitude": lat, "longitude": lon});
            }
            if d.media {
                v["object"]["attachments"] = json!([{
                    "objectType": "photo",
                    "image": {"url": format!("https://lh3.googleusercontent.com/g{}.jpg", d.serial)}
                }]);
            }
            v
        }
    }
}

/// The shipped corpus for one platform. Twitter's starts with the
/// reference tweet.
pub fn default_corpus(platform: Platform, size: usize, seed: u64) -> Vec<NativeItem> {
    let mut items = Vec::with_capacity(size);
    if platform == Platform::Twitter && size > 0 {
        items.push(reference_tweet());
    }
    let rest = size - items.len();
    items.extend(CorpusGenerator::new(platform, seed).generate(rest));
    items
}

pub fn fixture_path(dir: &Path, platform: Platform) -> PathBuf {
    dir.join(format!("{}.jsonl", platform.as_str()))
}

pub fn write_jsonl(path: &Path, items: &[NativeItem]) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for it in items {
        serde_json::to_writer(&mut w, &it.0)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Writes `<platform>.jsonl` for all five platforms.
pub fn write_fixture_dir(dir: &Path, size: usize, seed: u64) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    for p in Platform::ALL {
        write_jsonl(&fixture_path(dir, p), &default_corpus(p, size, seed))?;
    }
    Ok(())
}

/// One fixture adapter per platform file present in `dir`. Profiles missing
/// from `caps` use the shipped defaults.
pub fn load_fixture_adapters(
    dir: &Path,
    caps: &BTreeMap<Platform, PlatformCapabilities>,
) -> Result<Vec<Arc<dyn PlatformAdapter>>, AdapterError> {
    let mut out: Vec<Arc<dyn PlatformAdapter>> = Vec::new();
    for p in Platform::ALL {
        let path = fixture_path(dir, p);
        if !path.exists() {
            continue;
        }
        let c = caps
            .get(&p)
            .cloned()
            .unwrap_or_else(|| default_capabilities(p));
        out.push(Arc::new(FixtureAdapter::load_jsonl(p, c, &path)?));
    }
    Ok(out)
}

/// `count` mapped activities with unique keys, cycling over the platforms.
pub fn synthetic_activities(count: usize, seed: u64) -> Vec<Activity> {
    let per = count.div_ceil(Platform::ALL.len());
    let mut by_platform: Vec<std::vec::IntoIter<NativeItem>> = Platform::ALL
        .iter()
        .map(|&p| CorpusGenerator::new(p, seed).generate(per).into_iter())
        .collect();
    let mut out = Vec::with_capacity(count);
    'outer: loop {
        for (i, &p) in Platform::ALL.iter().enumerate() {
            if out.len() == count {
                break 'outer;
            }
            let item = by_platform[i].next().expect("enough items per platform");
            out.push(map_native(p, &item).expect("generated items map"));
        }
    }
    out
}
