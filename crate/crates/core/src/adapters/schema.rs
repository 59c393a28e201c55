//! Native record layouts of the fixture platforms and their mapping into
//! activities.
//!
//! | platform   | id                | text                         | created                          |
//! |------------|-------------------|------------------------------|----------------------------------|
//! | twitter    | `id_str`          | `text`                       | `created_at` (`Wed Feb 01 09:30:47 +0000 2017`) |
//! | facebook   | `id`              | `message`                    | `created_time` (`2017-02-01T09:30:47+0000`) |
//! | instagram  | `id`              | `caption.text`               | `created_time` (Unix seconds, string) |
//! | youtube    | `id.videoId`      | `snippet.title` + `snippet.description` | `snippet.publishedAt` (RFC 3339) |
//! | googleplus | `id`              | `object.content`             | `published` (RFC 3339)           |

use chrono::{DateTime, FixedOffset};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::activity::{
    Activity, ActivityObject, Actor, EnrichedData, GeoPoint, MediaAttachment, MediaKind, Platform,
};

/// Extension member holding the untouched native record.
pub const NATIVE_RECORD_KEY: &str = "nativeRecord";

#[derive(Debug, Clone, PartialEq)]
pub struct NativeItem(pub Value);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MappingError {
    #[error("{platform} item has no native id")]
    MissingId { platform: Platform },
    #[error("{platform} item {id} has no parsable creation time")]
    MissingTimestamp { platform: Platform, id: String },
}

fn path<'a>(v: &'a Value, keys: &[&str]) -> Option<&'a Value> {
    keys.iter().try_fold(v, |cur, k| cur.get(*k))
}

fn str_at<'a>(v: &'a Value, keys: &[&str]) -> Option<&'a str> {
    path(v, keys).and_then(Value::as_str)
}

fn u64_at(v: &Value, keys: &[&str]) -> Option<u64> {
    match path(v, keys)? {
        Value::Number(n) => n.as_u64(),
        Value::String(s) => s.parse().ok(),
        _ => None,
    }
}

fn f64_at(v: &Value, keys: &[&str]) -> Option<f64> {
    path(v, keys).and_then(Value::as_f64)
}

pub fn native_id(platform: Platform, item: &NativeItem) -> Option<String> {
    let v = &item.0;
    let id = match platform {
        Platform::Twitter => str_at(v, &["id_str"]),
        Platform::Youtube => str_at(v, &["id", "videoId"]),
        Platform::Facebook | Platform::Instagram | Platform::GooglePlus => str_at(v, &["id"]),
    };
    id.filter(|s| !s.is_empty()).map(str::to_string)
}

/// Searchable body text; identical to the mapped activity's content.
pub fn native_text(platform: Platform, item: &NativeItem) -> String {
    let v = &item.0;
    match platform {
        Platform::Twitter => str_at(v, &["text"]).unwrap_or_default().to_string(),
        Platform::Facebook => str_at(v, &["message"]).unwrap_or_default().to_string(),
        Platform::Instagram => str_at(v, &["caption", "text"])
            .unwrap_or_default()
            .to_string(),
        Platform::GooglePlus => str_at(v, &["object", "content"])
            .unwrap_or_default()
            .to_string(),
        Platform::Youtube => {
            let title = str_at(v, &["snippet", "title"]).unwrap_or_default();
            let desc = str_at(v, &["snippet", "description"]).unwrap_or_default();
            if desc.is_empty() {
                title.to_string()
            } else {
                format!("{title}\n\n{desc}")
            }
        }
    }
}

pub fn native_created(platform: Platform, item: &NativeItem) -> Option<DateTime<FixedOffset>> {
    let v = &item.0;
    match platform {
        Platform::Twitter => {
            let raw = str_at(v, &["created_at"])?;
            let utc = DateTime::parse_from_str(raw, "%a %b %d %H:%M:%S %z %Y").ok()?;
            // Render in the author's local offset when the record carries one.
            let offset = path(v, &["user", "utc_offset"])
                .and_then(Value::as_i64)
                .and_then(|s| FixedOffset::east_opt(s as i32));
            Some(match offset {
                Some(off) => utc.with_timezone(&off),
                None => utc,
            })
        }
        Platform::Facebook => {
            DateTime::parse_from_str(str_at(v, &["created_time"])?, "%Y-%m-%dT%H:%M:%S%z").ok()
        }
        Platform::Instagram => {
            let secs: i64 = match path(v, &["created_time"])? {
                Value::String(s) => s.parse().ok()?,
                Value::Number(n) => n.as_i64()?,
                _ => return None,
            };
            Some(DateTime::from_timestamp(secs, 0)?.fixed_offset())
        }
        Platform::Youtube => {
            DateTime::parse_from_rfc3339(str_at(v, &["snippet", "publishedAt"])?).ok()
        }
        Platform::GooglePlus => DateTime::parse_from_rfc3339(str_at(v, &["published"])?).ok(),
    }
}

pub fn native_location(platform: Platform, item: &NativeItem) -> Option<GeoPoint> {
    let v = &item.0;
    let (lat, lon, name) = match platform {
        Platform::Twitter => {
            let c = path(v, &["coordinates", "coordinates"])?.as_array()?;
            (
                c.get(1)?.as_f64()?,
                c.first()?.as_f64()?,
                str_at(v, &["place", "full_name"]),
            )
        }
        Platform::Facebook => (
            f64_at(v, &["place", "location", "latitude"])?,
            f64_at(v, &["place", "location", "longitude"])?,
            str_at(v, &["place", "name"]),
        ),
        Platform::Instagram => (
            f64_at(v, &["location", "latitude"])?,
            f64_at(v, &["location", "longitude"])?,
            str_at(v, &["location", "name"]),
        ),
        Platform::Youtube => (
            f64_at(v, &["recordingDetails", "location", "latitude"])?,
            f64_at(v, &["recordingDetails", "location", "longitude"])?,
            str_at(v, &["recordingDetails", "locationDescription"]),
        ),
        Platform::GooglePlus => (
            f64_at(v, &["location", "latitude"])?,
            f64_at(v, &["location", "longitude"])?,
            str_at(v, &["location", "displayName"]),
        ),
    };
    let mut p = GeoPoint::new(lat, lon);
    p.display_name = name.map(str::to_string);
    Some(p)
}

/// Tags a tag search matches against: explicit tag lists (instagram) plus
/// hashtags written in the body, lowercased and without `#`.
pub fn native_tags(platform: Platform, item: &NativeItem) -> Vec<String> {
    let mut tags: Vec<String> = match platform {
        Platform::Instagram => path(&item.0, &["tags"])
            .and_then(Value::as_array)
            .map(|a| {
                a.iter()
                    .filter_map(Value::as_str)
                    .map(|t| t.trim_start_matches('#').to_lowercase())
                    .collect()
            })
            .unwrap_or_default(),
        _ => Vec::new(),
    };
    for t in crate::enrichment::extract_entities(&native_text(platform, item)).tags {
        let t = t.to_lowercase();
        if !tags.contains(&t) {
            tags.push(t);
        }
    }
    tags
}

/// Engagement counters `(reposts, likes, followers)` exposed by the platform.
pub fn native_counts(platform: Platform, v: &Value) -> (Option<u64>, Option<u64>, Option<u64>) {
    match platform {
        Platform::Twitter => (
            u64_at(v, &["retweet_count"]),
            u64_at(v, &["favorite_count"]),
            u64_at(v, &["user", "followers_count"]),
        ),
        Platform::Facebook => (None, u64_at(v, &["likes", "summary", "total_count"]), None),
        Platform::Instagram => (
            None,
            u64_at(v, &["likes", "count"]),
            u64_at(v, &["user", "counts", "followed_by"]),
        ),
        Platform::Youtube => (
            None,
            u64_at(v, &["statistics", "likeCount"]),
            u64_at(v, &["channelStatistics", "subscriberCount"]),
        ),
        Platform::GooglePlus => (
            u64_at(v, &["object", "resharers", "totalItems"]),
            u64_at(v, &["object", "plusoners", "totalItems"]),
            None,
        ),
    }
}

fn media_kind(mime: &str) -> MediaKind {
    if mime.starts_with("image/") {
        MediaKind::Photo
    } else if mime.starts_with("video/") {
        MediaKind::Video
    } else {
        MediaKind::Other
    }
}

fn media(mime: &str, url: &str) -> MediaAttachment {
    MediaAttachment {
        media_type: mime.to_string(),
        kind: media_kind(mime),
        url: url.to_string(),
    }
}

fn native_media(platform: Platform, v: &Value) -> Option<MediaAttachment> {
    match platform {
        Platform::Twitter => {
            let m = path(v, &["entities", "media"])?.as_array()?.first()?;
            let url = str_at(m, &["media_url_https"])?;
            let mime = match str_at(m, &["type"]) {
                Some("video") => "video/mp4",
                _ => "image/jpeg",
            };
            Some(media(mime, url))
        }
        Platform::Facebook => str_at(v, &["full_picture"]).map(|u| media("image/jpeg", u)),
        Platform::Instagram => {
            match str_at(v, &["type"]) {
                Some("video") => str_at(v, &["videos", "standard_resolution", "url"])
                    .map(|u| media("video/mp4", u)),
                _ => str_at(v, &["images", "standard_resolution", "url"])
                    .map(|u| media("image/jpeg", u)),
            }
        }
        Platform::Youtube => {
            let id = str_at(v, &["id", "videoId"])?;
            Some(media(
                "video/mp4",
                &format!("https://www.youtube.com/watch?v={id}"),
            ))
        }
        Platform::GooglePlus => {
            let a = path(v, &["object", "attachments"])?.as_array()?.first()?;
            let url = str_at(a, &["image", "url"]).or_else(|| str_at(a, &["url"]))?;
            let mime = match str_at(a, &["objectType"]) {
                Some("video") => "video/mp4",
                Some("photo") => "image/jpeg",
                _ => "text/html",
            };
            Some(media(mime, url))
        }
    }
}

struct ActorFields {
    id: String,
    name: String,
    url: String,
    about: Option<String>,
}

fn native_actor(platform: Platform, v: &Value) -> ActorFields {
    let s = |keys: &[&str]| str_at(v, keys).map(str::to_string);
    let (id, name, url, about) = match platform {
        Platform::Twitter => {
            let screen = s(&["user", "screen_name"]).unwrap_or_default();
            (
                s(&["user", "id_str"]),
                s(&["user", "name"]).unwrap_or_else(|| screen.clone()),
                s(&["user", "url"]).unwrap_or_else(|| format!("https://twitter.com/{screen}")),
                s(&["user", "description"]),
            )
        }
        Platform::Facebook => {
            let id = s(&["from", "id"]);
            let url = format!(
                "https://www.facebook.com/{}",
                id.clone().unwrap_or_default()
            );
            (id, s(&["from", "name"]).unwrap_or_default(), url, None)
        }
        Platform::Instagram => {
            let user = s(&["user", "username"]).unwrap_or_default();
            (
                s(&["user", "id"]),
                s(&["user", "full_name"]).unwrap_or_else(|| user.clone()),
                format!("https://www.instagram.com/{user}/"),
                s(&["user", "bio"]),
            )
        }
        Platform::Youtube => {
            let ch = s(&["snippet", "channelId"]);
            let url = format!(
                "https://www.youtube.com/channel/{}",
                ch.clone().unwrap_or_default()
            );
            (
                ch,
                s(&["snippet", "channelTitle"]).unwrap_or_default(),
                url,
                None,
            )
        }
        Platform::GooglePlus => (
            s(&["actor", "id"]),
            s(&["actor", "displayName"]).unwrap_or_default(),
            s(&["actor", "url"]).unwrap_or_default(),
            s(&["actor", "aboutMe"]),
        ),
    };
    ActorFields {
        id: id.unwrap_or_else(|| "unknown".to_string()),
        name,
        url,
        about,
    }
}

fn native_url(platform: Platform, v: &Value, id: &str) -> String {
    match platform {
        Platform::Twitter => {
            let screen = str_at(v, &["user", "screen_name"]).unwrap_or("i");
            format!("https://twitter.com/{screen}/status/{id}")
        }
        Platform::Facebook => str_at(v, &["permalink_url"])
            .map(str::to_string)
            .unwrap_or_else(|| format!("https://www.facebook.com/{id}")),
        Platform::Instagram => str_at(v, &["link"])
            .map(str::to_string)
            .unwrap_or_else(|| format!("https://www.instagram.com/p/{id}/")),
        Platform::Youtube => format!("https://www.youtube.com/watch?v={id}"),
        Platform::GooglePlus => str_at(v, &["url"]).unwrap_or_default().to_string(),
    }
}

/// Maps one native record into an activity. Engagement counters and media
/// land in `enrichedData`; the native record itself is kept under the
/// object's `nativeRecord` extension member.
pub fn map_native(platform: Platform, item: &NativeItem) -> Result<Activity, MappingError> {
    let v = &item.0;
    let id = native_id(platform, item).ok_or(MappingError::MissingId { platform })?;
    let start_time =
        native_created(platform, item).ok_or_else(|| MappingError::MissingTimestamp {
            platform,
            id: id.clone(),
        })?;
    let actor = native_actor(platform, v);
    let (reposts, likes, followers) = native_counts(platform, v);
    let enriched = EnrichedData {
        num_retweets: reposts,
        num_likes: likes,
        num_followers: followers,
        media: native_media(platform, v),
        ..EnrichedData::default()
    };
    let kind = match platform {
        Platform::Youtube => "video",
        _ => "post",
    };
    let mut extensions = Map::new();
    extensions.insert(NATIVE_RECORD_KEY.to_string(), v.clone());
    Ok(Activity {
        actor: Actor {
            id: format!("{platform}:{}", actor.id),
            display_name: actor.name,
            kind: "person".to_string(),
            url: actor.url,
            content: actor.about,
            extensions: Map::new(),
        },
        object: ActivityObject {
            url: native_url(platform, v, &id),
            id: format!("{platform}:{id}"),
            kind: kind.to_string(),
            content: native_text(platform, item),
            start_time,
            location: native_location(platform, item),
            enriched_data: Some(enriched),
            extensions,
        },
        verb: None,
        extensions: Map::new(),
    })
}
