//! Geo-radius and time-window predicates shared by native fixture filtering
//! and local post-filtering.

use chrono::{DateTime, TimeZone};
use serde::{Deserialize, Serialize};

/// Mean Earth radius in kilometres.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

/// Great-circle distance between two points in decimal degrees.
pub fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = (lat2 - lat1).to_radians();
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * a.sqrt().min(1.0).asin()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoCircle {
    pub latitude: f64,
    pub longitude: f64,
    #[serde(rename = "radius")]
    pub radius_km: f64,
}

impl GeoCircle {
    pub fn contains(&self, latitude: f64, longitude: f64) -> bool {
        haversine_km(self.latitude, self.longitude, latitude, longitude) <= self.radius_km
    }
}

/// Inclusive bounds in Unix seconds; a missing bound is open.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub since: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub until: Option<i64>,
}

impl TimeWindow {
    pub fn new(since: Option<i64>, until: Option<i64>) -> Self {
        Self { since, until }
    }

    pub fn is_unbounded(&self) -> bool {
        self.since.is_none() && self.until.is_none()
    }

    pub fn contains<Tz: TimeZone>(&self, t: &DateTime<Tz>) -> bool {
        let secs = t.timestamp();
        self.since.is_none_or(|s| secs >= s) && self.until.is_none_or(|u| secs <= u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Utc;

    #[test]
    fn known_distance_berlin_hamburg() {
        // Berlin Alexanderplatz to Hamburg Rathaus, roughly 255 km.
        let d = haversine_km(52.5219, 13.4132, 53.5503, 9.9920);
        assert!((d - 255.0).abs() < 3.0, "{d}");
    }

    #[test]
    fn zero_distance_and_symmetry() {
        assert_eq!(haversine_km(10.0, 20.0, 10.0, 20.0), 0.0);
        let a = haversine_km(-33.0, 151.0, 51.5, -0.1);
        let b = haversine_km(51.5, -0.1, -33.0, 151.0);
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn antipodes_are_half_circumference() {
        let d = haversine_km(0.0, 0.0, 0.0, 180.0);
        assert!((d - std::f64::consts::PI * EARTH_RADIUS_KM).abs() < 1e-6);
    }

    #[test]
    fn window_bounds_are_inclusive() {
        let w = TimeWindow::new(Some(100), Some(200));
        let at = |s| Utc.timestamp_opt(s, 0).unwrap();
        assert!(w.contains(&at(100)));
        assert!(w.contains(&at(200)));
        assert!(!w.contains(&at(99)));
        assert!(!w.contains(&at(201)));
        assert!(TimeWindow::default().contains(&at(0)));
    }
}
