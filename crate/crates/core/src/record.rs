//! Trace record data model and per-operator partitioning.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// One user observation from a crowd-sourced trace.
///
/// Byte counts are deltas: each record carries traffic not reported by any
/// earlier record.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    /// UTC epoch seconds.
    pub timestamp: i64,
    pub user_id: String,
    pub lat: f64,
    pub lon: f64,
    pub operator: String,
    pub cell_id: String,
    pub lac: String,
    /// Client package name, e.g. `com.facebook.katana`.
    pub app: String,
    pub bytes_up: u64,
    pub bytes_down: u64,
}

/// Reasons a record fails validation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RecordError {
    #[error("latitude out of range")]
    LatitudeOutOfRange,
    #[error("longitude out of range")]
    LongitudeOutOfRange,
    #[error("timestamp must be positive")]
    NonPositiveTimestamp,
    #[error("empty operator")]
    EmptyOperator,
    #[error("empty cell id")]
    EmptyCellId,
}

impl TraceRecord {
    pub fn validate(&self) -> Result<(), RecordError> {
        if !(self.lat.is_finite() && (-90.0..=90.0).contains(&self.lat)) {
            return Err(RecordError::LatitudeOutOfRange);
        }
        if !(self.lon.is_finite() && (-180.0..=180.0).contains(&self.lon)) {
            return Err(RecordError::LongitudeOutOfRange);
        }
        if self.timestamp <= 0 {
            return Err(RecordError::NonPositiveTimestamp);
        }
        if self.operator.is_empty() {
            return Err(RecordError::EmptyOperator);
        }
        if self.cell_id.is_empty() {
            return Err(RecordError::EmptyCellId);
        }
        Ok(())
    }

    /// Upload plus download bytes.
    pub fn total_bytes(&self) -> u64 {
        self.bytes_up.saturating_add(self.bytes_down)
    }

    /// Index of the hour bin the record's bytes are attributed to.
    pub fn hour(&self) -> i64 {
        self.timestamp.div_euclid(3600)
    }

    pub fn category(&self) -> AppCategory {
        AppCategory::classify(&self.app)
    }
}

/// Application categories tracked separately from the total.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AppCategory {
    Facebook,
    YouTube,
    Maps,
    Other,
}

impl AppCategory {
    pub const ALL: [AppCategory; 4] = [
        AppCategory::Facebook,
        AppCategory::YouTube,
        AppCategory::Maps,
        AppCategory::Other,
    ];

    /// Client package that identifies the category. `Other` has none.
    pub fn client_package(self) -> Option<&'static str> {
        match self {
            AppCategory::Facebook => Some("com.facebook.katana"),
            AppCategory::YouTube => Some("com.google.android.youtube"),
            AppCategory::Maps => Some("com.google.android.apps.maps"),
            AppCategory::Other => None,
        }
    }

    /// Maps a client package name to its category. Matching is exact up to
    /// ASCII case, since traces report package names in either case.
    pub fn classify(app: &str) -> AppCategory {
        Self::ALL
            .into_iter()
            .find(|c| {
                c.client_package()
                    .is_some_and(|pkg| pkg.eq_ignore_ascii_case(app.trim()))
            })
            .unwrap_or(AppCategory::Other)
    }

    pub fn name(self) -> &'static str {
        match self {
            AppCategory::Facebook => "facebook",
            AppCategory::YouTube => "youtube",
            AppCategory::Maps => "maps",
            AppCategory::Other => "other",
        }
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for AppCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which traffic a load series or report covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum AppFilter {
    #[default]
    Total,
    Only(AppCategory),
}

impl AppFilter {
    pub fn matches(self, category: AppCategory) -> bool {
        match self {
            AppFilter::Total => true,
            AppFilter::Only(c) => c == category,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AppFilter::Total => "total",
            AppFilter::Only(c) => c.name(),
        }
    }

    /// Parses `facebook|youtube|maps|other|total`, case-insensitively.
    pub fn from_name(name: &str) -> Option<AppFilter> {
        if name.eq_ignore_ascii_case("total") {
            return Some(AppFilter::Total);
        }
        AppCategory::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(name))
            .map(AppFilter::Only)
    }
}

impl fmt::Display for AppFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Splits records by operator, keeping relative order within each operator.
pub fn partition_by_operator<I>(records: I) -> BTreeMap<String, Vec<TraceRecord>>
where
    I: IntoIterator<Item = TraceRecord>,
{
    let mut out: BTreeMap<String, Vec<TraceRecord>> = BTreeMap::new();
    for rec in records {
        match out.get_mut(&rec.operator) {
            Some(v) => v.push(rec),
            None => {
                out.insert(rec.operator.clone(), alloc::vec![rec]);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    pub(crate) fn rec(op: &str, cell: &str) -> TraceRecord {
        TraceRecord {
            timestamp: 1_412_121_600,
            user_id: "u1".to_string(),
            lat: 37.77,
            lon: -122.42,
            operator: op.to_string(),
            cell_id: cell.to_string(),
            lac: "1".to_string(),
            app: "com.facebook.katana".to_string(),
            bytes_up: 10,
            bytes_down: 20,
        }
    }

    #[test]
    fn latitude_range_is_checked() {
        let mut r = rec("A", "1");
        r.lat = 95.0;
        assert_eq!(r.validate(), Err(RecordError::LatitudeOutOfRange));
        assert_eq!(
            RecordError::LatitudeOutOfRange.to_string(),
            "latitude out of range"
        );
        r.lat = -90.0;
        assert!(r.validate().is_ok());
    }

    #[test]
    fn classify_known_clients() {
        assert_eq!(
            AppCategory::classify("COM.FACEBOOK.KATANA"),
            AppCategory::Facebook
        );
        assert_eq!(
            AppCategory::classify("com.google.android.youtube"),
            AppCategory::YouTube
        );
        assert_eq!(
            AppCategory::classify("COM.GOOGLE.ANDROID.APPS.MAPS"),
            AppCategory::Maps
        );
        assert_eq!(AppCategory::classify("com.whatsapp"), AppCategory::Other);
        // prefix is not a match
        assert_eq!(
            AppCategory::classify("com.facebook.katana.beta"),
            AppCategory::Other
        );
    }

    #[test]
    fn filter_names_round_trip() {
        for f in [
            AppFilter::Total,
            AppFilter::Only(AppCategory::Facebook),
            AppFilter::Only(AppCategory::YouTube),
            AppFilter::Only(AppCategory::Maps),
            AppFilter::Only(AppCategory::Other),
        ] {
            assert_eq!(AppFilter::from_name(f.name()), Some(f));
        }
        assert_eq!(AppFilter::from_name("tiktok"), None);
    }

    #[test]
    fn partition_examples() {
        let parts = partition_by_operator(alloc::vec![rec("A", "1"), rec("A", "2"), rec("B", "1")]);
        assert_eq!(parts.len(), 2);
        assert_eq!(parts["A"].len(), 2);
        assert_eq!(parts["A"][0].cell_id, "1");
        assert_eq!(parts["A"][1].cell_id, "2");
        assert_eq!(parts["B"].len(), 1);

        assert!(partition_by_operator(Vec::new()).is_empty());

        let one = partition_by_operator(alloc::vec![rec("A", "1"); 5]);
        assert_eq!(one.len(), 1);
        assert_eq!(one["A"].len(), 5);
    }

    #[test]
    fn hour_bin_uses_floor() {
        let mut r = rec("A", "1");
        r.timestamp = 7199;
        assert_eq!(r.hour(), 1);
        r.timestamp = 7200;
        assert_eq!(r.hour(), 2);
    }
}
