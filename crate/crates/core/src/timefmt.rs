//! ISO-8601 UTC timestamps at whole-second precision.

use chrono::{DateTime, SecondsFormat, SubsecRound, Utc};
use serde::{de, Deserialize, Deserializer, Serializer};

pub(crate) fn format(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Secs, true)
}

pub(crate) fn now() -> DateTime<Utc> {
    Utc::now().trunc_subsecs(0)
}

pub(crate) fn serialize<S: Serializer>(ts: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format(ts))
}

pub(crate) fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
    let raw = String::deserialize(d)?;
    let parsed = DateTime::parse_from_rfc3339(&raw)
        .map_err(|e| de::Error::custom(format!("invalid timestamp {raw:?}: {e}")))?;
    if parsed.offset().local_minus_utc() != 0 || !raw.ends_with('Z') {
        return Err(de::Error::custom(format!("timestamp {raw:?} is not UTC")));
    }
    Ok(parsed.with_timezone(&Utc).trunc_subsecs(0))
}
