//! Serde adapter for `Vec<f64>` that may hold `+inf` (pinned penalty weights).
//!
//! JSON has no infinity literal, so `+inf` is written as the string `"inf"`.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Entry {
    Num(f64),
    Str(String),
}

pub fn serialize<S: Serializer>(values: &[f64], serializer: S) -> Result<S::Ok, S::Error> {
    let entries: Vec<Entry> = values
        .iter()
        .map(|&v| {
            if v == f64::INFINITY {
                Entry::Str("inf".into())
            } else {
                Entry::Num(v)
            }
        })
        .collect();
    entries.serialize(serializer)
}

pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Vec<f64>, D::Error> {
    Vec::<Entry>::deserialize(deserializer)?
        .into_iter()
        .map(|e| match e {
            Entry::Num(v) => Ok(v),
            Entry::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Entry::Str(s) => Err(D::Error::custom(format!("unexpected weight {s:?}"))),
        })
        .collect()
}
