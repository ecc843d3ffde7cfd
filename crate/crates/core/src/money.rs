//! Serde helpers for money fields (SEK amounts).
//!
//! Archived files store every money value as a decimal string with six
//! fractional digits so that archives are stable across platforms and
//! languages. Deserialization accepts either the string form or a plain
//! JSON number.

use serde::de::{self, Deserializer, Unexpected};
use serde::ser::{SerializeSeq, Serializer};
use serde::Deserialize;

/// Formats a money value the way archives store it.
pub fn format_money(value: f64) -> String {
    format!("{value:.6}")
}

pub fn serialize<S: Serializer>(value: &f64, serializer: S) -> Result<S::Ok, S::Error> {
    serializer.serialize_str(&format_money(*value))
}

pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<f64, D::Error> {
    struct MoneyVisitor;

    impl de::Visitor<'_> for MoneyVisitor {
        type Value = f64;

        fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
            f.write_str("a decimal string or number")
        }

        fn visit_str<E: de::Error>(self, s: &str) -> Result<f64, E> {
            s.parse()
                .map_err(|_| E::invalid_value(Unexpected::Str(s), &self))
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }
    }

    deserializer.deserialize_any(MoneyVisitor)
}

/// Same convention for vectors of money values.
pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(values: &[f64], serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(values.len()))?;
        for v in values {
            seq.serialize_element(&format_money(*v))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Vec<f64>, D::Error> {
        #[derive(Deserialize)]
        struct Item(#[serde(with = "super")] f64);

        let items = Vec::<Item>::deserialize(deserializer)?;
        Ok(items.into_iter().map(|i| i.0).collect())
    }
}

/// Same convention for matrices (vectors of vectors) of money values.
pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(values: &[Vec<f64>], serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(serde::Serialize)]
        struct Row<'a>(#[serde(with = "super::vec")] &'a [f64]);

        let mut seq = serializer.serialize_seq(Some(values.len()))?;
        for row in values {
            seq.serialize_element(&Row(row))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> Result<Vec<Vec<f64>>, D::Error> {
        #[derive(Deserialize)]
        struct Row(#[serde(with = "super::vec")] Vec<f64>);

        let rows = Vec::<Row>::deserialize(deserializer)?;
        Ok(rows.into_iter().map(|r| r.0).collect())
    }
}

/// Rounds to six fractional digits, the resolution money is archived at.
pub fn round_money(value: f64) -> f64 {
    (value * 1e6).round() / 1e6
}
