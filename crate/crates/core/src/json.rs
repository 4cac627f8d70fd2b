//! JSON shapes for exact integers.
//!
//! Integers that fit in `i64` are written as JSON numbers; anything larger is
//! written as a decimal string. Readers accept both forms.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

pub(crate) struct IntRepr<'a>(pub &'a BigInt);

impl Serialize for IntRepr<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0.to_i64() {
            Some(v) => s.serialize_i64(v),
            None => s.serialize_str(&self.0.to_string()),
        }
    }
}

struct VecRepr<'a>(&'a [BigInt]);

impl Serialize for VecRepr<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter().map(IntRepr))
    }
}

pub(crate) fn int<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    IntRepr(v).serialize(s)
}

pub(crate) fn int_vec<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
    VecRepr(v).serialize(s)
}

pub(crate) fn opt_int_vec<S: Serializer>(v: &Option<Vec<BigInt>>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.serialize_some(&VecRepr(v)),
        None => s.serialize_none(),
    }
}

pub(crate) fn int_rows<S: Serializer>(rows: &[Vec<BigInt>], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(rows.iter().map(|r| VecRepr(r)))
}

/// A JSON integer literal or a decimal string.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum JsonInt {
    Small(i64),
    Text(String),
}

impl JsonInt {
    fn into_bigint<E: de::Error>(self) -> Result<BigInt, E> {
        match self {
            JsonInt::Small(v) => Ok(BigInt::from(v)),
            JsonInt::Text(t) => t
                .trim()
                .parse()
                .map_err(|_| E::custom(format!("not an integer: {t:?}"))),
        }
    }
}

pub(crate) fn de_int_rows<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<BigInt>>, D::Error> {
    let raw: Vec<Vec<JsonInt>> = Vec::deserialize(d)?;
    raw.into_iter()
        .map(|row| row.into_iter().map(JsonInt::into_bigint).collect())
        .collect()
}

/// Renders an integer vector as a compact JSON array, e.g. `[1,3]`.
pub fn format_vector(v: &[BigInt]) -> String {
    serde_json::to_string(&VecRepr(v)).expect("integer arrays always serialize")
}

pub(crate) fn int_value(v: &BigInt) -> serde_json::Value {
    match v.to_i64() {
        Some(x) => serde_json::Value::from(x),
        None => serde_json::Value::String(v.to_string()),
    }
}

pub(crate) fn vec_value(v: &[BigInt]) -> serde_json::Value {
    serde_json::Value::Array(v.iter().map(int_value).collect())
}
