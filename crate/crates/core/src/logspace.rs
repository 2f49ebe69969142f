//! Natural-log representation of positive quantities.
//!
//! Products of `n` factors each below one underflow quickly (`n^{-n/2}` is
//! already subnormal near `n = 280`), so bounds and volumes are carried as
//! logarithms. A zero quantity is `-inf`; `+inf` and NaN are never valid.

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Smallest linear value that is still reported alongside its logarithm.
pub const LINEAR_FLOOR: f64 = 1e-300;

/// Sentinel written in place of a `-inf` logarithm.
pub const NEG_INF_TOKEN: &str = "-inf";

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogValue(f64);

impl LogValue {
    pub const ZERO: LogValue = LogValue(f64::NEG_INFINITY);
    pub const ONE: LogValue = LogValue(0.0);

    /// Wraps a logarithm. NaN and `+inf` are rejected with a panic since they
    /// only arise from a logic error upstream.
    pub fn from_log(log: f64) -> Self {
        assert!(!log.is_nan(), "NaN logarithm");
        assert!(log != f64::INFINITY, "+inf logarithm");
        LogValue(log)
    }

    pub fn from_linear(x: f64) -> Self {
        assert!(x >= 0.0, "negative quantity {x}");
        Self::from_log(x.ln())
    }

    pub fn log(self) -> f64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// Linear value, when it lies in `[LINEAR_FLOOR, f64::MAX]`.
    pub fn linear(self) -> Option<f64> {
        let x = self.0.exp();
        (x >= LINEAR_FLOOR && x.is_finite()).then_some(x)
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            f.write_str(NEG_INF_TOKEN)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Sum of `ln |v|` over the entries; `-inf` as soon as one entry is zero.
pub fn log_abs_product<'a>(values: impl IntoIterator<Item = &'a f64>) -> f64 {
    values.into_iter().map(|v| v.abs().ln()).sum()
}

impl Serialize for LogValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.is_zero() {
            s.serialize_str(NEG_INF_TOKEN)
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for LogValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct LogVisitor;

        impl Visitor<'_> for LogVisitor {
            type Value = LogValue;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "a finite number or the string \"{NEG_INF_TOKEN}\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<LogValue, E> {
                if v.is_finite() {
                    Ok(LogValue(v))
                } else {
                    Err(E::custom("non-finite logarithm"))
                }
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<LogValue, E> {
                Ok(LogValue(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<LogValue, E> {
                Ok(LogValue(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<LogValue, E> {
                if v == NEG_INF_TOKEN {
                    Ok(LogValue::ZERO)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }

        d.deserialize_any(LogVisitor)
    }
}

/// A quantity reported both as a logarithm and, when representable, linearly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub log: LogValue,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

impl From<LogValue> for Quantity {
    fn from(log: LogValue) -> Self {
        Quantity {
            log,
            value: log.linear(),
        }
    }
}
