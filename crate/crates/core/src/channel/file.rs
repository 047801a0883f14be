//! JSON channel description.
//!
//! ```json
//! { "input_sizes": [2, 2], "output_sizes": [2], "exact": true,
//!   "rows": [["1/4", "3/4"], ["1/2", "1/2"], ["1/2", "1/2"], ["1/2", "1/2"]] }
//! ```
//!
//! Rows follow the lexicographic product input alphabet and columns the
//! lexicographic product output alphabet. With `exact: true` every entry is a
//! string `"num/den"` (or an integer string) parsed as a rational; entries are
//! kept verbatim so that writing the file back reproduces it exactly.

use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::{BroadcastChannel, Dmc, MacChannel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub input_sizes: Vec<usize>,
    pub output_sizes: Vec<usize>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub exact: bool,
    pub rows: Vec<Vec<Entry>>,
}

/// A parsed channel file, by shape.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelKind {
    PointToPoint(Dmc),
    MultipleAccess(MacChannel),
    Broadcast(BroadcastChannel),
}

impl ChannelKind {
    /// Any channel with a single output viewed as a MAC (possibly with one user).
    pub fn as_mac(&self) -> Option<MacChannel> {
        match self {
            ChannelKind::PointToPoint(d) => MacChannel::new(vec![d.input_size()], d.clone()).ok(),
            ChannelKind::MultipleAccess(m) => Some(m.clone()),
            ChannelKind::Broadcast(_) => None,
        }
    }

    /// Any channel with a single input viewed as a broadcast channel.
    pub fn as_broadcast(&self) -> Option<BroadcastChannel> {
        match self {
            ChannelKind::PointToPoint(d) => BroadcastChannel::new(vec![d.output_size()], d.clone()).ok(),
            ChannelKind::MultipleAccess(_) => None,
            ChannelKind::Broadcast(b) => Some(b.clone()),
        }
    }

    pub fn flat(&self) -> &Dmc {
        match self {
            ChannelKind::PointToPoint(d) => d,
            ChannelKind::MultipleAccess(m) => m.flat(),
            ChannelKind::Broadcast(b) => b.flat(),
        }
    }
}

impl ChannelFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Serializes a channel; exact channels are written as reduced fractions.
    pub fn from_dmc(w: &Dmc, input_sizes: Vec<usize>, output_sizes: Vec<usize>) -> Self {
        let rows = match w.exact_rows() {
            Some(rows) => rows
                .iter()
                .map(|r| r.iter().map(|v| Entry::Text(format!("{}/{}", v.numer(), v.denom()))).collect())
                .collect(),
            None => w.rows().map(|r| r.iter().map(|v| Entry::Number(*v)).collect()).collect(),
        };
        ChannelFile { name: None, input_sizes, output_sizes, exact: w.is_exact(), rows }
    }

    pub fn to_channel(&self) -> Result<ChannelKind> {
        if self.input_sizes.is_empty() || self.output_sizes.is_empty() {
            return Err(Error::Parse("input_sizes and output_sizes must be nonempty".into()));
        }
        let inputs: usize = self.input_sizes.iter().product();
        let outputs: usize = self.output_sizes.iter().product();
        if self.rows.len() != inputs {
            return Err(Error::Parse(format!("expected {inputs} rows, found {}", self.rows.len())));
        }
        if let Some((i, r)) = self.rows.iter().enumerate().find(|(_, r)| r.len() != outputs) {
            return Err(Error::Parse(format!("row {i} has {} entries, expected {outputs}", r.len())));
        }
        let dmc = if self.exact {
            let rows = self
                .rows
                .iter()
                .enumerate()
                .map(|(i, r)| r.iter().map(|e| parse_exact(e).map_err(|m| Error::Parse(format!("row {i}: {m}")))).collect())
                .collect::<Result<Vec<Vec<_>>>>()?;
            Dmc::from_rationals(rows)
        } else {
            let rows = self
                .rows
                .iter()
                .enumerate()
                .map(|(i, r)| r.iter().map(|e| parse_float(e).map_err(|m| Error::Parse(format!("row {i}: {m}")))).collect())
                .collect::<Result<Vec<Vec<_>>>>()?;
            Dmc::new(rows)
        }
        .map_err(|e| Error::Parse(e.to_string()))?;

        match (self.input_sizes.len(), self.output_sizes.len()) {
            (1, 1) => Ok(ChannelKind::PointToPoint(dmc)),
            (_, 1) => Ok(ChannelKind::MultipleAccess(MacChannel::new(self.input_sizes.clone(), dmc)?)),
            (1, _) => Ok(ChannelKind::Broadcast(BroadcastChannel::new(self.output_sizes.clone(), dmc)?)),
            _ => Err(Error::Parse("channels with several inputs and several outputs are not supported".into())),
        }
    }
}

fn parse_exact(e: &Entry) -> std::result::Result<BigRational, String> {
    let Entry::Text(s) = e else {
        return Err("exact mode expects \"num/den\" strings".into());
    };
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| format!("bad numerator in {s:?}"))?;
    let den: BigInt = den.parse().map_err(|_| format!("bad denominator in {s:?}"))?;
    if den == BigInt::from(0) {
        return Err(format!("zero denominator in {s:?}"));
    }
    Ok(BigRational::new(num, den))
}

fn parse_float(e: &Entry) -> std::result::Result<f64, String> {
    match e {
        Entry::Number(v) => Ok(*v),
        Entry::Text(_) => parse_exact(e).map(|r| {
            use num_traits::ToPrimitive;
            r.to_f64().unwrap_or(f64::NAN)
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MAC: &str = r#"{
  "input_sizes": [2, 2],
  "output_sizes": [2],
  "exact": true,
  "rows": [["1/4", "3/4"], ["2/4", "2/4"], ["1/2", "1/2"], ["1/2", "1/2"]]
}"#;

    #[test]
    fn exact_file_round_trips_bit_for_bit() {
        let parsed = ChannelFile::parse(MAC).unwrap();
        let written = parsed.to_json().unwrap();
        let reparsed = ChannelFile::parse(&written).unwrap();
        assert_eq!(parsed, reparsed);
        assert_eq!(written, reparsed.to_json().unwrap());
        assert_eq!(parsed.rows[1][0], Entry::Text("2/4".into()));
        assert_eq!(parsed.to_channel().unwrap(), reparsed.to_channel().unwrap());
    }

    #[test]
    fn exact_channel_serializes_as_reduced_fractions() {
        let kind = ChannelFile::parse(MAC).unwrap().to_channel().unwrap();
        let file = ChannelFile::from_dmc(kind.flat(), vec![2, 2], vec![2]);
        assert_eq!(file.rows[1][0], Entry::Text("1/2".into()));
        assert_eq!(file.to_channel().unwrap(), kind);
    }

    #[test]
    fn shapes_map_to_kinds() {
        let kind = ChannelFile::parse(MAC).unwrap().to_channel().unwrap();
        assert!(matches!(kind, ChannelKind::MultipleAccess(_)));
        let bc = r#"{"input_sizes":[2],"output_sizes":[2,2],"rows":[[0.0625,0.1875,0.1875,0.5625],[0.25,0.25,0.25,0.25]]}"#;
        let kind = ChannelFile::parse(bc).unwrap().to_channel().unwrap();
        let ChannelKind::Broadcast(b) = kind else { panic!("expected broadcast") };
        assert_eq!(b.marginal(0).unwrap().row(0), &[0.25, 0.75]);
    }

    #[test]
    fn malformed_rows_are_rejected() {
        let bad = r#"{"input_sizes":[2],"output_sizes":[2],"rows":[[0.5,0.6],[0.5,0.5]]}"#;
        let err = ChannelFile::parse(bad).unwrap().to_channel().unwrap_err();
        assert!(err.to_string().contains("row 0"), "{err}");
        let bad = r#"{"input_sizes":[2],"output_sizes":[2],"exact":true,"rows":[["1/2","1/3"],["1","0"]]}"#;
        assert!(ChannelFile::parse(bad).unwrap().to_channel().is_err());
        let bad = r#"{"input_sizes":[2],"output_sizes":[2],"rows":[[0.5,0.5]]}"#;
        assert!(ChannelFile::parse(bad).unwrap().to_channel().is_err());
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = ChannelFile::parse("{\n  \"input_sizes\": [2,\n}").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }
}
