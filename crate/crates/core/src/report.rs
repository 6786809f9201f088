//! Machine-readable result tables.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::config::{access_name, csi_name, harq_name, strategy_name};
use crate::error::{Error, Result};
use crate::sweep::SweepPoint;

/// Rounds to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn opt(x: Option<f64>) -> Option<f64> {
    x.map(sig12)
}

/// One output row per sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub axis_value: f64,
    pub access_mode: String,
    pub harq_mode: String,
    pub csi_mode: String,
    pub strategy: String,
    pub outage: Option<f64>,
    pub outage_ci_lo: f64,
    pub outage_ci_hi: f64,
    pub power_dbm: Option<f64>,
    pub power_se: Option<f64>,
    pub util: Option<f64>,
    pub util_ci_lo: Option<f64>,
    pub util_ci_hi: Option<f64>,
    pub se: Option<f64>,
    pub zone1_dbm: Option<f64>,
    pub zone2_dbm: Option<f64>,
    pub zone3_dbm: Option<f64>,
    pub seed: u64,
    pub phases: u64,
    /// Mean power over delivered packets only.
    pub power_delivered_dbm: Option<f64>,
    pub arrivals: u64,
    pub delivered: u64,
    pub drops: u64,
    pub failures: u64,
}

impl ResultRow {
    pub fn from_point(p: &SweepPoint) -> Self {
        let s = &p.summary;
        let c = &p.config;
        Self {
            axis_value: sig12(p.axis_value),
            access_mode: access_name(c.access_mode).into(),
            harq_mode: harq_name(c.harq_mode).into(),
            csi_mode: csi_name(c.csi_mode).into(),
            strategy: strategy_name(c.pairing_strategy).into(),
            outage: opt(s.outage),
            outage_ci_lo: sig12(s.outage_ci.0),
            outage_ci_hi: sig12(s.outage_ci.1),
            power_dbm: opt(s.power_dbm),
            power_se: opt(s.power_se_db),
            util: opt(s.util),
            util_ci_lo: opt(s.util_ci.map(|c| c.0)),
            util_ci_hi: opt(s.util_ci.map(|c| c.1)),
            se: opt(s.spectral_efficiency),
            zone1_dbm: opt(s.zone_dbm[0]),
            zone2_dbm: opt(s.zone_dbm[1]),
            zone3_dbm: opt(s.zone_dbm[2]),
            seed: c.seed,
            phases: s.phases,
            power_delivered_dbm: opt(s.power_delivered_dbm),
            arrivals: s.arrivals,
            delivered: s.delivered,
            drops: s.drops,
            failures: s.failures,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::config("format", format!("unknown format `{s}`"))),
        }
    }
}

pub fn write_rows<W: Write>(out: W, rows: &[ResultRow], format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in rows {
                w.serialize(r).map_err(csv_err)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rows)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

pub fn read_rows(text: &str, format: Format) -> Result<Vec<ResultRow>> {
    match format {
        Format::Csv => csv::Reader::from_reader(text.as_bytes())
            .deserialize()
            .collect::<std::result::Result<_, _>>()
            .map_err(csv_err),
        Format::Json => Ok(serde_json::from_str(text)?),
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(power: Option<f64>) -> ResultRow {
        ResultRow {
            axis_value: 8.0,
            access_mode: "noma".into(),
            harq_mode: "cc".into(),
            csi_mode: "statistical".into(),
            strategy: "pc".into(),
            outage: Some(0.0),
            outage_ci_lo: 0.0,
            outage_ci_hi: sig12(3.8e-4),
            power_dbm: power,
            power_se: Some(0.125),
            util: Some(sig12(1.0 / 3.0)),
            util_ci_lo: None,
            util_ci_hi: None,
            se: Some(2.0),
            zone1_dbm: None,
            zone2_dbm: Some(-80.5),
            zone3_dbm: Some(-70.25),
            seed: 7,
            phases: 100,
            power_delivered_dbm: power,
            arrivals: 800,
            delivered: 799,
            drops: 0,
            failures: 1,
        }
    }

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(sig12(1.0 / 3.0), 0.333333333333);
        assert_eq!(sig12(-81.23456789012345), -81.2345678901);
        assert_eq!(sig12(0.0), 0.0);
        assert_eq!(sig12(2.0), 2.0);
        assert!(sig12(f64::NAN).is_nan());
    }

    #[test]
    fn csv_and_json_round_trip() {
        let rows = vec![row(Some(sig12(-77.12345678901234))), row(None)];
        for f in [Format::Csv, Format::Json] {
            let mut buf = Vec::new();
            write_rows(&mut buf, &rows, f).unwrap();
            let text = String::from_utf8(buf).unwrap();
            assert_eq!(read_rows(&text, f).unwrap(), rows, "{f:?}");
        }
    }

    #[test]
    fn csv_header_names() {
        let mut buf = Vec::new();
        write_rows(&mut buf, &[row(None)], Format::Csv).unwrap();
        let header = String::from_utf8(buf).unwrap().lines().next().unwrap().to_string();
        assert!(header.starts_with(
            "axis_value,access_mode,harq_mode,csi_mode,strategy,outage,outage_ci_lo,outage_ci_hi,power_dbm,power_se,\
             util,util_ci_lo,util_ci_hi,se,zone1_dbm,zone2_dbm,zone3_dbm,seed,phases"
        ));
    }
}
