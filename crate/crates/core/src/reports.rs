// SPDX-License-Identifier: Apache-2.0

//! Tool report parsing into a normalized PPA record.
//!
//! Two dialects are understood:
//!
//! * `generic_kv`: one `key=value` per line, `#` comments allowed. Keys:
//!   `latency_cycles`, `clock_ns`, `lut`, `ff`, `dsp`, `bram`, `wns_ns`,
//!   `power_mw`, plus the optional `latency_ns`, `estimated_clock_ns`,
//!   `fmax_mhz` and `power_w`. This is what the mock adapter writes.
//! * `vitis_xml`: the subset of a Vitis HLS `csynth.xml` documented in
//!   `fixtures/reports/README.md`, paired with Vivado text reports
//!   (`report_timing_summary`, `report_power`, `report_utilization`) for the
//!   implementation stage.
//!
//! Power is normalized to milliwatts. Fields a report does not carry stay
//! `None`; nothing is zero-filled.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance for the latency and Fmax consistency checks.
pub const CONSISTENCY_RTOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("unrecognized report format: {0}")]
    UnrecognizedFormat(String),
    #[error("required field `{0}` missing")]
    FieldMissing(String),
    #[error("field `{field}` has unparseable value `{value}`")]
    InvalidValue { field: String, value: String },
    #[error("inconsistent record: {0}")]
    ConsistencyError(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    VitisXml,
    GenericKv,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "vitis_xml" | "vitis" => Ok(ReportFormat::VitisXml),
            "generic_kv" | "generic" => Ok(ReportFormat::GenericKv),
            other => Err(format!("unknown report format `{other}`")),
        }
    }
}

/// Latency and area read from an HLS synthesis report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthPart {
    pub latency_cycles: u64,
    /// Target clock period the design was scheduled for.
    pub clock_ns: Option<f64>,
    pub estimated_clock_ns: Option<f64>,
    /// Latency in ns when the report states it directly.
    pub latency_ns: Option<f64>,
    pub lut: u64,
    pub ff: u64,
    pub dsp: Option<u64>,
    pub bram: Option<u64>,
}

/// Timing, power and post-implementation utilization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplPart {
    pub clock_ns: f64,
    pub wns_ns: f64,
    pub fmax_mhz: f64,
    pub power_mw: f64,
    pub lut: Option<u64>,
    pub ff: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AreaSource {
    HlsEstimate,
    PostImpl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpaRecord {
    pub latency_cycles: u64,
    pub clock_ns: Option<f64>,
    pub latency_ns: Option<f64>,
    pub lut: u64,
    pub ff: u64,
    pub dsp: Option<u64>,
    pub bram: Option<u64>,
    pub area_source: AreaSource,
    pub wns_ns: Option<f64>,
    pub fmax_mhz: Option<f64>,
    pub power_mw: Option<f64>,
    /// Which report the power figure came from.
    pub power_source: Option<String>,
    /// HLS-estimated area, kept when post-implementation numbers override it.
    pub hls_lut: Option<u64>,
    pub hls_ff: Option<u64>,
}

impl PpaRecord {
    pub fn area(&self) -> u64 {
        self.lut + self.ff
    }

    pub fn timing_met(&self) -> Option<bool> {
        self.wns_ns.map(|w| w >= 0.0)
    }

    /// Inverse of [`merge_ppa`].
    pub fn split(&self) -> (SynthPart, Option<ImplPart>) {
        let synth = SynthPart {
            latency_cycles: self.latency_cycles,
            clock_ns: self.clock_ns,
            estimated_clock_ns: None,
            latency_ns: self.latency_ns,
            lut: self.hls_lut.unwrap_or(self.lut),
            ff: self.hls_ff.unwrap_or(self.ff),
            dsp: self.dsp,
            bram: self.bram,
        };
        let imp = match (self.wns_ns, self.fmax_mhz, self.power_mw, self.clock_ns) {
            (Some(wns_ns), Some(fmax_mhz), Some(power_mw), Some(clock_ns)) => Some(ImplPart {
                clock_ns,
                wns_ns,
                fmax_mhz,
                power_mw,
                lut: (self.area_source == AreaSource::PostImpl).then_some(self.lut),
                ff: (self.area_source == AreaSource::PostImpl).then_some(self.ff),
            }),
            _ => None,
        };
        (synth, imp)
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= CONSISTENCY_RTOL * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

pub fn derive_fmax(clock_ns: f64, wns_ns: f64) -> Result<f64, ReportError> {
    let achieved = clock_ns - wns_ns;
    if achieved.is_nan() || achieved <= 0.0 {
        return Err(ReportError::ConsistencyError(format!(
            "clock {clock_ns} ns with WNS {wns_ns} ns leaves no positive period"
        )));
    }
    Ok(1000.0 / achieved)
}

fn parse_kv(text: &str) -> Result<BTreeMap<String, String>, ReportError> {
    let mut map = BTreeMap::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ReportError::UnrecognizedFormat(format!("not a key=value line: `{line}`")))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn kv_get<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, ReportError> {
    map.get(key)
        .map(|v| {
            v.parse().map_err(|_| ReportError::InvalidValue {
                field: key.to_string(),
                value: v.clone(),
            })
        })
        .transpose()
}

fn kv_require<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<T, ReportError> {
    kv_get(map, key)?.ok_or_else(|| ReportError::FieldMissing(key.to_string()))
}

fn parse_synth_kv(text: &str) -> Result<SynthPart, ReportError> {
    let map = parse_kv(text)?;
    Ok(SynthPart {
        latency_cycles: kv_require(&map, "latency_cycles")?,
        clock_ns: kv_get(&map, "clock_ns")?,
        estimated_clock_ns: kv_get(&map, "estimated_clock_ns")?,
        latency_ns: kv_get(&map, "latency_ns")?,
        lut: kv_require(&map, "lut")?,
        ff: kv_require(&map, "ff")?,
        dsp: kv_get(&map, "dsp")?,
        bram: kv_get(&map, "bram")?,
    })
}

fn xml_text<'a>(node: roxmltree::Node<'a, 'a>, path: &[&str]) -> Option<&'a str> {
    let mut cur = node;
    for name in path {
        cur = cur.children().find(|c| c.has_tag_name(*name))?;
    }
    cur.text().map(str::trim).filter(|t| !t.is_empty())
}

fn xml_num<T: std::str::FromStr>(
    root: roxmltree::Node<'_, '_>,
    paths: &[&[&str]],
    field: &str,
) -> Result<Option<T>, ReportError> {
    for path in paths {
        if let Some(text) = xml_text(root, path) {
            return text.parse().map(Some).map_err(|_| ReportError::InvalidValue {
                field: field.to_string(),
                value: text.to_string(),
            });
        }
    }
    Ok(None)
}

fn parse_synth_xml(text: &str) -> Result<SynthPart, ReportError> {
    let doc = roxmltree::Document::parse(text)
        .map_err(|e| ReportError::UnrecognizedFormat(format!("xml: {e}")))?;
    let root = doc.root_element();
    if !root.has_tag_name("profile") {
        return Err(ReportError::UnrecognizedFormat(format!(
            "expected <profile> root, found <{}>",
            root.tag_name().name()
        )));
    }
    let latency = &["PerformanceEstimates", "SummaryOfOverallLatency"];
    let resources = &["AreaEstimates", "Resources"];
    let require = |v: Option<u64>, f: &str| v.ok_or_else(|| ReportError::FieldMissing(f.to_string()));

    let latency_cycles = match xml_text(root, &[latency[0], latency[1], "Worst-caseLatency"]) {
        None | Some("undef") => return Err(ReportError::FieldMissing("latency_cycles".into())),
        Some(t) => t.parse().map_err(|_| ReportError::InvalidValue {
            field: "latency_cycles".into(),
            value: t.to_string(),
        })?,
    };

    Ok(SynthPart {
        latency_cycles,
        clock_ns: xml_num(root, &[&["UserAssignments", "TargetClockPeriod"]], "clock_ns")?,
        estimated_clock_ns: xml_num(
            root,
            &[&["PerformanceEstimates", "SummaryOfTimingAnalysis", "EstimatedClockPeriod"]],
            "estimated_clock_ns",
        )?,
        latency_ns: None,
        lut: require(xml_num(root, &[&[resources[0], resources[1], "LUT"]], "lut")?, "lut")?,
        ff: require(xml_num(root, &[&[resources[0], resources[1], "FF"]], "ff")?, "ff")?,
        dsp: xml_num(
            root,
            &[&[resources[0], resources[1], "DSP"], &[resources[0], resources[1], "DSP48E"]],
            "dsp",
        )?,
        bram: xml_num(root, &[&[resources[0], resources[1], "BRAM_18K"]], "bram")?,
    })
}

/// Latency and area from an HLS synthesis report.
pub fn parse_hls_synth_report(text: &str, format: ReportFormat) -> Result<SynthPart, ReportError> {
    if text.trim().is_empty() {
        return Err(ReportError::UnrecognizedFormat("empty report".into()));
    }
    match format {
        ReportFormat::GenericKv => parse_synth_kv(text),
        ReportFormat::VitisXml => parse_synth_xml(text),
    }
}

/// Raw texts of the three implementation reports. `util` may be empty.
#[derive(Debug, Clone, Default)]
pub struct ImplReportTexts {
    pub timing: String,
    pub power: String,
    pub util: String,
}

fn table_cells(line: &str) -> Vec<&str> {
    line.split('|').map(str::trim).filter(|c| !c.is_empty()).collect()
}

fn vivado_wns(text: &str) -> Result<f64, ReportError> {
    let mut lines = text.lines();
    while let Some(line) = lines.next() {
        let headers: Vec<&str> = line.split_whitespace().collect();
        let Some(col) = headers.iter().position(|h| *h == "WNS(ns)") else {
            continue;
        };
        for data in lines.by_ref() {
            let cells: Vec<&str> = data.split_whitespace().collect();
            if cells.is_empty() || cells.iter().all(|c| c.chars().all(|ch| ch == '-')) {
                continue;
            }
            let raw = cells.get(col).copied().unwrap_or_default();
            return raw.parse().map_err(|_| ReportError::InvalidValue {
                field: "wns".into(),
                value: raw.to_string(),
            });
        }
    }
    Err(ReportError::FieldMissing("wns".into()))
}

fn vivado_total_power_w(text: &str) -> Result<f64, ReportError> {
    for line in text.lines() {
        let cells = table_cells(line);
        if cells.first() == Some(&"Total On-Chip Power (W)") {
            let raw = cells.get(1).copied().unwrap_or_default();
            return raw.parse().map_err(|_| ReportError::InvalidValue {
                field: "power".into(),
                value: raw.to_string(),
            });
        }
    }
    Err(ReportError::FieldMissing("power".into()))
}

fn vivado_util(text: &str, names: &[&str], field: &str) -> Result<Option<u64>, ReportError> {
    for line in text.lines() {
        let cells = table_cells(line);
        if cells.first().is_some_and(|c| names.contains(c)) {
            let raw = cells.get(1).copied().unwrap_or_default();
            return raw.parse().map(Some).map_err(|_| ReportError::InvalidValue {
                field: field.to_string(),
                value: raw.to_string(),
            });
        }
    }
    Ok(None)
}

/// Timing, power and post-implementation utilization. `clock_period_ns` is
/// the constraint the design was implemented against; Fmax is derived from
/// it and the WNS unless the report states Fmax directly.
pub fn parse_impl_report(
    texts: &ImplReportTexts,
    format: ReportFormat,
    clock_period_ns: f64,
) -> Result<ImplPart, ReportError> {
    if texts.timing.trim().is_empty() {
        return Err(ReportError::FieldMissing("wns".into()));
    }
    if texts.power.trim().is_empty() {
        return Err(ReportError::FieldMissing("power".into()));
    }
    match format {
        ReportFormat::GenericKv => {
            let timing = parse_kv(&texts.timing)?;
            let power = parse_kv(&texts.power)?;
            let util = parse_kv(&texts.util)?;
            let wns_ns: f64 = kv_get(&timing, "wns_ns")?.ok_or_else(|| ReportError::FieldMissing("wns".into()))?;
            let fmax_mhz = match kv_get(&timing, "fmax_mhz")? {
                Some(f) => f,
                None => derive_fmax(clock_period_ns, wns_ns)?,
            };
            let power_mw = match (kv_get::<f64>(&power, "power_mw")?, kv_get::<f64>(&power, "power_w")?) {
                (Some(mw), _) => mw,
                (None, Some(w)) => w * 1000.0,
                (None, None) => return Err(ReportError::FieldMissing("power".into())),
            };
            Ok(ImplPart {
                clock_ns: clock_period_ns,
                wns_ns,
                fmax_mhz,
                power_mw,
                lut: kv_get(&util, "lut")?,
                ff: kv_get(&util, "ff")?,
            })
        }
        ReportFormat::VitisXml => {
            let wns_ns = vivado_wns(&texts.timing)?;
            let power_mw = vivado_total_power_w(&texts.power)? * 1000.0;
            Ok(ImplPart {
                clock_ns: clock_period_ns,
                wns_ns,
                fmax_mhz: derive_fmax(clock_period_ns, wns_ns)?,
                power_mw,
                lut: vivado_util(&texts.util, &["Slice LUTs", "CLB LUTs", "Slice LUTs*", "CLB LUTs*"], "lut")?,
                ff: vivado_util(&texts.util, &["Slice Registers", "CLB Registers"], "ff")?,
            })
        }
    }
}

/// Combine synthesis and (optional) implementation results, checking the
/// record's invariants.
pub fn merge_ppa(synth: &SynthPart, imp: Option<&ImplPart>) -> Result<PpaRecord, ReportError> {
    let clock_ns = synth.clock_ns.or(imp.map(|i| i.clock_ns));
    let latency_ns = match (synth.latency_ns, clock_ns) {
        (Some(reported), Some(clock)) => {
            let expected = synth.latency_cycles as f64 * clock;
            if !close(reported, expected) {
                return Err(ReportError::ConsistencyError(format!(
                    "latency {reported} ns != {} cycles x {clock} ns",
                    synth.latency_cycles
                )));
            }
            Some(reported)
        }
        (Some(reported), None) => Some(reported),
        (None, Some(clock)) => Some(synth.latency_cycles as f64 * clock),
        (None, None) => None,
    };

    let mut record = PpaRecord {
        latency_cycles: synth.latency_cycles,
        clock_ns,
        latency_ns,
        lut: synth.lut,
        ff: synth.ff,
        dsp: synth.dsp,
        bram: synth.bram,
        area_source: AreaSource::HlsEstimate,
        wns_ns: None,
        fmax_mhz: None,
        power_mw: None,
        power_source: None,
        hls_lut: None,
        hls_ff: None,
    };

    if let Some(imp) = imp {
        if imp.power_mw < 0.0 || !imp.power_mw.is_finite() {
            return Err(ReportError::ConsistencyError(format!("power {} mW", imp.power_mw)));
        }
        if imp.fmax_mhz.is_nan() || imp.fmax_mhz <= 0.0 {
            return Err(ReportError::ConsistencyError(format!("fmax {} MHz", imp.fmax_mhz)));
        }
        record.wns_ns = Some(imp.wns_ns);
        record.fmax_mhz = Some(imp.fmax_mhz);
        record.power_mw = Some(imp.power_mw);
        record.power_source = Some("impl_power_report".into());
        if imp.lut.is_some() || imp.ff.is_some() {
            record.hls_lut = Some(synth.lut);
            record.hls_ff = Some(synth.ff);
            record.lut = imp.lut.unwrap_or(synth.lut);
            record.ff = imp.ff.unwrap_or(synth.ff);
            record.area_source = AreaSource::PostImpl;
        }
    }
    Ok(record)
}

/// Generic-format synthesis report text.
pub fn write_synth_kv(part: &SynthPart) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "latency_cycles={}", part.latency_cycles);
    if let Some(c) = part.clock_ns {
        let _ = writeln!(out, "clock_ns={c}");
    }
    if let Some(c) = part.estimated_clock_ns {
        let _ = writeln!(out, "estimated_clock_ns={c}");
    }
    if let Some(l) = part.latency_ns {
        let _ = writeln!(out, "latency_ns={l}");
    }
    let _ = writeln!(out, "lut={}", part.lut);
    let _ = writeln!(out, "ff={}", part.ff);
    if let Some(d) = part.dsp {
        let _ = writeln!(out, "dsp={d}");
    }
    if let Some(b) = part.bram {
        let _ = writeln!(out, "bram={b}");
    }
    out
}

/// Generic-format timing, power and utilization texts.
pub fn write_impl_kv(part: &ImplPart) -> ImplReportTexts {
    let mut util = String::new();
    if let Some(l) = part.lut {
        let _ = writeln!(util, "lut={l}");
    }
    if let Some(f) = part.ff {
        let _ = writeln!(util, "ff={f}");
    }
    ImplReportTexts {
        timing: format!("clock_ns={}\nwns_ns={}\n", part.clock_ns, part.wns_ns),
        power: format!("power_mw={}\n", part.power_mw),
        util,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn synth(latency_cycles: u64, clock: Option<f64>) -> SynthPart {
        SynthPart {
            latency_cycles,
            clock_ns: clock,
            estimated_clock_ns: None,
            latency_ns: None,
            lut: 500,
            ff: 300,
            dsp: Some(1),
            bram: None,
        }
    }

    #[test]
    fn generic_zero_design_is_legal() {
        let part = parse_hls_synth_report("latency_cycles=0\nlut=0\nff=0", ReportFormat::GenericKv).unwrap();
        assert_eq!(part.latency_cycles, 0);
        assert_eq!((part.lut, part.ff), (0, 0));
        assert_eq!(part.dsp, None);
        assert_eq!(part.bram, None);
    }

    #[test]
    fn generic_missing_lut() {
        let err = parse_hls_synth_report("latency_cycles=10\nff=3\n", ReportFormat::GenericKv).unwrap_err();
        assert_eq!(err, ReportError::FieldMissing("lut".into()));
    }

    #[test]
    fn generic_rejects_prose() {
        assert!(matches!(
            parse_hls_synth_report("Synthesis finished OK", ReportFormat::GenericKv),
            Err(ReportError::UnrecognizedFormat(_))
        ));
        assert!(matches!(
            parse_hls_synth_report("  ", ReportFormat::GenericKv),
            Err(ReportError::UnrecognizedFormat(_))
        ));
    }

    #[test]
    fn generic_bad_number() {
        assert!(matches!(
            parse_hls_synth_report("latency_cycles=ten\nlut=1\nff=1", ReportFormat::GenericKv),
            Err(ReportError::InvalidValue { .. })
        ));
    }

    #[test]
    fn xml_wrong_root() {
        assert!(matches!(
            parse_hls_synth_report("<report/>", ReportFormat::VitisXml),
            Err(ReportError::UnrecognizedFormat(_))
        ));
        assert!(matches!(
            parse_hls_synth_report("<profile>", ReportFormat::VitisXml),
            Err(ReportError::UnrecognizedFormat(_))
        ));
    }

    #[test]
    fn xml_undef_latency() {
        let xml = "<profile><PerformanceEstimates><SummaryOfOverallLatency>\
            <Worst-caseLatency>undef</Worst-caseLatency></SummaryOfOverallLatency></PerformanceEstimates>\
            <AreaEstimates><Resources><LUT>1</LUT><FF>1</FF></Resources></AreaEstimates></profile>";
        assert_eq!(
            parse_hls_synth_report(xml, ReportFormat::VitisXml).unwrap_err(),
            ReportError::FieldMissing("latency_cycles".into())
        );
    }

    #[test]
    fn fmax_derivation() {
        let f = derive_fmax(5.0, 0.45).unwrap();
        assert!((f - 219.780_219_78).abs() < 1e-6);
        assert!(derive_fmax(1.0, 1.0).is_err());
    }

    #[test]
    fn impl_empty_power() {
        let texts = ImplReportTexts {
            timing: "wns_ns=0.1\n".into(),
            power: String::new(),
            util: String::new(),
        };
        assert_eq!(
            parse_impl_report(&texts, ReportFormat::GenericKv, 5.0).unwrap_err(),
            ReportError::FieldMissing("power".into())
        );
    }

    #[test]
    fn impl_generic_power_in_watts() {
        let texts = ImplReportTexts {
            timing: "wns_ns=-0.2\n".into(),
            power: "power_w=0.25\n".into(),
            util: String::new(),
        };
        let part = parse_impl_report(&texts, ReportFormat::GenericKv, 5.0).unwrap();
        assert_eq!(part.wns_ns, -0.2);
        assert!((part.power_mw - 250.0).abs() < 1e-9);
        assert!((part.fmax_mhz - 1000.0 / 5.2).abs() < 1e-9);
    }

    #[test]
    fn merge_synth_only() {
        let rec = merge_ppa(&synth(100, Some(5.0)), None).unwrap();
        assert_eq!(rec.latency_ns, Some(500.0));
        assert_eq!(rec.wns_ns, None);
        assert_eq!(rec.fmax_mhz, None);
        assert_eq!(rec.power_mw, None);
        assert_eq!(rec.area_source, AreaSource::HlsEstimate);
    }

    #[test]
    fn merge_inconsistent_latency() {
        let mut part = synth(100, Some(5.0));
        part.latency_ns = Some(123.0);
        assert!(matches!(merge_ppa(&part, None), Err(ReportError::ConsistencyError(_))));
        part.latency_ns = Some(500.0);
        assert!(merge_ppa(&part, None).is_ok());
    }

    #[test]
    fn merge_impl_overrides_area() {
        let imp = ImplPart {
            clock_ns: 5.0,
            wns_ns: 0.45,
            fmax_mhz: derive_fmax(5.0, 0.45).unwrap(),
            power_mw: 127.0,
            lut: Some(480),
            ff: None,
        };
        let rec = merge_ppa(&synth(100, Some(5.0)), Some(&imp)).unwrap();
        assert_eq!((rec.lut, rec.ff), (480, 300));
        assert_eq!(rec.hls_lut, Some(500));
        assert_eq!(rec.area_source, AreaSource::PostImpl);
        assert_eq!(rec.power_source.as_deref(), Some("impl_power_report"));
        assert_eq!(rec.timing_met(), Some(true));
    }

    #[test]
    fn clock_from_impl_when_synth_lacks_it() {
        let imp = ImplPart {
            clock_ns: 4.0,
            wns_ns: 0.0,
            fmax_mhz: 250.0,
            power_mw: 1.0,
            lut: None,
            ff: None,
        };
        let rec = merge_ppa(&synth(10, None), Some(&imp)).unwrap();
        assert_eq!(rec.latency_ns, Some(40.0));
    }

    fn arb_parts() -> impl Strategy<Value = (SynthPart, Option<ImplPart>)> {
        (
            0u64..100_000,
            prop_oneof![Just(2.5), Just(3.3), Just(5.0), Just(10.0)],
            0u64..50_000,
            0u64..50_000,
            proptest::option::of(0u64..64),
            proptest::option::of((
                -1.0f64..2.0,
                0.0f64..2000.0,
                proptest::option::of(0u64..50_000),
                proptest::option::of(0u64..50_000),
            )),
        )
            .prop_map(|(cycles, clock, lut, ff, dsp, imp)| {
                let synth = SynthPart {
                    latency_cycles: cycles,
                    clock_ns: Some(clock),
                    estimated_clock_ns: None,
                    latency_ns: None,
                    lut,
                    ff,
                    dsp,
                    bram: None,
                };
                let imp = imp.map(|(wns, power, ilut, iff)| ImplPart {
                    clock_ns: clock,
                    wns_ns: wns,
                    fmax_mhz: derive_fmax(clock, wns).unwrap(),
                    power_mw: power,
                    lut: ilut,
                    ff: iff,
                });
                (synth, imp)
            })
    }

    proptest! {
        #[test]
        fn merge_is_idempotent((s, i) in arb_parts()) {
            let once = merge_ppa(&s, i.as_ref()).unwrap();
            let (s2, i2) = once.split();
            let twice = merge_ppa(&s2, i2.as_ref()).unwrap();
            prop_assert_eq!(&once, &twice);
            if let (Some(lat), Some(clock)) = (once.latency_ns, once.clock_ns) {
                prop_assert!(close(lat, once.latency_cycles as f64 * clock) || once.latency_cycles == 0);
            }
        }

        #[test]
        fn merge_with_nothing_keeps_synth_fields((s, _) in arb_parts()) {
            let rec = merge_ppa(&s, None).unwrap();
            prop_assert_eq!(rec.latency_cycles, s.latency_cycles);
            prop_assert_eq!((rec.lut, rec.ff, rec.dsp), (s.lut, s.ff, s.dsp));
            prop_assert!(rec.wns_ns.is_none() && rec.power_mw.is_none() && rec.fmax_mhz.is_none());
        }

        #[test]
        fn generic_kv_round_trips((s, i) in arb_parts()) {
            let text = write_synth_kv(&s);
            prop_assert_eq!(parse_hls_synth_report(&text, ReportFormat::GenericKv).unwrap(), s);
            if let Some(i) = i {
                let texts = write_impl_kv(&i);
                let back = parse_impl_report(&texts, ReportFormat::GenericKv, i.clock_ns).unwrap();
                prop_assert_eq!(back.wns_ns, i.wns_ns);
                prop_assert_eq!(back.power_mw, i.power_mw);
                prop_assert_eq!((back.lut, back.ff), (i.lut, i.ff));
                prop_assert!(close(back.fmax_mhz, i.fmax_mhz));
            }
        }
    }
}
