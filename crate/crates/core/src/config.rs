//! Scenario configuration files.
//!
//! The format is TOML-compatible: `[section]` headers, `key = value` lines and
//! `#` comments. Sections are `radio`, `mac`, `study` and `output`; `seed` sits
//! at the top level. Omitted keys take their defaults and unknown keys are
//! rejected. Durations in the `mac` section are microseconds (`_us`), ratios
//! in decibels carry a `_db` suffix, everything else is SI.
//!
//! ```text
//! seed = 7
//!
//! [radio]
//! cs_range_m = 400        # recomputes cs_threshold
//!
//! [study]
//! name = "census"
//! nodes = [225]
//! ```

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::experiments::{default_loads, ChainClass, CANONICAL_SIGNATURES};
use crate::rf::RadioConfig;
use crate::sim::MacParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StudyName {
    Classify,
    Census,
    RunChain,
    Sweep,
    Nhop,
    CrossChain,
    FlowInMiddle,
}

impl StudyName {
    pub const ALL: [StudyName; 7] = [
        StudyName::Classify,
        StudyName::Census,
        StudyName::RunChain,
        StudyName::Sweep,
        StudyName::Nhop,
        StudyName::CrossChain,
        StudyName::FlowInMiddle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StudyName::Classify => "classify",
            StudyName::Census => "census",
            StudyName::RunChain => "run-chain",
            StudyName::Sweep => "sweep",
            StudyName::Nhop => "nhop",
            StudyName::CrossChain => "cross-chain",
            StudyName::FlowInMiddle => "flow-in-middle",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|n| n.as_str() == s)
    }
}

/// Study parameters. Each study reads the keys it needs.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub name: StudyName,
    /// Deployment sizes; cross-chain uses the first.
    pub nodes: Vec<usize>,
    pub width_m: f64,
    pub height_m: f64,
    /// Chain length for census and nhop.
    pub hops: usize,
    pub cs_ranges_m: Vec<f64>,
    /// Canonical signatures for sweep and run-chain.
    pub signatures: Vec<String>,
    /// Normalized loads for sweep and nhop; an empty nhop list means saturated.
    pub loads: Vec<f64>,
    /// Normalized CBR load for run-chain; 0 means saturated.
    pub load: f64,
    /// Simulated seconds; 0 makes cross-chain skip simulation.
    pub duration_s: f64,
    pub samples: usize,
    /// Cross-chain class pairs such as `SC/HT`.
    pub class_pairs: Vec<String>,
    /// Cross-chain pairs must share at least one interacting link pair.
    pub require_interaction: bool,
    /// nhop slot assignments such as `SC-HT`, or `all` / `single-ht`.
    pub assignments: Vec<String>,
    pub positions_file: String,
    pub links_file: String,
}

impl StudyConfig {
    pub fn defaults(name: StudyName) -> Self {
        Self {
            name,
            nodes: if name == StudyName::CrossChain {
                vec![225]
            } else {
                vec![225, 500, 900]
            },
            width_m: 1500.0,
            height_m: 1500.0,
            hops: if name == StudyName::Nhop { 5 } else { 4 },
            cs_ranges_m: vec![350.0, 450.0, 550.0, 650.0],
            signatures: CANONICAL_SIGNATURES.iter().map(|s| s.to_string()).collect(),
            loads: if name == StudyName::Nhop {
                Vec::new()
            } else {
                default_loads()
            },
            load: 0.0,
            duration_s: if name == StudyName::CrossChain { 10.0 } else { 30.0 },
            samples: 200,
            class_pairs: ChainClass::ALL
                .iter()
                .flat_map(|a| ChainClass::ALL.iter().map(move |b| format!("{a}/{b}")))
                .collect(),
            require_interaction: true,
            assignments: vec!["all".into()],
            positions_file: String::new(),
            links_file: String::new(),
        }
    }

    /// Parsed cross-chain class pairs.
    pub fn class_pairs(&self) -> Result<Vec<(ChainClass, ChainClass)>> {
        self.class_pairs.iter().map(|p| parse_class_pair(p)).collect()
    }
}

fn parse_class_pair(p: &str) -> Result<(ChainClass, ChainClass)> {
    let bad = || {
        Error::Config(format!(
            "class pair '{p}' is not of the form X/Y with X, Y in SC, HTC, HT"
        ))
    };
    let (a, b) = p.split_once('/').ok_or_else(bad)?;
    Ok((
        ChainClass::parse(a).ok_or_else(bad)?,
        ChainClass::parse(b).ok_or_else(bad)?,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: String,
    /// Also write the per-event log for run-chain.
    pub event_log: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            event_log: false,
        }
    }
}

/// A fully resolved scenario configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub radio: RadioConfig,
    pub mac: MacParams,
    pub study: StudyConfig,
    pub output: OutputConfig,
}

impl ScenarioConfig {
    pub fn defaults(study: StudyName) -> Self {
        Self {
            seed: 1,
            radio: RadioConfig::default(),
            mac: MacParams::default(),
            study: StudyConfig::defaults(study),
            output: OutputConfig::default(),
        }
    }

    /// The resolved configuration in the file format; parsing it back yields
    /// an identical configuration.
    pub fn echo(&self) -> String {
        let r = &self.radio;
        let m = &self.mac;
        let s = &self.study;
        let list = |v: Vec<String>| format!("[{}]", v.join(", "));
        let floats = |v: &[f64]| list(v.iter().map(|x| format!("{x:?}")).collect());
        let strings = |v: &[String]| list(v.iter().map(|x| quote(x)).collect());
        let mut out = String::new();
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "\n[radio]");
        for (k, v) in [
            ("tx_power", r.tx_power),
            ("antenna_height_tx", r.antenna_height_tx),
            ("antenna_height_rx", r.antenna_height_rx),
            ("antenna_gain_tx", r.antenna_gain_tx),
            ("antenna_gain_rx", r.antenna_gain_rx),
            ("rx_threshold", r.rx_threshold),
            ("cs_threshold", r.cs_threshold),
            ("capture_sinr", r.capture_sinr),
            ("noise_floor", r.noise_floor),
            ("shadowing_sigma_db", r.shadowing_sigma_db),
        ] {
            let _ = writeln!(out, "{k} = {v:?}");
        }
        let _ = writeln!(out, "\n[mac]");
        for (k, v) in [
            ("slot_time_us", m.slot_time),
            ("sifs_us", m.sifs),
            ("difs_us", m.difs),
            ("data_rate_bps", m.data_rate),
            ("phy_overhead_us", m.phy_overhead),
            ("ack_duration_us", m.ack_duration),
        ] {
            let _ = writeln!(out, "{k} = {v:?}");
        }
        for (k, v) in [
            ("cw_min", m.cw_min as u64),
            ("cw_max", m.cw_max as u64),
            ("retry_limit", m.retry_limit as u64),
            ("payload_size_bytes", m.payload_size as u64),
            ("queue_capacity", m.queue_capacity as u64),
        ] {
            let _ = writeln!(out, "{k} = {v}");
        }
        let _ = writeln!(out, "\n[study]");
        let _ = writeln!(out, "name = {}", quote(s.name.as_str()));
        let _ = writeln!(out, "nodes = {}", list(s.nodes.iter().map(|n| n.to_string()).collect()));
        let _ = writeln!(out, "width_m = {:?}", s.width_m);
        let _ = writeln!(out, "height_m = {:?}", s.height_m);
        let _ = writeln!(out, "hops = {}", s.hops);
        let _ = writeln!(out, "cs_ranges_m = {}", floats(&s.cs_ranges_m));
        let _ = writeln!(out, "signatures = {}", strings(&s.signatures));
        let _ = writeln!(out, "loads = {}", floats(&s.loads));
        let _ = writeln!(out, "load = {:?}", s.load);
        let _ = writeln!(out, "duration_s = {:?}", s.duration_s);
        let _ = writeln!(out, "samples = {}", s.samples);
        let _ = writeln!(out, "class_pairs = {}", strings(&s.class_pairs));
        let _ = writeln!(out, "require_interaction = {}", s.require_interaction);
        let _ = writeln!(out, "assignments = {}", strings(&s.assignments));
        let _ = writeln!(out, "positions_file = {}", quote(&s.positions_file));
        let _ = writeln!(out, "links_file = {}", quote(&s.links_file));
        let _ = writeln!(out, "\n[output]");
        let _ = writeln!(out, "dir = {}", quote(&self.output.dir));
        let _ = writeln!(out, "event_log = {}", self.output.event_log);
        out
    }
}

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    radio: Option<RawRadio>,
    mac: Option<RawMac>,
    study: Option<RawStudy>,
    output: Option<RawOutput>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRadio {
    tx_power: Option<f64>,
    antenna_height_tx: Option<f64>,
    antenna_height_rx: Option<f64>,
    antenna_gain_tx: Option<f64>,
    antenna_gain_rx: Option<f64>,
    rx_threshold: Option<f64>,
    cs_threshold: Option<f64>,
    tx_range_m: Option<f64>,
    cs_range_m: Option<f64>,
    capture_sinr: Option<f64>,
    capture_sinr_db: Option<f64>,
    noise_floor: Option<f64>,
    shadowing_sigma_db: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMac {
    slot_time_us: Option<f64>,
    sifs_us: Option<f64>,
    difs_us: Option<f64>,
    cw_min: Option<u32>,
    cw_max: Option<u32>,
    retry_limit: Option<u32>,
    data_rate_bps: Option<f64>,
    payload_size_bytes: Option<u32>,
    phy_overhead_us: Option<f64>,
    ack_duration_us: Option<f64>,
    queue_capacity: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStudy {
    name: Option<String>,
    nodes: Option<Vec<usize>>,
    width_m: Option<f64>,
    height_m: Option<f64>,
    hops: Option<usize>,
    cs_ranges_m: Option<Vec<f64>>,
    signatures: Option<Vec<String>>,
    loads: Option<Vec<f64>>,
    load: Option<f64>,
    duration_s: Option<f64>,
    samples: Option<usize>,
    class_pairs: Option<Vec<String>>,
    require_interaction: Option<bool>,
    assignments: Option<Vec<String>>,
    positions_file: Option<String>,
    links_file: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<String>,
    event_log: Option<bool>,
}

/// 1-based line of `key` inside `[section]` (or at the top level when
/// `section` is empty); falls back to the section header, then line 1.
fn line_of(text: &str, section: &str, key: &str) -> usize {
    let mut current = String::new();
    let mut header = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            if current == section {
                header = Some(i + 1);
            }
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return i + 1;
                }
            }
        }
    }
    header.unwrap_or(1)
}

fn line_at(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

struct Ctx<'a> {
    text: &'a str,
}

impl Ctx<'_> {
    fn err(&self, section: &str, key: &str, msg: impl std::fmt::Display) -> Error {
        let where_ = if section.is_empty() {
            key.to_string()
        } else {
            format!("{section}.{key}")
        };
        Error::Config(format!("line {}: {where_}: {msg}", line_of(self.text, section, key)))
    }

    fn positive(&self, section: &str, key: &str, v: Option<f64>, default: f64) -> Result<f64> {
        match v {
            None => Ok(default),
            Some(x) if x > 0.0 && x.is_finite() => Ok(x),
            Some(x) => Err(self.err(section, key, format!("must be positive, got {x}"))),
        }
    }

    fn non_negative(&self, section: &str, key: &str, v: Option<f64>, default: f64) -> Result<f64> {
        match v {
            None => Ok(default),
            Some(x) if x >= 0.0 && x.is_finite() => Ok(x),
            Some(x) => Err(self.err(section, key, format!("must be non-negative, got {x}"))),
        }
    }
}

/// Parses configuration text.
pub fn parse_config_str(text: &str) -> Result<ScenarioConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_at(text, s.start)).unwrap_or(1);
        Error::Config(format!("line {line}: {}", e.message()))
    })?;
    let ctx = Ctx { text };

    let study_raw = raw
        .study
        .ok_or_else(|| ctx.err("study", "name", "missing required key"))?;
    let name_str = study_raw
        .name
        .as_deref()
        .ok_or_else(|| ctx.err("study", "name", "missing required key"))?;
    let name = StudyName::parse(name_str).ok_or_else(|| {
        let all: Vec<&str> = StudyName::ALL.iter().map(|n| n.as_str()).collect();
        ctx.err(
            "study",
            "name",
            format!("unknown study '{name_str}', expected one of {}", all.join(", ")),
        )
    })?;

    let rr = raw.radio.unwrap_or_default();
    let d = RadioConfig::default();
    let s = "radio";
    let mut radio = RadioConfig {
        tx_power: ctx.positive(s, "tx_power", rr.tx_power, d.tx_power)?,
        antenna_height_tx: ctx.positive(s, "antenna_height_tx", rr.antenna_height_tx, d.antenna_height_tx)?,
        antenna_height_rx: ctx.positive(s, "antenna_height_rx", rr.antenna_height_rx, d.antenna_height_rx)?,
        antenna_gain_tx: ctx.positive(s, "antenna_gain_tx", rr.antenna_gain_tx, d.antenna_gain_tx)?,
        antenna_gain_rx: ctx.positive(s, "antenna_gain_rx", rr.antenna_gain_rx, d.antenna_gain_rx)?,
        rx_threshold: ctx.positive(s, "rx_threshold", rr.rx_threshold, d.rx_threshold)?,
        cs_threshold: ctx.positive(s, "cs_threshold", rr.cs_threshold, d.cs_threshold)?,
        capture_sinr: ctx.positive(s, "capture_sinr", rr.capture_sinr, d.capture_sinr)?,
        noise_floor: ctx.non_negative(s, "noise_floor", rr.noise_floor, d.noise_floor)?,
        shadowing_sigma_db: ctx.non_negative(s, "shadowing_sigma_db", rr.shadowing_sigma_db, d.shadowing_sigma_db)?,
    };
    if let Some(db) = rr.capture_sinr_db {
        if rr.capture_sinr.is_some() {
            return Err(ctx.err(s, "capture_sinr_db", "conflicts with capture_sinr"));
        }
        if !db.is_finite() {
            return Err(ctx.err(s, "capture_sinr_db", format!("must be finite, got {db}")));
        }
        radio.capture_sinr = 10f64.powf(db / 10.0);
    }
    if let Some(range) = rr.tx_range_m {
        if rr.rx_threshold.is_some() {
            return Err(ctx.err(s, "tx_range_m", "conflicts with rx_threshold"));
        }
        let range = ctx.positive(s, "tx_range_m", Some(range), 0.0)?;
        radio = radio.with_tx_range(range);
    }
    if let Some(range) = rr.cs_range_m {
        if rr.cs_threshold.is_some() {
            return Err(ctx.err(s, "cs_range_m", "conflicts with cs_threshold"));
        }
        let range = ctx.positive(s, "cs_range_m", Some(range), 0.0)?;
        radio = radio.with_cs_range(range);
    }
    radio.validate().map_err(|e| ctx.err(s, "", e))?;

    let rm = raw.mac.unwrap_or_default();
    let d = MacParams::default();
    let s = "mac";
    let mac = MacParams {
        slot_time: ctx.positive(s, "slot_time_us", rm.slot_time_us, d.slot_time)?,
        sifs: ctx.positive(s, "sifs_us", rm.sifs_us, d.sifs)?,
        difs: ctx.positive(s, "difs_us", rm.difs_us, d.difs)?,
        cw_min: rm.cw_min.unwrap_or(d.cw_min),
        cw_max: rm.cw_max.unwrap_or(d.cw_max),
        retry_limit: rm.retry_limit.unwrap_or(d.retry_limit),
        data_rate: ctx.positive(s, "data_rate_bps", rm.data_rate_bps, d.data_rate)?,
        payload_size: rm.payload_size_bytes.unwrap_or(d.payload_size),
        phy_overhead: ctx.positive(s, "phy_overhead_us", rm.phy_overhead_us, d.phy_overhead)?,
        ack_duration: ctx.positive(s, "ack_duration_us", rm.ack_duration_us, d.ack_duration)?,
        queue_capacity: rm.queue_capacity.unwrap_or(d.queue_capacity),
    };
    if let Err(e) = mac.validate() {
        let key = if rm.cw_min.is_some() { "cw_min" } else { "cw_max" };
        return Err(ctx.err(s, key, e));
    }

    let d = StudyConfig::defaults(name);
    let s = "study";
    let study = StudyConfig {
        name,
        nodes: study_raw.nodes.unwrap_or(d.nodes),
        width_m: ctx.positive(s, "width_m", study_raw.width_m, d.width_m)?,
        height_m: ctx.positive(s, "height_m", study_raw.height_m, d.height_m)?,
        hops: study_raw.hops.unwrap_or(d.hops),
        cs_ranges_m: study_raw.cs_ranges_m.unwrap_or(d.cs_ranges_m),
        signatures: study_raw.signatures.unwrap_or(d.signatures),
        loads: study_raw.loads.unwrap_or(d.loads),
        load: ctx.non_negative(s, "load", study_raw.load, d.load)?,
        duration_s: ctx.non_negative(s, "duration_s", study_raw.duration_s, d.duration_s)?,
        samples: study_raw.samples.unwrap_or(d.samples),
        class_pairs: study_raw.class_pairs.unwrap_or(d.class_pairs),
        require_interaction: study_raw.require_interaction.unwrap_or(d.require_interaction),
        assignments: study_raw.assignments.unwrap_or(d.assignments),
        positions_file: study_raw.positions_file.unwrap_or(d.positions_file),
        links_file: study_raw.links_file.unwrap_or(d.links_file),
    };
    if study.nodes.contains(&0) {
        return Err(ctx.err(s, "nodes", "node counts must be positive"));
    }
    if study.cs_ranges_m.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(ctx.err(s, "cs_ranges_m", "ranges must be positive meters"));
    }
    if study.loads.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(ctx.err(s, "loads", "loads must be positive"));
    }
    if study.samples == 0 {
        return Err(ctx.err(s, "samples", "must be at least 1"));
    }
    if let Some(bad) = study
        .signatures
        .iter()
        .find(|x| !CANONICAL_SIGNATURES.contains(&x.as_str()))
    {
        return Err(ctx.err(
            s,
            "signatures",
            format!(
                "unsupported signature '{bad}', expected {}",
                CANONICAL_SIGNATURES.join(", ")
            ),
        ));
    }
    study.class_pairs().map_err(|e| ctx.err(s, "class_pairs", e))?;

    let ro = raw.output.unwrap_or_default();
    let d = OutputConfig::default();
    let output = OutputConfig {
        dir: ro.dir.unwrap_or(d.dir),
        event_log: ro.event_log.unwrap_or(d.event_log),
    };

    Ok(ScenarioConfig {
        seed: raw.seed.unwrap_or(1),
        radio,
        mac,
        study,
        output,
    })
}

pub fn parse_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config_str(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = parse_config_str("[study]\nname = \"census\"\n").unwrap();
        assert_eq!(c, ScenarioConfig::defaults(StudyName::Census));
    }

    #[test]
    fn missing_study_name_names_the_key() {
        let e = parse_config_str("seed = 3\n\n[study]\nnodes = [225]\n")
            .unwrap_err()
            .to_string();
        assert!(e.contains("study.name") && e.contains("line 3"), "{e}");
        let e = parse_config_str("seed = 3\n").unwrap_err().to_string();
        assert!(e.contains("study.name"), "{e}");
    }

    #[test]
    fn unknown_key_reports_line() {
        let text = "seed = 1\n[study]\nname = \"sweep\"\n[mac]\nslot_time_us = 9.0\nslot = 9\n";
        let e = parse_config_str(text).unwrap_err().to_string();
        assert!(e.contains("line 6") && e.contains("slot"), "{e}");
    }

    #[test]
    fn unit_violation_reports_line() {
        let text = "[study]\nname = \"sweep\"\n\n[radio]\ntx_power = -1.0\n";
        let e = parse_config_str(text).unwrap_err().to_string();
        assert!(e.contains("line 5") && e.contains("radio.tx_power"), "{e}");
        let text = "[study]\nname = \"sweep\"\n[mac]\ncw_min = 16\n";
        let e = parse_config_str(text).unwrap_err().to_string();
        assert!(e.contains("line 4"), "{e}");
    }

    #[test]
    fn cs_range_override_recomputes_threshold() {
        let c = parse_config_str("[study]\nname = \"census\"\n[radio]\ncs_range_m = 400\n").unwrap();
        let d = RadioConfig::default();
        let expect = d.tx_power * d.antenna_height_tx.powi(2) * d.antenna_height_rx.powi(2) / 400f64.powi(4);
        assert!((c.radio.cs_threshold - expect).abs() / expect < 1e-12);
        assert!((c.radio.cs_range() - 400.0).abs() < 1e-9);
        assert!(
            parse_config_str("[study]\nname = \"census\"\n[radio]\ncs_range_m = 400\ncs_threshold = 1e-11\n").is_err()
        );
    }

    #[test]
    fn capture_in_db() {
        let c = parse_config_str("[study]\nname = \"census\"\n[radio]\ncapture_sinr_db = 6.0\n").unwrap();
        assert!((c.radio.capture_sinr - 3.981).abs() < 1e-3);
    }

    #[test]
    fn bad_study_values() {
        assert!(parse_config_str("[study]\nname = \"bogus\"\n").is_err());
        assert!(parse_config_str("[study]\nname = \"sweep\"\nsignatures = [\"HT/HT/HT\"]\n").is_err());
        assert!(parse_config_str("[study]\nname = \"cross-chain\"\nclass_pairs = [\"SC-HT\"]\n").is_err());
        assert!(parse_config_str("[study]\nname = \"sweep\"\nloads = [0.1, -0.2]\n").is_err());
    }

    #[test]
    fn default_echo_round_trips() {
        for name in StudyName::ALL {
            let c = ScenarioConfig::defaults(name);
            assert_eq!(parse_config_str(&c.echo()).unwrap(), c);
        }
    }

    proptest! {
        #[test]
        fn echo_round_trips(
            seed in any::<u64>(),
            cs in 300.0f64..900.0,
            db in 3.0f64..20.0,
            loads in proptest::collection::vec(0.01f64..2.0, 0..5),
            dir in "[a-z/_ ]{1,12}",
        ) {
            let text = format!(
                "seed = {seed}\n[radio]\ncs_range_m = {cs:?}\ncapture_sinr_db = {db:?}\n[study]\nname = \"nhop\"\nloads = [{}]\n[output]\ndir = {}\n",
                loads.iter().map(|l| format!("{l:?}")).collect::<Vec<_>>().join(", "),
                quote(&dir),
            );
            let c = parse_config_str(&text).unwrap();
            prop_assert_eq!(parse_config_str(&c.echo()).unwrap(), c);
        }
    }
}
