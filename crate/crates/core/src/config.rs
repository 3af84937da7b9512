//! Simulation configuration: defaults, the `key = value` text format and
//! validation.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::energy::RadioParams;
use crate::sensing_math::Probability;
use crate::topology::{Area, MessageSizing, PlacementParams, Position};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("invalid `{key}`: {rule}")]
    Invariant { key: &'static str, rule: String },
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Cusf,
    WithoutSubsets,
    LeachcLike,
    SendoraLike,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SleepPolicy {
    MaxEnergySubset,
    AllSleepNs,
    None,
}

/// Which radius decides cluster membership.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JoinRange {
    /// A node joins a CR within the CR's communication range.
    Cr,
    /// A node joins a CR within its own sensor range.
    Sensor,
}

/// What a CR writes into its history for a slot its cluster slept through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SleepRecord {
    /// Nothing was observed, so nothing is recorded.
    Skip,
    /// The held busy decision is recorded.
    Busy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlSize {
    Fields,
    Packet,
}

/// Per-node detection target used when sizing sensing durations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PdNodeTarget {
    PdMin,
    Fixed(f64),
}

macro_rules! text_enum {
    ($ty:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl $ty {
            pub const NAMES: &'static [&'static str] = &[$($text),+];
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($ty::$variant => $text),+ })
            }
        }
        impl FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($text => Ok($ty::$variant),)+
                    other => Err(format!("expected one of {:?}, got `{other}`", $ty::NAMES)),
                }
            }
        }
    };
}

text_enum!(Mode { Cusf => "cusf", WithoutSubsets => "without_subsets", LeachcLike => "leachc_like", SendoraLike => "sendora_like" });
text_enum!(SleepPolicy { MaxEnergySubset => "max_energy_subset", AllSleepNs => "all_sleep_ns", None => "none" });
text_enum!(JoinRange { Cr => "cr", Sensor => "sensor" });
text_enum!(SleepRecord { Skip => "skip", Busy => "busy" });
text_enum!(ControlSize { Fields => "fields", Packet => "packet" });

impl fmt::Display for PdNodeTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PdNodeTarget::PdMin => f.write_str("pd_min"),
            PdNodeTarget::Fixed(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for PdNodeTarget {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "pd_min" {
            Ok(PdNodeTarget::PdMin)
        } else {
            parse_f64(s).map(PdNodeTarget::Fixed)
        }
    }
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|_| format!("expected a number, got `{s}`"))
}

fn parse_usize(s: &str) -> Result<usize, String> {
    s.parse::<usize>().map_err(|_| format!("expected a non-negative integer, got `{s}`"))
}

fn parse_u64(s: &str) -> Result<u64, String> {
    s.parse::<u64>().map_err(|_| format!("expected a non-negative integer, got `{s}`"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub crs: usize,
    pub nodes: usize,
    pub area_width: f64,
    pub area_height: f64,
    /// Stationary probability that the channel is idle.
    pub p_idle: f64,
    /// Idle → busy transition probability; busy → idle follows from `p_idle`.
    pub p_ib: f64,
    pub e_elec: f64,
    pub e_amp: f64,
    pub packet_bits: u64,
    pub r_s: f64,
    pub r_cr: f64,
    pub qd_min: f64,
    pub qf_max: f64,
    pub tau_max: f64,
    pub d_cr: f64,
    pub snr_db_min: f64,
    pub snr_db_max: f64,
    pub f_s: f64,
    pub p_sense: f64,
    pub e0: f64,
    pub rounds: usize,
    pub slot: f64,
    pub t_set: f64,
    pub bit_rate: f64,
    pub window: usize,
    pub pd_min: f64,
    pub pf_max: f64,
    pub pd_node_target: PdNodeTarget,
    pub p_move: f64,
    pub mode: Mode,
    pub sleep: SleepPolicy,
    pub sleep_record: SleepRecord,
    pub seed: u64,
    pub join_range: JoinRange,
    pub control_size: ControlSize,
    pub base_x: f64,
    pub base_y: f64,
    pub sink_x: f64,
    pub sink_y: f64,
    pub t_proc: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            crs: 4,
            nodes: 100,
            area_width: 100.0,
            area_height: 100.0,
            p_idle: 0.5,
            p_ib: 0.3,
            e_elec: 50e-9,
            e_amp: 10e-12,
            packet_bits: 4000,
            r_s: 10.0,
            r_cr: 20.0,
            qd_min: 0.8,
            qf_max: 0.1,
            tau_max: 2e-3,
            d_cr: 20.0,
            snr_db_min: -25.0,
            snr_db_max: -5.0,
            f_s: 300e3,
            p_sense: 0.1,
            e0: 5.0,
            rounds: 5000,
            slot: 0.1,
            t_set: 0.01,
            bit_rate: 250e3,
            window: 50,
            pd_min: 0.5,
            pf_max: 0.03,
            pd_node_target: PdNodeTarget::PdMin,
            p_move: 1.0,
            mode: Mode::Cusf,
            sleep: SleepPolicy::MaxEnergySubset,
            sleep_record: SleepRecord::Skip,
            seed: 1,
            join_range: JoinRange::Cr,
            control_size: ControlSize::Fields,
            base_x: 50.0,
            base_y: 50.0,
            sink_x: 50.0,
            sink_y: 50.0,
            t_proc: 1e-3,
        }
    }
}

/// Keys in dump order.
pub const KEYS: &[&str] = &[
    "crs", "nodes", "area_width", "area_height", "p_idle", "p_ib", "e_elec", "e_amp", "packet_bits",
    "r_s", "r_cr", "qd_min", "qf_max", "tau_max", "d_cr", "snr_db_min", "snr_db_max", "f_s", "p_sense",
    "e0", "rounds", "slot", "t_set", "bit_rate", "window", "pd_min", "pf_max", "pd_node_target",
    "p_move", "mode", "sleep", "sleep_record", "seed", "join_range", "control_size", "base_x", "base_y", "sink_x",
    "sink_y", "t_proc",
];

impl SimConfig {
    /// Sets one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value;
        match key {
            "crs" => self.crs = parse_usize(v)?,
            "nodes" => self.nodes = parse_usize(v)?,
            "area_width" => self.area_width = parse_f64(v)?,
            "area_height" => self.area_height = parse_f64(v)?,
            "p_idle" => self.p_idle = parse_f64(v)?,
            "p_ib" => self.p_ib = parse_f64(v)?,
            "e_elec" => self.e_elec = parse_f64(v)?,
            "e_amp" => self.e_amp = parse_f64(v)?,
            "packet_bits" => self.packet_bits = parse_u64(v)?,
            "r_s" => self.r_s = parse_f64(v)?,
            "r_cr" => self.r_cr = parse_f64(v)?,
            "qd_min" => self.qd_min = parse_f64(v)?,
            "qf_max" => self.qf_max = parse_f64(v)?,
            "tau_max" => self.tau_max = parse_f64(v)?,
            "d_cr" => self.d_cr = parse_f64(v)?,
            "snr_db_min" => self.snr_db_min = parse_f64(v)?,
            "snr_db_max" => self.snr_db_max = parse_f64(v)?,
            "f_s" => self.f_s = parse_f64(v)?,
            "p_sense" => self.p_sense = parse_f64(v)?,
            "e0" => self.e0 = parse_f64(v)?,
            "rounds" => self.rounds = parse_usize(v)?,
            "slot" => self.slot = parse_f64(v)?,
            "t_set" => self.t_set = parse_f64(v)?,
            "bit_rate" => self.bit_rate = parse_f64(v)?,
            "window" => self.window = parse_usize(v)?,
            "pd_min" => self.pd_min = parse_f64(v)?,
            "pf_max" => self.pf_max = parse_f64(v)?,
            "pd_node_target" => self.pd_node_target = v.parse()?,
            "p_move" => self.p_move = parse_f64(v)?,
            "mode" => self.mode = v.parse()?,
            "sleep" => self.sleep = v.parse()?,
            "sleep_record" => self.sleep_record = v.parse()?,
            "seed" => self.seed = parse_u64(v)?,
            "join_range" => self.join_range = v.parse()?,
            "control_size" => self.control_size = v.parse()?,
            "base_x" => self.base_x = parse_f64(v)?,
            "base_y" => self.base_y = parse_f64(v)?,
            "sink_x" => self.sink_x = parse_f64(v)?,
            "sink_y" => self.sink_y = parse_f64(v)?,
            "t_proc" => self.t_proc = parse_f64(v)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Text value of one key, in the form [`SimConfig::set`] accepts.
    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "crs" => self.crs.to_string(),
            "nodes" => self.nodes.to_string(),
            "area_width" => self.area_width.to_string(),
            "area_height" => self.area_height.to_string(),
            "p_idle" => self.p_idle.to_string(),
            "p_ib" => self.p_ib.to_string(),
            "e_elec" => self.e_elec.to_string(),
            "e_amp" => self.e_amp.to_string(),
            "packet_bits" => self.packet_bits.to_string(),
            "r_s" => self.r_s.to_string(),
            "r_cr" => self.r_cr.to_string(),
            "qd_min" => self.qd_min.to_string(),
            "qf_max" => self.qf_max.to_string(),
            "tau_max" => self.tau_max.to_string(),
            "d_cr" => self.d_cr.to_string(),
            "snr_db_min" => self.snr_db_min.to_string(),
            "snr_db_max" => self.snr_db_max.to_string(),
            "f_s" => self.f_s.to_string(),
            "p_sense" => self.p_sense.to_string(),
            "e0" => self.e0.to_string(),
            "rounds" => self.rounds.to_string(),
            "slot" => self.slot.to_string(),
            "t_set" => self.t_set.to_string(),
            "bit_rate" => self.bit_rate.to_string(),
            "window" => self.window.to_string(),
            "pd_min" => self.pd_min.to_string(),
            "pf_max" => self.pf_max.to_string(),
            "pd_node_target" => self.pd_node_target.to_string(),
            "p_move" => self.p_move.to_string(),
            "mode" => self.mode.to_string(),
            "sleep" => self.sleep.to_string(),
            "sleep_record" => self.sleep_record.to_string(),
            "seed" => self.seed.to_string(),
            "join_range" => self.join_range.to_string(),
            "control_size" => self.control_size.to_string(),
            "base_x" => self.base_x.to_string(),
            "base_y" => self.base_y.to_string(),
            "sink_x" => self.sink_x.to_string(),
            "sink_y" => self.sink_y.to_string(),
            "t_proc" => self.t_proc.to_string(),
            _ => return None,
        })
    }

    /// Parses the `key = value` format; `#` starts a comment. Missing keys
    /// keep their defaults. The result is validated.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = SimConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Parse {
                line,
                msg: format!("expected `key = value`, got `{content}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey { line, key: key.to_string() });
            }
            cfg.set(key, value).map_err(|msg| ConfigError::Parse { line, msg: format!("{key}: {msg}") })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        SimConfig::parse(&text)
    }

    /// Every key with its resolved value; loads back to an identical config.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let value = self.get(key).expect("every listed key has a value");
            writeln!(out, "{key} = {value}").expect("writing to a String");
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn bad(key: &'static str, rule: impl Into<String>) -> Result<(), ConfigError> {
            Err(ConfigError::Invariant { key, rule: rule.into() })
        }
        let open_unit = [
            ("p_idle", self.p_idle),
            ("p_ib", self.p_ib),
            ("qd_min", self.qd_min),
            ("qf_max", self.qf_max),
            ("pd_min", self.pd_min),
            ("pf_max", self.pf_max),
        ];
        for (key, v) in open_unit {
            if !(v > 0.0 && v < 1.0) {
                return bad(key, format!("must lie in (0, 1), got {v}"));
            }
        }
        if let PdNodeTarget::Fixed(v) = self.pd_node_target {
            if !(v > 0.0 && v < 1.0) {
                return bad("pd_node_target", format!("must lie in (0, 1), got {v}"));
            }
        }
        let p_bi = self.p_bi();
        if !(p_bi > 0.0 && p_bi < 1.0) {
            return bad("p_idle", format!("implies busy→idle probability {p_bi}, outside (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.p_move) {
            return bad("p_move", format!("must lie in [0, 1], got {}", self.p_move));
        }
        let positive = [
            ("area_width", self.area_width),
            ("area_height", self.area_height),
            ("e_elec", self.e_elec),
            ("e_amp", self.e_amp),
            ("r_s", self.r_s),
            ("r_cr", self.r_cr),
            ("tau_max", self.tau_max),
            ("f_s", self.f_s),
            ("p_sense", self.p_sense),
            ("e0", self.e0),
            ("slot", self.slot),
            ("t_set", self.t_set),
            ("bit_rate", self.bit_rate),
            ("t_proc", self.t_proc),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(key, format!("must be positive, got {v}"));
            }
        }
        if !(self.d_cr >= 0.0 && self.d_cr.is_finite()) {
            return bad("d_cr", format!("must be non-negative, got {}", self.d_cr));
        }
        if self.packet_bits == 0 {
            return bad("packet_bits", "must be positive");
        }
        if self.crs == 0 {
            return bad("crs", "at least one CR is required");
        }
        if self.window == 0 {
            return bad("window", "must hold at least one slot");
        }
        if self.r_s >= self.r_cr {
            return bad("r_s", format!("r_s < r_cr required, got r_s = {} and r_cr = {}", self.r_s, self.r_cr));
        }
        if self.tau_max >= self.slot {
            return bad("tau_max", format!("tau_max < slot required, got {} >= {}", self.tau_max, self.slot));
        }
        if !(self.snr_db_min.is_finite() && self.snr_db_max.is_finite()) || self.snr_db_min > self.snr_db_max {
            return bad("snr_db_min", "must be finite and not above snr_db_max");
        }
        let area = self.area();
        for (key, p) in [("base_x", self.base_position()), ("sink_x", self.sink_position())] {
            if !area.contains(&p) {
                return bad(key, format!("({}, {}) lies outside the area", p.x, p.y));
            }
        }
        if self.mode != Mode::Cusf && self.sleep != SleepPolicy::None {
            return bad("sleep", format!("mode {} senses with every node and requires sleep = none", self.mode));
        }
        Ok(())
    }

    pub fn p_bi(&self) -> f64 {
        self.p_idle * self.p_ib / (1.0 - self.p_idle)
    }

    pub fn area(&self) -> Area {
        Area { width: self.area_width, height: self.area_height }
    }

    pub fn base_position(&self) -> Position {
        Position::new(self.base_x, self.base_y)
    }

    pub fn sink_position(&self) -> Position {
        Position::new(self.sink_x, self.sink_y)
    }

    pub fn radio(&self) -> RadioParams {
        RadioParams { e_elec: self.e_elec, e_amp: self.e_amp, p_sense: self.p_sense }
    }

    pub fn join_radius(&self) -> f64 {
        match self.join_range {
            JoinRange::Cr => self.r_cr,
            JoinRange::Sensor => self.r_s,
        }
    }

    pub fn sizing(&self) -> MessageSizing {
        match self.control_size {
            ControlSize::Fields => MessageSizing::default(),
            ControlSize::Packet => MessageSizing::Packet(self.packet_bits),
        }
    }

    pub fn placement(&self) -> PlacementParams {
        PlacementParams {
            nodes: self.nodes,
            crs: self.crs,
            area: self.area(),
            snr_db: (self.snr_db_min, self.snr_db_max),
            history_window: self.window,
        }
    }

    pub fn pd_node(&self) -> Probability {
        let v = match self.pd_node_target {
            PdNodeTarget::PdMin => self.pd_min,
            PdNodeTarget::Fixed(v) => v,
        };
        Probability::new(v).expect("validated")
    }

    /// Reporting time of one packet, seconds.
    pub fn t_report(&self) -> f64 {
        self.packet_bits as f64 / self.bit_rate
    }
}
