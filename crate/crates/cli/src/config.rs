//! Scenario files: a flat, sectioned `key = value` format.
//!
//! ```text
//! scenario = tuning
//! seed = 7
//!
//! [tbs]
//! theta2 = 22.5
//!
//! [imperfections]
//! pbs_extinction_db = 25
//! loss.6.h = 0.98
//! ```
//!
//! Keys may also be written fully qualified (`tbs.theta2 = 22.5`) or, when
//! the name is unique, bare at the top of the file. Unknown keys, repeated
//! keys and out-of-range values are rejected with the offending line.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use tbs_core::elements::ElementSpec;
use tbs_core::sweeps::{
    Grid, ImperfectionDistribution, SweepSpec, SweepVariable, TomographyDevice,
};
use tbs_core::{ImperfectionParams, ModeSpace, Polarization, SagnacConfig, TbsConfig};

/// Where a configuration value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Override,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Override => f.write_str("--set"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub origin: Option<Origin>,
    pub message: String,
}

impl ConfigError {
    fn at(origin: Origin, message: impl Into<String>) -> Self {
        ConfigError {
            origin: Some(origin),
            message: message.into(),
        }
    }

    fn global(message: impl Into<String>) -> Self {
        ConfigError {
            origin: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.origin {
            Some(o) => write!(f, "config error at {o}: {}", self.message),
            None => write!(f, "config error: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Tuning,
    Polarization,
    Tomography,
    Sagnac,
    Dump,
}

impl Scenario {
    /// Default `(start, stop, step)` of the scenario's sweep axis.
    fn default_grid(self) -> Grid {
        match self {
            Scenario::Polarization | Scenario::Sagnac => Grid::quarter_turn(),
            _ => Grid::half_turn(),
        }
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "tuning" => Ok(Scenario::Tuning),
            "polarization" => Ok(Scenario::Polarization),
            "tomography" => Ok(Scenario::Tomography),
            "sagnac" => Ok(Scenario::Sagnac),
            "dump" => Ok(Scenario::Dump),
            other => Err(format!(
                "unknown scenario `{other}` (expected tuning, polarization, tomography, sagnac or dump)"
            )),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Tuning => "tuning",
            Scenario::Polarization => "polarization",
            Scenario::Tomography => "tomography",
            Scenario::Sagnac => "sagnac",
            Scenario::Dump => "dump",
        })
    }
}

/// Operator written by the `dump` scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DumpTarget {
    Tbs,
    ClosedForm,
    Sagnac,
    Elements,
}

impl FromStr for DumpTarget {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "tbs" => Ok(DumpTarget::Tbs),
            "closed_form" => Ok(DumpTarget::ClosedForm),
            "sagnac" => Ok(DumpTarget::Sagnac),
            "elements" => Ok(DumpTarget::Elements),
            other => Err(format!(
                "unknown dump target `{other}` (expected tbs, closed_form, sagnac or elements)"
            )),
        }
    }
}

impl fmt::Display for DumpTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DumpTarget::Tbs => "tbs",
            DumpTarget::ClosedForm => "closed_form",
            DumpTarget::Sagnac => "sagnac",
            DumpTarget::Elements => "elements",
        })
    }
}

/// Sweep axis, Monte-Carlo spread and per-scenario sweep knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub grid: Grid,
    pub repeats: usize,
    pub input_port: u32,
    /// Input polarization of the tuning scenario.
    pub polarization: Polarization,
    /// Split ratio written to `pd.csv`.
    pub sr_th: f64,
    pub sigma_hwp_angle_deg: f64,
    pub sigma_retardance_rad: f64,
    pub sigma_extinction_db: f64,
    pub sigma_coating_phase_rad: f64,
    pub sigma_transmittance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopSettings {
    pub loop_phase_rad: f64,
    pub m1_phase_rad: f64,
    pub m2_phase_rad: f64,
    /// Step of the θ₂ subsweep over `[0°, 180°)`.
    pub theta2_step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub oam_range: u32,
    pub ports: u32,
    pub tbs: TbsConfig,
    pub sagnac: LoopSettings,
    pub sweep: SweepSettings,
    pub device: TomographyDevice,
    pub crosstalk_db: f64,
    pub dump_target: DumpTarget,
    pub elements: Vec<ElementSpec>,
}

impl ScenarioConfig {
    pub fn space(&self) -> ModeSpace {
        ModeSpace::with_port_count(self.ports, self.oam_range).expect("validated port count")
    }

    pub fn sagnac_config(&self) -> SagnacConfig {
        SagnacConfig {
            tbs: self.tbs.clone(),
            loop_phase_rad: self.sagnac.loop_phase_rad,
            m1_phase_rad: self.sagnac.m1_phase_rad,
            m2_phase_rad: self.sagnac.m2_phase_rad,
        }
    }

    pub fn sweep_spec(&self, variable: SweepVariable) -> SweepSpec {
        let s = &self.sweep;
        SweepSpec {
            variable,
            grid: s.grid,
            repeats: s.repeats,
            seed: self.seed,
            imp: ImperfectionDistribution {
                nominal: self.tbs.imp.clone(),
                sigma_hwp_angle_deg: s.sigma_hwp_angle_deg,
                sigma_retardance_rad: s.sigma_retardance_rad,
                sigma_extinction_db: s.sigma_extinction_db,
                sigma_coating_phase_rad: s.sigma_coating_phase_rad,
                sigma_transmittance: s.sigma_transmittance,
            },
        }
    }

    /// Grid of the Sagnac θ₂ subsweep.
    pub fn theta2_subsweep(&self) -> Grid {
        let step = self.sagnac.theta2_step;
        let n = (180.0 / step).round() as usize;
        let stop = if ((n as f64) * step - 180.0).abs() < 1e-9 {
            (n - 1) as f64 * step
        } else {
            (180.0 / step).floor() * step
        };
        Grid::new(0.0, stop, step).expect("validated step")
    }

    /// Canonical text form. Parsing the result gives back an equal config.
    pub fn serialize(&self) -> String {
        self.render(true)
    }

    /// The resolved config without the output directory, for embedding in
    /// artifacts so that runs into different directories stay identical.
    pub fn header(&self) -> String {
        self.render(false)
    }

    fn render(&self, with_out_dir: bool) -> String {
        let mut o = String::new();
        let kv = |o: &mut String, k: &str, v: &dyn fmt::Display| {
            let _ = writeln!(o, "{k} = {v}");
        };
        kv(&mut o, "scenario", &self.scenario);
        kv(&mut o, "seed", &self.seed);
        if with_out_dir {
            if let Some(d) = &self.out_dir {
                kv(&mut o, "out_dir", &d.display());
            }
        }
        o.push_str("\n[space]\n");
        kv(&mut o, "oam_range", &self.oam_range);
        kv(&mut o, "ports", &self.ports);
        o.push_str("\n[tbs]\n");
        kv(&mut o, "theta1", &self.tbs.theta1_deg);
        kv(&mut o, "theta2", &self.tbs.theta2_deg);
        kv(&mut o, "theta3", &self.tbs.theta3_deg);
        kv(&mut o, "hwp1", &self.tbs.hwp1_enabled);
        o.push_str("\n[imperfections]\n");
        let imp = &self.tbs.imp;
        kv(&mut o, "pbs_extinction_db", &imp.pbs_extinction_db);
        kv(&mut o, "hwp_angle_error_deg", &imp.hwp_angle_error_deg);
        kv(
            &mut o,
            "hwp_retardance_error_rad",
            &imp.hwp_retardance_error_rad,
        );
        kv(&mut o, "coating_phase_rad", &imp.coating_phase_rad);
        for ((port, pol), t) in &imp.port_loss {
            kv(&mut o, &format!("loss.{port}.{pol}"), t);
        }
        o.push_str("\n[sagnac]\n");
        kv(&mut o, "loop_phase_rad", &self.sagnac.loop_phase_rad);
        kv(&mut o, "m1_phase_rad", &self.sagnac.m1_phase_rad);
        kv(&mut o, "m2_phase_rad", &self.sagnac.m2_phase_rad);
        kv(&mut o, "theta2_step", &self.sagnac.theta2_step);
        o.push_str("\n[sweep]\n");
        let s = &self.sweep;
        kv(&mut o, "start", &s.grid.start);
        kv(&mut o, "stop", &s.grid.stop);
        kv(&mut o, "step", &s.grid.step);
        kv(&mut o, "repeats", &s.repeats);
        kv(&mut o, "input_port", &s.input_port);
        kv(&mut o, "polarization", &s.polarization);
        kv(&mut o, "sr_th", &s.sr_th);
        kv(&mut o, "sigma_hwp_angle_deg", &s.sigma_hwp_angle_deg);
        kv(&mut o, "sigma_retardance_rad", &s.sigma_retardance_rad);
        kv(&mut o, "sigma_extinction_db", &s.sigma_extinction_db);
        kv(
            &mut o,
            "sigma_coating_phase_rad",
            &s.sigma_coating_phase_rad,
        );
        kv(&mut o, "sigma_transmittance", &s.sigma_transmittance);
        o.push_str("\n[tomography]\n");
        kv(&mut o, "device", &self.device);
        kv(&mut o, "crosstalk_db", &self.crosstalk_db);
        o.push_str("\n[dump]\n");
        kv(&mut o, "target", &self.dump_target);
        for e in &self.elements {
            kv(&mut o, "element", e);
        }
        o
    }
}

const TOP_KEYS: &[&str] = &["scenario", "seed", "out_dir"];

const SECTIONS: &[(&str, &[&str])] = &[
    ("space", &["oam_range", "ports"]),
    ("tbs", &["theta1", "theta2", "theta3", "hwp1"]),
    (
        "imperfections",
        &[
            "pbs_extinction_db",
            "hwp_angle_error_deg",
            "hwp_retardance_error_rad",
            "coating_phase_rad",
        ],
    ),
    (
        "sagnac",
        &[
            "loop_phase_rad",
            "m1_phase_rad",
            "m2_phase_rad",
            "theta2_step",
        ],
    ),
    (
        "sweep",
        &[
            "start",
            "stop",
            "step",
            "repeats",
            "input_port",
            "polarization",
            "sr_th",
            "sigma_hwp_angle_deg",
            "sigma_retardance_rad",
            "sigma_extinction_db",
            "sigma_coating_phase_rad",
            "sigma_transmittance",
        ],
    ),
    ("tomography", &["device", "crosstalk_db"]),
    ("dump", &["target", "element"]),
];

/// Largest accepted OAM truncation; the basis grows as `ports·2·(2L+1)`.
pub const MAX_OAM_RANGE: u32 = 20;

fn section_has(section: &str, key: &str) -> bool {
    if section == "imperfections" && key.starts_with("loss.") {
        return true;
    }
    SECTIONS
        .iter()
        .any(|(s, keys)| *s == section && keys.contains(&key))
}

/// Maps a key written inside `section` ("" at the top) to its qualified form.
fn qualify(section: &str, key: &str) -> std::result::Result<String, String> {
    if let Some((prefix, rest)) = key.split_once('.') {
        if SECTIONS.iter().any(|(s, _)| *s == prefix) {
            if !section.is_empty() && section != prefix {
                return Err(format!(
                    "key `{key}` does not belong in section [{section}]"
                ));
            }
            return if section_has(prefix, rest) {
                Ok(key.to_string())
            } else {
                Err(format!("unknown key `{key}`"))
            };
        }
    }
    if section.is_empty() {
        if TOP_KEYS.contains(&key) {
            return Ok(key.to_string());
        }
        let owners: Vec<&str> = SECTIONS
            .iter()
            .filter(|(s, _)| section_has(s, key))
            .map(|(s, _)| *s)
            .collect();
        return match owners.as_slice() {
            [one] => Ok(format!("{one}.{key}")),
            _ => Err(format!("unknown key `{key}`")),
        };
    }
    if section_has(section, key) {
        Ok(format!("{section}.{key}"))
    } else {
        Err(format!("unknown key `{key}` in section [{section}]"))
    }
}

/// Raw `key → (value, origin)` pairs before typing.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    values: BTreeMap<String, (String, Origin)>,
    elements: Vec<(String, Origin)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        let mut section = String::new();
        for (i, line) in text.lines().enumerate() {
            let origin = Origin::Line(i + 1);
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| {
                        ConfigError::at(origin, format!("malformed section header `{line}`"))
                    })?
                    .trim();
                if !SECTIONS.iter().any(|(s, _)| *s == name) {
                    return Err(ConfigError::at(origin, format!("unknown section [{name}]")));
                }
                section = name.to_string();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                ConfigError::at(origin, format!("expected `key = value`, got `{line}`"))
            })?;
            raw.insert(&section, k.trim(), v.trim(), origin)?;
        }
        Ok(raw)
    }

    /// Applies a `key=value` override; the key is qualified or bare-unique.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment.split_once('=').ok_or_else(|| {
            ConfigError::at(
                Origin::Override,
                format!("expected key=value, got `{assignment}`"),
            )
        })?;
        let key = qualify("", k.trim()).map_err(|m| ConfigError::at(Origin::Override, m))?;
        if key == "dump.element" {
            self.elements.push((v.trim().to_string(), Origin::Override));
        } else {
            self.values
                .insert(key, (v.trim().to_string(), Origin::Override));
        }
        Ok(())
    }

    fn insert(&mut self, section: &str, key: &str, value: &str, origin: Origin) -> Result<()> {
        let key = qualify(section, key).map_err(|m| ConfigError::at(origin, m))?;
        if key == "dump.element" {
            self.elements.push((value.to_string(), origin));
            return Ok(());
        }
        if let Some((_, first)) = self.values.get(&key) {
            return Err(ConfigError::at(
                origin,
                format!("duplicate key `{key}` (first set at {first})"),
            ));
        }
        self.values.insert(key, (value.to_string(), origin));
        Ok(())
    }

    fn take<T>(
        &mut self,
        key: &str,
        parse: impl Fn(&str) -> std::result::Result<T, String>,
    ) -> Result<Option<(T, Origin)>> {
        match self.values.remove(key) {
            None => Ok(None),
            Some((v, origin)) => parse(&v)
                .map(|x| Some((x, origin)))
                .map_err(|m| ConfigError::at(origin, format!("{key}: {m}"))),
        }
    }

    fn get<T>(
        &mut self,
        key: &str,
        default: T,
        parse: impl Fn(&str) -> std::result::Result<T, String>,
    ) -> Result<T> {
        Ok(self.take(key, parse)?.map(|(x, _)| x).unwrap_or(default))
    }

    pub fn build(mut self) -> Result<ScenarioConfig> {
        let scenario = self
            .take("scenario", |s| s.parse::<Scenario>())?
            .map(|(s, _)| s)
            .ok_or_else(|| ConfigError::global("missing required key `scenario`"))?;
        let seed = self.get("seed", 0u64, int)?;
        let out_dir = self
            .take("out_dir", |s| Ok(PathBuf::from(s)))?
            .map(|(p, _)| p);

        let oam_range = self.get("space.oam_range", 4u32, int)?;
        let ports = self.get("space.ports", 6u32, int)?;
        let in_space = |p: u32| (1..=ports).contains(&p);

        let tbs = TbsConfig {
            theta1_deg: self.get("tbs.theta1", 45.0, finite)?,
            theta2_deg: self.get("tbs.theta2", 22.5, finite)?,
            theta3_deg: self.get("tbs.theta3", 45.0, finite)?,
            hwp1_enabled: self.get("tbs.hwp1", false, boolean)?,
            imp: ImperfectionParams::ideal(),
        };
        let mut imp = ImperfectionParams {
            pbs_extinction_db: self.get("imperfections.pbs_extinction_db", f64::INFINITY, |s| {
                let x = number(s)?;
                if x.is_nan() || x < 0.0 {
                    Err(format!("extinction must be ≥ 0, got {x}"))
                } else {
                    Ok(x)
                }
            })?,
            hwp_angle_error_deg: self.get("imperfections.hwp_angle_error_deg", 0.0, finite)?,
            hwp_retardance_error_rad: self.get(
                "imperfections.hwp_retardance_error_rad",
                0.0,
                finite,
            )?,
            coating_phase_rad: self.get(
                "imperfections.coating_phase_rad",
                std::f64::consts::PI,
                finite,
            )?,
            ..ImperfectionParams::ideal()
        };
        let loss_keys: Vec<String> = self
            .values
            .keys()
            .filter(|k| k.starts_with("imperfections.loss."))
            .cloned()
            .collect();
        for key in loss_keys {
            let (value, origin) = self.values.remove(&key).expect("listed key");
            let at = |m: String| ConfigError::at(origin, m);
            let rest = &key["imperfections.loss.".len()..];
            let (port, pol) = rest
                .split_once('.')
                .ok_or_else(|| at(format!("`{key}`: expected loss.<port>.<h|v>")))?;
            let port: u32 = port
                .parse()
                .map_err(|_| at(format!("`{key}`: bad port `{port}`")))?;
            if !in_space(port) {
                return Err(at(format!("`{key}`: port {port} outside 1..={ports}")));
            }
            let pol: Polarization = pol.parse().map_err(|e| at(format!("`{key}`: {e}")))?;
            let t = number(&value).map_err(|m| at(format!("{key}: {m}")))?;
            if !(0.0..=1.0).contains(&t) {
                return Err(at(format!(
                    "{key}: transmittance must lie in [0, 1], got {t}"
                )));
            }
            imp.port_loss.insert((port, pol), t);
        }
        let tbs = TbsConfig { imp, ..tbs };

        let sagnac = LoopSettings {
            loop_phase_rad: self.get("sagnac.loop_phase_rad", 0.0, finite)?,
            m1_phase_rad: self.get("sagnac.m1_phase_rad", 0.0, finite)?,
            m2_phase_rad: self.get("sagnac.m2_phase_rad", 0.0, finite)?,
            theta2_step: self.get("sagnac.theta2_step", 0.1, positive)?,
        };

        let d = scenario.default_grid();
        let grid_origin = self.values.get("sweep.step").map(|v| v.1);
        let grid = Grid {
            start: self.get("sweep.start", d.start, finite)?,
            stop: self.get("sweep.stop", d.stop, finite)?,
            step: self.get("sweep.step", d.step, positive)?,
        };
        grid.validate().map_err(|e| ConfigError {
            origin: grid_origin,
            message: e.to_string(),
        })?;
        let sweep = SweepSettings {
            grid,
            repeats: self.get("sweep.repeats", 100usize, |s| {
                let n: usize = int(s)?;
                if n == 0 {
                    Err("repeats must be ≥ 1".into())
                } else {
                    Ok(n)
                }
            })?,
            input_port: self.get("sweep.input_port", 1u32, |s| match int(s)? {
                p @ (1 | 2) => Ok(p),
                p => Err(format!("input port must be 1 or 2, got {p}")),
            })?,
            polarization: self.get("sweep.polarization", Polarization::H, |s| {
                s.parse().map_err(|e: tbs_core::Error| e.to_string())
            })?,
            sr_th: self.get("sweep.sr_th", 0.5, |s| {
                let x = number(s)?;
                if x > 0.0 && x <= 0.5 {
                    Ok(x)
                } else {
                    Err(format!("split ratio must lie in (0, 0.5], got {x}"))
                }
            })?,
            sigma_hwp_angle_deg: self.get("sweep.sigma_hwp_angle_deg", 0.0, nonneg)?,
            sigma_retardance_rad: self.get("sweep.sigma_retardance_rad", 0.0, nonneg)?,
            sigma_extinction_db: self.get("sweep.sigma_extinction_db", 0.0, nonneg)?,
            sigma_coating_phase_rad: self.get("sweep.sigma_coating_phase_rad", 0.0, nonneg)?,
            sigma_transmittance: self.get("sweep.sigma_transmittance", 0.0, nonneg)?,
        };

        let device = self.get("tomography.device", TomographyDevice::Tbs, |s| {
            s.parse().map_err(|e: tbs_core::Error| e.to_string())
        })?;
        let crosstalk_db = self.get("tomography.crosstalk_db", f64::INFINITY, |s| {
            let x = number(s)?;
            if x.is_nan() || x < 0.0 {
                Err(format!("crosstalk must be ≥ 0 dB, got {x}"))
            } else {
                Ok(x)
            }
        })?;
        let dump_target = self.get("dump.target", DumpTarget::Tbs, |s| s.parse())?;
        let elements = std::mem::take(&mut self.elements)
            .into_iter()
            .map(|(text, origin)| {
                text.parse::<ElementSpec>()
                    .map_err(|e| ConfigError::at(origin, format!("element: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;

        debug_assert!(
            self.values.is_empty(),
            "unconsumed keys {:?}",
            self.values.keys()
        );

        if ports < 6 {
            return Err(ConfigError::global(format!(
                "the splitter needs ports 1..=6, got {ports} ports"
            )));
        }
        if oam_range > MAX_OAM_RANGE {
            return Err(ConfigError::global(format!(
                "oam_range {oam_range} exceeds the supported maximum {MAX_OAM_RANGE}"
            )));
        }
        if dump_target == DumpTarget::Elements && scenario == Scenario::Dump && elements.is_empty()
        {
            return Err(ConfigError::global(
                "dump target `elements` needs at least one `element` line",
            ));
        }
        let cfg = ScenarioConfig {
            scenario,
            seed,
            out_dir,
            oam_range,
            ports,
            tbs,
            sagnac,
            sweep,
            device,
            crosstalk_db,
            dump_target,
            elements,
        };
        cfg.tbs
            .validate()
            .map_err(|e| ConfigError::global(e.to_string()))?;
        cfg.sweep_spec(SweepVariable::Hwp2Theta)
            .validate()
            .map_err(|e| ConfigError::global(e.to_string()))?;
        Ok(cfg)
    }
}

fn number(s: &str) -> std::result::Result<f64, String> {
    match s {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s
            .parse()
            .map_err(|_| format!("expected a number, got `{s}`")),
    }
}

fn finite(s: &str) -> std::result::Result<f64, String> {
    let x = number(s)?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("expected a finite number, got `{s}`"))
    }
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    let x = finite(s)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(format!("must be > 0, got {x}"))
    }
}

fn nonneg(s: &str) -> std::result::Result<f64, String> {
    let x = finite(s)?;
    if x >= 0.0 {
        Ok(x)
    } else {
        Err(format!("must be ≥ 0, got {x}"))
    }
}

fn int<T: FromStr>(s: &str) -> std::result::Result<T, String> {
    s.parse()
        .map_err(|_| format!("expected a non-negative integer, got `{s}`"))
}

fn boolean(s: &str) -> std::result::Result<bool, String> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got `{s}`")),
    }
}

/// Parses and validates a scenario file.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    RawConfig::parse(text)?.build()
}

/// Parses a scenario file and applies `key=value` overrides on top.
pub fn parse_config_with_overrides(text: &str, overrides: &[String]) -> Result<ScenarioConfig> {
    let mut raw = RawConfig::parse(text)?;
    for o in overrides {
        raw.set(o)?;
    }
    raw.build()
}
