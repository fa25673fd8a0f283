//! Experiment configuration.
//!
//! The format is sectioned `key = value` text: section names in square
//! brackets, one assignment per line, `#` comments. Family-valued keys use
//! compact descriptors like `raised_cosine:0.1,1` or `mm:1.0,0.5`; list
//! values separate entries with commas (floats) or semicolons (family
//! parameters).
//!
//! Parsing validates everything it can and reports *all* problems, each
//! with its line number. [`emit_config`] writes a canonical form (every
//! applicable key with its resolved value, floats at full precision) that
//! reparses to an equal configuration; the run manifest embeds it.

use crate::geometry::ProfileShape;
use crate::macro1d::InflowLaw;
use crate::model::absorption::{AxialMod, FastMod, TimeMod};
use crate::model::pulse::{AmplitudeLaw, FrictionLaw, PeriodicShape};
use crate::model::{Saturating, UnitScales};
use std::fmt;

#[derive(Debug, Clone)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "line {n}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

/// Pipeline selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModuleKind {
    OdeSim,
    OdeConverge,
    Geometry,
    Homogenize,
    CellSolve,
    MacroSolve,
    MicroVerify,
    Compare,
}

impl ModuleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModuleKind::OdeSim => "ode-sim",
            ModuleKind::OdeConverge => "ode-converge",
            ModuleKind::Geometry => "geometry",
            ModuleKind::Homogenize => "homogenize",
            ModuleKind::CellSolve => "cell-solve",
            ModuleKind::MacroSolve => "macro-solve",
            ModuleKind::MicroVerify => "micro-verify",
            ModuleKind::Compare => "compare",
        }
    }

    pub fn from_str(s: &str) -> Option<Self> {
        Some(match s {
            "ode-sim" => ModuleKind::OdeSim,
            "ode-converge" => ModuleKind::OdeConverge,
            "geometry" => ModuleKind::Geometry,
            "homogenize" => ModuleKind::Homogenize,
            "cell-solve" => ModuleKind::CellSolve,
            "macro-solve" => ModuleKind::MacroSolve,
            "micro-verify" => ModuleKind::MicroVerify,
            "compare" => ModuleKind::Compare,
            _ => return None,
        })
    }

    pub fn all() -> [ModuleKind; 8] {
        [
            ModuleKind::OdeSim,
            ModuleKind::OdeConverge,
            ModuleKind::Geometry,
            ModuleKind::Homogenize,
            ModuleKind::CellSolve,
            ModuleKind::MacroSolve,
            ModuleKind::MicroVerify,
            ModuleKind::Compare,
        ]
    }

    fn sections(self) -> &'static [&'static str] {
        match self {
            ModuleKind::OdeSim | ModuleKind::OdeConverge => {
                &["experiment", "units", "pulse", "kinetics", "ode"]
            }
            ModuleKind::Geometry => &["experiment", "units", "profile"],
            ModuleKind::Homogenize => {
                &["experiment", "units", "profile", "velocity", "absorption", "homogenize"]
            }
            ModuleKind::CellSolve => {
                &["experiment", "units", "profile", "velocity", "absorption", "cell"]
            }
            ModuleKind::MacroSolve => {
                &["experiment", "units", "profile", "velocity", "absorption", "transport", "inflow"]
            }
            ModuleKind::MicroVerify | ModuleKind::Compare => &[
                "experiment",
                "units",
                "profile",
                "velocity",
                "absorption",
                "transport",
                "micro",
                "inflow",
            ],
        }
    }
}

/// Profile selector; tables come from a CSV file resolved when the models
/// are built.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSpec {
    Flat,
    RaisedCosine { amp: f64, freq: u32 },
    Bumpy { amp: f64, freq_z: u32, freq_theta: u32, beta: f64 },
    TableCsv(String),
}

impl ProfileSpec {
    /// Resolve into a geometry shape, reading table files relative to `base`.
    pub fn build(&self, base: &std::path::Path) -> Result<ProfileShape, String> {
        Ok(match self {
            ProfileSpec::Flat => ProfileShape::Flat,
            ProfileSpec::RaisedCosine { amp, freq } => {
                ProfileShape::RaisedCosine { amp: *amp, freq: *freq }
            }
            ProfileSpec::Bumpy { amp, freq_z, freq_theta, beta } => ProfileShape::Bumpy {
                amp: *amp,
                freq_z: *freq_z,
                freq_theta: *freq_theta,
                beta: *beta,
            },
            ProfileSpec::TableCsv(path) => {
                let full = base.join(path);
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| format!("cannot read profile table {}: {e}", full.display()))?;
                ProfileShape::Table(
                    crate::geometry::ProfileTable::from_csv(&text).map_err(|e| e.to_string())?,
                )
            }
        })
    }
}

/// Velocity selector (the custom closure family is library-only).
#[derive(Debug, Clone, PartialEq)]
pub enum VelocitySpec {
    Zero,
    Plug { mean_speed: f64 },
    Poiseuille { mean_speed: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum KineticsSpec {
    Zero,
    LinearDecay(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSection {
    pub wave_speed: f64,
    pub pulse_period: f64,
    pub shape: PeriodicShape,
    pub friction: FrictionLaw,
    pub amplitude: AmplitudeLaw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KineticsSection {
    pub species: usize,
    pub law: KineticsSpec,
    pub lipschitz_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeSection {
    pub v0: f64,
    pub y0: Vec<f64>,
    pub t_final: f64,
    pub dt: f64,
    pub record_points: usize,
    pub quadrature_nodes: usize,
    pub eps_list: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSection {
    pub base_radius: f64,
    pub shape: ProfileSpec,
    pub n_z: usize,
    pub n_theta: usize,
    pub n_rho: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionSection {
    pub eta_p_base: f64,
    pub eta_p_fast: FastMod,
    pub eta_p_axial: AxialMod,
    pub eta_a_base: f64,
    pub eta_a_fast: FastMod,
    pub eta_a_time: TimeMod,
    pub rho_base: f64,
    pub rho_fast: FastMod,
    pub g_a: Saturating,
    pub alpha: f64,
    pub omega: f64,
    pub chi: f64,
    pub zeta_base: f64,
    pub zeta_axial: AxialMod,
    pub zeta_time: TimeMod,
    pub phi: Saturating,
    pub eta_lower_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomogenizeSection {
    pub x1_samples: Vec<f64>,
    pub t_samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSection {
    pub p: f64,
    pub mu: f64,
    pub nu: f64,
    pub delta: f64,
    pub x1: f64,
    pub t: f64,
    pub n_z: usize,
    pub n_rho: usize,
    pub rtol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportSection {
    pub length: f64,
    pub n_cells: usize,
    pub t_final: f64,
    pub cfl: f64,
    pub snapshots: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MicroSection {
    pub eps_list: Vec<f64>,
    pub n_z_per_period: usize,
    pub n_rho: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InflowSection {
    pub u0: InflowLaw,
    pub v0: InflowLaw,
}

/// Fully parsed and validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub module: ModuleKind,
    pub name: String,
    pub out_dir: String,
    pub units: UnitScales,
    pub pulse: Option<PulseSection>,
    pub kinetics: Option<KineticsSection>,
    pub ode: Option<OdeSection>,
    pub profile: Option<ProfileSection>,
    pub velocity: Option<VelocitySpec>,
    pub absorption: Option<AbsorptionSection>,
    pub homogenize: Option<HomogenizeSection>,
    pub cell: Option<CellSection>,
    pub transport: Option<TransportSection>,
    pub micro: Option<MicroSection>,
    pub inflow: Option<InflowSection>,
}

// ---------------------------------------------------------------------------
// Raw text parsing.

struct RawKey {
    value: String,
    line: usize,
    used: std::cell::Cell<bool>,
}

struct RawSection {
    line: usize,
    keys: Vec<(String, RawKey)>,
}

impl RawSection {
    fn get(&self, key: &str) -> Option<&RawKey> {
        self.keys.iter().find(|(k, _)| k == key).map(|(_, v)| {
            v.used.set(true);
            v
        })
    }
}

fn parse_raw(text: &str) -> (Vec<(String, RawSection)>, Vec<ConfigError>) {
    let mut sections: Vec<(String, RawSection)> = Vec::new();
    let mut errors = Vec::new();
    let mut current: Option<usize> = None;
    for (idx, raw_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim().to_string();
            if sections.iter().any(|(n, _)| *n == name) {
                errors.push(ConfigError {
                    line: Some(lineno),
                    message: format!("duplicate section [{name}]"),
                });
            }
            sections.push((name, RawSection { line: lineno, keys: Vec::new() }));
            current = Some(sections.len() - 1);
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(ConfigError {
                line: Some(lineno),
                message: format!("expected 'key = value', got '{line}'"),
            });
            continue;
        };
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        match current {
            None => errors.push(ConfigError {
                line: Some(lineno),
                message: format!("key '{key}' appears before any [section]"),
            }),
            Some(s) => {
                let sec = &mut sections[s].1;
                if sec.keys.iter().any(|(k, _)| *k == key) {
                    errors.push(ConfigError {
                        line: Some(lineno),
                        message: format!("duplicate key '{key}'"),
                    });
                }
                sec.keys.push((
                    key,
                    RawKey { value, line: lineno, used: std::cell::Cell::new(false) },
                ));
            }
        }
    }
    (sections, errors)
}

// ---------------------------------------------------------------------------
// Typed readers.

struct Reader<'a> {
    section: &'a RawSection,
    name: &'a str,
    errors: &'a mut Vec<ConfigError>,
}

impl Reader<'_> {
    fn err(&mut self, line: usize, msg: String) {
        self.errors.push(ConfigError { line: Some(line), message: msg });
    }

    fn raw(&mut self, key: &str) -> Option<(String, usize)> {
        match self.section.get(key) {
            Some(k) => Some((k.value.clone(), k.line)),
            None => {
                self.errors.push(ConfigError {
                    line: Some(self.section.line),
                    message: format!("section [{}] is missing key '{key}'", self.name),
                });
                None
            }
        }
    }

    fn f64(&mut self, key: &str) -> Option<f64> {
        let (v, line) = self.raw(key)?;
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Some(x),
            _ => {
                self.err(line, format!("'{key}' must be a finite number, got '{v}'"));
                None
            }
        }
    }

    fn f64_or(&mut self, key: &str, default: f64) -> f64 {
        match self.section.get(key) {
            None => default,
            Some(k) => match k.value.parse::<f64>() {
                Ok(x) if x.is_finite() => x,
                _ => {
                    let (v, line) = (k.value.clone(), k.line);
                    self.err(line, format!("'{key}' must be a finite number, got '{v}'"));
                    default
                }
            },
        }
    }

    fn usize_or(&mut self, key: &str, default: usize) -> usize {
        match self.section.get(key) {
            None => default,
            Some(k) => match k.value.parse::<usize>() {
                Ok(x) => x,
                _ => {
                    let (v, line) = (k.value.clone(), k.line);
                    self.err(line, format!("'{key}' must be a nonnegative integer, got '{v}'"));
                    default
                }
            },
        }
    }

    fn usize_req(&mut self, key: &str) -> Option<usize> {
        let (v, line) = self.raw(key)?;
        match v.parse::<usize>() {
            Ok(x) => Some(x),
            _ => {
                self.err(line, format!("'{key}' must be a nonnegative integer, got '{v}'"));
                None
            }
        }
    }

    fn string_or(&mut self, key: &str, default: &str) -> String {
        match self.section.get(key) {
            None => default.to_string(),
            Some(k) => k.value.clone(),
        }
    }

    fn f64_list(&mut self, key: &str) -> Option<Vec<f64>> {
        let (v, line) = self.raw(key)?;
        match parse_float_list(&v) {
            Ok(list) => Some(list),
            Err(m) => {
                self.err(line, format!("'{key}': {m}"));
                None
            }
        }
    }

    fn f64_list_or(&mut self, key: &str, default: Vec<f64>) -> Vec<f64> {
        match self.section.get(key) {
            None => default,
            Some(k) => match parse_float_list(&k.value) {
                Ok(list) => list,
                Err(m) => {
                    let line = k.line;
                    self.err(line, format!("'{key}': {m}"));
                    default
                }
            },
        }
    }

    fn family_or<T>(
        &mut self,
        key: &str,
        default: T,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> T {
        match self.section.get(key) {
            None => default,
            Some(k) => match parse(&k.value) {
                Ok(t) => t,
                Err(m) => {
                    let line = k.line;
                    self.err(line, format!("'{key}': {m}"));
                    default
                }
            },
        }
    }

    fn family_req<T>(&mut self, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Option<T> {
        let (v, line) = self.raw(key)?;
        match parse(&v) {
            Ok(t) => Some(t),
            Err(m) => {
                self.err(line, format!("'{key}': {m}"));
                None
            }
        }
    }

    fn finish(self) {
        for (k, raw) in &self.section.keys {
            if !raw.used.get() {
                self.errors.push(ConfigError {
                    line: Some(raw.line),
                    message: format!("unknown key '{k}' in section [{}]", self.name),
                });
            }
        }
    }
}

fn parse_float_list(s: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        out.push(part.parse::<f64>().map_err(|_| format!("bad number '{part}'"))?);
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

fn split_family(s: &str) -> (&str, Vec<&str>) {
    match s.split_once(':') {
        Some((name, args)) => (name.trim(), args.split(',').map(str::trim).collect()),
        None => (s.trim(), Vec::new()),
    }
}

fn args_f64(args: &[&str], n: usize, family: &str) -> Result<Vec<f64>, String> {
    if args.len() != n {
        return Err(format!("family '{family}' needs {n} parameters, got {}", args.len()));
    }
    args.iter().map(|a| a.parse::<f64>().map_err(|_| format!("bad number '{a}'"))).collect()
}

fn parse_semicolon_floats(s: &str) -> Result<Vec<f64>, String> {
    s.split(';').map(|p| p.trim().parse::<f64>().map_err(|_| format!("bad number '{p}'"))).collect()
}

pub fn parse_pulse_shape(s: &str) -> Result<PeriodicShape, String> {
    let (name, args) = split_family(s);
    match name {
        "raised_sine" => Ok(PeriodicShape::RaisedSine),
        "constant" => Ok(PeriodicShape::Constant { value: args_f64(&args, 1, name)?[0] }),
        "von_mises" => {
            let a = args_f64(&args, 2, name)?;
            Ok(PeriodicShape::VonMises { kappa: a[0], center: a[1] })
        }
        "table" => {
            if args.len() != 1 {
                return Err("table needs one ';'-separated sample list".into());
            }
            Ok(PeriodicShape::Table(parse_semicolon_floats(args[0])?))
        }
        _ => Err(format!("unknown pulse shape '{name}'")),
    }
}

pub fn emit_pulse_shape(s: &PeriodicShape) -> String {
    match s {
        PeriodicShape::RaisedSine => "raised_sine".into(),
        PeriodicShape::Constant { value } => format!("constant:{}", g17(*value)),
        PeriodicShape::VonMises { kappa, center } => {
            format!("von_mises:{},{}", g17(*kappa), g17(*center))
        }
        PeriodicShape::Table(v) => format!("table:{}", join17(v, ";")),
    }
}

pub fn parse_friction(s: &str) -> Result<FrictionLaw, String> {
    let (name, args) = split_family(s);
    match name {
        "constant" => Ok(FrictionLaw::Constant { k: args_f64(&args, 1, name)?[0] }),
        "cosine" => {
            let a = args_f64(&args, 3, name)?;
            Ok(FrictionLaw::Cosine { base: a[0], amp: a[1], period: a[2] })
        }
        _ => Err(format!("unknown friction law '{name}'")),
    }
}

pub fn emit_friction(f: &FrictionLaw) -> String {
    match f {
        FrictionLaw::Constant { k } => format!("constant:{}", g17(*k)),
        FrictionLaw::Cosine { base, amp, period } => {
            format!("cosine:{},{},{}", g17(*base), g17(*amp), g17(*period))
        }
    }
}

pub fn parse_fast_mod(s: &str) -> Result<FastMod, String> {
    let (name, args) = split_family(s);
    match name {
        "const" => Ok(FastMod::Const),
        "harmonic" => {
            let a = args_f64(&args, 2, name)?;
            Ok(FastMod::Harmonic { amp: a[0], freq: a[1] as u32 })
        }
        "tip" => {
            let a = args_f64(&args, 2, name)?;
            Ok(FastMod::TipWeighted { amp: a[0], freq: a[1] as u32 })
        }
        "table" => {
            if args.len() != 1 {
                return Err("table needs one ';'-separated sample list".into());
            }
            Ok(FastMod::Table(parse_semicolon_floats(args[0])?))
        }
        _ => Err(format!("unknown fast-scale modulation '{name}'")),
    }
}

pub fn emit_fast_mod(m: &FastMod) -> String {
    match m {
        FastMod::Const => "const".into(),
        FastMod::Harmonic { amp, freq } => format!("harmonic:{},{freq}", g17(*amp)),
        FastMod::TipWeighted { amp, freq } => format!("tip:{},{freq}", g17(*amp)),
        FastMod::Table(v) => format!("table:{}", join17(v, ";")),
    }
}

pub fn parse_axial_mod(s: &str) -> Result<AxialMod, String> {
    let (name, args) = split_family(s);
    match name {
        "const" => Ok(AxialMod::Const),
        "decay" => Ok(AxialMod::Decay { rate: args_f64(&args, 1, name)?[0] }),
        "table" => {
            if args.len() != 2 {
                return Err("axial table needs 'table:dx,v1;v2;...'".into());
            }
            let dx = args[0].parse::<f64>().map_err(|_| format!("bad number '{}'", args[0]))?;
            Ok(AxialMod::Table { dx, values: parse_semicolon_floats(args[1])? })
        }
        _ => Err(format!("unknown axial modulation '{name}'")),
    }
}

pub fn emit_axial_mod(m: &AxialMod) -> String {
    match m {
        AxialMod::Const => "const".into(),
        AxialMod::Decay { rate } => format!("decay:{}", g17(*rate)),
        AxialMod::Table { dx, values } => format!("table:{},{}", g17(*dx), join17(values, ";")),
    }
}

pub fn parse_time_mod(s: &str) -> Result<TimeMod, String> {
    let (name, args) = split_family(s);
    match name {
        "const" => Ok(TimeMod::Const),
        "sin2" => {
            let a = args_f64(&args, 2, name)?;
            Ok(TimeMod::Sin2 { amp: a[0], period: a[1] })
        }
        _ => Err(format!("unknown time modulation '{name}'")),
    }
}

pub fn emit_time_mod(m: &TimeMod) -> String {
    match m {
        TimeMod::Const => "const".into(),
        TimeMod::Sin2 { amp, period } => format!("sin2:{},{}", g17(*amp), g17(*period)),
    }
}

pub fn parse_saturating(s: &str) -> Result<Saturating, String> {
    let (name, args) = split_family(s);
    match name {
        "zero" => Ok(Saturating::Zero),
        "mm" => {
            let a = args_f64(&args, 2, name)?;
            Ok(Saturating::MichaelisMenten { v_max: a[0], k_m: a[1] })
        }
        "satlin" => {
            let a = args_f64(&args, 2, name)?;
            Ok(Saturating::SatLinear { slope: a[0], cap: a[1] })
        }
        _ => Err(format!("unknown saturation law '{name}'")),
    }
}

pub fn emit_saturating(s: &Saturating) -> String {
    match s {
        Saturating::Zero => "zero".into(),
        Saturating::MichaelisMenten { v_max, k_m } => format!("mm:{},{}", g17(*v_max), g17(*k_m)),
        Saturating::SatLinear { slope, cap } => format!("satlin:{},{}", g17(*slope), g17(*cap)),
    }
}

pub fn parse_inflow_law(s: &str) -> Result<InflowLaw, String> {
    let (name, args) = split_family(s);
    match name {
        "zero" => Ok(InflowLaw::Zero),
        "sin2_ramp" => {
            let a = args_f64(&args, 2, name)?;
            Ok(InflowLaw::Sin2Ramp { amp: a[0], t_ramp: a[1] })
        }
        "sin2_pulse" => {
            let a = args_f64(&args, 2, name)?;
            Ok(InflowLaw::Sin2Pulse { amp: a[0], t_pulse: a[1] })
        }
        "half_sine" => {
            let a = args_f64(&args, 2, name)?;
            Ok(InflowLaw::HalfSine { amp: a[0], period: a[1] })
        }
        _ => Err(format!("unknown inflow law '{name}'")),
    }
}

pub fn emit_inflow_law(l: &InflowLaw) -> String {
    match l {
        InflowLaw::Zero => "zero".into(),
        InflowLaw::Sin2Ramp { amp, t_ramp } => format!("sin2_ramp:{},{}", g17(*amp), g17(*t_ramp)),
        InflowLaw::Sin2Pulse { amp, t_pulse } => {
            format!("sin2_pulse:{},{}", g17(*amp), g17(*t_pulse))
        }
        InflowLaw::HalfSine { amp, period } => {
            format!("half_sine:{},{}", g17(*amp), g17(*period))
        }
    }
}

pub fn parse_profile_spec(s: &str) -> Result<ProfileSpec, String> {
    let (name, args) = split_family(s);
    match name {
        "flat" => Ok(ProfileSpec::Flat),
        "raised_cosine" => {
            let a = args_f64(&args, 2, name)?;
            Ok(ProfileSpec::RaisedCosine { amp: a[0], freq: a[1] as u32 })
        }
        "bumpy" => {
            let a = args_f64(&args, 4, name)?;
            Ok(ProfileSpec::Bumpy {
                amp: a[0],
                freq_z: a[1] as u32,
                freq_theta: a[2] as u32,
                beta: a[3],
            })
        }
        "table_csv" => {
            if args.len() != 1 || args[0].is_empty() {
                return Err("table_csv needs a file path".into());
            }
            Ok(ProfileSpec::TableCsv(args[0].to_string()))
        }
        _ => Err(format!("unknown profile '{name}'")),
    }
}

pub fn emit_profile_spec(p: &ProfileSpec) -> String {
    match p {
        ProfileSpec::Flat => "flat".into(),
        ProfileSpec::RaisedCosine { amp, freq } => format!("raised_cosine:{},{freq}", g17(*amp)),
        ProfileSpec::Bumpy { amp, freq_z, freq_theta, beta } => {
            format!("bumpy:{},{freq_z},{freq_theta},{}", g17(*amp), g17(*beta))
        }
        ProfileSpec::TableCsv(path) => format!("table_csv:{path}"),
    }
}

pub fn parse_velocity_spec(s: &str) -> Result<VelocitySpec, String> {
    let (name, args) = split_family(s);
    match name {
        "zero" => Ok(VelocitySpec::Zero),
        "plug" => Ok(VelocitySpec::Plug { mean_speed: args_f64(&args, 1, name)?[0] }),
        "poiseuille" => Ok(VelocitySpec::Poiseuille { mean_speed: args_f64(&args, 1, name)?[0] }),
        _ => Err(format!("unknown velocity family '{name}'")),
    }
}

pub fn emit_velocity_spec(v: &VelocitySpec) -> String {
    match v {
        VelocitySpec::Zero => "zero".into(),
        VelocitySpec::Plug { mean_speed } => format!("plug:{}", g17(*mean_speed)),
        VelocitySpec::Poiseuille { mean_speed } => format!("poiseuille:{}", g17(*mean_speed)),
    }
}

fn parse_kinetics_spec(s: &str) -> Result<KineticsSpec, String> {
    let (name, args) = split_family(s);
    match name {
        "zero" => Ok(KineticsSpec::Zero),
        "linear_decay" => {
            if args.len() != 1 {
                return Err("linear_decay needs one ';'-separated rate list".into());
            }
            Ok(KineticsSpec::LinearDecay(parse_semicolon_floats(args[0])?))
        }
        _ => Err(format!("unknown kinetics law '{name}'")),
    }
}

fn emit_kinetics_spec(k: &KineticsSpec) -> String {
    match k {
        KineticsSpec::Zero => "zero".into(),
        KineticsSpec::LinearDecay(r) => format!("linear_decay:{}", join17(r, ";")),
    }
}

fn g17(x: f64) -> String {
    crate::csvio::fmt_g17(x)
}

fn join17(v: &[f64], sep: &str) -> String {
    v.iter().map(|x| g17(*x)).collect::<Vec<_>>().join(sep)
}

// ---------------------------------------------------------------------------
// Parse + validate.

/// Parse the sectioned text; on failure every problem found is returned,
/// each with its line number where one applies.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<ConfigError>> {
    let (sections, mut errors) = parse_raw(text);
    let find = |name: &str| sections.iter().find(|(n, _)| n == name).map(|(_, s)| s);

    let Some(exp) = find("experiment") else {
        errors.push(ConfigError { line: None, message: "missing section [experiment]".into() });
        return Err(errors);
    };
    let mut r = Reader { section: exp, name: "experiment", errors: &mut errors };
    let module = match r.raw("module") {
        Some((v, line)) => match ModuleKind::from_str(&v) {
            Some(m) => Some(m),
            None => {
                r.err(
                    line,
                    format!(
                        "unknown module '{v}'; expected one of {}",
                        ModuleKind::all().map(|m| m.as_str()).join(", ")
                    ),
                );
                None
            }
        },
        None => None,
    };
    let name = r.string_or("name", "run");
    let out_dir = r.string_or("out_dir", "out");
    r.finish();
    let Some(module) = module else {
        return Err(errors);
    };

    // Reject sections the module does not consume.
    for (secname, sec) in &sections {
        if !module.sections().contains(&secname.as_str()) {
            errors.push(ConfigError {
                line: Some(sec.line),
                message: format!("section [{secname}] is not used by module {}", module.as_str()),
            });
        }
    }

    let units = match find("units") {
        Some(sec) => {
            let mut r = Reader { section: sec, name: "units", errors: &mut errors };
            let u = UnitScales {
                length: r.f64_or("length", 1.0),
                time: r.f64_or("time", 1.0),
                concentration: r.f64_or("concentration", 1.0),
            };
            r.finish();
            if let Err(e) = u.validate() {
                errors.push(ConfigError { line: Some(sec.line), message: e.to_string() });
            }
            u
        }
        None => UnitScales::default(),
    };

    let mut cfg = ExperimentConfig {
        module,
        name,
        out_dir,
        units,
        pulse: None,
        kinetics: None,
        ode: None,
        profile: None,
        velocity: None,
        absorption: None,
        homogenize: None,
        cell: None,
        transport: None,
        micro: None,
        inflow: None,
    };

    let need = |name: &str| module.sections().contains(&name);
    let missing = |errors: &mut Vec<ConfigError>, name: &str| {
        errors.push(ConfigError {
            line: None,
            message: format!("module {} requires section [{name}]", module.as_str()),
        });
    };

    if need("pulse") {
        match find("pulse") {
            None => missing(&mut errors, "pulse"),
            Some(sec) => {
                let mut r = Reader { section: sec, name: "pulse", errors: &mut errors };
                let wave_speed = r.f64("wave_speed").unwrap_or(1.0);
                let pulse_period = r.f64("pulse_period").unwrap_or(0.01);
                let shape = r.family_or("shape", PeriodicShape::RaisedSine, parse_pulse_shape);
                let friction =
                    r.family_or("friction", FrictionLaw::Constant { k: 1.0 }, parse_friction);
                let amp_list = r.f64_list_or("amplitude", vec![1.0, 1.0, 1.0, 0.1]);
                let amplitude = if amp_list.len() == 4 {
                    AmplitudeLaw { c0: amp_list[0], c1: amp_list[1], a: amp_list[2], b: amp_list[3] }
                } else {
                    r.err(sec.line, "'amplitude' needs 4 numbers c0,c1,a,b".into());
                    AmplitudeLaw { c0: 1.0, c1: 1.0, a: 1.0, b: 0.1 }
                };
                r.finish();
                cfg.pulse =
                    Some(PulseSection { wave_speed, pulse_period, shape, friction, amplitude });
            }
        }
    }

    if need("kinetics") {
        match find("kinetics") {
            None => missing(&mut errors, "kinetics"),
            Some(sec) => {
                let mut r = Reader { section: sec, name: "kinetics", errors: &mut errors };
                let species = r.usize_req("species").unwrap_or(1);
                let law = r.family_or("law", KineticsSpec::Zero, parse_kinetics_spec);
                let lipschitz_bound = r.f64_or("lipschitz_bound", 1.0);
                r.finish();
                cfg.kinetics = Some(KineticsSection { species, law, lipschitz_bound });
            }
        }
    }

    if need("ode") {
        match find("ode") {
            None => missing(&mut errors, "ode"),
            Some(sec) => {
                let mut r = Reader { section: sec, name: "ode", errors: &mut errors };
                let v0 = r.f64("v0").unwrap_or(0.0);
                let y0 = r.f64_list("y0").unwrap_or_else(|| vec![1.0]);
                let t_final = r.f64("t_final").unwrap_or(1.0);
                let dt = r.f64("dt").unwrap_or(1e-4);
                let record_points = r.usize_or("record_points", 2000);
                let quadrature_nodes = r.usize_or("quadrature_nodes", 65);
                let eps_list = if module == ModuleKind::OdeConverge {
                    r.f64_list("eps_list").unwrap_or_default()
                } else {
                    Vec::new()
                };
                r.finish();
                cfg.ode = Some(OdeSection {
                    v0,
                    y0,
                    t_final,
                    dt,
                    record_points,
                    quadrature_nodes,
                    eps_list,
                });
            }
        }
    }

    if need("profile") {
        match find("profile") {
            None => missing(&mut errors, "profile"),
            Some(sec) => {
                let mut r = Reader { section: sec, name: "profile", errors: &mut errors };
                let base_radius = r.f64("base_radius").unwrap_or(1.0);
                let shape = r.family_or("shape", ProfileSpec::Flat, parse_profile_spec);
                let n_z = r.usize_or("n_z", 256);
                let n_theta = r.usize_or("n_theta", 16);
                let n_rho = r.usize_or("n_rho", 17);
                r.finish();
                cfg.profile = Some(ProfileSection { base_radius, shape, n_z, n_theta, n_rho });
            }
        }
    }

    if need("velocity") {
        match find("velocity") {
            None => missing(&mut errors, "velocity"),
            Some(sec) => {
                let mut r = Reader { section: sec, name: "velocity", errors: &mut errors };
                let family =
                    r.family_req("family", parse_velocity_spec).unwrap_or(VelocitySpec::Zero);
                r.finish();
                cfg.velocity = Some(family);
            }
        }
    }

    if need("absorption") {
        match find("absorption") {
            None => missing(&mut errors, "absorption"),
            Some(sec) => {
                let mut r = Reader { section: sec, name: "absorption", errors: &mut errors };
                let a = AbsorptionSection {
                    eta_p_base: r.f64("eta_p_base").unwrap_or(1.0),
                    eta_p_fast: r.family_or("eta_p_fast", FastMod::Const, parse_fast_mod),
                    eta_p_axial: r.family_or("eta_p_axial", AxialMod::Const, parse_axial_mod),
                    eta_a_base: r.f64_or("eta_a_base", 0.0),
                    eta_a_fast: r.family_or("eta_a_fast", FastMod::Const, parse_fast_mod),
                    eta_a_time: r.family_or("eta_a_time", TimeMod::Const, parse_time_mod),
                    rho_base: r.f64_or("rho_base", 0.0),
                    rho_fast: r.family_or("rho_fast", FastMod::Const, parse_fast_mod),
                    g_a: r.family_or("g_a", Saturating::Zero, parse_saturating),
                    alpha: r.f64_or("alpha", 1.0),
                    omega: r.f64("omega").unwrap_or(1.0),
                    chi: r.f64("chi").unwrap_or(1.0),
                    zeta_base: r.f64_or("zeta_base", 0.0),
                    zeta_axial: r.family_or("zeta_axial", AxialMod::Const, parse_axial_mod),
                    zeta_time: r.family_or("zeta_time", TimeMod::Const, parse_time_mod),
                    phi: r.family_or("phi", Saturating::Zero, parse_saturating),
                    eta_lower_bound: r.f64_or("eta_lower_bound", 1e-9),
                };
                r.finish();
                cfg.absorption = Some(a);
            }
        }
    }

    if need("homogenize") {
        match find("homogenize") {
            None => missing(&mut errors, "homogenize"),
            Some(sec) => {
                let mut r = Reader { section: sec, name: "homogenize", errors: &mut errors };
                let x1_samples = r.f64_list_or("x1_samples", vec![0.0]);
                let t_samples = r.f64_list_or("t_samples", vec![0.0]);
                r.finish();
                cfg.homogenize = Some(HomogenizeSection { x1_samples, t_samples });
            }
        }
    }

    if need("cell") {
        match find("cell") {
            None => missing(&mut errors, "cell"),
            Some(sec) => {
                let mut r = Reader { section: sec, name: "cell", errors: &mut errors };
                let c = CellSection {
                    p: r.f64_or("p", 0.0),
                    mu: r.f64_or("mu", 0.0),
                    nu: r.f64_or("nu", 0.0),
                    delta: r.f64_or("delta", 0.0),
                    x1: r.f64_or("x1", 0.0),
                    t: r.f64_or("t", 0.0),
                    n_z: r.usize_or("n_z", 64),
                    n_rho: r.usize_or("n_rho", 64),
                    rtol: r.f64_or("rtol", 1e-12),
                };
                r.finish();
                cfg.cell = Some(c);
            }
        }
    }

    if need("transport") {
        match find("transport") {
            None => missing(&mut errors, "transport"),
            Some(sec) => {
                let mut r = Reader { section: sec, name: "transport", errors: &mut errors };
                let t = TransportSection {
                    length: r.f64("length").unwrap_or(1.0),
                    n_cells: r.usize_or("n_cells", 512),
                    t_final: r.f64("t_final").unwrap_or(1.0),
                    cfl: r.f64_or("cfl", 0.9),
                    snapshots: r.usize_or("snapshots", 10),
                };
                r.finish();
                cfg.transport = Some(t);
            }
        }
    }

    if need("micro") {
        match find("micro") {
            None => missing(&mut errors, "micro"),
            Some(sec) => {
                let mut r = Reader { section: sec, name: "micro", errors: &mut errors };
                let m = MicroSection {
                    eps_list: r.f64_list("eps_list").unwrap_or_default(),
                    n_z_per_period: r.usize_or("n_z_per_period", 16),
                    n_rho: r.usize_or("n_rho", 16),
                };
                r.finish();
                cfg.micro = Some(m);
            }
        }
    }

    if need("inflow") {
        match find("inflow") {
            None => missing(&mut errors, "inflow"),
            Some(sec) => {
                let mut r = Reader { section: sec, name: "inflow", errors: &mut errors };
                let u0 = r.family_or("u0", InflowLaw::Zero, parse_inflow_law);
                let v0 = r.family_or("v0", InflowLaw::Zero, parse_inflow_law);
                r.finish();
                cfg.inflow = Some(InflowSection { u0, v0 });
            }
        }
    }

    validate_semantics(&cfg, &mut errors);
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(errors)
    }
}

/// Cross-field checks that need the whole configuration.
fn validate_semantics(cfg: &ExperimentConfig, errors: &mut Vec<ConfigError>) {
    let mut push = |message: String| errors.push(ConfigError { line: None, message });
    if let (Some(pulse), Some(ode)) = (&cfg.pulse, &cfg.ode) {
        if !(ode.v0 >= 0.0 && ode.v0 < pulse.wave_speed) {
            push(format!(
                "[ode] v0 = {} violates the averaging precondition 0 <= v0 < wave speed ({})",
                ode.v0, pulse.wave_speed
            ));
        }
        if cfg.module == ModuleKind::OdeSim && ode.dt > pulse.pulse_period / 20.0 {
            push(format!(
                "[ode] dt = {} does not resolve the pulse period {}; need dt <= period/20",
                ode.dt, pulse.pulse_period
            ));
        }
        if let Err(e) = crate::model::PulseModel::new(
            pulse.wave_speed,
            pulse.pulse_period,
            pulse.shape.clone(),
            pulse.friction.clone(),
            pulse.amplitude,
        ) {
            push(format!("[pulse] {e}"));
        }
        if cfg.module == ModuleKind::OdeConverge {
            if ode.eps_list.len() < 3 {
                push("[ode] eps_list needs at least 3 decreasing pulse periods".into());
            } else if ode.eps_list.windows(2).any(|w| w[1] >= w[0])
                || ode.eps_list.iter().any(|e| !(*e > 0.0 && *e < 1.0))
            {
                push("[ode] eps_list must be strictly decreasing within (0, 1)".into());
            }
        }
        if !(ode.t_final > 0.0 && ode.dt > 0.0) {
            push("[ode] t_final and dt must be positive".into());
        }
        if ode.quadrature_nodes < 3 {
            push("[ode] quadrature_nodes must be >= 3".into());
        }
    }
    if let (Some(kin), Some(ode)) = (&cfg.kinetics, &cfg.ode) {
        if ode.y0.len() != kin.species {
            push(format!(
                "[ode] y0 has {} entries but [kinetics] declares {} species",
                ode.y0.len(),
                kin.species
            ));
        }
        if let KineticsSpec::LinearDecay(rates) = &kin.law {
            if rates.len() != kin.species {
                push(format!(
                    "[kinetics] linear_decay lists {} rates for {} species",
                    rates.len(),
                    kin.species
                ));
            }
        }
        if !(kin.lipschitz_bound > 0.0) {
            push("[kinetics] lipschitz_bound must be positive".into());
        }
    }
    if let Some(p) = &cfg.profile {
        if !(p.base_radius > 0.0) {
            push("[profile] base_radius must be positive".into());
        }
        if matches!(cfg.module, ModuleKind::Geometry | ModuleKind::Homogenize)
            && (p.n_z < 8 || p.n_theta < 8)
        {
            push("[profile] quadrature needs n_z >= 8 and n_theta >= 8".into());
        }
        if p.n_rho < 3 || p.n_rho % 2 == 0 {
            push("[profile] n_rho must be an odd Simpson node count >= 3".into());
        }
        match &p.shape {
            ProfileSpec::RaisedCosine { amp, .. } if *amp < 0.0 => {
                push("[profile] amplitude must be nonnegative".into())
            }
            ProfileSpec::Bumpy { amp, beta, .. } if *amp < 0.0 || beta.abs() > 1.0 => {
                push("[profile] need amp >= 0 and |beta| <= 1".into())
            }
            _ => {}
        }
        // The axisymmetric PDE pipelines need a theta-independent wall.
        if matches!(
            cfg.module,
            ModuleKind::CellSolve | ModuleKind::MicroVerify | ModuleKind::Compare
        ) {
            if let ProfileSpec::Bumpy { beta, .. } = p.shape {
                if beta != 0.0 {
                    push("[profile] this pipeline needs a theta-independent profile".into());
                }
            }
        }
    }
    if let Some(v) = &cfg.velocity {
        if matches!(v, VelocitySpec::Plug { .. } | VelocitySpec::Poiseuille { .. }) {
            if let Some(ProfileSection { shape: ProfileSpec::Bumpy { beta, .. }, .. }) = &cfg.profile {
                if *beta != 0.0 {
                    push("[velocity] built-in velocity families need a theta-independent profile".into());
                }
            }
        }
        match v {
            VelocitySpec::Plug { mean_speed } | VelocitySpec::Poiseuille { mean_speed } => {
                if !(*mean_speed > 0.0) {
                    push(
                        "[velocity] mean_speed must be positive (the flow moves the bolus ahead, C1)"
                            .into(),
                    );
                }
            }
            VelocitySpec::Zero => {
                if matches!(
                    cfg.module,
                    ModuleKind::Homogenize
                        | ModuleKind::MacroSolve
                        | ModuleKind::MicroVerify
                        | ModuleKind::Compare
                ) {
                    push(
                        "[velocity] a zero field has no positive cell-average axial velocity (C1)"
                            .into(),
                    );
                }
            }
        }
    }
    if let Some(a) = &cfg.absorption {
        if let Err(e) = a.build() {
            push(format!("[absorption] {e}"));
        }
    }
    if let Some(h) = &cfg.homogenize {
        if h.x1_samples.windows(2).any(|w| w[1] <= w[0])
            || h.t_samples.windows(2).any(|w| w[1] <= w[0])
        {
            push("[homogenize] sample grids must be strictly increasing".into());
        }
    }
    if let Some(c) = &cfg.cell {
        if c.n_z < 16 || c.n_rho < 16 {
            push("[cell] grid sizes must be >= 16".into());
        }
        if !(c.rtol > 0.0 && c.rtol < 1e-2) {
            push("[cell] rtol must be in (0, 1e-2)".into());
        }
    }
    if let Some(t) = &cfg.transport {
        if !(t.length > 0.0 && t.t_final > 0.0) || t.n_cells == 0 || t.snapshots == 0 {
            push("[transport] needs positive length, t_final, n_cells and snapshots".into());
        }
        if !(t.cfl > 0.0 && t.cfl < 1.0) {
            push("[transport] cfl must be in (0, 1)".into());
        }
    }
    if let Some(m) = &cfg.micro {
        if m.eps_list.is_empty() {
            push("[micro] eps_list must not be empty".into());
        }
        if cfg.module == ModuleKind::Compare && m.eps_list.len() < 3 {
            push("[micro] the comparison study needs at least 3 eps values".into());
        }
        if m.eps_list.windows(2).any(|w| w[1] >= w[0]) {
            push("[micro] eps_list must be strictly decreasing".into());
        }
        if m.n_z_per_period < 16 {
            push("[micro] n_z_per_period must be >= 16".into());
        }
        if let Some(t) = &cfg.transport {
            for &eps in &m.eps_list {
                let periods = t.length / eps;
                if (periods - periods.round()).abs() > 1e-9 {
                    push(format!(
                        "[micro] eps = {eps} does not divide the length {} into whole periods",
                        t.length
                    ));
                }
            }
        }
    }
    if let Some(i) = &cfg.inflow {
        for (name, law) in [("u0", &i.u0), ("v0", &i.v0)] {
            if let Err(e) = law.validate() {
                push(format!("[inflow] {name}: {e}"));
            }
            if law.eval(0.0) != 0.0 {
                push(format!("[inflow] {name} must vanish at t = 0 (the tube starts empty)"));
            }
        }
    }
}

impl AbsorptionSection {
    /// Build the absorption model (also used during validation).
    pub fn build(&self) -> Result<crate::model::AbsorptionModel, crate::model::ModelError> {
        use crate::model::absorption::SurfaceCoeff;
        crate::model::AbsorptionModel::new(
            SurfaceCoeff::Product {
                base: self.eta_p_base,
                axial: self.eta_p_axial.clone(),
                fast: self.eta_p_fast.clone(),
                time: TimeMod::Const,
            },
            SurfaceCoeff::Product {
                base: self.eta_a_base,
                axial: AxialMod::Const,
                fast: self.eta_a_fast.clone(),
                time: self.eta_a_time.clone(),
            },
            self.g_a.clone(),
            SurfaceCoeff::Product {
                base: self.rho_base,
                axial: AxialMod::Const,
                fast: self.rho_fast.clone(),
                time: TimeMod::Const,
            },
            self.alpha,
            self.omega,
            self.chi,
            crate::model::VolCoeff {
                base: self.zeta_base,
                axial: self.zeta_axial.clone(),
                time: self.zeta_time.clone(),
            },
            self.phi.clone(),
            self.eta_lower_bound,
        )
    }
}

// ---------------------------------------------------------------------------
// Canonical emission.

/// Canonical text form: every applicable section and key with its resolved
/// value. `parse_config(emit_config(c)) == c` for valid configurations.
pub fn emit_config(cfg: &ExperimentConfig) -> String {
    let mut s = String::new();
    let sec = |s: &mut String, name: &str| {
        s.push_str(&format!("[{name}]\n"));
    };
    fn kv(s: &mut String, key: &str, val: impl fmt::Display) {
        s.push_str(&format!("{key} = {val}\n"));
    }
    sec(&mut s, "experiment");
    kv(&mut s, "module", cfg.module.as_str());
    kv(&mut s, "name", &cfg.name);
    kv(&mut s, "out_dir", &cfg.out_dir);
    s.push('\n');
    sec(&mut s, "units");
    kv(&mut s, "length", g17(cfg.units.length));
    kv(&mut s, "time", g17(cfg.units.time));
    kv(&mut s, "concentration", g17(cfg.units.concentration));
    if let Some(p) = &cfg.pulse {
        s.push('\n');
        sec(&mut s, "pulse");
        kv(&mut s, "wave_speed", g17(p.wave_speed));
        kv(&mut s, "pulse_period", g17(p.pulse_period));
        kv(&mut s, "shape", emit_pulse_shape(&p.shape));
        kv(&mut s, "friction", emit_friction(&p.friction));
        kv(
            &mut s,
            "amplitude",
            format!(
                "{},{},{},{}",
                g17(p.amplitude.c0),
                g17(p.amplitude.c1),
                g17(p.amplitude.a),
                g17(p.amplitude.b)
            ),
        );
    }
    if let Some(k) = &cfg.kinetics {
        s.push('\n');
        sec(&mut s, "kinetics");
        kv(&mut s, "species", k.species);
        kv(&mut s, "law", emit_kinetics_spec(&k.law));
        kv(&mut s, "lipschitz_bound", g17(k.lipschitz_bound));
    }
    if let Some(o) = &cfg.ode {
        s.push('\n');
        sec(&mut s, "ode");
        kv(&mut s, "v0", g17(o.v0));
        kv(&mut s, "y0", join17(&o.y0, ","));
        kv(&mut s, "t_final", g17(o.t_final));
        kv(&mut s, "dt", g17(o.dt));
        kv(&mut s, "record_points", o.record_points);
        kv(&mut s, "quadrature_nodes", o.quadrature_nodes);
        if !o.eps_list.is_empty() {
            kv(&mut s, "eps_list", join17(&o.eps_list, ","));
        }
    }
    if let Some(p) = &cfg.profile {
        s.push('\n');
        sec(&mut s, "profile");
        kv(&mut s, "base_radius", g17(p.base_radius));
        kv(&mut s, "shape", emit_profile_spec(&p.shape));
        kv(&mut s, "n_z", p.n_z);
        kv(&mut s, "n_theta", p.n_theta);
        kv(&mut s, "n_rho", p.n_rho);
    }
    if let Some(v) = &cfg.velocity {
        s.push('\n');
        sec(&mut s, "velocity");
        kv(&mut s, "family", emit_velocity_spec(v));
    }
    if let Some(a) = &cfg.absorption {
        s.push('\n');
        sec(&mut s, "absorption");
        kv(&mut s, "eta_p_base", g17(a.eta_p_base));
        kv(&mut s, "eta_p_fast", emit_fast_mod(&a.eta_p_fast));
        kv(&mut s, "eta_p_axial", emit_axial_mod(&a.eta_p_axial));
        kv(&mut s, "eta_a_base", g17(a.eta_a_base));
        kv(&mut s, "eta_a_fast", emit_fast_mod(&a.eta_a_fast));
        kv(&mut s, "eta_a_time", emit_time_mod(&a.eta_a_time));
        kv(&mut s, "rho_base", g17(a.rho_base));
        kv(&mut s, "rho_fast", emit_fast_mod(&a.rho_fast));
        kv(&mut s, "g_a", emit_saturating(&a.g_a));
        kv(&mut s, "alpha", g17(a.alpha));
        kv(&mut s, "omega", g17(a.omega));
        kv(&mut s, "chi", g17(a.chi));
        kv(&mut s, "zeta_base", g17(a.zeta_base));
        kv(&mut s, "zeta_axial", emit_axial_mod(&a.zeta_axial));
        kv(&mut s, "zeta_time", emit_time_mod(&a.zeta_time));
        kv(&mut s, "phi", emit_saturating(&a.phi));
        kv(&mut s, "eta_lower_bound", g17(a.eta_lower_bound));
    }
    if let Some(h) = &cfg.homogenize {
        s.push('\n');
        sec(&mut s, "homogenize");
        kv(&mut s, "x1_samples", join17(&h.x1_samples, ","));
        kv(&mut s, "t_samples", join17(&h.t_samples, ","));
    }
    if let Some(c) = &cfg.cell {
        s.push('\n');
        sec(&mut s, "cell");
        kv(&mut s, "p", g17(c.p));
        kv(&mut s, "mu", g17(c.mu));
        kv(&mut s, "nu", g17(c.nu));
        kv(&mut s, "delta", g17(c.delta));
        kv(&mut s, "x1", g17(c.x1));
        kv(&mut s, "t", g17(c.t));
        kv(&mut s, "n_z", c.n_z);
        kv(&mut s, "n_rho", c.n_rho);
        kv(&mut s, "rtol", g17(c.rtol));
    }
    if let Some(t) = &cfg.transport {
        s.push('\n');
        sec(&mut s, "transport");
        kv(&mut s, "length", g17(t.length));
        kv(&mut s, "n_cells", t.n_cells);
        kv(&mut s, "t_final", g17(t.t_final));
        kv(&mut s, "cfl", g17(t.cfl));
        kv(&mut s, "snapshots", t.snapshots);
    }
    if let Some(m) = &cfg.micro {
        s.push('\n');
        sec(&mut s, "micro");
        kv(&mut s, "eps_list", join17(&m.eps_list, ","));
        kv(&mut s, "n_z_per_period", m.n_z_per_period);
        kv(&mut s, "n_rho", m.n_rho);
    }
    if let Some(i) = &cfg.inflow {
        s.push('\n');
        sec(&mut s, "inflow");
        kv(&mut s, "u0", emit_inflow_law(&i.u0));
        kv(&mut s, "v0", emit_inflow_law(&i.v0));
    }
    s
}
