//! Run configuration: benchmark presets, flat `key = value` files and
//! command-line overrides.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mlplast::approx::BasisConfig;
use mlplast::driver::{LoadProgram, SolverConfig};
use mlplast::elastic::ElasticConstants;
use mlplast::geometry::{BoundaryTag, Cutout, Domain};
use mlplast::material::{HardeningCurve, MaterialModel};

/// Configuration problems; mapped to exit status 1.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {message}")]
    Value { key: String, message: String },
    #[error("no case given; use --case or `case = ...` in the config file")]
    MissingCase,
    #[error("case `custom` requires `{0}`")]
    MissingField(&'static str),
    #[error(transparent)]
    Model(#[from] mlplast::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Case {
    Elastic,
    PerfectPlastic,
    LinearHardening,
    Irregular,
    Custom,
}

impl Case {
    pub const ALL: [Case; 5] = [
        Case::Elastic,
        Case::PerfectPlastic,
        Case::LinearHardening,
        Case::Irregular,
        Case::Custom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Case::Elastic => "elastic",
            Case::PerfectPlastic => "perfect-plastic",
            Case::LinearHardening => "linear-hardening",
            Case::Irregular => "irregular",
            Case::Custom => "custom",
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Case {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Case::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown case `{s}` (expected one of elastic, perfect-plastic, linear-hardening, irregular, custom)"))
    }
}

/// Hardening law as written in a configuration.
#[derive(Clone, Debug, PartialEq)]
pub enum HardeningSpec {
    Perfect,
    /// Slope of yield stress against accumulated plastic strain [GPa].
    Linear { modulus: f64 },
    /// Knots `(eqps, yield stress [GPa])`.
    Table { knots: Vec<(f64, f64)> },
}

/// Yield stress against accumulated plastic strain for the cut-out case.
pub const IRREGULAR_CURVE: [(f64, f64); 11] = [
    (0.000, 0.240),
    (0.001, 0.290),
    (0.002, 0.330),
    (0.003, 0.370),
    (0.004, 0.400),
    (0.005, 0.430),
    (0.006, 0.450),
    (0.007, 0.470),
    (0.008, 0.483),
    (0.009, 0.495),
    (0.010, 0.500),
];

/// Circular hole; `pressurized` holes carry the inner pressure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HoleSpec {
    pub center: [f64; 2],
    pub radius: f64,
    pub pressurized: bool,
}

/// The four holes of the perforated quarter cylinder.
pub fn irregular_holes(a: f64, b: f64) -> Vec<HoleSpec> {
    let polar = |r: f64, t: f64| [r * t.cos(), r * t.sin()];
    vec![
        HoleSpec { center: polar(0.5 * (a + b), PI / 16.0), radius: 20.0, pressurized: false },
        HoleSpec { center: polar(0.5 * (a + b), 7.0 * PI / 16.0), radius: 10.0, pressurized: false },
        HoleSpec { center: polar(0.8 * a, PI / 4.0), radius: 30.0, pressurized: true },
        HoleSpec { center: polar(1.1 * b, PI / 4.0), radius: 50.0, pressurized: false },
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub case: Case,
    /// Inner radius [mm].
    pub inner_radius: f64,
    /// Outer radius [mm].
    pub outer_radius: f64,
    pub holes: Vec<HoleSpec>,
    /// Young's modulus [GPa].
    pub young: f64,
    pub poisson: f64,
    /// Initial yield stress [GPa].
    pub yield_stress: f64,
    pub hardening: HardeningSpec,
    /// Inner-wall pressure [GPa].
    pub pressure: f64,
    pub load_steps: usize,
    /// Nominal node spacing [mm].
    pub spacing: f64,
    pub seed: u64,
    pub stencil_size: usize,
    pub boundary_stencil_size: usize,
    pub phs_order: u32,
    pub monomial_degree: u32,
    pub tolerance: f64,
    pub max_picard_iterations: usize,
    pub max_return_iterations: usize,
    /// Angular segments for the front-shape output.
    pub front_segments: usize,
    pub out_dir: PathBuf,
    pub export_matrix: bool,
}

impl RunConfig {
    /// Preset with the benchmark values; `custom` starts from the same
    /// material but must name its geometry and load.
    pub fn preset(case: Case) -> Self {
        let (a, b) = (100.0, 200.0);
        let mut cfg = RunConfig {
            case,
            inner_radius: a,
            outer_radius: b,
            holes: Vec::new(),
            young: 210.0,
            poisson: 0.3,
            yield_stress: 0.24,
            hardening: HardeningSpec::Perfect,
            pressure: 0.0,
            load_steps: 1,
            spacing: 2.0,
            seed: 1,
            stencil_size: 20,
            boundary_stencil_size: 30,
            phs_order: 3,
            monomial_degree: 3,
            tolerance: 1e-6,
            max_picard_iterations: SolverConfig::default().max_picard_iterations,
            max_return_iterations: SolverConfig::default().max_return_iterations,
            front_segments: 20,
            out_dir: PathBuf::from("out"),
            export_matrix: false,
        };
        match case {
            Case::Elastic => cfg.pressure = 0.05,
            Case::PerfectPlastic => {
                cfg.pressure = 0.19;
                cfg.load_steps = 25;
                // The last steps sit close to the limit load and contract slowly.
                cfg.max_picard_iterations = 5000;
            }
            Case::LinearHardening => {
                cfg.pressure = 0.175;
                cfg.load_steps = 25;
                cfg.hardening = HardeningSpec::Linear { modulus: 10.0 };
            }
            Case::Irregular => {
                cfg.pressure = 0.13;
                cfg.load_steps = 25;
                cfg.hardening = HardeningSpec::Table { knots: IRREGULAR_CURVE.to_vec() };
                cfg.holes = irregular_holes(a, b);
            }
            Case::Custom => {}
        }
        cfg
    }

    pub fn domain(&self) -> mlplast::Result<Domain> {
        let mut d = Domain::quarter_annulus(self.inner_radius, self.outer_radius)?;
        for h in &self.holes {
            let mut c = Cutout::new(h.center, h.radius);
            if h.pressurized {
                c = c.with_tag(BoundaryTag::InnerPressure);
            }
            d = d.with_cutout(c)?;
        }
        Ok(d)
    }

    pub fn curve(&self) -> HardeningCurve {
        match &self.hardening {
            HardeningSpec::Perfect => HardeningCurve::Perfect { yield_stress: self.yield_stress },
            HardeningSpec::Linear { modulus } => HardeningCurve::Linear {
                yield_stress: self.yield_stress,
                modulus: *modulus,
            },
            HardeningSpec::Table { knots } => HardeningCurve::Piecewise { knots: knots.clone() },
        }
    }

    pub fn material(&self) -> mlplast::Result<MaterialModel> {
        MaterialModel::new(ElasticConstants::new(self.young, self.poisson)?, self.curve())
    }

    pub fn basis(&self) -> BasisConfig {
        BasisConfig {
            phs_order: self.phs_order,
            monomial_degree: self.monomial_degree,
            stencil_size: self.stencil_size,
            boundary_stencil_size: self.boundary_stencil_size,
        }
    }

    pub fn load(&self) -> mlplast::Result<LoadProgram> {
        LoadProgram::new(self.pressure, self.load_steps)
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            tolerance: self.tolerance,
            max_return_iterations: self.max_return_iterations,
            max_picard_iterations: self.max_picard_iterations,
        }
    }

    /// Annulus without holes, where closed-form references apply.
    pub fn is_plain_cylinder(&self) -> bool {
        self.holes.is_empty()
    }

    /// Checks every derived model object.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::Value { key: key.into(), message: format!("must be positive, got {v}") })
            }
        };
        positive("h", self.spacing)?;
        positive("tolerance", self.tolerance)?;
        if !(self.pressure >= 0.0 && self.pressure.is_finite()) {
            return Err(ConfigError::Value {
                key: "pressure".into(),
                message: format!("must be non-negative, got {}", self.pressure),
            });
        }
        if self.front_segments == 0 {
            return Err(ConfigError::Value { key: "front_segments".into(), message: "must be at least 1".into() });
        }
        if let HardeningSpec::Table { knots } = &self.hardening {
            if knots.first().map(|k| k.1) != Some(self.yield_stress) {
                return Err(ConfigError::Value {
                    key: "hardening_table".into(),
                    message: format!("first knot must equal yield_stress = {}", self.yield_stress),
                });
            }
        }
        self.material()?.hardening.validate()?;
        self.basis().validate()?;
        self.load()?;
        self.solver().validate()?;
        self.domain()?;
        Ok(())
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
        where
            T::Err: fmt::Display,
        {
            value.parse().map_err(|e: T::Err| ConfigError::Value { key: key.into(), message: e.to_string() })
        }
        let bad = |message: String| ConfigError::Value { key: key.into(), message };
        match key {
            "case" => self.case = value.parse().map_err(bad)?,
            "a" | "inner_radius" => self.inner_radius = num(key, value)?,
            "b" | "outer_radius" => self.outer_radius = num(key, value)?,
            "young" => self.young = num(key, value)?,
            "poisson" => self.poisson = num(key, value)?,
            "yield_stress" => self.yield_stress = num(key, value)?,
            "hardening" => {
                self.hardening = match value {
                    "perfect" => HardeningSpec::Perfect,
                    "linear" => HardeningSpec::Linear {
                        modulus: match self.hardening {
                            HardeningSpec::Linear { modulus } => modulus,
                            _ => 0.0,
                        },
                    },
                    "table" => match &self.hardening {
                        HardeningSpec::Table { .. } => self.hardening.clone(),
                        _ => HardeningSpec::Table { knots: Vec::new() },
                    },
                    other => return Err(bad(format!("expected perfect, linear or table, got `{other}`"))),
                }
            }
            "hardening_modulus" => self.hardening = HardeningSpec::Linear { modulus: num(key, value)? },
            "hardening_table" => self.hardening = HardeningSpec::Table { knots: parse_knots(value).map_err(bad)? },
            "hole" => self.holes.push(parse_hole(value).map_err(bad)?),
            "holes" => {
                self.holes = match value {
                    "none" => Vec::new(),
                    other => return Err(bad(format!("only `none` is accepted, got `{other}`"))),
                }
            }
            "pressure" => self.pressure = num(key, value)?,
            "n_load" => self.load_steps = num(key, value)?,
            "h" => self.spacing = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "stencil_size" => self.stencil_size = num(key, value)?,
            "boundary_stencil_size" => self.boundary_stencil_size = num(key, value)?,
            "phs_order" => self.phs_order = num(key, value)?,
            "monomial_degree" => self.monomial_degree = num(key, value)?,
            "tolerance" => self.tolerance = num(key, value)?,
            "max_picard_iterations" => self.max_picard_iterations = num(key, value)?,
            "max_return_iterations" => self.max_return_iterations = num(key, value)?,
            "front_segments" => self.front_segments = num(key, value)?,
            "out" => self.out_dir = PathBuf::from(value),
            "export_matrix" => self.export_matrix = num(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }
}

/// `eqps:stress` pairs separated by commas.
fn parse_knots(value: &str) -> Result<Vec<(f64, f64)>, String> {
    value
        .split(',')
        .map(|pair| {
            let (e, s) = pair.trim().split_once(':').ok_or_else(|| format!("expected eqps:stress, got `{pair}`"))?;
            let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
            Ok((parse(e)?, parse(s)?))
        })
        .collect()
}

/// `x, y, radius[, pressurized]`.
fn parse_hole(value: &str) -> Result<HoleSpec, String> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if !(3..=4).contains(&parts.len()) {
        return Err(format!("expected x, y, radius[, pressurized], got `{value}`"));
    }
    let parse = |t: &str| t.parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    let pressurized = match parts.get(3) {
        None | Some(&"free") => false,
        Some(&"pressurized") => true,
        Some(other) => return Err(format!("hole kind must be free or pressurized, got `{other}`")),
    };
    Ok(HoleSpec { center: [parse(parts[0])?, parse(parts[1])?], radius: parse(parts[2])?, pressurized })
}

/// Lines of a configuration file as `(line number, key, value)`. Blank
/// lines and `#` comments are skipped.
pub fn parse_entries(text: &str) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(ConfigError::Syntax { line: i + 1, message: "empty key".into() });
        }
        entries.push((i + 1, key.to_string(), value.to_string()));
    }
    Ok(entries)
}

/// Overrides given on the command line; `None` keeps the preset or file value.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub case: Option<Case>,
    pub spacing: Option<f64>,
    pub seed: Option<u64>,
    pub load_steps: Option<usize>,
    pub pressure: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub export_matrix: bool,
}

/// Builds a validated configuration: the preset of the chosen case, then the
/// file entries in order, then the command-line overrides.
pub fn parse_config(file: Option<&Path>, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let entries = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
            parse_entries(&text)?
        }
        None => Vec::new(),
    };
    let file_case = entries
        .iter()
        .rev()
        .find(|(_, k, _)| k == "case")
        .map(|(_, _, v)| v.parse::<Case>().map_err(|message| ConfigError::Value { key: "case".into(), message }))
        .transpose()?;
    let case = overrides.case.or(file_case).ok_or(ConfigError::MissingCase)?;
    let mut cfg = RunConfig::preset(case);
    if case == Case::Custom {
        for key in ["a", "b", "pressure"] {
            let alias = match key {
                "a" => "inner_radius",
                "b" => "outer_radius",
                _ => key,
            };
            let given = entries.iter().any(|(_, k, _)| k == key || k == alias)
                || (key == "pressure" && overrides.pressure.is_some());
            if !given {
                return Err(ConfigError::MissingField(key));
            }
        }
    }
    for (line, key, value) in &entries {
        if key == "case" {
            continue;
        }
        cfg.set(key, value).map_err(|e| match e {
            ConfigError::UnknownKey(k) => ConfigError::Syntax { line: *line, message: format!("unknown key `{k}`") },
            other => other,
        })?;
    }
    if let Some(h) = overrides.spacing {
        cfg.spacing = h;
    }
    if let Some(s) = overrides.seed {
        cfg.seed = s;
    }
    if let Some(n) = overrides.load_steps {
        cfg.load_steps = n;
    }
    if let Some(p) = overrides.pressure {
        cfg.pressure = p;
    }
    if let Some(o) = &overrides.out_dir {
        cfg.out_dir = o.clone();
    }
    cfg.export_matrix |= overrides.export_matrix;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_case(case: Case) -> Overrides {
        Overrides { case: Some(case), ..Default::default() }
    }

    #[test]
    fn presets_pin_benchmark_values() {
        let e = parse_config(None, &with_case(Case::Elastic)).unwrap();
        assert_eq!((e.pressure, e.load_steps), (0.05, 1));
        let p = parse_config(None, &with_case(Case::PerfectPlastic)).unwrap();
        assert_eq!((p.pressure, p.load_steps, p.hardening.clone()), (0.19, 25, HardeningSpec::Perfect));
        let l = parse_config(None, &with_case(Case::LinearHardening)).unwrap();
        assert_eq!(l.pressure, 0.175);
        assert_eq!(l.hardening, HardeningSpec::Linear { modulus: 10.0 });
        let i = parse_config(None, &with_case(Case::Irregular)).unwrap();
        assert_eq!(i.pressure, 0.13);
        assert_eq!(i.holes.len(), 4);
        assert_eq!(i.curve().yield_stress(0.0045), 0.415);
        for c in [e, p, l, i] {
            assert_eq!((c.young, c.poisson, c.yield_stress), (210.0, 0.3, 0.24));
            assert_eq!((c.inner_radius, c.outer_radius), (100.0, 200.0));
        }
    }

    #[test]
    fn overrides_apply_field_by_field() {
        let o = Overrides { spacing: Some(4.0), seed: Some(7), ..with_case(Case::PerfectPlastic) };
        let c = parse_config(None, &o).unwrap();
        assert_eq!((c.spacing, c.seed, c.pressure), (4.0, 7, 0.19));
    }

    #[test]
    fn file_then_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "# comment\ncase = linear-hardening\nhardening_modulus = 5 # GPa\nh=3\n\n").unwrap();
        let c = parse_config(Some(&path), &Overrides::default()).unwrap();
        assert_eq!(c.case, Case::LinearHardening);
        assert_eq!(c.hardening, HardeningSpec::Linear { modulus: 5.0 });
        assert_eq!(c.spacing, 3.0);
        let c = parse_config(Some(&path), &Overrides { spacing: Some(6.0), ..Default::default() }).unwrap();
        assert_eq!(c.spacing, 6.0);
        let c = parse_config(Some(&path), &with_case(Case::Elastic)).unwrap();
        assert_eq!((c.case, c.pressure), (Case::Elastic, 0.05));
    }

    #[test]
    fn rejected_inputs() {
        assert!(matches!(parse_config(None, &Overrides::default()), Err(ConfigError::MissingCase)));
        assert!(matches!(parse_config(None, &with_case(Case::Custom)), Err(ConfigError::MissingField("a"))));
        let dir = tempfile::tempdir().unwrap();
        let write = |name: &str, text: &str| {
            let p = dir.path().join(name);
            std::fs::write(&p, text).unwrap();
            p
        };
        let unknown = write("u.cfg", "case = elastic\nmesh = fine\n");
        assert!(matches!(parse_config(Some(&unknown), &Overrides::default()), Err(ConfigError::Syntax { line: 2, .. })));
        let nu = write("nu.cfg", "case = elastic\npoisson = 0.5\n");
        assert!(matches!(parse_config(Some(&nu), &Overrides::default()), Err(ConfigError::Model(_))));
        let syntax = write("s.cfg", "case elastic\n");
        assert!(matches!(parse_config(Some(&syntax), &Overrides::default()), Err(ConfigError::Syntax { line: 1, .. })));
        let value = write("v.cfg", "case = elastic\nh = fine\n");
        assert!(matches!(parse_config(Some(&value), &Overrides::default()), Err(ConfigError::Value { .. })));
        let case = write("c.cfg", "case = plastic\n");
        assert!(parse_config(Some(&case), &Overrides::default()).is_err());
        let missing = dir.path().join("nope.cfg");
        assert!(matches!(parse_config(Some(&missing), &Overrides::default()), Err(ConfigError::Read { .. })));
        let o = Overrides { spacing: Some(-1.0), ..with_case(Case::Elastic) };
        assert!(parse_config(None, &o).is_err());
        let o = Overrides { load_steps: Some(0), ..with_case(Case::Elastic) };
        assert!(parse_config(None, &o).is_err());
    }

    #[test]
    fn custom_case_with_holes_and_table() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("custom.cfg");
        std::fs::write(
            &path,
            "case = custom\na = 50\nb = 120\npressure = 0.1\nhole = 60, 60, 5\nhole = 40, 40, 12, pressurized\n\
             hardening_table = 0:0.24, 0.01:0.3\n",
        )
        .unwrap();
        let c = parse_config(Some(&path), &Overrides::default()).unwrap();
        assert_eq!((c.inner_radius, c.outer_radius), (50.0, 120.0));
        assert_eq!(c.holes.len(), 2);
        assert!(c.holes[1].pressurized);
        assert_eq!(c.curve().yield_stress(0.005), 0.27);
    }
}
