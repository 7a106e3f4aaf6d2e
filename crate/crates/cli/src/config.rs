//! INI-style experiment configuration.
//!
//! Sections `[map]`, `[experiment]`, `[numerics]`, `[output]` with
//! `key = value` lines and `#` comments. Every knob is validated before
//! any computation starts; errors name the offending key. Files are the
//! reproducibility artifact, so a parsed config serializes back to a
//! canonical form that parses to the same config.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

#[derive(Clone, Debug, PartialEq)]
pub enum ConfigError {
    MissingSection(&'static str),
    UnknownSection(String),
    UnknownKey { section: &'static str, key: String },
    BadValue { key: String, value: String, expected: &'static str },
    MissingKey { section: &'static str, key: &'static str },
    MalformedLine { line_no: usize, text: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::MissingSection(s) => write!(f, "missing required section [{s}]"),
            ConfigError::UnknownSection(s) => write!(f, "unknown section [{s}]"),
            ConfigError::UnknownKey { section, key } => {
                write!(f, "unknown key '{key}' in section [{section}]")
            }
            ConfigError::BadValue { key, value, expected } => {
                write!(f, "bad value '{value}' for key '{key}' (expected {expected})")
            }
            ConfigError::MissingKey { section, key } => {
                write!(f, "missing key '{key}' in section [{section}]")
            }
            ConfigError::MalformedLine { line_no, text } => {
                write!(f, "malformed line {line_no}: '{text}'")
            }
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    CheckAssumptions,
    InvariantDensity,
    TransferIterate,
    PersistentMonotonicity,
    Glm2,
    Llm,
    GgmCounterexample,
    SlicingBound,
    HittingResidues,
    Birkhoff,
    LaminarScan,
    DistortionScan,
}

impl Experiment {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "check_assumptions" => Experiment::CheckAssumptions,
            "invariant_density" => Experiment::InvariantDensity,
            "transfer_iterate" => Experiment::TransferIterate,
            "persistent_monotonicity" => Experiment::PersistentMonotonicity,
            "glm2" => Experiment::Glm2,
            "llm" => Experiment::Llm,
            "ggm_counterexample" => Experiment::GgmCounterexample,
            "slicing_bound" => Experiment::SlicingBound,
            "hitting_residues" => Experiment::HittingResidues,
            "birkhoff" => Experiment::Birkhoff,
            "laminar_scan" => Experiment::LaminarScan,
            "distortion_scan" => Experiment::DistortionScan,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::CheckAssumptions => "check_assumptions",
            Experiment::InvariantDensity => "invariant_density",
            Experiment::TransferIterate => "transfer_iterate",
            Experiment::PersistentMonotonicity => "persistent_monotonicity",
            Experiment::Glm2 => "glm2",
            Experiment::Llm => "llm",
            Experiment::GgmCounterexample => "ggm_counterexample",
            Experiment::SlicingBound => "slicing_bound",
            Experiment::HittingResidues => "hitting_residues",
            Experiment::Birkhoff => "birkhoff",
            Experiment::LaminarScan => "laminar_scan",
            Experiment::DistortionScan => "distortion_scan",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeedDensity {
    /// g(x) = x on the unit interval.
    Linear,
    /// g(x) = x^2 on the unit interval.
    Quadratic,
    /// g(s) = e^{-s} on the half-line.
    Exponential,
    /// g(s) = e^{-2s} on the half-line.
    Exponential2,
}

impl SeedDensity {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "linear" => SeedDensity::Linear,
            "quadratic" => SeedDensity::Quadratic,
            "exponential" => SeedDensity::Exponential,
            "exponential2" => SeedDensity::Exponential2,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            SeedDensity::Linear => "linear",
            SeedDensity::Quadratic => "quadratic",
            SeedDensity::Exponential => "exponential",
            SeedDensity::Exponential2 => "exponential2",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObservableChoice {
    /// sin of the box coordinate (unit-interval models).
    SinPhi,
    /// sin(s) on the half-line.
    Sin,
    /// Hitting time mod q.
    HQ,
}

impl ObservableChoice {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "sin_phi" => ObservableChoice::SinPhi,
            "sin" => ObservableChoice::Sin,
            "h_q" => ObservableChoice::HQ,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ObservableChoice::SinPhi => "sin_phi",
            ObservableChoice::Sin => "sin",
            ObservableChoice::HQ => "h_q",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BirkhoffWindow {
    Fixed(u64),
    SqrtN,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub family: String,
    pub alpha: Option<f64>,
    pub experiment: Experiment,
    pub observable: Option<ObservableChoice>,
    pub seed_density: Option<SeedDensity>,
    pub grid_size: usize,
    pub n_max: usize,
    pub n_samples: usize,
    pub q: usize,
    pub delta: Option<f64>,
    pub theta_min: f64,
    pub theta_max: f64,
    pub theta_steps: usize,
    pub k_max: usize,
    pub schedule_depth: f64,
    pub schedule_steps: usize,
    pub stride: usize,
    pub x_max: f64,
    pub window: BirkhoffWindow,
    pub seed: u64,
    pub workers: usize,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            family: String::new(),
            alpha: None,
            experiment: Experiment::Glm2,
            observable: None,
            seed_density: None,
            grid_size: 4096,
            n_max: 200,
            n_samples: 100_000,
            q: 3,
            delta: None,
            theta_min: -5.0,
            theta_max: 5.0,
            theta_steps: 41,
            k_max: 200,
            schedule_depth: 200.0,
            schedule_steps: 64,
            stride: 1,
            x_max: 40.0,
            window: BirkhoffWindow::Fixed(1),
            seed: 20_180_901,
            workers: 0,
            output_dir: PathBuf::from("out"),
        }
    }
}

fn parse_num<T: std::str::FromStr>(
    key: &str,
    value: &str,
    expected: &'static str,
) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        expected,
    })
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut sections: BTreeMap<String, Vec<(String, String, usize)>> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') {
                return Err(ConfigError::MalformedLine {
                    line_no: idx + 1,
                    text: raw.to_string(),
                });
            }
            let name = line[1..line.len() - 1].trim().to_string();
            match name.as_str() {
                "map" | "experiment" | "numerics" | "output" => {
                    current = Some(name.clone());
                    sections.entry(name).or_default();
                }
                other => return Err(ConfigError::UnknownSection(other.to_string())),
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::MalformedLine {
                line_no: idx + 1,
                text: raw.to_string(),
            });
        };
        let Some(section) = &current else {
            return Err(ConfigError::MalformedLine {
                line_no: idx + 1,
                text: raw.to_string(),
            });
        };
        sections
            .get_mut(section)
            .unwrap()
            .push((key.trim().to_string(), value.trim().to_string(), idx + 1));
    }

    let map_section = sections
        .get("map")
        .ok_or(ConfigError::MissingSection("map"))?;
    let exp_section = sections
        .get("experiment")
        .ok_or(ConfigError::MissingSection("experiment"))?;

    let mut cfg = ExperimentConfig::default();

    for (key, value, _) in map_section {
        match key.as_str() {
            "family" => {
                match value.as_str() {
                    "farey" | "t_alpha" | "pm_quadratic" | "pm_halfline" => {
                        cfg.family = value.clone()
                    }
                    _ => {
                        return Err(ConfigError::BadValue {
                            key: key.clone(),
                            value: value.clone(),
                            expected: "farey | t_alpha | pm_quadratic | pm_halfline",
                        })
                    }
                }
            }
            "alpha" => {
                let a: f64 = parse_num(key, value, "real in (0, 1)")?;
                if !(a > 0.0 && a < 1.0) {
                    return Err(ConfigError::BadValue {
                        key: key.clone(),
                        value: value.clone(),
                        expected: "real in (0, 1)",
                    });
                }
                cfg.alpha = Some(a);
            }
            _ => {
                return Err(ConfigError::UnknownKey {
                    section: "map",
                    key: key.clone(),
                })
            }
        }
    }
    if cfg.family.is_empty() {
        return Err(ConfigError::MissingKey {
            section: "map",
            key: "family",
        });
    }
    if cfg.family == "t_alpha" && cfg.alpha.is_none() {
        return Err(ConfigError::MissingKey {
            section: "map",
            key: "alpha",
        });
    }

    for (key, value, _) in exp_section {
        match key.as_str() {
            "name" => {
                cfg.experiment = Experiment::parse(value).ok_or(ConfigError::BadValue {
                    key: key.clone(),
                    value: value.clone(),
                    expected: "a known experiment name",
                })?
            }
            "observable" => {
                cfg.observable = Some(ObservableChoice::parse(value).ok_or(ConfigError::BadValue {
                    key: key.clone(),
                    value: value.clone(),
                    expected: "sin_phi | sin | h_q",
                })?)
            }
            "seed_density" => {
                cfg.seed_density = Some(SeedDensity::parse(value).ok_or(ConfigError::BadValue {
                    key: key.clone(),
                    value: value.clone(),
                    expected: "linear | quadratic | exponential | exponential2",
                })?)
            }
            _ => {
                return Err(ConfigError::UnknownKey {
                    section: "experiment",
                    key: key.clone(),
                })
            }
        }
    }

    if let Some(numerics) = sections.get("numerics") {
        for (key, value, _) in numerics {
            match key.as_str() {
                "grid_size" => cfg.grid_size = parse_num(key, value, "positive integer")?,
                "n_max" => cfg.n_max = parse_num(key, value, "nonnegative integer")?,
                "n_samples" => cfg.n_samples = parse_num(key, value, "positive integer")?,
                "q" => cfg.q = parse_num(key, value, "positive integer")?,
                "delta" => cfg.delta = Some(parse_num(key, value, "positive real")?),
                "theta_min" => cfg.theta_min = parse_num(key, value, "real")?,
                "theta_max" => cfg.theta_max = parse_num(key, value, "real")?,
                "theta_steps" => cfg.theta_steps = parse_num(key, value, "positive integer")?,
                "k_max" => cfg.k_max = parse_num(key, value, "positive integer")?,
                "schedule_depth" => {
                    cfg.schedule_depth = parse_num(key, value, "positive real")?
                }
                "schedule_steps" => {
                    cfg.schedule_steps = parse_num(key, value, "integer >= 8")?
                }
                "stride" => cfg.stride = parse_num(key, value, "positive integer")?,
                "x_max" => cfg.x_max = parse_num(key, value, "positive real")?,
                "window" => {
                    cfg.window = if value == "sqrt_n" {
                        BirkhoffWindow::SqrtN
                    } else {
                        BirkhoffWindow::Fixed(parse_num(key, value, "positive integer or sqrt_n")?)
                    }
                }
                "seed" => cfg.seed = parse_num(key, value, "64-bit unsigned integer")?,
                "workers" => cfg.workers = parse_num(key, value, "nonnegative integer")?,
                _ => {
                    return Err(ConfigError::UnknownKey {
                        section: "numerics",
                        key: key.clone(),
                    })
                }
            }
        }
    }

    if let Some(output) = sections.get("output") {
        for (key, value, _) in output {
            match key.as_str() {
                "dir" => cfg.output_dir = PathBuf::from(value),
                _ => {
                    return Err(ConfigError::UnknownKey {
                        section: "output",
                        key: key.clone(),
                    })
                }
            }
        }
    }

    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &ExperimentConfig) -> Result<(), ConfigError> {
    let bad = |key: &str, value: String, expected: &'static str| {
        Err(ConfigError::BadValue {
            key: key.to_string(),
            value,
            expected,
        })
    };
    if cfg.grid_size < 64 {
        return bad("grid_size", cfg.grid_size.to_string(), "integer >= 64");
    }
    if cfg.q < 1 {
        return bad("q", cfg.q.to_string(), "integer >= 1");
    }
    if cfg.schedule_steps < 8 {
        return bad(
            "schedule_steps",
            cfg.schedule_steps.to_string(),
            "integer >= 8",
        );
    }
    if cfg.stride < 1 {
        return bad("stride", cfg.stride.to_string(), "integer >= 1");
    }
    if !(cfg.x_max > 1.0) {
        return bad("x_max", cfg.x_max.to_string(), "real > 1");
    }
    if cfg.theta_steps < 2 {
        return bad("theta_steps", cfg.theta_steps.to_string(), "integer >= 2");
    }
    if !(cfg.theta_max > cfg.theta_min) {
        return bad(
            "theta_max",
            cfg.theta_max.to_string(),
            "real > theta_min",
        );
    }
    if let Some(d) = cfg.delta {
        if !(d > 0.0) {
            return bad("delta", d.to_string(), "positive real");
        }
    }
    if cfg.experiment == Experiment::HittingResidues && cfg.n_samples < 1000 {
        return bad(
            "n_samples",
            cfg.n_samples.to_string(),
            "integer >= 1000 for hitting_residues",
        );
    }
    Ok(())
}

/// Canonical rendering; `parse_config(serialize(c)) == c`.
pub fn serialize(cfg: &ExperimentConfig) -> String {
    let mut out = String::new();
    out.push_str("[map]\n");
    out.push_str(&format!("family = {}\n", cfg.family));
    if let Some(a) = cfg.alpha {
        out.push_str(&format!("alpha = {a}\n"));
    }
    out.push_str("\n[experiment]\n");
    out.push_str(&format!("name = {}\n", cfg.experiment.name()));
    if let Some(o) = cfg.observable {
        out.push_str(&format!("observable = {}\n", o.name()));
    }
    if let Some(s) = cfg.seed_density {
        out.push_str(&format!("seed_density = {}\n", s.name()));
    }
    out.push_str("\n[numerics]\n");
    out.push_str(&format!("grid_size = {}\n", cfg.grid_size));
    out.push_str(&format!("n_max = {}\n", cfg.n_max));
    out.push_str(&format!("n_samples = {}\n", cfg.n_samples));
    out.push_str(&format!("q = {}\n", cfg.q));
    if let Some(d) = cfg.delta {
        out.push_str(&format!("delta = {d}\n"));
    }
    out.push_str(&format!("theta_min = {}\n", cfg.theta_min));
    out.push_str(&format!("theta_max = {}\n", cfg.theta_max));
    out.push_str(&format!("theta_steps = {}\n", cfg.theta_steps));
    out.push_str(&format!("k_max = {}\n", cfg.k_max));
    out.push_str(&format!("schedule_depth = {}\n", cfg.schedule_depth));
    out.push_str(&format!("schedule_steps = {}\n", cfg.schedule_steps));
    out.push_str(&format!("stride = {}\n", cfg.stride));
    out.push_str(&format!("x_max = {}\n", cfg.x_max));
    match cfg.window {
        BirkhoffWindow::Fixed(k) => out.push_str(&format!("window = {k}\n")),
        BirkhoffWindow::SqrtN => out.push_str("window = sqrt_n\n"),
    }
    out.push_str(&format!("seed = {}\n", cfg.seed));
    out.push_str(&format!("workers = {}\n", cfg.workers));
    out.push_str("\n[output]\n");
    out.push_str(&format!("dir = {}\n", cfg.output_dir.display()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config("[map]\nfamily = farey\n[experiment]\nname = glm2\n").unwrap();
        assert_eq!(cfg.grid_size, 4096);
        assert_eq!(cfg.n_max, 200);
        assert_eq!(cfg.n_samples, 100_000);
        assert_eq!(cfg.seed, 20_180_901);
        assert_eq!(cfg.experiment, Experiment::Glm2);
    }

    #[test]
    fn alpha_range_is_validated() {
        let err = parse_config("[map]\nfamily = t_alpha\nalpha = 1.5\n[experiment]\nname = glm2\n")
            .unwrap_err();
        match err {
            ConfigError::BadValue { key, expected, .. } => {
                assert_eq!(key, "alpha");
                assert!(expected.contains("(0, 1)"));
            }
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn unknown_key_is_named() {
        let err =
            parse_config("[map]\nfamily = farey\nbogus = 1\n[experiment]\nname = glm2\n")
                .unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { key, .. } if key == "bogus"));
    }

    #[test]
    fn missing_sections_are_reported() {
        assert!(matches!(
            parse_config("[experiment]\nname = glm2\n"),
            Err(ConfigError::MissingSection("map"))
        ));
        assert!(matches!(
            parse_config("[map]\nfamily = farey\n"),
            Err(ConfigError::MissingSection("experiment"))
        ));
    }

    #[test]
    fn full_round_trip() {
        let text = "\
[map]
family = t_alpha
alpha = 0.3
[experiment]
name = hitting_residues
seed_density = linear
[numerics]
grid_size = 2048
n_max = 1000
n_samples = 5000
q = 5
delta = 0.25
seed = 7
window = sqrt_n
[output]
dir = artifacts
";
        let cfg = parse_config(text).unwrap();
        let round = parse_config(&serialize(&cfg)).unwrap();
        assert_eq!(cfg, round);
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let cfg = parse_config(
            "# a comment\n[map]\nfamily = farey # trailing\n\n[experiment]\nname = llm\n",
        )
        .unwrap();
        assert_eq!(cfg.family, "farey");
        assert_eq!(cfg.experiment, Experiment::Llm);
    }
}
