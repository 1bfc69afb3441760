//! Flat `key = value` experiment files.
//!
//! ```text
//! # comment
//! D = 30
//! lambda = 0.1
//! policy = I, D, E
//! p = 0.1
//! sweep_axis = lambda
//! sweep_values = linspace(0.02, 0.1, 5)
//! methods = closed, montecarlo
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::model::{validate, JammingScheme, ModelError, NetworkConfig, Policy};

pub const DEFAULT_TRIALS: u64 = 100_000;

const REQUIRED: [&str; 10] = [
    "D", "lambda", "lambda_e", "l", "alpha", "beta", "beta_e", "R1", "R2", "policy",
];
const OPTIONAL: [&str; 6] = [
    "p",
    "sweep_axis",
    "sweep_values",
    "methods",
    "n_trials",
    "seed",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("override `{key}`: {message}")]
    Override { key: String, message: String },
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// The parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Lambda,
    LambdaE,
    P,
    R1,
    R2,
    D,
    L,
    Beta,
    BetaE,
}

impl Axis {
    pub const ALL: [Axis; 9] = [
        Axis::Lambda,
        Axis::LambdaE,
        Axis::P,
        Axis::R1,
        Axis::R2,
        Axis::D,
        Axis::L,
        Axis::Beta,
        Axis::BetaE,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Axis::Lambda => "lambda",
            Axis::LambdaE => "lambda_e",
            Axis::P => "p",
            Axis::R1 => "R1",
            Axis::R2 => "R2",
            Axis::D => "D",
            Axis::L => "l",
            Axis::Beta => "beta",
            Axis::BetaE => "beta_e",
        }
    }

    /// Current value of this parameter, `None` for `p` under policies I/D.
    pub fn get(self, config: &NetworkConfig, scheme: &JammingScheme) -> Option<f64> {
        Some(match self {
            Axis::Lambda => config.legit_intensity,
            Axis::LambdaE => config.eaves_intensity,
            Axis::P => match scheme.policy {
                Policy::Constant { p } => p,
                _ => return None,
            },
            Axis::R1 => scheme.lfc_radius,
            Axis::R2 => scheme.lfa_outer,
            Axis::D => config.disk_radius,
            Axis::L => config.tx_rx_distance,
            Axis::Beta => config.rx_sir_threshold,
            Axis::BetaE => config.eaves_sir_threshold,
        })
    }

    pub fn apply(self, config: &mut NetworkConfig, scheme: &mut JammingScheme, value: f64) {
        match self {
            Axis::Lambda => config.legit_intensity = value,
            Axis::LambdaE => config.eaves_intensity = value,
            Axis::P => scheme.policy = Policy::Constant { p: value },
            Axis::R1 => scheme.lfc_radius = value,
            Axis::R2 => scheme.lfa_outer = value,
            Axis::D => config.disk_radius = value,
            Axis::L => config.tx_rx_distance = value,
            Axis::Beta => config.rx_sir_threshold = value,
            Axis::BetaE => config.eaves_sir_threshold = value,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Axis::ALL
            .into_iter()
            .find(|a| a.key() == s)
            .ok_or_else(|| format!("unknown sweep axis `{s}`"))
    }
}

/// Which estimators fill a result row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Methods {
    pub closed: bool,
    pub numeric: bool,
    pub montecarlo: bool,
}

impl Methods {
    pub const CLOSED: Methods = Methods {
        closed: true,
        numeric: false,
        montecarlo: false,
    };

    pub fn is_empty(&self) -> bool {
        !(self.closed || self.numeric || self.montecarlo)
    }
}

impl FromStr for Methods {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut m = Methods {
            closed: false,
            numeric: false,
            montecarlo: false,
        };
        for item in s.split(',').map(str::trim) {
            match item {
                "closed" => m.closed = true,
                "numeric" => m.numeric = true,
                "montecarlo" | "mc" => m.montecarlo = true,
                other => {
                    return Err(format!(
                        "unknown method `{other}` (expected closed, numeric or montecarlo)"
                    ))
                }
            }
        }
        Ok(m)
    }
}

/// A fully resolved experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct Study {
    pub config: NetworkConfig,
    /// One scheme per requested policy, in file order.
    pub schemes: Vec<JammingScheme>,
    pub methods: Methods,
    pub n_trials: u64,
    pub seed: Option<u64>,
    pub sweep: Option<(Axis, Vec<f64>)>,
}

/// Everything needed to produce a table of result rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub config: NetworkConfig,
    pub schemes: Vec<JammingScheme>,
    pub axis: Axis,
    pub values: Vec<f64>,
    pub methods: Methods,
    pub n_trials: u64,
    pub seed: u64,
}

impl Study {
    pub fn scheme(&self) -> JammingScheme {
        self.schemes[0]
    }

    /// The configured sweep, or a one-point sweep at the base configuration.
    pub fn sweep_spec(&self) -> Result<SweepSpec, ConfigError> {
        let (axis, values) = match &self.sweep {
            Some((axis, values)) => (*axis, values.clone()),
            None => (Axis::Lambda, vec![self.config.legit_intensity]),
        };
        self.spec_for(axis, values)
    }

    /// A one-point spec at the base configuration, labelled by the sweep axis.
    pub fn point_spec(&self) -> Result<SweepSpec, ConfigError> {
        let axis = self.sweep.as_ref().map_or(Axis::Lambda, |s| s.0);
        let value = axis.get(&self.config, &self.scheme()).ok_or_else(|| {
            ConfigError::Invalid(format!(
                "no base value for axis `{axis}`; run a sweep instead"
            ))
        })?;
        self.spec_for(axis, vec![value])
    }

    fn spec_for(&self, axis: Axis, values: Vec<f64>) -> Result<SweepSpec, ConfigError> {
        let seed = match (self.methods.montecarlo, self.seed) {
            (true, None) => {
                return Err(ConfigError::Invalid(
                    "montecarlo needs a seed (set `seed` or pass --seed)".into(),
                ))
            }
            (_, s) => s.unwrap_or(0),
        };
        Ok(SweepSpec {
            config: self.config,
            schemes: self.schemes.clone(),
            axis,
            values,
            methods: self.methods,
            n_trials: self.n_trials,
            seed,
        })
    }
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    /// `None` for command-line overrides.
    at: Option<(usize, usize)>,
}

type Entries = BTreeMap<String, Entry>;

fn key_known(key: &str) -> bool {
    REQUIRED.contains(&key) || OPTIONAL.contains(&key)
}

fn tokenize(text: &str) -> Result<Entries, ConfigError> {
    let mut entries = Entries::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let column_of = |offset: usize| raw[..offset].chars().count() + 1;
        let syntax = |offset: usize, message: String| ConfigError::Syntax {
            line,
            column: column_of(offset),
            message,
        };
        let key_start = content.len() - content.trim_start().len();
        let Some(eq) = content.find('=') else {
            return Err(syntax(key_start, "expected `key = value`".into()));
        };
        let key = content[..eq].trim();
        if key.is_empty() {
            return Err(syntax(key_start, "missing key before `=`".into()));
        }
        if !key_known(key) {
            return Err(syntax(key_start, format!("unknown key `{key}`")));
        }
        let rest = &content[eq + 1..];
        let value_start = eq + 1 + (rest.len() - rest.trim_start().len());
        let value = rest.trim();
        if value.is_empty() {
            return Err(syntax(value_start, format!("missing value for `{key}`")));
        }
        if entries.contains_key(key) {
            return Err(syntax(key_start, format!("duplicate key `{key}`")));
        }
        entries.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                at: Some((line, column_of(value_start))),
            },
        );
    }
    Ok(entries)
}

fn entry_error(key: &str, entry: &Entry, message: String) -> ConfigError {
    match entry.at {
        Some((line, column)) => ConfigError::Syntax {
            line,
            column,
            message,
        },
        None => ConfigError::Override {
            key: key.to_string(),
            message,
        },
    }
}

fn parse_number(s: &str) -> Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("`{}` is not a finite number", s.trim())),
    }
}

fn parse_values(s: &str) -> Result<Vec<f64>, String> {
    if let Some(args) = s
        .strip_prefix("linspace(")
        .and_then(|r| r.strip_suffix(')'))
    {
        let parts: Vec<&str> = args.split(',').collect();
        if parts.len() != 3 {
            return Err("linspace takes (start, stop, count)".into());
        }
        let a = parse_number(parts[0])?;
        let b = parse_number(parts[1])?;
        let n: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| format!("`{}` is not a point count", parts[2].trim()))?;
        return match n {
            0 => Err("linspace needs at least one point".into()),
            1 => Ok(vec![a]),
            _ => Ok((0..n)
                .map(|i| {
                    if i + 1 == n {
                        b
                    } else {
                        a + (b - a) * i as f64 / (n - 1) as f64
                    }
                })
                .collect()),
        };
    }
    s.split(',').map(parse_number).collect()
}

/// A policy list item: a bare `E` takes its probability from the `p` key.
fn parse_policy_item(s: &str) -> Result<Option<Policy>, String> {
    match s {
        "E" => Ok(None),
        other => other.parse::<Policy>().map(Some).map_err(|e| e.to_string()),
    }
}

struct Resolver<'a> {
    entries: &'a Entries,
}

impl Resolver<'_> {
    fn raw(&self, key: &'static str) -> Result<(&str, &Entry), ConfigError> {
        self.entries
            .get(key)
            .map(|e| (e.value.as_str(), e))
            .ok_or(ConfigError::MissingKey(key))
    }

    fn parse<T>(
        &self,
        key: &'static str,
        f: impl Fn(&str) -> Result<T, String>,
    ) -> Result<Option<T>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(entry) => f(&entry.value)
                .map(Some)
                .map_err(|m| entry_error(key, entry, m)),
        }
    }

    fn number(&self, key: &'static str) -> Result<f64, ConfigError> {
        let (v, entry) = self.raw(key)?;
        parse_number(v).map_err(|m| entry_error(key, entry, m))
    }
}

fn resolve(entries: &Entries) -> Result<Study, ConfigError> {
    let r = Resolver { entries };
    for key in REQUIRED {
        r.raw(key)?;
    }
    let config = NetworkConfig {
        disk_radius: r.number("D")?,
        legit_intensity: r.number("lambda")?,
        eaves_intensity: r.number("lambda_e")?,
        tx_rx_distance: r.number("l")?,
        path_loss_alpha: r.number("alpha")?,
        rx_sir_threshold: r.number("beta")?,
        eaves_sir_threshold: r.number("beta_e")?,
    };
    let r1 = r.number("R1")?;
    let r2 = r.number("R2")?;
    let items = r
        .parse("policy", |s| {
            s.split(',')
                .map(|x| parse_policy_item(x.trim()))
                .collect::<Result<Vec<_>, _>>()
        })?
        .unwrap_or_default();
    let p = r.parse("p", parse_number)?;
    let axis = r.parse("sweep_axis", |s| s.parse::<Axis>())?;
    let values = r.parse("sweep_values", parse_values)?;
    let methods = r
        .parse("methods", |s| s.parse::<Methods>())?
        .unwrap_or(Methods::CLOSED);
    let n_trials = r
        .parse("n_trials", |s| match s.parse::<u64>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(format!("`{s}` is not a positive trial count")),
        })?
        .unwrap_or(DEFAULT_TRIALS);
    let seed = r.parse("seed", |s| {
        s.parse::<u64>()
            .map_err(|_| format!("`{s}` is not a 64-bit seed"))
    })?;

    let sweep = match (axis, values) {
        (Some(axis), Some(values)) => Some((axis, values)),
        (None, None) => None,
        (Some(_), None) => return Err(ConfigError::MissingKey("sweep_values")),
        (None, Some(_)) => return Err(ConfigError::MissingKey("sweep_axis")),
    };
    let p_swept = matches!(sweep, Some((Axis::P, _)));
    if p_swept
        && items
            .iter()
            .any(|i| !matches!(i, None | Some(Policy::Constant { .. })))
    {
        return Err(ConfigError::Invalid(
            "sweep over p needs policy E only".into(),
        ));
    }
    let schemes = items
        .into_iter()
        .map(|item| {
            let policy = match (item, p) {
                (Some(policy), _) => policy,
                (None, Some(p)) => Policy::Constant { p },
                (None, None) if p_swept => Policy::Constant { p: 0.0 },
                (None, None) => return Err(ConfigError::Invalid("Policy E requires p".into())),
            };
            Ok(JammingScheme::new(r1, r2, policy))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let study = Study {
        config,
        schemes,
        methods,
        n_trials,
        seed,
        sweep,
    };
    check(&study)?;
    Ok(study)
}

fn check(study: &Study) -> Result<(), ConfigError> {
    if study.methods.is_empty() {
        return Err(ConfigError::Invalid("no methods requested".into()));
    }
    if study.methods.closed && !matches!(study.config.path_loss_alpha, a if a == 2.0 || a == 4.0) {
        return Err(ConfigError::Invalid(format!(
            "closed forms need alpha 2 or 4 (got {}); use methods = numeric",
            study.config.path_loss_alpha
        )));
    }
    let p_swept = matches!(study.sweep, Some((Axis::P, _)));
    for scheme in &study.schemes {
        if !p_swept {
            validate(study.config, *scheme)?;
        }
    }
    if let Some((axis, values)) = &study.sweep {
        if values.is_empty() {
            return Err(ConfigError::Invalid("sweep_values is empty".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::Invalid(
                "sweep_values must be strictly ascending".into(),
            ));
        }
        for &v in values {
            for scheme in &study.schemes {
                let (mut config, mut scheme) = (study.config, *scheme);
                axis.apply(&mut config, &mut scheme, v);
                validate(config, scheme)
                    .map_err(|e| ConfigError::Invalid(format!("{axis} = {v}: {e}")))?;
            }
        }
    }
    Ok(())
}

/// Parses and validates experiment text. `overrides` are `(key, value)`
/// pairs that replace or add file keys.
pub fn parse_config_with(text: &str, overrides: &[(String, String)]) -> Result<Study, ConfigError> {
    let mut entries = tokenize(text)?;
    for (key, value) in overrides {
        if !key_known(key) {
            return Err(ConfigError::Override {
                key: key.clone(),
                message: "unknown key".into(),
            });
        }
        entries.insert(
            key.clone(),
            Entry {
                value: value.trim().to_string(),
                at: None,
            },
        );
    }
    resolve(&entries)
}

pub fn parse_config(text: &str) -> Result<Study, ConfigError> {
    parse_config_with(text, &[])
}

pub fn load_config(path: &Path, overrides: &[(String, String)]) -> Result<Study, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config_with(&text, overrides)
}

/// Splits a `KEY=VALUE` override.
pub fn parse_override(s: &str) -> Result<(String, String), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected KEY=VALUE, got `{s}`"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "\
# reference network
D = 30
lambda = 0.1
lambda_e = 0.001
l = 1
alpha = 4
beta = 0.5
beta_e = 0.1
R1 = 1
R2 = 10
policy = I
";

    #[test]
    fn parses_reference_setup() {
        let study = parse_config(BASE).unwrap();
        assert_eq!(study.config, NetworkConfig::reference());
        assert_eq!(
            study.scheme(),
            JammingScheme::new(1.0, 10.0, Policy::Increasing)
        );
        assert_eq!(study.methods, Methods::CLOSED);
        assert_eq!(study.n_trials, DEFAULT_TRIALS);
        assert!(study.sweep.is_none());
    }

    #[test]
    fn missing_key_is_named() {
        let text = BASE.replace("alpha = 4\n", "");
        let err = parse_config(&text).unwrap_err();
        assert!(matches!(err, ConfigError::MissingKey("alpha")));
        assert!(err.to_string().contains("alpha"));
    }

    #[test]
    fn bare_e_needs_p() {
        let text = BASE.replace("policy = I", "policy = E");
        assert_eq!(
            parse_config(&text).unwrap_err().to_string(),
            "Policy E requires p"
        );
        let study = parse_config(&format!("{text}p = 0.3\n")).unwrap();
        assert_eq!(study.scheme().policy, Policy::Constant { p: 0.3 });
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse_config(&format!("{BASE}colour = blue\n")).unwrap_err();
        assert!(
            matches!(
                err,
                ConfigError::Syntax {
                    line: 12,
                    column: 1,
                    ..
                }
            ),
            "{err}"
        );
        let err = parse_config(&BASE.replace("lambda = 0.1", "lambda = fast")).unwrap_err();
        assert!(
            matches!(
                err,
                ConfigError::Syntax {
                    line: 3,
                    column: 10,
                    ..
                }
            ),
            "{err}"
        );
        let err = parse_config(&BASE.replace("R1 = 1", "  R1 1")).unwrap_err();
        assert!(
            matches!(
                err,
                ConfigError::Syntax {
                    line: 9,
                    column: 3,
                    ..
                }
            ),
            "{err}"
        );
        let err = parse_config(&format!("{BASE}D = 40\n")).unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn model_violations_are_forwarded() {
        let err = parse_config(&BASE.replace("R2 = 10", "R2 = 40")).unwrap_err();
        assert!(matches!(err, ConfigError::Model(_)));
        assert!(err.to_string().contains("R2 exceeds D"));
    }

    #[test]
    fn sweep_lists_and_linspace() {
        let study = parse_config(&format!(
            "{BASE}sweep_axis = D\nsweep_values = 10, 30, 100\nmethods = closed, mc\nseed = 7\nn_trials = 500\n"
        ))
        .unwrap();
        assert_eq!(study.sweep, Some((Axis::D, vec![10.0, 30.0, 100.0])));
        assert!(study.methods.montecarlo && study.methods.closed && !study.methods.numeric);
        let spec = study.sweep_spec().unwrap();
        assert_eq!((spec.seed, spec.n_trials), (7, 500));

        let study = parse_config(&format!(
            "{BASE}sweep_axis = lambda\nsweep_values = linspace(0.02, 0.1, 5)\n"
        ))
        .unwrap();
        let (_, values) = study.sweep.unwrap();
        assert_eq!(values.len(), 5);
        assert_eq!(values[4], 0.1);
        assert!((values[1] - 0.04).abs() < 1e-15);
    }

    #[test]
    fn sweep_must_ascend_and_stay_valid() {
        let err =
            parse_config(&format!("{BASE}sweep_axis = D\nsweep_values = 30, 20\n")).unwrap_err();
        assert!(err.to_string().contains("ascending"));
        let err =
            parse_config(&format!("{BASE}sweep_axis = R1\nsweep_values = 5, 12\n")).unwrap_err();
        assert!(err.to_string().contains("R1 = 12"), "{err}");
        let err = parse_config(&format!("{BASE}sweep_axis = D\n")).unwrap_err();
        assert!(matches!(err, ConfigError::MissingKey("sweep_values")));
    }

    #[test]
    fn p_axis_requires_policy_e() {
        let err =
            parse_config(&format!("{BASE}sweep_axis = p\nsweep_values = 0.1, 0.5\n")).unwrap_err();
        assert!(err.to_string().contains("policy E"));
        let text = BASE.replace("policy = I", "policy = E");
        let study =
            parse_config(&format!("{text}sweep_axis = p\nsweep_values = 0, 0.5, 1\n")).unwrap();
        assert_eq!(study.schemes.len(), 1);
    }

    #[test]
    fn multiple_policies_in_order() {
        let text = BASE.replace("policy = I", "policy = I, D, E(0.5), E");
        let study = parse_config(&format!("{text}p = 0.1\n")).unwrap();
        let policies: Vec<Policy> = study.schemes.iter().map(|s| s.policy).collect();
        assert_eq!(
            policies,
            [
                Policy::Increasing,
                Policy::Decreasing,
                Policy::Constant { p: 0.5 },
                Policy::Constant { p: 0.1 }
            ]
        );
    }

    #[test]
    fn overrides_replace_file_keys() {
        let ov = vec![
            parse_override("lambda=0.05").unwrap(),
            parse_override("seed = 3").unwrap(),
        ];
        let study = parse_config_with(BASE, &ov).unwrap();
        assert_eq!(study.config.legit_intensity, 0.05);
        assert_eq!(study.seed, Some(3));
        let bad = vec![("lambda".to_string(), "x".to_string())];
        assert!(matches!(
            parse_config_with(BASE, &bad),
            Err(ConfigError::Override { .. })
        ));
        let unknown = vec![("gamma".to_string(), "1".to_string())];
        assert!(parse_config_with(BASE, &unknown).is_err());
    }

    #[test]
    fn montecarlo_needs_seed() {
        let study = parse_config(&format!("{BASE}methods = montecarlo\n")).unwrap();
        assert!(study.sweep_spec().unwrap_err().to_string().contains("seed"));
    }

    #[test]
    fn closed_rejects_other_exponents() {
        let err = parse_config(&BASE.replace("alpha = 4", "alpha = 3")).unwrap_err();
        assert!(err.to_string().contains("numeric"));
        let ok = parse_config(&format!(
            "{}methods = numeric\n",
            BASE.replace("alpha = 4", "alpha = 3")
        ));
        assert!(ok.is_ok());
    }
}
