//! Experiment configuration files: `key = value` lines grouped under
//! `[section]` headers, `#` comments.
//!
//! ```text
//! scheme = dirty-paper
//! trials = 10000
//! seed = 1
//!
//! [params]
//! n = 10
//! rate = 0.4
//!
//! [sweep]
//! axis = n
//! values = 5, 10, 15
//! ```
//!
//! Keys before the first header (or under `[experiment]`) select the scheme,
//! trial count and master seed. `[params]` holds scheme parameters; any key
//! left out keeps its default. Law tables are referenced by path, relative
//! to the config file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    DirtyPaper,
    WzGaussian,
    GpFinite,
    WzFinite,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::DirtyPaper,
        Scheme::WzGaussian,
        Scheme::GpFinite,
        Scheme::WzFinite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::DirtyPaper => "dirty-paper",
            Scheme::WzGaussian => "wz-gaussian",
            Scheme::GpFinite => "gp-finite",
            Scheme::WzFinite => "wz-finite",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown scheme `{s}` (expected dirty-paper, wz-gaussian, gp-finite or wz-finite)"))
    }
}

fn num<T: FromStr>(value: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("cannot parse `{value}` as {}", std::any::type_name::<T>()))
}

fn positive(value: &str) -> std::result::Result<f64, String> {
    let v: f64 = num(value)?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be positive, got {value}"))
    }
}

fn non_negative(value: &str) -> std::result::Result<f64, String> {
    let v: f64 = num(value)?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be non-negative, got {value}"))
    }
}

fn probability(value: &str) -> std::result::Result<f64, String> {
    let v: f64 = num(value)?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("must lie in [0, 1], got {value}"))
    }
}

fn count(value: &str) -> std::result::Result<usize, String> {
    let v: usize = num(value)?;
    if v == 0 {
        return Err("must be at least 1".into());
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirtyPaperParams {
    pub power: f64,
    pub noise_var: f64,
    pub interference_var: f64,
    pub n: usize,
    pub rate: f64,
}

impl Default for DirtyPaperParams {
    fn default() -> Self {
        DirtyPaperParams {
            power: 1.0,
            noise_var: 1.0,
            interference_var: 4.0,
            n: 15,
            rate: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WzGaussianParams {
    pub l: usize,
    pub rate: f64,
    pub epsilon: f64,
    /// Variance of `N = X - Y`.
    pub source_var: f64,
    pub si_var: f64,
}

impl Default for WzGaussianParams {
    fn default() -> Self {
        WzGaussianParams {
            l: 30,
            rate: 1.0,
            epsilon: 0.05,
            source_var: 1.0,
            si_var: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpFiniteParams {
    /// Law table; without one the channel is the binary additive-state
    /// channel below.
    pub law: Option<PathBuf>,
    pub state_one: f64,
    pub flip: f64,
    pub grid_step: f64,
    pub aux_size: usize,
    pub message_bits: usize,
    pub iterations: usize,
    pub slack: f64,
    pub repetition: usize,
    pub min_block: usize,
    pub inversion_slack: f64,
    pub decoding_slack: f64,
    pub hash_seed: u64,
}

impl Default for GpFiniteParams {
    fn default() -> Self {
        GpFiniteParams {
            law: None,
            state_one: 0.5,
            flip: 0.002,
            grid_step: 0.05,
            aux_size: 2,
            message_bits: 12,
            iterations: 2,
            slack: 0.15,
            repetition: 5,
            min_block: 4,
            inversion_slack: 0.3,
            decoding_slack: 0.01,
            hash_seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PadChoice {
    Zero,
    Weighted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WzFiniteParams {
    /// Law table; without one the source is doubly symmetric with the
    /// test channel below and the Bayes reconstruction.
    pub law: Option<PathBuf>,
    pub flip: f64,
    pub test_channel: f64,
    /// Distortion limit for the auxiliary search when the law table has no
    /// auxiliary.
    pub max_distortion: f64,
    pub grid_step: f64,
    pub aux_size: usize,
    pub base_len: usize,
    pub iterations: usize,
    pub slack: f64,
    pub shaping_slack: f64,
    pub decoding_slack: f64,
    pub pad: PadChoice,
    pub candidates: usize,
    pub hash_seed: u64,
}

impl Default for WzFiniteParams {
    fn default() -> Self {
        WzFiniteParams {
            law: None,
            flip: 0.25,
            test_channel: 0.1,
            max_distortion: 0.1,
            grid_step: 0.05,
            aux_size: 2,
            base_len: 10,
            iterations: 2,
            slack: 0.1,
            shaping_slack: 0.0215,
            decoding_slack: 1.0,
            pad: PadChoice::Weighted,
            candidates: 64,
            hash_seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    DirtyPaper(DirtyPaperParams),
    WzGaussian(WzGaussianParams),
    GpFinite(GpFiniteParams),
    WzFinite(WzFiniteParams),
}

impl Params {
    pub fn defaults(scheme: Scheme) -> Params {
        match scheme {
            Scheme::DirtyPaper => Params::DirtyPaper(Default::default()),
            Scheme::WzGaussian => Params::WzGaussian(Default::default()),
            Scheme::GpFinite => Params::GpFinite(Default::default()),
            Scheme::WzFinite => Params::WzFinite(Default::default()),
        }
    }

    pub fn scheme(&self) -> Scheme {
        match self {
            Params::DirtyPaper(_) => Scheme::DirtyPaper,
            Params::WzGaussian(_) => Scheme::WzGaussian,
            Params::GpFinite(_) => Scheme::GpFinite,
            Params::WzFinite(_) => Scheme::WzFinite,
        }
    }

    /// Set one parameter from its textual value. `base` resolves law paths.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> std::result::Result<(), String> {
        match self {
            Params::DirtyPaper(p) => match key {
                "power" => p.power = non_negative(value)?,
                "noise_var" => p.noise_var = positive(value)?,
                "interference_var" => p.interference_var = non_negative(value)?,
                "n" => p.n = num(value)?,
                "rate" => p.rate = positive(value)?,
                _ => return Err(unknown(key, self.scheme())),
            },
            Params::WzGaussian(p) => match key {
                "l" => p.l = count(value)?,
                "rate" => p.rate = positive(value)?,
                "epsilon" => p.epsilon = positive(value)?,
                "source_var" => p.source_var = non_negative(value)?,
                "si_var" => p.si_var = non_negative(value)?,
                _ => return Err(unknown(key, self.scheme())),
            },
            Params::GpFinite(p) => match key {
                "law" => p.law = Some(base.join(value)),
                "state_one" => p.state_one = probability(value)?,
                "flip" => p.flip = probability(value)?,
                "grid_step" => p.grid_step = positive(value)?,
                "aux_size" => p.aux_size = count(value)?,
                "message_bits" => p.message_bits = count(value)?,
                "iterations" => p.iterations = count(value)?,
                "slack" => p.slack = non_negative(value)?,
                "repetition" => p.repetition = count(value)?,
                "min_block" => p.min_block = count(value)?,
                "inversion_slack" => p.inversion_slack = positive(value)?,
                "decoding_slack" => p.decoding_slack = positive(value)?,
                "hash_seed" => p.hash_seed = num(value)?,
                _ => return Err(unknown(key, self.scheme())),
            },
            Params::WzFinite(p) => match key {
                "law" => p.law = Some(base.join(value)),
                "flip" => p.flip = probability(value)?,
                "test_channel" => p.test_channel = probability(value)?,
                "max_distortion" => p.max_distortion = non_negative(value)?,
                "grid_step" => p.grid_step = positive(value)?,
                "aux_size" => p.aux_size = count(value)?,
                "base_len" => p.base_len = count(value)?,
                "iterations" => p.iterations = count(value)?,
                "slack" => p.slack = non_negative(value)?,
                "shaping_slack" => p.shaping_slack = positive(value)?,
                "decoding_slack" => p.decoding_slack = positive(value)?,
                "pad" => {
                    p.pad = match value {
                        "zero" => PadChoice::Zero,
                        "weighted" => PadChoice::Weighted,
                        _ => return Err(format!("expected `zero` or `weighted`, got `{value}`")),
                    }
                }
                "candidates" => p.candidates = count(value)?,
                "hash_seed" => p.hash_seed = num(value)?,
                _ => return Err(unknown(key, self.scheme())),
            },
        }
        Ok(())
    }

    /// Every parameter with its current value, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        fn law(p: &Option<PathBuf>) -> String {
            p.as_ref()
                .map_or_else(|| "builtin".to_string(), |p| p.display().to_string())
        }
        match self {
            Params::DirtyPaper(p) => vec![
                ("power", format!("{:?}", p.power)),
                ("noise_var", format!("{:?}", p.noise_var)),
                ("interference_var", format!("{:?}", p.interference_var)),
                ("n", p.n.to_string()),
                ("rate", format!("{:?}", p.rate)),
            ],
            Params::WzGaussian(p) => vec![
                ("l", p.l.to_string()),
                ("rate", format!("{:?}", p.rate)),
                ("epsilon", format!("{:?}", p.epsilon)),
                ("source_var", format!("{:?}", p.source_var)),
                ("si_var", format!("{:?}", p.si_var)),
            ],
            Params::GpFinite(p) => vec![
                ("law", law(&p.law)),
                ("state_one", format!("{:?}", p.state_one)),
                ("flip", format!("{:?}", p.flip)),
                ("grid_step", format!("{:?}", p.grid_step)),
                ("aux_size", p.aux_size.to_string()),
                ("message_bits", p.message_bits.to_string()),
                ("iterations", p.iterations.to_string()),
                ("slack", format!("{:?}", p.slack)),
                ("repetition", p.repetition.to_string()),
                ("min_block", p.min_block.to_string()),
                ("inversion_slack", format!("{:?}", p.inversion_slack)),
                ("decoding_slack", format!("{:?}", p.decoding_slack)),
                ("hash_seed", p.hash_seed.to_string()),
            ],
            Params::WzFinite(p) => vec![
                ("law", law(&p.law)),
                ("flip", format!("{:?}", p.flip)),
                ("test_channel", format!("{:?}", p.test_channel)),
                ("max_distortion", format!("{:?}", p.max_distortion)),
                ("grid_step", format!("{:?}", p.grid_step)),
                ("aux_size", p.aux_size.to_string()),
                ("base_len", p.base_len.to_string()),
                ("iterations", p.iterations.to_string()),
                ("slack", format!("{:?}", p.slack)),
                ("shaping_slack", format!("{:?}", p.shaping_slack)),
                ("decoding_slack", format!("{:?}", p.decoding_slack)),
                (
                    "pad",
                    match p.pad {
                        PadChoice::Zero => "zero",
                        PadChoice::Weighted => "weighted",
                    }
                    .to_string(),
                ),
                ("candidates", p.candidates.to_string()),
                ("hash_seed", p.hash_seed.to_string()),
            ],
        }
    }

    /// Apply a numeric sweep value. Integer parameters reject fractions.
    pub fn set_numeric(&mut self, key: &str, value: f64) -> std::result::Result<(), String> {
        if key == "law" || key == "pad" {
            return Err(format!("`{key}` cannot be swept"));
        }
        self.set(key, &format!("{value}"), Path::new(""))
    }
}

fn unknown(key: &str, scheme: Scheme) -> String {
    format!("unknown parameter `{key}` for scheme {scheme}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub axis: String,
    pub values: Vec<f64>,
}

impl Sweep {
    /// Parse a comma-separated list of numbers.
    pub fn parse_values(text: &str) -> std::result::Result<Vec<f64>, String> {
        let values: Vec<f64> = text
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(num::<f64>)
            .collect::<std::result::Result<_, _>>()?;
        if values.is_empty() {
            return Err("sweep needs at least one value".into());
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub trials: usize,
    pub seed: u64,
    pub params: Params,
    pub sweep: Option<Sweep>,
}

impl ExperimentConfig {
    pub fn new(params: Params, trials: usize, seed: u64) -> Self {
        ExperimentConfig {
            trials,
            seed,
            params,
            sweep: None,
        }
    }

    pub fn scheme(&self) -> Scheme {
        self.params.scheme()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            line: 0,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new("")))
    }

    /// Parse config text; law paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Config { line, message };
        let mut section = "experiment".to_string();
        let mut scheme: Option<Scheme> = None;
        let mut trials = 1000usize;
        let mut seed = 0u64;
        let mut params: Vec<(usize, String, String)> = Vec::new();
        let mut axis: Option<(usize, String)> = None;
        let mut values: Option<(usize, Vec<f64>)> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(line, format!("malformed section header `{content}`")))?
                    .trim();
                if !matches!(name, "experiment" | "params" | "sweep") {
                    return Err(err(line, format!("unknown section `[{name}]`")));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected `key = value`, got `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if value.is_empty() {
                return Err(err(line, format!("`{key}` has no value")));
            }
            let field = |r: std::result::Result<(), String>| r.map_err(|m| err(line, format!("`{key}`: {m}")));
            match section.as_str() {
                "experiment" => match key {
                    "scheme" => scheme = Some(value.parse().map_err(|m| err(line, m))?),
                    "trials" => field(num(value).map(|v| trials = v))?,
                    "seed" => field(num(value).map(|v| seed = v))?,
                    _ => {
                        return Err(err(
                            line,
                            format!("unknown key `{key}` (expected scheme, trials or seed)"),
                        ))
                    }
                },
                "params" => params.push((line, key.to_string(), value.to_string())),
                _ => match key {
                    "axis" => axis = Some((line, value.to_string())),
                    "values" => values = Some((line, Sweep::parse_values(value).map_err(|m| err(line, m))?)),
                    _ => {
                        return Err(err(
                            line,
                            format!("unknown sweep key `{key}` (expected axis or values)"),
                        ))
                    }
                },
            }
        }
        let scheme = scheme.ok_or_else(|| err(0, "missing `scheme`".into()))?;
        let mut p = Params::defaults(scheme);
        for (line, key, value) in &params {
            p.set(key, value, base)
                .map_err(|m| err(*line, format!("`{key}`: {m}")))?;
        }
        let sweep = match (axis, values) {
            (None, None) => None,
            (Some((line, _)), None) => return Err(err(line, "sweep axis given without values".into())),
            (None, Some((line, _))) => return Err(err(line, "sweep values given without axis".into())),
            (Some((line, axis)), Some((_, values))) => {
                let mut probe = p.clone();
                for &v in &values {
                    probe
                        .set_numeric(&axis, v)
                        .map_err(|m| err(line, format!("sweep axis `{axis}`: {m}")))?;
                }
                Some(Sweep { axis, values })
            }
        };
        Ok(ExperimentConfig {
            trials,
            seed,
            params: p,
            sweep,
        })
    }

    /// Replace the sweep, checking every value against the axis.
    pub fn with_sweep(mut self, axis: &str, values: Vec<f64>) -> Result<Self> {
        let mut probe = self.params.clone();
        for &v in &values {
            probe.set_numeric(axis, v).map_err(|m| Error::Config {
                line: 0,
                message: format!("sweep axis `{axis}`: {m}"),
            })?;
        }
        if values.is_empty() {
            return Err(Error::Config {
                line: 0,
                message: "sweep needs at least one value".into(),
            });
        }
        self.sweep = Some(Sweep {
            axis: axis.to_string(),
            values,
        });
        Ok(self)
    }

    /// Canonical text of the effective configuration, defaults included.
    /// Parsing it back gives the same configuration.
    pub fn render(&self) -> String {
        let mut out = format!(
            "scheme = {}\ntrials = {}\nseed = {}\n\n[params]\n",
            self.scheme(),
            self.trials,
            self.seed
        );
        for (k, v) in self.params.entries() {
            if k == "law" && v == "builtin" {
                continue;
            }
            out.push_str(&format!("{k} = {v}\n"));
        }
        if let Some(s) = &self.sweep {
            let vals: Vec<String> = s.values.iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&format!("\n[sweep]\naxis = {}\nvalues = {}\n", s.axis, vals.join(", ")));
        }
        out
    }
}
