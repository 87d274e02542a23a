//! Resolved experiment parameters. Precedence: flags, then the config
//! file, then the defaults below.

use crate::error::{io_err, CliError, CliResult};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Real number accepting `a/b` fractions and `inf` (serialized as a string).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl FromStr for Real {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let t = s.trim();
        let parse = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("cannot parse {s:?} as a real number"));
        let v = match t {
            "inf" | "infinity" => f64::INFINITY,
            _ => match t.split_once('/') {
                Some((a, b)) => parse(a)? / parse(b)?,
                None => parse(t)?,
            },
        };
        if v.is_nan() {
            return Err(format!("{s:?} is not a number"));
        }
        Ok(Real(v))
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str(if self.0 > 0.0 { "inf" } else { "-inf" })
        }
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Real(v)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LpVerifyParams {
    pub dim: usize,
    pub r: usize,
    pub n0: usize,
    pub eps: f64,
    pub n: usize,
    pub side: Option<f64>,
    pub inputs: usize,
    pub seed: u64,
}

impl Default for LpVerifyParams {
    fn default() -> Self {
        LpVerifyParams { dim: 2, r: 3, n0: 8, eps: 0.25, n: 1024, side: None, inputs: 20, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormsParams {
    pub input: Option<PathBuf>,
    pub p: Real,
    pub q: Vec<Real>,
}

impl Default for NormsParams {
    fn default() -> Self {
        NormsParams { input: None, p: Real(1.0), q: vec![Real(1.0), Real(2.0), Real(f64::INFINITY)] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CzParams {
    pub input: Option<PathBuf>,
    /// Level for a stored input; random trials draw their own.
    pub alpha: f64,
    pub trials: usize,
    pub n: usize,
    pub side: f64,
    pub seed: u64,
}

impl Default for CzParams {
    fn default() -> Self {
        CzParams { input: None, alpha: 1.0, trials: 1000, n: 32, side: 8.0, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FuzzParams {
    pub trials: usize,
    pub max_size: usize,
    pub seed: u64,
}

impl Default for FuzzParams {
    fn default() -> Self {
        FuzzParams { trials: 1000, max_size: 60, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SharpnessParams {
    #[serde(rename = "C")]
    pub c: u64,
    #[serde(rename = "N")]
    pub n_terms: Vec<usize>,
    pub q: Vec<Real>,
    pub engine: String,
    pub n: usize,
    pub side: f64,
    pub samples: usize,
    pub eps0: Option<f64>,
}

impl Default for SharpnessParams {
    fn default() -> Self {
        SharpnessParams {
            c: 8,
            n_terms: vec![4, 8, 16, 32],
            q: vec![Real(1.0), Real(4.0 / 3.0), Real(2.0)],
            engine: "polar".into(),
            n: 512,
            side: 64.0,
            samples: 4096,
            eps0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayParams {
    pub m: f64,
    pub gamma: Vec<f64>,
    #[serde(rename = "R")]
    pub radii: Vec<f64>,
}

impl Default for DecayParams {
    fn default() -> Self {
        DecayParams { m: 2.0, gamma: vec![0.0, 0.0], radii: vec![16.0, 64.0, 256.0, 1024.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SobolevParams {
    pub m: f64,
    pub trials: usize,
    pub n: usize,
    pub side: f64,
    pub max_freq: f64,
    pub seed: u64,
}

impl Default for SobolevParams {
    fn default() -> Self {
        let d = roughlab::curve_ops::SobolevConfig::default();
        SobolevParams { m: d.m, trials: d.trials, n: d.n, side: d.side, max_freq: d.max_freq, seed: d.seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Prop41Params {
    pub n: usize,
    pub side: f64,
    pub m: f64,
    pub scales: Vec<i32>,
    pub l_range: Option<Vec<i32>>,
}

impl Default for Prop41Params {
    fn default() -> Self {
        Prop41Params { n: 128, side: 16.0, m: 2.0, scales: vec![0, 1, 2], l_range: None }
    }
}

/// Overlay `flags` on the config file on the defaults of `P`.
pub fn resolve<P>(flags: &impl Serialize, config: Option<&Path>) -> CliResult<P>
where
    P: Serialize + DeserializeOwned + Default,
{
    let mut merged = serde_json::to_value(P::default()).expect("defaults serialize");
    if let Some(path) = config {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path.display(), e))?;
        let table: toml::Table =
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {}", path.display(), e.message())))?;
        overlay(&mut merged, serde_json::to_value(table).expect("toml maps to json"));
    }
    overlay(&mut merged, serde_json::to_value(flags).expect("flags serialize"));
    serde_json::from_value(merged).map_err(|e| CliError::Usage(format!("invalid parameters: {e}")))
}

fn overlay(base: &mut Value, top: Value) {
    if let (Value::Object(b), Value::Object(t)) = (base, top) {
        b.extend(t);
    }
}
