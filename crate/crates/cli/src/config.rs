//! Structure configuration: a TOML file and/or command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use gammaz::{Preset, Structure};
use serde::Deserialize;

use crate::Failure;

/// On-disk structure description.  `preset` replaces the frame fields.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureConfig {
    pub preset: Option<String>,
    pub coords: Option<Vec<String>>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub a: Option<Vec<Vec<String>>>,
    pub z: Option<Vec<Vec<String>>>,
    #[serde(rename = "V")]
    pub v: Option<String>,
    pub log_vol: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, ParamValue>,
    /// Entries of `a^T` replaced after building a preset; the preset's shift
    /// vectors are kept.
    #[serde(default)]
    pub a_override: Vec<Override>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Expr(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Override {
    pub row: usize,
    pub col: usize,
    pub expr: String,
}

impl StructureConfig {
    pub fn load(path: &Path) -> Result<StructureConfig, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::usage(format!("bad config {}: {e}", path.display())))
    }
}

/// Flag-level inputs merged over the config file.
#[derive(Debug, Default)]
pub struct Sources {
    pub config: Option<PathBuf>,
    pub preset: Option<String>,
    pub v: Option<String>,
    pub log_vol: Option<String>,
    pub params: Vec<String>,
}

fn split_param(kv: &str) -> Result<(String, ParamValue), Failure> {
    let (k, v) = kv
        .split_once('=')
        .ok_or_else(|| Failure::usage(format!("--param expects key=value, got `{kv}`")))?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() {
        return Err(Failure::usage(format!("--param has an empty key in `{kv}`")));
    }
    Ok(match v.parse::<f64>() {
        Ok(x) => (k.to_string(), ParamValue::Number(x)),
        Err(_) => (k.to_string(), ParamValue::Expr(v.to_string())),
    })
}

/// Numeric parameters plus the optional `g` expression; non-numeric values
/// other than `g` must be constant expressions in earlier parameters.
fn resolve_params(raw: &BTreeMap<String, ParamValue>) -> Result<(BTreeMap<String, f64>, Option<String>), Failure> {
    let mut nums = BTreeMap::new();
    let mut g = None;
    let mut pending = Vec::new();
    for (k, v) in raw {
        match v {
            ParamValue::Number(x) => {
                nums.insert(k.clone(), *x);
            }
            ParamValue::Expr(e) if k == "g" => g = Some(e.clone()),
            ParamValue::Expr(e) => pending.push((k.clone(), e.clone())),
        }
    }
    for (k, e) in pending {
        let none: [&str; 0] = [];
        let val = gammaz::exprdsl::parse(&e, &none, &nums)
            .and_then(|x| x.eval(&[]))
            .map_err(|err| Failure::usage(format!("parameter {k} = `{e}`: {err}")))?;
        nums.insert(k, val);
    }
    Ok((nums, g))
}

pub fn build(src: &Sources) -> Result<Structure, Failure> {
    let mut cfg = match &src.config {
        Some(p) => StructureConfig::load(p)?,
        None => StructureConfig::default(),
    };
    if let Some(p) = &src.preset {
        cfg.preset = Some(p.clone());
    }
    if let Some(v) = &src.v {
        cfg.v = Some(v.clone());
    }
    if let Some(lv) = &src.log_vol {
        cfg.log_vol = Some(lv.clone());
    }
    for kv in &src.params {
        let (k, v) = split_param(kv)?;
        cfg.params.insert(k, v);
    }
    let (params, g) = resolve_params(&cfg.params)?;

    let mut s = if let Some(name) = &cfg.preset {
        let p: Preset = name.parse().map_err(Failure::from)?;
        Structure::preset(p, &params, g.as_deref())?
    } else {
        if g.is_some() {
            return Err(Failure::usage("parameter g is only meaningful for the se2 preset".into()));
        }
        let a = cfg.a.as_ref().ok_or_else(|| Failure::usage("structure needs a preset or an `a` matrix".into()))?;
        let rows = a.len();
        let coords = cfg.coords.clone().unwrap_or_else(|| (1..=rows).map(|i| format!("x{i}")).collect());
        let z = cfg.z.clone().unwrap_or_else(|| vec![Vec::new(); rows]);
        if let Some(n) = cfg.n {
            if a.iter().any(|r| r.len() != n) {
                return Err(Failure::usage(format!("`a` must have {n} columns")));
            }
        }
        if let Some(m) = cfg.m {
            if z.iter().any(|r| r.len() != m) {
                return Err(Failure::usage(format!("`z` must have {m} columns")));
            }
        }
        let v = cfg.v.as_deref().unwrap_or("0");
        let lv = cfg.log_vol.as_deref().unwrap_or("0");
        Structure::new(&coords, a, &z, v, lv, params)?
    };
    if cfg.preset.is_some() {
        if let Some(v) = &cfg.v {
            s = s.with_potential(v)?;
        }
        if let Some(lv) = &cfg.log_vol {
            s = s.with_log_vol(lv)?;
        }
    }
    for o in &cfg.a_override {
        s = s.with_a_t_entry_tagged(o.row, o.col, &o.expr)?;
    }
    Ok(s)
}
