//! Generator spec files: coefficient arrays or named families plus an
//! optional settings block. A report written by this tool is accepted as a
//! spec too, so a run can be replayed from its own output.

use std::path::Path;

use dwset::blaschke::{blaschke_power, monomial_generators, remark_sequence, BlaschkePowerParams, MonomialFamilyParams};
use dwset::orbit::{DiskGrid, DwSettings};
use dwset::semigroup::GeneratorSet;
use dwset::{Complex64, DwTolerances, IterationBudget, Polynomial, RationalMap, Tolerances};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::CliError;
use crate::report::SCHEMA;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSettings {
    pub circles: usize,
    pub angles: usize,
    pub random: usize,
}

impl Default for GridSettings {
    fn default() -> Self {
        GridSettings { circles: 12, angles: 16, random: 32 }
    }
}

/// Analysis settings; every field has a default and command-line flags override.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub depth: usize,
    pub seed: u64,
    /// Julia samples per element.
    pub points: usize,
    pub grid: GridSettings,
    pub tolerances: Tolerances,
    pub budget: IterationBudget,
    pub dw: DwTolerances,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            depth: 3,
            seed: 0,
            points: 4096,
            grid: GridSettings::default(),
            tolerances: Tolerances::default(),
            budget: IterationBudget::default(),
            dw: DwTolerances::default(),
        }
    }
}

impl Settings {
    pub fn grid(&self) -> DiskGrid {
        DiskGrid::with_density(self.grid.circles, self.grid.angles, self.grid.random, self.seed)
    }

    pub fn dw_settings(&self) -> DwSettings {
        DwSettings { tolerances: self.tolerances, budget: self.budget, dw: self.dw }
    }
}

#[derive(Debug, Clone)]
pub struct Spec {
    pub gens: GeneratorSet,
    pub settings: Settings,
}

impl Spec {
    /// The expanded generator list as coefficient entries.
    pub fn inputs_echo(&self) -> Value {
        let gens: Vec<Value> = self
            .gens
            .gens()
            .iter()
            .zip(self.gens.labels())
            .map(|(g, label)| {
                let mut entry = json!({ "num": g.num(), "den": g.den() });
                if let Some(l) = label {
                    entry["label"] = json!(l);
                }
                entry
            })
            .collect();
        json!({ "generators": gens })
    }
}

pub fn load_spec(path: &Path) -> Result<Spec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::parse(format!("cannot read spec {}: {e}", path.display())))?;
    parse_spec(&text)
}

pub fn parse_spec(text: &str) -> Result<Spec, CliError> {
    let value: Value = serde_json::from_str(text).map_err(|e| CliError::parse(format!("spec is not valid JSON: {e}")))?;
    let obj = value.as_object().ok_or_else(|| CliError::parse("spec must be a JSON object"))?;

    // a report replays through its inputs and settings echo
    if obj.get("schema").and_then(Value::as_str) == Some(SCHEMA) {
        let inputs = obj.get("inputs").ok_or_else(|| CliError::parse("report has no inputs"))?;
        let gens = inputs
            .get("generators")
            .ok_or_else(|| CliError::parse("report inputs carry no generators"))?;
        let settings = obj.get("settings").map(|s| parse_settings(s, "settings")).transpose()?;
        return Ok(Spec { gens: parse_generators(gens)?, settings: settings.unwrap_or_default() });
    }

    check_keys(obj, &["generators", "settings"], "spec")?;
    let gens = obj.get("generators").ok_or_else(|| CliError::parse("spec: missing field `generators`"))?;
    let settings = obj.get("settings").map(|s| parse_settings(s, "settings")).transpose()?;
    Ok(Spec { gens: parse_generators(gens)?, settings: settings.unwrap_or_default() })
}

fn check_keys(obj: &Map<String, Value>, allowed: &[&str], path: &str) -> Result<(), CliError> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(CliError::parse(format!(
            "{path}: unknown field `{k}`, expected one of {}",
            allowed.iter().map(|a| format!("`{a}`")).collect::<Vec<_>>().join(", ")
        ))),
        None => Ok(()),
    }
}

fn typed<T: DeserializeOwned>(v: &Value, path: &str) -> Result<T, CliError> {
    T::deserialize(v).map_err(|e| CliError::parse(format!("{path}: {e}")))
}

pub fn parse_settings(v: &Value, path: &str) -> Result<Settings, CliError> {
    let obj = v.as_object().ok_or_else(|| CliError::parse(format!("{path}: expected an object")))?;
    check_keys(obj, &["depth", "seed", "points", "grid", "tolerances", "budget", "dw"], path)?;
    let mut s = Settings::default();
    for (k, val) in obj {
        let p = format!("{path}.{k}");
        match k.as_str() {
            "depth" => s.depth = typed(val, &p)?,
            "seed" => s.seed = typed(val, &p)?,
            "points" => s.points = typed(val, &p)?,
            "grid" => s.grid = typed(val, &p)?,
            "tolerances" => s.tolerances = typed(val, &p)?,
            "budget" => s.budget = typed(val, &p)?,
            "dw" => s.dw = typed(val, &p)?,
            _ => unreachable!(),
        }
    }
    Ok(s)
}

fn parse_generators(v: &Value) -> Result<GeneratorSet, CliError> {
    let list = v.as_array().ok_or_else(|| CliError::parse("generators: expected an array"))?;
    let mut maps = Vec::new();
    let mut labels = Vec::new();
    for (i, entry) in list.iter().enumerate() {
        let path = format!("generators[{i}]");
        for (m, l) in parse_entry(entry, &path)? {
            maps.push(m);
            labels.push(l);
        }
    }
    GeneratorSet::with_labels(maps, labels).map_err(|e| CliError::parse(format!("generators: {e}")))
}

fn parse_complex(v: &Value, path: &str) -> Result<Complex64, CliError> {
    match v {
        Value::Number(n) => n.as_f64().map(|x| Complex64::new(x, 0.0)),
        Value::Array(a) if a.len() == 2 => match (a[0].as_f64(), a[1].as_f64()) {
            (Some(re), Some(im)) => Some(Complex64::new(re, im)),
            _ => None,
        },
        _ => None,
    }
    .ok_or_else(|| CliError::parse(format!("{path}: expected a number or [re, im]")))
}

fn parse_poly(v: &Value, path: &str) -> Result<Polynomial, CliError> {
    let arr = v.as_array().ok_or_else(|| CliError::parse(format!("{path}: expected an array of coefficients")))?;
    if arr.is_empty() {
        return Err(CliError::parse(format!("{path}: empty coefficient array")));
    }
    let coeffs = arr
        .iter()
        .enumerate()
        .map(|(j, c)| parse_complex(c, &format!("{path}[{j}]")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Polynomial::new(coeffs))
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value, CliError> {
    obj.get(key).ok_or_else(|| CliError::parse(format!("{path}: missing field `{key}`")))
}

fn label_of(obj: &Map<String, Value>, path: &str) -> Result<Option<String>, CliError> {
    obj.get("label").map(|l| typed::<String>(l, &format!("{path}.label"))).transpose()
}

fn numeric(e: dwset::DwError, path: &str) -> CliError {
    CliError::parse(format!("{path}: {e}"))
}

fn parse_entry(v: &Value, path: &str) -> Result<Vec<(RationalMap, Option<String>)>, CliError> {
    let obj = v.as_object().ok_or_else(|| CliError::parse(format!("{path}: expected an object")))?;
    let Some(family) = obj.get("family") else {
        check_keys(obj, &["num", "den", "label"], path)?;
        let num = parse_poly(field(obj, "num", path)?, &format!("{path}.num"))?;
        let den = match obj.get("den") {
            Some(d) => parse_poly(d, &format!("{path}.den"))?,
            None => Polynomial::constant(Complex64::new(1.0, 0.0)),
        };
        let map = RationalMap::new(num, den).map_err(|e| numeric(e, path))?;
        return Ok(vec![(map, label_of(obj, path)?)]);
    };
    let family = family
        .as_str()
        .ok_or_else(|| CliError::parse(format!("{path}.family: expected a string")))?;
    match family {
        "blaschke_power" => {
            check_keys(obj, &["family", "k", "a", "label"], path)?;
            let k: usize = typed(field(obj, "k", path)?, &format!("{path}.k"))?;
            let a = parse_complex(field(obj, "a", path)?, &format!("{path}.a"))?;
            let params = BlaschkePowerParams::new(k, a).map_err(|e| numeric(e, path))?;
            let label = label_of(obj, path)?.unwrap_or_else(|| format!("blaschke_power(k={k})"));
            Ok(vec![(blaschke_power(&params).map_err(|e| numeric(e, path))?, Some(label))])
        }
        "monomial" => {
            check_keys(obj, &["family", "r"], path)?;
            let r: f64 = typed(field(obj, "r", path)?, &format!("{path}.r"))?;
            let params = MonomialFamilyParams::new(r).map_err(|e| numeric(e, path))?;
            let g = monomial_generators(&params).map_err(|e| numeric(e, path))?;
            Ok(g.gens().iter().cloned().zip(g.labels().iter().cloned()).collect())
        }
        "remark_sequence" => {
            check_keys(obj, &["family", "k_min", "k_max"], path)?;
            let k_min: usize = typed(field(obj, "k_min", path)?, &format!("{path}.k_min"))?;
            let k_max: usize = typed(field(obj, "k_max", path)?, &format!("{path}.k_max"))?;
            remark_sequence(k_min, k_max)
                .map_err(|e| numeric(e, path))?
                .iter()
                .map(|p| {
                    let f = blaschke_power(p).map_err(|e| numeric(e, path))?;
                    Ok((f, Some(format!("blaschke_power(k={})", p.k))))
                })
                .collect()
        }
        other => Err(CliError::parse(format!(
            "{path}.family: unknown family `{other}`, expected `blaschke_power`, `monomial` or `remark_sequence`"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficient_and_family_entries() {
        let spec = parse_spec(
            r#"{"generators": [
                {"num": [[0,0],[0,0],[1,0]], "den": [[1,0]]},
                {"num": [1, 0, 0, 2], "den": [2, 0, 0, 1], "label": "B"},
                {"family": "blaschke_power", "k": 3, "a": [0.5, 0]},
                {"family": "monomial", "r": 0.5},
                {"family": "remark_sequence", "k_min": 2, "k_max": 4}
            ]}"#,
        )
        .unwrap();
        assert_eq!(spec.gens.len(), 8);
        assert_eq!(spec.gens.labels()[1].as_deref(), Some("B"));
        assert_eq!(spec.settings, Settings::default());
    }

    #[test]
    fn errors_carry_locations() {
        let err = parse_spec(r#"{"generators": [{"num": [[0,0],[0,0],[1,0]]}, {"num": [[1,0]], "bogus": 1}]}"#)
            .unwrap_err()
            .to_string();
        assert!(err.starts_with("generators[1]: unknown field `bogus`"), "{err}");
        let err = parse_spec(r#"{"generators": [{"num": [[0,0],"x"]}]}"#).unwrap_err().to_string();
        assert!(err.starts_with("generators[0].num[1]"), "{err}");
        let err = parse_spec(r#"{"generators": [{"num": [0,0,1]}], "settings": {"budget": {"max_iters": 3}}}"#)
            .unwrap_err()
            .to_string();
        assert!(err.starts_with("settings.budget: unknown field `max_iters`"), "{err}");
        let err = parse_spec(r#"{"generators": [{"family": "bogus"}]}"#).unwrap_err().to_string();
        assert!(err.contains("unknown family"), "{err}");
        let err = parse_spec(r#"{"generators": [{"num": [0, 1]}]}"#).unwrap_err().to_string();
        assert!(err.contains("degree"), "{err}");
    }

    #[test]
    fn settings_block_overrides_defaults() {
        let spec = parse_spec(r#"{"generators": [{"num": [0,0,1]}], "settings": {"depth": 4, "budget": {"max_iter": 10}}}"#)
            .unwrap();
        assert_eq!(spec.settings.depth, 4);
        assert_eq!(spec.settings.budget.max_iter, 10);
        assert_eq!(spec.settings.budget.eps_step, 1e-10);
    }
}
