use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::error::{AbcError, Result};
use crate::oracles::{
    approx_bayes_factor, gaussian_fitted_posterior_error, gaussian_prior_predictive_error,
    poisson_marginal_likelihood, poisson_mean_error, poisson_posterior_error, shifted_poisson_xi,
};

pub const ORACLE_NAMES: [&str; 8] = [
    "shifted-poisson-xi",
    "gaussian-prior-pred",
    "gaussian-fitted",
    "bayes-factor",
    "poisson-posterior-pmf",
    "poisson-marglik",
    "poisson-mean-error-curve",
    "marglik-curve",
];

/// Kernel scales swept by the curve oracles unless `tau` is given.
pub const CURVE_TAUS: [f64; 3] = [2.0 / 3.0, 2.0, f64::INFINITY];

/// Accepts plain numbers, `inf`, and fractions such as `2/3`.
pub fn parse_real(s: &str) -> Result<f64> {
    let s = s.trim();
    if matches!(s, "inf" | "infinity" | "Infinity") {
        return Ok(f64::INFINITY);
    }
    if let Some((a, b)) = s.split_once('/') {
        return Ok(parse_real(a)? / parse_real(b)?);
    }
    s.parse()
        .map_err(|_| AbcError::Input(format!("`{s}` is not a number")))
}

fn tau_json(t: f64) -> Value {
    if t.is_infinite() {
        json!("inf")
    } else {
        json!(t)
    }
}

struct Params(BTreeMap<String, String>);

impl Params {
    fn parse(args: &[String]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for a in args {
            let (k, v) = a.split_once('=').ok_or_else(|| {
                AbcError::Input(format!("parameter `{a}` is not of the form key=value"))
            })?;
            map.insert(k.trim().replace('-', "_"), v.trim().to_string());
        }
        Ok(Self(map))
    }

    fn real(&self, key: &str, default: Option<f64>) -> Result<f64> {
        match self.0.get(key) {
            Some(v) => parse_real(v).map_err(|e| AbcError::Input(format!("{key}: {e}"))),
            None => default.ok_or_else(|| AbcError::Input(format!("missing parameter `{key}`"))),
        }
    }

    fn count(&self, key: &str, default: Option<u64>) -> Result<u64> {
        match self.0.get(key) {
            Some(v) => v
                .parse()
                .map_err(|_| AbcError::Input(format!("{key}: `{v}` is not a nonnegative integer"))),
            None => default.ok_or_else(|| AbcError::Input(format!("missing parameter `{key}`"))),
        }
    }

    fn int(&self, key: &str) -> Result<i64> {
        let v = self
            .0
            .get(key)
            .ok_or_else(|| AbcError::Input(format!("missing parameter `{key}`")))?;
        v.parse()
            .map_err(|_| AbcError::Input(format!("{key}: `{v}` is not an integer")))
    }

    fn taus(&self) -> Result<Vec<f64>> {
        match self.0.get("tau") {
            Some(v) => v.split(',').map(parse_real).collect(),
            None => Ok(CURVE_TAUS.to_vec()),
        }
    }

    fn x0_range(&self) -> Result<(u64, u64)> {
        if self.0.contains_key("x0") {
            let x = self.count("x0", None)?;
            return Ok((x, x));
        }
        let lo = self.count("x0_min", Some(0))?;
        let hi = self.count("x0_max", Some(20))?;
        if hi < lo {
            return Err(AbcError::Input(format!("x0_max {hi} is below x0_min {lo}")));
        }
        Ok((lo, hi))
    }

    fn echo(&self) -> Value {
        json!(self.0)
    }
}

/// Tabulates `f(x0, τ)` over the requested x0 range and τ values.
fn curve(p: &Params, f: fn(u64, f64) -> Result<f64>) -> Result<Value> {
    let (lo, hi) = p.x0_range()?;
    let mut rows = Vec::new();
    for tau in p.taus()? {
        for x0 in lo..=hi {
            rows.push(json!({"tau": tau_json(tau), "x0": x0, "value": f(x0, tau)?}));
        }
    }
    Ok(Value::Array(rows))
}

/// Evaluates the named closed form; the result echoes the inputs.
pub fn cmd_oracle(name: &str, args: &[String]) -> Result<Value> {
    let p = Params::parse(args)?;
    let result = match name {
        "shifted-poisson-xi" => {
            let theta = p.real("theta", None)?;
            if !(theta > 0.0) {
                return Err(AbcError::Input(format!(
                    "theta must be positive, got {theta}"
                )));
            }
            json!(shifted_poisson_xi(
                theta,
                p.count("x0", None)?,
                p.int("eps")?
            ))
        }
        "gaussian-prior-pred" => json!(gaussian_prior_predictive_error(
            p.real("theta_star", Some(0.0))?,
            p.real("h2", None)?,
            p.real("x0", None)?
        )),
        "gaussian-fitted" => {
            let tau = match p.0.get("tau2") {
                Some(_) => p.real("tau2", None)?.sqrt(),
                None => p.real("tau", None)?,
            };
            json!(gaussian_fitted_posterior_error(
                p.real("theta_star", Some(0.0))?,
                p.real("h2", None)?,
                p.real("x0", None)?,
                tau
            )?)
        }
        "bayes-factor" => json!(approx_bayes_factor(
            p.real("x0", Some(0.0))?,
            p.real("theta_star", Some(0.0))?,
            p.real("h2", None)?,
            p.real("tau2", Some(1.0))?
        )?),
        "poisson-posterior-pmf" => {
            let pmf = poisson_posterior_error(p.count("x0", None)?, p.real("tau", None)?)?;
            json!({"support": pmf.support, "masses": pmf.masses, "mean": pmf.mean()})
        }
        "poisson-marglik" => json!(poisson_marginal_likelihood(
            p.count("x0", None)?,
            p.real("tau", None)?
        )?),
        "poisson-mean-error-curve" => curve(&p, poisson_mean_error)?,
        "marglik-curve" => curve(&p, poisson_marginal_likelihood)?,
        other => {
            return Err(AbcError::Input(format!(
                "unknown oracle `{other}`; known oracles: {}",
                ORACLE_NAMES.join(", ")
            )))
        }
    };
    Ok(json!({"oracle": name, "input": p.echo(), "result": result}))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(a: &[&str]) -> Vec<String> {
        a.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn examples() {
        let v = cmd_oracle("poisson-marglik", &args(&["x0=0", "tau=1"])).unwrap();
        assert!((v["result"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(v["input"]["x0"], "0");
        let b = cmd_oracle("bayes-factor", &args(&["h2=1e8"])).unwrap();
        assert!((b["result"].as_f64().unwrap() - 1.0).abs() < 1e-3);
        let c = cmd_oracle("poisson-mean-error-curve", &args(&["x0=1", "tau=inf"])).unwrap();
        assert_eq!(c["result"][0]["value"].as_f64().unwrap(), 0.0);
        let sweep = cmd_oracle("marglik-curve", &args(&[])).unwrap();
        assert_eq!(sweep["result"].as_array().unwrap().len(), 63);
    }

    #[test]
    fn bad_input() {
        assert!(cmd_oracle("nope", &[]).is_err());
        assert!(cmd_oracle("poisson-marglik", &args(&["x0=1"])).is_err());
        assert!(cmd_oracle("poisson-marglik", &args(&["x0", "tau=1"])).is_err());
        assert_eq!(parse_real("2/3").unwrap(), 2.0 / 3.0);
    }
}
