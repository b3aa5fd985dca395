//! Scenario files: a model, initial data and integration settings.

use std::path::Path;

use anyhow::{bail, Context};
use cgflow::cp2::CP2Constants;
use cgflow::flows::{acceleration_from_c, constraint_residuals, CGState, FlowKind, Initial, IntegratorConfig, LorentzState};
use cgflow::{ChartPoint, MetricModel};
use nalgebra::Vector4;
use serde::{Deserialize, Serialize};

/// Largest constraint violation accepted in scenario initial data.
pub const CONSTRAINT_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    pub model: MetricModel,
    #[serde(default)]
    pub initial: Option<InitialSpec>,
    #[serde(default = "default_span")]
    pub span: (f64, f64),
    #[serde(default)]
    pub integrator: IntegratorConfig,
    /// Threshold on constraint residuals and monitored invariant drift (exit code 2).
    #[serde(default = "default_drift")]
    pub drift_tolerance: f64,
    #[serde(default)]
    pub closed_form: Option<ClosedFormSpec>,
}

fn default_span() -> (f64, f64) {
    (0.0, 10.0)
}

fn default_drift() -> f64 {
    1e-6
}

/// Initial data. Vectors are chart components unless `frame` is set, in which
/// case they are orthonormal-frame components. A conformal run may give `c`
/// instead of `a` on hyper-Kähler models; `a` is then completed from the level set.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub flow: FlowKind,
    pub point: Vec<f64>,
    pub u: Vec<f64>,
    #[serde(default)]
    pub a: Option<Vec<f64>>,
    #[serde(default)]
    pub c: Option<[f64; 3]>,
    #[serde(default)]
    pub frame: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClosedFormSpec {
    /// Circle on `r = const` in CP²; `b` defaults to the branch `B = −3γr`.
    Cp2ConstR { r: f64, gamma: f64, c: [f64; 4], #[serde(default)] b: Option<f64> },
    /// Curve on an Eguchi–Hanson orbit with unit frame velocity `v0`.
    EhOrbit { alpha: f64, r: f64, c: [f64; 3], v0: [f64; 3] },
}

impl ClosedFormSpec {
    pub fn cp2_constants(&self) -> anyhow::Result<CP2Constants> {
        match *self {
            ClosedFormSpec::Cp2ConstR { r, gamma, c, b } => Ok(match b {
                Some(b) => CP2Constants::with_b(r, gamma, b, c)?,
                None => CP2Constants::new(r, gamma, c)?,
            }),
            _ => bail!("closed form is not a CP² circle"),
        }
    }
}

pub fn load(path: &Path) -> anyhow::Result<Scenario> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing scenario {}", path.display()))
}

fn to_chart(model: &MetricModel, q: &[f64; 4], v: &[f64]) -> cgflow::Result<Vec<f64>> {
    let l = model.local(q)?;
    Ok(l.from_frame(&Vector4::from_column_slice(v)).as_slice().to_vec())
}

impl Scenario {
    /// Resolve the initial data and check the constraints `g(u,u) = 1`, `g(u,a) = 0`.
    pub fn initial(&self) -> anyhow::Result<Initial> {
        let spec = self.initial.as_ref().context("scenario has no `initial` section")?;
        let n = self.model.dim();
        if spec.point.len() != n || spec.u.len() != n {
            bail!("{} needs {n} coordinates and {n} velocity components", self.model.name());
        }
        self.model.validate(&spec.point)?;
        let point = ChartPoint::new(self.model.chart(), spec.point.clone());
        let frame = spec.frame && n == 4;
        if spec.frame && n != 4 {
            bail!("frame components are only supported on four-dimensional models");
        }
        let q4 = || point.as4();
        let u = if frame { to_chart(&self.model, &q4(), &spec.u)? } else { spec.u.clone() };
        let init = match spec.flow {
            FlowKind::Geodesic => Initial::Geodesic { point, u },
            FlowKind::Lorentz => {
                let c = spec.c.context("a Lorentz run needs the level-set constants `c`")?;
                Initial::Lorentz(LorentzState { point, u, c })
            }
            FlowKind::Conformal => {
                let a = match (&spec.a, spec.c) {
                    (Some(a), None) => {
                        if a.len() != n {
                            bail!("acceleration needs {n} components");
                        }
                        if frame { to_chart(&self.model, &q4(), a)? } else { a.clone() }
                    }
                    (None, Some(c)) => acceleration_from_c(&self.model, &point, &u, &c)?,
                    (Some(_), Some(_)) => bail!("give either `a` or `c`, not both"),
                    (None, None) => bail!("a conformal run needs `a` (or `c` on hyper-Kähler models)"),
                };
                Initial::Conformal(CGState { point, u, a })
            }
        };
        let st = match &init {
            Initial::Conformal(s) => s.clone(),
            Initial::Lorentz(s) => CGState { point: s.point.clone(), u: s.u.clone(), a: vec![0.0; n] },
            Initial::Geodesic { point, u } => CGState { point: point.clone(), u: u.clone(), a: vec![0.0; n] },
        };
        let [norm, orth] = constraint_residuals(&self.model, &st);
        if norm.abs() > CONSTRAINT_TOL || orth.abs() > CONSTRAINT_TOL {
            bail!("initial data violates the constraints: g(u,u) − 1 = {norm:e}, g(u,a) = {orth:e}");
        }
        Ok(init)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_completes_the_acceleration() {
        let sc: Scenario = serde_json::from_str(
            r#"{"model": {"model": "flat4"},
                "initial": {"flow": "conformal", "point": [0,0,0,0], "u": [0,0,0,1], "c": [0,0,1]}}"#,
        )
        .unwrap();
        let Initial::Conformal(st) = sc.initial().unwrap() else { panic!() };
        assert_eq!(st.a, vec![0.0, 0.0, -1.0, 0.0]);
    }

    #[test]
    fn constraint_violations_are_rejected() {
        let sc: Scenario = serde_json::from_str(
            r#"{"model": {"model": "flat4"},
                "initial": {"flow": "conformal", "point": [0,0,0,0], "u": [0,0,0,1], "a": [0,0,0,1]}}"#,
        )
        .unwrap();
        assert!(sc.initial().is_err());
    }
}
