//! JSON run configuration for the command-line front end.
//!
//! Every block rejects unknown keys, so typos fail validation instead of
//! silently applying defaults. Each subcommand requires its own blocks and
//! ignores the rest; [`RunConfig::resolved_json`] echoes the effective
//! configuration (seed resolved) so that runs are reproducible from their
//! own output headers.

use serde::{Deserialize, Serialize};

use crate::density::{InversionConfig, QTransform};
use crate::error::{Error, Result};
use crate::futures_pricing::VolCurve;
use crate::indifference::McConfig;
use crate::model::{ModelParams, PayoffKind, PayoffSpec, Prior, ThetaAtom};
use crate::simulate::RngConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelCfg,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior: Option<PriorCfg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payoff: Option<PayoffCfg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateCfg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterCfg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub futures: Option<FuturesCfg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc: Option<McCfg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inversion: Option<InversionCfg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityCfg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cumulants: Option<CumulantsCfg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelCfg {
    pub f: f64,
    pub sigma: f64,
    pub r: f64,
    pub f0: f64,
    pub t1: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorCfg {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<AtomCfg>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridPriorCfg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dirac: Option<DiracCfg>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomCfg {
    pub theta0: f64,
    pub theta1: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridPriorCfg {
    pub theta0: [f64; 2],
    pub n0: usize,
    pub theta1: [f64; 2],
    pub n1: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiracCfg {
    pub theta0: f64,
    pub theta1: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayoffCfg {
    pub kind: PayoffKind,
    pub strike: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cap: Option<f64>,
    pub maturity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    Physical,
    RiskNeutral,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateCfg {
    pub measure: Measure,
    pub horizon: f64,
    pub n_steps: usize,
    pub n_paths: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterCfg {
    pub horizon: f64,
    pub n_steps: usize,
    /// Atom generating the observed path; drawn from the prior when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta1: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuturesCfg {
    /// Valuation times; one output row each.
    pub times: Vec<f64>,
    /// Futures level at the valuation times.
    pub f_t: f64,
    pub maturity: f64,
    pub vol: VolCfg,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolCfg {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McCfg {
    pub n_paths: usize,
    pub n_steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bump_y: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InversionCfg {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series_threshold: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityCfg {
    pub t: f64,
    pub y: AxisCfg,
    pub p: AxisCfg,
    pub q: AxisCfg,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transform: Option<QTransform>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisCfg {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CumulantsCfg {
    pub times: Vec<f64>,
    /// Append the long-time row; requires every prior speed to be positive.
    #[serde(default = "default_true")]
    pub asymptotic: bool,
}

fn default_true() -> bool {
    true
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::domain(format!("config: {e}")))
    }

    /// Effective configuration (seed resolved) as one JSON line.
    pub fn resolved_json(&self) -> String {
        serde_json::to_string(self).expect("config serialization cannot fail")
    }

    pub fn model(&self) -> Result<ModelParams> {
        let m = &self.model;
        ModelParams::new(m.f, m.sigma, m.r, m.f0, m.t1, m.gamma)
    }

    pub fn rng(&self) -> RngConfig {
        RngConfig::new(self.seed.unwrap_or(0))
    }

    pub fn prior(&self) -> Result<Prior> {
        let cfg = self.prior.as_ref().ok_or_else(|| Error::domain("missing `prior` block"))?;
        let forms = cfg.atoms.is_some() as u8 + cfg.grid.is_some() as u8 + cfg.dirac.is_some() as u8;
        if forms != 1 {
            return Err(Error::domain(
                "prior: specify exactly one of `atoms`, `grid`, `dirac`",
            ));
        }
        if let Some(atoms) = &cfg.atoms {
            let list = atoms
                .iter()
                .map(|a| Ok((ThetaAtom::new(a.theta0, a.theta1)?, a.weight)))
                .collect::<Result<Vec<_>>>()?;
            return Prior::from_atoms(list);
        }
        if let Some(grid) = &cfg.grid {
            return Prior::uniform_grid(
                (grid.theta0[0], grid.theta0[1]),
                grid.n0,
                (grid.theta1[0], grid.theta1[1]),
                grid.n1,
            );
        }
        let d = cfg.dirac.as_ref().unwrap();
        Ok(Prior::dirac(ThetaAtom::new(d.theta0, d.theta1)?))
    }

    pub fn payoff(&self) -> Result<(PayoffSpec, f64)> {
        let cfg = self.payoff.as_ref().ok_or_else(|| Error::domain("missing `payoff` block"))?;
        if !(cfg.maturity > 0.0) {
            return Err(Error::domain("payoff.maturity must be > 0"));
        }
        Ok((PayoffSpec::new(cfg.kind, cfg.strike, cfg.cap)?, cfg.maturity))
    }

    pub fn vol_curve(&self) -> Result<VolCurve> {
        let f = self.futures.as_ref().ok_or_else(|| Error::domain("missing `futures` block"))?;
        match (&f.vol.constant, &f.vol.times, &f.vol.values) {
            (Some(s), None, None) => VolCurve::constant(*s),
            (None, Some(times), Some(values)) => VolCurve::piecewise(times.clone(), values.clone()),
            _ => Err(Error::domain(
                "futures.vol: give either `constant` or both `times` and `values`",
            )),
        }
    }

    pub fn mc(&self) -> Result<McConfig> {
        let cfg = self.mc.as_ref().ok_or_else(|| Error::domain("missing `mc` block"))?;
        McConfig::new(cfg.n_paths, cfg.n_steps, self.rng(), cfg.bump_y.unwrap_or(0.01))
    }

    pub fn inversion(&self) -> Result<InversionConfig> {
        let mut inv = InversionConfig::default();
        if let Some(cfg) = &self.inversion {
            if let Some(n) = cfg.n_nodes {
                inv.n_nodes = n;
            }
            if let Some(th) = cfg.series_threshold {
                inv.series_threshold = th;
            }
        }
        inv.validate()?;
        Ok(inv)
    }
}

pub fn axis_points(axis: &AxisCfg, name: &str) -> Result<Vec<f64>> {
    if axis.n == 0 {
        return Err(Error::domain(format!("{name}.n must be >= 1")));
    }
    if axis.n > 1 && !(axis.max > axis.min) {
        return Err(Error::domain(format!("{name}: max must exceed min")));
    }
    Ok((0..axis.n)
        .map(|i| {
            if axis.n == 1 {
                axis.min
            } else {
                axis.min + (axis.max - axis.min) * i as f64 / (axis.n - 1) as f64
            }
        })
        .collect())
}
