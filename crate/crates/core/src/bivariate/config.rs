//! JSON model description.

use serde::{Deserialize, Serialize};

use crate::baseline::Baseline;
use crate::error::{Error, Result};
use crate::numerics::QuadratureSpec;

use super::{BivariateRbg, MMatrix};

/// Free entries of the strict submodel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrictConfig {
    pub m10: f64,
    pub m01: f64,
    pub m11: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub nodes: usize,
    pub tol: f64,
}

/// `{baseline_x, baseline_y, M | strict, quadrature}`; `M` is row-major and
/// its first entry is ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub baseline_x: Baseline,
    pub baseline_y: Baseline,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub m: Option<[f64; 9]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strict: Option<StrictConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureConfig>,
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(format!("invalid model file: {e}")))
    }

    pub fn matrix(&self) -> Result<MMatrix> {
        match (&self.m, &self.strict) {
            (Some(e), None) => Ok(MMatrix::from_entries(*e)),
            (None, Some(s)) => Ok(MMatrix::strict(s.m10, s.m01, s.m11)),
            (Some(_), Some(_)) => Err(Error::config("model file gives both M and strict")),
            (None, None) => Err(Error::config("model file needs either M or strict")),
        }
    }

    /// Quadrature rule, with `node_override` replacing the node count.
    pub fn quadrature_spec(&self, node_override: Option<usize>) -> Result<QuadratureSpec> {
        let mut spec = BivariateRbg::<Baseline>::default_quadrature();
        if let Some(q) = self.quadrature {
            spec.node_count = q.nodes;
            spec.abs_tol = q.tol;
            spec.rel_tol = q.tol;
        }
        if let Some(n) = node_override {
            spec.node_count = n;
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Builds the normalized model.
    pub fn build(&self, node_override: Option<usize>) -> Result<BivariateRbg> {
        BivariateRbg::new(self.baseline_x, self.baseline_y, self.matrix()?, self.quadrature_spec(node_override)?)
    }
}
