//! Mean-field Gaussian variational family.
//!
//! Parameters are unconstrained: a location vector and a raw (log) scale
//! vector, with the scale linked by sigma = exp(rho). The reparametrization
//! map z = mu + sigma .* x pushes the standard normal base distribution to
//! the family member, and is also provided as a tape builder so gradients
//! with respect to the parameters flow through downstream log-densities.

use serde::de::{SeqAccess, Visitor};
use serde::ser::SerializeTuple;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::difftape::{NodeId, Tape};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;
/// 0.5 * ln(2 * pi * e), the per-coordinate entropy of a unit Gaussian.
const HALF_LN_2PI_E: f64 = 1.418_938_533_204_672_7;

#[derive(Debug, Error)]
pub enum VarFamilyError {
    #[error("location and raw-scale vectors have different lengths: {loc} vs {raw}")]
    LengthMismatch { loc: usize, raw: usize },
    #[error("parameters must be finite")]
    NonFinite,
    #[error("dimension must be at least 1")]
    Empty,
}

/// Unconstrained mean-field Gaussian parameters (mu, rho), K = 2d in total.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalParams {
    loc: Vec<f64>,
    raw_scale: Vec<f64>,
}

impl VariationalParams {
    pub fn new(loc: Vec<f64>, raw_scale: Vec<f64>) -> Result<Self, VarFamilyError> {
        if loc.is_empty() {
            return Err(VarFamilyError::Empty);
        }
        if loc.len() != raw_scale.len() {
            return Err(VarFamilyError::LengthMismatch {
                loc: loc.len(),
                raw: raw_scale.len(),
            });
        }
        if loc.iter().chain(raw_scale.iter()).any(|v| !v.is_finite()) {
            return Err(VarFamilyError::NonFinite);
        }
        Ok(VariationalParams { loc, raw_scale })
    }

    /// Default initialization mu = 0, rho = -1 (sigma ~ 0.368).
    pub fn init_default(dim: usize) -> Self {
        VariationalParams {
            loc: vec![0.0; dim],
            raw_scale: vec![-1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.loc.len()
    }

    /// Number of free parameters, K = 2d.
    pub fn param_count(&self) -> usize {
        2 * self.loc.len()
    }

    pub fn loc(&self) -> &[f64] {
        &self.loc
    }

    pub fn raw_scale(&self) -> &[f64] {
        &self.raw_scale
    }

    /// sigma = exp(rho), componentwise.
    pub fn scale(&self) -> Vec<f64> {
        self.raw_scale.iter().map(|r| r.exp()).collect()
    }

    /// Flat parameter vector [loc..., raw_scale...], the optimizer layout.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.param_count());
        flat.extend_from_slice(&self.loc);
        flat.extend_from_slice(&self.raw_scale);
        flat
    }

    pub fn from_flat(dim: usize, flat: &[f64]) -> Result<Self, VarFamilyError> {
        if flat.len() != 2 * dim {
            return Err(VarFamilyError::LengthMismatch {
                loc: dim,
                raw: flat.len().saturating_sub(dim),
            });
        }
        VariationalParams::new(flat[..dim].to_vec(), flat[dim..].to_vec())
    }

    /// z = mu + exp(rho) .* x.
    ///
    /// Uses the arithmetic order `mu + sigma * x` per coordinate, matching
    /// both the tape builder and [`crate::grid::QuantizerGrid::shift_scale`]
    /// bit for bit.
    pub fn reparam(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim());
        (0..self.dim())
            .map(|k| self.loc[k] + self.raw_scale[k].exp() * x[k])
            .collect()
    }

    /// Mean-field Gaussian log-density at z.
    pub fn log_q(&self, z: &[f64]) -> f64 {
        debug_assert_eq!(z.len(), self.dim());
        let mut total = 0.0;
        for k in 0..self.dim() {
            let rho = self.raw_scale[k];
            let centered = z[k] - self.loc[k];
            total += -HALF_LN_2PI - rho - 0.5 * centered * centered * (-2.0 * rho).exp();
        }
        total
    }

    /// Closed-form entropy: sum_k (rho_k + 0.5 ln(2 pi e)).
    pub fn entropy(&self) -> f64 {
        self.raw_scale.iter().sum::<f64>() + self.dim() as f64 * HALF_LN_2PI_E
    }
}

/// Serializes as the two-array form [[loc...], [raw_scale...]] used inside
/// trace records.
impl Serialize for VariationalParams {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut tup = serializer.serialize_tuple(2)?;
        tup.serialize_element(&self.loc)?;
        tup.serialize_element(&self.raw_scale)?;
        tup.end()
    }
}

impl<'de> Deserialize<'de> for VariationalParams {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = VariationalParams;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a pair of arrays [loc, raw_scale]")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Self::Value, A::Error> {
                let loc: Vec<f64> = seq
                    .next_element()?
                    .ok_or_else(|| serde::de::Error::invalid_length(0, &self))?;
                let raw: Vec<f64> = seq
                    .next_element()?
                    .ok_or_else(|| serde::de::Error::invalid_length(1, &self))?;
                VariationalParams::new(loc, raw).map_err(serde::de::Error::custom)
            }
        }
        deserializer.deserialize_tuple(2, V)
    }
}

/// Tape nodes for the parameter vector in optimizer layout: slots 0..d are
/// the locations, slots d..2d the raw scales.
pub struct ParamNodes {
    pub loc: Vec<NodeId>,
    pub raw_scale: Vec<NodeId>,
}

/// Registers 2d variable slots on a fresh tape and returns their handles.
pub fn param_nodes(tape: &Tape, dim: usize) -> ParamNodes {
    debug_assert!(tape.input_count() >= 2 * dim);
    ParamNodes {
        loc: (0..dim).map(|k| tape.input(k)).collect(),
        raw_scale: (0..dim).map(|k| tape.input(dim + k)).collect(),
    }
}

/// Builds z = mu + exp(rho) .* x on the tape, so derivatives with respect
/// to both parameter blocks flow into whatever consumes z.
pub fn reparam_nodes(tape: &mut Tape, params: &ParamNodes, x: &[f64]) -> Vec<NodeId> {
    debug_assert_eq!(params.loc.len(), x.len());
    (0..x.len())
        .map(|k| {
            let sigma = tape.exp(params.raw_scale[k]);
            let xk = tape.constant(x[k]);
            let scaled = tape.mul(sigma, xk);
            tape.add(params.loc[k], scaled)
        })
        .collect()
}

/// Builds the mean-field Gaussian log-density of `z` on the tape. The `z`
/// handles may be reparametrized nodes (full pathwise dependence) or
/// constants (score-function use).
pub fn log_q_nodes(tape: &mut Tape, params: &ParamNodes, z: &[NodeId]) -> NodeId {
    debug_assert_eq!(params.loc.len(), z.len());
    let mut terms = Vec::with_capacity(z.len());
    for k in 0..z.len() {
        let centered = tape.sub(z[k], params.loc[k]);
        let sq = tape.square(centered);
        let neg2rho = tape.mul_const(params.raw_scale[k], -2.0);
        let prec = tape.exp(neg2rho);
        let quad = tape.mul(sq, prec);
        let half_quad = tape.mul_const(quad, 0.5);
        let with_rho = tape.add(params.raw_scale[k], half_quad);
        let full = tape.add_const(with_rho, HALF_LN_2PI);
        terms.push(tape.neg(full));
    }
    tape.sum(&terms)
}
