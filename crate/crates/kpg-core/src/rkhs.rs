//! Vector-valued RKHS primitives.
//!
//! The kernel is a diagonal Gaussian: every diagonal entry of the
//! matrix-valued kernel equals the same scalar
//! `exp(-(s-s')ᵀ Σ_H⁻¹ (s-s')/2)` and off-diagonal entries are zero, so the
//! kernel acts as that scalar times the identity on action space. All Gram
//! algebra therefore works with the shared scalar applied to whole weight
//! vectors; the p×p block structure is never materialized.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Kernel specification: state/action dimensions and the diagonal
/// bandwidth matrix Σ_H (stored as its n positive diagonal entries).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    state_dim: usize,
    action_dim: usize,
    bandwidth: Vec<f64>,
}

impl KernelSpec {
    pub fn new(state_dim: usize, action_dim: usize, bandwidth: Vec<f64>) -> Result<Self> {
        if state_dim == 0 || action_dim == 0 {
            return Err(Error::InvalidArgument(
                "state_dim and action_dim must be positive".into(),
            ));
        }
        if bandwidth.len() != state_dim {
            return Err(Error::DimensionMismatch {
                context: "kernel bandwidth",
                expected: state_dim,
                got: bandwidth.len(),
            });
        }
        if bandwidth.iter().any(|&b| !(b > 0.0) || !b.is_finite()) {
            return Err(Error::InvalidArgument(
                "kernel bandwidth entries must be finite and > 0".into(),
            ));
        }
        Ok(Self {
            state_dim,
            action_dim,
            bandwidth,
        })
    }

    /// Isotropic bandwidth: Σ_H = width · I.
    pub fn isotropic(state_dim: usize, action_dim: usize, width: f64) -> Result<Self> {
        Self::new(state_dim, action_dim, vec![width; state_dim])
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    /// Diagonal entries of Σ_H.
    pub fn bandwidth(&self) -> &[f64] {
        &self.bandwidth
    }

    fn check_state(&self, s: &[f64], context: &'static str) -> Result<()> {
        if s.len() != self.state_dim {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.state_dim,
                got: s.len(),
            });
        }
        Ok(())
    }
}

/// Scalar kernel value κ(s, s') = exp(-(s-s')ᵀ Σ_H⁻¹ (s-s')/2) ∈ (0, 1].
///
/// Symmetric in its arguments and equals 1 iff s = s'.
pub fn kernel_eval(spec: &KernelSpec, s: &[f64], s_other: &[f64]) -> Result<f64> {
    spec.check_state(s, "kernel_eval lhs")?;
    spec.check_state(s_other, "kernel_eval rhs")?;
    Ok(kernel_eval_unchecked(spec, s, s_other))
}

#[inline]
fn kernel_eval_unchecked(spec: &KernelSpec, s: &[f64], s_other: &[f64]) -> f64 {
    let mut quad = 0.0;
    for i in 0..spec.state_dim {
        let d = s[i] - s_other[i];
        quad += d * d / spec.bandwidth[i];
    }
    (-0.5 * quad).exp()
}

/// Gram matrix of kernel values between two center lists, |D₁| × |D₂|.
pub fn gram(spec: &KernelSpec, first: &[Vec<f64>], second: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(first.len(), second.len(), |i, j| {
        kernel_eval_unchecked(spec, &first[i], &second[j])
    })
}

/// A function h: S → R^p in the RKHS, represented by an ordered dictionary
/// of centers and one weight vector per center: h(s) = Σ_j κ(c_j, s) w_j.
///
/// Immutable after construction; every mutation produces a new value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FlatExpansion", into = "FlatExpansion")]
pub struct FunctionExpansion {
    spec: KernelSpec,
    centers: Vec<Vec<f64>>,
    weights: Vec<Vec<f64>>,
}

/// Wire schema: kernel spec fields flattened next to the dictionary.
#[derive(Serialize, Deserialize)]
struct FlatExpansion {
    state_dim: usize,
    action_dim: usize,
    bandwidth: Vec<f64>,
    centers: Vec<Vec<f64>>,
    weights: Vec<Vec<f64>>,
}

impl From<FunctionExpansion> for FlatExpansion {
    fn from(h: FunctionExpansion) -> Self {
        FlatExpansion {
            state_dim: h.spec.state_dim,
            action_dim: h.spec.action_dim,
            bandwidth: h.spec.bandwidth,
            centers: h.centers,
            weights: h.weights,
        }
    }
}

impl TryFrom<FlatExpansion> for FunctionExpansion {
    type Error = Error;

    fn try_from(raw: FlatExpansion) -> Result<Self> {
        let spec = KernelSpec::new(raw.state_dim, raw.action_dim, raw.bandwidth)?;
        FunctionExpansion::new(spec, raw.centers, raw.weights)
    }
}

impl FunctionExpansion {
    /// The zero function: empty dictionary.
    pub fn empty(spec: KernelSpec) -> Self {
        Self {
            spec,
            centers: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn new(spec: KernelSpec, centers: Vec<Vec<f64>>, weights: Vec<Vec<f64>>) -> Result<Self> {
        if centers.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                context: "expansion centers vs weights",
                expected: centers.len(),
                got: weights.len(),
            });
        }
        for c in &centers {
            spec.check_state(c, "expansion center")?;
        }
        for w in &weights {
            if w.len() != spec.action_dim {
                return Err(Error::DimensionMismatch {
                    context: "expansion weight",
                    expected: spec.action_dim,
                    got: w.len(),
                });
            }
        }
        Ok(Self {
            spec,
            centers,
            weights,
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    /// Number of dictionary elements M.
    pub fn model_order(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    /// h(s) = Σ_j κ(c_j, s) w_j ∈ R^p.
    pub fn evaluate(&self, s: &[f64]) -> Result<Vec<f64>> {
        self.spec.check_state(s, "evaluate")?;
        let mut out = vec![0.0; self.spec.action_dim];
        for (c, w) in self.centers.iter().zip(&self.weights) {
            let k = kernel_eval_unchecked(&self.spec, c, s);
            for (o, wi) in out.iter_mut().zip(w) {
                *o += k * wi;
            }
        }
        Ok(out)
    }

    /// New expansion with one extra dictionary element; model order grows
    /// by exactly one.
    pub fn append(&self, center: Vec<f64>, weight: Vec<f64>) -> Result<Self> {
        self.spec.check_state(&center, "append center")?;
        if weight.len() != self.spec.action_dim {
            return Err(Error::DimensionMismatch {
                context: "append weight",
                expected: self.spec.action_dim,
                got: weight.len(),
            });
        }
        let mut centers = self.centers.clone();
        let mut weights = self.weights.clone();
        centers.push(center);
        weights.push(weight);
        Ok(Self {
            spec: self.spec.clone(),
            centers,
            weights,
        })
    }

    /// ⟨h, g⟩_H = Σ_{j,l} κ(c_j, c'_l) w_jᵀ w'_l.
    pub fn inner_product(&self, other: &Self) -> Result<f64> {
        if self.spec != other.spec {
            return Err(Error::SpecMismatch("inner_product"));
        }
        let mut total = 0.0;
        for (c, w) in self.centers.iter().zip(&self.weights) {
            for (c2, w2) in other.centers.iter().zip(&other.weights) {
                let k = kernel_eval_unchecked(&self.spec, c, c2);
                let dot: f64 = w.iter().zip(w2).map(|(a, b)| a * b).sum();
                total += k * dot;
            }
        }
        Ok(total)
    }

    /// Squared RKHS norm wᵀ K_{D,D} w, clamped at zero against roundoff.
    pub fn norm_squared(&self) -> f64 {
        let raw = self.inner_product(self).expect("same spec");
        debug_assert!(raw >= -1e-9, "Gram quadratic form went negative: {raw}");
        raw.max(0.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Same function with every weight multiplied by `factor`.
    pub fn scale(&self, factor: f64) -> Self {
        let weights = self
            .weights
            .iter()
            .map(|w| w.iter().map(|x| factor * x).collect())
            .collect();
        Self {
            spec: self.spec.clone(),
            centers: self.centers.clone(),
            weights,
        }
    }

    /// Concatenates two expansions; represents the pointwise sum h + g.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.spec != other.spec {
            return Err(Error::SpecMismatch("concat"));
        }
        let mut centers = self.centers.clone();
        let mut weights = self.weights.clone();
        centers.extend(other.centers.iter().cloned());
        weights.extend(other.weights.iter().cloned());
        Ok(Self {
            spec: self.spec.clone(),
            centers,
            weights,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("expansion serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("expansion JSON: {e}")))
    }
}

/// RKHS distance ‖h − g‖_H, computed via Gram inner products and clamped
/// at zero.
pub fn distance(h: &FunctionExpansion, g: &FunctionExpansion) -> Result<f64> {
    let cross = h.inner_product(g)?;
    let d2 = h.norm_squared() + g.norm_squared() - 2.0 * cross;
    Ok(d2.max(0.0).sqrt())
}
