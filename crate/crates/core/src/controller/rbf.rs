//! Gaussian radial basis function networks with two inputs and one output.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Placement of the hidden-layer neurons shared by every network of a controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RbfLayout {
    pub neurons: usize,
    /// First center on the error-phase diagonal.
    pub center_start: [f64; 2],
    /// Last center on the error-phase diagonal.
    pub center_end: [f64; 2],
    pub width_min: f64,
    pub width_max: f64,
}

impl Default for RbfLayout {
    fn default() -> Self {
        Self { neurons: 5, center_start: [-2.0, -2.0], center_end: [2.0, 2.0], width_min: 1.0, width_max: 2.0 }
    }
}

impl RbfLayout {
    pub fn validate(&self) -> Result<()> {
        if self.neurons == 0 {
            return Err(Error::config("network.neurons must be at least 1"));
        }
        if !(self.width_min > 0.0 && self.width_max >= self.width_min && self.width_max.is_finite()) {
            return Err(Error::config("network widths must satisfy 0 < width_min <= width_max"));
        }
        if !self.center_start.iter().chain(&self.center_end).all(|c| c.is_finite()) {
            return Err(Error::config("network centers must be finite"));
        }
        Ok(())
    }

    /// Network with centers evenly spaced from `center_start` to `center_end`,
    /// widths evenly spaced over `[width_min, width_max]`, and zero weights.
    pub fn build(&self) -> RbfNetwork {
        let l = self.neurons;
        let frac = |k: usize| if l == 1 { 0.5 } else { k as f64 / (l - 1) as f64 };
        let centers = (0..l)
            .map(|k| {
                let s = frac(k);
                [
                    self.center_start[0] + s * (self.center_end[0] - self.center_start[0]),
                    self.center_start[1] + s * (self.center_end[1] - self.center_start[1]),
                ]
            })
            .collect();
        let widths = (0..l).map(|k| self.width_min + frac(k) * (self.width_max - self.width_min)).collect();
        RbfNetwork { centers, widths, weights: vec![0.0; l] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbfNetwork {
    pub centers: Vec<[f64; 2]>,
    pub widths: Vec<f64>,
    pub weights: Vec<f64>,
}

impl RbfNetwork {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }
}

/// Hidden-layer response `exp(−‖x − c_k‖² / 2b_k²)` for every neuron.
pub fn rbf_activation(x: [f64; 2], net: &RbfNetwork) -> Vec<f64> {
    net.centers
        .iter()
        .zip(&net.widths)
        .map(|(c, b)| {
            let d2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
            (-d2 / (2.0 * b * b)).exp()
        })
        .collect()
}

/// Network output `W̄ᵀ ħ(x)`.
pub fn nn_estimate(net: &RbfNetwork, x: [f64; 2]) -> f64 {
    rbf_activation(x, net).iter().zip(&net.weights).map(|(h, w)| h * w).sum()
}
