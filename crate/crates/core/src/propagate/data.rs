use serde::{Deserialize, Serialize};

use crate::coeffs::interp_uniform;
use crate::error::{Error, Result};
use crate::graph::MetricGraph;

/// Closed-form edge data in physical coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Descriptor {
    #[default]
    Zero,
    /// `amplitude · sin(kπs)`.
    SineMode { k: f64, amplitude: f64 },
    /// `amplitude · exp(−((s − center)/width)²)`.
    Gaussian { center: f64, width: f64, amplitude: f64 },
    /// Samples on a uniform grid over `[0, span]`, linearly interpolated.
    CustomSamples { values: Vec<f64>, span: f64 },
    /// Velocity only: `u₁ = μ u₀'`, a pulse moving towards `s = 0`.
    TravelLeft,
    /// Velocity only: `u₁ = −μ u₀'`, a pulse moving towards increasing `s`.
    TravelRight,
}

impl Descriptor {
    pub fn is_travel(&self) -> bool {
        matches!(self, Self::TravelLeft | Self::TravelRight)
    }

    fn travel_error() -> Error {
        Error::InvalidArgument("travel_left/travel_right only describe velocities".into())
    }

    pub fn value(&self, s: f64) -> Result<f64> {
        Ok(match self {
            Self::Zero => 0.0,
            Self::SineMode { k, amplitude } => amplitude * (k * std::f64::consts::PI * s).sin(),
            Self::Gaussian { center, width, amplitude } => {
                let z = (s - center) / width;
                amplitude * (-z * z).exp()
            }
            Self::CustomSamples { values, span } => interp_uniform(values, *span, s),
            Self::TravelLeft | Self::TravelRight => return Err(Self::travel_error()),
        })
    }

    pub fn derivative(&self, s: f64) -> Result<f64> {
        Ok(match self {
            Self::Zero => 0.0,
            Self::SineMode { k, amplitude } => {
                let w = k * std::f64::consts::PI;
                amplitude * w * (w * s).cos()
            }
            Self::Gaussian { center, width, amplitude } => {
                let z = (s - center) / width;
                -2.0 * z / width * amplitude * (-z * z).exp()
            }
            Self::CustomSamples { values, span } => interp_uniform(&sample_derivatives(values, *span), *span, s),
            Self::TravelLeft | Self::TravelRight => return Err(Self::travel_error()),
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Gaussian { width, .. } if !(*width > 0.0) => {
                Err(Error::InvalidArgument(format!("gaussian width {width} must be positive")))
            }
            Self::CustomSamples { values, span } if values.len() < 2 || !(*span > 0.0) => {
                Err(Error::InvalidArgument("custom samples need ≥ 2 values and a positive span".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Derivatives at the sample nodes: fourth-order central differences inside,
/// second-order one-sided ones near the ends.
fn sample_derivatives(values: &[f64], span: f64) -> Vec<f64> {
    let n = values.len();
    let h = span / (n - 1) as f64;
    if n == 2 {
        let d = (values[1] - values[0]) / h;
        return vec![d, d];
    }
    (0..n)
        .map(|i| {
            if i >= 2 && i + 2 < n {
                (values[i - 2] - 8.0 * values[i - 1] + 8.0 * values[i + 1] - values[i + 2]) / (12.0 * h)
            } else if i == 0 {
                (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h)
            } else if i == n - 1 {
                (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h)
            } else {
                (values[i + 1] - values[i - 1]) / (2.0 * h)
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct EdgeInitial {
    #[serde(default)]
    pub u0: Descriptor,
    #[serde(default)]
    pub u1: Descriptor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct InitialData {
    #[serde(default)]
    pub internal: Vec<EdgeInitial>,
    #[serde(default)]
    pub external: Vec<EdgeInitial>,
}

impl InitialData {
    pub fn zero(graph: &MetricGraph) -> Self {
        Self {
            internal: vec![EdgeInitial::default(); graph.m()],
            external: vec![EdgeInitial::default(); graph.ell()],
        }
    }

    /// Data for the edge at position `e` of the external-then-internal list.
    pub fn edge(&self, ell: usize, e: usize) -> &EdgeInitial {
        if e < ell {
            &self.external[e]
        } else {
            &self.internal[e - ell]
        }
    }

    pub fn validate(&self, graph: &MetricGraph) -> Result<()> {
        if self.internal.len() != graph.m() || self.external.len() != graph.ell() {
            return Err(Error::DimensionMismatch(format!(
                "initial data for {} internal / {} external edges, graph has m = {}, ℓ = {}",
                self.internal.len(),
                self.external.len(),
                graph.m(),
                graph.ell()
            )));
        }
        for e in self.internal.iter().chain(&self.external) {
            if e.u0.is_travel() {
                return Err(Descriptor::travel_error());
            }
            e.u0.validate()?;
            e.u1.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_derivatives() {
        let g = Descriptor::Gaussian { center: 0.4, width: 0.1, amplitude: 2.0 };
        let s = 0.43;
        let fd = (g.value(s + 1e-6).unwrap() - g.value(s - 1e-6).unwrap()) / 2e-6;
        assert!((g.derivative(s).unwrap() - fd).abs() < 1e-6);
        let m = Descriptor::SineMode { k: 1.0, amplitude: 1.0 };
        assert!((m.derivative(0.0).unwrap() - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn custom_derivative_is_fourth_order_inside() {
        let n = 41;
        let values: Vec<f64> = (0..n).map(|i| (i as f64 / 40.0).powi(3)).collect();
        let d = Descriptor::CustomSamples { values, span: 1.0 };
        // exact for cubics at interior sample nodes
        assert!((d.derivative(0.5).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn travel_rejected_as_displacement() {
        let g = MetricGraph::interval();
        let mut data = InitialData::zero(&g);
        data.internal[0].u0 = Descriptor::TravelLeft;
        assert!(data.validate(&g).is_err());
    }
}
