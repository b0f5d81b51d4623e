//! Diffusion coefficient profiles and the change of variables that turns a
//! variable wave speed into a constant one.
//!
//! For a profile `λ(s) > 0` the local wave speed is `μ(s) = √λ(s)`. The travel
//! time map `φ(s) = ∫₀ˢ dr / μ(r)` is strictly increasing; on internal edges it
//! is normalised to `φ̄ = c̄ · φ` with `c̄ = 1 / φ(1)` so that `φ̄(1) = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::MetricGraph;

pub const DEFAULT_QUAD_PANELS: usize = 256;
const POSITIVITY_GRID: usize = 1024;
const INVERSE_TOL: f64 = 1e-12;

/// Where an edge profile lives: `[0, 1]` or `[0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Unit,
    HalfLine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientProfile {
    /// `λ(s) = value`.
    Constant { value: f64 },
    /// `μ(s) = alpha · (1 + beta·s)`, i.e. `λ(s) = alpha² (1 + beta·s)²`.
    QuadraticSquare { alpha: f64, beta: f64 },
    /// Samples of `λ` on a uniform grid over `[0, span]`, linearly
    /// interpolated and extended by the last value beyond `span`.
    Sampled { values: Vec<f64>, span: f64 },
}

impl CoefficientProfile {
    pub fn constant(value: f64) -> Self {
        Self::Constant { value }
    }

    /// Raw profile value, no domain checks.
    pub fn lambda(&self, s: f64) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::QuadraticSquare { alpha, beta } => {
                let mu = alpha * (1.0 + beta * s);
                mu * mu
            }
            Self::Sampled { values, span } => interp_uniform(values, *span, s),
        }
    }

    fn mu_raw(&self, s: f64) -> f64 {
        match self {
            Self::QuadraticSquare { alpha, beta } => (alpha * (1.0 + beta * s)).abs(),
            _ => self.lambda(s).sqrt(),
        }
    }

    /// The constant value of λ if the profile does not depend on `s`.
    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Self::Constant { value } => Some(*value),
            Self::QuadraticSquare { alpha, beta } if *beta == 0.0 => Some(alpha * alpha),
            Self::Sampled { values, .. } if values.windows(2).all(|w| w[0] == w[1]) => {
                values.first().copied()
            }
            _ => None,
        }
    }

    /// Positivity on `[0, 1]`.
    pub fn validate_internal(&self) -> Result<()> {
        match self {
            Self::Constant { value } if !(*value > 0.0 && value.is_finite()) => {
                return Err(Error::NonPositiveCoefficient(format!("constant λ = {value}")));
            }
            Self::QuadraticSquare { alpha, beta } if *alpha == 0.0 || 1.0 + beta <= 0.0 => {
                return Err(Error::NonPositiveCoefficient(format!(
                    "μ(s) = {alpha}(1 + {beta}s) vanishes on [0, 1]"
                )));
            }
            Self::Sampled { values, span } => {
                check_samples(values, *span)?;
                if let Some(v) = values.iter().find(|v| !(**v > 0.0)) {
                    return Err(Error::NonPositiveCoefficient(format!("sample λ = {v}")));
                }
            }
            _ => {}
        }
        for i in 0..=POSITIVITY_GRID {
            let s = i as f64 / POSITIVITY_GRID as f64;
            let l = self.lambda(s);
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::NonPositiveCoefficient(format!("λ({s}) = {l}")));
            }
        }
        Ok(())
    }

    /// `ε < λ(s) < 1/ε` on `[0, ∞)`. The grid check covers `[0, horizon]`.
    pub fn validate_external(&self, epsilon: f64, horizon: f64) -> Result<()> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidArgument(format!("epsilon = {epsilon} must lie in (0, 1)")));
        }
        let in_bounds = |l: f64| l > epsilon && l < 1.0 / epsilon;
        match self {
            Self::QuadraticSquare { beta, .. } if *beta != 0.0 => {
                return Err(Error::NonPositiveCoefficient(
                    "quadratic profile is unbounded on a half-line".into(),
                ));
            }
            Self::Sampled { values, span } => {
                check_samples(values, *span)?;
                if let Some(v) = values.iter().find(|v| !in_bounds(**v)) {
                    return Err(Error::NonPositiveCoefficient(format!(
                        "sample λ = {v} outside ({epsilon}, {})",
                        1.0 / epsilon
                    )));
                }
            }
            _ => {}
        }
        for i in 0..=POSITIVITY_GRID {
            let s = horizon * i as f64 / POSITIVITY_GRID as f64;
            let l = self.lambda(s);
            if !in_bounds(l) {
                return Err(Error::NonPositiveCoefficient(format!(
                    "λ({s}) = {l} outside ({epsilon}, {})",
                    1.0 / epsilon
                )));
            }
        }
        Ok(())
    }

    /// Largest finite-difference slope of λ between samples; `None` for
    /// closed-form profiles. Informational only.
    pub fn lipschitz_estimate(&self) -> Option<f64> {
        match self {
            Self::Sampled { values, span } if values.len() >= 2 => {
                let h = span / (values.len() - 1) as f64;
                Some(values.windows(2).map(|w| (w[1] - w[0]).abs() / h).fold(0.0, f64::max))
            }
            _ => None,
        }
    }
}

fn check_samples(values: &[f64], span: f64) -> Result<()> {
    if values.len() < 2 {
        return Err(Error::InvalidArgument("sampled profile needs at least 2 samples".into()));
    }
    if !(span > 0.0 && span.is_finite()) {
        return Err(Error::InvalidArgument(format!("sampled profile span {span} must be positive")));
    }
    Ok(())
}

/// Linear interpolation of samples on a uniform grid over `[0, span]`,
/// clamped to the end values outside the grid.
pub fn interp_uniform(values: &[f64], span: f64, x: f64) -> f64 {
    let n = values.len();
    if n == 1 {
        return values[0];
    }
    let h = span / (n - 1) as f64;
    if x <= 0.0 {
        return values[0];
    }
    if x >= span {
        return values[n - 1];
    }
    let pos = x / h;
    let i = (pos.floor() as usize).min(n - 2);
    let t = pos - i as f64;
    values[i] * (1.0 - t) + values[i + 1] * t
}

/// `μ(s) = √λ(s)` with the edge domain checked.
pub fn mu(profile: &CoefficientProfile, domain: Domain, s: f64) -> Result<f64> {
    let inside = s.is_finite() && s >= 0.0 && (domain == Domain::HalfLine || s <= 1.0);
    if !inside {
        return Err(Error::DomainError { s });
    }
    let l = profile.lambda(s);
    if !(l > 0.0) {
        return Err(Error::NonPositiveCoefficient(format!("λ({s}) = {l}")));
    }
    Ok(profile.mu_raw(s))
}

/// Per-edge diffusion profiles of a graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeCoefficients {
    pub internal: Vec<CoefficientProfile>,
    pub external: Vec<CoefficientProfile>,
    pub epsilon: f64,
}

impl EdgeCoefficients {
    /// Same constant λ on every edge.
    pub fn uniform(graph: &MetricGraph, lambda: f64) -> Self {
        Self {
            internal: vec![CoefficientProfile::constant(lambda); graph.m()],
            external: vec![CoefficientProfile::constant(lambda); graph.ell()],
            epsilon: (lambda.min(1.0 / lambda) * 0.5).min(0.5),
        }
    }

    pub fn validate(&self, graph: &MetricGraph) -> Result<()> {
        if self.internal.len() != graph.m() || self.external.len() != graph.ell() {
            return Err(Error::DimensionMismatch(format!(
                "{} internal / {} external profiles for a graph with m = {}, ℓ = {}",
                self.internal.len(),
                self.external.len(),
                graph.m(),
                graph.ell()
            )));
        }
        for p in &self.internal {
            p.validate_internal()?;
        }
        for p in &self.external {
            let horizon = match p {
                CoefficientProfile::Sampled { span, .. } => *span,
                _ => 1.0,
            };
            p.validate_external(self.epsilon, horizon)?;
        }
        Ok(())
    }

    /// `(μ^e(0), μ^i(0), μ^i(1))` in trace order.
    pub fn endpoint_mu(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.external.iter().map(|p| p.mu_raw(0.0)).collect();
        v.extend(self.internal.iter().map(|p| p.mu_raw(0.0)));
        v.extend(self.internal.iter().map(|p| p.mu_raw(1.0)));
        v
    }
}

/// Composite Simpson rule on `[a, b]` with a single panel.
fn simpson_panel(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
}

/// Tabulated travel-time map `s ↦ ∫₀ˢ dr/μ(r)` on `[0, length]`.
#[derive(Debug, Clone)]
struct TravelTime {
    profile: CoefficientProfile,
    length: f64,
    panel: f64,
    /// Cumulative integral at panel boundaries.
    table: Vec<f64>,
}

impl TravelTime {
    fn new(profile: &CoefficientProfile, length: f64, panels: usize) -> Self {
        let panel = length / panels as f64;
        let f = |r: f64| 1.0 / profile.mu_raw(r);
        let mut table = Vec::with_capacity(panels + 1);
        table.push(0.0);
        let mut acc = 0.0;
        for k in 0..panels {
            acc += simpson_panel(f, k as f64 * panel, (k + 1) as f64 * panel);
            table.push(acc);
        }
        Self { profile: profile.clone(), length, panel, table }
    }

    fn eval(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.length);
        let last = self.table.len() - 1;
        let k = ((s / self.panel).floor() as usize).min(last);
        let a = k as f64 * self.panel;
        if k == last || s == a {
            return self.table[k];
        }
        self.table[k] + simpson_panel(|r| 1.0 / self.profile.mu_raw(r), a, s)
    }

    fn total(&self) -> f64 {
        *self.table.last().expect("table is never empty")
    }

    /// Monotone bisection for `eval(s) = y`.
    fn invert(&self, y: f64) -> f64 {
        let y = y.clamp(0.0, self.total());
        // bracket via the table first
        let k = self.table.partition_point(|&v| v <= y).saturating_sub(1);
        let mut lo = k as f64 * self.panel;
        let mut hi = ((k + 1) as f64 * self.panel).min(self.length);
        while hi - lo > INVERSE_TOL {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// A strictly increasing map with an inverse, used for resampling.
pub trait MonotoneMap {
    /// Length of the source interval `[0, L]`.
    fn domain_end(&self) -> f64;
    fn forward(&self, s: f64) -> f64;
    fn inverse(&self, y: f64) -> f64;
    fn range_end(&self) -> f64 {
        self.forward(self.domain_end())
    }
}

/// Travel-time map of an internal edge.
#[derive(Debug, Clone)]
pub struct InternalTransform {
    tt: TravelTime,
    pub cbar: f64,
}

impl InternalTransform {
    pub fn phi(&self, s: f64) -> f64 {
        self.tt.eval(s)
    }

    pub fn phi_inv(&self, y: f64) -> f64 {
        self.tt.invert(y)
    }

    /// Normalised map `φ̄ = c̄ φ : [0, 1] → [0, 1]`.
    pub fn phibar(&self, s: f64) -> f64 {
        if s >= 1.0 {
            return 1.0;
        }
        self.cbar * self.phi(s)
    }

    pub fn phibar_inv(&self, y: f64) -> f64 {
        self.phi_inv(y / self.cbar)
    }

    pub fn phi_one(&self) -> f64 {
        self.tt.total()
    }
}

impl MonotoneMap for InternalTransform {
    fn domain_end(&self) -> f64 {
        1.0
    }
    fn forward(&self, s: f64) -> f64 {
        self.phi(s)
    }
    fn inverse(&self, y: f64) -> f64 {
        self.phi_inv(y)
    }
}

pub fn internal_transform(profile: &CoefficientProfile, quad_panels: usize) -> Result<InternalTransform> {
    if quad_panels < 2 {
        return Err(Error::InvalidArgument(format!("quad_panels = {quad_panels} < 2")));
    }
    profile.validate_internal()?;
    let tt = TravelTime::new(profile, 1.0, quad_panels);
    let cbar = 1.0 / tt.total();
    Ok(InternalTransform { tt, cbar })
}

/// Travel-time map of an external edge truncated to `[0, L]`.
#[derive(Debug, Clone)]
pub struct ExternalTransform {
    tt: TravelTime,
}

impl ExternalTransform {
    pub fn phi(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0 && s <= self.tt.length) {
            return Err(Error::DomainError { s });
        }
        Ok(self.tt.eval(s))
    }

    pub fn phi_inv(&self, y: f64) -> f64 {
        self.tt.invert(y)
    }

    pub fn length(&self) -> f64 {
        self.tt.length
    }
}

impl MonotoneMap for ExternalTransform {
    fn domain_end(&self) -> f64 {
        self.tt.length
    }
    fn forward(&self, s: f64) -> f64 {
        self.tt.eval(s)
    }
    fn inverse(&self, y: f64) -> f64 {
        self.tt.invert(y)
    }
}

pub fn external_transform(
    profile: &CoefficientProfile,
    epsilon: f64,
    length: f64,
    quad_panels: usize,
) -> Result<ExternalTransform> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::InvalidArgument(format!("truncation length {length} must be positive")));
    }
    if quad_panels < 2 {
        return Err(Error::InvalidArgument(format!("quad_panels = {quad_panels} < 2")));
    }
    profile.validate_external(epsilon, length)?;
    Ok(ExternalTransform { tt: TravelTime::new(profile, length, quad_panels) })
}

/// Samples of `f ∘ φ` on a uniform grid of `out_len` nodes over the source
/// interval, given samples of `f` on a uniform grid over the range of `φ`.
pub fn resample_pullback(map: &impl MonotoneMap, samples: &[f64], out_len: usize) -> Result<Vec<f64>> {
    check_resample(samples, out_len)?;
    let (l, r) = (map.domain_end(), map.range_end());
    Ok((0..out_len)
        .map(|i| {
            let s = l * i as f64 / (out_len - 1) as f64;
            interp_uniform(samples, r, map.forward(s))
        })
        .collect())
}

/// Samples of `g ∘ φ⁻¹` on a uniform grid over the range of `φ`, given samples
/// of `g` on a uniform grid over the source interval.
pub fn resample_pushforward(map: &impl MonotoneMap, samples: &[f64], out_len: usize) -> Result<Vec<f64>> {
    check_resample(samples, out_len)?;
    let (l, r) = (map.domain_end(), map.range_end());
    Ok((0..out_len)
        .map(|i| {
            let y = r * i as f64 / (out_len - 1) as f64;
            interp_uniform(samples, l, map.inverse(y))
        })
        .collect())
}

fn check_resample(samples: &[f64], out_len: usize) -> Result<()> {
    if samples.len() < 2 || out_len < 2 {
        return Err(Error::InvalidArgument("resampling needs at least 2 samples".into()));
    }
    Ok(())
}
