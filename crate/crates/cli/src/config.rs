//! TOML run configuration.
//!
//! ```toml
//! [graph]
//! vertices = ["c", "a", "b"]
//! internal = [["c", "a"], ["c", "b"]]      # (tail, head)
//! external = [{ at = "c", length = 6.0 }]  # half-lines truncated at `length`
//!
//! [coefficients]                            # optional, λ ≡ 1 by default
//! default = { kind = "constant", value = 1.0 }
//! internal = [{ kind = "quadratic_square", alpha = 1.0, beta = 1.0 }, ...]
//!
//! [bc]
//! kind = "boundary_matrices"                # see `BC_KINDS`
//! ...
//!
//! [sim]                                     # simulate only
//! [initial]                                 # simulate only
//! ```
//!
//! Matrices are arrays of rows; an entry is a number or a `[re, im]` pair.

use std::collections::BTreeMap;
use std::fmt;

use graphevolve_core::bc::{self, BoundaryConditions, BoundaryMatricesBC, BoundarySpacesBC, NonlocalIntervalBC};
use graphevolve_core::coeffs::{CoefficientProfile, EdgeCoefficients};
use graphevolve_core::propagate::InitialData;
use graphevolve_core::{CMat, Complex64, MetricGraph};
use serde::Deserialize;
use toml::{Table, Value};

pub const BC_KINDS: [&str; 8] = [
    "standard",
    "delta",
    "nonlocal_matrices",
    "matrix_mixed",
    "generalized_node",
    "boundary_matrices",
    "boundary_spaces",
    "nonlocal_interval",
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{path}: {message}")]
    Validation { path: String, message: String },
}

fn invalid(path: impl Into<String>, message: impl fmt::Display) -> ConfigError {
    ConfigError::Validation { path: path.into(), message: message.to_string() }
}

/// All problems found in a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    Wave,
    Heat,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub equation: Equation,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub dt: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_n")]
    pub n_per_edge: usize,
    #[serde(default = "default_snap")]
    pub snap_tol: f64,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    pub output: Option<String>,
}

fn default_theta() -> f64 {
    0.5
}
fn default_n() -> usize {
    100
}
fn default_snap() -> f64 {
    graphevolve_core::propagate::DEFAULT_SNAP_TOL
}
fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub vertex_names: Vec<String>,
    pub graph: MetricGraph,
    pub external_lengths: Vec<f64>,
    pub coeffs: EdgeCoefficients,
    pub bc_kind: String,
    pub bc: BoundaryConditions,
    /// Exponent `p` for integral conditions.
    pub nonlocal_p: f64,
    pub sim: Option<SimConfig>,
    pub initial: Option<InitialData>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    graph: Option<RawGraph>,
    coefficients: Option<RawCoefficients>,
    bc: Option<Table>,
    sim: Option<Value>,
    initial: Option<Value>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    vertices: Vec<String>,
    #[serde(default)]
    internal: Vec<(String, String)>,
    #[serde(default)]
    external: Vec<RawExternal>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExternal {
    at: String,
    length: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoefficients {
    epsilon: Option<f64>,
    default: Option<CoefficientProfile>,
    internal: Option<Vec<CoefficientProfile>>,
    external: Option<Vec<CoefficientProfile>>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start)).unwrap_or(0);
        ConfigErrors(vec![ConfigError::Parse { line, message: e.message().trim().to_string() }])
    })?;
    let mut errors = Vec::new();
    let Some(graph_raw) = raw.graph else {
        return Err(ConfigErrors(vec![invalid("graph", "section is required")]));
    };
    let (graph, names, lengths) = match build_graph(&graph_raw) {
        Ok(v) => v,
        Err(e) => return Err(ConfigErrors(e)),
    };
    let coeffs = match build_coefficients(raw.coefficients, &graph, &lengths) {
        Ok(c) => c,
        Err(e) => {
            errors.extend(e);
            EdgeCoefficients::uniform(&graph, 1.0)
        }
    };
    let bc = match raw.bc {
        None => {
            errors.push(invalid("bc", "section is required"));
            None
        }
        Some(t) => match build_bc(&t, &graph, &coeffs, &names) {
            Ok(v) => Some(v),
            Err(e) => {
                errors.push(e);
                None
            }
        },
    };
    let sim = match raw.sim {
        None => None,
        Some(v) => match v.try_into::<SimConfig>() {
            Ok(s) => {
                errors.extend(validate_sim(&s));
                Some(s)
            }
            Err(e) => {
                errors.push(invalid("sim", e.message().trim()));
                None
            }
        },
    };
    let initial = match raw.initial {
        None => None,
        Some(v) => match v.try_into::<InitialData>() {
            Ok(d) => {
                if let Err(e) = d.validate(&graph) {
                    errors.push(invalid("initial", e));
                }
                Some(d)
            }
            Err(e) => {
                errors.push(invalid("initial", e.message().trim()));
                None
            }
        },
    };
    match bc {
        Some((bc_kind, bc, nonlocal_p)) if errors.is_empty() => Ok(RunConfig {
            vertex_names: names,
            graph,
            external_lengths: lengths,
            coeffs,
            bc_kind,
            bc,
            nonlocal_p,
            sim,
            initial,
        }),
        _ => Err(ConfigErrors(errors)),
    }
}

fn validate_sim(s: &SimConfig) -> Vec<ConfigError> {
    let mut e = Vec::new();
    if !(s.t_final > 0.0 && s.t_final.is_finite()) {
        e.push(invalid("sim.T", "must be positive"));
    }
    if !(s.dt > 0.0 && s.dt.is_finite()) {
        e.push(invalid("sim.dt", "must be positive"));
    }
    if !(0.5..=1.0).contains(&s.theta) {
        e.push(invalid("sim.theta", "must lie in [0.5, 1]"));
    }
    if s.n_per_edge < 3 {
        e.push(invalid("sim.n_per_edge", "must be at least 3"));
    }
    if s.record_stride == 0 {
        e.push(invalid("sim.record_stride", "must be at least 1"));
    }
    e
}

fn build_graph(raw: &RawGraph) -> Result<(MetricGraph, Vec<String>, Vec<f64>), Vec<ConfigError>> {
    let mut errors = Vec::new();
    let mut index = BTreeMap::new();
    for (i, name) in raw.vertices.iter().enumerate() {
        if index.insert(name.clone(), i).is_some() {
            errors.push(invalid(format!("graph.vertices[{i}]"), format!("duplicate vertex name '{name}'")));
        }
    }
    let mut lookup = |path: String, name: &str| match index.get(name) {
        Some(&i) => i,
        None => {
            errors.push(invalid(path, format!("unknown vertex '{name}'")));
            0
        }
    };
    let internal: Vec<(usize, usize)> = raw
        .internal
        .iter()
        .enumerate()
        .map(|(j, (a, b))| (lookup(format!("graph.internal[{j}][0]"), a), lookup(format!("graph.internal[{j}][1]"), b)))
        .collect();
    let external: Vec<usize> =
        raw.external.iter().enumerate().map(|(k, e)| lookup(format!("graph.external[{k}].at"), &e.at)).collect();
    for (k, e) in raw.external.iter().enumerate() {
        if !(e.length > 0.0 && e.length.is_finite()) {
            errors.push(invalid(format!("graph.external[{k}].length"), "must be positive"));
        }
    }
    let graph = MetricGraph::new(raw.vertices.len(), internal, external);
    if errors.is_empty() {
        if let Err(e) = graph.validate() {
            errors.push(invalid("graph", e));
        }
    }
    if errors.is_empty() {
        Ok((graph, raw.vertices.clone(), raw.external.iter().map(|e| e.length).collect()))
    } else {
        Err(errors)
    }
}

/// `½ · min(λ, 1/λ)` over the external edges, capped at ½.
fn default_epsilon(external: &[CoefficientProfile], lengths: &[f64]) -> f64 {
    let mut eps: f64 = 0.5;
    for (p, l) in external.iter().zip(lengths) {
        for i in 0..=64 {
            let v = p.lambda(l * i as f64 / 64.0);
            if v > 0.0 {
                eps = eps.min(0.5 * v.min(1.0 / v));
            }
        }
    }
    eps
}

fn build_coefficients(
    raw: Option<RawCoefficients>,
    graph: &MetricGraph,
    lengths: &[f64],
) -> Result<EdgeCoefficients, Vec<ConfigError>> {
    let raw = raw.unwrap_or(RawCoefficients { epsilon: None, default: None, internal: None, external: None });
    let fallback = raw.default.unwrap_or(CoefficientProfile::constant(1.0));
    let internal = raw.internal.unwrap_or_else(|| vec![fallback.clone(); graph.m()]);
    let external = raw.external.unwrap_or_else(|| vec![fallback.clone(); graph.ell()]);
    let mut errors = Vec::new();
    if internal.len() != graph.m() {
        errors.push(invalid("coefficients.internal", format!("expected {} profiles, found {}", graph.m(), internal.len())));
    }
    if external.len() != graph.ell() {
        errors.push(invalid("coefficients.external", format!("expected {} profiles, found {}", graph.ell(), external.len())));
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    let epsilon = raw.epsilon.unwrap_or_else(|| default_epsilon(&external, lengths));
    let coeffs = EdgeCoefficients { internal, external, epsilon };
    coeffs.validate(graph).map_err(|e| vec![invalid("coefficients", e)])?;
    Ok(coeffs)
}

fn entry(v: &Value) -> Option<Complex64> {
    match v {
        Value::Float(x) => Some(Complex64::new(*x, 0.0)),
        Value::Integer(i) => Some(Complex64::new(*i as f64, 0.0)),
        Value::Array(a) if a.len() == 2 => {
            let re = entry(&a[0])?;
            let im = entry(&a[1])?;
            (re.im == 0.0 && im.im == 0.0).then(|| Complex64::new(re.re, im.re))
        }
        _ => None,
    }
}

fn real(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

/// Reads a `rows × cols` matrix; `rows = None` accepts any row count.
fn matrix(t: &Table, key: &str, rows: Option<usize>, cols: usize, required: bool) -> Result<CMat, ConfigError> {
    let path = format!("bc.{key}");
    let Some(v) = t.get(key) else {
        return match (required, rows) {
            (false, Some(r)) => Ok(CMat::zeros(r, cols)),
            _ => Err(invalid(path, "is required")),
        };
    };
    let Value::Array(row_values) = v else {
        return Err(invalid(path, "must be an array of rows"));
    };
    if let Some(r) = rows {
        if row_values.len() != r {
            return Err(invalid(path, format!("expected {r} rows, found {}", row_values.len())));
        }
    }
    let mut m = CMat::zeros(row_values.len(), cols);
    for (i, row) in row_values.iter().enumerate() {
        let Value::Array(entries) = row else {
            return Err(invalid(format!("{path}[{i}]"), "must be an array"));
        };
        if entries.len() != cols {
            return Err(invalid(format!("{path}[{i}]"), format!("expected {cols} entries, found {}", entries.len())));
        }
        for (j, e) in entries.iter().enumerate() {
            m[(i, j)] = entry(e).ok_or_else(|| invalid(format!("{path}[{i}][{j}]"), "must be a number or [re, im]"))?;
        }
    }
    Ok(m)
}

fn samples(t: &Table, key: &str) -> Result<Vec<f64>, ConfigError> {
    let path = format!("bc.{key}");
    let Some(Value::Array(a)) = t.get(key) else {
        return Err(invalid(path, "must be an array of samples"));
    };
    let v: Option<Vec<f64>> = a.iter().map(real).collect();
    match v {
        Some(v) if v.len() >= 2 => Ok(v),
        _ => Err(invalid(path, "needs at least two numeric samples")),
    }
}

fn number(t: &Table, key: &str, default: f64) -> Result<f64, ConfigError> {
    match t.get(key) {
        None => Ok(default),
        Some(v) => real(v).ok_or_else(|| invalid(format!("bc.{key}"), "must be a number")),
    }
}

fn check_keys(t: &Table, allowed: &[&str]) -> Result<(), ConfigError> {
    for k in t.keys() {
        if k != "kind" && !allowed.contains(&k.as_str()) {
            return Err(invalid(format!("bc.{k}"), "unknown key for this kind"));
        }
    }
    Ok(())
}

fn build_bc(
    t: &Table,
    graph: &MetricGraph,
    coeffs: &EdgeCoefficients,
    names: &[String],
) -> Result<(String, BoundaryConditions, f64), ConfigError> {
    let kind = match t.get("kind") {
        Some(Value::String(s)) => s.clone(),
        _ => return Err(invalid("bc.kind", "must be a string")),
    };
    let (l, m, n) = (graph.ell(), graph.m(), graph.trace_len());
    let core = |e: graphevolve_core::Error| invalid("bc", e);
    let spaces = |s: BoundarySpacesBC| BoundaryConditions::Spaces(s);
    let mut p = 2.0;
    let bc = match kind.as_str() {
        "standard" => {
            check_keys(t, &[])?;
            spaces(bc::from_standard(graph, coeffs).map_err(core)?)
        }
        "delta" => {
            check_keys(t, &["alpha"])?;
            let mut alpha = vec![Complex64::new(0.0, 0.0); graph.n];
            if let Some(v) = t.get("alpha") {
                let Value::Table(map) = v else {
                    return Err(invalid("bc.alpha", "must map vertex names to numbers"));
                };
                for (name, value) in map {
                    let i = names
                        .iter()
                        .position(|x| x == name)
                        .ok_or_else(|| invalid(format!("bc.alpha.{name}"), "unknown vertex"))?;
                    alpha[i] = entry(value).ok_or_else(|| invalid(format!("bc.alpha.{name}"), "must be a number or [re, im]"))?;
                }
            }
            spaces(bc::from_delta(graph, coeffs, &alpha).map_err(core)?)
        }
        "nonlocal_matrices" => {
            check_keys(t, &["me", "mi_minus", "mi_plus"])?;
            let me = matrix(t, "me", Some(l), l, false)?;
            let mi_minus = matrix(t, "mi_minus", Some(m), m, false)?;
            let mi_plus = matrix(t, "mi_plus", Some(m), m, false)?;
            spaces(bc::from_nonlocal_matrices(graph, coeffs, &me, &mi_minus, &mi_plus).map_err(core)?)
        }
        "matrix_mixed" => {
            check_keys(t, &["k"])?;
            let k = matrix(t, "k", Some(n), n, true)?;
            spaces(bc::from_matrix_mixed(graph, coeffs, &k).map_err(core)?)
        }
        "generalized_node" => {
            check_keys(t, &["y", "w"])?;
            let y = matrix(t, "y", Some(n), column_count(t, "y"), true)?;
            let d = y.ncols();
            let w = matrix(t, "w", Some(d), d, false)?;
            spaces(bc::from_generalized_node(graph, coeffs, &y, &w).map_err(core)?)
        }
        "boundary_matrices" => {
            check_keys(t, &["v0e", "v0i", "v1i", "w0e", "w0i", "w1i", "u0e", "u0i", "u1i"])?;
            let k0 = row_count(t, &["v0e", "v0i", "v1i"]);
            let k1 = row_count(t, &["w0e", "w0i", "w1i"]);
            if k0 + k1 != n {
                return Err(invalid("bc", format!("k0 + k1 = {} but ℓ + 2m = {n}", k0 + k1)));
            }
            let mats = BoundaryMatricesBC::new(
                matrix(t, "v0e", Some(k0), l, false)?,
                matrix(t, "v0i", Some(k0), m, false)?,
                matrix(t, "v1i", Some(k0), m, false)?,
                matrix(t, "w0e", Some(k1), l, false)?,
                matrix(t, "w0i", Some(k1), m, false)?,
                matrix(t, "w1i", Some(k1), m, false)?,
            )
            .map_err(core)?
            .with_u(
                matrix(t, "u0e", Some(k1), l, false)?,
                matrix(t, "u0i", Some(k1), m, false)?,
                matrix(t, "u1i", Some(k1), m, false)?,
            )
            .map_err(core)?;
            BoundaryConditions::Matrices(mats)
        }
        "boundary_spaces" => {
            check_keys(t, &["y0", "y1", "local_u"])?;
            let y0 = matrix(t, "y0", Some(n), column_count(t, "y0"), true)?;
            let y1 = matrix(t, "y1", Some(n), column_count(t, "y1"), true)?;
            let mut s = BoundarySpacesBC::new(l, m, y1, y0).map_err(core)?;
            if t.contains_key("local_u") {
                s.local_u = Some(matrix(t, "local_u", Some(n), n, true)?);
            }
            BoundaryConditions::Spaces(s)
        }
        "nonlocal_interval" => {
            check_keys(t, &["h0", "h1", "t0", "p"])?;
            if l != 0 || m != 1 {
                return Err(invalid("bc.kind", "nonlocal_interval needs a graph with one internal edge"));
            }
            p = number(t, "p", 2.0)?;
            let t0 = number(t, "t0", 0.25)?;
            BoundaryConditions::NonlocalInterval(NonlocalIntervalBC { h0: samples(t, "h0")?, h1: samples(t, "h1")?, t0 })
        }
        other => {
            return Err(invalid("bc.kind", format!("unknown kind '{other}', expected one of {}", BC_KINDS.join(", "))))
        }
    };
    Ok((kind, bc, p))
}

/// Rows of the first present matrix among `keys` (0 if none).
fn row_count(t: &Table, keys: &[&str]) -> usize {
    keys.iter()
        .find_map(|k| match t.get(*k) {
            Some(Value::Array(a)) => Some(a.len()),
            _ => None,
        })
        .unwrap_or(0)
}

/// Entries in the first row of a matrix (0 if empty).
fn column_count(t: &Table, key: &str) -> usize {
    match t.get(key) {
        Some(Value::Array(a)) => match a.first() {
            Some(Value::Array(r)) => r.len(),
            _ => 0,
        },
        _ => 0,
    }
}
