use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use graphevolve_core::coeffs::{external_transform, internal_transform, mu, DEFAULT_QUAD_PANELS};
use graphevolve_core::propagate::{heat_init, heat_run, wave_init, wave_run, RunOutput};
use graphevolve_core::wellposed::{self, check_nonlocal_interval, check_nonlocal_interval_auto};
use graphevolve_core::{BoundaryConditions, Domain, Evidence, HeatParams, Verdict, WaveParams, WellPosednessReport};
use serde::Serialize;

use crate::config::{Equation, RunConfig};

/// What a command concluded, mapped to the exit status by the binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    WellPosed,
    NotWellPosed,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Self::Done | Self::WellPosed => 0,
            Self::NotWellPosed => 2,
        }
    }
}

pub struct RunContext {
    pub output_dir: Option<PathBuf>,
    pub quiet: bool,
}

impl RunContext {
    fn say(&self, text: &str) {
        if !self.quiet {
            println!("{text}");
        }
    }

    /// `--output-dir`, then `sim.output`, then the working directory.
    fn out_dir(&self, cfg: &RunConfig) -> PathBuf {
        if let Some(d) = &self.output_dir {
            return d.clone();
        }
        match cfg.sim.as_ref().and_then(|s| s.output.as_ref()) {
            Some(d) => PathBuf::from(d),
            None => PathBuf::from("."),
        }
    }
}

pub fn load(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    crate::config::parse_config(&text).with_context(|| format!("invalid configuration {}", path.display()))
}

pub fn well_posedness(cfg: &RunConfig) -> Result<WellPosednessReport> {
    Ok(match &cfg.bc {
        BoundaryConditions::Matrices(m) => wellposed::check_boundary_matrices(m, &cfg.coeffs)?,
        BoundaryConditions::Spaces(s) => wellposed::check_boundary_spaces(s)?,
        BoundaryConditions::NonlocalInterval(n) => check_nonlocal_interval(&n.h0, &n.h1, n.t0, cfg.nonlocal_p)?,
    })
}

fn summary(report: &WellPosednessReport) -> String {
    let mut s = format!("verdict: {:?} ({:?} criterion)", report.verdict, report.criterion);
    match &report.evidence {
        Evidence::Determinant { det_re, det_im, sigma_min, sigma_max, .. } => {
            let _ = write!(s, "\ndet = {det_re} + {det_im}i, sigma_min = {sigma_min:.3e}, sigma_max = {sigma_max:.3e}");
        }
        Evidence::DirectSum { dim_y0, dim_y1, trace_len, rank_sum, .. } => {
            let _ = write!(s, "\ndim Y0 = {dim_y0}, dim Y1 = {dim_y1}, rank [Y0 Y1] = {rank_sum} of {trace_len}");
        }
        Evidence::NonlocalYoung { t0, bound, grid, sigma_min } => {
            let _ = write!(s, "\nt0 = {t0}, bound = {bound:.6}, sigma_min(R, n = {grid}) = {sigma_min:.4}");
        }
    }
    for n in &report.notes {
        let _ = write!(s, "\nnote: {n}");
    }
    s
}

#[derive(Serialize)]
struct CheckFile<'a> {
    bc_kind: &'a str,
    vertices: &'a [String],
    report: &'a WellPosednessReport,
}

fn verdict_outcome(report: &WellPosednessReport) -> Outcome {
    match report.verdict {
        Verdict::WellPosed => Outcome::WellPosed,
        Verdict::NotWellPosed | Verdict::Inconclusive => Outcome::NotWellPosed,
    }
}

fn write_report(ctx: &RunContext, cfg: &RunConfig, report: &WellPosednessReport) -> Result<PathBuf> {
    let dir = ctx.out_dir(cfg);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join("check_report.json");
    let file = CheckFile { bc_kind: &cfg.bc_kind, vertices: &cfg.vertex_names, report };
    fs::write(&path, serde_json::to_string_pretty(&file)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

pub fn cmd_check(ctx: &RunContext, cfg: &RunConfig) -> Result<Outcome> {
    let report = well_posedness(cfg)?;
    let path = write_report(ctx, cfg, &report)?;
    ctx.say(&summary(&report));
    ctx.say(&format!("wrote {}", path.display()));
    Ok(verdict_outcome(&report))
}

pub fn cmd_nonlocal_check(ctx: &RunContext, cfg: &RunConfig, auto_shrink: bool) -> Result<Outcome> {
    let BoundaryConditions::NonlocalInterval(n) = &cfg.bc else {
        bail!("nonlocal-check needs bc.kind = \"nonlocal_interval\", found \"{}\"", cfg.bc_kind);
    };
    let report = if auto_shrink {
        check_nonlocal_interval_auto(&n.h0, &n.h1, n.t0, cfg.nonlocal_p)?
    } else {
        check_nonlocal_interval(&n.h0, &n.h1, n.t0, cfg.nonlocal_p)?
    };
    let path = write_report(ctx, cfg, &report)?;
    ctx.say(&summary(&report));
    ctx.say(&format!("wrote {}", path.display()));
    Ok(verdict_outcome(&report))
}

fn solution_csv(run: &RunOutput) -> String {
    let with_ut = run.snapshots.first().is_some_and(|s| s.edges.iter().any(|e| e.ut.is_some()));
    let mut out = String::from(if with_ut { "t,edge_kind,edge_index,s,u,ut\n" } else { "t,edge_kind,edge_index,s,u\n" });
    for snap in &run.snapshots {
        for e in &snap.edges {
            for i in 0..e.s.len() {
                let _ = write!(out, "{:.16e},{},{},{:.16e},{:.16e}", snap.t, e.kind.tag(), e.index, e.s[i], e.u[i]);
                if let Some(ut) = &e.ut {
                    let _ = write!(out, ",{:.16e}", ut[i]);
                }
                out.push('\n');
            }
        }
    }
    out
}

fn diagnostics_csv(run: &RunOutput) -> String {
    let d = &run.diagnostics;
    let mut out = String::from("t,energy,mass\n");
    for i in 0..d.len() {
        let _ = writeln!(out, "{:.16e},{:.16e},{:.16e}", d.t[i], d.energy[i], d.mass[i]);
    }
    out
}

pub fn cmd_simulate(ctx: &RunContext, cfg: &RunConfig) -> Result<Outcome> {
    let Some(sim) = &cfg.sim else {
        bail!("simulate needs a [sim] section");
    };
    let Some(init) = &cfg.initial else {
        bail!("simulate needs an [initial] section");
    };
    if matches!(cfg.bc, BoundaryConditions::NonlocalInterval(_)) {
        bail!("integral boundary conditions can be checked but not simulated");
    }
    let report = well_posedness(cfg)?;
    if !report.is_well_posed() {
        ctx.say(&summary(&report));
        ctx.say("refusing to simulate: boundary conditions are not well-posed");
        return Ok(Outcome::NotWellPosed);
    }
    let run = match sim.equation {
        Equation::Wave => {
            let params = WaveParams {
                dt_target: sim.dt,
                t_final: sim.t_final,
                snap_tol: sim.snap_tol,
                external_lengths: cfg.external_lengths.clone(),
            };
            let mut state = wave_init(&cfg.graph, &cfg.coeffs, &cfg.bc, init, &params)?;
            ctx.say(&format!("wave: dt = {:.6e}, {} edges", state.dt, state.edges.len()));
            wave_run(&mut state, sim.t_final, sim.record_stride)?
        }
        Equation::Heat => {
            let params = HeatParams {
                dt: sim.dt,
                theta: sim.theta,
                n_per_edge: sim.n_per_edge,
                external_lengths: cfg.external_lengths.clone(),
            };
            let mut state = heat_init(&cfg.graph, &cfg.coeffs, &cfg.bc, init, &params)?;
            ctx.say(&format!("heat: dt = {:.6e}, theta = {}, {} unknowns", state.dt, sim.theta, state.u.len()));
            heat_run(&mut state, sim.t_final, sim.record_stride)?
        }
    };
    let dir = ctx.out_dir(cfg);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let sol = dir.join("solution.csv");
    let diag = dir.join("diagnostics.csv");
    fs::write(&sol, solution_csv(&run)).with_context(|| format!("writing {}", sol.display()))?;
    fs::write(&diag, diagnostics_csv(&run)).with_context(|| format!("writing {}", diag.display()))?;
    ctx.say(&format!("{} snapshots, wrote {} and {}", run.snapshots.len(), sol.display(), diag.display()));
    Ok(Outcome::Done)
}

/// Per-edge travel-time data as CSV.
pub fn transform_table(cfg: &RunConfig) -> Result<String> {
    let mut out = String::from("edge_kind,edge_index,phi_end,cbar,mu0,mu1\n");
    for (k, p) in cfg.coeffs.external.iter().enumerate() {
        let length = cfg.external_lengths[k];
        let t = external_transform(p, cfg.coeffs.epsilon, length, DEFAULT_QUAD_PANELS)?;
        let _ = writeln!(
            out,
            "e,{k},{:.16e},,{:.16e},{:.16e}",
            t.phi(length)?,
            mu(p, Domain::HalfLine, 0.0)?,
            mu(p, Domain::HalfLine, length)?
        );
    }
    for (j, p) in cfg.coeffs.internal.iter().enumerate() {
        let t = internal_transform(p, DEFAULT_QUAD_PANELS)?;
        let _ = writeln!(
            out,
            "i,{j},{:.16e},{:.16e},{:.16e},{:.16e}",
            t.phi_one(),
            t.cbar,
            mu(p, Domain::Unit, 0.0)?,
            mu(p, Domain::Unit, 1.0)?
        );
    }
    Ok(out)
}

pub fn cmd_transform(ctx: &RunContext, cfg: &RunConfig) -> Result<Outcome> {
    let table = transform_table(cfg)?;
    let dir = ctx.out_dir(cfg);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join("transform.csv");
    fs::write(&path, &table).with_context(|| format!("writing {}", path.display()))?;
    ctx.say(table.trim_end());
    ctx.say(&format!("wrote {}", path.display()));
    Ok(Outcome::Done)
}
