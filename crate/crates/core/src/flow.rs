//! Mean curvature flow and rescaled mean curvature flow: time stepping,
//! adaptive runs with stop detection, and parabolic rescaling of a run.

use serde::{Deserialize, Serialize};

use crate::gaussian::gaussian_area;
use crate::geometry::mesh::dot;
use crate::geometry::operators::{assemble_stiffness, lumped_mass};
use crate::geometry::{build_operators, resample_curve, GeometryError, SimplicialMesh, TangentFrames};
use crate::linalg::{EnvelopeCholesky, LinalgError};
use crate::shrinkers::shrinker_residual_from;

/// Safety factor in the explicit stability bound `dt ≤ CFL·(min edge)²`.
pub const CFL: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FlowError {
    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("explicit step {dt:e} exceeds the stability limit {limit:e}")]
    CflViolated { dt: f64, limit: f64 },
    #[error("dilation must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("time {time} is outside the recorded run [{start}, {end}]")]
    SliceOutOfRange { time: f64, start: f64, end: f64 },
    #[error("no snapshot pair brackets time {0} with matching connectivity")]
    SliceUnavailable(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowKind {
    /// `∂x/∂t = -H`.
    #[default]
    Mcf,
    /// `∂x/∂t = x^⊥/2 - H`.
    Rescaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Explicit,
    /// `(M - dt·K) x' = M x (+ dt·M x^⊥/2)`, operators frozen per step.
    #[default]
    SemiImplicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Extinct,
    Blowup,
    Horizon,
    Quality,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub mesh: SimplicialMesh,
    pub time: f64,
    pub step_count: usize,
}

impl FlowState {
    pub fn new(mesh: SimplicialMesh) -> Self {
        Self {
            mesh,
            time: 0.0,
            step_count: 0,
        }
    }
}

/// One step of mean curvature flow. Fixed vertices do not move.
pub fn step_mcf(state: &FlowState, dt: f64, scheme: Scheme) -> Result<FlowState, FlowError> {
    step(state, dt, scheme, FlowKind::Mcf)
}

/// One step of rescaled mean curvature flow.
pub fn step_rescaled(state: &FlowState, dt: f64, scheme: Scheme) -> Result<FlowState, FlowError> {
    step(state, dt, scheme, FlowKind::Rescaled)
}

pub fn step(state: &FlowState, dt: f64, scheme: Scheme, kind: FlowKind) -> Result<FlowState, FlowError> {
    let x = advance(&state.mesh, dt, scheme, kind)?;
    Ok(FlowState {
        mesh: state.mesh.with_positions(x)?,
        time: state.time + dt,
        step_count: state.step_count + 1,
    })
}

/// Largest stable explicit step for a mesh.
pub fn explicit_limit(mesh: &SimplicialMesh) -> f64 {
    CFL * mesh.min_edge().powi(2)
}

fn advance(mesh: &SimplicialMesh, dt: f64, scheme: Scheme, kind: FlowKind) -> Result<Vec<f64>, FlowError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(FlowError::NonPositiveStep(dt));
    }
    if scheme == Scheme::Explicit {
        let limit = explicit_limit(mesh);
        if dt > limit {
            return Err(FlowError::CflViolated { dt, limit });
        }
    }
    let big_n = mesh.ambient_dim();
    let nv = mesh.num_vertices();
    let k = assemble_stiffness(mesh, None);
    let m = lumped_mass(mesh);
    let x = mesh.vertices();
    // explicit source term x^⊥/2 of the rescaled flow
    let drift: Option<Vec<f64>> = (kind == FlowKind::Rescaled).then(|| {
        let frames = TangentFrames::new(mesh);
        (0..nv)
            .flat_map(|v| frames.normal_part(v, mesh.vertex(v)).into_iter().map(|c| 0.5 * c))
            .collect()
    });
    let fixed = mesh.fixed();
    let mut out = x.to_vec();
    match scheme {
        Scheme::Explicit => {
            let kx = k.mul_points(x, big_n);
            for v in (0..nv).filter(|&v| !fixed[v]) {
                for d in 0..big_n {
                    let i = v * big_n + d;
                    out[i] += dt * kx[i] / m[v];
                    if let Some(dr) = &drift {
                        out[i] += dt * dr[i];
                    }
                }
            }
        }
        Scheme::SemiImplicit => {
            let dofs = mesh.free_vertices();
            if dofs.is_empty() {
                return Ok(out);
            }
            let mut local = vec![usize::MAX; nv];
            for (l, &v) in dofs.iter().enumerate() {
                local[v] = l;
            }
            let a = k.scaled_plus_diagonal(-dt, &m).principal_submatrix(&dofs);
            let mut rhs = vec![0.0; dofs.len() * big_n];
            for (l, &v) in dofs.iter().enumerate() {
                for d in 0..big_n {
                    let i = v * big_n + d;
                    rhs[l * big_n + d] = m[v] * (x[i] + drift.as_ref().map_or(0.0, |dr| dt * dr[i]));
                }
                for (j, w) in k.row(v) {
                    if local[j] == usize::MAX {
                        for d in 0..big_n {
                            rhs[l * big_n + d] += dt * w * x[j * big_n + d];
                        }
                    }
                }
            }
            let sol = EnvelopeCholesky::factor(&a)?.solve_points(&rhs, big_n);
            for (l, &v) in dofs.iter().enumerate() {
                out[v * big_n..(v + 1) * big_n].copy_from_slice(&sol[l * big_n..(l + 1) * big_n]);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowControls {
    pub kind: FlowKind,
    pub scheme: Scheme,
    /// Final time.
    pub horizon: f64,
    /// Upper bound on the adaptive step `min(dt_max, 0.1/max|H|²)`.
    pub dt_max: f64,
    pub max_steps: usize,
    /// Richardson step doubling: combines one step of `dt` with two of
    /// `dt/2` for second order in time.
    pub step_doubling: bool,
    /// Resample curves every step to keep edge lengths near the initial
    /// mean edge, scaled with the current length.
    pub resample: bool,
    /// Keep a snapshot every this many steps (0 keeps only the first and last).
    pub snapshot_every: usize,
    /// Stop once `min_quality` falls below this fraction of its initial value.
    pub quality_ratio: f64,
    /// Blowup when `max|H|·diameter` exceeds this with volume not near zero.
    pub blowup_threshold: f64,
    /// Extinct once volume drops below this fraction of the initial volume.
    pub extinction_volume: f64,
}

impl Default for FlowControls {
    fn default() -> Self {
        Self {
            kind: FlowKind::Mcf,
            scheme: Scheme::SemiImplicit,
            horizon: 10.0,
            dt_max: 1e-3,
            max_steps: 1_000_000,
            step_doubling: true,
            resample: true,
            snapshot_every: 0,
            quality_ratio: 0.1,
            blowup_threshold: 1e3,
            extinction_volume: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub time: f64,
    pub volume: f64,
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "max_H")]
    pub max_h: f64,
    pub max_x: f64,
    pub shrinker_residual: f64,
    pub min_quality: f64,
    /// The curve was resampled when this row was recorded.
    pub resampled: bool,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub mesh: SimplicialMesh,
}

#[derive(Debug, Clone)]
pub struct FlowTrace {
    pub kind: FlowKind,
    pub rows: Vec<TraceRow>,
    pub stop_reason: StopReason,
    /// Extrapolated extinction time, when the run went extinct.
    pub extinction_time: Option<f64>,
    /// Mass-weighted centre of the top decile of |H| at blowup.
    pub blowup_point: Option<Vec<f64>>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: FlowState,
    /// `max|x₀|²/(2n)` of the initial mesh.
    pub extinction_bound: f64,
}

pub const TRACE_HEADER: &str = "time,volume,F,max_H,max_x,shrinker_residual,min_quality";

impl FlowTrace {
    /// CSV with the fixed header, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(TRACE_HEADER);
        s.push('\n');
        for r in &self.rows {
            let cols = [r.time, r.volume, r.f, r.max_h, r.max_x, r.shrinker_residual, r.min_quality];
            let line: Vec<String> = cols.iter().map(|&v| crate::geometry::io::fmt_f64(v)).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }
}

/// Runs a flow to its horizon or until a stop condition triggers. Failures
/// during the run become stop reasons.
pub fn run_flow(initial: &SimplicialMesh, controls: &FlowControls) -> Result<FlowTrace, FlowError> {
    if !(controls.dt_max > 0.0) {
        return Err(FlowError::NonPositiveStep(controls.dt_max));
    }
    let n = initial.dim() as f64;
    let v0 = initial.total_volume();
    let q0 = initial.min_quality();
    let edge0 = initial.mean_edge();
    let is_curve = initial.dim() == 1;
    let mut state = FlowState::new(initial.clone());
    let mut rows = Vec::new();
    let mut snapshots = vec![Snapshot {
        step: 0,
        time: 0.0,
        mesh: initial.clone(),
    }];
    let mut ops = build_operators(&state.mesh)?;
    rows.push(diagnostics(&state, &ops, false));
    let mut extinction_time = None;
    let mut blowup_point = None;

    let stop = loop {
        let row = *rows.last().unwrap();
        let diameter = state.mesh.extent();
        if row.volume < controls.extinction_volume * v0 || diameter < 2.0 * state.mesh.mean_edge() {
            extinction_time = Some(extrapolate_extinction(&rows));
            break StopReason::Extinct;
        }
        if row.max_h * diameter > controls.blowup_threshold && row.volume > 1e-3 * v0 {
            blowup_point = Some(blowup_location(&state.mesh, &ops));
            break StopReason::Blowup;
        }
        if row.min_quality < controls.quality_ratio * q0 {
            // a mesh that degenerates while nearly gone is extinct
            if row.volume < 1e-3 * v0 {
                extinction_time = Some(extrapolate_extinction(&rows));
                break StopReason::Extinct;
            }
            break StopReason::Quality;
        }
        if state.time >= controls.horizon * (1.0 - 1e-14) || state.step_count >= controls.max_steps {
            break StopReason::Horizon;
        }

        let mut dt = controls.dt_max.min(0.1 / row.max_h.powi(2)).min(controls.horizon - state.time);
        if controls.scheme == Scheme::Explicit {
            dt = dt.min(explicit_limit(&state.mesh));
        }
        let next = match accepted_step(&state, dt, controls) {
            Ok(s) => s,
            Err(FlowError::Geometry(GeometryError::DegenerateCell { .. })) | Err(FlowError::Linalg(_)) => {
                if row.volume < 1e-3 * v0 {
                    extinction_time = Some(extrapolate_extinction(&rows));
                    break StopReason::Extinct;
                }
                break StopReason::Quality;
            }
            Err(e) => return Err(e),
        };
        state = next;

        let mut resampled = false;
        if is_curve && controls.resample {
            let target = edge0 * state.mesh.total_volume() / v0;
            match resample_curve(&state.mesh, target) {
                Ok(r) => {
                    resampled = r != state.mesh;
                    state.mesh = r;
                }
                Err(GeometryError::ResolutionFloor { .. }) => {
                    extinction_time = Some(extrapolate_extinction(&rows));
                    break StopReason::Extinct;
                }
                Err(e) => return Err(e.into()),
            }
        }
        ops = match build_operators(&state.mesh) {
            Ok(o) => o,
            Err(_) => break StopReason::Quality,
        };
        rows.push(diagnostics(&state, &ops, resampled));
        if controls.snapshot_every > 0 && state.step_count % controls.snapshot_every == 0 {
            snapshots.push(Snapshot {
                step: state.step_count,
                time: state.time,
                mesh: state.mesh.clone(),
            });
        }
    };
    if snapshots.last().map(|s| s.step) != Some(state.step_count) {
        snapshots.push(Snapshot {
            step: state.step_count,
            time: state.time,
            mesh: state.mesh.clone(),
        });
    }
    Ok(FlowTrace {
        kind: controls.kind,
        rows,
        stop_reason: stop,
        extinction_time,
        blowup_point,
        snapshots,
        final_state: state,
        extinction_bound: initial.max_norm().powi(2) / (2.0 * n),
    })
}

fn accepted_step(state: &FlowState, dt: f64, c: &FlowControls) -> Result<FlowState, FlowError> {
    let full = step(state, dt, c.scheme, c.kind)?;
    if !c.step_doubling {
        return Ok(full);
    }
    let half = step(&step(state, 0.5 * dt, c.scheme, c.kind)?, 0.5 * dt, c.scheme, c.kind)?;
    let x: Vec<f64> = half
        .mesh
        .vertices()
        .iter()
        .zip(full.mesh.vertices())
        .map(|(h, f)| 2.0 * h - f)
        .collect();
    Ok(FlowState {
        mesh: state.mesh.with_positions(x)?,
        time: state.time + dt,
        step_count: state.step_count + 1,
    })
}

fn diagnostics(state: &FlowState, ops: &crate::geometry::GeometryOperators, resampled: bool) -> TraceRow {
    let mesh = &state.mesh;
    TraceRow {
        time: state.time,
        volume: mesh.total_volume(),
        f: gaussian_area(mesh),
        max_h: ops.max_h_interior(),
        max_x: mesh.max_norm(),
        shrinker_residual: shrinker_residual_from(mesh, ops, 2.0),
        min_quality: mesh.min_quality(),
        resampled,
    }
}

/// Quadratic extrapolation of the last three `(max|H|⁻², t)` pairs to
/// `max|H|⁻² = 0`, never earlier than the last recorded time.
fn extrapolate_extinction(rows: &[TraceRow]) -> f64 {
    let last = rows.last().unwrap().time;
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .rev()
        .filter(|r| r.max_h > 0.0)
        .take(3)
        .map(|r| (r.max_h.powi(-2), r.time))
        .collect();
    let t = match pts.as_slice() {
        [(s0, t0), (s1, t1), (s2, t2)] if s0 != s1 && s1 != s2 && s0 != s2 => {
            // Lagrange interpolation at s = 0
            t0 * (s1 * s2) / ((s0 - s1) * (s0 - s2))
                + t1 * (s0 * s2) / ((s1 - s0) * (s1 - s2))
                + t2 * (s0 * s1) / ((s2 - s0) * (s2 - s1))
        }
        [(s0, t0), (s1, t1), ..] if s0 != s1 => t0 - s0 * (t1 - t0) / (s1 - s0),
        _ => last,
    };
    if t.is_finite() {
        t.max(last)
    } else {
        last
    }
}

fn blowup_location(mesh: &SimplicialMesh, ops: &crate::geometry::GeometryOperators) -> Vec<f64> {
    let nv = mesh.num_vertices();
    let mut hs: Vec<(f64, usize)> = (0..nv)
        .filter(|&v| ops.interior()[v])
        .map(|v| (dot(ops.h(v), ops.h(v)).sqrt(), v))
        .collect();
    hs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let top = (hs.len() / 10).max(1);
    let mut p = vec![0.0; mesh.ambient_dim()];
    let mut w = 0.0;
    for &(_, v) in &hs[..top] {
        let m = ops.mass()[v];
        w += m;
        p.iter_mut().zip(mesh.vertex(v)).for_each(|(a, b)| *a += m * b);
    }
    p.iter_mut().for_each(|a| *a /= w);
    p
}

/// The slice at `t₀ - c⁻²` magnified about `x₀`: vertices `c·(x - x₀)`.
/// Slices between snapshots are interpolated linearly in time, which
/// needs both neighbours to share connectivity.
pub fn tangent_flow_rescale(trace: &FlowTrace, x0: &[f64], t0: f64, c: f64) -> Result<SimplicialMesh, FlowError> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(FlowError::NonPositiveScale(c));
    }
    let t = t0 - c.powi(-2);
    let slice = slice_at(trace, t)?;
    let shift: Vec<f64> = x0.iter().map(|x| -c * x).collect();
    Ok(slice.scaled_translated(c, &shift)?)
}

/// Mesh at time `t` of a recorded run.
pub fn slice_at(trace: &FlowTrace, t: f64) -> Result<SimplicialMesh, FlowError> {
    let snaps = &trace.snapshots;
    let (start, end) = (snaps[0].time, snaps.last().unwrap().time);
    if !(t >= start && t <= end) {
        return Err(FlowError::SliceOutOfRange { time: t, start, end });
    }
    let i = snaps.partition_point(|s| s.time <= t);
    if i == 0 {
        return Ok(snaps[0].mesh.clone());
    }
    let a = &snaps[i - 1];
    if a.time == t || i == snaps.len() {
        return Ok(a.mesh.clone());
    }
    let b = &snaps[i];
    if a.mesh.cells() != b.mesh.cells() || a.mesh.num_vertices() != b.mesh.num_vertices() {
        return Err(FlowError::SliceUnavailable(t));
    }
    let w = (t - a.time) / (b.time - a.time);
    let x = a
        .mesh
        .vertices()
        .iter()
        .zip(b.mesh.vertices())
        .map(|(p, q)| p + w * (q - p))
        .collect();
    Ok(a.mesh.with_positions(x)?)
}
