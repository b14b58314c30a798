//! One function per subcommand. Each resolves its settings, runs the
//! computation, prints the report and, with `--out`, writes artifacts.

use std::fmt::Write as _;
use std::path::PathBuf;

use flowlab::caloric::{caloric_extension, coordinate_span_rank, dim_pd};
use flowlab::flow::{run_flow, FlowControls, FlowKind, Scheme, StopReason};
use flowlab::gaussian::{entropy_with, gaussian_area, EntropyOptions};
use flowlab::geometry::io::{fmt_f64, read_polygon};
use flowlab::geometry::build_operators;
use flowlab::plateau::{solve_plateau, PlateauControls, Polygon};
use flowlab::shrinkers::{shrinker_residual, ShrinkerSpec};
use flowlab::variation::{default_eig_count, f_stability, truncated_gaussian_spectrum, volume_stability};
use serde_json::json;

use crate::output::{emit, lib, to_json, Artifacts, CliError};
use crate::settings::{load_mesh, Settings};
use crate::Common;

fn stop_name(r: StopReason) -> &'static str {
    match r {
        StopReason::Extinct => "extinct",
        StopReason::Blowup => "blowup",
        StopReason::Horizon => "horizon",
        StopReason::Quality => "quality",
    }
}

pub fn flow(common: &Common, kind: FlowKind) -> Result<(), CliError> {
    let command = match kind {
        FlowKind::Mcf => "flow",
        FlowKind::Rescaled => "rescale",
    };
    let mut s = Settings::load(common)?;
    let mesh = s.mesh()?;
    let seed = s.seed()?;
    let d = FlowControls::default();
    let scheme = match s.choice("scheme", &["semi_implicit", "explicit"], "semi_implicit")?.as_str() {
        "explicit" => Scheme::Explicit,
        _ => Scheme::SemiImplicit,
    };
    let controls = FlowControls {
        kind,
        scheme,
        horizon: s.f64("horizon", None, d.horizon)?,
        dt_max: s.f64("dt", common.dt, d.dt_max)?,
        max_steps: s.usize("steps", common.steps, d.max_steps)?,
        step_doubling: s.bool("step_doubling", d.step_doubling)?,
        resample: s.bool("resample", d.resample)?,
        snapshot_every: s.usize("snapshot_every", None, 100)?,
        quality_ratio: s.f64("quality_ratio", None, d.quality_ratio)?,
        blowup_threshold: s.f64("blowup_threshold", None, d.blowup_threshold)?,
        extinction_volume: s.f64("extinction_volume", None, d.extinction_volume)?,
    };
    if !(controls.dt_max > 0.0 && controls.horizon > 0.0) {
        return Err(CliError::Invalid("dt and horizon must be positive".into()));
    }
    let out = s.out_dir();
    let trace = run_flow(&mesh, &controls).map_err(lib)?;
    let last = trace.rows.last();
    let report = json!({
        "kind": trace.kind,
        "stop_reason": trace.stop_reason,
        "extinction_time": trace.extinction_time,
        "extinction_bound": trace.extinction_bound,
        "blowup_point": trace.blowup_point,
        "final_time": trace.final_state.time,
        "steps": trace.final_state.step_count,
        "final_volume": last.map(|r| r.volume),
        "final_F": last.map(|r| r.f),
        "final_shrinker_residual": last.map(|r| r.shrinker_residual),
        "seed": seed,
    });
    if let Some(dir) = out {
        let a = Artifacts::create(&dir)?;
        a.text("trace.csv", &trace.to_csv())?;
        for snap in &trace.snapshots {
            a.mesh(&format!("snapshots/{:04}.off", snap.step), &snap.mesh)?;
        }
        a.json("report.json", &report)?;
        a.manifest(command, &s, Some(stop_name(trace.stop_reason)))?;
    }
    emit(&to_json(&report));
    Ok(())
}

pub fn entropy(common: &Common) -> Result<(), CliError> {
    let mut s = Settings::load(common)?;
    let mesh = s.mesh()?;
    let seed = s.seed()?;
    let d = EntropyOptions::default();
    let opts = EntropyOptions {
        starts: s.usize("starts", common.starts, d.starts)?,
        seed,
        max_iterations: s.usize("steps", common.steps, d.max_iterations)?,
        ..d
    };
    let out = s.out_dir();
    let report = entropy_with(&mesh, &opts).map_err(lib)?;
    if let Some(dir) = out {
        let a = Artifacts::create(&dir)?;
        a.json("report.json", &report)?;
        a.manifest("entropy", &s, None)?;
    }
    emit(&to_json(&report));
    Ok(())
}

pub fn stability(common: &Common) -> Result<(), CliError> {
    let mut s = Settings::load(common)?;
    let mesh = s.mesh()?;
    s.seed()?;
    let operator = s.choice("operator", &["auto", "volume", "gaussian"], "auto")?;
    let k = s.usize("eigs", common.eigs, default_eig_count(&mesh))?;
    let out = s.out_dir();
    let ops = build_operators(&mesh).map_err(lib)?;
    let report = match operator.as_str() {
        "volume" => volume_stability(&mesh, &ops, k),
        "gaussian" if !mesh.is_closed() => truncated_gaussian_spectrum(&mesh, &ops, k),
        "gaussian" => f_stability(&mesh, &ops, k),
        _ if mesh.is_closed() => f_stability(&mesh, &ops, k),
        _ => volume_stability(&mesh, &ops, k),
    }
    .map_err(lib)?;
    if let Some(dir) = out {
        let a = Artifacts::create(&dir)?;
        a.json("report.json", &report)?;
        a.manifest("stability", &s, None)?;
    }
    emit(&to_json(&report));
    Ok(())
}

pub fn plateau(common: &Common, boundary: &[PathBuf]) -> Result<(), CliError> {
    let mut s = Settings::load(common)?;
    let mut polygons = Vec::with_capacity(boundary.len());
    for path in boundary {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Invalid(format!("cannot read boundary {}: {e}", path.display())))?;
        let (ambient, points) =
            read_polygon(&text).map_err(|e| CliError::Invalid(format!("boundary {}: {e}", path.display())))?;
        polygons.push(Polygon::new(ambient, points).map_err(lib)?);
    }
    s.record(
        "boundary",
        boundary.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    );
    let initial = match &common.mesh {
        Some(path) => {
            s.record("mesh", path.display().to_string());
            Some(load_mesh(path)?)
        }
        None => None,
    };
    let d = PlateauControls::default();
    let controls = PlateauControls {
        tol: s.f64("tol", common.tol, d.tol)?,
        max_iterations: s.usize("steps", common.steps, d.max_iterations)?,
        dt: s.f64("dt", common.dt, d.dt)?,
        rings: s.usize("rings", None, d.rings)?,
        quality_ratio: s.f64("quality_ratio", None, d.quality_ratio)?,
        eigs: s.usize("eigs", common.eigs, d.eigs)?,
        seed: s.seed()?,
    };
    let out = s.out_dir();
    let sol = solve_plateau(&polygons, initial.as_ref(), &controls).map_err(lib)?;
    let report = json!({
        "max_H": sol.max_h,
        "residual": sol.residual,
        "iterations": sol.iterations,
        "area": sol.areas.last(),
        "spectrum": sol.report,
    });
    if let Some(dir) = out {
        let a = Artifacts::create(&dir)?;
        let mut csv = String::from("iteration,area\n");
        for (i, area) in sol.areas.iter().enumerate() {
            let _ = writeln!(csv, "{i},{}", fmt_f64(*area));
        }
        a.text("trace.csv", &csv)?;
        a.mesh("film.off", &sol.mesh)?;
        a.json("report.json", &report)?;
        a.manifest("plateau", &s, Some("converged"))?;
    }
    emit(&to_json(&report));
    Ok(())
}

pub fn shrinker_verify(common: &Common, name: &str) -> Result<(), CliError> {
    let mut s = Settings::load(common)?;
    s.record("name", name);
    s.seed()?;
    let level = s.usize("level", None, 4)?;
    let out = s.out_dir();
    let spec = ShrinkerSpec::by_name(name).map_err(lib)?;
    let mesh = spec.catalog_mesh(level).map_err(lib)?;
    let f = gaussian_area(&mesh);
    let residual = shrinker_residual(&mesh).map_err(lib)?;
    let report = json!({
        "name": name,
        "family": spec.family,
        "level": level,
        "vertices": mesh.num_vertices(),
        "F": f,
        "expected_F": spec.expected_f,
        "relative_error": (f - spec.expected_f).abs() / spec.expected_f,
        "expected_radius": spec.expected_radius,
        "shrinker_residual": residual,
    });
    if let Some(dir) = out {
        let a = Artifacts::create(&dir)?;
        a.mesh("mesh.off", &mesh)?;
        a.json("report.json", &report)?;
        a.manifest("shrinker verify", &s, None)?;
    }
    emit(&to_json(&report));
    Ok(())
}

pub fn caloric_dim(common: &Common, n: usize, d: u32) -> Result<(), CliError> {
    if n == 0 {
        return Err(CliError::Invalid("n must be at least 1".into()));
    }
    let mut s = Settings::load(common)?;
    s.record("n", n);
    s.record("d", d);
    let out = s.out_dir();
    let dim = dim_pd(n, d);
    if let Some(dir) = out {
        let a = Artifacts::create(&dir)?;
        a.json("report.json", &json!({ "n": n, "d": d, "dim": dim }))?;
        a.manifest("caloric dim", &s, None)?;
    }
    emit(&dim.to_string());
    Ok(())
}

pub fn caloric_extend(common: &Common, exponents: &[u32]) -> Result<(), CliError> {
    let mut s = Settings::load(common)?;
    s.record("exponents", exponents.to_vec());
    let out = s.out_dir();
    let u = caloric_extension(exponents);
    if let Some(dir) = out {
        let a = Artifacts::create(&dir)?;
        let report = json!({
            "polynomial": u.to_string(),
            "degree": u.degree(),
            "caloric": u.is_caloric(),
            "terms": u.terms(),
        });
        a.json("report.json", &report)?;
        a.manifest("caloric extend", &s, None)?;
    }
    emit(&u.to_string());
    Ok(())
}

pub fn caloric_rank(common: &Common, meshes: &[PathBuf]) -> Result<(), CliError> {
    let mut s = Settings::load(common)?;
    s.record(
        "meshes",
        meshes.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    );
    let out = s.out_dir();
    let loaded = meshes.iter().map(|p| load_mesh(p)).collect::<Result<Vec<_>, _>>()?;
    let rank = coordinate_span_rank(&loaded).map_err(lib)?;
    if let Some(dir) = out {
        let a = Artifacts::create(&dir)?;
        a.json("report.json", &rank)?;
        a.manifest("caloric rank", &s, None)?;
    }
    emit(&to_json(&rank));
    Ok(())
}
