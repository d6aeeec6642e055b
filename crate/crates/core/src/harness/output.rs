//! CSV and text emission.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::integrator::StepRecord;

use super::diagnostics::LyapunovTerms;
use super::RunResult;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SCHEMA_FILE: &str = "trajectory_schema.csv";
pub const METRICS_FILE: &str = "metrics.toml";
pub const SCENARIO_FILE: &str = "scenario.toml";
pub const TRACKING_FILE: &str = "tracking_errors.csv";
pub const MASS_FILE: &str = "estimates_mass_nn_x.csv";
pub const INERTIA_FILE: &str = "estimates_inertia_nn_r.csv";
pub const DISTURBANCE_FILE: &str = "disturbances.csv";

/// One trajectory column: name, unit, description, extractor.
struct Column {
    name: String,
    unit: &'static str,
    description: String,
    get: Box<dyn Fn(&StepRecord, &LyapunovTerms) -> f64>,
}

fn col(
    name: impl Into<String>,
    unit: &'static str,
    description: impl Into<String>,
    get: impl Fn(&StepRecord, &LyapunovTerms) -> f64 + 'static,
) -> Column {
    Column { name: name.into(), unit, description: description.into(), get: Box::new(get) }
}

const AXES: [&str; 3] = ["x", "y", "z"];

fn vec_cols(
    out: &mut Vec<Column>,
    prefix: &str,
    unit: &'static str,
    description: &str,
    get: impl Fn(&StepRecord) -> crate::geometry::Vec3 + Clone + 'static,
) {
    for (j, axis) in AXES.iter().enumerate() {
        let g = get.clone();
        out.push(col(format!("{prefix}_{axis}"), unit, format!("{description}, {axis} component"), move |r, _| g(r)[j]));
    }
}

fn trajectory_columns(n: usize) -> Vec<Column> {
    let mut c = vec![col("t", "s", "time", |r, _| r.t)];
    vec_cols(&mut c, "x0", "m", "payload position", |r| r.state.x0);
    vec_cols(&mut c, "v0", "m/s", "payload velocity", |r| r.state.v0);
    vec_cols(&mut c, "omega0", "rad/s", "payload angular velocity (body)", |r| r.state.omega0);
    vec_cols(&mut c, "e_x", "m", "payload position error", |r| r.errors.e_x);
    vec_cols(&mut c, "e_v", "m/s", "payload velocity error", |r| r.errors.e_v);
    vec_cols(&mut c, "e_r", "1", "payload attitude error", |r| r.errors.e_r);
    vec_cols(&mut c, "e_omega", "rad/s", "payload angular velocity error", |r| r.errors.e_omega);
    c.push(col("psi_r", "1", "payload attitude error function", |r, _| r.errors.psi_r));
    vec_cols(&mut c, "mass_est", "kg", "payload mass estimate per axis", |r| r.estimates.mass);
    vec_cols(&mut c, "inertia_est", "kg m^2", "payload inertia estimate per axis", |r| r.estimates.inertia);
    vec_cols(&mut c, "phi_x_est", "m/s^2", "translational network output", |r| r.phi_x_est);
    vec_cols(&mut c, "phi_r_est", "rad/s^2", "rotational network output", |r| r.phi_r_est);
    vec_cols(&mut c, "dist_x0_est", "N", "payload force disturbance estimate", |r| r.estimates.payload_force);
    vec_cols(&mut c, "dist_r0_est", "N m", "payload moment disturbance estimate", |r| r.estimates.payload_moment);
    c.push(col("lyap_x", "1", "translational Lyapunov term", |_, v| v.v_x));
    c.push(col("lyap_r", "1", "rotational Lyapunov term", |_, v| v.v_r));
    c.push(col("lyap_q", "1", "cable Lyapunov term", |_, v| v.v_q));
    c.push(col("lyap_delta", "1", "disturbance estimation Lyapunov term", |_, v| v.v_delta));
    c.push(col("lyap_total", "1", "total Lyapunov function", |_, v| v.total));
    c.push(col("force_d_norm", "N", "norm of the desired payload force", |r, _| r.output.f_d.norm()));
    c.push(col("moment_d_norm", "N m", "norm of the desired payload moment", |r, _| r.output.m_d.norm()));
    for i in 0..n {
        c.push(col(format!("thrust_{i}"), "N", format!("quadrotor {i} thrust"), move |r, _| r.output.thrust[i]));
        c.push(col(format!("tension_{i}"), "N", format!("cable {i} realized tension norm"), move |r, _| {
            r.output.mu[i].norm()
        }));
        c.push(col(format!("u_perp_{i}_norm"), "N", format!("quadrotor {i} normal force norm"), move |r, _| {
            r.output.u_perp[i].norm()
        }));
        c.push(col(format!("psi_q_{i}"), "1", format!("cable {i} direction error function"), move |r, _| {
            r.cable_errors[i].psi_q
        }));
    }
    c
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, csv::Writer<fs::File>)> {
    let path = dir.join(name);
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    Ok((path, csv::Writer::from_writer(file)))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e.to_string()))
}

fn write_table(
    dir: &Path,
    name: &str,
    header: &[String],
    rows: impl Iterator<Item = Vec<f64>>,
) -> Result<PathBuf> {
    let (path, mut w) = create(dir, name)?;
    w.write_record(header).map_err(|e| csv_err(&path, e))?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(|e| csv_err(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn names(prefix: &[&str], per_axis: &[&str]) -> Vec<String> {
    let mut out: Vec<String> = prefix.iter().map(|s| s.to_string()).collect();
    for p in per_axis {
        out.extend(AXES.iter().map(|a| format!("{p}_{a}")));
    }
    out
}

/// Writes every output of one run into `dir`, creating it if needed.
pub fn write_outputs(run: &RunResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let records = &run.sim.records;
    let lyap = &run.lyapunov;
    let mut written = Vec::new();

    let cols = trajectory_columns(run.n);
    let header: Vec<String> = cols.iter().map(|c| c.name.clone()).collect();
    written.push(write_table(
        dir,
        TRAJECTORY_FILE,
        &header,
        records.iter().zip(lyap).map(|(r, v)| cols.iter().map(|c| (c.get)(r, v)).collect()),
    )?);

    let (path, mut w) = create(dir, SCHEMA_FILE)?;
    w.write_record(["index", "column", "unit", "description"]).map_err(|e| csv_err(&path, e))?;
    for (k, c) in cols.iter().enumerate() {
        w.write_record([k.to_string(), c.name.clone(), c.unit.to_string(), c.description.clone()])
            .map_err(|e| csv_err(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    written.push(path);

    let metrics = toml::to_string(&run.metrics).map_err(|e| Error::config(e.to_string()))?;
    written.push(write_text(dir, METRICS_FILE, &metrics)?);
    written.push(write_text(dir, SCENARIO_FILE, &run.scenario_toml)?);

    let v3 = |v: &crate::geometry::Vec3| [v.x, v.y, v.z];
    written.push(write_table(
        dir,
        TRACKING_FILE,
        &names(&["t", "e_x_norm", "e_r_norm", "e_omega_norm"], &["e_x", "e_r"]),
        records.iter().map(|r| {
            let e = &r.errors;
            let mut row = vec![r.t, e.e_x.norm(), e.e_r.norm(), e.e_omega.norm()];
            row.extend(v3(&e.e_x));
            row.extend(v3(&e.e_r));
            row
        }),
    )?);
    written.push(write_table(
        dir,
        MASS_FILE,
        &names(&["t"], &["mass_est", "phi_x_est"]),
        records.iter().map(|r| {
            let mut row = vec![r.t];
            row.extend(v3(&r.estimates.mass));
            row.extend(v3(&r.phi_x_est));
            row
        }),
    )?);
    written.push(write_table(
        dir,
        INERTIA_FILE,
        &names(&["t"], &["inertia_est", "phi_r_est"]),
        records.iter().map(|r| {
            let mut row = vec![r.t];
            row.extend(v3(&r.estimates.inertia));
            row.extend(v3(&r.phi_r_est));
            row
        }),
    )?);
    written.push(write_table(
        dir,
        DISTURBANCE_FILE,
        &names(&["t"], &["dist_x0", "dist_r0", "dist_x0_est", "dist_r0_est"]),
        records.iter().map(|r| {
            let d = &r.disturbance.sample;
            let mut row = vec![r.t];
            row.extend(v3(&d.dx0));
            row.extend(v3(&d.dr0));
            row.extend(v3(&r.estimates.payload_force));
            row.extend(v3(&r.estimates.payload_moment));
            row
        }),
    )?);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_names_unique() {
        let cols = trajectory_columns(3);
        let mut names: Vec<&str> = cols.iter().map(|c| c.name.as_str()).collect();
        let len = names.len();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), len);
        assert_eq!(cols[0].name, "t");
    }
}
