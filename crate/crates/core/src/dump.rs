//! Field dumps and diagnostic tables.
//!
//! A dump is a pair of files: `<stem>.bin` holding little-endian `f64`
//! samples in grid order (vector fields store all of component 1, then all of
//! component 2) and `<stem>.json` with `{n, box_length, kind}`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{ExperimentRecord, RecordStatus};
use crate::function_spaces::{Diffeo, ScalarField, VectorField2};
use crate::lagrangian::Diagnostics;
use crate::spectral::Grid2D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Scalar,
    Vector2,
    Diffeo,
}

impl FieldKind {
    fn components(self) -> usize {
        match self {
            FieldKind::Scalar => 1,
            FieldKind::Vector2 | FieldKind::Diffeo => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub n: usize,
    pub box_length: f64,
    pub kind: FieldKind,
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut name = stem.as_os_str().to_owned();
    name.push(".");
    name.push(ext);
    PathBuf::from(name)
}

fn write_raw(stem: &Path, grid: &Grid2D, kind: FieldKind, parts: &[&[f64]]) -> Result<()> {
    let mut bytes = Vec::with_capacity(8 * grid.len() * parts.len());
    for part in parts {
        for v in *part {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::File::create(with_ext(stem, "bin"))?.write_all(&bytes)?;
    let sidecar = Sidecar {
        n: grid.n(),
        box_length: grid.box_length(),
        kind,
    };
    fs::write(with_ext(stem, "json"), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

pub fn write_scalar(stem: &Path, field: &ScalarField) -> Result<()> {
    write_raw(stem, field.grid(), FieldKind::Scalar, &[field.values()])
}

pub fn write_vector(stem: &Path, field: &VectorField2) -> Result<()> {
    write_raw(
        stem,
        field.grid(),
        FieldKind::Vector2,
        &[field.c1().values(), field.c2().values()],
    )
}

/// Writes the displacement `phi - id`.
pub fn write_diffeo(stem: &Path, phi: &Diffeo) -> Result<()> {
    let d = phi.displacement();
    write_raw(
        stem,
        d.grid(),
        FieldKind::Diffeo,
        &[d.c1().values(), d.c2().values()],
    )
}

/// Reads a dump back as its sidecar and one sample vector per component.
pub fn read_dump(stem: &Path) -> Result<(Sidecar, Vec<Vec<f64>>)> {
    let sidecar: Sidecar = serde_json::from_str(&fs::read_to_string(with_ext(stem, "json"))?)?;
    let grid = Grid2D::new(sidecar.n, sidecar.box_length)?;
    let bytes = fs::read(with_ext(stem, "bin"))?;
    let count = grid.len() * sidecar.kind.components();
    if bytes.len() != 8 * count {
        return Err(Error::ShapeMismatch {
            expected: 8 * count,
            got: bytes.len(),
        });
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let parts = values.chunks(grid.len()).map(<[f64]>::to_vec).collect();
    Ok((sidecar, parts))
}

pub fn read_scalar(stem: &Path) -> Result<ScalarField> {
    let (sidecar, mut parts) = read_dump(stem)?;
    if sidecar.kind != FieldKind::Scalar {
        return Err(Error::InvalidConfig(format!(
            "{} holds a {:?} field, expected scalar",
            stem.display(),
            sidecar.kind
        )));
    }
    ScalarField::from_values(Grid2D::new(sidecar.n, sidecar.box_length)?, parts.remove(0))
}

pub fn read_vector(stem: &Path) -> Result<VectorField2> {
    let (sidecar, mut parts) = read_dump(stem)?;
    if sidecar.kind == FieldKind::Scalar {
        return Err(Error::InvalidConfig(format!(
            "{} holds a scalar field, expected a vector field",
            stem.display()
        )));
    }
    let grid = Grid2D::new(sidecar.n, sidecar.box_length)?;
    let c2 = parts.pop().expect("two components");
    let c1 = parts.pop().expect("two components");
    VectorField2::new(ScalarField::from_values(grid, c1)?, ScalarField::from_values(grid, c2)?)
}

/// Writes the trajectory table with columns
/// `t, div_l2, u_hs, theta_hs, min_det` followed by the remaining
/// diagnostics.
pub fn write_diagnostics_csv(path: &Path, rows: &[Diagnostics]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "t",
        "div_l2",
        "u_hs",
        "theta_hs",
        "min_det",
        "u_l2",
        "energy",
        "transport_residual",
        "split_residual",
        "max_displacement_gradient",
    ])?;
    for d in rows {
        w.write_record(
            [
                d.t,
                d.div_l2,
                d.u_hs,
                d.theta_hs,
                d.min_det,
                d.u_l2,
                d.energy,
                d.transport_residual,
                d.split_residual,
                d.max_displacement_gradient,
            ]
            .iter()
            .map(|v| format!("{v:e}")),
        )?;
    }
    w.flush()?;
    Ok(())
}

fn optional(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// Writes one row per record with columns `n, r_n, input_gap, output_gap,
/// separation, lower_bound_separation, ratio_min, ratio_max, status`;
/// missing measurements are left empty.
pub fn write_experiment_csv(path: &Path, records: &[ExperimentRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "n",
        "r_n",
        "input_gap",
        "output_gap",
        "separation",
        "lower_bound_separation",
        "ratio_min",
        "ratio_max",
        "status",
    ])?;
    for r in records {
        let status = match r.status {
            RecordStatus::Ok => "ok",
            RecordStatus::Unresolvable => "unresolvable",
            RecordStatus::SolverFailure => "solver_failure",
        };
        w.write_record([
            r.n.to_string(),
            format!("{:e}", r.r_n),
            optional(r.input_gap),
            optional(r.output_gap),
            optional(r.separation),
            format!("{:e}", r.lower_bound_separation),
            optional(r.ratio_min()),
            optional(r.ratio_max()),
            status.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
