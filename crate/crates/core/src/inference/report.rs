//! Estimate files: a JSON document with the scalar results plus the factor
//! matrices in TRMX format next to it.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{Inference, InferenceSummary, SubspaceEstimate};
use crate::model::io::{read_matrix, write_matrix};
use crate::model::ProblemDims;
use crate::solver::SolverResult;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub lambda_reg: f64,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateDocument {
    pub dims: ProblemDims,
    pub lambda_hat: Vec<f64>,
    pub rank_estimated: bool,
    pub summary: InferenceSummary,
    /// Absent when the fit was supplied rather than computed.
    pub solver: Option<SolverDiagnostics>,
}

/// File locations inside an estimate directory.
#[derive(Clone, Debug)]
pub struct EstimatePaths {
    pub document: PathBuf,
    pub u_hat: PathBuf,
    pub v_hat: PathBuf,
    pub m_hat: PathBuf,
}

impl EstimatePaths {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            document: dir.join("estimate.json"),
            u_hat: dir.join("u_hat.trmx"),
            v_hat: dir.join("v_hat.trmx"),
            m_hat: dir.join("m_hat.trmx"),
        }
    }
}

impl SolverDiagnostics {
    pub fn new(result: &SolverResult, lambda_reg: f64) -> Self {
        Self {
            lambda_reg,
            iterations: result.iterations,
            converged: result.converged,
            objective: result.objective,
            primal_residual: result.primal_residual,
            dual_residual: result.dual_residual,
        }
    }
}

impl EstimateDocument {
    pub fn new(inf: &Inference, solver: Option<SolverDiagnostics>, rank_estimated: bool) -> Self {
        Self {
            dims: inf.estimate.dims,
            lambda_hat: inf.estimate.lambda_hat.clone(),
            rank_estimated,
            summary: inf.summary.clone(),
            solver,
        }
    }
}

pub fn write_estimate(
    dir: &Path,
    doc: &EstimateDocument,
    est: &SubspaceEstimate,
) -> Result<EstimatePaths> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = EstimatePaths::in_dir(dir);
    let text = serde_json::to_string_pretty(doc).expect("estimate document serializes");
    fs::write(&paths.document, text + "\n").map_err(|e| Error::io(&paths.document, e))?;
    write_matrix(&est.u_hat, &paths.u_hat)?;
    write_matrix(&est.v_hat, &paths.v_hat)?;
    write_matrix(&est.m_hat, &paths.m_hat)?;
    Ok(paths)
}

pub fn read_estimate(dir: &Path) -> Result<(EstimateDocument, SubspaceEstimate)> {
    let paths = EstimatePaths::in_dir(dir);
    let text = fs::read_to_string(&paths.document).map_err(|e| Error::io(&paths.document, e))?;
    let doc: EstimateDocument = serde_json::from_str(&text).map_err(|e| Error::Format {
        offset: 0,
        message: format!("{}: {e}", paths.document.display()),
    })?;
    let est = SubspaceEstimate {
        m_hat: read_matrix(&paths.m_hat)?,
        u_hat: read_matrix(&paths.u_hat)?,
        v_hat: read_matrix(&paths.v_hat)?,
        lambda_hat: doc.lambda_hat.clone(),
        dims: doc.dims,
    };
    let d = doc.dims;
    if est.u_hat.shape() != (d.m1, d.r)
        || est.v_hat.shape() != (d.m2, d.r)
        || est.m_hat.shape() != (d.m1, d.m2)
    {
        return Err(Error::dim(
            "estimate factor files do not match the recorded dims",
        ));
    }
    Ok((doc, est))
}
