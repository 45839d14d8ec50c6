//! Finite-difference cross-check of the jet-based evaluation path.
//!
//! The jet evaluator propagates exact first and second derivatives through
//! expression trees. This module rebuilds the same per-point snapshot with
//! all derivatives replaced by central finite-difference stencils applied to
//! plain expression evaluation, then feeds the result through the *same*
//! assembly code ([`crate::geometry::assemble_frame`]). Comparing the two
//! paths on any derived quantity therefore isolates the differentiation
//! machinery, which is the part most likely to hide a sign or index error.
//!
//! Comparisons only ever *report* deviations; they never turn into check
//! verdicts. Stencils:
//! - first derivative: `(f(x + h e_k) - f(x - h e_k)) / 2h`;
//! - second derivative, repeated index:
//!   `(f(x + h e_k) - 2 f(x) + f(x - h e_k)) / h^2`;
//! - second derivative, mixed:
//!   `(f(++) - f(+-) - f(-+) + f(--)) / 4h^2`.

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::expr::ScalarExpr;
use crate::geometry::{
    assemble_frame, ConnectionSpec, EvaluatedConnection, EvaluatedInputs, ExprMatrix,
    ExprTensor3, FrameData, GeomError, ManifoldSpec, Mode,
};
use crate::tensor::{Tensor3, Tensor4};
use crate::weyl::{weyl_report, WeylError};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("the finite-difference oracle runs on chart-mode specs only")]
    ChartModeOnly,
    #[error("step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Weyl(#[from] WeylError),
}

fn eval_entry(what: &str, e: &ScalarExpr, point: &[f64]) -> Result<f64, GeomError> {
    e.eval(point).map_err(|source| GeomError::Eval {
        what: what.to_string(),
        point: point.to_vec(),
        source,
    })
}

fn eval_matrix(what: &str, m: &ExprMatrix, point: &[f64]) -> Result<DMatrix<f64>, GeomError> {
    let d = point.len();
    let mut out = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            out[(i, j)] = eval_entry(&format!("{what}({},{})", i + 1, j + 1), &m[i][j], point)?;
        }
    }
    Ok(out)
}

fn eval_tensor3(what: &str, t: &ExprTensor3, point: &[f64]) -> Result<Tensor3, GeomError> {
    let d = point.len();
    let mut out = Tensor3::zeros(d);
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                out.set(
                    i,
                    j,
                    k,
                    eval_entry(
                        &format!("{what}({},{},{})", i + 1, j + 1, k + 1),
                        &t[i][j][k],
                        point,
                    )?,
                );
            }
        }
    }
    Ok(out)
}

fn shifted(point: &[f64], k: usize, delta: f64) -> Vec<f64> {
    let mut p = point.to_vec();
    p[k] += delta;
    p
}

fn shifted2(point: &[f64], k: usize, dk: f64, l: usize, dl: f64) -> Vec<f64> {
    let mut p = point.to_vec();
    p[k] += dk;
    p[l] += dl;
    p
}

/// Value, gradient, and Hessian of a matrix of expressions by stencils.
fn matrix_fd(
    what: &str,
    m: &ExprMatrix,
    point: &[f64],
    h: f64,
) -> Result<(DMatrix<f64>, Tensor3, Tensor4), GeomError> {
    let d = point.len();
    let value = eval_matrix(what, m, point)?;
    let mut plus = Vec::with_capacity(d);
    let mut minus = Vec::with_capacity(d);
    for k in 0..d {
        plus.push(eval_matrix(what, m, &shifted(point, k, h))?);
        minus.push(eval_matrix(what, m, &shifted(point, k, -h))?);
    }
    let mut d1 = Tensor3::zeros(d);
    let mut d2 = Tensor4::zeros(d);
    for k in 0..d {
        for i in 0..d {
            for j in 0..d {
                d1.set(k, i, j, (plus[k][(i, j)] - minus[k][(i, j)]) / (2.0 * h));
                d2.set(
                    k,
                    k,
                    i,
                    j,
                    (plus[k][(i, j)] - 2.0 * value[(i, j)] + minus[k][(i, j)]) / (h * h),
                );
            }
        }
    }
    for k in 0..d {
        for l in (k + 1)..d {
            let pp = eval_matrix(what, m, &shifted2(point, k, h, l, h))?;
            let pm = eval_matrix(what, m, &shifted2(point, k, h, l, -h))?;
            let mp = eval_matrix(what, m, &shifted2(point, k, -h, l, h))?;
            let mm = eval_matrix(what, m, &shifted2(point, k, -h, l, -h))?;
            for i in 0..d {
                for j in 0..d {
                    let mixed = (pp[(i, j)] - pm[(i, j)] - mp[(i, j)] + mm[(i, j)])
                        / (4.0 * h * h);
                    d2.set(k, l, i, j, mixed);
                    d2.set(l, k, i, j, mixed);
                }
            }
        }
    }
    Ok((value, d1, d2))
}

/// Value and gradient of a rank-3 array of expressions by stencils.
fn tensor3_fd(
    what: &str,
    t: &ExprTensor3,
    point: &[f64],
    h: f64,
) -> Result<(Tensor3, Tensor4), GeomError> {
    let d = point.len();
    let value = eval_tensor3(what, t, point)?;
    let mut d1 = Tensor4::zeros(d);
    for k in 0..d {
        let plus = eval_tensor3(what, t, &shifted(point, k, h))?;
        let minus = eval_tensor3(what, t, &shifted(point, k, -h))?;
        for i in 0..d {
            for j in 0..d {
                for kk in 0..d {
                    d1.set(
                        k,
                        i,
                        j,
                        kk,
                        (plus.get(i, j, kk) - minus.get(i, j, kk)) / (2.0 * h),
                    );
                }
            }
        }
    }
    Ok((value, d1))
}

/// Build the per-point snapshot with every derivative sourced from central
/// finite differences of plain expression evaluation.
pub fn fd_frame_at(
    spec: &ManifoldSpec,
    point: &[f64],
    step: f64,
) -> Result<FrameData, OracleError> {
    if spec.mode != Mode::Chart {
        return Err(OracleError::ChartModeOnly);
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(OracleError::BadStep(step));
    }
    let (g, dg, d2g) = matrix_fd("g", &spec.g, point, step)?;
    let mut js = Vec::with_capacity(3);
    for (a, m) in spec.j.iter().enumerate() {
        let name = ["J1", "J2", "J3"][a];
        js.push(matrix_fd(name, m, point, step)?);
    }
    let (j2, dj2, d2j2) = js.remove(2);
    let (j1, dj1, d2j1) = js.remove(1);
    let (j0, dj0, d2j0) = js.remove(0);
    let conn = match &spec.connection {
        ConnectionSpec::LeviCivita => EvaluatedConnection::LeviCivita,
        ConnectionSpec::Explicit { gamma } => {
            let (v, d1) = tensor3_fd("Gamma", gamma, point, step)?;
            EvaluatedConnection::Explicit { gamma: v, dgamma: d1 }
        }
        ConnectionSpec::LeviCivitaPlusS { s } => {
            let (sv, sd) = tensor3_fd("S", s, point, step)?;
            EvaluatedConnection::PlusS { s: sv, ds: sd }
        }
    };
    Ok(assemble_frame(
        spec,
        point,
        EvaluatedInputs {
            g,
            dg,
            d2g,
            j: [j0, j1, j2],
            dj: [dj0, dj1, dj2],
            d2j: [d2j0, d2j1, d2j2],
            conn,
        },
    )?)
}

/// Derived quantities the oracle can compare.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum OracleQuantity {
    Gamma,
    Riemann,
    Nijenhuis,
    NablaJ,
    Weyl,
}

impl OracleQuantity {
    pub const ALL: [OracleQuantity; 5] = [
        OracleQuantity::Gamma,
        OracleQuantity::Riemann,
        OracleQuantity::Nijenhuis,
        OracleQuantity::NablaJ,
        OracleQuantity::Weyl,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            OracleQuantity::Gamma => "gamma",
            OracleQuantity::Riemann => "riemann",
            OracleQuantity::Nijenhuis => "nijenhuis",
            OracleQuantity::NablaJ => "nablaJ",
            OracleQuantity::Weyl => "weyl",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|q| q.name() == name)
    }
}

/// Outcome of one jet-versus-stencil comparison. Reported, never judged.
#[derive(Clone, Debug, Serialize)]
pub struct OracleComparison {
    pub quantity: &'static str,
    pub point: Vec<f64>,
    pub step: f64,
    /// Largest absolute entry over the quantity from the jet path; scale
    /// context for the deviations.
    pub jet_magnitude: f64,
    pub max_abs_dev: f64,
    /// Relative deviation with denominator `max(1, |a|, |b|)` per entry.
    pub max_rel_dev: f64,
}

fn quantity_entries(
    frame: &FrameData,
    quantity: OracleQuantity,
) -> Result<Vec<f64>, OracleError> {
    Ok(match quantity {
        OracleQuantity::Gamma => frame.gamma.entries().to_vec(),
        OracleQuantity::Riemann => frame.riemann().entries().to_vec(),
        OracleQuantity::Nijenhuis => {
            let mut v = Vec::new();
            for a in 0..3 {
                v.extend_from_slice(frame.nijenhuis(a).entries());
            }
            v
        }
        OracleQuantity::NablaJ => {
            let mut v = Vec::new();
            for a in 0..3 {
                v.extend_from_slice(frame.nabla_j(a).entries());
            }
            v
        }
        OracleQuantity::Weyl => {
            let report = weyl_report(frame)?;
            let mut v = report.weyl.entries().to_vec();
            v.push(report.w_plus_norm);
            v.push(report.w_minus_norm);
            v
        }
    })
}

/// Compare a derived quantity between the jet path and the stencil path at
/// one point.
pub fn compare_at(
    spec: &ManifoldSpec,
    point: &[f64],
    quantity: OracleQuantity,
    step: f64,
) -> Result<OracleComparison, OracleError> {
    let jet_frame = spec.frame_at(point)?;
    let fd_frame = fd_frame_at(spec, point, step)?;
    let jet = quantity_entries(&jet_frame, quantity)?;
    let fd = quantity_entries(&fd_frame, quantity)?;
    debug_assert_eq!(jet.len(), fd.len());
    let mut jet_magnitude = 0.0f64;
    let mut max_abs_dev = 0.0f64;
    let mut max_rel_dev = 0.0f64;
    for (a, b) in jet.iter().zip(fd.iter()) {
        jet_magnitude = jet_magnitude.max(a.abs());
        let dev = (a - b).abs();
        max_abs_dev = max_abs_dev.max(dev);
        max_rel_dev = max_rel_dev.max(dev / a.abs().max(b.abs()).max(1.0));
    }
    Ok(OracleComparison {
        quantity: quantity.name(),
        point: point.to_vec(),
        step,
        jet_magnitude,
        max_abs_dev,
        max_rel_dev,
    })
}
