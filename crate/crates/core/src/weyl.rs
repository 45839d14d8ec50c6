//! Weyl curvature and its (anti-)self-dual halves in dimension four.
//!
//! Everything here consumes the Levi-Civita curvature of a metric snapshot.
//! Conventions, fixed by the tests in this module:
//! - lowered curvature `Rm_{abcd} = g(R(e_a, e_b) e_c, e_d)`;
//! - Ricci contraction over the first and fourth slots,
//!   `Ric_{bc} = g^{ad} Rm_{abcd}` (positive scalar curvature for spheres);
//! - with these contractions the Weyl part is
//!   `W = Rm + (E ∧○ g)/(d-2) + s (g ∧○ g)/(2d(d-1))`
//!   where `E = Ric - (s/d) g` and `∧○` is the Kulkarni-Nomizu product
//!   `(A ∧○ B)_{abcd} = A_{ac}B_{bd} + A_{bd}B_{ac} - A_{ad}B_{bc} - A_{bc}B_{ad}`.
//!
//! In neutral signature the Hodge star on 2-forms squares to `+1`, so
//! self-dual and anti-self-dual parts are defined exactly as in the
//! Riemannian case once an orientation is fixed. The orientation is chosen
//! per point so that the span of the fundamental 2-forms of the structure
//! triple lies in the self-dual space; if the three forms disagree about
//! that choice the point is reported as incoherent rather than silently
//! picking a side.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::geometry::FrameData;
use crate::tensor::Tensor4;

#[derive(Debug, Error)]
pub enum WeylError {
    #[error("self-dual decomposition requires dimension 4, got {0}")]
    DimensionNotFour(usize),
    #[error("fundamental form F{0} is not antisymmetric (residual {1:.3e}); the triple is not metric-compatible here")]
    FormNotAntisymmetric(usize, f64),
    #[error("fundamental forms do not lie in a single duality eigenspace (pairings {0:?})")]
    OrientationIncoherent([f64; 3]),
}

/// Lowered curvature `Rm_{abcd} = g_{dm} R^m_{cab}` from the upper-index
/// curvature `R^i_{jkl}` (endomorphism `(i, j)`, 2-form `(k, l)`).
pub fn lower_riemann(g: &DMatrix<f64>, r: &Tensor4) -> Tensor4 {
    let d = r.dim();
    let mut rm = Tensor4::zeros(d);
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                for e in 0..d {
                    let mut acc = 0.0;
                    for m in 0..d {
                        acc += g[(e, m)] * r.get(m, c, a, b);
                    }
                    rm.set(a, b, c, e, acc);
                }
            }
        }
    }
    rm
}

/// Ricci tensor `Ric_{bc} = g^{ad} Rm_{abcd}`.
pub fn ricci_tensor(g_inv: &DMatrix<f64>, rm: &Tensor4) -> DMatrix<f64> {
    let d = rm.dim();
    DMatrix::from_fn(d, d, |b, c| {
        let mut acc = 0.0;
        for a in 0..d {
            for e in 0..d {
                acc += g_inv[(a, e)] * rm.get(a, b, c, e);
            }
        }
        acc
    })
}

/// Kulkarni-Nomizu product of two symmetric 2-tensors.
fn kulkarni_nomizu(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Tensor4 {
    let d = a.nrows();
    let mut out = Tensor4::zeros(d);
    for p in 0..d {
        for q in 0..d {
            for r in 0..d {
                for s in 0..d {
                    out.set(
                        p,
                        q,
                        r,
                        s,
                        a[(p, r)] * b[(q, s)] + a[(q, s)] * b[(p, r)]
                            - a[(p, s)] * b[(q, r)]
                            - a[(q, r)] * b[(p, s)],
                    );
                }
            }
        }
    }
    out
}

/// Scalar curvature, Ricci tensor, and Weyl tensor of a lowered curvature.
pub struct CurvatureDecomposition {
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
    pub weyl: Tensor4,
}

pub fn decompose_curvature(
    g: &DMatrix<f64>,
    g_inv: &DMatrix<f64>,
    rm: &Tensor4,
) -> CurvatureDecomposition {
    let d = rm.dim();
    let df = d as f64;
    let ricci = ricci_tensor(g_inv, rm);
    let scalar = (g_inv * &ricci).trace();
    let einstein = &ricci - g * (scalar / df);
    let e_part = kulkarni_nomizu(&einstein, g);
    let s_part = kulkarni_nomizu(g, g);
    let mut weyl = rm.clone();
    let ce = 1.0 / (df - 2.0);
    let cs = scalar / (2.0 * df * (df - 1.0));
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                for e in 0..d {
                    let v = weyl.get(a, b, c, e)
                        + ce * e_part.get(a, b, c, e)
                        + cs * s_part.get(a, b, c, e);
                    weyl.set(a, b, c, e, v);
                }
            }
        }
    }
    CurvatureDecomposition {
        ricci,
        scalar,
        weyl,
    }
}

/// Max-abs of the full trace `g^{ad} W_{abcd}`; a diagnostic that the
/// decomposition removed every trace part.
pub fn trace_residual(g_inv: &DMatrix<f64>, w: &Tensor4) -> f64 {
    ricci_tensor(g_inv, w)
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Levi-Civita symbol on four indices.
fn eps4(i: usize, j: usize, k: usize, l: usize) -> f64 {
    let p = [i as i32, j as i32, k as i32, l as i32];
    let mut sign = 1.0;
    for a in 0..4 {
        for b in (a + 1)..4 {
            match p[a].cmp(&p[b]) {
                std::cmp::Ordering::Greater => sign = -sign,
                std::cmp::Ordering::Equal => return 0.0,
                std::cmp::Ordering::Less => {}
            }
        }
    }
    sign
}

/// Hodge star of a 2-form in dimension 4:
/// `(*ω)_{ab} = (or/2) √|det g| ε_{abcd} g^{ce} g^{df} ω_{ef}`.
pub fn hodge_star_2form(
    omega: &DMatrix<f64>,
    g_inv: &DMatrix<f64>,
    sqrt_abs_det: f64,
    orientation: f64,
) -> DMatrix<f64> {
    let d = 4;
    DMatrix::from_fn(d, d, |a, b| {
        let mut acc = 0.0;
        for c in 0..d {
            for dd in 0..d {
                let e = eps4(a, b, c, dd);
                if e == 0.0 {
                    continue;
                }
                for p in 0..d {
                    for q in 0..d {
                        acc += e * g_inv[(c, p)] * g_inv[(dd, q)] * omega[(p, q)];
                    }
                }
            }
        }
        0.5 * orientation * sqrt_abs_det * acc
    })
}

/// Choose the orientation sign that makes the triple's fundamental forms
/// self-dual, or report incoherence. Returns `(orientation, sqrt_abs_det)`.
pub fn orientation_from_forms(frame: &FrameData) -> Result<(f64, f64), WeylError> {
    if frame.dim != 4 {
        return Err(WeylError::DimensionNotFour(frame.dim));
    }
    let det: f64 = frame.g.determinant();
    let sqrt_abs_det = det.abs().sqrt();
    let mut pairings = [0.0f64; 3];
    for a in 0..3 {
        let f = frame.fundamental_form(a);
        let asym = (&f + f.transpose())
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-30);
        if asym > 1e-8 * scale.max(1.0) {
            return Err(WeylError::FormNotAntisymmetric(a + 1, asym));
        }
        let star_f = hodge_star_2form(&f, &frame.g_inv, sqrt_abs_det, 1.0);
        // Frobenius pairing of *F with F, normalized: +1 for self-dual,
        // -1 for anti-self-dual (since *^2 = +1 here).
        let num: f64 = star_f.iter().zip(f.iter()).map(|(x, y)| x * y).sum();
        let den: f64 = f.iter().map(|x| x * x).sum();
        pairings[a] = num / den;
    }
    let coherent_plus = pairings.iter().all(|p| (p - 1.0).abs() < 1e-6);
    let coherent_minus = pairings.iter().all(|p| (p + 1.0).abs() < 1e-6);
    match (coherent_plus, coherent_minus) {
        (true, false) => Ok((1.0, sqrt_abs_det)),
        (false, true) => Ok((-1.0, sqrt_abs_det)),
        _ => Err(WeylError::OrientationIncoherent(pairings)),
    }
}

/// Apply the star to the left index pair of a (0,4)-tensor.
fn star_left(
    w: &Tensor4,
    g_inv: &DMatrix<f64>,
    sqrt_abs_det: f64,
    orientation: f64,
) -> Tensor4 {
    let d = 4;
    let mut out = Tensor4::zeros(d);
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                for e in 0..d {
                    let mut acc = 0.0;
                    for m in 0..d {
                        for n in 0..d {
                            let s = eps4(a, b, m, n);
                            if s == 0.0 {
                                continue;
                            }
                            for p in 0..d {
                                for q in 0..d {
                                    acc += s
                                        * g_inv[(m, p)]
                                        * g_inv[(n, q)]
                                        * w.get(p, q, c, e);
                                }
                            }
                        }
                    }
                    out.set(a, b, c, e, 0.5 * orientation * sqrt_abs_det * acc);
                }
            }
        }
    }
    out
}

/// Apply the star to the right index pair.
fn star_right(
    w: &Tensor4,
    g_inv: &DMatrix<f64>,
    sqrt_abs_det: f64,
    orientation: f64,
) -> Tensor4 {
    let d = 4;
    let mut out = Tensor4::zeros(d);
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                for e in 0..d {
                    let mut acc = 0.0;
                    for m in 0..d {
                        for n in 0..d {
                            let s = eps4(c, e, m, n);
                            if s == 0.0 {
                                continue;
                            }
                            for p in 0..d {
                                for q in 0..d {
                                    acc += s
                                        * g_inv[(m, p)]
                                        * g_inv[(n, q)]
                                        * w.get(a, b, p, q);
                                }
                            }
                        }
                    }
                    out.set(a, b, c, e, 0.5 * orientation * sqrt_abs_det * acc);
                }
            }
        }
    }
    out
}

fn frobenius_norm(t: &Tensor4) -> f64 {
    t.entries().iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Self-dual / anti-self-dual halves of the Weyl tensor at a 4-dimensional
/// point, with the orientation fixed by the structure triple.
pub struct DualityReport {
    pub orientation: f64,
    pub w_plus: Tensor4,
    pub w_minus: Tensor4,
    pub w_plus_norm: f64,
    pub w_minus_norm: f64,
}

pub fn duality_split(
    frame: &FrameData,
    weyl: &Tensor4,
) -> Result<DualityReport, WeylError> {
    let (orientation, sqrt_abs_det) = orientation_from_forms(frame)?;
    Ok(duality_split_with_orientation(
        &frame.g_inv,
        sqrt_abs_det,
        orientation,
        weyl,
    ))
}

/// The duality split with the orientation supplied by the caller instead of
/// read off the structure triple.
pub fn duality_split_with_orientation(
    g_inv: &DMatrix<f64>,
    sqrt_abs_det: f64,
    orientation: f64,
    weyl: &Tensor4,
) -> DualityReport {
    let sl = star_left(weyl, g_inv, sqrt_abs_det, orientation);
    let sr = star_right(weyl, g_inv, sqrt_abs_det, orientation);
    let slr = star_right(&sl, g_inv, sqrt_abs_det, orientation);
    let d = 4;
    let mut w_plus = Tensor4::zeros(d);
    let mut w_minus = Tensor4::zeros(d);
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                for e in 0..d {
                    let w0 = weyl.get(a, b, c, e);
                    let l = sl.get(a, b, c, e);
                    let r = sr.get(a, b, c, e);
                    let lr = slr.get(a, b, c, e);
                    w_plus.set(a, b, c, e, 0.25 * (w0 + l + r + lr));
                    w_minus.set(a, b, c, e, 0.25 * (w0 - l - r + lr));
                }
            }
        }
    }
    let w_plus_norm = frobenius_norm(&w_plus);
    let w_minus_norm = frobenius_norm(&w_minus);
    DualityReport {
        orientation,
        w_plus,
        w_minus,
        w_plus_norm,
        w_minus_norm,
    }
}

/// Full four-dimensional curvature report used by the duality checks.
pub struct WeylReport {
    pub scalar: f64,
    pub ricci: DMatrix<f64>,
    pub weyl: Tensor4,
    pub trace_residual: f64,
    pub orientation: f64,
    pub w_plus_norm: f64,
    pub w_minus_norm: f64,
}

/// Compute the Weyl tensor of the snapshot's metric (the snapshot must carry
/// the Levi-Civita connection for the decomposition to be meaningful) and
/// split it by duality.
pub fn weyl_report(frame: &FrameData) -> Result<WeylReport, WeylError> {
    if frame.dim != 4 {
        return Err(WeylError::DimensionNotFour(frame.dim));
    }
    let r = frame.riemann();
    let rm = lower_riemann(&frame.g, &r);
    let dec = decompose_curvature(&frame.g, &frame.g_inv, &rm);
    let tr = trace_residual(&frame.g_inv, &dec.weyl);
    let duality = duality_split(frame, &dec.weyl)?;
    Ok(WeylReport {
        scalar: dec.scalar,
        ricci: dec.ricci,
        weyl: dec.weyl,
        trace_residual: tr,
        orientation: duality.orientation,
        w_plus_norm: duality.w_plus_norm,
        w_minus_norm: duality.w_minus_norm,
    })
}
