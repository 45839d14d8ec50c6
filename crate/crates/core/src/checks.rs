//! Named, tolerance-parametrized verdicts over sampled points.
//!
//! Every check walks the spec's sample points, evaluates a family of named
//! residuals at each usable point, and aggregates them into one of three
//! verdicts. Four aggregation modes exist, recorded in the report:
//!
//! - `residual`: holds iff every residual is below tolerance at every
//!   non-skipped point; fails iff some residual exceeds 10x tolerance;
//!   inconclusive otherwise.
//! - `equivalence`: the constituent residuals of an if-and-only-if statement
//!   must vanish together or stay away from zero together, judged per point:
//!   any point where one constituent is below tolerance while another
//!   exceeds 10x tolerance is a counterexample (fails); points with
//!   constituents in the indeterminate band make the verdict inconclusive.
//! - `agreement`: two boolean indicators are derived per point (below
//!   tolerance = true, above 10x tolerance = false, in between = unjudged);
//!   holds iff the indicators agree at every judged point.
//! - `implication`: a premise residual gates a conclusion residual; when the
//!   premise does not hold, the check reports inconclusive (vacuous) rather
//!   than a pass.
//!
//! Points where the snapshot cannot be built (singular metric, expression
//! domain error) are skipped and listed in the report, never averaged away.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::algebra::{
    endo_slice, proj02_normalized, s_split, sample_hyperboloid, ImaginaryPq, Sheet,
    StructureTriple, EPS,
};
use crate::geometry::{ConnectionSpec, FrameData, ManifoldSpec};
use crate::tensor::{mat_max_abs, Tensor3};
use crate::weyl::weyl_report;

/// Default tolerance ladder, calibrated to order-2 jet arithmetic in 64-bit
/// floats: plain algebraic identities, once-differentiated quantities, and
/// curvature-level (twice-differentiated) quantities.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Tolerances {
    pub algebraic: f64,
    pub first_order: f64,
    pub curvature: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            algebraic: 1e-10,
            first_order: 1e-8,
            curvature: 1e-7,
        }
    }
}

impl Tolerances {
    pub fn scaled(self, factor: f64) -> Self {
        Tolerances {
            algebraic: self.algebraic * factor,
            first_order: self.first_order * factor,
            curvature: self.curvature * factor,
        }
    }
}

/// Knobs shared by all checks.
#[derive(Clone, Debug)]
pub struct CheckOptions {
    /// Override of the spec's sample-point count.
    pub points: Option<usize>,
    pub seed: u64,
    pub tol_scale: f64,
    /// Structure samples per hyperboloid sheet.
    pub j_samples: usize,
    /// Hyperboloid parameter range for those samples.
    pub t_max: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            points: None,
            seed: 7,
            tol_scale: 1.0,
            j_samples: 64,
            t_max: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

/// One named residual, with its per-point values (aligned with the
/// non-skipped points, in sampling order) and their maximum.
#[derive(Clone, Debug, Serialize)]
pub struct ResidualSeries {
    pub name: String,
    pub max: f64,
    pub per_point: Vec<f64>,
}

impl ResidualSeries {
    fn new(name: &str, per_point: Vec<f64>) -> Self {
        let max = per_point.iter().copied().fold(0.0f64, f64::max);
        ResidualSeries {
            name: name.to_string(),
            max,
            per_point,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub spec_name: String,
    pub mode: &'static str,
    pub tolerance: f64,
    pub seed: u64,
    pub points_used: usize,
    pub points_skipped: usize,
    pub skipped: Vec<String>,
    pub residuals: Vec<ResidualSeries>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

#[derive(Debug, Error)]
pub enum ChecksError {
    #[error("unknown check `{name}`; known checks: {known}")]
    UnknownCheck { name: String, known: String },
}

/// Stable check identifiers, in canonical execution order.
pub const CHECK_NAMES: [&str; 11] = [
    "par1",
    "compat",
    "ltor",
    "idric",
    "theorem-four",
    "prop-t25",
    "cor-t27",
    "cor-t272",
    "zamkovoy-pq",
    "pqkt",
    "cor-cur",
];

/// The subset of checks whose hypotheses the spec satisfies structurally:
/// duality checks need dimension 4, potential checks need an explicit
/// potential, and the torsion-to-curvature implication is a theorem only
/// from dimension 8 up.
pub fn applicable_checks(spec: &ManifoldSpec) -> Vec<&'static str> {
    CHECK_NAMES
        .iter()
        .copied()
        .filter(|name| match *name {
            "theorem-four" => spec.dim == 4,
            "prop-t25" | "cor-t27" | "cor-t272" => {
                matches!(spec.connection, ConnectionSpec::LeviCivitaPlusS { .. })
            }
            "cor-cur" => spec.dim >= 8,
            _ => true,
        })
        .collect()
}

struct Ctx<'a> {
    spec: &'a ManifoldSpec,
    opts: &'a CheckOptions,
    tol: Tolerances,
    /// Imaginary-coefficient samples: `minus` squares to -1, `plus` to +1.
    minus_q: Vec<ImaginaryPq>,
    plus_q: Vec<ImaginaryPq>,
    points: Vec<Vec<f64>>,
}

impl<'a> Ctx<'a> {
    fn new(spec: &'a ManifoldSpec, opts: &'a CheckOptions) -> Self {
        let count = opts.points.unwrap_or(spec.sample_points);
        Ctx {
            spec,
            opts,
            tol: Tolerances::default().scaled(opts.tol_scale),
            minus_q: sample_hyperboloid(
                Sheet::Minus,
                opts.j_samples,
                opts.seed.wrapping_add(1),
                opts.t_max,
            ),
            plus_q: sample_hyperboloid(
                Sheet::Plus,
                opts.j_samples,
                opts.seed.wrapping_add(2),
                opts.t_max,
            ),
            points: spec.sample(count, opts.seed),
        }
    }

    /// Snapshot every sample point, recording skips.
    fn frames(&self, spec: &ManifoldSpec) -> (Vec<FrameData>, Vec<String>) {
        let mut frames = Vec::new();
        let mut skipped = Vec::new();
        for (idx, p) in self.points.iter().enumerate() {
            match spec.frame_at(p) {
                Ok(f) => frames.push(f),
                Err(e) => skipped.push(format!("point {idx} {p:?}: {e}")),
            }
        }
        (frames, skipped)
    }

    fn report(
        &self,
        check: &str,
        mode: &'static str,
        tolerance: f64,
        skipped: Vec<String>,
        residuals: Vec<ResidualSeries>,
        verdict: Verdict,
        notes: Vec<String>,
    ) -> CheckReport {
        let points_used = residuals
            .first()
            .map(|s| s.per_point.len())
            .unwrap_or(self.points.len() - skipped.len());
        CheckReport {
            check: check.to_string(),
            spec_name: self.spec.name.clone(),
            mode,
            tolerance,
            seed: self.opts.seed,
            points_used,
            points_skipped: skipped.len(),
            skipped,
            residuals,
            verdict,
            notes,
        }
    }

    fn inapplicable(&self, check: &str, mode: &'static str, tol: f64, why: String) -> CheckReport {
        self.report(
            check,
            mode,
            tol,
            Vec::new(),
            Vec::new(),
            Verdict::Inconclusive,
            vec![why],
        )
    }
}

fn residual_verdict(series: &[ResidualSeries], tol: f64) -> Verdict {
    if series.iter().all(|s| s.max < tol) {
        Verdict::Holds
    } else if series.iter().any(|s| s.max > 10.0 * tol) {
        Verdict::Fails
    } else {
        Verdict::Inconclusive
    }
}

/// Per-point equivalence aggregation; see the module docs.
fn equivalence_verdict(series: &[ResidualSeries], tol: f64) -> (Verdict, String) {
    let npoints = series.first().map(|s| s.per_point.len()).unwrap_or(0);
    let mut gray_points = 0usize;
    for idx in 0..npoints {
        let vals: Vec<f64> = series.iter().map(|s| s.per_point[idx]).collect();
        let some_low = vals.iter().any(|v| *v < tol);
        let some_high = vals.iter().any(|v| *v > 10.0 * tol);
        if some_low && some_high {
            return (
                Verdict::Fails,
                format!("constituents split across the tolerance bands at point {idx}"),
            );
        }
        if !(vals.iter().all(|v| *v < tol) || vals.iter().all(|v| *v > 10.0 * tol)) {
            gray_points += 1;
        }
    }
    if npoints == 0 {
        (Verdict::Inconclusive, "no usable points".to_string())
    } else if gray_points > 0 {
        (
            Verdict::Inconclusive,
            format!("{gray_points} point(s) in the indeterminate band"),
        )
    } else {
        (
            Verdict::Holds,
            "constituents vanish or stay nonzero together at every point".to_string(),
        )
    }
}

fn triple_of(frame: &FrameData) -> StructureTriple {
    StructureTriple::new_unchecked([
        frame.j[0].clone(),
        frame.j[1].clone(),
        frame.j[2].clone(),
    ])
}

/// Materialize the sampled structures at this frame's triple: pairs of
/// (endomorphism, sign of its square).
fn sampled_structures(
    frame: &FrameData,
    minus_q: &[ImaginaryPq],
    plus_q: &[ImaginaryPq],
) -> Vec<(DMatrix<f64>, f64)> {
    let triple = triple_of(frame);
    minus_q
        .iter()
        .map(|q| (triple.combine(*q), -1.0))
        .chain(plus_q.iter().map(|q| (triple.combine(*q), 1.0)))
        .collect()
}

// ---------------------------------------------------------------------------
// Individual checks
// ---------------------------------------------------------------------------

fn check_par1(ctx: &Ctx) -> CheckReport {
    let (frames, skipped) = ctx.frames(ctx.spec);
    let d = ctx.spec.dim;
    let id = DMatrix::<f64>::identity(d, d);
    let names = [
        "j1-squared-minus-id",
        "j2-squared-minus-id",
        "j3-squared-plus-id",
        "j1j2-minus-j3",
        "j1j2-plus-j2j1",
    ];
    let mut cols: [Vec<f64>; 5] = Default::default();
    for f in &frames {
        let [j1, j2, j3] = &f.j;
        cols[0].push(mat_max_abs(&(j1 * j1 - &id)));
        cols[1].push(mat_max_abs(&(j2 * j2 - &id)));
        cols[2].push(mat_max_abs(&(j3 * j3 + &id)));
        cols[3].push(mat_max_abs(&(j1 * j2 - j3)));
        cols[4].push(mat_max_abs(&(j1 * j2 + j2 * j1)));
    }
    let series: Vec<ResidualSeries> = names
        .iter()
        .zip(cols)
        .map(|(n, c)| ResidualSeries::new(n, c))
        .collect();
    let tol = ctx.tol.algebraic;
    let verdict = finish_residual(&frames, &series, tol);
    ctx.report("par1", "residual", tol, skipped, series, verdict, vec![])
}

fn check_compat(ctx: &Ctx) -> CheckReport {
    let (frames, skipped) = ctx.frames(ctx.spec);
    let names = ["skew-j1", "skew-j2", "skew-j3"];
    let mut cols: [Vec<f64>; 3] = Default::default();
    for f in &frames {
        for a in 0..3 {
            cols[a].push(mat_max_abs(&(f.j[a].transpose() * &f.g + &f.g * &f.j[a])));
        }
    }
    let series: Vec<ResidualSeries> = names
        .iter()
        .zip(cols)
        .map(|(n, c)| ResidualSeries::new(n, c))
        .collect();
    let tol = ctx.tol.algebraic;
    let verdict = finish_residual(&frames, &series, tol);
    ctx.report("compat", "residual", tol, skipped, series, verdict, vec![])
}

/// `residual`-mode epilogue: no usable points downgrades the verdict.
fn finish_residual(frames: &[FrameData], series: &[ResidualSeries], tol: f64) -> Verdict {
    if frames.is_empty() {
        Verdict::Inconclusive
    } else {
        residual_verdict(series, tol)
    }
}

/// Max of the (0,2)-projection of `b` over the sampled structures.
fn proj02_max_over(structures: &[(DMatrix<f64>, f64)], b: &Tensor3, want_sign: f64) -> f64 {
    structures
        .iter()
        .filter(|(_, q)| *q == want_sign)
        .map(|(j, q)| proj02_normalized(b, j, *q).max_abs())
        .fold(0.0f64, f64::max)
}

fn check_ltor(ctx: &Ctx) -> CheckReport {
    let (frames, skipped) = ctx.frames(ctx.spec);
    let names = ["z-minus", "z-plus", "basis-j3", "basis-j1"];
    let mut cols: [Vec<f64>; 4] = Default::default();
    for f in &frames {
        let t = f.torsion();
        let structures = sampled_structures(f, &ctx.minus_q, &ctx.plus_q);
        cols[0].push(proj02_max_over(&structures, &t, -1.0));
        cols[1].push(proj02_max_over(&structures, &t, 1.0));
        cols[2].push(proj02_normalized(&t, &f.j[2], -1.0).max_abs());
        cols[3].push(proj02_normalized(&t, &f.j[0], 1.0).max_abs());
    }
    let series: Vec<ResidualSeries> = names
        .iter()
        .zip(cols)
        .map(|(n, c)| ResidualSeries::new(n, c))
        .collect();
    let tol = ctx.tol.first_order;
    let verdict = finish_residual(&frames, &series, tol);
    ctx.report("ltor", "residual", tol, skipped, series, verdict, vec![])
}

/// Max residual of the Ricci-form identity for one cyclic permutation
/// (zero-based `a, b, c`) over all coordinate pairs:
///
///   rho_a(J_b X, J_b Y) + eps_b rho_a(X, Y)
///     + eps_a (rho_c(J_b X, Y) + rho_c(X, J_b Y)) = 0.
///
/// The `eps_a` weight on the mixing term is forced by admissible-basis
/// invariance: rotating (J_1, J_2) and boosting (J_2, J_3) must carry each
/// instance into the others. In dimension 4 the three instances together are
/// exactly anti-self-duality of the underlying metric: writing the self-dual
/// parts of the Ricci forms as rho_b = sum_c y_bc F_c over the fundamental
/// 2-forms, the family says y is antisymmetric off the diagonal with
/// y_11 = y_22 = -y_33, i.e. the self-dual Weyl block is pure trace.
fn idric_perm_residual(f: &FrameData, rho: &[DMatrix<f64>; 3], a: usize, b: usize, c: usize) -> f64 {
    let d = f.dim;
    let jb = &f.j[b];
    let mut worst = 0.0f64;
    for k in 0..d {
        for l in 0..d {
            let mut t1 = 0.0;
            for m in 0..d {
                for n in 0..d {
                    t1 += jb[(m, k)] * jb[(n, l)] * rho[a][(m, n)];
                }
            }
            let t2 = EPS[b] * rho[a][(k, l)];
            let mut t3 = 0.0;
            for m in 0..d {
                t3 += jb[(m, k)] * rho[c][(m, l)];
            }
            let mut t4 = 0.0;
            for m in 0..d {
                t4 += jb[(m, l)] * rho[c][(k, m)];
            }
            worst = worst.max((t1 + t2 + EPS[a] * (t3 + t4)).abs());
        }
    }
    worst
}

fn idric_max_residual(f: &FrameData, rho: &[DMatrix<f64>; 3]) -> f64 {
    [(0, 1, 2), (1, 2, 0), (2, 0, 1)]
        .into_iter()
        .map(|(a, b, c)| idric_perm_residual(f, rho, a, b, c))
        .fold(0.0f64, f64::max)
}

fn check_idric(ctx: &Ctx) -> CheckReport {
    let (frames, skipped) = ctx.frames(ctx.spec);
    let names = ["perm-123", "perm-231", "perm-312"];
    let perms = [(0, 1, 2), (1, 2, 0), (2, 0, 1)];
    let mut cols: [Vec<f64>; 3] = Default::default();
    for f in &frames {
        let rho = f.ricci_forms(&f.riemann());
        for (slot, (a, b, c)) in perms.into_iter().enumerate() {
            cols[slot].push(idric_perm_residual(f, &rho, a, b, c));
        }
    }
    let series: Vec<ResidualSeries> = names
        .iter()
        .zip(cols)
        .map(|(n, c)| ResidualSeries::new(n, c))
        .collect();
    let tol = ctx.tol.curvature;
    let verdict = finish_residual(&frames, &series, tol);
    ctx.report("idric", "residual", tol, skipped, series, verdict, vec![])
}

fn check_theorem_four(ctx: &Ctx) -> CheckReport {
    let tol = ctx.tol.curvature;
    if ctx.spec.dim != 4 {
        return ctx.inapplicable(
            "theorem-four",
            "agreement",
            tol,
            format!(
                "duality splitting needs dimension 4; spec has dimension {}",
                ctx.spec.dim
            ),
        );
    }
    // Both indicators are statements about the metric's own connection.
    let lc_spec = ctx.spec.with_connection(ConnectionSpec::LeviCivita);
    let mut skipped = Vec::new();
    let mut w_col = Vec::new();
    let mut i_col = Vec::new();
    let mut judged = 0usize;
    let mut agreements = 0usize;
    for (idx, p) in ctx.points.iter().enumerate() {
        let frame = match lc_spec.frame_at(p) {
            Ok(f) => f,
            Err(e) => {
                skipped.push(format!("point {idx} {p:?}: {e}"));
                continue;
            }
        };
        let wr = match weyl_report(&frame) {
            Ok(w) => w,
            Err(e) => {
                skipped.push(format!("point {idx} {p:?}: {e}"));
                continue;
            }
        };
        let rho = frame.ricci_forms(&frame.riemann());
        let idr = idric_max_residual(&frame, &rho);
        w_col.push(wr.w_plus_norm);
        i_col.push(idr);
        let judge = |v: f64| {
            if v < tol {
                Some(true)
            } else if v > 10.0 * tol {
                Some(false)
            } else {
                None
            }
        };
        if let (Some(asd), Some(ric)) = (judge(wr.w_plus_norm), judge(idr)) {
            judged += 1;
            if asd == ric {
                agreements += 1;
            }
        }
    }
    let series = vec![
        ResidualSeries::new("w-plus", w_col),
        ResidualSeries::new("idric", i_col),
    ];
    let verdict = if judged == 0 {
        Verdict::Inconclusive
    } else if agreements == judged {
        Verdict::Holds
    } else {
        Verdict::Fails
    };
    let notes = vec![format!(
        "indicators judged at {judged} of {} usable points; {agreements} agree",
        series[0].per_point.len()
    )];
    ctx.report("theorem-four", "agreement", tol, skipped, series, verdict, notes)
}

/// `|s^1(J_1 X) - s^2(J_2 X)| + |s^2(J_2 X) - s^3(J_3 X)|` maximized over
/// coordinate X, from the span/trace split of the potential.
fn s_relation_residual(f: &FrameData, s: &Tensor3) -> f64 {
    let triple = triple_of(f);
    let split = s_split(s, &triple);
    let d = f.dim;
    let mut worst = 0.0f64;
    for k in 0..d {
        let pair = |b: usize| -> f64 {
            (0..d).map(|m| split.coeff[b][m] * f.j[b][(m, k)]).sum()
        };
        let (v1, v2, v3) = (pair(0), pair(1), pair(2));
        worst = worst.max((v1 - v2).abs() + (v2 - v3).abs());
    }
    worst
}

/// Max over structures and coordinate Y of `|J [S_Y, J] - sign [S_{JY}, J]|`.
fn potential_commutator_residual(
    f: &FrameData,
    s: &Tensor3,
    structures: &[(DMatrix<f64>, f64)],
    want_sign: Option<f64>,
    rhs_sign: f64,
) -> f64 {
    let d = f.dim;
    let mut worst = 0.0f64;
    for (j, q) in structures {
        if let Some(w) = want_sign {
            if *q != w {
                continue;
            }
        }
        for k in 0..d {
            let sy = endo_slice(s, k);
            let mut sjy = DMatrix::<f64>::zeros(d, d);
            for m in 0..d {
                let w = j[(m, k)];
                if w != 0.0 {
                    sjy += endo_slice(s, m) * w;
                }
            }
            let comm_y = &sy * j - j * &sy;
            let comm_jy = &sjy * j - j * &sjy;
            let resid = j * comm_y - comm_jy * rhs_sign;
            worst = worst.max(mat_max_abs(&resid));
        }
    }
    worst
}

fn potential_of(ctx: &Ctx, check: &str, mode: &'static str, tol: f64) -> Result<(), CheckReport> {
    if !matches!(ctx.spec.connection, ConnectionSpec::LeviCivitaPlusS { .. }) {
        return Err(ctx.inapplicable(
            check,
            mode,
            tol,
            format!(
                "check needs a levi-civita-plus-S connection; spec uses {}",
                ctx.spec.connection.kind_name()
            ),
        ));
    }
    Ok(())
}

fn check_prop_t25(ctx: &Ctx) -> CheckReport {
    let tol = ctx.tol.algebraic;
    if let Err(r) = potential_of(ctx, "prop-t25", "equivalence", tol) {
        return r;
    }
    let (frames, skipped) = ctx.frames(ctx.spec);
    let mut cols: [Vec<f64>; 3] = Default::default();
    for f in &frames {
        let s = f.s.as_ref().expect("potential connection carries S");
        let structures = sampled_structures(f, &ctx.minus_q, &ctx.plus_q);
        cols[0].push(s_relation_residual(f, s));
        cols[1].push(potential_commutator_residual(f, s, &structures, Some(-1.0), 1.0));
        cols[2].push(potential_commutator_residual(f, s, &structures, Some(1.0), 1.0));
    }
    let series = vec![
        ResidualSeries::new("s-relation", cols[0].clone()),
        ResidualSeries::new("commutator-z-minus", cols[1].clone()),
        ResidualSeries::new("commutator-z-plus", cols[2].clone()),
    ];
    let (verdict, note) = if frames.is_empty() {
        (Verdict::Inconclusive, "no usable points".to_string())
    } else {
        equivalence_verdict(&series, tol)
    };
    ctx.report(
        "prop-t25",
        "equivalence",
        tol,
        skipped,
        series,
        verdict,
        vec![note],
    )
}

fn check_cor_t27(ctx: &Ctx) -> CheckReport {
    let tol = ctx.tol.algebraic;
    if let Err(r) = potential_of(ctx, "cor-t27", "equivalence", tol) {
        return r;
    }
    let (frames, skipped) = ctx.frames(ctx.spec);
    let mut cols: [Vec<f64>; 2] = Default::default();
    for f in &frames {
        let s = f.s.as_ref().expect("potential connection carries S");
        let d = f.dim;
        // Torsion difference between nabla + S and nabla:
        // Delta T^i_{jk} = S^i_{jk} - S^i_{kj} (storage: middle = direction).
        let mut dt = Tensor3::zeros(d);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    dt.set(i, j, k, s.get(i, j, k) - s.get(i, k, j));
                }
            }
        }
        let structures = sampled_structures(f, &ctx.minus_q, &ctx.plus_q);
        let t02 = structures
            .iter()
            .map(|(j, q)| proj02_normalized(&dt, j, *q).max_abs())
            .fold(0.0f64, f64::max);
        cols[0].push(t02);
        cols[1].push(s_relation_residual(f, s));
    }
    let series = vec![
        ResidualSeries::new("t02-difference", cols[0].clone()),
        ResidualSeries::new("s-relation", cols[1].clone()),
    ];
    let (verdict, note) = if frames.is_empty() {
        (Verdict::Inconclusive, "no usable points".to_string())
    } else {
        equivalence_verdict(&series, tol)
    };
    ctx.report(
        "cor-t27",
        "equivalence",
        tol,
        skipped,
        series,
        verdict,
        vec![note],
    )
}

fn check_cor_t272(ctx: &Ctx) -> CheckReport {
    let tol = ctx.tol.algebraic;
    if let Err(r) = potential_of(ctx, "cor-t272", "equivalence", tol) {
        return r;
    }
    let (frames, skipped) = ctx.frames(ctx.spec);
    let mut cols: [Vec<f64>; 2] = Default::default();
    for f in &frames {
        let s = f.s.as_ref().expect("potential connection carries S");
        let triple = triple_of(f);
        let split = s_split(s, &triple);
        let s_forms = split
            .coeff
            .iter()
            .flat_map(|c| c.iter().copied())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let structures = sampled_structures(f, &ctx.minus_q, &ctx.plus_q);
        cols[0].push(s_forms);
        cols[1].push(potential_commutator_residual(f, s, &structures, None, -1.0));
    }
    let series = vec![
        ResidualSeries::new("s-forms", cols[0].clone()),
        ResidualSeries::new("flipped-commutator", cols[1].clone()),
    ];
    let (verdict, note) = if frames.is_empty() {
        (Verdict::Inconclusive, "no usable points".to_string())
    } else {
        equivalence_verdict(&series, tol)
    };
    ctx.report(
        "cor-t272",
        "equivalence",
        tol,
        skipped,
        series,
        verdict,
        vec![note],
    )
}

/// Least-squares residual of fitting `rhs ≈ A x`, reported as the max-abs
/// entry of the unexplained component.
fn lsq_residual(a: &DMatrix<f64>, rhs: &DVector<f64>) -> f64 {
    let svd = a.clone().svd(true, true);
    let x = svd
        .solve(rhs, 1e-12)
        .expect("SVD solve with computed U/V cannot fail");
    (a * x - rhs).iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn check_zamkovoy(ctx: &Ctx) -> CheckReport {
    let (frames, skipped) = ctx.frames(ctx.spec);
    let mut cols: [Vec<f64>; 3] = Default::default();
    for f in &frames {
        let d = f.dim;
        let n1 = f.nijenhuis(0);
        let n2 = f.nijenhuis(1);
        let n3 = f.nijenhuis(2);
        let mut m = Tensor3::zeros(d);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    m.set(
                        i,
                        j,
                        k,
                        n1.get(i, j, k) + n2.get(i, j, k) - n3.get(i, j, k),
                    );
                }
            }
        }
        // Tensorial fit: M(X, Y) = sum_a lambda_a(Y) J_a X - lambda_a(X) J_a Y
        // with unknown 1-forms lambda_a; linear least squares over all
        // coordinate pairs at once.
        let pairs: Vec<(usize, usize)> = (0..d)
            .flat_map(|k| ((k + 1)..d).map(move |l| (k, l)))
            .collect();
        let rows = pairs.len() * d;
        let mut a = DMatrix::<f64>::zeros(rows, 3 * d);
        let mut rhs = DVector::<f64>::zeros(rows);
        for (pi, (k, l)) in pairs.iter().enumerate() {
            for i in 0..d {
                let row = pi * d + i;
                rhs[row] = m.get(i, *k, *l);
                for b in 0..3 {
                    a[(row, b * d + l)] += f.j[b][(i, *k)];
                    a[(row, b * d + k)] -= f.j[b][(i, *l)];
                }
            }
        }
        cols[0].push(lsq_residual(&a, &rhs));
        // Pointwise literal span {J_a X, J_a Y} and the variant including
        // X, Y themselves; reported for reference (in dimension 4 the six
        // vectors generically already span everything).
        let mut lit = 0.0f64;
        let mut ext = 0.0f64;
        for (k, l) in &pairs {
            let mut cols6 = DMatrix::<f64>::zeros(d, 6);
            for b in 0..3 {
                for i in 0..d {
                    cols6[(i, 2 * b)] = f.j[b][(i, *k)];
                    cols6[(i, 2 * b + 1)] = f.j[b][(i, *l)];
                }
            }
            let rhs_v = DVector::from_fn(d, |i, _| m.get(i, *k, *l));
            lit = lit.max(lsq_residual(&cols6, &rhs_v));
            let mut cols8 = DMatrix::<f64>::zeros(d, 8);
            cols8.view_mut((0, 0), (d, 6)).copy_from(&cols6);
            cols8[(*k, 6)] = 1.0;
            cols8[(*l, 7)] = 1.0;
            ext = ext.max(lsq_residual(&cols8, &rhs_v));
        }
        cols[1].push(lit);
        cols[2].push(ext);
    }
    let series = vec![
        ResidualSeries::new("tensorial-fit", cols[0].clone()),
        ResidualSeries::new("pointwise-span", cols[1].clone()),
        ResidualSeries::new("pointwise-span-with-xy", cols[2].clone()),
    ];
    let tol = ctx.tol.first_order;
    let verdict = finish_residual(&frames, &series, tol);
    ctx.report(
        "zamkovoy-pq",
        "residual",
        tol,
        skipped,
        series,
        verdict,
        vec![],
    )
}

fn check_pqkt(ctx: &Ctx) -> CheckReport {
    let (frames, skipped) = ctx.frames(ctx.spec);
    let names = ["skew", "type-j1", "type-j2", "type-j3", "t02"];
    let mut cols: [Vec<f64>; 5] = Default::default();
    for f in &frames {
        let d = f.dim;
        let t = f.torsion();
        // Lowered torsion T(X, Y, Z) = g(T(X, Y), Z), storage (x, y, z).
        let mut tl = Tensor3::zeros(d);
        for x in 0..d {
            for y in 0..d {
                for z in 0..d {
                    let mut acc = 0.0;
                    for i in 0..d {
                        acc += f.g[(i, z)] * t.get(i, x, y);
                    }
                    tl.set(x, y, z, acc);
                }
            }
        }
        let mut skew = 0.0f64;
        for x in 0..d {
            for y in 0..d {
                for z in 0..d {
                    skew = skew
                        .max((tl.get(x, y, z) + tl.get(y, x, z)).abs())
                        .max((tl.get(x, y, z) + tl.get(x, z, y)).abs());
                }
            }
        }
        cols[0].push(skew);
        // Type conditions: alpha = 1, 2 carry a plus sign on the J-dressed
        // sum, the third structure a minus sign.
        for (slot, (a, sign)) in [(0usize, 1.0f64), (1, 1.0), (2, -1.0)].into_iter().enumerate() {
            let j = &f.j[a];
            let mut worst = 0.0f64;
            for x in 0..d {
                for y in 0..d {
                    for z in 0..d {
                        let mut jj_xy = 0.0;
                        for mm in 0..d {
                            for n in 0..d {
                                jj_xy += j[(mm, x)] * j[(n, y)] * tl.get(mm, n, z);
                            }
                        }
                        let mut jj_xz = 0.0;
                        for mm in 0..d {
                            for p in 0..d {
                                jj_xz += j[(mm, x)] * j[(p, z)] * tl.get(mm, y, p);
                            }
                        }
                        let mut jj_yz = 0.0;
                        for n in 0..d {
                            for p in 0..d {
                                jj_yz += j[(n, y)] * j[(p, z)] * tl.get(x, n, p);
                            }
                        }
                        let r = tl.get(x, y, z) + sign * (jj_xy + jj_xz + jj_yz);
                        worst = worst.max(r.abs());
                    }
                }
            }
            cols[slot + 1].push(worst);
        }
        let structures = sampled_structures(f, &ctx.minus_q, &ctx.plus_q);
        let t02 = structures
            .iter()
            .map(|(j, q)| proj02_normalized(&t, j, *q).max_abs())
            .fold(0.0f64, f64::max);
        cols[4].push(t02);
    }
    let series: Vec<ResidualSeries> = names
        .iter()
        .zip(cols)
        .map(|(n, c)| ResidualSeries::new(n, c))
        .collect();
    let tol = ctx.tol.first_order;
    let verdict = finish_residual(&frames, &series, tol);
    ctx.report("pqkt", "residual", tol, skipped, series, verdict, vec![])
}

fn check_cor_cur(ctx: &Ctx) -> CheckReport {
    let tol = ctx.tol.curvature;
    if ctx.spec.dim < 8 {
        return ctx.inapplicable(
            "cor-cur",
            "implication",
            tol,
            format!(
                "the torsion-to-curvature implication is a theorem for dimension >= 8; \
                 spec has dimension {}",
                ctx.spec.dim
            ),
        );
    }
    let (frames, skipped) = ctx.frames(ctx.spec);
    let mut premise = Vec::new();
    let mut conclusion = Vec::new();
    for f in &frames {
        let t = f.torsion();
        let structures = sampled_structures(f, &ctx.minus_q, &ctx.plus_q);
        let ltor = structures
            .iter()
            .map(|(j, q)| proj02_normalized(&t, j, *q).max_abs())
            .fold(0.0f64, f64::max);
        premise.push(ltor);
        let rho = f.ricci_forms(&f.riemann());
        conclusion.push(idric_max_residual(f, &rho));
    }
    let series = vec![
        ResidualSeries::new("ltor-premise", premise),
        ResidualSeries::new("idric-conclusion", conclusion),
    ];
    let premise_tol = ctx.tol.first_order;
    let (verdict, note) = if frames.is_empty() {
        (Verdict::Inconclusive, "no usable points".to_string())
    } else if series[0].max >= premise_tol {
        (
            Verdict::Inconclusive,
            format!(
                "premise not established (torsion (0,2)-part max {:.3e} >= {premise_tol:.1e}); \
                 implication is vacuous here",
                series[0].max
            ),
        )
    } else {
        let v = residual_verdict(&series[1..], tol);
        (v, "premise holds; verdict reflects the curvature identity".to_string())
    };
    ctx.report(
        "cor-cur",
        "implication",
        tol,
        skipped,
        series,
        verdict,
        vec![note],
    )
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

/// Run one check by its stable name.
pub fn run_check(
    name: &str,
    spec: &ManifoldSpec,
    opts: &CheckOptions,
) -> Result<CheckReport, ChecksError> {
    if !CHECK_NAMES.contains(&name) {
        return Err(ChecksError::UnknownCheck {
            name: name.to_string(),
            known: CHECK_NAMES.join(", "),
        });
    }
    let ctx = Ctx::new(spec, opts);
    Ok(match name {
        "par1" => check_par1(&ctx),
        "compat" => check_compat(&ctx),
        "ltor" => check_ltor(&ctx),
        "idric" => check_idric(&ctx),
        "theorem-four" => check_theorem_four(&ctx),
        "prop-t25" => check_prop_t25(&ctx),
        "cor-t27" => check_cor_t27(&ctx),
        "cor-t272" => check_cor_t272(&ctx),
        "zamkovoy-pq" => check_zamkovoy(&ctx),
        "pqkt" => check_pqkt(&ctx),
        "cor-cur" => check_cor_cur(&ctx),
        _ => unreachable!("name validated above"),
    })
}

/// Run a list of checks (or the applicable set when `names` is empty).
pub fn run_checks(
    names: &[String],
    spec: &ManifoldSpec,
    opts: &CheckOptions,
) -> Result<Vec<CheckReport>, ChecksError> {
    let selected: Vec<String> = if names.is_empty() {
        applicable_checks(spec).iter().map(|s| s.to_string()).collect()
    } else {
        names.to_vec()
    };
    selected
        .iter()
        .map(|n| run_check(n, spec, opts))
        .collect()
}
