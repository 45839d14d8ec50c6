//! Built-in example manifolds exercising every check in both directions.
//!
//! Each entry carries a ready-to-run [`ManifoldSpec`] together with the table
//! of verdicts the checks produce for it under default options. The tables
//! are the regression surface of the engine: `expected_verdicts_reproduced`
//! replays every entry against [`crate::checks::run_check`] and demands an
//! exact match, so any convention change that silently flips a verdict fails
//! loudly here.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::algebra::{flat_metric, standard_triple};
use crate::checks::Verdict;
use crate::expr::{constant, parse_expr, ScalarExpr};
use crate::geometry::{ConnectionSpec, ExprMatrix, ExprTensor3, ManifoldSpec, Mode};
use crate::tensor::Tensor3;

/// A named example manifold with its frozen expected behavior.
#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub name: &'static str,
    /// What the entry is and which invariants it intentionally violates.
    pub summary: &'static str,
    pub spec: ManifoldSpec,
    /// Verdict per applicable check under default seed and tolerances.
    pub expected: Vec<(&'static str, Verdict)>,
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("unknown catalog entry `{name}`; known entries: {known}")]
    UnknownEntry { name: String, known: String },
}

/// Entry names in catalog order.
pub fn catalog_names() -> Vec<&'static str> {
    vec![
        "flat-r4",
        "conf-flat",
        "prod-surfaces",
        "prod-surfaces-asd",
        "frame-hpc-4d",
        "flat-r8",
        "flat-r8-pqkt",
        "perturbed-J",
    ]
}

/// All entries, in catalog order.
pub fn catalog_entries() -> Vec<CatalogEntry> {
    vec![
        flat_r4(),
        conf_flat(),
        prod_surfaces(),
        prod_surfaces_asd(),
        frame_hpc_4d(),
        flat_r8(),
        flat_r8_pqkt(),
        perturbed_j(),
    ]
}

/// Look up one entry by name.
pub fn catalog_get(name: &str) -> Result<CatalogEntry, CatalogError> {
    catalog_entries()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| CatalogError::UnknownEntry {
            name: name.to_string(),
            known: catalog_names().join(", "),
        })
}

/// Convenience: just the spec.
pub fn catalog_spec(name: &str) -> Result<ManifoldSpec, CatalogError> {
    Ok(catalog_get(name)?.spec)
}

fn chart_coords_4() -> Vec<String> {
    ["x", "y", "u", "v"].iter().map(|s| s.to_string()).collect()
}

fn chart_coords_n(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("x{i}")).collect()
}

fn const_matrix(m: &DMatrix<f64>) -> ExprMatrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| constant(m[(i, j)])).collect())
        .collect()
}

fn xp(src: &str, coords: &[String]) -> ScalarExpr {
    parse_expr(src, coords).expect("catalog expression parses")
}

fn zero_expr_tensor3(d: usize) -> ExprTensor3 {
    vec![vec![vec![constant(0.0); d]; d]; d]
}

const HOLDS: Verdict = Verdict::Holds;
const FAILS: Verdict = Verdict::Fails;
const INCONCLUSIVE: Verdict = Verdict::Inconclusive;

fn flat_r4() -> CatalogEntry {
    let triple = standard_triple(4).expect("dimension 4");
    let spec = ManifoldSpec {
        name: "flat-r4".into(),
        dim: 4,
        mode: Mode::Chart,
        coords: chart_coords_4(),
        g: const_matrix(&flat_metric(4)),
        j: [
            const_matrix(&triple.j[0]),
            const_matrix(&triple.j[1]),
            const_matrix(&triple.j[2]),
        ],
        connection: ConnectionSpec::LeviCivita,
        c: None,
        sample_box: vec![(-1.0, 1.0); 4],
        sample_points: 32,
    };
    CatalogEntry {
        name: "flat-r4",
        summary: "Flat neutral R^4 with the constant right-multiplication triple; \
                  every check holds and all curvature-level quantities vanish.",
        spec,
        expected: vec![
            ("par1", HOLDS),
            ("compat", HOLDS),
            ("ltor", HOLDS),
            ("idric", HOLDS),
            ("theorem-four", HOLDS),
            ("zamkovoy-pq", HOLDS),
            ("pqkt", HOLDS),
        ],
    }
}

fn conf_flat() -> CatalogEntry {
    let coords = chart_coords_4();
    let triple = standard_triple(4).expect("dimension 4");
    let eta = flat_metric(4);
    let g = (0..4)
        .map(|i| {
            (0..4)
                .map(|j| {
                    if i != j {
                        constant(0.0)
                    } else if eta[(i, i)] > 0.0 {
                        xp("exp(0.2*x*y)", &coords)
                    } else {
                        xp("-exp(0.2*x*y)", &coords)
                    }
                })
                .collect()
        })
        .collect();
    let spec = ManifoldSpec {
        name: "conf-flat".into(),
        dim: 4,
        mode: Mode::Chart,
        coords,
        g,
        j: [
            const_matrix(&triple.j[0]),
            const_matrix(&triple.j[1]),
            const_matrix(&triple.j[2]),
        ],
        connection: ConnectionSpec::LeviCivita,
        c: None,
        sample_box: vec![(-1.0, 1.0); 4],
        sample_points: 32,
    };
    CatalogEntry {
        name: "conf-flat",
        summary: "Conformally flat neutral metric exp(0.2*x*y)*eta with the constant \
                  standard triple: both dual Weyl halves vanish and the Ricci-form \
                  identity holds.",
        spec,
        expected: vec![
            ("par1", HOLDS),
            ("compat", HOLDS),
            ("ltor", HOLDS),
            ("idric", HOLDS),
            ("theorem-four", HOLDS),
            ("zamkovoy-pq", HOLDS),
            ("pqkt", HOLDS),
        ],
    }
}

/// Isothermal factor `1/(1 + q*(a^2 + b^2))` with the sign of `q` folded into
/// the text so it stays inside the expression grammar.
fn isothermal(q: f64, a: &str, b: &str) -> String {
    if q >= 0.0 {
        format!("1/(1 + {q:?}*({a}^2 + {b}^2))")
    } else {
        format!("1/(1 - {:?}*({a}^2 + {b}^2))", -q)
    }
}

/// Neutral product of two constant-curvature surfaces in isothermal
/// coordinates; the second block is negated, which flips its Gaussian
/// curvature to `+k2`. The Weyl tensor vanishes iff `k1 + k2 = 0`.
fn prod_surfaces_spec(name: &str, k1: f64, k2: f64) -> ManifoldSpec {
    let coords = chart_coords_4();
    let lam = isothermal(k1 / 4.0, "x", "y");
    let mu = isothermal(-k2 / 4.0, "u", "v");
    let zero = constant(0.0);
    let mut g = vec![vec![zero.clone(); 4]; 4];
    g[0][0] = xp(&format!("({lam})^2"), &coords);
    g[1][1] = xp(&format!("({lam})^2"), &coords);
    g[2][2] = xp(&format!("-(({mu})^2)"), &coords);
    g[3][3] = xp(&format!("-(({mu})^2)"), &coords);
    let mut j1 = vec![vec![zero.clone(); 4]; 4];
    j1[0][2] = xp(&format!("-(({mu})/({lam}))"), &coords);
    j1[1][3] = xp(&format!("({mu})/({lam})"), &coords);
    j1[2][0] = xp(&format!("-(({lam})/({mu}))"), &coords);
    j1[3][1] = xp(&format!("({lam})/({mu})"), &coords);
    let mut j2 = vec![vec![zero.clone(); 4]; 4];
    j2[0][3] = xp(&format!("-(({mu})/({lam}))"), &coords);
    j2[1][2] = xp(&format!("-(({mu})/({lam}))"), &coords);
    j2[2][1] = xp(&format!("-(({lam})/({mu}))"), &coords);
    j2[3][0] = xp(&format!("-(({lam})/({mu}))"), &coords);
    let mut j3m = DMatrix::zeros(4, 4);
    j3m[(0, 1)] = 1.0;
    j3m[(1, 0)] = -1.0;
    j3m[(2, 3)] = 1.0;
    j3m[(3, 2)] = -1.0;
    ManifoldSpec {
        name: name.into(),
        dim: 4,
        mode: Mode::Chart,
        coords,
        g,
        j: [j1, j2, const_matrix(&j3m)],
        connection: ConnectionSpec::LeviCivita,
        c: None,
        sample_box: vec![(-1.0, 1.0); 4],
        sample_points: 32,
    }
}

fn prod_surfaces() -> CatalogEntry {
    CatalogEntry {
        name: "prod-surfaces",
        summary: "Neutral product of two curvature-1 surfaces (second factor negated): \
                  not anti-self-dual, so the duality indicator and the Ricci-form \
                  identity fail together (the agreement check still holds).",
        spec: prod_surfaces_spec("prod-surfaces", 1.0, 1.0),
        expected: vec![
            ("par1", HOLDS),
            ("compat", HOLDS),
            ("ltor", HOLDS),
            ("idric", FAILS),
            ("theorem-four", HOLDS),
            ("zamkovoy-pq", HOLDS),
            ("pqkt", HOLDS),
        ],
    }
}

fn prod_surfaces_asd() -> CatalogEntry {
    CatalogEntry {
        name: "prod-surfaces-asd",
        summary: "Opposite-curvature product (k2 = -k1): the Weyl tensor vanishes \
                  identically, the frozen golden for the anti-self-dual branch.",
        spec: prod_surfaces_spec("prod-surfaces-asd", 1.0, -1.0),
        expected: vec![
            ("par1", HOLDS),
            ("compat", HOLDS),
            ("ltor", HOLDS),
            ("idric", HOLDS),
            ("theorem-four", HOLDS),
            ("zamkovoy-pq", HOLDS),
            ("pqkt", HOLDS),
        ],
    }
}

fn frame_hpc_4d() -> CatalogEntry {
    // Solvable algebra R acting as the identity on R^3:
    // [e1, e2] = e2, [e1, e3] = e3, [e1, e4] = e4.
    let mut c = Tensor3::zeros(4);
    for i in 1..4 {
        c.set(i, 0, i, 1.0);
        c.set(i, i, 0, -1.0);
    }
    let mut g = DMatrix::zeros(4, 4);
    g[(0, 3)] = 1.0;
    g[(3, 0)] = 1.0;
    g[(1, 2)] = -1.0;
    g[(2, 1)] = -1.0;
    let j1 = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, -1.0, -1.0]));
    let mut j3 = DMatrix::zeros(4, 4);
    j3[(2, 0)] = 1.0;
    j3[(3, 1)] = 1.0;
    j3[(0, 2)] = -1.0;
    j3[(1, 3)] = -1.0;
    let j2 = &j1 * &j3;
    let spec = ManifoldSpec {
        name: "frame-hpc-4d".into(),
        dim: 4,
        mode: Mode::Frame,
        coords: chart_coords_n(4),
        g: const_matrix(&g),
        j: [const_matrix(&j1), const_matrix(&j2), const_matrix(&j3)],
        connection: ConnectionSpec::LeviCivita,
        c: Some(c),
        sample_box: vec![(-1.0, 1.0); 4],
        sample_points: 32,
    };
    CatalogEntry {
        name: "frame-hpc-4d",
        summary: "Left-invariant frame on the solvable group R x_id R^3 with an \
                  integrable hyper-paracomplex triple (all three Nijenhuis tensors \
                  vanish) and a compatible neutral metric.",
        spec,
        expected: vec![
            ("par1", HOLDS),
            ("compat", HOLDS),
            ("ltor", HOLDS),
            ("idric", HOLDS),
            ("theorem-four", HOLDS),
            ("zamkovoy-pq", HOLDS),
            ("pqkt", HOLDS),
        ],
    }
}

fn flat_r8() -> CatalogEntry {
    let triple = standard_triple(8).expect("dimension 8");
    let spec = ManifoldSpec {
        name: "flat-r8".into(),
        dim: 8,
        mode: Mode::Chart,
        coords: chart_coords_n(8),
        g: const_matrix(&flat_metric(8)),
        j: [
            const_matrix(&triple.j[0]),
            const_matrix(&triple.j[1]),
            const_matrix(&triple.j[2]),
        ],
        connection: ConnectionSpec::LeviCivita,
        c: None,
        sample_box: vec![(-1.0, 1.0); 8],
        sample_points: 32,
    };
    CatalogEntry {
        name: "flat-r8",
        summary: "Flat neutral R^8 (two standard 4-blocks); the baseline on which \
                  every applicable check holds, including the torsion-to-curvature \
                  implication.",
        spec,
        expected: vec![
            ("par1", HOLDS),
            ("compat", HOLDS),
            ("ltor", HOLDS),
            ("idric", HOLDS),
            ("zamkovoy-pq", HOLDS),
            ("pqkt", HOLDS),
            ("cor-cur", HOLDS),
        ],
    }
}

/// Cotangent algebra of the Heisenberg-plus-line group: `g = h3 + R` acting on
/// `g*` by coadjoint action, with the canonical pairing metric. Basis
/// `E1..E4, F1..F4`; brackets `[E1,E2] = E3`, `[E1,F3] = -F2`, `[E2,F3] = F1`.
///
/// Two-step nilpotency makes the pairing metric flat (Levi-Civita curvature
/// is identically zero), and Levi-Civita is `Gamma = c/2`, so the connection
/// `LC + S` with `S = -c/2` is the flat left-invariant parallelism: it
/// preserves the metric and every constant structure, and its torsion is the
/// totally skew 3-form `T = -c`, which satisfies all three mixed-type
/// conditions exactly.
fn flat_r8_pqkt() -> CatalogEntry {
    let d = 8;
    let mut c = Tensor3::zeros(d);
    let mut setb = |i: usize, j: usize, k: usize, v: f64| {
        c.set(i, j, k, v);
        c.set(i, k, j, -v);
    };
    setb(2, 0, 1, 1.0); // [E1, E2] = E3
    setb(5, 0, 6, -1.0); // [E1, F3] = -F2
    setb(4, 1, 6, 1.0); // [E2, F3] = F1
    let mut g = DMatrix::zeros(d, d);
    for i in 0..4 {
        g[(i, 4 + i)] = 1.0;
        g[(4 + i, i)] = 1.0;
    }
    // J1 swaps the group and dual blocks through the symplectic pairing
    // e1 <-> e3, e2 <-> e4 (W^2 = -I, so the inverse block is -W).
    let mut w = DMatrix::zeros(4, 4);
    w[(0, 2)] = 1.0;
    w[(2, 0)] = -1.0;
    w[(1, 3)] = 1.0;
    w[(3, 1)] = -1.0;
    let mut j1 = DMatrix::zeros(d, d);
    let mut j2 = DMatrix::zeros(d, d);
    for i in 0..4 {
        for j in 0..4 {
            j1[(i, 4 + j)] = -w[(i, j)];
            j1[(4 + i, j)] = w[(i, j)];
        }
        j2[(i, i)] = 1.0;
        j2[(4 + i, 4 + i)] = -1.0;
    }
    let j3 = &j1 * &j2;
    // S = -c/2, entries as expressions.
    let mut s = zero_expr_tensor3(d);
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                let v = c.get(i, j, k);
                if v != 0.0 {
                    s[i][j][k] = constant(-0.5 * v);
                }
            }
        }
    }
    let spec = ManifoldSpec {
        name: "flat-r8-pqkt".into(),
        dim: d,
        mode: Mode::Frame,
        coords: chart_coords_n(d),
        g: const_matrix(&g),
        j: [const_matrix(&j1), const_matrix(&j2), const_matrix(&j3)],
        connection: ConnectionSpec::LeviCivitaPlusS { s },
        c: Some(c),
        sample_box: vec![(-1.0, 1.0); d],
        sample_points: 32,
    };
    CatalogEntry {
        name: "flat-r8-pqkt",
        summary: "Cotangent algebra of the Heisenberg-plus-line group with its \
                  canonical neutral pairing: the metric is flat, and Levi-Civita \
                  minus half the bracket is the flat left-invariant parallelism, \
                  whose torsion is a nonzero totally skew 3-form of pure mixed \
                  type. The potential bundles prop-t25 and cor-t27 vanish on both \
                  sides here; cor-t272 records a decisive split because S = -c/2 \
                  is not of the span-reduced shape its flipped-commutator form \
                  presupposes.",
        spec,
        expected: vec![
            ("par1", HOLDS),
            ("compat", HOLDS),
            ("ltor", HOLDS),
            ("idric", HOLDS),
            ("prop-t25", HOLDS),
            ("cor-t27", HOLDS),
            ("cor-t272", FAILS),
            ("zamkovoy-pq", HOLDS),
            ("pqkt", HOLDS),
            ("cor-cur", HOLDS),
        ],
    }
}

fn perturbed_j() -> CatalogEntry {
    let coords = chart_coords_4();
    let triple = standard_triple(4).expect("dimension 4");
    let mut j1 = const_matrix(&triple.j[0]);
    // Basis-mixing shear: bends J1 toward the J3-plane with a coordinate-
    // dependent coefficient. Diagonal-block perturbations keep the Nijenhuis
    // tensors zero; this one does not.
    j1[0][1] = xp("0.1*sin(u)", &coords);
    let spec = ManifoldSpec {
        name: "perturbed-J".into(),
        dim: 4,
        mode: Mode::Chart,
        coords,
        g: const_matrix(&flat_metric(4)),
        j: [
            j1,
            const_matrix(&triple.j[1]),
            const_matrix(&triple.j[2]),
        ],
        connection: ConnectionSpec::LeviCivita,
        c: None,
        sample_box: vec![(-1.0, 1.0); 4],
        sample_points: 32,
    };
    CatalogEntry {
        name: "perturbed-J",
        summary: "flat-r4 with J1 bent by the shear 0.1*sin(u) in the (x, y) block: \
                  intentionally violates the squared-structure identities (par1, \
                  compat) and span membership (zamkovoy-pq); the metric itself stays \
                  flat, so curvature-level checks still hold. The duality-split \
                  comparison comes back inconclusive because the broken J1 no \
                  longer produces an antisymmetric fundamental form, so its \
                  orientation gate skips every sample point.",
        spec,
        expected: vec![
            ("par1", FAILS),
            ("compat", FAILS),
            ("ltor", HOLDS),
            ("idric", HOLDS),
            ("theorem-four", INCONCLUSIVE),
            ("zamkovoy-pq", FAILS),
            ("pqkt", HOLDS),
        ],
    }
}
