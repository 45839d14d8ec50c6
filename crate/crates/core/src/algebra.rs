//! Para-quaternion algebra and the pointwise linear-algebra toolbox.
//!
//! The algebra is spanned by 1, j1, j2, j3 with j1^2 = j2^2 = 1, j3^2 = -1,
//! and j1 j2 = -j2 j1 = j3. An almost para-quaternionic structure is a triple
//! of endomorphisms (J1, J2, J3) satisfying the same relations fiberwise,
//! with epsilon weights (1, 1, -1) distinguishing the para-complex pair from
//! the complex one.
//!
//! This module owns everything that happens inside a single tangent space:
//! the model triple on flat space, sampling of the two unit hyperboloids in
//! the imaginary part, the (0,2)-part projector for J-Hermitian bilinear
//! data, and the decomposition of an endomorphism-valued 1-form into its
//! J-span and commutant components.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::tensor::{mat_max_abs, mat_max_abs_diff, Tensor3};

/// Signs of the squares: J1^2 = +1, J2^2 = +1, J3^2 = -1.
pub const EPS: [f64; 3] = [1.0, 1.0, -1.0];

/// Element `w + x j1 + y j2 + z j3` of the para-quaternion algebra.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParaQuaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl ParaQuaternion {
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    /// Algebra product. Derived from the table
    /// j1 j2 = j3, j2 j3 = -j1, j3 j1 = -j2 (and anticommutativity).
    pub fn mul(self, r: Self) -> Self {
        let a = self;
        let b = r;
        Self {
            w: a.w * b.w + a.x * b.x + a.y * b.y - a.z * b.z,
            x: a.w * b.x + a.x * b.w - a.y * b.z + a.z * b.y,
            y: a.w * b.y + a.y * b.w + a.x * b.z - a.z * b.x,
            z: a.w * b.z + a.z * b.w + a.x * b.y - a.y * b.x,
        }
    }

    pub fn conjugate(self) -> Self {
        Self {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// Real part of `q * conj(q)`: the split norm form `w^2 - x^2 - y^2 + z^2`.
    pub fn norm_form(self) -> f64 {
        self.w * self.w - self.x * self.x - self.y * self.y + self.z * self.z
    }
}

/// Purely imaginary para-quaternion `b1 j1 + b2 j2 + b3 j3`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImaginaryPq {
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
}

impl ImaginaryPq {
    pub fn new(b1: f64, b2: f64, b3: f64) -> Self {
        Self { b1, b2, b3 }
    }

    /// The quadratic form `b1^2 + b2^2 - b3^2`. An endomorphism built from
    /// coefficients `b` squares to this value times the identity.
    pub fn lorentz_norm(self) -> f64 {
        self.b1 * self.b1 + self.b2 * self.b2 - self.b3 * self.b3
    }

    /// Imaginary part of the algebra product of two imaginary elements
    /// (their real parts cancel pairwise for distinct units). This is the
    /// Lorentzian cross product of signature (+, +, -).
    pub fn cross(self, o: Self) -> Self {
        Self {
            b1: self.b3 * o.b2 - self.b2 * o.b3,
            b2: self.b1 * o.b3 - self.b3 * o.b1,
            b3: self.b1 * o.b2 - self.b2 * o.b1,
        }
    }
}

/// Which unit hyperboloid in the imaginary part to sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sheet {
    /// `lorentz_norm = +1`: coefficients of para-complex structures (square +1).
    Plus,
    /// `lorentz_norm = -1`: coefficients of complex structures (square -1).
    Minus,
}

/// Deterministic sample of `count` points on the chosen unit hyperboloid,
/// parameterized by `(t, theta)` with `t` uniform in `[-t_max, t_max]` and
/// `theta` uniform in `[0, 2*pi)`.
pub fn sample_hyperboloid(sheet: Sheet, count: usize, seed: u64, t_max: f64) -> Vec<ImaginaryPq> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let t: f64 = rng.gen_range(-t_max..=t_max);
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            match sheet {
                Sheet::Plus => ImaginaryPq::new(
                    t.cosh() * theta.cos(),
                    t.cosh() * theta.sin(),
                    t.sinh(),
                ),
                Sheet::Minus => ImaginaryPq::new(
                    t.sinh() * theta.cos(),
                    t.sinh() * theta.sin(),
                    t.cosh(),
                ),
            }
        })
        .collect()
}

#[derive(Debug, Error)]
pub enum AlgebraError {
    #[error("triple violates the product relations: max residual {residual:.3e}")]
    InvalidTriple { residual: f64 },
    #[error("dimension {dim} is not a positive multiple of 4")]
    BadDimension { dim: usize },
}

/// A pointwise triple of endomorphisms with the para-quaternionic relations.
#[derive(Clone, Debug)]
pub struct StructureTriple {
    pub j: [DMatrix<f64>; 3],
}

impl StructureTriple {
    /// Wrap three matrices after checking the product relations within `tol`:
    /// J1^2 = J2^2 = 1, J3^2 = -1, and J3 = J1 J2 = -J2 J1.
    pub fn new(j: [DMatrix<f64>; 3], tol: f64) -> Result<Self, AlgebraError> {
        let t = Self { j };
        let residual = t.relation_residual();
        if residual > tol {
            return Err(AlgebraError::InvalidTriple { residual });
        }
        Ok(t)
    }

    /// Wrap without validation (for inputs that are deliberately broken).
    pub fn new_unchecked(j: [DMatrix<f64>; 3]) -> Self {
        Self { j }
    }

    pub fn dim(&self) -> usize {
        self.j[0].nrows()
    }

    /// Max-abs residual over the full multiplication table of the triple.
    pub fn relation_residual(&self) -> f64 {
        let d = self.dim();
        let id = DMatrix::<f64>::identity(d, d);
        let [j1, j2, j3] = &self.j;
        let checks = [
            j1 * j1 - &id,
            j2 * j2 - &id,
            j3 * j3 + &id,
            j1 * j2 - j3,
            j2 * j1 + j3,
            j2 * j3 + j1,
            j3 * j2 - j1,
            j3 * j1 + j2,
            j1 * j3 - j2,
        ];
        checks.iter().map(mat_max_abs).fold(0.0, f64::max)
    }

    /// Linear combination `b1 J1 + b2 J2 + b3 J3`. Its square is
    /// `lorentz_norm(b)` times the identity whenever the triple is valid.
    pub fn combine(&self, b: ImaginaryPq) -> DMatrix<f64> {
        &self.j[0] * b.b1 + &self.j[1] * b.b2 + &self.j[2] * b.b3
    }
}

/// The model triple on flat split space, dimension `4n`, built block-diagonally
/// from the 4x4 representation acting on the algebra itself. The companion
/// metric is [`flat_metric`]; together they satisfy
/// `g(J1 X, J1 Y) = g(J2 X, J2 Y) = -g(X, Y)` and `g(J3 X, J3 Y) = g(X, Y)`.
pub fn standard_triple(dim: usize) -> Result<StructureTriple, AlgebraError> {
    if dim == 0 || dim % 4 != 0 {
        return Err(AlgebraError::BadDimension { dim });
    }
    #[rustfmt::skip]
    let blocks: [[[f64; 4]; 4]; 3] = [
        [[0.0, 0.0, -1.0, 0.0],
         [0.0, 0.0, 0.0, 1.0],
         [-1.0, 0.0, 0.0, 0.0],
         [0.0, 1.0, 0.0, 0.0]],
        [[0.0, 0.0, 0.0, -1.0],
         [0.0, 0.0, -1.0, 0.0],
         [0.0, -1.0, 0.0, 0.0],
         [-1.0, 0.0, 0.0, 0.0]],
        [[0.0, 1.0, 0.0, 0.0],
         [-1.0, 0.0, 0.0, 0.0],
         [0.0, 0.0, 0.0, 1.0],
         [0.0, 0.0, -1.0, 0.0]],
    ];
    let mut out: Vec<DMatrix<f64>> = Vec::with_capacity(3);
    for block in &blocks {
        let mut m = DMatrix::<f64>::zeros(dim, dim);
        for base in (0..dim).step_by(4) {
            for r in 0..4 {
                for c in 0..4 {
                    m[(base + r, base + c)] = block[r][c];
                }
            }
        }
        out.push(m);
    }
    let j: [DMatrix<f64>; 3] = out.try_into().expect("three blocks");
    StructureTriple::new(j, 0.0)
}

/// Flat split-signature metric `diag(1, 1, -1, -1, ...)` compatible with
/// [`standard_triple`].
pub fn flat_metric(dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |r, c| {
        if r != c {
            0.0
        } else if r % 4 < 2 {
            1.0
        } else {
            -1.0
        }
    })
}

/// Matrix commutator `[a, b] = ab - ba`.
pub fn commutator(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a * b - b * a
}

/// The (0,2)-part of a vector-valued bilinear form `B^i_{jk}` with respect to
/// an endomorphism `J` with `J^2 = eps * Id` (`eps = ±1`):
///
/// ```text
/// 4 B02(X, Y) = eps*B(X, Y) + B(JX, JY) - J B(JX, Y) - J B(X, JY)
/// ```
///
/// Applied to a form that is purely of type (0,2) this returns `eps * B`, so
/// the normalized projector is `eps` times this operator; applied to (1,1) or
/// (2,0) forms it returns zero.
pub fn proj02(b: &Tensor3, j: &DMatrix<f64>, eps: f64) -> Tensor3 {
    let d = b.dim();
    let mut out = Tensor3::zeros(d);
    for i in 0..d {
        for p in 0..d {
            for q in 0..d {
                let mut acc = eps * b.get(i, p, q);
                for m in 0..d {
                    for n in 0..d {
                        acc += b.get(i, m, n) * j[(m, p)] * j[(n, q)];
                    }
                    acc -= j[(i, m)]
                        * (0..d)
                            .map(|n| b.get(m, n, q) * j[(n, p)] + b.get(m, p, n) * j[(n, q)])
                            .sum::<f64>();
                }
                out.set(i, p, q, acc / 4.0);
            }
        }
    }
    out
}

/// Idempotent form of [`proj02`]: scales by `eps` so that genuine (0,2) input
/// is reproduced exactly.
pub fn proj02_normalized(b: &Tensor3, j: &DMatrix<f64>, eps: f64) -> Tensor3 {
    let mut out = proj02(b, j, eps);
    if eps < 0.0 {
        let d = out.dim();
        for i in 0..d {
            for p in 0..d {
                for q in 0..d {
                    out.set(i, p, q, -out.get(i, p, q));
                }
            }
        }
    }
    out
}

/// Decomposition of an endomorphism-valued 1-form `S_X` into the span of the
/// triple and its commutant:
///
/// ```text
/// S_X = s1(X) J1 + s2(X) J2 + s3(X) J3 + S0_X,   Tr(J_a S0_X) = 0
/// ```
#[derive(Clone, Debug)]
pub struct SpanSplit {
    /// `s[a][k] = s^{a+1}(e_k)`, coefficient 1-forms along J1, J2, J3.
    pub coeff: [DVector<f64>; 3],
    /// Trace-orthogonal remainder `S0`, indexed like the input (`k, i, j`).
    pub remainder: Tensor3,
}

/// Split `S` (indexed `S[k] = S_{e_k}` as an endomorphism `(i, j)`) along the
/// triple using the trace pairing `Tr(J_a J_b) = delta_ab * eps_a * dim`.
pub fn s_split(s: &Tensor3, triple: &StructureTriple) -> SpanSplit {
    let d = s.dim();
    let denom = d as f64;
    let mut coeff = [
        DVector::zeros(d),
        DVector::zeros(d),
        DVector::zeros(d),
    ];
    let mut remainder = s.clone();
    for k in 0..d {
        for a in 0..3 {
            // Tr(J_a S_k) = sum_{i,m} (J_a)^i_m S^m_{k i}
            let mut tr = 0.0;
            for i in 0..d {
                for m in 0..d {
                    tr += triple.j[a][(i, m)] * s.get(m, k, i);
                }
            }
            let c = EPS[a] * tr / denom;
            coeff[a][k] = c;
            for i in 0..d {
                for j in 0..d {
                    remainder.add_to(i, k, j, -c * triple.j[a][(i, j)]);
                }
            }
        }
    }
    SpanSplit { coeff, remainder }
}

/// Max-abs commutator of each `S0_{e_k}` with each `J_a`; zero exactly when
/// the remainder lies in the commutant of the triple.
pub fn commutant_residual(s0: &Tensor3, triple: &StructureTriple) -> f64 {
    let d = s0.dim();
    let mut worst: f64 = 0.0;
    for k in 0..d {
        let m = endo_slice(s0, k);
        for a in 0..3 {
            worst = worst.max(mat_max_abs(&commutator(&m, &triple.j[a])));
        }
    }
    worst
}

/// Extract `S_{e_k}` as a matrix from `S[i][k][j]` storage (deriv/argument
/// index in the middle).
pub fn endo_slice(s: &Tensor3, k: usize) -> DMatrix<f64> {
    let d = s.dim();
    DMatrix::from_fn(d, d, |i, j| s.get(i, k, j))
}

/// Max-abs difference helper re-exported for check code.
pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    mat_max_abs_diff(a, b)
}
