//! Frames (points of the Stiefel manifold), projection matrices (points of the
//! Grassmannian) and the maps between them.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::hypersimplex::DiagonalTarget;
use crate::linalg::{permutation_matrix, row_orthonormality_residual, sym_eigen_desc};
use crate::tol::{TOL_SPECTRAL, TOL_VERIFY};

/// A `k × n` real matrix whose columns are the frame vectors. Tightness
/// (`F Fᵗ = I_k`) is checked by the operations that need it, so a `Frame`
/// may also carry a candidate that fails it.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame(pub DMatrix<f64>);

impl Frame {
    pub fn new(m: DMatrix<f64>) -> Self {
        Self(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if k == 0 || n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::ShapeMismatch("frame rows must be non-empty and equally long".into()));
        }
        Ok(Self(DMatrix::from_fn(k, n, |i, j| rows[i][j])))
    }

    pub fn k(&self) -> usize {
        self.0.nrows()
    }

    pub fn n(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.k())
            .map(|i| self.0.row(i).iter().copied().collect())
            .collect()
    }

    /// `‖F Fᵗ - I_k‖_F`.
    pub fn tight_residual(&self) -> f64 {
        row_orthonormality_residual(&self.0)
    }

    pub fn norms_squared(&self) -> Vec<f64> {
        self.0.column_iter().map(|c| c.norm_squared()).collect()
    }

    /// `max_j |‖f_j‖² - d_j|`.
    pub fn norm_residual(&self, d: &[f64]) -> f64 {
        self.norms_squared()
            .iter()
            .zip(d)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn require_tight(&self, tol: f64) -> Result<()> {
        let r = self.tight_residual();
        if r <= tol {
            Ok(())
        } else {
            Err(Error::FrameInvariantViolation(format!(
                "‖FFᵗ - I‖ = {r:e} > {tol:e}"
            )))
        }
    }

    /// Left action of a `k × k` matrix.
    pub fn left(&self, a: &DMatrix<f64>) -> Frame {
        Frame(a * &self.0)
    }

    /// Frame whose column `perm[j]` is column `j` of `self`.
    pub fn scatter_columns(&self, perm: &[usize]) -> Frame {
        let mut m = DMatrix::zeros(self.k(), self.n());
        for (j, &target) in perm.iter().enumerate() {
            m.set_column(target, &self.0.column(j));
        }
        Frame(m)
    }

    pub fn distance(&self, other: &Frame) -> f64 {
        (&self.0 - &other.0).norm()
    }
}

#[derive(Serialize, Deserialize)]
struct FrameJson {
    k: usize,
    n: usize,
    rows: Vec<Vec<f64>>,
}

impl Serialize for Frame {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FrameJson {
            k: self.k(),
            n: self.n(),
            rows: self.rows(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Frame {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = FrameJson::deserialize(de)?;
        let f = Frame::from_rows(&raw.rows).map_err(serde::de::Error::custom)?;
        if f.k() != raw.k || f.n() != raw.n {
            return Err(serde::de::Error::custom("declared k/n do not match rows"));
        }
        Ok(f)
    }
}

/// An `n × n` symmetric idempotent matrix (orthogonal projection onto a
/// `k`-dimensional subspace).
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionPoint(pub DMatrix<f64>);

impl ProjectionPoint {
    pub fn new(m: DMatrix<f64>) -> Self {
        Self(m)
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.0.diagonal().iter().copied().collect()
    }

    pub fn rank(&self) -> usize {
        self.0.trace().round().max(0.0) as usize
    }

    /// Largest of the symmetry, idempotency and integrality-of-trace residuals.
    pub fn residual(&self) -> f64 {
        let m = &self.0;
        let sym = (m - m.transpose()).norm();
        let idem = (m * m - m).norm();
        let tr = m.trace();
        sym.max(idem).max((tr - tr.round()).abs())
    }

    /// Validates the projection invariants and returns the rank.
    pub fn require_valid(&self, tol: f64) -> Result<usize> {
        if !self.0.is_square() {
            return Err(Error::ProjectionInvariantViolation("not square".into()));
        }
        let r = self.residual();
        if r > tol {
            return Err(Error::ProjectionInvariantViolation(format!(
                "residual {r:e} > {tol:e}"
            )));
        }
        let k = self.rank();
        if k == 0 {
            return Err(Error::ProjectionInvariantViolation("rank zero".into()));
        }
        Ok(k)
    }

    /// Chordal (Frobenius) distance.
    pub fn distance(&self, other: &ProjectionPoint) -> f64 {
        (&self.0 - &other.0).norm()
    }

    /// `g P g⁻¹` with `g e_i = e_{σ(i)}`.
    pub fn conjugate_by_permutation(&self, sigma: &[usize]) -> ProjectionPoint {
        let g = permutation_matrix(sigma);
        ProjectionPoint(&g * &self.0 * g.transpose())
    }
}

#[derive(Serialize, Deserialize)]
struct ProjectionJson {
    size: usize,
    rows: Vec<Vec<f64>>,
}

impl Serialize for ProjectionPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.size();
        ProjectionJson {
            size: n,
            rows: (0..n)
                .map(|i| self.0.row(i).iter().copied().collect())
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProjectionPoint {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = ProjectionJson::deserialize(de)?;
        let n = raw.size;
        if raw.rows.len() != n || raw.rows.iter().any(|r| r.len() != n) {
            return Err(serde::de::Error::custom("projection rows must be size × size"));
        }
        Ok(ProjectionPoint(DMatrix::from_fn(n, n, |i, j| raw.rows[i][j])))
    }
}

/// `F ↦ Fᵗ F`, the projection onto the row space of `F`.
pub fn gram(f: &Frame) -> Result<ProjectionPoint> {
    f.require_tight(TOL_VERIFY)?;
    Ok(ProjectionPoint(f.0.transpose() * &f.0))
}

/// The diagonal of a projection, with rank `round(tr P)`.
pub fn schur_horn(p: &ProjectionPoint) -> Result<DiagonalTarget> {
    let k = p.require_valid(TOL_VERIFY)?;
    DiagonalTarget::new(k, p.diagonal())
}

pub fn column_norms_squared(f: &Frame) -> Result<DiagonalTarget> {
    f.require_tight(TOL_VERIFY)?;
    DiagonalTarget::new(f.k(), f.norms_squared())
}

/// `P ↦ I - P`.
pub fn complement(p: &ProjectionPoint) -> Result<ProjectionPoint> {
    let n = p.size();
    let k = p.require_valid(TOL_VERIFY)?;
    if k == n {
        return Err(Error::ProjectionInvariantViolation(
            "complement of the full space has rank zero".into(),
        ));
    }
    Ok(ProjectionPoint(DMatrix::identity(n, n) - &p.0))
}

/// Height function `tr(P · Diag(a)) = Σ a_i P_ii`.
pub fn height(p: &ProjectionPoint, a: &[f64]) -> Result<f64> {
    if a.len() != p.size() {
        return Err(Error::DimensionMismatch {
            expected: p.size(),
            got: a.len(),
        });
    }
    p.require_valid(TOL_VERIFY)?;
    Ok(p.0.diagonal().iter().zip(a).map(|(x, y)| x * y).sum())
}

/// A frame `F` with `Fᵗ F = P`: rows are an orthonormal eigenbasis of the
/// eigenvalue-1 eigenspace.
pub fn factor_projection(p: &ProjectionPoint) -> Result<Frame> {
    let k = p.require_valid(TOL_VERIFY)?;
    let (values, vectors) = sym_eigen_desc(&p.0);
    let n = p.size();
    for (i, &v) in values.iter().enumerate() {
        let expected_high = i < k;
        if (v - 0.5).abs() < TOL_SPECTRAL || (v > 0.5) != expected_high {
            return Err(Error::SpectralGapTooSmall {
                eigenvalue: v,
                gap: TOL_SPECTRAL,
            });
        }
    }
    let top = vectors.columns(0, k).transpose();
    debug_assert_eq!(top.ncols(), n);
    Ok(Frame(top))
}

/// Row-orthonormalised i.i.d. Gaussian `k × n` matrix; the distribution is
/// invariant under `O(k) × O(n)`.
pub fn random_frame(n: usize, k: usize, seed: u64) -> Frame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_frame_with(n, k, &mut rng)
}

pub fn random_frame_with<R: rand::Rng>(n: usize, k: usize, rng: &mut R) -> Frame {
    assert!(k >= 1 && k <= n, "need 1 <= k <= n");
    loop {
        let g = DMatrix::<f64>::from_fn(n, k, |_, _| StandardNormal.sample(rng));
        let qr = g.qr();
        let r = qr.r();
        if (0..k).any(|i| r[(i, i)].abs() < 1e-10) {
            continue;
        }
        let mut q = qr.q();
        for i in 0..k {
            if r[(i, i)] < 0.0 {
                q.column_mut(i).neg_mut();
            }
        }
        return Frame(q.transpose());
    }
}
