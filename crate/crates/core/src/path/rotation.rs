//! One-parameter rotation families `R(t) = Q · exp(t L) · Qᵗ` with `L` a sum of
//! planar blocks. Every `R(t)` is orthogonal to rounding because it is built
//! from Givens factors rather than re-orthonormalised.

use nalgebra::{DMatrix, DVector};

use super::{samples_for, unit_grid, PathSegment, SegmentKind};
use crate::error::{Error, Result};
use crate::grassmann::Frame;
use crate::linalg::givens;

#[derive(Debug, Clone, PartialEq)]
pub struct RotationFamily {
    basis: DMatrix<f64>,
    /// Disjoint coordinate planes `(i, j)` of the basis with full angles.
    planes: Vec<(usize, usize, f64)>,
}

impl RotationFamily {
    pub fn identity(k: usize) -> Self {
        Self {
            basis: DMatrix::identity(k, k),
            planes: Vec::new(),
        }
    }

    /// Rotation by `angle` in the coordinate plane `(i, j)` of `ℝᵏ`.
    pub fn plane(k: usize, i: usize, j: usize, angle: f64) -> Self {
        Self {
            basis: DMatrix::identity(k, k),
            planes: vec![(i, j, angle)],
        }
    }

    /// The rotation in `span{u, v}` carrying `u` to `v` (equal norms assumed);
    /// identity when they already agree, and a half turn in some plane
    /// containing `u` when `v = -u`.
    pub fn carrying(u: &DVector<f64>, v: &DVector<f64>) -> Self {
        let k = u.len();
        let nu = u.norm();
        if nu < 1e-14 || (u - v).norm() <= 1e-15 * nu.max(1.0) {
            return Self::identity(k);
        }
        let e1 = u / nu;
        let mut w = v - &e1 * e1.dot(v);
        if w.norm() < 1e-12 * nu {
            let axis = (0..k)
                .min_by(|&a, &b| e1[a].abs().total_cmp(&e1[b].abs()))
                .unwrap_or(0);
            w = DVector::zeros(k);
            w[axis] = 1.0;
            w -= &e1 * e1[axis];
        }
        let e2 = w.normalize();
        let angle = e2.dot(v).atan2(e1.dot(v));
        Self {
            basis: complete_basis(&[e1, e2]),
            planes: vec![(0, 1, angle)],
        }
    }

    /// Decomposes `A ∈ SO(k)` into planar rotation angles through its real
    /// Schur form; pairs of `-1` eigenvalues become half turns.
    pub fn from_matrix(a: &DMatrix<f64>) -> Result<Self> {
        let k = a.nrows();
        if a.ncols() != k {
            return Err(Error::NotSpecialOrthogonal("not square".into()));
        }
        let orth = (a.transpose() * a - DMatrix::<f64>::identity(k, k)).norm();
        let det = a.determinant();
        if orth > 1e-10 || (det - 1.0).abs() > 1e-10 {
            return Err(Error::NotSpecialOrthogonal(format!(
                "‖AᵗA - I‖ = {orth:e}, det = {det}"
            )));
        }
        if k == 1 {
            return Ok(Self::identity(1));
        }
        let (q, t) = nalgebra::linalg::Schur::new(a.clone()).unpack();
        let mut planes = Vec::new();
        let mut flips = Vec::new();
        let mut i = 0;
        while i < k {
            if i + 1 < k && t[(i + 1, i)].abs() > 1e-12 {
                let angle = (t[(i + 1, i)] - t[(i, i + 1)]).atan2(t[(i, i)] + t[(i + 1, i + 1)]);
                planes.push((i, i + 1, angle));
                i += 2;
            } else {
                if t[(i, i)] < 0.0 {
                    flips.push(i);
                }
                i += 1;
            }
        }
        if flips.len() % 2 != 0 {
            return Err(Error::NotSpecialOrthogonal(
                "odd number of -1 eigenvalues".into(),
            ));
        }
        for pair in flips.chunks(2) {
            planes.push((pair[0], pair[1], std::f64::consts::PI));
        }
        let family = Self { basis: q, planes };
        let err = (family.at(1.0) - a).norm();
        if err > 1e-9 {
            return Err(Error::NotSpecialOrthogonal(format!(
                "angle decomposition misses A by {err:e}"
            )));
        }
        Ok(family)
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn at(&self, t: f64) -> DMatrix<f64> {
        let k = self.dim();
        let mut inner = DMatrix::identity(k, k);
        for &(i, j, angle) in &self.planes {
            inner = givens(k, i, j, t * angle) * inner;
        }
        &self.basis * inner * self.basis.transpose()
    }

    /// `Ω` with `R(t) = exp(t Ω)`.
    pub fn generator(&self) -> DMatrix<f64> {
        let k = self.dim();
        let mut l = DMatrix::zeros(k, k);
        for &(i, j, angle) in &self.planes {
            l[(j, i)] = angle;
            l[(i, j)] = -angle;
        }
        &self.basis * l * self.basis.transpose()
    }

    pub fn inverse(&self) -> Self {
        Self {
            basis: self.basis.clone(),
            planes: self.planes.iter().map(|&(i, j, a)| (i, j, -a)).collect(),
        }
    }

    /// Sampled segment rotating only `columns` of `f` by `R(t)`, `t ∈ [0, 1]`.
    pub fn segment(&self, f: &Frame, columns: &[usize]) -> PathSegment {
        let omega = self.generator();
        let block = DMatrix::from_columns(
            &columns
                .iter()
                .map(|&c| f.0.column(c).into_owned())
                .collect::<Vec<_>>(),
        );
        let length = (&omega * &block).norm();
        let frames = unit_grid(samples_for(length))
            .map(|t| {
                let r = self.at(t);
                let mut m = f.0.clone();
                for (b, &c) in columns.iter().enumerate() {
                    m.set_column(c, &(&r * block.column(b)));
                }
                Frame(m)
            })
            .collect();
        PathSegment {
            kind: SegmentKind::BlockRotation {
                columns: columns.to_vec(),
                generator: super::matrix_rows(&omega),
            },
            frames,
        }
    }
}

/// Orthonormal basis of `ℝᵏ` whose leading columns are the given orthonormal
/// vectors.
fn complete_basis(leading: &[DVector<f64>]) -> DMatrix<f64> {
    let k = leading[0].len();
    let mut cols: Vec<DVector<f64>> = leading.to_vec();
    for axis in 0..k {
        if cols.len() == k {
            break;
        }
        let mut e = DVector::zeros(k);
        e[axis] = 1.0;
        for _ in 0..2 {
            for c in &cols {
                let proj = c.dot(&e);
                e -= c * proj;
            }
        }
        let norm = e.norm();
        if norm > 1e-8 {
            cols.push(e / norm);
        }
    }
    DMatrix::from_columns(&cols)
}

/// A path `R: [0,1] → SO(k)` with `R(0) = I`, `R(1) = A`.
pub fn so_k_path(a: &DMatrix<f64>) -> Result<RotationFamily> {
    RotationFamily::from_matrix(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::random_frame;
    use crate::linalg::{diag_matrix, special_procrustes};
    use proptest::prelude::*;

    fn is_rotation(r: &DMatrix<f64>) -> bool {
        let k = r.nrows();
        (r.transpose() * r - DMatrix::<f64>::identity(k, k)).norm() < 1e-12
            && (r.determinant() - 1.0).abs() < 1e-12
    }

    #[test]
    fn identity_is_constant() {
        let fam = so_k_path(&DMatrix::identity(3, 3)).unwrap();
        for t in [0.0, 0.3, 1.0] {
            assert!((fam.at(t) - DMatrix::<f64>::identity(3, 3)).norm() < 1e-14);
        }
    }

    #[test]
    fn planar_rotation_interpolates_angle() {
        let theta = 1.1;
        let fam = so_k_path(&givens(2, 0, 1, theta)).unwrap();
        for t in [0.0, 0.25, 0.5, 1.0] {
            assert!((fam.at(t) - givens(2, 0, 1, t * theta)).norm() < 1e-12);
        }
    }

    #[test]
    fn minus_identity_is_a_half_turn() {
        let fam = so_k_path(&diag_matrix(&[-1.0, -1.0])).unwrap();
        let half = fam.at(0.5);
        assert!(half[(0, 0)].abs() < 1e-12 && (half[(1, 0)].abs() - 1.0).abs() < 1e-12);
        assert!((fam.at(1.0) + DMatrix::<f64>::identity(2, 2)).norm() < 1e-12);
        let fam4 = so_k_path(&diag_matrix(&[1.0, -1.0, 1.0, -1.0])).unwrap();
        assert!((fam4.at(1.0) - diag_matrix(&[1.0, -1.0, 1.0, -1.0])).norm() < 1e-12);
    }

    #[test]
    fn rejects_reflections() {
        assert!(matches!(
            so_k_path(&diag_matrix(&[1.0, -1.0])),
            Err(Error::NotSpecialOrthogonal(_))
        ));
        assert!(so_k_path(&(DMatrix::identity(2, 2) * 1.1)).is_err());
    }

    #[test]
    fn carrying_maps_u_to_v() {
        let u = DVector::from_column_slice(&[1.0, 0.0, 0.0]);
        for v in [
            DVector::from_column_slice(&[0.0, 1.0, 0.0]),
            DVector::from_column_slice(&[-1.0, 0.0, 0.0]),
            DVector::from_column_slice(&[0.6, 0.0, 0.8]),
        ] {
            let fam = RotationFamily::carrying(&u, &v);
            assert!((fam.at(1.0) * &u - &v).norm() < 1e-14);
            assert!(is_rotation(&fam.at(0.37)));
        }
    }

    proptest! {
        #[test]
        fn random_rotations_decompose(seed in 0u64..10_000, k in 2usize..7) {
            let q = random_frame(k, k, seed).0;
            // nearest rotation to a random orthogonal matrix
            let a = special_procrustes(&q, &DMatrix::identity(k, k));
            let fam = so_k_path(&a).unwrap();
            prop_assert!((fam.at(1.0) - &a).norm() < 1e-9);
            prop_assert!(is_rotation(&fam.at(0.5)));
            prop_assert!((fam.at(0.0) - DMatrix::<f64>::identity(k, k)).norm() < 1e-12);
        }

        #[test]
        fn block_rotation_preserves_tightness(seed in 0u64..10_000, angle in -3.0f64..3.0) {
            // two orthonormal-row blocks scaled by 1/√2 each: any rotation of
            // one block alone keeps F Fᵗ = I
            let a = random_frame(3, 3, seed).0 * std::f64::consts::FRAC_1_SQRT_2;
            let b = random_frame(4, 3, seed + 1).0 * std::f64::consts::FRAC_1_SQRT_2;
            let mut m = DMatrix::zeros(3, 7);
            m.columns_mut(0, 3).copy_from(&a);
            m.columns_mut(3, 4).copy_from(&b);
            let f = Frame(m);
            let axis = DVector::from_column_slice(&[1.0, 2.0, -0.5]).normalize();
            let other = DVector::from_column_slice(&[angle.cos(), 0.0, angle.sin()]);
            let fam = RotationFamily::carrying(&axis, &other);
            let seg = fam.segment(&f, &[3, 4, 5, 6]);
            for g in &seg.frames {
                prop_assert!(g.tight_residual() < 1e-9);
                prop_assert!(g.norm_residual(&f.norms_squared()) < 1e-12);
            }
        }
    }
}
