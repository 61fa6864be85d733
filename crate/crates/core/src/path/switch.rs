//! Interchanging two equal-norm columns that lie in complementary scaled
//! tight blocks.

use nalgebra::{DMatrix, DVector};

use super::rotation::RotationFamily;
use super::FramePath;
use crate::error::{Error, Result};
use crate::grassmann::Frame;
use crate::hypersimplex::DiagonalTarget;
use crate::tol::TOL_PATH;

/// `Σ_{j ∈ S} f_j f_jᵗ`.
pub fn block_gram(f: &Frame, columns: &[usize]) -> DMatrix<f64> {
    let k = f.k();
    let mut g = DMatrix::zeros(k, k);
    for &c in columns {
        let col = f.0.column(c);
        g += col * col.transpose();
    }
    g
}

/// Path from `F` to `F` with columns `part_i[0]` and `part_j[0]` interchanged.
///
/// The columns in `part_i` must form `α ·` (tight frame) and those in `part_j`
/// `β ·` (tight frame), `α² + β² = 1`, and the two heads must have equal norms.
/// Stage one rotates the whole `part_i` block by `A ∈ SO(k)` with
/// `A f_{i₁} = f_{j₁}`; then the columns `{j₁} ∪ part_i \ {i₁}` are again an
/// `α`-scaled tight block and stage two rotates them by `Aᵗ`.
pub fn switch_path(
    f: &Frame,
    part_i: &[usize],
    part_j: &[usize],
    alpha: f64,
    beta: f64,
) -> Result<FramePath> {
    let (k, n) = (f.k(), f.n());
    check_partition(n, part_i, part_j)?;
    if alpha <= 0.0 || beta <= 0.0 || (alpha * alpha + beta * beta - 1.0).abs() > 1e-10 {
        return Err(Error::PartitionInvalid(format!(
            "weights must be positive with α² + β² = 1, got α = {alpha}, β = {beta}"
        )));
    }
    for (part, w) in [(part_i, alpha), (part_j, beta)] {
        let deviation = (block_gram(f, part) - DMatrix::<f64>::identity(k, k) * (w * w)).norm();
        if deviation > TOL_PATH {
            return Err(Error::BlockNotNtf { deviation });
        }
    }
    let (i1, j1) = (part_i[0], part_j[0]);
    let u: DVector<f64> = f.0.column(i1).into_owned();
    let v: DVector<f64> = f.0.column(j1).into_owned();
    let (nu, nv) = (u.norm_squared(), v.norm_squared());
    if (nu - nv).abs() > TOL_PATH {
        return Err(Error::HeadNormMismatch(nu, nv));
    }

    let d = DiagonalTarget::new(k, f.norms_squared())?;
    let mut path = FramePath::new(d);
    let carry = RotationFamily::carrying(&u, &v);
    let first = carry.segment(f, part_i);
    let f2 = first.frames.last().expect("segments are non-empty").clone();
    path.push(first);
    let mut second_block = vec![j1];
    second_block.extend_from_slice(&part_i[1..]);
    path.push(carry.inverse().segment(&f2, &second_block));
    Ok(path)
}

fn check_partition(n: usize, part_i: &[usize], part_j: &[usize]) -> Result<()> {
    if part_i.is_empty() || part_j.is_empty() {
        return Err(Error::PartitionInvalid("both parts must be non-empty".into()));
    }
    let mut seen = vec![false; n];
    for &c in part_i.iter().chain(part_j) {
        if c >= n {
            return Err(Error::PartitionInvalid(format!("column {c} out of range")));
        }
        if std::mem::replace(&mut seen[c], true) {
            return Err(Error::PartitionInvalid(format!("column {c} listed twice")));
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::PartitionInvalid("parts do not cover all columns".into()));
    }
    Ok(())
}

/// Tracks which tight block ("class") each column currently belongs to, so
/// that successive interchanges can pick their partitions by content: the
/// head's class on one side, every other column on the other.
#[derive(Debug, Clone)]
pub(crate) struct Switcher {
    pub frame: Frame,
    pub class: Vec<usize>,
    pub path: FramePath,
}

impl Switcher {
    pub fn new(frame: Frame, class: Vec<usize>) -> Result<Self> {
        let d = DiagonalTarget::new(frame.k(), frame.norms_squared())?;
        Ok(Self {
            frame,
            class,
            path: FramePath::new(d),
        })
    }

    /// Interchanges columns `i` and `j` (from different classes).
    pub fn swap(&mut self, i: usize, j: usize) -> Result<()> {
        let ci = self.class[i];
        if self.class[j] == ci {
            return Err(Error::PartitionInvalid(format!(
                "columns {i} and {j} lie in the same block"
            )));
        }
        let mut part_i = vec![i];
        let mut part_j = vec![j];
        for c in 0..self.frame.n() {
            if c == i || c == j {
                continue;
            }
            if self.class[c] == ci {
                part_i.push(c);
            } else {
                part_j.push(c);
            }
        }
        let k = self.frame.k() as f64;
        let alpha2 = block_gram(&self.frame, &part_i).trace() / k;
        let step = switch_path(
            &self.frame,
            &part_i,
            &part_j,
            alpha2.sqrt(),
            (1.0 - alpha2).max(0.0).sqrt(),
        )?;
        self.frame = step.end().expect("switch paths are non-empty").clone();
        self.path.append(step);
        self.class.swap(i, j);
        Ok(())
    }

    /// Interchanges two columns of the same class using a helper column `h`
    /// from another class: `(i h)`, `(i j)`, `(j h)`.
    pub fn swap_within(&mut self, i: usize, j: usize, h: usize) -> Result<()> {
        self.swap(i, h)?;
        self.swap(i, j)?;
        self.swap(j, h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::verify_path;
    use crate::tol::TOL_PATH;

    fn half_frame() -> Frame {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Frame(DMatrix::from_row_slice(2, 4, &[h, 0.0, h, 0.0, 0.0, h, 0.0, -h]))
    }

    #[test]
    fn equal_heads_give_a_loop() {
        let f = half_frame();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let path = switch_path(&f, &[0, 1], &[2, 3], h, h).unwrap();
        assert!(path.end().unwrap().distance(&f) < 1e-14);
        assert!(verify_path(&path, TOL_PATH).passed);
    }

    #[test]
    fn swaps_heads_with_opposite_directions() {
        let f = half_frame();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let path = switch_path(&f, &[1, 0], &[3, 2], h, h).unwrap();
        let mut expected = f.0.clone();
        expected.swap_columns(1, 3);
        assert!((path.end().unwrap().matrix() - expected).norm() < 1e-14);
        let report = verify_path(&path, TOL_PATH);
        assert!(report.passed, "{report:?}");
        assert_eq!(path.segments.len(), 2);
    }

    #[test]
    fn error_paths() {
        let f = half_frame();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(matches!(
            switch_path(&f, &[0, 2], &[1, 3], h, h),
            Err(Error::BlockNotNtf { .. })
        ));
        assert!(matches!(
            switch_path(&f, &[0, 1], &[2, 2], h, h),
            Err(Error::PartitionInvalid(_))
        ));
        assert!(matches!(
            switch_path(&f, &[0, 1], &[2], h, h),
            Err(Error::PartitionInvalid(_))
        ));
        let mut g = f.clone();
        g.0[(0, 0)] = 0.6;
        g.0[(1, 0)] = (0.5f64 - 0.36).sqrt();
        assert!(switch_path(&g, &[0, 1], &[2, 3], h, h).is_err());
    }
}
