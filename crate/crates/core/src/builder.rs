//! Deterministic constructions of `d`-NTFs: a general prescribed-diagonal
//! builder plus the explicit block frames used by the connectivity paths.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grassmann::Frame;
use crate::hypersimplex::DiagonalTarget;
use crate::linalg::flip_last;
use crate::tol::{TOL_BUILD, TOL_SUM, TOL_VERIFY};

/// Output of [`build_ntf_traced`].
#[derive(Debug, Clone)]
pub struct NtfBuild {
    pub frame: Frame,
    pub rotations: usize,
}

/// Builds a `d`-NTF. Deterministic in `d`.
pub fn build_ntf(d: &DiagonalTarget) -> Result<Frame> {
    build_ntf_traced(d).map(|b| b.frame)
}

/// Starts from the coordinate frame on the `k` largest entries and applies
/// planar column rotations. Each rotation moves squared norm from an entry
/// above its target to one below it (a T-transform on the diagonal of `FᵗF`)
/// and pins at least one entry for good, so at most `n - 1` are needed.
///
/// Pivots follow the majorization argument: in the order of decreasing `d`,
/// take the last entry above target and the first entry below target after
/// it. Along that order the working diagonal stays sorted and keeps
/// majorizing `d`, which guarantees the target norm lies between the two
/// current norms.
pub fn build_ntf_traced(d: &DiagonalTarget) -> Result<NtfBuild> {
    d.require_hypersimplex()?;
    let (n, k) = (d.n, d.k);
    let target: Vec<f64> = d.d.iter().map(|x| x.clamp(0.0, 1.0)).collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| target[b].total_cmp(&target[a]).then(a.cmp(&b)));

    let mut f = DMatrix::<f64>::zeros(k, n);
    let mut current = vec![0.0; n];
    for (row, &col) in order.iter().take(k).enumerate() {
        f[(row, col)] = 1.0;
        current[col] = 1.0;
    }
    let mut fixed = vec![false; n];
    let eps = 8.0 * f64::EPSILON;
    for &col in &order {
        if (current[col] - target[col]).abs() <= eps {
            fixed[col] = true;
        }
    }

    let mut rotations = 0;
    loop {
        let over_pos = (0..n)
            .rev()
            .find(|&p| !fixed[order[p]] && current[order[p]] > target[order[p]]);
        let Some(over_pos) = over_pos else { break };
        let under_pos = (over_pos + 1..n)
            .find(|&p| !fixed[order[p]] && current[order[p]] < target[order[p]]);
        let Some(under_pos) = under_pos else {
            // only rounding-level excess is left
            break;
        };
        let (a, b) = (order[over_pos], order[under_pos]);
        let excess = current[a] - target[a];
        let deficit = target[b] - current[b];
        let delta = excess.min(deficit);
        rotate_to_norm(&mut f, a, b, current[a] - delta);
        rotations += 1;
        current[a] -= delta;
        current[b] += delta;
        if excess - delta <= eps {
            current[a] = target[a];
            fixed[a] = true;
        }
        if deficit - delta <= eps {
            current[b] = target[b];
            fixed[b] = true;
        }
    }

    let frame = Frame::new(f);
    let residual = frame.norm_residual(&d.d).max(frame.tight_residual());
    if residual > TOL_BUILD {
        return Err(Error::FrameInvariantViolation(format!(
            "builder residual {residual:e}"
        )));
    }
    Ok(NtfBuild { frame, rotations })
}

/// Rotates columns `a`, `b` in their common plane so that `‖f_a‖² = goal`;
/// the pair's total squared norm is unchanged.
fn rotate_to_norm(f: &mut DMatrix<f64>, a: usize, b: usize, goal: f64) {
    let u: DVector<f64> = f.column(a).into_owned();
    let v: DVector<f64> = f.column(b).into_owned();
    let (na, nb, cross) = (u.norm_squared(), v.norm_squared(), u.dot(&v));
    // ‖cos θ u - sin θ v‖² = mean + half_gap cos 2θ - cross sin 2θ
    let mean = 0.5 * (na + nb);
    let half_gap = 0.5 * (na - nb);
    let radius = half_gap.hypot(cross);
    let phase = cross.atan2(half_gap);
    let ratio = ((goal - mean) / radius).clamp(-1.0, 1.0);
    let theta = 0.5 * (ratio.acos() - phase);
    let (s, c) = theta.sin_cos();
    f.set_column(a, &(&u * c - &v * s));
    f.set_column(b, &(&u * s + &v * c));
}

/// The `k × (k+1)` matrix whose columns are the vertices of a regular simplex
/// (unit columns, pairwise inner products `-1/k`), in the staircase shape:
/// column `k+1` is `-e_k`, column `j ≥ 3` is supported on coordinates
/// `j-1..k` with a positive leading entry, and columns 1, 2 differ only in
/// the sign of their (positive) first coordinate.
pub fn simplex_frame(k: usize) -> Result<Frame> {
    if k < 2 {
        return Err(Error::RankOutOfRange {
            n: k + 1,
            k,
            reason: "simplex frame needs k >= 2".into(),
        });
    }
    let kf = k as f64;
    let cos = -1.0 / kf;
    let mut cols: Vec<DVector<f64>> = vec![DVector::zeros(k); k + 1];
    cols[k][k - 1] = -1.0;

    // entries of a vector on rows lead..k from the constraints against the
    // already-built columns first..=k, whose leading rows are first-1..=k-1
    let solve_tail = |cols: &[DVector<f64>], first: usize| -> DVector<f64> {
        let mut x = DVector::zeros(k);
        for m in (first..=k).rev() {
            let lead = m - 1;
            let known: f64 = (lead + 1..k).map(|r| x[r] * cols[m][r]).sum();
            x[lead] = (cos - known) / cols[m][lead];
        }
        x
    };

    for j in (2..k).rev() {
        let mut x = solve_tail(&cols, j + 1);
        let rest: f64 = (j..k).map(|r| x[r] * x[r]).sum();
        x[j - 1] = (1.0 - rest).max(0.0).sqrt();
        cols[j] = x;
    }
    let w = solve_tail(&cols, 2);
    let lead = ((kf + 1.0) / (2.0 * kf)).sqrt();
    let mut c0 = w.clone();
    c0[0] = lead;
    let mut c1 = w;
    c1[0] = -lead;
    cols[0] = c0;
    cols[1] = c1;

    Ok(Frame::new(DMatrix::from_columns(&cols)))
}

/// `√(k/(2k+1)) · [G | I_k]` with `G` the simplex frame: an equal-norm NTF
/// with `2k+1` vectors.
pub fn identity_augmented(k: usize) -> Result<Frame> {
    let g = simplex_frame(k)?;
    let scale = (k as f64 / (2 * k + 1) as f64).sqrt();
    let mut m = DMatrix::zeros(k, 2 * k + 1);
    m.columns_mut(0, k + 1).copy_from(g.matrix());
    m.columns_mut(k + 1, k).fill_with_identity();
    Ok(Frame::new(m * scale))
}

/// `(1/√2) · [G | D G]` with `D = diag(1, …, 1, -1)`: doubles every column
/// with half its squared norm.
pub fn doubled_frame(g: &Frame) -> Result<Frame> {
    g.require_tight(TOL_VERIFY)?;
    let (k, p) = (g.k(), g.n());
    let mut m = DMatrix::zeros(k, 2 * p);
    m.columns_mut(0, p).copy_from(g.matrix());
    m.columns_mut(p, p).copy_from(&(flip_last(k) * g.matrix()));
    Ok(Frame::new(m * std::f64::consts::FRAC_1_SQRT_2))
}

/// The block frame for targets `(d_1..d_p, d_1..d_p, d_{2p+1})`:
///
/// ```text
/// [ G̃/√2   -G̃/√2   0          ]
/// [ g       g       √d_{2p+1}  ]     g_j = √(d_j - d'_j/2)
/// ```
///
/// where `G̃` is a `d'`-NTF with `k-1` rows. Equality `d_j = d'_j/2` is
/// accepted (`g_j = 0`); only a genuine deficit is an error.
pub fn odd_frame(g_tilde: &Frame, d: &DiagonalTarget) -> Result<Frame> {
    g_tilde.require_tight(TOL_VERIFY)?;
    let (k_sub, p) = (g_tilde.k(), g_tilde.n());
    let k = k_sub + 1;
    if d.n != 2 * p + 1 || d.k != k {
        return Err(Error::ShapeMismatch(format!(
            "need n = 2p+1 = {} and k = {k}, got n = {}, k = {}",
            2 * p + 1,
            d.n,
            d.k
        )));
    }
    for i in 0..p {
        if (d.d[i] - d.d[p + i]).abs() > TOL_SUM {
            return Err(Error::ShapeMismatch(format!(
                "entries {} and {} differ",
                i + 1,
                p + i + 1
            )));
        }
    }
    let d_sub = g_tilde.norms_squared();
    let mut g = Vec::with_capacity(p);
    for (i, &dp) in d_sub.iter().enumerate() {
        let slack = d.d[i] - 0.5 * dp;
        if slack < -TOL_BUILD {
            return Err(Error::NormDeficit {
                index: i,
                d: d.d[i],
                half: 0.5 * dp,
            });
        }
        g.push(slack.max(0.0).sqrt());
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = DMatrix::zeros(k, 2 * p + 1);
    for r in 0..k_sub {
        for j in 0..p {
            m[(r, j)] = h * g_tilde.0[(r, j)];
            m[(r, p + j)] = -h * g_tilde.0[(r, j)];
        }
    }
    for j in 0..p {
        m[(k_sub, j)] = g[j];
        m[(k_sub, p + j)] = g[j];
    }
    m[(k_sub, 2 * p)] = d.d[2 * p].max(0.0).sqrt();
    let f = Frame::new(m);
    f.require_tight(TOL_VERIFY)?;
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::gram;

    fn target(k: usize, d: &[f64]) -> DiagonalTarget {
        DiagonalTarget::new(k, d.to_vec()).unwrap()
    }

    #[test]
    fn builds_vertex_target() {
        let f = build_ntf(&target(2, &[1.0, 1.0, 0.0, 0.0])).unwrap();
        let p = gram(&f).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 1.0, 0.0, 0.0]));
        assert!((p.matrix() - expected).norm() < 1e-14);
        assert!(f.matrix().columns(2, 2).norm() < 1e-14);
    }

    #[test]
    fn builds_equal_norm_targets() {
        for (n, k) in [(4, 2), (3, 2), (7, 3), (12, 5)] {
            let d = DiagonalTarget::equal_norm(n, k).unwrap();
            let b = build_ntf_traced(&d).unwrap();
            assert!(b.frame.tight_residual() < 1e-12);
            assert!(b.frame.norm_residual(&d.d) < 1e-12);
            assert!(b.rotations < n);
        }
    }

    #[test]
    fn mercedes_oracle_satisfies_the_same_constraints() {
        // independent witness that (2/3, 2/3, 2/3) with k = 2 is realisable
        let s = (2.0f64 / 3.0).sqrt();
        let angles = [0.0, 2.0, 4.0].map(|j: f64| j * std::f64::consts::PI / 3.0);
        let oracle = Frame::new(DMatrix::from_fn(2, 3, |r, c| {
            if r == 0 {
                s * angles[c].cos()
            } else {
                s * angles[c].sin()
            }
        }));
        let d = target(2, &[2.0 / 3.0; 3]);
        assert!(oracle.tight_residual() < 1e-15 && oracle.norm_residual(&d.d) < 1e-15);
        let f = build_ntf(&d).unwrap();
        assert!(f.tight_residual() < 1e-12 && f.norm_residual(&d.d) < 1e-12);
    }

    #[test]
    fn builder_rejects_non_members() {
        assert!(matches!(
            build_ntf(&target(2, &[0.7, 0.7, 0.7])),
            Err(Error::HypersimplexViolation(_))
        ));
    }

    #[test]
    fn simplex_frame_k2_matches_closed_form() {
        let g = simplex_frame(2).unwrap();
        let r3 = 3.0f64.sqrt() / 2.0;
        let expected = DMatrix::from_row_slice(2, 3, &[r3, -r3, 0.0, 0.5, 0.5, -1.0]);
        assert!((g.matrix() - expected).norm() < 1e-15);
    }

    #[test]
    fn simplex_frame_structure() {
        for k in 2..=12 {
            let g = simplex_frame(k).unwrap();
            let m = g.matrix();
            let kf = k as f64;
            for c in m.column_iter() {
                assert!((c.norm() - 1.0).abs() < 1e-12);
            }
            let ggt = m * m.transpose();
            let expected = DMatrix::<f64>::identity(k, k) * ((kf + 1.0) / kf);
            assert!((ggt - expected).norm() < 1e-12, "k = {k}");
            for j in 2..=k {
                assert_eq!(m[(0, j)], 0.0);
            }
            for i in 0..k - 1 {
                assert_eq!(m[(i, k)], 0.0);
            }
            assert_eq!(m[(k - 1, k)], -1.0);
            assert!((m[(0, 0)] + m[(0, 1)]).abs() < 1e-15);
            for i in 1..k {
                assert_eq!(m[(i, 0)], m[(i, 1)]);
            }
            let sums: DVector<f64> = m.column_sum();
            assert!(sums[0].abs() < 1e-15);
            let scaled = Frame::new(m * (kf / (kf + 1.0)).sqrt());
            assert!(scaled.tight_residual() < 1e-12);
        }
        assert!(simplex_frame(1).is_err());
    }

    #[test]
    fn identity_augmented_frames() {
        for k in 2..=6 {
            let f = identity_augmented(k).unwrap();
            assert_eq!((f.k(), f.n()), (k, 2 * k + 1));
            assert!(f.tight_residual() < 1e-12);
            let d = vec![k as f64 / (2 * k + 1) as f64; 2 * k + 1];
            assert!(f.norm_residual(&d) < 1e-12);
            let t = crate::grassmann::column_norms_squared(&f).unwrap();
            assert!(t.satisfies_hypothesis().unwrap());
        }
    }

    #[test]
    fn doubled_frames() {
        let f = doubled_frame(&Frame::new(DMatrix::identity(2, 2))).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expected = DMatrix::from_row_slice(2, 4, &[h, 0.0, h, 0.0, 0.0, h, 0.0, -h]);
        assert!((f.matrix() - expected).norm() < 1e-15);

        let g = build_ntf(&target(2, &[2.0 / 3.0; 3])).unwrap();
        let f = doubled_frame(&g).unwrap();
        assert!(f.tight_residual() < 1e-12);
        assert!(f.norm_residual(&[1.0 / 3.0; 6]) < 1e-12);
        let t = crate::grassmann::column_norms_squared(&f).unwrap();
        assert!(t.satisfies_hypothesis().unwrap());

        let mut bad = g.clone();
        bad.0[(0, 0)] += 0.1;
        assert!(doubled_frame(&bad).is_err());
    }

    #[test]
    fn odd_frame_from_a_single_row() {
        // p = 2, k = 2, G̃ = (1/√2, -1/√2), d = (2/5)^5; g_j = √(2/5 - 1/4)
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let g_tilde = Frame::new(DMatrix::from_row_slice(1, 2, &[h, -h]));
        let d = target(2, &[0.4; 5]);
        let f = odd_frame(&g_tilde, &d).unwrap();
        let gj = (0.4f64 - 0.25).sqrt();
        assert!((f.0[(1, 0)] - gj).abs() < 1e-15 && (f.0[(1, 3)] - gj).abs() < 1e-15);
        // last row: 2 Σ (d_j - d'_j/2) + d_5 = 4 · 3/20 + 2/5 = 1
        let last: f64 = f.0.row(1).iter().map(|x| x * x).sum();
        assert!((last - 1.0).abs() < 1e-14);
        assert!(f.tight_residual() < 1e-14);
        assert!(f.norm_residual(&d.d) < 1e-14);
        assert!(f.0.row(0).dot(&f.0.row(1)).abs() < 1e-15);

        let low = target(2, &[0.2, 0.2, 0.2, 0.2, 1.2]);
        assert!(matches!(
            odd_frame(&g_tilde, &low),
            Err(Error::NormDeficit { .. })
        ));
        let wrong = target(2, &[0.5, 0.3, 0.3, 0.5, 0.4]);
        assert!(matches!(
            odd_frame(&g_tilde, &wrong),
            Err(Error::ShapeMismatch(_))
        ));
    }
}
