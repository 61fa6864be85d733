//! Independent checker for sampled paths and certificates.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ConnectivityCertificate, FramePath};
use crate::tol::STEP_MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridIndex {
    pub segment: usize,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub passed: bool,
    pub tol: f64,
    pub step_max: f64,
    pub grid_points: usize,
    pub segments: usize,
    /// `max ‖F Fᵗ - I‖_F` over the grid.
    pub max_tight_residual: f64,
    /// `max |‖f_j‖² - d_j|` over the grid.
    pub max_norm_residual: f64,
    /// Largest Frobenius distance between consecutive grid frames.
    pub max_step: f64,
    /// First grid frame at which a check failed.
    pub first_failure: Option<GridIndex>,
    pub start_residual: Option<f64>,
    pub end_residual: Option<f64>,
    pub determinant: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Default, Clone, Copy)]
struct SegmentStats {
    tight: f64,
    norm: f64,
    step: f64,
    first_bad: Option<usize>,
    bad_shape: bool,
}

fn exceeds(x: f64, bound: f64) -> bool {
    !(x <= bound)
}

/// Checks every grid frame against the frame-variety constraints at `tol` and
/// every consecutive step (including across segment junctions) against
/// `STEP_MAX`.
pub fn verify_path(path: &FramePath, tol: f64) -> VerificationReport {
    let (k, n) = (path.d.k, path.d.n);
    let d = &path.d.d;
    let stats: Vec<SegmentStats> = path
        .segments
        .par_iter()
        .enumerate()
        .map(|(s, seg)| {
            let mut st = SegmentStats::default();
            let mut prev = if s == 0 {
                None
            } else {
                path.segments[s - 1].frames.last()
            };
            for (i, f) in seg.frames.iter().enumerate() {
                if f.k() != k || f.n() != n {
                    st.bad_shape = true;
                    st.first_bad.get_or_insert(i);
                    continue;
                }
                let tight = f.tight_residual();
                let norm = f.norm_residual(d);
                let step = match prev {
                    Some(p) if p.k() == k && p.n() == n => f.distance(p),
                    _ => 0.0,
                };
                st.tight = st.tight.max(tight);
                st.norm = st.norm.max(norm);
                st.step = st.step.max(step);
                if exceeds(tight, tol) || exceeds(norm, tol) || exceeds(step, STEP_MAX) {
                    st.first_bad.get_or_insert(i);
                    if tight.is_nan() || norm.is_nan() || step.is_nan() {
                        st.tight = f64::NAN;
                    }
                }
                prev = Some(f);
            }
            st
        })
        .collect();

    let mut report = VerificationReport {
        passed: true,
        tol,
        step_max: STEP_MAX,
        grid_points: path.grid_points(),
        segments: path.segments.len(),
        max_tight_residual: 0.0,
        max_norm_residual: 0.0,
        max_step: 0.0,
        first_failure: None,
        start_residual: None,
        end_residual: None,
        determinant: None,
        failure: None,
    };
    for (s, st) in stats.iter().enumerate() {
        report.max_tight_residual = nan_max(report.max_tight_residual, st.tight);
        report.max_norm_residual = nan_max(report.max_norm_residual, st.norm);
        report.max_step = nan_max(report.max_step, st.step);
        if report.first_failure.is_none() {
            if let Some(index) = st.first_bad {
                report.first_failure = Some(GridIndex { segment: s, index });
                report.failure = Some(if st.bad_shape {
                    format!("frame of wrong shape (expected {k} × {n})")
                } else {
                    "grid frame violates a constraint or step bound".into()
                });
            }
        }
    }
    if path.grid_points() == 0 {
        report.failure = Some("empty path".into());
    }
    report.passed = report.failure.is_none();
    report
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// [`verify_path`] plus: the path starts at `F`, ends at `D F`, and `D` is
/// orthogonal with `det D = -1` (to `1e-10`).
pub fn verify_certificate(cert: &ConnectivityCertificate, tol: f64) -> VerificationReport {
    let mut report = verify_path(&cert.path, tol);
    let k = cert.target.k;
    let dm = &cert.d_matrix;
    let fail = |msg: String, report: &mut VerificationReport| {
        if report.failure.is_none() {
            report.failure = Some(msg);
        }
    };
    if dm.nrows() != k || dm.ncols() != k {
        fail(format!("D must be {k} × {k}"), &mut report);
    } else {
        let det = dm.determinant();
        report.determinant = Some(det);
        let orth = (dm.transpose() * dm - DMatrix::<f64>::identity(k, k)).norm();
        if exceeds((det + 1.0).abs(), 1e-10) || exceeds(orth, 1e-10) {
            fail(
                format!("D is not orthogonal with determinant -1 (det {det}, ‖DᵗD - I‖ {orth:e})"),
                &mut report,
            );
        }
        if cert.frame.k() == k && cert.frame.n() == cert.target.n {
            let target_end = cert.frame.left(dm);
            if let (Some(start), Some(end)) = (cert.path.start(), cert.path.end()) {
                if start.k() == k && end.k() == k && start.n() == cert.target.n && end.n() == cert.target.n {
                    let sr = start.distance(&cert.frame);
                    let er = end.distance(&target_end);
                    report.start_residual = Some(sr);
                    report.end_residual = Some(er);
                    if exceeds(sr, tol) || exceeds(er, tol) {
                        fail("path endpoints do not match F and D F".into(), &mut report);
                    }
                }
            }
        } else {
            fail("certificate frame has the wrong shape".into(), &mut report);
        }
    }
    report.passed = report.failure.is_none();
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::Frame;
    use crate::hypersimplex::DiagonalTarget;
    use crate::path::{PathSegment, SegmentKind};
    use crate::tol::TOL_PATH;

    fn constant_path(len: usize) -> FramePath {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let f = Frame(DMatrix::from_row_slice(2, 4, &[h, 0.0, h, 0.0, 0.0, h, 0.0, h]));
        let mut p = FramePath::new(DiagonalTarget::new(2, vec![0.5; 4]).unwrap());
        p.push(PathSegment {
            kind: SegmentKind::Reparametrized {
                source: "constant".into(),
            },
            frames: vec![f; len],
        });
        p
    }

    #[test]
    fn constant_path_passes() {
        let r = verify_path(&constant_path(64), TOL_PATH);
        assert!(r.passed);
        assert!(r.max_tight_residual < 1e-15 && r.max_norm_residual < 1e-15);
        assert_eq!(r.max_step, 0.0);
    }

    #[test]
    fn corrupted_frame_is_reported() {
        let mut p = constant_path(64);
        p.segments[0].frames[17].0[(0, 0)] += 1e-3;
        let r = verify_path(&p, TOL_PATH);
        assert!(!r.passed);
        assert_eq!(r.first_failure, Some(GridIndex { segment: 0, index: 17 }));

        let mut p = constant_path(64);
        p.segments[0].frames[5].0[(0, 0)] = f64::NAN;
        assert!(!verify_path(&p, TOL_PATH).passed);
    }

    #[test]
    fn large_steps_fail() {
        let mut p = constant_path(3);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // same variety, different point: swap columns 1 and 3 (both (0, h))
        let far = Frame(DMatrix::from_row_slice(2, 4, &[h, 0.0, h, 0.0, 0.0, -h, 0.0, -h]));
        p.segments[0].frames[2] = far;
        let r = verify_path(&p, TOL_PATH);
        assert!(!r.passed && r.max_step > STEP_MAX);
        assert_eq!(r.first_failure, Some(GridIndex { segment: 0, index: 2 }));
    }
}
