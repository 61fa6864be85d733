//! Transfer of certificates from `(d, k)` to `(1 - d, n - k)` through
//! orthogonal completion.

use nalgebra::DMatrix;

use super::{ConnectivityCertificate, FramePath, PathSegment, SegmentKind};
use crate::error::{Error, Result};
use crate::grassmann::Frame;
use crate::linalg::{polar_rows, sym_eigen_desc};
use crate::tol::STEP_MAX;

/// Orthonormal basis (as rows) of the orthogonal complement of the row space.
pub fn complement_frame(f: &Frame) -> Result<Frame> {
    let (k, n) = (f.k(), f.n());
    if k >= n {
        return Err(Error::RankOutOfRange {
            n,
            k,
            reason: "complement of the full space is empty".into(),
        });
    }
    let q = DMatrix::<f64>::identity(n, n) - f.0.transpose() * &f.0;
    let (_, vectors) = sym_eigen_desc(&q);
    Ok(Frame(vectors.columns(0, n - k).transpose()))
}

/// Lifts a certificate for `(d, k)` to one for `(1 - d, n - k)`.
///
/// Along the grid `γ_i`, each completion `δ_i` (rows spanning the orthogonal
/// complement of the rows of `γ_i`) is the one nearest the previous: project
/// `δ_{i-1}` onto the new complement and restore orthonormal rows. Then
/// `η = [γ; δ]` is a path in `O(n)`, so with `γ_end = A γ_0` and
/// `δ_end = B δ_0` the matrix `diag(A, B) = η_end η_0ᵗ` lies in `SO(n)` and
/// `det B = -1`; a positive determinant can only come from a lifting bug.
pub fn duality_lift(cert: &ConnectivityCertificate) -> Result<ConnectivityCertificate> {
    let target = cert.target.dual()?;
    let n = target.n;
    let start = cert
        .path
        .start()
        .ok_or_else(|| Error::EndpointInvalid("empty path".into()))?;
    let first = complement_frame(start)?;
    let mut prev = first.clone();
    let mut flat_index = 0usize;
    let mut segments = Vec::with_capacity(cert.path.segments.len());
    for seg in &cert.path.segments {
        let mut frames = Vec::with_capacity(seg.frames.len());
        for g in &seg.frames {
            let proj = DMatrix::<f64>::identity(n, n) - g.0.transpose() * &g.0;
            let next = polar_rows(&(&prev.0 * proj)).map(Frame).ok_or(
                Error::CompletionDiscontinuity {
                    index: flat_index,
                    step: f64::INFINITY,
                    step_max: STEP_MAX,
                },
            )?;
            let step = next.distance(&prev);
            if !(step <= STEP_MAX) {
                return Err(Error::CompletionDiscontinuity {
                    index: flat_index,
                    step,
                    step_max: STEP_MAX,
                });
            }
            frames.push(next.clone());
            prev = next;
            flat_index += 1;
        }
        segments.push(PathSegment {
            kind: SegmentKind::Reparametrized {
                source: "orthogonal-completion".into(),
            },
            frames,
        });
    }
    let b_raw = &prev.0 * first.0.transpose();
    let b = polar_rows(&b_raw).ok_or(Error::DetSignUnexpected { det: 0.0 })?;
    let det = b.determinant();
    if !((det + 1.0).abs() <= 1e-8) {
        return Err(Error::DetSignUnexpected { det });
    }
    Ok(ConnectivityCertificate {
        path: FramePath {
            d: target.clone(),
            segments,
        },
        target,
        frame: first,
        d_matrix: b,
        rule: format!("duality[{}]", cert.rule),
        permutation: cert.permutation.clone(),
        report: None,
    })
}
