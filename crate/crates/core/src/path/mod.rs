//! Discrete paths inside the frame variety `{F : F Fᵗ = I_k, ‖f_j‖² = d_j}`
//! and connectivity certificates: a verified path from `F` to `D F` with
//! `det D = -1`, which shows the variety is connected.

pub mod certify;
pub mod duality;
pub mod rotation;
pub mod search;
pub mod switch;
pub mod verify;

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::grassmann::Frame;
use crate::hypersimplex::DiagonalTarget;
use crate::tol::{MIN_SEGMENT_SAMPLES, STEP_TARGET};

pub use certify::{
    certify_by_search, certify_equal_norm, certify_prop_first, certify_prop_second, certify_target,
    reduction_sequence, step1_path,
};
pub use duality::duality_lift;
pub use rotation::{so_k_path, RotationFamily};
pub use search::{
    numerical_path_search, project_to_variety, roadmap_search, RoadmapBudget, SearchBudget,
    SearchOutcome,
};
pub use switch::switch_path;
pub use verify::{verify_certificate, verify_path, GridIndex, VerificationReport};

/// How the frames of a segment were generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum SegmentKind {
    /// Left rotation `R(t) = exp(t Ω)` of the listed columns only.
    BlockRotation {
        columns: Vec<usize>,
        generator: Vec<Vec<f64>>,
    },
    /// The two-column family `(cos t e_a - sin t e_b, sin t e_a + cos t e_b)`
    /// (times the common column norm) for `t ∈ [t_start, t_end]`.
    Step1Rotation {
        t_start: f64,
        t_end: f64,
        columns: [usize; 2],
        rows: [usize; 2],
    },
    /// Frames derived from another path (lifted, reversed, completed, searched).
    Reparametrized { source: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSegment {
    pub kind: SegmentKind,
    pub frames: Vec<Frame>,
}

impl PathSegment {
    pub fn samples(&self) -> usize {
        self.frames.len()
    }
}

/// Number of grid points for a segment of the given Frobenius length.
pub fn samples_for(length: f64) -> usize {
    let needed = (length / STEP_TARGET).ceil() as usize + 1;
    needed.max(MIN_SEGMENT_SAMPLES)
}

/// `t_i = i / (m - 1)`.
pub fn unit_grid(m: usize) -> impl Iterator<Item = f64> {
    let last = (m - 1) as f64;
    (0..m).map(move |i| i as f64 / last)
}

/// Consecutive segments share their junction frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePath {
    pub d: DiagonalTarget,
    pub segments: Vec<PathSegment>,
}

impl FramePath {
    pub fn new(d: DiagonalTarget) -> Self {
        Self {
            d,
            segments: Vec::new(),
        }
    }

    pub fn start(&self) -> Option<&Frame> {
        self.segments.first().and_then(|s| s.frames.first())
    }

    pub fn end(&self) -> Option<&Frame> {
        self.segments.last().and_then(|s| s.frames.last())
    }

    pub fn grid_points(&self) -> usize {
        self.segments.iter().map(PathSegment::samples).sum()
    }

    pub fn frames(&self) -> impl Iterator<Item = &Frame> {
        self.segments.iter().flat_map(|s| s.frames.iter())
    }

    pub fn push(&mut self, segment: PathSegment) {
        self.segments.push(segment);
    }

    pub fn append(&mut self, other: FramePath) {
        self.segments.extend(other.segments);
    }

    /// Same frames in reverse order.
    pub fn reversed(&self) -> FramePath {
        let segments = self
            .segments
            .iter()
            .rev()
            .map(|s| PathSegment {
                kind: SegmentKind::Reparametrized {
                    source: "reversed".into(),
                },
                frames: s.frames.iter().rev().cloned().collect(),
            })
            .collect();
        FramePath {
            d: self.d.clone(),
            segments,
        }
    }

    /// Applies `f` to every frame, keeping the segment structure.
    pub fn map_frames(
        &self,
        d: DiagonalTarget,
        kind: impl Fn(&SegmentKind) -> SegmentKind,
        f: impl Fn(&Frame) -> Frame,
    ) -> FramePath {
        let segments = self
            .segments
            .iter()
            .map(|s| PathSegment {
                kind: kind(&s.kind),
                frames: s.frames.iter().map(&f).collect(),
            })
            .collect();
        FramePath { d, segments }
    }
}

/// A path from `frame` to `d_matrix · frame` inside the frame variety of
/// `target`, with `det d_matrix = -1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectivityCertificate {
    pub target: DiagonalTarget,
    pub frame: Frame,
    pub d_matrix: DMatrix<f64>,
    pub path: FramePath,
    /// Human-readable construction trail, e.g. `duality(step1)`.
    pub rule: String,
    /// `target.d[permutation[j]]` is the entry the construction placed at `j`.
    pub permutation: Vec<usize>,
    pub report: Option<VerificationReport>,
}

impl ConnectivityCertificate {
    pub fn k(&self) -> usize {
        self.target.k
    }

    pub fn determinant(&self) -> f64 {
        self.d_matrix.determinant()
    }

    /// Runs the verifier and stores the report.
    pub fn verified(mut self, tol: f64) -> Self {
        self.report = Some(verify_certificate(&self, tol));
        self
    }

    pub fn passed(&self) -> bool {
        self.report.as_ref().is_some_and(|r| r.passed)
    }

    /// Moves every frame into the coordinates of the original target: column
    /// `j` of the canonical construction becomes column `perm[j]`.
    pub fn scatter(self, original: &DiagonalTarget, perm: &[usize]) -> Self {
        if perm.iter().enumerate().all(|(j, &p)| j == p) {
            return Self {
                target: original.clone(),
                ..self
            };
        }
        let path = self.path.map_frames(
            original.clone(),
            |k| k.clone(),
            |f| f.scatter_columns(perm),
        );
        let path = FramePath {
            segments: path
                .segments
                .into_iter()
                .map(|mut s| {
                    s.kind = relabel_columns(&s.kind, perm);
                    s
                })
                .collect(),
            ..path
        };
        Self {
            target: original.clone(),
            frame: self.frame.scatter_columns(perm),
            d_matrix: self.d_matrix,
            path,
            rule: self.rule,
            permutation: perm.to_vec(),
            report: None,
        }
    }
}

fn relabel_columns(kind: &SegmentKind, perm: &[usize]) -> SegmentKind {
    match kind {
        SegmentKind::BlockRotation { columns, generator } => SegmentKind::BlockRotation {
            columns: columns.iter().map(|&c| perm[c]).collect(),
            generator: generator.clone(),
        },
        SegmentKind::Step1Rotation {
            t_start,
            t_end,
            columns,
            rows,
        } => SegmentKind::Step1Rotation {
            t_start: *t_start,
            t_end: *t_end,
            columns: [perm[columns[0]], perm[columns[1]]],
            rows: *rows,
        },
        other => other.clone(),
    }
}

pub(crate) fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>]) -> Option<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || rows.iter().any(|row| row.len() != c) {
        return None;
    }
    Some(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

#[derive(Serialize, Deserialize)]
struct SegmentJson {
    kind: SegmentKind,
    samples: usize,
}

#[derive(Serialize, Deserialize)]
struct CertificateJson {
    d: Vec<f64>,
    k: usize,
    rule: String,
    permutation: Vec<usize>,
    frame: Frame,
    #[serde(rename = "D")]
    d_matrix: Vec<Vec<f64>>,
    segments: Vec<SegmentJson>,
    grid: Vec<Vec<Frame>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    report: Option<VerificationReport>,
}

impl Serialize for ConnectivityCertificate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CertificateJson {
            d: self.target.d.clone(),
            k: self.target.k,
            rule: self.rule.clone(),
            permutation: self.permutation.clone(),
            frame: self.frame.clone(),
            d_matrix: matrix_rows(&self.d_matrix),
            segments: self
                .path
                .segments
                .iter()
                .map(|seg| SegmentJson {
                    kind: seg.kind.clone(),
                    samples: seg.samples(),
                })
                .collect(),
            grid: self
                .path
                .segments
                .iter()
                .map(|seg| seg.frames.clone())
                .collect(),
            report: self.report.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ConnectivityCertificate {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = CertificateJson::deserialize(de)?;
        let target = DiagonalTarget::new(raw.k, raw.d).map_err(D::Error::custom)?;
        let d_matrix = matrix_from_rows(&raw.d_matrix)
            .ok_or_else(|| D::Error::custom("D must be a non-empty rectangular matrix"))?;
        if raw.segments.len() != raw.grid.len() {
            return Err(D::Error::custom("segments and grid lengths differ"));
        }
        let segments = raw
            .segments
            .into_iter()
            .zip(raw.grid)
            .map(|(meta, frames)| {
                if meta.samples != frames.len() {
                    Err(D::Error::custom("segment sample count does not match its grid"))
                } else {
                    Ok(PathSegment {
                        kind: meta.kind,
                        frames,
                    })
                }
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Self {
            path: FramePath {
                d: target.clone(),
                segments,
            },
            target,
            frame: raw.frame,
            d_matrix,
            rule: raw.rule,
            permutation: raw.permutation,
            report: raw.report,
        })
    }
}
