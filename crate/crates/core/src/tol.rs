//! Numerical tolerances shared across modules.

/// Sum/bound comparisons on diagonal targets (boundary equality must pass).
pub const TOL_SUM: f64 = 1e-12;
/// Residual bound for frames and projections produced by our own constructors.
pub const TOL_BUILD: f64 = 1e-10;
/// Residual bound used when accepting externally supplied frames and projections.
pub const TOL_VERIFY: f64 = 1e-8;
/// Minimum distance of a projection eigenvalue from 1/2 before factoring.
pub const TOL_SPECTRAL: f64 = 1e-6;
/// Path residual tolerance used by the certificate verifier.
pub const TOL_PATH: f64 = 1e-8;
/// Largest admissible Frobenius step between consecutive grid frames.
pub const STEP_MAX: f64 = 0.1;
/// Step size our path constructors aim for, leaving headroom below `STEP_MAX`
/// for the duality lift, whose steps can be up to twice as long.
pub const STEP_TARGET: f64 = 0.03;
/// Minimum number of grid points per path segment.
pub const MIN_SEGMENT_SAMPLES: usize = 64;
/// Fiber residual tolerance (`‖diag P - d‖`).
pub const TOL_FIBER: f64 = 1e-8;
/// Linkage distance for the fiber component graph.
pub const LINK_TOL: f64 = 0.05;
/// Stratum feasibility tolerance on block entries and level gaps.
pub const TOL_STRATA: f64 = 1e-9;
/// Polygon closure and side-length tolerance.
pub const TOL_POLY: f64 = 1e-10;
