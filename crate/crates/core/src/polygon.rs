//! Rank-two frames as closed planar polygons: column `j` read as
//! `z_j = F_{1j} + i F_{2j}` gives the edge `z_j² / 2`.

use serde::{Deserialize, Serialize};

use crate::admissibility::polygon_triple;
use crate::error::{Error, Result};
use crate::grassmann::Frame;
use crate::hypersimplex::DiagonalTarget;
use crate::tol::{TOL_POLY, TOL_VERIFY};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub edges: Vec<[f64; 2]>,
    pub r: Vec<f64>,
}

impl Polygon {
    /// `‖Σ e_j‖`.
    pub fn closure_residual(&self) -> f64 {
        let (x, y) = self
            .edges
            .iter()
            .fold((0.0, 0.0), |(x, y), e| (x + e[0], y + e[1]));
        x.hypot(y)
    }

    pub fn perimeter(&self) -> f64 {
        self.r.iter().sum()
    }
}

/// The polygon of a rank-two frame. Closure `Σ z_j² = 0` is the statement
/// `‖row₁‖² = ‖row₂‖²`, `⟨row₁, row₂⟩ = 0`; side lengths are `d_j / 2`.
pub fn frame_to_polygon(f: &Frame) -> Result<Polygon> {
    if f.k() != 2 {
        return Err(Error::NotRankTwo(f.k()));
    }
    f.require_tight(TOL_VERIFY)?;
    let edges = (0..f.n())
        .map(|j| {
            let (a, b) = (f.0[(0, j)], f.0[(1, j)]);
            [(a * a - b * b) / 2.0, a * b]
        })
        .collect();
    let r = f.norms_squared().iter().map(|x| x / 2.0).collect();
    Ok(Polygon { edges, r })
}

/// Three distinct sides whose pairwise sums all exceed half the perimeter
/// (strictly), for side lengths normalized to perimeter one.
pub fn km_disconnected(r: &[f64]) -> Result<bool> {
    let total: f64 = r.iter().sum();
    if (total - 1.0).abs() > TOL_POLY || r.iter().any(|&x| x < -TOL_POLY) {
        return Err(Error::NotNormalized(format!(
            "sides must be non-negative with sum 1, got sum {total}"
        )));
    }
    let doubled: Vec<f64> = r.iter().map(|x| 2.0 * x).collect();
    Ok(polygon_triple(&doubled).is_some())
}

/// Criterion for `k = 2`: some triple with `d_i + d_j > 1` pairwise. When it
/// holds the frame space is disconnected; the converse fails.
pub fn frame_km_criterion(d: &DiagonalTarget) -> Result<bool> {
    if d.k != 2 {
        return Err(Error::NotRankTwo(d.k));
    }
    d.require_hypersimplex()?;
    Ok(polygon_triple(&d.d).is_some())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::random_frame;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    #[test]
    fn mercedes_triangle() {
        let s = (2.0f64 / 3.0).sqrt();
        let f = Frame(DMatrix::from_fn(2, 3, |r, j| {
            let t = 2.0 * std::f64::consts::PI * j as f64 / 3.0;
            s * if r == 0 { t.cos() } else { t.sin() }
        }));
        let p = frame_to_polygon(&f).unwrap();
        assert!(p.closure_residual() < 1e-15);
        for r in &p.r {
            assert!((r - 1.0 / 3.0).abs() < 1e-15);
        }
        for e in &p.edges {
            assert!((e[0].hypot(e[1]) - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_square() {
        let f = Frame(DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]));
        let p = frame_to_polygon(&f).unwrap();
        assert_eq!(p.edges, vec![[0.5, 0.0], [-0.5, 0.0], [0.0, 0.0], [0.0, 0.0]]);
        assert!(matches!(
            frame_to_polygon(&random_frame(4, 3, 1)),
            Err(Error::NotRankTwo(3))
        ));
    }

    #[test]
    fn km_examples() {
        assert!(km_disconnected(&[0.3, 0.3, 0.3, 0.1]).unwrap());
        assert!(!km_disconnected(&[0.25; 4]).unwrap());
        assert!(!km_disconnected(&[0.5, 0.5, 0.0, 0.0]).unwrap());
        assert!(km_disconnected(&[0.3, 0.3]).is_err());

        let d = |v: Vec<f64>| DiagonalTarget::new(2, v).unwrap();
        assert!(frame_km_criterion(&d(vec![0.7, 0.7, 0.6, 0.0])).unwrap());
        assert!(!frame_km_criterion(&d(vec![1.0, 1.0, 0.0, 0.0])).unwrap());
        assert!(!frame_km_criterion(&d(vec![0.5; 4])).unwrap());
    }

    proptest! {
        #[test]
        fn closure_and_perimeter(seed in 0u64..100_000, n in 3usize..10) {
            let p = frame_to_polygon(&random_frame(n, 2, seed)).unwrap();
            prop_assert!(p.closure_residual() <= 1e-12);
            prop_assert!((p.perimeter() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn km_is_permutation_invariant(raw in proptest::collection::vec(0.0f64..1.0, 3..8), rot in 0usize..8) {
            let total: f64 = raw.iter().sum();
            prop_assume!(total > 1e-6);
            let r: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let mut s = r.clone();
            let len = s.len();
            s.rotate_left(rot % len);
            s.reverse();
            prop_assert_eq!(km_disconnected(&r).unwrap(), km_disconnected(&s).unwrap());
        }
    }
}
