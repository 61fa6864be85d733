//! Numerical exploration of the fiber `{P : diag P = d}` in the Grassmannian
//! of rank-`k` projections.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::{factor_projection, gram, random_frame, Frame, ProjectionPoint};
use crate::hypersimplex::DiagonalTarget;
use crate::linalg::{orthogonal_procrustes, polar_rows, sym_eigen_desc};
use crate::path::{numerical_path_search, SearchBudget, SearchOutcome};
use crate::tol::{TOL_FIBER, TOL_VERIFY};

/// `f(P) = ‖diag P - d‖²`.
pub fn objective(p: &ProjectionPoint, d: &[f64]) -> f64 {
    p.0.diagonal()
        .iter()
        .zip(d)
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

/// Tangent projection `[P, [P, G]]` of the Euclidean gradient
/// `G = 2 Diag(diag P - d)`.
pub fn riemannian_gradient(p: &ProjectionPoint, d: &[f64]) -> DMatrix<f64> {
    let n = p.size();
    let g = DMatrix::from_fn(n, n, |i, j| if i == j { 2.0 * (p.0[(i, i)] - d[i]) } else { 0.0 });
    let pm = &p.0;
    let inner = pm * &g - &g * pm;
    pm * &inner - &inner * pm
}

/// Symmetrize, then snap the eigenvalues to `{0, 1}` keeping rank `k`.
pub fn retract(x: &DMatrix<f64>, k: usize) -> ProjectionPoint {
    let (_, vectors) = sym_eigen_desc(x);
    let v = vectors.columns(0, k);
    ProjectionPoint(v * v.transpose())
}

/// Gauss–Newton polish in frame coordinates: `F ← polar(F + W Nᵗ)` with `N`
/// an orthonormal basis of the complement, `W` the damped least-squares step
/// for the residuals `‖f_j‖² - d_j`. Converges where the gradient flow slows
/// down on degenerate (quartic) minima.
fn polish(p: &ProjectionPoint, d: &[f64], k: usize, iters: usize) -> ProjectionPoint {
    let n = p.size();
    let (_, vectors) = sym_eigen_desc(&p.0);
    let mut f = vectors.columns(0, k).transpose();
    let mut lambda = 1e-6;
    let residual = |f: &DMatrix<f64>| -> nalgebra::DVector<f64> {
        nalgebra::DVector::from_iterator(n, f.column_iter().zip(d).map(|(c, &dj)| c.norm_squared() - dj))
    };
    let mut r = residual(&f);
    for _ in 0..iters {
        if r.norm_squared() <= (TOL_FIBER * TOL_FIBER) * 1e-4 || n == k {
            break;
        }
        let q = DMatrix::<f64>::identity(n, n) - f.transpose() * &f;
        let (_, qv) = sym_eigen_desc(&q);
        let comp = qv.columns(0, n - k).into_owned();
        let vars = k * (n - k);
        let jac = DMatrix::from_fn(n, vars, |j, v| {
            let (a, b) = (v / (n - k), v % (n - k));
            2.0 * f[(a, j)] * comp[(j, b)]
        });
        let jt = jac.transpose();
        let mut improved = false;
        for _ in 0..20 {
            let lhs = &jt * &jac + DMatrix::<f64>::identity(vars, vars) * lambda;
            let Some(step) = lhs.cholesky().map(|c| c.solve(&(-(&jt * &r)))) else {
                lambda *= 10.0;
                continue;
            };
            let w = DMatrix::from_fn(k, n - k, |a, b| step[a * (n - k) + b]);
            let Some(cand) = polar_rows(&(&f + w * comp.transpose())) else {
                lambda *= 10.0;
                continue;
            };
            let rc = residual(&cand);
            if rc.norm_squared() < r.norm_squared() {
                f = cand;
                r = rc;
                lambda = (lambda * 0.1).max(1e-15);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    ProjectionPoint(f.transpose() * f)
}

/// Riemannian gradient descent with backtracking (step halved from 1), then a
/// Gauss–Newton polish. `Ok(None)` when the objective stays above
/// `TOL_FIBER²`.
pub fn descend_to_fiber(
    p0: &ProjectionPoint,
    d: &DiagonalTarget,
    max_iters: usize,
) -> Result<Option<(ProjectionPoint, usize)>> {
    let k = p0
        .require_valid(TOL_VERIFY)
        .map_err(|e| Error::InvalidStart(e.to_string()))?;
    if p0.size() != d.n || k != d.k {
        return Err(Error::InvalidStart(format!(
            "start has size {} and rank {k}, target has n = {} and k = {}",
            p0.size(),
            d.n,
            d.k
        )));
    }
    d.require_hypersimplex()?;
    let goal = TOL_FIBER * TOL_FIBER;
    let mut p = p0.clone();
    let mut f = objective(&p, &d.d);
    let mut iters = 0;
    while iters < max_iters && f > goal {
        iters += 1;
        let grad = riemannian_gradient(&p, &d.d);
        let g2 = grad.norm_squared();
        if g2 < 1e-30 {
            break;
        }
        let mut t = 1.0;
        let mut moved = false;
        while t > 1e-12 {
            let cand = retract(&(&p.0 - &grad * t), k);
            let fc = objective(&cand, &d.d);
            if fc <= f - 1e-4 * t * g2 {
                p = cand;
                f = fc;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        // slow progress: hand over to the polish
        if !moved || (iters > 50 && g2 < 1e-6 * f) {
            break;
        }
    }
    if f > goal {
        let q = polish(&p, &d.d, k, 200);
        let fq = objective(&q, &d.d);
        if fq < f {
            p = q;
            f = fq;
        }
    }
    Ok((f <= goal).then_some((p, iters)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentEstimate {
    pub count: usize,
    pub representatives: Vec<ProjectionPoint>,
    pub converged: usize,
    pub seeds: Vec<u64>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Largest chordal distance at which linking by path search is attempted.
pub const SEARCH_RADIUS: f64 = 1.0;

/// Estimates the number of fiber components from `num_samples` seeded
/// descents. Two points are linked when they are within `link_tol` or when a
/// frame path between them is found (at most `path_budget` searches,
/// nearest pairs first). An upper-bound heuristic, not a proof.
pub fn count_components(
    d: &DiagonalTarget,
    num_samples: usize,
    link_tol: f64,
    path_budget: usize,
    seed: u64,
) -> Result<ComponentEstimate> {
    d.require_hypersimplex()?;
    let seeds: Vec<u64> = (0..num_samples as u64).map(|i| seed.wrapping_add(i)).collect();
    let results: Vec<Option<ProjectionPoint>> = seeds
        .par_iter()
        .map(|&s| {
            let p0 = gram(&random_frame(d.n, d.k, s)).ok()?;
            descend_to_fiber(&p0, d, 10_000).ok().flatten().map(|(p, _)| p)
        })
        .collect();
    let mut points: Vec<ProjectionPoint> = results.into_iter().flatten().collect();
    if points.is_empty() {
        return Err(Error::NoConvergedSamples);
    }
    points.sort_by(|a, b| {
        a.0.iter()
            .zip(b.0.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let m = points.len();
    let mut parent: Vec<usize> = (0..m).collect();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            let dist = points[i].distance(&points[j]);
            if dist <= link_tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            } else if dist <= SEARCH_RADIUS {
                pairs.push((dist, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let frames: Vec<Option<Frame>> = points.iter().map(|p| factor_projection(p).ok()).collect();
    let budget = SearchBudget::default();
    let mut attempts = 0;
    for (_, i, j) in pairs {
        if attempts >= path_budget {
            break;
        }
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a == b {
            continue;
        }
        let (Some(f0), Some(f1)) = (&frames[i], &frames[j]) else {
            continue;
        };
        attempts += 1;
        // both frames represent their projection up to O(k); align first
        let q = orthogonal_procrustes(&f0.0, &f1.0);
        let f1 = f1.left(&q);
        let target = DiagonalTarget {
            n: d.n,
            k: d.k,
            d: f0.norms_squared(),
        };
        if let Ok(SearchOutcome::Found(_)) = numerical_path_search(f0, &f1, &target, &budget) {
            parent[a] = b;
        }
    }
    let mut reps = Vec::new();
    let mut roots = Vec::new();
    for i in 0..m {
        let r = find(&mut parent, i);
        if !roots.contains(&r) {
            roots.push(r);
            reps.push(points[i].clone());
        }
    }
    Ok(ComponentEstimate {
        count: reps.len(),
        representatives: reps,
        converged: m,
        seeds,
    })
}

fn near(x: f64, y: f64) -> bool {
    (x - y).abs() <= 1e-12
}

/// Closed forms for two catalogued fibers: a permutation of
/// `(1, …, 1, 0, …, 0)` (a single coordinate subspace) and a permutation of
/// `(1, 1/3, 1/3, 1/3)` with `k = 2` (the four planes
/// `span{e_i, (e_a ± e_b ± e_c)/√3}`). `None` otherwise.
pub fn exact_fiber_special(d: &DiagonalTarget) -> Option<Vec<ProjectionPoint>> {
    let n = d.n;
    if d.d.iter().all(|&x| near(x, 0.0) || near(x, 1.0)) {
        let diag: Vec<f64> = d.d.iter().map(|&x| x.round()).collect();
        if diag.iter().sum::<f64>() as usize != d.k {
            return None;
        }
        return Some(vec![ProjectionPoint(DMatrix::from_diagonal(
            &nalgebra::DVector::from_vec(diag),
        ))]);
    }
    if n == 4 && d.k == 2 {
        let ones: Vec<usize> = (0..4).filter(|&i| near(d.d[i], 1.0)).collect();
        let thirds: Vec<usize> = (0..4).filter(|&i| near(d.d[i], 1.0 / 3.0)).collect();
        if ones.len() == 1 && thirds.len() == 3 {
            let i0 = ones[0];
            let (a, b, c) = (thirds[0], thirds[1], thirds[2]);
            let mut out = Vec::with_capacity(4);
            for (sb, sc) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut v = nalgebra::DVector::zeros(4);
                let s = 1.0 / 3f64.sqrt();
                v[a] = s;
                v[b] = sb * s;
                v[c] = sc * s;
                let mut p = &v * v.transpose();
                p[(i0, i0)] = 1.0;
                out.push(ProjectionPoint(p));
            }
            return Some(out);
        }
    }
    None
}
