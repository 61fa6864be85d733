//! Generic homotopy search between two frames of the same variety. A failure
//! is inconclusive: it never shows that the endpoints lie in different
//! components.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::rotation::RotationFamily;
use super::{verify_path, FramePath, PathSegment, SegmentKind};
use crate::error::{Error, Result};
use crate::grassmann::Frame;
use crate::hypersimplex::DiagonalTarget;
use crate::linalg::{polar_rows, special_procrustes};
use crate::tol::{MIN_SEGMENT_SAMPLES, STEP_MAX, TOL_PATH, TOL_VERIFY};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBudget {
    /// Largest number of grid points the refined path may have.
    pub max_grid: usize,
    /// Alternating-projection sweeps per grid point before the Newton polish.
    pub projection_sweeps: usize,
    /// Newton iterations per grid point.
    pub newton_iters: usize,
    /// Smallest parameter gap the refinement may create.
    pub min_gap: f64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            max_grid: 4096,
            projection_sweeps: 40,
            newton_iters: 30,
            min_gap: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SearchOutcome {
    Found(FramePath),
    Exhausted { reason: String, grid_points: usize },
}

impl SearchOutcome {
    pub fn path(&self) -> Option<&FramePath> {
        match self {
            Self::Found(p) => Some(p),
            Self::Exhausted { .. } => None,
        }
    }
}

fn residual(f: &DMatrix<f64>, d: &[f64]) -> f64 {
    let k = f.nrows();
    let tight = (f * f.transpose() - DMatrix::<f64>::identity(k, k)).norm();
    let norms = f
        .column_iter()
        .zip(d)
        .map(|(c, &dj)| (c.norm_squared() - dj).abs())
        .fold(0.0, f64::max);
    tight.max(norms)
}

fn rescale_columns(f: &mut DMatrix<f64>, d: &[f64]) -> bool {
    for (mut c, &dj) in f.column_iter_mut().zip(d) {
        let norm = c.norm();
        if dj <= 0.0 {
            c.fill(0.0);
        } else if norm < 1e-12 {
            return false;
        } else {
            c *= dj.sqrt() / norm;
        }
    }
    true
}

/// Newton step of minimum norm for the constraints `F Fᵗ = I` (upper
/// triangle) and `‖f_j‖² = d_j`.
fn newton_step(f: &DMatrix<f64>, d: &[f64]) -> Option<DMatrix<f64>> {
    let (k, n) = (f.nrows(), f.ncols());
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (a..k).map(move |b| (a, b))).collect();
    let m = pairs.len() + n;
    let var = |r: usize, j: usize| j * k + r;
    let mut jac = DMatrix::<f64>::zeros(m, k * n);
    let mut rhs = nalgebra::DVector::<f64>::zeros(m);
    let ffx = f * f.transpose();
    for (row, &(a, b)) in pairs.iter().enumerate() {
        rhs[row] = -(ffx[(a, b)] - if a == b { 1.0 } else { 0.0 });
        for j in 0..n {
            jac[(row, var(a, j))] += f[(b, j)];
            jac[(row, var(b, j))] += f[(a, j)];
        }
    }
    for j in 0..n {
        let row = pairs.len() + j;
        rhs[row] = -(f.column(j).norm_squared() - d[j]);
        for r in 0..k {
            jac[(row, var(r, j))] = 2.0 * f[(r, j)];
        }
    }
    // the constraints are dependent (trace identity), so use a pseudo-inverse
    let step = jac.svd(true, true).solve(&rhs, 1e-12).ok()?;
    Some(DMatrix::from_fn(k, n, |r, j| step[var(r, j)]))
}

/// Projects `x` onto the frame variety of `d`: alternate nearest orthonormal
/// rows and column rescaling, then polish with minimum-norm Newton steps.
pub fn project_to_variety(x: &DMatrix<f64>, d: &[f64], budget: &SearchBudget) -> Option<Frame> {
    let mut f = x.clone();
    for _ in 0..budget.projection_sweeps {
        f = polar_rows(&f)?;
        if !rescale_columns(&mut f, d) {
            return None;
        }
        if residual(&f, d) <= TOL_PATH * 1e-2 {
            return Some(Frame(f));
        }
    }
    for _ in 0..budget.newton_iters {
        let r = residual(&f, d);
        if r <= TOL_PATH * 1e-2 {
            return Some(Frame(f));
        }
        f += newton_step(&f, d)?;
        if !f.iter().all(|v| v.is_finite()) {
            return None;
        }
    }
    (residual(&f, d) <= TOL_PATH * 1e-2).then_some(Frame(f))
}

fn validate(f: &Frame, d: &DiagonalTarget, which: &str) -> Result<()> {
    if f.k() != d.k || f.n() != d.n {
        return Err(Error::EndpointInvalid(format!(
            "{which} frame is {} × {}, expected {} × {}",
            f.k(),
            f.n(),
            d.k,
            d.n
        )));
    }
    let r = residual(&f.0, &d.d);
    if !(r <= TOL_VERIFY) {
        return Err(Error::EndpointInvalid(format!(
            "{which} frame misses the variety by {r:e}"
        )));
    }
    Ok(())
}

/// Searches for a path from `f0` to `f1` inside the frame variety of `d`.
///
/// Coincident endpoints give a constant path and endpoints in one `SO(k)`
/// orbit a rotation path. Otherwise the straight segment is projected point
/// by point onto the variety and the parameter grid is refined wherever
/// consecutive projections are more than `STEP_MAX / 2` apart; a gap that
/// refuses to shrink is a jump between branches and ends the search.
pub fn numerical_path_search(
    f0: &Frame,
    f1: &Frame,
    d: &DiagonalTarget,
    budget: &SearchBudget,
) -> Result<SearchOutcome> {
    validate(f0, d, "start")?;
    validate(f1, d, "end")?;
    let mut path = FramePath::new(d.clone());
    if f0.distance(f1) <= TOL_PATH {
        path.push(PathSegment {
            kind: SegmentKind::Reparametrized {
                source: "constant".into(),
            },
            frames: vec![f0.clone(); MIN_SEGMENT_SAMPLES],
        });
        return Ok(SearchOutcome::Found(path));
    }
    let r = special_procrustes(&f1.0, &f0.0);
    if (&r * &f0.0 - &f1.0).norm() <= TOL_PATH * 1e-1 {
        if let Ok(fam) = RotationFamily::from_matrix(&r) {
            let all: Vec<usize> = (0..d.n).collect();
            let mut seg = fam.segment(f0, &all);
            *seg.frames.last_mut().expect("non-empty") = f1.clone();
            path.push(seg);
            if verify_path(&path, TOL_PATH).passed {
                return Ok(SearchOutcome::Found(path));
            }
            path = FramePath::new(d.clone());
        }
    }

    let project = |s: f64| -> Option<Frame> {
        if s == 0.0 {
            return Some(f0.clone());
        }
        if s == 1.0 {
            return Some(f1.clone());
        }
        let x = &f0.0 * (1.0 - s) + &f1.0 * s;
        project_to_variety(&x, &d.d, budget)
    };
    let exhausted = |reason: String, grid_points: usize| {
        Ok(SearchOutcome::Exhausted {
            reason,
            grid_points,
        })
    };

    let initial: Vec<f64> = super::unit_grid(MIN_SEGMENT_SAMPLES).collect();
    let frames: Vec<Option<Frame>> = initial.par_iter().map(|&s| project(s)).collect();
    let mut grid: Vec<(f64, Frame)> = Vec::with_capacity(initial.len());
    for (s, f) in initial.into_iter().zip(frames) {
        match f {
            Some(f) => grid.push((s, f)),
            None => return exhausted(format!("projection failed at s = {s}"), grid.len()),
        }
    }
    loop {
        let bad: Vec<usize> = (0..grid.len() - 1)
            .filter(|&i| grid[i].1.distance(&grid[i + 1].1) > STEP_MAX * 0.5)
            .collect();
        if bad.is_empty() {
            break;
        }
        if grid.len() + bad.len() > budget.max_grid {
            return exhausted("grid budget exhausted".into(), grid.len());
        }
        if let Some(&i) = bad.iter().find(|&&i| grid[i + 1].0 - grid[i].0 < budget.min_gap) {
            return exhausted(
                format!("discontinuity of the projection near s = {}", grid[i].0),
                grid.len(),
            );
        }
        let mid_params: Vec<f64> = bad
            .iter()
            .map(|&i| 0.5 * (grid[i].0 + grid[i + 1].0))
            .collect();
        let mut mids: Vec<Option<Frame>> = mid_params.par_iter().map(|&s| project(s)).collect();
        let mut next = Vec::with_capacity(grid.len() + bad.len());
        let mut b = 0;
        for (i, point) in grid.into_iter().enumerate() {
            next.push(point);
            if b < bad.len() && bad[b] == i {
                match mids[b].take() {
                    Some(f) => next.push((mid_params[b], f)),
                    None => {
                        return exhausted(
                            format!("projection failed at s = {}", mid_params[b]),
                            next.len(),
                        )
                    }
                }
                b += 1;
            }
        }
        grid = next;
    }
    path.push(PathSegment {
        kind: SegmentKind::Reparametrized {
            source: "homotopy-search".into(),
        },
        frames: grid.into_iter().map(|(_, f)| f).collect(),
    });
    if verify_path(&path, TOL_PATH).passed {
        Ok(SearchOutcome::Found(path))
    } else {
        exhausted("refined path failed verification".into(), path.grid_points())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoadmapBudget {
    /// Random frames added to the two endpoints.
    pub samples: usize,
    /// Candidate edges per node, by rotation-aligned distance.
    pub neighbors: usize,
    pub seed: u64,
    pub local: SearchBudget,
}

impl Default for RoadmapBudget {
    fn default() -> Self {
        Self {
            samples: 300,
            neighbors: 8,
            seed: 0,
            local: SearchBudget {
                max_grid: 1024,
                ..SearchBudget::default()
            },
        }
    }
}

/// `R ∈ SO(k)` nearest to carrying `a` onto `b`, and the remaining distance.
fn aligned(a: &Frame, b: &Frame) -> (DMatrix<f64>, f64) {
    let r = special_procrustes(&b.0, &a.0);
    let dist = (&r * &a.0 - &b.0).norm();
    (r, dist)
}

/// Path `a → R a → b`: a rotation of the whole frame, then a homotopy.
fn edge_path(a: &Frame, b: &Frame, d: &DiagonalTarget, budget: &SearchBudget) -> Option<FramePath> {
    let (r, _) = aligned(a, b);
    let fam = RotationFamily::from_matrix(&r).ok()?;
    let all: Vec<usize> = (0..d.n).collect();
    let mut path = FramePath::new(d.clone());
    let turn = fam.segment(a, &all);
    let ra = turn.frames.last().expect("non-empty").clone();
    path.push(turn);
    match numerical_path_search(&ra, b, d, budget).ok()? {
        SearchOutcome::Found(p) => {
            path.append(p);
            Some(path)
        }
        SearchOutcome::Exhausted { .. } => None,
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Probabilistic roadmap between `f0` and `f1`: random frames projected onto
/// the variety are joined to their nearest neighbours (distance taken after
/// the best rotation, since `SO(k)`-orbits are connected) by rotation plus
/// homotopy, shortest candidate edges first, until both endpoints share a
/// component. As with the homotopy search, failure proves nothing.
pub fn roadmap_search(
    f0: &Frame,
    f1: &Frame,
    d: &DiagonalTarget,
    budget: &RoadmapBudget,
) -> Result<SearchOutcome> {
    use rand::SeedableRng;
    validate(f0, d, "start")?;
    validate(f1, d, "end")?;
    let samples: Vec<Option<Frame>> = (0..budget.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(
                budget.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64),
            );
            let x = crate::grassmann::random_frame_with(d.n, d.k, &mut rng);
            project_to_variety(&x.0, &d.d, &budget.local)
        })
        .collect();
    let mut nodes = vec![f0.clone(), f1.clone()];
    nodes.extend(samples.into_iter().flatten());
    let m = nodes.len();

    let mut edges: Vec<(f64, usize, usize)> = (0..m)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut near: Vec<(f64, usize, usize)> = (0..m)
                .filter(|&j| j != i)
                .map(|j| (aligned(&nodes[i], &nodes[j]).1, i.min(j), i.max(j)))
                .collect();
            near.sort_by(|a, b| a.0.total_cmp(&b.0));
            near.truncate(budget.neighbors);
            near
        })
        .collect();
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    edges.dedup_by(|a, b| a.1 == b.1 && a.2 == b.2);

    let mut parent: Vec<usize> = (0..m).collect();
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m];
    let mut paths: Vec<FramePath> = Vec::new();
    for &(_, i, j) in &edges {
        if find(&mut parent, 0) == find(&mut parent, 1) {
            break;
        }
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri == rj {
            continue;
        }
        if let Some(p) = edge_path(&nodes[i], &nodes[j], d, &budget.local) {
            parent[ri] = rj;
            adjacency[i].push((j, paths.len()));
            adjacency[j].push((i, paths.len()));
            paths.push(p);
        }
    }
    if find(&mut parent, 0) != find(&mut parent, 1) {
        return Ok(SearchOutcome::Exhausted {
            reason: format!("roadmap of {m} frames leaves the endpoints apart"),
            grid_points: paths.iter().map(FramePath::grid_points).sum(),
        });
    }
    // the accepted edges form a forest, so the tree path is unique
    let mut back: Vec<Option<(usize, usize)>> = vec![None; m];
    let mut queue = std::collections::VecDeque::from([0usize]);
    let mut seen = vec![false; m];
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        for &(v, e) in &adjacency[u] {
            if !seen[v] {
                seen[v] = true;
                back[v] = Some((u, e));
                queue.push_back(v);
            }
        }
    }
    let mut chain = Vec::new();
    let mut v = 1;
    while let Some((u, e)) = back[v] {
        chain.push((u, v, e));
        v = u;
    }
    chain.reverse();
    let mut out = FramePath::new(d.clone());
    for (u, v, e) in chain {
        let (lo, _) = (u.min(v), u.max(v));
        let piece = if lo == u { paths[e].clone() } else { paths[e].reversed() };
        out.append(piece);
    }
    if verify_path(&out, TOL_PATH).passed {
        Ok(SearchOutcome::Found(out))
    } else {
        Ok(SearchOutcome::Exhausted {
            reason: "stitched roadmap path failed verification".into(),
            grid_points: out.grid_points(),
        })
    }
}
