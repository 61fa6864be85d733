//! Critical-stratum candidates of the height functions on the Grassmannian
//! restricted to a fiber: a sorted height vector splits `ℝⁿ` into level
//! blocks `E_1 ⊕ … ⊕ E_ℓ`, a critical subspace meets block `i` in dimension
//! `c_i`, and the trace equations fix the levels `b_i`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypersimplex::DiagonalTarget;
use crate::tol::{TOL_STRATA, TOL_SUM};

/// Upper bound on candidates (or search nodes) an enumeration may visit.
pub const ENUMERATION_BOUND: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeightSpec {
    pub a: Vec<f64>,
    /// `a[sigma[0]] ≥ a[sigma[1]] ≥ …`, ties in index order.
    pub sigma: Vec<usize>,
    /// `(b_i, m_i)` with strictly decreasing `b_i`.
    pub blocks: Vec<(f64, usize)>,
}

/// Descending sort of `a` with equal values grouped into blocks.
pub fn sort_spec(a: &[f64]) -> HeightSpec {
    let mut sigma: Vec<usize> = (0..a.len()).collect();
    sigma.sort_by(|&i, &j| a[j].total_cmp(&a[i]));
    let mut blocks: Vec<(f64, usize)> = Vec::new();
    for &i in &sigma {
        match blocks.last_mut() {
            Some((b, m)) if *b == a[i] => *m += 1,
            _ => blocks.push((a[i], 1)),
        }
    }
    HeightSpec {
        a: a.to_vec(),
        sigma,
        blocks,
    }
}

/// `C_i (n - k - M_i + C_i)` with `C_i`, `M_i` the prefix sums up to block
/// `i` (1-based).
pub fn level_codimension(m: &[usize], c: &[usize], i: usize, n: usize, k: usize) -> Result<i64> {
    if i == 0 || i > m.len() || c.len() != m.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: m.len(),
        });
    }
    let big_m: usize = m[..i].iter().sum();
    let big_c: usize = c[..i].iter().sum();
    Ok(big_c as i64 * (n as i64 - k as i64 - big_m as i64 + big_c as i64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumCandidate {
    /// Position `j` of the sorted vector holds entry `sigma[j]` of `d`.
    pub sigma: Vec<usize>,
    pub m: Vec<usize>,
    pub c: Vec<usize>,
    pub b: Vec<f64>,
    pub feasible: bool,
    pub level_codims: Vec<i64>,
    /// First prefix (1-based) with level codimension one, for feasible
    /// candidates.
    pub witness_r: Option<usize>,
}

impl StratumCandidate {
    /// Entries of `d` in block order.
    pub fn sorted_entries(&self, d: &DiagonalTarget) -> Vec<f64> {
        self.sigma.iter().map(|&j| d.d[j]).collect()
    }

    /// Block `i` as its entries of `d`.
    pub fn block_entries(&self, d: &DiagonalTarget) -> Vec<Vec<f64>> {
        let sorted = self.sorted_entries(d);
        let mut out = Vec::with_capacity(self.m.len());
        let mut start = 0;
        for &mi in &self.m {
            out.push(sorted[start..start + mi].to_vec());
            start += mi;
        }
        out
    }
}

fn check_shape(d: &DiagonalTarget, sigma: &[usize], m: &[usize], c: &[usize]) -> Result<()> {
    let n = d.n;
    let mut seen = vec![false; n];
    if sigma.len() != n || sigma.iter().any(|&s| s >= n || std::mem::replace(&mut seen[s], true)) {
        return Err(Error::ShapeMismatch(format!("sigma is not a permutation of 0..{n}")));
    }
    if m.iter().sum::<usize>() != n || m.contains(&0) {
        return Err(Error::ShapeMismatch(format!("m = {m:?} is not a composition of {n}")));
    }
    if c.len() != m.len() || c.iter().zip(m).any(|(ci, mi)| ci > mi) {
        return Err(Error::ShapeMismatch(format!("occupancies {c:?} do not fit blocks {m:?}")));
    }
    if c.iter().sum::<usize>() != d.k {
        return Err(Error::ShapeMismatch(format!("occupancies {c:?} do not sum to k = {}", d.k)));
    }
    Ok(())
}

fn block_level(sum: f64, size: usize, c: usize) -> f64 {
    (c as f64 - sum) / size as f64
}

fn block_fits(values: impl Iterator<Item = f64>, b: f64) -> bool {
    values.into_iter().all(|v| {
        let x = v + b;
        (-TOL_STRATA..=1.0 + TOL_STRATA).contains(&x)
    })
}

/// Levels from the trace equations `Σ_{j ∈ block i} (d^σ_j + b_i) = c_i`;
/// feasible iff the levels strictly decrease and every shifted entry lies in
/// `[0, 1]` (each block's diagonal is then attained on its Grassmannian).
pub fn solve_levels(
    d: &DiagonalTarget,
    sigma: &[usize],
    m: &[usize],
    c: &[usize],
) -> Result<(Vec<f64>, bool)> {
    check_shape(d, sigma, m, c)?;
    let mut b = Vec::with_capacity(m.len());
    let mut feasible = true;
    let mut start = 0;
    for (&mi, &ci) in m.iter().zip(c) {
        let block = &sigma[start..start + mi];
        let bi = block_level(block.iter().map(|&j| d.d[j]).sum(), mi, ci);
        feasible &= block_fits(block.iter().map(|&j| d.d[j]), bi);
        if let Some(&prev) = b.last() {
            feasible &= prev - bi > TOL_STRATA;
        }
        b.push(bi);
        start += mi;
    }
    Ok((b, feasible))
}

fn candidate(d: &DiagonalTarget, sigma: Vec<usize>, m: Vec<usize>, c: Vec<usize>) -> StratumCandidate {
    let (b, feasible) = solve_levels(d, &sigma, &m, &c).expect("enumerated shapes are valid");
    let level_codims: Vec<i64> = (1..=m.len())
        .map(|i| level_codimension(&m, &c, i, d.n, d.k).expect("index in range"))
        .collect();
    let witness_r = if feasible {
        level_codims.iter().position(|&x| x == 1).map(|r| r + 1)
    } else {
        None
    };
    StratumCandidate {
        sigma,
        m,
        c,
        b,
        feasible,
        level_codims,
        witness_r,
    }
}

/// Quantized value classes: indices of equal entries, ascending, so that
/// subsets are chosen up to permutations of equal values.
fn value_keys(d: &[f64]) -> Vec<i64> {
    d.iter().map(|v| (v / TOL_SUM.sqrt()).round() as i64).collect()
}

/// Submasks of `remaining` that take, from every class of equal values, the
/// lowest-index members first.
fn canonical_submasks(remaining: u32, keys: &[i64]) -> Vec<u32> {
    let mut out = Vec::new();
    let mut sub = remaining;
    while sub != 0 {
        let canonical = (0..keys.len()).all(|j| {
            if sub & (1 << j) != 0 || remaining & (1 << j) == 0 {
                return true;
            }
            // j is left out: no later equal index may be taken
            (j + 1..keys.len()).all(|l| sub & (1 << l) == 0 || keys[l] != keys[j])
        });
        if canonical {
            out.push(sub);
        }
        sub = (sub - 1) & remaining;
    }
    out.reverse();
    out
}

fn members(mask: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|&j| mask & (1 << j) != 0).collect()
}

struct Search<'a> {
    d: &'a DiagonalTarget,
    keys: Vec<i64>,
    max_blocks: usize,
    /// Skip prefixes that cannot become feasible.
    feasible_only: bool,
    /// Skip prefixes that cannot contain a codimension-one level.
    codim_one_only: bool,
    visited: usize,
    out: Vec<StratumCandidate>,
    stop_at_first: bool,
}

impl Search<'_> {
    fn run(&mut self, remaining: u32, blocks: &mut Vec<Vec<usize>>, c: &mut Vec<usize>, b: &mut Vec<f64>, hit: bool) -> Result<()> {
        let (n, k) = (self.d.n, self.d.k);
        if self.stop_at_first && !self.out.is_empty() {
            return Ok(());
        }
        if remaining == 0 {
            if self.codim_one_only && !hit {
                return Ok(());
            }
            let sigma = blocks.concat();
            let m = blocks.iter().map(Vec::len).collect();
            self.out.push(candidate(self.d, sigma, m, c.clone()));
            return Ok(());
        }
        if blocks.len() == self.max_blocks {
            return Ok(());
        }
        let used_c: usize = c.iter().sum();
        let used_m: usize = blocks.iter().map(Vec::len).sum();
        let last_allowed = blocks.len() + 1 == self.max_blocks;
        for sub in canonical_submasks(remaining, &self.keys) {
            if last_allowed && sub != remaining {
                continue;
            }
            let block = members(sub, n);
            let size = block.len();
            let sum: f64 = block.iter().map(|&j| self.d.d[j]).sum();
            let closing = sub == remaining;
            let c_range = if closing {
                let rest = k.checked_sub(used_c);
                match rest {
                    Some(r) if r <= size => r..=r,
                    _ => continue,
                }
            } else {
                0..=size.min(k - used_c)
            };
            for ci in c_range {
                self.visited += 1;
                if self.visited > ENUMERATION_BOUND {
                    return Err(Error::TooLarge {
                        bound: ENUMERATION_BOUND,
                    });
                }
                let bi = block_level(sum, size, ci);
                if self.feasible_only {
                    if !block_fits(block.iter().map(|&j| self.d.d[j]), bi) {
                        continue;
                    }
                    if b.last().is_some_and(|&prev| prev - bi <= TOL_STRATA) {
                        continue;
                    }
                }
                let (big_c, big_m) = (used_c + ci, used_m + size);
                let now_hit = hit || (big_c == 1 && big_m == n - k);
                if self.codim_one_only && !now_hit && (big_m >= n - k || big_c > 1) {
                    continue;
                }
                blocks.push(block.clone());
                c.push(ci);
                b.push(bi);
                self.run(remaining & !sub, blocks, c, b, now_hit)?;
                blocks.pop();
                c.pop();
                b.pop();
                if self.stop_at_first && !self.out.is_empty() {
                    return Ok(());
                }
            }
        }
        Ok(())
    }
}

fn search(
    d: &DiagonalTarget,
    max_blocks: usize,
    feasible_only: bool,
    codim_one_only: bool,
    stop_at_first: bool,
) -> Result<Vec<StratumCandidate>> {
    d.require_hypersimplex()?;
    if d.n > 31 {
        return Err(Error::TooLarge {
            bound: ENUMERATION_BOUND,
        });
    }
    let mut s = Search {
        d,
        keys: value_keys(&d.d),
        max_blocks: max_blocks.max(1),
        feasible_only,
        codim_one_only,
        visited: 0,
        out: Vec::new(),
        stop_at_first,
    };
    let full = (1u32 << d.n) - 1;
    s.run(full, &mut Vec::new(), &mut Vec::new(), &mut Vec::new(), false)?;
    Ok(s.out)
}

/// Every `(σ, m, c)` with at most `max_blocks` blocks, `σ` taken up to
/// reordering inside blocks and up to exchanging equal entries of `d`.
pub fn enumerate_strata(d: &DiagonalTarget, max_blocks: usize) -> Result<Vec<StratumCandidate>> {
    search(d, max_blocks, false, false, false)
}

/// The feasible candidates only (pruned search; scales to larger `n`).
pub fn enumerate_feasible_strata(d: &DiagonalTarget, max_blocks: usize) -> Result<Vec<StratumCandidate>> {
    search(d, max_blocks, true, false, false)
}

/// `true` iff no feasible candidate has a prefix with `C_r = 1` and
/// `M_r = n - k` (level codimension one). Otherwise returns a witness with
/// as few blocks as possible.
pub fn verify_no_codim_one(d: &DiagonalTarget) -> Result<(bool, Option<StratumCandidate>)> {
    for max_blocks in 2..=d.n {
        let found = search(d, max_blocks, true, true, true)?;
        if let Some(w) = found.into_iter().next() {
            return Ok((false, Some(w)));
        }
    }
    Ok((true, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn third() -> DiagonalTarget {
        DiagonalTarget::new(2, vec![1.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]).unwrap()
    }

    #[test]
    fn sort_spec_examples() {
        let s = sort_spec(&[0.0; 4]);
        assert_eq!(s.blocks, vec![(0.0, 4)]);
        let s = sort_spec(&[3.0, 1.0, 3.0, 0.0]);
        assert_eq!(s.blocks, vec![(3.0, 2), (1.0, 1), (0.0, 1)]);
        assert_eq!(s.sigma, vec![0, 2, 1, 3]);
        let s = sort_spec(&[1.0, 2.0]);
        assert_eq!(s.sigma, vec![1, 0]);
    }

    #[test]
    fn level_codimension_examples() {
        assert_eq!(level_codimension(&[2, 2], &[1, 1], 1, 4, 2).unwrap(), 1);
        assert_eq!(level_codimension(&[2, 2], &[1, 1], 2, 4, 2).unwrap(), 0);
        assert_eq!(level_codimension(&[2, 2], &[0, 2], 1, 4, 2).unwrap(), 0);
        assert!(level_codimension(&[2, 2], &[1, 1], 3, 4, 2).is_err());
        assert!(level_codimension(&[2, 2], &[1, 1], 0, 4, 2).is_err());
    }

    #[test]
    fn solve_levels_examples() {
        let (b, ok) = solve_levels(&third(), &[1, 2, 0, 3], &[2, 2], &[1, 1]).unwrap();
        assert!(ok);
        assert_abs_diff_eq!(b[0], 1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b[1], -1.0 / 6.0, epsilon = 1e-15);

        let half = DiagonalTarget::equal_norm(4, 2).unwrap();
        let (b, ok) = solve_levels(&half, &[0, 1, 2, 3], &[2, 2], &[1, 1]).unwrap();
        assert!(!ok);
        assert_eq!(b, vec![0.0, 0.0]);

        let (b, ok) = solve_levels(&third(), &[0, 1, 2, 3], &[2, 2], &[1, 1]).unwrap();
        assert!(!ok);
        assert_abs_diff_eq!(b[0], -1.0 / 6.0, epsilon = 1e-15);

        assert!(matches!(
            solve_levels(&third(), &[0, 1, 2, 2], &[2, 2], &[1, 1]),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(solve_levels(&third(), &[0, 1, 2, 3], &[2, 2], &[2, 1]).is_err());
    }

    #[test]
    fn enumeration_contains_the_zero_stratum() {
        let half = DiagonalTarget::equal_norm(4, 2).unwrap();
        let all = enumerate_strata(&half, 4).unwrap();
        assert!(all
            .iter()
            .any(|s| s.m == vec![4] && s.c == vec![2] && s.b == vec![0.0] && s.feasible));
        let one = enumerate_strata(&half, 1).unwrap();
        assert_eq!(one.len(), 1);
        assert_abs_diff_eq!(one[0].b[0], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn enumeration_finds_the_codim_one_witness() {
        let d = third();
        let all = enumerate_strata(&d, 4).unwrap();
        assert!(all.iter().any(|s| s.feasible
            && s.m == vec![2, 2]
            && s.c == vec![1, 1]
            && s.witness_r == Some(1)));
        let feasible = enumerate_feasible_strata(&d, 4).unwrap();
        let from_all: Vec<_> = all.into_iter().filter(|s| s.feasible).collect();
        assert_eq!(feasible, from_all);
    }

    #[test]
    fn codim_one_verdicts() {
        let (ok, w) = verify_no_codim_one(&DiagonalTarget::equal_norm(4, 2).unwrap()).unwrap();
        assert!(ok && w.is_none());

        let d = third();
        let (ok, w) = verify_no_codim_one(&d).unwrap();
        assert!(!ok);
        let w = w.unwrap();
        assert_eq!((w.m.clone(), w.c.clone()), (vec![2, 2], vec![1, 1]));
        assert_abs_diff_eq!(w.b[0], 1.0 / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.b[1], -1.0 / 6.0, epsilon = 1e-12);
        let s: f64 = w.sorted_entries(&d)[..2].iter().sum();
        assert!(s < 1.0);

        let boundary = DiagonalTarget::new(
            3,
            vec![2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        )
        .unwrap();
        assert!(verify_no_codim_one(&boundary).unwrap().0);
    }

    #[test]
    fn levels_are_balanced() {
        let d = DiagonalTarget::new(3, vec![0.7, 0.6, 0.5, 0.5, 0.4, 0.3]).unwrap();
        for s in enumerate_strata(&d, 3).unwrap() {
            let total: f64 = s.m.iter().zip(&s.b).map(|(&m, &b)| m as f64 * b).sum();
            assert!(total.abs() < 1e-12);
            assert_eq!(*s.level_codims.last().unwrap(), 0);
        }
    }
}
