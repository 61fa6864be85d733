//! Matching a target against the catalogued families whose frame spaces are
//! known to be connected (admissible) or known to be disconnected.
//!
//! Everything here is up to a permutation of the entries: a match records the
//! permutation `perm` with `d[perm[j]]` the entry placed at position `j` of the
//! family's canonical layout.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::hypersimplex::DiagonalTarget;
use crate::tol::TOL_SUM;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdmissibilityStatus {
    ProvenAdmissible,
    ProvenDisconnected,
    Unknown,
}

/// Which catalogued criterion decided the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    /// Coordinate-subspace fiber: the frame space is a copy of `O(k)`.
    OrthogonalGroup,
    /// `k = 1`: finitely many sign patterns.
    RankOne,
    /// Three pairwise sums exceed 1 (`k = 2`, polygon criterion).
    PolygonTriple,
    /// `(k/n, …, k/n)`.
    EqualNorm,
    /// `n = 2p, k = 2q`, two values in the doubled layout.
    TwoValueEven,
    /// `n = 2p+1, k = 2q+1 < p`.
    TwoValueOddRankOdd,
    /// `n = 2p+1, k = 2q < p`, `q ≥ 2`.
    TwoValueOddRankEven,
    /// `(x, x)` doubled layout with all entries on one side of 1/2.
    DoubledPattern,
    /// `(x, x, y)` layout lifted from an equal-norm target of rank `k-1`.
    OddPattern,
    /// The complementary target `1 - d` of rank `n - k` matched one of the above.
    Duality,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::OrthogonalGroup => "orthogonal-group",
            Rule::RankOne => "rank-one",
            Rule::PolygonTriple => "polygon-triple",
            Rule::EqualNorm => "equal-norm",
            Rule::TwoValueEven => "two-value-even",
            Rule::TwoValueOddRankOdd => "two-value-odd-rank-odd",
            Rule::TwoValueOddRankEven => "two-value-odd-rank-even",
            Rule::DoubledPattern => "doubled-pattern",
            Rule::OddPattern => "odd-pattern",
            Rule::Duality => "duality",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<(f64, f64)>,
    /// `d[permutation[j]]` sits at position `j` of the canonical layout.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub permutation: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub triple: Option<[usize; 3]>,
    /// Rank `k-1` target fed to the odd-pattern lift.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sub_target: Option<Vec<f64>>,
    /// For `duality`: the rule that matched the complementary target.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inner_rule: Option<Rule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityVerdict {
    pub status: AdmissibilityStatus,
    pub rule: Option<Rule>,
    pub witness: Witness,
}

impl AdmissibilityVerdict {
    fn unknown() -> Self {
        Self {
            status: AdmissibilityStatus::Unknown,
            rule: None,
            witness: Witness::default(),
        }
    }

    fn admissible(rule: Rule, witness: Witness) -> Self {
        Self {
            status: AdmissibilityStatus::ProvenAdmissible,
            rule: Some(rule),
            witness,
        }
    }

    fn disconnected(rule: Rule, witness: Witness) -> Self {
        Self {
            status: AdmissibilityStatus::ProvenDisconnected,
            rule: Some(rule),
            witness,
        }
    }
}

/// Classifies `d` against the catalogued families. Disconnectedness criteria
/// are tried first, then the admissible families, then the same list on
/// `1 - d` (admissibility transfers both ways under complementation).
pub fn classify_admissibility(d: &DiagonalTarget) -> Result<AdmissibilityVerdict> {
    d.require_hypersimplex()?;
    let direct = classify_direct(d)?;
    if direct.status != AdmissibilityStatus::Unknown || d.k == d.n {
        return Ok(direct);
    }
    let inner = classify_direct(&d.dual()?)?;
    if inner.status == AdmissibilityStatus::Unknown {
        return Ok(inner);
    }
    let mut witness = inner.witness;
    witness.inner_rule = inner.rule;
    Ok(AdmissibilityVerdict {
        status: inner.status,
        rule: Some(Rule::Duality),
        witness,
    })
}

fn classify_direct(d: &DiagonalTarget) -> Result<AdmissibilityVerdict> {
    let (n, k) = (d.n, d.k);
    if d.is_vertex() {
        let permutation = sorted_desc(&d.d);
        return Ok(AdmissibilityVerdict::disconnected(
            Rule::OrthogonalGroup,
            Witness {
                permutation,
                ..Witness::default()
            },
        ));
    }
    if k == 1 {
        return Ok(AdmissibilityVerdict::disconnected(
            Rule::RankOne,
            Witness::default(),
        ));
    }
    if k == 2 {
        if let Some(triple) = polygon_triple(&d.d) {
            return Ok(AdmissibilityVerdict::disconnected(
                Rule::PolygonTriple,
                Witness {
                    triple: Some(triple),
                    ..Witness::default()
                },
            ));
        }
    }
    if d.is_equal_norm() {
        let witness = Witness {
            permutation: (0..n).collect(),
            ..Witness::default()
        };
        return Ok(if (2..=n.saturating_sub(2)).contains(&k) {
            AdmissibilityVerdict::admissible(Rule::EqualNorm, witness)
        } else {
            AdmissibilityVerdict::disconnected(Rule::EqualNorm, witness)
        });
    }
    // every admissible family below satisfies the subset-sum hypothesis
    if !d.satisfies_hypothesis()? {
        return Ok(AdmissibilityVerdict::unknown());
    }
    if let Some(v) = two_value_row(d) {
        return Ok(v);
    }
    if let Some(v) = doubled_pattern(d) {
        return Ok(v);
    }
    if let Some(v) = odd_pattern(d) {
        return Ok(v);
    }
    Ok(AdmissibilityVerdict::unknown())
}

fn sorted_desc(d: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..d.len()).collect();
    idx.sort_by(|&a, &b| d[b].total_cmp(&d[a]).then(a.cmp(&b)));
    idx
}

/// Three distinct indices with all pairwise sums `> 1`. Only the three largest
/// entries need checking, and of those only the smallest pair.
pub fn polygon_triple(d: &[f64]) -> Option<[usize; 3]> {
    if d.len() < 3 {
        return None;
    }
    let idx = sorted_desc(d);
    if d[idx[1]] + d[idx[2]] > 1.0 + TOL_SUM {
        let mut t = [idx[0], idx[1], idx[2]];
        t.sort_unstable();
        Some(t)
    } else {
        None
    }
}

/// Groups indices by value (within `TOL_SUM`), largest value first.
fn value_classes(d: &[f64]) -> Vec<(f64, Vec<usize>)> {
    let mut classes: Vec<(f64, Vec<usize>)> = Vec::new();
    for i in sorted_desc(d) {
        match classes.last_mut() {
            Some((v, members)) if (*v - d[i]).abs() <= TOL_SUM => members.push(i),
            _ => classes.push((d[i], vec![i])),
        }
    }
    for (_, members) in &mut classes {
        members.sort_unstable();
    }
    classes
}

fn in_closed(x: f64, lo: f64, hi: f64) -> bool {
    x >= lo - TOL_SUM && x <= hi + TOL_SUM
}

/// The three two-value families with their closed `β` intervals. In all of
/// them the larger value `α` occurs exactly `k` times.
fn two_value_row(d: &DiagonalTarget) -> Option<AdmissibilityVerdict> {
    let (n, k) = (d.n, d.k);
    let classes = value_classes(&d.d);
    if classes.len() != 2 || classes[0].1.len() != k {
        return None;
    }
    let (alpha, alphas) = (&classes[0].0, &classes[0].1);
    let (beta, betas) = (&classes[1].0, &classes[1].1);
    let p = n / 2;
    let (rule, q, lo, hi) = if n % 2 == 0 {
        if k % 2 != 0 {
            return None;
        }
        let q = k / 2;
        if q == 0 || q >= p {
            return None;
        }
        let hi = q as f64 / p as f64;
        let lo = if k <= p {
            q as f64 / (2 * p - 2 * q) as f64
        } else {
            0.5
        };
        (Rule::TwoValueEven, q, lo, hi)
    } else if k % 2 == 1 {
        let q = (k - 1) / 2;
        if q == 0 || k >= p {
            return None;
        }
        (
            Rule::TwoValueOddRankOdd,
            q,
            q as f64 / p as f64,
            k as f64 / n as f64,
        )
    } else {
        // q = 1 would need a rank-one sub-target to be admissible
        let q = k / 2;
        if q < 2 || k >= p {
            return None;
        }
        (
            Rule::TwoValueOddRankEven,
            q,
            (2 * q - 1) as f64 / (2 * p) as f64,
            k as f64 / n as f64,
        )
    };
    if !in_closed(*beta, lo, hi) {
        return None;
    }
    // canonical layout: (α^q β^{p-q} α^q β^{p-q} [last])
    let mut permutation = Vec::with_capacity(n);
    let (a_half, b_half) = (&alphas[..q], &betas[..p - q]);
    let (a_rest, b_rest) = (&alphas[q..2 * q], &betas[p - q..2 * (p - q)]);
    permutation.extend_from_slice(a_half);
    permutation.extend_from_slice(b_half);
    permutation.extend_from_slice(a_rest);
    permutation.extend_from_slice(b_rest);
    if n % 2 == 1 {
        if rule == Rule::TwoValueOddRankOdd {
            permutation.push(alphas[2 * q]);
        } else {
            permutation.push(betas[2 * (p - q)]);
        }
    }
    debug_assert_eq!(permutation.len(), n);
    let sub_target = match rule {
        Rule::TwoValueEven => None,
        _ => Some(vec![(k - 1) as f64 / p as f64; p]),
    };
    Some(AdmissibilityVerdict::admissible(
        rule,
        Witness {
            p: Some(p),
            q: Some(q),
            alpha: Some(*alpha),
            beta: Some(*beta),
            interval: Some((lo, hi)),
            permutation,
            sub_target,
            ..Witness::default()
        },
    ))
}

/// Splits indices into two halves with matching values; `None` if some value
/// has odd multiplicity. Half `a` and half `b` are aligned position by
/// position.
fn pair_up(classes: &[(f64, Vec<usize>)]) -> Option<(Vec<usize>, Vec<usize>)> {
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (_, members) in classes {
        if members.len() % 2 != 0 {
            return None;
        }
        let h = members.len() / 2;
        a.extend_from_slice(&members[..h]);
        b.extend_from_slice(&members[h..]);
    }
    Some((a, b))
}

fn doubled_pattern(d: &DiagonalTarget) -> Option<AdmissibilityVerdict> {
    let (n, k) = (d.n, d.k);
    if n % 2 != 0 {
        return None;
    }
    let p = n / 2;
    let (a, b) = pair_up(&value_classes(&d.d))?;
    let half = |pred: &dyn Fn(f64) -> bool| a.iter().all(|&i| pred(d.d[i]));
    let ok = if p >= k {
        half(&|x| x <= 0.5 + TOL_SUM)
    } else {
        half(&|x| x >= 0.5 - TOL_SUM)
    };
    if !ok {
        return None;
    }
    let mut permutation = a;
    permutation.extend(b);
    Some(AdmissibilityVerdict::admissible(
        Rule::DoubledPattern,
        Witness {
            p: Some(p),
            permutation,
            ..Witness::default()
        },
    ))
}

/// `(x_1..x_p, x_1..x_p, y)` with `x_i ≥ (k-1)/(2p)`: the equal-norm target of
/// rank `k-1` on `p` entries is the sub-target, which needs `2 ≤ k-1 ≤ p-2`.
fn odd_pattern(d: &DiagonalTarget) -> Option<AdmissibilityVerdict> {
    let (n, k) = (d.n, d.k);
    if n % 2 != 1 || k < 3 {
        return None;
    }
    let p = (n - 1) / 2;
    if k - 1 + 2 > p {
        return None;
    }
    let mut classes = value_classes(&d.d);
    let odd: Vec<usize> = (0..classes.len())
        .filter(|&c| classes[c].1.len() % 2 == 1)
        .collect();
    if odd.len() != 1 {
        return None;
    }
    let last = classes[odd[0]].1.pop().expect("odd class is non-empty");
    let (a, b) = pair_up(&classes)?;
    let half_sub = (k - 1) as f64 / (2 * p) as f64;
    if a.iter().any(|&i| d.d[i] < half_sub - TOL_SUM) {
        return None;
    }
    let mut permutation = a;
    permutation.extend(b);
    permutation.push(last);
    Some(AdmissibilityVerdict::admissible(
        Rule::OddPattern,
        Witness {
            p: Some(p),
            permutation,
            sub_target: Some(vec![(k - 1) as f64 / p as f64; p]),
            ..Witness::default()
        },
    ))
}
