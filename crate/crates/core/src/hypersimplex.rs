//! Diagonal targets `d ∈ ℝⁿ` with rank `k`, hypersimplex membership and the
//! subset-sum condition that guarantees connected Schur-Horn fibers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tol::TOL_SUM;

/// A prescribed diagonal (equivalently, the squared column norms of a frame).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTarget")]
pub struct DiagonalTarget {
    pub n: usize,
    pub k: usize,
    pub d: Vec<f64>,
}

#[derive(Deserialize)]
struct RawTarget {
    n: Option<usize>,
    k: usize,
    d: Vec<f64>,
}

impl TryFrom<RawTarget> for DiagonalTarget {
    type Error = Error;

    fn try_from(raw: RawTarget) -> Result<Self> {
        if let Some(n) = raw.n {
            if n != raw.d.len() {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: raw.d.len(),
                });
            }
        }
        DiagonalTarget::new(raw.k, raw.d)
    }
}

impl DiagonalTarget {
    /// Checks only the shape (`n ≥ 1`, `1 ≤ k ≤ n`, finite entries); membership
    /// is a separate question answered by [`DiagonalTarget::in_hypersimplex`].
    pub fn new(k: usize, d: Vec<f64>) -> Result<Self> {
        let n = d.len();
        if n == 0 {
            return Err(Error::ShapeMismatch("empty target".into()));
        }
        if k == 0 || k > n {
            return Err(Error::RankOutOfRange {
                n,
                k,
                reason: "need 1 <= k <= n".into(),
            });
        }
        if let Some(x) = d.iter().find(|x| !x.is_finite()) {
            return Err(Error::Parse(format!("non-finite entry {x}")));
        }
        Ok(Self { n, k, d })
    }

    /// The equal-norm target `(k/n, …, k/n)`.
    pub fn equal_norm(n: usize, k: usize) -> Result<Self> {
        Self::new(k, vec![k as f64 / n as f64; n])
    }

    /// Parses `"1, 1/3, 0.25"`; fractions are divided once as exact integers.
    pub fn parse(k: usize, text: &str) -> Result<Self> {
        let d = parse_vector(text)?;
        Self::new(k, d)
    }

    pub fn sum(&self) -> f64 {
        self.d.iter().sum()
    }

    pub fn in_hypersimplex(&self) -> bool {
        self.d.iter().all(|&x| (-TOL_SUM..=1.0 + TOL_SUM).contains(&x))
            && (self.sum() - self.k as f64).abs() <= TOL_SUM * self.n as f64
    }

    pub fn require_hypersimplex(&self) -> Result<()> {
        if self.in_hypersimplex() {
            Ok(())
        } else {
            Err(Error::HypersimplexViolation(format!(
                "d = {:?}, k = {}",
                self.d, self.k
            )))
        }
    }

    /// Sum of the `n - k` smallest entries.
    pub fn smallest_complement_sum(&self) -> f64 {
        let mut sorted = self.d.clone();
        sorted.sort_by(f64::total_cmp);
        sorted[..self.n - self.k].iter().sum()
    }

    /// Every `(n-k)`-subset of entries sums to at least 1. The smallest
    /// entries form the worst subset, so one sort decides it.
    pub fn satisfies_hypothesis(&self) -> Result<bool> {
        self.require_hypersimplex()?;
        Ok(self.smallest_complement_sum() >= 1.0 - TOL_SUM)
    }

    /// `(1 - d_1, …, 1 - d_n)` with rank `n - k`.
    pub fn dual(&self) -> Result<Self> {
        self.require_hypersimplex()?;
        if self.k == self.n {
            return Err(Error::RankOutOfRange {
                n: self.n,
                k: self.k,
                reason: "dual rank would be zero".into(),
            });
        }
        Ok(Self {
            n: self.n,
            k: self.n - self.k,
            d: self.d.iter().map(|x| 1.0 - x).collect(),
        })
    }

    /// All entries equal up to `TOL_SUM`.
    pub fn is_equal_norm(&self) -> bool {
        let first = self.d[0];
        self.d.iter().all(|x| (x - first).abs() <= TOL_SUM)
    }

    /// Entries are 0 or 1 (a coordinate subspace is the only preimage).
    pub fn is_vertex(&self) -> bool {
        self.d
            .iter()
            .all(|&x| x.abs() <= TOL_SUM || (x - 1.0).abs() <= TOL_SUM)
    }

    /// Same entries, reordered so that position `j` holds `d[perm[j]]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            n: self.n,
            k: self.k,
            d: perm.iter().map(|&i| self.d[i]).collect(),
        }
    }
}

/// `d_1 = … = d_k = α`, `d_{k+1} = … = d_n = β` with `α = 1 - (n-k)β/k`.
pub fn two_value_target(n: usize, k: usize, beta: f64) -> Result<DiagonalTarget> {
    if k < 2 || k + 2 > n {
        return Err(Error::RankOutOfRange {
            n,
            k,
            reason: "two-value family needs 2 <= k <= n-2".into(),
        });
    }
    let lo = 1.0 / (n - k) as f64;
    let hi = k as f64 / n as f64;
    if beta < lo - TOL_SUM || beta > hi + TOL_SUM {
        return Err(Error::BetaOutOfRange { beta, lo, hi });
    }
    let alpha = 1.0 - (n - k) as f64 * beta / k as f64;
    let mut d = vec![alpha; k];
    d.extend(std::iter::repeat_n(beta, n - k));
    DiagonalTarget::new(k, d)
}

/// Parses a comma separated list of decimals or `a/b` fractions.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse_scalar)
        .collect()
}

fn parse_scalar(s: &str) -> Result<f64> {
    let bad = || Error::Parse(format!("cannot parse entry {s:?}"));
    match s.split_once('/') {
        Some((num, den)) => {
            let den: f64 = match den.trim().parse::<i64>() {
                Ok(v) => v as f64,
                Err(_) => den.trim().parse().map_err(|_| bad())?,
            };
            let num: f64 = match num.trim().parse::<i64>() {
                Ok(v) => v as f64,
                Err(_) => num.trim().parse().map_err(|_| bad())?,
            };
            if den == 0.0 {
                return Err(bad());
            }
            Ok(num / den)
        }
        None => s.parse().map_err(|_| bad()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(k: usize, d: &[f64]) -> DiagonalTarget {
        DiagonalTarget::new(k, d.to_vec()).unwrap()
    }

    #[test]
    fn membership_examples() {
        assert!(t(2, &[1.0, 1.0, 0.0, 0.0]).in_hypersimplex());
        assert!(t(2, &[0.5; 4]).in_hypersimplex());
        assert!(!t(2, &[0.7, 0.7, 0.7]).in_hypersimplex());
        assert!(!t(1, &[1.5, -0.5]).in_hypersimplex());
    }

    #[test]
    fn hypothesis_examples() {
        let eq = DiagonalTarget::equal_norm(6, 3).unwrap();
        assert!(eq.satisfies_hypothesis().unwrap());
        assert!(!t(2, &[1.0, 1.0, 0.0, 0.0]).satisfies_hypothesis().unwrap());
        let third = 1.0 / 3.0;
        assert!(!t(2, &[1.0, third, third, third]).satisfies_hypothesis().unwrap());
        assert!(matches!(
            t(2, &[0.7, 0.7, 0.7]).satisfies_hypothesis(),
            Err(Error::HypersimplexViolation(_))
        ));
    }

    #[test]
    fn two_value_examples() {
        assert_eq!(two_value_target(4, 2, 0.5).unwrap().d, vec![0.5; 4]);
        let d = two_value_target(6, 3, 1.0 / 3.0).unwrap();
        let expected = [2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
        for (a, b) in d.d.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((d.smallest_complement_sum() - 1.0).abs() < 1e-15);
        assert!(d.satisfies_hypothesis().unwrap());
        assert!(matches!(
            two_value_target(6, 3, 0.6),
            Err(Error::BetaOutOfRange { .. })
        ));
        assert!(matches!(
            two_value_target(5, 1, 0.25),
            Err(Error::RankOutOfRange { .. })
        ));
    }

    #[test]
    fn dual_examples() {
        let d = t(2, &[1.0, 1.0, 0.0, 0.0]).dual().unwrap();
        assert_eq!((d.k, d.d.clone()), (2, vec![0.0, 0.0, 1.0, 1.0]));
        assert_eq!(t(2, &[0.5; 4]).dual().unwrap(), t(2, &[0.5; 4]));
        let d = t(2, &[0.4, 0.3, 0.3, 0.4, 0.3, 0.3]).dual().unwrap();
        assert_eq!(d.k, 4);
        for (a, b) in d.d.iter().zip([0.6, 0.7, 0.7, 0.6, 0.7, 0.7]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn parsing() {
        let d = DiagonalTarget::parse(2, "1, 1/3, 1/3 ,1/3").unwrap();
        assert_eq!(d.d[1], 1.0 / 3.0);
        assert!(d.in_hypersimplex());
        assert!(parse_vector("1/0").is_err());
        assert!(parse_vector("x").is_err());
        let json: DiagonalTarget = serde_json::from_str(r#"{"n":2,"k":1,"d":[0.5,0.5]}"#).unwrap();
        assert_eq!(json.d, vec![0.5, 0.5]);
        assert!(serde_json::from_str::<DiagonalTarget>(r#"{"n":3,"k":1,"d":[0.5,0.5]}"#).is_err());
        assert!(serde_json::from_str::<DiagonalTarget>(r#"{"n":2,"k":3,"d":[0.5,0.5]}"#).is_err());
    }
}
