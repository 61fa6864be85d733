//! Certificate constructors for the admissible families: doubled targets,
//! odd targets lifted from a rank `k-1` certificate, the `n = 2k+1` explicit
//! path, the `k = 2` odd base case, and the recursion for equal norms.

use nalgebra::DMatrix;

use super::duality::duality_lift;
use super::rotation::RotationFamily;
use super::search::{roadmap_search, RoadmapBudget, SearchOutcome};
use super::switch::Switcher;
use super::{
    samples_for, unit_grid, verify_certificate, ConnectivityCertificate, FramePath, PathSegment,
    SegmentKind,
};
use crate::admissibility::{classify_admissibility, AdmissibilityStatus, Rule};
use crate::builder::{build_ntf, doubled_frame, identity_augmented, odd_frame};
use crate::error::{Error, Result};
use crate::grassmann::Frame;
use crate::hypersimplex::DiagonalTarget;
use crate::linalg::flip_last;
use crate::tol::{TOL_PATH, TOL_SUM};

fn identity_perm(n: usize) -> Vec<usize> {
    (0..n).collect()
}

fn certificate(
    target: &DiagonalTarget,
    frame: Frame,
    d_matrix: DMatrix<f64>,
    mut path: FramePath,
    rule: impl Into<String>,
) -> ConnectivityCertificate {
    path.d = target.clone();
    ConnectivityCertificate {
        target: target.clone(),
        frame,
        d_matrix,
        path,
        rule: rule.into(),
        permutation: identity_perm(target.n),
        report: None,
    }
}

/// Replaces the target by `d` (same rank, entries equal up to rounding), e.g.
/// after a double complement `1 - (1 - d)`.
fn retarget(mut cert: ConnectivityCertificate, d: &DiagonalTarget) -> Result<ConnectivityCertificate> {
    let close = cert.target.k == d.k
        && cert.target.n == d.n
        && cert.target.d.iter().zip(&d.d).all(|(a, b)| (a - b).abs() <= TOL_SUM);
    if !close {
        return Err(Error::PatternMismatch(format!(
            "certificate target {:?} does not match {:?}",
            cert.target.d, d.d
        )));
    }
    cert.target = d.clone();
    cert.path.d = d.clone();
    Ok(cert)
}

fn require_hypothesis(d: &DiagonalTarget) -> Result<()> {
    if d.satisfies_hypothesis()? {
        Ok(())
    } else {
        Err(Error::HypothesisViolation(format!(
            "smallest {} entries sum to {}",
            d.n - d.k,
            d.smallest_complement_sum()
        )))
    }
}

fn require_doubled(d: &DiagonalTarget, p: usize) -> Result<()> {
    for i in 0..p {
        if (d.d[i] - d.d[p + i]).abs() > TOL_SUM {
            return Err(Error::PatternMismatch(format!(
                "entries {} and {} differ ({} vs {})",
                i + 1,
                p + i + 1,
                d.d[i],
                d.d[p + i]
            )));
        }
    }
    Ok(())
}

/// Certificate for `d = (d_1..d_p, d_1..d_p)` when either `p ≥ k` and every
/// `d_i ≤ 1/2`, or `p < k` and every `d_i ≥ 1/2` (through the complement).
///
/// `F = (1/√2)[G | D G]` with `G` a `(2d_1..2d_p)`-NTF and
/// `D = diag(1, …, 1, -1)`; interchanging columns `r` and `p + r` for every `r`
/// turns `F` into `(1/√2)[D G | G] = D F`.
pub fn certify_prop_first(d: &DiagonalTarget) -> Result<ConnectivityCertificate> {
    d.require_hypersimplex()?;
    let (n, k) = (d.n, d.k);
    if n % 2 != 0 {
        return Err(Error::PatternMismatch(format!("n = {n} is odd")));
    }
    let p = n / 2;
    require_doubled(d, p)?;
    let half = &d.d[..p];
    if p >= k && half.iter().all(|&x| x <= 0.5 + TOL_SUM) {
        require_hypothesis(d)?;
        doubled_direct(d)
    } else if p < k && half.iter().all(|&x| x >= 0.5 - TOL_SUM) {
        require_hypothesis(d)?;
        let inner = doubled_direct(&d.dual()?)?;
        retarget(duality_lift(&inner)?, d)
    } else {
        Err(Error::PatternMismatch(format!(
            "p = {p}, k = {k}: entries must be all <= 1/2 (p >= k) or all >= 1/2 (p < k)"
        )))
    }
}

fn doubled_direct(d: &DiagonalTarget) -> Result<ConnectivityCertificate> {
    let (n, k) = (d.n, d.k);
    let p = n / 2;
    let twice = DiagonalTarget::new(k, d.d[..p].iter().map(|x| 2.0 * x).collect())?;
    let g = build_ntf(&twice)?;
    let f = doubled_frame(&g)?;
    let mut class = vec![0; p];
    class.extend(std::iter::repeat_n(1, p));
    let mut sw = Switcher::new(f.clone(), class)?;
    for r in 0..p {
        sw.swap(r, p + r)?;
    }
    Ok(certificate(d, f, flip_last(k), sw.path, "doubled"))
}

/// Certificate for `d = (d_1..d_p, d_1..d_p, d_{2p+1})` from a certificate of
/// the rank `k-1` target `d'` on `p` entries, assuming `d_i ≥ d'_i / 2`.
///
/// With `F` the block frame of [`odd_frame`] and `B` the matrix of the
/// sub-certificate `γ: G̃ → B G̃`, the path is:
/// 1. rotate everything by `D' = diag(1, …, 1, -1, -1)` (a half turn);
/// 2. run `M γ(1 - s)` in the top rows, `M = D'' B⁻¹ ∈ SO(k-1)`, which starts
///    at `D'' G̃` and ends at `M G̃`;
/// 3. rotate the top rows from `M` back to the identity.
///
/// The result is `D F` with `D = diag(1, …, 1, -1)`.
pub fn certify_prop_second(
    d: &DiagonalTarget,
    d_sub: &DiagonalTarget,
    subcert: &ConnectivityCertificate,
) -> Result<ConnectivityCertificate> {
    d.require_hypersimplex()?;
    let (n, k) = (d.n, d.k);
    if n % 2 != 1 || k < 2 {
        return Err(Error::PatternMismatch(format!("need odd n and k >= 2, got n = {n}, k = {k}")));
    }
    let p = (n - 1) / 2;
    require_doubled(d, p)?;
    if p + 1 < k {
        return Err(Error::PatternMismatch(format!("need p >= k - 1, got p = {p}, k = {k}")));
    }
    if d_sub.n != p || d_sub.k != k - 1 {
        return Err(Error::SubcertificateInvalid(format!(
            "sub-target must have {p} entries and rank {}",
            k - 1
        )));
    }
    let same_target = subcert.target.k == d_sub.k
        && subcert.target.n == d_sub.n
        && subcert.target.d.iter().zip(&d_sub.d).all(|(a, b)| (a - b).abs() <= TOL_SUM);
    if !same_target {
        return Err(Error::SubcertificateInvalid(
            "certificate is for a different target".into(),
        ));
    }
    let report = verify_certificate(subcert, TOL_PATH);
    if !report.passed {
        return Err(Error::SubcertificateInvalid(
            report.failure.unwrap_or_else(|| "verification failed".into()),
        ));
    }
    require_hypothesis(d)?;

    let g_tilde = &subcert.frame;
    let f = odd_frame(g_tilde, d)?;
    let mut path = FramePath::new(d.clone());

    let half_turn = RotationFamily::plane(k, k - 2, k - 1, std::f64::consts::PI);
    let all: Vec<usize> = (0..n).collect();
    let stage1 = half_turn.segment(&f, &all);
    let flipped = stage1.frames.last().expect("non-empty").clone();
    path.push(stage1);

    let km = k - 1;
    let m = flip_last(km) * subcert.d_matrix.transpose();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let lift = |top: &Frame| -> Frame {
        let mut out = flipped.0.clone();
        let mt = &m * &top.0;
        for r in 0..km {
            for j in 0..p {
                out[(r, j)] = h * mt[(r, j)];
                out[(r, p + j)] = -h * mt[(r, j)];
            }
            out[(r, 2 * p)] = 0.0;
        }
        Frame(out)
    };
    let lifted = subcert.path.reversed().map_frames(
        d.clone(),
        |_| SegmentKind::Reparametrized {
            source: "lifted-sub-certificate".into(),
        },
        lift,
    );
    let after_lift = lifted.end().expect("non-empty").clone();
    path.append(lifted);

    let mut back = DMatrix::<f64>::identity(k, k);
    back.view_mut((0, 0), (km, km)).copy_from(&m.transpose());
    let unwind = RotationFamily::from_matrix(&back)?;
    path.push(unwind.segment(&after_lift, &all));

    let rule = format!("odd-lift[{}]", subcert.rule);
    Ok(certificate(d, f, flip_last(k), path, rule))
}

/// The `n = 2k + 1` equal-norm certificate: `F = √(k/(2k+1)) [G | I_k]`,
/// `D = diag(-1, 1, …, 1)`.
///
/// Three interchanges (columns 1↔k+2, 1↔2, 2↔k+2) reach
/// `√(k/(2k+1)) [D G | I_k]`; the explicit two-column rotation over
/// `t ∈ [π/2, π]` and a last interchange of columns k+1 and k+2 finish at
/// `D F`.
pub fn step1_path(k: usize) -> Result<ConnectivityCertificate> {
    if k < 2 {
        return Err(Error::RankOutOfRange {
            n: 2 * k + 1,
            k,
            reason: "the explicit path needs k >= 2".into(),
        });
    }
    let n = 2 * k + 1;
    let d = DiagonalTarget::equal_norm(n, k)?;
    let f = identity_augmented(k)?;
    let mut class = vec![0; k + 1];
    class.extend(std::iter::repeat_n(1, k));
    let mut sw = Switcher::new(f.clone(), class)?;
    sw.swap(0, k + 1)?;
    sw.swap(0, 1)?;
    sw.swap(1, k + 1)?;

    let c = (k as f64 / n as f64).sqrt();
    let (t0, t1) = (std::f64::consts::FRAC_PI_2, std::f64::consts::PI);
    let base = sw.frame.clone();
    let length = (t1 - t0) * c * std::f64::consts::SQRT_2;
    let frames: Vec<Frame> = unit_grid(samples_for(length))
        .map(|s| {
            let t = t0 + s * (t1 - t0);
            let mut m = base.0.clone();
            m.column_mut(k).fill(0.0);
            m.column_mut(k + 1).fill(0.0);
            m[(0, k)] = c * t.cos();
            m[(k - 1, k)] = -c * t.sin();
            m[(0, k + 1)] = c * t.sin();
            m[(k - 1, k + 1)] = c * t.cos();
            Frame(m)
        })
        .collect();
    sw.frame = frames.last().expect("non-empty").clone();
    sw.path.push(PathSegment {
        kind: SegmentKind::Step1Rotation {
            t_start: t0,
            t_end: t1,
            columns: [k, k + 1],
            rows: [0, k - 1],
        },
        frames,
    });
    // column k now carries -c e_1 (identity block), column k+1 carries -c e_k
    sw.class.swap(k, k + 1);
    sw.swap(k, k + 1)?;

    let mut dm = DMatrix::identity(k, k);
    dm[(0, 0)] = -1.0;
    Ok(certificate(&d, f, dm, sw.path, "step1"))
}

/// `k = 2`, odd `n ≥ 5`, equal norms: a frame whose columns are a Mercedes
/// triple at -60°, 0°, 60° and orthogonal pairs at ±45° or ±135°. Every block
/// is tight and mapped onto itself by the reflection `D = diag(1, -1)`, so
/// `D F` is `F` with columns interchanged inside blocks; each such
/// interchange is three switches through a column of another block.
pub fn reflection_base(n: usize) -> Result<ConnectivityCertificate> {
    if n < 5 || n.is_multiple_of(2) {
        return Err(Error::RankOutOfRange {
            n,
            k: 2,
            reason: "the reflection construction needs odd n >= 5".into(),
        });
    }
    let d = DiagonalTarget::equal_norm(n, 2)?;
    let scale = (2.0 / n as f64).sqrt();
    let mut angles = vec![-60.0f64, 0.0, 60.0];
    let mut class = vec![0, 0, 0];
    for pair in 0..(n - 3) / 2 {
        let a = if pair % 2 == 0 { 45.0 } else { 135.0 };
        angles.extend([a, -a]);
        class.extend([pair + 1, pair + 1]);
    }
    let f = Frame(DMatrix::from_fn(2, n, |r, c| {
        let t = angles[c].to_radians();
        scale * if r == 0 { t.cos() } else { t.sin() }
    }));
    let mut sw = Switcher::new(f.clone(), class)?;
    sw.swap_within(0, 2, 3)?;
    for pair in 0..(n - 3) / 2 {
        sw.swap_within(3 + 2 * pair, 4 + 2 * pair, 1)?;
    }
    Ok(certificate(&d, f, flip_last(2), sw.path, "reflection-base"))
}

/// Equal-norm certificate for `2 ≤ k ≤ n-2`: even `n` through the doubled
/// construction, `n = 2k+1` explicitly, `n < 2k+1` through the complement,
/// `k = 2` by the reflection construction, and otherwise by lifting the
/// certificate of `((n-1)/2, k-1)` with `d'` equal-norm, which is valid since
/// `k/n > (k-1)/(n-1)`.
pub fn certify_equal_norm(n: usize, k: usize) -> Result<ConnectivityCertificate> {
    if k < 2 || k + 2 > n {
        return Err(Error::RankOutOfRange {
            n,
            k,
            reason: "equal-norm frame spaces are disconnected unless 2 <= k <= n-2".into(),
        });
    }
    let d = DiagonalTarget::equal_norm(n, k)?;
    if n.is_multiple_of(2) {
        return certify_prop_first(&d);
    }
    if n == 2 * k + 1 {
        return step1_path(k);
    }
    if n < 2 * k + 1 {
        let inner = certify_equal_norm(n, n - k)?;
        return retarget(duality_lift(&inner)?, &d);
    }
    if k == 2 {
        return reflection_base(n);
    }
    let (n1, k1) = ((n - 1) / 2, k - 1);
    let sub = certify_equal_norm(n1, k1)?;
    certify_prop_second(&d, &DiagonalTarget::equal_norm(n1, k1)?, &sub)
}

/// The reduction `(n_i, k_i)`: stop at even `n_i`, `n_i = 2k_i + 1` or
/// `k_i = 2`; otherwise `n_{i+1} = (n_i - 1)/2`, `k' = k_i - 1`, and
/// `k_{i+1} = k'` if `n_i ≥ 4k_i - 1`, else `n_{i+1} - k'`.
pub fn reduction_sequence(n: usize, k: usize) -> Result<Vec<(usize, usize)>> {
    if k < 2 || k + 2 > n {
        return Err(Error::RankOutOfRange {
            n,
            k,
            reason: "need 2 <= k <= n-2".into(),
        });
    }
    let mut seq = vec![(n, k)];
    loop {
        let (ni, ki) = *seq.last().expect("non-empty");
        if ni % 2 == 0 || ni == 2 * ki + 1 || ki == 2 || ni < 2 * ki + 1 {
            return Ok(seq);
        }
        let next_n = (ni - 1) / 2;
        let k_prime = ki - 1;
        let next_k = if ni + 1 >= 4 * ki {
            k_prime
        } else {
            next_n - k_prime
        };
        seq.push((next_n, next_k));
    }
}

/// Certificate found by a roadmap search from `F` to `diag(1, …, 1, -1) F`
/// with `F` the builder's frame. Used for rank-two targets outside the
/// constructive families; exhaustion is reported, never read as a proof of
/// disconnectedness.
pub fn certify_by_search(d: &DiagonalTarget, budget: &RoadmapBudget) -> Result<ConnectivityCertificate> {
    let f = build_ntf(d)?;
    let dm = flip_last(d.k);
    match roadmap_search(&f, &f.left(&dm), d, budget)? {
        SearchOutcome::Found(path) => Ok(certificate(d, f, dm, path, "roadmap-search")),
        SearchOutcome::Exhausted { reason, .. } => Err(Error::BaseCaseUnverified(reason)),
    }
}

/// Certificate for any target matched as admissible by
/// [`classify_admissibility`], expressed in the caller's column order.
pub fn certify_target(d: &DiagonalTarget) -> Result<ConnectivityCertificate> {
    let verdict = classify_admissibility(d)?;
    let rule = match (verdict.status, verdict.rule) {
        (AdmissibilityStatus::ProvenAdmissible, Some(rule)) => rule,
        (AdmissibilityStatus::ProvenDisconnected, Some(rule)) => {
            return Err(Error::PatternMismatch(format!(
                "frame space is disconnected ({})",
                rule.name()
            )))
        }
        _ if d.k == 2 => return certify_by_search(d, &RoadmapBudget::default()),
        _ if d.k + 2 == d.n => {
            let inner = certify_by_search(&d.dual()?, &RoadmapBudget::default())?;
            return retarget(duality_lift(&inner)?, d);
        }
        _ => {
            return Err(Error::PatternMismatch(
                "no catalogued admissible family matches".into(),
            ))
        }
    };
    if rule == Rule::Duality {
        let inner = certify_target(&d.dual()?)?;
        return retarget(duality_lift(&inner)?, d);
    }
    let perm = verdict.witness.permutation.clone();
    let canon = d.permuted(&perm);
    let (n, k) = (d.n, d.k);
    let cert = match rule {
        Rule::EqualNorm => retarget(certify_equal_norm(n, k)?, &canon)?,
        Rule::TwoValueEven | Rule::DoubledPattern => certify_prop_first(&canon)?,
        Rule::TwoValueOddRankOdd | Rule::TwoValueOddRankEven | Rule::OddPattern => {
            let p = (n - 1) / 2;
            let sub = certify_equal_norm(p, k - 1)?;
            certify_prop_second(&canon, &DiagonalTarget::equal_norm(p, k - 1)?, &sub)?
        }
        other => {
            return Err(Error::PatternMismatch(format!(
                "rule {} has no constructive certificate",
                other.name()
            )))
        }
    };
    let mut cert = cert.scatter(d, &perm);
    cert.rule = format!("{}:{}", rule.name(), cert.rule);
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::verify_certificate;

    fn check(cert: &ConnectivityCertificate) {
        let r = verify_certificate(cert, TOL_PATH);
        assert!(r.passed, "{}: {r:?}", cert.rule);
        assert!((cert.determinant() + 1.0).abs() < 1e-10);
    }

    #[test]
    fn reduction_examples() {
        assert_eq!(reduction_sequence(11, 3).unwrap(), vec![(11, 3), (5, 2)]);
        assert_eq!(reduction_sequence(9, 3).unwrap(), vec![(9, 3), (4, 2)]);
        assert_eq!(reduction_sequence(7, 3).unwrap(), vec![(7, 3)]);
        assert!(reduction_sequence(5, 4).is_err());
    }

    #[test]
    fn reduction_terminates_with_valid_pairs() {
        for n in 4..=101usize {
            for k in 2..=n - 2 {
                let seq = reduction_sequence(n, k).unwrap();
                assert!(seq.len() as f64 <= (n as f64).log2() + 1.0);
                for (i, &(ni, ki)) in seq.iter().enumerate() {
                    assert!(ki >= 2 && ki + 2 <= ni || i == 0);
                    if i > 0 {
                        assert!(ni > 2 * ki || ni % 2 == 0, "({n},{k}) -> ({ni},{ki})");
                    }
                }
            }
        }
    }

    #[test]
    fn prop_first_examples() {
        let c = certify_prop_first(&DiagonalTarget::new(2, vec![0.5; 4]).unwrap()).unwrap();
        check(&c);
        assert_eq!(c.path.segments.len(), 4);
        let c = certify_prop_first(&DiagonalTarget::new(2, vec![1.0 / 3.0; 6]).unwrap()).unwrap();
        check(&c);
        assert_eq!(c.path.segments.len(), 6);
        assert!(matches!(
            certify_prop_first(&DiagonalTarget::new(2, vec![0.6, 0.4, 0.6, 0.4]).unwrap()),
            Err(Error::PatternMismatch(_))
        ));
    }

    #[test]
    fn step1_small_ranks() {
        for k in 2..=4 {
            let c = step1_path(k).unwrap();
            check(&c);
        }
    }

    #[test]
    fn step1_rotation_endpoint_matches_closed_form() {
        let c = step1_path(2).unwrap();
        let seg = c
            .path
            .segments
            .iter()
            .find(|s| matches!(s.kind, SegmentKind::Step1Rotation { .. }))
            .unwrap();
        let end = seg.frames.last().unwrap();
        let s = (2.0f64 / 5.0).sqrt();
        assert!((end.0[(0, 2)] + s).abs() < 1e-15 && end.0[(1, 2)].abs() < 1e-15);
        assert!(end.0[(0, 3)].abs() < 1e-15 && (end.0[(1, 3)] + s).abs() < 1e-15);
    }

    #[test]
    fn reflection_base_cases() {
        for n in [5, 7, 9] {
            check(&reflection_base(n).unwrap());
        }
    }

    #[test]
    fn prop_second_from_equal_norm() {
        let d = DiagonalTarget::equal_norm(9, 3).unwrap();
        let sub = certify_equal_norm(4, 2).unwrap();
        let c = certify_prop_second(&d, &DiagonalTarget::equal_norm(4, 2).unwrap(), &sub).unwrap();
        check(&c);

        let mut low = d.clone();
        low.d = vec![0.2, 0.2, 0.2, 0.2, 0.2, 0.2, 0.2, 0.2, 1.4];
        assert!(certify_prop_second(&low, &DiagonalTarget::equal_norm(4, 2).unwrap(), &sub).is_err());
        let wrong = DiagonalTarget::equal_norm(4, 1).unwrap();
        assert!(matches!(
            certify_prop_second(&d, &wrong, &sub),
            Err(Error::SubcertificateInvalid(_))
        ));
    }

    #[test]
    fn target_dispatch_respects_permutation() {
        let d = DiagonalTarget::new(2, vec![0.3, 0.4, 0.3, 0.3, 0.4, 0.3]).unwrap();
        let c = certify_target(&d).unwrap();
        check(&c);
        assert!(c.frame.norm_residual(&d.d) < 1e-12);
        assert!(certify_target(&DiagonalTarget::new(2, vec![1.0, 1.0, 0.0, 0.0]).unwrap()).is_err());
    }
}
