//! Quantum symplectic cutting with circle actions.
//!
//! The cut space `H̃ ⊗ H_θ` carries the constraint `φ = f ⊗ 1 − 1 ⊗ p` where
//! `p` has spectrum `ℏ(n + θ)`, `n ≥ 0`, on the ℂ* factor. Its kernel is
//! compared label by label with the positive spectral projection of `f`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::ser::SerializeTuple;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::hilbert::{diag_combine, direct_sum, same_basis, BasisLabel, DiagonalOperator, LabeledBasis, Sign};
use crate::projection::{positive_projector, PredicateTerm, Region, SpectralProjector};
use crate::rational::{self, Q};

/// Quantization `H_θ` of ℂ*, truncated to `n ∈ {0..n_max}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaSectorSpace {
    theta: Q,
    n_max: usize,
    metaplectic: bool,
    hbar: Q,
    basis: Arc<LabeledBasis>,
    p_op: DiagonalOperator,
}

impl ThetaSectorSpace {
    /// `θ` actually entering the spectrum (`½` in the metaplectic variant).
    pub fn theta(&self) -> Q {
        self.theta
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn metaplectic(&self) -> bool {
        self.metaplectic
    }

    pub fn hbar(&self) -> Q {
        self.hbar
    }

    pub fn basis(&self) -> &Arc<LabeledBasis> {
        &self.basis
    }

    /// The operator `½|z|²` with eigenvalue `ℏ(n + θ)`.
    pub fn p_op(&self) -> &DiagonalOperator {
        &self.p_op
    }

    /// Largest `p` eigenvalue inside the truncation, `ℏ(n_max + θ)`.
    pub fn top_eigenvalue(&self) -> Q {
        self.hbar * (rational::q(self.n_max as i64) + self.theta)
    }

    pub fn tag(&self) -> String {
        if self.metaplectic {
            "metaplectic".to_string()
        } else {
            format!("θ={}", rational::format(&self.theta))
        }
    }

    /// Whether `λ` lies in this sector's class `ℏ(ℤ + θ)`.
    pub fn same_class(&self, lambda: &Q) -> bool {
        rational::fractional_class(&(lambda / self.hbar)) == self.theta
    }
}

/// Builds `H_θ` with `p` eigenvalues `ℏ(n + θ)`, or `ℏ(n + ½)` when
/// `metaplectic` is set (θ is then ignored).
pub fn cstar_space(theta: Q, n_max: usize, metaplectic: bool, hbar: Q) -> Result<ThetaSectorSpace> {
    if hbar <= rational::q(0) {
        return Err(Error::NonPositiveHbar(rational::format(&hbar)));
    }
    let theta = if metaplectic {
        rational::frac(1, 2)
    } else {
        if theta <= rational::q(0) || theta > rational::q(1) {
            return Err(Error::ThetaOutOfRange(rational::format(&theta)));
        }
        theta
    };
    let basis = Arc::new(LabeledBasis::range(0, n_max as i64)?);
    let p_op = DiagonalOperator::from_fn("p", Arc::clone(&basis), |l| hbar * (l[0] + theta));
    Ok(ThetaSectorSpace {
        theta,
        n_max,
        metaplectic,
        hbar,
        basis,
        p_op,
    })
}

/// Labels of `H̃` grouped by the fractional class θ ∈ (0,1] of `f/ℏ`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SectorDecomposition {
    pub sectors: BTreeMap<Q, Vec<usize>>,
}

impl SectorDecomposition {
    pub fn thetas(&self) -> Vec<Q> {
        self.sectors.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.sectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sectors.is_empty()
    }
}

impl Serialize for SectorDecomposition {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let m: BTreeMap<String, &Vec<usize>> =
            self.sectors.iter().map(|(k, v)| (rational::format(k), v)).collect();
        m.serialize(s)
    }
}

pub fn theta_sectors(f: &DiagonalOperator, hbar: Q) -> Result<SectorDecomposition> {
    if hbar <= rational::q(0) {
        return Err(Error::NonPositiveHbar(rational::format(&hbar)));
    }
    let mut sectors: BTreeMap<Q, Vec<usize>> = BTreeMap::new();
    for (i, lambda) in f.exact_values()?.iter().enumerate() {
        sectors
            .entry(rational::fractional_class(&(lambda / hbar)))
            .or_default()
            .push(i);
    }
    Ok(SectorDecomposition { sectors })
}

/// `φ = f ⊗ 1 − 1 ⊗ p` on `H̃ ⊗ H_θ`.
pub fn cut_constraint(f: &DiagonalOperator, sector: &ThetaSectorSpace) -> DiagonalOperator {
    diag_combine(f, &sector.p_op, Sign::Minus).renamed(format!("φ[{}]", f.name()))
}

/// Projector onto the labels where `phi` vanishes exactly.
pub fn constraint_kernel(phi: &DiagonalOperator) -> Result<SpectralProjector> {
    let zero = rational::q(0);
    let values = phi.exact_values()?;
    let selected = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| (*v == zero).then_some(i))
        .collect();
    SpectralProjector::from_indices(
        Arc::clone(phi.basis()),
        selected,
        vec![PredicateTerm {
            operator: phi.name().to_string(),
            region: Region::Zero,
        }],
    )
}

/// One θ-sector space per fractional class of `f`, all truncated at `n_max`.
pub fn match_sectors(f: &DiagonalOperator, n_max: usize, hbar: Q) -> Result<Vec<ThetaSectorSpace>> {
    theta_sectors(f, hbar)?
        .thetas()
        .into_iter()
        .map(|theta| cstar_space(theta, n_max, false, hbar))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Verified,
    VerifiedUpToTruncation,
    Mismatch,
    /// Kernel and positive projection are both empty.
    TrivialKernel,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::Verified => "verified",
            Verdict::VerifiedUpToTruncation => "verified_up_to_truncation",
            Verdict::Mismatch => "mismatch",
            Verdict::TrivialKernel => "trivial_kernel",
        };
        f.write_str(s)
    }
}

/// A kernel state `(m, n)` and the eigenvalue shared by `f` at `m` and `p` at `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchedPair {
    pub ambient: BasisLabel,
    pub sector: BasisLabel,
    pub eigenvalue: Q,
}

impl Serialize for MatchedPair {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut t = s.serialize_tuple(3)?;
        t.serialize_element(&self.ambient)?;
        t.serialize_element(&self.sector)?;
        t.serialize_element(&rational::format(&self.eigenvalue))?;
        t.end()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutVerificationReport {
    pub kernel_dim: usize,
    pub projected_dim: usize,
    pub matched_pairs: Vec<MatchedPair>,
    pub unmatched_projected: Vec<BasisLabel>,
    pub verdict: Verdict,
}

struct CutOutcome {
    report: CutVerificationReport,
    /// Indices into `h` of the matched ambient labels, ascending.
    matched: Vec<usize>,
}

/// Cutting partner built from one or more sector spaces (direct sum when
/// there are several).
fn partner(sectors: &[ThetaSectorSpace]) -> Result<DiagonalOperator> {
    match sectors {
        [] => Err(Error::InvalidParameter("at least one sector space is required".into())),
        [single] => Ok(single.p_op.clone()),
        many => {
            let tags: Vec<String> = many.iter().map(ThetaSectorSpace::tag).collect();
            let parts: Vec<(&str, &LabeledBasis)> = tags
                .iter()
                .zip(many)
                .map(|(t, s)| (t.as_str(), s.basis.as_ref()))
                .collect();
            let basis = Arc::new(direct_sum(&parts)?);
            let mut values = Vec::with_capacity(basis.dim());
            for s in many {
                values.extend_from_slice(s.p_op.exact_values()?);
            }
            DiagonalOperator::exact("p", basis, values)
        }
    }
}

fn cut(h: &Arc<LabeledBasis>, f: &DiagonalOperator, sectors: &[ThetaSectorSpace]) -> Result<CutOutcome> {
    if !same_basis(h, f.basis()) {
        return Err(Error::BasisMismatch("f is not defined on the given basis".into()));
    }
    let f_values = f.exact_values()?;
    let p = partner(sectors)?;
    let phi = diag_combine(f, &p, Sign::Minus);
    let kernel = constraint_kernel(&phi)?;
    let projected = positive_projector(std::slice::from_ref(f))?;

    let dp = p.dim();
    let mut hits = vec![0usize; h.dim()];
    let mut matched_pairs = Vec::with_capacity(kernel.rank());
    for &k in kernel.selected() {
        let (i, j) = (k / dp, k % dp);
        hits[i] += 1;
        matched_pairs.push(MatchedPair {
            ambient: h.label(i),
            sector: p.basis().label(j),
            eigenvalue: f_values[i],
        });
    }
    let injective = hits.iter().all(|&c| c <= 1);
    let matched: Vec<usize> = (0..h.dim()).filter(|&i| hits[i] > 0).collect();
    let spurious = matched.iter().any(|&i| !projected.contains(i));
    let unmatched: Vec<usize> = projected
        .selected()
        .iter()
        .copied()
        .filter(|&i| hits[i] == 0)
        .collect();
    let beyond_truncation = |lambda: &Q| {
        sectors
            .iter()
            .any(|s| s.same_class(lambda) && *lambda > s.top_eigenvalue())
    };

    let verdict = if !injective || spurious {
        Verdict::Mismatch
    } else if unmatched.is_empty() {
        if projected.is_empty() {
            Verdict::TrivialKernel
        } else {
            Verdict::Verified
        }
    } else if unmatched.iter().all(|&i| beyond_truncation(&f_values[i])) {
        Verdict::VerifiedUpToTruncation
    } else {
        Verdict::Mismatch
    };

    Ok(CutOutcome {
        report: CutVerificationReport {
            kernel_dim: kernel.rank(),
            projected_dim: projected.rank(),
            matched_pairs,
            unmatched_projected: unmatched.iter().map(|&i| h.label(i)).collect(),
            verdict,
        },
        matched,
    })
}

/// Compares `ker φ` with the positive projection of `f`.
///
/// `verified` means the kernel maps bijectively and eigenvalue-preservingly
/// onto the positive labels; `verified_up_to_truncation` means the only
/// unmatched positive labels lie in the sector's class above `ℏ(n_max + θ)`.
pub fn verify_theorem1(h: &Arc<LabeledBasis>, f: &DiagonalOperator, sector: &ThetaSectorSpace) -> Result<CutVerificationReport> {
    Ok(cut(h, f, std::slice::from_ref(sector))?.report)
}

/// Same check with the direct sum of several sector spaces as the ℂ* factor.
pub fn verify_with_sectors(
    h: &Arc<LabeledBasis>,
    f: &DiagonalOperator,
    sectors: &[ThetaSectorSpace],
) -> Result<CutVerificationReport> {
    Ok(cut(h, f, sectors)?.report)
}

struct Sequence {
    final_set: Vec<usize>,
    last: Option<CutVerificationReport>,
    verdicts: Vec<Verdict>,
}

fn run_sequence(
    h: &Arc<LabeledBasis>,
    fs: &[DiagonalOperator],
    sectors: &[ThetaSectorSpace],
    order: &[usize],
) -> Result<Sequence> {
    let mut current: Vec<usize> = (0..h.dim()).collect();
    let mut basis = Arc::clone(h);
    let mut last = None;
    let mut verdicts = Vec::new();
    for &k in order {
        let f = fs[k].restrict(&current, Arc::clone(&basis))?;
        let outcome = cut(&basis, &f, std::slice::from_ref(&sectors[k]))?;
        verdicts.push(outcome.report.verdict);
        last = Some(outcome.report);
        current = outcome.matched.iter().map(|&i| current[i]).collect();
        if current.is_empty() {
            break;
        }
        basis = Arc::new(h.select(&current)?);
    }
    Ok(Sequence {
        final_set: current,
        last,
        verdicts,
    })
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for pos in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(pos, n - 1);
            out.push(p);
        }
    }
    out
}

/// Cuts with each `fs[k]` in turn (restricting later constraints to the
/// surviving labels) and compares the result with the joint positive
/// projector. For up to three constraints every ordering is run and must
/// agree.
pub fn iterate_cuts(
    h: &Arc<LabeledBasis>,
    fs: &[DiagonalOperator],
    sectors: &[ThetaSectorSpace],
) -> Result<CutVerificationReport> {
    if fs.is_empty() {
        return Err(Error::NoOperators);
    }
    if fs.len() != sectors.len() {
        return Err(Error::LengthMismatch {
            expected: fs.len(),
            found: sectors.len(),
        });
    }
    let joint = positive_projector(fs)?;
    if !same_basis(h, joint.basis()) {
        return Err(Error::NotSimultaneouslyDiagonal);
    }
    let natural: Vec<usize> = (0..fs.len()).collect();
    let primary = run_sequence(h, fs, sectors, &natural)?;
    let order_independent = if fs.len() <= 3 {
        let mut same = true;
        for order in permutations(fs.len()).into_iter().filter(|o| *o != natural) {
            if run_sequence(h, fs, sectors, &order)?.final_set != primary.final_set {
                same = false;
                break;
            }
        }
        same
    } else {
        true
    };

    let steps_ok = primary.verdicts.iter().all(|v| *v != Verdict::Mismatch);
    let within_joint = primary.final_set.iter().all(|&i| joint.contains(i));
    let verdict = if !order_independent || !steps_ok || !within_joint {
        Verdict::Mismatch
    } else if primary.final_set == joint.selected() {
        if joint.is_empty() {
            Verdict::TrivialKernel
        } else {
            Verdict::Verified
        }
    } else {
        Verdict::VerifiedUpToTruncation
    };
    let matched_pairs = if primary.final_set.is_empty() {
        Vec::new()
    } else {
        primary.last.map(|r| r.matched_pairs).unwrap_or_default()
    };
    let unmatched_projected = joint
        .selected()
        .iter()
        .filter(|i| primary.final_set.binary_search(i).is_err())
        .map(|&i| h.label(i))
        .collect();
    Ok(CutVerificationReport {
        kernel_dim: matched_pairs.len(),
        projected_dim: joint.rank(),
        matched_pairs,
        unmatched_projected,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, q};
    use proptest::prelude::*;

    fn one() -> Q {
        q(1)
    }

    fn line(lo: i64, hi: i64) -> Arc<LabeledBasis> {
        Arc::new(LabeledBasis::range(lo, hi).unwrap())
    }

    #[test]
    fn cstar_spectra() {
        let s = cstar_space(q(1), 2, false, one()).unwrap();
        assert_eq!(s.p_op().spectrum().unwrap().values(), &[q(1), q(2), q(3)]);
        let s = cstar_space(frac(1, 4), 2, false, one()).unwrap();
        assert_eq!(s.p_op().spectrum().unwrap().values(), &[frac(1, 4), frac(5, 4), frac(9, 4)]);
        let s = cstar_space(q(7), 2, true, one()).unwrap();
        assert_eq!(s.p_op().spectrum().unwrap().values(), &[frac(1, 2), frac(3, 2), frac(5, 2)]);
        let s = cstar_space(frac(1, 3), 1, false, q(2)).unwrap();
        assert_eq!(s.p_op().spectrum().unwrap().values(), &[frac(2, 3), frac(8, 3)]);
    }

    #[test]
    fn cstar_rejects_bad_theta() {
        assert_eq!(cstar_space(q(0), 2, false, one()), Err(Error::ThetaOutOfRange("0/1".into())));
        assert!(cstar_space(frac(3, 2), 2, false, one()).is_err());
        assert!(cstar_space(frac(1, 2), 2, false, q(0)).is_err());
    }

    fn values_op(vals: &[Q]) -> DiagonalOperator {
        DiagonalOperator::exact("f", line(0, vals.len() as i64 - 1), vals.to_vec()).unwrap()
    }

    #[test]
    fn sectors_by_fractional_class() {
        let d = theta_sectors(&values_op(&[frac(-3, 2), frac(1, 2), frac(5, 2)]), one()).unwrap();
        assert_eq!(d.thetas(), vec![frac(1, 2)]);
        let d = theta_sectors(&values_op(&[frac(-3, 2), frac(1, 2), q(3)]), one()).unwrap();
        assert_eq!(d.sectors[&frac(1, 2)], vec![0, 1]);
        assert_eq!(d.sectors[&q(1)], vec![2]);
        let d = theta_sectors(&DiagonalOperator::from_fn("n", line(-3, 3), |l| l[0]), one()).unwrap();
        assert_eq!(d.thetas(), vec![q(1)]);
        assert_eq!(serde_json::to_string(&d).unwrap(), r#"{"1/1":[0,1,2,3,4,5,6]}"#);
    }

    #[test]
    fn constraint_examples() {
        let f = DiagonalOperator::from_fn("f", line(0, 0), |l| l[0] + frac(1, 2));
        let s = cstar_space(frac(1, 2), 0, false, one()).unwrap();
        assert_eq!(cut_constraint(&f, &s).spectrum().unwrap().values(), &[q(0)]);

        let f = DiagonalOperator::from_fn("f", line(0, 1), |l| l[0]);
        let s = cstar_space(frac(1, 2), 1, false, one()).unwrap();
        assert_eq!(
            cut_constraint(&f, &s).spectrum().unwrap().values(),
            &[frac(-1, 2), frac(-3, 2), frac(1, 2), frac(-1, 2)]
        );

        let f = DiagonalOperator::from_fn("f", line(-5, 5), |l| l[0] + frac(1, 4));
        for n_max in [0, 3, 12] {
            let s = cstar_space(frac(3, 4), n_max, false, one()).unwrap();
            assert!(constraint_kernel(&cut_constraint(&f, &s)).unwrap().is_empty());
        }
    }

    #[test]
    fn kernel_examples() {
        let f = DiagonalOperator::from_fn("f", line(-3, 3), |l| l[0] + frac(1, 2));
        let s = cstar_space(frac(1, 2), 5, false, one()).unwrap();
        let phi = cut_constraint(&f, &s);
        let k = constraint_kernel(&phi).unwrap();
        let labels: Vec<BasisLabel> = k.selected().iter().map(|&i| phi.basis().label(i)).collect();
        let want: Vec<BasisLabel> = (0..=3).map(|m| BasisLabel::ints(&[m, m])).collect();
        assert_eq!(labels, want);

        let s = cstar_space(frac(3, 10), 5, false, one()).unwrap();
        assert!(constraint_kernel(&cut_constraint(&f, &s)).unwrap().is_empty());

        let f = DiagonalOperator::from_fn("m", line(-4, 6), |l| l[0]);
        let s = cstar_space(q(1), 20, false, one()).unwrap();
        let phi = cut_constraint(&f, &s);
        let k = constraint_kernel(&phi).unwrap();
        assert_eq!(k.rank(), 6);
        for &i in k.selected() {
            let c = phi.basis().components(i);
            assert_eq!(c[0], c[1] + q(1));
            assert!(c[0] >= q(1));
        }
    }

    #[test]
    fn kernel_rejects_float_mode() {
        let f = DiagonalOperator::approx("g", line(0, 1), vec![0.0, 1.0], 1e-9).unwrap();
        assert_eq!(constraint_kernel(&f), Err(Error::FloatModeRejected("g".into())));
    }

    fn half_cylinder(n: i64) -> (Arc<LabeledBasis>, DiagonalOperator) {
        let h = line(-n, n);
        let f = DiagonalOperator::from_fn("f", Arc::clone(&h), |l| l[0] + frac(1, 2));
        (h, f)
    }

    #[test]
    fn half_cylinder_bijection() {
        let (h, f) = half_cylinder(10);
        let r = verify_theorem1(&h, &f, &cstar_space(frac(1, 2), 10, false, one()).unwrap()).unwrap();
        assert_eq!(r.verdict, Verdict::Verified);
        assert_eq!((r.kernel_dim, r.projected_dim), (11, 11));
        assert_eq!(r.matched_pairs.len(), 11);
        for pair in &r.matched_pairs {
            assert_eq!(pair.ambient.components[0], pair.sector.components[0]);
            assert_eq!(pair.eigenvalue, pair.ambient.components[0] + frac(1, 2));
        }

        let r = verify_theorem1(&h, &f, &cstar_space(frac(1, 2), 5, false, one()).unwrap()).unwrap();
        assert_eq!(r.verdict, Verdict::VerifiedUpToTruncation);
        let unmatched: Vec<BasisLabel> = (6..=10).map(|m| BasisLabel::ints(&[m])).collect();
        assert_eq!(r.unmatched_projected, unmatched);

        let r = verify_theorem1(&h, &f, &cstar_space(frac(1, 4), 10, false, one()).unwrap()).unwrap();
        assert_eq!(r.kernel_dim, 0);
        assert!(r.projected_dim > 0);
        assert_eq!(r.verdict, Verdict::Mismatch);
    }

    #[test]
    fn nothing_positive() {
        let h = line(-3, 0);
        let f = DiagonalOperator::from_fn("f", Arc::clone(&h), |l| l[0]);
        let r = verify_theorem1(&h, &f, &cstar_space(q(1), 4, false, one()).unwrap()).unwrap();
        assert_eq!(r.verdict, Verdict::TrivialKernel);
        assert_eq!((r.kernel_dim, r.projected_dim), (0, 0));
    }

    #[test]
    fn report_json_shape() {
        let (h, f) = half_cylinder(1);
        let r = verify_theorem1(&h, &f, &cstar_space(frac(1, 2), 0, false, one()).unwrap()).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["verdict"], "verified_up_to_truncation");
        assert_eq!(v["matched_pairs"][0], serde_json::json!([["0/1"], ["0/1"], "1/2"]));
        assert_eq!(v["unmatched_projected"], serde_json::json!([["1/1"]]));
    }

    #[test]
    fn iterate_two_commuting_cuts() {
        let h = Arc::new(LabeledBasis::grid(&[(-2, 2), (-2, 2)]).unwrap());
        let f1 = DiagonalOperator::from_fn("f1", Arc::clone(&h), |l| l[0] + frac(1, 2));
        let f2 = DiagonalOperator::from_fn("f2", Arc::clone(&h), |l| l[1] + frac(1, 2));
        let s = cstar_space(frac(1, 2), 4, false, one()).unwrap();
        let r = iterate_cuts(&h, &[f1.clone(), f2.clone()], &[s.clone(), s.clone()]).unwrap();
        assert_eq!(r.verdict, Verdict::Verified);
        assert_eq!(r.kernel_dim, 9);
        assert_eq!(r.projected_dim, positive_projector(&[f1, f2]).unwrap().rank());
    }

    #[test]
    fn iterate_single_matches_direct_cut() {
        let (h, f) = half_cylinder(6);
        for n_max in [2, 6, 9] {
            let s = cstar_space(frac(1, 2), n_max, false, one()).unwrap();
            let single = verify_theorem1(&h, &f, &s).unwrap();
            let iter = iterate_cuts(&h, std::slice::from_ref(&f), std::slice::from_ref(&s)).unwrap();
            assert_eq!(single, iter);
        }
    }

    #[test]
    fn iterate_contradictory() {
        let h = line(-3, 3);
        let f = DiagonalOperator::from_fn("f", Arc::clone(&h), |l| l[0]);
        let s = cstar_space(q(1), 5, false, one()).unwrap();
        for fs in [[f.clone(), f.negated()], [f.negated(), f.clone()]] {
            let r = iterate_cuts(&h, &fs, &[s.clone(), s.clone()]).unwrap();
            assert_eq!(r.kernel_dim, 0);
            assert_eq!(r.projected_dim, 0);
            assert_eq!(r.verdict, Verdict::TrivialKernel);
        }
    }

    fn mixed_sector_f() -> (Arc<LabeledBasis>, DiagonalOperator) {
        let h = line(-3, 3);
        let f = DiagonalOperator::from_fn("f", Arc::clone(&h), |l| {
            if l[0].to_integer() % 2 == 0 {
                l[0] + frac(1, 2)
            } else {
                l[0]
            }
        });
        (h, f)
    }

    #[test]
    fn matched_sectors_reproduce_projection() {
        let (h, f) = mixed_sector_f();
        let sectors = match_sectors(&f, 5, one()).unwrap();
        assert_eq!(sectors.iter().map(|s| s.theta()).collect::<Vec<_>>(), vec![frac(1, 2), q(1)]);
        let r = verify_with_sectors(&h, &f, &sectors).unwrap();
        assert_eq!(r.verdict, Verdict::Verified);
        let matched: Vec<BasisLabel> = r.matched_pairs.iter().map(|p| p.ambient.clone()).collect();
        let p = positive_projector(std::slice::from_ref(&f)).unwrap();
        let positive: Vec<BasisLabel> = p.selected().iter().map(|&i| h.label(i)).collect();
        assert_eq!(matched, positive);

        // one sector alone misses the other class
        let r = verify_theorem1(&h, &f, &sectors[0]).unwrap();
        assert_eq!(r.verdict, Verdict::Mismatch);

        let single = DiagonalOperator::from_fn("n", Arc::clone(&h), |l| l[0]);
        assert_eq!(match_sectors(&single, 3, one()).unwrap().len(), 1);
    }

    #[test]
    fn no_zero_mode_on_cstar() {
        for (n, d) in [(1, 7), (1, 2), (5, 6), (1, 1)] {
            let s = cstar_space(frac(n, d), 30, false, one()).unwrap();
            assert!(s.p_op().exact_values().unwrap().iter().all(|v| *v > q(0)));
        }
    }

    fn thetas() -> impl Strategy<Value = Q> {
        (1i64..=6).prop_flat_map(|d| (1..=d).prop_map(move |n| Q::new(n, d)))
    }

    proptest! {
        #[test]
        fn kernel_nonempty_iff_class_and_range_match(
            vals in prop::collection::vec((-8i64..8, 1i64..5).prop_map(|(n, d)| Q::new(n, d)), 1..10),
            theta in thetas(),
            n_max in 0usize..8,
        ) {
            let mut vals = vals;
            vals.sort();
            vals.dedup();
            let f = values_op(&vals);
            let s = cstar_space(theta, n_max, false, one()).unwrap();
            let kernel = constraint_kernel(&cut_constraint(&f, &s)).unwrap();
            let top = s.top_eigenvalue();
            let predicted = vals.iter().any(|v| {
                *v > q(0) && *v <= top && rational::fractional_class(v) == theta
            });
            prop_assert_eq!(!kernel.is_empty(), predicted);
        }

        #[test]
        fn verdict_monotone_in_truncation(n in 1i64..15, theta in thetas()) {
            let h = line(-n, n);
            let f = DiagonalOperator::from_fn("f", Arc::clone(&h), move |l| l[0] + theta - q(1));
            let max_positive = q(n) + theta - q(1);
            let mut prev_unmatched = usize::MAX;
            let mut seen_verified = false;
            for n_max in 0..(n as usize + 3) {
                let s = cstar_space(theta, n_max, false, one()).unwrap();
                let r = verify_theorem1(&h, &f, &s).unwrap();
                prop_assert!(r.unmatched_projected.len() <= prev_unmatched);
                prev_unmatched = r.unmatched_projected.len();
                if s.top_eigenvalue() >= max_positive {
                    prop_assert_eq!(r.verdict, Verdict::Verified);
                    seen_verified = true;
                } else {
                    prop_assert!(!seen_verified);
                    prop_assert_eq!(r.verdict, Verdict::VerifiedUpToTruncation);
                }
            }
        }

        #[test]
        fn iterate_cuts_is_order_independent(
            shifts in prop::collection::vec(-2i64..3, 3),
            n_max in 0usize..6,
        ) {
            let h = Arc::new(LabeledBasis::grid(&[(-2, 2), (-2, 2)]).unwrap());
            let (s0, s1, s2) = (q(shifts[0]), q(shifts[1]), q(shifts[2]));
            let ops = [
                DiagonalOperator::from_fn("a", Arc::clone(&h), move |l| l[0] + s0),
                DiagonalOperator::from_fn("b", Arc::clone(&h), move |l| l[1] + s1),
                DiagonalOperator::from_fn("c", Arc::clone(&h), move |l| l[0] + l[1] + s2),
            ];
            let s = cstar_space(q(1), n_max, false, one()).unwrap();
            let sectors = vec![s.clone(), s.clone(), s];
            let r = iterate_cuts(&h, &ops, &sectors).unwrap();
            prop_assert_ne!(r.verdict, Verdict::Mismatch);
            for pair in &r.matched_pairs {
                prop_assert!(pair.eigenvalue > q(0));
            }
        }
    }
}
