//! Spectral projectors onto joint positive regions of commuting diagonal
//! operators, projected spaces and operators, and regularity diagnostics.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{same_basis, DenseOperator, DiagonalOperator, LabeledBasis};
use crate::rational::{self, Q};

/// Default cut-off below which a nonzero removed fraction counts as
/// near-trivial.
pub fn default_near_trivial_threshold() -> Q {
    rational::frac(1, 20)
}

/// Spectral region used to select labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// Strictly positive eigenvalue.
    Positive,
    /// `lo < λ < hi`.
    Interval {
        #[serde(with = "crate::rational::serde_q")]
        lo: Q,
        #[serde(with = "crate::rational::serde_q")]
        hi: Q,
    },
    /// Eigenvalue exactly zero.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateTerm {
    pub operator: String,
    pub region: Region,
}

/// Diagonal 0/1 projector given by a sorted index subset of a basis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralProjector {
    #[serde(skip)]
    basis: Arc<LabeledBasis>,
    selected: Vec<usize>,
    predicate_record: Vec<PredicateTerm>,
}

impl SpectralProjector {
    /// Sorts and validates `selected`.
    pub fn from_indices(
        basis: Arc<LabeledBasis>,
        mut selected: Vec<usize>,
        predicate_record: Vec<PredicateTerm>,
    ) -> Result<Self> {
        selected.sort_unstable();
        selected.dedup();
        if let Some(&last) = selected.last() {
            if last >= basis.dim() {
                return Err(Error::IndexOutOfRange {
                    index: last,
                    dim: basis.dim(),
                });
            }
        }
        Ok(Self {
            basis,
            selected,
            predicate_record,
        })
    }

    pub fn basis(&self) -> &Arc<LabeledBasis> {
        &self.basis
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn predicate_record(&self) -> &[PredicateTerm] {
        &self.predicate_record
    }

    pub fn rank(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.selected.binary_search(&index).is_ok()
    }

    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.basis.dim()];
        for &i in &self.selected {
            m[i] = true;
        }
        m
    }

    /// Dense 0/1 diagonal matrix.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        let dim = self.basis.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for &i in &self.selected {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Product of two projectors on the same basis.
    pub fn intersect(&self, other: &SpectralProjector) -> Result<SpectralProjector> {
        if !same_basis(&self.basis, &other.basis) {
            return Err(Error::NotSimultaneouslyDiagonal);
        }
        let selected = self
            .selected
            .iter()
            .copied()
            .filter(|&i| other.contains(i))
            .collect();
        let mut record = self.predicate_record.clone();
        record.extend(other.predicate_record.iter().cloned());
        Ok(Self {
            basis: Arc::clone(&self.basis),
            selected,
            predicate_record: record,
        })
    }
}

fn check_shared_basis(fs: &[DiagonalOperator]) -> Result<&Arc<LabeledBasis>> {
    let first = fs.first().ok_or(Error::NoOperators)?;
    if fs.iter().any(|f| !same_basis(f.basis(), first.basis())) {
        return Err(Error::NotSimultaneouslyDiagonal);
    }
    Ok(first.basis())
}

/// Selects the labels on which every operator is strictly positive.
pub fn positive_projector(fs: &[DiagonalOperator]) -> Result<SpectralProjector> {
    let basis = check_shared_basis(fs)?;
    let selected = (0..basis.dim())
        .filter(|&i| fs.iter().all(|f| f.is_positive_at(i)))
        .collect();
    let record = fs
        .iter()
        .map(|f| PredicateTerm {
            operator: f.name().to_string(),
            region: Region::Positive,
        })
        .collect();
    Ok(SpectralProjector {
        basis: Arc::clone(basis),
        selected,
        predicate_record: record,
    })
}

/// Selects `lo < f < hi` as the joint positive region of `f − lo` and `hi − f`.
pub fn interval_projector(f: &DiagonalOperator, lo: Q, hi: Q) -> Result<SpectralProjector> {
    if lo >= hi {
        return Err(Error::EmptyInterval {
            lo: rational::format(&lo),
            hi: rational::format(&hi),
        });
    }
    let above = f.shifted(-lo);
    let below = f.negated().shifted(hi);
    let mut p = positive_projector(&[above, below])?;
    p.predicate_record = vec![PredicateTerm {
        operator: f.name().to_string(),
        region: Region::Interval { lo, hi },
    }];
    Ok(p)
}

/// Result of projecting a basis: either a nonempty sub-basis or the empty
/// space.
#[derive(Debug, Clone, PartialEq)]
pub enum ProjectedSpace {
    Space(Arc<LabeledBasis>),
    Empty,
}

impl ProjectedSpace {
    pub fn dim(&self) -> usize {
        match self {
            ProjectedSpace::Space(b) => b.dim(),
            ProjectedSpace::Empty => 0,
        }
    }

    pub fn basis(&self) -> Option<&Arc<LabeledBasis>> {
        match self {
            ProjectedSpace::Space(b) => Some(b),
            ProjectedSpace::Empty => None,
        }
    }

    pub fn triviality_flag(&self, original_dim: usize, near_trivial_threshold: Q) -> TrivialityFlag {
        TrivialityFlag::classify(original_dim, self.dim(), near_trivial_threshold)
    }
}

/// `P H`: the selected labels in their original order.
pub fn project_space(h: &Arc<LabeledBasis>, p: &SpectralProjector) -> Result<ProjectedSpace> {
    if !same_basis(h, &p.basis) {
        return Err(Error::BasisMismatch("projector is defined on another basis".into()));
    }
    if p.is_empty() {
        return Ok(ProjectedSpace::Empty);
    }
    if p.rank() == h.dim() {
        return Ok(ProjectedSpace::Space(Arc::clone(h)));
    }
    Ok(ProjectedSpace::Space(Arc::new(h.select(&p.selected)?)))
}

/// Compressed `π ∘ O ∘ ι`: the selected × selected block of `o`, returned on
/// the projected basis.
pub fn project_operator(o: &DenseOperator, p: &SpectralProjector) -> Result<DenseOperator> {
    if !same_basis(o.basis(), &p.basis) {
        return Err(Error::BasisMismatch("operator and projector live on different bases".into()));
    }
    let ProjectedSpace::Space(sub) = project_space(&p.basis, p)? else {
        return Err(Error::EmptyProjection);
    };
    let idx = &p.selected;
    let m = o.matrix();
    let block = DMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])]);
    Ok(DenseOperator::with_flag(sub, block, o.hermitian_flag()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrictObservableCheck {
    pub commutes: bool,
    /// Max-entry norm of `[O, P]`.
    pub commutator_norm: f64,
}

/// Tests whether `o` commutes with `p`. For a diagonal 0/1 projector the
/// commutator entries are `O_ij (p_j − p_i)`, so only the blocks linking the
/// selected and removed labels contribute.
pub fn is_strict_observable(o: &DenseOperator, p: &SpectralProjector, tol: f64) -> Result<StrictObservableCheck> {
    if !same_basis(o.basis(), &p.basis) {
        return Err(Error::BasisMismatch("operator and projector live on different bases".into()));
    }
    let mask = p.mask();
    let m = o.matrix();
    let mut norm: f64 = 0.0;
    for i in 0..mask.len() {
        for j in 0..mask.len() {
            if mask[i] != mask[j] {
                norm = norm.max(m[(i, j)].norm());
            }
        }
    }
    Ok(StrictObservableCheck {
        commutes: norm <= tol,
        commutator_norm: norm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrivialityFlag {
    TrivialIdentity,
    NearTrivial,
    Proper,
    Empty,
}

impl TrivialityFlag {
    pub fn classify(original_dim: usize, projected_dim: usize, threshold: Q) -> Self {
        if projected_dim == 0 {
            return TrivialityFlag::Empty;
        }
        let removed = removed_fraction(original_dim, projected_dim);
        if removed == rational::q(0) {
            TrivialityFlag::TrivialIdentity
        } else if removed < threshold {
            TrivialityFlag::NearTrivial
        } else {
            TrivialityFlag::Proper
        }
    }
}

impl fmt::Display for TrivialityFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TrivialityFlag::TrivialIdentity => "trivial_identity",
            TrivialityFlag::NearTrivial => "near_trivial",
            TrivialityFlag::Proper => "proper",
            TrivialityFlag::Empty => "empty",
        };
        f.write_str(s)
    }
}

fn removed_fraction(original_dim: usize, projected_dim: usize) -> Q {
    rational::q(1) - Q::new(projected_dim as i64, original_dim as i64)
}

pub const THETA_ANGLE_NOTE: &str = "Cuts that change the fundamental group can admit additional \
theta-angles; these are not detected by a spectral projection.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionReport {
    pub original_dim: usize,
    pub projected_dim: usize,
    #[serde(with = "crate::rational::serde_q")]
    pub removed_fraction: Q,
    pub triviality_flag: TrivialityFlag,
    pub notes: String,
}

impl ProjectionReport {
    pub fn from_projector(p: &SpectralProjector, near_trivial_threshold: Q) -> Self {
        let original_dim = p.basis.dim();
        let projected_dim = p.rank();
        let flag = TrivialityFlag::classify(original_dim, projected_dim, near_trivial_threshold);
        let mut notes = match flag {
            TrivialityFlag::TrivialIdentity => "Projector is the identity: the condition holds on the \
whole spectrum, so the region it should remove is not resolved by this operator. The positivity \
condition is not a usable description of the subspace."
                .to_string(),
            TrivialityFlag::NearTrivial => format!(
                "Near-trivial projection: only {} of the states are removed (threshold {}). The region \
where the opposite inequality holds is (almost) empty, which signals that the applicability \
condition is violated.",
                rational::format(&removed_fraction(original_dim, projected_dim)),
                rational::format(&near_trivial_threshold)
            ),
            TrivialityFlag::Proper => "Proper projection.".to_string(),
            TrivialityFlag::Empty => "Empty projection: no state satisfies the condition.".to_string(),
        };
        notes.push(' ');
        notes.push_str(THETA_ANGLE_NOTE);
        Self {
            original_dim,
            projected_dim,
            removed_fraction: removed_fraction(original_dim, projected_dim),
            triviality_flag: flag,
            notes,
        }
    }
}

/// Builds the positive projector of `fs` and classifies it.
pub fn regularity_diagnostic(fs: &[DiagonalOperator], near_trivial_threshold: Q) -> Result<ProjectionReport> {
    let p = positive_projector(fs)?;
    Ok(ProjectionReport::from_projector(&p, near_trivial_threshold))
}
