//! Truncated Hilbert spaces with labeled orthonormal bases.
//!
//! A [`LabeledBasis`] is an ordered list of quantum-number tuples. Operators
//! and states hold an [`Arc`] to the basis they live on; two objects are
//! compatible when their bases compare equal.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::{self, Q};

/// One basis element: a tuple of exact quantum numbers plus an optional
/// direct-sum sector tag.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BasisLabel {
    pub components: Vec<Q>,
    pub sector_tag: Option<String>,
}

impl BasisLabel {
    pub fn new(components: Vec<Q>) -> Self {
        Self {
            components,
            sector_tag: None,
        }
    }

    pub fn ints(ns: &[i64]) -> Self {
        Self::new(ns.iter().map(|&n| rational::q(n)).collect())
    }

    pub fn tagged(mut self, tag: impl Into<String>) -> Self {
        self.sector_tag = Some(tag.into());
        self
    }
}

/// Untagged labels serialize as `["p/q", …]`, tagged ones as
/// `{"sector": tag, "components": [...]}`.
impl Serialize for BasisLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let comps: Vec<String> = self.components.iter().map(rational::format).collect();
        match &self.sector_tag {
            None => comps.serialize(s),
            Some(tag) => {
                #[derive(Serialize)]
                struct Tagged<'a> {
                    sector: &'a str,
                    components: Vec<String>,
                }
                Tagged {
                    sector: tag,
                    components: comps,
                }
                .serialize(s)
            }
        }
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.components.iter().map(|c| c.to_string()).collect();
        match &self.sector_tag {
            Some(tag) => write!(f, "[{}]({})", tag, parts.join(",")),
            None => write!(f, "({})", parts.join(",")),
        }
    }
}

/// Ordered, duplicate-free basis of a truncated Hilbert space.
///
/// Components are stored flat (`dim * arity` rationals) so that large tensor
/// products stay a single allocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledBasis {
    arity: usize,
    components: Vec<Q>,
    /// Either empty (no label is tagged) or one entry per label.
    tags: Vec<Option<Arc<str>>>,
}

impl LabeledBasis {
    /// Validates arity, non-emptiness and pairwise distinctness.
    pub fn new(labels: Vec<BasisLabel>) -> Result<Self> {
        let first = labels.first().ok_or(Error::EmptyBasis)?;
        let arity = first.components.len();
        if arity == 0 {
            return Err(Error::ArityMismatch { expected: 1, found: 0 });
        }
        let mut seen = HashSet::with_capacity(labels.len());
        for (index, label) in labels.iter().enumerate() {
            if label.components.len() != arity {
                return Err(Error::ArityMismatch {
                    expected: arity,
                    found: label.components.len(),
                });
            }
            if !seen.insert(label) {
                return Err(Error::DuplicateLabel { index });
            }
        }
        let any_tag = labels.iter().any(|l| l.sector_tag.is_some());
        let tags = if any_tag {
            labels
                .iter()
                .map(|l| l.sector_tag.as_deref().map(Arc::from))
                .collect()
        } else {
            Vec::new()
        };
        let components = labels.into_iter().flat_map(|l| l.components).collect();
        Ok(Self {
            arity,
            components,
            tags,
        })
    }

    /// Integer labels `lo..=hi` of arity one.
    pub fn range(lo: i64, hi: i64) -> Result<Self> {
        Self::grid(&[(lo, hi)])
    }

    /// Row-major product of integer ranges, first range outermost.
    pub fn grid(ranges: &[(i64, i64)]) -> Result<Self> {
        if ranges.is_empty() || ranges.iter().any(|&(lo, hi)| lo > hi) {
            return Err(Error::EmptyBasis);
        }
        let mut basis: Option<LabeledBasis> = None;
        for &(lo, hi) in ranges {
            let axis = Self {
                arity: 1,
                components: (lo..=hi).map(rational::q).collect(),
                tags: Vec::new(),
            };
            basis = Some(match basis {
                None => axis,
                Some(b) => tensor_basis(&b, &axis),
            });
        }
        Ok(basis.expect("at least one range"))
    }

    /// Labels from rational tuples, validated like [`LabeledBasis::new`].
    pub fn from_tuples(tuples: Vec<Vec<Q>>) -> Result<Self> {
        Self::new(tuples.into_iter().map(BasisLabel::new).collect())
    }

    pub fn dim(&self) -> usize {
        self.components.len() / self.arity
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn components(&self, index: usize) -> &[Q] {
        &self.components[index * self.arity..(index + 1) * self.arity]
    }

    pub fn tag(&self, index: usize) -> Option<&str> {
        self.tags.get(index).and_then(|t| t.as_deref())
    }

    pub fn label(&self, index: usize) -> BasisLabel {
        BasisLabel {
            components: self.components(index).to_vec(),
            sector_tag: self.tag(index).map(str::to_string),
        }
    }

    pub fn labels(&self) -> impl Iterator<Item = BasisLabel> + '_ {
        (0..self.dim()).map(|i| self.label(i))
    }

    pub fn index_of(&self, label: &BasisLabel) -> Option<usize> {
        (0..self.dim()).find(|&i| {
            self.components(i) == label.components.as_slice()
                && self.tag(i) == label.sector_tag.as_deref()
        })
    }

    /// Sub-basis on `indices`, in the given order. Indices must be distinct.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptyBasis);
        }
        let dim = self.dim();
        let mut components = Vec::with_capacity(indices.len() * self.arity);
        let mut tags = Vec::new();
        for &i in indices {
            if i >= dim {
                return Err(Error::IndexOutOfRange { index: i, dim });
            }
            components.extend_from_slice(self.components(i));
            if !self.tags.is_empty() {
                tags.push(self.tags[i].clone());
            }
        }
        Ok(Self {
            arity: self.arity,
            components,
            tags,
        })
    }
}

/// Row-major tensor product: labels of `a` outermost, tuples concatenated.
pub fn tensor_basis(a: &LabeledBasis, b: &LabeledBasis) -> LabeledBasis {
    let (da, db) = (a.dim(), b.dim());
    let arity = a.arity + b.arity;
    let mut components = Vec::with_capacity(da * db * arity);
    for i in 0..da {
        for j in 0..db {
            components.extend_from_slice(a.components(i));
            components.extend_from_slice(b.components(j));
        }
    }
    let tags = if a.tags.is_empty() && b.tags.is_empty() {
        Vec::new()
    } else {
        let mut tags = Vec::with_capacity(da * db);
        for i in 0..da {
            for j in 0..db {
                tags.push(match (a.tag(i), b.tag(j)) {
                    (Some(x), Some(y)) => Some(Arc::from(format!("{x}|{y}"))),
                    (Some(x), None) | (None, Some(x)) => Some(Arc::from(x)),
                    (None, None) => None,
                });
            }
        }
        tags
    };
    LabeledBasis {
        arity,
        components,
        tags,
    }
}

/// Concatenates tagged summands; every label of a summand carries its tag.
pub fn direct_sum(spaces: &[(&str, &LabeledBasis)]) -> Result<LabeledBasis> {
    let (_, first) = spaces.first().ok_or(Error::EmptyBasis)?;
    let arity = first.arity;
    let mut seen = HashSet::new();
    let mut components = Vec::new();
    let mut tags = Vec::new();
    for (tag, basis) in spaces {
        if !seen.insert(*tag) {
            return Err(Error::DuplicateSectorTag(tag.to_string()));
        }
        if basis.arity != arity {
            return Err(Error::ArityMismatch {
                expected: arity,
                found: basis.arity,
            });
        }
        let shared: Arc<str> = Arc::from(*tag);
        components.extend_from_slice(&basis.components);
        tags.extend(std::iter::repeat_n(Some(shared), basis.dim()));
    }
    Ok(LabeledBasis {
        arity,
        components,
        tags,
    })
}

pub(crate) fn same_basis(a: &Arc<LabeledBasis>, b: &Arc<LabeledBasis>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

#[derive(Serialize, Deserialize)]
struct BasisDoc {
    dimension: usize,
    labels: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sector_tags: Option<Vec<Option<String>>>,
}

impl Serialize for LabeledBasis {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let doc = BasisDoc {
            dimension: self.dim(),
            labels: (0..self.dim())
                .map(|i| self.components(i).iter().map(rational::format).collect())
                .collect(),
            sector_tags: (!self.tags.is_empty())
                .then(|| (0..self.dim()).map(|i| self.tag(i).map(str::to_string)).collect()),
        };
        doc.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LabeledBasis {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = BasisDoc::deserialize(d)?;
        if doc.dimension != doc.labels.len() {
            return Err(D::Error::custom(format!(
                "field `dimension` is {} but `labels` has {} entries",
                doc.dimension,
                doc.labels.len()
            )));
        }
        let tags = doc.sector_tags.unwrap_or_default();
        if !tags.is_empty() && tags.len() != doc.labels.len() {
            return Err(D::Error::custom("field `sector_tags` must match `labels` in length"));
        }
        let mut labels = Vec::with_capacity(doc.labels.len());
        for (i, raw) in doc.labels.iter().enumerate() {
            let components = raw
                .iter()
                .map(|s| rational::parse(s))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| D::Error::custom(format!("field `labels[{i}]`: {e}")))?;
            labels.push(BasisLabel {
                components,
                sector_tag: tags.get(i).cloned().flatten(),
            });
        }
        LabeledBasis::new(labels).map_err(|e| D::Error::custom(format!("field `labels`: {e}")))
    }
}

/// Amplitudes over a basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    basis: Arc<LabeledBasis>,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(basis: Arc<LabeledBasis>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::LengthMismatch {
                expected: basis.dim(),
                found: amplitudes.len(),
            });
        }
        Ok(Self { basis, amplitudes })
    }

    pub fn basis_state(basis: Arc<LabeledBasis>, index: usize) -> Result<Self> {
        let dim = basis.dim();
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, dim });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self { basis, amplitudes })
    }

    pub fn basis(&self) -> &Arc<LabeledBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// `Σ conj(u_k) v_k`.
pub fn inner_product(u: &StateVector, v: &StateVector) -> Result<Complex64> {
    if !same_basis(&u.basis, &v.basis) {
        return Err(Error::BasisMismatch("states live on different bases".into()));
    }
    Ok(u.amplitudes
        .iter()
        .zip(&v.amplitudes)
        .map(|(a, b)| a.conj() * b)
        .sum())
}

/// Eigenvalue storage of a [`DiagonalOperator`].
#[derive(Debug, Clone, PartialEq)]
pub enum Eigenvalues {
    Exact(Vec<Q>),
    /// Demo-only float mode; `tol` is the zero/sign threshold.
    Approx { values: Vec<f64>, tol: f64 },
}

impl Eigenvalues {
    fn len(&self) -> usize {
        match self {
            Eigenvalues::Exact(v) => v.len(),
            Eigenvalues::Approx { values, .. } => values.len(),
        }
    }
}

/// Operator diagonal in a labeled basis, one eigenvalue per label.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalOperator {
    name: String,
    basis: Arc<LabeledBasis>,
    values: Eigenvalues,
}

impl DiagonalOperator {
    pub fn exact(name: impl Into<String>, basis: Arc<LabeledBasis>, values: Vec<Q>) -> Result<Self> {
        Self::with_values(name, basis, Eigenvalues::Exact(values))
    }

    pub fn approx(
        name: impl Into<String>,
        basis: Arc<LabeledBasis>,
        values: Vec<f64>,
        tol: f64,
    ) -> Result<Self> {
        Self::with_values(name, basis, Eigenvalues::Approx { values, tol })
    }

    fn with_values(name: impl Into<String>, basis: Arc<LabeledBasis>, values: Eigenvalues) -> Result<Self> {
        if values.len() != basis.dim() {
            return Err(Error::LengthMismatch {
                expected: basis.dim(),
                found: values.len(),
            });
        }
        Ok(Self {
            name: name.into(),
            basis,
            values,
        })
    }

    /// Evaluates `eigenvalue(components)` on every label.
    pub fn from_fn(
        name: impl Into<String>,
        basis: Arc<LabeledBasis>,
        eigenvalue: impl Fn(&[Q]) -> Q,
    ) -> Self {
        let values = (0..basis.dim()).map(|i| eigenvalue(basis.components(i))).collect();
        Self {
            name: name.into(),
            basis,
            values: Eigenvalues::Exact(values),
        }
    }

    pub fn constant(name: impl Into<String>, basis: Arc<LabeledBasis>, value: Q) -> Self {
        let values = vec![value; basis.dim()];
        Self {
            name: name.into(),
            basis,
            values: Eigenvalues::Exact(values),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn basis(&self) -> &Arc<LabeledBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn values(&self) -> &Eigenvalues {
        &self.values
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.values, Eigenvalues::Exact(_))
    }

    pub fn exact_values(&self) -> Result<&[Q]> {
        match &self.values {
            Eigenvalues::Exact(v) => Ok(v),
            Eigenvalues::Approx { .. } => Err(Error::FloatModeRejected(self.name.clone())),
        }
    }

    pub fn value_f64(&self, index: usize) -> f64 {
        match &self.values {
            Eigenvalues::Exact(v) => rational::to_f64(&v[index]),
            Eigenvalues::Approx { values, .. } => values[index],
        }
    }

    /// `true` when the eigenvalue at `index` is strictly positive. Float
    /// mode treats values within `tol` of zero as zero.
    pub fn is_positive_at(&self, index: usize) -> bool {
        match &self.values {
            Eigenvalues::Exact(v) => v[index] > rational::q(0),
            Eigenvalues::Approx { values, tol } => values[index] > *tol,
        }
    }

    /// Pointwise `self + c` (float mode shifts by the float value of `c`).
    pub fn shifted(&self, c: Q) -> Self {
        self.map(|x| x + c, |x| x + rational::to_f64(&c))
    }

    pub fn negated(&self) -> Self {
        self.map(|x| -x, |x| -x)
    }

    pub fn scaled(&self, c: Q) -> Self {
        self.map(|x| x * c, |x| x * rational::to_f64(&c))
    }

    fn map(&self, exact: impl Fn(Q) -> Q, approx: impl Fn(f64) -> f64) -> Self {
        let values = match &self.values {
            Eigenvalues::Exact(v) => Eigenvalues::Exact(v.iter().map(|&x| exact(x)).collect()),
            Eigenvalues::Approx { values, tol } => Eigenvalues::Approx {
                values: values.iter().map(|&x| approx(x)).collect(),
                tol: *tol,
            },
        };
        Self {
            name: self.name.clone(),
            basis: Arc::clone(&self.basis),
            values,
        }
    }

    /// Restriction to `indices` of the basis, living on `sub_basis`.
    pub fn restrict(&self, indices: &[usize], sub_basis: Arc<LabeledBasis>) -> Result<Self> {
        if indices.len() != sub_basis.dim() {
            return Err(Error::LengthMismatch {
                expected: sub_basis.dim(),
                found: indices.len(),
            });
        }
        let values = match &self.values {
            Eigenvalues::Exact(v) => Eigenvalues::Exact(indices.iter().map(|&i| v[i]).collect()),
            Eigenvalues::Approx { values, tol } => Eigenvalues::Approx {
                values: indices.iter().map(|&i| values[i]).collect(),
                tol: *tol,
            },
        };
        Ok(Self {
            name: self.name.clone(),
            basis: sub_basis,
            values,
        })
    }

    /// Exact spectrum in basis order.
    pub fn spectrum(&self) -> Result<Spectrum> {
        Ok(Spectrum {
            values: self.exact_values()?.to_vec(),
        })
    }
}

/// Sign of the second term in [`diag_combine`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// `f ⊗ 1 + sign · (1 ⊗ g)` on `tensor_basis(f.basis, g.basis)`.
pub fn diag_combine(f: &DiagonalOperator, g: &DiagonalOperator, sign: Sign) -> DiagonalOperator {
    let basis = Arc::new(tensor_basis(&f.basis, &g.basis));
    let values = match (&f.values, &g.values) {
        (Eigenvalues::Exact(a), Eigenvalues::Exact(b)) => {
            let mut out = Vec::with_capacity(a.len() * b.len());
            for x in a {
                for y in b {
                    out.push(match sign {
                        Sign::Plus => x + y,
                        Sign::Minus => x - y,
                    });
                }
            }
            Eigenvalues::Exact(out)
        }
        _ => {
            let tol = [&f.values, &g.values]
                .iter()
                .filter_map(|v| match v {
                    Eigenvalues::Approx { tol, .. } => Some(*tol),
                    Eigenvalues::Exact(_) => None,
                })
                .fold(0.0, f64::max);
            let s = if sign == Sign::Plus { 1.0 } else { -1.0 };
            let mut out = Vec::with_capacity(f.dim() * g.dim());
            for i in 0..f.dim() {
                for j in 0..g.dim() {
                    out.push(f.value_f64(i) + s * g.value_f64(j));
                }
            }
            Eigenvalues::Approx { values: out, tol }
        }
    };
    let op = if sign == Sign::Plus { "+" } else { "-" };
    DiagonalOperator {
        name: format!("{}⊗1{}1⊗{}", f.name, op, g.name),
        basis,
        values,
    }
}

/// Eigenvalue multiset, kept in basis order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Spectrum {
    values: Vec<Q>,
}

impl Spectrum {
    pub fn values(&self) -> &[Q] {
        &self.values
    }

    pub fn sorted(&self) -> Vec<Q> {
        let mut v = self.values.clone();
        v.sort();
        v
    }

    pub fn multiplicities(&self) -> BTreeMap<Q, usize> {
        let mut m = BTreeMap::new();
        for v in &self.values {
            *m.entry(*v).or_insert(0) += 1;
        }
        m
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Serialize)]
struct OperatorDocOut<'a> {
    name: &'a str,
    basis: &'a LabeledBasis,
    #[serde(skip_serializing_if = "Option::is_none")]
    eigenvalues: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    float_eigenvalues: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tolerance: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OperatorDocIn {
    #[serde(default = "default_name")]
    name: String,
    basis: LabeledBasis,
    #[serde(default)]
    eigenvalues: Option<Vec<String>>,
    #[serde(default)]
    float_eigenvalues: Option<Vec<f64>>,
    #[serde(default)]
    tolerance: Option<f64>,
}

fn default_name() -> String {
    "f".to_string()
}

impl Serialize for DiagonalOperator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let doc = match &self.values {
            Eigenvalues::Exact(v) => OperatorDocOut {
                name: &self.name,
                basis: &self.basis,
                eigenvalues: Some(v.iter().map(rational::format).collect()),
                float_eigenvalues: None,
                tolerance: None,
            },
            Eigenvalues::Approx { values, tol } => OperatorDocOut {
                name: &self.name,
                basis: &self.basis,
                eigenvalues: None,
                float_eigenvalues: Some(values),
                tolerance: Some(*tol),
            },
        };
        doc.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DiagonalOperator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = OperatorDocIn::deserialize(d)?;
        let basis = Arc::new(doc.basis);
        let op = match (doc.eigenvalues, doc.float_eigenvalues) {
            (Some(raw), None) => {
                let values = raw
                    .iter()
                    .enumerate()
                    .map(|(i, s)| {
                        rational::parse(s)
                            .map_err(|e| D::Error::custom(format!("field `eigenvalues[{i}]`: {e}")))
                    })
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                DiagonalOperator::exact(doc.name, basis, values)
            }
            (None, Some(values)) => {
                DiagonalOperator::approx(doc.name, basis, values, doc.tolerance.unwrap_or(1e-9))
            }
            _ => {
                return Err(D::Error::custom(
                    "exactly one of fields `eigenvalues` and `float_eigenvalues` is required",
                ))
            }
        };
        op.map_err(|e| D::Error::custom(format!("field `eigenvalues`: {e}")))
    }
}

/// Dense complex operator on a labeled basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    basis: Arc<LabeledBasis>,
    matrix: DMatrix<Complex64>,
    hermitian: bool,
}

impl DenseOperator {
    pub fn new(basis: Arc<LabeledBasis>, matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = basis.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::LengthMismatch {
                expected: dim,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Self {
            basis,
            matrix,
            hermitian: false,
        })
    }

    /// Sets the hermiticity flag after checking `max |M − M†| ≤ tol`.
    pub fn new_hermitian(basis: Arc<LabeledBasis>, matrix: DMatrix<Complex64>, tol: f64) -> Result<Self> {
        let mut op = Self::new(basis, matrix)?;
        let defect = op.hermiticity_defect();
        if defect > tol {
            return Err(Error::InvalidParameter(format!(
                "matrix is not hermitian: max |M - M†| = {defect:e} exceeds {tol:e}"
            )));
        }
        op.hermitian = true;
        Ok(op)
    }

    pub fn identity(basis: Arc<LabeledBasis>) -> Self {
        let dim = basis.dim();
        Self {
            basis,
            matrix: DMatrix::identity(dim, dim),
            hermitian: true,
        }
    }

    pub fn from_diagonal(op: &DiagonalOperator) -> Self {
        let dim = op.dim();
        let matrix = DMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                Complex64::new(op.value_f64(i), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Self {
            basis: Arc::clone(op.basis()),
            matrix,
            hermitian: true,
        }
    }

    pub fn basis(&self) -> &Arc<LabeledBasis> {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn hermitian_flag(&self) -> bool {
        self.hermitian
    }

    /// Largest entry of `|M − M†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let m = &self.matrix;
        let mut worst: f64 = 0.0;
        for i in 0..m.nrows() {
            for j in i..m.ncols() {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// Ascending eigenvalues of the hermitian part `(M + M†)/2`.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let h = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        let mut eig: Vec<f64> = nalgebra::SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        eig
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if !same_basis(&self.basis, state.basis()) {
            return Err(Error::BasisMismatch("operator and state live on different bases".into()));
        }
        let v = nalgebra::DVector::from_column_slice(state.amplitudes());
        let out = &self.matrix * v;
        StateVector::new(Arc::clone(&self.basis), out.iter().copied().collect())
    }

    pub(crate) fn with_flag(basis: Arc<LabeledBasis>, matrix: DMatrix<Complex64>, hermitian: bool) -> Self {
        Self {
            basis,
            matrix,
            hermitian,
        }
    }
}
