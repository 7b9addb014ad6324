//! Ready-made systems wiring the spectral, cutting and line-action layers
//! together, looked up by name in an [`ExampleRegistry`].
//!
//! Every system records an expected outcome computed independently of the
//! code path it exercises; [`ExampleOutcome::reproduced`] compares the two.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::cut::{cstar_space, verify_theorem1, CutVerificationReport, Verdict};
use crate::error::{Error, Result};
use crate::hilbert::{BasisLabel, DiagonalOperator, LabeledBasis};
use crate::line::{verify_theorem2, HalfLineFixture, Profile, QuadratureRegistry, StateSpec, Theorem2Report};
use crate::line::Grid;
use crate::projection::{default_near_trivial_threshold, positive_projector, ProjectionReport, TrivialityFlag};
use crate::rational::{self, frac, q, Q};

/// Report produced by running an example.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExampleReport {
    Cut {
        report: CutVerificationReport,
        #[serde(with = "crate::rational::serde_q_vec")]
        physical_spectrum: Vec<Q>,
    },
    Projection {
        report: ProjectionReport,
        /// Present only when small enough to list.
        #[serde(skip_serializing_if = "Option::is_none")]
        physical_states: Option<Vec<BasisLabel>>,
        /// Independent count, `None` when the system has no closed form.
        #[serde(skip_serializing_if = "Option::is_none")]
        formula_count: Option<usize>,
    },
    Line(Theorem2Report),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExampleOutcome {
    pub name: String,
    pub summary: String,
    pub expected: String,
    pub reproduced: bool,
    pub report: ExampleReport,
}

/// Discrete data of a system: basis and constraint operators.
pub struct DiscreteSystem {
    pub basis: Arc<LabeledBasis>,
    pub constraints: Vec<DiagonalOperator>,
}

pub trait ExampleSystem: Send + Sync {
    fn name(&self) -> &str;

    /// One-line description including parameters.
    fn describe(&self) -> String;

    fn run(&self) -> Result<ExampleOutcome>;

    /// Basis and constraints for discrete systems; `None` on the line.
    fn discrete(&self) -> Option<Result<DiscreteSystem>> {
        None
    }
}

/// Cylinder `T*S¹` cut to the half-cylinder by `f = p > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfCylinder {
    pub name: String,
    pub theta_prime: Q,
    pub n: usize,
    pub theta_cut: Q,
    pub n_max: usize,
}

/// `θ′` and `θ_cut` in `(0, 1]`; `f(m) = m + θ′ − 1` on `m ∈ −N..N`, so the
/// positive spectrum is `{θ′, 1 + θ′, …}`.
pub fn half_cylinder(theta_prime: Q, n: usize, theta_cut: Q, n_max: usize) -> Result<HalfCylinder> {
    for t in [theta_prime, theta_cut] {
        if t <= q(0) || t > q(1) {
            return Err(Error::ThetaOutOfRange(rational::format(&t)));
        }
    }
    Ok(HalfCylinder {
        name: "half_cylinder".into(),
        theta_prime,
        n,
        theta_cut,
        n_max,
    })
}

impl HalfCylinder {
    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    fn operator(&self) -> Result<DiagonalOperator> {
        let n = self.n as i64;
        let basis = Arc::new(LabeledBasis::range(-n, n)?);
        let shift = self.theta_prime - q(1);
        Ok(DiagonalOperator::from_fn("f", basis, |c| c[0] + shift))
    }

    /// Expected verdict and spectrum by counting: positive values are
    /// `j + θ′` for `j < N`, matched when `j ≤ n_max` and the classes agree.
    fn expected(&self) -> (Verdict, Vec<Q>) {
        if self.n == 0 {
            return (Verdict::TrivialKernel, Vec::new());
        }
        if self.theta_prime != self.theta_cut {
            return (Verdict::Mismatch, Vec::new());
        }
        let matched = self.n.min(self.n_max + 1);
        let spectrum = (0..matched as i64).map(|j| q(j) + self.theta_prime).collect();
        let verdict = if matched == self.n {
            Verdict::Verified
        } else {
            Verdict::VerifiedUpToTruncation
        };
        (verdict, spectrum)
    }
}

impl ExampleSystem for HalfCylinder {
    fn name(&self) -> &str {
        &self.name
    }

    fn describe(&self) -> String {
        format!(
            "half-cylinder cut: theta'={}, N={}, theta_cut={}, n_max={}",
            rational::format(&self.theta_prime),
            self.n,
            rational::format(&self.theta_cut),
            self.n_max
        )
    }

    fn run(&self) -> Result<ExampleOutcome> {
        let f = self.operator()?;
        let sector = cstar_space(self.theta_cut, self.n_max, false, q(1))?;
        let report = verify_theorem1(f.basis(), &f, &sector)?;
        let mut physical_spectrum: Vec<Q> = report.matched_pairs.iter().map(|p| p.eigenvalue).collect();
        physical_spectrum.sort();
        let (verdict, spectrum) = self.expected();
        let reproduced = report.verdict == verdict && physical_spectrum == spectrum;
        let summary = format!(
            "{}: verdict {}, kernel_dim {}, projected_dim {}, {} unmatched",
            self.describe(),
            report.verdict,
            report.kernel_dim,
            report.projected_dim,
            report.unmatched_projected.len()
        );
        Ok(ExampleOutcome {
            name: self.name.clone(),
            summary,
            expected: format!("verdict {verdict}, physical spectrum of {} values", spectrum.len()),
            reproduced,
            report: ExampleReport::Cut {
                report,
                physical_spectrum,
            },
        })
    }

    fn discrete(&self) -> Option<Result<DiscreteSystem>> {
        Some(self.operator().map(|f| DiscreteSystem {
            basis: f.basis().clone(),
            constraints: vec![f],
        }))
    }
}

/// Torus system `(n₁, n₂)` with `f = n₁ − n₂²`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusQuadratic {
    pub n1: usize,
    pub n2: usize,
}

pub fn torus_quadratic(n1: usize, n2: usize) -> TorusQuadratic {
    TorusQuadratic { n1, n2 }
}

/// Largest `k ≥ 0` with `k² ≤ n`.
fn isqrt(n: u64) -> u64 {
    let mut k = (n as f64).sqrt() as u64;
    while k * k > n {
        k -= 1;
    }
    while (k + 1) * (k + 1) <= n {
        k += 1;
    }
    k
}

/// `Σ_{n₁=1}^{N1} #{n₂ : n₂² < n₁, |n₂| ≤ N2}`.
pub fn torus_count_formula(n1: usize, n2: usize) -> usize {
    (1..=n1 as u64)
        .map(|m| 2 * isqrt(m - 1).min(n2 as u64) as usize + 1)
        .sum()
}

impl TorusQuadratic {
    fn operator(&self) -> Result<DiagonalOperator> {
        let (a, b) = (self.n1 as i64, self.n2 as i64);
        let basis = Arc::new(LabeledBasis::grid(&[(-a, a), (-b, b)])?);
        Ok(DiagonalOperator::from_fn("n1 - n2^2", basis, |c| c[0] - c[1] * c[1]))
    }
}

impl ExampleSystem for TorusQuadratic {
    fn name(&self) -> &str {
        "torus_quadratic"
    }

    fn describe(&self) -> String {
        format!("torus with f = n1 - n2^2: N1={}, N2={}", self.n1, self.n2)
    }

    fn run(&self) -> Result<ExampleOutcome> {
        let f = self.operator()?;
        let p = positive_projector(std::slice::from_ref(&f))?;
        let report = ProjectionReport::from_projector(&p, default_near_trivial_threshold());
        let formula = torus_count_formula(self.n1, self.n2);
        let states = (p.rank() <= 64).then(|| p.selected().iter().map(|&i| p.basis().label(i)).collect());
        Ok(ExampleOutcome {
            name: self.name().into(),
            summary: format!("{}: {} physical states", self.describe(), p.rank()),
            expected: format!("{formula} physical states (per-n1 count)"),
            reproduced: p.rank() == formula,
            report: ExampleReport::Projection {
                report,
                physical_states: states,
                formula_count: Some(formula),
            },
        })
    }

    fn discrete(&self) -> Option<Result<DiscreteSystem>> {
        Some(self.operator().map(|f| DiscreteSystem {
            basis: f.basis().clone(),
            constraints: vec![f],
        }))
    }
}

/// Position grid over `[−2, 2]²` with condition `x² + y² > a`.
#[derive(Debug, Clone, PartialEq)]
pub struct PuncturedPlane {
    pub name: String,
    pub grid_n: usize,
    pub a: Q,
}

/// `grid_n` must be odd and at least 3 so the origin is a node.
pub fn punctured_plane_demo(grid_n: usize, a: Q) -> Result<PuncturedPlane> {
    if grid_n < 3 || grid_n.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("grid_N must be odd and >= 3, got {grid_n}")));
    }
    Ok(PuncturedPlane {
        name: "punctured_plane".into(),
        grid_n,
        a,
    })
}

impl PuncturedPlane {
    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    fn half(&self) -> i64 {
        (self.grid_n as i64 - 1) / 2
    }

    fn operator(&self) -> Result<DiagonalOperator> {
        let h = self.half();
        let axis: Vec<Q> = (-h..=h).map(|k| frac(2 * k, h)).collect();
        let tuples = axis
            .iter()
            .flat_map(|x| axis.iter().map(move |y| vec![*x, *y]))
            .collect();
        let basis = Arc::new(LabeledBasis::from_tuples(tuples)?);
        let a = self.a;
        Ok(DiagonalOperator::from_fn("x^2 + y^2 - a", basis, |c| c[0] * c[0] + c[1] * c[1] - a))
    }

    /// Nodes with `x² + y² ≤ a`, i.e. `4(k₁² + k₂²) ≤ a·half²` on integer indices.
    pub fn removed_count(&self) -> usize {
        let h = self.half();
        let bound = self.a * q(h * h);
        let mut count = 0;
        for k1 in -h..=h {
            for k2 in -h..=h {
                if q(4 * (k1 * k1 + k2 * k2)) <= bound {
                    count += 1;
                }
            }
        }
        count
    }
}

impl ExampleSystem for PuncturedPlane {
    fn name(&self) -> &str {
        &self.name
    }

    fn describe(&self) -> String {
        format!(
            "plane grid {}x{} over [-2,2]^2 with x^2 + y^2 > {}",
            self.grid_n,
            self.grid_n,
            rational::format(&self.a)
        )
    }

    fn run(&self) -> Result<ExampleOutcome> {
        let f = self.operator()?;
        let threshold = default_near_trivial_threshold();
        let p = positive_projector(std::slice::from_ref(&f))?;
        let report = ProjectionReport::from_projector(&p, threshold);
        let total = self.grid_n * self.grid_n;
        let removed = self.removed_count();
        let flag = TrivialityFlag::classify(total, total - removed, threshold);
        let reproduced = report.original_dim == total
            && report.projected_dim == total - removed
            && report.removed_fraction == Q::new(removed as i64, total as i64)
            && report.triviality_flag == flag;
        Ok(ExampleOutcome {
            name: self.name.clone(),
            summary: format!(
                "{}: removed {} ({}), {}",
                self.describe(),
                rational::format(&report.removed_fraction),
                total - report.projected_dim,
                report.triviality_flag
            ),
            expected: format!("{removed} of {total} nodes removed, {flag}"),
            reproduced,
            report: ExampleReport::Projection {
                report,
                physical_states: None,
                formula_count: Some(total - removed),
            },
        })
    }

    fn discrete(&self) -> Option<Result<DiscreteSystem>> {
        Some(self.operator().map(|f| DiscreteSystem {
            basis: f.basis().clone(),
            constraints: vec![f],
        }))
    }
}

/// Line action `T*ℝ` cut to `p > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfLine {
    pub name: String,
    pub fixture: HalfLineFixture,
}

pub fn half_line(fixture: HalfLineFixture) -> HalfLine {
    HalfLine {
        name: "half_line".into(),
        fixture,
    }
}

impl HalfLine {
    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Negative, positive and straddling bumps on `[−3, 3]`, `h = 1/1024`.
    pub fn default_fixture() -> HalfLineFixture {
        HalfLineFixture {
            grid: Grid {
                a: -3.0,
                b: 3.0,
                h: 1.0 / 1024.0,
            },
            states: vec![
                StateSpec::new(Profile::Bump { lo: -2.0, hi: -0.5 }),
                StateSpec::new(Profile::Bump { lo: 0.5, hi: 2.0 }),
                StateSpec::new(Profile::Bump { lo: -1.0, hi: 1.5 }),
            ],
            nu: Profile::Constant { value: 1.0 },
            quadrature: "trapezoid".into(),
        }
    }

    /// Default fixture with `ν = 1 + max(p, 0)`.
    pub fn weighted_fixture() -> HalfLineFixture {
        HalfLineFixture {
            nu: Profile::Ramp {
                offset: 1.0,
                slope: 1.0,
            },
            ..Self::default_fixture()
        }
    }
}

impl ExampleSystem for HalfLine {
    fn name(&self) -> &str {
        &self.name
    }

    fn describe(&self) -> String {
        format!(
            "half-line cut: {} states on [{}, {}], h = {}, nu = {:?}",
            self.fixture.states.len(),
            self.fixture.grid.a,
            self.fixture.grid.b,
            self.fixture.grid.h,
            self.fixture.nu
        )
    }

    fn run(&self) -> Result<ExampleOutcome> {
        let rule = QuadratureRegistry::with_builtins().get(&self.fixture.quadrature)?;
        let family = self.fixture.family()?;
        let report = verify_theorem2(&family, &self.fixture.measure()?, rule.as_ref())?;
        Ok(ExampleOutcome {
            name: self.name.clone(),
            summary: format!(
                "{}: trichotomy {}, min Gram eigenvalue {:e}",
                self.describe(),
                if report.holds { "holds" } else { "fails" },
                report.gram_min_eigenvalue
            ),
            expected: "negative states rig to 0, positive keep their norm, straddling keep the f > 0 part".into(),
            reproduced: report.holds,
            report: ExampleReport::Line(report),
        })
    }
}

/// Name → system table.
pub struct ExampleRegistry {
    systems: BTreeMap<String, Arc<dyn ExampleSystem>>,
}

impl ExampleRegistry {
    pub fn empty() -> Self {
        Self {
            systems: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        let cyl = |tp, tc, name: &str| half_cylinder(tp, 10, tc, 10).expect("valid theta").named(name);
        r.register(Arc::new(cyl(q(1), q(1), "half_cylinder")));
        r.register(Arc::new(cyl(frac(1, 4), frac(1, 4), "half_cylinder_quarter")));
        r.register(Arc::new(cyl(frac(1, 2), frac(1, 4), "half_cylinder_mismatch")));
        r.register(Arc::new(torus_quadratic(4, 2)));
        r.register(Arc::new(punctured_plane_demo(21, q(0)).expect("odd grid")));
        r.register(Arc::new(punctured_plane_demo(21, q(1)).expect("odd grid").named("annulus")));
        r.register(Arc::new(half_line(HalfLine::default_fixture())));
        r.register(Arc::new(half_line(HalfLine::weighted_fixture()).named("half_line_weighted")));
        r
    }

    /// Replaces any system already registered under the same name.
    pub fn register(&mut self, system: Arc<dyn ExampleSystem>) {
        self.systems.insert(system.name().to_string(), system);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn ExampleSystem>> {
        self.systems.get(name).cloned().ok_or_else(|| Error::Unknown {
            kind: "example",
            name: name.to_string(),
        })
    }

    pub fn names(&self) -> Vec<&str> {
        self.systems.keys().map(String::as_str).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<dyn ExampleSystem>> {
        self.systems.values()
    }
}

impl Default for ExampleRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rayon::prelude::*;

    #[test]
    fn builtins_reproduce() {
        let r = ExampleRegistry::with_builtins();
        let systems: Vec<_> = r.iter().cloned().collect();
        let outcomes: Vec<ExampleOutcome> = systems.par_iter().map(|s| s.run().unwrap()).collect();
        for o in &outcomes {
            assert!(o.reproduced, "{}: {}", o.name, o.summary);
        }
    }

    #[test]
    fn half_cylinder_cases() {
        let o = half_cylinder(q(1), 10, q(1), 10).unwrap().run().unwrap();
        let ExampleReport::Cut { report, physical_spectrum } = o.report else { panic!() };
        assert_eq!(report.verdict, Verdict::Verified);
        assert_eq!(physical_spectrum, (1..=10).map(q).collect::<Vec<_>>());

        let o = half_cylinder(frac(1, 2), 10, frac(1, 4), 10).unwrap().run().unwrap();
        let ExampleReport::Cut { report, .. } = o.report else { panic!() };
        assert_eq!(report.verdict, Verdict::Mismatch);
        assert_eq!(report.kernel_dim, 0);

        let o = half_cylinder(frac(1, 4), 10, frac(1, 4), 10).unwrap().run().unwrap();
        let ExampleReport::Cut { physical_spectrum, .. } = o.report else { panic!() };
        assert_eq!(physical_spectrum[..2], [frac(1, 4), frac(5, 4)]);
        assert!(physical_spectrum.iter().all(|v| *v > q(0)));

        assert!(half_cylinder(q(0), 3, q(1), 3).is_err());
    }

    #[test]
    fn half_cylinder_truncated() {
        let o = half_cylinder(q(1), 10, q(1), 4).unwrap().run().unwrap();
        assert!(o.reproduced);
        let ExampleReport::Cut { report, .. } = o.report else { panic!() };
        assert_eq!(report.verdict, Verdict::VerifiedUpToTruncation);
        assert_eq!(report.unmatched_projected.len(), 5);
    }

    #[test]
    fn torus_counts() {
        let o = torus_quadratic(4, 2).run().unwrap();
        let ExampleReport::Projection { physical_states, .. } = &o.report else { panic!() };
        let got: Vec<BasisLabel> = physical_states.clone().unwrap();
        let want: Vec<BasisLabel> = [(1, 0), (2, -1), (2, 0), (2, 1), (3, -1), (3, 0), (3, 1), (4, -1), (4, 0), (4, 1)]
            .iter()
            .map(|&(a, b)| BasisLabel::ints(&[a, b]))
            .collect();
        assert_eq!(got, want);
        assert_eq!(torus_count_formula(0, 5), 0);
        assert!(torus_quadratic(0, 3).run().unwrap().summary.contains(" 0 physical"));
    }

    #[test]
    fn plane_flags() {
        let check = |a: Q, flag: TrivialityFlag| {
            let o = punctured_plane_demo(21, a).unwrap().run().unwrap();
            assert!(o.reproduced);
            let ExampleReport::Projection { report, .. } = o.report else { panic!() };
            assert_eq!(report.triviality_flag, flag);
            report
        };
        assert_eq!(check(q(0), TrivialityFlag::NearTrivial).removed_fraction, frac(1, 441));
        check(q(1), TrivialityFlag::Proper);
        check(q(-1), TrivialityFlag::TrivialIdentity);
        assert!(punctured_plane_demo(20, q(0)).is_err());
    }

    #[test]
    fn half_line_requires_fixtures() {
        let mut fixture = HalfLine::default_fixture();
        fixture.states.clear();
        let err = half_line(fixture).run().unwrap_err();
        assert_eq!(err.to_string(), "fixtures required");
    }

    #[test]
    fn registry_lookup() {
        let r = ExampleRegistry::with_builtins();
        assert!(r.names().contains(&"torus_quadratic"));
        assert!(matches!(r.get("klein_bottle"), Err(Error::Unknown { .. })));
        assert!(r.get("half_line").unwrap().discrete().is_none());
        let d = r.get("half_cylinder").unwrap().discrete().unwrap().unwrap();
        assert_eq!(d.basis.dim(), 21);
    }

    #[test]
    fn outcome_json_shape() {
        let o = torus_quadratic(4, 2).run().unwrap();
        let v = serde_json::to_value(&o).unwrap();
        assert_eq!(v["report"]["kind"], "projection");
        assert_eq!(v["report"]["report"]["projected_dim"], 10);
        assert_eq!(v["report"]["physical_states"][0], serde_json::json!(["1/1", "0/1"]));
    }
}
