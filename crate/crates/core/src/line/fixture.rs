//! JSON fixture descriptions: a grid plus analytic-form tags and parameters.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{Grid, GridFunction, Measure, Profile};
use super::rigging::RiggingStates;
use crate::error::{Error, Result};

/// A profile optionally clipped to an explicit support window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpec {
    #[serde(flatten)]
    pub profile: Profile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<(f64, f64)>,
}

impl StateSpec {
    pub fn new(profile: Profile) -> Self {
        Self { profile, support: None }
    }

    pub fn clipped(profile: Profile, lo: f64, hi: f64) -> Self {
        Self {
            profile,
            support: Some((lo, hi)),
        }
    }

    pub fn build(&self, grid: Grid) -> Result<GridFunction> {
        GridFunction::from_profile(grid, &self.profile, self.support)
    }
}

fn default_nu() -> Profile {
    Profile::Constant { value: 1.0 }
}

fn default_rule() -> String {
    "trapezoid".to_string()
}

/// Convergence-study fixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiggingFixture {
    pub grid: Grid,
    pub psi1: StateSpec,
    pub chi1: StateSpec,
    pub psi2: StateSpec,
    pub chi2: StateSpec,
    #[serde(default = "default_nu")]
    pub nu: Profile,
    pub t_list: Vec<f64>,
    #[serde(default = "default_rule")]
    pub quadrature: String,
    /// Externally known value of the reduced integral, `[re, im]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<(f64, f64)>,
}

impl RiggingFixture {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.a, self.grid.b, self.grid.h)
    }

    pub fn states(&self) -> Result<RiggingStates> {
        let g = self.grid()?;
        RiggingStates::new(self.psi1.build(g)?, self.chi1.build(g)?, self.psi2.build(g)?, self.chi2.build(g)?)
    }

    pub fn measure(&self) -> Result<Measure> {
        Measure::from_profile(self.grid()?, &self.nu)
    }

    pub fn reference(&self) -> Option<Complex64> {
        self.reference.map(|(re, im)| Complex64::new(re, im))
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_list.is_empty() {
            return Err(Error::InvalidFixture("field `t_list` must not be empty".into()));
        }
        self.states()?;
        self.measure()?;
        Ok(())
    }

    /// `ψ = χ = e^{−(p−2)²}` on `[−2, 6]` with `h = 1/64`, `T ∈ {5,10,20,40}`.
    pub fn gaussian_diagonal() -> Self {
        let g = StateSpec::new(Profile::Gaussian { center: 2.0, width: 1.0 });
        Self {
            grid: Grid { a: -2.0, b: 6.0, h: 1.0 / 64.0 },
            psi1: g.clone(),
            chi1: g.clone(),
            psi2: g.clone(),
            chi2: g,
            nu: default_nu(),
            t_list: vec![5.0, 10.0, 20.0, 40.0],
            quadrature: default_rule(),
            reference: None,
        }
    }

    /// `ψ` supported in `[−2,−1]`; nothing survives the positive projection.
    pub fn negative_support() -> Self {
        let mut f = Self::gaussian_diagonal();
        f.psi1 = StateSpec::new(Profile::Bump { lo: -2.0, hi: -1.0 });
        f.psi2 = f.psi1.clone();
        f.reference = Some((0.0, 0.0));
        f
    }
}

/// Family of test states for the line-action check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfLineFixture {
    pub grid: Grid,
    pub states: Vec<StateSpec>,
    #[serde(default = "default_nu")]
    pub nu: Profile,
    #[serde(default = "default_rule")]
    pub quadrature: String,
}

impl HalfLineFixture {
    pub fn family(&self) -> Result<Vec<GridFunction>> {
        let g = Grid::new(self.grid.a, self.grid.b, self.grid.h)?;
        self.states.iter().map(|s| s.build(g)).collect()
    }

    pub fn measure(&self) -> Result<Measure> {
        Measure::from_profile(Grid::new(self.grid.a, self.grid.b, self.grid.h)?, &self.nu)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_json_round_trip() {
        let f = RiggingFixture::gaussian_diagonal();
        let json = serde_json::to_string(&f).unwrap();
        assert!(json.contains(r#""shape":"gaussian""#));
        let back: RiggingFixture = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f);
        back.validate().unwrap();
    }

    #[test]
    fn fixture_defaults_and_clipping() {
        let json = r#"{
            "grid": {"a": 0.0, "b": 4.0, "h": 0.5},
            "psi1": {"shape": "constant", "value": 1.0, "support": [1.0, 2.0]},
            "chi1": {"shape": "zero"},
            "psi2": {"shape": "bump", "lo": 1.0, "hi": 3.0},
            "chi2": {"shape": "gaussian", "center": 1.0},
            "t_list": [1.0]
        }"#;
        let f: RiggingFixture = serde_json::from_str(json).unwrap();
        assert_eq!(f.quadrature, "trapezoid");
        let s = f.states().unwrap();
        assert_eq!(s.psi1.support_hint(), (1.0, 2.0));
        assert_eq!(s.psi1.samples()[1].re, 0.0);
        assert_eq!(s.psi1.samples()[3].re, 1.0);
    }

    #[test]
    fn malformed_fixture_names_field() {
        let json = r#"{"grid": {"a": 0.0, "b": 4.0, "h": 0.5}, "t_list": [1.0]}"#;
        let err = serde_json::from_str::<RiggingFixture>(json).unwrap_err().to_string();
        assert!(err.contains("psi1"), "{err}");
        let mut f = RiggingFixture::gaussian_diagonal();
        f.t_list.clear();
        assert!(f.validate().is_err());
    }
}
