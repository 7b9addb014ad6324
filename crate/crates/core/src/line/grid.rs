use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid `a, a+h, …` covering `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub a: f64,
    pub b: f64,
    pub h: f64,
}

impl Grid {
    pub fn new(a: f64, b: f64, h: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && h.is_finite()) || b <= a || h <= 0.0 {
            return Err(Error::InvalidGrid(format!("need a < b and h > 0, got a={a}, b={b}, h={h}")));
        }
        Ok(Self { a, b, h })
    }

    /// `floor((b − a)/h) + 1`, robust to the rounding of `(b − a)/h`.
    pub fn len(&self) -> usize {
        ((self.b - self.a) / self.h + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, k: usize) -> f64 {
        self.a + k as f64 * self.h
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|k| self.node(k))
    }

    /// Index of the first node with `x ≥ 0` (up to rounding), if any.
    pub fn first_nonnegative(&self) -> Option<usize> {
        let tol = 1e-9 * self.h;
        (0..self.len()).find(|&k| self.node(k) >= -tol)
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "[{}, {}] step {} vs [{}, {}] step {}",
                self.a, self.b, self.h, other.a, other.b, other.h
            )));
        }
        Ok(())
    }
}

/// Closed-form profiles used to build test states and measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Profile {
    Zero,
    Constant {
        value: f64,
    },
    /// `exp(−((x − center)/width)²)`.
    Gaussian {
        center: f64,
        #[serde(default = "one")]
        width: f64,
    },
    /// Smooth bump `exp(−1/(1 − t²))` with `t` mapping `[lo, hi]` to `[−1, 1]`.
    Bump { lo: f64, hi: f64 },
    /// `(x − lo)² (hi − x)²` on `[lo, hi]`.
    Polynomial { lo: f64, hi: f64 },
    /// `offset + slope · max(x, 0)`.
    Ramp { offset: f64, slope: f64 },
}

fn one() -> f64 {
    1.0
}

impl Profile {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Profile::Zero => 0.0,
            Profile::Constant { value } => value,
            Profile::Gaussian { center, width } => (-((x - center) / width).powi(2)).exp(),
            Profile::Bump { lo, hi } => {
                let t = (2.0 * x - lo - hi) / (hi - lo);
                if t.abs() >= 1.0 {
                    0.0
                } else {
                    (-1.0 / (1.0 - t * t)).exp()
                }
            }
            Profile::Polynomial { lo, hi } => {
                if x <= lo || x >= hi {
                    0.0
                } else {
                    (x - lo).powi(2) * (hi - x).powi(2)
                }
            }
            Profile::Ramp { offset, slope } => offset + slope * x.max(0.0),
        }
    }

    /// Natural support; `None` for profiles that never vanish identically.
    pub fn support(&self) -> Option<(f64, f64)> {
        match *self {
            Profile::Zero => Some((0.0, 0.0)),
            Profile::Bump { lo, hi } | Profile::Polynomial { lo, hi } => Some((lo, hi)),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Profile::Gaussian { width, .. } if width <= 0.0 => {
                Err(Error::InvalidFixture("gaussian width must be positive".into()))
            }
            Profile::Bump { lo, hi } | Profile::Polynomial { lo, hi } if lo >= hi => {
                Err(Error::InvalidFixture(format!("profile support [{lo}, {hi}] is empty")))
            }
            _ => Ok(()),
        }
    }
}

/// Compactly supported wave function sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    samples: Vec<Complex64>,
    support_hint: (f64, f64),
}

impl GridFunction {
    /// Samples `f`; nodes outside `support_hint` are set to exactly zero.
    pub fn sample(grid: Grid, support_hint: (f64, f64), f: impl Fn(f64) -> Complex64) -> Self {
        let (lo, hi) = support_hint;
        let samples = grid
            .nodes()
            .map(|x| if x < lo || x > hi { Complex64::new(0.0, 0.0) } else { f(x) })
            .collect();
        Self {
            grid,
            samples,
            support_hint,
        }
    }

    /// Samples a real profile, clipped to `support` (or the profile's own
    /// support, or the whole grid).
    pub fn from_profile(grid: Grid, profile: &Profile, support: Option<(f64, f64)>) -> Result<Self> {
        profile.validate()?;
        let hint = support.or(profile.support()).unwrap_or((grid.a, grid.b));
        if hint.0 > hint.1 {
            return Err(Error::InvalidFixture(format!("support [{}, {}] is empty", hint.0, hint.1)));
        }
        Ok(Self::sample(grid, hint, |x| Complex64::new(profile.eval(x), 0.0)))
    }

    pub fn zero(grid: Grid) -> Self {
        Self::sample(grid, (grid.a, grid.b), |_| Complex64::new(0.0, 0.0))
    }

    pub fn from_samples(grid: Grid, samples: Vec<Complex64>, support_hint: (f64, f64)) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                found: samples.len(),
            });
        }
        let (lo, hi) = support_hint;
        let outside = grid
            .nodes()
            .zip(&samples)
            .any(|(x, v)| (x < lo || x > hi) && *v != Complex64::new(0.0, 0.0));
        if outside {
            return Err(Error::InvalidFixture("nonzero sample outside support_hint".into()));
        }
        Ok(Self {
            grid,
            samples,
            support_hint,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn support_hint(&self) -> (f64, f64) {
        self.support_hint
    }
}

/// Nonnegative density `ν` sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    grid: Grid,
    density: Vec<f64>,
    pub note: String,
}

impl Measure {
    pub fn new(grid: Grid, density: Vec<f64>, note: impl Into<String>) -> Result<Self> {
        if density.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                found: density.len(),
            });
        }
        if let Some(node) = density.iter().position(|d| d.is_nan() || *d < 0.0) {
            return Err(Error::NegativeMeasure { node });
        }
        Ok(Self {
            grid,
            density,
            note: note.into(),
        })
    }

    pub fn uniform(grid: Grid) -> Self {
        Self {
            density: vec![1.0; grid.len()],
            grid,
            note: "ν = 1".into(),
        }
    }

    pub fn from_profile(grid: Grid, profile: &Profile) -> Result<Self> {
        profile.validate()?;
        let density = grid.nodes().map(|x| profile.eval(x)).collect();
        Self::new(grid, density, format!("{profile:?}"))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }
}
