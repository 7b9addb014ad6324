use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::grid::{Grid, GridFunction, Measure};
use super::quadrature::QuadratureRule;
use crate::error::{Error, Result};

/// The four factors of `η(ψ₁χ₁)[ψ₂χ₂]` on a shared grid. The `ψ`s are read
/// on the whole grid (the `f` line), the `χ`s only on nodes with `p ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiggingStates {
    pub psi1: GridFunction,
    pub chi1: GridFunction,
    pub psi2: GridFunction,
    pub chi2: GridFunction,
}

impl RiggingStates {
    pub fn new(psi1: GridFunction, chi1: GridFunction, psi2: GridFunction, chi2: GridFunction) -> Result<Self> {
        let g = *psi1.grid();
        for other in [&chi1, &psi2, &chi2] {
            g.check_same(other.grid())?;
        }
        Ok(Self { psi1, chi1, psi2, chi2 })
    }

    /// `η(ψχ)[ψχ]`.
    pub fn diagonal(psi: GridFunction, chi: GridFunction) -> Result<Self> {
        Self::new(psi.clone(), chi.clone(), psi, chi)
    }

    pub fn grid(&self) -> &Grid {
        self.psi1.grid()
    }

    /// Swaps `(ψ₁χ₁) ↔ (ψ₂χ₂)`.
    pub fn swapped(&self) -> Self {
        Self {
            psi1: self.psi2.clone(),
            chi1: self.chi2.clone(),
            psi2: self.psi1.clone(),
            chi2: self.chi1.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RiggingMethod {
    Reduced,
    Averaged { t: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureInfo {
    pub rule: String,
    pub step: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiggingResult {
    pub value: Complex64,
    pub method: RiggingMethod,
    pub quadrature: QuadratureInfo,
    /// Step-doubling estimate, `|I_h − I_2h| / (2^order − 1)`.
    pub estimated_error: f64,
}

impl RiggingResult {
    /// Value in the normalization of the reduced formula: averaged results
    /// are divided by `2π` (from `∫dt e^{itu} = 2πδ(u)`).
    pub fn normalized(&self) -> Complex64 {
        match self.method {
            RiggingMethod::Reduced => self.value,
            RiggingMethod::Averaged { .. } => self.value / (2.0 * PI),
        }
    }
}

/// `D_T(u) = ∫_{−T}^{T} e^{itu} dt = 2 sin(Tu)/u`, with `D_T(0) = 2T`.
pub fn dirichlet_kernel(t: f64, u: f64) -> f64 {
    let x = t * u;
    if x.abs() < 1e-8 {
        2.0 * t * (1.0 - x * x / 6.0)
    } else {
        2.0 * x.sin() / u
    }
}

/// Weighted nodes of one axis: `(x_k, h·w_k)` for every node in `range`,
/// sampled every `stride` nodes.
fn axis(grid: &Grid, range: std::ops::Range<usize>, stride: usize, rule: &dyn QuadratureRule) -> Vec<(usize, f64, f64)> {
    let idx: Vec<usize> = range.step_by(stride).collect();
    let h = grid.h * stride as f64;
    rule.weights(idx.len())
        .into_iter()
        .zip(idx)
        .map(|(w, k)| (k, grid.node(k), w * h))
        .collect()
}

fn positive_range(grid: &Grid) -> std::ops::Range<usize> {
    match grid.first_nonnegative() {
        Some(k) => k..grid.len(),
        None => 0..0,
    }
}

fn check_measure(states: &RiggingStates, nu: &Measure) -> Result<()> {
    states.grid().check_same(nu.grid())
}

fn reduced_sum(states: &RiggingStates, nu: &Measure, rule: &dyn QuadratureRule, stride: usize) -> Complex64 {
    let grid = states.grid();
    let (p1, c1, p2, c2) = (
        states.psi1.samples(),
        states.chi1.samples(),
        states.psi2.samples(),
        states.chi2.samples(),
    );
    let d = nu.density();
    axis(grid, positive_range(grid), stride, rule)
        .into_iter()
        .map(|(k, _, w)| (p1[k] * c1[k] * (p2[k] * c2[k]).conj()) * (w * d[k]))
        .sum()
}

/// `∫_{ℝ⁺} dp ν(p) ψ₁(p)χ₁(p) conj(ψ₂(p)χ₂(p))`.
pub fn rigging_reduced(states: &RiggingStates, nu: &Measure, rule: &dyn QuadratureRule) -> Result<RiggingResult> {
    check_measure(states, nu)?;
    let value = reduced_sum(states, nu, rule, 1);
    let coarse = reduced_sum(states, nu, rule, 2);
    let grid = states.grid();
    Ok(RiggingResult {
        value,
        method: RiggingMethod::Reduced,
        quadrature: QuadratureInfo {
            rule: rule.name().to_string(),
            step: grid.h,
            nodes: positive_range(grid).len(),
        },
        estimated_error: richardson(value, coarse, rule.order()),
    })
}

fn richardson(fine: Complex64, coarse: Complex64, order: u32) -> f64 {
    (fine - coarse).norm() / (2f64.powi(order as i32) - 1.0)
}

fn averaged_sum(states: &RiggingStates, nu: &Measure, t: f64, rule: &dyn QuadratureRule, stride: usize) -> Complex64 {
    let grid = states.grid();
    let d = nu.density();
    let (p1, p2) = (states.psi1.samples(), states.psi2.samples());
    let (c1, c2) = (states.chi1.samples(), states.chi2.samples());
    let zero = Complex64::new(0.0, 0.0);
    let f_side: Vec<(f64, Complex64)> = axis(grid, 0..grid.len(), stride, rule)
        .into_iter()
        .map(|(k, x, w)| (x, p1[k] * p2[k].conj() * (w * d[k])))
        .filter(|(_, a)| *a != zero)
        .collect();
    let p_side: Vec<(f64, Complex64)> = axis(grid, positive_range(grid), stride, rule)
        .into_iter()
        .map(|(k, x, w)| (x, c1[k] * c2[k].conj() * w))
        .filter(|(_, b)| *b != zero)
        .collect();
    // rows are summed in order so results do not depend on thread scheduling
    let rows: Vec<Complex64> = f_side
        .par_iter()
        .map(|&(f, a)| {
            let inner: Complex64 = p_side
                .iter()
                .map(|&(p, b)| b * dirichlet_kernel(t, f - p))
                .sum();
            a * inner
        })
        .collect();
    rows.into_iter().sum()
}

/// `∫df ∫dp D_T(f − p) ν(f) ψ₁(f)χ₁(p) conj(ψ₂(f)χ₂(p))`, the group average
/// over `t ∈ [−T, T]` with the `t` integral done in closed form.
///
/// The grid must resolve the kernel: `h ≤ π/(4T)`.
pub fn rigging_averaged(states: &RiggingStates, nu: &Measure, t: f64, rule: &dyn QuadratureRule) -> Result<RiggingResult> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::NonPositiveTime(t));
    }
    check_measure(states, nu)?;
    let grid = states.grid();
    let limit = PI / (4.0 * t);
    if grid.h > limit * (1.0 + 1e-12) {
        return Err(Error::UnderSampled { h: grid.h, t, limit });
    }
    let value = averaged_sum(states, nu, t, rule, 1);
    let coarse = averaged_sum(states, nu, t, rule, 2);
    Ok(RiggingResult {
        value,
        method: RiggingMethod::Averaged { t },
        quadrature: QuadratureInfo {
            rule: rule.name().to_string(),
            step: grid.h,
            nodes: grid.len(),
        },
        estimated_error: richardson(value, coarse, rule.order()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub t: f64,
    /// Averaged value divided by `2π`.
    pub value: Complex64,
    pub abs_error: f64,
    /// `abs_error / |reference|`, or `abs_error` when the reference is zero.
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub reference: Complex64,
    pub rows: Vec<ConvergenceRow>,
    /// Mean absolute error over `rows[k..]`.
    pub tail_averaged: Vec<f64>,
    /// `−slope` of a least-squares fit of `ln(abs_error)` against `ln T`.
    pub decay_rate: Option<f64>,
}

impl ConvergenceTable {
    pub fn tail_decreasing(&self) -> bool {
        self.tail_averaged.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn final_rel_error(&self) -> Option<f64> {
        self.rows.last().map(|r| r.rel_error)
    }

    /// Columns `T,value_re,value_im,abs_error,rel_error`; floats in their
    /// shortest round-trip form, exponent notation below `1e-5`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("T,value_re,value_im,abs_error,rel_error\n");
        for r in &self.rows {
            writeln!(out, "{:?},{:?},{:?},{:?},{:?}", r.t, r.value.re, r.value.im, r.abs_error, r.rel_error)
                .expect("writing to a String cannot fail");
        }
        out
    }
}

fn fit_decay(rows: &[ConvergenceRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.abs_error > 0.0)
        .map(|r| (r.t.ln(), r.abs_error.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| -sxy / sxx)
}

/// Averaged/2π at each `T` against `reference` (default: the reduced value).
pub fn convergence_study(
    states: &RiggingStates,
    nu: &Measure,
    t_list: &[f64],
    rule: &dyn QuadratureRule,
    reference: Option<Complex64>,
) -> Result<ConvergenceTable> {
    if t_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("T values must be strictly increasing".into()));
    }
    let reference = match reference {
        Some(r) => r,
        None => rigging_reduced(states, nu, rule)?.value,
    };
    let scale = reference.norm();
    let rows = t_list
        .par_iter()
        .map(|&t| {
            let value = rigging_averaged(states, nu, t, rule)?.normalized();
            let abs_error = (value - reference).norm();
            let rel_error = if scale > 0.0 { abs_error / scale } else { abs_error };
            Ok(ConvergenceRow {
                t,
                value,
                abs_error,
                rel_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let tail_averaged = (0..rows.len())
        .map(|k| {
            let tail = &rows[k..];
            tail.iter().map(|r| r.abs_error).sum::<f64>() / tail.len() as f64
        })
        .collect();
    let decay_rate = fit_decay(&rows);
    Ok(ConvergenceTable {
        reference,
        rows,
        tail_averaged,
        decay_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::line::grid::Profile;
    use crate::line::quadrature::{Simpson, Trapezoid};

    fn grid() -> Grid {
        Grid::new(-2.0, 6.0, 1.0 / 64.0).unwrap()
    }

    fn prof(g: Grid, p: Profile) -> GridFunction {
        GridFunction::from_profile(g, &p, None).unwrap()
    }

    fn bump(g: Grid, lo: f64, hi: f64) -> GridFunction {
        prof(g, Profile::Bump { lo, hi })
    }

    #[test]
    fn kernel_values() {
        assert_eq!(dirichlet_kernel(3.0, 0.0), 6.0);
        assert!((dirichlet_kernel(3.0, 1e-12) - 6.0).abs() < 1e-12);
        assert!((dirichlet_kernel(2.0, 0.5) - 4.0 * 1f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn reduced_diagonal_is_positive() {
        let g = grid();
        let s = RiggingStates::diagonal(bump(g, 1.0, 2.0), bump(g, 1.0, 2.0)).unwrap();
        let r = rigging_reduced(&s, &Measure::uniform(g), &Trapezoid).unwrap();
        assert!(r.value.re > 0.0);
        assert_eq!(r.value.im, 0.0);
        assert!(r.estimated_error >= 0.0);
    }

    #[test]
    fn reduced_disjoint_supports_vanish() {
        let g = grid();
        let s = RiggingStates::new(bump(g, 1.0, 2.0), bump(g, 1.0, 2.0), bump(g, 1.0, 2.0), bump(g, 3.0, 4.0)).unwrap();
        let r = rigging_reduced(&s, &Measure::uniform(g), &Trapezoid).unwrap();
        assert_eq!(r.value, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn reduced_is_conjugate_symmetric() {
        let g = grid();
        let psi1 = GridFunction::sample(g, (0.5, 3.0), |x| Complex64::new(x.cos(), x.sin()) * (x - 0.5) * (3.0 - x));
        let psi2 = bump(g, 1.0, 4.0);
        let chi = prof(g, Profile::Gaussian { center: 2.0, width: 1.0 });
        let s = RiggingStates::new(psi1, chi.clone(), psi2, chi).unwrap();
        let nu = Measure::from_profile(g, &Profile::Ramp { offset: 1.0, slope: 1.0 }).unwrap();
        let a = rigging_reduced(&s, &nu, &Simpson).unwrap().value;
        let b = rigging_reduced(&s.swapped(), &nu, &Simpson).unwrap().value;
        assert!((a - b.conj()).norm() < 1e-14);
        assert!(a.im.abs() > 1e-3);
    }

    #[test]
    fn grid_mismatch_rejected() {
        let g = grid();
        let other = Grid::new(-2.0, 6.0, 1.0 / 32.0).unwrap();
        let err = RiggingStates::new(bump(g, 1.0, 2.0), bump(other, 1.0, 2.0), bump(g, 1.0, 2.0), bump(g, 1.0, 2.0));
        assert!(matches!(err, Err(Error::GridMismatch(_))));
        let s = RiggingStates::diagonal(bump(g, 1.0, 2.0), bump(g, 1.0, 2.0)).unwrap();
        assert!(rigging_reduced(&s, &Measure::uniform(other), &Trapezoid).is_err());
    }

    #[test]
    fn averaging_guards() {
        let g = grid();
        let s = RiggingStates::diagonal(bump(g, 1.0, 2.0), bump(g, 1.0, 2.0)).unwrap();
        let nu = Measure::uniform(g);
        assert_eq!(rigging_averaged(&s, &nu, 0.0, &Trapezoid), Err(Error::NonPositiveTime(0.0)));
        assert!(matches!(rigging_averaged(&s, &nu, 100.0, &Trapezoid), Err(Error::UnderSampled { .. })));
    }

    #[test]
    fn disjoint_far_supports_are_suppressed() {
        let g = grid();
        let psi = bump(g, -2.0, -1.0);
        let chi = bump(g, 3.0, 4.0);
        let s = RiggingStates::diagonal(psi.clone(), chi.clone()).unwrap();
        let nu = Measure::uniform(g);
        // scale of a diagonal reduced value with the same profile shapes
        let scale_states = RiggingStates::diagonal(bump(g, 3.0, 4.0), chi).unwrap();
        let scale = rigging_reduced(&scale_states, &nu, &Trapezoid).unwrap().value.norm();
        let mut prev = f64::INFINITY;
        for t in [2.0, 5.0, 10.0, 20.0, 40.0] {
            let v = rigging_averaged(&s, &nu, t, &Trapezoid).unwrap().normalized().norm();
            assert!(v < 0.1 * scale, "T={t}: {v} vs {scale}");
            prev = prev.min(v);
        }
        assert!(prev < 1e-6 * scale);
    }

    #[test]
    fn small_time_is_linear() {
        let g = grid();
        let s = RiggingStates::diagonal(bump(g, 1.0, 2.0), bump(g, 1.0, 3.0)).unwrap();
        let nu = Measure::uniform(g);
        let w = Trapezoid.weights(g.len());
        let psi2: f64 = s.psi1.samples().iter().zip(&w).map(|(v, w)| v.norm_sqr() * w * g.h).sum();
        let start = g.first_nonnegative().unwrap();
        let pw = Trapezoid.weights(g.len() - start);
        let chi2: f64 = s.chi1.samples()[start..].iter().zip(&pw).map(|(v, w)| v.norm_sqr() * w * g.h).sum();
        for t in [1e-4, 1e-3] {
            let v = rigging_averaged(&s, &nu, t, &Trapezoid).unwrap().value;
            let linear = 2.0 * t * psi2 * chi2;
            assert!((v.re - linear).abs() < 1e-5 * linear, "T={t}");
        }
    }

    #[test]
    fn zero_states_give_zero_table() {
        let g = grid();
        let z = GridFunction::zero(g);
        let s = RiggingStates::diagonal(z.clone(), z).unwrap();
        let table = convergence_study(&s, &Measure::uniform(g), &[5.0, 10.0, 20.0, 40.0], &Trapezoid, None).unwrap();
        for r in &table.rows {
            assert_eq!((r.value.norm(), r.abs_error, r.rel_error), (0.0, 0.0, 0.0));
        }
        assert_eq!(table.decay_rate, None);
    }

    #[test]
    fn study_requires_increasing_times() {
        let g = grid();
        let s = RiggingStates::diagonal(bump(g, 1.0, 2.0), bump(g, 1.0, 2.0)).unwrap();
        assert!(convergence_study(&s, &Measure::uniform(g), &[10.0, 5.0], &Trapezoid, None).is_err());
    }

    #[test]
    fn polynomial_states_converge_to_exact_value() {
        // ψ = χ = (p−1)²(2−p)²; exact ∫₁² (p−1)⁸(2−p)⁸ dp = B(9,9) = 8!·8!/17!
        let g = grid();
        let poly = prof(g, Profile::Polynomial { lo: 1.0, hi: 2.0 });
        let s = RiggingStates::diagonal(poly.clone(), poly).unwrap();
        let fact = |n: u64| (1..=n).product::<u64>() as f64;
        let exact = fact(8) * fact(8) / fact(17);
        let table = convergence_study(
            &s,
            &Measure::uniform(g),
            &[5.0, 10.0, 20.0, 40.0],
            &Simpson,
            Some(Complex64::new(exact, 0.0)),
        )
        .unwrap();
        assert!(table.tail_decreasing(), "{:?}", table.tail_averaged);
        assert!(table.rows[3].abs_error < table.rows[0].abs_error);
        assert!(table.final_rel_error().unwrap() < 1e-3);
    }

    #[test]
    fn csv_columns() {
        let table = ConvergenceTable {
            reference: Complex64::new(1.0, 0.0),
            rows: vec![ConvergenceRow {
                t: 5.0,
                value: Complex64::new(0.5, -0.25),
                abs_error: 0.5,
                rel_error: 0.5,
            }],
            tail_averaged: vec![0.5],
            decay_rate: None,
        };
        assert_eq!(table.to_csv(), "T,value_re,value_im,abs_error,rel_error\n5.0,0.5,-0.25,0.5,0.5\n");
    }
}
