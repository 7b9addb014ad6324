//! Composite quadrature rules on uniform grids, registered by name.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A composite rule on `n` equally spaced nodes with unit spacing.
pub trait QuadratureRule: Send + Sync {
    fn name(&self) -> &'static str;

    /// Convergence order in the step, used by step-doubling error estimates.
    fn order(&self) -> u32;

    /// Weights for `n` nodes at unit spacing; multiply by `h`.
    fn weights(&self, n: usize) -> Vec<f64>;
}

pub struct Trapezoid;

impl QuadratureRule for Trapezoid {
    fn name(&self) -> &'static str {
        "trapezoid"
    }

    fn order(&self) -> u32 {
        2
    }

    fn weights(&self, n: usize) -> Vec<f64> {
        match n {
            0 => Vec::new(),
            1 => vec![0.0],
            _ => {
                let mut w = vec![1.0; n];
                w[0] = 0.5;
                w[n - 1] = 0.5;
                w
            }
        }
    }
}

/// Composite Simpson; an odd interval count closes with a 3/8 panel.
pub struct Simpson;

impl QuadratureRule for Simpson {
    fn name(&self) -> &'static str {
        "simpson"
    }

    fn order(&self) -> u32 {
        4
    }

    fn weights(&self, n: usize) -> Vec<f64> {
        if n < 3 {
            return Trapezoid.weights(n);
        }
        let intervals = n - 1;
        let mut w = vec![0.0; n];
        let simpson_intervals = if intervals.is_multiple_of(2) { intervals } else { intervals - 3 };
        for panel in (0..simpson_intervals).step_by(2) {
            w[panel] += 1.0 / 3.0;
            w[panel + 1] += 4.0 / 3.0;
            w[panel + 2] += 1.0 / 3.0;
        }
        if simpson_intervals < intervals {
            let s = simpson_intervals;
            w[s] += 3.0 / 8.0;
            w[s + 1] += 9.0 / 8.0;
            w[s + 2] += 9.0 / 8.0;
            w[s + 3] += 3.0 / 8.0;
        }
        w
    }
}

/// Name → rule table.
pub struct QuadratureRegistry {
    rules: BTreeMap<&'static str, Arc<dyn QuadratureRule>>,
}

impl QuadratureRegistry {
    pub fn empty() -> Self {
        Self { rules: BTreeMap::new() }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(Trapezoid));
        r.register(Arc::new(Simpson));
        r
    }

    /// Replaces any rule already registered under the same name.
    pub fn register(&mut self, rule: Arc<dyn QuadratureRule>) {
        self.rules.insert(rule.name(), rule);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn QuadratureRule>> {
        self.rules.get(name).cloned().ok_or_else(|| Error::Unknown {
            kind: "quadrature rule",
            name: name.to_string(),
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.rules.keys().copied().collect()
    }
}

impl Default for QuadratureRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate(rule: &dyn QuadratureRule, f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / (n - 1) as f64;
        rule.weights(n)
            .iter()
            .enumerate()
            .map(|(k, w)| w * f(a + k as f64 * h))
            .sum::<f64>()
            * h
    }

    #[test]
    fn weights_sum_to_length() {
        for rule in [&Trapezoid as &dyn QuadratureRule, &Simpson] {
            for n in 2..12 {
                let s: f64 = rule.weights(n).iter().sum();
                assert!((s - (n - 1) as f64).abs() < 1e-12, "{} n={n}", rule.name());
            }
        }
    }

    #[test]
    fn exactness_degrees() {
        // trapezoid integrates lines exactly, simpson cubics (both parities)
        assert!((integrate(&Trapezoid, |x| 3.0 * x + 1.0, 0.0, 2.0, 7) - 8.0).abs() < 1e-12);
        for n in [7, 8, 11] {
            let v = integrate(&Simpson, |x| x * x * x - x, 0.0, 2.0, n);
            assert!((v - 2.0).abs() < 1e-12, "n={n}: {v}");
        }
    }

    #[test]
    fn registry_lookup() {
        let r = QuadratureRegistry::with_builtins();
        assert_eq!(r.names(), vec!["simpson", "trapezoid"]);
        assert_eq!(r.get("trapezoid").unwrap().order(), 2);
        assert!(matches!(r.get("gauss"), Err(Error::Unknown { .. })));
    }
}
