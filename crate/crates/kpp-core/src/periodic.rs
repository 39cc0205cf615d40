//! 1-periodic scalar coefficients stored as a finite Fourier series together
//! with samples on a uniform grid over [0, 1).
//!
//! The series is the source of truth: samples are the series evaluated at the
//! grid nodes, and derived fields built from grid data are converted back to a
//! series by a discrete Fourier transform so they can be evaluated at
//! arbitrary phases (the co-moving solvers need coefficients between nodes).

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// A 1-periodic function of one variable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodicFunction {
    pub mean: f64,
    pub cosine_coeffs: Vec<f64>,
    pub sine_coeffs: Vec<f64>,
    pub samples: Vec<f64>,
    pub n: usize,
}

impl PeriodicFunction {
    /// Build from Fourier coefficients; samples are filled by evaluation on
    /// an `n`-point grid.
    pub fn from_series(mean: f64, cosine: &[f64], sine: &[f64], n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: format!("grid size {n} too small"),
            });
        }
        let k = cosine.len().max(sine.len());
        let mut cos_c = cosine.to_vec();
        let mut sin_c = sine.to_vec();
        cos_c.resize(k, 0.0);
        sin_c.resize(k, 0.0);
        let mut f = PeriodicFunction {
            mean,
            cosine_coeffs: cos_c,
            sine_coeffs: sin_c,
            samples: Vec::new(),
            n,
        };
        f.samples = (0..n).map(|i| f.eval(i as f64 / n as f64)).collect();
        Ok(f)
    }

    /// Constant function.
    pub fn constant(value: f64, n: usize) -> Self {
        Self::from_series(value, &[], &[], n).expect("n checked by callers")
    }

    /// Build from grid samples; the series is recovered by a real DFT so that
    /// evaluating it at node `i/n` reproduces `samples[i]` to roundoff.
    pub fn from_samples(samples: Vec<f64>) -> Result<Self> {
        let n = samples.len();
        if n < 4 {
            return Err(Error::InvalidParameter {
                name: "samples",
                reason: format!("need at least 4 samples, got {n}"),
            });
        }
        let nf = n as f64;
        let mean = samples.iter().sum::<f64>() / nf;
        // Highest representable mode; for even n the Nyquist cosine gets a
        // half weight folded into the (2/n) normal modes below.
        let kmax = n / 2;
        let mut cos_c = vec![0.0; kmax];
        let mut sin_c = vec![0.0; kmax];
        for k in 1..=kmax {
            let mut ac = 0.0;
            let mut as_ = 0.0;
            for (j, &v) in samples.iter().enumerate() {
                let th = 2.0 * PI * (k * j % n) as f64 / nf;
                ac += v * th.cos();
                as_ += v * th.sin();
            }
            let w = if 2 * k == n { 1.0 / nf } else { 2.0 / nf };
            cos_c[k - 1] = w * ac;
            sin_c[k - 1] = w * as_;
        }
        Ok(PeriodicFunction {
            mean,
            cosine_coeffs: cos_c,
            sine_coeffs: sin_c,
            samples,
            n,
        })
    }

    /// Evaluate the series at an arbitrary point (period 1).
    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = self.mean;
        for (k, (&a, &b)) in self
            .cosine_coeffs
            .iter()
            .zip(self.sine_coeffs.iter())
            .enumerate()
        {
            if a == 0.0 && b == 0.0 {
                continue;
            }
            let th = 2.0 * PI * (k + 1) as f64 * x;
            acc += a * th.cos() + b * th.sin();
        }
        acc
    }

    /// Derivative of the series at an arbitrary point.
    pub fn eval_deriv(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (k, (&a, &b)) in self
            .cosine_coeffs
            .iter()
            .zip(self.sine_coeffs.iter())
            .enumerate()
        {
            if a == 0.0 && b == 0.0 {
                continue;
            }
            let om = 2.0 * PI * (k + 1) as f64;
            let th = om * x;
            acc += om * (-a * th.sin() + b * th.cos());
        }
        acc
    }

    /// Resample onto an `n`-point grid (same series, new sample set).
    pub fn resample(&self, n: usize) -> Result<Self> {
        Self::from_series(self.mean, &self.cosine_coeffs, &self.sine_coeffs, n)
    }

    /// Grid spacing 1/n.
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Mean of the samples; on the uniform periodic grid this is the
    /// trapezoid rule for the integral over one period.
    pub fn grid_mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.n as f64
    }

    /// Minimum of the series over a refinement of the grid (16x by default
    /// callers); used to validate positivity of coefficient roles.
    pub fn refined_min(&self, refine: usize) -> f64 {
        let m = self.n * refine;
        (0..m)
            .map(|i| self.eval(i as f64 / m as f64))
            .fold(f64::INFINITY, f64::min)
    }

    /// Validate strict positivity on a 16x refinement.
    pub fn require_positive(&self, role: &str) -> Result<()> {
        let min = self.refined_min(16);
        if min <= 0.0 {
            return Err(Error::CoefficientDomain(format!(
                "{role} must be strictly positive; refined minimum {min:.6e}"
            )));
        }
        Ok(())
    }

    /// Drop series modes with negligible coefficients; keeps evaluation of
    /// derived fields (which carry n/2 DFT modes) cheap inside steppers.
    pub fn truncated(&self, rel_tol: f64) -> Self {
        let scale = self
            .cosine_coeffs
            .iter()
            .chain(self.sine_coeffs.iter())
            .fold(self.mean.abs(), |m, c| m.max(c.abs()));
        let tol = rel_tol * scale.max(1e-300);
        let mut kmax = 0;
        for k in 0..self.cosine_coeffs.len() {
            if self.cosine_coeffs[k].abs() > tol || self.sine_coeffs[k].abs() > tol {
                kmax = k + 1;
            }
        }
        let mut out = self.clone();
        out.cosine_coeffs.truncate(kmax);
        out.sine_coeffs.truncate(kmax);
        out
    }
}

/// Evaluates a periodic series on a fixed node set shifted by a running
/// phase: values `f(y_j + theta)` for all `j` at cost O(modes) per node,
/// using the angle-addition rule on precomputed node tables.
pub struct ShiftedSampler {
    mean: f64,
    // per mode: (a, b, omega_k)
    modes: Vec<(f64, f64, f64)>,
    // per mode, per node: cos/sin of omega_k * y_j
    node_cos: Vec<Vec<f64>>,
    node_sin: Vec<Vec<f64>>,
    pub n_nodes: usize,
}

impl ShiftedSampler {
    pub fn new(f: &PeriodicFunction, nodes: &[f64]) -> Self {
        let ft = f.truncated(1e-14);
        let mut modes = Vec::new();
        for (k, (&a, &b)) in ft
            .cosine_coeffs
            .iter()
            .zip(ft.sine_coeffs.iter())
            .enumerate()
        {
            if a != 0.0 || b != 0.0 {
                modes.push((a, b, 2.0 * PI * (k + 1) as f64));
            }
        }
        let node_cos = modes
            .iter()
            .map(|&(_, _, om)| nodes.iter().map(|&y| (om * y).cos()).collect())
            .collect();
        let node_sin = modes
            .iter()
            .map(|&(_, _, om)| nodes.iter().map(|&y| (om * y).sin()).collect())
            .collect();
        ShiftedSampler {
            mean: ft.mean,
            modes,
            node_cos,
            node_sin,
            n_nodes: nodes.len(),
        }
    }

    /// Fill `out[j] = f(y_j + theta)`.
    pub fn sample_into(&self, theta: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.n_nodes);
        out.fill(self.mean);
        for (m, &(a, b, om)) in self.modes.iter().enumerate() {
            let (st, ct) = (om * theta).sin_cos();
            let nc = &self.node_cos[m];
            let ns = &self.node_sin[m];
            for j in 0..out.len() {
                // cos(om(y+theta)) = c*ct - s*st ; sin = s*ct + c*st
                out[j] += a * (nc[j] * ct - ns[j] * st) + b * (ns[j] * ct + nc[j] * st);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_fn() -> PeriodicFunction {
        PeriodicFunction::from_series(1.0, &[0.5, -0.2], &[0.1], 64).unwrap()
    }

    #[test]
    fn samples_match_series_at_nodes() {
        let f = test_fn();
        for (i, &s) in f.samples.iter().enumerate() {
            let v = f.eval(i as f64 / f.n as f64);
            assert!((s - v).abs() < 1e-14);
        }
    }

    #[test]
    fn dft_round_trip_reproduces_samples() {
        let f = test_fn();
        let g = PeriodicFunction::from_samples(f.samples.clone()).unwrap();
        for (i, &s) in g.samples.iter().enumerate() {
            let v = g.eval(i as f64 / g.n as f64);
            assert!((s - v).abs() < 1e-12, "node {i}: {s} vs {v}");
        }
        // and off-grid points agree with the original band-limited series
        for i in 0..37 {
            let x = i as f64 / 37.0;
            assert!((f.eval(x) - g.eval(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn positivity_validation() {
        let f = PeriodicFunction::from_series(1.0, &[1.5], &[], 64).unwrap();
        assert!(f.require_positive("g").is_err());
        let g = PeriodicFunction::from_series(1.0, &[0.5], &[], 64).unwrap();
        assert!(g.require_positive("g").is_ok());
    }

    #[test]
    fn shifted_sampler_matches_direct_eval() {
        let f = test_fn();
        let nodes: Vec<f64> = (0..33).map(|j| 0.013 * j as f64).collect();
        let s = ShiftedSampler::new(&f, &nodes);
        let mut out = vec![0.0; nodes.len()];
        for &theta in &[0.0, 0.37, 12.9, -4.1] {
            s.sample_into(theta, &mut out);
            for (j, &y) in nodes.iter().enumerate() {
                assert!((out[j] - f.eval(y + theta)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let f = test_fn();
        let d = 1e-6;
        for i in 0..11 {
            let x = i as f64 / 11.0;
            let fd = (f.eval(x + d) - f.eval(x - d)) / (2.0 * d);
            assert!((f.eval_deriv(x) - fd).abs() < 1e-7);
        }
    }
}
