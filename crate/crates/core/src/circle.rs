//! Functions on the unit circle sampled at uniform nodes.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::Vector3;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{LabError, Result};

/// Values of a 3-vector function at `θ_j = 2πj/n`, `n` even and ≥ 8.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleFunction {
    samples: Vec<[f64; 3]>,
}

impl CircleFunction {
    pub fn new(samples: Vec<[f64; 3]>) -> Result<Self> {
        let n = samples.len();
        if n < 8 || !n.is_multiple_of(2) {
            return Err(LabError::Invalid(format!("circle needs an even count >= 8, got {n}")));
        }
        Ok(CircleFunction { samples })
    }

    pub fn from_fn(n_theta: usize, f: impl Fn(f64) -> Vector3<f64>) -> Result<Self> {
        let h = 2.0 * PI / n_theta as f64;
        Self::new((0..n_theta).map(|j| f(j as f64 * h).into()).collect())
    }

    pub fn n_theta(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[[f64; 3]] {
        &self.samples
    }

    pub fn at(&self, j: isize) -> Vector3<f64> {
        let n = self.samples.len() as isize;
        Vector3::from(self.samples[j.rem_euclid(n) as usize])
    }

    pub fn theta(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.samples.len() as f64
    }

    /// `∫|f|² dθ` by the rectangle rule.
    pub fn l2_norm_squared(&self) -> f64 {
        let h = 2.0 * PI / self.samples.len() as f64;
        crate::par::pairwise_sum_by(self.samples.len(), |j| {
            let v = self.samples[j];
            v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
        }) * h
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples
            .iter()
            .map(|v| Vector3::from(*v).norm())
            .fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(Vector3<f64>) -> Vector3<f64>) -> CircleFunction {
        CircleFunction {
            samples: self.samples.iter().map(|v| f(Vector3::from(*v)).into()).collect(),
        }
    }

    /// Spectral `order`-th angular derivative.
    pub fn derivative(&self, order: u32) -> CircleFunction {
        let n = self.samples.len();
        let mut out = vec![[0.0; 3]; n];
        let fourier = Fourier::new(n);
        for c in 0..3 {
            let col: Vec<f64> = self.samples.iter().map(|v| v[c]).collect();
            let d = fourier.derivative(&col, order);
            for j in 0..n {
                out[j][c] = d[j];
            }
        }
        CircleFunction { samples: out }
    }
}

/// Forward/inverse real-signal transforms of one length.
pub struct Fourier {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fourier {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fourier { n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward(&self, x: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    /// Inverse transform, normalized, real part.
    pub fn inverse_real(&self, mut buf: Vec<Complex64>) -> Vec<f64> {
        self.inverse.process(&mut buf);
        let s = 1.0 / self.n as f64;
        buf.iter().map(|c| c.re * s).collect()
    }

    /// Signed wavenumber of bin `k`; the Nyquist bin maps to `n/2`.
    pub fn wavenumber(&self, k: usize) -> f64 {
        if k <= self.n / 2 {
            k as f64
        } else {
            k as f64 - self.n as f64
        }
    }

    pub fn derivative(&self, x: &[f64], order: u32) -> Vec<f64> {
        let mut spec = self.forward(x);
        let nyq = self.n / 2;
        for (k, c) in spec.iter_mut().enumerate() {
            let w = self.wavenumber(k);
            // Odd derivatives of the Nyquist mode are not representable.
            if k == nyq && order % 2 == 1 {
                *c = Complex64::new(0.0, 0.0);
                continue;
            }
            *c *= Complex64::new(0.0, w).powu(order);
        }
        self.inverse_real(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_odd() {
        assert!(CircleFunction::new(vec![[0.0; 3]; 6]).is_err());
        assert!(CircleFunction::new(vec![[0.0; 3]; 9]).is_err());
    }

    #[test]
    fn norms_and_derivatives() {
        let f = CircleFunction::from_fn(64, |t| Vector3::new(t.cos(), t.sin(), (2.0 * t).sin())).unwrap();
        assert!((f.l2_norm_squared() - 3.0 * PI).abs() < 1e-12);
        let d = f.derivative(1);
        let d2 = f.derivative(2);
        for j in 0..64 {
            let t = f.theta(j);
            let e = Vector3::new(-t.sin(), t.cos(), 2.0 * (2.0 * t).cos());
            assert!((d.at(j as isize) - e).norm() < 1e-12);
            let e2 = Vector3::new(-t.cos(), -t.sin(), -4.0 * (2.0 * t).sin());
            assert!((d2.at(j as isize) - e2).norm() < 1e-11);
        }
        assert_eq!(f.at(-1), f.at(63));
    }
}
