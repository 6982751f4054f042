//! Natural cubic interpolating spline with first and second derivatives.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    /// Natural spline (`S'' = 0` at both ends) through `(x, y)`.
    pub fn natural(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Shape {
                expected: x.len(),
                got: y.len(),
            });
        }
        if x.len() < 3 {
            return Err(Error::Config("spline needs at least 3 knots".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("spline knots must be strictly increasing".into()));
        }
        let n = x.len();
        // Tridiagonal system for interior second derivatives (Thomas; diagonally dominant).
        let k = n - 2;
        let mut diag = vec![0.0; k];
        let mut upper = vec![0.0; k];
        let mut lower = vec![0.0; k];
        let mut rhs = vec![0.0; k];
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            diag[i - 1] = 2.0 * (h0 + h1);
            lower[i - 1] = h0;
            upper[i - 1] = h1;
            rhs[i - 1] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
        }
        for i in 1..k {
            let w = lower[i] / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut m = vec![0.0; n];
        for i in (0..k).rev() {
            let next = if i + 1 < k { m[i + 2] } else { 0.0 };
            m[i + 1] = (rhs[i] - upper[i] * next) / diag[i];
        }
        Ok(Self { x, y, m })
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        }
    }

    /// Returns `(S(t), S'(t), S''(t))`; outside the knot range the end cubic is extended.
    pub fn eval_all(&self, t: f64) -> (f64, f64, f64) {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        let v = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d1 = (y1 - y0) / h - (3.0 * a * a - 1.0) * h * m0 / 6.0 + (3.0 * b * b - 1.0) * h * m1 / 6.0;
        let d2 = a * m0 + b * m1;
        (v, d1, d2)
    }

    pub fn value(&self, t: f64) -> f64 {
        self.eval_all(t).0
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            x: self.x.clone(),
            y: self.y.iter().map(|v| c * v).collect(),
            m: self.m.iter().map(|v| c * v).collect(),
        }
    }
}
