//! Helical turbulence profiles `alpha(r)` with analytic derivatives.
//!
//! Literal syntax (shared with the CLI):
//!
//! | literal            | profile                                  |
//! |--------------------|------------------------------------------|
//! | `const:<c>`        | `c`                                      |
//! | `poly:<c0>,<c1>,…` | `c0 + c1 r + c2 r^2 + …`                 |
//! | `exp:<c>,<a>`      | `c e^{a r}`                              |
//! | `spline:<path>`    | natural cubic spline through a two-column `r, alpha` file covering `[0, 1]` |

use std::path::Path;

use crate::error::{Error, Result};
use crate::spline::CubicSpline;

/// Number of equispaced samples used by [`AlphaProfile::check_positive`].
pub const POSITIVITY_SAMPLES: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub enum AlphaProfile {
    Constant(f64),
    /// Coefficients of increasing powers of `r`.
    Polynomial(Vec<f64>),
    /// `scale * exp(rate * r)`.
    Exponential { scale: f64, rate: f64 },
    SampledSpline(CubicSpline),
}

impl AlphaProfile {
    pub fn constant(c: f64) -> Self {
        AlphaProfile::Constant(c)
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        AlphaProfile::Polynomial(coeffs)
    }

    pub fn exponential(scale: f64, rate: f64) -> Self {
        AlphaProfile::Exponential { scale, rate }
    }

    /// Parses a profile literal; `spline:` literals read the referenced file.
    pub fn parse(literal: &str) -> Result<Self> {
        let (tag, rest) = literal
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("profile literal `{literal}` lacks a family tag")))?;
        let numbers = |s: &str| -> Result<Vec<f64>> {
            s.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad number `{t}` in `{literal}`")))
                })
                .collect()
        };
        let profile = match tag {
            "const" => match numbers(rest)?.as_slice() {
                [c] => AlphaProfile::Constant(*c),
                _ => return Err(Error::Parse(format!("`{literal}`: const takes one value"))),
            },
            "poly" => {
                let c = numbers(rest)?;
                if c.is_empty() {
                    return Err(Error::Parse(format!("`{literal}`: empty polynomial")));
                }
                AlphaProfile::Polynomial(c)
            }
            "exp" => match numbers(rest)?.as_slice() {
                [c, a] => AlphaProfile::Exponential { scale: *c, rate: *a },
                _ => return Err(Error::Parse(format!("`{literal}`: exp takes c,a"))),
            },
            "spline" => Self::from_table_file(Path::new(rest))?,
            other => return Err(Error::Parse(format!("unknown profile family `{other}`"))),
        };
        if !profile.is_finite() {
            return Err(Error::Parse(format!("`{literal}` has non-finite parameters")));
        }
        Ok(profile)
    }

    /// Reads a two-column `r, alpha` table (comma or whitespace separated,
    /// `#` comments allowed) and fits a natural cubic spline.
    pub fn from_table_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut r = Vec::new();
        let mut a = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            let parsed: std::result::Result<Vec<f64>, _> = cols.iter().map(|c| c.parse::<f64>()).collect();
            match parsed.as_deref() {
                Ok([x, y]) => {
                    r.push(*x);
                    a.push(*y);
                }
                _ => {
                    return Err(Error::Parse(format!(
                        "{}:{}: expected two numeric columns",
                        path.display(),
                        lineno + 1
                    )))
                }
            }
        }
        Self::from_samples(r, a)
    }

    pub fn from_samples(r: Vec<f64>, alpha: Vec<f64>) -> Result<Self> {
        if r.first().is_none_or(|&v| v > 0.0) || r.last().is_none_or(|&v| v < 1.0) {
            return Err(Error::Config("spline table must cover [0, 1]".into()));
        }
        Ok(AlphaProfile::SampledSpline(CubicSpline::natural(r, alpha)?))
    }

    fn is_finite(&self) -> bool {
        match self {
            AlphaProfile::Constant(c) => c.is_finite(),
            AlphaProfile::Polynomial(c) => c.iter().all(|v| v.is_finite()),
            AlphaProfile::Exponential { scale, rate } => scale.is_finite() && rate.is_finite(),
            AlphaProfile::SampledSpline(s) => s.values().iter().all(|v| v.is_finite()),
        }
    }

    /// `(alpha, alpha', alpha'')` at `r`.
    pub fn eval_all(&self, r: f64) -> (f64, f64, f64) {
        match self {
            AlphaProfile::Constant(c) => (*c, 0.0, 0.0),
            AlphaProfile::Polynomial(c) => {
                // Horner for value and both derivatives.
                let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
                for &ck in c.iter().rev() {
                    d2 = d2 * r + 2.0 * d1;
                    d1 = d1 * r + v;
                    v = v * r + ck;
                }
                (v, d1, d2)
            }
            AlphaProfile::Exponential { scale, rate } => {
                let v = scale * (rate * r).exp();
                (v, rate * v, rate * rate * v)
            }
            AlphaProfile::SampledSpline(s) => s.eval_all(r),
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        match self {
            AlphaProfile::Constant(c) => *c,
            _ => self.eval_all(r).0,
        }
    }

    pub fn d1(&self, r: f64) -> f64 {
        self.eval_all(r).1
    }

    pub fn d2(&self, r: f64) -> f64 {
        self.eval_all(r).2
    }

    /// The profile `c * alpha(r)`.
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            AlphaProfile::Constant(v) => AlphaProfile::Constant(c * v),
            AlphaProfile::Polynomial(p) => AlphaProfile::Polynomial(p.iter().map(|v| c * v).collect()),
            AlphaProfile::Exponential { scale, rate } => AlphaProfile::Exponential {
                scale: c * scale,
                rate: *rate,
            },
            AlphaProfile::SampledSpline(s) => AlphaProfile::SampledSpline(s.scaled(c)),
        }
    }

    /// Taylor coefficients `t_0..=t_order` of the profile about `r = 0`.
    /// Splines only supply the first three (higher ones are zero).
    pub fn taylor_at_zero(&self, order: usize) -> Vec<f64> {
        let mut t = vec![0.0; order + 1];
        match self {
            AlphaProfile::Constant(c) => t[0] = *c,
            AlphaProfile::Polynomial(p) => {
                for (k, v) in p.iter().enumerate().take(order + 1) {
                    t[k] = *v;
                }
            }
            AlphaProfile::Exponential { scale, rate } => {
                let mut term = *scale;
                for (k, slot) in t.iter_mut().enumerate() {
                    *slot = term;
                    term *= rate / (k as f64 + 1.0);
                }
            }
            AlphaProfile::SampledSpline(s) => {
                let (v, d1, d2) = s.eval_all(0.0);
                for (k, val) in [v, d1, 0.5 * d2].into_iter().enumerate().take(order + 1) {
                    t[k] = val;
                }
            }
        }
        t
    }

    /// Minimum over [`POSITIVITY_SAMPLES`] equispaced points on `[0, 1]`.
    pub fn min_on_unit_interval(&self) -> f64 {
        (0..POSITIVITY_SAMPLES)
            .map(|i| self.value(i as f64 / (POSITIVITY_SAMPLES - 1) as f64))
            .fold(f64::INFINITY, f64::min)
    }

    /// Fails unless `alpha > 0` at every positivity sample.
    pub fn check_positive(&self) -> Result<()> {
        let min = self.min_on_unit_interval();
        if min > 0.0 {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "profile must be strictly positive on [0, 1] (min sample {min})"
            )))
        }
    }

    /// Largest relative disagreement between the analytic first/second
    /// derivatives and central differences at the given points.
    pub fn derivative_consistency(&self, points: &[f64]) -> f64 {
        let step = 1e-4;
        points
            .iter()
            .map(|&r| {
                let (_, d1, d2) = self.eval_all(r);
                let (p, m) = (self.value(r + step), self.value(r - step));
                let fd1 = (p - m) / (2.0 * step);
                let (_, p1, _) = self.eval_all(r + step);
                let (_, m1, _) = self.eval_all(r - step);
                let fd2 = (p1 - m1) / (2.0 * step);
                let scale1 = d1.abs().max(self.value(r).abs()).max(1e-300);
                let scale2 = d2.abs().max(d1.abs()).max(self.value(r).abs()).max(1e-300);
                ((fd1 - d1).abs() / scale1).max((fd2 - d2).abs() / scale2)
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_literals() {
        assert_eq!(AlphaProfile::parse("const:1.5").unwrap(), AlphaProfile::Constant(1.5));
        assert_eq!(
            AlphaProfile::parse("poly:1,0,0.5").unwrap(),
            AlphaProfile::Polynomial(vec![1.0, 0.0, 0.5])
        );
        assert_eq!(
            AlphaProfile::parse("exp:2,-1").unwrap(),
            AlphaProfile::Exponential { scale: 2.0, rate: -1.0 }
        );
        assert!(AlphaProfile::parse("const").is_err());
        assert!(AlphaProfile::parse("const:1,2").is_err());
        assert!(AlphaProfile::parse("cubic:1").is_err());
        assert!(AlphaProfile::parse("poly:1,x").is_err());
        assert!(AlphaProfile::parse("const:nan").is_err());
    }

    #[test]
    fn spline_file_roundtrip() {
        let dir = std::env::temp_dir().join(format!("alpha_spline_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("alpha.txt");
        let mut body = String::from("# r alpha\n");
        for i in 0..=50 {
            let r = i as f64 / 50.0;
            body.push_str(&format!("{r}, {}\n", 1.0 + r * r));
        }
        std::fs::write(&path, body).unwrap();
        let p = AlphaProfile::parse(&format!("spline:{}", path.display())).unwrap();
        assert!((p.value(0.5) - 1.25).abs() < 1e-4);
        assert!((p.d1(0.5) - 1.0).abs() < 1e-3);

        std::fs::write(&path, "0.1 1\n0.5 1\n1.0 1\n").unwrap();
        assert!(matches!(
            AlphaProfile::parse(&format!("spline:{}", path.display())),
            Err(Error::Config(_))
        ));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn polynomial_derivatives() {
        let p = AlphaProfile::polynomial(vec![1.0, 2.0, 3.0, 4.0]);
        let (v, d1, d2) = p.eval_all(0.5);
        assert!((v - (1.0 + 1.0 + 0.75 + 0.5)).abs() < 1e-15);
        assert!((d1 - (2.0 + 3.0 + 3.0)).abs() < 1e-14);
        assert!((d2 - (6.0 + 12.0)).abs() < 1e-14);
    }

    #[test]
    fn taylor_coefficients() {
        let e = AlphaProfile::exponential(2.0, 3.0);
        let t = e.taylor_at_zero(3);
        assert!((t[3] - 2.0 * 27.0 / 6.0).abs() < 1e-14);
        assert_eq!(AlphaProfile::polynomial(vec![1.0, 2.0]).taylor_at_zero(3), vec![1.0, 2.0, 0.0, 0.0]);
    }

    #[test]
    fn positivity() {
        assert!(AlphaProfile::polynomial(vec![1.0, 0.0, 1.0]).check_positive().is_ok());
        assert!(AlphaProfile::polynomial(vec![1.0, -2.0]).check_positive().is_err());
        assert!(AlphaProfile::constant(0.0).check_positive().is_err());
    }

    #[test]
    fn scaling() {
        let p = AlphaProfile::exponential(1.5, 0.7);
        assert!((p.scaled(3.0).value(0.4) - 3.0 * p.value(0.4)).abs() < 1e-14);
    }
}
