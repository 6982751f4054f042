//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

/// Spherical Bessel `j_l(x)` by upward recurrence from `j_0, j_1` (stable for `x > l`).
pub fn spherical_j(l: u32, x: f64) -> f64 {
    let j0 = x.sin() / x;
    if l == 0 {
        return j0;
    }
    let mut prev = j0;
    let mut cur = x.sin() / (x * x) - x.cos() / x;
    for k in 1..l {
        let next = (2 * k + 1) as f64 / x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// First `count` positive zeros of `j_l` by a scan in steps of 0.05 plus bisection.
pub fn bessel_zeros(l: u32, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut a = l as f64 + 0.5;
    let step = 0.05;
    while out.len() < count {
        let b = a + step;
        let (fa, fb) = (spherical_j(l, a), spherical_j(l, b));
        if fa == 0.0 {
            out.push(a);
        } else if fa * fb < 0.0 {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = spherical_j(l, mid);
                if fm * flo <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
                if hi - lo < 1e-15 * hi {
                    break;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        a = b;
    }
    out
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Truncated Taylor series `sum c_k t^k` about a fixed point.
#[derive(Debug, Clone, PartialEq)]
pub struct Taylor(pub Vec<f64>);

pub const ORDER: usize = 5;

impl Taylor {
    pub fn constant(c: f64) -> Self {
        let mut v = vec![0.0; ORDER];
        v[0] = c;
        Taylor(v)
    }

    /// The identity `r0 + t`.
    pub fn variable(r0: f64) -> Self {
        let mut v = vec![0.0; ORDER];
        v[0] = r0;
        v[1] = 1.0;
        Taylor(v)
    }

    pub fn value(&self) -> f64 {
        self.0[0]
    }

    /// d/dt; the top coefficient is lost and padded with zero.
    pub fn deriv(&self) -> Self {
        let mut v = vec![0.0; ORDER];
        for k in 1..ORDER {
            v[k - 1] = k as f64 * self.0[k];
        }
        Taylor(v)
    }

    pub fn add(&self, o: &Self) -> Self {
        Taylor(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, o: &Self) -> Self {
        Taylor(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, c: f64) -> Self {
        Taylor(self.0.iter().map(|a| a * c).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut v = vec![0.0; ORDER];
        for i in 0..ORDER {
            for j in 0..ORDER - i {
                v[i + j] += self.0[i] * o.0[j];
            }
        }
        Taylor(v)
    }

    pub fn recip(&self) -> Self {
        let mut v = vec![0.0; ORDER];
        v[0] = 1.0 / self.0[0];
        for k in 1..ORDER {
            let s: f64 = (1..=k).map(|j| self.0[j] * v[k - j]).sum();
            v[k] = -s / self.0[0];
        }
        Taylor(v)
    }

    pub fn div(&self, o: &Self) -> Self {
        self.mul(&o.recip())
    }

    pub fn exp(&self) -> Self {
        // f' = u' f, solved coefficient by coefficient.
        let mut v = vec![0.0; ORDER];
        v[0] = self.0[0].exp();
        for k in 1..ORDER {
            let s: f64 = (1..=k).map(|j| j as f64 * self.0[j] * v[k - j]).sum();
            v[k] = s / k as f64;
        }
        Taylor(v)
    }

    pub fn poly(coeffs: &[f64], x: &Self) -> Self {
        coeffs
            .iter()
            .rev()
            .fold(Taylor::constant(0.0), |acc, &c| acc.mul(x).add(&Taylor::constant(c)))
    }
}

/// Residual `rho` built from Taylor arithmetic on the raw formulas for `q`
/// and `b1`, with every derivative taken by series differentiation.
pub fn rho_oracle(alpha0: impl Fn(&Taylor) -> Taylor, alpha1: impl Fn(&Taylor) -> Taylor, l1: u32, r: f64) -> f64 {
    let x = Taylor::variable(r);
    let a0 = alpha0(&x);
    let a1 = alpha1(&x);
    let q = a0.deriv().div(&a0).sub(&a1.deriv().div(&a1)).scale(0.5);
    let num = q.mul(&q).scale(4.0).add(&a0.mul(&a0)).add(&a1.mul(&a1));
    let b1 = num.div(&q.scale(8.0)).scale(-1.0);
    let (qv, qp) = (q.value(), q.deriv().value());
    let lograt1 = a1.deriv().value() / a1.value();
    let bracket = -2.0 * l1 as f64 / (r * r) + 2.0 * qv * (b1.value() - lograt1) + 0.5 * a0.value().powi(2) + qp - qv * qv;
    2.0 * b1.deriv().value() - bracket
}
