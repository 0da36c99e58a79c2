//! Monotone (Fritsch-Carlson) cubic Hermite interpolation.
//!
//! Node slopes come from five-point differences (three near the ends). On
//! intervals whose stencil is monotone they are sign-corrected and scaled into
//! the circle `alpha^2 + beta^2 <= 9`, so the interpolant is monotone wherever
//! the data is. Next to a strict extremum the cubic is left unlimited so smooth
//! peaks are not flattened.

use crate::error::{KineticError, Result};

#[inline]
fn hermite(y0: f64, y1: f64, m0: f64, m1: f64, h: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * h * m0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * h * m1
}

#[inline]
fn hermite_deriv(y0: f64, y1: f64, m0: f64, m1: f64, h: f64, t: f64) -> f64 {
    let t2 = t * t;
    ((6.0 * t2 - 6.0 * t) * y0
        + (3.0 * t2 - 4.0 * t + 1.0) * h * m0
        + (-6.0 * t2 + 6.0 * t) * y1
        + (3.0 * t2 - 2.0 * t) * h * m1)
        / h
}

#[inline]
fn limit_pair(m0: &mut f64, m1: &mut f64, secant: f64) {
    if secant == 0.0 {
        *m0 = 0.0;
        *m1 = 0.0;
        return;
    }
    let a = *m0 / secant;
    let b = *m1 / secant;
    let s = a * a + b * b;
    if s > 9.0 {
        let tau = 3.0 / s.sqrt();
        *m0 = tau * a * secant;
        *m1 = tau * b * secant;
    }
}

/// Interpolate on the uniform interval `[y[1], y[2]]` at fraction `t` from the
/// four samples `y[0..4]` (one extra on each side for the slopes).
///
/// Slopes are centred differences. Where the four samples are monotone they
/// are scaled into the Fritsch-Carlson circle, so the result is monotone and
/// zero neighbourhoods stay exactly zero. At a local extremum of the stencil
/// the cubic is left unlimited: zeroing slopes there flattens smooth peaks and
/// biases the integral. Secants below roundoff of the stencil are sign-neutral.
#[inline]
pub fn monotone_cubic_uniform(y: [f64; 4], t: f64) -> f64 {
    let d0 = y[1] - y[0];
    let d1 = y[2] - y[1];
    let d2 = y[3] - y[2];
    // secants at roundoff level of the stencil count as either sign, so the
    // limiter decision does not flip on negligible tails
    let tiny = 64.0 * f64::EPSILON * y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let monotone = (d0 >= -tiny && d1 >= -tiny && d2 >= -tiny) || (d0 <= tiny && d1 <= tiny && d2 <= tiny);
    let mut m0 = 0.5 * (d0 + d1);
    let mut m1 = 0.5 * (d1 + d2);
    if monotone {
        limit_pair(&mut m0, &mut m1, d1);
    }
    hermite(y[1], y[2], m0, m1, 1.0, t)
}

/// Derivative at `xs[c]` of the polynomial through all the points.
fn lagrange_slope(xs: &[f64], ys: &[f64], c: usize) -> f64 {
    let n = xs.len();
    let mut out = 0.0;
    for j in 0..n {
        let w = if j == c {
            (0..n).filter(|&m| m != c).map(|m| 1.0 / (xs[c] - xs[m])).sum::<f64>()
        } else {
            let num: f64 = (0..n).filter(|&m| m != j && m != c).map(|m| xs[c] - xs[m]).product();
            let den: f64 = (0..n).filter(|&m| m != j).map(|m| xs[j] - xs[m]).product();
            num / den
        };
        out += w * ys[j];
    }
    out
}

/// Monotone cubic interpolant through scattered, strictly increasing abscissae.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return Err(KineticError::Config(
                "monotone cubic needs at least two (x, y) pairs of equal length".into(),
            ));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(KineticError::NotDiffeomorphism(
                "abscissae are not strictly increasing".into(),
            ));
        }
        let secants: Vec<f64> = (0..n - 1)
            .map(|k| (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]))
            .collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for k in 1..n - 1 {
            let (a, b) = (secants[k - 1], secants[k]);
            if a * b == 0.0 {
                continue;
            }
            let m = if k >= 2 && k + 2 < n {
                lagrange_slope(&xs[k - 2..k + 3], &ys[k - 2..k + 3], 2)
            } else {
                let h0 = xs[k] - xs[k - 1];
                let h1 = xs[k + 1] - xs[k];
                (h1 * a + h0 * b) / (h0 + h1)
            };
            // inside monotone data the slope must follow the secants
            slopes[k] = if a * b > 0.0 && m * a < 0.0 { 0.0 } else { m };
        }
        let same_sign = |p: f64, q: f64| (p >= 0.0 && q >= 0.0) || (p <= 0.0 && q <= 0.0);
        for k in 0..n - 1 {
            // limit only where the data is monotone over the whole stencil
            let left = k == 0 || same_sign(secants[k - 1], secants[k]);
            let right = k == n - 2 || same_sign(secants[k], secants[k + 1]);
            if !(left && right) {
                continue;
            }
            let (mut m0, mut m1) = (slopes[k], slopes[k + 1]);
            limit_pair(&mut m0, &mut m1, secants[k]);
            slopes[k] = m0;
            slopes[k + 1] = m1;
        }
        Ok(MonotoneCubic { xs, ys, slopes })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    fn interval(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.partition_point(|&p| p <= x) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        }
    }

    /// Evaluate; linear extrapolation with the end slopes outside the data range.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x < self.xs[0] {
            return self.ys[0] + self.slopes[0] * (x - self.xs[0]);
        }
        if x > self.xs[n - 1] {
            return self.ys[n - 1] + self.slopes[n - 1] * (x - self.xs[n - 1]);
        }
        let k = self.interval(x);
        let h = self.xs[k + 1] - self.xs[k];
        hermite(
            self.ys[k],
            self.ys[k + 1],
            self.slopes[k],
            self.slopes[k + 1],
            h,
            (x - self.xs[k]) / h,
        )
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x < self.xs[0] {
            return self.slopes[0];
        }
        if x > self.xs[n - 1] {
            return self.slopes[n - 1];
        }
        let k = self.interval(x);
        let h = self.xs[k + 1] - self.xs[k];
        hermite_deriv(
            self.ys[k],
            self.ys[k + 1],
            self.slopes[k],
            self.slopes[k + 1],
            h,
            (x - self.xs[k]) / h,
        )
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.ys.windows(2).all(|w| w[1] > w[0])
    }

    /// Solve `eval(x) = y` for strictly increasing data.
    pub fn invert(&self, y: f64) -> Result<f64> {
        if !self.is_strictly_increasing() {
            return Err(KineticError::NotDiffeomorphism(
                "sampled map is not strictly increasing".into(),
            ));
        }
        let n = self.ys.len();
        if y <= self.ys[0] {
            let m = self.slopes[0];
            return if m > 0.0 {
                Ok(self.xs[0] + (y - self.ys[0]) / m)
            } else {
                Ok(self.xs[0])
            };
        }
        if y >= self.ys[n - 1] {
            let m = self.slopes[n - 1];
            return if m > 0.0 {
                Ok(self.xs[n - 1] + (y - self.ys[n - 1]) / m)
            } else {
                Ok(self.xs[n - 1])
            };
        }
        let k = self
            .ys
            .partition_point(|&p| p <= y)
            .saturating_sub(1)
            .min(n - 2);
        let (mut lo, mut hi) = (self.xs[k], self.xs[k + 1]);
        // Secant start, then safeguarded Newton.
        let mut x = lo + (y - self.ys[k]) / (self.ys[k + 1] - self.ys[k]) * (hi - lo);
        for _ in 0..100 {
            let r = self.eval(x) - y;
            if r == 0.0 {
                return Ok(x);
            }
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let d = self.derivative(x);
            let mut next = if d > 0.0 { x - r / d } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) || hi - lo <= 1e-15 * (1.0 + x.abs()) {
                return Ok(next);
            }
            x = next;
        }
        Ok(x)
    }
}
