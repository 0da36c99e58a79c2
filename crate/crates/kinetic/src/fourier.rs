//! FFT helpers for real periodic samples on the unit torus.
//!
//! Samples `f_i = f(i/n)` are identified with their trigonometric interpolant
//! `p(x) = sum_{|m|<n/2} c_m e^{2 pi i m x} + c_{n/2} cos(pi n x)`, with the
//! Nyquist mode kept as a real cosine so that shifts and derivatives stay real.

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

type PlanCache = HashMap<(usize, bool), Arc<dyn Fft<f64>>>;

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, PlanCache)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (planner, cache) = &mut *guard;
        cache
            .entry((n, forward))
            .or_insert_with(|| {
                if forward {
                    planner.plan_fft_forward(n)
                } else {
                    planner.plan_fft_inverse(n)
                }
            })
            .clone()
    })
}

/// In-place unnormalized forward transform.
pub fn fft_in_place(buf: &mut [Complex64]) {
    if buf.len() > 1 {
        plan(buf.len(), true).process(buf);
    }
}

/// In-place inverse transform, normalized by `1/n`.
pub fn ifft_in_place(buf: &mut [Complex64]) {
    let n = buf.len();
    if n > 1 {
        plan(n, false).process(buf);
        let s = 1.0 / n as f64;
        for z in buf.iter_mut() {
            *z *= s;
        }
    }
}

/// Unnormalized DFT of real samples.
pub fn rfft(values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_in_place(&mut buf);
    buf
}

/// Signed frequency of DFT bin `k` for length `n` (Nyquist reported as `+n/2`).
#[inline]
pub fn signed_mode(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Multiplier applied to bin `k` to obtain the `p`-th derivative of the
/// interpolant shifted by `s` (i.e. of `x -> p(x - s)`), sampled on the grid.
#[inline]
pub fn shift_derivative_multiplier(k: usize, n: usize, s: f64, p: u32) -> Complex64 {
    if n % 2 == 0 && k == n / 2 {
        let w = PI * n as f64;
        // cos(pi n s - p pi/2), with n s reduced mod 2
        let phase = PI * (0.5 * n as f64 * s).rem_euclid(1.0) * 2.0 - p as f64 * PI / 2.0;
        return Complex64::new(w.powi(p as i32) * phase.cos(), 0.0);
    }
    let m = signed_mode(k, n) as f64;
    let w = 2.0 * PI * m;
    // reduce the phase before the trig call: faster and more accurate
    let turns = (m * s).rem_euclid(1.0);
    let ip = match p % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    let shift = Complex64::from_polar(1.0, -2.0 * PI * turns);
    ip * w.powi(p as i32) * shift
}

/// Grid samples of `d^p/dx^p p(x - s)` given the spectrum of `p`.
pub fn shifted_derivative(
    spectrum: &[Complex64],
    s: f64,
    p: u32,
    scratch: &mut Vec<Complex64>,
) -> Vec<f64> {
    let n = spectrum.len();
    scratch.clear();
    scratch.extend(
        spectrum
            .iter()
            .enumerate()
            .map(|(k, &c)| c * shift_derivative_multiplier(k, n, s, p)),
    );
    ifft_in_place(scratch);
    scratch.iter().map(|z| z.re).collect()
}

/// Grid samples of `d^p/dx^p p(x - s)` for `p = 0..=q`. Same values as
/// [`shifted_derivative`] per order, with the shift phase computed once per
/// bin and the derivative factors built by repeated multiplication.
pub fn shifted_derivatives(
    spectrum: &[Complex64],
    s: f64,
    q: u32,
    scratch: &mut Vec<Complex64>,
) -> Vec<Vec<f64>> {
    let n = spectrum.len();
    let nyq = (n % 2 == 0).then_some(n / 2);
    let mut acc: Vec<Complex64> = spectrum
        .iter()
        .enumerate()
        .map(|(k, &c)| c * shift_derivative_multiplier(k, n, s, 0))
        .collect();
    let factor: Vec<Complex64> = (0..n)
        .map(|k| Complex64::new(0.0, 2.0 * PI * signed_mode(k, n) as f64))
        .collect();
    let mut out = Vec::with_capacity(q as usize + 1);
    for p in 0..=q {
        if p > 0 {
            for (a, f) in acc.iter_mut().zip(&factor) {
                *a *= f;
            }
        }
        scratch.clear();
        scratch.extend_from_slice(&acc);
        if let Some(k) = nyq {
            scratch[k] = spectrum[k] * shift_derivative_multiplier(k, n, s, p);
        }
        ifft_in_place(scratch);
        out.push(scratch.iter().map(|z| z.re).collect());
    }
    out
}

/// Highest Taylor order a [`GridTaylor`] table may use.
const GRID_TAYLOR_MAX: u32 = 16;

/// Off-grid values of a trigonometric interpolant from Taylor expansions
/// about the nearest node. Offsets never exceed half a cell, so the order
/// follows from a mode-by-mode bound on the remainder. Much cheaper than
/// summing a long series when many evaluations land near the grid.
#[derive(Debug, Clone)]
pub struct GridTaylor {
    /// Node-major derivatives: entry `i * (q + 1) + p` is the `p`-th
    /// derivative at node `i`.
    d: Vec<f64>,
    n: usize,
    q: usize,
}

impl GridTaylor {
    /// Table with remainder below `tol`, or `None` if the spectrum is too
    /// rough for [`GRID_TAYLOR_MAX`] terms.
    pub fn from_spectrum(spec: &[Complex64], tol: f64) -> Option<Self> {
        let n = spec.len();
        if n == 0 {
            return None;
        }
        let half_cell = 0.5 / n as f64;
        let amps: Vec<(f64, f64)> = spec
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let w = 2.0 * PI * signed_mode(k, n).unsigned_abs() as f64 * half_cell;
                (c.norm() / n as f64, w)
            })
            .collect();
        let mut terms: Vec<f64> = amps.iter().map(|&(a, w)| a * w).collect();
        for q in 0..=GRID_TAYLOR_MAX {
            if terms.iter().sum::<f64>() <= tol {
                let cols = shifted_derivatives(spec, 0.0, q, &mut Vec::with_capacity(n));
                let d = (0..n).flat_map(|i| cols.iter().map(move |c| c[i])).collect();
                return Some(GridTaylor {
                    d,
                    n,
                    q: q as usize,
                });
            }
            for (t, &(_, w)) in terms.iter_mut().zip(&amps) {
                *t *= w / (q + 2) as f64;
            }
        }
        None
    }

    /// Taylor order in use.
    pub fn order(&self) -> usize {
        self.q
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        let u = x * self.n as f64;
        let r = u.round();
        let e = (u - r) / self.n as f64;
        let i = (r as i64).rem_euclid(self.n as i64) as usize;
        let d = &self.d[i * (self.q + 1)..(i + 1) * (self.q + 1)];
        let mut acc = d[self.q];
        for p in (0..self.q).rev() {
            acc = d[p] + acc * e / (p + 1) as f64;
        }
        acc
    }
}

/// Zero the bins of `spec` that sit at roundoff level relative to the whole
/// spectrum (including the mean), so they do not masquerade as content.
pub fn drop_roundoff_modes(spec: &mut [Complex64]) {
    let scale: f64 = spec.iter().map(|c| c.norm()).sum();
    let tol = 4.0 * f64::EPSILON * scale;
    for c in spec.iter_mut() {
        if c.norm() <= tol {
            *c = Complex64::new(0.0, 0.0);
        }
    }
}

/// One-sided trigonometric series for off-grid evaluation of a real periodic
/// function. Trailing modes below roundoff are dropped.
#[derive(Debug, Clone)]
pub struct TrigSeries {
    /// `c_0 .. c_M` normalized so that `f(x) = c_0 + 2 Re sum_{m>=1} c_m e^{2 pi i m x}`.
    coeffs: Vec<Complex64>,
    /// Nyquist cosine amplitude and wavenumber, if the series reaches it.
    nyquist: Option<(f64, f64)>,
}

impl TrigSeries {
    pub fn from_samples(values: &[f64]) -> Self {
        let spec = rfft(values);
        Self::from_spectrum(&spec)
    }

    pub fn from_spectrum(spec: &[Complex64]) -> Self {
        let n = spec.len();
        let inv = 1.0 / n as f64;
        let half = n / 2;
        let upper = if n % 2 == 0 { half } else { half + 1 };
        let mut coeffs: Vec<Complex64> = spec[..upper.max(1)].iter().map(|c| c * inv).collect();
        let mut nyquist = if n % 2 == 0 && n >= 2 {
            Some((spec[half].re * inv, PI * n as f64))
        } else {
            None
        };
        let scale: f64 = coeffs.iter().map(|c| c.norm()).sum::<f64>() * 2.0
            + nyquist.map(|(a, _)| a.abs()).unwrap_or(0.0);
        let tol = 2.0 * f64::EPSILON * scale;
        if let Some((a, _)) = nyquist {
            if a.abs() <= tol {
                nyquist = None;
            }
        }
        if nyquist.is_none() {
            while coeffs.len() > 1 && coeffs.last().map(|c| c.norm() <= tol).unwrap_or(false) {
                coeffs.pop();
            }
        }
        TrigSeries { coeffs, nyquist }
    }

    /// Number of retained positive modes.
    pub fn len(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0 && self.nyquist.is_none()
    }

    pub fn value(&self, x: f64) -> f64 {
        let mut f = self.coeffs[0].re;
        if self.coeffs.len() > 1 {
            // Clenshaw on 2 Re(c) cos(m t) - 2 Im(c) sin(m t).
            let (sn, cs) = (2.0 * PI * x).sin_cos();
            let two_cos = 2.0 * cs;
            let (mut b1, mut b2, mut d1, mut d2) = (0.0, 0.0, 0.0, 0.0);
            for c in self.coeffs[1..].iter().rev() {
                let b = 2.0 * c.re + two_cos * b1 - b2;
                b2 = b1;
                b1 = b;
                let d = -2.0 * c.im + two_cos * d1 - d2;
                d2 = d1;
                d1 = d;
            }
            f += b1 * cs - b2 + d1 * sn;
        }
        if let Some((a, k)) = self.nyquist {
            f += a * (k * x).cos();
        }
        f
    }

    /// `(f, f', f'')` at `x`.
    pub fn jet(&self, x: f64) -> (f64, f64, f64) {
        let mut f = self.coeffs[0].re;
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        if self.coeffs.len() > 1 {
            let z = Complex64::from_polar(1.0, 2.0 * PI * x);
            let mut w = z;
            for (m, c) in self.coeffs.iter().enumerate().skip(1) {
                let t = c * w;
                let k = 2.0 * PI * m as f64;
                f += 2.0 * t.re;
                d1 -= 2.0 * k * t.im;
                d2 -= 2.0 * k * k * t.re;
                w *= z;
            }
        }
        if let Some((a, k)) = self.nyquist {
            let (s, c) = (k * x).sin_cos();
            f += a * c;
            d1 -= a * k * s;
            d2 -= a * k * k * c;
        }
        (f, d1, d2)
    }
}
