use super::{fd_dv, spectral_dx, MomentSpec, PhaseField, SpatialField, DEFAULT_DECAY_TOL};
use crate::error::{KineticError, Result};
use crate::fourier::{fft_in_place, rfft, signed_mode};
use rustfft::num_complex::Complex64;
use std::f64::consts::PI;

/// Most negative velocity order accepted by [`aniso_norm`].
pub const MIN_ANISO_V_ORDER: f64 = -8.0;

/// Highest total derivative order a norm may request on this grid.
pub fn derivative_budget(f: &PhaseField) -> u32 {
    (f.grid.nx.min(f.grid.nv) / 8) as u32
}

fn check_budget(f: &PhaseField, k: u32) -> Result<()> {
    let budget = derivative_budget(f);
    if k > budget {
        Err(KineticError::Resolution(format!(
            "derivative order {k} exceeds the budget {budget} of grid {}",
            f.grid.tag()
        )))
    } else {
        Ok(())
    }
}

fn weights(f: &PhaseField, r: f64) -> Vec<f64> {
    f.grid.vs().iter().map(|v| (1.0 + v * v).powf(r)).collect()
}

/// Weighted Sobolev norm `(sum_{a+b<=k} int (1+v^2)^r |d_x^a d_v^b f|^2)^(1/2)`.
pub fn weighted_sobolev_norm(f: &PhaseField, k: u32, r: f64) -> Result<f64> {
    check_budget(f, k)?;
    let w = weights(f, r);
    let cell = f.grid.dx * f.grid.dv;
    let mut total = 0.0;
    for a in 0..=k {
        let fx = spectral_dx(f, a);
        for b in 0..=(k - a) {
            let d = fd_dv(&fx, b).field;
            for row in d.values.rows() {
                total += row.iter().zip(&w).map(|(x, w)| w * x * x).sum::<f64>();
            }
        }
    }
    Ok((total * cell).sqrt())
}

/// `H^0_r` distance between two fields on the same grid.
pub fn weighted_l2_distance(f: &PhaseField, g: &PhaseField, r: f64) -> f64 {
    assert_eq!(f.grid, g.grid);
    let w = weights(f, r);
    let mut total = 0.0;
    for (rf, rg) in f.values.rows().into_iter().zip(g.values.rows()) {
        for ((a, b), w) in rf.iter().zip(rg.iter()).zip(&w) {
            let d = a - b;
            total += w * d * d;
        }
    }
    (total * f.grid.dx * f.grid.dv).sqrt()
}

/// Weighted sup norm `sum_{a+b<=k} max (1+v^2)^(r/2) |d_x^a d_v^b f|`.
pub fn winf_norm(f: &PhaseField, k: u32, r: f64) -> Result<f64> {
    check_budget(f, k)?;
    let w = weights(f, r / 2.0);
    let mut total = 0.0;
    for a in 0..=k {
        let fx = spectral_dx(f, a);
        for b in 0..=(k - a) {
            let d = fd_dv(&fx, b).field;
            let mut m = 0.0f64;
            for row in d.values.rows() {
                for (x, w) in row.iter().zip(&w) {
                    m = m.max(w * x.abs());
                }
            }
            total += m;
        }
    }
    Ok(total)
}

/// Anisotropic norm with multiplier `(1+kx^2)^(m/2) (1+eta^2)^(n/2)`, where
/// the velocity transform treats `[-v_cut, v_cut]` as one period (valid only
/// under the decay certificate). Normalized so that `(0,0)` is the `L^2` norm.
pub fn aniso_norm(f: &PhaseField, m: f64, n: f64) -> Result<f64> {
    if n < MIN_ANISO_V_ORDER {
        return Err(KineticError::Config(format!(
            "velocity order {n} is below the supported minimum {MIN_ANISO_V_ORDER}"
        )));
    }
    f.check_decay(DEFAULT_DECAY_TOL)?;
    let (nx, nv) = (f.grid.nx, f.grid.nv);
    let period_v = 2.0 * f.grid.v_cut;
    let mut spec = vec![Complex64::new(0.0, 0.0); nx * nv];
    for i in 0..nx {
        for j in 0..nv {
            spec[i * nv + j] = Complex64::new(f.values[[i, j]], 0.0);
        }
        fft_in_place(&mut spec[i * nv..(i + 1) * nv]);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); nx];
    let vmult: Vec<f64> = (0..nv)
        .map(|q| {
            let eta = 2.0 * PI * signed_mode(q, nv).abs() as f64 / period_v;
            (1.0 + eta * eta).powf(n)
        })
        .collect();
    let xmult: Vec<f64> = (0..nx)
        .map(|p| {
            let k = 2.0 * PI * signed_mode(p, nx).abs() as f64;
            (1.0 + k * k).powf(m)
        })
        .collect();
    let mut total = 0.0;
    for q in 0..nv {
        for i in 0..nx {
            col[i] = spec[i * nv + q];
        }
        fft_in_place(&mut col);
        for (p, c) in col.iter().enumerate() {
            total += xmult[p] * vmult[q] * c.norm_sqr();
        }
    }
    let norm = f.grid.dx * f.grid.dv / (nx * nv) as f64;
    Ok((total * norm).sqrt())
}

/// `m_psi(x) = int f(x,v) psi(v) dv` by the trapezoid rule in `v`.
pub fn moment(f: &PhaseField, spec: &MomentSpec) -> SpatialField {
    let psi: Vec<f64> = f.grid.vs().iter().map(|&v| spec.eval(v)).collect();
    let values = f
        .values
        .rows()
        .into_iter()
        .map(|row| row.iter().zip(&psi).map(|(a, b)| a * b).sum::<f64>() * f.grid.dv)
        .collect();
    SpatialField::new(values, f.time)
}

/// `H^n(T)` norm with multiplier `(1+(2 pi m)^2)^(n/2)`; `n` may be fractional.
pub fn spatial_sobolev_norm(f: &SpatialField, n: f64) -> f64 {
    let nx = f.nx;
    let spec = rfft(&f.values);
    let total: f64 = spec
        .iter()
        .enumerate()
        .map(|(p, c)| {
            let k = 2.0 * PI * signed_mode(p, nx).abs() as f64;
            (1.0 + k * k).powf(n) * c.norm_sqr()
        })
        .sum();
    (total / (nx * nx) as f64).sqrt()
}

/// Regularity and integrability thresholds `(N, R)` for dimension `d`,
/// advection growth exponent `lambda` and moment growth `r0`.
pub fn compute_thresholds(d: u32, lambda: f64, r0: f64) -> Result<(f64, f64)> {
    if d < 1 || lambda < 0.0 || r0 < 0.0 {
        return Err(KineticError::Config(format!(
            "thresholds need d >= 1, lambda >= 0, r0 >= 0 (got {d}, {lambda}, {r0})"
        )));
    }
    let d = d as f64;
    let n = 1.5 * d + 4.0;
    let r = d / 2.0 + 2.0 * (1.0 + lambda) * (1.0 + d) + r0;
    Ok((n, r))
}
