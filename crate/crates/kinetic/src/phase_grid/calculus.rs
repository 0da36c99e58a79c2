use super::{PhaseField, SpatialField, DEFAULT_DECAY_TOL};
use crate::error::KineticError;
use crate::fourier::{fft_in_place, ifft_in_place, shift_derivative_multiplier};
use rustfft::num_complex::Complex64;

/// k-th x-derivative by the Fourier multiplier `(2 pi i m)^k`, column by column.
pub fn spectral_dx(f: &PhaseField, k: u32) -> PhaseField {
    if k == 0 {
        return f.clone();
    }
    let (nx, nv) = (f.grid.nx, f.grid.nv);
    let mult: Vec<Complex64> = (0..nx)
        .map(|m| shift_derivative_multiplier(m, nx, 0.0, k))
        .collect();
    let mut out = f.clone();
    let mut buf = vec![Complex64::new(0.0, 0.0); nx];
    for j in 0..nv {
        for i in 0..nx {
            buf[i] = Complex64::new(f.values[[i, j]], 0.0);
        }
        fft_in_place(&mut buf);
        for (b, m) in buf.iter_mut().zip(&mult) {
            *b *= m;
        }
        ifft_in_place(&mut buf);
        for i in 0..nx {
            out.values[[i, j]] = buf[i].re;
        }
    }
    out
}

/// k-th derivative of a periodic function of `x`.
pub fn spectral_dx_spatial(f: &SpatialField, k: u32) -> SpatialField {
    if k == 0 {
        return f.clone();
    }
    let nx = f.nx;
    let mut buf: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_in_place(&mut buf);
    for (m, b) in buf.iter_mut().enumerate() {
        *b *= shift_derivative_multiplier(m, nx, 0.0, k);
    }
    ifft_in_place(&mut buf);
    SpatialField::new(buf.iter().map(|z| z.re).collect(), f.time)
}

/// Result of a velocity finite difference, with a warning when the input
/// violated the boundary-decay certificate (one-sided stencils then see
/// truncated data).
#[derive(Debug, Clone)]
pub struct FdDerivative {
    pub field: PhaseField,
    pub warning: Option<KineticError>,
}

fn d1_row(row: &[f64], h: f64, out: &mut [f64]) {
    let n = row.len();
    let s = 1.0 / (12.0 * h);
    out[0] = s * (-25.0 * row[0] + 48.0 * row[1] - 36.0 * row[2] + 16.0 * row[3] - 3.0 * row[4]);
    out[1] = s * (-3.0 * row[0] - 10.0 * row[1] + 18.0 * row[2] - 6.0 * row[3] + row[4]);
    for j in 2..n - 2 {
        out[j] = s * (row[j - 2] - 8.0 * row[j - 1] + 8.0 * row[j + 1] - row[j + 2]);
    }
    out[n - 2] = -s
        * (-3.0 * row[n - 1] - 10.0 * row[n - 2] + 18.0 * row[n - 3] - 6.0 * row[n - 4]
            + row[n - 5]);
    out[n - 1] = -s
        * (-25.0 * row[n - 1] + 48.0 * row[n - 2] - 36.0 * row[n - 3] + 16.0 * row[n - 4]
            - 3.0 * row[n - 5]);
}

fn d2_row(row: &[f64], h: f64, out: &mut [f64]) {
    let n = row.len();
    let s = 1.0 / (12.0 * h * h);
    out[0] = s
        * (45.0 * row[0] - 154.0 * row[1] + 214.0 * row[2] - 156.0 * row[3] + 61.0 * row[4]
            - 10.0 * row[5]);
    out[1] =
        s * (10.0 * row[0] - 15.0 * row[1] - 4.0 * row[2] + 14.0 * row[3] - 6.0 * row[4] + row[5]);
    for j in 2..n - 2 {
        out[j] =
            s * (-row[j - 2] + 16.0 * row[j - 1] - 30.0 * row[j] + 16.0 * row[j + 1] - row[j + 2]);
    }
    out[n - 2] = s
        * (10.0 * row[n - 1] - 15.0 * row[n - 2] - 4.0 * row[n - 3] + 14.0 * row[n - 4]
            - 6.0 * row[n - 5]
            + row[n - 6]);
    out[n - 1] = s
        * (45.0 * row[n - 1] - 154.0 * row[n - 2] + 214.0 * row[n - 3] - 156.0 * row[n - 4]
            + 61.0 * row[n - 5]
            - 10.0 * row[n - 6]);
}

/// k-th derivative of one sampled row with spacing `h` (fourth order;
/// higher orders compose the first- and second-derivative stencils).
pub fn fd_dv_row(row: &[f64], h: f64, k: u32) -> Vec<f64> {
    let mut cur = row.to_vec();
    if k == 0 {
        return cur;
    }
    let mut tmp = vec![0.0; row.len()];
    let mut remaining = k;
    if remaining % 2 == 1 {
        d1_row(&cur, h, &mut tmp);
        std::mem::swap(&mut cur, &mut tmp);
        remaining -= 1;
    }
    while remaining > 0 {
        d2_row(&cur, h, &mut tmp);
        std::mem::swap(&mut cur, &mut tmp);
        remaining -= 2;
    }
    cur
}

/// k-th v-derivative: centred fourth-order stencils, one-sided on the two
/// outermost rows at each end.
pub fn fd_dv(f: &PhaseField, k: u32) -> FdDerivative {
    let warning = f.check_decay(DEFAULT_DECAY_TOL).err();
    if k == 0 {
        return FdDerivative {
            field: f.clone(),
            warning,
        };
    }
    let (nx, nv) = (f.grid.nx, f.grid.nv);
    let mut out = f.clone();
    for i in 0..nx {
        let row = f.values.row(i);
        let d = fd_dv_row(row.as_slice().expect("row-major field"), f.grid.dv, k);
        for j in 0..nv {
            out.values[[i, j]] = d[j];
        }
    }
    FdDerivative {
        field: out,
        warning,
    }
}
