use kinetic::phase_grid::{
    aniso_norm, build_grid, fd_dv, moment, read_dump_from, spectral_dx, weighted_sobolev_norm,
    write_dump_to, MomentSpec, PhaseField,
};
use proptest::prelude::*;
use std::f64::consts::PI;

/// Band-limited in x (modes < 4), Gaussian in v.
fn field(grid: kinetic::phase_grid::Grid, c: &[f64; 6], width: f64) -> PhaseField {
    PhaseField::from_fn(grid, |x, v| {
        let xs = c[0] + c[1] * (2.0 * PI * x).cos() + c[2] * (4.0 * PI * x).sin() + c[3] * (6.0 * PI * x).cos();
        xs * (-v * v / (2.0 * width * width)).exp() * (1.0 + c[4] * v + c[5] * v * v)
    })
}

fn coeffs() -> impl Strategy<Value = [f64; 6]> {
    prop::array::uniform6(-1.0f64..1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parseval_links_both_norms(c in coeffs(), w in 0.6f64..1.2) {
        let g = build_grid(16, 128, 10.0).unwrap();
        let f = field(g, &c, w);
        let a = aniso_norm(&f, 0.0, 0.0).unwrap();
        let s = weighted_sobolev_norm(&f, 0, 0.0).unwrap();
        prop_assert!((a - s).abs() <= 1e-8 * s.max(1e-300));
    }

    #[test]
    fn spectral_derivative_is_exact_below_nyquist(c in coeffs(), k in 1u32..4) {
        let g = build_grid(16, 32, 6.0).unwrap();
        let f = PhaseField::from_fn(g, |x, v| {
            (c[0] * (2.0 * PI * x).sin() + c[1] * (14.0 * PI * x).cos()) * (1.0 + c[2] * v)
        });
        let d = spectral_dx(&f, k);
        let exact = PhaseField::from_fn(g, |x, v| {
            let p = |m: f64, phase: f64| (2.0 * PI * m).powi(k as i32) * (2.0 * PI * m * x + phase + k as f64 * PI / 2.0).sin();
            (c[0] * p(1.0, 0.0) + c[1] * p(7.0, PI / 2.0)) * (1.0 + c[2] * v)
        });
        let scale = (2.0 * PI * 7.0f64).powi(k as i32);
        for (x, y) in d.values.iter().zip(exact.values.iter()) {
            prop_assert!((x - y).abs() <= 1e-12 * scale.max(1.0));
        }
    }

    #[test]
    fn norms_grow_with_order_and_weight(c in coeffs(), w in 0.6f64..1.2, r in 0.0f64..3.0, dr in 0.0f64..2.0) {
        let g = build_grid(16, 128, 10.0).unwrap();
        let f = field(g, &c, w);
        let n0 = weighted_sobolev_norm(&f, 0, r).unwrap();
        let n1 = weighted_sobolev_norm(&f, 1, r).unwrap();
        let n2 = weighted_sobolev_norm(&f, 2, r).unwrap();
        prop_assert!(n0 <= n1 && n1 <= n2);
        prop_assert!(n1 <= weighted_sobolev_norm(&f, 1, r + dr).unwrap());
    }

    #[test]
    fn moments_are_linear(c in coeffs(), d in coeffs(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let g = build_grid(16, 64, 8.0).unwrap();
        let f = field(g, &c, 1.0);
        let h = field(g, &d, 0.7);
        let sum = f.combine(a, &h, b);
        for spec in [MomentSpec::density(), MomentSpec::current()] {
            let lhs = moment(&sum, &spec);
            let (mf, mh) = (moment(&f, &spec), moment(&h, &spec));
            for i in 0..16 {
                prop_assert!((lhs.values[i] - a * mf.values[i] - b * mh.values[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dumps_roundtrip_bit_exactly(c in coeffs(), t in 0.0f64..10.0) {
        let g = build_grid(8, 16, 4.0).unwrap();
        let f = field(g, &c, 1.0).with_time(t);
        let mut buf = Vec::new();
        write_dump_to(&mut buf, &f).unwrap();
        let back = read_dump_from(&mut buf.as_slice()).unwrap();
        prop_assert_eq!(back, f);
    }
}

#[test]
fn fd_derivative_reaches_fourth_order() {
    let errs: Vec<f64> = [64usize, 128, 256, 512]
        .iter()
        .map(|&nv| {
            let g = build_grid(4, nv, 8.0).unwrap();
            let f = PhaseField::from_fn(g, |_, v| (-v * v / 2.0).exp());
            let d = fd_dv(&f, 1).field;
            (0..nv)
                .map(|j| {
                    let v = g.v(j);
                    (d.values[[0, j]] + v * (-v * v / 2.0).exp()).abs()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    for w in errs.windows(2) {
        assert!((w[0] / w[1]).log2() >= 3.7, "{errs:?}");
    }
}
