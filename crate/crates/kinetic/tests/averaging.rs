use kinetic::averaging::*;
use kinetic::models::AdvectionField;
use kinetic::phase_grid::{build_grid, SpatialField};
use kinetic::profiles::unit_bump;
use proptest::prelude::*;
use std::f64::consts::PI;

fn cos_mode(nx: usize, m: u32) -> impl Fn(f64) -> SpatialField {
    move |s| SpatialField::from_fn(nx, |x| (2.0 * PI * m as f64 * x).cos()).with_time(s)
}

fn simpson_integral(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// `K(cos 2 pi m x)` for an even `eta`: `-2 pi m sin(2 pi m x) int_0^t etâ(2 pi m u) du`
/// with `etâ(xi) = int eta(v) cos(xi v) dv`, both integrals by fine Simpson.
fn oracle_amplitude(eta: &dyn Fn(f64) -> f64, v_half: f64, m: u32, t: f64) -> f64 {
    let hat = |xi: f64| simpson_integral(|v| eta(v) * (xi * v).cos(), -v_half, v_half, 4000);
    -2.0 * PI * m as f64 * simpson_integral(|u| hat(2.0 * PI * m as f64 * u), 0.0, t, 2000)
}

#[test]
fn single_mode_matches_fourier_side_oracle() {
    let g = build_grid(32, 1024, 8.0).unwrap();
    let a = AdvectionField::Classical;
    let t = 0.5;
    let gauss = |v: f64| (-0.5 * v * v).exp();
    let bump = |v: f64| unit_bump(v / 2.0);
    let cases: Vec<(Kernel, &dyn Fn(f64) -> f64, f64)> = vec![
        (Kernel::gaussian(), &gauss, 8.0),
        (
            Kernel::velocity_only(
                "bump2",
                move |v| unit_bump(v / 2.0),
                u32::MAX,
                f64::INFINITY,
            ),
            &bump,
            2.0,
        ),
    ];
    for (kernel, eta, vh) in &cases {
        for m in [1u32, 2, 3, 5] {
            let k = apply_k(kernel, &cos_mode(32, m), &a, &g, t, DEFAULT_S_POINTS);
            let amp = oracle_amplitude(*eta, *vh, m, t);
            let err = g
                .xs()
                .iter()
                .zip(&k.values)
                .map(|(x, y)| (y - amp * (2.0 * PI * m as f64 * x).sin()).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-6, "{} m {m}: err {err:e}", kernel.id);
        }
    }
}

fn bump_kernel() -> Kernel {
    Kernel::velocity_only("bump2", |v| unit_bump(v / 2.0), u32::MAX, f64::INFINITY)
}

#[test]
fn certified_kernels_have_bounded_ratio_tables() {
    let g = build_grid(128, 1024, 8.0).unwrap();
    let modes: Vec<u32> = (1..=32).collect();
    let rel = AdvectionField::relativistic(1.0).unwrap();
    for a in [AdvectionField::Classical, rel] {
        for kernel in [Kernel::gaussian(), bump_kernel()] {
            assert!(kernel.certificate(a.lambda()).certified());
            let rows = smoothing_ratio(&kernel, &a, &g, &modes, 1.0, 0).unwrap();
            let first = rows[0].ratio;
            let worst = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
            assert!(
                worst <= 3.0 * first,
                "{} {}: {worst} vs {first}",
                kernel.id,
                a.name()
            );
            let mean = rows.iter().map(|r| r.ratio).sum::<f64>() / rows.len() as f64;
            assert!(
                ratio_slope(&rows) * 31.0 < 0.25 * mean,
                "{} {}",
                kernel.id,
                a.name()
            );
        }
    }
}

#[test]
fn doubling_the_quadrature_changes_ratios_below_gate() {
    let g = build_grid(64, 1024, 8.0).unwrap();
    let a = AdvectionField::Classical;
    let modes = [1u32, 4, 16, 31];
    let r0 = smoothing_ratio(&Kernel::gaussian(), &a, &g, &modes, 1.0, 0).unwrap();
    let r1 = smoothing_ratio(&Kernel::gaussian(), &a, &g, &modes, 1.0, 1).unwrap();
    for (x, y) in r0.iter().zip(&r1) {
        assert!((x.ratio - y.ratio).abs() < 1e-7, "mode {}", x.mode);
        assert_eq!(y.quadrature_level, 1);
    }
}

#[test]
fn degenerate_narrow_kernel_ratios_grow_with_mode() {
    let g = build_grid(128, 1024, 8.0).unwrap();
    let kernel = Kernel::narrow_bump(0.01);
    assert!(!kernel.certificate(0.0).certified());
    let rows = smoothing_ratio(
        &kernel,
        &AdvectionField::Classical,
        &g,
        &[1, 2, 4, 8, 16, 32],
        1.0,
        0,
    )
    .unwrap();
    assert!(rows.windows(2).all(|w| w[1].ratio > w[0].ratio));
    assert!(rows[5].ratio > 10.0 * rows[0].ratio);
    assert!(ratio_slope(&rows) > 0.0);
}

#[test]
fn zero_kernel_gives_zero_ratios() {
    let g = build_grid(32, 64, 8.0).unwrap();
    let rows = smoothing_ratio(
        &Kernel::zero(),
        &AdvectionField::Classical,
        &g,
        &[1, 2, 4],
        0.5,
        0,
    )
    .unwrap();
    assert!(rows.iter().all(|r| r.ratio == 0.0 && r.kernel_id == "zero"));
    assert!(smoothing_ratio(
        &Kernel::zero(),
        &AdvectionField::Classical,
        &g,
        &[0],
        0.5,
        0
    )
    .is_err());
}

#[test]
fn modified_and_straight_forms_agree() {
    let g = build_grid(64, 1024, 8.0).unwrap();
    let rel = AdvectionField::relativistic(1.0).unwrap();
    for a in [AdvectionField::Classical, rel] {
        for kernel in [Kernel::gaussian(), bump_kernel()] {
            let h = |s: f64| {
                SpatialField::from_fn(64, |x| {
                    (2.0 * PI * 3.0 * x).cos() + 0.5 * (2.0 * PI * x + s).sin()
                })
                .with_time(s)
            };
            let k1 = apply_k(&kernel, &h, &a, &g, 0.5, DEFAULT_S_POINTS);
            let st = straighten_variable(&kernel, &a);
            let k2 = apply_k_straight(
                &st,
                &h,
                64,
                straight_range(&a, g.v_cut),
                4096,
                0.5,
                DEFAULT_S_POINTS,
            );
            let err = k1
                .values
                .iter()
                .zip(&k2.values)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-6, "{} {}: {err:e}", kernel.id, a.name());
        }
    }
}

#[test]
fn x_dependent_kernel_modulates_pointwise() {
    // U = eta(v) (1 + cos 2 pi x) multiplies the x-independent result pointwise
    let g = build_grid(32, 256, 8.0).unwrap();
    let a = AdvectionField::Classical;
    let h = |s: f64| SpatialField::from_fn(32, |x| (2.0 * PI * 2.0 * x).sin()).with_time(s);
    let plain = apply_k(&Kernel::gaussian(), &h, &a, &g, 0.4, 65);
    let modk = Kernel::new(
        "mod",
        |_, _, x, v| (-0.5 * v * v).exp() * (1.0 + (2.0 * PI * x).cos()),
        u32::MAX,
        f64::INFINITY,
        false,
    );
    let k = apply_k(&modk, &h, &a, &g, 0.4, 65);
    for (i, x) in g.xs().iter().enumerate() {
        let want = plain.values[i] * (1.0 + (2.0 * PI * x).cos());
        assert!((k.values[i] - want).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn apply_k_is_linear(c1 in -2.0f64..2.0, c2 in -2.0f64..2.0, m1 in 1u32..6, m2 in 1u32..6, w in 0.3f64..3.0) {
        let g = build_grid(16, 64, 6.0).unwrap();
        let a = AdvectionField::Classical;
        let h1 = cos_mode(16, m1);
        let h2 = move |s: f64| SpatialField::from_fn(16, |x| (2.0 * PI * m2 as f64 * x + s).sin()).with_time(s);
        let hs = |s: f64| {
            let (x, y) = (h1(s), h2(s));
            SpatialField::new(x.values.iter().zip(&y.values).map(|(p, q)| c1 * p + c2 * q).collect(), s)
        };
        let k = Kernel::gaussian();
        let lhs = apply_k(&k, &hs, &a, &g, 0.3, 33);
        let r1 = apply_k(&k, &h1, &a, &g, 0.3, 33);
        let r2 = apply_k(&k, &h2, &a, &g, 0.3, 33);
        for i in 0..16 {
            prop_assert!((lhs.values[i] - c1 * r1.values[i] - c2 * r2.values[i]).abs() < 1e-12);
        }
        // linear in the kernel
        let k2 = Kernel::velocity_only("b", move |v| unit_bump(v / w), u32::MAX, f64::INFINITY);
        let ksum = Kernel::velocity_only("s", move |v| c1 * (-0.5 * v * v).exp() + c2 * unit_bump(v / w), u32::MAX, f64::INFINITY);
        let lhs = apply_k(&ksum, &h2, &a, &g, 0.3, 33);
        let p1 = apply_k(&k, &h2, &a, &g, 0.3, 33);
        let p2 = apply_k(&k2, &h2, &a, &g, 0.3, 33);
        for i in 0..16 {
            prop_assert!((lhs.values[i] - c1 * p1.values[i] - c2 * p2.values[i]).abs() < 1e-12);
        }
    }
}
