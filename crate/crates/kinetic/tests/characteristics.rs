use kinetic::characteristics::*;
use kinetic::error::KineticError;
use kinetic::fourier::TrigSeries;
use kinetic::models::*;
use kinetic::phase_grid::{build_grid, Grid};
use kinetic::profiles::gaussian_perturbed;
use std::f64::consts::PI;
use std::sync::Arc;

fn max_diff(a: &ndarray::Array2<f64>, b: &ndarray::Array2<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn torus_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

#[test]
fn free_transport_is_a_shear() {
    let g = build_grid(16, 32, 4.0).unwrap();
    let rel = AdvectionField::relativistic(1.0).unwrap();
    for a in [AdvectionField::Classical, rel] {
        let fl = trace_flow(&ZeroForce, &a, 0.7, 0.2, &g, 1e-3).unwrap();
        for i in 0..16 {
            for j in 0..32 {
                let want = g.x(i) + (0.2 - 0.7) * a.eval(g.v(j));
                assert!(torus_gap(fl.x[[i, j]], want) < 1e-12);
                assert!((0.0..1.0).contains(&fl.x[[i, j]]));
                assert_eq!(fl.v[[i, j]], g.v(j));
            }
        }
        let id = trace_flow(&ZeroForce, &a, 0.3, 0.3, &g, 1e-3).unwrap();
        for i in 0..16 {
            for j in 0..32 {
                assert_eq!(id.x[[i, j]], g.x(i));
                assert_eq!(id.v[[i, j]], g.v(j));
            }
        }
    }
    assert!(trace_flow(&ZeroForce, &AdvectionField::Classical, 0.0, 1.0, &g, 0.0).is_err());
}

#[test]
fn sine_force_flow_matches_fine_step_reference() {
    let g = build_grid(16, 32, 4.0).unwrap();
    let force = AnalyticForce::sine(0.3, 1);
    let a = AdvectionField::Classical;
    let coarse = trace_flow(&force, &a, 0.5, 0.0, &g, 1e-3).unwrap();
    let fine = trace_flow(&force, &a, 0.5, 0.0, &g, 1e-5).unwrap();
    assert!(max_diff(&coarse.displacement, &fine.displacement) < 1e-8);
    assert!(max_diff(&coarse.v, &fine.v) < 1e-8);
}

#[test]
fn escaping_trajectories_are_refused() {
    let g = build_grid(16, 32, 2.0).unwrap();
    let force = AnalyticForce::sine(5.0, 1);
    let err = trace_flow(&force, &AdvectionField::Classical, 0.0, 0.5, &g, 1e-3).unwrap_err();
    assert!(matches!(err, KineticError::VelocityEscape { .. }));
}

#[test]
fn velocity_inversion_roundtrips() {
    let g = build_grid(8, 64, 4.0).unwrap();
    let vs = g.vs();
    let ws: Vec<f64> = vs
        .iter()
        .map(|v| v + 0.01 * (2.0 * PI * v / 4.0).sin())
        .collect();
    let inv = invert_sampled_column(&vs, &ws).unwrap();
    for k in 0..500 {
        let w = ws[0] + (ws[63] - ws[0]) * k as f64 / 499.0;
        assert!((inv.forward(inv.eval(w)) - w).abs() < 1e-8);
    }
    for (v, w) in vs.iter().zip(&ws) {
        assert!((inv.eval(*w) - v).abs() < 1e-8);
    }
    // free transport: the velocity map is the identity
    let fl = trace_flow(&ZeroForce, &AdvectionField::Classical, 0.4, 0.0, &g, 1e-3).unwrap();
    let id = invert_velocity_map(&fl, 3).unwrap();
    for &v in &[-3.1, -0.2, 0.0, 1.7] {
        assert!((id.eval(v) - v).abs() < 1e-12);
    }
    let mut bad = ws.clone();
    bad.swap(10, 11);
    assert!(matches!(
        invert_sampled_column(&vs, &bad),
        Err(KineticError::NotDiffeomorphism(_))
    ));
}

#[test]
fn shear_determinant_is_one() {
    let g = build_grid(16, 64, 4.0).unwrap();
    let fl = trace_flow(
        &ZeroForce,
        &AdvectionField::relativistic(1.0).unwrap(),
        0.5,
        0.0,
        &g,
        1e-3,
    )
    .unwrap();
    let det = liouville_det(&fl);
    assert!(det.values.iter().all(|d| (d - 1.0).abs() < 1e-10));
}

struct TravellingWave;

impl ForceField for TravellingWave {
    fn jet(&self, t: f64, x: f64, _v: f64) -> ForceJet {
        let k = 2.0 * PI;
        let (s, c) = (k * (x - t)).sin_cos();
        ForceJet {
            f: 0.2 * s,
            fx: 0.2 * k * c,
            fxx: -0.2 * k * k * s,
            ..ForceJet::default()
        }
    }
}

#[test]
fn phase_flow_preserves_volume_for_every_model() {
    let g = build_grid(32, 512, 4.0).unwrap();
    let f0 = gaussian_perturbed(g, 0.1, 1, 1.0);
    let pois = force_assemble(&ForceModel::poisson(PoissonSign::Repulsive), &f0).unwrap();
    let attr = force_assemble(&ForceModel::poisson(PoissonSign::Attractive), &f0).unwrap();
    let sine: Arc<dyn ForceField> = Arc::new(AnalyticForce::sine(0.3, 1));
    let wave: Arc<dyn ForceField> = Arc::new(TravellingWave);
    let rel = AdvectionField::relativistic(1.0).unwrap();
    for a in [AdvectionField::Classical, rel] {
        for force in [&pois, &attr, &sine, &wave] {
            let fl = trace_flow(force.as_ref(), &a, 0.5, 0.0, &g, 1e-3).unwrap();
            let det = liouville_det(&fl);
            let worst = det
                .values
                .iter()
                .map(|d| (d - 1.0).abs())
                .fold(0.0, f64::max);
            assert!(worst < 1e-6, "{}: {worst:e}", a.name());
        }
    }
}

struct Friction;

impl ForceField for Friction {
    fn jet(&self, _t: f64, _x: f64, v: f64) -> ForceJet {
        ForceJet {
            f: v,
            fv: 1.0,
            ..ForceJet::default()
        }
    }
}

#[test]
fn compressible_field_determinant_is_exponential() {
    let g = build_grid(16, 64, 4.0).unwrap();
    let t = 0.05;
    let fl = trace_flow(&Friction, &AdvectionField::Classical, 0.0, t, &g, 1e-3).unwrap();
    let det = liouville_det(&fl);
    assert!(det.values.iter().all(|d| (d - t.exp()).abs() < 1e-10));
}

#[test]
fn backward_and_forward_legs_compose_to_identity() {
    let g = build_grid(16, 32, 4.0).unwrap();
    let force = TravellingWave;
    let a = AdvectionField::relativistic(2.0).unwrap();
    let (t, s, dt) = (0.6, 0.1, 2e-2);
    let leg = trace_flow(&force, &a, t, s, &g, dt).unwrap();
    let reference = trace_flow(&force, &a, t, s, &g, dt / 100.0).unwrap();
    let single =
        max_diff(&leg.displacement, &reference.displacement).max(max_diff(&leg.v, &reference.v));
    assert!(single > 0.0);
    let mut worst = 0.0f64;
    for i in 0..g.nx {
        for j in 0..g.nv {
            let x = g.x(i) + leg.displacement[[i, j]];
            let (xb, vb) = trace_point(&force, &a, s, x, leg.v[[i, j]], t, dt);
            worst = worst.max((xb - g.x(i)).abs()).max((vb - g.v(j)).abs());
        }
    }
    assert!(worst <= 2.0 * single, "{worst:e} vs {single:e}");
}

#[test]
fn small_time_deviation_is_linear() {
    let g = build_grid(16, 32, 4.0).unwrap();
    let force = AnalyticForce::sine(0.5, 1);
    let a = AdvectionField::Classical;
    let slope = |h: f64, dt: f64| {
        let fl = trace_flow(&force, &a, h, 0.0, &g, dt).unwrap();
        let mut dev = 0.0f64;
        for i in 0..g.nx {
            for j in 0..g.nv {
                let dx = fl.displacement[[i, j]] + h * a.eval(g.v(j));
                dev = dev.max(dx.abs()).max((fl.v[[i, j]] - g.v(j)).abs());
            }
        }
        dev / h
    };
    let s1 = slope(0.02, 1e-3);
    let s2 = slope(0.01, 1e-3);
    let s3 = slope(0.005, 1e-3);
    assert!(s1 < 0.5 * 1.1 && s3 > 0.5 * 0.9);
    assert!((s2 - s3).abs() < 0.6 * (s1 - s2).abs() + 1e-12);
    assert!((slope(0.01, 5e-4) - s2).abs() < 1e-10);
}

#[test]
fn burgers_with_zero_force_stays_constant() {
    let g = build_grid(16, 16, 4.0).unwrap();
    let b = solve_burgers(&ZeroForce, &AdvectionField::Classical, &g, 0.3, 1e-2, 5).unwrap();
    for (n, p) in b.phi.iter().enumerate() {
        for i in 0..16 {
            for j in 0..16 {
                if n == 0 {
                    assert_eq!(p[[i, j]], g.v(j));
                } else {
                    assert!((p[[i, j]] - g.v(j)).abs() < 1e-14);
                }
            }
        }
    }
    assert_eq!(b.times.first(), Some(&0.0));
    assert!((b.times.last().unwrap() - 0.3).abs() < 1e-14);
}

/// `Phi(t, x, v)` by Newton on the foot `x0` of the forward characteristic
/// started at `(x0, v)`, integrated with a very fine step.
fn burgers_oracle(force: &dyn ForceField, a: &AdvectionField, t: f64, x: f64, v: f64) -> f64 {
    let dt = 1e-5;
    let mut x0 = x - t * a.eval(v);
    for _ in 0..30 {
        let (y, _) = trace_point(force, a, 0.0, x0, v, t, dt);
        let (y2, _) = trace_point(force, a, 0.0, x0 + 1e-6, v, t, dt);
        let r = y - x;
        let step = r / ((y2 - y) / 1e-6);
        x0 -= step;
        if step.abs() < 1e-14 {
            break;
        }
    }
    trace_point(force, a, 0.0, x0, v, t, dt).1
}

#[test]
fn burgers_small_force_matches_fine_step_oracle() {
    let eps = 0.05;
    let force = AnalyticForce::sine(eps, 1);
    let g = build_grid(256, 16, 4.0).unwrap();
    let rel = AdvectionField::relativistic(1.0).unwrap();
    for a in [AdvectionField::Classical, rel] {
        let t = 0.1;
        let b = solve_burgers(&force, &a, &g, t, 1e-3, 100).unwrap();
        let last = b.phi.last().unwrap();
        let mut dev = 0.0f64;
        for j in [2usize, 8, 13] {
            for i in (0..256).step_by(16) {
                let want = burgers_oracle(&force, &a, t, g.x(i), g.v(j));
                assert!(
                    (last[[i, j]] - want).abs() < 1e-8,
                    "{} i {i} j {j}",
                    a.name()
                );
            }
        }
        for (&p, j) in last.iter().zip((0..256 * 16).map(|k| k % 16)) {
            dev = dev.max((p - g.v(j)).abs());
        }
        assert!(dev <= eps * t * (1.0 + t), "{dev}");
        assert!(b.max_jump() <= dev + 1e-15);
    }
}

#[test]
fn crossing_characteristics_raise_a_shock() {
    let g = build_grid(64, 32, 8.0).unwrap();
    let force = AnalyticForce::sine(3.0, 1);
    let a = AdvectionField::Classical;
    let err = solve_burgers(&force, &a, &g, 2.0, 1e-3, 10).unwrap_err();
    let KineticError::Shock { time } = err else {
        panic!("expected a shock, got {err:?}")
    };
    assert!(time > 0.0 && time < 2.0);
    let h = burgers_horizon(&force, &a, &g, 2.0, 1e-3).unwrap();
    assert!((h - time).abs() < 1e-12);
    assert_eq!(burgers_horizon(&ZeroForce, &a, &g, 2.0, 1e-3), None);
}

/// `G(t, x) = g(t, x, Phi(t, x, v))` for the transported `g`, whose value is
/// `g0` at the foot of the backward characteristic.
fn straightened_residual(nx: usize, dt: f64) -> f64 {
    let force = AnalyticForce::sine(0.3, 1);
    let a = AdvectionField::Classical;
    let g: Grid = build_grid(nx, 16, 4.0).unwrap();
    let j = 9;
    let t = 0.2;
    let b = solve_burgers(&force, &a, &g, t + 2.0 * dt, dt, 1).unwrap();
    let n = b.times.len() - 3;
    assert!((b.times[n] - t).abs() < 1e-12);
    let g0 =
        |x: f64, v: f64| (2.0 * PI * x).cos() * (-v * v).exp() + 0.3 * (4.0 * PI * x).sin() * v;
    let gg = |k: usize| -> Vec<f64> {
        (0..nx)
            .map(|i| {
                let (x0, v0) =
                    trace_point(&force, &a, b.times[k], g.x(i), b.phi[k][[i, j]], 0.0, 1e-4);
                g0(x0, v0)
            })
            .collect()
    };
    let (gmm, gm, g_now, gp, gpp) = (gg(n - 2), gg(n - 1), gg(n), gg(n + 1), gg(n + 2));
    let series = TrigSeries::from_samples(&g_now);
    let mut worst = 0.0f64;
    for i in 0..nx {
        let dt_g = (gmm[i] - 8.0 * gm[i] + 8.0 * gp[i] - gpp[i]) / (12.0 * dt);
        let dx_g = series.jet(g.x(i)).1;
        worst = worst.max((dt_g + a.eval(b.phi[n][[i, j]]) * dx_g).abs());
    }
    worst
}

#[test]
fn straightened_field_is_transported_by_phi() {
    // fourth-order time difference, so the probe does not cap the order
    let r: Vec<f64> = [(32usize, 4e-3), (64, 2e-3), (128, 1e-3)]
        .iter()
        .map(|&(nx, dt)| straightened_residual(nx, dt))
        .collect();
    for w in r.windows(2) {
        assert!((w[0] / w[1]).log2() >= 2.0, "{r:?}");
    }
}

#[test]
fn straightening_identity_holds() {
    let g = build_grid(32, 64, 4.0).unwrap();
    let force = AnalyticForce::sine(0.2, 1);
    let rel = AdvectionField::relativistic(1.0).unwrap();
    for a in [AdvectionField::Classical, rel] {
        let b = solve_burgers(&force, &a, &g, 0.2, 1e-3, 1).unwrap();
        let sf = straightened_flow(&b, &a, 0.0, 0.2, 1e-3).unwrap();
        assert!(
            sf.identity_residual(&a) <= 1e-6,
            "{}",
            sf.identity_residual(&a)
        );
        let bound = 0.2 * 0.2;
        assert!(sf.xtilde.iter().all(|x| x.abs() <= bound));
        let back = straightened_flow(&b, &a, 0.2, 0.05, 1e-3).unwrap();
        assert!(back.identity_residual(&a) <= 1e-6);
        let same = straightened_flow(&b, &a, 0.1, 0.1, 1e-3).unwrap();
        assert!(same.xtilde.iter().all(|&x| x == 0.0));
        assert!(straightened_flow(&b, &a, 0.0, 0.5, 1e-3).is_err());
    }
    let b0 = solve_burgers(&ZeroForce, &AdvectionField::Classical, &g, 0.2, 1e-3, 10).unwrap();
    let s0 = straightened_flow(&b0, &AdvectionField::Classical, 0.0, 0.2, 1e-3).unwrap();
    assert!(s0.xtilde.iter().all(|x| x.abs() < 1e-13));
    for i in 0..32 {
        for j in 0..64 {
            assert!((s0.psi[[i, j]] - g.v(j)).abs() < 1e-9);
        }
    }
}

