use kinetic::models::PoissonSign;
use kinetic::solver::NormRequest;
use kinetic_cli::scenario::*;
use kinetic_cli::CliError;
use proptest::prelude::*;
use std::path::Path;

const MINIMAL: &str = r#"
[grid]
nx = 16
nv = 32
v_cut = 8

[advection]
kind = "classical"

[model]
kind = "poisson"
sign = "repulsive"

[initial]
kind = "gaussian_perturbed"

[run]
t_final = 0.5
"#;

#[test]
fn minimal_scenario_builds_with_documented_defaults() {
    let c = ScenarioConfig::parse(MINIMAL).unwrap();
    let s = c.build(Path::new(".")).unwrap();
    assert_eq!(s.dt, 1e-3);
    assert_eq!(s.picard_tol, 1e-8);
    assert_eq!(s.picard_max, 25);
    assert_eq!(s.grid.nx, 16);
    assert_eq!(s.t_final, 0.5);
}

#[test]
fn errors_are_distinct_and_name_the_key() {
    let missing = ScenarioConfig::parse(&MINIMAL.replace("t_final = 0.5", "")).unwrap_err();
    assert!(matches!(&missing, CliError::MissingKey(k) if k == "run.t_final"), "{missing}");

    let unknown = ScenarioConfig::parse(&format!("{MINIMAL}colour = \"red\"\n")).unwrap_err();
    assert!(matches!(&unknown, CliError::UnknownKey(k) if k == "run.colour"), "{unknown}");

    // a key that belongs to another kind is unknown here
    let foreign = ScenarioConfig::parse(&MINIMAL.replace(
        "sign = \"repulsive\"",
        "sign = \"repulsive\"\namplitude = 2.0",
    ))
    .unwrap_err();
    assert!(matches!(&foreign, CliError::UnknownKey(k) if k == "model.amplitude"));

    let range = ScenarioConfig::parse(&MINIMAL.replace("t_final = 0.5", "t_final = -1.0"))
        .unwrap_err();
    assert!(matches!(&range, CliError::Invalid { key, .. } if key == "run.t_final"));
    assert!(range.to_string().contains("must be positive"), "{range}");

    let nx = ScenarioConfig::parse(&MINIMAL.replace("nx = 16", "nx = 100")).unwrap_err();
    assert!(nx.to_string().contains("grid.nx must be a power of two"), "{nx}");

    let syntax = ScenarioConfig::parse("[grid\nnx = 1").unwrap_err();
    assert!(matches!(syntax, CliError::Syntax(_)));

    for e in [&missing, &unknown, &range, &nx] {
        assert_eq!(e.exit_code(), 2);
    }
}

#[test]
fn norm_requests_are_parsed_and_checked() {
    let text = format!("{MINIMAL}\n[norms]\nrequests = [\"sobolev:2:1\", \"aniso:1:-1\"]\n");
    let c = ScenarioConfig::parse(&text).unwrap();
    assert_eq!(
        c.norms,
        vec![
            NormRequest::Sobolev { k: 2, r: 1.0 },
            NormRequest::Aniso { m: 1.0, n: -1.0 }
        ]
    );
    let bad = format!("{MINIMAL}\n[norms]\nrequests = [\"h2:1:0\"]\n");
    let err = ScenarioConfig::parse(&bad).unwrap_err();
    assert!(err.to_string().contains("norms.requests"), "{err}");
}

#[test]
fn relative_file_paths_resolve_against_the_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let c = ScenarioConfig::parse(MINIMAL).unwrap();
    let f0 = c.initial_field(dir.path()).unwrap();
    kinetic::phase_grid::write_dump(dir.path().join("f0.bin"), &f0).unwrap();
    let text = MINIMAL.replace(
        "kind = \"gaussian_perturbed\"",
        "kind = \"file\"\npath = \"f0.bin\"",
    );
    let from_file = ScenarioConfig::parse(&text).unwrap().initial_field(dir.path()).unwrap();
    assert_eq!(from_file.values, f0.values);

    let wrong = text.replace("nv = 32", "nv = 64");
    let err = ScenarioConfig::parse(&wrong).unwrap().initial_field(dir.path()).unwrap_err();
    assert!(err.to_string().contains("initial.path"), "{err}");
}

#[test]
fn indicator_profile_is_periodic() {
    let text = MINIMAL.replace(
        "kind = \"gaussian_perturbed\"",
        "kind = \"product\"\nx_profile = \"indicator\"\nx_lo = 0.75\nx_hi = 1.25\nv_profile = \"gaussian\"",
    );
    let f = ScenarioConfig::parse(&text).unwrap().initial_field(Path::new(".")).unwrap();
    let g = f.grid;
    for i in 0..g.nx {
        let x = g.x(i);
        let inside = x >= 0.75 || x <= 0.25;
        assert_eq!(f.values[[i, g.nv / 2]] > 0.0, inside, "x = {x}");
    }
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-10.0f64..10.0, Just(0.0), Just(1e-3), Just(0.1 + 0.2)]
}

fn positive() -> impl Strategy<Value = f64> {
    prop_oneof![1e-6f64..10.0, Just(1e-3), Just(0.1 + 0.2)]
}

fn interval() -> impl Strategy<Value = (f64, f64)> {
    (-2.0f64..2.0, 1e-3f64..2.0).prop_map(|(lo, w)| (lo, lo + w))
}

fn config() -> impl Strategy<Value = ScenarioConfig> {
    let grid = (2u32..9, 3u32..9, positive()).prop_map(|(a, b, v_cut)| GridSpec {
        nx: 1 << a,
        nv: 1 << b,
        v_cut,
    });
    let advection = prop_oneof![
        Just(AdvectionSpec::Classical),
        positive().prop_map(|c| AdvectionSpec::Relativistic { c }),
    ];
    let model = prop_oneof![
        Just(ModelSpec::Zero),
        prop_oneof![Just(PoissonSign::Repulsive), Just(PoissonSign::Attractive)]
            .prop_map(|sign| ModelSpec::Poisson { sign }),
        (
            prop_oneof![Just(PsiProfile::HalfBump), Just(PsiProfile::MeanZeroBump)],
            finite(),
            finite()
        )
            .prop_map(|(psi, amplitude, shift)| ModelSpec::Moment {
                psi,
                amplitude,
                shift
            }),
        (finite(), 1u32..5).prop_map(|(amplitude, mode)| ModelSpec::Sine { amplitude, mode }),
    ];
    let xp = prop_oneof![
        (finite(), 1u32..5).prop_map(|(eps, mode)| XProfile::Cosine { eps, mode }),
        interval().prop_map(|(lo, hi)| XProfile::Indicator { lo, hi }),
        interval().prop_map(|(lo, hi)| XProfile::Bump { lo, hi }),
    ];
    let vp = prop_oneof![
        positive().prop_map(|vth| VProfile::Gaussian { vth }),
        interval().prop_map(|(lo, hi)| VProfile::Bump { lo, hi }),
        Just(VProfile::MeanZeroBump),
    ];
    let initial = prop_oneof![
        (finite(), 1u32..5, positive())
            .prop_map(|(eps, mode, vth)| InitialSpec::GaussianPerturbed { eps, mode, vth }),
        "[a-z_]{1,12}\\.bin".prop_map(|path| InitialSpec::File { path }),
        (xp, vp, finite()).prop_map(|(x, v, amplitude)| InitialSpec::Product { x, v, amplitude }),
    ];
    let run = (
        positive(),
        positive(),
        positive(),
        1usize..50,
        1usize..500,
        0.0f64..3.0,
    )
        .prop_map(
            |(t_final, dt, picard_tol, picard_max, output_every, weight_r)| RunSpec {
                t_final,
                dt,
                picard_tol,
                picard_max,
                output_every,
                weight_r,
            },
        );
    let norm = prop_oneof![
        (0u32..4, 0.0f64..3.0).prop_map(|(k, r)| NormRequest::Sobolev { k, r }),
        (0u32..4, 0.0f64..3.0).prop_map(|(k, r)| NormRequest::Winf { k, r }),
        (finite(), finite()).prop_map(|(m, n)| NormRequest::Aniso { m, n }),
    ];
    (
        grid,
        advection,
        model,
        initial,
        run,
        prop::collection::vec(norm, 0..4),
    )
        .prop_map(|(grid, advection, model, initial, run, norms)| ScenarioConfig {
            grid,
            advection,
            model,
            initial,
            run,
            norms,
        })
}

proptest! {
    #[test]
    fn emit_then_parse_is_identity(c in config()) {
        let text = c.emit();
        let back = ScenarioConfig::parse(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.emit(), text);
    }
}

#[test]
fn canonical_form_of_the_minimal_file_is_stable() {
    let c = ScenarioConfig::parse(MINIMAL).unwrap();
    let once = c.emit();
    assert!(once.contains("dt = 0.001"), "{once}");
    let twice = ScenarioConfig::parse(&once).unwrap().emit();
    assert_eq!(once, twice);
}
