use kinetic::models::{AdvectionField, ForceModel, PoissonSign};
use kinetic::phase_grid::build_grid;
use kinetic::profiles::gaussian_perturbed;
use kinetic::solver::{run_simulation, NormRequest, Scenario};
use kinetic_cli::report::*;
use proptest::prelude::*;

fn bits(x: f64) -> u64 {
    x.to_bits()
}

fn text() -> impl Strategy<Value = String> {
    // commas, quotes and spaces force the writer to quote fields
    "[a-z0-9_=;:, \"]{0,16}"
}

fn row() -> impl Strategy<Value = ReportRow> {
    let float = prop_oneof![
        any::<f64>().prop_filter("finite", |x| x.is_finite()),
        Just(0.0),
        Just(-0.0),
        Just(f64::MIN_POSITIVE),
        Just(5e-324),
        Just(f64::MAX),
    ];
    (float.clone(), text(), text(), float, text())
        .prop_map(|(t, q, p, v, r)| ReportRow::new(t, q, p, v, r))
}

proptest! {
    #[test]
    fn csv_roundtrip_is_bit_exact(rows in prop::collection::vec(row(), 0..20)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        emit_report(&rows, &path).unwrap();
        let back = read_report(&path).unwrap();
        prop_assert_eq!(back.len(), rows.len());
        for (a, b) in rows.iter().zip(&back) {
            prop_assert_eq!(bits(a.time), bits(b.time));
            prop_assert_eq!(bits(a.value), bits(b.value));
            prop_assert_eq!(&a.quantity, &b.quantity);
            prop_assert_eq!(&a.params, &b.params);
            prop_assert_eq!(&a.resolution, &b.resolution);
        }
    }
}

#[test]
fn empty_report_is_header_only() {
    let mut buf = Vec::new();
    write_report_to(&mut buf, &[]).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "time,quantity,params,value,resolution\n");
}

#[test]
fn one_row_gives_two_lines() {
    let mut buf = Vec::new();
    write_report_to(&mut buf, &[ReportRow::new(0.5, "mass", "", 1.0, "nx=8")]).unwrap();
    let s = String::from_utf8(buf).unwrap();
    let lines: Vec<_> = s.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1], "5.0000000000000000e-1,mass,,1.0000000000000000e0,nx=8");
}

#[test]
fn non_finite_values_are_refused() {
    let mut buf = Vec::new();
    let err = write_report_to(&mut buf, &[ReportRow::new(0.0, "x", "", f64::NAN, "")]);
    assert!(err.is_err());
}

#[test]
fn foreign_header_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "a,b,c,d,e\n").unwrap();
    assert!(read_report(&path).is_err());
}

#[test]
fn simulation_report_has_one_row_per_norm_and_ratio() {
    let grid = build_grid(16, 32, 8.0).unwrap();
    let f0 = gaussian_perturbed(grid, 0.05, 1, 1.0);
    let norms = vec![
        NormRequest::Sobolev { k: 1, r: 0.0 },
        NormRequest::Aniso { m: 1.0, n: 0.0 },
    ];
    let mut s = Scenario::new(
        AdvectionField::Classical,
        ForceModel::poisson(PoissonSign::Repulsive),
        f0,
        0.1,
    );
    s.dt = 1e-2;
    s.norm_requests = norms;
    s.output_every = 2;
    let out = run_simulation(&s).unwrap();
    let rows = simulation_rows(&s, &out);
    let snapshots = out.snapshots.len();
    assert_eq!(snapshots, 6);
    let ratios = rows.iter().filter(|r| r.quantity == "contraction_ratio").count();
    assert_eq!(ratios, out.ratios.len());
    assert!(ratios >= 1);
    assert_eq!(rows.len(), snapshots * 2 + ratios);
}
