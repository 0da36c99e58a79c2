use clap::{Parser, Subcommand};
use kinetic::averaging::{smoothing_ratio, Kernel};
use kinetic::models::force_assemble;
use kinetic::operators::{commutation_check, CosGaussian};
use kinetic::phase_grid::{build_grid, compute_thresholds, write_dump};
use kinetic::solver::{find_horizon, run_simulation};
use kinetic_cli::counterexamples::{
    counterexample1, counterexample_superposition, SuperpositionSetup, Which,
};
use kinetic_cli::report::{emit_ratio_table, emit_report, simulation_rows, ReportRow};
use kinetic_cli::scenario::ScenarioConfig;
use kinetic_cli::{CliError, Result};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "kinetic", about = "1D1V Vlasov laboratory", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its norm and contraction history.
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Shrink the final time until the Picard ratios pass the gate.
        #[arg(long)]
        horizon: bool,
        /// Bisection steps after halving, with --horizon.
        #[arg(long, default_value_t = 4)]
        refinements: usize,
        /// Write every snapshot as a binary grid dump into this directory.
        #[arg(long)]
        dump_dir: Option<PathBuf>,
    },
    /// Density-derivative norms of free transport from a zero-density start.
    Counterexample1 {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decoupling residual of the driver/passive splitting.
    Superposition {
        #[arg(long)]
        which: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Commutation residual of the second-order operator over grid halvings.
    CommutationCheck {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 4)]
        levels: u32,
    },
    /// Smoothing-ratio table of the averaging operator.
    AveragingProbe {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 32)]
        modes: u32,
        #[arg(long, default_value_t = 0)]
        quadrature_level: u32,
    },
    /// Regularity and integrability thresholds (N, R).
    Thresholds {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        r0: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn simulate(
    path: &Path,
    out: &Path,
    horizon: bool,
    refinements: usize,
    dump_dir: Option<&Path>,
) -> Result<()> {
    let cfg = ScenarioConfig::load(path)?;
    let scenario = cfg.build(&base_dir(path))?;
    let (scenario, result) = if horizon {
        let (t, res) = find_horizon(&scenario, refinements)?;
        eprintln!("horizon: t_final = {t}");
        (scenario.with_t_final(t), res)
    } else {
        let res = run_simulation(&scenario)?;
        (scenario, res)
    };
    if let Some(dir) = dump_dir {
        std::fs::create_dir_all(dir)?;
        for (k, f) in result.snapshots.iter().enumerate() {
            write_dump(dir.join(format!("snapshot_{k:05}.bin")), f)?;
        }
    }
    emit_report(&simulation_rows(&scenario, &result), out)
}

fn example1(k: u32, t: f64, out: &Path) -> Result<()> {
    let r = counterexample1(k, t)?;
    let params = format!("k={k}");
    let rows = [
        ("exact", r.exact),
        ("quadrature", r.quadrature),
        ("transported", r.transported),
    ]
    .iter()
    .map(|&(q, v)| ReportRow::new(t, q, params.as_str(), v, "line"))
    .collect::<Vec<_>>();
    emit_report(&rows, out)
}

fn superposition(which: &str, out: &Path) -> Result<()> {
    let setup = match Which::parse(which)? {
        Which::Example2 => SuperpositionSetup::example2(),
        Which::Example3 => SuperpositionSetup::example3(),
    };
    let r = counterexample_superposition(&setup)?;
    let tag = setup.grid.tag();
    let name = r.which.name();
    let mut rows = Vec::new();
    for ((&t, &res), &c) in r.times.iter().zip(&r.residual).zip(&r.contact) {
        rows.push(ReportRow::new(t, "decoupling_residual", name, res, tag.as_str()));
        rows.push(ReportRow::new(t, "contact_indicator", name, c, tag.as_str()));
    }
    let t_end = *r.times.last().unwrap_or(&0.0);
    if let Some(tc) = r.contact_time {
        rows.push(ReportRow::new(tc, "contact_time", name, tc, tag.as_str()));
    }
    rows.push(ReportRow::new(t_end, "step_error", name, r.step_error, tag.as_str()));
    rows.push(ReportRow::new(t_end, "pre_contact_max", name, r.pre_contact_max, tag.as_str()));
    rows.push(ReportRow::new(t_end, "post_contact_max", name, r.post_contact_max, tag.as_str()));
    emit_report(&rows, out)
}

fn commutation(path: &Path, out: &Path, levels: u32) -> Result<()> {
    if levels < 2 {
        return Err(CliError::invalid("--levels", "must be at least 2"));
    }
    let cfg = ScenarioConfig::load(path)?;
    let scenario = cfg.build(&base_dir(path))?;
    let force = force_assemble(&scenario.model, &scenario.f0)?;
    let t = scenario.t_final.min(0.05);
    let g = CosGaussian::default();
    let mut rows = Vec::new();
    let mut prev: Option<f64> = None;
    for l in 0..levels {
        let c = levels - 1 - l;
        let (nx, nv) = (scenario.grid.nx >> c, scenario.grid.nv >> c);
        let grid = build_grid(nx, nv, scenario.grid.v_cut)
            .map_err(|e| CliError::invalid("grid", format!("level {l}: {e}")))?;
        let dt = (scenario.dt * (1u64 << c) as f64).min(0.5 * t);
        let r = commutation_check(force.as_ref(), &scenario.advection, &g, &grid, t, dt)?;
        let params = format!("level={l}");
        rows.push(ReportRow::new(t, "commutation_residual", params.as_str(), r, grid.tag()));
        if let Some(p) = prev {
            rows.push(ReportRow::new(t, "observed_order", params.as_str(), (p / r).log2(), grid.tag()));
        }
        prev = Some(r);
    }
    emit_report(&rows, out)
}

fn averaging(path: &Path, out: &Path, modes: u32, level: u32) -> Result<()> {
    let cfg = ScenarioConfig::load(path)?;
    let scenario = cfg.build(&base_dir(path))?;
    let list: Vec<u32> = (1..=modes).collect();
    let mut rows = Vec::new();
    for kernel in [Kernel::gaussian(), Kernel::narrow_bump(0.05)] {
        let cert = kernel.certificate(scenario.advection.lambda());
        eprintln!(
            "kernel {}: certified {} (shortfall {})",
            kernel.id,
            cert.certified(),
            cert.shortfall
        );
        rows.extend(smoothing_ratio(
            &kernel,
            &scenario.advection,
            &scenario.grid,
            &list,
            scenario.t_final,
            level,
        )?);
    }
    emit_ratio_table(&rows, out)
}

fn thresholds(d: u32, lambda: f64, r0: f64, out: &Path) -> Result<()> {
    let (n, r) = compute_thresholds(d, lambda, r0)?;
    let params = format!("d={d};lambda={lambda};r0={r0}");
    emit_report(
        &[
            ReportRow::new(0.0, "N", params.as_str(), n, "none"),
            ReportRow::new(0.0, "R", params.as_str(), r, "none"),
        ],
        out,
    )
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            scenario,
            out,
            horizon,
            refinements,
            dump_dir,
        } => simulate(&scenario, &out, horizon, refinements, dump_dir.as_deref()),
        Command::Counterexample1 { k, t, out } => example1(k, t, &out),
        Command::Superposition { which, out } => superposition(&which, &out),
        Command::CommutationCheck {
            scenario,
            out,
            levels,
        } => commutation(&scenario, &out, levels),
        Command::AveragingProbe {
            scenario,
            out,
            modes,
            quadrature_level,
        } => averaging(&scenario, &out, modes, quadrature_level),
        Command::Thresholds { d, lambda, r0, out } => thresholds(d, lambda, r0, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
