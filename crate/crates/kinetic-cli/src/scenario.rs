//! Scenario files: a TOML document with sections `[grid]`, `[advection]`,
//! `[model]`, `[initial]`, `[run]` and `[norms]`.
//!
//! Parsing consumes keys section by section; anything left over is an
//! unknown key, including keys that only make sense for a different `kind`.
//! [`ScenarioConfig::emit`] writes the canonical form with every default made
//! explicit, so `parse(emit(c)) == c` and emitting twice gives the same text.

use crate::error::{CliError, Result};
use kinetic::characteristics::DEFAULT_DT;
use kinetic::models::{AdvectionField, AnalyticForce, ForceModel, PoissonSign};
use kinetic::phase_grid::{build_grid, read_dump, Grid, MomentSpec, PhaseField};
use kinetic::profiles::{half_bump_derivative, interval_bump, maxwellian, mean_zero_bump};
use kinetic::solver::{NormRequest, Scenario, DEFAULT_PICARD_MAX, DEFAULT_PICARD_TOL};
use std::f64::consts::PI;
use std::path::Path;
use toml::{Table, Value};

pub const DEFAULT_OUTPUT_EVERY: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub nv: usize,
    pub v_cut: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdvectionSpec {
    Classical,
    Relativistic { c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PsiProfile {
    /// `exp(-1/(1-(2v)^2))` on `[-1/2, 1/2]`.
    HalfBump,
    /// Its derivative, mean zero.
    MeanZeroBump,
}

impl PsiProfile {
    fn name(self) -> &'static str {
        match self {
            PsiProfile::HalfBump => "half_bump",
            PsiProfile::MeanZeroBump => "mean_zero_bump",
        }
    }

    pub fn eval(self, v: f64) -> f64 {
        match self {
            PsiProfile::HalfBump => half_bump_derivative(v, 0),
            PsiProfile::MeanZeroBump => mean_zero_bump(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Zero,
    Poisson {
        sign: PoissonSign,
    },
    Moment {
        psi: PsiProfile,
        amplitude: f64,
        shift: f64,
    },
    Sine {
        amplitude: f64,
        mode: u32,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum XProfile {
    Cosine { eps: f64, mode: u32 },
    Indicator { lo: f64, hi: f64 },
    Bump { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum VProfile {
    Gaussian { vth: f64 },
    Bump { lo: f64, hi: f64 },
    MeanZeroBump,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    GaussianPerturbed {
        eps: f64,
        mode: u32,
        vth: f64,
    },
    File {
        path: String,
    },
    Product {
        x: XProfile,
        v: VProfile,
        amplitude: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub t_final: f64,
    pub dt: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub output_every: usize,
    pub weight_r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub grid: GridSpec,
    pub advection: AdvectionSpec,
    pub model: ModelSpec,
    pub initial: InitialSpec,
    pub run: RunSpec,
    pub norms: Vec<NormRequest>,
}

/// Keys of one section, removed as they are read.
struct Section {
    name: &'static str,
    table: Table,
}

impl Section {
    fn take(root: &mut Table, name: &'static str, required: bool) -> Result<Self> {
        match root.remove(name) {
            Some(Value::Table(table)) => Ok(Section { name, table }),
            Some(_) => Err(CliError::invalid(name, "must be a table")),
            None if required => Err(CliError::MissingKey(format!("[{name}]"))),
            None => Ok(Section {
                name,
                table: Table::new(),
            }),
        }
    }

    fn key(&self, k: &str) -> String {
        format!("{}.{k}", self.name)
    }

    fn raw(&mut self, k: &str) -> Option<Value> {
        self.table.remove(k)
    }

    fn float_opt(&mut self, k: &str) -> Result<Option<f64>> {
        match self.raw(k) {
            None => Ok(None),
            Some(Value::Float(x)) if x.is_finite() => Ok(Some(x)),
            Some(Value::Integer(i)) => Ok(Some(i as f64)),
            Some(_) => Err(CliError::invalid(&self.key(k), "must be a finite number")),
        }
    }

    fn float(&mut self, k: &str) -> Result<f64> {
        self.float_opt(k)?
            .ok_or_else(|| CliError::MissingKey(self.key(k)))
    }

    fn float_or(&mut self, k: &str, default: f64) -> Result<f64> {
        Ok(self.float_opt(k)?.unwrap_or(default))
    }

    fn int_opt(&mut self, k: &str) -> Result<Option<i64>> {
        match self.raw(k) {
            None => Ok(None),
            Some(Value::Integer(i)) => Ok(Some(i)),
            Some(_) => Err(CliError::invalid(&self.key(k), "must be an integer")),
        }
    }

    fn count(&mut self, k: &str, default: Option<usize>, min: usize) -> Result<usize> {
        let v = match (self.int_opt(k)?, default) {
            (Some(i), _) => i,
            (None, Some(d)) => return Ok(d),
            (None, None) => return Err(CliError::MissingKey(self.key(k))),
        };
        if v < min as i64 {
            return Err(CliError::invalid(
                &self.key(k),
                format!("must be at least {min} (got {v})"),
            ));
        }
        Ok(v as usize)
    }

    fn string(&mut self, k: &str) -> Result<String> {
        match self.raw(k) {
            Some(Value::String(s)) => Ok(s),
            Some(_) => Err(CliError::invalid(&self.key(k), "must be a string")),
            None => Err(CliError::MissingKey(self.key(k))),
        }
    }

    fn positive(&mut self, k: &str, default: Option<f64>) -> Result<f64> {
        let x = match default {
            Some(d) => self.float_or(k, d)?,
            None => self.float(k)?,
        };
        if x > 0.0 {
            Ok(x)
        } else {
            Err(CliError::invalid(
                &self.key(k),
                format!("must be positive (got {x})"),
            ))
        }
    }

    fn finish(self) -> Result<()> {
        match self.table.keys().next() {
            Some(k) => Err(CliError::UnknownKey(format!("{}.{k}", self.name))),
            None => Ok(()),
        }
    }
}

fn interval(sec: &mut Section, lo_key: &str, hi_key: &str) -> Result<(f64, f64)> {
    let lo = sec.float(lo_key)?;
    let hi = sec.float(hi_key)?;
    if lo < hi {
        Ok((lo, hi))
    } else {
        Err(CliError::invalid(
            &sec.key(hi_key),
            format!("must exceed {} (got {hi} <= {lo})", sec.key(lo_key)),
        ))
    }
}

fn mode(sec: &mut Section, k: &str) -> Result<u32> {
    Ok(sec.count(k, Some(1), 1)? as u32)
}

fn unknown_kind(sec: &Section, got: &str, allowed: &str) -> CliError {
    CliError::invalid(
        &sec.key("kind"),
        format!("must be one of {allowed} (got '{got}')"),
    )
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut root: Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::Syntax(e.to_string()))?;

        let mut sec = Section::take(&mut root, "grid", true)?;
        let nx = sec.count("nx", None, 1)?;
        if !nx.is_power_of_two() || nx < 4 {
            return Err(CliError::invalid(
                "grid.nx",
                format!("must be a power of two, at least 4 (got {nx})"),
            ));
        }
        let nv = sec.count("nv", None, 1)?;
        if !nv.is_power_of_two() || nv < 8 {
            return Err(CliError::invalid(
                "grid.nv",
                format!("must be a power of two, at least 8 (got {nv})"),
            ));
        }
        let v_cut = sec.positive("v_cut", None)?;
        sec.finish()?;
        let grid = GridSpec { nx, nv, v_cut };

        let mut sec = Section::take(&mut root, "advection", true)?;
        let kind = sec.string("kind")?;
        let advection = match kind.as_str() {
            "classical" => AdvectionSpec::Classical,
            "relativistic" => AdvectionSpec::Relativistic {
                c: sec.positive("c", None)?,
            },
            other => return Err(unknown_kind(&sec, other, "classical, relativistic")),
        };
        sec.finish()?;

        let mut sec = Section::take(&mut root, "model", true)?;
        let kind = sec.string("kind")?;
        let model = match kind.as_str() {
            "zero" => ModelSpec::Zero,
            "poisson" => {
                let sign = match sec.string("sign")?.as_str() {
                    "repulsive" => PoissonSign::Repulsive,
                    "attractive" => PoissonSign::Attractive,
                    other => {
                        return Err(CliError::invalid(
                            "model.sign",
                            format!("must be repulsive or attractive (got '{other}')"),
                        ))
                    }
                };
                ModelSpec::Poisson { sign }
            }
            "moment" => {
                let psi = match sec.string("psi")?.as_str() {
                    "half_bump" => PsiProfile::HalfBump,
                    "mean_zero_bump" => PsiProfile::MeanZeroBump,
                    other => {
                        return Err(CliError::invalid(
                            "model.psi",
                            format!("must be half_bump or mean_zero_bump (got '{other}')"),
                        ))
                    }
                };
                ModelSpec::Moment {
                    psi,
                    amplitude: sec.float_or("amplitude", 1.0)?,
                    shift: sec.float_or("shift", 0.0)?,
                }
            }
            "sine" => ModelSpec::Sine {
                amplitude: sec.float("amplitude")?,
                mode: mode(&mut sec, "mode")?,
            },
            other => return Err(unknown_kind(&sec, other, "zero, poisson, moment, sine")),
        };
        sec.finish()?;

        let mut sec = Section::take(&mut root, "initial", true)?;
        let kind = sec.string("kind")?;
        let initial = match kind.as_str() {
            "gaussian_perturbed" => InitialSpec::GaussianPerturbed {
                eps: sec.float_or("eps", 0.1)?,
                mode: mode(&mut sec, "mode")?,
                vth: sec.positive("vth", Some(1.0))?,
            },
            "file" => InitialSpec::File {
                path: sec.string("path")?,
            },
            "product" => {
                let x = match sec.string("x_profile")?.as_str() {
                    "cosine" => XProfile::Cosine {
                        eps: sec.float_or("x_eps", 0.1)?,
                        mode: mode(&mut sec, "x_mode")?,
                    },
                    "indicator" => {
                        let (lo, hi) = interval(&mut sec, "x_lo", "x_hi")?;
                        XProfile::Indicator { lo, hi }
                    }
                    "bump" => {
                        let (lo, hi) = interval(&mut sec, "x_lo", "x_hi")?;
                        XProfile::Bump { lo, hi }
                    }
                    other => {
                        return Err(CliError::invalid(
                            "initial.x_profile",
                            format!("must be cosine, indicator or bump (got '{other}')"),
                        ))
                    }
                };
                let v = match sec.string("v_profile")?.as_str() {
                    "gaussian" => VProfile::Gaussian {
                        vth: sec.positive("vth", Some(1.0))?,
                    },
                    "bump" => {
                        let (lo, hi) = interval(&mut sec, "v_lo", "v_hi")?;
                        VProfile::Bump { lo, hi }
                    }
                    "mean_zero_bump" => VProfile::MeanZeroBump,
                    other => {
                        return Err(CliError::invalid(
                            "initial.v_profile",
                            format!("must be gaussian, bump or mean_zero_bump (got '{other}')"),
                        ))
                    }
                };
                InitialSpec::Product {
                    x,
                    v,
                    amplitude: sec.float_or("amplitude", 1.0)?,
                }
            }
            other => return Err(unknown_kind(&sec, other, "gaussian_perturbed, file, product")),
        };
        sec.finish()?;

        let mut sec = Section::take(&mut root, "run", true)?;
        let run = RunSpec {
            t_final: sec.positive("t_final", None)?,
            dt: sec.positive("dt", Some(DEFAULT_DT))?,
            picard_tol: sec.positive("picard_tol", Some(DEFAULT_PICARD_TOL))?,
            picard_max: sec.count("picard_max", Some(DEFAULT_PICARD_MAX), 1)?,
            output_every: sec.count("output_every", Some(DEFAULT_OUTPUT_EVERY), 1)?,
            weight_r: sec.float_or("weight_r", 0.0)?,
        };
        if run.weight_r < 0.0 {
            return Err(CliError::invalid("run.weight_r", "must be nonnegative"));
        }
        sec.finish()?;

        let mut sec = Section::take(&mut root, "norms", false)?;
        let norms = match sec.raw("requests") {
            None => Vec::new(),
            Some(Value::Array(items)) => items
                .iter()
                .map(|item| match item {
                    Value::String(s) => NormRequest::parse(s)
                        .map_err(|e| CliError::invalid("norms.requests", e.to_string())),
                    _ => Err(CliError::invalid(
                        "norms.requests",
                        "must be a list of \"kind:k:r\" strings",
                    )),
                })
                .collect::<Result<_>>()?,
            Some(_) => {
                return Err(CliError::invalid(
                    "norms.requests",
                    "must be a list of \"kind:k:r\" strings",
                ))
            }
        };
        sec.finish()?;

        if let Some(k) = root.keys().next() {
            return Err(CliError::UnknownKey(k.clone()));
        }
        Ok(ScenarioConfig {
            grid,
            advection,
            model,
            initial,
            run,
            norms,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
            CliError::Io(format!("{}: {e}", path.as_ref().display()))
        })?;
        Self::parse(&text)
    }

    /// Canonical TOML text with all defaults explicit.
    pub fn emit(&self) -> String {
        let mut root = Table::new();
        let mut t = Table::new();
        t.insert("nx".into(), Value::Integer(self.grid.nx as i64));
        t.insert("nv".into(), Value::Integer(self.grid.nv as i64));
        t.insert("v_cut".into(), Value::Float(self.grid.v_cut));
        root.insert("grid".into(), Value::Table(t));

        let mut t = Table::new();
        match self.advection {
            AdvectionSpec::Classical => {
                t.insert("kind".into(), "classical".into());
            }
            AdvectionSpec::Relativistic { c } => {
                t.insert("kind".into(), "relativistic".into());
                t.insert("c".into(), Value::Float(c));
            }
        }
        root.insert("advection".into(), Value::Table(t));

        let mut t = Table::new();
        match &self.model {
            ModelSpec::Zero => {
                t.insert("kind".into(), "zero".into());
            }
            ModelSpec::Poisson { sign } => {
                t.insert("kind".into(), "poisson".into());
                t.insert("sign".into(), sign.name().into());
            }
            ModelSpec::Moment {
                psi,
                amplitude,
                shift,
            } => {
                t.insert("kind".into(), "moment".into());
                t.insert("psi".into(), psi.name().into());
                t.insert("amplitude".into(), Value::Float(*amplitude));
                t.insert("shift".into(), Value::Float(*shift));
            }
            ModelSpec::Sine { amplitude, mode } => {
                t.insert("kind".into(), "sine".into());
                t.insert("amplitude".into(), Value::Float(*amplitude));
                t.insert("mode".into(), Value::Integer(*mode as i64));
            }
        }
        root.insert("model".into(), Value::Table(t));

        let mut t = Table::new();
        match &self.initial {
            InitialSpec::GaussianPerturbed { eps, mode, vth } => {
                t.insert("kind".into(), "gaussian_perturbed".into());
                t.insert("eps".into(), Value::Float(*eps));
                t.insert("mode".into(), Value::Integer(*mode as i64));
                t.insert("vth".into(), Value::Float(*vth));
            }
            InitialSpec::File { path } => {
                t.insert("kind".into(), "file".into());
                t.insert("path".into(), path.as_str().into());
            }
            InitialSpec::Product { x, v, amplitude } => {
                t.insert("kind".into(), "product".into());
                t.insert("amplitude".into(), Value::Float(*amplitude));
                match *x {
                    XProfile::Cosine { eps, mode } => {
                        t.insert("x_profile".into(), "cosine".into());
                        t.insert("x_eps".into(), Value::Float(eps));
                        t.insert("x_mode".into(), Value::Integer(mode as i64));
                    }
                    XProfile::Indicator { lo, hi } | XProfile::Bump { lo, hi } => {
                        let name = if matches!(x, XProfile::Bump { .. }) {
                            "bump"
                        } else {
                            "indicator"
                        };
                        t.insert("x_profile".into(), name.into());
                        t.insert("x_lo".into(), Value::Float(lo));
                        t.insert("x_hi".into(), Value::Float(hi));
                    }
                }
                match *v {
                    VProfile::Gaussian { vth } => {
                        t.insert("v_profile".into(), "gaussian".into());
                        t.insert("vth".into(), Value::Float(vth));
                    }
                    VProfile::Bump { lo, hi } => {
                        t.insert("v_profile".into(), "bump".into());
                        t.insert("v_lo".into(), Value::Float(lo));
                        t.insert("v_hi".into(), Value::Float(hi));
                    }
                    VProfile::MeanZeroBump => {
                        t.insert("v_profile".into(), "mean_zero_bump".into());
                    }
                }
            }
        }
        root.insert("initial".into(), Value::Table(t));

        let mut t = Table::new();
        t.insert("t_final".into(), Value::Float(self.run.t_final));
        t.insert("dt".into(), Value::Float(self.run.dt));
        t.insert("picard_tol".into(), Value::Float(self.run.picard_tol));
        t.insert(
            "picard_max".into(),
            Value::Integer(self.run.picard_max as i64),
        );
        t.insert(
            "output_every".into(),
            Value::Integer(self.run.output_every as i64),
        );
        t.insert("weight_r".into(), Value::Float(self.run.weight_r));
        root.insert("run".into(), Value::Table(t));

        let mut t = Table::new();
        t.insert(
            "requests".into(),
            Value::Array(
                self.norms
                    .iter()
                    .map(|r| Value::String(r.to_string()))
                    .collect(),
            ),
        );
        root.insert("norms".into(), Value::Table(t));

        toml::to_string(&root).expect("a table of plain values always serializes")
    }

    pub fn grid(&self) -> Result<Grid> {
        build_grid(self.grid.nx, self.grid.nv, self.grid.v_cut)
            .map_err(|e| CliError::invalid("grid", e.to_string()))
    }

    pub fn advection(&self) -> Result<AdvectionField> {
        Ok(match self.advection {
            AdvectionSpec::Classical => AdvectionField::Classical,
            AdvectionSpec::Relativistic { c } => AdvectionField::relativistic(c)
                .map_err(|e| CliError::invalid("advection.c", e.to_string()))?,
        })
    }

    pub fn force_model(&self) -> ForceModel {
        match self.model {
            ModelSpec::Zero => ForceModel::zero(),
            ModelSpec::Poisson { sign } => ForceModel::poisson(sign),
            ModelSpec::Moment {
                psi,
                amplitude,
                shift,
            } => ForceModel::moment_force(
                MomentSpec::new(psi.name(), move |v| amplitude * psi.eval(v), 0.0, 3),
                shift,
            ),
            ModelSpec::Sine { amplitude, mode } => {
                ForceModel::external(AnalyticForce::sine(amplitude, mode))
            }
        }
    }

    /// Initial data on the scenario grid; file paths resolve against `base`.
    pub fn initial_field(&self, base: &Path) -> Result<PhaseField> {
        let grid = self.grid()?;
        match &self.initial {
            InitialSpec::GaussianPerturbed { eps, mode, vth } => Ok(PhaseField::from_fn(
                grid,
                |x, v| (1.0 + eps * (2.0 * PI * *mode as f64 * x).cos()) * maxwellian(v, *vth),
            )),
            InitialSpec::File { path } => {
                let f = read_dump(base.join(path))?;
                if f.grid != grid {
                    return Err(CliError::invalid(
                        "initial.path",
                        format!("dump grid {} does not match [grid]", f.grid.tag()),
                    ));
                }
                Ok(f.with_time(0.0))
            }
            InitialSpec::Product { x, v, amplitude } => {
                let fx = |s: f64| match *x {
                    XProfile::Cosine { eps, mode } => 1.0 + eps * (2.0 * PI * mode as f64 * s).cos(),
                    XProfile::Indicator { lo, hi } => {
                        let y = s - (s - lo).div_euclid(1.0);
                        if y <= hi {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    XProfile::Bump { lo, hi } => {
                        // periodic images of a bump narrower than the torus
                        (-1..=1).map(|p| interval_bump(s + p as f64, lo, hi)).sum()
                    }
                };
                let fv = |u: f64| match *v {
                    VProfile::Gaussian { vth } => maxwellian(u, vth),
                    VProfile::Bump { lo, hi } => interval_bump(u, lo, hi),
                    VProfile::MeanZeroBump => mean_zero_bump(u),
                };
                Ok(PhaseField::from_fn(grid, |s, u| amplitude * fx(s) * fv(u)))
            }
        }
    }

    /// The solver scenario. Validation of the initial data happens here.
    pub fn build(&self, base: &Path) -> Result<Scenario> {
        let f0 = self.initial_field(base)?;
        let mut s = Scenario::new(self.advection()?, self.force_model(), f0, self.run.t_final);
        s.dt = self.run.dt;
        s.picard_tol = self.run.picard_tol;
        s.picard_max = self.run.picard_max;
        s.output_every = self.run.output_every;
        s.weight_r = self.run.weight_r;
        s.norm_requests = self.norms.clone();
        s.validate()?;
        Ok(s)
    }
}
