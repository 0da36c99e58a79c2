//! Advection fields `a(v)` and moment-determined force models
//! `F(t,x,v) = A(v) F^1(t,x)`.

use crate::error::{KineticError, Result};
use crate::fourier::ifft_in_place;
use crate::fourier::{
    drop_roundoff_modes, rfft, shift_derivative_multiplier, signed_mode, GridTaylor, TrigSeries,
};
use crate::phase_grid::{moment, MomentSpec, PhaseField, SpatialField};
use rustfft::num_complex::Complex64;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// Velocity-to-speed map of the transport operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AdvectionField {
    /// `a(v) = v`.
    Classical,
    /// `a(v) = v / sqrt(1 + v^2/c^2)`.
    Relativistic { c: f64 },
}

impl AdvectionField {
    pub fn relativistic(c: f64) -> Result<Self> {
        if c > 0.0 && c.is_finite() {
            Ok(AdvectionField::Relativistic { c })
        } else {
            Err(KineticError::Config(format!(
                "speed of light c = {c} must be positive"
            )))
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AdvectionField::Classical => "classical",
            AdvectionField::Relativistic { .. } => "relativistic",
        }
    }

    #[inline]
    pub fn eval(&self, v: f64) -> f64 {
        match *self {
            AdvectionField::Classical => v,
            AdvectionField::Relativistic { c } => v / (1.0 + v * v / (c * c)).sqrt(),
        }
    }

    /// `a'(v)`.
    #[inline]
    pub fn deriv(&self, v: f64) -> f64 {
        match *self {
            AdvectionField::Classical => 1.0,
            AdvectionField::Relativistic { c } => (1.0 + v * v / (c * c)).powf(-1.5),
        }
    }

    /// `a''(v)`.
    #[inline]
    pub fn deriv2(&self, v: f64) -> f64 {
        match *self {
            AdvectionField::Classical => 0.0,
            AdvectionField::Relativistic { c } => {
                let c2 = c * c;
                -3.0 * v / c2 * (1.0 + v * v / c2).powf(-2.5)
            }
        }
    }

    /// `a^{-1}(w)`; the relativistic map is only invertible for `|w| < c`.
    pub fn inverse(&self, w: f64) -> Result<f64> {
        match *self {
            AdvectionField::Classical => Ok(w),
            AdvectionField::Relativistic { c } => {
                if w.abs() >= c {
                    Err(KineticError::Domain(format!(
                        "|w| = {} is outside the range (-{c}, {c}) of a",
                        w.abs()
                    )))
                } else {
                    Ok(w / (1.0 - w * w / (c * c)).sqrt())
                }
            }
        }
    }

    /// Growth exponent of the inverse: `|a^{-1}(w)|` grows like `(1+|v|)^{1+lambda}`.
    pub fn lambda(&self) -> f64 {
        match self {
            AdvectionField::Classical => 0.0,
            AdvectionField::Relativistic { .. } => 2.0,
        }
    }

    /// Half-width of `a(R)` when bounded.
    pub fn range_bound(&self) -> Option<f64> {
        match *self {
            AdvectionField::Classical => None,
            AdvectionField::Relativistic { c } => Some(c),
        }
    }
}

pub fn advection_eval(a: &AdvectionField, v: f64) -> f64 {
    a.eval(v)
}

pub fn advection_inverse(a: &AdvectionField, w: f64) -> Result<f64> {
    a.inverse(w)
}

/// Force value and first/second derivatives at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ForceJet {
    pub f: f64,
    pub fx: f64,
    pub fv: f64,
    pub fxx: f64,
    pub fxv: f64,
    pub fvv: f64,
}

/// Force evaluator `(t,x,v) -> F`. Implementations are immutable and shareable.
pub trait ForceField: Send + Sync {
    fn value(&self, t: f64, x: f64, v: f64) -> f64 {
        self.jet(t, x, v).f
    }
    fn jet(&self, t: f64, x: f64, v: f64) -> ForceJet;
    /// True when the force is identically zero (lets callers skip work).
    fn is_zero(&self) -> bool {
        false
    }
}

/// `F = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroForce;

impl ForceField for ZeroForce {
    fn value(&self, _: f64, _: f64, _: f64) -> f64 {
        0.0
    }
    fn jet(&self, _: f64, _: f64, _: f64) -> ForceJet {
        ForceJet::default()
    }
    fn is_zero(&self) -> bool {
        true
    }
}

/// Closed-form force given by its jet.
#[derive(Clone)]
pub struct AnalyticForce {
    jet: Arc<dyn Fn(f64, f64, f64) -> ForceJet + Send + Sync>,
}

impl AnalyticForce {
    pub fn new(jet: impl Fn(f64, f64, f64) -> ForceJet + Send + Sync + 'static) -> Self {
        AnalyticForce { jet: Arc::new(jet) }
    }

    /// `F = amplitude * sin(2 pi mode x)`, constant in time and velocity.
    pub fn sine(amplitude: f64, mode: u32) -> Self {
        let k = 2.0 * PI * mode as f64;
        AnalyticForce::new(move |_, x, _| {
            let (s, c) = (k * x).sin_cos();
            ForceJet {
                f: amplitude * s,
                fx: amplitude * k * c,
                fxx: -amplitude * k * k * s,
                ..ForceJet::default()
            }
        })
    }
}

impl fmt::Debug for AnalyticForce {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("AnalyticForce")
    }
}

impl ForceField for AnalyticForce {
    fn jet(&self, t: f64, x: f64, v: f64) -> ForceJet {
        (self.jet)(t, x, v)
    }
}

/// Velocity factor `A(v)` with its first two derivatives.
#[derive(Clone)]
pub struct VelocityFactor {
    pub name: String,
    eval: Arc<dyn Fn(f64) -> [f64; 3] + Send + Sync>,
    unit: bool,
}

impl VelocityFactor {
    pub fn unit() -> Self {
        VelocityFactor {
            name: "unit".into(),
            eval: Arc::new(|_| [1.0, 0.0, 0.0]),
            unit: true,
        }
    }

    /// `f` returns `[A, A', A'']`.
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(f64) -> [f64; 3] + Send + Sync + 'static,
    ) -> Self {
        VelocityFactor {
            name: name.into(),
            eval: Arc::new(f),
            unit: false,
        }
    }

    #[inline]
    pub fn eval(&self, v: f64) -> [f64; 3] {
        if self.unit {
            [1.0, 0.0, 0.0]
        } else {
            (self.eval)(v)
        }
    }

    pub fn is_unit(&self) -> bool {
        self.unit
    }
}

impl fmt::Debug for VelocityFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VelocityFactor({})", self.name)
    }
}

/// Remainder bound of the nodal Taylor tables, relative to the series scale.
const FORCE_TAYLOR_TOL: f64 = 1e-15;

/// `A(v) F(x)` with `F` held as a trigonometric series (off-grid evaluation
/// by Fourier interpolation). Values go through nodal Taylor tables of the
/// same interpolant when the spectrum allows it.
#[derive(Debug, Clone)]
pub struct SpatialForce {
    series: TrigSeries,
    table: Option<GridTaylor>,
    factor: VelocityFactor,
    zero: bool,
}

impl SpatialForce {
    pub fn new(field: &SpatialField, factor: VelocityFactor) -> Self {
        let zero = field.values.iter().all(|&v| v == 0.0);
        let spec = rfft(&field.values);
        let scale = spec.iter().map(|c| c.norm()).sum::<f64>() / spec.len().max(1) as f64;
        let series = TrigSeries::from_spectrum(&spec);
        // Horner on the table against Clenshaw on the series, roughly.
        let table = GridTaylor::from_spectrum(&spec, FORCE_TAYLOR_TOL * scale)
            .filter(|t| t.order() + 4 < series.len());
        SpatialForce {
            series,
            table,
            factor,
            zero,
        }
    }

    /// Value of the spatial part alone.
    pub fn spatial(&self, x: f64) -> f64 {
        match &self.table {
            Some(t) => t.value(x),
            None => self.series.value(x),
        }
    }
}

impl ForceField for SpatialForce {
    fn value(&self, _: f64, x: f64, v: f64) -> f64 {
        if self.factor.is_unit() {
            self.spatial(x)
        } else {
            self.factor.eval(v)[0] * self.spatial(x)
        }
    }

    fn jet(&self, _: f64, x: f64, v: f64) -> ForceJet {
        let (f, fx, fxx) = self.series.jet(x);
        let [a, da, d2a] = self.factor.eval(v);
        ForceJet {
            f: a * f,
            fx: a * fx,
            fv: da * f,
            fxx: a * fxx,
            fxv: da * fx,
            fvv: d2a * f,
        }
    }

    fn is_zero(&self) -> bool {
        self.zero
    }
}

/// Interaction sign of the Poisson coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoissonSign {
    /// `+E` in the Vlasov equation (plasma).
    Repulsive,
    /// `-E` in the Vlasov equation (gravitation).
    Attractive,
}

impl PoissonSign {
    pub fn value(self) -> f64 {
        match self {
            PoissonSign::Repulsive => 1.0,
            PoissonSign::Attractive => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PoissonSign::Repulsive => "repulsive",
            PoissonSign::Attractive => "attractive",
        }
    }
}

/// Source of the spatial force component.
#[derive(Clone)]
pub enum ForceKind {
    Zero,
    External(Arc<dyn ForceField>),
    Poisson(PoissonSign),
    MomentForce { spec: MomentSpec, shift: f64 },
}

impl fmt::Debug for ForceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ForceKind::Zero => f.write_str("Zero"),
            ForceKind::External(_) => f.write_str("External"),
            ForceKind::Poisson(s) => write!(f, "Poisson({})", s.name()),
            ForceKind::MomentForce { spec, shift } => {
                write!(f, "MomentForce({}, shift {shift})", spec.name)
            }
        }
    }
}

/// Force model `F(t,x,v) = A(v) F^1(t,x)`.
#[derive(Debug, Clone)]
pub struct ForceModel {
    pub kind: ForceKind,
    pub factor: VelocityFactor,
}

impl ForceModel {
    pub fn zero() -> Self {
        ForceModel {
            kind: ForceKind::Zero,
            factor: VelocityFactor::unit(),
        }
    }

    pub fn poisson(sign: PoissonSign) -> Self {
        ForceModel {
            kind: ForceKind::Poisson(sign),
            factor: VelocityFactor::unit(),
        }
    }

    pub fn external(force: impl ForceField + 'static) -> Self {
        ForceModel {
            kind: ForceKind::External(Arc::new(force)),
            factor: VelocityFactor::unit(),
        }
    }

    pub fn moment_force(spec: MomentSpec, shift: f64) -> Self {
        ForceModel {
            kind: ForceKind::MomentForce { spec, shift },
            factor: VelocityFactor::unit(),
        }
    }

    pub fn with_factor(mut self, factor: VelocityFactor) -> Self {
        self.factor = factor;
        self
    }

    /// Whether the force depends on the solution (so Picard sweeps are needed).
    pub fn is_self_consistent(&self) -> bool {
        matches!(
            self.kind,
            ForceKind::Poisson(_) | ForceKind::MomentForce { .. }
        )
    }

    /// Moments the force is built from.
    pub fn moment_specs(&self) -> Vec<MomentSpec> {
        match &self.kind {
            ForceKind::Poisson(_) => vec![MomentSpec::density()],
            ForceKind::MomentForce { spec, .. } => vec![spec.clone()],
            _ => Vec::new(),
        }
    }

    /// The spatial component `F^1(t, x)` sampled on the grid of `f`.
    pub fn spatial_component(&self, f: &PhaseField) -> SpatialField {
        match &self.kind {
            ForceKind::Zero => SpatialField::new(vec![0.0; f.grid.nx], f.time),
            ForceKind::External(ext) => SpatialField::new(
                f.grid
                    .xs()
                    .iter()
                    .map(|&x| ext.value(f.time, x, 0.0))
                    .collect(),
                f.time,
            ),
            ForceKind::Poisson(sign) => poisson_force(&moment(f, &MomentSpec::density()), *sign),
            ForceKind::MomentForce { spec, shift } => moment_force(f, spec, *shift),
        }
    }
}

fn nonzero_modes_scale(spec: &[Complex64]) -> f64 {
    spec.iter().skip(1).map(|c| c.norm()).sum()
}

/// Force of the Poisson coupling: `sign * E` with `dE/dx = rho - mean(rho)`,
/// i.e. `E^(m) = -i rho^(m) / (2 pi m)` for `m != 0` and `E^(0) = 0`.
pub fn poisson_force(rho: &SpatialField, sign: PoissonSign) -> SpatialField {
    let nx = rho.nx;
    let mut spec = rfft(&rho.values);
    drop_roundoff_modes(&mut spec);
    for (k, c) in spec.iter_mut().enumerate() {
        let m = signed_mode(k, nx);
        if m == 0 || (nx % 2 == 0 && k == nx / 2) {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c *= Complex64::new(0.0, -sign.value() / (2.0 * PI * m as f64));
        }
    }
    ifft_in_place(&mut spec);
    SpatialField::new(spec.iter().map(|z| z.re).collect(), rho.time)
}

/// `sup_{m>=1} ||E_m||_{H^n} / ||rho_m||_{H^{n-1}} = sqrt(1 + 4 pi^2) / (2 pi)`,
/// attained on the first mode and independent of `n`.
pub fn poisson_gain_bound() -> f64 {
    (1.0 + 4.0 * PI * PI).sqrt() / (2.0 * PI)
}

/// `||E||_{H^n} / ||rho - mean||_{H^{n-1}}` computed spectrally.
pub fn poisson_gain_check(rho: &SpatialField, n: u32) -> Result<f64> {
    if n < 1 {
        return Err(KineticError::Config("gain check needs n >= 1".into()));
    }
    let nx = rho.nx;
    let spec = rfft(&rho.values);
    let scale = spec.iter().map(|c| c.norm()).sum::<f64>();
    if nonzero_modes_scale(&spec) <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
        return Err(KineticError::Domain(
            "density is constant: gain ratio undefined".into(),
        ));
    }
    let e = poisson_force(rho, PoissonSign::Repulsive);
    let espec = rfft(&e.values);
    let (mut num, mut den) = (0.0, 0.0);
    for k in 1..nx {
        if nx % 2 == 0 && k == nx / 2 {
            continue;
        }
        let w = 2.0 * PI * signed_mode(k, nx) as f64;
        let mult = 1.0 + w * w;
        num += mult.powi(n as i32) * espec[k].norm_sqr();
        den += mult.powi(n as i32 - 1) * spec[k].norm_sqr();
    }
    Ok((num / den).sqrt())
}

/// `m_psi(x + shift)` by an exact Fourier phase shift of the sampled moment.
pub fn moment_force(f: &PhaseField, spec: &MomentSpec, shift: f64) -> SpatialField {
    let m = moment(f, spec);
    if shift == 0.0 {
        return m;
    }
    let nx = m.nx;
    let mut buf = rfft(&m.values);
    for (k, c) in buf.iter_mut().enumerate() {
        *c *= shift_derivative_multiplier(k, nx, -shift, 0);
    }
    ifft_in_place(&mut buf);
    SpatialField::new(buf.iter().map(|z| z.re).collect(), m.time)
}

/// Build the force evaluator of `model` for the state `f`.
pub fn force_assemble(model: &ForceModel, f: &PhaseField) -> Result<Arc<dyn ForceField>> {
    match &model.kind {
        ForceKind::Zero => Ok(Arc::new(ZeroForce)),
        ForceKind::External(ext) => {
            if model.factor.is_unit() {
                Ok(ext.clone())
            } else {
                Err(KineticError::Config(
                    "external forces carry their own velocity dependence".into(),
                ))
            }
        }
        ForceKind::Poisson(_) => Ok(Arc::new(SpatialForce::new(
            &model.spatial_component(f),
            model.factor.clone(),
        ))),
        ForceKind::MomentForce { spec, .. } => {
            let g = &f.grid;
            let edge = spec.eval(g.v(0)).abs().max(spec.eval(g.v(g.nv - 1)).abs());
            if edge != 0.0 {
                return Err(KineticError::Config(format!(
                    "moment force needs psi '{}' compactly supported inside the velocity grid",
                    spec.name
                )));
            }
            Ok(Arc::new(SpatialForce::new(
                &model.spatial_component(f),
                model.factor.clone(),
            )))
        }
    }
}
