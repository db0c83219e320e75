//! Scalar and vector fields over `(t, x)` with optional analytic partial
//! derivatives, plus the finite-difference engine used wherever analytic
//! derivatives are absent.
//!
//! Fields are complex-valued; finite differences act componentwise on the
//! real and imaginary parts (differencing the complex values directly does
//! exactly that). A field constructed with analytic partials is expected to
//! keep them consistent with central differences of its values; see
//! [`verify_analytic_partials`].

use crate::{C64, Error, Result};
use std::sync::Arc;

type ValueFn = dyn Fn(f64, &[f64]) -> C64 + Send + Sync;
type Partial1Fn = dyn Fn(usize, f64, &[f64]) -> C64 + Send + Sync;
type Partial2Fn = dyn Fn(usize, usize, f64, &[f64]) -> C64 + Send + Sync;
type Real1Fn = dyn Fn(f64) -> f64 + Send + Sync;

const NAN_C: C64 = C64::new(f64::NAN, f64::NAN);

/// Spatial domain descriptor.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// All of `R^d`.
    All { dim: usize },
    /// Axis-aligned box `[lo, hi]`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Spherical shell `r_min <= |x| <= r_max`.
    Radial { dim: usize, r_min: f64, r_max: f64 },
}

impl Domain {
    pub fn all(dim: usize) -> Self {
        Domain::All { dim }
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::Invalid("box bounds must have equal nonzero length".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
            return Err(Error::Invalid("box bounds must satisfy lo < hi per axis".into()));
        }
        Ok(Domain::Box { lo, hi })
    }

    pub fn radial(dim: usize, r_min: f64, r_max: f64) -> Result<Self> {
        if !(r_min >= 0.0 && r_min < r_max) {
            return Err(Error::Invalid(format!(
                "radial bounds must satisfy 0 <= r_min < r_max (got {r_min}, {r_max})"
            )));
        }
        Ok(Domain::Radial { dim, r_min, r_max })
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::All { dim } => *dim,
            Domain::Box { lo, .. } => lo.len(),
            Domain::Radial { dim, .. } => *dim,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            Domain::All { .. } => true,
            Domain::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(xi, (l, h))| xi >= l && xi <= h),
            Domain::Radial { r_min, r_max, .. } => {
                let r = norm(x);
                r >= *r_min && r <= *r_max
            }
        }
    }

    /// Distance from `x` to the nearest boundary; infinite for [`Domain::All`].
    /// Negative when `x` lies outside.
    pub fn margin(&self, x: &[f64]) -> f64 {
        match self {
            Domain::All { .. } => f64::INFINITY,
            Domain::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(xi, (l, h))| (xi - l).min(h - xi))
                .fold(f64::INFINITY, f64::min),
            Domain::Radial { r_min, r_max, .. } => {
                let r = norm(x);
                (r - r_min).min(r_max - r)
            }
        }
    }

    fn intersect(&self, other: &Domain) -> Result<Domain> {
        if self.dim() != other.dim() {
            return Err(Error::Invalid("domain dimensions differ".into()));
        }
        match (self, other) {
            (Domain::All { .. }, d) | (d, Domain::All { .. }) => Ok(d.clone()),
            (Domain::Box { lo: a, hi: b }, Domain::Box { lo: c, hi: d }) => Domain::boxed(
                a.iter().zip(c).map(|(x, y)| x.max(*y)).collect(),
                b.iter().zip(d).map(|(x, y)| x.min(*y)).collect(),
            ),
            (
                Domain::Radial { dim, r_min: a, r_max: b },
                Domain::Radial { r_min: c, r_max: d, .. },
            ) => Domain::radial(*dim, a.max(*c), b.min(*d)),
            _ => Err(Error::Invalid("cannot intersect box and radial domains".into())),
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Complex scalar field `(t, x) -> C` with optional analytic first/second
/// spatial partials and time derivative.
#[derive(Clone)]
pub struct ScalarField {
    domain: Domain,
    value: Arc<ValueFn>,
    dt: Option<Arc<ValueFn>>,
    d1: Option<Arc<Partial1Fn>>,
    d2: Option<Arc<Partial2Fn>>,
}

impl ScalarField {
    pub fn from_fn<F>(dim: usize, value: F) -> Self
    where
        F: Fn(f64, &[f64]) -> C64 + Send + Sync + 'static,
    {
        Self {
            domain: Domain::all(dim),
            value: Arc::new(value),
            dt: None,
            d1: None,
            d2: None,
        }
    }

    pub fn with_domain(mut self, domain: Domain) -> Result<Self> {
        if domain.dim() != self.dim() {
            return Err(Error::Invalid("domain dimension mismatch".into()));
        }
        self.domain = domain;
        Ok(self)
    }

    pub fn with_time_derivative<F>(mut self, dt: F) -> Self
    where
        F: Fn(f64, &[f64]) -> C64 + Send + Sync + 'static,
    {
        self.dt = Some(Arc::new(dt));
        self
    }

    pub fn with_gradient<F>(mut self, d1: F) -> Self
    where
        F: Fn(usize, f64, &[f64]) -> C64 + Send + Sync + 'static,
    {
        self.d1 = Some(Arc::new(d1));
        self
    }

    pub fn with_hessian<F>(mut self, d2: F) -> Self
    where
        F: Fn(usize, usize, f64, &[f64]) -> C64 + Send + Sync + 'static,
    {
        self.d2 = Some(Arc::new(d2));
        self
    }

    /// Constant field.
    pub fn constant(dim: usize, c: C64) -> Self {
        ScalarField::from_fn(dim, move |_, _| c)
            .with_time_derivative(|_, _| C64::new(0.0, 0.0))
            .with_gradient(|_, _, _| C64::new(0.0, 0.0))
            .with_hessian(|_, _, _, _| C64::new(0.0, 0.0))
    }

    /// The coordinate field `x_k`.
    pub fn coordinate(dim: usize, k: usize) -> Self {
        ScalarField::from_fn(dim, move |_, x| C64::new(x[k], 0.0))
            .with_time_derivative(|_, _| C64::new(0.0, 0.0))
            .with_gradient(move |j, _, _| C64::new(if j == k { 1.0 } else { 0.0 }, 0.0))
            .with_hessian(|_, _, _, _| C64::new(0.0, 0.0))
    }

    /// The linear form `sum_k coeffs[k] * x_k`.
    pub fn linear_form(coeffs: Vec<C64>) -> Self {
        let dim = coeffs.len();
        let c1 = coeffs.clone();
        ScalarField::from_fn(dim, move |_, x| {
            x.iter()
                .zip(&coeffs)
                .map(|(xi, c)| c * C64::new(*xi, 0.0))
                .sum()
        })
        .with_time_derivative(|_, _| C64::new(0.0, 0.0))
        .with_gradient(move |k, _, _| c1[k])
        .with_hessian(|_, _, _, _| C64::new(0.0, 0.0))
    }

    /// A purely temporal field `f(t)` with analytic time derivative.
    pub fn of_time<F, G>(dim: usize, f: F, dfdt: G) -> Self
    where
        F: Fn(f64) -> C64 + Send + Sync + 'static,
        G: Fn(f64) -> C64 + Send + Sync + 'static,
    {
        ScalarField::from_fn(dim, move |t, _| f(t))
            .with_time_derivative(move |t, _| dfdt(t))
            .with_gradient(|_, _, _| C64::new(0.0, 0.0))
            .with_hessian(|_, _, _, _| C64::new(0.0, 0.0))
    }

    /// Separable product `tau(t) * g(x)` of a temporal factor and a static
    /// spatial field.
    pub fn modulate<F, G>(time: F, dtime: G, spatial: &ScalarField) -> Self
    where
        F: Fn(f64) -> C64 + Send + Sync + 'static,
        G: Fn(f64) -> C64 + Send + Sync + 'static,
    {
        let time = Arc::new(time);
        let g = spatial.clone();
        let mut out = ScalarField {
            domain: spatial.domain.clone(),
            value: {
                let time = time.clone();
                let g = g.clone();
                Arc::new(move |t, x| time(t) * (g.value)(t, x))
            },
            dt: Some({
                let g = g.clone();
                Arc::new(move |t, x| dtime(t) * (g.value)(t, x))
            }),
            d1: None,
            d2: None,
        };
        if let Some(d1) = spatial.d1.clone() {
            let time = time.clone();
            out.d1 = Some(Arc::new(move |k, t, x| time(t) * d1(k, t, x)));
        }
        if let Some(d2) = spatial.d2.clone() {
            out.d2 = Some(Arc::new(move |j, k, t, x| time(t) * d2(j, k, t, x)));
        }
        out
    }

    /// Spherically symmetric field from a one-dimensional radial profile.
    /// Analytic partials are produced when the profile has them.
    pub fn from_radial(profile: &Field1D, dim: usize) -> Self {
        let p = profile.clone();
        let domain = Domain::Radial {
            dim,
            r_min: profile.lo(),
            r_max: profile.hi(),
        };
        let mut out = ScalarField {
            domain,
            value: {
                let p = p.clone();
                Arc::new(move |_, x| C64::new((p.value)(norm(x)), 0.0))
            },
            dt: Some(Arc::new(|_, _| C64::new(0.0, 0.0))),
            d1: None,
            d2: None,
        };
        if let Some(d1) = p.d1.clone() {
            let g1 = d1.clone();
            out.d1 = Some(Arc::new(move |k, _, x| {
                let r = norm(x);
                C64::new(g1(r) * x[k] / r, 0.0)
            }));
            if let Some(d2) = p.d2.clone() {
                out.d2 = Some(Arc::new(move |j, k, _, x| {
                    let r = norm(x);
                    let unit_jk = x[j] * x[k] / (r * r);
                    let delta = if j == k { 1.0 } else { 0.0 };
                    C64::new(d2(r) * unit_jk + d1(r) * (delta - unit_jk) / r, 0.0)
                }));
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn has_time_derivative(&self) -> bool {
        self.dt.is_some()
    }

    pub fn has_gradient(&self) -> bool {
        self.d1.is_some()
    }

    pub fn has_hessian(&self) -> bool {
        self.d2.is_some()
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> Result<C64> {
        self.check_point(x)?;
        Ok((self.value)(t, x))
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Invalid(format!(
                "point dimension {} does not match field dimension {}",
                x.len(),
                self.dim()
            )));
        }
        if !self.domain.contains(x) {
            return Err(Error::OutOfDomain(format!("point {x:?}")));
        }
        Ok(())
    }

    fn raw(&self, t: f64, x: &[f64]) -> C64 {
        (self.value)(t, x)
    }

    /// Pointwise sum; analytic partials survive when both sides carry them.
    pub fn add(&self, other: &ScalarField) -> Result<ScalarField> {
        let domain = self.domain.intersect(&other.domain)?;
        let (a, b) = (self.clone(), other.clone());
        let mut out = ScalarField {
            domain,
            value: {
                let (a, b) = (a.clone(), b.clone());
                Arc::new(move |t, x| (a.value)(t, x) + (b.value)(t, x))
            },
            dt: None,
            d1: None,
            d2: None,
        };
        if let (Some(fa), Some(fb)) = (a.dt.clone(), b.dt.clone()) {
            out.dt = Some(Arc::new(move |t, x| fa(t, x) + fb(t, x)));
        }
        if let (Some(fa), Some(fb)) = (a.d1.clone(), b.d1.clone()) {
            out.d1 = Some(Arc::new(move |k, t, x| fa(k, t, x) + fb(k, t, x)));
        }
        if let (Some(fa), Some(fb)) = (a.d2.clone(), b.d2.clone()) {
            out.d2 = Some(Arc::new(move |j, k, t, x| fa(j, k, t, x) + fb(j, k, t, x)));
        }
        Ok(out)
    }

    /// Pointwise scaling by a complex constant.
    pub fn scale(&self, c: C64) -> ScalarField {
        let f = self.clone();
        let mut out = ScalarField {
            domain: f.domain.clone(),
            value: {
                let v = f.value.clone();
                Arc::new(move |t, x| c * v(t, x))
            },
            dt: None,
            d1: None,
            d2: None,
        };
        if let Some(g) = f.dt.clone() {
            out.dt = Some(Arc::new(move |t, x| c * g(t, x)));
        }
        if let Some(g) = f.d1.clone() {
            out.d1 = Some(Arc::new(move |k, t, x| c * g(k, t, x)));
        }
        if let Some(g) = f.d2.clone() {
            out.d2 = Some(Arc::new(move |j, k, t, x| c * g(j, k, t, x)));
        }
        out
    }

    /// Pointwise constant offset; all derivatives unchanged.
    pub fn offset(&self, c: C64) -> ScalarField {
        let f = self.clone();
        ScalarField {
            domain: f.domain.clone(),
            value: {
                let v = f.value.clone();
                Arc::new(move |t, x| v(t, x) + c)
            },
            dt: f.dt,
            d1: f.d1,
            d2: f.d2,
        }
    }

    /// `exp(f)` with chain-rule partials.
    pub fn exp(&self) -> ScalarField {
        let f = self.clone();
        let mut out = ScalarField {
            domain: f.domain.clone(),
            value: {
                let v = f.value.clone();
                Arc::new(move |t, x| v(t, x).exp())
            },
            dt: None,
            d1: None,
            d2: None,
        };
        if let Some(g) = f.dt.clone() {
            let v = f.value.clone();
            out.dt = Some(Arc::new(move |t, x| v(t, x).exp() * g(t, x)));
        }
        if let Some(g1) = f.d1.clone() {
            let v = f.value.clone();
            let g = g1.clone();
            out.d1 = Some(Arc::new(move |k, t, x| v(t, x).exp() * g(k, t, x)));
            if let Some(g2) = f.d2.clone() {
                let v = f.value.clone();
                out.d2 = Some(Arc::new(move |j, k, t, x| {
                    v(t, x).exp() * (g1(j, t, x) * g1(k, t, x) + g2(j, k, t, x))
                }));
            }
        }
        out
    }

    /// Principal `ln(f)` for nonvanishing fields, with chain-rule partials.
    pub fn ln(&self) -> ScalarField {
        let f = self.clone();
        let mut out = ScalarField {
            domain: f.domain.clone(),
            value: {
                let v = f.value.clone();
                Arc::new(move |t, x| v(t, x).ln())
            },
            dt: None,
            d1: None,
            d2: None,
        };
        if let Some(g) = f.dt.clone() {
            let v = f.value.clone();
            out.dt = Some(Arc::new(move |t, x| g(t, x) / v(t, x)));
        }
        if let Some(g1) = f.d1.clone() {
            let v = f.value.clone();
            let g = g1.clone();
            out.d1 = Some(Arc::new(move |k, t, x| g(k, t, x) / v(t, x)));
            if let Some(g2) = f.d2.clone() {
                let v = f.value.clone();
                out.d2 = Some(Arc::new(move |j, k, t, x| {
                    let fv = v(t, x);
                    g2(j, k, t, x) / fv - g1(j, t, x) * g1(k, t, x) / (fv * fv)
                }));
            }
        }
        out
    }

    /// `f^2` with product-rule partials.
    pub fn square(&self) -> ScalarField {
        let f = self.clone();
        let mut out = ScalarField {
            domain: f.domain.clone(),
            value: {
                let v = f.value.clone();
                Arc::new(move |t, x| {
                    let z = v(t, x);
                    z * z
                })
            },
            dt: None,
            d1: None,
            d2: None,
        };
        if let Some(g) = f.dt.clone() {
            let v = f.value.clone();
            out.dt = Some(Arc::new(move |t, x| 2.0 * v(t, x) * g(t, x)));
        }
        if let Some(g1) = f.d1.clone() {
            let v = f.value.clone();
            let g = g1.clone();
            out.d1 = Some(Arc::new(move |k, t, x| 2.0 * v(t, x) * g(k, t, x)));
            if let Some(g2) = f.d2.clone() {
                let v = f.value.clone();
                out.d2 = Some(Arc::new(move |j, k, t, x| {
                    2.0 * (g1(j, t, x) * g1(k, t, x) + v(t, x) * g2(j, k, t, x))
                }));
            }
        }
        out
    }

    /// Principal square root for nonvanishing fields, with chain-rule partials.
    pub fn sqrt(&self) -> ScalarField {
        let f = self.clone();
        let mut out = ScalarField {
            domain: f.domain.clone(),
            value: {
                let v = f.value.clone();
                Arc::new(move |t, x| v(t, x).sqrt())
            },
            dt: None,
            d1: None,
            d2: None,
        };
        if let Some(g) = f.dt.clone() {
            let v = f.value.clone();
            out.dt = Some(Arc::new(move |t, x| g(t, x) / (2.0 * v(t, x).sqrt())));
        }
        if let Some(g1) = f.d1.clone() {
            let v = f.value.clone();
            let g = g1.clone();
            out.d1 = Some(Arc::new(move |k, t, x| g(k, t, x) / (2.0 * v(t, x).sqrt())));
            if let Some(g2) = f.d2.clone() {
                let v = f.value.clone();
                out.d2 = Some(Arc::new(move |j, k, t, x| {
                    let fv = v(t, x);
                    let s = fv.sqrt();
                    g2(j, k, t, x) / (2.0 * s) - g1(j, t, x) * g1(k, t, x) / (4.0 * fv * s)
                }));
            }
        }
        out
    }
}

/// One-dimensional real profile with optional analytic derivatives; used for
/// radial factors and the separated angular equations.
#[derive(Clone)]
pub struct Field1D {
    lo: f64,
    hi: f64,
    value: Arc<Real1Fn>,
    d1: Option<Arc<Real1Fn>>,
    d2: Option<Arc<Real1Fn>>,
}

impl Field1D {
    pub fn from_fn<F>(lo: f64, hi: f64, value: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(lo < hi) {
            return Err(Error::Invalid(format!("need lo < hi, got [{lo}, {hi}]")));
        }
        Ok(Self {
            lo,
            hi,
            value: Arc::new(value),
            d1: None,
            d2: None,
        })
    }

    pub fn with_derivatives<F, G>(mut self, d1: F, d2: G) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.d1 = Some(Arc::new(d1));
        self.d2 = Some(Arc::new(d2));
        self
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn has_derivatives(&self) -> bool {
        self.d1.is_some() && self.d2.is_some()
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        if r < self.lo || r > self.hi {
            return Err(Error::OutOfDomain(format!(
                "r = {r} outside [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok((self.value)(r))
    }

    pub fn deriv1(&self, r: f64, engine: &DiffEngine) -> Result<f64> {
        self.eval(r)?;
        if let Some(d1) = &self.d1 {
            return Ok(d1(r));
        }
        engine.deriv_1d(&*self.value, r, 1, (self.lo, self.hi))
    }

    pub fn deriv2(&self, r: f64, engine: &DiffEngine) -> Result<f64> {
        self.eval(r)?;
        if let Some(d2) = &self.d2 {
            return Ok(d2(r));
        }
        engine.deriv_1d(&*self.value, r, 2, (self.lo, self.hi))
    }

    /// Three-dimensional radial Laplacian `f'' + (2/r) f'` of the profile.
    pub fn laplacian3(&self, r: f64, engine: &DiffEngine) -> Result<f64> {
        if r <= 0.0 {
            return Err(Error::Domain(format!("radial Laplacian needs r > 0, got {r}")));
        }
        Ok(self.deriv2(r, engine)? + 2.0 / r * self.deriv1(r, engine)?)
    }

    /// Values scaled by a constant.
    pub fn scale(&self, a: f64) -> Field1D {
        let mut out = self.clone();
        let v = self.value.clone();
        out.value = Arc::new(move |r| a * v(r));
        if let Some(d) = self.d1.clone() {
            out.d1 = Some(Arc::new(move |r| a * d(r)));
        }
        if let Some(d) = self.d2.clone() {
            out.d2 = Some(Arc::new(move |r| a * d(r)));
        }
        out
    }

    /// `ln(f)` for positive profiles, with chain-rule derivatives when present.
    pub fn ln(&self) -> Field1D {
        let mut out = self.clone();
        let v = self.value.clone();
        out.value = Arc::new(move |r| v(r).ln());
        out.d1 = None;
        out.d2 = None;
        if let (Some(d1), Some(d2)) = (self.d1.clone(), self.d2.clone()) {
            let v1 = self.value.clone();
            let d1a = d1.clone();
            out.d1 = Some(Arc::new(move |r| d1a(r) / v1(r)));
            let v2 = self.value.clone();
            out.d2 = Some(Arc::new(move |r| {
                let f = v2(r);
                d2(r) / f - (d1(r) / f).powi(2)
            }));
        }
        out
    }
}

/// Vector field as `d` scalar components.
#[derive(Clone)]
pub struct VectorField {
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(components: Vec<ScalarField>) -> Result<Self> {
        let dim = components.len();
        if dim == 0 {
            return Err(Error::Invalid("vector field needs at least one component".into()));
        }
        if components.iter().any(|c| c.dim() != dim) {
            return Err(Error::Invalid(
                "component count must equal the spatial dimension of each component".into(),
            ));
        }
        Ok(Self { components })
    }

    /// The gradient of `f` as a derived vector field. Components inherit
    /// analytic first derivatives from the Hessian of `f` when present;
    /// otherwise they differentiate numerically through `engine`.
    pub fn gradient_of(f: &ScalarField, engine: DiffEngine) -> VectorField {
        let dim = f.dim();
        let components = (0..dim)
            .map(|k| {
                let fk = f.clone();
                let mut comp = ScalarField {
                    domain: f.domain.clone(),
                    value: Arc::new(move |t, x| {
                        engine.partial(&fk, k, t, x).unwrap_or(NAN_C)
                    }),
                    dt: None,
                    d1: None,
                    d2: None,
                };
                if let Some(d2) = f.d2.clone() {
                    comp.d1 = Some(Arc::new(move |j, t, x| d2(j, k, t, x)));
                }
                comp
            })
            .collect();
        VectorField { components }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, k: usize) -> &ScalarField {
        &self.components[k]
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> Result<Vec<C64>> {
        self.components.iter().map(|c| c.eval(t, x)).collect()
    }
}

/// Finite-difference stencil accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StencilOrder {
    Two,
    Four,
}

/// Laplacian evaluation mode. `Radial` restricts derivatives to the ray
/// through the point and is valid only for spherically symmetric fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffMode {
    Cartesian,
    Radial,
}

/// Step-size policy: automatic per-derivative-order scaling, or a fixed base
/// step.
#[derive(Debug, Clone, Copy, PartialEq)]
enum StepRule {
    Auto,
    Fixed(f64),
}

/// Finite-difference engine. Order-two stencils pick steps automatically
/// (`eps^(1/(2+p))` scaled by coordinate magnitude, `p` the derivative
/// order); order-four stencils use a fixed base step, configurable through
/// [`DiffEngine::with_step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffEngine {
    order: StencilOrder,
    mode: DiffMode,
    step: StepRule,
}

const DEFAULT_ORDER4_STEP: f64 = 1e-3;

impl DiffEngine {
    pub fn order2() -> Self {
        Self {
            order: StencilOrder::Two,
            mode: DiffMode::Cartesian,
            step: StepRule::Auto,
        }
    }

    pub fn order4() -> Self {
        Self {
            order: StencilOrder::Four,
            mode: DiffMode::Cartesian,
            step: StepRule::Fixed(DEFAULT_ORDER4_STEP),
        }
    }

    pub fn with_mode(mut self, mode: DiffMode) -> Self {
        self.mode = mode;
        self
    }

    /// Fixed absolute base step for all stencils.
    pub fn with_step(mut self, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::Invalid(format!("step must be positive, got {h}")));
        }
        self.step = StepRule::Fixed(h);
        Ok(self)
    }

    pub fn order(&self) -> StencilOrder {
        self.order
    }

    pub fn mode(&self) -> DiffMode {
        self.mode
    }

    fn step_for(&self, total_order: u32, coord: f64) -> f64 {
        match self.step {
            StepRule::Fixed(h) => h,
            StepRule::Auto => {
                let exponent = 1.0 / (2.0 + total_order as f64);
                f64::EPSILON.powf(exponent) * coord.abs().max(1.0)
            }
        }
    }

    /// 1D stencil table: (offsets, coefficients, power of h in denominator).
    fn stencil(&self, m: u32) -> (&'static [f64], &'static [f64], i32) {
        const D1_O2: (&[f64], &[f64]) = (&[-1.0, 1.0], &[-0.5, 0.5]);
        const D2_O2: (&[f64], &[f64]) = (&[-1.0, 0.0, 1.0], &[1.0, -2.0, 1.0]);
        const D3_O2: (&[f64], &[f64]) = (&[-2.0, -1.0, 1.0, 2.0], &[-0.5, 1.0, -1.0, 0.5]);
        const D4_O2: (&[f64], &[f64]) =
            (&[-2.0, -1.0, 0.0, 1.0, 2.0], &[1.0, -4.0, 6.0, -4.0, 1.0]);
        const TWELFTH: f64 = 1.0 / 12.0;
        const D1_O4: (&[f64], &[f64]) = (
            &[-2.0, -1.0, 1.0, 2.0],
            &[TWELFTH, -8.0 * TWELFTH, 8.0 * TWELFTH, -TWELFTH],
        );
        const D2_O4: (&[f64], &[f64]) = (
            &[-2.0, -1.0, 0.0, 1.0, 2.0],
            &[
                -TWELFTH,
                16.0 * TWELFTH,
                -30.0 * TWELFTH,
                16.0 * TWELFTH,
                -TWELFTH,
            ],
        );
        let (offsets, coeffs) = match (m, self.order) {
            (1, StencilOrder::Two) => D1_O2,
            (2, StencilOrder::Two) => D2_O2,
            (1, StencilOrder::Four) => D1_O4,
            (2, StencilOrder::Four) => D2_O4,
            // Orders three and four use second-order stencils regardless.
            (3, _) => D3_O2,
            (4, _) => D4_O2,
            _ => unreachable!("derivative order {m} not supported"),
        };
        (offsets, coeffs, m as i32)
    }

    fn max_offset(&self, m: u32) -> f64 {
        match (m, self.order) {
            (1, StencilOrder::Two) | (2, StencilOrder::Two) => 1.0,
            _ => 2.0,
        }
    }

    /// Time derivative of `f` at `(t, x)`.
    pub fn time_derivative(&self, f: &ScalarField, t: f64, x: &[f64]) -> Result<C64> {
        f.check_point(x)?;
        if let Some(dt) = &f.dt {
            return Ok(dt(t, x));
        }
        let h = self.step_for(1, t);
        let (offsets, coeffs, _) = self.stencil(1);
        let mut acc = C64::new(0.0, 0.0);
        for (o, c) in offsets.iter().zip(coeffs) {
            acc += C64::new(*c, 0.0) * f.raw(t + o * h, x);
        }
        Ok(acc / C64::new(h, 0.0))
    }

    /// First spatial partial along axis `k`.
    pub fn partial(&self, f: &ScalarField, k: usize, t: f64, x: &[f64]) -> Result<C64> {
        f.check_point(x)?;
        if k >= f.dim() {
            return Err(Error::Invalid(format!("axis {k} out of range")));
        }
        if let Some(d1) = &f.d1 {
            return Ok(d1(k, t, x));
        }
        self.axis_stencil(f, k, 1, t, x)
    }

    pub fn gradient(&self, f: &ScalarField, t: f64, x: &[f64]) -> Result<Vec<C64>> {
        (0..f.dim()).map(|k| self.partial(f, k, t, x)).collect()
    }

    pub fn laplacian(&self, f: &ScalarField, t: f64, x: &[f64]) -> Result<C64> {
        f.check_point(x)?;
        if let Some(d2) = &f.d2 {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..f.dim() {
                acc += d2(k, k, t, x);
            }
            return Ok(acc);
        }
        match self.mode {
            DiffMode::Cartesian => {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..f.dim() {
                    acc += self.axis_stencil(f, k, 2, t, x)?;
                }
                Ok(acc)
            }
            DiffMode::Radial => self.radial_laplacian(f, t, x),
        }
    }

    /// Radial-mode Laplacian `phi'' + (d-1)/r phi'` along the ray through `x`.
    /// Requires `r` at least two steps away from the origin.
    fn radial_laplacian(&self, f: &ScalarField, t: f64, x: &[f64]) -> Result<C64> {
        let r = norm(x);
        let h = self.step_for(2, r);
        if r < 2.0 * h {
            return Err(Error::OutOfDomain(format!(
                "radial Laplacian needs r >= 2h (r = {r}, h = {h})"
            )));
        }
        let dim = f.dim();
        let unit: Vec<f64> = x.iter().map(|xi| xi / r).collect();
        let eval_ray = |s: f64| -> Result<C64> {
            let point: Vec<f64> = unit.iter().map(|e| e * s).collect();
            if !f.domain.contains(&point) {
                return Err(Error::OutOfDomain(format!("ray point at r = {s}")));
            }
            Ok(f.raw(t, &point))
        };
        let (o2, c2, _) = self.stencil(2);
        let mut second = C64::new(0.0, 0.0);
        for (o, c) in o2.iter().zip(c2) {
            second += C64::new(*c, 0.0) * eval_ray(r + o * h)?;
        }
        second /= C64::new(h * h, 0.0);
        let (o1, c1, _) = self.stencil(1);
        let mut first = C64::new(0.0, 0.0);
        for (o, c) in o1.iter().zip(c1) {
            first += C64::new(*c, 0.0) * eval_ray(r + o * h)?;
        }
        first /= C64::new(h, 0.0);
        Ok(second + C64::new((dim as f64 - 1.0) / r, 0.0) * first)
    }

    pub fn divergence(&self, field: &VectorField, t: f64, x: &[f64]) -> Result<C64> {
        let mut acc = C64::new(0.0, 0.0);
        for (k, comp) in field.components().iter().enumerate() {
            acc += self.partial(comp, k, t, x)?;
        }
        Ok(acc)
    }

    /// Mixed spatial partial for a multi-index of total order at most four.
    ///
    /// Analytic derivatives are used for the two innermost orders when the
    /// field carries a Hessian; remaining orders fall back to tensor-product
    /// central stencils.
    pub fn mixed_partial(&self, f: &ScalarField, index: &[usize], t: f64, x: &[f64]) -> Result<C64> {
        f.check_point(x)?;
        if index.len() > 4 {
            return Err(Error::Unsupported(format!(
                "mixed partials limited to total order 4, got {}",
                index.len()
            )));
        }
        if index.iter().any(|&k| k >= f.dim()) {
            return Err(Error::Invalid("multi-index axis out of range".into()));
        }
        match index.len() {
            0 => f.eval(t, x),
            1 => self.partial(f, index[0], t, x),
            2 => {
                if let Some(d2) = &f.d2 {
                    Ok(d2(index[0], index[1], t, x))
                } else {
                    self.tensor_stencil(&*f.value, &f.domain, index, t, x)
                }
            }
            _ => {
                if let Some(d2) = f.d2.clone() {
                    let outer = &index[..index.len() - 2];
                    let (a, b) = (index[index.len() - 2], index[index.len() - 1]);
                    let g = move |t: f64, x: &[f64]| d2(a, b, t, x);
                    self.tensor_stencil(&g, &f.domain, outer, t, x)
                } else {
                    self.tensor_stencil(&*f.value, &f.domain, index, t, x)
                }
            }
        }
    }

    /// Apply the tensor product of 1D central stencils prescribed by the
    /// multi-index to raw values of `g`.
    fn tensor_stencil<G>(
        &self,
        g: &G,
        domain: &Domain,
        index: &[usize],
        t: f64,
        x: &[f64],
    ) -> Result<C64>
    where
        G: Fn(f64, &[f64]) -> C64 + ?Sized,
    {
        if index.is_empty() {
            return Ok(g(t, x));
        }
        let total = index.len() as u32;
        // Multiplicity per axis, in first-appearance order.
        let mut axes: Vec<(usize, u32)> = Vec::new();
        for &k in index {
            match axes.iter_mut().find(|(a, _)| *a == k) {
                Some((_, m)) => *m += 1,
                None => axes.push((k, 1)),
            }
        }
        let mut plan = Vec::new();
        let mut required = 0.0f64;
        for &(axis, m) in &axes {
            let h = self.step_for(total, x[axis]);
            let (offsets, coeffs, hpow) = self.stencil(m);
            required = required.max(self.max_offset(m) * h);
            plan.push((axis, h, offsets, coeffs, hpow));
        }
        if domain.margin(x) < required {
            return Err(Error::OutOfDomain(format!(
                "stencil of width {required} exceeds domain margin at {x:?}"
            )));
        }
        let mut acc = C64::new(0.0, 0.0);
        let mut point = x.to_vec();
        let mut idx = vec![0usize; plan.len()];
        'outer: loop {
            let mut coeff = 1.0;
            point.copy_from_slice(x);
            for (slot, &(axis, h, offsets, coeffs, _)) in idx.iter().zip(&plan) {
                coeff *= coeffs[*slot];
                point[axis] += offsets[*slot] * h;
            }
            if coeff != 0.0 {
                acc += C64::new(coeff, 0.0) * g(t, &point);
            }
            // Advance the odometer over stencil nodes.
            for slot in 0..idx.len() {
                idx[slot] += 1;
                if idx[slot] < plan[slot].2.len() {
                    continue 'outer;
                }
                idx[slot] = 0;
            }
            break;
        }
        let mut denom = 1.0;
        for &(_, h, _, _, hpow) in &plan {
            denom *= h.powi(hpow);
        }
        Ok(acc / C64::new(denom, 0.0))
    }

    /// Stencil along a single axis applied to raw field values.
    fn axis_stencil(&self, f: &ScalarField, k: usize, m: u32, t: f64, x: &[f64]) -> Result<C64> {
        let h = self.step_for(m, x[k]);
        let (offsets, coeffs, hpow) = self.stencil(m);
        if f.domain.margin(x) < self.max_offset(m) * h {
            return Err(Error::OutOfDomain(format!(
                "stencil of width {} exceeds domain margin at {x:?}",
                self.max_offset(m) * h
            )));
        }
        let mut acc = C64::new(0.0, 0.0);
        let mut point = x.to_vec();
        for (o, c) in offsets.iter().zip(coeffs) {
            point[k] = x[k] + o * h;
            acc += C64::new(*c, 0.0) * f.raw(t, &point);
        }
        Ok(acc / C64::new(h.powi(hpow), 0.0))
    }

    /// 1D derivative of order `m` on a plain real function over `[lo, hi]`.
    fn deriv_1d<G>(&self, g: &G, r: f64, m: u32, bounds: (f64, f64)) -> Result<f64>
    where
        G: Fn(f64) -> f64 + ?Sized,
    {
        let h = self.step_for(m, r);
        let (offsets, coeffs, hpow) = self.stencil(m);
        let reach = self.max_offset(m) * h;
        if r - reach < bounds.0 || r + reach > bounds.1 {
            return Err(Error::OutOfDomain(format!(
                "stencil of width {reach} exceeds interval [{}, {}] at r = {r}",
                bounds.0, bounds.1
            )));
        }
        let mut acc = 0.0;
        for (o, c) in offsets.iter().zip(coeffs) {
            acc += c * g(r + o * h);
        }
        Ok(acc / h.powi(hpow))
    }
}

/// Worst absolute gap between the analytic partials of `f` and Richardson
/// extrapolations of central differences, over the time derivative, the
/// gradient, and the Hessian diagonal.
pub fn verify_analytic_partials(f: &ScalarField, t: f64, x: &[f64]) -> Result<f64> {
    f.check_point(x)?;
    let mut worst = 0.0f64;
    let mut record = |analytic: C64, coarse: C64, fine: C64| {
        // Order-2 stencils: Richardson combination (4 fine - coarse) / 3.
        let reference = (4.0 * fine - coarse) / 3.0;
        worst = worst.max((analytic - reference).norm());
    };
    // Richardson extrapolation removes the leading truncation term, so wider
    // steps than plain central differences keep roundoff in check.
    let step1 = |coord: f64| f64::EPSILON.powf(0.2) * coord.abs().max(1.0);
    let step2 = |coord: f64| f64::EPSILON.powf(1.0 / 6.0) * coord.abs().max(1.0);
    if let Some(dt) = &f.dt {
        let h = step1(t);
        let diff = |h: f64| (f.raw(t + h, x) - f.raw(t - h, x)) / (2.0 * h);
        record(dt(t, x), diff(h), diff(0.5 * h));
    }
    if let Some(d1) = &f.d1 {
        for k in 0..f.dim() {
            let h = step1(x[k]);
            let diff = |h: f64| {
                let mut p = x.to_vec();
                p[k] = x[k] + h;
                let plus = f.raw(t, &p);
                p[k] = x[k] - h;
                (plus - f.raw(t, &p)) / (2.0 * h)
            };
            record(d1(k, t, x), diff(h), diff(0.5 * h));
        }
    }
    if let Some(d2) = &f.d2 {
        for k in 0..f.dim() {
            let h = step2(x[k]);
            let diff = |h: f64| {
                let mut p = x.to_vec();
                p[k] = x[k] + h;
                let plus = f.raw(t, &p);
                p[k] = x[k] - h;
                let minus = f.raw(t, &p);
                (plus - 2.0 * f.raw(t, x) + minus) / (h * h)
            };
            record(d2(k, k, t, x), diff(h), diff(0.5 * h));
        }
    }
    Ok(worst)
}
