//! Residual evaluators for the extended Hamilton-Jacobi equation.
//!
//! The complex action `A = S + i eta R` solves
//!
//! ```text
//! dA/dt + (grad A)^2 / 2m + sum_idx lambda_idx / j! d^j A + U = 0
//! ```
//!
//! along the extended Newton flow; [`hj_residual_general`] evaluates the
//! left-hand side pointwise. For real `eta` the equation splits into real
//! and imaginary parts, evaluated by [`hj_split_residuals`] with the
//! diagonal (uniform-regime) correction constants; recombining the split
//! parts as `first + i eta second` reproduces the complex residual.
//!
//! `(grad A)^2` is the bilinear sum of squared components, not the squared
//! modulus; the split below depends on that convention.

use crate::fields::{DiffEngine, ScalarField, VectorField};
use crate::ops::lambda_correction;
use crate::regime::{EtaDecomposition, EtaParameter, ScaleRegime};
use crate::{C64, Error, Result};

/// Complex action decomposed as `A = S + i eta R` with real fields `S`, `R`.
#[derive(Clone)]
pub struct ActionField {
    s: ScalarField,
    r: ScalarField,
    eta: EtaParameter,
}

impl ActionField {
    pub fn new(s: ScalarField, r: ScalarField, eta: EtaParameter) -> Result<Self> {
        if s.dim() != r.dim() {
            return Err(Error::Invalid(format!(
                "S and R dimensions differ: {} vs {}",
                s.dim(),
                r.dim()
            )));
        }
        Ok(Self { s, r, eta })
    }

    pub fn s(&self) -> &ScalarField {
        &self.s
    }

    pub fn r(&self) -> &ScalarField {
        &self.r
    }

    pub fn eta(&self) -> EtaParameter {
        self.eta
    }

    /// The composed complex action `S + i eta R` as a field; analytic
    /// partials of `S` and `R` survive the combination.
    pub fn complex_action(&self) -> ScalarField {
        let i_eta = C64::new(0.0, 1.0) * self.eta.as_complex();
        self.s
            .add(&self.r.scale(i_eta))
            .expect("S and R share a dimension by construction")
    }
}

/// Residual of the extended Hamilton-Jacobi equation in complex form:
/// `dA/dt + (grad A)^2/2m + correction + U` at `(t, x)`.
///
/// The correction term sums the combined constants of `regime` against the
/// order-`j_alpha` partials of `A`, exactly as in the box derivative.
pub fn hj_residual_general(
    action: &ActionField,
    potential: &ScalarField,
    regime: &ScaleRegime,
    mass: f64,
    t: f64,
    x: &[f64],
    engine: &DiffEngine,
) -> Result<C64> {
    let a = action.complex_action();
    let dt = engine.time_derivative(&a, t, x)?;
    let grad = engine.gradient(&a, t, x)?;
    let grad_sq: C64 = grad.iter().map(|g| g * g).sum();
    let correction = lambda_correction(&a, regime, t, x, engine)?;
    let u = potential.eval(t, x)?;
    Ok(dt + grad_sq / C64::new(2.0 * mass, 0.0) + correction + u)
}

/// Real and imaginary parts of the extended Hamilton-Jacobi residual for
/// real `eta`, with the scalar decomposed constant
/// `lambda = lambda_re + i eta lambda_im` of the uniform regime:
///
/// ```text
/// first  = dS/dt + (grad S)^2/2m - eta^2 (grad R)^2/2m
///          + sum_k d^j_k (lambda_re S - eta^2 lambda_im R) / j! + U
/// second = dR/dt + grad S . grad R / m
///          + sum_k d^j_k (lambda_im S + lambda_re R) / j!
/// ```
///
/// The correction sums run over the diagonal (order-`j_alpha` derivatives
/// along each axis), the only case exercised by a uniform regime with
/// independent components; for `j_alpha = 2` they are Laplacian terms.
pub fn hj_split_residuals(
    s: &ScalarField,
    r: &ScalarField,
    potential: &ScalarField,
    lambda: &EtaDecomposition,
    regime: &ScaleRegime,
    mass: f64,
    t: f64,
    x: &[f64],
    engine: &DiffEngine,
) -> Result<(f64, f64)> {
    lambda.eta.real_value()?;
    let eta_sq = lambda.eta.eta_squared();
    let j = regime.j_alpha();
    if j > 4 {
        return Err(Error::Unsupported(format!(
            "correction order j_alpha = {j} exceeds the supported maximum of 4"
        )));
    }
    let factorial: f64 = (1..=j).map(|n| n as f64).product();

    let ds_dt = engine.time_derivative(s, t, x)?.re;
    let dr_dt = engine.time_derivative(r, t, x)?.re;
    let grad_s = engine.gradient(s, t, x)?;
    let grad_r = engine.gradient(r, t, x)?;
    let gs_sq: f64 = grad_s.iter().map(|g| g.re * g.re).sum();
    let gr_sq: f64 = grad_r.iter().map(|g| g.re * g.re).sum();
    let gs_dot_gr: f64 = grad_s.iter().zip(&grad_r).map(|(a, b)| a.re * b.re).sum();

    // Diagonal order-j derivatives, summed over axes.
    let mut diag_s = 0.0;
    let mut diag_r = 0.0;
    if !(regime.is_linear() || (lambda.re_part == 0.0 && lambda.im_part == 0.0)) {
        for k in 0..s.dim() {
            let index = vec![k; j as usize];
            diag_s += engine.mixed_partial(s, &index, t, x)?.re;
            diag_r += engine.mixed_partial(r, &index, t, x)?.re;
        }
    }

    let u = potential.eval(t, x)?.re;
    let two_m = 2.0 * mass;
    let first = ds_dt + gs_sq / two_m - eta_sq * gr_sq / two_m
        + (lambda.re_part * diag_s - eta_sq * lambda.im_part * diag_r) / factorial
        + u;
    let second = dr_dt + gs_dot_gr / mass
        + (lambda.im_part * diag_s + lambda.re_part * diag_r) / factorial;
    Ok((first, second))
}

/// The two-component Hamiltonian `(-dS/dt, -dR/dt)` as derived fields.
pub struct HamiltonianPair {
    pub h_s: ScalarField,
    pub h_r: ScalarField,
}

pub fn hamiltonian_pair(s: &ScalarField, r: &ScalarField, engine: DiffEngine) -> HamiltonianPair {
    let negate = |f: &ScalarField| {
        let f = f.clone();
        ScalarField::from_fn(f.dim(), move |t, x| {
            -engine
                .time_derivative(&f, t, x)
                .unwrap_or(C64::new(f64::NAN, f64::NAN))
        })
    };
    HamiltonianPair {
        h_s: negate(s),
        h_r: negate(r),
    }
}

/// The classical and scale velocity components `v = grad S / m` and
/// `u = grad R / m` as derived vector fields.
pub fn velocities_from_action(
    action: &ActionField,
    mass: f64,
    engine: DiffEngine,
) -> (VectorField, VectorField) {
    let inv_m = C64::new(1.0 / mass, 0.0);
    let scale_components = |f: &ScalarField| {
        let grad = VectorField::gradient_of(f, engine);
        let scaled: Vec<ScalarField> = grad
            .components()
            .iter()
            .map(|comp| comp.scale(inv_m))
            .collect();
        VectorField::new(scaled).expect("gradient preserves dimension")
    };
    (scale_components(&action.s), scale_components(&action.r))
}
