//! The wave-function change of variable and the equations it produces.
//!
//! Writing `psi = exp((-eta R + i S)/K)` with a real constant `K != 0` turns
//! the order-two extended Hamilton-Jacobi equation into a nonlinear
//! Schrodinger equation; the nonlinearity is weighted by `K/m - i lambda`
//! and cancels exactly at `K = m Lambda`. With the positive density
//! amplitude `sqrt(P) = exp(-eta R / K)` the same equation splits into an
//! energy equation and a continuity-like equation.
//!
//! The module also houses the separated radial/angular residuals used for
//! ground states, the logarithm identity underpinning the split, and the
//! exponential integral `Ei` appearing in the nonlinear ground state.

use crate::fields::{DiffEngine, Field1D, ScalarField};
use crate::regime::{EtaDecomposition, EtaParameter};
use crate::{C64, Error, Result};

/// Wave function `psi` with its action constant `K` and the `eta` of the
/// regime it came from. `psi` must be nonvanishing on its domain.
#[derive(Clone)]
pub struct WaveField {
    psi: ScalarField,
    kconst: f64,
    eta: EtaParameter,
}

impl WaveField {
    pub fn new(psi: ScalarField, kconst: f64, eta: EtaParameter) -> Result<Self> {
        if kconst == 0.0 {
            return Err(Error::Invalid("the action constant K must be nonzero".into()));
        }
        Ok(Self { psi, kconst, eta })
    }

    pub fn psi(&self) -> &ScalarField {
        &self.psi
    }

    pub fn kconst(&self) -> f64 {
        self.kconst
    }

    pub fn eta(&self) -> EtaParameter {
        self.eta
    }
}

/// `psi = exp((i S - eta R)/K)`. Analytic partials of `S` and `R` carry
/// through the exponential.
pub fn psi_from_action(
    s: &ScalarField,
    r: &ScalarField,
    kconst: f64,
    eta: EtaParameter,
) -> Result<WaveField> {
    if kconst == 0.0 {
        return Err(Error::Invalid("the action constant K must be nonzero".into()));
    }
    let i_over_k = C64::new(0.0, 1.0 / kconst);
    let minus_eta_over_k = -eta.as_complex() / C64::new(kconst, 0.0);
    let exponent = s.scale(i_over_k).add(&r.scale(minus_eta_over_k))?;
    WaveField::new(exponent.exp(), kconst, eta)
}

/// Recover `(S, R)` from `psi = exp((i S - eta R)/K)` as derived fields,
/// with `S` on the principal branch (in `(-pi K, pi K]` for positive `K`).
///
/// Requires real `eta`: for `eta = +-i` the two action components collapse
/// onto one complex direction and cannot be separated.
pub fn action_from_psi(wave: &WaveField) -> Result<(ScalarField, ScalarField)> {
    let eta = wave.eta.real_value()?;
    let k = wave.kconst;
    let psi_s = wave.psi.clone();
    let psi_r = wave.psi.clone();
    let s = ScalarField::from_fn(wave.psi.dim(), move |t, x| {
        let w = psi_s.eval(t, x).map(|z| z.ln()).unwrap_or(C64::new(f64::NAN, 0.0));
        C64::new(k * w.im, 0.0)
    });
    let r = ScalarField::from_fn(wave.psi.dim(), move |t, x| {
        let w = psi_r.eval(t, x).map(|z| z.ln()).unwrap_or(C64::new(f64::NAN, 0.0));
        C64::new(-eta * k * w.re, 0.0)
    });
    Ok((s, r))
}

fn check_nonzero(z: C64, what: &str) -> Result<()> {
    if z.norm() == 0.0 {
        return Err(Error::Domain(format!("{what} vanishes at the evaluation point")));
    }
    Ok(())
}

/// Residual of the nonlinear Schrodinger equation with a general complex
/// correction constant `lambda`:
///
/// ```text
/// iK dpsi/dt + (iK lambda/2) Lap psi
///   + ((grad psi)^2 / psi) (K/m - i lambda) K/2 - U psi
/// ```
///
/// `(grad psi)^2` is the bilinear sum of squared components.
pub fn nls_residual(
    wave: &WaveField,
    potential: &ScalarField,
    mass: f64,
    lambda: C64,
    t: f64,
    x: &[f64],
    engine: &DiffEngine,
) -> Result<C64> {
    let psi = &wave.psi;
    let k = wave.kconst;
    let value = psi.eval(t, x)?;
    check_nonzero(value, "psi")?;
    let dt = engine.time_derivative(psi, t, x)?;
    let lap = engine.laplacian(psi, t, x)?;
    let grad = engine.gradient(psi, t, x)?;
    let grad_sq: C64 = grad.iter().map(|g| g * g).sum();
    let u = potential.eval(t, x)?;
    let i = C64::new(0.0, 1.0);
    let ik = i * C64::new(k, 0.0);
    let nonlinear_coeff = (C64::new(k / mass, 0.0) - i * lambda) * C64::new(0.5 * k, 0.0);
    Ok(ik * dt + 0.5 * ik * lambda * lap + grad_sq / value * nonlinear_coeff - u * value)
}

/// Residual of the nonlinear Schrodinger equation specialized to `eta = -1`
/// under a uniform regime with scale constant `Lambda` (so the correction
/// constant is `-i Lambda`):
///
/// ```text
/// iK dpsi/dt + (K Lambda/2) Lap psi
///   + ((grad psi)^2 / psi) (K/m - Lambda) K/2 - U psi
/// ```
///
/// The nonlinear coefficient is computed as `(K - m Lambda) K / 2m`, which
/// vanishes exactly when `K` is constructed as the product `m * Lambda`.
pub fn nls_residual_eta_minus1(
    wave: &WaveField,
    potential: &ScalarField,
    mass: f64,
    lambda_scale: f64,
    t: f64,
    x: &[f64],
    engine: &DiffEngine,
) -> Result<C64> {
    let psi = &wave.psi;
    let k = wave.kconst;
    let value = psi.eval(t, x)?;
    check_nonzero(value, "psi")?;
    let dt = engine.time_derivative(psi, t, x)?;
    let lap = engine.laplacian(psi, t, x)?;
    let grad = engine.gradient(psi, t, x)?;
    let grad_sq: C64 = grad.iter().map(|g| g * g).sum();
    let u = potential.eval(t, x)?;
    let ik = C64::new(0.0, k);
    let nonlinear_coeff = nonlinear_coefficient(k, mass, lambda_scale);
    Ok(ik * dt
        + C64::new(0.5 * k * lambda_scale, 0.0) * lap
        + grad_sq / value * C64::new(nonlinear_coeff, 0.0)
        - u * value)
}

/// Coefficient of the nonlinear term `(grad psi)^2 / psi` in the `eta = -1`
/// equation: `(K - m Lambda) K / 2m`, exactly zero at `K = m * Lambda`.
pub fn nonlinear_coefficient(kconst: f64, mass: f64, lambda_scale: f64) -> f64 {
    (kconst - mass * lambda_scale) * kconst / (2.0 * mass)
}

/// Residual of the linear Schrodinger equation reached at `K = m Lambda`:
/// `i m Lambda dpsi/dt + (m Lambda^2 / 2) Lap psi - U psi`.
pub fn linear_schrodinger_residual(
    psi: &ScalarField,
    potential: &ScalarField,
    mass: f64,
    lambda_scale: f64,
    t: f64,
    x: &[f64],
    engine: &DiffEngine,
) -> Result<C64> {
    let value = psi.eval(t, x)?;
    check_nonzero(value, "psi")?;
    let dt = engine.time_derivative(psi, t, x)?;
    let lap = engine.laplacian(psi, t, x)?;
    let u = potential.eval(t, x)?;
    Ok(C64::new(0.0, mass * lambda_scale) * dt
        + C64::new(0.5 * mass * lambda_scale * lambda_scale, 0.0) * lap
        - u * value)
}

/// The two equations of the density form of the extended Hamilton-Jacobi
/// equation, for action part `S` and positive density `P`:
///
/// ```text
/// first  = dS/dt + (grad S)^2/2m + (lambda_re/2) Lap S
///          - (K^2/2m) Lap(sqrt P)/sqrt P
///          + (K/2)(K/m + eta lambda_im) Lap(ln sqrt P) + U
/// second = dP/dt + div(P grad S / m)
///          - (P Lap S / m)(1 + eta m lambda_im / K)
///          + (K lambda_re / 2) Lap(ln sqrt P)
/// ```
///
/// Both mixed coefficients are evaluated in factored form so they vanish
/// exactly at `K = m Lambda` under `eta = -1`, `lambda_im = Lambda`.
#[allow(clippy::too_many_arguments)]
pub fn hj3_split_residuals(
    s: &ScalarField,
    p: &ScalarField,
    potential: &ScalarField,
    mass: f64,
    kconst: f64,
    lambda: &EtaDecomposition,
    t: f64,
    x: &[f64],
    engine: &DiffEngine,
) -> Result<(f64, f64)> {
    let eta = lambda.eta.real_value()?;
    let p_value = p.eval(t, x)?.re;
    if p_value <= 0.0 {
        return Err(Error::Domain(format!("P must be positive, got {p_value} at {x:?}")));
    }
    let sqrt_p = p.sqrt();
    let ln_sqrt_p = p.ln().scale(C64::new(0.5, 0.0));

    let ds_dt = engine.time_derivative(s, t, x)?.re;
    let grad_s = engine.gradient(s, t, x)?;
    let gs_sq: f64 = grad_s.iter().map(|g| g.re * g.re).sum();
    let lap_s = engine.laplacian(s, t, x)?.re;
    let lap_sqrt_p = engine.laplacian(&sqrt_p, t, x)?.re;
    let sqrt_p_value = sqrt_p.eval(t, x)?.re;
    let lap_ln_sqrt_p = engine.laplacian(&ln_sqrt_p, t, x)?.re;
    let u = potential.eval(t, x)?.re;

    // (K/m + eta lambda_im) = (K + eta m lambda_im)/m, exact zero at
    // K = -eta m lambda_im.
    let mixed_energy = (kconst + eta * mass * lambda.im_part) / mass;
    let first = ds_dt + gs_sq / (2.0 * mass) + 0.5 * lambda.re_part * lap_s
        - kconst * kconst / (2.0 * mass) * lap_sqrt_p / sqrt_p_value
        + 0.5 * kconst * mixed_energy * lap_ln_sqrt_p
        + u;

    let dp_dt = engine.time_derivative(p, t, x)?.re;
    let grad_p = engine.gradient(p, t, x)?;
    let gp_dot_gs: f64 = grad_p.iter().zip(&grad_s).map(|(a, b)| a.re * b.re).sum();
    let div_p_grads = (gp_dot_gs + p_value * lap_s) / mass;
    let mixed_continuity = (kconst + eta * mass * lambda.im_part) / kconst;
    let second = dp_dt + div_p_grads - p_value * lap_s / mass * mixed_continuity
        + 0.5 * kconst * lambda.re_part * lap_ln_sqrt_p;

    Ok((first, second))
}

/// Residual of the time-independent equation obtained by separating
/// `psi = exp(-iEt/K) Psi(x)`:
///
/// ```text
/// Lap Psi + ((grad Psi)^2/Psi)(K/(m Lambda) - 1) + (2/(K Lambda))(E - U) Psi
/// ```
pub fn stationary_residual(
    spatial: &ScalarField,
    energy: f64,
    potential: &ScalarField,
    params: &SeparationParams,
    x: &[f64],
    engine: &DiffEngine,
) -> Result<C64> {
    let t = 0.0;
    let value = spatial.eval(t, x)?;
    check_nonzero(value, "Psi")?;
    let lap = engine.laplacian(spatial, t, x)?;
    let grad = engine.gradient(spatial, t, x)?;
    let grad_sq: C64 = grad.iter().map(|g| g * g).sum();
    let u = potential.eval(t, x)?;
    let scale = 2.0 / (params.kconst * params.lambda_scale);
    Ok(lap
        + grad_sq / value * C64::new(params.nonlinear_factor(), 0.0)
        + (C64::new(energy, 0.0) - u) * value * C64::new(scale, 0.0))
}

/// Constants shared by the separated ordinary differential equations.
#[derive(Debug, Clone, Copy)]
pub struct SeparationParams {
    pub mass: f64,
    pub kconst: f64,
    pub lambda_scale: f64,
}

impl SeparationParams {
    pub fn new(mass: f64, kconst: f64, lambda_scale: f64) -> Result<Self> {
        if mass <= 0.0 || kconst == 0.0 || lambda_scale == 0.0 {
            return Err(Error::Invalid(
                "need positive mass and nonzero K, Lambda".into(),
            ));
        }
        Ok(Self {
            mass,
            kconst,
            lambda_scale,
        })
    }

    /// `K/(m Lambda) - 1`, computed as `(K - m Lambda)/(m Lambda)` so it is
    /// exactly zero when `K` is the product `m * Lambda`.
    pub fn nonlinear_factor(&self) -> f64 {
        (self.kconst - self.mass * self.lambda_scale) / (self.mass * self.lambda_scale)
    }
}

/// Residual of the separated radial equation at radius `r`:
///
/// ```text
/// R'' + (2/r) R' + nl (R')^2 / R + (2/(K Lambda))(E - U(r)) R - (C'/r^2) R
/// ```
pub fn radial_residual(
    rr: &Field1D,
    energy: f64,
    cprime: f64,
    params: &SeparationParams,
    potential: &dyn Fn(f64) -> f64,
    r: f64,
    engine: &DiffEngine,
) -> Result<f64> {
    if r <= 0.0 {
        return Err(Error::Domain(format!("radial equation needs r > 0, got {r}")));
    }
    let value = rr.eval(r)?;
    let d1 = rr.deriv1(r, engine)?;
    let d2 = rr.deriv2(r, engine)?;
    let nl = params.nonlinear_factor();
    if nl != 0.0 && value == 0.0 {
        return Err(Error::Domain("R vanishes where the nonlinear term divides by it".into()));
    }
    let nonlinear = if nl == 0.0 { 0.0 } else { nl * d1 * d1 / value };
    let scale = 2.0 / (params.kconst * params.lambda_scale);
    Ok(d2 + 2.0 / r * d1
        + nonlinear
        + (scale * (energy - potential(r)) - cprime / (r * r)) * value)
}

/// Residual of the separated polar equation at angle `theta`:
///
/// ```text
/// Th'' + Th'/tan(theta) + nl (Th')^2 / Th + (C' - C/sin^2(theta)) Th
/// ```
///
/// Singular where `sin(theta)` vanishes.
pub fn theta_residual(
    th: &Field1D,
    c_const: f64,
    cprime: f64,
    params: &SeparationParams,
    theta: f64,
    engine: &DiffEngine,
) -> Result<f64> {
    let sin = theta.sin();
    if sin.abs() < 1e-12 {
        return Err(Error::Domain(format!(
            "polar equation is singular at theta = {theta} (sin theta = 0)"
        )));
    }
    let value = th.eval(theta)?;
    let d1 = th.deriv1(theta, engine)?;
    let d2 = th.deriv2(theta, engine)?;
    let nl = params.nonlinear_factor();
    if nl != 0.0 && value == 0.0 {
        return Err(Error::Domain("Theta vanishes where the nonlinear term divides by it".into()));
    }
    let nonlinear = if nl == 0.0 { 0.0 } else { nl * d1 * d1 / value };
    Ok(d2 + d1 * theta.cos() / sin + nonlinear + (cprime - c_const / (sin * sin)) * value)
}

/// Residual of the separated azimuthal equation at angle `phi`:
///
/// ```text
/// Ph'' + nl (Ph')^2 / Ph - C Ph
/// ```
pub fn phi_residual(
    ph: &Field1D,
    c_const: f64,
    params: &SeparationParams,
    phi: f64,
    engine: &DiffEngine,
) -> Result<f64> {
    let value = ph.eval(phi)?;
    let d1 = ph.deriv1(phi, engine)?;
    let d2 = ph.deriv2(phi, engine)?;
    let nl = params.nonlinear_factor();
    if nl != 0.0 && value == 0.0 {
        return Err(Error::Domain("Phi vanishes where the nonlinear term divides by it".into()));
    }
    let nonlinear = if nl == 0.0 { 0.0 } else { nl * d1 * d1 / value };
    Ok(d2 + nonlinear - c_const * value)
}

/// Gap of the logarithm identity `(grad ln f)^2 + Lap ln f - Lap f / f`,
/// which vanishes for every positive twice-differentiable `f`.
pub fn log_identity_gap(
    f: &ScalarField,
    t: f64,
    x: &[f64],
    engine: &DiffEngine,
) -> Result<C64> {
    let value = f.eval(t, x)?;
    if value.re <= 0.0 {
        return Err(Error::Domain(format!(
            "logarithm identity needs f > 0, got {value} at {x:?}"
        )));
    }
    let ln_f = f.ln();
    let grad_ln = engine.gradient(&ln_f, t, x)?;
    let grad_ln_sq: C64 = grad_ln.iter().map(|g| g * g).sum();
    let lap_ln = engine.laplacian(&ln_f, t, x)?;
    let lap_f = engine.laplacian(f, t, x)?;
    Ok(grad_ln_sq + lap_ln - lap_f / value)
}

// ---------------------------------------------------------------------------
// Exponential integral
// ---------------------------------------------------------------------------

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Negative-axis switch point between the power series and the continued
/// fraction. Beyond here the alternating series cancels catastrophically
/// (its largest term outgrows the result by enough digits to spoil the
/// 1e-12 target), while the continued fraction is already at full
/// precision.
const EI_NEG_SERIES_LIMIT: f64 = 4.0;

/// On the positive axis the divergent asymptotic expansion only reaches
/// double precision once its smallest term (about `e^-x sqrt(2 pi x)`)
/// drops below the target, so the convergent all-positive series keeps
/// going until here.
const EI_POS_ASYMPTOTIC_SWITCH: f64 = 40.0;

/// The exponential integral `Ei(x)`: the principal value of the integral of
/// `e^t / t` from minus infinity to `x`. Singular at `x = 0`.
///
/// Branches: power series `gamma + ln|x| + sum x^n/(n n!)` on `[-4, 0)` and
/// `(0, 40]`; asymptotic expansion `e^x/x sum n!/x^n` beyond `40`; and the
/// continued fraction of `E1(-x)` below `-4`.
pub fn exp_integral(x: f64) -> Result<f64> {
    if x == 0.0 || x.is_nan() {
        return Err(Error::Domain(
            "Ei has a logarithmic singularity at x = 0".into(),
        ));
    }
    if x > 0.0 {
        if x <= EI_POS_ASYMPTOTIC_SWITCH {
            Ok(ei_series(x))
        } else {
            Ok(ei_asymptotic(x))
        }
    } else if x >= -EI_NEG_SERIES_LIMIT {
        Ok(ei_series(x))
    } else {
        Ok(-e1_continued_fraction(-x))
    }
}

/// The three computational branches, exposed for seam-continuity checks.
#[doc(hidden)]
pub mod ei_branches {
    pub fn series(x: f64) -> f64 {
        super::ei_series(x)
    }

    pub fn asymptotic(x: f64) -> f64 {
        super::ei_asymptotic(x)
    }

    pub fn continued_fraction(x: f64) -> f64 {
        -super::e1_continued_fraction(-x)
    }

    pub const NEG_SERIES_LIMIT: f64 = super::EI_NEG_SERIES_LIMIT;
    pub const POS_ASYMPTOTIC_SWITCH: f64 = super::EI_POS_ASYMPTOTIC_SWITCH;
}

/// Power series with compensated summation; at least 30 terms are taken
/// before the convergence check may stop it.
fn ei_series(x: f64) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let add = |v: f64, sum: &mut f64, comp: &mut f64| {
        let y = v - *comp;
        let t = *sum + y;
        *comp = (t - *sum) - y;
        *sum = t;
    };
    let mut term = 1.0f64; // x^n / n!
    for n in 1..=400u32 {
        term *= x / n as f64;
        let contribution = term / n as f64;
        add(contribution, &mut sum, &mut comp);
        if n >= 30 && contribution.abs() < f64::EPSILON * sum.abs() {
            break;
        }
    }
    EULER_GAMMA + x.abs().ln() + sum
}

/// Asymptotic expansion `e^x/x (1 + 1!/x + 2!/x^2 + ...)`, truncated at the
/// smallest term.
fn ei_asymptotic(x: f64) -> f64 {
    let mut sum = 1.0f64;
    let mut term = 1.0f64;
    for n in 1..=120u32 {
        let next = term * n as f64 / x;
        if next.abs() >= term.abs() {
            break; // divergence sets in; stop at the optimal truncation
        }
        term = next;
        sum += term;
        if term.abs() < f64::EPSILON * sum.abs() {
            break;
        }
    }
    x.exp() / x * sum
}

/// Modified-Lentz evaluation of the continued fraction for `E1(x)`, `x > 0`:
/// `E1(x) = e^-x / (x + 1 - 1/(x + 3 - 4/(x + 5 - 9/...)))`.
fn e1_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=200u32 {
        let a = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).abs() < f64::EPSILON {
            break;
        }
    }
    h * (-x).exp()
}
