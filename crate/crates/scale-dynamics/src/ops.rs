//! Extended derivatives along piecewise-smooth trajectories.
//!
//! A trajectory splits into a regular part (piecewise-C1, held here as
//! explicit segments with analytic derivatives) and a deviant part carrying
//! the scale behavior. The deviant part is never evaluated pointwise: it
//! enters only through the regime's comparison constants, which weight the
//! order-`j_alpha` correction terms of the extended derivatives.
//!
//! The right and left derivatives of the regular part give the one-sided
//! operators; their complex combination is the box derivative, which reduces
//! to `d/dt` in the linear regime.

use crate::fields::{DiffEngine, ScalarField, VectorField};
use crate::regime::{combine_lambda, ScaleRegime};
use crate::{C64, Error, EtaParameter, Result};
use std::sync::Arc;

type PathFn = dyn Fn(f64) -> Vec<f64> + Send + Sync;

/// One smooth piece of a trajectory: position and its analytic derivative on
/// the closed interval `[t_start, t_end]`.
#[derive(Clone)]
pub struct Segment {
    t_start: f64,
    t_end: f64,
    position: Arc<PathFn>,
    derivative: Arc<PathFn>,
}

impl Segment {
    pub fn new<P, D>(t_start: f64, t_end: f64, position: P, derivative: D) -> Result<Self>
    where
        P: Fn(f64) -> Vec<f64> + Send + Sync + 'static,
        D: Fn(f64) -> Vec<f64> + Send + Sync + 'static,
    {
        if !(t_start < t_end) {
            return Err(Error::Invalid(format!(
                "segment needs t_start < t_end, got [{t_start}, {t_end}]"
            )));
        }
        Ok(Self {
            t_start,
            t_end,
            position: Arc::new(position),
            derivative: Arc::new(derivative),
        })
    }
}

/// A trajectory under a scale regime: explicit regular part (contiguous
/// smooth segments with one-sided derivatives at the breakpoints) plus the
/// regime descriptor standing in for the deviant part.
#[derive(Clone)]
pub struct AsymptoticTrajectory {
    segments: Vec<Segment>,
    regime: ScaleRegime,
}

impl AsymptoticTrajectory {
    pub fn new(segments: Vec<Segment>, regime: ScaleRegime) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Invalid("trajectory needs at least one segment".into()));
        }
        for pair in segments.windows(2) {
            if pair[0].t_end != pair[1].t_start {
                return Err(Error::Invalid(format!(
                    "segments must be contiguous: {} != {}",
                    pair[0].t_end, pair[1].t_start
                )));
            }
        }
        let x0 = (segments[0].position)(segments[0].t_start);
        if x0.len() != regime.dimension() {
            return Err(Error::Invalid(format!(
                "trajectory dimension {} does not match regime dimension {}",
                x0.len(),
                regime.dimension()
            )));
        }
        Ok(Self { segments, regime })
    }

    /// Single-segment trajectory from a smooth path.
    pub fn smooth<P, D>(
        t_start: f64,
        t_end: f64,
        position: P,
        derivative: D,
        regime: ScaleRegime,
    ) -> Result<Self>
    where
        P: Fn(f64) -> Vec<f64> + Send + Sync + 'static,
        D: Fn(f64) -> Vec<f64> + Send + Sync + 'static,
    {
        Self::new(
            vec![Segment::new(t_start, t_end, position, derivative)?],
            regime,
        )
    }

    pub fn regime(&self) -> &ScaleRegime {
        &self.regime
    }

    pub fn dimension(&self) -> usize {
        self.regime.dimension()
    }

    pub fn domain(&self) -> (f64, f64) {
        (
            self.segments[0].t_start,
            self.segments[self.segments.len() - 1].t_end,
        )
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let (t0, t1) = self.domain();
        if t < t0 || t > t1 {
            return Err(Error::OutOfDomain(format!("t = {t} outside [{t0}, {t1}]")));
        }
        Ok(())
    }

    /// Segment owning the right-sided neighborhood of `t`.
    fn segment_right(&self, t: f64) -> &Segment {
        self.segments
            .iter()
            .find(|s| s.t_start <= t && t < s.t_end)
            .unwrap_or(&self.segments[self.segments.len() - 1])
    }

    /// Segment owning the left-sided neighborhood of `t`.
    fn segment_left(&self, t: f64) -> &Segment {
        self.segments
            .iter()
            .find(|s| s.t_start < t && t <= s.t_end)
            .unwrap_or(&self.segments[0])
    }

    pub fn position(&self, t: f64) -> Result<Vec<f64>> {
        self.check_time(t)?;
        Ok((self.segment_right(t).position)(t))
    }

    /// Right derivative of the regular part.
    pub fn delta_derivative(&self, t: f64) -> Result<Vec<f64>> {
        self.check_time(t)?;
        Ok((self.segment_right(t).derivative)(t))
    }

    /// Left derivative of the regular part.
    pub fn nabla_derivative(&self, t: f64) -> Result<Vec<f64>> {
        self.check_time(t)?;
        Ok((self.segment_left(t).derivative)(t))
    }

    /// The complex box-time derivative
    /// `1/2 (d+ + d-) + i eta/2 (d+ - d-)` of the regular part.
    pub fn box_time(&self, t: f64, eta: EtaParameter) -> Result<Vec<C64>> {
        let right = self.delta_derivative(t)?;
        let left = self.nabla_derivative(t)?;
        let ieta_half = C64::new(0.0, 0.5) * eta.as_complex();
        Ok(right
            .iter()
            .zip(&left)
            .map(|(r, l)| C64::new(0.5 * (r + l), 0.0) + ieta_half * C64::new(r - l, 0.0))
            .collect())
    }

    /// Velocity of the trajectory: the box-time derivative taken with the
    /// regime's own `eta`. The identity function picks up no correction term
    /// for `j_alpha >= 2`, so this is the full extended derivative of the
    /// position.
    pub fn velocity(&self, t: f64) -> Result<Vec<C64>> {
        self.box_time(t, self.regime.eta())
    }
}

/// All multi-indices of length `j` over axes `0..d`, in lexicographic order.
fn multi_indices(d: usize, j: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..j {
        let mut next = Vec::with_capacity(out.len() * d);
        for prefix in &out {
            for k in 0..d {
                let mut idx = prefix.clone();
                idx.push(k);
                next.push(idx);
            }
        }
        out = next;
    }
    out
}

/// The correction term of the box derivative acting on a smooth function:
/// the combined-constant-weighted sum of all order-`j_alpha` partials,
/// divided by `j_alpha!`.
pub fn lambda_correction(
    f: &ScalarField,
    regime: &ScaleRegime,
    t: f64,
    x: &[f64],
    engine: &DiffEngine,
) -> Result<C64> {
    if regime.is_linear() || regime.has_vanishing_lambda() {
        return Ok(C64::new(0.0, 0.0));
    }
    let j = regime.j_alpha();
    if j > 4 {
        return Err(Error::Unsupported(format!(
            "correction order j_alpha = {j} exceeds the supported maximum of 4"
        )));
    }
    let factorial: f64 = (1..=j).map(|n| n as f64).product();
    let mut acc = C64::new(0.0, 0.0);
    for index in multi_indices(regime.dimension(), j as usize) {
        let lam = combine_lambda(regime, &index)?;
        if lam == C64::new(0.0, 0.0) {
            continue;
        }
        acc += lam * engine.mixed_partial(f, &index, t, x)?;
    }
    Ok(acc / C64::new(factorial, 0.0))
}

/// One-sided variant of [`lambda_correction`]: products of `lambda+` for the
/// right-extended derivative, or `(-1)^(j_alpha - 1)` times products of
/// `lambda-` for the left-extended one.
fn one_sided_correction(
    f: &ScalarField,
    regime: &ScaleRegime,
    t: f64,
    x: &[f64],
    engine: &DiffEngine,
    right: bool,
) -> Result<C64> {
    if regime.is_linear() || regime.has_vanishing_lambda() {
        return Ok(C64::new(0.0, 0.0));
    }
    let j = regime.j_alpha();
    if j > 4 {
        return Err(Error::Unsupported(format!(
            "correction order j_alpha = {j} exceeds the supported maximum of 4"
        )));
    }
    let factorial: f64 = (1..=j).map(|n| n as f64).product();
    let constants = if right {
        regime.lambda_plus()
    } else {
        regime.lambda_minus()
    };
    let sign = if right || j % 2 == 1 { 1.0 } else { -1.0 };
    let mut acc = C64::new(0.0, 0.0);
    for index in multi_indices(regime.dimension(), j as usize) {
        let prod: f64 = index.iter().map(|&k| constants[k]).product();
        if prod == 0.0 {
            continue;
        }
        acc += C64::new(prod, 0.0) * engine.mixed_partial(f, &index, t, x)?;
    }
    Ok(acc * C64::new(sign / factorial, 0.0))
}

/// Classical part of the box derivative of `f` along the trajectory: the
/// chain rule with the complex box-time velocity,
/// `df/dt + grad f . box_time(X)`.
pub fn box_time_of_function(
    f: &ScalarField,
    traj: &AsymptoticTrajectory,
    t: f64,
    engine: &DiffEngine,
) -> Result<C64> {
    let x = traj.position(t)?;
    let velocity = traj.velocity(t)?;
    let mut acc = engine.time_derivative(f, t, &x)?;
    let grad = engine.gradient(f, t, &x)?;
    for (g, v) in grad.iter().zip(&velocity) {
        acc += g * v;
    }
    Ok(acc)
}

/// Box derivative of a smooth function along the trajectory: classical chain
/// rule plus the combined-constant correction.
pub fn box_of_function(
    f: &ScalarField,
    traj: &AsymptoticTrajectory,
    regime: &ScaleRegime,
    t: f64,
    engine: &DiffEngine,
) -> Result<C64> {
    let x = traj.position(t)?;
    Ok(box_time_of_function(f, traj, t, engine)? + lambda_correction(f, regime, t, &x, engine)?)
}

/// Right-extended derivative of `f` along the trajectory.
pub fn delta_of_function(
    f: &ScalarField,
    traj: &AsymptoticTrajectory,
    regime: &ScaleRegime,
    t: f64,
    engine: &DiffEngine,
) -> Result<C64> {
    let x = traj.position(t)?;
    let d_plus = traj.delta_derivative(t)?;
    let mut acc = engine.time_derivative(f, t, &x)?;
    for (g, v) in engine.gradient(f, t, &x)?.iter().zip(&d_plus) {
        acc += g * C64::new(*v, 0.0);
    }
    Ok(acc + one_sided_correction(f, regime, t, &x, engine, true)?)
}

/// Left-extended derivative of `f` along the trajectory.
pub fn nabla_of_function(
    f: &ScalarField,
    traj: &AsymptoticTrajectory,
    regime: &ScaleRegime,
    t: f64,
    engine: &DiffEngine,
) -> Result<C64> {
    let x = traj.position(t)?;
    let d_minus = traj.nabla_derivative(t)?;
    let mut acc = engine.time_derivative(f, t, &x)?;
    for (g, v) in engine.gradient(f, t, &x)?.iter().zip(&d_minus) {
        acc += g * C64::new(*v, 0.0);
    }
    Ok(acc + one_sided_correction(f, regime, t, &x, engine, false)?)
}

/// Residual of the extended Newton equation `m box(V) + grad U = 0` for a
/// velocity field `V(t, x)` and potential `U`, evaluated at `(t, x)`.
///
/// The box derivative of the field follows the flow of `V` itself: the
/// convective derivative `dV/dt + (V . grad) V` plus the correction term per
/// component.
pub fn newton_residual(
    velocity: &VectorField,
    potential: &ScalarField,
    regime: &ScaleRegime,
    mass: f64,
    t: f64,
    x: &[f64],
    engine: &DiffEngine,
) -> Result<Vec<C64>> {
    let v_here = velocity.eval(t, x)?;
    let grad_u = engine.gradient(potential, t, x)?;
    let mut out = Vec::with_capacity(velocity.dim());
    for (k, comp) in velocity.components().iter().enumerate() {
        let mut box_v = engine.time_derivative(comp, t, x)?;
        for (j, vj) in v_here.iter().enumerate() {
            box_v += vj * engine.partial(comp, j, t, x)?;
        }
        box_v += lambda_correction(comp, regime, t, x, engine)?;
        out.push(C64::new(mass, 0.0) * box_v + grad_u[k]);
    }
    Ok(out)
}

/// Second box derivative of the moment of inertia `I = m X^2`, in the
/// order-two uniform regime:
///
/// ```text
/// box^2 I = 2m V.V + 2m X.[box_t V + (lambda/2) Lap V] + 2m lambda div V
/// ```
///
/// `V` must be supplied as a field over space so that its Laplacian and
/// divergence are available; the trajectory provides the evaluation point
/// and the convective velocity.
pub fn box_squared_inertia(
    traj: &AsymptoticTrajectory,
    velocity: &VectorField,
    regime: &ScaleRegime,
    mass: f64,
    t: f64,
    engine: &DiffEngine,
) -> Result<C64> {
    if regime.j_alpha() != 2 && !regime.has_vanishing_lambda() {
        return Err(Error::Unsupported(
            "the inertia identity is an order-two result; need j_alpha = 2 or vanishing lambda"
                .into(),
        ));
    }
    let lambda = regime.uniform_diagonal_lambda()?;
    let x = traj.position(t)?;
    let v_here = velocity.eval(t, &x)?;
    let m = C64::new(mass, 0.0);

    let v_dot_v: C64 = v_here.iter().map(|v| v * v).sum();
    let mut acc = 2.0 * m * v_dot_v;

    // The box-time derivative of V follows the flow of V itself, matching
    // the convective form used in the Newton residual.
    for (k, comp) in velocity.components().iter().enumerate() {
        let mut box_t = engine.time_derivative(comp, t, &x)?;
        for (j, vj) in v_here.iter().enumerate() {
            box_t += vj * engine.partial(comp, j, t, &x)?;
        }
        let lap = engine.laplacian(comp, t, &x)?;
        acc += 2.0 * m * C64::new(x[k], 0.0) * (box_t + 0.5 * lambda * lap);
    }

    acc += 2.0 * m * lambda * engine.divergence(velocity, t, &x)?;
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Field1D;
    use crate::regime::diagonal_lambda;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn linear_1d() -> ScaleRegime {
        ScaleRegime::linear(1, EtaParameter::MinusOne)
    }

    fn abs_path(regime: ScaleRegime) -> AsymptoticTrajectory {
        AsymptoticTrajectory::new(
            vec![
                Segment::new(-1.0, 0.0, |t| vec![-t], |_| vec![-1.0]).unwrap(),
                Segment::new(0.0, 1.0, |t| vec![t], |_| vec![1.0]).unwrap(),
            ],
            regime,
        )
        .unwrap()
    }

    #[test]
    fn one_sided_derivatives() {
        let traj = AsymptoticTrajectory::smooth(
            0.0,
            2.0,
            |t| vec![t * t],
            |t| vec![2.0 * t],
            linear_1d(),
        )
        .unwrap();
        assert_eq!(traj.delta_derivative(1.0).unwrap(), vec![2.0]);
        assert_eq!(traj.nabla_derivative(1.0).unwrap(), vec![2.0]);

        let kink = abs_path(linear_1d());
        assert_eq!(kink.delta_derivative(0.0).unwrap(), vec![1.0]);
        assert_eq!(kink.nabla_derivative(0.0).unwrap(), vec![-1.0]);

        let still = AsymptoticTrajectory::smooth(
            0.0,
            1.0,
            |_| vec![4.0],
            |_| vec![0.0],
            linear_1d(),
        )
        .unwrap();
        assert_eq!(still.delta_derivative(0.5).unwrap(), vec![0.0]);
        assert!(still.delta_derivative(2.0).is_err());
    }

    #[test]
    fn box_time_cases() {
        let smooth = AsymptoticTrajectory::smooth(
            0.0,
            3.0,
            |t| vec![t.powi(3)],
            |t| vec![3.0 * t * t],
            linear_1d(),
        )
        .unwrap();
        let v = smooth.box_time(2.0, EtaParameter::MinusOne).unwrap();
        assert_eq!(v, vec![c(12.0, 0.0)]);

        let kink = abs_path(linear_1d());
        let v = kink.box_time(0.0, EtaParameter::MinusOne).unwrap();
        assert_eq!(v, vec![c(0.0, -1.0)]);
        // velocity() uses the regime's eta (also -1 here).
        assert_eq!(kink.velocity(0.0).unwrap(), vec![c(0.0, -1.0)]);
    }

    #[test]
    fn box_time_recombines_one_sided_parts() {
        let kink = abs_path(linear_1d());
        for eta in EtaParameter::ALL {
            for t in [-0.5, 0.0, 0.5] {
                let d_plus = kink.delta_derivative(t).unwrap()[0];
                let d_minus = kink.nabla_derivative(t).unwrap()[0];
                let want = c(0.5 * (d_plus + d_minus), 0.0)
                    + c(0.0, 0.5) * eta.as_complex() * c(d_plus - d_minus, 0.0);
                assert_eq!(kink.box_time(t, eta).unwrap()[0], want);
            }
        }
    }

    #[test]
    fn contiguity_and_dimension_checks() {
        let gap = AsymptoticTrajectory::new(
            vec![
                Segment::new(0.0, 1.0, |t| vec![t], |_| vec![1.0]).unwrap(),
                Segment::new(1.5, 2.0, |t| vec![t], |_| vec![1.0]).unwrap(),
            ],
            linear_1d(),
        );
        assert!(gap.is_err());
        let wrong_dim = AsymptoticTrajectory::smooth(
            0.0,
            1.0,
            |t| vec![t, t],
            |_| vec![1.0, 1.0],
            linear_1d(),
        );
        assert!(wrong_dim.is_err());
    }

    #[test]
    fn box_of_function_linear_regime_is_total_derivative() {
        // f(t, x) = t + x^2 along x(t) = t^2: d/dt f = 1 + 2 t^2 * 2t.
        let f = ScalarField::from_fn(1, |t, x| c(t + x[0] * x[0], 0.0));
        let traj = AsymptoticTrajectory::smooth(
            0.0,
            2.0,
            |t| vec![t * t],
            |t| vec![2.0 * t],
            linear_1d(),
        )
        .unwrap();
        let engine = DiffEngine::order2();
        let t = 1.2;
        let got = box_of_function(&f, &traj, traj.regime(), t, &engine).unwrap();
        let want = 1.0 + 2.0 * (t * t) * (2.0 * t);
        assert_relative_eq!(got.re, want, max_relative = 1e-8);
        assert!(got.im.abs() < 1e-12);
    }

    #[test]
    fn box_of_function_quadratic_correction() {
        // d = 1, f(x) = x^2, j_alpha = 2: the correction is exactly the
        // combined constant (second derivative 2 over 2!).
        let f = ScalarField::from_fn(1, |_, x| c(x[0] * x[0], 0.0))
            .with_time_derivative(|_, _| c(0.0, 0.0))
            .with_gradient(|_, _, x| c(2.0 * x[0], 0.0))
            .with_hessian(|_, _, _, _| c(2.0, 0.0));
        let regime =
            ScaleRegime::new(0.5, vec![0.8], vec![0.3], EtaParameter::MinusOne).unwrap();
        let lam = combine_lambda(&regime, &[0, 0]).unwrap();
        let traj = AsymptoticTrajectory::smooth(
            0.0,
            1.0,
            |_| vec![0.5],
            |_| vec![0.0],
            regime.clone(),
        )
        .unwrap();
        let engine = DiffEngine::order2();
        let got = box_of_function(&f, &traj, &regime, 0.3, &engine).unwrap();
        // Stationary path: classical part vanishes, correction = lambda.
        assert_relative_eq!(got.re, lam.re, max_relative = 1e-12);
        assert_relative_eq!(got.im, lam.im, max_relative = 1e-12);
    }

    #[test]
    fn box_of_function_time_only() {
        let f = ScalarField::from_fn(2, |t, _| c(t, 0.0));
        let regime =
            ScaleRegime::new(0.5, vec![1.0; 2], vec![2.0; 2], EtaParameter::PlusOne).unwrap();
        let traj = AsymptoticTrajectory::smooth(
            0.0,
            1.0,
            |t| vec![t.sin(), t.cos()],
            |t| vec![t.cos(), -t.sin()],
            regime.clone(),
        )
        .unwrap();
        let engine = DiffEngine::order2();
        let got = box_of_function(&f, &traj, &regime, 0.4, &engine).unwrap();
        assert_relative_eq!(got.re, 1.0, max_relative = 1e-9);
        assert!(got.im.abs() < 1e-9);
    }

    #[test]
    fn one_sided_function_derivatives() {
        let f = ScalarField::from_fn(1, |_, x| c(x[0] * x[0], 0.0))
            .with_time_derivative(|_, _| c(0.0, 0.0))
            .with_gradient(|_, _, x| c(2.0 * x[0], 0.0))
            .with_hessian(|_, _, _, _| c(2.0, 0.0));
        let regime =
            ScaleRegime::new(0.5, vec![0.8], vec![0.3], EtaParameter::MinusOne).unwrap();
        let traj = abs_path(regime.clone());
        let engine = DiffEngine::order2();
        // At the kink of |t| with x = 0: gradient term vanishes, so only the
        // one-sided corrections survive: (lambda+)^2 / 2! * 2 = (lambda+)^2
        // and -(lambda-)^2 for the left (sign (-1)^(j-1) with j = 2).
        let d = delta_of_function(&f, &traj, &regime, 0.0, &engine).unwrap();
        assert_relative_eq!(d.re, 0.64, max_relative = 1e-10);
        let n = nabla_of_function(&f, &traj, &regime, 0.0, &engine).unwrap();
        assert_relative_eq!(n.re, -0.09, max_relative = 1e-10);

        // Recombination: box = (delta + nabla)/2 + i eta (delta - nabla)/2.
        let b = box_of_function(&f, &traj, &regime, 0.0, &engine).unwrap();
        let eta = regime.eta().as_complex();
        let want = 0.5 * (d + n) + c(0.0, 0.5) * eta * (d - n);
        assert!((b - want).norm() < 1e-12);
    }

    #[test]
    fn linearity_of_box_operator() {
        let f = ScalarField::from_fn(2, |t, x| c((x[0] + t).sin(), 0.0));
        let g = ScalarField::from_fn(2, |_, x| c(x[0] * x[1], x[1]));
        let a = c(1.3, -0.2);
        let b = c(0.4, 2.0);
        let combo = f.scale(a).add(&g.scale(b)).unwrap();
        let regime =
            ScaleRegime::new(0.5, vec![0.7, 0.2], vec![0.1, 0.4], EtaParameter::PlusI).unwrap();
        let traj = AsymptoticTrajectory::smooth(
            0.0,
            1.0,
            |t| vec![t, 1.0 - t],
            |_| vec![1.0, -1.0],
            regime.clone(),
        )
        .unwrap();
        let engine = DiffEngine::order2();
        let t = 0.6;
        let lhs = box_of_function(&combo, &traj, &regime, t, &engine).unwrap();
        let rhs = a * box_of_function(&f, &traj, &regime, t, &engine).unwrap()
            + b * box_of_function(&g, &traj, &regime, t, &engine).unwrap();
        assert!((lhs - rhs).norm() < 1e-6, "lhs {lhs} rhs {rhs}");
    }

    fn circular_orbit_velocity_field(gm: f64) -> VectorField {
        // v(x) = sqrt(gm) / r^(3/2) * (-y, x, 0): circular Kepler orbits.
        let comp = |k: usize| {
            ScalarField::from_fn(3, move |_, x: &[f64]| {
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                let f = gm.sqrt() / r.powf(1.5);
                match k {
                    0 => c(-f * x[1], 0.0),
                    1 => c(f * x[0], 0.0),
                    _ => c(0.0, 0.0),
                }
            })
            .with_time_derivative(|_, _| c(0.0, 0.0))
        };
        VectorField::new(vec![comp(0), comp(1), comp(2)]).unwrap()
    }

    #[test]
    fn newton_residual_trivial_and_classical() {
        // Constant velocity, zero potential.
        let v = VectorField::new(vec![
            ScalarField::constant(2, c(1.0, 0.0)),
            ScalarField::constant(2, c(-2.0, 0.5)),
        ])
        .unwrap();
        let u = ScalarField::constant(2, c(0.0, 0.0));
        let regime =
            ScaleRegime::new(0.5, vec![1.0; 2], vec![1.0; 2], EtaParameter::MinusOne).unwrap();
        let engine = DiffEngine::order2();
        let res = newton_residual(&v, &u, &regime, 2.0, 0.0, &[0.4, 0.6], &engine).unwrap();
        assert!(res.iter().all(|z| z.norm() < 1e-12));

        // Classical circular Kepler orbit, lambda = 0.
        let gm = 1.0;
        let v = circular_orbit_velocity_field(gm);
        let u = ScalarField::from_fn(3, move |_, x: &[f64]| {
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            c(-gm / r, 0.0)
        });
        let linear = ScaleRegime::linear(3, EtaParameter::MinusOne);
        let res =
            newton_residual(&v, &u, &linear, 1.0, 0.0, &[1.3, -0.4, 0.0], &engine).unwrap();
        for z in res {
            assert!(z.norm() < 1e-6, "residual {z}");
        }
    }

    #[test]
    fn inertia_identity_trivial_and_classical() {
        // Constant V, zero potential: box^2 I = 2 m V.V.
        let v = VectorField::new(vec![
            ScalarField::constant(3, c(1.0, 0.0)),
            ScalarField::constant(3, c(0.0, 2.0)),
            ScalarField::constant(3, c(0.5, 0.0)),
        ])
        .unwrap();
        let regime = ScaleRegime::uniform_order_half(3, 1.0, EtaParameter::MinusOne);
        let traj = AsymptoticTrajectory::smooth(
            0.0,
            1.0,
            |t| vec![t, 2.0 * t, 0.5 * t],
            |_| vec![1.0, 2.0, 0.5],
            regime.clone(),
        )
        .unwrap();
        let engine = DiffEngine::order2();
        let m = 1.5;
        let got = box_squared_inertia(&traj, &v, &regime, m, 0.5, &engine).unwrap();
        let v_dot_v = c(1.0, 0.0) * c(1.0, 0.0) + c(0.0, 2.0) * c(0.0, 2.0) + c(0.25, 0.0);
        assert!((got - 2.0 * C64::new(m, 0.0) * v_dot_v).norm() < 1e-9);

        // lambda = 0, classical circular orbit: d^2(m r^2)/dt^2 = 0.
        let gm = 1.0;
        let radius: f64 = 1.7;
        let omega = (gm / radius.powi(3)).sqrt();
        let linear = ScaleRegime::linear(3, EtaParameter::MinusOne);
        let orbit = AsymptoticTrajectory::smooth(
            0.0,
            10.0,
            move |t| {
                vec![
                    radius * (omega * t).cos(),
                    radius * (omega * t).sin(),
                    0.0,
                ]
            },
            move |t| {
                vec![
                    -radius * omega * (omega * t).sin(),
                    radius * omega * (omega * t).cos(),
                    0.0,
                ]
            },
            linear.clone(),
        )
        .unwrap();
        let vfield = circular_orbit_velocity_field(gm);
        let got = box_squared_inertia(&orbit, &vfield, &linear, 1.0, 2.0, &engine).unwrap();
        assert!(got.norm() < 1e-6, "got {got}");
    }

    #[test]
    fn inertia_identity_matches_virial_combination_for_ground_state() {
        // Radial field V = i Lambda beta r_hat (the ground-state velocity),
        // checked against 2K - gamma U + lambda m div V computed separately.
        let lambda_scale = 1.0;
        let beta = 1.0;
        let cval = C64::new(0.0, lambda_scale * beta);
        let comp = |k: usize| {
            ScalarField::from_fn(3, move |_, x: &[f64]| {
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                cval * C64::new(x[k] / r, 0.0)
            })
            .with_time_derivative(|_, _| c(0.0, 0.0))
            .with_gradient(move |j, _, x: &[f64]| {
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                let delta = if j == k { 1.0 } else { 0.0 };
                cval * C64::new(delta / r - x[j] * x[k] / r.powi(3), 0.0)
            })
        };
        let vfield = VectorField::new(vec![comp(0), comp(1), comp(2)]).unwrap();
        let regime = ScaleRegime::uniform_order_half(3, lambda_scale, EtaParameter::MinusOne);
        let lambda = diagonal_lambda(lambda_scale, lambda_scale, EtaParameter::MinusOne);
        let radius = 2.5;
        let traj = AsymptoticTrajectory::smooth(
            0.0,
            1.0,
            move |_| vec![radius, 0.0, 0.0],
            |_| vec![0.0, 0.0, 0.0],
            regime.clone(),
        )
        .unwrap();
        let engine = DiffEngine::order2();
        let m = 1.0;
        let half_box2 =
            0.5 * box_squared_inertia(&traj, &vfield, &regime, m, 0.5, &engine).unwrap();

        // Independent route: kinetic + correction - gamma U with
        // U = -gm/r, gm = lambda^2 * beta (the ground-state relation).
        let x = [radius, 0.0, 0.0];
        let v = vfield.eval(0.5, &x).unwrap();
        let two_k: C64 = C64::new(m, 0.0) * v.iter().map(|z| z * z).sum::<C64>();
        let div_v = engine.divergence(&vfield, 0.5, &x).unwrap();
        let gm = lambda_scale * lambda_scale * beta;
        let u = -gm * m / radius;
        let gamma = -1.0;
        let combo = two_k + lambda * C64::new(m, 0.0) * div_v - C64::new(gamma * u, 0.0);
        assert!(
            (half_box2 - combo).norm() < 1e-8,
            "half_box2 {half_box2} combo {combo}"
        );
    }

    #[test]
    fn unsupported_j_alpha_is_rejected() {
        let f = ScalarField::from_fn(1, |_, x| c(x[0].powi(5), 0.0));
        let regime = ScaleRegime::new(0.2, vec![1.0], vec![1.0], EtaParameter::PlusOne).unwrap();
        assert_eq!(regime.j_alpha(), 5);
        let traj = AsymptoticTrajectory::smooth(
            0.0,
            1.0,
            |t| vec![t],
            |_| vec![1.0],
            regime.clone(),
        )
        .unwrap();
        let engine = DiffEngine::order2();
        assert!(box_of_function(&f, &traj, &regime, 0.5, &engine).is_err());
    }

    #[test]
    fn radial_profile_laplacian_through_field() {
        let profile = Field1D::from_fn(0.0, 10.0, |r| r * r)
            .unwrap()
            .with_derivatives(|r| 2.0 * r, |_| 2.0);
        let f = ScalarField::from_radial(&profile, 3);
        let engine = DiffEngine::order2();
        let lap = engine.laplacian(&f, 0.0, &[1.0, 2.0, 2.0]).unwrap();
        assert_relative_eq!(lap.re, 6.0, max_relative = 1e-12);
    }
}
