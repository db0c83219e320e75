//! Shared test support: an adaptive Gauss-Kronrod quadrature oracle for the
//! exponential integral (independent of the library's fast path) and random
//! polynomial fields with exact analytic partials.

#![allow(dead_code)]

use rand::Rng;
use scale_dynamics::{ScalarField, C64};

// 7-15 Gauss-Kronrod nodes and weights (positive half; nodes are interior).
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let offset = half * XGK[j];
        let sum = f(center - offset) + f(center + offset);
        kronrod += WGK[j] * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    kronrod *= half;
    gauss *= half;
    (kronrod, (kronrod - gauss).abs())
}

fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (value, err) = gk15(f, a, b);
    // The error estimate cannot drop below the roundoff floor of the local
    // contribution; stop subdividing there.
    let floor = 32.0 * f64::EPSILON * value.abs();
    if err <= tol.max(floor) || depth >= 28 {
        return value;
    }
    let mid = 0.5 * (a + b);
    adaptive(f, a, mid, 0.5 * tol, depth + 1) + adaptive(f, mid, b, 0.5 * tol, depth + 1)
}

/// Adaptive Gauss-Kronrod integral of `f` over `[a, b]` (bounds may be
/// reversed) with a relative tolerance anchor.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if a > b {
        return -integrate(f, b, a, rel_tol);
    }
    let (whole, _) = gk15(f, a, b);
    let tol = rel_tol * whole.abs().max(1e-300);
    adaptive(f, a, b, tol, 0)
}

/// Quadrature-only evaluation of the exponential integral: no series, no
/// recurrences, no shared constants with the library implementation.
///
/// For `x < 0`, `Ei(x) = -int_{-x}^inf e^-u/u du`, truncated where the tail
/// is below 1e-30 relative. For `x > 0` the principal value splits into the
/// symmetric part through the singularity, `int_0^1 2 sinh(t)/t dt`, the
/// same negative-axis tail from `-1`, and the regular piece from `1` to `x`.
pub fn ei_oracle(x: f64) -> f64 {
    assert!(x != 0.0, "Ei oracle is singular at zero");
    let decaying = |u: f64| (-u).exp() / u;
    if x < 0.0 {
        let a = -x;
        -integrate(&decaying, a, a + 80.0, 1e-14)
    } else {
        integrate(&|t: f64| 2.0 * t.sinh() / t, 0.0, 1.0, 1e-14)
            - integrate(&decaying, 1.0, 81.0, 1e-14)
            + integrate(&|t: f64| t.exp() / t, 1.0, x, 1e-14)
    }
}

/// A multivariate polynomial in `(t, x)` with exact derivatives, used to
/// build random smooth fields whose analytic partials are trustworthy.
#[derive(Clone, Debug)]
pub struct Poly {
    pub dim: usize,
    /// Terms `coeff * t^tpow * prod_k x_k^powers[k]`.
    pub terms: Vec<(f64, u32, Vec<u32>)>,
}

impl Poly {
    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, tp, pows)| {
                c * t.powi(*tp as i32)
                    * pows
                        .iter()
                        .zip(x)
                        .map(|(p, xi)| xi.powi(*p as i32))
                        .product::<f64>()
            })
            .sum()
    }

    pub fn dt(&self, t: f64, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .filter(|(_, tp, _)| *tp > 0)
            .map(|(c, tp, pows)| {
                c * (*tp as f64)
                    * t.powi(*tp as i32 - 1)
                    * pows
                        .iter()
                        .zip(x)
                        .map(|(p, xi)| xi.powi(*p as i32))
                        .product::<f64>()
            })
            .sum()
    }

    pub fn d1(&self, k: usize, t: f64, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .filter(|(_, _, pows)| pows[k] > 0)
            .map(|(c, tp, pows)| {
                let mut prod = c * t.powi(*tp as i32) * pows[k] as f64;
                for (j, (p, xi)) in pows.iter().zip(x).enumerate() {
                    let p = if j == k { p - 1 } else { *p };
                    prod *= xi.powi(p as i32);
                }
                prod
            })
            .sum()
    }

    pub fn d2(&self, j: usize, k: usize, t: f64, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, tp, pows)| {
                let mut pows = pows.clone();
                let mut factor = *c * t.powi(*tp as i32);
                for axis in [j, k] {
                    if pows[axis] == 0 {
                        return 0.0;
                    }
                    factor *= pows[axis] as f64;
                    pows[axis] -= 1;
                }
                factor
                    * pows
                        .iter()
                        .zip(x)
                        .map(|(p, xi)| xi.powi(*p as i32))
                        .product::<f64>()
            })
            .sum()
    }

    /// Real-valued field with exact analytic partials.
    pub fn to_field(&self) -> ScalarField {
        let (a, b, c, d) = (self.clone(), self.clone(), self.clone(), self.clone());
        ScalarField::from_fn(self.dim, move |t, x| C64::new(a.eval(t, x), 0.0))
            .with_time_derivative(move |t, x| C64::new(b.dt(t, x), 0.0))
            .with_gradient(move |k, t, x| C64::new(c.d1(k, t, x), 0.0))
            .with_hessian(move |j, k, t, x| C64::new(d.d2(j, k, t, x), 0.0))
    }

    /// Random polynomial with total spatial degree at most `max_deg` and a
    /// time power at most 2, coefficients in `[-scale, scale]`.
    pub fn random<R: Rng>(rng: &mut R, dim: usize, max_deg: u32, terms: usize, scale: f64) -> Poly {
        let mut out = Vec::with_capacity(terms);
        for _ in 0..terms {
            let coeff = rng.gen_range(-scale..scale);
            let tpow = rng.gen_range(0..=2u32);
            let mut budget = max_deg;
            let powers = (0..dim)
                .map(|_| {
                    let p = rng.gen_range(0..=budget.min(3));
                    budget -= p;
                    p
                })
                .collect();
            out.push((coeff, tpow, powers));
        }
        Poly { dim, terms: out }
    }

    /// Random polynomial whose every term touches at most one spatial axis,
    /// so all mixed spatial partials vanish identically.
    pub fn random_separable<R: Rng>(
        rng: &mut R,
        dim: usize,
        max_deg: u32,
        terms: usize,
        scale: f64,
    ) -> Poly {
        let mut out = Vec::with_capacity(terms);
        for _ in 0..terms {
            let coeff = rng.gen_range(-scale..scale);
            let tpow = rng.gen_range(0..=2u32);
            let axis = rng.gen_range(0..dim);
            let mut powers = vec![0u32; dim];
            powers[axis] = rng.gen_range(0..=max_deg.min(4));
            out.push((coeff, tpow, powers));
        }
        Poly { dim, terms: out }
    }
}

/// A random nonvanishing complex wave field `exp(g1 + i g2)` from two
/// polynomials, with exact analytic partials.
pub fn random_wave_field<R: Rng>(rng: &mut R, dim: usize) -> ScalarField {
    let g1 = Poly::random(rng, dim, 3, 4, 0.4).to_field();
    let g2 = Poly::random(rng, dim, 3, 4, 0.6).to_field();
    g1.add(&g2.scale(C64::new(0.0, 1.0))).unwrap().exp()
}

/// A random strictly positive field `exp(g)` with exact analytic partials.
pub fn random_positive_field<R: Rng>(rng: &mut R, dim: usize) -> ScalarField {
    Poly::random(rng, dim, 3, 4, 0.5).to_field().exp()
}
