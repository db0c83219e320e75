//! Scale-regime parameters and the comparison-constant algebra.
//!
//! A regime records how an observed trajectory behaves across resolutions:
//! the fractional order `alpha` (with `j_alpha = floor(1/alpha)` the order of
//! the correction term), per-axis comparison constants `lambda+`/`lambda-`
//! weighting the right/left corrections, and the complex unit `eta` that
//! mixes the one-sided derivatives into the box derivative.

use crate::{C64, Error, Result};
use std::fmt;

/// The complex unit entering the box derivative. Exactly one of `+1`, `-1`,
/// `+i`, `-i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtaParameter {
    PlusOne,
    MinusOne,
    PlusI,
    MinusI,
}

impl EtaParameter {
    /// All four admitted values.
    pub const ALL: [EtaParameter; 4] = [
        EtaParameter::PlusOne,
        EtaParameter::MinusOne,
        EtaParameter::PlusI,
        EtaParameter::MinusI,
    ];

    pub fn as_complex(self) -> C64 {
        match self {
            EtaParameter::PlusOne => C64::new(1.0, 0.0),
            EtaParameter::MinusOne => C64::new(-1.0, 0.0),
            EtaParameter::PlusI => C64::new(0.0, 1.0),
            EtaParameter::MinusI => C64::new(0.0, -1.0),
        }
    }

    /// `eta^2` as a real number: `+1` for `+-1`, `-1` for `+-i`.
    pub fn eta_squared(self) -> f64 {
        match self {
            EtaParameter::PlusOne | EtaParameter::MinusOne => 1.0,
            EtaParameter::PlusI | EtaParameter::MinusI => -1.0,
        }
    }

    /// True for the two real values, where "real and imaginary part" language
    /// is meaningful and the split systems are supported.
    pub fn is_real(self) -> bool {
        matches!(self, EtaParameter::PlusOne | EtaParameter::MinusOne)
    }

    /// The real value `+1.0` or `-1.0`; errors for `+-i`.
    pub fn real_value(self) -> Result<f64> {
        match self {
            EtaParameter::PlusOne => Ok(1.0),
            EtaParameter::MinusOne => Ok(-1.0),
            _ => Err(Error::Unsupported(
                "eta = +-i has no real value; split operations require eta = +-1".into(),
            )),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text.trim() {
            "+1" | "1" => Ok(EtaParameter::PlusOne),
            "-1" => Ok(EtaParameter::MinusOne),
            "+i" | "i" => Ok(EtaParameter::PlusI),
            "-i" => Ok(EtaParameter::MinusI),
            other => Err(Error::Parse(format!(
                "eta must be one of +1, -1, +i, -i (got {other:?})"
            ))),
        }
    }
}

impl fmt::Display for EtaParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EtaParameter::PlusOne => "+1",
            EtaParameter::MinusOne => "-1",
            EtaParameter::PlusI => "+i",
            EtaParameter::MinusI => "-i",
        };
        f.write_str(s)
    }
}

/// A complex constant held in decomposed form `re + i*eta*im`.
///
/// Used for the combined comparison constant `lambda = lambda_re + i eta
/// lambda_im` when splitting complex equations into their real and
/// `eta`-imaginary parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaDecomposition {
    pub re_part: f64,
    pub im_part: f64,
    pub eta: EtaParameter,
}

impl EtaDecomposition {
    pub fn new(re_part: f64, im_part: f64, eta: EtaParameter) -> Self {
        Self {
            re_part,
            im_part,
            eta,
        }
    }

    /// `re + i*eta*im`, exactly.
    pub fn as_complex(&self) -> C64 {
        C64::new(self.re_part, 0.0)
            + C64::new(0.0, 1.0) * self.eta.as_complex() * C64::new(self.im_part, 0.0)
    }

    /// Decompose a complex constant with respect to a real `eta`.
    ///
    /// For `eta = +-1` the decomposition is `re = Re(z)`, `im = eta * Im(z)`.
    pub fn from_complex(z: C64, eta: EtaParameter) -> Result<Self> {
        let eta_real = eta.real_value()?;
        Ok(Self::new(z.re, eta_real * z.im, eta))
    }
}

/// `floor(1/alpha)` for `alpha` in `(0, 1]`: the derivative order of the
/// fractional correction term.
pub fn j_alpha_of(alpha: f64) -> Result<u32> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    Ok((1.0 / alpha).floor() as u32)
}

/// The combined comparison constant for one multi-index, as produced by the
/// box derivative acting on a smooth function:
///
/// ```text
/// lambda_idx = 1/2 (P+ + (-1)^(j-1) P-)  +  i eta/2 (P+ + (-1)^j P-)
/// ```
///
/// where `P+-` are the products of the per-axis constants over the
/// multi-index and `j` is its length. For a regime with independent
/// components the cross products are postulated to vanish, so off-diagonal
/// multi-indices yield zero.
pub fn combine_lambda(regime: &ScaleRegime, index: &[usize]) -> Result<C64> {
    let j = regime.j_alpha() as usize;
    if index.len() != j {
        return Err(Error::Invalid(format!(
            "multi-index length {} does not match j_alpha = {j}",
            index.len()
        )));
    }
    for &k in index {
        if k >= regime.dimension() {
            return Err(Error::Invalid(format!(
                "multi-index entry {k} out of range for dimension {}",
                regime.dimension()
            )));
        }
    }
    if regime.independent_components() && index.windows(2).any(|w| w[0] != w[1]) {
        return Ok(C64::new(0.0, 0.0));
    }
    let mut prod_plus = 1.0;
    let mut prod_minus = 1.0;
    for &k in index {
        prod_plus *= regime.lambda_plus()[k];
        prod_minus *= regime.lambda_minus()[k];
    }
    let sign_lead = if j % 2 == 0 { -1.0 } else { 1.0 }; // (-1)^(j-1)
    let sign_eta = -sign_lead; // (-1)^j
    let half = C64::new(0.5 * (prod_plus + sign_lead * prod_minus), 0.0);
    let eta_half = C64::new(0.0, 0.5) * regime.eta().as_complex()
        * C64::new(prod_plus + sign_eta * prod_minus, 0.0);
    Ok(half + eta_half)
}

/// The diagonal combined constant for a uniform regime with independent
/// components:
///
/// ```text
/// lambda = (lambda+ - lambda-)/2 + i eta (lambda+ + lambda-)/2
/// ```
///
/// Note this is *linear* in the per-axis constants, unlike the products in
/// [`combine_lambda`]; the two coincide on the diagonal only when the
/// constants are 0 or 1. The Kepler pipeline uses this form throughout, which
/// is the one consistent with the identification `i*lambda = Lambda` in the
/// Schrodinger reduction.
pub fn diagonal_lambda(lambda_plus: f64, lambda_minus: f64, eta: EtaParameter) -> C64 {
    let re = 0.5 * (lambda_plus - lambda_minus);
    let im = 0.5 * (lambda_plus + lambda_minus);
    C64::new(re, 0.0) + C64::new(0.0, 1.0) * eta.as_complex() * C64::new(im, 0.0)
}

/// Scale-regime descriptor: fractional order, per-axis comparison constants,
/// and the complex unit of the box derivative.
///
/// Invariants enforced at construction:
/// * `alpha` in `(0, 1]` and `j_alpha = floor(1/alpha)`;
/// * `lambda+`/`lambda-` have equal length (the spatial dimension);
/// * `alpha = 1` (the linear regime) forces vanishing comparison constants,
///   so every downstream correction term is exactly zero.
///
/// A regime may additionally be marked as having *independent components*:
/// the postulate that cross products of the per-axis constants vanish, so
/// only diagonal multi-indices contribute to correction terms.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleRegime {
    alpha: f64,
    j_alpha: u32,
    lambda_plus: Vec<f64>,
    lambda_minus: Vec<f64>,
    eta: EtaParameter,
    independent: bool,
}

impl ScaleRegime {
    pub fn new(
        alpha: f64,
        lambda_plus: Vec<f64>,
        lambda_minus: Vec<f64>,
        eta: EtaParameter,
    ) -> Result<Self> {
        let j_alpha = j_alpha_of(alpha)?;
        if lambda_plus.is_empty() || lambda_plus.len() != lambda_minus.len() {
            return Err(Error::Invalid(format!(
                "lambda vectors must be nonempty and of equal length (got {} and {})",
                lambda_plus.len(),
                lambda_minus.len()
            )));
        }
        if alpha == 1.0
            && lambda_plus
                .iter()
                .chain(lambda_minus.iter())
                .any(|&l| l != 0.0)
        {
            return Err(Error::Invalid(
                "alpha = 1 is the linear regime; comparison constants must vanish".into(),
            ));
        }
        Ok(Self {
            alpha,
            j_alpha,
            lambda_plus,
            lambda_minus,
            eta,
        })
    }

    /// The linear regime in dimension `d`: `alpha = 1`, vanishing constants.
    pub fn linear(dimension: usize, eta: EtaParameter) -> Self {
        Self {
            alpha: 1.0,
            j_alpha: 1,
            lambda_plus: vec![0.0; dimension],
            lambda_minus: vec![0.0; dimension],
            eta,
        }
    }

    /// Order-1/2 regime (`j_alpha = 2`) uniform over axes with
    /// `lambda+ = lambda- = lambda_scale`.
    pub fn uniform_order_half(dimension: usize, lambda_scale: f64, eta: EtaParameter) -> Self {
        Self {
            alpha: 0.5,
            j_alpha: 2,
            lambda_plus: vec![lambda_scale; dimension],
            lambda_minus: vec![lambda_scale; dimension],
            eta,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn j_alpha(&self) -> u32 {
        self.j_alpha
    }

    pub fn dimension(&self) -> usize {
        self.lambda_plus.len()
    }

    pub fn lambda_plus(&self) -> &[f64] {
        &self.lambda_plus
    }

    pub fn lambda_minus(&self) -> &[f64] {
        &self.lambda_minus
    }

    pub fn eta(&self) -> EtaParameter {
        self.eta
    }

    /// True in the linear regime (`alpha = 1`), where all corrections vanish.
    pub fn is_linear(&self) -> bool {
        self.alpha == 1.0
    }

    /// True when every comparison constant is zero, so correction terms
    /// vanish even if `alpha < 1`.
    pub fn has_vanishing_lambda(&self) -> bool {
        self.lambda_plus
            .iter()
            .chain(self.lambda_minus.iter())
            .all(|&l| l == 0.0)
    }

    /// The diagonal combined constant of a uniform regime (all axes share the
    /// same `lambda+` and the same `lambda-`). Errors if the regime is not
    /// uniform.
    pub fn uniform_diagonal_lambda(&self) -> Result<C64> {
        let lp = self.lambda_plus[0];
        let lm = self.lambda_minus[0];
        let uniform = self.lambda_plus.iter().all(|&l| l == lp)
            && self.lambda_minus.iter().all(|&l| l == lm);
        if !uniform {
            return Err(Error::Unsupported(
                "diagonal combined constant requires a uniform regime".into(),
            ));
        }
        Ok(diagonal_lambda(lp, lm, self.eta))
    }

    /// Serialize as flat `key=value` text (one pair per line).
    pub fn to_kv_text(&self) -> String {
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:?}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        format!(
            "alpha={:?}\neta={}\nlambda_plus={}\nlambda_minus={}\n",
            self.alpha,
            self.eta,
            join(&self.lambda_plus),
            join(&self.lambda_minus),
        )
    }

    /// Parse the `key=value` form produced by [`ScaleRegime::to_kv_text`].
    /// Unknown keys are rejected; blank lines and `#` comments are skipped.
    pub fn from_kv_text(text: &str) -> Result<Self> {
        let mut alpha = None;
        let mut eta = None;
        let mut lp = None;
        let mut lm = None;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {line:?}")))?;
            let parse_vec = |v: &str| -> Result<Vec<f64>> {
                v.split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<f64>()
                            .map_err(|e| Error::Parse(format!("bad decimal {s:?}: {e}")))
                    })
                    .collect()
            };
            match key.trim() {
                "alpha" => {
                    alpha = Some(value.trim().parse::<f64>().map_err(|e| {
                        Error::Parse(format!("bad alpha {value:?}: {e}"))
                    })?)
                }
                "eta" => eta = Some(EtaParameter::parse(value)?),
                "lambda_plus" => lp = Some(parse_vec(value)?),
                "lambda_minus" => lm = Some(parse_vec(value)?),
                other => return Err(Error::Parse(format!("unknown key {other:?}"))),
            }
        }
        let missing = |name: &str| Error::Parse(format!("missing key {name:?}"));
        ScaleRegime::new(
            alpha.ok_or_else(|| missing("alpha"))?,
            lp.ok_or_else(|| missing("lambda_plus"))?,
            lm.ok_or_else(|| missing("lambda_minus"))?,
            eta.ok_or_else(|| missing("eta"))?,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn j_alpha_examples() {
        assert_eq!(j_alpha_of(0.5).unwrap(), 2);
        assert_eq!(j_alpha_of(1.0).unwrap(), 1);
        assert_eq!(j_alpha_of(0.3).unwrap(), 3);
        assert_eq!(j_alpha_of(0.25).unwrap(), 4);
        assert!(j_alpha_of(0.0).is_err());
        assert!(j_alpha_of(-0.5).is_err());
        assert!(j_alpha_of(1.5).is_err());
    }

    #[test]
    fn eta_squared_values() {
        for eta in EtaParameter::ALL {
            let sq = eta.as_complex() * eta.as_complex();
            assert_eq!(sq, c(eta.eta_squared(), 0.0));
            // (eta^2)^2 = 1 for all four values.
            assert_eq!(eta.eta_squared() * eta.eta_squared(), 1.0);
        }
    }

    #[test]
    fn eta_decomposition_as_complex() {
        let d = EtaDecomposition::new(1.5, -2.0, EtaParameter::MinusOne);
        assert_eq!(d.as_complex(), c(1.5, 2.0));
        let d = EtaDecomposition::new(1.5, -2.0, EtaParameter::PlusI);
        // re + i*i*im = re - im
        assert_eq!(d.as_complex(), c(3.5, 0.0));
        let z = c(0.25, -0.75);
        for eta in [EtaParameter::PlusOne, EtaParameter::MinusOne] {
            let d = EtaDecomposition::from_complex(z, eta).unwrap();
            assert_eq!(d.as_complex(), z);
        }
        assert!(EtaDecomposition::from_complex(z, EtaParameter::PlusI).is_err());
    }

    #[test]
    fn combine_lambda_diagonal_order_two() {
        // All axes lambda+ = a, lambda- = b, index (k,k), eta = -1:
        // 1/2 (a^2 - b^2) - i/2 (a^2 + b^2).
        let (a, b) = (1.3, 0.7);
        let regime =
            ScaleRegime::new(0.5, vec![a; 3], vec![b; 3], EtaParameter::MinusOne).unwrap();
        let got = combine_lambda(&regime, &[1, 1]).unwrap();
        let want = c(0.5 * (a * a - b * b), -0.5 * (a * a + b * b));
        assert_relative_eq!(got.re, want.re, max_relative = 1e-15);
        assert_relative_eq!(got.im, want.im, max_relative = 1e-15);
    }

    #[test]
    fn combine_lambda_vanishing_and_plus_only() {
        let zero = ScaleRegime::new(0.5, vec![0.0; 2], vec![0.0; 2], EtaParameter::PlusOne)
            .unwrap();
        assert_eq!(combine_lambda(&zero, &[0, 1]).unwrap(), c(0.0, 0.0));

        // lambda- = 0, j = 2, eta = +1: 1/2 P+ (1 + i).
        let regime =
            ScaleRegime::new(0.5, vec![2.0, 3.0], vec![0.0, 0.0], EtaParameter::PlusOne).unwrap();
        let got = combine_lambda(&regime, &[0, 1]).unwrap();
        assert_eq!(got, c(3.0, 3.0));
    }

    #[test]
    fn combine_lambda_index_validation() {
        let regime =
            ScaleRegime::new(0.5, vec![1.0; 2], vec![1.0; 2], EtaParameter::MinusOne).unwrap();
        assert!(combine_lambda(&regime, &[0]).is_err());
        assert!(combine_lambda(&regime, &[0, 2]).is_err());
    }

    #[test]
    fn combine_lambda_permutation_invariant() {
        let regime = ScaleRegime::new(
            0.5,
            vec![1.1, -0.4, 0.9],
            vec![0.3, 2.0, -1.5],
            EtaParameter::PlusI,
        )
        .unwrap();
        for k1 in 0..3 {
            for k2 in 0..3 {
                let a = combine_lambda(&regime, &[k1, k2]).unwrap();
                let b = combine_lambda(&regime, &[k2, k1]).unwrap();
                assert_eq!(a, b);
            }
        }
        // Order three as well.
        let regime3 = ScaleRegime::new(
            1.0 / 3.0,
            vec![1.1, -0.4],
            vec![0.3, 2.0],
            EtaParameter::MinusOne,
        )
        .unwrap();
        let a = combine_lambda(&regime3, &[0, 1, 1]).unwrap();
        let b = combine_lambda(&regime3, &[1, 0, 1]).unwrap();
        let c3 = combine_lambda(&regime3, &[1, 1, 0]).unwrap();
        assert_eq!(a, b);
        assert_eq!(b, c3);
    }

    #[test]
    fn diagonal_lambda_examples() {
        // lambda+ = lambda- = Lambda gives i eta Lambda; eta = -1, Lambda = 1 -> -i.
        assert_eq!(
            diagonal_lambda(1.0, 1.0, EtaParameter::MinusOne),
            c(0.0, -1.0)
        );
        assert_eq!(diagonal_lambda(0.0, 0.0, EtaParameter::PlusOne), c(0.0, 0.0));
        assert_eq!(diagonal_lambda(3.0, 1.0, EtaParameter::PlusOne), c(1.0, 2.0));
    }

    #[test]
    fn diagonal_lambda_equal_constants_is_imaginary() {
        for eta in EtaParameter::ALL {
            for lam in [-2.5, 0.0, 0.7, 10.0] {
                let z = diagonal_lambda(lam, lam, eta);
                if eta.is_real() {
                    assert_eq!(z.re, 0.0, "eta={eta} lam={lam}");
                } else {
                    // i*(+-i) = -+1: the "imaginary" part lands on the real
                    // axis but the decomposed real part is still zero.
                    assert_eq!(z.im, 0.0);
                }
            }
        }
    }

    #[test]
    fn regime_construction_rules() {
        assert!(ScaleRegime::new(0.5, vec![1.0; 2], vec![1.0; 3], EtaParameter::PlusOne).is_err());
        assert!(ScaleRegime::new(1.0, vec![1.0], vec![0.0], EtaParameter::PlusOne).is_err());
        let lin = ScaleRegime::linear(3, EtaParameter::MinusOne);
        assert!(lin.is_linear());
        assert!(lin.has_vanishing_lambda());
        assert_eq!(lin.j_alpha(), 1);
        let half = ScaleRegime::uniform_order_half(3, 2.0, EtaParameter::MinusOne);
        assert_eq!(half.j_alpha(), 2);
        assert_eq!(half.uniform_diagonal_lambda().unwrap(), c(0.0, -2.0));
    }

    #[test]
    fn kv_round_trip() {
        let regime = ScaleRegime::new(
            0.5,
            vec![1.25, -0.5, 3.0],
            vec![0.1, 0.2, -0.3],
            EtaParameter::MinusI,
        )
        .unwrap();
        let text = regime.to_kv_text();
        let back = ScaleRegime::from_kv_text(&text).unwrap();
        assert_eq!(regime, back);

        let with_comment = format!("# regime\n{text}\n");
        assert_eq!(ScaleRegime::from_kv_text(&with_comment).unwrap(), regime);

        assert!(ScaleRegime::from_kv_text("alpha=0.5\n").is_err());
        assert!(ScaleRegime::from_kv_text("bogus=1\n").is_err());
        assert!(ScaleRegime::from_kv_text("alpha=x\n").is_err());
    }
}
