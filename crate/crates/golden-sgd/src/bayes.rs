//! Closed forms behind the derived training constants.
//!
//! Two coupled reformulations of Bayes' theorem — an outer one applying a
//! base-λ logarithm to the posterior ratio and an inner one applying it to
//! the priors — only agree when the prior sits at the golden ratio
//! φ = (√5−1)/2 (the reciprocal of the usual 1.618… convention). Mapping
//! the inner equation's factors onto the unit circle then yields the two
//! training constants this crate exists for:
//!
//! ```text
//! α = √2·φ      ≈ 0.874   (momentum weight)
//! η = (1 − α)²  ≈ 0.016   (learning rate)
//! ```
//!
//! Everything here is a pure function checked numerically; there is no
//! symbolic algebra.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BayesError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("outer residual diverges at phi = pi/2 (log of a vanishing cosine)")]
    Divergence,
}

type Result<T> = std::result::Result<T, BayesError>;

/// The golden ratio φ, the root in (0,1) of p² + p − 1 = 0.
pub fn golden_ratio() -> f64 {
    (5.0_f64.sqrt() - 1.0) / 2.0
}

/// Momentum weight α = √2·φ.
pub fn momentum_alpha() -> f64 {
    2.0_f64.sqrt() * golden_ratio()
}

/// Learning rate η = (1 − α)².
pub fn learning_eta() -> f64 {
    let one_minus_alpha = 1.0 - momentum_alpha();
    one_minus_alpha * one_minus_alpha
}

/// A valid logarithm base: positive and not 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogBase {
    lambda: f64,
}

impl LogBase {
    pub fn new(lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda <= 0.0 || lambda == 1.0 {
            return Err(BayesError::Domain(format!(
                "log base must be positive and != 1, got {lambda}"
            )));
        }
        Ok(LogBase { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// The reciprocal base 1/λ; flips the sign of every logarithm.
    pub fn reciprocal(&self) -> LogBase {
        LogBase {
            lambda: 1.0 / self.lambda,
        }
    }
}

/// An angle on the quarter unit circle, φ ∈ [0, π/2].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleAngle {
    phi: f64,
}

impl CircleAngle {
    pub fn new(phi: f64) -> Result<Self> {
        if !phi.is_finite() || !(0.0..=std::f64::consts::FRAC_PI_2).contains(&phi) {
            return Err(BayesError::Domain(format!(
                "angle must lie in [0, pi/2], got {phi}"
            )));
        }
        Ok(CircleAngle { phi })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn sin(&self) -> f64 {
        self.phi.sin()
    }

    pub fn cos(&self) -> f64 {
        self.phi.cos()
    }
}

/// The four probabilities of the coupled two-process model in canonical form,
/// where the uncertainty principle ties conditionals to priors:
/// P(A) = 1 − P(B|A) and P(B) = 1 − P(A|B).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BayesQuad {
    p_a: f64,
    p_b: f64,
    p_a_given_b: f64,
    p_b_given_a: f64,
}

impl BayesQuad {
    /// Build the canonical quad from the two priors.
    pub fn from_priors(p_a: f64, p_b: f64) -> Result<Self> {
        let unit = |v: f64, name: &str| {
            if !(v.is_finite() && 0.0 < v && v < 1.0) {
                Err(BayesError::Domain(format!(
                    "{name} must lie strictly inside (0,1), got {v}"
                )))
            } else {
                Ok(())
            }
        };
        unit(p_a, "P(A)")?;
        unit(p_b, "P(B)")?;
        Ok(BayesQuad {
            p_a,
            p_b,
            p_a_given_b: 1.0 - p_b,
            p_b_given_a: 1.0 - p_a,
        })
    }

    pub fn p_a(&self) -> f64 {
        self.p_a
    }

    pub fn p_b(&self) -> f64 {
        self.p_b
    }

    pub fn p_a_given_b(&self) -> f64 {
        self.p_a_given_b
    }

    pub fn p_b_given_a(&self) -> f64 {
        self.p_b_given_a
    }

    /// Residual of Bayes' theorem in ratio form,
    /// P(A|B)/P(B|A) − P(A)/P(B); zero when the quad satisfies it.
    pub fn ratio_residual(&self) -> f64 {
        self.p_a_given_b / self.p_b_given_a - self.p_a / self.p_b
    }
}

/// Golden ratio, momentum weight and learning rate bundled together.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    pub golden: f64,
    pub alpha: f64,
    pub eta: f64,
}

impl DerivedConstants {
    pub fn compute() -> Self {
        DerivedConstants {
            golden: golden_ratio(),
            alpha: momentum_alpha(),
            eta: learning_eta(),
        }
    }
}

/// log_λ(x) computed as a natural-log ratio.
pub fn log_base(base: LogBase, x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(BayesError::Domain(format!(
            "log argument must be positive, got {x}"
        )));
    }
    Ok(x.ln() / base.lambda().ln())
}

/// The base λ with log_λ(x) = target, i.e. λ = x^(1/target).
pub fn solve_base(x: f64, target: f64) -> Result<LogBase> {
    if !x.is_finite() || x <= 0.0 || x == 1.0 {
        return Err(BayesError::Domain(format!(
            "x must be positive and != 1, got {x}"
        )));
    }
    if !target.is_finite() || target <= 0.0 {
        return Err(BayesError::Domain(format!(
            "target must be positive, got {target}"
        )));
    }
    LogBase::new(x.powf(1.0 / target))
}

/// The base λ for which x is a fixed point of the logarithm:
/// log_λ(x) = x, i.e. λ = x^(1/x).
pub fn fixed_point_base(x: f64) -> Result<LogBase> {
    solve_base(x, x)
}

/// Residual of the inner equation, p − (1−p)/p. Zero iff p = φ.
pub fn inner_residual(p: f64) -> Result<f64> {
    if !p.is_finite() || p <= 0.0 || p >= 1.0 {
        return Err(BayesError::Domain(format!(
            "p must lie strictly inside (0,1), got {p}"
        )));
    }
    Ok(p - (1.0 - p) / p)
}

/// Numeric route to the golden ratio: bisection on p² + p − 1 over
/// [0.1, 0.9] down to an interval of 1e-12.
///
/// The naive iteration p ← (1−p)/p diverges (the map has slope ≈ −2.618 at
/// the root), so a bracketing method is used instead.
pub fn solve_inner() -> f64 {
    let f = |p: f64| p * p + p - 1.0;
    let (mut lo, mut hi) = (0.1, 0.9);
    debug_assert!(f(lo) < 0.0 && f(hi) > 0.0);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Residual of the outer equation, p_a − sin(φ)·log_λ(cos(φ)).
///
/// At φ = π/2 the cosine vanishes and the logarithm diverges for every base,
/// so that angle is rejected rather than mapped to an infinity sentinel.
pub fn outer_residual(angle: CircleAngle, base: LogBase, p_a: f64) -> Result<f64> {
    if angle.phi() >= std::f64::consts::FRAC_PI_2 {
        return Err(BayesError::Divergence);
    }
    let s = angle.sin();
    if s == 0.0 {
        // sin(0)·log(1) would otherwise evaluate 0·∞-adjacent terms.
        return Ok(p_a);
    }
    Ok(p_a - s * log_base(base, angle.cos())?)
}

/// Term-by-term report of the Pythagorean rewrite of the inner equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainReport {
    /// (1−p)/p, the log argument before the rewrite.
    pub ratio_arg: f64,
    /// 1−p², the log argument after substituting p² = 1−p.
    pub complement_arg: f64,
    /// sin(φ) = p for the angle mapping.
    pub sin_phi: f64,
    /// cos(φ) = √(1−p²).
    pub cos_phi: f64,
    /// Whether the two log arguments coincide; true iff p² = 1−p,
    /// i.e. iff p is the golden ratio (within 1e-12).
    pub args_coincide: bool,
}

/// Evaluate both log arguments of the rewrite chain plus the circle mapping
/// sin(φ) = p. The arguments coincide exactly when p is the golden ratio.
pub fn pythagorean_chain_check(p: f64) -> Result<ChainReport> {
    if !p.is_finite() || p <= 0.0 || p >= 1.0 {
        return Err(BayesError::Domain(format!(
            "p must lie strictly inside (0,1), got {p}"
        )));
    }
    let ratio_arg = (1.0 - p) / p;
    let complement_arg = 1.0 - p * p;
    Ok(ChainReport {
        ratio_arg,
        complement_arg,
        sin_phi: p,
        cos_phi: complement_arg.sqrt(),
        args_coincide: (ratio_arg - complement_arg).abs() < 1e-12,
    })
}

/// The circle angle with sin(φ) = p, i.e. φ = arcsin(p).
pub fn angle_for_p(p: f64) -> Result<CircleAngle> {
    if !p.is_finite() || !(0.0..=1.0).contains(&p) {
        return Err(BayesError::Domain(format!(
            "p must lie in [0,1], got {p}"
        )));
    }
    CircleAngle::new(p.asin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4};

    const TOL: f64 = 1e-12;

    #[test]
    fn golden_ratio_closed_form() {
        let g = golden_ratio();
        assert!((g - 0.618033988749895).abs() < TOL);
        // defining equation g² = 1 − g
        assert!((g * g - (1.0 - g)).abs() < TOL);
        // ratio form (1−g)/g = g
        assert!(((1.0 - g) / g - g).abs() < TOL);
    }

    #[test]
    fn alpha_value_and_identity() {
        let a = momentum_alpha();
        // high-precision oracle: √2·(√5−1)/2 = 0.87403204889764214159…
        assert!((a - 0.874032048897642).abs() < TOL);
        assert!((a / 2.0_f64.sqrt() - golden_ratio()).abs() < TOL);
        assert_eq!(format!("{a:.3}"), "0.874");
    }

    #[test]
    fn eta_value_and_identity() {
        let e = learning_eta();
        // high-precision oracle: (1 − √2·φ)² = 0.0158679247049260…
        assert!((e - 0.0158679).abs() < 1e-6);
        assert!((e.sqrt() - (1.0 - momentum_alpha())).abs() < TOL);
        assert_eq!(format!("{:.3}", e), "0.016");
    }

    #[test]
    fn log_base_known_values() {
        let b2 = LogBase::new(2.0).unwrap();
        assert!((log_base(b2, 8.0).unwrap() - 3.0).abs() < TOL);
        let bh = LogBase::new(0.5).unwrap();
        assert!((log_base(bh, 2.0).unwrap() + 1.0).abs() < TOL);
        let b10 = LogBase::new(10.0).unwrap();
        // independent oracle: ln(7)/ln(10) = 0.8450980400142567
        assert!((log_base(b10, 7.0).unwrap() - 0.845098).abs() < 1e-6);
    }

    #[test]
    fn log_base_domain_errors() {
        let b = LogBase::new(2.0).unwrap();
        assert!(matches!(log_base(b, 0.0), Err(BayesError::Domain(_))));
        assert!(matches!(log_base(b, -3.0), Err(BayesError::Domain(_))));
        assert!(LogBase::new(1.0).is_err());
        assert!(LogBase::new(0.0).is_err());
        assert!(LogBase::new(-2.0).is_err());
    }

    #[test]
    fn solve_base_known_values() {
        assert!((solve_base(2.0, 1.0).unwrap().lambda() - 2.0).abs() < TOL);
        assert!((solve_base(0.5, 0.5).unwrap().lambda() - 0.25).abs() < TOL);
        // λ^φ = φ; numeric root-verified oracle value 0.45904038468223435
        let g = golden_ratio();
        let lam = solve_base(g, g).unwrap();
        assert!((lam.lambda() - 0.4590).abs() < 1e-4);
        assert!((lam.lambda().powf(g) - g).abs() < 1e-12);
    }

    #[test]
    fn solve_base_rejects_degenerate_inputs() {
        assert!(solve_base(1.0, 2.0).is_err());
        assert!(solve_base(0.0, 2.0).is_err());
        assert!(solve_base(2.0, 0.0).is_err());
        assert!(solve_base(2.0, -1.0).is_err());
    }

    #[test]
    fn fixed_point_examples() {
        let r2 = 2.0_f64.sqrt();
        assert!((fixed_point_base(2.0).unwrap().lambda() - r2).abs() < TOL);
        assert!((fixed_point_base(4.0).unwrap().lambda() - r2).abs() < TOL);
        let g = golden_ratio();
        assert!((fixed_point_base(g).unwrap().lambda() - 0.4590).abs() < 1e-4);
        assert!(fixed_point_base(1.0).is_err());
    }

    #[test]
    fn inner_residual_values() {
        assert!(inner_residual(golden_ratio()).unwrap().abs() < TOL);
        assert!((inner_residual(0.5).unwrap() + 0.5).abs() < TOL);
        // direct evaluation: 0.9 − 0.1/0.9 = 0.7888888888888889
        assert!((inner_residual(0.9).unwrap() - 0.788888888888889).abs() < 1e-9);
        assert!(inner_residual(0.0).is_err());
        assert!(inner_residual(1.0).is_err());
    }

    #[test]
    fn solve_inner_agrees_with_closed_form() {
        let p = solve_inner();
        assert!((p - golden_ratio()).abs() < 1e-11);
        assert!(inner_residual(p).unwrap().abs() < 1e-10);
        // bracket endpoints straddle the root
        assert!(inner_residual(0.1).unwrap() < 0.0);
        assert!(inner_residual(0.9).unwrap() > 0.0);
    }

    #[test]
    fn inner_residual_strictly_increasing() {
        let mut prev = f64::NEG_INFINITY;
        for i in 1..1000 {
            let p = i as f64 / 1000.0;
            let r = inner_residual(p).unwrap();
            assert!(r > prev, "not increasing at p = {p}");
            prev = r;
        }
    }

    #[test]
    fn outer_residual_values() {
        let lam = LogBase::new(0.5).unwrap();
        // φ = 0 zeroes both factors, so the residual is just p_a
        let zero = CircleAngle::new(0.0).unwrap();
        assert_eq!(outer_residual(zero, lam, 0.0).unwrap(), 0.0);
        // φ = π/3, λ = 0.5: 1 − sin(π/3)·log₀.₅(0.5) = 1 − sin(π/3)
        let third = CircleAngle::new(FRAC_PI_3).unwrap();
        let r = outer_residual(third, lam, 1.0).unwrap();
        assert!((r - 0.1340).abs() < 1e-4);
        // φ = π/2 diverges
        let top = CircleAngle::new(FRAC_PI_2).unwrap();
        assert_eq!(outer_residual(top, lam, 1.0), Err(BayesError::Divergence));
    }

    #[test]
    fn quarter_angle_sides_are_inv_sqrt2() {
        let a = CircleAngle::new(FRAC_PI_4).unwrap();
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        assert!((a.sin() - inv).abs() < TOL);
        assert!((a.cos() - inv).abs() < TOL);
    }

    #[test]
    fn chain_check_at_golden_and_half() {
        let g = golden_ratio();
        let at_g = pythagorean_chain_check(g).unwrap();
        assert!(at_g.args_coincide);
        assert!((at_g.ratio_arg - g).abs() < TOL);
        assert!((at_g.complement_arg - g).abs() < TOL);

        let at_half = pythagorean_chain_check(0.5).unwrap();
        assert!(!at_half.args_coincide);
        assert!((at_half.ratio_arg - 1.0).abs() < TOL);
        assert!((at_half.complement_arg - 0.75).abs() < TOL);
    }

    #[test]
    fn chain_check_preserves_pythagorean_identity() {
        for i in 1..100 {
            let p = i as f64 / 100.0;
            let rep = pythagorean_chain_check(p).unwrap();
            let s2c2 = rep.sin_phi * rep.sin_phi + rep.cos_phi * rep.cos_phi;
            assert!((s2c2 - 1.0).abs() < TOL);
        }
    }

    #[test]
    fn angle_for_p_values() {
        assert_eq!(angle_for_p(0.0).unwrap().phi(), 0.0);
        assert!((angle_for_p(1.0).unwrap().phi() - FRAC_PI_2).abs() < TOL);
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        assert!((angle_for_p(inv).unwrap().phi() - FRAC_PI_4).abs() < TOL);
        assert!(angle_for_p(-0.1).is_err());
        assert!(angle_for_p(1.1).is_err());
    }

    #[test]
    fn quad_canonical_form() {
        let q = BayesQuad::from_priors(0.3, 0.6).unwrap();
        assert_eq!(q.p_b_given_a(), 1.0 - q.p_a());
        assert_eq!(q.p_a_given_b(), 1.0 - q.p_b());
        assert!(BayesQuad::from_priors(0.0, 0.5).is_err());
        assert!(BayesQuad::from_priors(0.5, 1.0).is_err());
        assert!(BayesQuad::from_priors(-0.1, 0.5).is_err());
    }

    #[test]
    fn quad_ratio_residual_zero_when_bayes_holds() {
        // P(A|B)/P(B|A) = P(A)/P(B) with the canonical complements means
        // (1−p_b)/(1−p_a) = p_a/p_b; pick p_a = p_b = any value.
        let q = BayesQuad::from_priors(0.42, 0.42).unwrap();
        assert!(q.ratio_residual().abs() < TOL);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn solve_base_round_trips(
                x in 0.01f64..10.0,
                target in 0.01f64..5.0,
            ) {
                prop_assume!((x - 1.0).abs() > 1e-6);
                let lam = solve_base(x, target).unwrap();
                let back = log_base(lam, x).unwrap();
                prop_assert!((back - target).abs() < 1e-9);
            }

            #[test]
            fn reciprocal_base_flips_sign(
                lambda in 0.01f64..20.0,
                x in 0.01f64..20.0,
            ) {
                prop_assume!((lambda - 1.0).abs() > 1e-3);
                let base = LogBase::new(lambda).unwrap();
                let pos = log_base(base, x).unwrap();
                let neg = log_base(base.reciprocal(), x).unwrap();
                prop_assert!((pos + neg).abs() < 1e-9 * pos.abs().max(1.0));
            }

            #[test]
            fn outer_residual_zero_at_origin(lambda in 0.01f64..20.0) {
                prop_assume!((lambda - 1.0).abs() > 1e-3);
                let base = LogBase::new(lambda).unwrap();
                let zero = CircleAngle::new(0.0).unwrap();
                prop_assert_eq!(outer_residual(zero, base, 0.0).unwrap(), 0.0);
            }
        }
    }
}
