//! Two-asset Kou jump-diffusion model: parameters, joint jump-size density,
//! expected relative jump sizes and the put-on-the-average payoff.

use crate::scalar::Scalar;
use thiserror::Error;

/// Validation and domain errors of the model layer.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("eta_p = {0} must exceed 1 for a finite expected jump size")]
    DivergentJumpMean(f64),
    #[error("jump density requires positive arguments, got ({0}, {1})")]
    NonpositiveJumpSize(f64, f64),
}

/// Full market/model parameter set for the two-asset Kou jump-diffusion model.
///
/// Volatilities are per √year, `r` and `lambda` per year, the remaining jump
/// parameters dimensionless, `strike` and `s_max` in currency and `maturity`
/// in years. `s_max` is the truncation bound of the computational domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KouParams<T> {
    pub sigma1: T,
    pub sigma2: T,
    pub r: T,
    pub rho: T,
    pub lambda: T,
    /// Upward-jump probability of asset 1; the downward probability is `1 - p1`.
    pub p1: T,
    pub p2: T,
    /// Double-exponential rates of the log-jump marks (up/down per asset).
    pub eta_p1: T,
    pub eta_q1: T,
    pub eta_p2: T,
    pub eta_q2: T,
    pub strike: T,
    pub maturity: T,
    pub s_max: T,
}

impl<T: Scalar> KouParams<T> {
    /// Downward-jump probability of asset 1.
    pub fn q1(&self) -> T {
        T::one() - self.p1
    }

    /// Downward-jump probability of asset 2.
    pub fn q2(&self) -> T {
        T::one() - self.p2
    }

    /// Expected relative jump size of asset 1.
    pub fn kappa1(&self) -> Result<T, ModelError> {
        kappa(self.p1, self.eta_p1, self.eta_q1)
    }

    /// Expected relative jump size of asset 2.
    pub fn kappa2(&self) -> Result<T, ModelError> {
        kappa(self.p2, self.eta_p2, self.eta_q2)
    }

    /// Converts the parameter set to another scalar type.
    pub fn cast<S: Scalar>(&self) -> KouParams<S> {
        KouParams {
            sigma1: S::lit(self.sigma1.wide()),
            sigma2: S::lit(self.sigma2.wide()),
            r: S::lit(self.r.wide()),
            rho: S::lit(self.rho.wide()),
            lambda: S::lit(self.lambda.wide()),
            p1: S::lit(self.p1.wide()),
            p2: S::lit(self.p2.wide()),
            eta_p1: S::lit(self.eta_p1.wide()),
            eta_q1: S::lit(self.eta_q1.wide()),
            eta_p2: S::lit(self.eta_p2.wide()),
            eta_q2: S::lit(self.eta_q2.wide()),
            strike: S::lit(self.strike.wide()),
            maturity: S::lit(self.maturity.wide()),
            s_max: S::lit(self.s_max.wide()),
        }
    }

    /// Checks every model invariant; returns the first violation found.
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidParameter(msg));
        if !(self.sigma1 > T::zero()) || !(self.sigma2 > T::zero()) {
            return bad(format!(
                "volatilities must be positive, got sigma1={}, sigma2={}",
                self.sigma1, self.sigma2
            ));
        }
        if !(self.rho >= -T::one() && self.rho <= T::one()) {
            return bad(format!("correlation must lie in [-1, 1], got {}", self.rho));
        }
        if !(self.lambda >= T::zero()) {
            return bad(format!(
                "jump intensity must be nonnegative, got {}",
                self.lambda
            ));
        }
        for (name, p) in [("p1", self.p1), ("p2", self.p2)] {
            if !(p >= T::zero() && p <= T::one()) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if !(self.eta_p1 > T::one()) {
            return Err(ModelError::DivergentJumpMean(self.eta_p1.wide()));
        }
        if !(self.eta_p2 > T::one()) {
            return Err(ModelError::DivergentJumpMean(self.eta_p2.wide()));
        }
        if !(self.eta_q1 > T::zero()) || !(self.eta_q2 > T::zero()) {
            return bad(format!(
                "eta_q rates must be positive, got eta_q1={}, eta_q2={}",
                self.eta_q1, self.eta_q2
            ));
        }
        if !(self.strike > T::zero()) {
            return bad(format!("strike must be positive, got {}", self.strike));
        }
        if !(self.maturity > T::zero()) {
            return bad(format!("maturity must be positive, got {}", self.maturity));
        }
        if !(self.s_max > T::lit(2.0) * self.strike) {
            return bad(format!(
                "domain bound s_max={} must exceed twice the strike {}",
                self.s_max, self.strike
            ));
        }
        Ok(())
    }
}

/// The three benchmark parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SetLabel {
    Set1,
    Set2,
    Set3,
}

impl SetLabel {
    /// Parses `"set1"`/`"1"` style labels (case-insensitive).
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "set1" | "1" => Some(Self::Set1),
            "set2" | "2" => Some(Self::Set2),
            "set3" | "3" => Some(Self::Set3),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Set1 => "set1",
            Self::Set2 => "set2",
            Self::Set3 => "set3",
        }
    }
}

impl std::fmt::Display for SetLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A labelled benchmark parameter set.
#[derive(Debug, Clone, Copy)]
pub struct ParameterSet {
    pub label: SetLabel,
    pub params: KouParams<f64>,
}

impl ParameterSet {
    /// Returns the benchmark set for a label. Domain bounds are
    /// `s_max = 20K, 10K, 30K` for sets 1, 2, 3.
    pub fn by_label(label: SetLabel) -> Self {
        let params = match label {
            SetLabel::Set1 => KouParams {
                sigma1: 0.12,
                sigma2: 0.15,
                r: 0.05,
                rho: 0.30,
                lambda: 0.50,
                p1: 0.40,
                p2: 0.60,
                eta_p1: 1.0 / 0.20,
                eta_q1: 1.0 / 0.15,
                eta_p2: 1.0 / 0.18,
                eta_q2: 1.0 / 0.14,
                strike: 100.0,
                maturity: 1.0,
                s_max: 2000.0,
            },
            SetLabel::Set2 => KouParams {
                sigma1: 0.15,
                sigma2: 0.20,
                r: 0.05,
                rho: 0.50,
                lambda: 0.20,
                p1: 0.3445,
                p2: 0.50,
                eta_p1: 3.0465,
                eta_q1: 3.0775,
                eta_p2: 3.0,
                eta_q2: 2.0,
                strike: 100.0,
                maturity: 0.2,
                s_max: 1000.0,
            },
            SetLabel::Set3 => KouParams {
                sigma1: 0.20,
                sigma2: 0.30,
                r: 0.05,
                rho: 0.70,
                lambda: 8.0,
                p1: 0.60,
                p2: 0.65,
                eta_p1: 5.0,
                eta_q1: 4.0,
                eta_p2: 4.0,
                eta_q2: 3.0,
                strike: 100.0,
                maturity: 1.0,
                s_max: 3000.0,
            },
        };
        Self { label, params }
    }
}

/// Expected relative jump size `E[Y - 1]` of one asset:
/// `p·η_p/(η_p−1) + q·η_q/(η_q+1) − 1`.
pub fn kappa<T: Scalar>(p: T, eta_p: T, eta_q: T) -> Result<T, ModelError> {
    if !(eta_p > T::one()) {
        return Err(ModelError::DivergentJumpMean(eta_p.wide()));
    }
    if !(eta_q > T::zero()) {
        return Err(ModelError::InvalidParameter(format!(
            "eta_q must be positive, got {eta_q}"
        )));
    }
    if !(p >= T::zero() && p <= T::one()) {
        return Err(ModelError::InvalidParameter(format!(
            "jump probability must lie in [0, 1], got {p}"
        )));
    }
    let one = T::one();
    Ok(p * eta_p / (eta_p - one) + (one - p) * eta_q / (eta_q + one) - one)
}

/// Joint density of the two relative jump sizes.
///
/// Four branches split by the unit point per asset; the boundary values
/// `y_i = 1` belong to the `y_i >= 1` branches.
pub fn density<T: Scalar>(y1: T, y2: T, params: &KouParams<T>) -> Result<T, ModelError> {
    if !(y1 > T::zero()) || !(y2 > T::zero()) {
        return Err(ModelError::NonpositiveJumpSize(y1.wide(), y2.wide()));
    }
    let one = T::one();
    let (p1, q1) = (params.p1, params.q1());
    let (p2, q2) = (params.p2, params.q2());
    let (ep1, eq1) = (params.eta_p1, params.eta_q1);
    let (ep2, eq2) = (params.eta_p2, params.eta_q2);
    let v = match (y1 >= one, y2 >= one) {
        (false, false) => q1 * q2 * eq1 * eq2 * y1.powf(eq1 - one) * y2.powf(eq2 - one),
        (true, false) => p1 * q2 * ep1 * eq2 * y1.powf(-ep1 - one) * y2.powf(eq2 - one),
        (false, true) => q1 * p2 * eq1 * ep2 * y1.powf(eq1 - one) * y2.powf(-ep2 - one),
        (true, true) => p1 * p2 * ep1 * ep2 * y1.powf(-ep1 - one) * y2.powf(-ep2 - one),
    };
    Ok(v)
}

/// Payoff of the European put-on-the-average option,
/// `max(0, K − (s1+s2)/2)`.
pub fn payoff<T: Scalar>(s1: T, s2: T, strike: T) -> T {
    (strike - T::lit(0.5) * (s1 + s2)).max(T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_collapses_when_p_is_zero() {
        // p = 0 leaves only the downward branch: eta_q/(eta_q+1) - 1 = -1/4.
        let k = kappa::<f64>(0.0, 2.0, 3.0).unwrap();
        assert!((k - (-0.25)).abs() < 1e-15);
    }

    #[test]
    fn kappa_collapses_when_p_is_one() {
        let k = kappa::<f64>(1.0, 2.0, 7.0).unwrap();
        assert!((k - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kappa_rejects_divergent_mean() {
        assert!(matches!(
            kappa::<f64>(0.5, 1.0, 3.0),
            Err(ModelError::DivergentJumpMean(_))
        ));
        assert!(matches!(
            kappa::<f64>(0.5, 0.7, 3.0),
            Err(ModelError::DivergentJumpMean(_))
        ));
    }

    #[test]
    fn density_unit_point_uses_upward_branches() {
        let p = ParameterSet::by_label(SetLabel::Set1).params;
        let f = density(1.0, 1.0, &p).unwrap();
        let expect = p.p1 * p.p2 * p.eta_p1 * p.eta_p2;
        assert!((f - expect).abs() <= 1e-13 * expect);
    }

    #[test]
    fn density_rejects_nonpositive_arguments() {
        let p = ParameterSet::by_label(SetLabel::Set1).params;
        assert!(density(0.0, 1.0, &p).is_err());
        assert!(density(1.0, -0.5, &p).is_err());
    }

    #[test]
    fn payoff_examples() {
        assert_eq!(payoff::<f64>(0.0, 0.0, 100.0), 100.0);
        assert_eq!(payoff(100.0, 100.0, 100.0), 0.0);
        assert_eq!(payoff(90.0, 100.0, 100.0), 5.0);
    }

    #[test]
    fn payoff_piecewise_linear_along_constant_sum_rays() {
        // s1 + s2 = const means the payoff is constant along the ray.
        let k: f64 = 100.0;
        for c in [50.0, 150.0, 199.0, 201.0, 320.0] {
            let base = payoff(c / 2.0, c / 2.0, k);
            for t in [0.1, 0.4, 0.9] {
                assert!((payoff(c * t, c * (1.0 - t), k) - base).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn parameter_sets_validate() {
        for label in [SetLabel::Set1, SetLabel::Set2, SetLabel::Set3] {
            let set = ParameterSet::by_label(label);
            set.params.validate().unwrap();
        }
        // Exact decimal expectations for set 1.
        let p = ParameterSet::by_label(SetLabel::Set1).params;
        assert_eq!(p.eta_p1, 5.0);
        assert_eq!(p.s_max, 20.0 * p.strike);
        let p2 = ParameterSet::by_label(SetLabel::Set2).params;
        assert_eq!(p2.s_max, 10.0 * p2.strike);
        let p3 = ParameterSet::by_label(SetLabel::Set3).params;
        assert_eq!(p3.s_max, 30.0 * p3.strike);
    }

    #[test]
    fn labels_parse() {
        assert_eq!(SetLabel::parse("set2"), Some(SetLabel::Set2));
        assert_eq!(SetLabel::parse("3"), Some(SetLabel::Set3));
        assert_eq!(SetLabel::parse("set9"), None);
    }
}
