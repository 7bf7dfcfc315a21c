//! Model parameters for the penalized nonlocal phase-field energy.

use crate::error::{Error, Result};

/// `c0 = 1/(6 sqrt 2)`: the cost of the optimal 0-to-1 profile of the
/// quartic well `W(s) = s^2 (s-1)^2 / 4`, i.e. `int_0^1 sqrt(2 W)`.
/// Dividing the interface and well terms by it makes a unit-length flat
/// interface cost one energy unit.
pub const C0: f64 = 0.11785113019775792; // 1/(6*sqrt(2))

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Interface width.
    pub eps: f64,
    /// Strength of the nonlocal repulsion term.
    pub lambda: f64,
    /// Time step of the gradient flow.
    pub tau: f64,
    /// Exponent of the `eps^-kappa` prefactor on the connectedness terms.
    pub kappa: f64,
    /// Weight of the phase-one connectedness penalty.
    pub zeta1: f64,
    /// Weight of the phase-zero connectedness penalty.
    pub zeta2: f64,
    /// Threshold width of the connectedness profiles; must lie in (0, 1/2).
    pub alpha: f64,
    /// When `alpha` is not given explicitly it defaults to `eps^s_exponent`.
    pub s_exponent: f64,
    /// Mean of the evolving field; conserved by the flow.
    pub m_bar: f64,
    /// Profile normalization, see [`C0`].
    pub c0: f64,
    /// Normalization of the connectedness profile: `c1 = 6 / alpha^3`,
    /// so that the profile integrates to one over `[1-alpha, 1]`.
    pub c1: f64,
}

impl ModelParams {
    /// Builds a validated parameter set. Pass `alpha = None` to derive it
    /// as `eps^s_exponent`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        eps: f64,
        lambda: f64,
        tau: f64,
        kappa: f64,
        zeta1: f64,
        zeta2: f64,
        alpha: Option<f64>,
        s_exponent: f64,
        m_bar: f64,
    ) -> Result<ModelParams> {
        if !(s_exponent > 0.0 && s_exponent < 0.5) {
            return Err(Error::InvalidParameter {
                name: "s_exponent",
                message: format!("must lie in (0, 1/2), got {s_exponent}"),
            });
        }
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidParameter {
                name: "eps",
                message: format!("must be positive, got {eps}"),
            });
        }
        let alpha = alpha.unwrap_or_else(|| eps.powf(s_exponent));
        let p = ModelParams {
            eps,
            lambda,
            tau,
            kappa,
            zeta1,
            zeta2,
            alpha,
            s_exponent,
            m_bar,
            c0: C0,
            c1: 6.0 / (alpha * alpha * alpha),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive: [(&'static str, f64); 2] = [("eps", self.eps), ("tau", self.tau)];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    message: format!("must be positive and finite, got {v}"),
                });
            }
        }
        let nonneg: [(&'static str, f64); 4] = [
            ("lambda", self.lambda),
            ("kappa", self.kappa),
            ("zeta1", self.zeta1),
            ("zeta2", self.zeta2),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    message: format!("must be nonnegative and finite, got {v}"),
                });
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                message: format!("must lie in (0, 1/2), got {}", self.alpha),
            });
        }
        if !(self.s_exponent > 0.0 && self.s_exponent < 0.5) {
            return Err(Error::InvalidParameter {
                name: "s_exponent",
                message: format!("must lie in (0, 1/2), got {}", self.s_exponent),
            });
        }
        if (self.c0 - C0).abs() > 4.0 * f64::EPSILON {
            return Err(Error::InvalidParameter {
                name: "c0",
                message: format!("must equal 1/(6 sqrt 2) = {C0}, got {}", self.c0),
            });
        }
        let c1_expected = 6.0 / (self.alpha * self.alpha * self.alpha);
        if (self.c1 - c1_expected).abs() > 1e-9 * c1_expected {
            return Err(Error::InvalidParameter {
                name: "c1",
                message: format!("must equal 6/alpha^3 = {c1_expected}, got {}", self.c1),
            });
        }
        if !self.m_bar.is_finite() {
            return Err(Error::InvalidParameter {
                name: "m_bar",
                message: "must be finite".into(),
            });
        }
        Ok(())
    }
}
