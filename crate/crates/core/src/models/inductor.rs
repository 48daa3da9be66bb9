//! Saturable inductor: logistic differential inductance and its closed-form
//! flux integral.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of a current-dependent (saturating) inductance
///
/// ```text
/// L(i) = L_deepsat + (L_nom - L_deepsat) / (1 + exp((|i| - i_knee) / (sigma · i_knee)))
/// ```
///
/// `L` decreases monotonically from `L_nom` at small currents to
/// `L_deepsat` deep in saturation; `i_knee` locates the transition and
/// `sigma` controls its relative width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaturableInductorParams {
    /// Inductance at zero current (H).
    pub l_nominal: f64,
    /// Inductance deep in saturation (H).
    pub l_deepsat: f64,
    /// Relative width of the saturation transition (dimensionless).
    pub sigma: f64,
    /// Current at the transition midpoint (A).
    pub i_knee: f64,
}

impl SaturableInductorParams {
    /// Validates positivity and ordering of the parameters.
    pub fn validate(&self) -> Result<()> {
        let ok = self.l_deepsat > 0.0
            && self.l_nominal >= self.l_deepsat
            && self.sigma > 0.0
            && self.i_knee > 0.0
            && [self.l_nominal, self.l_deepsat, self.sigma, self.i_knee]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::contract(format!(
                "saturable inductor parameters must satisfy 0 < L_deepsat <= L_nominal, \
                 sigma > 0, i_knee > 0; got {self:?}"
            )))
        }
    }

    /// Transition width in amperes, `a = sigma · i_knee`.
    fn width(&self) -> f64 {
        self.sigma * self.i_knee
    }

    /// Differential inductance `L(i) = dφ/di`.
    pub fn inductance(&self, i: f64) -> f64 {
        let w = (i.abs() - self.i_knee) / self.width();
        self.l_deepsat + (self.l_nominal - self.l_deepsat) * logistic(-w)
    }

    /// Derivative `dL/di` (odd in `i`; zero at `i = 0`).
    pub fn inductance_derivative(&self, i: f64) -> f64 {
        let w = (i.abs() - self.i_knee) / self.width();
        let s = logistic(-w);
        -(self.l_nominal - self.l_deepsat) / self.width() * s * (1.0 - s) * i.signum_or_zero()
    }

    /// Flux linkage `φ(i) = ∫₀^i L(s) ds`, evaluated in closed form.
    ///
    /// For `i >= 0` the logistic integral gives
    /// `φ(i) = L_ds·i + (L_nom − L_ds)·(i − a·[sp((i−i_knee)/a) − sp(−i_knee/a)])`
    /// with `a` the transition width and `sp` the softplus function; the
    /// extension to negative currents is odd.
    pub fn flux(&self, i: f64) -> f64 {
        let a = self.width();
        let mag = i.abs();
        let bracket = softplus((mag - self.i_knee) / a) - softplus(-self.i_knee / a);
        let phi_mag =
            self.l_deepsat * mag + (self.l_nominal - self.l_deepsat) * (mag - a * bracket);
        phi_mag * i.signum_or_zero()
    }
}

trait SignumOrZero {
    fn signum_or_zero(self) -> Self;
}

impl SignumOrZero for f64 {
    /// Like `signum` but maps `0.0` to `0.0` (keeps odd functions odd).
    fn signum_or_zero(self) -> f64 {
        if self == 0.0 {
            0.0
        } else {
            self.signum()
        }
    }
}

/// Numerically stable logistic function `1 / (1 + e^{-z})`.
fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable softplus `ln(1 + e^z)`.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Convenience wrapper: returns `(flux, differential inductance)` at `i`.
pub fn saturable_inductance(params: &SaturableInductorParams, i: f64) -> Result<(f64, f64)> {
    params.validate()?;
    if !i.is_finite() {
        return Err(Error::contract(format!("current must be finite, got {i}")));
    }
    Ok((params.flux(i), params.inductance(i)))
}
