//! Physical constants of the isentropic two-phase model.

use alloc::format;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    /// Adiabatic exponent, `p = cp * rho^gamma`.
    pub gamma: f64,
    /// Pressure coefficient.
    pub cp: f64,
    /// Interface (capillary) parameter.
    pub eps: f64,
    /// Shear viscosity.
    pub nu: f64,
    /// Bulk viscosity.
    pub lambda: f64,
    /// Gravity along `y` (negative points down).
    pub g: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { gamma: 5.0 / 3.0, cp: 1.0, eps: 1e-4, nu: 1.0, lambda: 0.1, g: -10.0 }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::config(format!("{what} = {v} is out of range")));
        if !(self.gamma > 1.0) {
            return bad("gamma (must be > 1)", self.gamma);
        }
        if !(self.cp > 0.0) {
            return bad("cp (must be > 0)", self.cp);
        }
        if !(self.eps > 0.0) {
            return bad("eps (must be > 0)", self.eps);
        }
        if !(self.nu > 0.0) {
            return bad("nu (must be > 0)", self.nu);
        }
        if !(self.lambda >= 0.0) {
            return bad("lambda (must be >= 0)", self.lambda);
        }
        if !self.g.is_finite() {
            return bad("g", self.g);
        }
        Ok(())
    }

    #[inline]
    pub fn pressure(&self, rho: f64) -> f64 {
        self.cp * libm::pow(rho, self.gamma)
    }

    /// `p'(rho) = cp * gamma * rho^(gamma - 1)`.
    #[inline]
    pub fn pressure_slope(&self, rho: f64) -> f64 {
        self.cp * self.gamma * libm::pow(rho, self.gamma - 1.0)
    }

    #[inline]
    pub fn sound_speed(&self, rho: f64) -> f64 {
        libm::sqrt(self.pressure_slope(rho))
    }
}

/// Convex part of the double-well derivative, `psi1'(c) = 2c`.
#[inline]
pub fn psi1_prime(c: f64) -> f64 {
    2.0 * c
}

/// Concave part, `psi2'(c) = c^3 - 3c`.
#[inline]
pub fn psi2_prime(c: f64) -> f64 {
    c * c * c - 3.0 * c
}

#[inline]
pub fn psi2_second(c: f64) -> f64 {
    3.0 * c * c - 3.0
}

/// `psi'(c) = c^3 - c` for `psi(c) = (c^2 - 1)^2 / 4`.
#[inline]
pub fn psi_prime(c: f64) -> f64 {
    c * c * c - c
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_validate() {
        ModelParams::default().validate().unwrap();
        let mut p = ModelParams { gamma: 1.0, ..ModelParams::default() };
        assert!(p.validate().is_err());
        p = ModelParams { lambda: -1e-3, ..ModelParams::default() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn sound_speed_at_unit_density() {
        let p = ModelParams::default();
        assert!((p.sound_speed(1.0) - libm::sqrt(5.0 / 3.0)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn convex_split_sums_to_psi_prime(c in -3.0f64..3.0) {
            let lhs = psi1_prime(c) + psi2_prime(c);
            prop_assert!((lhs - psi_prime(c)).abs() <= 1e-12 * (1.0 + c.abs().powi(3)));
        }
    }
}
