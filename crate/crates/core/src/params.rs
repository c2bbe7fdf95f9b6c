//! Problem parameters, Hardy-Sobolev critical exponents and regime dispatch.
//!
//! The equation is `-Δu + u = -λ|x|^{-s1}|u|^{p-2}u + |x|^{-s2}|u|^{q-2}u` on `R^N`.
//! Two parameter regions carry a statement:
//!
//! * **Existence**: `p < 2*(s1)`, `q < 2*(s2)`; a positive ground state on the
//!   `M+` branch exists when the exponent condition [`condition21`] holds.
//! * **Critical**: `q = 2*(s2)`, `q < p <= 2*(s1)`; no nonzero solution exists.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the equality test `q = 2*(s2)` (and `p = 2*(s1)` at the critical end).
pub const CRITICAL_EQ_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(rename = "N")]
    pub dim: u32,
    pub lambda: f64,
    pub s1: f64,
    pub s2: f64,
    pub p: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeTag {
    Existence,
    Critical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Regime {
    pub tag: RegimeTag,
    /// Only meaningful for [`RegimeTag::Existence`]; always `false` otherwise.
    pub cond21: bool,
}

/// `2*(s) = 2(N - s)/(N - 2)`.
pub fn critical_exponent(dim: u32, s: f64) -> Result<f64> {
    if dim < 3 {
        return Err(Error::InvalidParameter(format!("N = {dim} must be >= 3")));
    }
    if !(0.0..=2.0).contains(&s) {
        return Err(Error::InvalidParameter(format!(
            "s = {s} must lie in [0, 2]"
        )));
    }
    let n = f64::from(dim);
    Ok(2.0 * (n - s) / (n - 2.0))
}

impl Params {
    pub fn new(dim: u32, lambda: f64, s1: f64, s2: f64, p: f64, q: f64) -> Result<Self> {
        let params = Self {
            dim,
            lambda,
            s1,
            s2,
            p,
            q,
        };
        params.validate()?;
        Ok(params)
    }

    /// Checks the structural invariants (not the regime).
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        let all_finite = [self.lambda, self.s1, self.s2, self.p, self.q]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return bad("parameters must be finite".into());
        }
        if self.dim < 3 {
            return bad(format!("N = {} must be >= 3", self.dim));
        }
        if self.lambda <= 0.0 {
            return bad(format!("lambda = {} must be > 0", self.lambda));
        }
        if !(0.0 <= self.s1 && self.s1 < self.s2 && self.s2 < 2.0) {
            return bad(format!(
                "need 0 <= s1 < s2 < 2, got s1 = {}, s2 = {}",
                self.s1, self.s2
            ));
        }
        if !(2.0 < self.q && self.q < self.p) {
            return bad(format!(
                "need 2 < q < p, got p = {}, q = {}",
                self.p, self.q
            ));
        }
        Ok(())
    }

    pub fn crit_s1(&self) -> f64 {
        let n = f64::from(self.dim);
        2.0 * (n - self.s1) / (n - 2.0)
    }

    pub fn crit_s2(&self) -> f64 {
        let n = f64::from(self.dim);
        2.0 * (n - self.s2) / (n - 2.0)
    }

    pub fn n(&self) -> f64 {
        f64::from(self.dim)
    }

    /// Right-hand side of the exponent condition: `((2 - s2)p + 2(s2 - s1))/(2 - s1)`.
    pub fn cond21_threshold(&self) -> f64 {
        ((2.0 - self.s2) * self.p + 2.0 * (self.s2 - self.s1)) / (2.0 - self.s1)
    }

    /// Regime classification. Errors with [`Error::UnsupportedRegime`] outside the existence and critical regimes.
    pub fn classify(&self) -> Result<Regime> {
        self.validate()?;
        let c1 = self.crit_s1();
        let c2 = self.crit_s2();
        if (self.q - c2).abs() <= CRITICAL_EQ_TOL {
            if self.p <= c1 + CRITICAL_EQ_TOL {
                return Ok(Regime {
                    tag: RegimeTag::Critical,
                    cond21: false,
                });
            }
            return Err(Error::UnsupportedRegime(format!(
                "q = 2*(s2) = {c2} but p = {} > 2*(s1) = {c1}",
                self.p
            )));
        }
        if self.q > c2 {
            return Err(Error::UnsupportedRegime(format!(
                "q = {} exceeds 2*(s2) = {c2}",
                self.q
            )));
        }
        if self.p >= c1 {
            return Err(Error::UnsupportedRegime(format!(
                "p = {} is not below 2*(s1) = {c1}",
                self.p
            )));
        }
        Ok(Regime {
            tag: RegimeTag::Existence,
            cond21: self.q > self.cond21_threshold(),
        })
    }
}

/// The exponent condition `q > ((2 - s2)p + 2(s2 - s1))/(2 - s1)`, strict.
pub fn condition21(params: &Params) -> Result<bool> {
    match params.classify()? {
        Regime {
            tag: RegimeTag::Existence,
            cond21,
        } => Ok(cond21),
        Regime {
            tag: RegimeTag::Critical,
            ..
        } => Err(Error::RegimeMismatch(
            "condition (21) is only defined in the existence regime".into(),
        )),
    }
}

/// Requires the existence regime with the exponent condition satisfied.
pub fn require_cond21(params: &Params) -> Result<()> {
    match params.classify()? {
        Regime {
            tag: RegimeTag::Existence,
            cond21: true,
        } => Ok(()),
        Regime {
            tag: RegimeTag::Existence,
            cond21: false,
        } => Err(Error::RegimeMismatch(format!(
            "q = {} does not exceed {} (exponent condition fails)",
            params.q,
            params.cond21_threshold()
        ))),
        Regime {
            tag: RegimeTag::Critical,
            ..
        } => Err(Error::RegimeMismatch(
            "critical regime: q = 2*(s2), no positive solution exists".into(),
        )),
    }
}
