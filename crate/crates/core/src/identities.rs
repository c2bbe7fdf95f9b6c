//! Nehari and Pohozaev identities and the critical-regime certificate.
//!
//! Every solution satisfies two scalar identities in the four integrals:
//!
//! ```text
//! Nehari:   D + Mms + λB - C = 0
//! Pohozaev: (N-2)/2 D + N/2 Mms + λ(N-s1)/p B - (N-s2)/q C = 0
//! ```
//!
//! When `q = 2*(s2)` the C-coefficient of the Pohozaev identity equals `(N-2)/2`, and
//! `Pohozaev - (N-2)/2 · Nehari = Mms + ((N-s1)/p - (N-2)/2) λB`, a sum of nonnegative
//! terms whenever `p <= 2*(s1)`. This is the certificate evaluated below.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber::{self, FiberCoeffs};
use crate::params::{Params, RegimeTag};

/// Guards the relative residuals against the zero tuple.
pub const NORM_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub nehari: f64,
    pub pohozaev: f64,
    /// Only present in the critical regime.
    pub certificate: Option<f64>,
    pub certificate_coeff: f64,
}

/// `(N-2)/2 D + N/2 Mms + λ(N-s1)/p B - (N-s2)/q C`, unnormalized.
pub fn pohozaev_defect(c: &FiberCoeffs, params: &Params) -> f64 {
    let n = params.n();
    let Params {
        lambda,
        s1,
        s2,
        p,
        q,
        ..
    } = *params;
    0.5 * (n - 2.0) * c.d + 0.5 * n * c.mass + lambda * (n - s1) / p * c.b - (n - s2) / q * c.c
}

pub fn nehari_residual(c: &FiberCoeffs, params: &Params) -> f64 {
    fiber::phi(c, params).abs() / c.norm_sq().max(NORM_FLOOR)
}

pub fn pohozaev_residual(c: &FiberCoeffs, params: &Params) -> f64 {
    pohozaev_defect(c, params).abs() / c.norm_sq().max(NORM_FLOOR)
}

/// `(N - s1)/p - (N - 2)/2`.
pub fn certificate_coeff(params: &Params) -> f64 {
    let n = params.n();
    (n - params.s1) / params.p - 0.5 * (n - 2.0)
}

/// `Mms + ((N-s1)/p - (N-2)/2) λB`; critical regime only.
pub fn nonexistence_certificate(c: &FiberCoeffs, params: &Params) -> Result<f64> {
    if params.classify()?.tag != RegimeTag::Critical {
        return Err(Error::RegimeMismatch(
            "the nonexistence certificate needs q = 2*(s2)".into(),
        ));
    }
    Ok(c.mass + certificate_coeff(params) * params.lambda * c.b)
}

/// Weights `(k_nehari, k_pohozaev)` with
/// `Mms/A <= k_nehari · nehari_residual + k_pohozaev · pohozaev_residual` in the critical regime.
///
/// They come from `certificate = Pohozaev - (N-2)/2 · Nehari`.
pub fn elimination_constants(params: &Params) -> (f64, f64) {
    (0.5 * (params.n() - 2.0), 1.0)
}

pub fn identity_report(c: &FiberCoeffs, params: &Params) -> IdentityReport {
    IdentityReport {
        nehari: nehari_residual(c, params),
        pohozaev: pohozaev_residual(c, params),
        certificate: nonexistence_certificate(c, params).ok(),
        certificate_coeff: certificate_coeff(params),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(p: f64, q: f64) -> Params {
        Params {
            dim: 3,
            lambda: 1.0,
            s1: 0.0,
            s2: 1.0,
            p,
            q,
        }
    }

    #[test]
    fn residual_examples() {
        let z = FiberCoeffs::ZERO;
        let prm = params(5.0, 3.8);
        assert_eq!(nehari_residual(&z, &prm), 0.0);
        assert_eq!(pohozaev_residual(&z, &prm), 0.0);
        let one = FiberCoeffs::new(1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(nehari_residual(&one, &prm), 1.0);
        let d_only = FiberCoeffs::new(1.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(pohozaev_residual(&d_only, &prm), 0.5);
    }

    #[test]
    fn certificate_examples() {
        assert_eq!(certificate_coeff(&params(6.0, 4.0)), 0.0);
        assert!((certificate_coeff(&params(5.0, 4.0)) - 0.1).abs() < 1e-15);
        let c = FiberCoeffs::new(0.3, 0.7, 2.0, 1.0).unwrap();
        assert_eq!(
            nonexistence_certificate(&c, &params(6.0, 4.0)).unwrap(),
            0.7
        );
        let v = nonexistence_certificate(&c, &params(5.0, 4.0)).unwrap();
        assert!((v - (0.7 + 0.1 * 2.0)).abs() < 1e-15);
        assert_eq!(
            nonexistence_certificate(&FiberCoeffs::ZERO, &params(5.0, 4.0)).unwrap(),
            0.0
        );
        assert!(matches!(
            nonexistence_certificate(&c, &params(5.0, 3.8)),
            Err(Error::RegimeMismatch(_))
        ));
    }

    #[test]
    fn certificate_is_pohozaev_minus_nehari() {
        let prm = params(5.0, 4.0);
        let c = FiberCoeffs::new(0.9, 0.4, 1.3, 2.2).unwrap();
        let (k_neh, _) = elimination_constants(&prm);
        let combo = pohozaev_defect(&c, &prm) - k_neh * fiber::phi(&c, &prm);
        let cert = nonexistence_certificate(&c, &prm).unwrap();
        assert!((combo - cert).abs() < 1e-14);
    }

    #[test]
    fn report_omits_certificate_outside_critical() {
        let c = FiberCoeffs::new(1.0, 1.0, 1.0, 1.0).unwrap();
        assert!(identity_report(&c, &params(5.0, 3.8)).certificate.is_none());
        assert!(identity_report(&c, &params(5.0, 4.0)).certificate.is_some());
    }
}
