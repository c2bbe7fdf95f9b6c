//! Exact fibering algebra on the coefficient tuple `(D, Mms, B, C)`.
//!
//! Every functional used by the solver (`I`, `phi = <I'(u),u>`, `psi = <I''(u)u,u>`)
//! is a fixed linear combination of four integrals of the trial function:
//!
//! ```text
//! D   = ∫|∇u|²          Mms = ∫u²
//! B   = ∫|x|^{-s1}|u|^p  C   = ∫|x|^{-s2}|u|^q
//! ```
//!
//! Amplitude scaling `u -> t u` and dilation `u -> u(x/r)` act on the tuple by
//! explicit powers, so the fiber roots and the `M0` construction can be carried out
//! without any discretization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{require_cond21, Params};

/// Relative tolerance for membership checks (`|phi|`, `|psi|` against `A`).
pub const MEMBERSHIP_TOL: f64 = 1e-10;
const MAX_BISECTIONS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FiberCoeffs {
    /// Dirichlet energy.
    pub d: f64,
    /// Mass.
    pub mass: f64,
    /// Weighted p-integral.
    pub b: f64,
    /// Weighted q-integral.
    pub c: f64,
}

impl FiberCoeffs {
    pub const ZERO: Self = Self {
        d: 0.0,
        mass: 0.0,
        b: 0.0,
        c: 0.0,
    };

    pub fn new(d: f64, mass: f64, b: f64, c: f64) -> Result<Self> {
        let coeffs = Self { d, mass, b, c };
        coeffs.validate()?;
        Ok(coeffs)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [self.d, self.mass, self.b, self.c];
        if fields.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidCoefficients(format!(
                "coefficients must be finite and nonnegative: {self:?}"
            )));
        }
        Ok(())
    }

    /// Squared H¹ norm `A = D + Mms`.
    pub fn norm_sq(&self) -> f64 {
        self.d + self.mass
    }

    pub fn is_zero(&self) -> bool {
        self.d == 0.0 && self.mass == 0.0 && self.b == 0.0 && self.c == 0.0
    }
}

/// The two roots of the normalized fiber map bracketing `t = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberRoots {
    pub t0: f64,
    pub t1: f64,
}

/// Roots of the fiber map on either side of its minimum `t_min`.
///
/// Unlike [`FiberRoots`] this does not require `phi < 0` at `t = 1`; it only needs
/// the fiber map to dip below zero somewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberBranch {
    pub t0: f64,
    pub t_min: f64,
    pub t1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct M0Point {
    pub t0: f64,
    pub r0: f64,
    pub coeffs: FiberCoeffs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManifoldPrediction {
    pub lambda_b_pred: f64,
    pub c_pred: f64,
}

/// `phi = A + λB - C`.
pub fn phi(c: &FiberCoeffs, params: &Params) -> f64 {
    c.norm_sq() + params.lambda * c.b - c.c
}

/// `psi = A + (p-1)λB - (q-1)C`.
pub fn psi(c: &FiberCoeffs, params: &Params) -> f64 {
    c.norm_sq() + (params.p - 1.0) * params.lambda * c.b - (params.q - 1.0) * c.c
}

/// `I = A/2 + λB/p - C/q`.
pub fn energy(c: &FiberCoeffs, params: &Params) -> f64 {
    0.5 * c.norm_sq() + params.lambda * c.b / params.p - c.c / params.q
}

/// `<psi'(u), u> = 2A + p(p-1)λB - q(q-1)C`.
pub fn psi_prime_pairing(c: &FiberCoeffs, params: &Params) -> f64 {
    let Params { p, q, lambda, .. } = *params;
    2.0 * c.norm_sq() + p * (p - 1.0) * lambda * c.b - q * (q - 1.0) * c.c
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} = {v} must be positive"
        )))
    }
}

/// Normalized fiber map `g(t) = t^{-2} phi(t u) = A + λ t^{p-2} B - t^{q-2} C`.
pub fn fiber_map(c: &FiberCoeffs, params: &Params, t: f64) -> Result<f64> {
    check_positive("t", t)?;
    Ok(fiber_map_unchecked(c, params, t))
}

#[inline]
fn fiber_map_unchecked(c: &FiberCoeffs, params: &Params, t: f64) -> f64 {
    c.norm_sq() + params.lambda * c.b * t.powf(params.p - 2.0) - c.c * t.powf(params.q - 2.0)
}

/// `h(x) = (p-2)(x^{q-2} - 1) - (q-2)(x^{p-2} - 1)`; negative for `x > 1`.
pub fn h_compare(x: f64, params: &Params) -> Result<f64> {
    check_positive("x", x)?;
    let Params { p, q, .. } = *params;
    Ok((p - 2.0) * (x.powf(q - 2.0) - 1.0) - (q - 2.0) * (x.powf(p - 2.0) - 1.0))
}

/// Amplitude scaling `t u`: `(t²D, t²Mms, t^p B, t^q C)`.
pub fn scale_amplitude(c: &FiberCoeffs, t: f64, params: &Params) -> Result<FiberCoeffs> {
    check_positive("t", t)?;
    Ok(scale_amplitude_unchecked(c, t, params))
}

fn scale_amplitude_unchecked(c: &FiberCoeffs, t: f64, params: &Params) -> FiberCoeffs {
    let t2 = t * t;
    FiberCoeffs {
        d: t2 * c.d,
        mass: t2 * c.mass,
        b: t.powf(params.p) * c.b,
        c: t.powf(params.q) * c.c,
    }
}

/// Dilation `u_r(x) = u(x/r)`: `(r^{N-2}D, r^N Mms, r^{N-s1}B, r^{N-s2}C)`.
pub fn dilate(c: &FiberCoeffs, r: f64, params: &Params) -> Result<FiberCoeffs> {
    check_positive("r", r)?;
    let n = params.n();
    Ok(FiberCoeffs {
        d: r.powf(n - 2.0) * c.d,
        mass: r.powf(n) * c.mass,
        b: r.powf(n - params.s1) * c.b,
        c: r.powf(n - params.s2) * c.c,
    })
}

/// Location of the minimum of the fiber map: `t_min^{p-q} = (q-2)C / ((p-2)λB)`.
pub fn fiber_min(c: &FiberCoeffs, params: &Params) -> Option<f64> {
    if c.b <= 0.0 || c.c <= 0.0 {
        return None;
    }
    let Params { p, q, lambda, .. } = *params;
    let ln_t = (((q - 2.0) * c.c).ln() - ((p - 2.0) * lambda * c.b).ln()) / (p - q);
    let t = ln_t.exp();
    (t > 0.0 && t.is_finite()).then_some(t)
}

/// Bisection in `ln t` for a sign change of `f` between `lo` and `hi`, where
/// `f(lo)` has sign `sign_lo`.
fn bisect_log<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, sign_lo: bool) -> f64 {
    for _ in 0..MAX_BISECTIONS {
        let mid = (lo * hi).sqrt();
        if !(mid > lo && mid < hi) {
            break;
        }
        if (f(mid) > 0.0) == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Both fiber roots around `t_min`, when the fiber map has a negative region.
///
/// Returns `Ok(None)` when `min g >= 0` (the ray through `u` never meets `M`).
pub fn fiber_branch(c: &FiberCoeffs, params: &Params) -> Result<Option<FiberBranch>> {
    c.validate()?;
    let a = c.norm_sq();
    if a <= 0.0 {
        return Err(Error::InvalidCoefficients("zero H1 norm".into()));
    }
    let Some(t_min) = fiber_min(c, params) else {
        return Ok(None);
    };
    let g = |t: f64| fiber_map_unchecked(c, params, t);
    if g(t_min) >= 0.0 {
        return Ok(None);
    }

    let mut lo = t_min;
    while g(lo) <= 0.0 {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(Error::RootBracketFailure(format!(
                "no positive fiber value below t_min = {t_min}"
            )));
        }
    }
    let mut hi = t_min;
    while g(hi) <= 0.0 {
        hi *= 2.0;
        if !hi.is_finite() || hi > 1e300 {
            return Err(Error::RootBracketFailure(format!(
                "no positive fiber value above t_min = {t_min}"
            )));
        }
    }
    let t0 = bisect_log(g, lo, t_min, true);
    let t1 = bisect_log(g, t_min, hi, false);
    Ok(Some(FiberBranch { t0, t_min, t1 }))
}

/// Fiber roots `t0 < 1 < t1` for a tuple with `phi < 0`.
pub fn fiber_roots(c: &FiberCoeffs, params: &Params) -> Result<FiberRoots> {
    c.validate()?;
    let phi_val = phi(c, params);
    if !(phi_val < 0.0) {
        return Err(Error::NoNegativeFiber { phi: phi_val });
    }
    let branch = fiber_branch(c, params)?.ok_or_else(|| {
        Error::RootBracketFailure("fiber minimum is nonnegative despite phi < 0".into())
    })?;
    if !(branch.t0 < 1.0 && branch.t1 > 1.0) {
        return Err(Error::RootBracketFailure(format!(
            "roots {} and {} do not bracket 1",
            branch.t0, branch.t1
        )));
    }
    Ok(FiberRoots {
        t0: branch.t0,
        t1: branch.t1,
    })
}

/// Builds a point of `M0` on the dilation/amplitude orbit of `c`.
///
/// `r0` is the unique root of the increasing map
/// `g(r) = D + r² Mms - ((p-q)/(p-2)) C Q^{(q-2)/(p-q)} r^e` with
/// `Q = (q-2)C / (λ(p-2)B)` and `e = 2 - s2 - (q-2)(s2-s1)/(p-q) < 0`, and
/// `t0 = Q^{1/(p-q)} r0^{-(s2-s1)/(p-q)}`.
pub fn construct_m0(c: &FiberCoeffs, params: &Params) -> Result<M0Point> {
    require_cond21(params)?;
    let Params {
        p,
        q,
        lambda,
        s1,
        s2,
        ..
    } = *params;
    if p - q < 1e-6 {
        return Err(Error::InvalidParameter(format!(
            "p - q = {} is too small for the M0 construction",
            p - q
        )));
    }
    c.validate()?;
    if c.is_zero() || c.norm_sq() <= 0.0 || c.b <= 0.0 || c.c <= 0.0 {
        return Err(Error::InvalidCoefficients(format!(
            "M0 construction needs a nonzero tuple, got {c:?}"
        )));
    }

    let ln_q = ((q - 2.0) * c.c).ln() - (lambda * (p - 2.0) * c.b).ln();
    let ln_k = ((p - q) / (p - 2.0)).ln() + c.c.ln() + (q - 2.0) / (p - q) * ln_q;
    let expo = 2.0 - s2 - (q - 2.0) * (s2 - s1) / (p - q);
    debug_assert!(expo < 0.0);
    // g as a function of x = ln r
    let g = |x: f64| c.d + (2.0 * x).exp() * c.mass - (ln_k + expo * x).exp();

    let step = std::f64::consts::LN_2;
    let (mut lo, mut hi) = (0.0, 0.0);
    if g(0.0) < 0.0 {
        while g(hi) < 0.0 {
            hi += step;
            if hi > 2000.0 {
                return Err(Error::RootBracketFailure(
                    "r0 search diverged upward".into(),
                ));
            }
        }
    } else {
        while g(lo) >= 0.0 {
            lo -= step;
            if lo < -2000.0 {
                return Err(Error::RootBracketFailure(
                    "r0 search diverged downward".into(),
                ));
            }
        }
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let ln_r0 = 0.5 * (lo + hi);
    let r0 = ln_r0.exp();
    let t0 = ((ln_q - (s2 - s1) * ln_r0) / (p - q)).exp();
    if !(t0.is_finite() && t0 > 0.0 && r0.is_finite() && r0 > 0.0) {
        return Err(Error::NumericalFailure(format!(
            "M0 factors overflow: t0 = {t0}, r0 = {r0}"
        )));
    }
    let coeffs = scale_amplitude_unchecked(&dilate(c, r0, params)?, t0, params);
    if [coeffs.d, coeffs.mass, coeffs.b, coeffs.c]
        .iter()
        .any(|v| !v.is_finite())
    {
        return Err(Error::NumericalFailure(format!(
            "M0 coefficients overflow (t0 = {t0:e}, r0 = {r0:e}); the exponents sit too close to the condition boundary"
        )));
    }
    Ok(M0Point { t0, r0, coeffs })
}

/// Derivative at `r = 1` of `h(r) = r^{2-N} phi(u_r)` for a point on `M0`:
/// `2 Mms + (2-s1)λB - (2-s2)C`.
pub fn m0_perturbation_sign(m0: &M0Point, params: &Params) -> Result<f64> {
    let c = &m0.coeffs;
    let a = c.norm_sq();
    let phi_rel = phi(c, params).abs() / a;
    let psi_rel = psi(c, params).abs() / a;
    // slightly looser than MEMBERSHIP_TOL so that rounding in the construction is accepted
    if !(a > 0.0 && phi_rel <= 1e-9 && psi_rel <= 1e-9) {
        return Err(Error::NotOnM0 { phi_rel, psi_rel });
    }
    Ok(2.0 * c.mass + (2.0 - params.s1) * params.lambda * c.b - (2.0 - params.s2) * c.c)
}

/// Predictions of `λB` and `C` from `A` and `psi` on the Nehari manifold:
/// `λB = ((q-2)A + psi)/(p-q)`, `C = ((p-2)A + psi)/(p-q)`.
pub fn on_manifold_identities(c: &FiberCoeffs, params: &Params) -> Result<ManifoldPrediction> {
    let a = c.norm_sq();
    let phi_rel = if a > 0.0 {
        phi(c, params).abs() / a
    } else {
        f64::INFINITY
    };
    if !(phi_rel <= MEMBERSHIP_TOL) {
        return Err(Error::NotOnM { phi_rel });
    }
    let Params { p, q, .. } = *params;
    let psi_val = psi(c, params);
    Ok(ManifoldPrediction {
        lambda_b_pred: ((q - 2.0) * a + psi_val) / (p - q),
        c_pred: ((p - 2.0) * a + psi_val) / (p - q),
    })
}
