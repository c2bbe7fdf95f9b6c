//! Energy, Nehari constraint and their H¹ gradients on radial fields.
//!
//! The discrete energy is `I_h(u) = ½ uᵀ G u + (λ/p) Σ w¹ |u|^p - (1/q) Σ w² |u|^q` where
//! `G` is the exact P1 Gram matrix and the sums run over the Gauss points of the grid.
//! Gradients are exact derivatives of these discrete sums, mapped to H¹ through `G⁻¹`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber::{self, FiberCoeffs};
use crate::grid::{h1_inner, h1_norm, RadialField, RadialGrid, Weight};
use crate::params::Params;

/// Below this H¹ norm the constraint gradient is treated as zero.
pub const DEGENERATE_GRAD_NORM: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalEval {
    pub coeffs: FiberCoeffs,
    pub energy: f64,
    pub phi: f64,
    pub psi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectedResidual {
    pub mu: f64,
    pub residual: f64,
    pub grad_phi_norm: f64,
}

fn check_params(grid: &RadialGrid, params: &Params) -> Result<()> {
    let same = grid.dim() == params.dim
        && grid.weight_exponent(Weight::S1) == params.s1
        && grid.weight_exponent(Weight::S2) == params.s2;
    if same {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

pub fn extract_coeffs(u: &RadialField, params: &Params) -> Result<FiberCoeffs> {
    let grid = u.grid();
    check_params(grid, params)?;
    let (d, mass) = grid.quadratic_parts(u.values());
    let (mut b, mut c) = (0.0, 0.0);
    let (s1, s2) = (Weight::S1, Weight::S2);
    grid.for_each_gauss(u.values(), |cell, j, x, _| {
        let ax = x.abs();
        b += grid.gauss_weight(cell, s1, j) * ax.powf(params.p);
        c += grid.gauss_weight(cell, s2, j) * ax.powf(params.q);
    });
    let coeffs = FiberCoeffs { d, mass, b, c };
    if [d, mass, b, c].iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure(format!(
            "non-finite coefficients {coeffs:?}"
        )));
    }
    Ok(coeffs)
}

pub fn evaluate(u: &RadialField, params: &Params) -> Result<FunctionalEval> {
    let coeffs = extract_coeffs(u, params)?;
    Ok(eval_coeffs(coeffs, params))
}

pub fn eval_coeffs(coeffs: FiberCoeffs, params: &Params) -> FunctionalEval {
    FunctionalEval {
        coeffs,
        energy: fiber::energy(&coeffs, params),
        phi: fiber::phi(&coeffs, params),
        psi: fiber::psi(&coeffs, params),
    }
}

/// Nodal load of `w ↦ Σ (kb λ w¹|u|^{p-2}u - kc w²|u|^{q-2}u) w`.
fn nonlinear_load(u: &RadialField, params: &Params, kb: f64, kc: f64) -> Vec<f64> {
    let grid = u.grid();
    let mut load = vec![0.0; grid.n() + 1];
    let (s1, s2) = (Weight::S1, Weight::S2);
    let Params { p, q, lambda, .. } = *params;
    grid.for_each_gauss(u.values(), |cell, j, x, _| {
        let ax = x.abs();
        let density = kb * lambda * grid.gauss_weight(cell, s1, j) * ax.powf(p - 2.0) * x
            - kc * grid.gauss_weight(cell, s2, j) * ax.powf(q - 2.0) * x;
        let xi = crate::grid::GAUSS_POINTS[j];
        load[cell] += density * (1.0 - xi);
        load[cell + 1] += density * xi;
    });
    load
}

fn gradient(
    u: &RadialField,
    params: &Params,
    linear: f64,
    kb: f64,
    kc: f64,
) -> Result<RadialField> {
    check_params(u.grid(), params)?;
    let load = nonlinear_load(u, params, kb, kc);
    let riesz = u.grid().solve_gram(&load)?;
    let values: Vec<f64> = u
        .values()
        .iter()
        .zip(&riesz)
        .map(|(a, b)| linear * a + b)
        .collect();
    RadialField::from_values(u.grid(), values)
}

/// H¹ representative of `I'(u)`.
pub fn grad_i(u: &RadialField, params: &Params) -> Result<RadialField> {
    gradient(u, params, 1.0, 1.0, 1.0)
}

/// H¹ representative of `phi'(u)`, `phi(u) = <I'(u), u>`.
pub fn grad_phi(u: &RadialField, params: &Params) -> Result<RadialField> {
    gradient(u, params, 2.0, params.p, params.q)
}

/// H¹ representative of `psi'(u)`, `psi(u) = <phi'(u), u> - phi(u)`.
pub fn grad_psi(u: &RadialField, params: &Params) -> Result<RadialField> {
    let Params { p, q, .. } = *params;
    gradient(u, params, 2.0, p * (p - 1.0), q * (q - 1.0))
}

fn projected_from(gi: &RadialField, gp: &RadialField) -> Result<ProjectedResidual> {
    let gp_norm = h1_norm(gp);
    if !(gp_norm > DEGENERATE_GRAD_NORM) {
        return Err(Error::DegenerateConstraint { norm: gp_norm });
    }
    let mu = h1_inner(gi, gp)? / (gp_norm * gp_norm);
    let residual = h1_norm(&gi.axpy(-mu, gp)?);
    Ok(ProjectedResidual {
        mu,
        residual,
        grad_phi_norm: gp_norm,
    })
}

/// `min_μ ‖I'(u) - μ phi'(u)‖` and its minimizer.
pub fn projected_residual(u: &RadialField, params: &Params) -> Result<ProjectedResidual> {
    let gi = grad_i(u, params)?;
    let gp = grad_phi(u, params)?;
    projected_from(&gi, &gp)
}

/// Projected residual plus the constrained descent direction `-(I' - μ phi')`.
pub(crate) fn projected_direction(
    u: &RadialField,
    params: &Params,
) -> Result<(ProjectedResidual, RadialField)> {
    let gi = grad_i(u, params)?;
    let gp = grad_phi(u, params)?;
    let pr = projected_from(&gi, &gp)?;
    let values: Vec<f64> = gi
        .values()
        .iter()
        .zip(gp.values())
        .map(|(a, b)| -(a - pr.mu * b))
        .collect();
    Ok((pr, RadialField::from_values(u.grid(), values)?))
}

/// Gaussian `amplitude · exp(-r²/(2 width²))` on the grid.
pub fn gaussian(grid: &Arc<RadialGrid>, amplitude: f64, width: f64) -> RadialField {
    RadialField::from_fn(grid, |r| amplitude * (-r * r / (2.0 * width * width)).exp())
}
