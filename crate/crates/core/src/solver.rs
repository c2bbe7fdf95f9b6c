//! Constrained minimization of the energy on the `M+` branch of the Nehari manifold.
//!
//! Starting point: a Gaussian seed is moved onto `M0` in coefficient space, realized on the
//! grid, dilated slightly inward so that `phi < 0`, and projected along its fiber to the
//! smaller root `t0`, which lies on `M+` (`psi < 0`).
//!
//! Iteration: the H¹ direction `-(I' - μ phi')` with the least-squares multiplier `μ`,
//! Armijo backtracking, and after every trial step a clamp to `u >= 0` followed by
//! reprojection onto the `t0` root of the trial fiber.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber::{self, FiberCoeffs};
use crate::functional::{self, gaussian, projected_direction, FunctionalEval, ProjectedResidual};
use crate::grid::{dilate_field, h1_norm, GridSpec, RadialField, RadialGrid};
use crate::identities::{self, IdentityReport};
use crate::params::{require_cond21, Params};

/// Backoff radii tried after `dilation_backoff` when `phi` is not yet negative.
pub const BACKOFF_SWEEP: [f64; 4] = [0.999, 0.99, 0.9, 0.8];
/// Iterates must satisfy `|phi| / A` below this.
pub const NEHARI_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub armijo_c: f64,
    pub step0: f64,
    pub backtrack: f64,
    pub max_halvings: usize,
    pub seed_width: f64,
    pub dilation_backoff: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 5000,
            armijo_c: 1e-4,
            step0: 1.0,
            backtrack: 0.5,
            max_halvings: 30,
            seed_width: 1.0,
            dilation_backoff: 0.9,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.tol > 0.0) {
            return bad(format!("tol = {} must be > 0", self.tol));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad(format!("armijo_c = {} must lie in (0, 1)", self.armijo_c));
        }
        if self.max_iter < 1 {
            return bad("max_iter must be >= 1".into());
        }
        if !(self.step0 > 0.0) {
            return bad(format!("step0 = {} must be > 0", self.step0));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return bad(format!("backtrack = {} must lie in (0, 1)", self.backtrack));
        }
        if !(self.seed_width > 0.0) {
            return bad(format!("seed_width = {} must be > 0", self.seed_width));
        }
        if !(self.dilation_backoff > 0.0 && self.dilation_backoff < 1.0) {
            return bad(format!(
                "dilation_backoff = {} must lie in (0, 1)",
                self.dilation_backoff
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub energy: f64,
    pub phi: f64,
    pub psi: f64,
    pub residual: f64,
    /// Nodes zeroed by the nonnegativity clamp on the step that produced this iterate.
    pub clamped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    LineSearchStalled,
    BranchLost,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub solution: RadialField,
    pub status: SolveStatus,
    pub m_plus: f64,
    pub residual: f64,
    pub mu: f64,
    pub grad_phi_norm: f64,
    pub nehari_residual: f64,
    pub pohozaev_residual: f64,
    pub psi_value: f64,
    pub iterations: usize,
    pub positivity: f64,
    pub coeffs: FiberCoeffs,
    pub identities: IdentityReport,
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

/// Coefficient-space version of [`initialize_mplus`]: `M0` point, inward dilation, fiber
/// projection. Returns the coefficients of the resulting `M+` point.
pub fn initialize_mplus_coeffs(
    c: &FiberCoeffs,
    params: &Params,
    cfg: &SolverConfig,
) -> Result<FiberCoeffs> {
    let m0 = fiber::construct_m0(c, params)?;
    for backoff in std::iter::once(cfg.dilation_backoff).chain(BACKOFF_SWEEP) {
        let dilated = fiber::dilate(&m0.coeffs, backoff, params)?;
        if fiber::phi(&dilated, params) < 0.0 {
            let roots = fiber::fiber_roots(&dilated, params)?;
            return fiber::scale_amplitude(&dilated, roots.t0, params);
        }
    }
    Err(Error::InitializationFailure(
        "phi stayed nonnegative for every backoff radius".into(),
    ))
}

/// Builds an `M+` starting field from a Gaussian seed along the `M0` construction.
pub fn initialize_mplus(
    params: &Params,
    grid: &Arc<RadialGrid>,
    cfg: &SolverConfig,
) -> Result<RadialField> {
    require_cond21(params)?;
    cfg.validate()?;
    let seed = gaussian(grid, 1.0, cfg.seed_width);
    let c = functional::extract_coeffs(&seed, params)?;
    let m0 = fiber::construct_m0(&c, params)?;

    for backoff in std::iter::once(cfg.dilation_backoff).chain(BACKOFF_SWEEP) {
        let v = dilate_field(&seed, m0.r0 * backoff)?.scaled(m0.t0);
        let cv = functional::extract_coeffs(&v, params)?;
        if !(fiber::phi(&cv, params) < 0.0) {
            continue;
        }
        let roots = fiber::fiber_roots(&cv, params)?;
        let start = v.scaled(roots.t0);
        let ev = functional::evaluate(&start, params)?;
        let a = ev.coeffs.norm_sq();
        if ev.phi.abs() <= NEHARI_TOL * a && ev.psi < 0.0 {
            return Ok(start);
        }
    }
    Err(Error::InitializationFailure(format!(
        "no backoff radius in {:?} gave phi < 0 after realizing the M0 point (r0 = {}, t0 = {})",
        std::iter::once(cfg.dilation_backoff)
            .chain(BACKOFF_SWEEP)
            .collect::<Vec<_>>(),
        m0.r0,
        m0.t0
    )))
}

/// Per-iterate data handed to a descent observer.
pub(crate) struct Iterate<'a> {
    pub field: &'a RadialField,
    pub eval: &'a FunctionalEval,
}

pub(crate) enum Observer {
    Continue,
    Stop,
}

pub(crate) struct DescentOutcome {
    pub status: SolveStatus,
    pub field: RadialField,
    pub eval: FunctionalEval,
    pub residual: ProjectedResidual,
    pub iterations: usize,
    pub trace: Vec<TraceRow>,
    pub reason: Option<String>,
}

/// Projected descent on the `M+` branch. `observe` sees every accepted iterate and may stop
/// the run early (status is then reported as [`SolveStatus::MaxIterations`] with the reason).
pub(crate) fn descend(
    start: &RadialField,
    params: &Params,
    cfg: &SolverConfig,
    mut observe: impl FnMut(&Iterate<'_>) -> Observer,
) -> Result<DescentOutcome> {
    cfg.validate()?;
    let mut u = start.clone();
    let mut eval = functional::evaluate(&u, params)?;
    if !(eval.psi < 0.0) || eval.phi.abs() > NEHARI_TOL * eval.coeffs.norm_sq() {
        return Err(Error::InitializationFailure(format!(
            "start is not on M+ (phi = {:e}, psi = {:e})",
            eval.phi, eval.psi
        )));
    }
    let mut trace = Vec::new();
    let mut clamped_last = 0;
    let mut iter = 0;

    loop {
        let (pr, dir) = projected_direction(&u, params)?;
        trace.push(TraceRow {
            iter,
            energy: eval.energy,
            phi: eval.phi,
            psi: eval.psi,
            residual: pr.residual,
            clamped: clamped_last,
        });
        let finish = |status, u: RadialField, eval, trace, reason| DescentOutcome {
            status,
            field: u,
            eval,
            residual: pr,
            iterations: iter,
            trace,
            reason,
        };
        if let Observer::Stop = observe(&Iterate {
            field: &u,
            eval: &eval,
        }) {
            return Ok(finish(
                SolveStatus::MaxIterations,
                u,
                eval,
                trace,
                Some("stopped".into()),
            ));
        }
        if pr.residual <= cfg.tol {
            return Ok(finish(SolveStatus::Converged, u, eval, trace, None));
        }
        if iter >= cfg.max_iter {
            return Ok(finish(SolveStatus::MaxIterations, u, eval, trace, None));
        }

        let slope = pr.residual * pr.residual;
        let mut tau = cfg.step0;
        let mut saw_branch = false;
        let mut accepted = None;
        for _ in 0..=cfg.max_halvings {
            let mut trial = u.axpy(tau, &dir)?;
            let clamped = trial.clamp_nonnegative();
            if !trial.is_zero() {
                let c = functional::extract_coeffs(&trial, params)?;
                if let Some(branch) = fiber::fiber_branch(&c, params)? {
                    saw_branch = true;
                    let projected = fiber::scale_amplitude(&c, branch.t0, params)?;
                    let energy = fiber::energy(&projected, params);
                    if energy <= eval.energy - cfg.armijo_c * tau * slope {
                        accepted = Some((trial.scaled(branch.t0), clamped));
                        break;
                    }
                }
            }
            tau *= cfg.backtrack;
        }

        let Some((next, clamped)) = accepted else {
            let (status, reason) = if saw_branch {
                (
                    SolveStatus::LineSearchStalled,
                    "no sufficient decrease after backtracking",
                )
            } else {
                (
                    SolveStatus::BranchLost,
                    "fiber root lost for every trial step",
                )
            };
            return Ok(finish(status, u, eval, trace, Some(reason.into())));
        };
        let next_eval = functional::evaluate(&next, params)?;
        if !(next_eval.psi < 0.0) {
            return Ok(finish(
                SolveStatus::BranchLost,
                u,
                eval,
                trace,
                Some(format!(
                    "accepted iterate has psi = {:e} >= 0",
                    next_eval.psi
                )),
            ));
        }
        u = next;
        eval = next_eval;
        clamped_last = clamped;
        iter += 1;
    }
}

fn build_report(outcome: DescentOutcome, params: &Params) -> SolveReport {
    let DescentOutcome {
        status,
        field,
        eval,
        residual,
        iterations,
        trace,
        ..
    } = outcome;
    let coeffs = eval.coeffs;
    SolveReport {
        positivity: field.min_interior(),
        solution: field,
        status,
        m_plus: eval.energy,
        residual: residual.residual,
        mu: residual.mu,
        grad_phi_norm: residual.grad_phi_norm,
        nehari_residual: identities::nehari_residual(&coeffs, params),
        pohozaev_residual: identities::pohozaev_residual(&coeffs, params),
        psi_value: eval.psi,
        iterations,
        coeffs,
        identities: identities::identity_report(&coeffs, params),
        trace,
    }
}

/// Runs the projected descent from an `M+` start.
///
/// Failures carry the partial report: [`Error::ConvergenceFailure`] for the iteration cap or
/// a stalled line search, [`Error::BranchLossFailure`] when the `t0` root disappears or an
/// accepted iterate leaves `psi < 0`.
pub fn minimize_on_mplus(
    start: &RadialField,
    params: &Params,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    let outcome = descend(start, params, cfg, |_| Observer::Continue)?;
    let reason = outcome.reason.clone();
    let report = build_report(outcome, params);
    match report.status {
        SolveStatus::Converged => Ok(report),
        SolveStatus::MaxIterations | SolveStatus::LineSearchStalled => {
            Err(Error::ConvergenceFailure(Box::new(report)))
        }
        SolveStatus::BranchLost => Err(Error::BranchLossFailure {
            reason: reason.unwrap_or_default(),
            report: Some(Box::new(report)),
        }),
    }
}

/// Grid construction, initialization and descent in one call.
///
/// Starts too close to `M0` can slide into it; on branch loss the run is restarted from
/// the smaller backoff radii of [`BACKOFF_SWEEP`].
pub fn solve(params: &Params, spec: GridSpec, cfg: &SolverConfig) -> Result<SolveReport> {
    require_cond21(params)?;
    let grid = Arc::new(RadialGrid::build(spec, params.dim, params.s1, params.s2)?);
    let retries = BACKOFF_SWEEP
        .iter()
        .copied()
        .filter(|&b| b < cfg.dilation_backoff);
    let mut result = minimize_on_mplus(&initialize_mplus(params, &grid, cfg)?, params, cfg);
    for backoff in retries {
        if !matches!(result, Err(Error::BranchLossFailure { .. })) {
            break;
        }
        let retry = SolverConfig {
            dilation_backoff: backoff,
            ..*cfg
        };
        result = minimize_on_mplus(&initialize_mplus(params, &grid, &retry)?, params, &retry);
    }
    result
}

#[derive(Debug)]
pub struct RefineStudy {
    pub grids: Vec<GridSpec>,
    pub reports: Vec<Result<SolveReport>>,
    /// `|m+_i - m+_j| / |m+_j|` for consecutive pairs `(i, j) = (k+1, k)`; `None` if either failed.
    pub rel_diffs: Vec<Option<f64>>,
}

/// Solves on every grid (in parallel) and compares consecutive levels.
pub fn refine_study(
    params: &Params,
    cfg: &SolverConfig,
    grids: &[GridSpec],
) -> Result<RefineStudy> {
    if grids.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "a refinement study needs at least two grids, got {}",
            grids.len()
        )));
    }
    require_cond21(params)?;
    let reports: Vec<Result<SolveReport>> = grids
        .par_iter()
        .map(|spec| solve(params, *spec, cfg))
        .collect();
    let rel_diffs = reports
        .windows(2)
        .map(|w| match (&w[0], &w[1]) {
            (Ok(a), Ok(b)) => Some((b.m_plus - a.m_plus).abs() / a.m_plus.abs()),
            _ => None,
        })
        .collect();
    Ok(RefineStudy {
        grids: grids.to_vec(),
        reports,
        rel_diffs,
    })
}

/// Outcome classes of the critical-regime descent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagnosticClass {
    /// The iterate norm fell below `1e-3` of its initial value.
    Vanished,
    /// Iteration cap hit with the residual above tolerance.
    NonConverged,
    /// The discrete descent met its stopping test; on a fixed grid the concentrating
    /// minimizing sequence can be arrested by the mesh.
    GridArrested,
    /// The line search lost the `t0` root or stalled.
    BranchLost,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub iter: usize,
    pub energy: f64,
    pub norm: f64,
    pub mass: f64,
    pub certificate: f64,
    pub certificate_holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostic {
    pub classification: DiagnosticClass,
    pub seed_width: f64,
    pub initial_norm: f64,
    pub final_norm: f64,
    pub final_residual: f64,
    pub iterations: usize,
    pub certificate_violations: usize,
    pub trace: Vec<DiagnosticRow>,
}

/// Amplitude-scan start for the critical regime: the widest Gaussian (halving from the
/// configured width) whose fiber reaches negative values, projected to its `t0` root.
pub fn amplitude_scan_start(
    params: &Params,
    grid: &Arc<RadialGrid>,
    cfg: &SolverConfig,
) -> Result<(RadialField, f64)> {
    let mut width = cfg.seed_width;
    for _ in 0..20 {
        let seed = gaussian(grid, 1.0, width);
        let c = functional::extract_coeffs(&seed, params)?;
        if let Some(branch) = fiber::fiber_branch(&c, params)? {
            let start = seed.scaled(branch.t0);
            let ev = functional::evaluate(&start, params)?;
            if ev.psi < 0.0 && ev.phi.abs() <= NEHARI_TOL * ev.coeffs.norm_sq() {
                return Ok((start, width));
            }
        }
        width *= 0.5;
    }
    Err(Error::InitializationFailure(
        "no Gaussian width produced a negative fiber".into(),
    ))
}

/// Runs the `M+` descent in the critical regime and classifies what happens.
///
/// The certificate `Mms + ((N-s1)/p - (N-2)/2) λB` is recorded on every iterate.
pub fn nonexistence_diagnostic(
    params: &Params,
    grid: &Arc<RadialGrid>,
    cfg: &SolverConfig,
) -> Result<Diagnostic> {
    if params.classify()?.tag != crate::params::RegimeTag::Critical {
        return Err(Error::RegimeMismatch(
            "the diagnostic runs in the critical regime only".into(),
        ));
    }
    let (start, seed_width) = amplitude_scan_start(params, grid, cfg)?;
    let initial_norm = h1_norm(&start);
    let mut rows = Vec::new();
    let mut vanished = false;
    let outcome = descend(&start, params, cfg, |it| {
        let c = &it.eval.coeffs;
        let certificate = identities::nonexistence_certificate(c, params).unwrap_or(f64::NAN);
        let norm = c.norm_sq().sqrt();
        rows.push(DiagnosticRow {
            iter: rows.len(),
            energy: it.eval.energy,
            norm,
            mass: c.mass,
            certificate,
            certificate_holds: it.field.is_zero() || certificate >= c.mass,
        });
        if norm < 1e-3 * initial_norm {
            vanished = true;
            Observer::Stop
        } else {
            Observer::Continue
        }
    })?;
    let classification = if vanished {
        DiagnosticClass::Vanished
    } else {
        match outcome.status {
            SolveStatus::Converged => DiagnosticClass::GridArrested,
            SolveStatus::MaxIterations => DiagnosticClass::NonConverged,
            SolveStatus::LineSearchStalled | SolveStatus::BranchLost => DiagnosticClass::BranchLost,
        }
    };
    Ok(Diagnostic {
        classification,
        seed_width,
        initial_norm,
        final_norm: h1_norm(&outcome.field),
        final_residual: outcome.residual.residual,
        iterations: outcome.iterations,
        certificate_violations: rows.iter().filter(|r| !r.certificate_holds).count(),
        trace: rows,
    })
}
