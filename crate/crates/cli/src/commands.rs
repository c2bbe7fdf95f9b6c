use std::path::Path;
use std::sync::Arc;

use nehari_core::fiber::{self, FiberCoeffs};
use nehari_core::functional::{self, gaussian};
use nehari_core::identities;
use nehari_core::solver::{self, Diagnostic, SolveReport};
use nehari_core::{Error, Params, RadialGrid, Regime, RegimeTag};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{ensure_dir, fmt_f64, fmt_opt, say, write_csv, write_json};
use crate::CliError;

/// Samples of the fiber map written by `fiber`.
pub const FIBER_SAMPLES: usize = 400;

fn build_grid(cfg: &RunConfig) -> Result<Arc<RadialGrid>, CliError> {
    let p = &cfg.params;
    Ok(Arc::new(RadialGrid::build(cfg.grid, p.dim, p.s1, p.s2)?))
}

#[derive(Serialize)]
struct ValidateDocument<'a> {
    #[serde(rename = "N")]
    dim: u32,
    lambda: f64,
    s1: f64,
    s2: f64,
    p: f64,
    q: f64,
    crit_s1: f64,
    crit_s2: f64,
    regime: RegimeTag,
    cond21: Option<bool>,
    config: &'a RunConfig,
}

pub fn cmd_validate(config: &Path) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let regime = cfg.regime()?;
    let p = cfg.params;
    let doc = ValidateDocument {
        dim: p.dim,
        lambda: p.lambda,
        s1: p.s1,
        s2: p.s2,
        p: p.p,
        q: p.q,
        crit_s1: p.crit_s1(),
        crit_s2: p.crit_s2(),
        regime: regime.tag,
        cond21: (regime.tag == RegimeTag::Existence).then_some(regime.cond21),
        config: &cfg,
    };
    let text = serde_json::to_string_pretty(&doc)
        .map_err(|e| CliError::Invariant(format!("serialization failed: {e}")))?;
    say(&text);
    Ok(())
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
enum CoeffSource {
    Override,
    GaussianSeed,
}

/// Coefficients from `--coeffs`, or from the unit-amplitude Gaussian seed on the grid.
fn resolve_coeffs(
    cfg: &RunConfig,
    over: Option<FiberCoeffs>,
) -> Result<(FiberCoeffs, CoeffSource), CliError> {
    match over {
        Some(c) => {
            c.validate()?;
            Ok((c, CoeffSource::Override))
        }
        None => {
            let grid = build_grid(cfg)?;
            let seed = gaussian(&grid, 1.0, cfg.solver.seed_width);
            Ok((
                functional::extract_coeffs(&seed, &cfg.params)?,
                CoeffSource::GaussianSeed,
            ))
        }
    }
}

fn branch_label(psi: f64) -> &'static str {
    if psi < 0.0 {
        "M+"
    } else if psi > 0.0 {
        "M-"
    } else {
        "M0"
    }
}

#[derive(Serialize)]
struct FiberDocument<'a> {
    config: &'a RunConfig,
    source: CoeffSource,
    coeffs: FiberCoeffs,
    phi: f64,
    t0: f64,
    t_min: f64,
    t1: f64,
    psi_t0: f64,
    psi_t1: f64,
    classification: &'static str,
    classification_t1: &'static str,
}

pub fn cmd_fiber(config: &Path, out: &Path, over: Option<FiberCoeffs>) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    cfg.regime()?;
    let params = &cfg.params;
    let (coeffs, source) = resolve_coeffs(&cfg, over)?;
    let roots = fiber::fiber_roots(&coeffs, params)?;
    let t_min = fiber::fiber_min(&coeffs, params)
        .ok_or_else(|| CliError::Invariant("fiber roots exist but the minimum does not".into()))?;
    let psi_t0 = fiber::psi(&fiber::scale_amplitude(&coeffs, roots.t0, params)?, params);
    let psi_t1 = fiber::psi(&fiber::scale_amplitude(&coeffs, roots.t1, params)?, params);

    let (lo, hi) = ((1e-3 * roots.t0).ln(), (10.0 * roots.t1).ln());
    let mut rows = Vec::with_capacity(FIBER_SAMPLES);
    for k in 0..FIBER_SAMPLES {
        let t = (lo + (hi - lo) * k as f64 / (FIBER_SAMPLES - 1) as f64).exp();
        rows.push(vec![
            fmt_f64(t),
            fmt_f64(fiber::fiber_map(&coeffs, params, t)?),
        ]);
    }

    ensure_dir(out)?;
    write_csv(&out.join("fiber.csv"), &["t", "g"], &rows)?;
    let doc = FiberDocument {
        config: &cfg,
        source,
        coeffs,
        phi: fiber::phi(&coeffs, params),
        t0: roots.t0,
        t_min,
        t1: roots.t1,
        psi_t0,
        psi_t1,
        classification: branch_label(psi_t0),
        classification_t1: branch_label(psi_t1),
    };
    write_json(&out.join("fiber.json"), &doc)?;
    if !(psi_t0 < 0.0) {
        return Err(CliError::Invariant(format!(
            "psi(t0 u) = {psi_t0} is not negative"
        )));
    }
    say(&format!(
        "fiber: t0 = {}, t1 = {}, psi(t0 u) = {}",
        roots.t0, roots.t1, psi_t0
    ));
    Ok(())
}

#[derive(Serialize)]
struct M0Document<'a> {
    config: &'a RunConfig,
    source: CoeffSource,
    input: FiberCoeffs,
    t0: f64,
    r0: f64,
    coeffs: FiberCoeffs,
    phi_rel: f64,
    psi_rel: f64,
    perturbation_sign: f64,
    backoff: f64,
    phi_after_backoff: f64,
}

pub fn cmd_m0(config: &Path, out: &Path, over: Option<FiberCoeffs>) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    cfg.regime()?;
    let params = &cfg.params;
    let (input, source) = resolve_coeffs(&cfg, over)?;
    let m0 = fiber::construct_m0(&input, params)?;
    let a = m0.coeffs.norm_sq();
    let sign = fiber::m0_perturbation_sign(&m0, params)?;
    let backoff = cfg.solver.dilation_backoff;
    let inward = fiber::dilate(&m0.coeffs, backoff, params)?;
    let doc = M0Document {
        config: &cfg,
        source,
        input,
        t0: m0.t0,
        r0: m0.r0,
        coeffs: m0.coeffs,
        phi_rel: fiber::phi(&m0.coeffs, params).abs() / a,
        psi_rel: fiber::psi(&m0.coeffs, params).abs() / a,
        perturbation_sign: sign,
        backoff,
        phi_after_backoff: fiber::phi(&inward, params),
    };
    ensure_dir(out)?;
    write_json(&out.join("m0.json"), &doc)?;
    if !(sign > 0.0) {
        return Err(CliError::Invariant(format!(
            "perturbation sign {sign} is not positive"
        )));
    }
    say(&format!(
        "m0: t0 = {}, r0 = {}, perturbation sign = {}",
        m0.t0, m0.r0, sign
    ));
    Ok(())
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
enum Initialization {
    M0Pipeline,
    AmplitudeScan,
}

#[derive(Serialize)]
struct SolveDocument<'a> {
    config: &'a RunConfig,
    regime: Regime,
    initialization: Initialization,
    #[serde(flatten)]
    report: &'a SolveReport,
}

fn write_solve_outputs(
    out: &Path,
    cfg: &RunConfig,
    regime: Regime,
    initialization: Initialization,
    report: &SolveReport,
) -> Result<(), CliError> {
    ensure_dir(out)?;
    write_json(
        &out.join("report.json"),
        &SolveDocument {
            config: cfg,
            regime,
            initialization,
            report,
        },
    )?;
    let nodes = report.solution.grid().nodes();
    let solution: Vec<Vec<String>> = nodes
        .iter()
        .zip(report.solution.values())
        .map(|(r, u)| vec![fmt_f64(*r), fmt_f64(*u)])
        .collect();
    write_csv(&out.join("solution.csv"), &["r", "u"], &solution)?;
    let trace: Vec<Vec<String>> = report
        .trace
        .iter()
        .map(|row| {
            vec![
                row.iter.to_string(),
                fmt_f64(row.energy),
                fmt_f64(row.phi),
                fmt_f64(row.psi),
                fmt_f64(row.residual),
            ]
        })
        .collect();
    write_csv(
        &out.join("trace.csv"),
        &["iter", "I", "phi", "psi", "residual"],
        &trace,
    )
}

pub fn cmd_solve(config: &Path, out: &Path, override_regime: bool) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let regime = cfg.regime()?;
    let params = &cfg.params;
    let standard = regime.tag == RegimeTag::Existence && regime.cond21;
    if !standard && !override_regime {
        return Err(Error::RegimeMismatch(format!(
            "solve needs the existence regime with the exponent condition; got {:?} (cond21 = {}); \
             pass --override-regime to explore anyway",
            regime.tag, regime.cond21
        ))
        .into());
    }

    let (result, init) = if standard {
        (
            solver::solve(params, cfg.grid, &cfg.solver),
            Initialization::M0Pipeline,
        )
    } else {
        let grid = build_grid(&cfg)?;
        let (start, _) = solver::amplitude_scan_start(params, &grid, &cfg.solver)?;
        (
            solver::minimize_on_mplus(&start, params, &cfg.solver),
            Initialization::AmplitudeScan,
        )
    };

    let report = match &result {
        Ok(r) => Some(r),
        Err(Error::ConvergenceFailure(r)) => Some(r.as_ref()),
        Err(Error::BranchLossFailure {
            report: Some(r), ..
        }) => Some(r.as_ref()),
        Err(_) => None,
    };
    if let Some(r) = report {
        write_solve_outputs(out, &cfg, regime, init, r)?;
    }
    let rep = result?;
    if !(rep.m_plus > 0.0 && rep.psi_value < 0.0 && rep.positivity > 0.0) {
        return Err(CliError::Invariant(format!(
            "converged run violates m+ > 0, psi < 0, u > 0: m+ = {}, psi = {}, min u = {}",
            rep.m_plus, rep.psi_value, rep.positivity
        )));
    }
    say(&format!(
        "solve: converged in {} iterations, m+ = {}, residual = {:e}",
        rep.iterations, rep.m_plus, rep.residual
    ));
    Ok(())
}

#[derive(Serialize)]
struct CertificateSample {
    amplitude: f64,
    width: f64,
    mass: f64,
    b: f64,
    certificate: f64,
    holds: bool,
}

#[derive(Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
enum DiagnosticOutcome {
    Completed(Diagnostic),
    /// No Gaussian start on `M+` exists for these exponents.
    Unavailable {
        reason: String,
    },
}

#[derive(Serialize)]
struct CertifyDocument<'a> {
    config: &'a RunConfig,
    certificate_coeff: f64,
    k_nehari: f64,
    k_pohozaev: f64,
    all_hold: bool,
    violations: usize,
    samples: Vec<CertificateSample>,
    diagnostic: DiagnosticOutcome,
}

pub fn cmd_certify(config: &Path, out: &Path) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let params = &cfg.params;
    if cfg.regime()?.tag != RegimeTag::Critical {
        return Err(Error::RegimeMismatch(format!(
            "certify needs the critical regime q = 2*(s2) = {}, got q = {}",
            params.crit_s2(),
            params.q
        ))
        .into());
    }
    let grid = build_grid(&cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut samples = Vec::with_capacity(cfg.certify.samples);
    for _ in 0..cfg.certify.samples {
        let amplitude = rng.gen_range(0.1..=10.0);
        let width = rng.gen_range(0.3..=3.0);
        let c = functional::extract_coeffs(&gaussian(&grid, amplitude, width), params)?;
        let certificate = identities::nonexistence_certificate(&c, params)?;
        samples.push(CertificateSample {
            amplitude,
            width,
            mass: c.mass,
            b: c.b,
            certificate,
            holds: !c.is_zero() && certificate >= c.mass,
        });
    }
    let diagnostic = match solver::nonexistence_diagnostic(params, &grid, &cfg.solver) {
        Ok(d) => DiagnosticOutcome::Completed(d),
        Err(Error::InitializationFailure(reason)) => DiagnosticOutcome::Unavailable { reason },
        Err(e) => return Err(e.into()),
    };
    let trace_violations = match &diagnostic {
        DiagnosticOutcome::Completed(d) => d.certificate_violations,
        DiagnosticOutcome::Unavailable { .. } => 0,
    };
    let violations = samples.iter().filter(|s| !s.holds).count() + trace_violations;
    let (k_nehari, k_pohozaev) = identities::elimination_constants(params);
    let doc = CertifyDocument {
        config: &cfg,
        certificate_coeff: identities::certificate_coeff(params),
        k_nehari,
        k_pohozaev,
        all_hold: violations == 0,
        violations,
        samples,
        diagnostic,
    };
    ensure_dir(out)?;
    write_json(&out.join("certify.json"), &doc)?;
    if violations > 0 {
        return Err(CliError::Invariant(format!(
            "{violations} certificate inequalities failed"
        )));
    }
    say(&format!(
        "certify: {} samples hold, certificate_coeff = {}",
        doc.samples.len(),
        doc.certificate_coeff
    ));
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub p: f64,
    pub q: f64,
    pub regime: &'static str,
    pub cond21: Option<bool>,
    pub m_plus: Option<f64>,
    pub converged: Option<bool>,
    pub residual: Option<f64>,
}

impl ScanRow {
    fn cells(&self) -> Vec<String> {
        let flag = |b: Option<bool>| b.map(|b| b.to_string()).unwrap_or_default();
        vec![
            fmt_f64(self.p),
            fmt_f64(self.q),
            self.regime.to_string(),
            flag(self.cond21),
            fmt_opt(self.m_plus),
            flag(self.converged),
            fmt_opt(self.residual),
        ]
    }
}

/// Classifies one cell and solves it when the existence hypotheses hold.
pub fn scan_cell(cfg: &RunConfig, p: f64, q: f64) -> ScanRow {
    let params = Params { p, q, ..cfg.params };
    let mut row = ScanRow {
        p,
        q,
        regime: "invalid",
        cond21: None,
        m_plus: None,
        converged: None,
        residual: None,
    };
    let regime = match params.classify() {
        Ok(r) => r,
        Err(Error::UnsupportedRegime(_)) => {
            row.regime = "unsupported";
            return row;
        }
        Err(_) => return row,
    };
    if regime.tag == RegimeTag::Critical {
        row.regime = "critical";
        return row;
    }
    row.regime = "existence";
    row.cond21 = Some(regime.cond21);
    if !regime.cond21 {
        return row;
    }
    match solver::solve(&params, cfg.grid, &cfg.solver) {
        Ok(rep) => {
            row.m_plus = Some(rep.m_plus);
            row.converged = Some(true);
            row.residual = Some(rep.residual);
        }
        Err(Error::ConvergenceFailure(rep))
        | Err(Error::BranchLossFailure {
            report: Some(rep), ..
        }) => {
            row.converged = Some(false);
            row.residual = Some(rep.residual);
        }
        Err(_) => row.converged = Some(false),
    }
    row
}

/// All cells in row-major order: `q` outer, `p` inner.
pub fn scan_rows(cfg: &RunConfig) -> Result<Vec<ScanRow>, CliError> {
    let scan = cfg
        .scan
        .ok_or_else(|| CliError::Config("scan needs a `scan` block with p and q ranges".into()))?;
    let ps = scan.p_values()?;
    let cells: Vec<(f64, f64)> = scan
        .q_values()?
        .into_iter()
        .flat_map(|q| ps.iter().map(move |&p| (p, q)))
        .collect();
    Ok(cells
        .par_iter()
        .map(|&(p, q)| scan_cell(cfg, p, q))
        .collect())
}

pub fn cmd_scan(config: &Path, out: &Path) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    cfg.params.validate()?;
    let rows = scan_rows(&cfg)?;
    let cells: Vec<Vec<String>> = rows.iter().map(ScanRow::cells).collect();
    ensure_dir(out)?;
    write_csv(
        &out.join("scan.csv"),
        &[
            "p",
            "q",
            "regime",
            "cond21",
            "m_plus",
            "converged",
            "residual",
        ],
        &cells,
    )?;
    let solved = rows.iter().filter(|r| r.m_plus.is_some()).count();
    say(&format!("scan: {} cells, {} solved", rows.len(), solved));
    Ok(())
}
