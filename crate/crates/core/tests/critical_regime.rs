//! Certificate and elimination bound when `q = 2*(s2)`.

use std::sync::Arc;

use nehari_core::identities::{self, elimination_constants};
use nehari_core::solver::{self, DiagnosticClass};
use nehari_core::{fiber::FiberCoeffs, functional, GridSpec, Params, RadialGrid, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn critical(p: f64) -> Params {
    Params::new(3, 1.0, 0.0, 1.0, p, 4.0).unwrap()
}

fn grid(n: usize) -> Arc<RadialGrid> {
    Arc::new(
        RadialGrid::build(
            GridSpec {
                n,
                radius: 20.0,
                gamma: 2.0,
            },
            3,
            0.0,
            1.0,
        )
        .unwrap(),
    )
}

#[test]
fn certificate_dominates_mass_on_random_gaussians() {
    let g = grid(512);
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for p in [4.5, 5.0, 6.0] {
        let params = critical(p);
        for _ in 0..100 {
            let amp = rng.gen_range(0.1..10.0);
            let width = rng.gen_range(0.3..3.0);
            let u = functional::gaussian(&g, amp, width);
            let c = functional::extract_coeffs(&u, &params).unwrap();
            let cert = identities::nonexistence_certificate(&c, &params).unwrap();
            assert!(c.mass > 0.0);
            assert!(cert >= c.mass);
        }
    }
}

#[test]
fn elimination_bound_on_random_tuples() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..1000 {
        let params = critical(rng.gen_range(4.05..6.0));
        let c = FiberCoeffs::new(
            rng.gen_range(0.0..10.0),
            rng.gen_range(0.0..10.0),
            rng.gen_range(0.0..10.0),
            rng.gen_range(0.0..10.0),
        )
        .unwrap();
        let a = c.norm_sq();
        let (k1, k2) = elimination_constants(&params);
        let bound = k1 * identities::nehari_residual(&c, &params)
            + k2 * identities::pohozaev_residual(&c, &params);
        assert!(
            c.mass / a <= bound * (1.0 + 4.0 * f64::EPSILON) + f64::EPSILON,
            "{c:?}"
        );
    }
}

#[test]
fn diagnostic_smoke() {
    let params = critical(5.0);
    let diag =
        solver::nonexistence_diagnostic(&params, &grid(512), &SolverConfig::default()).unwrap();
    assert_eq!(diag.certificate_violations, 0);
    assert!(diag.trace.iter().all(|row| row.certificate >= row.mass));
    // recorded baseline; the descent pathway is not predicted by the theory
    assert_eq!(diag.classification, DiagnosticClass::GridArrested);
}

#[test]
fn diagnostic_refuses_existence_regime() {
    let params = Params::new(3, 1.0, 0.0, 1.0, 5.0, 3.8).unwrap();
    assert!(solver::nonexistence_diagnostic(&params, &grid(64), &SolverConfig::default()).is_err());
}
