//! Oracle validation sweep: random queries per sensor case, each planned,
//! traced, checked against the cone and compared with the family oracle,
//! plus the exclusion probe on the same seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use fovsynth::oracle::exclusion::representative;
use fovsynth::oracle::{exclusion_probe_with, family_minimize};
use fovsynth::verify::{check_feasible, trace_path};
use fovsynth::{PolarPoint, SensorCase, Synthesis};

use crate::SCHEMA_VERSION;

/// Planner and family oracle must agree to this fraction of ρ_P.
pub const ORACLE_TOL: f64 = 1e-4;
const RHO_P: f64 = 1.0;

#[derive(Serialize)]
pub struct CaseReport {
    pub case: &'static str,
    pub gamma: f64,
    pub delta: f64,
    pub queries: usize,
    pub worst_oracle_gap: f64,
    pub oracle_disagreements: usize,
    pub infeasible: usize,
    pub worst_violation: f64,
    pub errors: usize,
    pub exclusion_samples: usize,
    pub exclusion_counterexamples: usize,
    pub ok: bool,
}

#[derive(Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub seed: u64,
    pub samples: usize,
    pub tolerance: f64,
    pub cases: Vec<CaseReport>,
    pub failures: usize,
    pub ok: bool,
}

enum Outcome {
    Checked { gap: f64, violation: f64, feasible: bool },
    Error,
}

fn check_query(s: &Synthesis, q: &PolarPoint, tol: f64) -> Outcome {
    let Ok(plan) = s.plan(q) else {
        return Outcome::Error;
    };
    let Ok(oracle) = family_minimize(&s.to_reduced(q), &s.geom, s.rho_p) else {
        return Outcome::Error;
    };
    let Ok(trace) = trace_path(&plan.reduced, &s.geom, 1e-3 * s.rho_p) else {
        return Outcome::Error;
    };
    let f = check_feasible(&trace, &s.geom, tol);
    Outcome::Checked {
        gap: (plan.path.total_length - oracle.length).abs() / s.rho_p,
        violation: f.worst_violation,
        feasible: f.ok,
    }
}

pub fn run(cases: &[SensorCase], samples: usize, seed: u64, tol: f64) -> Report {
    let reports: Vec<CaseReport> = cases
        .iter()
        .map(|&case| {
            let geom = representative(case);
            let s = Synthesis::new(geom.gamma, geom.delta, RHO_P).expect("representative sensors are valid");
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (case as u64).wrapping_mul(0x9e37_79b9));
            let queries: Vec<PolarPoint> = (0..samples)
                .map(|_| {
                    let rho = RHO_P * rng.gen_range((0.05f64).ln()..(3.0f64).ln()).exp();
                    PolarPoint::new(rho, rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
                })
                .collect();
            let outcomes: Vec<Outcome> = queries.par_iter().map(|q| check_query(&s, q, tol)).collect();
            let mut r = CaseReport {
                case: case.name(),
                gamma: geom.gamma,
                delta: geom.delta,
                queries: samples,
                worst_oracle_gap: 0.0,
                oracle_disagreements: 0,
                infeasible: 0,
                worst_violation: 0.0,
                errors: 0,
                exclusion_samples: samples,
                exclusion_counterexamples: 0,
                ok: false,
            };
            for o in outcomes {
                match o {
                    Outcome::Error => r.errors += 1,
                    Outcome::Checked { gap, violation, feasible } => {
                        r.worst_oracle_gap = r.worst_oracle_gap.max(gap);
                        r.worst_violation = r.worst_violation.max(violation);
                        r.oracle_disagreements += usize::from(gap > ORACLE_TOL);
                        r.infeasible += usize::from(!feasible);
                    }
                }
            }
            r.exclusion_counterexamples = exclusion_probe_with(&geom, samples, seed).counterexamples();
            r.ok = r.errors + r.oracle_disagreements + r.infeasible + r.exclusion_counterexamples == 0;
            r
        })
        .collect();
    let failures = reports
        .iter()
        .map(|r| r.errors + r.oracle_disagreements + r.infeasible + r.exclusion_counterexamples)
        .sum();
    Report {
        schema_version: SCHEMA_VERSION,
        seed,
        samples,
        tolerance: tol,
        cases: reports,
        failures,
        ok: failures == 0,
    }
}
