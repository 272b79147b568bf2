//! Monte Carlo audits of the maximal inequality for stochastic integrals and
//! of the discrete stochastic Gronwall bound.
//!
//! The maximal-inequality audit estimates both sides of
//! `E sup_{t < tau} |(Y.Z)_t|^2  <=  E C_{tau-} int_{(0,tau)} |Y|^2 dC`
//! over an ensemble of simulated paths, together with the concave variant
//! `E (Y.Z)*_{tau-} <= 2 E (C_{tau-} int |Y|^2 dC)^{1/2}`.
//! A violation beyond Monte Carlo noise signals an integrator bug and is
//! reported as a failure rather than an error.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    control_process, gronwall_bound, lambda_functional_plain, sample_path, stochastic_integral,
    OperatorPath, SemimartingalePath, SemimartingaleSpec, TimeGrid,
};
use crate::error::Result;
use crate::util::{path_seed, Estimate};

/// Integrand rules for the audit, producing scalar-valued integrals
/// (`G = R`, so entries are `1 x k`).
#[derive(Clone, Debug)]
pub enum AuditIntegrand {
    /// Constant operator.
    Constant(Array2<f64>),
    /// Bounded path-dependent rule
    /// `Y(t_i) = amp * (0.5 + 0.5 sin Z_1(t_{i-1})) * (1, ..., 1)`.
    /// Depends on the path only strictly before `t_i`.
    BoundedPast { amp: f64 },
}

impl AuditIntegrand {
    fn build(&self, z: &SemimartingalePath) -> OperatorPath {
        let n_pts = z.grid().len();
        let k = z.k_dim();
        match self {
            AuditIntegrand::Constant(op) => OperatorPath::constant(op.clone(), n_pts),
            AuditIntegrand::BoundedPast { amp } => {
                let ops = (0..n_pts)
                    .map(|i| {
                        let past = if i == 0 { 0.0 } else { z.values()[[i - 1, 0]] };
                        let v = amp * (0.5 + 0.5 * past.sin());
                        Array2::from_elem((1, k), v)
                    })
                    .collect();
                OperatorPath::from_ops(ops).expect("constructed non-empty")
            }
        }
    }
}

/// Stop rules for the audit.
#[derive(Clone, Copy, Debug)]
pub enum PathStop {
    /// No stop before the horizon.
    Horizon,
    /// First grid time with `|Z(t)| >= threshold`, capped at the horizon.
    FirstPassage { threshold: f64 },
}

impl PathStop {
    fn stop_index(&self, z: &SemimartingalePath) -> usize {
        let n = z.grid().n_steps();
        match self {
            PathStop::Horizon => n,
            PathStop::FirstPassage { threshold } => {
                for i in 0..=n {
                    let norm = z.value(i).dot(&z.value(i)).sqrt();
                    if norm >= *threshold {
                        return i.max(1);
                    }
                }
                n
            }
        }
    }
}

/// Two-sided Monte Carlo estimates of the maximal inequality.
#[derive(Clone, Debug)]
pub struct AuditReport {
    pub lhs: Estimate,
    pub rhs: Estimate,
    pub sqrt_lhs: Estimate,
    pub sqrt_rhs: Estimate,
    pub pass_quadratic: bool,
    pub pass_sqrt: bool,
}

impl AuditReport {
    pub fn pass(&self) -> bool {
        self.pass_quadratic && self.pass_sqrt
    }
}

fn inequality_holds(lhs: &Estimate, rhs_scaled: f64, rhs: &Estimate, factor: f64) -> bool {
    if rhs_scaled <= 0.0 {
        return lhs.mean <= 1e-12;
    }
    let rel_se = (lhs.std_error.powi(2) + (factor * rhs.std_error).powi(2)).sqrt() / rhs_scaled;
    lhs.mean <= rhs_scaled * (1.0 + 3.0 * rel_se)
}

/// Estimates `E sup_{t<tau} |(Y.Z)_t|^2` and `E C_{tau-} int |Y|^2 dC` over
/// `n_paths` simulated paths and checks the inequality within three Monte
/// Carlo standard errors, together with the square-root variant.
pub fn mp_inequality_audit(
    spec: &SemimartingaleSpec,
    integrand: &AuditIntegrand,
    stop: PathStop,
    grid: &TimeGrid,
    n_paths: usize,
    seed_base: u64,
) -> Result<AuditReport> {
    let per_path: Vec<(f64, f64, f64, f64)> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let z = sample_path(spec, grid, path_seed(seed_base, i))?;
            let c = control_process(&z);
            let y = integrand.build(&z);
            let w = stochastic_integral(&y, &z)?;
            let tau = stop.stop_index(&z);
            let mut sup_sq = 0.0f64;
            for t in 0..tau {
                let v = w[[t, 0]];
                sup_sq = sup_sq.max(v * v);
            }
            let rhs = lambda_functional_plain(&c, &y, 1.0, tau);
            Ok((sup_sq, rhs, sup_sq.sqrt(), rhs.sqrt()))
        })
        .collect::<Result<_>>()?;

    let lhs = Estimate::from_samples(&per_path.iter().map(|p| p.0).collect::<Vec<_>>());
    let rhs = Estimate::from_samples(&per_path.iter().map(|p| p.1).collect::<Vec<_>>());
    let sqrt_lhs = Estimate::from_samples(&per_path.iter().map(|p| p.2).collect::<Vec<_>>());
    let sqrt_rhs = Estimate::from_samples(&per_path.iter().map(|p| p.3).collect::<Vec<_>>());

    let pass_quadratic = inequality_holds(&lhs, rhs.mean, &rhs, 1.0);
    let pass_sqrt = inequality_holds(&sqrt_lhs, 2.0 * sqrt_rhs.mean, &sqrt_rhs, 2.0);
    Ok(AuditReport { lhs, rhs, sqrt_lhs, sqrt_rhs, pass_quadratic, pass_sqrt })
}

/// Outcome of the synthetic Gronwall audit.
#[derive(Clone, Debug)]
pub struct GronwallAuditReport {
    pub n_pairs: usize,
    pub violations: usize,
    /// Smallest ratio `bound / realized` across the pairs (> 1 means the
    /// bound held with margin everywhere).
    pub worst_margin: f64,
}

impl GronwallAuditReport {
    pub fn pass(&self) -> bool {
        self.violations == 0
    }
}

/// Builds synthetic `(phi, A)` pairs that satisfy the stopped integral
/// hypothesis with known `(a, b, l)` and checks the realized `E phi(tau-)`
/// against `gronwall_bound`.
///
/// `A` is a random nondecreasing path (continuous ramp plus jumps) with
/// `sup_{t<tau} A = l`, and `phi(t) = u * prod_{s<=t} (1 + b dA(s))` with
/// `E u <= a`: the product form turns the hypothesis into an identity,
/// `phi(sigma-) = u + b int_0^{sigma-} phi(s-) dA(s)` for every stop.
/// Products are drawn with `2 b l` in `[1, 6]`.
pub fn gronwall_audit(n_pairs: usize, paths_per_pair: usize, seed: u64) -> GronwallAuditReport {
    let mut violations = 0usize;
    let mut worst_margin = f64::INFINITY;
    for pair in 0..n_pairs {
        let mut rng = ChaCha8Rng::seed_from_u64(path_seed(seed, pair as u64));
        let n = 32 + (rng.random::<u64>() % 97) as usize;
        let tau = n / 2 + (rng.random::<u64>() % (n / 2) as u64) as usize;
        let ell = 0.5 + 2.5 * rng.random::<f64>();
        let s = 1.0 + 5.0 * rng.random::<f64>(); // s = 2 b l
        let b = s / (2.0 * ell);
        let a = 0.5 + 1.5 * rng.random::<f64>();

        // Raw increasing increments: ramp plus sparse jumps, then normalized
        // so that A(tau - 1) = l.
        let mut inc = vec![0.0f64; n + 1];
        for v in inc.iter_mut().skip(1) {
            *v = rng.random::<f64>() * 0.1;
            if rng.random::<f64>() < 0.1 {
                *v += rng.random::<f64>();
            }
        }
        let raw_sum: f64 = inc[1..tau].iter().sum();
        let scale = if raw_sum > 0.0 { ell / raw_sum } else { 0.0 };
        for v in inc.iter_mut() {
            *v *= scale;
        }

        // phi(tau-) / u is a deterministic product; u is the only randomness.
        let mut product = 1.0;
        for dv in inc[1..tau].iter() {
            product *= 1.0 + b * dv;
        }
        let deterministic = pair % 2 == 0;
        let mean_u = if deterministic {
            a
        } else {
            let us: Vec<f64> = (0..paths_per_pair).map(|_| a * rng.random::<f64>()).collect();
            crate::util::pairwise_sum(&us) / paths_per_pair as f64
        };
        let realized = mean_u * product;
        let bound = gronwall_bound(a, b, ell);
        if realized > bound * (1.0 + 1e-12) {
            violations += 1;
        }
        if realized > 0.0 {
            worst_margin = worst_margin.min(bound / realized);
        }
    }
    GronwallAuditReport { n_pairs, violations, worst_margin }
}
