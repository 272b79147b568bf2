//! Verification harness: energy-identity residuals, a priori monitors, and
//! uniform-integrability diagnostics.
//!
//! The central object is the discrete energy identity for the square of the
//! H-norm along a solution path,
//!
//! `1/2 |x_j|^2 + int |x|_V^2 + int int xi x
//!     = 1/2 |x_0|^2 + 1/2 [G.Z, G.Z]_j + ((X_- G) . Z)_j + r_j`,
//!
//! whose residual series `r` is an implicit-Euler energy defect: it vanishes
//! identically in the pure-integral case and shrinks at first order in the
//! step size otherwise.

pub mod studies;

use crate::error::Result;
use crate::integrator::SolutionPath;
use crate::monotone::ConvexPotential;
use crate::noise::{quadratic_variation, stochastic_integral, OperatorPath, SemimartingalePath};
use crate::util::pairwise_sum;

/// Per-step terms of the discrete energy identity, all cumulative.
#[derive(Clone, Debug)]
pub struct EnergyLedger {
    /// `1/2 |x_j|^2`.
    pub half_norm_sq: Vec<f64>,
    /// `sum <A x, x> dt` up to `j`.
    pub v_cum: Vec<f64>,
    /// `sum <xi, x> dt` up to `j`; nondecreasing by monotonicity.
    pub xix_cum: Vec<f64>,
    /// `1/2 [G.Z, G.Z]_j`, the discrete bracket of the noise integral.
    pub half_bracket: Vec<f64>,
    /// `((X_- G) . Z)_j`, the predictable cross integral.
    pub cross: Vec<f64>,
    /// Identity residual `r_j`.
    pub residual: Vec<f64>,
}

/// Assembles the energy ledger of a solution path driven by the additive
/// coefficient `g` against `z`.
pub fn energy_ledger(
    sol: &SolutionPath,
    g: &OperatorPath,
    z: &SemimartingalePath,
) -> Result<EnergyLedger> {
    let n = sol.grid().n_steps();
    let w = stochastic_integral(g, z)?;
    let bracket = quadratic_variation(&w, sol.h_weight());

    let mut half_norm_sq = Vec::with_capacity(n + 1);
    let mut cross = vec![0.0; n + 1];
    for j in 0..=n {
        half_norm_sq.push(0.5 * sol.h_norm_sq(j));
    }
    for j in 0..n {
        let mut inc = 0.0;
        for i in 0..sol.dim() {
            inc += sol.states()[[j, i]] * (w[[j + 1, i]] - w[[j, i]]);
        }
        cross[j + 1] = cross[j] + sol.h_weight() * inc;
    }

    let mut residual = Vec::with_capacity(n + 1);
    for j in 0..=n {
        residual.push(
            half_norm_sq[j] + sol.v_integral()[j] + sol.duality_integral()[j]
                - half_norm_sq[0]
                - 0.5 * bracket[j]
                - cross[j],
        );
    }
    Ok(EnergyLedger {
        half_norm_sq,
        v_cum: sol.v_integral().to_vec(),
        xix_cum: sol.duality_integral().to_vec(),
        half_bracket: bracket.iter().map(|b| 0.5 * b).collect(),
        cross,
        residual,
    })
}

/// Residual series of the discrete energy identity.
pub fn ito_residual(
    sol: &SolutionPath,
    g: &OperatorPath,
    z: &SemimartingalePath,
) -> Result<Vec<f64>> {
    Ok(energy_ledger(sol, g, z)?.residual)
}

/// The three a priori quantities of a solution path:
/// `sup_{t<T} |X|^2`, `int |X|_V^2 dt`, and `int int xi X dx dt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AprioriTriple {
    pub sup_norm_sq: f64,
    pub v_integral: f64,
    pub duality_integral: f64,
}

impl AprioriTriple {
    pub fn total(&self) -> f64 {
        self.sup_norm_sq + self.v_integral + self.duality_integral
    }
}

/// Reads the a priori triple off a solution path. The duality term is
/// nonnegative for every monotone graph, up to the proximal tolerance.
pub fn apriori_monitor(sol: &SolutionPath) -> AprioriTriple {
    let n = sol.grid().n_steps();
    AprioriTriple {
        sup_norm_sq: sol.sup_h_norm_sq_before(n),
        v_integral: *sol.v_integral().last().unwrap(),
        duality_integral: *sol.duality_integral().last().unwrap(),
    }
}

/// Outcome of the uniform-integrability diagnostic.
#[derive(Clone, Debug)]
pub struct UiReport {
    pub pass: bool,
    pub epsilon: f64,
    pub delta: f64,
    pub threshold_r: f64,
    pub slope_m: f64,
    /// Largest sample mean of `j*(g)` across the family.
    pub worst_mean: f64,
    /// Indices of samples violating the declared bound or the tail bound.
    pub flagged: Vec<usize>,
}

/// Superlinearity-based uniform-integrability check.
///
/// Requires the conjugate of `p` to be superlinear (verified on a geometric
/// ray). Given a declared bound on `mean(j*(g))` over the family and a
/// target `epsilon`, computes the slope `M = 2 bound / epsilon`, the
/// threshold `R` with `j*(y) >= M |y|` beyond `R`, and `delta = epsilon/(2R)`,
/// then verifies on every sample that the tail mass `mean(|g| 1_{|g|>R})`
/// stays below `epsilon / 2`. Any sample whose `j*`-mean exceeds the bound
/// is flagged and fails the diagnostic.
pub fn uniform_integrability_diag(
    samples: &[Vec<f64>],
    p: &ConvexPotential,
    bound: f64,
    epsilon: f64,
) -> UiReport {
    assert!(epsilon > 0.0 && bound > 0.0, "diagnostic needs positive bound and epsilon");
    let slope_m = 2.0 * bound / epsilon;

    // Find R on a geometric ray; superlinearity guarantees termination.
    // Conjugates of slowly growing potentials need a huge R for steep
    // slopes, so the ray runs up to the representable range.
    let mut threshold_r = 1.0f64;
    let mut superlinear = false;
    while threshold_r < 1e300 {
        let up = p.conjugate(threshold_r) / threshold_r;
        let down = p.conjugate(-threshold_r) / threshold_r;
        if up >= slope_m && down >= slope_m {
            superlinear = true;
            break;
        }
        threshold_r *= 2.0;
    }
    if !superlinear {
        return UiReport {
            pass: false,
            epsilon,
            delta: 0.0,
            threshold_r,
            slope_m,
            worst_mean: f64::NAN,
            flagged: Vec::new(),
        };
    }

    let mut flagged = Vec::new();
    let mut worst_mean = 0.0f64;
    for (idx, g) in samples.iter().enumerate() {
        if g.is_empty() {
            continue;
        }
        let conj: Vec<f64> = g.iter().map(|y| p.conjugate(*y).min(f64::MAX)).collect();
        let mean = pairwise_sum(&conj) / g.len() as f64;
        worst_mean = worst_mean.max(mean);
        let tail: Vec<f64> =
            g.iter().map(|y| if y.abs() > threshold_r { y.abs() } else { 0.0 }).collect();
        let tail_mass = pairwise_sum(&tail) / g.len() as f64;
        if mean > bound || tail_mass > epsilon / 2.0 + 1e-12 {
            flagged.push(idx);
        }
    }
    UiReport {
        pass: flagged.is_empty(),
        epsilon,
        delta: epsilon / (2.0 * threshold_r),
        threshold_r,
        slope_m,
        worst_mean,
        flagged,
    }
}

/// Convenience: flattened absolute selections of a solution path, for use as
/// a uniform-integrability sample.
pub fn selection_sample(sol: &SolutionPath) -> Vec<f64> {
    sol.selections().iter().copied().collect()
}

/// Componentwise supremum distance helper used by the comparative studies.
pub fn state_difference_norm(a: &SolutionPath, b: &SolutionPath) -> f64 {
    a.sup_distance(b, a.grid().n_steps())
}
