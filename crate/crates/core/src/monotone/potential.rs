//! Convex potentials attached to monotone graphs.
//!
//! Every built-in graph is the subdifferential of a convex `j >= 0` with
//! `j(0) = 0`; this module evaluates `j`, its convex conjugate `j*`, and the
//! Moreau envelope `j_lambda`, and offers the Fenchel-Young equality test
//! `y in beta(x)  <=>  x y = j(x) + j*(y)`.
//!
//! Conjugates are closed-form for the built-in kinds; for jump graphs
//! (Heaviside, floor) `j*` is piecewise affine and handled by explicit case
//! analysis on the jump set. Custom graphs fall back to quadrature for `j`
//! and an inverse-graph solve for `j*`. A diverging supremum is reported as
//! the `+inf` sentinel rather than an error.

use super::{GraphKind, ScalarGraph};

/// Convex potential `j` with `j(0) = 0`, `j >= 0`, and `beta = dj`.
#[derive(Clone, Debug)]
pub struct ConvexPotential {
    graph: ScalarGraph,
    symmetry: Option<f64>,
}

impl ConvexPotential {
    /// Wraps a graph together with the growth-comparability constant of its
    /// potential, where one exists. One-sided potentials (Heaviside,
    /// exponential) have no finite constant: `j(x) / j(-x)` is unbounded and
    /// the field stays `None`.
    pub fn new(graph: ScalarGraph) -> Self {
        let symmetry = match graph.kind() {
            GraphKind::Identity | GraphKind::Power(_) => Some(1.0),
            GraphKind::Floor => {
                // Ratio max over the default window [2, 50]; tends to 1.
                let mut bound: f64 = 1.0;
                let mut x = 2.0;
                while x <= 50.0 {
                    let (a, b) = (potential_value(graph.kind(), x), potential_value(graph.kind(), -x));
                    bound = bound.max(a / b).max(b / a);
                    x += 0.25;
                }
                Some(bound * 1.05)
            }
            _ => None,
        };
        ConvexPotential { graph, symmetry }
    }

    pub fn graph(&self) -> &ScalarGraph {
        &self.graph
    }

    /// The stored comparability constant for `j(x) / j(-x)` at large `|x|`,
    /// if the potential has symmetric growth.
    pub fn symmetry_bound(&self) -> Option<f64> {
        self.symmetry
    }

    /// Largest two-sided ratio `max(j(x)/j(-x), j(-x)/j(x))` sampled over
    /// `x in [x_big, x_max]`. May be infinite for one-sided potentials.
    pub fn symmetry_ratio(&self, x_big: f64, x_max: f64, samples: usize) -> f64 {
        let mut worst = 1.0f64;
        for i in 0..samples {
            let x = x_big + (x_max - x_big) * i as f64 / (samples.max(2) - 1) as f64;
            let (a, b) = (self.value(x), self.value(-x));
            if a <= 0.0 || b <= 0.0 {
                return f64::INFINITY;
            }
            worst = worst.max(a / b).max(b / a);
        }
        worst
    }

    /// `j(x)` at the base scale.
    pub fn value(&self, x: f64) -> f64 {
        self.graph.base_scale() * potential_value(self.graph.kind(), x)
    }

    /// `j(t, x) = g(t) j(x)` for the modulated potential.
    pub fn value_at(&self, t: f64, x: f64) -> f64 {
        self.graph.scale_at(t) * potential_value(self.graph.kind(), x)
    }

    /// Convex conjugate `j*(y) = sup_x (x y - j(x))`; `+inf` when the
    /// supremum diverges.
    pub fn conjugate(&self, y: f64) -> f64 {
        let s = self.graph.base_scale();
        s * conjugate_value(self.graph.kind(), y / s)
    }

    pub fn conjugate_at(&self, t: f64, y: f64) -> f64 {
        let s = self.graph.scale_at(t);
        s * conjugate_value(self.graph.kind(), y / s)
    }

    /// Moreau envelope `j_lambda(x) = inf_s ( |x-s|^2 / (2 lambda) + j(s) )`,
    /// evaluated through the proximal point:
    /// `j_lambda(x) = j(J_lambda x) + |x - J_lambda x|^2 / (2 lambda)`.
    pub fn moreau(&self, lambda: f64, x: f64) -> f64 {
        assert!(lambda > 0.0, "moreau requires lambda > 0");
        let j = self.graph.resolvent(lambda, x);
        self.value(j) + (x - j) * (x - j) / (2.0 * lambda)
    }

    /// Fenchel-Young equality test: `y in beta(x)` iff
    /// `|x y - j(x) - j*(y)| <= tol`.
    pub fn membership(&self, x: f64, y: f64, tol: f64) -> bool {
        assert!(tol > 0.0, "membership requires tol > 0");
        let jx = self.value(x);
        let jy = self.conjugate(y);
        if !jy.is_finite() {
            return false;
        }
        (x * y - jx - jy).abs() <= tol
    }
}

fn potential_value(kind: &GraphKind, x: f64) -> f64 {
    match kind {
        GraphKind::Zero => 0.0,
        GraphKind::Identity => 0.5 * x * x,
        GraphKind::Power(p) => x.abs().powi(*p as i32 + 1) / (*p as f64 + 1.0),
        GraphKind::Exponential => x.exp() - x - 1.0,
        GraphKind::HeavisideFilled => x.max(0.0),
        GraphKind::Floor => floor_potential(x),
        GraphKind::Custom { .. } => quadrature_potential(kind, x),
    }
}

fn floor_potential(x: f64) -> f64 {
    if x >= 0.0 {
        let n = x.floor();
        0.5 * n * (n - 1.0) + n * (x - n)
    } else {
        let k = (-x).ceil();
        k * (1.0 - k - x) + 0.5 * (k - 1.0) * k
    }
}

/// Simpson quadrature of the midpoint selection of `beta` over `[0, x]`;
/// jumps sit on a null set, so the integral equals `j(x)`.
fn quadrature_potential(kind: &GraphKind, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let n = 1024usize;
    let h = x / n as f64;
    let mid = |s: f64| 0.5 * (kind.left(s) + kind.right(s));
    let mut acc = mid(0.0) + mid(x);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * mid(i as f64 * h);
    }
    (acc * h / 3.0).max(0.0)
}

/// Arguments within this distance of a bounded conjugate domain are treated
/// as boundary points. Yosida selections carry the proximal solver noise
/// (about `tol / lambda`), which must not flip a finite conjugate to the
/// divergence sentinel.
const CONJUGATE_SLACK: f64 = 1e-9;

fn conjugate_value(kind: &GraphKind, y: f64) -> f64 {
    match kind {
        GraphKind::Zero => {
            if y.abs() <= CONJUGATE_SLACK {
                0.0
            } else {
                f64::INFINITY
            }
        }
        GraphKind::Identity => 0.5 * y * y,
        GraphKind::Power(p) => {
            let p = *p as f64;
            p / (p + 1.0) * y.abs().powf((p + 1.0) / p)
        }
        GraphKind::Exponential => {
            if y > -1.0 {
                (1.0 + y) * (1.0 + y).ln() - y
            } else if y >= -1.0 - CONJUGATE_SLACK {
                1.0
            } else {
                f64::INFINITY
            }
        }
        GraphKind::HeavisideFilled => {
            if (-CONJUGATE_SLACK..=1.0 + CONJUGATE_SLACK).contains(&y) {
                0.0
            } else {
                f64::INFINITY
            }
        }
        GraphKind::Floor => {
            if y >= 0.0 {
                let k = y.floor();
                (k + 1.0) * y - 0.5 * k * (k + 1.0)
            } else {
                let k = (-y).floor();
                -k * y - 0.5 * k * (k + 1.0)
            }
        }
        GraphKind::Custom { .. } => inverse_graph_conjugate(kind, y),
    }
}

/// Solves `beta(x) ∋ y` by bisection on the inverse graph, then evaluates
/// `j*(y) = x y - j(x)`. If `y` escapes the range of `beta` the supremum
/// diverges and `+inf` is returned.
fn inverse_graph_conjugate(kind: &GraphKind, y: f64) -> f64 {
    const RANGE_CAP: f64 = 1e9;
    // Expand a bracket [lo, hi] with right(lo) >= ... containing a point x
    // with left(x) <= y <= right(x).
    let mut lo = -1.0;
    let mut hi = 1.0;
    while kind.right(hi) < y {
        hi *= 2.0;
        if hi > RANGE_CAP {
            return f64::INFINITY;
        }
    }
    while kind.left(lo) > y {
        lo *= 2.0;
        if lo < -RANGE_CAP {
            return f64::INFINITY;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kind.left(mid) <= y && y <= kind.right(mid) {
            lo = mid;
            hi = mid;
            break;
        }
        if kind.left(mid) > y {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    let x = 0.5 * (lo + hi);
    (x * y - quadrature_potential(kind, x)).max(0.0)
}
