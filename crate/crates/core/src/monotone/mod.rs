//! Scalar maximal-monotone-graph calculus.
//!
//! A maximal monotone graph on the real line arises from an increasing
//! function `gamma0` by filling its jumps: `beta(x) = [gamma0(x-), gamma0(x+)]`.
//! This module provides that construction, a library of built-in graphs, and
//! the resolvent / Yosida machinery built on top of them:
//!
//! * `resolvent(lambda, x)` solves `x in y + lambda * beta(y)` for the unique
//!   `y` (the proximal point),
//! * `yosida(lambda, x) = (x - resolvent(lambda, x)) / lambda` is the
//!   single-valued `1/lambda`-Lipschitz surrogate of `beta`,
//! * graphs may carry a bounded time modulation `g(t) * beta(x)` to exercise
//!   time-dependent drifts.
//!
//! The proximal solve is a safeguarded bisection on the strictly increasing
//! set-valued map `y -> y + lambda * beta(y)`: jumps of `gamma0` are handled
//! exactly (the solve terminates as soon as the target lands inside a filled
//! jump interval), and a Newton step accelerates the smooth kinds.

mod potential;

pub use potential::ConvexPotential;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Absolute tolerance of the proximal bisection.
pub const PROX_TOL: f64 = 1e-12;
const PROX_MAX_ITER: usize = 200;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The underlying increasing function of a graph, with one-sided limits.
#[derive(Clone)]
pub enum GraphKind {
    /// `beta = {0}` everywhere.
    Zero,
    /// `gamma0(r) = r`.
    Identity,
    /// `gamma0(r) = r |r|^(p-1)`.
    Power(u32),
    /// `gamma0(r) = exp(r) - 1`. Growth at +infinity is arbitrary.
    Exponential,
    /// Filled Heaviside step: `beta(0) = [0, 1]`.
    HeavisideFilled,
    /// Filled floor function: `beta(k) = [k - 1, k]` at every integer `k`.
    Floor,
    /// User-supplied left/right limit evaluators of an increasing function.
    Custom { left: ScalarFn, right: ScalarFn },
}

impl fmt::Debug for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&spec_name(self))
    }
}

fn spec_name(kind: &GraphKind) -> String {
    match kind {
        GraphKind::Zero => "zero".into(),
        GraphKind::Identity => "identity".into(),
        GraphKind::Power(p) => format!("power-{p}"),
        GraphKind::Exponential => "exponential".into(),
        GraphKind::HeavisideFilled => "heaviside-filled".into(),
        GraphKind::Floor => "floor".into(),
        GraphKind::Custom { .. } => "custom".into(),
    }
}

impl GraphKind {
    /// `gamma0(x-)`, before scaling.
    fn left(&self, x: f64) -> f64 {
        match self {
            GraphKind::Zero => 0.0,
            GraphKind::Identity => x,
            GraphKind::Power(p) => signed_power(x, *p),
            GraphKind::Exponential => x.exp() - 1.0,
            GraphKind::HeavisideFilled => {
                if x <= 0.0 {
                    0.0
                } else {
                    1.0
                }
            }
            GraphKind::Floor => {
                let f = x.floor();
                if x == f {
                    f - 1.0
                } else {
                    f
                }
            }
            GraphKind::Custom { left, .. } => left(x),
        }
    }

    /// `gamma0(x+)`, before scaling.
    fn right(&self, x: f64) -> f64 {
        match self {
            GraphKind::Zero => 0.0,
            GraphKind::Identity => x,
            GraphKind::Power(p) => signed_power(x, *p),
            GraphKind::Exponential => x.exp() - 1.0,
            GraphKind::HeavisideFilled => {
                if x < 0.0 {
                    0.0
                } else {
                    1.0
                }
            }
            GraphKind::Floor => x.floor(),
            GraphKind::Custom { right, .. } => right(x),
        }
    }

    /// Derivative of `gamma0` where it exists; `None` for jump graphs.
    fn derivative(&self, x: f64) -> Option<f64> {
        match self {
            GraphKind::Zero => Some(0.0),
            GraphKind::Identity => Some(1.0),
            GraphKind::Power(p) => Some(*p as f64 * x.abs().powi(*p as i32 - 1)),
            GraphKind::Exponential => Some(x.exp()),
            _ => None,
        }
    }
}

fn signed_power(x: f64, p: u32) -> f64 {
    x.signum() * x.abs().powi(p as i32)
}

/// Bounded, strictly positive time modulation `g(t) = 1 + amp * sin(freq t + phase)`.
///
/// Multiplying a graph by `g(t)` keeps it maximal monotone for every `t` and
/// realizes a (deterministic surrogate of a) random time-dependent drift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modulation {
    pub amp: f64,
    pub freq: f64,
    pub phase: f64,
}

impl Modulation {
    pub fn new(amp: f64, freq: f64, phase: f64) -> Result<Self> {
        if !(amp.abs() < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "modulation amplitude must satisfy |amp| < 1, got {amp}"
            )));
        }
        Ok(Modulation { amp, freq, phase })
    }

    /// Seeded variant: the phase is drawn from the seed so each path gets its
    /// own (fixed) modulation.
    pub fn from_seed(amp: f64, freq: f64, seed: u64) -> Result<Self> {
        let u = (crate::util::path_seed(seed, 77) >> 11) as f64 / (1u64 << 53) as f64;
        Modulation::new(amp, freq, u * std::f64::consts::TAU)
    }

    pub fn value(&self, t: f64) -> f64 {
        1.0 + self.amp * (self.freq * t + self.phase).sin()
    }
}

/// A maximal monotone graph `beta` on the real line, obtained from an
/// increasing function by filling jumps, with an optional constant scale and
/// time modulation. `0 in beta(0)` is required so that the zero state is an
/// equilibrium of the associated flows.
#[derive(Clone, Debug)]
pub struct ScalarGraph {
    kind: GraphKind,
    scale: f64,
    modulation: Option<Modulation>,
}

impl ScalarGraph {
    pub fn zero() -> Self {
        Self::from_kind(GraphKind::Zero)
    }

    pub fn identity() -> Self {
        Self::from_kind(GraphKind::Identity)
    }

    /// `gamma0(r) = r |r|^(p-1)` for `p >= 1`.
    pub fn power(p: u32) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidGraph("power exponent must be >= 1".into()));
        }
        Ok(Self::from_kind(GraphKind::Power(p)))
    }

    pub fn exponential() -> Self {
        Self::from_kind(GraphKind::Exponential)
    }

    pub fn heaviside() -> Self {
        Self::from_kind(GraphKind::HeavisideFilled)
    }

    pub fn floor() -> Self {
        Self::from_kind(GraphKind::Floor)
    }

    fn from_kind(kind: GraphKind) -> Self {
        ScalarGraph { kind, scale: 1.0, modulation: None }
    }

    /// Builds a graph from a config name and optional parameter, the inverse
    /// of [`ScalarGraph::spec_string`].
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "zero" => Ok(Self::zero()),
            "identity" => Ok(Self::identity()),
            "exponential" => Ok(Self::exponential()),
            "heaviside-filled" => Ok(Self::heaviside()),
            "floor" => Ok(Self::floor()),
            "power-2" => Self::power(2),
            "power-3" => Self::power(3),
            "power-5" => Self::power(5),
            other => Err(Error::InvalidGraph(format!("unknown name {other:?}"))),
        }
    }

    /// Names of the built-in graphs, sorted.
    pub fn builtin_names() -> Vec<&'static str> {
        vec![
            "exponential",
            "floor",
            "heaviside-filled",
            "identity",
            "power-2",
            "power-3",
            "power-5",
            "zero",
        ]
    }

    /// Text form `name [scale=..] [mod=amp,freq,phase]` of the graph spec.
    pub fn spec_string(&self) -> String {
        let mut s = spec_name(&self.kind);
        if self.scale != 1.0 {
            s.push_str(&format!(" scale={}", self.scale));
        }
        if let Some(m) = &self.modulation {
            s.push_str(&format!(" mod={},{},{}", m.amp, m.freq, m.phase));
        }
        s
    }

    pub fn with_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::InvalidGraph(format!("scale must be positive, got {scale}")));
        }
        self.scale = scale;
        Ok(self)
    }

    pub fn with_modulation(mut self, modulation: Modulation) -> Self {
        self.modulation = Some(modulation);
        self
    }

    pub(crate) fn kind(&self) -> &GraphKind {
        &self.kind
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, GraphKind::Zero)
    }

    /// Effective multiplicative scale at time `t`.
    pub fn scale_at(&self, t: f64) -> f64 {
        match &self.modulation {
            Some(m) => self.scale * m.value(t),
            None => self.scale,
        }
    }

    pub(crate) fn base_scale(&self) -> f64 {
        self.scale
    }

    /// `inf beta(x)` at the base scale.
    pub fn left(&self, x: f64) -> f64 {
        self.scale * self.kind.left(x)
    }

    /// `sup beta(x)` at the base scale.
    pub fn right(&self, x: f64) -> f64 {
        self.scale * self.kind.right(x)
    }

    /// Midpoint selection of `beta(x)` at the base scale.
    pub fn midpoint(&self, x: f64) -> f64 {
        0.5 * (self.left(x) + self.right(x))
    }

    /// Midpoint selection of the time-`t` graph `g(t) * beta`.
    pub fn midpoint_at(&self, t: f64, x: f64) -> f64 {
        0.5 * self.scale_at(t) * (self.kind.left(x) + self.kind.right(x))
    }

    /// Residual of a proposed resolvent value: the distance from `x` to the
    /// interval `y + lambda * beta(t, y)`. Zero (up to solver tolerance) when
    /// `y` solves the proximal inclusion. The graph is widened by the solver
    /// snap so a `y` that stopped within tolerance of a jump point is judged
    /// against the filled range.
    pub fn resolvent_defect_at(&self, t: f64, lambda: f64, x: f64, y: f64) -> f64 {
        let ls = lambda * self.scale_at(t);
        let snap = 4.0 * PROX_TOL * (1.0 + y.abs());
        let lo = y + ls * self.kind.left(y - snap);
        let hi = y + ls * self.kind.right(y + snap);
        if !lo.is_finite() || !hi.is_finite() {
            return f64::INFINITY;
        }
        (lo - x).max(x - hi).max(0.0)
    }

    /// Whether `y in beta(x)` at the base scale, up to `tol` at the interval
    /// endpoints.
    pub fn contains(&self, x: f64, y: f64, tol: f64) -> bool {
        y >= self.left(x) - tol && y <= self.right(x) + tol
    }

    /// Jump-tolerant membership: the graph is evaluated on the interval
    /// `[x - snap, x + snap]`, so arguments within solver tolerance of a jump
    /// point see the whole filled range.
    pub fn contains_near(&self, x: f64, y: f64, snap: f64, tol: f64) -> bool {
        y >= self.left(x - snap) - tol && y <= self.right(x + snap) + tol
    }

    /// The resolvent `(I + lambda beta)^{-1} x` at the base scale.
    pub fn resolvent(&self, lambda: f64, x: f64) -> f64 {
        assert!(lambda > 0.0, "resolvent requires lambda > 0");
        solve_resolvent(&self.kind, lambda * self.scale, x)
    }

    /// The resolvent of the time-`t` graph `g(t) * beta`.
    pub fn resolvent_at(&self, t: f64, lambda: f64, x: f64) -> f64 {
        assert!(lambda > 0.0, "resolvent requires lambda > 0");
        solve_resolvent(&self.kind, lambda * self.scale_at(t), x)
    }

    /// Yosida approximation `beta_lambda(x) = (x - J_lambda x) / lambda`.
    pub fn yosida(&self, lambda: f64, x: f64) -> f64 {
        (x - self.resolvent(lambda, x)) / lambda
    }

    pub fn yosida_at(&self, t: f64, lambda: f64, x: f64) -> f64 {
        (x - self.resolvent_at(t, lambda, x)) / lambda
    }
}

/// Builds a maximal monotone graph from the one-sided limit evaluators of an
/// increasing function, i.e. `beta(x) = [left(x), right(x)]`.
///
/// Both evaluators must be finite on the whole line; a `+inf` (or NaN) value
/// at a finite probe point is rejected, as is any decrease detected across
/// the probe set.
pub fn fill_jumps<L, R>(left: L, right: R) -> Result<ScalarGraph>
where
    L: Fn(f64) -> f64 + Send + Sync + 'static,
    R: Fn(f64) -> f64 + Send + Sync + 'static,
{
    const PROBES: [f64; 13] =
        [-1e6, -1e3, -10.0, -2.5, -1.0, -0.5, 0.0, 0.5, 1.0, 2.5, 10.0, 1e3, 1e6];
    let mut prev_right = f64::NEG_INFINITY;
    for &x in PROBES.iter() {
        let (a, b) = (left(x), right(x));
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidGraph(format!(
                "base function is not finite at x = {x} (left = {a}, right = {b})"
            )));
        }
        if a > b {
            return Err(Error::InvalidGraph(format!(
                "left limit exceeds right limit at x = {x}"
            )));
        }
        if a < prev_right {
            return Err(Error::InvalidGraph(format!(
                "base function decreases near x = {x}"
            )));
        }
        prev_right = b;
    }
    Ok(ScalarGraph::from_kind(GraphKind::Custom {
        left: Arc::new(left),
        right: Arc::new(right),
    }))
}

/// Convenience wrapper of [`fill_jumps`] for a continuous increasing function.
pub fn fill_jumps_continuous<F>(f: F) -> Result<ScalarGraph>
where
    F: Fn(f64) -> f64 + Send + Sync + Clone + 'static,
{
    let g = f.clone();
    fill_jumps(f, g)
}

/// Solves `x in y + ls * beta(y)` where `ls = lambda * scale > 0`.
///
/// Bracket: the solution satisfies `y = x - ls * xi` with `xi in beta(y)`, so
/// `y in [x - ls * max(sup beta(x), 0) - 1, x + ls * max(-inf beta(x), 0) + 1]`;
/// since `J_lambda 0 = 0` and the resolvent is a contraction, `|y| <= |x|`
/// gives a second valid bracket used to guard against overflowing limits.
fn solve_resolvent(kind: &GraphKind, ls: f64, x: f64) -> f64 {
    match kind {
        GraphKind::Zero => return x,
        GraphKind::Identity => return x / (1.0 + ls),
        _ => {}
    }

    let mut lo = x - ls * kind.right(x).max(0.0) - 1.0;
    let mut hi = x + ls * (-kind.left(x)).max(0.0) + 1.0;
    if !lo.is_finite() || lo < -x.abs() - 1.0 {
        lo = -x.abs() - 1.0;
    }
    if !hi.is_finite() || hi > x.abs() + 1.0 {
        hi = x.abs() + 1.0;
    }

    let smooth = kind.derivative(0.0).is_some();
    let mut y = 0.5 * (lo + hi);
    for _ in 0..PROX_MAX_ITER {
        let a = y + ls * kind.left(y);
        let b = y + ls * kind.right(y);
        if a <= x && x <= b {
            // x falls in the filled jump interval at y: y is the resolvent.
            return y;
        }
        if a > x {
            hi = y;
        } else {
            lo = y;
        }
        if hi - lo < PROX_TOL {
            break;
        }
        let mut next = 0.5 * (lo + hi);
        if smooth {
            // Guarded Newton step on f(y) = y + ls * gamma0(y) - x.
            let f = y + ls * kind.right(y) - x;
            if let Some(d) = kind.derivative(y) {
                let slope = 1.0 + ls * d;
                if slope.is_finite() && slope > 0.0 {
                    let cand = y - f / slope;
                    if cand > lo && cand < hi {
                        next = cand;
                    }
                }
            }
        }
        y = next;
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
pub(crate) mod test_oracles {
    //! Independent brute-force oracles used to freeze expected values:
    //! a grid + golden-section minimizer and maximizer over an interval.

    pub fn golden_min<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> (f64, f64) {
        // Coarse scan to bracket the global minimum of a (piecewise) convex f.
        let n = 4000;
        let mut best = (lo, f(lo));
        for i in 1..=n {
            let x = lo + (hi - lo) * i as f64 / n as f64;
            let v = f(x);
            if v < best.1 {
                best = (x, v);
            }
        }
        let h = (hi - lo) / n as f64;
        let (mut a, mut b) = ((best.0 - h).max(lo), (best.0 + h).min(hi));
        let phi = 0.5 * (3.0 - 5f64.sqrt());
        for _ in 0..200 {
            let x1 = a + phi * (b - a);
            let x2 = b - phi * (b - a);
            if f(x1) < f(x2) {
                b = x2;
            } else {
                a = x1;
            }
        }
        let x = 0.5 * (a + b);
        (x, f(x))
    }

    pub fn golden_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> (f64, f64) {
        let (x, v) = golden_min(|t| -f(t), lo, hi);
        (x, -v)
    }
}
