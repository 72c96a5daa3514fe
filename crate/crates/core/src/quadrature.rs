//! Gauss–Legendre panels with adaptive bisection.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureCfg {
    /// Gauss–Legendre nodes per panel.
    pub node_count: usize,
    /// Relative tolerance.
    pub tol: f64,
    /// Maximum number of panels before giving up.
    pub max_panels: usize,
}

impl Default for QuadratureCfg {
    fn default() -> Self {
        Self { node_count: 64, tol: 1e-13, max_panels: 4000 }
    }
}

impl QuadratureCfg {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.node_count < 8 {
            return Err(Error::InvalidQuadrature(format!("node_count {} < 8", self.node_count)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidQuadrature(format!("tol {} must be > 0", self.tol)));
        }
        Ok(())
    }
}

/// Nodes and weights of an n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Shared, lazily built rule.
    pub fn cached(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        guard.entry(n).or_insert_with(|| Arc::new(GaussLegendre::new(n))).clone()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(mid + half * x);
        }
        s * half
    }

    /// Log-domain panel: `ln ∫_a^b exp(g(t)) dt`.
    pub fn integrate_log<F: Fn(f64) -> f64>(&self, g: &F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let terms: Vec<f64> =
            self.nodes.iter().zip(&self.weights).map(|(x, w)| w.ln() + g(mid + half * x)).collect();
        crate::special::log_sum_exp(&terms) + half.ln()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Adaptive Gauss–Legendre integral of `f` over the panels delimited by
/// `breaks` (sorted, at least two points).
///
/// Globally adaptive: the panel with the largest error estimate (difference
/// between the whole-panel rule and the sum over its two halves) is bisected
/// until the summed error is below `tol · Σ|panel estimates|`, or the panel
/// budget runs out.
pub fn integrate<F: Fn(f64) -> f64>(f: F, breaks: &[f64], cfg: &QuadratureCfg) -> Result<f64> {
    cfg.validate()?;
    let rule = GaussLegendre::cached(cfg.node_count);
    let mut heap: BinaryHeap<Panel> =
        breaks.windows(2).filter(|w| w[1] > w[0]).map(|w| Panel::new(&f, &rule, w[0], w[1])).collect();
    let mut scale: f64 = heap.iter().map(|p| p.abs_value).sum();
    let mut total_err: f64 = heap.iter().map(|p| p.err).sum();
    // Rounding floor so the loop cannot chase noise.
    let tol = cfg.tol.max(64.0 * f64::EPSILON);
    let mut count = heap.len();
    while total_err > tol * scale && scale > 0.0 {
        let p = heap.pop().expect("at least one panel");
        let m = 0.5 * (p.a + p.b);
        if count >= cfg.max_panels || m <= p.a || m >= p.b {
            heap.push(p);
            return Err(Error::QuadratureFailed {
                estimate: compensated_value(heap.iter()),
                error: total_err,
            });
        }
        let l = Panel::new(&f, &rule, p.a, m);
        let r = Panel::new(&f, &rule, m, p.b);
        scale += l.abs_value + r.abs_value - p.abs_value;
        total_err += l.err + r.err - p.err;
        // Re-sum occasionally so cancellation in the running totals cannot drift.
        heap.push(l);
        heap.push(r);
        count += 1;
        if count.is_multiple_of(64) {
            scale = heap.iter().map(|p| p.abs_value).sum();
            total_err = heap.iter().map(|p| p.err).sum();
        }
    }
    Ok(compensated_value(heap.iter()))
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    abs_value: f64,
    err: f64,
}

impl Panel {
    fn new<F: Fn(f64) -> f64>(f: &F, rule: &GaussLegendre, a: f64, b: f64) -> Self {
        let m = 0.5 * (a + b);
        let whole = rule.integrate(f, a, b);
        let left = rule.integrate(f, a, m);
        let right = rule.integrate(f, m, b);
        let value = left + right;
        let abs_value = rule.integrate(&|x| f(x).abs(), a, b);
        Self { a, b, value, abs_value, err: (value - whole).abs() }
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err).is_eq()
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn compensated_value<'a>(panels: impl Iterator<Item = &'a Panel>) -> f64 {
    crate::stats::compensated_sum(panels.map(|p| p.value))
}

/// Sorted, deduplicated break points of `[lo, hi]` including any interior
/// points from `extra`.
pub fn breakpoints(lo: f64, hi: f64, extra: &[f64]) -> Vec<f64> {
    let mut pts = vec![lo, hi];
    pts.extend(extra.iter().copied().filter(|&p| p > lo && p < hi));
    pts.sort_by(|a, b| a.partial_cmp(b).expect("NaN break point"));
    pts.dedup();
    pts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(8);
        // degree 15 is exact for 8 nodes
        let v = rule.integrate(&|x: f64| x.powi(14) + x.powi(15), -1.0, 1.0);
        assert!((v - 2.0 / 15.0).abs() < 1e-14);
        let wsum: f64 = rule.weights.iter().sum();
        assert!((wsum - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_kinks_at_breaks() {
        let cfg = QuadratureCfg::default();
        let v = integrate(|x: f64| x.abs(), &[-1.0, 0.0, 2.0], &cfg).unwrap();
        assert!((v - 2.5).abs() < 1e-14);
    }

    #[test]
    fn panel_budget_exhaustion_is_an_error() {
        let cfg = QuadratureCfg { node_count: 8, tol: 1e-15, max_panels: 2 };
        let err = integrate(|x: f64| (1.0 / x).sin(), &[1e-4, 1.0], &cfg).unwrap_err();
        assert!(matches!(err, Error::QuadratureFailed { .. }));
    }

    #[test]
    fn rejects_too_few_nodes() {
        let cfg = QuadratureCfg { node_count: 4, ..QuadratureCfg::default() };
        assert!(integrate(|x| x, &[0.0, 1.0], &cfg).is_err());
    }

    #[test]
    fn log_panel_matches_linear_panel() {
        let rule = GaussLegendre::new(32);
        let lin = rule.integrate(&|x: f64| (-x * x).exp(), 0.0, 1.0);
        let lg = rule.integrate_log(&|x: f64| -x * x, 0.0, 1.0);
        assert!((lg.exp() - lin).abs() < 1e-15);
    }
}
