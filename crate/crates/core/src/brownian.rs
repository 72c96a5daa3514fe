//! Brownian paths on fixed grids, the bridge split on an observation gap
//! `[a, b]`, stochastic integrals of deterministic integrands, and direct
//! Gaussian sampling of the observable and hidden parts of `∫ f dW`.

use serde::Serialize;

use crate::coefficients::Coefficients;
use crate::error::{Error, Result};
use crate::quadrature::{self, breakpoints, QuadratureCfg};
use crate::rng::{normal, stream_rng};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrownianPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub seed: u64,
    pub stream_id: u64,
}

/// `t_k = k · t_end / n` for `k = 0..=n`, with the last node exactly `t_end`.
pub fn uniform_grid(t_end: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 || !(t_end > 0.0) {
        return Err(Error::InvalidGrid(format!("need n >= 1 and T > 0, got n = {n}, T = {t_end}")));
    }
    let dt = t_end / n as f64;
    let mut g: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
    g[n] = t_end;
    Ok(g)
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    match grid.first() {
        Some(&0.0) => {}
        _ => return Err(Error::InvalidGrid("grid must start at 0".into())),
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Path with independent `N(0, Δt)` increments, drawn sequentially from the
/// stream `(seed, stream_id, 0)`.
pub fn sample_path(grid: &[f64], seed: u64, stream_id: u64) -> Result<BrownianPath> {
    validate_grid(grid)?;
    let mut rng = stream_rng(seed, stream_id, 0);
    let mut values = Vec::with_capacity(grid.len());
    let mut w = 0.0;
    values.push(w);
    for pair in grid.windows(2) {
        w += (pair[1] - pair[0]).sqrt() * normal(&mut rng);
        values.push(w);
    }
    Ok(BrownianPath { times: grid.to_vec(), values, seed, stream_id })
}

impl BrownianPath {
    /// Position of `t` in the grid; `t` must be a node exactly.
    pub fn node(&self, t: f64) -> Result<usize> {
        let i = self.times.partition_point(|&s| s < t);
        if i < self.times.len() && self.times[i] == t {
            Ok(i)
        } else {
            Err(Error::OffGrid(t))
        }
    }

    pub fn at(&self, t: f64) -> Result<f64> {
        Ok(self.values[self.node(t)?])
    }

    /// `(t, W_t)` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,w\n");
        for (t, w) in self.times.iter().zip(&self.values) {
            out.push_str(&format!("{t:.16e},{w:.16e}\n"));
        }
        out
    }
}

/// `W` on `[a, b]` split as `W̄ + B`, with `W̄` the chord through
/// `(a, W_a)` and `(b, W_b)`.
#[derive(Debug, Clone, Serialize)]
pub struct BridgeView {
    pub a: f64,
    pub b: f64,
    pub times: Vec<f64>,
    pub wbar: Vec<f64>,
    pub bridge: Vec<f64>,
}

pub fn bridge_decompose(path: &BrownianPath, a: f64, b: f64) -> Result<BridgeView> {
    if !(0.0 <= a && a < b) {
        return Err(Error::Precondition(format!("need 0 <= a < b, got a = {a}, b = {b}")));
    }
    let ia = path.node(a)?;
    let ib = path.node(b)?;
    let (wa, wb) = (path.values[ia], path.values[ib]);
    let times = path.times[ia..=ib].to_vec();
    let mut wbar = Vec::with_capacity(times.len());
    let mut bridge = Vec::with_capacity(times.len());
    for (k, &s) in times.iter().enumerate() {
        let wb_s = ((s - a) * wb + (b - s) * wa) / (b - a);
        wbar.push(wb_s);
        bridge.push(path.values[ia + k] - wb_s);
    }
    // Pin the endpoints; the chord reproduces them only up to rounding.
    let last = times.len() - 1;
    wbar[0] = wa;
    wbar[last] = wb;
    bridge[0] = 0.0;
    bridge[last] = 0.0;
    Ok(BridgeView { a, b, times, wbar, bridge })
}

impl BridgeView {
    /// `-∫_a^b f'(s) B_s ds` by the trapezoid rule on the grid.
    pub fn hidden_integral<G: Fn(f64) -> f64>(&self, f_prime: G) -> f64 {
        -trapezoid(&self.times, |k| f_prime(self.times[k]) * self.bridge[k])
    }
}

fn trapezoid<H: Fn(usize) -> f64>(times: &[f64], h: H) -> f64 {
    let mut acc = 0.0;
    let mut prev = h(0);
    for k in 1..times.len() {
        let cur = h(k);
        acc += 0.5 * (prev + cur) * (times[k] - times[k - 1]);
        prev = cur;
    }
    acc
}

fn node_range(path: &BrownianPath, t1: f64, t2: f64) -> Result<Option<(usize, usize)>> {
    if t1 >= t2 {
        return Ok(None);
    }
    Ok(Some((path.node(t1)?, path.node(t2)?)))
}

/// `Σ f(t_k) (W_{t_{k+1}} - W_{t_k})` over `t1 <= t_k < t2`.
pub fn ito_integral_leftpoint<F: Fn(f64) -> f64>(f: F, path: &BrownianPath, t1: f64, t2: f64) -> Result<f64> {
    let Some((i1, i2)) = node_range(path, t1, t2)? else {
        return Ok(0.0);
    };
    Ok((i1..i2).map(|k| f(path.times[k]) * (path.values[k + 1] - path.values[k])).sum())
}

/// `f(t2) W_{t2} - f(t1) W_{t1} - ∫_{t1}^{t2} f'(s) W_s ds`, the last term
/// by the trapezoid rule.
pub fn ito_integral_pathwise<F, G>(f: F, f_prime: G, path: &BrownianPath, t1: f64, t2: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let Some((i1, i2)) = node_range(path, t1, t2)? else {
        return Ok(0.0);
    };
    let times = &path.times[i1..=i2];
    let vals = &path.values[i1..=i2];
    let boundary = f(t2) * vals[vals.len() - 1] - f(t1) * vals[0];
    Ok(boundary - trapezoid(times, |k| f_prime(times[k]) * vals[k]))
}

/// `∫∫_{[a,b]²} f'(s) f'(u) K(s, u) ds du` with the bridge covariance
/// `K(s, u) = (b - max(s,u)) (min(s,u) - a) / (b - a)`, for an arbitrary
/// `f'`. The bracket `[(b-a)³/12, (b-a)³/3]` is not checked here.
///
/// By symmetry the square folds to `2/(b-a) ∫_a^b f'(s)(b-s) G(s) ds` with
/// `G(s) = ∫_a^s f'(u)(u-a) du`.
pub fn bridge_quadratic_form<G: Fn(f64) -> f64>(
    f_prime: G,
    a: f64,
    b: f64,
    kinks: &[f64],
    cfg: &QuadratureCfg,
) -> Result<f64> {
    let outer_breaks = breakpoints(a, b, kinks);
    let inner_err = std::cell::RefCell::new(None);
    let inner = |s: f64| {
        let br = breakpoints(a, s, kinks);
        if br.len() < 2 || s <= a {
            return 0.0;
        }
        match quadrature::integrate(|u| f_prime(u) * (u - a), &br, cfg) {
            Ok(v) => v,
            Err(e) => {
                inner_err.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let outer = quadrature::integrate(|s| f_prime(s) * (b - s) * inner(s), &outer_breaks, cfg);
    if let Some(e) = inner_err.into_inner() {
        return Err(e);
    }
    Ok(2.0 / (b - a) * outer?)
}

/// Variance of the hidden part `Y₂ = -∫_a^b f'(s) B_s ds`.
pub fn sigma2_quadrature(coeffs: &Coefficients, a: f64, b: f64, cfg: &QuadratureCfg) -> Result<f64> {
    let p = coeffs.params();
    check_gap(a, b, p.tau)?;
    let kinks = [p.tau - p.eps, p.tau, p.tau + p.eps];
    let v = bridge_quadratic_form(|s| coeffs.f_prime(s), a, b, &kinks, cfg)?;
    let (lo, hi) = sigma2_bracket(a, b);
    // Allow the bracket edges to be hit up to quadrature rounding.
    let slack = 1e-10 * hi;
    if !(v >= lo - slack && v <= hi + slack) {
        return Err(Error::VarianceOutOfRange { name: "sigma2", value: v, lo, hi });
    }
    Ok(v.clamp(lo, hi))
}

/// `[(b-a)³/12, (b-a)³/3]`.
pub fn sigma2_bracket(a: f64, b: f64) -> (f64, f64) {
    let l3 = (b - a).powi(3);
    (l3 / 12.0, l3 / 3.0)
}

fn check_gap(a: f64, b: f64, tau: f64) -> Result<()> {
    if !(0.0 <= a && a < b && b <= tau) {
        return Err(Error::Precondition(format!("need 0 <= a < b <= tau, got a = {a}, b = {b}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YPairSample {
    pub y1: f64,
    pub y2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
}

/// Independent `Y₁ ~ N(0, σ₁)`, `Y₂ ~ N(0, σ₂)` with `σ₁ + σ₂ = α`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct YPairSampler {
    pub a: f64,
    pub b: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    sd1: f64,
    sd2: f64,
}

impl YPairSampler {
    pub fn new(coeffs: &Coefficients, a: f64, b: f64, cfg: &QuadratureCfg) -> Result<Self> {
        let alpha = coeffs.params().alpha;
        let sigma2 = sigma2_quadrature(coeffs, a, b, cfg)?;
        let sigma1 = alpha - sigma2;
        if !(sigma1 >= 0.5 * alpha && sigma1 <= alpha) {
            return Err(Error::VarianceOutOfRange {
                name: "sigma1",
                value: sigma1,
                lo: 0.5 * alpha,
                hi: alpha,
            });
        }
        Ok(Self { a, b, sigma1, sigma2, sd1: sigma1.sqrt(), sd2: sigma2.sqrt() })
    }

    pub fn draw(&self, seed: u64, stream_id: u64, index: u64) -> YPairSample {
        let mut rng = stream_rng(seed, stream_id, index);
        self.draw_from(&mut rng)
    }

    pub fn draw_from<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> YPairSample {
        let y1 = self.sd1 * normal(rng);
        let y2 = self.sd2 * normal(rng);
        YPairSample { y1, y2, sigma1: self.sigma1, sigma2: self.sigma2 }
    }

    /// One `Y₂` draw alone.
    pub fn draw_hidden<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sd2 * normal(rng)
    }

    /// One `Y₁` draw alone.
    pub fn draw_observed<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sd1 * normal(rng)
    }
}

pub fn sample_y_pair(
    coeffs: &Coefficients,
    a: f64,
    b: f64,
    seed: u64,
    stream_id: u64,
    cfg: &QuadratureCfg,
) -> Result<YPairSample> {
    Ok(YPairSampler::new(coeffs, a, b, cfg)?.draw(seed, stream_id, 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_grid() {
        let p = sample_path(&[0.0], 1, 2).unwrap();
        assert_eq!(p.values, vec![0.0]);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(sample_path(&[0.0, 0.5, 0.5], 1, 0).is_err());
        assert!(sample_path(&[0.1, 0.5], 1, 0).is_err());
        assert!(sample_path(&[], 1, 0).is_err());
    }

    #[test]
    fn bridge_pins_endpoints() {
        let g = uniform_grid(1.0, 64).unwrap();
        let p = sample_path(&g, 5, 0).unwrap();
        let v = bridge_decompose(&p, 0.25, 0.75).unwrap();
        assert_eq!(v.bridge[0], 0.0);
        assert_eq!(*v.bridge.last().unwrap(), 0.0);
        assert!(bridge_decompose(&p, 0.25, 0.3).is_err());
    }

    #[test]
    fn constant_integrand() {
        let g = uniform_grid(1.0, 100).unwrap();
        let p = sample_path(&g, 9, 4).unwrap();
        let (t1, t2) = (g[10], g[90]);
        let want = p.at(t2).unwrap() - p.at(t1).unwrap();
        let lp = ito_integral_leftpoint(|_| 1.0, &p, t1, t2).unwrap();
        let pw = ito_integral_pathwise(|_| 1.0, |_| 0.0, &p, t1, t2).unwrap();
        assert!((lp - want).abs() < 1e-14);
        assert_eq!(pw, want);
        assert_eq!(ito_integral_leftpoint(|_| 1.0, &p, t1, t1).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_form_of_constants() {
        let cfg = QuadratureCfg::default();
        let (a, b) = (0.1, 0.6);
        let (lo, hi) = sigma2_bracket(a, b);
        let v1 = bridge_quadratic_form(|_| -1.0, a, b, &[], &cfg).unwrap();
        let v2 = bridge_quadratic_form(|_| -2.0, a, b, &[], &cfg).unwrap();
        assert!((v1 - lo).abs() < 1e-15);
        assert!((v2 - hi).abs() < 1e-15);
    }
}
