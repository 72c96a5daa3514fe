//! Closed-form lower bound for a single steep window, and the measure of
//! the set where a fast sine stays away from zero.

use std::f64::consts::{LN_10, PI};

use serde::Serialize;

use crate::coefficients::Params;
use crate::error::{Error, Result};
use crate::quadrature::{self, QuadratureCfg};
use crate::special::ln_gauss_window;

/// Linear values are only reported above this.
pub const LINEAR_FLOOR: f64 = 1e-300;

/// Factors of the bound
/// `√3 (T - τ₂) / (π √(T³ α)) · ∫_{c+1/2}^{c+1} e^{-x²/α} dx · ∫_0^1 |sin y| e^{-6y²/T³} dy`.
#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundReport {
    pub c_center: f64,
    pub log_prefactor: f64,
    pub log_gauss_window: f64,
    pub sin_weight: f64,
    pub log_bound: f64,
    pub log10_bound: f64,
    pub log10_gauss_window: f64,
    /// `exp(log_bound)` when above [`LINEAR_FLOOR`].
    pub bound: Option<f64>,
    /// Direct quadrature of the Gaussian window, when representable.
    pub gauss_window_quadrature: Option<f64>,
}

/// `ln[√3 (T - τ₂) / (π √(T³ α))]`.
pub fn log_prefactor(p: &Params) -> f64 {
    0.5 * 3f64.ln() + (p.t_end - p.tau2).ln() - PI.ln() - 0.5 * (3.0 * p.t_end.ln() + p.alpha.ln())
}

/// `∫_0^1 |sin y| e^{-6y²/T³} dy`.
pub fn sin_weight(t_end: f64, cfg: &QuadratureCfg) -> Result<f64> {
    let k = 6.0 / t_end.powi(3);
    quadrature::integrate(|y: f64| y.sin().abs() * (-k * y * y).exp(), &[0.0, 1.0], cfg)
}

/// `ln ∫_{c+1/2}^{c+1} e^{-x²/α} dx`.
pub fn log_gauss_window(c: f64, alpha: f64) -> f64 {
    ln_gauss_window(c + 0.5, c + 1.0, alpha)
}

pub fn lower_bound(p: &Params, c_center: f64, cfg: &QuadratureCfg) -> Result<LowerBoundReport> {
    if !(c_center >= 2.0) {
        return Err(Error::InvalidChirp(format!("center {c_center} must be >= 2")));
    }
    let log_pre = log_prefactor(p);
    let log_win = log_gauss_window(c_center, p.alpha);
    let sw = sin_weight(p.t_end, cfg)?;
    let log_bound = log_pre + log_win + sw.ln();
    let window_quad = if log_win > LINEAR_FLOOR.ln() {
        let a = p.alpha;
        Some(quadrature::integrate(|x: f64| (-x * x / a).exp(), &[c_center + 0.5, c_center + 1.0], cfg)?)
    } else {
        None
    };
    Ok(LowerBoundReport {
        c_center,
        log_prefactor: log_pre,
        log_gauss_window: log_win,
        sin_weight: sw,
        log_bound,
        log10_bound: log_bound / LN_10,
        log10_gauss_window: log_win / LN_10,
        bound: (log_bound > LINEAR_FLOOR.ln()).then(|| log_bound.exp()),
        gauss_window_quadrature: window_quad,
    })
}

/// `ln L(5m)` for window `m`.
pub fn log_window_bound(p: &Params, m: u64, cfg: &QuadratureCfg) -> Result<f64> {
    Ok(lower_bound(p, 5.0 * m as f64, cfg)?.log_bound)
}

/// Lebesgue measure of `{x ∈ [c-1, c+1] : |sin((x-c)/β)| >= 1/2}`, from
/// the bands `[π/6 + kπ, 5π/6 + kπ]`. Independent of `c`.
pub fn sin_measure(_c: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Precondition(format!("beta = {beta} not in (0, 1)")));
    }
    // By symmetry, twice the measure over y ∈ [0, 1/β], scaled back by β.
    let y_max = 1.0 / beta;
    let periods = (y_max / PI).floor();
    let rest = y_max - periods * PI;
    let per_period = 2.0 * PI / 3.0;
    let partial = (rest - PI / 6.0).clamp(0.0, per_period);
    Ok(2.0 * beta * (periods * per_period + partial))
}

/// Grid estimate of [`sin_measure`]: sample the indicator's defining
/// function at `grid_n + 1` nodes and, in cells where it changes sign,
/// place the crossing by linear interpolation.
pub fn sin_measure_grid(c: f64, beta: f64, grid_n: usize) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Precondition(format!("beta = {beta} not in (0, 1)")));
    }
    if grid_n < 1 {
        return Err(Error::InvalidGrid("grid_n must be >= 1".into()));
    }
    let h = 2.0 / grid_n as f64;
    let level = |i: usize| {
        let x = (c - 1.0) + i as f64 * h;
        ((x - c) / beta).sin().abs() - 0.5
    };
    let mut total = 0.0;
    let mut v0 = level(0);
    for i in 1..=grid_n {
        let v1 = level(i);
        total += match (v0 >= 0.0, v1 >= 0.0) {
            (true, true) => h,
            (false, false) => 0.0,
            (true, false) => h * v0 / (v0 - v1),
            (false, true) => h * v1 / (v1 - v0),
        };
        v0 = v1;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sin_measure_closed_form_example() {
        let m = sin_measure(0.0, 0.5).unwrap();
        assert!((m - 2.0 * (1.0 - PI / 12.0)).abs() < 1e-15);
    }

    #[test]
    fn sin_measure_rejects_beta() {
        assert!(sin_measure(0.0, 1.0).is_err());
        assert!(sin_measure(0.0, 0.0).is_err());
    }

    #[test]
    fn sin_measure_grid_close() {
        for &beta in &[0.9, 0.5, 0.1, 0.01, 0.001] {
            let a = sin_measure(3.0, beta).unwrap();
            let b = sin_measure_grid(3.0, beta, 1_000_000).unwrap();
            assert!((a - b).abs() < 2e-6, "{beta}: {a} {b}");
        }
    }
}
