//! The smooth bounded coefficient functions `f` and `g`.
//!
//! `f` is the convolution of the piecewise-linear ramp
//!
//! ```text
//! F(x) = 4τ          x <= -τ
//!        2τ - 2x     -τ < x < τ
//!        0           x >= τ
//! ```
//!
//! with the normalised bump `ρ(t) = exp(-1/(ε² - t²)) / μ` on `(-ε, ε)`.
//! `g` is a smooth step from 0 (left of `τ₁`) to 4 (right of `τ₂`) built
//! from `h(x) = exp(-1/x)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, breakpoints, GaussLegendre, QuadratureCfg};
use crate::special::{flat_exp, logistic_neg, softplus};

#[cfg(test)]
const RHO_EXP_FLOOR: f64 = -700.0;
/// Nodes of the cumulative-mass table on `[-ε, 0]`.
const MASS_TABLE_NODES: usize = 4096;

/// All scalar model constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    #[serde(rename = "T")]
    pub t_end: f64,
    pub tau: f64,
    pub eps: f64,
    pub tau1: f64,
    pub tau2: f64,
    /// Normaliser of the bump, `∫ exp(-1/(ε² - t²)) dt` over `(-ε, ε)`.
    /// Underflows to zero once `ε` drops below about 0.04; `ln_mu_norm`
    /// stays finite.
    pub mu_norm: f64,
    pub ln_mu_norm: f64,
    /// `∫_0^{τ₁} f(s)² ds`.
    pub alpha: f64,
    pub quad_tol: f64,
}

fn check(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParams(what.to_string()))
    }
}

/// `τ (1 - 2^{-1/3})`, the largest admissible bump half-width.
pub fn eps_ceiling(tau: f64) -> f64 {
    tau * (1.0 - 2f64.powf(-1.0 / 3.0))
}

impl Params {
    /// Ordering constraints that do not involve `μ` or `α`.
    pub fn validate_geometry(&self) -> Result<()> {
        check(self.t_end > 0.0, "T > 0")?;
        check(self.tau > 0.0, "tau > 0")?;
        check(self.tau < self.t_end, "tau < T")?;
        check(self.eps > 0.0, "eps > 0")?;
        check(self.eps < self.t_end - self.tau, "eps < T - tau")?;
        check(self.eps < eps_ceiling(self.tau), "eps < tau*(1-2^(-1/3))")?;
        check(self.tau1 == self.tau + self.eps, "tau1 = tau + eps")?;
        check(self.tau1 < self.tau2, "tau1 < tau2")?;
        check(self.tau2 < self.t_end, "tau2 < T")?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_geometry()?;
        check(self.ln_mu_norm.is_finite(), "mu_norm > 0")?;
        check(self.alpha >= self.alpha_floor(), "alpha >= 2*tau^3/3")?;
        check(self.quad_tol > 0.0, "quad_tol > 0")?;
        Ok(())
    }

    /// `2τ³/3`.
    pub fn alpha_floor(&self) -> f64 {
        2.0 * self.tau.powi(3) / 3.0
    }
}

/// `∫_{-ε}^{ε} exp(-1/(ε² - t²)) dt`.
pub fn mu_norm(eps: f64, cfg: &QuadratureCfg) -> Result<f64> {
    Ok(ln_mu_norm(eps, cfg)?.exp())
}

/// `ln μ`, computed with the peak factor `exp(-1/ε²)` pulled out.
pub fn ln_mu_norm(eps: f64, cfg: &QuadratureCfg) -> Result<f64> {
    Ok(ln_scaled_mass(eps, cfg)? - 1.0 / (eps * eps))
}

/// `ln μ + 1/ε²`, the log mass of the bump rescaled to peak value 1.
fn ln_scaled_mass(eps: f64, cfg: &QuadratureCfg) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParams("eps > 0".into()));
    }
    let half = quadrature::integrate(|t| bump_scaled(t, eps), &[-eps, 0.0], cfg)?;
    Ok((2.0 * half).ln())
}

/// `-1/(ε² - t²) + 1/ε²`, accurate near the centre for any `ε`.
#[inline]
fn scaled_exponent(t: f64, eps: f64) -> f64 {
    -(t * t) / (eps * eps * (eps - t) * (eps + t))
}

/// `exp(-1/(ε² - t²) + 1/ε²)`, equal to 1 at the centre.
#[inline]
fn bump_scaled(t: f64, eps: f64) -> f64 {
    if t.abs() >= eps {
        return 0.0;
    }
    scaled_exponent(t, eps).exp()
}

#[cfg(test)]
fn bump_exponent(t: f64, eps: f64) -> f64 {
    -1.0 / ((eps - t) * (eps + t))
}

#[cfg(test)]
fn bump_unnormalized(t: f64, eps: f64) -> f64 {
    if t.abs() >= eps {
        return 0.0;
    }
    let e = bump_exponent(t, eps);
    if e < RHO_EXP_FLOOR {
        0.0
    } else {
        e.exp()
    }
}

/// Evaluators for `f`, `f'`, `g`, `g'` at fixed parameters.
#[derive(Debug, Clone)]
pub struct Coefficients {
    params: Params,
    cfg: QuadratureCfg,
    /// Cumulative bump mass at uniform nodes on `[-ε, 0]`, normalised so
    /// the last entry is exactly 1/2.
    mass: Vec<f64>,
    /// `ln μ + 1/ε²`; `ρ(t) = exp(scaled_exponent(t) - ln_scaled_mass)`.
    ln_scaled_mass: f64,
    /// Bump density at the same nodes, on the same normalisation.
    density: Vec<f64>,
    step: f64,
}

impl Coefficients {
    /// Derive all constants from `(T, τ)` and the two placement fractions:
    /// `ε = eps_frac · min{T-τ, τ(1-2^{-1/3})}` and
    /// `τ₂ = τ₁ + tau2_frac · (T - τ₁)`.
    pub fn build(t_end: f64, tau: f64, eps_frac: f64, tau2_frac: f64, cfg: &QuadratureCfg) -> Result<Self> {
        check(t_end > 0.0, "T > 0")?;
        check(tau > 0.0, "tau > 0")?;
        check(tau < t_end, "tau < T")?;
        check(eps_frac > 0.0 && eps_frac < 1.0, "0 < eps_frac < 1")?;
        check(tau2_frac > 0.0 && tau2_frac < 1.0, "0 < tau2_frac < 1")?;
        cfg.validate()?;
        let eps = eps_frac * (t_end - tau).min(eps_ceiling(tau));
        let tau1 = tau + eps;
        let tau2 = tau1 + tau2_frac * (t_end - tau1);
        let mut params = Params {
            t_end,
            tau,
            eps,
            tau1,
            tau2,
            mu_norm: f64::NAN,
            ln_mu_norm: f64::NAN,
            alpha: f64::NAN,
            quad_tol: cfg.tol,
        };
        params.validate_geometry()?;
        params.ln_mu_norm = ln_mu_norm(eps, cfg)?;
        params.mu_norm = params.ln_mu_norm.exp();
        let mut coeffs = Self::with_mu(params, *cfg)?;
        coeffs.params.alpha = coeffs.compute_alpha()?;
        coeffs.params.validate()?;
        Ok(coeffs)
    }

    /// Rebuild evaluators from a complete, previously derived `Params`.
    pub fn new(params: Params, cfg: &QuadratureCfg) -> Result<Self> {
        params.validate()?;
        cfg.validate()?;
        Self::with_mu(params, *cfg)
    }

    /// Same as [`Coefficients::build`] with the default 4/5 placement.
    pub fn default_preset() -> Result<Self> {
        Self::build(1.5, 0.75, 0.8, 0.8, &QuadratureCfg::default())
    }

    fn with_mu(params: Params, cfg: QuadratureCfg) -> Result<Self> {
        let eps = params.eps;
        let n = MASS_TABLE_NODES;
        let step = eps / (n - 1) as f64;
        let rule = GaussLegendre::cached(16);
        let raw = |t: f64| bump_scaled(t, eps);
        let mut mass = Vec::with_capacity(n);
        let mut acc = 0.0_f64;
        let mut comp = 0.0_f64;
        mass.push(0.0);
        for i in 1..n {
            let a = -eps + (i - 1) as f64 * step;
            let b = if i == n - 1 { 0.0 } else { -eps + i as f64 * step };
            let piece = rule.integrate(&raw, a, b);
            let y = piece - comp;
            let t = acc + y;
            comp = (t - acc) - y;
            acc = t;
            mass.push(acc);
        }
        let norm = 0.5 / acc;
        for m in mass.iter_mut() {
            *m *= norm;
        }
        *mass.last_mut().expect("non-empty table") = 0.5;
        let density = (0..n)
            .map(|i| {
                let t = if i == n - 1 { 0.0 } else { -eps + i as f64 * step };
                raw(t) * norm
            })
            .collect();
        let ln_scaled_mass = ln_scaled_mass(eps, &cfg)?;
        Ok(Self { params, cfg, mass, ln_scaled_mass, density, step })
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn quadrature(&self) -> &QuadratureCfg {
        &self.cfg
    }

    /// Normalised bump `ρ`.
    pub fn rho(&self, t: f64) -> f64 {
        let eps = self.params.eps;
        if t.abs() >= eps {
            return 0.0;
        }
        (scaled_exponent(t, eps) - self.ln_scaled_mass).exp()
    }

    /// The ramp `F`.
    pub fn ramp(&self, x: f64) -> f64 {
        let tau = self.params.tau;
        if x <= -tau {
            4.0 * tau
        } else if x < tau {
            2.0 * tau - 2.0 * x
        } else {
            0.0
        }
    }

    /// Cumulative bump mass `R(s) = ∫_{-ε}^{s} ρ`, from the table.
    pub fn cumulative_mass(&self, s: f64) -> f64 {
        let eps = self.params.eps;
        if s <= -eps {
            0.0
        } else if s >= eps {
            1.0
        } else if s > 0.0 {
            1.0 - self.half_mass(-s)
        } else {
            self.half_mass(s)
        }
    }

    fn half_mass(&self, s: f64) -> f64 {
        let pos = (s + self.params.eps) / self.step;
        let last = self.mass.len() - 1;
        let i = (pos.floor() as usize).min(last - 1);
        let u = (pos - i as f64).clamp(0.0, 1.0);
        let (y0, y1) = (self.mass[i], self.mass[i + 1]);
        let (m0, m1) = (self.density[i] * self.step, self.density[i + 1] * self.step);
        let u2 = u * u;
        let u3 = u2 * u;
        let v = (2.0 * u3 - 3.0 * u2 + 1.0) * y0
            + (u3 - 2.0 * u2 + u) * m0
            + (-2.0 * u3 + 3.0 * u2) * y1
            + (u3 - u2) * m1;
        v.clamp(y0, y1)
    }

    /// `f(x) = ∫ ρ(t) F(x - t) dt`.
    pub fn f(&self, x: f64) -> Result<f64> {
        let Params { tau, eps, tau1, .. } = self.params;
        if x >= tau1 {
            return Ok(0.0);
        }
        if x <= -tau - eps {
            return Ok(4.0 * tau);
        }
        if x.abs() <= tau - eps {
            return Ok(2.0 * tau - 2.0 * x);
        }
        let lo = (x - tau).max(-eps);
        let pts = breakpoints(lo, eps, &[x + tau, 0.0]);
        let mut cfg = self.cfg;
        if lo > 0.0 {
            // Only the bump's tail contributes; exp(e) carries a relative
            // rounding error of about |e| ulp, so the target is capped there.
            let e = (scaled_exponent(lo, eps) - self.ln_scaled_mass).abs().min(745.0);
            cfg.tol = cfg.tol.max(8.0 * f64::EPSILON * e);
        }
        // F(x - t) written around the kinks so that 2τ - 2(x - t) does not
        // cancel when x is close to τ.
        let (d_lo, d_hi) = (x - tau, x + tau);
        let ramp = |t: f64| {
            if t <= d_lo {
                0.0
            } else if t >= d_hi {
                4.0 * tau
            } else {
                2.0 * (t - d_lo)
            }
        };
        // Rounding can leave the sum a few ulp outside [0, 4τ].
        let v = quadrature::integrate(|t| self.rho(t) * ramp(t), &pts, &cfg)?;
        Ok(v.clamp(0.0, 4.0 * tau))
    }

    /// `f'(x) = -2 ∫_{x-τ}^{x+τ} ρ(t) dt`.
    pub fn f_prime(&self, x: f64) -> f64 {
        let Params { tau, eps, .. } = self.params;
        let hi = (x + tau).min(eps);
        let lo = (x - tau).max(-eps);
        if hi <= lo {
            return 0.0;
        }
        if lo <= -eps && hi >= eps {
            return -2.0;
        }
        -2.0 * (self.cumulative_mass(hi) - self.cumulative_mass(lo))
    }

    /// `ln f(x)`, usable where `f(x)` itself underflows (just left of `τ₁`).
    pub fn ln_f(&self, x: f64) -> Result<f64> {
        let Params { tau, eps, tau1, .. } = self.params;
        if x >= tau1 {
            return Ok(f64::NEG_INFINITY);
        }
        let direct = self.f(x)?;
        if direct > 1e-280 || x + tau < eps || x - tau <= -eps {
            return Ok(direct.ln());
        }
        Ok(self.ln_f_tail(x))
    }

    /// Log-domain integral for `τ-ε < x < τ₁`, where `F(x - t) = 2(t - (x - τ))`
    /// on the whole support `(x - τ, ε)`. Geometric panels toward `x - τ`.
    pub(crate) fn ln_f_tail(&self, x: f64) -> f64 {
        let Params { tau, eps, .. } = self.params;
        let lo = (x - tau).max(-eps);
        let width = eps - lo;
        let ln_integrand = |t: f64| {
            let gap = t - (x - tau);
            if gap <= 0.0 || t >= eps {
                return f64::NEG_INFINITY;
            }
            scaled_exponent(t, eps) + (2.0 * gap).ln()
        };
        let rule = GaussLegendre::cached(32);
        let mut terms = Vec::with_capacity(100);
        let levels = 90;
        for k in 0..levels {
            let a = lo + width * 0.5f64.powi(k + 1);
            let b = lo + width * 0.5f64.powi(k);
            terms.push(rule.integrate_log(&ln_integrand, a, b));
        }
        let tail = lo + width * 0.5f64.powi(levels);
        terms.push(rule.integrate_log(&ln_integrand, lo, tail));
        crate::special::log_sum_exp(&terms) - self.ln_scaled_mass
    }

    /// `g(x) = 4 h(x-τ₁) / (h(x-τ₁) + h(τ₂-x))`.
    pub fn g(&self, x: f64) -> f64 {
        let Params { tau1, tau2, .. } = self.params;
        if x <= tau1 {
            return 0.0;
        }
        if x >= tau2 {
            return 4.0;
        }
        4.0 * logistic_neg(self.g_logit(x))
    }

    /// `1/(x-τ₁) - 1/(τ₂-x)`; `g = 4 / (1 + e^{logit})`.
    fn g_logit(&self, x: f64) -> f64 {
        let Params { tau1, tau2, .. } = self.params;
        1.0 / (x - tau1) - 1.0 / (tau2 - x)
    }

    pub fn g_prime(&self, x: f64) -> f64 {
        let Params { tau1, tau2, .. } = self.params;
        if x <= tau1 || x >= tau2 {
            return 0.0;
        }
        let d = self.g_logit(x);
        let (u, v) = (x - tau1, tau2 - x);
        4.0 * logistic_neg(d) * logistic_neg(-d) * (1.0 / (u * u) + 1.0 / (v * v))
    }

    /// `ln g'(x)`; finite exactly on `(τ₁, τ₂)`.
    pub fn ln_g_prime(&self, x: f64) -> f64 {
        let Params { tau1, tau2, .. } = self.params;
        if x <= tau1 || x >= tau2 {
            return f64::NEG_INFINITY;
        }
        let d = self.g_logit(x);
        let (u, v) = (x - tau1, tau2 - x);
        4f64.ln() - softplus(d) - softplus(-d) + (1.0 / (u * u) + 1.0 / (v * v)).ln()
    }

    /// The direct closed form of `g`, without the logistic rewrite.
    /// Kept for cross-checks away from the underflow region.
    pub fn g_direct(&self, x: f64) -> f64 {
        let Params { tau1, tau2, .. } = self.params;
        let a = flat_exp(x - tau1);
        let b = flat_exp(tau2 - x);
        4.0 * a / (a + b)
    }

    /// `∫_0^{τ₁} f(s)² ds`: exact on `[0, τ-ε]` where `f` is linear, and
    /// by quadrature on `[τ-ε, τ₁]`.
    pub fn compute_alpha(&self) -> Result<f64> {
        self.compute_alpha_with(&self.cfg)
    }

    pub fn compute_alpha_with(&self, cfg: &QuadratureCfg) -> Result<f64> {
        let Params { tau, eps, tau1, .. } = self.params;
        let closed = alpha_linear_part(tau, eps);
        let inner = Coefficients { cfg: *cfg, ..self.clone() };
        let err = std::cell::RefCell::new(None);
        let curved = quadrature::integrate(
            |s| match inner.f(s) {
                Ok(v) => v * v,
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            },
            &[tau - eps, tau, tau1],
            cfg,
        );
        let curved = match err.into_inner() {
            Some(e) => return Err(e),
            None => curved?,
        };
        let alpha = closed + curved;
        let bound = 2.0 * tau.powi(3) / 3.0;
        if alpha < bound {
            return Err(Error::AlphaTooSmall { alpha, bound });
        }
        Ok(alpha)
    }
}

/// `∫_0^{τ-ε} (2τ - 2s)² ds = ((2τ)³ - (2ε)³) / 6`.
pub fn alpha_linear_part(tau: f64, eps: f64) -> f64 {
    ((2.0 * tau).powi(3) - (2.0 * eps).powi(3)) / 6.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn model() -> &'static Coefficients {
        static M: OnceLock<Coefficients> = OnceLock::new();
        M.get_or_init(|| Coefficients::default_preset().unwrap())
    }

    #[test]
    fn rejects_tau_not_below_t() {
        let err = Coefficients::build(1.0, 1.0, 0.5, 0.5, &QuadratureCfg::default()).unwrap_err();
        assert_eq!(err, Error::InvalidParams("tau < T".into()));
        assert!(err.to_string().contains("tau < T violated"));
    }

    #[test]
    fn tau_close_to_t_is_still_valid() {
        let m = Coefficients::build(1.0, 0.99, 0.5, 0.5, &QuadratureCfg::default()).unwrap();
        let p = m.params();
        assert!(p.tau1 < p.tau2 && p.tau2 < p.t_end);
        assert_eq!(p.mu_norm, 0.0);
        assert!(p.ln_mu_norm.is_finite());
        assert_eq!(m.f_prime(0.0), -2.0);
        assert!((m.f_prime(p.tau) + 1.0).abs() < 1e-12);
        assert!(p.alpha >= p.alpha_floor());
    }

    #[test]
    fn invalid_fractions_are_rejected() {
        let cfg = QuadratureCfg::default();
        assert!(Coefficients::build(1.5, 0.75, 1.0, 0.5, &cfg).is_err());
        assert!(Coefficients::build(1.5, 0.75, 0.5, 0.0, &cfg).is_err());
        assert!(Coefficients::build(-1.0, 0.75, 0.5, 0.5, &cfg).is_err());
    }

    #[test]
    fn mu_is_even_split() {
        let cfg = QuadratureCfg::default();
        let eps = model().params().eps;
        let full = quadrature::integrate(|t| bump_unnormalized(t, eps), &[-eps, 0.0, eps], &cfg).unwrap();
        let mu = mu_norm(eps, &cfg).unwrap();
        assert!((full - mu).abs() <= 1e-12 * mu);
        assert!(mu_norm(0.0, &cfg).is_err());
    }

    #[test]
    fn f_short_circuits() {
        let m = model();
        let p = *m.params();
        assert_eq!(m.f(p.tau1).unwrap(), 0.0);
        assert_eq!(m.f(10.0).unwrap(), 0.0);
        assert_eq!(m.f(0.0).unwrap(), 2.0 * p.tau);
        assert_eq!(m.f(-p.tau - p.eps).unwrap(), 4.0 * p.tau);
        assert_eq!(m.f(0.3).unwrap(), 2.0 * p.tau - 0.6);
    }

    #[test]
    fn f_prime_landmarks() {
        let m = model();
        let p = *m.params();
        assert_eq!(m.f_prime(0.0), -2.0);
        assert_eq!(m.f_prime(p.tau), -1.0);
        assert_eq!(m.f_prime(p.tau1 + p.eps), 0.0);
        assert_eq!(m.f_prime(-p.tau), -1.0);
    }

    #[test]
    fn g_landmarks() {
        let m = model();
        let p = *m.params();
        assert_eq!(m.g(p.tau1), 0.0);
        assert_eq!(m.g(p.tau2), 4.0);
        assert!((m.g(0.5 * (p.tau1 + p.tau2)) - 2.0).abs() < 1e-12);
        let x = p.tau1 + 0.3 * (p.tau2 - p.tau1);
        assert!((m.g(x) - m.g_direct(x)).abs() < 1e-13);
    }

    #[test]
    fn ln_f_matches_direct_where_representable() {
        let m = model();
        let p = *m.params();
        for &d in &[0.2, 0.05, 0.02, 0.01, 0.008] {
            let x = p.tau1 - d;
            let direct = m.f(x).unwrap();
            assert!(direct > 0.0);
            let lf = m.ln_f_tail(x);
            assert!((lf - direct.ln()).abs() < 1e-8 * direct.ln().abs(), "{d}");
        }
        assert!(m.ln_f(p.tau1 - 1e-3).unwrap().is_finite());
        assert!(m.ln_f(p.tau1 - 1e-6).unwrap().is_finite());
    }

    #[test]
    fn ln_g_prime_matches_direct() {
        let m = model();
        let p = *m.params();
        for k in 1..20 {
            let x = p.tau1 + k as f64 / 20.0 * (p.tau2 - p.tau1);
            let gp = m.g_prime(x);
            assert!((m.ln_g_prime(x) - gp.ln()).abs() < 1e-10 * gp.ln().abs().max(1.0));
        }
        assert!(m.ln_g_prime(p.tau1 + 1e-4).is_finite());
    }

    #[test]
    fn alpha_closed_piece() {
        let p = model().params();
        let closed = alpha_linear_part(p.tau, p.eps);
        assert!((closed - 0.559_971_360_895_677).abs() < 1e-12);
    }
}
