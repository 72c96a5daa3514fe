//! Reference implementations that share no code with the library: plain
//! adaptive Simpson on the raw definitions, and frozen high-precision values.
#![allow(dead_code, clippy::excessive_precision, clippy::too_many_arguments)]

/// Default preset `(T, τ, ε, τ₁, τ₂)` from first principles.
pub fn preset() -> (f64, f64, f64, f64, f64) {
    let (t, tau) = (1.5_f64, 0.75_f64);
    let eps = 0.8 * (t - tau).min(tau * (1.0 - 2f64.powf(-1.0 / 3.0)));
    let tau1 = tau + eps;
    (t, tau, eps, tau1, tau1 + 0.8 * (t - tau1))
}

/// Frozen values from 30-digit panelled quadrature of the definitions; the
/// Gaussian windows use the erfc closed form at 40 digits.
pub mod frozen {
    pub const EPS: f64 = 0.123779684409540157574;
    pub const TAU1: f64 = 0.873779684409540157574;
    pub const TAU2: f64 = 1.37475593688190803151;
    pub const MU_NORM: f64 = 1.2117101025411594378e-30;
    pub const F_AT_TAU: f64 = 0.00848560490815007246;
    pub const F_AT_TAU_MINUS_HALF_EPS: f64 = 0.12377968440956711583;
    pub const F_AT_0_8: f64 = 5.1077333793036093e-10;
    pub const ALPHA_LINEAR: f64 = 0.559971360895676965913;
    pub const ALPHA: f64 = 0.562501781207977646;
    pub const PREFACTOR: f64 = 0.05011515333162139534;
    pub const SIN_WEIGHT: f64 = 0.22011123593471466107;
    /// `(c, log10 window, log10 bound, ln bound)`.
    pub const BOUNDS: [(f64, f64, f64, f64); 4] = [
        (2.0, -5.79481087509843896, -7.75219959925650224, -17.8500992351624369),
        (5.0, -24.6505495178044685, -26.6079382419625318, -61.2670419512491207),
        (10.0, -86.6946452221751863, -88.6520339463332496, -204.128851828429040),
        (15.0, -187.233156062775525, -189.190544786933589, -435.627328161815642),
    ];
    /// `log10` of the scaling constant for `δ_n = 1/ln(n+1)`, `n0 = 1`.
    pub const LOG10_SCALING_N0_1: f64 = 26.7671127809173934;
    /// `μ` at `ε = 1`.
    pub const MU_EPS_ONE: f64 = 0.443993816168079437823;
    /// `α` from [`super::simpson_alpha`] at `tol = 1e-15`, frozen once.
    pub const ALPHA_SIMPSON: f64 = 0.56250178120797767;
}

fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let h = b - a;
    let left = h / 12.0 * (fa + 4.0 * flm + fm);
    let right = h / 12.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson with Richardson correction, absolute tolerance.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(&f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Simpson over `panels` equal pieces of `[a, b]`.
pub fn simpson_panels<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, tol: f64) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = if i + 1 == panels { b } else { lo + h };
            simpson(&f, lo, hi, tol / panels as f64)
        })
        .sum()
}

/// `exp(-1/(ε² - t²) + 1/ε²)`: the bump scaled to 1 at the centre.
pub fn bump_scaled(t: f64, eps: f64) -> f64 {
    if t.abs() >= eps {
        0.0
    } else {
        (-1.0 / (eps * eps - t * t) + 1.0 / (eps * eps)).exp()
    }
}

/// Reference `f` by direct Simpson on `∫ ρ(t) F(x - t) dt`.
pub struct RefModel {
    pub tau: f64,
    pub eps: f64,
    pub scaled_mass: f64,
    pub tol: f64,
}

impl RefModel {
    pub fn new(tau: f64, eps: f64, tol: f64) -> Self {
        let scaled_mass = simpson_panels(|t| bump_scaled(t, eps), -eps, eps, 32, tol);
        Self { tau, eps, scaled_mass, tol }
    }

    pub fn mu_norm(&self) -> f64 {
        self.scaled_mass * (-1.0 / (self.eps * self.eps)).exp()
    }

    pub fn f(&self, x: f64) -> f64 {
        let (tau, eps) = (self.tau, self.eps);
        let u = x - tau;
        if u <= -eps {
            return 2.0 * (tau - x);
        }
        if u >= eps {
            return 0.0;
        }
        if u > 0.0 {
            let v = simpson_panels(|t| (t - u) * bump_scaled(t, eps), u, eps, 16, self.tol);
            return 2.0 * v / self.scaled_mass;
        }
        let v = simpson_panels(|t| (u - t) * bump_scaled(t, eps), -eps, u, 16, self.tol);
        2.0 * (tau - x) + 2.0 * v / self.scaled_mass
    }

    /// `f'(x) = -2 ∫_{x-τ}^{x+τ} ρ`; on the transition only the lower end matters.
    pub fn f_prime(&self, x: f64) -> f64 {
        let u = x - self.tau;
        if u <= -self.eps {
            return -2.0;
        }
        if u >= self.eps {
            return 0.0;
        }
        let tail = simpson_panels(|t| bump_scaled(t, self.eps), u, self.eps, 16, self.tol);
        -2.0 * tail / self.scaled_mass
    }
}

/// `α = ∫_0^T f²` with the linear part in closed form.
pub fn simpson_alpha(tol: f64) -> f64 {
    let (_, tau, eps, _, _) = preset();
    let m = RefModel::new(tau, eps, tol);
    let linear = ((2.0 * tau).powi(3) - (2.0 * eps).powi(3)) / 6.0;
    linear + simpson_panels(|s| m.f(s).powi(2), tau - eps, tau + eps, 16, tol)
}

/// Reference `log10` of the Gaussian window by Simpson in scaled form.
pub fn log10_gauss_window(c: f64, alpha: f64) -> f64 {
    let lo = c + 0.5;
    // ∫ e^{-x²/α} = e^{-lo²/α} ∫ e^{-(x² - lo²)/α}
    let scaled = simpson(|x| (-(x * x - lo * lo) / alpha).exp(), lo, c + 1.0, 1e-15);
    (-(lo * lo) / alpha + scaled.ln()) / std::f64::consts::LN_10
}
