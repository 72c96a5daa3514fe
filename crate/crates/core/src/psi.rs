//! The chirp `ψ`: linear with a steep slope on disjoint windows
//! `[c_m - 2, c_m + 2]`, glued smoothly across the gaps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::flat_exp;

/// Half-width of every window.
pub const WINDOW_HALF_WIDTH: f64 = 2.0;

/// `S(u) = h(u) / (h(u) + h(1-u))`: 0 for `u <= 0`, 1 for `u >= 1`, smooth
/// and non-decreasing in between.
pub fn smoothstep(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let a = flat_exp(u);
    let b = flat_exp(1.0 - u);
    a / (a + b)
}

/// One linear piece `ψ(x) = freq · (x - center)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub center: f64,
    /// May be `+inf` when the slope exceeds the double range.
    pub freq: f64,
    /// `ln freq`; may be `+inf` when even the logarithm overflows.
    pub log_freq: f64,
}

impl Window {
    /// Window with slope `T^{3/2} / ε^{3/2}`.
    pub fn from_eps(center: f64, eps: f64, t_end: f64) -> Self {
        let ratio = t_end / eps;
        Self { center, freq: ratio.powf(1.5), log_freq: 1.5 * ratio.ln() }
    }

    /// Same, given `ln ε`, for levels below the double range.
    pub fn from_ln_eps(center: f64, ln_eps: f64, t_end: f64) -> Self {
        if ln_eps > -700.0 {
            return Self::from_eps(center, ln_eps.exp(), t_end);
        }
        let log_freq = 1.5 * (t_end.ln() - ln_eps);
        Self { center, freq: log_freq.exp(), log_freq }
    }

    /// Window with a given slope.
    pub fn with_freq(center: f64, freq: f64) -> Self {
        Self { center, freq, log_freq: freq.ln() }
    }

    /// The linear chirp continued to all of ℝ.
    #[inline]
    pub fn chirp(&self, x: f64) -> f64 {
        let d = x - self.center;
        if d == 0.0 {
            0.0
        } else {
            self.freq * d
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        (x - self.center).abs() <= WINDOW_HALF_WIDTH
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiSpec {
    pub windows: Vec<Window>,
    /// Minimum gap between consecutive windows; the blend spans the whole gap.
    pub glue_width: f64,
}

impl PsiSpec {
    /// `ψ ≡ 0`.
    pub fn zero() -> Self {
        Self { windows: Vec::new(), glue_width: 1.0 }
    }

    pub fn new(windows: Vec<Window>) -> Result<Self> {
        let spec = Self { windows, glue_width: 1.0 };
        spec.validate()?;
        Ok(spec)
    }

    /// A single window at `c` with slope `T^{3/2} / ε^{3/2}`.
    pub fn single_chirp(c: f64, eps: f64, t_end: f64) -> Result<Self> {
        if !(c >= 2.0) || !c.is_finite() {
            return Err(Error::InvalidChirp(format!("center {c} must be >= 2")));
        }
        if !(eps > 0.0) || !(t_end > 0.0) {
            return Err(Error::InvalidChirp(format!("eps {eps} and T {t_end} must be > 0")));
        }
        Self::new(vec![Window::from_eps(c, eps, t_end)])
    }

    pub fn validate(&self) -> Result<()> {
        for w in &self.windows {
            if !w.center.is_finite() {
                return Err(Error::InvalidChirp("non-finite center".into()));
            }
            if !(w.freq > 0.0) || w.log_freq.is_nan() {
                return Err(Error::InvalidChirp(format!("freq {} must be > 0", w.freq)));
            }
        }
        for pair in self.windows.windows(2) {
            let gap = (pair[1].center - WINDOW_HALF_WIDTH) - (pair[0].center + WINDOW_HALF_WIDTH);
            if !(gap >= self.glue_width) {
                return Err(Error::InvalidChirp(format!(
                    "windows at {} and {} leave a gap {gap} < {}",
                    pair[0].center, pair[1].center, self.glue_width
                )));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.windows.is_empty()
    }

    /// `ψ(x)`: exact chirp inside windows, smoothstep blend of the two
    /// neighbouring chirps inside gaps, boundary chirps continued outside.
    pub fn eval(&self, x: f64) -> f64 {
        let ws = &self.windows;
        if ws.is_empty() {
            return 0.0;
        }
        // First window whose right edge is at or beyond x.
        let k = ws.partition_point(|w| w.center + WINDOW_HALF_WIDTH < x);
        if k == ws.len() {
            return ws[k - 1].chirp(x);
        }
        let right = &ws[k];
        if k == 0 || right.contains(x) {
            return right.chirp(x);
        }
        let left = &ws[k - 1];
        let lo = left.center + WINDOW_HALF_WIDTH;
        let hi = right.center - WINDOW_HALF_WIDTH;
        let s = smoothstep((x - lo) / (hi - lo));
        (1.0 - s) * left.chirp(x) + s * right.chirp(x)
    }

    /// `cos ψ(x)`.
    pub fn cos_eval(&self, x: f64) -> f64 {
        self.eval(x).cos()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothstep_landmarks() {
        assert_eq!(smoothstep(0.0), 0.0);
        assert_eq!(smoothstep(1.0), 1.0);
        assert_eq!(smoothstep(0.5), 0.5);
        assert_eq!(smoothstep(-3.0), 0.0);
        assert_eq!(smoothstep(7.0), 1.0);
    }

    #[test]
    fn single_chirp_slope() {
        let s = PsiSpec::single_chirp(5.0, 0.375, 1.5).unwrap();
        assert_eq!(s.windows[0].freq, 8.0);
        assert_eq!(s.eval(6.0), 8.0);
        assert_eq!(s.eval(5.0), 0.0);
        assert_eq!(s.eval(7.0), 16.0);
        assert_eq!(s.eval(3.0), -16.0);
    }

    #[test]
    fn rejects_small_center() {
        assert!(PsiSpec::single_chirp(1.5, 0.375, 1.5).is_err());
        assert!(PsiSpec::single_chirp(5.0, 0.0, 1.5).is_err());
    }

    #[test]
    fn overlapping_windows_rejected() {
        let w = |c| Window { center: c, freq: 1.0, log_freq: 0.0 };
        assert!(PsiSpec::new(vec![w(5.0), w(9.0)]).is_err());
        assert!(PsiSpec::new(vec![w(5.0), w(10.0)]).is_ok());
    }

    #[test]
    fn gap_midpoint_is_average() {
        let w1 = Window { center: 5.0, freq: 3.0, log_freq: 3f64.ln() };
        let w2 = Window { center: 10.0, freq: 7.0, log_freq: 7f64.ln() };
        let s = PsiSpec::new(vec![w1, w2]).unwrap();
        let x = 7.5;
        assert_eq!(s.eval(x), 0.5 * (w1.chirp(x) + w2.chirp(x)));
        assert_eq!(s.eval(12.0), 14.0);
        assert_eq!(s.eval(7.0), 6.0);
        assert_eq!(s.eval(8.0), -14.0);
        assert_eq!(s.eval(0.0), -15.0);
        assert_eq!(s.eval(20.0), 70.0);
    }

    #[test]
    fn zero_spec() {
        let s = PsiSpec::zero();
        assert_eq!(s.eval(3.3), 0.0);
        assert_eq!(s.cos_eval(-1.0), 1.0);
    }

    #[test]
    fn infinite_slope_is_zero_at_center() {
        let w = Window::from_ln_eps(5.0, -1e6, 1.5);
        assert_eq!(w.freq, f64::INFINITY);
        assert_eq!(w.chirp(5.0), 0.0);
    }
}
