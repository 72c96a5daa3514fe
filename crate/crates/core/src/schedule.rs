//! Frequency schedule: one window per `m`, placed far enough out that its
//! analytic lower bound beats the target speed, and steep enough for the
//! next error level.

use serde::Serialize;

use crate::bounds::log_window_bound;
use crate::coefficients::Params;
use crate::error::{Error, Result};
use crate::psi::{PsiSpec, Window};
use crate::quadrature::QuadratureCfg;
use crate::sequence::{ErrorSequence, Index};

#[derive(Debug, Clone, Serialize)]
pub struct Schedule {
    /// `n(1), ..., n(M)`.
    pub n_of_m: Vec<Index>,
    /// `n(M + 1)`, which sets the slope of the last window.
    pub n_next: Index,
    /// `ln L(5m)`.
    pub log_bounds: Vec<f64>,
    /// `ln max(δ_{n(m)}, 0)`.
    pub log_delta: Vec<f64>,
    /// `ln L(5m) - ln max(δ_{n(m)}, 0)`, all `> 0`.
    pub margins: Vec<f64>,
    pub spec: PsiSpec,
}

/// Choose strictly increasing `n(m)` with `L(5m) > max(δ_{n(m)}, 0)` for
/// `m = 1..=M`, and give window `m` (centred at `5m`) the slope
/// `T^{3/2} / ε_{n(m+1)}^{3/2}`.
///
/// Both sequences must already be non-increasing: apply
/// [`ErrorSequence::prefix_min`] to `eps` and [`ErrorSequence::tail_sup`]
/// to `delta` first.
pub fn build_frequency_schedule(
    eps: &ErrorSequence,
    delta: &ErrorSequence,
    p: &Params,
    m_max: usize,
    cfg: &QuadratureCfg,
) -> Result<Schedule> {
    if m_max < 1 {
        return Err(Error::Precondition("M_max must be >= 1".into()));
    }
    if !delta.is_non_increasing() {
        return Err(Error::Precondition("delta must be non-increasing (apply tail_sup)".into()));
    }
    if !eps.is_non_increasing() {
        return Err(Error::Precondition("eps must be non-increasing (apply prefix_min)".into()));
    }
    eps.validate_eps(p.tau)?;

    let mut ns: Vec<Index> = Vec::with_capacity(m_max + 1);
    let mut log_bounds = Vec::with_capacity(m_max + 1);
    let mut log_delta = Vec::with_capacity(m_max + 1);
    for m in 1..=m_max + 1 {
        let ell = log_window_bound(p, m as u64, cfg)?;
        let from = ns.last().map_or(Index::Exact(1), Index::succ);
        let n = delta.first_below(ell, from)?.ok_or(Error::HorizonExhausted { window: m })?;
        log_delta.push(delta.ln_positive(&n)?);
        log_bounds.push(ell);
        ns.push(n);
    }

    let mut windows = Vec::with_capacity(m_max);
    for (m, next) in (1..=m_max).zip(&ns[1..]) {
        let ln_eps = eps.ln_positive(next).map_err(|_| Error::HorizonExhausted { window: m + 1 })?;
        windows.push(Window::from_ln_eps(5.0 * m as f64, ln_eps, p.t_end));
    }
    let n_next = ns.pop().expect("m_max + 1 entries");
    log_bounds.pop();
    log_delta.pop();
    let margins = log_bounds.iter().zip(&log_delta).map(|(l, d)| l - d).collect();
    Ok(Schedule { n_of_m: ns, n_next, log_bounds, log_delta, margins, spec: PsiSpec::new(windows)? })
}

/// `ln c` for `c = max{1, max_{n <= n0} max(δ_n, 0) / e_n}`, where
/// `log_e(n) = ln e_n` is any positive lower bound on the achievable error.
pub fn scaling_constant<F>(delta: &ErrorSequence, n0: u64, log_e: F) -> Result<f64>
where
    F: Fn(u64) -> Result<f64>,
{
    let mut best = 0.0_f64;
    for n in 1..=n0 {
        let ld = delta.ln_positive(&Index::Exact(n))?;
        if ld == f64::NEG_INFINITY {
            continue;
        }
        let le = log_e(n)?;
        if !le.is_finite() {
            return Err(Error::Precondition(format!("e_lower({n}) must be > 0")));
        }
        best = best.max(ld - le);
    }
    Ok(best)
}
