//! Monte Carlo estimates of how well `X²_T` can be predicted when `W` is
//! hidden on `(a, b)`: the symmetric two-point bound and the conditional
//! median error.

use rayon::prelude::*;
use serde::Serialize;

use crate::brownian::YPairSampler;
use crate::dynamics::TerminalMap;
use crate::error::{Error, Result};
use crate::psi::PsiSpec;
use crate::rng::stream_rng;
use crate::stats::Estimate;

/// `½ E|z_T(cos ψ(Y₁ + Y₂)) - z_T(cos ψ(Y₁ - Y₂))|`, sample `i` drawn from
/// stream `i`.
pub fn two_point_lower_estimate(
    map: &TerminalMap,
    spec: &PsiSpec,
    sampler: &YPairSampler,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    if samples == 0 {
        return Err(Error::Precondition("samples must be >= 1".into()));
    }
    if spec.is_zero() {
        return Ok(Estimate { mean: 0.0, std_error: 0.0, samples });
    }
    let vals: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let s = sampler.draw(seed, i, 0);
            let up = map.eval(spec.cos_eval(s.y1 + s.y2));
            let down = map.eval(spec.cos_eval(s.y1 - s.y2));
            0.5 * (up - down).abs()
        })
        .collect();
    Ok(Estimate::from_samples(&vals))
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimalPredictorReport {
    pub outer: usize,
    pub inner: usize,
    /// Mean absolute deviation about the conditional median, inner size `inner`.
    pub at_inner: Estimate,
    /// Same, inner size `2·inner`; the primary estimate.
    pub at_double_inner: Estimate,
}

impl OptimalPredictorReport {
    /// Change between the two inner sizes, a gauge of nested-sampling bias.
    pub fn inner_bias(&self) -> f64 {
        self.at_double_inner.mean - self.at_inner.mean
    }
}

/// For each outer draw of `Y₁` (stream `o`), draw `2·inner` hidden `Y₂`,
/// evaluate `z_T(cos ψ(Y₁ + Y₂))`, and measure the mean absolute deviation
/// about the sample median, using the first `inner` draws and all of them.
pub fn optimal_predictor_error(
    map: &TerminalMap,
    spec: &PsiSpec,
    sampler: &YPairSampler,
    outer: usize,
    inner: usize,
    seed: u64,
) -> Result<OptimalPredictorReport> {
    if outer == 0 || inner == 0 {
        return Err(Error::Precondition("outer and inner must be >= 1".into()));
    }
    let pairs: Vec<(f64, f64)> = (0..outer as u64)
        .into_par_iter()
        .map(|o| {
            let mut rng = stream_rng(seed, o, 0);
            let y1 = sampler.draw_observed(&mut rng);
            let vals: Vec<f64> =
                (0..2 * inner).map(|_| map.eval(spec.cos_eval(y1 + sampler.draw_hidden(&mut rng)))).collect();
            (median_abs_deviation(&vals[..inner]), median_abs_deviation(&vals))
        })
        .collect();
    let (small, large): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok(OptimalPredictorReport {
        outer,
        inner,
        at_inner: Estimate::from_samples(&small),
        at_double_inner: Estimate::from_samples(&large),
    })
}

/// `mean |v - median(v)|`.
fn median_abs_deviation(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let med = if n % 2 == 1 { s[n / 2] } else { 0.5 * (s[n / 2 - 1] + s[n / 2]) };
    crate::stats::compensated_sum(s.iter().map(|x| (x - med).abs())) / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mad_of_small_sets() {
        assert_eq!(median_abs_deviation(&[1.0, 2.0, 3.0]), 2.0 / 3.0);
        assert_eq!(median_abs_deviation(&[5.0, 5.0]), 0.0);
    }
}
