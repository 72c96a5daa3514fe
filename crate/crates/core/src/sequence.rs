//! Error sequences `(ε_n)` and target speeds `(δ_n)`, indices that may be
//! far beyond `u64`, and the transforms applied before building a schedule.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest horizon that may be expanded into an explicit list.
pub const MATERIALIZE_LIMIT: u64 = 10_000_000;

/// A positive integer index, stored exactly while it fits and by its
/// logarithm (or iterated logarithm) once it does not.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Index {
    Exact(u64),
    /// `ln n`.
    Log(f64),
    /// `ln ln n`.
    LogLog(f64),
}

impl Index {
    /// `ln n`, possibly `+inf`.
    pub fn ln(&self) -> f64 {
        match *self {
            Index::Exact(n) => (n as f64).ln(),
            Index::Log(x) => x,
            Index::LogLog(y) => y.exp(),
        }
    }

    /// `ln ln n`; `-inf` for `n = 1`.
    pub fn ln_ln(&self) -> f64 {
        match *self {
            Index::LogLog(y) => y,
            _ => self.ln().ln(),
        }
    }

    /// `log10 n`, possibly `+inf`.
    pub fn log10(&self) -> f64 {
        self.ln() / std::f64::consts::LN_10
    }

    pub fn exact(&self) -> Option<u64> {
        match *self {
            Index::Exact(n) => Some(n),
            _ => None,
        }
    }

    /// The next index. Beyond `u64` this moves to the next representable
    /// logarithm, which is strictly larger but not literally `n + 1`.
    pub fn succ(&self) -> Index {
        match *self {
            Index::Exact(n) if n < u64::MAX => Index::Exact(n + 1),
            Index::Exact(n) => Index::Log((n as f64).ln().next_up()),
            Index::Log(x) if x.next_up().is_finite() => Index::Log(x.next_up()),
            Index::Log(x) => Index::LogLog(x.ln().next_up()),
            Index::LogLog(y) => Index::LogLog(y.next_up()),
        }
    }

    /// Index with `ln n = x`, kept exact when that is possible.
    pub fn from_ln(x: f64) -> Index {
        if x < 43.0 {
            Index::Exact(x.exp().ceil().max(1.0) as u64)
        } else if x.is_finite() {
            Index::Log(x)
        } else {
            Index::LogLog(f64::INFINITY)
        }
    }

    /// Index with `ln ln n = y`.
    pub fn from_ln_ln(y: f64) -> Index {
        if y < 700.0 {
            Index::from_ln(y.exp())
        } else {
            Index::LogLog(y)
        }
    }
}

impl PartialOrd for Index {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Index::Exact(a), Index::Exact(b)) => Some(a.cmp(b)),
            (Index::Log(a), Index::Log(b)) => a.partial_cmp(b),
            (Index::LogLog(a), Index::LogLog(b)) => a.partial_cmp(b),
            (Index::Exact(_), _) if !matches!(other, Index::Exact(_)) => {
                // Log/LogLog are only produced above u64 range.
                match self.ln().partial_cmp(&other.ln()) {
                    Some(Ordering::Equal) => Some(Ordering::Less),
                    o => o,
                }
            }
            _ => self.ln_ln().partial_cmp(&other.ln_ln()),
        }
    }
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Index::Exact(n) => write!(f, "{n}"),
            Index::Log(x) => write!(f, "exp({x:e})"),
            Index::LogLog(y) => write!(f, "exp(exp({y:e}))"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SequenceKind {
    /// `values[n-1]` for `n = 1..=len`.
    Explicit { values: Vec<f64> },
    /// `κ n^{-p}`.
    PowerLaw { kappa: f64, p: f64 },
    /// `1 / ln(n + 1)`.
    LogDecay,
    /// `inner_n / (n + 1)`.
    EvalAdjusted { inner: Box<ErrorSequence> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSequence {
    pub kind: SequenceKind,
    /// Last admissible index; `None` for an unbounded parametric family.
    pub horizon: Option<u64>,
}

impl ErrorSequence {
    pub fn explicit(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSequence("empty list".into()));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidSequence("NaN entry".into()));
        }
        let horizon = Some(values.len() as u64);
        Ok(Self { kind: SequenceKind::Explicit { values }, horizon })
    }

    pub fn power_law(kappa: f64, p: f64, horizon: Option<u64>) -> Result<Self> {
        if !kappa.is_finite() || !p.is_finite() {
            return Err(Error::InvalidSequence("non-finite power-law parameter".into()));
        }
        Self::parametric(SequenceKind::PowerLaw { kappa, p }, horizon)
    }

    pub fn log_decay(horizon: Option<u64>) -> Result<Self> {
        Self::parametric(SequenceKind::LogDecay, horizon)
    }

    fn parametric(kind: SequenceKind, horizon: Option<u64>) -> Result<Self> {
        if horizon == Some(0) {
            return Err(Error::InvalidSequence("horizon must be >= 1".into()));
        }
        Ok(Self { kind, horizon })
    }

    /// `ε_n`, `n >= 1`.
    pub fn value(&self, n: u64) -> Result<f64> {
        self.check_index(&Index::Exact(n))?;
        Ok(match &self.kind {
            SequenceKind::Explicit { values } => values[(n - 1) as usize],
            SequenceKind::PowerLaw { kappa, p } => kappa * (n as f64).powf(-p),
            SequenceKind::LogDecay => 1.0 / ((n as f64).ln_1p()),
            SequenceKind::EvalAdjusted { inner } => inner.value(n)? / (n as f64 + 1.0),
        })
    }

    /// `ln max(ε_n, 0)` at a possibly huge index (`-inf` for `ε_n <= 0`).
    pub fn ln_positive(&self, n: &Index) -> Result<f64> {
        self.check_index(n)?;
        if let Index::Exact(k) = *n {
            let v = self.value(k)?;
            return Ok(if v > 0.0 { v.ln() } else { f64::NEG_INFINITY });
        }
        Ok(match &self.kind {
            SequenceKind::Explicit { .. } => unreachable!("explicit horizons are exact"),
            SequenceKind::PowerLaw { kappa, p } => {
                if *kappa <= 0.0 {
                    f64::NEG_INFINITY
                } else if *p == 0.0 {
                    kappa.ln()
                } else {
                    kappa.ln() - p * n.ln()
                }
            }
            // ln(n + 1) = ln n to double precision once n exceeds u64.
            SequenceKind::LogDecay => -n.ln_ln(),
            SequenceKind::EvalAdjusted { inner } => inner.ln_positive(n)? - n.ln(),
        })
    }

    fn check_index(&self, n: &Index) -> Result<()> {
        if let Index::Exact(0) = n {
            return Err(Error::InvalidSequence("indices start at 1".into()));
        }
        if let Some(h) = self.horizon {
            if *n > Index::Exact(h) {
                return Err(Error::InvalidSequence(format!("index {n} beyond horizon {h}")));
            }
        }
        Ok(())
    }

    /// Known non-increasing over the whole horizon.
    pub fn is_non_increasing(&self) -> bool {
        match &self.kind {
            SequenceKind::Explicit { values } => values.windows(2).all(|w| w[1] <= w[0]),
            SequenceKind::PowerLaw { kappa, p } => *p == 0.0 || (*kappa >= 0.0) == (*p > 0.0),
            SequenceKind::LogDecay => true,
            SequenceKind::EvalAdjusted { inner } => inner.is_non_increasing() && inner.is_nonnegative(),
        }
    }

    fn is_nonnegative(&self) -> bool {
        match &self.kind {
            SequenceKind::Explicit { values } => values.iter().all(|v| *v >= 0.0),
            SequenceKind::PowerLaw { kappa, .. } => *kappa >= 0.0,
            SequenceKind::LogDecay => true,
            SequenceKind::EvalAdjusted { inner } => inner.is_nonnegative(),
        }
    }

    /// Admissible as an error sequence: every value in `(0, τ]`.
    pub fn validate_eps(&self, tau: f64) -> Result<()> {
        let in_range = |v: f64| v > 0.0 && v <= tau;
        let ok = match &self.kind {
            SequenceKind::Explicit { values } => values.iter().all(|&v| in_range(v)),
            SequenceKind::PowerLaw { kappa, p } => {
                // The supremum is at n = 1 for p >= 0 and at the horizon otherwise.
                let top =
                    if *p >= 0.0 { Some(*kappa) } else { self.horizon.map(|h| kappa * (h as f64).powf(-p)) };
                *kappa > 0.0 && top.is_some_and(|t| t <= tau)
            }
            SequenceKind::LogDecay => 1.0 / 2f64.ln() <= tau,
            SequenceKind::EvalAdjusted { inner } => {
                // inner_n / (n + 1) <= inner_n, so inner's range check suffices
                // for the upper end.
                return inner.validate_eps(tau);
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSequence(format!("values must lie in (0, {tau}]")))
        }
    }

    fn materialize(&self) -> Result<Vec<f64>> {
        match self.horizon {
            Some(h) if h <= MATERIALIZE_LIMIT => (1..=h).map(|n| self.value(n)).collect(),
            _ => Err(Error::HorizonRequired),
        }
    }

    /// `min{ε_1, ..., ε_n}`.
    pub fn prefix_min(&self) -> Result<Self> {
        if self.is_non_increasing() {
            return Ok(self.clone());
        }
        if let SequenceKind::PowerLaw { kappa, .. } = self.kind {
            // Increasing power law: the running minimum is the first value.
            return Self::power_law(kappa, 0.0, self.horizon);
        }
        let mut v = self.materialize()?;
        for i in 1..v.len() {
            v[i] = v[i].min(v[i - 1]);
        }
        Self::explicit(v)
    }

    /// `sup{δ_n, δ_{n+1}, ...}` over the horizon.
    pub fn tail_sup(&self) -> Result<Self> {
        if self.is_non_increasing() {
            return Ok(self.clone());
        }
        let mut v = self.materialize()?;
        for i in (0..v.len().saturating_sub(1)).rev() {
            v[i] = v[i].max(v[i + 1]);
        }
        Self::explicit(v)
    }

    /// `ε_n / (n + 1)`: the error budget once the `n`-th method may spend
    /// `n` evaluations.
    pub fn adjust_for_evaluations(&self) -> Self {
        Self { kind: SequenceKind::EvalAdjusted { inner: Box::new(self.clone()) }, horizon: self.horizon }
    }

    /// Smallest `n >= from` with `ln max(ε_n, 0) < ln_threshold`, for a
    /// non-increasing sequence. Linear search for lists, closed-form
    /// inversion for the parametric families.
    pub fn first_below(&self, ln_threshold: f64, from: Index) -> Result<Option<Index>> {
        let beyond = |n: &Index| self.horizon.is_some_and(|h| *n > Index::Exact(h));
        if beyond(&from) {
            return Ok(None);
        }
        let below = |n: &Index| -> Result<bool> { Ok(self.ln_positive(n)? < ln_threshold) };
        if below(&from)? {
            return Ok(Some(from));
        }
        let candidate = match &self.kind {
            SequenceKind::Explicit { values } => {
                let start = from.exact().expect("explicit index") as usize;
                return Ok((start..=values.len())
                    .find(|&n| {
                        let v = values[n - 1];
                        let lv = if v > 0.0 { v.ln() } else { f64::NEG_INFINITY };
                        lv < ln_threshold
                    })
                    .map(|n| Index::Exact(n as u64)));
            }
            SequenceKind::PowerLaw { kappa, p } => {
                if *p <= 0.0 {
                    return Ok(None);
                }
                // κ n^{-p} < e^ℓ  <=>  ln n > (ln κ - ℓ) / p
                let x = (kappa.ln() - ln_threshold) / p;
                Index::from_ln(x * (1.0 + 1e-12) + 1e-300)
            }
            SequenceKind::LogDecay => {
                // 1 / ln(n + 1) < e^ℓ  <=>  ln(n + 1) > e^{-ℓ}
                let y = -ln_threshold;
                if y < 700.0 {
                    let x = y.exp();
                    if x < 43.0 {
                        Index::Exact((x.exp() - 1.0).floor().max(1.0) as u64)
                    } else {
                        Index::Log(x * (1.0 + 1e-12))
                    }
                } else {
                    Index::LogLog(y + 1e-12 * y)
                }
            }
            SequenceKind::EvalAdjusted { .. } => {
                // No closed form; walk exact indices.
                let start = from.exact().ok_or(Error::HorizonRequired)?;
                let end = self.horizon.unwrap_or(start.saturating_add(MATERIALIZE_LIMIT));
                for n in start..=end {
                    if below(&Index::Exact(n))? {
                        return Ok(Some(Index::Exact(n)));
                    }
                }
                return Ok(None);
            }
        };
        let mut n = if candidate > from { candidate } else { from.succ() };
        // Exact candidates come from a rounded inversion; settle them on the
        // predicate itself.
        if let Index::Exact(mut k) = n {
            while !below(&Index::Exact(k))? {
                if beyond(&Index::Exact(k + 1)) {
                    return Ok(None);
                }
                k += 1;
            }
            let floor = from.exact().unwrap_or(1);
            while k > floor && below(&Index::Exact(k - 1))? {
                k -= 1;
            }
            n = Index::Exact(k);
        }
        if beyond(&n) || !below(&n)? {
            return Ok(None);
        }
        Ok(Some(n))
    }
}
