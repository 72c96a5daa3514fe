//! The deterministic `z`-ODE behind the exact solution, the terminal-value
//! oracle, and Euler–Maruyama for the system and its embeddings.
//!
//! State layout follows the embedding: component 0 is the time-like
//! coordinate `Z = c·X²` (drift `c + c g(Z/c)[cos ψ(X¹) + 1]`), component 1
//! is the stochastic integral `X¹` (diffusion `f(Z/c)`), and any further
//! components stay at their initial values.

use rayon::prelude::*;
use serde::Serialize;

use crate::coefficients::Coefficients;
use crate::error::{Error, Result};
use crate::psi::PsiSpec;
use crate::rng::{normal, stream_rng};
use crate::stats::Estimate;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdeCfg {
    pub steps: usize,
}

impl Default for OdeCfg {
    fn default() -> Self {
        Self { steps: 1 << 12 }
    }
}

impl OdeCfg {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 16 {
            return Err(Error::Precondition(format!("ODE steps {} < 16", self.steps)));
        }
        Ok(())
    }
}

/// `z_t(a)` with `z' = 1 + g(z)(a + 1)`, `z(τ₁) = τ₁`, by fixed-step RK4.
pub fn solve_z(coeffs: &Coefficients, a: f64, t_end: f64, cfg: &OdeCfg) -> Result<f64> {
    Ok(*solve_z_path(coeffs, a, t_end, cfg)?.last().expect("at least one node"))
}

/// The RK4 iterates `z_0 = τ₁, ..., z_steps = z_{t_end}`.
pub fn solve_z_path(coeffs: &Coefficients, a: f64, t_end: f64, cfg: &OdeCfg) -> Result<Vec<f64>> {
    cfg.validate()?;
    let p = coeffs.params();
    if !(a >= -1.0) {
        return Err(Error::Precondition(format!("a = {a} must be >= -1")));
    }
    if !(t_end >= p.tau1 && t_end <= p.t_end) {
        return Err(Error::Precondition(format!(
            "t_end = {t_end} must lie in [tau1, T] = [{}, {}]",
            p.tau1, p.t_end
        )));
    }
    let n = cfg.steps;
    let h = (t_end - p.tau1) / n as f64;
    if a == -1.0 {
        // z(t) = t.
        let mut out: Vec<f64> = (0..=n).map(|k| p.tau1 + k as f64 * h).collect();
        out[n] = t_end;
        return Ok(out);
    }
    let k = a + 1.0;
    let rhs = |z: f64| 1.0 + coeffs.g(z) * k;
    let mut z = p.tau1;
    let mut out = Vec::with_capacity(n + 1);
    out.push(z);
    for _ in 0..n {
        let k1 = rhs(z);
        let k2 = rhs(z + 0.5 * h * k1);
        let k3 = rhs(z + 0.5 * h * k2);
        let k4 = rhs(z + h * k3);
        z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out.push(z);
    }
    Ok(out)
}

/// Barycentric interpolant of `a ↦ z_T(a)` on Chebyshev–Lobatto nodes in
/// `[-1, 1]`, for bulk evaluation inside Monte Carlo loops.
#[derive(Debug, Clone)]
pub struct TerminalMap {
    nodes: Vec<f64>,
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl TerminalMap {
    pub const DEFAULT_DEGREE: usize = 64;

    pub fn new(coeffs: &Coefficients, cfg: &OdeCfg, degree: usize) -> Result<Self> {
        if degree < 2 {
            return Err(Error::Precondition("interpolation degree must be >= 2".into()));
        }
        let t_end = coeffs.params().t_end;
        let nodes: Vec<f64> =
            (0..=degree).map(|j| (std::f64::consts::PI * j as f64 / degree as f64).cos()).collect();
        let values =
            nodes.iter().map(|&a| solve_z(coeffs, a.max(-1.0), t_end, cfg)).collect::<Result<Vec<_>>>()?;
        let weights = (0..=degree)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == degree {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();
        Ok(Self { nodes, values, weights })
    }

    pub fn with_defaults(coeffs: &Coefficients) -> Result<Self> {
        Self::new(coeffs, &OdeCfg::default(), Self::DEFAULT_DEGREE)
    }

    /// `z_T(a)` for `a ∈ [-1, 1]`.
    pub fn eval(&self, a: f64) -> f64 {
        let a = a.clamp(-1.0, 1.0);
        let mut num = 0.0;
        let mut den = 0.0;
        for ((&x, &v), &w) in self.nodes.iter().zip(&self.values).zip(&self.weights) {
            let d = a - x;
            if d == 0.0 {
                return v;
            }
            let t = w / d;
            num += t * v;
            den += t;
        }
        num / den
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    /// The integral component `X¹_T`.
    pub x1_t: f64,
    /// The time-like component at `T` (`Z_T` when scaled, offset included).
    pub x2_t: f64,
    pub extra_components: Vec<f64>,
    pub scheme: String,
    pub steps: usize,
    pub seed: Option<u64>,
    pub stream_id: Option<u64>,
    pub scale_c: f64,
    pub xi: Vec<f64>,
}

/// Exact terminal state given `I = ∫_0^{τ₁} f(s) dW_s`.
pub fn oracle_terminal(
    coeffs: &Coefficients,
    spec: &PsiSpec,
    i_value: f64,
    cfg: &OdeCfg,
) -> Result<SimResult> {
    let t_end = coeffs.params().t_end;
    let x2 = solve_z(coeffs, spec.cos_eval(i_value), t_end, cfg)?;
    Ok(SimResult {
        x1_t: i_value,
        x2_t: x2,
        extra_components: Vec::new(),
        scheme: "oracle".into(),
        steps: cfg.steps,
        seed: None,
        stream_id: None,
        scale_c: 1.0,
        xi: vec![0.0, 0.0],
    })
}

/// Embedding options for [`euler_maruyama`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Embedding {
    pub scale_c: f64,
    /// Initial value; its length is the dimension `d >= 2`.
    pub xi: Vec<f64>,
    /// Number of Brownian coordinates; only the first one drives.
    pub m: usize,
}

impl Default for Embedding {
    fn default() -> Self {
        Self { scale_c: 1.0, xi: vec![0.0, 0.0], m: 1 }
    }
}

impl Embedding {
    pub fn validate(&self) -> Result<()> {
        if self.xi.len() < 2 {
            return Err(Error::Precondition("dimension d must be >= 2".into()));
        }
        if self.m < 1 {
            return Err(Error::Precondition("m must be >= 1".into()));
        }
        if !(self.scale_c > 0.0) || !self.scale_c.is_finite() {
            return Err(Error::Precondition(format!("scale_c = {} must be > 0", self.scale_c)));
        }
        Ok(())
    }
}

/// Euler–Maruyama on the uniform grid `k T / steps`, driven by the given
/// Brownian increments (`steps × m`, row-major). `observe(k, x)` sees the
/// state after step `k` (and `k = 0` before the first step).
pub fn euler_maruyama_driven(
    coeffs: &Coefficients,
    spec: &PsiSpec,
    steps: usize,
    emb: &Embedding,
    increments: &[f64],
    mut observe: impl FnMut(usize, &[f64]),
) -> Result<SimResult> {
    emb.validate()?;
    if steps < 1 {
        return Err(Error::Precondition("steps must be >= 1".into()));
    }
    if increments.len() != steps * emb.m {
        return Err(Error::Precondition(format!(
            "expected {} increments, got {}",
            steps * emb.m,
            increments.len()
        )));
    }
    let dt = coeffs.params().t_end / steps as f64;
    let c = emb.scale_c;
    let xi = &emb.xi;
    let mut x = xi.clone();
    observe(0, &x);
    for k in 0..steps {
        let z = (x[0] - xi[0]) / c;
        let v = x[1] - xi[1];
        let gz = coeffs.g(z);
        let drift = if gz == 0.0 { c } else { c + c * gz * (spec.cos_eval(v) + 1.0) };
        let diffusion = coeffs.f(z)?;
        let dw = increments[k * emb.m];
        x[0] += drift * dt;
        if diffusion != 0.0 {
            x[1] += diffusion * dw;
        }
        observe(k + 1, &x);
    }
    Ok(SimResult {
        x1_t: x[1],
        x2_t: x[0],
        extra_components: x[2..].to_vec(),
        scheme: "euler-maruyama".into(),
        steps,
        seed: None,
        stream_id: None,
        scale_c: c,
        xi: xi.clone(),
    })
}

/// `steps × m` increments `N(0, T/steps)` from the stream `(seed, stream_id, 0)`.
pub fn brownian_increments(t_end: f64, steps: usize, m: usize, seed: u64, stream_id: u64) -> Vec<f64> {
    let sd = (t_end / steps as f64).sqrt();
    let mut rng = stream_rng(seed, stream_id, 0);
    (0..steps * m).map(|_| sd * normal(&mut rng)).collect()
}

pub fn euler_maruyama(
    coeffs: &Coefficients,
    spec: &PsiSpec,
    steps: usize,
    seed: u64,
    stream_id: u64,
    emb: &Embedding,
) -> Result<SimResult> {
    emb.validate()?;
    let dw = brownian_increments(coeffs.params().t_end, steps, emb.m, seed, stream_id);
    let mut r = euler_maruyama_driven(coeffs, spec, steps, emb, &dw, |_, _| {})?;
    r.seed = Some(seed);
    r.stream_id = Some(stream_id);
    Ok(r)
}

/// Points of the shared fine grid used to couple schemes with the oracle.
pub const MASTER_STEPS: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorRow {
    pub steps: usize,
    pub mean_error: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Mean `|EM X²_T - exact X²_T|` for each step count. Sample `i` draws a
/// master path on [`MASTER_STEPS`] intervals from stream `i`; the exact
/// value uses `I = -∫_0^T f'(s) W_s ds` (trapezoid on the master grid) and
/// each scheme sees block sums of the master increments.
pub fn strong_error_experiment(
    coeffs: &Coefficients,
    spec: &PsiSpec,
    step_list: &[usize],
    samples: usize,
    seed: u64,
    ode: &OdeCfg,
) -> Result<Vec<ErrorRow>> {
    if step_list.is_empty() {
        return Err(Error::Precondition("step list is empty".into()));
    }
    for &s in step_list {
        if s == 0 || !MASTER_STEPS.is_multiple_of(s) {
            return Err(Error::Precondition(format!(
                "step count {s} must divide the master grid size {MASTER_STEPS}"
            )));
        }
    }
    if samples == 0 {
        return Err(Error::Precondition("samples must be >= 1".into()));
    }
    let t_end = coeffs.params().t_end;
    let per_sample: Vec<Vec<f64>> = (0..samples as u64)
        .into_par_iter()
        .map(|i| coupled_errors(coeffs, spec, step_list, seed, i, t_end, ode))
        .collect::<Result<_>>()?;
    Ok(step_list
        .iter()
        .enumerate()
        .map(|(j, &steps)| {
            let errs: Vec<f64> = per_sample.iter().map(|e| e[j]).collect();
            let est = Estimate::from_samples(&errs);
            ErrorRow { steps, mean_error: est.mean, std_error: est.std_error, samples }
        })
        .collect())
}

fn coupled_errors(
    coeffs: &Coefficients,
    spec: &PsiSpec,
    step_list: &[usize],
    seed: u64,
    stream: u64,
    t_end: f64,
    ode: &OdeCfg,
) -> Result<Vec<f64>> {
    let dw = brownian_increments(t_end, MASTER_STEPS, 1, seed, stream);
    let dt = t_end / MASTER_STEPS as f64;
    // I = f(T) W_T - ∫ f'(s) W_s ds with f(T) = 0.
    let mut w = 0.0;
    let mut acc = 0.0;
    let mut prev = 0.0; // f'(0) W_0
    for (k, inc) in dw.iter().enumerate() {
        w += inc;
        let cur = coeffs.f_prime((k + 1) as f64 * dt) * w;
        acc += 0.5 * (prev + cur) * dt;
        prev = cur;
    }
    let exact = oracle_terminal(coeffs, spec, -acc, ode)?.x2_t;
    let emb = Embedding::default();
    step_list
        .iter()
        .map(|&steps| {
            let block = MASTER_STEPS / steps;
            let coarse: Vec<f64> = dw.chunks(block).map(|c| c.iter().sum()).collect();
            let r = euler_maruyama_driven(coeffs, spec, steps, &emb, &coarse, |_, _| {})?;
            Ok((r.x2_t - exact).abs())
        })
        .collect()
}

/// CSV table `steps,mean_error,std_error,samples`.
pub fn error_table_csv(rows: &[ErrorRow]) -> String {
    let mut out = String::from("steps,mean_error,std_error,samples\n");
    for r in rows {
        out.push_str(&format!("{},{:.16e},{:.16e},{}\n", r.steps, r.mean_error, r.std_error, r.samples));
    }
    out
}
