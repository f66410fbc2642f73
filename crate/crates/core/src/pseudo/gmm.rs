use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const VARIANCE_FLOOR: f64 = 1e-6;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GmmError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("invalid score {0}: expected a finite value in [0,1]")]
    InvalidScore(f64),
    #[error("invalid mixture: {0}")]
    InvalidModel(String),
}

/// Two-component 1-D Gaussian mixture, components sorted by mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GmmModel {
    pub weights: [f64; 2],
    pub means: [f64; 2],
    pub variances: [f64; 2],
    pub log_likelihood: f64,
}

impl GmmModel {
    pub fn new(weights: [f64; 2], means: [f64; 2], variances: [f64; 2], log_likelihood: f64) -> Result<Self, GmmError> {
        let m = Self { weights, means, variances, log_likelihood };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), GmmError> {
        let all = self.weights.iter().chain(&self.means).chain(&self.variances);
        if !all.clone().all(|v| v.is_finite()) {
            return Err(GmmError::InvalidModel("non-finite parameter".into()));
        }
        if self.weights.iter().any(|&w| w < 0.0) || (self.weights[0] + self.weights[1] - 1.0).abs() > 1e-9 {
            return Err(GmmError::InvalidModel(format!("weights {:?} do not form a distribution", self.weights)));
        }
        if self.variances.iter().any(|&v| v < VARIANCE_FLOOR) {
            return Err(GmmError::InvalidModel(format!("variances {:?} below floor", self.variances)));
        }
        if self.means[0] > self.means[1] {
            return Err(GmmError::InvalidModel("means are not sorted".into()));
        }
        Ok(())
    }

    /// `ln(w_k) + ln N(x; mu_k, var_k)`.
    fn log_joint(&self, k: usize, x: f64) -> f64 {
        let d = x - self.means[k];
        self.weights[k].ln() - 0.5 * (LN_2PI + self.variances[k].ln() + d * d / self.variances[k])
    }

    /// Posterior probability that `x` belongs to the high-mean component.
    pub fn posterior_high(&self, x: f64) -> f64 {
        let a = self.log_joint(0, x);
        let b = self.log_joint(1, x);
        1.0 / (1.0 + (a - b).exp())
    }

    /// Log-odds of the high-mean component against the low one at `x`.
    pub fn log_odds_high(&self, x: f64) -> f64 {
        self.log_joint(1, x) - self.log_joint(0, x)
    }

    /// Total log-likelihood of `xs` under this mixture.
    pub fn log_likelihood_of(&self, xs: &[f64]) -> f64 {
        xs.iter().map(|&x| log_sum_exp(self.log_joint(0, x), self.log_joint(1, x))).sum()
    }
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmConfig {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self { max_iters: 100, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmFit {
    pub model: GmmModel,
    /// Log-likelihood of the initial parameters followed by one entry per EM update.
    pub trace: Vec<f64>,
}

impl GmmFit {
    pub fn iterations(&self) -> usize {
        self.trace.len() - 1
    }
}

/// Linear-interpolation percentile of sorted data, `q` in [0, 1].
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

#[derive(Debug, Clone, Copy)]
struct Params {
    weights: [f64; 2],
    means: [f64; 2],
    variances: [f64; 2],
}

impl Params {
    fn as_model(&self, ll: f64) -> GmmModel {
        GmmModel { weights: self.weights, means: self.means, variances: self.variances, log_likelihood: ll }
    }
}

/// One EM iteration: returns the log-likelihood of `p` and the updated parameters.
fn em_step(xs: &[f64], p: &Params) -> (f64, Params) {
    let model = p.as_model(0.0);
    let mut ll = 0.0;
    let mut nk = [0.0f64; 2];
    let mut sx = [0.0f64; 2];
    let mut resp = Vec::with_capacity(xs.len());
    for &x in xs {
        let a = model.log_joint(0, x);
        let b = model.log_joint(1, x);
        let lse = log_sum_exp(a, b);
        ll += lse;
        let r1 = (b - lse).exp();
        let r0 = 1.0 - r1;
        resp.push(r1);
        nk[0] += r0;
        nk[1] += r1;
        sx[0] += r0 * x;
        sx[1] += r1 * x;
    }
    let n = xs.len() as f64;
    let mut next = *p;
    let mut means = p.means;
    for k in 0..2 {
        if nk[k] > 1e-12 {
            means[k] = sx[k] / nk[k];
        }
    }
    let mut sv = [0.0f64; 2];
    for (&x, &r1) in xs.iter().zip(&resp) {
        let d0 = x - means[0];
        let d1 = x - means[1];
        sv[0] += (1.0 - r1) * d0 * d0;
        sv[1] += r1 * d1 * d1;
    }
    for k in 0..2 {
        if nk[k] > 1e-12 {
            next.means[k] = means[k];
            next.variances[k] = (sv[k] / nk[k]).max(VARIANCE_FLOOR);
        }
    }
    let w1 = nk[1] / n;
    next.weights = [1.0 - w1, w1];
    (ll, next)
}

/// Fits a two-component mixture with deterministic initialization: means at the
/// 25th and 75th percentiles (min/max when those coincide), equal weights and the
/// pooled variance. Stops when the log-likelihood gain drops below `tol` or after
/// `max_iters` updates.
pub fn fit_gmm_traced(scores: &[f64], config: &EmConfig) -> Result<GmmFit, GmmError> {
    if let Some(&bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(GmmError::InvalidScore(bad));
    }
    if scores.len() < 4 {
        return Err(GmmError::DegenerateInput(format!("need at least 4 scores, got {}", scores.len())));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    if lo == hi {
        return Err(GmmError::DegenerateInput("all scores are identical".into()));
    }
    let (mut m0, mut m1) = (percentile(&sorted, 0.25), percentile(&sorted, 0.75));
    if m0 == m1 {
        (m0, m1) = (lo, hi);
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let pooled = (scores.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).max(VARIANCE_FLOOR);

    let mut params = Params { weights: [0.5, 0.5], means: [m0, m1], variances: [pooled, pooled] };
    let (mut ll, mut next) = em_step(scores, &params);
    let mut trace = vec![ll];
    for _ in 0..config.max_iters {
        let (ll_next, after) = em_step(scores, &next);
        trace.push(ll_next);
        params = next;
        next = after;
        let gain = ll_next - ll;
        ll = ll_next;
        if gain < config.tol {
            break;
        }
    }

    if params.means[0] > params.means[1] {
        params.weights.swap(0, 1);
        params.means.swap(0, 1);
        params.variances.swap(0, 1);
    }
    Ok(GmmFit { model: params.as_model(ll), trace })
}

pub fn fit_gmm(scores: &[f64], config: &EmConfig) -> Result<GmmModel, GmmError> {
    fit_gmm_traced(scores, config).map(|f| f.model)
}

/// Score where the high-mean posterior crosses 0.5, located by bisection on
/// `[mu_low, mu_high]` to a bracket width of 1e-6. Falls back to the midpoint of
/// the means when the posterior does not cross inside that interval.
pub fn posterior_crossover(gmm: &GmmModel) -> f64 {
    let [lo, hi] = gmm.means;
    let mid = 0.5 * (lo + hi);
    let (g_lo, g_hi) = (gmm.log_odds_high(lo), gmm.log_odds_high(hi));
    if g_lo == 0.0 {
        return lo;
    }
    if g_hi == 0.0 {
        return hi;
    }
    if !(g_lo.is_finite() && g_hi.is_finite()) || g_lo.signum() == g_hi.signum() {
        return mid;
    }
    let rising = g_lo < 0.0;
    let (mut a, mut b) = (lo, hi);
    while b - a > 1e-6 {
        let m = 0.5 * (a + b);
        let g = gmm.log_odds_high(m);
        if g == 0.0 {
            return m;
        }
        if (g < 0.0) == rising {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
