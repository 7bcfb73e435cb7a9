//! Strategy progression over trials: per-trial means, a least-squares
//! slope, and a three-level proportional-odds model
//! `P(y <= j | x) = sigmoid(theta_j - beta x)`.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::linalg::{solve_spd, Matrix};
use crate::probe::ProbeError;
use crate::task::{DecisionOutcome, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialMean {
    pub trial: usize,
    pub n: usize,
    pub mean_strategy: f64,
    pub expert_share: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderedLogitFit {
    pub slope: f64,
    pub thresholds: [f64; 2],
    /// Wald standard errors for `[slope, theta_0, theta_1]`.
    pub std_errors: [f64; 3],
    pub log_likelihood: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationDiagnostics {
    /// +1 when higher trials separate toward higher levels, -1 for the reverse.
    pub direction: f64,
    /// Cumulative splits `j` where `{y <= j}` and `{y > j}` do not overlap in trial.
    pub separated_splits: Vec<usize>,
    /// Last iterate `[slope, theta_0, theta_1]` before stopping.
    pub last_estimate: [f64; 3],
    pub iterations: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum OrderedLogitOutcome {
    Fit(OrderedLogitFit),
    /// The likelihood has no finite maximizer.
    Separation(SeparationDiagnostics),
    /// Not every level occurs, so some threshold is unbounded.
    MissingLevels { present: Vec<u8> },
}

impl OrderedLogitOutcome {
    /// The fitted slope, or the separation direction.
    pub fn slope_sign(&self) -> Option<f64> {
        match self {
            OrderedLogitOutcome::Fit(f) => Some(f.slope.signum()),
            OrderedLogitOutcome::Separation(s) => Some(s.direction),
            OrderedLogitOutcome::MissingLevels { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressionStats {
    pub per_trial: Vec<TrialMean>,
    pub ols: OlsFit,
    pub ordered_logit: OrderedLogitOutcome,
}

impl ProgressionStats {
    /// Pooled expert share over the trial indices in `trials`.
    pub fn expert_share(&self, trials: RangeInclusive<usize>) -> f64 {
        let (mut experts, mut n) = (0.0, 0usize);
        for t in self.per_trial.iter().filter(|t| trials.contains(&t.trial)) {
            experts += t.expert_share * t.n as f64;
            n += t.n;
        }
        if n == 0 {
            0.0
        } else {
            experts / n as f64
        }
    }
}

/// Slope and intercept of `y` regressed on `x`.
pub fn ols(x: &[f64], y: &[f64]) -> Result<OlsFit, ProbeError> {
    if x.len() != y.len() || x.is_empty() {
        return Err(ProbeError::InvalidInput("ols needs equal, non-empty inputs".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(ProbeError::InvalidInput("ols needs at least 2 distinct x values".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok(OlsFit {
        slope,
        intercept: my - slope * mx,
    })
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `sigmoid'(t)`.
fn dens(t: f64) -> f64 {
    sigmoid(t) * sigmoid(-t)
}

/// `sigmoid''(t)`.
fn dens_prime(t: f64) -> f64 {
    dens(t) * (sigmoid(-t) - sigmoid(t))
}

struct Obs {
    x: f64,
    y: u8,
}

/// Log-likelihood, gradient and Hessian for params `[beta, theta_0, theta_1]`.
fn ordered_terms(params: &[f64; 3], data: &[Obs], want_derivs: bool) -> (f64, [f64; 3], [[f64; 3]; 3]) {
    let [beta, t0, t1] = *params;
    let theta = [t0, t1];
    let mut ll = 0.0;
    let mut g = [0.0; 3];
    let mut h = [[0.0; 3]; 3];
    for o in data {
        let y = o.y as usize;
        let a = (y < 2).then(|| theta[y] - beta * o.x);
        let b = (y > 0).then(|| theta[y - 1] - beta * o.x);
        let p = match (a, b) {
            (Some(a), None) => sigmoid(a),
            (None, Some(b)) => sigmoid(-b),
            (Some(a), Some(b)) if b > 0.0 => sigmoid(-b) - sigmoid(-a),
            (Some(a), Some(b)) => sigmoid(a) - sigmoid(b),
            (None, None) => unreachable!("three levels"),
        };
        ll += p.ln();
        if !want_derivs {
            continue;
        }
        let unit = |j: usize| {
            let mut u = [-o.x, 0.0, 0.0];
            u[1 + j] = 1.0;
            u
        };
        let ua = a.map(|_| unit(y));
        let ub = b.map(|_| unit(y - 1));
        let ga = a.map_or(0.0, |a| dens(a) / p);
        let gb = b.map_or(0.0, |b| -dens(b) / p);
        let haa = a.map_or(0.0, |a| dens_prime(a) / p - ga * ga);
        let hbb = b.map_or(0.0, |b| -dens_prime(b) / p - gb * gb);
        let hab = -ga * gb;
        let z = [0.0; 3];
        let (ua, ub) = (ua.unwrap_or(z), ub.unwrap_or(z));
        for i in 0..3 {
            g[i] += ga * ua[i] + gb * ub[i];
            for j in 0..3 {
                h[i][j] += haa * ua[i] * ua[j] + hbb * ub[i] * ub[j] + hab * (ua[i] * ub[j] + ub[i] * ua[j]);
            }
        }
    }
    (ll, g, h)
}

fn separated_splits(data: &[Obs]) -> (Vec<usize>, f64) {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for j in 0..2u8 {
        let lower = data.iter().filter(|o| o.y <= j).map(|o| o.x);
        let upper = data.iter().filter(|o| o.y > j).map(|o| o.x);
        let (lo_min, lo_max) = lower.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        let (up_min, up_max) = upper.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        if lo_max <= up_min {
            pos.push(j as usize);
        }
        if lo_min >= up_max {
            neg.push(j as usize);
        }
    }
    if pos.len() == 2 {
        (pos, 1.0)
    } else if neg.len() == 2 {
        (neg, -1.0)
    } else {
        (pos.into_iter().chain(neg).collect(), 0.0)
    }
}

const MAX_ITERATIONS: usize = 100;
const SLOPE_LIMIT: f64 = 1e4;

/// Proportional-odds fit of levels `y` in `0..=2` on covariate `x`.
pub fn fit_ordered_logit(x: &[f64], y: &[u8]) -> Result<OrderedLogitOutcome, ProbeError> {
    if x.len() != y.len() || x.is_empty() {
        return Err(ProbeError::InvalidInput("ordered logit needs equal, non-empty inputs".into()));
    }
    if let Some(bad) = y.iter().find(|&&v| v > 2) {
        return Err(ProbeError::InvalidInput(format!("level {bad} outside 0..=2")));
    }
    let mut counts = [0usize; 3];
    y.iter().for_each(|&v| counts[v as usize] += 1);
    let present: Vec<u8> = (0..3u8).filter(|&l| counts[l as usize] > 0).collect();
    if present.len() < 3 {
        return Ok(OrderedLogitOutcome::MissingLevels { present });
    }
    let data: Vec<Obs> = x.iter().zip(y).map(|(&x, &y)| Obs { x, y }).collect();
    let (splits, direction) = separated_splits(&data);
    if direction != 0.0 {
        return Ok(OrderedLogitOutcome::Separation(SeparationDiagnostics {
            direction,
            separated_splits: splits,
            last_estimate: [0.0; 3],
            iterations: 0,
            message: "every cumulative split is separated by trial".into(),
        }));
    }

    let n = y.len() as f64;
    let logit = |p: f64| (p / (1.0 - p)).ln();
    let c0 = counts[0] as f64 / n;
    let c1 = (counts[0] + counts[1]) as f64 / n;
    let mut params = [0.0, logit(c0), logit(c1)];
    let (mut ll, mut g, mut h) = ordered_terms(&params, &data, true);
    let mut iterations = 0;
    let separation = |params: [f64; 3], iterations: usize, message: &str| {
        OrderedLogitOutcome::Separation(SeparationDiagnostics {
            direction: params[0].signum(),
            separated_splits: splits.clone(),
            last_estimate: params,
            iterations,
            message: message.into(),
        })
    };
    while g.iter().map(|v| v * v).sum::<f64>().sqrt() > 1e-8 * n.max(1.0) {
        if iterations >= MAX_ITERATIONS {
            return Ok(separation(params, iterations, "no convergence"));
        }
        let info = Matrix::from_rows(&h.map(|r| r.map(|v| -v))).expect("3x3");
        let Ok(step) = solve_spd(&info, &g) else {
            return Ok(separation(params, iterations, "information matrix not positive definite"));
        };
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-12 {
            let cand = [params[0] + t * step[0], params[1] + t * step[1], params[2] + t * step[2]];
            if cand[1] < cand[2] {
                let (lc, _, _) = ordered_terms(&cand, &data, false);
                if lc.is_finite() && lc >= ll {
                    accepted = Some(cand);
                    break;
                }
            }
            t *= 0.5;
        }
        iterations += 1;
        let Some(cand) = accepted else { break };
        params = cand;
        (ll, g, h) = ordered_terms(&params, &data, true);
        if params[0].abs() > SLOPE_LIMIT {
            return Ok(separation(params, iterations, "slope diverging"));
        }
    }
    let info = Matrix::from_rows(&h.map(|r| r.map(|v| -v))).expect("3x3");
    let mut se = [f64::NAN; 3];
    for (i, s) in se.iter_mut().enumerate() {
        let mut e = [0.0; 3];
        e[i] = 1.0;
        if let Ok(col) = solve_spd(&info, &e) {
            *s = col[i].sqrt();
        }
    }
    Ok(OrderedLogitOutcome::Fit(OrderedLogitFit {
        slope: params[0],
        thresholds: [params[1], params[2]],
        std_errors: se,
        log_likelihood: ll,
        iterations,
    }))
}

/// Per-trial means, the least-squares slope of strategy code on trial index,
/// and the ordered-logit fit of strategy level on trial index.
pub fn progression_stats(outcomes: &[DecisionOutcome]) -> Result<ProgressionStats, ProbeError> {
    let mut by_trial: BTreeMap<usize, (usize, f64, usize)> = BTreeMap::new();
    for o in outcomes {
        let e = by_trial.entry(o.trial).or_default();
        e.0 += 1;
        e.1 += o.strategy as f64;
        if o.strategy == Strategy::Expert.code() {
            e.2 += 1;
        }
    }
    if by_trial.len() < 2 {
        return Err(ProbeError::InvalidInput(format!(
            "need at least 2 distinct trials, got {}",
            by_trial.len()
        )));
    }
    let per_trial = by_trial
        .iter()
        .map(|(&trial, &(n, sum, experts))| TrialMean {
            trial,
            n,
            mean_strategy: sum / n as f64,
            expert_share: experts as f64 / n as f64,
        })
        .collect();
    let x: Vec<f64> = outcomes.iter().map(|o| o.trial as f64).collect();
    let y: Vec<f64> = outcomes.iter().map(|o| o.strategy as f64).collect();
    let levels: Vec<u8> = outcomes.iter().map(|o| o.strategy).collect();
    Ok(ProgressionStats {
        per_trial,
        ols: ols(&x, &y)?,
        ordered_logit: fit_ordered_logit(&x, &levels)?,
    })
}
