//! Gaussian-process Bayesian optimization over a box-bounded pulse-parameter
//! space: Matérn-5/2 surrogate with per-dimension length scales, expected
//! improvement acquisition and a budgeted loop with full trace recording.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve};

/// One optimization parameter: name, box bounds and a display unit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub unit: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchSpace {
    pub params: Vec<ParamSpec>,
}

impl SearchSpace {
    pub fn new(params: Vec<ParamSpec>) -> Result<Self> {
        let mut names = std::collections::BTreeSet::new();
        for p in &params {
            if !(p.lo < p.hi) {
                return Err(Error::InvalidArg(format!(
                    "parameter {}: bounds [{}, {}] invalid",
                    p.name, p.lo, p.hi
                )));
            }
            if !names.insert(p.name.clone()) {
                return Err(Error::InvalidArg(format!("duplicate parameter {}", p.name)));
            }
        }
        Ok(SearchSpace { params })
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(&self.params).all(|(v, p)| {
                *v >= p.lo - 1e-12 * (p.hi - p.lo) && *v <= p.hi + 1e-12 * (p.hi - p.lo)
            })
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.params)
            .map(|(v, p)| (v - p.lo) / (p.hi - p.lo))
            .collect()
    }

    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(&self.params)
            .map(|(v, p)| p.lo + v.clamp(0.0, 1.0) * (p.hi - p.lo))
            .collect()
    }
}

/// Van der Corput radical inverse in the given base.
fn radical_inverse(mut k: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while k > 0 {
        f /= base as f64;
        r += f * (k % base) as f64;
        k /= base;
    }
    r
}

/// k-th point of the Halton sequence in the unit box.
pub fn halton(k: u64, dim: usize) -> Vec<f64> {
    const BASES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
    (0..dim).map(|d| radical_inverse(k + 1, BASES[d % 8])).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Per-dimension log length scales (unit-box coordinates).
    pub log_ls: Vec<f64>,
    /// Log signal standard deviation.
    pub log_sf: f64,
    /// Log observation-noise standard deviation.
    pub log_sn: f64,
}

fn matern52(r: f64) -> f64 {
    let s = 5.0f64.sqrt() * r;
    (1.0 + s + s * s / 3.0) * (-s).exp()
}

/// Gaussian-process surrogate on unit-box inputs with a Matérn-5/2 ARD
/// kernel and the running data mean as prior mean.
#[derive(Clone, Debug)]
pub struct GpSurrogate {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub hypers: Hyperparams,
    pub mean: f64,
    chol: Array2<f64>,
    alpha: Array1<f64>,
    /// Jitter that was needed to factor the covariance.
    pub jitter: f64,
}

fn kernel(a: &[f64], b: &[f64], h: &Hyperparams) -> f64 {
    let mut r2 = 0.0;
    for ((xa, xb), ll) in a.iter().zip(b).zip(&h.log_ls) {
        let l = ll.exp();
        let d = (xa - xb) / l;
        r2 += d * d;
    }
    (2.0 * h.log_sf).exp() * matern52(r2.sqrt())
}

fn build_cov(x: &[Vec<f64>], h: &Hyperparams, jitter: f64) -> Array2<f64> {
    let n = x.len();
    let sn2 = (2.0 * h.log_sn).exp();
    let sf2 = (2.0 * h.log_sf).exp();
    let mut k = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let v = kernel(&x[i], &x[j], h);
            k[[i, j]] = v;
            k[[j, i]] = v;
        }
        k[[i, i]] += sn2 + jitter * sf2;
    }
    k
}

/// Negative log marginal likelihood (up to constants).
fn nlml(x: &[Vec<f64>], yc: &Array1<f64>, h: &Hyperparams) -> f64 {
    for attempt in 0..6 {
        let jitter = 1e-10 * 10f64.powi(attempt);
        let k = build_cov(x, h, jitter);
        if let Ok(l) = cholesky(&k) {
            let alpha = cholesky_solve(&l, yc);
            let fit: f64 = yc.iter().zip(alpha.iter()).map(|(a, b)| a * b).sum();
            let logdet: f64 = (0..x.len()).map(|i| l[[i, i]].ln()).sum::<f64>() * 2.0;
            return 0.5 * fit + 0.5 * logdet;
        }
    }
    f64::INFINITY
}

/// Plain Nelder–Mead on an unconstrained objective.
fn nelder_mead<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], step: f64, iters: usize) -> Vec<f64> {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for d in 0..n {
        let mut p = x0.to_vec();
        p[d] += step;
        let v = f(&p);
        simplex.push((p, v));
    }
    for _ in 0..iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let centroid: Vec<f64> = (0..n)
            .map(|d| simplex[..n].iter().map(|(p, _)| p[d]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let refl: Vec<f64> = (0..n).map(|d| centroid[d] + (centroid[d] - worst.0[d])).collect();
        let fr = f(&refl);
        if fr < simplex[0].1 {
            let exp: Vec<f64> = (0..n)
                .map(|d| centroid[d] + 2.0 * (centroid[d] - worst.0[d]))
                .collect();
            let fe = f(&exp);
            simplex[n] = if fe < fr { (exp, fe) } else { (refl, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (refl, fr);
        } else {
            let con: Vec<f64> = (0..n)
                .map(|d| centroid[d] + 0.5 * (worst.0[d] - centroid[d]))
                .collect();
            let fc = f(&con);
            if fc < worst.1 {
                simplex[n] = (con, fc);
            } else {
                let best = simplex[0].0.clone();
                for s in simplex.iter_mut().skip(1) {
                    let shrunk: Vec<f64> =
                        (0..n).map(|d| best[d] + 0.5 * (s.0[d] - best[d])).collect();
                    let fv = f(&shrunk);
                    *s = (shrunk, fv);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex[0].0.clone()
}

/// Observations with optional reported standard errors.
#[derive(Clone, Debug, Default)]
pub struct Observations {
    pub x_unit: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl GpSurrogate {
    /// Fit hyperparameters by marginal-likelihood maximization with
    /// multi-start Nelder–Mead. Reported standard errors seed (and floor)
    /// the noise variance; `pin_noise_to_zero` forces exact interpolation.
    pub fn fit(obs: &Observations, pin_noise_to_zero: bool) -> Result<GpSurrogate> {
        if obs.x_unit.is_empty() {
            return Err(Error::InvalidArg("surrogate needs at least one observation".into()));
        }
        let n = obs.x_unit.len();
        let dim = obs.x_unit[0].len();
        let mean = obs.y.iter().sum::<f64>() / n as f64;
        let yc: Array1<f64> = obs.y.iter().map(|v| v - mean).collect();
        let y_std = (yc.iter().map(|v| v * v).sum::<f64>() / n as f64)
            .sqrt()
            .max(1e-6);
        let mean_se = if obs.stderr.is_empty() {
            0.0
        } else {
            obs.stderr.iter().map(|s| s * s).sum::<f64>().max(0.0) / obs.stderr.len() as f64
        };
        let sn_seed = if pin_noise_to_zero {
            1e-8 * y_std
        } else {
            (mean_se.sqrt()).max(1e-3 * y_std)
        };

        let pack = |ls: &[f64], sf: f64, sn: f64| -> Vec<f64> {
            let mut v: Vec<f64> = ls.iter().map(|l| l.ln()).collect();
            v.push(sf.ln());
            if !pin_noise_to_zero {
                v.push(sn.ln());
            }
            v
        };
        let unpack = |v: &[f64]| -> Hyperparams {
            Hyperparams {
                log_ls: v[..dim].to_vec(),
                log_sf: v[dim],
                log_sn: if pin_noise_to_zero {
                    (1e-8 * y_std).ln()
                } else {
                    v[dim + 1].clamp((1e-8 * y_std).ln(), (2.0 * y_std).ln())
                },
            }
        };
        let objective = |v: &[f64]| -> f64 {
            let h = unpack(v);
            if h.log_ls.iter().any(|l| !(-5.0..=3.0).contains(l)) {
                return f64::INFINITY;
            }
            nlml(&obs.x_unit, &yc, &h)
        };

        let starts = [
            pack(&vec![0.3; dim], y_std, sn_seed),
            pack(&vec![0.8; dim], y_std, sn_seed),
            pack(&vec![0.15; dim], 2.0 * y_std, sn_seed),
        ];
        let mut best: Option<(Vec<f64>, f64)> = None;
        for s in &starts {
            let iters = if n > 60 { 40 } else { 80 };
            let x = nelder_mead(&objective, s, 0.4, iters);
            let v = objective(&x);
            if best.as_ref().map_or(true, |(_, bv)| v < *bv) {
                best = Some((x, v));
            }
        }
        let hypers = unpack(&best.expect("at least one start").0);

        // factor with escalating jitter
        let mut jitter = 1e-10;
        let mut chol = None;
        for _ in 0..6 {
            let k = build_cov(&obs.x_unit, &hypers, jitter);
            match cholesky(&k) {
                Ok(l) => {
                    chol = Some(l);
                    break;
                }
                Err(_) => jitter *= 10.0,
            }
        }
        let chol = chol.ok_or_else(|| {
            Error::Conditioning("covariance not factorizable after jitter escalation".into())
        })?;
        let alpha = cholesky_solve(&chol, &yc);
        Ok(GpSurrogate {
            x: obs.x_unit.clone(),
            y: obs.y.clone(),
            hypers,
            mean,
            chol,
            alpha,
            jitter,
        })
    }

    /// Posterior mean and variance at a unit-box point.
    pub fn posterior(&self, xu: &[f64]) -> (f64, f64) {
        let n = self.x.len();
        let kx: Array1<f64> = (0..n).map(|i| kernel(&self.x[i], xu, &self.hypers)).collect();
        let mu = self.mean + kx.iter().zip(self.alpha.iter()).map(|(a, b)| a * b).sum::<f64>();
        let v = cholesky_solve(&self.chol, &kx);
        let kxx = (2.0 * self.hypers.log_sf).exp();
        let var = kxx - kx.iter().zip(v.iter()).map(|(a, b)| a * b).sum::<f64>();
        (mu, var.max(0.0))
    }
}

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (std::f64::consts::TAU).sqrt()
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

/// Abramowitz–Stegun 7.1.26 rational approximation, |error| < 1.5e-7.
fn erf(x: f64) -> f64 {
    let sign = x.signum();
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592 + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - poly * (-x * x).exp())
}

/// Expected improvement (for maximization) over the incumbent.
pub fn expected_improvement(surrogate: &GpSurrogate, xu: &[f64], incumbent: f64) -> f64 {
    let (mu, var) = surrogate.posterior(xu);
    let sigma = var.sqrt();
    // a point whose posterior deviation is negligible against the signal
    // scale is already known; no improvement can be expected there. The
    // floor sits above the jitter-induced residual variance at data points.
    if sigma < 1e-4 * surrogate.hypers.log_sf.exp() {
        return 0.0;
    }
    let z = (mu - incumbent) / sigma;
    sigma * (z * normal_cdf(z) + normal_pdf(z))
}

/// Maximize EI over the box from 64 quasi-random seeds with local
/// refinement. Deterministic for a given surrogate and `round`.
pub fn acquire(surrogate: Option<&GpSurrogate>, space: &SearchSpace, round: u64) -> Vec<f64> {
    let dim = space.dim();
    let surrogate = match surrogate {
        None => return space.from_unit(&halton(round, dim)),
        Some(s) => s,
    };
    let incumbent = surrogate.y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut cands: Vec<(Vec<f64>, f64)> = (0..64u64)
        .map(|k| {
            let u = halton(round * 64 + k, dim);
            let ei = expected_improvement(surrogate, &u, incumbent);
            (u, ei)
        })
        .collect();
    cands.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut best = cands[0].clone();
    for seed in cands.iter().take(4) {
        let refined = nelder_mead(
            &|u: &[f64]| {
                let uc: Vec<f64> = u.iter().map(|v| v.clamp(0.0, 1.0)).collect();
                -expected_improvement(surrogate, &uc, incumbent)
            },
            &seed.0,
            0.05,
            60,
        );
        let uc: Vec<f64> = refined.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        let ei = expected_improvement(surrogate, &uc, incumbent);
        if ei > best.1 {
            best = (uc, ei);
        }
    }
    space.from_unit(&best.0)
}

/// A single evaluation of the figure of merit.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Evaluation {
    pub value: f64,
    pub std_error: f64,
}

/// The figure-of-merit evaluator driven by the loop. `tick` is the
/// wall-clock tick of the evaluation, which the drift layer consumes.
pub trait Objective: Sync {
    fn evaluate(&self, x: &[f64], tick: u64) -> Result<Evaluation>;
}

impl<F> Objective for F
where
    F: Fn(&[f64], u64) -> Result<Evaluation> + Sync,
{
    fn evaluate(&self, x: &[f64], tick: u64) -> Result<Evaluation> {
        self(x, tick)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub params: Vec<f64>,
    pub value: f64,
    pub std_error: f64,
    pub tick: u64,
    pub incumbent_value: f64,
    pub incumbent_params: Vec<f64>,
    /// Whether the evaluation failed and was recorded at the penalty value.
    pub penalized: bool,
}

/// Ordered record of one optimization run; the incumbent is monotone.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub records: Vec<TraceRecord>,
}

impl OptimizationTrace {
    pub fn incumbent(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn incumbent_value(&self) -> f64 {
        self.records
            .last()
            .map(|r| r.incumbent_value)
            .unwrap_or(f64::NEG_INFINITY)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OptimizeConfig {
    pub budget: usize,
    /// Fraction of the budget spent on the quasi-random design phase.
    pub exploration_fraction: f64,
    pub seed: u64,
    /// Refit hyperparameters every this many iterations (1 = always).
    pub refit_every: usize,
    /// Wall-clock ticks advanced per evaluation (drift bookkeeping).
    pub ticks_per_eval: u64,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        OptimizeConfig {
            budget: 100,
            exploration_fraction: 0.25,
            seed: 0,
            refit_every: 4,
            ticks_per_eval: 1,
        }
    }
}

/// Budgeted maximization: quasi-random exploration then EI-driven
/// exploitation. Failed evaluations are penalized and the run continues.
pub fn optimize(
    objective: &dyn Objective,
    space: &SearchSpace,
    cfg: &OptimizeConfig,
) -> Result<OptimizationTrace> {
    if cfg.budget < 1 {
        return Err(Error::InvalidArg("budget must be ≥ 1".into()));
    }
    let n_design = ((cfg.budget as f64 * cfg.exploration_fraction).ceil() as usize)
        .clamp(1, cfg.budget);
    let mut obs = Observations::default();
    let mut trace = OptimizationTrace::default();
    let mut incumbent_value = f64::NEG_INFINITY;
    let mut incumbent_params: Vec<f64> = Vec::new();
    let mut surrogate: Option<GpSurrogate> = None;

    for iter in 0..cfg.budget {
        let x = if iter < n_design {
            space.from_unit(&halton(cfg.seed.wrapping_mul(7919).wrapping_add(iter as u64), space.dim()))
        } else {
            if surrogate.is_none() || (iter - n_design) % cfg.refit_every.max(1) == 0 {
                surrogate = Some(GpSurrogate::fit(&obs, false)?);
            } else {
                // refresh data with frozen hyperparameters
                let hy = surrogate.as_ref().expect("fitted above").hypers.clone();
                surrogate = Some(refit_with_hypers(&obs, hy)?);
            }
            acquire(surrogate.as_ref(), space, iter as u64)
        };
        debug_assert!(space.contains(&x));
        let tick = iter as u64 * cfg.ticks_per_eval;
        let (eval, penalized) = match objective.evaluate(&x, tick) {
            Ok(e) => (e, false),
            Err(_) => {
                let y_sd = if obs.y.len() > 1 {
                    let m = obs.y.iter().sum::<f64>() / obs.y.len() as f64;
                    (obs.y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / obs.y.len() as f64)
                        .sqrt()
                } else {
                    1.0
                };
                let worst = obs.y.iter().cloned().fold(f64::INFINITY, f64::min);
                let p = if worst.is_finite() { worst - y_sd } else { -1.0 };
                (
                    Evaluation {
                        value: p,
                        std_error: y_sd.max(1e-3),
                    },
                    true,
                )
            }
        };
        obs.x_unit.push(space.to_unit(&x));
        obs.y.push(eval.value);
        obs.stderr.push(eval.std_error);
        if eval.value > incumbent_value && !penalized {
            incumbent_value = eval.value;
            incumbent_params = x.clone();
        }
        trace.records.push(TraceRecord {
            iteration: iter,
            params: x,
            value: eval.value,
            std_error: eval.std_error,
            tick,
            incumbent_value,
            incumbent_params: incumbent_params.clone(),
            penalized,
        });
    }
    Ok(trace)
}

fn refit_with_hypers(obs: &Observations, hypers: Hyperparams) -> Result<GpSurrogate> {
    let n = obs.x_unit.len();
    let mean = obs.y.iter().sum::<f64>() / n as f64;
    let yc: Array1<f64> = obs.y.iter().map(|v| v - mean).collect();
    let mut jitter = 1e-10;
    for _ in 0..6 {
        let k = build_cov(&obs.x_unit, &hypers, jitter);
        if let Ok(l) = cholesky(&k) {
            let alpha = cholesky_solve(&l, &yc);
            return Ok(GpSurrogate {
                x: obs.x_unit.clone(),
                y: obs.y.clone(),
                hypers,
                mean,
                chol: l,
                alpha,
                jitter,
            });
        }
        jitter *= 10.0;
    }
    Err(Error::Conditioning("covariance not factorizable".into()))
}
