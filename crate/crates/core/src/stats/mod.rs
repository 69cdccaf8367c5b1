//! Per-round error rates, fitting, Soft-XOR, losses and detection-event diagnostics.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fault_analysis::DetectorInfo;

fn check_rounds(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("round count must be at least 1".into()));
    }
    Ok(())
}

/// `p_L = (1 − (1 − 2ε)^N) / 2`.
pub fn pl_from_epsilon(epsilon: f64, rounds: usize) -> Result<f64> {
    check_rounds(rounds)?;
    if !(0.0..=0.5).contains(&epsilon) {
        return Err(Error::Domain(format!("epsilon {epsilon} outside [0, 0.5]")));
    }
    Ok(-0.5 * (rounds as f64 * (-2.0 * epsilon).ln_1p()).exp_m1())
}

/// Inverse of [`pl_from_epsilon`]; requires `0 ≤ p_L < 0.5`.
pub fn epsilon_from_pl(pl: f64, rounds: usize) -> Result<f64> {
    check_rounds(rounds)?;
    if !(0.0..0.5).contains(&pl) {
        return Err(Error::Domain(format!("logical error rate {pl} outside [0, 0.5)")));
    }
    Ok(-0.5 * ((-2.0 * pl).ln_1p() / rounds as f64).exp_m1())
}

/// One logical-error measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitPoint {
    pub rounds: usize,
    pub pl: f64,
    pub shots: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub epsilon: f64,
    pub constant: f64,
    /// `(N, F = 1 − 2p_L)` of the points used.
    pub fidelities: Vec<(usize, f64)>,
    /// Sum of squared residuals of `ln F`.
    pub residual: f64,
    /// Indices of points dropped by the `F > 0.1` filter.
    pub dropped: Vec<usize>,
}

/// Fidelity below which points are excluded from fits.
pub const FIDELITY_FLOOR: f64 = 0.1;

/// Least squares of `ln F = N ln(1 − 2ε) + ln C` over points with `F > 0.1`.
/// A fitted slope above zero yields `ε = 0`.
pub fn fit_epsilon(points: &[FitPoint]) -> Result<FitResult> {
    let mut fidelities = Vec::new();
    let mut dropped = Vec::new();
    for (k, p) in points.iter().enumerate() {
        let f = 1.0 - 2.0 * p.pl;
        if f > FIDELITY_FLOOR && p.rounds > 0 {
            fidelities.push((p.rounds, f));
        } else {
            dropped.push(k);
        }
    }
    if fidelities.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 points with F > {FIDELITY_FLOOR}, have {}",
            fidelities.len()
        )));
    }
    let n = fidelities.len() as f64;
    let xs: Vec<f64> = fidelities.iter().map(|&(r, _)| r as f64).collect();
    let ys: Vec<f64> = fidelities.iter().map(|&(_, f)| f.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("fit needs at least two distinct round counts".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let epsilon = (-0.5 * slope.exp_m1()).clamp(0.0, 0.5);
    Ok(FitResult { epsilon, constant: intercept.exp(), fidelities, residual, dropped })
}

fn check_probabilities(probs: &[f64]) -> Result<()> {
    match probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        Some(p) => Err(Error::Domain(format!("probability {p} outside [0, 1]"))),
        None => Ok(()),
    }
}

/// `½(1 − Πₖ(1 − 2pₖ))`: probability that an odd number of independent events occur.
pub fn soft_xor(probs: &[f64]) -> Result<f64> {
    check_probabilities(probs)?;
    Ok(0.5 * (1.0 - probs.iter().map(|p| 1.0 - 2.0 * p).product::<f64>()))
}

/// Gradient of [`soft_xor`]: `∂/∂pₖ = Π_{j≠k}(1 − 2pⱼ)`.
pub fn soft_xor_grad(probs: &[f64]) -> Result<Vec<f64>> {
    check_probabilities(probs)?;
    let factors: Vec<f64> = probs.iter().map(|p| 1.0 - 2.0 * p).collect();
    // prefix/suffix products avoid dividing by a zero factor
    let mut prefix = vec![1.0; factors.len() + 1];
    for k in 0..factors.len() {
        prefix[k + 1] = prefix[k] * factors[k];
    }
    let mut grad = vec![0.0; factors.len()];
    let mut suffix = 1.0;
    for k in (0..factors.len()).rev() {
        grad[k] = prefix[k] * suffix;
        suffix *= factors[k];
    }
    Ok(grad)
}

/// Clamp applied to predictions before taking logarithms.
pub const LOSS_CLAMP: f64 = 1e-7;

/// Binary cross entropy of one prediction.
pub fn bce_loss(pred: f64, label: f64) -> f64 {
    let p = pred.clamp(LOSS_CLAMP, 1.0 - LOSS_CLAMP);
    -(label * p.ln() + (1.0 - label) * (1.0 - p).ln())
}

/// Mean BCE over a batch.
pub fn bce_mean(preds: &[f64], labels: &[f64]) -> Result<f64> {
    if preds.len() != labels.len() || preds.is_empty() {
        return Err(Error::InvalidParameter("predictions and labels must be non-empty and equal length".into()));
    }
    Ok(preds.iter().zip(labels).map(|(&p, &y)| bce_loss(p, y)).sum::<f64>() / preds.len() as f64)
}

/// Mean over truncated core sizes `τ = 1..c` of the batch BCE; outer index is `τ`.
pub fn recurrent_loss(preds: &[Vec<f64>], labels: &[Vec<f64>]) -> Result<f64> {
    if preds.len() != labels.len() || preds.is_empty() {
        return Err(Error::InvalidParameter("need one prediction batch per core size".into()));
    }
    let mut total = 0.0;
    for (p, y) in preds.iter().zip(labels) {
        total += bce_mean(p, y)?;
    }
    Ok(total / preds.len() as f64)
}

/// Global error rate if windows failed independently: `(1 − Πᵢ(1 − 2pᵢ)) / 2`.
pub fn independence_estimate(window_rates: &[f64]) -> f64 {
    0.5 * (1.0 - window_rates.iter().map(|p| 1.0 - 2.0 * p).product::<f64>())
}

/// Standard error of a binomial proportion `k / n`.
pub fn binomial_sigma(failures: u64, shots: u64) -> f64 {
    if shots == 0 {
        return 0.0;
    }
    let p = failures as f64 / shots as f64;
    (p * (1.0 - p) / shots as f64).sqrt()
}

/// Abscissa where two curves sampled on the same increasing `xs` cross, by
/// linear interpolation of `ln y` between the bracketing samples. Returns the
/// first sign change of `b − a`.
pub fn curve_crossing(xs: &[f64], a: &[f64], b: &[f64]) -> Option<f64> {
    let diff: Vec<f64> = a.iter().zip(b).map(|(&ya, &yb)| yb.max(1e-300).ln() - ya.max(1e-300).ln()).collect();
    for k in 1..xs.len().min(diff.len()) {
        let (d0, d1) = (diff[k - 1], diff[k]);
        if d0 == 0.0 {
            return Some(xs[k - 1]);
        }
        if d0.signum() != d1.signum() {
            return Some(xs[k - 1] + (xs[k] - xs[k - 1]) * d0 / (d0 - d1));
        }
    }
    None
}

/// Minimum shot count for detection-event diagnostics.
pub const MIN_DIAGNOSTIC_SHOTS: usize = 1000;

fn bit(row: &[u64], k: usize) -> bool {
    row[k / 64] >> (k % 64) & 1 == 1
}

/// Detection event probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct DepCurves {
    /// Event rate of every detector.
    pub per_detector: Vec<f64>,
    /// Mean event rate per `(round, detector weight)`.
    pub by_round: BTreeMap<(u32, u8), f64>,
}

/// Mean event rate per detector and per round, grouped by stabilizer weight.
/// `rows` hold one packed event bitset per shot.
pub fn dep_curves(rows: &[Vec<u64>], detectors: &[DetectorInfo]) -> Result<DepCurves> {
    if rows.len() < MIN_DIAGNOSTIC_SHOTS {
        return Err(Error::InvalidParameter(format!("need at least {MIN_DIAGNOSTIC_SHOTS} shots, got {}", rows.len())));
    }
    let shots = rows.len() as f64;
    let per_detector: Vec<f64> = (0..detectors.len())
        .map(|k| rows.iter().filter(|r| bit(r, k)).count() as f64 / shots)
        .collect();
    let mut groups: BTreeMap<(u32, u8), (f64, usize)> = BTreeMap::new();
    for (k, d) in detectors.iter().enumerate() {
        let g = groups.entry((d.round, d.weight)).or_default();
        g.0 += per_detector[k];
        g.1 += 1;
    }
    let by_round = groups.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect();
    Ok(DepCurves { per_detector, by_round })
}

/// Pearson correlation of per-round event counts across shots.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub rounds: Vec<u32>,
    /// `values[r][s]`, indexed like `rounds`.
    pub values: Vec<Vec<f64>>,
    /// Rounds with zero variance; their entries are 0.
    pub flagged: Vec<u32>,
}

pub fn round_correlation(rows: &[Vec<u64>], detectors: &[DetectorInfo]) -> Result<CorrelationMatrix> {
    if rows.len() < MIN_DIAGNOSTIC_SHOTS {
        return Err(Error::InvalidParameter(format!("need at least {MIN_DIAGNOSTIC_SHOTS} shots, got {}", rows.len())));
    }
    let mut rounds: Vec<u32> = detectors.iter().map(|d| d.round).collect();
    rounds.sort_unstable();
    rounds.dedup();
    let index: BTreeMap<u32, usize> = rounds.iter().enumerate().map(|(k, &r)| (r, k)).collect();
    let counts: Vec<Vec<f64>> = rows
        .iter()
        .map(|row| {
            let mut c = vec![0.0; rounds.len()];
            for (k, d) in detectors.iter().enumerate() {
                if bit(row, k) {
                    c[index[&d.round]] += 1.0;
                }
            }
            c
        })
        .collect();
    let n = rows.len() as f64;
    let r = rounds.len();
    let mean: Vec<f64> = (0..r).map(|j| counts.iter().map(|c| c[j]).sum::<f64>() / n).collect();
    let mut cov = vec![vec![0.0; r]; r];
    for c in &counts {
        for a in 0..r {
            let da = c[a] - mean[a];
            for b in a..r {
                cov[a][b] += da * (c[b] - mean[b]);
            }
        }
    }
    let flagged: Vec<u32> = (0..r).filter(|&a| cov[a][a] == 0.0).map(|a| rounds[a]).collect();
    let mut values = vec![vec![0.0; r]; r];
    for a in 0..r {
        for b in a..r {
            let denom = (cov[a][a] * cov[b][b]).sqrt();
            let v = if denom > 0.0 { cov[a][b] / denom } else { 0.0 };
            values[a][b] = v;
            values[b][a] = v;
        }
    }
    Ok(CorrelationMatrix { rounds, values, flagged })
}
