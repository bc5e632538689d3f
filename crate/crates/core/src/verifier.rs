//! Convex-order checks through stop-loss curves, tail-constraint checks, and
//! Monte Carlo hinge estimates with explicit standard errors.
//!
//! `X ⪯cx Y` holds iff the means agree and `E[(X - u)+] ≤ E[(Y - u)+]` for
//! every real `u`. Analytic curves are compared exactly up to a tolerance.
//! Empirical curves carry a standard error at each `u`, and the verdict
//! distinguishes a significant violation from a negative estimate that noise
//! can explain.

use serde::{Deserialize, Serialize};

use crate::comparison::Comparator;
use crate::discrete::DiscreteLaw;
use crate::envelope::TailEnvelope;
use crate::error::{Error, Result};
use crate::extremal::ExtremalDistribution;
use crate::numerics::{pairwise_sum, MeanEstimate, Probability};

/// Width of every Monte Carlo acceptance band, in standard errors.
pub const SIGMA_BAND: f64 = 4.0;
/// Mean-equality tolerance when both curves are analytic.
pub const ANALYTIC_MEAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveSource {
    Analytic,
    Empirical,
}

/// `E[(X - u)+]` estimated from a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HingeEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n: usize,
}

/// Sample hinge mean `(1/n) Σ max(x_i - u, 0)` with its standard error.
pub fn empirical_stop_loss(samples: &[f64], u: f64) -> Result<HingeEstimate> {
    let hinges: Vec<f64> = samples.iter().map(|&x| (x - u).max(0.0)).collect();
    let est = MeanEstimate::from_values(&hinges)
        .ok_or_else(|| Error::Usage("empirical stop-loss needs at least one sample".into()))?;
    Ok(HingeEstimate {
        value: est.mean,
        stderr: est.stderr,
        n: est.n,
    })
}

/// A sorted sample that answers stop-loss queries at any `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCurve {
    sorted: Vec<f64>,
    mean: MeanEstimate,
}

impl EmpiricalCurve {
    pub fn new(samples: &[f64]) -> Result<Self> {
        let mean = MeanEstimate::from_values(samples)
            .ok_or_else(|| Error::Usage("empirical curve needs at least one sample".into()))?;
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::Usage(
                "empirical curve received a non-finite sample".into(),
            ));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted, mean })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn mean(&self) -> MeanEstimate {
        self.mean
    }

    /// Hinge mean and standard error; only samples above `u` are visited.
    pub fn estimate(&self, u: f64) -> HingeEstimate {
        let n = self.sorted.len();
        let k = self.sorted.partition_point(|&x| x <= u);
        let tail = &self.sorted[k..];
        let hinges: Vec<f64> = tail.iter().map(|&x| x - u).collect();
        let value = pairwise_sum(&hinges) / n as f64;
        let stderr = if n > 1 {
            // Zero hinges below u each contribute value² to the squared deviations.
            let sq: Vec<f64> = hinges.iter().map(|h| (h - value) * (h - value)).collect();
            let ss = pairwise_sum(&sq) + k as f64 * value * value;
            (ss / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        HingeEstimate { value, stderr, n }
    }

    /// `P(|X| > t)` for every `t` in an increasing grid.
    pub fn two_sided_tail(&self, grid: &[f64]) -> Vec<f64> {
        let mut abs: Vec<f64> = self.sorted.iter().map(|x| x.abs()).collect();
        abs.sort_by(f64::total_cmp);
        let n = abs.len() as f64;
        grid.iter()
            .map(|&t| (abs.len() - abs.partition_point(|&a| a <= t)) as f64 / n)
            .collect()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }
}

/// A stop-loss transform `u ↦ E[(X - u)+]` on the whole real line.
#[derive(Debug, Clone, PartialEq)]
pub enum StopLossCurve {
    Extremal(ExtremalDistribution),
    Comparator(Comparator),
    Discrete(DiscreteLaw),
    Empirical(EmpiricalCurve),
}

impl StopLossCurve {
    pub fn empirical(samples: &[f64]) -> Result<Self> {
        Ok(StopLossCurve::Empirical(EmpiricalCurve::new(samples)?))
    }

    pub fn source(&self) -> CurveSource {
        match self {
            StopLossCurve::Empirical(_) => CurveSource::Empirical,
            _ => CurveSource::Analytic,
        }
    }

    pub fn n_samples(&self) -> Option<usize> {
        match self {
            StopLossCurve::Empirical(c) => Some(c.len()),
            _ => None,
        }
    }

    pub fn evaluate(&self, u: f64) -> f64 {
        match self {
            StopLossCurve::Extremal(d) => d.stop_loss_full(u),
            StopLossCurve::Comparator(c) => c.stop_loss(u),
            StopLossCurve::Discrete(law) => law.stop_loss(u),
            StopLossCurve::Empirical(c) => c.estimate(u).value,
        }
    }

    /// Standard error of [`evaluate`](Self::evaluate); zero for analytic curves.
    pub fn stderr(&self, u: f64) -> f64 {
        match self {
            StopLossCurve::Empirical(c) => c.estimate(u).stderr,
            _ => 0.0,
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            StopLossCurve::Extremal(d) => d.mean(),
            StopLossCurve::Comparator(_) => 0.0,
            StopLossCurve::Discrete(law) => law.mean(),
            StopLossCurve::Empirical(c) => c.mean().mean,
        }
    }

    pub fn mean_stderr(&self) -> f64 {
        match self {
            StopLossCurve::Empirical(c) => c.mean().stderr,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Dominated,
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderCheckResult {
    /// `E[Y] - E[X]`.
    pub mean_gap: f64,
    /// Location of the worst stop-loss gap; `None` when the means already disagree.
    pub worst_u: Option<f64>,
    /// Most negative gap after adding the noise band (0 if none).
    pub worst_violation: f64,
    pub verdict: Verdict,
    pub tolerance: f64,
}

/// Symmetric grid on `[-u_max, u_max]` with `2 * half_points + 1` points.
pub fn symmetric_grid(u_max: f64, half_points: usize) -> Vec<f64> {
    let h = half_points.max(1);
    (0..=2 * h)
        .map(|i| u_max * (i as f64 - h as f64) / h as f64)
        .collect()
}

/// Decides `X ⪯cx Y` from stop-loss curves on a grid.
///
/// Each grid point gets the gap `Y(u) - X(u)` and a band of
/// [`SIGMA_BAND`] pooled standard errors (zero for analytic pairs). A gap whose
/// upper band edge is below `-tolerance` is a violation. A gap below
/// `-tolerance` whose band reaches back above it makes the check inconclusive.
pub fn convex_order_check(
    x: &StopLossCurve,
    y: &StopLossCurve,
    grid: &[f64],
    tolerance: f64,
) -> Result<OrderCheckResult> {
    if grid.is_empty() {
        return Err(Error::Usage(
            "convex order check needs a nonempty grid".into(),
        ));
    }
    if !(tolerance >= 0.0) {
        return Err(Error::Usage(format!(
            "tolerance {tolerance} must be nonnegative"
        )));
    }
    let analytic = x.source() == CurveSource::Analytic && y.source() == CurveSource::Analytic;
    let mean_gap = y.mean() - x.mean();
    let mean_tol = if analytic {
        ANALYTIC_MEAN_TOL
    } else {
        SIGMA_BAND * x.mean_stderr().hypot(y.mean_stderr())
    };
    if mean_gap.abs() > mean_tol {
        return Ok(OrderCheckResult {
            mean_gap,
            worst_u: None,
            worst_violation: -mean_gap.abs(),
            verdict: Verdict::Violated,
            tolerance,
        });
    }

    let mut worst_u = grid[0];
    let mut worst_upper = f64::INFINITY;
    let mut noisy_negative = false;
    for &u in grid {
        let gap = y.evaluate(u) - x.evaluate(u);
        let band = if analytic {
            0.0
        } else {
            SIGMA_BAND * x.stderr(u).hypot(y.stderr(u))
        };
        let upper = gap + band;
        if gap < -tolerance && upper >= -tolerance {
            noisy_negative = true;
        }
        if upper < worst_upper {
            worst_upper = upper;
            worst_u = u;
        }
    }
    let worst_violation = worst_upper.min(0.0);
    let verdict = if worst_violation < -tolerance {
        Verdict::Violated
    } else if noisy_negative {
        Verdict::Inconclusive
    } else {
        Verdict::Dominated
    };
    Ok(OrderCheckResult {
        mean_gap,
        worst_u: Some(worst_u),
        worst_violation,
        verdict,
        tolerance,
    })
}

/// Half-width `sqrt(ln(2/α) / (2n))` of the DKW band at confidence `1 - α`.
pub fn dkw_epsilon(n: usize, confidence: f64) -> f64 {
    let alpha = 1.0 - confidence;
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

/// `sup_x |F_n(x) - F(x)|` for a continuous `F`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailExceedance {
    pub t: f64,
    pub empirical: f64,
    pub envelope: f64,
    /// `empirical - envelope - epsilon`, positive by construction.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailConstraintReport {
    pub n: usize,
    pub confidence: f64,
    pub epsilon: f64,
    pub grid_points: usize,
    pub exceedances: Vec<TailExceedance>,
}

impl TailConstraintReport {
    pub fn passed(&self) -> bool {
        self.exceedances.is_empty()
    }

    pub fn worst(&self) -> Option<&TailExceedance> {
        self.exceedances
            .iter()
            .max_by(|a, b| a.excess.total_cmp(&b.excess))
    }
}

/// Grid of thresholds used by [`check_tail_constraint`]: step 0.01 on `[0, 8]`.
pub fn tail_grid() -> Vec<f64> {
    (0..=800).map(|i| i as f64 / 100.0).collect()
}

/// Flags every grid `t` where the empirical `P(|X| > t)` exceeds `s(t)` by
/// more than the DKW half-width at the given confidence.
pub fn check_tail_constraint(
    samples: &[f64],
    env: &TailEnvelope,
    confidence: Probability,
) -> Result<TailConstraintReport> {
    let confidence = confidence.open("check_tail_constraint")?;
    let curve = EmpiricalCurve::new(samples)?;
    let grid = tail_grid();
    let epsilon = dkw_epsilon(curve.len(), confidence);
    let exceedances = grid
        .iter()
        .zip(curve.two_sided_tail(&grid))
        .filter_map(|(&t, empirical)| {
            let envelope = env.value(t);
            let excess = empirical - envelope - epsilon;
            (excess > 0.0).then_some(TailExceedance {
                t,
                empirical,
                envelope,
                excess,
            })
        })
        .collect();
    Ok(TailConstraintReport {
        n: curve.len(),
        confidence,
        epsilon,
        grid_points: grid.len(),
        exceedances,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HingeGap {
    /// Sample `E[(X - u)+]` minus the analytic `E[(cG - u)+]`.
    pub gap: f64,
    /// Standard error of the sample term.
    pub stderr: f64,
}

impl HingeGap {
    /// Gap in units of its standard error.
    pub fn z_score(&self) -> f64 {
        self.gap / self.stderr
    }
}

/// Hinge-test estimate of `E[(X - u)+] - E[(cG - u)+]`.
pub fn hinge_gap_estimate(samples: &[f64], c: f64, u: f64) -> Result<HingeGap> {
    let comparator = Comparator::Gaussian { scale: c };
    comparator.validate()?;
    let est = empirical_stop_loss(samples, u)?;
    Ok(HingeGap {
        gap: est.value - comparator.stop_loss(u),
        stderr: est.stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comparison::{Family, SharpComparison};
    use crate::envelope::EnvelopeKind;

    #[test]
    fn two_point_hinges() {
        let s = [-1.0, 1.0];
        assert_eq!(empirical_stop_loss(&s, 0.0).unwrap().value, 0.5);
        assert_eq!(empirical_stop_loss(&s, 1.0).unwrap().value, 0.0);
        assert!(matches!(
            empirical_stop_loss(&[], 0.0),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn curve_estimate_matches_direct() {
        let samples: Vec<f64> = (0..1000)
            .map(|i| ((i * 37) % 101) as f64 / 10.0 - 5.0)
            .collect();
        let curve = EmpiricalCurve::new(&samples).unwrap();
        for u in [-6.0, -1.3, 0.0, 0.05, 2.7, 5.0, 9.0] {
            let a = curve.estimate(u);
            let b = empirical_stop_loss(&samples, u).unwrap();
            assert!((a.value - b.value).abs() < 1e-12);
            assert!((a.stderr - b.stderr).abs() < 1e-12);
        }
    }

    fn sharp_pair(family: Family, factor: f64) -> (StopLossCurve, StopLossCurve, f64) {
        let sc = SharpComparison::compute(family).unwrap();
        let c = factor * sc.sharp_scale();
        let x = StopLossCurve::Extremal(ExtremalDistribution::new(*sc.solution()));
        let y = StopLossCurve::Comparator(sc.comparator(c).unwrap());
        (x, y, sc.tangency_u(c))
    }

    #[test]
    fn analytic_verdicts() {
        let grid = symmetric_grid(40.0, 20_000);
        let (x, y, _) = sharp_pair(Family::Gaussian, 1.0);
        let r = convex_order_check(&x, &y, &grid, 1e-12).unwrap();
        assert_eq!(r.verdict, Verdict::Dominated, "{r:?}");

        let (x, y, uc) = sharp_pair(Family::Gaussian, 0.99);
        let r = convex_order_check(&x, &y, &grid, 1e-12).unwrap();
        assert_eq!(r.verdict, Verdict::Violated);
        assert!((r.worst_u.unwrap() - uc).abs() < 0.1, "{r:?} uc={uc}");

        let (x, y, _) = sharp_pair(Family::Exponential, 1.0);
        let r = convex_order_check(&x, &y, &grid, 1e-12).unwrap();
        assert_eq!(r.verdict, Verdict::Dominated);
    }

    #[test]
    fn reflexive_for_analytic_curves() {
        let grid = symmetric_grid(20.0, 500);
        let curves = [
            sharp_pair(Family::Gaussian, 1.0).0,
            sharp_pair(Family::Exponential, 1.0).0,
            StopLossCurve::Comparator(Comparator::Gaussian { scale: 1.5 }),
            StopLossCurve::Comparator(Comparator::Laplace { scale: 0.5 }),
            StopLossCurve::Discrete(
                DiscreteLaw::new(vec![-2.0, 1.0], vec![1.0 / 3.0, 2.0 / 3.0]).unwrap(),
            ),
        ];
        for c in &curves {
            assert_eq!(
                convex_order_check(c, c, &grid, 0.0).unwrap().verdict,
                Verdict::Dominated
            );
        }
    }

    #[test]
    fn mean_mismatch_is_violation() {
        let x = StopLossCurve::Discrete(DiscreteLaw::new(vec![1.0], vec![1.0]).unwrap());
        let y = StopLossCurve::Comparator(Comparator::Gaussian { scale: 1.0 });
        let r = convex_order_check(&x, &y, &[0.0], 1e-12).unwrap();
        assert_eq!(r.verdict, Verdict::Violated);
        assert_eq!(r.worst_u, None);
    }

    #[test]
    fn negative_u_reflection_matches_direct_hinges() {
        // Extremal full-line curve vs a fine empirical reconstruction of the
        // lower branch, evaluated by closed-form integration of P(X < -t).
        let d = ExtremalDistribution::for_kind(EnvelopeKind::SubGaussian).unwrap();
        for v in [0.0, 0.5, 1.0, 1.5, 1.9, 3.0] {
            let n = 200_000;
            let h = (d.solution().knee() + 1.0) / n as f64;
            let integral: f64 = (0..n)
                .map(|i| {
                    let t = v + (i as f64 + 0.5) * h;
                    d.lower_tail(t) * h
                })
                .sum();
            assert!((d.lower_stop_loss(v) - integral).abs() < 1e-6, "v={v}");
        }
    }

    #[test]
    fn dkw_width() {
        let eps = dkw_epsilon(1_000_000, 1.0 - 1e-6);
        assert!((eps - 0.002_693_386_134_452_7).abs() < 1e-12);
    }

    #[test]
    fn ks_distance_of_exact_quantiles_is_half_step() {
        let n = 100;
        let samples: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_distance(&samples, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.005).abs() < 1e-12);
    }

    #[test]
    fn hinge_gap_rejects_bad_scale() {
        assert!(hinge_gap_estimate(&[0.0], 0.0, 1.0).is_err());
    }
}
