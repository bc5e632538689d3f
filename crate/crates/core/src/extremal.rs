//! The tail-saturating law that attains the stop-loss envelope.
//!
//! Its CDF has four branches:
//!
//! | range            | `F(x)`        |
//! |------------------|---------------|
//! | `x ≤ -a`         | `0`           |
//! | `-a < x ≤ -t0`   | `s(-x) - p0`  |
//! | `-t0 < x < a`    | `1 - p0`      |
//! | `x ≥ a`          | `1 - s(x)`    |
//!
//! The law is continuous, has no mass in `(-t0, a)`, satisfies
//! `P(|X| > t) = s(t)` for every `t ≥ 0`, and has mean zero.

use crate::envelope::{EnvelopeKind, EnvelopeSolution, TailEnvelope};
use crate::error::{domain, Result};
use crate::numerics::Probability;
use crate::stream::UniformStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremalDistribution {
    sol: EnvelopeSolution,
}

impl ExtremalDistribution {
    pub fn new(sol: EnvelopeSolution) -> Self {
        Self { sol }
    }

    pub fn for_kind(kind: EnvelopeKind) -> Result<Self> {
        Ok(Self::new(TailEnvelope::new(kind).solve()?))
    }

    pub fn solution(&self) -> &EnvelopeSolution {
        &self.sol
    }

    pub fn envelope(&self) -> &TailEnvelope {
        self.sol.envelope()
    }

    fn parts(&self) -> (f64, f64, f64) {
        (self.envelope().t0(), self.sol.knee(), self.sol.knee_prob())
    }

    /// `F(x)`; nondecreasing and right-continuous.
    pub fn cdf(&self, x: f64) -> f64 {
        let (t0, a, p0) = self.parts();
        let s = self.envelope();
        if x <= -a {
            0.0
        } else if x <= -t0 {
            (s.value(-x) - p0).max(0.0)
        } else if x < a {
            1.0 - p0
        } else {
            1.0 - s.value(x)
        }
    }

    /// `P(X > t)`.
    pub fn upper_tail(&self, t: f64) -> f64 {
        1.0 - self.cdf(t)
    }

    /// `P(X < -t)`, the left limit of `F` at `-t`, evaluated per branch.
    pub fn lower_tail(&self, t: f64) -> f64 {
        let (t0, a, p0) = self.parts();
        if t < t0 {
            1.0 - p0
        } else if t < a {
            self.envelope().value(t) - p0
        } else {
            0.0
        }
    }

    /// `P(|X| > t)` from the branch formulas.
    pub fn two_sided_tail(&self, t: f64) -> f64 {
        self.upper_tail(t) + self.lower_tail(t)
    }

    /// Generalized inverse `inf{x : F(x) ≥ p}` for `p` in `(0, 1)`.
    ///
    /// At the plateau level `p = 1 - p0` this returns `-t0`.
    pub fn quantile(&self, p: Probability) -> Result<f64> {
        let p = p.open("extremal_quantile")?;
        Ok(self.quantile_unchecked(p))
    }

    #[inline]
    pub(crate) fn quantile_unchecked(&self, p: f64) -> f64 {
        let p0 = self.sol.knee_prob();
        let s = self.envelope();
        if p <= 1.0 - p0 {
            -s.inverse_unchecked((p + p0).min(1.0))
        } else {
            s.inverse_unchecked(1.0 - p)
        }
    }

    /// `n` inverse-transform draws from stream 0 of `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        self.sample_stream(UniformStream::new(seed, 0), 0, n)
    }

    pub fn sample_stream(&self, stream: UniformStream, start: u64, n: usize) -> Vec<f64> {
        let mut out = stream.take(start, n);
        for v in &mut out {
            *v = self.quantile_unchecked(*v);
        }
        out
    }

    /// `E[(X - u)+]` for `u ≥ 0`, which equals the stop-loss envelope.
    pub fn stop_loss(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) || !u.is_finite() {
            return Err(domain(
                "extremal_stop_loss",
                format!("u = {u} must be finite and nonnegative"),
            ));
        }
        Ok(self.sol.stop_loss_envelope_unchecked(u))
    }

    /// `E[(-X - v)+] = ∫_v^∞ P(X < -t) dt` for `v ≥ 0`.
    pub fn lower_stop_loss(&self, v: f64) -> f64 {
        let (t0, a, p0) = self.parts();
        let s = self.envelope();
        let shoulder = |from: f64| (s.tail_integral(from) - s.tail_integral(a)) - p0 * (a - from);
        if v >= a {
            0.0
        } else if v >= t0 {
            shoulder(v)
        } else {
            (1.0 - p0) * (t0 - v) + shoulder(t0)
        }
    }

    /// `E[(X - u)+]` on the whole line, reflecting negative `u` through
    /// `(x - u)+ = (-x + u)+ + x - u` and the zero mean.
    pub fn stop_loss_full(&self, u: f64) -> f64 {
        if u >= 0.0 {
            self.sol.stop_loss_envelope_unchecked(u)
        } else {
            self.lower_stop_loss(-u) - u
        }
    }

    /// `E[X+] = ∫_0^∞ P(X > t) dt = a p0 + ∫_a^∞ s`.
    pub fn positive_part_mean(&self) -> f64 {
        let (_, a, p0) = self.parts();
        a * p0 + self.envelope().tail_integral(a)
    }

    /// `E[X-] = ∫_0^∞ P(X < -t) dt`.
    pub fn negative_part_mean(&self) -> f64 {
        self.lower_stop_loss(0.0)
    }

    /// Mean from the branch integrals; zero up to rounding.
    pub fn mean(&self) -> f64 {
        self.positive_part_mean() - self.negative_part_mean()
    }

    /// `E[X²] = ∫_0^∞ 2t (P(X > t) + P(X < -t)) dt`, integrated branch by branch.
    pub fn second_moment(&self) -> f64 {
        let (t0, a, p0) = self.parts();
        let s = self.envelope();
        let upper = p0 * a * a + s.tail_second_moment(a);
        let lower = (1.0 - p0) * t0 * t0 + (s.tail_second_moment(t0) - s.tail_second_moment(a))
            - p0 * (a * a - t0 * t0);
        upper + lower
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.second_moment() - m * m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss() -> ExtremalDistribution {
        ExtremalDistribution::for_kind(EnvelopeKind::SubGaussian).unwrap()
    }

    fn expo() -> ExtremalDistribution {
        ExtremalDistribution::for_kind(EnvelopeKind::SubExponential).unwrap()
    }

    fn p(v: f64) -> Probability {
        Probability::new(v).unwrap()
    }

    #[test]
    fn cdf_branch_values() {
        let d = gauss();
        let (t0, a, p0) = d.parts();
        assert_eq!(d.cdf(-a), 0.0);
        assert!(d.cdf(-a + 1e-12).abs() < 1e-10);
        assert!((d.cdf(0.0) - 0.606_576_049_183_971_8).abs() < 1e-12);
        assert!((d.cdf(a) - (1.0 - p0)).abs() < 1e-15);
        assert!((d.cdf(-t0) - (1.0 - p0)).abs() < 1e-15);
        assert_eq!(d.cdf(-10.0), 0.0);
        assert!(d.cdf(50.0) == 1.0);
    }

    #[test]
    fn cdf_is_nondecreasing() {
        for d in [gauss(), expo()] {
            let mut prev = 0.0;
            for i in 0..=20_000 {
                let x = -3.0 + 10.0 * i as f64 / 20_000.0;
                let f = d.cdf(x);
                assert!(f >= prev && (0.0..=1.0).contains(&f));
                prev = f;
            }
        }
    }

    #[test]
    fn quantile_values() {
        let d = gauss();
        let (t0, _, p0) = d.parts();
        assert_eq!(d.quantile(p(1.0 - p0)).unwrap(), -t0);
        // Closed-form inversion with the 40-digit p0.
        assert!((d.quantile(p(0.2)).unwrap() + 1.558_841_486_804_270_5).abs() < 1e-12);
        assert!((d.quantile(p(0.999)).unwrap() - 3.898_949_207_040_810_5).abs() < 1e-12);
        assert!(d.quantile(p(0.0)).is_err());
        assert!(d.quantile(p(1.0)).is_err());
    }

    #[test]
    fn quantile_inverts_cdf() {
        for d in [gauss(), expo()] {
            let plateau = 1.0 - d.solution().knee_prob();
            for i in 1..1000 {
                let q = i as f64 / 1000.0;
                if (q - plateau).abs() < 1e-9 {
                    continue;
                }
                let x = d.quantile(p(q)).unwrap();
                assert!((d.cdf(x) - q).abs() < 1e-10, "q={q}");
            }
        }
    }

    #[test]
    fn tail_saturation() {
        for d in [gauss(), expo()] {
            for i in 0..200 {
                let t = 6.0 * i as f64 / 199.0;
                let err = (d.two_sided_tail(t) - d.envelope().value(t)).abs();
                assert!(err <= 1e-12, "t={t} err={err}");
            }
        }
    }

    #[test]
    fn mean_zero_and_parts() {
        for d in [gauss(), expo()] {
            assert!(d.mean().abs() < 1e-10);
            assert!((d.positive_part_mean() - d.solution().half_mass()).abs() < 1e-12);
        }
    }

    #[test]
    fn second_moment_branch_sum_matches_saturation_identity() {
        for d in [gauss(), expo()] {
            let direct = d.envelope().tail_second_moment(0.0);
            assert!((d.second_moment() - direct).abs() < 1e-12);
        }
        assert!((gauss().variance() - (2.0 + 2.0 * std::f64::consts::LN_2)).abs() < 1e-12);
    }

    #[test]
    fn stop_loss_values() {
        let d = gauss();
        assert_eq!(d.stop_loss(0.0).unwrap(), d.solution().half_mass());
        let a = d.solution().knee();
        assert!((d.stop_loss(a).unwrap() - 0.178_810_546_152_970_8).abs() < 1e-12);
        assert!(d.stop_loss(-0.1).is_err());
    }

    #[test]
    fn full_line_stop_loss_is_continuous_at_zero() {
        for d in [gauss(), expo()] {
            let left = d.stop_loss_full(-1e-12);
            let right = d.stop_loss_full(0.0);
            assert!((left - right).abs() < 1e-11);
            // Far left the hinge is linear: E[X] - u.
            assert!((d.stop_loss_full(-10.0) - 10.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_is_deterministic_and_supported() {
        let d = gauss();
        let a = d.sample(1000, 1);
        assert_eq!(a, d.sample(1000, 1));
        assert_ne!(a, d.sample(1000, 2));
        let (t0, knee, _) = d.parts();
        assert!(a.iter().all(|&x| x <= -t0 || x >= knee));
        assert!(d.sample(0, 1).is_empty());
    }
}
