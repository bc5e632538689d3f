//! Two-sided tail envelopes and the sharp stop-loss envelope they induce.
//!
//! An envelope `s` bounds `P(|X| > t)`. It equals 1 on the plateau `[0, t0]`
//! and decays strictly beyond. For a mean-zero `X` obeying `s`, the stop-loss
//! `E[(X - u)+]` is bounded by a two-piece curve: the line `B - p0 u` up to
//! the knee `a`, and the envelope's tail integral after it. The knee solves
//! `a s(a) + ∫_a^∞ s = B` where `B` is half the envelope mass.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numerics::{solve_decreasing_level, upper_integral, BracketedRoot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeKind {
    /// `min{1, 2 exp(-t²/2)}`
    SubGaussian,
    /// `min{1, 2 exp(-t)}`
    SubExponential,
}

/// A closed-form tail envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEnvelope {
    kind: EnvelopeKind,
    t0: f64,
}

pub fn make_envelope(kind: EnvelopeKind) -> TailEnvelope {
    TailEnvelope::new(kind)
}

impl TailEnvelope {
    pub fn new(kind: EnvelopeKind) -> Self {
        let t0 = match kind {
            EnvelopeKind::SubGaussian => (2.0 * LN_2).sqrt(),
            EnvelopeKind::SubExponential => LN_2,
        };
        Self { kind, t0 }
    }

    pub fn kind(&self) -> EnvelopeKind {
        self.kind
    }

    /// Right edge of the plateau.
    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// `s(t)`; arguments below the plateau edge (including negative ones) give 1.
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        if t <= self.t0 {
            return 1.0;
        }
        match self.kind {
            EnvelopeKind::SubGaussian => 2.0 * (-0.5 * t * t).exp(),
            EnvelopeKind::SubExponential => 2.0 * (-t).exp(),
        }
    }

    /// The `t ≥ t0` with `s(t) = y`, for `y` in `(0, 1]`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !(y > 0.0 && y <= 1.0) {
            return Err(domain(
                "TailEnvelope::inverse",
                format!("{y} outside (0, 1]"),
            ));
        }
        Ok(self.inverse_unchecked(y))
    }

    #[inline]
    pub(crate) fn inverse_unchecked(&self, y: f64) -> f64 {
        if y >= 1.0 {
            return self.t0;
        }
        match self.kind {
            EnvelopeKind::SubGaussian => (2.0 * (2.0 / y).ln()).sqrt(),
            EnvelopeKind::SubExponential => (2.0 / y).ln(),
        }
    }

    /// `∫_x^∞ s(t) dt` in closed form.
    pub fn tail_integral(&self, x: f64) -> f64 {
        if x < self.t0 {
            return (self.t0 - x) + self.decay_integral(self.t0);
        }
        self.decay_integral(x)
    }

    fn decay_integral(&self, x: f64) -> f64 {
        match self.kind {
            EnvelopeKind::SubGaussian => 2.0 * upper_integral(x),
            EnvelopeKind::SubExponential => 2.0 * (-x).exp(),
        }
    }

    /// `∫_x^∞ 2t s(t) dt` for `x ≥ 0`; at `x = 0` this is `E[X²]` for any law saturating `s`.
    pub fn tail_second_moment(&self, x: f64) -> f64 {
        if x < self.t0 {
            return (self.t0 * self.t0 - x * x) + self.tail_second_moment(self.t0);
        }
        match self.kind {
            EnvelopeKind::SubGaussian => 4.0 * (-0.5 * x * x).exp(),
            EnvelopeKind::SubExponential => 4.0 * (x + 1.0) * (-x).exp(),
        }
    }

    /// Total mass `A = ∫_0^∞ s` and its half `B`.
    pub fn mass_constants(&self) -> (f64, f64) {
        let total = self.tail_integral(0.0);
        (total, total / 2.0)
    }

    /// `H(x) = x s(x) + ∫_x^∞ s`, defined for `x ≥ t0`.
    pub fn knee_function(&self, x: f64) -> Result<f64> {
        if !(x >= self.t0) || !x.is_finite() {
            return Err(domain(
                "knee_function",
                format!("x = {x} must be finite and at least t0 = {}", self.t0),
            ));
        }
        Ok(self.knee_unchecked(x))
    }

    #[inline]
    fn knee_unchecked(&self, x: f64) -> f64 {
        x * self.value(x) + self.tail_integral(x)
    }

    /// Solves `H(a) = B` on the default knee bracket.
    pub fn solve(&self) -> Result<EnvelopeSolution> {
        solve_envelope(self)
    }
}

/// Cached knee solution of an envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeSolution {
    envelope: TailEnvelope,
    total_mass: f64,
    half_mass: f64,
    knee: f64,
    knee_prob: f64,
}

pub fn solve_envelope(env: &TailEnvelope) -> Result<EnvelopeSolution> {
    let (total_mass, half_mass) = env.mass_constants();
    let knee = solve_decreasing_level(
        |x| env.knee_unchecked(x),
        half_mass,
        BracketedRoot::knee(env.t0()),
    )?;
    if !(knee > env.t0()) {
        return Err(Error::Validation(format!(
            "knee {knee} does not exceed the plateau edge {}",
            env.t0()
        )));
    }
    Ok(EnvelopeSolution {
        envelope: *env,
        total_mass,
        half_mass,
        knee,
        knee_prob: env.value(knee),
    })
}

impl EnvelopeSolution {
    pub fn envelope(&self) -> &TailEnvelope {
        &self.envelope
    }

    /// `A`: the envelope's total mass, an upper bound on `E|X|`.
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// `B = A / 2`: the stop-loss envelope at zero.
    pub fn half_mass(&self) -> f64 {
        self.half_mass
    }

    /// Knee location `a`.
    pub fn knee(&self) -> f64 {
        self.knee
    }

    /// `p0 = s(a)`: the slope magnitude of the linear piece.
    pub fn knee_prob(&self) -> f64 {
        self.knee_prob
    }

    /// The sharp stop-loss envelope `J(u)` for `u ≥ 0`.
    pub fn stop_loss_envelope(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) || !u.is_finite() {
            return Err(domain(
                "envelope_J",
                format!("u = {u} must be finite and nonnegative"),
            ));
        }
        Ok(self.stop_loss_envelope_unchecked(u))
    }

    #[inline]
    pub(crate) fn stop_loss_envelope_unchecked(&self, u: f64) -> f64 {
        if u <= self.knee {
            self.half_mass - self.knee_prob * u
        } else {
            self.envelope.tail_integral(u)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss() -> TailEnvelope {
        make_envelope(EnvelopeKind::SubGaussian)
    }

    fn expo() -> TailEnvelope {
        make_envelope(EnvelopeKind::SubExponential)
    }

    #[test]
    fn plateau_and_closed_forms() {
        let g = gauss();
        assert_eq!(g.value(0.0), 1.0);
        assert_eq!(g.value(g.t0()), 1.0);
        assert!((g.value(2.0) - 2.0 * (-2.0f64).exp()).abs() < 1e-16);
        assert!((g.value(2.0) - 0.27067).abs() < 1e-5);
        let e = expo();
        assert!((e.tail_integral(LN_2) - 1.0).abs() < 1e-15);
        assert!((e.t0() - LN_2).abs() < 1e-16);
    }

    #[test]
    fn inverse_roundtrip() {
        for env in [gauss(), expo()] {
            for i in 1..=1000 {
                let y = i as f64 / 1000.0;
                let t = env.inverse(y).unwrap();
                assert!((env.value(t) - y).abs() < 1e-12, "y={y}");
                assert!(t >= env.t0());
            }
            assert!(env.inverse(0.0).is_err());
            assert!(env.inverse(1.1).is_err());
        }
    }

    #[test]
    fn mass_constants_values() {
        // 40-digit references.
        let (a, b) = gauss().mass_constants();
        assert!((a - 1.776_574_120_161_349_4).abs() < 1e-14);
        assert_eq!(a, 2.0 * b);
        let (ae, be) = expo().mass_constants();
        assert!((ae - (LN_2 + 1.0)).abs() < 1e-15);
        assert!((be - 0.846_573_590_279_972_6).abs() < 1e-15);
        assert_eq!(ae, 2.0 * be);
    }

    #[test]
    fn knee_function_values() {
        let g = gauss();
        let (a, b) = g.mass_constants();
        assert!((g.knee_function(g.t0()).unwrap() - a).abs() < 1e-15);
        assert!((g.knee_function(1.80334).unwrap() - b).abs() < 5e-6);
        let e = expo();
        let h = e.knee_function(2.0 * LN_2).unwrap();
        assert!((h - (2.0 * LN_2 + 1.0) / 2.0).abs() < 1e-15);
        assert!(h > e.mass_constants().1);
        assert!(matches!(g.knee_function(1.0), Err(Error::Domain { .. })));
        for x in [3.0f64, 5.0, 40.0] {
            let closed = 2.0 * (-x).exp() * (x + 1.0);
            assert!((e.knee_function(x).unwrap() - closed).abs() < 1e-15);
        }
    }

    #[test]
    fn knee_function_strictly_decreasing() {
        for env in [gauss(), expo()] {
            let mut prev = env.knee_function(env.t0()).unwrap();
            let mut x = env.t0();
            while x < 30.0 {
                x += 0.01;
                let cur = env.knee_function(x).unwrap();
                assert!(cur < prev, "{:?} at {x}", env.kind());
                prev = cur;
            }
        }
    }

    #[test]
    fn solutions() {
        let sg = gauss().solve().unwrap();
        assert!((sg.knee() - 1.803_338_389_684_026_4).abs() < 1e-12);
        assert!((sg.knee_prob() - 0.393_423_950_816_028_2).abs() < 1e-12);
        let h = gauss().knee_function(sg.knee()).unwrap();
        assert!((h - sg.half_mass()).abs() <= 1e-12);
        // Crude bounds: a > √2 and p0 < 1/2.
        assert!(sg.knee() > 2f64.sqrt());
        assert!(sg.knee_prob() < 0.5);

        let se = expo().solve().unwrap();
        assert!((se.knee() - 1.937_142_495_325_721_7).abs() < 1e-12);
        assert!((se.knee_prob() - 0.288_230_343_480_863_3).abs() < 1e-12);
        assert!(se.knee() > 2.0 * LN_2);
        for s in [sg, se] {
            assert!(s.knee() > s.envelope().t0());
            assert!(s.knee_prob() > 0.0 && s.knee_prob() < 1.0);
        }
    }

    #[test]
    fn stop_loss_envelope_pieces() {
        let sol = gauss().solve().unwrap();
        assert_eq!(sol.stop_loss_envelope(0.0).unwrap(), sol.half_mass());
        let a = sol.knee();
        let line = sol.half_mass() - sol.knee_prob() * a;
        let tail = sol.envelope().tail_integral(a);
        assert!((line - tail).abs() < 1e-10);
        assert!((sol.stop_loss_envelope(a).unwrap() - 0.178_810_546_152_970_8).abs() < 1e-12);
        assert!(sol.stop_loss_envelope(-1.0).is_err());
        assert!(sol.stop_loss_envelope(f64::NAN).is_err());
    }

    #[test]
    fn envelope_above_linear_piece_everywhere() {
        for env in [gauss(), expo()] {
            let sol = env.solve().unwrap();
            for i in 0..10_000 {
                let u = 40.0 * i as f64 / 9_999.0;
                let j = sol.stop_loss_envelope(u).unwrap();
                assert!(j >= sol.half_mass() - sol.knee_prob() * u - 1e-12);
                assert!(j >= 0.0);
            }
        }
    }

    #[test]
    fn tail_integral_convex_beyond_knee() {
        for env in [gauss(), expo()] {
            let sol = env.solve().unwrap();
            let h = 0.01;
            let mut u = sol.knee() + h;
            while u < 12.0 {
                let d2 = env.tail_integral(u + h) - 2.0 * env.tail_integral(u)
                    + env.tail_integral(u - h);
                assert!(d2 >= -1e-15, "u={u} d2={d2}");
                u += h;
            }
        }
    }

    #[test]
    fn second_moment_closed_forms() {
        assert!((gauss().tail_second_moment(0.0) - (2.0 + 2.0 * LN_2)).abs() < 1e-14);
        let e = expo();
        assert!((e.tail_second_moment(0.0) - (LN_2 * LN_2 + 2.0 * LN_2 + 2.0)).abs() < 1e-14);
    }
}
