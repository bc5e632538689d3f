//! Sharp comparison constants against scaled Gaussian and Laplace laws.
//!
//! A symmetric comparator `cY` dominates every mean-zero law obeying the
//! envelope exactly when its stop-loss curve lies above the envelope's
//! stop-loss bound `J` on `[0, ∞)`. The smallest such `c` makes the
//! comparator's stop-loss tangent to the linear piece `B - p0 u` at the point
//! where its slope is `-p0`:
//!
//! * Gaussian: `P(G > z) = p0`, `c0 = B / φ(z)`, tangency at `c0 z`.
//! * Laplace: `w = ln(1 / (2 pE))`, `cE = B / (pE (1 + w))`, tangency at `cE w`.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::envelope::{EnvelopeKind, EnvelopeSolution, TailEnvelope};
use crate::error::{domain, Error, Result};
use crate::numerics::{inverse_upper_tail, log_upper_tail, pdf, upper_tail};

/// Comparator family, paired with the envelope it is sharp for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Scaled standard normal against the sub-Gaussian envelope.
    Gaussian,
    /// Scaled standard Laplace against the sub-exponential envelope.
    Exponential,
}

impl Family {
    pub fn envelope_kind(self) -> EnvelopeKind {
        match self {
            Family::Gaussian => EnvelopeKind::SubGaussian,
            Family::Exponential => EnvelopeKind::SubExponential,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Exponential => "exponential",
        }
    }
}

fn check_scale(op: &'static str, c: f64) -> Result<()> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(domain(op, format!("scale {c} must be positive and finite")))
    }
}

/// `E[(cG - u)+] = c φ(u/c) - u P(G > u/c)`.
pub fn gaussian_stop_loss(c: f64, u: f64) -> Result<f64> {
    check_scale("gaussian_stop_loss", c)?;
    if !u.is_finite() {
        return Err(domain(
            "gaussian_stop_loss",
            format!("u = {u} is not finite"),
        ));
    }
    Ok(gaussian_stop_loss_unchecked(c, u))
}

#[inline]
fn gaussian_stop_loss_unchecked(c: f64, u: f64) -> f64 {
    let x = u / c;
    c * pdf(x) - u * upper_tail(x)
}

/// `E[(cL - u)+] = (c/2) exp(-u/c)` for `u ≥ 0`.
pub fn laplace_stop_loss(c: f64, u: f64) -> Result<f64> {
    check_scale("laplace_stop_loss", c)?;
    if !(u >= 0.0) || !u.is_finite() {
        return Err(domain(
            "laplace_stop_loss",
            format!("u = {u} must be finite and nonnegative"),
        ));
    }
    Ok(0.5 * c * (-u / c).exp())
}

/// A scaled symmetric comparator law with closed-form stop-loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Comparator {
    Gaussian { scale: f64 },
    Laplace { scale: f64 },
}

impl Comparator {
    pub fn new(family: Family, scale: f64) -> Result<Self> {
        check_scale("Comparator::new", scale)?;
        Ok(match family {
            Family::Gaussian => Comparator::Gaussian { scale },
            Family::Exponential => Comparator::Laplace { scale },
        })
    }

    pub fn scale(&self) -> f64 {
        match *self {
            Comparator::Gaussian { scale } | Comparator::Laplace { scale } => scale,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_scale("Comparator", self.scale())
    }

    /// `E[(Y - u)+]` for every real `u`.
    ///
    /// Negative arguments go through `g(-v) = g(v) + v`, valid for symmetric
    /// mean-zero laws.
    pub fn stop_loss(&self, u: f64) -> f64 {
        if u < 0.0 {
            return self.stop_loss(-u) - u;
        }
        match *self {
            Comparator::Gaussian { scale } => gaussian_stop_loss_unchecked(scale, u),
            Comparator::Laplace { scale } => 0.5 * scale * (-u / scale).exp(),
        }
    }

    /// `P(Y > u)`, the negated slope of the stop-loss curve.
    pub fn upper_tail(&self, u: f64) -> f64 {
        match *self {
            Comparator::Gaussian { scale } => upper_tail(u / scale),
            Comparator::Laplace { scale } => {
                let x = u / scale;
                if x >= 0.0 {
                    0.5 * (-x).exp()
                } else {
                    1.0 - 0.5 * x.exp()
                }
            }
        }
    }

    /// The `u` with `P(Y > u) = q`, for `q` in `(0, 1)`.
    pub fn upper_quantile(&self, q: f64) -> f64 {
        match *self {
            Comparator::Gaussian { scale } => scale * inverse_upper_tail(q),
            Comparator::Laplace { scale } => {
                if q <= 0.5 {
                    -scale * (2.0 * q).ln()
                } else {
                    scale * (2.0 * (1.0 - q)).ln()
                }
            }
        }
    }

    /// Inverse-transform map from a uniform in `(0, 1)`.
    #[inline]
    pub fn from_uniform(&self, u: f64) -> f64 {
        self.upper_quantile(1.0 - u)
    }

    pub fn second_moment(&self) -> f64 {
        let c = self.scale();
        match self {
            Comparator::Gaussian { .. } => c * c,
            Comparator::Laplace { .. } => 2.0 * c * c,
        }
    }
}

/// Sharp Gaussian constants for the sub-Gaussian envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianComparison {
    pub sol: EnvelopeSolution,
    /// Solves `P(G > z) = p0`.
    pub z: f64,
    pub c0: f64,
    /// Stored rather than recomputed; the repository constant is the square.
    pub c0_squared: f64,
}

pub fn compute_gaussian_comparison() -> Result<GaussianComparison> {
    let sol = TailEnvelope::new(EnvelopeKind::SubGaussian).solve()?;
    let p0 = sol.knee_prob();
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::Validation(format!(
            "knee probability {p0} outside (0, 1)"
        )));
    }
    let z = inverse_upper_tail(p0);
    let c0 = sol.half_mass() / pdf(z);
    Ok(GaussianComparison {
        sol,
        z,
        c0,
        c0_squared: c0 * c0,
    })
}

/// Sharp Laplace constants for the sub-exponential envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialComparison {
    pub sol: EnvelopeSolution,
    /// `ln(1 / (2 pE))`, equal to `aE - 2 ln 2`.
    pub w: f64,
    pub c: f64,
}

pub fn compute_exponential_comparison() -> Result<ExponentialComparison> {
    let sol = TailEnvelope::new(EnvelopeKind::SubExponential).solve()?;
    let p = sol.knee_prob();
    let w = (1.0 / (2.0 * p)).ln();
    let c = sol.half_mass() / (p * (1.0 + w));
    Ok(ExponentialComparison { sol, w, c })
}

impl ExponentialComparison {
    /// The alternate closed form `aE - 2 ln 2` of `w`.
    pub fn w_from_knee(&self) -> f64 {
        self.sol.knee() - 2.0 * LN_2
    }
}

/// Either family's sharp constants behind one interface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SharpComparison {
    Gaussian(GaussianComparison),
    Exponential(ExponentialComparison),
}

impl SharpComparison {
    pub fn compute(family: Family) -> Result<Self> {
        Ok(match family {
            Family::Gaussian => SharpComparison::Gaussian(compute_gaussian_comparison()?),
            Family::Exponential => SharpComparison::Exponential(compute_exponential_comparison()?),
        })
    }

    pub fn family(&self) -> Family {
        match self {
            SharpComparison::Gaussian(_) => Family::Gaussian,
            SharpComparison::Exponential(_) => Family::Exponential,
        }
    }

    pub fn solution(&self) -> &EnvelopeSolution {
        match self {
            SharpComparison::Gaussian(g) => &g.sol,
            SharpComparison::Exponential(e) => &e.sol,
        }
    }

    /// `c0` or `cE`.
    pub fn sharp_scale(&self) -> f64 {
        match self {
            SharpComparison::Gaussian(g) => g.c0,
            SharpComparison::Exponential(e) => e.c,
        }
    }

    /// `z` or `wE`: the standardized tangency location.
    pub fn tangency_parameter(&self) -> f64 {
        match self {
            SharpComparison::Gaussian(g) => g.z,
            SharpComparison::Exponential(e) => e.w,
        }
    }

    pub fn tangency_u(&self, c: f64) -> f64 {
        c * self.tangency_parameter()
    }

    pub fn comparator(&self, c: f64) -> Result<Comparator> {
        Comparator::new(self.family(), c)
    }

    /// `g_c(u)` or `ℓ_c(u)` on the whole line.
    pub fn comparator_stop_loss(&self, c: f64, u: f64) -> Result<f64> {
        Ok(self.comparator(c)?.stop_loss(u))
    }

    /// Analytic lower bound on `J(u_c) - comparator(u_c)` at `u_c = c · z` (or `c · wE`).
    ///
    /// Affine and strictly decreasing in `c`, zero at the sharp scale.
    pub fn sharpness_witness(&self, c: f64) -> f64 {
        let sol = self.solution();
        match self {
            SharpComparison::Gaussian(g) => sol.half_mass() - c * pdf(g.z),
            SharpComparison::Exponential(e) => sol.half_mass() - c * sol.knee_prob() * (1.0 + e.w),
        }
    }

    /// Ratio `R(u)` with `D'(u) = w(u)(1 - R(u))` for `D = comparator - J` beyond the knee.
    ///
    /// Gaussian: `P(G > u/c) / (2 exp(-u²/2))` for `u ≥ a`, evaluated in log space.
    /// Exponential: `exp(u (1 - 1/c)) / 4` for `u ≥ 0`.
    pub fn monotone_ratio(&self, c: f64, u: f64) -> Result<f64> {
        check_scale("monotone_ratio", c)?;
        match self {
            SharpComparison::Gaussian(g) => {
                if !(u >= g.sol.knee()) || !u.is_finite() {
                    return Err(domain(
                        "monotone_ratio",
                        format!("u = {u} below the knee {}", g.sol.knee()),
                    ));
                }
                Ok((log_upper_tail(u / c) + 0.5 * u * u - LN_2).exp())
            }
            SharpComparison::Exponential(_) => {
                if !(u >= 0.0) || !u.is_finite() {
                    return Err(domain(
                        "monotone_ratio",
                        format!("u = {u} must be nonnegative"),
                    ));
                }
                Ok(0.25 * (u * (1.0 - 1.0 / c)).exp())
            }
        }
    }

    /// Comparator stop-loss minus `J` at each grid point.
    pub fn dominance_report(&self, c: f64, grid: &GridSpec) -> Result<DominanceReport> {
        let comp = self.comparator(c)?;
        let sol = self.solution();
        let tangency_u = self.tangency_u(c);
        let mut points = grid.points()?;
        if tangency_u >= 0.0 && tangency_u <= grid.u_max {
            let at = points.partition_point(|&u| u < tangency_u);
            if points.get(at) != Some(&tangency_u) {
                points.insert(at, tangency_u);
            }
        }
        let gaps: Vec<f64> = points
            .iter()
            .map(|&u| comp.stop_loss(u) - sol.stop_loss_envelope_unchecked(u))
            .collect();
        let (argmin, min_gap) =
            gaps.iter()
                .copied()
                .enumerate()
                .fold(
                    (0, f64::INFINITY),
                    |best, (i, g)| if g < best.1 { (i, g) } else { best },
                );
        let tangency_gap = if tangency_u >= 0.0 {
            comp.stop_loss(tangency_u) - sol.stop_loss_envelope_unchecked(tangency_u)
        } else {
            f64::NAN
        };
        Ok(DominanceReport {
            family: self.family(),
            scale: c,
            argmin_u: points[argmin],
            grid: points,
            gaps,
            min_gap,
            tangency_u,
            tangency_gap,
        })
    }

    /// Grid check of the monotone-ratio hypotheses on `[a, u_max]`.
    pub fn ratio_principle(
        &self,
        c: f64,
        u_max: f64,
        points: usize,
    ) -> Result<RatioPrincipleCheck> {
        if points < 2 || !(u_max > self.solution().knee()) {
            return Err(Error::Usage(format!(
                "ratio grid needs at least 2 points and u_max above the knee; got {points}, {u_max}"
            )));
        }
        let comp = self.comparator(c)?;
        let sol = self.solution();
        let env = sol.envelope();
        let a = sol.knee();
        let diff = |u: f64| comp.stop_loss(u) - env.tail_integral(u);
        let mut first_decrease = None;
        let mut prev = self.monotone_ratio(c, a)?;
        for i in 1..points {
            let u = a + (u_max - a) * i as f64 / (points - 1) as f64;
            let r = self.monotone_ratio(c, u)?;
            if r < prev && first_decrease.is_none() {
                first_decrease = Some(u);
            }
            prev = r;
        }
        Ok(RatioPrincipleCheck {
            d_at_knee: diff(a),
            d_at_end: diff(u_max),
            first_decrease,
        })
    }
}

pub fn dominance_report(family: Family, c: f64, grid: &GridSpec) -> Result<DominanceReport> {
    SharpComparison::compute(family)?.dominance_report(c, grid)
}

pub fn monotone_ratio(family: Family, c: f64, u: f64) -> Result<f64> {
    SharpComparison::compute(family)?.monotone_ratio(c, u)
}

pub fn sharpness_witness(family: Family, c: f64) -> Result<f64> {
    check_scale("sharpness_witness", c)?;
    Ok(SharpComparison::compute(family)?.sharpness_witness(c))
}

/// Uniform points on `[0, linear_max]` followed by log-spaced points on `(linear_max, u_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub linear_max: f64,
    pub linear_step: f64,
    pub log_points: usize,
    pub u_max: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            linear_max: 10.0,
            linear_step: 1e-4,
            log_points: 500,
            u_max: 40.0,
        }
    }
}

impl GridSpec {
    pub const MIN_U_MAX: f64 = 40.0;

    pub fn validate(&self) -> Result<()> {
        if !(self.u_max >= Self::MIN_U_MAX) || !self.u_max.is_finite() {
            return Err(Error::Usage(format!(
                "grid must reach at least u = {}; got {}",
                Self::MIN_U_MAX,
                self.u_max
            )));
        }
        if !(self.linear_max > 0.0 && self.linear_max < self.u_max) {
            return Err(Error::Usage(format!(
                "linear section end {} must lie in (0, u_max)",
                self.linear_max
            )));
        }
        if !(self.linear_step > 0.0) || self.linear_max / self.linear_step > 1e8 {
            return Err(Error::Usage(format!(
                "bad linear step {}",
                self.linear_step
            )));
        }
        if self.log_points == 0 {
            return Err(Error::Usage("log section needs at least one point".into()));
        }
        Ok(())
    }

    pub fn points(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let n_lin = (self.linear_max / self.linear_step).round() as usize;
        let mut out = Vec::with_capacity(n_lin + 1 + self.log_points);
        out.extend((0..=n_lin).map(|i| self.linear_max * i as f64 / n_lin as f64));
        let (lo, hi) = (self.linear_max.ln(), self.u_max.ln());
        out.extend(
            (1..=self.log_points)
                .map(|k| (lo + (hi - lo) * k as f64 / self.log_points as f64).exp()),
        );
        if let Some(last) = out.last_mut() {
            *last = self.u_max;
        }
        Ok(out)
    }
}

/// Comparator-minus-envelope gaps over a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceReport {
    pub family: Family,
    pub scale: f64,
    pub grid: Vec<f64>,
    pub gaps: Vec<f64>,
    pub min_gap: f64,
    pub argmin_u: f64,
    pub tangency_u: f64,
    pub tangency_gap: f64,
}

impl DominanceReport {
    /// Accepts a minimum gap down to `-tolerance`.
    pub fn dominates(&self, tolerance: f64) -> bool {
        self.min_gap >= -tolerance
    }
}

/// Hypotheses of the monotone-ratio argument, checked on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioPrincipleCheck {
    /// `D(a)`; must be nonnegative.
    pub d_at_knee: f64,
    /// `D(u_max)`; must be near zero.
    pub d_at_end: f64,
    /// First grid point where `R` decreased, if any.
    pub first_decrease: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g() -> SharpComparison {
        SharpComparison::compute(Family::Gaussian).unwrap()
    }

    fn e() -> SharpComparison {
        SharpComparison::compute(Family::Exponential).unwrap()
    }

    #[test]
    fn gaussian_stop_loss_values() {
        let c = 1.7;
        let v = gaussian_stop_loss(c, 0.0).unwrap();
        assert!((v - c / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
        let c0 = g().sharp_scale();
        assert!((gaussian_stop_loss(c0, 0.0).unwrap() - 0.921_363_526_750_351_3).abs() < 1e-12);
        assert!(gaussian_stop_loss(0.0, 1.0).is_err());
        assert!(gaussian_stop_loss(-1.0, 1.0).is_err());
    }

    #[test]
    fn gaussian_stop_loss_slope() {
        let h = 1e-5;
        let fd = (gaussian_stop_loss(1.0, 1.0 + h).unwrap()
            - gaussian_stop_loss(1.0, 1.0 - h).unwrap())
            / (2.0 * h);
        assert!((fd + 0.158_655_253_931_457_05).abs() < 1e-8);
        for i in 0..200 {
            let u = -6.0 + 12.0 * i as f64 / 199.0;
            for c in [0.5, 1.0, 2.3] {
                let fd = (gaussian_stop_loss(c, u + h).unwrap()
                    - gaussian_stop_loss(c, u - h).unwrap())
                    / (2.0 * h);
                let exact = -upper_tail(u / c);
                assert!(((fd - exact) / exact).abs() < 1e-6, "c={c} u={u}");
            }
        }
    }

    #[test]
    fn laplace_stop_loss_values() {
        assert_eq!(laplace_stop_loss(3.0, 0.0).unwrap(), 1.5);
        assert!((laplace_stop_loss(1.0, 1.0).unwrap() - 0.183_939_720_585_721_16).abs() < 1e-15);
        assert!(laplace_stop_loss(1.0, -0.5).is_err());
        assert!(laplace_stop_loss(0.0, 0.5).is_err());
        let h = 1e-5;
        for i in 0..100 {
            let u = 0.01 + 10.0 * i as f64 / 99.0;
            let c = 1.9;
            let fd = (laplace_stop_loss(c, u + h).unwrap() - laplace_stop_loss(c, u - h).unwrap())
                / (2.0 * h);
            let exact = -0.5 * (-u / c).exp();
            assert!(((fd - exact) / exact).abs() < 1e-6);
        }
    }

    #[test]
    fn gaussian_constants() {
        let SharpComparison::Gaussian(gc) = g() else {
            unreachable!()
        };
        assert!((gc.z - 0.270_406_029_923_698_3).abs() < 1e-11);
        assert!((gc.c0 - 2.309_515_867_366_166_7).abs() < 1e-11);
        assert_eq!(gc.c0_squared, gc.c0 * gc.c0);
        assert!((upper_tail(gc.z) - gc.sol.knee_prob()).abs() <= 1e-12);
        let a = gc.sol.knee();
        assert!((gc.sol.knee_prob() - 2.0 * (-0.5 * a * a).exp()).abs() <= 1e-12);
        assert_eq!(gc.c0, gc.sol.half_mass() / pdf(gc.z));
        assert!(a > 2f64.sqrt() && gc.c0 > 2f64.sqrt() && gc.z > 0.0 && gc.sol.knee_prob() < 0.5);
    }

    #[test]
    fn exponential_constants() {
        let SharpComparison::Exponential(ec) = e() else {
            unreachable!()
        };
        assert!((ec.c - 1.893_894_334_682_740_4).abs() < 1e-11);
        assert!((ec.w - 0.550_848_134_205_831_1).abs() < 1e-11);
        assert!((ec.w - ec.w_from_knee()).abs() <= 1e-12);
        assert!(ec.c > 1.0);
        let p = ec.sol.knee_prob();
        assert_eq!(ec.c, ec.sol.half_mass() / (p * (1.0 + ec.w)));
    }

    #[test]
    fn witness_values_and_linearity() {
        let gs = g();
        let c0 = gs.sharp_scale();
        let b = gs.solution().half_mass();
        assert!(gs.sharpness_witness(c0).abs() <= 1e-12);
        assert!((gs.sharpness_witness(0.99 * c0) - 0.01 * b).abs() < 1e-12);
        let es = e();
        assert!((es.sharpness_witness(1.0) - 0.399_572_099_871_17).abs() < 1e-12);
        for s in [gs, es] {
            let c = s.sharp_scale();
            let w = |k: f64| s.sharpness_witness(k * c);
            assert!(w(0.9) > w(0.99) && w(0.99) > w(1.0) && w(1.0) > w(1.01));
            // Affine: equal steps give equal differences.
            assert!(((w(0.9) - w(0.95)) - (w(0.95) - w(1.0))).abs() < 1e-14);
        }
        assert!(sharpness_witness(Family::Gaussian, -1.0).is_err());
    }

    #[test]
    fn monotone_ratio_values() {
        let es = e();
        let ce = es.sharp_scale();
        assert_eq!(es.monotone_ratio(ce, 0.0).unwrap(), 0.25);
        let ae = es.solution().knee();
        assert!((es.monotone_ratio(ce, ae).unwrap() - 0.623_761_348_620_146_8).abs() < 1e-12);
        assert!(es.monotone_ratio(ce, -1.0).is_err());
        let gs = g();
        assert!(gs.monotone_ratio(gs.sharp_scale(), 1.0).is_err());
        assert!(gs
            .monotone_ratio(gs.sharp_scale(), 40.0)
            .unwrap()
            .is_finite());
    }

    #[test]
    fn ratio_principle_hypotheses() {
        for s in [g(), e()] {
            let c = s.sharp_scale();
            let chk = s.ratio_principle(c, 40.0, 10_000).unwrap();
            assert!(chk.d_at_knee >= 0.0, "{:?}", chk);
            assert_eq!(chk.first_decrease, None);
        }
        let gs = g();
        assert!(
            gs.ratio_principle(gs.sharp_scale(), 40.0, 100)
                .unwrap()
                .d_at_end
                .abs()
                < 1e-12
        );

        // The Laplace stop-loss decays like exp(-u / cE), so D(40) is still
        // (cE/2) e^{-40/cE} - 2 e^{-40} ≈ 6.4e-10; the limit is reached by u = 60.
        let es = e();
        let ce = es.sharp_scale();
        let at40 = es.ratio_principle(ce, 40.0, 100).unwrap().d_at_end;
        let closed = 0.5 * ce * (-40.0 / ce).exp() - 2.0 * (-40.0f64).exp();
        assert!((at40 - closed).abs() < 1e-22);
        assert!(es.ratio_principle(ce, 60.0, 100).unwrap().d_at_end.abs() < 1e-12);
    }

    #[test]
    fn grid_layout() {
        let pts = GridSpec::default().points().unwrap();
        assert_eq!(pts.len(), 100_001 + 500);
        assert_eq!(pts[0], 0.0);
        assert_eq!(*pts.last().unwrap(), 40.0);
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
        let bad = GridSpec {
            u_max: 20.0,
            ..GridSpec::default()
        };
        assert!(matches!(bad.points(), Err(Error::Usage(_))));
    }

    #[test]
    fn dominance_at_sharp_constant() {
        let gs = g();
        let rep = gs
            .dominance_report(gs.sharp_scale(), &GridSpec::default())
            .unwrap();
        assert!(rep.min_gap >= -1e-12);
        assert!(rep.tangency_gap.abs() < 1e-10);
        assert_eq!(rep.grid.len(), rep.gaps.len());
        assert!((rep.gaps[0] - 0.033_076_466_669_676_6).abs() < 1e-12);
        let shrunk = gs
            .dominance_report(0.99 * gs.sharp_scale(), &GridSpec::default())
            .unwrap();
        assert!(shrunk.min_gap < 0.0);
    }

    #[test]
    fn comparator_reflection_and_quantiles() {
        for comp in [
            Comparator::Gaussian { scale: 1.3 },
            Comparator::Laplace { scale: 0.7 },
        ] {
            for u in [0.1, 0.9, 2.5] {
                let lhs = comp.stop_loss(-u);
                assert!((lhs - (comp.stop_loss(u) + u)).abs() < 1e-15);
            }
            for q in [0.01, 0.3, 0.5, 0.8, 0.999] {
                let u = comp.upper_quantile(q);
                assert!((comp.upper_tail(u) - q).abs() < 1e-13);
            }
        }
    }
}
