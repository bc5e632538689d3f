//! Gaussian special functions, a monotone level solver, and summation helpers.
//!
//! Everything here is a pure function of its arguments. The rest of the
//! crate evaluates these in tight loops, so the public checked entry points
//! wrap unchecked `pub(crate)` kernels.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Absolute tolerance on the argument for every knee equation.
pub const ROOT_TOL: f64 = 1e-13;
/// Bisection budget for [`solve_decreasing_level`].
pub const ROOT_MAX_ITER: usize = 200;
/// Upper end of the default knee bracket.
pub const KNEE_BRACKET_HI: f64 = 50.0;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// A number in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(domain(
                "Probability::new",
                format!("{value} is outside [0, 1]"),
            ))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Rejects the endpoints 0 and 1.
    pub fn open(self, op: &'static str) -> Result<f64> {
        if self.0 > 0.0 && self.0 < 1.0 {
            Ok(self.0)
        } else {
            Err(domain(
                op,
                format!("probability {} must lie in (0, 1)", self.0),
            ))
        }
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// Search interval and stopping rule for [`solve_decreasing_level`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketedRoot {
    pub lo: f64,
    pub hi: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl BracketedRoot {
    pub fn new(lo: f64, hi: f64, tol: f64, max_iter: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Usage(format!("invalid bracket [{lo}, {hi}]")));
        }
        if !(tol > 0.0) || max_iter == 0 {
            return Err(Error::Usage(format!(
                "invalid stopping rule tol={tol}, max_iter={max_iter}"
            )));
        }
        Ok(Self {
            lo,
            hi,
            tol,
            max_iter,
        })
    }

    /// `[t0 + 1e-9, 50]` with the default tolerance; every knee lies strictly above `t0`.
    pub fn knee(t0: f64) -> Self {
        Self {
            lo: t0 + 1e-9,
            hi: KNEE_BRACKET_HI,
            tol: ROOT_TOL,
            max_iter: ROOT_MAX_ITER,
        }
    }
}

fn check_finite(op: &'static str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(domain(op, format!("argument {x} is not finite")))
    }
}

#[inline]
pub(crate) fn pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

#[inline]
pub(crate) fn upper_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Standard normal density `(2π)^{-1/2} exp(-x²/2)`.
pub fn gaussian_pdf(x: f64) -> Result<f64> {
    check_finite("gaussian_pdf", x)?;
    Ok(pdf(x))
}

/// Upper tail `P(G > x)` of a standard normal.
pub fn gaussian_tail(x: f64) -> Result<f64> {
    check_finite("gaussian_tail", x)?;
    Ok(upper_tail(x))
}

/// `ln P(G > x)`, finite far beyond the underflow point of the tail itself.
pub fn gaussian_log_tail(x: f64) -> Result<f64> {
    check_finite("gaussian_log_tail", x)?;
    Ok(log_upper_tail(x))
}

pub(crate) fn log_upper_tail(x: f64) -> f64 {
    if x < 30.0 {
        upper_tail(x).ln()
    } else {
        // Asymptotic Mills series; the truncation error is below 1e-10 here.
        let x2 = x * x;
        let series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
        -0.5 * x2 - x.ln() - 0.5 * (2.0 * PI).ln() + series.ln()
    }
}

/// `∫_x^∞ exp(-t²/2) dt`, via the identity with the Gaussian tail.
pub fn gaussian_upper_integral(x: f64) -> Result<f64> {
    check_finite("gaussian_upper_integral", x)?;
    Ok(upper_integral(x))
}

#[inline]
pub(crate) fn upper_integral(x: f64) -> f64 {
    SQRT_2PI * upper_tail(x)
}

/// The `x` solving `P(G > x) = p`.
pub fn inverse_gaussian_tail(p: Probability) -> Result<f64> {
    let p = p.open("inverse_gaussian_tail")?;
    Ok(inverse_upper_tail(p))
}

/// Unchecked kernel; `p` must lie in `(0, 1)`.
pub(crate) fn inverse_upper_tail(p: f64) -> f64 {
    let x = -lower_quantile_as241(p);
    // One Halley step on P(G > x) - p.
    let density = pdf(x);
    if density == 0.0 {
        return x;
    }
    let t = -(upper_tail(x) - p) / density;
    x - t / (1.0 + 0.5 * x * t)
}

#[inline]
fn poly(coeffs: &[f64; 8], r: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * r + c)
}

/// Wichura's AS 241 (PPND16) lower-tail normal quantile.
fn lower_quantile_as241(p: f64) -> f64 {
    const A: [f64; 8] = [
        3.387_132_872_796_366_6,
        1.331_416_678_917_843_8e2,
        1.971_590_950_306_551_3e3,
        1.373_169_376_550_946_1e4,
        4.592_195_393_154_987_1e4,
        6.726_577_092_700_87e4,
        3.343_057_558_358_813e4,
        2.509_080_928_730_122_7e3,
    ];
    const B: [f64; 8] = [
        1.0,
        4.231_333_070_160_091e1,
        6.871_870_074_920_579e2,
        5.394_196_021_424_751e3,
        2.121_379_430_158_659_7e4,
        3.930_789_580_009_271e4,
        2.872_908_573_572_194_3e4,
        5.226_495_278_852_854_5e3,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_5,
        4.630_337_846_156_545,
        5.769_497_221_460_691,
        3.647_848_324_763_204_5,
        1.270_458_252_452_368_4,
        2.417_807_251_774_506e-1,
        2.272_384_498_926_918_4e-2,
        7.745_450_142_783_414e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_759,
        1.676_384_830_183_803_8,
        6.897_673_349_851e-1,
        1.481_039_764_274_800_8e-1,
        1.519_866_656_361_645_7e-2,
        5.475_938_084_995_345e-4,
        1.050_750_071_644_416_8e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103,
        5.463_784_911_164_114,
        1.784_826_539_917_291_3,
        2.965_605_718_285_048_7e-1,
        2.653_218_952_657_612_4e-2,
        1.242_660_947_388_078_4e-3,
        2.711_555_568_743_487_6e-5,
        2.010_334_399_292_288_1e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        5.998_322_065_558_88e-1,
        1.369_298_809_227_358e-1,
        1.487_536_129_085_061_5e-2,
        7.868_691_311_456_133e-4,
        1.846_318_317_510_054_8e-5,
        1.421_511_758_316_446e-7,
        2.044_263_103_389_939_7e-15,
    ];

    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        let r = r - 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        let r = r - 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// Finds `x` in the bracket with `f(x) = level` for a nonincreasing `f`.
///
/// Each iteration takes a regula-falsi step followed by a bisection step, so
/// the bracket at least halves every round. Stops once the bracket is narrower
/// than `tol` and returns the endpoint whose residual is smaller.
pub fn solve_decreasing_level<F>(f: F, level: f64, bracket: BracketedRoot) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let BracketedRoot {
        mut lo,
        mut hi,
        tol,
        max_iter,
    } = bracket;
    let mut r_lo = f(lo) - level;
    let mut r_hi = f(hi) - level;
    if !(r_lo >= 0.0 && r_hi <= 0.0) {
        return Err(Error::Bracket { lo, hi, level });
    }
    if r_lo == 0.0 {
        return Ok(lo);
    }
    if r_hi == 0.0 {
        return Ok(hi);
    }

    let narrow = |x: f64, lo: &mut f64, hi: &mut f64, r_lo: &mut f64, r_hi: &mut f64| {
        let r = f(x) - level;
        if r > 0.0 {
            *lo = x;
            *r_lo = r;
        } else if r < 0.0 {
            *hi = x;
            *r_hi = r;
        } else {
            *lo = x;
            *hi = x;
            *r_lo = 0.0;
            *r_hi = 0.0;
        }
    };

    for _ in 0..max_iter {
        if hi - lo <= tol {
            return Ok(if r_lo.abs() <= r_hi.abs() { lo } else { hi });
        }
        let secant = lo - r_lo * (hi - lo) / (r_hi - r_lo);
        if secant > lo && secant < hi {
            narrow(secant, &mut lo, &mut hi, &mut r_lo, &mut r_hi);
        }
        if hi - lo <= tol {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Bracket is a single ulp wide.
            return Ok(if r_lo.abs() <= r_hi.abs() { lo } else { hi });
        }
        narrow(mid, &mut lo, &mut hi, &mut r_lo, &mut r_hi);
    }
    if hi - lo <= tol {
        return Ok(if r_lo.abs() <= r_hi.abs() { lo } else { hi });
    }
    Err(Error::Convergence { max_iter })
}

/// Pairwise (cascade) summation; the result depends only on the slice contents.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 128;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl MeanEstimate {
    /// Returns `None` for an empty slice.
    pub fn from_values(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = pairwise_sum(values) / n as f64;
        let stderr = if n > 1 {
            let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
            (pairwise_sum(&sq) / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, stderr, n })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prob(p: f64) -> Probability {
        Probability::new(p).unwrap()
    }

    #[test]
    fn pdf_at_origin_and_symmetry() {
        assert_eq!(gaussian_pdf(0.0).unwrap(), 0.398_942_280_401_432_7);
        for x in [0.3, 1.7, 5.0, 12.0] {
            assert_eq!(gaussian_pdf(x).unwrap(), gaussian_pdf(-x).unwrap());
        }
        // Closed form evaluated in 40-digit arithmetic.
        assert!((gaussian_pdf(0.27041).unwrap() - 0.384_620_049_171_655_9).abs() < 1e-15);
    }

    #[test]
    fn non_finite_inputs_are_rejected() {
        assert!(matches!(gaussian_pdf(f64::NAN), Err(Error::Domain { .. })));
        assert!(gaussian_tail(f64::INFINITY).is_err());
        assert!(gaussian_upper_integral(f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn tail_reference_values() {
        assert_eq!(gaussian_tail(0.0).unwrap(), 0.5);
        assert!((gaussian_tail(0.27041).unwrap() - 0.39342).abs() < 5e-6);
        assert!((gaussian_tail(1.0).unwrap() - 0.158_655_253_931_457_05).abs() < 1e-16);
        let deep = gaussian_tail(8.0).unwrap();
        assert!(deep > 0.0 && deep < 1e-14);
    }

    #[test]
    fn tail_reflection() {
        for i in 0..=200 {
            let x = -10.0 + 0.1 * i as f64;
            let s = upper_tail(x) + upper_tail(-x);
            assert!((s - 1.0).abs() < 2e-16, "x={x} sum={s}");
        }
    }

    #[test]
    fn tail_strictly_decreasing_on_grid() {
        // Below x ≈ -7.6 neighbouring tail values (≈ 1 - 1e-14) differ by less
        // than one ulp, so only non-increase is representable there.
        let n = 10_000;
        let mut prev = upper_tail(-8.0);
        for i in 1..=n {
            let x = -8.0 + 16.0 * i as f64 / n as f64;
            let cur = upper_tail(x);
            assert!(cur <= prev, "increasing at {x}");
            if x > -7.5 {
                assert!(cur < prev, "not decreasing at {x}");
            }
            prev = cur;
        }
    }

    #[test]
    fn inverse_tail_reference_values() {
        assert_eq!(inverse_gaussian_tail(prob(0.5)).unwrap(), 0.0);
        assert!((inverse_gaussian_tail(prob(0.39342)).unwrap() - 0.27041).abs() < 2e-5);
        assert!(inverse_gaussian_tail(prob(0.0)).is_err());
        assert!(inverse_gaussian_tail(prob(1.0)).is_err());
    }

    #[test]
    fn inverse_tail_residual_and_roundtrip() {
        for i in 1..1000 {
            let p = i as f64 / 1000.0;
            let x = inverse_upper_tail(p);
            assert!((upper_tail(x) - p).abs() <= 1e-14, "p={p}");
        }
        for p in [1e-300, 1e-100, 1e-20, 1e-8, 1.0 - 1e-12] {
            let x = inverse_upper_tail(p);
            assert!((upper_tail(x) - p).abs() <= 1e-14 * p.clamp(1e-300, 1.0) + 1e-300);
        }
        // For negative x the tail sits near 1 and carries only ~1e-16 absolute
        // precision, which limits the recoverable x to about ulp(p) / φ(x).
        for i in 0..=1200 {
            let x = -6.0 + 0.01 * i as f64;
            let p = upper_tail(x);
            let back = inverse_upper_tail(p);
            let conditioning = 2.0 * f64::EPSILON * p / pdf(x);
            assert!((back - x).abs() < 1e-10 + conditioning, "x={x} back={back}");
            if x >= -4.5 {
                assert!((back - x).abs() < 1e-10, "x={x} back={back}");
            }
        }
    }

    #[test]
    fn inverse_tail_monotone() {
        let mut prev = f64::INFINITY;
        for i in 1..10_000 {
            let x = inverse_upper_tail(i as f64 / 10_000.0);
            assert!(x < prev);
            prev = x;
        }
    }

    #[test]
    fn upper_integral_values_and_bound() {
        let half = upper_integral(0.0);
        assert!((half - (2.0 * PI).sqrt() / 2.0).abs() < 1e-15);
        for i in 1..=100 {
            let x = 0.1 * i as f64;
            assert!(upper_integral(x) <= (-0.5 * x * x).exp() / x);
        }
    }

    #[test]
    fn upper_integral_derivative() {
        let h = 1e-5;
        for i in 0..100 {
            let u = 6.0 * i as f64 / 99.0;
            let fd = (upper_integral(u + h) - upper_integral(u - h)) / (2.0 * h);
            let exact = -(-0.5 * u * u).exp();
            assert!(((fd - exact) / exact).abs() < 1e-6, "u={u}");
        }
    }

    #[test]
    fn mills_ratio_bound() {
        for i in 1..=10_000 {
            let x = 10.0 * i as f64 / 10_000.0;
            assert!(pdf(x) / upper_tail(x) <= x + 1.0 / x, "x={x}");
        }
    }

    #[test]
    fn log_tail_matches_direct_and_continues() {
        for x in [-3.0, 0.0, 2.0, 10.0, 29.0] {
            assert!((log_upper_tail(x) - upper_tail(x).ln()).abs() < 1e-12);
        }
        let below = upper_tail(29.999).ln();
        let above = log_upper_tail(30.0);
        assert!((below - above).abs() < 0.1);
        assert!(log_upper_tail(60.0).is_finite());
    }

    #[test]
    fn solver_linear_case() {
        let br = BracketedRoot::new(0.0, 10.0, ROOT_TOL, ROOT_MAX_ITER).unwrap();
        let x = solve_decreasing_level(|x| -x, -2.0, br).unwrap();
        assert!((x - 2.0).abs() <= ROOT_TOL);
    }

    #[test]
    fn solver_exponential_knee() {
        // 2e^{-a}(a+1) = (ln 2 + 1)/2; 40-digit reference root.
        let level = (std::f64::consts::LN_2 + 1.0) / 2.0;
        let br = BracketedRoot::knee(std::f64::consts::LN_2);
        let x = solve_decreasing_level(|a| 2.0 * (-a).exp() * (a + 1.0), level, br).unwrap();
        assert!((x - 1.937_142_495_325_721_7).abs() < 1e-12);
    }

    #[test]
    fn solver_errors() {
        let br = BracketedRoot::new(0.0, 1.0, ROOT_TOL, ROOT_MAX_ITER).unwrap();
        assert!(matches!(
            solve_decreasing_level(|x| -x, 5.0, br),
            Err(Error::Bracket { .. })
        ));
        let tiny = BracketedRoot::new(0.0, 10.0, 1e-13, 2).unwrap();
        assert!(matches!(
            solve_decreasing_level(|x| -x.powi(3), -7.0, tiny),
            Err(Error::Convergence { max_iter: 2 })
        ));
        assert!(BracketedRoot::new(1.0, 0.0, 1e-3, 10).is_err());
        assert!(BracketedRoot::new(0.0, 1.0, 0.0, 10).is_err());
    }

    #[test]
    fn solver_is_bitwise_deterministic() {
        let br = BracketedRoot::knee(1.0);
        let f = |x: f64| (-x).exp() * (1.0 + x.sin() * 0.1);
        let a = solve_decreasing_level(f, 0.05, br).unwrap();
        for _ in 0..10 {
            assert_eq!(
                a.to_bits(),
                solve_decreasing_level(f, 0.05, br).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn probability_validation() {
        assert!(Probability::new(-0.1).is_err());
        assert!(Probability::new(1.5).is_err());
        assert!(Probability::new(f64::NAN).is_err());
        assert_eq!(Probability::new(0.25).unwrap().value(), 0.25);
    }

    #[test]
    fn mean_estimate_basic() {
        let est = MeanEstimate::from_values(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(est.mean, 2.5);
        assert!((est.stderr - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert!(MeanEstimate::from_values(&[]).is_none());
    }
}
