use std::f64::consts::SQRT_2;

use anyhow::Result;
use cxcompare::comparison::{Family, GridSpec, SharpComparison};
use cxcompare::extremal::ExtremalDistribution;
use cxcompare::numerics::{gaussian_pdf, gaussian_tail, Probability};
use cxcompare::verifier::{check_tail_constraint, empirical_stop_loss, EmpiricalCurve, SIGMA_BAND};
use serde::Serialize;
use serde_json::{json, Value};

use crate::output::SCHEMA_VERSION;

const DOMINANCE_TOL: f64 = 1e-12;
const TANGENCY_TOL: f64 = 1e-9;
const SHARPNESS_FACTORS: [f64; 4] = [0.9, 0.99, 1.0, 1.01];
const TAIL_CONFIDENCE: f64 = 1.0 - 1e-6;

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub details: Value,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub kind: &'static str,
    pub scale_factor: f64,
    pub n: usize,
    pub seed: u64,
    pub passed: bool,
    pub failed: Vec<&'static str>,
    pub checks: Vec<Check>,
}

pub fn run(family: Family, scale_factor: f64, n: usize, seed: u64) -> Result<Summary> {
    let sc = SharpComparison::compute(family)?;
    let sharp = sc.sharp_scale();
    let sol = *sc.solution();
    let dist = ExtremalDistribution::new(sol);
    let samples = dist.sample(n, seed);
    let mut checks = Vec::new();

    let report = sc.dominance_report(scale_factor * sharp, &GridSpec::default())?;
    checks.push(Check {
        name: "dominance",
        passed: report.dominates(DOMINANCE_TOL),
        details: json!({
            "scale": report.scale,
            "grid_points": report.grid.len(),
            "min_gap": report.min_gap,
            "argmin_u": report.argmin_u,
            "tolerance": DOMINANCE_TOL,
        }),
    });

    let at_sharp = sc.dominance_report(sharp, &GridSpec::default())?;
    checks.push(Check {
        name: "tangency",
        passed: at_sharp.tangency_gap.abs() < TANGENCY_TOL,
        details: json!({"u": at_sharp.tangency_u, "gap": at_sharp.tangency_gap, "tolerance": TANGENCY_TOL}),
    });

    let mut sharp_rows = Vec::new();
    let mut sharp_ok = true;
    let curve = EmpiricalCurve::new(&samples)?;
    for f in SHARPNESS_FACTORS {
        let c = f * sharp;
        let witness = sc.sharpness_witness(c);
        let dominated = sc
            .dominance_report(c, &GridSpec::default())?
            .dominates(DOMINANCE_TOL);
        let u = sc.tangency_u(c);
        let est = curve.estimate(u);
        let mc_gap = est.value - sc.comparator_stop_loss(c, u)?;
        let z = mc_gap / est.stderr;
        let ok = if f < 1.0 {
            witness > 0.0 && !dominated && z >= SIGMA_BAND
        } else if f == 1.0 {
            witness.abs() < DOMINANCE_TOL && dominated
        } else {
            witness < 0.0 && dominated
        };
        sharp_ok &= ok;
        sharp_rows.push(json!({
            "factor": f,
            "scale": c,
            "witness": witness,
            "dominated": dominated,
            "mc_gap": mc_gap,
            "mc_stderr": est.stderr,
            "passed": ok,
        }));
    }
    checks.push(Check {
        name: "sharpness",
        passed: sharp_ok,
        details: Value::Array(sharp_rows),
    });

    let saturation = (0..200)
        .map(|i| {
            let t = 6.0 * i as f64 / 199.0;
            (dist.two_sided_tail(t) - dist.envelope().value(t)).abs()
        })
        .fold(0.0, f64::max);
    checks.push(Check {
        name: "extremal_saturation",
        passed: saturation <= 1e-12,
        details: json!({"max_error": saturation, "grid_points": 200}),
    });

    let mean = dist.mean();
    checks.push(Check {
        name: "extremal_mean",
        passed: mean.abs() <= 1e-10,
        details: json!({"mean": mean}),
    });

    let mut sl_rows = Vec::new();
    let mut sl_ok = true;
    for u in [0.0, 1.0, sol.knee(), 3.0] {
        let est = empirical_stop_loss(&samples, u)?;
        let exact = dist.stop_loss(u)?;
        let ok = (est.value - exact).abs() <= SIGMA_BAND * est.stderr;
        sl_ok &= ok;
        sl_rows.push(json!({"u": u, "empirical": est.value, "stderr": est.stderr, "envelope": exact, "passed": ok}));
    }
    checks.push(Check {
        name: "extremal_stop_loss",
        passed: sl_ok,
        details: Value::Array(sl_rows),
    });

    let tail = check_tail_constraint(
        &samples,
        dist.envelope(),
        Probability::new(TAIL_CONFIDENCE)?,
    )?;
    checks.push(Check {
        name: "tail_constraint",
        passed: tail.passed(),
        details: json!({
            "epsilon": tail.epsilon,
            "confidence": tail.confidence,
            "exceedances": tail.exceedances.len(),
            "worst": tail.worst(),
        }),
    });

    let (a, p, param) = (sol.knee(), sol.knee_prob(), sc.tangency_parameter());
    let crude = match family {
        Family::Gaussian => json!({
            "a_above_sqrt2": a > SQRT_2,
            "c0_above_sqrt2": sharp > SQRT_2,
            "p0_below_half": p < 0.5,
            "z_positive": param > 0.0,
        }),
        Family::Exponential => json!({
            "aE_above_t0": a > sol.envelope().t0(),
            "pE_below_half": p < 0.5,
            "wE_positive": param > 0.0,
        }),
    };
    let crude_ok = crude
        .as_object()
        .expect("object")
        .values()
        .all(|v| v == &Value::Bool(true));
    checks.push(Check {
        name: "crude_bounds",
        passed: crude_ok,
        details: crude,
    });

    let mut mills_worst = f64::NEG_INFINITY;
    for i in 1..=1000 {
        let x = i as f64 / 100.0;
        let excess = gaussian_pdf(x)? / gaussian_tail(x)? - (x + 1.0 / x);
        mills_worst = mills_worst.max(excess);
    }
    checks.push(Check {
        name: "mills_ratio",
        passed: mills_worst <= 0.0,
        details: json!({"max_excess": mills_worst, "grid_points": 1000}),
    });

    let ratio = sc.ratio_principle(sharp, GridSpec::MIN_U_MAX, 2000)?;
    checks.push(Check {
        name: "monotone_ratio",
        passed: ratio.d_at_knee >= -DOMINANCE_TOL
            && ratio.first_decrease.is_none()
            && ratio.d_at_end.abs() < 1e-9,
        details: serde_json::to_value(ratio)?,
    });

    let failed: Vec<&'static str> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name)
        .collect();
    Ok(Summary {
        schema_version: SCHEMA_VERSION,
        kind: family.name(),
        scale_factor,
        n,
        seed,
        passed: failed.is_empty(),
        failed,
        checks,
    })
}
