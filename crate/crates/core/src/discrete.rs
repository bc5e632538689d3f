//! Finitely supported laws on the real line.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::pairwise_sum;

/// Probabilities must sum to one within this slack.
pub const PROB_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteLaw {
    points: Vec<f64>,
    probs: Vec<f64>,
}

impl DiscreteLaw {
    pub fn new(points: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        let law = Self { points, probs };
        law.validate()?;
        Ok(law)
    }

    /// Equal mass on `-x` and `x`.
    pub fn symmetric_two_point(x: f64) -> Self {
        Self {
            points: vec![-x, x],
            probs: vec![0.5, 0.5],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::Validation(
                "discrete law has no support points".into(),
            ));
        }
        if self.points.len() != self.probs.len() {
            return Err(Error::Validation(format!(
                "{} support points but {} probabilities",
                self.points.len(),
                self.probs.len()
            )));
        }
        if let Some(x) = self.points.iter().find(|x| !x.is_finite()) {
            return Err(Error::Validation(format!(
                "support point {x} is not finite"
            )));
        }
        if let Some(p) = self.probs.iter().find(|p| !(**p >= 0.0 && **p <= 1.0)) {
            return Err(Error::Validation(format!("probability {p} outside [0, 1]")));
        }
        let total = pairwise_sum(&self.probs);
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::Validation(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(())
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn mean(&self) -> f64 {
        self.expect(|x| x)
    }

    pub fn second_moment(&self) -> f64 {
        self.expect(|x| x * x)
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        let terms: Vec<f64> = self.iter().map(|(x, p)| p * f(x)).collect();
        pairwise_sum(&terms)
    }

    /// `E[(X - u)+]`.
    pub fn stop_loss(&self, u: f64) -> f64 {
        self.expect(|x| (x - u).max(0.0))
    }

    /// `P(X > u)`.
    pub fn upper_tail(&self, u: f64) -> f64 {
        self.iter().filter(|&(x, _)| x > u).map(|(_, p)| p).sum()
    }

    /// `P(|X| > t)`.
    pub fn two_sided_tail(&self, t: f64) -> f64 {
        self.iter()
            .filter(|&(x, _)| x.abs() > t)
            .map(|(_, p)| p)
            .sum()
    }

    /// Distinct support points in increasing order.
    pub fn sorted_support(&self) -> Vec<f64> {
        let mut s = self.points.clone();
        s.sort_by(f64::total_cmp);
        s.dedup();
        s
    }

    /// Inverse-transform map from a uniform in `(0, 1)`.
    pub fn from_uniform(&self, u: f64) -> f64 {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&i, &j| self.points[i].total_cmp(&self.points[j]));
        let mut acc = 0.0;
        for &i in &order {
            acc += self.probs[i];
            if u <= acc {
                return self.points[i];
            }
        }
        self.points[*order.last().expect("nonempty law")]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(DiscreteLaw::new(vec![], vec![]).is_err());
        assert!(DiscreteLaw::new(vec![1.0], vec![0.5, 0.5]).is_err());
        assert!(DiscreteLaw::new(vec![1.0, 2.0], vec![0.5, 0.6]).is_err());
        assert!(DiscreteLaw::new(vec![1.0, f64::NAN], vec![0.5, 0.5]).is_err());
        assert!(DiscreteLaw::new(vec![1.0, 2.0], vec![-0.5, 1.5]).is_err());
        assert!(DiscreteLaw::new(vec![-1.0, 1.0], vec![0.5, 0.5]).is_ok());
    }

    #[test]
    fn two_point_stop_loss() {
        let law = DiscreteLaw::symmetric_two_point(1.0);
        assert_eq!(law.stop_loss(0.0), 0.5);
        assert_eq!(law.stop_loss(1.0), 0.0);
        assert_eq!(law.stop_loss(-3.0), 3.0);
        assert_eq!(law.mean(), 0.0);
        assert_eq!(law.upper_tail(0.0), 0.5);
        assert_eq!(law.two_sided_tail(0.5), 1.0);
    }

    #[test]
    fn uniform_map() {
        let law = DiscreteLaw::new(vec![2.0, -1.0], vec![0.25, 0.75]).unwrap();
        assert_eq!(law.from_uniform(0.1), -1.0);
        assert_eq!(law.from_uniform(0.75), -1.0);
        assert_eq!(law.from_uniform(0.76), 2.0);
    }
}
