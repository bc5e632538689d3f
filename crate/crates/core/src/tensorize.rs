//! Multivariate convex domination from one-dimensional conditional
//! domination.
//!
//! A [`DiscreteMartingaleTree`] describes `X = (X_1, ..., X_d)` through the
//! conditional law of each coordinate given the earlier ones. When every
//! conditional law is convex-dominated by an independent comparator `Y_i`,
//! `E[f(X)] ≤ E[f(Y)]` for every convex `f`. Both sides are computed exactly
//! by enumeration when the comparators are discrete, and by Monte Carlo
//! otherwise.

use serde::{Deserialize, Serialize};

use crate::comparison::{compute_gaussian_comparison, Comparator};
use crate::discrete::DiscreteLaw;
use crate::envelope::EnvelopeKind;
use crate::error::{Error, Result};
use crate::extremal::ExtremalDistribution;
use crate::numerics::{pairwise_sum, MeanEstimate};
use crate::stream::UniformStream;
use crate::verifier::{StopLossCurve, SIGMA_BAND};

/// Slack for conditional mean equality and stop-loss dominance at a node.
pub const NODE_TOL: f64 = 1e-12;
/// Slack for inequalities whose both sides are exact enumerations.
pub const EXACT_SLACK: f64 = 1e-10;

const BLOCK: usize = 4096;

/// One coordinate law `Y_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CoordinateLaw {
    Discrete(DiscreteLaw),
    Gaussian { scale: f64 },
    Laplace { scale: f64 },
}

impl CoordinateLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            CoordinateLaw::Discrete(law) => law.validate(),
            _ => self.analytic().expect("analytic variant").validate(),
        }
    }

    fn analytic(&self) -> Option<Comparator> {
        match *self {
            CoordinateLaw::Discrete(_) => None,
            CoordinateLaw::Gaussian { scale } => Some(Comparator::Gaussian { scale }),
            CoordinateLaw::Laplace { scale } => Some(Comparator::Laplace { scale }),
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, CoordinateLaw::Discrete(_))
    }

    pub fn mean(&self) -> f64 {
        match self {
            CoordinateLaw::Discrete(law) => law.mean(),
            _ => 0.0,
        }
    }

    pub fn stop_loss(&self, u: f64) -> f64 {
        match self {
            CoordinateLaw::Discrete(law) => law.stop_loss(u),
            _ => self.analytic().expect("analytic variant").stop_loss(u),
        }
    }

    pub fn from_uniform(&self, u: f64) -> f64 {
        match self {
            CoordinateLaw::Discrete(law) => law.from_uniform(u),
            _ => self.analytic().expect("analytic variant").from_uniform(u),
        }
    }

    pub fn curve(&self) -> StopLossCurve {
        match self {
            CoordinateLaw::Discrete(law) => StopLossCurve::Discrete(law.clone()),
            _ => StopLossCurve::Comparator(self.analytic().expect("analytic variant")),
        }
    }
}

/// Points at which comparing `E[(X - u)+]` with `E[(Y - u)+]` decides the
/// whole curve.
///
/// `u ↦ E[(Y - u)+] - E[(X - u)+]` is piecewise convex between the support
/// points of `X`. A discrete `Y` adds its own support; a smooth `Y` adds the
/// point of each piece where the slopes match.
pub fn comparison_points(law: &DiscreteLaw, comp: &CoordinateLaw) -> Vec<f64> {
    let support = law.sorted_support();
    let mut pts = support.clone();
    match comp {
        CoordinateLaw::Discrete(y) => pts.extend_from_slice(y.points()),
        _ => {
            let c = comp.analytic().expect("analytic variant");
            for w in support.windows(2) {
                let q = law.upper_tail(w[0]);
                if q > 0.0 && q < 1.0 {
                    let u = c.upper_quantile(q);
                    if u > w[0] && u < w[1] {
                        pts.push(u);
                    }
                }
            }
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    #[serde(flatten)]
    pub law: DiscreteLaw,
    /// One child per support point, in the same order; empty at the last level.
    #[serde(default)]
    pub children: Vec<TreeNode>,
}

impl TreeNode {
    pub fn leaf(law: DiscreteLaw) -> Self {
        Self {
            law,
            children: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMartingaleTree {
    pub depth: usize,
    pub root: TreeNode,
}

impl DiscreteMartingaleTree {
    pub fn new(depth: usize, root: TreeNode) -> Result<Self> {
        let tree = Self { depth, root };
        tree.validate()?;
        Ok(tree)
    }

    /// Independent coordinates with the given laws.
    pub fn product(laws: &[DiscreteLaw]) -> Result<Self> {
        fn build(laws: &[DiscreteLaw]) -> TreeNode {
            let children = if laws.len() > 1 {
                (0..laws[0].len()).map(|_| build(&laws[1..])).collect()
            } else {
                Vec::new()
            };
            TreeNode {
                law: laws[0].clone(),
                children,
            }
        }
        if laws.is_empty() {
            return Err(Error::Validation(
                "product tree needs at least one law".into(),
            ));
        }
        Self::new(laws.len(), build(laws))
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(Error::Validation("tree depth must be at least 1".into()));
        }
        self.walk(|path, level, node| {
            node.law
                .validate()
                .map_err(|e| Error::Validation(format!("node {path}: {e}")))?;
            let expected = if level + 1 < self.depth {
                node.law.len()
            } else {
                0
            };
            if node.children.len() != expected {
                return Err(Error::Validation(format!(
                    "node {path} at level {level} has {} children, expected {expected}",
                    node.children.len()
                )));
            }
            Ok(())
        })
    }

    /// Pre-order traversal with `root/i/j` paths; stops at the first error.
    pub fn walk<F>(&self, mut visit: F) -> Result<()>
    where
        F: FnMut(&str, usize, &TreeNode) -> Result<()>,
    {
        fn rec<F>(node: &TreeNode, path: &mut String, level: usize, visit: &mut F) -> Result<()>
        where
            F: FnMut(&str, usize, &TreeNode) -> Result<()>,
        {
            visit(path, level, node)?;
            for (i, child) in node.children.iter().enumerate() {
                let len = path.len();
                path.push_str(&format!("/{i}"));
                rec(child, path, level + 1, visit)?;
                path.truncate(len);
            }
            Ok(())
        }
        rec(&self.root, &mut String::from("root"), 0, &mut visit)
    }

    pub fn leaf_count(&self) -> usize {
        fn rec(node: &TreeNode) -> usize {
            if node.children.is_empty() {
                node.law.len()
            } else {
                node.children.iter().map(rec).sum()
            }
        }
        rec(&self.root)
    }
}

/// Exact `E[f(X_1, ..., X_d)]` summed over every root-to-leaf path.
pub fn enumerate_expectation(tree: &DiscreteMartingaleTree, f: impl Fn(&[f64]) -> f64) -> f64 {
    fn rec(
        node: &TreeNode,
        weight: f64,
        path: &mut Vec<f64>,
        f: &dyn Fn(&[f64]) -> f64,
        out: &mut Vec<f64>,
    ) {
        for (i, (x, p)) in node.law.iter().enumerate() {
            path.push(x);
            if node.children.is_empty() {
                out.push(weight * p * f(path));
            } else {
                rec(&node.children[i], weight * p, path, f, out);
            }
            path.pop();
        }
    }
    let mut terms = Vec::with_capacity(tree.leaf_count());
    rec(
        &tree.root,
        1.0,
        &mut Vec::with_capacity(tree.depth),
        &f,
        &mut terms,
    );
    pairwise_sum(&terms)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WitnessReason {
    MeanMismatch {
        node_mean: f64,
        comparator_mean: f64,
    },
    StopLoss {
        u: f64,
        node_value: f64,
        comparator_value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceWitness {
    pub node: String,
    pub level: usize,
    pub reason: WitnessReason,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalDominance {
    pub holds: bool,
    pub nodes_checked: usize,
    pub witness: Option<DominanceWitness>,
}

/// Checks one conditional law against one comparator.
pub fn node_dominance(law: &DiscreteLaw, comp: &CoordinateLaw) -> Option<WitnessReason> {
    let (node_mean, comparator_mean) = (law.mean(), comp.mean());
    if (node_mean - comparator_mean).abs() > NODE_TOL {
        return Some(WitnessReason::MeanMismatch {
            node_mean,
            comparator_mean,
        });
    }
    // Report the worst point, not the first.
    comparison_points(law, comp)
        .into_iter()
        .map(|u| (u, law.stop_loss(u), comp.stop_loss(u)))
        .filter(|&(_, x, y)| y - x < -NODE_TOL)
        .min_by(|a, b| (a.2 - a.1).total_cmp(&(b.2 - b.1)))
        .map(
            |(u, node_value, comparator_value)| WitnessReason::StopLoss {
                u,
                node_value,
                comparator_value,
            },
        )
}

/// Checks `X_i | F_{i-1} ⪯cx Y_i` at every node; reports the first failure.
pub fn check_conditional_dominance(
    tree: &DiscreteMartingaleTree,
    comps: &[CoordinateLaw],
) -> Result<ConditionalDominance> {
    tree.validate()?;
    check_comparators(tree, comps)?;
    let mut nodes_checked = 0;
    let mut witness = None;
    let stop = Error::Validation(String::new());
    let walked = tree.walk(|path, level, node| {
        nodes_checked += 1;
        match node_dominance(&node.law, &comps[level]) {
            Some(reason) => {
                witness = Some(DominanceWitness {
                    node: path.to_string(),
                    level,
                    reason,
                });
                Err(stop.clone())
            }
            None => Ok(()),
        }
    });
    debug_assert!(walked.is_ok() || witness.is_some());
    Ok(ConditionalDominance {
        holds: witness.is_none(),
        nodes_checked,
        witness,
    })
}

fn check_comparators(tree: &DiscreteMartingaleTree, comps: &[CoordinateLaw]) -> Result<()> {
    if comps.len() != tree.depth {
        return Err(Error::Validation(format!(
            "tree depth {} but {} comparators",
            tree.depth,
            comps.len()
        )));
    }
    comps.iter().try_for_each(CoordinateLaw::validate)
}

/// Closed catalog of convex test functions on `R^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ConvexFn {
    Max,
    Norm,
    /// `Σ_i (x_i - knot)+`.
    HingeSum {
        knot: f64,
    },
    LogSumExp,
}

impl ConvexFn {
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match *self {
            ConvexFn::Max => x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ConvexFn::Norm => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            ConvexFn::HingeSum { knot } => x.iter().map(|v| (v - knot).max(0.0)).sum(),
            ConvexFn::LogSumExp => {
                let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                m + x.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            ConvexFn::Max => "max".into(),
            ConvexFn::Norm => "norm".into(),
            ConvexFn::HingeSum { knot } => format!("hinge_sum({knot})"),
            ConvexFn::LogSumExp => "log_sum_exp".into(),
        }
    }
}

pub fn default_catalog() -> Vec<ConvexFn> {
    vec![
        ConvexFn::Max,
        ConvexFn::Norm,
        ConvexFn::HingeSum { knot: 0.0 },
        ConvexFn::HingeSum { knot: 0.5 },
        ConvexFn::LogSumExp,
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogRow {
    pub function: String,
    pub lhs: f64,
    pub rhs: f64,
    pub rhs_stderr: f64,
    pub exact: bool,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TensorizationStatus {
    Asserted,
    /// The hypothesis failed, so the rows are informational only.
    Skipped {
        witness: DominanceWitness,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorizationReport {
    pub status: TensorizationStatus,
    pub rows: Vec<CatalogRow>,
    pub notice: Option<String>,
}

impl TensorizationReport {
    pub fn is_asserted(&self) -> bool {
        self.status == TensorizationStatus::Asserted
    }

    /// True unless an asserted inequality fails; skipped checks pass.
    pub fn passed(&self) -> bool {
        !self.is_asserted() || self.rows.iter().all(|r| r.holds)
    }

    /// True when every row satisfies its inequality, asserted or not.
    pub fn all_rows_hold(&self) -> bool {
        self.rows.iter().all(|r| r.holds)
    }
}

/// `E[f(Y)]` for independent coordinates, with standard error.
///
/// Exact when every coordinate is discrete; otherwise `n_mc` draws where
/// coordinate `i` uses stream `i` of `seed`.
pub fn product_expectations(
    comps: &[CoordinateLaw],
    catalog: &[ConvexFn],
    n_mc: usize,
    seed: u64,
) -> Result<Vec<MeanEstimate>> {
    if comps.iter().all(CoordinateLaw::is_discrete) {
        let laws: Vec<DiscreteLaw> = comps
            .iter()
            .map(|c| match c {
                CoordinateLaw::Discrete(l) => l.clone(),
                _ => unreachable!(),
            })
            .collect();
        let product = DiscreteMartingaleTree::product(&laws)?;
        return Ok(catalog
            .iter()
            .map(|f| MeanEstimate {
                mean: enumerate_expectation(&product, |x| f.evaluate(x)),
                stderr: 0.0,
                n: product.leaf_count(),
            })
            .collect());
    }
    if n_mc < 2 {
        return Err(Error::Usage(format!(
            "Monte Carlo needs at least 2 draws, got {n_mc}"
        )));
    }
    let d = comps.len();
    let streams: Vec<UniformStream> = (0..d).map(|i| UniformStream::new(seed, i as u64)).collect();
    let mut values = vec![Vec::with_capacity(n_mc); catalog.len()];
    let mut cols = vec![vec![0.0; BLOCK]; d];
    let mut row = vec![0.0; d];
    let mut start = 0;
    while start < n_mc {
        let len = BLOCK.min(n_mc - start);
        for (i, col) in cols.iter_mut().enumerate() {
            streams[i].fill(start as u64, &mut col[..len]);
        }
        for k in 0..len {
            for ((r, comp), col) in row.iter_mut().zip(comps).zip(&cols) {
                *r = comp.from_uniform(col[k]);
            }
            for (f, v) in catalog.iter().zip(values.iter_mut()) {
                v.push(f.evaluate(&row));
            }
        }
        start += len;
    }
    Ok(values
        .iter()
        .map(|v| MeanEstimate::from_values(v).expect("n_mc >= 2"))
        .collect())
}

/// Compares `E[f(X)]` and `E[f(Y)]` for every catalog function.
///
/// Rows are always computed. If the conditional hypothesis fails the report
/// is marked skipped and carries the witness instead of asserting.
pub fn tensorization_check(
    tree: &DiscreteMartingaleTree,
    comps: &[CoordinateLaw],
    catalog: &[ConvexFn],
    n_mc: usize,
    seed: u64,
) -> Result<TensorizationReport> {
    let dominance = check_conditional_dominance(tree, comps)?;
    let rhs = product_expectations(comps, catalog, n_mc, seed)?;
    let exact = comps.iter().all(CoordinateLaw::is_discrete);
    let rows = catalog
        .iter()
        .zip(rhs)
        .map(|(f, r)| {
            let lhs = enumerate_expectation(tree, |x| f.evaluate(x));
            let slack = if exact {
                EXACT_SLACK
            } else {
                SIGMA_BAND * r.stderr
            };
            CatalogRow {
                function: f.name(),
                lhs,
                rhs: r.mean,
                rhs_stderr: r.stderr,
                exact,
                holds: lhs <= r.mean + slack,
            }
        })
        .collect();
    let (status, notice) = match dominance.witness {
        None => (TensorizationStatus::Asserted, None),
        Some(w) => {
            let notice = format!(
                "conditional domination fails at node {}; check skipped",
                w.node
            );
            (TensorizationStatus::Skipped { witness: w }, Some(notice))
        }
    };
    Ok(TensorizationReport {
        status,
        rows,
        notice,
    })
}

/// A tree together with its comparators; the JSON document format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorizeInstance {
    #[serde(flatten)]
    pub tree: DiscreteMartingaleTree,
    pub comparators: Vec<CoordinateLaw>,
}

impl TensorizeInstance {
    pub fn validate(&self) -> Result<()> {
        self.tree.validate()?;
        check_comparators(&self.tree, &self.comparators)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: Self = serde_json::from_str(text)
            .map_err(|e| Error::Validation(format!("malformed tree document: {e}")))?;
        inst.validate()?;
        Ok(inst)
    }
}

struct Draws {
    stream: UniformStream,
    pos: u64,
}

impl Draws {
    fn new(seed: u64, stream: u64) -> Self {
        Self {
            stream: UniformStream::new(seed, stream),
            pos: 0,
        }
    }

    fn next(&mut self) -> f64 {
        self.pos += 1;
        self.stream.uniform_at(self.pos - 1)
    }

    fn below(&mut self, n: usize) -> usize {
        ((self.next() * n as f64) as usize).min(n - 1)
    }
}

/// Mean-zero law with 2 to 4 atoms in `[-2, 2]`.
fn random_centered_law(draws: &mut Draws) -> DiscreteLaw {
    let k = 2 + draws.below(3);
    let raw: Vec<f64> = (0..k).map(|_| 4.0 * draws.next() - 2.0).collect();
    let w: Vec<f64> = (0..k).map(|_| 0.05 + draws.next()).collect();
    let total: f64 = w.iter().sum();
    let probs: Vec<f64> = w.iter().map(|x| x / total).collect();
    let m = pairwise_sum(
        &raw.iter()
            .zip(&probs)
            .map(|(x, p)| x * p)
            .collect::<Vec<_>>(),
    );
    let points = raw.iter().map(|x| x - m).collect();
    DiscreteLaw::new(points, probs).expect("normalized weights")
}

/// `E[Y | cluster]` for a random soft clustering of the atoms of `y`; the
/// result is convex-dominated by `y`.
fn random_contraction(y: &DiscreteLaw, draws: &mut Draws) -> DiscreteLaw {
    let m = 2 + draws.below(2);
    let mut mass = vec![0.0; m];
    let mut first = vec![0.0; m];
    for (yj, qj) in y.iter() {
        let k: Vec<f64> = (0..m).map(|_| 0.05 + draws.next()).collect();
        let total: f64 = k.iter().sum();
        for i in 0..m {
            let w = qj * k[i] / total;
            mass[i] += w;
            first[i] += w * yj;
        }
    }
    let points = first.iter().zip(&mass).map(|(f, p)| f / p).collect();
    let total: f64 = mass.iter().sum();
    let probs = mass.iter().map(|p| p / total).collect();
    DiscreteLaw::new(points, probs).expect("positive cluster masses")
}

fn scaled(law: &DiscreteLaw, factor: f64) -> DiscreteLaw {
    DiscreteLaw::new(
        law.points().iter().map(|x| x * factor).collect(),
        law.probs().to_vec(),
    )
    .expect("scaling keeps a valid law")
}

/// How random node laws relate to their comparators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    /// Every node is a conditional expectation of its comparator.
    Dominated,
    /// Every node is its comparator stretched by a factor in `[1.2, 2]`.
    Spread,
    /// Contractions multiplied by a factor in `[1, 2]`; may go either way.
    Mixed,
}

/// Seeded random instance with discrete comparators.
///
/// `index` selects an independent stream so instances can be generated in
/// any order.
pub fn random_instance(
    seed: u64,
    index: u64,
    depth: usize,
    kind: InstanceKind,
) -> Result<TensorizeInstance> {
    if depth == 0 {
        return Err(Error::Usage("depth must be at least 1".into()));
    }
    let mut draws = Draws::new(seed, index);
    let comps: Vec<DiscreteLaw> = (0..depth)
        .map(|_| random_centered_law(&mut draws))
        .collect();
    fn node(
        level: usize,
        comps: &[DiscreteLaw],
        kind: InstanceKind,
        draws: &mut Draws,
    ) -> TreeNode {
        let y = &comps[level];
        let law = match kind {
            InstanceKind::Dominated => random_contraction(y, draws),
            InstanceKind::Spread => scaled(y, 1.2 + 0.8 * draws.next()),
            InstanceKind::Mixed => {
                let c = random_contraction(y, draws);
                scaled(&c, 1.0 + draws.next())
            }
        };
        let children = if level + 1 < comps.len() {
            (0..law.len())
                .map(|_| node(level + 1, comps, kind, draws))
                .collect()
        } else {
            Vec::new()
        };
        TreeNode { law, children }
    }
    let root = node(0, &comps, kind, &mut draws);
    Ok(TensorizeInstance {
        tree: DiscreteMartingaleTree::new(depth, root)?,
        comparators: comps.into_iter().map(CoordinateLaw::Discrete).collect(),
    })
}

/// Equal-mass discretization of the extremal law: each of `cells` quantile
/// cells collapses to its conditional mean, so the result is
/// convex-dominated by the extremal law.
pub fn discretize_extremal(dist: &ExtremalDistribution, cells: usize) -> Result<DiscreteLaw> {
    if cells < 2 {
        return Err(Error::Usage("discretization needs at least 2 cells".into()));
    }
    // E[X; X > Q(p)] = E[(X - Q(p))+] + Q(p) (1 - p).
    let partial = |k: usize| -> f64 {
        if k == 0 || k == cells {
            return 0.0;
        }
        let p = k as f64 / cells as f64;
        let x = dist.quantile_unchecked(p);
        dist.stop_loss_full(x) + x * (1.0 - p)
    };
    let w = 1.0 / cells as f64;
    let mut points: Vec<f64> = (0..cells)
        .map(|k| (partial(k) - partial(k + 1)) / w)
        .collect();
    let m = pairwise_sum(&points) / cells as f64;
    points.iter_mut().for_each(|x| *x -= m);
    DiscreteLaw::new(points, vec![w; cells])
}

/// Kernel of a ridge term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RidgeKernel {
    Hinge { knot: f64 },
    Abs,
    Square,
}

impl RidgeKernel {
    pub fn evaluate(&self, t: f64) -> f64 {
        match *self {
            RidgeKernel::Hinge { knot } => (t - knot).max(0.0),
            RidgeKernel::Abs => t.abs(),
            RidgeKernel::Square => t * t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeTerm {
    pub lambda: f64,
    pub u: Vec<f64>,
    pub phi: RidgeKernel,
}

/// `b + <a_vec, x> + Σ λ_k φ_k(<u_k, x>)` with `λ_k ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeFunction {
    pub b: f64,
    pub a_vec: Vec<f64>,
    pub terms: Vec<RidgeTerm>,
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

impl RidgeFunction {
    /// A single term with no affine part.
    pub fn single(u: Vec<f64>, phi: RidgeKernel) -> Self {
        Self {
            b: 0.0,
            a_vec: vec![0.0; u.len()],
            terms: vec![RidgeTerm {
                lambda: 1.0,
                u,
                phi,
            }],
        }
    }

    pub fn dim(&self) -> usize {
        self.a_vec.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        for (k, t) in self.terms.iter().enumerate() {
            if !(t.lambda >= 0.0) || !t.lambda.is_finite() {
                return Err(Error::Validation(format!(
                    "term {k}: weight {} must be nonnegative",
                    t.lambda
                )));
            }
            if t.u.len() != d {
                return Err(Error::Validation(format!(
                    "term {k}: direction has dimension {}, expected {d}",
                    t.u.len()
                )));
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.b
            + dot(&self.a_vec, x)
            + self
                .terms
                .iter()
                .map(|t| t.lambda * t.phi.evaluate(dot(&t.u, x)))
                .sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RidgeRow {
    pub name: String,
    pub lhs: f64,
    pub lhs_stderr: f64,
    pub rhs: f64,
    pub rhs_stderr: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RidgeReport {
    pub dim: usize,
    pub n: usize,
    pub seed: u64,
    pub scale: f64,
    pub direction: Vec<f64>,
    pub notice: Option<String>,
    pub rows: Vec<RidgeRow>,
}

impl RidgeReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.holds)
    }
}

/// Rank-one `X = θ v` with `θ` the sub-Gaussian extremal law, against
/// `c0 G` in `R^d`, for each named ridge function.
///
/// `θ` uses stream 0 of `seed`; Gaussian coordinate `i` uses stream `i + 1`.
pub fn ridge_mc_suite(
    direction: &[f64],
    functions: &[(String, RidgeFunction)],
    n: usize,
    seed: u64,
) -> Result<RidgeReport> {
    let d = direction.len();
    if d == 0 {
        return Err(Error::Usage(
            "direction must have at least one coordinate".into(),
        ));
    }
    if n < 2 {
        return Err(Error::Usage(format!(
            "ridge check needs at least 2 draws, got {n}"
        )));
    }
    let norm = dot(direction, direction).sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Usage(
            "direction must be a finite nonzero vector".into(),
        ));
    }
    let notice = ((norm - 1.0).abs() > 1e-12)
        .then(|| format!("direction had norm {norm}; normalized to unit length"));
    let v: Vec<f64> = direction.iter().map(|x| x / norm).collect();
    for (name, f) in functions {
        f.validate()?;
        if f.dim() != d {
            return Err(Error::Usage(format!(
                "ridge function {name} has dimension {}, expected {d}",
                f.dim()
            )));
        }
    }

    let scale = compute_gaussian_comparison()?.c0;
    let gauss = Comparator::Gaussian { scale };
    let extremal = ExtremalDistribution::for_kind(EnvelopeKind::SubGaussian)?;
    let theta_stream = UniformStream::new(seed, 0);
    let g_streams: Vec<UniformStream> = (0..d)
        .map(|i| UniformStream::new(seed, i as u64 + 1))
        .collect();

    let mut lhs = vec![Vec::with_capacity(n); functions.len()];
    let mut rhs = vec![Vec::with_capacity(n); functions.len()];
    let mut theta = vec![0.0; BLOCK];
    let mut cols = vec![vec![0.0; BLOCK]; d];
    let (mut x, mut y) = (vec![0.0; d], vec![0.0; d]);
    let mut start = 0;
    while start < n {
        let len = BLOCK.min(n - start);
        theta_stream.fill(start as u64, &mut theta[..len]);
        for (s, col) in g_streams.iter().zip(cols.iter_mut()) {
            s.fill(start as u64, &mut col[..len]);
        }
        for k in 0..len {
            let t = extremal.quantile_unchecked(theta[k]);
            for i in 0..d {
                x[i] = t * v[i];
                y[i] = gauss.from_uniform(cols[i][k]);
            }
            for (j, (_, f)) in functions.iter().enumerate() {
                lhs[j].push(f.evaluate(&x));
                rhs[j].push(f.evaluate(&y));
            }
        }
        start += len;
    }

    let rows = functions
        .iter()
        .zip(lhs.iter().zip(&rhs))
        .map(|((name, _), (l, r))| {
            let l = MeanEstimate::from_values(l).expect("n >= 2");
            let r = MeanEstimate::from_values(r).expect("n >= 2");
            RidgeRow {
                name: name.clone(),
                lhs: l.mean,
                lhs_stderr: l.stderr,
                rhs: r.mean,
                rhs_stderr: r.stderr,
                holds: l.mean <= r.mean + SIGMA_BAND * l.stderr.hypot(r.stderr),
            }
        })
        .collect();
    Ok(RidgeReport {
        dim: d,
        n,
        seed,
        scale,
        direction: v,
        notice,
        rows,
    })
}

/// Single-function form of [`ridge_mc_suite`].
pub fn ridge_mc_check(
    direction: &[f64],
    f: &RidgeFunction,
    n: usize,
    seed: u64,
) -> Result<RidgeReport> {
    ridge_mc_suite(direction, &[("ridge".to_string(), f.clone())], n, seed)
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = dot(&v, &v).sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// A unit vector orthogonal to the unit vector `v` (requires `d ≥ 2`).
pub fn orthogonal_unit(v: &[f64]) -> Result<Vec<f64>> {
    if v.len() < 2 {
        return Err(Error::Usage(
            "an orthogonal direction needs dimension at least 2".into(),
        ));
    }
    let k = (0..v.len())
        .min_by(|&i, &j| v[i].abs().total_cmp(&v[j].abs()))
        .expect("nonempty");
    let mut e: Vec<f64> = v.iter().map(|vi| -v[k] * vi).collect();
    e[k] += 1.0;
    Ok(unit(e))
}

/// The ridge test catalog for a unit direction `v` in dimension `d ≥ 2`.
pub fn ridge_catalog(v: &[f64]) -> Result<Vec<(String, RidgeFunction)>> {
    let d = v.len();
    let v = unit(v.to_vec());
    let gc = compute_gaussian_comparison()?;
    let ortho = orthogonal_unit(&v)?;
    let mut e0 = vec![0.0; d];
    e0[0] = 1.0;
    let mut e1 = vec![0.0; d];
    e1[1] = 1.0;
    let oblique = unit(v.iter().zip(&e0).map(|(a, b)| a + b).collect());
    let ramp = unit((1..=d).map(|i| i as f64).collect());
    let neg_v: Vec<f64> = v.iter().map(|x| -x).collect();
    let mut a_vec = vec![0.0; d];
    a_vec[0] = 0.3;
    a_vec[1] = -0.2;
    let mixture = RidgeFunction {
        b: 1.0,
        a_vec,
        terms: vec![
            RidgeTerm {
                lambda: 0.5,
                u: e0,
                phi: RidgeKernel::Hinge { knot: 1.0 },
            },
            RidgeTerm {
                lambda: 2.0,
                u: e1,
                phi: RidgeKernel::Abs,
            },
            RidgeTerm {
                lambda: 0.25,
                u: ramp,
                phi: RidgeKernel::Square,
            },
            RidgeTerm {
                lambda: 1.0,
                u: neg_v,
                phi: RidgeKernel::Hinge { knot: -0.5 },
            },
        ],
    };
    Ok(vec![
        (
            "hinge_at_tangency".into(),
            RidgeFunction::single(v.clone(), RidgeKernel::Hinge { knot: gc.c0 * gc.z }),
        ),
        (
            "abs_along".into(),
            RidgeFunction::single(v.clone(), RidgeKernel::Abs),
        ),
        (
            "square_along".into(),
            RidgeFunction::single(v.clone(), RidgeKernel::Square),
        ),
        (
            "abs_orthogonal".into(),
            RidgeFunction::single(ortho, RidgeKernel::Abs),
        ),
        (
            "hinge_oblique".into(),
            RidgeFunction::single(oblique, RidgeKernel::Hinge { knot: 0.5 }),
        ),
        ("mixture".into(), mixture),
    ])
}
