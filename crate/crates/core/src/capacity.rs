//! Rate regions, polymatroid structure and capacity optimization.
//!
//! The achievable region for an input distribution `p` is
//! `{ R : Σ_{ℓ∈T} R_ℓ ≤ H(X_T|Y) for all T }`. Its sum-rate face is reached
//! at the greedy corners of the set function `T ↦ H(X_T|Y)`. Capacities are
//! maximizations of concave conditional entropies over the simplex, done by
//! projected-gradient ascent with random restarts.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::channel::{non_redundancy_check, unflatten_index, BroadcastChannel, Dmc, MacChannel};
use crate::error::{Error, Result};
use crate::infotheory::{entropy_of, Pmf, Subset, PMF_TOLERANCE};

/// Slack on every region and polymatroid inequality.
pub const REGION_TOLERANCE: f64 = 1e-9;
/// Local search stops once a step gains less than this.
pub const IMPROVEMENT_TOLERANCE: f64 = 1e-10;
/// Optima closer than this are treated as ties.
pub const TIE_RESOLUTION: f64 = 1e-9;

const PROB_FLOOR: f64 = 1e-300;
const ARMIJO: f64 = 1e-4;
const MAX_EXHAUSTIVE_USERS: usize = 10;
const GRID_BUDGET: u64 = 100_000;

/// Real-valued function on subsets of `L` users.
#[derive(Debug, Clone, PartialEq)]
pub struct SetFunction {
    users: usize,
    values: Vec<f64>,
}

impl SetFunction {
    /// `values[mask]` is the value on the subset with bitmask `mask`.
    pub fn new(users: usize, values: Vec<f64>) -> Result<Self> {
        if users == 0 || users > 16 {
            return Err(Error::InvalidParameter(format!("{users} users")));
        }
        if values.len() != 1 << users {
            return Err(Error::DimensionMismatch { expected: 1 << users, found: values.len() });
        }
        Ok(SetFunction { users, values })
    }

    pub fn from_fn(users: usize, f: impl Fn(Subset) -> f64) -> Result<Self> {
        if users == 0 || users > 16 {
            return Err(Error::InvalidParameter(format!("{users} users")));
        }
        Ok(SetFunction { users, values: Subset::all(users).map(f).collect() })
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn get(&self, t: Subset) -> f64 {
        self.values[t.0 as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolymatroidViolation {
    NotNormalized(f64),
    NotMonotone { smaller: Subset, larger: Subset, drop: f64 },
    NotSubmodular { u: Subset, v: Subset, excess: f64 },
    TooManyUsers(usize),
}

impl fmt::Display for PolymatroidViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NotNormalized(v) => write!(f, "f(∅) = {v} is not 0"),
            Self::NotMonotone { smaller, larger, drop } => {
                write!(f, "f({smaller}) exceeds f({larger}) by {drop}")
            }
            Self::NotSubmodular { u, v, excess } => {
                write!(f, "f({u}∪{v}) + f({u}∩{v}) exceeds f({u}) + f({v}) by {excess}")
            }
            Self::TooManyUsers(l) => write!(f, "exhaustive check limited to {MAX_EXHAUSTIVE_USERS} users, got {l}"),
        }
    }
}

/// Exhaustive check of normalization, monotonicity and submodularity.
pub fn verify_polymatroid(f: &SetFunction) -> std::result::Result<(), PolymatroidViolation> {
    let l = f.users;
    if l > MAX_EXHAUSTIVE_USERS {
        return Err(PolymatroidViolation::TooManyUsers(l));
    }
    let empty = f.get(Subset::EMPTY);
    if empty.abs() > REGION_TOLERANCE {
        return Err(PolymatroidViolation::NotNormalized(empty));
    }
    for t in Subset::all(l) {
        // proper subsets of t, enumerated as submasks
        let mut s = t.0;
        while s != 0 {
            s = (s - 1) & t.0;
            let drop = f.get(Subset(s)) - f.get(t);
            if drop > REGION_TOLERANCE {
                return Err(PolymatroidViolation::NotMonotone { smaller: Subset(s), larger: t, drop });
            }
        }
    }
    for u in Subset::all(l) {
        for v in Subset::all(l).filter(|v| v.0 > u.0) {
            let excess = f.get(u.union(v)) + f.get(u.intersection(v)) - f.get(u) - f.get(v);
            if excess > REGION_TOLERANCE {
                return Err(PolymatroidViolation::NotSubmodular { u, v, excess });
            }
        }
    }
    Ok(())
}

/// Greedy vertex for the order `perm`: user `perm[k]` receives
/// `f({perm[k], …, perm[L-1]}) − f({perm[k+1], …, perm[L-1]})`.
/// Rates are returned indexed by user.
pub fn corner_point(f: &SetFunction, perm: &[usize]) -> Result<Vec<f64>> {
    let l = f.users;
    let mut seen = vec![false; l];
    if perm.len() != l || perm.iter().any(|&u| u >= l || std::mem::replace(&mut seen[u], true)) {
        return Err(Error::InvalidParameter(format!("{perm:?} is not a permutation of {l} users")));
    }
    verify_polymatroid(f).map_err(|v| Error::NotPolymatroid(v.to_string()))?;
    let mut rates = vec![0.0; l];
    let mut tail = Subset::EMPTY;
    for &u in perm.iter().rev() {
        let grown = tail.union(Subset::singleton(u));
        rates[u] = f.get(grown) - f.get(tail);
        tail = grown;
    }
    Ok(rates)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    /// Any joint law on the product alphabet.
    Joint,
    /// Independent inputs.
    Product,
}

/// Input law of a MAC over its flattened product alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct InputDistribution {
    sizes: Vec<usize>,
    joint: Pmf,
    constraint: Constraint,
}

impl InputDistribution {
    pub fn joint(sizes: Vec<usize>, joint: Pmf) -> Result<Self> {
        let product: usize = sizes.iter().product();
        if sizes.is_empty() || joint.len() != product {
            return Err(Error::DimensionMismatch { expected: product, found: joint.len() });
        }
        Ok(InputDistribution { sizes, joint, constraint: Constraint::Joint })
    }

    pub fn product(factors: &[Pmf]) -> Result<Self> {
        let Some(first) = factors.first() else {
            return Err(Error::InvalidParameter("no input factors".into()));
        };
        let joint = factors[1..].iter().fold(first.clone(), |acc, f| acc.product(f));
        Ok(InputDistribution {
            sizes: factors.iter().map(Pmf::len).collect(),
            joint,
            constraint: Constraint::Product,
        })
    }

    /// Flags an existing joint law as a product, checking that it factors.
    pub fn flagged_product(sizes: Vec<usize>, joint: Pmf) -> Result<Self> {
        let d = InputDistribution::joint(sizes, joint)?;
        let factored = InputDistribution::product(&d.marginals())?;
        let gap = d.joint.probs().iter().zip(factored.joint.probs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if gap > PMF_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("joint law is {gap} away from the product of its marginals")));
        }
        Ok(InputDistribution { constraint: Constraint::Product, ..d })
    }

    pub fn uniform(sizes: Vec<usize>, constraint: Constraint) -> Result<Self> {
        let factors = sizes.iter().map(|k| Pmf::uniform(*k)).collect::<Result<Vec<_>>>()?;
        let d = InputDistribution::product(&factors)?;
        Ok(InputDistribution { constraint, ..d })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn users(&self) -> usize {
        self.sizes.len()
    }

    pub fn joint_pmf(&self) -> &Pmf {
        &self.joint
    }

    pub fn constraint(&self) -> Constraint {
        self.constraint
    }

    pub fn marginal(&self, user: usize) -> Pmf {
        let mut m = vec![0.0; self.sizes[user]];
        for (i, p) in self.joint.probs().iter().enumerate() {
            m[unflatten_index(&self.sizes, i)[user]] += p;
        }
        Pmf::from_weights(&m).expect("marginal of a distribution")
    }

    pub fn marginals(&self) -> Vec<Pmf> {
        (0..self.users()).map(|u| self.marginal(u)).collect()
    }
}

/// A region `{R : R_T ≤ f(T)}` together with the input law generating `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRegionSpec {
    pub f: SetFunction,
    pub input: InputDistribution,
}

impl RateRegionSpec {
    pub fn new(m: &MacChannel, input: InputDistribution) -> Result<Self> {
        Ok(RateRegionSpec { f: entropy_set_function(m, &input)?, input })
    }
}

/// `T ↦ H(X_T|Y)` under the joint law `p(x_L) W(y|x_L)`.
pub fn entropy_set_function(m: &MacChannel, p: &InputDistribution) -> Result<SetFunction> {
    if p.sizes() != m.input_sizes() {
        return Err(Error::DimensionMismatch { expected: m.product_size(), found: p.joint.len() });
    }
    let sizes = m.input_sizes();
    let ny = m.output_size();
    let q: Vec<f64> = (0..m.product_size())
        .flat_map(|x| m.flat().row(x).iter().map(move |w| (x, *w)))
        .map(|(x, w)| p.joint.get(x) * w)
        .collect();
    let mut qy = vec![0.0; ny];
    for (i, v) in q.iter().enumerate() {
        qy[i % ny] += v;
    }
    let h_y = entropy_of(&qy);
    let l = m.users();
    // H(X_T|Y) = H(X_T, Y) − H(Y)
    SetFunction::from_fn(l, |t| {
        let keep: Vec<usize> = t.users().collect();
        let kept_size: usize = keep.iter().map(|u| sizes[*u]).product();
        let mut marg = vec![0.0; kept_size * ny];
        for x in 0..m.product_size() {
            let symbols = unflatten_index(sizes, x);
            let k = keep.iter().fold(0, |acc, u| acc * sizes[*u] + symbols[*u]);
            for y in 0..ny {
                marg[k * ny + y] += q[x * ny + y];
            }
        }
        (entropy_of(&marg) - h_y).max(0.0)
    })
}

/// `R_T ≤ f(T)` for every `T`, within [`REGION_TOLERANCE`].
pub fn in_region(rates: &[f64], spec: &RateRegionSpec) -> Result<bool> {
    let l = spec.f.users();
    if rates.len() != l {
        return Err(Error::DimensionMismatch { expected: l, found: rates.len() });
    }
    Ok(Subset::nonempty(l).all(|t| t.users().map(|u| rates[u]).sum::<f64>() <= spec.f.get(t) + REGION_TOLERANCE))
}

/// `H(X|Y)` for input law `p` on `w`.
pub fn equivocation(w: &Dmc, p: &Pmf) -> Result<f64> {
    if p.len() != w.input_size() {
        return Err(Error::DimensionMismatch { expected: w.input_size(), found: p.len() });
    }
    Ok(equivocation_and_gradient(w, p.probs()).0)
}

/// `H(X|Y)` and its gradient `−log p(x) − Σ_y W(y|x) log(W(y|x)/q(y))`.
fn equivocation_and_gradient(w: &Dmc, p: &[f64]) -> (f64, Vec<f64>) {
    let q = w.mix_rows(p);
    let mut value = 0.0;
    let mut grad = vec![0.0; p.len()];
    for (x, row) in w.rows().enumerate() {
        let mut g = -p[x].max(PROB_FLOOR).log2();
        for (y, wy) in row.iter().enumerate() {
            if *wy > 0.0 && q[y] > 0.0 {
                g -= wy * (wy / q[y]).log2();
                let joint = p[x] * wy;
                if joint > 0.0 {
                    value -= joint * (joint / q[y]).log2();
                }
            }
        }
        grad[x] = g;
    }
    (value.max(0.0), grad)
}

/// Euclidean projection onto the probability simplex.
fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, ui) in u.iter().enumerate() {
        cumulative += ui;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    let mut out: Vec<f64> = v.iter().map(|x| (x - theta).max(0.0)).collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|x| *x /= total);
    out
}

/// Value and (super)gradient at a point of the simplex.
type Objective<'a> = dyn Fn(&[f64]) -> (f64, Vec<f64>) + Sync + 'a;

/// Projected (super)gradient ascent with Armijo backtracking.
fn ascend(objective: &Objective, start: Vec<f64>, max_iterations: usize) -> (f64, Vec<f64>) {
    let mut x = start;
    let (mut value, mut grad) = objective(&x);
    let mut alpha = 1.0;
    for _ in 0..max_iterations {
        let step = loop {
            let moved: Vec<f64> = x.iter().zip(&grad).map(|(a, g)| a + alpha * g).collect();
            let candidate = project_to_simplex(&moved);
            let (cv, cg) = objective(&candidate);
            let predicted: f64 = grad.iter().zip(&candidate).zip(&x).map(|((g, c), a)| g * (c - a)).sum();
            if cv >= value + ARMIJO * predicted {
                break Some((candidate, cv, cg));
            }
            alpha *= 0.5;
            if alpha < 1e-20 {
                break None;
            }
        };
        let Some((candidate, cv, cg)) = step else { break };
        let gain = cv - value;
        x = candidate;
        value = cv;
        grad = cg;
        alpha = (alpha * 2.0).min(1e6);
        if gain < IMPROVEMENT_TOLERANCE {
            break;
        }
    }
    (value, x)
}

/// Deterministic ordering of candidate optima: higher value wins; values
/// within [`TIE_RESOLUTION`] fall back to the lexicographically smaller point.
fn better(a: &(f64, Vec<f64>), b: &(f64, Vec<f64>)) -> bool {
    if (a.0 - b.0).abs() > TIE_RESOLUTION {
        return a.0 > b.0;
    }
    for (x, y) in a.1.iter().zip(&b.1) {
        if (x - y).abs() > TIE_RESOLUTION {
            return x < y;
        }
    }
    false
}

fn best_of(candidates: impl IntoIterator<Item = (f64, Vec<f64>)>) -> (f64, Vec<f64>) {
    candidates
        .into_iter()
        .reduce(|best, c| if better(&c, &best) { c } else { best })
        .expect("at least one candidate")
}

fn random_simplex_point<R: Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..dim).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = e.iter().sum();
    e.iter().map(|v| v / total).collect()
}

fn restart_rng(seed: u64, restart: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub seed: u64,
    pub max_iterations: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig { restarts: 20, seed: 0, max_iterations: 20_000 }
    }
}

impl OptimizerConfig {
    fn product_default() -> Self {
        OptimizerConfig { restarts: 50, ..Self::default() }
    }
}

/// Multistart maximization over the simplex of dimension `dim`; restart 0
/// starts at the uniform point.
fn maximize_on_simplex(
    dim: usize,
    objective: &Objective,
    config: &OptimizerConfig,
) -> (f64, Vec<f64>) {
    let runs: Vec<(f64, Vec<f64>)> = crate::install(|| {
        (0..config.restarts.max(1))
            .into_par_iter()
            .map(|r| {
                let start = if r == 0 {
                    vec![1.0 / dim as f64; dim]
                } else {
                    random_simplex_point(dim, &mut restart_rng(config.seed, r))
                };
                ascend(objective, start, config.max_iterations)
            })
            .collect()
    });
    let (_, x) = best_of(runs);
    (objective(&x).0, x)
}

/// Every point of the simplex with coordinates in multiples of `1/steps`.
pub fn simplex_grid(dim: usize, steps: u32) -> impl Iterator<Item = Vec<f64>> {
    let mut current = vec![0u32; dim];
    if dim > 0 {
        current[dim - 1] = steps;
    }
    let mut done = dim == 0;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let point = current.iter().map(|c| *c as f64 / steps as f64).collect();
        // next composition in lexicographic order on the first dim-1 coordinates
        done = true;
        for i in (0..dim.saturating_sub(1)).rev() {
            let used: u32 = current[..=i].iter().sum();
            if used < steps {
                current[i] += 1;
                for c in current[i + 1..dim - 1].iter_mut() {
                    *c = 0;
                }
                current[dim - 1] = steps - current[..dim - 1].iter().sum::<u32>();
                done = false;
                break;
            }
        }
        Some(point)
    })
}

fn grid_size(dim: usize, steps: u32) -> u64 {
    // C(steps + dim − 1, dim − 1), saturating
    let mut acc: u64 = 1;
    for i in 1..dim as u64 {
        acc = acc.saturating_mul(steps as u64 + i) / i;
    }
    acc
}

/// Largest step count up to `max_steps` whose simplex grid fits the budget.
fn affordable_steps(dim: usize, max_steps: u32, budget: u64) -> Option<u32> {
    (1..=max_steps).rev().find(|s| grid_size(dim, *s) <= budget).filter(|s| *s >= 10)
}

/// Brute-force maximum of `f` over [`simplex_grid`].
pub fn grid_maximize(dim: usize, steps: u32, f: impl Fn(&[f64]) -> f64) -> (f64, Vec<f64>) {
    best_of(simplex_grid(dim, steps).map(|p| (f(&p), p)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult {
    pub value: f64,
    /// Maximizing law over the (flattened) input alphabet.
    pub argmax: Pmf,
    /// Per-user factors when the optimization ran over product laws.
    pub factors: Option<Vec<Pmf>>,
    /// Best value found on the cross-check grid, when one was run.
    pub grid_value: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Collusion {
    Colluding,
    NonColluding,
}

impl fmt::Display for Collusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Collusion::Colluding => "colluding",
            Collusion::NonColluding => "non-colluding",
        })
    }
}

/// `max_p H(X|Y)`.
pub fn point_to_point_capacity(w: &Dmc) -> CapacityResult {
    point_to_point_capacity_with(w, &OptimizerConfig::default())
}

pub fn point_to_point_capacity_with(w: &Dmc, config: &OptimizerConfig) -> CapacityResult {
    let (value, x) = maximize_on_simplex(w.input_size(), &|p| equivocation_and_gradient(w, p), config);
    CapacityResult {
        value,
        argmax: Pmf::from_weights(&x).expect("simplex point"),
        factors: None,
        grid_value: None,
        warnings: redundancy_warning(w, "channel"),
    }
}

fn redundancy_warning(w: &Dmc, what: &str) -> Vec<String> {
    let report = non_redundancy_check(w);
    if report.non_redundant {
        Vec::new()
    } else {
        let input = report.witness.map(|r| r.input.to_string()).unwrap_or_default();
        vec![format!("{what} is redundant (input {input} is a mixture of the others); the capacity formula does not apply")]
    }
}

/// Sum-rate capacity: over all joint laws when colluding, over product
/// laws otherwise.
pub fn sum_rate_capacity(m: &MacChannel, mode: Collusion) -> CapacityResult {
    match mode {
        Collusion::Colluding => sum_rate_capacity_with(m, mode, &OptimizerConfig::default()),
        Collusion::NonColluding => sum_rate_capacity_with(m, mode, &OptimizerConfig::product_default()),
    }
}

pub fn sum_rate_capacity_with(m: &MacChannel, mode: Collusion, config: &OptimizerConfig) -> CapacityResult {
    let mut result = match mode {
        Collusion::Colluding => point_to_point_capacity_with(m.flat(), config),
        Collusion::NonColluding => product_capacity(m, config),
    };
    result.warnings = redundancy_warning(m.flat(), "multiple access channel");
    result
}

fn kron(factors: &[Vec<f64>]) -> Vec<f64> {
    factors.iter().fold(vec![1.0], |acc, f| acc.iter().flat_map(|a| f.iter().map(move |b| a * b)).collect())
}

/// Objective and gradient with respect to factor `user`, others held fixed.
fn factor_objective(m: &MacChannel, factors: &[Vec<f64>], user: usize, pu: &[f64]) -> (f64, Vec<f64>) {
    let sizes = m.input_sizes();
    let mut fs = factors.to_vec();
    fs[user] = pu.to_vec();
    let joint = kron(&fs);
    let (value, g) = equivocation_and_gradient(m.flat(), &joint);
    let mut grad = vec![0.0; sizes[user]];
    for (x, gx) in g.iter().enumerate() {
        let symbols = unflatten_index(sizes, x);
        let others: f64 = (0..sizes.len()).filter(|k| *k != user).map(|k| fs[k][symbols[k]]).product();
        if others > 0.0 {
            grad[symbols[user]] += gx * others;
        }
    }
    (value, grad)
}

/// Block-coordinate ascent over the factors of a product law.
fn alternate(m: &MacChannel, mut factors: Vec<Vec<f64>>, max_iterations: usize) -> (f64, Vec<Vec<f64>>) {
    let mut value = equivocation_and_gradient(m.flat(), &kron(&factors)).0;
    for _ in 0..500 {
        let before = value;
        for u in 0..m.users() {
            let snapshot = factors.clone();
            let (v, pu) = ascend(&|p| factor_objective(m, &snapshot, u, p), factors[u].clone(), max_iterations);
            if v >= value {
                factors[u] = pu;
                value = v;
            }
        }
        if value - before < IMPROVEMENT_TOLERANCE {
            break;
        }
    }
    (value, factors)
}

fn product_capacity(m: &MacChannel, config: &OptimizerConfig) -> CapacityResult {
    let sizes = m.input_sizes().to_vec();
    let runs: Vec<(f64, Vec<f64>)> = crate::install(|| {
        (0..config.restarts.max(1))
            .into_par_iter()
            .map(|r| {
                let start: Vec<Vec<f64>> = if r == 0 {
                    sizes.iter().map(|k| vec![1.0 / *k as f64; *k]).collect()
                } else {
                    let mut rng = restart_rng(config.seed, r);
                    sizes.iter().map(|k| random_simplex_point(*k, &mut rng)).collect()
                };
                let (v, fs) = alternate(m, start, config.max_iterations);
                (v, fs.concat())
            })
            .collect()
    });
    let (value, mut flat_factors) = best_of(runs);

    let mut grid_value = None;
    if sizes.len() == 2 {
        let steps = (1..=100u32).rev().find(|s| grid_size(sizes[0], *s).saturating_mul(grid_size(sizes[1], *s)) <= 4 * GRID_BUDGET);
        if let Some(steps) = steps.filter(|s| *s >= 10) {
            let second: Vec<Vec<f64>> = simplex_grid(sizes[1], steps).collect();
            let (gv, gp) = best_of(simplex_grid(sizes[0], steps).flat_map(|a| {
                second
                    .iter()
                    .map(|b| {
                        let v = equivocation_and_gradient(m.flat(), &kron(&[a.clone(), b.clone()])).0;
                        (v, [a.clone(), b.clone()].concat())
                    })
                    .collect::<Vec<_>>()
            }));
            grid_value = Some(gv);
            let split = split_factors(&gp, &sizes);
            let (pv, pf) = alternate(m, split, config.max_iterations);
            let polished = (pv, pf.concat());
            flat_factors = best_of([(value, flat_factors), (gv, gp), polished]).1;
        }
    }

    let factors: Vec<Pmf> =
        split_factors(&flat_factors, &sizes).iter().map(|f| Pmf::from_weights(f).expect("simplex point")).collect();
    let joint = InputDistribution::product(&factors).expect("nonempty factors").joint;
    let value = equivocation(m.flat(), &joint).expect("matching size");
    CapacityResult { value, argmax: joint, factors: Some(factors), grid_value, warnings: Vec::new() }
}

fn split_factors(flat: &[f64], sizes: &[usize]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for k in sizes {
        out.push(flat[start..start + k].to_vec());
        start += k;
    }
    out
}

/// `max_p min_b H(X|Y_b)`.
pub fn broadcast_capacity(bc: &BroadcastChannel) -> Result<CapacityResult> {
    broadcast_capacity_with(bc, &OptimizerConfig::default())
}

pub fn broadcast_capacity_with(bc: &BroadcastChannel, config: &OptimizerConfig) -> Result<CapacityResult> {
    let marginals = (0..bc.receivers()).map(|b| bc.marginal(b)).collect::<Result<Vec<_>>>()?;
    let objective = |p: &[f64]| {
        let parts: Vec<(f64, Vec<f64>)> = marginals.iter().map(|w| equivocation_and_gradient(w, p)).collect();
        let min = parts.iter().map(|(v, _)| *v).fold(f64::INFINITY, f64::min);
        let active: Vec<&Vec<f64>> = parts.iter().filter(|(v, _)| *v <= min + 1e-12).map(|(_, g)| g).collect();
        let mut grad = vec![0.0; p.len()];
        for g in &active {
            for (a, b) in grad.iter_mut().zip(g.iter()) {
                *a += b / active.len() as f64;
            }
        }
        (min, grad)
    };
    let dim = bc.input_size();
    let mut best = maximize_on_simplex(dim, &objective, config);
    let mut grid_value = None;
    if let Some(steps) = affordable_steps(dim, 1000, GRID_BUDGET) {
        let grid = grid_maximize(dim, steps, |p| objective(p).0);
        grid_value = Some(grid.0);
        let polished = ascend(&objective, grid.1.clone(), config.max_iterations);
        best = best_of([best, grid, polished]);
    }
    let warnings = marginals
        .iter()
        .enumerate()
        .flat_map(|(b, w)| redundancy_warning(w, &format!("output {}", b + 1)))
        .collect();
    Ok(CapacityResult {
        value: objective(&best.1).0,
        argmax: Pmf::from_weights(&best.1)?,
        factors: None,
        grid_value,
        warnings,
    })
}
