//! Attacks that push selected users' opinions up to a fixed value.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::opinion::{Opinions, VectorError};
use crate::spectral::CentralityVector;

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("cannot target {requested} users out of {n}")]
    TooManyTargets { requested: usize, n: usize },
    #[error("user {user} has cost 0; costs must be positive")]
    ZeroCost { user: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Opinion(#[from] VectorError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttackKind {
    RandomTargets { n_targets: usize },
    /// Budgeted 0-1 knapsack; unit costs when `costs` is `None`.
    Knapsack { budget: u64, costs: Option<Vec<u64>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackSpec {
    pub kind: AttackKind,
    pub target_value: f64,
    pub seed: u64,
}

impl AttackSpec {
    pub fn apply(&self, pi: &CentralityVector, x: &Opinions) -> Result<Opinions, AttackError> {
        match &self.kind {
            AttackKind::RandomTargets { n_targets } => {
                attack_random(x, *n_targets, self.target_value, self.seed)
            }
            AttackKind::Knapsack { budget, costs } => {
                let unit;
                let costs = match costs {
                    Some(c) => c.as_slice(),
                    None => {
                        unit = vec![1; x.len()];
                        unit.as_slice()
                    }
                };
                attack_knapsack(pi, x, *budget, costs)
            }
        }
    }
}

/// Sets `n_targets` distinct uniformly chosen users to `value`.
pub fn attack_random(
    x: &Opinions,
    n_targets: usize,
    value: f64,
    seed: u64,
) -> Result<Opinions, AttackError> {
    let n = x.len();
    if n_targets > n {
        return Err(AttackError::TooManyTargets { requested: n_targets, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = x.as_slice().to_vec();
    for i in rand::seq::index::sample(&mut rng, n, n_targets) {
        values[i] = value;
    }
    Ok(Opinions::new(values)?)
}

/// Users whose switch to opinion 1 raises `⟨π, x⟩` the most under a budget.
///
/// Flipping user `i` gains `π_i (1 − x_i)`; the best set is found by 0-1
/// knapsack dynamic programming in `O(n · budget)`. Users already at 1 gain
/// nothing and are never selected.
pub fn attack_knapsack(
    pi: &CentralityVector,
    x: &Opinions,
    budget: u64,
    costs: &[u64],
) -> Result<Opinions, AttackError> {
    let n = x.len();
    for got in [pi.len(), costs.len()] {
        if got != n {
            return Err(AttackError::DimensionMismatch { expected: n, got });
        }
    }
    if let Some(user) = costs.iter().position(|&c| c == 0) {
        return Err(AttackError::ZeroCost { user });
    }
    let gains: Vec<f64> = (0..n).map(|i| pi.values[i] * (1.0 - x[i])).collect();
    let chosen = knapsack(&gains, costs, budget);
    let mut values = x.as_slice().to_vec();
    for i in chosen {
        values[i] = 1.0;
    }
    Ok(Opinions::new(values)?)
}

/// Exact 0-1 knapsack over items with positive value. Ties keep the
/// lower-indexed items.
pub(crate) fn knapsack(values: &[f64], costs: &[u64], budget: u64) -> Vec<usize> {
    let items: Vec<usize> = (0..values.len())
        .filter(|&i| values[i] > 0.0 && costs[i] <= budget)
        .collect();
    // Capacity beyond the total cost of useful items never matters.
    let cap = items.iter().map(|&i| costs[i]).sum::<u64>().min(budget) as usize;
    let width = cap + 1;
    // Items are processed last-to-first so reconstruction walks them in id
    // order; an item is taken whenever it does not hurt, so ties favor lower
    // ids.
    let mut best = vec![0.0f64; width];
    let mut take = vec![false; items.len() * width];
    for (slot, &i) in items.iter().enumerate().rev() {
        let cost = costs[i] as usize;
        for b in (cost..width).rev() {
            let with = best[b - cost] + values[i];
            if with >= best[b] {
                best[b] = with;
                take[slot * width + b] = true;
            }
        }
    }
    // `take[slot][b]`: item `slot` belongs to a best packing of `slot..` into `b`.
    let mut chosen = Vec::new();
    let mut b = cap;
    for (slot, &i) in items.iter().enumerate() {
        if take[slot * width + b] {
            chosen.push(i);
            b -= costs[i] as usize;
        }
    }
    chosen
}
