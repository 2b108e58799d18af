//! Seeded synthetic instance generator.
//!
//! Centers and zones are placed uniformly at random on the unit square and
//! edge costs are the Euclidean distances between them. Demands are uniform
//! integers from a configurable inclusive range, every item shares one
//! sparsity budget, and all capacities are set to
//! `capacity_factor * sum_i (item_demand_i / budget)`, so that with the
//! default factor of 2 the aggregate capacity comfortably exceeds total
//! demand and the relaxed problem is always feasible.
//!
//! All randomness comes from SplitMix64, a published 64-bit generator with
//! well-known reference outputs (see the tests), so a seed fully determines
//! the instance on every platform. The draw order is fixed: center
//! coordinates, then zone coordinates, then demands in (zone, item) order.

use serde::{Deserialize, Serialize};

use crate::model::{Instance, ModelError};

/// Configuration of one generated instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub num_centers: usize,
    pub num_zones: usize,
    pub num_items: usize,
    /// Budget applied to every item.
    pub sparsity_budget: usize,
    /// Inclusive bounds for the integer demand draws.
    pub demand_min: u64,
    pub demand_max: u64,
    /// Multiplier on per-budget average demand when setting capacities.
    pub capacity_factor: f64,
    pub seed: u64,
}

impl GenConfig {
    /// The experiment-style defaults: budget 5, demands in [10, 1000],
    /// capacity factor 2.
    pub fn new(num_centers: usize, num_zones: usize, num_items: usize, seed: u64) -> Self {
        GenConfig {
            num_centers,
            num_zones,
            num_items,
            sparsity_budget: 5,
            demand_min: 10,
            demand_max: 1000,
            capacity_factor: 2.0,
            seed,
        }
    }

    pub fn with_sparsity(mut self, budget: usize) -> Self {
        self.sparsity_budget = budget;
        self
    }

    pub fn with_demand_range(mut self, min: u64, max: u64) -> Self {
        self.demand_min = min;
        self.demand_max = max;
        self
    }

    pub fn with_capacity_factor(mut self, factor: f64) -> Self {
        self.capacity_factor = factor;
        self
    }

    fn validate(&self) -> Result<(), ModelError> {
        if self.num_centers == 0 {
            return Err(ModelError::EmptyDimension { what: "num_centers" });
        }
        if self.num_zones == 0 {
            return Err(ModelError::EmptyDimension { what: "num_zones" });
        }
        if self.num_items == 0 {
            return Err(ModelError::EmptyDimension { what: "num_items" });
        }
        if self.sparsity_budget == 0 || self.sparsity_budget > self.num_centers {
            return Err(ModelError::IndexOutOfRange {
                what: "sparsity_budget",
                index: self.sparsity_budget,
                limit: self.num_centers,
            });
        }
        if self.demand_min > self.demand_max {
            return Err(ModelError::IndexOutOfRange {
                what: "demand_min",
                index: self.demand_min as usize,
                limit: self.demand_max as usize,
            });
        }
        if self.capacity_factor <= 0.0 || !self.capacity_factor.is_finite() {
            return Err(ModelError::NotFinite {
                what: "capacity_factor",
            });
        }
        Ok(())
    }
}

/// SplitMix64: `state += 0x9E3779B97F4A7C15` then two xor-multiply mixes.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform double in [0, 1) from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [lo, hi], inclusive on both ends, via rejection
    /// so the draw is unbiased.
    pub fn next_range(&mut self, lo: u64, hi: u64) -> u64 {
        debug_assert!(lo <= hi);
        let range = hi.wrapping_sub(lo).wrapping_add(1);
        if range == 0 {
            // Full 64-bit range.
            return self.next_u64();
        }
        let reject_below = range.wrapping_neg() % range;
        loop {
            let r = self.next_u64();
            if r >= reject_below {
                return lo + r % range;
            }
        }
    }
}

/// Generates the instance determined by `cfg`.
pub fn generate(cfg: &GenConfig) -> Result<Instance, ModelError> {
    cfg.validate()?;
    let mut rng = SplitMix64::new(cfg.seed);

    let centers: Vec<(f64, f64)> = (0..cfg.num_centers)
        .map(|_| (rng.next_f64(), rng.next_f64()))
        .collect();
    let zones: Vec<(f64, f64)> = (0..cfg.num_zones)
        .map(|_| (rng.next_f64(), rng.next_f64()))
        .collect();

    let mut demand = vec![0.0; cfg.num_zones * cfg.num_items];
    for v in 0..cfg.num_zones {
        for i in 0..cfg.num_items {
            demand[v * cfg.num_items + i] = rng.next_range(cfg.demand_min, cfg.demand_max) as f64;
        }
    }

    let mut cost = vec![0.0; cfg.num_centers * cfg.num_zones];
    for (u, &(cx, cy)) in centers.iter().enumerate() {
        for (v, &(zx, zy)) in zones.iter().enumerate() {
            cost[u * cfg.num_zones + v] = ((cx - zx).powi(2) + (cy - zy).powi(2)).sqrt();
        }
    }

    // Identical for every center: the factor times total demand averaged
    // over the allowed centers per item.
    let per_budget_demand: f64 = (0..cfg.num_items)
        .map(|i| {
            let item_total: f64 = (0..cfg.num_zones)
                .map(|v| demand[v * cfg.num_items + i])
                .sum();
            item_total / cfg.sparsity_budget as f64
        })
        .sum();
    let capacity = vec![cfg.capacity_factor * per_budget_demand; cfg.num_centers];

    Instance::new(
        cfg.num_centers,
        cfg.num_zones,
        cfg.num_items,
        cost,
        capacity,
        demand,
        vec![cfg.sparsity_budget; cfg.num_items],
    )
}
