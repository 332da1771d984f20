use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stratum {
    pub population: usize,
    pub allocated: usize,
    /// Sampled ids in sorted order; empty until ids are drawn.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub z: f64,
    pub p: f64,
    pub e: f64,
    pub population: usize,
    pub n0: f64,
    pub n: usize,
    #[serde(default)]
    pub strata: BTreeMap<String, Stratum>,
}

/// Proportion sample size with finite population correction, rounded up.
pub fn sample_size(population: usize, z: f64, p: f64, e: f64) -> Result<SamplingPlan, EvalError> {
    if population == 0 {
        return Err(EvalError::BadParameters("population must be at least 1".into()));
    }
    if !(e > 0.0 && e < 1.0) {
        return Err(EvalError::BadParameters(format!("margin of error {e} outside (0,1)")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(EvalError::BadParameters(format!("proportion {p} outside [0,1]")));
    }
    if !z.is_finite() || z <= 0.0 {
        return Err(EvalError::BadParameters(format!("quantile {z} must be positive")));
    }
    let n0 = z * z * p * (1.0 - p) / (e * e);
    let adjusted = n0 / (1.0 + (n0 - 1.0) / population as f64);
    // Absorb representation noise so an exact integer does not round up.
    let n = ((adjusted - 1e-9).ceil().max(0.0) as usize).min(population);
    Ok(SamplingPlan { z, p, e, population, n0, n, strata: BTreeMap::new() })
}

/// Splits `n` across strata in proportion to their sizes. Floors are taken
/// first and the leftover units go to the largest remainders; equal
/// remainders are resolved in label order.
pub fn largest_remainder(
    n: usize,
    populations: &BTreeMap<String, usize>,
) -> Result<BTreeMap<String, usize>, EvalError> {
    let total: usize = populations.values().sum();
    if total == 0 {
        return Err(EvalError::BadParameters("strata are empty".into()));
    }
    let mut alloc = BTreeMap::new();
    let mut remainders = Vec::new();
    let mut assigned = 0;
    for (label, &pop) in populations {
        let exact = n as u128 * pop as u128;
        let floor = (exact / total as u128) as usize;
        remainders.push((exact % total as u128, label.clone()));
        alloc.insert(label.clone(), floor);
        assigned += floor;
    }
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    for (_, label) in remainders.into_iter().take(n - assigned) {
        *alloc.get_mut(&label).unwrap() += 1;
    }
    for (label, &k) in &alloc {
        if k > populations[label] {
            return Err(EvalError::StratumOverflow {
                stratum: label.clone(),
                allocated: k,
                population: populations[label],
            });
        }
    }
    Ok(alloc)
}

/// Allocates `plan.n` over the strata and draws that many ids from each
/// without replacement. The same seed always yields the same ids,
/// independent of the input order of ids.
pub fn stratified_allocate(
    plan: &SamplingPlan,
    strata: &BTreeMap<String, Vec<String>>,
    seed: u64,
) -> Result<SamplingPlan, EvalError> {
    let populations: BTreeMap<String, usize> = strata.iter().map(|(k, v)| (k.clone(), v.len())).collect();
    let total: usize = populations.values().sum();
    if total != plan.population {
        return Err(EvalError::BadParameters(format!(
            "strata hold {total} ids but the plan population is {}",
            plan.population
        )));
    }
    let alloc = largest_remainder(plan.n, &populations)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = plan.clone();
    out.strata.clear();
    for (label, ids) in strata {
        let mut sorted = ids.clone();
        sorted.sort();
        let k = alloc[label];
        let mut chosen: Vec<String> = sorted.choose_multiple(&mut rng, k).cloned().collect();
        chosen.sort();
        out.strata.insert(label.clone(), Stratum { population: ids.len(), allocated: k, ids: chosen });
    }
    Ok(out)
}
