use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::model::{Account, Asset, CollateralInstance, Duration};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierCount {
    pub tier: f64,
    pub count: usize,
}

/// Synthetic instance recipe. Assets are laid out tier by tier in the order
/// of `tier_counts`; the small account is the last short-term one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorSpec {
    pub tier_counts: Vec<TierCount>,
    pub total_asset_value: f64,
    pub asset_value_range: (f64, f64),
    pub unit_value_range: (f64, f64),
    pub account_durations: Vec<Duration>,
    pub long_term_exposure: f64,
    pub short_term_exposure: f64,
    /// Small account exposure relative to the mean of the other accounts.
    pub small_account_ratio: f64,
    /// Range of the random share given to the first of a pair of accounts.
    pub split_range: (f64, f64),
    pub haircut_range: (f64, f64),
    pub seed: u64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self {
            tier_counts: vec![
                TierCount { tier: 0.2, count: 4 },
                TierCount { tier: 0.5, count: 2 },
                TierCount { tier: 0.8, count: 4 },
            ],
            total_asset_value: 8.86e6,
            asset_value_range: (0.3e6, 1.5e6),
            unit_value_range: (10.0, 200.0),
            account_durations: vec![
                Duration::Short,
                Duration::Long,
                Duration::Short,
                Duration::Short,
                Duration::Long,
            ],
            long_term_exposure: 1.49e6,
            short_term_exposure: 1.09e6,
            small_account_ratio: 0.1,
            split_range: (0.4, 0.6),
            haircut_range: (0.85, 1.0),
            seed: 0,
        }
    }
}

/// Relative tolerance on every monetary target.
pub const TARGET_TOLERANCE: f64 = 0.02;

impl GeneratorSpec {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn n_assets(&self) -> usize {
        self.tier_counts.iter().map(|t| t.count).sum()
    }

    fn accounts_of(&self, d: Duration) -> Vec<usize> {
        (0..self.account_durations.len())
            .filter(|&j| self.account_durations[j] == d)
            .collect()
    }

    /// Index of the small-exposure account, if any.
    pub fn small_account(&self) -> Option<usize> {
        if self.small_account_ratio > 0.0 {
            self.accounts_of(Duration::Short).last().copied()
        } else {
            None
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        let n = self.n_assets();
        let (lo, hi) = self.asset_value_range;
        if n == 0 {
            return bad("generator needs at least one asset".into());
        }
        if self.tier_counts.iter().any(|t| !(0.0..=1.0).contains(&t.tier)) {
            return bad("tiers must lie in [0, 1]".into());
        }
        if !(lo > 0.0 && lo <= hi) {
            return bad(format!("asset value range ({lo}, {hi}) is empty"));
        }
        if self.total_asset_value < n as f64 * lo || self.total_asset_value > n as f64 * hi {
            return bad(format!(
                "{n} assets with values in [{lo}, {hi}] cannot total {}",
                self.total_asset_value
            ));
        }
        let (ulo, uhi) = self.unit_value_range;
        if !(ulo > 0.0 && ulo <= uhi) {
            return bad("unit value range must be positive and ordered".into());
        }
        let (hlo, hhi) = self.haircut_range;
        if !(hlo > 0.0 && hlo <= hhi && hhi <= 1.0) {
            return bad("haircut range must lie in (0, 1]".into());
        }
        let (slo, shi) = self.split_range;
        if !(slo > 0.0 && slo <= shi && shi < 1.0) {
            return bad("split range must lie in (0, 1)".into());
        }
        if self.long_term_exposure < 0.0 || self.short_term_exposure < 0.0 {
            return bad("exposures must be >= 0".into());
        }
        let long = self.accounts_of(Duration::Long).len();
        let short = self.accounts_of(Duration::Short).len();
        if long == 0 && self.long_term_exposure > 0.0 {
            return bad("long-term exposure given but no long-term account".into());
        }
        if short == 0 && self.short_term_exposure > 0.0 {
            return bad("short-term exposure given but no short-term account".into());
        }
        if self.small_account_ratio < 0.0 {
            return bad("small account ratio must be >= 0".into());
        }
        if self.small_account_ratio > 0.0 && short < 2 {
            return bad("a small account needs at least two short-term accounts".into());
        }
        let min_haircut_value = self.total_asset_value * hlo;
        if min_haircut_value <= self.long_term_exposure + self.short_term_exposure {
            return bad("inventory after the largest haircut does not cover the exposures".into());
        }
        Ok(())
    }
}

/// Random positive shares summing to one, each drawn relative to the rest
/// from `range`, assigned in order.
fn split(total: f64, parts: usize, range: (f64, f64), rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut out = Vec::with_capacity(parts);
    let mut left = total;
    for k in 0..parts {
        if k + 1 == parts {
            out.push(left);
        } else {
            let f = rng.gen_range(range.0..=range.1);
            // share of what remains, scaled so later accounts are comparable
            let share = left * f * 2.0 / (parts - k) as f64;
            out.push(share);
            left -= share;
        }
    }
    out
}

/// Rescales `values` to sum to `target` while keeping each inside `[lo, hi]`.
fn rescale_clamped(values: &mut [f64], target: f64, lo: f64, hi: f64) {
    for _ in 0..200 {
        let free: f64 = values.iter().filter(|&&v| v > lo && v < hi).sum();
        let fixed: f64 = values.iter().filter(|&&v| v <= lo || v >= hi).sum();
        let sum = free + fixed;
        if (sum - target).abs() <= 1e-12 * target {
            return;
        }
        if free <= 0.0 {
            // everything pinned: release the pins on the side we must move
            let f = target / sum;
            for v in values.iter_mut() {
                *v = (*v * f).clamp(lo, hi);
            }
            continue;
        }
        let f = (target - fixed) / free;
        for v in values.iter_mut() {
            if *v > lo && *v < hi {
                *v = (*v * f).clamp(lo, hi);
            }
        }
    }
}

pub fn generate_instance(spec: &GeneratorSpec) -> Result<CollateralInstance, HarnessError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_assets();
    let (lo, hi) = spec.asset_value_range;

    let tiers: Vec<f64> = spec
        .tier_counts
        .iter()
        .flat_map(|t| std::iter::repeat(t.tier).take(t.count))
        .collect();
    let mut values: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..=hi)).collect();
    rescale_clamped(&mut values, spec.total_asset_value, lo, hi);
    let assets: Vec<Asset> = tiers
        .iter()
        .zip(&values)
        .map(|(&tier, &value)| {
            let unit_value = rng.gen_range(spec.unit_value_range.0..=spec.unit_value_range.1);
            Asset {
                quantity: value / unit_value,
                unit_value,
                tier,
            }
        })
        .collect();

    let m = spec.account_durations.len();
    let mut exposure = vec![0.0; m];
    let long = spec.accounts_of(Duration::Long);
    for (&j, c) in long
        .iter()
        .zip(split(spec.long_term_exposure, long.len(), spec.split_range, &mut rng))
    {
        exposure[j] = c;
    }
    let mut short = spec.accounts_of(Duration::Short);
    let mut short_total = spec.short_term_exposure;
    if let Some(small) = spec.small_account() {
        // c_s = r * (C - c_s) / (m - 1)
        let total = spec.long_term_exposure + spec.short_term_exposure;
        let r = spec.small_account_ratio / (m - 1) as f64;
        let c_small = r * total / (1.0 + r);
        exposure[small] = c_small;
        short_total -= c_small;
        short.retain(|&j| j != small);
    }
    for (&j, c) in short
        .iter()
        .zip(split(short_total, short.len(), spec.split_range, &mut rng))
    {
        exposure[j] = c;
    }
    let accounts = spec
        .account_durations
        .iter()
        .zip(&exposure)
        .map(|(&duration, &exposure)| Account { exposure, duration })
        .collect();

    let (hlo, hhi) = spec.haircut_range;
    let haircut = (0..n)
        .map(|_| (0..m).map(|_| rng.gen_range(hlo..=hhi)).collect())
        .collect();

    let instance = CollateralInstance::new(assets, accounts, haircut)?;
    check_targets(spec, &instance)?;
    Ok(instance)
}

fn within(value: f64, target: f64) -> bool {
    (value - target).abs() <= TARGET_TOLERANCE * target.abs()
}

/// Verifies the monetary targets of `spec` on a generated instance.
pub fn check_targets(spec: &GeneratorSpec, inst: &CollateralInstance) -> Result<(), HarnessError> {
    let total: f64 = inst.assets.iter().map(|a| a.market_value()).sum();
    let by = |d: Duration| -> f64 {
        inst.accounts
            .iter()
            .filter(|a| a.duration == d)
            .map(|a| a.exposure)
            .sum()
    };
    let checks = [
        ("total asset value", total, spec.total_asset_value),
        ("long-term exposure", by(Duration::Long), spec.long_term_exposure),
        ("short-term exposure", by(Duration::Short), spec.short_term_exposure),
    ];
    for (what, got, want) in checks {
        if !within(got, want) {
            return Err(HarnessError::Config(format!(
                "generated {what} {got} misses target {want}"
            )));
        }
    }
    if let Some(s) = spec.small_account() {
        let m = inst.n_accounts();
        let others = (inst.total_exposure() - inst.accounts[s].exposure) / (m - 1) as f64;
        if !within(inst.accounts[s].exposure, spec.small_account_ratio * others) {
            return Err(HarnessError::Config("small account misses its target".into()));
        }
    }
    Ok(())
}
