//! A single seller owning every item: revenue over sets, the exhaustive
//! optimum, the harmonic size sampler, and symmetrization.

use num_integer::Integer;
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::demand::PriceVector;
use crate::error::{Error, Result};
use crate::subset::{SetOrder, Subset};
use crate::valuation::Valuation;
use crate::value::Value;

/// Largest item count for the exact averaging routines.
pub const MAX_EXACT_ITEMS: usize = 16;

/// `r(S) = Σ_{i ∈ S} v(i | S∖i)`: the most the seller can extract while the
/// buyer still takes exactly `S`.
pub fn revenue_of_set(v: &Valuation, s: Subset) -> Value {
    let whole = v.value(s);
    s.items().map(|i| whole - v.value(s.without(i))).sum()
}

/// Prices `v(i | S∖i)` on `S`, every other item withheld.
pub fn realizing_prices(v: &Valuation, s: Subset) -> PriceVector {
    let prices = (0..v.n()).map(|i| s.contains(i).then(|| v.item_marginal(i, s.without(i)))).collect();
    PriceVector::with_blocked(prices).expect("marginals of a monotone valuation are nonnegative")
}

/// `v(N) / H_n`, the revenue the optimum always reaches.
pub fn revenue_guarantee(v: &Valuation) -> Value {
    v.grand() / Value::harmonic(v.n())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MonopolistResult {
    pub set: Subset,
    pub revenue: Value,
    /// `v(set)`.
    pub welfare: Value,
    pub prices: PriceVector,
    pub samples_used: usize,
    pub guarantee: Value,
    /// `v(N) / welfare`, when the welfare is positive.
    pub welfare_ratio: Option<Value>,
    /// Lowest and highest `v(S)` over all sets sharing the best revenue.
    pub tied_welfare: (Value, Value),
}

fn result(v: &Valuation, set: Subset, revenue: Value, samples_used: usize, tied: (Value, Value)) -> MonopolistResult {
    let welfare = v.value(set).clone();
    MonopolistResult {
        set,
        prices: realizing_prices(v, set),
        welfare_ratio: welfare.is_positive().then(|| v.grand() / &welfare),
        guarantee: revenue_guarantee(v),
        welfare,
        revenue,
        samples_used,
        tied_welfare: tied,
    }
}

/// Exhaustive revenue maximization; ties go to the first set in dictionary
/// order of item indices.
pub fn brute_force_monopolist(v: &Valuation) -> MonopolistResult {
    let order = SetOrder::identity(v.n());
    let mut best = Value::zero();
    let mut winners = vec![Subset::EMPTY];
    for s in Subset::all(v.n()).skip(1) {
        let r = revenue_of_set(v, s);
        if r > best {
            best = r;
            winners.clear();
            winners.push(s);
        } else if r == best {
            winners.push(s);
        }
    }
    let set = order.first(winners.iter().copied()).expect("at least the empty set");
    let low = winners.iter().map(|&s| v.value(s)).min().unwrap().clone();
    let high = winners.iter().map(|&s| v.value(s)).max().unwrap().clone();
    let out = result(v, set, best, 0, (low, high));
    assert!(out.revenue >= out.guarantee, "optimal revenue below v(N)/H_n");
    out
}

/// Draws a size `k` with probability `1 / (k · H_n)`, then a uniform set of
/// that size. Sizes are drawn exactly with integer weights `lcm(1..n) / k`.
pub fn sample_set<R: Rng>(n: usize, rng: &mut R) -> Subset {
    let lcm = (1..=n as u64).fold(1u64, |m, k| m.lcm(&k));
    let sizes = WeightedIndex::new((1..=n as u64).map(|k| lcm / k)).expect("positive size weights");
    let size = sizes.sample(rng) + 1;
    let mut items: Vec<usize> = (0..n).collect();
    let (picked, _) = items.partial_shuffle(rng, size);
    Subset::from_items(picked.iter().copied())
}

fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One draw of the harmonic sampler.
pub fn harmonic_sample(v: &Valuation, seed: u64) -> MonopolistResult {
    let set = sample_set(v.n(), &mut sample_rng(seed, 0));
    let r = revenue_of_set(v, set);
    let w = v.value(set).clone();
    result(v, set, r, 1, (w.clone(), w))
}

/// `⌈s · H_n⌉`.
pub fn sample_count(n: usize, s: u32) -> usize {
    (Value::from_int(s as i64) * Value::harmonic(n)).ceil().to_u64().expect("positive count") as usize
}

/// Best of `⌈s · H_n⌉` independent draws; draw `j` uses stream `j` of the seed.
pub fn repeated_sample(v: &Valuation, s: u32, seed: u64) -> Result<MonopolistResult> {
    if s == 0 {
        return Err(Error::InvalidInput("need at least one round of samples".into()));
    }
    let count = sample_count(v.n(), s);
    let mut best: Option<(Subset, Value)> = None;
    for j in 0..count {
        let set = sample_set(v.n(), &mut sample_rng(seed, j as u64));
        let r = revenue_of_set(v, set);
        if best.as_ref().is_none_or(|(_, b)| r > *b) {
            best = Some((set, r));
        }
    }
    let (set, r) = best.expect("count ≥ 1");
    let w = v.value(set).clone();
    Ok(result(v, set, r, count, (w.clone(), w)))
}

fn binomial(n: usize, k: usize) -> Value {
    (0..k).fold(Value::one(), |acc, j| acc * Value::ratio((n - j) as i64, (j + 1) as i64))
}

fn check_exact_size(v: &Valuation) -> Result<()> {
    if v.n() > MAX_EXACT_ITEMS {
        return Err(Error::SizeLimit { n: v.n(), max: MAX_EXACT_ITEMS });
    }
    Ok(())
}

/// Exact expected revenue of one harmonic draw; always `v(N) / H_n`.
pub fn exact_sampler_expectation(v: &Valuation) -> Result<Value> {
    check_exact_size(v)?;
    let n = v.n();
    let mut by_size = vec![Value::zero(); n + 1];
    for s in Subset::all(n).skip(1) {
        by_size[s.len()] += revenue_of_set(v, s);
    }
    let h = Value::harmonic(n);
    Ok((1..=n).map(|k| &by_size[k] / (binomial(n, k) * Value::from_int(k as i64) * &h)).sum())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SymmetrizationProfile {
    /// Average of `v` over sets of size `k`, for `k = 0..=n`.
    pub averages: Vec<Value>,
    /// `averages[k] − averages[k − 1]` for `k = 1..=n` (index 0 unused, zero).
    pub increments: Vec<Value>,
    /// Size maximizing `k · increments[k]`.
    pub best_size: usize,
    pub best_value: Value,
}

pub fn symmetrize(v: &Valuation) -> Result<SymmetrizationProfile> {
    check_exact_size(v)?;
    let n = v.n();
    let mut sums = vec![Value::zero(); n + 1];
    for s in Subset::all(n) {
        sums[s.len()] += v.value(s);
    }
    let averages: Vec<Value> = sums.iter().enumerate().map(|(k, total)| total / binomial(n, k)).collect();
    let mut increments = vec![Value::zero(); n + 1];
    let (mut best_size, mut best_value) = (1, None::<Value>);
    for k in 1..=n {
        increments[k] = &averages[k] - &averages[k - 1];
        let score = Value::from_int(k as i64) * &increments[k];
        if best_value.as_ref().is_none_or(|b| score > *b) {
            best_size = k;
            best_value = Some(score);
        }
    }
    Ok(SymmetrizationProfile { averages, increments, best_size, best_value: best_value.expect("n ≥ 1") })
}
