//! Seeded generators for random valuations and price profiles, used by the
//! property and acceptance suites.

use rand::Rng;

use crate::demand::{sample_grid_price, PriceVector};
use crate::subset::Subset;
use crate::valuation::Valuation;
use crate::value::Value;

fn grid_value<R: Rng>(rng: &mut R, max_numer: i64, q: i64) -> Value {
    Value::ratio(rng.gen_range(0..=max_numer), q)
}

/// Monotone valuation built set by set: each set gets the largest value of
/// its maximal proper subsets plus a random increment in `{0, 1/q, …, scale}`.
/// About a third of the increments are zero, so ties and flat regions occur.
pub fn monotone<R: Rng>(rng: &mut R, n: usize, scale: i64, q: i64) -> Valuation {
    let mut table = vec![Value::zero(); 1 << n];
    for s in Subset::all(n).skip(1) {
        let floor = s.items().map(|i| &table[s.without(i).index()]).max().cloned().unwrap_or_default();
        let bump = if rng.gen_ratio(1, 3) { Value::zero() } else { grid_value(rng, scale * q, q) };
        table[s.index()] = floor + bump;
    }
    Valuation::from_table(n, table).expect("monotone by construction").with_label("random monotone")
}

/// Weighted coverage over `elements` ground elements, each item covering a
/// random nonempty set of them; weights are multiples of `1/q` in `[0, 1]`.
/// Coverage valuations are submodular.
pub fn coverage<R: Rng>(rng: &mut R, n: usize, elements: usize, q: i64) -> Valuation {
    let weights: Vec<Value> = (0..elements).map(|_| grid_value(rng, q, q)).collect();
    let covers: Vec<u32> = (0..n).map(|_| rng.gen_range(1..1u32 << elements)).collect();
    let table = Subset::all(n)
        .map(|s| {
            let union = s.items().fold(0u32, |m, i| m | covers[i]);
            (0..elements).filter(|e| union >> e & 1 == 1).map(|e| &weights[e]).sum()
        })
        .collect();
    Valuation::from_table(n, table).expect("coverage is monotone").with_label("random coverage")
}

/// Gross-substitutes valuation: either an assignment valuation (each of up
/// to three unit-demand slots takes at most one item, value is the best
/// total weight) or a concave function of the set size.
pub fn gross_substitutes<R: Rng>(rng: &mut R, n: usize, q: i64) -> Valuation {
    if rng.gen_bool(0.5) {
        let slots = rng.gen_range(1..=3usize);
        let w: Vec<Vec<Value>> = (0..slots).map(|_| (0..n).map(|_| grid_value(rng, 2 * q, q)).collect()).collect();
        let table = Subset::all(n).map(|s| best_assignment(&w, s, 0)).collect();
        Valuation::from_table(n, table).expect("assignment values are monotone").with_label("random assignment")
    } else {
        let mut steps: Vec<Value> = (0..n).map(|_| grid_value(rng, 2 * q, q)).collect();
        steps.sort_by(|a, b| b.cmp(a));
        let mut profile = vec![Value::zero()];
        for step in steps {
            let last = profile.last().unwrap().clone();
            profile.push(last + step);
        }
        let table = Subset::all(n).map(|s| profile[s.len()].clone()).collect();
        Valuation::from_table(n, table).expect("concave profile is monotone").with_label("random concave")
    }
}

fn best_assignment(w: &[Vec<Value>], free: Subset, slot: usize) -> Value {
    if slot == w.len() || free.is_empty() {
        return Value::zero();
    }
    let skip = best_assignment(w, free, slot + 1);
    free.items().map(|i| &w[slot][i] + best_assignment(w, free.without(i), slot + 1)).fold(skip, Value::max)
}

/// Prices drawn independently from `{k/q : 0 ≤ k ≤ q · cap}`.
pub fn price_vector<R: Rng>(rng: &mut R, n: usize, cap: &Value, q: u32) -> PriceVector {
    PriceVector::new((0..n).map(|_| sample_grid_price(rng, cap, q)).collect()).expect("grid prices are nonnegative")
}
