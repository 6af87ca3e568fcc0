//! Equilibrium constructions and welfare tools: full-trade equilibria, the
//! submodular prediction, transfer to arbitrary decision rules, epsilon
//! equilibria under service costs, and local search on net welfare.

use serde::Serialize;

use crate::demand::{choose, decide, utilities, DecisionMap, MapKind, PriceVector};
use crate::error::{Error, Result};
use crate::game::{check_equilibrium, threshold, EquilibriumReport, GameSpec};
use crate::subset::Subset;
use crate::valuation::{classify, Valuation};
use crate::value::Value;

/// Full-trade equilibrium found by raising prices one item at a time, in
/// `order`, as far as the constraints `p(T) ≤ v(T | N∖T)` allow.
pub fn pareto_equilibrium(v: &Valuation, order: &[usize]) -> Result<PriceVector> {
    let n = v.n();
    if crate::subset::SetOrder::new(order).is_none() {
        return Err(Error::InvalidInput(format!("order {order:?} is not a permutation of 0..{n}")));
    }
    let full = v.full();
    let mut p = vec![Value::zero(); n];
    for &i in order {
        let rest = full.without(i);
        let cap = rest
            .subsets()
            .map(|t| {
                let paid: Value = t.items().map(|j| &p[j]).sum();
                v.grand() - v.value(rest.difference(t)) - paid
            })
            .min()
            .expect("at least one constraint");
        p[i] = cap;
    }
    PriceVector::new(p)
}

/// Whether no coordinate of `p` can be raised without breaking some
/// constraint `p(T) ≤ v(T | N∖T)`, and whether all constraints hold.
pub fn is_pareto_point(v: &Valuation, p: &PriceVector) -> bool {
    let full = v.full();
    let slack = |t: Subset| v.grand() - v.value(full.difference(t)) - p.total(t);
    let feasible = Subset::all(v.n()).skip(1).all(|t| !slack(t).is_negative());
    let tight = (0..v.n()).all(|i| Subset::all(v.n()).any(|t| t.contains(i) && slack(t).is_zero()));
    feasible && tight
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Prediction {
    /// `p_i = v(i | N∖i)`.
    pub prices: PriceVector,
    /// Sellers whose last marginal is zero; their equilibrium price is not
    /// pinned down, only their zero utility is.
    pub free_sellers: Vec<usize>,
    /// The exact check under the maximal rule.
    pub report: EquilibriumReport,
}

/// The unique equilibrium utilities of a submodular valuation, realized as
/// prices equal to last marginals.
pub fn submodular_prediction(v: &Valuation) -> Result<Prediction> {
    if !classify(v).submodular {
        return Err(Error::NotSubmodular);
    }
    let prices: Vec<Value> = (0..v.n()).map(|i| v.last_marginal(i)).collect();
    let free_sellers = (0..v.n()).filter(|&i| prices[i].is_zero()).collect();
    let prices = PriceVector::new(prices)?;
    let g = GameSpec::new(v.clone(), DecisionMap::new(MapKind::MaximalLex, v.n()))?;
    let report = check_equilibrium(&g, &prices, &Value::zero())?;
    debug_assert!(report.is_exact(), "last-marginal prices are not an equilibrium");
    Ok(Prediction { prices, free_sellers, report })
}

/// Moves an exact equilibrium of the maximal rule `maximal` to an
/// `epsilon`-equilibrium of every decision rule with the same welfare:
/// each chosen item gets `ε/n` cheaper, clamped at zero.
pub fn epsilon_transfer(v: &Valuation, p: &PriceVector, maximal: &DecisionMap, epsilon: &Value) -> Result<PriceVector> {
    if !epsilon.is_positive() {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    if maximal.kind() != MapKind::MaximalLex {
        return Err(Error::InvalidInput("transfer starts from an equilibrium of the maximal rule".into()));
    }
    let g = GameSpec::new(v.clone(), maximal.clone())?;
    let report = check_equilibrium(&g, p, &Value::zero())?;
    if !report.is_exact() {
        return Err(Error::InputNotEquilibrium);
    }
    let chosen = report.chosen[0];
    let cut = epsilon / Value::from_int(v.n() as i64);
    let shifted = (0..v.n())
        .map(|i| {
            let price = p.price(i);
            if chosen.contains(i) {
                (price - &cut).positive_part()
            } else {
                price.clone()
            }
        })
        .collect();
    PriceVector::new(shifted)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CostEquilibrium {
    pub prices: PriceVector,
    /// `X(c)`, kept throughout.
    pub chosen: Subset,
    pub raises: usize,
    pub report: EquilibriumReport,
}

/// Starting from prices at cost, repeatedly lets a chosen seller raise its
/// price by more than `ε` while staying chosen, until none can.
///
/// A seller that would still be chosen at its indifference price `d` moves
/// there; otherwise it moves to `max(p_i + ε, d − ε/2)`.
pub fn cost_epsilon_equilibrium(g: &GameSpec, epsilon: &Value) -> Result<CostEquilibrium> {
    if !epsilon.is_positive() {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    if g.map().kind() == MapKind::GsGreedy {
        return Err(Error::MapNotUpConsistent("the greedy rule does not select from a fixed order".into()));
    }
    let Some(v) = g.single_buyer() else {
        return Err(Error::InvalidInput("cost equilibria need a single buyer".into()));
    };
    for seller in 0..g.sellers().len() {
        g.item_of(seller)?;
    }
    let mut p = PriceVector::new(g.cost_vector().to_vec())?;
    let chosen_at = |p: &PriceVector| -> Result<Subset> {
        let utils = utilities(v, p);
        Ok(choose(v, p, g.map(), &utils)?.1)
    };
    let target = chosen_at(&p)?;
    let half = epsilon / Value::from_int(2);
    let mut raises = 0;
    loop {
        let mut moved = false;
        for i in target.items() {
            let utils = utilities(v, &p.with_price(i, Value::zero()));
            let d = threshold(&utils, i, &Value::zero());
            let current = p.price(i).clone();
            if &d - &current <= *epsilon {
                continue;
            }
            let at_d = p.with_price(i, d.clone());
            let next = if chosen_at(&at_d)? == target { d } else { (&current + epsilon).max(&d - &half) };
            p = p.with_price(i, next);
            debug_assert_eq!(chosen_at(&p)?, target, "raise changed the chosen set");
            raises += 1;
            moved = true;
        }
        if !moved {
            break;
        }
    }
    if chosen_at(&p)? != target {
        return Err(Error::MapNotUpConsistent(format!("chosen set left {target} during raises")));
    }
    let report = check_equilibrium(g, &p, epsilon)?;
    Ok(CostEquilibrium { prices: p, chosen: target, raises, report })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CostConditions {
    pub chosen: Subset,
    /// Item in the chosen set whose last marginal is below its cost.
    pub marginal_failure: Option<usize>,
    /// `(T, j)` with `v(T ∪ j) + c(S∖T) − c_j > v(S)`.
    pub exchange_failure: Option<(Subset, usize)>,
    pub holds: bool,
}

/// Necessary conditions on the chosen set of an equilibrium under costs:
/// every chosen item covers its cost at the margin, and no outside item can
/// profitably replace any part of the set.
pub fn cost_equilibrium_conditions(g: &GameSpec, p: &PriceVector) -> Result<CostConditions> {
    let Some(v) = g.single_buyer() else {
        return Err(Error::InvalidInput("cost conditions need a single buyer".into()));
    };
    let s = decide(v, p, g.map())?.chosen;
    Ok(conditions_for(v, g.cost_vector(), s))
}

pub fn conditions_for(v: &Valuation, costs: &[Value], s: Subset) -> CostConditions {
    let cost_of = |t: Subset| -> Value { t.items().map(|i| &costs[i]).sum() };
    let marginal_failure = s.items().find(|&i| v.item_marginal(i, s.without(i)) < costs[i]);
    let outside = v.full().difference(s);
    let exchange_failure = s.subsets().find_map(|t| {
        let kept = cost_of(s.difference(t));
        outside.items().find(|&j| v.value(t.with(j)) + &kept - &costs[j] > *v.value(s)).map(|j| (t, j))
    });
    CostConditions {
        chosen: s,
        holds: marginal_failure.is_none() && exchange_failure.is_none(),
        marginal_failure,
        exchange_failure,
    }
}

fn net(v: &Valuation, costs: &[Value], s: Subset) -> Value {
    v.value(s) - s.items().map(|i| &costs[i]).sum::<Value>()
}

/// Set maximizing `v(S) − c(S)`, first in bitmask order among ties.
pub fn welfare_optimum(v: &Valuation, costs: &[Value]) -> (Subset, Value) {
    let mut best = (Subset::EMPTY, Value::zero());
    for s in Subset::all(v.n()).skip(1) {
        let w = net(v, costs, s);
        if w > best.1 {
            best = (s, w);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LocalSearch {
    pub set: Subset,
    pub welfare: Value,
    pub moves: usize,
    pub optimum: Subset,
    pub optimum_welfare: Value,
    pub globally_optimal: bool,
}

/// Best-improvement hill climbing on `v(S) − c(S)` over single additions,
/// removals, and swaps, compared against the exhaustive optimum.
pub fn local_search_welfare(v: &Valuation, costs: &[Value], start: Subset) -> Result<LocalSearch> {
    if costs.len() != v.n() {
        return Err(Error::InvalidInput(format!("{} costs for {} items", costs.len(), v.n())));
    }
    if !start.is_subset_of(v.full()) {
        return Err(Error::InvalidInput(format!("start set {start} has items beyond {}", v.n())));
    }
    let mut set = start;
    let mut welfare = net(v, costs, set);
    let mut moves = 0;
    loop {
        let outside = v.full().difference(set);
        let neighbours = outside
            .items()
            .map(|j| set.with(j))
            .chain(set.items().map(|i| set.without(i)))
            .chain(set.items().flat_map(|i| outside.items().map(move |j| set.without(i).with(j))));
        let mut best: Option<(Subset, Value)> = None;
        for t in neighbours {
            let w = net(v, costs, t);
            if w > welfare && best.as_ref().is_none_or(|(_, b)| w > *b) {
                best = Some((t, w));
            }
        }
        match best {
            Some((t, w)) => {
                set = t;
                welfare = w;
                moves += 1;
            }
            None => break,
        }
    }
    let (optimum, optimum_welfare) = welfare_optimum(v, costs);
    Ok(LocalSearch { set, globally_optimal: welfare == optimum_welfare, welfare, moves, optimum, optimum_welfare })
}
