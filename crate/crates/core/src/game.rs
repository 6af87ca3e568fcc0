//! The pricing game: seller utilities, exact best responses, and equilibrium
//! verification.

use serde::Serialize;

use crate::demand::{choose, utilities, DecisionMap, MapKind, PriceVector};
use crate::error::{Error, Result};
use crate::subset::Subset;
use crate::valuation::Valuation;
use crate::value::Value;

/// One buyer population with its weight (count or probability mass).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Buyer {
    pub weight: Value,
    pub valuation: Valuation,
}

/// Buyers, per-item service costs, the buyers' tie-breaking rule, and which
/// seller controls which items.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameSpec {
    buyers: Vec<Buyer>,
    costs: Vec<Value>,
    map: DecisionMap,
    ownership: Vec<Subset>,
}

impl GameSpec {
    /// Single buyer, zero costs, one seller per item.
    pub fn new(valuation: Valuation, map: DecisionMap) -> Result<GameSpec> {
        GameSpec::with_buyers(vec![Buyer { weight: Value::one(), valuation }], map)
    }

    pub fn with_buyers(buyers: Vec<Buyer>, map: DecisionMap) -> Result<GameSpec> {
        let Some(first) = buyers.first() else {
            return Err(Error::InvalidInput("a game needs at least one buyer".into()));
        };
        let n = first.valuation.n();
        if let Some(b) = buyers.iter().find(|b| b.valuation.n() != n) {
            return Err(Error::InvalidInput(format!(
                "buyer valuations disagree on item count: {} vs {n}",
                b.valuation.n()
            )));
        }
        if let Some(b) = buyers.iter().find(|b| !b.weight.is_positive()) {
            return Err(Error::InvalidInput(format!("buyer weight must be positive, got {}", b.weight)));
        }
        if map.n() != n {
            return Err(Error::InvalidInput(format!("decision rule over {} items, game has {n}", map.n())));
        }
        Ok(GameSpec { buyers, costs: vec![Value::zero(); n], map, ownership: (0..n).map(Subset::singleton).collect() })
    }

    pub fn costs(mut self, costs: Vec<Value>) -> Result<GameSpec> {
        if costs.len() != self.n() {
            return Err(Error::InvalidInput(format!("{} costs for {} items", costs.len(), self.n())));
        }
        if let Some(c) = costs.iter().find(|c| c.is_negative()) {
            return Err(Error::InvalidInput(format!("negative cost {c}")));
        }
        self.costs = costs;
        Ok(self)
    }

    /// Assigns items to sellers; the parts must partition `N` and be nonempty.
    pub fn ownership(mut self, parts: Vec<Subset>) -> Result<GameSpec> {
        let mut seen = Subset::EMPTY;
        for part in &parts {
            if part.is_empty() || !part.is_disjoint(seen) {
                return Err(Error::InvalidInput(format!("ownership parts must be nonempty and disjoint: {parts:?}")));
            }
            seen = seen.union(*part);
        }
        if seen != Subset::full(self.n()) {
            return Err(Error::InvalidInput(format!("ownership does not cover all {} items", self.n())));
        }
        self.ownership = parts;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.buyers[0].valuation.n()
    }

    pub fn buyers(&self) -> &[Buyer] {
        &self.buyers
    }

    pub fn cost(&self, item: usize) -> &Value {
        &self.costs[item]
    }

    pub fn cost_vector(&self) -> &[Value] {
        &self.costs
    }

    pub fn cost_of(&self, s: Subset) -> Value {
        s.items().map(|i| &self.costs[i]).sum()
    }

    pub fn has_costs(&self) -> bool {
        self.costs.iter().any(|c| !c.is_zero())
    }

    pub fn map(&self) -> &DecisionMap {
        &self.map
    }

    pub fn with_map(&self, map: DecisionMap) -> GameSpec {
        GameSpec { map, ..self.clone() }
    }

    pub fn sellers(&self) -> &[Subset] {
        &self.ownership
    }

    pub fn single_buyer(&self) -> Option<&Valuation> {
        match self.buyers.as_slice() {
            [only] => Some(&only.valuation),
            _ => None,
        }
    }

    /// Total buyer weight; bounds how fast a seller's utility moves with its price.
    pub fn total_weight(&self) -> Value {
        self.buyers.iter().map(|b| &b.weight).sum()
    }

    /// The item of a single-item seller.
    pub fn item_of(&self, seller: usize) -> Result<usize> {
        let part = self.ownership.get(seller).ok_or_else(|| Error::InvalidInput(format!("no seller {seller}")))?;
        match part.len() {
            1 => Ok(part.items().next().unwrap()),
            _ => Err(Error::MultiItemSeller(seller)),
        }
    }

    fn check_prices(&self, p: &PriceVector) -> Result<()> {
        if p.len() != self.n() {
            return Err(Error::InvalidInput(format!("{} prices for {} items", p.len(), self.n())));
        }
        Ok(())
    }
}

/// What every buyer takes at a profile, with the resulting payoffs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Outcome {
    pub chosen: Vec<Subset>,
    pub seller_utilities: Vec<Value>,
    /// Buyer value minus service cost, summed over buyers with their weights.
    pub welfare: Value,
}

struct BuyerView {
    utils: Vec<Option<Value>>,
    chosen: Subset,
}

fn view(g: &GameSpec, b: &Buyer, p: &PriceVector) -> Result<BuyerView> {
    let utils = utilities(&b.valuation, p);
    let (_, chosen) = choose(&b.valuation, p, g.map(), &utils)?;
    Ok(BuyerView { utils, chosen })
}

fn views(g: &GameSpec, p: &PriceVector) -> Result<Vec<BuyerView>> {
    g.buyers.iter().map(|b| view(g, b, p)).collect()
}

fn outcome_from(g: &GameSpec, p: &PriceVector, views: &[BuyerView]) -> Outcome {
    let chosen: Vec<Subset> = views.iter().map(|w| w.chosen).collect();
    let seller_utilities = g
        .ownership
        .iter()
        .map(|owned| {
            g.buyers
                .iter()
                .zip(&chosen)
                .map(|(b, x)| {
                    let margin: Value = owned.intersection(*x).items().map(|j| p.price(j) - &g.costs[j]).sum();
                    &b.weight * &margin
                })
                .sum()
        })
        .collect();
    let welfare = g.buyers.iter().zip(&chosen).map(|(b, x)| &b.weight * (b.valuation.value(*x) - g.cost_of(*x))).sum();
    Outcome { chosen, seller_utilities, welfare }
}

/// Chosen sets, seller utilities, and welfare at `p`.
pub fn outcome(g: &GameSpec, p: &PriceVector) -> Result<Outcome> {
    g.check_prices(p)?;
    Ok(outcome_from(g, p, &views(g, p)?))
}

/// `u_s(p) = Σ_buyers w · Σ_{j ∈ N_s ∩ X(p)} (p_j − c_j)` for every seller `s`.
pub fn seller_utilities(g: &GameSpec, p: &PriceVector) -> Result<Vec<Value>> {
    outcome(g, p).map(|o| o.seller_utilities)
}

/// Supremum of a single-item seller's utility over its own price.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BestResponse {
    pub value: Value,
    /// Whether some price reaches `value` exactly. When false, the tie at
    /// `price` is resolved against the seller and only prices just below it
    /// come arbitrarily close.
    pub attained: bool,
    /// Price attaining the supremum, or the breakpoint it is approached from.
    pub price: Value,
}

impl BestResponse {
    /// A concrete deviation: `price` when attained, else `price − δ` (never
    /// below `floor`, the seller's cost).
    pub fn witness_price(&self, delta: &Value, floor: &Value) -> Value {
        if self.attained {
            self.price.clone()
        } else {
            (&self.price - delta).max(floor.clone())
        }
    }
}

// A buyer takes item `i` at own price `x` iff x < A − B, where A is the best
// utility over sets containing i (not paying for i) and B the best over sets
// without i. At x = A − B the tie-breaking rule decides.
pub(crate) fn threshold(utils: &[Option<Value>], item: usize, own_price: &Value) -> Value {
    let mut with: Option<&Value> = None;
    let mut without: Option<&Value> = None;
    for (s, u) in utils.iter().enumerate() {
        let Some(u) = u else { continue };
        let slot = if s >> item & 1 == 1 { &mut with } else { &mut without };
        if slot.is_none_or(|best| u > best) {
            *slot = Some(u);
        }
    }
    let without = without.expect("empty set is always buyable");
    match with {
        Some(w) => w + own_price - without,
        None => Value::zero(),
    }
}

/// Per-buyer thresholds, weights, and the supremum they imply.
struct Sup {
    value: Value,
    /// Breakpoints reaching `value` as a left limit, highest first.
    candidates: Vec<Value>,
}

fn supremum(thresholds: &[(Value, &Value)], cost: &Value) -> Sup {
    let mut points: Vec<&Value> = thresholds.iter().map(|(d, _)| d).collect();
    points.sort();
    points.dedup();
    let mut best = Value::zero();
    let mut candidates = Vec::new();
    for d in points.into_iter().rev() {
        let mass: Value = thresholds.iter().filter(|(t, _)| t >= d).map(|(_, w)| *w).sum();
        let left = (d - cost) * mass;
        if left > best {
            best = left;
            candidates = vec![d.clone()];
        } else if left == best && best.is_positive() {
            candidates.push(d.clone());
        }
    }
    Sup { value: best, candidates }
}

pub(crate) fn deviation_utility(g: &GameSpec, item: usize, p: &PriceVector, price: &Value) -> Result<Value> {
    let q = p.with_price(item, price.clone());
    let mut total = Value::zero();
    for b in &g.buyers {
        let utils = utilities(&b.valuation, &q);
        let (_, x) = choose(&b.valuation, &q, g.map(), &utils)?;
        if x.contains(item) {
            total += &b.weight * (price - &g.costs[item]);
        }
    }
    Ok(total)
}

fn best_response_from(
    g: &GameSpec,
    item: usize,
    p: &PriceVector,
    thresholds: &[(Value, &Value)],
) -> Result<BestResponse> {
    let cost = &g.costs[item];
    let sup = supremum(thresholds, cost);
    if !sup.value.is_positive() {
        // Pricing at cost earns exactly zero whether or not the item sells.
        return Ok(BestResponse { value: Value::zero(), attained: true, price: cost.clone() });
    }
    for d in &sup.candidates {
        if deviation_utility(g, item, p, d)? == sup.value {
            return Ok(BestResponse { value: sup.value, attained: true, price: d.clone() });
        }
    }
    Ok(BestResponse { value: sup.value, attained: false, price: sup.candidates[0].clone() })
}

/// Exact best response of a single-item seller to the other prices in `p`
/// (the seller's own entry is ignored).
///
/// Utility is piecewise linear in the own price with downward jumps at the
/// buyers' indifference points, so the supremum is found by evaluating every
/// breakpoint from the left and checking the tie at the breakpoint itself.
pub fn best_response(g: &GameSpec, seller: usize, p: &PriceVector) -> Result<BestResponse> {
    g.check_prices(p)?;
    let item = g.item_of(seller)?;
    let q = p.with_price(item, Value::zero());
    let mut ts = Vec::with_capacity(g.buyers.len());
    for b in &g.buyers {
        let utils = utilities(&b.valuation, &q);
        ts.push((threshold(&utils, item, &Value::zero()), &b.weight));
    }
    best_response_from(g, item, p, &ts)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    ExactNe,
    EpsNe { epsilon: Value },
    NotNe,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SellerReport {
    pub seller: usize,
    pub item: usize,
    pub utility: Value,
    pub best_response: BestResponse,
    /// `sup − utility`; a deviation gains arbitrarily close to this.
    pub gain: Value,
}

/// Outcome of the two-condition test on `S = X(p)`:
/// (1) every `i ∈ S` has a `T ∌ i` with the same buyer utility as `S`;
/// (2) no `T ∋ i` for `i ∉ S` beats `S` once `i` is free.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Characterization {
    pub holds: bool,
    /// Item in `S` with no equally good set avoiding it.
    pub condition_one_failure: Option<usize>,
    /// Item outside `S` and the set `T ∋ item` that beats `S` with `item` free.
    pub condition_two_failure: Option<(usize, Subset)>,
    /// The best-response verdict (exact) agrees with `holds`; always true
    /// under the maximal rule.
    pub agrees_with_best_response: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquilibriumReport {
    pub prices: PriceVector,
    pub epsilon: Value,
    pub verdict: Verdict,
    pub chosen: Vec<Subset>,
    pub welfare: Value,
    pub sellers: Vec<SellerReport>,
    pub max_gain: Value,
    pub characterization: Option<Characterization>,
}

impl EquilibriumReport {
    pub fn is_exact(&self) -> bool {
        self.verdict == Verdict::ExactNe
    }

    /// Exact or within `epsilon`.
    pub fn passes(&self) -> bool {
        self.verdict != Verdict::NotNe
    }

    /// The lowest-indexed seller with the largest gain, if any gains at all.
    pub fn worst_deviation(&self) -> Option<&SellerReport> {
        self.sellers.iter().filter(|s| s.gain.is_positive()).fold(None, |best: Option<&SellerReport>, s| match best {
            Some(b) if b.gain >= s.gain => Some(b),
            _ => Some(s),
        })
    }

    pub fn utilities(&self) -> Vec<Value> {
        self.sellers.iter().map(|s| s.utility.clone()).collect()
    }
}

/// Checks the two-condition characterization for a single buyer with zero
/// costs, scanning sets directly.
pub fn characterization(v: &Valuation, p: &PriceVector, chosen: Subset) -> Characterization {
    let n = v.n();
    let avail = p.available();
    let buyable: Vec<Subset> = avail.subsets().collect();
    let util = |t: Subset| v.value(t) - p.total(t);
    let us = util(chosen);
    let condition_one_failure = chosen.items().find(|&i| !buyable.iter().any(|&t| !t.contains(i) && util(t) == us));
    let condition_two_failure = (0..n).filter(|&i| !chosen.contains(i) && avail.contains(i)).find_map(|i| {
        buyable.iter().find(|&&t| t.contains(i) && v.value(t) - p.total(t.without(i)) > us).map(|&t| (i, t))
    });
    Characterization {
        holds: condition_one_failure.is_none() && condition_two_failure.is_none(),
        condition_one_failure,
        condition_two_failure,
        agrees_with_best_response: true,
    }
}

/// Per seller, one `(threshold, weight)` pair for each buyer.
pub(crate) type SellerGains = Vec<Vec<(Value, Value)>>;

/// Largest unilateral gain at `p`, together with the per-buyer views.
/// Fast path shared by the full report and by grid scans.
pub(crate) fn gains(g: &GameSpec, p: &PriceVector) -> Result<(Outcome, SellerGains)> {
    let vs = views(g, p)?;
    let out = outcome_from(g, p, &vs);
    let mut per_seller = Vec::with_capacity(g.ownership.len());
    for seller in 0..g.ownership.len() {
        let item = g.item_of(seller)?;
        let own = p.get(item).cloned().unwrap_or_default();
        per_seller
            .push(vs.iter().zip(&g.buyers).map(|(w, b)| (threshold(&w.utils, item, &own), b.weight.clone())).collect());
    }
    Ok((out, per_seller))
}

/// `max_s (sup_s − u_s)` with early exit once it exceeds `limit`.
pub(crate) fn max_gain_up_to(g: &GameSpec, p: &PriceVector, limit: &Value) -> Result<(Value, Outcome)> {
    let vs = views(g, p)?;
    let out = outcome_from(g, p, &vs);
    let mut worst = Value::zero();
    for seller in 0..g.ownership.len() {
        let item = g.item_of(seller)?;
        let own = p.get(item).cloned().unwrap_or_default();
        let ts: Vec<(Value, &Value)> =
            vs.iter().zip(&g.buyers).map(|(w, b)| (threshold(&w.utils, item, &own), &b.weight)).collect();
        let gain = supremum(&ts, &g.costs[item]).value - &out.seller_utilities[seller];
        if gain > worst {
            worst = gain;
            if worst > *limit {
                break;
            }
        }
    }
    Ok((worst, out))
}

/// Verifies `p` against exact and `ε`-Nash conditions.
///
/// Every seller must control a single item and every price must be finite.
/// For a single buyer without costs the two-condition characterization is
/// evaluated too; under the maximal rule it must agree with the
/// best-response verdict.
pub fn check_equilibrium(g: &GameSpec, p: &PriceVector, epsilon: &Value) -> Result<EquilibriumReport> {
    g.check_prices(p)?;
    if epsilon.is_negative() {
        return Err(Error::InvalidInput(format!("negative epsilon {epsilon}")));
    }
    if p.available() != Subset::full(g.n()) {
        return Err(Error::InvalidInput("equilibrium check needs finite prices".into()));
    }
    let (out, per_seller) = gains(g, p)?;
    let mut sellers = Vec::with_capacity(per_seller.len());
    let mut max_gain = Value::zero();
    for (seller, ts) in per_seller.iter().enumerate() {
        let item = g.item_of(seller)?;
        let refs: Vec<(Value, &Value)> = ts.iter().map(|(d, w)| (d.clone(), w)).collect();
        let br = best_response_from(g, item, p, &refs)?;
        let utility = out.seller_utilities[seller].clone();
        let gain = &br.value - &utility;
        debug_assert!(!gain.is_negative(), "utility above supremum");
        max_gain = max_gain.max(gain.clone());
        sellers.push(SellerReport { seller, item, utility, best_response: br, gain });
    }
    let verdict = if max_gain.is_zero() {
        Verdict::ExactNe
    } else if max_gain <= *epsilon {
        Verdict::EpsNe { epsilon: epsilon.clone() }
    } else {
        Verdict::NotNe
    };
    let characterization = match g.single_buyer() {
        Some(v) if !g.has_costs() => {
            let mut c = characterization(v, p, out.chosen[0]);
            c.agrees_with_best_response = c.holds == max_gain.is_zero();
            if g.map().kind() == MapKind::MaximalLex {
                debug_assert!(c.agrees_with_best_response, "characterization disagrees at {p}");
            }
            Some(c)
        }
        _ => None,
    };
    Ok(EquilibriumReport {
        prices: p.clone(),
        epsilon: epsilon.clone(),
        verdict,
        chosen: out.chosen,
        welfare: out.welfare,
        sellers,
        max_gain,
        characterization,
    })
}
