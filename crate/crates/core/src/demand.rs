//! The buyer side: demand correspondence, tie-breaking rules, and sampled
//! property probes for those rules.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::subset::{SetOrder, Subset};
use crate::valuation::Valuation;
use crate::value::Value;

/// Per-item prices; `None` marks an item the buyer cannot take at any price.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct PriceVector(Vec<Option<Value>>);

impl PriceVector {
    pub fn new(prices: Vec<Value>) -> Result<PriceVector> {
        PriceVector::with_blocked(prices.into_iter().map(Some).collect())
    }

    pub fn with_blocked(prices: Vec<Option<Value>>) -> Result<PriceVector> {
        if let Some(p) = prices.iter().flatten().find(|p| p.is_negative()) {
            return Err(Error::InvalidInput(format!("negative price {p}")));
        }
        Ok(PriceVector(prices))
    }

    pub fn zeros(n: usize) -> PriceVector {
        PriceVector(vec![Some(Value::zero()); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&Value> {
        self.0[i].as_ref()
    }

    /// Finite price of `i`; panics on a blocked item.
    pub fn price(&self, i: usize) -> &Value {
        self.0[i].as_ref().expect("price of a blocked item")
    }

    pub fn is_blocked(&self, i: usize) -> bool {
        self.0[i].is_none()
    }

    /// Items that can be bought.
    pub fn available(&self) -> Subset {
        Subset::from_items((0..self.len()).filter(|&i| self.0[i].is_some()))
    }

    /// `p(S)`; blocked items in `S` are a caller bug.
    pub fn total(&self, s: Subset) -> Value {
        s.items().map(|i| self.price(i)).sum()
    }

    /// Copy with item `i` set to `price`.
    pub fn with_price(&self, i: usize, price: Value) -> PriceVector {
        let mut next = self.clone();
        next.0[i] = Some(price);
        next
    }

    pub fn entries(&self) -> &[Option<Value>] {
        &self.0
    }
}

impl fmt::Debug for PriceVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (k, p) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            match p {
                Some(v) => write!(f, "{v}")?,
                None => f.write_str("blocked")?,
            }
        }
        f.write_str(")")
    }
}

impl fmt::Display for PriceVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

// JSON form: an array of rationals, with the string "blocked" for blocked items.
impl Serialize for PriceVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.0.iter().map(|p| match p {
            Some(v) => v.to_string(),
            None => "blocked".to_string(),
        }))
    }
}

impl<'de> Deserialize<'de> for PriceVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = Vec::<serde_json::Value>::deserialize(deserializer)?;
        let mut prices = Vec::with_capacity(raw.len());
        for entry in raw {
            match entry {
                serde_json::Value::String(s) if s == "blocked" => prices.push(None),
                other => prices.push(Some(Value::deserialize(other).map_err(D::Error::custom)?)),
            }
        }
        PriceVector::with_blocked(prices).map_err(D::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    /// Lexicographically first among the inclusion-maximal demanded sets.
    MaximalLex,
    /// Lexicographically first demanded set (a proper prefix comes first, so
    /// this can pick a non-maximal set).
    LexFirst,
    /// Greedy marginal-gain construction with lexicographic tie-breaking.
    GsGreedy,
}

/// Tie-breaking rule as written in scenario files. An omitted order is the
/// identity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionMapSpec {
    pub kind: MapKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<Vec<usize>>,
}

impl DecisionMapSpec {
    pub fn new(kind: MapKind) -> DecisionMapSpec {
        DecisionMapSpec { kind, order: None }
    }

    pub fn with_order(kind: MapKind, order: Vec<usize>) -> DecisionMapSpec {
        DecisionMapSpec { kind, order: Some(order) }
    }

    pub fn resolve(&self, n: usize) -> Result<DecisionMap> {
        let order = match &self.order {
            None => SetOrder::identity(n),
            Some(o) if o.len() == n => SetOrder::new(o)
                .ok_or_else(|| Error::InvalidInput(format!("order {o:?} is not a permutation of 0..{n}")))?,
            Some(o) => return Err(Error::InvalidInput(format!("order {o:?} has length {}, expected {n}", o.len()))),
        };
        Ok(DecisionMap { kind: self.kind, order, priority: self.order.clone().unwrap_or_else(|| (0..n).collect()) })
    }
}

/// A resolved tie-breaking rule over a fixed item count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionMap {
    kind: MapKind,
    order: SetOrder,
    priority: Vec<usize>,
}

impl DecisionMap {
    pub fn new(kind: MapKind, n: usize) -> DecisionMap {
        DecisionMapSpec::new(kind).resolve(n).expect("identity order is valid")
    }

    pub fn with_order(kind: MapKind, priority: &[usize]) -> Result<DecisionMap> {
        DecisionMapSpec::with_order(kind, priority.to_vec()).resolve(priority.len())
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn order(&self) -> &SetOrder {
        &self.order
    }

    /// Items from highest to lowest priority.
    pub fn priority(&self) -> &[usize] {
        &self.priority
    }

    pub fn spec(&self) -> DecisionMapSpec {
        DecisionMapSpec::with_order(self.kind, self.priority.clone())
    }

    pub fn n(&self) -> usize {
        self.priority.len()
    }
}

/// `D(v; p)` with its maximal utility.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Demand {
    pub best_utility: Value,
    pub demanded: Vec<Subset>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DemandResult {
    pub best_utility: Value,
    pub demanded: Vec<Subset>,
    pub chosen: Subset,
}

fn check_len(v: &Valuation, p: &PriceVector) -> Result<()> {
    if v.n() != p.len() {
        return Err(Error::InvalidInput(format!("{} prices for {} items", p.len(), v.n())));
    }
    Ok(())
}

/// Buyer utility `v(S) - p(S)` for every buyable `S`, indexed by bitmask.
/// Sets touching a blocked item are `None`.
pub fn utilities(v: &Valuation, p: &PriceVector) -> Vec<Option<Value>> {
    let avail = p.available();
    let n = v.n();
    let mut out: Vec<Option<Value>> = vec![None; 1 << n];
    out[0] = Some(Value::zero());
    // Build p(S) incrementally from S minus its lowest item.
    let mut cost: Vec<Value> = vec![Value::zero(); 1 << n];
    for s in Subset::all(n).skip(1) {
        if !s.is_subset_of(avail) {
            continue;
        }
        let low = s.bits().trailing_zeros() as usize;
        let rest = s.without(low);
        cost[s.index()] = &cost[rest.index()] + p.price(low);
        out[s.index()] = Some(v.value(s) - &cost[s.index()]);
    }
    out
}

fn best_of(utils: &[Option<Value>]) -> (Value, Vec<Subset>) {
    let best = utils.iter().flatten().max().cloned().unwrap_or_default();
    let demanded =
        utils.iter().enumerate().filter(|(_, u)| u.as_ref() == Some(&best)).map(|(s, _)| Subset(s as u32)).collect();
    (best, demanded)
}

/// `D(v; p)` by exhaustive scan of the buyable sets.
pub fn demand(v: &Valuation, p: &PriceVector) -> Result<Demand> {
    check_len(v, p)?;
    let (best_utility, demanded) = best_of(&utilities(v, p));
    Ok(Demand { best_utility, demanded })
}

fn greedy(v: &Valuation, p: &PriceVector, map: &DecisionMap) -> Subset {
    let avail = p.available();
    let mut chosen = Subset::EMPTY;
    loop {
        let mut best: Option<(Value, usize)> = None;
        for &i in map.priority() {
            if chosen.contains(i) || !avail.contains(i) {
                continue;
            }
            let gain = v.item_marginal(i, chosen) - p.price(i);
            // Strict improvement keeps the highest-priority maximizer.
            if best.as_ref().is_none_or(|(g, _)| gain > *g) {
                best = Some((gain, i));
            }
        }
        match best {
            Some((gain, i)) if !gain.is_negative() => chosen = chosen.with(i),
            _ => return chosen,
        }
    }
}

/// Applies the decision rule to precomputed [`utilities`], returning the best
/// utility and the chosen set without materializing the demanded list.
pub(crate) fn choose(
    v: &Valuation,
    p: &PriceVector,
    map: &DecisionMap,
    utils: &[Option<Value>],
) -> Result<(Value, Subset)> {
    let best = utils.iter().flatten().max().cloned().unwrap_or_default();
    let demanded = utils.iter().enumerate().filter(|(_, u)| u.as_ref() == Some(&best)).map(|(s, _)| Subset(s as u32));
    let chosen = match map.kind {
        MapKind::GsGreedy => {
            let chosen = greedy(v, p, map);
            if utils[chosen.index()].as_ref() != Some(&best) {
                return Err(Error::GreedyNotDemanded { chosen });
            }
            chosen
        }
        MapKind::LexFirst => map.order.first(demanded).expect("demand is never empty"),
        MapKind::MaximalLex => {
            demanded.max_by_key(|&s| map.order.superset_first_key(s)).expect("demand is never empty")
        }
    };
    Ok((best, chosen))
}

/// Applies the decision rule. The greedy rule is checked against the demand
/// correspondence and fails with [`Error::GreedyNotDemanded`] when it leaves it.
pub fn decide(v: &Valuation, p: &PriceVector, map: &DecisionMap) -> Result<DemandResult> {
    check_len(v, p)?;
    if map.n() != v.n() {
        return Err(Error::InvalidInput(format!("decision rule over {} items, valuation has {}", map.n(), v.n())));
    }
    let utils = utilities(v, p);
    let (best_utility, chosen) = choose(v, p, map, &utils)?;
    let (_, demanded) = best_of(&utils);
    Ok(DemandResult { best_utility, demanded, chosen })
}

/// Outcome of one sampled property.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PropertyCheck {
    pub passed: usize,
    pub failed: usize,
    pub first_counterexample: Option<Counterexample>,
}

impl PropertyCheck {
    fn record(&mut self, ok: bool, witness: impl FnOnce() -> Counterexample) {
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
            if self.first_counterexample.is_none() {
                self.first_counterexample = Some(witness());
            }
        }
    }

    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub prices: PriceVector,
    pub raised: Option<PriceVector>,
    pub chosen: Option<Subset>,
    pub chosen_after: Option<Subset>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PropertyReport {
    pub trials: usize,
    /// The rule returned a demanded set.
    pub demanded: PropertyCheck,
    pub maximality: PropertyCheck,
    pub up_consistency: PropertyCheck,
    pub gs_consistency: PropertyCheck,
}

/// Draws a price from `{k/q : 0 <= k <= q·cap}`.
pub fn sample_grid_price<R: Rng>(rng: &mut R, cap: &Value, q: u32) -> Value {
    let steps = (cap * Value::from_int(q as i64)).floor().to_u64().unwrap_or(0);
    let k = rng.gen_range(0..=steps) as i64;
    Value::ratio(k, q as i64)
}

/// Samples random price vectors and raised variants and checks maximality,
/// up-consistency, and GS-consistency of the rule. Prices are drawn from a
/// rational grid with denominator `q` up to `v(N)`, so ties are hit often.
pub fn probe_map_properties(
    v: &Valuation,
    map: &DecisionMap,
    trials: usize,
    seed: u64,
    q: u32,
) -> Result<PropertyReport> {
    if trials == 0 || q == 0 {
        return Err(Error::InvalidInput("probe needs trials >= 1 and q >= 1".into()));
    }
    let n = v.n();
    let cap = v.grand().clone().max(Value::one());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = PropertyReport {
        trials,
        demanded: PropertyCheck::default(),
        maximality: PropertyCheck::default(),
        up_consistency: PropertyCheck::default(),
        gs_consistency: PropertyCheck::default(),
    };
    let decide_or_note = |p: &PriceVector| decide(v, p, map);

    for _ in 0..trials {
        let p = PriceVector::new((0..n).map(|_| sample_grid_price(&mut rng, &cap, q)).collect())?;
        let base = match decide_or_note(&p) {
            Ok(r) => {
                report.demanded.record(true, || unreachable!());
                r
            }
            Err(Error::GreedyNotDemanded { chosen }) => {
                report.demanded.record(false, || Counterexample {
                    prices: p.clone(),
                    raised: None,
                    chosen: Some(chosen),
                    chosen_after: None,
                    note: "chosen set is not demanded".into(),
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        let chosen = base.chosen;
        let maximal = !base.demanded.iter().any(|&t| chosen.is_strict_subset_of(t));
        report.maximality.record(maximal, || Counterexample {
            prices: p.clone(),
            raised: None,
            chosen: Some(chosen),
            chosen_after: None,
            note: "a demanded strict superset exists".into(),
        });

        // Up-consistency: raise one coordinate.
        let i = rng.gen_range(0..n);
        let bump = Value::ratio(rng.gen_range(1..=q as i64), q as i64);
        let up = p.with_price(i, p.price(i) + &bump);
        if let Ok(after) = decide_or_note(&up) {
            let ok = after.chosen == chosen || !after.chosen.contains(i);
            report.up_consistency.record(ok, || Counterexample {
                prices: p.clone(),
                raised: Some(up.clone()),
                chosen: Some(chosen),
                chosen_after: Some(after.chosen),
                note: format!("raised item {i}"),
            });
        }

        // GS-consistency: raise a random subset of coordinates.
        let mut raised = p.clone();
        let mut unchanged = Subset::EMPTY;
        for j in 0..n {
            if rng.gen_bool(0.5) {
                let bump = Value::ratio(rng.gen_range(1..=q as i64), q as i64);
                raised = raised.with_price(j, p.price(j) + &bump);
            } else {
                unchanged = unchanged.with(j);
            }
        }
        if let Ok(after) = decide_or_note(&raised) {
            let ok = chosen.intersection(unchanged).is_subset_of(after.chosen);
            report.gs_consistency.record(ok, || Counterexample {
                prices: p.clone(),
                raised: Some(raised.clone()),
                chosen: Some(chosen),
                chosen_after: Some(after.chosen),
                note: format!("unchanged items {unchanged}"),
            });
        }
    }
    Ok(report)
}
