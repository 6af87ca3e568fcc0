//! Monotone set functions stored as full value tables, the example families
//! used throughout the crate, and exhaustive class membership tests.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::subset::{Subset, MAX_ITEMS};
use crate::value::Value;

/// A monotone valuation `v: 2^N -> Q+` with `v(∅) = 0`.
///
/// Immutable after construction; `table[S.index()]` is `v(S)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Valuation {
    n: usize,
    table: Vec<Value>,
    label: String,
}

impl Valuation {
    /// Validates the table (size, `v(∅) = 0`, monotonicity) and wraps it.
    pub fn from_table(n: usize, values: Vec<Value>) -> Result<Valuation> {
        if n == 0 || n > MAX_ITEMS {
            return Err(Error::SizeLimit { n, max: MAX_ITEMS });
        }
        if values.len() != 1 << n {
            return Err(Error::InvalidInput(format!(
                "table for {n} items needs {} entries, got {}",
                1usize << n,
                values.len()
            )));
        }
        if !values[0].is_zero() {
            return Err(Error::NonZeroEmptySet(Box::new(values[0].clone())));
        }
        for s in Subset::all(n) {
            for i in (0..n).filter(|&i| !s.contains(i)) {
                let t = s.with(i);
                if values[s.index()] > values[t.index()] {
                    return Err(Error::NonMonotone {
                        smaller: s,
                        larger: t,
                        smaller_value: Box::new(values[s.index()].clone()),
                        larger_value: Box::new(values[t.index()].clone()),
                    });
                }
            }
        }
        Ok(Valuation { n, table: values, label: String::new() })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Valuation {
        self.label = label.into();
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn table(&self) -> &[Value] {
        &self.table
    }

    pub fn full(&self) -> Subset {
        Subset::full(self.n)
    }

    pub fn value(&self, s: Subset) -> &Value {
        &self.table[s.index()]
    }

    /// `v(N)`.
    pub fn grand(&self) -> &Value {
        &self.table[self.full().index()]
    }

    /// `v(T | S) = v(S ∪ T) - v(S)` for disjoint `S`, `T`.
    pub fn marginal(&self, t: Subset, s: Subset) -> Result<Value> {
        if !t.is_disjoint(s) {
            return Err(Error::OverlappingSets(t, s));
        }
        Ok(self.value(s.union(t)) - self.value(s))
    }

    /// `v(i | S)`; `i` must not be in `S`.
    pub fn item_marginal(&self, i: usize, s: Subset) -> Value {
        debug_assert!(!s.contains(i));
        self.value(s.with(i)) - self.value(s)
    }

    /// `v(i | N \ i)`.
    pub fn last_marginal(&self, i: usize) -> Value {
        self.item_marginal(i, self.full().without(i))
    }
}

/// Serialized form of a valuation family, tagged by `"type"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    /// `v(S) = c` for every nonempty `S`.
    Bertrand {
        n: usize,
        c: Value,
    },
    /// `v(N) = c`, every other set is worth 0.
    AllOrNothing {
        n: usize,
        c: Value,
    },
    /// `v(S) = max_t Σ_{i∈S} w[t][i]`.
    Xos {
        n: usize,
        clauses: Vec<Vec<Value>>,
    },
    /// `v(S) = min(cap, Σ_{i∈S} w_i)`; no cap means additive.
    BudgetedAdditive {
        weights: Vec<Value>,
        #[serde(default)]
        cap: Option<Value>,
    },
    /// `v(S) = profile[|S|]`.
    Symmetric {
        n: usize,
        profile: Vec<Value>,
    },
    /// `v(S) = weight(∪_{i∈S} sets[i])`; element weights default to 1.
    Coverage {
        sets: Vec<Vec<String>>,
        #[serde(default)]
        weights: BTreeMap<String, Value>,
    },
    /// `v(S) = 1 + eps` on singletons and `H_|S|` for larger sets.
    Harmonic {
        n: usize,
        eps: Value,
    },
    Table {
        n: usize,
        values: Vec<Value>,
    },
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_ITEMS {
        Err(Error::SizeLimit { n, max: MAX_ITEMS })
    } else {
        Ok(())
    }
}

fn nonnegative(what: &str, vals: &[Value]) -> Result<()> {
    match vals.iter().find(|w| w.is_negative()) {
        Some(w) => Err(Error::MalformedFamily(format!("{what} must be nonnegative, got {w}"))),
        None => Ok(()),
    }
}

fn tabulate(n: usize, f: impl Fn(Subset) -> Value) -> Vec<Value> {
    Subset::all(n).map(f).collect()
}

// Family formulas are monotone whenever their parameters are well formed, so a
// table rejection here means the parameters were not.
fn finish(n: usize, table: Vec<Value>, label: String) -> Result<Valuation> {
    Valuation::from_table(n, table).map(|v| v.with_label(label)).map_err(|e| match e {
        Error::NonMonotone { .. } | Error::NonZeroEmptySet(_) => Error::MalformedFamily(e.to_string()),
        other => other,
    })
}

/// Builds the valuation described by `spec`.
pub fn build(spec: &FamilySpec) -> Result<Valuation> {
    match spec {
        FamilySpec::Bertrand { n, c } => {
            check_n(*n)?;
            nonnegative("c", std::slice::from_ref(c))?;
            let table = tabulate(*n, |s| if s.is_empty() { Value::zero() } else { c.clone() });
            finish(*n, table, format!("bertrand(n={n}, c={c})"))
        }
        FamilySpec::AllOrNothing { n, c } => {
            check_n(*n)?;
            nonnegative("c", std::slice::from_ref(c))?;
            let full = Subset::full(*n);
            let table = tabulate(*n, |s| if s == full { c.clone() } else { Value::zero() });
            finish(*n, table, format!("all_or_nothing(n={n}, c={c})"))
        }
        FamilySpec::Xos { n, clauses } => {
            check_n(*n)?;
            if clauses.is_empty() {
                return Err(Error::MalformedFamily("xos needs at least one clause".into()));
            }
            for clause in clauses {
                if clause.len() != *n {
                    return Err(Error::MalformedFamily(format!(
                        "xos clause has {} weights, expected {n}",
                        clause.len()
                    )));
                }
                nonnegative("xos weights", clause)?;
            }
            let table = tabulate(*n, |s| {
                clauses.iter().map(|w| s.items().map(|i| &w[i]).sum::<Value>()).max().unwrap_or_default()
            });
            finish(*n, table, format!("xos(n={n}, {} clauses)", clauses.len()))
        }
        FamilySpec::BudgetedAdditive { weights, cap } => {
            let n = weights.len();
            check_n(n)?;
            nonnegative("weights", weights)?;
            if let Some(c) = cap {
                nonnegative("cap", std::slice::from_ref(c))?;
            }
            let table = tabulate(n, |s| {
                let total: Value = s.items().map(|i| &weights[i]).sum();
                match cap {
                    Some(c) => total.min(c.clone()),
                    None => total,
                }
            });
            let label = match cap {
                Some(c) => format!("budgeted_additive(n={n}, cap={c})"),
                None => format!("additive(n={n})"),
            };
            finish(n, table, label)
        }
        FamilySpec::Symmetric { n, profile } => {
            check_n(*n)?;
            if profile.len() != n + 1 {
                return Err(Error::MalformedFamily(format!(
                    "symmetric profile needs {} entries, got {}",
                    n + 1,
                    profile.len()
                )));
            }
            if !profile[0].is_zero() {
                return Err(Error::MalformedFamily("symmetric profile must start at 0".into()));
            }
            if let Some(k) = (1..=*n).find(|&k| profile[k] < profile[k - 1]) {
                return Err(Error::MalformedFamily(format!(
                    "symmetric profile decreases at size {k}: {} < {}",
                    profile[k],
                    profile[k - 1]
                )));
            }
            let table = tabulate(*n, |s| profile[s.len()].clone());
            finish(*n, table, format!("symmetric(n={n})"))
        }
        FamilySpec::Coverage { sets, weights } => {
            let n = sets.len();
            check_n(n)?;
            let weights_vec: Vec<Value> = weights.values().cloned().collect();
            nonnegative("coverage weights", &weights_vec)?;
            let universe: BTreeSet<&String> = sets.iter().flatten().collect();
            let index: BTreeMap<&String, usize> = universe.iter().enumerate().map(|(k, e)| (*e, k)).collect();
            let elem_weight: Vec<Value> =
                universe.iter().map(|e| weights.get(*e).cloned().unwrap_or_else(Value::one)).collect();
            let masks: Vec<Vec<usize>> = sets
                .iter()
                .map(|y| y.iter().map(|e| index[e]).collect::<BTreeSet<_>>().into_iter().collect())
                .collect();
            let table = tabulate(n, |s| {
                let covered: BTreeSet<usize> = s.items().flat_map(|i| masks[i].iter().copied()).collect();
                covered.iter().map(|&e| &elem_weight[e]).sum()
            });
            finish(n, table, format!("coverage(n={n}, |U|={})", universe.len()))
        }
        FamilySpec::Harmonic { n, eps } => {
            check_n(*n)?;
            nonnegative("eps", std::slice::from_ref(eps))?;
            let mut h = vec![Value::zero()];
            for k in 1..=*n {
                h.push(&h[k - 1] + Value::ratio(1, k as i64));
            }
            let single = Value::one() + eps;
            let table = tabulate(*n, |s| match s.len() {
                0 => Value::zero(),
                1 => single.clone(),
                k => h[k].clone(),
            });
            finish(*n, table, format!("harmonic(n={n}, eps={eps})"))
        }
        FamilySpec::Table { n, values } => {
            check_n(*n)?;
            Valuation::from_table(*n, values.clone()).map(|v| v.with_label(format!("table(n={n})")))
        }
    }
}

/// Which defining inequality failed, with the sets that exhibit it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassWitness {
    /// `v(s) + v(t) < v(s ∪ t)` for disjoint `s`, `t`.
    Subadditive { s: Subset, t: Subset },
    /// `v(item | base) < v(item | base ∪ {other})`.
    Submodular { base: Subset, item: usize, other: usize },
    /// `v(base+ij) + v(base+k)` exceeds both exchanges.
    GrossSubstitutes { base: Subset, i: usize, j: usize, k: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassReport {
    pub monotone: bool,
    pub subadditive: bool,
    pub submodular: bool,
    pub gross_substitutes: bool,
    pub subadditive_witness: Option<ClassWitness>,
    pub submodular_witness: Option<ClassWitness>,
    pub gross_substitutes_witness: Option<ClassWitness>,
}

fn submodular_violation(v: &Valuation) -> Option<ClassWitness> {
    let n = v.n();
    for base in Subset::all(n) {
        for i in (0..n).filter(|&i| !base.contains(i)) {
            for j in (i + 1..n).filter(|&j| !base.contains(j)) {
                let lhs = v.value(base.with(i)) + v.value(base.with(j));
                let rhs = v.value(base.with(i).with(j)) + v.value(base);
                if lhs < rhs {
                    return Some(ClassWitness::Submodular { base, item: j, other: i });
                }
            }
        }
    }
    None
}

fn subadditive_violation(v: &Valuation) -> Option<ClassWitness> {
    let full = v.full();
    // Disjoint pairs suffice: v(T \ S) <= v(T) by monotonicity.
    for s in Subset::all(v.n()) {
        for t in full.difference(s).subsets() {
            if t.index() < s.index() {
                continue;
            }
            if v.value(s) + v.value(t) < *v.value(s.union(t)) {
                return Some(ClassWitness::Subadditive { s, t });
            }
        }
    }
    None
}

fn exchange_violation(v: &Valuation) -> Option<ClassWitness> {
    let n = v.n();
    for base in Subset::all(n) {
        let free: Vec<usize> = (0..n).filter(|&i| !base.contains(i)).collect();
        for &i in &free {
            for &j in free.iter().filter(|&&j| j > i) {
                for &k in free.iter().filter(|&&k| k != i && k != j) {
                    let lhs = v.value(base.with(i).with(j)) + v.value(base.with(k));
                    let via_i = v.value(base.with(i).with(k)) + v.value(base.with(j));
                    let via_j = v.value(base.with(j).with(k)) + v.value(base.with(i));
                    if lhs > via_i.max(via_j) {
                        return Some(ClassWitness::GrossSubstitutes { base, i, j, k });
                    }
                }
            }
        }
    }
    None
}

/// Exhaustive class membership.
///
/// Submodularity uses the equivalent local form
/// `v(S+i) + v(S+j) >= v(S+ij) + v(S)`. Gross substitutes is decided as
/// submodularity plus the triple-exchange inequality over all `S` and
/// distinct `i, j, k ∉ S`.
pub fn classify(v: &Valuation) -> ClassReport {
    let submodular_witness = submodular_violation(v);
    let submodular = submodular_witness.is_none();
    // Submodular with v(∅) = 0 already implies subadditive.
    let subadditive_witness = if submodular { None } else { subadditive_violation(v) };
    let gross_substitutes_witness = if submodular { exchange_violation(v) } else { submodular_witness.clone() };
    ClassReport {
        monotone: true,
        subadditive: subadditive_witness.is_none(),
        submodular,
        gross_substitutes: gross_substitutes_witness.is_none(),
        subadditive_witness,
        submodular_witness,
        gross_substitutes_witness,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(xs: &[i64]) -> Vec<Value> {
        xs.iter().map(|&x| Value::from_int(x)).collect()
    }

    fn s(items: &[usize]) -> Subset {
        Subset::from_items(items.iter().copied())
    }

    pub(crate) fn xos_example() -> Valuation {
        build(&FamilySpec::Symmetric { n: 3, profile: ints(&[0, 2, 2, 3]) }).unwrap()
    }

    #[test]
    fn table_validation() {
        assert!(Valuation::from_table(1, ints(&[0, 1])).is_ok());
        let v = Valuation::from_table(2, ints(&[0, 2, 2, 3])).unwrap();
        assert_eq!(*v.value(s(&[0])), Value::from_int(2));
        assert_eq!(*v.grand(), Value::from_int(3));
        match Valuation::from_table(2, ints(&[0, 2, 2, 1])) {
            Err(Error::NonMonotone { smaller, larger, .. }) => {
                assert_eq!(smaller, s(&[0]));
                assert_eq!(larger, s(&[0, 1]));
            }
            other => panic!("expected NonMonotone, got {other:?}"),
        }
        assert!(matches!(Valuation::from_table(1, ints(&[1, 1])), Err(Error::NonZeroEmptySet(_))));
        assert!(matches!(Valuation::from_table(21, vec![]), Err(Error::SizeLimit { .. })));
        assert!(matches!(Valuation::from_table(2, ints(&[0, 1])), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn marginals() {
        let b = build(&FamilySpec::Bertrand { n: 2, c: Value::from_int(5) }).unwrap();
        assert_eq!(b.marginal(s(&[1]), s(&[0])).unwrap(), Value::zero());
        assert_eq!(b.marginal(Subset::EMPTY, s(&[0, 1])).unwrap(), Value::zero());
        assert!(matches!(b.marginal(s(&[0]), s(&[0, 1])), Err(Error::OverlappingSets(..))));
        let cov = build(&FamilySpec::Coverage {
            sets: vec![vec!["a".into(), "b".into()], vec!["b".into(), "c".into()]],
            weights: BTreeMap::new(),
        })
        .unwrap();
        assert_eq!(cov.marginal(s(&[1]), s(&[0])).unwrap(), Value::one());
    }

    #[test]
    fn family_tables() {
        let b = build(&FamilySpec::Bertrand { n: 3, c: Value::from_int(2) }).unwrap();
        assert_eq!(b.table(), &ints(&[0, 2, 2, 2, 2, 2, 2, 2])[..]);

        let h = build(&FamilySpec::Harmonic { n: 3, eps: Value::ratio(1, 10) }).unwrap();
        let expect: Vec<Value> =
            ["0", "11/10", "11/10", "3/2", "11/10", "3/2", "3/2", "11/6"].iter().map(|x| x.parse().unwrap()).collect();
        assert_eq!(h.table(), &expect[..]);

        let mut weights = ints(&[9, 9, 9, 9]);
        weights.extend(ints(&[3; 9]));
        let ba = build(&FamilySpec::BudgetedAdditive { weights, cap: Some(Value::from_int(27)) }).unwrap();
        assert_eq!(*ba.value(s(&[0, 1, 2])), Value::from_int(27));
        assert_eq!(*ba.grand(), Value::from_int(27));

        let xos = build(&FamilySpec::Xos {
            n: 3,
            clauses: vec![ints(&[1, 1, 1]), ints(&[2, 0, 0]), ints(&[0, 2, 0]), ints(&[0, 0, 2])],
        })
        .unwrap();
        assert_eq!(xos.table(), xos_example().table());
    }

    #[test]
    fn malformed_families() {
        let bad = FamilySpec::Symmetric { n: 2, profile: ints(&[0, 3, 2]) };
        assert!(matches!(build(&bad), Err(Error::MalformedFamily(_))));
        let bad = FamilySpec::Harmonic { n: 3, eps: Value::ratio(3, 4) };
        assert!(matches!(build(&bad), Err(Error::MalformedFamily(_))));
        let bad = FamilySpec::BudgetedAdditive { weights: ints(&[1, -1]), cap: None };
        assert!(matches!(build(&bad), Err(Error::MalformedFamily(_))));
        let bad = FamilySpec::Xos { n: 2, clauses: vec![ints(&[1])] };
        assert!(matches!(build(&bad), Err(Error::MalformedFamily(_))));
    }

    #[test]
    fn xos_example_is_subadditive_not_submodular() {
        let r = classify(&xos_example());
        assert!(r.subadditive && !r.submodular && !r.gross_substitutes);
        // v(2 | {0}) = 0 < 1 = v(2 | {0,1})
        let Some(ClassWitness::Submodular { base, item, other }) = r.submodular_witness else {
            panic!("missing witness");
        };
        let v = xos_example();
        assert!(v.item_marginal(item, base) < v.item_marginal(item, base.with(other)));
        assert_eq!((base, item, other), (s(&[0]), 2, 1));
    }

    #[test]
    fn additive_and_harmonic_are_gross_substitutes() {
        let add = build(&FamilySpec::BudgetedAdditive { weights: ints(&[3, 5]), cap: None }).unwrap();
        let r = classify(&add);
        assert!(r.monotone && r.subadditive && r.submodular && r.gross_substitutes);
        let h = build(&FamilySpec::Harmonic { n: 4, eps: Value::zero() }).unwrap();
        assert!(classify(&h).gross_substitutes);
    }

    #[test]
    fn complements_fail_subadditivity() {
        let v = build(&FamilySpec::AllOrNothing { n: 2, c: Value::from_int(10) }).unwrap();
        let r = classify(&v);
        assert!(!r.subadditive);
        assert_eq!(r.subadditive_witness, Some(ClassWitness::Subadditive { s: s(&[0]), t: s(&[1]) }));
    }

    #[test]
    fn budgeted_additive_can_fail_exchange() {
        // min(2, w) with w = (1, 1, 2): v(01) + v(2) = 4 > v(02) + v(1) = 3.
        let v =
            build(&FamilySpec::BudgetedAdditive { weights: ints(&[1, 1, 2]), cap: Some(Value::from_int(2)) }).unwrap();
        let r = classify(&v);
        assert!(r.submodular);
        assert!(!r.gross_substitutes);
        assert!(matches!(r.gross_substitutes_witness, Some(ClassWitness::GrossSubstitutes { .. })));
    }
}
