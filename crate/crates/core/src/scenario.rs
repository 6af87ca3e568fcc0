//! Scenario files: a JSON description of one game plus the parameters the
//! command-line tool needs.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::demand::{DecisionMapSpec, MapKind, PriceVector};
use crate::dynamics::{AffineRule, Schedule};
use crate::error::Error;
use crate::game::{Buyer, GameSpec};
use crate::subset::Subset;
use crate::valuation::{build, FamilySpec, Valuation};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuyerSpec {
    #[serde(default = "Value::one")]
    pub weight: Value,
    pub valuation: FamilySpec,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    /// Single buyer; exclusive with `buyers`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valuation: Option<FamilySpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub buyers: Vec<BuyerSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub costs: Option<Vec<Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<DecisionMapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ownership: Option<Vec<Subset>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prices: Option<PriceVector>,
    /// Order in which full-trade prices are raised.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Schedule>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rules: Vec<AffineRule>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid scenario: {0}")]
    Validation(#[from] Error),
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario, ScenarioError> {
        let scenario: Scenario = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
        Scenario::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Builds every valuation and the game so that bad input fails at load.
    pub fn validate(&self) -> Result<(), Error> {
        if self.valuation.is_some() == !self.buyers.is_empty() {
            return Err(Error::InvalidInput("give exactly one of `valuation` and `buyers`".into()));
        }
        if let Some(p) = &self.prices {
            if p.len() != self.buyer_valuations()?[0].n() {
                return Err(Error::InvalidInput(format!("{} prices for {} items", p.len(), self.n()?)));
            }
        }
        if self.valuation.is_some() || !self.buyers.is_empty() {
            self.game()?;
        }
        Ok(())
    }

    fn buyer_valuations(&self) -> Result<Vec<Valuation>, Error> {
        match &self.valuation {
            Some(spec) => Ok(vec![build(spec)?]),
            None => self.buyers.iter().map(|b| build(&b.valuation)).collect(),
        }
    }

    pub fn n(&self) -> Result<usize, Error> {
        Ok(self.buyer_valuations()?[0].n())
    }

    /// The single buyer's valuation.
    pub fn valuation(&self) -> Result<Valuation, Error> {
        match (&self.valuation, self.buyers.as_slice()) {
            (Some(spec), _) => build(spec),
            (None, [only]) => build(&only.valuation),
            _ => Err(Error::InvalidInput("this command needs a single buyer".into())),
        }
    }

    pub fn map_spec(&self) -> DecisionMapSpec {
        self.map.clone().unwrap_or(DecisionMapSpec::new(MapKind::MaximalLex))
    }

    pub fn game(&self) -> Result<GameSpec, Error> {
        let valuations = self.buyer_valuations()?;
        let n = valuations[0].n();
        let map = self.map_spec().resolve(n)?;
        let buyers = match &self.valuation {
            Some(_) => vec![Buyer { weight: Value::one(), valuation: valuations.into_iter().next().unwrap() }],
            None => self
                .buyers
                .iter()
                .zip(valuations)
                .map(|(b, valuation)| Buyer { weight: b.weight.clone(), valuation })
                .collect(),
        };
        let mut g = GameSpec::with_buyers(buyers, map)?;
        if let Some(c) = &self.costs {
            g = g.costs(c.clone())?;
        }
        if let Some(parts) = &self.ownership {
            g = g.ownership(parts.clone())?;
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_keeps_rationals() {
        let text = r#"{
            "name": "costs",
            "valuation": {"type": "budgeted_additive", "weights": [1, 1, 2], "cap": 2},
            "costs": ["1/10", 0.1, "3/10"],
            "map": {"kind": "lex_first"},
            "prices": ["0.15", "3/20", "blocked"],
            "epsilon": 1e-2
        }"#;
        let s = Scenario::from_json(text).unwrap();
        assert_eq!(s.costs.as_ref().unwrap()[1], Value::ratio(1, 10));
        assert_eq!(s.epsilon, Some(Value::ratio(1, 100)));
        let again = Scenario::from_json(&s.to_json()).unwrap();
        assert_eq!(again, s);
        assert_eq!(s.game().unwrap().cost(2), &Value::ratio(3, 10));
    }

    #[test]
    fn parse_errors_carry_positions() {
        match Scenario::from_json("{\n  \"valuation\": {\"type\": \"bertrand\", \"n\": 2, \"c\": }\n}") {
            Err(ScenarioError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            Scenario::from_json(r#"{"valuation": {"type": "bertrand", "n": 2}, "bogus": 1}"#),
            Err(ScenarioError::Parse { .. })
        ));
    }

    #[test]
    fn validation_errors_name_the_witness() {
        let bad = r#"{"valuation": {"type": "table", "n": 2, "values": [0, 2, 2, 1]}}"#;
        let err = Scenario::from_json(bad).unwrap_err();
        assert!(err.to_string().contains("{0}"), "{err}");
        let both = r#"{"valuation": {"type": "bertrand", "n": 2, "c": 1},
                      "buyers": [{"valuation": {"type": "bertrand", "n": 2, "c": 1}}]}"#;
        assert!(matches!(Scenario::from_json(both), Err(ScenarioError::Validation(_))));
    }
}
