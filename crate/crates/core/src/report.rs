//! Versioned JSON report envelope and CSV rows for command output.

use std::io::Write;

use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::game::{EquilibriumReport, Verdict};
use crate::scan::ScanResult;
use crate::value::Value;

pub const SCHEMA: u32 = 1;

/// `{"schema": 1, "command": …, "scenario": …, "result": …}`.
pub fn envelope<T: Serialize>(command: &str, scenario: &str, result: &T) -> serde_json::Value {
    json!({
        "schema": SCHEMA,
        "command": command,
        "scenario": scenario,
        "result": result,
    })
}

pub fn to_pretty_json(value: &serde_json::Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    text
}

fn join<T: ToString>(xs: impl IntoIterator<Item = T>) -> String {
    xs.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::InvalidInput(format!("csv output failed: {e}"))
}

pub fn verdict_label(v: &Verdict) -> String {
    match v {
        Verdict::ExactNe => "exact_ne".into(),
        Verdict::EpsNe { epsilon } => format!("eps_ne({epsilon})"),
        Verdict::NotNe => "not_ne".into(),
    }
}

/// Columns: `prices,verdict,utilities,welfare,max_gain,worst_seller,worst_price`.
/// List columns are `;`-separated; the worst-deviation columns are empty
/// when no seller gains.
pub fn write_equilibrium_csv<W: Write>(out: W, reports: &[EquilibriumReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["prices", "verdict", "utilities", "welfare", "max_gain", "worst_seller", "worst_price"])
        .map_err(csv_err)?;
    for r in reports {
        let prices =
            join(r.prices.entries().iter().map(|p| p.as_ref().map_or("blocked".to_string(), Value::to_string)));
        let worst = r.worst_deviation();
        w.write_record([
            prices,
            verdict_label(&r.verdict),
            join(r.utilities()),
            r.welfare.to_string(),
            r.max_gain.to_string(),
            worst.map_or(String::new(), |s| s.seller.to_string()),
            worst.map_or(String::new(), |s| s.best_response.price.to_string()),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

/// Columns: `prices,chosen,utilities,welfare,max_gain`; `chosen` holds one
/// bitmask per buyer.
pub fn write_scan_csv<W: Write>(out: W, scan: &ScanResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["prices", "chosen", "utilities", "welfare", "max_gain"]).map_err(csv_err)?;
    for h in &scan.hits {
        w.write_record([
            join(h.prices.entries().iter().map(|p| p.as_ref().map_or("blocked".to_string(), Value::to_string))),
            join(h.chosen.iter().map(|c| c.bits())),
            join(&h.utilities),
            h.welfare.to_string(),
            h.max_gain.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::{DecisionMap, MapKind, PriceVector};
    use crate::game::{check_equilibrium, GameSpec};
    use crate::valuation::{build, FamilySpec};

    #[test]
    fn equilibrium_rows() {
        let v = build(&FamilySpec::AllOrNothing { n: 2, c: Value::from_int(10) }).unwrap();
        let g = GameSpec::new(v, DecisionMap::new(MapKind::MaximalLex, 2)).unwrap();
        let p = PriceVector::new(vec![Value::from_int(3), Value::from_int(3)]).unwrap();
        let r = check_equilibrium(&g, &p, &Value::zero()).unwrap();
        let mut buf = Vec::new();
        write_equilibrium_csv(&mut buf, std::slice::from_ref(&r)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "prices,verdict,utilities,welfare,max_gain,worst_seller,worst_price\n3;3,not_ne,3;3,10,4,0,7\n"
        );
        let e = envelope("check-eq", "aon", &r);
        assert_eq!(e["schema"], 1);
        assert_eq!(e["result"]["max_gain"], "4");
    }
}
