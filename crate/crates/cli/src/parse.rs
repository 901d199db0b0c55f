//! Exact parsing of command-line literals: field rationals, twist lists,
//! checkpoint grids, and cost-function specifications. No floating-point
//! round-tripping for field elements.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;

use hurwitz_core::cf::CostFunction;
use hurwitz_core::ring::{FieldConfig, QuadInt, QuadRat};
use hurwitz_core::{Error, Result};

/// Exact rational "p" or "p/q" with optional sign.
fn rational(s: &str) -> Result<BigRational> {
    let bad = || Error::Parse(format!("invalid rational literal '{s}'"));
    let (num, den) = match s.split_once('/') {
        Some((p, q)) => (p, q),
        None => (s, "1"),
    };
    let p = BigInt::from_str(num).map_err(|_| bad())?;
    let q = BigInt::from_str(den).map_err(|_| bad())?;
    if q == BigInt::from(0) {
        return Err(bad());
    }
    Ok(BigRational::new(p, q))
}

/// Field rational literal: "p/q+r/s i" (sqrt basis) or "p/q+r/s w"
/// (omega basis), whitespace optional, either part omissible.
///
/// Examples: `2/5-1/5i`, `-1/2+1/2w`, `3`, `i`, `-2/3i`.
pub fn quadrat(s: &str, cfg: &FieldConfig) -> Result<QuadRat> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err(Error::Parse("empty field-element literal".into()));
    }
    let (body, basis) = match t.chars().last().unwrap() {
        c @ ('i' | 'w') => (&t[..t.len() - 1], Some(c)),
        _ => (t.as_str(), None),
    };
    let (re_str, im_str) = match basis {
        None => (body, "0"),
        Some(_) => {
            // split at the last +/- that follows a digit
            let split = body
                .char_indices()
                .rev()
                .find(|&(k, c)| {
                    (c == '+' || c == '-')
                        && k > 0
                        && body.as_bytes()[k - 1].is_ascii_digit()
                })
                .map(|(k, _)| k);
            match split {
                Some(k) => (&body[..k], &body[k..]),
                None => ("0", if body.is_empty() { "1" } else { body }),
            }
        }
    };
    let im_str = match im_str {
        "+" => "1",
        "-" => "-1",
        other => other,
    };
    let re = rational(re_str)?;
    let im = rational(im_str)?;
    // convert to omega coordinates: for d = 3 mod 4, sqrt(-d) = 2*omega - 1
    let (x, y) = match basis {
        Some('w') => (re, im),
        _ if cfg.d % 4 == 3 => (re - &im, im * BigRational::from_integer(2.into())),
        _ => (re, im),
    };
    let q = x.denom().lcm(y.denom());
    let scale = BigRational::from_integer(q.clone());
    QuadRat::new(
        QuadInt::new(cfg.d, (&x * &scale).to_integer(), (&y * &scale).to_integer()),
        QuadInt::new(cfg.d, q, BigInt::from(0)),
    )
}

/// Comma list of twists; "0.02" is real, "i1.5707" purely imaginary.
pub fn w_list(s: &str) -> Result<Vec<(f64, f64)>> {
    s.split(',')
        .map(|item| {
            let item = item.trim();
            let bad = || Error::Parse(format!("invalid twist '{item}'"));
            if let Some(tau) = item.strip_prefix('i') {
                Ok((0.0, tau.parse::<f64>().map_err(|_| bad())?))
            } else {
                Ok((item.parse::<f64>().map_err(|_| bad())?, 0.0))
            }
        })
        .collect()
}

/// Comma list of checkpoint bounds.
pub fn n_grid(s: &str) -> Result<Vec<i64>> {
    s.split(',')
        .map(|item| {
            item.trim()
                .parse::<i64>()
                .map_err(|_| Error::Parse(format!("invalid checkpoint '{item}'")))
        })
        .collect()
}

/// Cost specification: "len", "logabs", or "table:<path>" where the file
/// is JSON {"default": u32, "entries": [[a, b, cost], ...]} keyed by digit
/// omega-coordinates.
pub fn cost(s: &str) -> Result<CostFunction> {
    match s {
        "len" => Ok(CostFunction::ConstantOne),
        "logabs" => Ok(CostFunction::LogAbs),
        _ => match s.strip_prefix("table:") {
            Some(path) => cost_table(Path::new(path)),
            None => Err(Error::Parse(format!(
                "unknown cost '{s}'; expected len, logabs, or table:<path>"
            ))),
        },
    }
}

/// Comma list of cost specifications.
pub fn cost_list(s: &str) -> Result<Vec<CostFunction>> {
    s.split(',').map(|item| cost(item.trim())).collect()
}

fn cost_table(path: &Path) -> Result<CostFunction> {
    let text = std::fs::read_to_string(path)?;
    let v: serde_json::Value = serde_json::from_str(&text)?;
    let bad = |msg: &str| Error::Parse(format!("cost table {}: {msg}", path.display()));
    let default = v
        .get("default")
        .and_then(|x| x.as_u64())
        .ok_or_else(|| bad("missing integer 'default'"))? as u32;
    let mut table = BTreeMap::new();
    for row in v
        .get("entries")
        .and_then(|x| x.as_array())
        .ok_or_else(|| bad("missing array 'entries'"))?
    {
        let trio = row.as_array().filter(|r| r.len() == 3);
        let trio = trio.ok_or_else(|| bad("entries must be [a, b, cost] triples"))?;
        let a = trio[0].as_i64().ok_or_else(|| bad("non-integer coordinate"))?;
        let b = trio[1].as_i64().ok_or_else(|| bad("non-integer coordinate"))?;
        let c = trio[2].as_u64().ok_or_else(|| bad("non-integer cost"))? as u32;
        table.insert((a, b), c);
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "table".into());
    Ok(CostFunction::CustomInteger {
        name,
        table,
        default,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_literals_round_trip() {
        let cfg = FieldConfig::new(1).unwrap();
        let z = quadrat("2/5-1/5i", cfg).unwrap();
        let direct = QuadRat::new(QuadInt::from_i64(1, 2, -1), QuadInt::from_i64(1, 5, 0)).unwrap();
        assert!(z.eq_value(&direct));
        let z2 = quadrat("2/5 - 1/5 i", cfg).unwrap();
        assert!(z.eq_value(&z2));
        // omega basis in d = 3: w = (1 + sqrt(-3))/2
        let cfg3 = FieldConfig::new(3).unwrap();
        let a = quadrat("1/2+1/2w", cfg3).unwrap();
        let b = quadrat("3/4+1/4i", cfg3).unwrap();
        assert!(a.eq_value(&b), "same point in both bases");
        assert!(quadrat("", cfg).is_err());
        assert!(quadrat("1/0", cfg).is_err());
        assert!(quadrat("abc", cfg).is_err());
        let pure = quadrat("-i", cfg).unwrap();
        assert!(pure.eq_value(
            &QuadRat::new(QuadInt::from_i64(1, 0, -1), QuadInt::from_i64(1, 1, 0)).unwrap()
        ));
    }

    #[test]
    fn twist_and_grid_lists() {
        let ws = w_list("0.02,-0.02,0,i1.5").unwrap();
        assert_eq!(ws, vec![(0.02, 0.0), (-0.02, 0.0), (0.0, 0.0), (0.0, 1.5)]);
        assert!(w_list("0.02,xyz").is_err());
        assert_eq!(n_grid("256, 1024").unwrap(), vec![256, 1024]);
        assert!(n_grid("1,two").is_err());
    }

    #[test]
    fn cost_specifications() {
        assert_eq!(cost("len").unwrap().id(), "len");
        assert_eq!(cost("logabs").unwrap().id(), "logabs");
        assert!(cost("bogus").is_err());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("steps.json");
        std::fs::write(&path, r#"{"default": 2, "entries": [[2, 1, 7]]}"#).unwrap();
        let c = cost(&format!("table:{}", path.display())).unwrap();
        match &c {
            CostFunction::CustomInteger { table, default, .. } => {
                assert_eq!(*default, 2);
                assert_eq!(table.get(&(2, 1)), Some(&7));
            }
            _ => panic!("expected a table cost"),
        }
        let costs = cost_list("len,logabs").unwrap();
        assert_eq!(costs.len(), 2);
    }
}
