//! Built-in systems and the JSON description format.
//!
//! ```json
//! {
//!   "name": "leaf",
//!   "maps": [
//!     [[0.7526, -0.2190, 0.2474], [0.2190, 0.7526, -0.0726]],
//!     [[-0.7526, 0.2190, 1.0349], [0.2190, 0.7526, 0.0678]]
//!   ],
//!   "priority_order": "1>2"
//! }
//! ```
//!
//! Each map is `[[a, b, e], [c, d, g]]` for `(x, y) -> (ax + by + e, cx + dy + g)`.
//! A map written as a pair `[a, e]` is the line map `x -> ax + e`.
//! Coefficients are JSON numbers (read from their decimal text, so `0.7526`
//! becomes the nearest double to 0.7526) or strings such as `"2/3"`.

use std::path::Path;

use serde_json::{Map, Number, Value};

use crate::address::PriorityOrder;
use crate::error::{Error, Result};
use crate::ifs::{AffineMap, Ifs};

pub fn cantor() -> Ifs {
    Ifs::line("cantor", &[(1.0 / 3.0, 0.0), (1.0 / 3.0, 2.0 / 3.0)]).unwrap()
}

/// `{x/2, x/2 + 1/2}` with attractor `[0, 1]`.
pub fn dyadic() -> Ifs {
    Ifs::line("dyadic", &[(0.5, 0.0), (0.5, 0.5)]).unwrap()
}

/// `{2x/3, 2x/3 + 1/3}` on `[0, 1]`.
pub fn example3() -> Ifs {
    Ifs::line("example3", &[(2.0 / 3.0, 0.0), (2.0 / 3.0, 1.0 / 3.0)]).unwrap()
}

/// `{2x/3, 1 - 2x/3}` on `[0, 1]`.
pub fn example4() -> Ifs {
    Ifs::line("example4", &[(2.0 / 3.0, 0.0), (-2.0 / 3.0, 1.0)]).unwrap()
}

/// `{2x/3, 2x/3 + 1/6, 2x/3 + 1/3}`, a three-map translation family on `[0, 1]`.
pub fn two_thirds_triple() -> Ifs {
    Ifs::line(
        "two-thirds-triple",
        &[(2.0 / 3.0, 0.0), (2.0 / 3.0, 1.0 / 6.0), (2.0 / 3.0, 1.0 / 3.0)],
    )
    .unwrap()
}

/// `{x/2, x/4 + 3/4}`: two ratios, open set condition with the gap `(1/2, 3/4)`.
pub fn half_quarter() -> Ifs {
    Ifs::line("half-quarter", &[(0.5, 0.0), (0.25, 0.75)]).unwrap()
}

/// The two-similitude leaf.
pub fn leaf() -> Ifs {
    Ifs::new(
        "leaf",
        vec![
            AffineMap::from_rows([[0.7526, -0.2190, 0.2474], [0.2190, 0.7526, -0.0726]]),
            AffineMap::from_rows([[-0.7526, 0.2190, 1.0349], [0.2190, 0.7526, 0.0678]]),
        ],
    )
    .unwrap()
}

/// Right-angled Sierpinski triangle with vertices `(0,0)`, `(1,0)`, `(0,1)`.
pub fn sierpinski() -> Ifs {
    Ifs::new(
        "sierpinski",
        vec![
            AffineMap::from_rows([[0.5, 0.0, 0.0], [0.0, 0.5, 0.0]]),
            AffineMap::from_rows([[0.5, 0.0, 0.5], [0.0, 0.5, 0.0]]),
            AffineMap::from_rows([[0.5, 0.0, 0.0], [0.0, 0.5, 0.5]]),
        ],
    )
    .unwrap()
}

/// Plane similitudes with ratios 1/2, 1/3 and 1/4.
pub fn three_ratios() -> Ifs {
    Ifs::new(
        "three-ratios",
        vec![
            AffineMap::similitude(0.5, 0.0, 0.0, 0.0),
            AffineMap::similitude(1.0 / 3.0, 0.3, 0.6, 0.0),
            AffineMap::similitude(0.25, -1.0, 0.2, 0.7),
        ],
    )
    .unwrap()
}

/// Look up a built-in system by name.
pub fn builtin(name: &str) -> Option<Ifs> {
    Some(match name {
        "cantor" => cantor(),
        "dyadic" => dyadic(),
        "example3" => example3(),
        "example4" => example4(),
        "two-thirds-triple" => two_thirds_triple(),
        "half-quarter" => half_quarter(),
        "leaf" => leaf(),
        "sierpinski" => sierpinski(),
        "three-ratios" => three_ratios(),
        _ => return None,
    })
}

pub const BUILTIN_NAMES: &[&str] = &[
    "cantor",
    "dyadic",
    "example3",
    "example4",
    "two-thirds-triple",
    "half-quarter",
    "leaf",
    "sierpinski",
    "three-ratios",
];

/// A parsed description file.
#[derive(Clone, Debug)]
pub struct IfsDescription {
    pub ifs: Ifs,
    pub order: Option<PriorityOrder>,
}

impl IfsDescription {
    pub fn order_or_default(&self) -> PriorityOrder {
        self.order
            .clone()
            .unwrap_or_else(|| PriorityOrder::standard(self.ifs.len()))
    }
}

pub fn load(path: impl AsRef<Path>) -> Result<IfsDescription> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let fallback = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "ifs".into());
    parse(&text, &fallback)
}

pub fn parse(text: &str, fallback_name: &str) -> Result<IfsDescription> {
    let value: Value = serde_json::from_str(text)?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::Parse("expected a JSON object".into()))?;
    let name = match obj.get("name") {
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(Error::Parse("`name` must be a string".into())),
        None => fallback_name.to_string(),
    };
    let maps = obj
        .get("maps")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse("missing `maps` array".into()))?
        .iter()
        .enumerate()
        .map(|(j, v)| parse_map(v).map_err(|e| Error::Parse(format!("map {}: {e}", j + 1))))
        .collect::<Result<Vec<_>>>()?;
    let ifs = Ifs::new(name, maps)?;
    let order = match obj.get("priority_order") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.parse::<PriorityOrder>()?),
        Some(Value::Array(items)) => {
            let ranking = items
                .iter()
                .map(|v| {
                    v.as_u64()
                        .and_then(|s| u8::try_from(s).ok())
                        .ok_or_else(|| Error::Parse("priority_order entries must be symbols".into()))
                })
                .collect::<Result<Vec<u8>>>()?;
            Some(PriorityOrder::new(ranking)?)
        }
        Some(_) => return Err(Error::Parse("`priority_order` must be a string or array".into())),
    };
    if let Some(o) = &order {
        if o.alphabet() != ifs.len() {
            return Err(Error::Parse(format!(
                "priority order has {} symbols but the system has {} maps",
                o.alphabet(),
                ifs.len()
            )));
        }
    }
    Ok(IfsDescription { ifs, order })
}

fn parse_map(v: &Value) -> Result<AffineMap> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::Parse("expected an array".into()))?;
    if rows.len() == 2 && rows.iter().all(|r| !r.is_array()) {
        return Ok(AffineMap::line(coefficient(&rows[0])?, coefficient(&rows[1])?));
    }
    if rows.len() != 2 {
        return Err(Error::Parse("expected two rows [a, b, e], [c, d, g]".into()));
    }
    let mut out = [[0.0; 3]; 2];
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .filter(|r| r.len() == 3)
            .ok_or_else(|| Error::Parse("each row needs three coefficients".into()))?;
        for (j, c) in row.iter().enumerate() {
            out[i][j] = coefficient(c)?;
        }
    }
    Ok(AffineMap::from_rows(out))
}

/// Parse a coefficient from its decimal text or a `p/q` string.
pub fn coefficient(v: &Value) -> Result<f64> {
    match v {
        Value::Number(n) => parse_decimal(&n.to_string()),
        Value::String(s) => parse_decimal(s),
        _ => Err(Error::Parse(format!("not a number: {v}"))),
    }
}

fn parse_decimal(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::Parse(format!("bad coefficient `{s}`"));
    let x = match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0.0 {
                return Err(bad());
            }
            p / q
        }
        None => s.parse().map_err(|_| bad())?,
    };
    if x.is_finite() {
        Ok(x)
    } else {
        Err(bad())
    }
}

/// Serialize in the description format. Line systems are written as pairs.
pub fn to_json(ifs: &Ifs, order: Option<&PriorityOrder>) -> String {
    let num = |x: f64| Value::Number(Number::from_f64(x).expect("finite coefficient"));
    let line = ifs.is_one_dimensional();
    let maps = ifs
        .maps()
        .iter()
        .map(|f| {
            let r = f.rows();
            if line {
                Value::Array(vec![num(r[0][0]), num(r[0][2])])
            } else {
                Value::Array(
                    r.iter()
                        .map(|row| Value::Array(row.iter().map(|&c| num(c)).collect()))
                        .collect(),
                )
            }
        })
        .collect();
    let mut obj = Map::new();
    obj.insert("name".into(), Value::String(ifs.name().into()));
    obj.insert("maps".into(), Value::Array(maps));
    if let Some(o) = order {
        obj.insert("priority_order".into(), Value::String(o.to_string()));
    }
    serde_json::to_string_pretty(&Value::Object(obj)).expect("serializable")
}

#[cfg(test)]
mod tests {
    use super::*;

    const LEAF: &str = r#"{
        "name": "leaf",
        "maps": [
            [[0.7526, -0.2190e0, 0.2474], [0.2190, 0.7526, -0.0726]],
            [[-0.7526, 0.2190, 1.0349], [0.2190, 0.7526, 0.0678]]
        ]
    }"#;

    #[test]
    fn leaf_parses_bit_exact() {
        let d = parse(LEAF, "x").unwrap();
        assert_eq!(d.ifs.name(), "leaf");
        assert!(d.order.is_none());
        for (a, b) in d.ifs.maps().iter().zip(leaf().maps()) {
            assert_eq!(a.rows(), b.rows());
        }
        assert_eq!(d.ifs.map(2).unwrap().translation[0], 1.0349);
    }

    #[test]
    fn line_pairs_and_rationals() {
        let d = parse(
            r#"{"maps": [["2/3", 0], ["2/3", "1/3"]], "priority_order": [2, 1]}"#,
            "ex3",
        )
        .unwrap();
        assert_eq!(d.ifs.name(), "ex3");
        assert_eq!(d.ifs.map(1).unwrap().linear[0][0], 2.0 / 3.0);
        assert_eq!(d.ifs.map(2).unwrap().translation[0], 1.0 / 3.0);
        assert!(d.ifs.is_one_dimensional());
        assert_eq!(d.order.unwrap().to_string(), "2>1");
    }

    #[test]
    fn round_trip() {
        for ifs in [leaf(), example4(), sierpinski()] {
            let order = PriorityOrder::reversed(ifs.len());
            let d = parse(&to_json(&ifs, Some(&order)), "x").unwrap();
            assert_eq!(d.ifs.name(), ifs.name());
            assert_eq!(d.order.as_ref(), Some(&order));
            for (a, b) in d.ifs.maps().iter().zip(ifs.maps()) {
                assert_eq!(a.rows(), b.rows());
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse("[]", "x").is_err());
        assert!(parse(r#"{"maps": [[0.5, 0]]}"#, "x").is_err());
        assert!(parse(r#"{"maps": [[0.5, 0], [0.5, "a"]]}"#, "x").is_err());
        assert!(parse(r#"{"maps": [[0.5, 0], [0.5, 0.5]], "priority_order": "1>2>3"}"#, "x").is_err());
        assert!(parse(r#"{"maps": [[[1, 0, 0], [0, 1]], [0.5, 0.5]]}"#, "x").is_err());
    }

    #[test]
    fn builtins_resolve() {
        for name in BUILTIN_NAMES {
            assert_eq!(builtin(name).unwrap().name(), *name);
        }
        assert!(builtin("nope").is_none());
    }
}
