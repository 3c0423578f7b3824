//! Map spec files for blend-verify: a `[map]` section with `n`, `box`,
//! and one polynomial per output component in the variables q1..qn,
//! p1..pn. Example:
//!
//! ```text
//! [map]
//! n = 1
//! box = 1.0
//! q1 = -p1 - 1/5 q1^2 - 3/10 q1^3
//! p1 = q1
//! ```

use num_traits::ToPrimitive;
use sympl_core::blend::{BlendError, Poly, PolySymplecticMap};
use sympl_core::ring::parse_expression;

#[derive(Debug, thiserror::Error)]
pub enum MapSpecError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing key `{0}` in [map]")]
    MissingKey(&'static str),
    #[error("unknown variable `{0}` (expected q1..qn, p1..pn)")]
    UnknownVariable(String),
    #[error(transparent)]
    Blend(#[from] BlendError),
}

pub fn parse_map_spec(src: &str) -> Result<PolySymplecticMap, MapSpecError> {
    let mut n: Option<usize> = None;
    let mut box_half: Option<f64> = None;
    let mut comps: Vec<(usize, String, String)> = Vec::new(); // (line, key, expr)
    let mut in_map = false;

    for (idx, raw) in src.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if line == "[map]" {
            in_map = true;
            continue;
        }
        if line.starts_with('[') {
            return Err(MapSpecError::Syntax {
                line: line_no,
                message: format!("unknown section `{}`", line),
            });
        }
        if !in_map {
            return Err(MapSpecError::Syntax {
                line: line_no,
                message: "content before [map]".into(),
            });
        }
        let (key, value) = line.split_once('=').ok_or(MapSpecError::Syntax {
            line: line_no,
            message: "expected `key = value`".into(),
        })?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "n" => {
                n = Some(value.parse().map_err(|_| MapSpecError::Syntax {
                    line: line_no,
                    message: format!("invalid n `{}`", value),
                })?)
            }
            "box" => {
                box_half = Some(value.parse().map_err(|_| MapSpecError::Syntax {
                    line: line_no,
                    message: format!("invalid box `{}`", value),
                })?)
            }
            other => comps.push((line_no, other.to_string(), value.to_string())),
        }
    }

    let n = n.ok_or(MapSpecError::MissingKey("n"))?;
    let box_half = box_half.ok_or(MapSpecError::MissingKey("box"))?;
    let dims = 2 * n;

    // variable order (q1..qn, p1..pn)
    let var_index = |name: &str| -> Result<usize, MapSpecError> {
        let (prefix, num) = name.split_at(1);
        let i: usize = num
            .parse()
            .map_err(|_| MapSpecError::UnknownVariable(name.to_string()))?;
        if i < 1 || i > n {
            return Err(MapSpecError::UnknownVariable(name.to_string()));
        }
        match prefix {
            "q" => Ok(i - 1),
            "p" => Ok(n + i - 1),
            _ => Err(MapSpecError::UnknownVariable(name.to_string())),
        }
    };

    let mut components: Vec<Option<Poly>> = vec![None; dims];
    for (line_no, key, expr) in &comps {
        let slot = var_index(key)?;
        let named = parse_expression(expr, *line_no, 1).map_err(|e| MapSpecError::Syntax {
            line: e.line,
            message: e.message,
        })?;
        let mut terms = Vec::new();
        for (mono, coeff) in named {
            let mut exps = vec![0u32; dims];
            for (var, e) in mono {
                exps[var_index(&var)?] += e;
            }
            let c = coeff.to_f64().ok_or(MapSpecError::Syntax {
                line: *line_no,
                message: "coefficient out of range".into(),
            })?;
            terms.push((exps, c));
        }
        components[slot] = Some(Poly::new(dims, terms));
    }
    let comps: Result<Vec<Poly>, MapSpecError> = components
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            c.ok_or(MapSpecError::Syntax {
                line: 0,
                message: format!(
                    "missing component `{}{}`",
                    if i < n { "q" } else { "p" },
                    if i < n { i + 1 } else { i - n + 1 }
                ),
            })
        })
        .collect();
    Ok(PolySymplecticMap::new(n, comps?, box_half)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_shear_rotation() {
        let src = "\
[map]
n = 1
box = 1.0
q1 = -p1 - 1/5 q1^2 - 3/10 q1^3
p1 = q1
";
        let map = parse_map_spec(src).unwrap();
        let y = map.eval(&[0.5, 0.2]);
        let shear = 0.2 + 0.2 * 0.25 + 0.3 * 0.125;
        assert!((y[0] - (-shear)).abs() < 1e-12);
        assert!((y[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_symplectic_map() {
        let src = "\
[map]
n = 1
box = 1.0
q1 = 2 q1
p1 = p1
";
        assert!(matches!(
            parse_map_spec(src),
            Err(MapSpecError::Blend(BlendError::NotSymplectic(_)))
        ));
    }
}
