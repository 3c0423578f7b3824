//! Hamiltonian spec files: a `[hamiltonian]` section naming a closed
//! form family (bump, rotator) with parameters, or a grid with inline
//! samples. Examples:
//!
//! ```text
//! [hamiltonian]
//! kind = bump
//! n = 1
//! box = 1.0
//! center = 0.0 0.0
//! radius = 0.4
//! amplitude = 1.0
//! time_profile = const
//! ```
//!
//! ```text
//! [hamiltonian]
//! kind = grid
//! n = 1
//! box = 1.0
//! nt = 1
//! per_axis = 65
//! [samples]
//! 0 0 0 ...
//! ```

use anyhow::{anyhow, bail, Context, Result};
use std::collections::BTreeMap;
use std::path::Path;
use sympl_core::calabi::{Box2n, CompactHamiltonian, TimeProfile};

pub fn load(path: &Path) -> Result<CompactHamiltonian> {
    let src = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    parse(&src).map_err(|e| anyhow!("{}: {}", path.display(), e))
}

fn parse(src: &str) -> Result<CompactHamiltonian> {
    let mut keys: BTreeMap<String, String> = BTreeMap::new();
    let mut samples: Vec<f64> = Vec::new();
    let mut in_samples = false;
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
        match line {
            "[hamiltonian]" => {
                in_samples = false;
                continue;
            }
            "[samples]" => {
                in_samples = true;
                continue;
            }
            _ => {}
        }
        if in_samples {
            for tok in line.split_whitespace() {
                samples.push(
                    tok.parse()
                        .map_err(|_| anyhow!("line {}: invalid sample `{}`", line_no, tok))?,
                );
            }
        } else {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`", line_no))?;
            keys.insert(k.trim().to_string(), v.trim().to_string());
        }
    }

    let get = |k: &str| -> Result<&String> {
        keys.get(k)
            .ok_or_else(|| anyhow!("missing key `{}` in [hamiltonian]", k))
    };
    let parse_f64 = |k: &str| -> Result<f64> {
        get(k)?
            .parse()
            .map_err(|_| anyhow!("invalid `{}` value `{}`", k, keys[k]))
    };

    let kind = get("kind")?.clone();
    let n: usize = get("n")?
        .parse()
        .map_err(|_| anyhow!("invalid n `{}`", keys["n"]))?;
    let half = parse_f64("box")?;
    let box_ = Box2n::new(n, half).map_err(|e| anyhow!("{}", e))?;
    let time = match keys.get("time_profile").map(|s| s.as_str()) {
        None | Some("const") => TimeProfile::Const,
        Some("parabolic") => TimeProfile::Parabolic,
        Some(other) => bail!("unknown time_profile `{}`", other),
    };

    match kind.as_str() {
        "bump" => {
            let center = parse_vector(get("center")?, 2 * n)?;
            let radius = parse_f64("radius")?;
            let amplitude = parse_f64("amplitude")?;
            CompactHamiltonian::bump(box_, center, radius, amplitude, time)
                .map_err(|e| anyhow!("{}", e))
        }
        "rotator" => {
            let center = parse_vector(get("center")?, 2 * n)?;
            let base = parse_f64("base")?;
            let slope = parse_f64("slope")?;
            let s1 = parse_f64("s1")?;
            let s2 = parse_f64("s2")?;
            CompactHamiltonian::rotator(box_, center, base, slope, s1, s2, time)
                .map_err(|e| anyhow!("{}", e))
        }
        "grid" => {
            let nt: usize = get("nt")?
                .parse()
                .map_err(|_| anyhow!("invalid nt `{}`", keys["nt"]))?;
            let per_axis: usize = get("per_axis")?
                .parse()
                .map_err(|_| anyhow!("invalid per_axis `{}`", keys["per_axis"]))?;
            CompactHamiltonian::from_grid(box_, nt, per_axis, samples)
                .map_err(|e| anyhow!("{}", e))
        }
        other => bail!("unknown Hamiltonian kind `{}`", other),
    }
}

fn parse_vector(src: &str, expect: usize) -> Result<Vec<f64>> {
    let v: Result<Vec<f64>> = src
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| anyhow!("invalid coordinate `{}`", t))
        })
        .collect();
    let v = v?;
    if v.len() != expect {
        bail!("expected {} coordinates, found {}", expect, v.len());
    }
    Ok(v)
}
