//! JSON representation, the `name(args)` shorthand and a library of
//! log-concave test measures.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Atom, HalfLineMeasure, Piece};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    pub x: f64,
    pub w: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceSpec {
    pub a: f64,
    /// `null` is `+∞`.
    pub b: Option<f64>,
    pub coeffs: Vec<f64>,
    #[serde(default)]
    pub rate: f64,
}

/// On-disk measure description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureFile {
    #[serde(default)]
    pub atoms: Vec<AtomSpec>,
    #[serde(default)]
    pub pieces: Vec<PieceSpec>,
    #[serde(default)]
    pub signed: bool,
}

impl TryFrom<MeasureFile> for HalfLineMeasure {
    type Error = Error;

    fn try_from(f: MeasureFile) -> Result<Self> {
        let atoms = f
            .atoms
            .into_iter()
            .map(|a| Atom { x: a.x, w: a.w })
            .collect();
        let pieces = f
            .pieces
            .into_iter()
            .map(|p| Piece::new(p.a, p.b.unwrap_or(f64::INFINITY), p.coeffs, p.rate))
            .collect();
        HalfLineMeasure::new(atoms, pieces, f.signed)
    }
}

impl From<HalfLineMeasure> for MeasureFile {
    fn from(m: HalfLineMeasure) -> Self {
        Self {
            atoms: m
                .atoms
                .iter()
                .map(|a| AtomSpec { x: a.x, w: a.w })
                .collect(),
            pieces: m
                .pieces
                .iter()
                .map(|p| PieceSpec {
                    a: p.a,
                    b: p.b.is_finite().then_some(p.b),
                    coeffs: p.coeffs.clone(),
                    rate: p.rate,
                })
                .collect(),
            signed: m.signed,
        }
    }
}

/// Parses `dirac(x[,w])`, `uniform(a,b)`, `exponential(alpha)` or `gamma(p,beta)`.
pub fn parse_named(spec: &str) -> Result<HalfLineMeasure> {
    let spec = spec.trim();
    let open = spec
        .find('(')
        .ok_or_else(|| Error::Parse(format!("expected name(args), got {spec:?}")))?;
    if !spec.ends_with(')') {
        return Err(Error::Parse(format!("missing ')' in {spec:?}")));
    }
    let name = spec[..open].trim().to_ascii_lowercase();
    let inner = &spec[open + 1..spec.len() - 1];
    let args = inner
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number {s:?} in {spec:?}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let arity = |n: &[usize]| {
        if n.contains(&args.len()) {
            Ok(())
        } else {
            Err(Error::Parse(format!(
                "{name} takes {n:?} arguments, got {}",
                args.len()
            )))
        }
    };
    match name.as_str() {
        "dirac" => {
            arity(&[1, 2])?;
            HalfLineMeasure::dirac(args[0], args.get(1).copied().unwrap_or(1.0))
        }
        "uniform" => {
            arity(&[2])?;
            HalfLineMeasure::uniform(args[0], args[1])
        }
        "exponential" => {
            arity(&[1])?;
            HalfLineMeasure::exponential(args[0])
        }
        "gamma" => {
            arity(&[2])?;
            let p = args[0];
            if p.fract() != 0.0 || p < 1.0 || p > u32::MAX as f64 {
                return Err(Error::InvalidInput(format!(
                    "gamma shape {p} is not a positive integer; only integer shapes are exact"
                )));
            }
            HalfLineMeasure::gamma(p as u32, args[1])
        }
        other => Err(Error::Parse(format!("unknown measure {other:?}"))),
    }
}

/// Reads a JSON file if `arg` names one, otherwise parses the shorthand.
pub fn load_measure(arg: &str) -> Result<HalfLineMeasure> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read {arg}: {e}")))?;
        let m: HalfLineMeasure = serde_json::from_str(&text)?;
        return Ok(m);
    }
    parse_named(arg)
}

/// Named log-concave measures covering atoms, bounded and unbounded densities.
pub fn library() -> Vec<(String, HalfLineMeasure)> {
    let dens = |a: f64, b: f64, coeffs: Vec<f64>, rate: f64| {
        HalfLineMeasure::new(vec![], vec![Piece::new(a, b, coeffs, rate)], false)
            .expect("valid piece")
    };
    let u01 = HalfLineMeasure::uniform(0.0, 1.0).expect("valid");
    let mut out = vec![
        (
            "dirac(1)".to_string(),
            HalfLineMeasure::dirac(1.0, 1.0).expect("valid"),
        ),
        (
            "dirac(2.5)".to_string(),
            HalfLineMeasure::dirac(2.5, 1.0).expect("valid"),
        ),
        (
            "uniform(1,2)".to_string(),
            HalfLineMeasure::uniform(1.0, 2.0).expect("valid"),
        ),
        ("uniform(0,1)".to_string(), u01.clone()),
        (
            "uniform(0.5,3)".to_string(),
            HalfLineMeasure::uniform(0.5, 3.0).expect("valid"),
        ),
        (
            "exponential(0.5)".to_string(),
            HalfLineMeasure::exponential(0.5).expect("valid"),
        ),
        (
            "exponential(1)".to_string(),
            HalfLineMeasure::exponential(1.0).expect("valid"),
        ),
        (
            "exponential(2)".to_string(),
            HalfLineMeasure::exponential(2.0).expect("valid"),
        ),
        (
            "gamma(2,1)".to_string(),
            HalfLineMeasure::gamma(2, 1.0).expect("valid"),
        ),
        (
            "gamma(3,2)".to_string(),
            HalfLineMeasure::gamma(3, 2.0).expect("valid"),
        ),
    ];
    out.push((
        "triangle(0,2)".to_string(),
        u01.convolve(&u01).expect("same rate"),
    ));
    out.push((
        "x on [0,1)".to_string(),
        dens(0.0, 1.0, vec![0.0, 1.0], 0.0),
    ));
    out.push((
        "2-x on [0,2)".to_string(),
        dens(0.0, 2.0, vec![2.0, -1.0], 0.0),
    ));
    out.push((
        "1-(x-2)^2 on [1,3)".to_string(),
        dens(1.0, 3.0, vec![-3.0, 4.0, -1.0], 0.0),
    ));
    out.push((
        "e^-x on [0.5,3)".to_string(),
        dens(0.5, 3.0, vec![1.0], 1.0),
    ));
    out
}
