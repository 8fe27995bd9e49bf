use std::collections::BTreeMap;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Deserialize;

use crate::error::{config_error, Error, Result};

/// Float weights must sum to 1 within this before renormalizing.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

/// A probability measure with finitely many atoms, sorted by point index.
/// Weights are kept as floats and, when the input was rational, exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicMeasure {
    atoms: Vec<usize>,
    weights: Vec<f64>,
    exact: Option<Vec<BigRational>>,
}

fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

fn sort_atoms<T: Clone>(atoms: &[usize], w: &[T]) -> Result<(Vec<usize>, Vec<T>)> {
    let mut idx: Vec<usize> = (0..atoms.len()).collect();
    idx.sort_by_key(|&k| atoms[k]);
    for p in idx.windows(2) {
        if atoms[p[0]] == atoms[p[1]] {
            return Err(Error::Representation(format!("atom {} listed twice", atoms[p[0]])));
        }
    }
    Ok((idx.iter().map(|&k| atoms[k]).collect(), idx.iter().map(|&k| w[k].clone()).collect()))
}

impl AtomicMeasure {
    pub fn new(atoms: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::Shape(format!("{} atoms with {} weights", atoms.len(), weights.len())));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::Representation(format!("weight {w} is not positive")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::Representation(format!("weights sum to {total}")));
        }
        let (atoms, w) = sort_atoms(&atoms, &weights)?;
        let weights = w.iter().map(|x| x / total).collect();
        Ok(AtomicMeasure { atoms, weights, exact: None })
    }

    pub fn from_rationals(atoms: Vec<usize>, weights: Vec<BigRational>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::Shape(format!("{} atoms with {} weights", atoms.len(), weights.len())));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_positive()) {
            return Err(Error::Representation(format!("weight {w} is not positive")));
        }
        let total: BigRational = weights.iter().sum();
        if !total.is_one() {
            return Err(Error::Representation(format!("weights sum to {total}")));
        }
        let (atoms, w) = sort_atoms(&atoms, &weights)?;
        Ok(AtomicMeasure { atoms, weights: w.iter().map(to_f64).collect(), exact: Some(w) })
    }

    pub fn dirac(i: usize) -> Self {
        AtomicMeasure { atoms: vec![i], weights: vec![1.0], exact: Some(vec![BigRational::one()]) }
    }

    /// Equal weights on distinct points.
    pub fn uniform(atoms: &[usize]) -> Result<Self> {
        let c = BigInt::from(atoms.len());
        let w = vec![BigRational::new(BigInt::one(), c); atoms.len()];
        Self::from_rationals(atoms.to_vec(), w)
    }

    pub fn atoms(&self) -> &[usize] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn exact_weights(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mass_of(&self, i: usize) -> f64 {
        self.atoms.binary_search(&i).map_or(0.0, |k| self.weights[k])
    }

    /// Exact total mass, when rational.
    pub fn exact_total(&self) -> Option<BigRational> {
        self.exact.as_ref().map(|w| w.iter().sum())
    }

    /// `f_*μ`, merging atoms with the same image.
    pub fn pushforward(&self, map: &[usize]) -> Result<Self> {
        let mut images = Vec::with_capacity(self.len());
        for &a in &self.atoms {
            let f = *map
                .get(a)
                .ok_or_else(|| Error::Representation(format!("map undefined at atom {a}")))?;
            if f >= map.len() {
                return Err(Error::Representation(format!("image {f} of atom {a} leaves the space")));
            }
            images.push(f);
        }
        match &self.exact {
            Some(q) => {
                let mut acc: BTreeMap<usize, BigRational> = BTreeMap::new();
                for (f, w) in images.iter().zip(q) {
                    *acc.entry(*f).or_insert_with(BigRational::zero) += w;
                }
                let (a, w) = acc.into_iter().unzip();
                Self::from_rationals(a, w)
            }
            None => {
                let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
                for (f, w) in images.iter().zip(&self.weights) {
                    *acc.entry(*f).or_insert(0.0) += w;
                }
                let (a, w) = acc.into_iter().unzip();
                Self::new(a, w)
            }
        }
    }

    /// `Σ c_i μ_i` for exact nonnegative coefficients summing to 1.
    pub fn mixture(terms: &[(BigRational, &AtomicMeasure)]) -> Result<Self> {
        let mut acc: BTreeMap<usize, BigRational> = BTreeMap::new();
        for (c, m) in terms {
            let w = m
                .exact
                .as_ref()
                .ok_or_else(|| Error::Representation("mixture needs rational components".into()))?;
            for (a, x) in m.atoms.iter().zip(w) {
                *acc.entry(*a).or_insert_with(BigRational::zero) += c * x;
            }
        }
        let (a, w): (Vec<_>, Vec<_>) = acc.into_iter().filter(|(_, w)| w.is_positive()).unzip();
        Self::from_rationals(a, w)
    }

    /// Whether `self − t·other` is a nonnegative measure. Exact when both
    /// measures are rational; otherwise within `WEIGHT_TOLERANCE`.
    pub fn dominates(&self, other: &AtomicMeasure, t: &BigRational) -> bool {
        other.atoms.iter().enumerate().all(|(k, a)| match self.atoms.binary_search(a) {
            Err(_) => false,
            Ok(s) => match (&self.exact, &other.exact) {
                (Some(x), Some(y)) => x[s] >= t * &y[k],
                _ => self.weights[s] + WEIGHT_TOLERANCE >= to_f64(t) * other.weights[k],
            },
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: MeasureFile = serde_json::from_str(text).map_err(|e| config_error("measure file", text, &e))?;
        if raw.weights.iter().all(|w| matches!(w, WeightSpec::Text(_))) {
            let w = raw
                .weights
                .iter()
                .map(|w| match w {
                    WeightSpec::Text(s) => parse_rational(s),
                    WeightSpec::Number(_) => unreachable!(),
                })
                .collect::<Result<Vec<_>>>()?;
            Self::from_rationals(raw.atoms, w)
        } else {
            let w = raw
                .weights
                .iter()
                .map(|w| match w {
                    WeightSpec::Number(x) => Ok(*x),
                    WeightSpec::Text(s) => Ok(to_f64(&parse_rational(s)?)),
                })
                .collect::<Result<Vec<_>>>()?;
            Self::new(raw.atoms, w)
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureFile {
    atoms: Vec<usize>,
    weights: Vec<WeightSpec>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum WeightSpec {
    Number(f64),
    Text(String),
}

/// `"p/q"`, an integer, or a plain decimal such as `"0.125"`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let t = s.trim();
    let bad = || Error::Format(format!("cannot read {s:?} as a rational weight"));
    if t.contains('/') {
        let q = BigRational::from_str(t).map_err(|_| bad())?;
        return Ok(q);
    }
    let (int, frac) = t.split_once('.').unwrap_or((t, ""));
    if int.is_empty() && frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let num = BigInt::from_str(if digits.is_empty() || digits == "-" { "0" } else { &digits }).map_err(|_| bad())?;
    let den = num_traits::pow(BigInt::from(10), frac.len());
    Ok(BigRational::new(num, den))
}
