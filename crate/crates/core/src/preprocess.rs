//! Stationarizing transforms and standardization.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PreprocessError {
    #[error("need at least 2 values, got {0}")]
    TooShort(usize),
    #[error("division by zero at index {0}")]
    DivisionByZero(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    /// First difference x[n+1] − x[n].
    #[default]
    Increment,
    /// Relative first difference (x[n+1] − x[n]) / x[n].
    Return,
}

impl Transform {
    pub fn apply(self, x: &[f64]) -> Result<Vec<f64>, PreprocessError> {
        match self {
            Transform::Increment => increments(x),
            Transform::Return => returns(x),
        }
    }
}

impl std::str::FromStr for Transform {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "increment" => Ok(Self::Increment),
            "return" => Ok(Self::Return),
            other => Err(format!("unknown transform `{other}` (expected increment or return)")),
        }
    }
}

pub fn increments(x: &[f64]) -> Result<Vec<f64>, PreprocessError> {
    if x.len() < 2 {
        return Err(PreprocessError::TooShort(x.len()));
    }
    Ok(x.windows(2).map(|w| w[1] - w[0]).collect())
}

pub fn returns(x: &[f64]) -> Result<Vec<f64>, PreprocessError> {
    if x.len() < 2 {
        return Err(PreprocessError::TooShort(x.len()));
    }
    x.windows(2)
        .enumerate()
        .map(|(i, w)| if w[0] == 0.0 { Err(PreprocessError::DivisionByZero(i)) } else { Ok((w[1] - w[0]) / w[0]) })
        .collect()
}

/// Output of [`standardize`]. `degenerate` is set when the input had zero
/// variance, in which case `values` is all zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardized {
    pub values: Vec<f64>,
    pub degenerate: bool,
}

/// Centers to zero mean and scales to unit population (divide-by-N) variance.
pub fn standardize(x: &[f64]) -> Result<Standardized, PreprocessError> {
    if x.len() < 2 {
        return Err(PreprocessError::TooShort(x.len()));
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    // Second pass on the centered values removes the residual mean left by rounding.
    let residual = centered.iter().sum::<f64>() / n;
    let centered: Vec<f64> = centered.into_iter().map(|v| v - residual).collect();
    let std = (centered.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    if std == 0.0 || std <= f64::EPSILON * mean.abs() {
        return Ok(Standardized { values: vec![0.0; x.len()], degenerate: true });
    }
    Ok(Standardized { values: centered.into_iter().map(|v| v / std).collect(), degenerate: false })
}

/// Stationarized, standardized sample sequence for one series.
#[derive(Debug, Clone, PartialEq)]
pub struct StdSeries {
    pub source_id: String,
    /// `None` when the input was supplied already stationary.
    pub transform: Option<Transform>,
    pub values: Vec<f64>,
    pub degenerate: bool,
}

impl StdSeries {
    /// Applies `transform` to raw values and standardizes the result.
    pub fn from_raw(source_id: impl Into<String>, raw: &[f64], transform: Transform) -> Result<Self, PreprocessError> {
        let stationary = transform.apply(raw)?;
        let std = standardize(&stationary)?;
        Ok(Self { source_id: source_id.into(), transform: Some(transform), values: std.values, degenerate: std.degenerate })
    }

    /// Wraps values that are already stationary, standardizing them.
    pub fn from_stationary(source_id: impl Into<String>, values: &[f64]) -> Result<Self, PreprocessError> {
        let std = standardize(values)?;
        Ok(Self { source_id: source_id.into(), transform: None, values: std.values, degenerate: std.degenerate })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
