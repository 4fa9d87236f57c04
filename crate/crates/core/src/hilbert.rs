//! Coefficient-space representation of the covariate space.
//!
//! Points of the separable Hilbert space are stored as their first `d`
//! coefficients with respect to a fixed orthonormal basis, so every inner
//! product and distance below is exact Euclidean arithmetic in `R^d`. The
//! truncation dimension `d` is a user parameter and is echoed in all reports.

use std::fmt;
use std::io::{Read, Write};
use std::sync::Arc;

use crate::error::{CoreError, Result};

/// A point of the Hilbert space, truncated to `d` basis coefficients.
///
/// Immutable after construction; all coefficients are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct HilbertVector {
    coeffs: Vec<f64>,
}

impl HilbertVector {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(CoreError::InvalidArgument(
                "vector needs at least one coefficient".into(),
            ));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(CoreError::NonFinite {
                what: "vector coefficient".into(),
            });
        }
        Ok(Self { coeffs })
    }

    /// Basis vector `e_k` (0-indexed) in dimension `d`.
    pub fn basis(d: usize, k: usize) -> Result<Self> {
        if k >= d {
            return Err(CoreError::InvalidArgument(format!(
                "basis index {k} out of range for dimension {d}"
            )));
        }
        let mut coeffs = vec![0.0; d];
        coeffs[k] = 1.0;
        Self::new(coeffs)
    }

    pub fn zero(d: usize) -> Result<Self> {
        Self::new(vec![0.0; d])
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(CoreError::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(())
    }

    /// `<a, b> = sum_k a_k b_k`.
    pub fn inner_product(&self, other: &Self) -> Result<f64> {
        self.check_dim(other)?;
        Ok(dot(&self.coeffs, &other.coeffs))
    }

    /// `||a - b||`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.check_dim(other)?;
        Ok(sq_dist(&self.coeffs, &other.coeffs).sqrt())
    }

    pub fn norm(&self) -> f64 {
        dot(&self.coeffs, &self.coeffs).sqrt()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Response transform applied before averaging; must be Lipschitz with a
/// known constant.
#[derive(Clone)]
pub enum Transform {
    /// The identity map, Lipschitz constant 1.
    Identity,
    /// Clip to `[-bound, bound]`, Lipschitz constant 1.
    Clip { bound: f64 },
    /// User-supplied transform with a declared Lipschitz constant.
    Custom {
        name: String,
        lip: f64,
        eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl Transform {
    pub fn custom(
        name: impl Into<String>,
        lip: f64,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(lip > 0.0 && lip.is_finite()) {
            return Err(CoreError::InvalidArgument(
                "Lipschitz constant must be positive and finite".into(),
            ));
        }
        Ok(Transform::Custom {
            name: name.into(),
            lip,
            eval: Arc::new(eval),
        })
    }

    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Transform::Identity => u,
            Transform::Clip { bound } => u.clamp(-bound, *bound),
            Transform::Custom { eval, .. } => eval(u),
        }
    }

    /// A valid Lipschitz constant for the transform.
    pub fn lipschitz(&self) -> f64 {
        match self {
            Transform::Identity | Transform::Clip { .. } => 1.0,
            Transform::Custom { lip, .. } => *lip,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Transform::Identity => "identity".into(),
            Transform::Clip { bound } => format!("clip({bound})"),
            Transform::Custom { name, .. } => name.clone(),
        }
    }
}

impl fmt::Debug for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Transform({})", self.name())
    }
}

/// Ordered stationary sample of pairs `(X_i, Y_i)`.
///
/// Row order is time order; estimation ignores it, dependence diagnostics
/// rely on it.
#[derive(Debug, Clone)]
pub struct FunctionalSample {
    xs: Vec<HilbertVector>,
    ys: Vec<f64>,
}

impl FunctionalSample {
    pub fn new(records: Vec<(HilbertVector, f64)>) -> Result<Self> {
        if records.is_empty() {
            return Err(CoreError::InvalidArgument("sample must be non-empty".into()));
        }
        let d = records[0].0.dim();
        let mut xs = Vec::with_capacity(records.len());
        let mut ys = Vec::with_capacity(records.len());
        for (x, y) in records {
            if x.dim() != d {
                return Err(CoreError::DimensionMismatch {
                    left: d,
                    right: x.dim(),
                });
            }
            if !y.is_finite() {
                return Err(CoreError::NonFinite {
                    what: "response value".into(),
                });
            }
            xs.push(x);
            ys.push(y);
        }
        Ok(Self { xs, ys })
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 1 by construction
    }

    pub fn dim(&self) -> usize {
        self.xs[0].dim()
    }

    pub fn x(&self, i: usize) -> &HilbertVector {
        &self.xs[i]
    }

    pub fn y(&self, i: usize) -> f64 {
        self.ys[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&HilbertVector, f64)> {
        self.xs.iter().zip(self.ys.iter().copied())
    }

    /// Writes the sample as CSV with header `y,x1,...,xd`, one row per
    /// observation, row order = time order.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["y".to_string()];
        header.extend((1..=self.dim()).map(|k| format!("x{k}")));
        w.write_record(&header)?;
        for (x, y) in self.iter() {
            let mut record = vec![y.to_string()];
            record.extend(x.coeffs().iter().map(|c| c.to_string()));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a sample from the CSV format produced by [`write_csv`].
    ///
    /// [`write_csv`]: FunctionalSample::write_csv
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.is_empty() || &headers[0] != "y" {
            return Err(CoreError::InvalidArgument(
                "sample CSV must start with a `y` column".into(),
            ));
        }
        let d = headers.len() - 1;
        if d == 0 {
            return Err(CoreError::InvalidArgument(
                "sample CSV needs at least one covariate column".into(),
            ));
        }
        let mut records = Vec::new();
        for row in r.records() {
            let row = row?;
            if row.len() != d + 1 {
                return Err(CoreError::InvalidArgument(format!(
                    "CSV row {} has {} fields, expected {}",
                    records.len() + 2,
                    row.len(),
                    d + 1
                )));
            }
            let parse = |s: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| CoreError::InvalidArgument(format!("bad numeric field `{s}`")))
            };
            let y = parse(&row[0])?;
            let coeffs = row.iter().skip(1).map(parse).collect::<Result<Vec<_>>>()?;
            records.push((HilbertVector::new(coeffs)?, y));
        }
        Self::new(records)
    }
}
