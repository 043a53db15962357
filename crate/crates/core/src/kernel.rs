//! Row-stochastic matrices.

use serde::{Deserialize, Serialize};

use crate::error::{EeeError, Result};

/// Tolerance on row sums of every stochastic kernel.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// A dense row-major matrix whose rows are meant to be probability vectors.
///
/// Construction only checks the shape; the probabilistic invariants are
/// checked by [`StochasticKernel::defects`] so that a malformed kernel can be
/// loaded and reported on rather than rejected outright.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct StochasticKernel {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// One problem found in a kernel row.
#[derive(Clone, Debug, PartialEq)]
pub enum RowDefect {
    Negative { row: usize, col: usize, value: f64 },
    NotFinite { row: usize, col: usize },
    RowSum { row: usize, sum: f64 },
}

impl StochasticKernel {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(EeeError::Structural(format!(
                "kernel data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        Ok(StochasticKernel { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
            return Err(EeeError::Structural(format!(
                "ragged matrix: row {} has {} entries, row 1 has {cols}",
                bad + 1,
                rows[bad].len()
            )));
        }
        Ok(StochasticKernel {
            rows: n,
            cols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// Every row equal to `1/cols`.
    pub fn uniform(rows: usize, cols: usize) -> Self {
        StochasticKernel {
            rows,
            cols,
            data: vec![1.0 / cols as f64; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        StochasticKernel {
            rows: n,
            cols: n,
            data,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols.max(1)).map(<[f64]>::to_vec).collect()
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    /// `weight * self + (1 - weight) * other`, entrywise.
    pub fn blend(&self, other: &Self, weight: f64) -> Result<Self> {
        if !self.same_shape(other) {
            return Err(EeeError::Structural(format!(
                "cannot blend {}x{} with {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| weight * a + (1.0 - weight) * b)
            .collect();
        Ok(StochasticKernel {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Entrywise mean of kernels of identical shape.
    pub fn mean<'a>(kernels: impl IntoIterator<Item = &'a StochasticKernel>) -> Result<Self> {
        let mut iter = kernels.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| EeeError::Structural("mean of zero kernels".into()))?;
        let mut acc = first.data.clone();
        let mut count = 1usize;
        for k in iter {
            if !k.same_shape(first) {
                return Err(EeeError::Structural("mean of kernels with different shapes".into()));
            }
            acc.iter_mut().zip(&k.data).for_each(|(a, b)| *a += b);
            count += 1;
        }
        acc.iter_mut().for_each(|a| *a /= count as f64);
        Ok(StochasticKernel {
            rows: first.rows,
            cols: first.cols,
            data: acc,
        })
    }

    /// Row-sum norm `max_r sum_c |A_rc - B_rc|` of the difference.
    pub fn row_sum_distance(&self, other: &Self) -> Result<f64> {
        if !self.same_shape(other) {
            return Err(EeeError::Structural(format!(
                "row-sum distance between {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok((0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(other.row(r))
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max))
    }

    pub fn defects(&self) -> Vec<RowDefect> {
        let mut out = Vec::new();
        for r in 0..self.rows {
            let row = self.row(r);
            for (c, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    out.push(RowDefect::NotFinite { row: r, col: c });
                } else if v < 0.0 {
                    out.push(RowDefect::Negative {
                        row: r,
                        col: c,
                        value: v,
                    });
                }
            }
            let sum: f64 = row.iter().sum();
            if !((sum - 1.0).abs() <= ROW_SUM_TOL) {
                out.push(RowDefect::RowSum { row: r, sum });
            }
        }
        out
    }

    pub fn is_stochastic(&self) -> bool {
        self.defects().is_empty()
    }

    /// Divides each row whose sum is already within [`ROW_SUM_TOL`] of one by
    /// that sum. Rows further off are left alone for validation to report,
    /// and rows already at one up to rounding are left bit-for-bit intact.
    pub fn renormalize_rows(&mut self) {
        let cols = self.cols;
        for row in self.data.chunks_mut(cols.max(1)) {
            let sum: f64 = row.iter().sum();
            let err = (sum - 1.0).abs();
            if sum > 0.0 && err > 4.0 * f64::EPSILON && err <= ROW_SUM_TOL {
                row.iter_mut().for_each(|v| *v /= sum);
            }
        }
    }
}

impl TryFrom<Vec<Vec<f64>>> for StochasticKernel {
    type Error = EeeError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        StochasticKernel::from_rows(rows)
    }
}

impl From<StochasticKernel> for Vec<Vec<f64>> {
    fn from(k: StochasticKernel) -> Self {
        k.to_rows()
    }
}
