//! Lower-triangular array kernels and the pseudo-convolution algebra.
//!
//! A kernel `A = (a_{n-j}^n)`, `1 <= j <= n <= N`, is laid out like a lower
//! triangular matrix: row `n` holds `(a_{n-1}^n, ..., a_1^n, a_0^n)`, so the
//! diagonal carries `a_0^n`. The product
//!
//! ```text
//! c_{n-k}^n = sum_{j=k}^{n} a_{n-j}^n b_{j-k}^j
//! ```
//!
//! is exactly lower-triangular matrix multiplication in this layout. Row `n`
//! of any result only reads rows `<= n` of its inputs, so every operation on a
//! leading block of rows agrees with the leading rows of the full result.

use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

/// Diagonal entries with magnitude at or below this are treated as singular.
pub const SINGULAR_THRESHOLD: f64 = 1e-300;

/// Row count above which row products are spread over the rayon pool.
const PAR_ROWS: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("size mismatch: {left} rows vs {right}")]
    SizeMismatch { left: usize, right: usize },
    #[error("diagonal entry a_0^{0} is zero or below 1e-300 in magnitude")]
    SingularDiagonal(usize),
    #[error("kernel must have at least one row")]
    Empty,
    #[error("row {row} has {found} entries, expected {row}")]
    RaggedRow { row: usize, found: usize },
    #[error("entry in row {row} is not finite")]
    NonFinite { row: usize },
    #[error("cannot parse kernel file line {line}: {text:?}")]
    Parse { line: usize, text: String },
    #[error("kernel file i/o: {0}")]
    Io(String),
}

#[inline]
fn row_start(n: usize) -> usize {
    n * (n - 1) / 2
}

/// Lower-triangular array kernel with `N` rows, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TriKernel {
    size: usize,
    data: Vec<f64>,
}

impl TriKernel {
    pub fn zeros(size: usize) -> Self {
        TriKernel {
            size,
            data: vec![0.0; size * (size + 1) / 2],
        }
    }

    /// Builds a kernel from `f(n, k) = a_k^n` for `1 <= n <= N`, `0 <= k < n`.
    pub fn from_fn(size: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut out = TriKernel::zeros(size);
        for n in 1..=size {
            for k in 0..n {
                *out.get_mut(n, k) = f(n, k);
            }
        }
        out
    }

    /// Kernel whose entries depend only on the lag: `a_k^n = seq[k]`.
    pub fn toeplitz(seq: &[f64], size: usize) -> Self {
        assert!(seq.len() >= size, "sequence shorter than kernel size");
        TriKernel::from_fn(size, |_, k| seq[k])
    }

    /// Builds a kernel from rows in matrix order, row `n` being
    /// `(a_{n-1}^n, ..., a_0^n)`.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, KernelError> {
        if rows.is_empty() {
            return Err(KernelError::Empty);
        }
        let mut data = Vec::with_capacity(rows.len() * (rows.len() + 1) / 2);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != i + 1 {
                return Err(KernelError::RaggedRow {
                    row: i + 1,
                    found: row.len(),
                });
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(KernelError::NonFinite { row: i + 1 });
            }
            data.extend_from_slice(row);
        }
        Ok(TriKernel {
            size: rows.len(),
            data,
        })
    }

    /// `I`: `a_0^n = 1`, everything else zero.
    pub fn identity(size: usize) -> Self {
        TriKernel::from_fn(size, |_, k| if k == 0 { 1.0 } else { 0.0 })
    }

    /// `L`: all entries one.
    pub fn lower_ones(size: usize) -> Self {
        TriKernel::from_fn(size, |_, _| 1.0)
    }

    /// `L^{(-1)}`: one on the diagonal, minus one on the first subdiagonal.
    pub fn lower_ones_inverse(size: usize) -> Self {
        TriKernel::from_fn(size, |_, k| match k {
            0 => 1.0,
            1 => -1.0,
            _ => 0.0,
        })
    }

    /// Number of rows `N`.
    pub fn size(&self) -> usize {
        self.size
    }

    /// `a_k^n` (row `n` is 1-based, `k = n - j` is the lag).
    #[inline]
    pub fn get(&self, n: usize, k: usize) -> f64 {
        debug_assert!(n >= 1 && n <= self.size && k < n);
        self.data[row_start(n) + n - 1 - k]
    }

    #[inline]
    pub fn get_mut(&mut self, n: usize, k: usize) -> &mut f64 {
        debug_assert!(n >= 1 && n <= self.size && k < n);
        &mut self.data[row_start(n) + n - 1 - k]
    }

    /// Matrix-position access: `a_{n-j}^n`.
    #[inline]
    pub fn at(&self, n: usize, j: usize) -> f64 {
        debug_assert!(1 <= j && j <= n && n <= self.size);
        self.data[row_start(n) + j - 1]
    }

    /// Row `n` in matrix order `(a_{n-1}^n, ..., a_0^n)`.
    #[inline]
    pub fn row(&self, n: usize) -> &[f64] {
        &self.data[row_start(n)..row_start(n) + n]
    }

    #[inline]
    pub fn row_mut(&mut self, n: usize) -> &mut [f64] {
        let s = row_start(n);
        &mut self.data[s..s + n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (1..=self.size).map(move |n| self.row(n))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (1..=self.size).map(|n| self.get(n, 0)).collect()
    }

    /// `sum_{j=1}^n a_{n-j}^n`.
    pub fn row_sum(&self, n: usize) -> f64 {
        self.row(n).iter().sum()
    }

    /// Leading `m` rows.
    pub fn leading(&self, m: usize) -> TriKernel {
        assert!(m <= self.size);
        TriKernel {
            size: m,
            data: self.data[..m * (m + 1) / 2].to_vec(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &TriKernel) -> f64 {
        assert_eq!(self.size, other.size, "size mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn scale(&self, alpha: f64) -> TriKernel {
        TriKernel {
            size: self.size,
            data: self.data.iter().map(|x| alpha * x).collect(),
        }
    }

    fn check_size(&self, other: &TriKernel) -> Result<(), KernelError> {
        if self.size != other.size {
            return Err(KernelError::SizeMismatch {
                left: self.size,
                right: other.size,
            });
        }
        Ok(())
    }

    /// `alpha * a + b`, entrywise.
    pub fn axpy(alpha: f64, a: &TriKernel, b: &TriKernel) -> Result<TriKernel, KernelError> {
        a.check_size(b)?;
        Ok(TriKernel {
            size: a.size,
            data: a
                .data
                .iter()
                .zip(&b.data)
                .map(|(x, y)| alpha * x + y)
                .collect(),
        })
    }

    /// Pseudo-convolution `self ̄* other`.
    pub fn pseudo_convolve(&self, other: &TriKernel) -> Result<TriKernel, KernelError> {
        self.check_size(other)?;
        let row_of = |n: usize| -> Vec<f64> {
            let a = self.row(n);
            // c(n, k) = sum_{j=k}^{n} A(n, j) B(j, k), columns 1-based
            (1..=n)
                .map(|k| {
                    let mut acc = 0.0;
                    for j in k..=n {
                        acc += a[j - 1] * other.at(j, k);
                    }
                    acc
                })
                .collect()
        };
        let rows: Vec<Vec<f64>> = if self.size >= PAR_ROWS {
            (1..=self.size).into_par_iter().map(row_of).collect()
        } else {
            (1..=self.size).map(row_of).collect()
        };
        Ok(TriKernel {
            size: self.size,
            data: rows.concat(),
        })
    }

    /// `y = self ̄* x` with `y_n = sum_{j=1}^n a_{n-j}^n x_j`. Both vectors are
    /// 1-based in the algebra and 0-based here.
    pub fn pseudo_convolve_vec(&self, x: &[f64]) -> Result<Vec<f64>, KernelError> {
        if x.len() != self.size {
            return Err(KernelError::SizeMismatch {
                left: self.size,
                right: x.len(),
            });
        }
        Ok((1..=self.size)
            .map(|n| self.row(n).iter().zip(x).map(|(a, x)| a * x).sum())
            .collect())
    }

    /// Two-sided inverse by forward recursion:
    /// `b_0^n = 1/a_0^n`, `b_{n-k}^n = -(a_0^n)^{-1} sum_{j=k}^{n-1} a_{n-j}^n b_{j-k}^j`.
    pub fn inverse(&self) -> Result<TriKernel, KernelError> {
        let mut inv = TriKernel::zeros(self.size);
        for n in 1..=self.size {
            let diag = self.get(n, 0);
            if !(diag.abs() > SINGULAR_THRESHOLD) {
                return Err(KernelError::SingularDiagonal(n));
            }
            let recip = 1.0 / diag;
            let a = self.row(n);
            let mut row = vec![0.0; n];
            for k in 1..n {
                let mut acc = 0.0;
                for j in k..n {
                    acc += a[j - 1] * inv.at(j, k);
                }
                row[k - 1] = -acc * recip;
            }
            row[n - 1] = recip;
            inv.row_mut(n).copy_from_slice(&row);
        }
        Ok(inv)
    }

    /// Whether `a_k^n` depends only on `k`.
    pub fn is_toeplitz(&self) -> bool {
        (2..=self.size).all(|n| (0..n - 1).all(|k| self.get(n, k) == self.get(n - 1, k)))
    }

    /// Parses the CSV-like text format: line `n` holds the `n` values
    /// `a_{n-1}^n, ..., a_0^n`. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, KernelError> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| KernelError::Parse {
                    line: i + 1,
                    text: line.to_string(),
                })?;
            rows.push(row);
        }
        TriKernel::from_rows(&rows)
    }

    pub fn read(path: &Path) -> Result<Self, KernelError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| KernelError::Io(format!("{}: {e}", path.display())))?;
        TriKernel::parse(&text)
    }

    pub fn write(&self, path: &Path) -> Result<(), KernelError> {
        std::fs::write(path, self.to_string())
            .map_err(|e| KernelError::Io(format!("{}: {e}", path.display())))
    }
}

/// Shortest round-trip decimal representation, one row per line.
impl fmt::Display for TriKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.rows() {
            for (i, x) in row.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{x:?}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
