//! Nonuniform time grids `0 = t_0 < t_1 < ... < t_N`.

use std::fmt;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("mesh needs at least two points (t_0 = 0 and t_1), got {0}")]
    TooShort(usize),
    #[error("mesh must start at t_0 = 0, got {0}")]
    NonzeroOrigin(f64),
    #[error("mesh point {0} is not strictly greater than its predecessor")]
    NonMonotone(usize),
    #[error("mesh point {0} is not finite")]
    NonFinite(usize),
    #[error("invalid graded mesh parameters: {0}")]
    InvalidParameter(String),
    #[error("cannot parse mesh file line {line}: {text:?}")]
    Parse { line: usize, text: String },
    #[error("mesh file i/o: {0}")]
    Io(String),
}

/// Strictly increasing time grid starting at zero. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    points: Vec<f64>,
}

impl Mesh {
    /// Validates a list of grid points. Comparisons are exact; a repeated
    /// point is an error, not noise.
    pub fn new(points: Vec<f64>) -> Result<Self, MeshError> {
        if points.len() < 2 {
            return Err(MeshError::TooShort(points.len()));
        }
        if let Some(i) = points.iter().position(|t| !t.is_finite()) {
            return Err(MeshError::NonFinite(i));
        }
        if points[0] != 0.0 {
            return Err(MeshError::NonzeroOrigin(points[0]));
        }
        if let Some(i) = (1..points.len()).find(|&i| points[i] <= points[i - 1]) {
            return Err(MeshError::NonMonotone(i));
        }
        Ok(Mesh { points })
    }

    /// Graded mesh `t_k = T (k/N)^r`; `r = 1` is the uniform grid.
    pub fn graded(final_time: f64, steps: usize, grading: f64) -> Result<Self, MeshError> {
        if !(final_time.is_finite() && final_time > 0.0) {
            return Err(MeshError::InvalidParameter(format!(
                "final time must be positive and finite, got {final_time}"
            )));
        }
        if steps == 0 {
            return Err(MeshError::InvalidParameter("step count must be at least 1".into()));
        }
        if !(grading.is_finite() && grading >= 1.0) {
            return Err(MeshError::InvalidParameter(format!(
                "grading exponent must be >= 1, got {grading}"
            )));
        }
        let n = steps as f64;
        let mut points: Vec<f64> = (0..=steps)
            .map(|k| final_time * (k as f64 / n).powf(grading))
            .collect();
        // the endpoint is exact regardless of powf rounding
        points[steps] = final_time;
        Mesh::new(points)
    }

    pub fn uniform(final_time: f64, steps: usize) -> Result<Self, MeshError> {
        Mesh::graded(final_time, steps, 1.0)
    }

    /// Builds a mesh from positive step sizes.
    pub fn from_steps(steps: &[f64]) -> Result<Self, MeshError> {
        let mut points = Vec::with_capacity(steps.len() + 1);
        points.push(0.0);
        let mut t = 0.0;
        for tau in steps {
            t += tau;
            points.push(t);
        }
        Mesh::new(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Number of steps `N`.
    pub fn num_steps(&self) -> usize {
        self.points.len() - 1
    }

    pub fn final_time(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// `t_n`, `0 <= n <= N`.
    pub fn time(&self, n: usize) -> f64 {
        self.points[n]
    }

    /// `tau_n = t_n - t_{n-1}` for `n = 1..=N`.
    pub fn step(&self, n: usize) -> f64 {
        self.points[n] - self.points[n - 1]
    }

    /// All step sizes `(tau_1, ..., tau_N)`.
    pub fn steps(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn min_step(&self) -> f64 {
        self.steps().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn max_step(&self) -> f64 {
        self.steps().into_iter().fold(0.0, f64::max)
    }

    /// Parses the text format: one time value per line, blank lines and
    /// `#` comments ignored.
    pub fn parse(text: &str) -> Result<Self, MeshError> {
        let mut points = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let t: f64 = line.parse().map_err(|_| MeshError::Parse {
                line: i + 1,
                text: line.to_string(),
            })?;
            points.push(t);
        }
        Mesh::new(points)
    }

    pub fn read(path: &Path) -> Result<Self, MeshError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| MeshError::Io(format!("{}: {e}", path.display())))?;
        Mesh::parse(&text)
    }

    pub fn write(&self, path: &Path) -> Result<(), MeshError> {
        std::fs::write(path, self.to_string())
            .map_err(|e| MeshError::Io(format!("{}: {e}", path.display())))
    }
}

impl fmt::Display for Mesh {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.points {
            writeln!(f, "{t}")?;
        }
        Ok(())
    }
}
