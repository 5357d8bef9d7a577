use nalgebra::DMatrix;

use super::{two_sided_p, validate, CiDecision, CiTest};
use crate::error::{Error, Result};

/// Partial-correlation test with Fisher's z transform.
#[derive(Debug, Clone)]
pub struct FisherZ {
    n: usize,
    corr: DMatrix<f64>,
    constant: Vec<bool>,
    alpha: f64,
}

impl FisherZ {
    /// `data` is samples × variables.
    pub fn new(data: &DMatrix<f64>, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        let (n, p) = data.shape();
        if n < 4 {
            return Err(Error::invalid("Fisher-z needs at least 4 samples"));
        }
        let mut centered = Vec::with_capacity(p);
        let mut norms = Vec::with_capacity(p);
        for j in 0..p {
            let col = data.column(j);
            let mean = col.iter().sum::<f64>() / n as f64;
            let c: Vec<f64> = col.iter().map(|v| v - mean).collect();
            norms.push(c.iter().map(|v| v * v).sum::<f64>().sqrt());
            centered.push(c);
        }
        let scale = norms.iter().cloned().fold(0.0, f64::max).max(1.0);
        let constant: Vec<bool> = norms.iter().map(|&s| s <= 1e-12 * scale || !s.is_finite()).collect();
        let mut corr = DMatrix::identity(p, p);
        for i in 0..p {
            for j in i + 1..p {
                if constant[i] || constant[j] {
                    continue;
                }
                let dot: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
                let r = (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0);
                corr[(i, j)] = r;
                corr[(j, i)] = r;
            }
        }
        Ok(FisherZ { n, corr, constant, alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Sample partial correlation of `x` and `y` given `given`, or `None`
    /// when the correlation submatrix is singular.
    pub fn partial_correlation(&self, x: usize, y: usize, given: &[usize]) -> Option<f64> {
        if given.is_empty() {
            return Some(self.corr[(x, y)]);
        }
        let idx: Vec<usize> = [x, y].iter().chain(given).copied().collect();
        let k = idx.len();
        let sub = DMatrix::from_fn(k, k, |a, b| self.corr[(idx[a], idx[b])]);
        let chol = sub.cholesky()?;
        // rounding can let an exactly collinear block through with a tiny pivot
        if chol.l_dirty().diagonal().iter().any(|d| d * d <= 1e-10) {
            return None;
        }
        let prec = chol.inverse();
        let denom = (prec[(0, 0)] * prec[(1, 1)]).sqrt();
        if !(denom.is_finite() && denom > 0.0) {
            return None;
        }
        Some((-prec[(0, 1)] / denom).clamp(-1.0, 1.0))
    }
}

impl CiTest for FisherZ {
    fn num_vars(&self) -> usize {
        self.corr.nrows()
    }

    fn test(&self, x: usize, y: usize, given: &[usize]) -> Result<CiDecision> {
        validate(self.num_vars(), x, y, given)?;
        if self.constant[x] || self.constant[y] {
            // a constant column carries no information about anything
            return Ok(CiDecision { independent: true, statistic: 0.0, p_value: 1.0, degenerate: true });
        }
        let w: Vec<usize> = given.iter().copied().filter(|&g| !self.constant[g]).collect();
        let dof = self.n as f64 - w.len() as f64 - 3.0;
        if dof <= 0.0 {
            return Err(Error::invalid(format!("{} samples are too few for a conditioning set of size {}", self.n, w.len())));
        }
        let Some(r) = self.partial_correlation(x, y, &w) else {
            return Ok(CiDecision::degenerate_dependent());
        };
        if r.abs() >= 1.0 - 1e-12 {
            return Ok(CiDecision { independent: false, statistic: f64::INFINITY, p_value: 0.0, degenerate: false });
        }
        let z = dof.sqrt() * r.atanh();
        Ok(CiDecision::from_p(z, two_sided_p(z), self.alpha))
    }
}
