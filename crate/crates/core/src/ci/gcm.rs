use nalgebra::{DMatrix, DVector};

use super::{two_sided_p, validate, CiDecision, CiTest};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regressor {
    /// Ordinary least squares with intercept.
    Linear,
    /// Gaussian-kernel ridge regression, median-distance bandwidth and
    /// penalty `1e-3 · n`.
    Kernel,
}

/// Generalised covariance measure: normalised mean of the product of the
/// residuals of `x` and `y` after regressing each on the conditioning set.
#[derive(Debug, Clone)]
pub struct Gcm {
    data: DMatrix<f64>,
    alpha: f64,
    regressor: Regressor,
}

impl Gcm {
    pub fn new(data: DMatrix<f64>, alpha: f64, regressor: Regressor) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if data.nrows() < 50 {
            return Err(Error::invalid("GCM needs at least 50 samples"));
        }
        Ok(Gcm { data, alpha, regressor })
    }

    fn residuals(&self, targets: &[usize], given: &[usize]) -> Option<Vec<DVector<f64>>> {
        let n = self.data.nrows();
        let ys: Vec<DVector<f64>> = targets.iter().map(|&t| self.data.column(t).into_owned()).collect();
        let centered = |y: &DVector<f64>| {
            let m = y.mean();
            y.map(|v| v - m)
        };
        if given.is_empty() {
            return Some(ys.iter().map(centered).collect());
        }
        match self.regressor {
            Regressor::Linear => {
                let design = DMatrix::from_fn(n, given.len() + 1, |r, c| if c == 0 { 1.0 } else { self.data[(r, given[c - 1])] });
                let svd = design.clone().svd(true, true);
                ys.iter()
                    .map(|y| {
                        let beta = svd.solve(y, 1e-12).ok()?;
                        Some(y - &design * beta)
                    })
                    .collect()
            }
            Regressor::Kernel => {
                let z = DMatrix::from_fn(n, given.len(), |r, c| self.data[(r, given[c])]);
                let sq = |a: usize, b: usize| -> f64 { (0..z.ncols()).map(|c| (z[(a, c)] - z[(b, c)]).powi(2)).sum() };
                let mut dists: Vec<f64> = Vec::with_capacity(n * (n - 1) / 2);
                for a in 0..n {
                    for b in a + 1..n {
                        dists.push(sq(a, b).sqrt());
                    }
                }
                let mid = dists.len() / 2;
                let (_, med, _) = dists.select_nth_unstable_by(mid, f64::total_cmp);
                let h = if *med > 0.0 { *med } else { 1.0 };
                let gamma = 1.0 / (2.0 * h * h);
                let kernel = DMatrix::from_fn(n, n, |a, b| (-gamma * sq(a, b)).exp());
                let lambda = 1e-3 * n as f64;
                let chol = (&kernel + DMatrix::identity(n, n) * lambda).cholesky()?;
                Some(
                    ys.iter()
                        .map(|y| {
                            let yc = centered(y);
                            let coef = chol.solve(&yc);
                            &yc - &kernel * coef
                        })
                        .collect(),
                )
            }
        }
    }
}

impl CiTest for Gcm {
    fn num_vars(&self) -> usize {
        self.data.ncols()
    }

    fn test(&self, x: usize, y: usize, given: &[usize]) -> Result<CiDecision> {
        validate(self.num_vars(), x, y, given)?;
        let Some(res) = self.residuals(&[x, y], given) else {
            return Ok(CiDecision::degenerate_dependent());
        };
        for (k, &t) in [x, y].iter().enumerate() {
            let col = self.data.column(t);
            let m = col.mean();
            let total: f64 = col.iter().map(|v| (v - m).powi(2)).sum();
            if res[k].norm_squared() <= 1e-12 * total || total == 0.0 {
                return Ok(CiDecision::degenerate_dependent());
            }
        }
        let n = self.data.nrows() as f64;
        let r: Vec<f64> = res[0].iter().zip(res[1].iter()).map(|(a, b)| a * b).collect();
        let mean = r.iter().sum::<f64>() / n;
        let var = r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        if !(sd > 0.0 && sd.is_finite()) {
            return Ok(CiDecision::degenerate_dependent());
        }
        let stat = n.sqrt() * mean / sd;
        Ok(CiDecision::from_p(stat, two_sided_p(stat), self.alpha))
    }
}
