use super::{validate, CiDecision, CiTest};
use crate::error::{Error, Result};

/// Full joint probability table, row-major with the first variable most
/// significant.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    labels: Vec<String>,
    cards: Vec<usize>,
    probs: Vec<f64>,
}

impl JointTable {
    /// Checks shape, non-negativity and that the cells sum to 1 within `tol`.
    pub fn new(labels: Vec<String>, cards: Vec<usize>, probs: Vec<f64>, tol: f64) -> Result<Self> {
        if labels.len() != cards.len() {
            return Err(Error::invalid("one cardinality per variable required"));
        }
        let cells: usize = cards.iter().product();
        if probs.len() != cells {
            return Err(Error::invalid(format!("expected {cells} cells, got {}", probs.len())));
        }
        if probs.iter().any(|&p| !p.is_finite() || p < -tol) {
            return Err(Error::invalid("probabilities must be finite and non-negative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > tol {
            return Err(Error::invalid(format!("table is not normalized (sums to {total})")));
        }
        Ok(JointTable { labels, cards, probs })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Marginal over `keep`, in the order given.
    pub fn marginal(&self, keep: &[usize]) -> Vec<f64> {
        let k_cards: Vec<usize> = keep.iter().map(|&v| self.cards[v]).collect();
        let mut out = vec![0.0; k_cards.iter().product()];
        let mut digits = vec![0usize; self.cards.len()];
        for &p in &self.probs {
            let mut idx = 0;
            for (&v, &c) in keep.iter().zip(&k_cards) {
                idx = idx * c + digits[v];
            }
            out[idx] += p;
            // advance the mixed-radix counter, last variable fastest
            for d in (0..digits.len()).rev() {
                digits[d] += 1;
                if digits[d] < self.cards[d] {
                    break;
                }
                digits[d] = 0;
            }
        }
        out
    }
}

/// Exact test of `x ⊥ y | given` on a joint table; `x`, `y` and `given` are
/// disjoint variable sets. The statistic is the largest deviation
/// `|P(a, b | c) - P(a | c) P(b | c)|` over cells with `P(c) > 0`.
pub fn exact_discrete_ci(table: &JointTable, x: &[usize], y: &[usize], given: &[usize], tol: f64) -> Result<CiDecision> {
    let n = table.cards.len();
    let all: Vec<usize> = x.iter().chain(y).chain(given).copied().collect();
    let mut seen = vec![false; n];
    for &v in &all {
        if v >= n {
            return Err(Error::UnknownVertex(format!("#{v}")));
        }
        if seen[v] {
            return Err(Error::OverlappingSets(table.labels[v].clone()));
        }
        seen[v] = true;
    }
    if x.is_empty() || y.is_empty() {
        return Ok(CiDecision::oracle(true));
    }
    let size = |vs: &[usize]| -> usize { vs.iter().map(|&v| table.cards[v]).product() };
    let (na, nb, nc) = (size(x), size(y), size(given));
    let pabc = table.marginal(&all);
    let mut pac = vec![0.0; na * nc];
    let mut pbc = vec![0.0; nb * nc];
    let mut pc = vec![0.0; nc];
    for a in 0..na {
        for b in 0..nb {
            for c in 0..nc {
                let p = pabc[(a * nb + b) * nc + c];
                pac[a * nc + c] += p;
                pbc[b * nc + c] += p;
                pc[c] += p;
            }
        }
    }
    let mut worst: f64 = 0.0;
    for c in 0..nc {
        if pc[c] <= 0.0 {
            continue;
        }
        for a in 0..na {
            for b in 0..nb {
                let joint = pabc[(a * nb + b) * nc + c] / pc[c];
                let prod = (pac[a * nc + c] / pc[c]) * (pbc[b * nc + c] / pc[c]);
                worst = worst.max((joint - prod).abs());
            }
        }
    }
    Ok(CiDecision { independent: worst <= tol, statistic: worst, p_value: if worst <= tol { 1.0 } else { 0.0 }, degenerate: false })
}

/// Exact backend over single variables of a joint table.
#[derive(Debug, Clone)]
pub struct DiscreteOracle {
    pub table: JointTable,
    pub tol: f64,
}

impl CiTest for DiscreteOracle {
    fn num_vars(&self) -> usize {
        self.table.cards.len()
    }

    fn test(&self, x: usize, y: usize, given: &[usize]) -> Result<CiDecision> {
        validate(self.num_vars(), x, y, given)?;
        exact_discrete_ci(&self.table, &[x], &[y], given, self.tol)
    }
}
