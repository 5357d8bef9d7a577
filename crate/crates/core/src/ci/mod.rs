//! Conditional-independence tests behind a single trait.

mod discrete;
mod fisher;
mod gcm;
mod oracle;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use discrete::{exact_discrete_ci, DiscreteOracle, JointTable};
pub use fisher::FisherZ;
pub use gcm::{Gcm, Regressor};
pub use oracle::OracleCi;

/// Outcome of one test. Oracle backends report p-values of exactly 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiDecision {
    pub independent: bool,
    pub statistic: f64,
    pub p_value: f64,
    /// Set when the test could not be carried out as specified (singular
    /// conditioning set, zero residual variance, constant column).
    pub degenerate: bool,
}

impl CiDecision {
    pub fn oracle(independent: bool) -> Self {
        CiDecision { independent, statistic: 0.0, p_value: if independent { 1.0 } else { 0.0 }, degenerate: false }
    }

    pub(crate) fn from_p(statistic: f64, p_value: f64, alpha: f64) -> Self {
        CiDecision { independent: p_value > alpha, statistic, p_value, degenerate: false }
    }

    pub(crate) fn degenerate_dependent() -> Self {
        CiDecision { independent: false, statistic: f64::NAN, p_value: 0.0, degenerate: true }
    }
}

/// `x ⊥ y | given`, over variable positions `0..num_vars()`. Any selection
/// set is implicit in the backend.
pub trait CiTest: Sync {
    fn num_vars(&self) -> usize;
    fn test(&self, x: usize, y: usize, given: &[usize]) -> Result<CiDecision>;
}

impl<T: CiTest + ?Sized> CiTest for &T {
    fn num_vars(&self) -> usize {
        (**self).num_vars()
    }

    fn test(&self, x: usize, y: usize, given: &[usize]) -> Result<CiDecision> {
        (**self).test(x, y, given)
    }
}

impl<T: CiTest + ?Sized> CiTest for Box<T> {
    fn num_vars(&self) -> usize {
        (**self).num_vars()
    }

    fn test(&self, x: usize, y: usize, given: &[usize]) -> Result<CiDecision> {
        (**self).test(x, y, given)
    }
}

pub(crate) fn validate(n: usize, x: usize, y: usize, given: &[usize]) -> Result<()> {
    for &v in [x, y].iter().chain(given) {
        if v >= n {
            return Err(Error::UnknownVertex(format!("#{v}")));
        }
    }
    if x == y {
        return Err(Error::invalid("CI query needs two distinct variables"));
    }
    if given.contains(&x) || given.contains(&y) {
        return Err(Error::OverlappingSets(format!("#{}", if given.contains(&x) { x } else { y })));
    }
    Ok(())
}

/// P-value of a standard normal statistic, two-sided.
pub(crate) fn two_sided_p(z: f64) -> f64 {
    statrs::function::erf::erfc(z.abs() / std::f64::consts::SQRT_2)
}

/// Which backend a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Backend {
    #[serde(rename = "oracle")]
    Oracle,
    #[serde(rename = "fisher-z")]
    FisherZ,
    #[serde(rename = "gcm-linear")]
    GcmLinear,
    #[serde(rename = "gcm-kernel")]
    GcmKernel,
}

impl Backend {
    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Oracle => "oracle",
            Backend::FisherZ => "fisher-z",
            Backend::GcmLinear => "gcm-linear",
            Backend::GcmKernel => "gcm-kernel",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(Backend::Oracle),
            "fisher-z" => Ok(Backend::FisherZ),
            "gcm-linear" => Ok(Backend::GcmLinear),
            "gcm-kernel" => Ok(Backend::GcmKernel),
            other => Err(Error::invalid(format!("unknown CI test `{other}`"))),
        }
    }
}

type Key = (usize, usize, Vec<usize>);

fn key(x: usize, y: usize, given: &[usize]) -> Key {
    let mut g = given.to_vec();
    g.sort_unstable();
    (x.min(y), x.max(y), g)
}

/// Memoizes decisions by unordered pair and conditioning set.
pub struct Cached<T> {
    inner: T,
    memo: Mutex<HashMap<Key, CiDecision>>,
}

impl<T: CiTest> Cached<T> {
    pub fn new(inner: T) -> Self {
        Cached { inner, memo: Mutex::new(HashMap::new()) }
    }

    pub fn into_inner(self) -> T {
        self.inner
    }
}

impl<T: CiTest> CiTest for Cached<T> {
    fn num_vars(&self) -> usize {
        self.inner.num_vars()
    }

    fn test(&self, x: usize, y: usize, given: &[usize]) -> Result<CiDecision> {
        let k = key(x, y, given);
        if let Some(d) = self.memo.lock().expect("cache lock").get(&k) {
            return Ok(*d);
        }
        let d = self.inner.test(x, y, given)?;
        self.memo.lock().expect("cache lock").insert(k, d);
        Ok(d)
    }
}

/// One logged query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CiRecord {
    pub x: usize,
    pub y: usize,
    pub given: Vec<usize>,
    #[serde(flatten)]
    pub decision: CiDecision,
}

/// Logs every distinct query for audit output.
pub struct Recording<T> {
    inner: T,
    log: Mutex<HashMap<Key, CiDecision>>,
}

impl<T: CiTest> Recording<T> {
    pub fn new(inner: T) -> Self {
        Recording { inner, log: Mutex::new(HashMap::new()) }
    }

    /// Distinct queries sorted by (x, y, given), with `x < y`.
    pub fn records(&self) -> Vec<CiRecord> {
        let log = self.log.lock().expect("log lock");
        let mut out: Vec<CiRecord> = log
            .iter()
            .map(|((x, y, g), d)| CiRecord { x: *x, y: *y, given: g.clone(), decision: *d })
            .collect();
        out.sort_by(|a, b| (a.given.len(), a.x, a.y, &a.given).cmp(&(b.given.len(), b.x, b.y, &b.given)));
        out
    }
}

impl<T: CiTest> CiTest for Recording<T> {
    fn num_vars(&self) -> usize {
        self.inner.num_vars()
    }

    fn test(&self, x: usize, y: usize, given: &[usize]) -> Result<CiDecision> {
        let d = self.inner.test(x, y, given)?;
        self.log.lock().expect("log lock").insert(key(x, y, given), d);
        Ok(d)
    }
}
