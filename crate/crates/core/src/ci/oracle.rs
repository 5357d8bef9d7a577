use super::{validate, CiDecision, CiTest};
use crate::error::{Error, Result};
use crate::graph::VertexSet;
use crate::mixture::MixtureGraph;

/// Grouped d-separation in a mixture graph, with the selection set always
/// added to the conditioning set.
#[derive(Debug, Clone)]
pub struct OracleCi<'a> {
    m: &'a MixtureGraph,
    vars: Vec<usize>,
    selection: VertexSet,
}

impl<'a> OracleCi<'a> {
    /// `labels` fixes the variable order; each must name a base vertex.
    pub fn new<S: AsRef<str>>(m: &'a MixtureGraph, labels: &[S]) -> Result<Self> {
        let vars = labels
            .iter()
            .map(|l| m.index_of(l.as_ref()).ok_or_else(|| Error::UnknownVertex(l.as_ref().to_string())))
            .collect::<Result<Vec<_>>>()?;
        let selection = m.selection();
        if let Some(&v) = vars.iter().find(|v| selection.contains(v)) {
            return Err(Error::invalid(format!("selection vertex `{}` cannot be tested", m.label(v))));
        }
        Ok(OracleCi { m, vars, selection })
    }

    /// All observed vertices in base order.
    pub fn observed(m: &'a MixtureGraph) -> Self {
        OracleCi { m, vars: m.observed(), selection: m.selection() }
    }

    /// Base indices of the tested variables.
    pub fn vars(&self) -> &[usize] {
        &self.vars
    }
}

impl CiTest for OracleCi<'_> {
    fn num_vars(&self) -> usize {
        self.vars.len()
    }

    fn test(&self, x: usize, y: usize, given: &[usize]) -> Result<CiDecision> {
        validate(self.vars.len(), x, y, given)?;
        let mut c: VertexSet = given.iter().map(|&g| self.vars[g]).collect();
        c.extend(self.selection.iter().copied());
        let sep = self.m.grouped_d_separated(&[self.vars[x]].into(), &[self.vars[y]].into(), &c)?;
        Ok(CiDecision::oracle(sep))
    }
}
