use super::MixtureGraph;
use crate::error::{Error, Result};
use crate::graph::{Dag, Digraph, Role, Vertex, VertexSet};

/// Builds a second mixture that agrees with `m1` on every grouped query
/// over the observed vertices while making `oi` an ancestor of `oj`.
///
/// Components are copied (a single component is duplicated). A new latent
/// `Lk` receives `oi -> Lk` in all but the last component and `Lk -> oj` in
/// the last one, and a new mixture vertex `Tl` points to `Lk` and `oj` in
/// every component.
///
/// Requires `oi ∉ Anc_F1(oj ∪ S)`.
pub fn build_indistinguishable_pair(m1: &MixtureGraph, oi: usize, oj: usize) -> Result<MixtureGraph> {
    let nb = m1.base().len();
    if oi >= nb || oj >= nb || oi == oj {
        return Err(Error::invalid("indistinguishable pair needs two distinct base vertices"));
    }
    let mut target: VertexSet = m1.selection();
    target.insert(oj);
    if m1.fused().ancestors(&target)?.contains(&oi) {
        return Err(Error::invalid(format!(
            "`{}` is already an ancestor of `{}` or the selection set",
            m1.label(oi),
            m1.label(oj)
        )));
    }

    let lk = fresh_label(m1, "Lk");
    let tl = fresh_label(m1, "Tl");
    let mut comps: Vec<Dag> = m1.components().to_vec();
    if comps.len() == 1 {
        comps.push(comps[0].clone());
    }
    let last = comps.len() - 1;
    for (j, dag) in comps.iter_mut().enumerate() {
        let l = dag.push_vertex(Vertex::new(lk.clone(), Role::Latent))?;
        let t = dag.push_vertex(Vertex::new(tl.clone(), Role::Mixture))?;
        if j < last {
            dag.add_edge(oi, l)?;
        } else {
            dag.add_edge(l, oj)?;
        }
        dag.add_edge(t, l)?;
        dag.add_edge(t, oj)?;
    }
    let mut t_names: Vec<String> = m1.mixture_vertices().iter().map(|&t| m1.label(t).to_string()).collect();
    t_names.push(tl);
    let names: Vec<&str> = t_names.iter().map(String::as_str).collect();
    MixtureGraph::build(&comps, &names)
}

fn fresh_label(m: &MixtureGraph, stem: &str) -> String {
    let mut label = stem.to_string();
    let mut k = 1;
    while m.index_of(&label).is_some() {
        k += 1;
        label = format!("{stem}{k}");
    }
    label
}
