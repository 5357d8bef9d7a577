//! File formats.
//!
//! - Directed graphs: `vertex <label> role=<r> wave=<w>` lines followed by
//!   `A -> B` lines.
//! - Mixed graphs: the same vertex lines, then one edge per line with a
//!   three-character connector, the first character being the mark at the
//!   left vertex and the last the mark at the right vertex: `---`, `-->`,
//!   `o->`, `o-o`, `o--`, `<->`. Reversed connectors such as `<--` are
//!   accepted on input.
//! - Mixtures: JSON `{roles, waves, t, components}`.
//! - Waves: JSON object mapping column label to wave.
//! - Prior knowledge: `A !-> B` lines, "A is not an ancestor of B".
//! - Data: CSV with a header row.
//!
//! `#` starts a comment in every text format.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::{Read, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cim::{PriorKnowledge, WaveAssignment};
use crate::error::{Error, Result};
use crate::graph::{Dag, Digraph, DirectedGraph, Mark, MixedGraph, Role, Vertex};
use crate::mixture::MixtureGraph;
use crate::synth::Dataset;

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn vertex_line(v: &Vertex) -> String {
    let mut s = format!("vertex {} role={}", v.label, v.role);
    if let Some(w) = v.wave {
        let _ = write!(s, " wave={w}");
    }
    s
}

fn parse_vertex(line: usize, rest: &str) -> Result<Vertex> {
    let mut parts = rest.split_whitespace();
    let label = parts.next().ok_or_else(|| parse_err(line, "vertex line without a label"))?;
    let mut v = Vertex::observed(label, None);
    for kv in parts {
        let (k, val) = kv.split_once('=').ok_or_else(|| parse_err(line, format!("expected key=value, got `{kv}`")))?;
        match k {
            "role" => v.role = val.parse().map_err(|e: Error| parse_err(line, e.to_string()))?,
            "wave" => v.wave = Some(val.parse().map_err(|_| parse_err(line, format!("bad wave `{val}`")))?),
            _ => return Err(parse_err(line, format!("unknown vertex attribute `{k}`"))),
        }
    }
    Ok(v)
}

/// Vertices in declaration order; edge lines name vertices that must
/// already be declared or are added as observed vertices without a wave.
fn lookup_or_add(vertices: &mut Vec<Vertex>, index: &mut BTreeMap<String, usize>, label: &str) -> usize {
    if let Some(&i) = index.get(label) {
        return i;
    }
    vertices.push(Vertex::observed(label, None));
    index.insert(label.to_string(), vertices.len() - 1);
    vertices.len() - 1
}

pub fn write_digraph<G: Digraph + ?Sized>(g: &G) -> String {
    let mut s = String::new();
    for v in g.vertices() {
        s.push_str(&vertex_line(v));
        s.push('\n');
    }
    let mut edges: Vec<(&str, &str)> =
        (0..g.n()).flat_map(|a| g.children(a).iter().map(move |&b| (g.label(a), g.label(b)))).collect();
    edges.sort_unstable();
    for (a, b) in edges {
        let _ = writeln!(s, "{a} -> {b}");
    }
    s
}

pub fn read_digraph(text: &str) -> Result<DirectedGraph> {
    let mut vertices = Vec::new();
    let mut index = BTreeMap::new();
    let mut edges = Vec::new();
    for (n, line) in content_lines(text) {
        if let Some(rest) = line.strip_prefix("vertex ") {
            let v = parse_vertex(n, rest)?;
            if index.contains_key(&v.label) {
                return Err(parse_err(n, format!("vertex `{}` declared twice", v.label)));
            }
            index.insert(v.label.clone(), vertices.len());
            vertices.push(v);
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            [a, "->", b] => edges.push((n, a.to_string(), b.to_string())),
            _ => return Err(parse_err(n, format!("expected `A -> B`, got `{line}`"))),
        }
    }
    let ids: Vec<(usize, usize, usize)> =
        edges.iter().map(|(n, a, b)| (*n, lookup_or_add(&mut vertices, &mut index, a), lookup_or_add(&mut vertices, &mut index, b))).collect();
    let mut g = DirectedGraph::new(vertices)?;
    for (n, a, b) in ids {
        g.add_edge(a, b).map_err(|e| parse_err(n, e.to_string()))?;
    }
    Ok(g)
}

fn mark_char_left(m: Mark) -> char {
    match m {
        Mark::Tail => '-',
        Mark::Arrow => '<',
        Mark::Circle => 'o',
    }
}

fn mark_char_right(m: Mark) -> char {
    match m {
        Mark::Tail => '-',
        Mark::Arrow => '>',
        Mark::Circle => 'o',
    }
}

const CANONICAL: [&str; 6] = ["---", "-->", "o->", "o-o", "o--", "<->"];

fn connector(left: Mark, right: Mark) -> String {
    format!("{}-{}", mark_char_left(left), mark_char_right(right))
}

fn parse_connector(tok: &str) -> Option<(Mark, Mark)> {
    let c: Vec<char> = tok.chars().collect();
    if c.len() != 3 || c[1] != '-' {
        return None;
    }
    let left = match c[0] {
        '-' => Mark::Tail,
        '<' => Mark::Arrow,
        'o' => Mark::Circle,
        _ => return None,
    };
    let right = match c[2] {
        '-' => Mark::Tail,
        '>' => Mark::Arrow,
        'o' => Mark::Circle,
        _ => return None,
    };
    Some((left, right))
}

/// Canonical text: vertices in graph order, then edges sorted by their
/// written form.
pub fn write_mixed(g: &MixedGraph) -> String {
    let mut s = String::new();
    for v in g.vertices() {
        s.push_str(&vertex_line(v));
        s.push('\n');
    }
    let mut lines: Vec<String> = g
        .edges()
        .into_iter()
        .map(|(u, v, mu, mv)| {
            let (lu, lv) = (g.label(u), g.label(v));
            let fwd = connector(mu, mv);
            let back = connector(mv, mu);
            let use_fwd = match (CANONICAL.contains(&fwd.as_str()), CANONICAL.contains(&back.as_str())) {
                (true, true) => lu <= lv,
                (true, false) => true,
                _ => false,
            };
            if use_fwd {
                format!("{lu} {fwd} {lv}")
            } else {
                format!("{lv} {back} {lu}")
            }
        })
        .collect();
    lines.sort();
    for l in lines {
        s.push_str(&l);
        s.push('\n');
    }
    s
}

pub fn read_mixed(text: &str) -> Result<MixedGraph> {
    let mut vertices = Vec::new();
    let mut index = BTreeMap::new();
    let mut edges = Vec::new();
    for (n, line) in content_lines(text) {
        if let Some(rest) = line.strip_prefix("vertex ") {
            let v = parse_vertex(n, rest)?;
            if index.contains_key(&v.label) {
                return Err(parse_err(n, format!("vertex `{}` declared twice", v.label)));
            }
            index.insert(v.label.clone(), vertices.len());
            vertices.push(v);
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let [a, c, b] = toks.as_slice() else {
            return Err(parse_err(n, format!("expected `A <connector> B`, got `{line}`")));
        };
        let (ma, mb) = parse_connector(c).ok_or_else(|| parse_err(n, format!("unknown connector `{c}`")))?;
        edges.push((n, a.to_string(), b.to_string(), ma, mb));
    }
    let ids: Vec<_> = edges
        .iter()
        .map(|(n, a, b, ma, mb)| (*n, lookup_or_add(&mut vertices, &mut index, a), lookup_or_add(&mut vertices, &mut index, b), *ma, *mb))
        .collect();
    let mut g = MixedGraph::new(vertices);
    for (n, a, b, ma, mb) in ids {
        if a == b {
            return Err(parse_err(n, "self-loop"));
        }
        if g.adjacent(a, b) {
            return Err(parse_err(n, format!("duplicate edge `{} {}`", g.label(a), g.label(b))));
        }
        g.set_edge(a, b, ma, mb)?;
    }
    Ok(g)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MixtureJson {
    #[serde(default)]
    roles: serde_json::Map<String, serde_json::Value>,
    #[serde(default)]
    waves: serde_json::Map<String, serde_json::Value>,
    #[serde(default)]
    t: Vec<String>,
    components: Vec<Vec<(String, String)>>,
}

/// Vertex order: `roles` keys, then `waves` keys, then `t`, then edge
/// endpoints, each in order of first appearance. Unlisted roles default to
/// observed.
pub fn read_mixture_json(text: &str) -> Result<MixtureGraph> {
    let j: MixtureJson = serde_json::from_str(text)?;
    let mut order: Vec<String> = Vec::new();
    let mut seen = BTreeSet::new();
    let mut add = |l: &str| {
        if seen.insert(l.to_string()) {
            order.push(l.to_string());
        }
    };
    j.roles.keys().for_each(|k| add(k));
    j.waves.keys().for_each(|k| add(k));
    j.t.iter().for_each(|k| add(k));
    for c in &j.components {
        for (a, b) in c {
            add(a);
            add(b);
        }
    }
    let mut vertices = Vec::with_capacity(order.len());
    for l in &order {
        let role = match j.roles.get(l) {
            Some(serde_json::Value::String(r)) => r.parse()?,
            Some(other) => return Err(Error::invalid(format!("role of `{l}` must be a string, got {other}"))),
            None if j.t.contains(l) => Role::Mixture,
            None => Role::Observed,
        };
        let wave = match j.waves.get(l) {
            Some(w) => Some(
                w.as_u64()
                    .filter(|&w| w >= 1 && w <= u32::MAX as u64)
                    .ok_or_else(|| Error::invalid(format!("wave of `{l}` must be a positive integer")))? as u32,
            ),
            None => None,
        };
        vertices.push(Vertex { label: l.clone(), role, wave });
    }
    let comps: Vec<Vec<(&str, &str)>> =
        j.components.iter().map(|c| c.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect()).collect();
    let t: Vec<&str> = j.t.iter().map(String::as_str).collect();
    MixtureGraph::from_edges(&vertices, &comps, &t)
}

pub fn write_mixture_json(m: &MixtureGraph) -> Result<String> {
    let mut roles = serde_json::Map::new();
    let mut waves = serde_json::Map::new();
    let mut t = Vec::new();
    for v in m.base() {
        roles.insert(v.label.clone(), serde_json::Value::String(v.role.to_string()));
        if let Some(w) = v.wave {
            waves.insert(v.label.clone(), w.into());
        }
        if v.role == Role::Mixture {
            t.push(v.label.clone());
        }
    }
    let components = m
        .components()
        .iter()
        .map(|c: &Dag| c.edges().into_iter().map(|(a, b)| (c.label(a).to_string(), c.label(b).to_string())).collect())
        .collect();
    Ok(serde_json::to_string_pretty(&MixtureJson { roles, waves, t, components })?)
}

/// Column-to-wave map in file order.
pub fn read_waves_json(text: &str) -> Result<Vec<(String, u32)>> {
    let map: serde_json::Map<String, serde_json::Value> = serde_json::from_str(text)?;
    map.into_iter()
        .map(|(k, v)| {
            let w = v
                .as_u64()
                .filter(|&w| w >= 1 && w <= u32::MAX as u64)
                .ok_or_else(|| Error::invalid(format!("wave of `{k}` must be a positive integer")))?;
            Ok((k, w as u32))
        })
        .collect()
}

pub fn write_waves_json(w: &WaveAssignment) -> Result<String> {
    let mut map = serde_json::Map::new();
    for (l, &x) in w.labels().iter().zip(w.waves()) {
        map.insert(l.clone(), x.into());
    }
    Ok(serde_json::to_string_pretty(&map)?)
}

/// `A !-> B` lines; labels must appear in `waves`.
pub fn read_prior(text: &str, waves: &WaveAssignment) -> Result<PriorKnowledge> {
    let mut pk = PriorKnowledge::none();
    for (n, line) in content_lines(text) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let [a, "!->", b] = toks.as_slice() else {
            return Err(parse_err(n, format!("expected `A !-> B`, got `{line}`")));
        };
        let ia = waves.index_of(a).ok_or_else(|| parse_err(n, format!("unknown vertex `{a}`")))?;
        let ib = waves.index_of(b).ok_or_else(|| parse_err(n, format!("unknown vertex `{b}`")))?;
        pk.forbid(ia, ib);
    }
    Ok(pk)
}

/// Reads numeric CSV data. Every column must be mapped to a wave; cells
/// must be present and finite.
pub fn read_csv<R: Read>(reader: R, waves: &[(String, u32)]) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let wave_map: BTreeMap<&str, u32> = waves.iter().map(|(l, w)| (l.as_str(), *w)).collect();
    let mut col_waves = Vec::with_capacity(header.len());
    let mut seen = BTreeSet::new();
    for h in &header {
        if !seen.insert(h.as_str()) {
            return Err(Error::invalid(format!("duplicate column `{h}`")));
        }
        let w = wave_map.get(h.as_str()).ok_or_else(|| Error::invalid(format!("column `{h}` has no wave")))?;
        col_waves.push(*w);
    }
    let mut values = Vec::new();
    let mut rows = 0;
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        // data rows are numbered from 1, the header being row 0
        let row = r + 1;
        for (c, h) in header.iter().enumerate() {
            let cell = rec.get(c).map(str::trim).unwrap_or("");
            if cell.is_empty() {
                return Err(Error::invalid(format!("missing value at row {row}, column `{h}`")));
            }
            let v: f64 = cell.parse().map_err(|_| Error::invalid(format!("non-numeric value `{cell}` at row {row}, column `{h}`")))?;
            if !v.is_finite() {
                return Err(Error::invalid(format!("non-finite value at row {row}, column `{h}`")));
            }
            values.push(v);
        }
        if rec.len() > header.len() {
            return Err(Error::invalid(format!("row {row} has {} cells, expected {}", rec.len(), header.len())));
        }
        rows += 1;
    }
    let data = DMatrix::from_row_slice(rows, header.len(), &values);
    Ok(Dataset { labels: header, waves: col_waves, data, provenance: Vec::new() })
}

/// Writes the data with a header row. Values use the shortest
/// representation that parses back to the same float.
pub fn write_csv<W: Write>(d: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(&d.labels)?;
    for r in 0..d.data.nrows() {
        w.write_record((0..d.data.ncols()).map(|c| d.data[(r, c)].to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixture::fixtures;
    use crate::synth::{generate, SynthConfig};

    #[test]
    fn digraph_round_trip() {
        let m = fixtures::figure4();
        let f = m.fused();
        let text = write_digraph(&f);
        let back = read_digraph(&text).unwrap();
        assert_eq!(back.edges(), f.edges());
        assert_eq!(back.vertices(), f.vertices());
        assert_eq!(write_digraph(&back), text);
    }

    #[test]
    fn digraph_rejects_garbage() {
        assert!(matches!(read_digraph("A => B"), Err(Error::Parse { line: 1, .. })));
        assert!(read_digraph("vertex A role=alien").is_err());
        assert!(read_digraph("vertex A\nvertex A").is_err());
        let g = read_digraph("# comment\nA -> B\n\nB -> A # cycles allowed\n").unwrap();
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn mixed_connectors() {
        let g = read_mixed("A --- B\nB --> C\nC o-> D\nD o-o E\nE o-- F\nF <-> G\n").unwrap();
        let m = |a: &str, b: &str| g.mark_at(g.index_of(a).unwrap(), g.index_of(b).unwrap()).unwrap();
        assert_eq!((m("B", "A"), m("A", "B")), (Mark::Tail, Mark::Tail));
        assert_eq!((m("C", "B"), m("B", "C")), (Mark::Tail, Mark::Arrow));
        assert_eq!((m("D", "C"), m("C", "D")), (Mark::Circle, Mark::Arrow));
        assert_eq!((m("E", "D"), m("D", "E")), (Mark::Circle, Mark::Circle));
        assert_eq!((m("F", "E"), m("E", "F")), (Mark::Circle, Mark::Tail));
        assert_eq!((m("G", "F"), m("F", "G")), (Mark::Arrow, Mark::Arrow));
        let text = write_mixed(&g);
        assert_eq!(write_mixed(&read_mixed(&text).unwrap()), text);
    }

    #[test]
    fn reversed_connectors_are_normalised() {
        let g = read_mixed("B <-- A\nD <-o C\nF --o E\n").unwrap();
        let text = write_mixed(&g);
        assert!(text.contains("A --> B"));
        assert!(text.contains("C o-> D"));
        assert!(text.contains("E o-- F"));
    }

    #[test]
    fn mixed_rejects_bad_lines() {
        assert!(read_mixed("A x-x B").is_err());
        assert!(read_mixed("A --> B\nB --- A").is_err());
        assert!(read_mixed("A --> A").is_err());
        assert!(read_mixed("A -->").is_err());
    }

    #[test]
    fn mixture_json_round_trip() {
        for m in [fixtures::figure3(), fixtures::figure4(), fixtures::figure8()] {
            let text = write_mixture_json(&m).unwrap();
            let back = read_mixture_json(&text).unwrap();
            assert_eq!(back.base(), m.base());
            assert_eq!(back.components(), m.components());
            assert_eq!(write_mixture_json(&back).unwrap(), text);
        }
    }

    #[test]
    fn mixture_json_defaults() {
        let m = read_mixture_json(r#"{"t": ["T"], "waves": {"A": 1, "B": 2}, "components": [[["T", "A"], ["A", "B"]], [["T", "B"]]]}"#)
            .unwrap();
        assert_eq!(m.q(), 2);
        assert_eq!(m.base()[m.index_of("T").unwrap()].role, Role::Mixture);
        assert_eq!(m.base()[m.index_of("A").unwrap()].role, Role::Observed);
        assert!(read_mixture_json(r#"{"waves": {"A": 0}, "components": [[]]}"#).is_err());
    }

    #[test]
    fn waves_and_prior() {
        let w = read_waves_json(r#"{"B": 2, "A": 1}"#).unwrap();
        assert_eq!(w, vec![("B".to_string(), 2), ("A".to_string(), 1)]);
        let wa = WaveAssignment::new(w.iter().map(|x| x.0.clone()).collect(), w.iter().map(|x| x.1).collect()).unwrap();
        assert_eq!(read_waves_json(&write_waves_json(&wa).unwrap()).unwrap(), w);
        let pk = read_prior("A !-> B\n# none\n", &wa).unwrap();
        assert!(pk.forbidden.contains(&(1, 0)));
        assert!(read_prior("A -> B", &wa).is_err());
        assert!(read_prior("A !-> Q", &wa).is_err());
        assert!(read_waves_json(r#"{"A": "one"}"#).is_err());
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let cfg = SynthConfig { n_samples: 200, n_latents_range: 0..=0, n_selection_range: 0..=0, ..SynthConfig::default() };
        let (_, d, _, _) = generate(&cfg).unwrap();
        assert_eq!(d.labels.len(), 24);
        let mut buf = Vec::new();
        write_csv(&d, &mut buf).unwrap();
        let waves: Vec<(String, u32)> = d.labels.iter().cloned().zip(d.waves.iter().copied()).collect();
        let back = read_csv(buf.as_slice(), &waves).unwrap();
        assert_eq!(back.data, d.data);
        assert_eq!(back.labels, d.labels);
        assert_eq!(back.waves, d.waves);
        let mut again = Vec::new();
        write_csv(&back, &mut again).unwrap();
        assert_eq!(again, buf);
    }

    #[test]
    fn csv_rejects_missing_and_unmapped() {
        let waves = vec![("a".to_string(), 1), ("b".to_string(), 2)];
        let err = read_csv("a,b\n1,2\n3,\n".as_bytes(), &waves).unwrap_err().to_string();
        assert!(err.contains("row 2") && err.contains("`b`"), "{err}");
        let err = read_csv("a,c\n1,2\n".as_bytes(), &waves).unwrap_err().to_string();
        assert!(err.contains("`c`"), "{err}");
        assert!(read_csv("a,b\n1,x\n".as_bytes(), &waves).is_err());
        assert!(read_csv("a,b\n1\n".as_bytes(), &waves).is_err());
    }
}
