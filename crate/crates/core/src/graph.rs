//! Finite graphs in Serre's convention: oriented edges with a fixed-point
//! free involution `e -> e̅` and an origin map. Unoriented edges are the
//! involution orbits `{e, e̅}`. Morphisms send vertices to vertices and
//! oriented edges to oriented edges, commuting with both structure maps.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub u32);

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub u32);

impl fmt::Debug for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl fmt::Debug for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct OrientedEdge {
    pub reverse: EdgeId,
    pub origin: VertexId,
}

/// A finite Serre graph. Vertex and edge id sets are independent
/// namespaces and survive serialization unchanged.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Graph {
    vertices: BTreeSet<VertexId>,
    edges: BTreeMap<EdgeId, OrientedEdge>,
}

/// A structural defect found by [`Graph::validate`].
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum GraphViolation {
    InvolutionFixedPoint(EdgeId),
    InvolutionNotInvolutive(EdgeId),
    DanglingReverse(EdgeId),
    DanglingOrigin(EdgeId),
}

impl fmt::Display for GraphViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphViolation::InvolutionFixedPoint(e) => {
                write!(f, "edge {e} is its own reverse")
            }
            GraphViolation::InvolutionNotInvolutive(e) => {
                write!(f, "reverse of reverse of edge {e} is not {e}")
            }
            GraphViolation::DanglingReverse(e) => {
                write!(f, "reverse of edge {e} is not an edge of the graph")
            }
            GraphViolation::DanglingOrigin(e) => {
                write!(f, "origin of edge {e} is not a vertex of the graph")
            }
        }
    }
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    pub fn add_vertex(&mut self, v: VertexId) {
        self.vertices.insert(v);
    }

    /// Adds the unoriented edge `{e, re}` from `from` to `to`.
    pub fn add_edge_pair(&mut self, e: EdgeId, re: EdgeId, from: VertexId, to: VertexId) {
        assert_ne!(e, re, "an oriented edge cannot be its own reverse");
        self.edges.insert(e, OrientedEdge { reverse: re, origin: from });
        self.edges.insert(re, OrientedEdge { reverse: e, origin: to });
    }

    /// Inserts one oriented edge record as-is, without pairing it. The
    /// result may violate the involution invariants; callers are expected
    /// to run [`Graph::validate`] afterwards.
    pub fn insert_raw_edge(&mut self, e: EdgeId, reverse: EdgeId, origin: VertexId) {
        self.edges.insert(e, OrientedEdge { reverse, origin });
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices.iter().copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.edges.keys().copied()
    }

    pub fn has_vertex(&self, v: VertexId) -> bool {
        self.vertices.contains(&v)
    }

    pub fn has_edge(&self, e: EdgeId) -> bool {
        self.edges.contains_key(&e)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Number of oriented edges (twice the unoriented count).
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn reverse(&self, e: EdgeId) -> EdgeId {
        self.edges[&e].reverse
    }

    pub fn origin(&self, e: EdgeId) -> VertexId {
        self.edges[&e].origin
    }

    pub fn terminus(&self, e: EdgeId) -> VertexId {
        self.origin(self.reverse(e))
    }

    /// The star of `v`: all oriented edges with origin `v`, in id order.
    pub fn star(&self, v: VertexId) -> Vec<EdgeId> {
        self.edges
            .iter()
            .filter(|(_, rec)| rec.origin == v)
            .map(|(&e, _)| e)
            .collect()
    }

    pub fn valence(&self, v: VertexId) -> usize {
        self.edges.values().filter(|rec| rec.origin == v).count()
    }

    /// One representative per unoriented edge (the smaller id).
    pub fn edge_orbits(&self) -> Vec<EdgeId> {
        self.edges
            .iter()
            .filter(|(&e, rec)| e < rec.reverse)
            .map(|(&e, _)| e)
            .collect()
    }

    pub fn fresh_vertex_id(&self) -> VertexId {
        VertexId(self.vertices.iter().next_back().map_or(0, |v| v.0 + 1))
    }

    pub fn fresh_edge_id(&self) -> EdgeId {
        EdgeId(self.edges.keys().next_back().map_or(0, |e| e.0 + 1))
    }

    /// Checks the Serre-graph invariants and returns every violation found.
    pub fn validate(&self) -> Vec<GraphViolation> {
        let mut out = Vec::new();
        for (&e, rec) in &self.edges {
            if rec.reverse == e {
                out.push(GraphViolation::InvolutionFixedPoint(e));
                continue;
            }
            match self.edges.get(&rec.reverse) {
                None => out.push(GraphViolation::DanglingReverse(e)),
                Some(back) if back.reverse != e => {
                    out.push(GraphViolation::InvolutionNotInvolutive(e))
                }
                _ => {}
            }
            if !self.vertices.contains(&rec.origin) {
                out.push(GraphViolation::DanglingOrigin(e));
            }
        }
        out
    }

    /// `|V| - |E|/2`, the usual Euler characteristic of a finite graph.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - (self.edges.len() / 2) as i64
    }

    /// Connected components as sorted vertex sets, sorted by smallest member.
    pub fn components(&self) -> Vec<BTreeSet<VertexId>> {
        let mut seen: BTreeSet<VertexId> = BTreeSet::new();
        let mut comps = Vec::new();
        for &start in &self.vertices {
            if seen.contains(&start) {
                continue;
            }
            let mut comp = BTreeSet::new();
            let mut queue = vec![start];
            while let Some(v) = queue.pop() {
                if !comp.insert(v) {
                    continue;
                }
                for (_, rec) in self.edges.iter().filter(|(_, r)| r.origin == v) {
                    let w = self.edges[&rec.reverse].origin;
                    if !comp.contains(&w) {
                        queue.push(w);
                    }
                }
            }
            seen.extend(comp.iter().copied());
            comps.push(comp);
        }
        comps
    }

    pub fn component_count(&self) -> usize {
        self.components().len()
    }

    /// DOT export for debugging: one arrow per unoriented edge, oriented by
    /// its smaller id.
    pub fn to_dot(&self, name: &str) -> String {
        let mut s = format!("digraph {name} {{\n");
        for v in &self.vertices {
            s.push_str(&format!("  v{};\n", v.0));
        }
        for e in self.edge_orbits() {
            s.push_str(&format!(
                "  v{} -> v{} [label=\"e{}\"];\n",
                self.origin(e).0,
                self.terminus(e).0,
                e.0
            ));
        }
        s.push_str("}\n");
        s
    }
}

/// Vertex and edge assignments of a graph morphism, kept separate from the
/// graphs so that quotient constructions can share them.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct GraphMap {
    pub vmap: BTreeMap<VertexId, VertexId>,
    pub emap: BTreeMap<EdgeId, EdgeId>,
}

impl GraphMap {
    pub fn identity(g: &Graph) -> Self {
        GraphMap {
            vmap: g.vertices().map(|v| (v, v)).collect(),
            emap: g.edges().map(|e| (e, e)).collect(),
        }
    }

    /// `outer ∘ self`: apply `self` first.
    pub fn then(&self, outer: &GraphMap) -> GraphMap {
        GraphMap {
            vmap: self.vmap.iter().map(|(&v, w)| (v, outer.vmap[w])).collect(),
            emap: self.emap.iter().map(|(&e, f)| (e, outer.emap[f])).collect(),
        }
    }

    pub fn vertex(&self, v: VertexId) -> VertexId {
        self.vmap[&v]
    }

    pub fn edge(&self, e: EdgeId) -> EdgeId {
        self.emap[&e]
    }
}

/// A morphism of Serre graphs.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GraphMorphism {
    pub domain: Graph,
    pub codomain: Graph,
    pub map: GraphMap,
}

impl GraphMorphism {
    pub fn identity(g: &Graph) -> Self {
        GraphMorphism {
            domain: g.clone(),
            codomain: g.clone(),
            map: GraphMap::identity(g),
        }
    }

    pub fn new(domain: Graph, codomain: Graph, map: GraphMap) -> Result<Self> {
        let m = GraphMorphism { domain, codomain, map };
        m.check()?;
        Ok(m)
    }

    /// Totality plus compatibility with involution and origin.
    pub fn check(&self) -> Result<()> {
        check_graph_map(&self.domain, &self.codomain, &self.map)
    }

    pub fn compose(inner: &GraphMorphism, outer: &GraphMorphism) -> GraphMorphism {
        GraphMorphism {
            domain: inner.domain.clone(),
            codomain: outer.codomain.clone(),
            map: inner.map.then(&outer.map),
        }
    }
}

pub fn check_graph_map(domain: &Graph, codomain: &Graph, map: &GraphMap) -> Result<()> {
    for v in domain.vertices() {
        let w = map
            .vmap
            .get(&v)
            .ok_or_else(|| Error::invalid(format!("vertex {v} has no image")))?;
        if !codomain.has_vertex(*w) {
            return Err(Error::invalid(format!("image of vertex {v} is not a vertex")));
        }
    }
    for e in domain.edges() {
        let f = map
            .emap
            .get(&e)
            .ok_or_else(|| Error::invalid(format!("edge {e} has no image")))?;
        if !codomain.has_edge(*f) {
            return Err(Error::invalid(format!("image of edge {e} is not an edge")));
        }
        if map.emap.get(&domain.reverse(e)) != Some(&codomain.reverse(*f)) {
            return Err(Error::invalid(format!(
                "edge map does not commute with the involution at edge {e}"
            )));
        }
        if map.vmap.get(&domain.origin(e)) != Some(&codomain.origin(*f)) {
            return Err(Error::invalid(format!(
                "edge map does not commute with the origin map at edge {e}"
            )));
        }
    }
    Ok(())
}

/// True iff the induced maps on stars are injective.
pub fn is_immersion(m: &GraphMorphism) -> bool {
    stars_injective(&m.domain, &m.map)
}

pub(crate) fn stars_injective(domain: &Graph, map: &GraphMap) -> bool {
    for v in domain.vertices() {
        let mut seen = BTreeSet::new();
        for e in domain.star(v) {
            if !seen.insert(map.emap[&e]) {
                return false;
            }
        }
    }
    true
}

/// Identifies the edges `e1 ~ e2` (and `e̅1 ~ e̅2`, and their termini).
///
/// Requires `origin(e1) = origin(e2)`, `e1 != e2` and `e2 != e̅1`. Merged
/// classes keep their smallest id. When the termini are distinct the fold
/// preserves the Euler characteristic and the component count.
pub fn fold(g: &Graph, e1: EdgeId, e2: EdgeId) -> Result<(Graph, GraphMap)> {
    if !g.has_edge(e1) || !g.has_edge(e2) {
        return Err(Error::invalid("fold edges must belong to the graph"));
    }
    if e1 == e2 {
        return Err(Error::invalid("fold edges must be distinct"));
    }
    if g.reverse(e1) == e2 {
        return Err(Error::invalid("cannot fold an edge against its own reverse"));
    }
    if g.origin(e1) != g.origin(e2) {
        return Err(Error::invalid("fold edges must share their origin"));
    }

    let r1 = g.reverse(e1);
    let r2 = g.reverse(e2);
    let t1 = g.terminus(e1);
    let t2 = g.terminus(e2);

    let ekeep = e1.min(e2);
    let rkeep = r1.min(r2);
    let vkeep = t1.min(t2);

    let mut map = GraphMap::default();
    for v in g.vertices() {
        let target = if v == t1 || v == t2 { vkeep } else { v };
        map.vmap.insert(v, target);
    }
    for e in g.edges() {
        let target = if e == e1 || e == e2 {
            ekeep
        } else if e == r1 || e == r2 {
            rkeep
        } else {
            e
        };
        map.emap.insert(e, target);
    }

    let mut out = Graph::new();
    for v in g.vertices() {
        out.add_vertex(map.vmap[&v]);
    }
    for e in g.edges() {
        let img = map.emap[&e];
        let rec = OrientedEdge {
            reverse: map.emap[&g.reverse(e)],
            origin: map.vmap[&g.origin(e)],
        };
        out.edges.insert(img, rec);
    }
    Ok((out, map))
}

/// Stallings factorization: folds the domain until the morphism becomes an
/// immersion, always folding the lowest-id eligible pair first. Returns
/// `(q, i)` with `m = i ∘ q`, `q` a composition of folds and `i` an
/// immersion. The immersed image is independent of fold order up to
/// isomorphism.
pub fn fold_to_immersion(m: &GraphMorphism) -> Result<(GraphMorphism, GraphMorphism)> {
    m.check()?;
    let original = m.domain.clone();
    let mut current = m.domain.clone();
    let mut quotient = GraphMap::identity(&current);
    let mut residual = m.map.clone();

    loop {
        // Lowest eligible pair (e1, e2) across the whole graph.
        let mut pick: Option<(EdgeId, EdgeId)> = None;
        for v in current.vertices() {
            let star = current.star(v);
            for i in 0..star.len() {
                for j in (i + 1)..star.len() {
                    if residual.emap[&star[i]] == residual.emap[&star[j]] {
                        let cand = (star[i], star[j]);
                        if pick.map_or(true, |p| cand < p) {
                            pick = Some(cand);
                        }
                    }
                }
            }
        }
        let Some((e1, e2)) = pick else { break };
        let (folded, step) = fold(&current, e1, e2)?;
        // The residual map descends because both edges share their image.
        let mut next_residual = GraphMap::default();
        for (&v, &img) in &step.vmap {
            next_residual.vmap.insert(img, residual.vmap[&v]);
        }
        for (&e, &img) in &step.emap {
            next_residual.emap.insert(img, residual.emap[&e]);
        }
        quotient = quotient.then(&step);
        residual = next_residual;
        current = folded;
    }

    let q = GraphMorphism {
        domain: original,
        codomain: current.clone(),
        map: quotient,
    };
    let i = GraphMorphism {
        domain: current,
        codomain: m.codomain.clone(),
        map: residual,
    };
    debug_assert!(is_immersion(&i));
    Ok((q, i))
}


#[cfg(test)]
pub(crate) use tests::rose;
