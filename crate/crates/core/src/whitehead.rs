//! Whitehead graphs of a graph pair, with the structure needed to
//! reconstruct the pair: the partition of components over base vertices and
//! the crossing bijections over base edges.
//!
//! The Whitehead graph at a base vertex `x` has the star of `x` as its
//! vertex set; its edges are the circle vertices lying over `x`, each
//! joining the images of its two outgoing circle edges. Crossing a base
//! edge `e` matches edge-ends at `e` with edge-ends at `e̅` by following the
//! circles, and these bijections together with the per-vertex grouping
//! determine the pair completely.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, Graph, GraphMap, VertexId};
use crate::pair::{GraphPair, Multicycle, PairMorphism};

/// An edge of a Whitehead graph: a circle vertex over the base vertex,
/// joining two star elements. Slot `k` of the edge is its end lying at
/// `endpoints[k]`; slots are ordered by the id of the realizing circle edge.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct WhEdge {
    pub id: VertexId,
    pub endpoints: [EdgeId; 2],
}

/// The Whitehead graph at one base vertex.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct WhGraph {
    pub at: VertexId,
    pub vertices: Vec<EdgeId>,
    pub edges: Vec<WhEdge>,
}

/// One end of a Whitehead edge.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct End {
    pub edge: VertexId,
    pub slot: u8,
}

/// The crossing data over one oriented base edge `e`: the bijection from
/// edge-ends at `e` to edge-ends at `e̅`, induced by traversing circles.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Crossing {
    pub reverse: EdgeId,
    pub pairs: Vec<(End, End)>,
}

/// All Whitehead graphs of a pair plus the crossing structure. The grouping
/// of components over base vertices is the keying of `graphs`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct WhiteheadSystem {
    pub graphs: BTreeMap<VertexId, WhGraph>,
    pub crossings: BTreeMap<EdgeId, Crossing>,
}

impl WhGraph {
    pub fn valence(&self, s: EdgeId) -> usize {
        self.edges
            .iter()
            .map(|e| e.endpoints.iter().filter(|&&t| t == s).count())
            .sum()
    }

    pub fn edges_at(&self, s: EdgeId) -> Vec<VertexId> {
        self.edges
            .iter()
            .filter(|e| e.endpoints.contains(&s))
            .map(|e| e.id)
            .collect()
    }

    /// Connected components as sorted vertex sets (isolated vertices are
    /// components), sorted by least member.
    pub fn components(&self) -> Vec<BTreeSet<EdgeId>> {
        let mut adj: BTreeMap<EdgeId, Vec<EdgeId>> =
            self.vertices.iter().map(|&v| (v, Vec::new())).collect();
        for e in &self.edges {
            adj.get_mut(&e.endpoints[0]).expect("endpoint").push(e.endpoints[1]);
            adj.get_mut(&e.endpoints[1]).expect("endpoint").push(e.endpoints[0]);
        }
        let mut seen = BTreeSet::new();
        let mut comps = Vec::new();
        for &start in &self.vertices {
            if seen.contains(&start) {
                continue;
            }
            let mut comp = BTreeSet::new();
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                if !comp.insert(v) {
                    continue;
                }
                stack.extend(adj[&v].iter().copied().filter(|w| !comp.contains(w)));
            }
            seen.extend(comp.iter().copied());
            comps.push(comp);
        }
        comps
    }

    /// Blocks of the component of `v` after removing `v`, or `None` when
    /// `v` does not cut its component. Each block is returned with the set
    /// of Whitehead edges joining it to `v`, sorted by least block member.
    pub fn cut_blocks(&self, v: EdgeId) -> Option<Vec<(BTreeSet<EdgeId>, BTreeSet<VertexId>)>> {
        let comp = self.components().into_iter().find(|c| c.contains(&v))?;
        let rest: Vec<EdgeId> = comp.iter().copied().filter(|&w| w != v).collect();
        if rest.is_empty() {
            return None;
        }
        let mut adj: BTreeMap<EdgeId, Vec<EdgeId>> =
            rest.iter().map(|&w| (w, Vec::new())).collect();
        for e in &self.edges {
            let [a, b] = e.endpoints;
            if a != v && b != v && comp.contains(&a) {
                adj.get_mut(&a).expect("endpoint").push(b);
                adj.get_mut(&b).expect("endpoint").push(a);
            }
        }
        let mut seen: BTreeSet<EdgeId> = BTreeSet::new();
        let mut blocks = Vec::new();
        for &start in &rest {
            if seen.contains(&start) {
                continue;
            }
            let mut block = BTreeSet::new();
            let mut stack = vec![start];
            while let Some(w) = stack.pop() {
                if !block.insert(w) {
                    continue;
                }
                stack.extend(adj[&w].iter().copied().filter(|u| !block.contains(u)));
            }
            seen.extend(block.iter().copied());
            let incident: BTreeSet<VertexId> = self
                .edges
                .iter()
                .filter(|e| {
                    let [a, b] = e.endpoints;
                    (a == v && block.contains(&b)) || (b == v && block.contains(&a))
                })
                .map(|e| e.id)
                .collect();
            blocks.push((block, incident));
        }
        if blocks.len() >= 2 {
            Some(blocks)
        } else {
            None
        }
    }

    /// DOT export: star elements as labeled nodes, one line per edge.
    pub fn to_dot(&self) -> String {
        let mut s = format!("graph wh_v{} {{\n", self.at.0);
        for v in &self.vertices {
            s.push_str(&format!("  e{};\n", v.0));
        }
        for e in &self.edges {
            s.push_str(&format!(
                "  e{} -- e{} [label=\"p{}\"];\n",
                e.endpoints[0].0, e.endpoints[1].0, e.id.0
            ));
        }
        s.push_str("}\n");
        s
    }
}

/// Verdict of the reducibility trichotomy for one Whitehead graph, with a
/// re-checkable witness.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum WhClassification {
    Irreducible,
    Disconnected { components: Vec<Vec<EdgeId>> },
    HasLeaf { vertex: EdgeId },
    /// A cut vertex together with a two-sided wedge decomposition: the
    /// incident Whitehead edges split into the side of the lowest block and
    /// the rest.
    HasCutVertex {
        cut: EdgeId,
        side1: BTreeSet<VertexId>,
        side2: BTreeSet<VertexId>,
    },
}

/// Classifies a Whitehead graph: disconnected (isolated vertices count),
/// else leaf, else cut vertex with a wedge decomposition, else irreducible.
pub fn classify(wh: &WhGraph) -> WhClassification {
    let comps = wh.components();
    if comps.len() != 1 || wh.vertices.iter().any(|&v| wh.valence(v) == 0) {
        return WhClassification::Disconnected {
            components: comps.into_iter().map(|c| c.into_iter().collect()).collect(),
        };
    }
    for &v in &wh.vertices {
        if wh.valence(v) == 1 {
            return WhClassification::HasLeaf { vertex: v };
        }
    }
    for &v in &wh.vertices {
        if let Some(blocks) = wh.cut_blocks(v) {
            let side1 = blocks[0].1.clone();
            let side2: BTreeSet<VertexId> = blocks[1..]
                .iter()
                .flat_map(|(_, inc)| inc.iter().copied())
                .collect();
            return WhClassification::HasCutVertex { cut: v, side1, side2 };
        }
    }
    WhClassification::Irreducible
}

/// Wedge of two vertex-disjoint graphs: identifies `v2` of `w2` with `v1`
/// of `w1` and takes the union.
pub fn wedge(w1: &WhGraph, v1: EdgeId, w2: &WhGraph, v2: EdgeId) -> WhGraph {
    assert!(w1.vertices.contains(&v1) && w2.vertices.contains(&v2));
    let rename = |s: EdgeId| if s == v2 { v1 } else { s };
    let mut vertices: BTreeSet<EdgeId> = w1.vertices.iter().copied().collect();
    vertices.extend(w2.vertices.iter().map(|&s| rename(s)));
    let mut edges = w1.edges.clone();
    edges.extend(w2.edges.iter().map(|e| WhEdge {
        id: e.id,
        endpoints: [rename(e.endpoints[0]), rename(e.endpoints[1])],
    }));
    edges.sort_by_key(|e| e.id);
    WhGraph { at: w1.at, vertices: vertices.into_iter().collect(), edges }
}

/// Wedge within a single graph: identifies `v2` with `v1`.
pub fn wedge_within(w: &WhGraph, v1: EdgeId, v2: EdgeId) -> WhGraph {
    assert_ne!(v1, v2);
    let rename = |s: EdgeId| if s == v2 { v1 } else { s };
    let vertices: BTreeSet<EdgeId> = w.vertices.iter().map(|&s| rename(s)).collect();
    let edges = w
        .edges
        .iter()
        .map(|e| WhEdge { id: e.id, endpoints: [rename(e.endpoints[0]), rename(e.endpoints[1])] })
        .collect();
    WhGraph { at: w.at, vertices: vertices.into_iter().collect(), edges }
}

/// Reverse of [`wedge`]: splits `v` into two vertices, sending the incident
/// Whitehead edges listed in `side1` to the first copy and the rest to the
/// second. Returns the two subgraphs spanned by the sides.
pub fn unwedge(
    w: &WhGraph,
    v: EdgeId,
    side1: &BTreeSet<VertexId>,
) -> Result<(WhGraph, WhGraph)> {
    if !w.vertices.contains(&v) {
        return Err(Error::invalid("unwedge vertex is not in the graph"));
    }
    let incident: BTreeSet<VertexId> = w.edges_at(v).into_iter().collect();
    if !side1.is_subset(&incident) {
        return Err(Error::invalid("side lists a non-incident edge"));
    }
    let mut verts1: BTreeSet<EdgeId> = BTreeSet::new();
    let mut verts2: BTreeSet<EdgeId> = BTreeSet::new();
    let mut edges1 = Vec::new();
    let mut edges2 = Vec::new();
    // Edges incident at v go by their listed side; other edges follow the
    // side of their endpoints, determined by reachability without v.
    let comps = components_without(w, v);
    let mut comp_side: BTreeMap<usize, u8> = BTreeMap::new();
    for e in &w.edges {
        if e.endpoints.contains(&v) {
            let other = if e.endpoints[0] == v { e.endpoints[1] } else { e.endpoints[0] };
            let ci = comps.iter().position(|c| c.contains(&other)).expect("endpoint out of graph");
            let side = if side1.contains(&e.id) { 1 } else { 2 };
            match comp_side.get(&ci) {
                Some(&s) if s != side => {
                    return Err(Error::invalid(
                        "wedge sides split a block of the cut decomposition",
                    ))
                }
                _ => {
                    comp_side.insert(ci, side);
                }
            }
        }
    }
    for e in &w.edges {
        let home = if e.endpoints.contains(&v) {
            if side1.contains(&e.id) {
                1
            } else {
                2
            }
        } else {
            let ci = comps
                .iter()
                .position(|c| c.contains(&e.endpoints[0]))
                .expect("endpoint out of graph");
            *comp_side.get(&ci).unwrap_or(&2)
        };
        if home == 1 {
            edges1.push(e.clone());
            verts1.extend(e.endpoints.iter().copied());
        } else {
            edges2.push(e.clone());
            verts2.extend(e.endpoints.iter().copied());
        }
    }
    verts1.insert(v);
    verts2.insert(v);
    // Vertices untouched by any edge ride with side 2.
    for &s in &w.vertices {
        if s != v && !verts1.contains(&s) {
            verts2.insert(s);
        }
    }
    Ok((
        WhGraph { at: w.at, vertices: verts1.into_iter().collect(), edges: edges1 },
        WhGraph { at: w.at, vertices: verts2.into_iter().collect(), edges: edges2 },
    ))
}

fn components_without(w: &WhGraph, v: EdgeId) -> Vec<BTreeSet<EdgeId>> {
    let rest: Vec<EdgeId> = w.vertices.iter().copied().filter(|&s| s != v).collect();
    let mut adj: BTreeMap<EdgeId, Vec<EdgeId>> = rest.iter().map(|&s| (s, Vec::new())).collect();
    for e in &w.edges {
        let [a, b] = e.endpoints;
        if a != v && b != v {
            adj.get_mut(&a).expect("vertex").push(b);
            adj.get_mut(&b).expect("vertex").push(a);
        }
    }
    let mut seen = BTreeSet::new();
    let mut comps = Vec::new();
    for &start in &rest {
        if seen.contains(&start) {
            continue;
        }
        let mut comp = BTreeSet::new();
        let mut stack = vec![start];
        while let Some(s) = stack.pop() {
            if !comp.insert(s) {
                continue;
            }
            stack.extend(adj[&s].iter().copied().filter(|t| !comp.contains(t)));
        }
        seen.extend(comp.iter().copied());
        comps.push(comp);
    }
    comps
}

/// Builds the full Whitehead system of a pair.
pub fn whitehead_system(p: &GraphPair) -> WhiteheadSystem {
    let mut graphs = BTreeMap::new();
    for x in p.base.vertices() {
        let vertices = p.base.star(x);
        let mut edges = Vec::new();
        for q in p.circle_vertices_over(x) {
            let star = p.cycles.circles.star(q);
            debug_assert_eq!(star.len(), 2);
            edges.push(WhEdge {
                id: q,
                endpoints: [p.cycles.map.emap[&star[0]], p.cycles.map.emap[&star[1]]],
            });
        }
        edges.sort_by_key(|e| e.id);
        graphs.insert(x, WhGraph { at: x, vertices, edges });
    }
    // End of the whitehead edge at circle vertex q realized by circle edge c.
    let end_of = |c: EdgeId| -> End {
        let q = p.cycles.circles.origin(c);
        let star = p.cycles.circles.star(q);
        let slot = star.iter().position(|&d| d == c).expect("edge in star") as u8;
        End { edge: q, slot }
    };
    let mut crossings = BTreeMap::new();
    for e in p.base.edges() {
        let mut pairs = Vec::new();
        for c in p.cycles.circles.edges() {
            if p.cycles.map.emap[&c] == e {
                pairs.push((end_of(c), end_of(p.cycles.circles.reverse(c))));
            }
        }
        pairs.sort();
        crossings.insert(e, Crossing { reverse: p.base.reverse(e), pairs });
    }
    WhiteheadSystem { graphs, crossings }
}

impl WhiteheadSystem {
    pub fn total_edge_count(&self) -> usize {
        self.graphs.values().map(|g| g.edges.len()).sum()
    }

    /// The Whitehead graph owning a given star element.
    pub fn graph_of_star_element(&self, s: EdgeId) -> Option<&WhGraph> {
        self.graphs.values().find(|g| g.vertices.contains(&s))
    }

    pub fn crossing_map(&self, e: EdgeId) -> BTreeMap<End, End> {
        self.crossings[&e].pairs.iter().copied().collect()
    }

    /// Validates internal consistency; required before reconstruction.
    pub fn check(&self) -> Result<()> {
        let mut star_owner: BTreeMap<EdgeId, VertexId> = BTreeMap::new();
        let mut edge_owner: BTreeMap<VertexId, VertexId> = BTreeMap::new();
        for (&x, wh) in &self.graphs {
            if wh.at != x {
                return Err(Error::invalid("whitehead graph keyed by a different vertex"));
            }
            for &s in &wh.vertices {
                if star_owner.insert(s, x).is_some() {
                    return Err(Error::invalid(format!(
                        "star element {s} appears at two base vertices"
                    )));
                }
            }
            for e in &wh.edges {
                if edge_owner.insert(e.id, x).is_some() {
                    return Err(Error::invalid(format!(
                        "whitehead edge {} appears twice",
                        e.id
                    )));
                }
                if e.endpoints[0] == e.endpoints[1] {
                    return Err(Error::invalid(format!(
                        "whitehead edge {} has equal endpoints",
                        e.id
                    )));
                }
                for s in e.endpoints {
                    if !wh.vertices.contains(&s) {
                        return Err(Error::invalid(format!(
                            "endpoint {s} of whitehead edge {} is not a star element here",
                            e.id
                        )));
                    }
                }
            }
        }
        for (&e, crossing) in &self.crossings {
            let re = crossing.reverse;
            if re == e {
                return Err(Error::invalid(format!("edge {e} is its own reverse")));
            }
            let back = self
                .crossings
                .get(&re)
                .ok_or_else(|| Error::invalid(format!("missing crossing for edge {re}")))?;
            if back.reverse != e {
                return Err(Error::invalid(format!(
                    "reverse of reverse of edge {e} is not {e}"
                )));
            }
            if !star_owner.contains_key(&e) {
                return Err(Error::invalid(format!(
                    "crossing for {e} but {e} is not a star element"
                )));
            }
            // The pairs must biject the ends at e with the ends at re, and
            // be inverse to the pairs at re.
            let ends_at = |s: EdgeId| -> BTreeSet<End> {
                let x = star_owner[&s];
                let wh = &self.graphs[&x];
                let mut out = BTreeSet::new();
                for edge in &wh.edges {
                    for (k, &t) in edge.endpoints.iter().enumerate() {
                        if t == s && !out.insert(End { edge: edge.id, slot: k as u8 }) {
                            // Both endpoints equal s is excluded above.
                        }
                    }
                }
                out
            };
            let lhs: BTreeSet<End> = crossing.pairs.iter().map(|&(a, _)| a).collect();
            let rhs: BTreeSet<End> = crossing.pairs.iter().map(|&(_, b)| b).collect();
            if lhs.len() != crossing.pairs.len() || rhs.len() != crossing.pairs.len() {
                return Err(Error::invalid(format!("crossing at {e} is not a bijection")));
            }
            if lhs != ends_at(e) {
                return Err(Error::invalid(format!(
                    "crossing at {e} does not cover the ends at {e}"
                )));
            }
            if rhs != ends_at(re) {
                return Err(Error::invalid(format!(
                    "crossing at {e} does not hit the ends at {re}"
                )));
            }
            let inverse: BTreeSet<(End, End)> =
                back.pairs.iter().map(|&(a, b)| (b, a)).collect();
            let forward: BTreeSet<(End, End)> = crossing.pairs.iter().copied().collect();
            if inverse != forward {
                return Err(Error::invalid(format!(
                    "crossing at {re} is not inverse to the crossing at {e}"
                )));
            }
        }
        for &s in star_owner.keys() {
            if !self.crossings.contains_key(&s) {
                return Err(Error::invalid(format!("star element {s} has no crossing")));
            }
        }
        Ok(())
    }
}

/// Rebuilds a pair from abstract Whitehead data: base vertices are the
/// grouping cells, base edges the star elements, circle vertices the
/// Whitehead edges and circle edges the crossings. Inconsistent data is
/// rejected.
pub fn reconstruct_pair(ws: &WhiteheadSystem) -> Result<GraphPair> {
    ws.check()?;
    let mut base = Graph::new();
    for &x in ws.graphs.keys() {
        base.add_vertex(x);
    }
    let mut seen = BTreeSet::new();
    for (&x, wh) in &ws.graphs {
        for &s in &wh.vertices {
            if seen.contains(&s) {
                continue;
            }
            let re = ws.crossings[&s].reverse;
            let home_re = ws
                .graphs
                .iter()
                .find(|(_, g)| g.vertices.contains(&re))
                .map(|(&v, _)| v)
                .ok_or_else(|| Error::invalid(format!("reverse {re} has no home vertex")))?;
            base.add_edge_pair(s, re, x, home_re);
            seen.insert(s);
            seen.insert(re);
        }
    }
    if let Some(v) = base.vertices().find(|&v| base.valence(v) == 1) {
        return Err(Error::invalid(format!(
            "reconstruction would give base vertex {v} valence one"
        )));
    }

    // Circle edge ids: ends in (whitehead edge, slot) order.
    let mut wh_edges: Vec<(VertexId, VertexId)> = Vec::new(); // (circle vertex, base vertex)
    for (&x, wh) in &ws.graphs {
        for e in &wh.edges {
            wh_edges.push((e.id, x));
        }
    }
    wh_edges.sort();
    let rank: BTreeMap<VertexId, u32> = wh_edges
        .iter()
        .enumerate()
        .map(|(i, &(p, _))| (p, i as u32))
        .collect();
    let end_edge_id = |end: End| EdgeId(2 * rank[&end.edge] + end.slot as u32);

    let mut circles = Graph::new();
    let mut map = GraphMap::default();
    for &(p, x) in &wh_edges {
        circles.add_vertex(p);
        map.vmap.insert(p, x);
    }
    for (&x, wh) in &ws.graphs {
        let _ = x;
        for e in &wh.edges {
            for (k, &s) in e.endpoints.iter().enumerate() {
                let this = End { edge: e.id, slot: k as u8 };
                let partner = *ws
                    .crossing_map(s)
                    .get(&this)
                    .ok_or_else(|| Error::invalid("end missing from crossing"))?;
                let c = end_edge_id(this);
                let rc = end_edge_id(partner);
                if c == rc {
                    return Err(Error::invalid("crossing maps an end to itself"));
                }
                circles.add_edge_pair(c, rc, this.edge, partner.edge);
                map.emap.insert(c, s);
            }
        }
    }
    let pair = GraphPair { base, cycles: Multicycle { circles, map } };
    let violations = pair.validate();
    if !violations.is_empty() {
        return Err(Error::invalid(format!(
            "reconstructed pair is invalid: {}",
            violations[0]
        )));
    }
    Ok(pair)
}

/// Wedge-side data for an unfold: the Whitehead edges incident at the cut
/// vertex, split two ways.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct WedgeSides {
    pub side1: BTreeSet<VertexId>,
    pub side2: BTreeSet<VertexId>,
}

/// Unfolds the pair at base vertex `y`: the star element `cut` must define
/// a cut of its Whitehead component, and `sides` must be a two-sided wedge
/// decomposition of its incident Whitehead edges. Returns the unfolded pair
/// and the fold morphism back onto the input. Components of the Whitehead
/// graph not meeting the cut ride on side 2.
pub fn unfold_at(
    p: &GraphPair,
    y: VertexId,
    cut: EdgeId,
    sides: &WedgeSides,
) -> Result<(GraphPair, PairMorphism)> {
    if !p.base.has_vertex(y) || !p.base.has_edge(cut) || p.base.origin(cut) != y {
        return Err(Error::invalid("cut must be a star element of y"));
    }
    if sides.side1.is_empty() || sides.side2.is_empty() {
        return Err(Error::invalid("wedge sides must both be nonempty"));
    }
    if !sides.side1.is_disjoint(&sides.side2) {
        return Err(Error::invalid("wedge sides must be disjoint"));
    }
    let ws = whitehead_system(p);
    let wh = &ws.graphs[&y];
    let incident: BTreeSet<VertexId> = wh.edges_at(cut).into_iter().collect();
    let listed: BTreeSet<VertexId> =
        sides.side1.union(&sides.side2).copied().collect();
    if listed != incident {
        return Err(Error::invalid(
            "wedge sides must partition the edges incident at the cut vertex",
        ));
    }

    // Side of each component of Wh_y - cut: constant over the incident
    // edges into it, defaulting to side 2 when none.
    let comps = components_without(wh, cut);
    let mut comp_side: Vec<u8> = vec![2; comps.len()];
    let mut comp_decided: Vec<bool> = vec![false; comps.len()];
    for e in &wh.edges {
        let [a, b] = e.endpoints;
        let other = if a == cut {
            b
        } else if b == cut {
            a
        } else {
            continue;
        };
        let ci = comps
            .iter()
            .position(|c| c.contains(&other))
            .expect("endpoint in some component");
        let side = if sides.side1.contains(&e.id) { 1 } else { 2 };
        if comp_decided[ci] && comp_side[ci] != side {
            return Err(Error::invalid(
                "wedge sides split a block of the cut decomposition",
            ));
        }
        comp_side[ci] = side;
        comp_decided[ci] = true;
    }

    let star_side = |s: EdgeId| -> u8 {
        comps
            .iter()
            .position(|c| c.contains(&s))
            .map(|ci| comp_side[ci])
            .unwrap_or(2)
    };
    // Side of a circle vertex over y.
    let wh_edge_side: BTreeMap<VertexId, u8> = wh
        .edges
        .iter()
        .map(|e| {
            let side = if incident.contains(&e.id) {
                if sides.side1.contains(&e.id) {
                    1
                } else {
                    2
                }
            } else {
                star_side(e.endpoints[0])
            };
            (e.id, side)
        })
        .collect();

    let rev_cut = p.base.reverse(cut); // the edge e' with terminus y
    let x0 = p.base.origin(rev_cut);
    let y2 = p.base.fresh_vertex_id();
    let f = p.base.fresh_edge_id();
    let rf = EdgeId(f.0 + 1);

    let loop_case = x0 == y;
    let origin_of_new = if loop_case {
        match star_side(rev_cut) {
            1 => y,
            _ => y2,
        }
    } else {
        x0
    };

    let mut new_base = Graph::new();
    for v in p.base.vertices() {
        new_base.add_vertex(v);
    }
    new_base.add_vertex(y2);
    for e in p.base.edge_orbits() {
        let re = p.base.reverse(e);
        if e == cut || e == rev_cut {
            continue;
        }
        let adjust = |g: EdgeId| -> VertexId {
            let o = p.base.origin(g);
            if o == y {
                match star_side(g) {
                    1 => y,
                    _ => y2,
                }
            } else {
                o
            }
        };
        new_base.add_edge_pair(e, re, adjust(e), adjust(re));
    }
    // Side-1 copy keeps the old ids; side-2 copy is fresh.
    new_base.add_edge_pair(rev_cut, cut, origin_of_new, y);
    new_base.add_edge_pair(f, rf, origin_of_new, y2);

    let mut vmap = BTreeMap::new();
    for q in p.cycles.circles.vertices() {
        let img = p.cycles.map.vmap[&q];
        let new_img = if img == y {
            match wh_edge_side[&q] {
                1 => y,
                _ => y2,
            }
        } else {
            img
        };
        vmap.insert(q, new_img);
    }
    let mut emap = BTreeMap::new();
    for c in p.cycles.circles.edges() {
        let img = p.cycles.map.emap[&c];
        let new_img = if img == cut {
            match wh_edge_side[&p.cycles.circles.origin(c)] {
                1 => cut,
                _ => rf,
            }
        } else if img == rev_cut {
            match wh_edge_side[&p.cycles.circles.terminus(c)] {
                1 => rev_cut,
                _ => f,
            }
        } else {
            img
        };
        emap.insert(c, new_img);
    }

    let unfolded = GraphPair {
        base: new_base,
        cycles: Multicycle { circles: p.cycles.circles.clone(), map: GraphMap { vmap, emap } },
    };
    let violations = unfolded.validate();
    if !violations.is_empty() {
        return Err(Error::internal(format!(
            "unfolded pair is invalid: {}",
            violations[0]
        )));
    }

    let mut base_fold = GraphMap::identity(&unfolded.base);
    base_fold.vmap.insert(y2, y);
    base_fold.emap.insert(f, rev_cut);
    base_fold.emap.insert(rf, cut);
    let morphism = PairMorphism {
        source: unfolded.clone(),
        target: p.clone(),
        base: base_fold,
        cycle: GraphMap::identity(&p.cycles.circles),
    };
    debug_assert!(morphism.check().is_ok());
    Ok((unfolded, morphism))
}

/// Witness that a pair is reducible: an encountered Whitehead graph that is
/// disconnected or has a leaf, possibly after some unfolding.
#[derive(Clone, Debug)]
pub struct ReducibleWitness {
    pub pair: GraphPair,
    pub vertex: VertexId,
    pub classification: WhClassification,
    pub after_steps: usize,
}

/// Result of driving a pair to a locally irreducible unfolding.
#[derive(Clone, Debug)]
pub enum UnfoldOutcome {
    LocallyIrreducible {
        pair: GraphPair,
        to_original: PairMorphism,
        steps: usize,
    },
    Reducible(ReducibleWitness),
}

/// Unfolds cut vertices until every Whitehead graph is irreducible, or a
/// disconnected or leafed Whitehead graph certifies reducibility. Scheduling
/// is deterministic: the lowest base vertex with a cut vertex goes first,
/// splitting off the lowest block. The number of unfold steps is bounded by
/// the total Whitehead edge count.
pub fn unfold_to_locally_irreducible(p: &GraphPair) -> Result<UnfoldOutcome> {
    let mut current = p.clone();
    let mut to_original = PairMorphism::identity(p);
    let mut steps = 0usize;
    let bound = 2 * current.cycles.total_length() + 2;
    loop {
        let ws = whitehead_system(&current);
        let mut cut_move: Option<(VertexId, EdgeId, WedgeSides)> = None;
        for (&x, wh) in &ws.graphs {
            match classify(wh) {
                WhClassification::Irreducible => continue,
                c @ (WhClassification::Disconnected { .. } | WhClassification::HasLeaf { .. }) => {
                    return Ok(UnfoldOutcome::Reducible(ReducibleWitness {
                        pair: current,
                        vertex: x,
                        classification: c,
                        after_steps: steps,
                    }));
                }
                WhClassification::HasCutVertex { cut, side1, side2 } => {
                    if cut_move.is_none() {
                        cut_move = Some((x, cut, WedgeSides { side1, side2 }));
                    }
                }
            }
        }
        let Some((y, cut, sides)) = cut_move else {
            return Ok(UnfoldOutcome::LocallyIrreducible { pair: current, to_original, steps });
        };
        let (unfolded, m) = unfold_at(&current, y, cut, &sides)?;
        to_original = PairMorphism::compose(&m, &to_original)?;
        current = unfolded;
        steps += 1;
        if steps > bound {
            return Err(Error::internal("unfolding exceeded its termination bound"));
        }
    }
}

/// Unfolds cut vertices of Whitehead components (the graphs may stay
/// disconnected) until none remain, then reports whether every component of
/// every Whitehead graph has at least two edges. This is the local test for
/// the absence of forced cyclic free factors.
pub fn components_survive_unfolding(p: &GraphPair) -> Result<bool> {
    let mut current = p.clone();
    let mut steps = 0usize;
    let bound = 2 * current.cycles.total_length() + 2;
    loop {
        let ws = whitehead_system(&current);
        let mut cut_move: Option<(VertexId, EdgeId, WedgeSides)> = None;
        'outer: for (&x, wh) in &ws.graphs {
            for &v in &wh.vertices {
                if let Some(blocks) = wh.cut_blocks(v) {
                    let side1 = blocks[0].1.clone();
                    let side2: BTreeSet<VertexId> = blocks[1..]
                        .iter()
                        .flat_map(|(_, inc)| inc.iter().copied())
                        .collect();
                    cut_move = Some((x, v, WedgeSides { side1, side2 }));
                    break 'outer;
                }
            }
        }
        match cut_move {
            Some((y, cut, sides)) => {
                let (unfolded, _) = unfold_at(&current, y, cut, &sides)?;
                current = unfolded;
                steps += 1;
                if steps > bound {
                    return Err(Error::internal("unfolding exceeded its termination bound"));
                }
            }
            None => {
                let ws = whitehead_system(&current);
                for wh in ws.graphs.values() {
                    for comp in wh.components() {
                        let edges_in = wh
                            .edges
                            .iter()
                            .filter(|e| comp.contains(&e.endpoints[0]))
                            .count();
                        if edges_in < 2 {
                            return Ok(false);
                        }
                    }
                }
                return Ok(true);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pair::{pair_fold, pair_isomorphic, parse_words};

    #[test]
    fn whitehead_of_aa() {
        let p = parse_words(1, &["aa"]).unwrap();
        let ws = whitehead_system(&p);
        let wh = &ws.graphs[&VertexId(0)];
        assert_eq!(wh.vertices, vec![EdgeId(0), EdgeId(1)]);
        assert_eq!(wh.edges.len(), 2);
        for e in &wh.edges {
            let mut ends = e.endpoints.to_vec();
            ends.sort();
            assert_eq!(ends, vec![EdgeId(0), EdgeId(1)]);
        }
        assert_eq!(classify(wh), WhClassification::Irreducible);
    }

    #[test]
    fn whitehead_of_single_a_has_leaf() {
        let p = parse_words(1, &["a"]).unwrap();
        let ws = whitehead_system(&p);
        let wh = &ws.graphs[&VertexId(0)];
        assert_eq!(wh.edges.len(), 1);
        assert!(matches!(classify(wh), WhClassification::HasLeaf { .. }));
    }

    #[test]
    fn whitehead_of_baumslag_solitar_word() {
        let p = parse_words(2, &["BabAA"]).unwrap();
        let ws = whitehead_system(&p);
        let wh = &ws.graphs[&VertexId(0)];
        assert_eq!(wh.vertices.len(), 4);
        assert_eq!(wh.edges.len(), 5);
        assert_eq!(wh.components().len(), 1);
        assert!(wh.vertices.iter().all(|&v| wh.valence(v) >= 2));
        assert_eq!(classify(wh), WhClassification::Irreducible);
    }

    #[test]
    fn total_whitehead_edges_equal_total_length() {
        for words in [vec!["abAB"], vec!["aab", "bba"], vec!["BabAA", "ab"]] {
            let p = parse_words(2, &words).unwrap();
            let ws = whitehead_system(&p);
            assert_eq!(ws.total_edge_count(), p.cycles.total_length());
        }
    }

    #[test]
    fn classify_trichotomy_samples() {
        // 4-cycle: irreducible.
        let p = parse_words(2, &["abAB"]).unwrap();
        let ws = whitehead_system(&p);
        assert_eq!(classify(&ws.graphs[&VertexId(0)]), WhClassification::Irreducible);

        // Two triangles sharing a vertex: built directly.
        let shared = WhGraph {
            at: VertexId(0),
            vertices: vec![
                EdgeId(0),
                EdgeId(1),
                EdgeId(2),
                EdgeId(3),
                EdgeId(4),
            ],
            edges: vec![
                WhEdge { id: VertexId(0), endpoints: [EdgeId(0), EdgeId(1)] },
                WhEdge { id: VertexId(1), endpoints: [EdgeId(1), EdgeId(2)] },
                WhEdge { id: VertexId(2), endpoints: [EdgeId(2), EdgeId(0)] },
                WhEdge { id: VertexId(3), endpoints: [EdgeId(2), EdgeId(3)] },
                WhEdge { id: VertexId(4), endpoints: [EdgeId(3), EdgeId(4)] },
                WhEdge { id: VertexId(5), endpoints: [EdgeId(4), EdgeId(2)] },
            ],
        };
        match classify(&shared) {
            WhClassification::HasCutVertex { cut, side1, side2 } => {
                assert_eq!(cut, EdgeId(2));
                assert!(!side1.is_empty() && !side2.is_empty());
            }
            other => panic!("expected cut vertex, got {other:?}"),
        }

        // Single edge: leaf.
        let single = WhGraph {
            at: VertexId(0),
            vertices: vec![EdgeId(0), EdgeId(1)],
            edges: vec![WhEdge { id: VertexId(0), endpoints: [EdgeId(0), EdgeId(1)] }],
        };
        assert!(matches!(classify(&single), WhClassification::HasLeaf { .. }));

        // Edgeless on two vertices: disconnected.
        let edgeless = WhGraph {
            at: VertexId(0),
            vertices: vec![EdgeId(0), EdgeId(1)],
            edges: vec![],
        };
        assert!(matches!(classify(&edgeless), WhClassification::Disconnected { .. }));
    }

    #[test]
    fn wedge_and_unwedge_round_trip() {
        let a = WhGraph {
            at: VertexId(0),
            vertices: vec![EdgeId(0), EdgeId(1)],
            edges: vec![WhEdge { id: VertexId(0), endpoints: [EdgeId(0), EdgeId(1)] }],
        };
        let b = WhGraph {
            at: VertexId(0),
            vertices: vec![EdgeId(2), EdgeId(3)],
            edges: vec![WhEdge { id: VertexId(1), endpoints: [EdgeId(2), EdgeId(3)] }],
        };
        let w = wedge(&a, EdgeId(1), &b, EdgeId(2));
        assert_eq!(w.vertices.len(), 3);
        assert_eq!(w.edges.len(), 2);
        // Path of length 2: both endpoints are leaves.
        assert!(matches!(classify(&w), WhClassification::HasLeaf { .. }));

        let side1: BTreeSet<VertexId> = [VertexId(0)].into_iter().collect();
        let (w1, w2) = unwedge(&w, EdgeId(1), &side1).unwrap();
        assert_eq!(w1.edges.len(), 1);
        assert_eq!(w2.edges.len(), 1);
        assert_eq!(w1.edges[0].id, VertexId(0));
        assert_eq!(w2.edges[0].id, VertexId(1));
    }

    #[test]
    fn reconstruct_round_trips() {
        for words in [vec!["aa"], vec!["abAB"], vec!["BabAA"], vec!["aab", "b"]] {
            let p = parse_words(2, &words).unwrap();
            let ws = whitehead_system(&p);
            let q = reconstruct_pair(&ws).unwrap();
            assert!(pair_isomorphic(&p, &q), "round trip failed for {words:?}");
        }
    }

    #[test]
    fn reconstruct_rejects_broken_crossings() {
        let p = parse_words(1, &["aa"]).unwrap();
        let mut ws = whitehead_system(&p);
        // Swap the two targets of the crossing at edge 0: no longer inverse
        // to the crossing at edge 1.
        let c = ws.crossings.get_mut(&EdgeId(0)).unwrap();
        assert_eq!(c.pairs.len(), 2);
        let (a0, b0) = c.pairs[0];
        let (a1, b1) = c.pairs[1];
        c.pairs = vec![(a0, b1), (a1, b0)];
        assert!(reconstruct_pair(&ws).is_err());
    }

    #[test]
    fn unfold_rejects_one_sided_partition() {
        let p = parse_words(2, &["BabAA"]).unwrap();
        let ws = whitehead_system(&p);
        let wh = &ws.graphs[&VertexId(0)];
        let all: BTreeSet<VertexId> = wh.edges_at(EdgeId(1)).into_iter().collect();
        let sides = WedgeSides { side1: all, side2: BTreeSet::new() };
        assert!(unfold_at(&p, VertexId(0), EdgeId(1), &sides).is_err());
    }

    /// Base: loop `a` at x, loop `b` at y, bridge `c` from x to y. One
    /// circle spelling `a c b c̅ a̅ c b̅ c̅`, the boundary of a neighborhood
    /// of the graph in a once-punctured torus picture with two vertices.
    pub fn dumbbell_pair() -> GraphPair {
        let mut base = Graph::new();
        base.add_vertex(VertexId(0));
        base.add_vertex(VertexId(1));
        base.add_edge_pair(EdgeId(0), EdgeId(1), VertexId(0), VertexId(0)); // a
        base.add_edge_pair(EdgeId(2), EdgeId(3), VertexId(1), VertexId(1)); // b
        base.add_edge_pair(EdgeId(4), EdgeId(5), VertexId(0), VertexId(1)); // c
        let letters = [0u32, 4, 2, 5, 1, 4, 3, 5];
        let homes = [0u32, 0, 1, 1, 0, 0, 1, 1];
        let mut circles = Graph::new();
        let mut map = GraphMap::default();
        for i in 0..8u32 {
            circles.add_vertex(VertexId(i));
            map.vmap.insert(VertexId(i), VertexId(homes[i as usize]));
        }
        for i in 0..8u32 {
            let fwd = EdgeId(2 * i);
            let bwd = EdgeId(2 * i + 1);
            circles.add_edge_pair(fwd, bwd, VertexId(i), VertexId((i + 1) % 8));
            let img = EdgeId(letters[i as usize]);
            map.emap.insert(fwd, img);
            map.emap.insert(bwd, base.reverse(img));
        }
        let p = GraphPair { base, cycles: Multicycle { circles, map } };
        assert!(p.validate().is_empty());
        p
    }

    #[test]
    fn dumbbell_has_a_cut_vertex_at_the_bridge() {
        let p = dumbbell_pair();
        let ws = whitehead_system(&p);
        match classify(&ws.graphs[&VertexId(0)]) {
            WhClassification::HasCutVertex { cut, .. } => assert_eq!(cut, EdgeId(4)),
            other => panic!("expected cut vertex, got {other:?}"),
        }
    }

    #[test]
    fn unfold_then_fold_is_the_identity() {
        let p = dumbbell_pair();
        let ws = whitehead_system(&p);
        let WhClassification::HasCutVertex { cut, side1, side2 } =
            classify(&ws.graphs[&VertexId(0)])
        else {
            panic!("expected cut vertex");
        };
        let (unfolded, m) = unfold_at(&p, VertexId(0), cut, &WedgeSides { side1, side2 }).unwrap();
        assert!(m.check().is_ok());
        assert_eq!(
            unfolded.base.euler_characteristic(),
            p.base.euler_characteristic()
        );
        assert_eq!(unfolded.base.component_count(), p.base.component_count());
        // The two edges the morphism merges.
        let kept = p.base.reverse(cut);
        let fresh = unfolded
            .base
            .edges()
            .find(|&e| e != kept && m.base.emap[&e] == kept)
            .expect("fresh unfold edge");
        let (refolded, m2) = pair_fold(&unfolded, kept, fresh).unwrap().unwrap();
        assert!(m2.check().is_ok());
        assert_eq!(refolded, p);
        assert!(pair_isomorphic(&refolded, &p));
    }

    #[test]
    fn fold_then_unfold_is_identity_up_to_isomorphism() {
        // Start from the unfolded three-vertex form of the dumbbell pair,
        // fold two bridge edges, and unfold again with the fold's own data.
        let p = dumbbell_pair();
        let ws = whitehead_system(&p);
        let WhClassification::HasCutVertex { cut, side1, side2 } =
            classify(&ws.graphs[&VertexId(0)])
        else {
            panic!("expected cut vertex");
        };
        let (tri, m0) = unfold_at(&p, VertexId(0), cut, &WedgeSides { side1, side2 }).unwrap();
        // Fold the two bridge reverses at their shared origin y.
        let kept = p.base.reverse(cut);
        let fresh = tri
            .base
            .edges()
            .find(|&e| e != kept && m0.base.emap[&e] == m0.base.emap[&kept])
            .expect("parallel unfold edge");
        let (folded, m) = pair_fold(&tri, kept, fresh).unwrap().unwrap();
        // Record the wedge sides induced by the fold: the circle vertices
        // over the merged terminus, split by which preimage they came from.
        let merged_edge = m.base.emap[&kept];
        let merged_cut = folded.base.reverse(merged_edge);
        let y = folded.base.origin(merged_cut);
        let t1 = tri.base.terminus(kept);
        let mut side1 = BTreeSet::new();
        let mut side2 = BTreeSet::new();
        let ws_f = whitehead_system(&folded);
        for e in &ws_f.graphs[&y].edges {
            if !e.endpoints.contains(&merged_cut) {
                continue;
            }
            // Which side: where the circle vertex lived upstairs.
            if tri.cycles.map.vmap[&e.id] == t1 {
                side1.insert(e.id);
            } else {
                side2.insert(e.id);
            }
        }
        let (unfolded, m2) =
            unfold_at(&folded, y, merged_cut, &WedgeSides { side1, side2 }).unwrap();
        assert!(m2.check().is_ok());
        assert!(pair_isomorphic(&unfolded, &tri));
    }

    #[test]
    fn loop_case_unfold_preserves_euler_characteristic() {
        // aabab has a cut vertex whose unfolding splits the rose vertex with
        // the unfolded edge a loop.
        let p = parse_words(2, &["aabab"]).unwrap();
        let ws = whitehead_system(&p);
        let WhClassification::HasCutVertex { cut, side1, side2 } =
            classify(&ws.graphs[&VertexId(0)])
        else {
            panic!("expected cut vertex");
        };
        assert_eq!(p.base.origin(p.base.reverse(cut)), VertexId(0));
        let (unfolded, m) = unfold_at(&p, VertexId(0), cut, &WedgeSides { side1, side2 }).unwrap();
        assert!(m.check().is_ok());
        assert!(unfolded.validate().is_empty());
        assert_eq!(
            unfolded.base.euler_characteristic(),
            p.base.euler_characteristic()
        );
    }

    #[test]
    fn unfold_to_locally_irreducible_examples() {
        let p = parse_words(2, &["BabAA"]).unwrap();
        match unfold_to_locally_irreducible(&p).unwrap() {
            UnfoldOutcome::LocallyIrreducible { steps, .. } => assert_eq!(steps, 0),
            other => panic!("expected locally irreducible, got {other:?}"),
        }
        let q = parse_words(1, &["a"]).unwrap();
        match unfold_to_locally_irreducible(&q).unwrap() {
            UnfoldOutcome::Reducible(w) => {
                assert!(matches!(w.classification, WhClassification::HasLeaf { .. }));
            }
            other => panic!("expected reducible, got {other:?}"),
        }
    }

    #[test]
    fn once_folded_pair_unfolds_in_one_step() {
        let p = dumbbell_pair();
        match unfold_to_locally_irreducible(&p).unwrap() {
            UnfoldOutcome::LocallyIrreducible { steps, pair, to_original } => {
                assert_eq!(steps, 1);
                assert_eq!(pair.base.vertex_count(), 3);
                assert!(to_original.check().is_ok());
                assert!(
                    whitehead_system(&pair)
                        .graphs
                        .values()
                        .all(|wh| classify(wh) == WhClassification::Irreducible)
                );
            }
            other => panic!("expected locally irreducible, got {other:?}"),
        }
    }

    #[test]
    fn primitive_words_are_reducible() {
        for word in ["ab", "aabab", "abb"] {
            let p = parse_words(2, &[word]).unwrap();
            match unfold_to_locally_irreducible(&p).unwrap() {
                UnfoldOutcome::Reducible(_) => {}
                other => panic!("expected {word} reducible, got {other:?}"),
            }
        }
    }

    #[test]
    fn unfold_step_count_is_bounded_by_edge_count() {
        for words in [vec!["aabab"], vec!["aabb"], vec!["BabAA"], vec!["abAB", "ab"]] {
            let p = parse_words(2, &words).unwrap();
            let bound = p.cycles.total_length();
            match unfold_to_locally_irreducible(&p).unwrap() {
                UnfoldOutcome::LocallyIrreducible { steps, .. } => assert!(steps <= bound),
                UnfoldOutcome::Reducible(w) => assert!(w.after_steps <= bound),
            }
        }
    }

    #[test]
    fn commutator_like_words_survive_component_unfolding() {
        let p = parse_words(2, &["abAB"]).unwrap();
        assert!(components_survive_unfolding(&p).unwrap());
        let q = parse_words(1, &["a"]).unwrap();
        assert!(!components_survive_unfolding(&q).unwrap());
    }
}
