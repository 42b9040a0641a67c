//! Witness reconstruction and certification.
//!
//! Integer points of the cone correspond to two-stage maps into the
//! reference pair: a locally irreducible source pair quotienting onto a
//! middle pair that immerses into the reference, with the circles upstairs
//! mapping bijectively to the middle circles. This module projects such a
//! witness to its counting vector, rebuilds a witness from any integer cone
//! point, verifies witnesses from primitive predicates with no trust in the
//! construction path, and searches the unfoldings of the middle pair for a
//! form in which every Whitehead graph is a disjoint union of cycles.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;

use num::{BigInt, BigRational, One, Signed, Zero};

use crate::error::{Error, Result};
use crate::graph::{check_graph_map, stars_injective, EdgeId, GraphMap, VertexId};
use crate::lp::{integer_point, maximize_rank, optimal_face_vertices, LpResult, LpStatus, Rational};
use crate::pair::{
    admissibility_degree, pair_bucket_key, pair_fold, pair_isomorphic, GraphPair, PairMorphism,
};
use crate::pieces::{
    build_cone, enumerate_pieces, enumerate_pstars, splice_compatible, ChiMode, ConeSystem,
    EnumCaps, Piece, PieceStar,
};
use crate::whitehead::{
    classify, components_survive_unfolding, reconstruct_pair, unfold_at,
    unfold_to_locally_irreducible, whitehead_system, Crossing, End, ReducibleWitness,
    UnfoldOutcome, WedgeSides, WhClassification, WhEdge, WhGraph, WhiteheadSystem,
};

/// A two-stage factorization witness: a quotient of pairs followed by an
/// immersion of pairs, with the circle map of the first stage bijective.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DImmersion {
    pub f1: PairMorphism,
    pub f2: PairMorphism,
}

impl DImmersion {
    pub fn source(&self) -> &GraphPair {
        &self.f1.source
    }

    pub fn mid(&self) -> &GraphPair {
        &self.f1.target
    }

    pub fn reference(&self) -> &GraphPair {
        &self.f2.target
    }

    pub fn composite(&self) -> Result<PairMorphism> {
        PairMorphism::compose(&self.f1, &self.f2)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ViolationKind {
    PairInvalid,
    MorphismIllFormed,
    SquareNotCommuting,
    CycleNotImmersion,
    CycleMapNotBijective,
    BaseNotImmersion,
    TurnsNotInjective,
    SourceNotSurjective,
    NotAdmissible,
    SourceNotLocallyIrreducible,
    ReferenceMismatch,
    VectorMismatch,
    RowViolation,
    FoldReplayFailed,
    NotFat,
    EulerMismatch,
    BoundaryMismatch,
    DegreeMismatch,
    RankMismatch,
}

#[derive(Clone, Debug)]
pub struct Violation {
    pub kind: ViolationKind,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.detail)
    }
}

fn violation(kind: ViolationKind, detail: impl Into<String>) -> Violation {
    Violation { kind, detail: detail.into() }
}

/// Checks every witness invariant against the reference pair, returning all
/// violations found. Structural defects gate the later semantic checks so
/// that broken maps never get dereferenced.
pub fn verify_dimmersion(d: &DImmersion, reference: &GraphPair) -> Vec<Violation> {
    let mut out = Vec::new();
    for v in d.source().validate() {
        out.push(violation(ViolationKind::PairInvalid, format!("source: {v}")));
    }
    for v in d.mid().validate() {
        out.push(violation(ViolationKind::PairInvalid, format!("middle: {v}")));
    }
    for v in reference.validate() {
        out.push(violation(ViolationKind::PairInvalid, format!("reference: {v}")));
    }
    if !out.is_empty() {
        return out;
    }
    if d.f2.target != *reference {
        out.push(violation(
            ViolationKind::ReferenceMismatch,
            "second stage does not target the reference pair",
        ));
        return out;
    }
    if d.f1.target != d.f2.source {
        out.push(violation(
            ViolationKind::MorphismIllFormed,
            "stages do not share the middle pair",
        ));
        return out;
    }
    for (name, dom, cod, map) in [
        ("first stage base", &d.f1.source.base, &d.f1.target.base, &d.f1.base),
        (
            "first stage circles",
            &d.f1.source.cycles.circles,
            &d.f1.target.cycles.circles,
            &d.f1.cycle,
        ),
        ("second stage base", &d.f2.source.base, &d.f2.target.base, &d.f2.base),
        (
            "second stage circles",
            &d.f2.source.cycles.circles,
            &d.f2.target.cycles.circles,
            &d.f2.cycle,
        ),
    ] {
        if let Err(e) = check_graph_map(dom, cod, map) {
            out.push(violation(ViolationKind::MorphismIllFormed, format!("{name}: {e}")));
        }
    }
    if !out.is_empty() {
        return out;
    }
    for (name, m) in [("first stage", &d.f1), ("second stage", &d.f2)] {
        for v in m.source.cycles.circles.vertices() {
            let via_target = m.target.cycles.map.vmap[&m.cycle.vmap[&v]];
            let via_base = m.base.vmap[&m.source.cycles.map.vmap[&v]];
            if via_target != via_base {
                out.push(violation(
                    ViolationKind::SquareNotCommuting,
                    format!("{name} square fails at circle vertex {v}"),
                ));
            }
        }
        for e in m.source.cycles.circles.edges() {
            let via_target = m.target.cycles.map.emap[&m.cycle.emap[&e]];
            let via_base = m.base.emap[&m.source.cycles.map.emap[&e]];
            if via_target != via_base {
                out.push(violation(
                    ViolationKind::SquareNotCommuting,
                    format!("{name} square fails at circle edge {e}"),
                ));
            }
        }
        if !stars_injective(&m.source.cycles.circles, &m.cycle) {
            out.push(violation(
                ViolationKind::CycleNotImmersion,
                format!("{name} circle map is not an immersion"),
            ));
        }
    }
    // The remaining checks are independent of each other and only need the
    // maps to be total, so they all run and accumulate.
    // First stage circles bijective.
    let src_cv = d.source().cycles.circles.vertex_count();
    let mid_cv = d.mid().cycles.circles.vertex_count();
    let image_v: BTreeSet<VertexId> = d.f1.cycle.vmap.values().copied().collect();
    let image_e: BTreeSet<EdgeId> = d.f1.cycle.emap.values().copied().collect();
    if src_cv != mid_cv
        || image_v.len() != mid_cv
        || d.mid().cycles.circles.edge_count() != d.source().cycles.circles.edge_count()
        || image_e.len() != d.mid().cycles.circles.edge_count()
    {
        out.push(violation(
            ViolationKind::CycleMapNotBijective,
            "first stage circle map is not bijective",
        ));
    }
    // First stage base surjective: the middle pair is a quotient of the
    // source, so nothing downstairs may be missed.
    let base_iv: BTreeSet<VertexId> = d.f1.base.vmap.values().copied().collect();
    let base_ie: BTreeSet<EdgeId> = d.f1.base.emap.values().copied().collect();
    if base_iv.len() != d.mid().base.vertex_count() || base_ie.len() != d.mid().base.edge_count() {
        out.push(violation(
            ViolationKind::SourceNotSurjective,
            "first stage base map is not surjective",
        ));
    }
    // Second stage base is an immersion.
    if !stars_injective(&d.mid().base, &d.f2.base) {
        out.push(violation(
            ViolationKind::BaseNotImmersion,
            "second stage base map folds a star",
        ));
    }
    // Second stage injective on turns: distinct middle circle vertices over
    // one middle vertex stay distinct downstairs. With the base immersion
    // this certifies injectivity on universal-cover lifts star-locally.
    for x in d.mid().base.vertices() {
        let mut seen: BTreeSet<VertexId> = BTreeSet::new();
        for p in d.mid().circle_vertices_over(x) {
            if !seen.insert(d.f2.cycle.vmap[&p]) {
                out.push(violation(
                    ViolationKind::TurnsNotInjective,
                    format!("two turns over vertex {x} map to one reference turn"),
                ));
            }
        }
    }
    match d.composite() {
        Ok(comp) => {
            if admissibility_degree(&comp).is_none() {
                out.push(violation(
                    ViolationKind::NotAdmissible,
                    "composite does not cover the reference circles evenly",
                ));
            }
        }
        Err(e) => out.push(violation(ViolationKind::MorphismIllFormed, e.to_string())),
    }
    let ws = whitehead_system(d.source());
    for (x, wh) in &ws.graphs {
        if classify(wh) != WhClassification::Irreducible {
            out.push(violation(
                ViolationKind::SourceNotLocallyIrreducible,
                format!("source Whitehead graph at {x} is reducible"),
            ));
        }
    }
    out
}

/// Degree of the composite map (the number of preimages of every reference
/// circle point).
pub fn witness_degree(d: &DImmersion) -> Result<BigInt> {
    let comp = d.composite()?;
    admissibility_degree(&comp)
        .map(BigInt::from)
        .ok_or_else(|| Error::invalid("witness composite is not admissible"))
}

/// The local test for the absence of forced cyclic factors in the middle
/// pair: after unfolding all component cut vertices, every Whitehead
/// component keeps at least two edges. True for every valid witness.
pub fn is_weakly_irreducible_certificate(d: &DImmersion) -> Result<bool> {
    components_survive_unfolding(d.mid())
}

/// The slot-aligned circle edge ids chosen by [`reconstruct_pair`]: ends in
/// (Whitehead edge, slot) order get edges `2 * rank + slot`.
fn end_edge_table(ws: &WhiteheadSystem) -> BTreeMap<End, EdgeId> {
    let mut ids: Vec<VertexId> = ws
        .graphs
        .values()
        .flat_map(|g| g.edges.iter().map(|e| e.id))
        .collect();
    ids.sort();
    let rank: BTreeMap<VertexId, u32> =
        ids.iter().enumerate().map(|(i, &p)| (p, i as u32)).collect();
    let mut table = BTreeMap::new();
    for g in ws.graphs.values() {
        for e in &g.edges {
            for slot in 0..2u8 {
                table.insert(End { edge: e.id, slot }, EdgeId(2 * rank[&e.id] + slot as u32));
            }
        }
    }
    table
}

/// End of the reference Whitehead system realized by a circle edge: the
/// Whitehead edge is the circle vertex at its origin and the slot is the
/// index of the edge in that vertex's sorted star.
fn reference_end_of(p: &GraphPair, c: EdgeId) -> End {
    let q = p.cycles.circles.origin(c);
    let star = p.cycles.circles.star(q);
    let slot = star.iter().position(|&d| d == c).expect("edge in star") as u8;
    End { edge: q, slot }
}

fn reference_edge_of_end(p: &GraphPair, end: End) -> EdgeId {
    p.cycles.circles.star(end.edge)[end.slot as usize]
}

/// Projects a witness to its counting vector: for every middle vertex, the
/// piece formed by the source Whitehead graphs over it together with the
/// neighbor assignment, located in the enumerated star list.
pub fn project_vector(d: &DImmersion, cone: &ConeSystem) -> Result<Vec<BigInt>> {
    let reference = d.reference();
    let mid = d.mid();
    let source = d.source();

    // Pass 1: the piece at each middle vertex.
    let mut piece_at: BTreeMap<VertexId, usize> = BTreeMap::new();
    for x in mid.base.vertices() {
        let mut edges: BTreeSet<VertexId> = BTreeSet::new();
        for p in mid.circle_vertices_over(x) {
            if !edges.insert(d.f2.cycle.vmap[&p]) {
                return Err(Error::internal("turns over a middle vertex collide"));
            }
        }
        if edges.is_empty() {
            return Err(Error::internal(format!(
                "middle vertex {x} carries no circle vertices"
            )));
        }
        let host = cone
            .components
            .iter()
            .position(|c| edges.is_subset(&c.edges))
            .ok_or_else(|| {
                Error::internal("middle graph does not lie in one Whitehead component")
            })?;
        // Blocks: one per source star element over x, holding the reference
        // ends realized by the source circle edges at it.
        let mut blocks_at: BTreeMap<EdgeId, Vec<BTreeSet<End>>> = BTreeMap::new();
        let preimages: Vec<VertexId> = source
            .base
            .vertices()
            .filter(|v| d.f1.base.vmap[v] == x)
            .collect();
        for x_src in preimages {
            for s in source.base.star(x_src) {
                let t = d.f1.base.emap[&s];
                let e = d.f2.base.emap[&t];
                let mut block = BTreeSet::new();
                for c in source.cycles.circles.edges() {
                    if source.cycles.map.emap[&c] != s {
                        continue;
                    }
                    let c_mid = d.f1.cycle.emap[&c];
                    let c_ref = d.f2.cycle.emap[&c_mid];
                    block.insert(reference_end_of(reference, c_ref));
                }
                if block.len() < 2 {
                    return Err(Error::internal(
                        "source star element traversed fewer than twice",
                    ));
                }
                blocks_at.entry(e).or_default().push(block);
            }
        }
        // Every middle star element must be covered by the projection.
        for t in mid.base.star(x) {
            let e = d.f2.base.emap[&t];
            if !blocks_at.contains_key(&e) {
                return Err(Error::internal(format!(
                    "middle star element {t} has no source preimage"
                )));
            }
        }
        for blocks in blocks_at.values_mut() {
            blocks.sort();
        }
        let piece = Piece { host, edges, parts: blocks_at };
        let pi = cone
            .piece_index(&piece)
            .ok_or_else(|| Error::internal("piece not found in the enumerated list"))?;
        piece_at.insert(x, pi);
    }

    // Pass 2: stars from the neighbor pieces.
    let mut counts = vec![BigInt::zero(); cone.stars.len()];
    for x in mid.base.vertices() {
        let mut assignment: BTreeMap<EdgeId, usize> = BTreeMap::new();
        for t in mid.base.star(x) {
            let e = d.f2.base.emap[&t];
            let y = mid.base.terminus(t);
            assignment.insert(e, piece_at[&y]);
        }
        let star = PieceStar { center: piece_at[&x], assignment };
        let si = cone
            .star_index(&star)
            .ok_or_else(|| Error::internal("star not found in the enumerated list"))?;
        counts[si] += BigInt::one();
    }
    Ok(counts)
}

/// Rebuilds a witness from an integer cone point: one middle vertex per
/// star copy, glued across each splice triple by zipping the sorted
/// instance lists, with the circle structure induced by the crossings. The
/// projection of the result is the input vector.
pub fn reconstruct_dimmersion(
    x: &[BigInt],
    cone: &ConeSystem,
    reference: &GraphPair,
) -> Result<DImmersion> {
    cone.check_integer_point(x)?;
    let ws = whitehead_system(reference);

    // Instances, sorted by (star, copy).
    let mut instances: Vec<usize> = Vec::new();
    for (si, count) in x.iter().enumerate() {
        let mut c = count.clone();
        while c.is_positive() {
            instances.push(si);
            c -= BigInt::one();
        }
    }
    let n_inst = instances.len();
    let center_of = |inst: usize| -> &Piece { &cone.pieces[cone.stars[instances[inst]].center] };

    // Middle star element ids and shared circle vertex ids.
    let mut mid_star_id: BTreeMap<(usize, EdgeId), EdgeId> = BTreeMap::new();
    let mut next_edge = 0u32;
    for inst in 0..n_inst {
        for e in center_of(inst).support() {
            mid_star_id.insert((inst, e), EdgeId(next_edge));
            next_edge += 1;
        }
    }
    let mut wh_id: BTreeMap<(usize, VertexId), VertexId> = BTreeMap::new();
    let mut next_wh = 0u32;
    for inst in 0..n_inst {
        for &q in &center_of(inst).edges {
            wh_id.insert((inst, q), VertexId(next_wh));
            next_wh += 1;
        }
    }

    // Pair the half-edges across each canonical splice triple.
    let mut partner: BTreeMap<(usize, EdgeId), (usize, EdgeId)> = BTreeMap::new();
    for (pi, p) in cone.pieces.iter().enumerate() {
        for &e in &p.support() {
            let e_rev = ws.crossings[&e].reverse;
            for (qi, q) in cone.pieces.iter().enumerate() {
                if splice_compatible(p, e, q, e_rev, &ws).is_none() {
                    continue;
                }
                if (pi, e, qi) > (qi, e_rev, pi) {
                    continue;
                }
                let lhs: Vec<usize> = (0..n_inst)
                    .filter(|&i| {
                        let s = &cone.stars[instances[i]];
                        s.center == pi && s.assignment.get(&e) == Some(&qi)
                    })
                    .collect();
                let rhs: Vec<usize> = (0..n_inst)
                    .filter(|&i| {
                        let s = &cone.stars[instances[i]];
                        s.center == qi && s.assignment.get(&e_rev) == Some(&pi)
                    })
                    .collect();
                if lhs.len() != rhs.len() {
                    return Err(Error::internal(
                        "gluing equality violated during reconstruction",
                    ));
                }
                for (&i, &j) in lhs.iter().zip(rhs.iter()) {
                    partner.insert((i, e), (j, e_rev));
                    partner.insert((j, e_rev), (i, e));
                }
            }
        }
    }

    // Middle Whitehead system.
    let mut mid_graphs: BTreeMap<VertexId, WhGraph> = BTreeMap::new();
    for inst in 0..n_inst {
        let piece = center_of(inst);
        let locations = piece.end_locations();
        let mut vertices: Vec<EdgeId> = piece
            .support()
            .iter()
            .map(|&e| mid_star_id[&(inst, e)])
            .collect();
        vertices.sort();
        let mut edges = Vec::new();
        for &q in &piece.edges {
            let endpoints = [
                mid_star_id[&(inst, locations[&End { edge: q, slot: 0 }])],
                mid_star_id[&(inst, locations[&End { edge: q, slot: 1 }])],
            ];
            edges.push(WhEdge { id: wh_id[&(inst, q)], endpoints });
        }
        edges.sort_by_key(|e| e.id);
        mid_graphs.insert(
            VertexId(inst as u32),
            WhGraph { at: VertexId(inst as u32), vertices, edges },
        );
    }
    let mut mid_crossings: BTreeMap<EdgeId, Crossing> = BTreeMap::new();
    for inst in 0..n_inst {
        let piece = center_of(inst);
        for &e in &piece.support() {
            let (jnst, e_rev) = partner[&(inst, e)];
            let cross = ws.crossing_map(e);
            let mut pairs = Vec::new();
            for block in piece.parts[&e].iter() {
                for &end in block {
                    let img = cross[&end];
                    pairs.push((
                        End { edge: wh_id[&(inst, end.edge)], slot: end.slot },
                        End { edge: wh_id[&(jnst, img.edge)], slot: img.slot },
                    ));
                }
            }
            pairs.sort();
            mid_crossings.insert(
                mid_star_id[&(inst, e)],
                Crossing { reverse: mid_star_id[&(jnst, e_rev)], pairs },
            );
        }
    }
    let mid_ws = WhiteheadSystem { graphs: mid_graphs, crossings: mid_crossings };
    let mid = reconstruct_pair(&mid_ws)?;

    // Source Whitehead system: one vertex per component of each piece top
    // graph, one star element per block, circle ids shared with the middle.
    let mut src_graphs: BTreeMap<VertexId, WhGraph> = BTreeMap::new();
    let mut src_star_id: BTreeMap<(usize, EdgeId, usize), EdgeId> = BTreeMap::new();
    let mut block_of_end: BTreeMap<(usize, End), (EdgeId, usize)> = BTreeMap::new();
    let mut next_src_edge = 0u32;
    let mut next_src_vertex = 0u32;
    for inst in 0..n_inst {
        let piece = center_of(inst);
        for (&e, blocks) in &piece.parts {
            for (bi, block) in blocks.iter().enumerate() {
                src_star_id.insert((inst, e, bi), EdgeId(next_src_edge));
                for &end in block {
                    block_of_end.insert((inst, end), (e, bi));
                }
                next_src_edge += 1;
            }
        }
        let (nblocks, top_edges) = piece.top_graph();
        let mut block_index: Vec<(EdgeId, usize)> = Vec::new();
        for (&e, blocks) in &piece.parts {
            for bi in 0..blocks.len() {
                block_index.push((e, bi));
            }
        }
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nblocks];
        for &(a, b) in &top_edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut comp = vec![usize::MAX; nblocks];
        let mut ncomp = 0usize;
        for start in 0..nblocks {
            if comp[start] != usize::MAX {
                continue;
            }
            let mut stack = vec![start];
            while let Some(b) = stack.pop() {
                if comp[b] != usize::MAX {
                    continue;
                }
                comp[b] = ncomp;
                stack.extend(adj[b].iter().copied());
            }
            ncomp += 1;
        }
        let locations = piece.end_locations();
        for ci in 0..ncomp {
            let vid = VertexId(next_src_vertex);
            next_src_vertex += 1;
            let mut vertices: Vec<EdgeId> = (0..nblocks)
                .filter(|&b| comp[b] == ci)
                .map(|b| {
                    let (e, bi) = block_index[b];
                    src_star_id[&(inst, e, bi)]
                })
                .collect();
            vertices.sort();
            let mut edges = Vec::new();
            for &q in &piece.edges {
                let (e0, bi0) = block_of_end[&(inst, End { edge: q, slot: 0 })];
                let idx0 = block_index
                    .iter()
                    .position(|&b| b == (e0, bi0))
                    .expect("block indexed");
                if comp[idx0] != ci {
                    continue;
                }
                let (e1, bi1) = block_of_end[&(inst, End { edge: q, slot: 1 })];
                debug_assert_eq!(locations[&End { edge: q, slot: 0 }], e0);
                edges.push(WhEdge {
                    id: wh_id[&(inst, q)],
                    endpoints: [src_star_id[&(inst, e0, bi0)], src_star_id[&(inst, e1, bi1)]],
                });
            }
            edges.sort_by_key(|e| e.id);
            src_graphs.insert(vid, WhGraph { at: vid, vertices, edges });
        }
    }
    let mut src_crossings: BTreeMap<EdgeId, Crossing> = BTreeMap::new();
    for inst in 0..n_inst {
        let piece = center_of(inst);
        for (&e, blocks) in &piece.parts {
            let (jnst, e_rev) = partner[&(inst, e)];
            let cross = ws.crossing_map(e);
            for (bi, block) in blocks.iter().enumerate() {
                let mut pairs = Vec::new();
                for &end in block {
                    let img = cross[&end];
                    pairs.push((
                        End { edge: wh_id[&(inst, end.edge)], slot: end.slot },
                        End { edge: wh_id[&(jnst, img.edge)], slot: img.slot },
                    ));
                }
                pairs.sort();
                let some_end = block.iter().next().expect("block nonempty");
                let img = cross[some_end];
                let (e2, bj) = block_of_end[&(jnst, img)];
                debug_assert_eq!(e2, e_rev);
                src_crossings.insert(
                    src_star_id[&(inst, e, bi)],
                    Crossing { reverse: src_star_id[&(jnst, e_rev, bj)], pairs },
                );
            }
        }
    }
    let src_ws = WhiteheadSystem { graphs: src_graphs, crossings: src_crossings };
    let source = reconstruct_pair(&src_ws)?;

    // First stage: blocks to middle star elements, shared circle ids.
    let mut f1_base = GraphMap::default();
    for (&(inst, e, _bi), &sid) in &src_star_id {
        f1_base.emap.insert(sid, mid_star_id[&(inst, e)]);
    }
    for (vid, wh) in &src_ws.graphs {
        let inst = wh
            .vertices
            .first()
            .and_then(|first| {
                src_star_id
                    .iter()
                    .find(|(_, &sid)| sid == *first)
                    .map(|(&(inst, _, _), _)| inst)
            })
            .ok_or_else(|| Error::internal("source vertex without star elements"))?;
        f1_base.vmap.insert(*vid, VertexId(inst as u32));
    }
    let src_ends = end_edge_table(&src_ws);
    let mid_ends = end_edge_table(&mid_ws);
    let mut f1_cycle = GraphMap::default();
    for v in source.cycles.circles.vertices() {
        f1_cycle.vmap.insert(v, v);
    }
    for (end, &ce) in &src_ends {
        f1_cycle.emap.insert(ce, mid_ends[end]);
    }
    let f1 = PairMorphism {
        source: source.clone(),
        target: mid.clone(),
        base: f1_base,
        cycle: f1_cycle,
    };

    // Second stage: instances to base vertices, copies to their originals.
    let mut f2_base = GraphMap::default();
    for inst in 0..n_inst {
        let host = &cone.components[center_of(inst).host];
        f2_base.vmap.insert(VertexId(inst as u32), host.base_vertex);
    }
    for (&(_inst, e), &sid) in &mid_star_id {
        f2_base.emap.insert(sid, e);
    }
    let rev_wh_id: BTreeMap<VertexId, (usize, VertexId)> =
        wh_id.iter().map(|(&k, &v)| (v, k)).collect();
    let mut f2_cycle = GraphMap::default();
    for (&(_inst, q), &vid) in &wh_id {
        f2_cycle.vmap.insert(vid, q);
    }
    for (end, &ce) in &mid_ends {
        let (_inst, q) = rev_wh_id[&end.edge];
        let ref_edge = reference_edge_of_end(reference, End { edge: q, slot: end.slot });
        f2_cycle.emap.insert(ce, ref_edge);
    }
    let f2 = PairMorphism {
        source: mid.clone(),
        target: reference.clone(),
        base: f2_base,
        cycle: f2_cycle,
    };

    let d = DImmersion { f1, f2 };
    d.f1.check()
        .and_then(|_| d.f2.check())
        .map_err(|e| Error::internal(format!("reconstructed witness is malformed: {e}")))?;
    Ok(d)
}

/// A surface-form certificate: the witness, an unfolding of its middle pair
/// in which every Whitehead graph is a disjoint union of cycles, and the
/// fold sequence replaying the unfolding back onto the middle pair.
#[derive(Clone, Debug)]
pub struct SurfaceCertificate {
    pub witness: DImmersion,
    pub vector: Vec<BigInt>,
    pub fatform: GraphPair,
    pub fold_steps: Vec<(EdgeId, EdgeId)>,
    pub euler: i64,
    pub boundary_count: usize,
    pub degree: BigInt,
    pub rho_plus: Option<Rational>,
    pub lp_basis: Vec<usize>,
}

/// True iff every Whitehead vertex has valence exactly two, i.e. every
/// Whitehead graph is a disjoint union of cycles.
pub fn is_fat(p: &GraphPair) -> bool {
    let ws = whitehead_system(p);
    ws.graphs
        .values()
        .all(|wh| wh.vertices.iter().all(|&v| wh.valence(v) == 2))
}

/// Unfolding can only split vertices, so valences never grow and a
/// component changes only through its own cut vertices. A state can still
/// reach the all-cycles form only if every component is either already a
/// cycle or has a cut vertex, with no valence below two anywhere.
fn fat_reachable(ws: &WhiteheadSystem) -> bool {
    for wh in ws.graphs.values() {
        for comp in wh.components() {
            let mut all_two = true;
            for &v in &comp {
                match wh.valence(v) {
                    0 | 1 => return false,
                    2 => {}
                    _ => all_two = false,
                }
            }
            if !all_two && !comp.iter().any(|&v| wh.cut_blocks(v).is_some()) {
                return false;
            }
        }
    }
    true
}

/// Searches cut-vertex unfoldings of the middle pair for a form in which
/// every Whitehead graph is a disjoint union of cycles. Depth-first with
/// backtracking over wedge decompositions, memoized on pair isomorphism
/// classes, visiting at most `search_budget` pairs. Absence means no such
/// form was found within budget, not that none exists.
pub fn certify_surface(d: &DImmersion, search_budget: usize) -> Result<Option<SurfaceCertificate>> {
    let start = d.mid().clone();
    let mut visited: BTreeMap<(usize, usize, Vec<usize>, Vec<usize>), Vec<GraphPair>> =
        BTreeMap::new();
    let mut stack: Vec<(GraphPair, Vec<(EdgeId, EdgeId)>)> = vec![(start.clone(), Vec::new())];
    let mut explored = 0usize;

    while let Some((pair, steps)) = stack.pop() {
        let key = pair_bucket_key(&pair);
        let bucket = visited.entry(key).or_default();
        if bucket.iter().any(|seen| pair_isomorphic(seen, &pair)) {
            continue;
        }
        bucket.push(pair.clone());
        explored += 1;
        if explored > search_budget {
            return Ok(None);
        }
        if is_fat(&pair) {
            let degree = witness_degree(d)?;
            return Ok(Some(SurfaceCertificate {
                witness: d.clone(),
                vector: Vec::new(),
                fatform: pair,
                fold_steps: steps,
                euler: start.base.euler_characteristic(),
                boundary_count: start.cycles.circle_count(),
                degree,
                rho_plus: None,
                lp_basis: Vec::new(),
            }));
        }
        // All cut-vertex unfold moves; lowest move explored first. States
        // with an unfixable component are not worth expanding.
        let ws = whitehead_system(&pair);
        if !fat_reachable(&ws) {
            continue;
        }
        let mut moves = Vec::new();
        for (&y, wh) in &ws.graphs {
            for &v in &wh.vertices {
                let Some(blocks) = wh.cut_blocks(v) else { continue };
                let k = blocks.len();
                // Two-sided splits with block 0 fixed on side 1.
                for mask in 0..(1u64 << (k - 1)) {
                    let mut side1 = blocks[0].1.clone();
                    let mut side2 = BTreeSet::new();
                    for (i, block) in blocks.iter().enumerate().skip(1) {
                        if mask & (1 << (i - 1)) != 0 {
                            side1.extend(block.1.iter().copied());
                        } else {
                            side2.extend(block.1.iter().copied());
                        }
                    }
                    if side2.is_empty() {
                        continue;
                    }
                    moves.push((y, v, WedgeSides { side1, side2 }));
                }
            }
        }
        for (y, v, sides) in moves.into_iter().rev() {
            let (unfolded, m) = unfold_at(&pair, y, v, &sides)?;
            let kept = pair.base.reverse(v);
            let fresh = unfolded
                .base
                .edges()
                .find(|&e| e != kept && m.base.emap[&e] == kept)
                .ok_or_else(|| Error::internal("unfold lost its fresh edge"))?;
            let mut new_steps = Vec::with_capacity(steps.len() + 1);
            new_steps.push((kept, fresh));
            new_steps.extend(steps.iter().copied());
            stack.push((unfolded, new_steps));
        }
    }
    Ok(None)
}

/// Budgets for the end-to-end search.
#[derive(Clone, Copy, Debug)]
pub struct SearchBudgets {
    pub caps: EnumCaps,
    pub face_budget: usize,
    pub unfold_budget: usize,
}

impl Default for SearchBudgets {
    fn default() -> Self {
        SearchBudgets { caps: EnumCaps::default(), face_budget: 64, unfold_budget: 1000 }
    }
}

#[derive(Clone, Debug)]
pub struct SurfaceReport {
    pub rho_plus: Rational,
    pub lp: LpResult,
    pub face_exhaustive: bool,
    pub vertices_tried: usize,
    pub certificate: Option<SurfaceCertificate>,
}

#[derive(Clone, Debug)]
pub enum SurfaceSearch {
    Reducible(ReducibleWitness),
    Report(SurfaceReport),
}

/// End-to-end pipeline: reject reducible references, enumerate the cone,
/// maximize the rank, then walk the optimal face reconstructing each
/// integer vertex and searching it for a surface form. The first
/// certificate found is returned together with the maximal rank.
pub fn find_surface(reference: &GraphPair, budgets: &SearchBudgets) -> Result<SurfaceSearch> {
    match unfold_to_locally_irreducible(reference)? {
        UnfoldOutcome::Reducible(w) => return Ok(SurfaceSearch::Reducible(w)),
        UnfoldOutcome::LocallyIrreducible { .. } => {}
    }
    let ws = whitehead_system(reference);
    let piece_set = enumerate_pieces(&ws, &budgets.caps);
    if piece_set.truncated {
        return Err(Error::Truncated("piece enumeration hit its cap".into()));
    }
    let star_set = enumerate_pstars(&piece_set, &ws, &budgets.caps);
    if star_set.truncated {
        return Err(Error::Truncated("star enumeration hit its cap".into()));
    }
    let cone = build_cone(&piece_set, &star_set, &ws, ChiMode::MiddleGraph)?;
    let lp = maximize_rank(&cone)?;
    if lp.status != LpStatus::Optimal {
        return Err(Error::internal("irreducible reference produced an empty cone"));
    }
    let face = optimal_face_vertices(&cone, &lp, budgets.face_budget)?;
    let mut tried = 0usize;
    let mut certificate = None;
    for vertex in &face.vertices {
        tried += 1;
        let x = integer_point(vertex)?;
        let d = reconstruct_dimmersion(&x, &cone, reference)?;
        debug_assert!(verify_dimmersion(&d, reference).is_empty());
        if let Some(mut cert) = certify_surface(&d, budgets.unfold_budget)? {
            cert.vector = x;
            cert.rho_plus = Some(lp.optimum.clone());
            cert.lp_basis = lp.basis.clone();
            certificate = Some(cert);
            break;
        }
    }
    Ok(SurfaceSearch::Report(SurfaceReport {
        rho_plus: lp.optimum.clone(),
        lp,
        face_exhaustive: face.exhaustive,
        vertices_tried: tried,
        certificate,
    }))
}

/// The canonical witness of an irreducible reference: its locally
/// irreducible unfolding over the identity.
pub fn identity_dimmersion(reference: &GraphPair) -> Result<Option<DImmersion>> {
    match unfold_to_locally_irreducible(reference)? {
        UnfoldOutcome::Reducible(_) => Ok(None),
        UnfoldOutcome::LocallyIrreducible { to_original, .. } => Ok(Some(DImmersion {
            f1: to_original,
            f2: PairMorphism::identity(reference),
        })),
    }
}

/// Re-checks a full certificate from primitive predicates: witness
/// invariants, the counting vector, the claimed numbers, and the fold
/// replay of the surface form. The cone is re-enumerated from the embedded
/// reference pair.
pub fn verify_certificate(cert: &SurfaceCertificate, caps: &EnumCaps) -> Vec<Violation> {
    let reference = cert.witness.reference().clone();
    let mut out = verify_dimmersion(&cert.witness, &reference);
    if !out.is_empty() {
        return out;
    }
    let ws = whitehead_system(&reference);
    let piece_set = enumerate_pieces(&ws, caps);
    let star_set = enumerate_pstars(&piece_set, &ws, caps);
    let cone = match build_cone(&piece_set, &star_set, &ws, ChiMode::MiddleGraph) {
        Ok(c) => c,
        Err(e) => {
            out.push(violation(ViolationKind::RowViolation, e.to_string()));
            return out;
        }
    };
    if let Err(e) = cone.check_integer_point(&cert.vector) {
        out.push(violation(ViolationKind::RowViolation, e.to_string()));
    }
    match project_vector(&cert.witness, &cone) {
        Ok(projected) => {
            if projected != cert.vector {
                out.push(violation(
                    ViolationKind::VectorMismatch,
                    "projection of the witness differs from the stored vector",
                ));
            }
        }
        Err(e) => out.push(violation(ViolationKind::VectorMismatch, e.to_string())),
    }
    match witness_degree(&cert.witness) {
        Ok(n) => {
            if n != cert.degree {
                out.push(violation(
                    ViolationKind::DegreeMismatch,
                    format!("composite degree {n} differs from claim {}", cert.degree),
                ));
            }
            if let Some(rho) = &cert.rho_plus {
                if cert.vector.len() == cone.stars.len() && !n.is_zero() {
                    let chi = BigRational::new(cone.chi2_of(&cert.vector), BigInt::from(2));
                    let value = chi / BigRational::from(cone.degree_of(&cert.vector));
                    if value != *rho {
                        out.push(violation(
                            ViolationKind::RankMismatch,
                            "rank of the vector differs from the claimed value",
                        ));
                    }
                }
            }
        }
        Err(e) => out.push(violation(ViolationKind::DegreeMismatch, e.to_string())),
    }
    if cert.witness.mid().base.euler_characteristic() != cert.euler {
        out.push(violation(
            ViolationKind::EulerMismatch,
            "middle pair Euler characteristic differs from claim",
        ));
    }
    if cert.witness.mid().cycles.circle_count() != cert.boundary_count {
        out.push(violation(
            ViolationKind::BoundaryMismatch,
            "middle pair circle count differs from claim",
        ));
    }
    if !cert.fatform.validate().is_empty() {
        out.push(violation(ViolationKind::PairInvalid, "surface form pair is invalid"));
        return out;
    }
    if !is_fat(&cert.fatform) {
        out.push(violation(
            ViolationKind::NotFat,
            "surface form has a Whitehead vertex of valence other than two",
        ));
    }
    // Replay the folds from the surface form back onto the middle pair.
    let mut current = cert.fatform.clone();
    for &(e1, e2) in &cert.fold_steps {
        match pair_fold(&current, e1, e2) {
            Ok(Some((next, _))) => current = next,
            Ok(None) => {
                out.push(violation(
                    ViolationKind::FoldReplayFailed,
                    "a fold step destroys the multicycle immersion",
                ));
                return out;
            }
            Err(e) => {
                out.push(violation(ViolationKind::FoldReplayFailed, e.to_string()));
                return out;
            }
        }
    }
    if !pair_isomorphic(&current, cert.witness.mid()) {
        out.push(violation(
            ViolationKind::FoldReplayFailed,
            "replayed folds do not land on the middle pair",
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pair::parse_words;

    fn setup(words: &[&str], rank: usize) -> (GraphPair, ConeSystem) {
        let p = parse_words(rank, words).unwrap();
        let ws = whitehead_system(&p);
        let caps = EnumCaps::default();
        let ps = enumerate_pieces(&ws, &caps);
        let ss = enumerate_pstars(&ps, &ws, &caps);
        let cone = build_cone(&ps, &ss, &ws, ChiMode::MiddleGraph).unwrap();
        (p, cone)
    }

    #[test]
    fn identity_projection_of_aa_is_the_unit_vector() {
        let (p, cone) = setup(&["aa"], 1);
        let d = identity_dimmersion(&p).unwrap().unwrap();
        assert!(verify_dimmersion(&d, &p).is_empty());
        let v = project_vector(&d, &cone).unwrap();
        assert_eq!(v, vec![BigInt::from(1)]);
    }

    #[test]
    fn identity_projection_of_commutator_satisfies_rows() {
        let (p, cone) = setup(&["abAB"], 2);
        let d = identity_dimmersion(&p).unwrap().unwrap();
        assert!(verify_dimmersion(&d, &p).is_empty());
        let v = project_vector(&d, &cone).unwrap();
        cone.check_integer_point(&v).unwrap();
        assert_eq!(cone.degree_of(&v), BigInt::from(1));
    }

    #[test]
    fn reconstruction_round_trip_unit_vector() {
        let (p, cone) = setup(&["aa"], 1);
        let x = vec![BigInt::from(1)];
        let d = reconstruct_dimmersion(&x, &cone, &p).unwrap();
        assert!(verify_dimmersion(&d, &p).is_empty());
        assert_eq!(project_vector(&d, &cone).unwrap(), x);
        assert!(pair_isomorphic(d.mid(), &p));
        assert!(pair_isomorphic(d.source(), &p));
    }

    #[test]
    fn reconstruction_round_trip_doubled_vector() {
        let (p, cone) = setup(&["aa"], 1);
        let x = vec![BigInt::from(2)];
        let d = reconstruct_dimmersion(&x, &cone, &p).unwrap();
        assert!(verify_dimmersion(&d, &p).is_empty());
        assert_eq!(project_vector(&d, &cone).unwrap(), x);
        assert_eq!(d.source().base.component_count(), 2);
        assert_eq!(witness_degree(&d).unwrap(), BigInt::from(2));
    }

    #[test]
    fn reconstruction_rejects_bad_vectors() {
        let (p, cone) = setup(&["aa"], 1);
        assert!(reconstruct_dimmersion(&[BigInt::from(0)], &cone, &p).is_err());
        // A vector violating an admissibility row: one triangle only.
        let (p2, cone2) = setup(&["BabAA"], 2);
        let tri = cone2
            .pieces
            .iter()
            .position(|piece| piece.edges.len() == 3)
            .unwrap();
        if let Some(si) = cone2.stars.iter().position(|s| s.center == tri) {
            let mut x = vec![BigInt::from(0); cone2.stars.len()];
            x[si] = BigInt::from(1);
            assert!(reconstruct_dimmersion(&x, &cone2, &p2).is_err());
        }
    }

    #[test]
    fn commutator_certificate() {
        let p = parse_words(2, &["abAB"]).unwrap();
        let report = match find_surface(&p, &SearchBudgets::default()).unwrap() {
            SurfaceSearch::Report(r) => r,
            other => panic!("expected report, got {other:?}"),
        };
        let cert = report.certificate.expect("certificate");
        assert_eq!(cert.euler, -1);
        assert_eq!(cert.boundary_count, 1);
        assert_eq!(cert.degree, BigInt::from(1));
        assert_eq!(report.rho_plus, Rational::from(BigInt::from(1)));
        assert!(cert.fold_steps.is_empty());
        assert!(verify_certificate(&cert, &EnumCaps::default()).is_empty());
    }

    #[test]
    fn annulus_like_certificate_for_aa() {
        let p = parse_words(1, &["aa"]).unwrap();
        let report = match find_surface(&p, &SearchBudgets::default()).unwrap() {
            SurfaceSearch::Report(r) => r,
            other => panic!("expected report, got {other:?}"),
        };
        let cert = report.certificate.expect("certificate");
        assert_eq!(cert.euler, 0);
        assert_eq!(cert.boundary_count, 1);
        assert!(verify_certificate(&cert, &EnumCaps::default()).is_empty());
    }

    #[test]
    fn reducible_reference_is_rejected() {
        let p = parse_words(1, &["a"]).unwrap();
        match find_surface(&p, &SearchBudgets::default()).unwrap() {
            SurfaceSearch::Reducible(w) => {
                assert!(matches!(w.classification, WhClassification::HasLeaf { .. }));
            }
            other => panic!("expected reducible, got {other:?}"),
        }
    }

    #[test]
    fn three_regular_turns_without_cuts_yield_no_certificate() {
        // aaabbb has a 3-regular Whitehead graph with no cut vertices: no
        // unfold applies and the identity witness is not of surface form.
        let (p, _cone) = setup(&["aaabbb"], 2);
        let d = identity_dimmersion(&p).unwrap().unwrap();
        assert!(verify_dimmersion(&d, &p).is_empty());
        assert!(certify_surface(&d, 10_000).unwrap().is_none());
    }

    #[test]
    fn weak_irreducibility_certificate_matches() {
        let (p, _) = setup(&["abAB"], 2);
        let d = identity_dimmersion(&p).unwrap().unwrap();
        assert!(is_weakly_irreducible_certificate(&d).unwrap());
    }
}
