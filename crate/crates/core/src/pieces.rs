//! Pieces over the Whitehead system and the cone they span.
//!
//! A piece is a subgraph `V` of one component `W` of the Whitehead system
//! together with an unwedging `P -> V`, bijective on edges and surjective on
//! vertices, whose components are all irreducible (connected, leafless, no
//! cut vertex). The unwedging is recorded as a partition of the edge-ends at
//! each vertex of `V` into blocks of size at least two. Pieces splice across
//! a base edge when the crossing bijection matches their end-blocks, and a
//! star records a compatible choice of neighbor piece for every vertex of
//! `V`. The cone lives in the nonnegative orthant indexed by stars and is
//! cut out by one gluing equation per splice triple and one admissibility
//! equation per Whitehead edge.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num::{BigInt, BigRational, Zero};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, VertexId};
use crate::whitehead::{End, WhiteheadSystem};

/// One connected component of the Whitehead system, remembered with its
/// base vertex.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct WhComponent {
    pub base_vertex: VertexId,
    pub vertices: BTreeSet<EdgeId>,
    pub edges: BTreeSet<VertexId>,
}

/// Components of all Whitehead graphs, in (base vertex, least member) order.
pub fn wh_components(ws: &WhiteheadSystem) -> Vec<WhComponent> {
    let mut out = Vec::new();
    for (&x, wh) in &ws.graphs {
        for comp in wh.components() {
            let edges = wh
                .edges
                .iter()
                .filter(|e| comp.contains(&e.endpoints[0]))
                .map(|e| e.id)
                .collect();
            out.push(WhComponent { base_vertex: x, vertices: comp, edges });
        }
    }
    out
}

/// A piece: edge subset of its host component plus the end partitions that
/// define the unwedged graph on top. The parts are canonical data (blocks
/// listed by least member), so piece equality is plain value equality.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Piece {
    pub host: usize,
    pub edges: BTreeSet<VertexId>,
    pub parts: BTreeMap<EdgeId, Vec<BTreeSet<End>>>,
}

impl Piece {
    pub fn support(&self) -> Vec<EdgeId> {
        self.parts.keys().copied().collect()
    }

    /// 1 when the Whitehead edge lies in this piece, 0 otherwise.
    pub fn delta(&self, eps: VertexId) -> i64 {
        i64::from(self.edges.contains(&eps))
    }

    /// Vertex count of the middle graph `V`.
    pub fn middle_vertex_count(&self) -> usize {
        self.parts.len()
    }

    /// Component count of the middle graph `V`.
    pub fn middle_component_count(&self) -> usize {
        let verts: Vec<EdgeId> = self.support();
        let index: BTreeMap<EdgeId, usize> =
            verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let ends = self.end_locations();
        let mut dsu = Dsu::new(verts.len());
        for q in &self.edges {
            let a = index[&ends[&End { edge: *q, slot: 0 }]];
            let b = index[&ends[&End { edge: *q, slot: 1 }]];
            dsu.union(a, b);
        }
        dsu.count()
    }

    /// Vertex count of the top graph `P` (total number of blocks).
    pub fn top_vertex_count(&self) -> usize {
        self.parts.values().map(|blocks| blocks.len()).sum()
    }

    /// Component count of the top graph `P`.
    pub fn top_component_count(&self) -> usize {
        let (n, edges) = self.top_graph();
        let mut dsu = Dsu::new(n);
        for (a, b) in edges {
            dsu.union(a, b);
        }
        dsu.count()
    }

    /// Where each end sits in `V` (the support vertex of its block).
    pub fn end_locations(&self) -> BTreeMap<End, EdgeId> {
        let mut out = BTreeMap::new();
        for (&s, blocks) in &self.parts {
            for block in blocks {
                for &end in block {
                    out.insert(end, s);
                }
            }
        }
        out
    }

    /// The top graph as (block count, edge list over block indices), blocks
    /// numbered in (support vertex, block index) order.
    pub fn top_graph(&self) -> (usize, Vec<(usize, usize)>) {
        let mut block_of: BTreeMap<End, usize> = BTreeMap::new();
        let mut n = 0usize;
        for blocks in self.parts.values() {
            for block in blocks {
                for &end in block {
                    block_of.insert(end, n);
                }
                n += 1;
            }
        }
        let edges = self
            .edges
            .iter()
            .map(|&q| {
                (
                    block_of[&End { edge: q, slot: 0 }],
                    block_of[&End { edge: q, slot: 1 }],
                )
            })
            .collect();
        (n, edges)
    }
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu { parent: (0..n).collect() }
    }
    fn find(&mut self, a: usize) -> usize {
        if self.parent[a] != a {
            let r = self.find(self.parent[a]);
            self.parent[a] = r;
        }
        self.parent[a]
    }
    fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
    fn count(&mut self) -> usize {
        let n = self.parent.len();
        (0..n).filter(|&i| self.find(i) == i).count()
    }
}

/// Enumeration limits. Exceeding a cap sets the truncation flag instead of
/// failing silently; cone construction refuses truncated enumerations.
#[derive(Clone, Copy, Debug)]
pub struct EnumCaps {
    pub max_piece_edges: usize,
    pub max_pieces: usize,
    pub max_stars: usize,
}

impl Default for EnumCaps {
    fn default() -> Self {
        EnumCaps { max_piece_edges: 12, max_pieces: 100_000, max_stars: 100_000 }
    }
}

#[derive(Clone, Debug)]
pub struct PieceSet {
    pub components: Vec<WhComponent>,
    pub pieces: Vec<Piece>,
    pub truncated: bool,
}

/// All pieces over the Whitehead system, exhaustively within caps.
pub fn enumerate_pieces(ws: &WhiteheadSystem, caps: &EnumCaps) -> PieceSet {
    let components = wh_components(ws);
    let mut pieces = Vec::new();
    let mut truncated = false;

    'components: for (host, comp) in components.iter().enumerate() {
        let wh = &ws.graphs[&comp.base_vertex];
        let comp_edges: Vec<VertexId> = comp.edges.iter().copied().collect();
        if comp_edges.len() > caps.max_piece_edges {
            truncated = true;
        }
        let max_k = comp_edges.len().min(caps.max_piece_edges);
        let mut stack: Vec<(usize, Vec<VertexId>)> = vec![(0, Vec::new())];
        while let Some((start, subset)) = stack.pop() {
            if !subset.is_empty() {
                if !collect_pieces_for_subset(host, wh, &subset, caps, &mut pieces) {
                    truncated = true;
                    break 'components;
                }
            }
            if subset.len() < max_k {
                // Push extensions in reverse so lower ids pop first.
                for i in (start..comp_edges.len()).rev() {
                    let mut next = subset.clone();
                    next.push(comp_edges[i]);
                    stack.push((i + 1, next));
                }
            }
        }
    }
    PieceSet { components, pieces, truncated }
}

/// Enumerates the pieces on one edge subset. Returns false when the piece
/// cap was hit.
fn collect_pieces_for_subset(
    host: usize,
    wh: &crate::whitehead::WhGraph,
    subset: &[VertexId],
    caps: &EnumCaps,
    pieces: &mut Vec<Piece>,
) -> bool {
    let mut ends_at: BTreeMap<EdgeId, Vec<End>> = BTreeMap::new();
    for &q in subset {
        let edge = wh.edges.iter().find(|e| e.id == q).expect("edge in component");
        for (k, &s) in edge.endpoints.iter().enumerate() {
            ends_at.entry(s).or_default().push(End { edge: q, slot: k as u8 });
        }
    }
    // A vertex of V with fewer than two ends cannot carry a block.
    if ends_at.values().any(|ends| ends.len() < 2) {
        return true;
    }
    let support: Vec<EdgeId> = ends_at.keys().copied().collect();
    let per_vertex: Vec<Vec<Vec<BTreeSet<End>>>> = support
        .iter()
        .map(|s| partitions_min_two(&ends_at[s]))
        .collect();
    if per_vertex.iter().any(|p| p.is_empty()) {
        return true;
    }
    let edge_set: BTreeSet<VertexId> = subset.iter().copied().collect();
    let mut choice = vec![0usize; support.len()];
    loop {
        let parts: BTreeMap<EdgeId, Vec<BTreeSet<End>>> = support
            .iter()
            .enumerate()
            .map(|(i, &s)| (s, per_vertex[i][choice[i]].clone()))
            .collect();
        let piece = Piece { host, edges: edge_set.clone(), parts };
        if piece_components_irreducible(&piece) {
            if pieces.len() >= caps.max_pieces {
                return false;
            }
            pieces.push(piece);
        }
        let mut i = 0;
        loop {
            if i == support.len() {
                return true;
            }
            choice[i] += 1;
            if choice[i] < per_vertex[i].len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// Set partitions with every block of size at least two, blocks listed by
/// least member (canonical order).
fn partitions_min_two(items: &[End]) -> Vec<Vec<BTreeSet<End>>> {
    let mut out = Vec::new();
    if items.len() < 2 {
        return out;
    }
    let avail: Vec<usize> = (0..items.len()).collect();
    let mut current = Vec::new();
    partition_rec(items, &avail, &mut current, &mut out);
    out
}

fn partition_rec(
    items: &[End],
    avail: &[usize],
    current: &mut Vec<BTreeSet<End>>,
    out: &mut Vec<Vec<BTreeSet<End>>>,
) {
    if avail.is_empty() {
        out.push(current.clone());
        return;
    }
    let first = avail[0];
    let rest = &avail[1..];
    let m = rest.len();
    if m == 0 {
        return; // a lone element cannot form a block
    }
    for mask in 1u64..(1u64 << m) {
        let mut block: BTreeSet<End> = BTreeSet::new();
        block.insert(items[first]);
        let mut remaining = Vec::new();
        for (j, &idx) in rest.iter().enumerate() {
            if mask & (1 << j) != 0 {
                block.insert(items[idx]);
            } else {
                remaining.push(idx);
            }
        }
        if remaining.len() == 1 {
            continue;
        }
        current.push(block);
        partition_rec(items, &remaining, current, out);
        current.pop();
    }
}

fn piece_components_irreducible(piece: &Piece) -> bool {
    let (n, edges) = piece.top_graph();
    if n == 0 {
        return false;
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in &edges {
        if a == b {
            // Both ends of a Whitehead edge in one block would need equal
            // endpoints, which immersion forbids; reject defensively.
            return false;
        }
        adj[a].push(b);
        adj[b].push(a);
    }
    // Valence >= 2 holds by block size; only cut vertices can disqualify.
    (0..n).all(|v| !is_cut_node(n, &adj, v))
}

fn is_cut_node(n: usize, adj: &[Vec<usize>], v: usize) -> bool {
    let mut comp = vec![false; n];
    let mut stack = vec![v];
    while let Some(w) = stack.pop() {
        if comp[w] {
            continue;
        }
        comp[w] = true;
        stack.extend(adj[w].iter().copied());
    }
    let rest: Vec<usize> = (0..n).filter(|&w| comp[w] && w != v).collect();
    if rest.is_empty() {
        return false;
    }
    let mut seen = vec![false; n];
    let mut blocks = 0;
    for &start in &rest {
        if seen[start] {
            continue;
        }
        blocks += 1;
        let mut stack = vec![start];
        while let Some(w) = stack.pop() {
            if seen[w] || w == v {
                continue;
            }
            seen[w] = true;
            stack.extend(adj[w].iter().copied().filter(|&u| u != v && !seen[u]));
        }
    }
    blocks >= 2
}

/// A successful splice of two pieces across a base edge: the canonical
/// matching of the left blocks at `e` with the right blocks at `e̅`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SpliceRelation {
    pub edge: EdgeId,
    pub edge_rev: EdgeId,
    /// (left block index at `edge`, right block index at `edge_rev`).
    pub matching: Vec<(usize, usize)>,
}

/// Tests whether `left` and `right` splice across `e` / `e_rev`: the block
/// counts agree and the crossing bijection carries the left block end-sets
/// exactly onto the right block end-sets, up to reordering. The matching is
/// found exactly by sorting the transported end-sets.
pub fn splice_compatible(
    left: &Piece,
    e: EdgeId,
    right: &Piece,
    e_rev: EdgeId,
    ws: &WhiteheadSystem,
) -> Option<SpliceRelation> {
    let crossing = ws.crossings.get(&e)?;
    if crossing.reverse != e_rev {
        return None;
    }
    let left_blocks = left.blocks_at_checked(e)?;
    let right_blocks = right.blocks_at_checked(e_rev)?;
    if left_blocks.len() != right_blocks.len() {
        return None;
    }
    let cross = ws.crossing_map(e);
    let mut transported: Vec<(BTreeSet<End>, usize)> = Vec::new();
    for (i, block) in left_blocks.iter().enumerate() {
        let mut image = BTreeSet::new();
        for end in block {
            image.insert(*cross.get(end)?);
        }
        transported.push((image, i));
    }
    let mut targets: Vec<(BTreeSet<End>, usize)> = right_blocks
        .iter()
        .enumerate()
        .map(|(j, b)| (b.clone(), j))
        .collect();
    transported.sort();
    targets.sort();
    let mut matching = Vec::new();
    for ((img, i), (tgt, j)) in transported.into_iter().zip(targets) {
        if img != tgt {
            return None;
        }
        matching.push((i, j));
    }
    matching.sort();
    Some(SpliceRelation { edge: e, edge_rev: e_rev, matching })
}

impl Piece {
    fn blocks_at_checked(&self, e: EdgeId) -> Option<&Vec<BTreeSet<End>>> {
        self.parts.get(&e)
    }
}

/// A star: a center piece and, for each vertex of its middle graph, a
/// spliceable neighbor piece.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct PieceStar {
    pub center: usize,
    pub assignment: BTreeMap<EdgeId, usize>,
}

#[derive(Clone, Debug)]
pub struct StarSet {
    pub stars: Vec<PieceStar>,
    pub truncated: bool,
}

/// All stars over the enumerated pieces, exhaustively within caps.
pub fn enumerate_pstars(
    piece_set: &PieceSet,
    ws: &WhiteheadSystem,
    caps: &EnumCaps,
) -> StarSet {
    let pieces = &piece_set.pieces;
    let mut stars = Vec::new();
    let mut truncated = false;
    'centers: for (ci, center) in pieces.iter().enumerate() {
        let support = center.support();
        let mut candidates: Vec<Vec<usize>> = Vec::with_capacity(support.len());
        for &e in &support {
            let e_rev = ws.crossings[&e].reverse;
            let cands: Vec<usize> = pieces
                .iter()
                .enumerate()
                .filter(|(_, q)| splice_compatible(center, e, q, e_rev, ws).is_some())
                .map(|(qi, _)| qi)
                .collect();
            if cands.is_empty() {
                continue 'centers;
            }
            candidates.push(cands);
        }
        let mut choice = vec![0usize; support.len()];
        loop {
            if stars.len() >= caps.max_stars {
                truncated = true;
                break 'centers;
            }
            let assignment: BTreeMap<EdgeId, usize> = support
                .iter()
                .enumerate()
                .map(|(i, &e)| (e, candidates[i][choice[i]]))
                .collect();
            stars.push(PieceStar { center: ci, assignment });
            let mut i = 0;
            while i < support.len() {
                choice[i] += 1;
                if choice[i] < candidates[i].len() {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
            if i == support.len() {
                break;
            }
        }
    }
    StarSet { stars, truncated }
}

/// A sparse integer row over the star variables.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct SparseRow(pub Vec<(usize, i64)>);

impl SparseRow {
    fn from_map(map: BTreeMap<usize, i64>) -> Self {
        SparseRow(map.into_iter().filter(|&(_, c)| c != 0).collect())
    }

    pub fn eval_int(&self, x: &[BigInt]) -> BigInt {
        let mut acc = BigInt::zero();
        for &(j, c) in &self.0 {
            acc += BigInt::from(c) * &x[j];
        }
        acc
    }

    pub fn eval_rat(&self, x: &[BigRational]) -> BigRational {
        let mut acc = BigRational::zero();
        for &(j, c) in &self.0 {
            acc += BigRational::from(BigInt::from(c)) * &x[j];
        }
        acc
    }
}

/// Convention for the Euler-characteristic coefficients of the rank
/// functional: evaluated on the middle graph `V` (so the functional reads
/// off the Euler characteristic of the immersed middle pair whenever its
/// Whitehead graphs are connected), or on the top graph `P`.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum ChiMode {
    #[default]
    MiddleGraph,
    PieceTop,
}

/// The cone of gluing and admissibility equations, with the degree and rank
/// functionals. The rank numerator is stored doubled so that every
/// coefficient is an integer.
#[derive(Clone, Debug)]
pub struct ConeSystem {
    pub components: Vec<WhComponent>,
    pub pieces: Vec<Piece>,
    pub stars: Vec<PieceStar>,
    pub wh_edges: Vec<VertexId>,
    pub gluing_rows: Vec<SparseRow>,
    pub admissibility_rows: Vec<SparseRow>,
    pub n_row: SparseRow,
    pub chi2_row: SparseRow,
    pub chi_mode: ChiMode,
}

/// Assembles the cone: one gluing row per splice triple `(P, e, Q)` up to
/// reversal, one admissibility row per Whitehead edge beyond the first, the
/// degree row `n` counting covers of the first Whitehead edge, and the
/// doubled rank row.
pub fn build_cone(
    piece_set: &PieceSet,
    star_set: &StarSet,
    ws: &WhiteheadSystem,
    chi_mode: ChiMode,
) -> Result<ConeSystem> {
    if piece_set.truncated || star_set.truncated {
        return Err(Error::Truncated(
            "cannot build a cone from a truncated enumeration".into(),
        ));
    }
    let pieces = &piece_set.pieces;
    let stars = &star_set.stars;

    let mut wh_edges: Vec<VertexId> = ws
        .graphs
        .values()
        .flat_map(|g| g.edges.iter().map(|e| e.id))
        .collect();
    wh_edges.sort();

    // Gluing rows, one per unordered splice triple.
    let mut gluing_rows = Vec::new();
    for (pi, p) in pieces.iter().enumerate() {
        for &e in &p.support() {
            let e_rev = ws.crossings[&e].reverse;
            for (qi, q) in pieces.iter().enumerate() {
                if splice_compatible(p, e, q, e_rev, ws).is_none() {
                    continue;
                }
                // Canonical orientation of the triple.
                if (pi, e, qi) > (qi, e_rev, pi) {
                    continue;
                }
                let mut coeffs: BTreeMap<usize, i64> = BTreeMap::new();
                for (si, star) in stars.iter().enumerate() {
                    if star.center == pi && star.assignment.get(&e) == Some(&qi) {
                        *coeffs.entry(si).or_insert(0) += 1;
                    }
                    if star.center == qi && star.assignment.get(&e_rev) == Some(&pi) {
                        *coeffs.entry(si).or_insert(0) -= 1;
                    }
                }
                gluing_rows.push(SparseRow::from_map(coeffs));
            }
        }
    }

    let mut admissibility_rows = Vec::new();
    if let Some(&eps0) = wh_edges.first() {
        for &eps in wh_edges.iter().skip(1) {
            let mut coeffs: BTreeMap<usize, i64> = BTreeMap::new();
            for (si, star) in stars.iter().enumerate() {
                let c = pieces[star.center].delta(eps) - pieces[star.center].delta(eps0);
                if c != 0 {
                    coeffs.insert(si, c);
                }
            }
            admissibility_rows.push(SparseRow::from_map(coeffs));
        }
    }

    let n_row = {
        let mut coeffs: BTreeMap<usize, i64> = BTreeMap::new();
        if let Some(&eps0) = wh_edges.first() {
            for (si, star) in stars.iter().enumerate() {
                let c = pieces[star.center].delta(eps0);
                if c != 0 {
                    coeffs.insert(si, c);
                }
            }
        }
        SparseRow::from_map(coeffs)
    };

    let chi2_row = {
        let mut coeffs: BTreeMap<usize, i64> = BTreeMap::new();
        for (si, star) in stars.iter().enumerate() {
            let piece = &pieces[star.center];
            let c = match chi_mode {
                ChiMode::MiddleGraph => {
                    piece.middle_vertex_count() as i64 - 2 * piece.middle_component_count() as i64
                }
                ChiMode::PieceTop => {
                    piece.top_vertex_count() as i64 - 2 * piece.top_component_count() as i64
                }
            };
            if c != 0 {
                coeffs.insert(si, c);
            }
        }
        SparseRow::from_map(coeffs)
    };

    Ok(ConeSystem {
        components: piece_set.components.clone(),
        pieces: pieces.clone(),
        stars: stars.clone(),
        wh_edges,
        gluing_rows,
        admissibility_rows,
        n_row,
        chi2_row,
        chi_mode,
    })
}

impl ConeSystem {
    pub fn variable_count(&self) -> usize {
        self.stars.len()
    }

    pub fn equality_rows(&self) -> impl Iterator<Item = &SparseRow> {
        self.gluing_rows.iter().chain(self.admissibility_rows.iter())
    }

    /// Verifies that an integer vector lies in the cone (nonnegative,
    /// nonzero, all rows zero).
    pub fn check_integer_point(&self, x: &[BigInt]) -> Result<()> {
        if x.len() != self.stars.len() {
            return Err(Error::invalid("vector length does not match star count"));
        }
        if x.iter().any(|c| c < &BigInt::zero()) {
            return Err(Error::invalid("vector has a negative entry"));
        }
        if x.iter().all(|c| c.is_zero()) {
            return Err(Error::invalid("vector is zero"));
        }
        for (i, row) in self.gluing_rows.iter().enumerate() {
            if !row.eval_int(x).is_zero() {
                return Err(Error::invalid(format!("gluing row {i} violated")));
            }
        }
        for (i, row) in self.admissibility_rows.iter().enumerate() {
            if !row.eval_int(x).is_zero() {
                return Err(Error::invalid(format!("admissibility row {i} violated")));
            }
        }
        Ok(())
    }

    pub fn degree_of(&self, x: &[BigInt]) -> BigInt {
        self.n_row.eval_int(x)
    }

    /// Twice the rank numerator at an integer point.
    pub fn chi2_of(&self, x: &[BigInt]) -> BigInt {
        self.chi2_row.eval_int(x)
    }

    /// Locates a piece in the enumerated list.
    pub fn piece_index(&self, piece: &Piece) -> Option<usize> {
        self.pieces.iter().position(|p| p == piece)
    }

    pub fn star_index(&self, star: &PieceStar) -> Option<usize> {
        self.stars.iter().position(|s| s == star)
    }

    /// Plain-text linear program: objective (the doubled rank functional),
    /// equality rows, degree normalization, and nonnegativity. Suitable for
    /// feeding to an external solver for cross-checking.
    pub fn to_lp_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "\\ {} variables, {} gluing rows, {} admissibility rows",
            self.stars.len(),
            self.gluing_rows.len(),
            self.admissibility_rows.len()
        );
        let _ = writeln!(s, "\\ objective is twice the rank numerator");
        let _ = writeln!(s, "Maximize");
        let _ = writeln!(s, " obj: {}", lp_terms(&self.chi2_row));
        let _ = writeln!(s, "Subject To");
        for (i, row) in self.gluing_rows.iter().enumerate() {
            let _ = writeln!(s, " g{i}: {} = 0", lp_terms(row));
        }
        for (i, row) in self.admissibility_rows.iter().enumerate() {
            let _ = writeln!(s, " a{i}: {} = 0", lp_terms(row));
        }
        let _ = writeln!(s, " n: {} = 1", lp_terms(&self.n_row));
        let _ = writeln!(s, "Bounds");
        for j in 0..self.stars.len() {
            let _ = writeln!(s, " x{j} >= 0");
        }
        let _ = writeln!(s, "End");
        s
    }
}

fn lp_terms(row: &SparseRow) -> String {
    if row.0.is_empty() {
        return "0 x0".to_string();
    }
    let mut s = String::new();
    for (k, &(j, c)) in row.0.iter().enumerate() {
        if k == 0 {
            if c < 0 {
                let _ = write!(s, "- {} x{j}", -c);
            } else {
                let _ = write!(s, "{c} x{j}");
            }
        } else if c < 0 {
            let _ = write!(s, " - {} x{j}", -c);
        } else {
            let _ = write!(s, " + {c} x{j}");
        }
    }
    s
}
