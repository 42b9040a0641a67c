//! Graph pairs: a finite leafless base graph together with an immersed
//! multicycle (a disjoint union of circles mapping in without backtracking).
//! Combinatorially a pair over a rose is a tuple of cyclically reduced
//! cyclic words; general pairs arise from those by unfolding.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::graph::{
    check_graph_map, fold, stars_injective, EdgeId, Graph, GraphMap, GraphMorphism, VertexId,
};
use crate::iso::any_iso_satisfies;

/// An immersion of a disjoint union of circles into a base graph, stored as
/// the circles graph plus the vertex and edge assignments into the base.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Multicycle {
    pub circles: Graph,
    pub map: GraphMap,
}

impl Multicycle {
    pub fn as_morphism(&self, base: &Graph) -> GraphMorphism {
        GraphMorphism {
            domain: self.circles.clone(),
            codomain: base.clone(),
            map: self.map.clone(),
        }
    }

    /// Total number of circle vertices (= total word length).
    pub fn total_length(&self) -> usize {
        self.circles.vertex_count()
    }

    pub fn circle_count(&self) -> usize {
        self.circles.component_count()
    }

    /// The circles as oriented edge sequences. Each circle is traversed from
    /// its smallest vertex along its smaller outgoing circle edge, so the
    /// result is deterministic.
    pub fn circle_edge_words(&self) -> Vec<Vec<EdgeId>> {
        let mut words = Vec::new();
        for comp in self.circles.components() {
            let start = *comp.iter().next().expect("component is nonempty");
            let star = self.circles.star(start);
            assert_eq!(star.len(), 2, "multicycle vertices have exactly two edges");
            let mut word = Vec::new();
            let mut edge = star[0];
            loop {
                word.push(edge);
                let next_vertex = self.circles.terminus(edge);
                let back = self.circles.reverse(edge);
                let next = self
                    .circles
                    .star(next_vertex)
                    .into_iter()
                    .find(|&f| f != back)
                    .expect("circle vertex has a forward edge");
                edge = next;
                if self.circles.origin(edge) == start && edge == star[0] {
                    break;
                }
                if word.len() > self.circles.edge_count() {
                    panic!("multicycle component is not a circle");
                }
            }
            words.push(word);
        }
        words
    }

    /// The circles as words in base edges.
    pub fn base_edge_words(&self) -> Vec<Vec<EdgeId>> {
        self.circle_edge_words()
            .into_iter()
            .map(|w| w.into_iter().map(|e| self.map.emap[&e]).collect())
            .collect()
    }
}

/// A graph pair: base graph plus immersed multicycle.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GraphPair {
    pub base: Graph,
    pub cycles: Multicycle,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum PairViolation {
    BaseInvalid(String),
    CirclesInvalid(String),
    MapIllFormed(String),
    CircleVertexValence(VertexId),
    NotImmersed(VertexId),
    BaseHasValenceOneVertex(VertexId),
}

impl fmt::Display for PairViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairViolation::BaseInvalid(s) => write!(f, "base graph invalid: {s}"),
            PairViolation::CirclesInvalid(s) => write!(f, "circles graph invalid: {s}"),
            PairViolation::MapIllFormed(s) => write!(f, "multicycle map ill-formed: {s}"),
            PairViolation::CircleVertexValence(v) => {
                write!(f, "circle vertex {v} does not have valence 2")
            }
            PairViolation::NotImmersed(v) => {
                write!(f, "multicycle backtracks at circle vertex {v}")
            }
            PairViolation::BaseHasValenceOneVertex(v) => {
                write!(f, "base vertex {v} has valence one")
            }
        }
    }
}

impl GraphPair {
    pub fn validate(&self) -> Vec<PairViolation> {
        let mut out = Vec::new();
        for v in self.base.validate() {
            out.push(PairViolation::BaseInvalid(v.to_string()));
        }
        for v in self.cycles.circles.validate() {
            out.push(PairViolation::CirclesInvalid(v.to_string()));
        }
        if !out.is_empty() {
            return out;
        }
        if let Err(e) = check_graph_map(&self.cycles.circles, &self.base, &self.cycles.map) {
            out.push(PairViolation::MapIllFormed(e.to_string()));
            return out;
        }
        for v in self.cycles.circles.vertices() {
            if self.cycles.circles.valence(v) != 2 {
                out.push(PairViolation::CircleVertexValence(v));
            }
        }
        if out.is_empty() {
            for v in self.cycles.circles.vertices() {
                let star = self.cycles.circles.star(v);
                if self.cycles.map.emap[&star[0]] == self.cycles.map.emap[&star[1]] {
                    out.push(PairViolation::NotImmersed(v));
                }
            }
        }
        for v in self.base.vertices() {
            if self.base.valence(v) == 1 {
                out.push(PairViolation::BaseHasValenceOneVertex(v));
            }
        }
        out
    }

    /// Base vertices of valence at least two carrying no circle vertex.
    /// Such vertices are legal but force reducibility, so they get flagged
    /// separately from hard validation.
    pub fn untouched_vertices(&self) -> Vec<VertexId> {
        let touched: BTreeSet<VertexId> = self.cycles.map.vmap.values().copied().collect();
        self.base
            .vertices()
            .filter(|v| !touched.contains(v))
            .collect()
    }

    /// Circle vertices lying over `x`, in id order.
    pub fn circle_vertices_over(&self, x: VertexId) -> Vec<VertexId> {
        self.cycles
            .map
            .vmap
            .iter()
            .filter(|(_, &img)| img == x)
            .map(|(&v, _)| v)
            .collect()
    }
}

/// A morphism of graph pairs: a base morphism and a circle morphism forming
/// a commuting square, with the circle map an immersion.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PairMorphism {
    pub source: GraphPair,
    pub target: GraphPair,
    pub base: GraphMap,
    pub cycle: GraphMap,
}

impl PairMorphism {
    pub fn identity(p: &GraphPair) -> Self {
        PairMorphism {
            source: p.clone(),
            target: p.clone(),
            base: GraphMap::identity(&p.base),
            cycle: GraphMap::identity(&p.cycles.circles),
        }
    }

    pub fn check(&self) -> Result<()> {
        check_graph_map(&self.source.base, &self.target.base, &self.base)?;
        check_graph_map(
            &self.source.cycles.circles,
            &self.target.cycles.circles,
            &self.cycle,
        )?;
        if !stars_injective(&self.source.cycles.circles, &self.cycle) {
            return Err(Error::invalid("circle map of pair morphism is not an immersion"));
        }
        // Commuting square: target.map ∘ cycle = base ∘ source.map.
        for v in self.source.cycles.circles.vertices() {
            let via_target = self.target.cycles.map.vmap[&self.cycle.vmap[&v]];
            let via_base = self.base.vmap[&self.source.cycles.map.vmap[&v]];
            if via_target != via_base {
                return Err(Error::invalid(format!(
                    "pair morphism square does not commute at circle vertex {v}"
                )));
            }
        }
        for e in self.source.cycles.circles.edges() {
            let via_target = self.target.cycles.map.emap[&self.cycle.emap[&e]];
            let via_base = self.base.emap[&self.source.cycles.map.emap[&e]];
            if via_target != via_base {
                return Err(Error::invalid(format!(
                    "pair morphism square does not commute at circle edge {e}"
                )));
            }
        }
        Ok(())
    }

    /// `outer ∘ inner`, requiring `inner.target == outer.source`.
    pub fn compose(inner: &PairMorphism, outer: &PairMorphism) -> Result<PairMorphism> {
        if inner.target != outer.source {
            return Err(Error::internal("pair morphisms do not compose"));
        }
        Ok(PairMorphism {
            source: inner.source.clone(),
            target: outer.target.clone(),
            base: inner.base.then(&outer.base),
            cycle: inner.cycle.then(&outer.cycle),
        })
    }
}

const LOWER: &str = "abcdefghijklmnopqrstuvwxyz";

/// Letter for the oriented rose edge with id `e` (`a`, `A`, `b`, `B`, ...).
pub fn edge_letter(e: EdgeId) -> char {
    let gen = (e.0 / 2) as usize;
    let c = LOWER.as_bytes()[gen] as char;
    if e.0 % 2 == 0 {
        c
    } else {
        c.to_ascii_uppercase()
    }
}

fn letter_edge(c: char, rank: usize, word: &str, position: usize) -> Result<EdgeId> {
    let lower = c.to_ascii_lowercase();
    let idx = LOWER.find(lower).ok_or_else(|| Error::LetterOutOfRank {
        word: word.to_string(),
        position,
        letter: c,
        rank,
    })?;
    if idx >= rank {
        return Err(Error::LetterOutOfRank {
            word: word.to_string(),
            position,
            letter: c,
            rank,
        });
    }
    let base = 2 * idx as u32;
    Ok(EdgeId(if c.is_ascii_lowercase() { base } else { base + 1 }))
}

/// The rose with `rank` unoriented loops: generator `i` is the edge pair
/// `2i` / `2i+1` at the single vertex `0`.
pub fn rose(rank: usize) -> Graph {
    let mut g = Graph::new();
    g.add_vertex(VertexId(0));
    for i in 0..rank as u32 {
        g.add_edge_pair(EdgeId(2 * i), EdgeId(2 * i + 1), VertexId(0), VertexId(0));
    }
    g
}

/// Realizes cyclic words as a pair on the rose of the given rank. Words use
/// `a..z` for generators and `A..Z` for their inverses; every word must be
/// nonempty and cyclically reduced (rejected otherwise, with the offending
/// position).
pub fn parse_words(rank: usize, words: &[&str]) -> Result<GraphPair> {
    if rank == 0 || rank > 26 {
        return Err(Error::invalid("rank must be between 1 and 26"));
    }
    if words.is_empty() {
        return Err(Error::invalid("at least one word is required"));
    }
    let base = rose(rank);
    let mut circles = Graph::new();
    let mut map = GraphMap::default();
    let mut offset: u32 = 0;
    for word in words {
        if word.is_empty() {
            return Err(Error::invalid("words must be nonempty"));
        }
        let n = word.chars().count() as u32;
        let letters: Vec<char> = word.chars().collect();
        let mut images = Vec::with_capacity(n as usize);
        for (i, &c) in letters.iter().enumerate() {
            images.push(letter_edge(c, rank, word, i)?);
        }
        // Cyclic reduction check: no letter followed by its inverse,
        // including the wrap-around pair.
        for i in 0..n as usize {
            let j = (i + 1) % n as usize;
            if images[j] == base.reverse(images[i]) {
                return Err(Error::NotCyclicallyReduced {
                    word: word.to_string(),
                    position: i,
                });
            }
        }
        for i in 0..n {
            circles.add_vertex(VertexId(offset + i));
        }
        for i in 0..n {
            let fwd = EdgeId(2 * (offset + i));
            let bwd = EdgeId(2 * (offset + i) + 1);
            circles.add_edge_pair(fwd, bwd, VertexId(offset + i), VertexId(offset + (i + 1) % n));
            map.emap.insert(fwd, images[i as usize]);
            map.emap.insert(bwd, base.reverse(images[i as usize]));
            map.vmap.insert(VertexId(offset + i), VertexId(0));
        }
        offset += n;
    }
    let pair = GraphPair { base, cycles: Multicycle { circles, map } };
    debug_assert!(pair.validate().is_empty());
    Ok(pair)
}

/// Degree with which the source multicycle covers the target one: `n` if
/// every circle vertex and edge of the target has exactly `n` preimages,
/// absent otherwise.
pub fn admissibility_degree(m: &PairMorphism) -> Option<u64> {
    let mut counts: BTreeMap<VertexId, u64> =
        m.target.cycles.circles.vertices().map(|v| (v, 0)).collect();
    for v in m.source.cycles.circles.vertices() {
        *counts.get_mut(&m.cycle.vmap[&v]).expect("image is a vertex") += 1;
    }
    let mut values: BTreeSet<u64> = counts.values().copied().collect();
    let mut ecounts: BTreeMap<EdgeId, u64> =
        m.target.cycles.circles.edges().map(|e| (e, 0)).collect();
    for e in m.source.cycles.circles.edges() {
        *ecounts.get_mut(&m.cycle.emap[&e]).expect("image is an edge") += 1;
    }
    values.extend(ecounts.values().copied());
    if values.len() == 1 {
        let n = values.pop_first().expect("nonempty");
        if n > 0 {
            return Some(n);
        }
    }
    None
}

/// Folds `e1` against `e2` in the base (distinct termini required) and
/// carries the multicycle along. Returns the folded pair together with the
/// fold morphism, or `None` when the induced multicycle backtracks.
pub fn pair_fold(
    p: &GraphPair,
    e1: EdgeId,
    e2: EdgeId,
) -> Result<Option<(GraphPair, PairMorphism)>> {
    if p.base.has_edge(e1) && p.base.has_edge(e2) && p.base.terminus(e1) == p.base.terminus(e2) {
        return Err(Error::invalid("pair folds require distinct termini"));
    }
    let (folded_base, base_map) = fold(&p.base, e1, e2)?;
    let new_map = GraphMap {
        vmap: p
            .cycles
            .map
            .vmap
            .iter()
            .map(|(&v, img)| (v, base_map.vmap[img]))
            .collect(),
        emap: p
            .cycles
            .map
            .emap
            .iter()
            .map(|(&e, img)| (e, base_map.emap[img]))
            .collect(),
    };
    let folded = GraphPair {
        base: folded_base,
        cycles: Multicycle { circles: p.cycles.circles.clone(), map: new_map },
    };
    // The result is a pair morphism only if the induced multicycle is still
    // an immersion.
    if !folded.validate().is_empty() {
        return Ok(None);
    }
    let morphism = PairMorphism {
        source: p.clone(),
        target: folded,
        base: base_map,
        cycle: GraphMap::identity(&p.cycles.circles),
    };
    let folded = morphism.target.clone();
    Ok(Some((folded, morphism)))
}

/// Cyclic-word canonical form: the least rotation of the word or of its
/// reversed inverse, viewed in the codomain graph.
fn canonical_cyclic_word(word: &[EdgeId], g: &Graph) -> Vec<EdgeId> {
    let mut best: Option<Vec<EdgeId>> = None;
    let n = word.len();
    let mut consider = |w: &[EdgeId]| {
        for r in 0..n {
            let rot: Vec<EdgeId> = (0..n).map(|i| w[(r + i) % n]).collect();
            if best.as_ref().map_or(true, |b| &rot < b) {
                best = Some(rot);
            }
        }
    };
    consider(word);
    let reversed: Vec<EdgeId> = word.iter().rev().map(|&e| g.reverse(e)).collect();
    consider(&reversed);
    best.expect("word is nonempty")
}

fn circle_multiset(words: &[Vec<EdgeId>], g: &Graph) -> Vec<Vec<EdgeId>> {
    let mut ms: Vec<Vec<EdgeId>> = words.iter().map(|w| canonical_cyclic_word(w, g)).collect();
    ms.sort();
    ms
}

/// Pair isomorphism: base graphs isomorphic via a map under which the two
/// multicycles agree as multisets of unbased cyclic words (orientation
/// reversal of circles allowed).
pub fn pair_isomorphic(p: &GraphPair, q: &GraphPair) -> bool {
    if p.base.vertex_count() != q.base.vertex_count()
        || p.base.edge_count() != q.base.edge_count()
        || p.cycles.total_length() != q.cycles.total_length()
        || p.cycles.circle_count() != q.cycles.circle_count()
    {
        return false;
    }
    let mut p_lengths: Vec<usize> = p
        .cycles
        .circles
        .components()
        .iter()
        .map(|c| c.len())
        .collect();
    let mut q_lengths: Vec<usize> = q
        .cycles
        .circles
        .components()
        .iter()
        .map(|c| c.len())
        .collect();
    p_lengths.sort();
    q_lengths.sort();
    if p_lengths != q_lengths {
        return false;
    }
    let p_words = p.cycles.base_edge_words();
    let q_canon = circle_multiset(&q.cycles.base_edge_words(), &q.base);
    any_iso_satisfies(&p.base, &q.base, |map| {
        let mapped: Vec<Vec<EdgeId>> = p_words
            .iter()
            .map(|w| w.iter().map(|e| map.emap[e]).collect())
            .collect();
        circle_multiset(&mapped, &q.base) == q_canon
    })
}

/// A weak bucketing key for pairs: equal keys are necessary (not sufficient)
/// for isomorphism, so memo tables bucket by key and confirm with
/// [`pair_isomorphic`].
pub fn pair_bucket_key(p: &GraphPair) -> (usize, usize, Vec<usize>, Vec<usize>) {
    let mut valences: Vec<usize> = p.base.vertices().map(|v| p.base.valence(v)).collect();
    valences.sort();
    let mut lengths: Vec<usize> = p
        .cycles
        .circles
        .components()
        .iter()
        .map(|c| c.len())
        .collect();
    lengths.sort();
    (p.base.vertex_count(), p.base.edge_count(), valences, lengths)
}
