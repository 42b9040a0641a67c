//! Graph isomorphism for small graphs by canonical labeling.
//!
//! The canonical key of a graph is the lexicographically least sequence of
//! adjacency rows over all vertex orderings, found by backtracking. At each
//! depth only the candidates achieving the minimal row are branched on, so
//! the search stays near-linear on the small, highly connected graphs that
//! arise here. Two Serre graphs are isomorphic iff their underlying loop
//! multigraphs are (orientations of an unoriented edge can always be matched
//! either way), so the key is computed on the loop multigraph.

use std::cmp::Reverse;
use std::collections::BTreeMap;

use crate::graph::{EdgeId, Graph, GraphMap, VertexId};

/// Adjacency row of the vertex placed at one position: how it attaches to
/// earlier positions, with loop count. Ordered so that rows with more
/// attachment to earlier vertices come first.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
struct Row {
    earlier: Reverse<u32>,
    pairs: Vec<(u32, u32)>,
    loops: Reverse<u32>,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct CanonicalKey {
    vertex_count: usize,
    rows: Vec<Row>,
}

struct Adjacency {
    verts: Vec<VertexId>,
    mult: BTreeMap<(usize, usize), u32>,
    loops: Vec<u32>,
}

impl Adjacency {
    fn new(g: &Graph) -> Self {
        let verts: Vec<VertexId> = g.vertices().collect();
        let index: BTreeMap<VertexId, usize> =
            verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut mult = BTreeMap::new();
        let mut loops = vec![0u32; verts.len()];
        for e in g.edge_orbits() {
            let a = index[&g.origin(e)];
            let b = index[&g.terminus(e)];
            if a == b {
                loops[a] += 1;
            } else {
                *mult.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        Adjacency { verts, mult, loops }
    }

    fn between(&self, a: usize, b: usize) -> u32 {
        *self.mult.get(&(a.min(b), a.max(b))).unwrap_or(&0)
    }

    fn row(&self, cand: usize, placed: &[usize]) -> Row {
        let mut pairs = Vec::new();
        let mut earlier = 0;
        for (pos, &p) in placed.iter().enumerate() {
            let m = self.between(cand, p);
            if m > 0 {
                pairs.push((pos as u32, m));
                earlier += m;
            }
        }
        Row {
            earlier: Reverse(earlier),
            pairs,
            loops: Reverse(self.loops[cand]),
        }
    }
}

pub fn canonical_key(g: &Graph) -> CanonicalKey {
    let adj = Adjacency::new(g);
    let n = adj.verts.len();
    if n == 0 {
        return CanonicalKey { vertex_count: 0, rows: Vec::new() };
    }
    let mut best: Option<Vec<Row>> = None;
    let mut placed: Vec<usize> = Vec::with_capacity(n);
    let mut rows: Vec<Row> = Vec::with_capacity(n);
    let mut used = vec![false; n];
    search(&adj, &mut placed, &mut rows, &mut used, &mut best);
    CanonicalKey { vertex_count: n, rows: best.expect("nonempty graph has a labeling") }
}

fn search(
    adj: &Adjacency,
    placed: &mut Vec<usize>,
    rows: &mut Vec<Row>,
    used: &mut Vec<bool>,
    best: &mut Option<Vec<Row>>,
) {
    let n = adj.verts.len();
    if placed.len() == n {
        if best.as_ref().map_or(true, |b| rows.as_slice() < b.as_slice()) {
            *best = Some(rows.clone());
        }
        return;
    }
    let depth = placed.len();
    let mut min_row: Option<Row> = None;
    let mut cands = Vec::new();
    for v in 0..n {
        if used[v] {
            continue;
        }
        let row = adj.row(v, placed);
        match &min_row {
            Some(m) if row > *m => continue,
            Some(m) if row == *m => cands.push(v),
            _ => {
                min_row = Some(row);
                cands = vec![v];
            }
        }
    }
    let row = min_row.expect("candidate exists");
    // The prefix is only worth extending if it can still beat the best.
    if let Some(b) = best {
        if rows.as_slice() > &b[..depth] || (rows.as_slice() == &b[..depth] && row > b[depth]) {
            return;
        }
    }
    for v in cands {
        used[v] = true;
        placed.push(v);
        rows.push(row.clone());
        search(adj, placed, rows, used, best);
        rows.pop();
        placed.pop();
        used[v] = false;
    }
}

pub fn graphs_isomorphic(g: &Graph, h: &Graph) -> bool {
    if g.vertex_count() != h.vertex_count() || g.edge_count() != h.edge_count() {
        return false;
    }
    canonical_key(g) == canonical_key(h)
}

/// Enumerates isomorphisms `g -> h` of Serre graphs (vertex and oriented
/// edge bijections commuting with origin and involution), invoking the
/// callback on each. Stops early when the callback returns `true`.
pub fn any_iso_satisfies(g: &Graph, h: &Graph, mut accept: impl FnMut(&GraphMap) -> bool) -> bool {
    if g.vertex_count() != h.vertex_count() || g.edge_count() != h.edge_count() {
        return false;
    }
    let orbits = g.edge_orbits();
    let mut gmap = GraphMap::default();
    let mut used_orbits: Vec<EdgeId> = Vec::new();
    backtrack_iso(g, h, &orbits, 0, &mut gmap, &mut used_orbits, &mut accept)
}

fn backtrack_iso(
    g: &Graph,
    h: &Graph,
    orbits: &[EdgeId],
    k: usize,
    map: &mut GraphMap,
    used: &mut Vec<EdgeId>,
    accept: &mut impl FnMut(&GraphMap) -> bool,
) -> bool {
    if k == orbits.len() {
        // Match leftover isolated vertices in id order.
        let free_g: Vec<VertexId> =
            g.vertices().filter(|v| !map.vmap.contains_key(v)).collect();
        let mut free_h: Vec<VertexId> =
            h.vertices().filter(|v| !map.vmap.values().any(|w| w == v)).collect();
        if free_g.len() != free_h.len() {
            return false;
        }
        // Isolated vertices on both sides must have valence zero for the map
        // to be an isomorphism; non-isolated leftovers cannot be matched.
        if free_g.iter().any(|&v| g.valence(v) > 0) || free_h.iter().any(|&v| h.valence(v) > 0) {
            return false;
        }
        free_h.sort();
        let mut full = map.clone();
        for (v, w) in free_g.into_iter().zip(free_h) {
            full.vmap.insert(v, w);
        }
        return accept(&full);
    }
    let e = orbits[k];
    let (a, b) = (g.origin(e), g.terminus(e));
    for f in h.edge_orbits() {
        if used.contains(&f) {
            continue;
        }
        for cand in [f, h.reverse(f)] {
            let (x, y) = (h.origin(cand), h.terminus(cand));
            if !vertex_assignable(map, a, x) {
                continue;
            }
            // Tentatively bind a -> x to evaluate b -> y in loop cases.
            let prev_a = map.vmap.insert(a, x);
            let ok_b = vertex_assignable(map, b, y);
            if !ok_b {
                restore(map, a, prev_a);
                continue;
            }
            let prev_b = if b != a { map.vmap.insert(b, y) } else { None };
            map.emap.insert(e, cand);
            map.emap.insert(g.reverse(e), h.reverse(cand));
            used.push(f);
            if backtrack_iso(g, h, orbits, k + 1, map, used, accept) {
                return true;
            }
            used.pop();
            map.emap.remove(&e);
            map.emap.remove(&g.reverse(e));
            if b != a {
                restore(map, b, prev_b);
            }
            restore(map, a, prev_a);
        }
    }
    false
}

fn vertex_assignable(map: &GraphMap, v: VertexId, w: VertexId) -> bool {
    match map.vmap.get(&v) {
        Some(&img) => img == w,
        None => !map.vmap.values().any(|&img| img == w),
    }
}

fn restore(map: &mut GraphMap, v: VertexId, prev: Option<VertexId>) {
    match prev {
        Some(p) => {
            map.vmap.insert(v, p);
        }
        None => {
            map.vmap.remove(&v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle_labeled(ids: &[u32]) -> Graph {
        let n = ids.len() as u32;
        let mut g = Graph::new();
        for &i in ids {
            g.add_vertex(VertexId(i));
        }
        for k in 0..n {
            g.add_edge_pair(
                EdgeId(100 + 2 * k),
                EdgeId(100 + 2 * k + 1),
                VertexId(ids[k as usize]),
                VertexId(ids[((k + 1) % n) as usize]),
            );
        }
        g
    }

    #[test]
    fn relabeled_circles_have_equal_keys() {
        let a = circle_labeled(&[0, 1, 2, 3]);
        let b = circle_labeled(&[7, 3, 12, 9]);
        assert_eq!(canonical_key(&a), canonical_key(&b));
        assert!(graphs_isomorphic(&a, &b));
    }

    #[test]
    fn circle_lengths_distinguish() {
        let a = circle_labeled(&[0, 1, 2]);
        let b = circle_labeled(&[0, 1, 2, 3]);
        assert!(!graphs_isomorphic(&a, &b));
    }

    #[test]
    fn rose_vs_theta() {
        // Rose with two loops vs theta graph: same chi, different graphs.
        let rose2 = crate::graph::rose(2);
        let mut theta = Graph::new();
        theta.add_vertex(VertexId(0));
        theta.add_vertex(VertexId(1));
        for i in 0..3u32 {
            theta.add_edge_pair(EdgeId(2 * i), EdgeId(2 * i + 1), VertexId(0), VertexId(1));
        }
        assert!(!graphs_isomorphic(&rose2, &theta));
        assert!(graphs_isomorphic(&theta, &theta.clone()));
    }

    #[test]
    fn iso_enumeration_finds_maps() {
        let a = circle_labeled(&[0, 1, 2]);
        let b = circle_labeled(&[5, 6, 7]);
        let mut count = 0;
        any_iso_satisfies(&a, &b, |_| {
            count += 1;
            false
        });
        // Dihedral symmetry of the triangle.
        assert_eq!(count, 6);
    }
}
