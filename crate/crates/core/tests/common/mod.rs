//! Shared test oracles, written independently of the library's own
//! algorithms: a basic-feasible-solution enumerator for the linear
//! programs, naive piece and star enumerators, a primitive-word generator
//! with a length-descent primitivity oracle, and random fold instances.

use std::collections::{BTreeMap, BTreeSet};

use num::{BigInt, BigRational, One, Signed, Zero};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use pairrank::{
    pair_fold, parse_words, unfold_at, whitehead_system, ConeSystem, EdgeId, GraphPair, Rational,
    SparseRow, VertexId, WedgeSides, WhiteheadSystem,
};

pub fn rat(p: i64, q: i64) -> Rational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

// ---------------------------------------------------------------------
// Exact linear algebra for the brute-force LP oracle.
// ---------------------------------------------------------------------

fn dense_rows(cone: &ConeSystem) -> (Vec<Vec<Rational>>, Vec<Rational>) {
    let n = cone.variable_count();
    let mut a: Vec<Vec<Rational>> = Vec::new();
    let mut b = Vec::new();
    let mut push = |row: &SparseRow, rhs: Rational| {
        let mut dense = vec![Rational::zero(); n];
        for &(j, c) in &row.0 {
            dense[j] = BigRational::from(BigInt::from(c));
        }
        a.push(dense);
        b.push(rhs);
    };
    for row in cone.equality_rows() {
        if !row.0.is_empty() {
            push(row, Rational::zero());
        }
    }
    push(&cone.n_row, Rational::one());
    (a, b)
}

/// Row echelon form over the rationals; returns the reduced rows, the
/// transformed right-hand side and the pivot columns.
fn row_echelon(
    mut a: Vec<Vec<Rational>>,
    mut b: Vec<Rational>,
) -> (Vec<Vec<Rational>>, Vec<Rational>, Vec<usize>) {
    let m = a.len();
    let n = if m > 0 { a[0].len() } else { 0 };
    let mut pivots = Vec::new();
    let mut r = 0usize;
    for col in 0..n {
        let Some(sel) = (r..m).find(|&i| !a[i][col].is_zero()) else {
            continue;
        };
        a.swap(r, sel);
        b.swap(r, sel);
        let inv = a[r][col].clone();
        for x in a[r].iter_mut() {
            *x /= &inv;
        }
        b[r] /= &inv;
        for i in 0..m {
            if i == r || a[i][col].is_zero() {
                continue;
            }
            let f = a[i][col].clone();
            for j in 0..n {
                let d = &f * &a[r][j];
                a[i][j] -= d;
            }
            let d = &f * &b[r];
            b[i] -= d;
        }
        pivots.push(col);
        r += 1;
        if r == m {
            break;
        }
    }
    a.truncate(r);
    b.truncate(r);
    // An inconsistent tail row would mean the system is infeasible; the
    // caller checks solutions against the original rows anyway.
    (a, b, pivots)
}

fn solve_square(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let n = a.len();
    let mut m: Vec<Vec<Rational>> = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let sel = (col..n).find(|&i| !m[i][col].is_zero())?;
        m.swap(col, sel);
        rhs.swap(col, sel);
        let inv = m[col][col].clone();
        for x in m[col].iter_mut() {
            *x /= &inv;
        }
        rhs[col] /= &inv;
        for i in 0..n {
            if i == col || m[i][col].is_zero() {
                continue;
            }
            let f = m[i][col].clone();
            for j in 0..n {
                let d = &f * &m[col][j];
                m[i][j] -= d;
            }
            let d = &f * &rhs[col];
            rhs[i] -= d;
        }
    }
    Some(rhs)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Every basic feasible solution of the degree-one slice, by enumerating
/// column subsets of the row-reduced system and solving exactly.
pub fn brute_force_vertices(cone: &ConeSystem) -> Vec<Vec<Rational>> {
    let n = cone.variable_count();
    let (a, b) = dense_rows(cone);
    let (red, rb, _) = row_echelon(a.clone(), b.clone());
    let r = red.len();
    let mut seen: BTreeSet<Vec<Rational>> = BTreeSet::new();
    let mut out = Vec::new();
    for cols in subsets(n, r) {
        let sub: Vec<Vec<Rational>> = (0..r)
            .map(|i| cols.iter().map(|&j| red[i][j].clone()).collect())
            .collect();
        let Some(xb) = solve_square(&sub, &rb) else { continue };
        if xb.iter().any(|v| v.is_negative()) {
            continue;
        }
        let mut x = vec![Rational::zero(); n];
        for (idx, &j) in cols.iter().enumerate() {
            x[j] = xb[idx].clone();
        }
        // Confirm against the original rows.
        let ok = a
            .iter()
            .zip(&b)
            .all(|(row, rhs)| {
                let mut acc = Rational::zero();
                for (j, c) in row.iter().enumerate() {
                    if !c.is_zero() {
                        acc += c * &x[j];
                    }
                }
                acc == *rhs
            });
        if ok && seen.insert(x.clone()) {
            out.push(x);
        }
    }
    out
}

/// Extremal value of the rank functional over all basic feasible
/// solutions. `None` when the slice is empty.
pub fn brute_force_optimum(cone: &ConeSystem, maximize: bool) -> Option<Rational> {
    let vertices = brute_force_vertices(cone);
    let mut best: Option<Rational> = None;
    for x in vertices {
        let mut chi2 = Rational::zero();
        for &(j, c) in &cone.chi2_row.0 {
            chi2 += BigRational::from(BigInt::from(c)) * &x[j];
        }
        let value = chi2 / BigRational::from(BigInt::from(2));
        best = Some(match best {
            None => value,
            Some(b) => {
                if maximize {
                    b.max(value)
                } else {
                    b.min(value)
                }
            }
        });
    }
    best
}

// ---------------------------------------------------------------------
// Naive piece and star enumerators.
// ---------------------------------------------------------------------

type NaivePiece = (usize, BTreeSet<u32>, BTreeMap<u32, Vec<BTreeSet<(u32, u8)>>>);

fn naive_components(verts: &[u32], edges: &[(u32, u32, u32)]) -> Vec<BTreeSet<u32>> {
    // Plain iterative merging, distinct from the union-find used in the
    // library.
    let mut comps: Vec<BTreeSet<u32>> = verts.iter().map(|&v| [v].into_iter().collect()).collect();
    loop {
        let mut merged = false;
        'outer: for i in 0..comps.len() {
            for j in (i + 1)..comps.len() {
                let joined = edges.iter().any(|&(_, a, b)| {
                    (comps[i].contains(&a) && comps[j].contains(&b))
                        || (comps[i].contains(&b) && comps[j].contains(&a))
                });
                if joined {
                    let cj = comps.remove(j);
                    comps[i].extend(cj);
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            return comps;
        }
    }
}

fn all_partitions(items: &[(u32, u8)]) -> Vec<Vec<BTreeSet<(u32, u8)>>> {
    // Unrestricted set partitions, filtered later; intentionally different
    // from the library's direct blocks-of-two generator.
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let first = items[0];
    let rest = &items[1..];
    let mut out = Vec::new();
    for mut partition in all_partitions(rest) {
        for i in 0..partition.len() {
            let mut next = partition.clone();
            next[i].insert(first);
            out.push(next);
        }
        partition.push([first].into_iter().collect());
        out.push(partition);
    }
    out
}

/// Every piece over the Whitehead system, enumerated naively: all edge
/// subsets by bitmask, all set partitions filtered to blocks of size two or
/// more, all components checked leafless and cut-free by deletion.
pub fn naive_pieces(ws: &WhiteheadSystem) -> BTreeSet<NaivePiece> {
    let mut out = BTreeSet::new();
    let mut comp_index = 0usize;
    for wh in ws.graphs.values() {
        let all_edges: Vec<(u32, u32, u32)> = wh
            .edges
            .iter()
            .map(|e| (e.id.0, e.endpoints[0].0, e.endpoints[1].0))
            .collect();
        let verts: Vec<u32> = wh.vertices.iter().map(|v| v.0).collect();
        for comp in naive_components(&verts, &all_edges) {
            let comp_edges: Vec<(u32, u32, u32)> = all_edges
                .iter()
                .filter(|&&(_, a, _)| comp.contains(&a))
                .copied()
                .collect();
            let k = comp_edges.len();
            for mask in 1u64..(1u64 << k) {
                let chosen: Vec<(u32, u32, u32)> = (0..k)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| comp_edges[i])
                    .collect();
                // Ends at each support vertex.
                let mut ends: BTreeMap<u32, Vec<(u32, u8)>> = BTreeMap::new();
                for &(id, a, b) in &chosen {
                    ends.entry(a).or_default().push((id, 0));
                    ends.entry(b).or_default().push((id, 1));
                }
                if ends.values().any(|e| e.len() < 2) {
                    continue;
                }
                let support: Vec<u32> = ends.keys().copied().collect();
                let mut per_vertex: Vec<Vec<Vec<BTreeSet<(u32, u8)>>>> = Vec::new();
                for s in &support {
                    let parts: Vec<Vec<BTreeSet<(u32, u8)>>> = all_partitions(&ends[s])
                        .into_iter()
                        .filter(|p| p.iter().all(|block| block.len() >= 2))
                        .collect();
                    per_vertex.push(parts);
                }
                let mut idx = vec![0usize; support.len()];
                if per_vertex.iter().any(|p| p.is_empty()) {
                    continue;
                }
                loop {
                    let mut parts: BTreeMap<u32, Vec<BTreeSet<(u32, u8)>>> = BTreeMap::new();
                    for (i, s) in support.iter().enumerate() {
                        let mut blocks = per_vertex[i][idx[i]].clone();
                        blocks.sort();
                        parts.insert(*s, blocks);
                    }
                    if naive_top_irreducible(&chosen, &parts) {
                        let edge_set: BTreeSet<u32> =
                            chosen.iter().map(|&(id, _, _)| id).collect();
                        out.insert((comp_index, edge_set, parts));
                    }
                    let mut i = 0;
                    while i < support.len() {
                        idx[i] += 1;
                        if idx[i] < per_vertex[i].len() {
                            break;
                        }
                        idx[i] = 0;
                        i += 1;
                    }
                    if i == support.len() {
                        break;
                    }
                }
            }
            comp_index += 1;
        }
    }
    out
}

fn naive_top_irreducible(
    chosen: &[(u32, u32, u32)],
    parts: &BTreeMap<u32, Vec<BTreeSet<(u32, u8)>>>,
) -> bool {
    // Blocks are the nodes; find each end's block.
    let mut nodes: Vec<BTreeSet<(u32, u8)>> = Vec::new();
    for blocks in parts.values() {
        nodes.extend(blocks.iter().cloned());
    }
    let find = |end: (u32, u8)| nodes.iter().position(|b| b.contains(&end));
    let mut edges = Vec::new();
    for &(id, _, _) in chosen {
        let a = find((id, 0)).expect("end in a block");
        let b = find((id, 1)).expect("end in a block");
        if a == b {
            return false;
        }
        edges.push((a, b));
    }
    // Leafless: block size at least two already guarantees it. Cut check by
    // vertex deletion and reachability counting.
    let n = nodes.len();
    let reach = |skip: Option<usize>, start: usize| -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            if Some(v) == skip || !seen.insert(v) {
                continue;
            }
            for &(a, b) in &edges {
                if a == v && Some(b) != skip {
                    stack.push(b);
                }
                if b == v && Some(a) != skip {
                    stack.push(a);
                }
            }
        }
        seen
    };
    for v in 0..n {
        let comp = reach(None, v);
        let rest: Vec<usize> = comp.iter().copied().filter(|&w| w != v).collect();
        if rest.is_empty() {
            continue;
        }
        let reachable = reach(Some(v), rest[0]);
        if rest.iter().any(|w| !reachable.contains(w)) {
            return false;
        }
    }
    true
}

/// Naive splice test: try every bijection between the blocks at `e` and the
/// blocks at its reverse, checking the crossing image setwise.
pub fn naive_splice(
    left: &pairrank::Piece,
    e: EdgeId,
    right: &pairrank::Piece,
    ws: &WhiteheadSystem,
) -> bool {
    let e_rev = ws.crossings[&e].reverse;
    let Some(lb) = left.parts.get(&e) else { return false };
    let Some(rb) = right.parts.get(&e_rev) else { return false };
    if lb.len() != rb.len() {
        return false;
    }
    let cross = ws.crossing_map(e);
    let images: Vec<BTreeSet<pairrank::End>> = lb
        .iter()
        .map(|block| block.iter().map(|end| cross[end]).collect())
        .collect();
    permutations(rb.len()).into_iter().any(|perm| {
        (0..lb.len()).all(|i| images[i] == rb[perm[i]])
    })
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for mut p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
        p.push(n - 1);
    }
    out.sort();
    out.dedup();
    out
}

/// Naive star count: all (center, assignment) combinations validated with
/// the permutation splice test.
pub fn naive_star_count(pieces: &[pairrank::Piece], ws: &WhiteheadSystem) -> usize {
    let mut count = 0usize;
    for center in pieces {
        let support = center.support();
        let candidate_lists: Vec<Vec<usize>> = support
            .iter()
            .map(|&e| {
                pieces
                    .iter()
                    .enumerate()
                    .filter(|(_, q)| naive_splice(center, e, q, ws))
                    .map(|(qi, _)| qi)
                    .collect()
            })
            .collect();
        if candidate_lists.iter().any(|c| c.is_empty()) {
            continue;
        }
        count += candidate_lists.iter().map(|c| c.len()).product::<usize>();
    }
    count
}

// ---------------------------------------------------------------------
// Primitive words: generator and length-descent oracle.
// ---------------------------------------------------------------------

type Letter = i8; // 1 = a, -1 = A, 2 = b, -2 = B

fn reduce(word: &[Letter]) -> Vec<Letter> {
    let mut out: Vec<Letter> = Vec::with_capacity(word.len());
    for &l in word {
        if out.last() == Some(&-l) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

fn cyclic_reduce(mut w: Vec<Letter>) -> Vec<Letter> {
    w = reduce(&w);
    while w.len() >= 2 && w.first().copied() == w.last().map(|&l| -l) {
        w = w[1..w.len() - 1].to_vec();
    }
    w
}

fn letters_to_string(w: &[Letter]) -> String {
    w.iter()
        .map(|&l| match l {
            1 => 'a',
            -1 => 'A',
            2 => 'b',
            -2 => 'B',
            _ => unreachable!(),
        })
        .collect()
}

/// Images of the first basis element under random compositions of
/// elementary automorphisms of the rank-2 free group, cyclically reduced.
pub fn random_primitive_words(seed: u64, count: usize, max_len: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    while out.len() < count {
        let mut u: Vec<Letter> = vec![1];
        let mut v: Vec<Letter> = vec![2];
        let steps = rng.gen_range(1..=10);
        for _ in 0..steps {
            match rng.gen_range(0..6) {
                0 => std::mem::swap(&mut u, &mut v),
                1 => u = u.iter().rev().map(|&l| -l).collect(),
                2 => u = reduce(&[u.clone(), v.clone()].concat()),
                3 => u = reduce(&[v.clone(), u.clone()].concat()),
                4 => {
                    let vinv: Vec<Letter> = v.iter().rev().map(|&l| -l).collect();
                    u = reduce(&[u.clone(), vinv].concat());
                }
                _ => {
                    let vinv: Vec<Letter> = v.iter().rev().map(|&l| -l).collect();
                    u = reduce(&[vinv, u.clone()].concat());
                }
            }
            if u.is_empty() {
                u = vec![1];
            }
        }
        let w = cyclic_reduce(u);
        if w.is_empty() || w.len() > max_len {
            continue;
        }
        let s = letters_to_string(&w);
        if seen.insert(s.clone()) {
            out.push(s);
        }
    }
    out
}

fn whitehead_moves() -> Vec<Box<dyn Fn(Letter) -> Vec<Letter>>> {
    // Type II Whitehead substitutions for rank 2: multiply one generator by
    // another on either side, or conjugate.
    let mut moves: Vec<Box<dyn Fn(Letter) -> Vec<Letter>>> = Vec::new();
    for &target in &[1i8, 2] {
        for &x in &[1i8, -1, 2, -2] {
            if x.abs() == target {
                continue;
            }
            moves.push(Box::new(move |l: Letter| {
                if l == target {
                    vec![l, x]
                } else if l == -target {
                    vec![-x, l]
                } else {
                    vec![l]
                }
            }));
            moves.push(Box::new(move |l: Letter| {
                if l == target {
                    vec![-x, l]
                } else if l == -target {
                    vec![l, x]
                } else {
                    vec![l]
                }
            }));
            moves.push(Box::new(move |l: Letter| {
                if l == target {
                    vec![-x, l, x]
                } else if l == -target {
                    vec![-x, l, x]
                } else {
                    vec![l]
                }
            }));
        }
    }
    moves
}

/// Length-descent primitivity oracle for rank 2: a cyclic word is primitive
/// iff repeated strictly length-reducing Whitehead substitutions drive it
/// to a single letter.
pub fn oracle_is_primitive(word: &str) -> bool {
    let mut w: Vec<Letter> = word
        .chars()
        .map(|c| match c {
            'a' => 1,
            'A' => -1,
            'b' => 2,
            'B' => -2,
            _ => panic!("rank-2 words only"),
        })
        .collect();
    w = cyclic_reduce(w);
    let moves = whitehead_moves();
    loop {
        if w.len() <= 1 {
            return w.len() == 1;
        }
        let mut best: Option<Vec<Letter>> = None;
        for mv in &moves {
            let image: Vec<Letter> = w.iter().flat_map(|&l| mv(l)).collect();
            let image = cyclic_reduce(image);
            if image.len() < w.len() && best.as_ref().map_or(true, |b| image.len() < b.len()) {
                best = Some(image);
            }
        }
        match best {
            Some(next) => w = next,
            None => return false,
        }
    }
}

// ---------------------------------------------------------------------
// Random pairs and fold instances.
// ---------------------------------------------------------------------

pub fn random_cyclic_word(rng: &mut ChaCha8Rng, rank: usize, len: usize) -> String {
    const LOWER: &[u8] = b"abc";
    const UPPER: &[u8] = b"ABC";
    let mut letters: Vec<(usize, bool)> = Vec::new();
    for i in 0..len {
        loop {
            let g = rng.gen_range(0..rank);
            let inv = rng.gen_bool(0.5);
            let bad_prev = i > 0 && letters[i - 1] == (g, !inv);
            let bad_wrap = i == len - 1 && letters[0] == (g, !inv);
            // A single-letter word never cancels itself.
            if !(bad_prev || (bad_wrap && len > 1)) {
                letters.push((g, inv));
                break;
            }
        }
    }
    letters
        .into_iter()
        .map(|(g, inv)| if inv { UPPER[g] as char } else { LOWER[g] as char })
        .collect()
}

pub fn random_pair(rng: &mut ChaCha8Rng) -> GraphPair {
    loop {
        let rank = rng.gen_range(2..=3);
        let words = rng.gen_range(1..=2);
        let lens: Vec<usize> = (0..words).map(|_| rng.gen_range(2..=6)).collect();
        let ws: Vec<String> = lens
            .iter()
            .map(|&l| random_cyclic_word(rng, rank, l))
            .collect();
        let refs: Vec<&str> = ws.iter().map(|s| s.as_str()).collect();
        if let Ok(p) = parse_words(rank, &refs) {
            return p;
        }
    }
}

/// Applies up to `max_steps` random cut-vertex unfolds with random two-sided
/// block splits.
pub fn random_unfolds(rng: &mut ChaCha8Rng, p: &GraphPair, max_steps: usize) -> GraphPair {
    let mut current = p.clone();
    for _ in 0..max_steps {
        let ws = whitehead_system(&current);
        let mut options: Vec<(VertexId, EdgeId, WedgeSides)> = Vec::new();
        for (&y, wh) in &ws.graphs {
            for &v in &wh.vertices {
                if let Some(blocks) = wh.cut_blocks(v) {
                    let k = blocks.len();
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
                        if !side2.is_empty() {
                            options.push((y, v, WedgeSides { side1, side2 }));
                        }
                    }
                }
            }
        }
        if options.is_empty() {
            break;
        }
        let (y, v, sides) = options[rng.gen_range(0..options.len())].clone();
        current = unfold_at(&current, y, v, &sides).expect("valid unfold").0;
    }
    current
}

/// A random pair with an eligible fold: returns the pair and two foldable
/// edges whose fold keeps the multicycle immersed.
pub fn random_fold_instance(rng: &mut ChaCha8Rng) -> (GraphPair, EdgeId, EdgeId) {
    loop {
        let base_pair = random_pair(rng);
        let p = random_unfolds(rng, &base_pair, rng.gen_range(1..=3));
        if p.base.edge_count() > 30 {
            continue;
        }
        let mut candidates = Vec::new();
        for v in p.base.vertices() {
            let star = p.base.star(v);
            for i in 0..star.len() {
                for j in (i + 1)..star.len() {
                    let (e1, e2) = (star[i], star[j]);
                    if p.base.reverse(e1) == e2 || p.base.terminus(e1) == p.base.terminus(e2) {
                        continue;
                    }
                    if let Ok(Some(_)) = pair_fold(&p, e1, e2) {
                        candidates.push((e1, e2));
                    }
                }
            }
        }
        if candidates.is_empty() {
            continue;
        }
        let (e1, e2) = candidates[rng.gen_range(0..candidates.len())];
        return (p, e1, e2);
    }
}

/// Random nonzero integer points of the cone: integer scalings of random
/// rational convex combinations of the given feasible points.
pub fn random_integer_points(
    feasible: &[Vec<Rational>],
    count: usize,
    seed: u64,
) -> Vec<Vec<BigInt>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let k = rng.gen_range(1..=feasible.len().min(3));
        let mut weights: Vec<Rational> = (0..k)
            .map(|_| BigRational::from(BigInt::from(rng.gen_range(1..=6i64))))
            .collect();
        let total: Rational = weights.iter().cloned().sum();
        for w in weights.iter_mut() {
            *w /= &total;
        }
        let n = feasible[0].len();
        let mut point = vec![Rational::zero(); n];
        for (w, idx) in weights.iter().zip(
            rand::seq::index::sample(&mut rng, feasible.len(), k).into_iter(),
        ) {
            for j in 0..n {
                let d = w * &feasible[idx][j];
                point[j] += d;
            }
        }
        let scale = BigRational::from(BigInt::from(rng.gen_range(1..=3i64)));
        for c in point.iter_mut() {
            *c *= &scale;
        }
        if point.iter().all(|c| c.is_zero()) {
            continue;
        }
        out.push(pairrank::integer_point(&point).expect("nonzero nonneg"));
    }
    out
}
