//! Exact rational linear programming over the cone: two-phase primal
//! simplex with Bland's rule, no floating point anywhere. The feasible
//! region is the cone intersected with the degree-one slice; it is a
//! bounded polytope, so optima are attained at vertices with rational
//! coordinates, which is what makes the extremal ranks exact fractions.

use std::collections::BTreeSet;

use num::{BigInt, BigRational, One, Signed, Zero};

use crate::error::{Error, Result};
use crate::pieces::{ConeSystem, SparseRow};

pub type Rational = BigRational;
pub type RationalVector = Vec<Rational>;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    ZeroCone,
}

#[derive(Clone, Debug)]
pub struct LpResult {
    pub status: LpStatus,
    /// Value of the rank functional at the vertex (half the doubled row).
    pub optimum: Rational,
    pub vertex: RationalVector,
    /// Basic structural variables of the final tableau, sorted.
    pub basis: Vec<usize>,
    pub pivots: usize,
}

impl LpResult {
    fn zero_cone() -> Self {
        LpResult {
            status: LpStatus::ZeroCone,
            optimum: Rational::zero(),
            vertex: Vec::new(),
            basis: Vec::new(),
            pivots: 0,
        }
    }
}

/// Dense exact tableau in reduced form: basic columns are unit columns and
/// the cost row holds reduced costs for the current basis.
#[derive(Clone)]
struct Tableau {
    structural: usize,
    cols: usize,
    rows: Vec<Vec<Rational>>, // m x (cols + 1), last entry is the rhs
    cost: Vec<Rational>,      // cols + 1, last entry is -objective value
    basis: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    fn new(a: &[Vec<Rational>], b: &[Rational], structural: usize) -> Self {
        let m = a.len();
        let cols = structural + m; // artificial variables fill the basis
        let mut rows = Vec::with_capacity(m);
        for (i, arow) in a.iter().enumerate() {
            let mut row = vec![Rational::zero(); cols + 1];
            row[..structural].clone_from_slice(&arow[..structural]);
            row[structural + i] = Rational::one();
            row[cols] = b[i].clone();
            rows.push(row);
        }
        let basis = (structural..structural + m).collect();
        Tableau { structural, cols, rows, cost: vec![Rational::zero(); cols + 1], basis, pivots: 0 }
    }

    /// Installs reduced costs for the objective `c` (length `cols`).
    fn set_objective(&mut self, c: &[Rational]) {
        let mut cost = vec![Rational::zero(); self.cols + 1];
        cost[..self.cols].clone_from_slice(&c[..self.cols]);
        for (i, &bj) in self.basis.iter().enumerate() {
            if c[bj].is_zero() {
                continue;
            }
            let factor = c[bj].clone();
            for j in 0..=self.cols {
                let delta = &factor * &self.rows[i][j];
                cost[j] -= delta;
            }
        }
        self.cost = cost;
    }

    fn objective_value(&self) -> Rational {
        -self.cost[self.cols].clone()
    }

    fn rhs(&self, i: usize) -> &Rational {
        &self.rows[i][self.cols]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let inv = self.rows[row][col].clone();
        debug_assert!(!inv.is_zero());
        if !inv.is_one() {
            for j in 0..=self.cols {
                if !self.rows[row][j].is_zero() {
                    self.rows[row][j] /= &inv;
                }
            }
        }
        // Zero entries of the pivot row contribute nothing; index them once.
        let support: Vec<usize> =
            (0..=self.cols).filter(|&j| !self.rows[row][j].is_zero()).collect();
        let pivot_row = self.rows[row].clone();
        for i in 0..self.rows.len() {
            if i == row || self.rows[i][col].is_zero() {
                continue;
            }
            let factor = std::mem::replace(&mut self.rows[i][col], Rational::zero());
            for &j in &support {
                if j == col {
                    continue;
                }
                let delta = &factor * &pivot_row[j];
                self.rows[i][j] -= delta;
            }
        }
        if !self.cost[col].is_zero() {
            let factor = std::mem::replace(&mut self.cost[col], Rational::zero());
            for &j in &support {
                if j == col {
                    continue;
                }
                let delta = &factor * &pivot_row[j];
                self.cost[j] -= delta;
            }
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Bland's rule: entering column is the lowest index with positive
    /// reduced cost (maximization), leaving row has the minimal ratio with
    /// the lowest basic variable breaking ties. Artificial columns never
    /// re-enter when `structural_only` is set.
    fn optimize(&mut self, structural_only: bool) -> Result<()> {
        let limit: usize = 2usize
            .saturating_pow(20)
            .max(1000 * (self.cols + 1) * (self.rows.len() + 1));
        loop {
            let span = if structural_only { self.structural } else { self.cols };
            let entering = (0..span).find(|&j| self.cost[j].is_positive());
            let Some(col) = entering else {
                return Ok(());
            };
            let mut leaving: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                if !self.rows[i][col].is_positive() {
                    continue;
                }
                let ratio = self.rhs(i) / &self.rows[i][col];
                match &leaving {
                    None => leaving = Some((i, ratio)),
                    Some((best_i, best)) => {
                        if ratio < *best
                            || (ratio == *best && self.basis[i] < self.basis[*best_i])
                        {
                            leaving = Some((i, ratio));
                        }
                    }
                }
            }
            let Some((row, _)) = leaving else {
                return Err(Error::internal("linear program is unbounded"));
            };
            self.pivot(row, col);
            if self.pivots > limit {
                return Err(Error::internal("pivot limit exceeded"));
            }
        }
    }

    /// Drops the artificial columns once phase 1 has driven them out.
    fn shrink_to_structural(&mut self) {
        let n = self.structural;
        debug_assert!(self.basis.iter().all(|&b| b < n));
        for row in &mut self.rows {
            let rhs = row[self.cols].clone();
            row.truncate(n);
            row.push(rhs);
        }
        let cost_rhs = self.cost[self.cols].clone();
        self.cost.truncate(n);
        self.cost.push(cost_rhs);
        self.cols = n;
    }

    fn vertex(&self) -> RationalVector {
        let mut x = vec![Rational::zero(); self.structural];
        for (i, &bj) in self.basis.iter().enumerate() {
            if bj < self.structural {
                x[bj] = self.rhs(i).clone();
            }
        }
        x
    }

    fn structural_basis(&self) -> Vec<usize> {
        let mut b: Vec<usize> = self.basis.iter().copied().filter(|&j| j < self.structural).collect();
        b.sort();
        b
    }
}

fn rows_to_dense(rows: &[&SparseRow], n: usize) -> Vec<Vec<Rational>> {
    rows.iter()
        .map(|row| {
            let mut dense = vec![Rational::zero(); n];
            for &(j, c) in &row.0 {
                dense[j] = Rational::from(BigInt::from(c));
            }
            dense
        })
        .collect()
}

/// Solves `max c.x` over `{x >= 0, rows = b}` by two-phase simplex.
/// Returns the final tableau on optimality, `None` when infeasible.
fn solve_standard(
    a: Vec<Vec<Rational>>,
    b: Vec<Rational>,
    c: &[Rational],
    n: usize,
) -> Result<Option<Tableau>> {
    // Normalize rhs signs so the artificial basis is feasible.
    let mut a = a;
    let mut b = b;
    for i in 0..a.len() {
        if b[i].is_negative() {
            for v in a[i].iter_mut() {
                *v = -v.clone();
            }
            b[i] = -b[i].clone();
        }
    }
    let mut t = Tableau::new(&a, &b, n);
    // Phase 1: maximize minus the sum of artificials.
    let mut phase1 = vec![Rational::zero(); t.cols];
    for j in n..t.cols {
        phase1[j] = -Rational::one();
    }
    t.set_objective(&phase1);
    t.optimize(false)?;
    if !t.objective_value().is_zero() {
        return Ok(None);
    }
    // Drive artificial variables out of the basis or drop redundant rows.
    let mut drop_rows = Vec::new();
    for i in 0..t.rows.len() {
        if t.basis[i] < n {
            continue;
        }
        match (0..n).find(|&j| !t.rows[i][j].is_zero()) {
            Some(j) => t.pivot(i, j),
            None => {
                debug_assert!(t.rhs(i).is_zero());
                drop_rows.push(i);
            }
        }
    }
    if !drop_rows.is_empty() {
        for &i in drop_rows.iter().rev() {
            t.rows.remove(i);
            t.basis.remove(i);
        }
    }
    // Phase 2 on the real objective over the structural columns only.
    t.shrink_to_structural();
    let mut full_c = vec![Rational::zero(); t.cols];
    full_c[..n].clone_from_slice(&c[..n]);
    t.set_objective(&full_c);
    t.optimize(true)?;
    Ok(Some(t))
}

fn cone_constraints(cone: &ConeSystem) -> (Vec<Vec<Rational>>, Vec<Rational>) {
    let n = cone.variable_count();
    let mut sparse: Vec<&SparseRow> = Vec::new();
    for row in cone.equality_rows() {
        if !row.0.is_empty() {
            sparse.push(row);
        }
    }
    let mut a = rows_to_dense(&sparse, n);
    let mut b = vec![Rational::zero(); a.len()];
    let mut n_dense = vec![Rational::zero(); n];
    for &(j, c) in &cone.n_row.0 {
        n_dense[j] = Rational::from(BigInt::from(c));
    }
    a.push(n_dense);
    b.push(Rational::one());
    (a, b)
}

fn chi_objective(cone: &ConeSystem, sign: i64) -> Vec<Rational> {
    let n = cone.variable_count();
    let mut c = vec![Rational::zero(); n];
    for &(j, coeff) in &cone.chi2_row.0 {
        c[j] = Rational::new(BigInt::from(sign * coeff), BigInt::from(2));
    }
    c
}

fn optimize_rank(cone: &ConeSystem, sign: i64) -> Result<LpResult> {
    if cone.variable_count() == 0 || cone.n_row.0.is_empty() {
        return Ok(LpResult::zero_cone());
    }
    let (a, b) = cone_constraints(cone);
    let c = chi_objective(cone, sign);
    match solve_standard(a, b, &c, cone.variable_count())? {
        Some(t) => {
            let optimum = if sign >= 0 { t.objective_value() } else { -t.objective_value() };
            Ok(LpResult {
                status: LpStatus::Optimal,
                optimum,
                vertex: t.vertex(),
                basis: t.structural_basis(),
                pivots: t.pivots,
            })
        }
        None => {
            // The slice n = 1 is empty. For cone systems this means the
            // cone is zero; confirm by maximizing n over the capped cone.
            if cone_is_zero(cone)? {
                Ok(LpResult::zero_cone())
            } else {
                Ok(LpResult {
                    status: LpStatus::Infeasible,
                    optimum: Rational::zero(),
                    vertex: Vec::new(),
                    basis: Vec::new(),
                    pivots: 0,
                })
            }
        }
    }
}

/// True iff the only solution of the homogeneous system is zero: maximize
/// the degree functional over the cone capped by `sum x <= 1`.
fn cone_is_zero(cone: &ConeSystem) -> Result<bool> {
    let n = cone.variable_count();
    if n == 0 {
        return Ok(true);
    }
    let mut sparse: Vec<&SparseRow> = Vec::new();
    for row in cone.equality_rows() {
        if !row.0.is_empty() {
            sparse.push(row);
        }
    }
    let mut a = rows_to_dense(&sparse, n + 1); // slack for the cap
    let mut b = vec![Rational::zero(); a.len()];
    let mut cap = vec![Rational::one(); n + 1];
    cap[n] = Rational::one();
    a.push(cap);
    b.push(Rational::one());
    let mut c = vec![Rational::zero(); n + 1];
    for &(j, coeff) in &cone.n_row.0 {
        c[j] = Rational::from(BigInt::from(coeff));
    }
    // Also reward any mass at all, so nonzero cones with a degenerate
    // degree functional are still detected.
    let t = solve_standard(a, b, &c, n + 1)?
        .ok_or_else(|| Error::internal("capped cone check cannot be infeasible"))?;
    Ok(t.objective_value().is_zero())
}

/// Maximizes the rank functional over the degree-one slice of the cone.
pub fn maximize_rank(cone: &ConeSystem) -> Result<LpResult> {
    optimize_rank(cone, 1)
}

/// Minimizes the rank functional over the degree-one slice of the cone.
pub fn minimize_rank(cone: &ConeSystem) -> Result<LpResult> {
    optimize_rank(cone, -1)
}

/// Scales a nonnegative nonzero rational vector by the least common
/// multiple of its denominators. No gcd reduction is applied, so the result
/// is an integer multiple of the input direction with the smallest scale
/// that clears denominators.
pub fn integer_point(v: &[Rational]) -> Result<Vec<BigInt>> {
    if v.iter().all(|c| c.is_zero()) {
        return Err(Error::invalid("cannot scale the zero vector"));
    }
    if v.iter().any(|c| c.is_negative()) {
        return Err(Error::invalid("vector must be nonnegative"));
    }
    let mut scale = BigInt::one();
    for c in v {
        scale = num::integer::lcm(scale, c.denom().clone());
    }
    Ok(v.iter()
        .map(|c| {
            let scaled = c * Rational::from(scale.clone());
            debug_assert!(scaled.is_integer());
            scaled.to_integer()
        })
        .collect())
}

/// As [`integer_point`], then divided by the gcd of the entries.
pub fn primitive_integer_point(v: &[Rational]) -> Result<Vec<BigInt>> {
    let x = integer_point(v)?;
    let mut g = BigInt::zero();
    for c in &x {
        g = num::integer::gcd(g, c.clone());
    }
    Ok(x.into_iter().map(|c| c / &g).collect())
}

#[derive(Clone, Debug)]
pub struct FaceVertices {
    pub vertices: Vec<RationalVector>,
    /// True when the whole optimal face was enumerated within budget.
    pub exhaustive: bool,
}

/// Walks the optimal face by degenerate pivots on zero-reduced-cost
/// columns, breadth-first over bases with canonical dedup, collecting up to
/// `max(budget, 1)` distinct vertices. The starting vertex of `r` is always
/// included and budget 0 returns it alone.
pub fn optimal_face_vertices(
    cone: &ConeSystem,
    r: &LpResult,
    budget: usize,
) -> Result<FaceVertices> {
    if r.status != LpStatus::Optimal {
        return Err(Error::invalid("face enumeration requires an optimal result"));
    }
    let (a, b) = cone_constraints(cone);
    let c = chi_objective(cone, 1);
    // Re-solve both senses to recover a tableau at the face: the stored
    // basis is re-derived deterministically because the solver is.
    let sign = if r.optimum == max_value(cone)? { 1 } else { -1 };
    let c = if sign >= 0 { c } else { chi_objective(cone, -1) };
    let t0 = solve_standard(a, b, &c, cone.variable_count())?
        .ok_or_else(|| Error::internal("optimal result for an infeasible system"))?;

    let cap = budget.max(1);
    let mut vertices: Vec<RationalVector> = Vec::new();
    let mut seen_vertices: BTreeSet<RationalVector> = BTreeSet::new();
    let mut seen_bases: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut queue = std::collections::VecDeque::new();
    let mut exhaustive = true;

    let push_vertex = |t: &Tableau,
                       vertices: &mut Vec<RationalVector>,
                       seen: &mut BTreeSet<RationalVector>| {
        let v = t.vertex();
        if seen.insert(v.clone()) {
            vertices.push(v);
            true
        } else {
            false
        }
    };

    seen_bases.insert(t0.basis.clone());
    push_vertex(&t0, &mut vertices, &mut seen_vertices);
    if budget == 0 {
        return Ok(FaceVertices { vertices, exhaustive: false });
    }
    queue.push_back(t0);

    // Degenerate faces can have far more bases than vertices; bound the
    // basis walk so highly degenerate polytopes stay tractable.
    let base_budget = 200 + 50 * cap;

    while let Some(t) = queue.pop_front() {
        if seen_bases.len() >= base_budget {
            exhaustive = false;
            break;
        }
        for col in 0..t.structural {
            if t.basis.contains(&col) || !t.cost[col].is_zero() {
                continue;
            }
            // Ratio test for a feasible pivot in this column.
            let mut leaving: Option<(usize, Rational)> = None;
            for i in 0..t.rows.len() {
                if !t.rows[i][col].is_positive() {
                    continue;
                }
                let ratio = t.rhs(i) / &t.rows[i][col];
                match &leaving {
                    None => leaving = Some((i, ratio)),
                    Some((bi, best)) => {
                        if ratio < *best || (ratio == *best && t.basis[i] < t.basis[*bi]) {
                            leaving = Some((i, ratio));
                        }
                    }
                }
            }
            let Some((row, _)) = leaving else { continue };
            let mut next = t.clone();
            next.pivot(row, col);
            if !seen_bases.insert(next.basis.clone()) {
                continue;
            }
            if push_vertex(&next, &mut vertices, &mut seen_vertices) && vertices.len() >= cap {
                return Ok(FaceVertices { vertices, exhaustive: false });
            }
            queue.push_back(next);
        }
    }
    Ok(FaceVertices { vertices, exhaustive })
}

fn max_value(cone: &ConeSystem) -> Result<Rational> {
    Ok(maximize_rank(cone)?.optimum)
}

/// Exact zero-residual check of a rational point against every row.
pub fn residuals_are_zero(cone: &ConeSystem, x: &[Rational]) -> bool {
    cone.equality_rows().all(|row| row.eval_rat(x).is_zero())
        && (cone.n_row.eval_rat(x) - Rational::one()).is_zero()
}
