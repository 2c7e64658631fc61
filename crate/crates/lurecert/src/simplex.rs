//! Dense two-phase primal simplex over nonnegative variables with Bland's
//! anti-cycling rule. Sized for the small LPs the multiplier search builds:
//! a few hundred rows, a handful of structural variables.

/// Relation of one linear constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub rel: Relation,
    pub rhs: f64,
}

/// minimize (or maximize) objective . x subject to the constraints, x >= 0.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub maximize: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Values of the structural variables (meaningful when Optimal).
    pub x: Vec<f64>,
    /// Objective value in the caller's orientation (meaningful when Optimal).
    pub objective: f64,
    pub iterations: usize,
}

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;

struct Tableau {
    rows: Vec<Vec<f64>>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    ncols: usize,
    n_structural: usize,
    first_artificial: usize,
    iterations: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.ncols]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v /= piv;
        }
        for i in 0..self.rows.len() {
            if i == row {
                continue;
            }
            let factor = self.rows[i][col];
            if factor != 0.0 {
                for j in 0..=self.ncols {
                    let delta = factor * self.rows[row][j];
                    self.rows[i][j] -= delta;
                }
            }
        }
        let factor = self.obj[col];
        if factor != 0.0 {
            for j in 0..=self.ncols {
                self.obj[j] -= factor * self.rows[row][j];
            }
        }
        self.basis[row] = col;
    }

    /// One simplex phase on the current objective row. `allow` filters the
    /// entering columns. Returns None when optimal within tolerance.
    fn run(&mut self, max_iters: usize, allow: impl Fn(usize) -> bool) -> Option<LpStatus> {
        loop {
            if self.iterations >= max_iters {
                return Some(LpStatus::IterationLimit);
            }
            // Bland: entering column is the lowest index with a reducing cost.
            let mut entering = None;
            for j in 0..self.ncols {
                if allow(j) && self.obj[j] < -COST_TOL {
                    entering = Some(j);
                    break;
                }
            }
            let col = entering?;
            // Leaving row: minimum ratio, ties to the smallest basis index.
            let mut leaving: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][col];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i) / a;
                    let better = match leaving {
                        None => true,
                        Some((best_i, best_r)) => {
                            ratio < best_r - 1e-12
                                || ((ratio - best_r).abs() <= 1e-12
                                    && self.basis[i] < self.basis[best_i])
                        }
                    };
                    if better {
                        leaving = Some((i, ratio));
                    }
                }
            }
            let Some((row, _)) = leaving else { return Some(LpStatus::Unbounded) };
            self.pivot(row, col);
            self.iterations += 1;
        }
    }
}

pub fn solve(problem: &LpProblem, max_iters: usize) -> LpSolution {
    let n = problem.objective.len();
    let m = problem.constraints.len();
    for c in &problem.constraints {
        assert_eq!(c.coeffs.len(), n, "constraint arity must match the objective");
    }
    // Orientation: the tableau always minimizes.
    let sign = if problem.maximize { -1.0 } else { 1.0 };

    // Count auxiliary columns after flipping rows to nonnegative rhs.
    let mut rels = Vec::with_capacity(m);
    for c in &problem.constraints {
        let rel = if c.rhs < 0.0 {
            match c.rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            }
        } else {
            c.rel
        };
        rels.push(rel);
    }
    let n_le = rels.iter().filter(|r| **r == Relation::Le).count();
    let n_ge = rels.iter().filter(|r| **r == Relation::Ge).count();
    let n_eq = rels.iter().filter(|r| **r == Relation::Eq).count();
    let first_aux = n;
    let first_artificial = n + n_le + n_ge;
    let ncols = first_artificial + n_ge + n_eq;

    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut aux_cursor = first_aux;
    let mut art_cursor = first_artificial;
    for (c, &rel) in problem.constraints.iter().zip(&rels) {
        let flip = if c.rhs < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; ncols + 1];
        let mut scale = 0.0f64;
        for &v in &c.coeffs {
            scale = scale.max(v.abs());
        }
        scale = scale.max(c.rhs.abs()).max(1e-12);
        for (j, &v) in c.coeffs.iter().enumerate() {
            row[j] = flip * v / scale;
        }
        row[ncols] = flip * c.rhs / scale;
        match rel {
            Relation::Le => {
                row[aux_cursor] = 1.0;
                basis.push(aux_cursor);
                aux_cursor += 1;
            }
            Relation::Ge => {
                row[aux_cursor] = -1.0;
                aux_cursor += 1;
                row[art_cursor] = 1.0;
                basis.push(art_cursor);
                art_cursor += 1;
            }
            Relation::Eq => {
                row[art_cursor] = 1.0;
                basis.push(art_cursor);
                art_cursor += 1;
            }
        }
        rows.push(row);
    }

    let mut tab = Tableau {
        rows,
        obj: vec![0.0; ncols + 1],
        basis,
        ncols,
        n_structural: n,
        first_artificial,
        iterations: 0,
    };

    // Phase 1: minimize the artificial sum when any artificial is basic.
    if ncols > first_artificial {
        for j in first_artificial..ncols {
            tab.obj[j] = 1.0;
        }
        for i in 0..tab.rows.len() {
            if tab.basis[i] >= first_artificial {
                let factor = tab.obj[tab.basis[i]];
                if factor != 0.0 {
                    for j in 0..=tab.ncols {
                        let delta = factor * tab.rows[i][j];
                        tab.obj[j] -= delta;
                    }
                }
            }
        }
        if let Some(status) = tab.run(max_iters, |_| true) {
            return LpSolution {
                status,
                x: vec![0.0; n],
                objective: f64::NAN,
                iterations: tab.iterations,
            };
        }
        let infeas = -tab.obj[tab.ncols];
        if infeas > 1e-7 {
            return LpSolution {
                status: LpStatus::Infeasible,
                x: vec![0.0; n],
                objective: f64::NAN,
                iterations: tab.iterations,
            };
        }
        // Pivot zero-valued basic artificials out so they cannot reenter the
        // feasible region through later degenerate pivots.
        for i in 0..tab.rows.len() {
            if tab.basis[i] >= first_artificial {
                let col = (0..first_artificial).find(|&j| tab.rows[i][j].abs() > PIVOT_TOL);
                if let Some(col) = col {
                    tab.pivot(i, col);
                }
                // A fully zero row is redundant; its artificial stays basic
                // at value zero and is barred from entering below.
            }
        }
    }

    // Phase 2 objective on structural columns only.
    tab.obj = vec![0.0; ncols + 1];
    for j in 0..n {
        tab.obj[j] = sign * problem.objective[j];
    }
    for i in 0..tab.rows.len() {
        let factor = tab.obj[tab.basis[i]];
        if factor != 0.0 {
            for j in 0..=tab.ncols {
                let delta = factor * tab.rows[i][j];
                tab.obj[j] -= delta;
            }
        }
    }
    let first_artificial = tab.first_artificial;
    if let Some(status) = tab.run(max_iters, |j| j < first_artificial) {
        return LpSolution {
            status,
            x: vec![0.0; n],
            objective: f64::NAN,
            iterations: tab.iterations,
        };
    }

    let mut x = vec![0.0; n];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < tab.n_structural {
            x[b] = tab.rhs(i);
        }
    }
    let objective: f64 = problem.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    LpSolution { status: LpStatus::Optimal, x, objective, iterations: tab.iterations }
}
