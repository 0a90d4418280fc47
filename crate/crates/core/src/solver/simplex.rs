//! Dense-tableau two-phase simplex with bounded variables.
//!
//! Every row gets a slack (`A x + s = b`); the slack bounds encode the sense.
//! Rows whose slack cannot absorb the initial residual receive an artificial
//! column, and phase I minimises the sum of artificials. Nonbasic variables
//! sit at a finite bound, or at zero when free.

use super::{PivotRule, Sense, SolverError, SolverOptions};

pub(crate) struct DenseLp {
    pub rows: usize,
    pub cols: usize,
    /// Row-major, `rows * cols`.
    pub a: Vec<f64>,
    pub rhs: Vec<f64>,
    pub sense: Vec<Sense>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub cost: Vec<f64>,
}

#[derive(Debug)]
pub(crate) enum Outcome {
    Optimal { x: Vec<f64>, iterations: usize },
    Infeasible { iterations: usize },
    Unbounded { iterations: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Basic,
    AtLower,
    AtUpper,
    FreeZero,
}

const DUAL_TOL: f64 = 1e-9;
const HARRIS_TOL: f64 = 1e-9;

struct Tableau {
    m: usize,
    /// Total columns (structural + slack + artificial); the tableau row has
    /// one extra trailing entry holding `B^-1 b`.
    n: usize,
    width: usize,
    t: Vec<f64>,
    /// Initial tableau, whose basis is the identity.
    t0: Vec<f64>,
    basis: Vec<usize>,
    status: Vec<Status>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Values of the basic variables, by row.
    xb: Vec<f64>,
    d: Vec<f64>,
    cost: Vec<f64>,
    first_artificial: usize,
    iterations: usize,
    bland: bool,
    stall: usize,
}

enum Step {
    Optimal,
    Unbounded,
    Continue,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width + j]
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.status[j] {
            Status::AtLower => self.lower[j],
            Status::AtUpper => self.upper[j],
            Status::FreeZero => 0.0,
            Status::Basic => unreachable!("basic variable has no nonbasic value"),
        }
    }

    fn value(&self, j: usize) -> f64 {
        if self.status[j] == Status::Basic {
            let row = self.basis.iter().position(|&b| b == j).expect("basic column in basis");
            self.xb[row]
        } else {
            self.nonbasic_value(j)
        }
    }

    fn recompute_reduced_costs(&mut self) {
        for j in 0..self.n {
            let mut dj = self.cost[j];
            for i in 0..self.m {
                let cb = self.cost[self.basis[i]];
                if cb != 0.0 {
                    dj -= cb * self.at(i, j);
                }
            }
            self.d[j] = dj;
        }
        for i in 0..self.m {
            self.d[self.basis[i]] = 0.0;
        }
    }

    /// `x_B = B^-1 b - sum_{nonbasic} (B^-1 A_j) x_j`
    fn recompute_basic_values(&mut self) {
        let nb: Vec<(usize, f64)> = (0..self.n)
            .filter(|&j| self.status[j] != Status::Basic)
            .map(|j| (j, self.nonbasic_value(j)))
            .filter(|&(_, v)| v != 0.0)
            .collect();
        for i in 0..self.m {
            let mut v = self.at(i, self.n);
            for &(j, xj) in &nb {
                v -= self.at(i, j) * xj;
            }
            self.xb[i] = v;
        }
    }

    fn worst_basic_violation(&self) -> f64 {
        (0..self.m)
            .map(|i| {
                let k = self.basis[i];
                (self.lower[k] - self.xb[i]).max(self.xb[i] - self.upper[k]).max(0.0)
            })
            .fold(0.0, f64::max)
    }

    /// Rebuilds `B^-1 [A | b]` from the initial tableau for the current basis,
    /// discarding accumulated round-off.
    fn refactor(&mut self) -> bool {
        let w = self.width;
        let mut t = self.t0.clone();
        let mut assigned = vec![false; self.m];
        let mut basis = vec![usize::MAX; self.m];
        let mut cols = self.basis.clone();
        cols.sort_unstable();
        for &q in &cols {
            let Some(r) = (0..self.m)
                .filter(|&i| !assigned[i])
                .max_by(|&a, &b| t[a * w + q].abs().total_cmp(&t[b * w + q].abs()))
            else {
                return false;
            };
            let p = t[r * w + q];
            if p.abs() < 1e-11 {
                return false;
            }
            for x in &mut t[r * w..(r + 1) * w] {
                *x /= p;
            }
            let pivot_row: Vec<f64> = t[r * w..(r + 1) * w].to_vec();
            for i in 0..self.m {
                if i == r {
                    continue;
                }
                let f = t[i * w + q];
                if f == 0.0 {
                    continue;
                }
                for (x, &pr) in t[i * w..(i + 1) * w].iter_mut().zip(&pivot_row) {
                    if pr != 0.0 {
                        *x -= f * pr;
                    }
                }
                t[i * w + q] = 0.0;
            }
            assigned[r] = true;
            basis[r] = q;
        }
        self.t = t;
        self.basis = basis;
        self.recompute_basic_values();
        self.recompute_reduced_costs();
        true
    }

    fn eligible(&self, j: usize) -> Option<f64> {
        if self.upper[j] - self.lower[j] <= 0.0 && self.status[j] != Status::FreeZero {
            return None;
        }
        let dj = self.d[j];
        match self.status[j] {
            Status::Basic => None,
            Status::AtLower if dj < -DUAL_TOL => Some(1.0),
            Status::AtUpper if dj > DUAL_TOL => Some(-1.0),
            Status::FreeZero if dj.abs() > DUAL_TOL => Some(if dj < 0.0 { 1.0 } else { -1.0 }),
            _ => None,
        }
    }

    fn choose_entering(&self) -> Option<(usize, f64)> {
        if self.bland {
            return (0..self.n).find_map(|j| self.eligible(j).map(|dir| (j, dir)));
        }
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.n {
            if let Some(dir) = self.eligible(j) {
                let score = self.d[j].abs();
                if best.is_none_or(|(_, _, s)| score > s) {
                    best = Some((j, dir, score));
                }
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    /// Exact and tolerance-relaxed step lengths at which row `i` blocks.
    fn row_limit(&self, i: usize, alpha: f64) -> Option<(f64, f64)> {
        let k = self.basis[i];
        if alpha > 0.0 {
            self.lower[k].is_finite().then(|| {
                let room = self.xb[i] - self.lower[k];
                (room.max(0.0) / alpha, (room + HARRIS_TOL).max(0.0) / alpha)
            })
        } else {
            self.upper[k].is_finite().then(|| {
                let room = self.upper[k] - self.xb[i];
                (room.max(0.0) / -alpha, (room + HARRIS_TOL).max(0.0) / -alpha)
            })
        }
    }

    /// Minimum-ratio test, ties to the smallest basic index.
    fn ratio_bland(&self, q: usize, dir: f64, flip: f64, opts: &SolverOptions) -> (f64, Option<(usize, f64)>) {
        let mut theta = flip;
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..self.m {
            let alpha = dir * self.at(i, q);
            if alpha.abs() <= opts.pivot_tol {
                continue;
            }
            let Some((limit, _)) = self.row_limit(i, alpha) else { continue };
            let replace = match leave {
                None => limit < theta,
                Some((r, _)) => {
                    limit < theta - 1e-12 || (limit <= theta + 1e-12 && self.basis[i] < self.basis[r])
                }
            };
            if replace {
                theta = theta.min(limit);
                leave = Some((i, alpha));
            }
        }
        (theta, leave)
    }

    /// Two-pass Harris test: among rows blocking within the relaxed step,
    /// pivot on the largest `|alpha|`.
    fn ratio_harris(&self, q: usize, dir: f64, flip: f64, opts: &SolverOptions) -> (f64, Option<(usize, f64)>) {
        let mut relaxed = f64::INFINITY;
        for i in 0..self.m {
            let alpha = dir * self.at(i, q);
            if alpha.abs() > opts.pivot_tol {
                if let Some((_, r)) = self.row_limit(i, alpha) {
                    relaxed = relaxed.min(r);
                }
            }
        }
        if flip <= relaxed {
            return (flip, None);
        }
        if !relaxed.is_finite() {
            return (f64::INFINITY, None);
        }
        let mut best: Option<(usize, f64, f64)> = None;
        for i in 0..self.m {
            let alpha = dir * self.at(i, q);
            if alpha.abs() <= opts.pivot_tol {
                continue;
            }
            if let Some((limit, _)) = self.row_limit(i, alpha) {
                if limit <= relaxed && best.is_none_or(|(_, a, _)| alpha.abs() > a.abs()) {
                    best = Some((i, alpha, limit));
                }
            }
        }
        match best {
            Some((i, alpha, limit)) => (limit, Some((i, alpha))),
            None => (relaxed, None),
        }
    }

    fn step(&mut self, opts: &SolverOptions) -> Step {
        let Some((q, dir)) = self.choose_entering() else {
            return Step::Optimal;
        };
        let flip = self.upper[q] - self.lower[q];
        let flip = if flip.is_finite() { flip } else { f64::INFINITY };
        let (theta, leave) = if self.bland { self.ratio_bland(q, dir, flip, opts) } else { self.ratio_harris(q, dir, flip, opts) };
        if !theta.is_finite() {
            return Step::Unbounded;
        }

        self.iterations += 1;
        if theta <= 1e-12 {
            self.stall += 1;
        } else {
            self.stall = 0;
        }
        if opts.pivot_rule == PivotRule::DantzigWithStallGuard && self.stall > 2 * (self.m + self.n) {
            self.bland = true;
        }

        let entering_value = self.nonbasic_value(q) + dir * theta;
        for i in 0..self.m {
            let tq = self.at(i, q);
            if tq != 0.0 {
                self.xb[i] -= dir * theta * tq;
            }
        }

        match leave {
            Some((r, alpha)) => {
                let k = self.basis[r];
                self.status[k] = if alpha > 0.0 { Status::AtLower } else { Status::AtUpper };
                self.pivot(r, q);
                self.status[q] = Status::Basic;
                self.xb[r] = entering_value;
            }
            _ => {
                self.status[q] = if dir > 0.0 { Status::AtUpper } else { Status::AtLower };
            }
        }
        Step::Continue
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.width;
        let p = self.t[r * w + q];
        for j in 0..w {
            self.t[r * w + j] /= p;
        }
        let pivot_row: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * w..(i + 1) * w];
            for (x, &pr) in row.iter_mut().zip(&pivot_row) {
                if pr != 0.0 {
                    *x -= f * pr;
                }
            }
            row[q] = 0.0;
        }
        let dq = self.d[q];
        if dq != 0.0 {
            for j in 0..self.n {
                self.d[j] -= dq * pivot_row[j];
            }
            self.d[q] = 0.0;
        }
        self.basis[r] = q;
    }

    fn run(&mut self, opts: &SolverOptions, limit: usize) -> Result<Step, SolverError> {
        let mut since_refresh = 0;
        loop {
            if self.iterations >= limit {
                return Err(SolverError::IterationLimit(self.iterations));
            }
            match self.step(opts) {
                Step::Continue => {
                    since_refresh += 1;
                    if since_refresh >= 50 {
                        self.recompute_basic_values();
                        since_refresh = 0;
                    }
                }
                other => {
                    self.recompute_basic_values();
                    return Ok(other);
                }
            }
        }
    }
}

pub(crate) fn solve(lp: &DenseLp, opts: &SolverOptions) -> Result<Outcome, SolverError> {
    let (m, nc) = (lp.rows, lp.cols);

    let mut lower = lp.lower.clone();
    let mut upper = lp.upper.clone();
    let mut status = Vec::with_capacity(nc + m);
    let mut x0 = Vec::with_capacity(nc);
    for j in 0..nc {
        let (s, v) = if lower[j].is_finite() {
            (Status::AtLower, lower[j])
        } else if upper[j].is_finite() {
            (Status::AtUpper, upper[j])
        } else {
            (Status::FreeZero, 0.0)
        };
        status.push(s);
        x0.push(v);
    }
    for i in 0..m {
        let (l, u) = match lp.sense[i] {
            Sense::Le => (0.0, f64::INFINITY),
            Sense::Ge => (f64::NEG_INFINITY, 0.0),
            Sense::Eq => (0.0, 0.0),
        };
        lower.push(l);
        upper.push(u);
    }

    // Residual each slack must absorb; rows that cannot get an artificial.
    let mut art_rows = Vec::new();
    let mut row_sign = vec![1.0; m];
    let mut slack_basic = vec![true; m];
    let mut xb = vec![0.0; m];
    for i in 0..m {
        let r = lp.rhs[i] - (0..nc).map(|j| lp.a[i * nc + j] * x0[j]).sum::<f64>();
        let (l, u) = (lower[nc + i], upper[nc + i]);
        if r >= l - opts.feas_tol && r <= u + opts.feas_tol {
            xb[i] = r;
        } else {
            let sb = r.clamp(l, u);
            let diff = r - sb;
            row_sign[i] = diff.signum();
            slack_basic[i] = false;
            art_rows.push(i);
            xb[i] = diff.abs();
        }
    }
    for i in 0..m {
        if slack_basic[i] {
            status.push(Status::Basic);
        } else {
            let sb = (lp.rhs[i] - (0..nc).map(|j| lp.a[i * nc + j] * x0[j]).sum::<f64>())
                .clamp(lower[nc + i], upper[nc + i]);
            status.push(if sb == lower[nc + i] { Status::AtLower } else { Status::AtUpper });
        }
    }
    let n_art = art_rows.len();
    for _ in 0..n_art {
        lower.push(0.0);
        upper.push(f64::INFINITY);
        status.push(Status::Basic);
    }
    let n = nc + m + n_art;
    let width = n + 1;
    let mut t = vec![0.0; m * width];
    let mut basis = vec![0; m];
    let mut art_of_row = vec![usize::MAX; m];
    for (k, &i) in art_rows.iter().enumerate() {
        art_of_row[i] = nc + m + k;
    }
    for i in 0..m {
        let s = row_sign[i];
        let row = &mut t[i * width..(i + 1) * width];
        for j in 0..nc {
            row[j] = s * lp.a[i * nc + j];
        }
        row[nc + i] = s;
        row[n] = s * lp.rhs[i];
        if art_of_row[i] != usize::MAX {
            row[art_of_row[i]] = 1.0;
            basis[i] = art_of_row[i];
        } else {
            basis[i] = nc + i;
        }
    }

    let mut cost = vec![0.0; n];
    for c in cost.iter_mut().skip(nc + m) {
        *c = 1.0;
    }
    let mut tab = Tableau {
        m,
        n,
        width,
        t0: t.clone(),
        t,
        basis,
        status,
        lower,
        upper,
        xb,
        d: vec![0.0; n],
        cost,
        first_artificial: nc + m,
        iterations: 0,
        bland: opts.pivot_rule == PivotRule::Bland,
        stall: 0,
    };
    let limit = 200 * (m + n) + 10_000;

    if n_art > 0 {
        tab.recompute_basic_values();
        tab.recompute_reduced_costs();
        tab.run(opts, limit)?;
        let infeas: f64 = (0..m)
            .filter(|&i| tab.basis[i] >= tab.first_artificial)
            .map(|i| tab.xb[i].max(0.0))
            .sum();
        let scale = 1.0 + lp.rhs.iter().fold(0.0_f64, |acc, b| acc.max(b.abs()));
        if infeas > opts.feas_tol * scale {
            return Ok(Outcome::Infeasible { iterations: tab.iterations });
        }
        // Pin artificials to zero and pivot them out of the basis where possible.
        for j in tab.first_artificial..n {
            tab.upper[j] = 0.0;
            if tab.status[j] != Status::Basic {
                tab.status[j] = Status::AtLower;
            }
        }
        for r in 0..m {
            if tab.basis[r] < tab.first_artificial {
                continue;
            }
            let candidate = (0..tab.first_artificial)
                .filter(|&j| tab.status[j] != Status::Basic)
                .max_by(|&a, &b| tab.at(r, a).abs().total_cmp(&tab.at(r, b).abs()));
            if let Some(j) = candidate {
                if tab.at(r, j).abs() > opts.pivot_tol.max(1e-7) {
                    let old = tab.basis[r];
                    let value = tab.nonbasic_value(j);
                    tab.pivot(r, j);
                    tab.status[old] = Status::AtLower;
                    tab.status[j] = Status::Basic;
                    tab.xb[r] = value;
                }
            }
        }
        tab.recompute_basic_values();
        tab.bland = opts.pivot_rule == PivotRule::Bland;
        tab.stall = 0;
    }

    for j in 0..n {
        tab.cost[j] = if j < nc { lp.cost[j] } else { 0.0 };
    }
    tab.recompute_reduced_costs();
    let mut outcome = tab.run(opts, limit)?;
    for _ in 0..3 {
        if !matches!(outcome, Step::Optimal) || tab.worst_basic_violation() <= 1e-9 {
            break;
        }
        if !tab.refactor() {
            break;
        }
        if tab.worst_basic_violation() > opts.feas_tol {
            break;
        }
        outcome = tab.run(opts, limit)?;
    }
    match outcome {
        Step::Unbounded => Ok(Outcome::Unbounded { iterations: tab.iterations }),
        _ => {
            let x = (0..nc).map(|j| tab.value(j)).collect();
            Ok(Outcome::Optimal { x, iterations: tab.iterations })
        }
    }
}
