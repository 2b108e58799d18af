//! Bounded-variable revised simplex with a dense basis inverse.
//!
//! The engine works on the structured layout from the parent module: every
//! column has at most two unit-magnitude entries, all lower bounds are
//! zero, and upper bounds are either zero (fixed variables, including the
//! logical columns of equality rows) or infinite. Nonbasic variables
//! therefore always sit at zero, which keeps the primal update to
//! `x_B = B^-1 b`.
//!
//! Feasibility is restored by a residual-driven phase that treats each
//! out-of-bounds basic variable as a unit cost and prices against that
//! composite objective; a problem is declared infeasible when this phase
//! bottoms out with equality-row logicals still carrying flow beyond the
//! feasibility tolerance. Warm starts reuse the basis and inverse from a
//! previous solve unmodified, since bound changes never touch the matrix.
//!
//! The basis inverse is refreshed by exploiting the two-entry column
//! structure: a singleton-row elimination orders the whole basis into
//! triangular form in O(rows^2). (Elimination cannot stall on a valid
//! basis: any leftover block would be a cycle, and cycles in this matrix
//! are always singular.) Residual checks every few dozen pivots trigger a
//! refresh when the product-form updates have drifted.

use super::{ColEntries, LpLayout};

const PIVOT_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const DEGEN_STEP: f64 = 1e-10;
const STALL_LIMIT: usize = 1000;
const RESIDUAL_CHECK_EVERY: usize = 64;
const REFRESH_EVERY: usize = 2000;
const NONBASIC: u32 = u32::MAX;

/// A simplex basis together with its dense inverse, reusable across solves
/// of LPs that share an instance.
#[derive(Debug, Clone)]
pub struct Basis {
    pub(crate) basic: Vec<usize>,
    pub(crate) var_row: Vec<u32>,
    pub(crate) binv: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RawStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

pub(crate) struct RawSolution {
    pub status: RawStatus,
    /// Value per column, structural then logical.
    pub values: Vec<f64>,
    /// Dual value per row at the final basis.
    pub duals: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub certified: bool,
    pub basis: Basis,
}

enum PhaseOutcome {
    Done,
    Infeasible,
    Unbounded,
    IterationLimit,
    /// Numerical trouble; the basis was refreshed, caller should re-enter.
    Retry,
}

pub(crate) struct Engine<'a> {
    lp: &'a LpLayout<'a>,
    nrows: usize,
    ncols: usize,
    feas_tol: f64,
    iter_limit: usize,
    basic: Vec<usize>,
    var_row: Vec<u32>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    pi: Vec<f64>,
    alpha: Vec<f64>,
    iterations: usize,
    stall: usize,
    bland: bool,
    /// True right after a refresh with no pivots since.
    fresh: bool,
    rhs_scale: f64,
}

impl<'a> Engine<'a> {
    pub(crate) fn new(
        lp: &'a LpLayout<'a>,
        feas_tol: f64,
        iter_limit: usize,
        warm: Option<&Basis>,
    ) -> Self {
        let nrows = lp.nrows();
        let ncols = lp.ncols();
        let rhs_scale = 1.0 + lp.rhs().iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let mut engine = Engine {
            lp,
            nrows,
            ncols,
            feas_tol,
            iter_limit,
            basic: Vec::new(),
            var_row: Vec::new(),
            binv: Vec::new(),
            xb: vec![0.0; nrows],
            pi: vec![0.0; nrows],
            alpha: vec![0.0; nrows],
            iterations: 0,
            stall: 0,
            bland: false,
            fresh: false,
            rhs_scale,
        };
        match warm {
            Some(basis) if basis.basic.len() == nrows && basis.var_row.len() == ncols => {
                engine.basic = basis.basic.clone();
                engine.var_row = basis.var_row.clone();
                engine.binv = basis.binv.clone();
            }
            _ => engine.install_logical_basis(),
        }
        engine.compute_xb();
        engine
    }

    fn install_logical_basis(&mut self) {
        let n = self.nrows;
        let logical0 = self.ncols - n;
        self.basic = (0..n).map(|r| logical0 + r).collect();
        self.var_row = vec![NONBASIC; self.ncols];
        for r in 0..n {
            self.var_row[logical0 + r] = r as u32;
        }
        self.binv = vec![0.0; n * n];
        for r in 0..n {
            self.binv[r * n + r] = 1.0;
        }
        self.fresh = true;
    }

    pub(crate) fn solve(mut self) -> RawSolution {
        let mut rounds = 0usize;
        let status = loop {
            rounds += 1;
            if rounds > 32 {
                break RawStatus::IterationLimit;
            }
            if self.max_violation() > self.feas_tol {
                match self.run_phase(true) {
                    PhaseOutcome::Done => {}
                    PhaseOutcome::Infeasible => break RawStatus::Infeasible,
                    PhaseOutcome::IterationLimit => break RawStatus::IterationLimit,
                    PhaseOutcome::Retry => continue,
                    PhaseOutcome::Unbounded => unreachable!("phase 1 cannot be unbounded"),
                }
            }
            match self.run_phase(false) {
                PhaseOutcome::Done => {
                    // Certify from a fresh factorization before declaring
                    // optimality; drift can hide either primal or dual
                    // infeasibility.
                    if !self.fresh {
                        self.refresh();
                        continue;
                    }
                    if self.max_violation() > self.feas_tol {
                        continue;
                    }
                    self.compute_duals();
                    if self.price(false).is_some() {
                        continue;
                    }
                    break RawStatus::Optimal;
                }
                PhaseOutcome::Unbounded => break RawStatus::Unbounded,
                PhaseOutcome::IterationLimit => break RawStatus::IterationLimit,
                PhaseOutcome::Retry => continue,
                PhaseOutcome::Infeasible => unreachable!("phase 2 cannot be infeasible"),
            }
        };

        let certified = status == RawStatus::Optimal || status == RawStatus::Infeasible;
        if status != RawStatus::Optimal {
            self.compute_duals();
        }
        let mut values = vec![0.0; self.ncols];
        for (pos, &col) in self.basic.iter().enumerate() {
            values[col] = self.xb[pos];
        }
        let objective = self
            .basic
            .iter()
            .enumerate()
            .map(|(pos, &col)| self.lp.cost(col) * self.xb[pos])
            .sum();
        RawSolution {
            status,
            values,
            duals: self.pi.clone(),
            objective,
            iterations: self.iterations,
            certified,
            basis: Basis {
                basic: self.basic,
                var_row: self.var_row,
                binv: self.binv,
            },
        }
    }

    /// Runs pricing/ratio/pivot until the phase objective is optimal or a
    /// budget is hit. `phase1` prices against the infeasibility gradient,
    /// otherwise against the real costs.
    fn run_phase(&mut self, phase1: bool) -> PhaseOutcome {
        loop {
            if self.iterations >= self.iter_limit {
                return PhaseOutcome::IterationLimit;
            }
            if self.iterations.is_multiple_of(RESIDUAL_CHECK_EVERY) && !self.fresh {
                self.hygiene();
            }
            if phase1 && self.max_violation() <= self.feas_tol {
                return PhaseOutcome::Done;
            }
            if phase1 {
                self.compute_phase1_duals();
            } else {
                self.compute_duals();
            }
            let entering = self.price(phase1);
            let Some(j) = entering else {
                if phase1 {
                    // Re-verify from a clean factorization before giving up.
                    if !self.fresh {
                        self.refresh();
                        return PhaseOutcome::Retry;
                    }
                    return PhaseOutcome::Infeasible;
                }
                return PhaseOutcome::Done;
            };
            self.ftran(j);
            let ratio = if phase1 {
                self.ratio_phase1()
            } else {
                self.ratio_phase2()
            };
            match ratio {
                Some((pos, step)) => self.pivot(pos, j, step),
                None => {
                    if phase1 {
                        // An improving direction must hit a blocking bound;
                        // failing to find one is numerical noise.
                        if !self.fresh {
                            self.refresh();
                            return PhaseOutcome::Retry;
                        }
                        return PhaseOutcome::IterationLimit;
                    }
                    return PhaseOutcome::Unbounded;
                }
            }
        }
    }

    // ----- linear algebra -------------------------------------------------

    fn compute_xb(&mut self) {
        let n = self.nrows;
        let rhs = self.lp.rhs();
        for r in 0..n {
            let row = &self.binv[r * n..(r + 1) * n];
            let mut acc = 0.0;
            for (k, &b) in rhs.iter().enumerate() {
                if b != 0.0 {
                    acc += row[k] * b;
                }
            }
            self.xb[r] = acc;
        }
    }

    /// Row duals for the real objective: `pi = c_B^T B^-1`.
    fn compute_duals(&mut self) {
        self.pi.fill(0.0);
        let n = self.nrows;
        for (pos, &col) in self.basic.iter().enumerate() {
            let c = self.lp.cost(col);
            if c != 0.0 {
                let row = &self.binv[pos * n..(pos + 1) * n];
                for (p, &b) in row.iter().enumerate() {
                    self.pi[p] += c * b;
                }
            }
        }
    }

    /// Row duals for the infeasibility objective: each basic variable
    /// below zero contributes -1, above its (zero) upper bound +1.
    fn compute_phase1_duals(&mut self) {
        self.pi.fill(0.0);
        let n = self.nrows;
        for pos in 0..n {
            let val = self.xb[pos];
            let w = if val < -self.feas_tol {
                -1.0
            } else if self.lp.is_fixed(self.basic[pos]) && val > self.feas_tol {
                1.0
            } else {
                continue;
            };
            let row = &self.binv[pos * n..(pos + 1) * n];
            for (p, &b) in row.iter().enumerate() {
                self.pi[p] += w * b;
            }
        }
    }

    fn ftran(&mut self, j: usize) {
        let n = self.nrows;
        let col = self.lp.col(j);
        match col.len {
            1 => {
                let (r0, v0) = (col.rows[0], col.vals[0]);
                for r in 0..n {
                    self.alpha[r] = v0 * self.binv[r * n + r0];
                }
            }
            _ => {
                let (r0, v0) = (col.rows[0], col.vals[0]);
                let (r1, v1) = (col.rows[1], col.vals[1]);
                for r in 0..n {
                    let base = r * n;
                    self.alpha[r] = v0 * self.binv[base + r0] + v1 * self.binv[base + r1];
                }
            }
        }
    }

    fn dot_col(&self, pi: &[f64], col: &ColEntries) -> f64 {
        match col.len {
            1 => pi[col.rows[0]] * col.vals[0],
            _ => pi[col.rows[0]] * col.vals[0] + pi[col.rows[1]] * col.vals[1],
        }
    }

    // ----- pricing and ratio tests ----------------------------------------

    /// Picks an entering column, most negative reduced cost first (or the
    /// lowest-index improving column while stalled on degenerate pivots).
    fn price(&self, phase1: bool) -> Option<usize> {
        let dtol = if phase1 {
            DUAL_TOL
        } else {
            DUAL_TOL * self.lp.cost_scale()
        };
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.ncols {
            if self.var_row[j] != NONBASIC || self.lp.is_fixed(j) {
                continue;
            }
            let cost = if phase1 { 0.0 } else { self.lp.cost(j) };
            let d = cost - self.dot_col(&self.pi, &self.lp.col(j));
            if d < -dtol {
                if self.bland {
                    return Some(j);
                }
                match best {
                    Some((_, dbest)) if d >= dbest => {}
                    _ => best = Some((j, d)),
                }
            }
        }
        best.map(|(j, _)| j)
    }

    /// Standard ratio test: the entering variable rises from zero, basic
    /// variables move along `-alpha` and block at their bounds.
    fn ratio_phase2(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None; // pos, step, |pivot|
        for pos in 0..self.nrows {
            let a = self.alpha[pos];
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let val = self.xb[pos];
            let step = if a > 0.0 {
                val.max(0.0) / a
            } else if self.lp.is_fixed(self.basic[pos]) {
                (-val).max(0.0) / (-a)
            } else {
                continue;
            };
            self.consider(&mut best, pos, step, a.abs());
        }
        best.map(|(pos, step, _)| (pos, step))
    }

    /// Ratio test against the infeasibility objective: feasible basics must
    /// stay feasible, out-of-bounds basics block when they reach the bound
    /// they violate (where the gradient flips).
    fn ratio_phase1(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for pos in 0..self.nrows {
            let a = self.alpha[pos];
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let val = self.xb[pos];
            let fixed = self.lp.is_fixed(self.basic[pos]);
            let step = if val < -self.feas_tol {
                if a < 0.0 {
                    val / a
                } else {
                    continue;
                }
            } else if fixed && val > self.feas_tol {
                if a > 0.0 {
                    val / a
                } else {
                    continue;
                }
            } else if a > 0.0 {
                val.max(0.0) / a
            } else if fixed {
                (-val).max(0.0) / (-a)
            } else {
                continue;
            };
            self.consider(&mut best, pos, step, a.abs());
        }
        best.map(|(pos, step, _)| (pos, step))
    }

    fn consider(&self, best: &mut Option<(usize, f64, f64)>, pos: usize, step: f64, mag: f64) {
        match best {
            None => *best = Some((pos, step, mag)),
            Some((bpos, bstep, bmag)) => {
                let replace = if self.bland {
                    step < *bstep || (step == *bstep && self.basic[pos] < self.basic[*bpos])
                } else {
                    step < *bstep
                        || (step == *bstep
                            && (mag > *bmag
                                || (mag == *bmag && self.basic[pos] < self.basic[*bpos])))
                };
                if replace {
                    *best = Some((pos, step, mag));
                }
            }
        }
    }

    // ----- pivoting --------------------------------------------------------

    fn pivot(&mut self, pos: usize, entering: usize, step: f64) {
        let n = self.nrows;
        let piv = self.alpha[pos];

        for r in 0..n {
            if r != pos {
                self.xb[r] -= step * self.alpha[r];
            }
        }
        self.xb[pos] = step;

        let leaving = self.basic[pos];
        self.var_row[leaving] = NONBASIC;
        self.var_row[entering] = pos as u32;
        self.basic[pos] = entering;

        // binv <- E * binv with the eta column derived from alpha.
        let (before, rest) = self.binv.split_at_mut(pos * n);
        let (pivot_row, after) = rest.split_at_mut(n);
        let inv_piv = 1.0 / piv;
        for e in pivot_row.iter_mut() {
            *e *= inv_piv;
        }
        for (r, chunk) in before.chunks_exact_mut(n).enumerate() {
            let f = self.alpha[r];
            if f != 0.0 {
                for (dst, &src) in chunk.iter_mut().zip(pivot_row.iter()) {
                    *dst -= f * src;
                }
            }
        }
        for (off, chunk) in after.chunks_exact_mut(n).enumerate() {
            let f = self.alpha[pos + 1 + off];
            if f != 0.0 {
                for (dst, &src) in chunk.iter_mut().zip(pivot_row.iter()) {
                    *dst -= f * src;
                }
            }
        }

        self.iterations += 1;
        self.fresh = false;
        if step.abs() <= DEGEN_STEP {
            self.stall += 1;
            if self.stall >= STALL_LIMIT {
                self.bland = true;
            }
        } else {
            self.stall = 0;
            self.bland = false;
        }
        if self.iterations.is_multiple_of(REFRESH_EVERY) {
            self.refresh();
        }
    }

    // ----- feasibility bookkeeping -----------------------------------------

    fn max_violation(&self) -> f64 {
        let mut worst = 0.0f64;
        for pos in 0..self.nrows {
            let val = self.xb[pos];
            let viol = if self.lp.is_fixed(self.basic[pos]) {
                val.abs()
            } else {
                -val
            };
            worst = worst.max(viol);
        }
        worst
    }

    /// Cheap residual check of `B x_B = b`; refreshes on drift.
    fn hygiene(&mut self) {
        let mut residual = self.lp.rhs().to_vec();
        for (pos, &col) in self.basic.iter().enumerate() {
            let v = self.xb[pos];
            if v != 0.0 {
                let entries = self.lp.col(col);
                for e in 0..entries.len {
                    residual[entries.rows[e]] -= entries.vals[e] * v;
                }
            }
        }
        let worst = residual.iter().fold(0.0f64, |a, &r| a.max(r.abs()));
        if worst > 1e-7 * self.rhs_scale {
            self.refresh();
        }
    }

    /// Rebuilds the dense inverse from the basis columns and recomputes the
    /// primal values.
    fn refresh(&mut self) {
        if !self.refactorize() {
            // Singular basis (should not happen): start over from logicals.
            self.install_logical_basis();
        }
        self.compute_xb();
        self.fresh = true;
    }

    /// Inverts the basis by singleton-row elimination. Returns false when
    /// the basis is singular (including the stalled case, which this
    /// matrix structure only produces for singular bases).
    fn refactorize(&mut self) -> bool {
        let n = self.nrows;

        // Entries of each basic column grouped by row.
        let mut row_entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (pos, &col) in self.basic.iter().enumerate() {
            let entries = self.lp.col(col);
            for e in 0..entries.len {
                row_entries[entries.rows[e]].push((pos, entries.vals[e]));
            }
        }

        let mut row_live: Vec<usize> = row_entries.iter().map(Vec::len).collect();
        let mut row_done = vec![false; n];
        let mut col_done = vec![false; n];
        let mut queue: Vec<usize> = (0..n).filter(|&r| row_live[r] == 1).collect();
        let mut order: Vec<(usize, usize, f64)> = Vec::with_capacity(n);

        let mut head = 0;
        while head < queue.len() {
            let r = queue[head];
            head += 1;
            if row_done[r] || row_live[r] != 1 {
                continue;
            }
            let Some(&(pos, val)) = row_entries[r].iter().find(|(pos, _)| !col_done[*pos]) else {
                return false;
            };
            if val.abs() < PIVOT_TOL {
                return false;
            }
            order.push((r, pos, val));
            row_done[r] = true;
            col_done[pos] = true;
            let entries = self.lp.col(self.basic[pos]);
            for e in 0..entries.len {
                let r2 = entries.rows[e];
                if !row_done[r2] {
                    row_live[r2] -= 1;
                    if row_live[r2] == 1 {
                        queue.push(r2);
                    }
                }
            }
        }

        self.binv.fill(0.0);
        let mut scratch = vec![0.0; n];

        // Triangular part: binv row of the pivot column follows from the
        // rows eliminated before it.
        for &(r, pos, val) in &order {
            scratch.fill(0.0);
            scratch[r] = 1.0;
            for &(pos2, v2) in &row_entries[r] {
                if pos2 != pos {
                    let src = &self.binv[pos2 * n..(pos2 + 1) * n];
                    for (dst, &s) in scratch.iter_mut().zip(src.iter()) {
                        *dst -= v2 * s;
                    }
                }
            }
            let inv = 1.0 / val;
            let dst = &mut self.binv[pos * n..(pos + 1) * n];
            for (d, &s) in dst.iter_mut().zip(scratch.iter()) {
                *d = s * inv;
            }
        }

        if order.len() == n {
            return true;
        }

        // Stalling means some rows and columns form closed cycles. In this
        // matrix every cycle crosses each capacity row through a pair of
        // inbound columns, so it carries an even number of +1/+1 columns
        // and its gain around the loop is +1: such a block is always
        // singular. (See the unit test that certifies this on an explicit
        // cycle.) A valid simplex basis therefore never stalls; reaching
        // this point means the warm basis was corrupt.
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Instance, SparsePattern};

    /// Determinant by plain Gaussian elimination, for test cross-checks.
    fn determinant(mat: &[f64], n: usize) -> f64 {
        let mut m = mat.to_vec();
        let mut det = 1.0;
        for col in 0..n {
            let mut piv = col;
            for r in col + 1..n {
                if m[r * n + col].abs() > m[piv * n + col].abs() {
                    piv = r;
                }
            }
            if m[piv * n + col].abs() < 1e-12 {
                return 0.0;
            }
            if piv != col {
                for c in 0..n {
                    m.swap(col * n + c, piv * n + c);
                }
                det = -det;
            }
            det *= m[col * n + col];
            for r in col + 1..n {
                let f = m[r * n + col] / m[col * n + col];
                if f != 0.0 {
                    for c in col..n {
                        m[r * n + c] -= f * m[col * n + c];
                    }
                }
            }
        }
        det
    }

    /// Bases whose columns form one closed cycle through capacity and
    /// conservation rows defeat singleton elimination entirely. Every such
    /// cycle is singular (the loop gain is +1 because capacity rows are
    /// entered and left through +1/+1 inbound columns), which is exactly
    /// why a stalled elimination reports a singular basis. Certify that on
    /// an explicit 8-cycle, in both column orientations.
    #[test]
    fn refactorization_handles_cycle_kernels() {
        // 2 centers, 1 zone, 2 items.
        let inst = Instance::new(
            2,
            1,
            2,
            vec![1.0, 2.0],
            vec![30.0, 30.0],
            vec![10.0, 10.0],
            vec![2, 2],
        )
        .unwrap();
        let pattern = SparsePattern::all_active(2, 2);
        let layout = crate::lp::LpLayout::new(&inst, &pattern);
        let n = layout.nrows();
        assert_eq!(n, 8);

        // Column indices: x(u,v,i) = (u*1 + v)*2 + i, y(u,i) = 4 + u*2 + i.
        let x = |u: usize, i: usize| u * 2 + i;
        let y = |u: usize, i: usize| 4 + u * 2 + i;
        let all_y_and_x = |swap: bool| -> Vec<usize> {
            let (a, b) = if swap {
                (x(0, 0), x(1, 0))
            } else {
                (x(1, 0), x(0, 0))
            };
            vec![y(0, 0), y(0, 1), y(1, 0), y(1, 1), a, b, x(0, 1), x(1, 1)]
        };

        for swap in [false, true] {
            let basic = all_y_and_x(swap);
            // Independent singularity check of the basis matrix.
            let mut dense = vec![0.0; n * n];
            for (k, &col) in basic.iter().enumerate() {
                let entries = layout.col(col);
                for e in 0..entries.len {
                    dense[entries.rows[e] * n + k] = entries.vals[e];
                }
            }
            let det = determinant(&dense, n);

            let mut engine = Engine::new(&layout, 1e-6, 1000, None);
            engine.basic = basic.clone();
            engine.var_row = vec![NONBASIC; layout.ncols()];
            for (k, &col) in basic.iter().enumerate() {
                engine.var_row[col] = k as u32;
            }
            let ok = engine.refactorize();
            assert!(det.abs() < 1e-9, "cycle bases are singular, det {det}");
            assert!(!ok, "refactorization must reject the singular cycle basis");
        }
    }

}
