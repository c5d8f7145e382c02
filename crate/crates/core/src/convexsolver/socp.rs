//! Linear-objective SOCP maximization by ADMM operator splitting.
//!
//! The problem `max cᵀx s.t. ‖A_i x + b_i‖ ≤ c_iᵀx + d_i, x_j ≥ 0 (masked)`
//! is written as `Gx + h ∈ K` with `K` a product of second-order cones and a
//! non-negative orthant. Each cone block is rescaled to unit Frobenius norm,
//! then the splitting alternates a regularized `n×n` linear solve with
//! projections onto the cones. The penalty is rebalanced from the residual
//! ratio every few iterations.

use nalgebra::{Cholesky, Dyn};

use crate::error::{Error, Result};
use crate::linalg::{RMat, RVec};

/// `‖A x + b‖ ≤ cᵀx + d`.
#[derive(Debug, Clone)]
pub struct SocConstraint {
    pub a: RMat,
    pub b: RVec,
    pub c: RVec,
    pub d: f64,
}

impl SocConstraint {
    /// Signed violation `‖Ax+b‖ − (cᵀx + d)`.
    pub fn violation(&self, x: &RVec) -> f64 {
        (&self.a * x + &self.b).norm() - (self.c.dot(x) + self.d)
    }

    /// Violation divided by the constraint data scale.
    pub fn relative_violation(&self, x: &RVec) -> f64 {
        let scale = (self.a.norm_squared() + self.b.norm_squared() + self.c.norm_squared() + self.d * self.d).sqrt();
        self.violation(x).max(0.0) / scale.max(f64::MIN_POSITIVE)
    }
}

#[derive(Debug, Clone)]
pub struct SocpProblem {
    pub objective: RVec,
    pub constraints: Vec<SocConstraint>,
    /// `true` entries are constrained to be non-negative.
    pub nonneg: Vec<bool>,
}

impl SocpProblem {
    pub fn new(objective: RVec) -> Self {
        let n = objective.len();
        Self { objective, constraints: Vec::new(), nonneg: vec![false; n] }
    }

    pub fn dim(&self) -> usize {
        self.objective.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if self.nonneg.len() != n {
            return Err(Error::Dimension("non-negativity mask length".into()));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.a.ncols() != n || c.c.len() != n || c.a.nrows() != c.b.len() {
                return Err(Error::Dimension(format!("constraint {i} is not conformal")));
            }
        }
        Ok(())
    }

    /// Largest relative violation over all cones and sign constraints.
    pub fn residual(&self, x: &RVec) -> f64 {
        let cones = self.constraints.iter().map(|c| c.relative_violation(x)).fold(0.0, f64::max);
        let signs = self
            .nonneg
            .iter()
            .zip(x.iter())
            .filter(|(m, _)| **m)
            .map(|(_, v)| (-v).max(0.0))
            .fold(0.0, f64::max);
        cones.max(signs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct SolverReport {
    pub x: RVec,
    pub objective: f64,
    pub residual: f64,
    pub iterations: usize,
    pub status: SolverStatus,
}

#[derive(Debug, Clone, Copy)]
pub struct SocpSettings {
    pub eps_feas: f64,
    pub eps_gap: f64,
    pub max_iter: usize,
}

impl Default for SocpSettings {
    fn default() -> Self {
        Self { eps_feas: 1e-6, eps_gap: 1e-6, max_iter: 50_000 }
    }
}

/// Cone block layout inside the stacked `Gx + h`.
#[derive(Debug, Clone, Copy)]
enum Block {
    Soc { start: usize, len: usize },
    NonNeg { start: usize },
}

fn project_soc(v: &mut [f64]) {
    let t = v[0];
    let un = v[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
    if un <= t {
        return;
    }
    if un <= -t {
        v.iter_mut().for_each(|x| *x = 0.0);
        return;
    }
    let a = 0.5 * (t + un);
    v[0] = a;
    let s = a / un;
    v[1..].iter_mut().for_each(|x| *x *= s);
}

fn project_cone(blocks: &[Block], v: &mut RVec) {
    for b in blocks {
        match *b {
            Block::Soc { start, len } => project_soc(&mut v.as_mut_slice()[start..start + len]),
            Block::NonNeg { start } => v[start] = v[start].max(0.0),
        }
    }
}

fn factor(gtg: &RMat, sigma: f64, rho: f64) -> Result<Cholesky<f64, Dyn>> {
    let n = gtg.nrows();
    let m = gtg * rho + RMat::identity(n, n) * sigma;
    Cholesky::new(m).ok_or_else(|| Error::Singular("ADMM system matrix".into()))
}

/// Maximizes `cᵀx` over the intersection of second-order cones.
pub fn solve_socp_max(p: &SocpProblem, settings: &SocpSettings) -> Result<SolverReport> {
    p.validate()?;
    let n = p.dim();

    // assemble and normalize G, h
    let mut rows: Vec<(RVec, f64)> = Vec::new();
    let mut blocks = Vec::new();
    for c in &p.constraints {
        let scale = (c.a.norm_squared() + c.b.norm_squared() + c.c.norm_squared() + c.d * c.d).sqrt();
        let s = if scale > 0.0 { 1.0 / scale } else { 1.0 };
        blocks.push(Block::Soc { start: rows.len(), len: 1 + c.a.nrows() });
        // s = Gx + h with first row (c, d) and the rest (A, b)
        rows.push((c.c.scale(s), c.d * s));
        for i in 0..c.a.nrows() {
            rows.push((c.a.row(i).transpose().scale(s), c.b[i] * s));
        }
    }
    for (j, _) in p.nonneg.iter().enumerate().filter(|(_, m)| **m) {
        blocks.push(Block::NonNeg { start: rows.len() });
        let mut e = RVec::zeros(n);
        e[j] = 1.0;
        rows.push((e, 0.0));
    }
    let m = rows.len();
    let mut g = RMat::zeros(m, n);
    let mut h = RVec::zeros(m);
    for (i, (r, hi)) in rows.into_iter().enumerate() {
        g.set_row(i, &r.transpose());
        h[i] = hi;
    }
    let cscale = p.objective.amax();
    let cobj = if cscale > 0.0 { p.objective.unscale(cscale) } else { p.objective.clone() };

    let gtg = g.transpose() * &g;
    let sigma = 1e-6;
    let alpha = 1.6;
    let mut rho = 0.1;
    let mut chol = factor(&gtg, sigma, rho)?;

    let mut x = RVec::zeros(n);
    let mut z = h.clone();
    project_cone(&blocks, &mut z);
    let mut u = RVec::zeros(m);
    let mut status = SolverStatus::MaxIter;
    let mut iterations = settings.max_iter;

    for it in 1..=settings.max_iter {
        let rhs = &cobj + x.scale(sigma) - g.transpose() * (&h - &z + &u).scale(rho);
        x = chol.solve(&rhs);
        let gx_h = &g * &x + &h;
        let v = gx_h.scale(alpha) + z.scale(1.0 - alpha);
        let u_prev = u.clone();
        let mut znew = &v + &u;
        project_cone(&blocks, &mut znew);
        z = znew;
        u += &v - &z;

        if it % 10 == 0 || it == settings.max_iter {
            let y = u.scale(rho);
            let r_prim = (&gx_h - &z).amax();
            let gty = g.transpose() * &y;
            let r_dual = (&gty - &cobj).amax();
            let p_scale = gx_h.amax().max(z.amax()).max(h.amax()).max(1e-12);
            let d_scale = gty.amax().max(cobj.amax()).max(1e-12);
            let pobj = cobj.dot(&x);
            let dobj = -y.dot(&h);
            let gap = (pobj - dobj).abs();
            let eps = settings.eps_feas;
            if r_prim <= eps * (1.0 + p_scale)
                && r_dual <= eps * (1.0 + d_scale)
                && gap <= settings.eps_gap * (1.0 + pobj.abs())
                && p.residual(&x) <= settings.eps_feas
            {
                status = SolverStatus::Optimal;
                iterations = it;
                break;
            }

            // primal infeasibility certificate: w = −δy ∈ K*, Gᵀw ≈ 0, hᵀw < 0
            let dy = (&u - &u_prev).scale(rho);
            let dn = dy.amax();
            if dn > 1e-12 {
                let w = dy.unscale(-dn);
                let mut wp = w.clone();
                project_cone(&blocks, &mut wp);
                let cone_gap = (&wp - &w).amax();
                if (g.transpose() * &w).amax() < 1e-9 && h.dot(&w) < -1e-9 && cone_gap < 1e-9 {
                    status = SolverStatus::Infeasible;
                    iterations = it;
                    break;
                }
            }

            // residual balancing
            if it % 50 == 0 {
                let ratio = ((r_prim / p_scale) / (r_dual / d_scale).max(1e-300)).sqrt();
                if ratio.is_finite() && !(0.2..=5.0).contains(&ratio) {
                    let new_rho = (rho * ratio).clamp(1e-6, 1e6);
                    u *= rho / new_rho;
                    rho = new_rho;
                    chol = factor(&gtg, sigma, rho)?;
                }
            }
        }
    }

    let objective = p.objective.dot(&x);
    let residual = p.residual(&x);
    if status == SolverStatus::Optimal && residual > settings.eps_feas {
        status = SolverStatus::MaxIter;
    }
    Ok(SolverReport { x, objective, residual, iterations, status })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn ball(n: usize, radius: f64) -> SocConstraint {
        SocConstraint { a: RMat::identity(n, n), b: RVec::zeros(n), c: RVec::zeros(n), d: radius }
    }

    #[test]
    fn unit_interval() {
        let mut p = SocpProblem::new(RVec::from_vec(vec![1.0]));
        p.constraints.push(ball(1, 1.0));
        let r = solve_socp_max(&p, &SocpSettings::default()).unwrap();
        assert_eq!(r.status, SolverStatus::Optimal);
        assert!((r.x[0] - 1.0).abs() < 1e-5, "{}", r.x[0]);
    }

    #[test]
    fn symmetric_disk() {
        let mut p = SocpProblem::new(RVec::from_vec(vec![1.0, 1.0]));
        p.constraints.push(ball(2, 2f64.sqrt()));
        let r = solve_socp_max(&p, &SocpSettings::default()).unwrap();
        assert_eq!(r.status, SolverStatus::Optimal);
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5, "{:?}", r.x);
    }

    #[test]
    fn detects_infeasibility() {
        // x ≥ 2 (as |0| ≤ x − 2) and ‖x‖ ≤ 1
        let mut p = SocpProblem::new(RVec::from_vec(vec![1.0]));
        p.constraints.push(ball(1, 1.0));
        p.constraints.push(SocConstraint {
            a: RMat::zeros(1, 1),
            b: RVec::zeros(1),
            c: RVec::from_vec(vec![1.0]),
            d: -2.0,
        });
        let r = solve_socp_max(&p, &SocpSettings::default()).unwrap();
        assert_ne!(r.status, SolverStatus::Optimal);
    }

    #[test]
    fn nonneg_mask_active() {
        // max −x s.t. ‖x‖ ≤ 1, x ≥ 0  → 0
        let mut p = SocpProblem::new(RVec::from_vec(vec![-1.0]));
        p.constraints.push(ball(1, 1.0));
        p.nonneg = vec![true];
        let r = solve_socp_max(&p, &SocpSettings::default()).unwrap();
        assert_eq!(r.status, SolverStatus::Optimal);
        assert!(r.x[0].abs() < 1e-5);
    }

    fn random_problem(seed: u64, n: usize) -> SocpProblem {
        let mut rng = crate::rng::rng_for(seed, &[]);
        let mut p = SocpProblem::new(RVec::from_fn(n, |_, _| rng.random_range(-1.0..1.0)));
        // bounded by a ball; plus random cones that keep the origin strictly feasible
        p.constraints.push(ball(n, 2.0));
        for _ in 0..3 {
            let rows = 2;
            p.constraints.push(SocConstraint {
                a: RMat::from_fn(rows, n, |_, _| rng.random_range(-1.0..1.0)),
                b: RVec::from_fn(rows, |_, _| rng.random_range(-0.3..0.3)),
                c: RVec::from_fn(n, |_, _| rng.random_range(-0.5..0.5)),
                d: 1.0,
            });
        }
        p
    }

    fn feasible(p: &SocpProblem, x: &RVec) -> bool {
        p.constraints.iter().all(|c| c.violation(x) <= 0.0)
    }

    /// Best objective of a dense grid over the box [−2, 2]^n.
    fn grid_oracle(p: &SocpProblem, steps: usize) -> f64 {
        let n = p.dim();
        let mut best = f64::NEG_INFINITY;
        let mut idx = vec![0usize; n];
        loop {
            let x = RVec::from_fn(n, |i, _| -2.0 + 4.0 * idx[i] as f64 / (steps - 1) as f64);
            if feasible(p, &x) {
                best = best.max(p.objective.dot(&x));
            }
            let mut k = 0;
            loop {
                if k == n {
                    return best;
                }
                idx[k] += 1;
                if idx[k] < steps {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    /// Random-restart projected ascent: coordinate line search kept feasible by bisection.
    fn ascent_oracle(p: &SocpProblem, seed: u64) -> f64 {
        let n = p.dim();
        let mut rng = crate::rng::rng_for(seed, &[99]);
        let mut best = f64::NEG_INFINITY;
        for _ in 0..30 {
            let mut x = RVec::zeros(n);
            for _ in 0..2000 {
                let d = RVec::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
                let d = if p.objective.dot(&d) < 0.0 { -d } else { d };
                let (mut lo, mut hi) = (0.0, 4.0);
                for _ in 0..50 {
                    let mid = 0.5 * (lo + hi);
                    if feasible(p, &(&x + d.scale(mid))) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                x += d.scale(lo);
            }
            best = best.max(p.objective.dot(&x));
        }
        best
    }

    #[test]
    fn small_random_socp_matches_grid() {
        for seed in 0..3 {
            let p = random_problem(seed, 2);
            let r = solve_socp_max(&p, &SocpSettings { eps_feas: 1e-9, eps_gap: 1e-9, max_iter: 50_000 }).unwrap();
            assert_eq!(r.status, SolverStatus::Optimal, "seed {seed}: {r:?}");
            let grid = grid_oracle(&p, 6001);
            assert!(r.objective >= grid - 1e-6, "{} < {}", r.objective, grid);
            assert!(r.objective - grid < 1e-3, "{} vs grid {}", r.objective, grid);
        }
    }

    #[test]
    fn five_dim_random_socp_matches_restart_ascent() {
        for seed in 10..13 {
            let p = random_problem(seed, 5);
            let r = solve_socp_max(&p, &SocpSettings { eps_feas: 1e-9, eps_gap: 1e-9, max_iter: 50_000 }).unwrap();
            assert_eq!(r.status, SolverStatus::Optimal);
            assert!(r.residual <= 1e-6);
            let oracle = ascent_oracle(&p, seed);
            assert!((r.objective - oracle).abs() < 1e-3, "{} vs {}", r.objective, oracle);
        }
    }

    #[test]
    fn soc_projection_properties() {
        let mut v = [3.0, 1.0, 1.0];
        project_soc(&mut v);
        assert_eq!(v, [3.0, 1.0, 1.0]);
        let mut v = [-3.0, 1.0, 1.0];
        project_soc(&mut v);
        assert_eq!(v, [0.0, 0.0, 0.0]);
        let mut v = [0.0, 2.0, 0.0];
        project_soc(&mut v);
        assert!((v[0] - 1.0).abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15);
    }
}
