//! Power allocation for a fixed RIS: SOC constraint assembly, the slack phase
//! that certifies SINR feasibility, and the convex-concave procedure.

use crate::convexsolver::{solve_socp_max, SocConstraint, SocpProblem, SocpSettings, SolverStatus};
use crate::error::{Error, Result};
use crate::linalg::{CMat, RMat, RVec};
use crate::precoding::PrecoderSet;

/// Slack below which the SINR set is reported empty.
pub const MIN_SLACK: f64 = 1e-7;

/// One SOC per UE, divided through by `σ_k`.
pub fn assemble_sinr_socs(pre: &PrecoderSet, gamma: f64, noise_std: &[f64]) -> Result<Vec<SocConstraint>> {
    let l = pre.num_beams();
    let gains = pre.effective_gains();
    if noise_std.len() != pre.num_ue() {
        return Err(Error::Dimension(format!("{} noise levels for {} UEs", noise_std.len(), pre.num_ue())));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidConfig("SINR target must be positive".into()));
    }
    gains
        .iter()
        .zip(noise_std)
        .enumerate()
        .map(|(k, (row, &sigma))| {
            if !(row[k] > 0.0) {
                return Err(Error::Unservable(k));
            }
            let mut a = RMat::zeros(l + 1, l);
            for (j, g) in row.iter().enumerate() {
                if j != k {
                    a[(j, j)] = g / sigma;
                }
            }
            let mut b = RVec::zeros(l + 1);
            b[l] = 1.0;
            let mut c = RVec::zeros(l);
            c[k] = row[k] / (sigma * gamma.sqrt());
            Ok(SocConstraint { a, b, c, d: 0.0 })
        })
        .collect()
}

/// One SOC per transmit AP: `‖diag(‖f_{l,t}‖)√ρ‖ ≤ √P_t`.
pub fn assemble_power_socs(pre: &PrecoderSet, budgets: &[f64]) -> Result<Vec<SocConstraint>> {
    if budgets.len() != pre.num_tx {
        return Err(Error::Dimension(format!("{} budgets for {} APs", budgets.len(), pre.num_tx)));
    }
    let l = pre.num_beams();
    Ok(budgets
        .iter()
        .enumerate()
        .map(|(t, &p)| {
            let norms = RVec::from_vec(pre.block_norms_sq(t).iter().map(|v| v.sqrt()).collect());
            SocConstraint { a: RMat::from_diagonal(&norms), b: RVec::zeros(l), c: RVec::zeros(l), d: p.sqrt() }
        })
        .collect())
}

fn data_scale(c: &SocConstraint) -> f64 {
    (c.a.norm_squared() + c.b.norm_squared() + c.c.norm_squared() + c.d * c.d).sqrt().max(f64::MIN_POSITIVE)
}

/// All constraints hold and every entry is non-negative.
pub fn is_feasible(constraints: &[SocConstraint], x: &RVec, tol: f64) -> bool {
    x.iter().all(|v| *v >= 0.0) && constraints.iter().all(|c| c.violation(x) <= tol * data_scale(c))
}

pub fn max_relative_violation(constraints: &[SocConstraint], x: &RVec) -> f64 {
    constraints.iter().map(|c| c.relative_violation(x)).fold(0.0, f64::max)
}

/// Maximizes a common slack `s ≤ 1` across the normalized constraints and
/// returns the `√ρ` part, which is strictly feasible when `s > 0`.
pub fn feasible_interior_point(constraints: &[SocConstraint], dim: usize, settings: &SocpSettings) -> Result<RVec> {
    let n = dim + 1;
    let mut obj = RVec::zeros(n);
    obj[dim] = 1.0;
    let mut p = SocpProblem::new(obj);
    for c in constraints {
        let s = 1.0 / data_scale(c);
        let mut a = RMat::zeros(c.a.nrows(), n);
        a.view_mut((0, 0), (c.a.nrows(), dim)).copy_from(&c.a.scale(s));
        let mut cc = RVec::zeros(n);
        cc.rows_mut(0, dim).copy_from(&c.c.scale(s));
        cc[dim] = -1.0;
        p.constraints.push(SocConstraint { a, b: c.b.scale(s), c: cc, d: c.d * s });
    }
    let mut cap = RVec::zeros(n);
    cap[dim] = -1.0;
    p.constraints.push(SocConstraint { a: RMat::zeros(1, n), b: RVec::zeros(1), c: cap, d: 1.0 });
    p.nonneg = (0..n).map(|j| j < dim).collect();

    let r = solve_socp_max(&p, settings)?;
    let slack = r.x[dim];
    if r.status == SolverStatus::Infeasible || !(slack > MIN_SLACK) {
        return Err(Error::SinrInfeasible(slack));
    }
    let x = r.x.rows(0, dim).map(|v| v.max(0.0));
    if !is_feasible(constraints, &x, 0.0) {
        return Err(Error::SinrInfeasible(slack));
    }
    Ok(x)
}

#[derive(Debug, Clone)]
pub struct CcpReport {
    pub rho: RVec,
    pub objective: f64,
    /// Objective at the start point and after every accepted iterate.
    pub trace: Vec<f64>,
    pub iterations: usize,
}

/// Largest step from `anchor` toward `x` that keeps every constraint satisfied.
fn pull_back(constraints: &[SocConstraint], anchor: &RVec, x: &RVec) -> RVec {
    let x = x.map(|v| v.max(0.0));
    if is_feasible(constraints, &x, 0.0) {
        return x;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if is_feasible(constraints, &(anchor + (&x - anchor).scale(mid)), 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    anchor + (&x - anchor).scale(lo)
}

/// Convex-concave procedure for `max ρᵀRe(A)ρ` over the SOC set.
///
/// Each step maximizes the linearization `2ρ⁽ⁱ⁾ᵀRe(A)ρ`; iterates are pulled
/// back toward `rho_init` if the solver returns a slightly infeasible point,
/// and a step that lowers the objective ends the loop.
pub fn solve_power_allocation(
    a: &CMat,
    constraints: &[SocConstraint],
    rho_init: &RVec,
    tol: f64,
    max_iter: usize,
    settings: &SocpSettings,
) -> Result<CcpReport> {
    let n = rho_init.len();
    if a.shape() != (n, n) {
        return Err(Error::Dimension(format!("A is {:?}, ρ has {n}", a.shape())));
    }
    if !is_feasible(constraints, rho_init, 1e-9) {
        return Err(Error::InvalidConfig("CCP start point is infeasible".into()));
    }
    let re_a = a.map(|z| z.re);
    let re_a = (&re_a + re_a.transpose()).scale(0.5);
    let f = |x: &RVec| x.dot(&(&re_a * x));

    let mut rho = rho_init.clone();
    let mut obj = f(&rho);
    let mut trace = vec![obj];
    let mut iterations = 0;
    for it in 1..=max_iter {
        iterations = it;
        let lin = (&re_a * &rho).scale(2.0);
        if lin.amax() == 0.0 {
            break;
        }
        let mut p = SocpProblem::new(lin);
        p.constraints = constraints.to_vec();
        p.nonneg = vec![true; n];
        let r = solve_socp_max(&p, settings)?;
        if r.status == SolverStatus::Infeasible {
            log::warn!("CCP subproblem reported infeasible; keeping the current iterate");
            break;
        }
        let cand = pull_back(constraints, rho_init, &r.x);
        let fc = f(&cand);
        if fc < obj {
            break;
        }
        let change = (fc - obj) / obj.abs().max(f64::MIN_POSITIVE);
        rho = cand;
        obj = fc;
        trace.push(obj);
        if change < tol {
            break;
        }
    }
    Ok(CcpReport { rho, objective: obj, trace, iterations })
}
