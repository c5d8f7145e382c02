//! RIS phase design for fixed powers by minorization-maximization.

use crate::convexsolver::maximize_concave_quadratic_over_disks;
use crate::error::{Error, Result};
use crate::linalg::{quad_form, CMat, CVec, C64};

use super::forms::psd_split;

#[derive(Debug, Clone)]
pub struct MmReport {
    pub theta: CVec,
    pub objective: f64,
    /// `θᴴQθ` at the start point and after every accepted iterate.
    pub trace: Vec<f64>,
    pub iterations: usize,
    /// Whether the eigen-split produced a nonzero negative part.
    pub negative_part: bool,
}

/// Pushes every entry onto the unit circle, keeping its phase.
fn to_circle(theta: &CVec, fallback: &CVec) -> CVec {
    CVec::from_fn(theta.len(), |i, _| {
        let z = theta[i];
        let r = z.norm();
        if r > 0.0 {
            z / r
        } else {
            let f = fallback[i];
            if f.norm() > 0.0 { f / f.norm() } else { C64::new(1.0, 0.0) }
        }
    })
}

/// Maximizes `θᴴQθ` over unit-modulus `θ` starting from `theta_init`.
pub fn solve_ris_phases(q: &CMat, theta_init: &CVec, tol: f64, max_iter: usize) -> Result<MmReport> {
    let n = theta_init.len();
    if q.shape() != (n, n) {
        return Err(Error::Dimension(format!("Q is {:?}, θ has {n}", q.shape())));
    }
    let split = psd_split(q);
    if split.has_negative_part() {
        log::debug!("Q has a negative part (λ_min = {:e})", split.min_negative);
    }
    let f = |th: &CVec| quad_form(th, q);

    let mut theta = theta_init.clone();
    let mut obj = f(&theta);
    let mut trace = vec![obj];
    let mut iterations = 0;
    for it in 1..=max_iter {
        iterations = it;
        let lin = &split.plus * &theta;
        let relaxed = maximize_concave_quadratic_over_disks(&split.minus, &lin, &theta, 1e-10)?.theta;
        let pushed = to_circle(&relaxed, &theta);
        let next = if f(&pushed) >= obj { pushed } else { relaxed };
        let bound = split.minorizer(&next, &theta);
        let fn_ = f(&next);
        if fn_ < obj {
            break;
        }
        let gain = (bound - obj) / obj.abs().max(f64::MIN_POSITIVE);
        theta = next;
        obj = fn_;
        trace.push(obj);
        if gain < tol {
            break;
        }
    }

    let start = f(theta_init);
    let mut out = to_circle(&theta, theta_init);
    if f(&out) < start - 1e-9 * start.abs() {
        out = theta_init.clone();
    }
    let objective = f(&out);
    Ok(MmReport { theta: out, objective, trace, iterations, negative_part: split.has_negative_part() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::rng::{complex_normal_vec, rng_for, unit_phase};
    use proptest::prelude::*;

    fn random_theta(seed: u64, n: usize) -> CVec {
        let mut rng = rng_for(seed, &[]);
        CVec::from_fn(n, |_, _| unit_phase(&mut rng))
    }

    #[test]
    fn rank_one_reaches_closed_form() {
        let mut rng = rng_for(1, &[]);
        let qv = complex_normal_vec(&mut rng, 8, 1.0);
        let q = &qv * qv.adjoint();
        let best: f64 = qv.iter().map(|z| z.norm()).sum::<f64>().powi(2);
        let r = solve_ris_phases(&q, &random_theta(2, 8), 1e-4, 50).unwrap();
        assert!(r.iterations <= 3, "{}", r.iterations);
        assert!((r.objective - best).abs() <= 1e-9 * best, "{} vs {best}", r.objective);
        // phases align with q up to one global rotation
        let rot = r.theta[0] * qv[0].conj() / qv[0].norm();
        for i in 0..8 {
            assert!((r.theta[i] - rot * qv[i] / qv[i].norm()).norm() < 1e-9);
        }
    }

    #[test]
    fn identity_is_isotropic() {
        let th = random_theta(3, 5);
        let r = solve_ris_phases(&CMat::identity(5, 5), &th, 1e-4, 50).unwrap();
        assert!((r.objective - 5.0).abs() < 1e-12);
    }

    #[test]
    fn single_element_is_fixed_point() {
        let q = CMat::from_element(1, 1, c(2.5, 0.0));
        let th = CVec::from_element(1, C64::from_polar(1.0, 0.7));
        let r = solve_ris_phases(&q, &th, 1e-4, 50).unwrap();
        assert!((r.theta[0] - th[0]).norm() < 1e-12);
    }

    #[test]
    fn indefinite_q_uses_negative_part() {
        let mut rng = rng_for(4, &[]);
        let cols: Vec<CVec> = (0..6).map(|_| complex_normal_vec(&mut rng, 6, 1.0)).collect();
        let b = CMat::from_columns(&cols);
        let u = b.qr().q();
        let d = CMat::from_diagonal(&CVec::from_fn(6, |i, _| c(3.0 - i as f64, 0.0)));
        let q = &u * d * u.adjoint();
        let th0 = random_theta(5, 6);
        let r = solve_ris_phases(&q, &th0, 1e-6, 50).unwrap();
        assert!(r.negative_part);
        assert!(r.trace.windows(2).all(|w| w[1] >= w[0]));
        assert!(r.objective >= quad_form(&th0, &q) - 1e-9);
        assert!(r.theta.iter().all(|z| (z.norm() - 1.0).abs() < 1e-9));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn mm_never_decreases_psd_objective(seed in 0u64..100_000, n in 1usize..10) {
            let mut rng = rng_for(seed, &[]);
            let cols: Vec<CVec> = (0..n).map(|_| complex_normal_vec(&mut rng, n, 1.0)).collect();
            let b = CMat::from_columns(&cols);
            let q = &b * b.adjoint();
            let th0 = random_theta(seed ^ 0x55, n);
            let r = solve_ris_phases(&q, &th0, 1e-4, 50).unwrap();
            prop_assert!(r.trace.windows(2).all(|w| w[1] >= w[0] - 1e-12 * w[0].abs()));
            prop_assert!(r.objective >= quad_form(&th0, &q) - 1e-9 * quad_form(&th0, &q).abs());
            prop_assert!(r.theta.iter().all(|z| (z.norm() - 1.0).abs() < 1e-9));
        }
    }
}
