//! Concave quadratic maximization over a product of unit disks.

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigh_desc, spectral_norm, CMat, CVec, C64};

#[derive(Debug, Clone)]
pub struct DiskQpReport {
    pub theta: CVec,
    pub objective: f64,
    pub iterations: usize,
    /// Objective after every accepted step (starting point first).
    pub trace: Vec<f64>,
}

/// Projects each entry onto `|θ_n| ≤ 1`.
pub fn project_to_disks(v: &CVec) -> CVec {
    v.map(|z| {
        let r = z.norm();
        if r > 1.0 {
            z / r
        } else {
            z
        }
    })
}

fn objective(q: &CMat, lin: &CVec, th: &CVec) -> f64 {
    2.0 * lin.dotc(th).re + th.dotc(&(q * th)).re
}

/// Maximizes `2Re(lᴴθ) + θᴴQθ` subject to `|θ_n| ≤ 1`, with `Q ⪯ 0`.
///
/// Uses projected gradient ascent with backtracking; stops when the gradient
/// mapping falls below `eps` relative to the problem scale. With `Q = 0` the
/// phase-aligned boundary point is returned directly.
pub fn maximize_concave_quadratic_over_disks(
    q_neg: &CMat,
    linear: &CVec,
    theta0: &CVec,
    eps: f64,
) -> Result<DiskQpReport> {
    let n = linear.len();
    if q_neg.shape() != (n, n) || theta0.len() != n {
        return Err(Error::Dimension("disk QP operands are not conformal".into()));
    }
    let qnorm = spectral_norm(q_neg);
    if qnorm > 0.0 {
        let (vals, _) = hermitian_eigh_desc(q_neg);
        if vals[0] > 1e-8 * qnorm {
            return Err(Error::NotNegativeSemidefinite(vals[0]));
        }
    }

    if qnorm == 0.0 {
        let theta = CVec::from_fn(n, |i, _| {
            let l = linear[i];
            if l.norm() > 0.0 {
                l / l.norm()
            } else {
                let t = theta0[i];
                if t.norm() > 0.0 { t / t.norm() } else { C64::new(1.0, 0.0) }
            }
        });
        let obj = objective(q_neg, linear, &theta);
        let start = objective(q_neg, linear, &project_to_disks(theta0));
        return Ok(DiskQpReport { theta, objective: obj, iterations: 0, trace: vec![start, obj] });
    }

    let scale = linear.norm() + qnorm * (n as f64).sqrt();
    let mut theta = project_to_disks(theta0);
    let mut f = objective(q_neg, linear, &theta);
    let mut trace = vec![f];
    // real gradient of f is 2(l + Qθ); its Lipschitz constant is 2‖Q‖
    let mut step = 1.0 / (2.0 * qnorm);
    let mut iterations = 0;
    for it in 1..=10_000 {
        iterations = it;
        let grad = (linear + q_neg * &theta).scale(2.0);
        let mut t = step * 4.0;
        let (cand, fc) = loop {
            let cand = project_to_disks(&(&theta + grad.scale(t)));
            let delta = &cand - &theta;
            let fc = objective(q_neg, linear, &cand);
            let model = f + grad.dotc(&delta).re - delta.norm_squared() / (2.0 * t);
            if fc >= model - 1e-15 * f.abs().max(scale) || t < 1e-300 {
                break (cand, fc);
            }
            t *= 0.5;
        };
        step = t;
        let mapping = (&cand - &theta).norm() / t;
        if fc >= f {
            theta = cand;
            f = fc;
            trace.push(f);
        }
        if mapping <= eps * scale {
            break;
        }
    }
    Ok(DiskQpReport { theta, objective: f, iterations, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::rng::{complex_normal_vec, rng_for};
    use proptest::prelude::*;

    fn random_nsd(seed: u64, n: usize, strict: bool) -> CMat {
        let mut rng = rng_for(seed, &[]);
        let cols: Vec<CVec> = (0..n).map(|_| complex_normal_vec(&mut rng, n, 1.0)).collect();
        let b = CMat::from_columns(&cols);
        let mut q = -(&b * b.adjoint());
        if strict {
            q -= CMat::identity(n, n) * c(0.5, 0.0);
        }
        q
    }

    #[test]
    fn zero_quadratic_gives_phase_alignment() {
        let n = 4;
        let lin = CVec::from_element(n, c(1.0, 1.0));
        let r = maximize_concave_quadratic_over_disks(&CMat::zeros(n, n), &lin, &CVec::zeros(n), 1e-8).unwrap();
        for z in r.theta.iter() {
            assert!((z - C64::from_polar(1.0, std::f64::consts::FRAC_PI_4)).norm() < 1e-15);
        }
    }

    #[test]
    fn zero_linear_definite_gives_origin() {
        let q = random_nsd(1, 3, true);
        let th0 = CVec::from_element(3, c(0.6, 0.0));
        let r = maximize_concave_quadratic_over_disks(&q, &CVec::zeros(3), &th0, 1e-10).unwrap();
        assert!(r.theta.norm() < 1e-6, "{}", r.theta.norm());
    }

    #[test]
    fn rejects_indefinite() {
        let q = CMat::identity(2, 2);
        assert!(matches!(
            maximize_concave_quadratic_over_disks(&q, &CVec::zeros(2), &CVec::zeros(2), 1e-8),
            Err(Error::NotNegativeSemidefinite(_))
        ));
    }

    #[test]
    fn two_element_instance_matches_grid_search() {
        let q = random_nsd(7, 2, false).scale(0.3);
        let mut rng = rng_for(8, &[]);
        let lin = complex_normal_vec(&mut rng, 2, 1.0);
        let r = maximize_concave_quadratic_over_disks(&q, &lin, &CVec::zeros(2), 1e-10).unwrap();
        // grid over magnitude × phase for both elements
        let mags: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0).collect();
        let phases: Vec<f64> = (0..721).map(|i| i as f64 * std::f64::consts::TAU / 720.0).collect();
        let pts: Vec<C64> = mags.iter().flat_map(|m| phases.iter().map(move |p| C64::from_polar(*m, *p))).collect();
        let mut best = f64::NEG_INFINITY;
        for a in &pts {
            for b in &pts {
                let th = CVec::from_vec(vec![*a, *b]);
                best = best.max(objective(&q, &lin, &th));
            }
        }
        assert!(r.objective >= best - 1e-9, "{} < {}", r.objective, best);
        assert!(r.objective - best < 1e-3 * best.abs().max(1.0), "{} vs {}", r.objective, best);
    }

    #[test]
    fn ascent_trace_is_monotone() {
        let q = random_nsd(3, 6, false);
        let mut rng = rng_for(4, &[]);
        let lin = complex_normal_vec(&mut rng, 6, 2.0);
        let r = maximize_concave_quadratic_over_disks(&q, &lin, &CVec::zeros(6), 1e-9).unwrap();
        assert!(r.trace.windows(2).all(|w| w[1] >= w[0]));
        assert!(r.theta.iter().all(|z| z.norm() <= 1.0 + 1e-15));
    }

    proptest! {
        #[test]
        fn projection_is_feasible_and_fixes_feasible_points(
            re in proptest::collection::vec(-3.0..3.0f64, 1..8),
            im in proptest::collection::vec(-3.0..3.0f64, 1..8),
        ) {
            let n = re.len().min(im.len());
            let v = CVec::from_fn(n, |i, _| c(re[i], im[i]));
            let p = project_to_disks(&v);
            for i in 0..n {
                prop_assert!(p[i].norm() <= 1.0 + 1e-15);
                if v[i].norm() <= 1.0 {
                    prop_assert_eq!(p[i], v[i]);
                }
            }
        }
    }
}
