//! Invariant suite shared by the `check` command and the acceptance tests.

use rand::Rng;

use crate::detector::{build_detector, calibrate_threshold, glrt_statistic, ObservationModel};
use crate::error::Result;
use crate::experiment::{ExperimentConfig, RealizationInputs, VariantRegistry};
use crate::linalg::{lin_to_db, quad_form, CMat, CVec, RMat};
use crate::optimizer::{diag_lift_quadratic_forms, power::feasible_interior_point, AoProblem, ScnrForms, SensingParams, Symbols};
use crate::precoding::{PowerAllocation, PrecoderSet, RisConfig};
use crate::rng::{complex_normal, complex_normal_vec, rng_for, stream, unit_phase};

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

impl std::fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}] {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

fn random_cmat<R: Rng>(rng: &mut R, n: usize) -> CMat {
    CMat::from_fn(n, n, |_, _| complex_normal(rng, 1.0))
}

/// Kronecker and Hadamard forms of the diagonal-lifting identity on random instances.
pub fn diag_lift_check(instances: usize, seed: u64) -> CheckOutcome {
    let mut rng = rng_for(seed, &[stream::CHECK, 1]);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let n = rng.random_range(1..=8);
        let x = complex_normal_vec(&mut rng, n, 1.0);
        let a = random_cmat(&mut rng, n);
        let b = random_cmat(&mut rng, n);
        let (lhs, rhs) = diag_lift_quadratic_forms(&x, &a, &b).expect("square inputs");
        worst = worst.max((lhs - rhs).norm() / lhs.norm().max(rhs.norm()).max(f64::MIN_POSITIVE));
    }
    CheckOutcome::new("diag_lift", worst <= 1e-10, format!("{instances} instances, worst relative gap {worst:.2e} (tol 1e-10)"))
}

/// Direct SCNR, power quadratic form and RIS quadratic form at random feasible points.
pub fn triple_path_check(cfg: &ExperimentConfig, points: usize) -> Result<CheckOutcome> {
    let s = &cfg.scenario;
    let mut worst = 0.0f64;
    let per_real = 10;
    let mut done = 0;
    let mut i = 0;
    while done < points {
        let inputs = RealizationInputs::draw(cfg, i)?;
        let ch = &inputs.realization.channels;
        let mut rng = rng_for(inputs.realization.seed, &[stream::CHECK, 2]);
        let params = SensingParams {
            rcs_var: RMat::from_fn(s.num_tx, s.num_rx, |_, _| rng.random_range(0.1..10.0)),
            ..inputs.unit.clone()
        };
        let symbols = Symbols::random(&mut rng, s.num_ue + 1, s.slots);
        let problem = AoProblem::from_scenario(s, ch, &params, &symbols, true);
        let forms: ScnrForms<'_> = problem.forms();
        for _ in 0..per_real.min(points - done) {
            let theta = CVec::from_fn(s.ris_elements, |_, _| unit_phase(&mut rng));
            let pre = problem.precoders(&RisConfig::new(theta.clone())?)?;
            let (socs, _) = problem.constraints(&pre)?;
            let rho = feasible_interior_point(&socs, pre.num_beams(), &Default::default())?;
            let power = PowerAllocation::from_sqrt(rho.clone())?;
            let direct = forms.scnr_eval(&pre, &power, &theta)?;
            let a = forms.build_a(&pre, &theta)?;
            let via_rho = rho.dot(&(a.map(|z| z.re) * &rho));
            let via_theta = quad_form(&theta, &forms.build_q(&pre, &power)?);
            let scale = direct.abs().max(f64::MIN_POSITIVE);
            worst = worst.max((via_rho - direct).abs() / scale).max((via_theta - direct).abs() / scale);
            done += 1;
        }
        i += 1;
    }
    Ok(CheckOutcome::new("scnr_triple_path", worst <= 1e-9, format!("{points} points, worst relative gap {worst:.2e} (tol 1e-9)")))
}

/// Monte Carlo downlink SINR per UE from `n` unit-modulus symbols (random
/// phase, unit average power) and Gaussian noise samples.
pub fn monte_carlo_sinr<R: Rng>(pre: &PrecoderSet, power: &PowerAllocation, noise: f64, n: usize, rng: &mut R) -> Vec<f64> {
    let k_ue = pre.num_ue();
    let beams = pre.num_beams();
    let gains: Vec<Vec<_>> = (0..k_ue)
        .map(|k| {
            let gk = pre.g.column(k);
            (0..beams).map(|l| gk.dotc(&pre.beams[l]) * power.sqrt[l]).collect()
        })
        .collect();
    let mut desired = vec![0.0; k_ue];
    let mut rest = vec![0.0; k_ue];
    for _ in 0..n {
        let x = CVec::from_fn(beams, |_, _| unit_phase(rng));
        for k in 0..k_ue {
            let mut other = complex_normal(rng, noise);
            for l in 0..beams {
                if l != k {
                    other += gains[k][l] * x[l];
                }
            }
            desired[k] += (gains[k][k] * x[k]).norm_sqr();
            rest[k] += other.norm_sqr();
        }
    }
    desired.iter().zip(&rest).map(|(d, r)| d / r).collect()
}

/// AO on `scenarios` realizations: objective monotonicity and constraint satisfaction.
pub fn ao_checks(cfg: &ExperimentConfig, scenarios: usize, sinr_symbols: usize) -> Result<[CheckOutcome; 2]> {
    let registry = VariantRegistry::builtin();
    let aware = registry.get("aware")?;
    let s = &cfg.scenario;
    let mut mono_worst = 0.0f64;
    let mut seqs = 0;
    let mut resid = 0.0f64;
    let mut modulus = 0.0f64;
    let mut sinr_margin_db = f64::INFINITY;
    for i in 0..scenarios {
        let inputs = RealizationInputs::draw(cfg, i)?;
        let d = aware.design(&inputs.context(cfg))?;
        let outer: Vec<f64> = d.ao_trace.iter().map(|r| r.scnr).collect();
        let inner = d.ao_trace.iter().flat_map(|r| [&r.ccp_trace, &r.mm_trace]);
        for seq in std::iter::once(&outer).chain(inner) {
            seqs += 1;
            for w in seq.windows(2) {
                mono_worst = mono_worst.max((w[0] - w[1]) / w[0].abs().max(f64::MIN_POSITIVE));
            }
        }
        resid = resid.max(d.sinr_residual).max(d.power_residual);
        modulus = modulus.max(d.ris.max_modulus_error());
        let mut rng = rng_for(inputs.realization.seed, &[stream::CHECK, 3]);
        let measured = monte_carlo_sinr(&d.precoders, &d.power, s.ue_noise_w(), sinr_symbols, &mut rng);
        for m in measured {
            sinr_margin_db = sinr_margin_db.min(lin_to_db(m) - lin_to_db(s.sinr_target()));
        }
    }
    let mono = CheckOutcome::new(
        "monotonicity",
        mono_worst <= 1e-9,
        format!("{scenarios} scenarios, {seqs} sequences, worst relative decrease {mono_worst:.2e} (slack 1e-9)"),
    );
    let cons = CheckOutcome::new(
        "constraints",
        resid <= 1e-6 && modulus <= 1e-9 && sinr_margin_db >= -0.1,
        format!(
            "residual {resid:.2e} (tol 1e-6), |θ| error {modulus:.2e} (tol 1e-9), worst measured SINR margin {sinr_margin_db:+.3} dB over {sinr_symbols} symbols (tol -0.1 dB)"
        ),
    );
    Ok([mono, cons])
}

/// Calibrates at `pfa` and re-measures the false-alarm rate on fresh null trials.
pub fn false_alarm_check(cfg: &ExperimentConfig, pfa: f64, calibration_trials: usize, fresh_trials: usize) -> Result<CheckOutcome> {
    let inputs = RealizationInputs::draw(cfg, 0)?;
    let run = inputs.run(cfg, VariantRegistry::builtin().get("aware")?)?;
    let params = run.params(cfg, 0.0);
    let det = build_detector(&run.los, &params, &inputs.clutter, true)?;
    let model = ObservationModel { truth: &run.truth, params: &params, clutter: &inputs.clutter };
    let seed = inputs.realization.seed;
    let cal = calibrate_threshold(&det, &model, pfa, calibration_trials, crate::rng::derive_seed(seed, &[stream::CHECK, 4]))?;
    let mut rng = rng_for(seed, &[stream::CHECK, 5]);
    let alarms = (0..fresh_trials).filter(|_| glrt_statistic(&det, &model.sample(&mut rng, false)) > cal.threshold).count();
    let ratio = alarms as f64 / fresh_trials as f64 / pfa;
    Ok(CheckOutcome::new(
        "false_alarm",
        (0.5..=2.0).contains(&ratio),
        format!("pfa {pfa:e}: {alarms}/{fresh_trials} fresh null alarms, {ratio:.3}x nominal (band [0.5, 2])"),
    ))
}

/// The fast invariants, at desk scale.
pub fn run_invariant_suite(seed: u64) -> Result<Vec<CheckOutcome>> {
    let cfg = ExperimentConfig { seed, ..ExperimentConfig::desk() };
    let mut out = vec![diag_lift_check(1000, seed), triple_path_check(&cfg, 100)?];
    out.extend(ao_checks(&cfg, 20, 10_000)?);
    out.push(false_alarm_check(&cfg, 1e-2, 10_000, 100_000)?);
    Ok(out)
}
