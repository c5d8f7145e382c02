//! Monte Carlo detection-probability sweeps over the RCS grid.

use crate::channel::{synthesize_channels, ChannelSet};
use crate::detector::{
    build_detector, calibrate_threshold, detection_probability, ClutterModel, ObservationModel, SignalModel,
};
use crate::error::{Error, Result};
use crate::linalg::CVec;
use crate::optimizer::power::feasible_interior_point;
use crate::optimizer::{AoConfig, AoProblem, AoTraceRow, SensingParams, Symbols};
use crate::precoding::RisConfig;
use crate::rng::{derive_seed, rng_for, stream, unit_phase};
use crate::scenario::{sample_scenario, ScenarioRealization};

use super::config::ExperimentConfig;
use super::variants::{Design, DesignContext, Variant, VariantRegistry};

#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub rcs_db: f64,
    /// Mean over realizations.
    pub pd: f64,
    pub stderr: f64,
    pub pd_per_realization: Vec<f64>,
    /// Mean SCNR over realizations at this RCS.
    pub scnr: f64,
    /// Realizations whose threshold came from fewer than `10/pfa` null trials.
    pub underpowered: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealizationRecord {
    pub index: usize,
    /// Draws rejected as SINR-infeasible before this one was accepted.
    pub resampled: usize,
    pub ao_iterations: Option<usize>,
    pub scnr_unit: f64,
    pub sinr_residual: f64,
    pub power_residual: f64,
    pub max_modulus_error: f64,
    pub ao_trace: Vec<AoTraceRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantResult {
    pub variant: String,
    pub points: Vec<PointResult>,
    pub realizations: Vec<RealizationRecord>,
}

impl VariantResult {
    pub fn point(&self, rcs_db: f64) -> Option<&PointResult> {
        self.points.iter().find(|p| (p.rcs_db - rcs_db).abs() < 1e-9)
    }

    pub fn mean_ao_iterations(&self) -> Option<f64> {
        let its: Vec<usize> = self.realizations.iter().filter_map(|r| r.ao_iterations).collect();
        (!its.is_empty()).then(|| its.iter().sum::<usize>() as f64 / its.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub seed: u64,
    pub config_hash: String,
    pub cnr_db: f64,
    pub trials: usize,
    pub pfa: f64,
    pub resampled: usize,
    pub variants: Vec<VariantResult>,
}

impl SweepResult {
    pub fn variant(&self, name: &str) -> Option<&VariantResult> {
        self.variants.iter().find(|v| v.variant == name)
    }
}

/// One accepted scenario draw shared by all variants.
pub struct Realization {
    pub scenario: ScenarioRealization,
    pub channels: ChannelSet,
    pub seed: u64,
    pub resampled: usize,
}

/// Draws realization `index`, redrawing while the SINR targets are infeasible.
///
/// Feasibility does not depend on the RIS or on the sensing stream (RZF beams
/// ignore θ and the sensing beam can be switched off), so one check serves
/// every variant.
pub fn select_realization(cfg: &ExperimentConfig, index: usize) -> Result<Realization> {
    let mut last = Error::SinrInfeasible(f64::NAN);
    for attempt in 0..=cfg.max_resamples {
        let seed = derive_seed(cfg.seed, &[index as u64, attempt as u64]);
        let scenario = sample_scenario(&cfg.scenario, seed)?;
        let channels = synthesize_channels(&scenario, &cfg.scenario, &cfg.clusters, seed)?;
        let params = SensingParams::uniform(cfg.scenario.num_tx, cfg.scenario.num_rx, 1.0, 0.0, 1.0);
        let symbols = Symbols { x: Vec::new() };
        let problem = AoProblem::from_scenario(&cfg.scenario, &channels, &params, &symbols, false);
        let check = problem
            .precoders(&RisConfig::ones(cfg.scenario.ris_elements))
            .and_then(|pre| {
                let (socs, _) = problem.constraints(&pre)?;
                feasible_interior_point(&socs, pre.num_beams(), &Default::default())
            });
        match check {
            Ok(_) => return Ok(Realization { scenario, channels, seed, resampled: attempt }),
            Err(e) if e.is_infeasibility() => {
                log::info!("realization {index}: draw {attempt} is SINR-infeasible, redrawing");
                last = e;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

fn point_key(rcs_db: f64) -> u64 {
    (rcs_db * 1e6).round() as i64 as u64
}

/// Everything a design needs from one realization, shared across variants.
pub struct RealizationInputs {
    pub realization: Realization,
    pub symbols: Symbols,
    pub ris_init: CVec,
    pub random_ris: CVec,
    pub clutter: ClutterModel,
    /// Unit-RCS sensing parameters at the configured CNR.
    pub unit: SensingParams,
    pub ao: AoConfig,
}

impl RealizationInputs {
    pub fn draw(cfg: &ExperimentConfig, index: usize) -> Result<Self> {
        let s = &cfg.scenario;
        let realization = select_realization(cfg, index)?;
        let seed = realization.seed;
        let mut rng = rng_for(seed, &[stream::SYMBOLS]);
        let symbols = Symbols::random(&mut rng, s.num_ue + 1, s.slots);
        let mut rng = rng_for(seed, &[stream::RIS_INIT]);
        let ris_init = CVec::from_fn(s.ris_elements, |_, _| unit_phase(&mut rng));
        let mut rng = rng_for(seed, &[stream::BASELINE]);
        let random_ris = CVec::from_fn(s.ris_elements, |_, _| unit_phase(&mut rng));
        let clutter = ClutterModel::for_scenario(&realization.scenario, &cfg.clutter, s.antennas, cfg.clutter_power())?;
        let unit = SensingParams::uniform(s.num_tx, s.num_rx, 1.0, cfg.clutter_power(), s.sensing_noise_w());
        Ok(Self { realization, symbols, ris_init, random_ris, clutter, unit, ao: AoConfig::default() })
    }

    pub fn context<'a>(&'a self, cfg: &'a ExperimentConfig) -> DesignContext<'a> {
        DesignContext {
            scenario: &cfg.scenario,
            channels: &self.realization.channels,
            params: &self.unit,
            symbols: &self.symbols,
            ris_init: &self.ris_init,
            random_ris: &self.random_ris,
            ao: &self.ao,
        }
    }

    /// Designs with `v` and builds the detector-side and ground-truth signal models.
    pub fn run(&self, cfg: &ExperimentConfig, v: &dyn Variant) -> Result<VariantRun> {
        let design = v.design(&self.context(cfg))?;
        let ch = &self.realization.channels;
        let (th, pre, pw, x) = (&design.ris.theta, &design.precoders, &design.power, &design.symbols);
        let los = SignalModel::build(ch.sensing_los(), th, pre, pw, x)?;
        let truth = SignalModel::build(ch.sensing_true(), th, pre, pw, x)?;
        Ok(VariantRun { design, los, truth, aware: v.clutter_aware() })
    }
}

pub struct VariantRun {
    pub design: Design,
    pub los: SignalModel,
    pub truth: SignalModel,
    pub aware: bool,
}

impl VariantRun {
    /// Sensing parameters at an RCS grid value.
    pub fn params(&self, cfg: &ExperimentConfig, rcs_db: f64) -> SensingParams {
        let s = &cfg.scenario;
        SensingParams::uniform(s.num_tx, s.num_rx, cfg.rcs_linear(rcs_db), cfg.clutter_power(), s.sensing_noise_w())
    }
}

/// Detection probability of one design at one RCS value.
fn point_pd(
    cfg: &ExperimentConfig,
    run: &VariantRun,
    clutter: &ClutterModel,
    rcs_db: f64,
    seed: u64,
) -> Result<(f64, bool)> {
    let params = run.params(cfg, rcs_db);
    let det = build_detector(&run.los, &params, clutter, run.aware)?;
    let model = ObservationModel { truth: &run.truth, params: &params, clutter };
    let key = point_key(rcs_db);
    let cal = calibrate_threshold(&det, &model, cfg.pfa, cfg.trials, derive_seed(seed, &[stream::NULL_TRIALS, key]))?;
    let est = detection_probability(&det, &model, cal.threshold, true, cfg.trials, derive_seed(seed, &[stream::ALT_TRIALS, key]));
    Ok((est.pd, cal.underpowered))
}

/// Runs every configured variant over the RCS grid. Deterministic in the config.
pub fn run_pd_sweep(cfg: &ExperimentConfig, registry: &VariantRegistry) -> Result<SweepResult> {
    cfg.validate()?;
    let variants: Vec<&dyn Variant> = cfg.variants.iter().map(|n| registry.get(n)).collect::<Result<_>>()?;
    let n_grid = cfg.rcs_grid_db.len();

    let mut pd = vec![vec![vec![0.0; cfg.realizations]; n_grid]; variants.len()];
    let mut underpowered = vec![vec![0usize; n_grid]; variants.len()];
    let mut scnr = vec![vec![0.0; n_grid]; variants.len()];
    let mut records: Vec<Vec<RealizationRecord>> = vec![Vec::new(); variants.len()];
    let mut resampled = 0;

    for i in 0..cfg.realizations {
        let inputs = RealizationInputs::draw(cfg, i)?;
        let real = &inputs.realization;
        resampled += real.resampled;
        for (vi, v) in variants.iter().enumerate() {
            let run = inputs.run(cfg, *v)?;
            for (gi, &rcs_db) in cfg.rcs_grid_db.iter().enumerate() {
                let (p, under) = point_pd(cfg, &run, &inputs.clutter, rcs_db, real.seed)?;
                pd[vi][gi][i] = p;
                underpowered[vi][gi] += under as usize;
                scnr[vi][gi] += run.design.scnr_unit * cfg.rcs_linear(rcs_db) / cfg.realizations as f64;
            }
            log::info!(
                "realization {i} variant {}: SCNR/δ² = {:.3e}, P_d = {:?}",
                v.name(),
                run.design.scnr_unit,
                cfg.rcs_grid_db.iter().zip(&pd[vi]).map(|(g, p)| (*g, p[i])).collect::<Vec<_>>()
            );
            let d = run.design;
            records[vi].push(RealizationRecord {
                index: i,
                resampled: real.resampled,
                ao_iterations: d.ao_iterations,
                scnr_unit: d.scnr_unit,
                sinr_residual: d.sinr_residual,
                power_residual: d.power_residual,
                max_modulus_error: d.ris.max_modulus_error(),
                ao_trace: d.ao_trace,
            });
        }
    }

    if underpowered.iter().flatten().any(|&u| u > 0) {
        log::warn!("{} null trials per threshold are fewer than 10/pfa = {:.0}", cfg.trials, 10.0 / cfg.pfa);
    }
    let n = cfg.realizations as f64;
    let results = variants
        .iter()
        .enumerate()
        .map(|(vi, v)| VariantResult {
            variant: v.name().to_owned(),
            points: cfg
                .rcs_grid_db
                .iter()
                .enumerate()
                .map(|(gi, &rcs_db)| {
                    let per = pd[vi][gi].clone();
                    let mean = per.iter().sum::<f64>() / n;
                    let var: f64 = per.iter().map(|p| p * (1.0 - p) / cfg.trials as f64).sum();
                    PointResult {
                        rcs_db,
                        pd: mean,
                        stderr: var.sqrt() / n,
                        pd_per_realization: per,
                        scnr: scnr[vi][gi],
                        underpowered: underpowered[vi][gi],
                    }
                })
                .collect(),
            realizations: std::mem::take(&mut records[vi]),
        })
        .collect();

    Ok(SweepResult {
        seed: cfg.seed,
        config_hash: cfg.hash()?,
        cnr_db: cfg.cnr_db,
        trials: cfg.trials,
        pfa: cfg.pfa,
        resampled,
        variants: results,
    })
}
