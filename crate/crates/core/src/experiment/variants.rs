//! Design strategies compared in the detection experiments.
//!
//! Each strategy turns one channel realization into a transmit design
//! (precoders, power allocation, RIS phases, symbols) and says whether the
//! receive side exploits the clutter subspace. Strategies are registered by
//! name and looked up at run time.

use std::collections::BTreeMap;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::CVec;
use crate::optimizer::{
    alternating_optimize, AoConfig, AoProblem, AoTraceRow, ScnrForms, SensingParams, Symbols,
};
use crate::optimizer::power::max_relative_violation;
use crate::precoding::{build_precoders, default_lambda, PowerAllocation, PrecoderSet, RisConfig};
use crate::scenario::ScenarioConfig;

/// Everything a strategy may draw on for one realization.
#[derive(Debug, Clone, Copy)]
pub struct DesignContext<'a> {
    pub scenario: &'a ScenarioConfig,
    pub channels: &'a ChannelSet,
    /// Sensing parameters with unit RCS variance (the design is scale-free in δ²).
    pub params: &'a SensingParams,
    /// Symbols for all `K + 1` streams.
    pub symbols: &'a Symbols,
    pub ris_init: &'a CVec,
    pub random_ris: &'a CVec,
    pub ao: &'a AoConfig,
}

impl DesignContext<'_> {
    fn lambda(&self) -> f64 {
        let s = self.scenario;
        default_lambda(s.num_ue, s.ue_noise_w(), s.num_tx as f64 * s.ap_power_w())
    }
}

#[derive(Debug, Clone)]
pub struct Design {
    pub precoders: PrecoderSet,
    pub power: PowerAllocation,
    pub ris: RisConfig,
    pub symbols: Symbols,
    /// SCNR at unit RCS variance.
    pub scnr_unit: f64,
    pub ao_iterations: Option<usize>,
    pub ao_trace: Vec<AoTraceRow>,
    pub sinr_residual: f64,
    pub power_residual: f64,
}

impl Design {
    fn finish(ctx: &DesignContext<'_>, precoders: PrecoderSet, power: PowerAllocation, ris: RisConfig, symbols: Symbols) -> Result<Self> {
        let scnr_unit = ScnrForms::new(ctx.channels.sensing_los(), ctx.params, &symbols).scnr_eval(&precoders, &power, &ris.theta)?;
        let s = ctx.scenario;
        let problem = AoProblem::from_scenario(s, ctx.channels, ctx.params, &symbols, precoders.has_sensing);
        let (socs, n_sinr) = problem.constraints(&precoders)?;
        Ok(Self {
            sinr_residual: max_relative_violation(&socs[..n_sinr], &power.sqrt),
            power_residual: max_relative_violation(&socs[n_sinr..], &power.sqrt),
            precoders,
            power,
            ris,
            symbols,
            scnr_unit,
            ao_iterations: None,
            ao_trace: Vec::new(),
        })
    }
}

pub trait Variant: Send + Sync {
    fn name(&self) -> &str;
    fn description(&self) -> &str;
    fn clutter_aware(&self) -> bool;
    fn design(&self, ctx: &DesignContext<'_>) -> Result<Design>;
}

/// SCNR-maximizing alternating optimization.
#[derive(Debug, Clone)]
pub struct Optimized {
    pub name: String,
    pub aware: bool,
    pub sensing_stream: bool,
}

impl Variant for Optimized {
    fn name(&self) -> &str {
        &self.name
    }

    fn description(&self) -> &str {
        match (self.aware, self.sensing_stream) {
            (true, true) => "optimized design, clutter-aware detector",
            (false, true) => "optimized design, clutter-unaware detector",
            (true, false) => "optimized design without sensing stream, clutter-aware detector",
            (false, false) => "optimized design without sensing stream, clutter-unaware detector",
        }
    }

    fn clutter_aware(&self) -> bool {
        self.aware
    }

    fn design(&self, ctx: &DesignContext<'_>) -> Result<Design> {
        let symbols = if self.sensing_stream { ctx.symbols.clone() } else { ctx.symbols.truncated(ctx.scenario.num_ue) };
        let problem = AoProblem::from_scenario(ctx.scenario, ctx.channels, ctx.params, &symbols, self.sensing_stream);
        let state = alternating_optimize(&problem, ctx.ris_init, ctx.ao)?;
        let mut d = Design::finish(ctx, state.precoders, state.power, state.ris, symbols)?;
        d.ao_iterations = Some(state.iterations);
        d.ao_trace = state.trace;
        Ok(d)
    }
}

/// Random RIS phases with equal per-beam power.
#[derive(Debug, Clone)]
pub struct RandomEqualPower {
    pub name: String,
    pub aware: bool,
}

impl Variant for RandomEqualPower {
    fn name(&self) -> &str {
        &self.name
    }

    fn description(&self) -> &str {
        "random RIS phases, equal power split, clutter-aware detector"
    }

    fn clutter_aware(&self) -> bool {
        self.aware
    }

    fn design(&self, ctx: &DesignContext<'_>) -> Result<Design> {
        let (pre, power, ris) = baseline_random_ris_equal_power(ctx.channels, ctx.random_ris, ctx.lambda(), ctx.scenario.ap_power_w())?;
        Design::finish(ctx, pre, power, ris, ctx.symbols.clone())
    }
}

/// Equal `ρ_l` on every beam, scaled so the most loaded AP meets its budget exactly.
pub fn baseline_random_ris_equal_power(
    channels: &ChannelSet,
    theta: &CVec,
    lambda: f64,
    budget: f64,
) -> Result<(PrecoderSet, PowerAllocation, RisConfig)> {
    let ris = RisConfig::new(theta.clone())?;
    let pre = build_precoders(channels, &ris, lambda, true)?;
    let load = (0..pre.num_tx)
        .map(|t| pre.block_norms_sq(t).iter().sum::<f64>())
        .fold(0.0, f64::max);
    if !(load > 0.0) {
        return Err(Error::Singular("all precoder blocks vanish".into()));
    }
    let rho = budget / load;
    let power = PowerAllocation::from_sqrt(crate::linalg::RVec::from_element(pre.num_beams(), rho.sqrt()))?;
    Ok((pre, power, ris))
}

pub struct VariantRegistry {
    variants: BTreeMap<String, Box<dyn Variant>>,
}

impl Default for VariantRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl VariantRegistry {
    pub fn empty() -> Self {
        Self { variants: BTreeMap::new() }
    }

    /// The five comparison designs.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        let opt = |name: &str, aware, sensing_stream| Optimized { name: name.into(), aware, sensing_stream };
        r.register(Box::new(opt("aware", true, true)));
        r.register(Box::new(opt("unaware", false, true)));
        r.register(Box::new(RandomEqualPower { name: "aware_random_ris_equal_power".into(), aware: true }));
        r.register(Box::new(opt("no_sensing_stream_aware", true, false)));
        r.register(Box::new(opt("no_sensing_stream_unaware", false, false)));
        r
    }

    pub fn register(&mut self, v: Box<dyn Variant>) {
        self.variants.insert(v.name().to_owned(), v);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Variant> {
        self.variants.get(name).map(|b| b.as_ref()).ok_or_else(|| Error::UnknownVariant(name.to_owned()))
    }

    pub fn names(&self) -> Vec<&str> {
        self.variants.keys().map(String::as_str).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{synthesize_channels, ClusterConfig};
    use crate::rng::{rng_for, unit_phase};
    use crate::scenario::sample_scenario;

    #[test]
    fn registry_knows_all_five() {
        let r = VariantRegistry::builtin();
        assert_eq!(r.names().len(), 5);
        for n in ["aware", "unaware", "aware_random_ris_equal_power", "no_sensing_stream_aware", "no_sensing_stream_unaware"] {
            assert_eq!(r.get(n).unwrap().name(), n);
        }
        assert!(matches!(r.get("nope"), Err(Error::UnknownVariant(_))));
        assert!(!r.get("unaware").unwrap().clutter_aware());
    }

    #[test]
    fn baseline_meets_budget_with_equality_at_tightest_ap() {
        let cfg = ScenarioConfig::desk();
        let scen = sample_scenario(&cfg, 3).unwrap();
        let ch = synthesize_channels(&scen, &cfg, &ClusterConfig::default(), 3).unwrap();
        let mut rng = rng_for(3, &[]);
        let th = CVec::from_fn(cfg.ris_elements, |_, _| unit_phase(&mut rng));
        let (pre, power, _) = baseline_random_ris_equal_power(&ch, &th, 0.01, cfg.ap_power_w()).unwrap();
        let loads: Vec<f64> = (0..cfg.num_tx).map(|t| pre.ap_power(t, &power)).collect();
        assert!(loads.iter().all(|p| *p <= cfg.ap_power_w() * (1.0 + 1e-12)));
        let max = loads.iter().cloned().fold(0.0, f64::max);
        assert!((max - cfg.ap_power_w()).abs() <= 1e-12 * cfg.ap_power_w());
    }
}
