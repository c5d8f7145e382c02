//! Alternating optimization of power allocation and RIS phases.

use std::path::Path;

use crate::channel::ChannelSet;
use crate::convexsolver::SocpSettings;
use crate::error::Result;
use crate::linalg::{rel_diff, CVec};
use crate::precoding::{build_precoders, default_lambda, PowerAllocation, PrecoderSet, RisConfig};
use crate::scenario::ScenarioConfig;

use super::forms::{ScnrForms, SensingParams, Symbols};
use super::power::{
    assemble_power_socs, assemble_sinr_socs, feasible_interior_point, is_feasible, max_relative_violation,
    solve_power_allocation,
};
use super::ris::solve_ris_phases;

#[derive(Debug, Clone, Copy)]
pub struct AoConfig {
    pub ccp_tol: f64,
    pub ccp_max_iter: usize,
    pub mm_tol: f64,
    pub mm_max_iter: usize,
    pub ao_tol: f64,
    pub ao_max_iter: usize,
    pub socp: SocpSettings,
}

impl Default for AoConfig {
    fn default() -> Self {
        Self {
            ccp_tol: 1e-4,
            ccp_max_iter: 30,
            mm_tol: 1e-4,
            mm_max_iter: 50,
            ao_tol: 1e-3,
            ao_max_iter: 20,
            socp: SocpSettings::default(),
        }
    }
}

/// Inputs of one design run.
#[derive(Debug, Clone, Copy)]
pub struct AoProblem<'a> {
    pub channels: &'a ChannelSet,
    pub params: &'a SensingParams,
    pub symbols: &'a Symbols,
    pub sinr_target: f64,
    pub ue_noise: f64,
    pub ap_budget: f64,
    pub lambda: f64,
    pub with_sensing: bool,
}

impl<'a> AoProblem<'a> {
    pub fn from_scenario(
        cfg: &ScenarioConfig,
        channels: &'a ChannelSet,
        params: &'a SensingParams,
        symbols: &'a Symbols,
        with_sensing: bool,
    ) -> Self {
        let total = cfg.num_tx as f64 * cfg.ap_power_w();
        Self {
            channels,
            params,
            symbols,
            sinr_target: cfg.sinr_target(),
            ue_noise: cfg.ue_noise_w(),
            ap_budget: cfg.ap_power_w(),
            lambda: default_lambda(cfg.num_ue, cfg.ue_noise_w(), total),
            with_sensing,
        }
    }

    pub fn precoders(&self, ris: &RisConfig) -> Result<PrecoderSet> {
        build_precoders(self.channels, ris, self.lambda, self.with_sensing)
    }

    pub fn forms(&self) -> ScnrForms<'a> {
        ScnrForms::new(self.channels.sensing_los(), self.params, self.symbols)
    }

    pub fn constraints(&self, pre: &PrecoderSet) -> Result<(Vec<crate::convexsolver::SocConstraint>, usize)> {
        let sigma = vec![self.ue_noise.sqrt(); pre.num_ue()];
        let mut socs = assemble_sinr_socs(pre, self.sinr_target, &sigma)?;
        let n_sinr = socs.len();
        socs.extend(assemble_power_socs(pre, &vec![self.ap_budget; pre.num_tx])?);
        Ok((socs, n_sinr))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Relative SCNR change fell below the tolerance.
    Converged,
    /// The next outer step would have lowered the SCNR and was discarded.
    Stalled,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AoTraceRow {
    pub iteration: usize,
    pub scnr: f64,
    pub sinr_residual: f64,
    pub power_residual: f64,
    pub ccp_iterations: usize,
    pub mm_iterations: usize,
    /// Inner objective sequences of this iteration.
    pub ccp_trace: Vec<f64>,
    pub mm_trace: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct AoState {
    pub power: PowerAllocation,
    pub ris: RisConfig,
    /// Precoders the returned power allocation was designed for.
    pub precoders: PrecoderSet,
    pub scnr: f64,
    pub iterations: usize,
    pub stop: StopReason,
    pub trace: Vec<AoTraceRow>,
    pub sinr_residual: f64,
    pub power_residual: f64,
    pub q_negative_seen: bool,
}

impl AoState {
    pub fn converged(&self) -> bool {
        self.stop != StopReason::MaxIter
    }

    pub fn scnr_trace(&self) -> Vec<f64> {
        self.trace.iter().map(|r| r.scnr).collect()
    }

    pub fn write_trace_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["iteration", "scnr", "sinr_residual", "power_residual", "ccp_iterations", "mm_iterations"])?;
        for r in &self.trace {
            w.write_record([
                r.iteration.to_string(),
                format!("{:.12e}", r.scnr),
                format!("{:.3e}", r.sinr_residual),
                format!("{:.3e}", r.power_residual),
                r.ccp_iterations.to_string(),
                r.mm_iterations.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs the outer loop: precoders for the current `θ`, power allocation by
/// CCP, then RIS phases by MM, until the SCNR settles.
pub fn alternating_optimize(problem: &AoProblem<'_>, theta_init: &CVec, cfg: &AoConfig) -> Result<AoState> {
    let forms = problem.forms();
    let mut theta = RisConfig::new(theta_init.clone())?;
    let mut best: Option<AoState> = None;
    let mut q_negative_seen = false;

    for v in 1..=cfg.ao_max_iter {
        let pre = problem.precoders(&theta)?;
        let (socs, n_sinr) = problem.constraints(&pre)?;
        let l = pre.num_beams();
        let interior = feasible_interior_point(&socs, l, &cfg.socp)?;
        let start = match &best {
            Some(s) if is_feasible(&socs, &s.power.sqrt, 0.0) => s.power.sqrt.clone(),
            _ => interior,
        };

        let a = forms.build_a(&pre, &theta.theta)?;
        let ccp = solve_power_allocation(&a, &socs, &start, cfg.ccp_tol, cfg.ccp_max_iter, &cfg.socp)?;
        let power = PowerAllocation::from_sqrt(ccp.rho.map(|x| x.max(0.0)))?;

        let q = forms.build_q(&pre, &power)?;
        let mm = solve_ris_phases(&q, &theta.theta, cfg.mm_tol, cfg.mm_max_iter)?;
        q_negative_seen |= mm.negative_part;
        let next = RisConfig::new(mm.theta)?;
        let scnr = forms.scnr_eval(&pre, &power, &next.theta)?;

        let sinr_residual = max_relative_violation(&socs[..n_sinr], &power.sqrt);
        let power_residual = max_relative_violation(&socs[n_sinr..], &power.sqrt);
        let row = AoTraceRow {
            iteration: v,
            scnr,
            sinr_residual,
            power_residual,
            ccp_iterations: ccp.iterations,
            mm_iterations: mm.iterations,
            ccp_trace: ccp.trace,
            mm_trace: mm.trace,
        };
        log::trace!("AO iteration {v}: SCNR {scnr:e}");

        match best.as_mut() {
            Some(prev) if scnr < prev.scnr => {
                prev.stop = StopReason::Stalled;
                break;
            }
            _ => {}
        }
        let done = best.as_ref().is_some_and(|p| rel_diff(scnr, p.scnr) < cfg.ao_tol);
        let mut trace = best.take().map(|s| s.trace).unwrap_or_default();
        trace.push(row);
        theta = next.clone();
        best = Some(AoState {
            power,
            ris: next,
            precoders: pre,
            scnr,
            iterations: v,
            stop: if done { StopReason::Converged } else { StopReason::MaxIter },
            trace,
            sinr_residual,
            power_residual,
            q_negative_seen,
        });
        if done {
            break;
        }
    }
    let mut state = best.expect("at least one outer iteration runs");
    state.q_negative_seen = q_negative_seen;
    if state.q_negative_seen {
        log::info!("Q had a nonzero negative semidefinite part during the run");
    }
    Ok(state)
}
