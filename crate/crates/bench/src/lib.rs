//! Desk-profile fixtures for the benchmarks in `benches/`.

use pfas_core::harness::{sound_users, trial_scene, RunContext, ScenarioConfig};
use pfas_core::precoding::DownlinkChannelSet;
use pfas_core::sounding::ReducedObservation;
use pfas_core::Result;

pub struct Fixture {
    pub cfg: ScenarioConfig,
    pub ctx: RunContext,
    /// One reduced observation per user of trial 0.
    pub reduced: Vec<ReducedObservation>,
    /// True downlink tables of trial 0.
    pub downlink: DownlinkChannelSet,
}

/// Desk profile with `n_users` users, trial 0 of `seed`.
pub fn desk_fixture(seed: u64, n_users: usize) -> Result<Fixture> {
    let cfg = ScenarioConfig { seed, n_users, ..ScenarioConfig::default() };
    let ctx = RunContext::new(&cfg)?;
    let scene = trial_scene(&cfg, ctx.grid(), 0)?;
    let (_, reduced) = sound_users(&cfg, &ctx, &scene, 0)?;
    let downlink = DownlinkChannelSet::from_scene(&scene, ctx.model.geometry(), ctx.model.patterns(), cfg.n_c)?;
    Ok(Fixture { cfg, ctx, reduced, downlink })
}
