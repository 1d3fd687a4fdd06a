//! Monte-Carlo loops.
//!
//! Trial `t` draws everything from [`rng::stream`]`(seed, t, purpose)`, so a
//! trial's scene, sounding states, pilots and noise do not depend on the
//! estimator or precoder being run, nor on how many trials run alongside.
//! The pattern set is drawn once per run from trial slot 0.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use super::config::{Estimator, Precoder, ScenarioConfig};
use crate::channel::{
    exact_channel, make_grid, AngleGrid, ArrayGeometry, GridModel, SceneParams, ScatterScene, SparseCoeffs,
};
use crate::error::{Error, Result};
use crate::linalg::{fro_norm_sqr, to_db};
use crate::omp::{run_momp, OmpConfig};
use crate::patterns::{Direction, PatternSet, Polarization};
use crate::precoding::{
    group_opt, nonfas, optimize_states, random_baseline, upper_bound, DownlinkChannelSet, OptimizerConfig,
};
use crate::rng::{self, Purpose};
use crate::sounding::{
    generate_observation, ls_estimate, preprocess, random_states, ChannelSource, ReducedObservation, SoundingPlan,
};
use crate::vbi::{build_mask, run_turbo_vbi, VbiOutcome};

pub const NMSE_TRAIN: &str = "nmse_train_db";
pub const NMSE_TEST: &str = "nmse_test_db";
pub const RATE: &str = "rate";

#[derive(Debug, Clone, PartialEq)]
pub struct TrialMetric {
    pub trial: usize,
    pub metric: String,
    pub value: f64,
}

/// VBI trace of one user in one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub trial: usize,
    pub user: usize,
    pub csv: String,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub config: ScenarioConfig,
    /// Trial order, metric order within a trial as produced.
    pub rows: Vec<TrialMetric>,
    pub traces: Vec<TraceRecord>,
}

impl RunResult {
    pub fn values(&self, metric: &str) -> Vec<f64> {
        self.rows.iter().filter(|r| r.metric == metric).map(|r| r.value).collect()
    }

    pub fn mean(&self, metric: &str) -> Option<f64> {
        let v = self.values(metric);
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    /// Sample standard deviation (zero for a single trial).
    pub fn std(&self, metric: &str) -> Option<f64> {
        let v = self.values(metric);
        let mu = self.mean(metric)?;
        if v.len() < 2 {
            return Some(0.0);
        }
        Some((v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt())
    }

    /// Scenario columns written in front of every CSV row.
    pub fn scenario_keys(&self) -> Vec<(&'static str, String)> {
        let c = &self.config;
        vec![
            ("estimator", c.estimator.to_string()),
            ("precoder", c.precoder.to_string()),
            ("n_users", c.n_users.to_string()),
            ("p_t_db", format!("{}", c.p_t_db)),
            ("seed", c.seed.to_string()),
        ]
    }
}

/// Grid model shared by all trials of a run.
pub struct RunContext {
    pub model: Arc<GridModel>,
}

impl RunContext {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let pattern_seed: u64 = rng::stream(cfg.seed, 0, Purpose::Patterns).random();
        let patterns = PatternSet::synthetic(pattern_seed, cfg.n_states, cfg.pattern_order)?;
        let model = GridModel::new(ArrayGeometry::new(cfg.m1, cfg.m2)?, make_grid(cfg.grid_step_deg)?, patterns);
        Ok(RunContext { model })
    }

    pub fn grid(&self) -> &AngleGrid {
        self.model.grid()
    }
}

/// Scene of trial `t` (snapped to the grid when `on_grid`).
pub fn trial_scene(cfg: &ScenarioConfig, grid: &AngleGrid, trial: usize) -> Result<ScatterScene> {
    let params = SceneParams {
        n_users: cfg.n_users,
        n_paths: cfg.n_paths,
        delay_span: cfg.delay_span,
        angle_spread_deg: cfg.angle_spread_deg,
        distinct_delays: cfg.distinct_delays,
    };
    let scene = ScatterScene::sample(&mut rng::stream(cfg.seed, trial as u64, Purpose::Scene), &params)?;
    Ok(if cfg.on_grid { scene.snapped(grid) } else { scene })
}

/// Sounds every user of `scene` with one shared plan; users' noise is drawn
/// in user order from the trial's noise stream.
pub fn sound_users(
    cfg: &ScenarioConfig,
    ctx: &RunContext,
    scene: &ScatterScene,
    trial: usize,
) -> Result<(SoundingPlan, Vec<ReducedObservation>)> {
    let t = trial as u64;
    let plan = SoundingPlan::random(
        &mut rng::stream(cfg.seed, t, Purpose::SoundingStates),
        &mut rng::stream(cfg.seed, t, Purpose::Pilots),
        &ctx.model,
        cfg.n_blocks,
        cfg.n_c,
        cfg.pilot,
        cfg.uplink_noise(),
    )?;
    let mut noise = rng::stream(cfg.seed, t, Purpose::Noise);
    let reduced = (0..scene.n_users())
        .map(|user| {
            let obs = generate_observation(ChannelSource::Exact { scene, user }, &ctx.model, &plan, &mut noise)?;
            preprocess(&obs, &ctx.model)
        })
        .collect::<Result<_>>()?;
    Ok((plan, reduced))
}

/// Runs `estimator` on one reduced observation. VBI starts from the OMP
/// estimate and falls back to it when OMP selects nothing.
pub fn estimate(
    cfg: &ScenarioConfig,
    grid: &AngleGrid,
    reduced: &ReducedObservation,
    estimator: Estimator,
) -> Result<(SparseCoeffs, Option<VbiOutcome>)> {
    match estimator {
        Estimator::Ls => Ok((ls_estimate(reduced)?, None)),
        Estimator::Omp | Estimator::Vbi => {
            let omp = run_momp(reduced, &OmpConfig { rule: cfg.omp_rule, ..OmpConfig::new(reduced.noise_var) })?;
            if estimator == Estimator::Omp || omp.coeffs.support().is_empty() {
                return Ok((omp.coeffs, None));
            }
            let mask = build_mask(omp.coeffs.support(), grid, reduced.delay_span())?;
            let out = run_turbo_vbi(reduced, &mask, &cfg.vbi, &omp.coeffs)?;
            Ok((out.coeffs.clone(), Some(out)))
        }
    }
}

struct TrialOutput {
    metrics: Vec<(&'static str, f64)>,
    traces: Vec<TraceRecord>,
}

fn run_trials<F>(cfg: &ScenarioConfig, f: F) -> Result<RunResult>
where
    F: Fn(usize) -> Result<TrialOutput> + Sync,
{
    let outs: Vec<TrialOutput> = (0..cfg.n_trials).into_par_iter().map(&f).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut traces = Vec::new();
    for (trial, o) in outs.into_iter().enumerate() {
        for (metric, value) in o.metrics {
            if !value.is_finite() {
                return Err(Error::Numerical(format!("trial {trial}: {metric} is not finite")));
            }
            rows.push(TrialMetric { trial, metric: metric.to_string(), value });
        }
        traces.extend(o.traces);
    }
    Ok(RunResult { config: cfg.clone(), rows, traces })
}

/// Channel-estimation NMSE (dB) per trial on the sounding states and on
/// `n_test_states` fresh random states, pooled over users.
pub fn run_nmse_experiment(cfg: &ScenarioConfig) -> Result<RunResult> {
    let ctx = RunContext::new(cfg)?;
    let model = &ctx.model;
    run_trials(cfg, |trial| {
        let scene = trial_scene(cfg, ctx.grid(), trial)?;
        let (plan, reduced) = sound_users(cfg, &ctx, &scene, trial)?;
        let mut test_rng = rng::stream(cfg.seed, trial as u64, Purpose::TestStates);
        let tests: Vec<Vec<usize>> =
            (0..cfg.n_test_states).map(|_| random_states(&mut test_rng, model.m(), model.n_states())).collect();
        let (mut e_tr, mut p_tr, mut e_te, mut p_te) = (0.0, 0.0, 0.0, 0.0);
        let mut traces = Vec::new();
        for (user, red) in reduced.iter().enumerate() {
            let (est, vbi) = estimate(cfg, ctx.grid(), red, cfg.estimator)?;
            if let (true, Some(v)) = (cfg.debug_trace, vbi) {
                traces.push(TraceRecord { trial, user, csv: v.trace_csv() });
            }
            let err_pow = |states: &[usize]| -> Result<(f64, f64)> {
                let h = exact_channel(&scene, model.geometry(), model.patterns(), states, cfg.n_c, user)?;
                let hh = model.approx_channel(&est, states, cfg.n_c)?;
                Ok((fro_norm_sqr(&(hh - &h)), fro_norm_sqr(&h)))
            };
            for s in plan.block_states() {
                let (e, p) = err_pow(s)?;
                e_tr += e;
                p_tr += p;
            }
            for s in &tests {
                let (e, p) = err_pow(s)?;
                e_te += e;
                p_te += p;
            }
        }
        let mut metrics = vec![(NMSE_TRAIN, to_db(e_tr / p_tr))];
        if cfg.n_test_states > 0 {
            metrics.push((NMSE_TEST, to_db(e_te / p_te)));
        }
        Ok(TrialOutput { metrics, traces })
    })
}

/// Average downlink ZF rate (bits/subcarrier/user) per trial for the
/// configured precoder, always scored on the true channel.
pub fn run_rate_experiment(cfg: &ScenarioConfig) -> Result<RunResult> {
    let ctx = RunContext::new(cfg)?;
    let model = &ctx.model;
    let (p_t, nv) = (cfg.p_t(), cfg.noise_var_dl);
    run_trials(cfg, |trial| {
        let t = trial as u64;
        let scene = trial_scene(cfg, ctx.grid(), trial)?;
        let truth = DownlinkChannelSet::from_scene(&scene, model.geometry(), model.patterns(), cfg.n_c)?;
        let opt = OptimizerConfig { seed: cfg.seed ^ t.wrapping_mul(0x9E37_79B9_7F4A_7C15), ..cfg.optimizer.clone() };
        let mut traces = Vec::new();
        let rate = match cfg.precoder {
            Precoder::Proposed => {
                let (_, reduced) = sound_users(cfg, &ctx, &scene, trial)?;
                let mut coeffs = Vec::with_capacity(reduced.len());
                for (user, red) in reduced.iter().enumerate() {
                    let (est, vbi) = estimate(cfg, ctx.grid(), red, cfg.estimator)?;
                    if let (true, Some(v)) = (cfg.debug_trace, vbi) {
                        traces.push(TraceRecord { trial, user, csv: v.trace_csv() });
                    }
                    coeffs.push(est);
                }
                let est_set = DownlinkChannelSet::from_coeffs(model, &coeffs, cfg.n_c)?;
                let sol = optimize_states(&est_set, &opt, p_t, nv)?;
                truth.rate_at(&sol.states, p_t, nv)?
            }
            Precoder::Upper => upper_bound(&truth, &opt, p_t, nv)?.rate,
            Precoder::GroupOpt => group_opt(&truth, p_t, nv)?.rate,
            Precoder::Random => {
                random_baseline(&truth, &mut rng::stream(cfg.seed, t, Purpose::RandomBaseline), p_t, nv)?.rate
            }
            Precoder::NonFas => nonfas(&scene, model.geometry(), cfg.n_c, p_t, nv)?.rate,
        };
        Ok(TrialOutput { metrics: vec![(RATE, rate)], traces })
    })
}

/// `Σ|ν(d) − ν(d̂)|² / Σ|ν(d)|²` over `dirs`, all states and both
/// polarizations, where `d̂` is the grid point nearest to `d`.
pub fn pattern_grid_nmse(patterns: &PatternSet, grid: &AngleGrid, dirs: &[Direction]) -> f64 {
    let (mut err, mut pow) = (0.0, 0.0);
    for d in dirs {
        let g = grid.point(grid.nearest(d));
        for s in 0..patterns.n_states() {
            for pol in Polarization::BOTH {
                let v = patterns.eval(s, d, pol);
                err += (v - patterns.eval(s, &g, pol)).norm_sqr();
                pow += v.norm_sqr();
            }
        }
    }
    err / pow
}

/// Mean [`pattern_grid_nmse`] for each grid step over `n_sets` synthetic
/// pattern sets, each probed at `n_dirs` uniformly random directions.
pub fn run_grid_fidelity(
    seed: u64,
    steps_deg: &[f64],
    n_sets: usize,
    n_states: usize,
    order: usize,
    n_dirs: usize,
) -> Result<Vec<f64>> {
    if n_sets == 0 || n_dirs == 0 {
        return Err(Error::invalid("need at least one pattern set and one direction"));
    }
    let grids: Vec<AngleGrid> = steps_deg.iter().map(|&s| make_grid(s)).collect::<Result<_>>()?;
    let mut sums = vec![0.0; grids.len()];
    for set in 0..n_sets {
        let mut r = rng::stream(seed, set as u64, Purpose::Patterns);
        let patterns = PatternSet::synthetic(r.random(), n_states, order)?;
        let dirs: Vec<Direction> = (0..n_dirs)
            .map(|_| Direction::new(r.random::<f64>() * std::f64::consts::TAU, (1.0 - 2.0 * r.random::<f64>()).acos()))
            .collect::<Result<_>>()?;
        for (sum, grid) in sums.iter_mut().zip(&grids) {
            *sum += pattern_grid_nmse(&patterns, grid, &dirs);
        }
    }
    Ok(sums.into_iter().map(|s| s / n_sets as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::write_csv;

    fn tiny() -> ScenarioConfig {
        let mut c = ScenarioConfig::default();
        c.apply_text("m1=2\nm2=2\nn_states=4\nn_c=16\ngrid_step=30\ndelay_span=4\nn_paths=3\ntrials=3\ntest_states=5")
            .unwrap();
        c
    }

    #[test]
    fn nmse_rows_per_trial() {
        let r = run_nmse_experiment(&tiny()).unwrap();
        assert_eq!(r.values(NMSE_TRAIN).len(), 3);
        assert_eq!(r.values(NMSE_TEST).len(), 3);
        assert!(r.mean(NMSE_TRAIN).unwrap() < 0.0);
    }

    #[test]
    fn trial_independent_of_run_length() {
        let mut a = tiny();
        a.estimator = Estimator::Omp;
        let mut b = a.clone();
        b.n_trials = 1;
        let ra = run_nmse_experiment(&a).unwrap();
        let rb = run_nmse_experiment(&b).unwrap();
        assert_eq!(ra.values(NMSE_TRAIN)[0], rb.values(NMSE_TRAIN)[0]);
    }

    #[test]
    fn csv_bytes_reproducible() {
        let c = tiny();
        let (mut x, mut y) = (Vec::new(), Vec::new());
        write_csv(&run_nmse_experiment(&c).unwrap(), &mut x).unwrap();
        write_csv(&run_nmse_experiment(&c).unwrap(), &mut y).unwrap();
        assert_eq!(x, y);
        let text = String::from_utf8(x).unwrap();
        assert!(text.starts_with("estimator,precoder,n_users,p_t_db,seed,trial,metric,value\n"));
        assert_eq!(text.lines().count(), 7);
    }

    #[test]
    fn empty_run_writes_header_only() {
        let mut c = tiny();
        c.n_trials = 0;
        let r = run_nmse_experiment(&c).unwrap();
        let mut out = Vec::new();
        write_csv(&r, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 1);
        assert!(r.mean(NMSE_TRAIN).is_none());
    }

    #[test]
    fn single_user_single_state_rate_closed_form() {
        // one state: every precoder sees the same channel, γ = P_T ‖h‖² / σ² per subcarrier
        let mut c = tiny();
        c.apply_text("n_states=1\nm1=2\nm2=1\nn_users=1\ntrials=1").unwrap();
        let ctx = RunContext::new(&c).unwrap();
        let scene = trial_scene(&c, ctx.grid(), 0).unwrap();
        let set = DownlinkChannelSet::from_scene(&scene, ctx.model.geometry(), ctx.model.patterns(), c.n_c).unwrap();
        let mut want = 0.0;
        for n in 0..c.n_c {
            let h = set.channel_at(&[0, 0], n);
            want += (1.0 + c.p_t() * fro_norm_sqr(&h) / c.noise_var_dl).log2();
        }
        want /= c.n_c as f64;
        for p in [Precoder::Random, Precoder::GroupOpt, Precoder::Upper, Precoder::Proposed] {
            c.precoder = p;
            let got = run_rate_experiment(&c).unwrap().values(RATE)[0];
            assert!((got - want).abs() < 1e-9 * want.max(1.0), "{p}: {got} vs {want}");
        }
    }

    #[test]
    fn fidelity_finer_grid_smaller_error() {
        let v = run_grid_fidelity(3, &[30.0, 15.0, 5.0], 3, 4, 4, 200).unwrap();
        assert!(v[0] > v[1] && v[1] > v[2], "{v:?}");
    }

    #[test]
    fn invalid_config_rejected() {
        let mut c = tiny();
        c.n_users = 0;
        assert!(matches!(run_nmse_experiment(&c), Err(Error::Config(_))));
    }
}
