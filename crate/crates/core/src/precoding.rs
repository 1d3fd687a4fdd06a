//! Downlink zero-forcing precoding and analog state selection.
//!
//! With ZF every user sees the same post-precoding SNR
//! `γ_n = K P_T / Tr((H_nᵀ H_n*)⁻¹)` on subcarrier `n`, so the sum rate is
//! maximized by maximizing the common rate `(1/N_c) Σ_n log₂(1 + γ_n/σ²)`.
//!
//! State selection relaxes each antenna's discrete state to weights
//! `s̄_m = softmax(s̃_m)²` that mix the pattern tables linearly, ascends the
//! rate in the latent `s̃` with Adam, and rounds by argmax.

use std::f64::consts::LN_2;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::channel::{delay_phase, steering_vector, ArrayGeometry, GridModel, ScatterScene, SparseCoeffs};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};
use crate::patterns::{PatternSet, Polarization};
use crate::rng::{self, Purpose};
use crate::sounding::random_states;

/// Objective value returned when the relaxed channel loses column rank.
pub const COLLAPSE_PENALTY: f64 = -1e6;
/// Limit on the 1-norm condition number of `HᵀH*`.
pub const COLLAPSE_CONDITION: f64 = 1e10;

/// `(HᵀH*)⁻¹` and `γ = K P_T / Tr((HᵀH*)⁻¹)`.
fn zf_gain(h: &CMat, p_t: f64) -> Result<(CMat, f64)> {
    let (m, k) = h.shape();
    if k == 0 || k > m {
        return Err(Error::shape(format!("ZF needs 1 <= K <= M, got K={k}, M={m}")));
    }
    if !(p_t >= 0.0) {
        return Err(Error::invalid("transmit power must be non-negative"));
    }
    let x = h.transpose() * h.map(|z| z.conj());
    let rank_err = |condition| Error::RankDeficient { what: "downlink channel".into(), condition };
    let xinv = linalg::cholesky(x.clone()).ok_or_else(|| rank_err(f64::INFINITY))?.inverse();
    let cond = one_norm(&x) * one_norm(&xinv);
    if !(cond <= COLLAPSE_CONDITION) {
        return Err(rank_err(cond));
    }
    let tr: f64 = (0..k).map(|i| xinv[(i, i)].re).sum();
    Ok((xinv, k as f64 * p_t / tr))
}

/// `W = √γ H* (HᵀH*)⁻¹` with `γ = K P_T / Tr((HᵀH*)⁻¹)`, so `HᵀW = √γ I` and
/// `Tr(WᴴW) = K P_T`. `h` is `M × K`. Fails when the 1-norm condition
/// number of `HᵀH*` exceeds [`COLLAPSE_CONDITION`].
pub fn zf_precoder(h: &CMat, p_t: f64) -> Result<(CMat, f64)> {
    let (xinv, gamma) = zf_gain(h, p_t)?;
    let w = h.map(|z| z.conj()) * xinv * C64::new(gamma.sqrt(), 0.0);
    Ok((w, gamma))
}

/// `log₂(1 + γ/σ²)`.
pub fn rate(gamma: f64, noise_var: f64) -> f64 {
    (1.0 + gamma / noise_var).log2()
}

/// `softmax(s̃)²`. The square roots of the result sum to one.
pub fn reparam(latent: &[f64]) -> Vec<f64> {
    let mx = latent.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = latent.iter().map(|&x| (x - mx).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|&x| (x / s).powi(2)).collect()
}

/// Per-antenna argmax of the relaxed weights (`M × N_s`); ties go to the
/// smallest state index.
pub fn round_to_discrete(weights: &DMatrix<f64>) -> Vec<usize> {
    (0..weights.nrows())
        .map(|m| {
            let mut best = 0;
            for i in 1..weights.ncols() {
                if weights[(m, i)] > weights[(m, best)] {
                    best = i;
                }
            }
            best
        })
        .collect()
}

/// Per-user channel tables `Z_k[m, i, n]`: the channel of antenna `m` on
/// subcarrier `n` if that antenna is in state `i`. A relaxed state matrix
/// `S̄` gives `h_{n,k}[m] = Σ_i S̄[m,i] Z_k[m,i,n]`.
#[derive(Debug, Clone)]
pub struct DownlinkChannelSet {
    m: usize,
    n_states: usize,
    n_c: usize,
    n_users: usize,
    // [((n·K + k)·M + m)·N_s + i]
    z: Vec<C64>,
}

/// Per-user steering vectors, path gains and pattern tables fed to `build`.
type UserTables = (Vec<Vec<C64>>, Vec<PointGains>, Vec<[Vec<C64>; 2]>);

/// Per-subcarrier V and H gains of one radiating point.
struct PointGains {
    v: Vec<C64>,
    h: Vec<C64>,
}

impl DownlinkChannelSet {
    fn build(
        m: usize,
        n_states: usize,
        n_c: usize,
        users: Vec<UserTables>,
    ) -> Self {
        let n_users = users.len();
        let mut z = vec![C64::new(0.0, 0.0); n_c * n_users * m * n_states];
        for (k, (steer, gains, nu)) in users.into_iter().enumerate() {
            for ((beta, g), [nv, nh]) in steer.iter().zip(&gains).zip(&nu) {
                for n in 0..n_c {
                    let (gv, gh) = (g.v[n], g.h[n]);
                    if gv == C64::new(0.0, 0.0) && gh == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let base = (n * n_users + k) * m;
                    for (mm, b) in beta.iter().enumerate() {
                        let row = (base + mm) * n_states;
                        for i in 0..n_states {
                            z[row + i] += b * (nv[i] * gv + nh[i] * gh);
                        }
                    }
                }
            }
        }
        DownlinkChannelSet { m, n_states, n_c, n_users, z }
    }

    /// Tables of the grid model restricted to each user's support.
    pub fn from_coeffs(model: &GridModel, coeffs: &[SparseCoeffs], n_c: usize) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid("need at least one user"));
        }
        if n_c == 0 {
            return Err(Error::invalid("need at least one subcarrier"));
        }
        let (nu_v, nu_h) = (model.pattern_table(Polarization::V), model.pattern_table(Polarization::H));
        let mut users = Vec::with_capacity(coeffs.len());
        for c in coeffs {
            if c.n_points() != model.n_points() {
                return Err(Error::shape("coefficients do not match the grid"));
            }
            let mut pts: Vec<usize> = c.support().iter().map(|&(b, _)| b).collect();
            pts.sort_unstable();
            pts.dedup();
            let mut steer = Vec::with_capacity(pts.len());
            let mut gains = Vec::with_capacity(pts.len());
            let mut nu = Vec::with_capacity(pts.len());
            for &b in &pts {
                let mut g = PointGains { v: vec![C64::new(0.0, 0.0); n_c], h: vec![C64::new(0.0, 0.0); n_c] };
                for &(bb, l) in c.support() {
                    if bb != b {
                        continue;
                    }
                    let (pv, ph) = (c.psi_v()[(b, l)], c.psi_h()[(b, l)]);
                    for n in 0..n_c {
                        let e = delay_phase(l, n, n_c);
                        g.v[n] += pv * e;
                        g.h[n] += ph * e;
                    }
                }
                steer.push(model.steering().column(b).iter().copied().collect());
                gains.push(g);
                nu.push([nu_v.column(b).iter().copied().collect(), nu_h.column(b).iter().copied().collect()]);
            }
            users.push((steer, gains, nu));
        }
        Ok(Self::build(model.m(), model.n_states(), n_c, users))
    }

    /// Tables of the exact per-path channel of every user in `scene`.
    pub fn from_scene(scene: &ScatterScene, geom: &ArrayGeometry, patterns: &PatternSet, n_c: usize) -> Result<Self> {
        if n_c == 0 {
            return Err(Error::invalid("need at least one subcarrier"));
        }
        let ns = patterns.n_states();
        let users = (0..scene.n_users())
            .map(|k| {
                let mut steer = Vec::new();
                let mut gains = Vec::new();
                let mut nu = Vec::new();
                for p in scene.paths(k) {
                    steer.push(steering_vector(geom, &p.dir).iter().copied().collect());
                    let e: Vec<C64> = (0..n_c).map(|n| delay_phase(p.delay, n, n_c)).collect();
                    gains.push(PointGains {
                        v: e.iter().map(|x| x * p.psi_v).collect(),
                        h: e.iter().map(|x| x * p.psi_h).collect(),
                    });
                    nu.push([
                        (0..ns).map(|i| patterns.eval(i, &p.dir, Polarization::V)).collect(),
                        (0..ns).map(|i| patterns.eval(i, &p.dir, Polarization::H)).collect(),
                    ]);
                }
                (steer, gains, nu)
            })
            .collect();
        Ok(Self::build(geom.m(), ns, n_c, users))
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_c(&self) -> usize {
        self.n_c
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    #[inline]
    fn idx(&self, n: usize, k: usize, m: usize, i: usize) -> usize {
        ((n * self.n_users + k) * self.m + m) * self.n_states + i
    }

    /// `H_n` (`M × K`) for relaxed weights `M × N_s`.
    pub fn channel(&self, weights: &DMatrix<f64>, n: usize) -> CMat {
        CMat::from_fn(self.m, self.n_users, |m, k| {
            let row = self.idx(n, k, m, 0);
            (0..self.n_states).map(|i| self.z[row + i] * weights[(m, i)]).sum()
        })
    }

    /// `H_n` (`M × K`) for discrete states.
    pub fn channel_at(&self, states: &[usize], n: usize) -> CMat {
        CMat::from_fn(self.m, self.n_users, |m, k| self.z[self.idx(n, k, m, states[m])])
    }

    fn check_states(&self, states: &[usize]) -> Result<()> {
        if states.len() != self.m || states.iter().any(|&s| s >= self.n_states) {
            return Err(Error::invalid(format!(
                "need {} states in 0..{}, got {states:?}",
                self.m, self.n_states
            )));
        }
        Ok(())
    }

    /// Per-subcarrier ZF SNR and the average rate at discrete states.
    /// Subcarriers where ZF is infeasible get `γ = 0`.
    pub fn evaluate_states(&self, states: &[usize], p_t: f64, noise_var: f64) -> Result<(f64, Vec<f64>)> {
        self.check_states(states)?;
        if self.n_users > self.m {
            return Err(Error::invalid(format!("K={} exceeds M={}", self.n_users, self.m)));
        }
        let gammas: Vec<f64> = (0..self.n_c)
            .into_par_iter()
            .map(|n| match zf_gain(&self.channel_at(states, n), p_t) {
                Ok((_, g)) => Ok(g),
                Err(Error::RankDeficient { .. }) => Ok(0.0),
                Err(e) => Err(e),
            })
            .collect::<Result<_>>()?;
        let r = gammas.iter().map(|&g| rate(g, noise_var)).sum::<f64>() / self.n_c as f64;
        Ok((r, gammas))
    }

    /// Average rate at discrete states.
    pub fn rate_at(&self, states: &[usize], p_t: f64, noise_var: f64) -> Result<f64> {
        self.evaluate_states(states, p_t, noise_var).map(|(r, _)| r)
    }
}

/// Value and latent gradient of the relaxed rate.
#[derive(Debug, Clone)]
pub struct ObjectiveEval {
    pub value: f64,
    /// `M × N_s`, same layout as the latent matrix.
    pub gradient: DMatrix<f64>,
    /// True when some subcarrier's `HᵀH*` exceeded the condition limit; the
    /// value is then [`COLLAPSE_PENALTY`] and the gradient zero.
    pub collapsed: bool,
}

/// Applies [`reparam`] row by row to an `M × N_s` latent matrix.
pub fn weights_of(latent: &DMatrix<f64>) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(latent.nrows(), latent.ncols());
    for m in 0..latent.nrows() {
        let row: Vec<f64> = latent.row(m).iter().copied().collect();
        for (i, v) in reparam(&row).into_iter().enumerate() {
            w[(m, i)] = v;
        }
    }
    w
}

/// Relaxed rate `(1/N_c) Σ_n log₂(1 + K P_T / (σ² Tr((H_nᴴH_n)⁻¹)))` at
/// weights `S̄`, with its gradient in `S̄`.
pub fn objective_weights(
    set: &DownlinkChannelSet,
    weights: &DMatrix<f64>,
    p_t: f64,
    noise_var: f64,
) -> Result<ObjectiveEval> {
    let (m, ns, nk) = (set.m, set.n_states, set.n_users);
    if weights.shape() != (m, ns) {
        return Err(Error::shape(format!("weights must be {m}×{ns}")));
    }
    if nk > m {
        return Err(Error::invalid(format!("K={nk} exceeds M={m}")));
    }
    let c = nk as f64 * p_t / noise_var;
    let w: Vec<f64> = (0..m * ns).map(|j| weights[(j / ns, j % ns)]).collect();
    let mut grad = vec![0.0; m * ns];
    let mut h = vec![C64::new(0.0, 0.0); nk * m];
    let mut x = CMat::zeros(nk, nk);
    let mut value = 0.0;
    for n in 0..set.n_c {
        for k in 0..nk {
            for mm in 0..m {
                let row = set.idx(n, k, mm, 0);
                let zr = &set.z[row..row + ns];
                let wr = &w[mm * ns..(mm + 1) * ns];
                h[k * m + mm] = zr.iter().zip(wr).map(|(z, &wi)| z * wi).sum();
            }
        }
        for a in 0..nk {
            for b in a..nk {
                let s: C64 = (0..m).map(|mm| h[a * m + mm].conj() * h[b * m + mm]).sum();
                x[(a, b)] = s;
                x[(b, a)] = s.conj();
            }
        }
        let xinv = match linalg::cholesky(x.clone()) {
            Some(ch) => ch.inverse(),
            None => return Ok(collapsed(m, ns)),
        };
        if !(one_norm(&x) * one_norm(&xinv) <= COLLAPSE_CONDITION) {
            return Ok(collapsed(m, ns));
        }
        let t: f64 = (0..nk).map(|i| xinv[(i, i)].re).sum();
        value += (1.0 + c / t).log2();
        // ∂J/∂H* = (1/N_c) c / (ln2 · t (t + c)) · H X⁻²
        let scale = 2.0 * c / (LN_2 * t * (t + c) * set.n_c as f64);
        let x2 = &xinv * &xinv;
        for k in 0..nk {
            for mm in 0..m {
                let g: C64 = (0..nk).map(|j| h[j * m + mm] * x2[(j, k)]).sum();
                let gc = g.conj() * scale;
                let row = set.idx(n, k, mm, 0);
                for (gr, z) in grad[mm * ns..(mm + 1) * ns].iter_mut().zip(&set.z[row..row + ns]) {
                    *gr += (gc * z).re;
                }
            }
        }
    }
    let gradient = DMatrix::from_fn(m, ns, |mm, i| grad[mm * ns + i]);
    Ok(ObjectiveEval { value: value / set.n_c as f64, gradient, collapsed: false })
}

fn collapsed(m: usize, ns: usize) -> ObjectiveEval {
    ObjectiveEval { value: COLLAPSE_PENALTY, gradient: DMatrix::zeros(m, ns), collapsed: true }
}

/// Relaxed rate at latent `S̃` (`M × N_s`) with the gradient in `S̃`.
pub fn objective(set: &DownlinkChannelSet, latent: &DMatrix<f64>, p_t: f64, noise_var: f64) -> Result<ObjectiveEval> {
    let w = weights_of(latent);
    let mut ev = objective_weights(set, &w, p_t, noise_var)?;
    if ev.collapsed {
        return Ok(ev);
    }
    // s̄ = p²: ∂/∂s̃_j = 2 p_j² g_j − 2 p_j Σ_i g_i p_i²
    let mut gl = DMatrix::zeros(latent.nrows(), latent.ncols());
    for m in 0..latent.nrows() {
        let p: Vec<f64> = (0..latent.ncols()).map(|i| w[(m, i)].sqrt()).collect();
        let dot: f64 = (0..latent.ncols()).map(|i| ev.gradient[(m, i)] * w[(m, i)]).sum();
        for j in 0..latent.ncols() {
            gl[(m, j)] = 2.0 * w[(m, j)] * ev.gradient[(m, j)] - 2.0 * p[j] * dot;
        }
    }
    ev.gradient = gl;
    Ok(ev)
}

fn one_norm(x: &CMat) -> f64 {
    (0..x.ncols()).map(|j| x.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub lr: f64,
    pub steps: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Standard deviation of the random initial latent entries.
    pub init_scale: f64,
    /// Greedy single-antenna sweeps applied to the rounded states (0 = off).
    pub refine_sweeps: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig { lr: 1e-3, steps: 500, restarts: 4, seed: 0, init_scale: 0.1, refine_sweeps: 5 }
    }
}

/// Outcome of a state selection.
#[derive(Debug, Clone)]
pub struct PrecoderSolution {
    /// `M × N_s` latent matrix (absent for non-gradient baselines).
    pub latent: Option<DMatrix<f64>>,
    /// `M × N_s` relaxed weights.
    pub weights: Option<DMatrix<f64>>,
    pub states: Vec<usize>,
    /// ZF SNR per subcarrier at `states` on the channel the selection used.
    pub snr: Vec<f64>,
    /// Average rate at `states` on that channel (bits/subcarrier/user).
    pub rate: f64,
    /// Relaxed objective per step of the kept restart.
    pub trace: Vec<f64>,
}

impl PrecoderSolution {
    fn discrete(set: &DownlinkChannelSet, states: Vec<usize>, p_t: f64, noise_var: f64) -> Result<Self> {
        let (rate, snr) = set.evaluate_states(&states, p_t, noise_var)?;
        Ok(PrecoderSolution { latent: None, weights: None, states, snr, rate, trace: Vec::new() })
    }
}

struct Trajectory {
    latent: DMatrix<f64>,
    trace: Vec<f64>,
    states: Vec<usize>,
    rate: f64,
}

fn adam_run(
    set: &DownlinkChannelSet,
    init: DMatrix<f64>,
    cfg: &OptimizerConfig,
    p_t: f64,
    noise_var: f64,
) -> Result<Trajectory> {
    let (b1, b2, eps) = (0.9, 0.999, 1e-8);
    let mut x = init;
    let mut mo = DMatrix::zeros(x.nrows(), x.ncols());
    let mut ve = DMatrix::zeros(x.nrows(), x.ncols());
    let mut trace = Vec::with_capacity(cfg.steps + 1);
    for step in 1..=cfg.steps {
        let ev = objective(set, &x, p_t, noise_var)?;
        trace.push(ev.value);
        if ev.collapsed {
            break;
        }
        let g = ev.gradient;
        mo = &mo * b1 + &g * (1.0 - b1);
        ve = &ve * b2 + g.component_mul(&g) * (1.0 - b2);
        let c1 = 1.0 - b1.powi(step as i32);
        let c2 = 1.0 - b2.powi(step as i32);
        for (xi, (mi, vi)) in x.iter_mut().zip(mo.iter().zip(ve.iter())) {
            *xi += cfg.lr * (mi / c1) / ((vi / c2).sqrt() + eps);
        }
    }
    trace.push(objective(set, &x, p_t, noise_var)?.value);
    let mut states = round_to_discrete(&weights_of(&x));
    let mut rate = set.rate_at(&states, p_t, noise_var)?;
    for _ in 0..cfg.refine_sweeps {
        let before = rate;
        for m in 0..set.m {
            let mut best = states[m];
            for i in 0..set.n_states {
                if i == best {
                    continue;
                }
                states[m] = i;
                let r = set.rate_at(&states, p_t, noise_var)?;
                if r > rate {
                    rate = r;
                    best = i;
                }
            }
            states[m] = best;
        }
        if rate <= before {
            break;
        }
    }
    Ok(Trajectory { latent: x, trace, states, rate })
}

/// Adam ascent on the relaxed rate from `restarts` random latent starts,
/// run in parallel. The restart whose rounded states give the highest rate
/// on `set` is kept.
pub fn optimize_states(
    set: &DownlinkChannelSet,
    cfg: &OptimizerConfig,
    p_t: f64,
    noise_var: f64,
) -> Result<PrecoderSolution> {
    if cfg.restarts == 0 || !(cfg.lr > 0.0) || !(cfg.init_scale >= 0.0) {
        return Err(Error::invalid("optimizer needs restarts >= 1, lr > 0 and init_scale >= 0"));
    }
    let (m, ns) = (set.m, set.n_states);
    let normal = Normal::new(0.0, cfg.init_scale.max(f64::MIN_POSITIVE)).map_err(|e| Error::invalid(e.to_string()))?;
    let inits: Vec<DMatrix<f64>> = (0..cfg.restarts)
        .map(|r| {
            let mut g = rng::stream(cfg.seed, r as u64, Purpose::Optimizer);
            DMatrix::from_fn(m, ns, |_, _| if cfg.init_scale > 0.0 { normal.sample(&mut g) } else { 0.0 })
        })
        .collect();
    let runs: Vec<Trajectory> = inits
        .into_par_iter()
        .map(|x0| adam_run(set, x0, cfg, p_t, noise_var))
        .collect::<Result<_>>()?;
    let best = runs.into_iter().reduce(|a, b| if b.rate > a.rate { b } else { a }).expect("restarts >= 1");
    let (rate, snr) = set.evaluate_states(&best.states, p_t, noise_var)?;
    Ok(PrecoderSolution {
        weights: Some(weights_of(&best.latent)),
        latent: Some(best.latent),
        states: best.states,
        snr,
        rate,
        trace: best.trace,
    })
}

/// Rates of the `N_s` configurations where every antenna uses the same state.
pub fn group_opt_table(set: &DownlinkChannelSet, p_t: f64, noise_var: f64) -> Result<Vec<f64>> {
    (0..set.n_states).map(|s| set.rate_at(&vec![s; set.m], p_t, noise_var)).collect()
}

/// Best common state by exhaustive search (ties to the lowest state).
pub fn group_opt(set: &DownlinkChannelSet, p_t: f64, noise_var: f64) -> Result<PrecoderSolution> {
    let table = group_opt_table(set, p_t, noise_var)?;
    let mut best = 0;
    for (s, &r) in table.iter().enumerate() {
        if r > table[best] {
            best = s;
        }
    }
    PrecoderSolution::discrete(set, vec![best; set.m], p_t, noise_var)
}

/// Independent uniform states.
pub fn random_baseline<R: Rng + ?Sized>(
    set: &DownlinkChannelSet,
    rng: &mut R,
    p_t: f64,
    noise_var: f64,
) -> Result<PrecoderSolution> {
    let states = random_states(rng, set.m, set.n_states);
    PrecoderSolution::discrete(set, states, p_t, noise_var)
}

/// Conventional array: every antenna uses the fixed isotropic pattern.
pub fn nonfas(scene: &ScatterScene, geom: &ArrayGeometry, n_c: usize, p_t: f64, noise_var: f64) -> Result<PrecoderSolution> {
    let set = DownlinkChannelSet::from_scene(scene, geom, &PatternSet::isotropic(), n_c)?;
    PrecoderSolution::discrete(&set, vec![0; geom.m()], p_t, noise_var)
}

/// [`optimize_states`] on the true channel.
pub fn upper_bound(
    true_set: &DownlinkChannelSet,
    cfg: &OptimizerConfig,
    p_t: f64,
    noise_var: f64,
) -> Result<PrecoderSolution> {
    optimize_states(true_set, cfg, p_t, noise_var)
}

/// Best discrete configuration by enumerating all `N_s^M` of them.
pub fn exhaustive_search(set: &DownlinkChannelSet, p_t: f64, noise_var: f64) -> Result<PrecoderSolution> {
    let total = (set.n_states as f64).powi(set.m as i32);
    if total > 1e6 {
        return Err(Error::invalid(format!("{total:.0} configurations is too many to enumerate")));
    }
    let mut states = vec![0; set.m];
    let mut best = (f64::NEG_INFINITY, states.clone());
    loop {
        let r = set.rate_at(&states, p_t, noise_var)?;
        if r > best.0 {
            best = (r, states.clone());
        }
        let mut pos = 0;
        loop {
            if pos == set.m {
                return PrecoderSolution::discrete(set, best.1, p_t, noise_var);
            }
            states[pos] += 1;
            if states[pos] < set.n_states {
                break;
            }
            states[pos] = 0;
            pos += 1;
        }
    }
}
