//! Mask-assisted turbo variational Bayesian estimator.
//!
//! The model `Ỹ = A Ψ̃ F̄ᵀ + Z` is split at `X = A Ψ̃` (`M̃ × L`):
//!
//! * module A runs a frequency-to-delay LMMSE on `Ỹᵀ = F̄ Xᵀ + Zᵀ` with an
//!   i.i.d. prior of variance `σ²_pri` on `X`, and passes the extrinsic
//!   message `(Ω_blik, σ²_blik)` on;
//! * module B treats each column `ω_l` of `Ω_blik` as `A ψ̃_l + noise` and
//!   runs a variational Bayesian update on the masked cells, with a
//!   Bernoulli-Gaussian-style prior: cells outside the mask are exactly zero,
//!   cells inside share a Gamma-distributed precision `α_{l,b}` across both
//!   polarizations.
//!
//! Module B feeds back only the scalar prior variance `σ²_pri`.

use nalgebra::{Cholesky, DMatrix, Dyn};
use rayon::prelude::*;

use crate::channel::{AngleGrid, SparseCoeffs};
use crate::error::{Error, Result};
use crate::linalg::{self, fro_norm_sqr, CMat, CVec, C64};
use crate::sounding::ReducedObservation;

/// Binary mask over the angular-delay cells with per-delay active lists.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    d: DMatrix<bool>,
    active: Vec<Vec<usize>>,
}

impl Mask {
    pub fn from_matrix(d: DMatrix<bool>) -> Self {
        let active = (0..d.ncols()).map(|l| (0..d.nrows()).filter(|&b| d[(b, l)]).collect()).collect();
        Mask { d, active }
    }

    pub fn full(n_points: usize, delay_span: usize) -> Self {
        Self::from_matrix(DMatrix::from_element(n_points, delay_span, true))
    }

    pub fn matrix(&self) -> &DMatrix<bool> {
        &self.d
    }

    /// Active grid indices for delay `l`, ascending.
    pub fn active(&self, l: usize) -> &[usize] {
        &self.active[l]
    }

    pub fn count(&self) -> usize {
        self.active.iter().map(Vec::len).sum()
    }

    #[inline]
    pub fn get(&self, b: usize, l: usize) -> bool {
        self.d[(b, l)]
    }
}

/// Dilates `support` by one cell in elevation index, azimuth index (cyclic
/// over the `n_phi` azimuth columns) and delay: each support cell switches on
/// its 3×3×3 neighbourhood, clipped at the elevation and delay edges.
pub fn build_mask(support: &[(usize, usize)], grid: &AngleGrid, delay_span: usize) -> Result<Mask> {
    if support.is_empty() {
        return Err(Error::invalid("mask needs a non-empty support"));
    }
    let (nt, np) = (grid.n_theta() as isize, grid.n_phi() as isize);
    let mut d = DMatrix::from_element(grid.len(), delay_span, false);
    for &(b, l) in support {
        if b >= grid.len() || l >= delay_span {
            return Err(Error::shape(format!("support cell ({b},{l}) out of range")));
        }
        let (it, ip) = grid.coords(b);
        for dt in -1..=1isize {
            let t = it as isize + dt;
            if t < 0 || t >= nt {
                continue;
            }
            for dp in -1..=1isize {
                let p = (ip as isize + dp).rem_euclid(np);
                for dl in -1..=1isize {
                    let ll = l as isize + dl;
                    if ll < 0 || ll >= delay_span as isize {
                        continue;
                    }
                    d[(grid.index(t as usize, p as usize), ll as usize)] = true;
                }
            }
        }
    }
    Ok(Mask::from_matrix(d))
}

/// How `E[α⁻¹]` is computed from the Gamma posterior `(ã, c̃)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InverseMoment {
    /// `c̃ / (ã − 1)` (falls back to `c̃ / ã` when `ã ≤ 1`). Keeps noise-only
    /// cells near the noise level instead of shrinking them.
    Exact,
    /// `1 / E[α] = c̃ / ã`, the precision the mean-field `q(ψ)` update
    /// actually sees.
    #[default]
    MeanField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VbiConfig {
    pub a0: f64,
    pub c0: f64,
    pub max_iter: usize,
    /// Weight of the new `κ` in `κ ← damping·κ_new + (1 − damping)·κ_old`.
    pub damping: f64,
    pub var_floor: f64,
    pub inverse_moment: InverseMoment,
    /// Prior variance of mask cells outside the initial support, relative to
    /// the largest initial cell power.
    pub dilation_seed: f64,
    /// Final support keeps cells with power at least this fraction of the
    /// strongest cell.
    pub prune_ratio: f64,
}

impl Default for VbiConfig {
    fn default() -> Self {
        VbiConfig {
            a0: 1e-6,
            c0: 1e-6,
            max_iter: 20,
            damping: 1.0,
            var_floor: 1e-12,
            inverse_moment: InverseMoment::MeanField,
            dilation_seed: 1e-3,
            prune_ratio: 1e-4,
        }
    }
}

impl VbiConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.a0 > 0.0 && self.c0 > 0.0) {
            return Err(Error::invalid("a0 and c0 must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::invalid("damping must be in (0, 1]"));
        }
        if !(self.var_floor > 0.0) {
            return Err(Error::invalid("variance floor must be positive"));
        }
        Ok(())
    }
}

/// One row of the diagnostic trace.
#[derive(Debug, Clone, PartialEq)]
pub struct VbiTraceRow {
    pub iteration: usize,
    pub prior_var: f64,
    pub post_var: f64,
    pub extrinsic_var: f64,
    /// `‖Ỹ − A Ψ̂ F̄ᵀ‖_F`.
    pub data_fit: f64,
    /// Coefficient NMSE against a supplied truth.
    pub nmse: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct VbiOutcome {
    pub coeffs: SparseCoeffs,
    pub iterations: usize,
    pub diverged: bool,
    pub trace: Vec<VbiTraceRow>,
}

impl VbiOutcome {
    /// Trace as CSV with a header row.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("iteration,prior_var,post_var,extrinsic_var,data_fit,nmse\n");
        for r in &self.trace {
            let nmse = r.nmse.map(|v| format!("{v:.8e}")).unwrap_or_default();
            s.push_str(&format!(
                "{},{:.8e},{:.8e},{:.8e},{:.8e},{}\n",
                r.iteration, r.prior_var, r.post_var, r.extrinsic_var, r.data_fit, nmse
            ));
        }
        s
    }
}

/// `σ²_pri = (1/(M̃L)) Σ_l Tr(A diag([κ_l; κ_l]) Aᴴ)`, evaluated through column
/// norms and clamped below by `floor`. `kappa` is `|B| × L`.
pub fn prior_variance(kappa: &DMatrix<f64>, col_norms: &[f64], m_tilde: usize, floor: f64) -> f64 {
    let (nb, nl) = kappa.shape();
    let mut acc = 0.0;
    for l in 0..nl {
        for b in 0..nb {
            let k = kappa[(b, l)];
            if k != 0.0 {
                acc += k * col_norms[b];
            }
        }
    }
    (acc / (m_tilde * nl) as f64).max(floor)
}

/// `‖a_V,b‖² + ‖a_H,b‖²` for every grid point.
pub fn column_norms(reduced: &ReducedObservation) -> Vec<f64> {
    (0..reduced.n_points())
        .map(|b| reduced.a_v.column(b).norm_squared() + reduced.a_h.column(b).norm_squared())
        .collect()
}

/// Frequency-to-delay LMMSE with a row-shared covariance:
/// `C = (I/σ²_pri + F̄ᴴF̄/σ²_z)⁻¹`, `Ω_apos = C F̄ᴴ Ỹᵀ / σ²_z` (`L × M̃`),
/// `σ²_post = Tr(C)/L`.
pub fn lmmse_freq_delay(y: &CMat, f_bar: &CMat, noise_var: f64, prior_var: f64) -> Result<(CMat, CMat, f64)> {
    if !(noise_var > 0.0 && prior_var > 0.0) {
        return Err(Error::invalid("LMMSE needs positive variances"));
    }
    let nl = f_bar.ncols();
    let mut info = f_bar.adjoint() * f_bar / C64::new(noise_var, 0.0);
    linalg::add_diag(&mut info, 1.0 / prior_var);
    let c = linalg::cholesky(info)
        .ok_or_else(|| Error::Numerical("LMMSE information matrix is not positive definite".into()))?
        .inverse();
    let omega = &c * f_bar.adjoint() * y.transpose() / C64::new(noise_var, 0.0);
    let post = (0..nl).map(|i| c[(i, i)].re).sum::<f64>() / nl as f64;
    Ok((omega, c, post))
}

/// Extrinsic message of module A: `σ²_blik = σ²_pri σ²_post / (σ²_pri − σ²_post)`,
/// `Ω_blik = σ²_pri / (σ²_pri − σ²_post) · Ω_aposᵀ`. The variance difference is
/// clamped to at least `1e-2 σ²_pri`.
pub fn extrinsic_likelihood(omega_apos: &CMat, prior_var: f64, post_var: f64) -> (CMat, f64) {
    let diff = (prior_var - post_var).max(1e-2 * prior_var);
    let var = prior_var * post_var / diff;
    let scale = prior_var / diff;
    (omega_apos.transpose() * C64::new(scale, 0.0), var)
}

/// Posterior of the active cells of one delay bin.
///
/// `active` lists grid indices, `kappa` their prior variances (shared by both
/// polarizations). Returns posterior means and variances ordered
/// `[V of active..., H of active...]`. Uses the Woodbury form when the
/// number of unknowns exceeds `M̃`.
pub fn reduced_lmmse(
    active: &[usize],
    kappa: &[f64],
    reduced: &ReducedObservation,
    omega: &CVec,
    extrinsic_var: f64,
    floor: f64,
) -> Result<(CVec, Vec<f64>)> {
    let n = active.len();
    if n == 0 {
        return Ok((CVec::zeros(0), Vec::new()));
    }
    let mt = reduced.m_tilde();
    let mut a = CMat::zeros(mt, 2 * n);
    for (j, &b) in active.iter().enumerate() {
        a.set_column(j, &reduced.a_v.column(b));
        a.set_column(n + j, &reduced.a_h.column(b));
    }
    let k: Vec<f64> = kappa.iter().chain(kappa.iter()).map(|&x| x.max(floor)).collect();
    let s = extrinsic_var;
    if 2 * n <= mt {
        let mut info = a.adjoint() * &a / C64::new(s, 0.0);
        for (i, ki) in k.iter().enumerate() {
            info[(i, i)] += 1.0 / ki;
        }
        let chol = jittered_cholesky(info, floor)?;
        let c = chol.inverse();
        let mu = &c * (a.adjoint() * omega) / C64::new(s, 0.0);
        let var = (0..2 * n).map(|i| c[(i, i)].re.max(0.0)).collect();
        Ok((mu, var))
    } else {
        // C = K − K Aᴴ (sI + A K Aᴴ)⁻¹ A K
        let mut ak = a.clone();
        for (j, kj) in k.iter().enumerate() {
            ak.column_mut(j).scale_mut(*kj);
        }
        let mut inner = &ak * a.adjoint();
        linalg::add_diag(&mut inner, s);
        let chol = jittered_cholesky(inner, floor)?;
        let w = chol.solve(omega);
        let mu = ak.adjoint() * w;
        let sak = chol.solve(&ak);
        let var = (0..2 * n)
            .map(|j| (k[j] - ak.column(j).dotc(&sak.column(j)).re).max(0.0))
            .collect();
        Ok((mu, var))
    }
}

/// Cholesky factor of `x`, retrying with a diagonal jitter that starts at
/// `max(floor, 1e-12 · max diag)` and grows tenfold up to six times.
fn jittered_cholesky(mut x: CMat, floor: f64) -> Result<Cholesky<C64, Dyn>> {
    if let Some(c) = linalg::cholesky(x.clone()) {
        return Ok(c);
    }
    let scale = (0..x.nrows()).map(|i| x[(i, i)].re.abs()).fold(0.0, f64::max);
    let mut jitter = floor.max(1e-12 * scale);
    let mut added = 0.0;
    for _ in 0..6 {
        linalg::add_diag(&mut x, jitter - added);
        added = jitter;
        if let Some(c) = linalg::cholesky(x.clone()) {
            return Ok(c);
        }
        jitter *= 10.0;
    }
    Err(Error::Numerical("reduced LMMSE is singular".into()))
}

/// Gamma posterior of one cell's precision: `ã = a0 + 2`,
/// `c̃ = c0 + |μ_V|² + |μ_H|² + σ²_V + σ²_H`.
pub fn update_alpha(a0: f64, c0: f64, mu_v: C64, mu_h: C64, var_v: f64, var_h: f64) -> (f64, f64) {
    (a0 + 2.0, c0 + mu_v.norm_sqr() + mu_h.norm_sqr() + var_v + var_h)
}

/// `E[α⁻¹]` under the chosen rule.
pub fn inverse_moment(a: f64, c: f64, rule: InverseMoment) -> f64 {
    match rule {
        InverseMoment::Exact if a > 1.0 => c / (a - 1.0),
        _ => c / a,
    }
}

/// Runs the turbo iterations starting from `init` (typically the OMP
/// estimate). Cells in the initial support start with prior variance
/// `|ψ_V|² + |ψ_H|²`, other mask cells with `dilation_seed` times the
/// largest of those.
pub fn run_turbo_vbi(
    reduced: &ReducedObservation,
    mask: &Mask,
    config: &VbiConfig,
    init: &SparseCoeffs,
) -> Result<VbiOutcome> {
    run_turbo_vbi_traced(reduced, mask, config, init, None)
}

/// [`run_turbo_vbi`] that also records the coefficient NMSE against `truth`
/// in the trace.
pub fn run_turbo_vbi_traced(
    reduced: &ReducedObservation,
    mask: &Mask,
    config: &VbiConfig,
    init: &SparseCoeffs,
    truth: Option<&SparseCoeffs>,
) -> Result<VbiOutcome> {
    config.validate()?;
    let (nb, nl) = (reduced.n_points(), reduced.delay_span());
    if mask.matrix().shape() != (nb, nl) || init.psi_v().shape() != (nb, nl) {
        return Err(Error::shape("mask, initial coefficients and observation disagree in shape"));
    }
    let mt = reduced.m_tilde();
    let floor = config.var_floor;
    let noise_var = reduced.noise_var.max(floor);
    let norms = column_norms(reduced);

    let mut kappa = DMatrix::<f64>::zeros(nb, nl);
    let mut seed_max = 0.0f64;
    for &(b, l) in init.support() {
        seed_max = seed_max.max(init.cell_power(b, l));
    }
    if seed_max <= 0.0 {
        seed_max = 1.0;
    }
    for l in 0..nl {
        for &b in mask.active(l) {
            let p = if init.mask()[(b, l)] { init.cell_power(b, l) } else { 0.0 };
            kappa[(b, l)] = if p > 0.0 { p } else { config.dilation_seed * seed_max };
        }
    }
    let mut prior = prior_variance(&kappa, &norms, mt, floor);

    let mut psi_v = CMat::zeros(nb, nl);
    let mut psi_h = CMat::zeros(nb, nl);
    let mut trace = Vec::with_capacity(config.max_iter);
    let mut first_post = None;
    let mut diverged = false;
    let mut iterations = 0;

    for it in 0..config.max_iter {
        let (omega_apos, _c, post) = lmmse_freq_delay(&reduced.y, &reduced.f_bar, noise_var, prior)?;
        let post0 = *first_post.get_or_insert(post);
        if !post.is_finite() || post > 1e6 * post0 {
            diverged = true;
            break;
        }
        let (omega_b, ext_var) = extrinsic_likelihood(&omega_apos, prior, post);

        let per_delay: Vec<Result<(CVec, Vec<f64>)>> = (0..nl)
            .into_par_iter()
            .map(|l| {
                let act = mask.active(l);
                let k: Vec<f64> = act.iter().map(|&b| kappa[(b, l)]).collect();
                reduced_lmmse(act, &k, reduced, &omega_b.column(l).into_owned(), ext_var, floor)
            })
            .collect();

        for (l, res) in per_delay.into_iter().enumerate() {
            let (mu, var) = res?;
            let act = mask.active(l);
            let n = act.len();
            for (j, &b) in act.iter().enumerate() {
                let (mv, mh) = (mu[j], mu[n + j]);
                psi_v[(b, l)] = mv;
                psi_h[(b, l)] = mh;
                let (a, c) = update_alpha(config.a0, config.c0, mv, mh, var[j], var[n + j]);
                let new = inverse_moment(a, c, config.inverse_moment).max(floor);
                kappa[(b, l)] = config.damping * new + (1.0 - config.damping) * kappa[(b, l)];
            }
        }
        prior = prior_variance(&kappa, &norms, mt, floor);
        iterations = it + 1;

        let fit = (&reduced.y - reduced.apply(&psi_v, &psi_h)).norm();
        let nmse = truth.map(|t| {
            let err = fro_norm_sqr(&(&psi_v - t.psi_v())) + fro_norm_sqr(&(&psi_h - t.psi_h()));
            err / (fro_norm_sqr(t.psi_v()) + fro_norm_sqr(t.psi_h()))
        });
        trace.push(VbiTraceRow {
            iteration: iterations,
            prior_var: prior,
            post_var: post,
            extrinsic_var: ext_var,
            data_fit: fit,
            nmse,
        });
    }

    let mut max_p = 0.0f64;
    for l in 0..nl {
        for &b in mask.active(l) {
            max_p = max_p.max(psi_v[(b, l)].norm_sqr() + psi_h[(b, l)].norm_sqr());
        }
    }
    let mut support = Vec::new();
    if max_p > 0.0 {
        for l in 0..nl {
            for &b in mask.active(l) {
                if psi_v[(b, l)].norm_sqr() + psi_h[(b, l)].norm_sqr() >= config.prune_ratio * max_p {
                    support.push((b, l));
                }
            }
        }
    }
    let coeffs = SparseCoeffs::with_mask(psi_v, psi_h, &support, mask.matrix().clone())?;
    Ok(VbiOutcome { coeffs, iterations, diverged, trace })
}
