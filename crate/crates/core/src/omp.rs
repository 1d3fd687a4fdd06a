//! Shared-support orthogonal matching pursuit.
//!
//! Each dictionary atom is the pair `q̃_i = [q_V,i  q_H,i]` with
//! `q_P,i = f̄_l ⊗ a_P,b` and vectorised index `i = b + |B| l`. Atoms are
//! scored through their two-column least-squares fit to the residual (see
//! [`SelectionRule`]); the support is refitted jointly after every selection
//! through an incrementally grown Cholesky factor.

use std::collections::HashSet;

use crate::channel::SparseCoeffs;
use crate::error::{Error, Result};
use crate::linalg::{fro_norm_sqr, CMat, C64, ZERO};
use crate::sounding::ReducedObservation;

/// Atom scoring rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectionRule {
    /// `‖(q̃ᴴq̃)⁻¹ q̃ᴴ r‖²`, the energy of the atom's LS coefficients.
    /// Favours weak, poorly conditioned atoms, so it can miss even a
    /// single noiseless path.
    Coefficient,
    /// `rᴴ q̃ (q̃ᴴq̃)⁻¹ q̃ᴴ r`, the residual energy the atom explains.
    #[default]
    Projection,
}

/// Pursuit settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmpConfig {
    /// Per-entry noise variance `σ²` of `Ỹ`, sets the stopping threshold.
    pub noise_var: f64,
    /// Iteration cap; `None` uses [`default_max_iter`].
    pub max_iter: Option<usize>,
    pub rule: SelectionRule,
}

impl OmpConfig {
    pub fn new(noise_var: f64) -> Self {
        OmpConfig { noise_var, max_iter: None, rule: SelectionRule::default() }
    }
}

/// Why the pursuit stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmpStop {
    /// Residual energy reached the noise threshold.
    Threshold,
    /// The best new atom did not lower the residual.
    NoImprovement,
    /// Iteration cap reached.
    IterationCap,
    /// The new atom was linearly dependent on the support and was dropped.
    RankDeficient,
    /// No candidate atoms left.
    Exhausted,
}

#[derive(Debug, Clone)]
pub struct OmpResult {
    pub coeffs: SparseCoeffs,
    /// Selected vectorised indices in selection order.
    pub support_order: Vec<usize>,
    /// `‖r‖²` after each iteration.
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    pub stop: OmpStop,
}

impl OmpResult {
    /// True when the pursuit ended on the iteration cap or a dependent atom
    /// rather than on the residual test.
    pub fn saturated(&self) -> bool {
        matches!(self.stop, OmpStop::IterationCap | OmpStop::RankDeficient)
    }
}

/// Default iteration cap `min(M̃ N_c / 2, 256)`.
pub fn default_max_iter(reduced: &ReducedObservation) -> usize {
    (reduced.m_tilde() * reduced.n_c() / 2).clamp(1, 256)
}

/// Cached column norms of the dictionary.
struct Dictionary<'a> {
    red: &'a ReducedObservation,
    /// `‖a_V,b‖²`, `‖a_H,b‖²`, `a_V,bᴴ a_H,b`.
    nv: Vec<f64>,
    nh: Vec<f64>,
    cvh: Vec<C64>,
    /// `F̄ᴴ F̄`.
    f_gram: CMat,
}

impl<'a> Dictionary<'a> {
    fn new(red: &'a ReducedObservation) -> Self {
        let nb = red.n_points();
        let nv = (0..nb).map(|b| red.a_v.column(b).norm_squared()).collect();
        let nh = (0..nb).map(|b| red.a_h.column(b).norm_squared()).collect();
        let cvh = (0..nb).map(|b| red.a_v.column(b).dotc(&red.a_h.column(b))).collect();
        let f_gram = red.f_bar.adjoint() * &red.f_bar;
        Dictionary { red, nv, nh, cvh, f_gram }
    }

    fn n_atoms(&self) -> usize {
        self.red.n_points() * self.red.delay_span()
    }

    /// Argmax score over non-excluded atoms, smallest index on ties.
    fn select(&self, r: &CMat, excluded: &[bool], rule: SelectionRule) -> Option<usize> {
        let (cv, ch) = self.red.adjoint(r);
        let nb = self.red.n_points();
        let mut best: Option<(usize, f64)> = None;
        for l in 0..self.red.delay_span() {
            let f2 = self.f_gram[(l, l)].re;
            for b in 0..nb {
                let i = b + nb * l;
                if excluded[i] {
                    continue;
                }
                let Some(s) = pair_score(rule, f2, self.nv[b], self.nh[b], self.cvh[b], cv[(b, l)], ch[(b, l)]) else {
                    continue;
                };
                if best.is_none_or(|(_, bs)| s > bs) {
                    best = Some((i, s));
                }
            }
        }
        best.map(|(i, _)| i)
    }

    /// Gram entry between polarization `p` of atom `i` and `q` of atom `j`
    /// (`0 = V`, `1 = H`).
    fn gram(&self, i: usize, p: usize, j: usize, q: usize) -> C64 {
        let nb = self.red.n_points();
        let (bi, li) = (i % nb, i / nb);
        let (bj, lj) = (j % nb, j / nb);
        let ai = if p == 0 { self.red.a_v.column(bi) } else { self.red.a_h.column(bi) };
        let aj = if q == 0 { self.red.a_v.column(bj) } else { self.red.a_h.column(bj) };
        self.f_gram[(li, lj)] * ai.dotc(&aj)
    }
}

/// Score of one atom with 2×2 Gram `G = f2 [[p, c], [c̄, q]]` and
/// correlations `z = q̃ᴴ r`: `‖G⁻¹ z‖²` or `zᴴ G⁻¹ z`. Atoms with
/// `‖q̃‖ < 1e-12` score `None`; a numerically singular `G` is handled with
/// its pseudo-inverse.
fn pair_score(rule: SelectionRule, f2: f64, p: f64, q: f64, c: C64, zv: C64, zh: C64) -> Option<f64> {
    let tr = f2 * (p + q);
    if tr < 1e-24 {
        return None;
    }
    let (g11, g22, g12) = (f2 * p, f2 * q, c * f2);
    let det = g11 * g22 - g12.norm_sqr();
    let (xv, xh) = if det > 1e-12 * g11 * g22 && det > 0.0 {
        ((zv * g22 - g12 * zh) / det, (zh * g11 - g12.conj() * zv) / det)
    } else {
        // rank one: G⁺ = G / tr²
        let t2 = tr * tr;
        ((zv * g11 + g12 * zh) / t2, (g12.conj() * zv + zh * g22) / t2)
    };
    Some(match rule {
        SelectionRule::Coefficient => xv.norm_sqr() + xh.norm_sqr(),
        SelectionRule::Projection => (zv.conj() * xv + zh.conj() * xh).re,
    })
}

/// Best atom for residual `r` (`M̃ × N_c`) outside `excluded`.
pub fn select_index(
    r: &CMat,
    reduced: &ReducedObservation,
    excluded: &HashSet<usize>,
    rule: SelectionRule,
) -> Result<usize> {
    let dict = Dictionary::new(reduced);
    let mut ex = vec![false; dict.n_atoms()];
    for &i in excluded {
        if i < ex.len() {
            ex[i] = true;
        }
    }
    dict.select(r, &ex, rule).ok_or_else(|| Error::invalid("no candidate atoms left"))
}

/// Joint least-squares fit on `support`; returns `(ψ_V, ψ_H, residual)` with
/// coefficients in support order.
pub fn fit_support(support: &[usize], reduced: &ReducedObservation) -> Result<(Vec<C64>, Vec<C64>, CMat)> {
    let dict = Dictionary::new(reduced);
    let mut fit = IncrementalFit::new(&dict);
    for &i in support {
        if i >= dict.n_atoms() {
            return Err(Error::invalid(format!("atom {i} out of range")));
        }
        if !fit.push(i) {
            return Err(Error::RankDeficient { what: "support atoms".into(), condition: f64::INFINITY });
        }
    }
    let (xv, xh) = fit.solve();
    let r = fit.residual(&xv, &xh);
    Ok((xv, xh, r))
}

/// Growing Cholesky factor of the support Gram, columns ordered
/// `[v_1, h_1, v_2, h_2, …]`.
struct IncrementalFit<'d, 'a> {
    dict: &'d Dictionary<'a>,
    atoms: Vec<usize>,
    /// Lower-triangular factor, row-major `n × n`.
    chol: Vec<C64>,
    n: usize,
    /// `Q̃ᴴ vec Ỹ` in column order.
    rhs: Vec<C64>,
    cv_y: CMat,
    ch_y: CMat,
}

impl<'d, 'a> IncrementalFit<'d, 'a> {
    fn new(dict: &'d Dictionary<'a>) -> Self {
        let (cv_y, ch_y) = dict.red.adjoint(&dict.red.y);
        IncrementalFit { dict, atoms: Vec::new(), chol: Vec::new(), n: 0, rhs: Vec::new(), cv_y, ch_y }
    }

    fn l(&self, i: usize, j: usize) -> C64 {
        self.chol[i * self.n + j]
    }

    /// Appends atom `i`. Returns false, leaving the factor unchanged, when its
    /// columns are numerically dependent on the current support.
    #[allow(clippy::needless_range_loop)]
    fn push(&mut self, i: usize) -> bool {
        let n = self.n;
        let cols = [(i, 0usize), (i, 1usize)];
        let old: Vec<(usize, usize)> = self.atoms.iter().flat_map(|&a| [(a, 0), (a, 1)]).collect();
        // w = L⁻¹ g12
        let mut w = vec![[ZERO; 2]; n];
        for (k, &(ci, cp)) in cols.iter().enumerate() {
            for r in 0..n {
                let (ai, ap) = old[r];
                let mut v = self.dict.gram(ai, ap, ci, cp);
                for c in 0..r {
                    v -= self.l(r, c) * w[c][k];
                }
                w[r][k] = v / self.l(r, r);
            }
        }
        let g = |a: usize, b: usize| self.dict.gram(cols[a].0, cols[a].1, cols[b].0, cols[b].1);
        let dot = |a: usize, b: usize| (0..n).map(|r| w[r][a].conj() * w[r][b]).fold(ZERO, |s, x| s + x);
        let s11 = (g(0, 0) - dot(0, 0)).re;
        let g11 = g(0, 0).re;
        let g22 = g(1, 1).re;
        let tol = 1e-10;
        if !(s11 > tol * g11) {
            return false;
        }
        let l11 = s11.sqrt();
        let l21 = (g(1, 0) - dot(1, 0)) / l11;
        let s22 = (g(1, 1) - dot(1, 1)).re - l21.norm_sqr();
        if !(s22 > tol * g22) {
            return false;
        }
        let l22 = s22.sqrt();
        let m = n + 2;
        let mut chol = vec![ZERO; m * m];
        for r in 0..n {
            for c in 0..=r {
                chol[r * m + c] = self.l(r, c);
            }
        }
        for c in 0..n {
            chol[n * m + c] = w[c][0].conj();
            chol[(n + 1) * m + c] = w[c][1].conj();
        }
        chol[n * m + n] = C64::new(l11, 0.0);
        chol[(n + 1) * m + n] = l21;
        chol[(n + 1) * m + n + 1] = C64::new(l22, 0.0);
        self.chol = chol;
        self.n = m;
        self.atoms.push(i);
        let nb = self.dict.red.n_points();
        let (b, l) = (i % nb, i / nb);
        self.rhs.push(self.cv_y[(b, l)]);
        self.rhs.push(self.ch_y[(b, l)]);
        true
    }

    fn solve(&self) -> (Vec<C64>, Vec<C64>) {
        let n = self.n;
        let mut z = self.rhs.clone();
        for r in 0..n {
            for c in 0..r {
                z[r] = z[r] - self.l(r, c) * z[c];
            }
            z[r] /= self.l(r, r);
        }
        for r in (0..n).rev() {
            for c in r + 1..n {
                z[r] = z[r] - self.l(c, r).conj() * z[c];
            }
            z[r] /= self.l(r, r).conj();
        }
        let xv = z.iter().step_by(2).copied().collect();
        let xh = z.iter().skip(1).step_by(2).copied().collect();
        (xv, xh)
    }

    fn residual(&self, xv: &[C64], xh: &[C64]) -> CMat {
        let red = self.dict.red;
        let nb = red.n_points();
        let mut spatial = CMat::zeros(red.m_tilde(), red.delay_span());
        for (k, &i) in self.atoms.iter().enumerate() {
            let (b, l) = (i % nb, i / nb);
            let col = red.a_v.column(b) * xv[k] + red.a_h.column(b) * xh[k];
            let mut dst = spatial.column_mut(l);
            dst += col;
        }
        &red.y - spatial * red.f_bar.transpose()
    }
}

/// Shared-support OMP. Stops when `‖r‖² ≤ M̃ N_c σ²` (or, without noise, when
/// the residual is negligible), when the residual stops shrinking, when a
/// dependent atom is selected, or after `max_iter` iterations (default
/// [`default_max_iter`]).
pub fn run_momp(reduced: &ReducedObservation, config: &OmpConfig) -> Result<OmpResult> {
    let noise_var = config.noise_var;
    let max_iter = config.max_iter.unwrap_or_else(|| default_max_iter(reduced));
    if max_iter == 0 {
        return Err(Error::invalid("max_iter must be at least 1"));
    }
    if !(noise_var >= 0.0) {
        return Err(Error::invalid("noise variance must be non-negative"));
    }
    let dict = Dictionary::new(reduced);
    let n_atoms = dict.n_atoms();
    let y_energy = fro_norm_sqr(&reduced.y);
    let threshold = (reduced.m_tilde() * reduced.n_c()) as f64 * noise_var;
    let threshold = threshold.max(1e-20 * y_energy);
    // keep the support fit overdetermined
    let max_iter = max_iter.min(reduced.m_tilde() * reduced.n_c() / 2).max(1);

    let mut excluded = vec![false; n_atoms];
    let mut fit = IncrementalFit::new(&dict);
    let mut r = reduced.y.clone();
    let mut r_energy = y_energy;
    let mut history = Vec::new();
    let mut best = (Vec::new(), Vec::new());
    let stop = loop {
        if r_energy <= threshold {
            break OmpStop::Threshold;
        }
        if fit.atoms.len() >= max_iter {
            break OmpStop::IterationCap;
        }
        let Some(i) = dict.select(&r, &excluded, config.rule) else {
            break OmpStop::Exhausted;
        };
        excluded[i] = true;
        let saved = (fit.chol.clone(), fit.n, fit.rhs.clone());
        if !fit.push(i) {
            break OmpStop::RankDeficient;
        }
        let (xv, xh) = fit.solve();
        let new_r = fit.residual(&xv, &xh);
        let e = fro_norm_sqr(&new_r);
        if !(e < r_energy) {
            fit.atoms.pop();
            (fit.chol, fit.n, fit.rhs) = saved;
            break OmpStop::NoImprovement;
        }
        r = new_r;
        r_energy = e;
        history.push(e);
        best = (xv, xh);
    };

    let nb = reduced.n_points();
    let nl = reduced.delay_span();
    let mut psi_v = CMat::zeros(nb, nl);
    let mut psi_h = CMat::zeros(nb, nl);
    let mut cells = Vec::with_capacity(fit.atoms.len());
    for (k, &i) in fit.atoms.iter().enumerate() {
        let (b, l) = (i % nb, i / nb);
        psi_v[(b, l)] = best.0[k];
        psi_h[(b, l)] = best.1[k];
        cells.push((b, l));
    }
    Ok(OmpResult {
        coeffs: SparseCoeffs::from_support(psi_v, psi_h, &cells)?,
        iterations: fit.atoms.len(),
        support_order: fit.atoms,
        residual_history: history,
        stop,
    })
}
