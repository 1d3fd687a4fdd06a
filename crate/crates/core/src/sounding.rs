//! Uplink sounding: observation generation, SVD pre-processing and the
//! least-squares baseline.
//!
//! Over `T` blocks the user transmits a known unit-modulus pilot on every
//! subcarrier while the base station holds state vector `s_t`. Stacking the
//! blocks gives `Y_u = [G_uv G_uh] [Ψ_V; Ψ_H] F̄ᵀ + Z` with `F̄ = diag(x_p) F`.
//! Pre-processing keeps the dominant left singular subspace `Ũ` of
//! `[G_uv G_uh]`, giving `Ỹ = Ũᴴ Y_u = A Ψ̃ F̄ᵀ + Ũᴴ Z` with `A = [A_V A_H]`.
//!
//! The vectorised operators `Q_V = F̄ ⊗ A_V`, `Q_H = F̄ ⊗ A_H` are never formed
//! except by [`ReducedObservation::dense_operator`], which exists for testing.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use nalgebra::SVD;
use rand::Rng;

use crate::channel::{delay_dft, exact_channel, GridModel, ScatterScene, SparseCoeffs};
use crate::error::{Error, Result};
use crate::linalg::{self, add_diag, cis, CMat, CVec, C64};
use crate::rng;

/// Relative singular value threshold used by [`preprocess`].
pub const SVD_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PilotKind {
    /// Zadoff-Chu sequence with root 1.
    ZadoffChu,
    /// I.i.d. uniform QPSK symbols.
    Qpsk,
}

impl std::str::FromStr for PilotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zc" | "zadoff-chu" | "zadoffchu" => Ok(PilotKind::ZadoffChu),
            "qpsk" => Ok(PilotKind::Qpsk),
            _ => Err(Error::Config(format!("unknown pilot kind `{s}` (zc, qpsk)"))),
        }
    }
}

/// Unit-modulus pilot sequence of length `n_c`.
pub fn pilot_sequence<R: Rng + ?Sized>(kind: PilotKind, n_c: usize, rng: &mut R) -> CVec {
    match kind {
        PilotKind::ZadoffChu => {
            let nf = n_c as f64;
            CVec::from_fn(n_c, |n, _| {
                let n = n as f64;
                let arg = if n_c.is_multiple_of(2) { n * n } else { n * (n + 1.0) };
                cis(-PI * arg / nf)
            })
        }
        PilotKind::Qpsk => CVec::from_fn(n_c, |_, _| cis(PI / 4.0 + PI / 2.0 * rng.random_range(0..4) as f64)),
    }
}

/// Uniform i.i.d. state vector.
pub fn random_states<R: Rng + ?Sized>(rng: &mut R, m: usize, n_states: usize) -> Vec<usize> {
    (0..m).map(|_| rng.random_range(0..n_states)).collect()
}

/// Number of OFDM symbols spent on sounding when four users share each
/// symbol through comb-4 interleaving: `T·⌊K/4⌋`.
pub fn pilot_overhead_symbols(n_users: usize, n_blocks: usize) -> usize {
    n_blocks * (n_users / 4)
}

/// Block states, pilots and noise level of one sounding round.
#[derive(Debug, Clone, PartialEq)]
pub struct SoundingPlan {
    block_states: Vec<Vec<usize>>,
    pilots: CVec,
    noise_var: f64,
}

impl SoundingPlan {
    pub fn new(block_states: Vec<Vec<usize>>, pilots: CVec, noise_var: f64) -> Result<Self> {
        if block_states.is_empty() {
            return Err(Error::invalid("sounding needs at least one block"));
        }
        let m = block_states[0].len();
        if m == 0 || block_states.iter().any(|s| s.len() != m) {
            return Err(Error::shape("all block state vectors need the same non-zero length"));
        }
        if pilots.is_empty() {
            return Err(Error::invalid("pilot sequence is empty"));
        }
        if pilots.iter().any(|x| (x.norm() - 1.0).abs() > 1e-9) {
            return Err(Error::invalid("pilots must have unit modulus"));
        }
        if !(noise_var >= 0.0 && noise_var.is_finite()) {
            return Err(Error::invalid("noise variance must be finite and non-negative"));
        }
        Ok(SoundingPlan { block_states, pilots, noise_var })
    }

    /// `n_blocks` uniformly random state vectors and a pilot of the given kind.
    pub fn random<R: Rng + ?Sized>(
        state_rng: &mut R,
        pilot_rng: &mut R,
        model: &GridModel,
        n_blocks: usize,
        n_c: usize,
        kind: PilotKind,
        noise_var: f64,
    ) -> Result<Self> {
        let states = (0..n_blocks)
            .map(|_| random_states(state_rng, model.m(), model.n_states()))
            .collect();
        Self::new(states, pilot_sequence(kind, n_c, pilot_rng), noise_var)
    }

    pub fn n_blocks(&self) -> usize {
        self.block_states.len()
    }

    pub fn block_states(&self) -> &[Vec<usize>] {
        &self.block_states
    }

    pub fn pilots(&self) -> &CVec {
        &self.pilots
    }

    pub fn n_c(&self) -> usize {
        self.pilots.len()
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    /// Pilot-weighted partial DFT `F̄ = diag(x_p) F` (`N_c × L`).
    pub fn f_bar(&self, delay_span: usize) -> CMat {
        let mut f = delay_dft(self.n_c(), delay_span);
        for (n, x) in self.pilots.iter().enumerate() {
            for l in 0..delay_span {
                f[(n, l)] *= x;
            }
        }
        f
    }
}

/// What the sounding signal propagates through.
#[derive(Debug, Clone, Copy)]
pub enum ChannelSource<'a> {
    /// Exact per-path channel of one scene user.
    Exact { scene: &'a ScatterScene, user: usize },
    /// Grid model with the given coefficients.
    Grid(&'a SparseCoeffs),
}

/// Stacked received pilots `Y_u` (`T·M × N_c`), blocks in order.
#[derive(Debug, Clone, PartialEq)]
pub struct SoundingObservation {
    pub y: CMat,
    pub plan: SoundingPlan,
    pub delay_span: usize,
}

/// Simulates one sounding round. Noise is circular complex Gaussian with the
/// plan's variance, drawn from `noise_rng`.
pub fn generate_observation<R: Rng + ?Sized>(
    source: ChannelSource<'_>,
    model: &GridModel,
    plan: &SoundingPlan,
    noise_rng: &mut R,
) -> Result<SoundingObservation> {
    let m = model.m();
    let n_c = plan.n_c();
    let delay_span = match source {
        ChannelSource::Exact { scene, .. } => scene.delay_span(),
        ChannelSource::Grid(c) => c.delay_span(),
    };
    let mut y = CMat::zeros(plan.n_blocks() * m, n_c);
    for (t, states) in plan.block_states().iter().enumerate() {
        let h = match source {
            ChannelSource::Exact { scene, user } => {
                exact_channel(scene, model.geometry(), model.patterns(), states, n_c, user)?
            }
            ChannelSource::Grid(c) => model.approx_channel(c, states, n_c)?,
        };
        for n in 0..n_c {
            let x = plan.pilots()[n];
            for i in 0..m {
                y[(t * m + i, n)] = h[(i, n)] * x;
            }
        }
    }
    if plan.noise_var() > 0.0 {
        for z in y.iter_mut() {
            *z += rng::complex_gaussian(noise_rng, plan.noise_var());
        }
    }
    Ok(SoundingObservation { y, plan: plan.clone(), delay_span })
}

/// Observation projected onto the dominant subspace of the stacked basis.
#[derive(Debug, Clone)]
pub struct ReducedObservation {
    /// `T·M × M̃`; empty when built by [`ReducedObservation::from_parts`].
    pub u_tilde: CMat,
    /// Retained singular values, descending.
    pub singular_values: Vec<f64>,
    /// `M̃ × N_c`.
    pub y: CMat,
    /// `M̃ × |B|`.
    pub a_v: CMat,
    pub a_h: CMat,
    /// `N_c × L`.
    pub f_bar: CMat,
    pub noise_var: f64,
}

/// Stacked basis `[G_uv G_uh]` (`T·M × 2|B|`).
pub fn stacked_basis(model: &GridModel, plan: &SoundingPlan) -> Result<CMat> {
    let m = model.m();
    let nb = model.n_points();
    let mut g = CMat::zeros(plan.n_blocks() * m, 2 * nb);
    for (t, states) in plan.block_states().iter().enumerate() {
        let (gv, gh) = model.angular_basis(states)?;
        g.view_mut((t * m, 0), (m, nb)).copy_from(&gv);
        g.view_mut((t * m, nb), (m, nb)).copy_from(&gh);
    }
    Ok(g)
}

/// Left singular vectors of `g` whose singular value is at least
/// `threshold` times the largest, sorted by decreasing singular value.
pub fn dominant_subspace(g: &CMat, threshold: f64) -> Result<(CMat, Vec<f64>)> {
    let svd = SVD::new(g.clone(), true, false);
    let u = svd.u.ok_or_else(|| Error::Numerical("SVD did not return U".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));
    let smax = svd.singular_values[order[0]];
    if !(smax > 0.0) {
        return Err(Error::Numerical("stacked angular basis is identically zero".into()));
    }
    let keep: Vec<usize> = order.into_iter().filter(|&i| svd.singular_values[i] >= threshold * smax).collect();
    let mut ut = CMat::zeros(g.nrows(), keep.len());
    for (j, &i) in keep.iter().enumerate() {
        ut.set_column(j, &u.column(i));
    }
    Ok((ut, keep.iter().map(|&i| svd.singular_values[i]).collect()))
}

/// Projects the observation onto the dominant left singular subspace of the
/// stacked basis (relative threshold [`SVD_THRESHOLD`]).
pub fn preprocess(obs: &SoundingObservation, model: &GridModel) -> Result<ReducedObservation> {
    preprocess_with(obs, model, SVD_THRESHOLD)
}

pub fn preprocess_with(obs: &SoundingObservation, model: &GridModel, threshold: f64) -> Result<ReducedObservation> {
    let g = stacked_basis(model, &obs.plan)?;
    if g.nrows() != obs.y.nrows() {
        return Err(Error::shape("observation rows do not match T·M"));
    }
    let (u, s) = dominant_subspace(&g, threshold)?;
    let uh = u.adjoint();
    let a = &uh * &g;
    let nb = model.n_points();
    Ok(ReducedObservation {
        y: &uh * &obs.y,
        a_v: a.columns(0, nb).into_owned(),
        a_h: a.columns(nb, nb).into_owned(),
        f_bar: obs.plan.f_bar(obs.delay_span),
        u_tilde: u,
        singular_values: s,
        noise_var: obs.plan.noise_var(),
    })
}

impl ReducedObservation {
    /// Direct construction from operators, without a projection basis.
    pub fn from_parts(a_v: CMat, a_h: CMat, y: CMat, f_bar: CMat, noise_var: f64) -> Result<Self> {
        if a_v.shape() != a_h.shape() {
            return Err(Error::shape("A_V and A_H must have the same shape"));
        }
        if y.nrows() != a_v.nrows() || y.ncols() != f_bar.nrows() {
            return Err(Error::shape(format!(
                "Ỹ is {}×{}, expected {}×{}",
                y.nrows(),
                y.ncols(),
                a_v.nrows(),
                f_bar.nrows()
            )));
        }
        Ok(ReducedObservation {
            u_tilde: CMat::zeros(0, 0),
            singular_values: Vec::new(),
            y,
            a_v,
            a_h,
            f_bar,
            noise_var,
        })
    }

    #[inline]
    pub fn m_tilde(&self) -> usize {
        self.a_v.nrows()
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.a_v.ncols()
    }

    #[inline]
    pub fn n_c(&self) -> usize {
        self.f_bar.nrows()
    }

    #[inline]
    pub fn delay_span(&self) -> usize {
        self.f_bar.ncols()
    }

    /// `[A_V A_H]`.
    pub fn a(&self) -> CMat {
        let nb = self.n_points();
        let mut a = CMat::zeros(self.m_tilde(), 2 * nb);
        a.columns_mut(0, nb).copy_from(&self.a_v);
        a.columns_mut(nb, nb).copy_from(&self.a_h);
        a
    }

    /// `(A_V Ψ_V + A_H Ψ_H) F̄ᵀ`.
    pub fn apply(&self, psi_v: &CMat, psi_h: &CMat) -> CMat {
        (&self.a_v * psi_v + &self.a_h * psi_h) * self.f_bar.transpose()
    }

    /// Adjoint of [`apply`](Self::apply): `(A_Vᴴ R F̄*, A_Hᴴ R F̄*)`.
    pub fn adjoint(&self, r: &CMat) -> (CMat, CMat) {
        let rf = r * self.f_bar.conjugate();
        (self.a_v.adjoint() * &rf, self.a_h.adjoint() * &rf)
    }

    /// Dense `[Q_V Q_H]` acting on `[vec Ψ_V; vec Ψ_H]`. Test helper.
    pub fn dense_operator(&self) -> CMat {
        let qv = linalg::kron(&self.f_bar, &self.a_v);
        let qh = linalg::kron(&self.f_bar, &self.a_h);
        let mut q = CMat::zeros(qv.nrows(), qv.ncols() * 2);
        q.columns_mut(0, qv.ncols()).copy_from(&qv);
        q.columns_mut(qv.ncols(), qh.ncols()).copy_from(&qh);
        q
    }
}

/// Solves `X (B Bᴴ) = C`-style normal equations via Cholesky, regularizing
/// with `1e-10·trace/dim` when the Gram matrix is worse than `1e12`
/// conditioned. Returns `gram⁻¹`.
fn regularized_inverse(mut gram: CMat, what: &str) -> Result<CMat> {
    let n = gram.nrows();
    let cond = linalg::hermitian_condition(&gram);
    if cond > 1e12 {
        let tr: f64 = (0..n).map(|i| gram[(i, i)].re).sum();
        add_diag(&mut gram, 1e-10 * tr / n as f64);
    }
    let chol = linalg::cholesky(gram)
        .ok_or_else(|| Error::RankDeficient { what: what.into(), condition: cond })?;
    Ok(chol.inverse())
}

/// Minimum-norm least-squares estimate `Q̃ᴴ(Q̃Q̃ᴴ)⁻¹ vec Ỹ`, computed in
/// factored form `Aᴴ(AAᴴ)⁻¹ Ỹ F̄*(F̄ᵀF̄*)⁻¹`. Support and mask cover all cells.
pub fn ls_estimate(reduced: &ReducedObservation) -> Result<SparseCoeffs> {
    let a = reduced.a();
    let left = a.adjoint() * regularized_inverse(&a * a.adjoint(), "A Aᴴ")?;
    let fb = &reduced.f_bar;
    let ft_fc = fb.transpose() * fb.conjugate();
    let right = fb.conjugate() * regularized_inverse(ft_fc, "F̄ᵀ F̄*")?;
    let psi = left * &reduced.y * right;
    let nb = reduced.n_points();
    SparseCoeffs::dense(psi.rows(0, nb).into_owned(), psi.rows(nb, nb).into_owned())
}

/// Writes an observation as text: a header with `T`, `M`, `N_c`, `L` and the
/// noise variance, then block states, pilots and `Y_u` row by row.
pub fn write_observation(obs: &SoundingObservation, mut w: impl Write) -> Result<()> {
    let plan = &obs.plan;
    let m = plan.block_states()[0].len();
    writeln!(w, "blocks {} antennas {} subcarriers {} delay_span {}", plan.n_blocks(), m, plan.n_c(), obs.delay_span)?;
    writeln!(w, "noise_var {:e}", plan.noise_var())?;
    for s in plan.block_states() {
        let row: Vec<String> = s.iter().map(|x| x.to_string()).collect();
        writeln!(w, "states {}", row.join(" "))?;
    }
    let fmt = |z: &C64| format!("{:e} {:e}", z.re, z.im);
    writeln!(w, "pilots {}", plan.pilots().iter().map(fmt).collect::<Vec<_>>().join(" "))?;
    for r in 0..obs.y.nrows() {
        writeln!(w, "y {}", obs.y.row(r).iter().map(fmt).collect::<Vec<_>>().join(" "))?;
    }
    Ok(())
}

pub fn read_observation(r: impl BufRead) -> Result<SoundingObservation> {
    let mut lines = r.lines().enumerate().filter_map(|(i, l)| match l {
        Ok(s) if s.trim().is_empty() || s.trim_start().starts_with('#') => None,
        other => Some((i + 1, other)),
    });
    let mut next = |tag: &str| -> Result<(usize, Vec<String>)> {
        let (ln, line) = lines.next().ok_or(Error::Parse { line: 0, msg: format!("missing `{tag}` line") })?;
        let line = line?;
        let mut f = line.split_whitespace().map(str::to_string);
        if f.next().as_deref() != Some(tag) {
            return Err(Error::Parse { line: ln, msg: format!("expected `{tag}`") });
        }
        Ok((ln, f.collect()))
    };
    let (ln, hdr) = next("blocks")?;
    let perr = |line: usize, msg: &str| Error::Parse { line, msg: msg.into() };
    let num = |v: &[String], i: usize, line: usize| -> Result<usize> {
        v.get(i).and_then(|s| s.parse().ok()).ok_or_else(|| perr(line, "bad header"))
    };
    let (t, m, n_c, l) = (num(&hdr, 0, ln)?, num(&hdr, 2, ln)?, num(&hdr, 4, ln)?, num(&hdr, 6, ln)?);
    let (ln, nv) = next("noise_var")?;
    let noise_var: f64 = nv.first().and_then(|s| s.parse().ok()).ok_or_else(|| perr(ln, "bad noise_var"))?;
    let mut states = Vec::with_capacity(t);
    for _ in 0..t {
        let (ln, s) = next("states")?;
        let v: Vec<usize> = s.iter().map(|x| x.parse()).collect::<std::result::Result<_, _>>().map_err(|_| perr(ln, "bad state"))?;
        if v.len() != m {
            return Err(perr(ln, "wrong number of states"));
        }
        states.push(v);
    }
    let complex_row = |ln: usize, f: Vec<String>, n: usize| -> Result<Vec<C64>> {
        if f.len() != 2 * n {
            return Err(perr(ln, "wrong number of values"));
        }
        f.chunks(2)
            .map(|c| match (c[0].parse::<f64>(), c[1].parse::<f64>()) {
                (Ok(re), Ok(im)) => Ok(C64::new(re, im)),
                _ => Err(perr(ln, "bad number")),
            })
            .collect()
    };
    let (ln, p) = next("pilots")?;
    let pilots = CVec::from_vec(complex_row(ln, p, n_c)?);
    let mut y = CMat::zeros(t * m, n_c);
    for r in 0..t * m {
        let (ln, f) = next("y")?;
        for (c, z) in complex_row(ln, f, n_c)?.into_iter().enumerate() {
            y[(r, c)] = z;
        }
    }
    Ok(SoundingObservation { y, plan: SoundingPlan::new(states, pilots, noise_var)?, delay_span: l })
}
