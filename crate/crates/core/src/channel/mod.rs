//! Array geometry, angular grid, scattering scenes and the grid-based
//! separable channel model.
//!
//! Antenna `m = i2 * m1 + i1` sits in row `i1` and column `i2` of the planar
//! array. Subcarrier `n` and delay tap `l` are 0-based, so the delay DFT entry
//! is `exp(-j2π l n / N_c)`. Grid point `b = iθ * n_phi + iφ`.

mod scene_io;

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::linalg::{cis, CMat, CVec, C64, ZERO};
use crate::patterns::{Direction, PatternSet, Polarization};
use crate::rng;

/// Planar array with `m1` rows and `m2` columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArrayGeometry {
    m1: usize,
    m2: usize,
}

impl ArrayGeometry {
    pub fn new(m1: usize, m2: usize) -> Result<Self> {
        if m1 == 0 || m2 == 0 {
            return Err(Error::invalid("array dimensions must be positive"));
        }
        Ok(ArrayGeometry { m1, m2 })
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    pub fn m2(&self) -> usize {
        self.m2
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m1 * self.m2
    }
}

/// Unit-norm steering vector `f_{m2}(cosθ) ⊗ f_{m1}(sinθ cosφ)` with
/// `f_n(x) = n^{-1/2} [1, e^{-jπx}, …, e^{-jπ(n-1)x}]`.
pub fn steering_vector(geom: &ArrayGeometry, dir: &Direction) -> CVec {
    let u = dir.theta().sin() * dir.phi().cos();
    let v = dir.theta().cos();
    let scale = (geom.m() as f64).sqrt().recip();
    CVec::from_fn(geom.m(), |m, _| {
        let i1 = (m % geom.m1) as f64;
        let i2 = (m / geom.m1) as f64;
        cis(-PI * (i2 * v + i1 * u)) * scale
    })
}

/// Uniform elevation/azimuth grid.
///
/// Both azimuth endpoints 0° and 360° are enumerated, so the last azimuth
/// column duplicates the first one (stored with `φ = 0`). The duplicates are
/// kept as separate dictionary columns.
#[derive(Debug, Clone)]
pub struct AngleGrid {
    step_deg: f64,
    n_theta: usize,
    n_phi: usize,
    points: Vec<Direction>,
    unit: Vec<[f64; 3]>,
}

/// Grid with `step_deg` spacing in both angles. The step must divide 180°.
pub fn make_grid(step_deg: f64) -> Result<AngleGrid> {
    if !(step_deg.is_finite() && step_deg > 0.0) {
        return Err(Error::invalid("grid step must be positive"));
    }
    let k = (180.0 / step_deg).round();
    if k < 1.0 || (k * step_deg - 180.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("grid step {step_deg}° does not divide 180°")));
    }
    let n_theta = k as usize + 1;
    let n_phi = 2 * k as usize + 1;
    let mut points = Vec::with_capacity(n_theta * n_phi);
    for it in 0..n_theta {
        for ip in 0..n_phi {
            let theta = (it as f64 * step_deg).to_radians().min(PI);
            // every azimuth at a pole is the same direction
            let phi = if it == 0 || it == n_theta - 1 { 0.0 } else { (ip as f64 * step_deg).to_radians() };
            points.push(Direction::wrapped(phi, theta));
        }
    }
    let unit = points.iter().map(|d| d.unit_vector()).collect();
    Ok(AngleGrid { step_deg, n_theta, n_phi, points, unit })
}

impl AngleGrid {
    pub fn step_deg(&self) -> f64 {
        self.step_deg
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn points(&self) -> &[Direction] {
        &self.points
    }

    #[inline]
    pub fn point(&self, b: usize) -> Direction {
        self.points[b]
    }

    /// `(iθ, iφ)` of grid index `b`.
    #[inline]
    pub fn coords(&self, b: usize) -> (usize, usize) {
        (b / self.n_phi, b % self.n_phi)
    }

    #[inline]
    pub fn index(&self, it: usize, ip: usize) -> usize {
        it * self.n_phi + ip
    }

    /// Closest grid point in great-circle distance; ties go to the lower index.
    pub fn nearest(&self, dir: &Direction) -> usize {
        let u = dir.unit_vector();
        let mut best = 0;
        let mut best_dot = f64::NEG_INFINITY;
        for (b, g) in self.unit.iter().enumerate() {
            let dot = u[0] * g[0] + u[1] * g[1] + u[2] * g[2];
            if dot > best_dot {
                best_dot = dot;
                best = b;
            }
        }
        best
    }
}

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterPath {
    pub dir: Direction,
    /// Integer delay in taps, `< delay_span`.
    pub delay: usize,
    pub psi_v: C64,
    pub psi_h: C64,
}

/// Per-user path lists sharing a common delay span.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterScene {
    users: Vec<Vec<ScatterPath>>,
    delay_span: usize,
}

impl ScatterScene {
    pub fn new(users: Vec<Vec<ScatterPath>>, delay_span: usize) -> Result<Self> {
        if delay_span == 0 {
            return Err(Error::invalid("delay span must be at least one tap"));
        }
        for (k, paths) in users.iter().enumerate() {
            if paths.is_empty() {
                return Err(Error::invalid(format!("user {k} has no paths")));
            }
            for p in paths {
                if p.delay >= delay_span {
                    return Err(Error::invalid(format!(
                        "user {k}: delay {} outside [0, {})",
                        p.delay, delay_span
                    )));
                }
                if !(p.psi_v.re.is_finite()
                    && p.psi_v.im.is_finite()
                    && p.psi_h.re.is_finite()
                    && p.psi_h.im.is_finite())
                {
                    return Err(Error::invalid(format!("user {k}: non-finite path gain")));
                }
            }
        }
        Ok(ScatterScene { users, delay_span })
    }

    /// Clustered random scene, see [`SceneParams`].
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, params: &SceneParams) -> Result<Self> {
        let SceneParams { n_users, n_paths, delay_span, angle_spread_deg, distinct_delays } = *params;
        if n_paths == 0 || delay_span == 0 || n_users == 0 {
            return Err(Error::invalid("scene needs at least one user, path and delay tap"));
        }
        if !(angle_spread_deg >= 0.0 && angle_spread_deg.is_finite()) {
            return Err(Error::invalid("angle spread must be non-negative"));
        }
        if distinct_delays && n_paths > delay_span {
            return Err(Error::invalid("distinct delays need n_paths <= delay_span"));
        }
        let spread = Normal::new(0.0, angle_spread_deg.to_radians())
            .map_err(|e| Error::invalid(e.to_string()))?;
        let mut users = Vec::with_capacity(n_users);
        for _ in 0..n_users {
            let center_theta = rng.random::<f64>().acos();
            let center_phi = rng.random::<f64>() * 2.0 * PI;
            let delays: Vec<usize> = if distinct_delays {
                rand::seq::index::sample(rng, delay_span, n_paths).into_vec()
            } else {
                (0..n_paths).map(|_| rng.random_range(0..delay_span)).collect()
            };
            let mut raw = Vec::with_capacity(n_paths);
            for delay in delays {
                let dir = Direction::wrapped(
                    center_phi + spread.sample(rng),
                    center_theta + spread.sample(rng),
                );
                raw.push((dir, delay));
            }
            let total: f64 = raw.iter().map(|(_, d)| tap_power(*d)).sum();
            let paths = raw
                .into_iter()
                .map(|(dir, delay)| {
                    let var = tap_power(delay) / (2.0 * total);
                    ScatterPath {
                        dir,
                        delay,
                        psi_v: rng::complex_gaussian(rng, var),
                        psi_h: rng::complex_gaussian(rng, var),
                    }
                })
                .collect();
            users.push(paths);
        }
        Ok(ScatterScene { users, delay_span })
    }

    #[inline]
    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    #[inline]
    pub fn delay_span(&self) -> usize {
        self.delay_span
    }

    pub fn paths(&self, k: usize) -> &[ScatterPath] {
        &self.users[k]
    }

    pub fn users(&self) -> &[Vec<ScatterPath>] {
        &self.users
    }

    /// Same scene with every path moved to its nearest grid direction.
    pub fn snapped(&self, grid: &AngleGrid) -> ScatterScene {
        let users = self
            .users
            .iter()
            .map(|paths| {
                paths
                    .iter()
                    .map(|p| ScatterPath { dir: grid.point(grid.nearest(&p.dir)), ..*p })
                    .collect()
            })
            .collect();
        ScatterScene { users, delay_span: self.delay_span }
    }

    pub fn write_to(&self, w: impl std::io::Write) -> Result<()> {
        scene_io::write_scene(self, w)
    }

    pub fn read_from(r: impl std::io::BufRead) -> Result<Self> {
        scene_io::read_scene(r)
    }
}

/// Scene sampler settings.
///
/// Each user gets one cluster whose center is uniform on the upper
/// hemisphere. Path angles are Gaussian around the center with standard
/// deviation `angle_spread_deg` in both elevation and azimuth. Delays are
/// uniform in `[0, delay_span)`, i.i.d. or (with `distinct_delays`) drawn
/// without replacement so every path has its own tap. Gains are complex
/// Gaussian with a 3 dB per tap power decay, scaled so that each user's
/// expected total power over both polarizations is one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneParams {
    pub n_users: usize,
    pub n_paths: usize,
    pub delay_span: usize,
    pub angle_spread_deg: f64,
    pub distinct_delays: bool,
}

fn tap_power(delay: usize) -> f64 {
    10f64.powf(-0.3 * delay as f64)
}

/// Seeded [`ScatterScene::sample`].
pub fn synth_scene(
    seed: u64,
    n_users: usize,
    n_paths: usize,
    delay_span: usize,
    angle_spread_deg: f64,
) -> Result<ScatterScene> {
    let params = SceneParams { n_users, n_paths, delay_span, angle_spread_deg, distinct_delays: false };
    ScatterScene::sample(&mut rng::seeded(seed), &params)
}

/// Delay DFT factor `exp(-j2π l n / N_c)`.
#[inline]
pub fn delay_phase(delay: usize, n: usize, n_c: usize) -> C64 {
    // reduce the integer product first to keep the angle small
    let k = (delay * n) % n_c;
    cis(-2.0 * PI * k as f64 / n_c as f64)
}

/// Partial DFT `F` (`n_c × delay_span`).
pub fn delay_dft(n_c: usize, delay_span: usize) -> CMat {
    CMat::from_fn(n_c, delay_span, |n, l| delay_phase(l, n, n_c))
}

fn check_states(states: &[usize], m: usize, n_states: usize) -> Result<()> {
    if states.len() != m {
        return Err(Error::shape(format!("{} states for {} antennas", states.len(), m)));
    }
    if let Some(s) = states.iter().find(|&&s| s >= n_states) {
        return Err(Error::invalid(format!("state {s} out of range (n_states = {n_states})")));
    }
    Ok(())
}

/// Ground-truth channel of user `k` on all subcarriers (`M × n_c`), with
/// patterns evaluated at the exact path directions.
pub fn exact_channel(
    scene: &ScatterScene,
    geom: &ArrayGeometry,
    patterns: &PatternSet,
    states: &[usize],
    n_c: usize,
    k: usize,
) -> Result<CMat> {
    check_states(states, geom.m(), patterns.n_states())?;
    if k >= scene.n_users() {
        return Err(Error::invalid(format!("user {k} out of range")));
    }
    if n_c == 0 {
        return Err(Error::invalid("need at least one subcarrier"));
    }
    let m = geom.m();
    let mut h = CMat::zeros(m, n_c);
    for p in scene.paths(k) {
        let beta = steering_vector(geom, &p.dir);
        let col = CVec::from_fn(m, |i, _| {
            let (nv, nh) = patterns.eval_pair(states[i], &p.dir);
            (nv * p.psi_v + nh * p.psi_h) * beta[i]
        });
        for n in 0..n_c {
            let ph = delay_phase(p.delay, n, n_c);
            for i in 0..m {
                h[(i, n)] += col[i] * ph;
            }
        }
    }
    Ok(h)
}

/// Exact channel vector of user `k` on subcarrier `n` (0-based).
pub fn exact_channel_at(
    scene: &ScatterScene,
    geom: &ArrayGeometry,
    patterns: &PatternSet,
    states: &[usize],
    n: usize,
    n_c: usize,
    k: usize,
) -> Result<CVec> {
    if n >= n_c {
        return Err(Error::invalid(format!("subcarrier {n} outside [0, {n_c})")));
    }
    Ok(exact_channel(scene, geom, patterns, states, n_c, k)?.column(n).into_owned())
}

/// Angular-delay coefficients `Ψ_V`, `Ψ_H` (`|B| × L`) with a shared support
/// and a binary mask containing it.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCoeffs {
    psi_v: CMat,
    psi_h: CMat,
    support: Vec<(usize, usize)>,
    mask: DMatrix<bool>,
}

impl SparseCoeffs {
    pub fn zeros(n_points: usize, delay_span: usize) -> Self {
        SparseCoeffs {
            psi_v: CMat::zeros(n_points, delay_span),
            psi_h: CMat::zeros(n_points, delay_span),
            support: Vec::new(),
            mask: DMatrix::from_element(n_points, delay_span, false),
        }
    }

    /// Keeps `support` entries of the given matrices, zeroes everything else
    /// and sets the mask to the support indicator.
    pub fn from_support(psi_v: CMat, psi_h: CMat, support: &[(usize, usize)]) -> Result<Self> {
        let mask = indicator(psi_v.nrows(), psi_v.ncols(), support)?;
        Self::with_mask(psi_v, psi_h, support, mask)
    }

    /// Like [`from_support`](Self::from_support) with an explicit mask, which
    /// must contain the support.
    pub fn with_mask(
        mut psi_v: CMat,
        mut psi_h: CMat,
        support: &[(usize, usize)],
        mask: DMatrix<bool>,
    ) -> Result<Self> {
        if psi_v.shape() != psi_h.shape() || psi_v.shape() != mask.shape() {
            return Err(Error::shape("coefficient matrices and mask must share one shape"));
        }
        let keep = indicator(psi_v.nrows(), psi_v.ncols(), support)?;
        for (b, l) in support {
            if !mask[(*b, *l)] {
                return Err(Error::invalid(format!("support cell ({b},{l}) outside the mask")));
            }
        }
        for (idx, k) in keep.iter().enumerate() {
            if !k {
                psi_v[idx] = ZERO;
                psi_h[idx] = ZERO;
            }
        }
        let mut support: Vec<(usize, usize)> = support.to_vec();
        support.sort_by_key(|&(b, l)| (l, b));
        support.dedup();
        Ok(SparseCoeffs { psi_v, psi_h, support, mask })
    }

    /// Non-sparse coefficients: support and mask cover every cell.
    pub fn dense(psi_v: CMat, psi_h: CMat) -> Result<Self> {
        if psi_v.shape() != psi_h.shape() {
            return Err(Error::shape("coefficient matrices must share one shape"));
        }
        let (nb, nl) = psi_v.shape();
        let support: Vec<(usize, usize)> =
            (0..nl).flat_map(|l| (0..nb).map(move |b| (b, l))).collect();
        let mask = DMatrix::from_element(nb, nl, true);
        Ok(SparseCoeffs { psi_v, psi_h, support, mask })
    }

    pub fn psi_v(&self) -> &CMat {
        &self.psi_v
    }

    pub fn psi_h(&self) -> &CMat {
        &self.psi_h
    }

    /// Support cells `(b, l)`, sorted by delay then grid index.
    pub fn support(&self) -> &[(usize, usize)] {
        &self.support
    }

    pub fn mask(&self) -> &DMatrix<bool> {
        &self.mask
    }

    pub fn n_points(&self) -> usize {
        self.psi_v.nrows()
    }

    pub fn delay_span(&self) -> usize {
        self.psi_v.ncols()
    }

    /// `|ψ_V|² + |ψ_H|²` of one cell.
    pub fn cell_power(&self, b: usize, l: usize) -> f64 {
        self.psi_v[(b, l)].norm_sqr() + self.psi_h[(b, l)].norm_sqr()
    }

    /// Coefficient NMSE against `truth` over both polarizations.
    pub fn nmse_to(&self, truth: &SparseCoeffs) -> f64 {
        let err: f64 = self
            .psi_v
            .iter()
            .zip(truth.psi_v.iter())
            .chain(self.psi_h.iter().zip(truth.psi_h.iter()))
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let pow: f64 = truth.psi_v.iter().chain(truth.psi_h.iter()).map(|z| z.norm_sqr()).sum();
        err / pow
    }
}

fn indicator(nb: usize, nl: usize, support: &[(usize, usize)]) -> Result<DMatrix<bool>> {
    let mut mask = DMatrix::from_element(nb, nl, false);
    for &(b, l) in support {
        if b >= nb || l >= nl {
            return Err(Error::shape(format!("support cell ({b},{l}) outside {nb}×{nl}")));
        }
        mask[(b, l)] = true;
    }
    Ok(mask)
}

/// Snaps every path of user `k` to its nearest grid point, accumulating gains
/// of paths that land in the same cell.
pub fn project_scene_to_grid(scene: &ScatterScene, grid: &AngleGrid, k: usize) -> Result<SparseCoeffs> {
    if k >= scene.n_users() {
        return Err(Error::invalid(format!("user {k} out of range")));
    }
    let (nb, nl) = (grid.len(), scene.delay_span());
    let mut psi_v = CMat::zeros(nb, nl);
    let mut psi_h = CMat::zeros(nb, nl);
    let mut support = Vec::new();
    for p in scene.paths(k) {
        let b = grid.nearest(&p.dir);
        psi_v[(b, p.delay)] += p.psi_v;
        psi_h[(b, p.delay)] += p.psi_h;
        support.push((b, p.delay));
    }
    SparseCoeffs::from_support(psi_v, psi_h, &support)
}

/// Array, grid and pattern set with the pattern and steering values tabulated
/// on the grid.
#[derive(Debug, Clone)]
pub struct GridModel {
    geom: ArrayGeometry,
    grid: AngleGrid,
    patterns: PatternSet,
    /// `M × |B|`.
    steering: CMat,
    /// `N_s × |B|`.
    nu_v: CMat,
    nu_h: CMat,
}

impl GridModel {
    pub fn new(geom: ArrayGeometry, grid: AngleGrid, patterns: PatternSet) -> Arc<Self> {
        let nb = grid.len();
        let mut steering = CMat::zeros(geom.m(), nb);
        for b in 0..nb {
            steering.set_column(b, &steering_vector(&geom, &grid.point(b)));
        }
        let ns = patterns.n_states();
        let nu_v = CMat::from_fn(ns, nb, |s, b| patterns.eval(s, &grid.point(b), Polarization::V));
        let nu_h = CMat::from_fn(ns, nb, |s, b| patterns.eval(s, &grid.point(b), Polarization::H));
        Arc::new(GridModel { geom, grid, patterns, steering, nu_v, nu_h })
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geom
    }

    pub fn grid(&self) -> &AngleGrid {
        &self.grid
    }

    pub fn patterns(&self) -> &PatternSet {
        &self.patterns
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.geom.m()
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.grid.len()
    }

    #[inline]
    pub fn n_states(&self) -> usize {
        self.patterns.n_states()
    }

    /// Steering matrix, one column per grid point.
    pub fn steering(&self) -> &CMat {
        &self.steering
    }

    /// Tabulated pattern values `N_s × |B|`.
    pub fn pattern_table(&self, pol: Polarization) -> &CMat {
        match pol {
            Polarization::V => &self.nu_v,
            Polarization::H => &self.nu_h,
        }
    }

    pub fn check_states(&self, states: &[usize]) -> Result<()> {
        check_states(states, self.m(), self.n_states())
    }

    /// Basis column `g_b(s)` for one polarization.
    pub fn basis_column(&self, states: &[usize], b: usize, pol: Polarization) -> CVec {
        let nu = self.pattern_table(pol);
        CVec::from_fn(self.m(), |m, _| nu[(states[m], b)] * self.steering[(m, b)])
    }

    /// Angular bases `(G_V, G_H)`, each `M × |B|`.
    pub fn angular_basis(&self, states: &[usize]) -> Result<(CMat, CMat)> {
        self.check_states(states)?;
        let g = |nu: &CMat| {
            CMat::from_fn(self.m(), self.n_points(), |m, b| nu[(states[m], b)] * self.steering[(m, b)])
        };
        Ok((g(&self.nu_v), g(&self.nu_h)))
    }

    /// Grid-model channel `Σ_{(b,l)∈D} (g_V,b ψ_V + g_H,b ψ_H) f_lᵀ` (`M × n_c`).
    pub fn approx_channel(&self, coeffs: &SparseCoeffs, states: &[usize], n_c: usize) -> Result<CMat> {
        self.check_states(states)?;
        if coeffs.n_points() != self.n_points() {
            return Err(Error::shape(format!(
                "coefficients have {} grid points, grid has {}",
                coeffs.n_points(),
                self.n_points()
            )));
        }
        let m = self.m();
        let nl = coeffs.delay_span();
        // per-delay spatial response
        let mut spatial = CMat::zeros(m, nl);
        for &(b, l) in coeffs.support() {
            let (pv, ph) = (coeffs.psi_v()[(b, l)], coeffs.psi_h()[(b, l)]);
            for i in 0..m {
                let s = states[i];
                spatial[(i, l)] += (self.nu_v[(s, b)] * pv + self.nu_h[(s, b)] * ph) * self.steering[(i, b)];
            }
        }
        Ok(spatial * delay_dft(n_c, nl).transpose())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::fibonacci_sphere;

    fn geom(m1: usize, m2: usize) -> ArrayGeometry {
        ArrayGeometry::new(m1, m2).unwrap()
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(make_grid(5.0).unwrap().len(), 2701);
        assert_eq!(make_grid(90.0).unwrap().len(), 15);
        assert_eq!(make_grid(15.0).unwrap().len(), 325);
        assert!(make_grid(7.0).is_err());
        assert!(make_grid(0.0).is_err());
        assert!(make_grid(-5.0).is_err());
    }

    #[test]
    fn grid_order_is_theta_outer() {
        let g = make_grid(90.0).unwrap();
        assert_eq!((g.n_theta(), g.n_phi()), (3, 5));
        let d = g.point(g.index(1, 2));
        assert!((d.theta() - PI / 2.0).abs() < 1e-12);
        assert!((d.phi() - PI).abs() < 1e-12);
        assert_eq!(g.coords(7), (1, 2));
        // 360° column duplicates 0°, poles collapse to one direction
        assert_eq!(g.point(g.index(1, 4)), g.point(g.index(1, 0)));
        assert_eq!(g.point(g.index(2, 3)), g.point(g.index(2, 0)));
        assert_eq!(g.point(g.index(0, 3)), g.point(g.index(0, 0)));
    }

    #[test]
    fn steering_examples() {
        let d = Direction::new(1.0, 2.0).unwrap();
        let b = steering_vector(&geom(1, 1), &d);
        assert_eq!(b.len(), 1);
        assert!((b[0] - C64::new(1.0, 0.0)).norm() < 1e-15);

        let d = Direction::new(PI / 2.0, PI / 2.0).unwrap();
        let b = steering_vector(&geom(4, 4), &d);
        for z in b.iter() {
            assert!((z - C64::new(0.25, 0.0)).norm() < 1e-12);
        }

        let d = Direction::new(0.0, PI / 2.0).unwrap();
        let b = steering_vector(&geom(2, 1), &d);
        let s = 0.5f64.sqrt();
        assert!((b[0] - C64::new(s, 0.0)).norm() < 1e-12);
        assert!((b[1] - C64::new(-s, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn steering_is_kronecker_of_factors() {
        let g = geom(3, 2);
        let d = Direction::new(0.7, 1.1).unwrap();
        let f = |n: usize, x: f64| {
            CMat::from_fn(n, 1, |i, _| cis(-PI * i as f64 * x) / (n as f64).sqrt())
        };
        let expect = crate::linalg::kron(
            &f(2, d.theta().cos()),
            &f(3, d.theta().sin() * d.phi().cos()),
        );
        let b = steering_vector(&g, &d);
        assert!((CMat::from_column_slice(6, 1, b.as_slice()) - expect).norm() < 1e-14);
    }

    #[test]
    fn nearest_matches_brute_force() {
        let grid = make_grid(15.0).unwrap();
        for d in fibonacci_sphere(200) {
            let b = grid.nearest(&d);
            let dist = d.angular_distance(&grid.point(b));
            let best = grid
                .points()
                .iter()
                .map(|p| d.angular_distance(p))
                .fold(f64::INFINITY, f64::min);
            assert!(dist <= best + 1e-12);
        }
        // exact grid points map to their first occurrence
        let b = grid.index(3, 24);
        assert_eq!(grid.nearest(&grid.point(b)), grid.index(3, 0));
    }

    #[test]
    fn degenerate_scene() {
        let s = synth_scene(1, 1, 1, 1, 0.0).unwrap();
        assert_eq!(s.n_users(), 1);
        assert_eq!(s.paths(0).len(), 1);
        assert_eq!(s.paths(0)[0].delay, 0);
        assert!(s.paths(0)[0].dir.theta() <= PI / 2.0);
    }

    #[test]
    fn scene_ranges_and_determinism() {
        let s = synth_scene(1, 4, 6, 8, 5.0).unwrap();
        assert_eq!(s.n_users(), 4);
        for k in 0..4 {
            assert_eq!(s.paths(k).len(), 6);
            assert!(s.paths(k).iter().all(|p| p.delay < 8));
        }
        assert_eq!(s, synth_scene(1, 4, 6, 8, 5.0).unwrap());
        assert_ne!(s, synth_scene(2, 4, 6, 8, 5.0).unwrap());
        assert!(synth_scene(1, 1, 0, 8, 5.0).is_err());
        assert!(synth_scene(1, 1, 1, 0, 5.0).is_err());
    }

    #[test]
    fn distinct_delays_are_distinct() {
        let params = SceneParams { n_users: 3, n_paths: 8, delay_span: 8, angle_spread_deg: 5.0, distinct_delays: true };
        let s = ScatterScene::sample(&mut rng::seeded(4), &params).unwrap();
        for k in 0..3 {
            let mut d: Vec<usize> = s.paths(k).iter().map(|p| p.delay).collect();
            d.sort();
            assert_eq!(d, (0..8).collect::<Vec<_>>());
        }
        let bad = SceneParams { n_paths: 9, ..params };
        assert!(ScatterScene::sample(&mut rng::seeded(4), &bad).is_err());
    }

    #[test]
    fn scene_power_normalization() {
        let mut total = 0.0;
        let n = 2000;
        for seed in 0..n {
            let s = synth_scene(seed, 1, 4, 8, 5.0).unwrap();
            total += s.paths(0).iter().map(|p| p.psi_v.norm_sqr() + p.psi_h.norm_sqr()).sum::<f64>();
        }
        let mean = total / n as f64;
        assert!((mean - 1.0).abs() < 0.05, "{mean}");
    }

    #[test]
    fn scene_new_validates() {
        let p = ScatterPath {
            dir: Direction::new(0.0, 0.0).unwrap(),
            delay: 3,
            psi_v: C64::new(1.0, 0.0),
            psi_h: ZERO,
        };
        assert!(ScatterScene::new(vec![vec![p]], 3).is_err());
        assert!(ScatterScene::new(vec![vec![]], 3).is_err());
        assert!(ScatterScene::new(vec![vec![p]], 4).is_ok());
    }

    #[test]
    fn exact_channel_single_path() {
        let g = geom(2, 2);
        let pats = PatternSet::synthetic(3, 4, 2).unwrap();
        let dir = Direction::new(0.4, 0.9).unwrap();
        let psi = C64::new(0.3, -0.8);
        let scene = ScatterScene::new(
            vec![vec![ScatterPath { dir, delay: 0, psi_v: psi, psi_h: ZERO }]],
            4,
        )
        .unwrap();
        let states = [0, 1, 2, 3];
        let h = exact_channel(&scene, &g, &pats, &states, 8, 0).unwrap();
        let beta = steering_vector(&g, &dir);
        for n in 0..8 {
            for m in 0..4 {
                let expect = psi * pats.eval(states[m], &dir, Polarization::V) * beta[m];
                assert!((h[(m, n)] - expect).norm() < 1e-14);
            }
        }
        assert!(exact_channel(&scene, &g, &pats, &[0, 1, 2, 4], 8, 0).is_err());
        assert!(exact_channel(&scene, &g, &pats, &[0, 1, 2], 8, 0).is_err());
    }

    #[test]
    fn exact_channel_superposition_and_zero() {
        let g = geom(2, 3);
        let pats = PatternSet::synthetic(3, 3, 2).unwrap();
        let s = synth_scene(5, 1, 2, 4, 10.0).unwrap();
        let states = [0, 1, 2, 0, 1, 2];
        let both = exact_channel(&s, &g, &pats, &states, 16, 0).unwrap();
        let one = |i: usize| {
            let sc = ScatterScene::new(vec![vec![s.paths(0)[i]]], 4).unwrap();
            exact_channel(&sc, &g, &pats, &states, 16, 0).unwrap()
        };
        assert!((both - one(0) - one(1)).norm() < 1e-13);

        let zero: Vec<ScatterPath> =
            s.paths(0).iter().map(|p| ScatterPath { psi_v: ZERO, psi_h: ZERO, ..*p }).collect();
        let sc = ScatterScene::new(vec![zero], 4).unwrap();
        assert_eq!(exact_channel(&sc, &g, &pats, &states, 16, 0).unwrap().norm(), 0.0);

        let col = exact_channel_at(&s, &g, &pats, &states, 5, 16, 0).unwrap();
        let full = exact_channel(&s, &g, &pats, &states, 16, 0).unwrap();
        assert_eq!(col, full.column(5).into_owned());
        assert!(exact_channel_at(&s, &g, &pats, &states, 16, 16, 0).is_err());
    }

    #[test]
    fn angular_basis_examples() {
        let grid = make_grid(30.0).unwrap();
        let iso = GridModel::new(geom(2, 2), grid.clone(), PatternSet::isotropic());
        let (gv, gh) = iso.angular_basis(&[0; 4]).unwrap();
        for b in 0..grid.len() {
            let beta = steering_vector(iso.geometry(), &grid.point(b));
            let scale = if grid.point(b).theta() <= PI / 2.0 { 2f64.sqrt() } else { 0.0 };
            assert!((gv.column(b) - &beta * C64::new(scale, 0.0)).norm() < 1e-14);
            assert_eq!(gv.column(b), gh.column(b));
        }

        let pats = PatternSet::synthetic(9, 3, 2).unwrap();
        let single = GridModel::new(geom(1, 1), grid.clone(), pats.clone());
        let (gv, _) = single.angular_basis(&[2]).unwrap();
        for b in 0..grid.len() {
            assert!((gv[(0, b)] - pats.eval(2, &grid.point(b), Polarization::V)).norm() < 1e-15);
        }
    }

    #[test]
    fn approx_channel_single_entry_and_dense_oracle() {
        let grid = make_grid(30.0).unwrap();
        let pats = PatternSet::synthetic(4, 3, 2).unwrap();
        let model = GridModel::new(geom(2, 2), grid.clone(), pats);
        let states = [0, 2, 1, 1];
        let nb = grid.len();
        let (gv, gh) = model.angular_basis(&states).unwrap();

        let mut pv = CMat::zeros(nb, 3);
        pv[(17, 0)] = C64::new(1.0, 0.0);
        let c = SparseCoeffs::from_support(pv, CMat::zeros(nb, 3), &[(17, 0)]).unwrap();
        let h = model.approx_channel(&c, &states, 6).unwrap();
        for n in 0..6 {
            assert!((h.column(n) - gv.column(17)).norm() < 1e-14);
        }

        let empty = SparseCoeffs::zeros(nb, 3);
        assert_eq!(model.approx_channel(&empty, &states, 6).unwrap().norm(), 0.0);

        // dense sum over all cells
        let mut rng = rng::seeded(2);
        let support = [(3, 0), (40, 2), (41, 1), (80, 2)];
        let mut pv = CMat::zeros(nb, 3);
        let mut ph = CMat::zeros(nb, 3);
        for &(b, l) in &support {
            pv[(b, l)] = rng::complex_gaussian(&mut rng, 1.0);
            ph[(b, l)] = rng::complex_gaussian(&mut rng, 1.0);
        }
        let c = SparseCoeffs::from_support(pv.clone(), ph.clone(), &support).unwrap();
        let f = delay_dft(6, 3);
        let dense = (&gv * &pv + &gh * &ph) * f.transpose();
        let h = model.approx_channel(&c, &states, 6).unwrap();
        assert!((h - &dense).norm() <= 1e-12 * dense.norm());
    }

    #[test]
    fn on_grid_scene_matches_grid_model() {
        let grid = make_grid(15.0).unwrap();
        let pats = PatternSet::synthetic(4, 5, 3).unwrap();
        let g = geom(4, 4);
        let model = GridModel::new(g, grid.clone(), pats.clone());
        let scene = synth_scene(3, 2, 6, 8, 10.0).unwrap().snapped(&grid);
        let mut rng = rng::seeded(1);
        for k in 0..2 {
            let coeffs = project_scene_to_grid(&scene, &grid, k).unwrap();
            for _ in 0..5 {
                let states: Vec<usize> = (0..16).map(|_| rng.random_range(0..5)).collect();
                let exact = exact_channel(&scene, &g, &pats, &states, 32, k).unwrap();
                let approx = model.approx_channel(&coeffs, &states, 32).unwrap();
                assert!((&approx - &exact).norm() <= 1e-10 * exact.norm());
            }
        }
    }

    #[test]
    fn projection_snaps_and_accumulates() {
        let grid = make_grid(15.0).unwrap();
        let b_star = grid.index(4, 7);
        let c = C64::new(0.5, 0.25);
        let on = ScatterPath { dir: grid.point(b_star), delay: 2, psi_v: c, psi_h: ZERO };
        let scene = ScatterScene::new(vec![vec![on, on]], 4).unwrap();
        let coeffs = project_scene_to_grid(&scene, &grid, 0).unwrap();
        assert_eq!(coeffs.psi_v()[(b_star, 2)], c * 2.0);
        assert_eq!(coeffs.support(), &[(b_star, 2)]);
        assert!(coeffs.mask()[(b_star, 2)]);
        assert_eq!(coeffs.mask().iter().filter(|x| **x).count(), 1);

        // 2° elevation offset on a 15° grid
        let p = grid.point(b_star);
        let off = Direction::new(p.phi(), p.theta() + 2f64.to_radians()).unwrap();
        let scene = ScatterScene::new(vec![vec![ScatterPath { dir: off, ..on }]], 4).unwrap();
        let coeffs = project_scene_to_grid(&scene, &grid, 0).unwrap();
        let brute = (0..grid.len())
            .min_by(|&a, &b| {
                off.angular_distance(&grid.point(a))
                    .partial_cmp(&off.angular_distance(&grid.point(b)))
                    .unwrap()
            })
            .unwrap();
        assert_eq!(coeffs.support(), &[(brute, 2)]);
        assert_eq!(brute, b_star);
    }

    #[test]
    fn sparse_coeffs_zero_outside_support() {
        let pv = CMat::from_element(4, 2, C64::new(1.0, 0.0));
        let c = SparseCoeffs::from_support(pv.clone(), pv, &[(1, 1)]).unwrap();
        for b in 0..4 {
            for l in 0..2 {
                let expect = if (b, l) == (1, 1) { 1.0 } else { 0.0 };
                assert_eq!(c.psi_v()[(b, l)].re, expect);
                assert_eq!(c.psi_h()[(b, l)].re, expect);
            }
        }
        assert!(SparseCoeffs::from_support(CMat::zeros(4, 2), CMat::zeros(4, 2), &[(4, 0)]).is_err());
        let mask = DMatrix::from_element(4, 2, false);
        assert!(SparseCoeffs::with_mask(CMat::zeros(4, 2), CMat::zeros(4, 2), &[(0, 0)], mask).is_err());
    }
}
