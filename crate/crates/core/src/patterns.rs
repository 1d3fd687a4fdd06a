//! Per-state radiation patterns of the reconfigurable antenna elements.
//!
//! A [`PatternSet`] maps `(state, direction, polarization)` to a complex
//! response. Three backends are available:
//!
//! * seeded synthetic patterns: a truncated polynomial expansion in the
//!   Cartesian direction cosines `(sinθcosφ, sinθsinφ, cosθ)` with
//!   complex-Gaussian coefficients per state and polarization, scaled so each
//!   state radiates unit average power over the sphere;
//! * an isotropic upper-hemisphere pattern used by the non-reconfigurable
//!   baseline;
//! * tabulated patterns imported from a plain-text grid file and bilinearly
//!   interpolated.
//!
//! Polynomials in the direction cosines are smooth on the whole sphere, so the
//! synthetic patterns have no seam at `φ = 0` and no pole singularity.

use std::f64::consts::PI;
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{C64, ZERO};
use crate::rng;

const TWO_PI: f64 = 2.0 * PI;

/// Largest supported synthetic expansion order.
pub const MAX_ORDER: usize = 12;

/// A direction seen from the array: azimuth `phi ∈ [0, 2π)`, elevation
/// `theta ∈ [0, π]` (radians).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    phi: f64,
    theta: f64,
}

impl Direction {
    pub fn new(phi: f64, theta: f64) -> Result<Self> {
        if !(phi.is_finite() && theta.is_finite()) {
            return Err(Error::invalid("direction angles must be finite"));
        }
        if !(0.0..TWO_PI).contains(&phi) {
            return Err(Error::invalid(format!("azimuth {phi} outside [0, 2π)")));
        }
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::invalid(format!("elevation {theta} outside [0, π]")));
        }
        Ok(Direction { phi, theta })
    }

    pub fn from_degrees(phi_deg: f64, theta_deg: f64) -> Result<Self> {
        Self::new(phi_deg.to_radians(), theta_deg.to_radians())
    }

    /// Folds arbitrary angles onto the sphere: elevation is reflected into
    /// `[0, π]` (flipping the azimuth by π) and azimuth is wrapped into `[0, 2π)`.
    pub fn wrapped(phi: f64, theta: f64) -> Self {
        let mut theta = theta.rem_euclid(TWO_PI);
        let mut phi = phi;
        if theta > PI {
            theta = TWO_PI - theta;
            phi += PI;
        }
        let mut phi = phi.rem_euclid(TWO_PI);
        if phi >= TWO_PI {
            phi = 0.0;
        }
        Direction { phi, theta }
    }

    #[inline]
    pub fn phi(&self) -> f64 {
        self.phi
    }

    #[inline]
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `(sinθcosφ, sinθsinφ, cosθ)`.
    #[inline]
    pub fn unit_vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }

    /// Great-circle angle to `other`, radians.
    pub fn angular_distance(&self, other: &Direction) -> f64 {
        let a = self.unit_vector();
        let b = other.unit_vector();
        let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        let cross = [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ];
        let cn = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
        cn.atan2(dot)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarization {
    V,
    H,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::V, Polarization::H];

    #[inline]
    fn index(self) -> usize {
        match self {
            Polarization::V => 0,
            Polarization::H => 1,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarization::V => "V",
            Polarization::H => "H",
        })
    }
}

/// Immutable set of `n_states` dual-polarized radiation patterns.
///
/// States are indexed from 0. Cloning is cheap.
#[derive(Debug, Clone)]
pub struct PatternSet {
    n_states: usize,
    seed: u64,
    model: Arc<PatternModel>,
}

#[derive(Debug)]
enum PatternModel {
    Polynomial {
        order: usize,
        exponents: Vec<[u32; 3]>,
        /// `[state][pol][monomial]`, flattened.
        coeffs: Vec<C64>,
    },
    Isotropic {
        amplitude: f64,
    },
    Tabulated(Tabulated),
}

#[derive(Debug)]
struct Tabulated {
    n_theta: usize,
    n_phi: usize,
    /// `[state][pol][theta][phi]`, flattened.
    values: Vec<C64>,
}

impl PatternSet {
    /// Seeded synthetic pattern family.
    ///
    /// `order` is the maximal total degree of the direction-cosine polynomial.
    /// Each state is scaled so that the mean over the sphere of
    /// `(|ν_V|² + |ν_H|²) / 2` is exactly one.
    pub fn synthetic(seed: u64, n_states: usize, order: usize) -> Result<Self> {
        if n_states == 0 {
            return Err(Error::invalid("pattern set needs at least one state"));
        }
        if order == 0 || order > MAX_ORDER {
            return Err(Error::invalid(format!("pattern expansion order must be in 1..={MAX_ORDER}")));
        }
        let exponents = monomial_exponents(order);
        let n_mono = exponents.len();
        let moments = moment_matrix(&exponents);
        let mut rng = rng::seeded(seed);
        let mut coeffs = Vec::with_capacity(n_states * 2 * n_mono);
        for _ in 0..n_states {
            let start = coeffs.len();
            for _ in 0..2 * n_mono {
                coeffs.push(rng::complex_gaussian(&mut rng, 1.0));
            }
            let block = &mut coeffs[start..];
            let power = 0.5
                * (quad_form(&moments, &block[..n_mono]) + quad_form(&moments, &block[n_mono..]));
            let scale = power.sqrt().recip();
            block.iter_mut().for_each(|c| *c *= scale);
        }
        Ok(PatternSet {
            n_states,
            seed,
            model: Arc::new(PatternModel::Polynomial { order, exponents, coeffs }),
        })
    }

    /// Single-state pattern with equal magnitude in both polarizations over
    /// the upper hemisphere `θ ≤ π/2` and zero below, unit average power over
    /// the full sphere.
    pub fn isotropic() -> Self {
        PatternSet {
            n_states: 1,
            seed: 0,
            model: Arc::new(PatternModel::Isotropic { amplitude: 2f64.sqrt() }),
        }
    }

    /// Reads tabulated patterns.
    ///
    /// One sample per non-comment line, whitespace separated:
    ///
    /// ```text
    /// state pol theta_index phi_index re im
    /// ```
    ///
    /// `state` is 0-based, `pol` is `V` or `H`. With `n_theta` elevation rows
    /// and `n_phi` azimuth columns (inferred from the largest indices), row `i`
    /// sits at `θ = iπ/(n_theta-1)` and column `j` at `φ = 2πj/n_phi`. Azimuth
    /// is periodic. Every `(state, pol, i, j)` must be present exactly once.
    /// Lines starting with `#` are ignored.
    pub fn from_grid_file(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_grid(std::io::BufReader::new(file))
    }

    pub fn read_grid<R: BufRead>(reader: R) -> Result<Self> {
        let mut rows: Vec<(usize, usize, usize, usize, C64)> = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let perr = |msg: &str| Error::Parse { line: lineno + 1, msg: msg.to_string() };
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 6 {
                return Err(perr("expected 6 columns: state pol theta_index phi_index re im"));
            }
            let state: usize = f[0].parse().map_err(|_| perr("bad state index"))?;
            let pol = match f[1] {
                "V" | "v" => 0,
                "H" | "h" => 1,
                _ => return Err(perr("polarization must be V or H")),
            };
            let it: usize = f[2].parse().map_err(|_| perr("bad theta index"))?;
            let ip: usize = f[3].parse().map_err(|_| perr("bad phi index"))?;
            let re: f64 = f[4].parse().map_err(|_| perr("bad real part"))?;
            let im: f64 = f[5].parse().map_err(|_| perr("bad imaginary part"))?;
            rows.push((state, pol, it, ip, C64::new(re, im)));
        }
        if rows.is_empty() {
            return Err(Error::Parse { line: 0, msg: "no pattern samples".into() });
        }
        let n_states = rows.iter().map(|r| r.0).max().unwrap() + 1;
        let n_theta = rows.iter().map(|r| r.2).max().unwrap() + 1;
        let n_phi = rows.iter().map(|r| r.3).max().unwrap() + 1;
        if n_theta < 2 || n_phi < 2 {
            return Err(Error::Parse { line: 0, msg: "need at least 2 elevation and 2 azimuth samples".into() });
        }
        let total = n_states * 2 * n_theta * n_phi;
        if rows.len() != total {
            return Err(Error::Parse {
                line: 0,
                msg: format!("expected {total} samples, found {}", rows.len()),
            });
        }
        let mut values = vec![ZERO; total];
        let mut seen = vec![false; total];
        for (s, p, it, ip, v) in rows {
            let idx = ((s * 2 + p) * n_theta + it) * n_phi + ip;
            if seen[idx] {
                return Err(Error::Parse { line: 0, msg: format!("duplicate sample ({s},{p},{it},{ip})") });
            }
            seen[idx] = true;
            values[idx] = v;
        }
        Ok(PatternSet {
            n_states,
            seed: 0,
            model: Arc::new(PatternModel::Tabulated(Tabulated { n_theta, n_phi, values })),
        })
    }

    #[inline]
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Expansion order for synthetic sets.
    pub fn order(&self) -> Option<usize> {
        match &*self.model {
            PatternModel::Polynomial { order, .. } => Some(*order),
            _ => None,
        }
    }

    /// Pattern value of `state` towards `dir`.
    ///
    /// # Panics
    /// If `state >= n_states()`.
    pub fn eval(&self, state: usize, dir: &Direction, pol: Polarization) -> C64 {
        assert!(state < self.n_states, "state {state} out of range (n_states = {})", self.n_states);
        match &*self.model {
            PatternModel::Polynomial { order, exponents, coeffs } => {
                let n_mono = exponents.len();
                let off = (state * 2 + pol.index()) * n_mono;
                eval_poly(*order, exponents, &coeffs[off..off + n_mono], dir)
            }
            PatternModel::Isotropic { amplitude } => {
                if dir.theta <= PI / 2.0 {
                    C64::new(*amplitude, 0.0)
                } else {
                    ZERO
                }
            }
            PatternModel::Tabulated(t) => t.eval(state, pol.index(), dir),
        }
    }

    /// Both polarizations at once.
    #[inline]
    pub fn eval_pair(&self, state: usize, dir: &Direction) -> (C64, C64) {
        (self.eval(state, dir, Polarization::V), self.eval(state, dir, Polarization::H))
    }

    /// Mean of `(|ν_V|² + |ν_H|²)/2` for `state` over the given directions.
    pub fn mean_power(&self, state: usize, dirs: &[Direction]) -> f64 {
        dirs.iter()
            .map(|d| {
                let (v, h) = self.eval_pair(state, d);
                0.5 * (v.norm_sqr() + h.norm_sqr())
            })
            .sum::<f64>()
            / dirs.len() as f64
    }

    /// Normalized correlation `|⟨ν_i, ν_j⟩| / (‖ν_i‖‖ν_j‖)` of two states,
    /// both polarizations stacked, estimated on `dirs`.
    pub fn state_correlation(&self, i: usize, j: usize, dirs: &[Direction]) -> f64 {
        let (mut cross, mut pi, mut pj) = (ZERO, 0.0, 0.0);
        for d in dirs {
            for pol in Polarization::BOTH {
                let a = self.eval(i, d, pol);
                let b = self.eval(j, d, pol);
                cross += a.conj() * b;
                pi += a.norm_sqr();
                pj += b.norm_sqr();
            }
        }
        cross.norm() / (pi * pj).sqrt()
    }
}

/// Weighted combination `Σ_i w_i ν(dir; i)` of all states.
pub fn mixed_pattern(set: &PatternSet, weights: &[f64], dir: &Direction, pol: Polarization) -> Result<C64> {
    if weights.len() != set.n_states() {
        return Err(Error::shape(format!(
            "{} weights for {} states",
            weights.len(),
            set.n_states()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
        return Err(Error::invalid(format!("negative or NaN weight {w}")));
    }
    Ok(weights
        .iter()
        .enumerate()
        .filter(|(_, w)| **w != 0.0)
        .map(|(i, &w)| set.eval(i, dir, pol) * w)
        .fold(ZERO, |acc, x| acc + x))
}

/// `n` quasi-uniform directions on the sphere (Fibonacci lattice).
pub fn fibonacci_sphere(n: usize) -> Vec<Direction> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            Direction::wrapped(golden * i as f64, z.acos())
        })
        .collect()
}

impl Tabulated {
    fn eval(&self, state: usize, pol: usize, dir: &Direction) -> C64 {
        let base = (state * 2 + pol) * self.n_theta * self.n_phi;
        let t = dir.theta / PI * (self.n_theta - 1) as f64;
        let i0 = (t.floor() as usize).min(self.n_theta - 2);
        let ft = t - i0 as f64;
        let p = dir.phi / TWO_PI * self.n_phi as f64;
        let j0 = (p.floor() as usize) % self.n_phi;
        let fp = p - p.floor();
        let j1 = (j0 + 1) % self.n_phi;
        let at = |i: usize, j: usize| self.values[base + i * self.n_phi + j];
        at(i0, j0) * ((1.0 - ft) * (1.0 - fp))
            + at(i0, j1) * ((1.0 - ft) * fp)
            + at(i0 + 1, j0) * (ft * (1.0 - fp))
            + at(i0 + 1, j1) * (ft * fp)
    }
}

fn monomial_exponents(order: usize) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for deg in 0..=order as u32 {
        for a in (0..=deg).rev() {
            for b in (0..=deg - a).rev() {
                out.push([a, b, deg - a - b]);
            }
        }
    }
    out
}

fn double_factorial(n: i64) -> f64 {
    let mut acc = 1.0;
    let mut k = n;
    while k > 1 {
        acc *= k as f64;
        k -= 2;
    }
    acc
}

/// Mean of `x^a y^b z^c` over the uniform unit sphere.
fn sphere_moment(e: [u32; 3]) -> f64 {
    if e.iter().any(|k| k % 2 == 1) {
        return 0.0;
    }
    let n: u32 = e.iter().sum();
    e.iter().map(|&k| double_factorial(k as i64 - 1)).product::<f64>() / double_factorial(n as i64 + 1)
}

fn moment_matrix(exponents: &[[u32; 3]]) -> Vec<f64> {
    let n = exponents.len();
    let mut m = vec![0.0; n * n];
    for (i, a) in exponents.iter().enumerate() {
        for (j, b) in exponents.iter().enumerate() {
            m[i * n + j] = sphere_moment([a[0] + b[0], a[1] + b[1], a[2] + b[2]]);
        }
    }
    m
}

fn quad_form(m: &[f64], c: &[C64]) -> f64 {
    let n = c.len();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += c[i].conj() * c[j] * m[i * n + j];
        }
    }
    acc.re
}

fn eval_poly(order: usize, exponents: &[[u32; 3]], coeffs: &[C64], dir: &Direction) -> C64 {
    let u = dir.unit_vector();
    let mut pw = [[1.0f64; MAX_ORDER + 1]; 3];
    for axis in 0..3 {
        for k in 1..=order {
            pw[axis][k] = pw[axis][k - 1] * u[axis];
        }
    }
    exponents
        .iter()
        .zip(coeffs)
        .map(|(e, c)| c * (pw[0][e[0] as usize] * pw[1][e[1] as usize] * pw[2][e[2] as usize]))
        .fold(ZERO, |acc, x| acc + x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direction_rejects_out_of_range() {
        assert!(Direction::new(-0.1, 0.5).is_err());
        assert!(Direction::new(TWO_PI, 0.5).is_err());
        assert!(Direction::new(0.0, PI + 1e-9).is_err());
        assert!(Direction::new(f64::NAN, 0.0).is_err());
        assert!(Direction::new(0.0, PI).is_ok());
    }

    #[test]
    fn wrapped_reflects_elevation() {
        let d = Direction::wrapped(0.2, -0.3);
        assert!((d.theta() - 0.3).abs() < 1e-15);
        assert!((d.phi() - (0.2 + PI)).abs() < 1e-15);
        let d = Direction::wrapped(-0.5, 1.0);
        assert!((d.phi() - (TWO_PI - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn sphere_moments_known_values() {
        assert_eq!(sphere_moment([0, 0, 0]), 1.0);
        assert!((sphere_moment([2, 0, 0]) - 1.0 / 3.0).abs() < 1e-15);
        assert!((sphere_moment([4, 0, 0]) - 0.2).abs() < 1e-15);
        assert!((sphere_moment([2, 2, 0]) - 1.0 / 15.0).abs() < 1e-15);
        assert_eq!(sphere_moment([1, 2, 0]), 0.0);
    }

    #[test]
    fn moments_agree_with_quadrature() {
        let dirs = fibonacci_sphere(20_000);
        for e in [[2u32, 2, 2], [0, 4, 2], [6, 0, 0]] {
            let q: f64 = dirs
                .iter()
                .map(|d| {
                    let u = d.unit_vector();
                    u[0].powi(e[0] as i32) * u[1].powi(e[1] as i32) * u[2].powi(e[2] as i32)
                })
                .sum::<f64>()
                / dirs.len() as f64;
            assert!((q - sphere_moment(e)).abs() < 1e-4, "{e:?}: {q}");
        }
    }

    #[test]
    fn monomial_count() {
        assert_eq!(monomial_exponents(1).len(), 4);
        assert_eq!(monomial_exponents(3).len(), 20);
    }

    #[test]
    fn rejects_zero_states_or_order() {
        assert!(PatternSet::synthetic(1, 0, 3).is_err());
        assert!(PatternSet::synthetic(1, 4, 0).is_err());
    }

    #[test]
    fn synthetic_unit_power_and_distinct() {
        let set = PatternSet::synthetic(7, 12, 3).unwrap();
        assert_eq!(set.n_states(), 12);
        let dirs = fibonacci_sphere(10_000);
        for s in 0..12 {
            let p = set.mean_power(s, &dirs);
            assert!((p - 1.0).abs() < 1e-2, "state {s}: {p}");
        }
        let coarse = fibonacci_sphere(2_000);
        for i in 0..12 {
            for j in i + 1..12 {
                assert!(set.state_correlation(i, j, &coarse) < 0.99);
            }
        }
    }

    #[test]
    fn eval_is_deterministic() {
        let a = PatternSet::synthetic(7, 1, 1).unwrap();
        let b = PatternSet::synthetic(7, 1, 1).unwrap();
        let d = Direction::new(1.1, 0.7).unwrap();
        let x = a.eval(0, &d, Polarization::H);
        assert_eq!(x, a.eval(0, &d, Polarization::H));
        assert_eq!(x, b.eval(0, &d, Polarization::H));
        let c = PatternSet::synthetic(8, 1, 1).unwrap();
        assert_ne!(x, c.eval(0, &d, Polarization::H));
    }

    #[test]
    fn synthetic_is_continuous() {
        let set = PatternSet::synthetic(11, 4, 3).unwrap();
        for d in fibonacci_sphere(500) {
            let dp = Direction::wrapped(d.phi() + 1e-4, d.theta());
            let dt = Direction::wrapped(d.phi(), d.theta() + 1e-4);
            for s in 0..4 {
                for pol in Polarization::BOTH {
                    let v = set.eval(s, &d, pol);
                    assert!((set.eval(s, &dp, pol) - v).norm() <= 1e-2);
                    assert!((set.eval(s, &dt, pol) - v).norm() <= 1e-2);
                }
            }
        }
    }

    #[test]
    fn isotropic_pattern() {
        let iso = PatternSet::isotropic();
        assert_eq!(iso.n_states(), 1);
        let a = iso.eval(0, &Direction::new(0.0, PI / 4.0).unwrap(), Polarization::V);
        let b = iso.eval(0, &Direction::new(PI, PI / 3.0).unwrap(), Polarization::H);
        assert_eq!(a.norm(), b.norm());
        let below = Direction::new(0.3, 3.0 * PI / 4.0).unwrap();
        assert_eq!(iso.eval(0, &below, Polarization::V), ZERO);
        assert_eq!(iso.eval(0, &below, Polarization::H), ZERO);
        // Fibonacci points are symmetric in z, so exactly half lie above the equator.
        let p = iso.mean_power(0, &fibonacci_sphere(10_000));
        assert!((p - 1.0).abs() < 1e-3, "{p}");
    }

    #[test]
    fn mixed_pattern_selection_and_linearity() {
        let set = PatternSet::synthetic(5, 4, 2).unwrap();
        let d = Direction::new(2.0, 1.2).unwrap();
        let mut w = vec![0.0; 4];
        w[3] = 1.0;
        assert_eq!(mixed_pattern(&set, &w, &d, Polarization::V).unwrap(), set.eval(3, &d, Polarization::V));
        assert_eq!(mixed_pattern(&set, &[0.0; 4], &d, Polarization::H).unwrap(), ZERO);
        let half = mixed_pattern(&set, &[0.5, 0.5, 0.0, 0.0], &d, Polarization::H).unwrap();
        let expect = (set.eval(0, &d, Polarization::H) + set.eval(1, &d, Polarization::H)) * 0.5;
        assert!((half - expect).norm() < 1e-15);
        assert!(mixed_pattern(&set, &[1.0; 3], &d, Polarization::H).is_err());
        assert!(mixed_pattern(&set, &[1.0, -1.0, 0.0, 0.0], &d, Polarization::H).is_err());
    }

    #[test]
    fn grid_file_roundtrip_and_interpolation() {
        // Tabulate a synthetic set on a fine grid and read it back.
        let set = PatternSet::synthetic(3, 2, 2).unwrap();
        let (nt, np) = (91usize, 180usize);
        let mut text = String::from("# state pol theta_index phi_index re im\n");
        for s in 0..2 {
            for pol in Polarization::BOTH {
                for i in 0..nt {
                    for j in 0..np {
                        let d = Direction::new(TWO_PI * j as f64 / np as f64, PI * i as f64 / (nt - 1) as f64).unwrap();
                        let v = set.eval(s, &d, pol);
                        text.push_str(&format!("{s} {pol} {i} {j} {:e} {:e}\n", v.re, v.im));
                    }
                }
            }
        }
        let tab = PatternSet::read_grid(text.as_bytes()).unwrap();
        assert_eq!(tab.n_states(), 2);
        for d in fibonacci_sphere(300) {
            for s in 0..2 {
                for pol in Polarization::BOTH {
                    assert!((tab.eval(s, &d, pol) - set.eval(s, &d, pol)).norm() < 2e-2);
                }
            }
        }
        // exact on nodes
        let node = Direction::new(TWO_PI * 7.0 / np as f64, PI * 10.0 / (nt - 1) as f64).unwrap();
        assert!((tab.eval(1, &node, Polarization::V) - set.eval(1, &node, Polarization::V)).norm() < 1e-12);
    }

    #[test]
    fn grid_file_rejects_incomplete() {
        let text = "0 V 0 0 1 0\n0 V 1 0 1 0\n0 V 0 1 1 0\n";
        assert!(PatternSet::read_grid(text.as_bytes()).is_err());
        assert!(PatternSet::read_grid("0 X 0 0 1 0\n".as_bytes()).is_err());
    }
}
