//! Scenario configuration and the `key = value` file format.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::omp::SelectionRule;
use crate::precoding::OptimizerConfig;
use crate::sounding::PilotKind;
use crate::vbi::{InverseMoment, VbiConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Ls,
    Omp,
    Vbi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precoder {
    /// Relaxed state optimization on the estimated channel.
    Proposed,
    Random,
    NonFas,
    GroupOpt,
    /// Relaxed state optimization on the true channel.
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// Laptop-sized: `N_c = 64`, 15° grid, `L = 8`.
    Desk,
    /// `N_c = 256`, 5° grid, `L = 16`.
    Paper,
}

macro_rules! named_enum {
    ($ty:ident { $($var:ident => $name:literal),+ $(,)? }) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.to_ascii_lowercase().as_str() {
                    $($name => Ok($ty::$var),)+
                    _ => Err(Error::Config(format!(
                        concat!("unknown ", stringify!($ty), " `{}` (expected one of: ", $($name, " "),+, ")"),
                        s
                    ))),
                }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($ty::$var => $name,)+ })
            }
        }
    };
}

named_enum!(Estimator { Ls => "ls", Omp => "omp", Vbi => "vbi" });
named_enum!(Precoder {
    Proposed => "proposed",
    Random => "random",
    NonFas => "nonfas",
    GroupOpt => "groupopt",
    Upper => "upper",
});
named_enum!(Profile { Desk => "desk", Paper => "paper" });

/// Everything one Monte-Carlo run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub m1: usize,
    pub m2: usize,
    pub n_states: usize,
    pub n_c: usize,
    pub grid_step_deg: f64,
    pub delay_span: usize,
    pub n_users: usize,
    pub n_blocks: usize,
    /// Per-subcarrier transmit power in dB, uplink and downlink.
    pub p_t_db: f64,
    /// Uplink noise power `σ_z²`.
    pub noise_var_ul: f64,
    /// Downlink noise power `σ_z̄²`.
    pub noise_var_dl: f64,
    pub n_trials: usize,
    pub seed: u64,
    pub estimator: Estimator,
    pub precoder: Precoder,
    pub n_paths: usize,
    pub angle_spread_deg: f64,
    pub distinct_delays: bool,
    /// Snap scene paths to the grid before use.
    pub on_grid: bool,
    pub pattern_order: usize,
    pub pilot: PilotKind,
    pub n_test_states: usize,
    pub omp_rule: SelectionRule,
    pub vbi: VbiConfig,
    pub optimizer: OptimizerConfig,
    /// Keep per-iteration VBI traces in the result.
    pub debug_trace: bool,
}

impl ScenarioConfig {
    pub fn profile(p: Profile) -> Self {
        let desk = ScenarioConfig {
            m1: 4,
            m2: 4,
            n_states: 12,
            n_c: 64,
            grid_step_deg: 15.0,
            delay_span: 8,
            n_users: 1,
            n_blocks: 4,
            p_t_db: 20.0,
            noise_var_ul: 1.0,
            noise_var_dl: 1.0,
            n_trials: 20,
            seed: 1,
            estimator: Estimator::Vbi,
            precoder: Precoder::Proposed,
            n_paths: 8,
            angle_spread_deg: 10.0,
            distinct_delays: false,
            on_grid: true,
            pattern_order: 4,
            pilot: PilotKind::ZadoffChu,
            n_test_states: 50,
            omp_rule: SelectionRule::default(),
            vbi: VbiConfig::default(),
            optimizer: OptimizerConfig::default(),
            debug_trace: false,
        };
        match p {
            Profile::Desk => desk,
            Profile::Paper => ScenarioConfig { n_c: 256, grid_step_deg: 5.0, delay_span: 16, ..desk },
        }
    }

    pub fn m(&self) -> usize {
        self.m1 * self.m2
    }

    pub fn p_t(&self) -> f64 {
        10f64.powf(self.p_t_db / 10.0)
    }

    /// Noise variance of the received pilots with unit-modulus pilots:
    /// `σ_z² / P_T`.
    pub fn uplink_noise(&self) -> f64 {
        self.noise_var_ul / self.p_t()
    }

    /// Sets one field by its file/CLI key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Config(format!("bad value `{v}` for `{key}`")))
        }
        fn flag(key: &str, v: &str) -> Result<bool> {
            match v.to_ascii_lowercase().as_str() {
                "true" | "1" | "yes" | "on" => Ok(true),
                "false" | "0" | "no" | "off" => Ok(false),
                _ => Err(Error::Config(format!("bad boolean `{v}` for `{key}`"))),
            }
        }
        match key {
            "m1" => self.m1 = num(key, value)?,
            "m2" => self.m2 = num(key, value)?,
            "n_states" => self.n_states = num(key, value)?,
            "n_c" | "n_subcarriers" => self.n_c = num(key, value)?,
            "grid_step_deg" | "grid_step" => self.grid_step_deg = num(key, value)?,
            "delay_span" => self.delay_span = num(key, value)?,
            "n_users" | "k" => self.n_users = num(key, value)?,
            "n_blocks" | "t" => self.n_blocks = num(key, value)?,
            "p_t_db" | "snr_db" => self.p_t_db = num(key, value)?,
            "noise_var_ul" => self.noise_var_ul = num(key, value)?,
            "noise_var_dl" => self.noise_var_dl = num(key, value)?,
            "trials" | "n_trials" => self.n_trials = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "estimator" => self.estimator = value.parse()?,
            "precoder" => self.precoder = value.parse()?,
            "n_paths" => self.n_paths = num(key, value)?,
            "angle_spread_deg" => self.angle_spread_deg = num(key, value)?,
            "distinct_delays" => self.distinct_delays = flag(key, value)?,
            "on_grid" => self.on_grid = flag(key, value)?,
            "pattern_order" => self.pattern_order = num(key, value)?,
            "pilot" => self.pilot = value.parse()?,
            "test_states" => self.n_test_states = num(key, value)?,
            "omp_rule" => {
                self.omp_rule = match value.to_ascii_lowercase().as_str() {
                    "projection" => SelectionRule::Projection,
                    "coefficient" => SelectionRule::Coefficient,
                    _ => return Err(Error::Config(format!("unknown omp_rule `{value}` (projection, coefficient)"))),
                }
            }
            "vbi_iter" => self.vbi.max_iter = num(key, value)?,
            "vbi_damping" => self.vbi.damping = num(key, value)?,
            "vbi_inverse_moment" => {
                self.vbi.inverse_moment = match value.to_ascii_lowercase().as_str() {
                    "meanfield" => InverseMoment::MeanField,
                    "exact" => InverseMoment::Exact,
                    _ => return Err(Error::Config(format!("unknown vbi_inverse_moment `{value}` (meanfield, exact)"))),
                }
            }
            "opt_lr" => self.optimizer.lr = num(key, value)?,
            "opt_steps" => self.optimizer.steps = num(key, value)?,
            "opt_restarts" => self.optimizer.restarts = num(key, value)?,
            "opt_init_scale" => self.optimizer.init_scale = num(key, value)?,
            "opt_refine_sweeps" => self.optimizer.refine_sweeps = num(key, value)?,
            "debug_trace" => self.debug_trace = flag(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. `#` starts a comment;
    /// a `profile = ...` line resets everything set so far.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: i + 1, msg: "expected `key = value`".into() })?;
            let (k, v) = (k.trim().to_ascii_lowercase(), v.trim());
            let res = if k == "profile" {
                v.parse().map(|p| *self = ScenarioConfig::profile(p))
            } else {
                self.set(&k, v)
            };
            res.map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.m1 == 0 || self.m2 == 0 || self.n_states == 0 {
            return bad("array size and state count must be positive".into());
        }
        if self.n_c == 0 || self.delay_span == 0 || self.delay_span > self.n_c {
            return bad(format!("need 1 <= delay_span ({}) <= n_c ({})", self.delay_span, self.n_c));
        }
        if self.n_blocks == 0 {
            return bad("n_blocks must be at least 1".into());
        }
        if self.n_users == 0 {
            return bad("n_users must be at least 1".into());
        }
        if self.n_users > self.m() {
            return bad(format!("ZF needs n_users ({}) <= M ({})", self.n_users, self.m()));
        }
        if !(self.grid_step_deg > 0.0 && self.grid_step_deg <= 90.0) {
            return bad("grid_step_deg must be in (0, 90]".into());
        }
        if !(self.noise_var_ul > 0.0 && self.noise_var_dl > 0.0 && self.p_t_db.is_finite()) {
            return bad("noise variances must be positive and p_t_db finite".into());
        }
        if self.n_paths == 0 || self.pattern_order == 0 {
            return bad("n_paths and pattern_order must be positive".into());
        }
        if self.distinct_delays && self.n_paths > self.delay_span {
            return bad("distinct_delays needs n_paths <= delay_span".into());
        }
        if self.optimizer.restarts == 0 || !(self.optimizer.lr > 0.0) {
            return bad("optimizer needs opt_restarts >= 1 and opt_lr > 0".into());
        }
        self.vbi.validate().map_err(|e| Error::Config(e.to_string()))
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::profile(Profile::Desk)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_differ_in_scale_only() {
        let d = ScenarioConfig::profile(Profile::Desk);
        let p = ScenarioConfig::profile(Profile::Paper);
        assert_eq!((d.n_c, d.grid_step_deg, d.delay_span), (64, 15.0, 8));
        assert_eq!((p.n_c, p.grid_step_deg, p.delay_span), (256, 5.0, 16));
        assert_eq!(d.m(), 16);
        assert_eq!(p.n_states, 12);
        d.validate().unwrap();
        p.validate().unwrap();
    }

    #[test]
    fn parses_key_values() {
        let mut c = ScenarioConfig::default();
        c.apply_text("# demo\nestimator = omp\nn_users = 3  # trailing\n\nsnr_db=10\ndistinct_delays = yes\n").unwrap();
        assert_eq!(c.estimator, Estimator::Omp);
        assert_eq!(c.n_users, 3);
        assert_eq!(c.p_t_db, 10.0);
        assert!(c.distinct_delays);
        assert!((c.uplink_noise() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn profile_line_resets() {
        let mut c = ScenarioConfig::default();
        c.apply_text("n_users = 3\nprofile = paper\nseed = 9\n").unwrap();
        assert_eq!(c.n_users, 1);
        assert_eq!(c.n_c, 256);
        assert_eq!(c.seed, 9);
    }

    #[test]
    fn rejects_bad_input() {
        let mut c = ScenarioConfig::default();
        assert!(matches!(c.apply_text("nope = 1"), Err(Error::Parse { line: 1, .. })));
        assert!(c.apply_text("\nn_users = many").is_err());
        assert!(c.apply_text("n_users").is_err());
        assert!(c.apply_text("estimator = magic").is_err());
        let mut c = ScenarioConfig { n_users: 17, ..Default::default() };
        assert!(c.validate().unwrap_err().is_config());
        c.n_users = 4;
        c.delay_span = 100;
        assert!(c.validate().is_err());
    }

    #[test]
    fn enum_names_roundtrip() {
        for p in [Precoder::Proposed, Precoder::Random, Precoder::NonFas, Precoder::GroupOpt, Precoder::Upper] {
            assert_eq!(p.to_string().parse::<Precoder>().unwrap(), p);
        }
        for e in [Estimator::Ls, Estimator::Omp, Estimator::Vbi] {
            assert_eq!(e.to_string().parse::<Estimator>().unwrap(), e);
        }
        assert_eq!("VBI".parse::<Estimator>().unwrap(), Estimator::Vbi);
    }
}
