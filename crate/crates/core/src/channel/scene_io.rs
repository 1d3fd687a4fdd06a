//! Plain-text scene files.
//!
//! ```text
//! # comment
//! delay_span 8
//! users 2
//! # user theta phi tau re_v im_v re_h im_h
//! 0 0.7853981633974483 1.5707963267948966 3 0.1 -0.2 0.05 0.0
//! ```
//!
//! Angles are radians. Paths are listed in user order.

use std::io::{BufRead, Write};

use super::{ScatterPath, ScatterScene};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::patterns::Direction;

pub(super) fn write_scene(scene: &ScatterScene, mut w: impl Write) -> Result<()> {
    writeln!(w, "delay_span {}", scene.delay_span())?;
    writeln!(w, "users {}", scene.n_users())?;
    writeln!(w, "# user theta phi tau re_v im_v re_h im_h")?;
    for (k, paths) in scene.users().iter().enumerate() {
        for p in paths {
            writeln!(
                w,
                "{k} {:e} {:e} {} {:e} {:e} {:e} {:e}",
                p.dir.theta(),
                p.dir.phi(),
                p.delay,
                p.psi_v.re,
                p.psi_v.im,
                p.psi_h.re,
                p.psi_h.im
            )?;
        }
    }
    Ok(())
}

pub(super) fn read_scene(r: impl BufRead) -> Result<ScatterScene> {
    let mut delay_span = None;
    let mut n_users = None;
    let mut users: Vec<Vec<ScatterPath>> = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let perr = |msg: String| Error::Parse { line: i + 1, msg };
        let f: Vec<&str> = line.split_whitespace().collect();
        match f[0] {
            "delay_span" | "users" => {
                let v: usize = f
                    .get(1)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| perr(format!("{} needs a non-negative integer", f[0])))?;
                if f[0] == "users" {
                    n_users = Some(v);
                    users.resize(v, Vec::new());
                } else {
                    delay_span = Some(v);
                }
            }
            _ => {
                let n_users = n_users.ok_or_else(|| perr("path row before `users` line".into()))?;
                if f.len() != 8 {
                    return Err(perr("path rows need 8 columns".into()));
                }
                let k: usize = f[0].parse().map_err(|_| perr("bad user index".into()))?;
                if k >= n_users {
                    return Err(perr(format!("user {k} >= users {n_users}")));
                }
                let num = |j: usize| -> Result<f64> {
                    f[j].parse().map_err(|_| perr(format!("bad number in column {}", j + 1)))
                };
                let dir = Direction::new(num(2)?, num(1)?).map_err(|e| perr(e.to_string()))?;
                let delay: usize = f[3].parse().map_err(|_| perr("bad delay".into()))?;
                users[k].push(ScatterPath {
                    dir,
                    delay,
                    psi_v: C64::new(num(4)?, num(5)?),
                    psi_h: C64::new(num(6)?, num(7)?),
                });
            }
        }
    }
    let delay_span =
        delay_span.ok_or_else(|| Error::Parse { line: 0, msg: "missing delay_span".into() })?;
    ScatterScene::new(users, delay_span)
}

#[cfg(test)]
mod tests {
    use super::super::synth_scene;
    use super::*;

    #[test]
    fn roundtrip() {
        let s = synth_scene(4, 3, 5, 8, 5.0).unwrap();
        let mut buf = Vec::new();
        s.write_to(&mut buf).unwrap();
        let back = ScatterScene::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(ScatterScene::read_from("users 1\n0 0 0 0 1 0 0 0\n".as_bytes()).is_err());
        assert!(ScatterScene::read_from("delay_span 2\nusers 1\n0 0 0 5 1 0 0 0\n".as_bytes()).is_err());
        assert!(ScatterScene::read_from("delay_span 2\nusers 1\n1 0 0 0 1 0 0 0\n".as_bytes()).is_err());
        assert!(ScatterScene::read_from("delay_span 2\nusers 1\n0 4 0 0 1 0 0 0\n".as_bytes()).is_err());
    }
}
