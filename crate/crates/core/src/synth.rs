//! Synthetic test signals with values in `[0, 1]`.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ScalarField;

pub const MIN_SIZE: usize = 16;

/// Drop heights of consecutive saw jumps.
pub const SAW_JUMPS: [f64; 3] = [0.5, 0.3, 0.2];

const SAW_TOP: f64 = 0.75;
const SAW_MIN_SEGMENT: usize = 4;
const DEFAULT_SAW_JUMPS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SynthKind {
    /// 1D ramps separated by downward jumps of cycling heights.
    Saw,
    /// 1D single 0 -> 1 jump at the midpoint.
    Step,
    /// 2D horizontal ramp with an inner square carrying the reversed ramp.
    DoubleGradient,
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "saw" => Ok(SynthKind::Saw),
            "step" => Ok(SynthKind::Step),
            "double_gradient" | "double-gradient" => Ok(SynthKind::DoubleGradient),
            other => Err(Error::invalid(format!("unknown synthetic kind '{other}'"))),
        }
    }
}

fn check_size(size: usize) -> Result<()> {
    if size < MIN_SIZE {
        return Err(Error::invalid(format!(
            "synthetic size must be at least {MIN_SIZE}, got {size}"
        )));
    }
    Ok(())
}

/// Generates a synthetic signal. 1D kinds are `size x 1`, the 2D kind is
/// `size x size`.
pub fn make_synthetic(kind: SynthKind, size: usize) -> Result<ScalarField> {
    check_size(size)?;
    match kind {
        SynthKind::Saw => make_saw(size, DEFAULT_SAW_JUMPS.min(size / SAW_MIN_SEGMENT - 1)),
        SynthKind::Step => make_step(size),
        SynthKind::DoubleGradient => make_double_gradient(size),
    }
}

/// Saw signal with `jumps` discontinuities. Each of the `jumps + 1`
/// segments rises linearly to 0.75; segment boundaries drop by the heights
/// in [`SAW_JUMPS`], cycled. Every segment has at least four nodes so the
/// ramp increments stay below the smallest jump.
pub fn make_saw(size: usize, jumps: usize) -> Result<ScalarField> {
    check_size(size)?;
    let segments = jumps + 1;
    if jumps == 0 || size / segments < SAW_MIN_SEGMENT {
        return Err(Error::invalid(format!(
            "cannot place {jumps} saw jumps in {size} nodes"
        )));
    }
    let mut values = Vec::with_capacity(size);
    for s in 0..segments {
        let start = s * size / segments;
        let end = (s + 1) * size / segments;
        let rise = if s == 0 { 0.5 } else { SAW_JUMPS[(s - 1) % SAW_JUMPS.len()] };
        let len = end - start;
        for t in 0..len {
            values.push(SAW_TOP - rise + rise * t as f64 / (len - 1) as f64);
        }
    }
    ScalarField::signal(values)
}

pub fn make_step(size: usize) -> Result<ScalarField> {
    check_size(size)?;
    ScalarField::signal((0..size).map(|k| if k < size / 2 { 0.0 } else { 1.0 }).collect())
}

/// Outer ramp `0.2 -> 0.8` left to right; the centered inner square of half
/// the side carries the reversed ramp `0.8 -> 0.2` across its own columns.
/// Its top and bottom edges lose contrast toward the middle.
pub fn make_double_gradient(size: usize) -> Result<ScalarField> {
    check_size(size)?;
    let lo = size / 4;
    let hi = size - size / 4;
    let inner = hi - lo;
    ScalarField::from_fn(size, size, |i, j| {
        if (lo..hi).contains(&i) && (lo..hi).contains(&j) {
            0.8 - 0.6 * (j - lo) as f64 / (inner - 1) as f64
        } else {
            0.2 + 0.6 * j as f64 / (size - 1) as f64
        }
    })
}

/// Row/column range of the inner square of [`make_double_gradient`].
pub fn double_gradient_inner(size: usize) -> std::ops::Range<usize> {
    size / 4..size - size / 4
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_definition() {
        let s = make_step(16).unwrap();
        assert!(s.values()[..8].iter().all(|&v| v == 0.0));
        assert!(s.values()[8..].iter().all(|&v| v == 1.0));
    }

    #[test]
    fn too_small_rejected() {
        for kind in [SynthKind::Saw, SynthKind::Step, SynthKind::DoubleGradient] {
            assert!(make_synthetic(kind, 15).is_err());
        }
        assert!(make_saw(16, 4).is_err());
        assert!(make_saw(64, 0).is_err());
    }

    #[test]
    fn saw_jump_count() {
        for (size, k) in [(16, 3), (64, 5), (256, 5), (300, 7)] {
            let s = make_saw(size, k).unwrap();
            let v = s.values();
            assert!(v.iter().all(|&x| (0.0..=1.0).contains(&x)));
            let drops = v.windows(2).filter(|w| w[1] < w[0]).count();
            assert_eq!(drops, k);
            let big = v.windows(2).filter(|w| (w[1] - w[0]).abs() >= 0.2 - 1e-12).count();
            assert_eq!(big, k);
        }
    }

    #[test]
    fn double_gradient_outer_ramp_is_linear() {
        let n = 64;
        let f = make_double_gradient(n).unwrap();
        assert!(f.values().iter().all(|&x| (0.0..=1.0).contains(&x)));
        for i in 0..n / 4 {
            for j in 1..n - 1 {
                let d2 = f.get(i, j + 1) - 2.0 * f.get(i, j) + f.get(i, j - 1);
                assert!(d2.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn parse_kinds() {
        assert_eq!("saw".parse::<SynthKind>().unwrap(), SynthKind::Saw);
        assert_eq!("double_gradient".parse::<SynthKind>().unwrap(), SynthKind::DoubleGradient);
        assert!("nope".parse::<SynthKind>().is_err());
    }
}
