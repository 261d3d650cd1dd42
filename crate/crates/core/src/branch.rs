//! Continuation of square-root branches along a parameter path.

use crate::{Complex, Error, Real, Result};

pub const DEFAULT_STEPS: usize = 64;
const MAX_STEPS: usize = 1 << 16;

/// Follows a continuous square root of `f(t)` for `t` from 0 to 1.
///
/// `root0` fixes the branch at `t = 0`. The step count starts at `steps` and
/// is doubled until the argument of `f` changes by less than `π/2` per step.
pub fn track_sqrt<T, F>(f: F, root0: Complex<T>, steps: usize) -> Result<Complex<T>>
where
    T: Real,
    F: Fn(T) -> Result<Complex<T>>,
{
    let start = f(T::zero())?;
    let mut n = steps.max(1);
    let quarter = T::FRAC_PI_2();
    'outer: while n <= MAX_STEPS {
        let mut prev = start;
        let mut root = root0;
        for i in 1..=n {
            let t = T::from_usize(i).unwrap() / T::from_usize(n).unwrap();
            let cur = f(t)?;
            if cur.norm() == T::zero() || !cur.re.is_finite() || !cur.im.is_finite() {
                return Err(Error::Branch(format!(
                    "path passes through a zero of the radicand at t = {}",
                    t.as_f64()
                )));
            }
            let ratio = cur / prev;
            if ratio.arg().abs() >= quarter {
                n *= 2;
                continue 'outer;
            }
            root = root * ratio.sqrt();
            prev = cur;
        }
        // snap to the exact root on the tracked sheet
        let s = prev.sqrt();
        return Ok(if (s - root).norm() <= (s + root).norm() { s } else { -s });
    }
    Err(Error::Branch(format!("no admissible step size up to {MAX_STEPS} steps")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;
    use std::f64::consts::PI;

    #[test]
    fn winding_radicand_changes_sheet() {
        // f(t) = e^{2πit}: continuous sqrt ends at -1, principal gives +1
        let r = track_sqrt(|t: f64| Ok(C64::from_polar(1.0, 2.0 * PI * t)), C64::new(1.0, 0.0), 4).unwrap();
        assert!((r + C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn zero_on_path_is_reported() {
        let r = track_sqrt(|t: f64| Ok(C64::new(1.0 - 2.0 * t, 0.0)), C64::new(1.0, 0.0), 2);
        assert!(r.is_err());
    }
}
