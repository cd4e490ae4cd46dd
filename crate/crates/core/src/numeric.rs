//! Bracketed scalar root finding shared by the dual and deadline solvers.

/// Final bracket of a root search; `f_lo` and `f_hi` have opposite signs (or one is zero).
#[derive(Debug, Clone, Copy)]
pub struct Bracket {
    pub lo: f64,
    pub f_lo: f64,
    pub hi: f64,
    pub f_hi: f64,
}

/// Illinois false position with a bisection safeguard.
///
/// `f_lo` and `f_hi` must bracket a root. Stops when the bracket width drops
/// below `xtol_abs + xtol_rel * max(|lo|, |hi|)`, an exact zero is hit, or
/// `max_iter` evaluations have been spent. The whole bracket is returned so the
/// caller can pick whichever side satisfies its own feasibility sense.
pub fn illinois<F>(mut f: F, mut b: Bracket, xtol_abs: f64, xtol_rel: f64, max_iter: usize) -> Bracket
where
    F: FnMut(f64) -> f64,
{
    debug_assert!(b.f_lo * b.f_hi <= 0.0, "root not bracketed: {b:?}");
    if b.f_lo == 0.0 {
        b.hi = b.lo;
        b.f_hi = 0.0;
        return b;
    }
    if b.f_hi == 0.0 {
        b.lo = b.hi;
        b.f_lo = 0.0;
        return b;
    }
    // +1 when the last update replaced `lo`, -1 for `hi`
    let mut side = 0i8;
    let mut width = (b.hi - b.lo).abs();
    for it in 0..max_iter {
        if (b.hi - b.lo).abs() <= xtol_abs + xtol_rel * b.lo.abs().max(b.hi.abs()) {
            break;
        }
        let mut c = (b.lo * b.f_hi - b.hi * b.f_lo) / (b.f_hi - b.f_lo);
        let (left, right) = if b.lo < b.hi { (b.lo, b.hi) } else { (b.hi, b.lo) };
        let forced_bisect = it % 4 == 3 && (b.hi - b.lo).abs() > 0.5 * width;
        if !c.is_finite() || c <= left || c >= right || forced_bisect {
            c = 0.5 * (b.lo + b.hi);
            if it % 4 == 3 {
                width = (b.hi - b.lo).abs();
            }
        }
        let fc = f(c);
        if fc == 0.0 {
            return Bracket { lo: c, f_lo: 0.0, hi: c, f_hi: 0.0 };
        }
        if (fc < 0.0) == (b.f_hi < 0.0) {
            b.hi = c;
            b.f_hi = fc;
            if side == -1 {
                b.f_lo *= 0.5;
            }
            side = -1;
        } else {
            b.lo = c;
            b.f_lo = fc;
            if side == 1 {
                b.f_hi *= 0.5;
            }
            side = 1;
        }
    }
    b
}

/// Geometric search for the first `x = start * factor^k` where `pred(x)` holds.
///
/// Returns `None` if `pred` never holds within `max_steps` steps.
pub fn geometric_search(start: f64, factor: f64, max_steps: usize, mut pred: impl FnMut(f64) -> bool) -> Option<f64> {
    let mut x = start;
    for _ in 0..max_steps {
        if pred(x) {
            return Some(x);
        }
        x *= factor;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cubic_root() {
        let f = |x: f64| x * x * x - 2.0;
        let b = illinois(f, Bracket { lo: 0.0, f_lo: -2.0, hi: 2.0, f_hi: 6.0 }, 0.0, 1e-14, 200);
        let expected = 2f64.cbrt();
        assert!((b.lo - expected).abs() < 1e-12 && (b.hi - expected).abs() < 1e-12);
    }

    #[test]
    fn keeps_sign_structure_for_decreasing_functions() {
        let f = |x: f64| (-x).exp() - 0.25;
        let b = illinois(f, Bracket { lo: 0.0, f_lo: 0.75, hi: 10.0, f_hi: f(10.0) }, 0.0, 1e-13, 200);
        assert!(b.f_lo >= 0.0 && b.f_hi <= 0.0);
        assert!((b.hi - 4f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn geometric_search_doubles() {
        assert_eq!(geometric_search(1.0, 2.0, 10, |x| x >= 8.0), Some(8.0));
        assert_eq!(geometric_search(1.0, 2.0, 3, |x| x >= 8.0), None);
    }
}
