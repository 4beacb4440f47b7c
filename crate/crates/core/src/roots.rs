//! One-dimensional bracketing and local minimization helpers.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Bisection on a sign change of `f` in `[lo, hi]` until the bracket is
/// shorter than `tol`. Returns the endpoint with the smaller `|f|`.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return lo;
    }
    if fhi == 0.0 {
        return hi;
    }
    for _ in 0..200 {
        if (hi - lo).abs() <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    if f(lo).abs() <= f(hi).abs() {
        lo
    } else {
        hi
    }
}

/// Bisection on a boolean predicate that flips exactly once in `[lo, hi]`.
/// Returns the final bracket `(a, b)` with `pred(a) == pred(lo)`.
pub fn bisect_predicate(pred: impl Fn(f64) -> bool, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let at_lo = pred(lo);
    for _ in 0..200 {
        if (hi - lo).abs() <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if pred(mid) == at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Golden-section minimization on `[lo, hi]`; returns `(argmin, min)`.
pub fn golden_min(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if (hi - lo).abs() <= tol {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    for x in [lo, hi] {
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    best
}

/// Local minimum of `f(t, s)` with `lo ≤ t`, `s ≤ hi`, `s - t ≥ min_gap`,
/// starting from `(t, s)` with window `h`: alternating golden-section line
/// searches followed by a capped compass search.
pub fn pattern_search_pair(
    f: &dyn Fn(f64, f64) -> f64,
    mut t: f64,
    mut s: f64,
    h: f64,
    lo: f64,
    hi: f64,
    min_gap: f64,
) -> (f64, f64, f64) {
    let mut best = f(t, s);
    let mut w = h;
    for _ in 0..200 {
        if w <= 1e-12 {
            break;
        }
        let before = best;
        let (s_lo, s_hi) = ((t + min_gap).max(s - w), hi.min(s + w));
        if s_hi > s_lo {
            let (sn, v) = golden_min(&|x| f(t, x), s_lo, s_hi, 1e-14);
            if v < best {
                best = v;
                s = sn;
            }
        }
        let (t_lo, t_hi) = (lo.max(t - w), (s - min_gap).min(t + w));
        if t_hi > t_lo {
            let (tn, v) = golden_min(&|x| f(x, s), t_lo, t_hi, 1e-14);
            if v < best {
                best = v;
                t = tn;
            }
        }
        if !(best < before) {
            w *= 0.5;
        }
    }

    let feasible = |t: f64, s: f64| t >= lo && s <= hi && s - t >= min_gap * (1.0 - 1e-12);
    let dirs = [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)];
    let mut step = h;
    let mut budget = 5_000;
    while step > 1e-12 && budget > 0 {
        budget -= 1;
        let mut improved = false;
        for (dt, ds) in dirs {
            let (tn, sn) = (t + dt * step, s + ds * step);
            if !feasible(tn, sn) {
                continue;
            }
            let v = f(tn, sn);
            if v < best {
                best = v;
                t = tn;
                s = sn;
                improved = true;
                break;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (t, s, best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14);
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn predicate_bracket() {
        let (a, b) = bisect_predicate(|x| x < 0.3, 0.0, 1.0, 1e-12);
        assert!(a < 0.3 && b >= 0.3 && b - a <= 1e-12);
    }

    #[test]
    fn golden_quadratic() {
        let (x, v) = golden_min(&|x| (x - 0.25) * (x - 0.25) + 1.0, -1.0, 2.0, 1e-10);
        assert!((x - 0.25).abs() < 1e-7);
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pair_search_respects_gap() {
        let f = |t: f64, s: f64| (s - t - 0.5).powi(2) + (t - 0.1).powi(2);
        let (t, s, v) = pattern_search_pair(&f, 0.0, 1.0, 0.1, -1.0, 2.0, 0.2);
        assert!(v < 1e-18, "{t} {s} {v}");
        let (t, s, _) = pattern_search_pair(&|t, s| s - t, 0.0, 1.0, 0.1, -1.0, 2.0, 0.2);
        assert!((s - t - 0.2).abs() < 1e-9);
    }
}
