//! Scalar root finding and line search used by the solvers.

/// Inverse golden ratio, `(sqrt(5) - 1) / 2`.
const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Finds `x` in `[lo, hi]` with `g(x) = target` for a strictly decreasing `g`.
///
/// If `target` lies outside `[g(hi), g(lo)]` the nearest bracket end is
/// returned. Stops once the bracket is narrower than `tol` or after
/// `max_iter` halvings.
pub fn bisect_decreasing<G>(g: G, target: f64, mut lo: f64, mut hi: f64, tol: f64, max_iter: usize) -> f64
where
    G: Fn(f64) -> f64,
{
    if g(lo) <= target {
        return lo;
    }
    if g(hi) >= target {
        return hi;
    }
    for _ in 0..max_iter {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section maximization of a unimodal `h` on `[lo, hi]`.
///
/// Returns `(argmax, max)`. The bracket end points are compared against the
/// interior estimate so a maximum sitting on the boundary is reported exactly.
pub fn golden_section_max<H>(h: H, lo: f64, hi: f64, tol: f64) -> (f64, f64)
where
    H: Fn(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut hc = h(c);
    let mut hd = h(d);
    while b - a > tol {
        if hc >= hd {
            b = d;
            d = c;
            hd = hc;
            c = b - INV_PHI * (b - a);
            hc = h(c);
        } else {
            a = c;
            c = d;
            hc = hd;
            d = a + INV_PHI * (b - a);
            hd = h(d);
        }
    }
    let mid = 0.5 * (a + b);
    [(mid, h(mid)), (lo, h(lo)), (hi, h(hi))]
        .into_iter()
        .fold(
            (mid, f64::NEG_INFINITY),
            |best, cand| if cand.1 > best.1 { cand } else { best },
        )
}

/// Locates the point in `(lo, hi]` where a boolean indicator flips from
/// `false` to `true`, assuming `pred(lo) == false` and `pred(hi) == true`.
pub fn bisect_switch<P>(pred: P, mut lo: f64, mut hi: f64, tol: f64) -> f64
where
    P: Fn(f64) -> bool,
{
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
