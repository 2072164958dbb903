//! Golden-section maximization on a closed interval.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximize a unimodal `f` on `[a, b]` until the bracket is narrower than `tol`.
/// Returns `(x, f(x))` for the best point evaluated.
pub fn maximize<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        // ties move toward the left end so the smaller argument wins
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
