//! One-dimensional maximisation on a bounded interval: a uniform scan picks
//! the bracket, golden-section search refines it.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
    /// The maximiser sits at an end of the search interval.
    pub at_boundary: bool,
}

/// Golden-section search for a maximum of a unimodal `f` on `[lo, hi]`.
/// Ties go left.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
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
    let x = 0.5 * (a + b);
    let fx = f(x);
    [(c, fc), (d, fd)]
        .into_iter()
        .fold((x, fx), |best, cand| if cand.1 > best.1 { cand } else { best })
}

/// Scans `n_scan` evenly spaced points of `[lo, hi]`, then refines around the
/// best one by golden section.
pub fn scan_then_golden<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n_scan: usize, tol: f64) -> Maximum {
    assert!(n_scan >= 2 && hi > lo);
    let step = (hi - lo) / (n_scan - 1) as f64;
    let grid = |i: usize| if i + 1 == n_scan { hi } else { lo + step * i as f64 };
    let (best_i, _) = (0..n_scan)
        .map(|i| (i, f(grid(i))))
        .fold((0, f64::NEG_INFINITY), |best, cand| {
            if cand.1 > best.1 {
                cand
            } else {
                best
            }
        });
    let a = grid(best_i.saturating_sub(1));
    let b = grid((best_i + 1).min(n_scan - 1));
    let (x, value) = golden_section_max(&f, a, b, tol);
    let at_boundary = (x - lo).abs() <= 2.0 * tol.max(step * 1e-6)
        || (hi - x).abs() <= 2.0 * tol.max(step * 1e-6);
    Maximum {
        x,
        value,
        at_boundary,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_peak() {
        let (x, fx) = golden_section_max(|x| -(x - 0.3) * (x - 0.3), -1.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-7);
        assert!(fx.abs() < 1e-14);
    }

    #[test]
    fn scan_handles_multiple_local_maxima() {
        let f = |x: f64| (5.0 * x).sin() + 0.5 * x;
        let m = scan_then_golden(f, 0.0, 3.0, 200, 1e-10);
        let dense = (0..300_001)
            .map(|i| i as f64 * 1e-5)
            .fold((0.0, f64::NEG_INFINITY), |b, x| if f(x) > b.1 { (x, f(x)) } else { b });
        assert!((m.x - dense.0).abs() < 1e-5);
        assert!(!m.at_boundary);
    }

    #[test]
    fn monotone_objective_reports_boundary() {
        let m = scan_then_golden(|x| x, 0.0, 1.0, 200, 1e-9);
        assert!(m.at_boundary);
        assert!((m.x - 1.0).abs() < 1e-8);
    }
}
