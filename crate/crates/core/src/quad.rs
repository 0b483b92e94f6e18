//! Fixed-node Gauss–Legendre quadrature.
//!
//! All likelihood integrals in this crate use the same deterministic rule:
//! 64 Gauss–Legendre nodes per smooth piece. Fixed nodes keep the computed
//! likelihood a smooth function of the model parameters, which the
//! quasi-Newton fitter relies on.

use std::sync::OnceLock;

const N_NODES: usize = 64;

/// Nodes and weights of the 64-point Gauss–Legendre rule on [-1, 1].
///
/// Computed once by Newton iteration on the Legendre polynomial; the roots
/// converge to full double precision in a handful of steps.
fn nodes_64() -> &'static [(f64, f64); N_NODES] {
    static NODES: OnceLock<[(f64, f64); N_NODES]> = OnceLock::new();
    NODES.get_or_init(|| {
        let n = N_NODES;
        let mut table = [(0.0, 0.0); N_NODES];
        for i in 0..n {
            // Chebyshev-style initial guess for the i-th root.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // Evaluate P_n(x) and P_n'(x) by the three-term recurrence.
                let mut p0 = 1.0;
                let mut p1 = x;
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / dp;
                x -= step;
                if step.abs() < 1e-15 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            table[n - 1 - i] = (x, w);
        }
        table
    })
}

/// Integrate `f` over `[a, b]` with the 64-point rule. Returns 0 for an
/// empty or inverted interval.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for &(x, w) in nodes_64().iter() {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Integrate `f` over `[a, b]`, splitting the range at the interior points
/// of `cuts` so that each piece is smooth. `cuts` need not be sorted or lie
/// inside the range; irrelevant entries are ignored.
pub fn integrate_split<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cuts: &[f64]) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let mut pts: Vec<f64> = cuts.iter().copied().filter(|c| *c > a && *c < b).collect();
    if pts.is_empty() {
        return integrate(f, a, b);
    }
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    let mut acc = 0.0;
    let mut lo = a;
    for c in pts {
        acc += integrate(&f, lo, c);
        lo = c;
    }
    acc + integrate(&f, lo, b)
}

/// Sum a slice pairwise. Deterministic and order-independent with respect
/// to how the contributions were produced (they are consumed by index).
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn weights_sum_to_two() {
        let s: f64 = nodes_64().iter().map(|(_, w)| w).sum();
        assert_abs_diff_eq!(s, 2.0, epsilon = 1e-13);
    }

    #[test]
    fn integrates_polynomials_exactly() {
        // Degree 127 is exact for a 64-node rule; check a few moments.
        for k in [0usize, 1, 5, 20, 63] {
            let got = integrate(|x| x.powi(k as i32), 0.0, 1.0);
            assert_abs_diff_eq!(got, 1.0 / (k as f64 + 1.0), epsilon = 1e-12);
        }
    }

    #[test]
    fn integrates_smooth_transcendentals() {
        let got = integrate(f64::exp, 0.0, 1.0);
        assert_abs_diff_eq!(got, std::f64::consts::E - 1.0, epsilon = 1e-13);
    }

    #[test]
    fn split_handles_kinks() {
        // |x - 0.3| has a kink; splitting there restores full accuracy.
        let f = |x: f64| (x - 0.3).abs();
        let exact = 0.3 * 0.3 / 2.0 + 0.7 * 0.7 / 2.0;
        let got = integrate_split(f, 0.0, 1.0, &[0.3]);
        assert_abs_diff_eq!(got, exact, epsilon = 1e-14);
    }

    #[test]
    fn empty_ranges_are_zero() {
        assert_eq!(integrate(|_| 1.0, 1.0, 1.0), 0.0);
        assert_eq!(integrate(|_| 1.0, 2.0, 1.0), 0.0);
        assert_eq!(integrate_split(|_| 1.0, 2.0, 1.0, &[1.5]), 0.0);
    }

    #[test]
    fn pairwise_sum_matches_sequential() {
        let xs: Vec<f64> = (0..1001).map(|i| (i as f64).sin()).collect();
        let seq: f64 = xs.iter().sum();
        assert_abs_diff_eq!(pairwise_sum(&xs), seq, epsilon = 1e-9);
    }
}
