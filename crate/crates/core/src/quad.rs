//! Quadrature rules on triangles and boundary edges.
//!
//! Everything the assembly needs is low order and fixed: a 6-point rule of
//! polynomial degree 4 on triangles, the 5-point Gauss-Legendre rule
//! (degree 9) on edges, and Simpson's rule, which is exact for the quadratic
//! traces produced by products of P1 functions.

/// Barycentric coordinates and weights of the 6-point, degree-4 triangle rule.
///
/// Weights sum to one; multiply by the triangle area when integrating.
pub const TRI6: [([f64; 3], f64); 6] = [
    (
        [0.816_847_572_980_459, 0.091_576_213_509_771, 0.091_576_213_509_771],
        0.109_951_743_655_322,
    ),
    (
        [0.091_576_213_509_771, 0.816_847_572_980_459, 0.091_576_213_509_771],
        0.109_951_743_655_322,
    ),
    (
        [0.091_576_213_509_771, 0.091_576_213_509_771, 0.816_847_572_980_459],
        0.109_951_743_655_322,
    ),
    (
        [0.108_103_018_168_070, 0.445_948_490_915_965, 0.445_948_490_915_965],
        0.223_381_589_678_011,
    ),
    (
        [0.445_948_490_915_965, 0.108_103_018_168_070, 0.445_948_490_915_965],
        0.223_381_589_678_011,
    ),
    (
        [0.445_948_490_915_965, 0.445_948_490_915_965, 0.108_103_018_168_070],
        0.223_381_589_678_011,
    ),
];

/// Nodes (on `[-1, 1]`) and weights of the 5-point Gauss-Legendre rule.
///
/// Exact through polynomial degree 9; weights sum to two.
pub const GAUSS5: [(f64, f64); 5] = [
    (-0.906_179_845_938_664, 0.236_926_885_056_189),
    (-0.538_469_310_105_683, 0.478_628_670_499_366),
    (0.0, 0.568_888_888_888_889),
    (0.538_469_310_105_683, 0.478_628_670_499_366),
    (0.906_179_845_938_664, 0.236_926_885_056_189),
];

/// Integrates `f` over the triangle `(p0, p1, p2)` with the degree-4 rule.
pub fn triangle_deg4(p0: [f64; 2], p1: [f64; 2], p2: [f64; 2], mut f: impl FnMut(f64, f64) -> f64) -> f64 {
    let area = triangle_area(p0, p1, p2);
    let mut acc = 0.0;
    for (bary, w) in TRI6 {
        let x = bary[0] * p0[0] + bary[1] * p1[0] + bary[2] * p2[0];
        let y = bary[0] * p0[1] + bary[1] * p1[1] + bary[2] * p2[1];
        acc += w * f(x, y);
    }
    acc * area
}

/// Integrates `f` along the segment `a -> b` with 5-point Gauss.
pub fn edge_gauss5(a: [f64; 2], b: [f64; 2], mut f: impl FnMut(f64, f64) -> f64) -> f64 {
    let len = segment_length(a, b);
    let mut acc = 0.0;
    for (t, w) in GAUSS5 {
        // map [-1, 1] -> segment
        let s = 0.5 * (1.0 + t);
        let x = a[0] + s * (b[0] - a[0]);
        let y = a[1] + s * (b[1] - a[1]);
        acc += w * f(x, y);
    }
    acc * 0.5 * len
}

/// Simpson's rule on a segment of length `len` from endpoint/midpoint values.
///
/// Exact for quadratics, hence for products of two P1 traces.
#[inline]
pub fn simpson(v0: f64, vm: f64, v1: f64, len: f64) -> f64 {
    len * (v0 + 4.0 * vm + v1) / 6.0
}

/// Signed area of the triangle `(p0, p1, p2)`; positive when counterclockwise.
#[inline]
pub fn signed_area(p0: [f64; 2], p1: [f64; 2], p2: [f64; 2]) -> f64 {
    0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
}

/// Absolute area of the triangle `(p0, p1, p2)`.
#[inline]
pub fn triangle_area(p0: [f64; 2], p1: [f64; 2], p2: [f64; 2]) -> f64 {
    let s = signed_area(p0, p1, p2);
    if s < 0.0 {
        -s
    } else {
        s
    }
}

/// Euclidean length of the segment `a -> b`.
#[inline]
pub fn segment_length(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = b[0] - a[0];
    let dy = b[1] - a[1];
    libm::sqrt(dx * dx + dy * dy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_rule_weights_sum_to_one() {
        let total: f64 = TRI6.iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-15, "weights sum to {total}");
    }

    #[test]
    fn triangle_rule_is_exact_through_degree_four() {
        // reference-ish triangle with area 1/2
        let (p0, p1, p2) = ([0.0, 0.0], [1.0, 0.0], [0.0, 1.0]);
        // int x^a y^b over unit triangle = a! b! / (a+b+2)!
        let cases: [(u32, u32, f64); 6] = [
            (0, 0, 0.5),
            (1, 0, 1.0 / 6.0),
            (2, 0, 1.0 / 12.0),
            (1, 1, 1.0 / 24.0),
            (2, 2, 1.0 / 180.0),
            (4, 0, 1.0 / 30.0),
        ];
        for (a, b, exact) in cases {
            let got = triangle_deg4(p0, p1, p2, |x, y| {
                libm::pow(x, a as f64) * libm::pow(y, b as f64)
            });
            assert!(
                (got - exact).abs() < 1e-15,
                "x^{a} y^{b}: got {got}, want {exact}"
            );
        }
    }

    #[test]
    fn gauss5_is_exact_through_degree_nine() {
        for k in 0..=9 {
            let got = edge_gauss5([0.0, 0.0], [1.0, 0.0], |x, _| libm::pow(x, k as f64));
            let exact = 1.0 / (k as f64 + 1.0);
            assert!(
                (got - exact).abs() < 1e-14,
                "x^{k}: got {got}, want {exact}"
            );
        }
    }

    #[test]
    fn simpson_matches_quadratic_mean() {
        // q(s) = 3 s^2 - 2 s + 1 on a segment of length 2
        let q = |s: f64| 3.0 * s * s - 2.0 * s + 1.0;
        let exact = 2.0 * (1.0 - 1.0 + 1.0); // int_0^1 q ds = 1, scaled by len
        assert!((simpson(q(0.0), q(0.5), q(1.0), 2.0) - exact).abs() < 1e-15);
    }

    #[test]
    fn areas_and_lengths() {
        assert_eq!(signed_area([0.0, 0.0], [1.0, 0.0], [1.0, 1.0]), 0.5);
        assert_eq!(signed_area([0.0, 0.0], [1.0, 1.0], [1.0, 0.0]), -0.5);
        assert!((segment_length([0.0, 0.0], [3.0, 4.0]) - 5.0).abs() < 1e-15);
    }
}
