//! Gauss–Legendre rules on the unit interval.

use crate::real::Real;

/// Gauss–Legendre rule with `n` points mapped to `[0, 1]`.
#[derive(Clone, Debug)]
pub struct GaussRule<T> {
    pub points: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> GaussRule<T> {
    /// Builds the `n`-point rule. Exact for polynomials of degree `2n - 1`.
    ///
    /// Nodes come from Newton iteration on the Legendre three-term recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature needs at least one point");
        let half = T::lit(0.5);
        let mut points = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let nf = T::lit(n as f64);
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x =
                (T::PI() * (T::lit(i as f64) + T::lit(0.75)) / (nf + half)).cos();
            let mut dp = T::one();
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x = x - dx;
                if dx.abs() <= T::epsilon() * T::lit(4.0) {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != T::zero() {
                dp = d;
            }
            let w = T::lit(2.0) / ((T::one() - x * x) * dp * dp);
            // map [-1, 1] -> [0, 1]; nodes come out in descending order
            points[i] = half * (T::one() - x);
            points[n - 1 - i] = half * (T::one() + x);
            weights[i] = half * w;
            weights[n - 1 - i] = half * w;
        }
        GaussRule { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate<F: Fn(T) -> T>(&self, a: T, b: T, f: F) -> T {
        let len = b - a;
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(a + len * p))
            .sum::<T>()
            * len
    }
}

/// `(P_n(x), P_n'(x))`.
fn legendre<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    if n == 0 {
        return (p0, T::zero());
    }
    for k in 2..=n {
        let kf = T::lit(k as f64);
        let p2 = ((T::lit(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = T::lit(n as f64);
    let dp = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, dp)
}
