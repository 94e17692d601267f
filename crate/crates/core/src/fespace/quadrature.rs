//! Gauss–Legendre rules on `[0, 1]` and collapsed (Duffy) product rules on the
//! reference triangle.

use crate::mesh::Point;

/// Gauss–Legendre rule with `n` points on `[0, 1]`; weights sum to one.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "a quadrature rule needs at least one point");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Newton iteration on P_n starting from the Chebyshev-like guess.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * weight;
        w[n - 1 - i] = 0.5 * weight;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Shifted Legendre polynomial `L_j(t)` on `[0, 1]`, with `L_j(1 - t) = (-1)^j L_j(t)`.
pub fn shifted_legendre(j: usize, t: f64) -> f64 {
    let z = 2.0 * t - 1.0;
    let (mut p0, mut p1) = (1.0, z);
    match j {
        0 => 1.0,
        1 => z,
        _ => {
            for k in 2..=j {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    }
}

/// Quadrature on the reference triangle `(0,0), (1,0), (0,1)`.
#[derive(Clone, Debug)]
pub struct Quadrature {
    /// Reference coordinates `(ξ, η)`.
    pub points: Vec<Point>,
    /// Positive weights summing to the reference area `1/2`.
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl Quadrature {
    /// A rule exact for polynomials of total degree `degree`.
    pub fn triangle(degree: usize) -> Self {
        let n = (degree + 2).div_ceil(2);
        let (x, w) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (&u, &wu) in x.iter().zip(&w) {
            for (&v, &wv) in x.iter().zip(&w) {
                points.push([u, v * (1.0 - u)]);
                weights.push(wu * wv * (1.0 - u));
            }
        }
        Quadrature {
            points,
            weights,
            degree,
        }
    }

    /// Barycentric coordinates of the points.
    pub fn barycentric(&self) -> Vec<[f64; 3]> {
        self.points
            .iter()
            .map(|p| [1.0 - p[0] - p[1], p[0], p[1]])
            .collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Gauss rule on a facet parameterised by `s ∈ [0, 1]`.
#[derive(Clone, Debug)]
pub struct FacetQuadrature {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl FacetQuadrature {
    /// A rule exact for polynomials of degree `degree` in `s`.
    pub fn exact_for(degree: usize) -> Self {
        let (points, weights) = gauss_legendre((degree + 2) / 2);
        FacetQuadrature { points, weights }
    }

    pub fn with_points(n: usize) -> Self {
        let (points, weights) = gauss_legendre(n);
        FacetQuadrature { points, weights }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(|i| i as f64).product()
    }

    #[test]
    fn triangle_monomials() {
        for degree in 0..=12 {
            let q = Quadrature::triangle(degree);
            for a in 0..=degree as u32 {
                for b in 0..=(degree as u32 - a) {
                    let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                    let got: f64 = q
                        .points
                        .iter()
                        .zip(&q.weights)
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    assert!((got - exact).abs() < 1e-14, "x^{a} y^{b}: {got} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn gauss_exactness() {
        for n in 1..10 {
            let (x, w) = gauss_legendre(n);
            for p in 0..2 * n {
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                assert!((got - 1.0 / (p as f64 + 1.0)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn legendre_orthogonality() {
        let (x, w) = gauss_legendre(8);
        for i in 0..5 {
            for j in 0..5 {
                let got: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(t, w)| w * shifted_legendre(i, *t) * shifted_legendre(j, *t))
                    .sum();
                let expect = if i == j { 1.0 / (2 * i + 1) as f64 } else { 0.0 };
                assert!((got - expect).abs() < 1e-14);
            }
            assert!((shifted_legendre(i, 0.3) - (-1f64).powi(i as i32) * shifted_legendre(i, 0.7)).abs() < 1e-14);
        }
    }

    #[test]
    fn weights_sum_and_barycentric() {
        let q = Quadrature::triangle(6);
        assert!((q.weights.iter().sum::<f64>() - 0.5).abs() < 1e-15);
        for b in q.barycentric() {
            assert!(b.iter().all(|&l| l >= 0.0));
            assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }
}
