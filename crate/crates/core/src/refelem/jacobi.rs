//! Orthonormal Jacobi polynomials and Gauss-type quadrature points on [-1, 1].

use nalgebra::{DMatrix, SymmetricEigen};

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Evaluates the orthonormal Jacobi polynomial P_n^{(alpha, beta)} at `x`.
///
/// Normalized so that the polynomials are orthonormal with respect to the
/// weight (1-x)^alpha (1+x)^beta on [-1, 1]. `alpha` and `beta` are
/// non-negative integers in every use in this crate.
pub fn jacobi_p(x: f64, alpha: u32, beta: u32, n: usize) -> f64 {
    let a = alpha as f64;
    let b = beta as f64;
    let gamma0 = 2f64.powf(a + b + 1.0) / (a + b + 1.0) * factorial(alpha) * factorial(beta)
        / factorial(alpha + beta);
    let p0 = 1.0 / gamma0.sqrt();
    if n == 0 {
        return p0;
    }
    let gamma1 = (a + 1.0) * (b + 1.0) / (a + b + 3.0) * gamma0;
    let p1 = ((a + b + 2.0) * x / 2.0 + (a - b) / 2.0) / gamma1.sqrt();
    if n == 1 {
        return p1;
    }

    let mut a_old = 2.0 / (2.0 + a + b) * ((a + 1.0) * (b + 1.0) / (a + b + 3.0)).sqrt();
    let (mut prev, mut cur) = (p0, p1);
    for i in 1..n {
        let i = i as f64;
        let h1 = 2.0 * i + a + b;
        let a_new = 2.0 / (h1 + 2.0)
            * ((i + 1.0) * (i + 1.0 + a + b) * (i + 1.0 + a) * (i + 1.0 + b)
                / (h1 + 1.0)
                / (h1 + 3.0))
                .sqrt();
        let b_new = -(a * a - b * b) / h1 / (h1 + 2.0);
        let next = (-a_old * prev + (x - b_new) * cur) / a_new;
        prev = cur;
        cur = next;
        a_old = a_new;
    }
    cur
}

/// Derivative of [`jacobi_p`] with respect to `x`.
pub fn grad_jacobi_p(x: f64, alpha: u32, beta: u32, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    (nf * (nf + alpha as f64 + beta as f64 + 1.0)).sqrt() * jacobi_p(x, alpha + 1, beta + 1, n - 1)
}

/// Gauss quadrature points for the Jacobi weight, `n + 1` points, ascending.
///
/// Golub-Welsch: eigenvalues of the symmetric tridiagonal recurrence matrix.
pub fn jacobi_gauss_points(alpha: u32, beta: u32, n: usize) -> Vec<f64> {
    let a = alpha as f64;
    let b = beta as f64;
    if n == 0 {
        return vec![-(a - b) / (a + b + 2.0)];
    }
    let m = n + 1;
    let mut jac = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        let h1 = 2.0 * i as f64 + a + b;
        jac[(i, i)] = if a + b < 1e-14 {
            0.0
        } else {
            -0.5 * (a * a - b * b) / (h1 + 2.0) / h1
        };
    }
    for i in 1..m {
        let fi = i as f64;
        let h1 = 2.0 * (fi - 1.0) + a + b;
        let off = 2.0 / (h1 + 2.0)
            * (fi * (fi + a + b) * (fi + a) * (fi + b) / (h1 + 1.0) / (h1 + 3.0)).sqrt();
        jac[(i - 1, i)] = off;
        jac[(i, i - 1)] = off;
    }
    let mut x: Vec<f64> = SymmetricEigen::new(jac).eigenvalues.iter().copied().collect();
    x.sort_by(|l, r| l.total_cmp(r));
    x
}

/// Gauss-Lobatto points for the Jacobi weight, `n + 1` points including ±1.
pub fn jacobi_gauss_lobatto_points(alpha: u32, beta: u32, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![-1.0, 1.0];
    }
    let mut x = Vec::with_capacity(n + 1);
    x.push(-1.0);
    x.extend(jacobi_gauss_points(alpha + 1, beta + 1, n - 2));
    x.push(1.0);
    x
}

/// Gauss-Legendre points and weights with `count` points.
pub fn gauss_legendre(count: usize) -> (Vec<f64>, Vec<f64>) {
    let x = jacobi_gauss_points(0, 0, count - 1);
    // w_i = 1 / sum_k P_k(x_i)^2 for orthonormal P_k.
    let w = x
        .iter()
        .map(|&xi| {
            let s: f64 = (0..count).map(|k| jacobi_p(xi, 0, 0, k).powi(2)).sum();
            1.0 / s
        })
        .collect();
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_orthonormality() {
        let (x, w) = gauss_legendre(12);
        for i in 0..6 {
            for j in 0..6 {
                let ip: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(&xi, &wi)| wi * jacobi_p(xi, 0, 0, i) * jacobi_p(xi, 0, 0, j))
                    .sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expect).abs() < 1e-13, "({i},{j}) -> {ip}");
            }
        }
    }

    #[test]
    fn weighted_orthonormality() {
        // Weight (1-x)^3 integrated exactly by a high-order Gauss rule.
        let (x, w) = gauss_legendre(20);
        for i in 0..5 {
            for j in 0..5 {
                let ip: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(&xi, &wi)| {
                        wi * (1.0 - xi).powi(3) * jacobi_p(xi, 3, 0, i) * jacobi_p(xi, 3, 0, j)
                    })
                    .sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let h = 1e-6;
        for n in 0..7 {
            for &x in &[-0.7, -0.1, 0.3, 0.85] {
                let fd = (jacobi_p(x + h, 2, 0, n) - jacobi_p(x - h, 2, 0, n)) / (2.0 * h);
                assert!((fd - grad_jacobi_p(x, 2, 0, n)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn lobatto_points_are_symmetric_roots() {
        let x = jacobi_gauss_lobatto_points(0, 0, 5);
        assert_eq!(x.len(), 6);
        for i in 0..6 {
            assert!((x[i] + x[5 - i]).abs() < 1e-14);
        }
        // Interior GLL points are roots of P'_5.
        for &xi in &x[1..5] {
            assert!(grad_jacobi_p(xi, 0, 0, 5).abs() < 1e-11);
        }
    }
}
