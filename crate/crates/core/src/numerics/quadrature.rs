use super::Scalar;
use crate::{Error, Result};

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Scalar> QuadratureRule<T> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `f` over `[-1, 1]`.
    pub fn integrate<F: FnMut(T) -> T>(&self, mut f: F) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (&x, &w)| acc + w * f(x))
    }

    /// Nodes and weights mapped affinely onto `[a, b]`.
    pub fn mapped(&self, a: T, b: T) -> (Vec<T>, Vec<T>) {
        let half = (b - a) * T::lit(0.5);
        let mid = (b + a) * T::lit(0.5);
        let nodes = self.nodes.iter().map(|&x| mid + half * x).collect();
        let weights = self.weights.iter().map(|&w| w * half).collect();
        (nodes, weights)
    }
}

/// Legendre value and derivative at `x` by the three-term recurrence.
fn legendre_with_derivative<T: Scalar>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    for j in 2..=n {
        let jf = T::from_usize_lossy(j);
        let p2 = ((T::lit(2.0) * jf - T::one()) * x * p1 - (jf - T::one()) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (T::one(), T::zero());
    }
    let nf = T::from_usize_lossy(n);
    let dp = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, dp)
}

/// `n`-point Gauss–Legendre rule; exact for polynomials of degree `2n - 1`.
pub fn gauss_legendre<T: Scalar>(n: usize) -> Result<QuadratureRule<T>> {
    if n == 0 {
        return Err(Error::invalid("gauss_legendre needs at least one node"));
    }
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let half = (n + 1) / 2;
    let nf = T::from_usize_lossy(n);
    for i in 0..half {
        // Tricomi initial guess for the i-th largest root.
        let theta = T::PI() * (T::from_usize_lossy(i) + T::lit(0.75)) / (nf + T::lit(0.5));
        let mut x = theta.cos();
        let mut dp = T::one();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= T::epsilon() * T::lit(4.0) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = T::lit(2.0) / ((T::one() - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = T::zero();
    }
    Ok(QuadratureRule { nodes, weights })
}
