use super::Scalar;

/// Recurrence coefficients `(a_n, b_n)` of the normalized Jacobi polynomials
/// `P_n^{(m)}`, orthonormal on `(-1, 1)` for the weight
/// `(1 + x)^m 2^{-(m+2)}`.
///
/// `b_0` for `m = 0` is the `0/0` limit, which is zero.
pub fn jacobi_recurrence_coefficients<T: Scalar>(m: usize, n: usize) -> (T, T) {
    let mf = T::from_usize_lossy(m);
    let nf = T::from_usize_lossy(n);
    let two = T::lit(2.0);
    let a = two * (nf + T::one()) * (nf + mf + T::one())
        / ((two * nf + mf + two)
            * ((two * nf + mf + T::one()) * (two * nf + mf + T::lit(3.0))).sqrt());
    let b = if n == 0 {
        mf / (mf + two)
    } else {
        mf * mf / ((two * nf + mf) * (two * nf + mf + two))
    };
    (a, b)
}

/// Values `P_0^{(m)}(x), ..., P_{j_max}^{(m)}(x)`.
pub fn jacobi_polynomials<T: Scalar>(m: usize, j_max: usize, x: T) -> Vec<T> {
    let mut out = Vec::with_capacity(j_max + 1);
    fill_jacobi(m, x, j_max + 1, &mut out);
    out
}

/// Appends `count` Jacobi values at `x` to `out`; avoids reallocating inside
/// hot evaluation loops.
pub(crate) fn fill_jacobi<T: Scalar>(m: usize, x: T, count: usize, out: &mut Vec<T>) {
    if count == 0 {
        return;
    }
    let mf = T::from_usize_lossy(m);
    let two = T::lit(2.0);
    let h0 = T::one() / (two * (mf + T::one())).sqrt();
    let h1 = T::one() / (two * (mf + T::lit(3.0))).sqrt();
    let p0 = T::one() / h0;
    out.push(p0);
    if count == 1 {
        return;
    }
    let p1 = ((mf + two) * x - mf) / (two * h1);
    out.push(p1);
    let (mut prev, mut cur) = (p0, p1);
    let (mut a_prev, _) = jacobi_recurrence_coefficients::<T>(m, 0);
    for n in 1..count - 1 {
        let (a, b) = jacobi_recurrence_coefficients::<T>(m, n);
        let next = ((x - b) * cur - a_prev * prev) / a;
        out.push(next);
        prev = cur;
        cur = next;
        a_prev = a;
    }
}
