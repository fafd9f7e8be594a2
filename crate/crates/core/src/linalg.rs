//! Small dense linear algebra on fixed-size arrays.
//!
//! Everything here is sized for the third-order problems this crate deals
//! with; there is no attempt at blocking or pivot-growth control beyond
//! partial pivoting.

use crate::scalar::Scalar;

pub type Vec3<T> = [T; 3];
pub type Mat3<T> = [[T; 3]; 3];

pub fn identity<T: Scalar>() -> Mat3<T> {
    let mut m = [[T::zero(); 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = T::one();
    }
    m
}

pub fn diag<T: Scalar>(d: Vec3<T>) -> Mat3<T> {
    let mut m = [[T::zero(); 3]; 3];
    for i in 0..3 {
        m[i][i] = d[i];
    }
    m
}

pub fn transpose<T: Scalar>(a: &Mat3<T>) -> Mat3<T> {
    let mut t = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = a[j][i];
        }
    }
    t
}

pub fn matmul<T: Scalar>(a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut c = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = T::zero();
            for k in 0..3 {
                acc = acc + a[i][k] * b[k][j];
            }
            c[i][j] = acc;
        }
    }
    c
}

pub fn matvec<T: Scalar>(a: &Mat3<T>, x: &Vec3<T>) -> Vec3<T> {
    let mut y = [T::zero(); 3];
    for i in 0..3 {
        y[i] = a[i][0] * x[0] + a[i][1] * x[1] + a[i][2] * x[2];
    }
    y
}

pub fn add<T: Scalar>(a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut c = *a;
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = c[i][j] + b[i][j];
        }
    }
    c
}

pub fn scale<T: Scalar>(a: &Mat3<T>, s: T) -> Mat3<T> {
    let mut c = *a;
    for row in c.iter_mut() {
        for v in row.iter_mut() {
            *v = *v * s;
        }
    }
    c
}

/// Max-abs-row-sum norm.
pub fn norm_inf<T: Scalar>(a: &Mat3<T>) -> T {
    a.iter()
        .map(|row| row.iter().fold(T::zero(), |s, v| s + v.abs()))
        .fold(T::zero(), T::max)
}

pub fn norm2_vec<T: Scalar>(x: &[T]) -> T {
    x.iter().fold(T::zero(), |s, v| s + *v * *v).sqrt()
}

pub fn is_symmetric<T: Scalar>(a: &Mat3<T>, tol: T) -> bool {
    (0..3).all(|i| (0..3).all(|j| (a[i][j] - a[j][i]).abs() <= tol))
}

/// Solves `A x = b` in place by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot falls below `tiny` relative to the matrix scale.
pub fn solve_dense<T: Scalar>(a: &mut [Vec<T>], b: &mut [T]) -> Option<Vec<T>> {
    let n = b.len();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(T::zero(), |m, v| m.max(v.abs()));
    if scale == T::zero() {
        return None;
    }
    let tiny = scale * T::epsilon() * T::of_usize(n);
    for col in 0..n {
        let (piv, pmax) = (col..n)
            .map(|r| (r, a[r][col].abs()))
            .fold((col, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pmax <= tiny {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f == T::zero() {
                continue;
            }
            for c in col..n {
                let v = a[col][c];
                a[r][c] = a[r][c] - f * v;
            }
            b[r] = b[r] - f * b[col];
        }
    }
    let mut x = vec![T::zero(); n];
    for r in (0..n).rev() {
        let mut acc = b[r];
        for c in r + 1..n {
            acc = acc - a[r][c] * x[c];
        }
        x[r] = acc / a[r][r];
    }
    Some(x)
}

/// Lower-triangular Cholesky factor; `None` if the matrix is not positive definite.
pub fn cholesky<T: Scalar>(a: &Mat3<T>) -> Option<Mat3<T>> {
    let mut l = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s = s - l[i][k] * l[j][k];
            }
            if i == j {
                if s <= T::zero() {
                    return None;
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn sym_eigenvalues<T: Scalar>(a: &Mat3<T>) -> Vec3<T> {
    let mut m = *a;
    let two = T::lit(2.0);
    for _sweep in 0..64 {
        let off = (m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2]).sqrt();
        let diag_scale = m[0][0].abs() + m[1][1].abs() + m[2][2].abs();
        if off <= T::epsilon() * diag_scale.max(T::min_positive_value()) {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            if m[p][q] == T::zero() {
                continue;
            }
            let theta = (m[q][q] - m[p][p]) / (two * m[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
            let c = T::one() / (t * t + T::one()).sqrt();
            let s = t * c;
            let mut r = identity::<T>();
            r[p][p] = c;
            r[q][q] = c;
            r[p][q] = s;
            r[q][p] = -s;
            m = matmul(&transpose(&r), &matmul(&m, &r));
            m[p][q] = T::zero();
            m[q][p] = T::zero();
        }
    }
    let mut ev = [m[0][0], m[1][1], m[2][2]];
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

/// Coefficients `[c2, c1, c0]` of the monic characteristic polynomial
/// `s³ + c2 s² + c1 s + c0` of `a`.
pub fn char_poly<T: Scalar>(a: &Mat3<T>) -> Vec3<T> {
    let tr = a[0][0] + a[1][1] + a[2][2];
    let minors = a[0][0] * a[1][1] - a[0][1] * a[1][0] + a[0][0] * a[2][2] - a[0][2] * a[2][0]
        + a[1][1] * a[2][2]
        - a[1][2] * a[2][1];
    [-tr, minors, -det(a)]
}

pub fn det<T: Scalar>(a: &Mat3<T>) -> T {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// Routh–Hurwitz test for `s³ + c2 s² + c1 s + c0`: all roots strictly in
/// the open left half-plane.
pub fn cubic_is_hurwitz<T: Scalar>(c: Vec3<T>) -> bool {
    let [c2, c1, c0] = c;
    c2 > T::zero() && c1 > T::zero() && c0 > T::zero() && c2 * c1 > c0
}

pub fn is_hurwitz<T: Scalar>(a: &Mat3<T>) -> bool {
    cubic_is_hurwitz(char_poly(a))
}

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
pub fn expm<T: Scalar>(a: &Mat3<T>) -> Mat3<T> {
    let norm = norm_inf(a);
    let mut squarings = 0u32;
    let mut s = T::one();
    while norm * s > T::lit(0.25) {
        s = s * T::lit(0.5);
        squarings += 1;
    }
    let x = scale(a, s);
    let mut term = identity::<T>();
    let mut sum = identity::<T>();
    for k in 1..=18 {
        term = scale(&matmul(&term, &x), T::one() / T::of_usize(k));
        sum = add(&sum, &term);
    }
    for _ in 0..squarings {
        sum = matmul(&sum, &sum);
    }
    sum
}
