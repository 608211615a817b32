//! Fixed-size 4×4 linear algebra over any [`Real`].

use crate::error::{Error, Result};
use crate::scalar::Real;

pub type Vec4<T> = [T; 4];
pub type Mat4<T> = [[T; 4]; 4];

pub fn zeros<T: Real>() -> Mat4<T> {
    [[T::zero(); 4]; 4]
}

pub fn identity<T: Real>() -> Mat4<T> {
    let mut m = zeros();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = T::one();
    }
    m
}

pub fn minkowski<T: Real>() -> Mat4<T> {
    let mut m = identity();
    m[0][0] = -T::one();
    m
}

pub fn mat_vec<T: Real>(m: &Mat4<T>, v: &Vec4<T>) -> Vec4<T> {
    std::array::from_fn(|i| (0..4).fold(T::zero(), |acc, j| acc + m[i][j] * v[j]))
}

pub fn mat_mul<T: Real>(a: &Mat4<T>, b: &Mat4<T>) -> Mat4<T> {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..4).fold(T::zero(), |acc, k| acc + a[i][k] * b[k][j])))
}

pub fn quad_form<T: Real>(m: &Mat4<T>, u: &Vec4<T>, v: &Vec4<T>) -> T {
    let mut acc = T::zero();
    for i in 0..4 {
        for j in 0..4 {
            acc += m[i][j] * u[i] * v[j];
        }
    }
    acc
}

pub fn dot<T: Real>(u: &Vec4<T>, v: &Vec4<T>) -> T {
    (0..4).fold(T::zero(), |acc, i| acc + u[i] * v[i])
}

pub fn trace<T: Real>(m: &Mat4<T>) -> T {
    m[0][0] + m[1][1] + m[2][2] + m[3][3]
}

/// LU factorisation with partial pivoting on the primal values.
/// Returns the factors, the permutation and the permutation sign.
fn lu<T: Real>(m: &Mat4<T>) -> Result<(Mat4<T>, [usize; 4], f64)> {
    let mut a = *m;
    let mut perm = [0, 1, 2, 3];
    let mut sign = 1.0;
    let scale = m.iter().flatten().map(|v| v.re().abs()).fold(0.0, f64::max);
    for k in 0..4 {
        let p = (k..4)
            .max_by(|&i, &j| a[i][k].re().abs().total_cmp(&a[j][k].re().abs()))
            .unwrap();
        if a[p][k].re().abs() <= 1e-14 * scale.max(1e-300) {
            return Err(Error::Singular);
        }
        if p != k {
            a.swap(p, k);
            perm.swap(p, k);
            sign = -sign;
        }
        for i in k + 1..4 {
            let f = a[i][k] / a[k][k];
            a[i][k] = f;
            for j in k + 1..4 {
                let t = a[k][j];
                a[i][j] -= f * t;
            }
        }
    }
    Ok((a, perm, sign))
}

pub fn det<T: Real>(m: &Mat4<T>) -> T {
    match lu(m) {
        Ok((a, _, sign)) => (0..4).fold(T::from_f64(sign), |acc, i| acc * a[i][i]),
        Err(_) => T::zero(),
    }
}

pub fn solve<T: Real>(m: &Mat4<T>, b: &Vec4<T>) -> Result<Vec4<T>> {
    let (a, perm, _) = lu(m)?;
    Ok(lu_solve(&a, &perm, b))
}

fn lu_solve<T: Real>(a: &Mat4<T>, perm: &[usize; 4], b: &Vec4<T>) -> Vec4<T> {
    let mut y: Vec4<T> = std::array::from_fn(|i| b[perm[i]]);
    for i in 0..4 {
        for j in 0..i {
            let t = y[j];
            y[i] -= a[i][j] * t;
        }
    }
    for i in (0..4).rev() {
        for j in i + 1..4 {
            let t = y[j];
            y[i] -= a[i][j] * t;
        }
        y[i] = y[i] / a[i][i];
    }
    y
}

pub fn inverse<T: Real>(m: &Mat4<T>) -> Result<Mat4<T>> {
    let (a, perm, _) = lu(m)?;
    let mut inv = zeros();
    for j in 0..4 {
        let mut e = [T::zero(); 4];
        e[j] = T::one();
        let col = lu_solve(&a, &perm, &e);
        for i in 0..4 {
            inv[i][j] = col[i];
        }
    }
    Ok(inv)
}

/// Eigenvalues of a real symmetric 4×4 matrix (cyclic Jacobi), ascending.
pub fn symmetric_eigenvalues(m: &Mat4<f64>) -> [f64; 4] {
    let mut a = *m;
    for _sweep in 0..64 {
        let off: f64 = (0..4)
            .flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..4 {
            for q in p + 1..4 {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..4 {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..4 {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev = [a[0][0], a[1][1], a[2][2], a[3][3]];
    ev.sort_by(f64::total_cmp);
    ev
}
