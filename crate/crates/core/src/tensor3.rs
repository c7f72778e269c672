//! Small-tensor algebra on 3-vectors and 3×3 matrices.
//!
//! Determinants, cofactors and the `A × n` tensor are all written out through
//! the Levi-Civita symbol so that the derivative kernels used by the energy
//! gradients are literally the derivatives of the kernels used by the energies.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// Tolerance on `|n| = 1` for vectors used as unit normals.
pub const UNIT_TOL: f64 = 1e-12;

/// Tolerance on `F_S n = 0` for the tangential-map precondition of [`area_normal`].
pub const TANGENTIAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec3(pub [f64; 3]);

/// Row-major 3×3 matrix.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Mat3(pub [[f64; 3]; 3]);

/// Fourth-order array `D[i][j][k][l]`, e.g. `∂(cof A)_ij / ∂a_kl`.
pub type Tensor4 = [[[[f64; 3]; 3]; 3]; 3];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TensorError {
    #[error("vector {0:?} is not a unit normal (|n| = {1})")]
    NotUnit([f64; 3], f64),
    #[error("surface map does not annihilate the normal: |F_S n| = {0}")]
    NotTangential(f64),
}

/// Levi-Civita symbol ε_ijk on indices 0..3.
#[inline]
pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

// Nonzero entries of ε as (i, j, k, sign); the contractions below only loop
// over these six.
const EPS: [(usize, usize, usize, f64); 6] = [
    (0, 1, 2, 1.0),
    (1, 2, 0, 1.0),
    (2, 0, 1, 1.0),
    (0, 2, 1, -1.0),
    (2, 1, 0, -1.0),
    (1, 0, 2, -1.0),
];

impl Vec3 {
    pub const ZERO: Vec3 = Vec3([0.0; 3]);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3([x, y, z])
    }

    pub fn axis(i: usize) -> Self {
        let mut v = [0.0; 3];
        v[i] = 1.0;
        Vec3(v)
    }

    pub fn dot(&self, o: &Vec3) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    pub fn cross(&self, o: &Vec3) -> Vec3 {
        let [a, b, c] = self.0;
        let [x, y, z] = o.0;
        Vec3([b * z - c * y, c * x - a * z, a * y - b * x])
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn scale(&self, s: f64) -> Vec3 {
        Vec3(self.0.map(|x| x * s))
    }

    pub fn normalized(&self) -> Vec3 {
        self.scale(1.0 / self.norm())
    }

    /// Outer product `a ⊗ b`.
    pub fn outer(&self, o: &Vec3) -> Mat3 {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = self.0[i] * o.0[j];
            }
        }
        Mat3(m)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

impl Mat3 {
    pub const ZERO: Mat3 = Mat3([[0.0; 3]; 3]);
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn diag(a: f64, b: f64, c: f64) -> Self {
        Mat3([[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]])
    }

    pub fn from_cols(c0: Vec3, c1: Vec3, c2: Vec3) -> Self {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            m[i] = [c0.0[i], c1.0[i], c2.0[i]];
        }
        Mat3(m)
    }

    pub fn col(&self, j: usize) -> Vec3 {
        Vec3([self.0[0][j], self.0[1][j], self.0[2][j]])
    }

    pub fn row(&self, i: usize) -> Vec3 {
        Vec3(self.0[i])
    }

    pub fn transpose(&self) -> Mat3 {
        let a = &self.0;
        Mat3([
            [a[0][0], a[1][0], a[2][0]],
            [a[0][1], a[1][1], a[2][1]],
            [a[0][2], a[1][2], a[2][2]],
        ])
    }

    pub fn scale(&self, s: f64) -> Mat3 {
        Mat3(self.0.map(|r| r.map(|x| x * s)))
    }

    pub fn mul_vec(&self, v: &Vec3) -> Vec3 {
        Vec3([self.row(0).dot(v), self.row(1).dot(v), self.row(2).dot(v)])
    }

    /// Frobenius product `A : B = a_ij b_ij`.
    pub fn ddot(&self, o: &Mat3) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += self.0[i][j] * o.0[i][j];
            }
        }
        s
    }

    pub fn norm_squared(&self) -> f64 {
        self.ddot(self)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Inverse through the cofactor, `A⁻¹ = cof(A)ᵀ / det A`. `None` when singular.
    pub fn inverse(&self) -> Option<Mat3> {
        let d = det(self);
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(cof(self).transpose().scale(1.0 / d))
    }
}

impl Index<(usize, usize)> for Mat3 {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for Mat3 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.0[i][j]
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vec3 {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

macro_rules! elementwise_ops {
    ($t:ty) => {
        impl Add for $t {
            type Output = $t;
            fn add(mut self, o: $t) -> $t {
                self += o;
                self
            }
        }
        impl Sub for $t {
            type Output = $t;
            fn sub(mut self, o: $t) -> $t {
                self -= o;
                self
            }
        }
        impl Neg for $t {
            type Output = $t;
            fn neg(self) -> $t {
                self.scale(-1.0)
            }
        }
        impl Mul<f64> for $t {
            type Output = $t;
            fn mul(self, s: f64) -> $t {
                self.scale(s)
            }
        }
    };
}

elementwise_ops!(Vec3);
elementwise_ops!(Mat3);

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        for i in 0..3 {
            self.0[i] += o.0[i];
        }
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, o: Vec3) {
        for i in 0..3 {
            self.0[i] -= o.0[i];
        }
    }
}

impl AddAssign for Mat3 {
    fn add_assign(&mut self, o: Mat3) {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] += o.0[i][j];
            }
        }
    }
}

impl SubAssign for Mat3 {
    fn sub_assign(&mut self, o: Mat3) {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] -= o.0[i][j];
            }
        }
    }
}

impl Mul for Mat3 {
    type Output = Mat3;
    fn mul(self, o: Mat3) -> Mat3 {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = (0..3).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        Mat3(m)
    }
}

impl Mul<Vec3> for Mat3 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        self.mul_vec(&v)
    }
}

/// `det A = ε_ijk a_0i a_1j a_2k`.
pub fn det(a: &Mat3) -> f64 {
    let m = &a.0;
    EPS.iter()
        .map(|&(i, j, k, s)| s * m[0][i] * m[1][j] * m[2][k])
        .sum()
}

/// `cof A = ½ ε_ikl ε_jpq a_kp a_lq`, so that `cof(A)ᵀ A = det(A) Id`.
pub fn cof(a: &Mat3) -> Mat3 {
    let m = &a.0;
    let mut c = [[0.0; 3]; 3];
    for &(i, k, l, s1) in &EPS {
        for &(j, p, q, s2) in &EPS {
            c[i][j] += 0.5 * s1 * s2 * m[k][p] * m[l][q];
        }
    }
    Mat3(c)
}

/// The tensor `A × n` defined by `(A × n) b = A (n × b)`;
/// entries `(A × n)_kj = ε_lij a_kl n_i`.
pub fn cross_tensor(a: &Mat3, n: &Vec3) -> Mat3 {
    let mut m = [[0.0; 3]; 3];
    for &(l, i, j, s) in &EPS {
        for k in 0..3 {
            m[k][j] += s * a.0[k][l] * n.0[i];
        }
    }
    Mat3(m)
}

/// `D[i][j][k][l] = ∂(cof A)_ij / ∂a_kl = ε_ikq ε_jlp a_qp`.
pub fn cof_derivative(a: &Mat3) -> Tensor4 {
    let mut d = [[[[0.0; 3]; 3]; 3]; 3];
    for &(i, k, q, s1) in &EPS {
        for &(j, l, p, s2) in &EPS {
            d[i][j][k][l] += s1 * s2 * a.0[q][p];
        }
    }
    d
}

/// Contract a fourth-order derivative with a matrix on its first index pair:
/// `(G : D)_kl = Σ_ij g_ij D[i][j][k][l]`.
pub fn contract_first(g: &Mat3, d: &Tensor4) -> Mat3 {
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let gij = g.0[i][j];
            if gij == 0.0 {
                continue;
            }
            for (k, row) in m.iter_mut().enumerate() {
                for (l, e) in row.iter_mut().enumerate() {
                    *e += gij * d[i][j][k][l];
                }
            }
        }
    }
    Mat3(m)
}

/// Contract on the last index pair: `(D : B)_ij = Σ_kl D[i][j][k][l] b_kl`.
pub fn contract_last(d: &Tensor4, b: &Mat3) -> Mat3 {
    let mut m = [[0.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            *e = Mat3(d[i][j]).ddot(b);
        }
    }
    Mat3(m)
}

fn check_unit(n: &Vec3) -> Result<(), TensorError> {
    let len = n.norm();
    if (len - 1.0).abs() > UNIT_TOL || !len.is_finite() {
        return Err(TensorError::NotUnit(n.0, len));
    }
    Ok(())
}

/// Surface gradient `F (Id − n ⊗ n)`.
pub fn surface_projection(f: &Mat3, n: &Vec3) -> Result<Mat3, TensorError> {
    check_unit(n)?;
    Ok(*f * (Mat3::IDENTITY - n.outer(n)))
}

/// Right-handed orthonormal tangent frame `(t1, t2)` with `t1 × t2 = n`.
///
/// `t1` is the normalized projection of the coordinate axis least aligned with
/// `n` (ties resolved toward the lower axis index) and `t2 = n × t1`.
pub fn tangent_frame(n: &Vec3) -> (Vec3, Vec3) {
    let mut axis = 0;
    for i in 1..3 {
        if n.0[i].abs() < n.0[axis].abs() {
            axis = i;
        }
    }
    let e = Vec3::axis(axis);
    let t1 = (e - n.scale(n.dot(&e))).normalized();
    let t2 = n.cross(&t1);
    (t1, t2)
}

/// Deformed area normal `(F_S t1) × (F_S t2)` of a tangential map `F_S`.
pub fn area_normal(fs: &Mat3, n: &Vec3) -> Result<Vec3, TensorError> {
    check_unit(n)?;
    let leak = fs.mul_vec(n).norm();
    if leak > TANGENTIAL_TOL * (1.0 + fs.norm()) {
        return Err(TensorError::NotTangential(leak));
    }
    let (t1, t2) = tangent_frame(n);
    Ok(fs.mul_vec(&t1).cross(&fs.mul_vec(&t2)))
}

/// The 15-component interface argument `(n, F × n, cof F n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceVector {
    pub n: Vec3,
    pub h: Mat3,
    pub c: Vec3,
}

impl InterfaceVector {
    /// Build `(n, F_S × n, cof(F_S) n)` from a surface gradient.
    pub fn from_surface_gradient(fs: &Mat3, n: &Vec3) -> Self {
        InterfaceVector {
            n: *n,
            h: cross_tensor(fs, n),
            c: cof(fs).mul_vec(n),
        }
    }

    /// Flat view: `n` first, then `H` row-major, then `c`.
    pub fn flat(&self) -> [f64; 15] {
        let mut out = [0.0; 15];
        out[..3].copy_from_slice(&self.n.0);
        for i in 0..3 {
            out[3 + 3 * i..6 + 3 * i].copy_from_slice(&self.h.0[i]);
        }
        out[12..].copy_from_slice(&self.c.0);
        out
    }

    pub fn norm(&self) -> f64 {
        (self.n.norm_squared() + self.h.norm_squared() + self.c.norm_squared()).sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        InterfaceVector {
            n: self.n.scale(s),
            h: self.h.scale(s),
            c: self.c.scale(s),
        }
    }
}
