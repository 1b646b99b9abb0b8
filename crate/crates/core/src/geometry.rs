//! Rotation algebra on SO(3), torsion angles and rigid superposition.
//!
//! Angles are canonicalized to `[0, 2π)`. Dihedral signs follow the IUPAC
//! convention: looking along p2→p3, a clockwise rotation of the near bond onto
//! the far bond is positive.

use std::f64::consts::{PI, TAU};
use std::ops::Mul;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Trace threshold below which `log_so3` switches to eigenvector extraction.
const NEAR_PI_TRACE: f64 = -1.0 + 1e-6;

/// A proper rotation matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Matrix3<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Matrix3::identity())
    }

    /// Wraps a matrix that is already a rotation within `tol` (orthonormality
    /// in Frobenius norm and determinant).
    pub fn try_from_matrix(m: Matrix3<f64>, tol: f64) -> Result<Self> {
        let r = Rotation(m);
        if r.is_valid(tol) {
            Ok(r)
        } else {
            Err(Error::InvalidParameter("matrix is not a proper rotation".into()))
        }
    }

    pub fn from_row_major(v: &[f64; 9], tol: f64) -> Result<Self> {
        Self::try_from_matrix(Matrix3::from_row_slice(v), tol)
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        let m = &self.0;
        [
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 0)],
            m[(1, 1)],
            m[(1, 2)],
            m[(2, 0)],
            m[(2, 1)],
            m[(2, 2)],
        ]
    }

    /// Rotation whose columns are the given orthonormal axes.
    pub(crate) fn from_columns_unchecked(e1: Vec3, e2: Vec3, e3: Vec3) -> Self {
        Rotation(Matrix3::from_columns(&[e1, e2, e3]))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Rotation(self.0.transpose())
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    /// Rotation angle of `selfᵀ·other`, in `[0, π]`.
    pub fn geodesic(&self, other: &Rotation) -> f64 {
        log_so3(&(self.transpose() * *other)).0.norm()
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        let m = &self.0;
        m.iter().all(|x| x.is_finite())
            && (m.transpose() * m - Matrix3::identity()).norm() <= tol
            && (m.determinant() - 1.0).abs() <= tol
    }
}

impl Mul for Rotation {
    type Output = Rotation;

    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

/// Tangent-space element of SO(3): axis times angle, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngleVector(pub Vec3);

impl AxisAngleVector {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        AxisAngleVector(Vec3::new(x, y, z))
    }

    pub fn angle(&self) -> f64 {
        self.0.norm()
    }
}

fn hat(w: &Vec3) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

fn vee_antisymmetric(m: &Matrix3<f64>) -> Vec3 {
    Vec3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)])
}

/// Rodrigues' formula.
pub fn exp_so3(omega: &AxisAngleVector) -> Rotation {
    let w = &omega.0;
    let theta2 = w.norm_squared();
    let theta = theta2.sqrt();
    // sin θ/θ and (1 − cos θ)/θ², with series near zero
    let (a, b) = if theta < 1e-6 {
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    let k = hat(w);
    Rotation(Matrix3::identity() + k * a + k * k * b)
}

/// Principal logarithm; the returned angle lies in `[0, π]`.
pub fn log_so3(r: &Rotation) -> AxisAngleVector {
    let m = &r.0;
    let tr = m.trace();
    let v = vee_antisymmetric(m);
    let sin_theta = 0.5 * v.norm();
    let cos_theta = (0.5 * (tr - 1.0)).clamp(-1.0, 1.0);
    let theta = sin_theta.atan2(cos_theta);

    if tr < NEAR_PI_TRACE {
        // (R + Rᵀ)/2 = cos θ·I + (1 − cos θ)·nnᵀ; n is the eigenvector of the
        // largest eigenvalue.
        let sym = (m + m.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let idx = eig.eigenvalues.imax();
        let mut axis: Vec3 = eig.eigenvectors.column(idx).into_owned();
        axis.normalize_mut();
        if axis.dot(&v) < 0.0 {
            axis = -axis;
        }
        return AxisAngleVector(axis * theta);
    }

    let scale = if theta < 1e-6 {
        0.5 * (1.0 + theta * theta / 6.0)
    } else {
        0.5 * theta / theta.sin()
    };
    AxisAngleVector(v * scale)
}

/// Nearest rotation in Frobenius norm, via SVD with a determinant sign fix.
pub fn proj_so3(z: &Matrix3<f64>) -> Result<Rotation> {
    if !z.iter().all(|x| x.is_finite()) {
        return Err(Error::DegenerateProjection);
    }
    let svd = z.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::DegenerateProjection),
    };
    let s = svd.singular_values;
    let smax = s.max();
    let (imin, smin) = s.argmin();
    if smax <= 0.0 || smin <= 1e-12 * smax {
        return Err(Error::DegenerateProjection);
    }
    let mut d = Matrix3::identity();
    d[(imin, imin)] = (u * v_t).determinant().signum();
    let r = u * d * v_t;
    Ok(Rotation(r))
}

/// Maps any real angle into `[0, 2π)`.
pub fn canonical_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Minimal circular distance between two angles, in `[0, π]`.
pub fn wrapped_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Signed torsion about the p2–p3 axis, canonicalized to `[0, 2π)`.
pub fn dihedral(p1: &Vec3, p2: &Vec3, p3: &Vec3, p4: &Vec3) -> Result<f64> {
    let b1 = p2 - p1;
    let b2 = p3 - p2;
    let b3 = p4 - p3;
    let n1 = b1.cross(&b2);
    let n2 = b2.cross(&b3);
    let b2_len = b2.norm();
    let eps = 1e-10;
    if b2_len < eps || n1.norm() < eps * b1.norm() * b2_len || n2.norm() < eps * b2_len * b3.norm() {
        return Err(Error::UndefinedDihedral);
    }
    let y = b2_len * b1.dot(&n2);
    let x = n1.dot(&n2);
    Ok(canonical_angle(y.atan2(x)))
}

fn centroid(points: &[Vec3]) -> Vec3 {
    points.iter().sum::<Vec3>() / points.len() as f64
}

/// RMSD after optimal rigid superposition of `b` onto `a`.
pub fn kabsch_rmsd(a: &[Vec3], b: &[Vec3]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::Empty("kabsch_rmsd point sets"));
    }
    let ca = centroid(a);
    let cb = centroid(b);
    let mut h = Matrix3::zeros();
    for (pa, pb) in a.iter().zip(b) {
        h += (pa - ca) * (pb - cb).transpose();
    }
    // Cross-covariance may be rank deficient (collinear or tiny clouds); any
    // rotation is then optimal within the null directions, so fall back to a
    // sign-fixed SVD without the rank check.
    let svd = h.svd(true, true);
    let rot = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => {
            let (imin, _) = svd.singular_values.argmin();
            let mut d = Matrix3::identity();
            d[(imin, imin)] = (u * v_t).determinant().signum();
            if d[(imin, imin)] == 0.0 {
                d[(imin, imin)] = 1.0;
            }
            u * d * v_t
        }
        _ => Matrix3::identity(),
    };
    let sum_sq: f64 = a
        .iter()
        .zip(b)
        .map(|(pa, pb)| ((pa - ca) - rot * (pb - cb)).norm_squared())
        .sum();
    Ok((sum_sq / a.len() as f64).sqrt())
}

/// Plain RMSD without superposition.
pub fn rmsd(a: &[Vec3], b: &[Vec3]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::Empty("rmsd point sets"));
    }
    let s: f64 = a.iter().zip(b).map(|(p, q)| (p - q).norm_squared()).sum();
    Ok((s / a.len() as f64).sqrt())
}

/// Rotation from a unit quaternion `(w, x, y, z)`.
fn rotation_from_unit_quaternion(w: f64, x: f64, y: f64, z: f64) -> Rotation {
    Rotation(Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    ))
}

/// Haar-uniform unit quaternion as four normalized standard normals.
pub(crate) fn uniform_quaternion<R: Rng + ?Sized>(rng: &mut R) -> [f64; 4] {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n2: f64 = q.iter().map(|x| x * x).sum();
        if n2 > 1e-12 {
            let n = n2.sqrt();
            return q.map(|x| x / n);
        }
    }
}

pub(crate) fn quaternion_to_rotation(q: [f64; 4]) -> Rotation {
    rotation_from_unit_quaternion(q[0], q[1], q[2], q[3])
}

/// Haar-uniform random rotation.
pub fn sample_uniform_so3<R: Rng + ?Sized>(rng: &mut R) -> Rotation {
    quaternion_to_rotation(uniform_quaternion(rng))
}

/// Density of the rotation angle of a Haar-uniform rotation on `[0, π]`.
pub fn haar_angle_density(theta: f64) -> f64 {
    if (0.0..=PI).contains(&theta) {
        (1.0 - theta.cos()) / PI
    } else {
        0.0
    }
}
