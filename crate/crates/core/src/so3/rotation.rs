use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A proper rotation stored as a 3x3 orthogonal matrix (row-major).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation<T> {
    m: [[T; 3]; 3],
}

impl<T: Real> Rotation<T> {
    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self { m: [[o, z, z], [z, o, z], [z, z, o]] }
    }

    /// Validates orthogonality and `det = +1`.
    pub fn from_matrix(m: [[T; 3]; 3]) -> Result<Self> {
        let r = Self { m };
        let tol = T::validation_tolerance();
        let rtr = r.transpose().compose(&r);
        let id = Self::identity();
        for i in 0..3 {
            for j in 0..3 {
                if (rtr.m[i][j] - id.m[i][j]).abs() > tol {
                    return Err(Error::InvalidArgument(
                        "matrix is not orthogonal".to_string(),
                    ));
                }
            }
        }
        if (r.det() - T::one()).abs() > tol {
            return Err(Error::InvalidArgument("matrix has det != +1".to_string()));
        }
        Ok(r)
    }

    pub(crate) fn from_matrix_unchecked(m: [[T; 3]; 3]) -> Self {
        Self { m }
    }

    pub fn from_axis_angle(axis: [T; 3], angle: T) -> Result<Self> {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if !(n > T::zero()) {
            return Err(Error::InvalidArgument("zero rotation axis".to_string()));
        }
        let [x, y, z] = [axis[0] / n, axis[1] / n, axis[2] / n];
        let (s, c) = angle.sin_cos();
        let t = T::one() - c;
        Ok(Self {
            m: [
                [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
                [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
                [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
            ],
        })
    }

    pub fn rot_z(a: T) -> Self {
        let (s, c) = a.sin_cos();
        let (o, z) = (T::one(), T::zero());
        Self { m: [[c, -s, z], [s, c, z], [z, z, o]] }
    }

    pub fn rot_y(b: T) -> Self {
        let (s, c) = b.sin_cos();
        let (o, z) = (T::one(), T::zero());
        Self { m: [[c, z, s], [z, o, z], [-s, z, c]] }
    }

    /// `R = Rz(alpha) Ry(beta) Rz(gamma)`.
    pub fn from_euler_zyz(alpha: T, beta: T, gamma: T) -> Self {
        Self::rot_z(alpha).compose(&Self::rot_y(beta)).compose(&Self::rot_z(gamma))
    }

    /// ZYZ Euler angles `(alpha, beta, gamma)` with `beta` in `[0, pi]`.
    ///
    /// Near the poles the angle combination that stays well conditioned
    /// (`alpha + gamma` at `beta = 0`, `alpha - gamma` at `beta = pi`) is read
    /// from the upper 2x2 block and the other from the third row and column.
    pub fn to_euler_zyz(&self) -> (T, T, T) {
        let m = &self.m;
        let sb = (m[2][0] * m[2][0] + m[2][1] * m[2][1]).sqrt();
        let beta = sb.atan2(m[2][2]);
        let north = m[2][2] >= T::zero();
        let block = if north {
            (m[1][0] - m[0][1]).atan2(m[0][0] + m[1][1])
        } else {
            (-(m[1][0] + m[0][1])).atan2(m[1][1] - m[0][0])
        };
        if sb < T::lit(1e-14) {
            return (block, beta, T::zero());
        }
        let a1 = m[1][2].atan2(m[0][2]);
        let g1 = m[2][1].atan2(-m[2][0]);
        let wrap = |x: T| {
            let tau = T::lit(2.0) * T::PI();
            x - tau * ((x + T::PI()) / tau).floor()
        };
        let two = T::lit(2.0);
        if north {
            let c = wrap(block - (a1 + g1)) / two;
            (a1 + c, beta, g1 + c)
        } else {
            let c = wrap(block - (a1 - g1)) / two;
            (a1 + c, beta, g1 - c)
        }
    }

    /// Haar-uniform random rotation (normalised Gaussian quaternion).
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let q: [f64; 4] = [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ];
            let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n > 1e-8 {
                let [w, x, y, z] = [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
                let m = [
                    [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
                    [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
                    [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
                ];
                return Self { m: m.map(|row| row.map(T::lit)) };
            }
        }
    }

    pub fn matrix(&self) -> [[T; 3]; 3] {
        self.m
    }

    pub fn transpose(&self) -> Self {
        let m = &self.m;
        Self {
            m: [
                [m[0][0], m[1][0], m[2][0]],
                [m[0][1], m[1][1], m[2][1]],
                [m[0][2], m[1][2], m[2][2]],
            ],
        }
    }

    pub fn inverse(&self) -> Self {
        self.transpose()
    }

    /// Matrix product `self * other`.
    pub fn compose(&self, other: &Self) -> Self {
        let mut out = [[T::zero(); 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.m[i][k] * other.m[k][j]).sum();
            }
        }
        Self { m: out }
    }

    pub fn apply(&self, v: [T; 3]) -> [T; 3] {
        let m = &self.m;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    pub fn det(&self) -> T {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Max-abs entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        let mut d = T::zero();
        for i in 0..3 {
            for j in 0..3 {
                d = d.max((self.m[i][j] - other.m[i][j]).abs());
            }
        }
        d
    }

    /// Unit axis and angle in `[0, pi]`; the identity gives `([0, 0, 1], 0)`.
    pub fn to_axis_angle(&self) -> ([T; 3], T) {
        let m = &self.m;
        let (one, half) = (T::one(), T::lit(0.5));
        let c = ((m[0][0] + m[1][1] + m[2][2] - one) * half).max(-one).min(one);
        let angle = c.acos();
        let skew = [m[2][1] - m[1][2], m[0][2] - m[2][0], m[1][0] - m[0][1]];
        if angle < T::lit(1e-12) {
            return ([T::zero(), T::zero(), one], T::zero());
        }
        if c > T::zero() {
            let n = (skew[0] * skew[0] + skew[1] * skew[1] + skew[2] * skew[2]).sqrt();
            return (skew.map(|v| v / n), angle);
        }
        // near pi the skew part vanishes; use the symmetric part (1 - c) a a^T
        let k = (0..3).fold(0, |b, i| if m[i][i] > m[b][b] { i } else { b });
        let mut a = [T::zero(); 3];
        for (i, v) in a.iter_mut().enumerate() {
            let sym = (m[i][k] + m[k][i]) * half - if i == k { c } else { T::zero() };
            *v = sym;
        }
        let n = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
        let mut a = a.map(|v| v / n);
        if a[0] * skew[0] + a[1] * skew[1] + a[2] * skew[2] < T::zero() {
            a = a.map(|v| -v);
        }
        (a, angle)
    }

    /// Geodesic interpolation: `self` at `t = 0`, `other` at `t = 1`.
    pub fn slerp(&self, other: &Self, t: T) -> Self {
        let (axis, angle) = self.transpose().compose(other).to_axis_angle();
        let step = Self::from_axis_angle(axis, angle * t).expect("unit axis");
        self.compose(&step)
    }

    pub fn cast<U: Real>(&self) -> Rotation<U> {
        Rotation { m: self.m.map(|row| row.map(|v| U::lit(v.to_f64_lossy()))) }
    }
}

impl<T: Real> Default for Rotation<T> {
    fn default() -> Self {
        Self::identity()
    }
}
