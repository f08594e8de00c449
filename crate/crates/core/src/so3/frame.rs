use super::rotation::Rotation;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Minimum norm of `v1` and of the orthogonalised `v2`.
pub const FRAME_EPSILON: f64 = 1e-8;

/// Three orthonormal vectors; `e3 = e1 x e2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame<T> {
    pub e1: [T; 3],
    pub e2: [T; 3],
    pub e3: [T; 3],
}

fn dot<T: Real>(a: [T; 3], b: [T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross<T: Real>(a: [T; 3], b: [T; 3]) -> [T; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Orthonormalises `(v1, v2)` and completes the right-handed frame.
pub fn gram_schmidt_frame<T: Real>(v1: [T; 3], v2: [T; 3]) -> Result<Frame<T>> {
    let eps = T::lit(FRAME_EPSILON);
    let n1 = dot(v1, v1).sqrt();
    if !(n1 >= eps) {
        return Err(Error::DegenerateFrame(format!("|v1| = {n1} below {FRAME_EPSILON}")));
    }
    let e1 = v1.map(|v| v / n1);
    let p = dot(e1, v2);
    let w = [v2[0] - p * e1[0], v2[1] - p * e1[1], v2[2] - p * e1[2]];
    let n2 = dot(w, w).sqrt();
    if !(n2 >= eps) {
        return Err(Error::DegenerateFrame(format!(
            "v2 residual after projection {n2} below {FRAME_EPSILON}"
        )));
    }
    let e2 = w.map(|v| v / n2);
    Ok(Frame { e1, e2, e3: cross(e1, e2) })
}

impl<T: Real> Frame<T> {
    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self { e1: [o, z, z], e2: [z, o, z], e3: [z, z, o] }
    }

    /// The rotation whose columns are `e1, e2, e3`; it maps the canonical
    /// orientation onto the data orientation.
    pub fn to_rotation(&self) -> Rotation<T> {
        let (a, b, c) = (self.e1, self.e2, self.e3);
        Rotation::from_matrix_unchecked([[a[0], b[0], c[0]], [a[1], b[1], c[1]], [a[2], b[2], c[2]]])
    }

    /// Inverse of [`Frame::to_rotation`] for a frame built from a rotation.
    pub fn from_rotation(r: &Rotation<T>) -> Self {
        let m = r.matrix();
        Self {
            e1: [m[0][0], m[1][0], m[2][0]],
            e2: [m[0][1], m[1][1], m[2][1]],
            e3: [m[0][2], m[1][2], m[2][2]],
        }
    }

    pub fn rotated(&self, r: &Rotation<T>) -> Self {
        Self { e1: r.apply(self.e1), e2: r.apply(self.e2), e3: r.apply(self.e3) }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.to_rotation().max_abs_diff(&other.to_rotation())
    }
}
