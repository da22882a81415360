use super::ImagingError;

const SINGULAR_EPS: f64 = 1e-12;

/// 2-D affine transform in pixel units, mapping *output* coordinates (u, v)
/// to *source* coordinates:
///
/// ```text
/// x = a*u + b*v + tx
/// y = c*u + d*v + ty
/// ```
///
/// Pull semantics: resampling evaluates the source at `t(u, v)` for every
/// output pixel, so the transform you hand to [`resample`](super::resample)
/// is the inverse of the motion you want to apply to the image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineTransform2D {
    pub a: f64,
    pub b: f64,
    pub tx: f64,
    pub c: f64,
    pub d: f64,
    pub ty: f64,
}

impl AffineTransform2D {
    pub fn new(a: f64, b: f64, tx: f64, c: f64, d: f64, ty: f64) -> Result<Self, ImagingError> {
        let t = Self { a, b, tx, c, d, ty };
        if ![a, b, tx, c, d, ty].iter().all(|v| v.is_finite()) {
            return Err(ImagingError::NonFiniteTransform);
        }
        if t.determinant().abs() < SINGULAR_EPS {
            return Err(ImagingError::SingularTransform {
                det_abs: t.determinant().abs(),
            });
        }
        Ok(t)
    }

    pub fn identity() -> Self {
        Self {
            a: 1.0,
            b: 0.0,
            tx: 0.0,
            c: 0.0,
            d: 1.0,
            ty: 0.0,
        }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Self {
            tx,
            ty,
            ..Self::identity()
        }
    }

    /// Uniform scale about the origin: output coordinates are `scale` times
    /// smaller than source ones (x = scale * u).
    pub fn scale(scale_x: f64, scale_y: f64) -> Result<Self, ImagingError> {
        Self::new(scale_x, 0.0, 0.0, 0.0, scale_y, 0.0)
    }

    /// Similarity transform: rotate by `angle_rad` and scale by `scale`
    /// around `(pivot_u, pivot_v)` in the output frame, landing on
    /// `(center_x, center_y)` in the source frame.
    pub fn similarity(
        scale: f64,
        angle_rad: f64,
        pivot_u: f64,
        pivot_v: f64,
        center_x: f64,
        center_y: f64,
    ) -> Result<Self, ImagingError> {
        let (sin, cos) = angle_rad.sin_cos();
        let a = scale * cos;
        let b = -scale * sin;
        let c = scale * sin;
        let d = scale * cos;
        let tx = center_x - (a * pivot_u + b * pivot_v);
        let ty = center_y - (c * pivot_u + d * pivot_v);
        Self::new(a, b, tx, c, d, ty)
    }

    pub fn determinant(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    #[inline]
    pub fn apply(&self, u: f64, v: f64) -> (f64, f64) {
        (
            self.a * u + self.b * v + self.tx,
            self.c * u + self.d * v + self.ty,
        )
    }

    /// Inverse transform; composing the two maps any point to itself within
    /// 1e-9 for well-conditioned transforms.
    pub fn invert(&self) -> Result<Self, ImagingError> {
        let det = self.determinant();
        if det.abs() < SINGULAR_EPS {
            return Err(ImagingError::SingularTransform {
                det_abs: det.abs(),
            });
        }
        let a = self.d / det;
        let b = -self.b / det;
        let c = -self.c / det;
        let d = self.a / det;
        let tx = (self.b * self.ty - self.d * self.tx) / det;
        let ty = (self.c * self.tx - self.a * self.ty) / det;
        Ok(Self { a, b, tx, c, d, ty })
    }

    /// `self` after `other`: returns the transform mapping (u,v) through
    /// `other` first, then `self`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            tx: self.a * other.tx + self.b * other.ty + self.tx,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
            ty: self.c * other.tx + self.d * other.ty + self.ty,
        }
    }
}
