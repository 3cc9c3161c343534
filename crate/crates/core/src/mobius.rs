//! Real Möbius transformations acting on the extended real line.
//!
//! A [`MobiusTransform`] is stored as a unit-determinant 2×2 matrix. Every
//! constructor renormalizes by `sqrt(det)`; compositions do so whenever the
//! computed determinant is off by more than its own rounding error, so products
//! of hundreds of generators keep `ad - bc = 1` to rounding.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this modulus of `cx + d` a point is treated as the pole.
pub const POLE_TOL: f64 = 1e-14;

/// Number of equispaced samples used by [`verify_decomposition`].
pub const DECOMPOSITION_SAMPLES: usize = 128;

/// A point of `ℝ ∪ {∞}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    Infinity,
}

impl ExtendedReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(x) => Some(x),
            ExtendedReal::Infinity => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ExtendedReal::Infinity)
    }

    /// `num / den` with `x / 0 = ∞` (including `0 / 0`, which only arises for
    /// singular matrices and is excluded by construction).
    fn ratio(num: f64, den: f64) -> Self {
        if den == 0.0 {
            ExtendedReal::Infinity
        } else {
            let q = num / den;
            if q.is_finite() {
                ExtendedReal::Finite(q)
            } else {
                ExtendedReal::Infinity
            }
        }
    }
}

impl From<f64> for ExtendedReal {
    fn from(x: f64) -> Self {
        if x.is_finite() {
            ExtendedReal::Finite(x)
        } else {
            ExtendedReal::Infinity
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(x) => write!(f, "{x}"),
            ExtendedReal::Infinity => write!(f, "∞"),
        }
    }
}

/// A closed bounded interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::Domain(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn centered(center: f64, half_width: f64) -> Result<Self> {
        Interval::new(center - half_width, center + half_width)
    }

    pub fn size(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Euclidean distance between the two sets (0 when they meet).
    pub fn distance(&self, other: &Interval) -> f64 {
        if self.intersects(other) {
            0.0
        } else if self.hi < other.lo {
            other.lo - self.hi
        } else {
            self.lo - other.hi
        }
    }

    pub fn thicken(&self, r: f64) -> Interval {
        Interval {
            lo: self.lo - r,
            hi: self.hi + r,
        }
    }

    /// `n >= 2` equispaced points from `lo` to `hi` inclusive.
    pub fn samples(&self, n: usize) -> impl Iterator<Item = f64> + '_ {
        let n = n.max(2);
        let step = self.size() / (n - 1) as f64;
        (0..n).map(move |i| if i + 1 == n { self.hi } else { self.lo + step * i as f64 })
    }
}

/// `x ↦ (ax + b) / (cx + d)` with `ad - bc = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobiusTransform {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Default for MobiusTransform {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl MobiusTransform {
    pub const IDENTITY: MobiusTransform = MobiusTransform {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    /// Builds the transform from matrix entries, rescaling to unit determinant.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if !(det > 0.0 && det.is_finite()) {
            return Err(Error::Domain(format!(
                "matrix [[{a}, {b}], [{c}, {d}]] has non-positive determinant {det}"
            )));
        }
        Ok(Self::scaled(a, b, c, d, det))
    }

    fn scaled(a: f64, b: f64, c: f64, d: f64, det: f64) -> Self {
        let s = det.sqrt().recip();
        MobiusTransform {
            a: a * s,
            b: b * s,
            c: c * s,
            d: d * s,
        }
    }

    pub fn from_rows(m: [[f64; 2]; 2]) -> Result<Self> {
        Self::new(m[0][0], m[0][1], m[1][0], m[1][1])
    }

    pub fn rows(&self) -> [[f64; 2]; 2] {
        [[self.a, self.b], [self.c, self.d]]
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn is_affine(&self) -> bool {
        self.c == 0.0
    }

    /// Matrix product `self · other`, i.e. the map `x ↦ self(other(x))`.
    pub fn compose(&self, other: &MobiusTransform) -> MobiusTransform {
        let a = self.a * other.a + self.b * other.c;
        let b = self.a * other.b + self.b * other.d;
        let c = self.c * other.a + self.d * other.c;
        let d = self.c * other.b + self.d * other.d;
        let det = a * d - b * c;
        // For large entries the computed determinant is dominated by rounding;
        // rescaling by it would inject that error into every entry.
        let noise = 8.0 * f64::EPSILON * ((a * d).abs() + (b * c).abs());
        if det > 0.0 && (det - 1.0).abs() > noise {
            Self::scaled(a, b, c, d, det)
        } else {
            MobiusTransform { a, b, c, d }
        }
    }

    pub fn inverse(&self) -> MobiusTransform {
        MobiusTransform {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    /// The point `γ⁻¹(∞) = -d/c` sent to infinity.
    pub fn pole(&self) -> ExtendedReal {
        ExtendedReal::ratio(-self.d, self.c)
    }

    /// `γ(∞) = a/c`.
    pub fn image_of_infinity(&self) -> ExtendedReal {
        ExtendedReal::ratio(self.a, self.c)
    }

    pub fn apply(&self, x: ExtendedReal) -> ExtendedReal {
        match x {
            ExtendedReal::Infinity => self.image_of_infinity(),
            ExtendedReal::Finite(x) => {
                ExtendedReal::ratio(self.a * x + self.b, self.c * x + self.d)
            }
        }
    }

    /// Image of a finite point; `None` at the pole.
    pub fn apply_real(&self, x: f64) -> Option<f64> {
        self.apply(ExtendedReal::Finite(x)).finite()
    }

    fn denominator(&self, x: f64) -> Result<f64> {
        let den = self.c * x + self.d;
        if den.abs() < POLE_TOL {
            Err(Error::Pole(den.abs()))
        } else {
            Ok(den)
        }
    }

    /// `γ'(x) = 1 / (cx + d)²`.
    pub fn derivative(&self, x: f64) -> Result<f64> {
        let den = self.denominator(x)?;
        Ok((den * den).recip())
    }

    /// Derivative as a map of the ball model:
    /// `(1 + x²) / (1 + γ(x)²) · γ'(x)`.
    pub fn ball_derivative(&self, x: f64) -> Result<f64> {
        let den = self.denominator(x)?;
        let y = (self.a * x + self.b) / den;
        Ok((1.0 + x * x) / ((1.0 + y * y) * den * den))
    }

    /// Image of an interval avoiding the pole. The size is computed from
    /// `γ(x) - γ(y) = (x - y) / ((cx + d)(cy + d))`, which avoids cancellation
    /// for strongly contracting maps.
    pub fn image_interval(&self, iv: &Interval) -> Result<Interval> {
        let d0 = self.c * iv.lo + self.d;
        let d1 = self.c * iv.hi + self.d;
        if d0.abs() < POLE_TOL || d1.abs() < POLE_TOL || d0.signum() != d1.signum() {
            return Err(self.pole_error(iv));
        }
        let lo = (self.a * iv.lo + self.b) / d0;
        let size = iv.size() / (d0 * d1);
        Ok(Interval { lo, hi: lo + size })
    }

    fn pole_error(&self, iv: &Interval) -> Error {
        Error::PoleInInterval {
            pole: self.pole().finite().unwrap_or(f64::INFINITY),
            lo: iv.lo,
            hi: iv.hi,
        }
    }

    /// Largest entrywise difference.
    pub fn max_entry_diff(&self, other: &MobiusTransform) -> f64 {
        [
            self.a - other.a,
            self.b - other.b,
            self.c - other.c,
            self.d - other.d,
        ]
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Entrywise distance in `PSL(2,ℝ)`, i.e. minimized over the sign of the matrix.
    pub fn projective_diff(&self, other: &MobiusTransform) -> f64 {
        let neg = MobiusTransform {
            a: -other.a,
            b: -other.b,
            c: -other.c,
            d: -other.d,
        };
        self.max_entry_diff(other).min(self.max_entry_diff(&neg))
    }
}

/// Distortion factor `α(γ, I) = log((p - x₁) / (p - x₀))` with `p = γ⁻¹(∞)`
/// and `I = [x₀, x₁]`; zero when `γ` is affine.
pub fn distortion_factor(g: &MobiusTransform, iv: &Interval) -> Result<f64> {
    match g.pole() {
        ExtendedReal::Infinity => Ok(0.0),
        ExtendedReal::Finite(p) => {
            if iv.contains(p) {
                return Err(Error::PoleInInterval {
                    pole: p,
                    lo: iv.lo,
                    hi: iv.hi,
                });
            }
            Ok(((p - iv.hi) / (p - iv.lo)).ln())
        }
    }
}

/// The affine map sending `[0, 1]` onto `iv` increasingly.
pub fn affine_onto(iv: &Interval) -> MobiusTransform {
    let s = iv.size().sqrt();
    MobiusTransform {
        a: s,
        b: iv.lo / s,
        c: 0.0,
        d: s.recip(),
    }
}

/// The normal form `γ_α` fixing 0 and 1 whose pole sits at `-1/(e^α - 1)`.
pub fn standard_distortion(alpha: f64) -> MobiusTransform {
    let e = (alpha / 2.0).exp();
    let ei = (-alpha / 2.0).exp();
    MobiusTransform {
        a: e,
        b: 0.0,
        c: e - ei,
        d: ei,
    }
}

/// Checks `γ = γ_J γ_α γ_I⁻¹` on [`DECOMPOSITION_SAMPLES`] points of `I` and
/// returns the largest pointwise defect.
pub fn verify_decomposition(g: &MobiusTransform, i: &Interval, j: &Interval) -> Result<f64> {
    let image = g.image_interval(i)?;
    let tol = 1e-9 * j.size().max(1.0);
    if (image.lo - j.lo).abs() > tol || (image.hi - j.hi).abs() > tol {
        return Err(Error::Precondition(format!(
            "g maps [{}, {}] to [{}, {}], not [{}, {}]",
            i.lo, i.hi, image.lo, image.hi, j.lo, j.hi
        )));
    }
    let alpha = distortion_factor(g, i)?;
    let composed = affine_onto(j)
        .compose(&standard_distortion(alpha))
        .compose(&affine_onto(i).inverse());
    let mut defect = 0.0_f64;
    for x in i.samples(DECOMPOSITION_SAMPLES) {
        let lhs = g.apply_real(x).ok_or(Error::Pole(0.0))?;
        let rhs = composed.apply_real(x).ok_or(Error::Pole(0.0))?;
        defect = defect.max((lhs - rhs).abs());
    }
    Ok(defect)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m(a: f64, b: f64, c: f64, d: f64) -> MobiusTransform {
        MobiusTransform::new(a, b, c, d).unwrap()
    }

    #[test]
    fn apply_special_points() {
        let id = MobiusTransform::IDENTITY;
        assert_eq!(id.apply(3.5.into()), ExtendedReal::Finite(3.5));
        let shift = m(1.0, 1.0, 0.0, 1.0);
        assert_eq!(shift.apply(ExtendedReal::Infinity), ExtendedReal::Infinity);
        let rot = m(0.0, 1.0, -1.0, 0.0);
        assert_eq!(rot.apply(0.0.into()), ExtendedReal::Infinity);
        assert_eq!(rot.apply(ExtendedReal::Infinity), ExtendedReal::Finite(-0.0));
    }

    #[test]
    fn construction_normalizes_determinant() {
        let g = m(2.0, 3.0, 1.0, 4.0);
        assert_relative_eq!(g.det(), 1.0, epsilon = 1e-12);
        assert!(MobiusTransform::new(1.0, 2.0, 2.0, 4.0).is_err());
        assert!(MobiusTransform::new(0.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(MobiusTransform::IDENTITY.derivative(7.0).unwrap(), 1.0);
        let dil = m(2.0, 0.0, 0.0, 0.5);
        assert_relative_eq!(dil.derivative(1.0).unwrap(), 4.0, epsilon = 1e-12);
        let rot = m(0.0, 1.0, -1.0, 0.0);
        assert!(matches!(rot.derivative(0.0), Err(Error::Pole(_))));
    }

    #[test]
    fn ball_derivative_examples() {
        for x in [-3.0, 0.0, 0.25, 9.0] {
            assert_relative_eq!(
                MobiusTransform::IDENTITY.ball_derivative(x).unwrap(),
                1.0,
                epsilon = 1e-15
            );
        }
        let shift = m(1.0, 1.0, 0.0, 1.0);
        assert_relative_eq!(shift.ball_derivative(0.0).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn distortion_factor_examples() {
        let iv = Interval::new(0.0, 1.0).unwrap();
        assert_eq!(distortion_factor(&m(3.0, 1.0, 0.0, 1.0), &iv).unwrap(), 0.0);
        // pole at 2: x ↦ 1/(2 - x) has matrix [[0, 1], [-1, 2]]
        let g = m(0.0, 1.0, -1.0, 2.0);
        assert_relative_eq!(distortion_factor(&g, &iv).unwrap(), 0.5_f64.ln(), epsilon = 1e-14);
        // pole at -1: x ↦ -1/(x + 1)
        let g = m(0.0, -1.0, 1.0, 1.0);
        assert_relative_eq!(distortion_factor(&g, &iv).unwrap(), 2.0_f64.ln(), epsilon = 1e-14);
        let g = m(0.0, -1.0, 1.0, -0.5);
        assert!(matches!(
            distortion_factor(&g, &iv),
            Err(Error::PoleInInterval { .. })
        ));
    }

    #[test]
    fn affine_onto_examples() {
        let unit = Interval::new(0.0, 1.0).unwrap();
        assert!(affine_onto(&unit).max_entry_diff(&MobiusTransform::IDENTITY) < 1e-15);
        let iv = Interval::new(2.0, 4.0).unwrap();
        let g = affine_onto(&iv);
        assert!(g.is_affine());
        assert_relative_eq!(g.det(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(g.apply_real(0.0).unwrap(), 2.0, epsilon = 1e-12);
        assert_relative_eq!(g.apply_real(1.0).unwrap(), 4.0, epsilon = 1e-12);
        assert_relative_eq!(g.apply_real(0.5).unwrap(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn standard_distortion_fixes_endpoints() {
        assert!(standard_distortion(0.0).max_entry_diff(&MobiusTransform::IDENTITY) < 1e-15);
        for alpha in [-3.0, -0.4, 0.1, 1.7, 5.0] {
            let g = standard_distortion(alpha);
            assert_relative_eq!(g.det(), 1.0, epsilon = 1e-12);
            assert!(g.apply_real(0.0).unwrap().abs() < 1e-12);
            assert!((g.apply_real(1.0).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn standard_distortion_matches_decomposition_at_half() {
        // γ with pole p right of [0, 1] and α = log 4 requires (p - 1)/p = 4,
        // so p = -1/3; the map x ↦ γ_α(x) then equals γ_J γ_α γ_I⁻¹ with I = J = [0, 1].
        let alpha = 4.0_f64.ln();
        let g = standard_distortion(alpha);
        assert_relative_eq!(g.pole().finite().unwrap(), -1.0 / 3.0, epsilon = 1e-14);
        let ga = g.apply_real(0.5).unwrap();
        // closed form: e^α x / ((e^α - 1) x + 1) = 2 / 2.5
        assert_relative_eq!(ga, 0.8, epsilon = 1e-14);
        let unit = Interval::new(0.0, 1.0).unwrap();
        assert_relative_eq!(distortion_factor(&g, &unit).unwrap(), alpha, epsilon = 1e-13);
        assert!(verify_decomposition(&g, &unit, &unit).unwrap() < 1e-14);
    }

    #[test]
    fn decomposition_affine_and_precondition() {
        let g = m(3.0, -1.0, 0.0, 1.0);
        let i = Interval::new(0.5, 2.0).unwrap();
        let j = g.image_interval(&i).unwrap();
        assert!(verify_decomposition(&g, &i, &j).unwrap() < 1e-12);
        let wrong = Interval::new(j.lo, j.hi + 0.1).unwrap();
        assert!(matches!(
            verify_decomposition(&g, &i, &wrong),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn image_interval_rejects_pole() {
        let g = m(0.0, 1.0, -1.0, 2.0);
        let iv = Interval::new(1.0, 3.0).unwrap();
        assert!(g.image_interval(&iv).is_err());
        let ok = Interval::new(-1.0, 1.0).unwrap();
        let img = g.image_interval(&ok).unwrap();
        assert_relative_eq!(img.lo, 1.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(img.hi, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn interval_geometry() {
        let a = Interval::new(0.0, 1.0).unwrap();
        let b = Interval::new(2.0, 2.5).unwrap();
        assert_eq!(a.distance(&b), 1.0);
        assert_eq!(b.distance(&a), 1.0);
        assert!(!a.intersects(&b));
        assert_eq!(a.midpoint(), 0.5);
        assert!(Interval::new(1.0, 1.0).is_err());
        let s: Vec<f64> = a.samples(5).collect();
        assert_eq!(s, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }
}
