//! Euclidean primitives: points, closed axis-aligned boxes and closed balls.
//!
//! Dimension is fixed per run and stored alongside the coordinates so that
//! points stay `Copy` and never allocate. Supported dimensions are
//! `2..=MAX_DIM`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 6;

/// A point of `R^d`.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    coords: [f64; MAX_DIM],
    dim: u8,
}

impl Point {
    pub fn new(coords: &[f64]) -> Result<Self> {
        check_dim(coords.len())?;
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "point coordinates must be finite, got {coords:?}"
            )));
        }
        Ok(Self::from_slice(coords))
    }

    /// Unchecked constructor for internal hot paths.
    pub(crate) fn from_slice(coords: &[f64]) -> Self {
        let mut c = [0.0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Point {
            coords: c,
            dim: coords.len() as u8,
        }
    }

    pub fn origin(dim: usize) -> Self {
        Point {
            coords: [0.0; MAX_DIM],
            dim: dim as u8,
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim as usize]
    }

    #[inline]
    pub fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords[..self.dim as usize]
    }

    #[inline]
    pub fn dist2(&self, other: &Point) -> f64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    #[inline]
    pub fn dist(&self, other: &Point) -> f64 {
        self.dist2(other).sqrt()
    }

    pub fn translated(&self, shift: &[f64]) -> Point {
        let mut p = *self;
        for (c, s) in p.coords_mut().iter_mut().zip(shift) {
            *c += s;
        }
        p
    }
}

impl std::fmt::Debug for Point {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_tuple("Point").field(&self.coords()).finish()
    }
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if (2..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "dimension must be in 2..={MAX_DIM}, got {dim}"
        )))
    }
}

/// A closed axis-aligned box `[lo_1, hi_1] x ... x [lo_d, hi_d]`.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    lo: Point,
    hi: Point,
}

impl Aabb {
    pub fn new(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::InvalidParameter(
                "box corners have different dimensions".into(),
            ));
        }
        let lo = Point::new(lo)?;
        let hi = Point::new(hi)?;
        if lo.coords().iter().zip(hi.coords()).any(|(a, b)| a > b) {
            return Err(Error::InvalidParameter(format!(
                "box requires lo <= hi on every axis, got {lo:?} / {hi:?}"
            )));
        }
        Ok(Aabb { lo, hi })
    }

    /// The cube `[lo, hi]^d`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Aabb::new(&vec![lo; dim], &vec![hi; dim])
    }

    /// The cube `[-half, half]^d` centred at the origin.
    pub fn centered(dim: usize, half: f64) -> Result<Self> {
        Aabb::cube(dim, -half, half)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    #[inline]
    pub fn lo(&self) -> &Point {
        &self.lo
    }

    #[inline]
    pub fn hi(&self) -> &Point {
        &self.hi
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.hi.coords()[axis] - self.lo.coords()[axis]
    }

    pub fn sides(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.side(i)).collect()
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.side(i)).product()
    }

    pub fn center(&self) -> Point {
        let mut c = self.lo;
        for (x, h) in c.coords_mut().iter_mut().zip(self.hi.coords()) {
            *x = 0.5 * (*x + h);
        }
        c
    }

    #[inline]
    pub fn contains(&self, p: &Point) -> bool {
        p.coords()
            .iter()
            .zip(self.lo.coords().iter().zip(self.hi.coords()))
            .all(|(x, (l, h))| *l <= *x && *x <= *h)
    }

    /// `self ⊆ other`.
    pub fn is_inside(&self, other: &Aabb) -> bool {
        (0..self.dim()).all(|i| {
            other.lo.coords()[i] <= self.lo.coords()[i]
                && self.hi.coords()[i] <= other.hi.coords()[i]
        })
    }

    /// Bounding-box form of the Minkowski sum `self ⊕ B(0, r)`.
    pub fn dilate(&self, r: f64) -> Aabb {
        debug_assert!(r >= 0.0);
        let mut out = *self;
        for c in out.lo.coords_mut() {
            *c -= r;
        }
        for c in out.hi.coords_mut() {
            *c += r;
        }
        out
    }

    /// Shrinks every side by `r` on both ends; `None` when nothing is left.
    pub fn erode(&self, r: f64) -> Option<Aabb> {
        let mut out = *self;
        for i in 0..self.dim() {
            out.lo.coords_mut()[i] += r;
            out.hi.coords_mut()[i] -= r;
            if out.lo.coords()[i] > out.hi.coords()[i] {
                return None;
            }
        }
        Some(out)
    }

    pub fn translated(&self, shift: &[f64]) -> Aabb {
        Aabb {
            lo: self.lo.translated(shift),
            hi: self.hi.translated(shift),
        }
    }

    /// Euclidean distance from `p` to the box (zero inside).
    pub fn dist_to_point(&self, p: &Point) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim() {
            let x = p.coords()[i];
            let d = if x < self.lo.coords()[i] {
                self.lo.coords()[i] - x
            } else if x > self.hi.coords()[i] {
                x - self.hi.coords()[i]
            } else {
                0.0
            };
            s += d * d;
        }
        s.sqrt()
    }

    /// Distance from an interior point to the complement of the box.
    pub fn depth_of(&self, p: &Point) -> f64 {
        (0..self.dim())
            .map(|i| {
                let x = p.coords()[i];
                (x - self.lo.coords()[i]).min(self.hi.coords()[i] - x)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest distance from `p` to a point of the box.
    pub fn farthest_dist(&self, p: &Point) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim() {
            let x = p.coords()[i];
            let d = (x - self.lo.coords()[i])
                .abs()
                .max((x - self.hi.coords()[i]).abs());
            s += d * d;
        }
        s.sqrt()
    }
}

impl std::fmt::Debug for Aabb {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Aabb({:?} .. {:?})", self.lo.coords(), self.hi.coords())
    }
}

/// A closed ball `B(center, radius)`: a germ with its grain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkedBall {
    pub center: Point,
    pub radius: f64,
}

impl MarkedBall {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "radius must be finite and nonnegative, got {radius}"
            )));
        }
        Ok(MarkedBall { center, radius })
    }

    /// Convenience constructor used heavily by tests and crafted inputs.
    pub fn at(coords: &[f64], radius: f64) -> Self {
        MarkedBall::new(Point::new(coords).expect("valid point"), radius).expect("valid radius")
    }

    #[inline]
    pub fn intersects(&self, other: &MarkedBall) -> bool {
        balls_intersect(self, other)
    }

    #[inline]
    pub fn hits_box(&self, b: &Aabb) -> bool {
        b.dist_to_point(&self.center) <= self.radius
    }

    #[inline]
    pub fn covers_box(&self, b: &Aabb) -> bool {
        b.farthest_dist(&self.center) <= self.radius
    }

    /// Whether the ball reaches outside the closed box `b`.
    #[inline]
    pub fn leaves_box(&self, b: &Aabb) -> bool {
        (0..b.dim()).any(|i| {
            let x = self.center.coords()[i];
            x - self.radius < b.lo().coords()[i] || x + self.radius > b.hi().coords()[i]
        })
    }

    pub fn bounding_box(&self) -> Aabb {
        let mut lo = self.center;
        let mut hi = self.center;
        for c in lo.coords_mut() {
            *c -= self.radius;
        }
        for c in hi.coords_mut() {
            *c += self.radius;
        }
        Aabb { lo, hi }
    }
}

/// Closed-ball intersection test; tangent balls intersect.
#[inline]
pub fn balls_intersect(a: &MarkedBall, b: &MarkedBall) -> bool {
    let r = a.radius + b.radius;
    a.center.dist2(&b.center) <= r * r
}

/// Volume of the unit ball in dimension `d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    // v_d = v_{d-2} * 2π / d with v_0 = 1, v_1 = 2.
    let mut v = if d % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if d % 2 == 0 { 2 } else { 3 };
    while k <= d {
        v *= 2.0 * std::f64::consts::PI / k as f64;
        k += 2;
    }
    v
}

/// Volume of `b ⊕ B(0, r)` by the Steiner formula:
/// `Σ_k e_{d-k}(sides) v_k r^k`.
pub fn dilated_box_volume(b: &Aabb, r: f64) -> f64 {
    steiner_coefficients(b)
        .iter()
        .enumerate()
        .map(|(k, c)| c * r.powi(k as i32))
        .sum()
}

/// Coefficients `c_k = e_{d-k}(sides) v_k` of the Steiner polynomial.
pub(crate) fn steiner_coefficients(b: &Aabb) -> Vec<f64> {
    let d = b.dim();
    // elementary symmetric polynomials of the side lengths
    let mut e = vec![0.0; d + 1];
    e[0] = 1.0;
    for s in b.sides() {
        for j in (1..=d).rev() {
            e[j] += e[j - 1] * s;
        }
    }
    (0..=d).map(|k| e[d - k] * unit_ball_volume(k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tangent_balls_intersect() {
        let a = MarkedBall::at(&[0.0, 0.0], 1.0);
        let b = MarkedBall::at(&[2.0, 0.0], 1.0);
        let c = MarkedBall::at(&[2.0001, 0.0], 1.0);
        assert!(balls_intersect(&a, &b));
        assert!(!balls_intersect(&a, &c));
        let d = MarkedBall::at(&[0.0, 0.0], 0.0);
        let e = MarkedBall::at(&[0.0, 0.0], 3.5);
        assert!(balls_intersect(&d, &e));
    }

    #[test]
    fn dilate_examples() {
        let unit = Aabb::cube(2, 0.0, 1.0).unwrap();
        assert_eq!(unit.dilate(0.0), unit);
        assert_eq!(unit.dilate(3.0), Aabb::cube(2, -3.0, 4.0).unwrap());
        let b = Aabb::centered(2, 1.0).unwrap();
        assert_eq!(b.dilate(1.0).volume(), 16.0);
    }

    #[test]
    fn unit_ball_volumes() {
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-14);
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(4) - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn steiner_unit_square() {
        let unit = Aabb::cube(2, 0.0, 1.0).unwrap();
        let v = dilated_box_volume(&unit, 1.0);
        assert!((v - (9.0 - (4.0 - std::f64::consts::PI))).abs() < 1e-12);
    }

    #[test]
    fn invalid_boxes_rejected() {
        assert!(Aabb::new(&[0.0, 1.0], &[1.0, 0.0]).is_err());
        assert!(Aabb::new(&[0.0], &[1.0]).is_err());
        assert!(MarkedBall::new(Point::origin(2), -1.0).is_err());
    }

    proptest! {
        #[test]
        fn intersection_is_symmetric(
            ax in -5.0..5.0f64, ay in -5.0..5.0f64, ar in 0.0..3.0f64,
            bx in -5.0..5.0f64, by in -5.0..5.0f64, br in 0.0..3.0f64,
        ) {
            let a = MarkedBall::at(&[ax, ay], ar);
            let b = MarkedBall::at(&[bx, by], br);
            prop_assert_eq!(balls_intersect(&a, &b), balls_intersect(&b, &a));
        }

        #[test]
        fn dilate_is_monotone(r in 0.0..10.0f64, extra in 0.0..10.0f64) {
            let b = Aabb::new(&[0.0, -1.0, 2.0], &[1.0, 3.0, 2.5]).unwrap();
            prop_assert!(b.dilate(r).is_inside(&b.dilate(r + extra)));
            prop_assert!(b.is_inside(&b.dilate(r)));
        }

        #[test]
        fn steiner_volume_brackets(r in 0.0..4.0f64) {
            // inner ball-dilation is inside the box dilation, which is inside
            // the box of side + 2r
            let b = Aabb::new(&[0.0, 0.0], &[2.0, 0.5]).unwrap();
            let v = dilated_box_volume(&b, r);
            prop_assert!(v <= b.dilate(r).volume() + 1e-12);
            prop_assert!(v >= b.volume() - 1e-12);
        }
    }
}
