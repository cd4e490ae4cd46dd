use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

/// Horizontal position in metres. Altitudes are implied by the entity tier.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist_sq(self, other: Point2) -> f64 {
        (self - other).norm_sq()
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    /// Closest point to `self` inside the disk of radius `radius` centred at `center`.
    pub fn project_to_disk(self, center: Point2, radius: f64) -> Point2 {
        let offset = self - center;
        let d = offset.norm();
        if d <= radius {
            self
        } else if radius <= 0.0 {
            center
        } else {
            // pull inward until rounding can no longer leave us outside
            let mut shrink = 1e-14;
            loop {
                let q = center + offset * (radius / d * (1.0 - shrink));
                if q.dist(center) <= radius || shrink > 1e-6 {
                    return q;
                }
                shrink *= 10.0;
            }
        }
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

/// Euclidean projection onto the intersection of two disks.
///
/// Falls back to the projection onto the first disk when the intersection is
/// empty; callers only pass disks that share at least one point.
pub fn project_to_disk_pair(p: Point2, c1: Point2, r1: f64, c2: Point2, r2: f64) -> Point2 {
    let in1 = |q: Point2| q.dist(c1) <= r1 * (1.0 + 1e-12);
    let in2 = |q: Point2| q.dist(c2) <= r2 * (1.0 + 1e-12);
    if in1(p) && in2(p) {
        return p.project_to_disk(c1, r1);
    }
    let p1 = p.project_to_disk(c1, r1);
    let p2 = p.project_to_disk(c2, r2);
    let mut cands: Vec<Point2> = Vec::with_capacity(2);
    if in2(p1) {
        cands.push(p1);
    }
    if in1(p2) {
        cands.push(p2);
    }
    if cands.is_empty() {
        // the projection lies on both circles: one of their intersection points
        let d = c1.dist(c2);
        if d > 0.0 && d <= r1 + r2 && d >= (r1 - r2).abs() {
            let a = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d);
            let h = (r1 * r1 - a * a).max(0.0).sqrt();
            let ex = (c2 - c1) * (1.0 / d);
            let base = c1 + ex * a;
            let perp = Point2::new(-ex.y, ex.x);
            for cand in [base + perp * h, base - perp * h] {
                // pull slightly inward so both memberships hold under rounding
                let mid = cand.project_to_disk(c1, r1).project_to_disk(c2, r2);
                cands.push(mid);
            }
        }
    }
    // the first disk is the hard one: finish inside it exactly
    cands.into_iter().min_by(|a, b| a.dist_sq(p).total_cmp(&b.dist_sq(p))).unwrap_or(p1).project_to_disk(c1, r1)
}
