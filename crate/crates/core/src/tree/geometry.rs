//! Even-odd point-in-polygon with boundary-inclusive membership.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

/// A closed polygon; the last vertex connects back to the first.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    pub vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Self {
        Polygon { vertices }
    }

    fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// True when `p` lies on some edge (including vertices).
    pub fn on_boundary(&self, p: Point) -> bool {
        self.edges().any(|(a, b)| on_segment(a, b, p))
    }

    /// Even-odd interior test; boundary points count as inside.
    pub fn contains(&self, p: Point) -> bool {
        if self.on_boundary(p) {
            return true;
        }
        let mut inside = false;
        for (a, b) in self.edges() {
            // Half-open rule on y avoids double-counting vertices on the ray.
            if (a.y > p.y) != (b.y > p.y) {
                let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    cross == 0.0 && p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Membership in a set of polygons: inside any one of them.
pub fn in_any(polygons: &[Polygon], p: Point) -> bool {
    polygons.iter().any(|poly| poly.contains(p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Polygon {
        Polygon::new(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)])
    }

    #[test]
    fn square_membership() {
        let sq = unit_square();
        assert!(sq.contains(Point::new(0.5, 0.5)));
        assert!(!sq.contains(Point::new(2.0, 2.0)));
        assert!(sq.contains(Point::new(0.0, 0.0)));
        assert!(sq.contains(Point::new(1.0, 0.5)));
        assert!(sq.contains(Point::new(0.5, 1.0)));
        assert!(!sq.contains(Point::new(1.0 + 1e-12, 0.5)));
    }

    #[test]
    fn self_intersecting_bowtie_uses_even_odd() {
        // A pentagram's centre has winding number 2, so even-odd leaves it outside.
        let star: Vec<Point> = (0..5)
            .map(|k| {
                let t = std::f64::consts::FRAC_PI_2 + (k * 2) as f64 * 2.0 * std::f64::consts::PI / 5.0;
                Point::new(t.cos(), t.sin())
            })
            .collect();
        let star = Polygon::new(star);
        assert!(!star.contains(Point::new(0.0, 0.0)));
        assert!(star.contains(Point::new(0.0, 0.8)));
    }

    #[test]
    fn union_of_polygons() {
        let far = Polygon::new(vec![Point::new(5.0, 5.0), Point::new(6.0, 5.0), Point::new(5.5, 6.0)]);
        let polys = [unit_square(), far];
        assert!(in_any(&polys, Point::new(5.5, 5.2)));
        assert!(in_any(&polys, Point::new(0.1, 0.1)));
        assert!(!in_any(&polys, Point::new(3.0, 3.0)));
    }
}
