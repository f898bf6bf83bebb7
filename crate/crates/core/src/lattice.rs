//! Geometry primitives: points on the plane `Z x Z` or on a cylinder
//! `Z x (Z/wZ)`, axis directions, directed edges, and finite regions.
//!
//! Cylinder points keep their `y` coordinate in the canonical range `1..=w`,
//! so coordinates used in the literature (rows `1..=2n`) are usable verbatim.

use std::fmt;

/// A lattice vertex. On a cylinder of circumference `w` the canonical `y`
/// range is `1..=w`; every constructor and step keeps points canonical.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct LatticePoint {
    pub x: i64,
    pub y: i64,
}

impl LatticePoint {
    pub fn new(x: i64, y: i64) -> Self {
        LatticePoint { x, y }
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// The two lattice geometries. A cylinder has circumference `w >= 1` in the
/// `y` direction and is unbounded in `x`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Geometry {
    Plane,
    Cylinder { circumference: u32 },
}

impl Geometry {
    pub fn cylinder(circumference: u32) -> Self {
        assert!(circumference >= 1, "cylinder circumference must be >= 1");
        Geometry::Cylinder { circumference }
    }

    pub fn circumference(&self) -> Option<u32> {
        match self {
            Geometry::Plane => None,
            Geometry::Cylinder { circumference } => Some(*circumference),
        }
    }

    /// Reduce a point to canonical coordinates (identity on the plane).
    #[inline]
    pub fn canonical(&self, p: LatticePoint) -> LatticePoint {
        match self {
            Geometry::Plane => p,
            Geometry::Cylinder { circumference } => {
                let w = *circumference as i64;
                LatticePoint::new(p.x, (p.y - 1).rem_euclid(w) + 1)
            }
        }
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Geometry::Plane => write!(f, "plane"),
            Geometry::Cylinder { circumference } => write!(f, "cylinder:{circumference}"),
        }
    }
}

/// Axis direction of a unit step.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum Direction {
    E,
    N,
    W,
    S,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::E, Direction::N, Direction::W, Direction::S];

    #[inline]
    pub fn reverse(self) -> Direction {
        match self {
            Direction::E => Direction::W,
            Direction::N => Direction::S,
            Direction::W => Direction::E,
            Direction::S => Direction::N,
        }
    }

    #[inline]
    pub fn dx(self) -> i64 {
        match self {
            Direction::E => 1,
            Direction::W => -1,
            _ => 0,
        }
    }

    #[inline]
    pub fn dy(self) -> i64 {
        match self {
            Direction::N => 1,
            Direction::S => -1,
            _ => 0,
        }
    }

    pub fn is_horizontal(self) -> bool {
        matches!(self, Direction::E | Direction::W)
    }

    pub fn to_char(self) -> char {
        match self {
            Direction::E => 'E',
            Direction::N => 'N',
            Direction::W => 'W',
            Direction::S => 'S',
        }
    }

    pub fn from_char(c: char) -> Option<Direction> {
        match c.to_ascii_uppercase() {
            'E' => Some(Direction::E),
            'N' => Some(Direction::N),
            'W' => Some(Direction::W),
            'S' => Some(Direction::S),
            _ => None,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

/// Displace `p` one unit in direction `d`, reducing to canonical coordinates.
#[inline]
pub fn step(p: LatticePoint, d: Direction, g: Geometry) -> LatticePoint {
    g.canonical(LatticePoint::new(p.x + d.dx(), p.y + d.dy()))
}

/// A directed edge, identified by its source vertex and heading.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct DirectedEdge {
    pub from: LatticePoint,
    pub heading: Direction,
}

impl DirectedEdge {
    pub fn new(from: LatticePoint, heading: Direction) -> Self {
        DirectedEdge { from, heading }
    }

    #[inline]
    pub fn to(&self, g: Geometry) -> LatticePoint {
        step(self.from, self.heading, g)
    }

    /// The same undirected edge traversed the other way.
    #[inline]
    pub fn reversed(&self, g: Geometry) -> DirectedEdge {
        DirectedEdge::new(self.to(g), self.heading.reverse())
    }

    /// Canonicalize the source vertex (cylinder wrap).
    pub fn canonical(&self, g: Geometry) -> DirectedEdge {
        DirectedEdge::new(g.canonical(self.from), self.heading)
    }
}

impl fmt::Display for DirectedEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.from.x, self.from.y, self.heading)
    }
}

/// A finite vertex region with exact membership tests.
///
/// `Rectangle` and `Box` live on the plane (a rectangle is also usable on a
/// cylinder when its rows fit in `1..=w`); `Band` is the cylinder strip
/// `{lo+1, .., hi} x (Z/wZ)`; `Annulus` is the box difference
/// `Q_outer \ Q_inner`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Region {
    Rectangle { cols: (i64, i64), rows: (i64, i64) },
    Box { center: LatticePoint, k: i64 },
    Band { lo: i64, hi: i64 },
    Annulus { center: LatticePoint, inner: i64, outer: i64 },
}

impl Region {
    /// The box `Q_k` centered at the origin.
    pub fn origin_box(k: i64) -> Region {
        Region::Box { center: LatticePoint::new(0, 0), k }
    }

    pub fn rectangle(cols: (i64, i64), rows: (i64, i64)) -> Region {
        assert!(cols.0 <= cols.1 && rows.0 <= rows.1, "intervals must be nonempty");
        Region::Rectangle { cols, rows }
    }

    #[inline]
    pub fn contains(&self, p: LatticePoint, g: Geometry) -> bool {
        let p = g.canonical(p);
        match *self {
            Region::Rectangle { cols, rows } => {
                cols.0 <= p.x && p.x <= cols.1 && rows.0 <= p.y && p.y <= rows.1
            }
            Region::Box { center, k } => (p.x - center.x).abs() <= k && (p.y - center.y).abs() <= k,
            Region::Band { lo, hi } => lo < p.x && p.x <= hi,
            Region::Annulus { center, inner, outer } => {
                let d = (p.x - center.x).abs().max((p.y - center.y).abs());
                inner < d && d <= outer
            }
        }
    }

    /// Bounding box `(x0, x1, y0, y1)`, inclusive.
    pub fn bounding_box(&self, g: Geometry) -> (i64, i64, i64, i64) {
        match *self {
            Region::Rectangle { cols, rows } => (cols.0, cols.1, rows.0, rows.1),
            Region::Box { center, k } => (center.x - k, center.x + k, center.y - k, center.y + k),
            Region::Band { lo, hi } => {
                let w = g
                    .circumference()
                    .expect("band regions require a cylinder geometry") as i64;
                (lo + 1, hi, 1, w)
            }
            Region::Annulus { center, inner: _, outer } => (
                center.x - outer,
                center.x + outer,
                center.y - outer,
                center.y + outer,
            ),
        }
    }

    /// All points of the region in row-major ascending order (x outer, y inner).
    pub fn points(&self, g: Geometry) -> impl Iterator<Item = LatticePoint> + '_ {
        let (x0, x1, y0, y1) = self.bounding_box(g);
        let this = *self;
        (x0..=x1).flat_map(move |x| {
            (y0..=y1)
                .map(move |y| LatticePoint::new(x, y))
                .filter(move |p| this.contains(*p, g))
        })
    }

    pub fn point_count(&self, g: Geometry) -> usize {
        match *self {
            Region::Rectangle { cols, rows } => {
                ((cols.1 - cols.0 + 1) * (rows.1 - rows.0 + 1)) as usize
            }
            Region::Box { k, .. } => ((2 * k + 1) * (2 * k + 1)) as usize,
            Region::Band { lo, hi } => {
                let w = g.circumference().expect("band requires cylinder") as i64;
                ((hi - lo) * w) as usize
            }
            Region::Annulus { inner, outer, .. } => {
                let big = (2 * outer + 1) * (2 * outer + 1);
                let small = (2 * inner + 1) * (2 * inner + 1);
                (big - small) as usize
            }
        }
    }

    /// Bottom edges of a rectangle: one north-heading edge into row `j1` per
    /// column. Only meaningful for `Rectangle` regions.
    pub fn bottom_edges(&self) -> Vec<DirectedEdge> {
        match *self {
            Region::Rectangle { cols, rows } => (cols.0..=cols.1)
                .map(|x| DirectedEdge::new(LatticePoint::new(x, rows.0 - 1), Direction::N))
                .collect(),
            _ => panic!("bottom_edges is defined for rectangles only"),
        }
    }

    /// Top edges of a rectangle: one north-heading edge out of row `j2` per column.
    pub fn top_edges(&self) -> Vec<DirectedEdge> {
        match *self {
            Region::Rectangle { cols, rows } => (cols.0..=cols.1)
                .map(|x| DirectedEdge::new(LatticePoint::new(x, rows.1), Direction::N))
                .collect(),
            _ => panic!("top_edges is defined for rectangles only"),
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Region::Rectangle { cols, rows } => {
                write!(f, "rect:{}:{}:{}:{}", cols.0, cols.1, rows.0, rows.1)
            }
            Region::Box { center, k } => write!(f, "box:{}:{}:{}", k, center.x, center.y),
            Region::Band { lo, hi } => write!(f, "band:{lo}:{hi}"),
            Region::Annulus { center, inner, outer } => {
                write!(f, "annulus:{}:{}:{}:{}", inner, outer, center.x, center.y)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_interior_and_wrap() {
        let cyl = Geometry::cylinder(4);
        assert_eq!(step(LatticePoint::new(3, 1), Direction::N, cyl), LatticePoint::new(3, 2));
        assert_eq!(step(LatticePoint::new(3, 4), Direction::N, cyl), LatticePoint::new(3, 1));
        assert_eq!(
            step(LatticePoint::new(0, 0), Direction::W, Geometry::Plane),
            LatticePoint::new(-1, 0)
        );
    }

    #[test]
    fn stepping_around_the_cylinder_returns_home() {
        let g = Geometry::cylinder(5);
        let mut p = LatticePoint::new(2, 3);
        for _ in 0..5 {
            p = step(p, Direction::N, g);
        }
        assert_eq!(p, LatticePoint::new(2, 3));
        assert_eq!(step(step(p, Direction::N, g), Direction::S, g), p);
    }

    #[test]
    fn edge_reversal_is_an_involution() {
        for g in [Geometry::Plane, Geometry::cylinder(2), Geometry::cylinder(7)] {
            for d in Direction::ALL {
                let e = DirectedEdge::new(g.canonical(LatticePoint::new(3, 1)), d);
                assert_eq!(d.reverse().reverse(), d);
                assert_eq!(e.reversed(g).reversed(g), e);
                assert_eq!(e.reversed(g).to(g), e.from);
            }
        }
    }

    #[test]
    fn rectangle_bottom_and_top_edges() {
        let r = Region::rectangle((1, 2), (1, 3));
        assert_eq!(
            r.bottom_edges(),
            vec![
                DirectedEdge::new(LatticePoint::new(1, 0), Direction::N),
                DirectedEdge::new(LatticePoint::new(2, 0), Direction::N),
            ]
        );
        assert_eq!(
            r.top_edges(),
            vec![
                DirectedEdge::new(LatticePoint::new(1, 3), Direction::N),
                DirectedEdge::new(LatticePoint::new(2, 3), Direction::N),
            ]
        );
        let singleton = Region::rectangle((5, 5), (5, 5));
        assert_eq!(
            singleton.bottom_edges(),
            vec![DirectedEdge::new(LatticePoint::new(5, 4), Direction::N)]
        );
    }

    #[test]
    fn region_membership() {
        let q2 = Region::origin_box(2);
        assert!(q2.contains(LatticePoint::new(2, 2), Geometry::Plane));
        assert!(!q2.contains(LatticePoint::new(3, 0), Geometry::Plane));

        let band = Region::Band { lo: 0, hi: 5 };
        let cyl = Geometry::cylinder(4);
        assert!(band.contains(LatticePoint::new(1, 4), cyl));
        assert!(!band.contains(LatticePoint::new(0, 2), cyl));
        assert!(!band.contains(LatticePoint::new(6, 1), cyl));
    }

    #[test]
    fn region_point_counts() {
        let g = Geometry::Plane;
        assert_eq!(Region::origin_box(2).point_count(g), 25);
        assert_eq!(Region::origin_box(2).points(g).count(), 25);
        let r = Region::rectangle((-1, 3), (2, 4));
        assert_eq!(r.point_count(g), 15);
        assert_eq!(r.points(g).count(), 15);
        let cyl = Geometry::cylinder(4);
        let band = Region::Band { lo: 0, hi: 5 };
        assert_eq!(band.point_count(cyl), 20);
        assert_eq!(band.points(cyl).count(), 20);
    }

    #[test]
    fn points_are_row_major() {
        let r = Region::rectangle((0, 1), (0, 1));
        let pts: Vec<_> = r.points(Geometry::Plane).collect();
        assert_eq!(
            pts,
            vec![
                LatticePoint::new(0, 0),
                LatticePoint::new(0, 1),
                LatticePoint::new(1, 0),
                LatticePoint::new(1, 1),
            ]
        );
    }
}
