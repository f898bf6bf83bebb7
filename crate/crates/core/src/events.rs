//! Event detectors.
//!
//! Each detector answers a boolean question about a fixed configuration by
//! tracing from a finite, canonically ordered set of entry edges, and returns
//! a witness trajectory: the event's witness for existential events, the
//! violating escape for universal ones. Universal events (containment,
//! section bound) are decided exactly, never sampled.
//!
//! Orbits are deduplicated with a bit set over the bounding box, so the total
//! tracing cost of a detector is linear in the number of directed edges of
//! its region.

use crate::lattice::{DirectedEdge, Direction, Geometry, LatticePoint, Region};
use crate::mirrors::{Configuration, MirrorError, ModelKind};
use crate::tracer::{is_manhattan, trace_full, TraceStatus, Trajectory};
use crate::unionfind::UnionFind;
use std::collections::HashSet;
use thiserror::Error;

#[derive(Error, Debug)]
pub enum EventError {
    #[error("operation requires {0} geometry")]
    WrongGeometry(&'static str),
    #[error("operation requires a rectangle support")]
    NeedsRectangle,
    #[error("rectangle height {got} does not match the required {expected}")]
    HeightMismatch { expected: i64, got: i64 },
    #[error("Manhattan wrapping requires an even parity shift (offset {offset})")]
    ManhattanOffsetParity { offset: i64 },
    #[error("band ({0}, {1}) must lie inside the strip 1..={2}")]
    BandOutsideStrip(i64, i64, i64),
    #[error("trajectory violates the precondition: {0}")]
    TraversalPrecondition(String),
    #[error(transparent)]
    Mirror(#[from] MirrorError),
}

/// Detector verdict plus the canonical witness and the tracing work done.
///
/// For existential events the witness is present iff the event holds; for
/// universal events it is the violating trajectory, present iff the event
/// fails.
#[derive(Clone, Debug)]
pub struct EventOutcome {
    pub holds: bool,
    pub witness: Option<Trajectory>,
    pub steps_used: u64,
}

/// Bit set over the directed edges of a bounding box, for orbit dedup.
struct EdgeVisitSet {
    x0: i64,
    y0: i64,
    width: i64,
    height: i64,
    bits: Vec<u64>,
}

impl EdgeVisitSet {
    fn new(region: &Region, g: Geometry) -> Self {
        let (x0, x1, y0, y1) = region.bounding_box(g);
        let width = x1 - x0 + 1;
        let height = y1 - y0 + 1;
        let n = (width * height * 4) as usize;
        EdgeVisitSet { x0, y0, width, height, bits: vec![0; n.div_ceil(64)] }
    }

    fn index(&self, e: DirectedEdge) -> Option<usize> {
        let dx = e.from.x - self.x0;
        let dy = e.from.y - self.y0;
        if dx < 0 || dy < 0 || dx >= self.width || dy >= self.height {
            return None;
        }
        let d = match e.heading {
            Direction::E => 0,
            Direction::N => 1,
            Direction::W => 2,
            Direction::S => 3,
        };
        Some(((dx * self.height + dy) * 4 + d) as usize)
    }

    fn contains(&self, e: DirectedEdge) -> bool {
        match self.index(e) {
            Some(i) => self.bits[i >> 6] & (1 << (i & 63)) != 0,
            None => false,
        }
    }

    fn mark_orbit(&mut self, t: &Trajectory) {
        for &e in t.edges() {
            if let Some(i) = self.index(e) {
                self.bits[i >> 6] |= 1 << (i & 63);
            }
        }
    }
}

fn rect_cap(cols: (i64, i64), rows: (i64, i64)) -> u64 {
    let cells = ((cols.1 - cols.0 + 1) * (rows.1 - rows.0 + 1)) as u64;
    4 * cells + 8
}

/// Crossing event over the rectangle `cols x rows`: some trajectory enters
/// through a bottom edge, keeps its inner vertices inside, and leaves through
/// a top edge. With `require_same_x` the entry and exit columns must agree.
pub fn detect_crossing(
    c: &Configuration,
    cols: (i64, i64),
    rows: (i64, i64),
    require_same_x: bool,
) -> EventOutcome {
    let bound = Region::rectangle(cols, rows);
    let cap = rect_cap(cols, rows);
    let mut steps = 0;
    for x in cols.0..=cols.1 {
        let e0 = DirectedEdge::new(LatticePoint::new(x, rows.0 - 1), Direction::N);
        let t = trace_full(e0, c, &bound, cap);
        steps += t.len();
        if exits_top(&t, rows) && (!require_same_x || t.terminal_edge().from.x == x) {
            return EventOutcome { holds: true, witness: Some(t), steps_used: steps };
        }
    }
    EventOutcome { holds: false, witness: None, steps_used: steps }
}

fn exits_top(t: &Trajectory, rows: (i64, i64)) -> bool {
    t.status() == TraceStatus::Exited
        && t.terminal_edge().heading == Direction::N
        && t.terminal_edge().from.y == rows.1
}

/// Crossing with pinned entry and exit columns: enter through the bottom edge
/// of column `entry_col`, leave through the top edge of column `exit_col`.
pub fn detect_pinned_crossing(
    c: &Configuration,
    cols: (i64, i64),
    rows: (i64, i64),
    entry_col: i64,
    exit_col: i64,
) -> EventOutcome {
    let bound = Region::rectangle(cols, rows);
    let e0 = DirectedEdge::new(LatticePoint::new(entry_col, rows.0 - 1), Direction::N);
    let t = trace_full(e0, c, &bound, rect_cap(cols, rows));
    let steps = t.len();
    if exits_top(&t, rows) && t.terminal_edge().from.x == exit_col {
        EventOutcome { holds: true, witness: Some(t), steps_used: steps }
    } else {
        EventOutcome { holds: false, witness: None, steps_used: steps }
    }
}

/// Containment event: every trajectory started from a vertex of `Q_1` stays
/// inside `Q_m`. Decided by tracing all 36 starting edges; the witness of a
/// violation is the first escaping trajectory in row-major edge order.
pub fn detect_containment(c: &Configuration, m: i64) -> EventOutcome {
    let bound = Region::origin_box(m);
    let cap = 16 * bound.point_count(c.geometry()) as u64 + 16;
    let mut steps = 0;
    for v in Region::origin_box(1).points(c.geometry()) {
        for d in Direction::ALL {
            let t = trace_full(DirectedEdge::new(v, d), c, &bound, cap);
            steps += t.len();
            if t.status() == TraceStatus::Exited {
                return EventOutcome { holds: false, witness: Some(t), steps_used: steps };
            }
        }
    }
    EventOutcome { holds: true, witness: None, steps_used: steps }
}

/// Annulus escape: some trajectory starts in `Q_{floor(9k/10)}(center)` and
/// reaches outside `Q_k(center)`.
pub fn detect_annulus_escape(c: &Configuration, center: LatticePoint, k: i64) -> EventOutcome {
    let inner = Region::Box { center, k: (9 * k) / 10 };
    let bound = Region::Box { center, k };
    let g = c.geometry();
    let cap = 16 * bound.point_count(g) as u64 + 16;
    let mut visited = EdgeVisitSet::new(&bound, g);
    let mut steps = 0;
    for v in inner.points(g) {
        for d in Direction::ALL {
            let e0 = DirectedEdge::new(v, d);
            if visited.contains(e0) {
                continue;
            }
            let t = trace_full(e0, c, &bound, cap);
            steps += t.len();
            if t.status() == TraceStatus::Exited {
                return EventOutcome { holds: true, witness: Some(t), steps_used: steps };
            }
            visited.mark_orbit(&t);
        }
    }
    EventOutcome { holds: false, witness: None, steps_used: steps }
}

/// The four rectangles splitting the annulus `Q_40n \ Q_36n`: two wide
/// horizontal slabs (indices 1, 2) and two tall vertical slabs (3, 4), each a
/// translated / quarter-turned copy of a `100n x n` rectangle.
pub fn splitting_rectangles(n: i64) -> [Region; 4] {
    assert!(n >= 1);
    [
        Region::rectangle((-50 * n, 50 * n - 1), (38 * n, 39 * n - 1)),
        Region::rectangle((-50 * n, 50 * n - 1), (-38 * n, -37 * n - 1)),
        Region::rectangle((-38 * n, -37 * n - 1), (-50 * n, 50 * n - 1)),
        Region::rectangle((38 * n, 39 * n - 1), (-50 * n, 50 * n - 1)),
    ]
}

/// For a trajectory from `Q_36n` to outside `Q_40n`, find a splitting
/// rectangle that some contiguous sub-trajectory crosses from one long side
/// to the other with inner vertices inside. Returns the 1-based rectangle
/// index; geometry guarantees one exists under the precondition.
pub fn annulus_traversal_index(
    t: &Trajectory,
    n: i64,
) -> Result<Option<usize>, EventError> {
    let g = t.geometry();
    if !Region::origin_box(36 * n).contains(t.start(), g) {
        return Err(EventError::TraversalPrecondition(format!(
            "start {} not in Q_{}",
            t.start(),
            36 * n
        )));
    }
    if Region::origin_box(40 * n).contains(t.end(), g) {
        return Err(EventError::TraversalPrecondition(format!(
            "end {} inside Q_{}",
            t.end(),
            40 * n
        )));
    }
    let rects = splitting_rectangles(n);
    for (i, rect) in rects.iter().enumerate() {
        // slabs 1 and 2 are horizontal: the short direction is vertical
        let vertical = i < 2;
        if traverses_short_direction(t, rect, vertical) {
            return Ok(Some(i + 1));
        }
    }
    Ok(None)
}

fn traverses_short_direction(t: &Trajectory, rect: &Region, vertical: bool) -> bool {
    let g = t.geometry();
    let mut entry: Option<Direction> = None;
    let mut inside = false;
    for &e in t.edges() {
        let to_in = rect.contains(e.to(g), g);
        match (inside, to_in) {
            (false, true) => {
                entry = Some(e.heading);
                inside = true;
            }
            (true, false) => {
                if let Some(d) = entry {
                    if d == e.heading && d.is_horizontal() != vertical {
                        return true;
                    }
                }
                entry = None;
                inside = false;
            }
            _ => {}
        }
    }
    false
}

/// Whether removing `blocked` from the cylinder strip `{0..=strip_len+1} x
/// (Z/wZ)` disconnects the left section `x = 0` from the right section
/// `x = strip_len + 1`. Equivalent to the cut property on the full cylinder
/// because both half-infinite sides are internally connected.
pub fn separates_strip(blocked: &HashSet<LatticePoint>, w: u32, strip_len: i64) -> bool {
    debug_assert!(blocked.iter().all(|v| v.x >= 1 && v.x <= strip_len));
    let w = w as i64;
    let cols = strip_len + 2;
    let index = |x: i64, y: i64| (x * w + (y - 1)) as usize;
    let mut uf = UnionFind::new((cols * w) as usize);
    let open = |x: i64, y: i64| !blocked.contains(&LatticePoint::new(x, y));
    for x in 0..cols {
        for y in 1..=w {
            if !open(x, y) {
                continue;
            }
            if x + 1 < cols && open(x + 1, y) {
                uf.union(index(x, y), index(x + 1, y));
            }
            let y_up = y % w + 1;
            if open(x, y_up) {
                uf.union(index(x, y), index(x, y_up));
            }
        }
    }
    let mid = (w / 2).max(1);
    !uf.connected(index(0, mid), index(cols - 1, mid))
}

/// Winding event over a band of the strip: some closed trajectory stays
/// inside the band `{band.0+1 ..= band.1} x (Z/wZ)` and its vertex set cuts
/// the strip `1..=strip_len` left from right.
pub fn detect_winding(
    c: &Configuration,
    strip_len: i64,
    band: (i64, i64),
) -> Result<EventOutcome, EventError> {
    let g = c.geometry();
    let w = g.circumference().ok_or(EventError::WrongGeometry("cylinder"))?;
    if band.0 < 0 || band.1 > strip_len || band.0 >= band.1 {
        return Err(EventError::BandOutsideStrip(band.0, band.1, strip_len));
    }
    let bound = Region::Band { lo: band.0, hi: band.1 };
    let cap = 4 * bound.point_count(g) as u64 + 8;
    let mut visited = EdgeVisitSet::new(&bound, g);
    let mut steps = 0;
    for x in band.0 + 1..=band.1 {
        for y in 1..=w as i64 {
            for d in Direction::ALL {
                let e0 = DirectedEdge::new(LatticePoint::new(x, y), d);
                if visited.contains(e0) {
                    continue;
                }
                let t = trace_full(e0, c, &bound, cap);
                steps += t.len();
                visited.mark_orbit(&t);
                if t.status() == TraceStatus::Closed
                    && separates_strip(&t.vertices(), w, strip_len)
                {
                    return Ok(EventOutcome { holds: true, witness: Some(t), steps_used: steps });
                }
            }
        }
    }
    Ok(EventOutcome { holds: false, witness: None, steps_used: steps })
}

/// [`detect_winding`] over block `ell` of the standard layout: the band
/// `(200*ell*n, 200*ell*n + 100*n)` on a cylinder of circumference `2n`.
pub fn detect_winding_block(
    c: &Configuration,
    strip_len: i64,
    ell: i64,
) -> Result<EventOutcome, EventError> {
    let w = c.geometry().circumference().ok_or(EventError::WrongGeometry("cylinder"))? as i64;
    let n = w / 2;
    let lo = 200 * ell * n;
    detect_winding(c, strip_len, (lo, lo + 100 * n))
}

/// Glue the top edges of a height-`2n` rectangle to its bottom edges and lay
/// the result along a cylinder of circumference `2n`: column `i` of the
/// rectangle becomes axial coordinate `offset + i - cols.0 + 1`, the row
/// becomes the circumferential coordinate. A same-column bottom-to-top
/// crossing of the rectangle becomes a closed trajectory winding the
/// cylinder.
pub fn wrap_rectangle(
    c: &Configuration,
    n: i64,
    offset: i64,
) -> Result<Configuration, EventError> {
    if c.geometry() != Geometry::Plane {
        return Err(EventError::WrongGeometry("plane"));
    }
    let Region::Rectangle { cols, rows } = c.support() else {
        return Err(EventError::NeedsRectangle);
    };
    let height = rows.1 - rows.0 + 1;
    if height != 2 * n {
        return Err(EventError::HeightMismatch { expected: 2 * n, got: height });
    }
    if c.model() == ModelKind::Manhattan && (offset - cols.0 + rows.0).rem_euclid(2) != 0 {
        return Err(EventError::ManhattanOffsetParity { offset });
    }
    let g = Geometry::cylinder((2 * n) as u32);
    let band = Region::Band { lo: offset, hi: offset + (cols.1 - cols.0 + 1) };
    let mut out = Configuration::empty(g, c.model(), band, c.p())?;
    for (v, s) in c.mirrors() {
        let image = LatticePoint::new(offset + v.x - cols.0 + 1, v.y - rows.0 + 1);
        out = out.mutate(image, s)?;
    }
    Ok(out)
}

/// Counts of strip trajectories by boundary class.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, serde::Serialize)]
pub struct ClassCounts {
    pub left_right: usize,
    pub right_left: usize,
    pub left_left: usize,
    pub right_right: usize,
    pub unclassified: usize,
}

/// The strip trajectories of a configuration, classified by the boundary
/// sections carrying their initial and terminal edges.
///
/// Directed trajectories entering eastward through the left section `x = 0`
/// are left-right or left-left; trajectories entering westward through the
/// right section `x = strip_len + 1` are right-left or right-right.
/// Trajectories that fail to complete within the step cap are reported as
/// unclassified (cannot happen for finite strips).
#[derive(Clone, Debug)]
pub struct StripClassification {
    pub left_right: Vec<Trajectory>,
    pub right_left: Vec<Trajectory>,
    pub left_left: Vec<Trajectory>,
    pub right_right: Vec<Trajectory>,
    pub unclassified: Vec<Trajectory>,
}

impl StripClassification {
    pub fn counts(&self) -> ClassCounts {
        ClassCounts {
            left_right: self.left_right.len(),
            right_left: self.right_left.len(),
            left_left: self.left_left.len(),
            right_right: self.right_right.len(),
            unclassified: self.unclassified.len(),
        }
    }

    /// Counts restricted to trajectories whose own orientation is
    /// street-legal for the Manhattan lattice.
    pub fn manhattan_counts(&self) -> ClassCounts {
        let count = |ts: &[Trajectory]| ts.iter().filter(|t| is_manhattan(t)).count();
        ClassCounts {
            left_right: count(&self.left_right),
            right_left: count(&self.right_left),
            left_left: count(&self.left_left),
            right_right: count(&self.right_right),
            unclassified: count(&self.unclassified),
        }
    }
}

/// Trace from every section entry edge of the strip `{1..=strip_len} x
/// (Z/wZ)` and classify the resulting trajectories. Works for any cylinder
/// circumference, odd widths included.
pub fn classify_strip(c: &Configuration, strip_len: i64) -> StripClassification {
    let g = c.geometry();
    let w = g.circumference().expect("strip classification requires a cylinder") as i64;
    let bound = Region::Band { lo: 0, hi: strip_len };
    let cap = 4 * bound.point_count(g) as u64 + 8;
    let mut out = StripClassification {
        left_right: vec![],
        right_left: vec![],
        left_left: vec![],
        right_right: vec![],
        unclassified: vec![],
    };
    for y in 1..=w {
        let t = trace_full(
            DirectedEdge::new(LatticePoint::new(0, y), Direction::E),
            c,
            &bound,
            cap,
        );
        match (t.status(), t.terminal_edge().heading) {
            (TraceStatus::Exited, Direction::E) => out.left_right.push(t),
            (TraceStatus::Exited, Direction::W) => out.left_left.push(t),
            _ => out.unclassified.push(t),
        }
    }
    for y in 1..=w {
        let t = trace_full(
            DirectedEdge::new(LatticePoint::new(strip_len + 1, y), Direction::W),
            c,
            &bound,
            cap,
        );
        match (t.status(), t.terminal_edge().heading) {
            (TraceStatus::Exited, Direction::W) => out.right_left.push(t),
            (TraceStatus::Exited, Direction::E) => out.right_right.push(t),
            _ => out.unclassified.push(t),
        }
    }
    out
}

/// Section-bound event: every trajectory through a vertex of the section
/// `x = 0` keeps its vertices within axial range `[-m, m]`. Decided by
/// tracing forward from all edges incident to the section (covering both
/// orbit directions).
pub fn detect_section_bound(c: &Configuration, m: i64) -> EventOutcome {
    let (reach, steps, witness) = axial_reach(c, m);
    match witness {
        Some(t) => EventOutcome { holds: false, witness: Some(t), steps_used: steps },
        None => {
            debug_assert!(reach <= m);
            EventOutcome { holds: true, witness: None, steps_used: steps }
        }
    }
}

/// Largest `|x|` reached by any trajectory through the section `x = 0`,
/// bounded by the band `[-m_max, m_max]`; returns `m_max + 1` when some orbit
/// leaves the band. One pass decides the section-bound event for every
/// `m <= m_max` at once.
pub fn max_axial_reach(c: &Configuration, m_max: i64) -> i64 {
    axial_reach(c, m_max).0
}

fn axial_reach(c: &Configuration, m: i64) -> (i64, u64, Option<Trajectory>) {
    let g = c.geometry();
    let w = g.circumference().expect("section events require a cylinder") as i64;
    let bound = Region::Band { lo: -m - 1, hi: m };
    let cap = 4 * bound.point_count(g) as u64 + 16;
    let mut visited = EdgeVisitSet::new(&Region::Band { lo: -m - 2, hi: m + 1 }, g);
    let mut steps = 0;
    let mut reach = 0i64;
    for y in 1..=w {
        let section = LatticePoint::new(0, y);
        for d in Direction::ALL {
            let out_edge = DirectedEdge::new(section, d);
            for e0 in [out_edge, out_edge.reversed(g)] {
                if visited.contains(e0) {
                    continue;
                }
                let t = trace_full(e0, c, &bound, cap);
                steps += t.len();
                if t.status() == TraceStatus::Exited {
                    return (m + 1, steps, Some(t));
                }
                visited.mark_orbit(&t);
                let (lo, hi) = t.x_range();
                reach = reach.max(lo.abs()).max(hi.abs());
            }
        }
    }
    (reach, steps, None)
}
