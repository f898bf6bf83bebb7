//! Deterministic light propagation.
//!
//! Light travels along directed edges and is reflected at mirrored vertices:
//! `NE` is the `/` diagonal (E<->N, W<->S) and `NW` is the `\` diagonal
//! (E<->S, W<->N). This is the unique assignment under which the Manhattan
//! parity rule (NW mirror where `x - y` is even) is compatible with the
//! Manhattan one-way street orientations in all four vertex-parity classes;
//! [`manhattan_reflect_consistency`] checks the derivation.
//!
//! The successor map is a bijection on directed edges (its inverse is
//! reverse-successor-reverse), so the first repeated edge of any orbit is the
//! initial edge. Closure detection therefore compares against the initial
//! edge only; [`trace_checked`] re-verifies the justification with a full
//! visited set.

use crate::lattice::{DirectedEdge, Direction, Geometry, LatticePoint, Region};
use crate::mirrors::{manhattan_orientation, Configuration, MirrorState};
use std::collections::HashSet;

/// Outgoing heading for light arriving with heading `d` at a vertex in state `s`.
#[inline]
pub fn reflect(d: Direction, s: MirrorState) -> Direction {
    match s {
        MirrorState::Empty => d,
        MirrorState::NE => match d {
            Direction::E => Direction::N,
            Direction::N => Direction::E,
            Direction::W => Direction::S,
            Direction::S => Direction::W,
        },
        MirrorState::NW => match d {
            Direction::E => Direction::S,
            Direction::S => Direction::E,
            Direction::W => Direction::N,
            Direction::N => Direction::W,
        },
    }
}

/// The edge light crosses immediately after crossing `e`.
#[inline]
pub fn successor(e: DirectedEdge, c: &Configuration) -> DirectedEdge {
    let v = e.to(c.geometry());
    DirectedEdge::new(v, reflect(e.heading, c.state(v)))
}

/// Whether `e` respects the Manhattan one-way orientations: east on odd rows,
/// west on even rows, south on odd columns, north on even columns.
#[inline]
pub fn manhattan_edge_allowed(e: DirectedEdge) -> bool {
    match e.heading {
        Direction::E => e.from.y.rem_euclid(2) == 1,
        Direction::W => e.from.y.rem_euclid(2) == 0,
        Direction::S => e.from.x.rem_euclid(2) == 1,
        Direction::N => e.from.x.rem_euclid(2) == 0,
    }
}

/// Verify that the `/`,`\` reflection convention is the unique one compatible
/// with the Manhattan model: in each of the four `(x mod 2, y mod 2)` vertex
/// classes, every street-legal incoming heading must leave street-legal under
/// the parity-forced mirror (and under no mirror), and must not under the
/// opposite orientation.
pub fn manhattan_reflect_consistency() -> bool {
    let g = Geometry::Plane;
    for px in 0..2 {
        for py in 0..2 {
            let v = LatticePoint::new(px, py);
            let forced = manhattan_orientation(v);
            let opposite =
                if forced == MirrorState::NW { MirrorState::NE } else { MirrorState::NW };
            for d in Direction::ALL {
                let from = LatticePoint::new(v.x - d.dx(), v.y - d.dy());
                let incoming = DirectedEdge::new(from, d);
                debug_assert_eq!(incoming.to(g), v);
                if !manhattan_edge_allowed(incoming) {
                    continue;
                }
                let ok = |s: MirrorState| {
                    manhattan_edge_allowed(DirectedEdge::new(v, reflect(d, s)))
                };
                if !ok(forced) || !ok(MirrorState::Empty) || ok(opposite) {
                    return false;
                }
            }
        }
    }
    true
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TraceStatus {
    /// The successor of the last edge is the initial edge.
    Closed,
    /// The last edge leaves the bounding region.
    Exited,
    /// Stopped after the step cap without closing or exiting.
    CapExceeded,
}

/// A maximal traced light path: an edge sequence under the successor map.
///
/// Edges are recorded eagerly up to a limit; past it the trajectory keeps
/// counting and tracking endpoints only. Detectors that consume vertex sets
/// request full recording via [`trace_full`].
#[derive(Clone, PartialEq, Debug)]
pub struct Trajectory {
    geometry: Geometry,
    edges: Vec<DirectedEdge>,
    total: u64,
    status: TraceStatus,
    initial: DirectedEdge,
    terminal: DirectedEdge,
    x_range: (i64, i64),
}

impl Trajectory {
    pub fn status(&self) -> TraceStatus {
        self.status
    }

    pub fn is_closed(&self) -> bool {
        self.status == TraceStatus::Closed
    }

    /// Number of edges crossed (counted even past the recording limit).
    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    /// The recorded edge prefix.
    pub fn edges(&self) -> &[DirectedEdge] {
        &self.edges
    }

    pub fn fully_recorded(&self) -> bool {
        self.edges.len() as u64 == self.total
    }

    pub fn initial_edge(&self) -> DirectedEdge {
        self.initial
    }

    pub fn terminal_edge(&self) -> DirectedEdge {
        self.terminal
    }

    /// Starting point: source of the initial edge.
    pub fn start(&self) -> LatticePoint {
        self.initial.from
    }

    /// Ending point: target of the terminal edge.
    pub fn end(&self) -> LatticePoint {
        self.terminal.to(self.geometry)
    }

    /// Min/max `x` over every visited vertex, recorded or not.
    pub fn x_range(&self) -> (i64, i64) {
        self.x_range
    }

    /// Vertices in traversal order: start, then the target of every edge.
    pub fn vertex_sequence(&self) -> impl Iterator<Item = LatticePoint> + '_ {
        std::iter::once(self.start()).chain(self.edges.iter().map(|e| e.to(self.geometry)))
    }

    /// The vertex set `V(L)`. Requires full recording.
    pub fn vertices(&self) -> HashSet<LatticePoint> {
        assert!(self.fully_recorded(), "vertex set requested from a summarized trajectory");
        self.vertex_sequence().collect()
    }

    /// Inner vertices: targets of all edges but the last — start and end
    /// excluded unless revisited mid-flight. Requires full recording.
    pub fn inner_vertices(&self) -> HashSet<LatticePoint> {
        assert!(self.fully_recorded(), "inner vertices requested from a summarized trajectory");
        self.edges[..self.edges.len().saturating_sub(1)]
            .iter()
            .map(|e| e.to(self.geometry))
            .collect()
    }

    /// The reversed trajectory (a valid trajectory by reversibility of the
    /// successor map). Requires full recording.
    pub fn reversed(&self) -> Trajectory {
        assert!(self.fully_recorded(), "cannot reverse a summarized trajectory");
        let g = self.geometry;
        let edges: Vec<DirectedEdge> = self.edges.iter().rev().map(|e| e.reversed(g)).collect();
        let initial = edges.first().copied().unwrap_or(self.terminal.reversed(g));
        let terminal = edges.last().copied().unwrap_or(self.initial.reversed(g));
        Trajectory {
            geometry: g,
            edges,
            total: self.total,
            status: self.status,
            initial,
            terminal,
            x_range: self.x_range,
        }
    }

    /// One `x y heading` line per recorded edge.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.edges {
            out.push_str(&format!("{e}\n"));
        }
        out
    }
}

/// Parse `x y heading` lines into an edge list.
pub fn parse_edges(text: &str) -> Result<Vec<DirectedEdge>, String> {
    let mut edges = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(format!("bad edge line `{line}`"));
        }
        let x: i64 = parts[0].parse().map_err(|_| format!("bad x `{}`", parts[0]))?;
        let y: i64 = parts[1].parse().map_err(|_| format!("bad y `{}`", parts[1]))?;
        let heading = parts[2]
            .chars()
            .next()
            .and_then(Direction::from_char)
            .ok_or_else(|| format!("bad heading `{}`", parts[2]))?;
        edges.push(DirectedEdge::new(LatticePoint::new(x, y), heading));
    }
    Ok(edges)
}

/// Default record limit before trajectories switch to summary mode.
pub const DEFAULT_RECORD_LIMIT: usize = 1_000_000;

/// Trace from `e0` until the orbit closes, leaves `bound`, or crosses `cap`
/// edges. Records up to [`DEFAULT_RECORD_LIMIT`] edges.
pub fn trace(e0: DirectedEdge, c: &Configuration, bound: &Region, cap: u64) -> Trajectory {
    trace_recording(e0, c, bound, cap, DEFAULT_RECORD_LIMIT)
}

/// [`trace`] with unbounded edge recording, for detectors that need `V(L)`.
pub fn trace_full(e0: DirectedEdge, c: &Configuration, bound: &Region, cap: u64) -> Trajectory {
    trace_recording(e0, c, bound, cap, usize::MAX)
}

pub fn trace_recording(
    e0: DirectedEdge,
    c: &Configuration,
    bound: &Region,
    cap: u64,
    record_limit: usize,
) -> Trajectory {
    assert!(cap > 0, "trace cap must be positive");
    let g = c.geometry();
    let e0 = e0.canonical(g);
    let mut edges = Vec::new();
    let mut total = 0u64;
    let mut e = e0;
    let mut x_min = e0.from.x;
    let mut x_max = e0.from.x;
    let status = loop {
        total += 1;
        if edges.len() < record_limit {
            edges.push(e);
        }
        let v = e.to(g);
        x_min = x_min.min(v.x);
        x_max = x_max.max(v.x);
        if !bound.contains(v, g) {
            break TraceStatus::Exited;
        }
        let next = DirectedEdge::new(v, reflect(e.heading, c.state(v)));
        if next == e0 {
            break TraceStatus::Closed;
        }
        if total >= cap {
            break TraceStatus::CapExceeded;
        }
        e = next;
    };
    Trajectory {
        geometry: g,
        edges,
        total,
        status,
        initial: e0,
        terminal: e,
        x_range: (x_min, x_max),
    }
}

/// Debug tracer: same loop as [`trace_full`] plus a visited set that checks
/// the bijectivity justification. Returns the trajectory and the first edge
/// repeated other than `e0` (always `None` unless the successor map is
/// broken).
pub fn trace_checked(
    e0: DirectedEdge,
    c: &Configuration,
    bound: &Region,
    cap: u64,
) -> (Trajectory, Option<DirectedEdge>) {
    let g = c.geometry();
    let e0 = e0.canonical(g);
    let mut seen: HashSet<DirectedEdge> = HashSet::new();
    let mut offending = None;
    let mut e = e0;
    loop {
        if !seen.insert(e) {
            if e != e0 {
                offending = Some(e);
            }
            break;
        }
        let v = e.to(g);
        if !bound.contains(v, g) || seen.len() as u64 >= cap {
            break;
        }
        e = successor(e, c);
    }
    (trace_full(e0, c, bound, cap), offending)
}

/// Whether every edge of `t` respects the Manhattan orientations (exactly one
/// of a trajectory and its reverse does, for any trajectory of the Manhattan
/// model).
pub fn is_manhattan(t: &Trajectory) -> bool {
    assert!(t.fully_recorded(), "Manhattan check requires full recording");
    t.edges().iter().all(|&e| manhattan_edge_allowed(e))
}
