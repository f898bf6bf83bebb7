use mirror_model::events::{detect_annulus_escape, annulus_traversal_index};
use mirror_model::lattice::{DirectedEdge, Direction, Geometry, LatticePoint, Region};
use mirror_model::mirrors::{Configuration, ModelKind};
use mirror_model::tracer::{trace_full, TraceStatus};
use std::time::Instant;

fn main() {
    // tamed-box scale probe: m = 1001, sample on Q_{m+200}, p = 0.04
    let m = 1001i64;
    let t0 = Instant::now();
    let region = Region::origin_box(m + 200);
    let c = Configuration::sample(region, Geometry::Plane, ModelKind::Lorentz, 0.04, 12).unwrap();
    println!("sample Q_{}: {:?}", m + 200, t0.elapsed());

    let t0 = Instant::now();
    let bound = Region::origin_box(m + 100);
    let mut escape = None;
    'outer: for v in Region::origin_box(1).points(Geometry::Plane) {
        for d in Direction::ALL {
            let t = trace_full(DirectedEdge::new(v, d), &c, &bound, 4_000_000);
            if t.status() == TraceStatus::Exited {
                escape = Some(t);
                break 'outer;
            }
        }
    }
    let t = escape.expect("escaping trajectory");
    println!("escape trace: {} edges, {:?}", t.len(), t0.elapsed());

    // box path: count boxes and time the taming checks
    let t0 = Instant::now();
    let mut boxes: Vec<(i64, i64)> = Vec::new();
    for v in t.vertex_sequence() {
        let bx = (v.x as f64 / 50.0).round() as i64;
        let by = (v.y as f64 / 50.0).round() as i64;
        if boxes.last() != Some(&(bx, by)) {
            boxes.push((bx, by));
        }
        if bx.abs().max(by.abs()) * 50 > m {
            break;
        }
    }
    println!("box path length (dedup consecutive): {}", boxes.len());
    let mut steps = 0u64;
    for &(bx, by) in &boxes {
        let out = detect_annulus_escape(&c, LatticePoint::new(50 * bx, 50 * by), 40);
        steps += out.steps_used;
        assert!(out.holds, "box ({bx},{by}) not tamed");
    }
    println!("taming checks: {:?}, total steps {}", t0.elapsed(), steps);

    // annulus traversal rejection rate at n=1
    let t0 = Instant::now();
    let mut ok = 0;
    for seed in 0..200u64 {
        let p = [0.05, 0.1, 0.2][(seed % 3) as usize];
        let c = Configuration::sample(Region::origin_box(41), Geometry::Plane, ModelKind::Lorentz, p, seed).unwrap();
        let esc = detect_annulus_escape(&c, LatticePoint::new(0, 0), 40);
        if !esc.holds { continue; }
        let w = esc.witness.unwrap();
        if annulus_traversal_index(&w, 1).unwrap().is_some() { ok += 1; } else { panic!("no traversal"); }
    }
    println!("annulus traversal: {ok}/200 escaping configs, {:?}", t0.elapsed());
}
