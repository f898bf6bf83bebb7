//! Exact probabilities by brute-force weighted enumeration.
//!
//! No transfer matrices, no cleverness: every configuration of a small region
//! is generated in mixed-radix counter order and the event predicate is
//! evaluated on a reused buffer. With a rational `p` the returned probability
//! is exact; with floats the compensated sum carries a reported error bound.
//! Large enumerations are split into fixed counter intervals processed in
//! parallel and merged in index order, so the result never depends on the
//! worker count.

use crate::events::{classify_strip, detect_crossing, detect_pinned_crossing, ClassCounts};
use crate::lattice::{Geometry, Region};
use crate::mirrors::{
    enumeration_bound, Configuration, EnumerationPlan, MirrorError, ModelKind,
};
use crate::weight::{Weight, WeightSum};
use rayon::prelude::*;

/// An exactly computed event probability over a restricted configuration
/// space.
#[derive(Clone, Debug)]
pub struct ExactResult<W> {
    pub probability: W,
    pub config_count: u128,
    pub region: String,
    pub event: String,
    /// Accumulated roundoff bound; `None` for exact arithmetic.
    pub float_error_bound: Option<f64>,
}

const PARALLEL_THRESHOLD: u128 = 1 << 16;
const CHUNKS: u128 = 64;

/// Sum the weights of the configurations of `region` satisfying `event`.
pub fn exact_probability<W, F>(
    region: Region,
    geometry: Geometry,
    model: ModelKind,
    p: W,
    event_name: &str,
    event: F,
) -> Result<ExactResult<W>, MirrorError>
where
    W: Weight,
    F: Fn(&Configuration) -> bool + Sync,
{
    let plan = EnumerationPlan::new(region, geometry, model, p)?;
    let total = plan.total;
    let sum = if total >= PARALLEL_THRESHOLD {
        // fixed chunking, merged in index order: worker count cannot matter
        let bounds: Vec<(u128, u128)> = (0..CHUNKS)
            .map(|i| (total * i / CHUNKS, total * (i + 1) / CHUNKS))
            .collect();
        let partials: Vec<W> = bounds
            .par_iter()
            .map(|&(lo, hi)| {
                let mut cursor = plan.cursor_at(lo);
                let mut acc = WeightSum::<W>::new();
                for _ in lo..hi {
                    if event(&cursor.config) {
                        acc.add(plan.weight_by_empty[cursor.empty_count].clone());
                    }
                    cursor.advance(&plan);
                }
                acc.total()
            })
            .collect();
        let mut acc = WeightSum::<W>::new();
        for part in partials {
            acc.add(part);
        }
        acc.total()
    } else {
        let mut cursor = plan.cursor_at(0);
        let mut acc = WeightSum::<W>::new();
        for _ in 0..total {
            if event(&cursor.config) {
                acc.add(plan.weight_by_empty[cursor.empty_count].clone());
            }
            cursor.advance(&plan);
        }
        acc.total()
    };
    Ok(ExactResult {
        probability: sum,
        config_count: total,
        region: region.to_string(),
        event: event_name.to_string(),
        float_error_bound: W::unit_roundoff().map(|u| 2.0 * u * total as f64),
    })
}

/// Exact probabilities of the pinned column-to-column crossings of the
/// rectangle `{1..m} x {1..rows}`, plus the probability of their union and of
/// the plain crossing event computed through the independent detector route.
#[derive(Clone, Debug)]
pub struct PairTable<W> {
    pub m: usize,
    pub probs: Vec<Vec<W>>,
    pub union_prob: W,
    pub crossing_prob: W,
    pub config_count: u128,
}

impl<W: Weight> PairTable<W> {
    pub fn is_symmetric(&self) -> bool {
        (0..self.m).all(|i| (0..self.m).all(|j| self.probs[i][j] == self.probs[j][i]))
    }
}

pub fn exact_pair_table<W: Weight>(
    m: i64,
    rows: i64,
    model: ModelKind,
    p: W,
) -> Result<PairTable<W>, MirrorError> {
    let region = Region::rectangle((1, m), (1, rows));
    let plan = EnumerationPlan::new(region, Geometry::Plane, model, p)?;
    let mut cursor = plan.cursor_at(0);
    let msize = m as usize;
    let mut probs = vec![vec![WeightSum::<W>::new(); msize]; msize];
    let mut union = WeightSum::<W>::new();
    let mut crossing = WeightSum::<W>::new();
    for _ in 0..plan.total {
        let w = plan.weight_by_empty[cursor.empty_count].clone();
        let mut any = false;
        for i in 1..=m {
            for j in 1..=m {
                if detect_pinned_crossing(&cursor.config, (1, m), (1, rows), i, j).holds {
                    probs[(i - 1) as usize][(j - 1) as usize].add(w.clone());
                    any = true;
                }
            }
        }
        if any {
            union.add(w.clone());
        }
        if detect_crossing(&cursor.config, (1, m), (1, rows), false).holds {
            crossing.add(w);
        }
        cursor.advance(&plan);
    }
    Ok(PairTable {
        m: msize,
        probs: probs.into_iter().map(|row| row.into_iter().map(|s| s.total()).collect()).collect(),
        union_prob: union.total(),
        crossing_prob: crossing.total(),
        config_count: plan.total,
    })
}

/// Outcome of an exhaustive per-configuration parity audit of a strip.
#[derive(Clone, Debug)]
pub struct ParityReport {
    pub model: ModelKind,
    pub circumference: u32,
    pub strip_len: i64,
    pub configs_checked: u128,
    pub passed: bool,
    /// First violating configuration and its counts, if any.
    pub counterexample: Option<(Configuration, ClassCounts)>,
}

/// Enumerate every configuration of the strip `{1..=strip_len} x (Z/wZ)` and
/// check the crossing-count laws: the left-right count has the parity of `w`
/// (Lorentz), and the street-legal left-right and right-left counts agree
/// (Manhattan).
pub fn exact_parity_check(
    w: u32,
    strip_len: i64,
    model: ModelKind,
) -> Result<ParityReport, MirrorError> {
    let region = Region::Band { lo: 0, hi: strip_len };
    let geometry = Geometry::cylinder(w);
    let cells = region.point_count(geometry);
    if cells > enumeration_bound(model) {
        return Err(MirrorError::EnumerationTooLarge { cells, max: enumeration_bound(model) });
    }
    let plan = EnumerationPlan::new(region, geometry, model, 0.5f64)?;
    let mut cursor = plan.cursor_at(0);
    let mut counterexample = None;
    for _ in 0..plan.total {
        let classes = classify_strip(&cursor.config, strip_len);
        let ok = match model {
            ModelKind::Lorentz => {
                classes.counts().left_right % 2 == (w as usize) % 2
            }
            ModelKind::Manhattan => {
                let mc = classes.manhattan_counts();
                mc.left_right == mc.right_left
            }
        };
        if !ok {
            counterexample = Some((cursor.config.clone(), classes.counts()));
            break;
        }
        cursor.advance(&plan);
    }
    Ok(ParityReport {
        model,
        circumference: w,
        strip_len,
        configs_checked: plan.total,
        passed: counterexample.is_none(),
        counterexample,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::detect_winding;
    use crate::weight::Weight;
    use crate::Rational;

    #[test]
    fn single_cell_crossing_probability() {
        // the single-vertex rectangle crosses iff the vertex is empty
        let r = exact_probability(
            Region::rectangle((1, 1), (1, 1)),
            Geometry::Plane,
            ModelKind::Lorentz,
            Rational::from_ratio(1, 2),
            "crossing 1x1",
            |c| detect_crossing(c, (1, 1), (1, 1), false).holds,
        )
        .unwrap();
        assert_eq!(r.probability, Rational::from_ratio(1, 2));
        assert_eq!(r.config_count, 3);
        assert!(r.float_error_bound.is_none());

        let manhattan = exact_probability(
            Region::rectangle((2, 2), (1, 1)),
            Geometry::Plane,
            ModelKind::Manhattan,
            Rational::from_ratio(1, 3),
            "crossing column 2",
            |c| detect_pinned_crossing(c, (2, 2), (1, 1), 2, 2).holds,
        )
        .unwrap();
        assert_eq!(manhattan.probability, Rational::from_ratio(2, 3));
        assert_eq!(manhattan.config_count, 2);
    }

    #[test]
    fn event_and_complement_sum_to_one() {
        let region = Region::rectangle((1, 2), (1, 2));
        let p = Rational::from_ratio(2, 7);
        let ev = |c: &Configuration| detect_crossing(c, (1, 2), (1, 2), false).holds;
        let yes = exact_probability(region, Geometry::Plane, ModelKind::Lorentz, p.clone(), "e", ev)
            .unwrap();
        let no = exact_probability(region, Geometry::Plane, ModelKind::Lorentz, p, "not e", |c| {
            !ev(c)
        })
        .unwrap();
        assert_eq!(yes.probability + no.probability, Rational::from_ratio(1, 1));
    }

    #[test]
    fn pair_table_symmetry_and_union_identity() {
        for p in [Rational::from_ratio(1, 3), Rational::from_ratio(1, 2)] {
            let t = exact_pair_table(2, 1, ModelKind::Lorentz, p).unwrap();
            assert!(t.is_symmetric());
            assert_eq!(t.union_prob, t.crossing_prob);
        }
        let t = exact_pair_table(2, 2, ModelKind::Manhattan, Rational::from_ratio(1, 2)).unwrap();
        assert!(t.is_symmetric());
        assert_eq!(t.union_prob, t.crossing_prob);
    }

    #[test]
    fn parity_reports() {
        let lorentz_even = exact_parity_check(2, 3, ModelKind::Lorentz).unwrap();
        assert!(lorentz_even.passed);
        assert_eq!(lorentz_even.configs_checked, 729);

        let lorentz_odd = exact_parity_check(3, 2, ModelKind::Lorentz).unwrap();
        assert!(lorentz_odd.passed);
        assert_eq!(lorentz_odd.configs_checked, 729);

        let manhattan = exact_parity_check(2, 4, ModelKind::Manhattan).unwrap();
        assert!(manhattan.passed);
        assert_eq!(manhattan.configs_checked, 256);
    }

    #[test]
    fn oversize_refused() {
        assert!(matches!(
            exact_parity_check(4, 6, ModelKind::Lorentz),
            Err(MirrorError::EnumerationTooLarge { cells: 24, max: 20 })
        ));
    }

    #[test]
    fn float_route_agrees_with_rational_route() {
        let region = Region::rectangle((1, 2), (1, 2));
        let ev = |c: &Configuration| detect_crossing(c, (1, 2), (1, 2), true).holds;
        let exact = exact_probability(
            region,
            Geometry::Plane,
            ModelKind::Lorentz,
            Rational::from_ratio(2, 5),
            "e'",
            ev,
        )
        .unwrap();
        let float =
            exact_probability(region, Geometry::Plane, ModelKind::Lorentz, 0.4f64, "e'", ev)
                .unwrap();
        assert!((float.probability - exact.probability.to_f64()).abs() < 1e-12);
        assert!(float.float_error_bound.unwrap() > 0.0);
    }

    #[test]
    fn exact_winding_probability_on_tiny_band() {
        // a cylinder band with some empty column always winds; cross-check the
        // enumeration against direct reasoning at p where mirrors are rare
        let region = Region::Band { lo: 0, hi: 2 };
        let g = Geometry::cylinder(2);
        let r = exact_probability(
            region,
            g,
            ModelKind::Lorentz,
            Rational::from_ratio(1, 2),
            "winding band 0..2",
            |c| detect_winding(c, 3, (0, 2)).unwrap().holds,
        )
        .unwrap();
        assert_eq!(r.config_count, 81);
        // sanity: between the empty-column lower bound and certainty
        let lower = Rational::from_ratio(7, 16); // P(some column fully empty)
        assert!(r.probability >= lower);
        assert!(r.probability < Rational::from_ratio(1, 1));
    }
}
