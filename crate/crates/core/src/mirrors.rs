//! Mirror configurations: the quenched disorder both models run on.
//!
//! A [`Configuration`] assigns each vertex of a finite support region one of
//! `{Empty, NW, NE}`, stored as a dense 2-bit array over the support's
//! bounding box so the tracer gets O(1) state lookups. Vertices outside the
//! support read `Empty`. Configurations are immutable; [`Configuration::mutate`]
//! returns a fresh value.
//!
//! Sampling under `P_p` is counter-based (see [`crate::seeding`]): the state
//! of vertex `(x, y)` depends only on `(seed, x, y)`, which makes samples
//! reproducible, order-independent, and restriction-consistent.

use crate::lattice::{Geometry, LatticePoint, Region};
use crate::seeding;
use crate::weight::Weight;
use std::fmt;
use thiserror::Error;

/// Per-vertex mirror state. `NE` is the `/` diagonal (E<->N, W<->S), `NW` is
/// the `\` diagonal (E<->S, W<->N).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, serde::Serialize, serde::Deserialize)]
pub enum MirrorState {
    Empty,
    NW,
    NE,
}

impl MirrorState {
    pub const ALL: [MirrorState; 3] = [MirrorState::Empty, MirrorState::NW, MirrorState::NE];

    fn to_bits(self) -> u64 {
        match self {
            MirrorState::Empty => 0,
            MirrorState::NW => 1,
            MirrorState::NE => 2,
        }
    }

    fn from_bits(b: u64) -> MirrorState {
        match b {
            1 => MirrorState::NW,
            2 => MirrorState::NE,
            _ => MirrorState::Empty,
        }
    }
}

impl fmt::Display for MirrorState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MirrorState::Empty => write!(f, "Empty"),
            MirrorState::NW => write!(f, "NW"),
            MirrorState::NE => write!(f, "NE"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lorentz,
    Manhattan,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Lorentz => write!(f, "lorentz"),
            ModelKind::Manhattan => write!(f, "manhattan"),
        }
    }
}

/// Where a configuration came from; enough to reproduce it.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Provenance {
    Seeded { seed: u64, sampler: &'static str },
    Handcrafted,
}

/// Version tag of the counter-based sampler.
pub const SAMPLER_VERSION: &str = "splitmix-v1";

#[derive(Error, Debug)]
pub enum MirrorError {
    #[error("probability must lie in [0, 1], got {0}")]
    BadProbability(f64),
    #[error("the Manhattan model requires an even cylinder circumference, got {0}")]
    OddManhattanCircumference(u32),
    #[error("Manhattan orientation at {0} must be {1}, requested {2}")]
    ManhattanParity(LatticePoint, MirrorState, MirrorState),
    #[error("vertex {0} lies outside the configuration support")]
    OutsideSupport(LatticePoint),
    #[error("enumeration over {cells} cells exceeds the bound of {max} for this model")]
    EnumerationTooLarge { cells: usize, max: usize },
    #[error("vertical reflection requires a rectangle support")]
    ReflectNeedsRectangle,
    #[error("Manhattan vertical reflection requires an even row count (rows {0}..={1})")]
    ReflectOddManhattan(i64, i64),
    #[error("malformed configuration file: {0}")]
    Parse(String),
}

/// The parity-forced orientation of a Manhattan mirror at `v`.
pub fn manhattan_orientation(v: LatticePoint) -> MirrorState {
    if (v.x - v.y).rem_euclid(2) == 0 {
        MirrorState::NW
    } else {
        MirrorState::NE
    }
}

/// A finite mirror assignment together with its geometry, model kind, and
/// sampling parameters.
#[derive(Clone, PartialEq, Debug)]
pub struct Configuration {
    geometry: Geometry,
    model: ModelKind,
    support: Region,
    p: f64,
    provenance: Provenance,
    // dense 2-bit storage over the support bounding box
    x0: i64,
    y0: i64,
    width: i64,
    height: i64,
    words: Vec<u64>,
}

impl Configuration {
    fn validate(geometry: Geometry, model: ModelKind, p: f64) -> Result<(), MirrorError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(MirrorError::BadProbability(p));
        }
        if model == ModelKind::Manhattan {
            if let Some(w) = geometry.circumference() {
                if w % 2 != 0 {
                    return Err(MirrorError::OddManhattanCircumference(w));
                }
            }
        }
        Ok(())
    }

    /// An all-empty configuration over `support`.
    pub fn empty(
        geometry: Geometry,
        model: ModelKind,
        support: Region,
        p: f64,
    ) -> Result<Self, MirrorError> {
        Self::validate(geometry, model, p)?;
        let (x0, x1, y0, y1) = support.bounding_box(geometry);
        let width = x1 - x0 + 1;
        let height = y1 - y0 + 1;
        let cells = (width * height) as usize;
        Ok(Configuration {
            geometry,
            model,
            support,
            p,
            provenance: Provenance::Handcrafted,
            x0,
            y0,
            width,
            height,
            words: vec![0; cells.div_ceil(32)],
        })
    }

    /// Sample a configuration under the product law: each vertex of `region`
    /// carries a mirror with probability `p`; Lorentz orientation is a fair
    /// coin, Manhattan orientation is forced by vertex parity.
    pub fn sample(
        region: Region,
        geometry: Geometry,
        model: ModelKind,
        p: f64,
        seed: u64,
    ) -> Result<Self, MirrorError> {
        let mut cfg = Self::empty(geometry, model, region, p)?;
        cfg.provenance = Provenance::Seeded { seed, sampler: SAMPLER_VERSION };
        for v in region.points(geometry) {
            let draw = seeding::vertex_draw(seed, v.x, v.y);
            if seeding::unit_f64(draw) < p {
                let s = match model {
                    ModelKind::Lorentz => {
                        if draw & 1 == 0 {
                            MirrorState::NW
                        } else {
                            MirrorState::NE
                        }
                    }
                    ModelKind::Manhattan => manhattan_orientation(v),
                };
                cfg.set_state(v, s);
            }
        }
        Ok(cfg)
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn model(&self) -> ModelKind {
        self.model
    }

    pub fn support(&self) -> Region {
        self.support
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    #[inline]
    fn index_of(&self, p: LatticePoint) -> Option<usize> {
        let dx = p.x - self.x0;
        let dy = p.y - self.y0;
        if dx < 0 || dy < 0 || dx >= self.width || dy >= self.height {
            None
        } else {
            Some((dx * self.height + dy) as usize)
        }
    }

    /// Mirror state at `p`; `Empty` outside the stored box.
    #[inline]
    pub fn state(&self, p: LatticePoint) -> MirrorState {
        let p = self.geometry.canonical(p);
        match self.index_of(p) {
            None => MirrorState::Empty,
            Some(i) => {
                let bits = (self.words[i >> 5] >> ((i & 31) * 2)) & 0b11;
                MirrorState::from_bits(bits)
            }
        }
    }

    #[inline]
    pub(crate) fn set_state(&mut self, p: LatticePoint, s: MirrorState) {
        let p = self.geometry.canonical(p);
        let i = self.index_of(p).expect("set_state outside storage box");
        let shift = (i & 31) * 2;
        let word = &mut self.words[i >> 5];
        *word = (*word & !(0b11 << shift)) | (s.to_bits() << shift);
    }

    /// A copy of `self` differing exactly at `v`. Manhattan configurations
    /// reject orientations that violate the parity rule.
    pub fn mutate(&self, v: LatticePoint, s: MirrorState) -> Result<Self, MirrorError> {
        let v = self.geometry.canonical(v);
        if !self.support.contains(v, self.geometry) {
            return Err(MirrorError::OutsideSupport(v));
        }
        if self.model == ModelKind::Manhattan && s != MirrorState::Empty {
            let forced = manhattan_orientation(v);
            if s != forced {
                return Err(MirrorError::ManhattanParity(v, forced, s));
            }
        }
        let mut next = self.clone();
        next.set_state(v, s);
        Ok(next)
    }

    /// Non-empty vertices in row-major ascending order.
    pub fn mirrors(&self) -> impl Iterator<Item = (LatticePoint, MirrorState)> + '_ {
        let g = self.geometry;
        self.support.points(g).filter_map(move |v| {
            let s = self.state(v);
            (s != MirrorState::Empty).then_some((v, s))
        })
    }

    pub fn mirror_count(&self) -> usize {
        self.mirrors().count()
    }

    /// Vertices at which two configurations disagree (union of supports).
    pub fn diff(&self, other: &Configuration) -> Vec<LatticePoint> {
        let mut out: Vec<LatticePoint> = Vec::new();
        for v in self.support.points(self.geometry) {
            if self.state(v) != other.state(v) {
                out.push(v);
            }
        }
        for v in other.support.points(other.geometry) {
            if self.state(v) != other.state(v) && !out.contains(&v) {
                out.push(v);
            }
        }
        out.sort();
        out
    }

    /// True when every mirror respects the Manhattan parity rule.
    pub fn manhattan_consistent(&self) -> bool {
        self.mirrors().all(|(v, s)| s == manhattan_orientation(v))
    }

    /// Reflect a rectangle-supported configuration across the horizontal
    /// midline of its rows, swapping NW and NE. An involution that preserves
    /// per-configuration weight. Manhattan configurations require an even row
    /// count, otherwise the image violates the parity rule.
    pub fn reflect_vertical(&self) -> Result<Self, MirrorError> {
        let Region::Rectangle { cols: _, rows } = self.support else {
            return Err(MirrorError::ReflectNeedsRectangle);
        };
        if self.model == ModelKind::Manhattan && (rows.0 + rows.1).rem_euclid(2) == 0 {
            return Err(MirrorError::ReflectOddManhattan(rows.0, rows.1));
        }
        let mut out = Self::empty(self.geometry, self.model, self.support, self.p)?;
        out.provenance = self.provenance.clone();
        for (v, s) in self.mirrors() {
            let image = LatticePoint::new(v.x, rows.0 + rows.1 - v.y);
            let swapped = match s {
                MirrorState::NW => MirrorState::NE,
                MirrorState::NE => MirrorState::NW,
                MirrorState::Empty => unreachable!(),
            };
            out.set_state(image, swapped);
        }
        Ok(out)
    }

    /// Probability of this exact configuration restricted to its support,
    /// as a weight scalar built from the per-vertex law.
    pub fn weight<W: Weight>(&self, p: W) -> W {
        let empty_w = W::one() - p.clone();
        let mirror_w = match self.model {
            ModelKind::Lorentz => p / W::from_ratio(2, 1),
            ModelKind::Manhattan => p,
        };
        let mut w = W::one();
        for v in self.support.points(self.geometry) {
            w = w * if self.state(v) == MirrorState::Empty {
                empty_w.clone()
            } else {
                mirror_w.clone()
            };
        }
        w
    }

    /// Text form: a header line, then one `x y <NW|NE>` line per mirror in
    /// row-major order. Round-trips bit-exactly.
    pub fn to_text(&self) -> String {
        let seed = match &self.provenance {
            Provenance::Seeded { seed, .. } => seed.to_string(),
            Provenance::Handcrafted => "handcrafted".to_string(),
        };
        let mut out = format!(
            "model={} geometry={} p={} seed={}\n",
            self.model, self.geometry, self.p, seed
        );
        for (v, s) in self.mirrors() {
            out.push_str(&format!("{} {} {}\n", v.x, v.y, s));
        }
        out
    }

    /// Parse the text form. The support of the parsed configuration is the
    /// bounding rectangle of the listed mirrors.
    pub fn from_text(text: &str) -> Result<Self, MirrorError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| MirrorError::Parse("empty file".into()))?;
        let mut model = None;
        let mut geometry = None;
        let mut p = None;
        let mut provenance = None;
        for field in header.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| MirrorError::Parse(format!("bad header field `{field}`")))?;
            match key {
                "model" => {
                    model = Some(match value {
                        "lorentz" => ModelKind::Lorentz,
                        "manhattan" => ModelKind::Manhattan,
                        other => return Err(MirrorError::Parse(format!("unknown model `{other}`"))),
                    })
                }
                "geometry" => {
                    geometry = Some(if value == "plane" {
                        Geometry::Plane
                    } else if let Some(w) = value.strip_prefix("cylinder:") {
                        Geometry::Cylinder {
                            circumference: w.parse().map_err(|_| {
                                MirrorError::Parse(format!("bad circumference `{w}`"))
                            })?,
                        }
                    } else {
                        return Err(MirrorError::Parse(format!("unknown geometry `{value}`")));
                    })
                }
                "p" => {
                    p = Some(
                        value
                            .parse::<f64>()
                            .map_err(|_| MirrorError::Parse(format!("bad p `{value}`")))?,
                    )
                }
                "seed" => {
                    provenance = Some(if value == "handcrafted" {
                        Provenance::Handcrafted
                    } else {
                        Provenance::Seeded {
                            seed: value
                                .parse()
                                .map_err(|_| MirrorError::Parse(format!("bad seed `{value}`")))?,
                            sampler: SAMPLER_VERSION,
                        }
                    })
                }
                other => return Err(MirrorError::Parse(format!("unknown header key `{other}`"))),
            }
        }
        let model = model.ok_or_else(|| MirrorError::Parse("missing model".into()))?;
        let geometry = geometry.ok_or_else(|| MirrorError::Parse("missing geometry".into()))?;
        let p = p.ok_or_else(|| MirrorError::Parse("missing p".into()))?;
        let provenance = provenance.ok_or_else(|| MirrorError::Parse("missing seed".into()))?;

        let mut entries: Vec<(LatticePoint, MirrorState)> = Vec::new();
        for line in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(MirrorError::Parse(format!("bad mirror line `{line}`")));
            }
            let x: i64 =
                parts[0].parse().map_err(|_| MirrorError::Parse(format!("bad x `{}`", parts[0])))?;
            let y: i64 =
                parts[1].parse().map_err(|_| MirrorError::Parse(format!("bad y `{}`", parts[1])))?;
            let s = match parts[2] {
                "NW" => MirrorState::NW,
                "NE" => MirrorState::NE,
                other => return Err(MirrorError::Parse(format!("bad state `{other}`"))),
            };
            entries.push((geometry.canonical(LatticePoint::new(x, y)), s));
        }
        let support = if entries.is_empty() {
            Region::rectangle((0, 0), (0, 0))
        } else {
            let xs = entries.iter().map(|(v, _)| v.x);
            let ys = entries.iter().map(|(v, _)| v.y);
            Region::rectangle(
                (xs.clone().min().unwrap(), xs.max().unwrap()),
                (ys.clone().min().unwrap(), ys.max().unwrap()),
            )
        };
        let mut cfg = Self::empty(geometry, model, support, p)?;
        cfg.provenance = provenance;
        for (v, s) in entries {
            if model == ModelKind::Manhattan && s != manhattan_orientation(v) {
                return Err(MirrorError::ManhattanParity(v, manhattan_orientation(v), s));
            }
            cfg.set_state(v, s);
        }
        Ok(cfg)
    }
}

/// Enumeration bounds: `3^20` Lorentz states, `2^32` Manhattan states.
pub fn enumeration_bound(model: ModelKind) -> usize {
    match model {
        ModelKind::Lorentz => 20,
        ModelKind::Manhattan => 32,
    }
}

fn states_for(model: ModelKind, v: LatticePoint) -> [MirrorState; 3] {
    match model {
        ModelKind::Lorentz => [MirrorState::Empty, MirrorState::NW, MirrorState::NE],
        // digit 1 is the parity-forced orientation; digit 2 unused
        ModelKind::Manhattan => [MirrorState::Empty, manhattan_orientation(v), MirrorState::Empty],
    }
}

/// Walk all configurations of `region` in mixed-radix counter order over
/// row-major vertices, least-significant digit last. The closure receives a
/// reused configuration buffer plus its exact weight; no per-configuration
/// allocation happens. Returns the number of configurations visited.
pub fn for_each_configuration<W, F>(
    region: Region,
    geometry: Geometry,
    model: ModelKind,
    p: W,
    mut visit: F,
) -> Result<u128, MirrorError>
where
    W: Weight,
    F: FnMut(&Configuration, &W),
{
    let plan = EnumerationPlan::new(region, geometry, model, p)?;
    let mut cursor = plan.cursor_at(0);
    let total = plan.total;
    for _ in 0..total {
        visit(&cursor.config, &plan.weight_by_empty[cursor.empty_count]);
        cursor.advance(&plan);
    }
    Ok(total)
}

/// Precomputed enumeration layout shared by sequential and partitioned walks.
pub(crate) struct EnumerationPlan<W: Weight> {
    pub region: Region,
    pub vertices: Vec<LatticePoint>,
    pub radix: u128,
    pub total: u128,
    pub geometry: Geometry,
    pub model: ModelKind,
    pub p: W,
    /// weight of a configuration as a function of its Empty-vertex count
    pub weight_by_empty: Vec<W>,
}

impl<W: Weight> EnumerationPlan<W> {
    pub fn new(
        region: Region,
        geometry: Geometry,
        model: ModelKind,
        p: W,
    ) -> Result<Self, MirrorError> {
        Configuration::validate(geometry, model, p.to_f64().clamp(0.0, 1.0))?;
        let vertices: Vec<LatticePoint> = region.points(geometry).collect();
        let cells = vertices.len();
        let max = enumeration_bound(model);
        if cells > max {
            return Err(MirrorError::EnumerationTooLarge { cells, max });
        }
        let radix: u128 = match model {
            ModelKind::Lorentz => 3,
            ModelKind::Manhattan => 2,
        };
        let total = radix.pow(cells as u32);
        let empty_w = W::one() - p.clone();
        let mirror_w = match model {
            ModelKind::Lorentz => p.clone() / W::from_ratio(2, 1),
            ModelKind::Manhattan => p.clone(),
        };
        // weight_by_empty[k] = (1-p)^k * mirror_w^(cells-k)
        let mut weight_by_empty = vec![W::one(); cells + 1];
        for k in 0..=cells {
            let mut w = W::one();
            for _ in 0..k {
                w = w * empty_w.clone();
            }
            for _ in 0..(cells - k) {
                w = w * mirror_w.clone();
            }
            weight_by_empty[k] = w;
        }
        Ok(EnumerationPlan { region, vertices, radix, total, geometry, model, p, weight_by_empty })
    }

    /// Cursor positioned at linear index `index` (big-endian digit decode).
    pub fn cursor_at(&self, index: u128) -> EnumCursor {
        let cells = self.vertices.len();
        let mut digits = vec![0u8; cells];
        let mut rest = index;
        for i in (0..cells).rev() {
            digits[i] = (rest % self.radix) as u8;
            rest /= self.radix;
        }
        let mut config = Configuration::empty(
            self.geometry,
            self.model,
            self.region,
            self.p.to_f64().clamp(0.0, 1.0),
        )
        .expect("validated in plan");
        let mut empty_count = 0;
        for (i, &d) in digits.iter().enumerate() {
            let v = self.vertices[i];
            let s = states_for(self.model, v)[d as usize];
            config.set_state(v, s);
            if s == MirrorState::Empty {
                empty_count += 1;
            }
        }
        EnumCursor { config, digits, empty_count }
    }
}

pub(crate) struct EnumCursor {
    pub config: Configuration,
    digits: Vec<u8>,
    pub empty_count: usize,
}

impl EnumCursor {
    /// Mixed-radix increment; amortized O(1) cell updates.
    pub fn advance<W: Weight>(&mut self, plan: &EnumerationPlan<W>) {
        let radix = plan.radix as u8;
        for i in (0..self.digits.len()).rev() {
            let v = plan.vertices[i];
            let states = states_for(plan.model, v);
            let old = states[self.digits[i] as usize];
            if self.digits[i] + 1 < radix {
                self.digits[i] += 1;
                let new = states[self.digits[i] as usize];
                self.config.set_state(v, new);
                self.bump_empty(old, new);
                return;
            }
            self.digits[i] = 0;
            let new = states[0];
            self.config.set_state(v, new);
            self.bump_empty(old, new);
        }
    }

    fn bump_empty(&mut self, old: MirrorState, new: MirrorState) {
        if old == MirrorState::Empty && new != MirrorState::Empty {
            self.empty_count -= 1;
        } else if old != MirrorState::Empty && new == MirrorState::Empty {
            self.empty_count += 1;
        }
    }
}

/// Iterator form of the exhaustive weighted enumeration; yields owned
/// configurations. Weights sum to one exactly (rational `W`) or within
/// accumulated roundoff (float `W`).
pub fn enumerate<W: Weight>(
    region: Region,
    geometry: Geometry,
    model: ModelKind,
    p: W,
) -> Result<impl Iterator<Item = (Configuration, W)>, MirrorError> {
    let plan = EnumerationPlan::new(region, geometry, model, p)?;
    let mut cursor = plan.cursor_at(0);
    let total = plan.total;
    let mut produced = 0u128;
    Ok(std::iter::from_fn(move || {
        if produced >= total {
            return None;
        }
        produced += 1;
        let item = (cursor.config.clone(), plan.weight_by_empty[cursor.empty_count].clone());
        cursor.advance(&plan);
        Some(item)
    }))
}
