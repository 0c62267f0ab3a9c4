//! Hexagonal multi-cell layout, pilot-reuse coloring and user placement.
//!
//! Cells are flat-top hexagons of circumradius `r` with one vertex on the
//! positive x-axis. Centers are generated from axial lattice coordinates
//! `(q, s)`; all geometry is kept in units of the cell radius so that the
//! interference statistics are independent of `r` bit for bit.

use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::ops::{Add, Sub};

use rand::Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Distance from a hexagon's center to the midpoint of an edge, in units of the radius.
pub const APOTHEM: f64 = SQRT_3 / 2.0;

/// Area of a unit-radius hexagon.
pub const HEXAGON_AREA: f64 = 1.5 * SQRT_3;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn scale(self, factor: f64) -> Self {
        Self::new(self.x * factor, self.y * factor)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

/// Axial coordinates on the hexagonal lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Axial {
    pub q: i32,
    pub s: i32,
}

impl Axial {
    pub const NEIGHBORS: [Axial; 6] = [
        Axial { q: 1, s: 0 },
        Axial { q: 0, s: 1 },
        Axial { q: -1, s: 1 },
        Axial { q: -1, s: 0 },
        Axial { q: 0, s: -1 },
        Axial { q: 1, s: -1 },
    ];

    pub fn new(q: i32, s: i32) -> Self {
        Self { q, s }
    }

    /// Ring index around the origin.
    pub fn ring(self) -> u32 {
        ((self.q.abs() + self.s.abs() + (self.q + self.s).abs()) / 2) as u32
    }

    /// Rotation by +60 degrees about the origin.
    pub fn rotate_60(self) -> Self {
        Self::new(-self.s, self.q + self.s)
    }

    /// Reflection across the x-axis.
    pub fn mirror_x(self) -> Self {
        Self::new(self.q, -self.q - self.s)
    }

    /// Center in units of the cell radius.
    pub fn to_unit_point(self) -> Point {
        let q = f64::from(self.q);
        let s = f64::from(self.s);
        Point::new(1.5 * q, SQRT_3 * (s + 0.5 * q))
    }

    fn offset(self, other: Axial) -> Axial {
        Axial::new(self.q + other.q, self.s + other.s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub axial: Axial,
    pub tier: u32,
    /// Center in units of the radius.
    pub unit_center: Point,
}

/// Finite hexagonal grid: the measured cell 0 at the origin plus `tiers` rings.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGrid {
    radius: f64,
    tiers: u32,
    cells: Vec<Cell>,
}

impl CellGrid {
    pub fn new(radius: f64, tiers: u32) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "cell radius must be positive, got {radius}"
            )));
        }
        if tiers == 0 {
            return Err(Error::InvalidArgument(
                "at least one tier of interfering cells is required".into(),
            ));
        }
        let t = tiers as i32;
        let mut coords = Vec::new();
        for q in -t..=t {
            for s in -t..=t {
                let a = Axial::new(q, s);
                if a.ring() <= tiers {
                    coords.push(a);
                }
            }
        }
        let angle = |a: Axial| {
            let p = a.to_unit_point();
            p.y.atan2(p.x).rem_euclid(2.0 * PI)
        };
        coords.sort_by(|a, b| {
            a.ring()
                .cmp(&b.ring())
                .then_with(|| angle(*a).total_cmp(&angle(*b)))
        });
        let cells = coords
            .into_iter()
            .enumerate()
            .map(|(index, axial)| Cell {
                index,
                axial,
                tier: axial.ring(),
                unit_center: axial.to_unit_point(),
            })
            .collect();
        Ok(Self { radius, tiers, cells })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn tiers(&self) -> u32 {
        self.tiers
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, index: usize) -> &Cell {
        &self.cells[index]
    }

    /// Base-station coordinate of `index` in absolute units.
    pub fn center(&self, index: usize) -> Point {
        self.cells[index].unit_center.scale(self.radius)
    }

    pub fn centers(&self) -> Vec<Point> {
        (0..self.len()).map(|i| self.center(i)).collect()
    }

    pub fn index_of(&self, axial: Axial) -> Option<usize> {
        self.cells.iter().position(|c| c.axial == axial)
    }

    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        let (pa, pb) = (self.cells[a].axial, self.cells[b].axial);
        Axial::NEIGHBORS.iter().any(|&n| pa.offset(n) == pb)
    }

    /// Content hash of the normalized layout. Independent of the radius.
    pub fn layout_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.tiers.to_le_bytes());
        for c in &self.cells {
            hasher.update(c.unit_center.x.to_bits().to_le_bytes());
            hasher.update(c.unit_center.y.to_bits().to_le_bytes());
        }
        let digest = hasher.finalize();
        digest[..8].iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    pub fn assign_reuse_coloring(&self, beta: u32) -> Result<ReuseColoring> {
        let reuse = ReuseFactor::new(beta)?;
        let colors = self.cells.iter().map(|c| reuse.color_of(c.axial)).collect();
        Ok(ReuseColoring { reuse, colors })
    }

    /// Plain-text dump, one line per cell: `index x y tier color`.
    pub fn debug_dump(&self, coloring: Option<&ReuseColoring>) -> String {
        let mut out = String::new();
        for c in &self.cells {
            let p = self.center(c.index);
            let color = coloring.map_or(0, |k| k.color(c.index));
            let _ = writeln!(out, "{} {:.6} {:.6} {} {}", c.index, p.x, p.y, c.tier, color);
        }
        out
    }

    /// Uniform position in `cell`, excluding a disk of radius
    /// `min_dist_fraction * r` around its base station.
    pub fn sample_user_position<R: Rng + ?Sized>(
        &self,
        cell: usize,
        min_dist_fraction: f64,
        rng: &mut R,
    ) -> Point {
        self.center(cell) + sample_unit_offset(rng, min_dist_fraction).scale(self.radius)
    }
}

impl fmt::Display for CellGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.debug_dump(None))
    }
}

/// Integer pilot reuse factor realizable as a hexagonal lattice pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ReuseFactor(u32);

impl ReuseFactor {
    pub const SUPPORTED: [u32; 4] = [1, 3, 4, 7];

    pub fn new(beta: u32) -> Result<Self> {
        if Self::SUPPORTED.contains(&beta) {
            Ok(Self(beta))
        } else {
            Err(Error::UnsupportedReuseFactor(beta))
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }

    // Cluster sizes i^2 + ij + j^2 for shifts (1,0), (1,1), (2,0), (2,1). Each color
    // class is a coset of the co-channel sublattice.
    fn color_of(self, a: Axial) -> u32 {
        match self.0 {
            1 => 0,
            3 => (a.q - a.s).rem_euclid(3) as u32,
            4 => (a.q.rem_euclid(2) + 2 * a.s.rem_euclid(2)) as u32,
            7 => (a.q + 3 * a.s).rem_euclid(7) as u32,
            _ => unreachable!("validated in ReuseFactor::new"),
        }
    }
}

impl fmt::Display for ReuseFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Assignment of edge-group pilot subsets to cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReuseColoring {
    reuse: ReuseFactor,
    colors: Vec<u32>,
}

impl ReuseColoring {
    pub fn reuse(&self) -> ReuseFactor {
        self.reuse
    }

    pub fn beta(&self) -> u32 {
        self.reuse.get()
    }

    pub fn colors(&self) -> &[u32] {
        &self.colors
    }

    pub fn color(&self, cell: usize) -> u32 {
        self.colors[cell]
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    /// Cells whose edge users share pilots with the edge users of `cell`, including `cell`.
    pub fn sharing_set(&self, cell: usize) -> Vec<usize> {
        let c = self.colors[cell];
        (0..self.colors.len()).filter(|&l| self.colors[l] == c).collect()
    }
}

pub fn in_unit_hexagon(p: Point) -> bool {
    let (ax, ay) = (p.x.abs(), p.y.abs());
    ay <= APOTHEM && SQRT_3 * ax + ay <= SQRT_3
}

/// Rejection sampler over the hexagon's bounding box; returns an offset from
/// the base station in units of the radius.
pub fn sample_unit_offset<R: Rng + ?Sized>(rng: &mut R, min_dist_fraction: f64) -> Point {
    sample_unit_offset_counted(rng, min_dist_fraction).0
}

/// Like [`sample_unit_offset`], also returning how many candidates were drawn.
pub fn sample_unit_offset_counted<R: Rng + ?Sized>(
    rng: &mut R,
    min_dist_fraction: f64,
) -> (Point, u32) {
    debug_assert!((0.0..1.0).contains(&min_dist_fraction));
    let min_sq = min_dist_fraction * min_dist_fraction;
    let mut draws = 0;
    loop {
        draws += 1;
        let p = Point::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-APOTHEM..APOTHEM),
        );
        if in_unit_hexagon(p) && p.norm_sq() >= min_sq {
            return (p, draws);
        }
    }
}
