//! Deterministic quadrature for the group moments, independent of the
//! Monte-Carlo path.
//!
//! A user at distance `s` from its base station belongs to the interior
//! group of `m` out of `K` i.i.d. users with probability
//! `P[Binomial(K - 1, F(s)) <= m - 1]`, where `F` is the distance CDF of the
//! uniform law on the hexagon minus the exclusion disk. The moments follow
//! from integrating the relative strength against that inclusion weight in
//! polar coordinates around the serving base station. Each 60 degree sector
//! is bounded by one hexagon edge; it is split at the edge normal and, in
//! radius, at the apothem where `F` has a kink, so every panel integrand is
//! smooth and Gauss-Legendre converges quickly.

use std::f64::consts::PI;

use gauss_quad::GaussLegendre;
use statrs::distribution::{Binomial, DiscreteCDF};

use super::{GroupMoments, GroupStatistics, Method, Provenance, UserSplit};
use crate::error::{Error, Result};
use crate::geometry::{CellGrid, Point, APOTHEM, HEXAGON_AREA};
use crate::propagation::PropagationModel;

const MIN_RESOLUTION: usize = 4;
const CDF_NODES: usize = 40;

/// Distance-to-base-station law of a user uniform on a unit hexagon minus a
/// disk of radius `min_dist`.
#[derive(Debug, Clone)]
pub struct DistanceLaw {
    min_dist: f64,
    area: f64,
    rule: GaussLegendre,
}

impl DistanceLaw {
    pub fn new(min_dist: f64) -> Result<Self> {
        if !(0.0..APOTHEM).contains(&min_dist) {
            return Err(Error::InvalidArgument(format!(
                "exclusion radius {min_dist} must lie in [0, apothem)"
            )));
        }
        Ok(Self {
            min_dist,
            area: HEXAGON_AREA - PI * min_dist * min_dist,
            rule: GaussLegendre::new(CDF_NODES).expect("degree >= 2"),
        })
    }

    /// Area of the support.
    pub fn area(&self) -> f64 {
        self.area
    }

    /// Length of the circle of radius `t` that lies inside the hexagon.
    pub fn arc_length(t: f64) -> f64 {
        if t <= APOTHEM {
            2.0 * PI * t
        } else if t >= 1.0 {
            0.0
        } else {
            t * (2.0 * PI - 12.0 * (APOTHEM / t).acos())
        }
    }

    /// Area of the support closer than `s` to the base station.
    pub fn area_within(&self, s: f64) -> f64 {
        let d2 = self.min_dist * self.min_dist;
        if s <= self.min_dist {
            0.0
        } else if s <= APOTHEM {
            PI * (s * s - d2)
        } else {
            let s = s.min(1.0);
            // t = a + v^2 removes the square-root onset of the edge cut
            let tail = self.rule.integrate(0.0, (s - APOTHEM).sqrt(), |v| {
                Self::arc_length(APOTHEM + v * v) * 2.0 * v
            });
            PI * (APOTHEM * APOTHEM - d2) + tail
        }
    }

    pub fn cdf(&self, s: f64) -> f64 {
        (self.area_within(s) / self.area).clamp(0.0, 1.0)
    }
}

/// Inclusion probability of a user at CDF level `f` in the `m` closest of `k`.
fn interior_weight(k: usize, m: usize, f: f64) -> f64 {
    if m == 0 {
        return 0.0;
    }
    if m >= k {
        return 1.0;
    }
    Binomial::new(f, (k - 1) as u64)
        .expect("probability in [0, 1]")
        .cdf((m - 1) as u64)
}

struct Node {
    offset: Point,
    // area element divided by the support area
    weight: f64,
    interior: f64,
}

fn polar_nodes(law: &DistanceLaw, split: Option<UserSplit>, resolution: usize) -> Result<Vec<Node>> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::InvalidArgument(format!(
            "quadrature resolution {resolution} is too coarse, need at least {MIN_RESOLUTION}"
        )));
    }
    let rule = GaussLegendre::new(resolution).expect("degree >= 2");
    let pairs = rule.as_node_weight_pairs();
    let map = |a: f64, b: f64| {
        pairs
            .iter()
            .map(move |&(x, w)| (0.5 * ((b - a) * x + a + b), 0.5 * (b - a) * w))
    };
    let weight_at = |s: f64| split.map_or(0.0, |sp| interior_weight(sp.users(), sp.interior(), law.cdf(s)));
    let inner: Vec<(f64, f64, f64)> = map(law.min_dist, APOTHEM)
        .map(|(s, w)| (s, w, weight_at(s)))
        .collect();

    let mut nodes = Vec::new();
    for sector in 0..6 {
        let normal = PI / 6.0 + sector as f64 * PI / 3.0;
        for (lo, hi) in [(normal - PI / 6.0, normal), (normal, normal + PI / 6.0)] {
            for (theta, wt) in map(lo, hi) {
                let dir = Point::new(theta.cos(), theta.sin());
                let reach = APOTHEM / (theta - normal).cos();
                for &(s, ws, wi) in &inner {
                    nodes.push(Node {
                        offset: dir.scale(s),
                        weight: wt * ws * s / law.area(),
                        interior: wi,
                    });
                }
                for (v, wv) in map(0.0, (reach - APOTHEM).max(0.0).sqrt()) {
                    let s = APOTHEM + v * v;
                    nodes.push(Node {
                        offset: dir.scale(s),
                        weight: wt * wv * 2.0 * v * s / law.area(),
                        interior: weight_at(s),
                    });
                }
            }
        }
    }
    Ok(nodes)
}

/// Whole-cell moments `E[(d_0/d_l)^gamma]` for every cell, as `(first, second)`.
pub fn whole_cell_oracle(
    grid: &CellGrid,
    model: &PropagationModel,
    min_dist_fraction: f64,
    resolution: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let law = DistanceLaw::new(min_dist_fraction)?;
    let nodes = polar_nodes(&law, None, resolution)?;
    let origin = grid.cell(0).unit_center;
    let mut mu1 = vec![1.0; grid.len()];
    let mut mu2 = vec![1.0; grid.len()];
    for l in 1..grid.len() {
        let shift = grid.cell(l).unit_center - origin;
        let (mut a, mut b) = (0.0, 0.0);
        for n in &nodes {
            let r = model.strength_from_sq(n.offset.norm_sq(), (n.offset + shift).norm_sq());
            a += n.weight * r;
            b += n.weight * r * r;
        }
        mu1[l] = a;
        mu2[l] = b;
    }
    Ok((mu1, mu2))
}

/// Quadrature counterpart of [`super::estimate_mu`]; standard errors are zero.
pub fn quadrature_mu_oracle(
    grid: &CellGrid,
    model: &PropagationModel,
    split: UserSplit,
    min_dist_fraction: f64,
    resolution: usize,
) -> Result<GroupStatistics> {
    let law = DistanceLaw::new(min_dist_fraction)?;
    let nodes = polar_nodes(&law, Some(split), resolution)?;
    let n_cells = grid.len();
    let bf = split.beta_f();
    let mut interior = (split.interior() > 0).then(|| GroupMoments::own_cell_only(n_cells));
    let mut edge = GroupMoments::own_cell_only(n_cells);
    let origin = grid.cell(0).unit_center;
    for l in 1..n_cells {
        let shift = grid.cell(l).unit_center - origin;
        let mut acc = [0.0f64; 4];
        for n in &nodes {
            let r = model.strength_from_sq(n.offset.norm_sq(), (n.offset + shift).norm_sq());
            let (wi, we) = (n.weight * n.interior, n.weight * (1.0 - n.interior));
            acc[0] += wi * r;
            acc[1] += wi * r * r;
            acc[2] += we * r;
            acc[3] += we * r * r;
        }
        if let Some(i) = interior.as_mut() {
            i.mu1[l] = acc[0] / bf;
            i.mu2[l] = acc[1] / bf;
        }
        edge.mu1[l] = acc[2] / (1.0 - bf);
        edge.mu2[l] = acc[3] / (1.0 - bf);
    }
    Ok(GroupStatistics {
        split,
        interior,
        edge,
        provenance: Provenance {
            grid_hash: grid.layout_hash(),
            kappa: model.kappa(),
            min_dist_fraction,
            method: Method::Quadrature { resolution },
        },
    })
}
