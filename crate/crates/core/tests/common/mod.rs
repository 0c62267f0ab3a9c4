#![allow(dead_code)]

use fpr_mimo::geometry::{CellGrid, ReuseColoring};
use fpr_mimo::mu::{GroupMoments, GroupStatistics, Method, Provenance, UserSplit};
use rand::Rng;

pub fn relative_error(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn random_moments<R: Rng>(rng: &mut R, n_cells: usize) -> GroupMoments {
    let mut mu1 = vec![1.0; n_cells];
    let mut mu2 = vec![1.0; n_cells];
    for l in 1..n_cells {
        let m = 10f64.powf(rng.gen_range(-5.0..-0.5));
        mu1[l] = m;
        mu2[l] = m * m * rng.gen_range(1.0..4.0);
    }
    GroupMoments { mu1, mu2, stderr1: vec![0.0; n_cells], stderr2: vec![0.0; n_cells] }
}

/// Positive, Jensen-consistent moments with no geometric meaning.
pub fn random_stats<R: Rng>(rng: &mut R, grid: &CellGrid, users: usize, interior: usize) -> GroupStatistics {
    let n = grid.len();
    GroupStatistics {
        split: UserSplit::new(users, interior).unwrap(),
        interior: (interior > 0).then(|| random_moments(rng, n)),
        edge: random_moments(rng, n),
        provenance: Provenance {
            grid_hash: grid.layout_hash(),
            kappa: 3.5,
            min_dist_fraction: 0.14,
            method: Method::Quadrature { resolution: 0 },
        },
    }
}

/// Straight scalar transcription of the four SINR expressions for BS 0,
/// kept deliberately separate from the library code.
pub struct Reference<'a> {
    pub n: f64,
    pub k: f64,
    pub beta_f: f64,
    pub b: f64,
    pub t: f64,
    pub noise: f64,
    pub mu: &'a GroupStatistics,
    pub colors: &'a [u32],
}

impl Reference<'_> {
    fn sharing(&self, l: usize) -> bool {
        self.colors[l] == self.colors[0]
    }

    fn mrc(&self, m1: &[f64], m2: &[f64], include: &dyn Fn(usize) -> bool, load: f64) -> f64 {
        let mut a = 0.0;
        let mut s = 0.0;
        for l in 0..m1.len() {
            if !include(l) {
                continue;
            }
            if l != 0 {
                a += m2[l] + (m2[l] - m1[l] * m1[l]) / self.n;
            }
            s += m1[l];
        }
        let denominator = self.b * a + (s * load / self.n + self.noise / self.n) * (self.b * s + self.noise);
        self.b / denominator
    }

    #[allow(clippy::needless_range_loop)]
    fn zfc(&self, m1: &[f64], m2: &[f64], include: &dyn Fn(usize) -> bool, load: f64) -> f64 {
        let free = self.n - self.b;
        let mut a = 0.0;
        let mut s = 0.0;
        for l in 0..m1.len() {
            if include(l) {
                s += m1[l];
                if l != 0 {
                    a += m2[l] + (m2[l] - m1[l] * m1[l]) / free;
                }
            }
        }
        let mut r = 0.0;
        for l in 0..m1.len() {
            if include(l) {
                r += m1[l] * (1.0 - m1[l] / (s + self.noise / self.b));
            }
        }
        self.b / (self.b * a + load / free * r * (self.b * s + self.noise))
    }

    pub fn mrc_interior(&self) -> f64 {
        let g = self.mu.interior.as_ref().unwrap();
        self.mrc(&g.mu1, &g.mu2, &|_| true, self.k)
    }

    pub fn mrc_edge(&self, edge_load: f64) -> f64 {
        self.mrc(&self.mu.edge.mu1, &self.mu.edge.mu2, &|l| self.sharing(l), edge_load)
    }

    pub fn zfc_interior(&self) -> f64 {
        let g = self.mu.interior.as_ref().unwrap();
        self.zfc(&g.mu1, &g.mu2, &|_| true, self.beta_f * self.k)
    }

    pub fn zfc_edge(&self) -> f64 {
        self.zfc(&self.mu.edge.mu1, &self.mu.edge.mu2, &|l| self.sharing(l), (1.0 - self.beta_f) * self.k)
    }

    pub fn se(&self, sinr_interior: f64, sinr_edge: f64) -> f64 {
        let interior = if self.beta_f > 0.0 { self.beta_f * (1.0 + sinr_interior).log2() } else { 0.0 };
        self.k * (1.0 - self.b / self.t) * (interior + (1.0 - self.beta_f) * (1.0 + sinr_edge).log2())
    }
}

pub fn coloring(grid: &CellGrid, beta: u32) -> ReuseColoring {
    grid.assign_reuse_coloring(beta).unwrap()
}
