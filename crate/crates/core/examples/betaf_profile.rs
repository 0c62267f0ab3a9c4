//! Spectral efficiency over every `beta_f = m / K` at N = 1000 for the
//! SE-maximizing K, with delta-method error bars.
//!
//!     cargo run --release --example betaf_profile [n_samples] [beta]

use fpr_mimo::geometry::{CellGrid, ReuseFactor};
use fpr_mimo::mu::{MonteCarloConfig, MuFamily};
use fpr_mimo::optimizer::{beta_f_profile, is_unimodal_within, optimize, Scenario, Scheme, SearchSpace};
use fpr_mimo::propagation::PropagationModel;
use fpr_mimo::se::Combiner;

const N: usize = 1000;

fn main() -> fpr_mimo::Result<()> {
    let mut args = std::env::args().skip(1);
    let n = args.next().map_or(Ok(5_000), |s| s.parse()).expect("n_samples");
    let beta = args.next().map_or(Ok(3), |s| s.parse()).expect("beta");
    let k_max = 1000 / beta as usize;

    let grid = CellGrid::new(1.0, 3)?;
    let model = PropagationModel::new(3.5)?;
    let family = MuFamily::estimate(&grid, &model, k_max, &MonteCarloConfig::new(n, 0.14, 0)?)?;
    let scenario = Scenario::new(&grid, &[beta], 1000, 0.1)?;
    let reuse = ReuseFactor::new(beta)?;

    for combiner in Combiner::ALL {
        let space = SearchSpace { users: 1..=k_max, reuse: vec![reuse], scheme: Scheme::Fpr, antennas: vec![N] };
        let k = optimize(&space, N, combiner, &scenario, &family)?.users;
        let points = beta_f_profile(N, k, reuse, combiner, &scenario, &family)?;
        let se: Vec<f64> = points.iter().map(|p| p.se).collect();
        let band: Vec<f64> = points.iter().map(|p| 2.0 * p.se_stderr).collect();
        println!("{combiner}, beta={beta}, K={k}, unimodal: {}", is_unimodal_within(&se, &band));
        for p in points.iter().step_by((points.len() / 20).max(1)) {
            println!("  beta_f={:.3} B={:<4} SE={:.3} +- {:.3}", p.beta_f, p.pilots, p.se, p.se_stderr);
        }
    }
    Ok(())
}
