//! Optimal `(K, beta, beta_f)` against the antenna count, with and without
//! fractional reuse.
//!
//!     cargo run --release --example sweep [n_samples] [k_max]

use fpr_mimo::geometry::{CellGrid, ReuseFactor};
use fpr_mimo::mu::{MonteCarloConfig, MuFamily};
use fpr_mimo::optimizer::{sweep, Scenario, Scheme, SearchSpace};
use fpr_mimo::propagation::PropagationModel;
use fpr_mimo::se::Combiner;

fn main() -> fpr_mimo::Result<()> {
    let mut args = std::env::args().skip(1);
    let n = args.next().map_or(Ok(10_000), |s| s.parse()).expect("n_samples");
    let k_max = args.next().map_or(Ok(128), |s| s.parse()).expect("k_max");

    let grid = CellGrid::new(1.0, 3)?;
    let model = PropagationModel::new(3.5)?;
    let family = MuFamily::estimate(&grid, &model, k_max, &MonteCarloConfig::new(n, 0.14, 0)?)?;
    let scenario = Scenario::new(&grid, &[1, 3], 1000, 0.1)?;
    let antennas = vec![10, 32, 100, 316, 1000, 3162, 10_000];

    for combiner in Combiner::ALL {
        for scheme in [Scheme::Baseline, Scheme::Fpr] {
            let space = SearchSpace {
                users: 1..=k_max,
                reuse: vec![ReuseFactor::new(1)?, ReuseFactor::new(3)?],
                scheme,
                antennas: antennas.clone(),
            };
            println!("{combiner} {scheme}");
            for r in sweep(&space, combiner, &scenario, &family)? {
                println!(
                    "  N={:<6} K={:<4} beta={} beta_f={:.3} B={:<4} SE={:.3}",
                    r.antennas,
                    r.users,
                    r.reuse,
                    r.beta_f(),
                    r.pilots,
                    r.se
                );
            }
        }
    }
    Ok(())
}
