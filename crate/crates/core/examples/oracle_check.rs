//! Compares Monte-Carlo moments with the deterministic quadrature oracle.
//!
//!     cargo run --release --example oracle_check [n_samples]

use fpr_mimo::geometry::CellGrid;
use fpr_mimo::mu::{estimate_mu, quadrature_mu_oracle, Group, MonteCarloConfig, UserSplit};
use fpr_mimo::propagation::{Moment, PropagationModel};

fn main() -> fpr_mimo::Result<()> {
    let n = std::env::args().nth(1).map_or(Ok(100_000), |s| s.parse()).expect("n_samples");
    let grid = CellGrid::new(1.0, 3)?;
    let model = PropagationModel::new(3.5)?;
    let cfg = MonteCarloConfig::new(n, 0.14, 1)?;

    for beta_f in [0.2, 0.5] {
        let split = UserSplit::from_fraction(10, beta_f)?;
        let mc = estimate_mu(&grid, &model, split, &cfg)?;
        let exact = quadrature_mu_oracle(&grid, &model, split, 0.14, 48)?;
        let (mut within, mut total, mut worst) = (0, 0, 0.0f64);
        for group in [Group::Interior, Group::Edge] {
            let (m, q) = (mc.group(group).unwrap(), exact.group(group).unwrap());
            for gamma in Moment::ALL {
                for l in 1..grid.len() {
                    let z = (m.mu(gamma)[l] - q.mu(gamma)[l]) / m.stderr(gamma)[l];
                    total += 1;
                    within += usize::from(z.abs() <= 3.0);
                    worst = worst.max(z.abs());
                }
            }
        }
        println!("beta_f = {beta_f}: {within}/{total} within 3 standard errors, max |z| = {worst:.2}");
    }
    Ok(())
}
