//! Monte-Carlo interference moments for the interior and edge groups of a
//! `K = 10`, `beta_f = 0.2` split, shown for the first ring of cells.
//!
//!     cargo run --release --example estimate_mu [n_samples]

use fpr_mimo::geometry::CellGrid;
use fpr_mimo::mu::{estimate_mu, Group, MonteCarloConfig, UserSplit};
use fpr_mimo::propagation::{Moment, PropagationModel};

fn main() -> fpr_mimo::Result<()> {
    let n = std::env::args().nth(1).map_or(Ok(200_000), |s| s.parse()).expect("n_samples");
    let grid = CellGrid::new(1.0, 3)?;
    let model = PropagationModel::new(3.5)?;
    let cfg = MonteCarloConfig::new(n, 0.14, 0)?;
    let stats = estimate_mu(&grid, &model, UserSplit::from_fraction(10, 0.2)?, &cfg)?;

    println!("cell  group     mu1          stderr       mu2");
    for l in 0..7 {
        for group in [Group::Interior, Group::Edge] {
            let g = stats.group(group).expect("both groups present");
            println!(
                "{l:>4}  {:<8} {:.6e}  {:.2e}  {:.6e}",
                group.label(),
                g.mu(Moment::First)[l],
                g.stderr(Moment::First)[l],
                g.mu(Moment::Second)[l]
            );
        }
    }
    let whole: f64 = stats.whole_cell(Moment::First)[1..].iter().sum();
    println!("total first moment from other cells: {whole:.6}");
    Ok(())
}
