//! Spectral efficiency of one operating point under both combiners, next to
//! the same point without fractional reuse and the large-array limit.
//!
//!     cargo run --release --example evaluate_se [N] [K] [beta] [beta_f]

use fpr_mimo::geometry::{CellGrid, ReuseFactor};
use fpr_mimo::mu::quadrature_mu_oracle;
use fpr_mimo::propagation::PropagationModel;
use fpr_mimo::se::{spectral_efficiency, Combiner, SystemParams};

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    std::env::args().nth(i).map_or(default, |s| s.parse().ok().expect("numeric argument"))
}

fn main() -> fpr_mimo::Result<()> {
    let (n, k, beta, beta_f) = (arg(1, 100usize), arg(2, 10usize), arg(3, 3u32), arg(4, 0.2f64));
    let grid = CellGrid::new(1.0, 3)?;
    let model = PropagationModel::new(3.5)?;
    let coloring = grid.assign_reuse_coloring(beta)?;
    let reuse = ReuseFactor::new(beta)?;

    for frac in [0.0, beta_f] {
        let params = SystemParams::with_fraction(n, k, frac, 1000, reuse, 0.1)?;
        // Quadrature moments are exact and quick for small K.
        let stats = quadrature_mu_oracle(&grid, &model, params.split().expect("K > 0"), 0.14, 24)?;
        for c in Combiner::ALL {
            match spectral_efficiency(&params, &stats, &coloring, c) {
                Ok(r) => println!(
                    "{c:<5} beta_f={frac:<4} B={:<4} SE={:>9.4}  limit={:>9.4}",
                    params.pilots(),
                    r.se,
                    r.se_asymptotic.unwrap_or(f64::INFINITY)
                ),
                Err(e) => println!("{c:<5} beta_f={frac:<4} {e}"),
            }
        }
    }
    Ok(())
}
