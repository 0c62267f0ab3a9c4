//! Builds the three-tier hexagonal network and prints its reuse-3 coloring.
//!
//!     cargo run --example hex_grid [tiers] [beta]

use fpr_mimo::geometry::CellGrid;

fn main() -> fpr_mimo::Result<()> {
    let mut args = std::env::args().skip(1);
    let tiers = args.next().map_or(Ok(3), |s| s.parse()).expect("tiers");
    let beta = args.next().map_or(Ok(3), |s| s.parse()).expect("beta");

    let grid = CellGrid::new(1.0, tiers)?;
    let coloring = grid.assign_reuse_coloring(beta)?;
    println!("{grid}");
    println!("layout hash {}", grid.layout_hash());
    println!("cells sharing pilots with cell 0: {:?}", coloring.sharing_set(0));
    print!("{}", grid.debug_dump(Some(&coloring)));
    Ok(())
}
