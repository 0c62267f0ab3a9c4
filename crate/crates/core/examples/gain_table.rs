//! Gains of fractional pilot reuse over plain pilot reuse at N = 10..10^4,
//! driven through the same context the command line uses.
//!
//!     cargo run --release --example gain_table [n_samples] [k_max]

use fpr_mimo::cli::{format_gain_table, Context, ScenarioConfig};

fn main() -> fpr_mimo::Result<()> {
    let mut args = std::env::args().skip(1);
    let n_samples = args.next().map_or(Ok(20_000), |s| s.parse()).expect("n_samples");
    let k_max = args.next().map_or(Ok(256), |s| s.parse()).expect("k_max");
    let config = ScenarioConfig { n_samples, k_max: Some(k_max), ..ScenarioConfig::default() };
    let out = std::env::temp_dir().join("fpr-gain-table");
    let (path, rows) = Context::new(config, &out)?.reproduce_table1()?;
    print!("{}", format_gain_table(&rows));
    println!("written to {}", path.display());
    Ok(())
}
