use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fpr_mimo::cli::{Context, ScenarioConfig};
use fpr_mimo::geometry::{CellGrid, ReuseFactor};
use fpr_mimo::mu::{estimate_mu, MonteCarloConfig, UserSplit};
use fpr_mimo::propagation::PropagationModel;
use fpr_mimo::se::{spectral_efficiency, Combiner, SystemParams};

const SMALL: &str = "K_max = 12\nN_list = [10, 100, 1000]\nn_samples = 3000\n";

fn fpr_sim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpr-sim"))
        .args(["--out-dir", dir.to_str().unwrap()])
        .args(args)
        .env_remove("FPR_SIM_CACHE_DIR")
        .output()
        .unwrap()
}

fn ok(out: Output) -> Output {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn outputs_identical_across_runs_and_threads() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    let mut runs = Vec::new();
    for (name, threads) in [("a", "1"), ("b", "1"), ("c", "3")] {
        let dir = tmp.path().join(name);
        let c = cfg.to_str().unwrap();
        ok(fpr_sim(&dir, &["--config", c, "--threads", threads, "sweep"]));
        ok(fpr_sim(&dir, &["--config", c, "--threads", threads, "estimate-mu", "-k", "10", "--beta-f", "0.2"]));
        ok(fpr_sim(&dir, &["--config", c, "--threads", threads, "betaf-profile", "-n", "100", "--beta", "3", "--combiner", "mrc"]));
        runs.push(csv_files(&dir));
    }
    assert_eq!(runs[0].len(), 6);
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], runs[2]);
}

#[test]
fn cached_rerun_reproduces_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let args = ["--n-samples", "2000", "estimate-mu", "-k", "6", "--beta-f", "0.5"];
    ok(fpr_sim(dir, &args));
    let first = fs::read(dir.join("mu_K6_m3.csv")).unwrap();
    assert_eq!(fs::read_dir(dir.join("cache")).unwrap().count(), 1);
    ok(fpr_sim(dir, &args));
    assert_eq!(first, fs::read(dir.join("mu_K6_m3.csv")).unwrap());
    let text = String::from_utf8(first).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("cell_index,tier,color,group,gamma,mu,stderr"));
    assert_eq!(lines.next(), Some("0,0,0,interior,1,1.0000000000000000e0,0.0000000000000000e0"));
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 37);
}

#[test]
fn cache_directory_can_be_relocated() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_fpr-sim"))
        .args(["--out-dir", tmp.path().join("o").to_str().unwrap(), "--n-samples", "500"])
        .args(["estimate-mu", "-k", "3", "--beta-f", "0"])
        .env("FPR_SIM_CACHE_DIR", tmp.path().join("elsewhere"))
        .output()
        .unwrap();
    ok(out);
    assert_eq!(fs::read_dir(tmp.path().join("elsewhere")).unwrap().count(), 1);
    assert!(!tmp.path().join("o/cache").exists());
}

#[test]
fn evaluate_labels_and_matches_library() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(fpr_sim(dir, &["--n-samples", "2000", "--seed", "4", "evaluate", "-n", "100", "-k", "10", "--beta", "3", "--beta-f", "0", "--combiner", "MRC"]));
    let text = fs::read_to_string(dir.join("evaluate.csv")).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[2], "baseline-equivalent");

    ok(fpr_sim(dir, &["--n-samples", "2000", "--seed", "4", "evaluate", "-n", "100", "-k", "10", "--beta", "3", "--beta-f", "0.2", "--combiner", "p-zfc"]));
    let text = fs::read_to_string(dir.join("evaluate.csv")).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..7], ["100", "P-ZFC", "FPR", "10", "3", "2.0000000000000001e-1", "26"]);

    let grid = CellGrid::new(1.0, 3).unwrap();
    let model = PropagationModel::new(3.5).unwrap();
    let cfg = MonteCarloConfig::new(2000, 0.14, 4).unwrap();
    let stats = estimate_mu(&grid, &model, UserSplit::new(10, 2).unwrap(), &cfg).unwrap();
    let params = SystemParams::new(100, 10, 2, 1000, ReuseFactor::new(3).unwrap(), 0.1).unwrap();
    let se = spectral_efficiency(&params, &stats, &grid.assign_reuse_coloring(3).unwrap(), Combiner::PZfc)
        .unwrap()
        .se;
    assert_eq!(row[9].parse::<f64>().unwrap(), se);
}

#[test]
fn full_coherence_block_gives_zero_rate() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("t.toml");
    fs::write(&cfg, "T = 30\n").unwrap();
    ok(fpr_sim(tmp.path(), &["--config", cfg.to_str().unwrap(), "--n-samples", "500", "evaluate", "-n", "64", "-k", "10", "--beta", "3", "--beta-f", "0", "--combiner", "mrc"]));
    let text = fs::read_to_string(tmp.path().join("evaluate.csv")).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[9].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn infeasible_points_fail_with_message() {
    let tmp = tempfile::tempdir().unwrap();
    let base = ["--n-samples", "500", "evaluate", "-k", "10", "--beta", "3", "--beta-f", "0.2"];
    let few_antennas = fpr_sim(tmp.path(), &[&base[..], &["-n", "26", "--combiner", "pzfc"]].concat());
    assert!(!few_antennas.status.success());
    assert!(String::from_utf8_lossy(&few_antennas.stderr).contains("more antennas than pilots"));

    let cfg = tmp.path().join("t.toml");
    fs::write(&cfg, "T = 20\n").unwrap();
    let long_pilots = fpr_sim(tmp.path(), &[&["--config", cfg.to_str().unwrap()], &base[..], &["-n", "100", "--combiner", "mrc"]].concat());
    assert!(!long_pilots.status.success());
    assert!(!tmp.path().join("evaluate.csv").exists());

    let bad = fpr_sim(tmp.path(), &["--n-samples", "500", "estimate-mu", "-k", "10", "--beta-f", "0.25"]);
    assert!(!bad.status.success());
}

#[test]
fn bad_config_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "beta_set = [2]\n").unwrap();
    let out = fpr_sim(tmp.path(), &["--config", cfg.to_str().unwrap(), "sweep"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("reuse"));
}

#[test]
fn table_and_oracle_commands_write_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    let out = ok(fpr_sim(tmp.path(), &["--config", cfg.to_str().unwrap(), "reproduce-table1"]));
    assert!(String::from_utf8_lossy(&out.stdout).contains("P-ZFC"));
    let gains = fs::read_to_string(tmp.path().join("table1_gains.csv")).unwrap();
    assert!(gains.starts_with("N,combiner,se_fpr,se_baseline,gain_percent\n"));
    assert_eq!(gains.lines().count(), 1 + 8);

    let out = ok(fpr_sim(tmp.path(), &["--n-samples", "5000", "oracle-check", "-k", "4", "--beta-f", "0.5", "--resolution", "12"]));
    assert!(String::from_utf8_lossy(&out.stdout).contains("within 3 standard errors"));
    let rows = fs::read_to_string(tmp.path().join("oracle_check_K4.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 2 * 2 * 37);
}

#[test]
fn doubling_samples_shrinks_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |n: u64| {
        let mut config = ScenarioConfig { n_samples: n, ..ScenarioConfig::default() };
        config.seed = n;
        let ctx = Context::new(config, tmp.path().join(n.to_string())).unwrap();
        ctx.estimate_mu(8, 0.25, 3).unwrap().1
    };
    let (a, b) = (run(20_000), run(40_000));
    let ratio: f64 = (1..37).map(|l| b.edge.stderr1[l] / a.edge.stderr1[l]).sum::<f64>() / 36.0;
    assert!((ratio - 0.5f64.sqrt()).abs() < 0.2 * 0.5f64.sqrt(), "ratio {ratio}");
}
