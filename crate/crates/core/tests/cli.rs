use std::fs;
use std::path::Path;

use ibci::cli::run;

fn write_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("smoke.toml");
    let text = format!(
        "data = \"synthetic\"\narch = [20, 12, 4]\nepochs = 3\nseeds = [0, 1]\nscoring_subset = 0\nbatch_size = 20\noutput_dir = {:?}\n",
        dir.join("out").display().to_string()
    );
    fs::write(&path, text).unwrap();
    path
}

fn ibci(args: &[&str]) -> i32 {
    run(std::iter::once("ibci").chain(args.iter().copied()))
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(|r| r.unwrap()).collect()
}

#[test]
fn usage_and_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(ibci(&["bench", "--config", dir.path().join("nope.toml").to_str().unwrap()]), 2);
    assert_eq!(ibci(&["frobnicate"]), 2);
    let cfg = write_config(dir.path());
    assert_eq!(ibci(&["bench", "--config", cfg.to_str().unwrap(), "--set", "no_such_key=1"]), 2);
    assert_eq!(ibci(&["bench", "--config", cfg.to_str().unwrap(), "--set", "k=0"]), 2);
    assert_eq!(ibci(&["--help"]), 0);
}

#[test]
fn ablate_writes_three_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    assert_eq!(ibci(&["ablate", "--config", cfg.to_str().unwrap()]), 0);
    let out = dir.path().join("out");
    let rows = csv_rows(&out.join("summary.csv"));
    assert_eq!(rows.len(), 3);
    assert!(rows[0][0].starts_with("ibci-") && rows[1][0].starts_with("tie_only-") && rows[2][0].starts_with("iim_only-"));
    assert_eq!(csv_rows(&out.join("table2.csv")).len(), 1);
    assert_eq!(csv_rows(&out.join("epochs.csv")).len(), 3 * 2 * 3);
}

#[test]
fn init_then_train_matches_bench() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let cfg = cfg.to_str().unwrap();
    let out = dir.path().join("out");
    assert_eq!(ibci(&["bench", "--config", cfg]), 0);
    let bench_rows = csv_rows(&out.join("epochs.csv"));
    assert_eq!(ibci(&["init", "--config", cfg]), 0);
    let dump = out.join("weights_seed1.bin");
    assert!(dump.exists());
    assert_eq!(ibci(&["train", "--config", cfg, "--weights", dump.to_str().unwrap()]), 0);
    let trained = csv_rows(&out.join("train_epochs.csv"));
    let expect: Vec<_> = bench_rows.into_iter().filter(|r| &r[1] == "1").collect();
    assert_eq!(trained, expect);
}

#[test]
fn alpha_search_logs_each_trial() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    assert_eq!(ibci(&["alpha-search", "--config", cfg.to_str().unwrap(), "--trials", "4", "--set", "search_epochs=1"]), 0);
    assert_eq!(csv_rows(&dir.path().join("out/alpha_search.csv")).len(), 4);
}

#[test]
fn missing_weights_file_is_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    assert_eq!(ibci(&["train", "--config", cfg.to_str().unwrap(), "--weights", "/nonexistent.bin"]), 1);
}
