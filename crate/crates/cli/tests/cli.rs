use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn diver(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_diver"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(path: impl AsRef<Path>) -> String {
    fs::read_to_string(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

fn without_last_column(csv: &str) -> String {
    csv.lines().map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head)).collect::<Vec<_>>().join("\n")
}

#[test]
fn gadget_reports_zero_objective_and_witness() {
    let tmp = tempfile::tempdir().unwrap();
    let out = diver(tmp.path(), &["--out-dir", "g", "gadget", "--z", "0.2,0.3,0.5", "--k", "2", "--s", "0.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let objective: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("objective "))
        .expect("objective line")
        .parse()
        .unwrap();
    assert!(objective.abs() <= 1e-12, "{stdout}");
    assert!(stdout.contains("witness 0,1"), "{stdout}");
    assert!(tmp.path().join("g/gadget_witness.csv").exists());
}

#[test]
fn recommend_without_attack_writes_empty_file() {
    let tmp = tempfile::tempdir().unwrap();
    let out = diver(tmp.path(), &["--out-dir", "gen", "--seed", "5", "generate", "--n", "40"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = diver(
        tmp.path(),
        &[
            "--out-dir", "rec", "recommend", "--graph", "gen/graph.tsv", "--opinions", "gen/opinions.tsv",
            "--attacked", "gen/opinions.tsv",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read(tmp.path().join("rec/recommendations.csv")), "r,c,theta,score,mode\n");
}

#[test]
fn archived_config_reproduces_run() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["--threads", "1", "--seed", "11", "--out-dir", "first", "run", "--n", "60", "--targets", "4"];
    let out = diver(tmp.path(), &args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = diver(tmp.path(), &["--threads", "1", "--config", "first/config.toml", "--out-dir", "second", "run"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let first = tmp.path().join("first");
    let second = tmp.path().join("second");
    for file in ["edges.csv", "final_graph.tsv", "score_vs_centrality.csv", "truncation.csv", "walk_convergence.csv"] {
        assert_eq!(read(first.join(file)), read(second.join(file)), "{file} differs");
    }
    let trajectory = read(first.join("trajectory.csv"));
    assert!(trajectory.starts_with("batch,edges_added_total,objective_signed,objective_exact,seconds\n"));
    assert!(trajectory.lines().count() > 1);
    assert_eq!(without_last_column(&trajectory), without_last_column(&read(second.join("trajectory.csv"))));
}

#[test]
fn mfpt_exact_table_covers_every_pair() {
    let tmp = tempfile::tempdir().unwrap();
    let out = diver(tmp.path(), &["--out-dir", "m", "mfpt", "--n", "30"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = read(tmp.path().join("m/mfpt.csv"));
    assert_eq!(table.lines().next(), Some("i,j,value,samples"));
    assert_eq!(table.lines().count(), 1 + 30 * 30);
}

#[test]
fn attack_changes_the_requested_number_of_opinions() {
    let tmp = tempfile::tempdir().unwrap();
    let out = diver(tmp.path(), &["--out-dir", "a", "attack", "--n", "50", "--targets", "7", "--value", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let attacked = read(tmp.path().join("a/attacked.tsv"));
    assert_eq!(attacked.lines().count(), 50);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("7 opinions changed"));
}

#[test]
fn usage_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("bad.toml"), "[run]\nbatch = 5\nbatches = 3\n").unwrap();
    let out = diver(tmp.path(), &["--config", "bad.toml", "generate"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("batches") && stderr.contains("line 3"), "{stderr}");

    assert_eq!(diver(tmp.path(), &["run", "--bogus"]).status.code(), Some(2));
    assert_eq!(diver(tmp.path(), &["--out-dir", "r", "recommend", "--n", "30", "--n-src", "0"]).status.code(), Some(2));
}

#[test]
fn domain_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    // Two absorbing nodes: not strongly connected.
    fs::write(tmp.path().join("split.tsv"), "0\t0\t1\n1\t1\t1\n").unwrap();
    let out = diver(tmp.path(), &["--out-dir", "r", "recommend", "--graph", "split.tsv", "--targets", "1", "--n-src", "1"]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}
