//! The command-line tool: subcommands, flags, CSV shape and exit codes.

use std::path::PathBuf;
use std::process::{Command, Output};

use advect_mgrit::experiments::{CoarseKind, ExperimentConfig};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_advect-mgrit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

fn temp_path(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("advect-mgrit-{}-{name}", std::process::id()))
}

fn write_config(name: &str, config: &ExperimentConfig) -> PathBuf {
    let path = temp_path(name);
    std::fs::write(&path, config.to_toml_string()).unwrap();
    path
}

#[test]
fn constants_lists_every_quantity() {
    let out = run(&["constants"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines = data_lines(&text);
    assert_eq!(lines[0], "quantity,order,scheme,value");
    assert_eq!(lines.len(), 21);
    assert!(lines.contains(&"e_fd,5,U5,1.666666667e-2"));
    assert!(lines.iter().any(|l| l.starts_with("c_max,5,ERK5+U5,1.9658")));
}

#[test]
fn explicit_rediscretization_is_a_config_error() {
    let mut config = ExperimentConfig::default();
    config.discretization.family = advect_mgrit::stepping::Family::Erk;
    config.discretization.c = None;
    config.discretization.c_fraction = Some(0.5);
    config.coarse.kind = CoarseKind::Rediscretized;
    let text = config.to_toml_string();
    let path = temp_path("erk-redisc.toml");
    std::fs::write(&path, text).unwrap();
    let out = run(&["sweep", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unstable"));
}

#[test]
fn malformed_flags_and_files_are_config_errors() {
    assert_eq!(run(&["sweep", "--grid", "64"]).status.code(), Some(1));
    assert_eq!(run(&["sweep", "--cycle", "w"]).status.code(), Some(1));
    assert_eq!(run(&["iters", "--config", "/nonexistent/x.toml"]).status.code(), Some(1));
    assert_eq!(run(&["solve", "--m", "1"]).status.code(), Some(1));
}

#[test]
fn single_c_sweep_gives_one_row_per_m_with_config_metadata() {
    let mut config = ExperimentConfig::default();
    config.sweep.points = 1;
    config.sweep.stop = 2.0;
    config.lfa.samples = 256;
    let path = write_config("single.toml", &config);
    let out_path = temp_path("single.csv");
    let out = run(&[
        "sweep",
        "--config",
        path.to_str().unwrap(),
        "--m",
        "2,8",
        "--threads",
        "2",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.starts_with("# config:"));
    let lines = data_lines(&text);
    assert!(lines[0].starts_with("c,c_over_c_max,m,nu,rho_lfa"));
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("2.000000000e0,,2,"));
    assert!(lines[2].starts_with("2.000000000e0,,8,"));
}

#[test]
fn sweep_output_is_deterministic_and_measured_on_request() {
    let mut config = ExperimentConfig::default();
    config.sweep.points = 2;
    config.sweep.stop = 4.0;
    config.lfa.samples = 128;
    let path = write_config("measure.toml", &config);
    let args = ["sweep", "--config", path.to_str().unwrap(), "--m", "4", "--grid", "32,64", "--measure"];
    let first = stdout(&run(&[&args[..], &["--threads", "1"]].concat()));
    let second = stdout(&run(&[&args[..], &["--threads", "3"]].concat()));
    assert_eq!(first.replace("threads = 1", "threads = 3"), second);
    let row = data_lines(&first)[1].split(',').map(str::to_string).collect::<Vec<_>>();
    assert!(!row[7].is_empty(), "measured factor present");
    assert!(row[8].parse::<usize>().is_ok(), "iteration count present");
}

#[test]
fn iters_with_ideal_coarse_grid_takes_one_iteration() {
    let mut config = ExperimentConfig::default();
    config.coarse.kind = CoarseKind::Ideal;
    let path = write_config("ideal.toml", &config);
    let out = run(&["iters", "--config", path.to_str().unwrap(), "--grid", "32,64", "--m", "2,4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines = data_lines(&text);
    assert_eq!(lines[0], "n_x,n_t,m2_two_level,m2_v_cycle,m4_two_level,m4_v_cycle");
    assert_eq!(lines[1], "32,64,1,1,1,1");
}

#[test]
fn iters_marks_non_convergence() {
    let mut config = ExperimentConfig::default();
    config.coarse.kind = CoarseKind::Rediscretized;
    config.mgrit.max_iters = 3;
    let path = write_config("diverge.toml", &config);
    let out = run(&["iters", "--config", path.to_str().unwrap(), "--grid", "32,64", "--m", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(data_lines(&text)[1], "32,64,>3,>3");
}

#[test]
fn solve_reports_the_residual_history() {
    let out = run(&["solve", "--grid", "64,256", "--m", "8", "--seed", "3", "--nu", "1", "--cycle", "v"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("# converged = true"));
    let lines = data_lines(&text);
    assert_eq!(lines[0], "iteration,residual,ratio");
    assert!(lines.len() > 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("iterations ="));
}

#[test]
fn config_files_round_trip_through_the_tool() {
    let mut config = ExperimentConfig::default();
    config.mgrit.m = vec![4];
    config.grid.n_x = 32;
    config.grid.n_t = 64;
    let path = write_config("roundtrip.toml", &config);
    let parsed = ExperimentConfig::load(&path).unwrap();
    assert_eq!(parsed, config);
    let out = run(&["solve", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let embedded: String = text
        .lines()
        .skip(1)
        .take_while(|l| l.starts_with("# ") && *l != "# run:")
        .map(|l| format!("{}\n", &l[2..]))
        .collect();
    assert_eq!(ExperimentConfig::from_toml_str(&embedded).unwrap(), config);
}
