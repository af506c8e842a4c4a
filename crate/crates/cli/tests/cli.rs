use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn nmpc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nmpc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// CSV text with the named columns removed from every row.
fn without_columns(text: &str, drop: &[&str]) -> String {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let keep: Vec<usize> = (0..header.len())
        .filter(|i| !drop.contains(&header[*i]))
        .collect();
    std::iter::once(header.join(","))
        .chain(lines.map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            keep.iter().map(|&i| f[i]).collect::<Vec<_>>().join(",")
        }))
        .collect::<Vec<_>>()
        .join("\n")
}

const BASE: &str = r#"name = "tiny"
dt_s = 0.5
horizon_steps = 8

[start]
x_m = 0.0
y_m = 0.0
theta_rad = 0.0

[[waypoints]]
x_m = 1.0
y_m = 0.5
theta_rad = 0.0

[noise]
control_noise_frac = 0.1
localization_sigma_m = 0.02
seed = 3
"#;

#[test]
fn bundled_straight_scenario_succeeds_and_writes_artifacts() {
    let out = tempfile::tempdir().unwrap();
    let file = scenarios().join("obstacle_free_straight.toml");
    let o = nmpc(&["run", path_str(&file), "--out", path_str(out.path())]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    for suffix in ["log.csv", "metrics.csv", "traj.svg"] {
        assert!(out
            .path()
            .join(format!("obstacle_free_straight_{suffix}"))
            .exists());
    }
    let log = fs::read_to_string(out.path().join("obstacle_free_straight_log.csv")).unwrap();
    assert!(
        log.starts_with("t_s,cmd_v_mps,cmd_omega_radps,applied_v_mps,applied_omega_radps,true_x_m")
    );
}

#[test]
fn negative_sampling_time_is_a_config_error_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.toml");
    fs::write(&file, BASE.replace("dt_s = 0.5", "dt_s = -0.5")).unwrap();
    let o = nmpc(&["run", path_str(&file), "--out", path_str(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.toml:2: dt_s"), "{err}");
    assert!(err.contains("must be positive"), "{err}");
}

#[test]
fn missing_file_is_a_config_error() {
    let o = nmpc(&["run", "/nonexistent/scenario.toml"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn obstacle_over_start_is_a_collision() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("blocked.toml");
    fs::write(
        &file,
        format!("{BASE}\n[[obstacles]]\nx_m = 0.0\ny_m = 0.0\nradius_m = 0.5\n"),
    )
    .unwrap();
    let o = nmpc(&["run", path_str(&file), "--out", path_str(dir.path())]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
}

#[test]
fn short_time_limit_is_a_timeout() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("slow.toml");
    fs::write(&file, format!("{BASE}\n[criteria]\npos_tol_m = 0.4\nrot_tol_rad = 0.4\nmax_time_s = 1.0\nsettle_speed_mps = 0.1\nsettle_turn_rate_radps = 0.5\n")).unwrap();
    let o = nmpc(&["run", path_str(&file), "--out", path_str(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn repeated_runs_write_identical_csvs_apart_from_timing() {
    let file = scenarios().join("obstacle_free_left.toml");
    let read = |dir: &Path, name: &str| fs::read_to_string(dir.join(name)).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert_eq!(
            nmpc(&[
                "run",
                path_str(&file),
                "--seed",
                "11",
                "--out",
                path_str(d.path())
            ])
            .status
            .code(),
            Some(0)
        );
    }
    for name in [
        "obstacle_free_left_log.csv",
        "obstacle_free_left_metrics.csv",
    ] {
        let drop = nmpc_cli::report::TIMING_COLUMNS;
        assert_eq!(
            without_columns(&read(a.path(), name), &drop),
            without_columns(&read(b.path(), name), &drop),
            "{name}"
        );
    }
    let metrics = read(a.path(), "obstacle_free_left_metrics.csv");
    assert!(metrics
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("obstacle_free_left,11,"));
}

#[test]
fn single_waypoint_route_matches_run_plus_table() {
    let file = scenarios().join("obstacle_free_right.toml");
    let run_dir = tempfile::tempdir().unwrap();
    let wp_dir = tempfile::tempdir().unwrap();
    assert_eq!(
        nmpc(&["run", path_str(&file), "--out", path_str(run_dir.path())])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        nmpc(&[
            "waypoints",
            path_str(&file),
            "--out",
            path_str(wp_dir.path())
        ])
        .status
        .code(),
        Some(0)
    );
    let drop = nmpc_cli::report::TIMING_COLUMNS;
    let name = "obstacle_free_right_log.csv";
    assert_eq!(
        without_columns(
            &fs::read_to_string(run_dir.path().join(name)).unwrap(),
            &drop
        ),
        without_columns(
            &fs::read_to_string(wp_dir.path().join(name)).unwrap(),
            &drop
        )
    );
    let table = fs::read_to_string(wp_dir.path().join("waypoint_metrics.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert!(table.lines().last().unwrap().starts_with("average,"));
}

#[test]
fn obstacle_route_reports_clearance() {
    let file = scenarios().join("route_static_obstacle.toml");
    let out = tempfile::tempdir().unwrap();
    let o = nmpc(&[
        "waypoints",
        path_str(&file),
        "--trials",
        "2",
        "--out",
        path_str(out.path()),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
    let table = fs::read_to_string(out.path().join("waypoint_metrics.csv")).unwrap();
    let header: Vec<&str> = table.lines().next().unwrap().split(',').collect();
    let col = header
        .iter()
        .position(|h| *h == "min_obstacle_distance_m")
        .unwrap();
    for line in table.lines().skip(1) {
        let d: f64 = line.split(',').nth(col).unwrap().parse().unwrap();
        assert!(d > 0.5 + 0.15, "{line}");
    }
    assert!(out
        .path()
        .join("route_static_obstacle_trial2_traj.svg")
        .exists());
}

#[test]
fn sweep_rows_are_sorted_and_cells_average_their_trials() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tiny.toml"), BASE).unwrap();
    let sweep = dir.path().join("grid.sweep.toml");
    fs::write(
        &sweep,
        "base = \"tiny.toml\"\ndt_values_s = [0.5, 0.25]\nhorizon_values = [6, 3]\ntrials_per_cell = 3\nseeds = [5, 6, 7]\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = nmpc(&[
        "sweep",
        path_str(&sweep),
        "--out",
        path_str(&out),
        "--jobs",
        "2",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );

    let rows = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let mut lines = rows.lines();
    assert!(lines.next().unwrap().starts_with(
        "dt,N,total_time_s,max_solve_time_s,euclidean_error_m,rotation_error_rad,outcome"
    ));
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    assert_eq!(rows.len(), 12);
    let keys: Vec<(f64, usize, usize)> = rows
        .iter()
        .map(|r| {
            (
                r[0].parse().unwrap(),
                r[1].parse().unwrap(),
                r[8].parse().unwrap(),
            )
        })
        .collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    assert_eq!(keys, sorted);
    assert_eq!(
        rows.iter()
            .map(|r| r[9].as_str())
            .take(3)
            .collect::<Vec<_>>(),
        ["5", "6", "7"]
    );

    let agg = fs::read_to_string(out.join("sweep_aggregate.csv")).unwrap();
    let cells: Vec<Vec<String>> = agg
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    assert_eq!(cells.len(), 4);
    for (cell, trials) in cells.iter().zip(rows.chunks(3)) {
        assert_eq!(cell[0], trials[0][0]);
        assert_eq!(cell[1], trials[0][1]);
        for col in [2, 4, 5] {
            let mean = trials
                .iter()
                .map(|r| r[col].parse::<f64>().unwrap())
                .sum::<f64>()
                / 3.0;
            let got: f64 = cell[col].parse().unwrap();
            assert!(
                (got - mean).abs() <= 1e-12 * mean.abs().max(1.0),
                "column {col}: {got} vs {mean}"
            );
        }
    }
}

#[test]
fn sweep_with_mismatched_seed_list_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tiny.toml"), BASE).unwrap();
    let sweep = dir.path().join("bad.sweep.toml");
    fs::write(&sweep, "base = \"tiny.toml\"\ndt_values_s = [0.5]\nhorizon_values = [3]\ntrials_per_cell = 2\nseeds = [1]\n").unwrap();
    let o = nmpc(&["sweep", path_str(&sweep), "--out", path_str(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.sweep.toml:5: seeds"));
}
