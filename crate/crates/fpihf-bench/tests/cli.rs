use std::process::Command;

use fpihf::bench::{generate_instance, parse_table, save_instance};

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fpihf-bench"))
}

#[test]
fn solve_reports_convergence_and_writes_the_solution() {
    let dir = tempfile::tempdir().unwrap();
    let instance_path = dir.path().join("instance.txt");
    let solution_path = dir.path().join("solution.txt");
    let instance = generate_instance(20, 10, 0.2, 5.0, 0.5, 3).unwrap();
    save_instance(&instance, &instance_path).unwrap();

    let output = binary()
        .arg("solve")
        .arg(&instance_path)
        .args(["--algo", "fpihf", "--tol", "1e-8"])
        .arg("--out")
        .arg(&solution_path)
        .output()
        .unwrap();
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("termination: converged"), "{stdout}");
    assert!(stdout.contains("objective: "), "{stdout}");

    let solution = std::fs::read_to_string(&solution_path).unwrap();
    let values: Vec<f64> =
        solution.lines().map(|line| line.parse().expect("numeric line")).collect();
    assert_eq!(values.len(), 20);
    // The last iterate is feasible up to the convergence residual.
    for (i, value) in values.iter().enumerate() {
        assert!(instance.lower[i] - 1e-6 <= *value && *value <= instance.upper[i] + 1e-6);
    }
}

#[test]
fn solve_refuses_a_bad_step_with_a_machine_readable_error() {
    let dir = tempfile::tempdir().unwrap();
    let instance_path = dir.path().join("instance.txt");
    let instance = generate_instance(10, 5, 0.2, 5.0, 0.5, 1).unwrap();
    save_instance(&instance, &instance_path).unwrap();

    let output = binary()
        .arg("solve")
        .arg(&instance_path)
        .args(["--algo", "fpihf", "--gamma", "0.5"])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("{\"error\": \""), "stderr: {stderr}");
    assert!(stderr.contains("gamma < chi"), "stderr: {stderr}");
}

#[test]
fn bench_writes_a_parseable_csv_table() {
    let dir = tempfile::tempdir().unwrap();
    let table_path = dir.path().join("table.csv");
    let output = binary()
        .args(["bench", "--kappa", "0.2", "--n", "600", "--k-rule", "N/2"])
        .args(["--algo", "fpihf", "--reps", "2", "--scale", "1/10"])
        .arg("--out")
        .arg(&table_path)
        .env("FPIHF_BENCH_THREADS", "2")
        .output()
        .unwrap();
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));

    let csv = std::fs::read_to_string(&table_path).unwrap();
    let rows = parse_table(&csv).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].n, 60);
    assert_eq!(rows[0].timeouts, 0);
    assert!(rows[0].avg_iters.unwrap() >= 1.0);
}

#[test]
fn norms_emits_one_row_per_seed() {
    let output = binary()
        .args(["norms", "--kappa", "0.1", "--n", "600", "--reps", "3", "--scale", "1/10"])
        .output()
        .unwrap();
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let stdout = String::from_utf8(output.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "kappa,n,seed,norm_a");
    assert_eq!(lines.len(), 4);
    for line in &lines[1..] {
        let norm: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(norm > 0.0);
    }
}

#[test]
fn bad_thread_count_is_a_configuration_error() {
    let output = binary()
        .args(["bench", "--kappa", "0.2", "--n", "600", "--reps", "1"])
        .env("FPIHF_BENCH_THREADS", "zero")
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("FPIHF_BENCH_THREADS"), "stderr: {stderr}");
}
