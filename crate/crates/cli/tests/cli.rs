use std::f64::consts::FRAC_PI_2;
use std::process::{Command, Output};

fn twistlab(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_twistlab"));
    cmd.args(args).env_remove("TWISTLAB_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("failed to launch twistlab")
}

/// Header row and data rows, skipping the `#` comment line.
fn csv(out: &Output) -> (Vec<String>, Vec<Vec<String>>) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let split = |l: &str| l.split(',').map(str::to_owned).collect::<Vec<_>>();
    let header = split(lines.next().unwrap());
    (header, lines.map(split).collect())
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn cat_state_example() {
    let out = twistlab(
        &[
            "mom",
            "--n",
            "4",
            "--t",
            "1.5707963",
            "--variant",
            "twist-untwist",
            "--rot",
            "x",
            "--readout",
            "x",
            "--phi",
            "0.1",
        ],
        &[],
    );
    let (header, rows) = csv(&out);
    assert_eq!(header.join(","), "N,t,phi,n_x,n_y,n_z,m_x,m_y,m_z,reciprocal_error,qfi,flag");
    let v: f64 = rows[0][column(&header, "reciprocal_error")].parse().unwrap();
    assert!((v - 16.0).abs() < 1e-6, "{v}");
    assert_eq!(rows[0][column(&header, "flag")], "ok");
}

#[test]
fn mom_flags_indeterminate_points_instead_of_failing() {
    let phi = format!("{}", std::f64::consts::PI / 4.0);
    let out = twistlab(&["mom", "--n", "4", "--t", &FRAC_PI_2.to_string(), "--phi", &phi], &[]);
    let (header, rows) = csv(&out);
    assert_eq!(rows[0][column(&header, "flag")], "indeterminate");
}

#[test]
fn phase_diagram_reaches_the_heisenberg_limit() {
    let (header, rows) = csv(&twistlab(&["phase-diagram", "--n", "100"], &[]));
    assert_eq!(header.join(","), "N,q,t,qfi_max,xi_opt,theta_opt,regime");
    let last = rows.last().unwrap();
    let t: f64 = last[column(&header, "t")].parse().unwrap();
    let qfi: f64 = last[column(&header, "qfi_max")].parse().unwrap();
    assert!((t - FRAC_PI_2).abs() < 1e-12);
    assert!((qfi / 10000.0 - 1.0).abs() < 1e-9);
}

#[test]
fn fr_qfi_schema() {
    let (header, rows) = csv(&twistlab(&["fr-qfi", "--n", "8", "--k", "2", "--points", "4"], &[]));
    assert_eq!(header.join(","), "N,K,t,branch,var_max,qfi,qfi_db,overlay_inter,overlay_largescale");
    assert_eq!(rows.len(), 4);
}

#[test]
fn appendix_c_suite_passes() {
    let out = twistlab(&["verify", "--suite", "appendix-c", "--sites", "8"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = csv(&out);
    for row in rows {
        let err: f64 = row[column(&header, "max_rel_error")].parse().unwrap();
        assert!(err < 1e-9);
    }
}

#[test]
fn config_errors_exit_with_status_2() {
    for args in [
        &["fr-qfi", "--n", "9", "--k", "2"][..],
        &["fr-qfi", "--n", "8", "--k", "5"],
        &["mom", "--n", "0", "--t", "0.1", "--phi", "0.1"],
        &["verify", "--sites", "40"],
        &["twist-untwist-scan", "--n", "10", "--readout", "optimize"],
        &["phase-diagram"],
    ] {
        let out = twistlab(args, &[]);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    let out = twistlab(&["husimi", "--n", "4", "--t", "0.1"], &[("TWISTLAB_THREADS", "many")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical_apart_from_the_header() {
    let args = ["fr-optimize", "--n", "4", "--k", "1", "--t", "0.3,0.7"];
    let strip = |o: Output| {
        assert!(o.status.success());
        String::from_utf8(o.stdout).unwrap().lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
    };
    let a = strip(twistlab(&args, &[("TWISTLAB_THREADS", "1")]));
    let b = strip(twistlab(&args, &[("TWISTLAB_THREADS", "3")]));
    assert_eq!(a, b);
}

#[test]
fn json_mirrors_csv() {
    let out =
        twistlab(&["qfi", "--n", "6", "--t", "0.2,0.4", "--xi", "1.0", "--theta", "0.5", "--format", "json"], &[]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["meta"]["command"], "qfi");
    let records = v["records"].as_array().unwrap();
    assert_eq!(records.len(), 2);
    let (a, b) = (records[1]["qfi_closed"].as_f64().unwrap(), records[1]["qfi_numeric"].as_f64().unwrap());
    assert!((a - b).abs() < 1e-9 * a);
}

#[test]
fn output_file_and_husimi_grid() {
    let path = std::env::temp_dir().join(format!("twistlab-husimi-{}.csv", std::process::id()));
    let out = twistlab(&["husimi", "--n", "10", "--t", "0.3", "--n-polar", "8", "--n-azimuth", "16", "-o"], &[]);
    assert_eq!(out.status.code(), Some(2));
    let out = twistlab(
        &["husimi", "--n", "10", "--t", "0.3", "--n-polar", "40", "--n-azimuth", "80", "-o", path.to_str().unwrap()],
        &[],
    );
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(lines.next(), Some("xi,theta,weight,q"));
    // (N+1)/4π ∫ Q dΩ = 1
    let integral: f64 = lines
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            f[2] * f[3]
        })
        .sum();
    assert!((integral * 11.0 / (4.0 * std::f64::consts::PI) - 1.0).abs() < 1e-2, "{integral}");
}
