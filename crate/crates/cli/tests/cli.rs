use std::path::Path;
use std::process::{Command, Output};

use crss_lab::RunManifest;
use tempfile::TempDir;

fn lab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crss-lab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("CRSS_LAB_JOBS")
        .output()
        .unwrap()
}

fn ok(args: &[&str], out: &Path) {
    let o = lab(args, out);
    assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

/// Header plus rows of parsed cells (text cells become NaN).
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|c| c.parse::<f64>().unwrap_or(f64::NAN)).collect())
        .collect();
    (header, rows)
}

fn column(rows: &[Vec<f64>], k: usize) -> Vec<f64> {
    rows.iter().map(|r| r[k]).collect()
}

fn manifest(dir: &Path, command: &str) -> RunManifest {
    serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{command}.manifest.json"))).unwrap()).unwrap()
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn output_independent_of_worker_count() {
    let tmp = TempDir::new().unwrap();
    let args = ["errormap", "--j-list", "10,40,90,160", "--r-step", "0.05"];
    let mut digests = Vec::new();
    for jobs in ["1", "4", "4"] {
        let dir = tmp.path().join(format!("run{}", digests.len()));
        let mut a = args.to_vec();
        a.extend(["--jobs", jobs]);
        ok(&a, &dir);
        let bytes = (std::fs::read(dir.join("errormap.csv")).unwrap(), std::fs::read(dir.join("rj.csv")).unwrap());
        digests.push(bytes);
    }
    assert!(digests.windows(2).all(|w| w[0] == w[1]));
    let dir = tmp.path().join("mq");
    for jobs in ["1", "3"] {
        ok(&["minsqueeze", "--j-list", "10,20,30", "--jobs", jobs], &dir.join(jobs));
    }
    assert_eq!(std::fs::read(dir.join("1/minsqueeze.csv")).unwrap(), std::fs::read(dir.join("3/minsqueeze.csv")).unwrap());
}

#[test]
fn manifest_checksums_and_csv_round_trip() {
    let tmp = TempDir::new().unwrap();
    ok(&["infidelity", "--mode", "ansatz-vs-min", "--j-list", "5,10", "--r-step", "0.1"], tmp.path());
    let m = manifest(tmp.path(), "infidelity");
    assert_eq!(m.command, "infidelity");
    assert_eq!(m.version, env!("CARGO_PKG_VERSION"));
    assert_eq!(m.params.j_list, Some(vec![5.0, 10.0]));
    let rec = &m.outputs[0];
    let bytes = std::fs::read(&rec.file).unwrap();
    assert_eq!(crss_lab::output::sha256_hex(&bytes), rec.sha256);
    let text = String::from_utf8(bytes).unwrap();
    assert!(!text.contains('\r'));
    let (header, rows) = read_csv(Path::new(&rec.file));
    assert_eq!(header, ["j", "r", "one_minus_overlap", "underflow"]);
    assert_eq!(rows.len() as u64, rec.rows);
    assert_eq!(rows.len(), 2 * 9);
    for line in text.lines().skip(1) {
        let r: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(format!("{r:.16e}"), line.split(',').nth(1).unwrap());
    }
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let code = |args: &[&str]| lab(args, tmp.path()).status.code();
    assert_eq!(code(&["coeffs", "--j", "25", "--r", "0.84"]), Some(0));
    assert_eq!(code(&["coeffs", "--j", "25", "--r", "1.3"]), Some(2));
    assert_eq!(code(&["coeffs", "--j", "2.3", "--r", "0.5"]), Some(2));
    assert_eq!(code(&["coeffs", "--j", "25"]), Some(2));
    assert_eq!(code(&["squeeze-scan", "--j", "30", "--delta", "0.5"]), Some(2));
    assert_eq!(code(&["infidelity"]), Some(2));
    assert_eq!(code(&["no-such-command"]), Some(2));
    assert_eq!(code(&["errormap", "--r-step", "-0.1"]), Some(2));
    assert_eq!(code(&["steady-state", "--j", "3", "--omega", "9"]), Some(2));
    assert_eq!(code(&["--help"]), Some(0));
}

#[test]
fn config_file_and_env_jobs() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("lab.toml");
    std::fs::write(&cfg, "j = 7\nr = 0.3\n[coeffs]\nr = 0.6\n").unwrap();
    let out = tmp.path().join("o");
    let status = Command::new(env!("CARGO_BIN_EXE_crss-lab"))
        .args(["coeffs", "--config", cfg.to_str().unwrap(), "--j", "4", "--out", out.to_str().unwrap()])
        .env("CRSS_LAB_JOBS", "2")
        .status()
        .unwrap();
    assert!(status.success());
    let m = manifest(&out, "coeffs");
    assert_eq!((m.params.j, m.params.r, m.params.jobs, m.jobs), (Some(4.0), Some(0.6), Some(2), 2));
    std::fs::write(&cfg, "jj = 1\n").unwrap();
    let o = lab(&["coeffs", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn coeffs_examples() {
    let tmp = TempDir::new().unwrap();
    ok(&["coeffs", "--j", "25", "--r", "0.84"], tmp.path());
    let (header, rows) = read_csv(&tmp.path().join("coeffs.csv"));
    assert_eq!(header, ["m", "abs_ratio", "ln_abs_ratio"]);
    assert_eq!(rows.len(), 51);
    assert!(manifest(tmp.path(), "coeffs").notes.iter().any(|n| n.contains("m_- = -15, m_+ = 14")));
    let ln = column(&rows, 2);
    let interior_min = (1..50).min_by(|&a, &b| ln[a].total_cmp(&ln[b])).unwrap();
    assert_eq!(rows[interior_min][0], 14.0);

    ok(&["coeffs", "--j", "25", "--r", "0.75"], tmp.path());
    let (_, rows) = read_csv(&tmp.path().join("coeffs.csv"));
    let peak = rows.iter().map(|r| r[1]).fold(0.0, f64::max);
    assert!(rows[50][1] / peak < 0.01);
}

#[test]
fn gaussian_overlay_converges() {
    let tmp = TempDir::new().unwrap();
    let mut devs = Vec::new();
    for j in ["100", "200", "400"] {
        let dir = tmp.path().join(j);
        ok(&["coeffs", "--j", j, "--r", "0.5", "--normalized"], &dir);
        let (header, rows) = read_csv(&dir.join("coeffs.csv"));
        assert_eq!(header, ["m", "abs_am", "gaussian_fit"]);
        let peak = rows.iter().map(|r| r[1]).fold(0.0, f64::max);
        devs.push(rows.iter().map(|r| (r[1] - r[2]).abs()).fold(0.0, f64::max) / peak);
    }
    assert!(devs.windows(2).all(|w| w[1] < w[0]), "{devs:?}");
    assert!(devs[2] < 0.05, "{devs:?}");
}

#[test]
fn errormap_examples() {
    let tmp = TempDir::new().unwrap();
    ok(&["errormap", "--j-list", "100,150,200,250,300,350,400", "--r-step", "0.1", "--r-max", "0.9"], tmp.path());
    let (_, rows) = read_csv(&tmp.path().join("errormap.csv"));
    let at = |r: f64| rows.iter().filter(move |row| (row[1] - r).abs() < 1e-9);
    let j: Vec<f64> = at(0.7).map(|row| row[0]).collect();
    let ln: Vec<f64> = at(0.7).map(|row| row[4]).collect();
    assert!((slope(&j, &ln) / -0.363 - 1.0).abs() < 0.1);
    for (a, b) in at(0.4).zip(at(0.9)) {
        assert!(a[2] < b[2]);
    }
    let (header, trace) = read_csv(&tmp.path().join("rj.csv"));
    assert_eq!(header, ["j", "r_j", "r_j_asymptotic", "bracketed"]);
    assert_eq!(trace[0][0], 100.0);
    assert!((trace[0][2] - 0.97).abs() < 0.005);
    assert_eq!(manifest(tmp.path(), "errormap").warnings, 0);
}

#[test]
fn squeeze_scan_examples() {
    let tmp = TempDir::new().unwrap();
    ok(&["squeeze-scan", "--j", "100"], tmp.path());
    let text = std::fs::read_to_string(tmp.path().join("squeeze-scan.csv")).unwrap();
    let (header, rows) = read_csv(&tmp.path().join("squeeze-scan.csv"));
    assert_eq!(header, ["r", "xi_exact", "xi_crss", "kind"]);
    assert!(text.lines().last().unwrap().ends_with(",r_j"));
    let scan = &rows[..rows.len() - 1];
    let half = scan.iter().find(|r| (r[0] - 0.5).abs() < 1e-9).unwrap();
    assert!((half[1] / 0.866 - 1.0).abs() < 0.02);
    let r_j = rows.last().unwrap()[0];
    let best = scan.iter().min_by(|a, b| a[1].total_cmp(&b[1])).unwrap();
    assert!((best[0] - r_j).abs() <= 0.02 + 1e-9);

    ok(&["squeeze-scan", "--j", "25"], tmp.path());
    let (_, rows) = read_csv(&tmp.path().join("squeeze-scan.csv"));
    let r_j = rows.last().unwrap()[0];
    for row in rows.iter().filter(|r| r[0] < 0.8 * r_j) {
        assert!((row[1] - row[2]).abs() < 0.02);
    }
    let beyond = rows.iter().find(|r| (r[0] - 0.98).abs() < 1e-9).unwrap();
    assert!((beyond[1] - beyond[2]).abs() > 0.1);
}

#[test]
fn detuned_scan_matches_resonant_at_zero_detuning_limit() {
    let tmp = TempDir::new().unwrap();
    ok(&["squeeze-scan", "--j", "6", "--delta", "1e-9", "--r-step", "0.2", "--r-max", "0.8"], &tmp.path().join("d"));
    ok(&["squeeze-scan", "--j", "6", "--r-step", "0.2", "--r-max", "0.8"], &tmp.path().join("z"));
    let (_, d) = read_csv(&tmp.path().join("d/squeeze-scan.csv"));
    let (_, z) = read_csv(&tmp.path().join("z/squeeze-scan.csv"));
    for (a, b) in d.iter().zip(&z) {
        assert!((a[1] - b[1]).abs() < 1e-6, "{a:?} {b:?}");
    }
}

#[test]
fn minsqueeze_examples() {
    let tmp = TempDir::new().unwrap();
    ok(&["minsqueeze"], tmp.path());
    let (_, rows) = read_csv(&tmp.path().join("minsqueeze.csv"));
    assert_eq!(column(&rows, 0), [25.0, 36.0, 50.0, 72.0, 100.0]);
    for r in &rows {
        assert!((r[1] / r[3] - 1.0).abs() < 0.05, "{r:?}");
    }
    let (_, slopes) = read_csv(&tmp.path().join("slopes.csv"));
    assert!((slopes[0][4] + 0.28).abs() <= 0.04);

    ok(&["minsqueeze", "--j-list", "100,1000,10000"], tmp.path());
    let (_, rows) = read_csv(&tmp.path().join("minsqueeze.csv"));
    assert!(rows[0][1].is_finite() && rows[2][1].is_nan());
    assert!(!manifest(tmp.path(), "minsqueeze").notes.is_empty());
}

#[test]
fn infidelity_examples() {
    let tmp = TempDir::new().unwrap();
    ok(&["infidelity", "--mode", "ansatz-vs-min", "--j-list", "5,10,15,20,25", "--r-min", "0.7", "--r-max", "0.7"], tmp.path());
    let (_, rows) = read_csv(&tmp.path().join("infidelity.csv"));
    let v = column(&rows, 2);
    assert!(v.windows(2).all(|w| w[1] < w[0]) && v.iter().all(|x| *x > 0.0));
    let ln: Vec<f64> = v.iter().map(|x| x.ln()).collect();
    assert!(slope(&column(&rows, 0), &ln) < -0.5);

    ok(&["infidelity", "--mode", "ansatz-vs-steady", "--j-list", "10", "--r-min", "0.001", "--r-max", "0.5", "--r-step", "0.001"], tmp.path());
    let (header, rows) = read_csv(&tmp.path().join("infidelity.csv"));
    assert_eq!(header[2], "jr_scaled_infidelity");
    assert_eq!(rows[0][2], 0.0);
    assert_eq!(rows[0][3], 1.0);
    assert!(rows.iter().all(|r| r[3] == 1.0 || r[2] >= 1e-14));
}

#[test]
fn steady_state_and_observables() {
    let tmp = TempDir::new().unwrap();
    ok(&["steady-state", "--j", "3", "--r", "0.4"], tmp.path());
    let (header, rows) = read_csv(&tmp.path().join("steady-state.csv"));
    assert_eq!(header, ["row_m", "col_m", "re", "im"]);
    assert_eq!(rows.len(), 49);
    let trace: f64 = rows.iter().filter(|r| r[0] == r[1]).map(|r| r[2]).sum();
    assert!((trace - 1.0).abs() < 1e-12);

    ok(&["steady-state", "--j", "3", "--r", "0.4", "--delta", "0.7", "--gamma", "2"], tmp.path());
    let m = manifest(tmp.path(), "steady-state");
    assert_eq!(m.params.delta, Some(0.7));

    ok(&["observables", "--j", "40", "--r", "0.5"], tmp.path());
    let text = std::fs::read_to_string(tmp.path().join("observables.csv")).unwrap();
    let get = |k: &str| -> f64 {
        text.lines().find(|l| l.starts_with(&format!("{k},"))).unwrap().split(',').nth(1).unwrap().parse().unwrap()
    };
    assert!((get("xi_sq_steady") - 0.75f64.sqrt()).abs() < 1e-3);
    assert!((get("mean_jz_steady") / (-40.0 * 0.75f64.sqrt()) - 1.0).abs() < 0.05);
    assert!(get("fidelity_steady_ansatz") > 1.0 - 1e-9);
}
