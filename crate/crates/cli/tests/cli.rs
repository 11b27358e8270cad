use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tbs_core::mode_space::text;

fn bench(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oam-bench"))
        .args(args)
        .current_dir(cwd)
        .env_remove("OAM_BENCH_OUT")
        .output()
        .expect("spawn oam-bench")
}

fn scenario(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn summary_value(summary: &str, key: &str) -> String {
    summary
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no `{key}` in\n{summary}"))
        .to_string()
}

#[test]
fn tuning_reports_the_balanced_crossing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(
        tmp.path(),
        "t.cfg",
        "scenario = tuning\n[space]\noam_range = 1\n",
    );
    let o = bench(&[&cfg, "--out", "out"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = fs::read_to_string(tmp.path().join("out/summary.txt")).unwrap();
    let crossing: f64 = summary_value(&summary, "crossing_deg").parse().unwrap();
    assert!((crossing - 22.5).abs() <= 0.05, "{crossing}");

    let csv = fs::read_to_string(tmp.path().join("out/tuning.csv")).unwrap();
    assert!(csv.starts_with("# scenario = tuning\n"));
    assert!(csv.contains("# oam_range = 1\n"));
    let data: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "theta2,i5,i6");
    assert_eq!(data.len(), 1 + 1801);
    assert!(
        stderr(&o).contains("guard"),
        "ideal ER should warn about the guard"
    );
    assert!(stdout(&o).contains("crossing at 22.500°"));
}

#[test]
fn ideal_tomography_hits_the_guard_on_every_row() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(
        tmp.path(),
        "t.cfg",
        "scenario = tomography\n[tbs]\ntheta2 = 0\n",
    );
    let o = bench(&[&cfg, "--out", "o"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = fs::read_to_string(tmp.path().join("o/summary.txt")).unwrap();
    assert!(
        summary.contains("all rows ER_OAM > 120 dB (guard)"),
        "{summary}"
    );
    assert!(stderr(&o).contains("warning: 9 of 9 rows hit"));

    let csv = fs::read_to_string(tmp.path().join("o/tomo.csv")).unwrap();
    let data: Vec<Vec<&str>> = csv
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(data.len(), 9);
    for (i, row) in data.iter().enumerate() {
        assert_eq!(row.len(), 10);
        for (j, cell) in row[1..].iter().enumerate() {
            let x: f64 = cell.parse().unwrap();
            assert_eq!(x, if i == j { 1.0 } else { 0.0 });
        }
    }
}

#[test]
fn crosstalk_tomography_stays_above_twenty_db() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(
        tmp.path(),
        "t.cfg",
        "scenario = tomography\n[tbs]\ntheta2 = 0\n[tomography]\ncrosstalk_db = 25\n",
    );
    let o = bench(&[&cfg, "--out", "o"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = fs::read_to_string(tmp.path().join("o/summary.txt")).unwrap();
    let v = summary_value(&summary, "er_oam");
    let db: f64 = v
        .trim_start_matches("min ER_OAM = ")
        .trim_end_matches(" dB")
        .parse()
        .unwrap();
    assert!(db >= 20.0, "{v}");
}

#[test]
fn ideal_sagnac_has_unit_mean_visibility() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(
        tmp.path(),
        "s.cfg",
        "scenario = sagnac\n[space]\noam_range = 0\n[sweep]\nstep = 1\n[sagnac]\ntheta2_step = 0.5\n",
    );
    let o = bench(&[&cfg, "--out", "o"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = fs::read_to_string(tmp.path().join("o/summary.txt")).unwrap();
    assert!(summary.contains("mean V = 1.000000"), "{summary}");
    let csv = fs::read_to_string(tmp.path().join("o/sagnac.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "theta0,v_port1,v_port2"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 91);
}

const MC_SCENARIO: &str = "scenario = polarization\n\
    [space]\noam_range = 0\n\
    [imperfections]\npbs_extinction_db = 25\nloss.6.h = 0.98\nloss.6.v = 0.98\n\
    [sweep]\nstep = 2\nrepeats = 8\nsigma_hwp_angle_deg = 0.3\nsigma_extinction_db = 2\n";

#[test]
fn same_seed_gives_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(tmp.path(), "p.cfg", MC_SCENARIO);
    for dir in ["a", "b", "c"] {
        let seed = if dir == "c" { "8" } else { "7" };
        let o = bench(&[&cfg, "--out", dir, "--seed", seed], tmp.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["pd.csv", "pd_table.csv", "summary.txt", "metrics.csv"] {
        let a = fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between identical runs");
    }
    let a = fs::read_to_string(tmp.path().join("a/pd_table.csv")).unwrap();
    let c = fs::read_to_string(tmp.path().join("c/pd_table.csv")).unwrap();
    assert!(a.contains("# seed = 7") && c.contains("# seed = 8"));
    let body = |s: &str| {
        s.lines()
            .filter(|l| !l.starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_ne!(
        body(&a),
        body(&c),
        "seed should change the Monte-Carlo columns"
    );
}

#[test]
fn polarization_table_lists_all_split_ratios() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(tmp.path(), "p.cfg", MC_SCENARIO);
    let o = bench(
        &[&cfg, "--out", "o", "--set", "sweep.repeats=2"],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = fs::read_to_string(tmp.path().join("o/summary.txt")).unwrap();
    for sr in ["0.5", "0.4", "0.3", "0.2", "0.1"] {
        assert!(
            summary.contains(&format!("pd_table.sr_{sr} = ")),
            "{summary}"
        );
    }
    assert_eq!(summary_value(&summary, "monte_carlo_repeats"), "2");
    let pd = fs::read_to_string(tmp.path().join("o/pd.csv")).unwrap();
    assert!(pd.lines().any(|l| l == "theta0,sr"));
}

#[test]
fn dump_writes_a_readable_operator() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(
        tmp.path(),
        "d.cfg",
        "scenario = dump\n[space]\noam_range = 1\n[dump]\ntarget = elements\n\
         element = hwp theta=22.5 ports=[3,4]\n\
         element = pbs coating=left in=[3,4] out=[5,6]\n\
         element = mirror port=5 phase=0\n",
    );
    let o = bench(&[&cfg, "--out", "o"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text_form = fs::read_to_string(tmp.path().join("o/operator.txt")).unwrap();
    assert!(text_form.starts_with("# scenario = dump\n"));
    let op = text::read_operator(&text_form, "dumped").unwrap();
    assert_eq!(op.space().dimension(), 6 * 2 * 3);
    assert!(op.unitarity_defect() < 1e-12);
}

#[test]
fn config_errors_exit_with_one_and_a_location() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(
        tmp.path(),
        "bad.cfg",
        "scenario = tuning\n[imperfections]\npbs_extinction_db = -3\n",
    );
    let o = bench(&[&cfg, "--out", "o"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(
        err.contains("extinction must be ≥ 0") && err.contains("line 3"),
        "{err}"
    );
    assert!(!tmp.path().join("o").exists());

    let o = bench(&["missing.cfg"], tmp.path());
    assert_eq!(o.status.code(), Some(1));

    let good = scenario(tmp.path(), "ok.cfg", "scenario = tuning\n");
    let o = bench(&[&good, "--set", "tbs.nonsense=1"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--set"));

    let o = bench(&[&good, "--bogus-flag"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(
        tmp.path(),
        "t.cfg",
        "scenario = dump\n[space]\noam_range = 0\n",
    );
    fs::write(tmp.path().join("occupied"), "not a directory").unwrap();
    let o = bench(&[&cfg, "--out", "occupied"], tmp.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn output_directory_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(
        tmp.path(),
        "t.cfg",
        "scenario = dump\n[space]\noam_range = 0\n",
    );
    let o = Command::new(env!("CARGO_BIN_EXE_oam-bench"))
        .arg(&cfg)
        .current_dir(tmp.path())
        .env("OAM_BENCH_OUT", "from_env")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(tmp.path().join("from_env/operator.txt").exists());

    let cfg = scenario(
        tmp.path(),
        "u.cfg",
        "scenario = dump\nout_dir = from_file\n[space]\noam_range = 0\n",
    );
    let o = Command::new(env!("CARGO_BIN_EXE_oam-bench"))
        .arg(&cfg)
        .current_dir(tmp.path())
        .env("OAM_BENCH_OUT", "from_env_2")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(tmp.path().join("from_file/operator.txt").exists());
    assert!(!tmp.path().join("from_env_2").exists());
}
