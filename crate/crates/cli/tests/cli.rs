use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use seqboot::datagen::{signal, SyntheticName};
use tempfile::tempdir;

fn seqboot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seqboot"))
        .args(args)
        .env_remove("SEQBOOT_MANIFEST_DIR")
        .output()
        .expect("binary runs")
}

fn small_run(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "run", "--B", "8", "--M", "3", "--n-train", "60", "--n-test", "90", "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    seqboot(&args)
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn exp1_twonorm_has_identical_rows() {
    let tmp = tempdir().unwrap();
    let out = tmp.path().join("r");
    let o = seqboot(&["run", "--exp", "exp1", "--seeds", "1", "--datasets", "twonorm", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("exp1_seed1.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], "dataset,type,metric,OOB,SB_OOB,diff");
    let e1: Vec<&str> = lines[1].split(',').collect();
    let e2: Vec<&str> = lines[2].split(',').collect();
    assert_eq!((e1[2], e2[2]), ("E1_B", "E2_B"));
    assert_eq!(e1[3..], e2[3..]);
}

#[test]
fn runs_are_byte_identical_across_worker_counts() {
    let tmp = tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let o = small_run(&a, &["--seeds", "1,25", "--workers", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = small_run(&b, &["--seeds", "1,25", "--workers", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let (fa, fb) = (dir_bytes(&a), dir_bytes(&b));
    assert!(!fa.is_empty());
    assert_eq!(fa, fb);
}

#[test]
fn three_seeds_give_three_files_per_experiment_with_golden_header() {
    let tmp = tempdir().unwrap();
    let out = tmp.path().join("r");
    let o = small_run(&out, &["--datasets", "twonorm,friedman1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for exp in ["exp1", "exp2", "exp3", "exp4", "exp5", "vardecomp"] {
        for seed in [1, 25, 50] {
            let text = fs::read_to_string(out.join(format!("{exp}_seed{seed}.csv"))).unwrap();
            assert!(text.starts_with("dataset,type,metric,OOB,SB_OOB,diff\n"), "{exp}");
            assert!(text.lines().count() > 1, "{exp} seed {seed} has rows");
        }
    }
    assert!(!out.join("errors.csv").exists());
}

#[test]
fn markdown_format_adds_tables() {
    let tmp = tempdir().unwrap();
    let out = tmp.path().join("r");
    let o = small_run(&out, &["--exp", "exp4", "--seeds", "1", "--datasets", "ringnorm", "--format", "markdown"]);
    assert_eq!(o.status.code(), Some(0));
    let md = fs::read_to_string(out.join("exp4_seed1.md")).unwrap();
    assert!(md.contains("| ringnorm | class | eOB |"));
    assert!(out.join("exp4_seed1.csv").exists());
}

#[test]
fn config_errors_exit_one() {
    let tmp = tempdir().unwrap();
    let out = tmp.path().join("r");
    assert_eq!(seqboot(&["run", "--B", "0", "--out", out.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(small_run(&out, &["--rho", "1.5"]).status.code(), Some(1));
    assert_eq!(small_run(&out, &["--datasets", "nosuchthing"]).status.code(), Some(1));
    assert_eq!(small_run(&out, &["--exp", "exp9"]).status.code(), Some(1));
}

#[test]
fn broken_dataset_gives_partial_exit_and_error_manifest() {
    let tmp = tempdir().unwrap();
    let manifest = tmp.path().join("ghost.manifest");
    fs::write(&manifest, "name = ghost\npath = missing.csv\ntarget = y\ntask = regression\n").unwrap();
    let out = tmp.path().join("r");
    let o = small_run(
        &out,
        &["--exp", "exp4", "--seeds", "1", "--datasets", &format!("twonorm,{}", manifest.display())],
    );
    assert_eq!(o.status.code(), Some(2));
    let table = fs::read_to_string(out.join("exp4_seed1.csv")).unwrap();
    assert!(table.lines().skip(1).all(|l| l.starts_with("twonorm,")));
    assert_eq!(table.lines().count(), 5);
    let errors = fs::read_to_string(out.join("errors.csv")).unwrap();
    assert!(errors.starts_with("seed,dataset,experiment,message\n"));
    assert!(errors.contains("1,ghost,exp4,"));
}

#[test]
fn real_dataset_by_manifest_name() {
    let tmp = tempdir().unwrap();
    let dir = tmp.path().join("manifests");
    fs::create_dir(&dir).unwrap();
    let mut csv = String::from("a,b,y\n");
    for i in 0..90 {
        let a = (i % 13) as f64 * 0.5;
        let b = (i % 7) as f64;
        csv += &format!("{a},{b},{}\n", 2.0 * a - b);
    }
    fs::write(dir.join("lin.csv"), csv).unwrap();
    fs::write(dir.join("lin.manifest"), "name = lin\npath = lin.csv\ntarget = y\ntask = regression\n").unwrap();
    let out = tmp.path().join("r");
    let o = small_run(
        &out,
        &["--exp", "exp2,exp5", "--seeds", "1", "--datasets", "lin", "--manifest-dir", dir.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let exp5 = fs::read_to_string(out.join("exp5_seed1.csv")).unwrap();
    assert!(exp5.contains("lin,reg,mse_original,"));
    assert!(exp5.contains(",0.00e+00\n"));
    let exp2 = fs::read_to_string(out.join("exp2_seed1.csv")).unwrap();
    assert!(exp2.contains("lin,real,EB1,"));
    let info = fs::read_to_string(out.join("datasets.csv")).unwrap();
    assert!(info.contains("sha256="));
}

#[test]
fn gen_writes_requested_rows_deterministically() {
    let tmp = tempdir().unwrap();
    let a = tmp.path().join("a.csv");
    let b = tmp.path().join("b.csv");
    for p in [&a, &b] {
        let o = seqboot(&["gen", "friedman1", "-n", "5", "--seed", "7", "--out", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert_eq!(text.lines().next().unwrap(), "x1,x2,x3,x4,x5,x6,x7,x8,x9,x10,y");
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn gen_without_noise_matches_formula() {
    for name in [SyntheticName::Friedman1, SyntheticName::Friedman2, SyntheticName::Friedman3] {
        let o = seqboot(&["gen", name.as_str(), "-n", "20", "--seed", "3", "--no-noise"]);
        assert_eq!(o.status.code(), Some(0));
        let text = String::from_utf8(o.stdout).unwrap();
        for line in text.lines().skip(1) {
            let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
            let (x, y) = v.split_at(v.len() - 1);
            let expected = signal(name, x).unwrap();
            assert!((y[0] - expected).abs() <= 1e-12 * expected.abs().max(1.0), "{name:?}");
        }
    }
}

#[test]
fn gen_rejects_unknown_generator() {
    let o = seqboot(&["gen", "fivenorm", "-n", "5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("fivenorm"));
}

#[test]
fn datasets_list_counts_and_marks_broken_manifests() {
    let tmp = tempdir().unwrap();
    let dir = tmp.path();
    let list = |d: &Path| {
        let o = seqboot(&["datasets", "list", "--manifest-dir", d.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        String::from_utf8(o.stdout).unwrap()
    };
    assert_eq!(list(dir).lines().count(), 7);

    fs::write(dir.join("tiny.csv"), "a,y\n1,0\n2,1\n3,0\n").unwrap();
    fs::write(dir.join("tiny.manifest"), "name = tiny\npath = tiny.csv\ntarget = y\ntask = classification\n").unwrap();
    let text = list(dir);
    assert_eq!(text.lines().count(), 8);
    assert!(text.lines().last().unwrap().contains("sha256="));

    fs::write(dir.join("zz.manifest"), "this is = not = valid\npath\n").unwrap();
    let text = list(dir);
    assert_eq!(text.lines().count(), 9);
    let broken = text.lines().find(|l| l.starts_with("zz")).unwrap();
    assert!(broken.contains("ERROR"));
}

#[test]
fn datasets_list_reads_env_var() {
    let tmp = tempdir().unwrap();
    fs::write(tmp.path().join("tiny.csv"), "a,y\n1,0\n2,1\n").unwrap();
    fs::write(tmp.path().join("tiny.manifest"), "name = tiny\npath = tiny.csv\ntarget = y\ntask = classification\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_seqboot"))
        .args(["datasets", "list"])
        .env("SEQBOOT_MANIFEST_DIR", tmp.path())
        .output()
        .unwrap();
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 8);
}

fn fixture(dir: &Path, exp: &str, seed: u64, rows: &[(&str, &str, f64)]) {
    let mut text = String::from("dataset,type,metric,OOB,SB_OOB,diff\n");
    for (d, m, diff) in rows {
        text += &format!("{d},synthetic,{m},0.100,0.100,{diff:.2e}\n");
    }
    fs::write(dir.join(format!("{exp}_seed{seed}.csv")), text).unwrap();
}

fn consistency_row<'a>(report: &'a str, key: &str) -> Vec<&'a str> {
    let line = report
        .lines()
        .find(|l| l.starts_with(&format!("| {key} |")))
        .unwrap_or_else(|| panic!("no row for {key}"));
    line.trim_matches('|').split('|').map(str::trim).collect()
}

#[test]
fn report_counts_signs_across_fixtures() {
    let tmp = tempdir().unwrap();
    let d = tmp.path();
    fixture(d, "exp3", 1, &[("twonorm", "R1", -1e-3), ("ringnorm", "R1", 2e-3)]);
    fixture(d, "exp3", 25, &[("twonorm", "R1", -2e-3), ("ringnorm", "R1", 0.0)]);
    fixture(d, "exp3", 50, &[("twonorm", "R1", -5e-4), ("ringnorm", "R1", -1e-3)]);
    let o = seqboot(&["report", d.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(consistency_row(&text, "exp3 | twonorm | R1"), ["exp3", "twonorm", "R1", "3", "3", "0", "0", "3/3"]);
    assert_eq!(consistency_row(&text, "exp3 | ringnorm | R1"), ["exp3", "ringnorm", "R1", "3", "1", "1", "1", "1/3"]);
}

#[test]
fn report_single_seed_and_empty_dir() {
    let tmp = tempdir().unwrap();
    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();
    assert_eq!(seqboot(&["report", empty.to_str().unwrap()]).status.code(), Some(1));

    let one = tmp.path().join("one");
    fs::create_dir(&one).unwrap();
    fixture(&one, "exp1", 1, &[("waveform", "E1_B", 3e-4)]);
    let out = tmp.path().join("summary.md");
    let o = seqboot(&["report", one.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(out).unwrap();
    assert_eq!(consistency_row(&text, "exp1 | waveform | E1_B"), ["exp1", "waveform", "E1_B", "1", "0", "0", "1", "1/1"]);
}

#[test]
fn report_over_a_real_run() {
    let tmp = tempdir().unwrap();
    let out = tmp.path().join("r");
    assert_eq!(small_run(&out, &["--exp", "exp3", "--datasets", "twonorm"]).status.code(), Some(0));
    let o = seqboot(&["report", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    for m in ["R1", "R2", "R3", "R4"] {
        assert_eq!(consistency_row(&text, &format!("exp3 | twonorm | {m}"))[3], "3");
    }
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(seqboot(&["run", "--bogus"]).status.code(), Some(1));
    assert_eq!(seqboot(&["--help"]).status.code(), Some(0));
}
