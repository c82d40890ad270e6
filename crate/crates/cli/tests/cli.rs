use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dctnet::bankfile::load_banks;
use dctnet::pipeline::PipelineConfig;
use dctnet::FilterBank64;

fn dctnet(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dctnet"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn filters_writes_bank_and_renderings() {
    let dir = tempfile::tempdir().unwrap();
    let out = dctnet(
        dir.path(),
        &["filters", "--k", "5", "--p", "8", "--order", "horizontal-major", "--out", "bank.dctb", "--emit-pgm", "viz/"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let banks: Vec<FilterBank64> = load_banks(&dir.path().join("bank.dctb")).unwrap();
    assert_eq!(banks.len(), 1);
    assert_eq!(banks[0].len(), 8);
    let mut pgms: Vec<_> = std::fs::read_dir(dir.path().join("viz"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    pgms.sort();
    assert_eq!(pgms.len(), 8);
    let first = std::fs::read(&pgms[0]).unwrap();
    assert!(first.starts_with(b"P5\n80 80\n255\n"));
    let pixels = &first[first.len() - 80 * 80..];
    assert_eq!(pixels.iter().min(), Some(&0));
    assert_eq!(pixels.iter().max(), Some(&255));

    let info = dctnet(dir.path(), &["inspect", "bank.dctb"]);
    assert!(info.status.success());
    assert!(stdout(&info).contains("k=5 p=8 policy=horizontal-major"));
}

#[test]
fn flipped_and_zigzag_orders_differ() {
    let dir = tempfile::tempdir().unwrap();
    for (name, extra) in [("a.dctb", vec![]), ("b.dctb", vec!["--flip-axis"]), ("c.dctb", vec!["--order", "zigzag"])] {
        let mut args = vec!["filters", "--p", "3", "--out", name];
        args.extend(extra);
        assert!(dctnet(dir.path(), &args).status.success());
    }
    let read = |n: &str| std::fs::read(dir.path().join(n)).unwrap();
    assert_ne!(read("a.dctb"), read("b.dctb"));
    assert_ne!(read("a.dctb"), read("c.dctb"));
}

#[test]
fn verify_klt_exit_status_follows_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let pass = dctnet(dir.path(), &["verify-klt", "--r", "0.999", "--n", "8", "--csv", "out.csv"]);
    assert!(pass.status.success());
    let text = stdout(&pass);
    assert!(text.contains("min |cos|"));
    assert!(text.contains("1 - r^2"));
    let csv = std::fs::read_to_string(dir.path().join("out.csv")).unwrap();
    assert!(csv.starts_with("n,omega,lambda_formula,lambda_numeric,cos_similarity\n"));
    assert_eq!(csv.lines().count(), 9);

    let fail = dctnet(dir.path(), &["verify-klt", "--r", "0.5", "--n", "8"]);
    assert!(!fail.status.success());
    let bad = dctnet(dir.path(), &["verify-klt", "--r", "1.0", "--n", "8"]);
    assert!(!bad.status.success());
}

#[test]
fn synth_evaluate_and_extract() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert!(dctnet(p, &["synth", "--out", "data", "--subjects", "4"]).status.success());
    std::fs::write(p.join("cfg.toml"), "crop = [64, 64]\nblock = [16, 16]\nwpca_dim = 3\n").unwrap();

    let eval = dctnet(p, &["evaluate", "--config", "cfg.toml", "--manifest", "data/manifest.csv", "--report", "r.csv", "--table", "r.txt"]);
    assert!(eval.status.success(), "{}", String::from_utf8_lossy(&eval.stderr));
    let report = std::fs::read_to_string(p.join("r.csv")).unwrap();
    assert!(report.starts_with("group,rate_percent,n_probes\n"));
    assert!(report.lines().last().unwrap().starts_with("Avg,"));
    assert!(std::fs::read_to_string(p.join("r.txt")).unwrap().contains("Avg"));

    let ext = dctnet(p, &["extract", "--config", "cfg.toml", "--manifest", "data/manifest.csv", "--out", "f.dctf"]);
    assert!(ext.status.success());
    let info = stdout(&dctnet(p, &["inspect", "f.dctf"]));
    assert!(info.contains("stage wpca, dim 3, 20 record(s)"), "{info}");
}

#[test]
fn unreadable_probe_fails_the_run_but_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert!(dctnet(p, &["synth", "--out", "data", "--subjects", "3"]).status.success());
    let manifest = p.join("data/manifest.csv");
    let mut text = std::fs::read_to_string(&manifest).unwrap();
    text.push_str("missing.pgm,1,probe,shift-up\n");
    std::fs::write(&manifest, text).unwrap();
    std::fs::write(p.join("cfg.toml"), "crop = [64, 64]\nblock = [16, 16]\n").unwrap();

    let out = dctnet(p, &["evaluate", "--config", "cfg.toml", "--manifest", "data/manifest.csv", "--report", "r.csv"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.pgm"));
    assert!(p.join("r.csv").exists());
}

#[test]
fn unreadable_gallery_aborts() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("m.csv"), "path,subject,role,group\nnone.pgm,1,gallery,g\n").unwrap();
    std::fs::write(p.join("cfg.toml"), "crop = [64, 64]\nblock = [16, 16]\n").unwrap();
    let out = dctnet(p, &["evaluate", "--config", "cfg.toml", "--manifest", "m.csv", "--report", "r.csv"]);
    assert!(!out.status.success());
    assert!(!p.join("r.csv").exists());
}

#[test]
fn learn_pca_then_use_bank_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert!(dctnet(p, &["synth", "--out", "data", "--subjects", "3"]).status.success());
    std::fs::write(p.join("pca.toml"), "crop = [64, 64]\nblock = [16, 16]\n[filters]\nsource = \"pca-learn\"\np = [4, 4]\n").unwrap();
    let out = dctnet(p, &["learn-pca", "--config", "pca.toml", "--manifest", "data/manifest.csv", "--out", "pca.dctb"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&dctnet(p, &["inspect", "pca.dctb"])).contains("policy=learned"));

    std::fs::write(p.join("file.toml"), "crop = [64, 64]\nblock = [16, 16]\n[filters]\nsource = \"file\"\nbank = \"pca.dctb\"\n").unwrap();
    let eval = dctnet(p, &["evaluate", "--config", "file.toml", "--manifest", "data/manifest.csv", "--report", "r.csv"]);
    assert!(eval.status.success(), "{}", String::from_utf8_lossy(&eval.stderr));
}

#[test]
fn inspect_rejects_unknown_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("x.bin"), b"JUNKJUNK").unwrap();
    assert!(!dctnet(dir.path(), &["inspect", "x.bin"]).status.success());
}

#[test]
fn shipped_configs_parse() {
    let expect = [
        ("ar.toml", [165, 120], [20, 20], true, Some(150)),
        ("feret1.toml", [64, 64], [16, 16], true, None),
        ("feret1-no-tr.toml", [64, 64], [16, 16], false, None),
        ("feret2.toml", [128, 128], [16, 16], true, Some(1000)),
    ];
    for (file, crop, block, tr, wpca) in expect {
        let c = PipelineConfig::load(&configs_dir().join(file)).unwrap();
        assert_eq!((c.crop, c.block, c.tr_norm, c.wpca_dim), (crop, block, tr, wpca), "{file}");
        assert_eq!((c.filters.k, c.filters.p.as_slice()), (5, &[8, 8][..]));
        assert_eq!(PipelineConfig::from_toml_str(&c.to_toml_string()).unwrap(), c);
    }
    PipelineConfig::load(&configs_dir().join("synthetic.toml")).unwrap();
}
