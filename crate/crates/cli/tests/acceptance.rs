//! Acceptance checks, one result line per criterion. Run with
//! `cargo test -p dctnet-cli --test acceptance`.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dctnet::dct_filters::{dctnet_banks, ScanPolicy};
use dctnet::markov_klt::{compare_klt_dct, EigenvalueForm, KltEigenSystem, MarkovModel};
use dctnet::network::{binarize_encode, block_histogram, convolve_bank, forward_cascade, BlockSize};
use dctnet::pipeline::{evaluate_images, PipelineConfig};
use dctnet::synthetic::SyntheticFaces;
use dctnet::tr_norm::{tr_normalize, tr_normalize_segment};
use dctnet::{FilterBank64, Plane64};

type Outcome = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit_secs: f64) -> Result<(), String> {
    check(
        elapsed.as_secs_f64() < limit_secs,
        format!("took {:.2} s, limit {limit_secs} s", elapsed.as_secs_f64()),
    )
}

// Oracles ----------------------------------------------------------------

/// Eigenvectors of `r^|i-j|` from the dense solver, sorted by descending
/// eigenvalue.
fn dense_eigen(r: f64, n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = DMatrix::from_fn(n, n, |i, j| r.powi((i as i32 - j as i32).abs()));
    let eig = m.symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = idx.iter().map(|&i| eig.eigenvectors.column(i).iter().copied().collect()).collect();
    (values, vectors)
}

fn dct_ii(n: usize, k: usize) -> Vec<f64> {
    let scale = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
    (0..n)
        .map(|m| scale * (std::f64::consts::PI * k as f64 * (2 * m + 1) as f64 / (2 * n) as f64).cos())
        .collect()
}

fn abs_cos(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).abs()
}

/// Same-size cross-correlation with a zero border, straight from the
/// definition; `kernel` is square with odd side.
fn naive_correlate(x: &Plane64, kernel: &[f64], side: usize) -> Plane64 {
    let pad = (side / 2) as isize;
    let (rows, cols) = x.dims();
    Plane64::from_fn(rows, cols, |i, j| {
        let mut acc = 0.0;
        for a in 0..side {
            for b in 0..side {
                let (r, c) = (i as isize + a as isize - pad, j as isize + b as isize - pad);
                if r >= 0 && c >= 0 && (r as usize) < rows && (c as usize) < cols {
                    acc += kernel[a * side + b] * x[(r as usize, c as usize)];
                }
            }
        }
        acc
    })
}

/// Full 2D convolution of two `k x k` kernels, side `2k - 1`.
fn full_convolution(w1: &[f64], w2: &[f64], k: usize) -> Vec<f64> {
    let side = 2 * k - 1;
    let mut out = vec![0.0; side * side];
    for a1 in 0..k {
        for b1 in 0..k {
            for a2 in 0..k {
                for b2 in 0..k {
                    out[(a1 + a2) * side + b1 + b2] += w1[a1 * k + b1] * w2[a2 * k + b2];
                }
            }
        }
    }
    out
}

fn random_plane(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Plane64 {
    Plane64::from_fn(rows, cols, |_, _| rng.random_range(0.0..255.0))
}

// Criteria ---------------------------------------------------------------

fn klt_convergence() -> Outcome {
    let start = Instant::now();
    let mut lines = Vec::new();
    for n in [4, 8, 16] {
        let mut previous = 0.0;
        let mut mins = Vec::new();
        for r in [0.9, 0.99, 0.999] {
            let (_, vectors) = dense_eigen(r, n);
            let min = (0..n).map(|k| abs_cos(&vectors[k], &dct_ii(n, k))).fold(f64::INFINITY, f64::min);
            let lib = compare_klt_dct(&MarkovModel::new(r, n).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            check(
                (lib.min_cos - min).abs() < 1e-9,
                format!("N={n} r={r}: library min|cos| {} vs oracle {min}", lib.min_cos),
            )?;
            check(min >= previous - 1e-12, format!("N={n}: min|cos| decreased at r={r}"))?;
            previous = min;
            mins.push(format!("{min:.6}"));
        }
        check(previous >= 0.995, format!("N={n}: min|cos| {previous:.6} < 0.995 at r=0.999"))?;
        lines.push(format!("N={n}: {}", mins.join(" -> ")));
    }
    within(start.elapsed(), 1.0)?;
    Ok(lines.join("; "))
}

fn eigenvalue_ordering() -> Outcome {
    let start = Instant::now();
    let (r, n) = (0.9, 100);
    let model = MarkovModel::new(r, n).map_err(|e| e.to_string())?;
    let system = KltEigenSystem::solve(&model).map_err(|e| e.to_string())?;
    check(system.omegas.windows(2).all(|w| w[0] < w[1]), "roots not increasing")?;
    let (numeric, _) = dense_eigen(r, n);
    let rel = |form: EigenvalueForm| {
        system
            .omegas
            .iter()
            .zip(&numeric)
            .map(|(&w, &l)| ((form.eval(r, w) - l) / l).abs())
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (rel(EigenvalueForm::OneMinusR), rel(EigenvalueForm::OneMinusRSquared));
    let validated = if e2 < 1e-8 {
        EigenvalueForm::OneMinusRSquared
    } else if e1 < 1e-8 {
        EigenvalueForm::OneMinusR
    } else {
        return Err(format!("neither numerator matches: 1-r {e1:.2e}, 1-r^2 {e2:.2e}"));
    };
    check(system.form == validated, "library picked a different numerator than the oracle")?;
    check(
        system.eigenvalues.windows(2).all(|w| w[0] > w[1]),
        "eigenvalues not strictly decreasing in frequency",
    )?;
    within(start.elapsed(), 1.0)?;
    Ok(format!(
        "validated numerator {} (max rel. err {:.1e}; 1-r gives {:.1e}); lambda {:.3} .. {:.5} strictly decreasing",
        validated.label(),
        e2.min(e1),
        e1,
        system.eigenvalues[0],
        system.eigenvalues[n - 1]
    ))
}

fn encoder_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..1000 {
        let p = if trial % 2 == 0 { 3 } else { 8 };
        let maps: Vec<Plane64> = (0..p)
            .map(|_| {
                Plane64::from_fn(4, 4, |_, _| match rng.random_range(0..10) {
                    0 => 0.0,
                    _ => rng.random_range(-1.0..1.0),
                })
            })
            .collect();
        let code = binarize_encode(&maps).map_err(|e| e.to_string())?;
        for i in 0..4 {
            for j in 0..4 {
                let mut expected = 0u32;
                for (bit, map) in maps.iter().enumerate() {
                    if map[(i, j)] > 0.0 {
                        expected += 2u32.pow(bit as u32);
                    }
                }
                check(code.codes[(i, j)] == expected, format!("trial {trial} pixel ({i},{j})"))?;
            }
        }
    }
    within(start.elapsed(), 1.0)?;
    Ok("1000 stacks (P_L = 3, 8) match bit assembly exactly".into())
}

fn convolution_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let k = 5;
    let banks: Vec<FilterBank64> = dctnet_banks(k, &[8, 8], ScanPolicy::default()).map_err(|e| e.to_string())?;
    let pad = k / 2;
    let (mut worst_single, mut worst_cascade) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let x = random_plane(&mut rng, 8, 8);
        let stack = convolve_bank(&x, &banks[0]);
        for (map, f) in stack.maps.iter().zip(banks[0].filters()) {
            let oracle = naive_correlate(&x, f.coeffs(), k);
            for (a, b) in map.as_slice().iter().zip(oracle.as_slice()) {
                worst_single = worst_single.max((a - b).abs());
            }
        }
        let cascade = forward_cascade(&x, &banks).map_err(|e| e.to_string())?;
        for (parent, stack) in banks[0].filters().iter().zip(&cascade) {
            for (map, child) in stack.maps.iter().zip(banks[1].filters()) {
                let composed = full_convolution(parent.coeffs(), child.coeffs(), k);
                let oracle = naive_correlate(&x, &composed, 2 * k - 1);
                for i in pad..8 - pad {
                    for j in pad..8 - pad {
                        worst_cascade = worst_cascade.max((map[(i, j)] - oracle[(i, j)]).abs());
                    }
                }
            }
        }
    }
    check(worst_single <= 1e-12, format!("single layer max error {worst_single:.2e}"))?;
    check(worst_cascade <= 1e-10, format!("cascade max error {worst_cascade:.2e}"))?;
    Ok(format!(
        "max |diff| single {worst_single:.1e}, composed-kernel interior {worst_cascade:.1e}"
    ))
}

fn tr_properties() -> Outcome {
    let start = Instant::now();
    let hand: Vec<f64> = tr_normalize_segment(&[0, 3, 3, 7, 0, 1]);
    let expected = [0.0, 0.5, 0.5, 0.63246, 0.0, 0.31623];
    for (a, b) in hand.iter().zip(expected) {
        check((a - b).abs() <= 1e-5, format!("hand example {hand:?}"))?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..1000 {
        let hist: Vec<u32> = (0..16)
            .map(|_| if rng.random_bool(0.3) { 0 } else { rng.random_range(1..40) })
            .collect();
        // Strictly increasing on the counts, keeps 0 at 0.
        let transformed: Vec<u32> = hist.iter().map(|&c| 3 * c * c + 7 * c).collect();
        let a: Vec<f64> = tr_normalize_segment(&hist);
        let b: Vec<f64> = tr_normalize_segment(&transformed);
        check(a == b, format!("transform changed output in trial {trial}"))?;
    }

    let mut worst = 0.0f64;
    for _ in 0..50 {
        let codes = dctnet::Plane::from_fn(32, 32, |_, _| rng.random_range(0..256u32));
        let set = block_histogram(&dctnet::network::CodeImage { codes, bits: 8 }, BlockSize::new(8, 8))
            .map_err(|e| e.to_string())?;
        let feature = tr_normalize::<f64>(&set);
        for seg in feature.values.chunks(set.bins) {
            let n = seg.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n > 0.0 {
                worst = worst.max((n - 1.0).abs());
            }
        }
    }
    check(worst <= 1e-10, format!("segment norm error {worst:.2e}"))?;
    within(start.elapsed(), 1.0)?;
    Ok(format!(
        "hand example within 1e-5, 1000 transformed histograms identical, max |norm - 1| {worst:.1e}"
    ))
}

fn synthetic_identification() -> Outcome {
    let start = Instant::now();
    let data = SyntheticFaces::default().generate::<f64>();
    let config = PipelineConfig::default();
    let noisy = evaluate_images(&config, &data.gallery, &data.probes).map_err(|e| e.to_string())?;
    check(
        noisy.groups.iter().all(|g| g.rate_percent == 100.0),
        format!("noisy/shifted probes:\n{}", noisy.to_table()),
    )?;
    let same: Vec<(String, u32, Plane64)> = data
        .gallery
        .iter()
        .map(|(s, img)| ("self".to_string(), *s, img.clone()))
        .collect();
    let selfmatch = evaluate_images(&config, &data.gallery, &same).map_err(|e| e.to_string())?;
    check(selfmatch.average == 100.0, format!("self-match {}%", selfmatch.average))?;
    within(start.elapsed(), 30.0)?;
    Ok(format!(
        "{} subjects, {} noisy shifted probes: rank-1 {:.1}%; self-match {:.1}%",
        data.gallery.len(),
        data.probes.len(),
        noisy.average,
        selfmatch.average
    ))
}

fn extract_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_dctnet");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |args: &[&str]| -> Result<(), String> {
        let out = Command::new(bin).args(args).current_dir(dir.path()).output().map_err(|e| e.to_string())?;
        check(
            out.status.success(),
            format!("`dctnet {}` failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)),
        )
    };
    std::fs::write(dir.path().join("synthetic.toml"), "crop = [64, 64]\nblock = [16, 16]\n").map_err(|e| e.to_string())?;
    run(&["synth", "--out", "data"])?;
    let extract = |out: &str| run(&["extract", "--config", "synthetic.toml", "--manifest", "data/manifest.csv", "--out", out]);
    extract("a.dctf")?;
    extract("b.dctf")?;
    let read = |name: &str| std::fs::read(dir.path().join(name)).map_err(|e| e.to_string());
    let (a, b) = (read("a.dctf")?, read("b.dctf")?);
    check(a == b, "feature stores differ")?;
    Ok(format!("two extract runs wrote identical {}-byte feature stores", a.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("1", "KLT -> DCT convergence", klt_convergence),
        ("2", "eigenvalue/frequency ordering", eigenvalue_ordering),
        ("3", "encoder oracle equivalence", encoder_oracle),
        ("4", "convolution oracle equivalence", convolution_oracle),
        ("5", "TR normalization properties", tr_properties),
        ("6", "synthetic identification", synthetic_identification),
        ("8", "extract determinism", extract_determinism),
    ];
    let mut failed = 0;
    for (id, name, run) in criteria {
        match run() {
            Ok(detail) => println!("criterion {id} PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {id} FAIL  {name}: {why}");
            }
        }
        if id == "6" {
            println!(
                "criterion 7 SKIP  published benchmark rates: needs licensed AR/FERET images; \
                 run `dctnet evaluate` with the configs/ templates on your own copy"
            );
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion/criteria failed");
        ExitCode::FAILURE
    }
}
