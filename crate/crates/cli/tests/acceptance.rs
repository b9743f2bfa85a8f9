//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use ndarray::{Array1, Array2};
use rand::Rng;

use specnet::indices::{band_window_mean, iso_index_slope, ndvi, IndexSpec};
use specnet::interpret::{contrast_score, ndvi_geometry_check, top_k_profile, DEFAULT_TOP_K};
use specnet::lda::{fit_lda, predict_lda};
use specnet::mlp::{gradient_check, train, MlpConfig, MlpModel};
use specnet::render::{write_class_map, write_weight_heatmap, Palette};
use specnet::split::stratified_split;
use specnet::synth::{generate_dataset, Preset};
use specnet::{rng, Error, LabeledDataset, WavelengthGrid, Window};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct VegetationRun {
    seed: u64,
    model: MlpModel,
    test: LabeledDataset,
    accuracy: f64,
    elapsed: Duration,
}

fn run_preset(preset: &Preset, seed: u64) -> (MlpModel, LabeledDataset, f64, Duration) {
    let start = Instant::now();
    let ds = generate_dataset(&preset.materials, &preset.counts, &preset.grid, seed).unwrap();
    let split = stratified_split(&ds, 0.5, seed).unwrap();
    let cfg = MlpConfig {
        seed,
        ..MlpConfig::default()
    };
    let (model, _) = train(&split.train, &cfg).unwrap();
    let accuracy = model.accuracy(&split.test).unwrap();
    (model, split.test, accuracy, start.elapsed())
}

fn vegetation_runs() -> Vec<VegetationRun> {
    let preset = Preset::vegetation();
    [1, 2, 3]
        .into_iter()
        .map(|seed| {
            let (model, test, accuracy, elapsed) = run_preset(&preset, seed);
            VegetationRun {
                seed,
                model,
                test,
                accuracy,
                elapsed,
            }
        })
        .collect()
}

fn criterion_1(runs: &[VegetationRun]) -> Outcome {
    let ok = runs
        .iter()
        .all(|r| r.accuracy >= 0.99 && r.elapsed < Duration::from_secs(120));
    let detail = runs
        .iter()
        .map(|r| {
            format!(
                "seed {} acc {:.4} in {:.1}s",
                r.seed,
                r.accuracy,
                r.elapsed.as_secs_f64()
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    check(ok, detail)
}

fn criterion_2() -> Outcome {
    let preset = Preset::polymer();
    let mut ok = true;
    let mut detail = Vec::new();
    for seed in [1, 2, 3] {
        let (_, _, accuracy, elapsed) = run_preset(&preset, seed);
        ok &= accuracy >= 0.99 && elapsed < Duration::from_secs(300);
        detail.push(format!(
            "seed {seed} acc {accuracy:.4} in {:.1}s",
            elapsed.as_secs_f64()
        ));
    }
    check(ok, detail.join("; "))
}

fn criterion_3() -> Outcome {
    let mut worst = 0.0f64;
    for trial in 0..10u64 {
        let mut r = rng::seeded(1000 + trial);
        let samples = r.random_range(4..=20);
        let bands = r.random_range(2..=10);
        let classes = r.random_range(2..=4).min(samples);
        let spectra = Array2::from_shape_simple_fn((samples, bands), || r.random_range(0.0..1.0));
        let labels = (0..samples).map(|i| i % classes).collect();
        let names = (0..classes).map(|c| format!("c{c}")).collect();
        let grid = WavelengthGrid::linspace(400.0, 1000.0, bands).unwrap();
        let ds = LabeledDataset::new(spectra, labels, names, grid).unwrap();
        let cfg = MlpConfig {
            hidden_units: r.random_range(2..=8),
            dropout_rate: 0.0,
            seed: trial,
            ..MlpConfig::default()
        };
        worst = worst.max(gradient_check(&cfg, &ds).unwrap());
    }
    check(
        worst < 1e-5,
        format!("max relative error {worst:.3e} over 10 instances"),
    )
}

fn criterion_4() -> Outcome {
    let grid = WavelengthGrid::linspace(400.0, 1000.0, 61).unwrap();
    let spec = IndexSpec::ndvi();
    let mut r = rng::seeded(4);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let s = Array1::from_shape_simple_fn(grid.len(), || r.random_range(0.01..1.0));
        let red = band_window_mean(s.view(), &grid, Window::new(640.0, 670.0).unwrap());
        let nir = band_window_mean(s.view(), &grid, Window::new(850.0, 880.0).unwrap());
        let v = ndvi(s.view(), &grid, &spec).unwrap();
        worst = worst.max((nir - red * iso_index_slope(v).unwrap()).abs());
    }
    let zero = iso_index_slope(-1.0).unwrap() == 0.0;
    let slopes: Vec<f64> = (0..10_000)
        .map(|i| -1.0 + 2.0 * i as f64 / 10_000.0)
        .map(|v| iso_index_slope(v).unwrap())
        .collect();
    let increasing = slopes.windows(2).all(|w| w[1] > w[0]);
    check(
        worst <= 1e-10 && zero && increasing,
        format!("round-trip max error {worst:.3e}, slope(-1)=0 {zero}, strictly increasing {increasing}"),
    )
}

fn criterion_5(runs: &[VegetationRun]) -> Outcome {
    let red = Window::new(640.0, 670.0).unwrap();
    let nir = Window::new(850.0, 880.0).unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    for run in runs {
        let names = run.model.class_names();
        let class = |name: &str| names.iter().position(|n| n == name).unwrap();
        let score = |c: usize| {
            let p = top_k_profile(&run.model, c, DEFAULT_TOP_K).unwrap();
            contrast_score(&p, run.model.grid(), red, nir).unwrap()
        };
        let forest = score(class("forest"));
        let senesced = score(class("field2_senesced"));
        ok &= forest > 0.0 && forest > senesced;
        detail.push(format!(
            "seed {} forest {forest:.4} senesced {senesced:.4}",
            run.seed
        ));
    }
    check(ok, detail.join("; "))
}

fn criterion_6(runs: &[VegetationRun]) -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for run in runs {
        let labels = run.model.predict(run.test.spectra().view()).unwrap();
        let report = ndvi_geometry_check(
            &labels,
            run.test.spectra().view(),
            run.test.grid(),
            656.0,
            802.0,
        )
        .unwrap();
        let min = report.min_fraction().unwrap_or(0.0);
        ok &= report.pairs.len() == 3 && min >= 0.98;
        detail.push(format!("seed {} min separation {min:.4}", run.seed));
    }

    // two classes either side of NIR = 2·R
    let grid = WavelengthGrid::new(vec![656.0, 802.0]).unwrap();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..10 {
        let red = 0.05 + 0.02 * i as f64;
        rows.push([red, red * (1.80 + 0.02 * i as f64)]);
        labels.push(0);
        rows.push([red, red * (2.02 + 0.02 * i as f64)]);
        labels.push(1);
    }
    let spectra = Array2::from_shape_vec((rows.len(), 2), rows.concat()).unwrap();
    let report = ndvi_geometry_check(&labels, spectra.view(), &grid, 656.0, 802.0).unwrap();
    let pair = &report.pairs[0];
    let fixture_ok =
        (pair.slope - 2.0).abs() <= 0.2 && pair.fraction == 1.0 && pair.upper_class == 1;
    ok &= fixture_ok;
    detail.push(format!(
        "fixture slope {:.4} separation {:.4}",
        pair.slope, pair.fraction
    ));
    check(ok, detail.join("; "))
}

/// Gauss–Jordan inverse with partial pivoting.
fn invert(a: &Array2<f64>) -> Array2<f64> {
    let n = a.nrows();
    let mut m = a.clone();
    let mut inv = Array2::<f64>::eye(n);
    for col in 0..n {
        let p = (col..n)
            .max_by(|&i, &j| m[[i, col]].abs().total_cmp(&m[[j, col]].abs()))
            .unwrap();
        for k in 0..n {
            m.swap([col, k], [p, k]);
            inv.swap([col, k], [p, k]);
        }
        let d = m[[col, col]];
        for k in 0..n {
            m[[col, k]] /= d;
            inv[[col, k]] /= d;
        }
        for row in 0..n {
            if row != col {
                let f = m[[row, col]];
                for k in 0..n {
                    m[[row, k]] -= f * m[[col, k]];
                    inv[[row, k]] -= f * inv[[col, k]];
                }
            }
        }
    }
    inv
}

fn criterion_7() -> Outcome {
    let (bands, classes, per_class) = (6, 3, 40);
    let mut r = rng::seeded(7);
    let centers: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..bands).map(|_| r.random_range(0.0..1.0)).collect())
        .collect();
    let n = classes * per_class + 5;
    let labels: Vec<usize> = (0..n)
        .map(|i| {
            if i < classes * per_class {
                i / per_class
            } else {
                0
            }
        })
        .collect();
    let spectra = Array2::from_shape_fn((n, bands), |(i, b)| {
        centers[labels[i]][b] + r.random_range(-0.2..0.2)
    });
    let names = (0..classes).map(|c| format!("c{c}")).collect();
    let ds = LabeledDataset::new(
        spectra.clone(),
        labels.clone(),
        names,
        WavelengthGrid::linspace(500.0, 900.0, bands).unwrap(),
    )
    .unwrap();
    let shrinkage = 0.1;
    let model = fit_lda(&ds, shrinkage).unwrap();

    // oracle: class means, pooled covariance, shrinkage, explicit inverse
    let mut means = Array2::<f64>::zeros((classes, bands));
    let mut counts = vec![0.0; classes];
    for (i, &c) in labels.iter().enumerate() {
        for b in 0..bands {
            means[[c, b]] += spectra[[i, b]];
        }
        counts[c] += 1.0;
    }
    for c in 0..classes {
        for b in 0..bands {
            means[[c, b]] /= counts[c];
        }
    }
    let mut cov = Array2::<f64>::zeros((bands, bands));
    for (i, &c) in labels.iter().enumerate() {
        for p in 0..bands {
            for q in 0..bands {
                cov[[p, q]] +=
                    (spectra[[i, p]] - means[[c, p]]) * (spectra[[i, q]] - means[[c, q]]);
            }
        }
    }
    cov /= (n - classes) as f64;
    let trace_mean = (0..bands).map(|b| cov[[b, b]]).sum::<f64>() / bands as f64;
    let mut reg = &cov * (1.0 - shrinkage);
    for b in 0..bands {
        reg[[b, b]] += shrinkage * trace_mean;
    }
    let inv = invert(&reg);

    let points = Array2::from_shape_simple_fn((500, bands), || r.random_range(-0.5..1.5));
    let predicted = predict_lda(&model, points.view()).unwrap();
    let mut mismatches = 0;
    for (x, &got) in points.outer_iter().zip(&predicted) {
        let score = |c: usize| {
            let mu = means.row(c);
            let w = inv.dot(&mu);
            x.dot(&w) - 0.5 * mu.dot(&w) + (counts[c] / n as f64).ln()
        };
        let mut best = 0;
        for c in 1..classes {
            if score(c) > score(best) {
                best = c;
            }
        }
        mismatches += usize::from(best != got);
    }

    // a 15-sample class against 60 bands; pooled rank ≤ n − C = 38 < 60
    let small_bands = 60;
    let tiny_labels: Vec<usize> = (0..40).map(|i| usize::from(i >= 25)).collect();
    let tiny = Array2::from_shape_fn((40, small_bands), |_| r.random_range(0.0..1.0));
    let tiny_ds = LabeledDataset::new(
        tiny,
        tiny_labels,
        vec!["big".into(), "small".into()],
        WavelengthGrid::linspace(400.0, 1000.0, small_bands).unwrap(),
    )
    .unwrap();
    let raises = matches!(
        fit_lda(&tiny_ds, 0.0),
        Err(Error::SingularCovariance { .. })
    );
    check(
        mismatches == 0 && raises,
        format!("{mismatches} mismatches on 500 points; λ=0 singular error {raises}"),
    )
}

fn specnet(dir: &Path, args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_specnet"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn pipeline(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let steps: &[&[&str]] = &[
        &[
            "synth",
            "--preset",
            "vegetation",
            "--seed",
            "11",
            "--out",
            "all.csv",
            "--cube-out",
            "cube.img",
            "--truth-map",
            "truth.ppm",
        ],
        &[
            "split",
            "--dataset",
            "all.csv",
            "--seed",
            "11",
            "--train-out",
            "train.csv",
            "--test-out",
            "test.csv",
            "--partition-out",
            "partition.csv",
        ],
        &[
            "train",
            "--train",
            "train.csv",
            "--seed",
            "11",
            "--epochs",
            "10",
            "--model-out",
            "model.json",
        ],
        &[
            "eval",
            "--model",
            "model.json",
            "--test",
            "test.csv",
            "--lda-train",
            "train.csv",
        ],
        &[
            "classify",
            "--model",
            "model.json",
            "--cube",
            "cube.img",
            "--map-out",
            "map.ppm",
        ],
        &[
            "ndvi",
            "--cube",
            "cube.img",
            "--map-out",
            "ndvi.ppm",
            "--csv-out",
            "ndvi.csv",
        ],
        &[
            "interpret",
            "--model",
            "model.json",
            "--dataset",
            "test.csv",
            "--out-dir",
            "interp",
            "--scatter-out",
            "scatter.csv",
        ],
    ];
    let mut stdout = Vec::new();
    for step in steps {
        stdout.push(specnet(dir, step)?);
    }
    let mut files = vec![("stdout".to_string(), stdout.concat().into_bytes())];
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).map_err(|e| e.to_string())? {
            let path = entry.map_err(|e| e.to_string())?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                files.push((rel, fs::read(&path).map_err(|e| e.to_string())?));
            }
        }
    }
    files.sort();
    Ok(files)
}

fn criterion_8() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = pipeline(a.path())?;
    let second = pipeline(b.path())?;
    let differing: Vec<&str> = first
        .iter()
        .zip(&second)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.as_str())
        .collect();
    check(
        first.len() == second.len() && differing.is_empty() && first.len() >= 17,
        format!(
            "{} artifacts compared, differing: {differing:?}",
            first.len()
        ),
    )
}

fn criterion_9() -> Outcome {
    let veg = Preset::vegetation();
    let ds = generate_dataset(&veg.materials, &veg.counts, &veg.grid, 9).unwrap();
    let s = stratified_split(&ds, 0.5, 9).unwrap();
    let forest = (s.train.class_counts()[0], s.test.class_counts()[0]);

    let poly = Preset::polymer();
    let ds = generate_dataset(&poly.materials, &poly.counts, &poly.grid, 9).unwrap();
    let s = stratified_split(&ds, 0.5, 9).unwrap();
    let bubble = (s.train.class_counts()[0], s.test.class_counts()[0]);
    let ping_pong = (s.train.class_counts()[5], s.test.class_counts()[5]);

    check(
        forest == (1290, 1290) && bubble == (1836, 1836) && ping_pong == (113, 112),
        format!(
            "forest {forest:?}, red_bubble_wrap {bubble:?}, ping_pong_ball (225) {ping_pong:?}"
        ),
    )
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let expected = |w: usize, h: usize| format!("P6\n{w} {h}\n255\n").len() + 3 * w * h;

    let labels = Array2::from_shape_fn((24, 30), |(l, s)| (l + s) % 3);
    let map = dir.path().join("map.ppm");
    write_class_map(&labels, &Palette::for_classes(3).unwrap(), &map).unwrap();
    let map_ok = fs::metadata(&map).unwrap().len() as usize == expected(30, 24);

    let mut r = rng::seeded(10);
    let w1 = Array2::from_shape_simple_fn((181, 128), || r.random_range(-1.0..1.0));
    let order: Vec<usize> = (0..128).rev().collect();
    let heat = dir.path().join("heat.ppm");
    write_weight_heatmap(&w1, &order, &heat).unwrap();
    let heat_ok = fs::metadata(&heat).unwrap().len() as usize == expected(128, 181);

    let veg = Preset::vegetation();
    let ds = generate_dataset(&veg.materials, &[20, 10, 10], &veg.grid, 10).unwrap();
    let cfg = MlpConfig {
        epochs: 2,
        seed: 10,
        ..MlpConfig::default()
    };
    let (model, _) = train(&ds, &cfg).unwrap();
    let model_path = dir.path().join("model.json");
    model.save(&model_path).unwrap();
    let back = MlpModel::load(&model_path).unwrap();
    let bits = |m: &MlpModel| -> Vec<u64> {
        m.w1()
            .iter()
            .chain(m.b1())
            .chain(m.w2())
            .chain(m.b2())
            .map(|v| v.to_bits())
            .collect()
    };
    let model_ok = bits(&model) == bits(&back) && back.grid() == model.grid();

    let csv_dir = dir.path().join("interp");
    specnet::spectra_io::write_dataset_csv(&ds, dir.path().join("d.csv")).unwrap();
    specnet(
        dir.path(),
        &[
            "interpret",
            "--model",
            "model.json",
            "--dataset",
            "d.csv",
            "--out-dir",
            csv_dir.to_str().unwrap(),
        ],
    )?;
    let header_ok = model.class_names().iter().all(|name| {
        fs::read_to_string(csv_dir.join(format!("profile_{name}.csv")))
            .map(|t| {
                t.lines().next()
                    == Some("wavelength_nm,class_mean_reflectance,weight_mean,weight_std")
            })
            .unwrap_or(false)
    });
    check(
        map_ok && heat_ok && model_ok && header_ok,
        format!("class map length {map_ok}, heatmap length {heat_ok}, model bitwise {model_ok}, profile header {header_ok}"),
    )
}

fn main() -> ExitCode {
    let runs = vegetation_runs();
    let criteria: Vec<Criterion<'_>> = vec![
        ("1 vegetation accuracy", Box::new(|| criterion_1(&runs))),
        ("2 polymer accuracy", Box::new(criterion_2)),
        ("3 gradient check", Box::new(criterion_3)),
        ("4 NDVI math", Box::new(criterion_4)),
        ("5 feature recovery", Box::new(|| criterion_5(&runs))),
        ("6 NDVI geometry", Box::new(|| criterion_6(&runs))),
        ("7 LDA baseline", Box::new(criterion_7)),
        ("8 CLI determinism", Box::new(criterion_8)),
        ("9 split exactness", Box::new(criterion_9)),
        ("10 format exactness", Box::new(criterion_10)),
    ];
    let mut failed = 0;
    for (name, run) in &criteria {
        match run() {
            Ok(detail) => println!("criterion {name}: PASS ({detail})"),
            Err(detail) => {
                failed += 1;
                println!("criterion {name}: FAIL ({detail})");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
