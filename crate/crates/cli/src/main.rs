use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Array2;

use specnet::indices::{index_map, load_index_specs, IndexSpec};
use specnet::interpret::{
    assign_neurons, contrast_score, export_assignments_csv, export_profile_csv,
    ndvi_geometry_check, sort_neurons_for_display, top_k_overlap, top_k_profile, DEFAULT_TOP_K,
};
use specnet::lda::{fit_lda, predict_lda, DEFAULT_SHRINKAGE};
use specnet::mlp::{train, MlpConfig, MlpModel};
use specnet::render::{
    export_scatter_csv, write_class_map, write_index_map, write_weight_heatmap, Palette,
};
use specnet::spectra_io::{
    class_mean_spectra, load_cube, load_dataset_csv, write_cube, write_dataset_csv, ByteOrder,
    Interleave, LabeledDataset, SpectralCube, Window,
};
use specnet::split::stratified_split;
use specnet::synth::{generate_cube, generate_dataset, load_materials, stripe_scene, Preset};

const RED_NM: f64 = 656.0;
const NIR_NM: f64 = 802.0;

#[derive(Parser)]
#[command(
    name = "specnet",
    version,
    about = "Hyperspectral classification and weight interpretation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled synthetic dataset (and optionally a cube).
    Synth(SynthArgs),
    /// Stratified train/test split of a dataset CSV.
    Split(SplitArgs),
    /// Train a network on a dataset CSV.
    Train(TrainArgs),
    /// Test-set accuracy of a saved network (and optionally an LDA baseline).
    Eval(EvalArgs),
    /// Per-pixel class map of a cube.
    Classify(ClassifyArgs),
    /// Spectral index map of a cube.
    Ndvi(NdviArgs),
    /// Weight profiles, neuron assignments, heatmap and geometry report.
    Interpret(InterpretArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetName {
    Vegetation,
    Polymer,
}

#[derive(Clone, Copy, ValueEnum)]
enum InterleaveArg {
    Bsq,
    Bil,
    Bip,
}

impl From<InterleaveArg> for Interleave {
    fn from(v: InterleaveArg) -> Self {
        match v {
            InterleaveArg::Bsq => Interleave::Bsq,
            InterleaveArg::Bil => Interleave::Bil,
            InterleaveArg::Bip => Interleave::Bip,
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    preset: PresetName,
    /// TOML file of `[[material]]` tables replacing the preset's materials.
    #[arg(long)]
    materials: Option<PathBuf>,
    /// Comma-separated per-class counts (default: the preset's counts).
    #[arg(long, value_delimiter = ',')]
    counts: Option<Vec<usize>>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write a striped scene as an ENVI cube (header alongside, `.hdr`).
    #[arg(long)]
    cube_out: Option<PathBuf>,
    /// Ground-truth class map of the cube scene.
    #[arg(long, requires = "cube_out")]
    truth_map: Option<PathBuf>,
    #[arg(long, default_value_t = 24)]
    lines: usize,
    #[arg(long, default_value_t = 30)]
    samples: usize,
    #[arg(long, value_enum, default_value = "bil")]
    interleave: InterleaveArg,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    fraction: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    train_out: PathBuf,
    #[arg(long)]
    test_out: PathBuf,
    /// `index,partition` listing of the source rows.
    #[arg(long)]
    partition_out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    model_out: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 0.2)]
    dropout: f64,
    #[arg(long, default_value_t = 128)]
    hidden: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.001)]
    learning_rate: f64,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Fit an LDA baseline on this training CSV and report its accuracy too.
    #[arg(long)]
    lda_train: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SHRINKAGE)]
    lda_shrinkage: f64,
}

#[derive(Args)]
struct CubeArgs {
    /// Raw float32 raster.
    #[arg(long)]
    cube: PathBuf,
    /// ENVI header (default: raster path with a `.hdr` extension).
    #[arg(long)]
    header: Option<PathBuf>,
}

impl CubeArgs {
    fn header_path(&self) -> PathBuf {
        self.header
            .clone()
            .unwrap_or_else(|| self.cube.with_extension("hdr"))
    }

    fn check(&self) -> Result<()> {
        require_file(&self.cube, "--cube")?;
        require_file(&self.header_path(), "--header")
    }

    fn load(&self) -> Result<SpectralCube> {
        Ok(load_cube(&self.cube, self.header_path())?)
    }
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    cube: CubeArgs,
    #[arg(long)]
    map_out: PathBuf,
}

#[derive(Args)]
struct NdviArgs {
    #[command(flatten)]
    cube: CubeArgs,
    /// Index preset name, or a name defined in `--index-file`.
    #[arg(long, default_value = "ndvi")]
    index: String,
    /// TOML file of `[[index]]` tables.
    #[arg(long)]
    index_file: Option<PathBuf>,
    #[arg(long, required_unless_present = "csv_out")]
    map_out: Option<PathBuf>,
    #[arg(long)]
    csv_out: Option<PathBuf>,
}

#[derive(Args)]
struct InterpretArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    k: usize,
    #[arg(long)]
    out_dir: PathBuf,
    /// Red/NIR scatter of the dataset with network-predicted labels.
    #[arg(long)]
    scatter_out: Option<PathBuf>,
}

fn require_file(path: &Path, flag: &str) -> Result<()> {
    ensure!(path.is_file(), "{flag}: {} does not exist", path.display());
    Ok(())
}

fn load_dataset(path: &Path) -> Result<LabeledDataset> {
    Ok(load_dataset_csv(path)?)
}

fn synth(a: SynthArgs) -> Result<()> {
    let mut preset = match a.preset {
        PresetName::Vegetation => Preset::vegetation(),
        PresetName::Polymer => Preset::polymer(),
    };
    if let Some(p) = &a.materials {
        require_file(p, "--materials")?;
    }
    ensure!(
        a.lines > 0 && a.samples > 0,
        "--lines and --samples must be positive"
    );
    if let Some(p) = &a.materials {
        preset.materials = load_materials(p)?;
    }
    let counts = match a.counts {
        Some(c) => c,
        None if a.materials.is_some() => bail!("--counts is required with --materials"),
        None => preset.counts,
    };
    let ds = generate_dataset(&preset.materials, &counts, &preset.grid, a.seed)?;
    write_dataset_csv(&ds, &a.out)?;
    println!(
        "samples {} bands {} classes {}",
        ds.n_samples(),
        ds.n_bands(),
        ds.n_classes()
    );

    if let Some(raster) = &a.cube_out {
        let scene = stripe_scene(a.lines, a.samples, preset.materials.len());
        let (cube, truth) = generate_cube(&preset.materials, &scene, &preset.grid, a.seed)?;
        write_cube(
            &cube,
            raster,
            raster.with_extension("hdr"),
            a.interleave.into(),
            ByteOrder::Little,
        )?;
        if let Some(map) = &a.truth_map {
            write_class_map(&truth, &Palette::for_classes(preset.materials.len())?, map)?;
        }
    }
    Ok(())
}

fn split(a: SplitArgs) -> Result<()> {
    require_file(&a.dataset, "--dataset")?;
    ensure!(
        a.fraction > 0.0 && a.fraction < 1.0,
        "--fraction {} must lie strictly between 0 and 1",
        a.fraction
    );
    let ds = load_dataset(&a.dataset)?;
    let s = stratified_split(&ds, a.fraction, a.seed)?;
    write_dataset_csv(&s.train, &a.train_out)?;
    write_dataset_csv(&s.test, &a.test_out)?;
    if let Some(p) = &a.partition_out {
        s.write_partition_csv(p)?;
    }
    println!("train {} test {}", s.train.n_samples(), s.test.n_samples());
    Ok(())
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let cfg = MlpConfig {
        hidden_units: a.hidden,
        dropout_rate: a.dropout,
        epochs: a.epochs,
        batch_size: a.batch_size,
        learning_rate: a.learning_rate,
        seed: a.seed,
    };
    cfg.validate()?;
    require_file(&a.train, "--train")?;
    let ds = load_dataset(&a.train)?;
    let (model, report) = train(&ds, &cfg)?;
    model.save(&a.model_out)?;
    let last = report.epoch_losses.last().copied().unwrap_or(f64::NAN);
    println!("final_loss {last:.4}");
    println!("train_accuracy {:.4}", report.train_accuracy);
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    require_file(&a.model, "--model")?;
    require_file(&a.test, "--test")?;
    if let Some(p) = &a.lda_train {
        require_file(p, "--lda-train")?;
    }
    ensure!(
        (0.0..=1.0).contains(&a.lda_shrinkage),
        "--lda-shrinkage {} outside [0, 1]",
        a.lda_shrinkage
    );
    let model = MlpModel::load(&a.model)?;
    let test = load_dataset(&a.test)?;
    ensure!(
        test.class_names() == model.class_names(),
        "{}: classes {:?} differ from the model's {:?}",
        a.test.display(),
        test.class_names(),
        model.class_names()
    );
    println!("accuracy {:.4}", model.accuracy(&test)?);
    if let Some(p) = &a.lda_train {
        let lda = fit_lda(&load_dataset(p)?, a.lda_shrinkage)?;
        let pred = predict_lda(&lda, test.spectra().view())?;
        let hits = pred
            .iter()
            .zip(test.labels())
            .filter(|(p, t)| p == t)
            .count();
        println!("lda_accuracy {:.4}", hits as f64 / test.n_samples() as f64);
    }
    Ok(())
}

fn classify(a: ClassifyArgs) -> Result<()> {
    require_file(&a.model, "--model")?;
    a.cube.check()?;
    let model = MlpModel::load(&a.model)?;
    let cube = a.cube.load()?;
    let pred = model.predict(cube.to_spectra().view())?;
    let map = Array2::from_shape_vec((cube.lines(), cube.samples()), pred)?;
    write_class_map(&map, &Palette::for_classes(model.n_classes())?, &a.map_out)?;
    let mut counts = vec![0usize; model.n_classes()];
    map.iter().for_each(|&c| counts[c] += 1);
    for (name, n) in model.class_names().iter().zip(counts) {
        println!("{name} {n}");
    }
    Ok(())
}

fn ndvi_cmd(a: NdviArgs) -> Result<()> {
    a.cube.check()?;
    let specs = match &a.index_file {
        Some(p) => {
            require_file(p, "--index-file")?;
            load_index_specs(p)?
        }
        None => IndexSpec::presets(),
    };
    let spec = specs
        .into_iter()
        .find(|s| s.name == a.index)
        .with_context(|| format!("--index: unknown index {:?}", a.index))?;
    let cube = a.cube.load()?;
    let map = index_map(&cube, &spec);
    if let Some(p) = &a.map_out {
        write_index_map(&map, p)?;
    }
    if let Some(p) = &a.csv_out {
        let mut out = String::from("line,sample,value\n");
        for ((l, s), v) in map.indexed_iter() {
            let _ = writeln!(out, "{l},{s},{v}");
        }
        fs::write(p, out).with_context(|| p.display().to_string())?;
    }
    let defined: Vec<f64> = map.iter().copied().filter(|v| !v.is_nan()).collect();
    let mean = defined.iter().sum::<f64>() / defined.len().max(1) as f64;
    println!(
        "{} mean {mean:.4} undefined {}",
        spec.name,
        map.len() - defined.len()
    );
    Ok(())
}

fn interpret_cmd(a: InterpretArgs) -> Result<()> {
    require_file(&a.model, "--model")?;
    require_file(&a.dataset, "--dataset")?;
    ensure!(a.k > 0, "--k must be at least 1");
    let model = MlpModel::load(&a.model)?;
    ensure!(
        a.k <= model.n_hidden(),
        "--k {} exceeds the {} hidden units",
        a.k,
        model.n_hidden()
    );
    let ds = load_dataset(&a.dataset)?;
    ensure!(
        ds.class_names() == model.class_names(),
        "{}: classes {:?} differ from the model's {:?}",
        a.dataset.display(),
        ds.class_names(),
        model.class_names()
    );
    fs::create_dir_all(&a.out_dir).with_context(|| a.out_dir.display().to_string())?;

    let grid = model.grid();
    let means = class_mean_spectra(&ds);
    let assignments = assign_neurons(&model);
    let red = Window::new(640.0, 670.0)?;
    let nir = Window::new(850.0, 880.0)?;
    for (c, name) in model.class_names().iter().enumerate() {
        let profile = top_k_profile(&model, c, a.k)?;
        export_profile_csv(
            &profile,
            &means.row(c).to_owned(),
            grid,
            a.out_dir.join(format!("profile_{name}.csv")),
        )?;
        println!(
            "{name} contrast {:.4} overlap {}/{}",
            contrast_score(&profile, grid, red, nir)?,
            top_k_overlap(&profile, &assignments),
            a.k
        );
    }
    export_assignments_csv(
        &assignments,
        model.class_names(),
        a.out_dir.join("assignments.csv"),
    )?;
    write_weight_heatmap(
        model.w1(),
        &sort_neurons_for_display(&model),
        a.out_dir.join("heatmap.ppm"),
    )?;

    let predicted = model.predict(ds.spectra().view())?;
    let report = ndvi_geometry_check(&predicted, ds.spectra().view(), grid, RED_NM, NIR_NM)?;
    let text = report.render(grid, model.class_names());
    fs::write(a.out_dir.join("geometry.txt"), &text).context("geometry.txt")?;
    print!("{text}");
    if let Some(p) = &a.scatter_out {
        export_scatter_csv(ds.spectra(), &predicted, grid, RED_NM, NIR_NM, p)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Split(a) => split(a),
        Command::Train(a) => train_cmd(a),
        Command::Eval(a) => eval(a),
        Command::Classify(a) => classify(a),
        Command::Ndvi(a) => ndvi_cmd(a),
        Command::Interpret(a) => interpret_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
