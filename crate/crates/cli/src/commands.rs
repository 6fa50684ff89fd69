use std::path::{Path, PathBuf};

use pfe_core::imgio::{load_labels, save_labels, LabelFormat};
use pfe_core::pfe::{read_embedding, write_embedding};
use pfe_core::{DenseMatrix, Error, MetricsReport, Result};
use rayon::prelude::*;

use crate::args::{BenchmarkArgs, EmbedArgs, EvaluateArgs, FormatArg, SegmentArgs, Select};
use crate::pipeline::{self, find_ground_truths, io_error, load_ground_truths, Input, SolveOptions};
use crate::report::{append_csv, five_numbers, format_metrics, mean_metrics};

const TIMING_HEADER: &str = "filename,d,seconds";
const METRICS_HEADER: &str = "file,covering,pri,vi";

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn file_stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn embed(args: &EmbedArgs) -> Result<()> {
    eprintln!("config: {args:?}");
    let opts = SolveOptions::from(&args.solver);
    opts.validate(&[args.dim])?;
    let prep = pipeline::prepare(pipeline::load_input(&args.input)?, &opts)?;
    if let Some((h, w)) = prep.shape {
        eprintln!("working resolution: {h}x{w} (pass --shape {h}x{w} to segment)");
    }
    let solved = pipeline::embed(&prep, args.dim, &opts)?;
    write_embedding(&args.out, solved.embedding())?;
    println!(
        "graph_seconds={:.3} init_seconds={:.3} solve_seconds={:.3}",
        prep.graph_seconds, solved.init_seconds, solved.solve_seconds
    );
    log::info!(
        "objective {:.6e} -> {:.6e}",
        solved.initial_objective,
        solved.final_objective
    );
    if let Some(csv) = &args.timing_csv {
        let row = format!("{},{},{:.6}", file_name(&args.input), args.dim, solved.solve_seconds);
        append_csv(csv, TIMING_HEADER, &[row])?;
    }
    Ok(())
}

pub fn segment(args: &SegmentArgs) -> Result<()> {
    eprintln!("config: {args:?}");
    let format = match args.format {
        Some(FormatArg::Pgm) => LabelFormat::Pgm,
        Some(FormatArg::Csv) => LabelFormat::Csv,
        None => LabelFormat::from_path(&args.out),
    };
    if format == LabelFormat::Pgm && args.shape.is_none() {
        return Err(Error::InvalidParameter("PGM output needs --shape HxW".into()));
    }
    let y: DenseMatrix<f64> = read_embedding(&args.input)?;
    let shape = match args.shape {
        Some(s) => (s.height, s.width),
        None => (y.nrows(), 1),
    };
    let seg = pipeline::segment(&y, args.k, args.seed, args.max_iter, Some(shape))?;
    save_labels(&seg, &args.out, format)
}

fn is_label_file(p: &Path) -> bool {
    p.is_file()
        && matches!(
            p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
            Some("pgm" | "csv")
        )
}

fn sorted_entries(dir: &Path, keep: impl Fn(&Path) -> bool) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).map_err(|e| io_error(dir, e))? {
        let p = e.map_err(|e| io_error(dir, e))?.path();
        if keep(&p) {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

fn ground_truth_paths(explicit: &[PathBuf], gt_dir: Option<&Path>, stem: &str) -> Result<Vec<PathBuf>> {
    let mut paths = explicit.to_vec();
    if let Some(dir) = gt_dir {
        paths.extend(find_ground_truths(dir, stem)?);
    }
    if paths.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no ground truth for {stem}: pass --gt or a --gt-dir containing {stem}.csv, {stem}_*.csv or {stem}/"
        )));
    }
    Ok(paths)
}

pub fn evaluate(args: &EvaluateArgs) -> Result<()> {
    eprintln!("config: {args:?}");
    let score_one = |pred_path: &Path| -> Result<MetricsReport> {
        let gts = load_ground_truths(&ground_truth_paths(&args.gt, args.gt_dir.as_deref(), &file_stem(pred_path))?)?;
        pipeline::score(&load_labels(pred_path)?, &gts, args.score_original)
    };
    if !args.input.is_dir() {
        let m = score_one(&args.input)?;
        println!("{}", format_metrics(&m));
        if let Some(csv) = &args.append_csv {
            append_csv(csv, METRICS_HEADER, &[csv_row(&file_name(&args.input), &m)])?;
        }
        return Ok(());
    }
    let preds = sorted_entries(&args.input, is_label_file)?;
    if preds.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no .pgm or .csv label maps in {}",
            args.input.display()
        )));
    }
    let mut rows = Vec::with_capacity(preds.len());
    let mut reports = Vec::with_capacity(preds.len());
    for p in &preds {
        let m = score_one(p)?;
        println!("{} {}", file_name(p), format_metrics(&m));
        rows.push(csv_row(&file_name(p), &m));
        reports.push(m);
    }
    let mean = mean_metrics(&reports);
    println!("mean {}", format_metrics(&mean));
    if let Some(csv) = &args.append_csv {
        rows.push(csv_row("mean", &mean));
        append_csv(csv, METRICS_HEADER, &rows)?;
    }
    Ok(())
}

fn csv_row(name: &str, m: &MetricsReport) -> String {
    format!("{name},{:.6},{:.6},{:.6}", m.covering, m.pri, m.vi)
}

/// One image's dimension sweep.
#[derive(Debug, Clone)]
pub struct ImageResult {
    pub name: String,
    /// `(d, metrics, solve seconds)` in sweep order.
    pub sweep: Vec<(usize, MetricsReport, f64)>,
    pub best: usize,
}

impl ImageResult {
    pub fn best_d(&self) -> usize {
        self.sweep[self.best].0
    }

    pub fn best_metrics(&self) -> MetricsReport {
        self.sweep[self.best].1
    }
}

fn better(select: Select, a: &MetricsReport, b: &MetricsReport) -> bool {
    match select {
        Select::Covering => a.covering > b.covering,
        Select::Pri => a.pri > b.pri,
        Select::Vi => a.vi < b.vi,
    }
}

/// Embeds, segments and scores one image at every `d`; the graph is built once.
pub fn benchmark_image(
    image: &Path,
    gt_dir: &Path,
    dims: &[usize],
    k: usize,
    select: Select,
    opts: &SolveOptions,
    score_original: bool,
) -> Result<ImageResult> {
    let img = match pipeline::load_input(image)? {
        Input::Image(img) => img,
        Input::Graph(_) => {
            return Err(Error::InvalidParameter(format!("{} is not an image", image.display())));
        }
    };
    let gts = load_ground_truths(&find_ground_truths(gt_dir, &file_stem(image))?)?;
    let prep = pipeline::prepare_image(&img, opts)?;
    let mut sweep = Vec::with_capacity(dims.len());
    for &d in dims {
        let solved = pipeline::embed(&prep, d, opts)?;
        let seg = pipeline::segment(solved.embedding(), k, opts.seed, 100, prep.shape)?;
        let m = pipeline::score(&seg, &gts, score_original)?;
        log::info!("{} d={d}: {}", image.display(), format_metrics(&m));
        sweep.push((d, m, solved.solve_seconds));
    }
    let mut best = 0;
    for i in 1..sweep.len() {
        if better(select, &sweep[i].1, &sweep[best].1) {
            best = i;
        }
    }
    Ok(ImageResult {
        name: file_name(image),
        sweep,
        best,
    })
}

fn is_image_file(p: &Path) -> bool {
    p.is_file()
        && matches!(
            p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
            Some("ppm" | "png")
        )
}

pub fn benchmark(args: &BenchmarkArgs) -> Result<()> {
    eprintln!("config: {args:?}");
    let opts = SolveOptions::from(&args.solver);
    opts.validate(&args.dims)?;
    if args.k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let images = sorted_entries(&args.input, is_image_file)?;
    let outcomes: Vec<_> = images
        .par_iter()
        .map(|p| benchmark_image(p, &args.gt_dir, &args.dims, args.k, args.select, &opts, args.score_original))
        .collect();
    let mut results = Vec::new();
    for (p, r) in images.iter().zip(outcomes) {
        match r {
            Ok(r) => results.push(r),
            Err(e) => log::warn!("skipping {}: {e}", p.display()),
        }
    }
    if results.is_empty() {
        return Err(io_error(
            &args.input,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no images could be processed"),
        ));
    }

    let mut rows = Vec::with_capacity(results.len());
    for r in &results {
        let m = r.best_metrics();
        println!("{} d={} {}", r.name, r.best_d(), format_metrics(&m));
        rows.push(format!("{},{},{:.6},{:.6},{:.6}", r.name, r.best_d(), m.covering, m.pri, m.vi));
    }
    let bests: Vec<_> = results.iter().map(ImageResult::best_metrics).collect();
    let mean = mean_metrics(&bests);
    println!("mean {} images={}", format_metrics(&mean), results.len());

    for (i, &d) in args.dims.iter().enumerate() {
        let secs: Vec<f64> = results.iter().map(|r| r.sweep[i].2).collect();
        let [lo, q1, med, q3, hi] = five_numbers(&secs);
        println!("timing d={d} min={lo:.3} q25={q1:.3} median={med:.3} q75={q3:.3} max={hi:.3}");
    }

    if let Some(out) = &args.out {
        rows.push(format!("mean,,{:.6},{:.6},{:.6}", mean.covering, mean.pri, mean.vi));
        append_csv(out, "file,d,covering,pri,vi", &rows)?;
    }
    if let Some(csv) = &args.timing_csv {
        let timing: Vec<String> = results
            .iter()
            .flat_map(|r| r.sweep.iter().map(move |(d, _, s)| format!("{},{d},{s:.6}", r.name)))
            .collect();
        append_csv(csv, TIMING_HEADER, &timing)?;
    }
    Ok(())
}
