//! Image or graph in, embedding and label map out.

use std::path::{Path, PathBuf};
use std::time::Instant;

use pfe_core::graph::{build_image_graph, parse_edge_list};
use pfe_core::imgio::{
    decode_image, downsample, downsample_labels, load_labels, resample_labels_nearest, RgbImage,
};
use pfe_core::init::{gmm_fit, init_embedding, random_embedding};
use pfe_core::metrics::evaluate;
use pfe_core::{
    kmeans, DenseMatrix, Error, MetricsReport, PcgConfig, PfeOutcome, PfeParams, PfeSolver, PixelGrid, Result,
    Segmentation, WeightedGraph,
};

use crate::args::SolverArgs;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub sigma: Option<f64>,
    pub lambda: f64,
    pub r: f64,
    pub seed: u64,
    pub soc_max: usize,
    pub sb_max1: usize,
    pub sb_max2: usize,
    pub tol: f64,
    pub conv_tol: f64,
    pub downsample: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        let p = PfeParams::<f64>::new(1);
        Self {
            sigma: None,
            lambda: p.lambda,
            r: p.r,
            seed: 0,
            soc_max: p.soc_max,
            sb_max1: p.sb_max_stage1,
            sb_max2: p.sb_max_stage2,
            tol: p.pcg.rel_tol,
            conv_tol: p.conv_tol,
            downsample: 4,
        }
    }
}

impl From<&SolverArgs> for SolveOptions {
    fn from(a: &SolverArgs) -> Self {
        Self {
            sigma: a.sigma,
            lambda: a.lambda,
            r: a.r,
            seed: a.seed,
            soc_max: a.soc_max,
            sb_max1: a.sb_max1,
            sb_max2: a.sb_max2,
            tol: a.tol,
            conv_tol: a.conv_tol,
            downsample: a.downsample,
        }
    }
}

impl SolveOptions {
    pub fn params(&self, d: usize) -> PfeParams<f64> {
        let mut p = PfeParams::new(d);
        p.lambda = self.lambda;
        p.r = self.r;
        p.soc_max = self.soc_max;
        p.sb_max_stage1 = self.sb_max1;
        p.sb_max_stage2 = self.sb_max2;
        p.conv_tol = self.conv_tol;
        p.pcg = PcgConfig::with_tol(self.tol);
        p
    }

    /// Checks everything that does not depend on the input, for every `d`.
    pub fn validate(&self, dims: &[usize]) -> Result<()> {
        if let Some(s) = self.sigma {
            if s <= 0.0 || !s.is_finite() {
                return Err(Error::InvalidParameter(format!("sigma must be positive, got {s}")));
            }
        }
        if self.downsample == 0 {
            return Err(Error::InvalidParameter("downsample factor must be at least 1".into()));
        }
        if dims.is_empty() {
            return Err(Error::InvalidParameter("no embedding dimensions given".into()));
        }
        for &d in dims {
            self.params(d).validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum Input {
    Image(RgbImage),
    Graph(WeightedGraph<f64>),
}

/// Reads an image (by magic bytes) or else an `i j w` edge list.
pub fn load_input(path: &Path) -> Result<Input> {
    let bytes = std::fs::read(path).map_err(|e| io_error(path, e))?;
    if bytes.starts_with(b"P6") || bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        return decode_image(&bytes).map(Input::Image);
    }
    let text = String::from_utf8(bytes).map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg: "neither a supported image nor a UTF-8 edge list".into(),
    })?;
    parse_edge_list(&text, path).map(Input::Graph)
}

/// A graph ready to embed, with the pixel features when it came from an image.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub graph: WeightedGraph<f64>,
    pub features: Option<Vec<[f64; 3]>>,
    /// Working-resolution `(height, width)` for image input.
    pub shape: Option<(usize, usize)>,
    pub graph_seconds: f64,
}

pub fn prepare_image(img: &RgbImage, opts: &SolveOptions) -> Result<Prepared> {
    let start = Instant::now();
    let small = downsample(img, opts.downsample)?;
    let grid = PixelGrid::<f64>::from_image(&small);
    let sigma = opts.sigma.unwrap_or_else(|| grid.default_sigma());
    log::info!("graph: {}x{} pixels, sigma = {sigma:e}", grid.height(), grid.width());
    let graph = build_image_graph(&grid, sigma)?;
    Ok(Prepared {
        graph,
        shape: Some((grid.height(), grid.width())),
        features: Some(grid.features().to_vec()),
        graph_seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn prepare(input: Input, opts: &SolveOptions) -> Result<Prepared> {
    match input {
        Input::Image(img) => prepare_image(&img, opts),
        Input::Graph(graph) => Ok(Prepared {
            graph,
            features: None,
            shape: None,
            graph_seconds: 0.0,
        }),
    }
}

/// GMM-responsibility start for images, a random one for bare graphs.
pub fn initial_embedding(prep: &Prepared, d: usize, seed: u64) -> Result<DenseMatrix<f64>> {
    let degree = prep.graph.degree_vector();
    match &prep.features {
        Some(f) => {
            let model = gmm_fit(f, d, seed)?;
            init_embedding(&model, f, degree, seed)
        }
        None => random_embedding(prep.graph.n(), d, degree, seed),
    }
}

#[derive(Debug, Clone)]
pub struct Solved {
    pub outcome: PfeOutcome<f64>,
    pub initial_objective: f64,
    pub final_objective: f64,
    pub init_seconds: f64,
    pub solve_seconds: f64,
}

impl Solved {
    pub fn embedding(&self) -> &DenseMatrix<f64> {
        &self.outcome.embedding
    }
}

pub fn embed(prep: &Prepared, d: usize, opts: &SolveOptions) -> Result<Solved> {
    let params = opts.params(d);
    params.validate()?;
    if d > prep.graph.n() {
        return Err(Error::InvalidParameter(format!(
            "dimension {d} exceeds the {} vertices",
            prep.graph.n()
        )));
    }
    let t0 = Instant::now();
    let y0 = initial_embedding(prep, d, opts.seed)?;
    let init_seconds = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let solver = PfeSolver::new(&prep.graph, params)?;
    let outcome = solver.two_stage(&y0)?;
    let solve_seconds = t1.elapsed().as_secs_f64();
    let stats = (outcome.stage1, outcome.stage2);
    log::info!(
        "d = {d}: {} SOC iterations, {} + {} split Bregman iterations, {} PCG iterations, {} unconverged solves",
        outcome.soc_iterations,
        stats.0.iterations,
        stats.1.iterations,
        stats.0.pcg_iterations + stats.1.pcg_iterations,
        stats.0.unconverged_solves + stats.1.unconverged_solves
    );
    Ok(Solved {
        initial_objective: solver.objective(&y0),
        final_objective: solver.objective(&outcome.embedding),
        outcome,
        init_seconds,
        solve_seconds,
    })
}

/// k-means on the embedding rows, laid out as `shape` when given.
pub fn segment(
    y: &DenseMatrix<f64>,
    k: usize,
    seed: u64,
    max_iter: usize,
    shape: Option<(usize, usize)>,
) -> Result<Segmentation> {
    let seg = kmeans(y, k, seed, max_iter)?.segmentation;
    match shape {
        Some((h, w)) => seg.try_with_layout(h, w),
        None => Ok(seg),
    }
}

/// Brings a ground truth to the prediction's layout: block majority when the
/// sizes differ by an integer factor, nearest neighbour otherwise.
fn align_gt(gt: &Segmentation, target: (usize, usize)) -> Result<Segmentation> {
    let (gh, gw) = gt
        .layout()
        .ok_or_else(|| Error::InvalidParameter("ground truth has no layout".into()))?;
    if (gh, gw) == target {
        return Ok(gt.clone());
    }
    let (th, tw) = target;
    if th > 0 && tw > 0 && gh / th == gw / tw && gh / th >= 1 {
        let f = gh / th;
        if gh / f == th && gw / f == tw {
            return downsample_labels(gt, f);
        }
    }
    resample_labels_nearest(gt, th, tw)
}

/// Scores `pred` against the ground truths after matching resolutions.
pub fn score(pred: &Segmentation, gts: &[Segmentation], score_original: bool) -> Result<MetricsReport> {
    let Some(pl) = pred.layout() else {
        return evaluate(pred, gts);
    };
    if score_original {
        let mut out = Vec::with_capacity(gts.len());
        for gt in gts {
            let (h, w) = gt.layout().unwrap_or(pl);
            let up = if (h, w) == pl { pred.clone() } else { resample_labels_nearest(pred, h, w)? };
            out.push(evaluate(&up, std::slice::from_ref(gt))?);
        }
        let m = out.len() as f64;
        return Ok(MetricsReport {
            covering: out.iter().map(|r| r.covering).sum::<f64>() / m,
            pri: out.iter().map(|r| r.pri).sum::<f64>() / m,
            vi: out.iter().map(|r| r.vi).sum::<f64>() / m,
        });
    }
    let aligned = gts
        .iter()
        .map(|g| if g.layout().is_some() { align_gt(g, pl) } else { Ok(g.clone()) })
        .collect::<Result<Vec<_>>>()?;
    evaluate(pred, &aligned)
}

fn is_label_file(p: &Path) -> bool {
    matches!(
        p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("pgm" | "csv")
    )
}

/// Ground-truth files for an image stem: `<stem>.pgm|csv`, `<stem>_*.pgm|csv`
/// and every label file under `<stem>/`, sorted.
pub fn find_ground_truths(gt_dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    let entries = std::fs::read_dir(gt_dir).map_err(|e| io_error(gt_dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| io_error(gt_dir, e))?.path();
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
        if path.is_dir() && path.file_name().and_then(|s| s.to_str()) == Some(stem) {
            let inner = std::fs::read_dir(&path).map_err(|e| io_error(&path, e))?;
            for e in inner {
                let p = e.map_err(|e| io_error(&path, e))?.path();
                if is_label_file(&p) {
                    found.push(p);
                }
            }
        } else if is_label_file(&path) && (name == stem || name.strip_prefix(stem).is_some_and(|r| r.starts_with('_'))) {
            found.push(path);
        }
    }
    found.sort();
    Ok(found)
}

pub fn load_ground_truths(paths: &[PathBuf]) -> Result<Vec<Segmentation>> {
    if paths.is_empty() {
        return Err(Error::InvalidParameter("no ground-truth files found".into()));
    }
    paths.iter().map(load_labels).collect()
}

pub fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}
