//! Multi-view datasets: validation, synthetic generation and on-disk layout.
//!
//! On disk every view is a headerless CSV with one sample per row. Inside the
//! crate the auto-encoders and self-expressive layers work on `d x n`
//! matrices whose columns are samples; [`ViewData::to_column_major_samples`]
//! is the only place the two conventions meet.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// File name used by [`MultiViewDataset::save`] for the manifest.
pub const MANIFEST_FILE: &str = "manifest.json";

/// Geometry of one sample within a view.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViewLayout {
    Flat {
        features: usize,
    },
    /// Channel-major, then row-major pixel order when flattened.
    Image {
        channels: usize,
        height: usize,
        width: usize,
    },
}

impl ViewLayout {
    pub fn feature_dim(&self) -> usize {
        match *self {
            ViewLayout::Flat { features } => features,
            ViewLayout::Image {
                channels,
                height,
                width,
            } => channels * height * width,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            ViewLayout::Flat { .. } => "flat",
            ViewLayout::Image { .. } => "image",
        }
    }

    fn shape(&self, n_samples: usize) -> Vec<usize> {
        match *self {
            ViewLayout::Flat { features } => vec![n_samples, features],
            ViewLayout::Image {
                channels,
                height,
                width,
            } => vec![n_samples, channels, height, width],
        }
    }

    fn from_shape(kind: &str, shape: &[usize]) -> std::result::Result<(usize, Self), String> {
        match (kind, shape) {
            ("flat", &[n, features]) => Ok((n, ViewLayout::Flat { features })),
            ("image", &[n, channels, height, width]) => Ok((
                n,
                ViewLayout::Image {
                    channels,
                    height,
                    width,
                },
            )),
            ("flat", _) => Err(format!("flat view needs a 2-entry shape, got {shape:?}")),
            ("image", _) => Err(format!("image view needs a 4-entry shape, got {shape:?}")),
            (other, _) => Err(format!("unknown layout {other:?}")),
        }
    }
}

/// One view: `n_samples` rows, each a flattened sample.
#[derive(Clone, Debug, PartialEq)]
pub struct ViewData {
    layout: ViewLayout,
    rows: Array2<f64>,
}

impl ViewData {
    /// Builds a view from a row-per-sample matrix.
    pub fn new(layout: ViewLayout, rows: Array2<f64>) -> Result<Self> {
        if rows.nrows() < 2 {
            return Err(Error::InvalidDataset(format!(
                "a view needs at least 2 samples, got {}",
                rows.nrows()
            )));
        }
        if layout.feature_dim() == 0 {
            return Err(Error::InvalidDataset("feature dimension must be >= 1".into()));
        }
        if rows.ncols() != layout.feature_dim() {
            return Err(Error::dims("view features", layout.feature_dim(), rows.ncols()));
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("view data".into()));
        }
        Ok(Self { layout, rows })
    }

    pub fn flat(rows: Array2<f64>) -> Result<Self> {
        let features = rows.ncols();
        Self::new(ViewLayout::Flat { features }, rows)
    }

    /// Rebuilds a view from a `d x n` column-per-sample matrix.
    pub fn from_column_major_samples(layout: ViewLayout, columns: &Array2<f64>) -> Result<Self> {
        Self::new(layout, columns.t().as_standard_layout().into_owned())
    }

    pub fn layout(&self) -> ViewLayout {
        self.layout
    }

    pub fn n_samples(&self) -> usize {
        self.rows.nrows()
    }

    pub fn feature_dim(&self) -> usize {
        self.rows.ncols()
    }

    /// Row-per-sample values as stored on disk.
    pub fn rows(&self) -> &Array2<f64> {
        &self.rows
    }

    pub fn sample(&self, index: usize) -> ArrayView1<'_, f64> {
        self.rows.row(index)
    }

    /// `d x n` matrix whose column `j` is sample `j` flattened.
    pub fn to_column_major_samples(&self) -> Array2<f64> {
        self.rows.t().as_standard_layout().into_owned()
    }

    /// Keeps only the listed samples, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let rows = self.rows.select(ndarray::Axis(0), indices);
        Self::new(self.layout, rows)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiViewDataset {
    pub name: String,
    views: Vec<ViewData>,
    labels: Option<Vec<usize>>,
}

impl MultiViewDataset {
    pub fn new(name: impl Into<String>, views: Vec<ViewData>, labels: Option<Vec<usize>>) -> Result<Self> {
        let first = views
            .first()
            .ok_or_else(|| Error::InvalidDataset("a dataset needs at least one view".into()))?;
        let n = first.n_samples();
        for (view, data) in views.iter().enumerate() {
            if data.n_samples() != n {
                return Err(Error::InconsistentSampleCount {
                    view,
                    expected: n,
                    found: data.n_samples(),
                });
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(Error::InvalidDataset(format!(
                    "{} labels for {n} samples",
                    labels.len()
                )));
            }
            let k = labels.iter().max().map_or(0, |m| m + 1);
            let mut seen = vec![false; k];
            for &l in labels {
                seen[l] = true;
            }
            if let Some(missing) = seen.iter().position(|s| !s) {
                return Err(Error::InvalidDataset(format!(
                    "labels are not contiguous: class {missing} is empty"
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            views,
            labels,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.views[0].n_samples()
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn views(&self) -> &[ViewData] {
        &self.views
    }

    pub fn view(&self, index: usize) -> &ViewData {
        &self.views[index]
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Number of ground-truth classes, if labels are present.
    pub fn n_classes(&self) -> Option<usize> {
        self.labels.as_ref().map(|l| l.iter().max().map_or(0, |m| m + 1))
    }

    /// Dataset restricted to a single view, keeping the labels.
    pub fn single_view(&self, index: usize) -> Result<Self> {
        let view = self
            .views
            .get(index)
            .ok_or_else(|| Error::InvalidDataset(format!("no view {index}")))?;
        Self::new(
            format!("{}[view {index}]", self.name),
            vec![view.clone()],
            self.labels.clone(),
        )
    }

    /// Writes `manifest.json`, `view_<i>.csv` and (if present) `labels.csv`
    /// into `dir`, creating it if needed. Returns the manifest path.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut entries = Vec::with_capacity(self.views.len());
        for (i, view) in self.views.iter().enumerate() {
            let file = format!("view_{i}.csv");
            write_matrix_csv(dir.join(&file), view.rows())?;
            entries.push(ManifestView {
                path: file,
                layout: view.layout.kind().to_string(),
                shape: view.layout.shape(view.n_samples()),
            });
        }
        let labels = match &self.labels {
            Some(labels) => {
                write_labels_csv(dir.join("labels.csv"), labels)?;
                Some("labels.csv".to_string())
            }
            None => None,
        };
        let manifest = Manifest {
            name: self.name.clone(),
            n_samples: self.n_samples(),
            views: entries,
            labels,
        };
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    name: String,
    n_samples: usize,
    views: Vec<ManifestView>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestView {
    path: String,
    layout: String,
    shape: Vec<usize>,
}

/// Reads a manifest and every file it references. Relative paths resolve
/// against the manifest's directory.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<MultiViewDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Manifest {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let bad = |message: String| Error::Manifest {
        path: path.to_path_buf(),
        message,
    };

    let mut views = Vec::with_capacity(manifest.views.len());
    for (i, entry) in manifest.views.iter().enumerate() {
        let (n, layout) =
            ViewLayout::from_shape(&entry.layout, &entry.shape).map_err(|m| bad(format!("view {i}: {m}")))?;
        let rows = read_matrix_csv(base.join(&entry.path))?;
        if rows.nrows() != n || rows.ncols() != layout.feature_dim() {
            return Err(bad(format!(
                "view {i}: shape {:?} declared but {} holds {}x{}",
                entry.shape,
                entry.path,
                rows.nrows(),
                rows.ncols()
            )));
        }
        views.push(ViewData::new(layout, rows)?);
    }
    let dataset_n = views.first().map(ViewData::n_samples);
    let labels = manifest
        .labels
        .as_ref()
        .map(|p| read_labels_csv(base.join(p)))
        .transpose()?;
    let ds = MultiViewDataset::new(manifest.name, views, labels)?;
    if dataset_n != Some(manifest.n_samples) {
        return Err(bad(format!(
            "n_samples is {} but views hold {}",
            manifest.n_samples,
            ds.n_samples()
        )));
    }
    Ok(ds)
}

/// Formats a value with 17 significant digits, enough to round-trip any f64.
pub fn format_f64(value: f64) -> String {
    format!("{value:.16e}")
}

/// Writes a matrix as headerless CSV, one row per line.
pub fn write_matrix_csv(path: impl AsRef<Path>, matrix: &Array2<f64>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(matrix.len() * 24);
    for row in matrix.rows() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format_f64(*v));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let before = values.len();
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: line_no + 1,
                message: format!("not a number: {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("{}:{}", path.display(), line_no + 1)));
            }
            values.push(v);
        }
        let width = values.len() - before;
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: line_no + 1,
                    message: format!("expected {c} fields, found {width}"),
                })
            }
            _ => {}
        }
        rows += 1;
    }
    Array2::from_shape_vec((rows, cols.unwrap_or(0)), values).map_err(|e| Error::InvalidDataset(e.to_string()))
}

/// Writes one integer label per line.
pub fn write_labels_csv(path: impl AsRef<Path>, labels: &[usize]) -> Result<()> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = String::with_capacity(labels.len() * 3);
    for l in labels {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_labels_csv(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("not a non-negative integer: {l:?}"),
            })
        })
        .collect()
}

/// Parameters for a union-of-subspaces dataset observed under several views.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub k: usize,
    pub per_cluster: usize,
    pub views: usize,
    pub ambient_dims: Vec<usize>,
    pub subspace_rank: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(m));
        if self.k < 2 {
            return fail(format!("need at least 2 clusters, got {}", self.k));
        }
        if self.subspace_rank < 1 {
            return fail("subspace rank must be >= 1".into());
        }
        if self.per_cluster < self.subspace_rank + 1 {
            return fail(format!(
                "per_cluster ({}) must exceed the subspace rank ({})",
                self.per_cluster, self.subspace_rank
            ));
        }
        if self.views < 1 || self.ambient_dims.len() != self.views {
            return fail(format!(
                "{} views but {} ambient dimensions",
                self.views,
                self.ambient_dims.len()
            ));
        }
        if let Some(d) = self.ambient_dims.iter().find(|&&d| d <= self.subspace_rank) {
            return fail(format!(
                "ambient dimension {d} must exceed the subspace rank {}",
                self.subspace_rank
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return fail(format!("noise sigma must be >= 0, got {}", self.noise_sigma));
        }
        Ok(())
    }
}

/// Draws `per_cluster` points from each of `k` random `r`-dimensional
/// subspaces. Every view has its own bases but a sample keeps the same
/// subspace coordinates in all views. Samples are ordered cluster by cluster.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<MultiViewDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.k * spec.per_cluster;
    let r = spec.subspace_rank;
    let noise = Normal::new(0.0, spec.noise_sigma).expect("sigma validated");

    let bases: Vec<Vec<Array2<f64>>> = spec
        .ambient_dims
        .iter()
        .map(|&d| (0..spec.k).map(|_| random_orthonormal(d, r, &mut rng)).collect())
        .collect();
    let coords = Array2::from_shape_fn((n, r), |_| rng.random_range(-1.0..=1.0));
    let mut views = Vec::with_capacity(spec.views);
    for (&d, view_bases) in spec.ambient_dims.iter().zip(&bases) {
        let mut rows = Array2::<f64>::zeros((n, d));
        for (s, mut row) in rows.rows_mut().into_iter().enumerate() {
            let basis = &view_bases[s / spec.per_cluster];
            row.assign(&basis.dot(&coords.row(s)));
            if spec.noise_sigma > 0.0 {
                row.mapv_inplace(|v| v + noise.sample(&mut rng));
            }
        }
        views.push(ViewData::flat(rows)?);
    }
    let labels = (0..n).map(|i| i / spec.per_cluster).collect();
    MultiViewDataset::new(
        format!(
            "synthetic-k{}-r{}-v{}-s{}",
            spec.k, spec.subspace_rank, spec.views, spec.seed
        ),
        views,
        Some(labels),
    )
}

/// Orthonormal `d x r` basis via modified Gram-Schmidt on a Gaussian matrix.
fn random_orthonormal(d: usize, r: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    loop {
        let mut q = Array2::<f64>::from_shape_fn((d, r), |_| StandardNormal.sample(rng));
        let mut ok = true;
        for j in 0..r {
            for p in 0..j {
                let proj = q.column(p).dot(&q.column(j));
                let prev = q.column(p).to_owned();
                q.column_mut(j).scaled_add(-proj, &prev);
            }
            let norm = q.column(j).dot(&q.column(j)).sqrt();
            if norm < 1e-8 {
                ok = false;
                break;
            }
            q.column_mut(j).mapv_inplace(|v| v / norm);
        }
        if ok {
            return q;
        }
    }
}
