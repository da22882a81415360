use dect_core::imaging::ImageGrid;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

const GRID_MAGIC: &[u8; 4] = b"DEIG";
const GRID_VERSION: u16 = 1;

/// Lossless binary image format used for intermediate artifacts: magic,
/// version, dimensions, spacing, then row-major f64 little-endian pixels.
/// DICOM export is 16-bit and lossy; this keeps the pipeline exact between
/// stages.
pub fn grid_to_bytes(grid: &ImageGrid) -> Vec<u8> {
    let mut buf = Vec::with_capacity(30 + grid.len() * 8);
    buf.extend_from_slice(GRID_MAGIC);
    buf.extend_from_slice(&GRID_VERSION.to_le_bytes());
    buf.extend_from_slice(&(grid.width() as u32).to_le_bytes());
    buf.extend_from_slice(&(grid.height() as u32).to_le_bytes());
    buf.extend_from_slice(&grid.spacing_x().to_le_bytes());
    buf.extend_from_slice(&grid.spacing_y().to_le_bytes());
    for &v in grid.pixels() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

pub fn write_grid(path: &Path, grid: &ImageGrid) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, grid_to_bytes(grid))
}

pub fn read_grid(path: &Path) -> io::Result<ImageGrid> {
    let mut file = fs::File::open(path)?;
    let mut header = [0u8; 30];
    file.read_exact(&mut header)
        .map_err(|e| bad_grid(path, format!("short header: {e}")))?;
    if &header[0..4] != GRID_MAGIC {
        return Err(bad_grid(path, "bad magic".into()));
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != GRID_VERSION {
        return Err(bad_grid(path, format!("unsupported version {version}")));
    }
    let width = u32::from_le_bytes(header[6..10].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(header[10..14].try_into().unwrap()) as usize;
    let spacing_x = f64::from_le_bytes(header[14..22].try_into().unwrap());
    let spacing_y = f64::from_le_bytes(header[22..30].try_into().unwrap());

    let mut raw = Vec::new();
    file.read_to_end(&mut raw)?;
    if raw.len() != width * height * 8 {
        return Err(bad_grid(
            path,
            format!("expected {} pixel bytes, found {}", width * height * 8, raw.len()),
        ));
    }
    let pixels: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    ImageGrid::new(width, height, pixels, spacing_x, spacing_y)
        .map_err(|e| bad_grid(path, e.to_string()))
}

fn bad_grid(path: &Path, detail: String) -> io::Error {
    io::Error::other(format!("corrupt grid file {}: {detail}", path.display()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// One artifact the pipeline wrote, with enough metadata to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub kind: String,
    pub variant: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    pub seed: u64,
    pub sha256: String,
}

/// Index of everything under the output directory, written as TOML. Every
/// file the pipeline writes gets an entry; nothing writes outside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Manifest {
    pub version: u32,
    pub seed: u64,
    #[serde(default, rename = "artifact")]
    pub artifacts: Vec<ArtifactEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.toml";

impl Manifest {
    pub fn new(seed: u64) -> Self {
        Self {
            version: 1,
            seed,
            artifacts: Vec::new(),
        }
    }

    pub fn record(
        &mut self,
        root: &Path,
        path: &Path,
        kind: &str,
        variant: &str,
        target: Option<&str>,
        seed: u64,
        bytes: &[u8],
    ) {
        let rel = path
            .strip_prefix(root)
            .unwrap_or(path)
            .to_string_lossy()
            .replace('\\', "/");
        // Overwrites replace the stale entry in place.
        self.artifacts.retain(|a| a.path != rel);
        self.artifacts.push(ArtifactEntry {
            path: rel,
            kind: kind.to_string(),
            variant: variant.to_string(),
            target: target.map(str::to_string),
            seed,
            sha256: sha256_hex(bytes),
        });
    }

    pub fn write(&self, root: &Path) -> io::Result<()> {
        let text = toml::to_string_pretty(self).map_err(io::Error::other)?;
        fs::create_dir_all(root)?;
        let mut file = fs::File::create(root.join(MANIFEST_FILE))?;
        file.write_all(text.as_bytes())
    }

    pub fn load(root: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(root.join(MANIFEST_FILE))?;
        toml::from_str(&text).map_err(io::Error::other)
    }

    pub fn contains(&self, rel_path: &str) -> bool {
        self.artifacts.iter().any(|a| a.path == rel_path)
    }
}

/// Canonical artifact locations under one output directory.
#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn slice_low(&self, variant: &str) -> PathBuf {
        self.root.join("slices").join(format!("{variant}_low.grid"))
    }

    pub fn slice_high(&self, variant: &str) -> PathBuf {
        self.root.join("slices").join(format!("{variant}_high.grid"))
    }

    pub fn study(&self, variant: &str) -> PathBuf {
        self.root.join("dicom").join(format!("{variant}_study.dcm"))
    }

    pub fn target(&self, variant: &str, label: &str) -> PathBuf {
        self.root.join("targets").join(format!("{variant}_{label}.grid"))
    }

    pub fn target_export(&self, variant: &str, label: &str) -> PathBuf {
        self.root
            .join("targets")
            .join(format!("{variant}_{label}_export.grid"))
    }

    pub fn model(&self, label: &str) -> PathBuf {
        self.root.join("models").join(format!("{label}.model"))
    }

    pub fn fit_log(&self, label: &str) -> PathBuf {
        self.root.join("models").join(format!("{label}.log"))
    }

    pub fn results_csv(&self) -> PathBuf {
        self.root.join("results").join("results.csv")
    }

    pub fn results_table(&self) -> PathBuf {
        self.root.join("results").join("table.txt")
    }

    pub fn scatter(&self, model: &str, target: &str, slice: &str) -> PathBuf {
        self.root
            .join("results")
            .join(format!("scatter_{model}_{target}_{slice}.csv"))
    }
}
