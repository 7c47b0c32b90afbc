//! Cellwise coefficient and source fields.
//!
//! Raster files are plain text: a header line `nx ny`, then `ny` lines of `nx`
//! whitespace-separated values, bottom row first. Value `k` in reading order
//! belongs to cell `(k mod nx, k div nx)`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::FineGrid;
use crate::registry::Registry;

/// One scalar per fine cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    n: usize,
    values: Vec<f64>,
}

impl CellField {
    pub fn constant(grid: &FineGrid, value: f64) -> Self {
        Self {
            n: grid.n(),
            values: vec![value; grid.num_cells()],
        }
    }

    pub fn from_values(grid: &FineGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_cells() {
            return Err(Error::DimensionMismatch {
                expected: grid.num_cells(),
                found: values.len(),
            });
        }
        Ok(Self { n: grid.n(), values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, cell: usize) -> f64 {
        self.values[cell]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn matches(&self, grid: &FineGrid) -> Result<()> {
        if self.n != grid.n() {
            return Err(Error::DimensionMismatch {
                expected: grid.num_cells(),
                found: self.values.len(),
            });
        }
        Ok(())
    }

    /// Checks the `a >= 1` requirement on the curl coefficient.
    pub fn check_curl_coefficient(&self) -> Result<()> {
        match self.values.iter().position(|&v| !(v >= 1.0) || !v.is_finite()) {
            Some(c) => Err(Error::OutOfRange {
                what: "a",
                value: format!("{} at cell {c}", self.values[c]),
                range: "[1, inf)".into(),
            }),
            None => Ok(()),
        }
    }

    /// Checks the `b > 0` requirement on the mass coefficient.
    pub fn check_mass_coefficient(&self) -> Result<()> {
        match self.values.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
            Some(c) => Err(Error::OutOfRange {
                what: "b",
                value: format!("{} at cell {c}", self.values[c]),
                range: "(0, inf)".into(),
            }),
            None => Ok(()),
        }
    }

    /// `a = kappa^p`, cellwise.
    pub fn contrast_power(&self, p: i32) -> CellField {
        CellField {
            n: self.n,
            values: self.values.iter().map(|k| k.powi(p)).collect(),
        }
    }

    pub fn write_raster(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = String::with_capacity(self.values.len() * 8);
        writeln!(out, "{} {}", self.n, self.n).unwrap();
        for row in self.values.chunks(self.n) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    }

    pub fn read_raster(path: impl AsRef<Path>, grid: &FineGrid) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let parse_err = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (hl, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "missing header".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(hl + 1, format!("bad header: {e}")))?;
        if dims.len() != 2 {
            return Err(parse_err(hl + 1, "header must be `nx ny`".into()));
        }
        if dims[0] != grid.n() || dims[1] != grid.n() {
            return Err(Error::DimensionMismatch {
                expected: grid.n(),
                found: if dims[0] != grid.n() { dims[0] } else { dims[1] },
            });
        }
        let mut values = Vec::with_capacity(grid.num_cells());
        let mut rows = 0;
        for (ln, line) in lines {
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| parse_err(ln + 1, e.to_string()))?;
            if row.len() != grid.n() {
                return Err(Error::DimensionMismatch {
                    expected: grid.n(),
                    found: row.len(),
                });
            }
            values.extend(row);
            rows += 1;
        }
        if rows != grid.n() {
            return Err(Error::DimensionMismatch {
                expected: grid.n(),
                found: rows,
            });
        }
        Ok(Self { n: grid.n(), values })
    }
}

/// Cellwise constant vector source `(f1, f2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorCellField {
    n: usize,
    f1: Vec<f64>,
    f2: Vec<f64>,
}

impl VectorCellField {
    pub fn from_components(grid: &FineGrid, f1: Vec<f64>, f2: Vec<f64>) -> Result<Self> {
        for v in [&f1, &f2] {
            if v.len() != grid.num_cells() {
                return Err(Error::DimensionMismatch {
                    expected: grid.num_cells(),
                    found: v.len(),
                });
            }
        }
        Ok(Self { n: grid.n(), f1, f2 })
    }

    pub fn constant(grid: &FineGrid, f1: f64, f2: f64) -> Self {
        Self {
            n: grid.n(),
            f1: vec![f1; grid.num_cells()],
            f2: vec![f2; grid.num_cells()],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, cell: usize) -> (f64, f64) {
        (self.f1[cell], self.f2[cell])
    }

    pub fn l2_norm(&self) -> f64 {
        let h2 = 1.0 / (self.n * self.n) as f64;
        let s: f64 = self
            .f1
            .iter()
            .zip(&self.f2)
            .map(|(a, b)| a * a + b * b)
            .sum();
        (s * h2).sqrt()
    }
}

/// One of the two benchmark sources, sampled at fine-cell midpoints.
///
/// Midpoint coordinates are formed from integer cell indices so that the
/// diagonal tests `x - y` and `x + y` are evaluated identically for cells that
/// share a diagonal.
pub fn example_source(id: u32, grid: &FineGrid) -> Result<VectorCellField> {
    let n = grid.n();
    let nf = n as f64;
    let mut f1 = Vec::with_capacity(grid.num_cells());
    let mut f2 = Vec::with_capacity(grid.num_cells());
    for c in 0..grid.num_cells() {
        let (i, j) = grid.cell_coords(c);
        let (a, b) = match id {
            1 => {
                let x = (2 * i + 1) as f64 / (2.0 * nf);
                let y = (2 * j + 1) as f64 / (2.0 * nf);
                let a = if 0.1 < y && y < 0.2 {
                    100.0
                } else if 0.4 < y && y < 0.45 {
                    10000.0
                } else {
                    1.0
                };
                let b = if 0.2 < x && x < 0.25 {
                    -200.0
                } else if 0.65 < x && x < 0.75 {
                    1500.0
                } else {
                    5.0
                };
                (a, b)
            }
            2 => {
                let diff = (i as f64 - j as f64) / nf;
                let sum = (i + j + 1) as f64 / nf;
                if diff <= -0.6 {
                    (10.0, 10.0)
                } else if diff >= 0.6 {
                    (-2.0, -2.0)
                } else if sum <= 0.4 {
                    (200.0, -200.0)
                } else if sum >= 1.6 {
                    (100.0, -100.0)
                } else {
                    (0.0, 0.0)
                }
            }
            other => return Err(Error::UnknownExample(other)),
        };
        f1.push(a);
        f2.push(b);
    }
    Ok(VectorCellField { n, f1, f2 })
}

/// Tunables shared by the contrast generators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternParams {
    /// Target fraction of high-value cells for `inclusions`.
    pub density: f64,
    /// Number of channels for `channels`.
    pub channels: usize,
}

impl Default for PatternParams {
    fn default() -> Self {
        Self {
            density: 0.2,
            channels: 8,
        }
    }
}

/// A two-valued contrast field generator.
pub trait ContrastPattern: Send + Sync {
    fn name(&self) -> &'static str;

    /// Returns a per-cell mask; `true` cells take the high value.
    fn mask(&self, grid: &FineGrid, rng: &mut ChaCha8Rng, params: &PatternParams) -> Vec<bool>;
}

struct Checker;

impl ContrastPattern for Checker {
    fn name(&self) -> &'static str {
        "checker"
    }

    fn mask(&self, grid: &FineGrid, _: &mut ChaCha8Rng, _: &PatternParams) -> Vec<bool> {
        (0..grid.num_cells())
            .map(|c| {
                let (i, j) = grid.cell_coords(c);
                (i + j) % 2 == 1
            })
            .collect()
    }
}

/// Randomly placed small square inclusions until the target density is reached.
struct Inclusions;

impl ContrastPattern for Inclusions {
    fn name(&self) -> &'static str {
        "inclusions"
    }

    fn mask(&self, grid: &FineGrid, rng: &mut ChaCha8Rng, params: &PatternParams) -> Vec<bool> {
        let n = grid.n();
        let side = (n / 32).max(1);
        let target = (params.density.clamp(0.0, 1.0) * grid.num_cells() as f64).ceil() as usize;
        let mut mask = vec![false; grid.num_cells()];
        let mut high = 0;
        let mut attempts = 0;
        while high < target && attempts < 100 * grid.num_cells() {
            attempts += 1;
            let i0 = rng.gen_range(0..=n - side);
            let j0 = rng.gen_range(0..=n - side);
            for j in j0..j0 + side {
                for i in i0..i0 + side {
                    let c = grid.cell(i, j);
                    if !mask[c] {
                        mask[c] = true;
                        high += 1;
                    }
                }
            }
        }
        mask
    }
}

/// Long thin horizontal and vertical channels that cross several coarse cells.
struct Channels;

impl ContrastPattern for Channels {
    fn name(&self) -> &'static str {
        "channels"
    }

    fn mask(&self, grid: &FineGrid, rng: &mut ChaCha8Rng, params: &PatternParams) -> Vec<bool> {
        let n = grid.n();
        let width = (n / 64).max(1);
        let mut mask = vec![false; grid.num_cells()];
        for k in 0..params.channels {
            let len = rng.gen_range(n / 2..=(9 * n) / 10);
            let start = rng.gen_range(0..=n - len);
            let across = rng.gen_range(1..n - width);
            for t in start..start + len {
                for w in across..across + width {
                    let c = if k % 2 == 0 {
                        grid.cell(t, w)
                    } else {
                        grid.cell(w, t)
                    };
                    mask[c] = true;
                }
            }
        }
        mask
    }
}

/// All built-in contrast patterns.
pub fn pattern_registry() -> Registry<dyn ContrastPattern> {
    let mut reg: Registry<dyn ContrastPattern> = Registry::new("contrast pattern");
    reg.register("checker", || Box::new(Checker));
    reg.register("inclusions", || Box::new(Inclusions));
    reg.register("channels", || Box::new(Channels));
    reg
}

/// Builds a field taking exactly the values `{background, value}`.
pub fn generate_contrast_field(
    grid: &FineGrid,
    pattern: &str,
    seed: u64,
    background: f64,
    value: f64,
    params: &PatternParams,
) -> Result<CellField> {
    if !(value > background) {
        return Err(Error::OutOfRange {
            what: "contrast value",
            value: value.to_string(),
            range: format!("({background}, inf)"),
        });
    }
    let generator = pattern_registry().create(pattern)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mask = generator.mask(grid, &mut rng, params);
    let values = mask
        .into_iter()
        .map(|m| if m { value } else { background })
        .collect();
    Ok(CellField { n: grid.n(), values })
}
