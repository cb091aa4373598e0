//! Rectangular grids over 2-real-dimensional charts, their binary/JSON
//! serialization and PNG export.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::C64;

pub const GRID_MAGIC: &[u8; 8] = b"BIFGRID1";

/// Real 2-plane `λ = origin + x·ex + y·ey` in parameter (or dynamical) space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Chart {
    pub origin: Vec<C64>,
    pub ex: Vec<C64>,
    pub ey: Vec<C64>,
}

impl Chart {
    /// The complex line `origin + ζ·v`, with `x + iy = ζ`.
    pub fn complex_line(origin: Vec<C64>, v: Vec<C64>) -> Self {
        let ey = v.iter().map(|x| x * C64::new(0.0, 1.0)).collect();
        Chart { origin, ex: v, ey }
    }

    /// The ζ-plane of a one-parameter family.
    pub fn plane() -> Self {
        Self::complex_line(vec![C64::new(0.0, 0.0)], vec![C64::new(1.0, 0.0)])
    }

    pub fn at(&self, x: f64, y: f64) -> Vec<C64> {
        self.origin
            .iter()
            .zip(&self.ex)
            .zip(&self.ey)
            .map(|((o, a), b)| o + a * x + b * y)
            .collect()
    }

    pub fn describe(&self) -> String {
        let fmt = |v: &[C64]| {
            v.iter()
                .map(|z| format!("{}{:+}i", z.re, z.im))
                .collect::<Vec<_>>()
                .join(",")
        };
        format!("origin=({}) ex=({}) ey=({})", fmt(&self.origin), fmt(&self.ex), fmt(&self.ey))
    }
}

/// `[x0, x1] × [y0, y1]`, sampled at cell centers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBox {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl GridBox {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        GridBox { x0, x1, y0, y1 }
    }

    pub fn centered(cx: f64, cy: f64, half: f64) -> Self {
        GridBox::new(cx - half, cx + half, cy - half, cy + half)
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.x1 > self.x0 && self.y1 > self.y0) || !(self.x0.is_finite() && self.x1.is_finite() && self.y0.is_finite() && self.y1.is_finite())
    }
}

/// Sampling geometry shared by grids and bitmaps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub bbox: GridBox,
    pub nx: usize,
    pub ny: usize,
}

impl Lattice {
    pub fn new(bbox: GridBox, nx: usize, ny: usize) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::InvalidSpec(format!("grid resolution {nx}x{ny} below 3x3")));
        }
        if bbox.is_degenerate() {
            return Err(Error::InvalidSpec("degenerate grid box".into()));
        }
        Ok(Lattice { bbox, nx, ny })
    }

    pub fn hx(&self) -> f64 {
        (self.bbox.x1 - self.bbox.x0) / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        (self.bbox.y1 - self.bbox.y0) / self.ny as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.bbox.x0 + (i as f64 + 0.5) * self.hx()
    }

    pub fn y(&self, j: usize) -> f64 {
        self.bbox.y0 + (j as f64 + 0.5) * self.hy()
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cell containing `(x, y)`, if inside the box.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fi = (x - self.bbox.x0) / self.hx();
        let fj = (y - self.bbox.y0) / self.hy();
        if fi < 0.0 || fj < 0.0 || fi >= self.nx as f64 || fj >= self.ny as f64 {
            return None;
        }
        Some((fi as usize, fj as usize))
    }
}

/// Scalar field on a [`Lattice`]; `values[j * nx + i]` is the cell at
/// `(x_i, y_j)`, rows ordered by increasing `y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub lattice: Lattice,
    pub values: Vec<f64>,
    pub meta: serde_json::Map<String, serde_json::Value>,
}

impl GridField {
    pub fn from_fn<F: Fn(usize, usize) -> f64>(lattice: Lattice, f: F) -> Self {
        let values = (0..lattice.ny)
            .flat_map(|j| (0..lattice.nx).map(move |i| (i, j)))
            .map(|(i, j)| f(i, j))
            .collect();
        GridField {
            lattice,
            values,
            meta: Default::default(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.lattice.nx + i]
    }

    pub fn cell_area(&self) -> f64 {
        self.lattice.hx() * self.lattice.hy()
    }

    /// `Σ values · cell area`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_area()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn set_meta<V: Serialize>(&mut self, key: &str, value: V) {
        self.meta.insert(
            key.to_string(),
            serde_json::to_value(value).expect("metadata serializes"),
        );
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 48 + 8 * self.values.len());
        out.extend_from_slice(GRID_MAGIC);
        let b = self.lattice.bbox;
        for v in [b.x0, b.x1, b.y0, b.y1] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&(self.lattice.nx as u64).to_le_bytes());
        out.extend_from_slice(&(self.lattice.ny as u64).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Parses the binary layout; the metadata is left empty.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::InvalidSpec(format!("malformed grid file: {m}"));
        if bytes.len() < 56 || &bytes[..8] != GRID_MAGIC {
            return Err(bad("missing BIFGRID1 header"));
        }
        let f = |k: usize| f64::from_le_bytes(bytes[8 + 8 * k..16 + 8 * k].try_into().unwrap());
        let u = |k: usize| u64::from_le_bytes(bytes[8 + 8 * k..16 + 8 * k].try_into().unwrap()) as usize;
        let bbox = GridBox::new(f(0), f(1), f(2), f(3));
        let (nx, ny) = (u(4), u(5));
        let n = nx.checked_mul(ny).ok_or_else(|| bad("size overflow"))?;
        if bytes.len() != 56 + 8 * n {
            return Err(bad("length does not match nx*ny"));
        }
        let values = bytes[56..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(GridField {
            lattice: Lattice::new(bbox, nx, ny)?,
            values,
            meta: Default::default(),
        })
    }

    /// Writes `<stem>.bin` and `<stem>.json` (metadata sidecar).
    pub fn save(&self, stem: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(stem.with_extension("bin"))?);
        w.write_all(&self.to_bytes())?;
        w.flush()?;
        let side = serde_json::json!({
            "format": "BIFGRID1",
            "box": self.lattice.bbox,
            "nx": self.lattice.nx,
            "ny": self.lattice.ny,
            "meta": self.meta,
        });
        std::fs::write(stem.with_extension("json"), serde_json::to_string_pretty(&side)? + "\n")?;
        Ok(())
    }

    pub fn load(stem: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        BufReader::new(File::open(stem.with_extension("bin"))?).read_to_end(&mut bytes)?;
        let mut g = Self::from_bytes(&bytes)?;
        let side: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(stem.with_extension("json"))?)?;
        if let Some(serde_json::Value::Object(m)) = side.get("meta") {
            g.meta = m.clone();
        }
        Ok(g)
    }

    /// Heatmap PNG, top row = largest `y`.
    ///
    /// Colormap: values are normalized to `[0, 1]` between the field minimum
    /// and maximum (after `asinh` compression when `log_scale`), then mapped
    /// linearly through black, indigo `(80,20,140)`, crimson `(220,40,60)`,
    /// amber `(250,190,40)` and white at equal spacing.
    pub fn write_png(&self, path: &Path, log_scale: bool) -> Result<()> {
        let tf = |v: f64| if log_scale { v.asinh() } else { v };
        let (lo, hi) = self
            .values
            .iter()
            .map(|&v| tf(v))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        let span = if hi > lo { hi - lo } else { 1.0 };
        let (nx, ny) = (self.lattice.nx, self.lattice.ny);
        let mut data = Vec::with_capacity(nx * ny * 3);
        for j in (0..ny).rev() {
            for i in 0..nx {
                let t = ((tf(self.get(i, j)) - lo) / span).clamp(0.0, 1.0);
                data.extend_from_slice(&colormap(t));
            }
        }
        write_png(path, nx, ny, png::ColorType::Rgb, png::BitDepth::Eight, &data)
    }
}

const STOPS: [[f64; 3]; 5] = [
    [0.0, 0.0, 0.0],
    [80.0, 20.0, 140.0],
    [220.0, 40.0, 60.0],
    [250.0, 190.0, 40.0],
    [255.0, 255.0, 255.0],
];

pub fn colormap(t: f64) -> [u8; 3] {
    let s = t.clamp(0.0, 1.0) * 4.0;
    let k = (s.floor() as usize).min(3);
    let f = s - k as f64;
    let mut out = [0u8; 3];
    for c in 0..3 {
        out[c] = (STOPS[k][c] * (1.0 - f) + STOPS[k + 1][c] * f).round() as u8;
    }
    out
}

fn write_png(path: &Path, w: usize, h: usize, color: png::ColorType, depth: png::BitDepth, data: &[u8]) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    let mut enc = png::Encoder::new(file, w as u32, h as u32);
    enc.set_color(color);
    enc.set_depth(depth);
    let mut writer = enc
        .write_header()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    writer
        .write_image_data(data)
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    writer
        .finish()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(())
}

/// Boolean field on a [`Lattice`], same indexing as [`GridField`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bitmap {
    pub lattice: Lattice,
    pub bits: Vec<bool>,
}

impl Bitmap {
    pub fn from_fn<F: Fn(usize, usize) -> bool>(lattice: Lattice, f: F) -> Self {
        let bits = (0..lattice.ny)
            .flat_map(|j| (0..lattice.nx).map(move |i| (i, j)))
            .map(|(i, j)| f(i, j))
            .collect();
        Bitmap { lattice, bits }
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[j * self.lattice.nx + i]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Set pixels with a 4-neighbour outside the set (or on the frame).
    pub fn boundary(&self) -> Bitmap {
        let (nx, ny) = (self.lattice.nx, self.lattice.ny);
        Bitmap::from_fn(self.lattice, |i, j| {
            if !self.get(i, j) {
                return false;
            }
            let nbrs = [(i.wrapping_sub(1), j), (i + 1, j), (i, j.wrapping_sub(1)), (i, j + 1)];
            nbrs.iter()
                .any(|&(a, b)| a >= nx || b >= ny || !self.get(a, b))
        })
    }

    /// Chebyshev dilation by `r` cells.
    pub fn dilate(&self, r: usize) -> Bitmap {
        let (nx, ny) = (self.lattice.nx, self.lattice.ny);
        // separable: rows then columns
        let mut rows = vec![false; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                if self.get(i, j) {
                    for a in i.saturating_sub(r)..=(i + r).min(nx - 1) {
                        rows[j * nx + a] = true;
                    }
                }
            }
        }
        let mut out = vec![false; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                if rows[j * nx + i] {
                    for b in j.saturating_sub(r)..=(j + r).min(ny - 1) {
                        out[b * nx + i] = true;
                    }
                }
            }
        }
        Bitmap {
            lattice: self.lattice,
            bits: out,
        }
    }

    pub fn union(&self, other: &Bitmap) -> Bitmap {
        Bitmap {
            lattice: self.lattice,
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| *a || *b).collect(),
        }
    }

    pub fn to_field(&self) -> GridField {
        GridField::from_fn(self.lattice, |i, j| if self.get(i, j) { 1.0 } else { 0.0 })
    }

    /// 1-bit grayscale PNG (set = black), top row = largest `y`.
    pub fn write_png(&self, path: &Path) -> Result<()> {
        let (nx, ny) = (self.lattice.nx, self.lattice.ny);
        let stride = nx.div_ceil(8);
        let mut data = vec![0u8; stride * ny];
        for (row, j) in (0..ny).rev().enumerate() {
            for i in 0..nx {
                if !self.get(i, j) {
                    data[row * stride + i / 8] |= 0x80 >> (i % 8);
                }
            }
        }
        write_png(path, nx, ny, png::ColorType::Grayscale, png::BitDepth::One, &data)
    }
}
