//! Regular scalar grids over the normalized domain: unsigned distance
//! fields, the thickened shell field and trilinear sampling.

use crate::bvh::TriangleBvh;
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::mesh::TriangleMesh;
use rayon::prelude::*;
use std::io::{BufRead, Read, Write};
use std::path::Path;

/// Half-width of the fixed working domain `[-0.5, 0.5]^3`.
pub const DOMAIN_HALF: f64 = 0.5;

const GRID_MAGIC: &[u8; 8] = b"TCGRID01";

/// Scalar values on a regular grid, x varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGrid {
    pub dims: [usize; 3],
    pub origin: Point,
    pub spacing: f64,
    pub values: Vec<f64>,
}

impl ScalarGrid {
    pub fn new(dims: [usize; 3], origin: Point, spacing: f64, values: Vec<f64>) -> Result<Self> {
        if dims.iter().any(|&d| d < 2) {
            return Err(Error::InvalidParameter(format!(
                "grid dims {dims:?} must each be >= 2"
            )));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid spacing {spacing} must be positive"
            )));
        }
        if values.len() != dims[0] * dims[1] * dims[2] {
            return Err(Error::InvalidParameter(format!(
                "{} values for dims {dims:?}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("grid values must be finite".into()));
        }
        Ok(Self {
            dims,
            origin,
            spacing,
            values,
        })
    }

    /// Grid with `resolution + 1` nodes per axis covering the working domain.
    pub fn domain(resolution: usize, fill: f64) -> Self {
        let n = resolution + 1;
        Self {
            dims: [n; 3],
            origin: Point::new(-DOMAIN_HALF, -DOMAIN_HALF, -DOMAIN_HALF),
            spacing: 2.0 * DOMAIN_HALF / resolution as f64,
            values: vec![fill; n * n * n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)]
    }

    #[inline]
    pub fn node_position(&self, i: usize, j: usize, k: usize) -> Point {
        Point::new(
            self.origin.x + i as f64 * self.spacing,
            self.origin.y + j as f64 * self.spacing,
            self.origin.z + k as f64 * self.spacing,
        )
    }

    pub fn max_corner(&self) -> Point {
        self.node_position(self.dims[0] - 1, self.dims[1] - 1, self.dims[2] - 1)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// True when every node on the outer layer is strictly positive.
    pub fn boundary_positive(&self) -> bool {
        let [nx, ny, nz] = self.dims;
        for k in 0..nz {
            for j in 0..ny {
                let edge_jk = j == 0 || k == 0 || j == ny - 1 || k == nz - 1;
                let step = if edge_jk { 1 } else { nx - 1 };
                let mut i = 0;
                while i < nx {
                    if self.get(i, j, k) <= 0.0 {
                        return false;
                    }
                    i += step;
                }
            }
        }
        true
    }

    /// Fills every node from `f(i, j, k)`, one x-row per task. Rows are
    /// independent so the result does not depend on scheduling.
    pub fn fill_rows<F>(&mut self, f: F)
    where
        F: Fn(usize, usize, &mut [f64]) + Sync,
    {
        let [nx, ny, _] = self.dims;
        self.values
            .par_chunks_mut(nx)
            .enumerate()
            .for_each(|(r, row)| {
                f(r % ny, r / ny, row);
            });
    }

    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut out =
            std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
        self.write_binary_to(&mut out)
            .map_err(|e| Error::io(path, e))
    }

    pub fn write_binary_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        w.write_all(GRID_MAGIC)?;
        for d in self.dims {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for k in 0..3 {
            w.write_all(&self.origin[k].to_le_bytes())?;
        }
        w.write_all(&self.spacing.to_le_bytes())?;
        w.write_all(&8u32.to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut r =
            std::io::BufReader::new(std::fs::File::open(path).map_err(|e| Error::io(path, e))?);
        Self::read_binary_from(&mut r)
    }

    pub fn read_binary_from(r: &mut impl Read) -> Result<Self> {
        let mut offset = 0usize;
        let mut take = |buf: &mut [u8], r: &mut dyn Read| -> Result<()> {
            r.read_exact(buf).map_err(|e| Error::Parse {
                location: format!("byte {offset}"),
                message: e.to_string(),
            })?;
            offset += buf.len();
            Ok(())
        };
        let mut magic = [0u8; 8];
        take(&mut magic, r)?;
        if &magic != GRID_MAGIC {
            return Err(Error::Parse {
                location: "byte 0".into(),
                message: "not a grid file".into(),
            });
        }
        let mut b8 = [0u8; 8];
        let mut dims = [0usize; 3];
        for d in &mut dims {
            take(&mut b8, r)?;
            *d = u64::from_le_bytes(b8) as usize;
        }
        let mut origin = Point::origin();
        for k in 0..3 {
            take(&mut b8, r)?;
            origin[k] = f64::from_le_bytes(b8);
        }
        take(&mut b8, r)?;
        let spacing = f64::from_le_bytes(b8);
        let mut b4 = [0u8; 4];
        take(&mut b4, r)?;
        let width = u32::from_le_bytes(b4);
        let n = dims[0].saturating_mul(dims[1]).saturating_mul(dims[2]);
        let mut values = Vec::with_capacity(n.min(1 << 28));
        match width {
            8 => {
                for _ in 0..n {
                    take(&mut b8, r)?;
                    values.push(f64::from_le_bytes(b8));
                }
            }
            4 => {
                for _ in 0..n {
                    take(&mut b4, r)?;
                    values.push(f32::from_le_bytes(b4) as f64);
                }
            }
            w => {
                return Err(Error::Parse {
                    location: "byte 56".into(),
                    message: format!("unsupported scalar width {w}"),
                })
            }
        }
        Self::new(dims, origin, spacing, values)
    }

    /// Human-readable dump: a header line, then `i j k value` per node.
    pub fn write_ascii(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(
            w,
            "dims {} {} {} origin {} {} {} spacing {}",
            self.dims[0],
            self.dims[1],
            self.dims[2],
            self.origin.x,
            self.origin.y,
            self.origin.z,
            self.spacing
        )?;
        for k in 0..self.dims[2] {
            for j in 0..self.dims[1] {
                for i in 0..self.dims[0] {
                    writeln!(w, "{i} {j} {k} {}", self.get(i, j, k))?;
                }
            }
        }
        Ok(())
    }

    pub fn read_ascii(r: impl BufRead) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::Parse {
            location: format!("line {line}"),
            message: msg.to_string(),
        };
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| bad(1, "missing header"))?
            .map_err(|e| bad(1, &e.to_string()))?;
        let tok: Vec<&str> = header.split_whitespace().collect();
        if tok.len() != 10 || tok[0] != "dims" || tok[4] != "origin" || tok[8] != "spacing" {
            return Err(bad(1, "malformed header"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(1, "bad number"));
        let dims = [
            tok[1].parse().map_err(|_| bad(1, "bad dim"))?,
            tok[2].parse().map_err(|_| bad(1, "bad dim"))?,
            tok[3].parse().map_err(|_| bad(1, "bad dim"))?,
        ];
        let origin = Point::new(num(tok[5])?, num(tok[6])?, num(tok[7])?);
        let spacing = num(tok[9])?;
        let mut values = Vec::new();
        for (n, line) in lines.enumerate() {
            let line = line.map_err(|e| bad(n + 2, &e.to_string()))?;
            let v = line
                .split_whitespace()
                .nth(3)
                .ok_or_else(|| bad(n + 2, "missing value"))?
                .parse::<f64>()
                .map_err(|_| bad(n + 2, "bad value"))?;
            values.push(v);
        }
        Self::new(dims, origin, spacing, values)
    }
}

/// Trilinear interpolation of the 8 surrounding nodes. Points outside the
/// grid are evaluated at the clamped position and then raised to at least
/// `spacing`, so the outside always reads as exterior.
pub fn sample_trilinear(grid: &ScalarGrid, p: &Point) -> f64 {
    let mut t = [0.0; 3];
    let mut base = [0usize; 3];
    let mut outside = false;
    for a in 0..3 {
        let g = (p[a] - grid.origin[a]) / grid.spacing;
        let last = (grid.dims[a] - 1) as f64;
        let g = if g < 0.0 {
            outside = true;
            0.0
        } else if g > last {
            outside = true;
            last
        } else if g.is_nan() {
            outside = true;
            0.0
        } else {
            g
        };
        let cell = (g.floor() as usize).min(grid.dims[a] - 2);
        base[a] = cell;
        t[a] = g - cell as f64;
    }
    let [i, j, k] = base;
    let c = |di: usize, dj: usize, dk: usize| grid.get(i + di, j + dj, k + dk);
    let lerp = |a: f64, b: f64, s: f64| a + (b - a) * s;
    let x00 = lerp(c(0, 0, 0), c(1, 0, 0), t[0]);
    let x10 = lerp(c(0, 1, 0), c(1, 1, 0), t[0]);
    let x01 = lerp(c(0, 0, 1), c(1, 0, 1), t[0]);
    let x11 = lerp(c(0, 1, 1), c(1, 1, 1), t[0]);
    let y0 = lerp(x00, x10, t[1]);
    let y1 = lerp(x01, x11, t[1]);
    let v = lerp(y0, y1, t[2]);
    if outside {
        v.max(grid.spacing)
    } else {
        v
    }
}

/// Unsigned distance to the triangles in `bvh` at every node of `grid`.
///
/// Nodes along an x-row are visited in order; the distance field is
/// 1-Lipschitz, so the previous node's value plus one spacing bounds the
/// search for the next one.
pub(crate) fn fill_distances(grid: &mut ScalarGrid, bvh: &TriangleBvh) {
    let (origin, h) = (grid.origin, grid.spacing);
    grid.fill_rows(|j, k, row| {
        let mut prev: Option<f64> = None;
        for (i, out) in row.iter_mut().enumerate() {
            let p = Point::new(
                origin.x + i as f64 * h,
                origin.y + j as f64 * h,
                origin.z + k as f64 * h,
            );
            let hit = prev
                .and_then(|d| bvh.nearest_within(&p, (d + h) * (1.0 + 1e-9) + 1e-15))
                .or_else(|| bvh.nearest(&p));
            let d = hit.map_or(f64::INFINITY, |n| n.distance_squared.sqrt());
            *out = d;
            prev = Some(d);
        }
    });
}

/// Exact unsigned distance from every node of the `resolution`-cell domain
/// grid to the nearest triangle of `mesh`.
pub fn compute_udf(mesh: &TriangleMesh, resolution: usize) -> Result<ScalarGrid> {
    if mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    if resolution < 8 {
        return Err(Error::InvalidParameter(format!(
            "resolution {resolution} below 8"
        )));
    }
    let bb = mesh.bounding_box();
    if (0..3).any(|k| bb.min[k] <= -DOMAIN_HALF || bb.max[k] >= DOMAIN_HALF) {
        return Err(Error::InvalidParameter(
            "mesh must lie strictly inside [-0.5, 0.5]^3; normalize it first".into(),
        ));
    }
    let bvh = TriangleBvh::new(mesh);
    let mut grid = ScalarGrid::domain(resolution, 0.0);
    fill_distances(&mut grid, &bvh);
    Ok(grid)
}

/// `phi = udf - epsilon`: negative inside the shell of half-width epsilon.
pub fn thicken(udf: &ScalarGrid, epsilon: f64) -> Result<ScalarGrid> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "epsilon {epsilon} must be positive"
        )));
    }
    Ok(ScalarGrid {
        values: udf.values.iter().map(|v| v - epsilon).collect(),
        ..udf.clone()
    })
}
