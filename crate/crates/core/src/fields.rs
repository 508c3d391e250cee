//! Uniform cell-centered grids on axis-aligned boxes, fields on them, discrete
//! differential operators, line slicing and the plain-text field dump.
//!
//! Cells are indexed `ix * ny + iy`; in one dimension `ny = 1`.

use std::io::{BufRead, Write};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    origin: [f64; 2],
    extent: [f64; 2],
    cells: [usize; 2],
}

impl Grid {
    pub fn new_1d(origin: f64, extent: f64, cells: usize) -> Result<Self> {
        Self::build(1, [origin, 0.0], [extent, 1.0], [cells, 1])
    }

    pub fn new_2d(origin: [f64; 2], extent: [f64; 2], cells: [usize; 2]) -> Result<Self> {
        Self::build(2, origin, extent, cells)
    }

    /// Unit interval or unit square with `n` cells per axis.
    pub fn unit(dim: usize, n: usize) -> Result<Self> {
        match dim {
            1 => Self::new_1d(0.0, 1.0, n),
            2 => Self::new_2d([0.0, 0.0], [1.0, 1.0], [n, n]),
            _ => Err(Error::Grid(format!("dimension must be 1 or 2, got {dim}"))),
        }
    }

    fn build(dim: usize, origin: [f64; 2], extent: [f64; 2], cells: [usize; 2]) -> Result<Self> {
        for a in 0..dim {
            if cells[a] < 2 {
                return Err(Error::Grid(format!("need at least 2 cells on axis {a}, got {}", cells[a])));
            }
            if !(extent[a] > 0.0) || !extent[a].is_finite() || !origin[a].is_finite() {
                return Err(Error::Grid(format!(
                    "axis {a}: origin {} extent {} must be finite with positive extent",
                    origin[a], extent[a]
                )));
            }
        }
        Ok(Self {
            dim,
            origin,
            extent,
            cells,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }
    pub fn extent(&self) -> [f64; 2] {
        self.extent
    }
    pub fn cells(&self) -> [usize; 2] {
        self.cells
    }
    pub fn len(&self) -> usize {
        self.cells[0] * self.cells[1]
    }
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> [f64; 2] {
        if self.dim == 1 {
            [self.extent[0] / self.cells[0] as f64, 1.0]
        } else {
            [
                self.extent[0] / self.cells[0] as f64,
                self.extent[1] / self.cells[1] as f64,
            ]
        }
    }

    /// Spacing along the first axis.
    pub fn h(&self) -> f64 {
        self.spacing()[0]
    }

    /// Cell volume h^d.
    pub fn cell_volume(&self) -> f64 {
        let s = self.spacing();
        s[0] * s[1]
    }

    pub fn volume(&self) -> f64 {
        if self.dim == 1 {
            self.extent[0]
        } else {
            self.extent[0] * self.extent[1]
        }
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix * self.cells[1] + iy
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx / self.cells[1], idx % self.cells[1])
    }

    pub fn center_of(&self, ix: usize, iy: usize) -> [f64; 2] {
        let s = self.spacing();
        let y = if self.dim == 1 {
            0.0
        } else {
            self.origin[1] + (iy as f64 + 0.5) * s[1]
        };
        [self.origin[0] + (ix as f64 + 0.5) * s[0], y]
    }

    pub fn center(&self, idx: usize) -> [f64; 2] {
        let (ix, iy) = self.coords(idx);
        self.center_of(ix, iy)
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        (0..self.dim).all(|a| x[a] >= self.origin[a] && x[a] <= self.origin[a] + self.extent[a])
    }

    /// Diameter of the box.
    pub fn diameter(&self) -> f64 {
        if self.dim == 1 {
            self.extent[0]
        } else {
            self.extent[0].hypot(self.extent[1])
        }
    }

    /// Number of vector components (d) of fields on this grid.
    pub fn vector_components(&self) -> usize {
        self.dim
    }

    /// Number of symmetric tensor components, d(d+1)/2, ordered xx, yy, xy.
    pub fn tensor_components(&self) -> usize {
        if self.dim == 1 {
            1
        } else {
            3
        }
    }
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("{what} at cell {i}: {}", values[i])));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::FieldMismatch(format!(
                "{} values for a grid of {} cells",
                values.len(),
                grid.len()
            )));
        }
        check_finite(&values, "scalar field")?;
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid, v: f64) -> Self {
        Self {
            grid,
            values: vec![v; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.center(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.grid.index(ix, iy)]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: Grid,
    comps: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn new(grid: Grid, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.len() != grid.vector_components() {
            return Err(Error::FieldMismatch(format!(
                "{} components for a {}-dimensional grid",
                comps.len(),
                grid.dim()
            )));
        }
        for (k, c) in comps.iter().enumerate() {
            if c.len() != grid.len() {
                return Err(Error::FieldMismatch(format!(
                    "component {k} has {} values for {} cells",
                    c.len(),
                    grid.len()
                )));
            }
            check_finite(c, &format!("vector component {k}"))?;
        }
        Ok(Self { grid, comps })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            comps: vec![vec![0.0; grid.len()]; grid.vector_components()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        let mut out = Self::zeros(grid);
        for i in 0..grid.len() {
            let v = f(grid.center(i));
            for k in 0..grid.dim() {
                out.comps[k][i] = v[k];
            }
        }
        out
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn comp(&self, k: usize) -> &[f64] {
        &self.comps[k]
    }
    pub fn comp_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.comps[k]
    }
    pub fn comps(&self) -> &[Vec<f64>] {
        &self.comps
    }
    pub fn comps_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.comps
    }
    pub fn at(&self, idx: usize) -> [f64; 2] {
        let mut v = [0.0; 2];
        for (k, c) in self.comps.iter().enumerate() {
            v[k] = c[idx];
        }
        v
    }
}

/// Symmetric tensor field; components xx (1D) or xx, yy, xy (2D).
#[derive(Clone, Debug, PartialEq)]
pub struct SymTensorField {
    grid: Grid,
    comps: Vec<Vec<f64>>,
}

impl SymTensorField {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn comp(&self, k: usize) -> &[f64] {
        &self.comps[k]
    }
    /// Tensor at a cell as [xx, yy, xy] (yy = xy = 0 in 1D).
    pub fn at(&self, idx: usize) -> [f64; 3] {
        let mut t = [0.0; 3];
        for (k, c) in self.comps.iter().enumerate() {
            t[k] = c[idx];
        }
        t
    }
}

fn axis_derivative(grid: &Grid, v: &[f64], axis: usize) -> Vec<f64> {
    let [nx, ny] = grid.cells();
    let h = grid.spacing()[axis];
    let n_axis = if axis == 0 { nx } else { ny };
    let mut out = vec![0.0; v.len()];
    for ix in 0..nx {
        for iy in 0..ny {
            let k = if axis == 0 { ix } else { iy };
            let at = |j: usize| {
                if axis == 0 {
                    v[grid.index(j, iy)]
                } else {
                    v[grid.index(ix, j)]
                }
            };
            let d = if k == 0 {
                (at(1) - at(0)) / h
            } else if k == n_axis - 1 {
                (at(k) - at(k - 1)) / h
            } else {
                (at(k + 1) - at(k - 1)) / (2.0 * h)
            };
            out[grid.index(ix, iy)] = d;
        }
    }
    out
}

/// Centered differences in the interior, one-sided at boundary cells.
pub fn gradient(f: &ScalarField) -> VectorField {
    let g = *f.grid();
    let comps = (0..g.dim()).map(|a| axis_derivative(&g, f.values(), a)).collect();
    VectorField { grid: g, comps }
}

/// Symmetric part of the discrete Jacobian built from [`gradient`].
pub fn sym_gradient(u: &VectorField) -> SymTensorField {
    let g = *u.grid();
    if g.dim() == 1 {
        return SymTensorField {
            grid: g,
            comps: vec![axis_derivative(&g, u.comp(0), 0)],
        };
    }
    let d0x = axis_derivative(&g, u.comp(0), 0);
    let d0y = axis_derivative(&g, u.comp(0), 1);
    let d1x = axis_derivative(&g, u.comp(1), 0);
    let d1y = axis_derivative(&g, u.comp(1), 1);
    let xy = d0y.iter().zip(&d1x).map(|(a, b)| 0.5 * (a + b)).collect();
    SymTensorField {
        grid: g,
        comps: vec![d0x, d1y, xy],
    }
}

/// Midpoint rule: h^d · Σ values in index order.
pub fn integrate(f: &ScalarField) -> f64 {
    f.grid().cell_volume() * f.values().iter().sum::<f64>()
}

/// Bilinear (1D: linear) interpolation of cell-centered values, extrapolating
/// linearly in the half cell next to the boundary.
pub fn interpolate(grid: &Grid, values: &[f64], x: [f64; 2]) -> f64 {
    let s = grid.spacing();
    let o = grid.origin();
    let [nx, ny] = grid.cells();
    let locate = |p: f64, o: f64, h: f64, n: usize| {
        let q = (p - o) / h - 0.5;
        let i = (q.floor().max(0.0) as usize).min(n - 2);
        (i, q - i as f64)
    };
    let (i, fx) = locate(x[0], o[0], s[0], nx);
    if grid.dim() == 1 {
        return values[i] * (1.0 - fx) + values[i + 1] * fx;
    }
    let (j, fy) = locate(x[1], o[1], s[1], ny);
    let v00 = values[grid.index(i, j)];
    let v10 = values[grid.index(i + 1, j)];
    let v01 = values[grid.index(i, j + 1)];
    let v11 = values[grid.index(i + 1, j + 1)];
    (1.0 - fx) * ((1.0 - fy) * v00 + fy * v01) + fx * ((1.0 - fy) * v10 + fy * v11)
}

/// Field sampled by [`slice_extract`].
pub enum SliceSource<'a> {
    Scalar(&'a ScalarField),
    /// Vector fields are projected onto the slice direction.
    Vector(&'a VectorField),
}

impl SliceSource<'_> {
    fn grid(&self) -> &Grid {
        match self {
            SliceSource::Scalar(f) => f.grid(),
            SliceSource::Vector(u) => u.grid(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Slice {
    /// Parameters t with the sample at y + tξ.
    pub t: Vec<f64>,
    pub values: Vec<f64>,
    /// Set when the line does not meet the domain; `t` and `values` are empty.
    pub missed: bool,
}

impl Slice {
    /// Centered difference quotients at the midpoints between samples.
    pub fn derivative(&self) -> (Vec<f64>, Vec<f64>) {
        let mut t = Vec::new();
        let mut d = Vec::new();
        for k in 0..self.t.len().saturating_sub(1) {
            t.push(0.5 * (self.t[k] + self.t[k + 1]));
            d.push((self.values[k + 1] - self.values[k]) / (self.t[k + 1] - self.t[k]));
        }
        (t, d)
    }
}

/// Samples `f` along {y + tξ} ∩ Ω at `samples` equispaced parameters.
pub fn slice_extract(f: SliceSource<'_>, xi: [f64; 2], y: [f64; 2], samples: usize) -> Result<Slice> {
    let g = *f.grid();
    let norm = if g.dim() == 1 { xi[0].abs() } else { xi[0].hypot(xi[1]) };
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::OutOfRange(format!("slice direction must be a unit vector, |xi| = {norm}")));
    }
    if samples < 2 {
        return Err(Error::OutOfRange(format!("need at least 2 samples, got {samples}")));
    }
    let o = g.origin();
    let e = g.extent();
    let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
    for a in 0..g.dim() {
        let (lo, hi) = (o[a], o[a] + e[a]);
        if xi[a].abs() < 1e-15 {
            if y[a] < lo || y[a] > hi {
                return Ok(Slice { t: vec![], values: vec![], missed: true });
            }
            continue;
        }
        let (ta, tb) = ((lo - y[a]) / xi[a], (hi - y[a]) / xi[a]);
        t0 = t0.max(ta.min(tb));
        t1 = t1.min(ta.max(tb));
    }
    if !(t1 > t0) {
        return Ok(Slice { t: vec![], values: vec![], missed: true });
    }
    let mut t = Vec::with_capacity(samples);
    let mut values = Vec::with_capacity(samples);
    for k in 0..samples {
        let tk = t0 + (t1 - t0) * k as f64 / (samples - 1) as f64;
        let x = [y[0] + tk * xi[0], y[1] + tk * xi[1]];
        let v = match &f {
            SliceSource::Scalar(s) => interpolate(&g, s.values(), x),
            SliceSource::Vector(u) => (0..g.dim())
                .map(|c| interpolate(&g, u.comp(c), x) * xi[c])
                .sum(),
        };
        t.push(tk);
        values.push(v);
    }
    Ok(Slice { t, values, missed: false })
}

/// Writes the plain-text dump: header lines `dim`, `cells`, `origin`,
/// `extent`, then one value per line in index order.
pub fn write_dump<W: Write>(mut w: W, f: &ScalarField) -> Result<()> {
    let g = f.grid();
    let d = g.dim();
    let join = |xs: &[String]| xs.join(" ");
    writeln!(w, "dim {d}")?;
    writeln!(w, "cells {}", join(&g.cells()[..d].iter().map(|c| c.to_string()).collect::<Vec<_>>()))?;
    writeln!(w, "origin {}", join(&g.origin()[..d].iter().map(|c| format!("{c:.17e}")).collect::<Vec<_>>()))?;
    writeln!(w, "extent {}", join(&g.extent()[..d].iter().map(|c| format!("{c:.17e}")).collect::<Vec<_>>()))?;
    for v in f.values() {
        writeln!(w, "{v:.17e}")?;
    }
    Ok(())
}

pub fn read_dump<R: BufRead>(r: R) -> Result<ScalarField> {
    let mut lines = r.lines();
    let mut header = |key: &str| -> Result<Vec<String>> {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("missing `{key}` header")))??;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(Error::Parse(format!("expected `{key}` header, got `{line}`")));
        }
        Ok(parts.map(str::to_string).collect())
    };
    let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("`{s}`: {e}")));
    let dim: usize = header("dim")?
        .first()
        .ok_or_else(|| Error::Parse("empty `dim`".into()))?
        .parse()
        .map_err(|e| Error::Parse(format!("dim: {e}")))?;
    let cells = header("cells")?;
    let origin = header("origin")?;
    let extent = header("extent")?;
    if cells.len() != dim || origin.len() != dim || extent.len() != dim {
        return Err(Error::Parse(format!("header arity does not match dim {dim}")));
    }
    let cells: Vec<usize> = cells
        .iter()
        .map(|s| s.parse().map_err(|e| Error::Parse(format!("cells: {e}"))))
        .collect::<Result<_>>()?;
    let origin: Vec<f64> = origin.iter().map(|s| num(s)).collect::<Result<_>>()?;
    let extent: Vec<f64> = extent.iter().map(|s| num(s)).collect::<Result<_>>()?;
    let grid = match dim {
        1 => Grid::new_1d(origin[0], extent[0], cells[0])?,
        2 => Grid::new_2d([origin[0], origin[1]], [extent[0], extent[1]], [cells[0], cells[1]])?,
        _ => return Err(Error::Parse(format!("unsupported dim {dim}"))),
    };
    let mut values = Vec::with_capacity(grid.len());
    for line in lines {
        let line = line?;
        let s = line.trim();
        if !s.is_empty() {
            values.push(num(s)?);
        }
    }
    ScalarField::new(grid, values)
}
