//! Uniform rectangular node grids and fields sampled on them.

use std::io::Write;

use crate::error::Result;
use crate::propagate::{csv_err, fmt_real};
use crate::systems::State;

/// `(nx + 1) x (ny + 1)` nodes spanning `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        assert!(nx >= 1 && ny >= 1 && x1 > x0 && y1 > y0);
        Self { nx, ny, x0, x1, y0, y1 }
    }

    pub fn hx(&self) -> f64 {
        (self.x1 - self.x0) / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        (self.y1 - self.y0) / self.ny as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i == self.nx {
            self.x1
        } else {
            self.x0 + self.hx() * i as f64
        }
    }

    pub fn y(&self, j: usize) -> f64 {
        if j == self.ny {
            self.y1
        } else {
            self.y0 + self.hy() * j as f64
        }
    }

    pub fn len(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    /// Fractional cell coordinates of `(x, y)`, clamped to the grid.
    pub fn locate(&self, x: f64, y: f64) -> (usize, usize, f64, f64) {
        let fx = ((x - self.x0) / self.hx()).clamp(0.0, self.nx as f64);
        let fy = ((y - self.y0) / self.hy()).clamp(0.0, self.ny as f64);
        let i = (fx.floor() as usize).min(self.nx - 1);
        let j = (fy.floor() as usize).min(self.ny - 1);
        (i, j, fx - i as f64, fy - j as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepDir {
    FromBottom,
    FromTop,
    FromLeft,
    FromRight,
    /// Produced by pseudo-time marching rather than a sweep.
    Marched,
    /// Assembled from several branches.
    Composed,
}

/// Values on every node of a grid plus a validity mask.
#[derive(Debug, Clone)]
pub struct Field2D<const M: usize> {
    pub grid: Grid2D,
    pub values: Vec<State<M>>,
    pub valid: Vec<bool>,
    pub sweep: SweepDir,
}

impl<const M: usize> Field2D<M> {
    pub fn filled(grid: Grid2D, value: State<M>, sweep: SweepDir) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
            valid: vec![false; grid.len()],
            sweep,
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> State<M> {
        self.values[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: State<M>) {
        let k = self.grid.idx(i, j);
        self.values[k] = v;
        self.valid[k] = true;
    }

    #[inline]
    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        self.valid[self.grid.idx(i, j)]
    }

    /// Bilinear interpolation; ignores the mask.
    pub fn bilinear(&self, x: f64, y: f64) -> State<M> {
        let (i, j, s, t) = self.grid.locate(x, y);
        self.at(i, j) * ((1.0 - s) * (1.0 - t))
            + self.at(i + 1, j) * (s * (1.0 - t))
            + self.at(i, j + 1) * ((1.0 - s) * t)
            + self.at(i + 1, j + 1) * (s * t)
    }

    /// CSV with columns `x, y`, the given component names and optional extra
    /// columns computed per node.
    pub fn write_csv<W: Write>(
        &self,
        out: W,
        names: &[&str],
        extra: &[(&str, &dyn Fn(usize, usize, &State<M>) -> f64)],
    ) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["x".to_string(), "y".to_string()];
        header.extend(names.iter().map(|s| s.to_string()));
        header.extend(extra.iter().map(|(n, _)| n.to_string()));
        w.write_record(&header).map_err(csv_err)?;
        for j in 0..=self.grid.ny {
            for i in 0..=self.grid.nx {
                let u = self.at(i, j);
                let mut row = vec![fmt_real(self.grid.x(i)), fmt_real(self.grid.y(j))];
                row.extend(u.iter().map(|c| fmt_real(*c)));
                row.extend(extra.iter().map(|(_, f)| fmt_real(f(i, j, &u))));
                w.write_record(&row).map_err(csv_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bilinear_is_exact_on_bilinear_data() {
        let g = Grid2D::new(4, 3, 0.0, 1.0, -1.0, 1.0);
        let mut f = Field2D::filled(g, State::<1>::zeros(), SweepDir::Marched);
        for j in 0..=3 {
            for i in 0..=4 {
                let (x, y) = (g.x(i), g.y(j));
                f.set(i, j, State::<1>::new(1.0 + 2.0 * x - y + 0.5 * x * y));
            }
        }
        let v = f.bilinear(0.33, 0.21)[0];
        assert!((v - (1.0 + 0.66 - 0.21 + 0.5 * 0.33 * 0.21)).abs() < 1e-14);
        assert_eq!(g.x(4), 1.0);
        assert_eq!(g.idx(4, 3), g.len() - 1);
    }
}
