//! Deterministic sample points: seeded random draws and tensor grids.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Catalog, ChartPoint};
use crate::error::{GeomError, Result};

/// `n` points drawn uniformly from the catalog's sample box.
pub fn random_points(cat: &Catalog, n: usize, seed: u64) -> Vec<ChartPoint> {
    let bx = cat.sample_box();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| ChartPoint::new(std::array::from_fn(|i| rng.gen_range(bx[i].0..bx[i].1))))
        .collect()
}

/// Closed interval sampled at `count` evenly spaced nodes (midpoint if one).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Axis {
    pub fn nodes(&self) -> Vec<f64> {
        match self.count {
            0 => vec![],
            1 => vec![0.5 * (self.lo + self.hi)],
            n => (0..n)
                .map(|k| self.lo + (self.hi - self.lo) * k as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

/// Tensor-product grid over the four chart coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub axes: [Axis; 4],
}

impl Grid {
    /// The sample box with `counts` nodes per axis.
    pub fn from_box(cat: &Catalog, counts: [usize; 4]) -> Self {
        let bx = cat.sample_box();
        Grid {
            axes: std::array::from_fn(|i| Axis {
                lo: bx[i].0,
                hi: bx[i].1,
                count: counts[i],
            }),
        }
    }

    /// Parses `name=lo:hi:count` entries separated by commas; coordinates not
    /// mentioned are fixed at the catalog's default point.
    pub fn parse(cat: &Catalog, s: &str) -> Result<Self> {
        let names = cat.coordinate_names();
        let d = cat.default_point();
        let mut axes: [Axis; 4] = std::array::from_fn(|i| Axis {
            lo: d[i],
            hi: d[i],
            count: 1,
        });
        for entry in s.split(',').map(str::trim).filter(|e| !e.is_empty()) {
            let bad = || GeomError::InvalidParameter(format!("bad grid entry '{entry}', expected name=lo:hi:count"));
            let (name, range) = entry.split_once('=').ok_or_else(bad)?;
            let i = names.iter().position(|n| *n == name.trim()).ok_or_else(|| {
                GeomError::InvalidParameter(format!("unknown coordinate '{name}' for {}", cat.name()))
            })?;
            let parts: Vec<&str> = range.split(':').collect();
            if parts.len() != 3 {
                return Err(bad());
            }
            let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
            let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
            let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
            if count == 0 || !(hi >= lo) {
                return Err(bad());
            }
            axes[i] = Axis { lo, hi, count };
        }
        Ok(Grid { axes })
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Points in lexicographic order, first coordinate slowest.
    pub fn points(&self) -> Vec<ChartPoint> {
        let nodes: Vec<Vec<f64>> = self.axes.iter().map(Axis::nodes).collect();
        let mut out = Vec::with_capacity(self.len());
        for &a in &nodes[0] {
            for &b in &nodes[1] {
                for &c in &nodes[2] {
                    for &d in &nodes[3] {
                        out.push(ChartPoint::new([a, b, c, d]));
                    }
                }
            }
        }
        out
    }
}
