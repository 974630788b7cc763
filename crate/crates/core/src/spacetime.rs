//! Time series of fields on a uniform time grid.
//!
//! Binary dump: magic `STF1`, `u64` LE slice count, the times as `f64` LE,
//! then each slice in the `SPF1` field format.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{io, project, Grid1D, Sign, SpectralField};

pub const MAGIC: &[u8; 4] = b"STF1";

#[derive(Clone, Debug)]
pub struct SpaceTimeField {
    grid: Grid1D,
    times: Vec<f64>,
    slices: Vec<SpectralField>,
}

/// `steps + 1` uniformly spaced times on `[t0, t1]`.
pub fn uniform_times(t0: f64, t1: f64, steps: usize) -> Vec<f64> {
    let dt = (t1 - t0) / steps as f64;
    (0..=steps)
        .map(|k| if k == steps { t1 } else { t0 + k as f64 * dt })
        .collect()
}

impl SpaceTimeField {
    pub fn new(grid: &Grid1D, times: Vec<f64>, slices: Vec<SpectralField>) -> Result<Self> {
        if times.is_empty() || times.len() != slices.len() {
            return Err(Error::Shape(format!(
                "{} times for {} slices",
                times.len(),
                slices.len()
            )));
        }
        for s in &slices {
            grid.check_same(s.grid())?;
        }
        if times.len() > 1 {
            let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
            if !(dt > 0.0) {
                return Err(Error::Shape("times must increase".into()));
            }
            for (k, &t) in times.iter().enumerate() {
                if (t - (times[0] + k as f64 * dt)).abs() > 1e-9 * dt.max(t.abs()) {
                    return Err(Error::Shape(format!("non-uniform time grid at index {k}")));
                }
            }
        }
        Ok(Self {
            grid: grid.clone(),
            times,
            slices,
        })
    }

    pub fn zeros(grid: &Grid1D, times: Vec<f64>) -> Result<Self> {
        let slices = vec![SpectralField::zeros(grid); times.len()];
        Self::new(grid, times, slices)
    }

    pub fn from_fn(grid: &Grid1D, times: Vec<f64>, mut f: impl FnMut(usize, f64) -> SpectralField) -> Result<Self> {
        let slices = times.iter().enumerate().map(|(k, &t)| f(k, t)).collect();
        Self::new(grid, times, slices)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn slices(&self) -> &[SpectralField] {
        &self.slices
    }

    pub fn slice(&self, k: usize) -> &SpectralField {
        &self.slices[k]
    }

    pub fn first(&self) -> &SpectralField {
        &self.slices[0]
    }

    pub fn last(&self) -> &SpectralField {
        self.slices.last().expect("nonempty")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dt(&self) -> f64 {
        if self.len() < 2 {
            0.0
        } else {
            (self.times[self.len() - 1] - self.times[0]) / (self.len() - 1) as f64
        }
    }

    /// Linear interpolation in time; clamps outside the grid.
    pub fn at(&self, t: f64) -> SpectralField {
        let n = self.len();
        if n == 1 || t <= self.times[0] {
            return self.slices[0].clone();
        }
        if t >= self.times[n - 1] {
            return self.slices[n - 1].clone();
        }
        let s = (t - self.times[0]) / self.dt();
        let k = (s.floor() as usize).min(n - 2);
        let th = s - k as f64;
        let (a, b) = (self.slices[k].values(), self.slices[k + 1].values());
        let vals = a.iter().zip(b).map(|(x, y)| x * (1.0 - th) + y * th).collect();
        SpectralField::new(&self.grid, vals).expect("same grid")
    }

    pub fn norms(&self) -> Vec<f64> {
        self.slices.iter().map(|s| s.l2_norm()).collect()
    }

    /// `sup_t ‖·‖₂`.
    pub fn sup_l2(&self) -> f64 {
        self.norms().into_iter().fold(0.0, f64::max)
    }

    pub fn map_slices(&self, mut f: impl FnMut(usize, &SpectralField) -> SpectralField) -> Result<Self> {
        let slices = self.slices.iter().enumerate().map(|(k, s)| f(k, s)).collect();
        Self::new(&self.grid, self.times.clone(), slices)
    }

    pub fn try_map_slices(&self, mut f: impl FnMut(usize, &SpectralField) -> Result<SpectralField>) -> Result<Self> {
        let slices = self
            .slices
            .iter()
            .enumerate()
            .map(|(k, s)| f(k, s))
            .collect::<Result<Vec<_>>>()?;
        Self::new(&self.grid, self.times.clone(), slices)
    }

    pub fn project(&self, sign: Sign) -> Self {
        self.map_slices(|_, s| project(s, sign)).expect("same shape")
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        if self.len() != other.len()
            || self
                .times
                .iter()
                .zip(&other.times)
                .any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1.0))
        {
            return Err(Error::Shape("space-time fields on different time grids".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        self.map_slices(|k, s| s + &other.slices[k])
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        self.map_slices(|k, s| s - &other.slices[k])
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map_slices(|_, s| s.scale(c)).expect("same shape")
    }

    /// `sup_t ‖self − other‖₂`.
    pub fn sup_diff(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self
            .slices
            .iter()
            .zip(&other.slices)
            .map(|(a, b)| (a - b).l2_norm())
            .fold(0.0, f64::max))
    }

    /// Every `stride`-th slice, always keeping the last.
    pub fn subsample(&self, stride: usize) -> Result<Self> {
        let stride = stride.max(1);
        if !(self.len() - 1).is_multiple_of(stride) {
            return Err(Error::Shape(format!(
                "stride {stride} does not divide {} steps",
                self.len() - 1
            )));
        }
        let idx: Vec<usize> = (0..self.len()).step_by(stride).collect();
        Self::new(
            &self.grid,
            idx.iter().map(|&k| self.times[k]).collect(),
            idx.iter().map(|&k| self.slices[k].clone()).collect(),
        )
    }

    pub fn into_slices(self) -> Vec<SpectralField> {
        self.slices
    }

    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&(self.len() as u64).to_le_bytes())?;
        for t in &self.times {
            out.write_all(&t.to_le_bytes())?;
        }
        for s in &self.slices {
            io::write_binary(s, &mut out)?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format(format!("bad magic {magic:?}")));
        }
        let mut b8 = [0u8; 8];
        input.read_exact(&mut b8)?;
        let count = u64::from_le_bytes(b8) as usize;
        if count == 0 {
            return Err(Error::Format("space-time dump holds no slices".into()));
        }
        let mut times = Vec::with_capacity(count);
        for _ in 0..count {
            input.read_exact(&mut b8)?;
            times.push(f64::from_le_bytes(b8));
        }
        let mut slices = Vec::with_capacity(count);
        for _ in 0..count {
            slices.push(io::read_binary(&mut input)?);
        }
        let grid = slices[0].grid().clone();
        Self::new(&grid, times, slices)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_and_norms() {
        let g = Grid1D::new(16, 1.0).unwrap();
        let times = uniform_times(0.0, 1.0, 4);
        let f =
            SpaceTimeField::from_fn(&g, times, |_, t| SpectralField::from_fn(&g, |_| Complex64::new(t, 0.0))).unwrap();
        let mid = f.at(0.375);
        assert!((mid.values()[3].re - 0.375).abs() < 1e-15);
        assert!((f.sup_l2() - f.last().l2_norm()).abs() < 1e-15);
        assert_eq!(f.subsample(2).unwrap().len(), 3);
        assert!(f.subsample(3).is_err());
    }

    #[test]
    fn binary_round_trip() {
        let g = Grid1D::new(16, 2.0).unwrap();
        let f = SpaceTimeField::from_fn(&g, uniform_times(0.0, 0.5, 3), |k, t| {
            SpectralField::from_fn(&g, |x| Complex64::new(x * t, k as f64))
        })
        .unwrap();
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        let back = SpaceTimeField::read_binary(buf.as_slice()).unwrap();
        assert_eq!(back.times(), f.times());
        assert_eq!(back.sup_diff(&f).unwrap(), 0.0);
        assert!(SpaceTimeField::read_binary(&buf[..buf.len() - 1]).is_err());
        assert!(SpaceTimeField::read_binary(&b"SPF1"[..]).is_err());
    }

    #[test]
    fn rejects_nonuniform() {
        let g = Grid1D::new(16, 1.0).unwrap();
        let s = vec![SpectralField::zeros(&g); 3];
        assert!(SpaceTimeField::new(&g, vec![0.0, 0.1, 0.3], s).is_err());
    }
}
