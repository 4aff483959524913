//! Joint simulation of several assets' factors.
//!
//! Per step and path: draw Gaussians correlated by the stacked cross-asset
//! factor correlation, de-correlate each asset's block with the Cholesky
//! factor of that asset's own correlation matrix, then feed the independent
//! draws through the asset's single-asset step covariance factor. Each asset
//! keeps its exact marginal law; cross-asset increments are exact when the
//! assets' mean reversions agree and otherwise carry an error of second order
//! in `β Δt`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{CurveError, Result};
use crate::factor_model::{CalibratedModel, CrossCorrelation};
use crate::linalg::{cholesky_psd, forward_substitute, validate_correlation};
use crate::simulation::paths::{PathSet, SimGrid, Stepper};
use crate::simulation::rng::PathRng;

/// A set of calibrated assets and their pairwise factor cross-correlations.
#[derive(Debug, Clone)]
pub struct AssetUniverse {
    names: Vec<String>,
    models: Vec<CalibratedModel>,
    offsets: Vec<usize>,
    stacked: DMatrix<f64>,
}

impl AssetUniverse {
    /// Pairs missing from `cross` are uncorrelated.
    pub fn new(assets: Vec<(String, CalibratedModel)>, cross: &[(String, String, CrossCorrelation)]) -> Result<Self> {
        if assets.is_empty() {
            return Err(CurveError::InvalidSpec("asset universe is empty".into()));
        }
        let (names, models): (Vec<String>, Vec<CalibratedModel>) = assets.into_iter().unzip();
        let mut offsets = Vec::with_capacity(models.len());
        let mut total = 0;
        for m in &models {
            offsets.push(total);
            total += m.spec().n_factors();
        }
        let mut stacked = DMatrix::<f64>::zeros(total, total);
        for (a, m) in models.iter().enumerate() {
            let n = m.spec().n_factors();
            stacked.view_mut((offsets[a], offsets[a]), (n, n)).copy_from(m.spec().rho());
        }
        let index = |name: &str| {
            names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| CurveError::MissingData(format!("cross correlation names unknown asset {name}")))
        };
        for (x, y, xc) in cross {
            let (a, b) = (index(x)?, index(y)?);
            if a == b {
                return Err(CurveError::InvalidSpec(format!("cross correlation of {x} with itself")));
            }
            let (na, nb) = (models[a].spec().n_factors(), models[b].spec().n_factors());
            let mat = xc.matrix();
            if mat.nrows() != na || mat.ncols() != nb {
                return Err(CurveError::Shape(format!(
                    "cross correlation {x}/{y} is {}x{}, expected {na}x{nb}",
                    mat.nrows(),
                    mat.ncols()
                )));
            }
            stacked.view_mut((offsets[a], offsets[b]), (na, nb)).copy_from(mat);
            stacked.view_mut((offsets[b], offsets[a]), (nb, na)).copy_from(&mat.transpose());
        }
        let stacked = validate_correlation(&stacked)?;
        Ok(AssetUniverse {
            names,
            models,
            offsets,
            stacked,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn models(&self) -> &[CalibratedModel] {
        &self.models
    }

    pub fn stacked_correlation(&self) -> &DMatrix<f64> {
        &self.stacked
    }

    pub fn total_factors(&self) -> usize {
        self.stacked.nrows()
    }

    pub fn offset(&self, asset: usize) -> usize {
        self.offsets[asset]
    }
}

/// Simulates every asset on a common grid; path `p` uses stream `(seed, p)`.
pub fn simulate_multi_asset(
    u: &AssetUniverse,
    grid: &SimGrid,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<(String, PathSet)>> {
    if n_paths == 0 {
        return Err(CurveError::InvalidSpec("need at least one path".into()));
    }
    let total = u.total_factors();
    let big_l = cholesky_psd(&u.stacked)?;
    let own: Vec<DMatrix<f64>> = u
        .models
        .iter()
        .enumerate()
        .map(|(a, m)| {
            let n = m.spec().n_factors();
            cholesky_psd(&u.stacked.view((u.offsets[a], u.offsets[a]), (n, n)).into_owned())
        })
        .collect::<Result<_>>()?;
    let steppers: Vec<Stepper> = u.models.iter().map(|m| Stepper::new(m, grid)).collect::<Result<_>>()?;
    let nd = grid.len();
    let stride = nd * total;
    let mut data = vec![0.0; n_paths * stride];
    data.par_chunks_mut(stride).enumerate().for_each(|(p, out)| {
        let mut rng = PathRng::new(seed, p as u64);
        let mut eps = vec![0.0; total];
        let mut r = vec![0.0; total];
        let mut z = vec![0.0; total];
        let mut y = vec![0.0; total];
        for k in 0..nd {
            rng.fill_normal(&mut eps);
            for i in 0..total {
                r[i] = (0..=i).map(|j| big_l[(i, j)] * eps[j]).sum();
            }
            for (a, m) in u.models.iter().enumerate() {
                let (o, n) = (u.offsets[a], m.spec().n_factors());
                forward_substitute(&own[a], &r[o..o + n], &mut z[o..o + n]);
                steppers[a].advance(k, &mut y[o..o + n], &z[o..o + n]);
            }
            out[k * total..(k + 1) * total].copy_from_slice(&y);
        }
    });
    u.models
        .iter()
        .enumerate()
        .map(|(a, m)| {
            let (o, n) = (u.offsets[a], m.spec().n_factors());
            let mut slice = Vec::with_capacity(n_paths * nd * n);
            for row in data.chunks(total) {
                slice.extend_from_slice(&row[o..o + n]);
            }
            Ok((u.names[a].clone(), PathSet::from_raw(n_paths, grid.clone(), n, seed, slice)?))
        })
        .collect()
}
