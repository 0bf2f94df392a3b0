use std::f64::consts::PI;

use serde::Serialize;

use super::{assemble, error_norms, Discretization, SolverError};
use crate::fill::{fill_parallel, fill_sequential, spacing_for_target, FillConfig, DEFAULT_MC_SAMPLES};
use crate::geometry::{boundary_sample_2d, BoundaryCurve, Domain, Point, StarPolar2D};
use crate::index::StaticIndex;
use crate::spacing::SpacingFn;

/// `u(x, y) = sin(pi x / 3) sin(pi y / 3)`.
pub fn manufactured_exact(p: &Point<2>) -> f64 {
    (PI * p.0[0] / 3.0).sin() * (PI * p.0[1] / 3.0).sin()
}

/// `Lap u = -2/9 pi^2 u` for [`manufactured_exact`].
pub fn manufactured_source(p: &Point<2>) -> f64 {
    -2.0 / 9.0 * PI * PI * manufactured_exact(p)
}

/// Which fill produces the interior nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeSource {
    Sequential,
    Parallel { threads: usize },
}

/// Boundary and interior nodes for `domain`, with the spacing `h_shape`
/// rescaled so that the fill holds about `target` nodes.
///
/// Boundary nodes follow the boundary curve at the same spacing. Interior
/// nodes closer than half the local spacing to a boundary node are dropped.
pub fn domain_nodes<G: Domain<2> + BoundaryCurve>(
    domain: &G,
    h_shape: &SpacingFn,
    seeds: &[Point<2>],
    target: usize,
    source: NodeSource,
    rng_seed: u64,
) -> Result<(Vec<Point<2>>, Vec<Point<2>>, SpacingFn), SolverError> {
    let h = spacing_for_target(domain, h_shape, target, DEFAULT_MC_SAMPLES, rng_seed)?;
    let boundary = boundary_sample_2d(domain, &h)?;
    let set = match source {
        NodeSource::Sequential => fill_sequential(domain, &h, seeds, 12, rng_seed, None)?,
        NodeSource::Parallel { threads } => {
            let cfg = FillConfig { threads, n_s: threads, target_np: Some(target), rng_seed, ..FillConfig::default() };
            fill_parallel(domain, &h, seeds, &cfg)?
        }
    };
    let bidx = StaticIndex::build(boundary.clone())?;
    let mut interior = Vec::with_capacity(set.len());
    for p in set.positions() {
        if bidx.nearest(&p).distance >= 0.5 * h.at(&p)? {
            interior.push(p);
        }
    }
    Ok((interior, boundary, h))
}

/// [`domain_nodes`] for the clover with the clover2d spacing, seeded at the
/// origin.
pub fn clover_nodes(
    target: usize,
    source: NodeSource,
    rng_seed: u64,
) -> Result<(Vec<Point<2>>, Vec<Point<2>>, SpacingFn), SolverError> {
    let h = SpacingFn::preset("clover2d", 1.0)?;
    domain_nodes(&StarPolar2D::clover(), &h, &[Point([0.0, 0.0])], target, source, rng_seed)
}

/// One refinement of the manufactured problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StudyRow {
    pub n_nodes: usize,
    pub n_interior: usize,
    pub n_boundary: usize,
    pub h_scale: f64,
    pub e1: f64,
    pub e_inf: f64,
    /// Largest monomial exactness residual over all stencils.
    pub max_exactness_residual: f64,
}

/// A solved refinement with its nodes and nodal values.
#[derive(Debug, Clone)]
pub struct ManufacturedRun {
    pub row: StudyRow,
    pub nodes: Vec<Point<2>>,
    pub u: Vec<f64>,
}

/// Solves the manufactured problem on nodes from [`domain_nodes`] with
/// `stencil`-point stencils. Errors are measured at the nodes.
pub fn manufactured_problem<G: Domain<2> + BoundaryCurve>(
    domain: &G,
    h_shape: &SpacingFn,
    seeds: &[Point<2>],
    target: usize,
    stencil: usize,
    source: NodeSource,
    rng_seed: u64,
) -> Result<ManufacturedRun, SolverError> {
    if stencil < super::MONOMIALS {
        return Err(SolverError::StencilTooSmall(stencil));
    }
    let (interior, boundary, h) = domain_nodes(domain, h_shape, seeds, target, source, rng_seed)?;
    let disc = Discretization::new(interior, boundary, stencil)?;
    let w = disc.weights()?;
    let max_res = disc.exactness_residuals(&w).into_iter().fold(0.0, f64::max);
    let u = assemble(&disc, &w, &manufactured_source, &manufactured_exact).solve()?;
    let nodes = disc.nodes();
    let exact: Vec<f64> = nodes.iter().map(manufactured_exact).collect();
    let (e1, e_inf) = error_norms(&u, &exact)?;
    let row = StudyRow {
        n_nodes: disc.len(),
        n_interior: disc.interior.len(),
        n_boundary: disc.boundary.len(),
        h_scale: h.scale(),
        e1,
        e_inf,
        max_exactness_residual: max_res,
    };
    Ok(ManufacturedRun { row, nodes, u })
}

/// [`manufactured_problem`] on the clover with the clover2d spacing.
pub fn manufactured_clover(
    target: usize,
    stencil: usize,
    source: NodeSource,
    rng_seed: u64,
) -> Result<StudyRow, SolverError> {
    let h = SpacingFn::preset("clover2d", 1.0)?;
    let run = manufactured_problem(&StarPolar2D::clover(), &h, &[Point([0.0, 0.0])], target, stencil, source, rng_seed)?;
    Ok(run.row)
}

/// Least-squares convergence order of `e_inf` in the spacing, taking the
/// spacing proportional to `N^(-1/2)`.
pub fn convergence_order(rows: &[StudyRow]) -> Option<f64> {
    if rows.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = rows.iter().map(|r| -0.5 * (r.n_nodes as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.e_inf.ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn source_matches_exact_laplacian() {
        let e = 1e-4;
        for p in [Point([0.3, 0.7]), Point([-1.1, 0.4])] {
            let u = |dx: f64, dy: f64| manufactured_exact(&Point([p.0[0] + dx, p.0[1] + dy]));
            let fd = (u(e, 0.0) + u(-e, 0.0) + u(0.0, e) + u(0.0, -e) - 4.0 * u(0.0, 0.0)) / (e * e);
            assert!((fd - manufactured_source(&p)).abs() < 1e-6);
        }
    }

    #[test]
    fn refinement_reduces_error() {
        let coarse = manufactured_clover(500, 15, NodeSource::Sequential, 1).unwrap();
        let fine = manufactured_clover(2000, 15, NodeSource::Sequential, 1).unwrap();
        assert!(fine.e_inf < coarse.e_inf, "{coarse:?} {fine:?}");
        assert!(coarse.max_exactness_residual < 1e-10);
        assert!(convergence_order(&[coarse, fine]).unwrap() > 1.0);
        assert!(matches!(manufactured_clover(500, 5, NodeSource::Sequential, 1), Err(SolverError::StencilTooSmall(5))));
    }

    #[test]
    fn order_of_exact_power_law() {
        let row = |n: usize, e: f64| StudyRow {
            n_nodes: n,
            n_interior: n,
            n_boundary: 0,
            h_scale: 1.0,
            e1: e,
            e_inf: e,
            max_exactness_residual: 0.0,
        };
        let rows = [row(1000, 1e-2), row(4000, 2.5e-3), row(16000, 6.25e-4)];
        assert!((convergence_order(&rows).unwrap() - 2.0).abs() < 1e-12);
        assert!(convergence_order(&rows[..1]).is_none());
    }
}
