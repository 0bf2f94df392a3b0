//! A small RBF-FD Poisson solver with Dirichlet boundary conditions, used to
//! check generated nodes end to end on a manufactured problem.

mod rbffd;
mod study;

pub use rbffd::{exactness_residual, laplacian_weights, monomials, phs3, phs3_laplacian, MONOMIALS, MONOMIAL_LAPLACIANS};
pub use study::{
    clover_nodes, convergence_order, domain_nodes, manufactured_clover, manufactured_exact, manufactured_problem,
    manufactured_source, ManufacturedRun, NodeSource, StudyRow,
};

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};

use crate::fill::FillError;
use crate::geometry::Point;
use crate::index::{IndexError, StaticIndex};
use crate::spacing::SpacingError;

/// Stencil size used when none is given.
pub const DEFAULT_STENCIL: usize = 15;
/// Relative residual the global solve must reach.
pub const SOLVE_TOLERANCE: f64 = 1e-10;
const REFINEMENT_STEPS: usize = 3;

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("stencil size {n} exceeds the {size} available nodes")]
    StencilTooLarge { n: usize, size: usize },
    #[error("stencil size must be at least 6 in 2-D, got {0}")]
    StencilTooSmall(usize),
    #[error("local system at {center:?} is singular (monomial residual {residual:e})")]
    SingularStencil { center: [f64; 2], residual: f64 },
    #[error("no boundary nodes")]
    EmptyBoundary,
    #[error("global system is singular: {0}")]
    Singular(String),
    #[error("solve stopped at relative residual {0:e}")]
    NotConverged(f64),
    #[error("exact solution has zero norm")]
    ZeroNorm,
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Fill(#[from] FillError),
    #[error(transparent)]
    Spacing(#[from] SpacingError),
}

/// Indices of the `n` nearest nodes of every node, nearest first, so each
/// stencil starts with its own node.
pub fn build_stencils<const D: usize>(nodes: &[Point<D>], n: usize) -> Result<Vec<Vec<usize>>, SolverError> {
    if n > nodes.len() {
        return Err(SolverError::StencilTooLarge { n, size: nodes.len() });
    }
    if n == 0 {
        return Ok(vec![Vec::new(); nodes.len()]);
    }
    let index = StaticIndex::build(nodes.to_vec())?;
    nodes
        .iter()
        .map(|p| Ok(index.knn(p, n)?.into_iter().map(|nb| nb.index).collect()))
        .collect()
}

/// Nodes of a Dirichlet problem. Global numbering puts the interior nodes
/// first, then the boundary nodes.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub interior: Vec<Point<2>>,
    pub boundary: Vec<Point<2>>,
    /// One stencil per interior node, in global numbering.
    pub stencils: Vec<Vec<usize>>,
}

impl Discretization {
    pub fn new(interior: Vec<Point<2>>, boundary: Vec<Point<2>>, n: usize) -> Result<Self, SolverError> {
        if n < MONOMIALS {
            return Err(SolverError::StencilTooSmall(n));
        }
        if boundary.is_empty() {
            return Err(SolverError::EmptyBoundary);
        }
        let nodes: Vec<Point<2>> = interior.iter().chain(&boundary).copied().collect();
        if n > nodes.len() {
            return Err(SolverError::StencilTooLarge { n, size: nodes.len() });
        }
        let index = StaticIndex::build(nodes)?;
        let stencils = interior
            .iter()
            .map(|p| Ok(index.knn(p, n)?.into_iter().map(|nb| nb.index).collect()))
            .collect::<Result<_, SolverError>>()?;
        Ok(Discretization { interior, boundary, stencils })
    }

    pub fn len(&self) -> usize {
        self.interior.len() + self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node(&self, i: usize) -> &Point<2> {
        if i < self.interior.len() {
            &self.interior[i]
        } else {
            &self.boundary[i - self.interior.len()]
        }
    }

    pub fn nodes(&self) -> Vec<Point<2>> {
        self.interior.iter().chain(&self.boundary).copied().collect()
    }

    /// Laplacian weights of every interior stencil, computed on all
    /// available cores.
    pub fn weights(&self) -> Result<Vec<Vec<f64>>, SolverError> {
        let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(self.stencils.len().max(1));
        let chunk = self.stencils.len().div_ceil(workers).max(1);
        let parts: Vec<Result<Vec<Vec<f64>>, SolverError>> = std::thread::scope(|s| {
            let handles: Vec<_> = self
                .stencils
                .chunks(chunk)
                .enumerate()
                .map(|(c, part)| {
                    s.spawn(move || {
                        part.iter()
                            .enumerate()
                            .map(|(k, st)| {
                                let pts: Vec<Point<2>> = st.iter().map(|&j| *self.node(j)).collect();
                                laplacian_weights(&pts, &self.interior[c * chunk + k])
                            })
                            .collect()
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("weight worker panicked")).collect()
        });
        let mut out = Vec::with_capacity(self.stencils.len());
        for p in parts {
            out.extend(p?);
        }
        Ok(out)
    }

    /// Monomial exactness residual of every interior stencil.
    pub fn exactness_residuals(&self, weights: &[Vec<f64>]) -> Vec<f64> {
        self.stencils
            .iter()
            .zip(weights)
            .enumerate()
            .map(|(i, (st, w))| {
                let pts: Vec<Point<2>> = st.iter().map(|&j| *self.node(j)).collect();
                exactness_residual(&pts, &self.interior[i], w)
            })
            .collect()
    }
}

/// Square sparse matrix in compressed-row form with its right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl SparseSystem {
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let (c, v) = self.row(i);
                c.iter().zip(v).map(|(&j, a)| a * x[j]).sum()
            })
            .collect()
    }

    /// `|b - A x|_2 / |b|_2`, or the plain residual norm when `b = 0`.
    pub fn relative_residual(&self, x: &[f64]) -> f64 {
        let ax = self.mul(x);
        let r: f64 = ax.iter().zip(&self.rhs).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt();
        let b: f64 = self.rhs.iter().map(|b| b * b).sum::<f64>().sqrt();
        if b > 0.0 {
            r / b
        } else {
            r
        }
    }

    /// Solves by sparse LU with a few steps of iterative refinement.
    pub fn solve(&self) -> Result<Vec<f64>, SolverError> {
        let triplets: Vec<Triplet<usize, usize, f64>> = (0..self.n)
            .flat_map(|i| {
                let (c, v) = self.row(i);
                c.iter().zip(v).map(move |(&j, &a)| Triplet::new(i, j, a))
            })
            .collect();
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(self.n, self.n, &triplets)
            .map_err(|e| SolverError::Singular(format!("{e:?}")))?;
        let lu = a.sp_lu().map_err(|e| SolverError::Singular(format!("{e:?}")))?;

        let mut x = vec![0.0; self.n];
        let mut r = self.rhs.clone();
        let mut res = f64::INFINITY;
        for _ in 0..=REFINEMENT_STEPS {
            let dx = lu.solve(Col::<f64>::from_fn(self.n, |i| r[i]));
            for (xi, d) in x.iter_mut().zip(dx.iter()) {
                *xi += d;
            }
            res = self.relative_residual(&x);
            if !res.is_finite() {
                return Err(SolverError::Singular("non-finite solution".into()));
            }
            if res <= SOLVE_TOLERANCE {
                return Ok(x);
            }
            let ax = self.mul(&x);
            r = self.rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        }
        Err(SolverError::NotConverged(res))
    }
}

/// Builds the global system: interior rows apply the stencil weights and
/// equal `f`, boundary rows are identity rows equal to `g`.
pub fn assemble(
    disc: &Discretization,
    weights: &[Vec<f64>],
    f: &dyn Fn(&Point<2>) -> f64,
    g: &dyn Fn(&Point<2>) -> f64,
) -> SparseSystem {
    let n = disc.len();
    let mut row_ptr = Vec::with_capacity(n + 1);
    row_ptr.push(0);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    let mut rhs = Vec::with_capacity(n);
    for (i, (st, w)) in disc.stencils.iter().zip(weights).enumerate() {
        let mut row: Vec<(usize, f64)> = st.iter().copied().zip(w.iter().copied()).collect();
        row.sort_unstable_by_key(|e| e.0);
        cols.extend(row.iter().map(|e| e.0));
        vals.extend(row.iter().map(|e| e.1));
        row_ptr.push(cols.len());
        rhs.push(f(&disc.interior[i]));
    }
    for (k, p) in disc.boundary.iter().enumerate() {
        cols.push(disc.interior.len() + k);
        vals.push(1.0);
        row_ptr.push(cols.len());
        rhs.push(g(p));
    }
    SparseSystem { n, row_ptr, cols, vals, rhs }
}

/// Solves `Lap u = f` in the interior with `u = g` on the boundary nodes.
/// The result is indexed like [`Discretization::nodes`].
pub fn solve_poisson_dirichlet(
    disc: &Discretization,
    f: &dyn Fn(&Point<2>) -> f64,
    g: &dyn Fn(&Point<2>) -> f64,
) -> Result<Vec<f64>, SolverError> {
    let w = disc.weights()?;
    assemble(disc, &w, f, g).solve()
}

/// Relative errors `(e1, e_inf)`: `sum |u_h - u| / sum |u|` and
/// `max |u_h - u| / max |u|`.
pub fn error_norms(u_h: &[f64], exact: &[f64]) -> Result<(f64, f64), SolverError> {
    if u_h.len() != exact.len() {
        return Err(SolverError::LengthMismatch { expected: exact.len(), got: u_h.len() });
    }
    let (mut d1, mut u1, mut dinf, mut uinf) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for (a, b) in u_h.iter().zip(exact) {
        let d = (a - b).abs();
        d1 += d;
        u1 += b.abs();
        dinf = dinf.max(d);
        uinf = uinf.max(b.abs());
    }
    if uinf == 0.0 {
        return Err(SolverError::ZeroNorm);
    }
    Ok((d1 / u1, dinf / uinf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Jittered grid on [0,1]^2 with the unit-square boundary sampled at the
    /// same spacing.
    fn square(m: usize, seed: u64) -> (Vec<Point<2>>, Vec<Point<2>>) {
        let h = 1.0 / m as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut interior = Vec::new();
        for i in 1..m {
            for j in 1..m {
                let jx = rng.random_range(-0.2..0.2) * h;
                let jy = rng.random_range(-0.2..0.2) * h;
                interior.push(Point([i as f64 * h + jx, j as f64 * h + jy]));
            }
        }
        let mut boundary = Vec::new();
        for i in 0..m {
            let t = i as f64 * h;
            boundary.extend([Point([t, 0.0]), Point([1.0, t]), Point([1.0 - t, 1.0]), Point([0.0, 1.0 - t])]);
        }
        (interior, boundary)
    }

    #[test]
    fn stencils_small_cases() {
        let plus = vec![Point([0.0, 0.0]), Point([1.0, 0.0]), Point([-1.0, 0.0]), Point([0.0, 1.0]), Point([0.0, -1.0])];
        let st = build_stencils(&plus, 5).unwrap();
        let mut s0 = st[0].clone();
        s0.sort();
        assert_eq!(s0, vec![0, 1, 2, 3, 4]);
        assert!(st.iter().enumerate().all(|(i, s)| s[0] == i));
        let one = build_stencils(&plus, 1).unwrap();
        assert!(one.iter().enumerate().all(|(i, s)| s == &vec![i]));
        assert!(matches!(build_stencils(&plus, 6), Err(SolverError::StencilTooLarge { n: 6, size: 5 })));
    }

    #[test]
    fn stencils_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pts: Vec<Point<2>> = (0..800).map(|_| Point([rng.random(), rng.random()])).collect();
        let st = build_stencils(&pts, 12).unwrap();
        for (i, s) in st.iter().enumerate() {
            let mut b: Vec<(f64, usize)> = pts.iter().enumerate().map(|(j, q)| (pts[i].dist2(q), j)).collect();
            b.sort_by(|a, c| a.0.total_cmp(&c.0).then(a.1.cmp(&c.1)));
            let want: Vec<usize> = b[..12].iter().map(|e| e.1).collect();
            assert_eq!(s, &want);
        }
    }

    #[test]
    fn constant_and_harmonic_quadratic_are_reproduced() {
        let (interior, boundary) = square(20, 1);
        let disc = Discretization::new(interior, boundary, DEFAULT_STENCIL).unwrap();
        let u = solve_poisson_dirichlet(&disc, &|_| 0.0, &|_| 1.0).unwrap();
        assert!(u.iter().all(|v| (v - 1.0).abs() < 1e-8));

        let q = |p: &Point<2>| p.0[0] * p.0[0] - p.0[1] * p.0[1];
        let u = solve_poisson_dirichlet(&disc, &|_| 0.0, &q).unwrap();
        let nodes = disc.nodes();
        for (p, v) in nodes.iter().zip(&u) {
            assert!((v - q(p)).abs() < 1e-6);
        }
        // boundary rows hold exactly
        for (k, p) in disc.boundary.iter().enumerate() {
            assert!((u[disc.interior.len() + k] - q(p)).abs() < 1e-10);
        }
    }

    #[test]
    fn assembled_rows_have_stencil_size() {
        let (interior, boundary) = square(10, 2);
        let n_int = interior.len();
        let disc = Discretization::new(interior, boundary, 9).unwrap();
        let w = disc.weights().unwrap();
        assert!(disc.exactness_residuals(&w).iter().all(|&r| r < 1e-10));
        let sys = assemble(&disc, &w, &|_| 1.0, &|_| 2.0);
        for i in 0..sys.n {
            let (c, v) = sys.row(i);
            if i < n_int {
                assert_eq!(c.len(), 9);
                assert!(c.windows(2).all(|x| x[0] < x[1]));
            } else {
                assert_eq!((c, v), (&[i][..], &[1.0][..]));
            }
        }
    }

    #[test]
    fn discretization_errors() {
        let (interior, boundary) = square(4, 3);
        assert!(matches!(Discretization::new(interior.clone(), boundary.clone(), 5), Err(SolverError::StencilTooSmall(5))));
        assert!(matches!(Discretization::new(interior.clone(), vec![], 15), Err(SolverError::EmptyBoundary)));
        assert!(matches!(Discretization::new(interior, boundary, 100), Err(SolverError::StencilTooLarge { .. })));
    }

    #[test]
    fn error_norm_examples() {
        let exact = vec![1.0, -0.5, 0.25];
        assert_eq!(error_norms(&exact, &exact).unwrap(), (0.0, 0.0));
        let shifted: Vec<f64> = exact.iter().map(|v| v + 0.1).collect();
        let (e1, einf) = error_norms(&shifted, &exact).unwrap();
        assert!((einf - 0.1).abs() < 1e-15);
        assert!((e1 - 0.3 / 1.75).abs() < 1e-15);
        assert!(matches!(error_norms(&[0.0], &[0.0]), Err(SolverError::ZeroNorm)));
        assert!(matches!(error_norms(&[0.0], &[1.0, 2.0]), Err(SolverError::LengthMismatch { .. })));
    }
}
