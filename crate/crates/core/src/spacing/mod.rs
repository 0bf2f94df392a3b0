//! Nodal spacing functions `h(p)`.

mod expr;

use std::f64::consts::{FRAC_PI_3, PI};
use std::fmt;
use std::sync::Arc;

pub use expr::{parse_spacing_expr, BinOp, Expr, Func, ParseError, ParseErrorKind};

use crate::geometry::{arg, Point};

#[derive(Debug, Clone, thiserror::Error)]
pub enum SpacingError {
    #[error("spacing is {value} at {point:?}; it must be positive and finite")]
    NonPositive { value: f64, point: Vec<f64> },
    #[error("spacing expects a {expected}-D point, got {got}-D")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unknown spacing preset '{0}'")]
    UnknownPreset(String),
    #[error("scale h_s must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Spacing rows for the test domains, with the scale factored out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Uniform,
    Clover2d,
    Bunny2d,
    Maze2d,
    Clover3d,
    Bunny3d,
    Maze3d,
}

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::Uniform,
        Preset::Clover2d,
        Preset::Bunny2d,
        Preset::Maze2d,
        Preset::Clover3d,
        Preset::Bunny3d,
        Preset::Maze3d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Uniform => "uniform",
            Preset::Clover2d => "clover2d",
            Preset::Bunny2d => "bunny2d",
            Preset::Maze2d => "maze2d",
            Preset::Clover3d => "clover3d",
            Preset::Bunny3d => "bunny3d",
            Preset::Maze3d => "maze3d",
        }
    }

    pub fn from_name(name: &str) -> Option<Preset> {
        Preset::ALL.into_iter().find(|p| p.name() == name)
    }

    /// Required dimension; `None` when any dimension works.
    pub fn dim(self) -> Option<usize> {
        match self {
            Preset::Uniform => None,
            Preset::Clover2d | Preset::Bunny2d | Preset::Maze2d => Some(2),
            Preset::Clover3d | Preset::Bunny3d | Preset::Maze3d => Some(3),
        }
    }

    /// Unscaled shape of the spacing at `p`.
    #[inline]
    pub fn shape(self, p: &[f64]) -> f64 {
        match self {
            Preset::Uniform => 1.0,
            Preset::Clover2d => {
                let (x, y) = (p[0], p[1]);
                let c = (3.0 * arg(x, y)).cos();
                1.0 + 4.0 * c * c * (x * x + y * y).sqrt().tanh()
            }
            Preset::Bunny2d => (1.0 + p[1] / 100.0).powf(1.5),
            Preset::Maze2d => (1.0 + p[1] / 20.0).powf(1.5),
            Preset::Clover3d => {
                let (x, y, z) = (p[0], p[1], p[2]);
                let c = (3.0 * arg(x, y) + FRAC_PI_3).cos();
                0.5 + c * c * ((2.0 - z) * (x * x + y * y + z * z).sqrt()).tanh()
            }
            Preset::Bunny3d => 1.0 + 4.0 * (180.0 - p[2]) / 180.0,
            Preset::Maze3d => 4.0 + (p[0] * PI / 5.0).sin(),
        }
    }
}

/// An evaluable spacing function. Cheap to clone and safe to share.
#[derive(Clone)]
pub enum SpacingFn {
    Constant { h_s: f64 },
    Preset { preset: Preset, h_s: f64 },
    Expr { ast: Arc<Expr>, h_s: f64, dim: usize },
}

impl fmt::Debug for SpacingFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpacingFn::Constant { h_s } => write!(f, "Constant({h_s})"),
            SpacingFn::Preset { preset, h_s } => write!(f, "Preset({}, {h_s})", preset.name()),
            SpacingFn::Expr { ast, h_s, dim } => write!(f, "Expr({ast}, {h_s}, {dim}-D)"),
        }
    }
}

fn check_scale(h_s: f64) -> Result<f64, SpacingError> {
    if h_s > 0.0 && h_s.is_finite() {
        Ok(h_s)
    } else {
        Err(SpacingError::InvalidScale(h_s))
    }
}

impl SpacingFn {
    pub fn constant(h: f64) -> Self {
        SpacingFn::Constant { h_s: h }
    }

    pub fn preset(name: &str, h_s: f64) -> Result<Self, SpacingError> {
        let preset = Preset::from_name(name).ok_or_else(|| SpacingError::UnknownPreset(name.into()))?;
        Ok(SpacingFn::Preset { preset, h_s: check_scale(h_s)? })
    }

    /// Parses `src` and binds it to `dim` coordinates; `h_s` multiplies the result.
    pub fn expr(src: &str, h_s: f64, dim: usize) -> Result<Self, SpacingError> {
        let ast = parse_spacing_expr(src)?;
        Self::from_ast(ast, h_s, dim)
    }

    pub fn from_ast(ast: Expr, h_s: f64, dim: usize) -> Result<Self, SpacingError> {
        if ast.arity() > dim {
            let var = ["x", "y", "z"][ast.arity() - 1];
            return Err(SpacingError::Parse(ParseError {
                offset: 0,
                kind: ParseErrorKind::UnknownVariable(format!("{var} (in {dim}-D)")),
            }));
        }
        Ok(SpacingFn::Expr { ast: Arc::new(ast), h_s: check_scale(h_s)?, dim })
    }

    /// The spacing's scale factor.
    pub fn scale(&self) -> f64 {
        match self {
            SpacingFn::Constant { h_s } | SpacingFn::Preset { h_s, .. } | SpacingFn::Expr { h_s, .. } => *h_s,
        }
    }

    /// Copy with the scale multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut s = self.clone();
        match &mut s {
            SpacingFn::Constant { h_s } | SpacingFn::Preset { h_s, .. } | SpacingFn::Expr { h_s, .. } => {
                *h_s *= factor
            }
        }
        s
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            SpacingFn::Constant { .. } => None,
            SpacingFn::Preset { preset, .. } => preset.dim(),
            SpacingFn::Expr { dim, .. } => Some(*dim),
        }
    }

    /// Evaluates `h(p)`; non-positive or non-finite values are errors.
    pub fn eval(&self, p: &[f64]) -> Result<f64, SpacingError> {
        if let Some(d) = self.dim() {
            if d != p.len() {
                return Err(SpacingError::DimensionMismatch { expected: d, got: p.len() });
            }
        }
        let v = match self {
            SpacingFn::Constant { h_s } => *h_s,
            SpacingFn::Preset { preset, h_s } => h_s * preset.shape(p),
            SpacingFn::Expr { ast, h_s, .. } => h_s * ast.eval(p),
        };
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(SpacingError::NonPositive { value: v, point: p.to_vec() })
        }
    }

    #[inline]
    pub fn at<const D: usize>(&self, p: &Point<D>) -> Result<f64, SpacingError> {
        self.eval(&p.0)
    }
}
