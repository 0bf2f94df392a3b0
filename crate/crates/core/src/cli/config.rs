use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::geometry::{BoxDomain, Domain, Point, Polygon2D, StarPolar2D, StarSpherical3D, TriMesh3D};
use crate::spacing::SpacingFn;

/// A problem in the configuration file: what to fill, how densely, and
/// where to write the results.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dim: usize,
    pub domain: DomainSpec,
    pub spacing: SpacingSpec,
    #[serde(default)]
    pub seeds: SeedSpec,
    #[serde(default = "default_n_c")]
    pub n_c: usize,
    #[serde(default = "default_one")]
    pub threads: usize,
    #[serde(default = "default_one")]
    pub n_s: usize,
    #[serde(default)]
    pub target_np: Option<usize>,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default)]
    pub max_points: Option<usize>,
    #[serde(default = "default_true")]
    pub bootstrap: bool,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_n_c() -> usize {
    12
}

fn default_one() -> usize {
    1
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    /// The closed-form clover in 2-D or 3-D.
    Clover,
    Box,
    /// Inline `vertices` or a CSV `file` of `x,y` rows.
    Polygon,
    /// STL or OBJ surface in `file`.
    Mesh,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub kind: DomainKind,
    #[serde(default)]
    pub lo: Option<Vec<f64>>,
    #[serde(default)]
    pub hi: Option<Vec<f64>>,
    #[serde(default)]
    pub vertices: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpacingKind {
    /// Uniform spacing `h_s`.
    Constant,
    /// A named spacing shape scaled by `h_s`.
    Preset,
    /// An expression in `x, y, z` scaled by `h_s`.
    Expr,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpacingSpec {
    pub kind: SpacingKind,
    pub h_s: f64,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub expr: Option<String>,
}

/// `"auto"` for the centre of the bounding box, or explicit points.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum SeedSpec {
    #[default]
    Auto,
    Points(Vec<Vec<f64>>),
}

impl<'de> Deserialize<'de> for SeedSpec {
    fn deserialize<De: serde::Deserializer<'de>>(d: De) -> Result<Self, De::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Word(String),
            Points(Vec<Vec<f64>>),
        }
        match Raw::deserialize(d)? {
            Raw::Word(w) if w == "auto" => Ok(SeedSpec::Auto),
            Raw::Word(w) => Err(serde::de::Error::custom(format!("expected \"auto\" or a list of points, got {w:?}"))),
            Raw::Points(p) => Ok(SeedSpec::Points(p)),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub points: Option<PathBuf>,
    #[serde(default)]
    pub stats: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: at {field}: {msg}")]
    Schema { path: String, field: String, msg: String },
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

impl RunConfig {
    /// Parses JSON text; schema errors name the offending field.
    pub fn from_json(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Schema {
            path: origin.to_string(),
            field: e.path().to_string(),
            msg: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        let mut cfg = Self::from_json(&text, &path.display().to_string())?;
        // relative data files are resolved against the config's directory
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(f) = &mut cfg.domain.file {
            if f.is_relative() {
                *f = base.join(&*f);
            }
        }
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if !(1..=3).contains(&self.dim) {
            return Err(invalid(format!("dim: must be 1, 2 or 3, got {}", self.dim)));
        }
        let need = |d: usize, what: &str| {
            if self.dim == d {
                Ok(())
            } else {
                Err(invalid(format!("domain: {what} needs dim = {d}, config has dim = {}", self.dim)))
            }
        };
        let d = &self.domain;
        match d.kind {
            DomainKind::Clover if self.dim == 1 => return Err(invalid("domain: clover needs dim = 2 or 3")),
            DomainKind::Clover => {}
            DomainKind::Box => match (&d.lo, &d.hi) {
                (Some(lo), Some(hi)) if lo.len() == self.dim && hi.len() == self.dim => {}
                _ => return Err(invalid(format!("domain: box needs lo and hi with {} coordinates each", self.dim))),
            },
            DomainKind::Polygon => {
                need(2, "polygon")?;
                if d.vertices.is_some() == d.file.is_some() {
                    return Err(invalid("domain: give exactly one of vertices and file"));
                }
            }
            DomainKind::Mesh => {
                need(3, "mesh")?;
                if d.file.is_none() {
                    return Err(invalid("domain: mesh needs a file"));
                }
            }
        }
        let sp = &self.spacing;
        if !(sp.h_s > 0.0 && sp.h_s.is_finite()) {
            return Err(invalid(format!("spacing.h_s: must be positive, got {}", sp.h_s)));
        }
        match sp.kind {
            SpacingKind::Preset => {
                let name = sp.name.as_deref().ok_or_else(|| invalid("spacing: preset needs a name"))?;
                let preset = crate::spacing::Preset::from_name(name)
                    .ok_or_else(|| invalid(format!("spacing.name: unknown preset {name:?}")))?;
                if let Some(pd) = preset.dim() {
                    if pd != self.dim {
                        return Err(invalid(format!("spacing: preset {name} needs dim = {pd}")));
                    }
                }
            }
            SpacingKind::Expr if sp.expr.is_none() => return Err(invalid("spacing: expr kind needs an expr")),
            _ => {}
        }
        if let SeedSpec::Points(pts) = &self.seeds {
            if pts.is_empty() {
                return Err(invalid("seeds: list is empty"));
            }
            if let Some((i, p)) = pts.iter().enumerate().find(|(_, p)| p.len() != self.dim) {
                return Err(invalid(format!("seeds[{i}]: has {} coordinates, expected {}", p.len(), self.dim)));
            }
        }
        Ok(())
    }

    pub fn spacing_fn(&self) -> Result<SpacingFn, ConfigError> {
        let sp = &self.spacing;
        let r = match sp.kind {
            SpacingKind::Constant => Ok(SpacingFn::constant(sp.h_s)),
            SpacingKind::Preset => SpacingFn::preset(sp.name.as_deref().unwrap_or(""), sp.h_s),
            SpacingKind::Expr => SpacingFn::expr(sp.expr.as_deref().unwrap_or(""), sp.h_s, self.dim),
        };
        r.map_err(|e| invalid(format!("spacing: {e}")))
    }

    /// The configured domain; `D` must equal `dim`.
    pub fn domain<const D: usize>(&self) -> Result<Box<dyn Domain<D>>, ConfigError> {
        assert_eq!(D, self.dim, "domain requested in the wrong dimension");
        let any = self.any_domain()?;
        Ok(any.into_dim::<D>().expect("dimension checked"))
    }

    pub fn any_domain(&self) -> Result<AnyDomain, ConfigError> {
        let geo = |e: crate::geometry::GeometryError| invalid(format!("domain: {e}"));
        let d = &self.domain;
        let lo = d.lo.as_deref().unwrap_or(&[]);
        let hi = d.hi.as_deref().unwrap_or(&[]);
        Ok(match (d.kind, self.dim) {
            (DomainKind::Clover, 2) => AnyDomain::Star2(StarPolar2D::clover()),
            (DomainKind::Clover, 3) => AnyDomain::D3(Box::new(StarSpherical3D::clover())),
            (DomainKind::Box, 1) => AnyDomain::D1(Box::new(BoxDomain::new([lo[0]], [hi[0]]).map_err(geo)?)),
            (DomainKind::Box, 2) => AnyDomain::D2(Box::new(BoxDomain::new([lo[0], lo[1]], [hi[0], hi[1]]).map_err(geo)?)),
            (DomainKind::Box, 3) => {
                AnyDomain::D3(Box::new(BoxDomain::new([lo[0], lo[1], lo[2]], [hi[0], hi[1], hi[2]]).map_err(geo)?))
            }
            (DomainKind::Polygon, 2) => match (&d.vertices, &d.file) {
                (Some(v), _) => AnyDomain::Poly(Polygon2D::new(v.iter().map(|c| Point(*c)).collect()).map_err(geo)?),
                (None, Some(f)) => AnyDomain::Poly(Polygon2D::from_csv(f).map_err(geo)?),
                (None, None) => return Err(invalid("domain: polygon needs vertices or a file")),
            },
            (DomainKind::Mesh, 3) => {
                let f = d.file.as_ref().ok_or_else(|| invalid("domain: mesh needs a file"))?;
                AnyDomain::D3(Box::new(TriMesh3D::load(f).map_err(geo)?))
            }
            _ => return Err(invalid("domain: not available in this dimension")),
        })
    }

    /// Seeds in dimension `D`; `"auto"` takes the bounding-box centre, which
    /// must lie inside the domain.
    pub fn seed_points<const D: usize>(&self, domain: &dyn Domain<D>) -> Result<Vec<Point<D>>, ConfigError> {
        match &self.seeds {
            SeedSpec::Auto => {
                let c = domain.bounding_box().center();
                if domain.contains(&c) {
                    Ok(vec![c])
                } else {
                    Err(invalid("seeds: the bounding-box centre is outside the domain; list seeds explicitly"))
                }
            }
            SeedSpec::Points(pts) => pts
                .iter()
                .map(|p| Point::from_slice(p).map_err(|e| invalid(format!("seeds: {e}"))))
                .collect(),
        }
    }
}

/// A configured domain of any supported kind and dimension. Planar domains
/// with a boundary curve are kept concrete so the solver can sample it.
pub enum AnyDomain {
    D1(Box<dyn Domain<1>>),
    D2(Box<dyn Domain<2>>),
    D3(Box<dyn Domain<3>>),
    Star2(StarPolar2D),
    Poly(Polygon2D),
}

impl AnyDomain {
    pub fn into_dim<const D: usize>(self) -> Option<Box<dyn Domain<D>>> {
        use std::any::Any;
        let boxed: Box<dyn Any> = match self {
            AnyDomain::D1(d) => Box::new(d),
            AnyDomain::D2(d) => Box::new(d),
            AnyDomain::D3(d) => Box::new(d),
            AnyDomain::Star2(s) => Box::new(Box::new(s) as Box<dyn Domain<2>>),
            AnyDomain::Poly(p) => Box::new(Box::new(p) as Box<dyn Domain<2>>),
        };
        boxed.downcast::<Box<dyn Domain<D>>>().ok().map(|b| *b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CLOVER: &str = r#"{
        "dim": 2,
        "domain": {"kind": "clover"},
        "spacing": {"kind": "preset", "name": "clover2d", "h_s": 0.02},
        "seeds": "auto",
        "rng_seed": 3
    }"#;

    #[test]
    fn parses_with_defaults() {
        let c = RunConfig::from_json(CLOVER, "c.json").unwrap();
        assert_eq!((c.n_c, c.threads, c.n_s, c.bootstrap), (12, 1, 1, true));
        let d = c.domain::<2>().unwrap();
        assert_eq!(c.seed_points(d.as_ref()).unwrap(), vec![Point([0.0, 0.0])]);
        assert!(c.spacing_fn().is_ok());
    }

    #[test]
    fn schema_errors_name_the_field() {
        let bad = CLOVER.replace("\"h_s\": 0.02", "\"h_s\": \"small\"");
        let e = RunConfig::from_json(&bad, "c.json").unwrap_err().to_string();
        assert!(e.contains("spacing.h_s"), "{e}");
        let bad = CLOVER.replace("\"rng_seed\": 3", "\"rng_sed\": 3");
        let e = RunConfig::from_json(&bad, "c.json").unwrap_err().to_string();
        assert!(e.contains("rng_sed"), "{e}");
        let bad = CLOVER.replace("\"auto\"", "\"middle\"");
        assert!(RunConfig::from_json(&bad, "c.json").unwrap_err().to_string().contains("seeds"));
        assert!(RunConfig::from_json("{", "c.json").is_err());
    }

    #[test]
    fn dimension_consistency() {
        let bad = CLOVER.replace("\"dim\": 2", "\"dim\": 3");
        assert!(RunConfig::from_json(&bad, "c.json").unwrap_err().to_string().contains("clover2d"));
        let bad = CLOVER.replace("\"auto\"", "[[0.0, 0.0, 0.0]]");
        assert!(RunConfig::from_json(&bad, "c.json").unwrap_err().to_string().contains("seeds[0]"));
        let poly = r#"{"dim": 3, "domain": {"kind": "polygon", "vertices": [[0,0],[1,0],[0,1]]},
                       "spacing": {"kind": "constant", "h_s": 0.1}}"#;
        assert!(RunConfig::from_json(poly, "c.json").is_err());
    }

    #[test]
    fn every_domain_kind_builds() {
        let cases = [
            (1, r#"{"kind": "box", "lo": [0], "hi": [1]}"#),
            (2, r#"{"kind": "box", "lo": [0, 0], "hi": [1, 2]}"#),
            (3, r#"{"kind": "box", "lo": [0, 0, 0], "hi": [1, 1, 1]}"#),
            (2, r#"{"kind": "polygon", "vertices": [[0,0],[2,0],[2,1],[1,1],[1,2],[0,2]]}"#),
            (3, r#"{"kind": "clover"}"#),
        ];
        for (dim, dom) in cases {
            let text = format!(r#"{{"dim": {dim}, "domain": {dom}, "spacing": {{"kind": "constant", "h_s": 0.1}}}}"#);
            let c = RunConfig::from_json(&text, "c.json").unwrap();
            assert!(c.any_domain().is_ok(), "{text}");
        }
    }
}
