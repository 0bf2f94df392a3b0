//! Reading and writing point sets and reports.
//!
//! Points files are CSV with the header `x,y[,z],thread,cell,order`, one row
//! per point in insertion order. Coordinates use 17 significant digits, so
//! they read back bit for bit. A path ending in `.gz` is gzip-compressed.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::Serialize;

use crate::fill::{PlacedPoint, PointSet};
use crate::geometry::Point;
use crate::quality::Histogram;

const AXES: [&str; 3] = ["x", "y", "z"];
const PROVENANCE: [&str; 3] = ["thread", "cell", "order"];

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("file holds {found}-D points, expected {expected}-D")]
    Dimension { expected: usize, found: usize },
    #[error("empty points file")]
    Empty,
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn is_gz(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io { path: path.display().to_string(), source }
}

/// Opens `path` for writing, through a gzip encoder when it ends in `.gz`.
pub fn create(path: &Path) -> Result<Box<dyn Write>, IoError> {
    let f = BufWriter::new(File::create(path).map_err(io_err(path))?);
    Ok(if is_gz(path) { Box::new(GzEncoder::new(f, Compression::default())) } else { Box::new(f) })
}

/// Opens `path` for reading, decompressing when it ends in `.gz`.
pub fn open(path: &Path) -> Result<Box<dyn BufRead>, IoError> {
    let f = File::open(path).map_err(io_err(path))?;
    Ok(if is_gz(path) { Box::new(BufReader::new(GzDecoder::new(f))) } else { Box::new(BufReader::new(f)) })
}

/// Header line of a `D`-dimensional points file, without the newline.
pub fn points_header(dim: usize) -> String {
    AXES[..dim].iter().chain(&PROVENANCE).copied().collect::<Vec<_>>().join(",")
}

/// Writes `points` as CSV, sorted by insertion order.
pub fn write_points_to<const D: usize, W: Write>(points: &[PlacedPoint<D>], mut w: W) -> std::io::Result<()> {
    let mut sorted: Vec<&PlacedPoint<D>> = points.iter().collect();
    sorted.sort_by_key(|p| p.order);
    writeln!(w, "{}", points_header(D))?;
    for p in sorted {
        for c in p.pos.0 {
            write!(w, "{c:.16e},")?;
        }
        writeln!(w, "{},{},{}", p.thread, p.cell, p.order)?;
    }
    w.flush()
}

pub fn write_points<const D: usize>(set: &PointSet<D>, path: &Path) -> Result<(), IoError> {
    let w = create(path)?;
    write_points_to(&set.points, w).map_err(io_err(path))
}

/// Parses a points CSV of dimension `D`. Seeds and statistics are not
/// stored in the file and come back empty.
pub fn read_points_from<const D: usize, R: BufRead>(r: R) -> Result<PointSet<D>, IoError> {
    let mut lines = r.lines();
    let header = match lines.next() {
        None => return Err(IoError::Empty),
        Some(h) => h.map_err(|e| IoError::Malformed { line: 1, msg: e.to_string() })?,
    };
    let cols: Vec<&str> = header.trim_end_matches('\r').split(',').collect();
    let found = cols.len().saturating_sub(PROVENANCE.len());
    if !(1..=3).contains(&found) || header.trim_end_matches('\r') != points_header(found) {
        return Err(IoError::Malformed { line: 1, msg: format!("unexpected header {header:?}") });
    }
    if found != D {
        return Err(IoError::Dimension { expected: D, found });
    }

    let mut points = Vec::new();
    for (k, line) in lines.enumerate() {
        let line_no = k + 2;
        let bad = |msg: String| IoError::Malformed { line: line_no, msg };
        let line = line.map_err(|e| bad(e.to_string()))?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != D + 3 {
            return Err(bad(format!("expected {} columns, got {}", D + 3, fields.len())));
        }
        let mut pos = [0.0; D];
        for (i, c) in pos.iter_mut().enumerate() {
            *c = fields[i].parse().map_err(|_| bad(format!("bad {} value {:?}", AXES[i], fields[i])))?;
        }
        let int = |i: usize| -> Result<u64, IoError> {
            fields[D + i].parse().map_err(|_| bad(format!("bad {} value {:?}", PROVENANCE[i], fields[D + i])))
        };
        let thread = u32::try_from(int(0)?).map_err(|_| bad("thread out of range".into()))?;
        let cell = u32::try_from(int(1)?).map_err(|_| bad("cell out of range".into()))?;
        points.push(PlacedPoint { pos: Point(pos), thread, cell, order: int(2)? });
    }
    points.sort_by_key(|p| p.order);
    Ok(PointSet { points, ..PointSet::default() })
}

pub fn read_points<const D: usize>(path: &Path) -> Result<PointSet<D>, IoError> {
    read_points_from(open(path)?)
}

/// Dimension recorded in a points file header.
pub fn points_dim(path: &Path) -> Result<usize, IoError> {
    let mut header = String::new();
    open(path)?.read_line(&mut header).map_err(io_err(path))?;
    if header.is_empty() {
        return Err(IoError::Empty);
    }
    let n = header.trim_end().split(',').count().saturating_sub(PROVENANCE.len());
    if (1..=3).contains(&n) {
        Ok(n)
    } else {
        Err(IoError::Malformed { line: 1, msg: format!("unexpected header {:?}", header.trim_end()) })
    }
}

/// Histogram as CSV with columns `center,count`.
pub fn histogram_csv(h: &Histogram) -> String {
    let mut s = String::from("center,count\n");
    for (w, c) in h.edges.windows(2).zip(&h.counts) {
        s.push_str(&format!("{:.16e},{c}\n", 0.5 * (w[0] + w[1])));
    }
    s
}

/// Nodal solution as CSV with columns `x,y,u`.
pub fn solution_csv(nodes: &[Point<2>], u: &[f64]) -> String {
    let mut s = String::from("x,y,u\n");
    for (p, v) in nodes.iter().zip(u) {
        s.push_str(&format!("{:.16e},{:.16e},{v:.16e}\n", p.0[0], p.0[1]));
    }
    s
}

/// Writes `text` to `path`, compressing when it ends in `.gz`.
pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(io_err(path))
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    let mut s = String::new();
    open(path)?.read_to_string(&mut s).map_err(io_err(path))?;
    Ok(s)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_set<const D: usize>(n: usize, seed: u64) -> PointSet<D> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (0..n)
            .map(|k| {
                let pos = Point(std::array::from_fn(|_| {
                    let m: f64 = rng.random_range(-1.0..1.0);
                    m * 10f64.powi(rng.random_range(-300..300))
                }));
                PlacedPoint { pos, thread: rng.random_range(0..16), cell: rng.random_range(0..100), order: k as u64 }
            })
            .collect();
        PointSet { points, ..PointSet::default() }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["p.csv", "p.csv.gz"] {
            let path = dir.path().join(name);
            let set = random_set::<2>(100_000, 1);
            write_points(&set, &path).unwrap();
            let back = read_points::<2>(&path).unwrap();
            assert_eq!(back.points.len(), set.points.len());
            for (a, b) in set.points.iter().zip(&back.points) {
                assert_eq!(a.pos.0.map(f64::to_bits), b.pos.0.map(f64::to_bits));
                assert_eq!((a.thread, a.cell, a.order), (b.thread, b.cell, b.order));
            }
        }
    }

    #[test]
    fn header_and_sorting() {
        let mut set = random_set::<3>(5, 2);
        set.points.reverse();
        let mut buf = Vec::new();
        write_points_to(&set.points, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,y,z,thread,cell,order\n"));
        assert!(!text.contains('\r'));
        let orders: Vec<&str> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
        assert_eq!(orders, vec!["0", "1", "2", "3", "4"]);
        assert_eq!(points_header(2), "x,y,thread,cell,order");
    }

    #[test]
    fn malformed_rows_report_their_line() {
        let text = "x,y,thread,cell,order\n1.0,2.0,0,0,0\n1.0,2.0,0,0\n";
        match read_points_from::<2, _>(text.as_bytes()) {
            Err(IoError::Malformed { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let text = "x,y,thread,cell,order\n1.0,abc,0,0,0\n";
        assert!(matches!(read_points_from::<2, _>(text.as_bytes()), Err(IoError::Malformed { line: 2, .. })));
        let text = "x,y,z,thread,cell,order\n";
        assert!(matches!(read_points_from::<2, _>(text.as_bytes()), Err(IoError::Dimension { expected: 2, found: 3 })));
        assert!(matches!(read_points_from::<2, _>("".as_bytes()), Err(IoError::Empty)));
        assert!(matches!(read_points_from::<2, _>("a,b\n".as_bytes()), Err(IoError::Malformed { line: 1, .. })));
    }

    #[test]
    fn side_files() {
        let h = Histogram { edges: vec![0.0, 0.5, 1.0], counts: vec![3, 4] };
        assert_eq!(histogram_csv(&h).lines().count(), 3);
        assert_eq!(histogram_csv(&h), "center,count\n2.5000000000000000e-1,3\n7.5000000000000000e-1,4\n");
        let s = solution_csv(&[Point([1.0, 2.0])], &[3.0]);
        assert_eq!(s, "x,y,u\n1.0000000000000000e0,2.0000000000000000e0,3.0000000000000000e0\n");
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.json.gz");
        write_json(&p, &h).unwrap();
        assert!(read_text(&p).unwrap().contains("\"counts\""));
        let q = dir.path().join("pts.csv");
        write_points(&random_set::<3>(3, 4), &q).unwrap();
        assert_eq!(points_dim(&q).unwrap(), 3);
    }
}
