//! File formats: instance and problem JSON in, JSON and CSV out.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sobolev2d::{Config, Point2, Square};

use crate::CliError;

/// `{"points": [[x, y], ...], "values": [...], "p": 4.0}`; `p` is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub points: Vec<[f64; 2]>,
    #[serde(default)]
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

impl Instance {
    pub fn points(&self) -> Vec<Point2> {
        self.points
            .iter()
            .map(|&[x, y]| Point2::new(x, y))
            .collect()
    }

    /// Values, checked against the point count.
    pub fn values(&self) -> Result<&[f64], CliError> {
        if self.values.len() != self.points.len() {
            return Err(CliError::input(format!(
                "field `values`: {} entries for {} points",
                self.values.len(),
                self.points.len()
            )));
        }
        Ok(&self.values)
    }

    /// Square centred on the bounding box of the points with 1.5 times its
    /// larger extent as side (side 2 for a single point or none).
    pub fn default_box(&self) -> Square {
        let pts = self.points();
        if pts.is_empty() {
            return Square::new(Point2::ORIGIN, 2.0);
        }
        let (mut lo, mut hi) = (pts[0], pts[0]);
        for x in &pts {
            lo = Point2::new(lo.x.min(x.x), lo.y.min(x.y));
            hi = Point2::new(hi.x.max(x.x), hi.y.max(x.y));
        }
        let extent = (hi.x - lo.x).max(hi.y - lo.y);
        let side = if extent > 0.0 { 1.5 * extent } else { 2.0 };
        Square::new(Point2::new(0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y)), side)
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// Defaults, overridden by the config file if one is given.
pub fn load_config(path: Option<&PathBuf>) -> Result<Config, CliError> {
    match path {
        Some(p) => read_json(p),
        None => Ok(Config::default()),
    }
}

/// Pretty JSON to `out` or stdout, newline terminated.
pub fn emit_json<T: Serialize>(value: &T, out: Option<&PathBuf>) -> Result<(), CliError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    emit_text(&text, out)
}

pub fn emit_text(text: &str, out: Option<&PathBuf>) -> Result<(), CliError> {
    match out {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| CliError::input(format!("{}: {e}", p.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// A float at 17 significant digits.
pub fn f17(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV with a header row; every number at 17 significant digits.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(f17).collect();
        let _ = writeln!(s, "{}", cells.join(","));
    }
    s
}

/// Node `(i, j)` of an `n x n` grid spanning `q`, row-major in `j`.
pub fn grid_nodes(q: &Square, n: usize) -> Vec<Point2> {
    let lo = q.lower();
    let h = if n > 1 { q.side / (n - 1) as f64 } else { 0.0 };
    (0..n)
        .flat_map(|j| (0..n).map(move |i| Point2::new(lo.x + i as f64 * h, lo.y + j as f64 * h)))
        .collect()
}

/// Parse `"x,y"`.
pub fn parse_point(s: &str) -> Result<Point2, String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected x,y, got {s:?}"))?;
    let x = a.trim().parse::<f64>().map_err(|e| format!("{a:?}: {e}"))?;
    let y = b.trim().parse::<f64>().map_err(|e| format!("{b:?}: {e}"))?;
    Ok(Point2::new(x, y))
}

/// Parse `"cx,cy,side"`.
pub fn parse_box(s: &str) -> Result<Square, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected cx,cy,side, got {s:?}"));
    }
    let v: Vec<f64> = parts
        .iter()
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    if !v[2].is_finite() || v[2] <= 0.0 {
        return Err("box side must be positive".into());
    }
    Ok(Square::new(Point2::new(v[0], v[1]), v[2]))
}
