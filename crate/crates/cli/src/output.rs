//! Number formatting, CSV/JSON writers and the SVG renderer.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use orbitflag::hull::Membership;
use orbitflag::simplex::ProjectionMap;
use orbitflag::slc::SlcRegion;
use orbitflag::RVector;

use crate::CliError;

/// Shortest round-trip decimal; scientific outside `[1e-5, 1e16)`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 {
        "0".to_string()
    } else if !x.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub struct Table {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl Table {
    pub fn create(dir: &Path, name: &str, header: &[String]) -> Result<Self, CliError> {
        let path = dir.join(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut writer =
            csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(BufWriter::new(file));
        writer.write_record(header).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
        Ok(Self { path, writer })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<(), CliError> {
        self.writer.write_record(fields).map_err(|e| CliError::Output(format!("{}: {e}", self.path.display())))
    }

    pub fn finish(mut self) -> Result<PathBuf, CliError> {
        self.writer.flush().map_err(|e| CliError::io(&self.path, e))?;
        Ok(self.path)
    }
}

pub fn numbered(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|i| format!("{prefix}_{i}")).collect()
}

pub fn values(v: impl IntoIterator<Item = f64>) -> Vec<String> {
    v.into_iter().map(fmt_f64).collect()
}

pub fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

/// Finite floats pass through; others become strings so the JSON stays valid.
pub fn json_f64(x: f64) -> serde_json::Value {
    serde_json::Number::from_f64(x).map_or_else(|| serde_json::Value::String(format!("{x}")), serde_json::Value::Number)
}

pub fn json_vec(v: &RVector) -> serde_json::Value {
    serde_json::Value::Array(v.iter().map(|&x| json_f64(x)).collect())
}

const SIZE: f64 = 640.0;
const SCALE: f64 = 360.0;

/// Viewport coordinates: `x_1` to the right, `x_2` up, centred on the mixed state.
fn to_view(x: &RVector) -> (f64, f64) {
    (SIZE / 2.0 + SCALE * x[0], SIZE / 2.0 + 40.0 - SCALE * x[1])
}

fn polyline(points: impl Iterator<Item = (f64, f64)>) -> String {
    points.map(|(a, b)| format!("{a:.3},{b:.3}")).collect::<Vec<_>>().join(" ")
}

/// Closed simplex, Weyl-chamber walls with the ordered chamber shaded, grid
/// classification as cells, and boundary candidates as polylines.
pub fn render_svg(region: &SlcRegion, map: &ProjectionMap) -> String {
    let lift = |l: [f64; 3]| to_view(&map.apply(&RVector::from_column_slice(&l)));
    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n"
    ));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let third = 1.0 / 3.0;
    let chamber = [lift([1.0, 0.0, 0.0]), lift([0.5, 0.5, 0.0]), lift([third, third, third])];
    s.push_str(&format!("<polygon points=\"{}\" fill=\"#d0d0d0\" stroke=\"none\"/>\n", polyline(chamber.into_iter())));
    let cell = SCALE / region.resolution as f64 * 0.9;
    for g in &region.grid {
        let colour = match g.class {
            Membership::Interior => "#3060a0",
            Membership::Boundary => "#e08020",
            Membership::Exterior => continue,
        };
        let (a, b) = to_view(&g.x);
        s.push_str(&format!(
            "<rect x=\"{:.3}\" y=\"{:.3}\" width=\"{cell:.3}\" height=\"{cell:.3}\" fill=\"{colour}\" fill-opacity=\"0.6\"/>\n",
            a - cell / 2.0,
            b - cell / 2.0
        ));
    }
    let corners = [lift([1.0, 0.0, 0.0]), lift([0.0, 1.0, 0.0]), lift([0.0, 0.0, 1.0])];
    s.push_str(&format!(
        "<polygon points=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>\n",
        polyline(corners.into_iter())
    ));
    for (vertex, mid) in
        [([1.0, 0.0, 0.0], [0.0, 0.5, 0.5]), ([0.0, 1.0, 0.0], [0.5, 0.0, 0.5]), ([0.0, 0.0, 1.0], [0.5, 0.5, 0.0])]
    {
        s.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#808080\" stroke-dasharray=\"4 3\"/>\n",
            polyline([lift(vertex), lift(mid)].into_iter())
        ));
    }
    for c in &region.candidates {
        if c.samples.is_empty() {
            continue;
        }
        s.push_str(&format!(
            "<polyline data-subset=\"{}\" points=\"{}\" fill=\"none\" stroke=\"#b02020\" stroke-width=\"0.8\"/>\n",
            c.id,
            polyline(c.samples.iter().map(|p| to_view(&p.x)))
        ));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format() {
        assert_eq!(fmt_f64(0.0), "0");
        assert_eq!(fmt_f64(0.1), "0.1");
        assert_eq!(fmt_f64(-2.5), "-2.5");
        assert_eq!(fmt_f64(1e-7), "1e-7");
        assert_eq!(fmt_f64(1.0 / 3.0), "0.3333333333333333");
        assert_eq!(fmt_f64(3e20), "3e20");
        let x = 0.1 + 0.2;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }
}
