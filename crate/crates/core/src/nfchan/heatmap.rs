use std::io::{self, BufRead, Write};

use super::{beam_gain, los_channel_near, ArrayGeometry, BeamVector, NfError, PathlossModel};
use crate::geometry::{Rect, Vec2};
use crate::output::fmt_f64;

/// Written in place of `-inf` dB (zero gain).
pub const HEATMAP_NEG_INF_SENTINEL: f64 = -999.0;

/// Spatial beam-gain map in dB, row-major with row 0 at `origin.y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    /// Lower-left corner of the region.
    pub origin: Vec2,
    pub dx: f64,
    pub dy: f64,
    pub nx: usize,
    pub ny: usize,
    pub values_db: Vec<f64>,
}

impl Heatmap {
    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values_db[j * self.nx + i]
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(self.origin.x + (i as f64 + 0.5) * self.dx, self.origin.y + (j as f64 + 0.5) * self.dy)
    }

    /// Index of the cell containing `p`, if inside the region.
    pub fn cell_of(&self, p: Vec2) -> Option<(usize, usize)> {
        let fi = ((p.x - self.origin.x) / self.dx).floor();
        let fj = ((p.y - self.origin.y) / self.dy).floor();
        (fi >= 0.0 && fj >= 0.0 && (fi as usize) < self.nx && (fj as usize) < self.ny).then(|| (fi as usize, fj as usize))
    }

    /// Cell with the largest value; first in row-major order on ties.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (k, v) in self.values_db.iter().enumerate() {
            if *v > self.values_db[best] {
                best = k;
            }
        }
        (best % self.nx, best / self.nx)
    }

    pub fn max_db(&self) -> f64 {
        self.values_db.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Write the plain-text format: a `# x0 y0 dx dy nx ny` header, then `ny`
    /// rows of `nx` values.
    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "# {} {} {} {} {} {}",
            fmt_f64(self.origin.x),
            fmt_f64(self.origin.y),
            fmt_f64(self.dx),
            fmt_f64(self.dy),
            self.nx,
            self.ny
        )?;
        let mut line = String::new();
        for j in 0..self.ny {
            line.clear();
            for i in 0..self.nx {
                if i > 0 {
                    line.push(' ');
                }
                let v = self.value(i, j);
                let v = if v == f64::NEG_INFINITY { HEATMAP_NEG_INF_SENTINEL } else { v };
                line.push_str(&fmt_f64(v));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> io::Result<Self> {
        let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| bad("empty heatmap"))??;
        let fields: Vec<&str> = header.trim_start_matches('#').split_whitespace().collect();
        if fields.len() != 6 {
            return Err(bad("header must have 6 fields"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad("bad header number"));
        let origin = Vec2::new(num(fields[0])?, num(fields[1])?);
        let (dx, dy) = (num(fields[2])?, num(fields[3])?);
        let nx: usize = fields[4].parse().map_err(|_| bad("bad nx"))?;
        let ny: usize = fields[5].parse().map_err(|_| bad("bad ny"))?;
        let mut values_db = Vec::with_capacity(nx * ny);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            for tok in line.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| bad("bad value"))?;
                values_db.push(if v == HEATMAP_NEG_INF_SENTINEL { f64::NEG_INFINITY } else { v });
            }
        }
        if values_db.len() != nx * ny {
            return Err(bad("value count does not match header"));
        }
        Ok(Self { origin, dx, dy, nx, ny, values_db })
    }
}

/// Beam gain `10 log10 |h(cell)^T w|^2` over a grid of cell centers, with the
/// exact near-field channel at every cell.
pub fn gain_heatmap(
    geom: &ArrayGeometry,
    beam: &BeamVector,
    region: Rect,
    resolution: f64,
    pl: &PathlossModel,
) -> Result<Heatmap, NfError> {
    if region.is_degenerate() {
        return Err(NfError::DegenerateRegion);
    }
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(NfError::InvalidParameter("resolution must be positive".into()));
    }
    if beam.len() != geom.num_elements() {
        return Err(NfError::DimensionMismatch { channel: geom.num_elements(), beam: beam.len() });
    }
    let nx = ((region.width() / resolution).round() as usize).max(1);
    let ny = ((region.height() / resolution).round() as usize).max(1);
    let mut map = Heatmap {
        origin: region.min,
        dx: region.width() / nx as f64,
        dy: region.height() / ny as f64,
        nx,
        ny,
        values_db: Vec::with_capacity(nx * ny),
    };
    let silent = beam.weights.iter().all(|w| w.norm_sqr() == 0.0);
    for j in 0..ny {
        for i in 0..nx {
            if silent {
                map.values_db.push(f64::NEG_INFINITY);
                continue;
            }
            let ch = los_channel_near(geom, map.cell_center(i, j), pl)?;
            let g = beam_gain(&ch, beam)?;
            map.values_db.push(10.0 * g.log10());
        }
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nfchan::mrt_beam;

    fn setup() -> (ArrayGeometry, PathlossModel) {
        let g = ArrayGeometry::ula(64, 30e9, Vec2::ZERO, Vec2::new(0.0, 1.0)).unwrap();
        let pl = PathlossModel::free_space(g.wavelength(), 2.0).unwrap();
        (g, pl)
    }

    #[test]
    fn argmax_contains_focal_point() {
        // distance-independent loss: the Cauchy-Schwarz bound is flat, so the peak is the focus
        let (g, _) = setup();
        let pl = PathlossModel::new(1.0, 0.0).unwrap();
        // on a cell centre, where the gain reaches N^2 exactly
        let focus = Vec2::new(0.805, 0.105);
        let w = mrt_beam(&los_channel_near(&g, focus, &pl).unwrap()).unwrap();
        let region = Rect::new(Vec2::new(0.5, -0.3), Vec2::new(1.1, 0.3));
        let map = gain_heatmap(&g, &w, region, 0.01, &pl).unwrap();
        let (i, j) = map.argmax();
        let (fi, fj) = map.cell_of(focus).unwrap();
        assert!(i.abs_diff(fi) <= 1 && j.abs_diff(fj) <= 1, "argmax ({i},{j}) focus ({fi},{fj})");
    }

    #[test]
    fn null_beam_is_uniform_neg_inf() {
        let (g, pl) = setup();
        let region = Rect::new(Vec2::new(1.0, -1.0), Vec2::new(2.0, 1.0));
        let map = gain_heatmap(&g, &BeamVector::zeros(64), region, 0.25, &pl).unwrap();
        assert!(map.values_db.iter().all(|v| *v == f64::NEG_INFINITY));
        let mut buf = Vec::new();
        map.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("-9.99000000000e2"));
        let back = Heatmap::read_from(text.as_bytes()).unwrap();
        assert_eq!(back, map);
    }

    #[test]
    fn degenerate_region_rejected() {
        let (g, pl) = setup();
        let w = BeamVector::zeros(64);
        let flat = Rect::new(Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0));
        assert_eq!(gain_heatmap(&g, &w, flat, 0.1, &pl), Err(NfError::DegenerateRegion));
        let ok = Rect::new(Vec2::new(1.0, 0.0), Vec2::new(2.0, 1.0));
        assert!(gain_heatmap(&g, &w, ok, 0.0, &pl).is_err());
    }

    #[test]
    fn header_records_origin_and_spacing() {
        let (g, pl) = setup();
        let w = mrt_beam(&los_channel_near(&g, Vec2::new(1.0, 0.0), &pl).unwrap()).unwrap();
        let region = Rect::new(Vec2::new(0.5, -0.5), Vec2::new(1.5, 0.5));
        let map = gain_heatmap(&g, &w, region, 0.25, &pl).unwrap();
        let mut buf = Vec::new();
        map.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "# 5.00000000000e-1 -5.00000000000e-1 2.50000000000e-1 2.50000000000e-1 4 4"
        );
        assert_eq!(lines.count(), 4);
    }
}
