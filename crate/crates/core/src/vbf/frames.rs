use std::io::{self, BufRead, Write};

use super::{Frame, VbfError, DEFAULT_PAYLOAD_BITS};
use crate::geometry::Vec2;
use crate::geomworld::Pose;
use crate::output::fmt_f64;

const HEADER: &str = "id,x,y,theta,score,payload_bits,slot_s";

pub fn write_frames_csv<W: Write>(frames: &[Frame], mut w: W) -> io::Result<()> {
    writeln!(w, "{HEADER}")?;
    for f in frames {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            f.id,
            fmt_f64(f.pose.position.x),
            fmt_f64(f.pose.position.y),
            fmt_f64(f.pose.heading),
            fmt_f64(f.score),
            fmt_f64(f.payload_bits),
            fmt_f64(f.slot_duration)
        )?;
    }
    Ok(())
}

/// Reads frames; `payload_bits` and `slot_s` columns are optional.
pub fn read_frames_csv<R: BufRead>(r: R) -> Result<Vec<Frame>, VbfError> {
    let bad = |line: usize, msg: &str| VbfError::InvalidProblem(format!("frames csv line {line}: {msg}"));
    let mut lines = r.lines();
    let header = match lines.next() {
        Some(h) => h.map_err(|e| bad(1, &e.to_string()))?,
        None => return Err(bad(1, "empty file")),
    };
    let cols: Vec<&str> = header.trim().split(',').map(str::trim).collect();
    let col = |name: &str| cols.iter().position(|c| *c == name);
    let need = |name: &str| col(name).ok_or_else(|| bad(1, &format!("missing column '{name}'")));
    let (ci, cx, cy, ct, cs) = (need("id")?, need("x")?, need("y")?, need("theta")?, need("score")?);
    let (cp, cd) = (col("payload_bits"), col("slot_s"));

    let mut out = Vec::new();
    for (k, line) in lines.enumerate() {
        let n = k + 2;
        let line = line.map_err(|e| bad(n, &e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let num = |c: usize| -> Result<f64, VbfError> {
            fields.get(c).ok_or_else(|| bad(n, "too few fields"))?.parse::<f64>().map_err(|e| bad(n, &e.to_string()))
        };
        let id = fields.get(ci).ok_or_else(|| bad(n, "too few fields"))?.parse::<u32>().map_err(|e| bad(n, &e.to_string()))?;
        out.push(Frame {
            id,
            pose: Pose::new(Vec2::new(num(cx)?, num(cy)?), num(ct)?),
            score: num(cs)?,
            payload_bits: cp.map(num).transpose()?.unwrap_or(DEFAULT_PAYLOAD_BITS),
            slot_duration: cd.map(num).transpose()?.unwrap_or(1.0),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let frames = vec![
            Frame::new(0, Pose::new(Vec2::new(1.77, -0.3), 0.25), 0.5),
            Frame { payload_bits: 1e6, slot_duration: 0.5, ..Frame::new(7, Pose::new(Vec2::new(-2.0, 3.0), -1.0), 0.125) },
        ];
        let mut buf = Vec::new();
        write_frames_csv(&frames, &mut buf).unwrap();
        assert_eq!(read_frames_csv(buf.as_slice()).unwrap(), frames);
    }

    #[test]
    fn optional_columns_default() {
        let text = "theta,id,y,x,score\n0.0,3,2.0,1.0,0.4\n";
        let f = read_frames_csv(text.as_bytes()).unwrap();
        assert_eq!(f[0].id, 3);
        assert_eq!(f[0].pose.position, Vec2::new(1.0, 2.0));
        assert_eq!(f[0].payload_bits, DEFAULT_PAYLOAD_BITS);
    }

    #[test]
    fn malformed_rejected() {
        assert!(read_frames_csv("id,x,y,theta\n".as_bytes()).is_err());
        assert!(read_frames_csv("id,x,y,theta,score\n1,2,x,0,1\n".as_bytes()).is_err());
    }
}
