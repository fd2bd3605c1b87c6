//! 8-bit PGM images of fields on the render grid.

use crate::{Error, Result};

/// Side of the square render grid over `[-1, 1]^2`.
pub const RENDER_SIZE: usize = 128;

/// Binary P5 image. `values` is row-major with row 0 at the top.
/// Values map linearly from `range` onto `0..=255`, rounding half up and
/// clipping outside the range; a degenerate range gives mid-gray.
pub fn render_field_pgm(values: &[f64], width: usize, height: usize, range: (f64, f64)) -> Result<Vec<u8>> {
    if values.len() != width * height {
        return Err(Error::DimensionMismatch(format!("{} values for a {width}x{height} image", values.len())));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("cannot render a non-finite field"));
    }
    let (lo, hi) = range;
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(values.iter().map(|&v| {
        if !(hi > lo) {
            return 128;
        }
        let t = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
        (t * 255.0 + 0.5).floor() as u8
    }));
    Ok(out)
}

/// `(width, height, pixels)` of a P5 image written by [`render_field_pgm`].
pub fn parse_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::parse("truncated PGM header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| Error::parse("PGM header is not ASCII"))?);
    }
    if fields[0] != "P5" || fields[3] != "255" {
        return Err(Error::parse("expected an 8-bit P5 image"));
    }
    let w: usize = fields[1].parse().map_err(|_| Error::parse("bad PGM width"))?;
    let h: usize = fields[2].parse().map_err(|_| Error::parse("bad PGM height"))?;
    let pixels = &bytes[pos + 1..];
    if pixels.len() != w * h {
        return Err(Error::parse(format!("{} pixels for a {w}x{h} image", pixels.len())));
    }
    Ok((w, h, pixels.to_vec()))
}
