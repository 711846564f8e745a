//! Binary PGM (P5) reading and writing, 8 and 16 bit.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::resample::Image;

/// Parses a P5 stream; samples are scaled to `[0, 1]`.
pub fn read_pgm<R: Read>(reader: R) -> Result<Image> {
    let mut r = BufReader::new(reader);
    let mut fields = Vec::new();
    while fields.len() < 4 {
        let token = next_token(&mut r)?;
        fields.push(token);
    }
    if fields[0] != "P5" {
        return Err(Error::Pgm(format!("unsupported magic '{}'", fields[0])));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| Error::Pgm(format!("bad header field '{s}'")));
    let (w, h, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Pgm(format!("max value {maxval} out of range")));
    }
    let bytes = if maxval < 256 { 1 } else { 2 };
    let mut raw = vec![0u8; w * h * bytes];
    r.read_exact(&mut raw).map_err(|e| Error::Pgm(format!("truncated pixel data: {e}")))?;
    let scale = maxval as f64;
    let data = if bytes == 1 {
        raw.iter().map(|&b| b as f64 / scale).collect()
    } else {
        raw.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / scale).collect()
    };
    Image::new(w, h, data)
}

/// Reads one header token, skipping whitespace and `#` comments. Consumes
/// exactly one whitespace byte after the token.
fn next_token<R: BufRead>(r: &mut R) -> Result<String> {
    let mut token = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte)? == 0 {
            return Err(Error::Pgm("unexpected end of header".into()));
        }
        match byte[0] {
            b'#' if token.is_empty() => {
                let mut line = Vec::new();
                r.read_until(b'\n', &mut line)?;
            }
            c if c.is_ascii_whitespace() => {
                if !token.is_empty() {
                    break;
                }
            }
            c => token.push(c),
        }
    }
    String::from_utf8(token).map_err(|_| Error::Pgm("non-ASCII header".into()))
}

/// Bit depth of a written PGM.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Depth {
    Eight,
    Sixteen,
}

impl Depth {
    fn maxval(self) -> u32 {
        match self {
            Depth::Eight => 255,
            Depth::Sixteen => 65535,
        }
    }
}

/// Writes `image` clamped to `[0, 1]` and rounded to the nearest level.
pub fn write_pgm<W: Write>(mut w: W, image: &Image, depth: Depth) -> Result<()> {
    let maxval = depth.maxval();
    write!(w, "P5\n{} {}\n{}\n", image.width(), image.height(), maxval)?;
    let level = |v: f64| (v.clamp(0.0, 1.0) * maxval as f64).round() as u32;
    let mut buf = Vec::with_capacity(image.data().len() * 2);
    for &v in image.data() {
        match depth {
            Depth::Eight => buf.push(level(v) as u8),
            Depth::Sixteen => buf.extend_from_slice(&(level(v) as u16).to_be_bytes()),
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn load_pgm(path: &Path) -> Result<Image> {
    read_pgm(std::fs::File::open(path)?)
}

pub fn save_pgm(path: &Path, image: &Image, depth: Depth) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_pgm(&mut f, image, depth)?;
    f.flush()?;
    Ok(())
}
