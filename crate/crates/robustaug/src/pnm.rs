//! Binary PGM (`P5`) and PPM (`P6`) with 8-bit samples.

use std::fs;
use std::path::Path;

use robustaug_core::Image;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PnmError {
    #[error("not a binary PGM/PPM file (magic {0:?})")]
    BadMagic(String),
    #[error("malformed header: {0}")]
    BadHeader(String),
    #[error("maxval {0} is not supported, only 255")]
    UnsupportedMaxval(u32),
    #[error("pixel data truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
}

/// `P5` for one channel, `P6` for three. Samples are quantized to 8 bits.
pub fn encode(image: &Image) -> Vec<u8> {
    encode_commented(image, &[])
}

/// [`encode`] with `#` comment lines after the magic number. Comments must
/// not contain line breaks.
pub fn encode_commented(image: &Image, comments: &[String]) -> Vec<u8> {
    let magic = if image.channels() == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n").into_bytes();
    for c in comments {
        out.extend(format!("# {c}\n").bytes());
    }
    out.extend(format!("{} {}\n255\n", image.width(), image.height()).bytes());
    out.extend(image.to_u8());
    out
}

pub fn decode(bytes: &[u8]) -> std::result::Result<Image, PnmError> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur.token()?;
    let channels = match magic.as_str() {
        "P5" => 1,
        "P6" => 3,
        _ => return Err(PnmError::BadMagic(magic)),
    };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if maxval != 255 {
        return Err(PnmError::UnsupportedMaxval(maxval));
    }
    if width == 0 || height == 0 {
        return Err(PnmError::BadHeader("zero width or height".into()));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(PnmError::BadHeader("no whitespace after maxval".into())),
    }
    let data = &bytes[cur.pos..];
    let expected = width as usize * height as usize * channels;
    if data.len() < expected {
        return Err(PnmError::Truncated { expected, found: data.len() });
    }
    if data.len() > expected {
        return Err(PnmError::BadHeader(format!("{} bytes after the raster", data.len() - expected)));
    }
    Image::from_u8(width as usize, height as usize, channels, data).map_err(|e| PnmError::BadHeader(e.to_string()))
}

pub fn read(path: &Path) -> Result<Image> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|source| Error::Pnm { path: path.into(), source })
}

pub fn write(path: &Path, image: &Image, comments: &[String]) -> Result<()> {
    fs::write(path, encode_commented(image, comments)).map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    /// Next whitespace-delimited header token, skipping `#` comments.
    fn token(&mut self) -> std::result::Result<String, PnmError> {
        loop {
            match self.bytes.get(self.pos) {
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(b'#') => {
                    while self.bytes.get(self.pos).is_some_and(|&b| b != b'\n') {
                        self.pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(PnmError::BadHeader("header ends early".into())),
            }
        }
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(|b| !b.is_ascii_whitespace()) {
            self.pos += 1;
        }
        Ok(String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned())
    }

    fn number(&mut self, what: &str) -> std::result::Result<u32, PnmError> {
        let t = self.token()?;
        t.parse().map_err(|_| PnmError::BadHeader(format!("{what} {t:?} is not a number")))
    }
}
