//! Netpbm graymap/pixmap reading (P2, P3, P5, P6) and P5 writing.
//! https://netpbm.sourceforge.net/doc/pgm.html

use std::fmt;

use thiserror::Error;

use super::Image;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PnmErrorKind {
    BadMagic,
    UnexpectedEof,
    BadNumber,
    ZeroDimension,
    MaxvalOutOfRange(u32),
    SampleExceedsMaxval { sample: u32, maxval: u32 },
    MissingSeparator,
    Truncated { expected: usize, found: usize },
}

impl fmt::Display for PnmErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::BadMagic => write!(f, "expected magic P2, P3, P5 or P6"),
            Self::UnexpectedEof => write!(f, "unexpected end of header"),
            Self::BadNumber => write!(f, "expected a decimal number"),
            Self::ZeroDimension => write!(f, "width and height must be positive"),
            Self::MaxvalOutOfRange(m) => write!(f, "maxval {m} outside 1..=255"),
            Self::SampleExceedsMaxval { sample, maxval } => {
                write!(f, "sample {sample} exceeds maxval {maxval}")
            }
            Self::MissingSeparator => write!(f, "missing whitespace after header"),
            Self::Truncated { expected, found } => {
                write!(
                    f,
                    "pixel data truncated: expected {expected} bytes, found {found}"
                )
            }
        }
    }
}

/// Parse failure, located by byte offset into the input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("PNM parse error at byte {offset}: {kind}")]
pub struct PnmError {
    pub offset: usize,
    pub kind: PnmErrorKind,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Format {
    GrayAscii,
    ColorAscii,
    GrayBinary,
    ColorBinary,
}

impl Format {
    fn channels(self) -> usize {
        match self {
            Format::GrayAscii | Format::GrayBinary => 1,
            Format::ColorAscii | Format::ColorBinary => 3,
        }
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, kind: PnmErrorKind) -> PnmError {
        PnmError {
            offset: self.pos,
            kind,
        }
    }

    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self) -> Result<u32, PnmError> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        if start >= self.bytes.len() {
            return Err(self.err(PnmErrorKind::UnexpectedEof));
        }
        let mut value: u32 = 0;
        while let Some(&b) = self.bytes.get(self.pos) {
            if !b.is_ascii_digit() {
                break;
            }
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add(u32::from(b - b'0')))
                .ok_or(PnmError {
                    offset: start,
                    kind: PnmErrorKind::BadNumber,
                })?;
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err(PnmErrorKind::BadNumber));
        }
        Ok(value)
    }
}

/// 8-bit luma, `round(0.299 R + 0.587 G + 0.114 B)` with halves rounded up.
pub(crate) fn luma(r: u8, g: u8, b: u8) -> u8 {
    let weighted = 299 * u32::from(r) + 587 * u32::from(g) + 114 * u32::from(b);
    ((weighted + 500) / 1000) as u8
}

/// Decodes a P2/P5 graymap or P3/P6 pixmap. Color inputs are reduced to luma;
/// samples with maxval below 255 are rescaled to the full 8-bit range.
pub fn load_pnm(bytes: &[u8]) -> Result<Image, PnmError> {
    let mut cur = Cursor { bytes, pos: 0 };
    let format = match bytes.get(..2) {
        Some(b"P2") => Format::GrayAscii,
        Some(b"P3") => Format::ColorAscii,
        Some(b"P5") => Format::GrayBinary,
        Some(b"P6") => Format::ColorBinary,
        _ => return Err(cur.err(PnmErrorKind::BadMagic)),
    };
    cur.pos = 2;

    let width_at = cur.pos;
    let width = cur.number()? as usize;
    let height = cur.number()? as usize;
    if width == 0 || height == 0 {
        return Err(PnmError {
            offset: width_at,
            kind: PnmErrorKind::ZeroDimension,
        });
    }
    cur.skip_whitespace_and_comments();
    let maxval_at = cur.pos;
    let maxval = cur.number()?;
    if maxval == 0 || maxval > 255 {
        return Err(PnmError {
            offset: maxval_at,
            kind: PnmErrorKind::MaxvalOutOfRange(maxval),
        });
    }

    let channels = format.channels();
    let n_samples = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or(PnmError {
            offset: width_at,
            kind: PnmErrorKind::BadNumber,
        })?;

    let mut samples = Vec::with_capacity(n_samples);
    match format {
        Format::GrayBinary | Format::ColorBinary => {
            match bytes.get(cur.pos) {
                Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
                _ => return Err(cur.err(PnmErrorKind::MissingSeparator)),
            }
            let raster = &bytes[cur.pos..];
            if raster.len() < n_samples {
                return Err(PnmError {
                    offset: bytes.len(),
                    kind: PnmErrorKind::Truncated {
                        expected: n_samples,
                        found: raster.len(),
                    },
                });
            }
            for (i, &s) in raster[..n_samples].iter().enumerate() {
                if u32::from(s) > maxval {
                    return Err(PnmError {
                        offset: cur.pos + i,
                        kind: PnmErrorKind::SampleExceedsMaxval {
                            sample: u32::from(s),
                            maxval,
                        },
                    });
                }
                samples.push(s);
            }
        }
        Format::GrayAscii | Format::ColorAscii => {
            for _ in 0..n_samples {
                cur.skip_whitespace_and_comments();
                let at = cur.pos;
                if at >= bytes.len() {
                    return Err(PnmError {
                        offset: at,
                        kind: PnmErrorKind::Truncated {
                            expected: n_samples,
                            found: samples.len(),
                        },
                    });
                }
                let s = cur.number()?;
                if s > maxval {
                    return Err(PnmError {
                        offset: at,
                        kind: PnmErrorKind::SampleExceedsMaxval { sample: s, maxval },
                    });
                }
                samples.push(s as u8);
            }
        }
    }

    if maxval != 255 {
        for s in &mut samples {
            *s = ((u32::from(*s) * 255 * 2 + maxval) / (2 * maxval)) as u8;
        }
    }

    let pixels = if channels == 3 {
        samples
            .chunks_exact(3)
            .map(|rgb| luma(rgb[0], rgb[1], rgb[2]))
            .collect()
    } else {
        samples
    };
    Ok(Image {
        width,
        height,
        pixels,
    })
}

/// Encodes as binary P5 with maxval 255.
pub fn save_pnm(img: &Image) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", img.width(), img.height());
    let mut out = Vec::with_capacity(header.len() + img.pixels().len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(img.pixels());
    out
}
