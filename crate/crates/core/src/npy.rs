//! Reading and writing the subset of the numpy `.npy` format used for interchange.
//!
//! Only little-endian `f4`/`f8` payloads in C order are accepted by [`read_npy`].
//! Triangle index arrays are the one exception: [`read_npy_indices`] also accepts
//! little-endian integer payloads, since face tables are naturally integral.
//!
//! Writing always emits a version 1.0 header padded to a 64-byte boundary, the
//! same layout numpy produces, so payloads round-trip bit for bit.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

/// The npy magic string.
pub const MAGIC: [u8; 6] = *b"\x93NUMPY";

const HEADER_ALIGN: usize = 64;

#[derive(Debug, Error)]
pub enum NpyError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("file does not start with the npy magic string")]
    MagicMismatch,
    #[error("unsupported npy format version {0}.{1}")]
    UnsupportedVersion(u8, u8),
    #[error("unsupported dtype descriptor '{0}'")]
    UnsupportedDtype(String),
    #[error("fortran-ordered arrays are not supported")]
    FortranOrderUnsupported,
    #[error("malformed header or shape: {0}")]
    ShapeHeaderMalformed(String),
}

/// Element type of a float payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    fn descr(self) -> &'static str {
        match self {
            Dtype::F32 => "<f4",
            Dtype::F64 => "<f8",
        }
    }

    fn width(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

/// Raw payload, kept in its on-disk width so that writes are lossless.
#[derive(Debug, Clone, PartialEq)]
pub enum NpyData {
    F32(Vec<f32>),
    F64(Vec<f64>),
}

/// A dense C-order array loaded from an npy file.
#[derive(Debug, Clone, PartialEq)]
pub struct NpyArray {
    pub shape: Vec<usize>,
    pub data: NpyData,
}

impl NpyArray {
    pub fn from_f64(shape: Vec<usize>, values: Vec<f64>) -> Result<Self, NpyError> {
        check_len(&shape, values.len())?;
        Ok(Self {
            shape,
            data: NpyData::F64(values),
        })
    }

    pub fn from_f32(shape: Vec<usize>, values: Vec<f32>) -> Result<Self, NpyError> {
        check_len(&shape, values.len())?;
        Ok(Self {
            shape,
            data: NpyData::F32(values),
        })
    }

    pub fn dtype(&self) -> Dtype {
        match self.data {
            NpyData::F32(_) => Dtype::F32,
            NpyData::F64(_) => Dtype::F64,
        }
    }

    pub fn len(&self) -> usize {
        match &self.data {
            NpyData::F32(v) => v.len(),
            NpyData::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Values widened to `f64`.
    pub fn to_f64(&self) -> Vec<f64> {
        match &self.data {
            NpyData::F32(v) => v.iter().map(|&x| x as f64).collect(),
            NpyData::F64(v) => v.clone(),
        }
    }

    pub fn into_f64(self) -> Vec<f64> {
        match self.data {
            NpyData::F32(v) => v.into_iter().map(|x| x as f64).collect(),
            NpyData::F64(v) => v,
        }
    }
}

fn check_len(shape: &[usize], len: usize) -> Result<(), NpyError> {
    let expected: usize = shape.iter().product();
    if expected != len {
        return Err(NpyError::ShapeHeaderMalformed(format!(
            "shape {shape:?} holds {expected} elements but {len} were given"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
struct HeaderDict {
    descr: String,
    fortran_order: bool,
    shape: Vec<usize>,
}

/// Loads a float array from `path`.
pub fn read_npy(path: impl AsRef<Path>) -> Result<NpyArray, NpyError> {
    let bytes = fs::read(path)?;
    parse_npy(&bytes)
}

/// Parses a float array from an in-memory npy image.
pub fn parse_npy(bytes: &[u8]) -> Result<NpyArray, NpyError> {
    let (dict, payload) = split_header(bytes)?;
    let dtype = match dict.descr.as_str() {
        "<f4" => Dtype::F32,
        "<f8" => Dtype::F64,
        other => return Err(NpyError::UnsupportedDtype(other.to_string())),
    };
    if dict.fortran_order {
        return Err(NpyError::FortranOrderUnsupported);
    }
    let count = element_count(&dict.shape)?;
    expect_payload(payload, count, dtype.width())?;
    let data = match dtype {
        Dtype::F32 => NpyData::F32(
            payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
        Dtype::F64 => NpyData::F64(
            payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
    };
    Ok(NpyArray {
        shape: dict.shape,
        data,
    })
}

/// Loads an index array (faces). Accepts little-endian `i4`, `i8`, `u4`, `u8`,
/// or float payloads whose values are all non-negative integers.
pub fn read_npy_indices(path: impl AsRef<Path>) -> Result<(Vec<usize>, Vec<usize>), NpyError> {
    let bytes = fs::read(path)?;
    parse_npy_indices(&bytes)
}

pub fn parse_npy_indices(bytes: &[u8]) -> Result<(Vec<usize>, Vec<usize>), NpyError> {
    let (dict, payload) = split_header(bytes)?;
    if dict.fortran_order {
        return Err(NpyError::FortranOrderUnsupported);
    }
    let count = element_count(&dict.shape)?;
    let negative = || NpyError::ShapeHeaderMalformed("negative or non-integral index".into());
    let values: Vec<usize> = match dict.descr.as_str() {
        "<i4" => {
            expect_payload(payload, count, 4)?;
            payload
                .chunks_exact(4)
                .map(|c| usize::try_from(i32::from_le_bytes(c.try_into().unwrap())))
                .collect::<Result<_, _>>()
                .map_err(|_| negative())?
        }
        "<u4" => {
            expect_payload(payload, count, 4)?;
            payload
                .chunks_exact(4)
                .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as usize)
                .collect()
        }
        "<i8" => {
            expect_payload(payload, count, 8)?;
            payload
                .chunks_exact(8)
                .map(|c| usize::try_from(i64::from_le_bytes(c.try_into().unwrap())))
                .collect::<Result<_, _>>()
                .map_err(|_| negative())?
        }
        "<u8" => {
            expect_payload(payload, count, 8)?;
            payload
                .chunks_exact(8)
                .map(|c| usize::try_from(u64::from_le_bytes(c.try_into().unwrap())))
                .collect::<Result<_, _>>()
                .map_err(|_| negative())?
        }
        "<f4" | "<f8" => {
            let arr = parse_npy(bytes)?;
            arr.to_f64()
                .into_iter()
                .map(|x| {
                    if x >= 0.0 && x.fract() == 0.0 && x < 1e15 {
                        Ok(x as usize)
                    } else {
                        Err(negative())
                    }
                })
                .collect::<Result<_, _>>()?
        }
        other => return Err(NpyError::UnsupportedDtype(other.to_string())),
    };
    Ok((dict.shape, values))
}

fn element_count(shape: &[usize]) -> Result<usize, NpyError> {
    shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| NpyError::ShapeHeaderMalformed("shape overflows usize".into()))
}

fn expect_payload(payload: &[u8], count: usize, width: usize) -> Result<(), NpyError> {
    let expected = count
        .checked_mul(width)
        .ok_or_else(|| NpyError::ShapeHeaderMalformed("shape overflows usize".into()))?;
    if payload.len() != expected {
        return Err(NpyError::ShapeHeaderMalformed(format!(
            "header declares {expected} payload bytes, file holds {}",
            payload.len()
        )));
    }
    Ok(())
}

fn split_header(bytes: &[u8]) -> Result<(HeaderDict, &[u8]), NpyError> {
    if bytes.len() < 8 || bytes[..6] != MAGIC {
        return Err(NpyError::MagicMismatch);
    }
    let (major, minor) = (bytes[6], bytes[7]);
    let (len_bytes, start) = match major {
        1 => (2usize, 10usize),
        2 | 3 => (4, 12),
        _ => return Err(NpyError::UnsupportedVersion(major, minor)),
    };
    if bytes.len() < start {
        return Err(NpyError::ShapeHeaderMalformed("truncated header length".into()));
    }
    let header_len = if len_bytes == 2 {
        u16::from_le_bytes([bytes[8], bytes[9]]) as usize
    } else {
        u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize
    };
    let end = start
        .checked_add(header_len)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| NpyError::ShapeHeaderMalformed("header runs past end of file".into()))?;
    let text = std::str::from_utf8(&bytes[start..end])
        .map_err(|_| NpyError::ShapeHeaderMalformed("header is not valid text".into()))?;
    Ok((parse_header_dict(text)?, &bytes[end..]))
}

/// Parses the python-literal header dict, e.g.
/// `{'descr': '<f4', 'fortran_order': False, 'shape': (2, 3), }`.
fn parse_header_dict(text: &str) -> Result<HeaderDict, NpyError> {
    let malformed = |why: &str| NpyError::ShapeHeaderMalformed(why.to_string());
    let body = text
        .trim()
        .strip_prefix('{')
        .and_then(|s| s.strip_suffix('}'))
        .ok_or_else(|| malformed("header is not a dict literal"))?;

    let mut descr = None;
    let mut fortran_order = None;
    let mut shape = None;
    let mut rest = body.trim_start();
    while !rest.is_empty() {
        let (key, after_key) = take_quoted(rest).ok_or_else(|| malformed("expected quoted key"))?;
        let after_colon = after_key
            .trim_start()
            .strip_prefix(':')
            .ok_or_else(|| malformed("expected ':' after key"))?
            .trim_start();
        let after_value = match key {
            "descr" => {
                let (value, tail) =
                    take_quoted(after_colon).ok_or_else(|| malformed("descr must be a string"))?;
                descr = Some(value.to_string());
                tail
            }
            "fortran_order" => {
                if let Some(tail) = after_colon.strip_prefix("False") {
                    fortran_order = Some(false);
                    tail
                } else if let Some(tail) = after_colon.strip_prefix("True") {
                    fortran_order = Some(true);
                    tail
                } else {
                    return Err(malformed("fortran_order must be True or False"));
                }
            }
            "shape" => {
                let inner = after_colon
                    .strip_prefix('(')
                    .ok_or_else(|| malformed("shape must be a tuple"))?;
                let close = inner.find(')').ok_or_else(|| malformed("unterminated shape"))?;
                let dims = inner[..close]
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.trim_end_matches('L').parse::<usize>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| malformed("shape entries must be non-negative integers"))?;
                shape = Some(dims);
                &inner[close + 1..]
            }
            other => return Err(malformed(&format!("unexpected key '{other}'"))),
        };
        rest = after_value.trim_start();
        rest = rest.strip_prefix(',').unwrap_or(rest).trim_start();
    }

    Ok(HeaderDict {
        descr: descr.ok_or_else(|| malformed("missing descr"))?,
        fortran_order: fortran_order.ok_or_else(|| malformed("missing fortran_order"))?,
        shape: shape.ok_or_else(|| malformed("missing shape"))?,
    })
}

fn take_quoted(s: &str) -> Option<(&str, &str)> {
    let quote = s.chars().next().filter(|c| *c == '\'' || *c == '"')?;
    let inner = &s[1..];
    let end = inner.find(quote)?;
    Some((&inner[..end], &inner[end + 1..]))
}

fn header_bytes(dtype: &str, shape: &[usize]) -> Vec<u8> {
    let shape_text = match shape {
        [single] => format!("({single},)"),
        dims => format!(
            "({})",
            dims.iter().map(usize::to_string).collect::<Vec<_>>().join(", ")
        ),
    };
    let mut dict = format!("{{'descr': '{dtype}', 'fortran_order': False, 'shape': {shape_text}, }}");
    // magic(6) + version(2) + len(2) + dict + '\n' must be a multiple of 64
    let unpadded = MAGIC.len() + 2 + 2 + dict.len() + 1;
    let pad = (HEADER_ALIGN - unpadded % HEADER_ALIGN) % HEADER_ALIGN;
    dict.extend(std::iter::repeat_n(' ', pad));
    dict.push('\n');

    let mut out = Vec::with_capacity(10 + dict.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(dict.len() as u16).to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    out
}

/// Serializes an array as a version 1.0 npy image.
pub fn to_bytes(array: &NpyArray) -> Vec<u8> {
    let mut out = header_bytes(array.dtype().descr(), &array.shape);
    match &array.data {
        NpyData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        NpyData::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
    }
    out
}

pub fn write_npy(path: impl AsRef<Path>, array: &NpyArray) -> Result<(), NpyError> {
    let mut file = fs::File::create(path)?;
    file.write_all(&to_bytes(array))?;
    Ok(())
}

/// Writes an `<i8` index array, the dtype numpy uses for face tables.
pub fn write_npy_indices(
    path: impl AsRef<Path>,
    shape: &[usize],
    values: &[usize],
) -> Result<(), NpyError> {
    check_len(shape, values.len())?;
    let mut out = header_bytes("<i8", shape);
    for &v in values {
        out.extend_from_slice(&(v as i64).to_le_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads the whole stream and parses it.
pub fn read_from<R: Read>(mut reader: R) -> Result<NpyArray, NpyError> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    parse_npy(&bytes)
}
