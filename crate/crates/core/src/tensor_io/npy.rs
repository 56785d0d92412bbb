//! Reading and writing the npy binary array format.
//!
//! Only little-endian `f4`/`f8` payloads in C order are accepted. Every other
//! descriptor is rejected with a typed error rather than converted.

use std::fmt::Write as _;

use super::{NpyError, Tensor, TensorData};

/// The npy magic string.
pub const MAGIC: [u8; 6] = *b"\x93NUMPY";

const ALIGN: usize = 64;

/// Element type of an npy payload.
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

    fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

struct Header {
    dtype: Dtype,
    shape: Vec<usize>,
}

/// Parses a complete npy file held in memory.
pub fn parse_npy(bytes: &[u8]) -> Result<Tensor, NpyError> {
    if bytes.len() < MAGIC.len() || bytes[..MAGIC.len()] != MAGIC {
        return Err(NpyError::BadMagic);
    }
    let rest = &bytes[MAGIC.len()..];
    if rest.len() < 2 {
        return Err(NpyError::Truncated);
    }
    let (major, minor) = (rest[0], rest[1]);
    let rest = &rest[2..];
    let (header_len, rest) = match major {
        1 => {
            if rest.len() < 2 {
                return Err(NpyError::Truncated);
            }
            (u16::from_le_bytes([rest[0], rest[1]]) as usize, &rest[2..])
        }
        2 => {
            if rest.len() < 4 {
                return Err(NpyError::Truncated);
            }
            (
                u32::from_le_bytes([rest[0], rest[1], rest[2], rest[3]]) as usize,
                &rest[4..],
            )
        }
        _ => return Err(NpyError::UnsupportedVersion(major, minor)),
    };
    if minor != 0 {
        return Err(NpyError::UnsupportedVersion(major, minor));
    }
    if rest.len() < header_len {
        return Err(NpyError::Truncated);
    }
    let (header_bytes, payload) = rest.split_at(header_len);
    let header_text = std::str::from_utf8(header_bytes)
        .map_err(|_| NpyError::MalformedHeader("header is not valid text".into()))?;
    let header = parse_header(header_text)?;

    let count = header
        .shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or(NpyError::ShapeMismatch {
            expected: usize::MAX,
            actual: payload.len(),
        })?;
    let expected = count
        .checked_mul(header.dtype.size())
        .ok_or(NpyError::ShapeMismatch {
            expected: usize::MAX,
            actual: payload.len(),
        })?;
    if payload.len() != expected {
        return Err(NpyError::ShapeMismatch {
            expected,
            actual: payload.len(),
        });
    }

    let data = match header.dtype {
        Dtype::F32 => TensorData::F32(
            payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect(),
        ),
        Dtype::F64 => TensorData::F64(
            payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
                .collect(),
        ),
    };
    Tensor::new(header.shape, data).map_err(|e| match e {
        super::TensorError::NonFinite { index } => NpyError::NonFiniteValue { index },
        other => NpyError::MalformedHeader(other.to_string()),
    })
}

/// Serializes a tensor as an npy file. Version 1.0 is used unless the header
/// does not fit in a 16-bit length.
pub fn write_npy(tensor: &Tensor) -> Vec<u8> {
    let dtype = tensor.dtype();
    let mut dict = String::new();
    write!(
        dict,
        "{{'descr': '{}', 'fortran_order': False, 'shape': (",
        dtype.descr()
    )
    .unwrap();
    for (i, d) in tensor.shape().iter().enumerate() {
        if i > 0 {
            dict.push_str(", ");
        }
        write!(dict, "{d}").unwrap();
    }
    if tensor.shape().len() == 1 {
        dict.push(',');
    }
    dict.push_str("), }");

    // magic + version + length field + dict + padding + '\n' must be 64-aligned
    let unpadded_v1 = MAGIC.len() + 2 + 2 + dict.len() + 1;
    let (version, len_field) = if unpadded_v1.div_ceil(ALIGN) * ALIGN - 10 <= u16::MAX as usize {
        (1u8, 2usize)
    } else {
        (2u8, 4usize)
    };
    let unpadded = MAGIC.len() + 2 + len_field + dict.len() + 1;
    let padding = unpadded.div_ceil(ALIGN) * ALIGN - unpadded;
    dict.extend(std::iter::repeat_n(' ', padding));
    dict.push('\n');

    let mut out = Vec::with_capacity(MAGIC.len() + 6 + dict.len() + tensor.len() * dtype.size());
    out.extend_from_slice(&MAGIC);
    out.push(version);
    out.push(0);
    if version == 1 {
        out.extend_from_slice(&(dict.len() as u16).to_le_bytes());
    } else {
        out.extend_from_slice(&(dict.len() as u32).to_le_bytes());
    }
    out.extend_from_slice(dict.as_bytes());
    match tensor.data() {
        TensorData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        TensorData::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Literal {
    Str(String),
    Bool(bool),
    Tuple(Vec<usize>),
}

struct Cursor<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), NpyError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(malformed(format!("expected '{}' at offset {}", c as char, self.pos)))
        }
    }

    fn string(&mut self) -> Result<String, NpyError> {
        let quote = match self.peek() {
            Some(q @ (b'\'' | b'"')) => q,
            _ => return Err(malformed(format!("expected string at offset {}", self.pos))),
        };
        self.pos += 1;
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos] != quote {
            self.pos += 1;
        }
        if self.pos >= self.s.len() {
            return Err(malformed("unterminated string".into()));
        }
        let text = String::from_utf8_lossy(&self.s[start..self.pos]).into_owned();
        self.pos += 1;
        Ok(text)
    }

    fn word(&mut self) -> &'a [u8] {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        &self.s[start..self.pos]
    }

    fn literal(&mut self) -> Result<Literal, NpyError> {
        match self.peek() {
            Some(b'\'' | b'"') => self.string().map(Literal::Str),
            Some(b'(') => {
                self.pos += 1;
                let mut dims = Vec::new();
                loop {
                    if self.peek() == Some(b')') {
                        self.pos += 1;
                        break;
                    }
                    let w = self.word();
                    let text = std::str::from_utf8(w).unwrap_or("");
                    let text = text.strip_suffix('L').unwrap_or(text);
                    let dim: usize = text
                        .parse()
                        .map_err(|_| malformed(format!("bad shape entry {text:?}")))?;
                    dims.push(dim);
                    match self.peek() {
                        Some(b',') => self.pos += 1,
                        Some(b')') => {}
                        _ => return Err(malformed("bad shape tuple".into())),
                    }
                }
                Ok(Literal::Tuple(dims))
            }
            _ => match self.word() {
                b"True" => Ok(Literal::Bool(true)),
                b"False" => Ok(Literal::Bool(false)),
                other => Err(malformed(format!(
                    "unexpected token {:?}",
                    String::from_utf8_lossy(other)
                ))),
            },
        }
    }
}

fn malformed(msg: String) -> NpyError {
    NpyError::MalformedHeader(msg)
}

fn parse_header(text: &str) -> Result<Header, NpyError> {
    let mut cur = Cursor {
        s: text.as_bytes(),
        pos: 0,
    };
    cur.expect(b'{')?;
    let (mut descr, mut fortran, mut shape) = (None, None, None);
    loop {
        if cur.peek() == Some(b'}') {
            cur.pos += 1;
            break;
        }
        let key = cur.string()?;
        cur.expect(b':')?;
        let value = cur.literal()?;
        match (key.as_str(), value) {
            ("descr", Literal::Str(s)) => descr = Some(s),
            ("fortran_order", Literal::Bool(b)) => fortran = Some(b),
            ("shape", Literal::Tuple(t)) => shape = Some(t),
            (k, v) => return Err(malformed(format!("unexpected entry {k:?}: {v:?}"))),
        }
        match cur.peek() {
            Some(b',') => cur.pos += 1,
            Some(b'}') => {}
            _ => return Err(malformed("expected ',' or '}'".into())),
        }
    }
    if cur.s[cur.pos..].iter().any(|b| !b.is_ascii_whitespace()) {
        return Err(malformed("trailing bytes after header dict".into()));
    }

    let descr = descr.ok_or_else(|| malformed("missing 'descr'".into()))?;
    let fortran = fortran.ok_or_else(|| malformed("missing 'fortran_order'".into()))?;
    let shape = shape.ok_or_else(|| malformed("missing 'shape'".into()))?;
    let dtype = match descr.as_str() {
        "<f4" => Dtype::F32,
        "<f8" => Dtype::F64,
        _ => return Err(NpyError::UnsupportedDtype(descr)),
    };
    if fortran {
        return Err(NpyError::FortranOrderUnsupported);
    }
    if shape.contains(&0) {
        return Err(malformed("zero-length axis".into()));
    }
    Ok(Header { dtype, shape })
}
