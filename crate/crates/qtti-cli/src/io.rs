//! On-disk formats: train files, dense float blobs, and binary PGM images.
//!
//! Every format is a short text header terminated by one blank line,
//! followed by a raw little-endian payload whose length is fully determined
//! by the header. Writing is deterministic byte for byte, so identical
//! inputs always produce identical files.

use std::fs;
use std::path::Path;

use ndarray::{ArrayD, IxDyn};
use qtti_core::io::{read_tensor, write_tensor};
use qtti_core::{Error, Result, TensorTrain};
use qtti_interp::grid::{deinterleave, GridDescriptor, Layout};
use qtti_interp::tucker::TuckerTT;

const TT_MAGIC: &str = "QTTI-TT v1";
const DENSE_MAGIC: &str = "QTTI-DENSE v1";

/// A stored field: plain/interleaved train or native Tucker form.
#[derive(Debug, Clone)]
pub enum Stored {
    Train(TensorTrain),
    Tucker(TuckerTT),
}

impl Stored {
    pub fn max_rank(&self) -> usize {
        match self {
            Stored::Train(t) => t.max_rank(),
            Stored::Tucker(t) => t.max_rank(),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Stored::Train(t) => t.param_count(),
            Stored::Tucker(t) => t.param_count(),
        }
    }

    pub fn expect_train(&self) -> Result<&TensorTrain> {
        match self {
            Stored::Train(t) => Ok(t),
            Stored::Tucker(_) => Err(Error::config(
                "this operation needs a plain or interleaved train, not a Tucker field",
            )),
        }
    }
}

/// A train file: grid metadata plus the encoded field.
#[derive(Debug, Clone)]
pub struct TtFile {
    pub grid: GridDescriptor,
    pub field: Stored,
}

pub fn write_tt(path: &Path, file: &TtFile) -> Result<()> {
    let mut header = String::new();
    header.push_str(TT_MAGIC);
    header.push('\n');
    header.push_str(&file.grid.to_text());
    let mut payload = Vec::new();
    match &file.field {
        Stored::Train(tt) => {
            header.push_str("form=train\n");
            write_tensor(&mut payload, tt)?;
        }
        Stored::Tucker(t) => {
            header.push_str("form=tucker\n");
            header.push_str(&format!("factors={}\n", t.factors().len()));
            write_tensor(&mut payload, t.core())?;
            for f in t.factors() {
                write_tensor(&mut payload, f)?;
            }
        }
    }
    header.push('\n');
    let mut bytes = header.into_bytes();
    bytes.extend_from_slice(&payload);
    fs::write(path, bytes)?;
    Ok(())
}

/// Split a header-then-payload file at the first blank line.
fn split_header(bytes: &[u8], what: &str) -> Result<(String, usize)> {
    let sep = bytes
        .windows(2)
        .position(|w| w == b"\n\n")
        .ok_or_else(|| Error::format(format!("{what}: missing blank line after header")))?;
    let header = std::str::from_utf8(&bytes[..sep + 1])
        .map_err(|_| Error::format(format!("{what}: header is not UTF-8")))?;
    Ok((header.to_string(), sep + 2))
}

pub fn read_tt(path: &Path) -> Result<TtFile> {
    let bytes = fs::read(path)?;
    let (header, payload_at) = split_header(&bytes, "train file")?;
    let mut lines = header.lines();
    if lines.next() != Some(TT_MAGIC) {
        return Err(Error::format("not a train file (bad magic)"));
    }
    let mut grid_text = String::new();
    let mut form = None;
    let mut factor_count = None;
    for line in lines {
        if let Some(value) = line.strip_prefix("form=") {
            form = Some(value.to_string());
        } else if let Some(value) = line.strip_prefix("factors=") {
            factor_count = Some(
                value
                    .parse::<usize>()
                    .map_err(|_| Error::format("bad factor count"))?,
            );
        } else {
            grid_text.push_str(line);
            grid_text.push('\n');
        }
    }
    let grid = GridDescriptor::from_text(&grid_text)?;
    // The train containers are self-delimiting, so read them in sequence.
    let mut payload = &bytes[payload_at..];
    let field = match form.as_deref() {
        Some("train") => Stored::Train(read_tensor(&mut payload)?),
        Some("tucker") => {
            let count =
                factor_count.ok_or_else(|| Error::format("tucker form needs a factor count"))?;
            let core = read_tensor(&mut payload)?;
            let factors: Vec<TensorTrain> = (0..count)
                .map(|_| read_tensor(&mut payload))
                .collect::<Result<_>>()?;
            Stored::Tucker(TuckerTT::new(core, factors)?)
        }
        _ => return Err(Error::format("missing or unknown form")),
    };
    if !payload.is_empty() {
        return Err(Error::format("trailing bytes after train payload"));
    }
    Ok(TtFile { grid, field })
}

/// Contract a stored field to the dense array shaped per the grid.
pub fn densify(file: &TtFile) -> Result<ArrayD<f64>> {
    let grid = &file.grid;
    match &file.field {
        Stored::Tucker(t) => t.to_dense(),
        Stored::Train(tt) => match grid.layout {
            Layout::Interleaved => deinterleave(tt, grid),
            _ => {
                let shape: Vec<usize> = (0..grid.dims()).map(|m| grid.points(m)).collect();
                let flat: Vec<f64> = tt.to_dense()?.iter().copied().collect();
                ArrayD::from_shape_vec(IxDyn(&shape), flat)
                    .map_err(|_| Error::format("train size does not match its grid"))
            }
        },
    }
}

pub fn write_dense(path: &Path, data: &ArrayD<f64>) -> Result<()> {
    let dims: Vec<String> = data.shape().iter().map(|d| d.to_string()).collect();
    let mut bytes = format!("{DENSE_MAGIC}\ndims={}\n\n", dims.join(",")).into_bytes();
    for v in data.iter() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}

pub fn read_dense(path: &Path) -> Result<ArrayD<f64>> {
    let bytes = fs::read(path)?;
    let (header, payload_at) = split_header(&bytes, "dense file")?;
    let mut lines = header.lines();
    if lines.next() != Some(DENSE_MAGIC) {
        return Err(Error::format("not a dense file (bad magic)"));
    }
    let dims_line = lines
        .next()
        .and_then(|l| l.strip_prefix("dims="))
        .ok_or_else(|| Error::format("dense file missing dims"))?;
    let shape: Vec<usize> = dims_line
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::format(format!("bad dimension: {s}")))
        })
        .collect::<Result<_>>()?;
    let expected: usize = shape.iter().product();
    let payload = &bytes[payload_at..];
    if payload.len() != expected * 8 {
        return Err(Error::format("dense payload length disagrees with dims"));
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    ArrayD::from_shape_vec(IxDyn(&shape), values)
        .map_err(|_| Error::format("dense shape mismatch"))
}

/// Grayscale image with raw sample values (0..=maxval) kept as f64.
/// Pixels are row-major: `pixels[y * width + x]`.
#[derive(Debug, Clone)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub pixels: Vec<f64>,
}

pub fn read_pgm(path: &Path) -> Result<Image> {
    let bytes = fs::read(path)?;
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::format("not a binary PGM (P5) file"));
    }
    // Tokenize the header: three whitespace-separated numbers after the
    // magic, with '#' comments running to end of line.
    let mut pos = 2usize;
    let mut fields = Vec::with_capacity(3);
    while fields.len() < 3 {
        while pos < bytes.len() {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else if bytes[pos].is_ascii_whitespace() {
                pos += 1;
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format("malformed PGM header"));
        }
        let token = std::str::from_utf8(&bytes[start..pos]).unwrap();
        fields.push(
            token
                .parse::<usize>()
                .map_err(|_| Error::format("malformed PGM header"))?,
        );
    }
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::format("malformed PGM header"));
    }
    pos += 1;
    let (width, height, maxval) = (fields[0], fields[1], fields[2]);
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(Error::format("unsupported PGM dimensions"));
    }
    let count = width * height;
    let data = &bytes[pos..];
    let pixels: Vec<f64> = if maxval < 256 {
        if data.len() != count {
            return Err(Error::format("PGM raster length disagrees with header"));
        }
        data.iter().map(|&b| b as f64).collect()
    } else {
        if data.len() != 2 * count {
            return Err(Error::format("PGM raster length disagrees with header"));
        }
        data.chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64)
            .collect()
    };
    Ok(Image {
        width,
        height,
        maxval: maxval as u16,
        pixels,
    })
}

pub fn write_pgm(path: &Path, image: &Image) -> Result<()> {
    if image.pixels.len() != image.width * image.height {
        return Err(Error::config("pixel buffer disagrees with image size"));
    }
    let mut bytes =
        format!("P5\n{} {}\n{}\n", image.width, image.height, image.maxval).into_bytes();
    let top = image.maxval as f64;
    if image.maxval < 256 {
        bytes.extend(image.pixels.iter().map(|&v| v.clamp(0.0, top).round() as u8));
    } else {
        for &v in &image.pixels {
            let q = v.clamp(0.0, top).round() as u16;
            bytes.extend_from_slice(&q.to_be_bytes());
        }
    }
    fs::write(path, bytes)?;
    Ok(())
}
