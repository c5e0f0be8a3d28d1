//! Grayscale raster images, a small catalog of affine TFs, and IDX dataset
//! I/O.
//!
//! Every image TF here is an incremental warp over a shared bilinear
//! resampling kernel: rotate, zoom, shear, shift, and a center swirl. The
//! kernel maps each *output* pixel back through an inverse transform and
//! samples the input there, reading out-of-bounds as black. Bilinear
//! resampling loses a little signal on every application — deliberately so:
//! the TFs are non-commutative, slightly lossy operators, exactly the regime
//! the sequence policy is meant to navigate.
//!
//! The IDX reader/writer speaks the classic big-endian tensor format used by
//! handwritten-digit datasets (magic `0x00000803` for image tensors,
//! `0x00000801` for label vectors), mapping bytes to pixels in `[0, 1]` by
//! division by 255.

use std::path::Path;

use thiserror::Error;

use crate::point::DataPoint;
use crate::rng::RandomSource;
use crate::tf::TfRegistry;

/// Magic number of an IDX unsigned-byte rank-3 tensor (image stack).
pub const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
/// Magic number of an IDX unsigned-byte rank-1 tensor (label vector).
pub const IDX_LABEL_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("{height}x{width} image needs {expected} pixels, got {got}")]
    BadShape {
        height: usize,
        width: usize,
        expected: usize,
        got: usize,
    },
    #[error("pixel value {0} lies outside [0, 1]")]
    PixelRange(f64),
    #[error("image dimensions must be positive")]
    EmptyImage,
    #[error("invalid TF spec {spec:?}: {reason}")]
    BadTfSpec { spec: String, reason: String },
    #[error("IDX file {path}: {reason}")]
    Format { path: String, reason: String },
    #[error("failed to access {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A grayscale image: row-major pixels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self, RasterError> {
        if height == 0 || width == 0 {
            return Err(RasterError::EmptyImage);
        }
        if pixels.len() != height * width {
            return Err(RasterError::BadShape {
                height,
                width,
                expected: height * width,
                got: pixels.len(),
            });
        }
        if let Some(&bad) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(RasterError::PixelRange(bad));
        }
        Ok(Self {
            height,
            width,
            pixels,
        })
    }

    /// All-black image.
    pub fn zeros(height: usize, width: usize) -> Self {
        Self::new(height, width, vec![0.0; height * width]).expect("zeros are in range")
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row < self.height && col < self.width);
        self.pixels[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.height && col < self.width);
        debug_assert!((0.0..=1.0).contains(&value));
        self.pixels[row * self.width + col] = value;
    }

    /// Flattens into the generic data-point representation the TF registry
    /// operates on.
    pub fn to_point(&self) -> DataPoint {
        DataPoint::new(self.pixels.clone())
    }

    /// Reinterprets a flat data point as an image of the given shape.
    pub fn from_point(
        point: &DataPoint,
        height: usize,
        width: usize,
    ) -> Result<Self, RasterError> {
        Self::new(height, width, point.values.clone())
    }
}

/// Bilinear sample of `img` at fractional (row, col); out-of-bounds reads 0.
fn sample_bilinear(img: &GrayImage, row: f64, col: f64) -> f64 {
    let r0 = row.floor();
    let c0 = col.floor();
    let fr = row - r0;
    let fc = col - c0;
    let at = |r: f64, c: f64| -> f64 {
        if r < 0.0 || c < 0.0 {
            return 0.0;
        }
        let (r, c) = (r as usize, c as usize);
        if r >= img.height || c >= img.width {
            0.0
        } else {
            img.pixels[r * img.width + c]
        }
    };
    (1.0 - fr) * (1.0 - fc) * at(r0, c0)
        + (1.0 - fr) * fc * at(r0, c0 + 1.0)
        + fr * (1.0 - fc) * at(r0 + 1.0, c0)
        + fr * fc * at(r0 + 1.0, c0 + 1.0)
}

/// The inverse affine map that leaves every pixel in place.
pub const IDENTITY_MATRIX: [f64; 6] = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0];

/// Warps an image by an inverse affine map `[a, b, tx, c, d, ty]` about the
/// image center: each output pixel at centered coordinates `(x, y)` samples
/// the input at `(a·x + b·y + tx, c·x + d·y + ty)`, bilinearly, with
/// out-of-bounds reading 0. The exact identity matrix short-circuits to a
/// bit-exact copy.
pub fn affine_warp(img: &GrayImage, inverse: &[f64; 6]) -> GrayImage {
    assert!(inverse.iter().all(|v| v.is_finite()));
    if *inverse == IDENTITY_MATRIX {
        return img.clone();
    }
    let [a, b, tx, c, d, ty] = *inverse;
    let cx = (img.width as f64 - 1.0) / 2.0;
    let cy = (img.height as f64 - 1.0) / 2.0;
    let mut out = Vec::with_capacity(img.pixels.len());
    for row in 0..img.height {
        let y = row as f64 - cy;
        for col in 0..img.width {
            let x = col as f64 - cx;
            let sx = a * x + b * y + tx + cx;
            let sy = c * x + d * y + ty + cy;
            out.push(sample_bilinear(img, sy, sx).clamp(0.0, 1.0));
        }
    }
    GrayImage {
        height: img.height,
        width: img.width,
        pixels: out,
    }
}

/// One parsed raster TF: kind plus parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum RasterTf {
    /// Rotation about the center, degrees counterclockwise.
    Rotate(f64),
    /// Uniform scaling about the center; factor > 1 magnifies.
    Zoom(f64),
    /// Horizontal shear, degrees.
    Shear(f64),
    /// Translation by (columns, rows).
    Shift(f64, f64),
    /// Center swirl: pixels rotate by `strength · (1 − ρ/ρ_max)` radians.
    Swirl(f64),
}

impl RasterTf {
    /// Parses one spec like `rotate(2.5)`, `shift(1,0)`, `zoom(0.9)`.
    pub fn parse(spec: &str) -> Result<Self, RasterError> {
        let bad = |reason: &str| RasterError::BadTfSpec {
            spec: spec.to_string(),
            reason: reason.to_string(),
        };
        let trimmed = spec.trim();
        let open = trimmed.find('(').ok_or_else(|| bad("missing '('"))?;
        if !trimmed.ends_with(')') {
            return Err(bad("missing closing ')'"));
        }
        let name = &trimmed[..open];
        let args: Vec<f64> = trimmed[open + 1..trimmed.len() - 1]
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad("parameters must be numbers"))?;
        if args.iter().any(|v| !v.is_finite()) {
            return Err(bad("parameters must be finite"));
        }
        let one = || -> Result<f64, RasterError> {
            if args.len() == 1 {
                Ok(args[0])
            } else {
                Err(bad("expected exactly one parameter"))
            }
        };
        match name {
            "rotate" => Ok(Self::Rotate(one()?)),
            "zoom" => {
                let f = one()?;
                if f <= 0.0 {
                    return Err(bad("zoom factor must be positive"));
                }
                Ok(Self::Zoom(f))
            }
            "shear" => {
                let deg = one()?;
                if deg.abs() >= 90.0 {
                    return Err(bad("shear angle must be within (-90, 90) degrees"));
                }
                Ok(Self::Shear(deg))
            }
            "shift" => {
                if args.len() != 2 {
                    return Err(bad("shift takes exactly two parameters (dx, dy)"));
                }
                Ok(Self::Shift(args[0], args[1]))
            }
            "swirl" => Ok(Self::Swirl(one()?)),
            _ => Err(bad("unknown TF kind")),
        }
    }

    /// Canonical name, stable across parse/format round trips; used as the
    /// registry name.
    pub fn name(&self) -> String {
        match self {
            Self::Rotate(deg) => format!("rotate({deg})"),
            Self::Zoom(f) => format!("zoom({f})"),
            Self::Shear(deg) => format!("shear({deg})"),
            Self::Shift(dx, dy) => format!("shift({dx},{dy})"),
            Self::Swirl(s) => format!("swirl({s})"),
        }
    }

    /// Applies this TF to an image.
    pub fn apply(&self, img: &GrayImage) -> GrayImage {
        match *self {
            Self::Rotate(deg) => {
                let t = deg.to_radians();
                // Inverse of a rotation by t is the rotation by -t.
                affine_warp(
                    img,
                    &[t.cos(), t.sin(), 0.0, -t.sin(), t.cos(), 0.0],
                )
            }
            Self::Zoom(f) => affine_warp(img, &[1.0 / f, 0.0, 0.0, 0.0, 1.0 / f, 0.0]),
            Self::Shear(deg) => {
                let t = deg.to_radians().tan();
                affine_warp(img, &[1.0, -t, 0.0, 0.0, 1.0, 0.0])
            }
            Self::Shift(dx, dy) => affine_warp(img, &[1.0, 0.0, -dx, 0.0, 1.0, -dy]),
            Self::Swirl(strength) => swirl(img, strength),
        }
    }
}

/// Center swirl: each output pixel rotates about the center by an angle that
/// falls off linearly from `strength` (at the center) to 0 (at the corner
/// radius). Shares the bilinear kernel with the affine TFs.
fn swirl(img: &GrayImage, strength: f64) -> GrayImage {
    assert!(strength.is_finite());
    if strength == 0.0 {
        return img.clone();
    }
    let cx = (img.width as f64 - 1.0) / 2.0;
    let cy = (img.height as f64 - 1.0) / 2.0;
    let rho_max = (cx * cx + cy * cy).sqrt();
    if rho_max == 0.0 {
        return img.clone();
    }
    let mut out = Vec::with_capacity(img.pixels.len());
    for row in 0..img.height {
        let y = row as f64 - cy;
        for col in 0..img.width {
            let x = col as f64 - cx;
            let rho = (x * x + y * y).sqrt();
            let angle = strength * (1.0 - rho / rho_max);
            let (sin, cos) = (-angle).sin_cos();
            let sx = cos * x - sin * y + cx;
            let sy = sin * x + cos * y + cy;
            out.push(sample_bilinear(img, sy, sx).clamp(0.0, 1.0));
        }
    }
    GrayImage {
        height: img.height,
        width: img.width,
        pixels: out,
    }
}

/// Parses a pipe-separated TF list like `rotate(2.5)|rotate(-2.5)|shift(1,0)`.
pub fn parse_tf_list(list: &str) -> Result<Vec<RasterTf>, RasterError> {
    let tfs: Vec<RasterTf> = list
        .split('|')
        .map(RasterTf::parse)
        .collect::<Result<_, _>>()?;
    if tfs.is_empty() {
        return Err(RasterError::BadTfSpec {
            spec: list.to_string(),
            reason: "the TF list is empty".to_string(),
        });
    }
    Ok(tfs)
}

/// Registers raster TFs for a fixed image shape. Each TF treats the flat
/// data point as an `height x width` image; the TFs themselves are
/// deterministic, so the random stream is untouched.
pub fn register_raster_tfs(
    registry: &mut TfRegistry,
    tfs: &[RasterTf],
    height: usize,
    width: usize,
) -> Result<(), RasterError> {
    for tf in tfs {
        let kind = tf.clone();
        registry
            .register(&tf.name(), move |x: &DataPoint, _: &mut RandomSource| {
                let img = GrayImage::from_point(x, height, width)
                    .expect("registry preserves pixel count and range");
                kind.apply(&img).to_point()
            })
            .map_err(|e| RasterError::BadTfSpec {
                spec: tf.name(),
                reason: e.to_string(),
            })?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// IDX I/O
// ---------------------------------------------------------------------------

fn read_u32_be(bytes: &[u8], at: usize, path: &str) -> Result<u32, RasterError> {
    let end = at + 4;
    if bytes.len() < end {
        return Err(RasterError::Format {
            path: path.to_string(),
            reason: "truncated header".to_string(),
        });
    }
    Ok(u32::from_be_bytes([
        bytes[at],
        bytes[at + 1],
        bytes[at + 2],
        bytes[at + 3],
    ]))
}

/// Reads just the magic number, for sniffing a file's IDX flavor.
pub fn read_idx_magic(path: &Path) -> Result<u32, RasterError> {
    let bytes = std::fs::read(path).map_err(|source| RasterError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_u32_be(&bytes, 0, &path.display().to_string())
}

/// Loads an IDX image stack: magic `0x00000803`, three big-endian u32 dims
/// (count, height, width), then row-major bytes mapped to `[0,1]` by `/255`.
pub fn load_idx_images(path: &Path) -> Result<Vec<GrayImage>, RasterError> {
    let display = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|source| RasterError::Io {
        path: display.clone(),
        source,
    })?;
    let magic = read_u32_be(&bytes, 0, &display)?;
    if magic != IDX_IMAGE_MAGIC {
        return Err(RasterError::Format {
            path: display,
            reason: format!("bad magic {magic:#010x}, expected {IDX_IMAGE_MAGIC:#010x}"),
        });
    }
    let count = read_u32_be(&bytes, 4, &display)? as usize;
    let height = read_u32_be(&bytes, 8, &display)? as usize;
    let width = read_u32_be(&bytes, 12, &display)? as usize;
    if height == 0 || width == 0 {
        return Err(RasterError::Format {
            path: display,
            reason: "image dimensions must be positive".to_string(),
        });
    }
    let total = count
        .checked_mul(height)
        .and_then(|v| v.checked_mul(width))
        .ok_or_else(|| RasterError::Format {
            path: display.clone(),
            reason: "dimension product overflows".to_string(),
        })?;
    let data = &bytes[16..];
    if data.len() != total {
        return Err(RasterError::Format {
            path: display,
            reason: format!("expected {total} pixel bytes, found {}", data.len()),
        });
    }
    Ok(data
        .chunks_exact(height * width)
        .map(|chunk| GrayImage {
            height,
            width,
            pixels: chunk.iter().map(|&b| b as f64 / 255.0).collect(),
        })
        .collect())
}

/// Saves an image stack in IDX format; pixels quantize to `round(p * 255)`.
/// All images must share one shape.
pub fn save_idx_images(images: &[GrayImage], path: &Path) -> Result<(), RasterError> {
    let display = path.display().to_string();
    let (height, width) = match images.first() {
        Some(img) => (img.height, img.width),
        None => (0, 0),
    };
    if images.iter().any(|i| i.height != height || i.width != width) {
        return Err(RasterError::Format {
            path: display,
            reason: "all images in a stack must share one shape".to_string(),
        });
    }
    let mut bytes = Vec::with_capacity(16 + images.len() * height * width);
    bytes.extend(IDX_IMAGE_MAGIC.to_be_bytes());
    bytes.extend((images.len() as u32).to_be_bytes());
    bytes.extend((height as u32).to_be_bytes());
    bytes.extend((width as u32).to_be_bytes());
    for img in images {
        bytes.extend(img.pixels.iter().map(|&p| (p * 255.0).round() as u8));
    }
    std::fs::write(path, bytes).map_err(|source| RasterError::Io {
        path: display,
        source,
    })
}

/// Loads an IDX label vector: magic `0x00000801`, one u32 count, raw bytes.
pub fn load_idx_labels(path: &Path) -> Result<Vec<u8>, RasterError> {
    let display = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|source| RasterError::Io {
        path: display.clone(),
        source,
    })?;
    let magic = read_u32_be(&bytes, 0, &display)?;
    if magic != IDX_LABEL_MAGIC {
        return Err(RasterError::Format {
            path: display,
            reason: format!("bad magic {magic:#010x}, expected {IDX_LABEL_MAGIC:#010x}"),
        });
    }
    let count = read_u32_be(&bytes, 4, &display)? as usize;
    let data = &bytes[8..];
    if data.len() != count {
        return Err(RasterError::Format {
            path: display,
            reason: format!("expected {count} label bytes, found {}", data.len()),
        });
    }
    Ok(data.to_vec())
}

/// Saves a label vector in IDX format.
pub fn save_idx_labels(labels: &[u8], path: &Path) -> Result<(), RasterError> {
    let mut bytes = Vec::with_capacity(8 + labels.len());
    bytes.extend(IDX_LABEL_MAGIC.to_be_bytes());
    bytes.extend((labels.len() as u32).to_be_bytes());
    bytes.extend(labels);
    std::fs::write(path, bytes).map_err(|source| RasterError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes one image as a binary PGM (P5), for quick visual inspection.
pub fn save_pgm(img: &GrayImage, path: &Path) -> Result<(), RasterError> {
    let mut bytes = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    bytes.extend(img.pixels.iter().map(|&p| (p * 255.0).round() as u8));
    std::fs::write(path, bytes).map_err(|source| RasterError::Io {
        path: path.display().to_string(),
        source,
    })
}
