//! JPEG-like baseline codec.
//!
//! Payload layout: one quality byte, then one bit-packed plane per
//! component (Y, or Y/Cb/Cr for colour input, no chroma subsampling).
//! Blocks are 8x8 in raster order, edge-replicated at the borders. Each
//! block starts with a flag bit: `0` means "DC unchanged from the previous
//! block and every AC coefficient zero", `1` means a coded block: DC
//! difference category + magnitude bits, then zig-zag AC run/size symbols
//! with ZRL and EOB. Prefix codes are the Annex K typical tables (luma for
//! Y, chroma for Cb/Cr); they are fixed and versioned by
//! [`ENTROPY_TABLES_VERSION`] so bpp values are reproducible bit-exactly.

use std::sync::OnceLock;

use super::bits::{category, get_magnitude, put_magnitude, BitReader, BitWriter, PrefixCode};
use super::prompt::{CodecId, EncodedPrompt};
use super::{Image, ImageError};

pub const ENTROPY_TABLES_VERSION: &str = "annex-k-typical/skip-flag/v1";

const BASE_LUMA_Q: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
];

const BASE_CHROMA_Q: [u16; 64] = [
    17, 18, 24, 47, 99, 99, 99, 99, //
    18, 21, 26, 66, 99, 99, 99, 99, //
    24, 26, 56, 99, 99, 99, 99, 99, //
    47, 66, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99,
];

/// Zig-zag scan position -> natural (row-major) index.
pub(crate) const ZIGZAG: [usize; 64] = [
    0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5, 12, 19, 26, 33, 40, 48, 41, 34, 27, 20,
    13, 6, 7, 14, 21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51, 58, 59,
    52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63,
];

const LUMA_DC_BITS: [u8; 16] = [0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0];
const LUMA_AC_BITS: [u8; 16] = [0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 0x7d];
const CHROMA_DC_BITS: [u8; 16] = [0, 3, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0];
const CHROMA_AC_BITS: [u8; 16] = [0, 2, 1, 2, 4, 4, 3, 4, 7, 5, 4, 4, 0, 1, 2, 0x77];
const DC_VALUES: [u8; 12] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11];

const LUMA_AC_VALUES: [u8; 162] = [
    0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12, 0x21, 0x31, 0x41, 0x06, 0x13, 0x51, 0x61, 0x07,
    0x22, 0x71, 0x14, 0x32, 0x81, 0x91, 0xA1, 0x08, 0x23, 0x42, 0xB1, 0xC1, 0x15, 0x52, 0xD1, 0xF0,
    0x24, 0x33, 0x62, 0x72, 0x82, 0x09, 0x0A, 0x16, 0x17, 0x18, 0x19, 0x1A, 0x25, 0x26, 0x27, 0x28,
    0x29, 0x2A, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3A, 0x43, 0x44, 0x45, 0x46, 0x47, 0x48, 0x49,
    0x4A, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59, 0x5A, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69,
    0x6A, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79, 0x7A, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89,
    0x8A, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9A, 0xA2, 0xA3, 0xA4, 0xA5, 0xA6, 0xA7,
    0xA8, 0xA9, 0xAA, 0xB2, 0xB3, 0xB4, 0xB5, 0xB6, 0xB7, 0xB8, 0xB9, 0xBA, 0xC2, 0xC3, 0xC4, 0xC5,
    0xC6, 0xC7, 0xC8, 0xC9, 0xCA, 0xD2, 0xD3, 0xD4, 0xD5, 0xD6, 0xD7, 0xD8, 0xD9, 0xDA, 0xE1, 0xE2,
    0xE3, 0xE4, 0xE5, 0xE6, 0xE7, 0xE8, 0xE9, 0xEA, 0xF1, 0xF2, 0xF3, 0xF4, 0xF5, 0xF6, 0xF7, 0xF8,
    0xF9, 0xFA,
];

const CHROMA_AC_VALUES: [u8; 162] = [
    0x00, 0x01, 0x02, 0x03, 0x11, 0x04, 0x05, 0x21, 0x31, 0x06, 0x12, 0x41, 0x51, 0x07, 0x61, 0x71,
    0x13, 0x22, 0x32, 0x81, 0x08, 0x14, 0x42, 0x91, 0xA1, 0xB1, 0xC1, 0x09, 0x23, 0x33, 0x52, 0xF0,
    0x15, 0x62, 0x72, 0xD1, 0x0A, 0x16, 0x24, 0x34, 0xE1, 0x25, 0xF1, 0x17, 0x18, 0x19, 0x1A, 0x26,
    0x27, 0x28, 0x29, 0x2A, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3A, 0x43, 0x44, 0x45, 0x46, 0x47, 0x48,
    0x49, 0x4A, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59, 0x5A, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68,
    0x69, 0x6A, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79, 0x7A, 0x82, 0x83, 0x84, 0x85, 0x86, 0x87,
    0x88, 0x89, 0x8A, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9A, 0xA2, 0xA3, 0xA4, 0xA5,
    0xA6, 0xA7, 0xA8, 0xA9, 0xAA, 0xB2, 0xB3, 0xB4, 0xB5, 0xB6, 0xB7, 0xB8, 0xB9, 0xBA, 0xC2, 0xC3,
    0xC4, 0xC5, 0xC6, 0xC7, 0xC8, 0xC9, 0xCA, 0xD2, 0xD3, 0xD4, 0xD5, 0xD6, 0xD7, 0xD8, 0xD9, 0xDA,
    0xE2, 0xE3, 0xE4, 0xE5, 0xE6, 0xE7, 0xE8, 0xE9, 0xEA, 0xF2, 0xF3, 0xF4, 0xF5, 0xF6, 0xF7, 0xF8,
    0xF9, 0xFA,
];

const EOB: u8 = 0x00;
const ZRL: u8 = 0xF0;
/// Largest AC magnitude the typical tables can express (size 10).
const AC_LIMIT: i32 = 1023;

pub(crate) struct Tables {
    pub luma_dc: PrefixCode,
    pub luma_ac: PrefixCode,
    pub chroma_dc: PrefixCode,
    pub chroma_ac: PrefixCode,
}

pub(crate) fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| Tables {
        luma_dc: PrefixCode::new(&LUMA_DC_BITS, &DC_VALUES),
        luma_ac: PrefixCode::new(&LUMA_AC_BITS, &LUMA_AC_VALUES),
        chroma_dc: PrefixCode::new(&CHROMA_DC_BITS, &DC_VALUES),
        chroma_ac: PrefixCode::new(&CHROMA_AC_BITS, &CHROMA_AC_VALUES),
    })
}

/// IJG quality scaling of a base table.
fn scaled_table(base: &[u16; 64], quality: u32) -> [f64; 64] {
    let scale = if quality < 50 {
        5000 / quality
    } else {
        200 - 2 * quality
    };
    let mut out = [0.0; 64];
    for (o, &b) in out.iter_mut().zip(base) {
        *o = ((b as u32 * scale + 50) / 100).clamp(1, 255) as f64;
    }
    out
}

fn dct_basis() -> &'static [[f64; 8]; 8] {
    static BASIS: OnceLock<[[f64; 8]; 8]> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut t = [[0.0; 8]; 8];
        for (u, row) in t.iter_mut().enumerate() {
            let cu = if u == 0 {
                std::f64::consts::FRAC_1_SQRT_2
            } else {
                1.0
            };
            for (x, v) in row.iter_mut().enumerate() {
                *v = 0.5
                    * cu
                    * (((2 * x + 1) as f64 * u as f64 * std::f64::consts::PI) / 16.0).cos();
            }
        }
        t
    })
}

/// Orthonormal 2-D DCT-II of a row-major 8x8 block.
pub(crate) fn fdct(block: &[f64; 64]) -> [f64; 64] {
    let t = dct_basis();
    let mut tmp = [0.0; 64];
    for y in 0..8 {
        for u in 0..8 {
            tmp[y * 8 + u] = (0..8).map(|x| t[u][x] * block[y * 8 + x]).sum();
        }
    }
    let mut out = [0.0; 64];
    for v in 0..8 {
        for u in 0..8 {
            out[v * 8 + u] = (0..8).map(|y| t[v][y] * tmp[y * 8 + u]).sum();
        }
    }
    out
}

pub(crate) fn idct(coef: &[f64; 64]) -> [f64; 64] {
    let t = dct_basis();
    let mut tmp = [0.0; 64];
    for v in 0..8 {
        for x in 0..8 {
            tmp[v * 8 + x] = (0..8).map(|u| t[u][x] * coef[v * 8 + u]).sum();
        }
    }
    let mut out = [0.0; 64];
    for y in 0..8 {
        for x in 0..8 {
            out[y * 8 + x] = (0..8).map(|v| t[v][y] * tmp[v * 8 + x]).sum();
        }
    }
    out
}

/// Splits an image into component planes: Y only, or JFIF Y/Cb/Cr.
pub(crate) fn to_planes(image: &Image) -> Vec<Vec<f64>> {
    let s = image.samples();
    if image.channels() == 1 {
        return vec![s.iter().map(|&v| v as f64).collect()];
    }
    let n = image.pixel_count();
    let mut planes = vec![
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    ];
    for p in s.chunks_exact(3) {
        let (r, g, b) = (p[0] as f64, p[1] as f64, p[2] as f64);
        planes[0].push(0.299 * r + 0.587 * g + 0.114 * b);
        planes[1].push(-0.168736 * r - 0.331264 * g + 0.5 * b + 128.0);
        planes[2].push(0.5 * r - 0.418688 * g - 0.081312 * b + 128.0);
    }
    planes
}

/// Inverse of [`to_planes`], rounding and clamping to 8 bits.
pub(crate) fn from_planes(
    width: usize,
    height: usize,
    planes: &[Vec<f64>],
) -> Result<Image, ImageError> {
    let q = |v: f64| v.round().clamp(0.0, 255.0) as u8;
    if planes.len() == 1 {
        return Image::new(width, height, 1, planes[0].iter().map(|&v| q(v)).collect());
    }
    let n = width * height;
    let mut samples = Vec::with_capacity(n * 3);
    for i in 0..n {
        let (y, cb, cr) = (planes[0][i], planes[1][i] - 128.0, planes[2][i] - 128.0);
        samples.push(q(y + 1.402 * cr));
        samples.push(q(y - 0.344136 * cb - 0.714136 * cr));
        samples.push(q(y + 1.772 * cb));
    }
    Image::new(width, height, 3, samples)
}

pub fn jpeg_like_encode(image: &Image, quality: u32) -> Result<EncodedPrompt, ImageError> {
    if !(1..=100).contains(&quality) {
        return Err(ImageError::QualityOutOfRange(quality));
    }
    let (w, h) = (image.width(), image.height());
    let (bw, bh) = (w.div_ceil(8), h.div_ceil(8));
    let tabs = tables();
    let mut out = BitWriter::with_prefix(vec![quality as u8]);

    for (ci, plane) in to_planes(image).iter().enumerate() {
        let (qt, dc_code, ac_code) = if ci == 0 {
            (
                scaled_table(&BASE_LUMA_Q, quality),
                &tabs.luma_dc,
                &tabs.luma_ac,
            )
        } else {
            (
                scaled_table(&BASE_CHROMA_Q, quality),
                &tabs.chroma_dc,
                &tabs.chroma_ac,
            )
        };
        let mut prev_dc = 0i32;
        for by in 0..bh {
            for bx in 0..bw {
                let mut block = [0.0; 64];
                for y in 0..8 {
                    let sy = (by * 8 + y).min(h - 1);
                    for x in 0..8 {
                        let sx = (bx * 8 + x).min(w - 1);
                        block[y * 8 + x] = plane[sy * w + sx] - 128.0;
                    }
                }
                let coef = fdct(&block);
                let mut zz = [0i32; 64];
                for (k, &nat) in ZIGZAG.iter().enumerate() {
                    zz[k] = ((coef[nat] / qt[nat]).round() as i32).clamp(-AC_LIMIT, AC_LIMIT);
                }
                zz[0] = ((coef[0] / qt[0]).round() as i32).clamp(-2047, 2047);

                let diff = zz[0] - prev_dc;
                prev_dc = zz[0];
                if diff == 0 && zz[1..].iter().all(|&c| c == 0) {
                    out.put(0, 1);
                    continue;
                }
                out.put(1, 1);
                let cat = category(diff);
                dc_code.put(&mut out, cat as u8);
                put_magnitude(&mut out, diff, cat);

                let mut run = 0u32;
                for &c in &zz[1..] {
                    if c == 0 {
                        run += 1;
                        continue;
                    }
                    while run > 15 {
                        ac_code.put(&mut out, ZRL);
                        run -= 16;
                    }
                    let cat = category(c);
                    ac_code.put(&mut out, ((run << 4) | cat) as u8);
                    put_magnitude(&mut out, c, cat);
                    run = 0;
                }
                if run > 0 {
                    ac_code.put(&mut out, EOB);
                }
            }
        }
    }

    EncodedPrompt::new(CodecId::JpegLike, out.finish(), 0, w, h, image.channels())
}

pub fn jpeg_like_decode(prompt: &EncodedPrompt) -> Result<Image, ImageError> {
    if prompt.codec() != CodecId::JpegLike {
        return Err(ImageError::WrongCodec {
            expected: "jpeg-like",
            found: prompt.codec(),
        });
    }
    let payload = prompt.payload();
    let quality = *payload.first().ok_or(ImageError::CorruptPayload {
        offset: 0,
        reason: "missing quality byte".into(),
    })? as u32;
    if !(1..=100).contains(&quality) {
        return Err(ImageError::CorruptPayload {
            offset: 0,
            reason: format!("quality byte {quality} outside 1..=100"),
        });
    }
    let (w, h, channels) = (prompt.width(), prompt.height(), prompt.channels());
    let (bw, bh) = (w.div_ceil(8), h.div_ceil(8));
    let tabs = tables();
    let mut r = BitReader::new(&payload[1..]);
    // Offsets reported by the reader are relative to the bitstream; shift
    // them past the quality byte.
    let shift = |e: ImageError| match e {
        ImageError::CorruptPayload { offset, reason } => ImageError::CorruptPayload {
            offset: offset + 1,
            reason,
        },
        other => other,
    };

    let mut planes = Vec::with_capacity(channels);
    for ci in 0..channels {
        let (qt, dc_code, ac_code) = if ci == 0 {
            (
                scaled_table(&BASE_LUMA_Q, quality),
                &tabs.luma_dc,
                &tabs.luma_ac,
            )
        } else {
            (
                scaled_table(&BASE_CHROMA_Q, quality),
                &tabs.chroma_dc,
                &tabs.chroma_ac,
            )
        };
        let mut plane = vec![0.0; w * h];
        let mut prev_dc = 0i32;
        for by in 0..bh {
            for bx in 0..bw {
                let mut zz = [0i32; 64];
                if r.bit().map_err(shift)? == 0 {
                    zz[0] = prev_dc;
                } else {
                    let cat = dc_code.get(&mut r).map_err(shift)? as u32;
                    if cat > 11 {
                        return Err(shift(r.corrupt(format!("DC category {cat}"))));
                    }
                    zz[0] = prev_dc + get_magnitude(&mut r, cat).map_err(shift)?;
                    prev_dc = zz[0];
                    let mut k = 1;
                    while k < 64 {
                        let sym = ac_code.get(&mut r).map_err(shift)?;
                        if sym == EOB {
                            break;
                        }
                        if sym == ZRL {
                            k += 16;
                            continue;
                        }
                        k += (sym >> 4) as usize;
                        let cat = (sym & 0x0f) as u32;
                        if k >= 64 {
                            return Err(shift(r.corrupt("AC run past end of block")));
                        }
                        zz[k] = get_magnitude(&mut r, cat).map_err(shift)?;
                        k += 1;
                    }
                    if k > 64 {
                        return Err(shift(r.corrupt("zero run past end of block")));
                    }
                }
                let mut coef = [0.0; 64];
                for (k, &nat) in ZIGZAG.iter().enumerate() {
                    coef[nat] = zz[k] as f64 * qt[nat];
                }
                let px = idct(&coef);
                for y in 0..8 {
                    let sy = by * 8 + y;
                    if sy >= h {
                        break;
                    }
                    for x in 0..8 {
                        let sx = bx * 8 + x;
                        if sx >= w {
                            break;
                        }
                        plane[sy * w + sx] = px[y * 8 + x] + 128.0;
                    }
                }
            }
        }
        planes.push(plane);
    }
    r.expect_end().map_err(shift)?;
    from_planes(w, h, &planes)
}
