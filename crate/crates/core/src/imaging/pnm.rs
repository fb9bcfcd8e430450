//! Binary PGM (P5) and PPM (P6) with maxval 255.

use std::io::{Read, Write};

use super::{Image, ImageError};

pub fn write_pnm<W: Write>(image: &Image, mut out: W) -> Result<(), ImageError> {
    let magic = if image.channels() == 1 { "P5" } else { "P6" };
    write!(out, "{magic}\n{} {}\n255\n", image.width(), image.height())?;
    out.write_all(image.samples())?;
    Ok(())
}

pub fn read_pnm<R: Read>(mut input: R) -> Result<Image, ImageError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let mut pos = 0;

    let token = |pos: &mut usize| -> Result<String, ImageError> {
        loop {
            match bytes.get(*pos) {
                Some(b'#') => {
                    while bytes.get(*pos).is_some_and(|&b| b != b'\n') {
                        *pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => *pos += 1,
                Some(_) => break,
                None => return Err(ImageError::Pnm("truncated header".into())),
            }
        }
        let start = *pos;
        while bytes.get(*pos).is_some_and(|b| !b.is_ascii_whitespace()) {
            *pos += 1;
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };

    let channels = match token(&mut pos)?.as_str() {
        "P5" => 1,
        "P6" => 3,
        other => return Err(ImageError::Pnm(format!("unsupported magic `{other}`"))),
    };
    let mut number = |what: &str| -> Result<usize, ImageError> {
        let t = token(&mut pos)?;
        t.parse()
            .map_err(|_| ImageError::Pnm(format!("bad {what} `{t}`")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if maxval != 255 {
        return Err(ImageError::Pnm(format!(
            "maxval {maxval} unsupported (need 255)"
        )));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let need = width * height * channels;
    let raster = bytes
        .get(pos..pos + need)
        .ok_or_else(|| ImageError::Pnm(format!("raster needs {need} bytes")))?;
    Image::new(width, height, channels, raster.to_vec())
}
