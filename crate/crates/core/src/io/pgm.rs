//! Binary PGM (P5), 8-bit, row-major.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::ImageGrid;

pub fn encode(img: &ImageGrid) -> Result<Vec<u8>> {
    if img.channels != 1 {
        return Err(Error::ShapeError(format!("PGM needs one channel, image has {}", img.channels)));
    }
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.data);
    Ok(out)
}

pub fn write(img: &ImageGrid, path: &Path) -> Result<()> {
    std::fs::write(path, encode(img)?).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<ImageGrid> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<ImageGrid> {
    // Header: magic, width, height, maxval separated by whitespace, with
    // '#' comments running to end of line; one whitespace byte before data.
    let mut pos = 0usize;
    let mut line = 1usize;
    let mut tokens = Vec::with_capacity(4);
    while tokens.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                if bytes[pos] == b'\n' {
                    line += 1;
                }
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::parse(path, line, "truncated PGM header"));
        }
        tokens.push((String::from_utf8_lossy(&bytes[start..pos]).into_owned(), line));
    }
    if tokens[0].0 != "P5" {
        return Err(Error::parse(path, tokens[0].1, format!("expected P5 magic, found {:?}", tokens[0].0)));
    }
    let num = |i: usize| -> Result<usize> {
        tokens[i]
            .0
            .parse()
            .map_err(|_| Error::parse(path, tokens[i].1, format!("bad header field {:?}", tokens[i].0)))
    };
    let (w, h, maxval) = (num(1)?, num(2)?, num(3)?);
    if maxval != 255 {
        return Err(Error::parse(path, tokens[3].1, format!("only 8-bit PGM supported, maxval {maxval}")));
    }
    pos += 1;
    let data = bytes.get(pos..).unwrap_or(&[]);
    if data.len() != w * h {
        return Err(Error::parse(
            path,
            line,
            format!("expected {} pixel bytes, found {}", w * h, data.len()),
        ));
    }
    ImageGrid::from_data(w, h, 1, data.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_bytes() {
        let img = ImageGrid::from_data(3, 2, 1, vec![0, 255, 7, 9, 10, 11]).unwrap();
        let bytes = encode(&img).unwrap();
        assert_eq!(&bytes[..11], b"P5\n3 2\n255\n");
        assert_eq!(decode(&bytes, Path::new("m.pgm")).unwrap(), img);
    }

    #[test]
    fn header_comments_and_errors() {
        let mut bytes = b"P5\n# made by hand\n2 1\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2]);
        assert_eq!(decode(&bytes, Path::new("m.pgm")).unwrap().data, vec![1, 2]);
        assert!(decode(b"P2\n1 1\n255\n0", Path::new("m.pgm")).is_err());
        assert!(decode(b"P5\n4 4\n255\n\x00", Path::new("m.pgm")).is_err());
        assert!(encode(&ImageGrid::new(2, 2, 3)).is_err());
    }
}
