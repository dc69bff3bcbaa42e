use image::imageops::{self, FilterType};

use crate::encode::PseudoRgbImage;

/// Downsamples to `side × side` and concatenates the R, G and B planes,
/// scaled to `[0, 1]`. Length is `3 · side²`.
pub fn featurize(img: &PseudoRgbImage, side: usize) -> Vec<f64> {
    let s = side as u32;
    let small = if img.pixels.dimensions() == (s, s) {
        img.pixels.clone()
    } else {
        imageops::resize(&img.pixels, s, s, FilterType::Triangle)
    };
    let plane = side * side;
    let mut out = vec![0.0; 3 * plane];
    for (i, px) in small.pixels().enumerate() {
        for c in 0..3 {
            out[c * plane + i] = px.0[c] as f64 / 255.0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::RgbImage;

    fn img(pixels: RgbImage) -> PseudoRgbImage {
        PseudoRgbImage {
            pixels,
            provenance: None,
        }
    }

    #[test]
    fn dimension_and_zero_image() {
        let z = img(RgbImage::new(256, 256));
        let f = featurize(&z, 32);
        assert_eq!(f.len(), 3072);
        assert!(f.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn flip_permutes_columns() {
        let src = RgbImage::from_fn(224, 224, |x, y| {
            image::Rgb([(x * 7 % 256) as u8, (y * 3 % 256) as u8, ((x * y) % 251) as u8])
        });
        let mut flipped = src.clone();
        imageops::flip_horizontal_in_place(&mut flipped);
        let side = 32;
        let a = featurize(&img(src), side);
        let b = featurize(&img(flipped), side);
        // explicit permutation: (c, r, col) -> (c, r, side - 1 - col)
        for c in 0..3 {
            for r in 0..side {
                for col in 0..side {
                    let i = c * side * side + r * side + col;
                    let j = c * side * side + r * side + (side - 1 - col);
                    assert_eq!(a[i], b[j], "{c} {r} {col}");
                }
            }
        }
    }
}
