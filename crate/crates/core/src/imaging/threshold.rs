use super::{BinaryImage, Image, ImagingError};

/// Which side of the threshold counts as foreground.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    /// `pixel >= threshold`
    Bright,
    /// `pixel < threshold`
    Dark,
}

pub fn binarize_fixed(img: &Image, threshold: u8, polarity: Polarity) -> BinaryImage {
    let mask = img
        .pixels()
        .iter()
        .map(|&p| match polarity {
            Polarity::Bright => p >= threshold,
            Polarity::Dark => p < threshold,
        })
        .collect();
    BinaryImage {
        width: img.width(),
        height: img.height(),
        mask,
    }
}

/// Local mean thresholding: a pixel is foreground when it is at least the mean
/// of its `window`x`window` neighbourhood minus `offset_c`. Borders replicate
/// the edge pixels, so every window averages exactly `window²` samples.
///
/// Runs in O(1) per pixel from an integral image of the edge-padded frame.
pub fn binarize_adaptive(
    img: &Image,
    window: usize,
    offset_c: i32,
) -> Result<BinaryImage, ImagingError> {
    let (w, h) = (img.width(), img.height());
    if window < 3 || window.is_multiple_of(2) {
        return Err(ImagingError::EvenWindow(window));
    }
    if window > w.min(h) {
        return Err(ImagingError::WindowTooLarge {
            window,
            width: w,
            height: h,
        });
    }
    let r = window / 2;
    let (pw, ph) = (w + 2 * r, h + 2 * r);

    // integral[(y * (pw + 1)) + x] = sum of padded[0..y, 0..x]
    let stride = pw + 1;
    let mut integral = vec![0u64; stride * (ph + 1)];
    for py in 0..ph {
        let sy = py.saturating_sub(r).min(h - 1);
        let mut row_sum = 0u64;
        for px in 0..pw {
            let sx = px.saturating_sub(r).min(w - 1);
            row_sum += u64::from(img.get(sx, sy));
            integral[(py + 1) * stride + px + 1] = integral[py * stride + px + 1] + row_sum;
        }
    }

    let n = (window * window) as i64;
    let mut mask = Vec::with_capacity(w * h);
    for y in 0..h {
        // window in padded coordinates spans [y, y + window)
        let (top, bottom) = (y, y + window);
        for x in 0..w {
            let (left, right) = (x, x + window);
            let sum = integral[bottom * stride + right] + integral[top * stride + left]
                - integral[top * stride + right]
                - integral[bottom * stride + left];
            // p >= sum / n - c  <=>  p * n >= sum - c * n
            let lhs = i64::from(img.get(x, y)) * n;
            mask.push(lhs >= sum as i64 - i64::from(offset_c) * n);
        }
    }
    Ok(BinaryImage {
        width: w,
        height: h,
        mask,
    })
}
