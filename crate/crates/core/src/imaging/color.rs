//! Hexcone HSV conversion and per-image color statistics.
//!
//! Hue is reported on `[0, 1)` (degrees / 360) and averaged linearly as a
//! scalar. Hue is circular, so a photo mixing deep reds (hue near 0) with
//! magentas (hue near 1) averages to a mid-spectrum value. The scalar mean
//! treats hue as a red-to-blue axis, which is how the downstream models read it.

use serde::{Deserialize, Serialize};

use super::RgbImage;

/// A color in the hexcone HSV model. All components lie in `[0, 1]`, hue in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hsv {
    pub hue: f64,
    pub saturation: f64,
    pub value: f64,
}

/// Converts 8-bit RGB channels to HSV.
///
/// Achromatic pixels (max == min) get hue 0, and black gets saturation 0.
pub fn rgb_to_hsv(r: u8, g: u8, b: u8) -> Hsv {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let value = f64::from(max) / 255.0;
    if max == 0 {
        return Hsv { hue: 0.0, saturation: 0.0, value };
    }
    let delta = f64::from(max - min);
    let saturation = delta / f64::from(max);
    if max == min {
        return Hsv { hue: 0.0, saturation, value };
    }
    let (r, g, b) = (f64::from(r), f64::from(g), f64::from(b));
    let sector = if max as f64 == r {
        let h = (g - b) / delta;
        if h < 0.0 {
            h + 6.0
        } else {
            h
        }
    } else if max as f64 == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    Hsv { hue: sector / 6.0, saturation, value }
}

/// Inverse of [`rgb_to_hsv`], rounding to the nearest channel value.
pub fn hsv_to_rgb(hsv: Hsv) -> (u8, u8, u8) {
    let v = hsv.value * 255.0;
    let c = hsv.value * hsv.saturation * 255.0;
    let h = (hsv.hue.rem_euclid(1.0)) * 6.0;
    let x = c * (1.0 - ((h % 2.0) - 1.0).abs());
    let m = v - c;
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let q = |ch: f64| (ch + m).round().clamp(0.0, 255.0) as u8;
    (q(r), q(g), q(b))
}

/// Per-image means of hue, saturation and value (brightness).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanHsv {
    pub mean_hue: f64,
    pub mean_saturation: f64,
    pub mean_brightness: f64,
}

pub fn mean_hsv(image: &RgbImage) -> MeanHsv {
    let (mut h, mut s, mut v) = (0.0, 0.0, 0.0);
    for px in image.pixels() {
        let hsv = rgb_to_hsv(px[0], px[1], px[2]);
        h += hsv.hue;
        s += hsv.saturation;
        v += hsv.value;
    }
    let n = image.pixels().len() as f64;
    MeanHsv { mean_hue: h / n, mean_saturation: s / n, mean_brightness: v / n }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn primaries() {
        assert_eq!(rgb_to_hsv(255, 0, 0), Hsv { hue: 0.0, saturation: 1.0, value: 1.0 });
        let blue = rgb_to_hsv(0, 0, 255);
        assert_abs_diff_eq!(blue.hue, 2.0 / 3.0, epsilon = 1e-12);
        assert_eq!((blue.saturation, blue.value), (1.0, 1.0));
    }

    #[test]
    fn gray_has_canonical_hue() {
        let g = rgb_to_hsv(128, 128, 128);
        assert_eq!(g.hue, 0.0);
        assert_eq!(g.saturation, 0.0);
        assert_abs_diff_eq!(g.value, 0.50196, epsilon = 1e-5);
        assert_eq!(rgb_to_hsv(0, 0, 0), Hsv { hue: 0.0, saturation: 0.0, value: 0.0 });
    }

    #[test]
    fn hue_stays_below_one() {
        assert!(rgb_to_hsv(255, 0, 1).hue < 1.0);
        assert!(rgb_to_hsv(255, 254, 255).hue < 1.0);
    }

    #[test]
    fn means() {
        let red = RgbImage::from_fn(4, 3, |_, _| [255, 0, 0]);
        let m = mean_hsv(&red);
        assert_eq!((m.mean_hue, m.mean_saturation, m.mean_brightness), (0.0, 1.0, 1.0));

        let two = RgbImage::new(2, 1, vec![[255, 0, 0], [0, 0, 255]]).unwrap();
        assert_abs_diff_eq!(mean_hsv(&two).mean_hue, 1.0 / 3.0, epsilon = 1e-12);

        let black = RgbImage::from_fn(5, 5, |_, _| [0, 0, 0]);
        let m = mean_hsv(&black);
        assert_eq!((m.mean_hue, m.mean_saturation, m.mean_brightness), (0.0, 0.0, 0.0));
    }
}
