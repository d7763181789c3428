//! Converts a few colors to hexcone HSV and averages a small gradient image.
//!
//! ```bash
//! cargo run -p depscreen --example hsv
//! ```

use depscreen::imaging::{hsv_to_rgb, mean_hsv, rgb_to_hsv, RgbImage};

fn main() {
    for (name, rgb) in [("red", (255, 0, 0)), ("teal", (0, 128, 128)), ("grey", (90, 90, 90)), ("sky", (135, 206, 235))] {
        let hsv = rgb_to_hsv(rgb.0, rgb.1, rgb.2);
        println!(
            "{name:<5} {rgb:?} -> h {:.3} s {:.3} v {:.3} -> {:?}",
            hsv.hue,
            hsv.saturation,
            hsv.value,
            hsv_to_rgb(hsv)
        );
    }

    // Blue fading to black, left to right.
    let image = RgbImage::from_fn(64, 16, |x, _| [0, 0, (255 - 4 * x) as u8]);
    let m = mean_hsv(&image);
    println!("gradient: mean hue {:.3}, saturation {:.3}, brightness {:.3}", m.mean_hue, m.mean_saturation, m.mean_brightness);
}
