use super::RgbImage;

/// 8-bit luminance plane, `round(0.299 R + 0.587 G + 0.114 B)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LumaPlane {
    pub width: usize,
    pub height: usize,
    pub values: Vec<u8>,
}

pub fn luma_plane(image: &RgbImage) -> LumaPlane {
    let values = image
        .pixels()
        .iter()
        .map(|&[r, g, b]| (0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b)).round() as u8)
        .collect();
    LumaPlane { width: image.width(), height: image.height(), values }
}

/// Summed-area tables of a luminance plane and of its squares.
///
/// Stored with a zero guard row and column, so a rectangle sum is four lookups.
#[derive(Debug, Clone)]
pub struct IntegralImage {
    width: usize,
    height: usize,
    sum: Vec<u64>,
    sq_sum: Vec<u64>,
}

impl IntegralImage {
    pub fn new(plane: &LumaPlane) -> Self {
        Self::from_values(plane.width, plane.height, &plane.values)
    }

    pub fn from_values(width: usize, height: usize, values: &[u8]) -> Self {
        assert_eq!(values.len(), width * height);
        let stride = width + 1;
        let mut sum = vec![0u64; stride * (height + 1)];
        let mut sq_sum = vec![0u64; stride * (height + 1)];
        for y in 0..height {
            let (mut row, mut row_sq) = (0u64, 0u64);
            for x in 0..width {
                let v = u64::from(values[y * width + x]);
                row += v;
                row_sq += v * v;
                let i = (y + 1) * stride + x + 1;
                sum[i] = sum[i - stride] + row;
                sq_sum[i] = sq_sum[i - stride] + row_sq;
            }
        }
        Self { width, height, sum, sq_sum }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Inclusive prefix sum `S[row, col]` over `[0..=row] x [0..=col]`.
    pub fn at(&self, row: usize, col: usize) -> u64 {
        self.sum[(row + 1) * (self.width + 1) + col + 1]
    }

    /// The inclusive table as rows, for inspection.
    pub fn rows(&self) -> Vec<Vec<u64>> {
        (0..self.height).map(|r| (0..self.width).map(|c| self.at(r, c)).collect()).collect()
    }

    #[inline]
    fn lookup(table: &[u64], stride: usize, x: usize, y: usize, w: usize, h: usize) -> u64 {
        let a = table[y * stride + x];
        let b = table[y * stride + x + w];
        let c = table[(y + h) * stride + x];
        let d = table[(y + h) * stride + x + w];
        d + a - b - c
    }

    /// Sum over the `w x h` rectangle whose top-left pixel is `(x, y)`.
    #[inline]
    pub fn rect_sum(&self, x: usize, y: usize, w: usize, h: usize) -> u64 {
        Self::lookup(&self.sum, self.width + 1, x, y, w, h)
    }

    #[inline]
    pub fn rect_sq_sum(&self, x: usize, y: usize, w: usize, h: usize) -> u64 {
        Self::lookup(&self.sq_sum, self.width + 1, x, y, w, h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn ones_and_singletons() {
        let ii = IntegralImage::from_values(3, 3, &[1; 9]);
        assert_eq!(ii.at(2, 2), 9);
        assert_eq!(IntegralImage::from_values(1, 1, &[200]).rows(), vec![vec![200]]);
    }

    #[test]
    fn every_rectangle_of_a_random_plane() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let values: Vec<u8> = (0..16).map(|_| rng.random()).collect();
        let ii = IntegralImage::from_values(4, 4, &values);
        let mut count = 0;
        for y in 0..4 {
            for x in 0..4 {
                for h in 1..=4 - y {
                    for w in 1..=4 - x {
                        let mut direct = 0u64;
                        let mut direct_sq = 0u64;
                        for yy in y..y + h {
                            for xx in x..x + w {
                                let v = u64::from(values[yy * 4 + xx]);
                                direct += v;
                                direct_sq += v * v;
                            }
                        }
                        assert_eq!(ii.rect_sum(x, y, w, h), direct);
                        assert_eq!(ii.rect_sq_sum(x, y, w, h), direct_sq);
                        count += 1;
                    }
                }
            }
        }
        assert_eq!(count, 100);
    }

    #[test]
    fn luma_weights() {
        let img = RgbImage::new(3, 1, vec![[255, 0, 0], [0, 255, 0], [0, 0, 255]]).unwrap();
        assert_eq!(luma_plane(&img).values, vec![76, 150, 29]);
    }
}
