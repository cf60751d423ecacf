//! Pixel covariance, duplicate-sample heatmaps and MSE.
//!
//! Scalar covariances combine the per-channel covariances with Rec. 709
//! luminance weights.

use crate::error::{Error, Result};
use crate::math::LUMINANCE;
use crate::render::{Image, NO_SAMPLE};

/// `K >= 2` images of identical size, with their per-pixel mean.
#[derive(Clone, Debug)]
pub struct ImageEnsemble {
    images: Vec<Image>,
    mean: Image,
}

impl ImageEnsemble {
    pub fn new(images: Vec<Image>) -> Result<Self> {
        if images.len() < 2 {
            return Err(Error::config(
                "K",
                format!("an ensemble needs at least 2 images, got {}", images.len()),
            ));
        }
        for img in &images {
            images[0].same_size(img)?;
            if img.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::config("ensemble", "images must be finite"));
            }
        }
        let mut mean = Image::new(images[0].width, images[0].height);
        for img in &images {
            for (m, v) in mean.data.iter_mut().zip(&img.data) {
                *m += *v;
            }
        }
        let k = images.len() as f64;
        for m in &mut mean.data {
            *m = *m / k;
        }
        Ok(ImageEnsemble { images, mean })
    }

    pub fn k(&self) -> usize {
        self.images.len()
    }

    pub fn width(&self) -> usize {
        self.mean.width
    }

    pub fn height(&self) -> usize {
        self.mean.height
    }

    pub fn mean(&self) -> &Image {
        &self.mean
    }

    pub fn images(&self) -> &[Image] {
        &self.images
    }

    /// Deviations from the mean, one plane per image and channel.
    fn deviations(&self) -> Vec<[Vec<f64>; 3]> {
        self.images
            .iter()
            .map(|img| {
                let plane = |c: usize| {
                    img.data
                        .iter()
                        .zip(&self.mean.data)
                        .map(|(v, m)| v[c] - m[c])
                        .collect::<Vec<f64>>()
                };
                [plane(0), plane(1), plane(2)]
            })
            .collect()
    }
}

/// Unbiased sample covariance between pixels `i` and `j` (row-major indices).
pub fn sample_covariance(ens: &ImageEnsemble, i: usize, j: usize) -> f64 {
    let k = ens.k() as f64;
    let (mi, mj) = (ens.mean.data[i], ens.mean.data[j]);
    let mut total = 0.0;
    for (c, weight) in LUMINANCE.iter().enumerate() {
        let s: f64 = ens
            .images
            .iter()
            .map(|img| (img.data[i][c] - mi[c]) * (img.data[j][c] - mj[c]))
            .sum();
        total += weight * s / (k - 1.0);
    }
    total
}

/// Box-averaged covariance for a set of radii.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceReport {
    pub radii: Vec<usize>,
    pub include_self: bool,
    /// One per-pixel map per radius.
    pub maps: Vec<Vec<f64>>,
    /// Image mean of each map.
    pub image_average: Vec<f64>,
}

impl CovarianceReport {
    pub fn average_at(&self, radius: usize) -> Option<f64> {
        self.radii
            .iter()
            .position(|&r| r == radius)
            .map(|i| self.image_average[i])
    }
}

/// Mean covariance between each pixel and the other pixels of its L-infinity
/// box of the given radius (clipped at the border), then averaged over the image.
pub fn box_avg_covariance(ens: &ImageEnsemble, radius: usize) -> CovarianceReport {
    covariance_report(ens, &[radius], false)
}

pub fn covariance_report(ens: &ImageEnsemble, radii: &[usize], include_self: bool) -> CovarianceReport {
    let (w, h) = (ens.width(), ens.height());
    let n = w * h;
    let k = ens.k() as f64;
    let devs = ens.deviations();
    let variance: Vec<f64> = (0..n)
        .map(|i| {
            let mut v = 0.0;
            for (c, weight) in LUMINANCE.iter().enumerate() {
                v += weight * devs.iter().map(|d| d[c][i] * d[c][i]).sum::<f64>() / (k - 1.0);
            }
            v
        })
        .collect();
    // summed-area table per image and channel
    let tables: Vec<[Vec<f64>; 3]> = devs
        .iter()
        .map(|d| {
            [
                summed_area(&d[0], w, h),
                summed_area(&d[1], w, h),
                summed_area(&d[2], w, h),
            ]
        })
        .collect();

    let mut maps = Vec::with_capacity(radii.len());
    let mut image_average = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut map = vec![0.0; n];
        for y in 0..h {
            let (y0, y1) = (y.saturating_sub(r), (y + r).min(h - 1));
            for x in 0..w {
                let (x0, x1) = (x.saturating_sub(r), (x + r).min(w - 1));
                let i = y * w + x;
                let mut sum = 0.0;
                for (d, t) in devs.iter().zip(&tables) {
                    for (c, weight) in LUMINANCE.iter().enumerate() {
                        sum += weight * d[c][i] * box_sum(&t[c], w, x0, y0, x1, y1);
                    }
                }
                sum /= k - 1.0;
                let mut count = ((x1 - x0 + 1) * (y1 - y0 + 1)) as f64;
                if !include_self {
                    sum -= variance[i];
                    count -= 1.0;
                }
                map[i] = if count > 0.0 { sum / count } else { 0.0 };
            }
        }
        image_average.push(map.iter().sum::<f64>() / n as f64);
        maps.push(map);
    }
    CovarianceReport {
        radii: radii.to_vec(),
        include_self,
        maps,
        image_average,
    }
}

/// Table with one extra row and column of zeros.
fn summed_area(plane: &[f64], w: usize, h: usize) -> Vec<f64> {
    let mut t = vec![0.0; (w + 1) * (h + 1)];
    for y in 0..h {
        let mut row = 0.0;
        for x in 0..w {
            row += plane[y * w + x];
            t[(y + 1) * (w + 1) + x + 1] = t[y * (w + 1) + x + 1] + row;
        }
    }
    t
}

fn box_sum(t: &[f64], w: usize, x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
    let s = w + 1;
    t[(y1 + 1) * s + x1 + 1] - t[y0 * s + x1 + 1] - t[(y1 + 1) * s + x0] + t[y0 * s + x0]
}

/// For each pixel, the number of other pixels in its `window x window`
/// neighborhood that hold the same sample id. The window spans offsets
/// `-window/2 ..= (window-1)/2` and is clipped at the border. Pixels without
/// a sample count as zero and match nothing.
pub fn duplicate_heatmap(ids: &[u64], width: usize, height: usize, window: usize) -> Result<Vec<u32>> {
    if ids.len() != width * height {
        return Err(Error::DimensionMismatch(width, height, ids.len(), 1));
    }
    let lo = (window / 2) as i64;
    let hi = (window as i64 - 1) / 2;
    let mut out = vec![0u32; ids.len()];
    for y in 0..height as i64 {
        for x in 0..width as i64 {
            let id = ids[(y * width as i64 + x) as usize];
            if id == NO_SAMPLE {
                continue;
            }
            let mut count = 0;
            for ny in (y - lo).max(0)..=(y + hi).min(height as i64 - 1) {
                for nx in (x - lo).max(0)..=(x + hi).min(width as i64 - 1) {
                    if (nx, ny) != (x, y) && ids[(ny * width as i64 + nx) as usize] == id {
                        count += 1;
                    }
                }
            }
            out[(y * width as i64 + x) as usize] = count;
        }
    }
    Ok(out)
}

pub fn mean_duplicates(ids: &[u64], width: usize, height: usize, window: usize) -> Result<f64> {
    let h = duplicate_heatmap(ids, width, height, window)?;
    Ok(h.iter().map(|&c| c as f64).sum::<f64>() / h.len() as f64)
}

/// Mean over pixels and channels of the squared difference.
pub fn mse(image: &Image, reference: &Image) -> Result<f64> {
    image.same_size(reference)?;
    let sum: f64 = image
        .data
        .iter()
        .zip(&reference.data)
        .map(|(a, b)| {
            let d = *a - *b;
            d.dot(d)
        })
        .sum();
    Ok(sum / (3 * image.len()) as f64)
}
