//! Amplification-factor scans of the RKL/RKC schemes over the complex plane.
//!
//! The amplification factor is obtained by running the stage recursion on
//! the scalar test problem `u' = z u`, so the scan exercises exactly the
//! arithmetic of [`crate::rkl::rkl_step`].

use crate::error::{Error, Result};
use crate::poly::Family;
use crate::rkl::SchemeCoefficients;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const DEFAULT_NX: usize = 2000;
pub const DEFAULT_NY: usize = 1000;

/// `R(z)` for the scheme with coefficients `c`, where `z = k * lambda`.
pub fn amplification(c: &SchemeCoefficients, z: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let m0 = z;
    let mut prev2 = one;
    let mut prev = one + c.lambda_tilde[1] * m0;
    for eta in 2..=c.stages {
        let lam = c.lambda[eta];
        let nu = c.nu[eta];
        let cur = lam * prev
            + nu * prev2
            + (1.0 - lam - nu) * one
            + c.lambda_tilde[eta] * z * prev
            + c.gamma_tilde[eta] * m0;
        prev2 = prev;
        prev = cur;
    }
    prev
}

/// Rectangle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Window {
    fn validate(&self) -> Result<()> {
        if self.re_min < self.re_max && self.im_min < self.im_max {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("empty scan window {self:?}")))
        }
    }
}

/// Damping raster over a window, sampled at cell centres.
///
/// Rows run along the imaginary axis from `im_min` upward; `damping[j * nx + i]`
/// belongs to cell column `i`, row `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionScan {
    pub family: Family,
    pub stages: usize,
    pub shift: f64,
    pub window: Window,
    pub nx: usize,
    pub ny: usize,
    pub damping: Vec<f64>,
    pub stable: Vec<bool>,
}

impl RegionScan {
    pub fn dx(&self) -> f64 {
        (self.window.re_max - self.window.re_min) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.window.im_max - self.window.im_min) / self.ny as f64
    }

    /// Centre of cell `(i, j)`.
    pub fn point(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(
            self.window.re_min + (i as f64 + 0.5) * self.dx(),
            self.window.im_min + (j as f64 + 0.5) * self.dy(),
        )
    }

    /// Cells in row-major order as `(z, |R(z)|, stable)`.
    pub fn cells(&self) -> impl Iterator<Item = (Complex64, f64, bool)> + '_ {
        (0..self.ny).flat_map(move |j| {
            (0..self.nx).map(move |i| {
                let idx = j * self.nx + i;
                (self.point(i, j), self.damping[idx], self.stable[idx])
            })
        })
    }

    /// Whether a stable cell lies on the window edge away from the origin.
    fn touches_edge(&self) -> Option<&'static str> {
        let near_origin = |z: Complex64| {
            z.re.abs() <= 0.01 * (self.window.re_max - self.window.re_min)
                && z.im.abs() <= 0.01 * (self.window.im_max - self.window.im_min)
        };
        let hit = |i: usize, j: usize| self.stable[j * self.nx + i] && !near_origin(self.point(i, j));
        if (0..self.nx).any(|i| hit(i, self.ny - 1) || hit(i, 0)) {
            return Some("imaginary");
        }
        if (0..self.ny).any(|j| hit(0, j) || hit(self.nx - 1, j)) {
            return Some("real");
        }
        None
    }
}

/// Scans `|R(z)|` on an `nx` by `ny` raster of `window`.
pub fn scan(c: &SchemeCoefficients, window: Window, nx: usize, ny: usize) -> Result<RegionScan> {
    window.validate()?;
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument("scan resolution must be positive".into()));
    }
    let dx = (window.re_max - window.re_min) / nx as f64;
    let dy = (window.im_max - window.im_min) / ny as f64;
    let damping: Vec<f64> = (0..ny)
        .into_par_iter()
        .flat_map_iter(|j| {
            let im = window.im_min + (j as f64 + 0.5) * dy;
            (0..nx).map(move |i| {
                let re = window.re_min + (i as f64 + 0.5) * dx;
                amplification(c, Complex64::new(re, im)).norm()
            })
        })
        .collect();
    let stable = damping.iter().map(|d| *d <= 1.0).collect();
    Ok(RegionScan {
        family: c.family,
        stages: c.stages,
        shift: c.shift,
        window,
        nx,
        ny,
        damping,
        stable,
    })
}

/// Window covering the whole stability region, symmetric about the real
/// axis. Starts from the real stability bound and grows on a coarse raster
/// until no stable cell touches the edge; the imaginary half-height is then
/// trimmed to the measured extent.
pub fn auto_window(c: &SchemeCoefficients) -> Result<Window> {
    let bound = c.real_stability_bound();
    let mut re_min = -1.1 * bound;
    let re_max = (0.02 * bound).max(0.1);
    let mut half = 0.05 * bound;
    for _ in 0..40 {
        let w = Window {
            re_min,
            re_max,
            im_min: -half,
            im_max: half,
        };
        let coarse = scan(c, w, 800, 400)?;
        match coarse.touches_edge() {
            None => {
                let top = coarse
                    .cells()
                    .filter(|(_, _, s)| *s)
                    .map(|(z, _, _)| z.im.abs())
                    .fold(0.0, f64::max);
                let h = (1.1 * (top + coarse.dy())).min(half);
                return Ok(Window {
                    re_min,
                    re_max,
                    im_min: -h,
                    im_max: h,
                });
            }
            Some("imaginary") => half *= 2.0,
            Some(_) => re_min *= 1.25,
        }
    }
    Err(Error::WindowTooSmall { side: "imaginary" })
}

/// Auto-windowed scan, widening the window if the fine raster still touches
/// an edge.
pub fn scan_auto(c: &SchemeCoefficients, nx: usize, ny: usize) -> Result<RegionScan> {
    let mut w = auto_window(c)?;
    for _ in 0..8 {
        let s = scan(c, w, nx, ny)?;
        if s.touches_edge().is_none() {
            return Ok(s);
        }
        w.im_min *= 1.25;
        w.im_max *= 1.25;
    }
    Err(Error::WindowTooSmall { side: "imaginary" })
}

/// Stability-region area and mean damping over the stable cells.
pub fn region_stats(scan: &RegionScan) -> Result<(f64, f64)> {
    if let Some(side) = scan.touches_edge() {
        return Err(Error::WindowTooSmall { side });
    }
    let mut count = 0usize;
    let mut sum = 0.0;
    for (d, s) in scan.damping.iter().zip(&scan.stable) {
        if *s {
            count += 1;
            sum += d;
        }
    }
    let area = count as f64 * scan.dx() * scan.dy();
    let avg = if count > 0 { sum / count as f64 } else { f64::NAN };
    Ok((area, avg))
}

/// Statistics record. Both ratios are relative to the unshifted RKL scheme
/// at the same stage count: `area_ratio` compares plain areas,
/// `damped_area_ratio` compares areas weighted by `|R(z)|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionStats {
    pub scheme: String,
    pub s: usize,
    pub eps: f64,
    pub area: f64,
    pub area_ratio: f64,
    pub damped_area_ratio: f64,
    pub avg_damping: f64,
}

pub fn scheme_name(f: Family) -> &'static str {
    match f {
        Family::Legendre => "RKL",
        Family::Chebyshev => "RKC",
    }
}

/// Scans the scheme and the unshifted RKL reference at resolution `nx` by `ny`.
/// The scheme is scanned on `window` when given; the reference always uses
/// its automatic window.
pub fn stats_with_reference(
    c: &SchemeCoefficients,
    window: Option<Window>,
    nx: usize,
    ny: usize,
) -> Result<(RegionScan, RegionStats)> {
    let sc = match window {
        Some(w) => scan(c, w, nx, ny)?,
        None => scan_auto(c, nx, ny)?,
    };
    let (area, avg) = region_stats(&sc)?;
    let (ref_area, ref_avg) = if c.family == Family::Legendre && c.shift == 0.0 && window.is_none() {
        (area, avg)
    } else {
        let r = SchemeCoefficients::new(Family::Legendre, c.stages, 0.0)?;
        region_stats(&scan_auto(&r, nx, ny)?)?
    };
    let stats = RegionStats {
        scheme: scheme_name(c.family).to_string(),
        s: c.stages,
        eps: c.shift,
        area,
        area_ratio: area / ref_area,
        damped_area_ratio: area * avg / (ref_area * ref_avg),
        avg_damping: avg,
    };
    Ok((sc, stats))
}
