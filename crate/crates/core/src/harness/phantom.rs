use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ComplexGrid, RealGrid, SeededRng};

/// Ellipse in normalized coordinates (`[-1, 1]²`, y up).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub cx: f64,
    pub cy: f64,
    pub a: f64,
    pub b: f64,
    pub angle_deg: f64,
    pub intensity: f64,
}

impl Ellipse {
    fn contains(&self, x: f64, y: f64) -> bool {
        let (s, c) = self.angle_deg.to_radians().sin_cos();
        let (dx, dy) = (x - self.cx, y - self.cy);
        let u = dx * c + dy * s;
        let v = -dx * s + dy * c;
        (u / self.a).powi(2) + (v / self.b).powi(2) <= 1.0
    }
}

/// Modified Shepp-Logan ellipses (intensities on a `[0, 1]` scale).
pub fn shepp_logan_ellipses() -> Vec<Ellipse> {
    let e = |cx, cy, a, b, angle_deg, intensity| Ellipse {
        cx,
        cy,
        a,
        b,
        angle_deg,
        intensity,
    };
    vec![
        e(0.0, 0.0, 0.69, 0.92, 0.0, 1.0),
        e(0.0, -0.0184, 0.6624, 0.874, 0.0, -0.8),
        e(0.22, 0.0, 0.11, 0.31, -18.0, -0.2),
        e(-0.22, 0.0, 0.16, 0.41, 18.0, -0.2),
        e(0.0, 0.35, 0.21, 0.25, 0.0, 0.1),
        e(0.0, 0.1, 0.046, 0.046, 0.0, 0.1),
        e(0.0, -0.1, 0.046, 0.046, 0.0, 0.1),
        e(-0.08, -0.605, 0.046, 0.023, 0.0, 0.1),
        e(0.0, -0.606, 0.023, 0.023, 0.0, 0.1),
        e(0.06, -0.605, 0.023, 0.046, 0.0, 0.1),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PhantomKind {
    SheppLogan {},
    RandomEllipses {
        #[serde(default = "default_ellipse_count")]
        count: usize,
    },
    FlatDisk {
        /// Radius as a fraction of the half side.
        radius: f64,
    },
}

fn default_ellipse_count() -> usize {
    8
}

/// Rasterize `[0, 1]`-scale ellipses (summed) at pixel centres, then map
/// `v ↦ 2v − 1` and clip to `[−1, 1]`, so the background is −1.
pub fn rasterize(ellipses: &[Ellipse], side: usize) -> RealGrid {
    let n = side as f64;
    RealGrid::from_fn(side, side, |i, j| {
        let x = (2.0 * j as f64 + 1.0) / n - 1.0;
        let y = 1.0 - (2.0 * i as f64 + 1.0) / n;
        let v: f64 = ellipses.iter().filter(|e| e.contains(x, y)).map(|e| e.intensity).sum();
        (2.0 * v - 1.0).clamp(-1.0, 1.0)
    })
}

pub fn make_phantom(kind: &PhantomKind, side: usize, rng: &mut SeededRng) -> Result<RealGrid> {
    if side < 16 {
        return Err(Error::invalid(format!("phantom side must be at least 16, got {side}")));
    }
    Ok(match kind {
        PhantomKind::SheppLogan {} => rasterize(&shepp_logan_ellipses(), side),
        PhantomKind::RandomEllipses { count } => {
            let mut ellipses = vec![Ellipse {
                cx: 0.0,
                cy: 0.0,
                a: 0.75,
                b: 0.85,
                angle_deg: 0.0,
                intensity: 0.5,
            }];
            for _ in 0..*count {
                let r = rng.uniform_range(0.0, 0.45);
                let phi = rng.uniform_range(0.0, std::f64::consts::TAU);
                ellipses.push(Ellipse {
                    cx: r * phi.cos(),
                    cy: r * phi.sin(),
                    a: rng.uniform_range(0.04, 0.25),
                    b: rng.uniform_range(0.04, 0.25),
                    angle_deg: rng.uniform_range(0.0, 180.0),
                    intensity: rng.uniform_range(-0.3, 0.3),
                });
            }
            rasterize(&ellipses, side)
        }
        PhantomKind::FlatDisk { radius } => {
            if !(*radius > 0.0 && *radius <= 1.0) {
                return Err(Error::invalid(format!("disk radius must lie in (0, 1], got {radius}")));
            }
            let disk = Ellipse {
                cx: 0.0,
                cy: 0.0,
                a: *radius,
                b: *radius,
                angle_deg: 0.0,
                intensity: 1.0,
            };
            rasterize(&[disk], side)
        }
    })
}

/// Complex MRI phantom: magnitude `(v + 1)/2 ∈ [0, 1]` of a real phantom
/// times a smooth low-order polynomial phase.
pub fn mri_phantom(real: &RealGrid) -> ComplexGrid {
    let (h, w) = real.shape();
    ComplexGrid::from_fn(h, w, |i, j| {
        let x = (2.0 * j as f64 + 1.0) / w as f64 - 1.0;
        let y = 1.0 - (2.0 * i as f64 + 1.0) / h as f64;
        let phase = 0.4 * x - 0.3 * y + 0.25 * x * y + 0.2 * (x * x - y * y);
        Complex64::from_polar(0.5 * (real.get(i, j) + 1.0), phase)
    })
}
