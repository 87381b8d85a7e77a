//! Shared fixtures for the benchmarks: the flagship parameter set and a
//! few fixed sample points.

use qkzlab_core::contour::{QuadratureGrid, RadiusPolicy};
use qkzlab_core::solution::IntegralSettings;
use qkzlab_core::{EllipticW, ModelParams, Result, TruncationPolicy, C64};

/// Parameters, elliptic factor and points of the flagship qKZ case.
pub struct Flagship {
    pub params: ModelParams,
    pub w: EllipticW,
    pub z: Vec<C64>,
    pub trunc: TruncationPolicy,
}

impl Flagship {
    pub fn new() -> Result<Self> {
        let params = ModelParams::real(0.6, 1.0, 0.3, &[1, 1], 1)?;
        let w = EllipticW::build(&params)?;
        Ok(Self {
            params,
            w,
            z: vec![C64::new(1.0, 0.0), C64::new(0.7, 0.0)],
            trunc: TruncationPolicy::default(),
        })
    }

    pub fn settings(&self, points: usize) -> Result<IntegralSettings> {
        Ok(IntegralSettings {
            grid: QuadratureGrid::new(points)?,
            policy: RadiusPolicy::Auto,
        })
    }
}

/// Fixed generic points off the real axis, moduli between 0.6 and 1.4.
pub fn sample_points(n: usize) -> Vec<C64> {
    (0..n)
        .map(|i| {
            let x = i as f64 + 1.0;
            C64::from_polar(0.6 + 0.8 * (0.37 * x).fract(), 2.1 * x)
        })
        .collect()
}
