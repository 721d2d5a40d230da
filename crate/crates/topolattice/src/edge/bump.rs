//! Smooth, compactly supported spectral weights with unit integral.

use crate::error::{Error, Result};

/// `∫_{-1}^{1} exp(-1/(1-x²)) dx`, evaluated once by composite Simpson. The
/// integrand is flat to all orders at ±1, so the rule converges spectrally.
fn unit_bump_mass() -> f64 {
    let n = 4096usize;
    let h = 2.0 / n as f64;
    let g = |x: f64| {
        let s = 1.0 - x * x;
        if s <= 0.0 {
            0.0
        } else {
            (-1.0 / s).exp()
        }
    };
    let mut acc = g(-1.0) + g(1.0);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * g(-1.0 + i as f64 * h);
    }
    acc * h / 3.0
}

/// Infinitely differentiable weight supported on `[center-width, center+width]`
/// and normalized to unit integral:
/// `F(E) = scale · exp(-1/(1 - ((E-center)/width)²))` inside the support,
/// zero outside.
#[derive(Debug, Clone, Copy)]
pub struct BumpFunction {
    pub center: f64,
    pub width: f64,
    scale: f64,
}

impl BumpFunction {
    pub fn new(center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() || !center.is_finite() {
            return Err(Error::Geometry(format!(
                "bump needs a finite centre and positive width, got ({center}, {width})"
            )));
        }
        Ok(BumpFunction {
            center,
            width,
            scale: 1.0 / (width * unit_bump_mass()),
        })
    }

    /// Bump centred in the interval `(lo, hi)` spanning 80% of its half-width,
    /// the default choice for a weight supported in a spectral gap.
    pub fn centered_in(lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::Geometry(format!(
                "empty interval ({lo}, {hi}) cannot host a bump"
            )));
        }
        BumpFunction::new(0.5 * (lo + hi), 0.8 * 0.5 * (hi - lo))
    }

    pub fn eval(&self, e: f64) -> f64 {
        let x = (e - self.center) / self.width;
        let s = 1.0 - x * x;
        if s <= 0.0 {
            0.0
        } else {
            self.scale * (-1.0 / s).exp()
        }
    }

    /// Closed support `[center - width, center + width]`.
    pub fn support(&self) -> (f64, f64) {
        (self.center - self.width, self.center + self.width)
    }

    /// `|∫ F(E) dE − 1|`, re-measured on an independent quadrature grid.
    pub fn integral_defect(&self) -> f64 {
        let (lo, hi) = self.support();
        let n = 5000usize;
        let h = (hi - lo) / n as f64;
        let mut acc = self.eval(lo) + self.eval(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * self.eval(lo + i as f64 * h);
        }
        (acc * h / 3.0 - 1.0).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_has_unit_mass_and_compact_support() {
        for &(c, w) in &[(0.0, 1.0), (2.5, 0.3), (-1.0, 4.0)] {
            let f = BumpFunction::new(c, w).unwrap();
            assert!(
                f.integral_defect() < 1e-10,
                "mass defect {:.3e} at ({c}, {w})",
                f.integral_defect()
            );
            assert_eq!(f.eval(c + w), 0.0);
            assert_eq!(f.eval(c - w - 1e-9), 0.0);
            assert!(f.eval(c) > 0.0);
            // Symmetric about the centre.
            assert!((f.eval(c + 0.4 * w) - f.eval(c - 0.4 * w)).abs() < 1e-14);
        }
        assert!(BumpFunction::new(0.0, 0.0).is_err());
        assert!(BumpFunction::new(0.0, -1.0).is_err());
    }

    #[test]
    fn gap_centred_bump_spans_80_percent_of_the_half_width() {
        let f = BumpFunction::centered_in(1.0, 3.0).unwrap();
        assert!((f.center - 2.0).abs() < 1e-15);
        assert!((f.width - 0.8).abs() < 1e-15);
        assert!(BumpFunction::centered_in(3.0, 1.0).is_err());
    }
}
