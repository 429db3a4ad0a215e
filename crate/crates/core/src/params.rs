use crate::error::{invalid, Result};

/// Dimensionless numbers of the coupled system and the gravity direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParameters {
    /// Hartmann number.
    pub ha: f64,
    /// Interaction parameter.
    pub n: f64,
    /// Reynolds number.
    pub re: f64,
    /// Magnetic Reynolds number.
    pub rm: f64,
    /// Prandtl number.
    pub pr: f64,
    /// Grashof number.
    pub gr: f64,
    /// Gravity vector; only its direction enters the buoyancy term.
    pub g: [f64; 3],
}

impl PhysicalParameters {
    /// All numbers equal to one, gravity along the last coordinate axis.
    pub fn unit(dim: usize) -> Self {
        let mut g = [0.0; 3];
        g[dim - 1] = 1.0;
        Self { ha: 1.0, n: 1.0, re: 1.0, rm: 1.0, pr: 1.0, gr: 1.0, g }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("Ha", self.ha), ("N", self.n), ("Re", self.re), ("Rm", self.rm), ("Pr", self.pr), ("Gr", self.gr)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be a positive finite number, got {v}")));
            }
        }
        if !(self.g_mag().is_finite() && self.g_mag() > 0.0) {
            return Err(invalid("gravity vector must be nonzero"));
        }
        Ok(())
    }

    pub fn g_mag(&self) -> f64 {
        self.g.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// `g / |g|`.
    pub fn gravity_unit(&self) -> [f64; 3] {
        let m = self.g_mag();
        [self.g[0] / m, self.g[1] / m, self.g[2] / m]
    }

    /// `Gr / (N Re^2)`.
    pub fn buoyancy_coefficient(&self) -> f64 {
        self.gr / (self.n * self.re * self.re)
    }

    /// `Pr Re`.
    pub fn pr_re(&self) -> f64 {
        self.pr * self.re
    }
}
