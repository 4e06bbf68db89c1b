use super::profiles::ComponentSpec;

/// Circular-velocity source for disk kinematics.
pub trait RotationCurve {
    /// Squared circular velocity at radius `r`.
    fn vc2(&self, r: f64) -> f64;
}

/// Superposition of components, each treated through its spherically
/// averaged enclosed mass.
#[derive(Clone, Debug, PartialEq)]
pub struct MassModel {
    pub components: Vec<ComponentSpec>,
    pub g: f64,
}

impl MassModel {
    pub fn new(components: Vec<ComponentSpec>) -> Self {
        Self { components, g: 1.0 }
    }

    pub fn enclosed_mass(&self, r: f64) -> f64 {
        self.components.iter().map(|c| c.enclosed_mass(r)).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.components.iter().map(|c| c.mass).sum()
    }

    pub fn outer_radius(&self) -> f64 {
        self.components.iter().map(|c| c.r_cut).fold(0.0, f64::max)
    }
}

impl RotationCurve for MassModel {
    fn vc2(&self, r: f64) -> f64 {
        if r <= 0.0 {
            0.0
        } else {
            self.g * self.enclosed_mass(r) / r
        }
    }
}

const GRID: usize = 4096;

/// Isotropic Jeans dispersion of one spherical tracer in a total mass model,
/// tabulated on a logarithmic radius grid together with the potential.
#[derive(Clone, Debug)]
pub struct JeansTable {
    ln_r: Vec<f64>,
    sigma2: Vec<f64>,
    phi: Vec<f64>,
}

impl JeansTable {
    /// `sigma^2(r) = (1 / rho(r)) * int_r^{r_cut} rho G M(r') / r'^2 dr'`,
    /// zero pressure at the tracer's truncation radius.
    pub fn new(tracer: &ComponentSpec, model: &MassModel) -> Self {
        let r_lo = 1e-5 * tracer.scale_length;
        let r_hi = model.outer_radius().max(tracer.r_cut);
        let (l0, l1) = (r_lo.ln(), r_hi.ln());
        let h = (l1 - l0) / (GRID - 1) as f64;
        let ln_r: Vec<f64> = (0..GRID).map(|k| l0 + k as f64 * h).collect();
        let r: Vec<f64> = ln_r.iter().map(|l| l.exp()).collect();
        let m: Vec<f64> = r.iter().map(|&x| model.enclosed_mass(x)).collect();
        let g = model.g;

        // integrands in d ln r
        let pressure_grad: Vec<f64> = r
            .iter()
            .zip(&m)
            .map(|(&x, &mx)| tracer.density(x) * g * mx / x)
            .collect();
        let force: Vec<f64> = r.iter().zip(&m).map(|(&x, &mx)| g * mx / x).collect();

        let mut pressure = vec![0.0; GRID];
        let mut phi = vec![0.0; GRID];
        phi[GRID - 1] = -g * m[GRID - 1] / r[GRID - 1];
        for k in (0..GRID - 1).rev() {
            pressure[k] = pressure[k + 1] + 0.5 * h * (pressure_grad[k] + pressure_grad[k + 1]);
            phi[k] = phi[k + 1] - 0.5 * h * (force[k] + force[k + 1]);
        }
        let sigma2 = r
            .iter()
            .zip(&pressure)
            .map(|(&x, &p)| {
                let rho = tracer.density(x);
                if rho > 0.0 {
                    p / rho
                } else {
                    0.0
                }
            })
            .collect();
        Self { ln_r, sigma2, phi }
    }

    fn interp(&self, values: &[f64], r: f64) -> f64 {
        let l = r.max(1e-300).ln();
        let l0 = self.ln_r[0];
        let h = self.ln_r[1] - l0;
        let t = (l - l0) / h;
        if t <= 0.0 {
            return values[0];
        }
        let k = t.floor() as usize;
        if k >= GRID - 1 {
            return values[GRID - 1];
        }
        let f = t - k as f64;
        values[k] * (1.0 - f) + values[k + 1] * f
    }

    pub fn sigma2(&self, r: f64) -> f64 {
        self.interp(&self.sigma2, r).max(0.0)
    }

    pub fn potential(&self, r: f64) -> f64 {
        self.interp(&self.phi, r)
    }

    pub fn escape_speed2(&self, r: f64) -> f64 {
        -2.0 * self.potential(r)
    }
}
