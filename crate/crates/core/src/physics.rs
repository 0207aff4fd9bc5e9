//! Constitutive laws: Brooks–Corey relative permeabilities, fractional flow
//! and the Hoteit–Firoozabadi capillary pressure `p_c = -(B_c/√K) ln S̄_w`.

use crate::error::{Error, Result};
use crate::mesh::Point;

#[derive(Clone, Debug, PartialEq)]
pub struct FluidPair {
    pub rho_w: f64,
    pub rho_n: f64,
    pub mu_w: f64,
    pub mu_n: f64,
    /// Magnitude of gravitational acceleration, m/s².
    pub gravity: f64,
    /// `∇z` in the plane, with `z` the depth.
    pub grad_z: Point,
}

impl FluidPair {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rho_w", self.rho_w), ("rho_n", self.rho_n), ("mu_w", self.mu_w), ("mu_n", self.mu_n)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.gravity >= 0.0) {
            return Err(Error::config(format!("gravity must be nonnegative, got {}", self.gravity)));
        }
        Ok(())
    }

    /// `g ∇z`.
    pub fn gravity_vector(&self) -> Point {
        [self.gravity * self.grad_z[0], self.gravity * self.grad_z[1]]
    }

    /// Swap the roles of the two phases.
    pub fn relabeled(&self) -> Self {
        FluidPair {
            rho_w: self.rho_n,
            rho_n: self.rho_w,
            mu_w: self.mu_n,
            mu_n: self.mu_w,
            ..self.clone()
        }
    }
}

/// Which phase saturation enters the logarithm of the capillary law.
///
/// `Wetting` is the usual `p_c = -(B_c/√K) ln S̄_w`. `Mirrored` is the same
/// curve after relabeling the phases: `p_c(S_w) = +(B_c/√K) ln S̄_n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CapillaryOrientation {
    Wetting,
    Mirrored,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RockModel {
    pub porosity: Vec<f64>,
    /// Isotropic permeability per cell, m².
    pub permeability: Vec<f64>,
    pub beta: i32,
    /// Capillary strength `B_c`, Pa·m.
    pub bc: f64,
    pub s_rw: f64,
    pub s_rn: f64,
    /// Lower clamp of `S̄` inside the capillary logarithm.
    pub eps_s: f64,
    pub orientation: CapillaryOrientation,
}

impl RockModel {
    pub fn uniform(n_cells: usize, porosity: f64, permeability: f64) -> Self {
        RockModel {
            porosity: vec![porosity; n_cells],
            permeability: vec![permeability; n_cells],
            beta: 2,
            bc: 0.0,
            s_rw: 1e-6,
            s_rn: 1e-6,
            eps_s: 1e-3,
            orientation: CapillaryOrientation::Wetting,
        }
    }

    pub fn validate(&self, n_cells: usize) -> Result<()> {
        if self.porosity.len() != n_cells || self.permeability.len() != n_cells {
            return Err(Error::config(format!(
                "rock arrays have {} / {} entries for {n_cells} cells",
                self.porosity.len(),
                self.permeability.len()
            )));
        }
        if let Some((k, p)) = self.porosity.iter().enumerate().find(|(_, &p)| !(p > 0.0 && p <= 1.0)) {
            return Err(Error::config(format!("porosity must lie in (0, 1], cell {k} has {p}")));
        }
        if let Some((k, v)) = self.permeability.iter().enumerate().find(|(_, &v)| !(v > 0.0 && v.is_finite())) {
            return Err(Error::config(format!("permeability must be positive, cell {k} has {v}")));
        }
        if self.beta < 1 {
            return Err(Error::config(format!("beta must be an integer >= 1, got {}", self.beta)));
        }
        if !(self.bc >= 0.0) {
            return Err(Error::config(format!("B_c must be nonnegative, got {}", self.bc)));
        }
        if !(self.s_rw >= 0.0 && self.s_rn >= 0.0 && self.s_rw + self.s_rn < 1.0) {
            return Err(Error::config(format!(
                "residual saturations need 0 <= S_rw + S_rn < 1, got {} + {}",
                self.s_rw, self.s_rn
            )));
        }
        if !(self.eps_s > 0.0 && self.eps_s < 0.5) {
            return Err(Error::config(format!("eps_s must lie in (0, 0.5), got {}", self.eps_s)));
        }
        Ok(())
    }

    /// Swap phase roles: residuals trade places and the capillary curve is
    /// mirrored.
    pub fn relabeled(&self) -> Self {
        RockModel {
            s_rw: self.s_rn,
            s_rn: self.s_rw,
            orientation: match self.orientation {
                CapillaryOrientation::Wetting => CapillaryOrientation::Mirrored,
                CapillaryOrientation::Mirrored => CapillaryOrientation::Wetting,
            },
            ..self.clone()
        }
    }

    fn span(&self) -> f64 {
        1.0 - self.s_rn - self.s_rw
    }
}

/// `(S_w - S_rw)/(1 - S_rn - S_rw)`, optionally clamped to `[ε_s, 1]`.
pub fn effective_saturation(s_w: f64, rock: &RockModel, clamped: bool) -> f64 {
    let s = (s_w - rock.s_rw) / rock.span();
    if clamped {
        s.clamp(rock.eps_s, 1.0)
    } else {
        s
    }
}

fn powi(x: f64, beta: i32) -> f64 {
    x.powi(beta)
}

/// `(λ_w, λ_n)` with `k_rw = S̄^β`, `k_rn = (1 - S̄)^β`; `S̄` is clipped to
/// `[0, 1]` so that `λ_t > 0` for any input.
pub fn mobilities(s_w: f64, fluids: &FluidPair, rock: &RockModel) -> (f64, f64) {
    let s = effective_saturation(s_w, rock, false).clamp(0.0, 1.0);
    (powi(s, rock.beta) / fluids.mu_w, powi(1.0 - s, rock.beta) / fluids.mu_n)
}

pub fn total_mobility(s_w: f64, fluids: &FluidPair, rock: &RockModel) -> f64 {
    let (lw, ln) = mobilities(s_w, fluids, rock);
    lw + ln
}

/// `λ_n` with `S̄` capped at `1 - ε_s`, so it never vanishes.
pub fn regularized_nonwetting_mobility(s_w: f64, fluids: &FluidPair, rock: &RockModel) -> f64 {
    let s = effective_saturation(s_w, rock, false).clamp(0.0, 1.0 - rock.eps_s);
    powi(1.0 - s, rock.beta) / fluids.mu_n
}

/// `(f_w, f_n)`; `f_n` is computed as `1 - f_w` so the pair sums to one exactly.
pub fn fractional_flow(s_w: f64, fluids: &FluidPair, rock: &RockModel) -> (f64, f64) {
    let (lw, ln) = mobilities(s_w, fluids, rock);
    let fw = lw / (lw + ln);
    (fw, 1.0 - fw)
}

pub fn fw(s_w: f64, fluids: &FluidPair, rock: &RockModel) -> f64 {
    fractional_flow(s_w, fluids, rock).0
}

pub fn fn_(s_w: f64, fluids: &FluidPair, rock: &RockModel) -> f64 {
    fractional_flow(s_w, fluids, rock).1
}

/// Capillary pressure in cell with permeability `k`.
pub fn capillary_pressure(s_w: f64, rock: &RockModel, k: f64) -> f64 {
    if rock.bc == 0.0 {
        return 0.0;
    }
    let scale = rock.bc / k.sqrt();
    match rock.orientation {
        CapillaryOrientation::Wetting => -scale * effective_saturation(s_w, rock, true).ln(),
        CapillaryOrientation::Mirrored => {
            let other = ((1.0 - s_w - rock.s_rn) / rock.span()).clamp(rock.eps_s, 1.0);
            scale * other.ln()
        }
    }
}

/// `dp_c/dS_w`; zero where the logarithm argument is clamped.
pub fn capillary_pressure_derivative(s_w: f64, rock: &RockModel, k: f64) -> f64 {
    if rock.bc == 0.0 {
        return 0.0;
    }
    let scale = rock.bc / k.sqrt();
    let arg = match rock.orientation {
        CapillaryOrientation::Wetting => effective_saturation(s_w, rock, false),
        CapillaryOrientation::Mirrored => (1.0 - s_w - rock.s_rn) / rock.span(),
    };
    if arg < rock.eps_s || arg > 1.0 {
        return 0.0;
    }
    -scale / arg / rock.span()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{normalize, CENTIPOISE};
    use proptest::prelude::*;

    fn fluids(mu_n_cp: f64) -> FluidPair {
        FluidPair {
            rho_w: 1000.0,
            rho_n: 800.0,
            mu_w: CENTIPOISE,
            mu_n: mu_n_cp * CENTIPOISE,
            gravity: 0.0,
            grad_z: [0.0, -1.0],
        }
    }

    fn rock(bc: f64, k: f64) -> RockModel {
        RockModel { bc, ..RockModel::uniform(1, 0.2, k) }
    }

    fn ideal_rock() -> RockModel {
        RockModel { s_rw: 0.0, s_rn: 0.0, ..RockModel::uniform(1, 0.2, 1.0) }
    }

    #[test]
    fn effective_saturation_endpoints() {
        let r = RockModel { s_rw: 0.1, s_rn: 0.2, ..rock(0.0, 1.0) };
        assert_eq!(effective_saturation(0.1, &r, false), 0.0);
        assert!((effective_saturation(0.8, &r, false) - 1.0).abs() < 1e-15);
        assert_eq!(effective_saturation(0.0, &r, true), r.eps_s);
        let r = rock(0.0, 1.0);
        // symmetric residuals leave the midpoint fixed
        assert!((effective_saturation(0.5, &r, false) - 0.5).abs() < 1e-15);
        assert!((effective_saturation(0.3, &r, false) - 0.299999 / 0.999998).abs() < 1e-15);
    }

    #[test]
    fn mobility_examples() {
        let f = fluids(0.45);
        let r = ideal_rock();
        let (lw, ln) = mobilities(1.0, &f, &r);
        assert_eq!(ln, 0.0);
        assert_eq!(lw, 1.0 / f.mu_w);
        let (lw, ln) = mobilities(0.5, &f, &r);
        assert!((lw * CENTIPOISE - 0.25).abs() < 1e-12);
        assert!((ln * CENTIPOISE - 0.25 / 0.45).abs() < 1e-12);
        assert_eq!(mobilities(0.0, &f, &r).0, 0.0);
        assert!(total_mobility(-0.3, &f, &r) > 0.0);
        assert!(total_mobility(1.7, &f, &r) > 0.0);
    }

    #[test]
    fn fractional_flow_examples() {
        let f = fluids(0.45);
        let r = ideal_rock();
        let (fw, fnw) = fractional_flow(0.5, &f, &r);
        assert!((fw - 0.25 / (0.25 + 0.25 / 0.45)).abs() < 1e-12);
        assert!((fw - 0.3103).abs() < 1e-4);
        assert_eq!(fw + fnw, 1.0);
        assert_eq!(fractional_flow(1.0, &f, &r), (1.0, 0.0));
    }

    #[test]
    fn capillary_examples() {
        let r = rock(0.0, 1e-13);
        assert_eq!(capillary_pressure(0.2, &r, 1e-13), 0.0);
        let bc = normalize(60.0, "bar·md^{1/2}").unwrap().0;
        let k = normalize(50.0, "md").unwrap().0;
        let r = rock(bc, k);
        assert!(capillary_pressure(1.0 - r.s_rn, &r, k).abs() < 1e-12);
        let pc_bar = capillary_pressure(0.5, &r, k) / 1e5;
        assert!((pc_bar - 60.0 / 50f64.sqrt() * 2f64.ln()).abs() < 1e-9);
        assert!((pc_bar - 5.881549).abs() < 1e-6);
    }

    #[test]
    fn capillary_derivative_matches_central_difference() {
        let bc = normalize(60.0, "bar·md^{1/2}").unwrap().0;
        let k = normalize(50.0, "md").unwrap().0;
        for orientation in [CapillaryOrientation::Wetting, CapillaryOrientation::Mirrored] {
            let r = RockModel { orientation, ..rock(bc, k) };
            let h = 1e-6;
            let fd = (capillary_pressure(0.5 + h, &r, k) - capillary_pressure(0.5 - h, &r, k)) / (2.0 * h);
            let d = capillary_pressure_derivative(0.5, &r, k);
            assert!(((d - fd) / d).abs() < 1e-6, "{orientation:?}: {d} vs {fd}");
        }
        let r = rock(bc, k);
        assert_eq!(capillary_pressure_derivative(1e-5, &r, k), 0.0);
        assert_eq!(capillary_pressure_derivative(0.4, &rock(0.0, k), k), 0.0);
    }

    #[test]
    fn gamma_bound_holds_for_quadratic_relperm() {
        // f_w(S) <= γ_w S with γ_w = 2^β / (μ_w λ_0) and λ_0 the smallest sampled λ_t
        let f = fluids(0.3);
        let r = rock(0.0, 1.0);
        let grid: Vec<f64> = (0..=2000).map(|i| r.s_rw + (1.0 - r.s_rw - r.s_rn) * i as f64 / 2000.0).collect();
        let lambda0 = grid.iter().map(|&s| total_mobility(s, &f, &r)).fold(f64::INFINITY, f64::min);
        let gamma = 2f64.powi(r.beta) / (f.mu_w * lambda0);
        for &s in &grid {
            assert!(fw(s, &f, &r) <= gamma * s + 1e-15);
        }
    }

    #[test]
    fn mirrored_curve_is_relabeled_curve() {
        let bc = 2.0;
        let r = RockModel { s_rw: 0.05, s_rn: 0.1, ..rock(bc, 4.0) };
        let m = r.relabeled();
        for i in 1..20 {
            let s = i as f64 / 20.0;
            let a = capillary_pressure(s, &r, 4.0);
            let b = capillary_pressure(1.0 - s, &m, 4.0);
            assert!((a + b).abs() < 1e-12 * (1.0 + a.abs()));
        }
    }

    proptest! {
        #[test]
        fn fractional_flows_sum_to_one(s in -0.5f64..1.5, mu in 0.1f64..5.0, beta in 1i32..4) {
            let f = fluids(mu);
            let r = RockModel { beta, ..rock(0.0, 1.0) };
            let (a, b) = fractional_flow(s, &f, &r);
            prop_assert_eq!(a + b, 1.0);
        }

        #[test]
        fn monotone_laws(s in 0.0f64..0.999, ds in 1e-6f64..1e-3) {
            let f = fluids(0.45);
            let r = rock(1.0, 1e-13);
            let t = (s + ds).min(1.0 - r.s_rn);
            let (lw0, ln0) = mobilities(s, &f, &r);
            let (lw1, ln1) = mobilities(t, &f, &r);
            prop_assert!(lw1 >= lw0);
            prop_assert!(ln1 <= ln0);
            prop_assert!(capillary_pressure(t, &r, 1e-13) <= capillary_pressure(s, &r, 1e-13));
        }
    }
}
