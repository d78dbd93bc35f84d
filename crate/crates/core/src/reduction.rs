//! Center-unstable reduction at criticality for a simple root at λ = 0.
//!
//! With the eigenfunction z₀(ξ) = (K_c/2)∫_ξ^∞ ĝ and the functional
//! α(u) = ∫_0^∞ u(t) e^{-0·t} dt, the reduced dynamics of β = u(1,0) read
//!
//!   α(z₀) ∂_t β = (Lĝ(0)/2) ε β + cubic·|β|²β + h.o.t.
//!
//! where the cubic coefficient comes from the quadratic manifold term
//! b(2,ξ) = 2 K_c ∫_0^∞ z₀(ξ + 2s) ds fed back through the first-mode
//! nonlinearity: cubic = -(K_c/4) ∫_0^∞ b(2,t) dt = -(K_c²/4) ∫ ζ z₀(ζ) dζ
//! (Fubini on the double integral). For the unit Gaussian the three numbers
//! are (√(2π)/4, -1/π, K_c/2).

use num_complex::Complex64;

use crate::distributions::VelocityDistribution;
use crate::error::{Error, Result};
use crate::quad;
use crate::volterra::{self, Box2};

/// Relative coupling offsets above this fraction of K_c are outside the
/// truncation's validity; results carry a warning flag.
const VALIDITY_FRACTION: f64 = 0.1;

/// Coefficients of the reduced amplitude ODE
/// normalization · ∂_t β = linear_per_epsilon · ε β + cubic · |β|²β.
#[derive(Debug, Clone)]
pub struct AmplitudeEquation {
    pub linear_per_epsilon: Complex64,
    pub cubic: Complex64,
    /// α(z₀), the K_c/2 factor multiplying ∂_t β.
    pub normalization: Complex64,
    pub critical_coupling: f64,
}

/// Equilibrium amplitude together with a truncation-validity flag.
#[derive(Debug, Clone, Copy)]
pub struct EquilibriumAmplitude {
    pub beta: f64,
    pub within_validity: bool,
}

fn decay_rate_hint(dist: &VelocityDistribution) -> f64 {
    // The eigenfunction inherits ĝ's decay; any positive rate below the true
    // one keeps the tail estimate conservative.
    dist.analyticity_width().min(1.0) * 0.5
}

/// Verify that the spectrum at K_c in a window around the origin is exactly a
/// simple root at λ = 0; returns the offending eigenvalues otherwise.
fn verify_simple_root_at_zero(dist: &VelocityDistribution, k_c: f64) -> Result<()> {
    let strip = volterra::default_strip(dist).min(0.4);
    let bx = Box2::new(-0.9 * strip, 1.0, -1.5, 1.5);
    let modes = volterra::locate_roots(dist, k_c, strip, bx)?;
    let eigenvalues: Vec<Complex64> = modes.roots.iter().map(|(z, _)| *z).collect();
    let simple_zero = modes.roots.len() == 1
        && modes.roots[0].1 == 1
        && modes.roots[0].0.norm() < 1e-5;
    if simple_zero {
        Ok(())
    } else {
        Err(Error::NotReduced { eigenvalues })
    }
}

/// 1/α(z₀); for the Gaussian this equals 2/K_c.
pub fn projection_coefficient(dist: &VelocityDistribution, k_c: f64) -> Result<f64> {
    verify_simple_root_at_zero(dist, k_c)?;
    let nrm = normalization(dist, k_c)?;
    if nrm.norm() < 1e-10 {
        return Err(Error::numeric(
            "degenerate normalization α(z₀) ≈ 0",
            nrm.norm(),
        ));
    }
    if nrm.im.abs() > 1e-8 * nrm.norm() {
        return Err(Error::numeric(
            "α(z₀) is not real; symmetric unimodal pipeline does not apply",
            nrm.im,
        ));
    }
    Ok(1.0 / nrm.re)
}

/// α(z₀) = ∫_0^∞ z₀(1,t) dt by the generic nested-quadrature route.
fn normalization(dist: &VelocityDistribution, k_c: f64) -> Result<Complex64> {
    let lambda = Complex64::new(0.0, 0.0);
    let u1 = |t: f64| volterra::eigenmode_eval(dist, k_c, lambda, 0, t).unwrap_or_default();
    volterra::spectral_functional(&u1, lambda, 0, decay_rate_hint(dist))
}

/// Quadratic manifold term per unit β²: b(2,ξ) = 2 K_c ∫_0^∞ z₀(1, ξ+2s) ds.
pub fn quadratic_manifold_term(
    dist: &VelocityDistribution,
    k_c: f64,
    xi: f64,
) -> Result<Complex64> {
    if xi < 0.0 {
        return Err(Error::domain("quadratic_manifold_term requires xi >= 0"));
    }
    let lambda = Complex64::new(0.0, 0.0);
    let cut = dist.laplace_tail_cut(0.0).min(1e4);
    let mut f = |s: f64| volterra::eigenmode_eval(dist, k_c, lambda, 0, xi + 2.0 * s).unwrap_or_default();
    let q = quad::integrate_complex(&mut f, 0.0, 0.5 * cut, 1e-9);
    if q.err > 1e-6 {
        return Err(Error::numeric("manifold-term quadrature", q.err));
    }
    Ok(2.0 * k_c * q.value)
}

/// Assemble the amplitude-equation coefficients at K_c.
pub fn amplitude_equation(dist: &VelocityDistribution, k_c: f64) -> Result<AmplitudeEquation> {
    verify_simple_root_at_zero(dist, k_c)?;
    let nrm = normalization(dist, k_c)?;

    // Linear term: α of the ε-part (1/2) β ĝ(ξ) per unit εβ, i.e. Lĝ(0)/2.
    let linear = 0.5 * dist.laplace(Complex64::new(0.0, 0.0))?;

    // Cubic term: -(K_c/4) α(b(2,·)) with α(b(2,·)) = K_c ∫_0^∞ ζ z₀(1,ζ) dζ
    // after Fubini over the transport history.
    let lambda = Complex64::new(0.0, 0.0);
    let cut = dist.laplace_tail_cut(0.0).min(1e4);
    let mut f = |z: f64| z * volterra::eigenmode_eval(dist, k_c, lambda, 0, z).unwrap_or_default();
    let q = quad::integrate_complex(&mut f, 0.0, cut, 1e-10);
    if q.err > 1e-7 {
        return Err(Error::numeric("cubic-coefficient quadrature", q.err));
    }
    let cubic = -(k_c * k_c / 4.0) * q.value;

    Ok(AmplitudeEquation {
        linear_per_epsilon: linear,
        cubic,
        normalization: nrm,
        critical_coupling: k_c,
    })
}

impl AmplitudeEquation {
    /// Both coefficients real (symmetric unimodal case) and supercritical.
    pub fn is_supercritical_pitchfork(&self) -> bool {
        self.linear_per_epsilon.re > 0.0 && self.cubic.re < 0.0
    }
}

/// Steady amplitude β_c(ε) = √(Re(linear)·ε / |Re(cubic)|) of the pitchfork.
pub fn equilibrium_amplitude(eq: &AmplitudeEquation, epsilon: f64) -> Result<EquilibriumAmplitude> {
    if !(epsilon > 0.0) {
        return Err(Error::usage("equilibrium_amplitude requires ε > 0"));
    }
    if eq.cubic.re >= 0.0 {
        return Err(Error::domain(
            "cubic coefficient is not damping (subcritical); no pitchfork amplitude",
        ));
    }
    if eq.linear_per_epsilon.re <= 0.0 {
        return Err(Error::domain(
            "linear coefficient is not destabilising; no bifurcation on this side",
        ));
    }
    let beta = (eq.linear_per_epsilon.re * epsilon / eq.cubic.re.abs()).sqrt();
    Ok(EquilibriumAmplitude {
        beta,
        within_validity: epsilon <= VALIDITY_FRACTION * eq.critical_coupling,
    })
}
