//! Partially locked stationary states and their exponential-weight norms.
//!
//! A locked state with order parameter η at coupling K has phase-Fourier
//! coefficients f̂(l,ω) = g(ω) (η/|η|) β(ω/(K|η|))^l, where β is the bounded
//! branch of β² - 2izβ - 1 = 0 on the closed upper half plane (trapped
//! oscillators sit at |β| = 1, drifters below). The ξ-transform
//! u(l,ξ) = ∫ e^{iξω} f̂(l,ω) dω is evaluated by Filon quadrature, and the
//! Z^a norm sup e^{aξ}|u(l,ξ)| is estimated on a grid with an analytic tail
//! bound from contour shifting.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::distributions::{Family, VelocityDistribution};
use crate::error::{Error, Result};
use crate::quad;

/// A (K, η) pair describing a partially locked state of the distribution.
#[derive(Debug, Clone)]
pub struct LockedState {
    pub coupling: f64,
    pub eta: Complex64,
    pub dist: VelocityDistribution,
}

impl LockedState {
    pub fn new(dist: &VelocityDistribution, coupling: f64, eta: Complex64) -> Result<Self> {
        if !(coupling > 0.0) || !(eta.norm() > 0.0) || eta.norm() > 1.0 {
            return Err(Error::usage("locked state needs K > 0 and 0 < |η| <= 1"));
        }
        Ok(LockedState {
            coupling,
            eta,
            dist: dist.clone(),
        })
    }
}

/// Z^a norm estimate with its ingredients.
#[derive(Debug, Clone)]
pub struct ZaNormEstimate {
    pub za_norm: f64,
    /// Analytic bound on the omitted ξ > ξ_max region.
    pub tail_uncertainty: f64,
    /// (K|η|/2)·‖g(·+ia)‖₁ — the stronger displayed constant.
    pub bound_half: f64,
    /// (K|η|/a)·‖g(·+ia)‖₁ — the weaker proof-route constant.
    pub bound_over_a: f64,
    pub shifted_l1: f64,
    /// Whether the small-η hypothesis |η| ≤ a/(√2 K) holds.
    pub small_eta_hypothesis: bool,
}

/// Bounded branch of β on the closed upper half plane: the root of
/// β² - 2izβ - 1 = 0 with |β| ≤ 1.
///
/// The two roots iz ± √(1-z²) have product -1, so exactly one lies inside the
/// unit disc off the real segment [-1,1]; on the segment both sit on the
/// circle and the trapped branch iz + √(1-z²) (nonnegative real part of the
/// root) is taken. This selection is continuous on Im z ≥ 0, matches
/// iz(1-√(1-1/z²)) for real |z| ≥ 1, and vanishes as |z| → ∞.
pub fn beta_eval(z: Complex64) -> Result<Complex64> {
    if z.im < 0.0 {
        return Err(Error::domain("beta_eval requires Im z >= 0"));
    }
    let root = (1.0 - z * z).sqrt();
    let iz = Complex64::new(0.0, 1.0) * z;
    let plus = iz + root;
    let minus = iz - root;
    let (np, nm) = (plus.norm(), minus.norm());
    if (np - nm).abs() < 1e-12 {
        // Trapped segment: principal sqrt of 1-z² ≥ 0 gives Re β ≥ 0.
        Ok(if plus.re >= minus.re { plus } else { minus })
    } else if np < nm {
        Ok(plus)
    } else {
        Ok(minus)
    }
}

/// Classical self-consistency for the locked amplitude r = |η| at coupling K:
/// 1 = K ∫ cos²θ g(K r sinθ) dθ, solved by bisection. Independent of the
/// Fourier machinery, so it doubles as an oracle for the locked profiles.
pub fn self_consistent_eta(dist: &VelocityDistribution, coupling: f64) -> Result<f64> {
    let balance = |r: f64| -> f64 {
        let mut f = |theta: f64| {
            let c = theta.cos();
            c * c * dist.density(coupling * r * theta.sin()).unwrap_or(0.0)
        };
        let half_pi = 0.5 * std::f64::consts::PI;
        coupling * quad::integrate_real(&mut f, -half_pi, half_pi, 1e-12).0
    };
    if balance(1e-9) <= 1.0 {
        return Err(Error::domain(
            "no partially locked state: K at or below the critical coupling",
        ));
    }
    let (mut lo, mut hi) = (1e-9, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if balance(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// u(l, ξ) = ∫ e^{iξω} g(ω) (η/|η|) β(ω/(K|η|))^l dω by Filon quadrature with
/// panels snapped to the trapped-region edges ±K|η| (β has square-root kinks
/// there).
pub fn locked_fourier_u(state: &LockedState, l: u32, xi: f64) -> Result<Complex64> {
    if l == 0 {
        return Err(Error::usage("locked_fourier_u is defined for l >= 1"));
    }
    if xi < 0.0 {
        return Err(Error::domain("locked_fourier_u requires xi >= 0"));
    }
    let r = state.eta.norm();
    let phase = state.eta / r;
    let kr = state.coupling * r;
    let (lo, hi) = state.dist.support();
    let dist = state.dist.clone();
    let f = move |w: f64| -> Complex64 {
        let b = beta_eval(Complex64::new(w / kr, 0.0)).unwrap_or_default();
        dist.density(w).unwrap_or(0.0) * b.powu(l)
    };
    // Integrate the three smooth pieces separately.
    let max_panel = 0.05 * state.dist.frequency_scale().max(kr);
    let mut total = Complex64::new(0.0, 0.0);
    let cuts = [lo, -kr.min(hi).max(lo), kr.min(hi).max(lo), hi];
    for seg in cuts.windows(2) {
        if seg[1] > seg[0] {
            total += quad::filon_integrate(&f, seg[0], seg[1], xi, max_panel);
        }
    }
    Ok(phase * total)
}

/// Grid supremum of e^{aξ} |u(l,ξ)| over l ≤ l_max and ξ ≤ ξ_max, with an
/// analytic tail bound beyond ξ_max reported as uncertainty.
pub fn za_norm_estimate(
    state: &LockedState,
    a: f64,
    l_max: u32,
    xi_max: f64,
    grid_points: usize,
) -> Result<ZaNormEstimate> {
    if !(a > 0.0) {
        return Err(Error::domain("za_norm_estimate requires a > 0"));
    }
    if matches!(state.dist.family(), Family::Tabulated { .. }) {
        return Err(Error::domain(
            "tabulated densities have no analytic strip; Z^a norm unavailable",
        ));
    }
    if a >= state.dist.analyticity_width() {
        return Err(Error::domain(
            "a exceeds the analytic strip of the density",
        ));
    }
    if l_max == 0 || grid_points < 2 {
        return Err(Error::usage("za_norm_estimate needs l_max >= 1, grid >= 2"));
    }

    let sup: f64 = (1..=l_max)
        .into_par_iter()
        .map(|l| {
            let mut best: f64 = 0.0;
            for j in 0..grid_points {
                let xi = xi_max * j as f64 / (grid_points - 1) as f64;
                if let Ok(u) = locked_fourier_u(state, l, xi) {
                    best = best.max((a * xi).exp() * u.norm());
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max);

    // Tail bound via a contour shift to height a' > a:
    // e^{aξ}|u(l,ξ)| ≤ ‖g(·+ia')‖₁ · sup|β((ω+ia')/(K|η|))|^l · e^{-(a'-a)ξ}.
    let headroom = (state.dist.analyticity_width() - a).min(0.5);
    let a_prime = a + 0.5 * headroom;
    let shifted_prime = state.dist.shifted_l1_norm(a_prime)?;
    let kr = state.coupling * state.eta.norm();
    let mut beta_sup: f64 = 0.0;
    let (lo, hi) = state.dist.support();
    let n = 2000;
    for i in 0..=n {
        let w = lo + (hi - lo) * i as f64 / n as f64;
        let b = beta_eval(Complex64::new(w / kr, a_prime / kr))?.norm();
        beta_sup = beta_sup.max(b);
    }
    let tail = shifted_prime * beta_sup * (-(a_prime - a) * xi_max).exp();

    let shifted = state.dist.shifted_l1_norm(a)?;
    let k_eta = state.coupling * state.eta.norm();
    Ok(ZaNormEstimate {
        za_norm: sup,
        tail_uncertainty: tail,
        bound_half: 0.5 * k_eta * shifted,
        bound_over_a: k_eta / a * shifted,
        shifted_l1: shifted,
        small_eta_hypothesis: state.eta.norm() <= a / (std::f64::consts::SQRT_2 * state.coupling),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn beta_at_marked_points() {
        // Locked center.
        assert!((beta_eval(c(0.0, 0.0)).unwrap() - c(1.0, 0.0)).norm() < 1e-14);
        // Real z = 2: 2i(1 - √3/2).
        let b2 = beta_eval(c(2.0, 0.0)).unwrap();
        assert!((b2 - c(0.0, 2.0 - 3.0f64.sqrt())).norm() < 1e-14, "{b2}");
        assert!(b2.norm() < 1.0);
        // Large imaginary argument → 0.
        let far = beta_eval(c(0.0, 1e6)).unwrap();
        assert!(far.norm() < 1e-5);
    }

    #[test]
    fn beta_bounded_on_upper_half_grid() {
        // |β| ≤ 1 on a 10⁴-point grid of {|z| ≤ 10, Im z ≥ 0}, and
        // |β| ≤ 1/|z| outside √2.
        let n = 100;
        for i in 0..n {
            for j in 0..n {
                let z = c(
                    -10.0 + 20.0 * i as f64 / (n - 1) as f64,
                    10.0 * j as f64 / (n - 1) as f64,
                );
                if z.norm() > 10.0 {
                    continue;
                }
                let b = beta_eval(z).unwrap().norm();
                assert!(b <= 1.0 + 1e-12, "z={z} |β|={b}");
                if z.norm() >= std::f64::consts::SQRT_2 {
                    assert!(b <= 1.0 / z.norm() + 1e-12, "series bound at z={z}");
                }
            }
        }
    }

    #[test]
    fn beta_series_bound_on_real_axis() {
        // Sanity check of the 1/|z| estimate against the direct formula.
        let b = beta_eval(c(2.0, 0.0)).unwrap();
        assert!(b.norm() <= 0.5);
    }

    #[test]
    fn beta_continuous_across_unit_circle() {
        for k in 0..50 {
            let angle = std::f64::consts::PI * k as f64 / 49.0;
            let inner = beta_eval(Complex64::from_polar(0.999999, angle)).unwrap();
            let outer = beta_eval(Complex64::from_polar(1.000001, angle)).unwrap();
            assert!((inner - outer).norm() < 1e-2, "angle {angle}");
        }
    }

    #[test]
    fn trapped_modulus_one_drifting_below() {
        let dist = VelocityDistribution::gaussian(0.0, 1.0).unwrap();
        let state = LockedState::new(&dist, 1.7, c(0.4, 0.0)).unwrap();
        let kr = 1.7 * 0.4;
        for &w in &[0.0, 0.3 * kr, 0.9 * kr] {
            let b = beta_eval(c(w / kr, 0.0)).unwrap();
            assert!((b.norm() - 1.0).abs() < 1e-12, "trapped at ω={w}");
        }
        for &w in &[1.1 * kr, 2.0 * kr, 10.0 * kr] {
            let b = beta_eval(c(w / kr, 0.0)).unwrap();
            assert!(b.norm() < 1.0, "drifting at ω={w}");
        }
        let _ = state;
    }

    #[test]
    fn locked_first_moment_recovers_eta() {
        // For a genuinely self-consistent (K, η), ∫ f̂(1,ω) dω = η: the
        // drifting contribution cancels by symmetry and the trapped part is
        // exactly the self-consistency integral.
        let dist = VelocityDistribution::gaussian(0.0, 1.0).unwrap();
        let k = 1.7;
        let r = self_consistent_eta(&dist, k).unwrap();
        let state = LockedState::new(&dist, k, c(r, 0.0)).unwrap();
        let u10 = locked_fourier_u(&state, 1, 0.0).unwrap();
        assert!((u10 - c(r, 0.0)).norm() < 1e-6, "u(1,0)={u10} vs r={r}");
    }

    #[test]
    fn self_consistency_against_amplitude_scaling() {
        // Near onset r ≈ √(8δ/(1+δ))/K with δ = K/K_c - 1 for the unit
        // Gaussian (expansion of the self-consistency integral).
        let dist = VelocityDistribution::gaussian(0.0, 1.0).unwrap();
        let kc = 4.0 / 2.506628274631;
        let k = kc * 1.01;
        let r = self_consistent_eta(&dist, k).unwrap();
        let delta: f64 = 0.01;
        let approx = (8.0 * delta / (1.0 + delta)).sqrt() / k;
        assert!((r - approx).abs() < 0.05 * approx, "r={r} approx={approx}");
    }

    #[test]
    fn subcritical_coupling_has_no_locked_state() {
        let dist = VelocityDistribution::gaussian(0.0, 1.0).unwrap();
        assert!(self_consistent_eta(&dist, 1.0).is_err());
    }

    #[test]
    fn za_norm_small_eta_bound() {
        // At small |η| the hypothesis |η| ≤ a/(√2K) holds and the norm must
        // sit below the weaker of the two constants.
        let dist = VelocityDistribution::gaussian(0.0, 1.0).unwrap();
        let a = 0.5;
        let k = 1.7;
        let eta = 0.1; // ≤ a/(√2 K) ≈ 0.208
        let state = LockedState::new(&dist, k, c(eta, 0.0)).unwrap();
        let est = za_norm_estimate(&state, a, 6, 20.0, 81).unwrap();
        assert!(est.small_eta_hypothesis);
        let weaker = est.bound_half.max(est.bound_over_a);
        assert!(
            est.za_norm <= weaker * (1.0 + 1e-6) + est.tail_uncertainty,
            "norm {} bound {}",
            est.za_norm,
            weaker
        );
        assert!((est.shifted_l1 - (a * a / 2.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn za_norm_monotone_in_eta() {
        let dist = VelocityDistribution::gaussian(0.0, 1.0).unwrap();
        let mut previous = 0.0;
        for &eta in &[0.05, 0.1, 0.2, 0.3, 0.4] {
            let state = LockedState::new(&dist, 1.7, c(eta, 0.0)).unwrap();
            let est = za_norm_estimate(&state, 0.5, 4, 12.0, 49).unwrap();
            assert!(
                est.za_norm >= previous - 1e-9,
                "η={eta}: {} < {previous}",
                est.za_norm
            );
            previous = est.za_norm;
        }
    }

    #[test]
    fn za_norm_rejects_bad_strips() {
        let lor = VelocityDistribution::lorentzian(0.0, 1.0).unwrap();
        let state = LockedState::new(&lor, 3.0, c(0.5, 0.0)).unwrap();
        assert!(za_norm_estimate(&state, 1.5, 4, 10.0, 33).is_err());
        let tab = crate::distributions::VelocityDistribution::tabulated(
            vec![-1.0, 0.0, 1.0],
            vec![0.0, 1.0, 0.0],
        )
        .unwrap();
        let state2 = LockedState::new(&tab, 3.0, c(0.5, 0.0)).unwrap();
        assert!(za_norm_estimate(&state2, 0.5, 4, 10.0, 33).is_err());
    }

    #[test]
    fn locked_u_decays_exponentially_in_xi() {
        let dist = VelocityDistribution::gaussian(0.0, 1.0).unwrap();
        let k = 1.7;
        let r = self_consistent_eta(&dist, k).unwrap();
        let state = LockedState::new(&dist, k, c(r, 0.0)).unwrap();
        let u0 = locked_fourier_u(&state, 1, 0.0).unwrap().norm();
        let u10 = locked_fourier_u(&state, 1, 10.0).unwrap().norm();
        assert!(u10 < u0 * 1e-2, "u(1,10)={u10} vs u(1,0)={u0}");
    }
}
