//! Linear stability of the incoherent state via the Penrose criterion.
//!
//! The linearised order parameter is stable iff 1 + (Lk)(z) has no zeros in
//! the closed right half plane, with k(t) = -(K/2) ĝ(t). Since
//! (Lk)(z) = -(K/2) Lĝ(z), this is the condition that the boundary curve
//! Lĝ(iR) does not encircle 2/K. The curve starts and ends at 0, so a sampled
//! polyline closed through the origin carries the winding count; the number of
//! unstable roots is the winding of the curve around 2/K taken with the
//! orientation that makes enclosed points count positively.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::distributions::VelocityDistribution;
use crate::error::{Error, Result};

/// Required |Lĝ(±iX)| at the curve ends.
const ENDPOINT_CLOSURE: f64 = 1e-4;
/// Initial extent X = 8 × frequency scale, doubled on failure.
const EXTENT_FACTOR: f64 = 8.0;
/// The 1/x tails of Lĝ(ix) need X ≈ 1e4·scale to close to 1e-4, so the
/// doubling cap sits well above that.
const EXTENT_CAP_FACTOR: f64 = 16384.0;
/// Largest argument step tolerated between consecutive samples before local
/// refinement kicks in.
const MAX_ARG_STEP: f64 = std::f64::consts::FRAC_PI_2;
/// Minimum distance of 2/K from the sampled curve; below this the winding
/// number is ill-posed in floating point.
const DEGENERACY_TOL: f64 = 1e-9;

/// Sampled boundary curve x ↦ Lĝ(ix) on a symmetric extent [-X, X].
#[derive(Debug, Clone)]
pub struct PenroseCurve {
    dist: VelocityDistribution,
    /// (x, Lĝ(ix)) ordered by increasing x.
    samples: Vec<(f64, Complex64)>,
    /// max |w| over the two endpoints.
    pub closure_tolerance: f64,
}

/// Stability verdict for one coupling, with the critical couplings attached.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub coupling: f64,
    pub winding_count: i32,
    pub stable: bool,
    /// 2/(π‖g‖∞); couplings below are stable for every distribution.
    pub sufficient_bound: f64,
    /// Energy-method critical coupling 2/∫₀^∞|ĝ|.
    pub energy_critical: f64,
    /// Penrose critical coupling (first winding transition).
    pub penrose_critical: f64,
}

impl PenroseCurve {
    pub fn samples(&self) -> &[(f64, Complex64)] {
        &self.samples
    }

    pub fn extent(&self) -> f64 {
        self.samples.last().map(|s| s.0).unwrap_or(0.0)
    }

    /// Winding number of the curve (closed through 0) around 2/K, equal to the
    /// number of zeros of 1 + (Lk)(z) in Re z > 0 counted with multiplicity.
    ///
    /// Inserts midpoint samples wherever a single argument increment exceeds
    /// π/2, so the count is robust against coarse initial sampling.
    pub fn winding_count(&mut self, coupling: f64) -> Result<i32> {
        if !(coupling > 0.0) {
            return Err(Error::usage("winding_count requires K > 0"));
        }
        let p = Complex64::new(2.0 / coupling, 0.0);

        let min_dist = self
            .samples
            .iter()
            .map(|(_, w)| (w - p).norm())
            .fold(f64::INFINITY, f64::min);
        if min_dist < DEGENERACY_TOL {
            return Err(Error::OnCurve { distance: min_dist });
        }

        for _pass in 0..48 {
            let mut inserts: Vec<(usize, f64)> = Vec::new();
            for i in 0..self.samples.len() - 1 {
                let a = self.samples[i].1 - p;
                let b = self.samples[i + 1].1 - p;
                if (b / a).arg().abs() > MAX_ARG_STEP {
                    inserts.push((i, 0.5 * (self.samples[i].0 + self.samples[i + 1].0)));
                }
            }
            if inserts.is_empty() {
                break;
            }
            let new_samples: Vec<(usize, (f64, Complex64))> = inserts
                .par_iter()
                .map(|&(i, x)| {
                    let w = self.dist.laplace(Complex64::new(0.0, x)).unwrap_or_else(|_| {
                        // A failed refinement sample falls back to the segment
                        // midpoint, leaving the increment unchanged.
                        0.5 * (self.samples[i].1 + self.samples[i + 1].1)
                    });
                    (i, (x, w))
                })
                .collect();
            for (offset, (i, sample)) in new_samples.into_iter().enumerate() {
                self.samples.insert(i + 1 + offset, sample);
            }
            let refreshed = self
                .samples
                .iter()
                .map(|(_, w)| (w - p).norm())
                .fold(f64::INFINITY, f64::min);
            if refreshed < DEGENERACY_TOL {
                return Err(Error::OnCurve { distance: refreshed });
            }
        }

        // Total signed argument along increasing x, closed through the origin.
        let mut total = 0.0;
        let n = self.samples.len();
        for i in 0..n - 1 {
            let a = self.samples[i].1 - p;
            let b = self.samples[i + 1].1 - p;
            total += (b / a).arg();
        }
        let origin = -p;
        total += (origin / (self.samples[n - 1].1 - p)).arg();
        total += ((self.samples[0].1 - p) / origin).arg();

        let turns = total / (2.0 * std::f64::consts::PI);
        let rounded = turns.round();
        if (turns - rounded).abs() > 0.25 {
            return Err(Error::numeric(
                "winding sum did not settle near an integer",
                turns,
            ));
        }
        // Increasing x traverses the curve clockwise around enclosed points;
        // zeros in Re z > 0 correspond to the opposite orientation.
        Ok(-(rounded as i32))
    }
}

/// Sample the boundary curve Lĝ(iR) with n points on [-X, X], widening X until
/// the endpoint values are below 1e-4 in modulus.
pub fn boundary_curve(
    dist: &VelocityDistribution,
    extent: f64,
    n: usize,
) -> Result<PenroseCurve> {
    if !(extent > 0.0) || n < 64 {
        return Err(Error::usage("boundary_curve requires X > 0 and n >= 64"));
    }
    let scale = dist.frequency_scale();
    let cap = EXTENT_CAP_FACTOR * scale;
    let mut x_ext = extent;
    let mut achieved = f64::INFINITY;
    while x_ext <= cap {
        let end = dist.laplace(Complex64::new(0.0, x_ext))?.norm();
        let start = dist.laplace(Complex64::new(0.0, -x_ext))?.norm();
        achieved = end.max(start);
        if achieved < ENDPOINT_CLOSURE {
            break;
        }
        x_ext *= 2.0;
    }
    if achieved >= ENDPOINT_CLOSURE {
        return Err(Error::numeric(
            "endpoint closure not reached at the extent cap",
            achieved,
        ));
    }

    let samples: Vec<(f64, Complex64)> = (0..n)
        .into_par_iter()
        .map(|j| {
            let x = -x_ext + 2.0 * x_ext * j as f64 / (n - 1) as f64;
            dist.laplace(Complex64::new(0.0, x)).map(|w| (x, w))
        })
        .collect::<Result<_>>()?;

    Ok(PenroseCurve {
        dist: dist.clone(),
        samples,
        closure_tolerance: achieved,
    })
}

fn default_curve(dist: &VelocityDistribution) -> Result<PenroseCurve> {
    boundary_curve(dist, EXTENT_FACTOR * dist.frequency_scale(), 4097)
}

/// Smallest K > 0 at which the winding count leaves 0, located by a geometric
/// scan over [K_lo, K_hi] followed by bisection to relative tolerance 1e-8.
/// Returns Ok(None) if the distribution stays stable over the whole bracket.
pub fn critical_coupling_in(
    dist: &VelocityDistribution,
    k_lo: f64,
    k_hi: f64,
) -> Result<Option<f64>> {
    if !(k_lo > 0.0 && k_hi > k_lo) {
        return Err(Error::usage("critical_coupling requires 0 < K_lo < K_hi"));
    }
    let mut curve = default_curve(dist)?;
    let mut winding_at = |k: f64, curve: &mut PenroseCurve| -> Result<Option<i32>> {
        match curve.winding_count(k) {
            Ok(w) => Ok(Some(w)),
            // Exactly critical: treat as the transition itself.
            Err(Error::OnCurve { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };

    // Geometric scan to bracket the first transition.
    let decades = (k_hi / k_lo).log10();
    let steps = (decades * 64.0).ceil() as usize;
    let mut prev_k = k_lo;
    let prev = winding_at(k_lo, &mut curve)?;
    if prev != Some(0) && prev.is_some() {
        // Already unstable at the lower end.
        return Ok(Some(k_lo));
    }
    let mut bracket = None;
    for i in 1..=steps {
        let k = k_lo * (k_hi / k_lo).powf(i as f64 / steps as f64);
        match winding_at(k, &mut curve)? {
            Some(0) => {
                prev_k = k;
            }
            _ => {
                bracket = Some((prev_k, k));
                break;
            }
        }
    }
    let (mut lo, mut hi) = match bracket {
        Some(b) => b,
        None => return Ok(None),
    };
    while (hi - lo) > 1e-8 * hi {
        let mid = 0.5 * (lo + hi);
        match winding_at(mid, &mut curve)? {
            Some(0) => lo = mid,
            _ => hi = mid,
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Critical coupling on the default bracket [1e-3, 1e3].
pub fn critical_coupling(dist: &VelocityDistribution) -> Result<Option<f64>> {
    critical_coupling_in(dist, 1e-3, 1e3)
}

/// Energy-method critical coupling K_ec = 2 / ∫_0^∞ |ĝ(ξ)| dξ.
pub fn energy_critical_coupling(dist: &VelocityDistribution) -> Result<f64> {
    let integral = dist.fourier_l1()?;
    if !integral.is_finite() || integral <= 0.0 {
        return Err(Error::domain("∫|ĝ| is not finite"));
    }
    Ok(2.0 / integral)
}

/// Sufficient stability bound 2/(π ‖g‖∞).
pub fn sufficient_bound(dist: &VelocityDistribution) -> f64 {
    2.0 / (std::f64::consts::PI * dist.sup_density())
}

/// Full stability report at one coupling.
pub fn stability_report(dist: &VelocityDistribution, coupling: f64) -> Result<StabilityReport> {
    let mut curve = default_curve(dist)?;
    let winding = curve.winding_count(coupling)?;
    let k_c = critical_coupling(dist)?.unwrap_or(f64::INFINITY);
    Ok(StabilityReport {
        coupling,
        winding_count: winding,
        stable: winding == 0,
        sufficient_bound: sufficient_bound(dist),
        energy_critical: energy_critical_coupling(dist)?,
        penrose_critical: k_c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::VelocityDistribution;

    const SQRT_TWO_PI: f64 = 2.506628274631;

    #[test]
    fn curve_crossing_for_gaussian() {
        let dist = VelocityDistribution::gaussian(0.0, 1.0).unwrap();
        let curve = boundary_curve(&dist, 8.0, 257).unwrap();
        // Sample closest to x = 0 must sit near π g(0) on the real axis.
        let (_, w) = curve
            .samples()
            .iter()
            .min_by(|a, b| a.0.abs().partial_cmp(&b.0.abs()).unwrap())
            .unwrap();
        assert!((w.re - std::f64::consts::PI / SQRT_TWO_PI).abs() < 1e-6);
        assert!(w.im.abs() < 1e-6);
        assert!(curve.closure_tolerance < 1e-4);
    }

    #[test]
    fn lorentzian_curve_is_the_circle() {
        let dist = VelocityDistribution::lorentzian(0.0, 1.0).unwrap();
        let curve = boundary_curve(&dist, 8.0, 129).unwrap();
        for &(x, w) in curve.samples() {
            let expected = Complex64::new(1.0, 0.0) / Complex64::new(1.0, x);
            assert!((w - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn gaussian_winding_counts() {
        let dist = VelocityDistribution::gaussian(0.0, 1.0).unwrap();
        let mut curve = default_curve(&dist).unwrap();
        assert_eq!(curve.winding_count(1.0).unwrap(), 0);
        assert_eq!(curve.winding_count(2.0).unwrap(), 1);
    }

    #[test]
    fn winding_stable_under_grid_doubling() {
        let dist = VelocityDistribution::gaussian(0.0, 1.0).unwrap();
        for &k in &[0.5, 1.0, 1.3, 2.0, 3.0] {
            let mut coarse = boundary_curve(&dist, 8.0, 4097).unwrap();
            let mut fine = boundary_curve(&dist, 8.0, 8193).unwrap();
            assert_eq!(
                coarse.winding_count(k).unwrap(),
                fine.winding_count(k).unwrap()
            );
        }
    }

    #[test]
    fn gaussian_critical_coupling() {
        let dist = VelocityDistribution::gaussian(0.0, 1.0).unwrap();
        let kc = critical_coupling(&dist).unwrap().unwrap();
        assert!((kc - 4.0 / SQRT_TWO_PI).abs() < 1e-6, "kc = {kc}");
    }

    #[test]
    fn lorentzian_critical_coupling() {
        // Oracle: 1 - (K/2)/(z+1) has its root at z = K/2 - 1, entering
        // Re z >= 0 at K = 2.
        let dist = VelocityDistribution::lorentzian(0.0, 1.0).unwrap();
        let kc = critical_coupling(&dist).unwrap().unwrap();
        assert!((kc - 2.0).abs() < 1e-6, "kc = {kc}");
    }

    #[test]
    fn critical_coupling_is_translation_invariant() {
        let base = VelocityDistribution::gaussian(0.0, 1.0).unwrap();
        let shifted = VelocityDistribution::gaussian(0.7, 1.0).unwrap();
        let k0 = critical_coupling(&base).unwrap().unwrap();
        let k1 = critical_coupling(&shifted).unwrap().unwrap();
        assert!((k0 - k1).abs() < 1e-6, "{k0} vs {k1}");
    }

    #[test]
    fn critical_coupling_scales_with_stddev() {
        let k1 = critical_coupling(&VelocityDistribution::gaussian(0.0, 1.0).unwrap())
            .unwrap()
            .unwrap();
        let k2 = critical_coupling(&VelocityDistribution::gaussian(0.0, 2.0).unwrap())
            .unwrap()
            .unwrap();
        assert!((k2 - 2.0 * k1).abs() < 1e-5, "{k1} {k2}");
    }

    #[test]
    fn energy_critical_values() {
        let gau = VelocityDistribution::gaussian(0.0, 1.0).unwrap();
        assert!((energy_critical_coupling(&gau).unwrap() - 4.0 / SQRT_TWO_PI).abs() < 1e-9);
        let lor = VelocityDistribution::lorentzian(0.0, 1.0).unwrap();
        assert!((energy_critical_coupling(&lor).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn energy_critical_below_penrose_for_bimodal() {
        let bim = VelocityDistribution::bimodal_gaussian(1.5, 1.0).unwrap();
        let kec = energy_critical_coupling(&bim).unwrap();
        let kc = critical_coupling(&bim).unwrap().unwrap();
        assert!(kec < kc, "kec {kec} kc {kc}");
    }

    #[test]
    fn sufficient_bound_is_sharp_for_symmetric_unimodal() {
        for dist in [
            VelocityDistribution::gaussian(0.0, 1.0).unwrap(),
            VelocityDistribution::lorentzian(0.0, 1.0).unwrap(),
        ] {
            let kc = critical_coupling(&dist).unwrap().unwrap();
            let bound = sufficient_bound(&dist);
            assert!(bound <= kc + 1e-6);
            assert!((bound - kc).abs() < 1e-6);
        }
    }

    #[test]
    fn below_sufficient_bound_is_stable() {
        for dist in [
            VelocityDistribution::gaussian(0.0, 1.0).unwrap(),
            VelocityDistribution::lorentzian(0.3, 0.7).unwrap(),
            VelocityDistribution::bimodal_gaussian(1.5, 1.0).unwrap(),
        ] {
            let bound = sufficient_bound(&dist);
            let mut curve = default_curve(&dist).unwrap();
            assert_eq!(curve.winding_count(0.95 * bound).unwrap(), 0);
        }
    }

    #[test]
    fn bimodal_covering_number_is_two_past_critical() {
        let bim = VelocityDistribution::bimodal_gaussian(1.5, 1.0).unwrap();
        let kc = critical_coupling(&bim).unwrap().unwrap();
        let mut curve = default_curve(&bim).unwrap();
        assert_eq!(curve.winding_count(kc * 1.002).unwrap(), 2);
        assert_eq!(curve.winding_count(kc * 0.998).unwrap(), 0);
    }

    #[test]
    fn degeneracy_guard_fires_on_curve() {
        let dist = VelocityDistribution::gaussian(0.0, 1.0).unwrap();
        let mut curve = default_curve(&dist).unwrap();
        // 2/K exactly at the real-axis crossing π g(0).
        let k = 2.0 / (std::f64::consts::PI / SQRT_TWO_PI);
        match curve.winding_count(k) {
            Err(Error::OnCurve { .. }) => {}
            other => panic!("expected degeneracy error, got {other:?}"),
        }
    }
}
