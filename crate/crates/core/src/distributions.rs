//! Velocity (natural-frequency) distributions with evaluators for the density
//! g(ω), its Fourier transform ĝ(ξ) = ∫ e^{iξω} g(ω) dω, and the Laplace
//! transform Lĝ(z) = ∫_0^∞ ĝ(ξ) e^{-zξ} dξ.
//!
//! Closed forms are used where they exist (Gaussian, Lorentzian, bimodal
//! Gaussian); tabulated densities are treated as exactly piecewise linear,
//! which makes ĝ and Lĝ computable panel by panel in closed form. On the
//! imaginary axis Lĝ(ix) is also available through the Plemelj boundary
//! formula Lĝ(ix) = i·PV ∫ g(x+ω)/ω dω + π g(x), which the evaluator switches
//! to where quadrature of the definition would be impractically oscillatory.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad;

const SQRT_TWO_PI: f64 = 2.506628274631000502415765284811;

/// Exponent at which integrand tails are cut: e^{-40} ≈ 4e-18.
const TAIL_EXP: f64 = 40.0;

/// Density support is covered out to this many stddev-equivalents.
const SUPPORT_SIGMAS: f64 = 40.0;

/// On the imaginary axis, switch from quadrature of the Laplace definition to
/// the Plemelj boundary form once the integrand would oscillate more than
/// about 150 radians across its effective support.
const PLEMELJ_SWITCH_RADIANS: f64 = 150.0;

/// Distribution family with its parameters.
#[derive(Debug, Clone)]
pub enum Family {
    Gaussian { mean: f64, stddev: f64 },
    Lorentzian { center: f64, halfwidth: f64 },
    /// Equal-weight mixture of two unit-mass Gaussians centred at ±offset.
    BimodalGaussian { offset: f64, stddev: f64 },
    /// Piecewise-linear interpolation of (ω, g(ω)) samples; zero outside.
    Tabulated { nodes: Vec<f64>, values: Vec<f64> },
}

/// A probability density of natural frequencies together with transform
/// evaluators. Immutable after construction; cheap to clone for the closed
/// families.
#[derive(Debug, Clone)]
pub struct VelocityDistribution {
    family: Family,
}

impl VelocityDistribution {
    pub fn gaussian(mean: f64, stddev: f64) -> Result<Self> {
        if !mean.is_finite() || !stddev.is_finite() || stddev <= 0.0 {
            return Err(Error::domain("gaussian requires finite mean and stddev > 0"));
        }
        Ok(Self {
            family: Family::Gaussian { mean, stddev },
        })
    }

    pub fn lorentzian(center: f64, halfwidth: f64) -> Result<Self> {
        if !center.is_finite() || !halfwidth.is_finite() || halfwidth <= 0.0 {
            return Err(Error::domain(
                "lorentzian requires finite center and halfwidth > 0",
            ));
        }
        Ok(Self {
            family: Family::Lorentzian { center, halfwidth },
        })
    }

    pub fn bimodal_gaussian(offset: f64, stddev: f64) -> Result<Self> {
        if !offset.is_finite() || !stddev.is_finite() || stddev <= 0.0 || offset < 0.0 {
            return Err(Error::domain(
                "bimodal gaussian requires offset >= 0 and stddev > 0",
            ));
        }
        Ok(Self {
            family: Family::BimodalGaussian { offset, stddev },
        })
    }

    /// Build a tabulated density from sorted (ω, g) samples. The grid must
    /// cover the support: the end densities have to be below 1e-10, the values
    /// nonnegative, and the trapezoidal mass within 1e-6 of one.
    pub fn tabulated(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() != values.len() || nodes.len() < 3 {
            return Err(Error::domain("tabulated grid needs >= 3 matching samples"));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("tabulated grid must be strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::domain("tabulated densities must be finite and >= 0"));
        }
        if values[0] > 1e-10 || values[values.len() - 1] > 1e-10 {
            return Err(Error::domain(
                "tabulated grid must cover the support (end densities < 1e-10)",
            ));
        }
        let mass: f64 = nodes
            .windows(2)
            .zip(values.windows(2))
            .map(|(n, v)| 0.5 * (v[0] + v[1]) * (n[1] - n[0]))
            .sum();
        if (mass - 1.0).abs() > 1e-6 {
            return Err(Error::domain(format!(
                "tabulated mass {mass:.9} deviates from 1 by more than 1e-6"
            )));
        }
        Ok(Self {
            family: Family::Tabulated { nodes, values },
        })
    }

    /// Read a tabulated density from a two-column CSV with header
    /// `omega,density`.
    pub fn tabulated_from_csv(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == "omega,density" => {}
            _ => return Err(Error::usage("expected CSV header `omega,density`")),
        }
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.map(str::trim)
                    .and_then(|t| t.parse::<f64>().ok())
                    .ok_or_else(|| Error::usage(format!("bad CSV row {}", i + 2)))
            };
            nodes.push(parse(cols.next())?);
            values.push(parse(cols.next())?);
            if cols.next().is_some() {
                return Err(Error::usage(format!("row {} has extra columns", i + 2)));
            }
        }
        Self::tabulated(nodes, values)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Whether ĝ has a closed form.
    pub fn has_closed_fourier(&self) -> bool {
        !matches!(self.family, Family::Tabulated { .. })
    }

    /// Density g(ω).
    pub fn density(&self, omega: f64) -> Result<f64> {
        if !omega.is_finite() {
            return Err(Error::domain("density requires finite omega"));
        }
        Ok(self.density_raw(omega))
    }

    fn density_raw(&self, omega: f64) -> f64 {
        match &self.family {
            Family::Gaussian { mean, stddev } => {
                let t = (omega - mean) / stddev;
                (-0.5 * t * t).exp() / (stddev * SQRT_TWO_PI)
            }
            Family::Lorentzian { center, halfwidth } => {
                let d = omega - center;
                halfwidth / (std::f64::consts::PI * (d * d + halfwidth * halfwidth))
            }
            Family::BimodalGaussian { offset, stddev } => {
                let a = (omega - offset) / stddev;
                let b = (omega + offset) / stddev;
                0.5 * ((-0.5 * a * a).exp() + (-0.5 * b * b).exp()) / (stddev * SQRT_TWO_PI)
            }
            Family::Tabulated { nodes, values } => {
                if omega < nodes[0] || omega > nodes[nodes.len() - 1] {
                    return 0.0;
                }
                let idx = match nodes.binary_search_by(|n| n.partial_cmp(&omega).unwrap()) {
                    Ok(i) => return values[i],
                    Err(i) => i - 1,
                };
                let w = (omega - nodes[idx]) / (nodes[idx + 1] - nodes[idx]);
                values[idx] * (1.0 - w) + values[idx + 1] * w
            }
        }
    }

    /// Analytic continuation of the density to complex argument; only the
    /// closed families extend.
    pub fn density_complex(&self, z: Complex64) -> Result<Complex64> {
        match &self.family {
            Family::Gaussian { mean, stddev } => {
                let t = (z - mean) / *stddev;
                Ok((-0.5 * t * t).exp() / (stddev * SQRT_TWO_PI))
            }
            Family::Lorentzian { center, halfwidth } => {
                let d = z - *center;
                Ok(Complex64::new(*halfwidth / std::f64::consts::PI, 0.0)
                    / (d * d + halfwidth * halfwidth))
            }
            Family::BimodalGaussian { offset, stddev } => {
                let a = (z - *offset) / *stddev;
                let b = (z + *offset) / *stddev;
                Ok(0.5 * ((-0.5 * a * a).exp() + (-0.5 * b * b).exp()) / (stddev * SQRT_TWO_PI))
            }
            Family::Tabulated { .. } => Err(Error::domain(
                "tabulated densities have no analytic continuation",
            )),
        }
    }

    /// Fourier transform ĝ(ξ) for ξ ≥ 0. Negative ξ is rejected; callers use
    /// conjugate symmetry explicitly.
    pub fn fourier(&self, xi: f64) -> Result<Complex64> {
        if !xi.is_finite() || xi < 0.0 {
            return Err(Error::domain("fourier requires finite xi >= 0"));
        }
        Ok(self.fourier_raw(xi))
    }

    pub(crate) fn fourier_raw(&self, xi: f64) -> Complex64 {
        match &self.family {
            Family::Gaussian { mean, stddev } => {
                let decay = (-0.5 * stddev * stddev * xi * xi).exp();
                Complex64::from_polar(decay, mean * xi)
            }
            Family::Lorentzian { center, halfwidth } => {
                Complex64::from_polar((-halfwidth * xi).exp(), center * xi)
            }
            Family::BimodalGaussian { offset, stddev } => {
                let decay = (-0.5 * stddev * stddev * xi * xi).exp();
                Complex64::new((offset * xi).cos() * decay, 0.0)
            }
            Family::Tabulated { nodes, values } => tabulated_fourier(nodes, values, xi),
        }
    }

    /// Laplace transform Lĝ(z) = ∫_0^∞ ĝ(ξ) e^{-zξ} dξ.
    ///
    /// Valid for Re z above minus the exponential decay rate of ĝ (any z for
    /// the Gaussian families, Re z > -halfwidth for the Lorentzian, Re z ≥ 0
    /// for tabulated data, where the boundary value is the Plemelj formula).
    pub fn laplace(&self, z: Complex64) -> Result<Complex64> {
        match &self.family {
            Family::Lorentzian { center, halfwidth } => {
                if z.re <= -halfwidth {
                    return Err(Error::domain(format!(
                        "laplace: Re z = {} at or below -halfwidth",
                        z.re
                    )));
                }
                Ok(Complex64::new(1.0, 0.0) / (z + halfwidth - Complex64::new(0.0, *center)))
            }
            Family::Gaussian { stddev, .. } | Family::BimodalGaussian { stddev, .. } => {
                let xi_max = gaussian_tail_cut(z.re, *stddev);
                if z.re == 0.0 && z.im.abs() * xi_max > PLEMELJ_SWITCH_RADIANS {
                    return self.plemelj_boundary(z.im);
                }
                let mut f = |xi: f64| self.fourier_raw(xi) * (-z * xi).exp();
                let q = quad::integrate_complex(&mut f, 0.0, xi_max, 1e-12);
                if q.err > 1e-8 {
                    return Err(Error::numeric("laplace quadrature did not converge", q.err));
                }
                Ok(q.value)
            }
            Family::Tabulated { nodes, values } => {
                if z.re > 1e-10 {
                    Ok(tabulated_laplace_right(nodes, values, z))
                } else if z.re >= -1e-12 {
                    self.plemelj_boundary(z.im)
                } else {
                    Err(Error::domain(
                        "laplace for tabulated data requires Re z >= 0",
                    ))
                }
            }
        }
    }

    /// d/dz Lĝ(z) = -∫_0^∞ ξ ĝ(ξ) e^{-zξ} dξ, used for Newton refinement of
    /// spectral roots.
    pub fn laplace_derivative(&self, z: Complex64) -> Result<Complex64> {
        match &self.family {
            Family::Lorentzian { center, halfwidth } => {
                if z.re <= -halfwidth {
                    return Err(Error::domain("laplace_derivative out of half-plane"));
                }
                let d = z + *halfwidth - Complex64::new(0.0, *center);
                Ok(-Complex64::new(1.0, 0.0) / (d * d))
            }
            Family::Gaussian { stddev, .. } | Family::BimodalGaussian { stddev, .. } => {
                let xi_max = gaussian_tail_cut(z.re, *stddev);
                let mut f = |xi: f64| -xi * self.fourier_raw(xi) * (-z * xi).exp();
                let q = quad::integrate_complex(&mut f, 0.0, xi_max, 1e-12);
                Ok(q.value)
            }
            Family::Tabulated { .. } => {
                if z.re <= 1e-10 {
                    return Err(Error::domain(
                        "laplace_derivative for tabulated data requires Re z > 0",
                    ));
                }
                // Numerical derivative of the panel-exact transform.
                let h = 1e-6;
                let plus = self.laplace(z + h)?;
                let minus = self.laplace(z - h)?;
                Ok((plus - minus) / (2.0 * h))
            }
        }
    }

    /// Boundary value Lĝ(ix) through the Plemelj formula
    /// i·PV ∫ g(x+ω)/ω dω + π g(x).
    pub fn plemelj_boundary(&self, x: f64) -> Result<Complex64> {
        if !x.is_finite() {
            return Err(Error::domain("plemelj_boundary requires finite x"));
        }
        match &self.family {
            Family::Lorentzian { .. } => self.laplace(Complex64::new(0.0, x)),
            Family::Tabulated { nodes, values } => Ok(tabulated_plemelj(nodes, values, x)),
            _ => {
                // PV ∫ g(x+ω)/ω dω = ∫_0^∞ (g(x+ω) - g(x-ω))/ω dω. The
                // integrand is a needle near |ω| ≈ |x| once x leaves the
                // support, so the range is cut at the support-mapped
                // breakpoints to keep the adaptive rule from skipping it.
                let (lo, hi) = self.support();
                let upper = (x - lo).abs().max((hi - x).abs()).max(1.0);
                let mut cuts = vec![0.0, upper];
                for b in [lo - x, hi - x, x - lo, x - hi] {
                    if b > 0.0 && b < upper {
                        cuts.push(b);
                    }
                }
                cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let mut pv = 0.0;
                let mut err = 0.0;
                for seg in cuts.windows(2) {
                    let mut f = |w: f64| (self.density_raw(x + w) - self.density_raw(x - w)) / w;
                    let (v, e) = quad::integrate_real(&mut f, seg[0], seg[1], 1e-12);
                    pv += v;
                    err += e;
                }
                if err > 1e-8 {
                    return Err(Error::numeric("plemelj PV quadrature", err));
                }
                Ok(Complex64::new(
                    std::f64::consts::PI * self.density_raw(x),
                    pv,
                ))
            }
        }
    }

    /// ∫_0^∞ |ĝ(ξ)| dξ. For tabulated data the algebraic tail is estimated
    /// from the exact slope-jump representation ĝ(ξ) = Σ_k Δs_k e^{iξω_k}/ξ²,
    /// with reduced accuracy.
    pub fn fourier_l1(&self) -> Result<f64> {
        match &self.family {
            Family::Gaussian { stddev, .. } => Ok((std::f64::consts::PI / 2.0).sqrt() / stddev),
            Family::Lorentzian { halfwidth, .. } => Ok(1.0 / halfwidth),
            Family::BimodalGaussian { offset, stddev } => {
                let xi_max = gaussian_tail_cut(0.0, *stddev);
                let mut total = 0.0;
                // Integrate between consecutive zeros of cos(offset·ξ) so every
                // panel is smooth.
                let mut a = 0.0;
                let mut k = 0usize;
                loop {
                    let b = if *offset > 0.0 {
                        ((k as f64 + 0.5) * std::f64::consts::PI / offset).min(xi_max)
                    } else {
                        xi_max
                    };
                    let mut f = |xi: f64| {
                        ((offset * xi).cos() * (-0.5 * stddev * stddev * xi * xi).exp()).abs()
                    };
                    total += quad::integrate_real(&mut f, a, b, 1e-12).0;
                    if b >= xi_max {
                        break;
                    }
                    a = b;
                    k += 1;
                }
                Ok(total)
            }
            Family::Tabulated { nodes, values } => {
                let span = nodes[nodes.len() - 1] - nodes[0];
                let xi_cut = (200.0 / span).max(50.0);
                let mut f = |xi: f64| tabulated_fourier(nodes, values, xi).norm();
                let (head, _) = quad::integrate_real(&mut f, 0.0, xi_cut, 1e-9);
                // Tail: mean |P| of the almost-periodic slope-jump sum over a
                // sampling window, times ∫_cut^∞ dξ/ξ² = 1/cut.
                let jumps = slope_jumps(nodes, values);
                let samples = 512;
                let mut mean_p = 0.0;
                for i in 0..samples {
                    let xi = xi_cut * (1.0 + i as f64 / samples as f64);
                    let p: Complex64 = jumps
                        .iter()
                        .map(|(w, j)| Complex64::from_polar(*j, *w * xi))
                        .sum();
                    mean_p += p.norm();
                }
                mean_p /= samples as f64;
                Ok(head + mean_p / xi_cut)
            }
        }
    }

    /// Supremum of the density.
    pub fn sup_density(&self) -> f64 {
        match &self.family {
            Family::Gaussian { stddev, .. } => 1.0 / (stddev * SQRT_TWO_PI),
            Family::Lorentzian { halfwidth, .. } => 1.0 / (std::f64::consts::PI * halfwidth),
            Family::BimodalGaussian { offset, .. } => {
                // Dense scan plus local golden-section refinement; the maximum
                // sits at 0 for small offsets and near ±offset for large ones.
                let (lo, hi) = (0.0, offset + 1.0);
                let mut best_x = 0.0;
                let mut best = self.density_raw(0.0);
                let n = 4000;
                for i in 0..=n {
                    let x = lo + (hi - lo) * i as f64 / n as f64;
                    let d = self.density_raw(x);
                    if d > best {
                        best = d;
                        best_x = x;
                    }
                }
                let mut a = (best_x - 0.01).max(lo);
                let mut b = best_x + 0.01;
                for _ in 0..80 {
                    let m1 = a + 0.381966 * (b - a);
                    let m2 = b - 0.381966 * (b - a);
                    if self.density_raw(m1) < self.density_raw(m2) {
                        a = m1;
                    } else {
                        b = m2;
                    }
                }
                self.density_raw(0.5 * (a + b)).max(best)
            }
            Family::Tabulated { values, .. } => values.iter().cloned().fold(0.0, f64::max),
        }
    }

    /// Total mass by quadrature over the effective support (Lorentzian via the
    /// ω = tan u substitution); construction guarantees ≈ 1.
    pub fn mass(&self) -> f64 {
        match &self.family {
            Family::Lorentzian { center, halfwidth } => {
                let mut f = |u: f64| {
                    let t = u.tan();
                    let sec2 = 1.0 + t * t;
                    self.density_raw(center + halfwidth * t) * halfwidth * sec2
                };
                let half_pi = 0.5 * std::f64::consts::PI;
                quad::integrate_real(&mut f, -half_pi + 1e-12, half_pi - 1e-12, 1e-12).0
            }
            Family::Tabulated { nodes, values } => nodes
                .windows(2)
                .zip(values.windows(2))
                .map(|(n, v)| 0.5 * (v[0] + v[1]) * (n[1] - n[0]))
                .sum(),
            _ => {
                let (lo, hi) = self.support();
                let mut f = |w: f64| self.density_raw(w);
                quad::integrate_real(&mut f, lo, hi, 1e-12).0
            }
        }
    }

    /// Interval outside which the density is negligible (40 stddev-equivalents
    /// for the analytic families, the grid for tabulated data).
    pub fn support(&self) -> (f64, f64) {
        match &self.family {
            Family::Gaussian { mean, stddev } => {
                (mean - SUPPORT_SIGMAS * stddev, mean + SUPPORT_SIGMAS * stddev)
            }
            Family::Lorentzian { center, halfwidth } => (
                center - 1e9 * halfwidth,
                center + 1e9 * halfwidth,
            ),
            Family::BimodalGaussian { offset, stddev } => (
                -offset - SUPPORT_SIGMAS * stddev,
                offset + SUPPORT_SIGMAS * stddev,
            ),
            Family::Tabulated { nodes, .. } => (nodes[0], nodes[nodes.len() - 1]),
        }
    }

    /// Exponential decay rate bound a_max of ĝ: Lĝ is analytic for
    /// Re z > -a_max.
    pub fn analyticity_width(&self) -> f64 {
        match &self.family {
            Family::Gaussian { .. } | Family::BimodalGaussian { .. } => f64::INFINITY,
            Family::Lorentzian { halfwidth, .. } => *halfwidth,
            Family::Tabulated { .. } => 0.0,
        }
    }

    /// Timescale on which ĝ decays; sets default grids.
    pub fn fourier_decay_time(&self) -> f64 {
        match &self.family {
            Family::Gaussian { stddev, .. } | Family::BimodalGaussian { stddev, .. } => {
                1.0 / stddev
            }
            Family::Lorentzian { halfwidth, .. } => 1.0 / halfwidth,
            Family::Tabulated { nodes, .. } => {
                let span = nodes[nodes.len() - 1] - nodes[0];
                2.0 / span.max(1e-12)
            }
        }
    }

    /// Characteristic frequency scale (sets Penrose curve extents).
    pub fn frequency_scale(&self) -> f64 {
        match &self.family {
            Family::Gaussian { mean, stddev } => stddev + mean.abs(),
            Family::Lorentzian { center, halfwidth } => halfwidth + center.abs(),
            Family::BimodalGaussian { offset, stddev } => stddev + offset,
            Family::Tabulated { nodes, .. } => {
                0.5 * (nodes[nodes.len() - 1] - nodes[0]).max(1e-12)
            }
        }
    }

    /// ξ beyond which |ĝ(ξ)| e^{-re_z·ξ} stays below ~1e-17, used to truncate
    /// Laplace-type quadratures.
    pub(crate) fn laplace_tail_cut(&self, re_z: f64) -> f64 {
        match &self.family {
            Family::Gaussian { stddev, .. } | Family::BimodalGaussian { stddev, .. } => {
                gaussian_tail_cut(re_z, *stddev)
            }
            Family::Lorentzian { halfwidth, .. } => TAIL_EXP / (re_z + halfwidth).max(1e-12),
            Family::Tabulated { .. } => {
                if re_z > 0.0 {
                    TAIL_EXP / re_z
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// ∫ |g(ω + ia)| dω for the analytic families.
    pub fn shifted_l1_norm(&self, a: f64) -> Result<f64> {
        if a < 0.0 {
            return Err(Error::domain("shifted_l1_norm requires a >= 0"));
        }
        if let Family::Lorentzian { halfwidth, .. } = &self.family {
            if a >= *halfwidth {
                return Err(Error::domain(
                    "lorentzian strip is limited to a < halfwidth",
                ));
            }
        }
        let (lo, hi) = match &self.family {
            Family::Lorentzian { center, halfwidth } => {
                // |g| ~ 1/ω² tail: integrate via tan substitution.
                let mut f = |u: f64| {
                    let t = u.tan();
                    let sec2 = 1.0 + t * t;
                    let z = Complex64::new(center + halfwidth * t, a);
                    self.density_complex(z).map(|d| d.norm()).unwrap_or(0.0) * halfwidth * sec2
                };
                let half_pi = 0.5 * std::f64::consts::PI;
                return Ok(quad::integrate_real(&mut f, -half_pi + 1e-12, half_pi - 1e-12, 1e-11).0);
            }
            _ => self.support(),
        };
        let mut f = |w: f64| {
            self.density_complex(Complex64::new(w, a))
                .map(|d| d.norm())
                .unwrap_or(0.0)
        };
        Ok(quad::integrate_real(&mut f, lo, hi, 1e-11).0)
    }
}

fn gaussian_tail_cut(re_z: f64, stddev: f64) -> f64 {
    // Solve σ²ξ²/2 + re_z·ξ = TAIL_EXP for the positive root.
    let s2 = stddev * stddev;
    ((-re_z + (re_z * re_z + 2.0 * s2 * TAIL_EXP).sqrt()) / s2).max(1.0 / stddev)
}

/// Slope jumps (ω_k, Δs_k) of a piecewise-linear density; its second
/// derivative is exactly Σ Δs_k δ_{ω_k}, so ĝ(ξ) = Σ Δs_k e^{iξω_k} / ξ².
fn slope_jumps(nodes: &[f64], values: &[f64]) -> Vec<(f64, f64)> {
    let n = nodes.len();
    let mut out = Vec::with_capacity(n);
    let slope = |i: usize| (values[i + 1] - values[i]) / (nodes[i + 1] - nodes[i]);
    for k in 0..n {
        let left = if k == 0 { 0.0 } else { slope(k - 1) };
        let right = if k == n - 1 { 0.0 } else { slope(k) };
        let jump = right - left;
        if jump != 0.0 {
            out.push((nodes[k], jump));
        }
    }
    out
}

/// Panel moments E0 = ∫_0^Δ e^{iξs} ds and E1 = ∫_0^Δ s e^{iξs} ds.
fn panel_moments(xi: f64, delta: f64) -> (Complex64, Complex64) {
    let t = xi * delta;
    if t.abs() < 1e-4 {
        // Series: E0 = Δ(1 + it/2 - t²/6 - it³/24), E1 = Δ²(1/2 + it/3 - t²/8).
        let e0 = Complex64::new(1.0 - t * t / 6.0, 0.5 * t - t * t * t / 24.0) * delta;
        let e1 = Complex64::new(0.5 - t * t / 8.0, t / 3.0) * delta * delta;
        (e0, e1)
    } else {
        let eit = Complex64::from_polar(1.0, t);
        let ixi = Complex64::new(0.0, xi);
        let e0 = (eit - 1.0) / ixi;
        let e1 = delta * eit / ixi - (eit - 1.0) / (ixi * ixi);
        (e0, e1)
    }
}

/// Exact ∫ e^{iξω} g(ω) dω for piecewise-linear g: per panel
/// e^{iξa} [p E0 + q E1]. On a uniform grid the moments are shared between
/// panels and the e^{iξω_k} factors advance by a fixed rotation, which makes
/// the evaluation a pair of rotated dot products.
fn tabulated_fourier(nodes: &[f64], values: &[f64], xi: f64) -> Complex64 {
    let n = nodes.len();
    let h0 = nodes[1] - nodes[0];
    let uniform = nodes
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h0).abs() < 1e-12 * h0);
    if uniform {
        let (e0, e1) = panel_moments(xi, h0);
        let step = Complex64::from_polar(1.0, xi * h0);
        let mut phase = Complex64::from_polar(1.0, xi * nodes[0]);
        let mut sum_p = Complex64::new(0.0, 0.0);
        let mut sum_q = Complex64::new(0.0, 0.0);
        for i in 0..n - 1 {
            let p = values[i];
            let q = (values[i + 1] - values[i]) / h0;
            sum_p += p * phase;
            sum_q += q * phase;
            phase *= step;
        }
        return sum_p * e0 + sum_q * e1;
    }
    let mut total = Complex64::new(0.0, 0.0);
    for i in 0..n - 1 {
        let a = nodes[i];
        let delta = nodes[i + 1] - a;
        let p = values[i];
        let q = (values[i + 1] - values[i]) / delta;
        if p == 0.0 && q == 0.0 {
            continue;
        }
        let (e0, e1) = panel_moments(xi, delta);
        total += Complex64::from_polar(1.0, xi * a) * (p * e0 + q * e1);
    }
    total
}

/// Exact Lĝ(z) = ∫ g(ω)/(z - iω) dω for piecewise-linear g and Re z > 0.
fn tabulated_laplace_right(nodes: &[f64], values: &[f64], z: Complex64) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    for i in 0..nodes.len() - 1 {
        let a = nodes[i];
        let delta = nodes[i + 1] - a;
        let p = values[i];
        let q = (values[i + 1] - values[i]) / delta;
        if p == 0.0 && q == 0.0 {
            continue;
        }
        let z0 = z - Complex64::new(0.0, a);
        let ratio = Complex64::new(0.0, delta) / z0;
        // A0 = ∫_0^Δ dw/(z0 - iw), A1 = ∫_0^Δ w dw/(z0 - iw)
        let log_term = (1.0 - ratio).ln();
        let a0 = Complex64::new(0.0, 1.0) * log_term;
        let a1 = Complex64::new(0.0, delta) + z0 * log_term;
        total += p * a0 + q * a1;
    }
    total
}

/// Plemelj boundary value for piecewise-linear g, with the principal value
/// computed panel-exactly (the integrand is linear over each panel).
fn tabulated_plemelj(nodes: &[f64], values: &[f64], x: f64) -> Complex64 {
    let n = nodes.len();
    let mut pv = 0.0;
    for i in 0..n - 1 {
        let (a, b) = (nodes[i], nodes[i + 1]);
        let p = values[i];
        let q = (values[i + 1] - values[i]) / (b - a);
        if p == 0.0 && q == 0.0 {
            continue;
        }
        // ∫ (p + q(s-a))/(s-x) ds = q(b-a) + (p + q(x-a)) ln((b-x)/(a-x)),
        // which is also the principal value when x ∈ (a, b).
        let coeff = p + q * (x - a);
        let log = if x > a && x < b {
            ((b - x) / (x - a)).ln()
        } else if (x - a).abs() < 1e-300 || (x - b).abs() < 1e-300 {
            // Node coincides with x: pair the adjacent panels through the
            // symmetric limit; the singular parts cancel because g is
            // continuous. Shift x infinitesimally to keep the formula finite.
            let eps = 1e-13 * (b - a);
            (((b - x).abs() + eps) / ((x - a).abs() + eps)).ln()
        } else {
            ((b - x) / (a - x)).ln()
        };
        pv += q * (b - a) + coeff * log;
    }
    let g_at = {
        let dist = VelocityDistribution {
            family: Family::Tabulated {
                nodes: nodes.to_vec(),
                values: values.to_vec(),
            },
        };
        dist.density_raw(x)
    };
    Complex64::new(std::f64::consts::PI * g_at, pv)
}
