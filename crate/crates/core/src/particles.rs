//! Finite-N Kuramoto simulator for cross-validation of the mean-field order
//! parameter: dθ_i/dt = ω_i + K·Im(η e^{-iθ_i}) with η = (1/N) Σ e^{iθ_j},
//! integrated by classical RK4 with the mean field recomputed once per stage.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::distributions::{Family, VelocityDistribution};
use crate::error::{Error, Result};
use crate::quad;
use crate::volterra::SampledSignal;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Frequency sampling scheme.
#[derive(Debug, Clone, Copy)]
pub enum SampleScheme {
    /// Deterministic quantiles ω_i = G⁻¹((i - ½)/N).
    Quantile,
    /// Reproducible inverse-CDF draws from a seeded generator.
    SeededRandom(u64),
}

/// Oscillator ensemble; phases live in [0, 2π).
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub phases: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub t: f64,
}

impl Ensemble {
    pub fn new(phases: Vec<f64>, frequencies: Vec<f64>) -> Result<Self> {
        if phases.len() != frequencies.len() || phases.len() < 2 {
            return Err(Error::usage("ensemble needs N >= 2 matching arrays"));
        }
        let mut e = Ensemble {
            phases,
            frequencies,
            t: 0.0,
        };
        e.wrap();
        Ok(e)
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    fn wrap(&mut self) {
        for p in &mut self.phases {
            *p = p.rem_euclid(TWO_PI);
        }
    }

    /// Evenly spread phases θ_i = 2πi/N with quantile frequencies.
    pub fn incoherent(dist: &VelocityDistribution, n: usize, scheme: SampleScheme) -> Result<Self> {
        let frequencies = sample_frequencies(dist, n, scheme)?;
        let phases = (0..n).map(|i| TWO_PI * i as f64 / n as f64).collect();
        Ensemble::new(phases, frequencies)
    }

    /// Deterministic low-discrepancy realisation of the product measure
    /// g(ω) (1 + 2 Re(c̄₁ e^{iθ}))/2π: a tensor grid of n_omega quantile
    /// frequencies × n_theta first-order-displaced phases. The displacement
    /// θ = x + 2 Im(c₁ e^{-ix}) reproduces the first-mode density to O(|c₁|²).
    pub fn matched(
        dist: &VelocityDistribution,
        c1: Complex64,
        n_omega: usize,
        n_theta: usize,
    ) -> Result<Self> {
        if 2.0 * c1.norm() > 1.0 {
            return Err(Error::usage("matched ensemble needs 2|c1| <= 1"));
        }
        let omegas = sample_frequencies(dist, n_omega, SampleScheme::Quantile)?;
        let n = n_omega * n_theta;
        let mut phases = Vec::with_capacity(n);
        let mut frequencies = Vec::with_capacity(n);
        for &w in &omegas {
            for b in 0..n_theta {
                let x = TWO_PI * (b as f64 + 0.5) / n_theta as f64;
                let theta = x + 2.0 * (c1 * Complex64::from_polar(1.0, -x)).im;
                phases.push(theta);
                frequencies.push(w);
            }
        }
        Ensemble::new(phases, frequencies)
    }
}

/// Draw N frequencies from the distribution.
pub fn sample_frequencies(
    dist: &VelocityDistribution,
    n: usize,
    scheme: SampleScheme,
) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::usage("sample_frequencies requires N >= 2"));
    }
    match scheme {
        SampleScheme::Quantile => {
            let inv = QuantileTable::new(dist)?;
            (0..n)
                .map(|i| inv.quantile((i as f64 + 0.5) / n as f64))
                .collect()
        }
        SampleScheme::SeededRandom(seed) => {
            let inv = QuantileTable::new(dist)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n)
                .map(|_| inv.quantile(rng.gen_range(f64::EPSILON..1.0)))
                .collect()
        }
    }
}

/// CDF inverter: closed form for the Lorentzian, otherwise bisection against a
/// cumulative quadrature table (one Gauss–Kronrod panel per cell, so the CDF
/// is accurate to ~1e-15 and bisection to 1e-10 is meaningful).
struct QuantileTable {
    closed_lorentzian: Option<(f64, f64)>,
    nodes: Vec<f64>,
    cdf: Vec<f64>,
    density: Option<VelocityDistribution>,
}

impl QuantileTable {
    fn new(dist: &VelocityDistribution) -> Result<Self> {
        if let Family::Lorentzian { center, halfwidth } = dist.family() {
            return Ok(QuantileTable {
                closed_lorentzian: Some((*center, *halfwidth)),
                nodes: Vec::new(),
                cdf: Vec::new(),
                density: None,
            });
        }
        let (lo, hi) = dist.support();
        let cells = 4096usize;
        let h = (hi - lo) / cells as f64;
        let mut nodes = Vec::with_capacity(cells + 1);
        let mut cdf = Vec::with_capacity(cells + 1);
        nodes.push(lo);
        cdf.push(0.0);
        let mut cum = 0.0;
        for i in 0..cells {
            let a = lo + i as f64 * h;
            let mut f = |w: f64| dist.density(w).unwrap_or(0.0);
            cum += quad::integrate_real(&mut f, a, a + h, 1e-15).0;
            nodes.push(a + h);
            cdf.push(cum);
        }
        let total = cum;
        if !(total > 0.9999) {
            return Err(Error::numeric("CDF mass lost in quadrature", total));
        }
        for v in &mut cdf {
            *v /= total;
        }
        Ok(QuantileTable {
            closed_lorentzian: None,
            nodes,
            cdf,
            density: Some(dist.clone()),
        })
    }

    fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::domain("quantile requires p in (0, 1)"));
        }
        if let Some((center, halfwidth)) = self.closed_lorentzian {
            return Ok(center + halfwidth * (std::f64::consts::PI * (p - 0.5)).tan());
        }
        let idx = match self
            .cdf
            .binary_search_by(|c| c.partial_cmp(&p).unwrap())
        {
            Ok(i) => return Ok(self.nodes[i]),
            Err(i) => i.clamp(1, self.cdf.len() - 1),
        };
        let dist = self.density.as_ref().unwrap();
        let (mut a, mut b) = (self.nodes[idx - 1], self.nodes[idx]);
        let (ca, _cb) = (self.cdf[idx - 1], self.cdf[idx]);
        // Bisection on the per-cell quadrature refinement of the CDF.
        let mut fa = ca - p;
        for _ in 0..80 {
            if b - a < 1e-10 {
                break;
            }
            let m = 0.5 * (a + b);
            let mut f = |w: f64| dist.density(w).unwrap_or(0.0);
            let fm = ca + quad::integrate_real(&mut f, self.nodes[idx - 1], m, 1e-15).0 - p;
            if (fm >= 0.0) == (fa >= 0.0) {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        Ok(0.5 * (a + b))
    }
}

/// Empirical order parameter (1/N) Σ e^{iθ_j}.
pub fn empirical_order_parameter(ens: &Ensemble) -> Complex64 {
    let sum = ens
        .phases
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, &th| {
            acc + Complex64::from_polar(1.0, th)
        });
    sum / ens.len() as f64
}

fn stage_derivative(
    phases: &[f64],
    frequencies: &[f64],
    coupling: f64,
    out: &mut Vec<f64>,
) {
    let n = phases.len() as f64;
    let eta = phases
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, &th| {
            acc + Complex64::from_polar(1.0, th)
        })
        / n;
    out.clear();
    out.par_extend(phases.par_iter().zip(frequencies.par_iter()).map(
        |(&th, &om)| {
            // K Im(η e^{-iθ}) = (K/2i)(η e^{-iθ} - η̄ e^{iθ})
            om + coupling * (eta * Complex64::from_polar(1.0, -th)).im
        },
    ));
}

/// One classical RK4 step; phases are rewrapped at the end.
pub fn ode_step(ens: &mut Ensemble, coupling: f64, dt: f64) -> Result<()> {
    if !(dt > 0.0) {
        return Err(Error::usage("ode_step requires dt > 0"));
    }
    let n = ens.len();
    let mut k1 = Vec::with_capacity(n);
    let mut k2 = Vec::with_capacity(n);
    let mut k3 = Vec::with_capacity(n);
    let mut k4 = Vec::with_capacity(n);
    let mut tmp = vec![0.0; n];

    stage_derivative(&ens.phases, &ens.frequencies, coupling, &mut k1);
    for i in 0..n {
        tmp[i] = ens.phases[i] + 0.5 * dt * k1[i];
    }
    stage_derivative(&tmp, &ens.frequencies, coupling, &mut k2);
    for i in 0..n {
        tmp[i] = ens.phases[i] + 0.5 * dt * k2[i];
    }
    stage_derivative(&tmp, &ens.frequencies, coupling, &mut k3);
    for i in 0..n {
        tmp[i] = ens.phases[i] + dt * k3[i];
    }
    stage_derivative(&tmp, &ens.frequencies, coupling, &mut k4);
    for i in 0..n {
        ens.phases[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    ens.wrap();
    ens.t += dt;
    Ok(())
}

/// Integrate the ensemble to T, recording η_N at every step.
pub fn run_particles(
    ens: &mut Ensemble,
    coupling: f64,
    horizon: f64,
    dt: f64,
) -> Result<SampledSignal> {
    if !(horizon > 0.0) || !(dt > 0.0) {
        return Err(Error::usage("run_particles requires T > 0 and dt > 0"));
    }
    let steps = (horizon / dt).ceil() as usize;
    let mut trace = Vec::with_capacity(steps + 1);
    trace.push(empirical_order_parameter(ens));
    for _ in 0..steps {
        ode_step(ens, coupling, dt)?;
        trace.push(empirical_order_parameter(ens));
    }
    SampledSignal::new(0.0, dt, trace)
}
