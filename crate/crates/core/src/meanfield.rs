//! Nonlinear spectral simulator for the perturbation field u(t, l, ξ) of the
//! mean-field Kuramoto model on ξ ∈ [0, Ξ], modes l = 1..L_max:
//!
//!   ∂_t u(l) = l ∂_ξ u(l) + (Kl/2) [η u(l-1) - η̄ u(l+1)],  η = u(1, 0),
//!
//! with mode 0 read as ĝ and mode L_max+1 as zero. The time step is locked to
//! Δt = h so free transport is an exact shift of l cells per mode (no
//! interpolation or numerical diffusion); the interaction then gets a Heun
//! (explicit trapezoidal) update on top of the shifted field, for O(h²) global
//! accuracy. The right boundary is an inflow: the top l cells of mode l are
//! filled with the freely transported initial datum c_l ĝ(ξ + l t).

use num_complex::Complex64;
use rayon::prelude::*;

use crate::distributions::VelocityDistribution;
use crate::error::{Error, Result};
use crate::quad;
use crate::volterra::SampledSignal;

/// |u| above 1 + this margin is recorded by the clamp monitor.
const CLAMP_MARGIN: f64 = 1e-6;

/// Truncated spectral state: rows l = 1..l_max of u(l, ξ_j) on ξ_j = j·h.
#[derive(Debug, Clone)]
pub struct SpectralState {
    pub h: f64,
    pub n_xi: usize,
    pub l_max: usize,
    pub t: f64,
    /// Row-major: u[(l-1) * (n_xi + 1) + j].
    u: Vec<Complex64>,
    /// Initial mode coefficients driving the inflow closure (index l-1).
    inflow: Vec<Complex64>,
    /// ĝ on the extended grid m·h, m = 0..; covers inflow lookups up to the
    /// horizon it was built for, and grows on demand.
    ghat: Vec<Complex64>,
    dist: VelocityDistribution,
    /// Largest |u| seen along the run.
    pub max_abs_seen: f64,
    /// Steps at which |u| exceeded 1 + 1e-6.
    pub clamp_events: usize,
}

/// Order-parameter trace with the per-step truncation monitor
/// sup_j |u(L_max, j)|.
#[derive(Debug, Clone)]
pub struct OrderParameterTrace {
    pub eta: SampledSignal,
    pub truncation_monitor: Vec<f64>,
    pub max_abs_u: f64,
    pub clamp_events: usize,
}

/// Energy weight φ(ξ) = Ā / (Ā - ∫_0^ξ (|ĝ| + e^{-γ̄ζ}) dζ) with its
/// contraction constant α = (K²/4) Ā ∫ |ĝ|²/(|ĝ| + e^{-γ̄ξ}) dξ.
#[derive(Debug, Clone)]
pub struct EnergyWeight {
    pub a_bar: f64,
    pub gamma_bar: f64,
    pub alpha: f64,
    /// Dissipation constant c = 1 - α.
    pub c: f64,
}

/// Decay model for `decay_fit`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayModel {
    Exponential,
    /// |η| ~ (1+t)^{-b}; the fit regresses log|η| on log(1+t).
    Algebraic,
}

impl SpectralState {
    #[inline]
    fn idx(&self, l: usize, j: usize) -> usize {
        (l - 1) * (self.n_xi + 1) + j
    }

    pub fn value(&self, l: usize, j: usize) -> Complex64 {
        self.u[self.idx(l, j)]
    }

    pub fn order_parameter(&self) -> Complex64 {
        self.u[0]
    }

    pub fn xi(&self, j: usize) -> f64 {
        j as f64 * self.h
    }

    fn row(&self, l: usize) -> &[Complex64] {
        let w = self.n_xi + 1;
        &self.u[(l - 1) * w..l * w]
    }

    fn ghat_at(&self, m: usize) -> Complex64 {
        self.ghat[m]
    }

    fn ensure_ghat(&mut self, len: usize) {
        while self.ghat.len() < len {
            let m = self.ghat.len();
            let v = self.dist.fourier_raw(m as f64 * self.h);
            self.ghat.push(v);
        }
    }

    pub fn mode_sup(&self, l: usize) -> f64 {
        self.row(l).iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Build the initial state u(l, ξ_j) = c_l ĝ(ξ_j), realising the density
/// f_in(θ,ω) = g(ω)(1 + Σ_l 2 Re(c̄_l e^{ilθ}))/2π. Positivity of that density
/// needs Σ 2|c_l| ≤ 1.
pub fn init_state(
    dist: &VelocityDistribution,
    coefficients: &[Complex64],
    h: f64,
    xi_max: f64,
    l_max: usize,
) -> Result<SpectralState> {
    if !(h > 0.0) || !(xi_max > 0.0) {
        return Err(Error::usage("init_state requires h > 0 and xi_max > 0"));
    }
    if l_max < coefficients.len() || l_max == 0 {
        return Err(Error::usage(
            "l_max must cover every supplied mode coefficient",
        ));
    }
    if coefficients.iter().any(|c| c.norm() > 1.0) {
        return Err(Error::usage("|c_l| <= 1 required"));
    }
    let weight: f64 = coefficients.iter().map(|c| 2.0 * c.norm()).sum();
    if weight > 1.0 + 1e-12 {
        return Err(Error::usage(
            "Σ 2|c_l| must be <= 1 for a nonnegative density",
        ));
    }
    let n_xi = (xi_max / h).round() as usize;
    if n_xi < 8 {
        return Err(Error::usage("grid too short: xi_max/h < 8"));
    }
    let w = n_xi + 1;
    let mut ghat = Vec::with_capacity(w);
    for m in 0..w {
        ghat.push(dist.fourier(m as f64 * h)?);
    }
    let mut u = vec![Complex64::new(0.0, 0.0); l_max * w];
    for (li, c) in coefficients.iter().enumerate() {
        if c.norm() == 0.0 {
            continue;
        }
        for j in 0..w {
            u[li * w + j] = c * ghat[j];
        }
    }
    let mut inflow = coefficients.to_vec();
    inflow.resize(l_max, Complex64::new(0.0, 0.0));
    Ok(SpectralState {
        h,
        n_xi,
        l_max,
        t: 0.0,
        u,
        inflow,
        ghat,
        dist: dist.clone(),
        max_abs_seen: 0.0,
        clamp_events: 0,
    })
}

/// Interaction term B(w)(l, j) = (Kl/2)[η w(l-1, j) - η̄ w(l+1, j)], with
/// w(0, ·) = ĝ and w(l_max+1, ·) = 0, η = w(1, 0).
fn interaction(
    out: &mut [Complex64],
    field: &[Complex64],
    ghat: &[Complex64],
    coupling: f64,
    l_max: usize,
    width: usize,
) {
    let eta = field[0];
    let eta_bar = eta.conj();
    out.par_chunks_mut(width)
        .enumerate()
        .for_each(|(li, row)| {
            let l = li + 1;
            let factor = 0.5 * coupling * l as f64;
            let below = if l == 1 {
                &ghat[..width]
            } else {
                &field[(li - 1) * width..li * width]
            };
            if l == l_max {
                for j in 0..width {
                    row[j] = factor * eta * below[j];
                }
            } else {
                let above = &field[(li + 1) * width..(li + 2) * width];
                for j in 0..width {
                    row[j] = factor * (eta * below[j] - eta_bar * above[j]);
                }
            }
        });
}

/// Shift each mode row left by l cells; cells beyond the grid read from
/// `fill(l, j)`.
fn shift_rows(
    dst: &mut [Complex64],
    src: &[Complex64],
    l_max: usize,
    width: usize,
    fill: impl Fn(usize, usize) -> Complex64 + Sync,
) {
    dst.par_chunks_mut(width).enumerate().for_each(|(li, row)| {
        let l = li + 1;
        let src_row = &src[li * width..(li + 1) * width];
        for j in 0..width {
            row[j] = if j + l < width {
                src_row[j + l]
            } else {
                fill(l, j)
            };
        }
    });
}

/// Advance the state by one step of size Δt = h.
pub fn step(state: &mut SpectralState, coupling: f64) -> Result<()> {
    let width = state.n_xi + 1;
    let l_max = state.l_max;
    let h = state.h;
    let t_new = state.t + h;

    // ĝ lookups for the inflow: index j + l·(steps so far + 1) stays on the
    // h-grid because Δt = h.
    let steps_done = (state.t / h).round() as usize;
    let max_index = state.n_xi + l_max * (steps_done + 2);
    state.ensure_ghat(max_index + 1);

    let inflow = state.inflow.clone();
    let ghat = std::mem::take(&mut state.ghat);
    let shift_fill = |l: usize, j: usize| {
        let c = inflow[l - 1];
        if c.norm() == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            // c_l ĝ(ξ_j + l t_new) with ξ_j + l·t_new = (j + l(steps+1))·h.
            c * ghat[j + l * (steps_done + 1)]
        }
    };

    let mut transported = vec![Complex64::new(0.0, 0.0); l_max * width];
    shift_rows(&mut transported, &state.u, l_max, width, &shift_fill);

    // Forcing at the old time, transported along with the field (zero inflow:
    // the interaction beyond Ξ is the closure error).
    let mut f0 = vec![Complex64::new(0.0, 0.0); l_max * width];
    interaction(&mut f0, &state.u, &ghat, coupling, l_max, width);
    let mut f0_shifted = vec![Complex64::new(0.0, 0.0); l_max * width];
    shift_rows(&mut f0_shifted, &f0, l_max, width, |_, _| {
        Complex64::new(0.0, 0.0)
    });

    // Predictor and corrector stages of the Heun update.
    let mut predictor = vec![Complex64::new(0.0, 0.0); l_max * width];
    predictor
        .par_iter_mut()
        .zip(transported.par_iter().zip(f0_shifted.par_iter()))
        .for_each(|(p, (v, f))| *p = v + h * f);

    let mut f1 = vec![Complex64::new(0.0, 0.0); l_max * width];
    interaction(&mut f1, &predictor, &ghat, coupling, l_max, width);

    let mut max_sq = 0.0f64;
    for i in 0..state.u.len() {
        let v = transported[i] + 0.5 * h * (f0_shifted[i] + f1[i]);
        state.u[i] = v;
        let n = v.norm_sqr();
        if n > max_sq {
            max_sq = n;
        }
    }
    let max_abs = max_sq.sqrt();
    if !max_abs.is_finite() {
        return Err(Error::numeric(
            format!("blow-up at step {}", steps_done + 1),
            max_abs,
        ));
    }
    if max_abs > 1.0 + CLAMP_MARGIN {
        state.clamp_events += 1;
    }
    state.max_abs_seen = state.max_abs_seen.max(max_abs);
    state.ghat = ghat;
    state.t = t_new;
    Ok(())
}

/// Run until T (rounded up to a whole number of steps), recording η(t) at
/// every step together with the truncation monitor.
pub fn run(
    state: &mut SpectralState,
    coupling: f64,
    horizon: f64,
) -> Result<OrderParameterTrace> {
    if !(horizon > 0.0) {
        return Err(Error::usage("run requires T > 0"));
    }
    let steps = (horizon / state.h).ceil() as usize;
    let mut eta = Vec::with_capacity(steps + 1);
    let mut monitor = Vec::with_capacity(steps + 1);
    eta.push(state.order_parameter());
    monitor.push(state.mode_sup(state.l_max));
    for _ in 0..steps {
        step(state, coupling)?;
        eta.push(state.order_parameter());
        monitor.push(state.mode_sup(state.l_max));
    }
    Ok(OrderParameterTrace {
        eta: SampledSignal::new(0.0, state.h, eta)?,
        truncation_monitor: monitor,
        max_abs_u: state.max_abs_seen,
        clamp_events: state.clamp_events,
    })
}

/// Search the weight parameters: γ̄ ∈ {1, 2, 4, …, 2^10} dyadic and
/// Ā = (1 + 2^{-m})(γ̄^{-1} + ∫|ĝ|) for m = 1..20, keeping the pair with the
/// smallest contraction constant α; requires α < 1 (guaranteed by the
/// construction for K < K_ec up to quadrature error).
pub fn build_energy_weight(dist: &VelocityDistribution, coupling: f64) -> Result<EnergyWeight> {
    let fourier_l1 = dist.fourier_l1()?;
    let k_ec = 2.0 / fourier_l1;
    if coupling >= k_ec {
        return Err(Error::domain(format!(
            "energy weight needs K < K_ec = {k_ec:.6}"
        )));
    }
    let cut = dist.laplace_tail_cut(0.0).min(1e4);
    let mut best: Option<EnergyWeight> = None;
    for p in 0..=10 {
        let gamma = (1u64 << p) as f64;
        // J(γ̄) = ∫ |ĝ|² / (|ĝ| + e^{-γ̄ξ}) dξ, independent of Ā.
        let mut f = |xi: f64| {
            let g = dist.fourier_raw(xi).norm();
            g * g / (g + (-gamma * xi).exp())
        };
        let (j_int, _) = quad::integrate_real(&mut f, 0.0, cut, 1e-12);
        for m in 1..=20 {
            let a_bar = (1.0 + (0.5f64).powi(m)) * (1.0 / gamma + fourier_l1);
            let alpha = 0.25 * coupling * coupling * a_bar * j_int;
            if alpha < 1.0 {
                let cand = EnergyWeight {
                    a_bar,
                    gamma_bar: gamma,
                    alpha,
                    c: 1.0 - alpha,
                };
                if best.as_ref().map_or(true, |b| cand.alpha < b.alpha) {
                    best = Some(cand);
                }
            }
        }
    }
    best.ok_or_else(|| {
        Error::numeric(
            "no admissible energy weight with α < 1 (quadrature failure?)",
            f64::NAN,
        )
    })
}

impl EnergyWeight {
    /// φ at a single point by adaptive quadrature of the cumulative integral.
    pub fn phi(&self, dist: &VelocityDistribution, xi: f64) -> f64 {
        let mut f = |z: f64| dist.fourier_raw(z).norm() + (-self.gamma_bar * z).exp();
        let (cum, _) = quad::integrate_real(&mut f, 0.0, xi, 1e-12);
        self.a_bar / (self.a_bar - cum)
    }

    /// φ tabulated on the grid ξ_j = j·h, j = 0..n_xi, by cumulative
    /// per-cell quadrature.
    pub fn phi_table(&self, dist: &VelocityDistribution, h: f64, n_xi: usize) -> Vec<f64> {
        let mut table = Vec::with_capacity(n_xi + 1);
        let mut cum = 0.0;
        table.push(self.a_bar / (self.a_bar - cum));
        for j in 0..n_xi {
            let a = j as f64 * h;
            let mut f = |z: f64| dist.fourier_raw(z).norm() + (-self.gamma_bar * z).exp();
            cum += quad::integrate_real(&mut f, a, a + h, 1e-13).0;
            table.push(self.a_bar / (self.a_bar - cum));
        }
        table
    }
}

/// Energy functional I = ∫_0^Ξ Σ_l (1/l) |u(l,ξ)|² φ(ξ) dξ by trapezoidal
/// quadrature on the grid; `phi` must be tabulated on the same grid.
pub fn energy_functional(state: &SpectralState, phi: &[f64]) -> Result<f64> {
    let width = state.n_xi + 1;
    if phi.len() != width {
        return Err(Error::usage("phi table does not match the state grid"));
    }
    let mut total = 0.0;
    for l in 1..=state.l_max {
        let row = state.row(l);
        let mut samples: Vec<f64> = Vec::with_capacity(width);
        for j in 0..width {
            samples.push(row[j].norm_sqr() * phi[j]);
        }
        total += quad::trapezoid(&samples, state.h) / l as f64;
    }
    Ok(total)
}

/// Least-squares decay fit of log|η| on the window [t1, t2]: against t for the
/// exponential model (returns the positive rate) or against log(1+t) for the
/// algebraic model (returns the positive power). Second value is R².
pub fn decay_fit(
    trace: &SampledSignal,
    window: (f64, f64),
    model: DecayModel,
) -> Result<(f64, f64)> {
    let range = trace.window(window.0, window.1);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for m in range {
        let a = trace.values[m].norm();
        if a > 1e-14 {
            let t = trace.time(m);
            xs.push(match model {
                DecayModel::Exponential => t,
                DecayModel::Algebraic => (1.0 + t).ln(),
            });
            ys.push(a.ln());
        }
    }
    if xs.len() < 8 {
        return Err(Error::numeric(
            "window underflow: too few resolvable samples, shorten the window",
            xs.len() as f64,
        ));
    }
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let mean_y = sy / n;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        ss_res += (y - (slope * x + intercept)).powi(2);
        ss_tot += (y - mean_y).powi(2);
    }
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok((-slope, r2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lorentzian() -> VelocityDistribution {
        VelocityDistribution::lorentzian(0.0, 1.0).unwrap()
    }

    fn gaussian() -> VelocityDistribution {
        VelocityDistribution::gaussian(0.0, 1.0).unwrap()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn init_rejects_overweight_data() {
        let dist = gaussian();
        assert!(init_state(&dist, &[c(0.6)], 1.0 / 32.0, 8.0, 4).is_err());
        assert!(init_state(&dist, &[c(0.3), c(0.25)], 1.0 / 32.0, 8.0, 4).is_err());
        assert!(init_state(&dist, &[c(0.1); 3], 1.0 / 32.0, 8.0, 2).is_err());
    }

    #[test]
    fn init_zero_is_incoherent() {
        let dist = gaussian();
        let s = init_state(&dist, &[], 1.0 / 32.0, 8.0, 4).unwrap();
        assert_eq!(s.order_parameter(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn initial_order_parameter_is_c1() {
        let dist = gaussian();
        let s = init_state(&dist, &[c(0.1)], 1.0 / 32.0, 8.0, 4).unwrap();
        assert!((s.order_parameter() - c(0.1)).norm() < 1e-15);
    }

    #[test]
    fn free_transport_is_exact_shift() {
        let dist = gaussian();
        let h = 1.0 / 32.0;
        let mut s = init_state(&dist, &[c(0.2), c(0.1)], h, 8.0, 4).unwrap();
        for _ in 0..16 {
            step(&mut s, 0.0).unwrap();
        }
        // After m steps u(l, j) = c_l ĝ((j + m·l) h) exactly.
        let m = 16usize;
        for (l, cl) in [(1usize, 0.2), (2usize, 0.1)] {
            for j in 0..=s.n_xi {
                let expected = cl * s.ghat_at(j + m * l);
                assert!(
                    (s.value(l, j) - expected).norm() < 1e-15,
                    "l={l} j={j}"
                );
            }
        }
    }

    #[test]
    fn zero_state_is_fixed_point() {
        let dist = lorentzian();
        let mut s = init_state(&dist, &[], 1.0 / 32.0, 10.0, 6).unwrap();
        for _ in 0..64 {
            step(&mut s, 3.0).unwrap();
        }
        assert_eq!(s.max_abs_seen, 0.0);
    }

    #[test]
    fn free_run_traces_ghat() {
        // K = 0, c1 = 0.5: η(t) = 0.5 ĝ(t) = 0.5 e^{-t²/2}.
        let dist = gaussian();
        let mut s = init_state(&dist, &[c(0.5)], 1.0 / 64.0, 9.0, 3).unwrap();
        let trace = run(&mut s, 0.0, 3.0).unwrap();
        for m in 0..trace.eta.len() {
            let t = trace.eta.time(m);
            let expected = 0.5 * (-0.5 * t * t).exp();
            assert!((trace.eta.values[m].re - expected).abs() < 1e-12);
        }
    }

    /// Independent RK4 integration of the reduced amplitude equation
    /// dρ/dt = (K/2 - 1)ρ - (K/2)ρ³ at a fine fixed step.
    pub(crate) fn oa_oracle(k: f64, rho0: f64, horizon: f64, dt_out: f64) -> Vec<f64> {
        let f = |r: f64| (0.5 * k - 1.0) * r - 0.5 * k * r * r * r;
        let substeps = 16usize;
        let dt = dt_out / substeps as f64;
        let n = (horizon / dt_out).round() as usize;
        let mut out = Vec::with_capacity(n + 1);
        let mut r = rho0;
        out.push(r);
        for _ in 0..n {
            for _ in 0..substeps {
                let k1 = f(r);
                let k2 = f(r + 0.5 * dt * k1);
                let k3 = f(r + 0.5 * dt * k2);
                let k4 = f(r + dt * k3);
                r += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            out.push(r);
        }
        out
    }

    #[test]
    fn oa_manifold_short_run() {
        // Geometric data c_l = 0.3^l on the Lorentzian stays on the reduced
        // manifold; |η| follows the scalar amplitude equation.
        let dist = lorentzian();
        let k = 3.0;
        let h = 1.0 / 64.0;
        let l_max = 24;
        let coeffs: Vec<Complex64> = (1..=l_max).map(|l| c(0.3f64.powi(l as i32))).collect();
        let mut s = init_state(&dist, &coeffs, h, 20.0, l_max).unwrap();
        let trace = run(&mut s, k, 5.0).unwrap();
        let oracle = oa_oracle(k, 0.3, 5.0, h);
        let mut worst: f64 = 0.0;
        for m in 0..trace.eta.len() {
            worst = worst.max((trace.eta.values[m].norm() - oracle[m]).abs());
        }
        assert!(worst < 1e-3, "OA deviation {worst}");
    }

    #[test]
    fn rotation_symmetry_is_exact() {
        let dist = lorentzian();
        let h = 1.0 / 32.0;
        let alpha = 0.7f64;
        let phase = Complex64::from_polar(1.0, alpha);
        let coeffs: Vec<Complex64> = vec![c(0.2), c(0.08), c(0.02)];
        let rotated: Vec<Complex64> = coeffs
            .iter()
            .enumerate()
            .map(|(i, cl)| cl * Complex64::from_polar(1.0, alpha * (i as f64 + 1.0)))
            .collect();
        let mut s1 = init_state(&dist, &coeffs, h, 10.0, 6).unwrap();
        let mut s2 = init_state(&dist, &rotated, h, 10.0, 6).unwrap();
        let t1 = run(&mut s1, 2.5, 3.0).unwrap();
        let t2 = run(&mut s2, 2.5, 3.0).unwrap();
        for m in 0..t1.eta.len() {
            let delta = (t2.eta.values[m] - phase * t1.eta.values[m]).norm();
            assert!(delta < 1e-12, "step {m}: {delta}");
        }
    }

    #[test]
    fn grid_convergence_is_second_order() {
        let dist = lorentzian();
        let k = 2.0;
        let run_at = |h: f64| {
            let coeffs = vec![c(0.2)];
            let mut s = init_state(&dist, &coeffs, h, 16.0, 8).unwrap();
            run(&mut s, k, 2.0).unwrap()
        };
        let t1 = run_at(1.0 / 32.0);
        let t2 = run_at(1.0 / 64.0);
        let t3 = run_at(1.0 / 128.0);
        let final1 = t1.eta.values.last().unwrap();
        let final2 = t2.eta.values.last().unwrap();
        let final3 = t3.eta.values.last().unwrap();
        let e12 = (final1 - final2).norm();
        let e23 = (final2 - final3).norm();
        let order = (e12 / e23).log2();
        assert!(order > 1.6 && order < 2.6, "observed order {order}");
    }

    #[test]
    fn boundedness_along_runs() {
        let dist = lorentzian();
        let coeffs: Vec<Complex64> = (1..=16).map(|l| c(0.3f64.powi(l))).collect();
        let mut s = init_state(&dist, &coeffs, 1.0 / 32.0, 16.0, 16).unwrap();
        let trace = run(&mut s, 3.0, 10.0).unwrap();
        assert!(trace.max_abs_u <= 1.0 + 1e-6);
        assert_eq!(trace.clamp_events, 0);
        for v in &trace.eta.values {
            assert!(v.norm() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn energy_weight_members() {
        let dist = gaussian();
        // α scales with K², so K = 0 gives α = 0, c = 1.
        let w0 = build_energy_weight(&dist, 0.0).unwrap();
        assert!(w0.alpha == 0.0 && w0.c == 1.0);

        let w = build_energy_weight(&dist, 1.0).unwrap();
        assert!(w.alpha > 0.0 && w.alpha < 1.0);
        assert!(w.a_bar > 1.0 / w.gamma_bar + 1.2533);

        // Close to K_ec the search must still find α < 1.
        let w_near = build_energy_weight(&dist, 1.55).unwrap();
        assert!(w_near.alpha < 1.0, "alpha {}", w_near.alpha);

        // Infeasible above K_ec.
        assert!(build_energy_weight(&dist, 1.6).is_err());
    }

    #[test]
    fn phi_table_matches_pointwise_phi() {
        let dist = gaussian();
        let w = build_energy_weight(&dist, 1.0).unwrap();
        let h = 0.25;
        let table = w.phi_table(&dist, h, 20);
        assert!((table[0] - 1.0).abs() < 1e-14);
        for j in [1usize, 7, 20] {
            let direct = w.phi(&dist, j as f64 * h);
            assert!((table[j] - direct).abs() < 1e-9);
        }
        // Nondecreasing and bounded.
        for j in 1..table.len() {
            assert!(table[j] >= table[j - 1]);
            assert!(table[j].is_finite());
        }
    }

    #[test]
    fn energy_value_for_pure_first_mode() {
        // c1 = 0.1, φ ≡ 1: I(0) = 0.01 ∫ e^{-ξ²} dξ = 0.01 √π / 2.
        let dist = gaussian();
        let s = init_state(&dist, &[c(0.1)], 1.0 / 128.0, 9.0, 2).unwrap();
        let phi = vec![1.0; s.n_xi + 1];
        let i0 = energy_functional(&s, &phi).unwrap();
        let expected = 0.01 * std::f64::consts::PI.sqrt() / 2.0;
        assert!((i0 - expected).abs() < 1e-7, "I(0) = {i0}");
    }

    #[test]
    fn decay_fit_exact_models() {
        let dt = 0.01;
        let n = 2000;
        let exp_trace = SampledSignal::new(
            0.0,
            dt,
            (0..n)
                .map(|m| c((-0.5 * m as f64 * dt).exp()))
                .collect(),
        )
        .unwrap();
        let (rate, r2) = decay_fit(&exp_trace, (0.0, 20.0), DecayModel::Exponential).unwrap();
        assert!((rate - 0.5).abs() < 1e-10);
        assert!((r2 - 1.0).abs() < 1e-10);

        let alg_trace = SampledSignal::new(
            0.0,
            dt,
            (0..n)
                .map(|m| c((1.0 + m as f64 * dt).powi(-3)))
                .collect(),
        )
        .unwrap();
        let (power, _) = decay_fit(&alg_trace, (0.0, 20.0), DecayModel::Algebraic).unwrap();
        assert!((power - 3.0).abs() < 1e-6, "power {power}");
    }

    #[test]
    fn decay_fit_underflow_error() {
        let trace = SampledSignal::new(
            0.0,
            0.1,
            (0..100).map(|_| c(1e-16)).collect(),
        )
        .unwrap();
        assert!(decay_fit(&trace, (0.0, 10.0), DecayModel::Exponential).is_err());
    }
}
