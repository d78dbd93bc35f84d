//! Discrete Volterra machinery for the linearised order parameter.
//!
//! The linear evolution of ν(t) = u(t,1,0) satisfies ν + k∗ν = u_in(1,t) with
//! kernel k(t) = -(K/2) ĝ(t). The solver uses trapezoidal product integration
//! (O(dt²) global accuracy); the resolvent kernel r solves r + r∗k = k and
//! gives ν = f - r∗f up to the same discretisation order. Spectral structure
//! comes from the zeros of 1 + (Lk)(z): located by the argument principle on
//! boxes, refined by Newton, with residues of [1 + (Lk)]⁻¹ from small-circle
//! contour quadrature.

use num_complex::Complex64;

use crate::distributions::VelocityDistribution;
use crate::error::{Error, Result};
use crate::quad;

/// Required residual for the discrete resolvent identity, relative to 1 + ‖k‖∞.
const RESOLVENT_RESIDUAL_TOL: f64 = 1e-8;
/// Boxes whose winding Newton cannot split below this diameter are declared a
/// single root with multiplicity.
const CLUSTER_DIAMETER: f64 = 1e-7;
const NEWTON_MAX_ITER: usize = 100;

/// A uniformly sampled complex time series.
#[derive(Debug, Clone)]
pub struct SampledSignal {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<Complex64>,
}

impl SampledSignal {
    pub fn new(t0: f64, dt: f64, values: Vec<Complex64>) -> Result<Self> {
        if !(dt > 0.0) || values.is_empty() {
            return Err(Error::usage("signal needs dt > 0 and at least one sample"));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::usage("signal samples must be finite"));
        }
        Ok(Self { t0, dt, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, idx: usize) -> f64 {
        self.t0 + idx as f64 * self.dt
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Index range covering times [t1, t2].
    pub fn window(&self, t1: f64, t2: f64) -> std::ops::Range<usize> {
        let lo = ((t1 - self.t0) / self.dt).ceil().max(0.0) as usize;
        let hi = (((t2 - self.t0) / self.dt).floor() as usize + 1).min(self.values.len());
        lo..hi.max(lo)
    }
}

/// Roots of 1 + (Lk)(z) in a half plane Re z > -a, with multiplicities and the
/// Laurent coefficients of [1 + (Lk)]⁻¹ at each root.
#[derive(Debug, Clone)]
pub struct EigenmodeSet {
    pub roots: Vec<(Complex64, usize)>,
    pub strip_bound: f64,
    /// residues[i][j] = coefficient of (z - λ_i)^{-(j+1)}.
    pub residues: Vec<Vec<Complex64>>,
    /// min |1 + (Lk)| over the search-box boundary (well-posedness indicator).
    pub boundary_min_abs: f64,
}

impl EigenmodeSet {
    pub fn total_multiplicity(&self) -> usize {
        self.roots.iter().map(|(_, p)| p).sum()
    }
}

/// Convolution kernel k(t) = -(K/2) ĝ(t) sampled on a uniform grid covering
/// [0, T].
pub fn kernel_signal(
    dist: &VelocityDistribution,
    coupling: f64,
    horizon: f64,
    dt: f64,
) -> Result<SampledSignal> {
    if coupling < 0.0 || !(horizon > 0.0) || !(dt > 0.0) {
        return Err(Error::usage("kernel_signal requires K >= 0, T > 0, dt > 0"));
    }
    let n = (horizon / dt).ceil() as usize;
    let mut values = Vec::with_capacity(n + 1);
    for j in 0..=n {
        values.push(-0.5 * coupling * dist.fourier(j as f64 * dt)?);
    }
    SampledSignal::new(0.0, dt, values)
}

/// Trapezoidal discrete convolution (f∗g)(t_n) = dt Σ'' f_j g_{n-j}, with
/// half weights at both ends.
fn convolve_at(f: &[Complex64], g: &[Complex64], n: usize, dt: f64) -> Complex64 {
    if n == 0 {
        return Complex64::new(0.0, 0.0);
    }
    let mut acc = 0.5 * (f[0] * g[n] + f[n] * g[0]);
    for j in 1..n {
        acc += f[j] * g[n - j];
    }
    acc * dt
}

/// Solve r + r∗k = k by forward product integration and verify the residual.
pub fn resolvent_solve(kernel: &SampledSignal) -> Result<SampledSignal> {
    if kernel.t0 != 0.0 {
        return Err(Error::usage("resolvent_solve requires t0 = 0"));
    }
    let k = &kernel.values;
    let dt = kernel.dt;
    let n = k.len();
    let mut r = vec![Complex64::new(0.0, 0.0); n];
    r[0] = k[0];
    for m in 1..n {
        // r_m (1 + dt k_0 / 2) = k_m - dt (r_0 k_m / 2 + Σ_{j=1}^{m-1} r_j k_{m-j})
        let mut acc = 0.5 * r[0] * k[m];
        for j in 1..m {
            acc += r[j] * k[m - j];
        }
        r[m] = (k[m] - dt * acc) / (1.0 + 0.5 * dt * k[0]);
    }

    let scale = 1.0 + kernel.sup_norm();
    let mut residual: f64 = 0.0;
    for m in 0..n {
        let res = (r[m] + convolve_at(&r, k, m, dt) - k[m]).norm();
        residual = residual.max(res);
    }
    if residual > RESOLVENT_RESIDUAL_TOL * scale {
        return Err(Error::numeric("resolvent identity residual", residual));
    }
    SampledSignal::new(0.0, dt, r)
}

/// Solve x + k∗x = f on matching grids by forward product integration.
///
/// The direct solve keeps the discrete residual at rounding level; the
/// resolvent form x = f - r∗f agrees with it to O(dt²) and coincides exactly
/// when f = k.
pub fn volterra_solve(kernel: &SampledSignal, forcing: &SampledSignal) -> Result<SampledSignal> {
    if kernel.t0 != 0.0 || forcing.t0 != 0.0 {
        return Err(Error::usage("volterra_solve requires t0 = 0"));
    }
    if (kernel.dt - forcing.dt).abs() > 1e-15 * kernel.dt || kernel.len() != forcing.len() {
        return Err(Error::usage("volterra_solve requires matching grids"));
    }
    let k = &kernel.values;
    let f = &forcing.values;
    let dt = kernel.dt;
    let n = k.len();
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    x[0] = f[0];
    for m in 1..n {
        let mut acc = 0.5 * x[0] * k[m];
        for j in 1..m {
            acc += x[j] * k[m - j];
        }
        x[m] = (f[m] - dt * acc) / (1.0 + 0.5 * dt * k[0]);
    }

    let scale = 1.0 + forcing.sup_norm();
    let mut residual: f64 = 0.0;
    for m in 0..n {
        let res = (x[m] + convolve_at(k, &x, m, dt) - f[m]).norm();
        residual = residual.max(res);
    }
    if residual > RESOLVENT_RESIDUAL_TOL * scale {
        return Err(Error::numeric("volterra residual", residual));
    }
    SampledSignal::new(0.0, dt, x)
}

/// Order parameter of the linearised flow for initial first-mode data
/// u1_init: ν solves ν + k∗ν = u1_init(t).
pub fn linear_order_parameter(
    dist: &VelocityDistribution,
    coupling: f64,
    u1_init: &dyn Fn(f64) -> Complex64,
    horizon: f64,
    dt: f64,
) -> Result<SampledSignal> {
    let kernel = kernel_signal(dist, coupling, horizon, dt)?;
    let forcing = SampledSignal::new(
        0.0,
        dt,
        (0..kernel.len())
            .map(|j| u1_init(j as f64 * dt))
            .collect(),
    )?;
    volterra_solve(&kernel, &forcing)
}

/// Characteristic function F(z) = 1 + (Lk)(z) = 1 - (K/2) Lĝ(z).
pub fn characteristic(
    dist: &VelocityDistribution,
    coupling: f64,
    z: Complex64,
) -> Result<Complex64> {
    Ok(1.0 - 0.5 * coupling * dist.laplace(z)?)
}

fn characteristic_derivative(
    dist: &VelocityDistribution,
    coupling: f64,
    z: Complex64,
) -> Result<Complex64> {
    Ok(-0.5 * coupling * dist.laplace_derivative(z)?)
}

/// Axis-aligned search box in the complex plane.
#[derive(Debug, Clone, Copy)]
pub struct Box2 {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Box2 {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Self {
        Self {
            re_min,
            re_max,
            im_min,
            im_max,
        }
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }

    fn diameter(&self) -> f64 {
        ((self.re_max - self.re_min).powi(2) + (self.im_max - self.im_min).powi(2)).sqrt()
    }

    fn center(&self) -> Complex64 {
        Complex64::new(
            0.5 * (self.re_min + self.re_max),
            0.5 * (self.im_min + self.im_max),
        )
    }

    fn contains(&self, z: Complex64, slack: f64) -> bool {
        z.re >= self.re_min - slack
            && z.re <= self.re_max + slack
            && z.im >= self.im_min - slack
            && z.im <= self.im_max + slack
    }
}

/// Winding number of F over the box boundary (counterclockwise), refining the
/// edge sampling until every argument increment is below π/2. Also returns the
/// minimum |F| seen on the boundary.
fn boundary_winding(
    dist: &VelocityDistribution,
    coupling: f64,
    bx: &Box2,
) -> Result<(i32, f64)> {
    let corners = bx.corners();
    let mut pts: Vec<Complex64> = Vec::new();
    for e in 0..4 {
        let a = corners[e];
        let b = corners[(e + 1) % 4];
        let m = 16;
        for i in 0..m {
            pts.push(a + (b - a) * (i as f64 / m as f64));
        }
    }
    let mut vals: Vec<Complex64> = pts
        .iter()
        .map(|&z| characteristic(dist, coupling, z))
        .collect::<Result<_>>()?;

    let mut min_abs = vals.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
    if min_abs < 1e-8 {
        return Err(Error::numeric("zero of 1+(Lk) on box boundary", min_abs));
    }

    for _ in 0..40 {
        let n = pts.len();
        let mut insert: Vec<(usize, Complex64)> = Vec::new();
        for i in 0..n {
            let j = (i + 1) % n;
            if (vals[j] / vals[i]).arg().abs() > std::f64::consts::FRAC_PI_2 {
                insert.push((i, 0.5 * (pts[i] + pts[j])));
            }
        }
        if insert.is_empty() {
            break;
        }
        for (off, (i, z)) in insert.into_iter().enumerate() {
            let v = characteristic(dist, coupling, z)?;
            min_abs = min_abs.min(v.norm());
            if min_abs < 1e-8 {
                return Err(Error::numeric("zero of 1+(Lk) on box boundary", min_abs));
            }
            pts.insert(i + 1 + off, z);
            vals.insert(i + 1 + off, v);
        }
    }

    let n = pts.len();
    let mut total = 0.0;
    for i in 0..n {
        total += (vals[(i + 1) % n] / vals[i]).arg();
    }
    let turns = total / (2.0 * std::f64::consts::PI);
    let rounded = turns.round();
    if (turns - rounded).abs() > 0.25 {
        return Err(Error::numeric("boundary winding not near integer", turns));
    }
    Ok((rounded as i32, min_abs))
}

fn newton_refine(
    dist: &VelocityDistribution,
    coupling: f64,
    start: Complex64,
    scale: f64,
) -> Result<Complex64> {
    let mut z = start;
    for _ in 0..NEWTON_MAX_ITER {
        let f = characteristic(dist, coupling, z)?;
        let df = characteristic_derivative(dist, coupling, z)?;
        if df.norm() < 1e-300 {
            return Err(Error::numeric("vanishing derivative in Newton", df.norm()));
        }
        let step = f / df;
        z -= step;
        if step.norm() < 1e-13 * scale.max(1.0) {
            return Ok(z);
        }
    }
    Err(Error::numeric("Newton did not converge", f64::NAN))
}

fn subdivide(
    dist: &VelocityDistribution,
    coupling: f64,
    bx: Box2,
    expected: i32,
    out: &mut Vec<(Complex64, usize)>,
) -> Result<()> {
    if expected == 0 {
        return Ok(());
    }
    if bx.diameter() < CLUSTER_DIAMETER {
        // Cluster that refinement cannot split: one root with multiplicity.
        out.push((bx.center(), expected as usize));
        return Ok(());
    }
    if expected == 1 {
        let root = newton_refine(dist, coupling, bx.center(), bx.diameter())?;
        if bx.contains(root, 0.1 * bx.diameter() + 1e-9) {
            out.push((root, 1));
            return Ok(());
        }
        // Newton escaped the box (seed too far); fall through to subdivision.
    }
    // Quadrisect, jiggling cut lines away from roots if the boundary check
    // trips.
    let mut frac = 0.5;
    for _attempt in 0..5 {
        let rm = bx.re_min + frac * (bx.re_max - bx.re_min);
        let im = bx.im_min + frac * (bx.im_max - bx.im_min);
        let quads = [
            Box2::new(bx.re_min, rm, bx.im_min, im),
            Box2::new(rm, bx.re_max, bx.im_min, im),
            Box2::new(bx.re_min, rm, im, bx.im_max),
            Box2::new(rm, bx.re_max, im, bx.im_max),
        ];
        let mut counts = Vec::with_capacity(4);
        let mut ok = true;
        for q in &quads {
            match boundary_winding(dist, coupling, q) {
                Ok((c, _)) => counts.push(c),
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if ok && counts.iter().sum::<i32>() == expected {
            for (q, c) in quads.iter().zip(counts) {
                subdivide(dist, coupling, *q, c, out)?;
            }
            return Ok(());
        }
        frac = 0.5 + 0.17 * (_attempt as f64 + 1.0) * if _attempt % 2 == 0 { 1.0 } else { -1.0 };
    }
    Err(Error::numeric(
        "failed to isolate roots by quadrisection",
        bx.diameter(),
    ))
}

/// Locate all zeros of 1 + (Lk)(z) inside the box, with multiplicities and
/// residue data for [1 + (Lk)]⁻¹.
pub fn locate_roots(
    dist: &VelocityDistribution,
    coupling: f64,
    strip: f64,
    bx: Box2,
) -> Result<EigenmodeSet> {
    if strip < 0.0 {
        return Err(Error::usage("strip bound must be >= 0"));
    }
    if bx.re_min < -strip - 1e-12 {
        return Err(Error::usage(
            "left box edge must stay right of the analyticity strip",
        ));
    }
    if bx.re_min < -dist.analyticity_width() {
        return Err(Error::domain(
            "box extends past the analyticity half-plane of Lĝ",
        ));
    }
    let (count, min_abs) = boundary_winding(dist, coupling, &bx)?;
    if count < 0 {
        return Err(Error::numeric("negative boundary winding", count as f64));
    }
    let mut roots: Vec<(Complex64, usize)> = Vec::new();
    subdivide(dist, coupling, bx, count, &mut roots)?;
    // Merge roots that landed within the cluster tolerance of each other.
    roots.sort_by(|a, b| (a.0.re, a.0.im).partial_cmp(&(b.0.re, b.0.im)).unwrap());
    let mut merged: Vec<(Complex64, usize)> = Vec::new();
    for (z, p) in roots {
        if let Some(last) = merged.last_mut() {
            if (last.0 - z).norm() < CLUSTER_DIAMETER {
                last.1 += p;
                continue;
            }
        }
        merged.push((z, p));
    }

    let residues = merged
        .iter()
        .map(|&(lambda, p)| residues_at(dist, coupling, lambda, p, &merged))
        .collect::<Result<Vec<_>>>()?;

    Ok(EigenmodeSet {
        roots: merged,
        strip_bound: strip,
        residues,
        boundary_min_abs: min_abs,
    })
}

/// Laurent coefficients c_{-1}, …, c_{-p} of [1 + (Lk)]⁻¹ at λ by small-circle
/// contour quadrature (64-point trapezoid).
fn residues_at(
    dist: &VelocityDistribution,
    coupling: f64,
    lambda: Complex64,
    multiplicity: usize,
    all_roots: &[(Complex64, usize)],
) -> Result<Vec<Complex64>> {
    let nearest = all_roots
        .iter()
        .filter(|(z, _)| (z - lambda).norm() > CLUSTER_DIAMETER)
        .map(|(z, _)| (z - lambda).norm())
        .fold(f64::INFINITY, f64::min);
    let radius = (0.5 * nearest).min(1e-2);
    let m = 64;
    let mut coeffs = Vec::with_capacity(multiplicity);
    let mut inv_f: Vec<Complex64> = Vec::with_capacity(m);
    let mut offsets: Vec<Complex64> = Vec::with_capacity(m);
    for j in 0..m {
        let theta = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
        let dz = Complex64::from_polar(radius, theta);
        offsets.push(dz);
        inv_f.push(1.0 / characteristic(dist, coupling, lambda + dz)?);
    }
    for k in 1..=multiplicity {
        // c_{-k} = (1/2π) ∫ (ρe^{iθ})^k / F dθ
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..m {
            acc += offsets[j].powu(k as u32) * inv_f[j];
        }
        coeffs.push(acc / m as f64);
    }
    Ok(coeffs)
}

/// Generalised eigenfunction value
/// z_{λ,j}(1,ξ) = (K/2) ∫_ξ^∞ e^{-λ(ζ-ξ)} (ζ-ξ)^j ĝ(ζ) dζ,
/// evaluated as (K/2) ∫_0^∞ e^{-λs} s^j ĝ(ξ+s) ds with an exponential tail
/// cut. Higher spatial modes of the eigenfunction vanish.
pub fn eigenmode_eval(
    dist: &VelocityDistribution,
    coupling: f64,
    lambda: Complex64,
    j: usize,
    xi: f64,
) -> Result<Complex64> {
    if xi < 0.0 {
        return Err(Error::domain("eigenmode_eval requires xi >= 0"));
    }
    let a_max = dist.analyticity_width();
    if lambda.re <= -a_max {
        return Err(Error::domain(
            "Re λ must exceed the negative decay rate of ĝ",
        ));
    }
    let cut = dist.laplace_tail_cut(lambda.re);
    if !cut.is_finite() {
        return Err(Error::domain("divergent eigenmode tail"));
    }
    let mut f = |s: f64| {
        let weight = if j == 0 { 1.0 } else { s.powi(j as i32) };
        (-lambda * s).exp() * weight * dist.fourier_raw(xi + s)
    };
    let q = quad::integrate_complex(&mut f, 0.0, cut + j as f64 * 5.0, 1e-12);
    if q.err > 1e-8 {
        return Err(Error::numeric("eigenmode quadrature", q.err));
    }
    Ok(0.5 * coupling * q.value)
}

/// Spectral functional α_{λ,j}(u) = ∫_0^∞ u(1,t) (-t)^j e^{-λt} dt.
///
/// `decay_rate` is the caller-supplied exponential decay rate of u1
/// (|u1(t)| ≲ e^{-decay_rate·t}); convergence needs decay_rate + Re λ > 0.
pub fn spectral_functional(
    u1: &dyn Fn(f64) -> Complex64,
    lambda: Complex64,
    j: usize,
    decay_rate: f64,
) -> Result<Complex64> {
    let eff = decay_rate + lambda.re;
    if eff <= 0.0 {
        return Err(Error::domain(
            "spectral functional tail does not converge at this λ",
        ));
    }
    // t^j e^{-eff t} < 1e-17 cut.
    let mut cut = 40.0 / eff;
    for _ in 0..20 {
        let v = j as f64 * cut.ln().max(0.0) - eff * cut;
        if v < -40.0 {
            break;
        }
        cut *= 1.5;
    }
    let mut f = |t: f64| {
        let w = if j == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(-t, 0.0).powu(j as u32)
        };
        u1(t) * w * (-lambda * t).exp()
    };
    let q = quad::integrate_complex(&mut f, 0.0, cut, 1e-10);
    if q.err > 1e-7 {
        return Err(Error::numeric("spectral functional quadrature", q.err));
    }
    Ok(q.value)
}

/// Default strip bound for eigenmode decompositions: 0.9·min(a_max, 1), kept
/// off the measure-zero bad lines by the boundary minimum check in
/// `locate_roots`.
pub fn default_strip(dist: &VelocityDistribution) -> f64 {
    0.9 * dist.analyticity_width().min(1.0)
}
