//! Adaptive quadrature primitives shared by the analysis modules.
//!
//! A 7-15 Gauss–Kronrod pair drives an adaptive bisection scheme for real and
//! complex integrands on finite intervals; semi-infinite integrals are handled
//! by the callers through explicit truncation points derived from the decay of
//! their integrands. A quadratic Filon rule covers strongly oscillatory
//! Fourier-type integrals where plain quadrature would need a node per
//! oscillation.

use num_complex::Complex64;

/// Kronrod-15 abscissae on [0,1] side of the symmetric rule.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

/// Kronrod-15 weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// Gauss-7 weights for the odd-indexed Kronrod nodes (and the midpoint).
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

const MAX_DEPTH: u32 = 52;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Quad {
    pub value: Complex64,
    /// Accumulated local error estimate.
    pub err: f64,
}

fn gk15_complex(f: &mut dyn FnMut(f64) -> Complex64, a: f64, b: f64) -> (Complex64, Complex64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        kron += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    (kron * h, gauss * h)
}

/// Adaptive Gauss–Kronrod integration of a complex integrand on [a, b].
///
/// Never fails; the returned error estimate tells the caller whether the
/// requested absolute tolerance was met.
pub(crate) fn integrate_complex(
    f: &mut dyn FnMut(f64) -> Complex64,
    a: f64,
    b: f64,
    abs_tol: f64,
) -> Quad {
    fn recurse(
        f: &mut dyn FnMut(f64) -> Complex64,
        a: f64,
        b: f64,
        tol: f64,
        depth: u32,
        out: &mut Quad,
    ) {
        let (k, g) = gk15_complex(f, a, b);
        let err = (k - g).norm();
        if err <= tol || depth >= MAX_DEPTH {
            out.value += k;
            out.err += err;
            return;
        }
        let c = 0.5 * (a + b);
        recurse(f, a, c, 0.5 * tol, depth + 1, out);
        recurse(f, c, b, 0.5 * tol, depth + 1, out);
    }

    let mut out = Quad {
        value: Complex64::new(0.0, 0.0),
        err: 0.0,
    };
    if a == b {
        return out;
    }
    recurse(f, a, b, abs_tol.max(1e-300), 0, &mut out);
    out
}

/// Adaptive Gauss–Kronrod integration of a real integrand on [a, b].
pub(crate) fn integrate_real(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, abs_tol: f64) -> (f64, f64) {
    fn gk15(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let fc = f(c);
        let mut kron = WGK[7] * fc;
        let mut gauss = WG[3] * fc;
        for j in 0..7 {
            let x = h * XGK[j];
            let f1 = f(c - x);
            let f2 = f(c + x);
            kron += WGK[j] * (f1 + f2);
            if j % 2 == 1 {
                gauss += WG[j / 2] * (f1 + f2);
            }
        }
        (kron * h, gauss * h)
    }

    fn recurse(
        f: &mut dyn FnMut(f64) -> f64,
        a: f64,
        b: f64,
        tol: f64,
        depth: u32,
        acc: &mut (f64, f64),
    ) {
        let (k, g) = gk15(f, a, b);
        let err = (k - g).abs();
        if err <= tol || depth >= MAX_DEPTH {
            acc.0 += k;
            acc.1 += err;
            return;
        }
        let c = 0.5 * (a + b);
        recurse(f, a, c, 0.5 * tol, depth + 1, acc);
        recurse(f, c, b, 0.5 * tol, depth + 1, acc);
    }

    let mut acc = (0.0, 0.0);
    if a == b {
        return acc;
    }
    recurse(f, a, b, abs_tol.max(1e-300), 0, &mut acc);
    acc
}

/// Principal-value integral PV ∫ g(x+ω)/ω dω over ω ∈ (-H, H), written as the
/// one-sided integral of the difference quotient (g(x+ω) - g(x-ω))/ω, which is
/// continuous through ω = 0.
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn pv_difference(g: &dyn Fn(f64) -> f64, x: f64, upper: f64, abs_tol: f64) -> (f64, f64) {
    let mut f = |w: f64| (g(x + w) - g(x - w)) / w;
    integrate_real(&mut f, 0.0, upper, abs_tol)
}

/// Symmetric-excision principal value with Richardson extrapolation in the
/// excision radius h: the excised piece is 2 g'(x) h + O(h^3), so
/// 2 P(h/2) - P(h) removes the leading term.
pub(crate) fn pv_excision_richardson(
    g: &dyn Fn(f64) -> f64,
    x: f64,
    h: f64,
    upper: f64,
    abs_tol: f64,
) -> f64 {
    let one_sided = |eps: f64| {
        let mut f = |w: f64| (g(x + w) - g(x - w)) / w;
        integrate_real(&mut f, eps, upper, abs_tol).0
    };
    let p_h = one_sided(h);
    let p_h2 = one_sided(0.5 * h);
    2.0 * p_h2 - p_h
}

/// Trapezoidal rule on uniformly spaced real samples.
pub(crate) fn trapezoid(values: &[f64], dx: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    dx * (0.5 * values[0] + inner + 0.5 * values[values.len() - 1])
}

/// Filon moments M_k = ∫_{-H}^{H} s^k e^{i xi s} ds for k = 0, 1, 2.
fn filon_moments(xi: f64, half: f64) -> (Complex64, Complex64, Complex64) {
    let t = xi * half;
    if t.abs() < 0.5 {
        // Series in t; enough terms for full double precision at |t| < 0.5.
        let t2 = t * t;
        let m0 = 2.0 * half * (1.0 - t2 / 6.0 + t2 * t2 / 120.0 - t2 * t2 * t2 / 5040.0);
        let m1 = 2.0 * half * half * (t / 3.0 - t * t2 / 30.0 + t * t2 * t2 / 840.0);
        let m2 = 2.0 * half * half * half
            * (1.0 / 3.0 - t2 / 10.0 + t2 * t2 / 168.0 - t2 * t2 * t2 / 6480.0);
        (
            Complex64::new(m0, 0.0),
            Complex64::new(0.0, m1),
            Complex64::new(m2, 0.0),
        )
    } else {
        let (s, c) = t.sin_cos();
        let m0 = 2.0 * s / xi;
        let m1 = 2.0 * (s / (xi * xi) - half * c / xi);
        let m2 = 2.0 * (half * half * s / xi + 2.0 * half * c / (xi * xi) - 2.0 * s / (xi * xi * xi));
        (
            Complex64::new(m0, 0.0),
            Complex64::new(0.0, m1),
            Complex64::new(m2, 0.0),
        )
    }
}

/// One quadratic Filon panel: ∫ f(ω) e^{i xi ω} dω over [center-half, center+half],
/// with f sampled at the panel ends and midpoint.
pub(crate) fn filon_panel(
    f0: Complex64,
    f1: Complex64,
    f2: Complex64,
    center: f64,
    half: f64,
    xi: f64,
) -> Complex64 {
    let (m0, m1, m2) = filon_moments(xi, half);
    let a = f1;
    let b = (f2 - f0) / (2.0 * half);
    let c = (f0 - 2.0 * f1 + f2) / (2.0 * half * half);
    let phase = Complex64::new(0.0, xi * center).exp();
    phase * (a * m0 + b * m1 + c * m2)
}

/// Composite quadratic Filon rule for ∫ f(ω) e^{i xi ω} dω over [a, b].
/// `max_panel` caps the panel width; near-oscillation-free accuracy needs
/// panels no longer than about π/|xi|.
pub(crate) fn filon_integrate(
    f: &dyn Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    xi: f64,
    max_panel: f64,
) -> Complex64 {
    if b <= a {
        return Complex64::new(0.0, 0.0);
    }
    let osc_panel = if xi.abs() > 1.0 {
        std::f64::consts::PI / xi.abs()
    } else {
        f64::INFINITY
    };
    let width = max_panel.min(osc_panel);
    let n = ((b - a) / width).ceil().max(1.0) as usize;
    let h = (b - a) / n as f64;
    let mut total = Complex64::new(0.0, 0.0);
    let mut left_val = f(a);
    for i in 0..n {
        let x0 = a + i as f64 * h;
        let mid = f(x0 + 0.5 * h);
        let right = f(x0 + h);
        total += filon_panel(left_val, mid, right, x0 + 0.5 * h, 0.5 * h, xi);
        left_val = right;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk_polynomial_is_exact() {
        let mut f = |x: f64| x * x * x - 2.0 * x + 1.0;
        let (v, _) = integrate_real(&mut f, -1.0, 3.0, 1e-14);
        // Antiderivative x^4/4 - x^2 + x on [-1, 3].
        let exact = (81.0 / 4.0 - 9.0 + 3.0) - (0.25 - 1.0 - 1.0);
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn gk_oscillatory_complex() {
        let mut f = |x: f64| Complex64::new(0.0, 5.0 * x).exp() * (-x).exp();
        let q = integrate_complex(&mut f, 0.0, 40.0, 1e-13);
        // ∫_0^∞ e^{(5i-1)x} dx = 1/(1-5i)
        let exact = Complex64::new(1.0, 0.0) / Complex64::new(1.0, -5.0);
        assert!((q.value - exact).norm() < 1e-10);
    }

    #[test]
    fn pv_of_odd_kernel_vanishes() {
        let g = |w: f64| (-w * w / 2.0).exp();
        let (v, _) = pv_difference(&g, 0.0, 40.0, 1e-12);
        assert!(v.abs() < 1e-10);
    }

    #[test]
    fn excision_matches_smooth_route() {
        let g = |w: f64| (-(w - 0.3) * (w - 0.3) / 2.0).exp();
        let (smooth, _) = pv_difference(&g, 1.0, 45.0, 1e-12);
        let excised = pv_excision_richardson(&g, 1.0, 1e-3, 45.0, 1e-12);
        assert!((smooth - excised).abs() < 1e-8);
    }

    #[test]
    fn filon_matches_gk_on_moderate_frequency() {
        let f = |x: f64| Complex64::new((-x * x / 2.0).exp(), 0.0);
        let xi = 12.0;
        let filon = filon_integrate(&f, -8.0, 8.0, xi, 0.25);
        let mut osc = |x: f64| Complex64::new(0.0, xi * x).exp() * (-x * x / 2.0).exp();
        let gk = integrate_complex(&mut osc, -8.0, 8.0, 1e-13).value;
        assert!((filon - gk).norm() < 1e-8);
    }
}
