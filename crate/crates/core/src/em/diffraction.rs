use num_complex::Complex;

use crate::num::Real;

/// Fresnel integrals `(C(x), S(x))` with the `π/2·t²` kernel. Power series
/// below |x| = 1.5, continued fraction (modified Lentz) above.
pub fn fresnel_integrals<T: Real>(x: T) -> (T, T) {
    let eps = T::epsilon();
    let ax = x.abs();
    let half_pi = T::FRAC_PI_2();
    let max_iter = 200;
    let (c, s) = if ax < T::min_positive_value().sqrt() {
        (ax, T::zero())
    } else if ax <= T::of(1.5) {
        let fact = half_pi * ax * ax;
        let (mut sum_c, mut sum_s) = (ax, T::zero());
        let mut sign = T::one();
        let mut term = ax;
        let mut odd = true;
        let mut n = T::of(3.0);
        for k in 1..max_iter {
            term = term * fact / T::of(k as f64);
            let contrib = sign * term / n;
            if odd {
                sum_s += contrib;
                sign = -sign;
            } else {
                sum_c += contrib;
            }
            if term / n < eps * sum_c.abs().max(sum_s.abs()) {
                break;
            }
            odd = !odd;
            n += T::of(2.0);
        }
        (sum_c, sum_s)
    } else {
        let pix2 = T::PI() * ax * ax;
        let tiny = T::min_positive_value();
        let mut b = Complex::new(T::one(), -pix2);
        let mut cc = Complex::from(T::one() / tiny);
        let mut d = Complex::from(T::one()) / b;
        let mut h = d;
        let mut n = -T::one();
        for _ in 2..max_iter {
            n += T::of(2.0);
            let a = -n * (n + T::one());
            b = b + Complex::from(T::of(4.0));
            d = Complex::from(T::one()) / (d * a + b);
            cc = b + Complex::from(a) / cc;
            let del = cc * d;
            h = h * del;
            if (del.re - T::one()).abs() + del.im.abs() < eps {
                break;
            }
        }
        h = h * Complex::new(ax, -ax);
        let half = T::of(0.5);
        let phase = Complex::new((half * pix2).cos(), (half * pix2).sin());
        let cs = Complex::new(half, half) * (Complex::from(T::one()) - phase * h);
        (cs.re, cs.im)
    };
    if x < T::zero() {
        (-c, -s)
    } else {
        (c, s)
    }
}

/// UTD transition function `F(x) = 2j·√x·e^{jx}·∫_{√x}^∞ e^{−jτ²} dτ`, `x ≥ 0`.
pub fn transition_function<T: Real>(x: T) -> Complex<T> {
    let x = x.max(T::zero());
    let u = x.sqrt();
    let z = u * (T::of(2.0) / T::PI()).sqrt();
    let (c, s) = fresnel_integrals(z);
    let half = T::of(0.5);
    let tail = Complex::new(half - c, -(half - s)) * (T::FRAC_PI_2()).sqrt();
    Complex::new(T::zero(), u + u) * Complex::new(x.cos(), x.sin()) * tail
}

/// Edge-fixed geometry of one diffraction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WedgeGeometry<T> {
    /// Wedge parameter `n`; exterior angle `n·π`, `1 < n ≤ 2`.
    pub n: T,
    /// Observation angle from the 0-face, `[0, nπ]`.
    pub phi: T,
    /// Source angle from the 0-face, `[0, nπ]`.
    pub phi_prime: T,
    /// Angle between the incident ray and the edge.
    pub beta0: T,
    /// Incident-side distance `s′` (unfolded), meters.
    pub s_in: T,
    /// Diffracted-side distance `s` (unfolded), meters.
    pub s_out: T,
}

/// Soft and hard UTD diffraction coefficients (units √m).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UtdCoefficients<T> {
    pub soft: Complex<T>,
    pub hard: Complex<T>,
    /// Spherical-wave spreading `√(s′/(s(s+s′)))`.
    pub spreading: T,
}

/// `cot((π ± β)/(2n))·F(kL·a±(β))`, with the small-angle form near a shadow
/// or reflection boundary where the cotangent is singular.
fn cot_term<T: Real>(n: T, kl: T, beta: T, plus: bool) -> Complex<T> {
    let pi = T::PI();
    let two = T::of(2.0);
    let sign = if plus { T::one() } else { -T::one() };
    // N± = integer most nearly satisfying 2πnN − β = ±π.
    let big_n = ((beta + sign * pi) / (two * pi * n)).round();
    // Deviation from the boundary.
    let eps = if plus {
        pi + beta - two * pi * n * big_n
    } else {
        pi - beta + two * pi * n * big_n
    };
    let half_arg = (two * pi * n * big_n - beta) / two;
    let a = two * half_arg.cos() * half_arg.cos();
    let e_pi4 = Complex::from_polar(T::one(), T::FRAC_PI_4());
    if eps.abs() < T::of(1e-5) {
        let sgn = if eps >= T::zero() { T::one() } else { -T::one() };
        let lead = Complex::from((two * pi * kl).sqrt() * sgn);
        return (lead - e_pi4 * (two * kl * eps)) * e_pi4 * n;
    }
    let arg = (pi + sign * beta) / (two * n);
    let cot = arg.cos() / arg.sin();
    transition_function(kl * a) * cot
}

/// Kouyoumjian–Pathak wedge diffraction coefficients for wavenumber `k`.
/// The distance parameter is `L = s·s′/(s+s′)·sin²β₀`. At grazing incidence
/// (`φ′` on a face) the coefficients carry the usual factor ½.
pub fn utd_diffraction<T: Real>(w: &WedgeGeometry<T>, k: T) -> UtdCoefficients<T> {
    let two = T::of(2.0);
    let sin_b0 = w.beta0.sin();
    let l = w.s_in * w.s_out / (w.s_in + w.s_out) * sin_b0 * sin_b0;
    let kl = k * l;
    let mut pre = -Complex::from_polar(T::one(), -T::FRAC_PI_4())
        / (two * w.n * (two * T::PI() * k).sqrt() * sin_b0);
    // Incidence along a face: the incident and reflected terms coincide and
    // the coefficient is halved.
    let graze = T::of(1e-9);
    if w.phi_prime < graze || w.phi_prime > w.n * T::PI() - graze {
        pre = pre * Complex::from(T::of(0.5));
    }
    let diff = w.phi - w.phi_prime;
    let sum = w.phi + w.phi_prime;
    let incident = cot_term(w.n, kl, diff, true) + cot_term(w.n, kl, diff, false);
    let reflected = cot_term(w.n, kl, sum, true) + cot_term(w.n, kl, sum, false);
    UtdCoefficients {
        soft: pre * (incident - reflected),
        hard: pre * (incident + reflected),
        spreading: (w.s_in / (w.s_out * (w.s_out + w.s_in))).sqrt(),
    }
}

/// Single knife-edge loss `J(v)` in dB (ITU approximation), 0 for `v ≤ −0.78`.
pub fn knife_edge_loss<T: Real>(v: T) -> T {
    if v <= T::of(-0.78) {
        return T::zero();
    }
    let w = v - T::of(0.1);
    T::of(6.9) + T::of(20.0) * ((w * w + T::one()).sqrt() + w).log10()
}

/// Fresnel–Kirchhoff parameter for an obstacle `h` above the direct line at
/// distances `d1`, `d2` from its ends.
pub fn fresnel_kirchhoff_v<T: Real>(h: T, d1: T, d2: T, wavelength: T) -> T {
    h * (T::of(2.0) / wavelength * (T::one() / d1 + T::one() / d2)).sqrt()
}
