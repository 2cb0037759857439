use num_complex::Complex;

use crate::num::Real;

/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.8541878128e-12;

/// `ε_c = ε_r − j·σ/(2π·f·ε₀)`.
pub fn complex_permittivity<T: Real>(eps_r: T, sigma: T, frequency_hz: T) -> Complex<T> {
    let two_pi = T::PI() + T::PI();
    Complex::new(eps_r, -sigma / (two_pi * frequency_hz * T::of(EPSILON_0)))
}

/// Fresnel reflection coefficients `(Γ_s, Γ_p)` for incidence angle `theta_i`
/// measured from the surface normal.
pub fn fresnel<T: Real>(eps_c: Complex<T>, theta_i: T) -> (Complex<T>, Complex<T>) {
    let (sin, cos) = theta_i.sin_cos();
    let root = (eps_c - Complex::from(sin * sin)).sqrt();
    let cos_c = Complex::from(cos);
    let gamma_s = (cos_c - root) / (cos_c + root);
    let ec = eps_c * cos;
    let gamma_p = (ec - root) / (ec + root);
    (gamma_s, gamma_p)
}

/// Brewster angle of a lossless dielectric, radians.
pub fn brewster_angle<T: Real>(eps_r: T) -> T {
    eps_r.sqrt().atan()
}
