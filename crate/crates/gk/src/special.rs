//! Complex Gamma function (Lanczos approximation with reflection).

use std::f64::consts::PI;

use num_complex::Complex64;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `log Γ(z)` for `Re z ≥ 1/2` (principal branch of the Lanczos form).
fn ln_gamma_right(z: Complex64) -> Complex64 {
    let z = z - 1.0;
    let mut a = Complex64::new(LANCZOS_COEF[0], 0.0);
    for (k, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        a += *c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + a.ln()
}

fn is_nonpositive_integer(z: Complex64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re.fract() == 0.0
}

/// `sin(πz)` with the integer part of `Re z` removed exactly first.
pub fn sin_pi(z: Complex64) -> Complex64 {
    let n = z.re.round();
    let r = Complex64::new(z.re - n, z.im);
    let s = (PI * r).sin();
    if n.rem_euclid(2.0) == 0.0 {
        s
    } else {
        -s
    }
}

/// `Γ(z)`; infinite at the poles.
pub fn gamma(z: Complex64) -> Complex64 {
    if is_nonpositive_integer(z) {
        return Complex64::new(f64::INFINITY, 0.0);
    }
    if z.re < 0.5 {
        PI / (sin_pi(z) * ln_gamma_right(1.0 - z).exp())
    } else {
        ln_gamma_right(z).exp()
    }
}

/// `1/Γ(z)`, an entire function; exactly zero at non-positive integers.
pub fn rgamma(z: Complex64) -> Complex64 {
    if is_nonpositive_integer(z) {
        return Complex64::new(0.0, 0.0);
    }
    if z.re < 0.5 {
        sin_pi(z) * ln_gamma_right(1.0 - z).exp() / PI
    } else {
        (-ln_gamma_right(z)).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn factorials_and_half_integers() {
        let mut f = 1.0;
        for n in 1..25 {
            let g = gamma(c(n as f64, 0.0));
            assert!((g.re / f - 1.0).abs() < 1e-13, "n={n}");
            f *= n as f64;
        }
        assert!((gamma(c(0.5, 0.0)).re - PI.sqrt()).abs() < 1e-14);
        assert!((gamma(c(-0.5, 0.0)).re + 2.0 * PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn recurrence_and_reflection_in_the_plane() {
        for &(re, im) in &[(0.3, 2.0), (-2.7, 0.4), (4.1, -7.5), (-0.2, 15.0), (1.0, 40.0)] {
            let z = c(re, im);
            let lhs = gamma(z + 1.0);
            let rhs = z * gamma(z);
            assert!((lhs / rhs - 1.0).norm() < 1e-12, "z={z}");
            let refl = gamma(z) * gamma(1.0 - z) * (PI * z).sin() / PI;
            assert!((refl - 1.0).norm() < 1e-12, "z={z}");
        }
        // |Γ(iy)|² = π/(y sinh πy)
        let y: f64 = 3.0;
        let g = gamma(c(0.0, y));
        assert!((g.norm_sqr() / (PI / (y * (PI * y).sinh())) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn reciprocal_vanishes_at_poles() {
        for n in 0..6 {
            assert_eq!(rgamma(c(-(n as f64), 0.0)), c(0.0, 0.0));
        }
        assert!((rgamma(c(-3.0 + 1e-9, 0.0)).re + 6.0 * 1e-9).abs() < 1e-15);
    }
}
