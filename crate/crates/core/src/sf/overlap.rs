use crate::error::{Error, Result};

/// Standard normal upper tail.
pub fn q(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Overlap area `∫ min(pdf_A, pdf_B)` of two normal densities.
///
/// With equal variances the densities cross once, at the midpoint, and the
/// area is `2·Q(|μ_A − μ_B| / 2σ)`. Otherwise they cross at both roots of the
/// log-density equality; the narrower density is the smaller one outside the
/// roots and the wider one between them.
pub fn gaussian_overlap(mu_a: f64, sigma_a: f64, mu_b: f64, sigma_b: f64) -> Result<f64> {
    if !(sigma_a > 0.0 && sigma_b > 0.0) || !sigma_a.is_finite() || !sigma_b.is_finite() {
        return Err(Error::invalid(format!(
            "standard deviations must be positive, got {sigma_a} and {sigma_b}"
        )));
    }
    if !mu_a.is_finite() || !mu_b.is_finite() {
        return Err(Error::invalid("means must be finite"));
    }
    if sigma_a == sigma_b {
        return Ok((2.0 * q((mu_a - mu_b).abs() / (2.0 * sigma_a))).clamp(0.0, 1.0));
    }
    let (mn, sn, mw, sw) = if sigma_a < sigma_b {
        (mu_a, sigma_a, mu_b, sigma_b)
    } else {
        (mu_b, sigma_b, mu_a, sigma_a)
    };
    // a x² + b x + c = 0 where the log densities agree
    let a = 1.0 / (2.0 * sn * sn) - 1.0 / (2.0 * sw * sw);
    let b = mw / (sw * sw) - mn / (sn * sn);
    let c = mn * mn / (2.0 * sn * sn) - mw * mw / (2.0 * sw * sw) + (sn / sw).ln();
    let disc = (b * b - 4.0 * a * c).max(0.0);
    let qq = -0.5 * (b + b.signum() * disc.sqrt());
    let (mut r1, mut r2) = if qq != 0.0 { (qq / a, c / qq) } else { (-disc.sqrt() / (2.0 * a), disc.sqrt() / (2.0 * a)) };
    if r1 > r2 {
        std::mem::swap(&mut r1, &mut r2);
    }
    let zn1 = (r1 - mn) / sn;
    let zn2 = (r2 - mn) / sn;
    let zw1 = (r1 - mw) / sw;
    let zw2 = (r2 - mw) / sw;
    // narrow outside the roots, wide between them
    let narrow = q(-zn1) + q(zn2);
    let wide = q(zw1) - q(zw2);
    Ok((narrow + wide).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_is_one() {
        assert!((gaussian_overlap(3.0, 2.0, 3.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unit_shift() {
        let s = gaussian_overlap(0.0, 1.0, 2.0, 1.0).unwrap();
        assert!((s - 0.317_310_507_862_914_1).abs() < 1e-12, "{s}");
    }

    #[test]
    fn same_mean_different_width() {
        // roots at ±x with x² = 2 ln(σw/σn) σn² σw² / (σw² − σn²)
        let (sn, sw) = (1.0f64, 2.0f64);
        let x = (2.0 * (sw / sn).ln() * sn * sn * sw * sw / (sw * sw - sn * sn)).sqrt();
        let expect = 2.0 * q(x / sn) + 1.0 - 2.0 * q(x / sw);
        let s = gaussian_overlap(0.0, sn, 0.0, sw).unwrap();
        assert!((s - expect).abs() < 1e-12);
        assert_eq!(s, gaussian_overlap(0.0, sw, 0.0, sn).unwrap());
    }

    #[test]
    fn rejects_bad_sigma() {
        assert!(gaussian_overlap(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(gaussian_overlap(0.0, 1.0, 0.0, -1.0).is_err());
    }
}
