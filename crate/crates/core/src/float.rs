//! Thin wrappers over `libm` so the rest of the crate reads like std code.

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

/// `|x|^p`, with the common exponents special-cased.
#[inline]
pub fn abs_pow(x: f64, p: f64) -> f64 {
    let a = x.abs();
    if p == 2.0 {
        a * a
    } else if p == 1.0 {
        a
    } else if a == 0.0 {
        0.0
    } else {
        libm::pow(a, p)
    }
}

/// `sign(x) |x|^q`.
#[inline]
pub fn signed_pow(x: f64, q: f64) -> f64 {
    if q == 1.0 {
        x
    } else if x == 0.0 {
        0.0
    } else {
        libm::copysign(libm::pow(x.abs(), q), x)
    }
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn tgamma(x: f64) -> f64 {
    libm::tgamma(x)
}
