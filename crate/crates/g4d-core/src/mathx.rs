//! Scalar math shims: platform intrinsics under `std`, libm otherwise.

#![allow(dead_code)]

macro_rules! shim {
    ($name:ident, $libm:path) => {
        #[cfg(feature = "std")]
        #[inline(always)]
        pub(crate) fn $name(x: f64) -> f64 {
            f64::$name(x)
        }
        #[cfg(not(feature = "std"))]
        #[inline(always)]
        pub(crate) fn $name(x: f64) -> f64 {
            $libm(x)
        }
    };
}

shim!(exp, libm::exp);
shim!(sqrt, libm::sqrt);
shim!(tanh, libm::tanh);
shim!(ln, libm::log);
shim!(log10, libm::log10);
shim!(floor, libm::floor);
shim!(ceil, libm::ceil);
shim!(round, libm::round);
shim!(abs, libm::fabs);
shim!(sin, libm::sin);
shim!(cos, libm::cos);
shim!(tan, libm::tan);

#[cfg(feature = "std")]
#[inline(always)]
pub(crate) fn atan2(y: f64, x: f64) -> f64 {
    f64::atan2(y, x)
}
#[cfg(not(feature = "std"))]
#[inline(always)]
pub(crate) fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}
