#pragma once

namespace gapasym {

/// Modified Bessel function K0(x), x > 0.
/// Small arguments use the ascending series; x >= 0.5 uses trapezoidal
/// quadrature of the integral representation over cosh, which is spectrally
/// accurate. Relative accuracy is ~1e-13 over the range used here.
double bessel_k0(double x);

/// Modified Bessel function I0(x) by ascending series (|x| <= ~20).
double bessel_i0_series(double x);

}  // namespace gapasym
