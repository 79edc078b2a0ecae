#pragma once

#include <vector>

#include "vps/field.hpp"

namespace vps {

// Radially binned power spectrum of f - mean(f). Periodic grids transform
// directly (modes 2 pi m / L); neumann grids transform the even mirror
// extension (modes pi m / L), which is the expansion the no-flux operators
// diagonalize. Bins have width equal to the smallest positive mode spacing;
// k[b] is the power-weighted mean wavenumber inside bin b (geometric center
// when the bin is empty) and S[b] the total modal power. The zero mode is
// excluded.
struct RadialSpectrum {
  std::vector<double> k;
  std::vector<double> S;
};

RadialSpectrum radial_spectrum(const ScalarField& f);

// Power-weighted mean wavenumber of the spectrum; 0 when there is no power.
double spectrum_first_moment(const RadialSpectrum& s);

}  // namespace vps
