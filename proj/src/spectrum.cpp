#include "vps/spectrum.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vps/ops.hpp"

namespace vps {

RadialSpectrum radial_spectrum(const ScalarField& f) {
  const Grid& g = f.grid;
  const bool per = g.bc == Bc::periodic;
  const int ex = per ? g.nx : 2 * g.nx;
  const int ey = per ? g.ny : 2 * g.ny;
  const double lex = ex * g.hx(), ley = ey * g.hy();

  const double mean = compensated_total(f.v) / static_cast<double>(g.size());

  double* in = fftw_alloc_real(static_cast<std::size_t>(ex) * ey);
  fftw_complex* out =
      fftw_alloc_complex(static_cast<std::size_t>(ey) * (ex / 2 + 1));
  auto mirror = [](int k, int n) { return (k < n) ? k : 2 * n - 1 - k; };
  for (int j = 0; j < ey; ++j)
    for (int i = 0; i < ex; ++i)
      in[static_cast<std::size_t>(j) * ex + i] =
          f.v[g.at(mirror(i, g.nx), mirror(j, g.ny))] - mean;

  // FFTW_ESTIMATE picks the plan from the size alone, so repeated runs of
  // the same build produce bitwise-identical transforms.
  fftw_plan plan = fftw_plan_dft_r2c_2d(ey, ex, in, out, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);

  const double dkx = 2.0 * std::numbers::pi / lex;
  const double dky = 2.0 * std::numbers::pi / ley;
  const double dk = std::min(dkx, dky);
  const double kmax = std::hypot(dkx * (ex / 2), dky * (ey / 2));
  const int nbins = static_cast<int>(kmax / dk) + 1;

  std::vector<double> power(nbins, 0.0), kpow(nbins, 0.0);
  for (int j = 0; j < ey; ++j) {
    const int mj = (j <= ey / 2) ? j : j - ey;
    for (int i = 0; i <= ex / 2; ++i) {
      if (i == 0 && mj == 0) continue;
      const fftw_complex& c = out[static_cast<std::size_t>(j) * (ex / 2 + 1) + i];
      // the r2c half-plane stores +i only; interior columns stand for both signs
      const double w = (i == 0 || 2 * i == ex) ? 1.0 : 2.0;
      const double p = w * (c[0] * c[0] + c[1] * c[1]);
      const double k = std::hypot(dkx * i, dky * mj);
      const int b = std::min(static_cast<int>(k / dk), nbins - 1);
      power[b] += p;
      kpow[b] += p * k;
    }
  }
  fftw_free(in);
  fftw_free(out);

  RadialSpectrum s;
  s.k.resize(nbins);
  s.S.resize(nbins);
  for (int b = 0; b < nbins; ++b) {
    s.S[b] = power[b];
    s.k[b] = (power[b] > 0.0) ? kpow[b] / power[b] : (b + 0.5) * dk;
  }
  return s;
}

double spectrum_first_moment(const RadialSpectrum& s) {
  double num = 0.0, den = 0.0;
  for (std::size_t b = 0; b < s.S.size(); ++b) {
    num += s.k[b] * s.S[b];
    den += s.S[b];
  }
  return (den > 0.0) ? num / den : 0.0;
}

}  // namespace vps
