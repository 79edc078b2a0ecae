#include "vps/poisson.hpp"

#include <fftw3.h>

#include <cmath>
#include <stdexcept>

namespace vps {

struct FastPoisson::Impl {
  Grid g;
  double* buf = nullptr;         // nx*ny transform workspace
  fftw_complex* cbuf = nullptr;  // ny*(nx/2+1), periodic only
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
  std::vector<double> lx, ly;  // modewise eigenvalues of -d2/dx2, -d2/dy2
  double scale = 1.0;

  ~Impl() {
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
    if (buf) fftw_free(buf);
    if (cbuf) fftw_free(cbuf);
  }
};

FastPoisson::FastPoisson(const Grid& g) : impl_(std::make_unique<Impl>()) {
  Impl& im = *impl_;
  im.g = g;
  const int nx = g.nx, ny = g.ny;
  im.buf = fftw_alloc_real(static_cast<std::size_t>(nx) * ny);
  if (!im.buf) throw std::bad_alloc();
  const double ihx2 = 1.0 / (g.hx() * g.hx());
  const double ihy2 = 1.0 / (g.hy() * g.hy());
  im.lx.resize(nx);
  im.ly.resize(ny);
  // FFTW_ESTIMATE keeps planning input-independent, so solves stay
  // reproducible run to run.
  if (g.bc == Bc::neumann) {
    for (int p = 0; p < nx; ++p)
      im.lx[p] = (2.0 - 2.0 * std::cos(M_PI * p / nx)) * ihx2;
    for (int q = 0; q < ny; ++q)
      im.ly[q] = (2.0 - 2.0 * std::cos(M_PI * q / ny)) * ihy2;
    im.fwd = fftw_plan_r2r_2d(ny, nx, im.buf, im.buf, FFTW_REDFT10,
                              FFTW_REDFT10, FFTW_ESTIMATE);
    im.bwd = fftw_plan_r2r_2d(ny, nx, im.buf, im.buf, FFTW_REDFT01,
                              FFTW_REDFT01, FFTW_ESTIMATE);
    im.scale = 1.0 / (4.0 * nx * ny);
  } else {
    im.cbuf = fftw_alloc_complex(static_cast<std::size_t>(ny) * (nx / 2 + 1));
    if (!im.cbuf) throw std::bad_alloc();
    for (int p = 0; p < nx; ++p)
      im.lx[p] = (2.0 - 2.0 * std::cos(2.0 * M_PI * p / nx)) * ihx2;
    for (int q = 0; q < ny; ++q)
      im.ly[q] = (2.0 - 2.0 * std::cos(2.0 * M_PI * q / ny)) * ihy2;
    im.fwd = fftw_plan_dft_r2c_2d(ny, nx, im.buf, im.cbuf, FFTW_ESTIMATE);
    im.bwd = fftw_plan_dft_c2r_2d(ny, nx, im.cbuf, im.buf, FFTW_ESTIMATE);
    im.scale = 1.0 / (static_cast<double>(nx) * ny);
  }
  if (!im.fwd || !im.bwd) throw std::runtime_error("poisson: fftw plan failed");
}

FastPoisson::~FastPoisson() = default;

void FastPoisson::solve(const std::vector<double>& rhs, std::vector<double>& x) {
  Impl& im = *impl_;
  const int nx = im.g.nx, ny = im.g.ny;
  const std::size_t N = static_cast<std::size_t>(nx) * ny;
  if (rhs.size() != N)
    throw std::invalid_argument("poisson: rhs size mismatch");
  for (std::size_t k = 0; k < N; ++k) im.buf[k] = rhs[k];
  fftw_execute(im.fwd);
  if (im.g.bc == Bc::neumann) {
    for (int q = 0; q < ny; ++q)
      for (int p = 0; p < nx; ++p) {
        const std::size_t k = static_cast<std::size_t>(q) * nx + p;
        const double d = im.lx[p] + im.ly[q];
        im.buf[k] = (d > 0.0) ? im.buf[k] / d : 0.0;
      }
  } else {
    const int nxh = nx / 2 + 1;
    for (int q = 0; q < ny; ++q)
      for (int p = 0; p < nxh; ++p) {
        const std::size_t k = static_cast<std::size_t>(q) * nxh + p;
        const double d = im.lx[p] + im.ly[q];
        if (d > 0.0) {
          im.cbuf[k][0] /= d;
          im.cbuf[k][1] /= d;
        } else {
          im.cbuf[k][0] = 0.0;
          im.cbuf[k][1] = 0.0;
        }
      }
  }
  fftw_execute(im.bwd);
  x.resize(N);
  for (std::size_t k = 0; k < N; ++k) x[k] = im.buf[k] * im.scale;
}

}  // namespace vps
