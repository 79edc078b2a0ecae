#pragma once

#include <memory>
#include <vector>

#include "vps/grid.hpp"

namespace vps {

// Direct solver for -laplacian(psi) = rhs on the cell-centered 5-point
// stencil. The neumann stencil's mirror ghosts are exactly the even symmetry
// of the DCT-II basis and the periodic stencil is diagonal in the real DFT
// basis, so one forward transform, a modewise division and one inverse
// transform solve the system to rounding. The constant null mode is zeroed,
// which projects the rhs onto the compatible subspace and makes the solution
// mean-free.
class FastPoisson {
 public:
  explicit FastPoisson(const Grid& g);
  ~FastPoisson();
  FastPoisson(const FastPoisson&) = delete;
  FastPoisson& operator=(const FastPoisson&) = delete;

  void solve(const std::vector<double>& rhs, std::vector<double>& x);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace vps
