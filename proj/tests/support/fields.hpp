#pragma once

#include "pded/numerics.hpp"

#include <functional>

namespace pded::testing {

inline Dataset make_field(Eigen::Index nx, Eigen::Index nt, double x0, double x1, double t0, double t1,
                          const std::function<double(double, double)>& f) {
  Dataset d;
  d.x0 = x0;
  d.x1 = x1;
  d.t0 = t0;
  d.t1 = t1;
  d.name = "synthetic";
  d.u.resize(nx, nt);
  for (Eigen::Index j = 0; j < nt; ++j)
    for (Eigen::Index i = 0; i < nx; ++i) d.u(i, j) = f(d.x(i), d.t(j));
  return d;
}

}  // namespace pded::testing
