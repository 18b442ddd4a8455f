#include "kgl/lattice.hpp"

#include <cmath>
#include <cstdlib>

#include "kgl/errors.hpp"

namespace kgl {

std::string to_string(Boundary b) {
  return b == Boundary::Dirichlet ? "dirichlet" : "periodic";
}

Boundary boundary_from_string(const std::string& s) {
  if (s == "dirichlet") return Boundary::Dirichlet;
  if (s == "periodic") return Boundary::Periodic;
  throw ConfigInvalid("unknown boundary rule: " + s);
}

LatticeGrid::LatticeGrid(int dim, int radius, Boundary boundary)
    : dim_(dim), radius_(radius), boundary_(boundary) {
  if (dim < 1 || dim > 4) throw ConfigInvalid("lattice dimension must be in [1,4]");
  if (radius < 1) throw ConfigInvalid("lattice radius must be >= 1");
  long long s = 1;
  for (int i = 0; i < dim; ++i) {
    s *= extent();
    if (s > 50'000'000) throw DimensionOverflow("lattice site count exceeds cap");
  }
  sites_ = static_cast<int>(s);

  neighbors_.resize(static_cast<size_t>(sites_) * 2 * dim_);
  parity_.resize(sites_);
  std::vector<int> c(dim_);
  for (int i = 0; i < sites_; ++i) {
    c = coords(i);
    int ps = 0;
    for (int k = 0; k < dim_; ++k) ps += c[k];
    parity_[i] = static_cast<int8_t>((std::abs(ps) % 2 == 0) ? 1 : -1);
    for (int k = 0; k < dim_; ++k) {
      for (int sgn = 0; sgn < 2; ++sgn) {
        std::vector<int> nb = c;
        nb[k] += sgn == 0 ? -1 : +1;
        int32_t idx;
        if (nb[k] > radius_ || nb[k] < -radius_) {
          if (boundary_ == Boundary::Periodic) {
            nb[k] = nb[k] > radius_ ? -radius_ : radius_;
            idx = static_cast<int32_t>(index(nb));
          } else {
            idx = -1;
          }
        } else {
          idx = static_cast<int32_t>(index(nb));
        }
        neighbors_[static_cast<size_t>(i) * 2 * dim_ + 2 * k + sgn] = idx;
      }
    }
  }
}

int LatticeGrid::index(const std::vector<int>& coords) const {
  int idx = 0;
  for (int k = 0; k < dim_; ++k) idx = idx * extent() + (coords[k] + radius_);
  return idx;
}

std::vector<int> LatticeGrid::coords(int index) const {
  std::vector<int> c(dim_);
  for (int k = dim_ - 1; k >= 0; --k) {
    c[k] = index % extent() - radius_;
    index /= extent();
  }
  return c;
}

bool LatticeGrid::on_outer_shell(int site) const {
  const std::vector<int> c = coords(site);
  for (int k = 0; k < dim_; ++k)
    if (c[k] == radius_ || c[k] == -radius_) return true;
  return false;
}

void laplacian_into(const LatticeGrid& g, const Eigen::VectorXd& f, Eigen::VectorXd& out) {
  const int nslots = 2 * g.dim();
  const auto& nbr = g.neighbors();
  out.resize(f.size());
  const double c = -2.0 * g.dim();
  for (int i = 0; i < f.size(); ++i) {
    double acc = c * f[i];
    const int32_t* row = nbr.data() + static_cast<size_t>(i) * nslots;
    for (int s = 0; s < nslots; ++s) {
      const int32_t j = row[s];
      if (j >= 0) acc += f[j];
    }
    out[i] = acc;
  }
}

void laplacian_into(const RealField& f, Eigen::VectorXd& out) {
  laplacian_into(f.grid, f.values, out);
}

RealField laplacian(const RealField& f) {
  RealField out(f.grid);
  laplacian_into(f.grid, f.values, out.values);
  return out;
}

Eigen::MatrixXd laplacian_matrix(const LatticeGrid& g) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(g.sites(), g.sites());
  const int nslots = 2 * g.dim();
  for (int i = 0; i < g.sites(); ++i) {
    m(i, i) = -2.0 * g.dim();
    for (int s = 0; s < nslots; ++s) {
      const int j = g.neighbor(i, s);
      if (j >= 0) m(i, j) += 1.0;
    }
  }
  return m;
}

std::pair<RealField, double> stagger(const RealField& f, double omega_tilde) {
  RealField out(f.grid);
  for (int i = 0; i < f.grid.sites(); ++i) out.values[i] = f.grid.parity(i) * f.values[i];
  return {std::move(out), -4.0 * f.grid.dim() - omega_tilde};
}

double l2_norm(const RealField& f) { return f.values.norm(); }

double boundary_shell_norm(const RealField& f) {
  double acc = 0.0;
  for (int i = 0; i < f.grid.sites(); ++i)
    if (f.grid.on_outer_shell(i)) acc += f.values[i] * f.values[i];
  return std::sqrt(acc);
}

}  // namespace kgl
