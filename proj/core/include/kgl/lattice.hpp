#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace kgl {

enum class Boundary { Dirichlet, Periodic };

std::string to_string(Boundary b);
Boundary boundary_from_string(const std::string& s);

// Truncated lattice {-N..N}^d with a fixed site enumeration (row-major, first
// coordinate slowest).  Off-grid neighbours are zero for Dirichlet and wrap
// for Periodic; the neighbour table stores -1 for Dirichlet ghosts.
class LatticeGrid {
 public:
  LatticeGrid() : LatticeGrid(1, 1, Boundary::Dirichlet) {}
  LatticeGrid(int dim, int radius, Boundary boundary = Boundary::Dirichlet);

  int dim() const { return dim_; }
  int radius() const { return radius_; }
  Boundary boundary() const { return boundary_; }
  int extent() const { return 2 * radius_ + 1; }
  int sites() const { return sites_; }

  int index(const std::vector<int>& coords) const;
  std::vector<int> coords(int index) const;

  // 2*dim entries per site: directions ordered (dim0-,dim0+,dim1-,...).
  const std::vector<int32_t>& neighbors() const { return neighbors_; }
  int neighbor(int site, int slot) const { return neighbors_[static_cast<size_t>(site) * 2 * dim_ + slot]; }

  // (-1)^{n_1+...+n_d} per site.
  double parity(int site) const { return parity_[site]; }

  bool on_outer_shell(int site) const;

  bool operator==(const LatticeGrid& o) const {
    return dim_ == o.dim_ && radius_ == o.radius_ && boundary_ == o.boundary_;
  }

 private:
  int dim_, radius_, sites_;
  Boundary boundary_;
  std::vector<int32_t> neighbors_;
  std::vector<int8_t> parity_;
};

struct RealField {
  RealField() = default;
  RealField(LatticeGrid g, Eigen::VectorXd v) : grid(std::move(g)), values(std::move(v)) {}
  explicit RealField(const LatticeGrid& g) : grid(g), values(Eigen::VectorXd::Zero(g.sites())) {}
  LatticeGrid grid;
  Eigen::VectorXd values;
};

// (Delta f)_n = sum_{|k-n|=1} f_k - 2d f_n, spectrum in [-4d, 0].
RealField laplacian(const RealField& f);
void laplacian_into(const LatticeGrid& g, const Eigen::VectorXd& f, Eigen::VectorXd& out);
void laplacian_into(const RealField& f, Eigen::VectorXd& out);
Eigen::MatrixXd laplacian_matrix(const LatticeGrid& g);

// Staggering transform: A_n = (-1)^{n_1+...+n_d} f_n, Omega = -4d - Omega_tilde.
std::pair<RealField, double> stagger(const RealField& f, double omega_tilde);

double l2_norm(const RealField& f);

// Norm of the values on the outermost coordinate shell, used as the
// truncation-quality diagnostic for decaying profiles.
double boundary_shell_norm(const RealField& f);

}  // namespace kgl
