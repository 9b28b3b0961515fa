#pragma once

#include <span>
#include <vector>

namespace defreg {

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

// Compressed sparse rows with sorted column indices.
struct CsrMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> row_ptr{0};
  std::vector<int> col;
  std::vector<double> val;

  // Duplicates are summed in input order, so the result does not depend on
  // how the triplets were produced as long as their order is fixed.
  static CsrMatrix from_triplets(int rows, int cols, std::vector<Triplet> triplets);

  std::size_t nonzeros() const { return val.size(); }
  double coeff(int r, int c) const;
  std::vector<double> diagonal() const;

  // y = A x, parallel over rows.
  void multiply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> multiply(std::span<const double> x) const;
};

// Entrywise sum of two matrices of equal shape.
CsrMatrix add(const CsrMatrix& a, const CsrMatrix& b);

double dot(std::span<const double> a, std::span<const double> b);
double norm_inf(std::span<const double> a);

struct CgOptions {
  double tol = 1e-8;   // on ||b - A x|| / ||b||
  int max_iter = 20000;
};

struct CgResult {
  std::vector<double> x;
  int iterations = 0;
  double relative_residual = 0.0;
};

// Jacobi-preconditioned conjugate gradients for SPD systems. `x0` may be
// empty (zero start). Throws SolverError on a non-positive diagonal,
// breakdown, or when max_iter is reached above tolerance.
CgResult pcg(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0, const CgOptions& opt);

}  // namespace defreg
