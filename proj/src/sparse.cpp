#include "defreg/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "defreg/common.hpp"

namespace defreg {

CsrMatrix CsrMatrix::from_triplets(int rows, int cols, std::vector<Triplet> triplets) {
  for (const auto& t : triplets)
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
      throw std::out_of_range("CsrMatrix::from_triplets: index out of range");
  std::stable_sort(triplets.begin(), triplets.end(),
                   [](const Triplet& a, const Triplet& b) { return a.row < b.row || (a.row == b.row && a.col < b.col); });
  CsrMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.row_ptr.assign(rows + 1, 0);
  for (std::size_t i = 0; i < triplets.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < triplets.size() && triplets[j].row == triplets[i].row && triplets[j].col == triplets[i].col)
      sum += triplets[j++].value;
    m.col.push_back(triplets[i].col);
    m.val.push_back(sum);
    ++m.row_ptr[triplets[i].row + 1];
    i = j;
  }
  for (int r = 0; r < rows; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
  return m;
}

double CsrMatrix::coeff(int r, int c) const {
  const auto b = col.begin() + row_ptr[r], e = col.begin() + row_ptr[r + 1];
  const auto it = std::lower_bound(b, e, c);
  return it != e && *it == c ? val[it - col.begin()] : 0.0;
}

std::vector<double> CsrMatrix::diagonal() const {
  std::vector<double> d(std::min(rows, cols));
  for (int r = 0; r < static_cast<int>(d.size()); ++r) d[r] = coeff(r, r);
  return d;
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  if (static_cast<int>(x.size()) != cols || static_cast<int>(y.size()) != rows)
    throw std::invalid_argument("CsrMatrix::multiply: size mismatch");
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) {
    double s = 0.0;
    for (int p = row_ptr[r]; p < row_ptr[r + 1]; ++p) s += val[p] * x[col[p]];
    y[r] = s;
  }
}

std::vector<double> CsrMatrix::multiply(std::span<const double> x) const {
  std::vector<double> y(rows);
  multiply(x, y);
  return y;
}

CsrMatrix add(const CsrMatrix& a, const CsrMatrix& b) {
  if (a.rows != b.rows || a.cols != b.cols) throw std::invalid_argument("add: shape mismatch");
  CsrMatrix m;
  m.rows = a.rows;
  m.cols = a.cols;
  m.row_ptr.assign(a.rows + 1, 0);
  m.col.reserve(a.nonzeros() + b.nonzeros());
  m.val.reserve(a.nonzeros() + b.nonzeros());
  for (int r = 0; r < a.rows; ++r) {
    int p = a.row_ptr[r], q = b.row_ptr[r];
    const int pe = a.row_ptr[r + 1], qe = b.row_ptr[r + 1];
    while (p < pe || q < qe) {
      if (q >= qe || (p < pe && a.col[p] < b.col[q])) {
        m.col.push_back(a.col[p]);
        m.val.push_back(a.val[p++]);
      } else if (p >= pe || b.col[q] < a.col[p]) {
        m.col.push_back(b.col[q]);
        m.val.push_back(b.val[q++]);
      } else {
        m.col.push_back(a.col[p]);
        m.val.push_back(a.val[p++] + b.val[q++]);
      }
    }
    m.row_ptr[r + 1] = static_cast<int>(m.col.size());
  }
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

CgResult pcg(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0, const CgOptions& opt) {
  const int n = a.rows;
  if (a.cols != n || static_cast<int>(b.size()) != n || (!x0.empty() && static_cast<int>(x0.size()) != n))
    throw std::invalid_argument("pcg: size mismatch");
  const auto diag = a.diagonal();
  std::vector<double> inv(n);
  for (int i = 0; i < n; ++i) {
    if (!(diag[i] > 0.0)) throw SolverError("pcg: non-positive diagonal at row " + std::to_string(i));
    inv[i] = 1.0 / diag[i];
  }
  CgResult res;
  res.x.assign(n, 0.0);
  if (!x0.empty()) std::copy(x0.begin(), x0.end(), res.x.begin());
  const double bnorm = std::sqrt(dot(b, b));
  if (bnorm == 0.0) {
    std::fill(res.x.begin(), res.x.end(), 0.0);
    return res;
  }
  std::vector<double> r(n), z(n), p(n), q(n);
  a.multiply(res.x, q);
  for (int i = 0; i < n; ++i) r[i] = b[i] - q[i];
  double rnorm = std::sqrt(dot(r, r));
  res.relative_residual = rnorm / bnorm;
  if (res.relative_residual <= opt.tol) return res;
  for (int i = 0; i < n; ++i) z[i] = inv[i] * r[i];
  p = z;
  double rz = dot(r, z);
  for (int it = 1; it <= opt.max_iter; ++it) {
    a.multiply(p, q);
    const double pq = dot(p, q);
    if (!(pq > 0.0)) throw SolverError("pcg: matrix is not positive definite (singular system)");
    const double alpha = rz / pq;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      res.x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
      z[i] = inv[i] * r[i];
    }
    rnorm = std::sqrt(dot(r, r));
    res.iterations = it;
    res.relative_residual = rnorm / bnorm;
    if (res.relative_residual <= opt.tol) return res;
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw SolverError("pcg: no convergence in " + std::to_string(opt.max_iter) + " iterations (relative residual " +
                    std::to_string(res.relative_residual) + ")");
}

}  // namespace defreg
