#include "dualmpc/program_builder.hpp"

#include <algorithm>
#include <numeric>

#include "dualmpc/errors.hpp"

namespace dualmpc {

using Eigen::VectorXd;

LinearExpr& LinearExpr::operator+=(const LinearExpr& other) {
  idx.insert(idx.end(), other.idx.begin(), other.idx.end());
  val.insert(val.end(), other.val.begin(), other.val.end());
  constant += other.constant;
  return *this;
}

LinearExpr& LinearExpr::operator*=(double s) {
  for (double& v : val) v *= s;
  constant *= s;
  return *this;
}

LinearExpr operator+(LinearExpr a, const LinearExpr& b) { return a += b; }

LinearExpr operator*(double s, LinearExpr a) { return a *= s; }

double LinearExpr::eval(const VectorXd& x) const {
  double out = constant;
  for (std::size_t k = 0; k < idx.size(); ++k) out += val[k] * x(idx[k]);
  return out;
}

void LinearExpr::compress() {
  if (idx.empty()) return;
  std::vector<std::size_t> order(idx.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return idx[a] < idx[b]; });
  std::vector<int> ni;
  std::vector<double> nv;
  for (std::size_t k : order) {
    if (!ni.empty() && ni.back() == idx[k])
      nv.back() += val[k];
    else {
      ni.push_back(idx[k]);
      nv.push_back(val[k]);
    }
  }
  idx.clear();
  val.clear();
  for (std::size_t k = 0; k < ni.size(); ++k)
    if (nv[k] != 0.0) {
      idx.push_back(ni[k]);
      val.push_back(nv[k]);
    }
}

int ProgramBuilder::add_variables(int count) {
  if (count < 0) throw ValidationError("ProgramBuilder: negative variable count");
  const int first = n_;
  n_ += count;
  cost_.resize(n_, 0.0);
  return first;
}

void ProgramBuilder::add_objective(int var, double coef) {
  if (var < 0 || var >= n_) throw ValidationError("ProgramBuilder: objective index out of range");
  cost_[var] += coef;
}

void ProgramBuilder::add_objective(const LinearExpr& e) {
  for (std::size_t k = 0; k < e.idx.size(); ++k) add_objective(e.idx[k], e.val[k]);
  cost_const_ += e.constant;
}

void ProgramBuilder::add_equality(const LinearExpr& e) { eq_.push_back(e); }

void ProgramBuilder::add_nonneg(const LinearExpr& e) { lin_.push_back(e); }

void ProgramBuilder::add_soc(const std::vector<LinearExpr>& rows) {
  if (rows.empty()) throw ValidationError("ProgramBuilder: empty second-order cone");
  if (rows.size() == 1) {
    lin_.push_back(rows[0]);
    return;
  }
  soc_.push_back(rows);
}

void ProgramBuilder::add_cone(const std::vector<LinearExpr>& rows, const ConeDescriptor& cone) {
  if (static_cast<int>(rows.size()) != cone.dim())
    throw ValidationError("ProgramBuilder: row count differs from cone dimension");
  int off = 0;
  for (const auto& b : cone.blocks()) {
    if (b.kind == ConeKind::NonnegativeOrthant)
      for (int i = 0; i < b.dim; ++i) lin_.push_back(rows[off + i]);
    else
      soc_.emplace_back(rows.begin() + off, rows.begin() + off + b.dim);
    off += b.dim;
  }
}

ConeProgram ProgramBuilder::build() const {
  ConeProgram prog;
  prog.c = Eigen::Map<const VectorXd>(cost_.data(), n_);

  auto check = [&](const LinearExpr& e) {
    for (int i : e.idx)
      if (i < 0 || i >= n_) throw ValidationError("ProgramBuilder: variable index out of range");
  };

  std::vector<Eigen::Triplet<double>> ta;
  prog.b.resize(static_cast<int>(eq_.size()));
  for (std::size_t r = 0; r < eq_.size(); ++r) {
    check(eq_[r]);
    for (std::size_t k = 0; k < eq_[r].idx.size(); ++k)
      ta.emplace_back(static_cast<int>(r), eq_[r].idx[k], eq_[r].val[k]);
    prog.b(r) = -eq_[r].constant;
  }
  prog.A.resize(static_cast<int>(eq_.size()), n_);
  prog.A.setFromTriplets(ta.begin(), ta.end());

  // slack s = expr = a'x + c  =>  G = -a, h = c.
  int m = static_cast<int>(lin_.size());
  for (const auto& blk : soc_) m += static_cast<int>(blk.size());
  std::vector<Eigen::Triplet<double>> tg;
  prog.h.resize(m);
  int row = 0;
  auto emit = [&](const LinearExpr& e) {
    check(e);
    for (std::size_t k = 0; k < e.idx.size(); ++k) tg.emplace_back(row, e.idx[k], -e.val[k]);
    prog.h(row) = e.constant;
    ++row;
  };
  for (const auto& e : lin_) emit(e);
  for (const auto& blk : soc_)
    for (const auto& e : blk) emit(e);
  prog.G.resize(m, n_);
  prog.G.setFromTriplets(tg.begin(), tg.end());

  prog.cones.nonneg = static_cast<int>(lin_.size());
  for (const auto& blk : soc_) prog.cones.soc.push_back(static_cast<int>(blk.size()));
  return prog;
}

}  // namespace dualmpc
