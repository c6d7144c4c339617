#include <algorithm>
#include <atomic>

#include "qflow/bulk.hpp"
#include "qflow/parallel.hpp"

namespace qflow {

namespace {
std::atomic<int> g_threads{1};
} // namespace

void set_thread_count(int threads) {
  g_threads = std::max(1, threads);
}

int thread_count() { return g_threads; }

double min_margin(const QField& f) {
  Eigen::VectorXd m(f.size());
  parallel_for(f.size(), [&](std::ptrdiff_t b, std::ptrdiff_t e) {
    for (std::ptrdiff_t p = b; p < e; ++p) m[p] = rho_margin(f.at(p));
  });
  return f.size() > 0 ? m.minCoeff() : 1.0 / 3;
}

bool is_physical(const QField& f) { return min_margin(f) > 0; }

namespace {

BulkField allocate(const QField& f) {
  BulkField out;
  out.value.resize(f.size());
  out.gradient = QField(f.grid);
  out.nu.resize(3, f.size());
  out.margin.resize(f.size());
  return out;
}

void finish(BulkField& out, const QField& f) {
  out.integral = tree_sum({out.value.data(), std::size_t(out.value.size())}) * f.grid.cell_volume();
  out.min_margin = out.margin.minCoeff();
}

} // namespace

BulkField evaluate_psi(const QField& f, const Multipliers* warm) {
  if (warm != nullptr && warm->cols() != f.size()) throw DomainError("warm start size mismatch");
  BulkField out = allocate(f);
  parallel_for(f.size(), [&](std::ptrdiff_t b, std::ptrdiff_t e) {
    for (std::ptrdiff_t p = b; p < e; ++p) {
      const Vector3d start = warm != nullptr ? Vector3d(warm->col(p)) : Vector3d::Zero();
      const PsiEval v = psi_eval(f.at(p), warm != nullptr ? &start : nullptr);
      out.value[p] = v.value;
      out.gradient.set(p, v.gradient);
      out.nu.col(p) = v.nu;
      out.margin[p] = v.margin;
    }
  });
  finish(out, f);
  return out;
}

BulkField evaluate_envelope(const QField& f, double n, const Multipliers* warm) {
  if (warm != nullptr && warm->cols() != f.size()) throw DomainError("warm start size mismatch");
  BulkField out = allocate(f);
  out.prox = QField(f.grid);
  parallel_for(f.size(), [&](std::ptrdiff_t b, std::ptrdiff_t e) {
    for (std::ptrdiff_t p = b; p < e; ++p) {
      const Vector3d start = warm != nullptr ? Vector3d(warm->col(p)) : Vector3d::Zero();
      const QTensor q = f.at(p);
      const MoreauYosida m = moreau_yosida(q, n, warm != nullptr ? &start : nullptr);
      out.value[p] = m.value;
      out.gradient.set(p, m.grad);
      out.prox.set(p, m.prox);
      out.nu.col(p) = m.nu;
      out.margin[p] = rho_margin(q);
    }
  });
  finish(out, f);
  return out;
}

} // namespace qflow
