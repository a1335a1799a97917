/*
Copyright 2026 The semfuse Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/
#include "semfuse/varsolver.h"

#include <algorithm>
#include <cmath>

#include "padded_grid.h"
#include "semfuse/errors.h"

namespace semfuse {

using internal::PaddedGrid;

namespace {

struct PaddedState {
  std::vector<double> u, ubar, xi, nu;
};

// Intermediates of one update, kept for reverse-mode differentiation.
struct StepRecord {
  std::vector<double> ubar;     // input ubar^t (L)
  std::vector<double> wubar;    // W ubar^t (3L)
  std::vector<double> z;        // xi^t + sigma W ubar^t (3L)
  std::vector<double> xi_next;  // projected z (3L)
  std::vector<double> adj;      // W* xi^{t+1} (L)
  std::vector<double> nu_next;  // nu^{t+1} (1)
  std::vector<double> y;        // unclamped primal update (L)
};

class PaddedSolver {
 public:
  PaddedSolver(const Index3& dims, int num_labels)
      : grid_(dims), num_labels_(num_labels), size_(grid_.Size()) {}

  const PaddedGrid& grid() const { return grid_; }

  PaddedState InitialState(std::span<const double> init_u) const {
    const int L = num_labels_;
    PaddedState s;
    if (init_u.empty()) {
      s.u.assign(static_cast<std::size_t>(size_ * L), 0.0);
      for (int l = 0; l < L; ++l) {
        for (int r = 0; r < grid_.NumRows(); ++r) {
          std::fill_n(s.u.data() + l * size_ + grid_.RowStart(r), grid_.nx(), 1.0 / L);
        }
      }
    } else {
      s.u = grid_.Pad(init_u, L);
    }
    s.ubar = s.u;
    s.xi.assign(static_cast<std::size_t>(size_ * 3 * L), 0.0);
    s.nu.assign(static_cast<std::size_t>(size_), 0.0);
    return s;
  }

  void Step(std::span<const double> kernel, double sigma, double tau, const double* datacost,
            PaddedState* s, StepRecord* rec) const {
    const int L = num_labels_;
    const std::int64_t S = size_;
    const int nx = grid_.nx();
    if (rec) rec->ubar = s->ubar;

    // Lagrange multiplier ascent on the sum-to-one residual.
#pragma omp parallel for schedule(static)
    for (int r = 0; r < grid_.NumRows(); ++r) {
      const std::int64_t start = grid_.RowStart(r);
      for (std::int64_t c = start; c < start + nx; ++c) {
        double sum = 0.0;
        for (int l = 0; l < L; ++l) sum += s->ubar[l * S + c];
        s->nu[c] += sigma * (sum - 1.0);
      }
    }

    // Dual ascent and projection of each label's 3-vector onto the unit ball.
    wubar_.resize(static_cast<std::size_t>(S * 3 * L));
    internal::ConvForward(grid_, L, kernel, s->ubar.data(), wubar_.data());
    if (rec) rec->z.assign(static_cast<std::size_t>(S * 3 * L), 0.0);
#pragma omp parallel for schedule(static)
    for (int r = 0; r < grid_.NumRows(); ++r) {
      const std::int64_t start = grid_.RowStart(r);
      for (std::int64_t c = start; c < start + nx; ++c) {
        for (int l = 0; l < L; ++l) {
          double z[3];
          double norm2 = 0.0;
          for (int a = 0; a < 3; ++a) {
            const std::int64_t idx = (3 * l + a) * S + c;
            z[a] = s->xi[idx] + sigma * wubar_[idx];
            norm2 += z[a] * z[a];
          }
          const double scale = norm2 > 1.0 ? 1.0 / std::sqrt(norm2) : 1.0;
          for (int a = 0; a < 3; ++a) {
            const std::int64_t idx = (3 * l + a) * S + c;
            if (rec) rec->z[idx] = z[a];
            s->xi[idx] = z[a] * scale;
          }
        }
      }
    }

    // Primal descent, box projection, over-relaxation.
    adj_.resize(static_cast<std::size_t>(S * L));
    internal::ConvAdjoint(grid_, L, kernel, s->xi.data(), adj_.data());
    if (rec) rec->y.assign(static_cast<std::size_t>(S * L), 0.0);
#pragma omp parallel for schedule(static)
    for (int r = 0; r < grid_.NumRows(); ++r) {
      const std::int64_t start = grid_.RowStart(r);
      for (std::int64_t c = start; c < start + nx; ++c) {
        const double nu = s->nu[c];
        for (int l = 0; l < L; ++l) {
          const std::int64_t idx = l * S + c;
          const double u_old = s->u[idx];
          const double y = u_old - tau * (adj_[idx] + nu + datacost[idx]);
          const double u_new = std::clamp(y, 0.0, 1.0);
          if (rec) rec->y[idx] = y;
          s->u[idx] = u_new;
          s->ubar[idx] = 2.0 * u_new - u_old;
        }
      }
    }
    if (rec) {
      rec->wubar = wubar_;
      rec->xi_next = s->xi;
      rec->adj = adj_;
      rec->nu_next = s->nu;
    }
  }

 private:
  PaddedGrid grid_;
  int num_labels_;
  std::int64_t size_;
  mutable std::vector<double> wubar_;
  mutable std::vector<double> adj_;
};

void CheckLabelPlanes(const VoxelGridSpec& spec, int channels, std::size_t size,
                      const char* what) {
  Require(size == static_cast<std::size_t>(spec.NumVoxels() * channels),
          std::string(what) + ": size does not match grid and channel count");
}

LabelVolume SolveSingleLevel(const SemanticDatacost& datacost, const RegularizerW& w,
                             int iterations, std::span<const double> init_u) {
  const int L = datacost.NumLabels();
  PaddedSolver solver(datacost.spec.dims, L);
  const std::vector<double> d = solver.grid().Pad(datacost.cost, L);
  PaddedState state = solver.InitialState(init_u);
  for (int t = 0; t < iterations; ++t) {
    solver.Step(w.kernel, w.sigma(), w.tau(), d.data(), &state, nullptr);
  }
  LabelVolume out{datacost.spec, datacost.labels, {}};
  solver.grid().Unpad(state.u, L, &out.u);
  return out;
}

VoxelGridSpec CoarseSpec(const VoxelGridSpec& fine) {
  VoxelGridSpec coarse = fine;
  coarse.voxel_size = 2.0 * fine.voxel_size;
  for (int a = 0; a < 3; ++a) coarse.dims[a] = (fine.dims[a] + 1) / 2;
  return coarse;
}

// Coarse datacost sums the (up to 8) fine children of each coarse voxel.
SemanticDatacost DownsampleDatacost(const SemanticDatacost& fine) {
  SemanticDatacost coarse = SemanticDatacost::Zero(CoarseSpec(fine.spec), fine.labels);
  const std::int64_t n = fine.spec.NumVoxels();
  for (int l = 0; l < fine.NumLabels(); ++l) {
    for (std::int64_t x = 0; x < n; ++x) {
      const Index3 idx = fine.spec.Unravel(x);
      coarse.at(l, coarse.spec.Linear(idx[0] / 2, idx[1] / 2, idx[2] / 2)) += fine.at(l, x);
    }
  }
  return coarse;
}

std::vector<double> UpsampleLabels(const LabelVolume& coarse, const VoxelGridSpec& fine) {
  const int L = coarse.NumLabels();
  const std::int64_t n = fine.NumVoxels();
  std::vector<double> out(static_cast<std::size_t>(n * L), 0.0);
  const Index3& cd = coarse.spec.dims;
  for (std::int64_t x = 0; x < n; ++x) {
    const Index3 idx = fine.Unravel(x);
    int lo[3], hi[3];
    double frac[3];
    for (int a = 0; a < 3; ++a) {
      const double pos = std::clamp((idx[a] + 0.5) / 2.0 - 0.5, 0.0, cd[a] - 1.0);
      lo[a] = static_cast<int>(std::floor(pos));
      hi[a] = std::min(lo[a] + 1, cd[a] - 1);
      frac[a] = pos - lo[a];
    }
    for (int l = 0; l < L; ++l) {
      double acc = 0.0;
      for (int corner = 0; corner < 8; ++corner) {
        double weight = 1.0;
        int c[3];
        for (int a = 0; a < 3; ++a) {
          const bool upper = (corner >> a) & 1;
          c[a] = upper ? hi[a] : lo[a];
          weight *= upper ? frac[a] : 1.0 - frac[a];
        }
        acc += weight * coarse.at(l, coarse.spec.Linear(c[0], c[1], c[2]));
      }
      out[l * n + x] = acc;
    }
  }
  return out;
}

LabelVolume SolveLevels(const SemanticDatacost& datacost, const RegularizerW& w,
                        int iterations, int levels) {
  if (levels <= 1) return SolveSingleLevel(datacost, w, iterations, {});
  const LabelVolume coarse = SolveLevels(DownsampleDatacost(datacost), w, iterations, levels - 1);
  const std::vector<double> init = UpsampleLabels(coarse, datacost.spec);
  return SolveSingleLevel(datacost, w, iterations, init);
}

}  // namespace

double RegularizerW::sigma() const { return std::exp(log_sigma); }
double RegularizerW::tau() const { return std::exp(log_tau); }

RegularizerW RegularizerW::Zero(int num_labels, double sigma, double tau) {
  Require(num_labels >= 1, "regularizer: need at least one label");
  Require(sigma > 0.0 && tau > 0.0, "regularizer: step sizes must be positive");
  RegularizerW w;
  w.num_labels = num_labels;
  w.kernel.assign(static_cast<std::size_t>(3 * num_labels * num_labels * kTaps), 0.0);
  w.log_sigma = std::log(sigma);
  w.log_tau = std::log(tau);
  return w;
}

RegularizerW RegularizerW::ForwardDifference(int num_labels, double weight, double sigma,
                                             double tau) {
  RegularizerW w = Zero(num_labels, sigma, tau);
  const int center = Tap(0, 0, 0);
  const int forward[3] = {Tap(1, 0, 0), Tap(0, 1, 0), Tap(0, 0, 1)};
  for (int l = 0; l < num_labels; ++l) {
    for (int a = 0; a < 3; ++a) {
      w.K(3 * l + a, l, forward[a]) = weight;
      w.K(3 * l + a, l, center) = -weight;
    }
  }
  return w;
}

void RegularizerW::Flatten(std::vector<double>* out) const {
  out->insert(out->end(), kernel.begin(), kernel.end());
  out->push_back(log_sigma);
  out->push_back(log_tau);
}

void RegularizerW::Unflatten(std::span<const double> flat) {
  Require(flat.size() == NumParams(), "regularizer: flat parameter size mismatch");
  std::copy_n(flat.begin(), kernel.size(), kernel.begin());
  log_sigma = flat[kernel.size()];
  log_tau = flat[kernel.size() + 1];
}

void RegularizerW::Validate() const {
  Require(num_labels >= 1, "regularizer: need at least one label");
  Require(kernel.size() == static_cast<std::size_t>(3 * num_labels * num_labels * kTaps),
          "regularizer: kernel size mismatch");
  for (double k : kernel) Require(std::isfinite(k), "regularizer: non-finite kernel entry");
  Require(std::isfinite(log_sigma) && std::isfinite(log_tau),
          "regularizer: non-finite step size");
}

SolverState SolverState::Initial(const VoxelGridSpec& spec, int num_labels) {
  spec.Validate();
  Require(num_labels >= 1, "solver: need at least one label");
  const auto n = static_cast<std::size_t>(spec.NumVoxels());
  SolverState s;
  s.spec = spec;
  s.num_labels = num_labels;
  s.u.assign(n * num_labels, 1.0 / num_labels);
  s.ubar = s.u;
  s.xi.assign(n * 3 * num_labels, 0.0);
  s.nu.assign(n, 0.0);
  return s;
}

std::vector<double> ApplyW(const RegularizerW& w, const VoxelGridSpec& spec,
                           std::span<const double> u) {
  w.Validate();
  CheckLabelPlanes(spec, w.num_labels, u.size(), "ApplyW input");
  const PaddedGrid grid(spec.dims);
  const std::vector<double> in = grid.Pad(u, w.num_labels);
  std::vector<double> out(static_cast<std::size_t>(grid.Size() * w.OutChannels()));
  internal::ConvForward(grid, w.num_labels, w.kernel, in.data(), out.data());
  std::vector<double> result;
  grid.Unpad(out, w.OutChannels(), &result);
  return result;
}

std::vector<double> ApplyWAdjoint(const RegularizerW& w, const VoxelGridSpec& spec,
                                  std::span<const double> xi) {
  w.Validate();
  CheckLabelPlanes(spec, w.OutChannels(), xi.size(), "ApplyWAdjoint input");
  const PaddedGrid grid(spec.dims);
  const std::vector<double> in = grid.Pad(xi, w.OutChannels());
  std::vector<double> out(static_cast<std::size_t>(grid.Size() * w.num_labels));
  internal::ConvAdjoint(grid, w.num_labels, w.kernel, in.data(), out.data());
  std::vector<double> result;
  grid.Unpad(out, w.num_labels, &result);
  return result;
}

std::vector<double> WKernelGradient(const VoxelGridSpec& spec, int num_labels,
                                    std::span<const double> g, std::span<const double> u) {
  CheckLabelPlanes(spec, 3 * num_labels, g.size(), "kernel gradient g");
  CheckLabelPlanes(spec, num_labels, u.size(), "kernel gradient u");
  const PaddedGrid grid(spec.dims);
  const std::vector<double> gp = grid.Pad(g, 3 * num_labels);
  const std::vector<double> up = grid.Pad(u, num_labels);
  std::vector<double> grad(static_cast<std::size_t>(3 * num_labels * num_labels * RegularizerW::kTaps), 0.0);
  internal::ConvKernelGradient(grid, num_labels, gp.data(), up.data(), 1.0, grad);
  return grad;
}

void PdIteration(const SemanticDatacost& datacost, const RegularizerW& w, SolverState* state) {
  datacost.Validate();
  w.Validate();
  const int L = datacost.NumLabels();
  Require(state->spec == datacost.spec && state->num_labels == L && w.num_labels == L,
          "pd iteration: state, datacost and regularizer shapes differ");
  PaddedSolver solver(datacost.spec.dims, L);
  const PaddedGrid& grid = solver.grid();
  const std::vector<double> d = grid.Pad(datacost.cost, L);
  PaddedState s{grid.Pad(state->u, L), grid.Pad(state->ubar, L), grid.Pad(state->xi, 3 * L),
                grid.Pad(state->nu, 1)};
  solver.Step(w.kernel, w.sigma(), w.tau(), d.data(), &s, nullptr);
  grid.Unpad(s.u, L, &state->u);
  grid.Unpad(s.ubar, L, &state->ubar);
  grid.Unpad(s.xi, 3 * L, &state->xi);
  grid.Unpad(s.nu, 1, &state->nu);
  ++state->iteration;
}

LabelVolume Solve(const SemanticDatacost& datacost, const RegularizerW& w,
                  const SolverConfig& config) {
  datacost.Validate();
  w.Validate();
  Require(w.num_labels == datacost.NumLabels(), "solve: regularizer label count differs");
  Require(config.iterations >= 1 && config.levels >= 1, "solve: invalid config");
  for (double c : datacost.cost) Require(std::isfinite(c), "solve: datacost is not finite");
  return SolveLevels(datacost, w, config.iterations, config.levels);
}

double Energy(const LabelVolume& u, const SemanticDatacost& datacost, const RegularizerW& w) {
  Require(u.spec == datacost.spec && u.NumLabels() == datacost.NumLabels(),
          "energy: shape mismatch");
  const std::vector<double> wu = ApplyW(w, u.spec, u.u);
  const std::int64_t n = u.spec.NumVoxels();
  double energy = 0.0;
  for (std::int64_t x = 0; x < n; ++x) {
    for (int l = 0; l < u.NumLabels(); ++l) {
      double norm2 = 0.0;
      for (int a = 0; a < 3; ++a) norm2 += wu[(3 * l + a) * n + x] * wu[(3 * l + a) * n + x];
      energy += std::sqrt(norm2) + datacost.at(l, x) * u.at(l, x);
    }
  }
  return energy;
}

std::vector<std::int32_t> ExtractLabels(const LabelVolume& u) {
  const std::int64_t n = u.spec.NumVoxels();
  std::vector<std::int32_t> labels(static_cast<std::size_t>(n), 0);
  for (std::int64_t x = 0; x < n; ++x) {
    int best = 0;
    for (int l = 1; l < u.NumLabels(); ++l) {
      if (u.at(l, x) > u.at(best, x)) best = l;
    }
    labels[x] = best;
  }
  return labels;
}

struct UnrolledSolver::Impl {
  VoxelGridSpec spec;
  int num_labels;
  PaddedSolver solver;
  RegularizerW w;
  std::vector<double> datacost;  // padded
  std::vector<StepRecord> records;
};

UnrolledSolver::UnrolledSolver(const VoxelGridSpec& spec, int num_labels)
    : impl_(std::make_unique<Impl>(Impl{spec, num_labels, PaddedSolver(spec.dims, num_labels),
                                        RegularizerW::Zero(num_labels), {}, {}})) {
  spec.Validate();
}
UnrolledSolver::~UnrolledSolver() = default;
UnrolledSolver::UnrolledSolver(UnrolledSolver&&) noexcept = default;
UnrolledSolver& UnrolledSolver::operator=(UnrolledSolver&&) noexcept = default;

std::vector<double> UnrolledSolver::Forward(std::span<const double> datacost,
                                            const RegularizerW& w, int iterations) {
  Impl& m = *impl_;
  w.Validate();
  Require(w.num_labels == m.num_labels, "unrolled solver: regularizer label count differs");
  Require(iterations >= 0, "unrolled solver: negative iteration count");
  CheckLabelPlanes(m.spec, m.num_labels, datacost.size(), "unrolled solver datacost");
  m.w = w;
  const PaddedGrid& grid = m.solver.grid();
  m.datacost = grid.Pad(datacost, m.num_labels);
  PaddedState state = m.solver.InitialState({});
  m.records.assign(static_cast<std::size_t>(iterations), StepRecord{});
  for (int t = 0; t < iterations; ++t) {
    m.solver.Step(w.kernel, w.sigma(), w.tau(), m.datacost.data(), &state, &m.records[t]);
  }
  std::vector<double> u;
  grid.Unpad(state.u, m.num_labels, &u);
  return u;
}

SolverGradients UnrolledSolver::Backward(std::span<const double> grad_u) const {
  const Impl& m = *impl_;
  const int L = m.num_labels;
  CheckLabelPlanes(m.spec, L, grad_u.size(), "unrolled solver gradient");
  const PaddedGrid& grid = m.solver.grid();
  const std::int64_t S = grid.Size();
  const int nx = grid.nx();
  const int rows = grid.NumRows();
  const double sigma = m.w.sigma();
  const double tau = m.w.tau();

  std::vector<double> gu = grid.Pad(grad_u, L);  // adjoint of u^{t+1}
  std::vector<double> gub(static_cast<std::size_t>(S * L), 0.0);  // adjoint of ubar^{t+1}
  std::vector<double> gxi(static_cast<std::size_t>(S * 3 * L), 0.0);  // adjoint of xi^{t+1}
  std::vector<double> gnu(static_cast<std::size_t>(S), 0.0);  // adjoint of nu^{t+1}
  std::vector<double> gd(static_cast<std::size_t>(S * L), 0.0);
  std::vector<double> a_adj(static_cast<std::size_t>(S * L), 0.0);
  std::vector<double> tmp3(static_cast<std::size_t>(S * 3 * L), 0.0);
  std::vector<double> tmp1(static_cast<std::size_t>(S * L), 0.0);
  std::vector<double> row_tau(rows), row_sigma(rows);
  SolverGradients out;
  out.kernel.assign(m.w.kernel.size(), 0.0);
  double sigma_adj = 0.0;
  double tau_adj = 0.0;

  for (std::size_t t = m.records.size(); t-- > 0;) {
    const StepRecord& rec = m.records[t];

    // Through ubar^{t+1} = 2u^{t+1} - u^t and u^{t+1} = clamp(y).
#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r) {
      const std::int64_t start = grid.RowStart(r);
      double acc_tau = 0.0;
      for (std::int64_t c = start; c < start + nx; ++c) {
        double sum_y_adj = 0.0;
        for (int l = 0; l < L; ++l) {
          const std::int64_t idx = l * S + c;
          const double total = gu[idx] + 2.0 * gub[idx];
          const double y = rec.y[idx];
          const double y_adj = (y >= 0.0 && y <= 1.0) ? total : 0.0;
          gu[idx] = y_adj - gub[idx];
          acc_tau -= y_adj * (rec.adj[idx] + rec.nu_next[c] + m.datacost[idx]);
          a_adj[idx] = -tau * y_adj;
          gd[idx] -= tau * y_adj;
          sum_y_adj += y_adj;
        }
        gnu[c] -= tau * sum_y_adj;
      }
      row_tau[r] = acc_tau;
    }
    for (int r = 0; r < rows; ++r) tau_adj += row_tau[r];

    // Through adj = W* xi^{t+1}.
    internal::ConvForward(grid, L, m.w.kernel, a_adj.data(), tmp3.data());
    for (std::size_t i = 0; i < gxi.size(); ++i) gxi[i] += tmp3[i];
    internal::ConvKernelGradient(grid, L, rec.xi_next.data(), a_adj.data(), 1.0, out.kernel);

    // Through the ball projection xi^{t+1} = P(z); gxi becomes the adjoint of z.
#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r) {
      const std::int64_t start = grid.RowStart(r);
      for (std::int64_t c = start; c < start + nx; ++c) {
        for (int l = 0; l < L; ++l) {
          double z[3], g[3];
          double norm2 = 0.0;
          for (int a = 0; a < 3; ++a) {
            z[a] = rec.z[(3 * l + a) * S + c];
            g[a] = gxi[(3 * l + a) * S + c];
            norm2 += z[a] * z[a];
          }
          if (norm2 <= 1.0) continue;
          const double norm = std::sqrt(norm2);
          const double dot = (z[0] * g[0] + z[1] * g[1] + z[2] * g[2]) / norm2;
          for (int a = 0; a < 3; ++a) gxi[(3 * l + a) * S + c] = (g[a] - z[a] * dot) / norm;
        }
      }
    }

    // Through z = xi^t + sigma W ubar^t and nu^{t+1} = nu^t + sigma (sum ubar^t - 1).
    internal::ConvAdjoint(grid, L, m.w.kernel, gxi.data(), tmp1.data());
    internal::ConvKernelGradient(grid, L, gxi.data(), rec.ubar.data(), sigma, out.kernel);
#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r) {
      const std::int64_t start = grid.RowStart(r);
      double acc_sigma = 0.0;
      for (std::int64_t c = start; c < start + nx; ++c) {
        double sum_ubar = 0.0;
        for (int l = 0; l < L; ++l) {
          const std::int64_t idx = l * S + c;
          sum_ubar += rec.ubar[idx];
          gub[idx] = sigma * (tmp1[idx] + gnu[c]);
        }
        acc_sigma += gnu[c] * (sum_ubar - 1.0);
        for (int l = 0; l < 3 * L; ++l) {
          const std::int64_t idx = l * S + c;
          acc_sigma += gxi[idx] * rec.wubar[idx];
        }
      }
      row_sigma[r] = acc_sigma;
    }
    for (int r = 0; r < rows; ++r) sigma_adj += row_sigma[r];
  }

  grid.Unpad(gd, L, &out.datacost);
  out.log_sigma = sigma * sigma_adj;
  out.log_tau = tau * tau_adj;
  return out;
}

}  // namespace semfuse
