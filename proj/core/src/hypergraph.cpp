#include "hctn/hypergraph.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "hctn/errors.hpp"
#include "hctn/parallel.hpp"

namespace hctn {

Tensor normalize_fig(const Tensor& adjacency) {
  const std::size_t n = adjacency.rows();
  if (adjacency.cols() != n) throw ShapeError("normalize_fig: adjacency must be square");
  std::vector<double> inv_sqrt_deg(n);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 1.0;  // self-loop
    for (std::size_t j = 0; j < n; ++j) deg += adjacency.at(i, j);
    inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);
  }
  Tensor out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double a = adjacency.at(i, j) + (i == j ? 1.0 : 0.0);
      if (a != 0.0) out.at(i, j) = a * inv_sqrt_deg[i] * inv_sqrt_deg[j];
    }
  }
  return out;
}

std::pair<Tensor, Tensor> normalize_second_order(const Tensor& incidence,
                                                 const Tensor& user_adjacency,
                                                 const Tensor& service_adjacency) {
  const std::size_t n = incidence.rows(), m = incidence.cols();
  if (user_adjacency.rows() != n || user_adjacency.cols() != n ||
      service_adjacency.rows() != m || service_adjacency.cols() != m) {
    throw ShapeError("normalize_second_order: inconsistent shapes");
  }
  std::vector<double> du(n), ds(m);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < n; ++j) d += user_adjacency.at(i, j);
    du[i] = d > 0.0 ? d : 1.0;
  }
  for (std::size_t i = 0; i < m; ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < m; ++j) d += service_adjacency.at(i, j);
    ds[i] = d > 0.0 ? d : 1.0;
  }

  // B = H . D_s^{-1} . H^T, then A_u-hat = D_u^{-1/2} B D_u^{-1/2}
  Tensor user_norm(n, n);
  parallel_for(n, [&](std::size_t i) {
    for (std::size_t k = 0; k < n; ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        if (incidence.at(i, j) != 0.0 && incidence.at(k, j) != 0.0) acc += 1.0 / ds[j];
      }
      user_norm.at(i, k) = acc / std::sqrt(du[i] * du[k]);
    }
  });

  Tensor service_norm(m, m);
  parallel_for(m, [&](std::size_t j) {
    for (std::size_t k = 0; k < m; ++k) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (incidence.at(i, j) != 0.0 && incidence.at(i, k) != 0.0) acc += 1.0 / du[i];
      }
      service_norm.at(j, k) = acc / std::sqrt(ds[j] * ds[k]);
    }
  });
  return {std::move(user_norm), std::move(service_norm)};
}

HypergraphSnapshot build_snapshot(const SparseQoSTensor& tensor, std::size_t t) {
  const std::size_t n = tensor.users(), m = tensor.services();
  const TimeSlice& slice = tensor.slice(t);

  HypergraphSnapshot snap;
  snap.t = t;
  snap.users = n;
  snap.services = m;
  snap.incidence = Tensor(n, m);
  for (const auto& r : slice.all()) snap.incidence.at(r.user, r.service) = 1.0;

  snap.adjacency = Tensor(n + m, n + m);
  for (const auto& r : slice.all()) {
    snap.adjacency.at(r.user, n + r.service) = 1.0;
    snap.adjacency.at(n + r.service, r.user) = 1.0;
  }

  // SUIG: users sharing at least one service; SSIG symmetric. sign() of the
  // incidence Gram matrices with zeroed diagonals.
  snap.user_adjacency = Tensor(n, n);
  parallel_for(n, [&](std::size_t i) {
    const auto row_i = slice.user_row(i);
    if (row_i.empty()) return;
    for (std::size_t k = i + 1; k < n; ++k) {
      bool shared = false;
      for (const auto& r : slice.user_row(k)) {
        if (snap.incidence.at(i, r.service) != 0.0) {
          shared = true;
          break;
        }
      }
      if (shared) {
        snap.user_adjacency.at(i, k) = 1.0;
        snap.user_adjacency.at(k, i) = 1.0;
      }
    }
  });

  snap.service_adjacency = Tensor(m, m);
  std::vector<std::vector<std::uint32_t>> service_users(m);
  for (std::size_t s = 0; s < m; ++s) {
    for (std::uint32_t pos : slice.service_positions(s)) {
      service_users[s].push_back(slice.record(pos).user);
    }
  }
  parallel_for(m, [&](std::size_t j) {
    if (service_users[j].empty()) return;
    std::vector<bool> mark(n, false);
    for (std::uint32_t u : service_users[j]) mark[u] = true;
    for (std::size_t k = j + 1; k < m; ++k) {
      for (std::uint32_t u : service_users[k]) {
        if (mark[u]) {
          snap.service_adjacency.at(j, k) = 1.0;
          snap.service_adjacency.at(k, j) = 1.0;
          break;
        }
      }
    }
  });

  snap.adjacency_norm = normalize_fig(snap.adjacency);
  auto [un, sn] = normalize_second_order(snap.incidence, snap.user_adjacency,
                                         snap.service_adjacency);
  snap.user_norm = std::move(un);
  snap.service_norm = std::move(sn);
  return snap;
}

namespace {
void dump_coo(const Tensor& mat, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open '" + path + "' for writing");
  for (std::size_t i = 0; i < mat.rows(); ++i) {
    for (std::size_t j = 0; j < mat.cols(); ++j) {
      if (mat.at(i, j) != 0.0) os << i << " " << j << "\n";
    }
  }
}
}  // namespace

void dump_snapshot(const HypergraphSnapshot& snap, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::string prefix = dir + "/t" + std::to_string(snap.t) + "_";
  dump_coo(snap.adjacency, prefix + "fig.txt");
  dump_coo(snap.incidence, prefix + "incidence.txt");
  dump_coo(snap.user_adjacency, prefix + "suig.txt");
  dump_coo(snap.service_adjacency, prefix + "ssig.txt");
}

}  // namespace hctn
