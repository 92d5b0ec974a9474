#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "hctn/autograd.hpp"
#include "hctn/qos_data.hpp"
#include "hctn/tensor.hpp"

namespace hctn {

struct GdiColumns {
  std::vector<double> users;     // n values; 0 for entities with no profile
  std::vector<double> services;  // m values
};

/// Greysheep Discrepancy Index of every user and service at one time step:
/// the profile's mean absolute deviation from its own mean plus the
/// counterpart's trimmed mean, weighted by the counterpart's inverted
/// min-max-normalized standard deviation.
GdiColumns gdi(const SparseQoSTensor& tensor, std::size_t t);

struct GreysheepReport {
  std::size_t users = 0, services = 0;
  double c1 = 1.0, c2 = 1.0;
  Tensor gdi_users;               // n x window
  Tensor gdi_services;            // m x window
  std::vector<Tensor> indicator;  // window of (n+m) x 1 binary columns
  std::vector<double> mu_user, sigma_user, mu_service, sigma_service;  // per step

  std::size_t labeled_users() const;
  std::size_t labeled_services() const;
};

/// Labels entities whose GDI exceeds the population mean by more than
/// c * std (strict), per step, over [target_time - window, target_time).
/// Population statistics come from the entities active at that step.
GreysheepReport detect_greysheep(const SparseQoSTensor& tensor, std::size_t target_time,
                                 std::size_t window, double c1, double c2);

/// The 14 profile statistics in fixed order: min, max, mean, median, std,
/// skewness, kurtosis, IQR, mean abs deviation, median abs deviation, RMS,
/// absolute energy, entropy, peak-to-peak. Empty profiles map to zeros.
std::array<double, 14> local_stats(std::span<const double> profile);

/// Per-step (n+m) x 14 matrices of profile statistics for the window.
std::vector<Tensor> build_local_features(const SparseQoSTensor& tensor, std::size_t target_time,
                                         std::size_t window);

/// Indicator-gated feature injection: zeroes the rows whose indicator
/// entry is 0. The indicator column is data; gradients flow through
/// `features` only.
NodePtr inject_rows(const NodePtr& indicator_col, const NodePtr& features);

/// Complement indicator (1 - G) as a plain tensor op.
Tensor complement_indicator(const Tensor& indicator_col);

}  // namespace hctn
