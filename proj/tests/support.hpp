#pragma once

#include <random>
#include <string>
#include <vector>

#include "msfax/core.hpp"
#include "msfax/log.hpp"
#include "oracles.hpp"

namespace testing {

inline msfax::MsfaParameters random_parameters(int p, int k, const std::vector<int>& j, std::mt19937_64& rng) {
  msfax::MsfaParameters params;
  params.phi = msfax::LoadingsMatrix(oracle::random_matrix(p, k, rng));
  for (int js : j) {
    params.lambdas.emplace_back(oracle::random_matrix(p, js, rng));
    params.psi.push_back(oracle::random_uniform(p, 0.2, 1.0, rng));
  }
  return params;
}

// Collects warnings for the lifetime of the object.
struct WarningCapture {
  std::vector<std::string> messages;
  WarningCapture() {
    msfax::set_warning_handler([this](const std::string& m) { messages.push_back(m); });
  }
  ~WarningCapture() { msfax::set_warning_handler({}); }
  WarningCapture(const WarningCapture&) = delete;
  WarningCapture& operator=(const WarningCapture&) = delete;
};

}  // namespace testing
