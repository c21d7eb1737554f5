#pragma once
#include <string>
#include <vector>

#include "dipo/diffusion.hpp"

namespace dipo {

struct DiagCheck {
  std::string name;
  double measured = 0.0;
  double threshold = 0.0;
  bool less_than = true;  // pass iff measured < threshold (else >=)
  bool pass() const { return less_than ? measured < threshold : measured >= threshold; }
};

struct DiagReport {
  std::string suite;
  std::vector<DiagCheck> checks;
  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass()) return false;
    return true;
  }
};

// Finite-difference check of every parameter and input gradient of a random
// net against reverse mode; returns the max relative error.
double mlp_gradcheck_max_rel_err(MlpModel& m, Rng& rng, int batch = 3,
                                 double h = 1e-5);

// Suites (also the acceptance path for criteria 1-4):
DiagReport diag_gradcheck(uint64_t seed, int n_nets = 20);
DiagReport diag_ou(uint64_t seed, long n_samples = 100000);
DiagReport diag_sampler(uint64_t seed);
DiagReport diag_dsm(uint64_t seed);
DiagReport diag_theorem1(uint64_t seed, long n_samples = 100000);

// Train a noise predictor by DSM on a fixed dataset of (state, action) rows;
// shared by the dsm/multimodality diagnostics and tests.
MlpModel train_dsm_model(const Mat& states, const Mat& actions,
                         const NoiseSchedule& sch, const TimeEmbedConfig& te,
                         int hidden, int n_updates, int batch, double lr,
                         Rng& rng);

}  // namespace dipo
