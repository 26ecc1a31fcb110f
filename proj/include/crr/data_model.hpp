#pragma once

// Study-level data types, the count -> log-rate transformation with the 0.5
// zero-event correction, and CSV ingestion (two schemas: raw counts or
// precomputed observations with a full within-study covariance).

#include <string>
#include <vector>

#include "crr/linalg.hpp"

namespace crr {

class CsvError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raw per-study event counts and person-years for both arms.
struct StudyCounts {
    double deaths_treated;
    double person_years_treated;
    double deaths_control;
    double person_years_control;
};

// Derived log event rates with known 2x2 within-study covariance.
struct StudyObservation {
    double eta_hat;  // log event rate, treated arm
    double xi_hat;   // log event rate, control arm
    Mat gamma;       // symmetric, nonnegative diagonal; diagonal for count data
};

struct Dataset {
    std::vector<StudyObservation> studies;

    int size() const { return static_cast<int>(studies.size()); }
    bool small_sample() const { return size() < 5; }
};

// Applies the 0.5 correction to any zero-count arm (the matching person-years
// also gain 0.5), then forms eta_hat = log(d_t/py_t), xi_hat = log(d_c/py_c)
// and gamma = diag(1/d_t, 1/d_c) from the corrected counts.
// Throws std::invalid_argument on nonpositive person-years or negative counts.
StudyObservation build_observation(const StudyCounts& counts);

// Loads either schema (detected from the header row):
//   counts:       deaths_treated,py_treated,deaths_control,py_control
//   observations: eta_obs,xi_obs,var_eta,cov_etaxi1,cov_etaxi2,var_xi
// Malformed content raises CsvError naming the row and column. A dataset with
// fewer than 2 studies is rejected; fewer than 5 only sets small_sample().
Dataset load_csv(const std::string& path);

// Validates Dataset-level invariants (n >= 2, gamma symmetry/PSD diagonal).
void validate_dataset(const Dataset& data);

}  // namespace crr
