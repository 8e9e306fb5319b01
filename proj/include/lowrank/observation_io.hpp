#pragma once

#include <string>

#include "lowrank/models.hpp"

namespace lowrank {

/// Thrown for unreadable, unwritable or malformed files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes an observation set as a header/payload pair:
///
///   <path>      text header, one `key=value` per line
///   <path>.bin  little-endian IEEE-754 float64 arrays, row-major,
///               concatenated in the order of the header's `array=` lines
///
/// Header keys: `format=lowrank-observations-v1`, `model`, `k`, `p`, `N`,
/// `noise_level`, `seed`, `data` (payload file name, relative to the header),
/// model scalars (`n`, `gamma`), and one `array=<name>,<rows>,<cols>` line per
/// stored array. Arrays by model:
///
///   all        y (1×N), theta_star (k×p, optional), noise (1×N, optional)
///   regression design (n×p), sigma_x (p×p)
///   var        design (n×p) holding Z_1…Z_n, sigma (p×p)
///   compressed observations (N×kp), row i is Xᵢ flattened row-major
///   identity   nothing extra
///
/// Loading restores a set whose apply/adjoint are bit-identical to the saved one.
void save_observation_set(const ObservationSet& obs, const std::string& path);
ObservationSet load_observation_set(const std::string& path);

}  // namespace lowrank
