#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace ztnet {

// Base for every error raised by the library. Callers that only care about
// "something in the model was wrong" catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class IntegrityError : public Error {
 public:
  using Error::Error;
};

class PermissionDenied : public Error {
 public:
  using Error::Error;
};

inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
inline double lin_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_mw(double dbm) { return db_to_lin(dbm); }
inline double mw_to_dbm(double mw) { return lin_to_db(mw); }

namespace constants {
inline constexpr double kPlanck = 6.62607015e-34;  // J*s
inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kAseReferenceBandwidthGhz = 12.5;
inline constexpr double kGsnrCapDb = 60.0;
}  // namespace constants

}  // namespace ztnet
