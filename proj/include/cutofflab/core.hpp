#pragma once

#include <complex>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cutofflab {

using cplx = std::complex<double>;
using Index = Eigen::Index;
using index_t = std::int64_t;  // eigenmode index j, starting at 1

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double pi = 3.14159265358979323846;

enum class errc {
  invalid_parameters,
  model_mismatch,
  empty_space,
  unresolved_term,
  aperiodic_family,
  band_too_small,
  non_hermitian,
  refinement_limit,
  support_too_close,
  oracle_self_check,
  quadrature_nonconvergence,
  ill_conditioned,
  tail_unreachable,
  unsupported,
  insufficient_window,
  truncation_bias,
  config_invalid,
};

inline const char* to_string(errc code) {
  switch (code) {
    case errc::invalid_parameters: return "invalid-parameters";
    case errc::model_mismatch: return "model-mismatch";
    case errc::empty_space: return "empty-space";
    case errc::unresolved_term: return "unresolved-term";
    case errc::aperiodic_family: return "aperiodic-family";
    case errc::band_too_small: return "band-too-small";
    case errc::non_hermitian: return "non-hermitian";
    case errc::refinement_limit: return "refinement-limit-exceeded";
    case errc::support_too_close: return "support-too-close-to-cutoff";
    case errc::oracle_self_check: return "oracle-self-check-failed";
    case errc::quadrature_nonconvergence: return "quadrature-non-convergence";
    case errc::ill_conditioned: return "ill-conditioned";
    case errc::tail_unreachable: return "tail-bound-unreachable";
    case errc::unsupported: return "unsupported";
    case errc::insufficient_window: return "insufficient-window";
    case errc::truncation_bias: return "truncation-bias";
    case errc::config_invalid: return "config-invalid";
  }
  return "unknown";
}

/// Six-digit text for a double in messages.
inline std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

/// Exception carrying one of the library's error kinds.
class error : public std::runtime_error {
 public:
  error(errc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code), detail_(detail) {}

  errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  errc code_;
  std::string detail_;
};

/// Runs fn(), prefixing any library error with the sweep point it came from.
template <typename Fn>
decltype(auto) at_point(const std::string& where, Fn&& fn) {
  try {
    return fn();
  } catch (const error& e) {
    throw error(e.code(), where + ": " + e.detail());
  }
}

}  // namespace cutofflab
