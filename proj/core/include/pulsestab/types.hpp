#ifndef PULSESTAB_TYPES_HPP
#define PULSESTAB_TYPES_HPP

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace pulsestab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Domain error raised by the numerical routines (bad input, failed
/// convergence, violated structural assumption).  The message names the
/// offending quantity.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace pulsestab

#endif
