#pragma once

#include <stdexcept>
#include <string>

namespace fourfield {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// (family, degree, dim) outside the supported element menu.
struct UnsupportedElementError : Error {
  using Error::Error;
};

/// Operation incompatible with an element's conformity or a value's shape.
struct ContractError : Error {
  using Error::Error;
};

/// Degenerate cell geometry (vanishing Jacobian determinant).
struct GeometryError : Error {
  using Error::Error;
};

/// Invalid configuration (untagged boundary entity, malformed name, bad flag).
struct ConfigError : Error {
  using Error::Error;
};

/// State outside the constitutive domain, det(I+K) <= 0 at a quadrature point.
struct StateDomainError : Error {
  using Error::Error;
};

/// Direct solver detected a singular (or numerically singular) system.
struct SingularMatrixError : Error {
  using Error::Error;
};

} // namespace fourfield
