#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <vector>

namespace phaseiso {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidSpace : public Error {
 public:
  using Error::Error;
};

/// The oracle violates an identity that every map of the form eps*T satisfies.
/// `witness` holds the offending domain points (a pair, a triple, or a single point).
class NotDecomposable : public Error {
 public:
  NotDecomposable(const std::string& what, std::vector<Eigen::VectorXd> witness)
      : Error(what), witness_(std::move(witness)) {}
  const std::vector<Eigen::VectorXd>& witness() const { return witness_; }

 private:
  std::vector<Eigen::VectorXd> witness_;
};

/// A point on a claimed line maps off the image line.
class CollinearityViolation : public NotDecomposable {
 public:
  using NotDecomposable::NotDecomposable;
};

/// Images of the probe set span at most two dimensions.
class RangeDegenerate : public NotDecomposable {
 public:
  using NotDecomposable::NotDecomposable;
};

/// The requested route cannot run on this input (space kind, dimension, declaration).
class RouteError : public Error {
 public:
  using Error::Error;
};

class RouteUnsupported : public RouteError {
 public:
  using RouteError::RouteError;
};

/// Table oracle was asked for a point it does not store.
class MissingSample : public RouteError {
 public:
  MissingSample(const std::string& what, std::vector<Eigen::VectorXd> missing)
      : RouteError(what), missing_(std::move(missing)) {}
  const std::vector<Eigen::VectorXd>& missing() const { return missing_; }

 private:
  std::vector<Eigen::VectorXd> missing_;
};

class NoStabilization : public RouteError {
 public:
  using RouteError::RouteError;
};

class SmoothnessFailure : public RouteError {
 public:
  SmoothnessFailure(const std::string& what, double t) : RouteError(what), t_(t) {}
  double t() const { return t_; }

 private:
  double t_;
};

/// The functional is not a w*-exposed point of the dual ball.
class NotExposed : public Error {
 public:
  using Error::Error;
};

}  // namespace phaseiso
