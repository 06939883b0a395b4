#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace maxent_hjb {

/// Base class of every error raised by the library.
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

/// The requested operation has no closed form for the model's family.
class UnsupportedFamily : public Error {
 public:
  using Error::Error;
};

/// A simulated state became non-finite (or left the divergence bound).
class DivergedTrajectory : public Error {
 public:
  DivergedTrajectory(const std::string& what, std::size_t step)
      : Error(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class NotHurwitz : public Error {
 public:
  NotHurwitz(const std::string& what, double abscissa)
      : Error(what), abscissa_(abscissa) {}
  double spectral_abscissa() const { return abscissa_; }

 private:
  double abscissa_;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

class RankDeficient : public Error {
 public:
  RankDeficient(const std::string& what, long rank, long needed)
      : Error(what), rank_(rank), needed_(needed) {}
  long rank() const { return rank_; }
  long needed() const { return needed_; }

 private:
  long rank_;
  long needed_;
};

class RankStall : public Error {
 public:
  using Error::Error;
};

class AllCharacteristicsBlewUp : public Error {
 public:
  using Error::Error;
};

class InfeasibleTransform : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace maxent_hjb
