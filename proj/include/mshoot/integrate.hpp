#pragma once

// Adaptive Dormand-Prince 8(5,3) propagation of states, state-transition
// matrices and jet states, with section-crossing detection.

#include <functional>
#include <optional>
#include <vector>

#include "mshoot/jet.hpp"
#include "mshoot/linalg.hpp"
#include "mshoot/types.hpp"

namespace mshoot {

/// Autonomous vector field x' = f(x). Implementations must be reentrant.
class VectorField {
 public:
  virtual ~VectorField() = default;
  virtual int dimension() const = 0;
  virtual void eval(const double* x, double* dx) const = 0;
  /// Row-major n x n Jacobian of f. Required by integrate_with_stm.
  virtual bool has_jacobian() const { return false; }
  virtual void jacobian(const double* x, double* J) const;
  /// f applied to jet arguments; dx is resized to dimension() jets.
  virtual bool has_jet() const { return false; }
  virtual void eval_jet(const std::vector<Jet>& x, std::vector<Jet>& dx) const;
};

/// x' = p, p' = -x on (x, p); used as an analytic test field.
class HarmonicField final : public VectorField {
 public:
  int dimension() const override { return 2; }
  void eval(const double* x, double* dx) const override;
  bool has_jacobian() const override { return true; }
  void jacobian(const double* x, double* J) const override;
  bool has_jet() const override { return true; }
  void eval_jet(const std::vector<Jet>& x, std::vector<Jet>& dx) const override;
};

struct Tolerances {
  double abs = 1e-12;
  double rel = 1e-12;
  long max_steps = 2'000'000;
};

/// Failure inside the integrator (step-size underflow, singular field).
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double time, std::vector<double> state)
      : Error(what), time_(time), state_(std::move(state)) {}
  /// Last successfully reached time (signed) and its state.
  double time() const { return time_; }
  const std::vector<double>& state() const { return state_; }

 private:
  double time_;
  std::vector<double> state_;
};

class EventNotFound : public Error {
 public:
  using Error::Error;
};

enum class Direction { increasing, decreasing, either };

/// Section Sigma = {sigma = 0} crossed with the given sign of sigma' along
/// the (unnegated) field.
struct EventSpec {
  std::function<double(const double*)> sigma;
  std::function<double(const double*)> sigma_dot;
  Direction direction = Direction::either;
  std::function<bool(const double*)> extra_test;
  double max_time = 1e3;
  double tol = 1e-12;
  /// Crossings within this time of an on-section start are ignored.
  double exclusion = 1e-10;
};

struct EventRecord {
  double time = 0.0;  // signed
  std::vector<double> state;
  double sigma_residual = 0.0;
};

/// Phi_t(x0); negative t integrates backward.
std::vector<double> integrate_time(const VectorField& field, const std::vector<double>& x0, double t,
                                   const Tolerances& tol = {});
Vec4 integrate_time(const VectorField& field, const Vec4& x0, double t, const Tolerances& tol = {});

struct StmResult {
  std::vector<double> state;
  std::vector<double> stm;  // row-major n x n
};

StmResult integrate_with_stm(const VectorField& field, const std::vector<double>& x0, double t,
                             const Tolerances& tol = {});
/// 4-dimensional convenience form.
std::pair<Vec4, Mat4> integrate_with_stm(const VectorField& field, const Vec4& x0, double t,
                                         const Tolerances& tol = {});

/// First crossing of `event` after leaving x0 (backward in time if !forward).
EventRecord integrate_to_event(const VectorField& field, const std::vector<double>& x0, const EventSpec& event,
                               bool forward, const Tolerances& tol = {});

/// Transports jet initial data along the flow for time t.
std::vector<Jet> flow_jet(const VectorField& field, const std::vector<Jet>& j0, double t,
                          const Tolerances& tol = {});
JetState flow_jet(const VectorField& field, const JetState& j0, double t, const Tolerances& tol = {});

/// Optional statistics of the last integrate_* call made on this thread.
struct IntegratorStats {
  long steps = 0;
  long rejected = 0;
  long evaluations = 0;
};
IntegratorStats last_integrator_stats();

}  // namespace mshoot
