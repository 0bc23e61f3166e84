#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace diffinv::detail {

using State = std::vector<double>;
using OdeRhs = std::function<void(const State& y, State& dydt, double t)>;

/// Adaptive Dormand-Prince integration from (t0, y0) reporting the state at
/// each time in `times` (monotone, starting on the same side of t0).
std::vector<State> integrate_at(const OdeRhs& rhs, State y0, double t0, std::span<const double> times,
                                double abs_tol, double rel_tol);

/// Step-by-step dense output. step() advances one adaptive step and returns
/// the covered interval; state_at() interpolates inside the last step.
class DenseFlow {
 public:
  DenseFlow(OdeRhs rhs, State y0, double t0, double dt0, double abs_tol, double rel_tol);
  ~DenseFlow();
  DenseFlow(const DenseFlow&) = delete;
  DenseFlow& operator=(const DenseFlow&) = delete;

  std::pair<double, double> step();
  State state_at(double t) const;
  const State& current() const;
  double time() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace diffinv::detail
