#include "ode.hpp"

#include <boost/numeric/odeint.hpp>

namespace diffinv::detail {

namespace odeint = boost::numeric::odeint;
using Dopri = odeint::runge_kutta_dopri5<State>;
using Dense = odeint::result_of::make_dense_output<Dopri>::type;

std::vector<State> integrate_at(const OdeRhs& rhs, State y0, double t0, std::span<const double> times,
                                double abs_tol, double rel_tol) {
  std::vector<State> out;
  if (times.empty()) return out;
  std::vector<double> ts{t0};
  ts.insert(ts.end(), times.begin(), times.end());
  double dt = (ts.back() >= t0 ? 1.0 : -1.0) * 1e-3;
  auto system = [&](const State& y, State& dydt, double t) { rhs(y, dydt, t); };
  std::size_t k = 0;
  odeint::integrate_times(odeint::make_dense_output(abs_tol, rel_tol, Dopri()), system, y0, ts.begin(), ts.end(),
                          dt, [&](const State& y, double) {
                            if (k++ > 0) out.push_back(y);
                          });
  return out;
}

struct DenseFlow::Impl {
  OdeRhs rhs;
  Dense stepper;
  Impl(OdeRhs f, double abs_tol, double rel_tol) : rhs(std::move(f)), stepper(odeint::make_dense_output(abs_tol, rel_tol, Dopri())) {}
};

DenseFlow::DenseFlow(OdeRhs rhs, State y0, double t0, double dt0, double abs_tol, double rel_tol)
    : impl_(std::make_unique<Impl>(std::move(rhs), abs_tol, rel_tol)) {
  impl_->stepper.initialize(y0, t0, dt0);
}

DenseFlow::~DenseFlow() = default;

std::pair<double, double> DenseFlow::step() {
  auto& f = impl_->rhs;
  return impl_->stepper.do_step([&f](const State& y, State& dydt, double t) { f(y, dydt, t); });
}

State DenseFlow::state_at(double t) const {
  State y(impl_->stepper.current_state().size());
  impl_->stepper.calc_state(t, y);
  return y;
}

const State& DenseFlow::current() const { return impl_->stepper.current_state(); }

double DenseFlow::time() const { return impl_->stepper.current_time(); }

}  // namespace diffinv::detail
