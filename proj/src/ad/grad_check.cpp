#include "dvae/ad/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dvae::ad {
namespace {

double evaluate(const LossBuilder& f, const ParameterStore& store) {
  Tape tape(&store);
  return f(tape).value().item();
}

}  // namespace

GradCheckReport grad_check(const LossBuilder& f, ParameterStore& store, double step, double tolerance) {
  if (!(step > 0.0)) throw std::invalid_argument("grad_check: step must be positive");
  GradCheckReport report;

  GradientSink sink = store.make_sink();
  {
    Tape tape(&store);
    Var loss = f(tape);
    if (!loss.value().all_finite()) report.non_finite = true;
    tape.backward(loss, sink);
  }

  for (std::size_t s = 0; s < store.size(); ++s) {
    Parameter& p = store[s];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double saved = p.value[i];
      p.value[i] = saved + step;
      const double up = evaluate(f, store);
      p.value[i] = saved - step;
      const double down = evaluate(f, store);
      p.value[i] = saved;

      GradCheckEntry e;
      e.parameter = p.id;
      e.index = i;
      e.analytic = sink[s][i];
      e.numeric = (up - down) / (2.0 * step);
      if (!std::isfinite(e.analytic) || !std::isfinite(e.numeric)) {
        report.non_finite = true;
        e.relative_error = std::numeric_limits<double>::infinity();
      } else {
        const double denom = std::max({std::abs(e.analytic), std::abs(e.numeric), kGradCheckFloor});
        e.relative_error = std::abs(e.analytic - e.numeric) / denom;
      }
      report.max_relative_error = std::max(report.max_relative_error, e.relative_error);
      report.entries.push_back(std::move(e));
    }
  }
  report.passed = !report.non_finite && report.max_relative_error < tolerance;
  return report;
}

}  // namespace dvae::ad
