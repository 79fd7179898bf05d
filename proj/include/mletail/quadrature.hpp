#pragma once
// One-dimensional adaptive quadrature.
//
// Two entry points:
//   integrate(f, a, b, ...)        signed adaptive Simpson on a finite interval
//   log_integral_exp(g, hints)     log of the integral of exp(g) over an
//                                  effective support discovered from hints
//
// log_integral_exp is the workhorse for likelihood-ratio integrals: the
// integrand may concentrate near several widely separated centers (the null
// parameter, the alternative, a saddle between them) and may have polynomial
// tails.  The routine locates the peak, expands outward until the integrand
// has dropped `drop` nats below it (doubling steps, so heavy tails cost a
// logarithmic number of probes), and integrates exp(g - gmax) adaptively.
// If the integrand is still near its peak when the expansion cap is reached
// and keeps growing, +inf is returned: the divergence signal callers use to
// detect the edge of a Kramer-type domain.

#include <functional>
#include <vector>

#include "mletail/phi.hpp"

namespace mletail {

double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-10, double abs_tol = 1e-13);

struct LogIntegralHints {
  std::vector<double> centers;  // candidate concentration points (at least one)
  double hard_lo = -kInf;       // support boundary (inclusive side handled by g = -inf)
  double hard_hi = kInf;
  double drop = 55.0;           // nats below the peak at which tails are cut
  double expand_cap = 1e13;     // give up (declare divergence) past this |x|
};

double log_integral_exp(const std::function<double(double)>& g, const LogIntegralHints& hints);

}  // namespace mletail
