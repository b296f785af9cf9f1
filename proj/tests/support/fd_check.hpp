#pragma once

// Central finite-difference gradient oracle. The loss is re-evaluated by
// an independent double-precision reference (see dref.hpp), so the
// differences carry no f32 noise and a tight tolerance is meaningful.

#include <cmath>
#include <functional>
#include <string>

#include "stablegrasp/nn/params.hpp"
#include "stablegrasp/nn/tape.hpp"

namespace sg::test {

struct FdReport {
  float max_rel = 0.0f;
  int checked = 0;
  int skipped = 0;    // probes straddling a relu/clamp kink
  std::string worst;  // "param[index]" of the worst entry
};

/// build constructs the f32 tape loss; ref_loss recomputes the same loss
/// in double from the current parameter values. Checks up to
/// `samples_per_param` random entries of every trainable parameter.
inline FdReport fd_check(nn::ParameterSet& ps,
                         const std::function<nn::ValueId(nn::Tape&)>& build,
                         const std::function<double()>& ref_loss, nn::Rng& rng,
                         int samples_per_param = 8) {
  ps.zero_grad();
  double tape_loss;
  {
    nn::Tape t;
    nn::ValueId l = build(t);
    tape_loss = t.value(l).data[0];
    t.backward(l);
  }

  FdReport rep;
  // the double reference must restate the same function
  double ref = ref_loss();
  if (std::abs(tape_loss - ref) > 5e-3 * std::max({std::abs(ref), std::abs(tape_loss), 1e-3})) {
    rep.max_rel = 1e9f;
    rep.worst = "forward mismatch: tape " + std::to_string(tape_loss) + " vs reference " +
                std::to_string(ref);
    return rep;
  }

  auto fd_at = [&](nn::Parameter& p, int i, double orig, double h) {
    p.value.data[static_cast<size_t>(i)] = static_cast<float>(orig + h);
    double xp = p.value.data[static_cast<size_t>(i)];
    double lp = ref_loss();
    p.value.data[static_cast<size_t>(i)] = static_cast<float>(orig - h);
    double xm = p.value.data[static_cast<size_t>(i)];
    double lm = ref_loss();
    p.value.data[static_cast<size_t>(i)] = static_cast<float>(orig);
    return (lp - lm) / (xp - xm);
  };

  for (auto& p : ps) {
    if (!p->trainable) continue;
    int n = p->value.numel();
    int samples = samples_per_param < n ? samples_per_param : n;
    for (int s = 0; s < samples; ++s) {
      int i = samples_per_param < n ? rng.uniform_int(n) : s;
      double orig = p->value.data[static_cast<size_t>(i)];
      double h = 1e-4 * std::max(std::abs(orig), 0.1);
      double fd1 = fd_at(*p, i, orig, h);
      double fd2 = fd_at(*p, i, orig, 0.5 * h);
      // a kink (relu, clamp) inside the stencil leaves the differences
      // inconsistent with each other; skip, the point is non-smooth
      if (std::abs(fd1 - fd2) > 2e-4 * std::max({std::abs(fd1), std::abs(fd2), 1e-2})) {
        ++rep.skipped;
        continue;
      }
      double an = p->grad.data[static_cast<size_t>(i)];
      float rel = static_cast<float>(std::abs(an - fd2) /
                                     std::max({std::abs(an), std::abs(fd2), 1e-2}));
      ++rep.checked;
      if (rel > rep.max_rel) {
        rep.max_rel = rel;
        rep.worst = p->name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return rep;
}

}  // namespace sg::test
