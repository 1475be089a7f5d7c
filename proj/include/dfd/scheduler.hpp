#pragma once

// Reduce-on-plateau: halve (by `factor`) once the validation loss has failed
// to improve for more than `patience` consecutive epochs. Improvement is
// strict `<` against the best loss seen.

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dfd {

struct SchedulerState {
  double factor = 0.5;
  int patience = 1;
  double best_loss = std::numeric_limits<double>::infinity();
  int bad_count = 0;
  double current_lr = 0.0;

  void validate() const {
    if (!(factor > 0.0 && factor < 1.0))
      throw std::runtime_error("scheduler: factor must be in (0,1)");
    if (patience < 0) throw std::runtime_error("scheduler: patience must be >= 0");
  }
};

inline void plateau_step(SchedulerState& s, double val_loss) {
  if (!std::isfinite(val_loss)) throw std::runtime_error("scheduler: non-finite validation loss");
  if (val_loss < s.best_loss) {
    s.best_loss = val_loss;
    s.bad_count = 0;
  } else {
    s.bad_count += 1;
    if (s.bad_count > s.patience) {
      s.current_lr *= s.factor;
      s.bad_count = 0;
    }
  }
}

}  // namespace dfd
