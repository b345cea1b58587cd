#pragma once

#include <cstddef>

#include "m3hl/net.hpp"

namespace m3hl {

/// Student network trained by gradient descent and a teacher that only ever
/// follows it through an exponential moving average.
class TeacherStudent {
 public:
  /// The teacher starts as an exact copy of the student.
  explicit TeacherStudent(SegNetwork student, double decay = 0.99);
  TeacherStudent(SegNetwork student, SegNetwork teacher, double decay);

  SegNetwork& student() { return student_; }
  const SegNetwork& student() const { return student_; }
  const SegNetwork& teacher() const { return teacher_; }
  double decay() const { return decay_; }

  /// teacher = d * teacher + (1 - d) * student with d = decay().
  void ema_update() { ema_update(decay_); }
  void ema_update(double decay);

 private:
  SegNetwork student_;
  SegNetwork teacher_;
  double decay_;
};

/// teacher = decay * teacher + (1 - decay) * student, parameter by parameter.
void ema_update(ParameterSet& teacher, const ParameterSet& student, double decay);

/// Mean-teacher warm-up: min(decay, 1 - 1 / (step + 1)), so step 0 copies the student.
double warmup_decay(double decay, std::size_t step);

}  // namespace m3hl
