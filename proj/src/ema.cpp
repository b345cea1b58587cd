#include "m3hl/ema.hpp"

#include <algorithm>
#include <string>

namespace m3hl {
namespace {

void check_decay(double decay) {
  if (!(decay >= 0.0 && decay <= 1.0)) throw RangeError("EMA decay " + std::to_string(decay) + " outside [0, 1]");
}

}  // namespace

TeacherStudent::TeacherStudent(SegNetwork student, double decay)
    : student_(std::move(student)), teacher_(student_), decay_(decay) {
  check_decay(decay);
}

TeacherStudent::TeacherStudent(SegNetwork student, SegNetwork teacher, double decay)
    : student_(std::move(student)), teacher_(std::move(teacher)), decay_(decay) {
  check_decay(decay);
  student_.parameters().require_same_structure(teacher_.parameters());
}

void TeacherStudent::ema_update(double decay) {
  m3hl::ema_update(teacher_.parameters(), student_.parameters(), decay);
}

void ema_update(ParameterSet& teacher, const ParameterSet& student, double decay) {
  check_decay(decay);
  teacher.require_same_structure(student);
  for (std::size_t p = 0; p < teacher.size(); ++p) {
    auto& t = teacher[p].value;
    const auto& s = student[p].value;
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = decay * t[i] + (1.0 - decay) * s[i];
  }
}

double warmup_decay(double decay, std::size_t step) {
  return std::min(decay, 1.0 - 1.0 / static_cast<double>(step + 1));
}

}  // namespace m3hl
