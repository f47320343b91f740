#include "cbflearn/rng.hpp"

#include <cmath>
#include <istream>
#include <ostream>

namespace cbflearn {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) return 0;
  std::size_t i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
  return i < n ? i : n - 1;
}

std::ostream& operator<<(std::ostream& os, const Rng& rng) {
  os << rng.gen_ << ' ' << (rng.has_spare_ ? 1 : 0) << ' ';
  const auto old = os.flags();
  os.setf(std::ios::scientific);
  os.precision(17);
  os << rng.spare_;
  os.flags(old);
  return os;
}

std::istream& operator>>(std::istream& is, Rng& rng) {
  int spare_flag = 0;
  is >> rng.gen_ >> spare_flag >> rng.spare_;
  rng.has_spare_ = spare_flag != 0;
  return is;
}

}  // namespace cbflearn
