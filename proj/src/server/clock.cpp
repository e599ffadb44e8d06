#include "pb/server/clock.hpp"

#include <chrono>

namespace pb::server {

double SystemClock::now() const {
  using namespace std::chrono;
  return duration<double>(system_clock::now().time_since_epoch()).count();
}

}  // namespace pb::server
