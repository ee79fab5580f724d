#pragma once

#include <stdexcept>

namespace vaxalloc::firewall {

/// Thrown when code running on behalf of the controller touches the true state.
class Breach : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

namespace detail {
inline thread_local int controller_depth = 0;
}

/// Marks the current thread as executing controller code for the guard's
/// lifetime. Environment entry points refuse to run while one is alive.
class ControllerScope {
 public:
  ControllerScope() { ++detail::controller_depth; }
  ~ControllerScope() { --detail::controller_depth; }
  ControllerScope(const ControllerScope&) = delete;
  ControllerScope& operator=(const ControllerScope&) = delete;
};

inline bool in_controller_scope() { return detail::controller_depth > 0; }

inline void check_environment_access() {
  if (in_controller_scope()) {
    throw Breach("controller code attempted to access the environment state");
  }
}

}  // namespace vaxalloc::firewall
