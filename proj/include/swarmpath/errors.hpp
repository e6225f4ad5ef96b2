#pragma once

#include <stdexcept>
#include <string>

namespace swarmpath {

/// Base of every error raised by the library. `where()` names the module and
/// operation that failed, e.g. "stress_field::load_grid_field".
class Error : public std::runtime_error
{
public:
  Error(std::string where, const std::string & what)
      : std::runtime_error(where + ": " + what), where_(std::move(where))
  {}

  const std::string & where() const noexcept { return where_; }

private:
  std::string where_;
};

#define SWARMPATH_DEFINE_ERROR(Name)         \
  class Name : public Error                  \
  {                                          \
  public:                                    \
    using Error::Error;                      \
  }

SWARMPATH_DEFINE_ERROR(ValidationError);
SWARMPATH_DEFINE_ERROR(ParseError);
SWARMPATH_DEFINE_ERROR(QueryOutsideDomain);
SWARMPATH_DEFINE_ERROR(DegenerateField);
SWARMPATH_DEFINE_ERROR(SeedTooShort);
SWARMPATH_DEFINE_ERROR(StalledAgent);
SWARMPATH_DEFINE_ERROR(HoleTooSmall);
SWARMPATH_DEFINE_ERROR(EmptyTrajectorySet);
SWARMPATH_DEFINE_ERROR(SingleTrace);

#undef SWARMPATH_DEFINE_ERROR

}  // namespace swarmpath
