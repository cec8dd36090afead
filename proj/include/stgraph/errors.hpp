#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace stgraph {

// Base for all library errors. `where` carries the offending path
// (file path, JSON pointer, field name) when one exists.
class Error : public std::runtime_error {
 public:
  Error(std::string what_arg, std::string where)
      : std::runtime_error(where.empty() ? what_arg : where + ": " + what_arg),
        where_(std::move(where)) {}

  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

#define STGRAPH_DEFINE_ERROR(Name)                                  \
  class Name : public Error {                                       \
   public:                                                          \
    explicit Name(std::string what_arg, std::string where = {})     \
        : Error(std::move(what_arg), std::move(where)) {}           \
  }

STGRAPH_DEFINE_ERROR(ParseError);
STGRAPH_DEFINE_ERROR(SchemaError);
STGRAPH_DEFINE_ERROR(InvariantError);
STGRAPH_DEFINE_ERROR(DimensionError);
STGRAPH_DEFINE_ERROR(EmptyTrackError);
STGRAPH_DEFINE_ERROR(EmptyFrameError);
STGRAPH_DEFINE_ERROR(NotARotationError);
STGRAPH_DEFINE_ERROR(LengthMismatchError);
STGRAPH_DEFINE_ERROR(ExtractionError);
STGRAPH_DEFINE_ERROR(SupportMismatchError);
STGRAPH_DEFINE_ERROR(GroupTooSmallError);
STGRAPH_DEFINE_ERROR(ConfigError);
STGRAPH_DEFINE_ERROR(QuotaUnsatisfiableError);

#undef STGRAPH_DEFINE_ERROR

}  // namespace stgraph
