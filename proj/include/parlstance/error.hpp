#pragma once

#include <stdexcept>
#include <string>

namespace parlstance {

/// Base of every error raised by the library. `kind()` is a stable,
/// machine-readable tag that the CLI reports alongside the message.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

private:
  std::string kind_;
};

#define PARLSTANCE_DEFINE_ERROR(Name, tag)                                    \
  class Name : public Error {                                                 \
  public:                                                                     \
    explicit Name(const std::string& what) : Error(tag, what) {}              \
  };

PARLSTANCE_DEFINE_ERROR(ArgumentError, "argument_error")
PARLSTANCE_DEFINE_ERROR(SchemaError, "schema_error")
PARLSTANCE_DEFINE_ERROR(IngestionError, "ingestion_error")
PARLSTANCE_DEFINE_ERROR(IntegrityError, "integrity_error")
PARLSTANCE_DEFINE_ERROR(ScoringError, "scoring_error")
PARLSTANCE_DEFINE_ERROR(SelectionError, "selection_error")
PARLSTANCE_DEFINE_ERROR(BuildError, "build_error")
PARLSTANCE_DEFINE_ERROR(ParseError, "parse_error")
PARLSTANCE_DEFINE_ERROR(ConfigError, "config_error")
PARLSTANCE_DEFINE_ERROR(TransportError, "transport_error")
PARLSTANCE_DEFINE_ERROR(IoError, "io_error")

#undef PARLSTANCE_DEFINE_ERROR

}  // namespace parlstance
