#ifndef DROD_ERRORS_HPP
#define DROD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace drod {

// Failure categories surfaced by the simulator. Callers that need to react
// programmatically (the CLI exit codes, the rollout abort path) switch on
// the code; the message carries the specifics.
enum class ErrorCode {
    InvalidArgument,
    AntipodalTangent,
    DegenerateTurn,
    DegenerateSegment,
    NonConvergence,
    IllConditioned,
    NonStatic,
    DegenerateMixture,
    Io,
};

class SimError : public std::runtime_error {
  public:
    SimError(ErrorCode code, const std::string &what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const { return code_; }

  private:
    ErrorCode code_;
};

} // namespace drod

#endif
