#ifndef T1T2_ERROR_HPP
#define T1T2_ERROR_HPP

#include <stdexcept>
#include <string>

namespace t1t2 {

// Error taxonomy; the CLI maps kinds to exit codes (usage/config -> 1,
// numeric -> 2, oracle -> 3).
enum class ErrorKind {
    config,     // bad config / usage / contract precondition
    dimension,  // shape mismatch
    input,      // bad runtime input (labels out of range, eps <= 0, ...)
    numeric,    // non-finite values where finite required
    io,         // file system / truncated stream
    format,     // malformed external file (IDX magic, CSV, ...)
    internal,   // broken internal invariant (trace/params mismatch)
    contract,   // API called against its stated contract
    oracle,     // analytic value disagrees with its oracle
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

}  // namespace t1t2

#endif
