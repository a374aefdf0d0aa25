#pragma once

#include <stdexcept>
#include <string>

namespace domsel {

/// Malformed input file (bad magic, truncation, unparsable manifest).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Source and target files of a parallel corpus disagree on line count.
class AlignmentError : public std::runtime_error {
public:
    AlignmentError(std::string domain, std::size_t src_lines, std::size_t tgt_lines)
        : std::runtime_error("line count mismatch in domain '" + domain + "': src has " +
                             std::to_string(src_lines) + " lines, tgt has " +
                             std::to_string(tgt_lines)),
          domain_(std::move(domain)),
          src_lines_(src_lines),
          tgt_lines_(tgt_lines) {}

    const std::string& domain() const noexcept { return domain_; }
    std::size_t src_lines() const noexcept { return src_lines_; }
    std::size_t tgt_lines() const noexcept { return tgt_lines_; }

private:
    std::string domain_;
    std::size_t src_lines_;
    std::size_t tgt_lines_;
};

/// The embedding provider answered with an error payload or an invalid body.
class ProviderError : public std::runtime_error {
public:
    ProviderError(const std::string& what, int status = 0)
        : std::runtime_error(what), status_(status) {}
    int status() const noexcept { return status_; }

private:
    int status_;
};

/// The embedding provider could not be reached after all retries.
class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace domsel
