#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace trialrank {

enum class ErrorCode {
    malformed_record,
    missing_id,
    corpus_unreadable,
    unknown_view,
    io_failure,
    format_version_mismatch,
    unknown_document,
    empty_index,
    reranker_unavailable,
    provider_unavailable,
    dimension_mismatch,
    empty_query,
    zero_vector,
    query_id_mismatch,
    empty_matrix,
    malformed_qrels,
    missing_median_entry,
    missing_index,
    invalid_config,
};

[[nodiscard]] std::string_view error_code_name(ErrorCode code) noexcept;

/// Configuration errors map to CLI exit code 2, everything else to 3.
[[nodiscard]] bool is_config_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code)
    {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

}  // namespace trialrank
