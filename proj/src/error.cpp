#include "trialrank/error.hpp"

namespace trialrank {

std::string_view error_code_name(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::malformed_record: return "MalformedRecord";
    case ErrorCode::missing_id: return "MissingId";
    case ErrorCode::corpus_unreadable: return "CorpusUnreadable";
    case ErrorCode::unknown_view: return "UnknownView";
    case ErrorCode::io_failure: return "IoFailure";
    case ErrorCode::format_version_mismatch: return "FormatVersionMismatch";
    case ErrorCode::unknown_document: return "UnknownDocument";
    case ErrorCode::empty_index: return "EmptyIndex";
    case ErrorCode::reranker_unavailable: return "RerankerUnavailable";
    case ErrorCode::provider_unavailable: return "ProviderUnavailable";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::empty_query: return "EmptyQuery";
    case ErrorCode::zero_vector: return "ZeroVector";
    case ErrorCode::query_id_mismatch: return "QueryIdMismatch";
    case ErrorCode::empty_matrix: return "EmptyMatrix";
    case ErrorCode::malformed_qrels: return "MalformedQrels";
    case ErrorCode::missing_median_entry: return "MissingMedianEntry";
    case ErrorCode::missing_index: return "MissingIndex";
    case ErrorCode::invalid_config: return "InvalidConfig";
    }
    return "Unknown";
}

bool is_config_error(ErrorCode code) noexcept
{
    return code == ErrorCode::invalid_config || code == ErrorCode::unknown_view;
}

}  // namespace trialrank
