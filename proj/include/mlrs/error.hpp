#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mlrs {

/// Failure categories surfaced by the toolkit. Each maps to one documented
/// precondition or I/O failure of a public operation.
enum class errc {
    missing_header,
    non_numeric_feature,
    single_class,
    ragged_row,
    invalid_spec,
    class_too_small,
    all_zero_weights,
    k_too_large,
    degenerate_pool,
    dsel_too_small,
    single_meta_class,
    missing_meta_model,
    incomplete_grid,
    empty_meta_dataset,
    schema_mismatch,
    corpus_too_small,
    io_error,
    invalid_argument,
};

inline std::string_view to_string(errc code) noexcept {
    switch (code) {
        case errc::missing_header: return "MissingHeader";
        case errc::non_numeric_feature: return "NonNumericFeature";
        case errc::single_class: return "SingleClass";
        case errc::ragged_row: return "RaggedRow";
        case errc::invalid_spec: return "InvalidSpec";
        case errc::class_too_small: return "ClassTooSmall";
        case errc::all_zero_weights: return "AllZeroWeights";
        case errc::k_too_large: return "KTooLarge";
        case errc::degenerate_pool: return "DegeneratePool";
        case errc::dsel_too_small: return "DselTooSmall";
        case errc::single_meta_class: return "SingleMetaClass";
        case errc::missing_meta_model: return "MissingMetaModel";
        case errc::incomplete_grid: return "IncompleteGrid";
        case errc::empty_meta_dataset: return "EmptyMetaDataset";
        case errc::schema_mismatch: return "SchemaMismatch";
        case errc::corpus_too_small: return "CorpusTooSmall";
        case errc::io_error: return "IoError";
        case errc::invalid_argument: return "InvalidArgument";
    }
    return "Unknown";
}

class error : public std::runtime_error {
  public:
    error(errc code, const std::string& what_arg)
        : std::runtime_error(std::string(to_string(code)) + ": " + what_arg), code_(code) {}

    [[nodiscard]] errc code() const noexcept { return code_; }

  private:
    errc code_;
};

}  // namespace mlrs
