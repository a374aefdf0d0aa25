#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "domsel/corpus.hpp"

namespace domsel {

/// Dense row-major float32 sentence vectors with one sentence id per row.
///
/// Invariants: data.size() == count * dim, ids unique, every entry finite.
/// All arithmetic on the vectors happens in double after to_eigen().
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;
    /// Empty (0 x dim) matrix.
    explicit EmbeddingMatrix(std::uint32_t dim);
    /// Validates invariants; throws std::invalid_argument on violation.
    EmbeddingMatrix(std::uint32_t dim, std::vector<float> data, std::vector<SentenceId> ids);

    /// Rounds a double matrix to float32; rows align with ids.
    static EmbeddingMatrix from_eigen(const Eigen::MatrixXd& rows, std::vector<SentenceId> ids);

    std::uint32_t dim() const noexcept { return dim_; }
    std::size_t count() const noexcept { return ids_.size(); }
    bool empty() const noexcept { return ids_.empty(); }

    std::span<const float> row(std::size_t i) const {
        return {data_.data() + i * dim_, dim_};
    }
    const std::vector<float>& data() const noexcept { return data_; }
    const std::vector<SentenceId>& ids() const noexcept { return ids_; }

    Eigen::MatrixXd to_eigen() const;

    /// Rows whose ids appear in `subset`, in matrix order. Throws on unknown ids.
    EmbeddingMatrix select_ids(std::span<const SentenceId> subset) const;
    /// Rows by position.
    EmbeddingMatrix select_rows(std::span<const std::size_t> rows) const;

    friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

private:
    std::uint32_t dim_ = 0;
    std::vector<float> data_;
    std::vector<SentenceId> ids_;
};

/// Writes the EMB1 binary format: "EMB1", dim (u32 LE), count (u64 LE), then
/// count*dim float32 LE values row-major. Ids go to `path` + ".ids", one per line.
void write_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path);

/// Inverse of write_embeddings. Throws FormatError on bad magic, truncated or
/// oversized payload, non-finite values, or an ids sidecar that disagrees with count.
EmbeddingMatrix read_embeddings(const std::filesystem::path& path);

/// The sidecar path used for ids.
std::filesystem::path ids_path(const std::filesystem::path& path);

}  // namespace domsel
