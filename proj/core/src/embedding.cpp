#include "domsel/embedding.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "domsel/errors.hpp"
#include "domsel/text.hpp"

namespace domsel {

namespace fs = std::filesystem;

namespace {

constexpr std::array<char, 4> kMagic{'E', 'M', 'B', '1'};
constexpr std::size_t kHeaderBytes = 4 + 4 + 8;

template <typename U>
void put_le(std::string& buf, U value) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        buf.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
    }
}

template <typename U>
U get_le(const char* p) {
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        v |= static_cast<U>(static_cast<unsigned char>(p[i])) << (8 * i);
    }
    return v;
}

void check_invariants(std::uint32_t dim, const std::vector<float>& data,
                      const std::vector<SentenceId>& ids) {
    if (data.size() != ids.size() * std::size_t{dim}) {
        throw std::invalid_argument("EmbeddingMatrix: data size " + std::to_string(data.size()) +
                                    " != count*dim " + std::to_string(ids.size() * dim));
    }
    for (float v : data) {
        if (!std::isfinite(v)) throw std::invalid_argument("EmbeddingMatrix: non-finite entry");
    }
    std::unordered_set<SentenceId> seen;
    seen.reserve(ids.size());
    for (SentenceId id : ids) {
        if (!seen.insert(id).second) {
            throw std::invalid_argument("EmbeddingMatrix: duplicate id " + std::to_string(id));
        }
    }
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::uint32_t dim) : dim_(dim) {}

EmbeddingMatrix::EmbeddingMatrix(std::uint32_t dim, std::vector<float> data,
                                 std::vector<SentenceId> ids)
    : dim_(dim), data_(std::move(data)), ids_(std::move(ids)) {
    check_invariants(dim_, data_, ids_);
}

EmbeddingMatrix EmbeddingMatrix::from_eigen(const Eigen::MatrixXd& rows,
                                            std::vector<SentenceId> ids) {
    if (static_cast<std::size_t>(rows.rows()) != ids.size()) {
        throw std::invalid_argument("from_eigen: row count does not match ids");
    }
    std::vector<float> data(static_cast<std::size_t>(rows.size()));
    const auto cols = rows.cols();
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            data[static_cast<std::size_t>(i * cols + j)] = static_cast<float>(rows(i, j));
        }
    }
    return EmbeddingMatrix(static_cast<std::uint32_t>(cols), std::move(data), std::move(ids));
}

Eigen::MatrixXd EmbeddingMatrix::to_eigen() const {
    using RowMajorF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMajorF> view(data_.data(), static_cast<Eigen::Index>(count()),
                                     static_cast<Eigen::Index>(dim_));
    return view.cast<double>();
}

EmbeddingMatrix EmbeddingMatrix::select_ids(std::span<const SentenceId> subset) const {
    std::unordered_set<SentenceId> wanted(subset.begin(), subset.end());
    std::unordered_map<SentenceId, std::size_t> position;
    position.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) position.emplace(ids_[i], i);
    for (SentenceId id : wanted) {
        if (!position.contains(id)) {
            throw std::invalid_argument("select_ids: unknown id " + std::to_string(id));
        }
    }
    std::vector<std::size_t> rows;
    rows.reserve(wanted.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (wanted.contains(ids_[i])) rows.push_back(i);
    }
    return select_rows(rows);
}

EmbeddingMatrix EmbeddingMatrix::select_rows(std::span<const std::size_t> rows) const {
    std::vector<float> data;
    data.reserve(rows.size() * dim_);
    std::vector<SentenceId> ids;
    ids.reserve(rows.size());
    for (std::size_t r : rows) {
        if (r >= count()) throw std::out_of_range("select_rows: row out of range");
        auto v = row(r);
        data.insert(data.end(), v.begin(), v.end());
        ids.push_back(ids_[r]);
    }
    return EmbeddingMatrix(dim_, std::move(data), std::move(ids));
}

fs::path ids_path(const fs::path& path) {
    fs::path p = path;
    p += ".ids";
    return p;
}

void write_embeddings(const EmbeddingMatrix& m, const fs::path& path) {
    std::string buf;
    buf.reserve(kHeaderBytes + m.data().size() * 4);
    buf.append(kMagic.data(), kMagic.size());
    put_le<std::uint32_t>(buf, m.dim());
    put_le<std::uint64_t>(buf, static_cast<std::uint64_t>(m.count()));
    for (float v : m.data()) put_le<std::uint32_t>(buf, std::bit_cast<std::uint32_t>(v));
    write_file(path, buf);

    std::string ids;
    for (SentenceId id : m.ids()) {
        ids += std::to_string(id);
        ids += '\n';
    }
    write_file(ids_path(path), ids);
}

EmbeddingMatrix read_embeddings(const fs::path& path) {
    const std::string buf = read_file(path);
    if (buf.size() < kHeaderBytes) throw FormatError(path.string() + ": truncated header");
    if (std::memcmp(buf.data(), kMagic.data(), kMagic.size()) != 0) {
        throw FormatError(path.string() + ": bad magic, expected EMB1");
    }
    const auto dim = get_le<std::uint32_t>(buf.data() + 4);
    const auto count = get_le<std::uint64_t>(buf.data() + 8);
    const std::uint64_t payload = buf.size() - kHeaderBytes;
    if (dim == 0 && count != 0) throw FormatError(path.string() + ": zero dim with nonzero count");
    if (dim != 0 && count > payload / (4ull * dim)) {
        throw FormatError(path.string() + ": truncated payload");
    }
    if (payload != count * dim * 4ull) {
        throw FormatError(path.string() + ": payload size " + std::to_string(payload) +
                          " does not match header (" + std::to_string(count) + " x " +
                          std::to_string(dim) + ")");
    }
    std::vector<float> data(static_cast<std::size_t>(count * dim));
    const char* p = buf.data() + kHeaderBytes;
    for (std::size_t i = 0; i < data.size(); ++i, p += 4) {
        data[i] = std::bit_cast<float>(get_le<std::uint32_t>(p));
        if (!std::isfinite(data[i])) throw FormatError(path.string() + ": non-finite value");
    }

    const auto id_lines = read_lines(ids_path(path));
    std::vector<SentenceId> ids;
    ids.reserve(id_lines.size());
    for (const auto& line : id_lines) {
        const auto t = trim(line);
        SentenceId id = 0;
        auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), id);
        if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
            throw FormatError(ids_path(path).string() + ": bad id line '" + line + "'");
        }
        ids.push_back(id);
    }
    if (ids.size() != count) {
        throw FormatError(path.string() + ": ids file has " + std::to_string(ids.size()) +
                          " entries, header count is " + std::to_string(count));
    }
    try {
        return EmbeddingMatrix(dim, std::move(data), std::move(ids));
    } catch (const std::invalid_argument& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

}  // namespace domsel
