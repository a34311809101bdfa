#include "unmix/matrix_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "unmix/errors.hpp"

namespace unmix {

namespace {

constexpr std::array<char, 4> kMagic{'H', 'S', 'M', '1'};

void put_u64(std::ostream& out, std::uint64_t value)
{
    std::array<char, 8> bytes{};
    for (int i = 0; i < 8; ++i) {
        bytes[static_cast<std::size_t>(i)] = static_cast<char>((value >> (8 * i)) & 0xffu);
    }
    out.write(bytes.data(), bytes.size());
}

bool get_u64(std::istream& in, std::uint64_t& value)
{
    std::array<unsigned char, 8> bytes{};
    if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
        return false;
    }
    value = 0;
    for (int i = 7; i >= 0; --i) {
        value = (value << 8) | bytes[static_cast<std::size_t>(i)];
    }
    return true;
}

bool is_binary_path(const std::filesystem::path& path) { return path.extension() == ".hsm"; }

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

} // namespace

Matrix read_binary_matrix(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
        throw FormatError(path.string() + ": missing HSM1 magic");
    }
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
    if (!get_u64(in, rows) || !get_u64(in, cols)) {
        throw FormatError(path.string() + ": truncated header");
    }
    constexpr std::uint64_t kMaxEntries = std::uint64_t{1} << 40;
    if (rows != 0 && cols > kMaxEntries / rows) {
        throw FormatError(path.string() + ": implausible dimensions");
    }
    Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
    double* data = m.data();
    for (std::uint64_t k = 0; k < rows * cols; ++k) {
        std::uint64_t bits = 0;
        if (!get_u64(in, bits)) {
            throw FormatError(path.string() + ": payload shorter than " + std::to_string(rows) + "x" +
                              std::to_string(cols));
        }
        data[k] = std::bit_cast<double>(bits);
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw FormatError(path.string() + ": trailing bytes after payload");
    }
    return m;
}

void write_binary_matrix(const std::filesystem::path& path, const Matrix& m)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw FormatError("cannot open " + path.string() + " for writing");
    }
    out.write(kMagic.data(), kMagic.size());
    put_u64(out, static_cast<std::uint64_t>(m.rows()));
    put_u64(out, static_cast<std::uint64_t>(m.cols()));
    const double* data = m.data();
    for (Index k = 0; k < m.size(); ++k) {
        put_u64(out, std::bit_cast<std::uint64_t>(data[k]));
    }
    if (!out) {
        throw FormatError("write failed for " + path.string());
    }
}

Matrix read_csv_matrix(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto content = trim(line);
        if (content.empty() || content.front() == '#') {
            continue;
        }
        std::vector<double> row;
        std::size_t start = 0;
        while (true) {
            const auto comma = content.find(',', start);
            const auto field = trim(content.substr(start, comma == std::string_view::npos ? comma : comma - start));
            double value = 0.0;
            const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
            if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
                throw FormatError(path.string() + ":" + std::to_string(line_no) + ": bad numeric field '" +
                                  std::string(field) + "'");
            }
            row.push_back(value);
            if (comma == std::string_view::npos) {
                break;
            }
            start = comma + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": ragged row (" +
                              std::to_string(row.size()) + " fields, expected " +
                              std::to_string(rows.front().size()) + ")");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw FormatError(path.string() + ": no data rows");
    }
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
        }
    }
    return m;
}

void write_csv_matrix(const std::filesystem::path& path, const Matrix& m)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw FormatError("cannot open " + path.string() + " for writing");
    }
    std::array<char, 32> buf{};
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j > 0) {
                out << ',';
            }
            const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), m(i, j));
            out.write(buf.data(), res.ptr - buf.data());
        }
        out << '\n';
    }
}

Matrix read_matrix(const std::filesystem::path& path)
{
    return is_binary_path(path) ? read_binary_matrix(path) : read_csv_matrix(path);
}

void write_matrix(const std::filesystem::path& path, const Matrix& m)
{
    if (is_binary_path(path)) {
        write_binary_matrix(path, m);
    } else {
        write_csv_matrix(path, m);
    }
}

} // namespace unmix
