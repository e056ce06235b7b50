#include "spectra/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "spectra/errors.hpp"

namespace spectra {

void write_matrix_csv(const Matrix& m, const std::filesystem::path& path) {
    std::string text;
    text.reserve(m.size() * 20 + m.rows);
    char buf[32];
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
            if (j) text += ',';
            text += buf;
        }
        text += '\n';
    }
    atomic_write_text(path, text);
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open matrix csv: " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            char* end = nullptr;
            const double v = std::strtod(tok.c_str(), &end);
            if (end == tok.c_str()) {
                throw ValidationError("matrix csv: bad token '" + tok + "' in " + path.string());
            }
            row.push_back(v);
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw ValidationError("matrix csv: ragged rows in " + path.string());
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ValidationError("matrix csv: empty file " + path.string());
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) m(i, j) = rows[i][j];
    }
    return m;
}

void write_labels_csv(const std::vector<std::size_t>& labels,
                      const std::filesystem::path& path) {
    std::string text;
    for (std::size_t y : labels) {
        text += std::to_string(y);
        text += '\n';
    }
    atomic_write_text(path, text);
}

std::vector<std::size_t> read_labels_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open labels csv: " + path.string());
    std::vector<std::size_t> labels;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        labels.push_back(static_cast<std::size_t>(std::strtoull(line.c_str(), nullptr, 10)));
    }
    return labels;
}

void atomic_write_text(const std::filesystem::path& path, const std::string& text) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot write " + tmp.string());
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out) throw ValidationError("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace spectra
