#include "lrmc/io.hpp"

#include "lrmc/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

namespace lrmc::io {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& token, const std::string& what) {
    double v = 0.0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) throw ParseError(what + ": malformed number '" + token + "'");
    return v;
}

long long parse_int(const std::string& token, const std::string& what) {
    long long v = 0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) throw ParseError(what + ": malformed integer '" + token + "'");
    return v;
}

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

bool blank(const std::string& line) {
    return line.find_first_not_of(" \t\r") == std::string::npos;
}

/// Reads the "# a b [c]" header; returns the numeric fields.
std::vector<long long> read_header(std::istream& in, std::size_t fields, const std::string& what) {
    std::string line;
    while (std::getline(in, line)) {
        if (blank(line)) continue;
        auto toks = split_ws(line);
        if (toks.empty() || toks[0] != "#" || toks.size() != fields + 1) {
            throw ParseError(what + ": expected header line '#' followed by " + std::to_string(fields) + " integers");
        }
        std::vector<long long> out;
        for (std::size_t i = 1; i < toks.size(); ++i) out.push_back(parse_int(toks[i], what + " header"));
        return out;
    }
    throw ParseError(what + ": missing header line");
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open '" + path + "' for writing");
    return f;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open '" + path + "' for reading");
    return f;
}

} // namespace

void write_observations(std::ostream& out, const Dataset& data) {
    out << "# " << data.dims.m1 << ' ' << data.dims.m2 << ' ' << data.n() << '\n';
    for (const auto& e : data.entries) out << e.row << ' ' << e.col << ' ' << format_double(e.value) << '\n';
}

Dataset read_observations(std::istream& in) {
    const auto h = read_header(in, 3, "observation file");
    if (h[0] < 1 || h[1] < 1) throw ValidationError("observation file: Dimensions require m1 >= 1 and m2 >= 1");
    Dataset d;
    d.dims = Dimensions(static_cast<int>(h[0]), static_cast<int>(h[1]));
    std::string line;
    while (std::getline(in, line)) {
        if (blank(line) || line[0] == '#') continue;
        const auto toks = split_ws(line);
        if (toks.size() != 3) throw ParseError("observation file: expected 'row col value', got '" + line + "'");
        d.entries.push_back({static_cast<int>(parse_int(toks[0], "observation row")),
                             static_cast<int>(parse_int(toks[1], "observation col")),
                             parse_double(toks[2], "observation value")});
    }
    if (static_cast<long long>(d.n()) != h[2]) {
        throw ValidationError("observation file: Dataset invariant n = length(entries) violated (header n = " +
                              std::to_string(h[2]) + ", lines = " + std::to_string(d.n()) + ")");
    }
    d.validate();
    return d;
}

void write_distribution(std::ostream& out, const SamplingDistribution& pi) {
    const auto& P = pi.pmf();
    out << "# " << P.rows() << ' ' << P.cols() << ' ' << P.size() << '\n';
    for (Eigen::Index j = 0; j < P.rows(); ++j) {
        for (Eigen::Index k = 0; k < P.cols(); ++k) out << j << ' ' << k << ' ' << format_double(P(j, k)) << '\n';
    }
}

SamplingDistribution read_distribution(std::istream& in) {
    const auto h = read_header(in, 3, "sampling distribution file");
    if (h[0] < 1 || h[1] < 1) throw ValidationError("sampling distribution file: Dimensions require m1, m2 >= 1");
    Matrix P = Matrix::Zero(h[0], h[1]);
    std::string line;
    long long count = 0;
    while (std::getline(in, line)) {
        if (blank(line) || line[0] == '#') continue;
        const auto toks = split_ws(line);
        if (toks.size() != 3) throw ParseError("sampling distribution file: expected 'row col prob', got '" + line + "'");
        const long long j = parse_int(toks[0], "distribution row");
        const long long k = parse_int(toks[1], "distribution col");
        if (j < 0 || j >= h[0] || k < 0 || k >= h[1]) {
            throw ValidationError("sampling distribution file: index outside dims");
        }
        P(j, k) += parse_double(toks[2], "distribution probability");
        ++count;
    }
    if (count != h[2]) throw ValidationError("sampling distribution file: header count does not match entries");
    return SamplingDistribution(std::move(P), "file");
}

void write_matrix_csv(std::ostream& out, const Matrix& A) {
    out << "# " << A.rows() << ' ' << A.cols() << '\n';
    for (Eigen::Index j = 0; j < A.rows(); ++j) {
        for (Eigen::Index k = 0; k < A.cols(); ++k) {
            if (k) out << ',';
            out << format_double(A(j, k));
        }
        out << '\n';
    }
}

Matrix read_matrix_csv(std::istream& in) {
    const auto h = read_header(in, 2, "matrix csv");
    if (h[0] < 1 || h[1] < 1) throw ValidationError("matrix csv: Dimensions require m1, m2 >= 1");
    Matrix A(h[0], h[1]);
    std::string line;
    long long row = 0;
    while (std::getline(in, line)) {
        if (blank(line) || line[0] == '#') continue;
        if (row >= h[0]) throw ParseError("matrix csv: more rows than header declares");
        std::istringstream is(line);
        std::string cell;
        long long col = 0;
        while (std::getline(is, cell, ',')) {
            if (col >= h[1]) throw ParseError("matrix csv: row " + std::to_string(row) + " has too many columns");
            const auto first = cell.find_first_not_of(" \t\r");
            const auto last = cell.find_last_not_of(" \t\r");
            if (first == std::string::npos) throw ParseError("matrix csv: empty cell");
            A(row, col++) = parse_double(cell.substr(first, last - first + 1), "matrix csv");
        }
        if (col != h[1]) throw ParseError("matrix csv: row " + std::to_string(row) + " has too few columns");
        ++row;
    }
    if (row != h[0]) throw ParseError("matrix csv: fewer rows than header declares");
    return A;
}

void save_observations(const std::string& path, const Dataset& data) {
    auto f = open_out(path);
    write_observations(f, data);
}
Dataset load_observations(const std::string& path) {
    auto f = open_in(path);
    return read_observations(f);
}
void save_distribution(const std::string& path, const SamplingDistribution& pi) {
    auto f = open_out(path);
    write_distribution(f, pi);
}
SamplingDistribution load_distribution(const std::string& path) {
    auto f = open_in(path);
    return read_distribution(f);
}
void save_matrix_csv(const std::string& path, const Matrix& A) {
    auto f = open_out(path);
    write_matrix_csv(f, A);
}
Matrix load_matrix_csv(const std::string& path) {
    auto f = open_in(path);
    return read_matrix_csv(f);
}

void save_text(const std::string& path, const std::string& text) {
    auto f = open_out(path);
    f << text;
    if (!f) throw ParseError("failed writing '" + path + "'");
}

std::string load_text(const std::string& path) {
    auto f = open_in(path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

} // namespace lrmc::io
