#include "gelab/dataset_io.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace gelab {

namespace {

std::string exact(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_row(std::ostream& out, const double* data, Eigen::Index len, Eigen::Index stride = 1) {
    for (Eigen::Index i = 0; i < len; ++i) {
        if (i > 0) out << ',';
        out << exact(data[i * stride]);
    }
    out << '\n';
}

void write_matrix(std::ostream& out, const char* label, const Matrix& m) {
    out << label << ',' << m.rows() << ',' << m.cols() << '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const Eigen::RowVectorXd row = m.row(r);
        write_row(out, row.data(), row.size());
    }
}

void write_vector(std::ostream& out, const char* label, const Vector& v) {
    out << label << ',' << v.size() << '\n';
    write_row(out, v.data(), v.size());
}

std::vector<double> parse_row(const std::string& line, Eigen::Index expected) {
    std::vector<double> values;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::runtime_error("dataset: malformed number '" + cell + "'");
    }
    if (static_cast<Eigen::Index>(values.size()) != expected)
        throw std::runtime_error("dataset: row has " + std::to_string(values.size()) + " values, expected " +
                                 std::to_string(expected));
    return values;
}

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    std::string line() {
        std::string s;
        if (!std::getline(in_, s)) throw std::runtime_error("dataset: unexpected end of input");
        ++lineno_;
        return s;
    }

    std::vector<std::string> header(const std::string& label) {
        std::vector<std::string> cells;
        std::stringstream ss(line());
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.empty() || cells[0] != label)
            throw std::runtime_error("dataset: expected block '" + label + "' at line " + std::to_string(lineno_));
        return cells;
    }

    Matrix matrix(const std::string& label) {
        const auto cells = header(label);
        if (cells.size() != 3) throw std::runtime_error("dataset: bad matrix header for " + label);
        const auto rows = static_cast<Eigen::Index>(std::stoll(cells[1]));
        const auto cols = static_cast<Eigen::Index>(std::stoll(cells[2]));
        Matrix m(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r) {
            const auto values = parse_row(line(), cols);
            for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = values[static_cast<std::size_t>(c)];
        }
        return m;
    }

    Vector vector(const std::string& label) {
        const auto cells = header(label);
        if (cells.size() != 2) throw std::runtime_error("dataset: bad vector header for " + label);
        const auto len = static_cast<Eigen::Index>(std::stoll(cells[1]));
        Vector v(len);
        const auto values = len > 0 ? parse_row(line(), len) : (line(), std::vector<double>{});
        for (Eigen::Index i = 0; i < len; ++i) v(i) = values[static_cast<std::size_t>(i)];
        return v;
    }

private:
    std::istream& in_;
    int lineno_ = 0;
};

}  // namespace

void write_dataset(std::ostream& out, const Dataset& data) {
    out << "d,p,n,t,seed\n";
    out << data.dims.d << ',' << data.dims.p << ',' << data.dims.n << ',' << exact(data.t) << ',' << data.seed
        << '\n';
    write_matrix(out, "X", data.X);
    write_vector(out, "Y", data.Y);
    write_vector(out, "a", data.nn.a);
    write_matrix(out, "W", data.nn.W);
    write_vector(out, "v", data.glm.v);
    write_vector(out, "xi", data.glm.xi);
    Vector atoms(static_cast<Eigen::Index>(data.aux.atom.size()));
    for (std::size_t i = 0; i < data.aux.atom.size(); ++i)
        atoms(static_cast<Eigen::Index>(i)) = static_cast<double>(data.aux.atom[i]);
    write_vector(out, "atoms", atoms);
    write_vector(out, "noise", data.aux.noise);
}

Dataset read_dataset(std::istream& in) {
    Reader reader(in);
    reader.header("d");
    std::stringstream ss(reader.line());
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 5) throw std::runtime_error("dataset: header needs d,p,n,t,seed");
    Dataset data;
    data.dims = {std::stoull(cells[0]), std::stoull(cells[1]), std::stoull(cells[2])};
    data.t = std::stod(cells[3]);
    data.seed = std::stoull(cells[4]);
    data.X = reader.matrix("X");
    data.Y = reader.vector("Y");
    data.nn.a = reader.vector("a");
    data.nn.W = reader.matrix("W");
    data.glm.v = reader.vector("v");
    data.glm.xi = reader.vector("xi");
    const Vector atoms = reader.vector("atoms");
    data.aux.atom.resize(static_cast<std::size_t>(atoms.size()));
    for (Eigen::Index i = 0; i < atoms.size(); ++i) data.aux.atom[static_cast<std::size_t>(i)] = static_cast<std::size_t>(atoms(i));
    data.aux.noise = reader.vector("noise");
    const auto n = static_cast<Eigen::Index>(data.dims.n);
    const auto d = static_cast<Eigen::Index>(data.dims.d);
    const auto p = static_cast<Eigen::Index>(data.dims.p);
    if (data.X.rows() != n || data.X.cols() != d || data.Y.size() != n || data.nn.a.size() != p ||
        data.nn.W.rows() != p || data.nn.W.cols() != d || data.glm.v.size() != d || data.glm.xi.size() != n)
        throw std::runtime_error("dataset: block sizes disagree with the header");
    return data;
}

std::string dataset_to_string(const Dataset& data) {
    std::ostringstream out;
    write_dataset(out, data);
    return out.str();
}

Dataset dataset_from_string(const std::string& text) {
    std::istringstream in(text);
    return read_dataset(in);
}

}  // namespace gelab
