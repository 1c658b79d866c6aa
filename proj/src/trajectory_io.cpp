#include "phcbf/trajectory_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "phcbf/errors.hpp"

namespace phcbf {

namespace {

constexpr const char* kTail[] = {"H", "Ke", "V", "h", "psi", "active", "p_inj", "p_diss"};
constexpr std::size_t kTailCount = std::size(kTail);

void put(std::ostream& os, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) {
            cell.pop_back();
        }
        out.push_back(cell);
    }
    return out;
}

double parse_number(const std::string& s, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) {
            throw std::invalid_argument(s);
        }
        return v;
    } catch (const std::exception&) {
        throw ConfigError("csv line " + std::to_string(line_no) + ": bad number '" + s + "'");
    }
}

}  // namespace

std::vector<std::string> csv_header(Eigen::Index n, Eigen::Index m) {
    std::vector<std::string> cols{"t"};
    if (n % 2 == 0) {
        for (Eigen::Index i = 1; i <= n / 2; ++i) {
            cols.push_back("q_" + std::to_string(i));
        }
        for (Eigen::Index i = 1; i <= n / 2; ++i) {
            cols.push_back("p_" + std::to_string(i));
        }
    } else {
        for (Eigen::Index i = 1; i <= n; ++i) {
            cols.push_back("x_" + std::to_string(i));
        }
    }
    for (Eigen::Index i = 1; i <= m; ++i) {
        cols.push_back("u_" + std::to_string(i));
    }
    cols.insert(cols.end(), std::begin(kTail), std::end(kTail));
    return cols;
}

void write_csv(std::ostream& os, const Trajectory& traj) {
    const auto cols = csv_header(traj.n, traj.m);
    for (std::size_t i = 0; i < cols.size(); ++i) {
        os << (i ? "," : "") << cols[i];
    }
    os << '\n';
    for (const auto& r : traj.records) {
        put(os, r.t);
        for (Eigen::Index i = 0; i < r.x.size(); ++i) {
            os << ',';
            put(os, r.x[i]);
        }
        for (Eigen::Index i = 0; i < r.u.size(); ++i) {
            os << ',';
            put(os, r.u[i]);
        }
        for (double v : {r.H, r.Ke, r.V, r.h, r.psi}) {
            os << ',';
            put(os, v);
        }
        os << ',' << (r.active ? 1 : 0);
        for (double v : {r.p_inj, r.p_diss}) {
            os << ',';
            put(os, v);
        }
        os << '\n';
    }
}

void write_csv(const std::filesystem::path& path, const Trajectory& traj) {
    std::ofstream os(path);
    if (!os) {
        throw ConfigError("cannot write " + path.string());
    }
    write_csv(os, traj);
}

Trajectory read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) {
        throw ConfigError("csv: missing header row");
    }
    const auto header = split_line(line);
    if (header.empty() || header.front() != "t" || header.size() < 1 + kTailCount) {
        throw ConfigError("csv: header does not match the trajectory schema");
    }
    Eigen::Index n_state = 0;
    Eigen::Index m = 0;
    for (std::size_t i = 1; i < header.size() - kTailCount; ++i) {
        const auto& c = header[i];
        if (c.rfind("q_", 0) == 0 || c.rfind("p_", 0) == 0 || c.rfind("x_", 0) == 0) {
            if (m > 0) {
                throw ConfigError("csv: state column after input columns");
            }
            ++n_state;
        } else if (c.rfind("u_", 0) == 0) {
            ++m;
        } else {
            throw ConfigError("csv: unexpected column '" + c + "'");
        }
    }
    const auto expected = csv_header(n_state, m);
    if (expected != header) {
        throw ConfigError("csv: header does not match the trajectory schema");
    }

    Trajectory traj;
    traj.n = n_state;
    traj.m = m;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line == "\r") {
            continue;
        }
        const auto cells = split_line(line);
        if (cells.size() != header.size()) {
            throw ConfigError("csv line " + std::to_string(line_no) + ": expected " +
                              std::to_string(header.size()) + " fields");
        }
        std::size_t k = 0;
        TrajectoryRecord r;
        r.t = parse_number(cells[k++], line_no);
        r.x.resize(n_state);
        for (Eigen::Index i = 0; i < n_state; ++i) {
            r.x[i] = parse_number(cells[k++], line_no);
        }
        r.u.resize(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            r.u[i] = parse_number(cells[k++], line_no);
        }
        r.H = parse_number(cells[k++], line_no);
        r.Ke = parse_number(cells[k++], line_no);
        r.V = parse_number(cells[k++], line_no);
        r.h = parse_number(cells[k++], line_no);
        r.psi = parse_number(cells[k++], line_no);
        r.active = parse_number(cells[k++], line_no) != 0.0;
        r.p_inj = parse_number(cells[k++], line_no);
        r.p_diss = parse_number(cells[k++], line_no);
        if (!traj.records.empty() && !(r.t > traj.records.back().t)) {
            throw ConfigError("csv line " + std::to_string(line_no) + ": time not increasing");
        }
        traj.records.push_back(std::move(r));
    }
    return traj;
}

Trajectory read_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) {
        throw ConfigError("cannot read " + path.string());
    }
    return read_csv(is);
}

}  // namespace phcbf
