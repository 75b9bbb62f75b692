#include "drod/io.hpp"

#include <bit>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace drod {

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

namespace {

[[noreturn]] void io_fail(const std::string &path, const std::string &what) {
    throw SimError(ErrorCode::Io, path + ": " + what);
}

std::ofstream open_out(const std::string &path, bool binary) {
    std::ofstream f(path, binary ? std::ios::binary : std::ios::out);
    if (!f) io_fail(path, "cannot open for writing");
    return f;
}

std::ifstream open_in(const std::string &path, bool binary) {
    std::ifstream f(path, binary ? std::ios::binary : std::ios::in);
    if (!f) io_fail(path, "cannot open for reading");
    return f;
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split(const std::string &line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

double parse_double(const std::string &s, const std::string &path) {
    try {
        size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == 0) io_fail(path, "bad number '" + s + "'");
        return v;
    } catch (const std::exception &) {
        io_fail(path, "bad number '" + s + "'");
    }
}

void write_u32(std::ofstream &f, std::uint32_t v) {
    f.write(reinterpret_cast<const char *>(&v), sizeof(v));
}
std::uint32_t read_u32(std::ifstream &f, const std::string &path) {
    std::uint32_t v = 0;
    if (!f.read(reinterpret_cast<char *>(&v), sizeof(v))) io_fail(path, "truncated");
    return v;
}
void write_f64(std::ofstream &f, const double *v, size_t count) {
    f.write(reinterpret_cast<const char *>(v),
            static_cast<std::streamsize>(count * sizeof(double)));
}
void read_f64(std::ifstream &f, double *v, size_t count, const std::string &path) {
    if (!f.read(reinterpret_cast<char *>(v),
                static_cast<std::streamsize>(count * sizeof(double))))
        io_fail(path, "truncated");
}

void input_to_row(const GripperInput &u, double *row) {
    Eigen::Map<Vec3>(row + 0) = u.left.position;
    Eigen::Map<Vec3>(row + 3) = u.left.axis_angle;
    Eigen::Map<Vec3>(row + 6) = u.right.position;
    Eigen::Map<Vec3>(row + 9) = u.right.axis_angle;
}
GripperInput row_to_input(const double *row) {
    GripperInput u;
    u.left.position = Eigen::Map<const Vec3>(row + 0);
    u.left.axis_angle = Eigen::Map<const Vec3>(row + 3);
    u.right.position = Eigen::Map<const Vec3>(row + 6);
    u.right.axis_angle = Eigen::Map<const Vec3>(row + 9);
    return u;
}

Trajectory states_from_rows(Eigen::Index n, const std::vector<std::vector<double>> &rows,
                            const std::string &path) {
    Trajectory traj;
    const size_t t_count = rows.size();
    if (t_count < 2) io_fail(path, "trajectory needs at least two rows");
    traj.dt = rows[1][0] - rows[0][0];
    if (!(traj.dt > 0.0)) io_fail(path, "non-increasing times");

    for (size_t t = 0; t < t_count; ++t) {
        RodState s;
        s.time = rows[t][0];
        if (t > 0 && std::abs(rows[t][0] - rows[t - 1][0] - traj.dt) > 1e-9)
            io_fail(path, "non-uniform time spacing");
        s.positions.resize(n, 3);
        for (Eigen::Index i = 0; i < n; ++i)
            for (int c = 0; c < 3; ++c)
                s.positions(i, c) = rows[t][1 + static_cast<size_t>(3 * i + c)];
        s.velocities = Mat3X::Zero(n, 3);
        if (t > 0)
            s.velocities =
                (s.positions - traj.states.back().positions) / traj.dt;
        traj.states.push_back(std::move(s));
        if (t + 1 < t_count)
            traj.inputs.push_back(row_to_input(rows[t].data() + 1 + 3 * n));
    }
    return traj;
}

} // namespace

void save_trajectory_csv(const Trajectory &traj, const std::string &path) {
    if (traj.states.empty()) io_fail(path, "empty trajectory");
    const Eigen::Index n = traj.states[0].n();
    std::ofstream f = open_out(path, false);

    f << "t";
    for (Eigen::Index i = 1; i <= n; ++i)
        f << ",x" << i << "x,x" << i << "y,x" << i << "z";
    for (const char *side : {"L", "R"})
        for (const char *part : {"p", "r"})
            for (const char *axis : {"x", "y", "z"})
                f << ",u" << side << part << axis;
    f << "\n";

    for (size_t t = 0; t < traj.states.size(); ++t) {
        const RodState &s = traj.states[t];
        f << fmt17(s.time);
        for (Eigen::Index i = 0; i < n; ++i)
            for (int c = 0; c < 3; ++c) f << ',' << fmt17(s.positions(i, c));
        double u[12] = {0};
        if (t < traj.inputs.size()) input_to_row(traj.inputs[t], u);
        for (double v : u) f << ',' << fmt17(v);
        f << "\n";
    }
    if (!f) io_fail(path, "write failed");
}

Trajectory load_trajectory_csv(const std::string &path) {
    std::ifstream f = open_in(path, false);
    std::string line;
    if (!std::getline(f, line)) io_fail(path, "missing header");
    const auto header = split(line, ',');
    if (header.size() < 13 || (header.size() - 13) % 3 != 0)
        io_fail(path, "unexpected column count");
    const Eigen::Index n = static_cast<Eigen::Index>((header.size() - 13) / 3);

    std::vector<std::vector<double>> rows;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != header.size()) io_fail(path, "ragged row");
        std::vector<double> row;
        row.reserve(cells.size());
        for (const std::string &c : cells) row.push_back(parse_double(c, path));
        rows.push_back(std::move(row));
    }
    return states_from_rows(n, rows, path);
}

void save_trajectory_binary(const Trajectory &traj, const std::string &path) {
    if (traj.states.empty()) io_fail(path, "empty trajectory");
    const Eigen::Index n = traj.states[0].n();
    std::ofstream f = open_out(path, true);
    f.write("DROD", 4);
    write_u32(f, static_cast<std::uint32_t>(n));
    write_u32(f, static_cast<std::uint32_t>(traj.states.size()));
    write_f64(f, &traj.dt, 1);

    std::vector<double> row(static_cast<size_t>(1 + 3 * n + 12));
    for (size_t t = 0; t < traj.states.size(); ++t) {
        const RodState &s = traj.states[t];
        row[0] = s.time;
        for (Eigen::Index i = 0; i < n; ++i)
            for (int c = 0; c < 3; ++c)
                row[1 + static_cast<size_t>(3 * i + c)] = s.positions(i, c);
        std::fill(row.end() - 12, row.end(), 0.0);
        if (t < traj.inputs.size())
            input_to_row(traj.inputs[t], row.data() + 1 + 3 * n);
        write_f64(f, row.data(), row.size());
    }
    if (!f) io_fail(path, "write failed");
}

Trajectory load_trajectory_binary(const std::string &path) {
    std::ifstream f = open_in(path, true);
    char magic[4];
    if (!f.read(magic, 4) || std::memcmp(magic, "DROD", 4) != 0)
        io_fail(path, "bad magic");
    const Eigen::Index n = read_u32(f, path);
    const std::uint32_t t_count = read_u32(f, path);
    double dt = 0;
    read_f64(f, &dt, 1, path);

    std::vector<std::vector<double>> rows(t_count);
    for (std::uint32_t t = 0; t < t_count; ++t) {
        rows[t].resize(static_cast<size_t>(1 + 3 * n + 12));
        read_f64(f, rows[t].data(), rows[t].size(), path);
    }
    Trajectory traj = states_from_rows(n, rows, path);
    traj.dt = dt;
    return traj;
}

void save_net(const ResidualNet &net, const std::string &path) {
    std::ofstream f = open_out(path, true);
    f.write("DNET", 4);
    write_u32(f, static_cast<std::uint32_t>(net.n));
    write_u32(f, ResidualNet::kFeat);
    write_u32(f, ResidualNet::kWidth);
    write_u32(f, ResidualNet::kHidden);
    write_u32(f, ResidualNet::kAlphaFeat);
    write_f64(f, net.feature_scale.data(), 6);
    write_f64(f, net.alpha_scale.data(), 3);
    VecX flat;
    net.to_vector(flat);
    const std::uint32_t count = static_cast<std::uint32_t>(flat.size());
    write_u32(f, count);
    write_f64(f, flat.data(), flat.size());
    if (!f) io_fail(path, "write failed");
}

ResidualNet load_net(const std::string &path) {
    std::ifstream f = open_in(path, true);
    char magic[4];
    if (!f.read(magic, 4) || std::memcmp(magic, "DNET", 4) != 0)
        io_fail(path, "bad magic");
    const Eigen::Index n = read_u32(f, path);
    if (read_u32(f, path) != ResidualNet::kFeat ||
        read_u32(f, path) != ResidualNet::kWidth ||
        read_u32(f, path) != ResidualNet::kHidden ||
        read_u32(f, path) != ResidualNet::kAlphaFeat)
        io_fail(path, "incompatible net dimensions");
    ResidualNet net = zero_residual_net(n);
    read_f64(f, net.feature_scale.data(), 6, path);
    read_f64(f, net.alpha_scale.data(), 3, path);
    const std::uint32_t count = read_u32(f, path);
    if (count != static_cast<std::uint32_t>(net.parameter_count()))
        io_fail(path, "parameter count mismatch");
    VecX flat(count);
    read_f64(f, flat.data(), count, path);
    net.from_vector(flat);
    return net;
}

void save_params(const MaterialParams &params, const std::string &path) {
    const Eigen::Index n = params.n();
    std::ofstream f = open_out(path, true);
    f.write("DPRM", 4);
    write_u32(f, static_cast<std::uint32_t>(n));
    for (const Vec3 &m : params.masses) write_f64(f, m.data(), 3);
    for (const Mat2 &b : params.bend_modulus) write_f64(f, b.data(), 4);
    write_f64(f, params.twist_modulus.data(), static_cast<size_t>(n - 2));
    for (Eigen::Index i = 0; i < n - 1; ++i) {
        const Vec3 e = params.rest_edges.row(i);
        write_f64(f, e.data(), 3);
    }
    for (const Vec2 &o : params.rest_curvatures) write_f64(f, o.data(), 2);
    write_f64(f, params.voronoi_lengths.data(), static_cast<size_t>(n - 2));
    write_f64(f, params.gravity.data(), 3);
    for (Eigen::Index i = 0; i < n - 1; ++i) {
        const Vec3 w = params.rest_bishop1.row(i);
        write_f64(f, w.data(), 3);
    }
    if (!f) io_fail(path, "write failed");
}

MaterialParams load_params(const std::string &path) {
    std::ifstream f = open_in(path, true);
    char magic[4];
    if (!f.read(magic, 4) || std::memcmp(magic, "DPRM", 4) != 0)
        io_fail(path, "bad magic");
    const Eigen::Index n = read_u32(f, path);
    if (n < 5) io_fail(path, "n < 5");

    MaterialParams p;
    p.masses.resize(static_cast<size_t>(n));
    for (Vec3 &m : p.masses) read_f64(f, m.data(), 3, path);
    p.bend_modulus.resize(static_cast<size_t>(n - 2));
    for (Mat2 &b : p.bend_modulus) read_f64(f, b.data(), 4, path);
    p.twist_modulus.resize(n - 2);
    read_f64(f, p.twist_modulus.data(), static_cast<size_t>(n - 2), path);
    p.rest_edges.resize(n - 1, 3);
    for (Eigen::Index i = 0; i < n - 1; ++i) {
        Vec3 e;
        read_f64(f, e.data(), 3, path);
        p.rest_edges.row(i) = e;
    }
    p.rest_curvatures.resize(static_cast<size_t>(n - 2));
    for (Vec2 &o : p.rest_curvatures) read_f64(f, o.data(), 2, path);
    p.voronoi_lengths.resize(n - 2);
    read_f64(f, p.voronoi_lengths.data(), static_cast<size_t>(n - 2), path);
    read_f64(f, p.gravity.data(), 3, path);
    p.rest_bishop1.resize(n - 1, 3);
    for (Eigen::Index i = 0; i < n - 1; ++i) {
        Vec3 w;
        read_f64(f, w.data(), 3, path);
        p.rest_bishop1.row(i) = w;
    }
    return p;
}

void save_cloud_csv(const PointCloud &cloud, const std::string &path) {
    std::ofstream f = open_out(path, false);
    const bool with_depth = cloud.depth.size() > 0;
    f << (with_depth ? "x,y,z,depth\n" : "x,y,z\n");
    for (Eigen::Index m = 0; m < cloud.size(); ++m) {
        f << fmt17(cloud.points(m, 0)) << ',' << fmt17(cloud.points(m, 1)) << ','
          << fmt17(cloud.points(m, 2));
        if (with_depth) f << ',' << fmt17(cloud.depth[m]);
        f << "\n";
    }
    if (!f) io_fail(path, "write failed");
}

PointCloud load_cloud_csv(const std::string &path, double frame_time) {
    std::ifstream f = open_in(path, false);
    std::string line;
    if (!std::getline(f, line)) io_fail(path, "missing header");
    const auto header = split(line, ',');
    const bool with_depth = header.size() == 4;
    if (header.size() != 3 && header.size() != 4)
        io_fail(path, "expected x,y,z[,depth] header");

    std::vector<std::array<double, 4>> rows;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != header.size()) io_fail(path, "ragged row");
        std::array<double, 4> r{0, 0, 0, 0};
        for (size_t c = 0; c < cells.size(); ++c) r[c] = parse_double(cells[c], path);
        rows.push_back(r);
    }

    PointCloud cloud;
    cloud.frame_time = frame_time;
    cloud.points.resize(static_cast<Eigen::Index>(rows.size()), 3);
    if (with_depth) cloud.depth.resize(static_cast<Eigen::Index>(rows.size()));
    for (size_t m = 0; m < rows.size(); ++m) {
        cloud.points.row(static_cast<Eigen::Index>(m)) =
            Vec3(rows[m][0], rows[m][1], rows[m][2]);
        if (with_depth) cloud.depth[static_cast<Eigen::Index>(m)] = rows[m][3];
    }
    return cloud;
}

void save_manifest(const CloudManifest &manifest, const std::string &path) {
    std::ofstream f = open_out(path, false);
    f << "t,path\n";
    for (size_t k = 0; k < manifest.paths.size(); ++k)
        f << fmt17(manifest.times[k]) << ',' << manifest.paths[k] << "\n";
    if (!f) io_fail(path, "write failed");
}

CloudManifest load_manifest(const std::string &path) {
    std::ifstream f = open_in(path, false);
    std::string line;
    if (!std::getline(f, line) || split(line, ',').size() != 2)
        io_fail(path, "expected t,path header");
    CloudManifest m;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != 2) io_fail(path, "ragged row");
        m.times.push_back(parse_double(cells[0], path));
        m.paths.push_back(cells[1]);
    }
    return m;
}

void save_camera(const Camera &camera, const std::string &path) {
    std::ofstream f = open_out(path, false);
    f << "fx=" << fmt17(camera.fx) << "\nfy=" << fmt17(camera.fy) << "\ncx="
      << fmt17(camera.cx) << "\ncy=" << fmt17(camera.cy) << "\npose=";
    for (int c = 0; c < 3; ++c) f << fmt17(camera.position[c]) << ' ';
    for (int c = 0; c < 3; ++c)
        f << fmt17(camera.axis_angle[c]) << (c == 2 ? "\n" : " ");
    if (!f) io_fail(path, "write failed");
}

Camera load_camera(const std::string &path) {
    const auto kv = parse_kv_file(path);
    Camera cam;
    for (const auto &[key, value] : kv) {
        if (key == "fx") cam.fx = parse_double(value, path);
        else if (key == "fy") cam.fy = parse_double(value, path);
        else if (key == "cx") cam.cx = parse_double(value, path);
        else if (key == "cy") cam.cy = parse_double(value, path);
        else if (key == "pose") {
            std::stringstream ss(value);
            double v[6];
            for (double &x : v)
                if (!(ss >> x)) io_fail(path, "pose needs 6 numbers");
            cam.position = Vec3(v[0], v[1], v[2]);
            cam.axis_angle = Vec3(v[3], v[4], v[5]);
        } else {
            io_fail(path, "unknown camera key '" + key + "'");
        }
    }
    return cam;
}

std::map<std::string, std::string> parse_kv_file(const std::string &path) {
    std::ifstream f = open_in(path, false);
    std::map<std::string, std::string> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        // Trim.
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            io_fail(path, "line " + std::to_string(lineno) + ": expected key=value");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        const auto ktrim = key.find_last_not_of(" \t");
        key = key.substr(0, ktrim + 1);
        const auto vtrim = value.find_first_not_of(" \t");
        value = vtrim == std::string::npos ? "" : value.substr(vtrim);
        if (out.count(key))
            io_fail(path, "duplicate key '" + key + "'");
        out[key] = value;
    }
    return out;
}

} // namespace drod
