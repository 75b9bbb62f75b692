#ifndef DROD_IO_HPP
#define DROD_IO_HPP

#include <map>
#include <string>
#include <vector>

#include "drod/residual_net.hpp"
#include "drod/tracking.hpp"
#include "drod/types.hpp"

// File formats:
//   Trajectory CSV   header t,x1x,...,xnz,uLpx,...,uRrz; one row per step,
//                    doubles printed with 17 significant digits. The last
//                    row's input columns are zero (T states, T-1 inputs).
//                    Loaded velocities follow V_t = (X_t - X_{t-1}) / dt with
//                    V_1 = 0.
//   Trajectory binary magic DROD, u32 n, u32 T, f64 dt, then T rows of
//                    (1 + 3n + 12) little-endian f64: time, positions, input.
//   Net checkpoint   magic DNET, u32 dims, scales, flat f64 parameters.
//   Params checkpoint magic DPRM, u32 n, f64 payload.
//   Cloud frame CSV  x,y,z[,depth] per point.
//   Manifest CSV     header t,path; one frame per row.
//   Camera config    plain-text key=value: fx, fy, cx, cy, pose (6 numbers).

namespace drod {

void save_trajectory_csv(const Trajectory &traj, const std::string &path);
Trajectory load_trajectory_csv(const std::string &path);

void save_trajectory_binary(const Trajectory &traj, const std::string &path);
Trajectory load_trajectory_binary(const std::string &path);

void save_net(const ResidualNet &net, const std::string &path);
ResidualNet load_net(const std::string &path);

void save_params(const MaterialParams &params, const std::string &path);
MaterialParams load_params(const std::string &path);

void save_cloud_csv(const PointCloud &cloud, const std::string &path);
PointCloud load_cloud_csv(const std::string &path, double frame_time);

struct CloudManifest {
    std::vector<double> times;
    std::vector<std::string> paths;
};
void save_manifest(const CloudManifest &manifest, const std::string &path);
CloudManifest load_manifest(const std::string &path);

void save_camera(const Camera &camera, const std::string &path);
Camera load_camera(const std::string &path);

// key=value lines; '#' starts a comment. Keys may not repeat.
std::map<std::string, std::string> parse_kv_file(const std::string &path);

} // namespace drod

#endif
