#include "navstream/geometry.hpp"

#include <cmath>
#include <ostream>

namespace navstream {

double normalize_angle(double a) {
  double two_pi = 2.0 * M_PI;
  double r = a - two_pi * std::floor((a + M_PI) / two_pi);
  // guard against r == pi from rounding
  if (r >= M_PI) r -= two_pi;
  return r;
}

Vec3 backproject_patch(int px, int py, double depth, const Intrinsics& intr, const Pose& pose) {
  if (!(depth > 0.0) || depth > intr.max_range) {
    throw InvalidDepth("depth out of range: " + std::to_string(depth));
  }
  // Camera frame: x right, y down, z forward; depth is the forward distance.
  double xr = (static_cast<double>(py) - intr.cx()) / intr.focal_x() * depth;
  double yd = (static_cast<double>(px) - intr.cy()) / intr.focal_y() * depth;
  double zf = depth;

  double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
  // World basis: forward = (c, s, 0), right = (s, -c, 0), down = (0, 0, -1).
  Vec3 p;
  p.x = pose.x + zf * c + xr * s;
  p.y = pose.y + zf * s - xr * c;
  p.z = pose.z - yd;
  return p;
}

int VoxelIdTable::id_for(long long ix, long long iy, long long iz) {
  constexpr long long kOffset = 1LL << 20;  // world cells stay far below this
  std::uint64_t key = (static_cast<std::uint64_t>(ix + kOffset) << 42) |
                      (static_cast<std::uint64_t>(iy + kOffset) << 21) |
                      static_cast<std::uint64_t>(iz + kOffset);
  auto [it, inserted] = ids_.try_emplace(key, static_cast<int>(ids_.size()));
  return it->second;
}

int voxelize(const Vec3& point, double voxel_size, VoxelIdTable& table) {
  long long ix = static_cast<long long>(std::floor(point.x / voxel_size));
  long long iy = static_cast<long long>(std::floor(point.y / voxel_size));
  long long iz = static_cast<long long>(std::floor(point.z / voxel_size));
  return table.id_for(ix, iy, iz);
}

int VoxelMap::valid_count() const {
  int n = 0;
  for (int e : v) n += (e >= 0);
  return n;
}

void VoxelMap::write_csv(std::ostream& out) const {
  out << "t,x,y,voxel_id\n";
  for (int t = 0; t < T; ++t)
    for (int x = 0; x < H; ++x)
      for (int y = 0; y < W; ++y) out << t << ',' << x << ',' << y << ',' << at(t, x, y) << '\n';
}

VoxelMap build_voxel_map(std::span<const Frame> frames, const Intrinsics& intr, double voxel_size) {
  VoxelMap map;
  map.H = intr.grid_h;
  map.W = intr.grid_w;
  map.voxel_size = voxel_size;
  map.T = frames.empty() ? 0 : frames.back().t + 1;
  map.v.assign(static_cast<size_t>(map.T) * static_cast<size_t>(map.H) * static_cast<size_t>(map.W), -1);

  VoxelIdTable table;
  for (const Frame& f : frames) {
    for (int x = 0; x < map.H; ++x) {
      for (int y = 0; y < map.W; ++y) {
        double d = f.at(x, y);
        if (!(d > 0.0) || d > intr.max_range) continue;
        map.at(f.t, x, y) = voxelize(backproject_patch(x, y, d, intr, f.pose), voxel_size, table);
      }
    }
  }
  return map;
}

}  // namespace navstream
