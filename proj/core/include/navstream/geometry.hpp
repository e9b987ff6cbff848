#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <unordered_map>
#include <vector>

#include "navstream/errors.hpp"

namespace navstream {

struct Vec3 {
  double x = 0, y = 0, z = 0;
};

/// Normalize an angle to [-pi, pi).
double normalize_angle(double a);

/// Agent/camera pose: planar position at fixed camera height, heading about
/// the vertical axis. yaw = 0 faces +x; positive yaw turns counterclockwise.
struct Pose {
  double x = 0, y = 0, z = 0;
  double yaw = 0;
};

/// Pinhole intrinsics at patch resolution. The depth grid is sampled on the
/// patch lattice (sample coordinate = patch index), so the patch at
/// (grid_h/2, grid_w/2) lies exactly on the optical axis. Vertical FOV equals
/// horizontal FOV.
struct Intrinsics {
  double hfov = 79.0 * M_PI / 180.0;
  int grid_h = 14;
  int grid_w = 14;
  double max_range = 10.0;

  double focal_x() const { return (grid_w / 2.0) / std::tan(hfov / 2.0); }
  double focal_y() const { return (grid_h / 2.0) / std::tan(hfov / 2.0); }
  double cx() const { return grid_w / 2.0; }
  double cy() const { return grid_h / 2.0; }
  int patches() const { return grid_h * grid_w; }
};

/// One observation: global frame index, the pose it was rendered from, and
/// the patch-depth grid (row-major H x W, meters, -1 where invalid).
struct Frame {
  int t = 0;
  Pose pose;
  int rows = 0, cols = 0;
  std::vector<double> depth;

  double at(int x, int y) const { return depth[static_cast<size_t>(x) * static_cast<size_t>(cols) + static_cast<size_t>(y)]; }
  double& at(int x, int y) { return depth[static_cast<size_t>(x) * static_cast<size_t>(cols) + static_cast<size_t>(y)]; }
};

/// Back-project the depth sample of patch (px, py) into world coordinates.
/// px is the row, py the column; depth is the forward (optical-axis) distance.
/// Throws InvalidDepth when depth <= 0 or beyond max_range.
Vec3 backproject_patch(int px, int py, double depth, const Intrinsics& intr, const Pose& pose);

/// First-seen dense id assignment for integer voxel coordinates.
class VoxelIdTable {
 public:
  int id_for(long long ix, long long iy, long long iz);
  int size() const { return static_cast<int>(ids_.size()); }

 private:
  std::unordered_map<std::uint64_t, int> ids_;
};

/// Voxel id of a world point: integer cell floor(coord / voxel_size) per axis,
/// mapped to a dense id by the table. Same cell, same id.
int voxelize(const Vec3& point, double voxel_size, VoxelIdTable& table);

/// Integer voxel-id tensor over frames: entry >= 0 for valid depth, -1
/// otherwise. The t axis is indexed by the frames' global t (slices with no
/// frame are all -1), so T = max frame t + 1.
struct VoxelMap {
  int T = 0, H = 0, W = 0;
  double voxel_size = 0.5;
  std::vector<int> v;

  int at(int t, int x, int y) const {
    return v[(static_cast<size_t>(t) * static_cast<size_t>(H) + static_cast<size_t>(x)) * static_cast<size_t>(W) +
             static_cast<size_t>(y)];
  }
  int& at(int t, int x, int y) {
    return v[(static_cast<size_t>(t) * static_cast<size_t>(H) + static_cast<size_t>(x)) * static_cast<size_t>(W) +
             static_cast<size_t>(y)];
  }
  int valid_count() const;

  /// Fixture dump: one "t,x,y,voxel_id" row per entry.
  void write_csv(std::ostream& out) const;
};

/// Build the voxel map for a set of frames (ordered by increasing t).
VoxelMap build_voxel_map(std::span<const Frame> frames, const Intrinsics& intr, double voxel_size);

}  // namespace navstream
