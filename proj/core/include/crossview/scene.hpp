#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "crossview/image.hpp"
#include "crossview/matrix.hpp"

namespace crossview {

using Vector3 = Eigen::Vector3d;

/// Pinhole camera: x_cam = R * x_world + t, pixel = K * x_cam (then divide).
/// World frame is z-up.
struct CameraPose {
  Matrix k;  // 3x3 intrinsics, upper-triangular, positive diagonal
  Matrix r;  // 3x3 world-to-camera rotation
  Vector t;  // 3

  Vector3 center() const;  // camera position in world coordinates
};

/// Throws unless R is orthonormal with determinant 1 (within 1e-9) and K is
/// upper-triangular with positive diagonal.
void validate(const CameraPose& pose);

/// Camera at `eye` looking along `yaw` (radians around +z, from +x) tilted
/// `pitch_down` radians below horizontal. Camera axes: x right, y down,
/// z forward.
CameraPose make_look_pose(const Vector3& eye, double yaw, double pitch_down,
                          double focal_px, int width, int height);

/// Linear transforms carrying one view's camera parameters to the other:
/// K_t = T_K K_s and [R_t t_t; 0 1] = T_Rt [R_s t_s; 0 1].
struct ViewTransform {
  Matrix t_k;   // 3x3
  Matrix t_rt;  // 4x4 rigid

  ViewTransform inverse() const;
};

ViewTransform view_transform_between(const CameraPose& source,
                                     const CameraPose& target);

/// Applies (T_K, T_Rt) to a pose. Throws NonRigidTransform when the result
/// violates the rotation or intrinsics invariants.
CameraPose apply_view_transform(const CameraPose& source,
                                const ViewTransform& vt);

enum class ShapeKind { kBox, kBillboard };

struct SceneObject {
  ShapeKind shape = ShapeKind::kBox;
  int class_id = 0;
  Vector3 position{0, 0, 0};  // footprint center; boxes sit on position.z
  Vector3 size{1, 1, 1};      // box: full extents; billboard: (width, height, -)
  Vector3 color{0.5, 0.5, 0.5};
};

/// A concrete scene: the ground slab is objects[0] and supplies the class
/// and color of rays that miss all geometry.
struct SceneConfig {
  double extent = 40.0;  // ground square side length, centered on origin
  std::vector<SceneObject> objects;
  std::vector<std::string> classes;  // canonical order; ids index this list
  std::vector<Vector3> palette;      // base color per class
  std::uint64_t seed = 0;
  int width = 64;
  int height = 64;
  double noise_sigma = 0.0;  // optional per-pixel Gaussian color noise
};

/// Checks objects lie within the extent and every declared class has at
/// least one object.
void validate(const SceneConfig& scene);

struct RenderResult {
  Image image;
  Mask mask;
};

/// Deterministic nearest-surface rendering under pinhole projection: each
/// pixel takes the class and flat color of the closest primitive along its
/// ray. Rays that miss everything take the ground slab's class and color.
/// Throws CameraInsideGeometry when the camera center sits inside a box.
RenderResult render(const SceneConfig& scene, const CameraPose& pose);

}  // namespace crossview
