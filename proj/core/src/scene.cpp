#include "crossview/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "crossview/errors.hpp"
#include "crossview/rng.hpp"

namespace crossview {

namespace {

void check_3x3(const Matrix& m, const char* what) {
  if (m.rows() != 3 || m.cols() != 3) {
    throw ShapeMismatch(std::string(what) + ": expected 3x3");
  }
}

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  int object = -1;
};

// Slab test against the axis-aligned box [lo, hi].
bool ray_box(const Vector3& origin, const Vector3& dir, const Vector3& lo,
             const Vector3& hi, double* t_hit) {
  double t0 = 1e-9;
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(dir(a)) < 1e-15) {
      if (origin(a) < lo(a) || origin(a) > hi(a)) return false;
      continue;
    }
    double near = (lo(a) - origin(a)) / dir(a);
    double far = (hi(a) - origin(a)) / dir(a);
    if (near > far) std::swap(near, far);
    t0 = std::max(t0, near);
    t1 = std::min(t1, far);
    if (t0 > t1) return false;
  }
  *t_hit = t0;
  return true;
}

// Vertical rectangle rotated about z to face the camera horizontally.
bool ray_billboard(const Vector3& origin, const Vector3& dir,
                   const SceneObject& obj, const Vector3& cam, double* t_hit) {
  Vector3 to_cam(cam(0) - obj.position(0), cam(1) - obj.position(1), 0.0);
  const double horiz = to_cam.norm();
  if (horiz < 1e-9) return false;  // camera directly above
  const Vector3 n = to_cam / horiz;
  const double denom = dir.dot(n);
  if (std::abs(denom) < 1e-12) return false;
  const double t = (obj.position - origin).dot(n) / denom;
  if (t <= 1e-9) return false;
  const Vector3 p = origin + t * dir;
  const Vector3 u_axis(-n(1), n(0), 0.0);
  const double u = (p - obj.position).dot(u_axis);
  const double v = p(2) - obj.position(2);
  if (std::abs(u) > 0.5 * obj.size(0)) return false;
  if (v < 0.0 || v > obj.size(1)) return false;
  *t_hit = t;
  return true;
}

void box_bounds(const SceneObject& obj, Vector3* lo, Vector3* hi) {
  *lo = Vector3(obj.position(0) - 0.5 * obj.size(0),
                obj.position(1) - 0.5 * obj.size(1), obj.position(2));
  *hi = Vector3(obj.position(0) + 0.5 * obj.size(0),
                obj.position(1) + 0.5 * obj.size(1),
                obj.position(2) + obj.size(2));
}

}  // namespace

Vector3 CameraPose::center() const { return -(r.transpose() * t); }

void validate(const CameraPose& pose) {
  check_3x3(pose.k, "camera intrinsics");
  check_3x3(pose.r, "camera rotation");
  if (pose.t.size() != 3) {
    throw ShapeMismatch("camera translation: expected length 3");
  }
  const Matrix gram = pose.r.transpose() * pose.r;
  if ((gram - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() > 1e-9) {
    throw NonRigidTransform("camera rotation not orthonormal");
  }
  if (std::abs(pose.r.determinant() - 1.0) > 1e-9) {
    throw NonRigidTransform("camera rotation has determinant != 1");
  }
  if (std::abs(pose.k(1, 0)) > 1e-9 || std::abs(pose.k(2, 0)) > 1e-9 ||
      std::abs(pose.k(2, 1)) > 1e-9) {
    throw NonRigidTransform("intrinsics not upper-triangular");
  }
  if (pose.k(0, 0) <= 0.0 || pose.k(1, 1) <= 0.0 || pose.k(2, 2) <= 0.0) {
    throw NonRigidTransform("intrinsics diagonal not positive");
  }
}

CameraPose make_look_pose(const Vector3& eye, double yaw, double pitch_down,
                          double focal_px, int width, int height) {
  const Vector3 up(0, 0, 1);
  const Vector3 horiz(std::cos(yaw), std::sin(yaw), 0.0);
  const Vector3 forward =
      std::cos(pitch_down) * horiz - std::sin(pitch_down) * up;
  Vector3 right = forward.cross(up);
  if (right.norm() < 1e-12) {
    throw DomainError("make_look_pose: view direction parallel to +z");
  }
  right.normalize();
  const Vector3 down = forward.cross(right);

  CameraPose pose;
  pose.r = Matrix(3, 3);
  pose.r.row(0) = right.transpose();
  pose.r.row(1) = down.transpose();
  pose.r.row(2) = forward.transpose();
  pose.t = -(pose.r * eye);
  pose.k = Matrix::Identity(3, 3);
  pose.k(0, 0) = focal_px;
  pose.k(1, 1) = focal_px;
  pose.k(0, 2) = width / 2.0;
  pose.k(1, 2) = height / 2.0;
  validate(pose);
  return pose;
}

ViewTransform ViewTransform::inverse() const {
  ViewTransform inv;
  inv.t_k = t_k.inverse();
  inv.t_rt = t_rt.inverse();
  return inv;
}

ViewTransform view_transform_between(const CameraPose& source,
                                     const CameraPose& target) {
  validate(source);
  validate(target);
  auto homogeneous = [](const CameraPose& p) {
    Matrix e = Matrix::Identity(4, 4);
    e.block<3, 3>(0, 0) = p.r;
    e.block<3, 1>(0, 3) = p.t;
    return e;
  };
  ViewTransform vt;
  vt.t_k = target.k * source.k.inverse();
  // Zero out round-off below the diagonal so T_K stays upper-triangular.
  vt.t_k(1, 0) = 0.0;
  vt.t_k(2, 0) = 0.0;
  vt.t_k(2, 1) = 0.0;
  vt.t_rt = homogeneous(target) * homogeneous(source).inverse();
  return vt;
}

CameraPose apply_view_transform(const CameraPose& source,
                                const ViewTransform& vt) {
  validate(source);
  CameraPose out;
  out.k = vt.t_k * source.k;
  for (int r = 1; r < 3; ++r) {
    for (int c = 0; c < r; ++c) {
      if (std::abs(out.k(r, c)) > 1e-9) {
        throw NonRigidTransform("transformed intrinsics not upper-triangular");
      }
      out.k(r, c) = 0.0;
    }
  }
  Matrix e = Matrix::Identity(4, 4);
  e.block<3, 3>(0, 0) = source.r;
  e.block<3, 1>(0, 3) = source.t;
  const Matrix et = vt.t_rt * e;
  if ((et.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() >
      1e-9) {
    throw NonRigidTransform("T_Rt does not preserve the homogeneous row");
  }
  out.r = et.block<3, 3>(0, 0);
  out.t = et.block<3, 1>(0, 3);
  validate(out);  // throws NonRigidTransform on violation
  return out;
}

void validate(const SceneConfig& scene) {
  if (scene.classes.empty() || scene.classes.size() != scene.palette.size()) {
    throw DataError("scene: classes/palette mismatch");
  }
  if (scene.objects.empty()) {
    throw DataError("scene: no objects");
  }
  if (scene.width <= 0 || scene.height <= 0 || scene.extent <= 0.0) {
    throw DataError("scene: bad resolution or extent");
  }
  std::vector<bool> covered(scene.classes.size(), false);
  const double half = 0.5 * scene.extent + 1e-9;
  for (const auto& obj : scene.objects) {
    if (obj.class_id < 0 ||
        obj.class_id >= static_cast<int>(scene.classes.size())) {
      throw DataError("scene: object class out of range");
    }
    if (std::abs(obj.position(0)) > half || std::abs(obj.position(1)) > half) {
      throw DataError("scene: object outside extent");
    }
    covered[static_cast<std::size_t>(obj.class_id)] = true;
  }
  for (std::size_t c = 0; c < covered.size(); ++c) {
    if (!covered[c]) {
      throw DataError("scene: declared class has no object: " +
                      scene.classes[c]);
    }
  }
}

RenderResult render(const SceneConfig& scene, const CameraPose& pose) {
  validate(scene);
  validate(pose);

  const Vector3 cam = pose.center();
  for (const auto& obj : scene.objects) {
    if (obj.shape != ShapeKind::kBox) continue;
    Vector3 lo, hi;
    box_bounds(obj, &lo, &hi);
    if (cam(0) > lo(0) && cam(0) < hi(0) && cam(1) > lo(1) && cam(1) < hi(1) &&
        cam(2) > lo(2) && cam(2) < hi(2)) {
      throw CameraInsideGeometry("camera center inside a scene box");
    }
  }

  const Matrix k_inv = pose.k.inverse();
  const Matrix r_t = pose.r.transpose();

  RenderResult out;
  out.image.width = scene.width;
  out.image.height = scene.height;
  out.image.data.resize(static_cast<std::size_t>(scene.width) * scene.height * 3);
  out.mask.width = scene.width;
  out.mask.height = scene.height;
  out.mask.data.resize(static_cast<std::size_t>(scene.width) * scene.height);

  for (int y = 0; y < scene.height; ++y) {
    for (int x = 0; x < scene.width; ++x) {
      const Vector3 pix(x + 0.5, y + 0.5, 1.0);
      Vector3 dir = r_t * (k_inv * pix);
      dir.normalize();

      Hit hit;
      for (std::size_t i = 0; i < scene.objects.size(); ++i) {
        const SceneObject& obj = scene.objects[i];
        double t;
        bool ok = false;
        if (obj.shape == ShapeKind::kBox) {
          Vector3 lo, hi;
          box_bounds(obj, &lo, &hi);
          ok = ray_box(cam, dir, lo, hi, &t);
        } else {
          ok = ray_billboard(cam, dir, obj, cam, &t);
        }
        if (ok && t < hit.t) {
          hit.t = t;
          hit.object = static_cast<int>(i);
        }
      }
      // Misses take the ground slab (objects[0]): the plane extends to the
      // horizon as far as labels are concerned.
      const SceneObject& surf =
          scene.objects[static_cast<std::size_t>(hit.object < 0 ? 0 : hit.object)];
      out.mask.at(x, y) = static_cast<std::uint8_t>(surf.class_id);
      for (int c = 0; c < 3; ++c) {
        out.image.at(x, y, c) = surf.color(c);
      }
    }
  }

  if (scene.noise_sigma > 0.0) {
    Rng rng(Rng::derive(scene.seed, 0x6e6f6973));  // per-scene noise stream
    for (double& v : out.image.data) {
      v = std::clamp(v + rng.normal(0.0, scene.noise_sigma), 0.0, 1.0);
    }
  }
  return out;
}

}  // namespace crossview
