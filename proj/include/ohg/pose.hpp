#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ohg/geometry.hpp"
#include "ohg/landmarks.hpp"

namespace ohg {

class PoseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kNumRigid = 8;

/// Names of the rigid points, in model order. "left"/"right" refer to the
/// image side of a frontal face.
const std::array<std::string, kNumRigid>& rigid_point_names();

/// 68-scheme (zero-based) index of each rigid point, in model order.
const std::array<std::size_t, kNumRigid>& rigid_point_indices();

/// Generic rigid face in millimeters, origin at the nose tip. Axes follow
/// the camera at a frontal pose: x toward image right, y down, z away from
/// the camera.
struct FaceModel3D {
  std::array<Eigen::Vector3d, kNumRigid> points;

  static FaceModel3D generic();
  /// CSV with header `name,x_mm,y_mm,z_mm` and the 8 rows in model order.
  static FaceModel3D load_csv(const std::filesystem::path& path);
  std::string to_csv() const;
  /// Throws PoseError if the points are (nearly) coplanar.
  void validate() const;
};

struct CameraIntrinsics {
  double focal = 0.0;  // pixels
  Point2 principal;

  /// Focal length = image width, principal point = image center.
  static CameraIntrinsics for_image(double width, double height);
};

struct RigidSelection {
  std::array<Point2, kNumRigid> points;
  std::array<bool, kNumRigid> valid{};
  std::size_t num_valid() const;
};

/// Picks the 8 rigid landmarks. Undetected landmarks are invalid; with
/// `exclude_occluded`, occluded ones too. Throws PoseError when fewer than 4
/// remain.
RigidSelection select_rigid(const LandmarkSet& lms, bool exclude_occluded = false);

struct PoseResult {
  Eigen::Matrix3d rotation;     // model -> camera
  Eigen::Vector3d translation;  // camera coordinates of the model origin, mm
  int iterations = 0;
};

struct PositParams {
  double tolerance = 1e-6;  // max |delta epsilon| for convergence
  int max_iterations = 100;
};

/// DeMenthon-Davis POSIT over the valid correspondences of `sel`.
/// Throws PoseError for coplanar/degenerate input, non-convergence, or an
/// object behind the camera.
PoseResult posit(const FaceModel3D& model, const RigidSelection& sel, const CameraIntrinsics& cam,
                 const PositParams& params = {});

/// Perspective projection of the model (all points valid).
RigidSelection project(const FaceModel3D& model, const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation,
                       const CameraIntrinsics& cam);

struct PoseAngles {
  double yaw = 0.0;    // degrees
  double pitch = 0.0;  // degrees
  double roll = 0.0;   // degrees
};

/// Decomposes R = Ry(yaw) * Rx(pitch) * Rz(roll) with right-handed axis
/// rotations. At |pitch| = 90 the roll is set to zero. Throws
/// InvalidArgument if R is not a rotation within 1e-6.
PoseAngles rotation_to_euler(const Eigen::Matrix3d& r);
Eigen::Matrix3d euler_to_rotation(const PoseAngles& a);

/// Re-expresses a camera-frame rotation (y down, z forward) in a y-up,
/// z-toward-viewer frame, where positive yaw turns the face to its own left
/// and positive pitch tilts it down.
Eigen::Matrix3d camera_to_head_frame(const Eigen::Matrix3d& r);

/// Head pose angles of a camera-frame POSIT rotation.
PoseAngles head_pose_angles(const Eigen::Matrix3d& camera_rotation);

/// Landmarks -> rigid selection -> POSIT -> head-frame Euler angles.
PoseAngles estimate_head_pose(const LandmarkSet& lms, const FaceModel3D& model, const CameraIntrinsics& cam,
                              bool exclude_occluded = false);

}  // namespace ohg
