#include "ohg/pose.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

namespace ohg {

namespace {

constexpr double kDeg = 180.0 / std::numbers::pi;

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  const auto e = s.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

}  // namespace

const std::array<std::string, kNumRigid>& rigid_point_names() {
  static const std::array<std::string, kNumRigid> names{
      "left_eye_outer", "left_eye_inner", "right_eye_inner", "right_eye_outer",
      "nose_tip",       "nose_left",      "nose_right",      "chin",
  };
  return names;
}

const std::array<std::size_t, kNumRigid>& rigid_point_indices() {
  static const std::array<std::size_t, kNumRigid> idx{
      lm::kEyeLeftOuter, lm::kEyeLeftInner, lm::kEyeRightInner, lm::kEyeRightOuter,
      lm::kNoseTip,      lm::kNoseLeft,     lm::kNoseRight,     lm::kChin,
  };
  return idx;
}

FaceModel3D FaceModel3D::generic() {
  FaceModel3D m;
  m.points = {
      Eigen::Vector3d(-45.0, -37.0, 38.0),  // left eye outer
      Eigen::Vector3d(-15.0, -35.0, 22.0),  // left eye inner
      Eigen::Vector3d(15.0, -35.0, 22.0),   // right eye inner
      Eigen::Vector3d(45.0, -37.0, 38.0),   // right eye outer
      Eigen::Vector3d(0.0, 0.0, 0.0),       // nose tip
      Eigen::Vector3d(-17.0, 8.0, 14.0),    // nose left
      Eigen::Vector3d(17.0, 8.0, 14.0),     // nose right
      Eigen::Vector3d(0.0, 70.0, 20.0),     // chin
  };
  return m;
}

FaceModel3D FaceModel3D::load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PoseError("cannot open face model file " + path.string());
  std::string line;
  std::getline(in, line);
  if (trim(line) != "name,x_mm,y_mm,z_mm") {
    throw PoseError(path.string() + ":1: expected header name,x_mm,y_mm,z_mm");
  }
  FaceModel3D m;
  std::size_t row = 0;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    if (row >= kNumRigid) throw PoseError(path.string() + ":" + std::to_string(lineno) + ": more than 8 rows");
    std::stringstream ss(line);
    std::string name, xs, ys, zs;
    std::getline(ss, name, ',');
    std::getline(ss, xs, ',');
    std::getline(ss, ys, ',');
    std::getline(ss, zs, ',');
    if (trim(name) != rigid_point_names()[row]) {
      throw PoseError(path.string() + ":" + std::to_string(lineno) + ": expected point " + rigid_point_names()[row]);
    }
    try {
      m.points[row] = Eigen::Vector3d(std::stod(xs), std::stod(ys), std::stod(zs));
    } catch (const std::exception&) {
      throw PoseError(path.string() + ":" + std::to_string(lineno) + ": malformed coordinates");
    }
    ++row;
  }
  if (row != kNumRigid) throw PoseError(path.string() + ": expected 8 model points, got " + std::to_string(row));
  m.validate();
  return m;
}

std::string FaceModel3D::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "name,x_mm,y_mm,z_mm\n";
  for (std::size_t i = 0; i < kNumRigid; ++i) {
    os << rigid_point_names()[i] << ',' << points[i].x() << ',' << points[i].y() << ',' << points[i].z() << '\n';
  }
  return os.str();
}

void FaceModel3D::validate() const {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& p : points) mean += p;
  mean /= double(kNumRigid);
  Eigen::Matrix<double, kNumRigid, 3> centered;
  for (std::size_t i = 0; i < kNumRigid; ++i) centered.row(Eigen::Index(i)) = (points[i] - mean).transpose();
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
  const auto sv = svd.singularValues();
  if (!(sv(2) > 1e-6 * sv(0))) throw PoseError("face model points are coplanar");
}

CameraIntrinsics CameraIntrinsics::for_image(double width, double height) {
  if (!(width > 0.0) || !(height > 0.0)) throw InvalidArgument("image size must be positive");
  return {width, {0.5 * width, 0.5 * height}};
}

std::size_t RigidSelection::num_valid() const {
  std::size_t n = 0;
  for (bool v : valid) n += v ? 1 : 0;
  return n;
}

RigidSelection select_rigid(const LandmarkSet& lms, bool exclude_occluded) {
  lms.validate();
  RigidSelection sel;
  for (std::size_t k = 0; k < kNumRigid; ++k) {
    const std::size_t i = rigid_point_indices()[k];
    sel.points[k] = lms.points[i];
    sel.valid[k] = lms.detected[i] && !(exclude_occluded && lms.occ_flag[i]);
  }
  if (sel.num_valid() < 4) throw PoseError("pose unavailable: fewer than 4 rigid landmarks");
  return sel;
}

PoseResult posit(const FaceModel3D& model, const RigidSelection& sel, const CameraIntrinsics& cam,
                 const PositParams& params) {
  if (!(cam.focal > 0.0)) throw InvalidArgument("posit: focal length must be positive");
  std::vector<std::size_t> used;
  for (std::size_t k = 0; k < kNumRigid; ++k) {
    if (sel.valid[k]) used.push_back(k);
  }
  if (used.size() < 4) throw PoseError("posit: at least 4 correspondences required");

  // Reference point: the nose tip (model origin) when available.
  std::size_t ref = used.front();
  for (std::size_t k : used) {
    if (k == 4) ref = k;
  }
  const Eigen::Vector3d m0 = model.points[ref];
  const Point2 p0{sel.points[ref].x - cam.principal.x, sel.points[ref].y - cam.principal.y};

  std::vector<std::size_t> others;
  for (std::size_t k : used) {
    if (k != ref) others.push_back(k);
  }
  const Eigen::Index n = Eigen::Index(others.size());
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd xi(n), yi(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const std::size_t k = others[std::size_t(r)];
    a.row(r) = (model.points[k] - m0).transpose();
    xi(r) = sel.points[k].x - cam.principal.x;
    yi(r) = sel.points[k].y - cam.principal.y;
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto sv = svd.singularValues();
  if (!(sv(2) > 1e-6 * sv(0))) throw PoseError("posit: model points are coplanar or degenerate");
  const Eigen::MatrixXd b =
      svd.matrixV() * sv.cwiseInverse().asDiagonal() * svd.matrixU().transpose();  // object pseudo-inverse

  Eigen::VectorXd eps = Eigen::VectorXd::Zero(n);
  Eigen::Vector3d i_row, j_row, k_row;
  double z0 = 0.0;
  int iter = 0;
  bool converged = false;
  while (iter < params.max_iterations) {
    ++iter;
    const Eigen::VectorXd xs = xi.cwiseProduct(Eigen::VectorXd::Ones(n) + eps).array() - p0.x;
    const Eigen::VectorXd ys = yi.cwiseProduct(Eigen::VectorXd::Ones(n) + eps).array() - p0.y;
    const Eigen::Vector3d iv = b * xs;
    const Eigen::Vector3d jv = b * ys;
    const double s1 = iv.norm(), s2 = jv.norm();
    if (!(s1 > 0.0) || !(s2 > 0.0)) throw PoseError("posit: degenerate image points");
    i_row = iv / s1;
    j_row = jv / s2;
    k_row = i_row.cross(j_row);
    const double kn = k_row.norm();
    if (!(kn > 1e-12)) throw PoseError("posit: degenerate image points");
    k_row /= kn;
    const double scale = 0.5 * (s1 + s2);
    z0 = cam.focal / scale;
    const Eigen::VectorXd next = (a * k_row) / z0;
    const double delta = (next - eps).cwiseAbs().maxCoeff();
    eps = next;
    if (delta < params.tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) throw PoseError("posit: did not converge");
  if (!(z0 > 0.0)) throw PoseError("posit: object behind the camera");

  Eigen::Matrix3d r0;
  r0.row(0) = i_row.transpose();
  r0.row(1) = j_row.transpose();
  r0.row(2) = k_row.transpose();
  const Eigen::JacobiSVD<Eigen::Matrix3d> rs(r0, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d rot = rs.matrixU() * rs.matrixV().transpose();
  if (rot.determinant() < 0.0) {
    Eigen::Matrix3d u = rs.matrixU();
    u.col(2) *= -1.0;
    rot = u * rs.matrixV().transpose();
  }
  const Eigen::Vector3d t_ref(p0.x * z0 / cam.focal, p0.y * z0 / cam.focal, z0);
  PoseResult out{rot, t_ref - rot * m0, iter};
  if (!(out.translation.z() > 0.0)) throw PoseError("posit: object behind the camera");
  return out;
}

RigidSelection project(const FaceModel3D& model, const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation,
                       const CameraIntrinsics& cam) {
  RigidSelection sel;
  for (std::size_t k = 0; k < kNumRigid; ++k) {
    const Eigen::Vector3d c = rotation * model.points[k] + translation;
    if (!(c.z() > 0.0)) throw PoseError("project: point behind the camera");
    sel.points[k] = {cam.principal.x + cam.focal * c.x() / c.z(), cam.principal.y + cam.focal * c.y() / c.z()};
    sel.valid[k] = true;
  }
  return sel;
}

PoseAngles rotation_to_euler(const Eigen::Matrix3d& r) {
  const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (!(ortho < 1e-6) || !(std::abs(r.determinant() - 1.0) < 1e-6)) {
    throw InvalidArgument("rotation_to_euler: matrix is not a rotation");
  }
  const double sp = std::clamp(-r(1, 2), -1.0, 1.0);
  const double pitch = std::asin(sp);
  double yaw, roll;
  if (std::sqrt(r(1, 0) * r(1, 0) + r(1, 1) * r(1, 1)) < 1e-12) {
    roll = 0.0;
    yaw = std::atan2(-r(2, 0), r(0, 0));
  } else {
    yaw = std::atan2(r(0, 2), r(2, 2));
    roll = std::atan2(r(1, 0), r(1, 1));
  }
  return {yaw * kDeg, pitch * kDeg, roll * kDeg};
}

Eigen::Matrix3d euler_to_rotation(const PoseAngles& a) {
  const double y = a.yaw / kDeg, p = a.pitch / kDeg, r = a.roll / kDeg;
  Eigen::Matrix3d ry, rx, rz;
  ry << std::cos(y), 0, std::sin(y), 0, 1, 0, -std::sin(y), 0, std::cos(y);
  rx << 1, 0, 0, 0, std::cos(p), -std::sin(p), 0, std::sin(p), std::cos(p);
  rz << std::cos(r), -std::sin(r), 0, std::sin(r), std::cos(r), 0, 0, 0, 1;
  return ry * rx * rz;
}

Eigen::Matrix3d camera_to_head_frame(const Eigen::Matrix3d& r) {
  const Eigen::Matrix3d flip = Eigen::Vector3d(1.0, -1.0, -1.0).asDiagonal();
  return flip * r * flip;
}

PoseAngles head_pose_angles(const Eigen::Matrix3d& camera_rotation) {
  return rotation_to_euler(camera_to_head_frame(camera_rotation));
}

PoseAngles estimate_head_pose(const LandmarkSet& lms, const FaceModel3D& model, const CameraIntrinsics& cam,
                              bool exclude_occluded) {
  const RigidSelection sel = select_rigid(lms, exclude_occluded);
  return head_pose_angles(posit(model, sel, cam).rotation);
}

}  // namespace ohg
